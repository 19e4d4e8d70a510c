//! Messages, interned message identifiers and interface identities.
//!
//! A [`Message`] is the quadruple `(src:dest:cmd:kind)`. Traces never store
//! messages directly; they store [`MsgId`]s handed out by an [`Alphabet`], so
//! that a trace of millions of events stays a flat `Vec<u32>`.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Kind {
    Request,
    Response,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Request => "req",
            Kind::Response => "resp",
        }
    }
}

impl FromStr for Kind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "req" => Ok(Kind::Request),
            "resp" => Ok(Kind::Response),
            other => Err(Error::InvalidMessage(format!(
                "kind must be `req` or `resp`, got `{other}`"
            ))),
        }
    }
}

/// A typed communication event between two components.
///
/// Field-wise equality defines a unique message. Names are opaque and
/// case-sensitive. Ordering is lexicographic over `(src, dest, cmd, kind)` and
/// is the ordering used for every deterministic tie-break in the crate.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Message {
    pub src: String,
    pub dest: String,
    pub cmd: String,
    pub kind: Kind,
}

impl Message {
    pub fn new(
        src: impl Into<String>,
        dest: impl Into<String>,
        cmd: impl Into<String>,
        kind: Kind,
    ) -> Result<Self> {
        let msg = Message {
            src: src.into(),
            dest: dest.into(),
            cmd: cmd.into(),
            kind,
        };
        for (name, value) in [("src", &msg.src), ("dest", &msg.dest), ("cmd", &msg.cmd)] {
            if value.is_empty() {
                return Err(Error::InvalidMessage(format!("empty {name} field")));
            }
            if value.contains(|c: char| c == ':' || c == '(' || c == ')' || c.is_whitespace()) {
                return Err(Error::InvalidMessage(format!(
                    "{name} field `{value}` contains a reserved character"
                )));
            }
        }
        Ok(msg)
    }

    pub fn req(src: &str, dest: &str, cmd: &str) -> Self {
        Message::new(src, dest, cmd, Kind::Request).expect("valid request literal")
    }

    pub fn resp(src: &str, dest: &str, cmd: &str) -> Self {
        Message::new(src, dest, cmd, Kind::Response).expect("valid response literal")
    }

    /// Structural causality: `next` may be caused by `self` when `self` is
    /// delivered to the component that emits `next`.
    pub fn is_causal_to(&self, next: &Message) -> bool {
        self.dest == next.src
    }

    pub fn interface(&self) -> InterfaceId {
        InterfaceId::new(&self.src, &self.dest)
    }
}

/// Renders as `(src:dest:cmd:kind)`.
impl fmt::Display for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}:{}:{}:{})",
            self.src,
            self.dest,
            self.cmd,
            self.kind.as_str()
        )
    }
}

/// Accepts `src:dest:cmd:kind` with or without surrounding parentheses.
impl FromStr for Message {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let inner = match (s.strip_prefix('('), s.ends_with(')')) {
            (Some(rest), true) => &rest[..rest.len() - 1],
            (None, false) => s,
            _ => {
                return Err(Error::InvalidMessage(format!(
                    "unbalanced parentheses in `{s}`"
                )))
            }
        };
        let fields: Vec<&str> = inner.split(':').collect();
        if fields.len() != 4 {
            return Err(Error::InvalidMessage(format!(
                "expected 4 `:`-separated fields in `{s}`, found {}",
                fields.len()
            )));
        }
        let kind = fields[3].trim().parse()?;
        Message::new(fields[0].trim(), fields[1].trim(), fields[2].trim(), kind)
    }
}

impl Serialize for Message {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Message {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Unordered pair of component names. A request and its response share one.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct InterfaceId {
    lo: String,
    hi: String,
}

impl InterfaceId {
    pub fn new(a: &str, b: &str) -> Self {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        InterfaceId {
            lo: lo.to_owned(),
            hi: hi.to_owned(),
        }
    }

    pub fn endpoints(&self) -> (&str, &str) {
        (&self.lo, &self.hi)
    }

    pub fn contains(&self, msg: &Message) -> bool {
        *self == msg.interface()
    }
}

impl fmt::Display for InterfaceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{},{}}}", self.lo, self.hi)
    }
}

pub fn interface_of(msg: &Message) -> InterfaceId {
    msg.interface()
}

/// Dense identifier of a unique message inside one [`Alphabet`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MsgId(pub u32);

impl MsgId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Ordered pair of message ids, `(source, destination)` of a causal relation.
pub type Pair = (MsgId, MsgId);

/// Append-only interner of unique messages.
#[derive(Clone, Debug, Default)]
pub struct Alphabet {
    messages: Vec<Message>,
    index: HashMap<Message, MsgId>,
}

impl Alphabet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, msg: Message) -> MsgId {
        if let Some(&id) = self.index.get(&msg) {
            return id;
        }
        let id = MsgId(self.messages.len() as u32);
        self.index.insert(msg.clone(), id);
        self.messages.push(msg);
        id
    }

    pub fn id(&self, msg: &Message) -> Option<MsgId> {
        self.index.get(msg).copied()
    }

    pub fn get(&self, id: MsgId) -> &Message {
        &self.messages[id.index()]
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = MsgId> + '_ {
        (0..self.messages.len() as u32).map(MsgId)
    }

    /// Message ordering lifted to ids.
    pub fn cmp(&self, a: MsgId, b: MsgId) -> Ordering {
        self.get(a).cmp(self.get(b))
    }

    pub fn cmp_seq(&self, a: &[MsgId], b: &[MsgId]) -> Ordering {
        for (x, y) in a.iter().zip(b) {
            match self.cmp(*x, *y) {
                Ordering::Equal => continue,
                other => return other,
            }
        }
        a.len().cmp(&b.len())
    }

    pub fn causal(&self, a: MsgId, b: MsgId) -> bool {
        self.get(a).is_causal_to(self.get(b))
    }

    pub fn same_interface(&self, a: MsgId, b: MsgId) -> bool {
        let (x, y) = (self.get(a), self.get(b));
        (x.src == y.src && x.dest == y.dest) || (x.src == y.dest && x.dest == y.src)
    }

    /// Ids sorted by message ordering.
    pub fn sorted(&self, ids: impl IntoIterator<Item = MsgId>) -> Vec<MsgId> {
        let mut v: Vec<MsgId> = ids.into_iter().collect();
        v.sort_by(|a, b| self.cmp(*a, *b));
        v.dedup();
        v
    }

    pub fn render_seq(&self, ids: &[MsgId]) -> Vec<String> {
        ids.iter().map(|&id| self.get(id).to_string()).collect()
    }
}
