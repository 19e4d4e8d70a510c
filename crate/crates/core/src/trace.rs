//! Traces, the line-oriented trace format, interface slicing and role sets.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::message::{Alphabet, InterfaceId, Message, MsgId};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TraceEvent {
    pub msg: MsgId,
    pub pos: usize,
}

/// An ordered sequence of message occurrences. Position `i` is the index into
/// `symbols`, so positions are contiguous from zero by construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub id: String,
    symbols: Vec<MsgId>,
}

impl Trace {
    pub fn new(id: impl Into<String>, symbols: Vec<MsgId>) -> Self {
        Trace {
            id: id.into(),
            symbols,
        }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[MsgId] {
        &self.symbols
    }

    pub fn msg_at(&self, pos: usize) -> MsgId {
        self.symbols[pos]
    }

    pub fn events(&self) -> impl Iterator<Item = TraceEvent> + '_ {
        self.symbols
            .iter()
            .enumerate()
            .map(|(pos, &msg)| TraceEvent { msg, pos })
    }
}

/// Traces that share one alphabet.
#[derive(Clone, Debug, Default)]
pub struct TraceSet {
    pub alphabet: Alphabet,
    pub traces: Vec<Trace>,
}

impl TraceSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse_and_push(&mut self, text: &str, id: &str) -> Result<&Trace> {
        let trace = parse_trace(text, id, &mut self.alphabet)?;
        self.traces.push(trace);
        Ok(self.traces.last().expect("just pushed"))
    }

    pub fn total_len(&self) -> usize {
        self.traces.iter().map(Trace::len).sum()
    }

    /// Unique messages that occur in at least one trace, in message order.
    pub fn occurring(&self) -> Vec<MsgId> {
        let mut seen = vec![false; self.alphabet.len()];
        for t in &self.traces {
            for &m in t.symbols() {
                seen[m.index()] = true;
            }
        }
        self.alphabet
            .sorted(self.alphabet.ids().filter(|id| seen[id.index()]))
    }
}

/// Parses the trace file format: one `(src:dest:cmd:req|resp)` per line, with
/// an optional leading integer label. Blank lines and `#` comments are
/// skipped. Positions follow line order of message lines.
pub fn parse_trace(text: &str, id: &str, alphabet: &mut Alphabet) -> Result<Trace> {
    let mut symbols = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let body = strip_label(line);
        if !body.starts_with('(') {
            return Err(Error::Parse {
                line: idx + 1,
                reason: format!("expected `(src:dest:cmd:kind)`, found `{line}`"),
            });
        }
        let msg: Message = body.parse().map_err(|e: Error| Error::Parse {
            line: idx + 1,
            reason: e.to_string(),
        })?;
        symbols.push(alphabet.intern(msg));
    }
    if symbols.is_empty() {
        return Err(Error::EmptyTrace);
    }
    Ok(Trace::new(id, symbols))
}

fn strip_label(line: &str) -> &str {
    let digits = line.bytes().take_while(u8::is_ascii_digit).count();
    if digits > 0 {
        line[digits..].trim_start()
    } else {
        line
    }
}

/// Canonical rendering: one message per line, no labels.
pub fn render_trace(trace: &Trace, alphabet: &Alphabet) -> String {
    let mut out = String::with_capacity(trace.len() * 24);
    for &m in trace.symbols() {
        out.push_str(&alphabet.get(m).to_string());
        out.push('\n');
    }
    out
}

/// Events of one interface, keeping their original trace positions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InterfaceSlice {
    pub interface: InterfaceId,
    pub events: Vec<TraceEvent>,
}

impl InterfaceSlice {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn symbols(&self) -> impl Iterator<Item = MsgId> + '_ {
        self.events.iter().map(|e| e.msg)
    }

    /// Unique message types of the slice in message order.
    pub fn types(&self, alphabet: &Alphabet) -> Vec<MsgId> {
        alphabet.sorted(self.symbols())
    }
}

/// Partitions a trace by interface. Each event lands in exactly the slice
/// whose endpoints equal `{src, dest}`.
pub fn slice(trace: &Trace, alphabet: &Alphabet) -> BTreeMap<InterfaceId, InterfaceSlice> {
    let iface_of: Vec<InterfaceId> = alphabet
        .ids()
        .map(|id| alphabet.get(id).interface())
        .collect();
    let mut slots: Vec<Option<usize>> = vec![None; alphabet.len()];
    let mut slices: Vec<InterfaceSlice> = Vec::new();
    let mut by_iface: BTreeMap<InterfaceId, usize> = BTreeMap::new();
    for ev in trace.events() {
        let slot = match slots[ev.msg.index()] {
            Some(s) => s,
            None => {
                let iface = &iface_of[ev.msg.index()];
                let s = *by_iface.entry(iface.clone()).or_insert_with(|| {
                    slices.push(InterfaceSlice {
                        interface: iface.clone(),
                        events: Vec::new(),
                    });
                    slices.len() - 1
                });
                slots[ev.msg.index()] = Some(s);
                s
            }
        };
        slices[slot].events.push(ev);
    }
    let mut out = BTreeMap::new();
    for s in slices {
        out.insert(s.interface.clone(), s);
    }
    out
}

/// User-supplied initial and terminal message sets.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageRoleConfig {
    pub initial: BTreeSet<Message>,
    pub terminal: BTreeSet<Message>,
}

impl MessageRoleConfig {
    pub fn new(
        initial: impl IntoIterator<Item = Message>,
        terminal: impl IntoIterator<Item = Message>,
    ) -> Self {
        MessageRoleConfig {
            initial: initial.into_iter().collect(),
            terminal: terminal.into_iter().collect(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: MessageRoleConfig = serde_json::from_str(text)?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn check(&self) -> Result<()> {
        if self.initial.is_empty() {
            return Err(Error::Roles("initial set is empty".into()));
        }
        if self.terminal.is_empty() {
            return Err(Error::Roles("terminal set is empty".into()));
        }
        Ok(())
    }

    /// Resolves the configuration against the messages occurring in `set`.
    pub fn resolve(&self, set: &TraceSet) -> Result<Roles> {
        self.check()?;
        let mut present = vec![false; set.alphabet.len()];
        for m in set.occurring() {
            present[m.index()] = true;
        }
        let lookup = |msg: &Message| set.alphabet.id(msg).filter(|id| present[id.index()]);
        let mut roles = Roles {
            initial: vec![false; set.alphabet.len()],
            terminal: vec![false; set.alphabet.len()],
        };
        for msg in &self.initial {
            let id = lookup(msg).ok_or_else(|| Error::MissingInitial(msg.to_string()))?;
            roles.initial[id.index()] = true;
        }
        for msg in &self.terminal {
            // Terminals that never occur cannot end a path; they are ignored.
            if let Some(id) = lookup(msg) {
                roles.terminal[id.index()] = true;
            }
        }
        if !roles.terminal.iter().any(|&t| t) {
            let first = self.terminal.iter().next().expect("checked non-empty");
            return Err(Error::MissingTerminal(first.to_string()));
        }
        Ok(roles)
    }
}

/// Role flags indexed by [`MsgId`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Roles {
    initial: Vec<bool>,
    terminal: Vec<bool>,
}

impl Roles {
    pub fn is_initial(&self, m: MsgId) -> bool {
        self.initial.get(m.index()).copied().unwrap_or(false)
    }

    pub fn is_terminal(&self, m: MsgId) -> bool {
        self.terminal.get(m.index()).copied().unwrap_or(false)
    }

    pub fn initials(&self) -> impl Iterator<Item = MsgId> + '_ {
        ids_where(&self.initial)
    }

    pub fn terminals(&self) -> impl Iterator<Item = MsgId> + '_ {
        ids_where(&self.terminal)
    }
}

fn ids_where(flags: &[bool]) -> impl Iterator<Item = MsgId> + '_ {
    flags
        .iter()
        .enumerate()
        .filter(|(_, &f)| f)
        .map(|(i, _)| MsgId(i as u32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn parses_two_line_trace() {
        let mut alpha = Alphabet::new();
        let t = parse_trace("(cpu0:cache:rd:req)\n(cache:cpu0:rd:resp)", "t", &mut alpha).unwrap();
        assert_eq!(t.len(), 2);
        let evs: Vec<_> = t.events().collect();
        assert_eq!(evs[0].pos, 0);
        assert_eq!(evs[1].pos, 1);
        assert_eq!(alpha.get(evs[0].msg), &Message::req("cpu0", "cache", "rd"));
    }

    #[test]
    fn empty_input_is_an_error() {
        let mut alpha = Alphabet::new();
        let err = parse_trace("", "t", &mut alpha).unwrap_err();
        assert_eq!(err.to_string(), "empty trace");
        let err = parse_trace("# only a comment\n\n", "t", &mut alpha).unwrap_err();
        assert!(matches!(err, Error::EmptyTrace));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let mut alpha = Alphabet::new();
        let text = "(cpu0:cache:rd:req)\n# c\n(cache:cpu0:rd)\n";
        match parse_trace(text, "t", &mut alpha) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_trace("cpu0 cache", "t", &mut alpha),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn labels_are_cosmetic() {
        let mut alpha = Alphabet::new();
        let t = parse_trace("7 (cpu0:cache:rd:req)\n3 (cache:cpu0:rd:resp)\n", "t", &mut alpha)
            .unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(alpha.get(t.msg_at(0)).cmd, "rd");
    }

    #[test]
    fn worked_trace_positions() {
        let set = fixtures::trace_one();
        let t = &set.traces[0];
        assert_eq!(t.len(), 14);
        assert_eq!(set.alphabet.get(t.msg_at(0)), &fixtures::msg(3));
        assert_eq!(set.alphabet.get(t.msg_at(13)), &fixtures::msg(4));
    }

    #[test]
    fn slices_of_interleaved_example() {
        let set = fixtures::trace_four();
        let slices = slice(&set.traces[0], &set.alphabet);
        assert_eq!(slices.len(), 3);
        let labels = |iface: InterfaceId| -> Vec<u32> {
            slices[&iface]
                .symbols()
                .map(|m| fixtures::label_of(&set.alphabet, m))
                .collect()
        };
        assert_eq!(labels(InterfaceId::new("cpu0", "cache")), vec![1, 2, 1, 2]);
        assert_eq!(labels(InterfaceId::new("cpu1", "cache")), vec![3, 4, 3, 4]);
        assert_eq!(labels(InterfaceId::new("cache", "mem")), vec![5, 6, 5, 6]);
    }

    #[test]
    fn slice_keeps_original_positions() {
        let set = fixtures::trace_one();
        let slices = slice(&set.traces[0], &set.alphabet);
        let cpu0: Vec<usize> = slices[&InterfaceId::new("cpu0", "cache")]
            .events
            .iter()
            .map(|e| e.pos)
            .collect();
        assert_eq!(cpu0, vec![1, 2, 6, 9, 10, 11]);
    }

    #[test]
    fn single_event_trace_has_one_slice() {
        let set = fixtures::labelled(&[1]);
        let slices = slice(&set.traces[0], &set.alphabet);
        assert_eq!(slices.len(), 1);
        assert_eq!(slices.values().next().unwrap().len(), 1);
    }

    #[test]
    fn roles_require_initials_in_traces() {
        let set = fixtures::labelled(&[1, 2]);
        let cfg = fixtures::roles();
        match cfg.resolve(&set) {
            Err(Error::MissingInitial(m)) => assert_eq!(m, "(cpu1:cache:rd:req)"),
            other => panic!("unexpected {other:?}"),
        }
        let empty = MessageRoleConfig::default();
        assert!(matches!(empty.resolve(&set), Err(Error::Roles(_))));
    }

    #[test]
    fn roles_json_round_trip() {
        let cfg = fixtures::roles();
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(MessageRoleConfig::from_json(&json).unwrap(), cfg);
    }
}
