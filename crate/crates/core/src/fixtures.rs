//! The six-message CPU read alphabet and the two interleaved reference
//! traces used throughout the docs and tests.
//!
//! | label | message |
//! |-------|---------|
//! | 1 | `(cpu0:cache:rd:req)` |
//! | 2 | `(cache:cpu0:rd:resp)` |
//! | 3 | `(cpu1:cache:rd:req)` |
//! | 4 | `(cache:cpu1:rd:resp)` |
//! | 5 | `(cache:mem:rd:req)` |
//! | 6 | `(mem:cache:rd:resp)` |
//!
//! Initial messages are {1, 3}; terminal messages are {2, 4}.

use crate::message::{Alphabet, Message, MsgId};
use crate::trace::{MessageRoleConfig, Trace, TraceSet};

/// Three cpu0 reads and two cpu1 reads, interleaved.
pub const TRACE_ONE: [u32; 14] = [3, 1, 1, 5, 4, 6, 2, 5, 6, 2, 1, 2, 3, 4];

/// One instance each of `{1,2}`, `{3,4}`, `{1,5,6,2}` and `{3,5,6,4}`.
pub const TRACE_FOUR: [u32; 12] = [1, 3, 5, 2, 6, 4, 1, 5, 6, 2, 3, 4];

pub fn msg(label: u32) -> Message {
    match label {
        1 => Message::req("cpu0", "cache", "rd"),
        2 => Message::resp("cache", "cpu0", "rd"),
        3 => Message::req("cpu1", "cache", "rd"),
        4 => Message::resp("cache", "cpu1", "rd"),
        5 => Message::req("cache", "mem", "rd"),
        6 => Message::resp("mem", "cache", "rd"),
        other => panic!("no reference message labelled {other}"),
    }
}

/// Inverse of [`msg`] for ids of `alphabet`.
pub fn label_of(alphabet: &Alphabet, id: MsgId) -> u32 {
    let m = alphabet.get(id);
    (1..=6)
        .find(|&l| &msg(l) == m)
        .unwrap_or_else(|| panic!("{m} is not a reference message"))
}

pub fn labels_of(alphabet: &Alphabet, ids: &[MsgId]) -> Vec<u32> {
    ids.iter().map(|&id| label_of(alphabet, id)).collect()
}

/// Interns all six messages in label order, so `MsgId(l - 1)` is label `l`.
pub fn alphabet() -> Alphabet {
    let mut a = Alphabet::new();
    for l in 1..=6 {
        a.intern(msg(l));
    }
    a
}

pub fn id(alphabet: &Alphabet, label: u32) -> MsgId {
    alphabet.id(&msg(label)).expect("reference message interned")
}

/// A single-trace set built from labels.
pub fn labelled(labels: &[u32]) -> TraceSet {
    let mut set = TraceSet {
        alphabet: alphabet(),
        traces: Vec::new(),
    };
    push_labelled(&mut set, labels, "t0");
    set
}

pub fn push_labelled(set: &mut TraceSet, labels: &[u32], id: &str) {
    let symbols = labels.iter().map(|&l| set.alphabet.intern(msg(l))).collect();
    set.traces.push(Trace::new(id, symbols));
}

pub fn trace_one() -> TraceSet {
    labelled(&TRACE_ONE)
}

pub fn trace_four() -> TraceSet {
    labelled(&TRACE_FOUR)
}

pub fn roles() -> MessageRoleConfig {
    MessageRoleConfig::new([msg(1), msg(3)], [msg(2), msg(4)])
}

/// Renders labels in the trace file format.
pub fn render_labels(labels: &[u32]) -> String {
    labels
        .iter()
        .map(|&l| format!("{}\n", msg(l)))
        .collect()
}
