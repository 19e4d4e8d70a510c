//! FIFO one-to-one pairing of message occurrences.
//!
//! Scanning left to right, every occurrence of `dst` consumes the earliest
//! still-unconsumed earlier occurrence of `src`. The number of pairs formed is
//! `freq(src -> dst)`; it never exceeds either occurrence count, so both
//! confidences stay within `[0, 1]`.

use std::collections::VecDeque;

use crate::message::MsgId;
use crate::trace::TraceEvent;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PairCount {
    pub freq: usize,
    pub count_src: usize,
    pub count_dst: usize,
}

impl PairCount {
    pub fn forward(&self) -> f64 {
        ratio(self.freq, self.count_src)
    }

    pub fn backward(&self) -> f64 {
        ratio(self.freq, self.count_dst)
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Counts FIFO pairs without materializing them.
pub fn fifo_count<I>(events: I, src: MsgId, dst: MsgId) -> PairCount
where
    I: IntoIterator<Item = TraceEvent>,
{
    debug_assert_ne!(src, dst);
    let mut pending = 0usize;
    let mut out = PairCount::default();
    for ev in events {
        if ev.msg == src {
            out.count_src += 1;
            pending += 1;
        } else if ev.msg == dst {
            out.count_dst += 1;
            if pending > 0 {
                pending -= 1;
                out.freq += 1;
            }
        }
    }
    out
}

/// FIFO pairs as `(src_pos, dst_pos)`, ordered by destination position.
pub fn fifo_pairs<I>(events: I, src: MsgId, dst: MsgId) -> (Vec<(usize, usize)>, PairCount)
where
    I: IntoIterator<Item = TraceEvent>,
{
    debug_assert_ne!(src, dst);
    let mut queue = VecDeque::new();
    let mut pairs = Vec::new();
    let mut count = PairCount::default();
    for ev in events {
        if ev.msg == src {
            count.count_src += 1;
            queue.push_back(ev.pos);
        } else if ev.msg == dst {
            count.count_dst += 1;
            if let Some(s) = queue.pop_front() {
                pairs.push((s, ev.pos));
            }
        }
    }
    count.freq = pairs.len();
    (pairs, count)
}

pub fn mean_gap(pairs: &[(usize, usize)]) -> Option<f64> {
    if pairs.is_empty() {
        return None;
    }
    let total: usize = pairs.iter().map(|(s, d)| d - s).sum();
    Some(total as f64 / pairs.len() as f64)
}
