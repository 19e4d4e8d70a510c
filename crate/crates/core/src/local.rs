//! Interface-level mining: causal relations inside each slice, their
//! confidences, the valid cover, and matched instance positions.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::cover::{select_cover, CoverCandidate};
use crate::error::{Error, Result};
use crate::matching::{fifo_count, fifo_pairs, mean_gap, PairCount};
use crate::message::{Alphabet, InterfaceId, MsgId, Pair};
use crate::par;
use crate::trace::{slice, InterfaceSlice, Trace, TraceEvent, TraceSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    Interface,
    Global,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BinaryPattern {
    pub src: MsgId,
    pub dst: MsgId,
    pub fc: f64,
    pub bc: f64,
    /// Pair count summed over traces.
    pub freq: usize,
    pub count_src: usize,
    pub count_dst: usize,
    pub valid: bool,
    pub scope: Scope,
}

impl BinaryPattern {
    pub fn pair(&self) -> Pair {
        (self.src, self.dst)
    }

    pub fn confidence(&self) -> f64 {
        (self.fc + self.bc) / 2.0
    }
}

/// Matched instances of one valid pattern in one trace.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatchedInstances {
    pub pattern: Pair,
    pub trace: usize,
    /// `(src_pos, dst_pos)` in original trace coordinates, by destination.
    pub pairs: Vec<(usize, usize)>,
}

/// Per-trace lookup from a source position to its matched destinations.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PartnerIndex {
    offsets: Vec<u32>,
    entries: Vec<(u32, u32)>,
}

impl PartnerIndex {
    fn build(len: usize, matches: &[(usize, &[(usize, usize)])]) -> Self {
        let mut degree = vec![0u32; len + 1];
        for (_, pairs) in matches {
            for &(s, _) in *pairs {
                degree[s + 1] += 1;
            }
        }
        for i in 1..degree.len() {
            degree[i] += degree[i - 1];
        }
        let offsets = degree;
        let mut fill = offsets.clone();
        let mut entries = vec![(0u32, 0u32); offsets[len] as usize];
        for &(pattern, pairs) in matches {
            for &(s, d) in pairs {
                entries[fill[s] as usize] = (pattern as u32, d as u32);
                fill[s] += 1;
            }
        }
        PartnerIndex { offsets, entries }
    }

    /// `(valid pattern index, destination position)` for a source position.
    pub fn partners(&self, pos: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let (a, b) = match (self.offsets.get(pos), self.offsets.get(pos + 1)) {
            (Some(&a), Some(&b)) => (a as usize, b as usize),
            _ => (0, 0),
        };
        self.entries[a..b]
            .iter()
            .map(|&(p, d)| (p as usize, d as usize))
    }
}

#[derive(Clone, Debug, Default)]
pub struct LocalMiningResult {
    /// BP_V in message order.
    pub valid: Vec<BinaryPattern>,
    /// BP_I in message order.
    pub invalid: Vec<BinaryPattern>,
    /// Relations outweighed by their own reverse.
    pub suppressed: Vec<BinaryPattern>,
    /// Slice types no candidate covers.
    pub uncovered: Vec<(InterfaceId, MsgId)>,
    /// MBP grouped by valid pattern, then trace.
    pub matches: Vec<MatchedInstances>,
    /// Total matched instances per valid pattern.
    pub support: Vec<usize>,
    /// Per valid pattern: mean over traces of the per-trace mean gap.
    pub gap: Vec<Option<f64>>,
    pub partners: Vec<PartnerIndex>,
    valid_index: HashMap<Pair, usize>,
    pruned: BTreeSet<Pair>,
}

impl LocalMiningResult {
    pub fn valid_index(&self, pair: Pair) -> Option<usize> {
        self.valid_index.get(&pair).copied()
    }

    pub fn is_valid(&self, pair: Pair) -> bool {
        self.valid_index.contains_key(&pair)
    }

    /// Invalid and suppressed relations; both are removed from the graph.
    pub fn is_pruned(&self, pair: Pair) -> bool {
        self.pruned.contains(&pair)
    }

    pub fn pruned(&self) -> impl Iterator<Item = Pair> + '_ {
        self.pruned.iter().copied()
    }

    pub fn matches_of(&self, pair: Pair) -> impl Iterator<Item = &MatchedInstances> {
        self.matches.iter().filter(move |m| m.pattern == pair)
    }

    /// Matched destination of `pattern` for the source at `pos` in `trace`.
    pub fn partner(&self, trace: usize, pattern: usize, pos: usize) -> Option<usize> {
        self.partners[trace]
            .partners(pos)
            .find(|&(p, _)| p == pattern)
            .map(|(_, d)| d)
    }
}

/// Ordered pairs of distinct slice types with `A.dest == B.src` and some
/// occurrence of `A` before some occurrence of `B`, in message order.
pub fn extract_causal_relations(s: &InterfaceSlice, alphabet: &Alphabet) -> Vec<Pair> {
    let mut first: BTreeMap<MsgId, usize> = BTreeMap::new();
    let mut last: BTreeMap<MsgId, usize> = BTreeMap::new();
    for ev in &s.events {
        first.entry(ev.msg).or_insert(ev.pos);
        last.insert(ev.msg, ev.pos);
    }
    let types = s.types(alphabet);
    let mut out = Vec::new();
    for &a in &types {
        for &b in &types {
            if a != b && alphabet.causal(a, b) && first[&a] < last[&b] {
                out.push((a, b));
            }
        }
    }
    out
}

pub fn score(s: &InterfaceSlice, rel: Pair) -> PairCount {
    fifo_count(s.events.iter().copied(), rel.0, rel.1)
}

pub fn match_instances(s: &InterfaceSlice, rel: Pair, trace: usize) -> MatchedInstances {
    MatchedInstances {
        pattern: rel,
        trace,
        pairs: fifo_pairs(s.events.iter().copied(), rel.0, rel.1).0,
    }
}

/// Outcome of cover selection on one interface.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Selection {
    pub valid: Vec<BinaryPattern>,
    pub invalid: Vec<BinaryPattern>,
    pub uncovered: Vec<MsgId>,
}

/// Picks a minimum cover of `types` by `scored`, preferring high `fc + bc`.
pub fn select_valid_patterns(
    types: &[MsgId],
    scored: &[BinaryPattern],
    alphabet: &Alphabet,
) -> Selection {
    let candidates: Vec<CoverCandidate> = scored
        .iter()
        .map(|p| CoverCandidate {
            pair: p.pair(),
            score: p.fc + p.bc,
            freq: p.freq,
        })
        .collect();
    let cover = select_cover(types, &candidates, alphabet);
    let chosen: BTreeSet<Pair> = cover.selected.iter().copied().collect();
    let mut out = Selection {
        uncovered: cover.uncovered,
        ..Selection::default()
    };
    for p in scored {
        let mut p = p.clone();
        p.valid = chosen.contains(&p.pair());
        if p.valid {
            out.valid.push(p);
        } else {
            out.invalid.push(p);
        }
    }
    let by_msg = |a: &BinaryPattern, b: &BinaryPattern| {
        alphabet
            .cmp(a.src, b.src)
            .then_with(|| alphabet.cmp(a.dst, b.dst))
    };
    out.valid.sort_by(by_msg);
    out.invalid.sort_by(by_msg);
    out
}

/// Per-trace counts of one relation.
#[derive(Default)]
struct Tally {
    per_trace: Vec<PairCount>,
}

impl Tally {
    fn pattern(&self, pair: Pair, scope: Scope) -> BinaryPattern {
        let seen: Vec<&PairCount> = self.per_trace.iter().filter(|c| c.freq > 0).collect();
        let mean = |f: fn(&PairCount) -> f64| {
            if seen.is_empty() {
                0.0
            } else {
                seen.iter().map(|c| f(c)).sum::<f64>() / seen.len() as f64
            }
        };
        BinaryPattern {
            src: pair.0,
            dst: pair.1,
            fc: mean(PairCount::forward),
            bc: mean(PairCount::backward),
            freq: self.per_trace.iter().map(|c| c.freq).sum(),
            count_src: self.per_trace.iter().map(|c| c.count_src).sum(),
            count_dst: self.per_trace.iter().map(|c| c.count_dst).sum(),
            valid: false,
            scope,
        }
    }
}

/// Slice-level mining over every trace.
pub fn local_mine(set: &TraceSet) -> Result<LocalMiningResult> {
    if set.traces.is_empty() {
        return Err(Error::NoTraces);
    }
    let alphabet = &set.alphabet;
    let sliced: Vec<BTreeMap<InterfaceId, InterfaceSlice>> =
        par::map(&set.traces, |t| slice(t, alphabet));

    // Per-trace relation counts, one task per (trace, interface).
    let jobs: Vec<(usize, &InterfaceSlice)> = sliced
        .iter()
        .enumerate()
        .flat_map(|(ti, m)| m.values().map(move |s| (ti, s)))
        .collect();
    let counted: Vec<Vec<(Pair, PairCount)>> = par::map(&jobs, |&(_, s)| {
        extract_causal_relations(s, alphabet)
            .into_iter()
            .map(|rel| (rel, score(s, rel)))
            .collect()
    });

    let n = set.traces.len();
    let mut tallies: BTreeMap<Pair, Tally> = BTreeMap::new();
    let mut types: BTreeMap<InterfaceId, BTreeSet<MsgId>> = BTreeMap::new();
    for (&(ti, s), rels) in jobs.iter().zip(&counted) {
        types
            .entry(s.interface.clone())
            .or_default()
            .extend(s.symbols());
        for &(rel, c) in rels {
            let t = tallies.entry(rel).or_insert_with(|| Tally {
                per_trace: vec![PairCount::default(); n],
            });
            t.per_trace[ti] = c;
        }
    }

    let freq_of = |p: Pair| tallies.get(&p).map_or(0, |t| t.per_trace.iter().map(|c| c.freq).sum());
    let mut by_iface: BTreeMap<InterfaceId, Vec<BinaryPattern>> = BTreeMap::new();
    let mut suppressed = Vec::new();
    for (&pair, tally) in &tallies {
        let p = tally.pattern(pair, Scope::Interface);
        if freq_of((pair.1, pair.0)) > p.freq {
            suppressed.push(p);
        } else {
            by_iface
                .entry(alphabet.get(pair.0).interface())
                .or_default()
                .push(p);
        }
    }

    let ifaces: Vec<(&InterfaceId, &BTreeSet<MsgId>)> = types.iter().collect();
    let selections: Vec<Selection> = par::map(&ifaces, |&(iface, tys)| {
        let tys = alphabet.sorted(tys.iter().copied());
        let scored = by_iface.get(iface).map_or(&[][..], Vec::as_slice);
        select_valid_patterns(&tys, scored, alphabet)
    });

    let mut out = LocalMiningResult::default();
    for ((iface, _), sel) in ifaces.iter().zip(selections) {
        out.valid.extend(sel.valid);
        out.invalid.extend(sel.invalid);
        out.uncovered
            .extend(sel.uncovered.into_iter().map(|m| ((*iface).clone(), m)));
    }
    out.suppressed = suppressed;
    for list in [&mut out.valid, &mut out.invalid, &mut out.suppressed] {
        list.sort_by(|a, b| {
            alphabet
                .cmp(a.src, b.src)
                .then_with(|| alphabet.cmp(a.dst, b.dst))
        });
    }
    finish(out, set, |ti| {
        sliced[ti]
            .values()
            .map(|s| (s.interface.clone(), s.events.as_slice()))
            .collect()
    })
}

/// Mining without slicing: every observed structural pair is scored on the
/// whole trace and treated as valid.
pub fn global_patterns(set: &TraceSet) -> Result<LocalMiningResult> {
    if set.traces.is_empty() {
        return Err(Error::NoTraces);
    }
    let alphabet = &set.alphabet;
    let whole: Vec<Vec<TraceEvent>> = par::map(&set.traces, |t| t.events().collect());
    let n = set.traces.len();
    let mut tallies: BTreeMap<Pair, Tally> = BTreeMap::new();
    for (ti, evs) in whole.iter().enumerate() {
        let s = InterfaceSlice {
            interface: InterfaceId::new("*", "*"),
            events: evs.clone(),
        };
        let rels = extract_causal_relations(&s, alphabet);
        let counts = par::map(&rels, |&rel| score(&s, rel));
        for (rel, c) in rels.into_iter().zip(counts) {
            let t = tallies.entry(rel).or_insert_with(|| Tally {
                per_trace: vec![PairCount::default(); n],
            });
            t.per_trace[ti] = c;
        }
    }
    let mut out = LocalMiningResult::default();
    for (&pair, tally) in &tallies {
        let mut p = tally.pattern(pair, Scope::Global);
        p.valid = true;
        out.valid.push(p);
    }
    out.valid.sort_by(|a, b| {
        alphabet
            .cmp(a.src, b.src)
            .then_with(|| alphabet.cmp(a.dst, b.dst))
    });
    finish(out, set, |ti| {
        vec![(InterfaceId::new("*", "*"), whole[ti].as_slice())]
    })
}

/// Matches every valid pattern inside its scope and builds the indexes.
fn finish<'a, F>(mut out: LocalMiningResult, set: &TraceSet, scopes: F) -> Result<LocalMiningResult>
where
    F: Fn(usize) -> Vec<(InterfaceId, &'a [TraceEvent])> + Sync + Send,
{
    let alphabet = &set.alphabet;
    out.valid_index = out
        .valid
        .iter()
        .enumerate()
        .map(|(i, p)| (p.pair(), i))
        .collect();
    out.pruned = out
        .invalid
        .iter()
        .chain(&out.suppressed)
        .map(BinaryPattern::pair)
        .collect();
    let global = out.valid.first().is_some_and(|p| p.scope == Scope::Global);

    let per_trace: Vec<Vec<MatchedInstances>> = par::map_range(set.traces.len(), |ti| {
        let scopes = scopes(ti);
        out.valid
            .iter()
            .filter_map(|p| {
                let iface = if global {
                    InterfaceId::new("*", "*")
                } else {
                    alphabet.get(p.src).interface()
                };
                let evs = scopes.iter().find(|(i, _)| *i == iface)?.1;
                let pairs = fifo_pairs(evs.iter().copied(), p.src, p.dst).0;
                (!pairs.is_empty()).then(|| MatchedInstances {
                    pattern: p.pair(),
                    trace: ti,
                    pairs,
                })
            })
            .collect()
    });

    out.partners = per_trace
        .iter()
        .zip(&set.traces)
        .map(|(ms, t): (&Vec<MatchedInstances>, &Trace)| {
            let refs: Vec<(usize, &[(usize, usize)])> = ms
                .iter()
                .map(|m| (out.valid_index[&m.pattern], m.pairs.as_slice()))
                .collect();
            PartnerIndex::build(t.len(), &refs)
        })
        .collect();

    out.support = vec![0; out.valid.len()];
    let mut gaps: Vec<Vec<f64>> = vec![Vec::new(); out.valid.len()];
    let mut matches: Vec<MatchedInstances> = per_trace.into_iter().flatten().collect();
    matches.sort_by_key(|m| (out.valid_index[&m.pattern], m.trace));
    for m in &matches {
        let i = out.valid_index[&m.pattern];
        out.support[i] += m.pairs.len();
        gaps[i].extend(mean_gap(&m.pairs));
    }
    out.gap = gaps
        .into_iter()
        .map(|g| (!g.is_empty()).then(|| g.iter().sum::<f64>() / g.len() as f64))
        .collect();
    out.matches = matches;
    Ok(out)
}
