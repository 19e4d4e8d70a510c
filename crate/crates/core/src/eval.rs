//! Position-aware, single-pass model evaluation.
//!
//! Each trace is walked once, left to right. At every unconsumed initial
//! event the earliest unconsumed terminal it was matched with during local
//! mining bounds a sub-trace. Among the finite-energy pool paths that run from
//! the initial message to that terminal and fit the sub-trace's causality
//! graph, the one that strands the fewest other sub-trace events is accepted,
//! then the lowest energy, the longest, and the smallest sequence. Its events
//! are consumed and the path joins the model.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::energy::RankedPathPool;
use crate::graph::{build_filtered, CausalityGraph};
use crate::local::LocalMiningResult;
use crate::message::{Alphabet, MsgId};
use crate::par;
use crate::trace::{Roles, Trace, TraceEvent, TraceSet};

/// Complete embeddings scored per candidate path.
const EMBED_LIMIT: usize = 64;
/// Search nodes per candidate path.
const NODE_LIMIT: usize = 4096;

/// Unconsumed events of `trace[start..=end]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubTrace {
    pub start: usize,
    pub end: usize,
    pub events: Vec<TraceEvent>,
}

impl SubTrace {
    pub fn symbols(&self) -> Vec<MsgId> {
        self.events.iter().map(|e| e.msg).collect()
    }
}

/// The earliest unconsumed terminal matched with the initial event at `i`.
pub fn bound_of(
    local: &LocalMiningResult,
    trace_idx: usize,
    trace: &Trace,
    roles: &Roles,
    i: usize,
    consumed: &[bool],
) -> Option<usize> {
    local.partners[trace_idx]
        .partners(i)
        .map(|(_, d)| d)
        .filter(|&d| !consumed[d] && roles.is_terminal(trace.msg_at(d)))
        .min()
}

pub fn extract_subtrace(
    trace: &Trace,
    trace_idx: usize,
    i: usize,
    local: &LocalMiningResult,
    roles: &Roles,
    consumed: &[bool],
) -> Option<SubTrace> {
    let j = bound_of(local, trace_idx, trace, roles, i, consumed)?;
    Some(SubTrace {
        start: i,
        end: j,
        events: (i..=j)
            .filter(|&p| !consumed[p])
            .map(|p| TraceEvent {
                msg: trace.msg_at(p),
                pos: p,
            })
            .collect(),
    })
}

/// Causality graph of a sub-trace with the same construction and pruning as
/// the global graph.
pub fn build_sub_causality_graph(
    sub: &SubTrace,
    alphabet: &Alphabet,
    roles: &Roles,
    local: &LocalMiningResult,
) -> CausalityGraph {
    let symbols = sub.symbols();
    build_filtered(alphabet, [symbols.as_slice()], roles, |p| !local.is_pruned(p))
}

/// A chosen path and the positions it claims.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Claim {
    /// Index into the pool.
    pub path: usize,
    pub positions: Vec<usize>,
    pub orphans: usize,
}

/// Context for matching inside one trace.
pub struct Matcher<'a> {
    pub alphabet: &'a Alphabet,
    pub roles: &'a Roles,
    pub local: &'a LocalMiningResult,
    pub pool: &'a RankedPathPool,
    /// Finite pool paths by `(first, last)` message, in pool order.
    pub by_ends: &'a HashMap<(MsgId, MsgId), Vec<usize>>,
    pub trace_idx: usize,
}

/// Finite pool paths grouped by their end messages.
pub fn index_by_ends(pool: &RankedPathPool) -> HashMap<(MsgId, MsgId), Vec<usize>> {
    let mut out: HashMap<(MsgId, MsgId), Vec<usize>> = HashMap::new();
    for (i, p) in pool.paths.iter().enumerate() {
        if p.is_finite() {
            let first = p.msgs[0];
            let last = *p.msgs.last().expect("paths are non-empty");
            out.entry((first, last)).or_default().push(i);
        }
    }
    out
}

impl Matcher<'_> {
    /// Picks the pool path to accept for `sub`, or none.
    pub fn select_candidate(&self, sub: &SubTrace, g: &CausalityGraph) -> Option<Claim> {
        let first = sub.events.first()?;
        let last = sub.events.last()?;
        let cands = self.by_ends.get(&(first.msg, last.msg))?;
        let view = SubView::new(sub, g, self.roles);
        let mut best: Option<Claim> = None;
        for &pi in cands {
            let path = &self.pool.paths[pi].msgs;
            if !path.windows(2).all(|w| g.has_edge(w[0], w[1])) {
                continue;
            }
            let Some((positions, orphans)) = self.embed(path, sub, &view) else {
                continue;
            };
            // Pool order already ranks energy, then length, then sequence.
            if best.as_ref().is_none_or(|b| orphans < b.orphans) {
                best = Some(Claim {
                    path: pi,
                    positions,
                    orphans,
                });
            }
            if best.as_ref().is_some_and(|b| b.orphans == 0) {
                break;
            }
        }
        best
    }

    /// Best placement of `path` on the sub-trace: fewest orphans, then most
    /// edges agreeing with matched pairs, then earliest positions.
    fn embed(&self, path: &[MsgId], sub: &SubTrace, view: &SubView) -> Option<(Vec<usize>, usize)> {
        let k = path.len();
        let mut search = Embed {
            m: self,
            path,
            sub,
            view,
            slots: vec![0; k],
            best: None,
            complete: 0,
            nodes: 0,
        };
        search.slots[0] = 0;
        search.slots[k - 1] = sub.events.len() - 1;
        search.step(1);
        search.best.map(|(o, _, slots)| {
            (slots.iter().map(|&s| sub.events[s].pos).collect(), o)
        })
    }

    fn partner_slot(&self, sub: &SubTrace, a: MsgId, b: MsgId, from_slot: usize) -> Option<usize> {
        let pat = self.local.valid_index((a, b))?;
        let pos = self.local.partner(self.trace_idx, pat, sub.events[from_slot].pos)?;
        sub.events.binary_search_by_key(&pos, |e| e.pos).ok()
    }
}

struct Embed<'a, 'b> {
    m: &'a Matcher<'b>,
    path: &'a [MsgId],
    sub: &'a SubTrace,
    view: &'a SubView,
    slots: Vec<usize>,
    best: Option<(usize, usize, Vec<usize>)>,
    complete: usize,
    nodes: usize,
}

impl Embed<'_, '_> {
    fn step(&mut self, t: usize) {
        if self.complete >= EMBED_LIMIT || self.nodes >= NODE_LIMIT {
            return;
        }
        self.nodes += 1;
        let k = self.path.len();
        if t == k - 1 {
            self.finish();
            return;
        }
        let prev = self.slots[t - 1];
        let end = self.slots[k - 1];
        let want = self.path[t];
        let preferred = self
            .m
            .partner_slot(self.sub, self.path[t - 1], want, prev)
            .filter(|&s| s > prev && s < end);
        if let Some(s) = preferred {
            self.slots[t] = s;
            self.step(t + 1);
        }
        for &s in self.view.slots_of(want) {
            if s <= prev || Some(s) == preferred {
                continue;
            }
            if s >= end {
                break;
            }
            self.slots[t] = s;
            self.step(t + 1);
            if self.complete >= EMBED_LIMIT || self.nodes >= NODE_LIMIT {
                return;
            }
        }
    }

    fn finish(&mut self) {
        self.complete += 1;
        let agree = (1..self.path.len())
            .filter(|&t| {
                self.m
                    .partner_slot(self.sub, self.path[t - 1], self.path[t], self.slots[t - 1])
                    == Some(self.slots[t])
            })
            .count();
        let orphans = self.view.orphans(&self.slots);
        let better = match &self.best {
            None => true,
            Some((o, a, s)) => (orphans, std::cmp::Reverse(agree), &self.slots) < (*o, std::cmp::Reverse(*a), s),
        };
        if better {
            self.best = Some((orphans, agree, self.slots.clone()));
        }
    }
}

/// Dense view of a sub-trace: local type ids, adjacency and role flags.
struct SubView {
    ty: Vec<usize>,
    adj: Vec<Vec<bool>>,
    initial: Vec<bool>,
    terminal: Vec<bool>,
    slots_by_type: HashMap<MsgId, Vec<usize>>,
}

impl SubView {
    fn new(sub: &SubTrace, g: &CausalityGraph, roles: &Roles) -> Self {
        let mut types: Vec<MsgId> = Vec::new();
        let mut ty = Vec::with_capacity(sub.events.len());
        let mut slots_by_type: HashMap<MsgId, Vec<usize>> = HashMap::new();
        for (s, e) in sub.events.iter().enumerate() {
            let t = match types.iter().position(|&m| m == e.msg) {
                Some(t) => t,
                None => {
                    types.push(e.msg);
                    types.len() - 1
                }
            };
            ty.push(t);
            slots_by_type.entry(e.msg).or_default().push(s);
        }
        let adj = types
            .iter()
            .map(|&a| types.iter().map(|&b| g.has_edge(a, b)).collect())
            .collect();
        SubView {
            ty,
            adj,
            initial: types.iter().map(|&m| roles.is_initial(m)).collect(),
            terminal: types.iter().map(|&m| roles.is_terminal(m)).collect(),
            slots_by_type,
        }
    }

    fn slots_of(&self, m: MsgId) -> &[usize] {
        self.slots_by_type.get(&m).map_or(&[], Vec::as_slice)
    }

    /// Events left outside `taken` that are not both reachable from an
    /// earlier initial event and able to reach a later terminal event.
    fn orphans(&self, taken: &[usize]) -> usize {
        let n = self.ty.len();
        let nt = self.adj.len();
        let mut skip = vec![false; n];
        for &s in taken {
            skip[s] = true;
        }
        let mut fwd = vec![false; n];
        let mut seen = vec![false; nt];
        for s in 0..n {
            if skip[s] {
                continue;
            }
            let t = self.ty[s];
            fwd[s] = self.initial[t] || (0..nt).any(|u| seen[u] && self.adj[u][t]);
            if fwd[s] {
                seen[t] = true;
            }
        }
        let mut bwd = vec![false; n];
        let mut seen = vec![false; nt];
        for s in (0..n).rev() {
            if skip[s] {
                continue;
            }
            let t = self.ty[s];
            bwd[s] = self.terminal[t] || (0..nt).any(|u| seen[u] && self.adj[t][u]);
            if bwd[s] {
                seen[t] = true;
            }
        }
        (0..n).filter(|&s| !skip[s] && !(fwd[s] && bwd[s])).count()
    }
}

/// One accepted flow instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub path: Vec<MsgId>,
    pub positions: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceReport {
    pub id: String,
    pub len: usize,
    pub accepted: Vec<usize>,
    pub unaccepted: Vec<usize>,
    pub ratio: f64,
    /// Accepted instances in selection order.
    pub instances: Vec<Instance>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AcceptanceReport {
    pub traces: Vec<TraceReport>,
    /// Accepted events over all events.
    pub aggregate_ratio: f64,
    /// Mean of the per-trace ratios.
    pub mean_ratio: f64,
    /// Accepted instances by path length.
    pub histogram: BTreeMap<usize, usize>,
}

impl AcceptanceReport {
    pub fn from_traces(traces: Vec<TraceReport>) -> Self {
        let total: usize = traces.iter().map(|t| t.len).sum();
        let accepted: usize = traces.iter().map(|t| t.accepted.len()).sum();
        let mut histogram = BTreeMap::new();
        for t in &traces {
            for inst in &t.instances {
                *histogram.entry(inst.path.len()).or_insert(0) += 1;
            }
        }
        AcceptanceReport {
            aggregate_ratio: ratio(accepted, total),
            mean_ratio: if traces.is_empty() {
                0.0
            } else {
                traces.iter().map(|t| t.ratio).sum::<f64>() / traces.len() as f64
            },
            histogram,
            traces,
        }
    }

    pub fn instances(&self) -> impl Iterator<Item = &Instance> {
        self.traces.iter().flat_map(|t| &t.instances)
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Flow {
    pub msgs: Vec<MsgId>,
    pub instances: usize,
    pub energy: f64,
}

/// Accepted flows in message order, each with its instance count.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FlowModel {
    pub flows: Vec<Flow>,
}

impl FlowModel {
    pub fn from_report(report: &AcceptanceReport, pool: &RankedPathPool, alphabet: &Alphabet) -> Self {
        let mut counts: HashMap<&[MsgId], usize> = HashMap::new();
        for inst in report.instances() {
            *counts.entry(inst.path.as_slice()).or_insert(0) += 1;
        }
        let mut flows: Vec<Flow> = counts
            .into_iter()
            .map(|(msgs, instances)| Flow {
                msgs: msgs.to_vec(),
                instances,
                energy: pool.get(msgs).map_or(f64::INFINITY, |p| p.energy),
            })
            .collect();
        flows.sort_by(|a, b| alphabet.cmp_seq(&a.msgs, &b.msgs));
        FlowModel { flows }
    }

    pub fn len(&self) -> usize {
        self.flows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flows.is_empty()
    }

    pub fn contains(&self, msgs: &[MsgId]) -> bool {
        self.flows.iter().any(|f| f.msgs == msgs)
    }

    pub fn instances_of(&self, msgs: &[MsgId]) -> usize {
        self.flows
            .iter()
            .find(|f| f.msgs == msgs)
            .map_or(0, |f| f.instances)
    }
}

/// Builds a trace report from the claimed positions.
pub fn trace_report(trace: &Trace, instances: Vec<Instance>) -> TraceReport {
    let mut taken = vec![false; trace.len()];
    for inst in &instances {
        for &p in &inst.positions {
            taken[p] = true;
        }
    }
    let (accepted, unaccepted): (Vec<usize>, Vec<usize>) = (0..trace.len()).partition(|&p| taken[p]);
    TraceReport {
        id: trace.id.clone(),
        len: trace.len(),
        ratio: ratio(accepted.len(), trace.len()),
        accepted,
        unaccepted,
        instances,
    }
}

/// Evaluates one trace.
pub fn evaluate_trace(m: &Matcher, trace: &Trace) -> TraceReport {
    let n = trace.len();
    let mut consumed = vec![false; n];
    let mut instances = Vec::new();
    for i in 0..n {
        if consumed[i] || !m.roles.is_initial(trace.msg_at(i)) {
            continue;
        }
        let Some(sub) = extract_subtrace(trace, m.trace_idx, i, m.local, m.roles, &consumed) else {
            continue;
        };
        let g = build_sub_causality_graph(&sub, m.alphabet, m.roles, m.local);
        let Some(claim) = m.select_candidate(&sub, &g) else {
            continue;
        };
        for &p in &claim.positions {
            consumed[p] = true;
        }
        instances.push(Instance {
            path: m.pool.paths[claim.path].msgs.clone(),
            positions: claim.positions,
        });
    }
    trace_report(trace, instances)
}

/// Evaluates every trace and assembles the model.
pub fn evaluate(
    set: &TraceSet,
    pool: &RankedPathPool,
    local: &LocalMiningResult,
    roles: &Roles,
) -> (AcceptanceReport, FlowModel) {
    let by_ends = index_by_ends(pool);
    let traces = par::map_range(set.traces.len(), |ti| {
        let m = Matcher {
            alphabet: &set.alphabet,
            roles,
            local,
            pool,
            by_ends: &by_ends,
            trace_idx: ti,
        };
        evaluate_trace(&m, &set.traces[ti])
    });
    let report = AcceptanceReport::from_traces(traces);
    let model = FlowModel::from_report(&report, pool, &set.alphabet);
    (report, model)
}
