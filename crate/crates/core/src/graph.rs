//! Causality graphs over unique messages.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};

use crate::error::{Error, Result};
use crate::local::{LocalMiningResult, Scope};
use crate::matching::{fifo_pairs, mean_gap};
use crate::message::{Alphabet, MsgId, Pair};
use crate::par;
use crate::trace::{Roles, TraceSet};

pub const DEFAULT_PATH_CAP: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct EdgeInfo {
    pub fc: f64,
    pub bc: f64,
    /// Pair count summed over traces.
    pub freq: usize,
    pub scope: Scope,
    /// Edge is a valid binary pattern.
    pub valid: bool,
    /// Matched valid-pattern instances; zero for cross-interface edges.
    pub support: usize,
    /// Mean positional gap of matched pairs, averaged per trace first.
    pub gap: Option<f64>,
}

impl Default for EdgeInfo {
    fn default() -> Self {
        EdgeInfo {
            fc: 0.0,
            bc: 0.0,
            freq: 0,
            scope: Scope::Global,
            valid: false,
            support: 0,
            gap: None,
        }
    }
}

impl EdgeInfo {
    pub fn confidence(&self) -> f64 {
        (self.fc + self.bc) / 2.0
    }
}

/// A multi-root DAG over unique messages.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CausalityGraph {
    /// Nodes in message order.
    pub nodes: Vec<MsgId>,
    pub roots: Vec<MsgId>,
    pub terminals: Vec<MsgId>,
    edges: BTreeMap<Pair, EdgeInfo>,
    succ: HashMap<MsgId, Vec<MsgId>>,
}

impl CausalityGraph {
    pub fn edge(&self, a: MsgId, b: MsgId) -> Option<&EdgeInfo> {
        self.edges.get(&(a, b))
    }

    /// Edge annotations; the edge set itself is fixed.
    pub fn edge_mut(&mut self, a: MsgId, b: MsgId) -> Option<&mut EdgeInfo> {
        self.edges.get_mut(&(a, b))
    }

    pub fn has_edge(&self, a: MsgId, b: MsgId) -> bool {
        self.edges.contains_key(&(a, b))
    }

    pub fn edges(&self) -> impl Iterator<Item = (Pair, &EdgeInfo)> {
        self.edges.iter().map(|(&p, e)| (p, e))
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Successors in message order.
    pub fn successors(&self, a: MsgId) -> &[MsgId] {
        self.succ.get(&a).map_or(&[], Vec::as_slice)
    }

    pub fn contains(&self, m: MsgId) -> bool {
        self.nodes.contains(&m)
    }

    pub fn is_terminal(&self, m: MsgId) -> bool {
        self.terminals.contains(&m)
    }

    fn insert_edge(&mut self, a: MsgId, b: MsgId, info: EdgeInfo) {
        self.edges.insert((a, b), info);
        self.succ.entry(a).or_default().push(b);
    }

    fn reaches(&self, from: MsgId, to: MsgId) -> bool {
        let mut stack = vec![from];
        let mut seen = HashSet::new();
        while let Some(n) = stack.pop() {
            if n == to {
                return true;
            }
            if seen.insert(n) {
                stack.extend(self.successors(n));
            }
        }
        false
    }

    pub fn is_acyclic(&self) -> bool {
        let mut indeg: HashMap<MsgId, usize> = self.nodes.iter().map(|&n| (n, 0)).collect();
        for &(_, b) in self.edges.keys() {
            *indeg.entry(b).or_default() += 1;
        }
        let mut queue: Vec<MsgId> = indeg.iter().filter(|(_, &d)| d == 0).map(|(&n, _)| n).collect();
        let mut seen = 0;
        while let Some(n) = queue.pop() {
            seen += 1;
            for &s in self.successors(n) {
                let d = indeg.get_mut(&s).expect("edge target is a node");
                *d -= 1;
                if *d == 0 {
                    queue.push(s);
                }
            }
        }
        seen == indeg.len()
    }

    /// Drops edges failing `keep` and every node no longer reachable from a root.
    pub fn retain_edges(&self, alphabet: &Alphabet, mut keep: impl FnMut(Pair, &EdgeInfo) -> bool) -> Self {
        let mut out = CausalityGraph::default();
        let mut kept: BTreeMap<Pair, EdgeInfo> = BTreeMap::new();
        for (&p, e) in &self.edges {
            if keep(p, e) {
                kept.insert(p, e.clone());
            }
        }
        let mut tmp = CausalityGraph::default();
        for (&(a, b), e) in &kept {
            tmp.insert_edge(a, b, e.clone());
        }
        let mut reach: HashSet<MsgId> = HashSet::new();
        let mut stack: Vec<MsgId> = self.roots.clone();
        while let Some(n) = stack.pop() {
            if reach.insert(n) {
                stack.extend(tmp.successors(n));
            }
        }
        // Insert in the original successor order.
        for &a in &self.nodes {
            for &b in self.successors(a) {
                if reach.contains(&a) {
                    if let Some(e) = kept.get(&(a, b)) {
                        out.insert_edge(a, b, e.clone());
                    }
                }
            }
        }
        out.nodes = alphabet.sorted(self.nodes.iter().copied().filter(|n| reach.contains(n)));
        out.roots = self.roots.clone();
        out.terminals = self
            .terminals
            .iter()
            .copied()
            .filter(|n| reach.contains(n))
            .collect();
        out
    }
}

/// First and last position of each message in one sequence.
struct Span {
    first: Vec<usize>,
    last: Vec<usize>,
}

impl Span {
    fn of(symbols: &[MsgId], n: usize) -> Self {
        let mut first = vec![usize::MAX; n];
        let mut last = vec![usize::MAX; n];
        for (pos, m) in symbols.iter().enumerate() {
            let i = m.index();
            if first[i] == usize::MAX {
                first[i] = pos;
            }
            last[i] = pos;
        }
        Span { first, last }
    }

    fn before(&self, a: MsgId, b: MsgId) -> bool {
        let (f, l) = (self.first[a.index()], self.last[b.index()]);
        f != usize::MAX && l != usize::MAX && f < l
    }

    fn occurs(&self, a: MsgId) -> bool {
        self.first[a.index()] != usize::MAX
    }
}

/// Breadth-first construction from the initial messages that occur.
///
/// Nodes and successors are visited in message order. Expansion stops at
/// terminals. An edge `A -> B` is added when `A.dest == B.src`, some
/// occurrence of `A` precedes some occurrence of `B`, `allow` accepts it and
/// `B` does not already reach `A`.
pub fn build_filtered<'a>(
    alphabet: &Alphabet,
    sequences: impl IntoIterator<Item = &'a [MsgId]>,
    roles: &Roles,
    mut allow: impl FnMut(Pair) -> bool,
) -> CausalityGraph {
    let n = alphabet.len();
    let spans: Vec<Span> = sequences.into_iter().map(|s| Span::of(s, n)).collect();
    let occurs = |m: MsgId| spans.iter().any(|s| s.occurs(m));
    let observed = |a: MsgId, b: MsgId| spans.iter().any(|s| s.before(a, b));

    let present = alphabet.sorted(alphabet.ids().filter(|&m| occurs(m)));
    let mut by_src: HashMap<&str, Vec<MsgId>> = HashMap::new();
    for &m in &present {
        by_src.entry(alphabet.get(m).src.as_str()).or_default().push(m);
    }

    let mut g = CausalityGraph {
        roots: present.iter().copied().filter(|&m| roles.is_initial(m)).collect(),
        ..CausalityGraph::default()
    };
    let mut visited: HashSet<MsgId> = g.roots.iter().copied().collect();
    let mut queue: VecDeque<MsgId> = g.roots.iter().copied().collect();
    let mut nodes = g.roots.clone();
    while let Some(a) = queue.pop_front() {
        if roles.is_terminal(a) {
            continue;
        }
        let Some(cands) = by_src.get(alphabet.get(a).dest.as_str()) else {
            continue;
        };
        for &b in cands {
            if a == b || !observed(a, b) || !allow((a, b)) || g.reaches(b, a) {
                continue;
            }
            g.insert_edge(a, b, EdgeInfo::default());
            if visited.insert(b) {
                nodes.push(b);
                queue.push_back(b);
            }
        }
    }
    g.nodes = alphabet.sorted(nodes);
    g.terminals = g.nodes.iter().copied().filter(|&m| roles.is_terminal(m)).collect();
    g
}

pub fn build_causality_graph(set: &TraceSet, roles: &Roles) -> CausalityGraph {
    build_filtered(
        &set.alphabet,
        set.traces.iter().map(|t| t.symbols()),
        roles,
        |_| true,
    )
}

/// Removes every edge listed in `invalid` and the nodes it strands.
pub fn prune_invalid_edges(
    g: &CausalityGraph,
    invalid: impl IntoIterator<Item = Pair>,
    alphabet: &Alphabet,
) -> CausalityGraph {
    let drop: HashSet<Pair> = invalid.into_iter().collect();
    g.retain_edges(alphabet, |p, _| !drop.contains(&p))
}

/// Attaches confidences, support and gaps to every edge.
///
/// Valid-pattern edges reuse their interface-level values. Other edges are
/// scored by FIFO pairing on the whole trace, averaged over the traces in
/// which they pair at least once. Edges that never pair are dropped.
pub fn annotate_confidences(
    g: &CausalityGraph,
    set: &TraceSet,
    local: &LocalMiningResult,
) -> CausalityGraph {
    let pairs: Vec<Pair> = g.edges.keys().copied().collect();
    let infos: Vec<EdgeInfo> = par::map(&pairs, |&(a, b)| {
        if let Some(i) = local.valid_index((a, b)) {
            let p = &local.valid[i];
            return EdgeInfo {
                fc: p.fc,
                bc: p.bc,
                freq: p.freq,
                scope: p.scope,
                valid: true,
                support: local.support[i],
                gap: local.gap[i],
            };
        }
        let mut fcs = Vec::new();
        let mut bcs = Vec::new();
        let mut gaps = Vec::new();
        let mut freq = 0;
        for t in &set.traces {
            let (ps, c) = fifo_pairs(t.events(), a, b);
            if c.freq > 0 {
                fcs.push(c.forward());
                bcs.push(c.backward());
                gaps.extend(mean_gap(&ps));
                freq += c.freq;
            }
        }
        let mean = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
        EdgeInfo {
            fc: mean(&fcs).unwrap_or(0.0),
            bc: mean(&bcs).unwrap_or(0.0),
            freq,
            scope: Scope::Global,
            valid: false,
            support: 0,
            gap: mean(&gaps),
        }
    });
    let info: HashMap<Pair, EdgeInfo> = pairs.into_iter().zip(infos).collect();
    let mut out = g.retain_edges(&set.alphabet, |p, _| info[&p].freq > 0);
    for (p, e) in out.edges.iter_mut() {
        *e = info[p].clone();
    }
    out
}

/// Every simple root-to-terminal path with at least one edge, by depth-first
/// search in root and successor order.
pub fn enumerate_paths(g: &CausalityGraph, cap: usize) -> Result<Vec<Vec<MsgId>>> {
    let mut out = Vec::new();
    let mut stack = Vec::new();
    for &r in &g.roots {
        if g.is_terminal(r) {
            continue;
        }
        stack.push(r);
        walk(g, &mut stack, &mut out, cap)?;
        stack.pop();
    }
    Ok(out)
}

fn walk(g: &CausalityGraph, stack: &mut Vec<MsgId>, out: &mut Vec<Vec<MsgId>>, cap: usize) -> Result<()> {
    let last = *stack.last().expect("non-empty");
    for &s in g.successors(last) {
        if stack.contains(&s) {
            continue;
        }
        stack.push(s);
        if g.is_terminal(s) {
            if out.len() == cap {
                return Err(Error::PathCapExceeded { cap });
            }
            out.push(stack.clone());
        } else {
            walk(g, stack, out, cap)?;
        }
        stack.pop();
    }
    Ok(())
}
