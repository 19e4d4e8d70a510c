//! Strategies, oracles and invariant checks shared by the property and
//! acceptance suites.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap, HashSet};

use flowmine::cover::{select_cover, CoverCandidate};
use flowmine::energy::path_energy;
use flowmine::export;
use flowmine::fixtures::{self, msg};
use flowmine::graph::{
    annotate_confidences, build_causality_graph, enumerate_paths, prune_invalid_edges, CausalityGraph,
    DEFAULT_PATH_CAP,
};
use flowmine::local::{extract_causal_relations, local_mine};
use flowmine::message::Pair;
use flowmine::pipeline::{mine, MineOptions};
use flowmine::synth::{builtin_flows, generate, GenerateMode, GenerateOptions, Profile};
use flowmine::trace::{parse_trace, render_trace, slice};
use flowmine::{Alphabet, Message, MessageRoleConfig, MsgId, Trace, TraceSet};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = Result<(), TestCaseError>;

/// The four read paths over the reference messages.
pub const READ_PATHS: [&[u32]; 4] = [&[1, 2], &[1, 5, 6, 2], &[3, 4], &[3, 5, 6, 4]];

/// Uniform interleaving of one instance per listed path.
pub fn interleave(paths: &[&[u32]], seed: u64) -> Vec<u32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cursor: Vec<(usize, usize)> = (0..paths.len()).map(|i| (i, 0)).collect();
    let mut out = Vec::new();
    while !cursor.is_empty() {
        let k = rng.gen_range(0..cursor.len());
        let (p, step) = cursor[k];
        out.push(paths[p][step]);
        if step + 1 == paths[p].len() {
            cursor.remove(k);
        } else {
            cursor[k].1 += 1;
        }
    }
    out
}

/// Random read-flow instances, at most `max_events` in total, interleaved.
pub fn read_flow_trace(choices: &[usize], seed: u64, max_events: usize) -> Vec<u32> {
    let mut picked: Vec<&[u32]> = Vec::new();
    let mut total = 0;
    for &c in choices {
        let p = READ_PATHS[c % READ_PATHS.len()];
        if total + p.len() > max_events {
            break;
        }
        total += p.len();
        picked.push(p);
    }
    interleave(&picked, seed)
}

/// Reference roles restricted to messages present in `labels`.
pub fn roles_for(labels: &[u32]) -> MessageRoleConfig {
    MessageRoleConfig::new(
        [1, 3].into_iter().filter(|l| labels.contains(l)).map(msg),
        [2, 4].map(msg),
    )
}

pub fn label_trace(max_len: usize) -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(1u32..=6, 1..=max_len)
}

pub fn flow_trace(max_events: usize) -> impl Strategy<Value = Vec<u32>> {
    (prop::collection::vec(0usize..4, 1..=8), any::<u64>())
        .prop_map(move |(c, s)| read_flow_trace(&c, s, max_events))
}

/// A random system: up to ten messages among four components, a trace over
/// them, and role choices among the messages that occur.
#[derive(Clone, Debug)]
pub struct RandomSystem {
    pub messages: Vec<Message>,
    pub trace: Vec<usize>,
    pub initial: Vec<usize>,
    pub terminal: Vec<usize>,
}

impl RandomSystem {
    pub fn set(&self) -> TraceSet {
        let mut set = TraceSet::new();
        let symbols = self
            .trace
            .iter()
            .map(|&i| set.alphabet.intern(self.messages[i].clone()))
            .collect();
        set.traces.push(Trace::new("random", symbols));
        set
    }

    pub fn roles(&self) -> MessageRoleConfig {
        MessageRoleConfig::new(
            self.initial.iter().map(|&i| self.messages[i].clone()),
            self.terminal.iter().map(|&i| self.messages[i].clone()),
        )
    }
}

pub fn random_system() -> impl Strategy<Value = RandomSystem> {
    let def = (0u8..4, 0u8..4, any::<bool>()).prop_filter("distinct endpoints", |(s, d, _)| s != d);
    prop::collection::btree_set(def, 2..=10)
        .prop_flat_map(|defs| {
            let messages: Vec<Message> = defs
                .into_iter()
                .map(|(s, d, req)| {
                    let (s, d) = (format!("c{s}"), format!("c{d}"));
                    if req {
                        Message::req(&s, &d, "x")
                    } else {
                        Message::resp(&s, &d, "x")
                    }
                })
                .collect();
            let n = messages.len();
            (
                Just(messages),
                prop::collection::vec(0..n, 1..=30),
                prop::collection::vec(any::<prop::sample::Index>(), 1..=3),
                prop::collection::vec(any::<prop::sample::Index>(), 1..=3),
            )
        })
        .prop_map(|(messages, trace, ini, term)| {
            let present: Vec<usize> = trace.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
            let pick = |ix: &[prop::sample::Index]| -> Vec<usize> {
                ix.iter().map(|i| *i.get(&present)).collect::<BTreeSet<_>>().into_iter().collect()
            };
            RandomSystem {
                initial: pick(&ini),
                terminal: pick(&term),
                messages,
                trace,
            }
        })
}

/// Slices partition the trace, keep positions increasing and hold only
/// messages of their interface.
pub fn check_slices(labels: &[u32]) -> Check {
    let set = fixtures::labelled(labels);
    let t = &set.traces[0];
    let slices = slice(t, &set.alphabet);
    let mut seen = HashSet::new();
    let mut total = 0;
    for (iface, s) in &slices {
        total += s.events.len();
        prop_assert!(s.events.windows(2).all(|w| w[0].pos < w[1].pos));
        for e in &s.events {
            prop_assert!(seen.insert(e.pos), "position {} in two slices", e.pos);
            prop_assert_eq!(t.msg_at(e.pos), e.msg);
            let m = set.alphabet.get(e.msg);
            prop_assert_eq!(&m.interface(), iface);
        }
    }
    prop_assert_eq!(total, t.len());
    Ok(())
}

pub fn check_round_trip(labels: &[u32]) -> Check {
    let set = fixtures::labelled(labels);
    let text = render_trace(&set.traces[0], &set.alphabet);
    let mut alpha = set.alphabet.clone();
    let back = parse_trace(&text, "t0", &mut alpha).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert_eq!(back.symbols(), set.traces[0].symbols());
    prop_assert_eq!(alpha.len(), set.alphabet.len());
    Ok(())
}

/// Confidence identity, partition of observed relations, coverage and
/// matching soundness on a single trace.
pub fn check_local(set: &TraceSet) -> Check {
    prop_assert_eq!(set.traces.len(), 1);
    let local = local_mine(set).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let alpha = &set.alphabet;
    let all = local.valid.iter().chain(&local.invalid).chain(&local.suppressed);
    let mut mined = BTreeSet::new();
    for p in all {
        prop_assert!(mined.insert(p.pair()), "pattern listed twice");
        prop_assert!(alpha.causal(p.src, p.dst));
        prop_assert!((p.fc * p.count_src as f64 - p.freq as f64).abs() < 1e-9);
        prop_assert!((p.bc * p.count_dst as f64 - p.freq as f64).abs() < 1e-9);
        prop_assert!(p.fc <= 1.0 && p.bc <= 1.0);
    }
    let slices = slice(&set.traces[0], alpha);
    let mut observed = BTreeSet::new();
    for (iface, s) in &slices {
        observed.extend(extract_causal_relations(s, alpha));
        for m in s.types(alpha) {
            let covered = local
                .valid
                .iter()
                .any(|p| p.src == m || p.dst == m);
            let warned = local.uncovered.iter().any(|(i, u)| i == iface && *u == m);
            prop_assert!(covered || warned, "type {} neither covered nor reported", alpha.get(m));
        }
    }
    prop_assert_eq!(&mined, &observed);

    let mut used_src = HashSet::new();
    let mut used_dst = HashSet::new();
    let t = &set.traces[0];
    for m in &local.matches {
        prop_assert!(local.is_valid(m.pattern));
        for &(s, d) in &m.pairs {
            prop_assert!(s < d);
            prop_assert_eq!(t.msg_at(s), m.pattern.0);
            prop_assert_eq!(t.msg_at(d), m.pattern.1);
            prop_assert!(used_src.insert((m.pattern, s)), "source reused");
            prop_assert!(used_dst.insert((m.pattern, d)), "destination reused");
        }
    }
    Ok(())
}

/// Exhaustive minimum cover: fewest pairs, then highest total score.
pub fn brute_force_cover(types: &[MsgId], cands: &[CoverCandidate]) -> Option<(usize, f64)> {
    let coverable: Vec<MsgId> = types
        .iter()
        .copied()
        .filter(|&t| cands.iter().any(|c| c.pair.0 == t || c.pair.1 == t))
        .collect();
    let mut best: Option<(usize, f64)> = None;
    for mask in 0u32..(1 << cands.len()) {
        let chosen: Vec<&CoverCandidate> = (0..cands.len())
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| &cands[i])
            .collect();
        let covers = coverable
            .iter()
            .all(|&t| chosen.iter().any(|c| c.pair.0 == t || c.pair.1 == t));
        if !covers {
            continue;
        }
        let size = chosen.len();
        let score: f64 = chosen.iter().map(|c| c.score).sum();
        best = match best {
            Some((s, sc)) if s < size || (s == size && sc >= score) => Some((s, sc)),
            _ => Some((size, score)),
        };
    }
    best
}

pub fn cover_instance() -> impl Strategy<Value = (usize, Vec<(u32, u32, u32, usize)>)> {
    (2usize..=6).prop_flat_map(|n| {
        let cand = (0..n as u32, 0..n as u32, 0u32..=8, 1usize..5).prop_filter("distinct", |c| c.0 != c.1);
        (Just(n), prop::collection::vec(cand, 0..=8))
    })
}

/// The cover matches the exhaustive optimum in size and total score.
pub fn check_cover(n: usize, raw: &[(u32, u32, u32, usize)]) -> Check {
    let alpha = fixtures::alphabet();
    let ids: Vec<MsgId> = alpha.sorted(alpha.ids()).into_iter().take(n).collect();
    let mut seen = HashSet::new();
    let cands: Vec<CoverCandidate> = raw
        .iter()
        .filter(|c| seen.insert((c.0, c.1)))
        .map(|&(a, b, s, f)| CoverCandidate {
            pair: (ids[a as usize], ids[b as usize]),
            score: s as f64 / 4.0,
            freq: f,
        })
        .collect();
    let cover = select_cover(&ids, &cands, &alpha);
    for &t in &ids {
        let covered = cover.selected.iter().any(|p| p.0 == t || p.1 == t);
        prop_assert!(covered ^ cover.uncovered.contains(&t));
    }
    let (size, score) = brute_force_cover(&ids, &cands).expect("empty selection covers nothing");
    let got: f64 = cover
        .selected
        .iter()
        .map(|p| cands.iter().find(|c| c.pair == *p).expect("selected from candidates").score)
        .sum();
    prop_assert_eq!(cover.selected.len(), size);
    prop_assert!(got >= score - 1e-9, "score {} below optimum {}", got, score);
    Ok(())
}

fn graph_invariants(g: &CausalityGraph, alpha: &Alphabet) -> Check {
    prop_assert!(g.is_acyclic());
    let nodes: HashSet<MsgId> = g.nodes.iter().copied().collect();
    for ((a, b), _) in g.edges() {
        prop_assert!(alpha.causal(a, b));
        prop_assert!(nodes.contains(&a) && nodes.contains(&b));
    }
    prop_assert!(g.roots.iter().all(|r| nodes.contains(r)));
    prop_assert!(g.terminals.iter().all(|t| nodes.contains(t)));
    Ok(())
}

/// Acyclicity and structural causality through build, prune and annotate.
pub fn check_graph(sys: &RandomSystem) -> Check {
    let set = sys.set();
    let roles = sys.roles().resolve(&set).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let local = local_mine(&set).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let g = build_causality_graph(&set, &roles);
    graph_invariants(&g, &set.alphabet)?;
    let pruned = prune_invalid_edges(&g, local.pruned(), &set.alphabet);
    graph_invariants(&pruned, &set.alphabet)?;
    let annotated = annotate_confidences(&pruned, &set, &local);
    graph_invariants(&annotated, &set.alphabet)?;
    for r in &g.roots {
        prop_assert!(roles.is_initial(*r));
    }
    Ok(())
}

/// Root-to-terminal paths by exhaustive search over an adjacency matrix.
pub fn brute_force_paths(g: &CausalityGraph) -> BTreeSet<Vec<MsgId>> {
    let n = g.nodes.len();
    let index: HashMap<MsgId, usize> = g.nodes.iter().enumerate().map(|(i, &m)| (m, i)).collect();
    let mut adj = vec![vec![false; n]; n];
    for ((a, b), _) in g.edges() {
        adj[index[&a]][index[&b]] = true;
    }
    let terminal: Vec<bool> = g.nodes.iter().map(|&m| g.is_terminal(m)).collect();
    let mut out = BTreeSet::new();
    let mut frontier: Vec<Vec<usize>> = g
        .roots
        .iter()
        .filter(|r| !g.is_terminal(**r))
        .map(|r| vec![index[r]])
        .collect();
    while let Some(p) = frontier.pop() {
        let last = *p.last().expect("non-empty");
        for next in 0..n {
            if adj[last][next] && !p.contains(&next) {
                let mut q = p.clone();
                q.push(next);
                if terminal[next] {
                    out.insert(q.iter().map(|&i| g.nodes[i]).collect());
                } else {
                    frontier.push(q);
                }
            }
        }
    }
    out
}

pub fn check_enumeration(sys: &RandomSystem) -> Check {
    let set = sys.set();
    let roles = sys.roles().resolve(&set).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let g = build_causality_graph(&set, &roles);
    prop_assume!(g.nodes.len() <= 10);
    let paths = enumerate_paths(&g, DEFAULT_PATH_CAP).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let set_of: BTreeSet<Vec<MsgId>> = paths.iter().cloned().collect();
    prop_assert_eq!(set_of.len(), paths.len(), "duplicate paths");
    prop_assert_eq!(set_of, brute_force_paths(&g));
    Ok(())
}

/// The annotated graph and finite candidate paths of a mining run.
pub fn mined_graph(labels: &[u32]) -> Option<(CausalityGraph, Vec<Vec<MsgId>>)> {
    let set = fixtures::labelled(labels);
    let run = mine(&set, &roles_for(labels), &MineOptions::default()).ok()?;
    let paths = run.global.pool.finite().map(|p| p.msgs.clone()).collect();
    Some((run.global.graph, paths))
}

/// Lowering one edge's confidence never lowers a path's energy.
pub fn check_energy_confidence(labels: &[u32], pick: prop::sample::Index, factor: f64) -> Check {
    let Some((mut g, paths)) = mined_graph(labels) else {
        return Ok(());
    };
    prop_assume!(!paths.is_empty());
    let path = pick.get(&paths).clone();
    let before = path_energy(&path, &g).energy;
    let edges: Vec<Pair> = path.windows(2).map(|w| (w[0], w[1])).collect();
    let (a, b) = *pick.get(&edges);
    let e = g.edge_mut(a, b).expect("path edge");
    e.fc *= factor;
    e.bc *= factor;
    let after = path_energy(&path, &g).energy;
    prop_assert!(after >= before - 1e-12, "{} -> {}", before, after);
    Ok(())
}

/// Removing matched instances from one edge never lowers a path's energy.
pub fn check_energy_support(labels: &[u32], pick: prop::sample::Index, removed: usize) -> Check {
    let Some((mut g, paths)) = mined_graph(labels) else {
        return Ok(());
    };
    prop_assume!(!paths.is_empty());
    let path = pick.get(&paths).clone();
    let before = path_energy(&path, &g).energy;
    let edges: Vec<Pair> = path.windows(2).map(|w| (w[0], w[1])).collect();
    let (a, b) = *pick.get(&edges);
    let e = g.edge_mut(a, b).expect("path edge");
    e.support = e.support.saturating_sub(removed);
    let after = path_energy(&path, &g).energy;
    prop_assert!(after >= before - 1e-12, "{} -> {}", before, after);
    Ok(())
}

pub fn generate_options() -> impl Strategy<Value = (bool, GenerateOptions)> {
    (
        any::<bool>(),
        1usize..=6,
        any::<u64>(),
        any::<bool>(),
        prop::option::of(1usize..=8),
    )
        .prop_map(|(large, instances, seed, rr, max_active)| {
            let opts = GenerateOptions {
                instances,
                seed,
                mode: if rr {
                    GenerateMode::RoundRobin
                } else {
                    GenerateMode::RandomInterleave
                },
                max_active,
            };
            (large, opts)
        })
}

/// Order preservation, count conservation and determinism of the generator.
pub fn check_generator(large: bool, opts: &GenerateOptions) -> Check {
    let profile = if large { Profile::Large } else { Profile::Small };
    let flows = builtin_flows(profile);
    let g = generate(&flows, opts).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let t = g.trace();
    let a = &g.truth.assignments;
    prop_assert_eq!(a.len(), t.len());
    for (i, asg) in a.iter().enumerate() {
        prop_assert_eq!(asg.pos, i);
        prop_assert_eq!(g.set.alphabet.get(t.msg_at(i)), &asg.msg);
    }
    let by_instance = g.truth.instance_paths();
    prop_assert_eq!(by_instance.len(), flows.len() * opts.instances);
    let mut total = 0;
    for ((flow, _), path) in &by_instance {
        let spec = flows.iter().find(|f| &f.id == flow).expect("known flow");
        prop_assert!(spec.paths().contains(path), "instance path is not a flow path");
        total += path.len();
    }
    prop_assert_eq!(total, t.len());
    let mut steps: HashMap<(&str, usize), usize> = HashMap::new();
    for asg in a {
        let next = steps.entry((asg.flow.as_str(), asg.instance)).or_insert(0);
        prop_assert_eq!(asg.step, *next, "instance events out of order");
        *next += 1;
    }
    let again = generate(&flows, opts).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert_eq!(
        render_trace(again.trace(), &again.set.alphabet),
        render_trace(t, &g.set.alphabet)
    );
    prop_assert_eq!(again.truth, g.truth);
    Ok(())
}

/// Conservation, one-instance-one-message, determinism and model soundness.
pub fn check_evaluation(labels: &[u32]) -> Check {
    let set = fixtures::labelled(labels);
    let cfg = roles_for(labels);
    let run = mine(&set, &cfg, &MineOptions::default()).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let t = &set.traces[0];
    for tr in &run.report.traces {
        prop_assert_eq!(tr.accepted.len() + tr.unaccepted.len(), tr.len);
        let mut owner = HashSet::new();
        for inst in &tr.instances {
            prop_assert_eq!(inst.positions.len(), inst.path.len());
            prop_assert!(inst.positions.windows(2).all(|w| w[0] < w[1]));
            for (k, &p) in inst.positions.iter().enumerate() {
                prop_assert_eq!(t.msg_at(p), inst.path[k]);
                prop_assert!(owner.insert(p), "position {} in two instances", p);
            }
        }
        let accepted: HashSet<usize> = tr.accepted.iter().copied().collect();
        prop_assert_eq!(owner, accepted);
    }
    for f in &run.model.flows {
        let p = run.global.pool.get(&f.msgs);
        prop_assert!(p.is_some_and(|p| p.is_finite()), "model flow outside the finite pool");
    }
    let again = mine(&set, &cfg, &MineOptions::default()).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let alpha = &set.alphabet;
    prop_assert_eq!(
        export::report_doc(&again.report, &again.model, alpha),
        export::report_doc(&run.report, &run.model, alpha)
    );
    prop_assert_eq!(
        export::model_doc(&again.model, alpha),
        export::model_doc(&run.model, alpha)
    );
    Ok(())
}

/// Largest number of events coverable by disjoint order-preserving instances
/// of `paths`, by exhaustive search over used-position masks.
pub fn oracle_accepted(trace: &[u32], paths: &[&[u32]]) -> usize {
    assert!(trace.len() <= 16, "oracle is exponential in the trace length");
    fn embed(
        trace: &[u32],
        rest: &[u32],
        from: usize,
        mask: u32,
        out: &mut Vec<u32>,
    ) {
        let Some((&head, tail)) = rest.split_first() else {
            out.push(mask);
            return;
        };
        for j in from..trace.len() {
            if mask & (1 << j) == 0 && trace[j] == head {
                embed(trace, tail, j + 1, mask | (1 << j), out);
            }
        }
    }
    fn best(trace: &[u32], paths: &[&[u32]], mask: u32, memo: &mut HashMap<u32, usize>) -> usize {
        let full = (1u32 << trace.len()) - 1;
        if mask == full {
            return 0;
        }
        if let Some(&v) = memo.get(&mask) {
            return v;
        }
        let i = (!mask).trailing_zeros() as usize;
        let mut v = best(trace, paths, mask | (1 << i), memo);
        for p in paths {
            if p[0] != trace[i] {
                continue;
            }
            let mut masks = Vec::new();
            embed(trace, &p[1..], i + 1, mask | (1 << i), &mut masks);
            for m in masks {
                v = v.max(p.len() + best(trace, paths, m, memo));
            }
        }
        memo.insert(mask, v);
        v
    }
    if trace.is_empty() {
        return 0;
    }
    best(trace, paths, 0, &mut HashMap::new())
}

/// Accepted events of the full pipeline on a labelled trace.
pub fn evaluator_accepted(labels: &[u32]) -> usize {
    let set = fixtures::labelled(labels);
    let run = mine(&set, &roles_for(labels), &MineOptions::default()).expect("mining succeeds");
    run.report.traces[0].accepted.len()
}

/// The evaluator never accepts more than the exhaustive oracle.
pub fn check_oracle_bound(labels: &[u32]) -> Check {
    let got = evaluator_accepted(labels);
    let best = oracle_accepted(labels, &READ_PATHS);
    prop_assert!(got <= best, "evaluator {} above oracle {} on {:?}", got, best, labels);
    Ok(())
}
