//! Seeded synthetic traces with known ground truth.
//!
//! Components are `cpu0`, `cpu1`, `cache`, `mem`, `bus` and `periph`. Every
//! interface carries a single request/response protocol:
//!
//! | flow | paths |
//! |------|-------|
//! | `cpu0_read` | `cpu0:cache:rd` hit, or miss via `cache:mem:rd` |
//! | `cpu1_read` | `cpu1:cache:rd` hit, or miss via `cache:mem:rd` |
//! | `cpu0_write` | `cpu0:bus:wr` posted, or through `bus:mem:wr` |
//! | `cpu1_write` | `cpu1:bus:wr` posted, or through `bus:mem:wr` |
//! | `dma_write` | `periph:bus:dma_wr` through `bus:mem:wr` |
//! | `writeback` | `cache:bus:wb` through `bus:mem:wr` |
//! | `irq0` | `periph:cpu0:irq` |
//! | `irq1` | `periph:cpu1:irq` |
//! | `dma_read` | `periph:cache:dma_rd` hit, or miss via `cache:mem:rd` |
//! | `burst` | `periph:mem:burst` |
//!
//! The small profile is the four CPU flows; the large profile is all ten.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::message::{Message, MsgId};
use crate::trace::{MessageRoleConfig, Trace, TraceSet};

/// A message flow: a DAG over messages with designated roots and sinks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowSpec {
    pub id: String,
    pub nodes: Vec<Message>,
    pub edges: BTreeSet<(usize, usize)>,
    pub roots: BTreeSet<usize>,
    pub sinks: BTreeSet<usize>,
}

impl FlowSpec {
    /// Union of the given root-to-sink paths.
    pub fn from_paths(id: &str, paths: &[Vec<Message>]) -> Result<Self> {
        let mut spec = FlowSpec {
            id: id.to_owned(),
            nodes: Vec::new(),
            edges: BTreeSet::new(),
            roots: BTreeSet::new(),
            sinks: BTreeSet::new(),
        };
        if paths.is_empty() {
            return Err(spec.err("no paths"));
        }
        for path in paths {
            if path.is_empty() {
                return Err(spec.err("empty path"));
            }
            let ids: Vec<usize> = path.iter().map(|m| spec.node(m)).collect();
            spec.roots.insert(ids[0]);
            spec.sinks.insert(*ids.last().expect("non-empty"));
            for w in ids.windows(2) {
                spec.edges.insert((w[0], w[1]));
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    fn node(&mut self, m: &Message) -> usize {
        match self.nodes.iter().position(|n| n == m) {
            Some(i) => i,
            None => {
                self.nodes.push(m.clone());
                self.nodes.len() - 1
            }
        }
    }

    fn err(&self, reason: &str) -> Error {
        Error::FlowSpec {
            id: self.id.clone(),
            reason: reason.to_owned(),
        }
    }

    fn succ(&self, n: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().filter(move |e| e.0 == n).map(|e| e.1)
    }

    /// Acyclic, and every node lies on a root-to-sink path.
    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        let mut indeg = vec![0; n];
        for &(_, b) in &self.edges {
            indeg[b] += 1;
        }
        let mut queue: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut seen = 0;
        while let Some(a) = queue.pop() {
            seen += 1;
            for b in self.succ(a).collect::<Vec<_>>() {
                indeg[b] -= 1;
                if indeg[b] == 0 {
                    queue.push(b);
                }
            }
        }
        if seen != n {
            return Err(self.err("graph has a cycle"));
        }
        let reach = |starts: &BTreeSet<usize>, forward: bool| {
            let mut mark = vec![false; n];
            let mut stack: Vec<usize> = starts.iter().copied().collect();
            while let Some(a) = stack.pop() {
                if !std::mem::replace(&mut mark[a], true) {
                    for &(x, y) in &self.edges {
                        let (from, to) = if forward { (x, y) } else { (y, x) };
                        if from == a {
                            stack.push(to);
                        }
                    }
                }
            }
            mark
        };
        let from_root = reach(&self.roots, true);
        let to_sink = reach(&self.sinks, false);
        if (0..n).any(|i| !(from_root[i] && to_sink[i])) {
            return Err(self.err("node off every root-to-sink path"));
        }
        Ok(())
    }

    /// Root-to-sink paths in root order, then successor order.
    pub fn paths(&self) -> Vec<Vec<Message>> {
        let mut out = Vec::new();
        for &r in &self.roots {
            let mut stack = vec![r];
            self.walk(&mut stack, &mut out);
        }
        out
    }

    fn walk(&self, stack: &mut Vec<usize>, out: &mut Vec<Vec<Message>>) {
        let last = *stack.last().expect("non-empty");
        if self.sinks.contains(&last) {
            out.push(stack.iter().map(|&i| self.nodes[i].clone()).collect());
        }
        for s in self.succ(last).collect::<Vec<_>>() {
            stack.push(s);
            self.walk(stack, out);
            stack.pop();
        }
    }

    pub fn root_messages(&self) -> impl Iterator<Item = &Message> {
        self.roots.iter().map(|&i| &self.nodes[i])
    }

    pub fn sink_messages(&self) -> impl Iterator<Item = &Message> {
        self.sinks.iter().map(|&i| &self.nodes[i])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    Small,
    Large,
}

impl FromStr for Profile {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "small" => Ok(Profile::Small),
            "large" => Ok(Profile::Large),
            other => Err(format!("unknown profile `{other}` (expected small or large)")),
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Profile::Small => "small",
            Profile::Large => "large",
        })
    }
}

fn req(s: &str, d: &str, c: &str) -> Message {
    Message::req(s, d, c)
}

fn resp(s: &str, d: &str, c: &str) -> Message {
    Message::resp(s, d, c)
}

fn flow(id: &str, paths: Vec<Vec<Message>>) -> FlowSpec {
    FlowSpec::from_paths(id, &paths).expect("builtin flows are well formed")
}

fn read(cpu: &str) -> FlowSpec {
    let r = req(cpu, "cache", "rd");
    let a = resp("cache", cpu, "rd");
    let miss = vec![r.clone(), req("cache", "mem", "rd"), resp("mem", "cache", "rd"), a.clone()];
    flow(&format!("{cpu}_read"), vec![vec![r, a], miss])
}

fn write(cpu: &str) -> FlowSpec {
    let r = req(cpu, "bus", "wr");
    let a = resp("bus", cpu, "wr");
    let through = vec![r.clone(), req("bus", "mem", "wr"), resp("mem", "bus", "wr"), a.clone()];
    flow(&format!("{cpu}_write"), vec![vec![r, a], through])
}

fn via_memory(id: &str, src: &str, cmd: &str) -> FlowSpec {
    flow(
        id,
        vec![vec![
            req(src, "bus", cmd),
            req("bus", "mem", "wr"),
            resp("mem", "bus", "wr"),
            resp("bus", src, cmd),
        ]],
    )
}

fn pair(id: &str, src: &str, dst: &str, cmd: &str) -> FlowSpec {
    flow(id, vec![vec![req(src, dst, cmd), resp(dst, src, cmd)]])
}

pub fn builtin_flows(profile: Profile) -> Vec<FlowSpec> {
    let mut flows = vec![read("cpu0"), read("cpu1"), write("cpu0"), write("cpu1")];
    if profile == Profile::Large {
        let r = req("periph", "cache", "dma_rd");
        let a = resp("cache", "periph", "dma_rd");
        let miss = vec![r.clone(), req("cache", "mem", "rd"), resp("mem", "cache", "rd"), a.clone()];
        flows.extend([
            via_memory("dma_write", "periph", "dma_wr"),
            via_memory("writeback", "cache", "wb"),
            pair("irq0", "periph", "cpu0", "irq"),
            pair("irq1", "periph", "cpu1", "irq"),
            flow("dma_read", vec![vec![r, a], miss]),
            pair("burst", "periph", "mem", "burst"),
        ]);
    }
    flows
}

/// Roots as initial messages, sinks as terminal messages.
pub fn builtin_roles(flows: &[FlowSpec]) -> MessageRoleConfig {
    MessageRoleConfig::new(
        flows.iter().flat_map(|f| f.root_messages().cloned()),
        flows.iter().flat_map(|f| f.sink_messages().cloned()),
    )
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenerateMode {
    /// Each step emits the next message of a uniformly chosen active instance.
    #[default]
    RandomInterleave,
    /// Active instances emit one message each in turn.
    RoundRobin,
}

impl FromStr for GenerateMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "random_interleave" | "random" => Ok(GenerateMode::RandomInterleave),
            "round_robin" => Ok(GenerateMode::RoundRobin),
            other => Err(format!(
                "unknown mode `{other}` (expected random_interleave or round_robin)"
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GenerateOptions {
    pub instances: usize,
    pub seed: u64,
    pub mode: GenerateMode,
    /// At most this many instances in flight; `None` starts all at once.
    /// Instances are admitted in a seeded shuffled order.
    pub max_active: Option<usize>,
}

impl GenerateOptions {
    pub fn new(instances: usize, seed: u64) -> Self {
        GenerateOptions {
            instances,
            seed,
            mode: GenerateMode::RandomInterleave,
            max_active: None,
        }
    }
}

/// Which instance emitted one trace event.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub pos: usize,
    pub flow: String,
    pub instance: usize,
    pub step: usize,
    pub msg: Message,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GroundTruth {
    pub assignments: Vec<Assignment>,
}

impl GroundTruth {
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for a in &self.assignments {
            out.push_str(&serde_json::to_string(a).expect("assignment serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let assignments = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<std::result::Result<_, _>>()?;
        Ok(GroundTruth { assignments })
    }

    /// Paths of every instance keyed by `(flow, instance)`.
    pub fn instance_paths(&self) -> BTreeMap<(String, usize), Vec<Message>> {
        let mut out: BTreeMap<(String, usize), Vec<(usize, Message)>> = BTreeMap::new();
        for a in &self.assignments {
            out.entry((a.flow.clone(), a.instance))
                .or_default()
                .push((a.step, a.msg.clone()));
        }
        out.into_iter()
            .map(|(k, mut v)| {
                v.sort_by_key(|(s, _)| *s);
                (k, v.into_iter().map(|(_, m)| m).collect())
            })
            .collect()
    }

    /// Distinct paths that were instantiated at least once.
    pub fn distinct_paths(&self) -> BTreeSet<Vec<Message>> {
        self.instance_paths().into_values().collect()
    }
}

/// A single generated trace and its ground truth.
#[derive(Clone, Debug)]
pub struct Generated {
    pub set: TraceSet,
    pub truth: GroundTruth,
}

impl Generated {
    pub fn trace(&self) -> &Trace {
        &self.set.traces[0]
    }
}

struct Instance {
    flow: usize,
    number: usize,
    path: Vec<Message>,
    next: usize,
}

pub fn generate(flows: &[FlowSpec], opts: &GenerateOptions) -> Result<Generated> {
    if flows.is_empty() {
        return Err(Error::NoFlows);
    }
    if opts.instances == 0 || opts.max_active == Some(0) {
        return Err(Error::NoInstances);
    }
    for f in flows {
        f.validate()?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let paths: Vec<Vec<Vec<Message>>> = flows.iter().map(FlowSpec::paths).collect();
    let mut pending: Vec<Instance> = Vec::with_capacity(flows.len() * opts.instances);
    for (fi, ps) in paths.iter().enumerate() {
        for number in 0..opts.instances {
            pending.push(Instance {
                flow: fi,
                number,
                path: ps[rng.gen_range(0..ps.len())].clone(),
                next: 0,
            });
        }
    }
    let window = match opts.max_active {
        Some(w) => {
            pending.shuffle(&mut rng);
            w
        }
        None => pending.len(),
    };
    let total: usize = pending.iter().map(|i| i.path.len()).sum();
    pending.reverse();
    let mut active: Vec<Instance> = Vec::new();
    let mut set = TraceSet::new();
    let mut symbols: Vec<MsgId> = Vec::with_capacity(total);
    let mut truth = GroundTruth {
        assignments: Vec::with_capacity(total),
    };
    let mut turn = 0usize;
    loop {
        while active.len() < window {
            match pending.pop() {
                Some(i) => active.push(i),
                None => break,
            }
        }
        if active.is_empty() {
            break;
        }
        let k = match opts.mode {
            GenerateMode::RandomInterleave => rng.gen_range(0..active.len()),
            GenerateMode::RoundRobin => turn % active.len(),
        };
        let inst = &mut active[k];
        let msg = inst.path[inst.next].clone();
        truth.assignments.push(Assignment {
            pos: symbols.len(),
            flow: flows[inst.flow].id.clone(),
            instance: inst.number,
            step: inst.next,
            msg: msg.clone(),
        });
        symbols.push(set.alphabet.intern(msg));
        inst.next += 1;
        if inst.next == inst.path.len() {
            // Keep the relative order of the others for round robin.
            active.remove(k);
        } else {
            turn = k + 1;
        }
    }
    set.traces.push(Trace::new("synthetic", symbols));
    Ok(Generated { set, truth })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::msg;

    #[test]
    fn profiles() {
        let small = builtin_flows(Profile::Small);
        assert_eq!(small.len(), 4);
        for f in &small {
            for r in f.root_messages() {
                assert!(r.src == "cpu0" || r.src == "cpu1");
            }
        }
        let large = builtin_flows(Profile::Large);
        assert_eq!(large.len(), 10);
        assert!(large.iter().all(|f| f.validate().is_ok()));
        let ids: BTreeSet<&str> = large.iter().map(|f| f.id.as_str()).collect();
        assert_eq!(ids.len(), 10);
    }

    #[test]
    fn reference_read_flows_are_included() {
        let paths: BTreeSet<Vec<Message>> = builtin_flows(Profile::Small)
            .iter()
            .flat_map(FlowSpec::paths)
            .collect();
        for p in [vec![1, 2], vec![1, 5, 6, 2], vec![3, 4], vec![3, 5, 6, 4]] {
            assert!(paths.contains(&p.into_iter().map(msg).collect::<Vec<_>>()));
        }
    }

    #[test]
    fn each_interface_has_one_protocol() {
        let mut by_iface: BTreeMap<crate::message::InterfaceId, BTreeSet<String>> = BTreeMap::new();
        for f in builtin_flows(Profile::Large) {
            for m in &f.nodes {
                by_iface.entry(m.interface()).or_default().insert(m.cmd.clone());
            }
        }
        assert!(by_iface.values().all(|cmds| cmds.len() == 1));
    }

    #[test]
    fn cyclic_spec_is_rejected() {
        let a = msg(1);
        let b = msg(2);
        let err = FlowSpec::from_paths("loop", &[vec![a.clone(), b.clone(), a]]).unwrap_err();
        assert!(err.to_string().contains("cycle"));
    }

    #[test]
    fn zero_instances_is_an_error() {
        let flows = builtin_flows(Profile::Small);
        assert!(matches!(
            generate(&flows, &GenerateOptions::new(0, 1)),
            Err(Error::NoInstances)
        ));
        assert!(matches!(generate(&[], &GenerateOptions::new(1, 1)), Err(Error::NoFlows)));
    }

    #[test]
    fn window_of_one_is_sequential() {
        let flows = vec![
            FlowSpec::from_paths("a", &[[1, 2].map(msg).to_vec()]).unwrap(),
            FlowSpec::from_paths("b", &[[3, 5, 6, 4].map(msg).to_vec()]).unwrap(),
        ];
        let mut opts = GenerateOptions::new(1, 11);
        opts.max_active = Some(1);
        let g = generate(&flows, &opts).unwrap();
        let a = &g.truth.assignments;
        assert_eq!(a.len(), 6);
        for w in a.windows(2) {
            if w[0].flow != w[1].flow {
                assert_eq!(w[1].step, 0);
            }
        }
    }

    #[test]
    fn round_robin_alternates() {
        let flows = vec![FlowSpec::from_paths("a", &[[1, 2].map(msg).to_vec()]).unwrap()];
        let mut opts = GenerateOptions::new(2, 3);
        opts.mode = GenerateMode::RoundRobin;
        let g = generate(&flows, &opts).unwrap();
        let steps: Vec<usize> = g.truth.assignments.iter().map(|a| a.step).collect();
        assert_eq!(steps, vec![0, 0, 1, 1]);
    }

    #[test]
    fn truth_round_trips() {
        let g = generate(&builtin_flows(Profile::Small), &GenerateOptions::new(3, 5)).unwrap();
        let back = GroundTruth::from_jsonl(&g.truth.to_jsonl()).unwrap();
        assert_eq!(back, g.truth);
        assert_eq!(g.truth.instance_paths().len(), 12);
    }
}
