//! Path energy and the ranked path pool.
//!
//! The energy of a root-to-terminal path `P` with edges `e_1 .. e_k` is
//!
//! ```text
//! E(P) = (1/k) * sum(-log2(conf(e_i)))
//!      + -log2(VBP / |P|)
//!      + (1/k) * sum(d(e_i))
//! ```
//!
//! where `conf(e)` is the mean of forward and backward confidence, `VBP` is
//! the number of matched valid-pattern instances over all edges of the path,
//! `|P|` is the number of messages, and `d(e)` is the mean positional gap of
//! the edge's matched pairs. A path with no valid-pattern support has
//! infinite energy. Lower is more plausible.

use std::cmp::Ordering;
use std::collections::HashMap;

use serde::Serialize;

use crate::error::Result;
use crate::graph::{annotate_confidences, build_filtered, enumerate_paths, CausalityGraph};
use crate::local::LocalMiningResult;
use crate::message::{Alphabet, MsgId};
use crate::par;
use crate::trace::{Roles, TraceSet};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct EnergyTerms {
    pub confidence: f64,
    pub support: f64,
    pub distance: f64,
}

impl EnergyTerms {
    pub fn total(&self) -> f64 {
        if self.support.is_infinite() {
            f64::INFINITY
        } else {
            self.confidence + self.support + self.distance
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CandidatePath {
    pub msgs: Vec<MsgId>,
    pub energy: f64,
    pub terms: EnergyTerms,
    /// Matched valid-pattern instances along the path.
    pub vbp: usize,
}

impl CandidatePath {
    pub fn len(&self) -> usize {
        self.msgs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.msgs.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.energy.is_finite()
    }

    pub fn edges(&self) -> impl Iterator<Item = (MsgId, MsgId)> + '_ {
        self.msgs.windows(2).map(|w| (w[0], w[1]))
    }
}

/// Energy of `msgs` over an annotated graph. Every consecutive pair must be
/// an edge of `g`.
pub fn path_energy(msgs: &[MsgId], g: &CausalityGraph) -> CandidatePath {
    let k = msgs.len().saturating_sub(1);
    let mut conf = 0.0;
    let mut dist = 0.0;
    let mut vbp = 0;
    for w in msgs.windows(2) {
        let e = g
            .edge(w[0], w[1])
            .expect("path edges belong to the graph");
        conf += -e.confidence().log2();
        dist += e.gap.unwrap_or(0.0);
        if e.valid {
            vbp += e.support;
        }
    }
    let terms = if k == 0 || vbp == 0 {
        EnergyTerms {
            confidence: if k == 0 { 0.0 } else { conf / k as f64 },
            support: f64::INFINITY,
            distance: if k == 0 { 0.0 } else { dist / k as f64 },
        }
    } else {
        EnergyTerms {
            confidence: conf / k as f64,
            support: -(vbp as f64 / msgs.len() as f64).log2(),
            distance: dist / k as f64,
        }
    };
    CandidatePath {
        msgs: msgs.to_vec(),
        energy: terms.total(),
        terms,
        vbp,
    }
}

/// Candidate paths by ascending energy; ties go to the longer path, then to
/// the smaller message sequence.
#[derive(Clone, Debug, Default)]
pub struct RankedPathPool {
    pub paths: Vec<CandidatePath>,
    index: HashMap<Vec<MsgId>, usize>,
}

pub fn rank_order(a: &CandidatePath, b: &CandidatePath, alphabet: &Alphabet) -> Ordering {
    a.energy
        .total_cmp(&b.energy)
        .then(b.msgs.len().cmp(&a.msgs.len()))
        .then_with(|| alphabet.cmp_seq(&a.msgs, &b.msgs))
}

impl RankedPathPool {
    pub fn new(mut paths: Vec<CandidatePath>, alphabet: &Alphabet) -> Self {
        paths.sort_by(|a, b| rank_order(a, b, alphabet));
        let index = paths
            .iter()
            .enumerate()
            .map(|(i, p)| (p.msgs.clone(), i))
            .collect();
        RankedPathPool { paths, index }
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn position(&self, msgs: &[MsgId]) -> Option<usize> {
        self.index.get(msgs).copied()
    }

    pub fn get(&self, msgs: &[MsgId]) -> Option<&CandidatePath> {
        self.position(msgs).map(|i| &self.paths[i])
    }

    pub fn finite(&self) -> impl Iterator<Item = &CandidatePath> {
        self.paths.iter().filter(|p| p.is_finite())
    }
}

#[derive(Clone, Debug)]
pub struct GlobalMiningResult {
    /// Pruned and annotated causality graph.
    pub graph: CausalityGraph,
    pub pool: RankedPathPool,
}

/// Builds the pruned graph, annotates it, enumerates and ranks its paths.
pub fn global_mine(
    set: &TraceSet,
    local: &LocalMiningResult,
    roles: &Roles,
    path_cap: usize,
) -> Result<GlobalMiningResult> {
    let graph = build_filtered(
        &set.alphabet,
        set.traces.iter().map(|t| t.symbols()),
        roles,
        |p| !local.is_pruned(p),
    );
    let graph = annotate_confidences(&graph, set, local);
    let paths = enumerate_paths(&graph, path_cap)?;
    let scored = par::map(&paths, |p| path_energy(p, &graph));
    Ok(GlobalMiningResult {
        pool: RankedPathPool::new(scored, &set.alphabet),
        graph,
    })
}
