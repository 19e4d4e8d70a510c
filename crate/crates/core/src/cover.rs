//! Minimal high-confidence cover of an interface's message types by binary
//! patterns.
//!
//! Candidates are ranked by `fc + bc` (descending), then pair frequency
//! (descending), then message order of `(src, dst)`. A greedy pass over that
//! ranking, followed by removal of redundant picks, gives an initial cover.
//! A bounded branch-and-bound search then looks for a cover that is smaller,
//! or equally small with a higher total score. The search is exhaustive for
//! the handful of types a real interface carries; past the node budget the
//! best cover found so far is kept.

use std::cmp::Ordering;

use crate::message::{Alphabet, MsgId, Pair};

const NODE_BUDGET: usize = 200_000;
const SCORE_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoverCandidate {
    pub pair: Pair,
    pub score: f64,
    pub freq: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Cover {
    /// Selected pairs in rank order.
    pub selected: Vec<Pair>,
    /// Candidates not selected, in rank order.
    pub rejected: Vec<Pair>,
    /// Types no candidate touches.
    pub uncovered: Vec<MsgId>,
}

/// Sorts candidates into rank order.
pub fn rank(candidates: &mut [CoverCandidate], alphabet: &Alphabet) {
    candidates.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(Ordering::Equal)
            .then(b.freq.cmp(&a.freq))
            .then_with(|| alphabet.cmp(a.pair.0, b.pair.0))
            .then_with(|| alphabet.cmp(a.pair.1, b.pair.1))
    });
}

pub fn select_cover(types: &[MsgId], candidates: &[CoverCandidate], alphabet: &Alphabet) -> Cover {
    let mut ranked = candidates.to_vec();
    rank(&mut ranked, alphabet);

    // Local type indices.
    let idx = |m: MsgId| types.iter().position(|&t| t == m);
    let edges: Vec<(usize, usize)> = ranked
        .iter()
        .map(|c| {
            (
                idx(c.pair.0).expect("candidate source is a slice type"),
                idx(c.pair.1).expect("candidate destination is a slice type"),
            )
        })
        .collect();

    let mut coverable = vec![false; types.len()];
    for &(a, b) in &edges {
        coverable[a] = true;
        coverable[b] = true;
    }
    let uncovered: Vec<MsgId> = types
        .iter()
        .zip(&coverable)
        .filter(|(_, &c)| !c)
        .map(|(&t, _)| t)
        .collect();

    let scores: Vec<f64> = ranked.iter().map(|c| c.score).collect();
    let greedy = greedy_cover(&edges, &coverable);
    let mut search = Search {
        edges: &edges,
        scores: &scores,
        by_type: (0..types.len())
            .map(|t| {
                (0..edges.len())
                    .filter(|&e| edges[e].0 == t || edges[e].1 == t)
                    .collect()
            })
            .collect(),
        best: greedy.clone(),
        best_score: greedy.iter().map(|&e| scores[e]).sum(),
        nodes: 0,
    };
    let mut cover_count = vec![0usize; types.len()];
    let mut chosen = Vec::new();
    search.run(&coverable, &mut cover_count, &mut chosen);

    let mut picked = search.best;
    picked.sort_unstable();
    let selected = picked.iter().map(|&e| ranked[e].pair).collect();
    let rejected = (0..ranked.len())
        .filter(|e| picked.binary_search(e).is_err())
        .map(|e| ranked[e].pair)
        .collect();
    Cover {
        selected,
        rejected,
        uncovered,
    }
}

/// Greedy pass in rank order plus a reverse sweep that drops picks whose
/// endpoints are both covered by other picks.
fn greedy_cover(edges: &[(usize, usize)], coverable: &[bool]) -> Vec<usize> {
    let mut count = vec![0usize; coverable.len()];
    let mut picked = Vec::new();
    let target = coverable.iter().filter(|&&c| c).count();
    let mut covered = 0;
    for (e, &(a, b)) in edges.iter().enumerate() {
        if covered == target {
            break;
        }
        if count[a] == 0 || count[b] == 0 {
            for t in [a, b] {
                if count[t] == 0 {
                    covered += 1;
                }
                count[t] += 1;
            }
            picked.push(e);
        }
    }
    let mut keep = vec![true; picked.len()];
    for i in (0..picked.len()).rev() {
        let (a, b) = edges[picked[i]];
        if count[a] > 1 && count[b] > 1 {
            count[a] -= 1;
            count[b] -= 1;
            keep[i] = false;
        }
    }
    picked
        .into_iter()
        .zip(keep)
        .filter(|(_, k)| *k)
        .map(|(e, _)| e)
        .collect()
}

struct Search<'a> {
    edges: &'a [(usize, usize)],
    scores: &'a [f64],
    by_type: Vec<Vec<usize>>,
    best: Vec<usize>,
    best_score: f64,
    nodes: usize,
}

impl Search<'_> {
    fn better(&self, chosen: &[usize], score: f64) -> bool {
        match chosen.len().cmp(&self.best.len()) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => {
                if score > self.best_score + SCORE_EPS {
                    true
                } else if score < self.best_score - SCORE_EPS {
                    false
                } else {
                    let mut a = chosen.to_vec();
                    let mut b = self.best.clone();
                    a.sort_unstable();
                    b.sort_unstable();
                    a < b
                }
            }
        }
    }

    fn run(&mut self, coverable: &[bool], count: &mut [usize], chosen: &mut Vec<usize>) {
        self.nodes += 1;
        if self.nodes > NODE_BUDGET {
            return;
        }
        let open: Vec<usize> = (0..count.len())
            .filter(|&t| coverable[t] && count[t] == 0)
            .collect();
        if open.is_empty() {
            let score: f64 = chosen.iter().map(|&e| self.scores[e]).sum();
            if self.better(chosen, score) {
                self.best = chosen.clone();
                self.best_score = score;
            }
            return;
        }
        // Each pattern covers at most two open types.
        if chosen.len() + open.len().div_ceil(2) > self.best.len() {
            return;
        }
        let pivot = *open
            .iter()
            .min_by_key(|&&t| self.by_type[t].len())
            .expect("open is non-empty");
        for i in 0..self.by_type[pivot].len() {
            let e = self.by_type[pivot][i];
            let (a, b) = self.edges[e];
            count[a] += 1;
            count[b] += 1;
            chosen.push(e);
            self.run(coverable, count, chosen);
            chosen.pop();
            count[a] -= 1;
            count[b] -= 1;
        }
    }
}
