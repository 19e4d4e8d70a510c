//! JSON, CSV and DOT renderings of mining results.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::energy::RankedPathPool;
use crate::eval::{AcceptanceReport, FlowModel};
use crate::graph::CausalityGraph;
use crate::local::{BinaryPattern, LocalMiningResult, Scope};
use crate::message::{Alphabet, MsgId};

fn render(alphabet: &Alphabet, msgs: &[MsgId]) -> Vec<String> {
    alphabet.render_seq(msgs)
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowDoc {
    pub messages: Vec<String>,
    pub length: usize,
    pub instances: usize,
    /// `null` for infinite energy.
    pub energy: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelDoc {
    pub flows: Vec<FlowDoc>,
}

pub fn model_doc(model: &FlowModel, alphabet: &Alphabet) -> ModelDoc {
    ModelDoc {
        flows: model
            .flows
            .iter()
            .map(|f| FlowDoc {
                messages: render(alphabet, &f.msgs),
                length: f.msgs.len(),
                instances: f.instances,
                energy: finite(f.energy),
            })
            .collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub path_length: usize,
    pub instance_count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceDoc {
    pub messages: Vec<String>,
    pub positions: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceDoc {
    pub id: String,
    pub length: usize,
    pub ratio: f64,
    pub accepted_positions: Vec<usize>,
    pub unaccepted_positions: Vec<usize>,
    pub instances: Vec<InstanceDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportDoc {
    /// Accepted events over all events.
    pub aggregate_ratio: f64,
    /// Mean of per-trace ratios.
    pub mean_ratio: f64,
    pub model_size: usize,
    pub total_messages: usize,
    pub accepted_messages: usize,
    pub histogram: Vec<HistogramRow>,
    pub traces: Vec<TraceDoc>,
}

pub fn histogram_rows(histogram: &BTreeMap<usize, usize>) -> Vec<HistogramRow> {
    histogram
        .iter()
        .map(|(&path_length, &instance_count)| HistogramRow {
            path_length,
            instance_count,
        })
        .collect()
}

pub fn report_doc(report: &AcceptanceReport, model: &FlowModel, alphabet: &Alphabet) -> ReportDoc {
    ReportDoc {
        aggregate_ratio: report.aggregate_ratio,
        mean_ratio: report.mean_ratio,
        model_size: model.len(),
        total_messages: report.traces.iter().map(|t| t.len).sum(),
        accepted_messages: report.traces.iter().map(|t| t.accepted.len()).sum(),
        histogram: histogram_rows(&report.histogram),
        traces: report
            .traces
            .iter()
            .map(|t| TraceDoc {
                id: t.id.clone(),
                length: t.len,
                ratio: t.ratio,
                accepted_positions: t.accepted.clone(),
                unaccepted_positions: t.unaccepted.clone(),
                instances: t
                    .instances
                    .iter()
                    .map(|i| InstanceDoc {
                        messages: render(alphabet, &i.path),
                        positions: i.positions.clone(),
                    })
                    .collect(),
            })
            .collect(),
    }
}

/// `path_length,instance_count` rows sorted by length.
pub fn histogram_csv(rows: &[HistogramRow]) -> String {
    let mut sorted = rows.to_vec();
    sorted.sort_by_key(|r| r.path_length);
    let mut out = String::from("path_length,instance_count\n");
    for r in sorted {
        writeln!(out, "{},{}", r.path_length, r.instance_count).expect("write to string");
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternDoc {
    pub src: String,
    pub dst: String,
    pub fc: f64,
    pub bc: f64,
    pub freq: usize,
    pub scope: Scope,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternsDoc {
    pub valid: Vec<PatternDoc>,
    pub invalid: Vec<PatternDoc>,
    pub suppressed: Vec<PatternDoc>,
    pub uncovered: Vec<String>,
}

pub fn patterns_doc(local: &LocalMiningResult, alphabet: &Alphabet) -> PatternsDoc {
    let doc = |ps: &[BinaryPattern]| -> Vec<PatternDoc> {
        ps.iter()
            .map(|p| PatternDoc {
                src: alphabet.get(p.src).to_string(),
                dst: alphabet.get(p.dst).to_string(),
                fc: p.fc,
                bc: p.bc,
                freq: p.freq,
                scope: p.scope,
            })
            .collect()
    };
    PatternsDoc {
        valid: doc(&local.valid),
        invalid: doc(&local.invalid),
        suppressed: doc(&local.suppressed),
        uncovered: local
            .uncovered
            .iter()
            .map(|(_, m)| alphabet.get(*m).to_string())
            .collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathDoc {
    pub messages: Vec<String>,
    pub energy: Option<f64>,
    pub confidence_term: f64,
    pub support_term: Option<f64>,
    pub distance_term: f64,
}

pub fn pool_doc(pool: &RankedPathPool, alphabet: &Alphabet) -> Vec<PathDoc> {
    pool.paths
        .iter()
        .map(|p| PathDoc {
            messages: render(alphabet, &p.msgs),
            energy: finite(p.energy),
            confidence_term: p.terms.confidence,
            support_term: finite(p.terms.support),
            distance_term: p.terms.distance,
        })
        .collect()
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Causality graph with `fc/bc` edge labels; valid-pattern edges are bold,
/// cross-interface edges dashed.
pub fn graph_dot(g: &CausalityGraph, alphabet: &Alphabet) -> String {
    let mut out = String::from("digraph causality {\n  rankdir=LR;\n  node [shape=box];\n");
    for &n in &g.nodes {
        let shape = if g.roots.contains(&n) {
            " peripheries=2"
        } else if g.is_terminal(n) {
            " style=rounded"
        } else {
            ""
        };
        writeln!(out, "  {}[{}];", quote(&alphabet.get(n).to_string()), shape.trim()).expect("write");
    }
    for &a in &g.nodes {
        for &b in g.successors(a) {
            let e = g.edge(a, b).expect("successor edge");
            let style = if e.valid { "bold" } else { "dashed" };
            writeln!(
                out,
                "  {} -> {} [label=\"{:.2}/{:.2}\" style={}];",
                quote(&alphabet.get(a).to_string()),
                quote(&alphabet.get(b).to_string()),
                e.fc,
                e.bc,
                style
            )
            .expect("write");
        }
    }
    out.push_str("}\n");
    out
}

/// Union of the model's flows; edge labels count accepted instances.
pub fn model_dot(model: &FlowModel, alphabet: &Alphabet) -> String {
    let mut edges: BTreeMap<(String, String), usize> = BTreeMap::new();
    for f in &model.flows {
        for w in f.msgs.windows(2) {
            *edges
                .entry((alphabet.get(w[0]).to_string(), alphabet.get(w[1]).to_string()))
                .or_insert(0) += f.instances;
        }
    }
    let mut out = String::from("digraph model {\n  rankdir=LR;\n  node [shape=box];\n");
    for ((a, b), n) in edges {
        writeln!(out, "  {} -> {} [label=\"{}\"];", quote(&a), quote(&b), n).expect("write");
    }
    out.push_str("}\n");
    out
}
