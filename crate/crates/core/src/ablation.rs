//! Reduced variants of the method for comparison.
//!
//! `NoSlicing` scores every structural pair on the whole trace, treats all of
//! them as valid and prunes nothing. `NoPositional` keeps the mined pool but
//! bounds each instance by the next terminal of any type and claims events
//! greedily in order.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::energy::RankedPathPool;
use crate::error::Result;
use crate::eval::{trace_report, AcceptanceReport, Instance, TraceReport};
use crate::message::MsgId;
use crate::par;
use crate::pipeline::{mine, MineOptions};
use crate::trace::{MessageRoleConfig, Roles, Trace, TraceSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationMode {
    NoSlicing,
    NoPositional,
}

impl FromStr for AblationMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "no_slicing" => Ok(AblationMode::NoSlicing),
            "no_positional" => Ok(AblationMode::NoPositional),
            other => Err(format!(
                "unknown ablation `{other}` (expected no_slicing or no_positional)"
            )),
        }
    }
}

impl fmt::Display for AblationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AblationMode::NoSlicing => "no_slicing",
            AblationMode::NoPositional => "no_positional",
        })
    }
}

pub fn ablate(set: &TraceSet, cfg: &MessageRoleConfig, mode: AblationMode) -> Result<AcceptanceReport> {
    let opts = MineOptions {
        ablation: Some(mode),
        ..MineOptions::default()
    };
    Ok(mine(set, cfg, &opts)?.report)
}

/// Evaluation without matched positions.
pub fn evaluate_no_positional(set: &TraceSet, pool: &RankedPathPool, roles: &Roles) -> AcceptanceReport {
    let mut prefixes: HashSet<&[MsgId]> = HashSet::new();
    for p in pool.finite() {
        for k in 1..=p.msgs.len() {
            prefixes.insert(&p.msgs[..k]);
        }
    }
    let traces: Vec<TraceReport> = par::map(&set.traces, |t| claim_greedily(t, pool, roles, &prefixes));
    AcceptanceReport::from_traces(traces)
}

fn claim_greedily(
    trace: &Trace,
    pool: &RankedPathPool,
    roles: &Roles,
    prefixes: &HashSet<&[MsgId]>,
) -> TraceReport {
    let n = trace.len();
    let mut consumed = vec![false; n];
    let mut instances = Vec::new();
    for i in 0..n {
        if consumed[i] || !roles.is_initial(trace.msg_at(i)) {
            continue;
        }
        let Some(bound) = (i + 1..n).find(|&p| !consumed[p] && roles.is_terminal(trace.msg_at(p))) else {
            continue;
        };
        let mut seq = vec![trace.msg_at(i)];
        let mut positions = vec![i];
        for p in (i + 1..=bound).filter(|&p| !consumed[p]) {
            seq.push(trace.msg_at(p));
            if prefixes.contains(seq.as_slice()) {
                positions.push(p);
            } else {
                seq.pop();
            }
        }
        if pool.get(&seq).is_some_and(|c| c.is_finite()) {
            for &p in &positions {
                consumed[p] = true;
            }
            instances.push(Instance { path: seq, positions });
        }
    }
    trace_report(trace, instances)
}
