//! The end-to-end mining run: local mining, global mining, evaluation.

use crate::ablation::{evaluate_no_positional, AblationMode};
use crate::energy::{global_mine, GlobalMiningResult};
use crate::error::Result;
use crate::eval::{evaluate, AcceptanceReport, FlowModel};
use crate::graph::DEFAULT_PATH_CAP;
use crate::local::{global_patterns, local_mine, LocalMiningResult};
use crate::trace::{MessageRoleConfig, Roles, TraceSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MineOptions {
    pub path_cap: usize,
    pub ablation: Option<AblationMode>,
}

impl Default for MineOptions {
    fn default() -> Self {
        MineOptions {
            path_cap: DEFAULT_PATH_CAP,
            ablation: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MiningRun {
    pub roles: Roles,
    pub local: LocalMiningResult,
    pub global: GlobalMiningResult,
    pub report: AcceptanceReport,
    pub model: FlowModel,
}

pub fn mine(set: &TraceSet, cfg: &MessageRoleConfig, opts: &MineOptions) -> Result<MiningRun> {
    let roles = cfg.resolve(set)?;
    let local = match opts.ablation {
        Some(AblationMode::NoSlicing) => global_patterns(set)?,
        _ => local_mine(set)?,
    };
    let global = global_mine(set, &local, &roles, opts.path_cap)?;
    let (report, model) = match opts.ablation {
        Some(AblationMode::NoPositional) => {
            let report = evaluate_no_positional(set, &global.pool, &roles);
            let model = FlowModel::from_report(&report, &global.pool, &set.alphabet);
            (report, model)
        }
        _ => evaluate(set, &global.pool, &local, &roles),
    };
    Ok(MiningRun {
        roles,
        local,
        global,
        report,
        model,
    })
}
