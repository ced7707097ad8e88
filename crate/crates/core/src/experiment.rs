//! Simulated sweeps over the condition matrix.
//!
//! Every trial seed is derived from the base seed and the trial's cell
//! coordinates, so cells can run in any order or in parallel without
//! changing a single output byte.

use serde::{Deserialize, Serialize};

use crate::analysis::{fit_adapted_fitts, fit_fitts, MtObservation};
use crate::config::BenchConfig;
use crate::engine::{run_trial, HumanSource, TrialLog};
use crate::error::{Error, Result};
use crate::geometry::Condition;
use crate::operators::OperatorParams;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for one trial of a sweep.
pub fn derive_seed(base: u64, ring_id: u32, gamma_index: usize, repeat: u32) -> u64 {
    let mut s = splitmix64(base);
    for part in [ring_id as u64, gamma_index as u64, repeat as u64] {
        s = splitmix64(s ^ part);
    }
    s
}

/// One simulated trial in a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub condition: Condition,
    pub gamma_index: usize,
    pub repeat: u32,
    pub seed: u64,
}

/// All trials of a sweep, ring-major, then γ, then repeat.
pub fn sweep_cells(cfg: &BenchConfig, repeats: u32) -> Result<Vec<SweepCell>> {
    if repeats == 0 {
        return Err(Error::Config("repeats must be at least 1".into()));
    }
    let mut cells = Vec::new();
    for ring in &cfg.rings {
        for (gamma_index, &gamma) in cfg.gammas.iter().enumerate() {
            let condition = Condition::new(ring.ring_id, gamma)?;
            for repeat in 0..repeats {
                let seed = derive_seed(cfg.seed, ring.ring_id, gamma_index, repeat);
                cells.push(SweepCell { condition, gamma_index, repeat, seed });
            }
        }
    }
    Ok(cells)
}

/// Which fits the configured design supports.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DesignCheck {
    /// Why the adapted model cannot be fitted, if it cannot.
    pub adapted_refusal: Option<String>,
}

/// Checks the regressor rank of the design before anything is simulated.
///
/// A design with a single ID cannot support any fit and is an error. A
/// design with one γ level supports only the classic fit.
pub fn check_design(cfg: &BenchConfig) -> Result<DesignCheck> {
    let mut rows = Vec::new();
    for ring in &cfg.rings {
        let id_bits = ring.id_bits()?;
        for &gamma in &cfg.gammas {
            rows.push(MtObservation { id_bits, gamma, mt_s: 1.0, ring_id: ring.ring_id, trial_id: 0, reach_index: 0 });
        }
    }
    fit_fitts(&rows)?;
    let adapted_refusal = fit_adapted_fitts(&rows).err().map(|e| e.to_string());
    Ok(DesignCheck { adapted_refusal })
}

pub fn simulate_cell(cfg: &BenchConfig, cell: &SweepCell, operator: &OperatorParams) -> Result<TrialLog> {
    let tc = cfg.trial_config(cell.condition, HumanSource::Simulated { params: operator.clone() }, cell.seed)?;
    run_trial(&tc)
}

/// Validates the operator against the configured task IDs.
pub fn check_operator(cfg: &BenchConfig, operator: &OperatorParams) -> Result<()> {
    let ids = cfg.rings.iter().map(|r| r.id_bits()).collect::<Result<Vec<_>>>()?;
    operator.validate(&ids)
}

/// Runs the whole sweep sequentially, in `sweep_cells` order.
pub fn run_sweep(cfg: &BenchConfig, operator: &OperatorParams, repeats: u32) -> Result<Vec<TrialLog>> {
    check_design(cfg)?;
    check_operator(cfg, operator)?;
    sweep_cells(cfg, repeats)?.iter().map(|c| simulate_cell(cfg, c, operator)).collect()
}
