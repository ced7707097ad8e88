//! Fitts' law and adapted Fitts' law fits, plus per-condition summaries.
//!
//! The adapted model is
//!
//! ```text
//! MT = a + b1 ID + b2 γ + b3 (γ ID)
//! ```
//!
//! fitted by ordinary least squares on per-reach observations (or per-trial
//! means when aggregation is requested). The fit is the fixed-effects
//! projection of the model; no random-effect structure is estimated.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::engine::{compute_metrics, TrialLog};
use crate::error::{Error, Result};
use crate::logfile::SCHEMA_VERSION;
use crate::lstsq;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MtObservation {
    pub id_bits: f64,
    pub gamma: f64,
    pub mt_s: f64,
    pub ring_id: u32,
    pub trial_id: u64,
    pub reach_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FittsFit {
    pub a: f64,
    pub b: f64,
    pub r2: f64,
    pub n: usize,
}

impl FittsFit {
    pub fn predict(&self, id_bits: f64) -> f64 {
        self.a + self.b * id_bits
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptedFittsFit {
    pub a: f64,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub r2: f64,
    pub n: usize,
}

impl AdaptedFittsFit {
    /// Coefficients as `[a, b1, b2, b3]`.
    pub fn coefficients(&self) -> [f64; 4] {
        [self.a, self.b1, self.b2, self.b3]
    }

    /// A fit with the given coefficients and no data behind it.
    pub fn from_coefficients([a, b1, b2, b3]: [f64; 4]) -> Self {
        Self { a, b1, b2, b3, r2: f64::NAN, n: 0 }
    }
}

pub fn predict_mt(fit: &AdaptedFittsFit, id_bits: f64, gamma: f64) -> f64 {
    fit.a + fit.b1 * id_bits + fit.b2 * gamma + fit.b3 * gamma * id_bits
}

/// `1 - SS_res / SS_tot`.
pub fn r_squared(observed: &[f64], predicted: &[f64]) -> Result<f64> {
    if observed.len() != predicted.len() {
        return Err(Error::Domain("observed and predicted lengths differ".into()));
    }
    if observed.len() < 2 {
        return Err(Error::InsufficientData("r² needs at least two observations".into()));
    }
    let mean = observed.iter().sum::<f64>() / observed.len() as f64;
    let ss_tot: f64 = observed.iter().map(|y| (y - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(Error::InsufficientData("r² undefined: observations have zero variance".into()));
    }
    let ss_res: f64 = observed.iter().zip(predicted).map(|(y, p)| (y - p).powi(2)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// r² of a least-squares fit with intercept; zero when the response is constant.
fn fit_r2(y: &[f64], sse: f64) -> f64 {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    if ss_tot <= 1e-24 * mean * mean * y.len() as f64 {
        0.0
    } else {
        (1.0 - sse / ss_tot).clamp(0.0, 1.0)
    }
}

fn check_observations(obs: &[MtObservation]) -> Result<()> {
    for o in obs {
        if !(o.mt_s > 0.0) || !(o.id_bits > 0.0) || !(0.0..=1.0).contains(&o.gamma) {
            return Err(Error::Domain(format!(
                "observation out of range: mt {} s, id {} bits, gamma {}",
                o.mt_s, o.id_bits, o.gamma
            )));
        }
    }
    Ok(())
}

/// Classic Fitts' law `MT = a + b ID`.
pub fn fit_fitts(obs: &[MtObservation]) -> Result<FittsFit> {
    check_observations(obs)?;
    let y: Vec<f64> = obs.iter().map(|o| o.mt_s).collect();
    let id: Vec<f64> = obs.iter().map(|o| o.id_bits).collect();
    let ls = match lstsq::solve(&[vec![1.0; obs.len()], id], &["intercept", "ID"], &y) {
        Err(Error::InsufficientData(_)) => return Err(Error::RankDeficient { regressor: "ID" }),
        r => r?,
    };
    Ok(FittsFit { a: ls.coefficients[0], b: ls.coefficients[1], r2: fit_r2(&y, ls.sse()), n: obs.len() })
}

/// Adapted Fitts' law with autonomy and interaction terms.
pub fn fit_adapted_fitts(obs: &[MtObservation]) -> Result<AdaptedFittsFit> {
    Ok(fit_adapted_with_residuals(obs)?.0)
}

fn fit_adapted_with_residuals(obs: &[MtObservation]) -> Result<(AdaptedFittsFit, Vec<f64>)> {
    check_observations(obs)?;
    let y: Vec<f64> = obs.iter().map(|o| o.mt_s).collect();
    let cols = vec![
        vec![1.0; obs.len()],
        obs.iter().map(|o| o.id_bits).collect(),
        obs.iter().map(|o| o.gamma).collect(),
        obs.iter().map(|o| o.gamma * o.id_bits).collect(),
    ];
    let ls = match lstsq::solve(&cols, &["intercept", "ID", "gamma", "gamma*ID"], &y) {
        Err(Error::InsufficientData(m)) => return Err(Error::InsufficientData(m)),
        r => r?,
    };
    let c = &ls.coefficients;
    let fit = AdaptedFittsFit { a: c[0], b1: c[1], b2: c[2], b3: c[3], r2: fit_r2(&y, ls.sse()), n: obs.len() };
    Ok((fit, ls.residuals))
}

/// Per-reach movement-time observations from complete logs.
///
/// `trial_id` is the position of the log in `logs`. With `aggregate_per_trial`
/// each trial contributes one observation, the mean of its analysed reaches,
/// with `reach_index` set to the number of reaches averaged.
pub fn observations_from_logs(logs: &[TrialLog], exclude_first: bool, aggregate_per_trial: bool) -> Result<Vec<MtObservation>> {
    let mut out = Vec::new();
    for (trial_id, log) in logs.iter().enumerate().filter(|(_, l)| l.is_complete()) {
        let id_bits = log.config.ring.id_bits()?;
        let gamma = log.config.condition.gamma;
        let ring_id = log.config.ring.ring_id;
        let reaches: Vec<(usize, f64)> = log
            .movement_times_s
            .iter()
            .copied()
            .enumerate()
            .filter(|(i, _)| !(exclude_first && *i == 0))
            .collect();
        let obs = |reach_index, mt_s| MtObservation { id_bits, gamma, mt_s, ring_id, trial_id: trial_id as u64, reach_index };
        if aggregate_per_trial {
            if !reaches.is_empty() {
                let mean = reaches.iter().map(|r| r.1).sum::<f64>() / reaches.len() as f64;
                out.push(obs(reaches.len(), mean));
            }
        } else {
            out.extend(reaches.into_iter().map(|(i, mt)| obs(i, mt)));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualSummary {
    pub mean: f64,
    pub sd: f64,
    pub max_abs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaFit {
    pub gamma: f64,
    pub fit: Option<FittsFit>,
    pub error: Option<String>,
}

/// Everything the `fit` and `sweep` commands report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub schema_version: u32,
    pub n_observations: usize,
    pub exclude_first_reach: bool,
    pub aggregate_per_trial: bool,
    pub fitts_pooled: Option<FittsFit>,
    pub fitts_by_gamma: Vec<GammaFit>,
    pub adapted: Option<AdaptedFittsFit>,
    pub adapted_error: Option<String>,
    pub adapted_residuals: Option<ResidualSummary>,
}

pub fn fit_report(obs: &[MtObservation], exclude_first_reach: bool, aggregate_per_trial: bool) -> Result<FitReport> {
    if obs.is_empty() {
        return Err(Error::InsufficientData("no movement-time observations".into()));
    }
    let mut by_gamma: BTreeMap<u64, Vec<MtObservation>> = BTreeMap::new();
    for o in obs {
        by_gamma.entry(o.gamma.to_bits()).or_default().push(*o);
    }
    let fitts_by_gamma = by_gamma
        .values()
        .map(|group| match fit_fitts(group) {
            Ok(fit) => GammaFit { gamma: group[0].gamma, fit: Some(fit), error: None },
            Err(e) => GammaFit { gamma: group[0].gamma, fit: None, error: Some(e.to_string()) },
        })
        .collect();
    let (adapted, adapted_error, adapted_residuals) = match fit_adapted_with_residuals(obs) {
        Ok((fit, res)) => {
            let n = res.len() as f64;
            let mean = res.iter().sum::<f64>() / n;
            let sd = if res.len() > 1 {
                (res.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            let max_abs = res.iter().fold(0.0_f64, |m, r| m.max(r.abs()));
            (Some(fit), None, Some(ResidualSummary { mean, sd, max_abs }))
        }
        Err(e) => (None, Some(e.to_string()), None),
    };
    Ok(FitReport {
        schema_version: SCHEMA_VERSION,
        n_observations: obs.len(),
        exclude_first_reach,
        aggregate_per_trial,
        fitts_pooled: fit_fitts(obs).ok(),
        fitts_by_gamma,
        adapted,
        adapted_error,
        adapted_residuals,
    })
}

/// One (ring, γ) cell of the summary table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub ring_id: u32,
    pub gamma: f64,
    pub id_bits: f64,
    pub trials: usize,
    pub n: usize,
    pub mt_mean_s: f64,
    pub mt_sd_s: f64,
    pub mean_speed_mps: f64,
    pub mean_robot_lead_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryTable {
    pub cells: Vec<CellSummary>,
    pub warnings: Vec<String>,
}

impl SummaryTable {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for c in &self.cells {
            w.serialize(c).map_err(|e| Error::LogFormat(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::LogFormat(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv is utf-8"))
    }

    pub fn cell(&self, ring_id: u32, gamma: f64) -> Option<&CellSummary> {
        self.cells.iter().find(|c| c.ring_id == ring_id && c.gamma == gamma)
    }
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let sd = if xs.len() > 1 { (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() } else { 0.0 };
    (mean, sd)
}

/// Aggregates complete logs by (ring, γ). Aborted logs are skipped with a warning.
pub fn summarize(logs: &[TrialLog], exclude_first: bool) -> Result<SummaryTable> {
    #[derive(Default)]
    struct Acc {
        id_bits: f64,
        gamma: f64,
        mts: Vec<f64>,
        speeds: Vec<f64>,
        leads: Vec<f64>,
    }
    let mut warnings = Vec::new();
    let mut cells: BTreeMap<(u32, u64), Acc> = BTreeMap::new();
    for (i, log) in logs.iter().enumerate() {
        if !log.is_complete() {
            warnings.push(format!("trial {i} (ring {}, gamma {}) is partial and was skipped", log.config.ring.ring_id, log.config.condition.gamma));
            continue;
        }
        let m = compute_metrics(log, exclude_first)?;
        let gamma = log.config.condition.gamma;
        let acc = cells.entry((log.config.ring.ring_id, gamma.to_bits())).or_default();
        acc.id_bits = log.config.ring.id_bits()?;
        acc.gamma = gamma;
        acc.mts.extend(m.analysis_times());
        acc.speeds.push(m.mean_human_speed_mps);
        acc.leads.push(m.mean_robot_lead_m);
    }
    if cells.is_empty() {
        warnings.push("no complete trial logs; summary is empty".into());
    }
    let mut out: Vec<CellSummary> = cells
        .into_iter()
        .map(|((ring_id, _), acc)| {
            let (mt_mean_s, mt_sd_s) = if acc.mts.is_empty() { (f64::NAN, f64::NAN) } else { mean_sd(&acc.mts) };
            CellSummary {
                ring_id,
                gamma: acc.gamma,
                id_bits: acc.id_bits,
                trials: acc.speeds.len(),
                n: acc.mts.len(),
                mt_mean_s,
                mt_sd_s,
                mean_speed_mps: mean_sd(&acc.speeds).0,
                mean_robot_lead_m: mean_sd(&acc.leads).0,
            }
        })
        .collect();
    out.sort_by(|a, b| a.ring_id.cmp(&b.ring_id).then(a.gamma.total_cmp(&b.gamma)));
    Ok(SummaryTable { cells: out, warnings })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PlotRow {
    gamma: f64,
    ring_id: u32,
    id_bits: f64,
    mt_mean_s: f64,
    mt_fitts_s: Option<f64>,
    mt_adapted_s: Option<f64>,
}

/// MT against ID per γ with both model predictions, for external plotting.
pub fn plot_data_csv(summary: &SummaryTable, report: &FitReport) -> Result<String> {
    let mut rows: Vec<PlotRow> = summary
        .cells
        .iter()
        .map(|c| {
            let fitts = report
                .fitts_by_gamma
                .iter()
                .find(|g| g.gamma == c.gamma)
                .and_then(|g| g.fit)
                .map(|f| f.predict(c.id_bits));
            PlotRow {
                gamma: c.gamma,
                ring_id: c.ring_id,
                id_bits: c.id_bits,
                mt_mean_s: c.mt_mean_s,
                mt_fitts_s: fitts,
                mt_adapted_s: report.adapted.map(|f| predict_mt(&f, c.id_bits, c.gamma)),
            }
        })
        .collect();
    rows.sort_by(|a, b| a.gamma.total_cmp(&b.gamma).then(a.ring_id.cmp(&b.ring_id)));
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &rows {
        w.serialize(r).map_err(|e| Error::LogFormat(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::LogFormat(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}
