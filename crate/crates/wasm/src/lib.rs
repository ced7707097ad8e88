//! Browser bindings. Every export takes plain numbers or strings and returns
//! a JSON string, so the page needs no generated glue beyond wasm-bindgen's.
//!
//! Coordinates in the returned traces are `[x, y]` in meters relative to the
//! ring center, `y` up.

use fittsbench::analysis::{fit_report, observations_from_logs, predict_mt, summarize, CellSummary, FitReport};
use fittsbench::config::{parse_gamma_list, BenchConfig};
use fittsbench::engine::{run_trial, HumanSource, Phase, TrialStatus};
use fittsbench::experiment::run_sweep;
use fittsbench::geometry::{reach_sequence, ring_targets, Condition, RingSpec};
use fittsbench::Vec3;
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Gamma step of the predicted-MT curves.
pub const CURVE_POINTS: usize = 21;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RingLayout {
    pub ring_id: u32,
    pub radius_m: f64,
    pub target_diameter_m: f64,
    pub amplitude_m: f64,
    pub id_bits: f64,
    pub robot_reach_time_s: f64,
    pub targets: Vec<[f64; 2]>,
    pub sequence: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceFrame {
    pub t: f64,
    pub running: bool,
    pub active_target: Option<usize>,
    pub u: [f64; 2],
    pub u_h: [f64; 2],
    pub u_r: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trace {
    pub layout: RingLayout,
    pub gamma: f64,
    pub operator: String,
    pub frames: Vec<TraceFrame>,
    pub reach_times_s: Vec<f64>,
    pub movement_times_s: Vec<f64>,
    pub mean_mt_s: Option<f64>,
    pub aborted: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub gamma: f64,
    pub mt_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RingCurve {
    pub ring_id: u32,
    pub id_bits: f64,
    pub points: Vec<CurvePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub report: FitReport,
    pub cells: Vec<CellSummary>,
    pub curves: Vec<RingCurve>,
}

fn plane(v: Vec3, center: Vec3) -> [f64; 2] {
    [v.x - center.x, v.y - center.y]
}

fn layout_of(ring: &RingSpec) -> fittsbench::Result<RingLayout> {
    Ok(RingLayout {
        ring_id: ring.ring_id,
        radius_m: ring.radius_m,
        target_diameter_m: ring.target_diameter_m,
        amplitude_m: ring.amplitude_m()?,
        id_bits: ring.id_bits()?,
        robot_reach_time_s: ring.robot_reach_time_s,
        targets: ring_targets(ring).into_iter().map(|t| plane(t, ring.center)).collect(),
        sequence: reach_sequence(ring.num_targets, ring.step_angle_deg)?,
    })
}

pub fn ring_layout_value(ring_id: u32) -> fittsbench::Result<RingLayout> {
    let cfg = BenchConfig::default();
    layout_of(cfg.ring(ring_id)?)
}

pub fn simulate_value(ring_id: u32, gamma: f64, operator: &str, seed: u64) -> fittsbench::Result<Trace> {
    let cfg = BenchConfig::default();
    let params = cfg.operator(operator)?;
    let condition = Condition::new(ring_id, gamma)?;
    let tc = cfg.trial_config(condition, HumanSource::Simulated { params }, seed)?;
    let log = run_trial(&tc)?;
    let center = tc.ring.center;
    let frames = log
        .samples
        .iter()
        .map(|s| TraceFrame {
            t: s.t_s,
            running: s.phase == Phase::Running,
            active_target: s.active_target,
            u: plane(s.u, center),
            u_h: plane(s.u_h, center),
            u_r: plane(s.u_r, center),
        })
        .collect();
    let mts = &log.movement_times_s;
    Ok(Trace {
        layout: layout_of(&tc.ring)?,
        gamma,
        operator: operator.to_string(),
        frames,
        reach_times_s: log.reach_events.iter().map(|e| e.t_s).collect(),
        mean_mt_s: (!mts.is_empty()).then(|| mts.iter().sum::<f64>() / mts.len() as f64),
        movement_times_s: log.movement_times_s.clone(),
        aborted: match log.status {
            TrialStatus::Complete => None,
            TrialStatus::Aborted { reason } => Some(reason),
        },
    })
}

pub fn sweep_value(operator: &str, gammas: &str, repeats: u32, seed: u64) -> fittsbench::Result<SweepResult> {
    let mut cfg = BenchConfig { seed, ..BenchConfig::default() };
    if !gammas.trim().is_empty() {
        cfg.gammas = parse_gamma_list(gammas)?;
    }
    let params = cfg.operator(operator)?;
    let logs = run_sweep(&cfg, &params, repeats)?;
    let opts = &cfg.analysis;
    let obs = observations_from_logs(&logs, opts.exclude_first_reach, opts.aggregate_per_trial)?;
    let report = fit_report(&obs, opts.exclude_first_reach, opts.aggregate_per_trial)?;
    let cells = summarize(&logs, opts.exclude_first_reach)?.cells;
    let curves = match &report.adapted {
        Some(fit) => cfg
            .rings
            .iter()
            .map(|r| {
                let id = r.id_bits()?;
                let points = (0..CURVE_POINTS)
                    .map(|i| {
                        let gamma = i as f64 / (CURVE_POINTS - 1) as f64;
                        CurvePoint { gamma, mt_s: predict_mt(fit, id, gamma) }
                    })
                    .collect();
                Ok(RingCurve { ring_id: r.ring_id, id_bits: id, points })
            })
            .collect::<fittsbench::Result<_>>()?,
        None => Vec::new(),
    };
    Ok(SweepResult { report, cells, curves })
}

fn to_js<T: Serialize>(r: fittsbench::Result<T>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

/// Target positions, visiting order and difficulty of one reference ring.
#[wasm_bindgen(js_name = ringLayout)]
pub fn ring_layout(ring_id: u32) -> Result<String, JsError> {
    to_js(ring_layout_value(ring_id))
}

/// Runs one simulated trial and returns its 40 Hz trace.
#[wasm_bindgen(js_name = simulateTrial)]
pub fn simulate_trial(ring_id: u32, gamma: f64, operator: &str, seed: u32) -> Result<String, JsError> {
    to_js(simulate_value(ring_id, gamma, operator, u64::from(seed)))
}

/// Simulates every ring and gamma, fits both models and returns predicted
/// MT against gamma for each ring. `gammas` is a comma list; empty keeps the
/// default levels.
#[wasm_bindgen(js_name = sweepFit)]
pub fn sweep_fit(operator: &str, gammas: &str, repeats: u32, seed: u32) -> Result<String, JsError> {
    to_js(sweep_value(operator, gammas, repeats, u64::from(seed)))
}
