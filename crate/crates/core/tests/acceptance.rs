//! Acceptance gate for the benchmark core.
//!
//! Each criterion prints one `PASS` or `FAIL` line; the test fails if any
//! criterion fails. Oracles are computed here from first principles rather
//! than through the library paths they check.

use std::time::Instant;

use fittsbench::analysis::{fit_adapted_fitts, fit_fitts, fit_report, observations_from_logs, summarize, MtObservation};
use fittsbench::config::BenchConfig;
use fittsbench::controller::blend;
use fittsbench::engine::{run_trial, TrialConfig, TrialLog};
use fittsbench::experiment::run_sweep;
use fittsbench::geometry::{ring_targets, reach_sequence, segments_for_ring, RingSpec};
use fittsbench::logfile::{read_log_file, to_jsonl, write_log_file};
use fittsbench::operators::OperatorParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rings() -> Vec<RingSpec> {
    RingSpec::reference_rings()
}

fn quick(mut cfg: TrialConfig) -> TrialConfig {
    cfg.countdown_s = 0.5;
    cfg
}

fn reference_design() -> Outcome {
    let started = Instant::now();
    // (ring, R, d, A, ID) as tabulated.
    let table = [(1, 0.06, 0.02, 0.118, 2.788), (2, 0.06, 0.01, 0.118, 3.680), (3, 0.12, 0.02, 0.236, 3.680), (4, 0.12, 0.01, 0.236, 4.623)];
    let mut worst: f64 = 0.0;
    for (ring_id, r, d, a_tab, id_tab) in table {
        let spec = rings().into_iter().find(|s| s.ring_id == ring_id).unwrap();
        ensure(spec.radius_m == r && spec.target_diameter_m == d, || format!("ring {ring_id} defaults differ"))?;
        let pts = ring_targets(&spec);
        let seq = reach_sequence(spec.num_targets, spec.step_angle_deg).map_err(|e| e.to_string())?;
        let segs = segments_for_ring(&spec).map_err(|e| e.to_string())?;
        ensure(segs.len() == 8, || format!("ring {ring_id}: {} segments", segs.len()))?;
        for (k, seg) in segs.iter().enumerate() {
            let dx = pts[seq[k + 1]].x - pts[seq[k]].x;
            let dy = pts[seq[k + 1]].y - pts[seq[k]].y;
            let dz = pts[seq[k + 1]].z - pts[seq[k]].z;
            let chord = (dx * dx + dy * dy + dz * dz).sqrt();
            let id = (chord / d + 1.0).log2();
            for (got, want) in [(seg.amplitude_m, a_tab), (chord, a_tab), (seg.id_bits, id_tab), (id, id_tab)] {
                worst = worst.max((got - want).abs());
                ensure((got - want).abs() <= 1e-3, || format!("ring {ring_id} segment {k}: {got} vs {want}"))?;
            }
        }
    }
    let elapsed = started.elapsed();
    ensure(elapsed.as_secs_f64() < 1.0, || format!("took {elapsed:?}"))?;
    Ok(format!("max deviation {worst:.2e}, {elapsed:?}"))
}

fn blending_law() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_501);
    let mut worst: f64 = 0.0;
    for i in 0..10_000 {
        let mut v = || fittsbench::Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let (u_r, u_h) = (v(), v());
        let gamma: f64 = rng.random_range(0.0..=1.0);
        let u = blend(u_r, u_h, gamma).map_err(|e| e.to_string())?;
        let want = [
            gamma * u_r.x + (1.0 - gamma) * u_h.x,
            gamma * u_r.y + (1.0 - gamma) * u_h.y,
            gamma * u_r.z + (1.0 - gamma) * u_h.z,
        ];
        let dist = |a: [f64; 3], b: fittsbench::Vec3| ((a[0] - b.x).powi(2) + (a[1] - b.y).powi(2) + (a[2] - b.z).powi(2)).sqrt();
        let total = dist([u_r.x, u_r.y, u_r.z], u_h);
        let got = [u.x, u.y, u.z];
        let errs = [
            (got[0] - want[0]).abs(),
            (got[1] - want[1]).abs(),
            (got[2] - want[2]).abs(),
            (dist(got, u_h) - gamma * total).abs(),
            (dist(got, u_r) - (1.0 - gamma) * total).abs(),
        ];
        let e = errs.iter().fold(0.0_f64, |m, &x| m.max(x));
        worst = worst.max(e);
        ensure(e <= 1e-12, || format!("triple {i}: error {e:e}"))?;
    }
    Ok(format!("10000 triples, max error {worst:.2e}"))
}

fn idle_human_stopping() -> Outcome {
    let mut cases = 0;
    let mut reached_count = 0;
    for spec in rings() {
        let a = 2.0 * spec.radius_m * (80f64.to_radians()).sin();
        let w = spec.target_diameter_m;
        for step in 0..=10 {
            let gamma = step as f64 / 10.0;
            let predicted = gamma >= 1.0 - w / (2.0 * a);
            let mut cfg = quick(TrialConfig::simulated(spec.clone(), gamma, OperatorParams::idle(), step));
            cfg.max_duration_s = 3.0 * spec.robot_reach_time_s;
            let log = run_trial(&cfg).map_err(|e| e.to_string())?;
            // reach_events[0] is the pre-acquired start target.
            let reached = log.reach_events.len() >= 2;
            ensure(reached == predicted, || {
                format!("ring {} gamma {gamma}: simulated {reached}, predicted {predicted}", spec.ring_id)
            })?;
            cases += 1;
            reached_count += reached as usize;
        }
    }
    Ok(format!("{cases} cases agree ({reached_count} reached); ring 1 threshold {:.4}", 1.0 - 0.02 / (4.0 * 0.06 * 80f64.to_radians().sin())))
}

fn full_autonomy_timing() -> Outcome {
    let tick = 1.0 / 500.0;
    let mut worst = 0.0_f64;
    let mut worst_after_first = 0.0_f64;
    let mut failures = Vec::new();
    for spec in rings() {
        let cfg = quick(TrialConfig::simulated(spec.clone(), 1.0, OperatorParams::idle(), 0));
        let log = run_trial(&cfg).map_err(|e| e.to_string())?;
        ensure(log.movement_times_s.len() == 8, || format!("ring {}: {} MTs", spec.ring_id, log.movement_times_s.len()))?;
        for (i, mt) in log.movement_times_s.iter().enumerate() {
            let err = (mt - spec.robot_reach_time_s).abs();
            worst = worst.max(err);
            if i > 0 {
                worst_after_first = worst_after_first.max(err);
            }
            if err > tick + 1e-9 {
                failures.push(format!("ring {} reach {}: {mt:.3} s vs {}", spec.ring_id, i + 1, spec.robot_reach_time_s));
            }
        }
    }
    if failures.is_empty() {
        Ok(format!("32 reaches within one tick, max error {worst:.2e} s"))
    } else {
        Err(format!("{} (reaches 2-8 max error {worst_after_first:.2e} s)", failures.join("; ")))
    }
}

fn regression_recovery() -> Outcome {
    let cells: Vec<(f64, f64)> = rings()
        .iter()
        .flat_map(|r| {
            let id = r.id_bits().unwrap();
            [0.0, 0.4, 0.8].map(|g| (id, g))
        })
        .collect();
    let make = |c: [f64; 4]| -> Vec<MtObservation> {
        cells
            .iter()
            .enumerate()
            .map(|(i, &(id, g))| MtObservation {
                id_bits: id,
                gamma: g,
                mt_s: c[0] + c[1] * id + c[2] * g + c[3] * g * id,
                ring_id: (i / 3 + 1) as u32,
                trial_id: i as u64,
                reach_index: 1,
            })
            .collect()
    };
    let truth = [-0.28, 0.54, -0.08, -0.18];
    let fit = fit_adapted_fitts(&make(truth)).map_err(|e| e.to_string())?;
    let got = fit.coefficients();
    let err = got.iter().zip(truth).map(|(g, t)| (g - t).abs()).fold(0.0, f64::max);
    ensure(err <= 1e-9, || format!("coefficients {got:?}"))?;
    ensure((fit.r2 - 1.0).abs() <= 1e-12, || format!("r2 {}", fit.r2))?;

    let nested_truth = [0.2, 0.3, 0.0, 0.0];
    let nested = make(nested_truth);
    let fit = fit_adapted_fitts(&nested).map_err(|e| e.to_string())?;
    let nerr = fit.coefficients().iter().zip(nested_truth).map(|(g, t)| (g - t).abs()).fold(0.0, f64::max);
    ensure(nerr <= 1e-9, || format!("nested coefficients {:?}", fit.coefficients()))?;
    let zero: Vec<MtObservation> = nested.iter().filter(|o| o.gamma == 0.0).copied().collect();
    let classic = fit_fitts(&zero).map_err(|e| e.to_string())?;
    ensure((classic.a - fit.a).abs() <= 1e-9 && (classic.b - fit.b1).abs() <= 1e-9, || {
        format!("classic ({}, {}) vs adapted ({}, {})", classic.a, classic.b, fit.a, fit.b1)
    })?;
    Ok(format!("max coefficient error {err:.2e}, nested {nerr:.2e}"))
}

/// Slope, intercept and slope standard error by textbook formulas.
fn ols_line(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let sse: f64 = x.iter().zip(y).map(|(xi, yi)| (yi - a - b * xi).powi(2)).sum();
    (b, a, (sse / (n - 2.0) / sxx).sqrt())
}

fn human_only_fitts() -> Outcome {
    let base = OperatorParams::expert();
    let mut details = Vec::new();
    for mt_noise in [0.0, 0.05] {
        let params = OperatorParams { mt_noise_frac: mt_noise, endpoint_noise_frac: 0.0, ..base.clone() };
        let repeats = if mt_noise == 0.0 { 1 } else { 50 };
        let mut logs = Vec::new();
        for spec in rings() {
            for rep in 0..repeats {
                let seed = 1000 * spec.ring_id as u64 + rep;
                logs.push(run_trial(&quick(TrialConfig::simulated(spec.clone(), 0.0, params.clone(), seed))).map_err(|e| e.to_string())?);
            }
        }
        let obs = observations_from_logs(&logs, true, false).map_err(|e| e.to_string())?;
        let fit = fit_fitts(&obs).map_err(|e| e.to_string())?;
        let x: Vec<f64> = obs.iter().map(|o| o.id_bits).collect();
        let y: Vec<f64> = obs.iter().map(|o| o.mt_s).collect();
        let (b, _, se) = ols_line(&x, &y);
        ensure((b - fit.b).abs() < 1e-9, || format!("library slope {} vs oracle {b}", fit.b))?;
        let err = (fit.b - base.b_h).abs();
        if mt_noise == 0.0 {
            ensure(err < 1e-3, || format!("noiseless slope {} vs b_h {}", fit.b, base.b_h))?;
            details.push(format!("noiseless slope {:.5} (error {err:.1e})", fit.b));
        } else {
            ensure(err <= 3.0 * se, || format!("noisy slope {} vs b_h {}, SE {se}", fit.b, base.b_h))?;
            details.push(format!("noisy slope {:.4} ({:.2} SE, n={})", fit.b, err / se, obs.len()));
        }
    }
    Ok(details.join(", "))
}

fn interaction_effect() -> Outcome {
    let cfg = BenchConfig::default();
    let logs = run_sweep(&cfg, &OperatorParams::synced(), 10).map_err(|e| e.to_string())?;
    let obs = observations_from_logs(&logs, true, false).map_err(|e| e.to_string())?;
    let report = fit_report(&obs, true, false).map_err(|e| e.to_string())?;
    let fit = report.adapted.ok_or("adapted fit missing")?;
    ensure(fit.b3 < 0.0, || format!("b3 = {}", fit.b3))?;
    let table = summarize(&logs, true).map_err(|e| e.to_string())?;
    let mut means = Vec::new();
    for spec in rings() {
        let row: Vec<f64> = [0.0, 0.4, 0.8].iter().map(|&g| table.cell(spec.ring_id, g).map(|c| c.mt_mean_s).unwrap_or(f64::NAN)).collect();
        ensure(row.windows(2).all(|w| w[1] <= w[0]), || format!("ring {} mean MT {row:?}", spec.ring_id))?;
        means.push(format!("{:.3}/{:.3}/{:.3}", row[0], row[1], row[2]));
    }
    Ok(format!("b3 = {:.4}, mean MT by ring {}", fit.b3, means.join(" ")))
}

fn determinism() -> Outcome {
    let run = || -> Result<(Vec<String>, String), String> {
        let cfg = BenchConfig { seed: 77, ..BenchConfig::default() };
        let logs = run_sweep(&cfg, &OperatorParams::novice(), 2).map_err(|e| e.to_string())?;
        let obs = observations_from_logs(&logs, true, false).map_err(|e| e.to_string())?;
        let report = fit_report(&obs, true, false).map_err(|e| e.to_string())?;
        Ok((logs.iter().map(to_jsonl).collect(), serde_json::to_string(&report).unwrap()))
    };
    let (a_logs, a_report) = run()?;
    let (b_logs, b_report) = run()?;
    ensure(a_logs == b_logs, || "logs differ between runs".into())?;
    ensure(a_report == b_report, || "reports differ between runs".into())?;
    let bytes: usize = a_logs.iter().map(String::len).sum();
    Ok(format!("{} logs ({bytes} bytes) and report identical", a_logs.len()))
}

fn replay_integrity() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut written: Vec<TrialLog> = Vec::new();
    let mut n = 0;
    for (k, spec) in rings().into_iter().enumerate() {
        for (g, gamma) in [0.0, 0.4, 0.8, 1.0].into_iter().enumerate() {
            for op in ["novice", "expert", "synced"] {
                let params = OperatorParams::preset(op).unwrap();
                let cfg = quick(TrialConfig::simulated(spec.clone(), gamma, params, (k * 40 + g * 7) as u64));
                let log = run_trial(&cfg).map_err(|e| e.to_string())?;
                write_log_file(&dir.path().join(format!("trial_{n}.jsonl")), &log).map_err(|e| e.to_string())?;
                written.push(log);
                n += 1;
            }
        }
    }
    let mut samples = 0;
    let mut worst = 0.0_f64;
    for (i, original) in written.iter().enumerate() {
        let log = read_log_file(&dir.path().join(format!("trial_{i}.jsonl"))).map_err(|e| e.to_string())?;
        let gamma = log.config.condition.gamma;
        for s in &log.samples {
            for (u, ur, uh) in [(s.u.x, s.u_r.x, s.u_h.x), (s.u.y, s.u_r.y, s.u_h.y), (s.u.z, s.u_r.z, s.u_h.z)] {
                let e = (u - (gamma * ur + (1.0 - gamma) * uh)).abs();
                worst = worst.max(e);
                ensure(e <= 1e-9, || format!("trial {i} t={}: error {e:e}", s.t_s))?;
            }
            samples += 1;
        }
        ensure(log.samples.len() == original.samples.len(), || format!("trial {i} sample count changed"))?;
    }
    Ok(format!("{n} persisted trials, {samples} samples, max error {worst:.2e}"))
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 9] = [
        ("reference design", reference_design),
        ("blending law", blending_law),
        ("idle-human stopping", idle_human_stopping),
        ("full-autonomy timing", full_autonomy_timing),
        ("regression recovery", regression_recovery),
        ("human-only fitts law", human_only_fitts),
        ("interaction effect", interaction_effect),
        ("determinism", determinism),
        ("replay integrity", replay_integrity),
    ];
    let mut failed = Vec::new();
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                println!("FAIL {name}: {detail}");
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
