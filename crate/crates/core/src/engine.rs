//! Fixed-timestep trial state machine.
//!
//! A trial is a countdown followed by the reach sequence of one ring. Time is
//! kept as an integer logic-tick counter; every quantity that depends on time
//! is derived from the tick index, so two runs with the same seed produce the
//! same floating-point values on every platform.
//!
//! Per running tick the engine evaluates the robot reference, asks the human
//! source for `u_h`, blends them and tests the blended command against the
//! active target. Acquiring a target activates the next one. The robot starts
//! its next segment at activation, or on arriving at the segment start if it
//! is still traversing the previous segment; its reference never jumps.
//!
//! Log samples are taken at the log instants `j / log_rate`. The state of a
//! sample is the state of the latest logic tick at or before that instant, so
//! a non-integer rate ratio such as 500/40 still yields an exact log cadence.

use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::controller::{blend_unchecked, ReferenceTrajectory};
use crate::error::{Error, Result};
use crate::geometry::{check_gamma, reach_sequence, ring_targets, segments_for_ring, Condition, ReachSegment, RingSpec};
use crate::logfile::fixed6;
use crate::operators::{ActiveSegment, Observation, Operator, OperatorParams};
use crate::vec3::Vec3;

fn default_logic_rate() -> u32 {
    500
}
fn default_log_rate() -> u32 {
    40
}
fn default_countdown() -> f64 {
    5.0
}
fn default_gain() -> f64 {
    3.0
}
fn default_extent() -> f64 {
    0.045
}
fn default_watchdog() -> f64 {
    120.0
}
fn default_input_timeout() -> f64 {
    10.0
}

/// Where the human command comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum HumanSource {
    Simulated { params: OperatorParams },
    Live,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub condition: Condition,
    pub ring: RingSpec,
    #[serde(default = "default_logic_rate")]
    pub logic_rate_hz: u32,
    #[serde(default = "default_log_rate")]
    pub log_rate_hz: u32,
    #[serde(default = "default_countdown")]
    pub countdown_s: f64,
    /// Scaling from normalized pointer input to the task plane.
    #[serde(default = "default_gain")]
    pub input_gain: f64,
    /// Half-width of the pointer workspace before gain, meters.
    #[serde(default = "default_extent")]
    pub workspace_half_extent_m: f64,
    /// Running time after which the trial is aborted.
    #[serde(default = "default_watchdog")]
    pub max_duration_s: f64,
    /// Live mode only: abort when no input arrives for this long.
    #[serde(default = "default_input_timeout")]
    pub input_timeout_s: f64,
    pub seed: u64,
    pub human: HumanSource,
}

impl TrialConfig {
    /// Trial defaults for `ring` at autonomy `gamma` with a simulated operator.
    pub fn simulated(ring: RingSpec, gamma: f64, params: OperatorParams, seed: u64) -> Self {
        Self {
            condition: Condition { ring_id: ring.ring_id, gamma },
            ring,
            logic_rate_hz: default_logic_rate(),
            log_rate_hz: default_log_rate(),
            countdown_s: default_countdown(),
            input_gain: default_gain(),
            workspace_half_extent_m: default_extent(),
            max_duration_s: default_watchdog(),
            input_timeout_s: default_input_timeout(),
            seed,
            human: HumanSource::Simulated { params },
        }
    }

    pub fn live(ring: RingSpec, gamma: f64, seed: u64) -> Self {
        Self { human: HumanSource::Live, ..Self::simulated(ring, gamma, OperatorParams::idle(), seed) }
    }

    pub fn validate(&self) -> Result<()> {
        self.ring.validate()?;
        check_gamma(self.condition.gamma)?;
        if self.condition.ring_id != self.ring.ring_id {
            return Err(Error::Config(format!(
                "condition ring {} does not match ring spec {}",
                self.condition.ring_id, self.ring.ring_id
            )));
        }
        if self.log_rate_hz == 0 || self.logic_rate_hz < self.log_rate_hz {
            return Err(Error::Config(format!(
                "need logic rate >= log rate > 0, got {} and {}",
                self.logic_rate_hz, self.log_rate_hz
            )));
        }
        if !(self.countdown_s >= 0.0 && self.countdown_s.is_finite()) {
            return Err(Error::Config("countdown must be non-negative".into()));
        }
        if !(self.input_gain > 0.0) || !(self.workspace_half_extent_m > 0.0) {
            return Err(Error::Config("input gain and workspace extent must be positive".into()));
        }
        if !(self.max_duration_s > 0.0) || !(self.input_timeout_s > 0.0) {
            return Err(Error::Config("watchdog and input timeout must be positive".into()));
        }
        if let HumanSource::Simulated { params } = &self.human {
            params.validate(&[self.ring.id_bits()?])?;
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.logic_rate_hz as f64
    }

    /// Maps a normalized pointer position in `[-1, 1]²` into the task plane.
    /// Returns the position and whether either coordinate had to be clamped.
    pub fn map_pointer(&self, x: f64, y: f64) -> (Vec3, bool) {
        let (cx, cy) = (x.clamp(-1.0, 1.0), y.clamp(-1.0, 1.0));
        let clamped = cx != x || cy != y;
        let scale = self.input_gain * self.workspace_half_extent_m;
        (self.ring.center + Vec3::new(scale * cx, scale * cy, 0.0), clamped)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Countdown,
    Running,
    Done,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialSample {
    #[serde(rename = "t", serialize_with = "fixed6")]
    pub t_s: f64,
    pub phase: Phase,
    pub active_target: Option<usize>,
    pub u_h: Vec3,
    pub u_r: Vec3,
    pub u: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReachEvent {
    pub target_index: usize,
    #[serde(rename = "t", serialize_with = "fixed6")]
    pub t_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum TrialStatus {
    Complete,
    Aborted { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialLog {
    pub config: TrialConfig,
    pub samples: Vec<TrialSample>,
    pub reach_events: Vec<ReachEvent>,
    pub movement_times_s: Vec<f64>,
    pub status: TrialStatus,
    /// Live inputs that arrived outside `[-1, 1]²`.
    pub input_clamped: u64,
}

impl TrialLog {
    pub fn is_complete(&self) -> bool {
        self.status == TrialStatus::Complete
    }
}

/// Something the trial loop announces besides samples.
#[derive(Debug, Clone, PartialEq)]
pub enum TrialEvent {
    Go { t_s: f64 },
    Reach(ReachEvent),
    Done { t_s: f64 },
    Aborted { t_s: f64, reason: String },
}

/// Output of one logic tick.
#[derive(Debug, Default)]
pub struct TickReport {
    /// Log samples emitted this tick; a closing tick may emit two.
    pub samples: Vec<TrialSample>,
    pub events: Vec<TrialEvent>,
}

/// `true` iff `u` lies in the closed in-plane disc of diameter `width_m`.
pub fn detect_reach(u: Vec3, target_center: Vec3, width_m: f64) -> bool {
    u.planar_distance(target_center) <= width_m / 2.0
}

#[derive(Debug, Default)]
struct LatchState {
    value: Option<Vec3>,
    generation: u64,
    clamped: u64,
}

/// Last-write-wins hand-off of live human input to the trial loop.
#[derive(Debug, Clone, Default)]
pub struct InputLatch(Arc<Mutex<LatchState>>);

impl InputLatch {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&self, u_h: Vec3, clamped: bool) {
        let mut s = self.0.lock().expect("input latch poisoned");
        s.value = Some(u_h);
        s.generation += 1;
        s.clamped += u64::from(clamped);
    }

    /// Latest value, its write generation, and the clamp count so far.
    fn read(&self) -> (Option<Vec3>, u64, u64) {
        let s = self.0.lock().expect("input latch poisoned");
        (s.value, s.generation, s.clamped)
    }
}

enum Human {
    Simulated(Box<Operator>),
    Live { latch: InputLatch, generation: u64, last_input_tick: u64, clamped: u64 },
}

/// A trial in progress.
pub struct Trial {
    config: TrialConfig,
    targets: Vec<Vec3>,
    sequence: Vec<usize>,
    segments: Vec<ReachSegment>,
    human: Human,
    tick: u64,
    go_tick: u64,
    next_log: u64,
    /// Index into `segments` of the active reach.
    active: usize,
    activated_at: f64,
    robot: ReferenceTrajectory,
    u_h: Vec3,
    last: Option<TrialSample>,
    samples: Vec<TrialSample>,
    reach_events: Vec<ReachEvent>,
    status: Option<TrialStatus>,
}

impl Trial {
    /// Starts a trial with a simulated operator.
    pub fn new(config: TrialConfig) -> Result<Self> {
        let HumanSource::Simulated { params } = &config.human else {
            return Err(Error::Config("live trials need an input latch, use Trial::live".into()));
        };
        let params = params.clone();
        Self::build(config, |cfg, start| Human::Simulated(Box::new(Operator::new(params, cfg.seed, start))))
    }

    /// Starts a trial fed by `latch`.
    pub fn live(config: TrialConfig, latch: InputLatch) -> Result<Self> {
        if config.human != HumanSource::Live {
            return Err(Error::Config("Trial::live needs a live human source".into()));
        }
        let (_, generation, clamped) = latch.read();
        Self::build(config, |_, _| Human::Live { latch, generation, last_input_tick: 0, clamped })
    }

    fn build(config: TrialConfig, human: impl FnOnce(&TrialConfig, Vec3) -> Human) -> Result<Self> {
        config.validate()?;
        let targets = ring_targets(&config.ring);
        let sequence = reach_sequence(config.ring.num_targets, config.ring.step_angle_deg)?;
        let segments = segments_for_ring(&config.ring)?;
        let start = targets[sequence[0]];
        let go_tick = (config.countdown_s * config.logic_rate_hz as f64).round() as u64;
        let human = human(&config, start);
        Ok(Self {
            targets,
            sequence,
            segments,
            human,
            tick: 0,
            go_tick,
            next_log: 0,
            active: 0,
            activated_at: 0.0,
            robot: ReferenceTrajectory::hold(start, 0.0),
            u_h: start,
            last: None,
            samples: Vec::new(),
            reach_events: Vec::new(),
            status: None,
            config,
        })
    }

    pub fn config(&self) -> &TrialConfig {
        &self.config
    }

    pub fn targets(&self) -> &[Vec3] {
        &self.targets
    }

    pub fn sequence(&self) -> &[usize] {
        &self.sequence
    }

    pub fn is_finished(&self) -> bool {
        self.status.is_some()
    }

    pub fn current_tick(&self) -> u64 {
        self.tick
    }

    /// Time of the Go! instant, seconds from trial start.
    pub fn go_time_s(&self) -> f64 {
        self.time_of(self.go_tick)
    }

    fn time_of(&self, tick: u64) -> f64 {
        tick as f64 / self.config.logic_rate_hz as f64
    }

    fn log_tick(&self, j: u64) -> u64 {
        j * self.config.logic_rate_hz as u64 / self.config.log_rate_hz as u64
    }

    fn log_time(&self, j: u64) -> f64 {
        j as f64 / self.config.log_rate_hz as f64
    }

    fn activate(&mut self, seg: usize, t: f64) {
        self.active = seg;
        self.activated_at = t;
        let s = &self.segments[seg];
        let start_time = if seg == 0 { t } else { t.max(self.robot.end_time_s()) };
        self.robot = ReferenceTrajectory::new(s.start, s.goal, self.config.ring.robot_reach_time_s, start_time);
    }

    /// Aborts the trial from outside the loop, e.g. on client disconnect.
    pub fn abort(&mut self, reason: &str) -> TickReport {
        let mut report = TickReport::default();
        if self.status.is_none() {
            let t = self.time_of(self.tick);
            self.finish(TrialStatus::Aborted { reason: reason.to_string() }, &mut report);
            report.events.push(TrialEvent::Aborted { t_s: t, reason: reason.to_string() });
        }
        report
    }

    fn finish(&mut self, status: TrialStatus, report: &mut TickReport) {
        self.status = Some(status);
        if let Some(last) = self.last {
            let j = self.next_log;
            let done = TrialSample { t_s: self.log_time(j), phase: Phase::Done, active_target: None, ..last };
            self.next_log += 1;
            self.samples.push(done);
            report.samples.push(done);
        }
    }

    /// Advances one logic tick.
    pub fn step(&mut self) -> TickReport {
        let mut report = TickReport::default();
        if self.status.is_some() {
            return report;
        }
        let k = self.tick;
        let t = self.time_of(k);
        let gamma = self.config.condition.gamma;
        let running = k >= self.go_tick;

        if k == self.go_tick {
            let ev = ReachEvent { target_index: self.sequence[0], t_s: t };
            self.reach_events.push(ev);
            report.events.push(TrialEvent::Go { t_s: t });
            report.events.push(TrialEvent::Reach(ev));
            self.activate(0, t);
        }

        let u_r = self.robot.position(t);
        let active = running.then(|| ActiveSegment {
            index: self.active,
            segment: self.segments[self.active],
            activated_at_s: self.activated_at,
            robot: self.robot,
        });
        let dt = self.config.dt();
        let timeout_ticks = (self.config.input_timeout_s * self.config.logic_rate_hz as f64).round() as u64;
        let mut input_timed_out = false;
        self.u_h = match &mut self.human {
            Human::Simulated(op) => op.step(&Observation { t_s: t, gamma, u_r, active }, dt),
            Human::Live { latch, generation, last_input_tick, clamped } => {
                let (value, g, c) = latch.read();
                if g != *generation {
                    *generation = g;
                    *last_input_tick = k;
                }
                *clamped = c;
                if running && k.saturating_sub((*last_input_tick).max(self.go_tick)) > timeout_ticks {
                    input_timed_out = true;
                }
                value.unwrap_or(self.u_h)
            }
        };
        let u = blend_unchecked(u_r, self.u_h, gamma);
        let shown_target = running.then(|| self.segments[self.active].to_index);

        let mut finished = None;
        if running {
            let seg = self.segments[self.active];
            if detect_reach(u, seg.goal, seg.width_m) {
                let ev = ReachEvent { target_index: seg.to_index, t_s: t };
                self.reach_events.push(ev);
                report.events.push(TrialEvent::Reach(ev));
                if self.active + 1 == self.segments.len() {
                    finished = Some(TrialStatus::Complete);
                } else {
                    self.activate(self.active + 1, t);
                }
            }
            if finished.is_none() {
                if input_timed_out {
                    finished = Some(TrialStatus::Aborted { reason: "live input timeout".into() });
                } else if t - self.go_time_s() >= self.config.max_duration_s {
                    finished = Some(TrialStatus::Aborted { reason: "watchdog: maximum trial duration".into() });
                }
            }
        }

        let phase = if running { Phase::Running } else { Phase::Countdown };
        let state = TrialSample { t_s: t, phase, active_target: shown_target, u_h: self.u_h, u_r, u };
        if k == self.log_tick(self.next_log) {
            let sample = TrialSample { t_s: self.log_time(self.next_log), ..state };
            self.next_log += 1;
            self.samples.push(sample);
            report.samples.push(sample);
        }
        self.last = Some(state);
        self.tick += 1;

        if let Some(status) = finished {
            if let TrialStatus::Aborted { reason } = &status {
                report.events.push(TrialEvent::Aborted { t_s: t, reason: reason.clone() });
            } else {
                report.events.push(TrialEvent::Done { t_s: t });
            }
            self.finish(status, &mut report);
        }
        report
    }

    /// Consumes the trial and returns its log. Unfinished trials are marked aborted.
    pub fn into_log(mut self) -> TrialLog {
        if self.status.is_none() {
            self.abort("trial ended before completion");
        }
        let movement_times_s = self.reach_events.windows(2).map(|w| w[1].t_s - w[0].t_s).collect();
        let input_clamped = match &self.human {
            Human::Live { clamped, .. } => *clamped,
            Human::Simulated(_) => 0,
        };
        TrialLog {
            config: self.config,
            samples: self.samples,
            reach_events: self.reach_events,
            movement_times_s,
            status: self.status.expect("status set"),
            input_clamped,
        }
    }
}

/// Runs a simulated trial to completion or abort.
pub fn run_trial(config: &TrialConfig) -> Result<TrialLog> {
    let mut trial = Trial::new(config.clone())?;
    while !trial.is_finished() {
        trial.step();
    }
    Ok(trial.into_log())
}

/// One reach's movement time and whether analysis skips it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReachTime {
    /// 0 for the reach that follows the Go! instant.
    pub reach_index: usize,
    pub mt_s: f64,
    pub excluded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialMetrics {
    pub mean_human_speed_mps: f64,
    /// Mean signed lead of the robot reference over the human along the reach.
    pub mean_robot_lead_m: f64,
    pub reach_times: Vec<ReachTime>,
    /// Set when the log was aborted and metrics cover only the recorded span.
    pub partial: bool,
}

impl TrialMetrics {
    /// Movement times that enter analysis.
    pub fn analysis_times(&self) -> impl Iterator<Item = f64> + '_ {
        self.reach_times.iter().filter(|r| !r.excluded).map(|r| r.mt_s)
    }
}

/// Speed and lead statistics over running samples.
///
/// Human speed is taken over consecutive sample pairs that share the active
/// target, so the jump of a human source at target activation is not counted.
pub fn compute_metrics(log: &TrialLog, exclude_first: bool) -> Result<TrialMetrics> {
    let segments = segments_for_ring(&log.config.ring)?;
    let direction_to = |target: usize| {
        segments.iter().find(|s| s.to_index == target).map(ReachSegment::direction).unwrap_or(Vec3::ZERO)
    };

    let running: Vec<&TrialSample> = log.samples.iter().filter(|s| s.phase == Phase::Running).collect();
    let mut speed_sum = 0.0;
    let mut speed_n = 0usize;
    for w in running.windows(2) {
        let (a, b) = (w[0], w[1]);
        let dt = b.t_s - a.t_s;
        if a.active_target == b.active_target && dt > 0.0 {
            speed_sum += b.u_h.distance(a.u_h) / dt;
            speed_n += 1;
        }
    }
    let mut lead_sum = 0.0;
    let mut lead_n = 0usize;
    for s in &running {
        if let Some(target) = s.active_target {
            lead_sum += (s.u_r - s.u_h).dot(direction_to(target));
            lead_n += 1;
        }
    }
    let mean = |sum: f64, n: usize| if n > 0 { sum / n as f64 } else { 0.0 };
    let reach_times = log
        .movement_times_s
        .iter()
        .enumerate()
        .map(|(i, &mt_s)| ReachTime { reach_index: i, mt_s, excluded: exclude_first && i == 0 })
        .collect();
    Ok(TrialMetrics {
        mean_human_speed_mps: mean(speed_sum, speed_n),
        mean_robot_lead_m: mean(lead_sum, lead_n),
        reach_times,
        partial: !log.is_complete(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring(id: u32) -> RingSpec {
        RingSpec::reference_rings().into_iter().find(|r| r.ring_id == id).unwrap()
    }

    fn quick(mut cfg: TrialConfig) -> TrialConfig {
        cfg.countdown_s = 0.5;
        cfg
    }

    #[test]
    fn detect_reach_boundary_inclusive() {
        let c = Vec3::new(0.0, 0.4, 0.5);
        assert!(detect_reach(c, c, 0.02));
        assert!(detect_reach(c + Vec3::new(0.01, 0.0, 0.0), c, 0.02));
        assert!(!detect_reach(c + Vec3::new(0.01 + 1e-9, 0.0, 0.0), c, 0.02));
        // depth is ignored
        assert!(detect_reach(c + Vec3::new(0.0, 0.0, 0.3), c, 0.02));
    }

    #[test]
    fn full_autonomy_idle_completes() {
        let cfg = quick(TrialConfig::simulated(ring(1), 1.0, OperatorParams::idle(), 3));
        let log = run_trial(&cfg).unwrap();
        assert!(log.is_complete());
        assert_eq!(log.reach_events.len(), 9);
        assert_eq!(log.movement_times_s.len(), 8);
        let order: Vec<usize> = log.reach_events.iter().map(|e| e.target_index).collect();
        assert_eq!(order, vec![0, 4, 8, 3, 7, 2, 6, 1, 5]);
        assert_eq!(log.reach_events[0].t_s, 0.5);
        for mt in &log.movement_times_s[1..] {
            assert!((mt - 0.6).abs() < 1e-9, "{mt}");
        }
    }

    #[test]
    fn idle_below_threshold_hits_watchdog() {
        let mut cfg = quick(TrialConfig::simulated(ring(1), 0.8, OperatorParams::idle(), 3));
        cfg.max_duration_s = 5.0;
        let log = run_trial(&cfg).unwrap();
        assert!(matches!(log.status, TrialStatus::Aborted { .. }));
        assert_eq!(log.reach_events.len(), 1);
        let last = log.samples.last().unwrap();
        let seg = segments_for_ring(&cfg.ring).unwrap()[0];
        let expected = seg.start.lerp(seg.goal, 0.8);
        assert!(last.u.distance(expected) < 1e-12);
    }

    #[test]
    fn samples_at_log_rate() {
        let cfg = quick(TrialConfig::simulated(ring(2), 0.4, OperatorParams::expert(), 11));
        let log = run_trial(&cfg).unwrap();
        for (j, s) in log.samples.iter().enumerate() {
            assert!((s.t_s - j as f64 * 0.025).abs() < 1e-12);
        }
        for w in log.samples.windows(2) {
            assert!(w[1].t_s > w[0].t_s);
        }
        assert_eq!(log.samples.last().unwrap().phase, Phase::Done);
        let countdown = log.samples.iter().filter(|s| s.phase == Phase::Countdown).count();
        assert_eq!(countdown, 20);
    }

    #[test]
    fn live_trial_requires_latch() {
        let cfg = TrialConfig::live(ring(1), 0.4, 0);
        assert!(Trial::new(cfg.clone()).is_err());
        assert!(Trial::live(cfg, InputLatch::new()).is_ok());
    }

    #[test]
    fn live_trial_times_out_without_input() {
        let mut cfg = quick(TrialConfig::live(ring(1), 0.4, 0));
        cfg.input_timeout_s = 0.2;
        let mut trial = Trial::live(cfg, InputLatch::new()).unwrap();
        while !trial.is_finished() {
            trial.step();
        }
        let log = trial.into_log();
        assert_eq!(log.status, TrialStatus::Aborted { reason: "live input timeout".into() });
    }

    #[test]
    fn live_trial_follows_latched_input() {
        let cfg = quick(TrialConfig::live(ring(1), 0.0, 0));
        let latch = InputLatch::new();
        let mut trial = Trial::live(cfg.clone(), latch.clone()).unwrap();
        let targets = trial.targets().to_vec();
        let scale = cfg.input_gain * cfg.workspace_half_extent_m;
        let mut guard = 0;
        while !trial.is_finished() && guard < 100_000 {
            let next = trial.last.and_then(|s| s.active_target).unwrap_or(0);
            let p = targets[next] - cfg.ring.center;
            let (u_h, clamped) = cfg.map_pointer(p.x / scale, p.y / scale);
            latch.set(u_h, clamped);
            trial.step();
            guard += 1;
        }
        let log = trial.into_log();
        assert!(log.is_complete());
        assert_eq!(log.reach_events.len(), 9);
        assert_eq!(log.input_clamped, 0);
    }

    #[test]
    fn pointer_mapping() {
        let mut cfg = TrialConfig::live(ring(1), 0.4, 0);
        let (p, c) = cfg.map_pointer(0.0, 0.0);
        assert_eq!(p, cfg.ring.center);
        assert!(!c);
        cfg.workspace_half_extent_m = 0.13 / 3.0;
        let (p, _) = cfg.map_pointer(1.0, 0.0);
        assert!((p.x - cfg.ring.center.x - 0.13).abs() < 1e-12);
        assert_eq!(p.z, cfg.ring.center.z);
        let (p2, c2) = cfg.map_pointer(1.7, -3.0);
        assert!(c2);
        assert!((p2.x - p.x).abs() < 1e-15);
        assert!((p2.y - (cfg.ring.center.y - 0.13)).abs() < 1e-12);
    }

    #[test]
    fn idle_full_autonomy_metrics() {
        let cfg = quick(TrialConfig::simulated(ring(1), 1.0, OperatorParams::idle(), 3));
        let log = run_trial(&cfg).unwrap();
        let m = compute_metrics(&log, true).unwrap();
        assert_eq!(m.mean_human_speed_mps, 0.0);
        assert_eq!(m.analysis_times().count(), 7);
        assert!(!m.partial);
    }

    #[test]
    fn robot_leads_slow_human() {
        let cfg = quick(TrialConfig::simulated(ring(3), 0.0, OperatorParams::novice().noiseless(), 3));
        let m = compute_metrics(&run_trial(&cfg).unwrap(), true).unwrap();
        assert!(m.mean_robot_lead_m > 0.0, "{}", m.mean_robot_lead_m);
    }

    #[test]
    fn rejects_bad_rates() {
        let mut cfg = TrialConfig::simulated(ring(1), 0.0, OperatorParams::idle(), 0);
        cfg.log_rate_hz = 600;
        assert!(matches!(run_trial(&cfg), Err(Error::Config(_))));

        cfg.log_rate_hz = 0;
        assert!(run_trial(&cfg).is_err());
    }
}
