//! Simulated human operators.
//!
//! A simulated operator produces the human command `u_h` tick by tick so a
//! trial can run without a participant. The `fitts` operator times each reach
//! so that it *acquires* the target (crosses into the target circle)
//! `a_h + b_h * ID` seconds after motion onset, following a minimum-jerk
//! profile toward a landing point inside the target. The `sync` operator
//! additionally pulls its schedule toward the robot's arrival time, with
//! weight `sync_gain * γ`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::controller::ReferenceTrajectory;
use crate::error::{Error, Result};
use crate::geometry::ReachSegment;
use crate::vec3::Vec3;

/// Floor applied to planned acquisition times, seconds.
pub const MIN_REACH_DURATION_S: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OperatorKind {
    /// Holds the start of every segment.
    Idle,
    /// Minimum-jerk reaches timed by a Fitts' law.
    Fitts,
    /// Fitts reaches whose timing is drawn toward the robot schedule.
    Sync,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorParams {
    pub kind: OperatorKind,
    /// Fitts intercept, seconds.
    #[serde(default)]
    pub a_h: f64,
    /// Fitts slope, seconds per bit.
    #[serde(default)]
    pub b_h: f64,
    #[serde(default = "default_delay")]
    pub reaction_delay_s: f64,
    /// Landing scatter standard deviation as a fraction of the target radius.
    #[serde(default)]
    pub endpoint_noise_frac: f64,
    /// Duration jitter standard deviation as a fraction of the Fitts time.
    #[serde(default)]
    pub mt_noise_frac: f64,
    #[serde(default)]
    pub sync_gain: f64,
    /// Per-tick displacement cap expressed as a speed.
    #[serde(default = "default_speed_cap")]
    pub max_hand_speed_mps: f64,
}

fn default_delay() -> f64 {
    0.15
}

fn default_speed_cap() -> f64 {
    3.0
}

impl OperatorParams {
    pub fn idle() -> Self {
        Self {
            kind: OperatorKind::Idle,
            a_h: 0.0,
            b_h: 0.0,
            reaction_delay_s: 0.0,
            endpoint_noise_frac: 0.0,
            mt_noise_frac: 0.0,
            sync_gain: 0.0,
            max_hand_speed_mps: default_speed_cap(),
        }
    }

    pub fn novice() -> Self {
        Self {
            kind: OperatorKind::Fitts,
            a_h: 0.1,
            b_h: 0.45,
            reaction_delay_s: 0.2,
            endpoint_noise_frac: 0.3,
            mt_noise_frac: 0.08,
            sync_gain: 0.0,
            max_hand_speed_mps: default_speed_cap(),
        }
    }

    pub fn expert() -> Self {
        Self {
            kind: OperatorKind::Fitts,
            a_h: 0.1,
            b_h: 0.3,
            reaction_delay_s: 0.15,
            endpoint_noise_frac: 0.2,
            mt_noise_frac: 0.04,
            sync_gain: 0.0,
            max_hand_speed_mps: default_speed_cap(),
        }
    }

    pub fn synced() -> Self {
        Self { kind: OperatorKind::Sync, sync_gain: 1.0, ..Self::novice() }
    }

    /// Looks up one of the built-in presets.
    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "idle" => Some(Self::idle()),
            "novice" => Some(Self::novice()),
            "expert" => Some(Self::expert()),
            "synced" => Some(Self::synced()),
            _ => None,
        }
    }

    pub const PRESET_NAMES: [&'static str; 4] = ["idle", "novice", "expert", "synced"];

    /// Same operator with all randomness switched off.
    pub fn noiseless(mut self) -> Self {
        self.endpoint_noise_frac = 0.0;
        self.mt_noise_frac = 0.0;
        self
    }

    /// Fitts acquisition time before jitter.
    pub fn fitts_time(&self, id_bits: f64) -> f64 {
        self.a_h + self.b_h * id_bits
    }

    pub fn validate(&self, task_ids: &[f64]) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("operator: {m}")));
        if self.endpoint_noise_frac < 0.0 || self.mt_noise_frac < 0.0 || self.reaction_delay_s < 0.0 {
            return bad("noise fractions and reaction delay must be non-negative".into());
        }
        if !(0.0..=1.0).contains(&self.sync_gain) {
            return bad(format!("sync_gain must lie in [0, 1], got {}", self.sync_gain));
        }
        if !(self.max_hand_speed_mps > 0.0) {
            return bad("max_hand_speed_mps must be positive".into());
        }
        if self.kind != OperatorKind::Idle {
            if let Some(id) = task_ids.iter().find(|&&id| self.fitts_time(id) <= 0.0) {
                return bad(format!("a_h + b_h * ID must be positive, fails at ID = {id}"));
            }
        }
        Ok(())
    }
}

/// Planned acquisition time and landing point for one reach.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReachPlan {
    pub acquisition_s: f64,
    pub landing: Vec3,
}

/// Draws the timing and landing point of a reach.
pub fn plan_reach<R: Rng + ?Sized>(params: &OperatorParams, segment: &ReachSegment, rng: &mut R) -> ReachPlan {
    let mt_h = params.fitts_time(segment.id_bits);
    let jitter = sample_normal(rng, params.mt_noise_frac * mt_h.abs());
    let raw = mt_h + jitter;
    if raw < MIN_REACH_DURATION_S {
        log::debug!("reach duration {raw:.4} s floored to {MIN_REACH_DURATION_S} s");
    }
    let acquisition_s = raw.max(MIN_REACH_DURATION_S);

    let radius = segment.width_m / 2.0;
    let sigma = params.endpoint_noise_frac * radius;
    let landing = if sigma > 0.0 {
        loop {
            let dx = sample_normal(rng, sigma);
            let dy = sample_normal(rng, sigma);
            if dx.hypot(dy) <= radius {
                break segment.goal + Vec3::new(dx, dy, 0.0);
            }
        }
    } else {
        segment.goal
    };
    ReachPlan { acquisition_s, landing }
}

fn sample_normal<R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> f64 {
    if sigma > 0.0 {
        Normal::new(0.0, sigma).expect("finite sigma").sample(rng)
    } else {
        0.0
    }
}

/// Minimum-jerk position profile `10τ³ - 15τ⁴ + 6τ⁵` on `[0, 1]`.
pub fn minimum_jerk(tau: f64) -> f64 {
    let t = tau.clamp(0.0, 1.0);
    t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
}

/// Normalized velocity of [`minimum_jerk`].
pub fn minimum_jerk_rate(tau: f64) -> f64 {
    if !(0.0..=1.0).contains(&tau) {
        return 0.0;
    }
    30.0 * tau * tau * (1.0 - tau) * (1.0 - tau)
}

/// Inverse of [`minimum_jerk`] by bisection.
pub fn minimum_jerk_inverse(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if minimum_jerk(mid) < s {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Smallest fraction `s` of the path `from -> to` at which the point enters
/// the in-plane disc of `radius` about `center`. Assumes `to` lies inside.
fn entry_fraction(from: Vec3, to: Vec3, center: Vec3, radius: f64) -> f64 {
    let (dx, dy) = (from.x - center.x, from.y - center.y);
    let (vx, vy) = (to.x - from.x, to.y - from.y);
    let c = dx * dx + dy * dy - radius * radius;
    if c <= 0.0 {
        return 0.0;
    }
    let a = vx * vx + vy * vy;
    if a == 0.0 {
        return 1.0;
    }
    let b = 2.0 * (dx * vx + dy * vy);
    let disc = (b * b - 4.0 * a * c).max(0.0);
    ((-b - disc.sqrt()) / (2.0 * a)).clamp(0.0, 1.0)
}

/// One minimum-jerk movement in absolute time.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Motion {
    from: Vec3,
    to: Vec3,
    onset_s: f64,
    duration_s: f64,
}

impl Motion {
    fn position(&self, t: f64) -> Vec3 {
        self.from.lerp(self.to, minimum_jerk((t - self.onset_s) / self.duration_s))
    }
}

/// What the operator can see at one logic tick.
#[derive(Debug, Clone, Copy)]
pub struct Observation {
    pub t_s: f64,
    pub gamma: f64,
    pub u_r: Vec3,
    pub active: Option<ActiveSegment>,
}

#[derive(Debug, Clone, Copy)]
pub struct ActiveSegment {
    /// Position in the reach sequence, 0 for the first reach.
    pub index: usize,
    pub segment: ReachSegment,
    pub activated_at_s: f64,
    pub robot: ReferenceTrajectory,
}

#[derive(Debug, Clone, Copy)]
struct PendingReach {
    index: usize,
    plan: ReachPlan,
    onset_s: f64,
}

/// Mutable state of one simulated operator for one trial.
#[derive(Debug, Clone)]
pub struct Operator {
    params: OperatorParams,
    rng: ChaCha8Rng,
    u_h: Vec3,
    motion: Option<Motion>,
    pending: Option<PendingReach>,
    planned_index: Option<usize>,
}

impl Operator {
    pub fn new(params: OperatorParams, seed: u64, initial: Vec3) -> Self {
        Self {
            params,
            rng: ChaCha8Rng::seed_from_u64(seed),
            u_h: initial,
            motion: None,
            pending: None,
            planned_index: None,
        }
    }

    pub fn params(&self) -> &OperatorParams {
        &self.params
    }

    pub fn u_h(&self) -> Vec3 {
        self.u_h
    }

    /// Advances to the observation's time and returns the new `u_h`.
    pub fn step(&mut self, obs: &Observation, dt: f64) -> Vec3 {
        let Some(active) = obs.active else {
            return self.u_h;
        };
        if self.params.kind == OperatorKind::Idle {
            self.u_h = active.segment.start;
            return self.u_h;
        }

        if self.planned_index != Some(active.index) {
            let plan = plan_reach(&self.params, &active.segment, &mut self.rng);
            self.pending = Some(PendingReach {
                index: active.index,
                plan,
                onset_s: active.activated_at_s + self.params.reaction_delay_s,
            });
            self.planned_index = Some(active.index);
        }

        if let Some(p) = self.pending.filter(|p| obs.t_s >= p.onset_s && p.index == active.index) {
            self.pending = None;
            let from = self.position_at(p.onset_s);
            let radius = active.segment.width_m / 2.0;
            let tau_entry = minimum_jerk_inverse(entry_fraction(from, p.plan.landing, active.segment.goal, radius));
            let own_s = if tau_entry > 0.0 { p.plan.acquisition_s / tau_entry } else { p.plan.acquisition_s };
            let duration_s = match self.params.kind {
                OperatorKind::Sync => {
                    let w = self.params.sync_gain * obs.gamma;
                    let robot_s = (active.robot.end_time_s() - p.onset_s).max(MIN_REACH_DURATION_S);
                    (1.0 - w) * own_s + w * robot_s
                }
                _ => own_s,
            };
            self.motion = Some(Motion { from, to: p.plan.landing, onset_s: p.onset_s, duration_s });
        }

        let target = self.position_at(obs.t_s);
        let max_step = self.params.max_hand_speed_mps * dt;
        let delta = target - self.u_h;
        let len = delta.norm();
        self.u_h = if len > max_step { self.u_h + delta * (max_step / len) } else { target };
        self.u_h
    }

    fn position_at(&self, t: f64) -> Vec3 {
        match &self.motion {
            Some(m) => m.position(t),
            None => self.u_h,
        }
    }
}
