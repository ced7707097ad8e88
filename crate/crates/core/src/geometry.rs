//! Ring task layout, reach sequences and the experimental condition matrix.
//!
//! Targets sit on a circle in a vertical plane of constant depth. Index 0 is
//! the topmost target and indices increase clockwise as seen by the operator.
//! A trial visits the targets in a star pattern: each reach jumps a fixed
//! number of target slots, so every reach on a ring has the same chord length
//! and therefore the same index of difficulty.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vec3::Vec3;

/// Ring center used when a configuration does not give one.
pub const DEFAULT_CENTER: Vec3 = Vec3::new(0.0, 0.4, 0.5);

/// Number of targets on every ring of the reference design.
pub const DEFAULT_NUM_TARGETS: usize = 9;

/// Central angle between consecutive targets of a reach sequence.
pub const DEFAULT_STEP_ANGLE_DEG: f64 = 160.0;

/// Index of difficulty in bits: `log2(A / W + 1)`.
pub fn index_of_difficulty(amplitude_m: f64, width_m: f64) -> Result<f64> {
    if !(amplitude_m > 0.0 && amplitude_m.is_finite()) {
        return Err(Error::Domain(format!("amplitude must be positive, got {amplitude_m}")));
    }
    if !(width_m > 0.0 && width_m.is_finite()) {
        return Err(Error::Domain(format!("width must be positive, got {width_m}")));
    }
    Ok((amplitude_m / width_m + 1.0).log2())
}

/// One ring of circular targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingSpec {
    pub ring_id: u32,
    pub radius_m: f64,
    pub target_diameter_m: f64,
    #[serde(default = "default_num_targets")]
    pub num_targets: usize,
    #[serde(default = "default_step_angle")]
    pub step_angle_deg: f64,
    #[serde(default = "default_center")]
    pub center: Vec3,
    pub robot_reach_time_s: f64,
}

fn default_num_targets() -> usize {
    DEFAULT_NUM_TARGETS
}

fn default_step_angle() -> f64 {
    DEFAULT_STEP_ANGLE_DEG
}

fn default_center() -> Vec3 {
    DEFAULT_CENTER
}

impl RingSpec {
    pub fn new(ring_id: u32, radius_m: f64, target_diameter_m: f64, robot_reach_time_s: f64) -> Self {
        Self {
            ring_id,
            radius_m,
            target_diameter_m,
            num_targets: DEFAULT_NUM_TARGETS,
            step_angle_deg: DEFAULT_STEP_ANGLE_DEG,
            center: DEFAULT_CENTER,
            robot_reach_time_s,
        }
    }

    /// The four rings of the reference design.
    pub fn reference_rings() -> Vec<RingSpec> {
        vec![
            RingSpec::new(1, 0.06, 0.02, 0.6),
            RingSpec::new(2, 0.06, 0.01, 0.6),
            RingSpec::new(3, 0.12, 0.02, 1.2),
            RingSpec::new(4, 0.12, 0.01, 1.2),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(format!("ring {}: {msg}", self.ring_id)));
        if !(self.radius_m > 0.0 && self.radius_m.is_finite()) {
            return bad(format!("radius must be positive, got {}", self.radius_m));
        }
        if !(self.target_diameter_m > 0.0 && self.target_diameter_m < 2.0 * self.radius_m) {
            return bad(format!(
                "target diameter must lie in (0, 2R) = (0, {}), got {}",
                2.0 * self.radius_m,
                self.target_diameter_m
            ));
        }
        if self.num_targets < 3 {
            return bad(format!("need at least 3 targets, got {}", self.num_targets));
        }
        if !(self.robot_reach_time_s > 0.0 && self.robot_reach_time_s.is_finite()) {
            return bad(format!("robot reach time must be positive, got {}", self.robot_reach_time_s));
        }
        if !self.center.is_finite() {
            return bad("center must be finite".into());
        }
        step_slots(self.num_targets, self.step_angle_deg).map(|_| ())
    }

    /// Angular spacing between adjacent targets, degrees.
    pub fn spacing_deg(&self) -> f64 {
        360.0 / self.num_targets as f64
    }

    /// Step angle after snapping to a whole number of target slots.
    pub fn snapped_step_deg(&self) -> Result<f64> {
        Ok(step_slots(self.num_targets, self.step_angle_deg)? as f64 * self.spacing_deg())
    }

    /// Chord between consecutive sequence targets: `2 R sin(θ / 2)`.
    pub fn amplitude_m(&self) -> Result<f64> {
        let theta = self.snapped_step_deg()?.to_radians();
        Ok(2.0 * self.radius_m * (theta / 2.0).sin())
    }

    pub fn width_m(&self) -> f64 {
        self.target_diameter_m
    }

    pub fn id_bits(&self) -> Result<f64> {
        index_of_difficulty(self.amplitude_m()?, self.width_m())
    }
}

/// Number of target slots jumped per reach, after validating that the
/// resulting sequence visits every target exactly once.
fn step_slots(num_targets: usize, step_angle_deg: f64) -> Result<usize> {
    if num_targets < 3 {
        return Err(Error::Config(format!("need at least 3 targets, got {num_targets}")));
    }
    if !step_angle_deg.is_finite() {
        return Err(Error::Config("step angle must be finite".into()));
    }
    let spacing = 360.0 / num_targets as f64;
    let slots = (step_angle_deg / spacing).round().rem_euclid(num_targets as f64) as usize;
    if slots == 0 || gcd(slots, num_targets) != 1 {
        return Err(Error::Config(format!(
            "step angle {step_angle_deg}° ({slots} slots of {spacing}°) does not visit all {num_targets} targets"
        )));
    }
    Ok(slots)
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Target centers, index 0 at the top, increasing clockwise.
pub fn ring_targets(spec: &RingSpec) -> Vec<Vec3> {
    let spacing = spec.spacing_deg().to_radians();
    (0..spec.num_targets)
        .map(|i| {
            let phi = std::f64::consts::FRAC_PI_2 - i as f64 * spacing;
            spec.center + Vec3::new(spec.radius_m * phi.cos(), spec.radius_m * phi.sin(), 0.0)
        })
        .collect()
}

/// Visiting order `k_n = n * s mod N`, where `s` is the step in target slots.
pub fn reach_sequence(num_targets: usize, step_angle_deg: f64) -> Result<Vec<usize>> {
    let s = step_slots(num_targets, step_angle_deg)?;
    Ok((0..num_targets).map(|n| (n * s) % num_targets).collect())
}

/// One reach between consecutive targets of a sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReachSegment {
    pub from_index: usize,
    pub to_index: usize,
    pub start: Vec3,
    pub goal: Vec3,
    pub amplitude_m: f64,
    pub width_m: f64,
    pub id_bits: f64,
}

impl ReachSegment {
    /// Unit vector from start to goal.
    pub fn direction(&self) -> Vec3 {
        (self.goal - self.start).normalized().unwrap_or(Vec3::ZERO)
    }
}

/// The `num_targets - 1` reaches of a ring, in sequence order.
///
/// Amplitude uses the closed-form chord so that every segment carries a
/// bit-identical difficulty value.
pub fn segments_for_ring(spec: &RingSpec) -> Result<Vec<ReachSegment>> {
    spec.validate()?;
    let targets = ring_targets(spec);
    let order = reach_sequence(spec.num_targets, spec.step_angle_deg)?;
    let amplitude_m = spec.amplitude_m()?;
    let id_bits = index_of_difficulty(amplitude_m, spec.width_m())?;
    Ok(order
        .windows(2)
        .map(|w| ReachSegment {
            from_index: w[0],
            to_index: w[1],
            start: targets[w[0]],
            goal: targets[w[1]],
            amplitude_m,
            width_m: spec.width_m(),
            id_bits,
        })
        .collect())
}

/// An experimental cell: one ring at one autonomy level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub ring_id: u32,
    pub gamma: f64,
}

impl Condition {
    pub fn new(ring_id: u32, gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        Ok(Self { ring_id, gamma })
    }
}

pub(crate) fn check_gamma(gamma: f64) -> Result<()> {
    if (0.0..=1.0).contains(&gamma) {
        Ok(())
    } else {
        Err(Error::Domain(format!("autonomy level must lie in [0, 1], got {gamma}")))
    }
}

/// Cartesian product of rings and autonomy levels, ring-major.
pub fn build_condition_matrix(ring_ids: &[u32], gammas: &[f64]) -> Result<Vec<Condition>> {
    if ring_ids.is_empty() || gammas.is_empty() {
        return Err(Error::Config("condition matrix needs at least one ring and one autonomy level".into()));
    }
    ring_ids
        .iter()
        .flat_map(|&r| gammas.iter().map(move |&g| Condition::new(r, g)))
        .collect()
}

/// Counterbalanced condition orders, one row per participant or run slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSchedule {
    pub rows: Vec<Vec<Condition>>,
}

impl ConditionSchedule {
    pub fn row(&self, ordinal: usize) -> &[Condition] {
        &self.rows[ordinal % self.rows.len()]
    }
}

/// Builds a Latin-square schedule over `conditions`.
///
/// For an even condition count the base square is a Williams design, which
/// also balances first-order carryover; for odd counts it is cyclic. The seed
/// shuffles row order and the condition-to-symbol assignment, both of which
/// preserve the Latin property. Rows beyond the condition count wrap around.
pub fn latin_square(conditions: &[Condition], row_count: usize, seed: u64) -> Result<ConditionSchedule> {
    if row_count < 1 {
        return Err(Error::Config("schedule needs at least one row".into()));
    }
    let n = conditions.len();
    if n == 0 {
        return Err(Error::Config("schedule needs at least one condition".into()));
    }
    let first: Vec<usize> = if n.is_multiple_of(2) {
        // 0, 1, n-1, 2, n-2, ...
        (0..n)
            .map(|j| if j == 0 { 0 } else if j % 2 == 1 { j.div_ceil(2) } else { n - j / 2 })
            .collect()
    } else {
        (0..n).collect()
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut symbols: Vec<usize> = (0..n).collect();
    symbols.shuffle(&mut rng);
    let mut row_order: Vec<usize> = (0..n).collect();
    row_order.shuffle(&mut rng);

    let rows = (0..row_count)
        .map(|r| {
            let shift = row_order[r % n];
            first.iter().map(|&f| conditions[symbols[(f + shift) % n]]).collect()
        })
        .collect();
    Ok(ConditionSchedule { rows })
}
