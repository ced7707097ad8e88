//! Autonomous reference trajectory and the blending arbitration law.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::check_gamma;
use crate::vec3::Vec3;

/// Constant-velocity straight line from `start` to `goal`, clamped at both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceTrajectory {
    pub start: Vec3,
    pub goal: Vec3,
    pub duration_s: f64,
    pub start_time_s: f64,
}

impl ReferenceTrajectory {
    pub fn new(start: Vec3, goal: Vec3, duration_s: f64, start_time_s: f64) -> Self {
        debug_assert!(duration_s > 0.0);
        Self { start, goal, duration_s, start_time_s }
    }

    /// A trajectory that holds `p` forever.
    pub fn hold(p: Vec3, t: f64) -> Self {
        Self::new(p, p, 1.0, t)
    }

    pub fn end_time_s(&self) -> f64 {
        self.start_time_s + self.duration_s
    }

    /// Fraction of the segment covered at time `t`, in `[0, 1]`.
    pub fn progress(&self, t: f64) -> f64 {
        ((t - self.start_time_s) / self.duration_s).clamp(0.0, 1.0)
    }

    pub fn position(&self, t: f64) -> Vec3 {
        if self.start == self.goal {
            return self.start;
        }
        self.start.lerp(self.goal, self.progress(t))
    }

    /// Travel speed while the trajectory is unsaturated.
    pub fn speed(&self) -> f64 {
        self.start.distance(self.goal) / self.duration_s
    }
}

/// Free-function form of [`ReferenceTrajectory::position`].
pub fn reference_position(traj: &ReferenceTrajectory, t: f64) -> Vec3 {
    if traj.start == traj.goal {
        log::debug!("zero-length reference segment at {:?}", traj.start);
    }
    traj.position(t)
}

/// `u = γ u_r + (1 - γ) u_h`.
pub fn blend(u_r: Vec3, u_h: Vec3, gamma: f64) -> Result<Vec3> {
    check_gamma(gamma)?;
    Ok(blend_unchecked(u_r, u_h, gamma))
}

#[inline]
pub(crate) fn blend_unchecked(u_r: Vec3, u_h: Vec3, gamma: f64) -> Vec3 {
    u_r * gamma + u_h * (1.0 - gamma)
}

/// Robot, human and blended commands for one control instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlInputs {
    pub u_r: Vec3,
    pub u_h: Vec3,
    pub u: Vec3,
    pub gamma: f64,
}

impl ControlInputs {
    pub fn new(u_r: Vec3, u_h: Vec3, gamma: f64) -> Result<Self> {
        Ok(Self { u_r, u_h, u: blend(u_r, u_h, gamma)?, gamma })
    }
}

/// Fraction of a reach the blended system covers while the human holds the
/// segment start. With the human pinned, the blended command settles at
/// `start + γ (goal - start)`, so the fraction is γ itself.
pub fn idle_completion_fraction(gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    Ok(gamma)
}

/// Whether an idle human still acquires a target of width `width_m` at
/// distance `amplitude_m`: `γ A >= A - W / 2`.
pub fn idle_reaches_target(gamma: f64, amplitude_m: f64, width_m: f64) -> Result<bool> {
    Ok(idle_completion_fraction(gamma)? * amplitude_m >= amplitude_m - width_m / 2.0)
}

/// Smallest autonomy level at which an idle human still acquires the target.
pub fn idle_gamma_threshold(amplitude_m: f64, width_m: f64) -> f64 {
    1.0 - width_m / (2.0 * amplitude_m)
}
