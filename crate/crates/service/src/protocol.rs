//! Wire protocol between the session server and a browser client.
//!
//! Every message is one JSON text frame with a `kind` field. Server messages
//! also carry `seq`, a per-connection counter that starts at 0 and has no
//! gaps, and `ts`, seconds since the connection was opened.
//!
//! Client to server:
//!
//! | kind          | fields                                   |
//! |---------------|------------------------------------------|
//! | `hello`       | `protocol_version`                       |
//! | `start_trial` | none; starts the next scheduled trial    |
//! | `input`       | `x`, `y` in `[-1, 1]`; out-of-range values are clamped |
//!
//! Server to client:
//!
//! | kind           | fields |
//! |----------------|--------|
//! | `hello`        | `protocol_version`, `session_id`, `trial_count`, `next_trial` |
//! | `start_trial`  | `trial_index`, `ring_id`, `gamma` (only when disclosed), `center`, `pointer_scale_m`, `targets`, `target_diameter_m`, `sequence`, `countdown_s` |
//! | `state`        | `trial_index`, `t`, `phase`, `countdown_remaining_s`, `active_target`, `u`, `u_h`, `u_r` |
//! | `reach_event`  | `trial_index`, `target_index`, `t` |
//! | `trial_done`   | `trial_index`, `status`, `abort_reason`, `movement_times_s` |
//! | `session_done` | `trials`: per-trial status and mean movement time |
//! | `error`        | `message` |
//!
//! Positions are task-plane meters as `[x, y, z]`. Times inside a trial are
//! seconds from trial start. States are sent at the trial's log rate; when
//! the client falls behind, stale states are dropped but events never are.

use fittsbench::engine::Phase;
use fittsbench::Vec3;
use serde::{Deserialize, Serialize};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientMessage {
    Hello { protocol_version: u32 },
    StartTrial,
    Input { x: f64, y: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub trial_index: usize,
    pub status: String,
    pub mean_mt_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ServerBody {
    Hello {
        protocol_version: u32,
        session_id: String,
        trial_count: usize,
        next_trial: usize,
    },
    StartTrial {
        trial_index: usize,
        ring_id: u32,
        #[serde(skip_serializing_if = "Option::is_none")]
        gamma: Option<f64>,
        center: Vec3,
        /// Task-plane distance that a full-scale pointer deflection maps to.
        pointer_scale_m: f64,
        targets: Vec<Vec3>,
        target_diameter_m: f64,
        sequence: Vec<usize>,
        countdown_s: f64,
    },
    State {
        trial_index: usize,
        t: f64,
        phase: Phase,
        countdown_remaining_s: f64,
        active_target: Option<usize>,
        u: Vec3,
        u_h: Vec3,
        u_r: Vec3,
    },
    ReachEvent {
        trial_index: usize,
        target_index: usize,
        t: f64,
    },
    TrialDone {
        trial_index: usize,
        status: String,
        abort_reason: Option<String>,
        movement_times_s: Vec<f64>,
    },
    SessionDone {
        trials: Vec<TrialSummary>,
    },
    Error {
        message: String,
    },
}

impl ServerBody {
    pub fn error(message: impl Into<String>) -> Self {
        ServerBody::Error { message: message.into() }
    }

    pub fn is_state(&self) -> bool {
        matches!(self, ServerBody::State { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServerMessage {
    pub seq: u64,
    pub ts: f64,
    #[serde(flatten)]
    pub body: ServerBody,
}
