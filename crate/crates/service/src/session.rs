//! Sessions: a scheduled sequence of live trials and its on-disk record.
//!
//! Each session owns one directory:
//!
//! ```text
//! <data_dir>/session-0003/
//!     manifest.json     schedule, configuration, per-trial status
//!     trial_0.jsonl     one trial log per finished or aborted trial
//!     trial_1.jsonl
//! ```
//!
//! Both kinds of file are written to a temporary sibling and renamed into
//! place, so a reader sees either the previous version or the new one.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use fittsbench::config::BenchConfig;
use fittsbench::engine::{HumanSource, InputLatch, Phase, Trial, TrialConfig, TrialEvent, TrialLog, TrialStatus};
use fittsbench::experiment::derive_seed;
use fittsbench::geometry::{latin_square, Condition};
use fittsbench::logfile::{write_log_file, SCHEMA_VERSION};
use serde::{Deserialize, Serialize};

use crate::outbox::Outbox;
use crate::protocol::{ServerBody, TrialSummary, PROTOCOL_VERSION};
use crate::ServiceError;

const STATE_QUEUE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrialState {
    Pending,
    Running,
    Complete,
    Aborted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialEntry {
    pub index: usize,
    pub condition: Condition,
    pub seed: u64,
    pub state: TrialState,
    pub file: Option<String>,
    pub abort_reason: Option<String>,
    pub movement_times_s: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub protocol_version: u32,
    pub session_id: String,
    pub ordinal: u64,
    pub participant: Option<String>,
    pub config: BenchConfig,
    pub trials: Vec<TrialEntry>,
}

impl Manifest {
    pub fn schedule(&self) -> Vec<Condition> {
        self.trials.iter().map(|t| t.condition).collect()
    }

    pub fn next_trial(&self) -> usize {
        self.trials.iter().take_while(|t| matches!(t.state, TrialState::Complete | TrialState::Aborted)).count()
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension("partial");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

pub fn session_id(ordinal: u64) -> String {
    format!("session-{ordinal:04}")
}

/// Ordinal of a session directory name, if it is one.
pub fn parse_session_id(name: &str) -> Option<u64> {
    name.strip_prefix("session-")?.parse().ok()
}

struct RunningTrial {
    index: usize,
    config: TrialConfig,
    latch: InputLatch,
    abort: Arc<AtomicBool>,
}

struct Inner {
    manifest: Manifest,
    running: Option<RunningTrial>,
    connected: bool,
}

pub struct Session {
    pub id: String,
    dir: PathBuf,
    show_gamma: bool,
    inner: Mutex<Inner>,
    pub outbox: Arc<Outbox>,
}

impl Session {
    /// Creates the session directory and its manifest. On any storage error
    /// the directory is removed again and nothing is returned.
    pub fn create(cfg: &BenchConfig, ordinal: u64, participant: Option<String>) -> Result<Session, ServiceError> {
        let conditions = cfg.conditions()?;
        let square = latin_square(&conditions, conditions.len(), cfg.seed)?;
        let trials = square
            .row(ordinal as usize)
            .iter()
            .enumerate()
            .map(|(index, &condition)| TrialEntry {
                index,
                condition,
                seed: derive_seed(cfg.seed, ordinal as u32, index, 0),
                state: TrialState::Pending,
                file: None,
                abort_reason: None,
                movement_times_s: Vec::new(),
            })
            .collect();
        let id = session_id(ordinal);
        let manifest = Manifest {
            schema_version: SCHEMA_VERSION,
            protocol_version: PROTOCOL_VERSION,
            session_id: id.clone(),
            ordinal,
            participant,
            config: cfg.clone(),
            trials,
        };
        let dir = cfg.server.data_dir.join(&id);
        let storage = |e: std::io::Error| ServiceError::Storage(format!("{}: {e}", dir.display()));
        fs::create_dir_all(&cfg.server.data_dir).map_err(storage)?;
        fs::create_dir(&dir).map_err(storage)?;
        let session = Session {
            id,
            dir: dir.clone(),
            show_gamma: cfg.server.show_gamma,
            inner: Mutex::new(Inner { manifest, running: None, connected: false }),
            outbox: Arc::new(Outbox::new(STATE_QUEUE)),
        };
        if let Err(e) = session.persist_manifest() {
            let _ = fs::remove_dir_all(&dir);
            return Err(e);
        }
        Ok(session)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn manifest(&self) -> Manifest {
        self.inner.lock().unwrap().manifest.clone()
    }

    fn persist_manifest(&self) -> Result<(), ServiceError> {
        let text = serde_json::to_vec_pretty(&self.inner.lock().unwrap().manifest).expect("manifest serializes");
        write_atomic(&self.dir.join("manifest.json"), &text)
            .map_err(|e| ServiceError::Storage(format!("{}: {e}", self.dir.display())))
    }

    /// Claims the session for a connection.
    pub fn connect(&self) -> Result<(), ServiceError> {
        let mut inner = self.inner.lock().unwrap();
        if inner.connected {
            return Err(ServiceError::Conflict(format!("session {} already has a client", self.id)));
        }
        inner.connected = true;
        self.outbox.clear();
        Ok(())
    }

    /// Releases the session; a trial still running is aborted.
    pub fn disconnect(&self) {
        let mut inner = self.inner.lock().unwrap();
        inner.connected = false;
        if let Some(r) = &inner.running {
            r.abort.store(true, Ordering::SeqCst);
        }
    }

    pub fn hello(&self) -> ServerBody {
        let inner = self.inner.lock().unwrap();
        ServerBody::Hello {
            protocol_version: PROTOCOL_VERSION,
            session_id: self.id.clone(),
            trial_count: inner.manifest.trials.len(),
            next_trial: inner.manifest.next_trial(),
        }
    }

    /// Starts the next scheduled trial on its own real-time thread.
    pub fn start_trial(self: &Arc<Self>) -> Result<usize, ServiceError> {
        let mut inner = self.inner.lock().unwrap();
        if let Some(r) = &inner.running {
            return Err(ServiceError::Conflict(format!("trial {} is still running", r.index)));
        }
        let index = inner.manifest.next_trial();
        let Some(entry) = inner.manifest.trials.get(index).cloned() else {
            return Err(ServiceError::Conflict("all trials of this session are finished".into()));
        };
        let config = inner.manifest.config.trial_config(entry.condition, HumanSource::Live, entry.seed)?;
        let latch = InputLatch::new();
        let trial = Trial::live(config.clone(), latch.clone())?;
        let abort = Arc::new(AtomicBool::new(false));

        self.outbox.push(ServerBody::StartTrial {
            trial_index: index,
            ring_id: config.ring.ring_id,
            gamma: self.show_gamma.then_some(config.condition.gamma),
            center: config.ring.center,
            pointer_scale_m: config.input_gain * config.workspace_half_extent_m,
            targets: trial.targets().to_vec(),
            target_diameter_m: config.ring.target_diameter_m,
            sequence: trial.sequence().to_vec(),
            countdown_s: config.countdown_s,
        });
        inner.manifest.trials[index].state = TrialState::Running;
        inner.running = Some(RunningTrial { index, config, latch, abort: abort.clone() });
        drop(inner);

        let session = Arc::clone(self);
        thread::Builder::new()
            .name(format!("{}-trial-{index}", self.id))
            .spawn(move || session.run_trial(index, trial, abort))
            .map_err(|e| ServiceError::Storage(format!("cannot start trial thread: {e}")))?;
        Ok(index)
    }

    /// Latches a normalized pointer position for the running trial.
    /// Returns whether the position had to be clamped.
    pub fn ingest_input(&self, x: f64, y: f64) -> Result<bool, ServiceError> {
        if !(x.is_finite() && y.is_finite()) {
            return Err(ServiceError::Protocol("input coordinates must be finite".into()));
        }
        let inner = self.inner.lock().unwrap();
        let r = inner.running.as_ref().ok_or_else(|| ServiceError::Conflict("no trial is running".into()))?;
        let (u_h, clamped) = r.config.map_pointer(x, y);
        r.latch.set(u_h, clamped);
        Ok(clamped)
    }

    fn run_trial(&self, index: usize, mut trial: Trial, abort: Arc<AtomicBool>) {
        let rate = trial.config().logic_rate_hz as u64;
        let countdown = trial.config().countdown_s;
        let origin = Instant::now();
        let mut tick: u64 = 0;
        while !trial.is_finished() {
            let report = if abort.load(Ordering::SeqCst) { trial.abort("client disconnected") } else { trial.step() };
            for s in report.samples {
                let countdown_remaining_s = if s.phase == Phase::Countdown { (countdown - s.t_s).max(0.0) } else { 0.0 };
                self.outbox.push(ServerBody::State {
                    trial_index: index,
                    t: s.t_s,
                    phase: s.phase,
                    countdown_remaining_s,
                    active_target: s.active_target,
                    u: s.u,
                    u_h: s.u_h,
                    u_r: s.u_r,
                });
            }
            for e in report.events {
                // The first target is acquired by construction at Go!; clients see Go! as the phase change.
                if let TrialEvent::Reach(r) = e {
                    if r.t_s > trial.go_time_s() {
                        self.outbox.push(ServerBody::ReachEvent { trial_index: index, target_index: r.target_index, t: r.t_s });
                    }
                }
            }
            tick += 1;
            let due = origin + Duration::from_nanos(tick * 1_000_000_000 / rate);
            if let Some(wait) = due.checked_duration_since(Instant::now()) {
                thread::sleep(wait);
            }
        }
        let log = trial.into_log();
        self.finish_trial(index, log);
    }

    fn finish_trial(&self, index: usize, log: TrialLog) {
        let file = format!("trial_{index}.jsonl");
        let write = write_log_file(&self.dir.join(&file), &log);
        let (state, mut abort_reason) = match &log.status {
            TrialStatus::Complete => (TrialState::Complete, None),
            TrialStatus::Aborted { reason } => (TrialState::Aborted, Some(reason.clone())),
        };
        let mut file = Some(file);
        let mut state = state;
        if let Err(e) = write {
            log::error!("session {}: cannot persist trial {index}: {e}", self.id);
            state = TrialState::Aborted;
            abort_reason = Some(format!("log not persisted: {e}"));
            file = None;
        }
        let done = {
            let mut inner = self.inner.lock().unwrap();
            let entry = &mut inner.manifest.trials[index];
            entry.state = state;
            entry.file = file;
            entry.abort_reason = abort_reason.clone();
            entry.movement_times_s = log.movement_times_s.clone();
            inner.running = None;
            inner.manifest.next_trial() == inner.manifest.trials.len()
        };
        if let Err(e) = self.persist_manifest() {
            log::error!("session {}: {e}", self.id);
        }
        let status = if state == TrialState::Complete { "complete" } else { "aborted" };
        self.outbox.push(ServerBody::TrialDone {
            trial_index: index,
            status: status.into(),
            abort_reason,
            movement_times_s: log.movement_times_s.clone(),
        });
        if done {
            let trials = self
                .manifest()
                .trials
                .iter()
                .map(|t| TrialSummary {
                    trial_index: t.index,
                    status: if t.state == TrialState::Complete { "complete" } else { "aborted" }.into(),
                    mean_mt_s: (!t.movement_times_s.is_empty())
                        .then(|| t.movement_times_s.iter().sum::<f64>() / t.movement_times_s.len() as f64),
                })
                .collect();
            self.outbox.push(ServerBody::SessionDone { trials });
        }
    }

    /// True while a trial thread owns the session.
    pub fn is_running(&self) -> bool {
        self.inner.lock().unwrap().running.is_some()
    }
}
