//! JSON-lines trial logs.
//!
//! A log file holds one header record, one record per sample, and one footer:
//!
//! ```text
//! {"record":"header","schema_version":1,"config":{...}}
//! {"record":"sample","t":5.025000,"phase":"running","active_target":4,"u_h":[..],"u_r":[..],"u":[..]}
//! {"record":"footer","status":"complete","abort_reason":null,"reach_events":[{"target_index":0,"t":5.000000},..],"movement_times_s":[..],"input_clamped":0}
//! ```
//!
//! Timestamps are seconds from trial start with six decimals. Positions are
//! meters; movement times are seconds at full precision.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize, Serializer};
use serde_json::value::RawValue;

use crate::engine::{ReachEvent, TrialConfig, TrialLog, TrialSample, TrialStatus};
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

pub(crate) fn fixed6<S: Serializer>(t: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    RawValue::from_string(format!("{t:.6}")).map_err(serde::ser::Error::custom)?.serialize(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum FooterStatus {
    Complete,
    Aborted,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "lowercase")]
enum Record {
    Header {
        schema_version: u32,
        config: TrialConfig,
    },
    Sample(TrialSample),
    Footer {
        status: FooterStatus,
        abort_reason: Option<String>,
        reach_events: Vec<ReachEvent>,
        movement_times_s: Vec<f64>,
        input_clamped: u64,
    },
}

fn footer(log: &TrialLog) -> Record {
    let (status, abort_reason) = match &log.status {
        TrialStatus::Complete => (FooterStatus::Complete, None),
        TrialStatus::Aborted { reason } => (FooterStatus::Aborted, Some(reason.clone())),
    };
    Record::Footer {
        status,
        abort_reason,
        reach_events: log.reach_events.clone(),
        movement_times_s: log.movement_times_s.clone(),
        input_clamped: log.input_clamped,
    }
}

pub fn write_log<W: Write>(mut w: W, log: &TrialLog) -> Result<()> {
    let header = Record::Header { schema_version: SCHEMA_VERSION, config: log.config.clone() };
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    for s in &log.samples {
        serde_json::to_writer(&mut w, &Record::Sample(*s))?;
        w.write_all(b"\n")?;
    }
    serde_json::to_writer(&mut w, &footer(log))?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn to_jsonl(log: &TrialLog) -> String {
    let mut buf = Vec::new();
    write_log(&mut buf, log).expect("writing to memory");
    String::from_utf8(buf).expect("json is utf-8")
}

/// Writes `log` to a sibling temporary file and renames it into place, so a
/// reader never sees a log without its footer.
pub fn write_log_file(path: &Path, log: &TrialLog) -> Result<()> {
    let tmp = path.with_extension("jsonl.partial");
    fs::write(&tmp, to_jsonl(log))?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Reads only the schema version from the first line of a log.
pub fn peek_schema_version<R: BufRead>(r: R) -> Result<u32> {
    #[derive(Deserialize)]
    struct Peek {
        schema_version: Option<u32>,
    }
    let line = r.lines().next().ok_or_else(|| Error::LogFormat("empty log".into()))??;
    serde_json::from_str::<Peek>(&line)?
        .schema_version
        .ok_or_else(|| Error::LogFormat("first record carries no schema_version".into()))
}

pub fn read_log<R: BufRead>(r: R) -> Result<TrialLog> {
    let mut lines = r.lines().enumerate().filter(|(_, l)| l.as_ref().map_or(true, |l| !l.trim().is_empty()));
    let (_, first) = lines.next().ok_or_else(|| Error::LogFormat("empty log".into()))?;
    let first = first?;
    let version = peek_schema_version(first.as_bytes())?;
    if version != SCHEMA_VERSION {
        return Err(Error::SchemaVersion { expected: SCHEMA_VERSION, found: version });
    }
    let Record::Header { config, .. } = serde_json::from_str(&first)? else {
        return Err(Error::LogFormat("first record must be the header".into()));
    };

    let mut samples = Vec::new();
    for (n, line) in lines {
        let line = line?;
        match serde_json::from_str::<Record>(&line)
            .map_err(|e| Error::LogFormat(format!("line {}: {e}", n + 1)))?
        {
            Record::Sample(s) => samples.push(s),
            Record::Header { .. } => return Err(Error::LogFormat(format!("line {}: second header", n + 1))),
            Record::Footer { status, abort_reason, reach_events, movement_times_s, input_clamped } => {
                let status = match status {
                    FooterStatus::Complete => TrialStatus::Complete,
                    FooterStatus::Aborted => TrialStatus::Aborted { reason: abort_reason.unwrap_or_default() },
                };
                return Ok(TrialLog { config, samples, reach_events, movement_times_s, status, input_clamped });
            }
        }
    }
    Err(Error::LogFormat("missing footer record (truncated log)".into()))
}

pub fn read_log_file(path: &Path) -> Result<TrialLog> {
    let f = fs::File::open(path)?;
    read_log(BufReader::new(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run_trial, TrialConfig};
    use crate::geometry::RingSpec;
    use crate::operators::OperatorParams;

    fn sample_log() -> TrialLog {
        let mut cfg = TrialConfig::simulated(RingSpec::reference_rings()[0].clone(), 0.4, OperatorParams::novice(), 5);
        cfg.countdown_s = 0.1;
        run_trial(&cfg).unwrap()
    }

    #[test]
    fn round_trip() {
        let log = sample_log();
        let text = to_jsonl(&log);
        let back = read_log(text.as_bytes()).unwrap();
        assert_eq!(back, log);
        assert_eq!(to_jsonl(&back), text);
    }

    #[test]
    fn timestamps_have_six_decimals() {
        let text = to_jsonl(&sample_log());
        let second = text.lines().nth(1).unwrap();
        assert!(second.contains(r#""t":0.000000"#), "{second}");
        let third = text.lines().nth(2).unwrap();
        assert!(third.contains(r#""t":0.025000"#), "{third}");
    }

    #[test]
    fn truncated_log_rejected() {
        let text = to_jsonl(&sample_log());
        let cut: String = text.lines().take(10).map(|l| format!("{l}\n")).collect();
        assert!(matches!(read_log(cut.as_bytes()), Err(Error::LogFormat(_))));
        assert!(matches!(read_log("".as_bytes()), Err(Error::LogFormat(_))));
    }

    #[test]
    fn wrong_schema_version_rejected() {
        let text = to_jsonl(&sample_log()).replacen(r#""schema_version":1"#, r#""schema_version":7"#, 1);
        match read_log(text.as_bytes()) {
            Err(Error::SchemaVersion { expected: 1, found: 7 }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn atomic_file_write() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trial_0.jsonl");
        let log = sample_log();
        write_log_file(&path, &log).unwrap();
        assert!(!dir.path().join("trial_0.jsonl.partial").exists());
        assert_eq!(read_log_file(&path).unwrap(), log);
    }
}
