//! JSON-lines session log and deterministic replay.
//!
//! The first line is a header carrying the config and its hash; every
//! following line is one [`SessionEvent`]. Replay re-commits the logged
//! inputs against a fresh engine and checks that every derived event comes
//! out identical.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::driver::Engine;
use super::event::SessionEvent;
use super::EngineError;
use crate::canvas::CanvasSpec;
use crate::config::SessionConfig;

pub const LOG_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ReplayError {
    #[error("seq gap: expected {expected}, found {got}")]
    SeqGap { expected: u64, got: u64 },
    #[error("config hash mismatch: log has {log}, replay config has {given}")]
    ConfigMismatch { log: String, given: String },
    #[error("replay diverged at seq {seq}: {detail}")]
    Divergence { seq: u64, detail: String },
    #[error("engine error: {0}")]
    Engine(#[from] EngineError),
    #[error("log line {line}: {source}")]
    Parse { line: usize, source: serde_json::Error },
    #[error("log is missing its header")]
    MissingHeader,
    #[error("unsupported log version {0}")]
    Version(u32),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename = "header")]
pub struct LogHeader {
    pub version: u32,
    pub config_hash: String,
    pub canvas: CanvasSpec,
    pub config: SessionConfig,
}

impl LogHeader {
    pub fn new(config: &SessionConfig) -> Self {
        Self { version: LOG_VERSION, config_hash: config.config_hash(), canvas: config.canvas, config: config.clone() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionLog {
    pub header: LogHeader,
    pub events: Vec<SessionEvent>,
}

impl SessionLog {
    pub fn new(config: &SessionConfig) -> Self {
        Self { header: LogHeader::new(config), events: Vec::new() }
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        serde_json::to_writer(&mut w, &self.header)?;
        w.write_all(b"\n")?;
        for e in &self.events {
            serde_json::to_writer(&mut w, e)?;
            w.write_all(b"\n")?;
        }
        w.flush()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        buf
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self, ReplayError> {
        let mut lines = r.lines().enumerate().filter(|(_, l)| l.as_ref().map_or(true, |l| !l.trim().is_empty()));
        let (_, first) = lines.next().ok_or(ReplayError::MissingHeader)?;
        let header: LogHeader =
            serde_json::from_str(&first?).map_err(|source| ReplayError::Parse { line: 1, source })?;
        if header.version != LOG_VERSION {
            return Err(ReplayError::Version(header.version));
        }
        let mut events = Vec::new();
        for (i, line) in lines {
            let e = serde_json::from_str(&line?).map_err(|source| ReplayError::Parse { line: i + 1, source })?;
            events.push(e);
        }
        Ok(Self { header, events })
    }

    /// Replays against the header's config, or against `config` after
    /// checking its hash matches the header.
    pub fn replay(&self, config: Option<&SessionConfig>) -> Result<Engine, ReplayError> {
        let cfg = config.unwrap_or(&self.header.config);
        let given = cfg.config_hash();
        if given != self.header.config_hash {
            return Err(ReplayError::ConfigMismatch { log: self.header.config_hash.clone(), given });
        }
        replay_log(&self.events, cfg)
    }
}

/// Folds a logged event sequence into a fresh engine.
pub fn replay_log(events: &[SessionEvent], config: &SessionConfig) -> Result<Engine, ReplayError> {
    for (i, e) in events.iter().enumerate() {
        let expected = i as u64 + 1;
        if e.seq != expected {
            return Err(ReplayError::SeqGap { expected, got: e.seq });
        }
    }
    let mut engine = Engine::new(config.clone())?;
    let mut i = 0;
    while i < events.len() {
        let e = &events[i];
        if !e.payload.is_input() {
            return Err(ReplayError::Divergence {
                seq: e.seq,
                detail: format!("logged {} has no cause", e.payload.kind()),
            });
        }
        let produced = engine.commit(e.payload.clone(), e.at_ms)?;
        for p in &produced {
            let idx = (p.seq - 1) as usize;
            match events.get(idx) {
                Some(logged) if logged == p => {}
                Some(logged) => {
                    return Err(ReplayError::Divergence {
                        seq: p.seq,
                        detail: format!("logged {}, replay produced {}", logged.payload.kind(), p.payload.kind()),
                    })
                }
                None => {
                    return Err(ReplayError::Divergence {
                        seq: p.seq,
                        detail: format!("log ends before derived {}", p.payload.kind()),
                    })
                }
            }
        }
        i += produced.len();
    }
    Ok(engine)
}

/// Appends events to a JSON-lines log as they are committed.
pub struct LogWriter<W: Write> {
    out: W,
}

impl<W: Write> LogWriter<W> {
    pub fn new(mut out: W, config: &SessionConfig) -> std::io::Result<Self> {
        serde_json::to_writer(&mut out, &LogHeader::new(config))?;
        out.write_all(b"\n")?;
        Ok(Self { out })
    }

    pub fn append(&mut self, events: &[SessionEvent]) -> std::io::Result<()> {
        for e in events {
            serde_json::to_writer(&mut self.out, e)?;
            self.out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn flush(&mut self) -> std::io::Result<()> {
        self.out.flush()
    }
}
