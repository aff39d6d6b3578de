//! The event-sourced session: every input and every consequence is a
//! [`SessionEvent`] with a strictly increasing seq, and session state is a
//! pure fold over that sequence.

mod driver;
mod event;
mod replay;
mod session;
mod snapshot;

pub use driver::Engine;
pub use event::{EventPayload, Mode, RobotPosition, SessionEvent};
pub use replay::{replay_log, LogHeader, LogWriter, ReplayError, SessionLog, LOG_VERSION};
pub use session::{RobotWrite, Session};
pub use snapshot::Snapshot;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error("event seq {got} does not follow {}", expected - 1)]
    SeqGap { expected: u64, got: u64 },
    #[error("event time {got} ms precedes last event at {last} ms")]
    TimeRegression { last: u64, got: u64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("{0} events are derived by the engine and cannot be submitted")]
    NotAnInput(&'static str),
}
