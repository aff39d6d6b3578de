//! Biofeedback-driven co-painting: a robot paints alongside an artist and
//! backs off as the artist's heart rate climbs.

pub mod arousal;
pub mod canvas;
pub mod command;
pub mod config;
pub mod digest;
pub mod engine;
pub mod ingest;
pub mod planner;
pub mod scenario;
pub mod server;
pub mod wire;

pub use config::SessionConfig;
pub use engine::{Engine, EventPayload, Mode, SessionEvent, Snapshot};
