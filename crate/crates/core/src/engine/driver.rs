use std::collections::VecDeque;

use super::event::{EventPayload, SessionEvent};
use super::session::Session;
use super::EngineError;
use crate::canvas::Author;
use crate::config::SessionConfig;

/// Single consumer of the ordered input queue.
///
/// Producers [`enqueue`](Engine::enqueue) inputs; [`step`](Engine::step)
/// drains them in priority order, commits each one together with everything
/// it causes, and then commits a tick. Every committed event is returned so
/// the caller can log or broadcast it.
#[derive(Debug, Clone)]
pub struct Engine {
    session: Session,
    inbox: Vec<(EventPayload, u64, Option<u64>)>,
}

impl Engine {
    pub fn new(cfg: SessionConfig) -> Result<Self, EngineError> {
        Ok(Self { session: Session::new(cfg)?, inbox: Vec::new() })
    }

    pub fn session(&self) -> &Session {
        &self.session
    }

    /// Queues an input for the next step. Artist strokes are validated here
    /// so a bad stroke is refused at the door rather than logged.
    pub fn enqueue(&mut self, payload: EventPayload, at_ms: u64) -> Result<(), EngineError> {
        self.enqueue_tagged(payload, at_ms, None)
    }

    /// Like [`enqueue`](Engine::enqueue), with an opaque tag that
    /// [`step_tagged`](Engine::step_tagged) attaches to the input and
    /// everything it causes.
    pub fn enqueue_tagged(&mut self, payload: EventPayload, at_ms: u64, tag: Option<u64>) -> Result<(), EngineError> {
        if !payload.is_input() || matches!(payload, EventPayload::Tick) {
            return Err(EngineError::NotAnInput(payload.kind()));
        }
        if let EventPayload::ArtistStroke(s) = &payload {
            s.validate(&self.session.config().canvas).map_err(|e| EngineError::InvalidInput(e.to_string()))?;
        }
        self.inbox.push((payload, at_ms, tag));
        Ok(())
    }

    pub fn pending_inputs(&self) -> usize {
        self.inbox.len()
    }

    /// Commits queued inputs (ascending priority, arrival order within a
    /// priority) and then one tick at `now_ms`.
    pub fn step(&mut self, now_ms: u64) -> Result<Vec<SessionEvent>, EngineError> {
        Ok(self.step_tagged(now_ms)?.into_iter().map(|(e, _)| e).collect())
    }

    pub fn step_tagged(&mut self, now_ms: u64) -> Result<Vec<(SessionEvent, Option<u64>)>, EngineError> {
        let mut out = self.flush_tagged()?;
        out.extend(self.commit(EventPayload::Tick, now_ms)?.into_iter().map(|e| (e, None)));
        Ok(out)
    }

    /// Commits inputs without ticking.
    pub fn flush(&mut self) -> Result<Vec<SessionEvent>, EngineError> {
        Ok(self.flush_tagged()?.into_iter().map(|(e, _)| e).collect())
    }

    fn flush_tagged(&mut self) -> Result<Vec<(SessionEvent, Option<u64>)>, EngineError> {
        let mut batch = std::mem::take(&mut self.inbox);
        batch.sort_by_key(|(p, _, _)| p.priority());
        let mut out = Vec::new();
        for (payload, at_ms, tag) in batch {
            out.extend(self.commit(payload, at_ms)?.into_iter().map(|e| (e, tag)));
        }
        Ok(out)
    }

    /// Assigns the next seq to `payload`, applies it, then applies every
    /// event it causes breadth-first. `at_ms` is clamped so it never runs
    /// behind the last committed event.
    pub fn commit(&mut self, payload: EventPayload, at_ms: u64) -> Result<Vec<SessionEvent>, EngineError> {
        let at_ms = at_ms.max(self.session.last_at_ms());
        let payload = match payload {
            EventPayload::ArtistStroke(mut s) => {
                s.id = self.session.next_stroke_id();
                s.author = Author::Artist;
                EventPayload::ArtistStroke(s)
            }
            other => other,
        };
        let mut queue = VecDeque::from([payload]);
        let mut out = Vec::new();
        while let Some(payload) = queue.pop_front() {
            let event = SessionEvent { seq: self.session.last_seq() + 1, at_ms, payload };
            let caused = self.session.apply(&event)?;
            out.push(event);
            queue.extend(caused);
        }
        Ok(out)
    }
}

#[cfg(test)]
impl Engine {
    pub(crate) fn session_mut(&mut self) -> &mut Session {
        &mut self.session
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::command::{Command, DirectCommand};
    use crate::engine::{Mode, RobotPosition};

    #[test]
    fn rejects_derived_payloads() {
        let mut e = Engine::new(SessionConfig::default()).unwrap();
        assert!(matches!(e.enqueue(EventPayload::PaintRefilled, 0), Err(EngineError::NotAnInput(_))));
        assert!(matches!(e.enqueue(EventPayload::Tick, 0), Err(EngineError::NotAnInput(_))));
    }

    #[test]
    fn step_orders_by_priority_and_ticks_last() {
        let mut e = Engine::new(SessionConfig::default()).unwrap();
        e.enqueue(EventPayload::RobotMoved(RobotPosition::Outside), 10).unwrap();
        e.enqueue(EventPayload::CommandIssued(Command::Direct(DirectCommand::Resume)), 20).unwrap();
        let evs = e.step(100).unwrap();
        let kinds: Vec<_> = evs.iter().map(|e| e.payload.kind()).collect();
        assert_eq!(kinds, vec!["command_issued", "robot_moved", "state_changed", "tick"]);
        let seqs: Vec<_> = evs.iter().map(|e| e.seq).collect();
        assert_eq!(seqs, vec![1, 2, 3, 4]);
        let ats: Vec<_> = evs.iter().map(|e| e.at_ms).collect();
        assert_eq!(ats, vec![20, 20, 20, 100]);
        assert_eq!(e.session().mode(), Mode::Stopped);
    }
}
