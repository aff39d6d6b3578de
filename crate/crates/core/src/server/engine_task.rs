use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use tokio::sync::{broadcast, mpsc, watch};
use tokio::time::Instant;

use super::{Current, EngineMsg, ServerOptions};
use crate::config::SessionConfig;
use crate::engine::{Engine, LogWriter, Snapshot};
use crate::wire::{ErrorBody, ServerMessage};

struct Live {
    engine: Engine,
    config: Arc<SessionConfig>,
    started: Instant,
    log: Option<LogWriter<BufWriter<File>>>,
    last_snapshot: Instant,
}

impl Live {
    fn now_ms(&self) -> u64 {
        self.started.elapsed().as_millis() as u64
    }
}

pub(super) struct EngineTask {
    base: SessionConfig,
    log_path: Option<PathBuf>,
    events: broadcast::Sender<Arc<ServerMessage>>,
    current: watch::Sender<Option<Current>>,
    snapshot_every: Duration,
    live: Option<Live>,
}

fn error(correlation_id: Option<u64>, code: &str, message: impl Into<String>) -> Arc<ServerMessage> {
    Arc::new(ServerMessage::Error { correlation_id, payload: ErrorBody { code: code.into(), message: message.into() } })
}

impl EngineTask {
    pub(super) fn new(
        opts: &ServerOptions,
        events: broadcast::Sender<Arc<ServerMessage>>,
        current: watch::Sender<Option<Current>>,
    ) -> std::io::Result<Self> {
        let mut task = Self {
            base: opts.config.clone(),
            log_path: opts.log_path.clone(),
            events,
            current,
            snapshot_every: Duration::from_millis(opts.snapshot_interval_ms),
            live: None,
        };
        if opts.autostart {
            task.start(opts.config.clone()).map_err(std::io::Error::other)?;
        }
        Ok(task)
    }

    fn broadcast(&self, msg: Arc<ServerMessage>) {
        // No subscribers is fine.
        let _ = self.events.send(msg);
    }

    fn start(&mut self, config: SessionConfig) -> Result<Arc<Snapshot>, String> {
        let engine = Engine::new(config.clone()).map_err(|e| e.to_string())?;
        let log = match &self.log_path {
            Some(p) => {
                let f = File::create(p).map_err(|e| format!("cannot create log {}: {e}", p.display()))?;
                Some(LogWriter::new(BufWriter::new(f), &config).map_err(|e| e.to_string())?)
            }
            None => None,
        };
        if self.live.is_some() {
            self.broadcast(error(None, "session_restarted", "session restarted; reconnect for a fresh snapshot"));
        }
        let now = Instant::now();
        let config = Arc::new(config);
        let snapshot = Arc::new(engine.session().snapshot());
        self.live = Some(Live { engine, config: config.clone(), started: now, log, last_snapshot: now });
        self.current.send_replace(Some(Current { config, snapshot: snapshot.clone() }));
        log::info!("session started");
        Ok(snapshot)
    }

    pub(super) async fn run(mut self, mut rx: mpsc::UnboundedReceiver<EngineMsg>) {
        let mut next_tick = Instant::now();
        loop {
            let period = Duration::from_millis(self.live.as_ref().map_or(self.base.tick_ms, |l| l.config.tick_ms));
            tokio::select! {
                _ = tokio::time::sleep_until(next_tick) => {
                    self.tick();
                    next_tick += period;
                    let now = Instant::now();
                    if next_tick < now {
                        next_tick = now + period;
                    }
                }
                msg = rx.recv() => match msg {
                    Some(msg) => self.handle(msg),
                    None => break,
                },
            }
        }
        if let Some(log) = self.live.as_mut().and_then(|l| l.log.as_mut()) {
            let _ = log.flush();
        }
    }

    fn handle(&mut self, msg: EngineMsg) {
        match msg {
            EngineMsg::Input { payload, correlation_id } => {
                let Some(live) = self.live.as_mut() else {
                    self.broadcast(error(Some(correlation_id), "no_session", "session not started"));
                    return;
                };
                let at = live.now_ms();
                if let Err(e) = live.engine.enqueue_tagged(payload, at, Some(correlation_id)) {
                    self.broadcast(error(Some(correlation_id), "invalid_input", e.to_string()));
                }
            }
            EngineMsg::Start { overrides, reply } => {
                let r = self.base.with_overrides(&overrides).map_err(|e| e.to_string()).and_then(|c| self.start(c));
                let _ = reply.send(r);
            }
            EngineMsg::Reset { reply } => {
                let r = match &self.live {
                    Some(l) => {
                        let c = (*l.config).clone();
                        self.start(c)
                    }
                    None => Err("session not started".to_string()),
                };
                let _ = reply.send(r);
            }
            EngineMsg::Ppm { reply } => {
                let _ = reply.send(self.live.as_ref().map(|l| l.engine.session().canvas().export_ppm()));
            }
        }
    }

    fn tick(&mut self) {
        let Some(live) = self.live.as_mut() else { return };
        let now = live.now_ms();
        let committed = match live.engine.step_tagged(now) {
            Ok(c) => c,
            Err(e) => {
                log::error!("engine step failed: {e}");
                self.broadcast(error(None, "engine", e.to_string()));
                return;
            }
        };
        if let Some(log) = live.log.as_mut() {
            let evs: Vec<_> = committed.iter().map(|(e, _)| e.clone()).collect();
            if let Err(e) = log.append(&evs).and_then(|_| log.flush()) {
                log::warn!("log write failed: {e}");
            }
        }
        // Publish the snapshot before the events: a client that subscribes
        // in between sees the new snapshot and skips events it covers.
        let snapshot = Arc::new(live.engine.session().snapshot());
        self.current.send_replace(Some(Current { config: live.config.clone(), snapshot: snapshot.clone() }));
        let periodic = live.last_snapshot.elapsed() >= self.snapshot_every;
        if periodic {
            live.last_snapshot = Instant::now();
        }
        for (event, correlation_id) in committed {
            self.broadcast(Arc::new(ServerMessage::Event { seq: event.seq, correlation_id, payload: event }));
        }
        if periodic {
            self.broadcast(Arc::new(ServerMessage::Snapshot { payload: Box::new((*snapshot).clone()) }));
        }
    }
}
