//! HTTP and WebSocket front end plus the UDP sensor listener.
//!
//! All of them funnel inputs into one engine task; nothing else touches the
//! session. The engine task publishes the latest snapshot on a watch channel
//! and every committed event on a broadcast channel.

mod engine_task;
mod routes;
mod ws;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use tokio::net::{TcpListener, UdpSocket};
use tokio::sync::{broadcast, mpsc, oneshot, watch};
use tokio::task::JoinSet;

use crate::config::SessionConfig;
use crate::engine::{EventPayload, Snapshot};
use crate::ingest::parse_datagram;
use crate::wire::ServerMessage;

pub use routes::router;

#[derive(Debug, Clone)]
pub struct ServerOptions {
    pub bind: SocketAddr,
    /// `None` disables the UDP listener.
    pub udp: Option<SocketAddr>,
    pub config: SessionConfig,
    /// Start a session immediately with `config`.
    pub autostart: bool,
    /// Each session's log is written here (truncated on start).
    pub log_path: Option<PathBuf>,
    /// Messages a WebSocket client may fall behind before it is dropped.
    pub broadcast_capacity: usize,
    pub snapshot_interval_ms: u64,
}

impl Default for ServerOptions {
    fn default() -> Self {
        Self {
            bind: ([127, 0, 0, 1], 8080).into(),
            udp: Some(([127, 0, 0, 1], 12345).into()),
            config: SessionConfig::default(),
            autostart: true,
            log_path: None,
            broadcast_capacity: 1000,
            snapshot_interval_ms: 500,
        }
    }
}

/// What the engine task publishes after every step.
#[derive(Debug, Clone)]
pub struct Current {
    pub config: Arc<SessionConfig>,
    pub snapshot: Arc<Snapshot>,
}

pub(crate) enum EngineMsg {
    Input { payload: EventPayload, correlation_id: u64 },
    Start { overrides: serde_json::Value, reply: oneshot::Sender<Result<Arc<Snapshot>, String>> },
    Reset { reply: oneshot::Sender<Result<Arc<Snapshot>, String>> },
    Ppm { reply: oneshot::Sender<Option<Vec<u8>>> },
}

#[derive(Clone)]
pub struct AppState(Arc<Inner>);

struct Inner {
    engine: mpsc::UnboundedSender<EngineMsg>,
    events: broadcast::Sender<Arc<ServerMessage>>,
    current: watch::Receiver<Option<Current>>,
    next_correlation: AtomicU64,
}

impl AppState {
    fn correlation_id(&self) -> u64 {
        self.0.next_correlation.fetch_add(1, Ordering::Relaxed)
    }

    fn current(&self) -> Option<Current> {
        self.0.current.borrow().clone()
    }

    fn send(&self, msg: EngineMsg) -> bool {
        self.0.engine.send(msg).is_ok()
    }

    fn subscribe(&self) -> broadcast::Receiver<Arc<ServerMessage>> {
        self.0.events.subscribe()
    }
}

/// A running server. Dropping the handle stops every task.
pub struct ServerHandle {
    pub http_addr: SocketAddr,
    pub udp_addr: Option<SocketAddr>,
    pub state: AppState,
    tasks: JoinSet<()>,
}

impl ServerHandle {
    /// Resolves when any server task exits, then stops the rest.
    pub async fn join(mut self) {
        self.tasks.join_next().await;
        self.tasks.abort_all();
    }
}

/// Binds every listener and spawns the engine, HTTP and UDP tasks.
pub async fn spawn(opts: ServerOptions) -> std::io::Result<ServerHandle> {
    opts.config.validate().map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidInput, e.to_string()))?;
    let (engine_tx, engine_rx) = mpsc::unbounded_channel();
    let (events, _) = broadcast::channel(opts.broadcast_capacity.max(1));
    let (current_tx, current_rx) = watch::channel(None);
    let state = AppState(Arc::new(Inner {
        engine: engine_tx,
        events: events.clone(),
        current: current_rx,
        next_correlation: AtomicU64::new(1),
    }));

    let mut tasks = JoinSet::new();
    let task = engine_task::EngineTask::new(&opts, events, current_tx)?;
    tasks.spawn(task.run(engine_rx));

    let listener = TcpListener::bind(opts.bind).await?;
    let http_addr = listener.local_addr()?;
    let app = router(state.clone());
    tasks.spawn(async move {
        if let Err(e) = axum::serve(listener, app).await {
            log::error!("http server failed: {e}");
        }
    });

    let mut udp_addr = None;
    if let Some(addr) = opts.udp {
        let sock = UdpSocket::bind(addr).await?;
        udp_addr = Some(sock.local_addr()?);
        tasks.spawn(udp_loop(sock, state.clone()));
    }
    log::info!("listening on http://{http_addr} (udp {udp_addr:?})");
    Ok(ServerHandle { http_addr, udp_addr, state, tasks })
}

async fn udp_loop(sock: UdpSocket, state: AppState) {
    let mut buf = vec![0u8; 65_536];
    loop {
        let (n, from) = match sock.recv_from(&mut buf).await {
            Ok(r) => r,
            Err(e) => {
                log::warn!("udp receive failed: {e}");
                continue;
            }
        };
        if state.current().is_none() {
            continue;
        }
        for parsed in parse_datagram(&buf[..n]) {
            match parsed {
                Ok(sample) => {
                    let correlation_id = state.correlation_id();
                    state.send(EngineMsg::Input { payload: EventPayload::SampleIn(sample), correlation_id });
                }
                Err(e) => log::debug!("bad datagram line from {from}: {e}"),
            }
        }
    }
}
