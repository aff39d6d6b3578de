use std::io::BufRead;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Parser, Subcommand};

use aura_core::arousal::calibrate_baseline;
use aura_core::engine::{ReplayError, SessionLog};
use aura_core::ingest::{parse_datagram, parse_sensor_line, BiometricSample, HrTracker, IngestOutcome};
use aura_core::scenario::{RunError, Scenario, ScenarioReport};
use aura_core::server::{spawn, ServerOptions};
use aura_core::SessionConfig;

#[derive(Parser)]
#[command(name = "aura", version, about = "Biofeedback co-painting session engine")]
struct Cli {
    /// Session config (JSON); unspecified fields keep their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Live session: HTTP/WebSocket API plus UDP sensor ingest.
    Run {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value_t = 12345)]
        udp_port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        bind: IpAddr,
        /// Write the session log here.
        #[arg(long)]
        log: Option<PathBuf>,
        /// Wait for POST /session/start instead of starting immediately.
        #[arg(long)]
        no_autostart: bool,
    },
    /// Run a scenario file (or a bundled one by name) at simulated time.
    Scenario {
        scenario: String,
        /// Directory for session.jsonl, canvas.ppm and summary.json.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Do not pace ticks to the wall clock.
        #[arg(long)]
        fast: bool,
        /// Print the summary as JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Re-fold a session log and verify every derived event.
    Replay {
        log: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Replay a log and write the final canvas.
    Export {
        log: PathBuf,
        #[arg(long)]
        ppm: PathBuf,
    },
    /// Estimate a resting baseline from recorded sensor lines or live UDP.
    Calibrate {
        /// File of `TAG,timestamp_ms,value` lines; reads UDP when absent.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 12345)]
        udp_port: u16,
    },
}

fn load_config(cli: &Cli) -> Result<SessionConfig, String> {
    let mut cfg = match &cli.config {
        Some(p) => SessionConfig::from_file(p).map_err(|e| e.to_string())?,
        None => SessionConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let cfg = match load_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let code = match cli.cmd {
        Cmd::Run { port, udp_port, bind, log, no_autostart } => run_live(cfg, SocketAddr::new(bind, port), SocketAddr::new(bind, udp_port), log, !no_autostart),
        Cmd::Scenario { scenario, out, fast, json } => run_scenario(&cfg, &scenario, out.as_deref(), fast, json),
        Cmd::Replay { log, json } => replay(&log, &cfg, cli.config.is_some()).map(|engine| {
            let report = ScenarioReport::new(&log.display().to_string(), &engine.0, &engine.1);
            if json {
                println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            } else {
                print!("{}", report.table());
            }
            0
        }),
        Cmd::Export { log, ppm } => replay(&log, &cfg, cli.config.is_some()).and_then(|(engine, _)| {
            std::fs::write(&ppm, engine.session().canvas().export_ppm()).map_err(|e| {
                eprintln!("error: cannot write {}: {e}", ppm.display());
                1
            })?;
            println!("{} {}", engine.session().canvas().digest_hex(), ppm.display());
            Ok(0)
        }),
        Cmd::Calibrate { input, udp_port } => calibrate(&cfg, input.as_deref(), udp_port),
    };
    ExitCode::from(code.unwrap_or_else(|c| c) as u8)
}

fn run_live(cfg: SessionConfig, bind: SocketAddr, udp: SocketAddr, log_path: Option<PathBuf>, autostart: bool) -> Result<u8, u8> {
    let rt = tokio::runtime::Runtime::new().map_err(|e| {
        eprintln!("error: {e}");
        1
    })?;
    rt.block_on(async move {
        let opts = ServerOptions { bind, udp: Some(udp), config: cfg, autostart, log_path, ..ServerOptions::default() };
        let handle = spawn(opts).await.map_err(|e| {
            eprintln!("error: {e}");
            1
        })?;
        println!("http://{}  (udp {})", handle.http_addr, udp);
        tokio::select! {
            _ = handle.join() => Err(1),
            _ = tokio::signal::ctrl_c() => Ok(0),
        }
    })
}

fn run_scenario(cfg: &SessionConfig, which: &str, out: Option<&Path>, fast: bool, json: bool) -> Result<u8, u8> {
    let scenario = match Scenario::bundled(which) {
        Some(s) if !Path::new(which).exists() => s,
        _ => Scenario::load(Path::new(which)).map_err(|e| {
            eprintln!("error: {e}");
            2
        })?,
    };
    let run = scenario.run(cfg, fast).map_err(|e: RunError| {
        eprintln!("error: {e}");
        e.exit_code() as u8
    })?;
    if let Some(dir) = out {
        run.write_outputs(dir).map_err(|e| {
            eprintln!("error: cannot write outputs to {}: {e}", dir.display());
            1
        })?;
    }
    if json {
        println!("{}", serde_json::to_string_pretty(&run.report).expect("report serializes"));
    } else {
        print!("{}", run.report.table());
    }
    Ok(0)
}

type Replayed = (aura_core::Engine, Vec<aura_core::SessionEvent>);

fn replay(path: &Path, cfg: &SessionConfig, explicit_config: bool) -> Result<Replayed, u8> {
    let file = std::fs::File::open(path).map_err(|e| {
        eprintln!("error: cannot open {}: {e}", path.display());
        2
    })?;
    let log = SessionLog::read_from(std::io::BufReader::new(file)).map_err(|e| {
        eprintln!("error: {e}");
        2
    })?;
    let given = explicit_config.then_some(cfg);
    match log.replay(given) {
        Ok(engine) => Ok((engine, log.events)),
        Err(e @ (ReplayError::Parse { .. } | ReplayError::MissingHeader | ReplayError::Version(_) | ReplayError::Io(_))) => {
            eprintln!("error: {e}");
            Err(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            Err(3)
        }
    }
}

fn calibrate(cfg: &SessionConfig, input: Option<&Path>, udp_port: u16) -> Result<u8, u8> {
    let mut tracker = HrTracker::new(cfg.estimator.clone(), cfg.ppg_sample_rate_hz, cfg.estimate_interval_ms);
    let mut estimates = Vec::new();
    let window_ms = (cfg.arousal.calibration_s * 1000.0).round() as u64;
    let mut first_ts = None;
    // True once the calibration window is covered.
    let mut feed = |sample: BiometricSample| {
        let start = *first_ts.get_or_insert(sample.timestamp_ms);
        if let IngestOutcome::Estimate(e) = tracker.push(sample) {
            if e.timestamp_ms <= start + window_ms {
                estimates.push(e);
            }
        }
        sample.timestamp_ms >= start + window_ms
    };
    match input {
        Some(path) => {
            let f = std::fs::File::open(path).map_err(|e| {
                eprintln!("error: cannot open {}: {e}", path.display());
                2
            })?;
            for line in std::io::BufReader::new(f).lines() {
                let line = line.map_err(|e| {
                    eprintln!("error: {e}");
                    2
                })?;
                if line.trim().is_empty() {
                    continue;
                }
                match parse_sensor_line(line.as_bytes()) {
                    Ok(sample) if feed(sample) => break,
                    Ok(_) => {}
                    Err(e) => log::debug!("skipping line: {e}"),
                }
            }
        }
        None => {
            let sock = std::net::UdpSocket::bind(("0.0.0.0", udp_port)).map_err(|e| {
                eprintln!("error: cannot bind udp {udp_port}: {e}");
                1
            })?;
            sock.set_read_timeout(Some(Duration::from_millis(500))).ok();
            eprintln!("listening on udp {udp_port} for {} s of samples", cfg.arousal.calibration_s);
            let deadline = Instant::now() + Duration::from_secs_f64(cfg.arousal.calibration_s * 4.0);
            let mut buf = vec![0u8; 65_536];
            'recv: while Instant::now() < deadline {
                let Ok(n) = sock.recv(&mut buf) else { continue };
                for sample in parse_datagram(&buf[..n]).into_iter().flatten() {
                    if feed(sample) {
                        break 'recv;
                    }
                }
            }
        }
    }
    match calibrate_baseline(&estimates, &cfg.arousal) {
        Ok(b) => {
            println!("{}", serde_json::to_string_pretty(&b).expect("baseline serializes"));
            println!("threshold_bpm {:.2}", b.threshold(&cfg.arousal));
            Ok(if b.calibrated { 0 } else { 3 })
        }
        Err(e) => {
            eprintln!("error: {e} ({} estimates)", estimates.len());
            Err(3)
        }
    }
}
