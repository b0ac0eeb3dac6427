use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thea_core::clock::Millis;
use thea_core::control::runner::DEFAULT_HORIZON_MS;
use thea_core::control::{Script, ScriptAction, ScriptEntry, SoundMode};
use thea_core::game::{GameKind, GameMode};
use thea_service::config::{default_rig, DeviceFile};
use thea_service::registry::Registry;
use thea_service::replay::{verify, ReplayOutcome};
use thea_service::stats::StatsIndex;
use thea_service::store::scan_logs;
use thea_service::{run_script, virtual_header, ServiceConfig, ServiceError, SessionConfig};

#[derive(Parser)]
#[command(
    name = "thea",
    about = "Haptic hand-game sessions: headless runs, replay, live service"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one session on the virtual clock and write its log.
    Run(RunArgs),
    /// Rerun a log from its header and inputs and compare byte for byte.
    Replay {
        #[arg(long)]
        log: PathBuf,
    },
    /// Serve the HTTP command API and WebSocket stream.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Print one player's per-game statistics as JSON.
    Stats {
        #[arg(long)]
        player: String,
        /// Directory of session logs; defaults to the service's log_dir.
        #[arg(long)]
        logs: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    game: GameKind,
    #[arg(long)]
    mode: GameMode,
    #[arg(long)]
    seed: u64,
    /// Timed inputs, one `t_ms action [arg]` per line.
    #[arg(long)]
    script: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// One name for solo play, two for a shared session.
    #[arg(long = "player", default_value = "player")]
    players: Vec<String>,
    #[arg(long, default_value = "two-pitch")]
    sound: SoundMode,
    #[arg(long)]
    game_config: Option<PathBuf>,
    /// TOML `[[devices]]` list; two calibrated devices by default.
    #[arg(long)]
    device_config: Option<PathBuf>,
    #[arg(long, default_value_t = 0.9)]
    fidelity: f64,
    #[arg(long)]
    session_id: Option<String>,
    /// Virtual time after which an unfinished session is cut off.
    #[arg(long, default_value_t = DEFAULT_HORIZON_MS)]
    horizon_ms: Millis,
    /// Also write every frame on the wire as a capture file.
    #[arg(long)]
    capture: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String, ServiceError> {
    std::fs::read_to_string(path).map_err(|e| ServiceError::Io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), ServiceError> {
    std::fs::write(path, text).map_err(|e| ServiceError::Io(format!("{}: {e}", path.display())))
}

fn run(args: RunArgs) -> Result<(), ServiceError> {
    let names: Vec<&str> = args.players.iter().map(String::as_str).collect();
    let mut config = SessionConfig::new(&names, args.game, args.mode, args.seed);
    config.sound = args.sound;
    config.game_config = args.game_config;
    let rig = match &args.device_config {
        Some(p) => DeviceFile::load(p)?,
        None => default_rig(args.fidelity),
    };
    let mut script: Script = read(&args.script)?
        .parse()
        .map_err(|e: thea_core::control::ScriptError| ServiceError::InvalidConfig(e.to_string()))?;
    if !script
        .entries
        .iter()
        .any(|e| e.action == ScriptAction::Start)
    {
        let mut entries = vec![ScriptEntry {
            t_ms: 0,
            action: ScriptAction::Start,
        }];
        entries.extend(script.entries);
        script = Script::new(entries);
    }
    let id = args
        .session_id
        .unwrap_or_else(|| format!("run-{:016x}", args.seed));
    let header = virtual_header(id, config, &rig)?;
    let host = run_script(header, &script, args.horizon_ms)?;
    write(&args.out, &host.to_log().to_jsonl())?;
    if let Some(p) = &args.capture {
        let text: String = host.capture().iter().map(|l| format!("{l}\n")).collect();
        write(p, &text)?;
    }
    if let Some(reason) = host.ended_reason() {
        eprintln!(
            "{}: {:?}, {} records",
            args.out.display(),
            reason,
            host.records().len()
        );
    }
    Ok(())
}

fn replay(log: &Path) -> Result<bool, ServiceError> {
    match verify(&read(log)?)? {
        ReplayOutcome::Identical { records } => {
            println!("identical: {records} records");
            Ok(true)
        }
        ReplayOutcome::Diverged {
            line,
            expected,
            got,
        } => {
            println!("diverged at line {line}\n  log:   {expected}\n  rerun: {got}");
            Ok(false)
        }
    }
}

fn service_config(path: Option<&Path>) -> Result<ServiceConfig, ServiceError> {
    match path {
        Some(p) => ServiceConfig::load(p),
        None => Ok(ServiceConfig::default()),
    }
}

fn stats(player: &str, logs: Option<PathBuf>, config: Option<&Path>) -> Result<(), ServiceError> {
    let dir = match logs {
        Some(d) => d,
        None => service_config(config)?.log_dir,
    };
    let logs = scan_logs(&dir)?;
    let index = StatsIndex::from_logs(&logs);
    let out = serde_json::to_string_pretty(&index.player(player)).expect("stats serialize");
    println!("{out}");
    Ok(())
}

fn serve(port: u16, config: Option<&Path>) -> Result<(), ServiceError> {
    let registry = Registry::open(&service_config(config)?)?;
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(thea_service::api::serve(registry, port))?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args).map(|_| true),
        Command::Replay { log } => replay(&log),
        Command::Serve { port, config } => serve(port, config.as_deref()).map(|_| true),
        Command::Stats {
            player,
            logs,
            config,
        } => stats(&player, logs, config.as_deref()).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("thea: {e}");
            ExitCode::from(2)
        }
    }
}
