use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use tangible_core::interaction::Thresholds;
use tangible_core::physics::DEFAULT_DT;
use tangible_core::session::SessionConfig;
use tangible_core::study::{run_scenario, FovCondition};
use tangible_sim::demo::demo_inputs;
use tangible_sim::live::{run_live, LiveOptions};
use tangible_sim::protocol::event_messages;
use tangible_sim::record::{hash_hex, replay, Recorder, Recording};
use tangible_sim::runner::Runner;
use tangible_sim::script::{load_script, write_metrics_csv, MetricsDoc};
use tangible_sim::{load_scene, Server, TraceRecord};

#[derive(Parser)]
#[command(name = "tangible", version, about = "Tangible volume simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a session, live or from a recording.
    Simulate(SimulateArgs),
    /// Replay study task scripts and print their metrics.
    Score {
        #[arg(long, required = true, num_args = 1..)]
        script: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Replay a recording headless and print its final state hash.
    Hash {
        #[arg(long)]
        replay: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(clap::Args)]
struct SimulateArgs {
    /// Scene document (JSON).
    #[arg(long, required_unless_present = "replay")]
    scene: Option<PathBuf>,
    /// Serve the viewer protocol on this address, e.g. 127.0.0.1:7878.
    #[arg(long)]
    serve: Option<String>,
    /// Write every input to this recording.
    #[arg(long, conflicts_with = "replay")]
    record: Option<PathBuf>,
    /// Re-run a recording instead of taking live input.
    #[arg(long, conflicts_with_all = ["scene", "seed", "theta_on", "theta_off", "dt", "wide_fov", "no_gravity", "gravity"])]
    replay: Option<PathBuf>,
    /// Skip face cameras in snapshots.
    #[arg(long)]
    headless: bool,
    /// Start in the wide field-of-view condition.
    #[arg(long)]
    wide_fov: bool,
    /// Grasp threshold on normalized face pressure (default 0.5).
    #[arg(long)]
    theta_on: Option<f64>,
    /// Release threshold, below --theta-on (default 0.4, or 0.8 x --theta-on).
    #[arg(long)]
    theta_off: Option<f64>,
    /// Fixed step in seconds.
    #[arg(long)]
    dt: Option<f64>,
    /// Drive the session with the seeded demo participant.
    #[arg(long)]
    seed: Option<u64>,
    /// Simulated seconds to run; unbounded when serving, else 60.
    #[arg(long)]
    duration: Option<f64>,
    /// Turn gravity off for this run.
    #[arg(long)]
    no_gravity: bool,
    /// Override the scene's gravity magnitude (m/s^2).
    #[arg(long)]
    gravity: Option<f64>,
}

#[derive(Serialize)]
struct Summary {
    ticks: u64,
    time_s: f64,
    final_hash: String,
    grasps: u32,
    releases: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    verified: Option<bool>,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Score { script, format } => score(&script, format),
        Command::Hash { replay: path } => hash(&path),
    }
}

fn thresholds(on: Option<f64>, off: Option<f64>) -> Result<Thresholds> {
    let d = Thresholds::default();
    let t = match (on, off) {
        (None, None) => Ok(d),
        (Some(on), None) => Thresholds::with_on(on),
        (on, Some(off)) => Thresholds::new(on.unwrap_or(d.theta_on()), off),
    };
    t.map_err(|e| anyhow::anyhow!("--theta-on/--theta-off: {e}"))
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let server = match &args.serve {
        Some(addr) => {
            let s = Server::bind(addr.as_str()).with_context(|| format!("cannot listen on {addr}"))?;
            eprintln!("serving viewer protocol on {}", s.local_addr());
            Some(s)
        }
        None => None,
    };
    let headless = args.headless || server.is_none();

    let (mut runner, scheduled, ticks, expected) = if let Some(path) = &args.replay {
        let rec = Recording::load(path).with_context(|| format!("reading {}", path.display()))?;
        let scene = rec.scene.to_scene()?;
        let config = rec.config.to_config(headless)?;
        let ticks = match args.duration {
            Some(d) => (d / config.dt).round() as u64,
            None => rec.ticks(),
        };
        (Runner::new(scene, config)?, rec.inputs.clone(), Some(ticks), rec.end)
    } else {
        let path = args.scene.as_deref().expect("clap requires --scene without --replay");
        let mut scene = load_scene(path)?;
        if args.no_gravity {
            scene.gravity_enabled = false;
        }
        if let Some(g) = args.gravity {
            if !(g >= 0.0 && g.is_finite()) {
                bail!("--gravity must be >= 0");
            }
            scene.gravity = g;
        }
        let config = SessionConfig {
            dt: args.dt.unwrap_or(DEFAULT_DT),
            thresholds: thresholds(args.theta_on, args.theta_off)?,
            fov: if args.wide_fov { FovCondition::Wide } else { FovCondition::Narrow },
            headless,
            ..SessionConfig::default()
        };
        let dt = config.dt;
        let duration = args.duration.or(if server.is_some() { None } else { Some(60.0) });
        let ticks = duration.map(|d| (d / dt).round() as u64);
        let scheduled: Vec<TraceRecord> = match (args.seed, duration) {
            (Some(seed), Some(d)) => demo_inputs(seed, d, &scene),
            (Some(seed), None) => demo_inputs(seed, 3600.0, &scene),
            (None, _) => Vec::new(),
        };
        let mut runner = Runner::new(scene.clone(), config.clone())?;
        if let Some(rec) = &args.record {
            let recorder = Recorder::create(rec, &config, &scene)
                .with_context(|| format!("creating recording {}", rec.display()))?;
            runner = runner.with_recorder(recorder);
        }
        (runner, scheduled, ticks, None)
    };

    let stdout = io::stdout();
    let mut out = stdout.lock();
    let mut write_err = None;
    let opts =
        LiveOptions { ticks, pace: server.is_some(), stop_when_finished: false, accept_inputs: args.replay.is_none() };
    run_live(&mut runner, server.as_ref(), &scheduled, opts, |step| {
        for msg in event_messages(step.snapshot.tick, &step.events) {
            if let Err(e) = out.write_all(msg.to_line().as_bytes()) {
                write_err.get_or_insert(e);
            }
        }
    })?;
    if let Some(e) = write_err {
        return Err(e).context("writing events");
    }
    let session = runner.session();
    let snap = runner.snapshot();
    let summary = Summary {
        ticks: snap.tick,
        time_s: snap.time,
        final_hash: hash_hex(snap.state_hash()),
        grasps: session.grasp_count(),
        releases: session.release_count(),
        verified: expected.map(|(tick, hash)| tick == snap.tick && hash == snap.state_hash()),
    };
    serde_json::to_writer(&mut out, &summary)?;
    writeln!(out)?;
    drop(out);
    runner.finish()?;
    if let Some(s) = server {
        s.shutdown();
    }
    if summary.verified == Some(false) {
        bail!("replay diverged from the recorded final hash");
    }
    Ok(())
}

fn score(paths: &[PathBuf], format: Format) -> Result<()> {
    let mut all = Vec::with_capacity(paths.len());
    for path in paths {
        let script = load_script(path)?;
        let metrics = run_scenario(&script).with_context(|| format!("running {}", path.display()))?;
        all.push(metrics);
    }
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match format {
        Format::Json => {
            for m in &all {
                serde_json::to_writer_pretty(&mut out, &MetricsDoc::new(m))?;
                writeln!(out)?;
            }
        }
        Format::Csv => write_metrics_csv(&mut out, &all)?,
    }
    Ok(())
}

fn hash(path: &Path) -> Result<()> {
    let rec = Recording::load(path).with_context(|| format!("reading {}", path.display()))?;
    let outcome = replay(&rec, true, |_| {})?;
    println!("{}", hash_hex(outcome.final_hash));
    if outcome.verified == Some(false) {
        bail!("replay diverged from the recorded final hash");
    }
    Ok(())
}
