use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use stl_shield::experiment::{self, io::Table, ExperimentConfig, RunReport};
use stl_shield::learner::{Mode, PolicyKind};
use stl_shield::stl::parse;
use stl_shield::world::WorldConfig;

mod plot;

/// Shielded reinforcement learning under STL task specifications.
///
/// `run` and `validate-config` also accept `--<dot.path> <value>` pairs
/// that override config fields, e.g. `--world.agent.d_max 0.3`.
#[derive(Parser)]
#[command(name = "stl-shield", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train and/or evaluate as configured, writing logs, report and plots.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Number of evaluation episodes.
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long)]
        policy: Option<PolicyKind>,
        #[arg(long)]
        mode: Option<Mode>,
        #[arg(long)]
        seed: Option<u64>,
        /// Replaces the config's specification.
        #[arg(long)]
        spec: Option<String>,
        /// Output directory (defaults to the config's `output.dir`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Exit nonzero if any shield check fails.
        #[arg(long = "assert")]
        check: bool,
        /// Satisfaction rate required by `--assert`.
        #[arg(long, default_value_t = 0.0)]
        min_satisfaction: f64,
    },
    /// Check a trajectory CSV against a specification.
    Monitor {
        #[arg(long)]
        spec: String,
        #[arg(long)]
        traj: PathBuf,
        /// Experiment or world config supplying region shapes for `in(...)`.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Re-render the plots of a run directory from its CSV artifacts.
    Plot {
        #[arg(long)]
        dir: PathBuf,
    },
    /// Parse and validate a config without running it.
    ValidateConfig {
        #[arg(long)]
        config: PathBuf,
    },
}

type Overrides = Vec<(String, String)>;

/// Splits `--a.b value` pairs (any flag containing a dot) out of the args.
fn extract_overrides(args: Vec<String>) -> Result<(Vec<String>, Overrides)> {
    let mut rest = Vec::new();
    let mut overrides = Vec::new();
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        match a.strip_prefix("--") {
            Some(key) if key.contains('.') => {
                let (key, value) = match key.split_once('=') {
                    Some((k, v)) => (k.to_string(), v.to_string()),
                    None => {
                        let v = it.next().with_context(|| format!("missing value for --{key}"))?;
                        (key.to_string(), v)
                    }
                };
                overrides.push((key, value));
            }
            _ => rest.push(a),
        }
    }
    Ok((rest, overrides))
}

fn load_world(path: &Path) -> Result<WorldConfig> {
    let v: serde_json::Value = serde_json::from_reader(BufReader::new(File::open(path)?))
        .with_context(|| format!("reading {}", path.display()))?;
    let world = match v.get("world") {
        Some(w) => w.clone(),
        None => v,
    };
    serde_json::from_value(world).context("parsing world config")
}

fn print_report(r: &RunReport, secs: f64) {
    println!(
        "{} episodes ({:?}, {:?}) in {secs:.1}s",
        r.episodes, r.policy, r.mode
    );
    println!("  satisfaction rate    {:.4}", r.satisfaction_rate);
    println!("  relaxation mean/max  {:.3} / {:.3}", r.mean_relaxation, r.max_relaxation);
    println!("  mean return          {:.2}", r.mean_return);
    println!("  eps mean/max         {:.4} / {:.4}", r.eps_mean, r.eps_max);
    println!(
        "  bound check          {} ({} failures, worst margin {:.4})",
        if r.bound_check_passed { "passed" } else { "FAILED" },
        r.bound_failures,
        r.worst_bound_margin
    );
    println!("  relaxation failures  {}", r.relaxation_failures);
    println!("  hard-link failures   {}", r.hard_link_failures);
    if let Some(t) = &r.train {
        println!(
            "  training             {} episodes, final return {:.2}, satisfaction {:.3}",
            t.episodes, t.final_return, t.satisfaction_rate
        );
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    config: &Path,
    mut overrides: Vec<(String, String)>,
    episodes: Option<usize>,
    policy: Option<PolicyKind>,
    mode: Option<Mode>,
    seed: Option<u64>,
    spec: Option<String>,
    out: Option<PathBuf>,
    check: bool,
    min_satisfaction: f64,
) -> Result<bool> {
    let quoted = |s: String| serde_json::Value::String(s).to_string();
    if let Some(n) = episodes {
        overrides.push(("eval.episodes".into(), n.to_string()));
    }
    if let Some(p) = policy {
        overrides.push(("eval.policy".into(), quoted(format!("{p:?}").to_lowercase())));
    }
    if let Some(m) = mode {
        overrides.push(("eval.mode".into(), quoted(format!("{m:?}").to_lowercase())));
    }
    if let Some(s) = seed {
        overrides.push(("seed".into(), s.to_string()));
    }
    if let Some(s) = spec {
        overrides.push(("spec".into(), quoted(s)));
    }
    let cfg = ExperimentConfig::load(config, &overrides)?;
    let dir = out.unwrap_or_else(|| cfg.output.dir.clone());
    let start = Instant::now();
    let output = experiment::run(&cfg)?;
    print_report(&output.report, start.elapsed().as_secs_f64());
    experiment::write_outputs(&dir, &cfg, &output)?;
    if cfg.output.plots {
        plot::render_dir(&dir)?;
    }
    println!("artifacts written to {}", dir.display());

    let r = &output.report;
    let mut ok = true;
    if check {
        let checks = [
            ("bound check", r.bound_check_passed),
            ("relaxation", r.relaxation_failures == 0),
            ("hard link", r.hard_link_failures == 0),
            ("satisfaction", r.satisfaction_rate >= min_satisfaction),
        ];
        for (name, pass) in checks {
            if !pass {
                eprintln!("assertion failed: {name}");
                ok = false;
            }
        }
    }
    Ok(ok)
}

fn cmd_monitor(spec: &str, traj: &Path, config: Option<&Path>) -> Result<bool> {
    let f = parse(spec)?;
    let world = config.map(load_world).transpose()?;
    let table = Table::read(BufReader::new(
        File::open(traj).with_context(|| format!("opening {}", traj.display()))?,
    ))?;
    let traj = table.trajectory(world.as_ref())?;
    let ok = traj.satisfies(&f, 0.0)?;
    println!("{ok}");
    for v in traj.explain(&f)? {
        let window = match v.window {
            Some((a, b)) => format!("[{a}, {b}]"),
            None => "-".to_string(),
        };
        let kind = if v.satisfied { "witness" } else { "violation" };
        println!("  {}: {} {kind} {window}", v.task, v.satisfied);
    }
    Ok(ok)
}

fn main() -> ExitCode {
    match real_main() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> Result<bool> {
    let (args, overrides) = extract_overrides(std::env::args().collect())?;
    let cli = Cli::parse_from(args);
    match cli.cmd {
        Cmd::Run {
            config,
            episodes,
            policy,
            mode,
            seed,
            spec,
            out,
            check,
            min_satisfaction,
        } => cmd_run(&config, overrides, episodes, policy, mode, seed, spec, out, check, min_satisfaction),
        Cmd::Monitor { spec, traj, config } => {
            if !overrides.is_empty() {
                bail!("config overrides are not accepted by `monitor`");
            }
            cmd_monitor(&spec, &traj, config.as_deref())
        }
        Cmd::Plot { dir } => {
            for p in plot::render_dir(&dir)? {
                println!("{}", p.display());
            }
            Ok(true)
        }
        Cmd::ValidateConfig { config } => {
            let cfg = ExperimentConfig::load(&config, &overrides)?;
            println!(
                "ok: {} regions, {} obligations, horizon {}",
                cfg.world.regions.len(),
                cfg.setup()?.tasks.obligations.len(),
                cfg.horizon
            );
            Ok(true)
        }
    }
}
