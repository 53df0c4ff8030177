//! Command-line entry point.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime error.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use skyslice::config::ScenarioConfig;
use skyslice::nn::{check_gradients, Activation, Adam, Network, SquaredErrorLoss};
use skyslice::rng::Stream;
use skyslice_cli::eval::evaluate_checkpoint;
use skyslice_cli::manifest::{PolicyKind, RunManifest};
use skyslice_cli::runner::{resume_training, run_training};
use skyslice_cli::stats::export_user_statistics;

#[derive(Parser)]
#[command(
    name = "skyslice",
    version,
    about = "Multi-UAV 5G network-slicing simulator with CTDE multi-agent RL"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario: `urban`, `rural`, or a path to a scenario file.
    #[arg(long, default_value = "rural")]
    scenario: String,
    /// Policy: mappo, maddpg, madqn, random, or hover.
    #[arg(long, default_value = "madqn")]
    algo: String,
    /// Comma-separated seed list.
    #[arg(long, default_value = "0", value_delimiter = ',')]
    seed: Vec<u64>,
    /// Training episodes per seed.
    #[arg(long, default_value_t = 10)]
    episodes: usize,
    /// Steps per episode (overrides the scenario's max_steps).
    #[arg(long)]
    steps: Option<usize>,
    /// Output directory for run artifacts.
    #[arg(long, default_value = "runs/latest")]
    out: PathBuf,
    /// Write a per-step trajectory.jsonl.
    #[arg(long)]
    dump_trajectory: bool,
    /// Checkpoint every N episodes (0: final checkpoint only).
    #[arg(long, default_value_t = 0)]
    checkpoint_every: usize,
    /// Resume from the checkpoints already present in --out.
    #[arg(long)]
    resume: bool,
}

#[derive(Args)]
struct EvalArgs {
    /// Path to a trained bundle checkpoint.
    #[arg(long)]
    checkpoint: PathBuf,
    /// Scenario the checkpoint is evaluated on.
    #[arg(long, default_value = "rural")]
    scenario: String,
    /// Comma-separated evaluation seeds.
    #[arg(long, default_value = "0,1,2", value_delimiter = ',')]
    seeds: Vec<u64>,
    /// Evaluation episodes per seed.
    #[arg(long, default_value_t = 3)]
    episodes: usize,
    /// Steps per episode (overrides the scenario's max_steps).
    #[arg(long)]
    steps: Option<usize>,
    /// Where to write eval.json (printed to stdout regardless).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Train a learner (or roll out a control policy) across seeds.
    Run(RunArgs),
    /// Evaluate a checkpoint greedily against random/hover controls.
    Eval(EvalArgs),
    /// Recount user-service statistics from a run's trajectory dump.
    Stats {
        /// A per-seed run directory containing trajectory.jsonl.
        #[arg(long)]
        run_dir: PathBuf,
    },
    /// Parse and validate a scenario (preset name or file path).
    ValidateConfig {
        /// `urban`, `rural`, or a scenario file path.
        source: String,
    },
    /// Verify analytic gradients of all learner architectures against
    /// central finite differences.
    Gradcheck {
        /// Extra optimizer updates before the check.
        #[arg(long, default_value_t = 0)]
        after_updates: usize,
    },
}

fn cmd_run(args: RunArgs) -> Result<()> {
    if args.resume {
        let manifest = RunManifest::load(&args.out)
            .with_context(|| format!("loading manifest from {}", args.out.display()))?;
        let summaries = resume_training(&manifest)?;
        for s in &summaries {
            println!(
                "seed {}: resumed {} episode(s) in {:.1}s -> {}",
                s.seed,
                s.episodes_run,
                s.wall_seconds,
                s.seed_dir.display()
            );
        }
        return Ok(());
    }
    let mut config = ScenarioConfig::load(&args.scenario)?;
    if let Some(steps) = args.steps {
        config.max_steps = steps;
    }
    config.validate()?;
    let policy: PolicyKind = args.algo.parse().map_err(|e: String| anyhow::anyhow!(e))?;
    let manifest = RunManifest {
        config,
        policy,
        seeds: args.seed,
        episodes: args.episodes,
        dump_trajectory: args.dump_trajectory,
        checkpoint_every: args.checkpoint_every,
        version_tag: RunManifest::version_tag_default(),
        out_dir: args.out,
    };
    let summaries = run_training(&manifest)?;
    for s in &summaries {
        println!(
            "seed {}: {} episode(s) in {:.1}s -> {}",
            s.seed,
            s.episodes_run,
            s.wall_seconds,
            s.seed_dir.display()
        );
        print!("{}", s.stats.render_table());
    }
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let mut config = ScenarioConfig::load(&args.scenario)?;
    if let Some(steps) = args.steps {
        config.max_steps = steps;
    }
    config.validate()?;
    let report = evaluate_checkpoint(&args.checkpoint, &config, &args.seeds, args.episodes)?;
    print!("{}", report.render_text());
    if let Some(out) = args.out {
        if let Some(parent) = out.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&out, serde_json::to_string_pretty(&report.to_json())?)?;
        println!("report written to {}", out.display());
    }
    Ok(())
}

fn cmd_gradcheck(after_updates: usize) -> Result<()> {
    // The three learner architectures at headline dimensions: actor
    // (observation -> bounded command), centralized critic
    // (observation + joint action -> value), and the shared Q-network.
    let obs_dim = 36;
    let n_drones = 4;
    let specs: [(&str, Vec<usize>, Activation); 3] = [
        ("actor", vec![obs_dim, 128, 128, 3], Activation::Tanh),
        (
            "critic",
            vec![obs_dim + 3 * n_drones, 128, 128, 1],
            Activation::Linear,
        ),
        ("q-network", vec![obs_dim, 128, 128, 27], Activation::Linear),
    ];
    let tolerance = 1e-4;
    let mut all_pass = true;
    for (name, sizes, head) in specs {
        let mut rng = Stream::from_seed(0xC0FFEE);
        let mut net = Network::mlp(&sizes, Activation::Relu, head, &mut rng);
        let input: Vec<f64> = (0..sizes[0]).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
        let target: Vec<f64> = (0..*sizes.last().unwrap())
            .map(|_| rng.uniform_range(-1.0, 1.0))
            .collect();
        let loss = SquaredErrorLoss {
            input: input.clone(),
            target,
        };
        if after_updates > 0 {
            let mut adam = Adam::new(&net, 0.001);
            for _ in 0..after_updates {
                let grads = loss.gradients(&net)?;
                adam.step(&mut net, &grads)?;
            }
        }
        let report = check_gradients(&net, &loss, tolerance)?;
        all_pass &= report.pass;
        println!(
            "{name:<10} ({} params): max relative error {:.3e} (tolerance {:.0e}) -> {}",
            report.param_count,
            report.max_rel_error,
            tolerance,
            if report.pass { "PASS" } else { "FAIL" }
        );
    }
    if !all_pass {
        anyhow::bail!("gradient check failed");
    }
    Ok(())
}

fn real_main() -> Result<()> {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e)
            if matches!(
                e.kind(),
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion
            ) =>
        {
            print!("{e}");
            return Ok(());
        }
        Err(e) => {
            eprint!("{e}");
            std::process::exit(1);
        }
    };
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Stats { run_dir } => {
            let (_, table) = export_user_statistics(&run_dir)?;
            print!("{table}");
            Ok(())
        }
        Command::ValidateConfig { source } => {
            let config = ScenarioConfig::load(&source)?;
            config.validate()?;
            println!(
                "ok: {} scenario, {} drones, grid {}x{}, {} steps/episode",
                config.scenario_kind.name(),
                config.n_drones,
                config.grid_extent,
                config.grid_extent,
                config.max_steps
            );
            Ok(())
        }
        Command::Gradcheck { after_updates } => cmd_gradcheck(after_updates),
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
