use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use podr_core::analysis::{
    self, depth_vs_gridsize_study, emit_visual_comparison, run_offline, run_param_study, run_readouts,
    run_shot_sweep, ExperimentConfig,
};
use podr_core::analysis::study::{default_param_sweep, write_depth_study, write_param_study};
use podr_core::analysis::sweep::write_sweep;
use podr_core::binio::write_atomic;
use podr_core::flow::{read_snapshot_csv, write_snapshot_file};
use podr_core::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "podr", version, about = "POD-based quantum readout experiments")]
struct Cli {
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Run with this single seed instead of the configured list.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for sweeps and studies.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate the training ensemble and target and write them as snapshot files.
    Solve,
    /// Build (or reuse) the POD bases and compressed approximants.
    Offline,
    /// One readout per method at the configured budget; writes readout.json.
    Readout {
        /// Shot budget; overrides `readout_shots`.
        #[arg(long)]
        shots: Option<u64>,
    },
    /// Methods x shot grid x seeds sweep; writes sweep.csv and sweep_medians.csv.
    Sweep,
    /// Projection error across the parameter sweep; writes param_study.csv.
    ParamStudy,
    /// Circuit depth across grid sizes at Case-2 thresholds; writes depth_study.csv.
    DepthStudy,
    /// Field, stream-function and heatmap export for every method.
    Visualize,
    /// Convert CSV snapshots (one per file) into a single snapshot file.
    Ingest {
        /// Destination snapshot file.
        #[arg(long)]
        output: PathBuf,
        /// CSV files, `ny` rows of `nx` values each.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let path = cli.config.as_ref().ok_or_else(|| Error::Config("--config is required for this command".into()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seeds = vec![seed];
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<()> {
    if let Command::Ingest { output, inputs } = &cli.command {
        let fields = inputs.iter().map(|p| read_snapshot_csv(p)).collect::<Result<Vec<_>>>()?;
        write_snapshot_file(&fields, output)?;
        println!("wrote {} snapshots to {}", fields.len(), output.display());
        return Ok(());
    }
    let cfg = load_config(cli)?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    match &cli.command {
        Command::Solve => {
            for p in analysis::run_solve(&cfg)? {
                println!("{}", p.display());
            }
        }
        Command::Offline => {
            let art = run_offline(&cfg)?;
            for (c, m) in &art.manifest.components {
                println!(
                    "{}: n_b={} chis={:?} e_proj_est={:e} e_enc_est={:e}{}",
                    c.name(),
                    m.n_b,
                    m.chis,
                    m.e_proj_estimate,
                    m.e_enc_estimate,
                    if art.reused { " (reused)" } else { "" }
                );
            }
        }
        Command::Readout { shots } => {
            let mut cfg = cfg;
            if let Some(s) = shots {
                cfg.readout_shots = *s;
            }
            let art = run_offline(&cfg)?;
            let reports = run_readouts(&cfg, &art)?;
            let json: Vec<_> = reports.iter().flat_map(|m| [&m.ux, &m.uy]).collect();
            let path = cfg.output_dir.join("readout.json");
            write_atomic(&path, serde_json::to_string_pretty(&json)?.as_bytes())?;
            for m in &reports {
                println!("{}: epsilon ux={:e} uy={:e}", m.method.label(), m.ux.epsilon, m.uy.epsilon);
            }
        }
        Command::Sweep => {
            let art = run_offline(&cfg)?;
            let result = run_shot_sweep(&cfg, &art)?;
            let (rows, medians) = write_sweep(&cfg, &result)?;
            println!("{}\n{}", rows.display(), medians.display());
        }
        Command::ParamStudy => {
            let art = run_offline(&cfg)?;
            let params = default_param_sweep(&cfg)?;
            let rows = run_param_study(&cfg, &art, &params)?;
            println!("{}", write_param_study(&cfg, &rows)?.display());
        }
        Command::DepthStudy => {
            let rows = depth_vs_gridsize_study(&cfg, &cfg.depth_grids)?;
            println!("{}", write_depth_study(&cfg, &rows)?.display());
        }
        Command::Visualize => {
            let art = run_offline(&cfg)?;
            let reports = run_readouts(&cfg, &art)?;
            for p in emit_visual_comparison(&cfg, &art, &reports)? {
                println!("{}", p.display());
            }
        }
        Command::Ingest { .. } => unreachable!("handled above"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config_error() { ExitCode::from(2) } else { ExitCode::from(3) }
        }
    }
}
