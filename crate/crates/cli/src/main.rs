use clap::{Parser, Subcommand};

mod commands;

/// Surface-wave dispersion imaging pipeline: synthetic soil-over-rock
/// datasets, CNN training, predictive metrics, and explainability maps.
#[derive(Parser)]
#[command(name = "swx", version, about)]
struct Cli {
    /// Configuration file (TOML). Defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<std::path::PathBuf>,

    /// Override the config's base seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the config's output directory.
    #[arg(long, global = true)]
    out_dir: Option<std::path::PathBuf>,

    /// Worker threads for data-parallel stages (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate subsurface models, simulate wavefields, and write train/test
    /// dataset containers.
    Gen(commands::gen::GenArgs),
    /// Train one of the five architectures on a dataset container.
    Train(commands::train::TrainArgs),
    /// Evaluate a checkpoint: MAPE/MSSIM report and comparison figures.
    Evaluate(commands::evaluate::EvaluateArgs),
    /// Render Score-CAM heatmaps or SHAP attribution maps.
    Explain(commands::explain::ExplainArgs),
    /// Dataset summary figures and statistics.
    Report(commands::report::ReportArgs),
}

fn main() {
    let cli = Cli::parse();

    #[cfg(feature = "parallel")]
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: could not configure {n} threads: {e}");
            std::process::exit(2);
        }
    }
    #[cfg(not(feature = "parallel"))]
    if cli.threads.is_some() {
        eprintln!("warning: built without the parallel feature; --threads ignored");
    }

    let mut config = match &cli.config {
        Some(path) => match swx_core::config::RunConfig::load(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                std::process::exit(e.exit_code());
            }
        },
        None => swx_core::config::RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
        config.train.seed = seed;
    }
    if let Some(dir) = &cli.out_dir {
        config.out_dir = dir.display().to_string();
    }

    let result = match cli.command {
        Command::Gen(args) => commands::gen::run(&config, args),
        Command::Train(args) => commands::train::run(&config, args),
        Command::Evaluate(args) => commands::evaluate::run(&config, args),
        Command::Explain(args) => commands::explain::run(&config, args),
        Command::Report(args) => commands::report::run(&config, args),
    };

    if let Err(e) = result {
        eprintln!("error: {e}");
        let code = e
            .downcast_ref::<swx_core::Error>()
            .map(swx_core::Error::exit_code)
            .unwrap_or(1);
        std::process::exit(code);
    }
}
