use anyhow::Context;
use clap::Args;

use swx_core::config::RunConfig;
use swx_core::container::DatasetContainer;
use swx_core::nn::checkpoint;
use swx_core::pipeline::evaluate_network;
use swx_core::render::save_side_by_side;

#[derive(Args)]
pub struct EvaluateArgs {
    /// Test dataset container.
    #[arg(long)]
    data: std::path::PathBuf,

    /// Network checkpoint to evaluate.
    #[arg(long)]
    checkpoint: std::path::PathBuf,

    /// Render truth/prediction panels for the first N records.
    #[arg(long, default_value_t = 8)]
    render: usize,

    /// Skip the manifest check against the current config.
    #[arg(long)]
    allow_mismatch: bool,
}

pub fn run(config: &RunConfig, args: EvaluateArgs) -> anyhow::Result<()> {
    config.validate()?;
    let out = super::ensure_dir(&config.out_dir)?;
    let mut container = if args.allow_mismatch {
        DatasetContainer::open_readonly(&args.data)?
    } else {
        DatasetContainer::open(&args.data, Some(config.manifest()))
            .with_context(|| format!("opening {}", args.data.display()))?
    };
    let records = container.read_all()?;
    if records.is_empty() {
        anyhow::bail!("dataset {} is empty", args.data.display());
    }
    let net = checkpoint::load(&args.checkpoint)?;
    let norm_constant = container.manifest().norm_constant;

    let (report, truths, preds) = evaluate_network(&net, &records, norm_constant, &config.ssim)?;
    let report_path = out.join("report.csv");
    report.write_csv(&report_path)?;
    eprintln!(
        "[evaluate] {} images: mean MAPE {:.2}%  mean MSSIM {:.3}",
        report.rows.len(),
        report.mean_mape(),
        report.mean_mssim()
    );
    eprintln!("[evaluate] report -> {}", report_path.display());

    if args.render > 0 {
        let fig_dir = super::ensure_dir(out.join("eval"))?;
        for (i, ((t, p), row)) in truths.iter().zip(&preds).zip(&report.rows).take(args.render).enumerate() {
            let path = fig_dir.join(format!("compare_{i:03}_seed{}.png", row.id));
            save_side_by_side(t, p, &path, 6)?;
        }
        eprintln!("[evaluate] figures -> {}", fig_dir.display());
    }
    Ok(())
}
