use anyhow::Context;
use clap::Args;

use swx_core::config::RunConfig;
use swx_core::container::DatasetContainer;
use swx_core::nn::{checkpoint, train, ArchitectureId, Network};
use swx_core::pipeline::records_to_tensors;

#[derive(Args)]
pub struct TrainArgs {
    /// Training dataset container.
    #[arg(long)]
    data: std::path::PathBuf,

    /// Architecture: transpose-conv, deep-3x3, deep-3x1, shallow-3x3, shallow-3x1.
    #[arg(long, default_value = "shallow-3x1")]
    arch: String,

    /// Skip the manifest check against the current config.
    #[arg(long)]
    allow_mismatch: bool,
}

pub fn run(config: &RunConfig, args: TrainArgs) -> anyhow::Result<()> {
    config.validate()?;
    let arch = ArchitectureId::from_name(&args.arch)?;
    let out = super::ensure_dir(&config.out_dir)?;

    let mut container = if args.allow_mismatch {
        DatasetContainer::open_readonly(&args.data)?
    } else {
        DatasetContainer::open(&args.data, Some(config.manifest()))
            .with_context(|| format!("opening {}", args.data.display()))?
    };
    if container.is_empty() {
        anyhow::bail!("dataset {} is empty", args.data.display());
    }
    let records = container.read_all()?;
    let data = records_to_tensors(&records);
    eprintln!("[train] {} records, architecture {}", data.len(), arch.name());

    let mut net = Network::<f32>::build(arch, config.train.seed)?;
    eprintln!("[train] {} trainable parameters", net.parameter_count());
    let report = train(&mut net, &data, &config.train)?;
    for e in &report.history {
        eprintln!(
            "[train] epoch {:3}  train {:.5}  val {:.5}",
            e.epoch, e.train_mae, e.val_mae
        );
    }

    let ckpt_path = out.join(format!("{}.ckpt", arch.name()));
    checkpoint::save(&net, &ckpt_path)?;
    let csv_path = out.join(format!("{}_loss.csv", arch.name()));
    report.write_csv(&csv_path)?;
    config.save(out.join(format!("{}_train_config.toml", arch.name())))?;
    eprintln!("[train] checkpoint -> {}", ckpt_path.display());
    eprintln!("[train] loss history -> {}", csv_path.display());
    Ok(())
}
