use anyhow::Context;
use clap::Args;

use swx_core::config::RunConfig;
use swx_core::pipeline::generate_dataset;
use swx_core::rng::{record_seed, rng_from_seed};
use swx_core::sim::{simulate_with_observer, SnapshotSink};

#[derive(Args)]
pub struct GenArgs {
    /// Total number of records (split into train and test containers).
    #[arg(long, default_value_t = 200)]
    count: u64,

    /// Fraction of records placed in the test container, drawn from a
    /// disjoint seed range after the training seeds.
    #[arg(long, default_value_t = 0.2)]
    test_fraction: f64,

    /// Continue a partially written dataset instead of starting over.
    #[arg(long)]
    resume: bool,

    /// Dump vertical-velocity field snapshots of the first model every N
    /// steps (PNG, for debugging).
    #[arg(long, value_name = "N")]
    snapshot_every: Option<usize>,

    /// Also write raw wavefield blocks (48 x nt traces) for each record.
    #[arg(long)]
    dump_wavefields: bool,
}

pub fn run(config: &RunConfig, args: GenArgs) -> anyhow::Result<()> {
    config.validate()?;
    if !(0.0..1.0).contains(&args.test_fraction) {
        anyhow::bail!("test fraction must be in [0, 1)");
    }
    let out = super::ensure_dir(&config.out_dir)?;
    config.save(out.join("run.toml"))?;

    let n_test = ((args.count as f64) * args.test_fraction).round() as u64;
    let n_train = args.count - n_test;

    if let Some(every) = args.snapshot_every {
        dump_snapshots(config, every, &out)?;
    }

    let mut log = |msg: String| eprintln!("[gen] {msg}");
    let train_path = out.join("train.swx");
    let outcome = generate_dataset(&train_path, config, 0, n_train, args.resume, &mut log)
        .with_context(|| format!("writing {}", train_path.display()))?;
    eprintln!(
        "[gen] train: {} records -> {} ({} unstable skipped)",
        outcome.written,
        train_path.display(),
        outcome.skipped.len()
    );

    if n_test > 0 {
        let test_path = out.join("test.swx");
        let outcome = generate_dataset(&test_path, config, n_train, n_test, args.resume, &mut log)
            .with_context(|| format!("writing {}", test_path.display()))?;
        eprintln!(
            "[gen] test: {} records -> {} ({} unstable skipped)",
            outcome.written,
            test_path.display(),
            outcome.skipped.len()
        );
    }

    if args.dump_wavefields {
        let wf_dir = super::ensure_dir(out.join("wavefields"))?;
        for i in 0..args.count {
            let seed = record_seed(config.seed, i);
            let mut rng = rng_from_seed(seed);
            let model = swx_core::geo::generate_model(&mut rng, &config.generator);
            match simulate_with_observer(&model, &config.sim, false, None) {
                Ok(wf) => wf.save(wf_dir.join(format!("{seed}.swxw")))?,
                Err(swx_core::Error::Unstable { .. }) => continue,
                Err(e) => return Err(e.into()),
            }
        }
        eprintln!("[gen] wavefield blocks -> {}", wf_dir.display());
    }
    Ok(())
}

fn dump_snapshots(config: &RunConfig, every: usize, out: &std::path::Path) -> anyhow::Result<()> {
    let snap_dir = super::ensure_dir(out.join("snapshots"))?;
    let seed = record_seed(config.seed, 0);
    let mut rng = rng_from_seed(seed);
    let model = swx_core::geo::generate_model(&mut rng, &config.generator);
    let mut save_error = None;
    let mut callback = |step: usize, field: swx_core::grid::Grid<f32>| {
        let g = field.map(|v| v as f64);
        let peak = g.data().iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        let norm = g.map(|v| if peak > 0.0 { v / peak } else { 0.0 });
        let path = snap_dir.join(format!("vz_{step:06}.png"));
        if let Err(e) = swx_core::render::save_attribution(&norm, &path, 1) {
            save_error = Some(e);
        }
    };
    let sink = SnapshotSink {
        every,
        callback: &mut callback,
    };
    simulate_with_observer(&model, &config.sim, false, Some(sink))?;
    if let Some(e) = save_error {
        return Err(e.into());
    }
    eprintln!("[gen] snapshots -> {}", snap_dir.display());
    Ok(())
}
