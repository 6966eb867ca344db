use clap::Args;

use swx_core::config::RunConfig;
use swx_core::container::DatasetContainer;
use swx_core::dispersion::{DispersionGrid, DispersionImage};
use swx_core::grid::Grid;
use swx_core::pipeline::record_truth;
use swx_core::render::{save_dispersion_image, save_vs_image};

#[derive(Args)]
pub struct ReportArgs {
    /// Dataset container to summarize.
    #[arg(long)]
    data: std::path::PathBuf,

    /// Render label/dispersion pairs for the first N records.
    #[arg(long, default_value_t = 6)]
    figures: usize,
}

pub fn run(config: &RunConfig, args: ReportArgs) -> anyhow::Result<()> {
    let out = super::ensure_dir(std::path::Path::new(&config.out_dir).join("report"))?;
    let mut container = DatasetContainer::open_readonly(&args.data)?;
    let records = container.read_all()?;
    if records.is_empty() {
        anyhow::bail!("dataset {} is empty", args.data.display());
    }
    let manifest = container.manifest();

    let mut counts = [0usize; 3];
    let mut vs_lo = f64::INFINITY;
    let mut vs_hi = f64::NEG_INFINITY;
    for r in &records {
        counts[r.category.tag() as usize] += 1;
        let truth = record_truth(r, manifest.norm_constant);
        vs_lo = vs_lo.min(truth.min());
        vs_hi = vs_hi.max(truth.max());
    }

    let stats_path = out.join("stats.txt");
    let n = records.len();
    let stats = format!(
        "records: {n}\nattempted: {}\nbase_seed: {}\nnorm_constant_mps: {}\n\
         categories: linear {} ({:.1}%), slight {} ({:.1}%), high {} ({:.1}%)\n\
         vs_range_mps: {vs_lo:.1} .. {vs_hi:.1}\n",
        container.attempted(),
        manifest.base_seed,
        manifest.norm_constant,
        counts[0],
        100.0 * counts[0] as f64 / n as f64,
        counts[1],
        100.0 * counts[1] as f64 / n as f64,
        counts[2],
        100.0 * counts[2] as f64 / n as f64,
    );
    std::fs::write(&stats_path, &stats)?;
    eprint!("{stats}");
    eprintln!("[report] stats -> {}", stats_path.display());

    for (i, r) in records.iter().take(args.figures).enumerate() {
        let truth = record_truth(r, manifest.norm_constant);
        save_vs_image(&truth, out.join(format!("label_{i:03}_seed{}.png", r.seed)), 6)?;
        let img = DispersionImage {
            power: Grid::from_vec(400, 76, r.dispersion.iter().map(|&v| v as f64).collect()),
            grid: DispersionGrid::default(),
            provenance: r.seed.to_string(),
        };
        save_dispersion_image(&img, out.join(format!("dispersion_{i:03}_seed{}.png", r.seed)), 2)?;
    }
    if args.figures > 0 {
        eprintln!("[report] figures -> {}", out.display());
    }
    Ok(())
}
