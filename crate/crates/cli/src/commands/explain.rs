use anyhow::Context;
use clap::{Args, ValueEnum};

use swx_core::config::RunConfig;
use swx_core::container::DatasetContainer;
use swx_core::dispersion::{DispersionGrid, DispersionImage};
use swx_core::grid::Grid;
use swx_core::nn::checkpoint;
use swx_core::pipeline::{record_input, sample_background};
use swx_core::render::{save_attribution, save_heatmap};
use swx_core::xai::{average_score_cam, deep_shap, deep_shap_single, score_cam};

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    ScoreCam,
    DeepShap,
}

#[derive(Args)]
pub struct ExplainArgs {
    /// Dataset container supplying the inputs (and SHAP background).
    #[arg(long)]
    data: std::path::PathBuf,

    #[arg(long)]
    checkpoint: std::path::PathBuf,

    #[arg(long, value_enum)]
    method: Method,

    /// Record indices to explain.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    inputs: Vec<usize>,

    /// Convolutional layer index for Score-CAM; omitted = every layer plus
    /// the average.
    #[arg(long)]
    layer: Option<usize>,

    /// Also write heatmaps composited over the grayscale input image.
    #[arg(long)]
    overlay: bool,

    /// Print the per-reference summation-to-delta residuals.
    #[arg(long)]
    check_completeness: bool,

    /// Skip the manifest check against the current config.
    #[arg(long)]
    allow_mismatch: bool,
}

fn raw_dump(path: &std::path::Path, values: &Grid<f64>) -> anyhow::Result<()> {
    use std::io::Write;
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    for &v in values.data() {
        f.write_all(&(v as f32).to_le_bytes())?;
    }
    Ok(())
}

pub fn run(config: &RunConfig, args: ExplainArgs) -> anyhow::Result<()> {
    config.validate()?;
    let out = super::ensure_dir(std::path::Path::new(&config.out_dir).join("explain"))?;
    let mut container = if args.allow_mismatch {
        DatasetContainer::open_readonly(&args.data)?
    } else {
        DatasetContainer::open(&args.data, Some(config.manifest()))
            .with_context(|| format!("opening {}", args.data.display()))?
    };
    let records = container.read_all()?;
    let net = checkpoint::load(&args.checkpoint)?;
    let score = config.xai.score;

    for &index in &args.inputs {
        let record = records
            .get(index)
            .ok_or_else(|| swx_core::Error::InvalidArgument(format!("input index {index} out of range")))?;
        let input = record_input(record);
        let id = format!("idx{index}_seed{}", record.seed);
        let display_input = DispersionImage {
            power: Grid::from_vec(input.h, input.w, input.data.iter().map(|&v| v as f64).collect()),
            grid: DispersionGrid::default(),
            provenance: id.clone(),
        };

        match args.method {
            Method::ScoreCam => {
                let layers = match args.layer {
                    Some(k) => vec![k],
                    None => net.conv_layer_indices(),
                };
                for k in layers {
                    let h = score_cam(&net, &input, k, score, &id)?;
                    emit_heatmap(&h.values, &display_input, &out, &format!("{id}_scorecam_layer{k}"), args.overlay)?;
                }
                if args.layer.is_none() {
                    let avg = average_score_cam(&net, &input, score, &id)?;
                    emit_heatmap(&avg.values, &display_input, &out, &format!("{id}_scorecam_average"), args.overlay)?;
                }
            }
            Method::DeepShap => {
                let background = sample_background(&records, config.xai.background_count, config.xai.background_seed);
                let net64 = net.cast::<f64>();
                let x64 = input.cast::<f64>();
                if args.check_completeness {
                    let mut worst = 0.0f64;
                    let mut mean_sr = 0.0;
                    for r in &background {
                        let single = deep_shap_single(&net64, &x64, r, score)?;
                        worst = worst.max(single.completeness_residual());
                        mean_sr += single.score_r / background.len() as f64;
                        eprintln!(
                            "[explain] {id}: sum(phi) = {:+.6e}, S(x)-S(r) = {:+.6e}, residual {:.2e}",
                            single.phi_sum(),
                            single.score_x - single.score_r,
                            single.completeness_residual()
                        );
                    }
                    eprintln!("[explain] {id}: worst residual {worst:.2e}, mean S(r) {mean_sr:+.6e}");
                }
                let map = deep_shap(&net64, &x64, &background, score, &id)?;
                let path = out.join(format!("{id}_shap.png"));
                save_attribution(&map.values, &path, 2)?;
                raw_dump(&out.join(format!("{id}_shap.f32")), &map.values)?;
                eprintln!("[explain] {} -> {}", id, path.display());
            }
        }
    }
    Ok(())
}

fn emit_heatmap(
    values: &Grid<f64>,
    input: &DispersionImage,
    out: &std::path::Path,
    stem: &str,
    overlay: bool,
) -> anyhow::Result<()> {
    let path = out.join(format!("{stem}.png"));
    save_heatmap(values, None, 1.0, &path, 2)?;
    raw_dump(&out.join(format!("{stem}.f32")), values)?;
    if overlay {
        save_heatmap(values, Some(input), 0.6, &out.join(format!("{stem}_overlay.png")), 2)?;
    }
    eprintln!("[explain] {stem} -> {}", path.display());
    Ok(())
}
