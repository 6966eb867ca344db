//! Explainability methods adapted to image regression: Score-CAM heatmaps
//! (per layer and layer-averaged) and DeepLIFT-based SHAP attributions
//! against a background reference set.

mod deepshap;
mod score;
mod scorecam;
mod upsample;

pub use deepshap::{deep_shap, deep_shap_single, AttributionMap, ReferenceAttribution};
pub use score::OutputScore;
pub use scorecam::{average_score_cam, score_cam, Heatmap, HeatmapSource};
pub use upsample::bilinear_resize;
