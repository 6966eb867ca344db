pub mod evaluate;
pub mod explain;
pub mod gen;
pub mod report;
pub mod train;

use std::path::{Path, PathBuf};

pub fn ensure_dir(dir: impl AsRef<Path>) -> anyhow::Result<PathBuf> {
    let dir = dir.as_ref().to_path_buf();
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}
