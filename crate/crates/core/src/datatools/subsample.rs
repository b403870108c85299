use std::fs;
use std::path::Path;

use super::split::{copy_all, ensure_empty_destination, scan_classes, SplitSummary};
use crate::error::{Error, Result};
use crate::numerics::Rng;

/// Files kept per class: `max(1, floor(fraction · n))`.
pub fn subsample_count(n: usize, fraction: f64) -> usize {
    ((fraction * n as f64).floor() as usize).clamp(1, n)
}

/// Copies a seeded random `fraction` of every class directory into
/// `dest/<class>/`, keeping the class layout of the source.
pub fn subsample(data_dir: &Path, dest: &Path, fraction: f64, seed: u64) -> Result<SplitSummary> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::invalid(format!(
            "fraction {fraction} outside (0, 1]"
        )));
    }
    let classes = scan_classes(data_dir)?;
    ensure_empty_destination(dest)?;
    let mut rng = Rng::new(seed);
    let mut summary = SplitSummary::default();
    let mut jobs = Vec::new();
    for (name, mut files) in classes {
        rng.shuffle(&mut files);
        let keep = subsample_count(files.len(), fraction);
        let dir = dest.join(&name);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for f in &files[..keep] {
            jobs.push((data_dir.join(&name).join(f), dir.join(f)));
        }
        summary
            .counts
            .entry("subsample".to_string())
            .or_default()
            .insert(name, keep);
    }
    copy_all(&jobs)?;
    Ok(summary)
}
