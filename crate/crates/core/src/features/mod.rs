//! Evaluation with a trained discriminator: pooled hidden-layer features,
//! a linear SVM on top of them, and nearest-neighbor search.

mod extract;
mod svm;

pub use extract::{extract_features, feature_length, pooling_schedule, Pooling, FEATURE_LAYERS};
pub use svm::{accuracy, nearest_neighbor, svm_train, LinearModel, SvmConfig};

use std::io::Write;

/// One row per sample: the label, then the feature values.
pub fn write_features_csv<W: Write>(mut out: W, rows: &[(String, Vec<f32>)]) -> std::io::Result<()> {
    let d = rows.first().map_or(0, |r| r.1.len());
    write!(out, "label")?;
    for j in 0..d {
        write!(out, ",f{j}")?;
    }
    writeln!(out)?;
    for (label, f) in rows {
        write!(out, "{label}")?;
        for v in f {
            write!(out, ",{v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}
