//! Deterministic synthetic datasets: Voronoi grain tessellations and
//! labeled primitive solids.

mod primitives;
mod voronoi;

pub use primitives::{primitive_solid, solids_dataset, Primitive, Solid, SolidClass};
pub use voronoi::{grain_dataset, voronoi_from_points, voronoi_grains, Grain, GrainSpec, VoronoiSpec};

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// One generated file and how it was made.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestRow {
    pub file: String,
    pub label: String,
    /// `key=value` pairs separated by `;`.
    pub params: String,
}

pub const MANIFEST_HEADER: &str = "file,label,params";

pub fn write_manifest(path: &Path, rows: &[ManifestRow]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{MANIFEST_HEADER}")?;
    for r in rows {
        if [&r.file, &r.label, &r.params].iter().any(|s| s.contains([',', '\n'])) {
            return Err(Error::invalid(format!("manifest field of {} contains a comma or newline", r.file)));
        }
        writeln!(out, "{},{},{}", r.file, r.label, r.params)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRow>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    if lines.next() != Some(MANIFEST_HEADER) {
        return Err(Error::format(0, "unexpected manifest header"));
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            let mut f = l.splitn(3, ',');
            match (f.next(), f.next(), f.next()) {
                (Some(file), Some(label), Some(params)) => Ok(ManifestRow {
                    file: file.into(),
                    label: label.into(),
                    params: params.into(),
                }),
                _ => Err(Error::invalid(format!("bad manifest row: {l}"))),
            }
        })
        .collect()
}
