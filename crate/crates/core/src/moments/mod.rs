//! Second-order moment invariants of voxelized grains.
//!
//! Moments are Riemann sums over unit point masses at voxel centers
//! `(i + 0.5, j + 0.5, k + 0.5)`. Sums are accumulated exactly in integers
//! using coordinates local to the grain's bounding box, so invariants do
//! not depend on where the grain sits in its grid.

mod summary;

pub use summary::{
    compare, read_summary_csv, summarize, summarize_in_range, write_comparison_csv,
    write_summary_csv, Comparison, DistributionSummary, Invariant,
};

use std::fmt;
use std::io::Write;

use crate::voxel::{VoxelGrid, DEFAULT_THRESHOLD};

/// Volume, centroid and central second-order moments of a binary grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSet {
    /// `μ000`, the number of solid voxels.
    pub volume: f64,
    /// Centroid in voxel units.
    pub centroid: [f64; 3],
    /// Central moments `[μ200, μ020, μ002, μ110, μ101, μ011]`.
    pub central: [f64; 6],
    /// `4·V·μ` for each central moment, exact.
    scaled: Option<[i128; 6]>,
}

impl MomentSet {
    /// Builds a moment set from floating-point values only.
    pub fn from_values(volume: f64, centroid: [f64; 3], central: [f64; 6]) -> Self {
        Self {
            volume,
            centroid,
            central,
            scaled: None,
        }
    }

    /// The symmetric central moment matrix.
    pub fn matrix(&self) -> [[f64; 3]; 3] {
        let [a, b, c, xy, xz, yz] = self.central;
        [[a, xy, xz], [xy, b, yz], [xz, yz, c]]
    }
}

/// Computes `V`, the centroid and central second moments.
///
/// Voxels with value ≥ 0.5 count as solid.
pub fn compute_moments(grid: &VoxelGrid) -> MomentSet {
    let mut lo = [usize::MAX; 3];
    let mut any = false;
    for (i, &v) in grid.data().iter().enumerate() {
        if v >= DEFAULT_THRESHOLD {
            let c = grid.coords(i);
            for k in 0..3 {
                lo[k] = lo[k].min(c[k]);
            }
            any = true;
        }
    }
    if !any {
        return MomentSet {
            volume: 0.0,
            centroid: [0.0; 3],
            central: [0.0; 6],
            scaled: Some([0; 6]),
        };
    }

    // Doubled local coordinates u = 2(i - lo) + 1 keep voxel centers integral.
    let mut n: i128 = 0;
    let mut s1 = [0i128; 3];
    let mut s2 = [0i128; 6];
    for (i, &v) in grid.data().iter().enumerate() {
        if v < DEFAULT_THRESHOLD {
            continue;
        }
        let c = grid.coords(i);
        let u = [0, 1, 2].map(|k| 2 * (c[k] - lo[k]) as i128 + 1);
        n += 1;
        for k in 0..3 {
            s1[k] += u[k];
        }
        s2[0] += u[0] * u[0];
        s2[1] += u[1] * u[1];
        s2[2] += u[2] * u[2];
        s2[3] += u[0] * u[1];
        s2[4] += u[0] * u[2];
        s2[5] += u[1] * u[2];
    }
    const PAIRS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];
    // 4·V·μ_ab = V·Σu_a·u_b − Σu_a·Σu_b
    let scaled = [0, 1, 2, 3, 4, 5].map(|p| {
        let (a, b) = PAIRS[p];
        n * s2[p] - s1[a] * s1[b]
    });
    let volume = n as f64;
    let central = scaled.map(|q| q as f64 / (4.0 * volume));
    let centroid = [0, 1, 2].map(|k| lo[k] as f64 + s1[k] as f64 / (2.0 * volume));
    MomentSet {
        volume,
        centroid,
        central,
        scaled: Some(scaled),
    }
}

/// Why an invariant triple was rejected as nonphysical.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InvalidReason {
    ZeroVolume,
    SingularO,
    NonFinite,
}

impl fmt::Display for InvalidReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InvalidReason::ZeroVolume => "zero_volume",
            InvalidReason::SingularO => "singular_O",
            InvalidReason::NonFinite => "nonfinite",
        })
    }
}

/// Volume-normalized invariants `(Ω1, Ω2, Ω3)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmegaInvariants {
    pub omega1: f64,
    pub omega2: f64,
    pub omega3: f64,
    /// `None` when the triple is valid.
    pub invalid_reason: Option<InvalidReason>,
}

impl OmegaInvariants {
    pub fn is_valid(&self) -> bool {
        self.invalid_reason.is_none()
    }

    pub fn get(&self, which: Invariant) -> f64 {
        match which {
            Invariant::Omega1 => self.omega1,
            Invariant::Omega2 => self.omega2,
            Invariant::Omega3 => self.omega3,
        }
    }

    pub fn values(&self) -> [f64; 3] {
        [self.omega1, self.omega2, self.omega3]
    }
}

/// Non-normalized invariants `(O1, O2, O3)`: trace, sum of principal 2×2
/// minors and determinant of the central moment matrix.
pub fn o_invariants(m: &MomentSet) -> [f64; 3] {
    if let Some(q) = m.scaled {
        if let Some(o) = exact_o(q, m.volume) {
            return o;
        }
    }
    let [a, b, c, xy, xz, yz] = m.central;
    let o1 = a + b + c;
    let o2 = a * b + a * c + b * c - xy * xy - xz * xz - yz * yz;
    let o3 = a * b * c + 2.0 * xy * xz * yz - a * yz * yz - b * xz * xz - c * xy * xy;
    [o1, o2, o3]
}

fn exact_o(q: [i128; 6], volume: f64) -> Option<[f64; 3]> {
    let [a, b, c, xy, xz, yz] = q;
    let o1 = a.checked_add(b)?.checked_add(c)?;
    let minors = [
        a.checked_mul(b)?.checked_sub(xy.checked_mul(xy)?)?,
        a.checked_mul(c)?.checked_sub(xz.checked_mul(xz)?)?,
        b.checked_mul(c)?.checked_sub(yz.checked_mul(yz)?)?,
    ];
    let o2 = minors[0].checked_add(minors[1])?.checked_add(minors[2])?;
    // det by cofactor expansion along the first row
    let cof = [
        minors[2],
        xy.checked_mul(c)?.checked_sub(yz.checked_mul(xz)?)?,
        xy.checked_mul(yz)?.checked_sub(b.checked_mul(xz)?)?,
    ];
    let o3 = a
        .checked_mul(cof[0])?
        .checked_sub(xy.checked_mul(cof[1])?)?
        .checked_add(xz.checked_mul(cof[2])?)?;
    let v4 = 4.0 * volume;
    Some([
        o1 as f64 / v4,
        o2 as f64 / (v4 * v4),
        o3 as f64 / (v4 * v4 * v4),
    ])
}

/// Normalizes `O1..O3` by volume and flags nonphysical results.
///
/// A triple is invalid when `V = 0`, any `Oi ≤ 0`, or any `Ω` is not finite.
pub fn omega_invariants(m: &MomentSet) -> OmegaInvariants {
    let v = m.volume;
    let [o1, o2, o3] = o_invariants(m);
    // cbrt keeps perfect-cube volumes exact.
    let omega1 = 3.0 * v.cbrt().powi(5) / o1;
    let omega2 = 3.0 * v.cbrt().powi(10) / o2;
    let omega3 = v.powi(5) / o3;
    let invalid_reason = if v <= 0.0 {
        Some(InvalidReason::ZeroVolume)
    } else if o1 <= 0.0 || o2 <= 0.0 || o3 <= 0.0 {
        Some(InvalidReason::SingularO)
    } else if !(omega1.is_finite() && omega2.is_finite() && omega3.is_finite()) {
        Some(InvalidReason::NonFinite)
    } else {
        None
    };
    OmegaInvariants {
        omega1,
        omega2,
        omega3,
        invalid_reason,
    }
}

/// Binarized grid straight to invariants.
pub fn grain_invariants(grid: &VoxelGrid) -> OmegaInvariants {
    omega_invariants(&compute_moments(grid))
}

/// Writes one CSV row per grain: `id,volume,omega1,omega2,omega3,valid,reason`.
pub fn write_invariants_csv<W: Write>(
    mut out: W,
    rows: &[(String, f64, OmegaInvariants)],
) -> std::io::Result<()> {
    writeln!(out, "id,volume,omega1,omega2,omega3,valid,reason")?;
    for (id, volume, inv) in rows {
        writeln!(
            out,
            "{id},{volume},{},{},{},{},{}",
            inv.omega1,
            inv.omega2,
            inv.omega3,
            inv.is_valid(),
            inv.invalid_reason.map(|r| r.to_string()).unwrap_or_default()
        )?;
    }
    Ok(())
}
