use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng;
use crate::voxel::{LabeledVolume, VoxelGrid};

/// Labels every voxel with the nearest of `points` (Euclidean distance from
/// the voxel center, ties to the lowest point index). Points whose cell
/// contains no voxel center are dropped and the remaining labels renumbered
/// `1..=K` in point order.
pub fn voronoi_from_points(dims: [usize; 3], points: &[[f64; 3]]) -> Result<LabeledVolume> {
    if points.is_empty() {
        return Err(Error::invalid("voronoi tessellation needs at least one seed point"));
    }
    if dims.contains(&0) {
        return Err(Error::dim("voronoi", format!("grid dims {dims:?} contain zero")));
    }
    let n = dims.iter().product::<usize>();
    let mut nearest = Vec::with_capacity(n);
    for x in 0..dims[0] {
        for y in 0..dims[1] {
            for z in 0..dims[2] {
                let c = [x as f64 + 0.5, y as f64 + 0.5, z as f64 + 0.5];
                let mut best = (f64::INFINITY, 0usize);
                for (i, p) in points.iter().enumerate() {
                    let d = (c[0] - p[0]).powi(2) + (c[1] - p[1]).powi(2) + (c[2] - p[2]).powi(2);
                    if d < best.0 {
                        best = (d, i);
                    }
                }
                nearest.push(best.1);
            }
        }
    }
    let mut used = vec![false; points.len()];
    for &i in &nearest {
        used[i] = true;
    }
    let mut relabel = vec![0u32; points.len()];
    let mut k = 0u32;
    for (i, &u) in used.iter().enumerate() {
        if u {
            k += 1;
            relabel[i] = k;
        }
    }
    let labels = nearest.into_iter().map(|i| relabel[i]).collect();
    Ok(LabeledVolume::from_parts_unchecked(dims, labels, k))
}

/// Tessellation parameters: `seeds` uniform random points in a cube of
/// edge `domain`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VoronoiSpec {
    pub domain: usize,
    pub seeds: usize,
    pub seed: u64,
}

pub fn voronoi_grains(spec: &VoronoiSpec) -> Result<LabeledVolume> {
    if spec.seeds == 0 {
        return Err(Error::invalid("voronoi tessellation needs at least one seed point"));
    }
    if spec.seeds > spec.domain.pow(3) {
        return Err(Error::invalid(format!(
            "{} seed points exceed the {} voxels of the domain",
            spec.seeds,
            spec.domain.pow(3)
        )));
    }
    let mut r = rng::stream(spec.seed, "voronoi/points");
    let d = spec.domain as f64;
    let points: Vec<[f64; 3]> = (0..spec.seeds)
        .map(|_| [r.random::<f64>() * d, r.random::<f64>() * d, r.random::<f64>() * d])
        .collect();
    voronoi_from_points([spec.domain; 3], &points)
}

/// Parameters for a set of isolated training grains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GrainSpec {
    /// Edge of each exported cube.
    pub size: usize,
    pub count: usize,
    /// Edge of each tessellated domain.
    pub domain: usize,
    /// Seed points per domain.
    pub seeds_per_domain: usize,
    pub seed: u64,
}

impl GrainSpec {
    /// Grains of roughly 300 voxels, centered in cubes of edge `size`.
    pub fn new(size: usize, count: usize, seed: u64) -> Self {
        let domain = 3 * size;
        // Mean grain volume domain³ / seeds = 0.075·size³.
        let seeds_per_domain = (domain.pow(3) as f64 / (0.075 * (size as f64).powi(3))).round() as usize;
        Self {
            size,
            count,
            domain,
            seeds_per_domain: seeds_per_domain.max(1),
            seed,
        }
    }
}

/// A grain exported from a tessellation.
#[derive(Debug, Clone, PartialEq)]
pub struct Grain {
    pub grid: VoxelGrid,
    /// Index of the tessellated domain it came from.
    pub domain_index: usize,
    pub label: u32,
    pub volume: usize,
}

/// Tessellates successive domains and keeps grains that do not touch the
/// domain boundary and fit in the export cube, in label order, until
/// `count` grains are collected.
pub fn grain_dataset(spec: &GrainSpec) -> Result<Vec<Grain>> {
    if spec.size == 0 || spec.domain == 0 {
        return Err(Error::invalid("grain cube and domain sizes must be positive"));
    }
    let mut out = Vec::with_capacity(spec.count);
    let mut domain_index = 0;
    while out.len() < spec.count {
        let vol = voronoi_grains(&VoronoiSpec {
            domain: spec.domain,
            seeds: spec.seeds_per_domain,
            seed: rng::derive_seed(spec.seed, &format!("domain/{domain_index}")),
        })?;
        let before = out.len();
        let volumes = vol.volumes();
        for label in 1..=vol.count() as u32 {
            if out.len() == spec.count {
                break;
            }
            if vol.touches_boundary(label) {
                continue;
            }
            if let Ok(grid) = vol.extract_grain(label, spec.size) {
                out.push(Grain {
                    grid,
                    domain_index,
                    label,
                    volume: volumes[label as usize - 1],
                });
            }
        }
        if out.len() == before {
            return Err(Error::invalid(format!(
                "domain {domain_index} produced no interior grain that fits a {}^3 cube",
                spec.size
            )));
        }
        domain_index += 1;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_seed_labels_everything_one() {
        let v = voronoi_from_points([3, 4, 5], &[[1.0, 1.0, 1.0]]).unwrap();
        assert_eq!(v.count(), 1);
        assert!(v.labels().iter().all(|&l| l == 1));
    }

    #[test]
    fn opposite_corners_split_by_bisector() {
        let v = voronoi_from_points([4, 4, 4], &[[0.0; 3], [4.0; 3]]).unwrap();
        for x in 0..4 {
            for y in 0..4 {
                for z in 0..4 {
                    // Closer to the origin iff x + y + z < 4.5.
                    let expected = if x + y + z <= 4 { 1 } else { 2 };
                    assert_eq!(v.get(x, y, z), expected, "({x},{y},{z})");
                }
            }
        }
    }

    #[test]
    fn equidistant_voxel_goes_to_lowest_seed() {
        let v = voronoi_from_points([3, 1, 1], &[[0.5, 0.5, 0.5], [2.5, 0.5, 0.5]]).unwrap();
        assert_eq!(v.labels(), &[1, 1, 2]);
    }

    #[test]
    fn empty_cells_are_dropped() {
        let v = voronoi_from_points([2, 1, 1], &[[0.5, 0.5, 0.5], [0.5, 0.5, 0.5], [1.5, 0.5, 0.5]]).unwrap();
        assert_eq!(v.count(), 2);
        assert_eq!(v.labels(), &[1, 2]);
    }

    #[test]
    fn zero_seeds_error() {
        assert!(voronoi_from_points([2, 2, 2], &[]).is_err());
        let spec = VoronoiSpec {
            domain: 4,
            seeds: 0,
            seed: 1,
        };
        assert!(voronoi_grains(&spec).is_err());
    }

    #[test]
    fn fifty_seeds_partition_the_domain() {
        let v = voronoi_grains(&VoronoiSpec {
            domain: 64,
            seeds: 50,
            seed: 7,
        })
        .unwrap();
        assert_eq!(v.count(), 50);
        let vols = v.volumes();
        assert!(vols.iter().all(|&n| n > 0));
        assert_eq!(vols.iter().sum::<usize>(), 64 * 64 * 64);
    }

    #[test]
    fn grain_dataset_is_deterministic_and_interior() {
        let spec = GrainSpec::new(16, 12, 3);
        let a = grain_dataset(&spec).unwrap();
        let b = grain_dataset(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 12);
        for g in &a {
            assert_eq!(g.grid.dims(), [16; 3]);
            assert_eq!(g.grid.solid_count(), g.volume);
        }
    }
}
