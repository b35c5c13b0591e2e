use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng::{self, Rng};
use crate::voxel::VoxelGrid;

/// Axis-aligned analytic solid. Coordinates are continuous with voxel
/// `(i, j, k)` centered at `(i + 0.5, j + 0.5, k + 0.5)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Primitive {
    Sphere { center: [f64; 3], radius: f64 },
    Cuboid { center: [f64; 3], half_extents: [f64; 3] },
    Ellipsoid { center: [f64; 3], semi_axes: [f64; 3] },
}

impl Primitive {
    fn center(&self) -> [f64; 3] {
        match *self {
            Primitive::Sphere { center, .. }
            | Primitive::Cuboid { center, .. }
            | Primitive::Ellipsoid { center, .. } => center,
        }
    }

    fn half_box(&self) -> [f64; 3] {
        match *self {
            Primitive::Sphere { radius, .. } => [radius; 3],
            Primitive::Cuboid { half_extents, .. } => half_extents,
            Primitive::Ellipsoid { semi_axes, .. } => semi_axes,
        }
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        let c = self.center();
        let d = [p[0] - c[0], p[1] - c[1], p[2] - c[2]];
        match *self {
            Primitive::Sphere { radius, .. } => d[0] * d[0] + d[1] * d[1] + d[2] * d[2] <= radius * radius,
            Primitive::Cuboid { half_extents: h, .. } => (0..3).all(|k| d[k].abs() <= h[k]),
            Primitive::Ellipsoid { semi_axes: a, .. } => (0..3).map(|k| (d[k] / a[k]).powi(2)).sum::<f64>() <= 1.0,
        }
    }

    /// `key=value` pairs separated by `;`, for manifests.
    pub fn describe(&self) -> String {
        let c = self.center();
        let v3 = |v: [f64; 3]| format!("{:.4}:{:.4}:{:.4}", v[0], v[1], v[2]);
        match *self {
            Primitive::Sphere { radius, .. } => format!("shape=sphere;center={};radius={radius:.4}", v3(c)),
            Primitive::Cuboid { half_extents, .. } => {
                format!("shape=cuboid;center={};half_extents={}", v3(c), v3(half_extents))
            }
            Primitive::Ellipsoid { semi_axes, .. } => {
                format!("shape=ellipsoid;center={};semi_axes={}", v3(c), v3(semi_axes))
            }
        }
    }
}

/// Voxelizes `shape` into a cube of edge `size`: a voxel is solid iff its
/// center satisfies the shape's inequality. The shape's bounding box must
/// lie inside the cube.
pub fn primitive_solid(shape: &Primitive, size: usize) -> Result<VoxelGrid> {
    let c = shape.center();
    let h = shape.half_box();
    if h.iter().chain(&c).any(|v| !v.is_finite()) {
        return Err(Error::invalid("primitive parameters must be finite"));
    }
    if h.iter().any(|&v| v <= 0.0) {
        return Err(Error::invalid(format!("primitive size parameters {h:?} must be positive")));
    }
    let n = size as f64;
    if (0..3).any(|k| c[k] - h[k] < 0.0 || c[k] + h[k] > n) {
        return Err(Error::invalid(format!("primitive does not fit in a {size}^3 grid")));
    }
    Ok(VoxelGrid::from_fn([size; 3], |x, y, z| {
        shape.contains([x as f64 + 0.5, y as f64 + 0.5, z as f64 + 0.5])
    }))
}

/// Class of a synthetic solid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SolidClass {
    Sphere = 0,
    Cuboid = 1,
    Ellipsoid = 2,
}

impl SolidClass {
    pub const ALL: [SolidClass; 3] = [SolidClass::Sphere, SolidClass::Cuboid, SolidClass::Ellipsoid];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            SolidClass::Sphere => "sphere",
            SolidClass::Cuboid => "cuboid",
            SolidClass::Ellipsoid => "ellipsoid",
        }
    }
}

/// One member of a labeled solids dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Solid {
    pub grid: VoxelGrid,
    pub class: SolidClass,
    pub shape: Primitive,
}

fn random_solid(class: SolidClass, size: usize, r: &mut Rng) -> Primitive {
    let s = size as f64;
    let mid = s / 2.0;
    // Extents scale with the cube; the center jitters by up to one voxel.
    let mut center = [0.0; 3];
    for c in &mut center {
        *c = mid + r.random_range(-1.0..=1.0) * s / 16.0;
    }
    let room = mid - s / 16.0;
    let span = |r: &mut Rng, lo: f64, hi: f64| r.random_range(lo * room..=hi * room);
    match class {
        SolidClass::Sphere => Primitive::Sphere {
            center,
            radius: span(r, 0.4, 0.95),
        },
        SolidClass::Cuboid => Primitive::Cuboid {
            center,
            half_extents: [span(r, 0.3, 0.95), span(r, 0.3, 0.95), span(r, 0.3, 0.95)],
        },
        SolidClass::Ellipsoid => {
            // One long axis and two short ones, so that ellipsoids stay
            // clearly elongated.
            let long = span(r, 0.75, 1.0);
            let mut axes = [long, span(r, 0.3, 0.55) * long / room, span(r, 0.3, 0.55) * long / room];
            let rot = r.random_range(0..3usize);
            axes.rotate_right(rot);
            Primitive::Ellipsoid { center, semi_axes: axes }
        }
    }
}

/// `count` solids in cubes of edge `size`, cycling sphere, cuboid,
/// ellipsoid, with randomized extents and a small center jitter.
pub fn solids_dataset(size: usize, count: usize, seed: u64) -> Result<Vec<Solid>> {
    if size < 8 {
        return Err(Error::invalid("solids need a grid of at least 8^3"));
    }
    let mut r = rng::stream(seed, "solids");
    (0..count)
        .map(|i| {
            let class = SolidClass::ALL[i % 3];
            let shape = random_solid(class, size, &mut r);
            Ok(Solid {
                grid: primitive_solid(&shape, size)?,
                class,
                shape,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_sphere_is_one_voxel() {
        let s = Primitive::Sphere {
            center: [1.5; 3],
            radius: 0.6,
        };
        let g = primitive_solid(&s, 3).unwrap();
        assert_eq!(g.solid_count(), 1);
        assert_eq!(g.get(1, 1, 1), 1.0);
    }

    #[test]
    fn cuboid_spanning_two_centers_is_eight_voxel_cube() {
        let c = Primitive::Cuboid {
            center: [2.0; 3],
            half_extents: [0.5; 3],
        };
        let g = primitive_solid(&c, 4).unwrap();
        assert_eq!(g.solid_count(), 8);
        for (x, y, z) in [(1, 1, 1), (2, 2, 2), (1, 2, 1)] {
            assert_eq!(g.get(x, y, z), 1.0);
        }
    }

    #[test]
    fn round_ellipsoid_equals_sphere() {
        let center = [8.3, 7.9, 8.0];
        let a = primitive_solid(&Primitive::Sphere { center, radius: 5.5 }, 16).unwrap();
        let b = primitive_solid(
            &Primitive::Ellipsoid {
                center,
                semi_axes: [5.5; 3],
            },
            16,
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn degenerate_and_oversized_shapes_error() {
        let s = |radius| Primitive::Sphere { center: [4.0; 3], radius };
        assert!(primitive_solid(&s(0.0), 8).is_err());
        assert!(primitive_solid(&s(-1.0), 8).is_err());
        assert!(primitive_solid(&s(4.5), 8).is_err());
    }

    #[test]
    fn sphere_volume_converges() {
        for r in [10.0, 12.5] {
            let n = 2 * (r as usize) + 4;
            let g = primitive_solid(&Primitive::Sphere { center: [n as f64 / 2.0; 3], radius: r }, n).unwrap();
            let exact = 4.0 / 3.0 * std::f64::consts::PI * r * r * r;
            assert!((g.solid_count() as f64 / exact - 1.0).abs() < 0.05);
        }
    }

    #[test]
    fn dataset_is_balanced_and_deterministic() {
        let a = solids_dataset(16, 30, 5).unwrap();
        assert_eq!(a, solids_dataset(16, 30, 5).unwrap());
        for c in SolidClass::ALL {
            assert_eq!(a.iter().filter(|s| s.class == c).count(), 10);
        }
        assert!(a.iter().all(|s| s.grid.solid_count() > 0));
    }
}
