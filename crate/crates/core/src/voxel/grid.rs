use crate::error::{Error, Result};

/// Default solid/void cut for sigmoid output.
pub const DEFAULT_THRESHOLD: f32 = 0.5;

/// Dense 3D occupancy field with values in `[0, 1]`.
///
/// Voxels are stored row-major with the z index fastest, so the linear
/// index of `(x, y, z)` is `(x * ny + y) * nz + z`.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    dims: [usize; 3],
    data: Vec<f32>,
    pitch: f32,
}

fn check_dims(op: &'static str, dims: [usize; 3]) -> Result<usize> {
    if dims.contains(&0) {
        return Err(Error::dim(op, format!("dims {dims:?} must be positive")));
    }
    dims.iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::dim(op, format!("dims {dims:?} overflow")))
}

impl VoxelGrid {
    pub fn new(dims: [usize; 3], data: Vec<f32>, pitch: f32) -> Result<Self> {
        let len = check_dims("VoxelGrid::new", dims)?;
        if data.len() != len {
            return Err(Error::dim(
                "VoxelGrid::new",
                format!("data length {} != {}", data.len(), len),
            ));
        }
        if let Some(i) = data.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid(format!(
                "voxel {i} has value {} outside [0, 1]",
                data[i]
            )));
        }
        if !(pitch.is_finite() && pitch > 0.0) {
            return Err(Error::invalid(format!("pitch {pitch} must be positive")));
        }
        Ok(Self { dims, data, pitch })
    }

    /// An all-void grid with unit pitch.
    pub fn zeros(dims: [usize; 3]) -> Self {
        let len = check_dims("VoxelGrid::zeros", dims).expect("valid dims");
        Self {
            dims,
            data: vec![0.0; len],
            pitch: 1.0,
        }
    }

    /// Cubic all-void grid of edge `n`.
    pub fn cube(n: usize) -> Self {
        Self::zeros([n, n, n])
    }

    /// Builds a binary grid from a predicate on voxel indices.
    pub fn from_fn(dims: [usize; 3], mut solid: impl FnMut(usize, usize, usize) -> bool) -> Self {
        let mut grid = Self::zeros(dims);
        for x in 0..dims[0] {
            for y in 0..dims[1] {
                for z in 0..dims[2] {
                    if solid(x, y, z) {
                        grid.set(x, y, z, 1.0);
                    }
                }
            }
        }
        grid
    }

    pub fn with_pitch(mut self, pitch: f32) -> Result<Self> {
        if !(pitch.is_finite() && pitch > 0.0) {
            return Err(Error::invalid(format!("pitch {pitch} must be positive")));
        }
        self.pitch = pitch;
        Ok(self)
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn pitch(&self) -> f32 {
        self.pitch
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        (x * self.dims[1] + y) * self.dims[2] + z
    }

    #[inline]
    pub fn coords(&self, index: usize) -> [usize; 3] {
        let z = index % self.dims[2];
        let rest = index / self.dims[2];
        [rest / self.dims[1], rest % self.dims[1], z]
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> f32 {
        self.data[self.index(x, y, z)]
    }

    /// # Panics
    /// Panics if `value` is outside `[0, 1]` or the indices are out of bounds.
    pub fn set(&mut self, x: usize, y: usize, z: usize, value: f32) {
        assert!((0.0..=1.0).contains(&value), "voxel value {value} outside [0, 1]");
        let i = self.index(x, y, z);
        self.data[i] = value;
    }

    /// True when every value is exactly 0.0 or 1.0 (bitwise).
    pub fn is_binary(&self) -> bool {
        let one = 1.0f32.to_bits();
        self.data.iter().all(|v| v.to_bits() == 0 || v.to_bits() == one)
    }

    /// Number of voxels counted as solid (value ≥ 0.5).
    pub fn solid_count(&self) -> usize {
        self.data.iter().filter(|&&v| v >= DEFAULT_THRESHOLD).count()
    }

    /// Rotates the grid by 90° about `axis` (0 = x, 1 = y, 2 = z).
    ///
    /// The rotation maps the two other axes `(a, b)` to `(b, n_a - 1 - a)`,
    /// so the dimensions along them are swapped.
    pub fn rotate90(&self, axis: usize) -> Self {
        assert!(axis < 3, "axis must be 0, 1 or 2");
        let (a, b) = match axis {
            0 => (1, 2),
            1 => (2, 0),
            _ => (0, 1),
        };
        let mut dims = self.dims;
        dims.swap(a, b);
        let mut out = Self {
            dims,
            data: vec![0.0; self.data.len()],
            pitch: self.pitch,
        };
        for (i, &v) in self.data.iter().enumerate() {
            let c = self.coords(i);
            let mut r = c;
            r[a] = c[b];
            r[b] = self.dims[a] - 1 - c[a];
            let j = out.index(r[0], r[1], r[2]);
            out.data[j] = v;
        }
        out
    }

    /// Shifts the content by an integer offset inside a grid of `dims`.
    /// Voxels falling outside the new grid make this return an error.
    pub fn translated(&self, offset: [i64; 3], dims: [usize; 3]) -> Result<Self> {
        let mut out = Self::zeros(dims).with_pitch(self.pitch)?;
        for (i, &v) in self.data.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let c = self.coords(i);
            let mut t = [0usize; 3];
            for k in 0..3 {
                let p = c[k] as i64 + offset[k];
                if p < 0 || p >= dims[k] as i64 {
                    return Err(Error::invalid(format!(
                        "voxel {c:?} leaves the grid under offset {offset:?}"
                    )));
                }
                t[k] = p as usize;
            }
            let j = out.index(t[0], t[1], t[2]);
            out.data[j] = v;
        }
        Ok(out)
    }
}

/// Integer grain labels over a voxel grid; 0 is void and grains are
/// numbered contiguously from 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledVolume {
    dims: [usize; 3],
    labels: Vec<u32>,
    count: u32,
}

impl LabeledVolume {
    /// Validates that labels form the contiguous range `1..=K`.
    pub fn new(dims: [usize; 3], labels: Vec<u32>) -> Result<Self> {
        let len = check_dims("LabeledVolume::new", dims)?;
        if labels.len() != len {
            return Err(Error::dim(
                "LabeledVolume::new",
                format!("label count {} != {}", labels.len(), len),
            ));
        }
        let count = labels.iter().copied().max().unwrap_or(0);
        let mut seen = vec![false; count as usize + 1];
        for &l in &labels {
            seen[l as usize] = true;
        }
        if let Some(missing) = seen.iter().skip(1).position(|s| !s) {
            return Err(Error::invalid(format!(
                "label {} is missing from 1..={count}",
                missing + 1
            )));
        }
        Ok(Self {
            dims,
            labels,
            count,
        })
    }

    pub(crate) fn from_parts_unchecked(dims: [usize; 3], labels: Vec<u32>, count: u32) -> Self {
        Self {
            dims,
            labels,
            count,
        }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    /// Number of grains `K`.
    pub fn count(&self) -> usize {
        self.count as usize
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> u32 {
        self.labels[(x * self.dims[1] + y) * self.dims[2] + z]
    }

    /// Voxel count of every grain; entry `k - 1` belongs to label `k`.
    pub fn volumes(&self) -> Vec<usize> {
        let mut v = vec![0usize; self.count as usize];
        for &l in &self.labels {
            if l > 0 {
                v[l as usize - 1] += 1;
            }
        }
        v
    }

    /// Binary grid of one grain.
    pub fn mask(&self, label: u32) -> VoxelGrid {
        let data = self
            .labels
            .iter()
            .map(|&l| if l == label { 1.0 } else { 0.0 })
            .collect();
        VoxelGrid {
            dims: self.dims,
            data,
            pitch: 1.0,
        }
    }

    /// Copies grain `label` into a cube of edge `size`, positioned so the
    /// grain centroid (rounded to the voxel lattice) sits at the cube center.
    pub fn extract_grain(&self, label: u32, size: usize) -> Result<VoxelGrid> {
        if label == 0 || label > self.count {
            return Err(Error::invalid(format!("label {label} out of range 1..={}", self.count)));
        }
        let mut sum = [0u64; 3];
        let mut n = 0u64;
        let mut cells = Vec::new();
        for (i, &l) in self.labels.iter().enumerate() {
            if l == label {
                let z = i % self.dims[2];
                let rest = i / self.dims[2];
                let c = [rest / self.dims[1], rest % self.dims[1], z];
                for k in 0..3 {
                    sum[k] += c[k] as u64;
                }
                n += 1;
                cells.push(c);
            }
        }
        // Centroid of voxel centers is mean(index) + 0.5; the cube center is
        // size / 2, so index offset = round(size/2 - 0.5 - mean(index)).
        let mut offset = [0i64; 3];
        for k in 0..3 {
            let mean = sum[k] as f64 / n as f64;
            offset[k] = (size as f64 / 2.0 - 0.5 - mean).round() as i64;
        }
        let mut out = VoxelGrid::cube(size);
        for c in cells {
            let mut t = [0usize; 3];
            for k in 0..3 {
                let p = c[k] as i64 + offset[k];
                if p < 0 || p >= size as i64 {
                    return Err(Error::invalid(format!(
                        "grain {label} does not fit in a {size}^3 cube"
                    )));
                }
                t[k] = p as usize;
            }
            out.set(t[0], t[1], t[2], 1.0);
        }
        Ok(out)
    }

    /// True when any voxel of the grain lies on the volume boundary.
    pub fn touches_boundary(&self, label: u32) -> bool {
        self.labels.iter().enumerate().any(|(i, &l)| {
            if l != label {
                return false;
            }
            let z = i % self.dims[2];
            let rest = i / self.dims[2];
            let (x, y) = (rest / self.dims[1], rest % self.dims[1]);
            x == 0
                || y == 0
                || z == 0
                || x + 1 == self.dims[0]
                || y + 1 == self.dims[1]
                || z + 1 == self.dims[2]
        })
    }
}

/// Thresholds occupancy: `v >= threshold` becomes 1, everything else 0.
pub fn binarize(grid: &VoxelGrid, threshold: f32) -> Result<VoxelGrid> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::invalid(format!(
            "threshold {threshold} must lie in (0, 1)"
        )));
    }
    let data = grid
        .data
        .iter()
        .map(|&v| if v >= threshold { 1.0 } else { 0.0 })
        .collect();
    Ok(VoxelGrid {
        dims: grid.dims,
        data,
        pitch: grid.pitch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binarize_zeros_stays_zero() {
        let g = VoxelGrid::cube(3);
        assert_eq!(binarize(&g, 0.5).unwrap(), g);
    }

    #[test]
    fn binarize_includes_threshold() {
        let g = VoxelGrid::new([1, 1, 3], vec![0.2, 0.5, 0.9], 1.0).unwrap();
        assert_eq!(binarize(&g, 0.5).unwrap().data(), &[0.0, 1.0, 1.0]);
    }

    #[test]
    fn binarize_preserves_shape_and_rejects_bad_threshold() {
        let g = VoxelGrid::new([2, 3, 4], (0..24).map(|i| i as f32 / 24.0).collect(), 1.5).unwrap();
        let b = binarize(&g, 0.5).unwrap();
        assert_eq!(b.dims(), [2, 3, 4]);
        assert_eq!(b.pitch(), 1.5);
        assert!(b.is_binary());
        assert!(binarize(&g, 0.0).is_err());
        assert!(binarize(&g, 1.0).is_err());
    }

    #[test]
    fn grid_rejects_out_of_range_values() {
        assert!(VoxelGrid::new([1, 1, 2], vec![0.0, 1.5], 1.0).is_err());
        assert!(VoxelGrid::new([1, 1, 2], vec![0.0], 1.0).is_err());
        assert!(VoxelGrid::new([0, 1, 2], vec![], 1.0).is_err());
    }

    #[test]
    fn indexing_is_z_fastest() {
        let g = VoxelGrid::zeros([2, 3, 4]);
        assert_eq!(g.index(0, 0, 1), 1);
        assert_eq!(g.index(0, 1, 0), 4);
        assert_eq!(g.index(1, 0, 0), 12);
        assert_eq!(g.coords(23), [1, 2, 3]);
    }

    #[test]
    fn four_rotations_are_identity() {
        let g = VoxelGrid::from_fn([2, 3, 4], |x, y, z| (x + 2 * y + z) % 3 == 0);
        for axis in 0..3 {
            let r = g.rotate90(axis).rotate90(axis).rotate90(axis).rotate90(axis);
            assert_eq!(r, g);
            assert_ne!(g.rotate90(axis).dims(), [0, 0, 0]);
        }
    }

    #[test]
    fn labels_must_be_contiguous() {
        assert!(LabeledVolume::new([1, 1, 3], vec![0, 1, 3]).is_err());
        let v = LabeledVolume::new([1, 1, 3], vec![2, 1, 2]).unwrap();
        assert_eq!(v.count(), 2);
        assert_eq!(v.volumes(), vec![1, 2]);
    }

    #[test]
    fn extract_grain_centers_the_grain() {
        let mut labels = vec![0u32; 8 * 8 * 8];
        labels[(6 * 8 + 6) * 8 + 6] = 1;
        let v = LabeledVolume::new([8, 8, 8], labels).unwrap();
        let g = v.extract_grain(1, 5).unwrap();
        assert_eq!(g.solid_count(), 1);
        assert_eq!(g.get(2, 2, 2), 1.0);
        assert!(!v.touches_boundary(1));
        assert!(v.extract_grain(2, 5).is_err());
    }
}
