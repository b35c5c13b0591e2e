use super::grid::{LabeledVolume, VoxelGrid, DEFAULT_THRESHOLD};
use crate::error::{Error, Result};

/// Labels 6-connected (face-adjacent) solid regions.
///
/// Labels are ordered by descending component volume; equal volumes keep
/// the order of their lowest linear voxel index.
pub fn connected_components(grid: &VoxelGrid) -> LabeledVolume {
    let [nx, ny, nz] = grid.dims();
    let data = grid.data();
    let solid = |i: usize| data[i] >= DEFAULT_THRESHOLD;

    // Discovery pass: provisional ids in order of first voxel.
    let mut provisional = vec![0u32; data.len()];
    let mut sizes: Vec<usize> = Vec::new();
    let mut stack = Vec::new();
    for start in 0..data.len() {
        if !solid(start) || provisional[start] != 0 {
            continue;
        }
        let id = sizes.len() as u32 + 1;
        provisional[start] = id;
        stack.push(start);
        let mut size = 0usize;
        while let Some(i) = stack.pop() {
            size += 1;
            let z = i % nz;
            let rest = i / nz;
            let (x, y) = (rest / ny, rest % ny);
            let mut visit = |j: usize| {
                if solid(j) && provisional[j] == 0 {
                    provisional[j] = id;
                    stack.push(j);
                }
            };
            if x > 0 {
                visit(i - ny * nz);
            }
            if x + 1 < nx {
                visit(i + ny * nz);
            }
            if y > 0 {
                visit(i - nz);
            }
            if y + 1 < ny {
                visit(i + nz);
            }
            if z > 0 {
                visit(i - 1);
            }
            if z + 1 < nz {
                visit(i + 1);
            }
        }
        sizes.push(size);
    }

    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by(|&a, &b| sizes[b].cmp(&sizes[a]));
    let mut relabel = vec![0u32; sizes.len() + 1];
    for (rank, &p) in order.iter().enumerate() {
        relabel[p + 1] = rank as u32 + 1;
    }
    let labels = provisional.into_iter().map(|p| relabel[p as usize]).collect();
    LabeledVolume::from_parts_unchecked(grid.dims(), labels, sizes.len() as u32)
}

/// Keeps only the largest 6-connected component.
pub fn largest_component(grid: &VoxelGrid) -> Result<VoxelGrid> {
    let labeled = connected_components(grid);
    if labeled.count() == 0 {
        return Err(Error::NoSolidVoxels);
    }
    labeled.mask(1).with_pitch(grid.pitch())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_with(n: usize, solid: &[[usize; 3]]) -> VoxelGrid {
        let mut g = VoxelGrid::cube(n);
        for &[x, y, z] in solid {
            g.set(x, y, z, 1.0);
        }
        g
    }

    #[test]
    fn disjoint_voxels_are_separate() {
        let g = grid_with(6, &[[0, 0, 0], [5, 5, 5]]);
        assert_eq!(connected_components(&g).count(), 2);
    }

    #[test]
    fn l_shape_is_one_component() {
        let g = grid_with(3, &[[0, 0, 0], [1, 0, 0], [1, 1, 0]]);
        assert_eq!(connected_components(&g).count(), 1);
    }

    #[test]
    fn edge_contact_does_not_connect() {
        let g = grid_with(3, &[[0, 0, 0], [1, 1, 0]]);
        assert_eq!(connected_components(&g).count(), 2);
    }

    #[test]
    fn labels_ordered_by_volume() {
        let g = grid_with(6, &[[0, 0, 0], [4, 4, 2], [4, 4, 3], [4, 4, 4]]);
        let l = connected_components(&g);
        assert_eq!(l.get(4, 4, 3), 1);
        assert_eq!(l.get(0, 0, 0), 2);
        assert_eq!(l.volumes(), vec![3, 1]);
    }

    #[test]
    fn largest_keeps_bar_and_drops_noise() {
        let g = grid_with(6, &[[0, 0, 0], [3, 3, 1], [3, 3, 2], [3, 3, 3]]);
        let out = largest_component(&g).unwrap();
        assert_eq!(out, grid_with(6, &[[3, 3, 1], [3, 3, 2], [3, 3, 3]]));
    }

    #[test]
    fn single_component_unchanged() {
        let g = grid_with(4, &[[1, 1, 1], [1, 1, 2], [1, 2, 2]]);
        assert_eq!(largest_component(&g).unwrap(), g);
    }

    #[test]
    fn tie_goes_to_lowest_linear_index() {
        let g = grid_with(6, &[[4, 4, 4], [4, 4, 5], [0, 1, 0], [0, 1, 1]]);
        let out = largest_component(&g).unwrap();
        assert_eq!(out, grid_with(6, &[[0, 1, 0], [0, 1, 1]]));
    }

    #[test]
    fn empty_grid_is_an_error() {
        let err = largest_component(&VoxelGrid::cube(3)).unwrap_err();
        assert_eq!(err.to_string(), "no solid voxels");
    }
}
