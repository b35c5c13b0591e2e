use matgan_core::synth::{
    grain_dataset, read_manifest, voronoi_grains, write_manifest, GrainSpec, ManifestRow, VoronoiSpec,
};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn voronoi_partitions_the_domain(domain in 2usize..12, seeds in 1usize..20, seed in any::<u64>()) {
        let seeds = seeds.min(domain.pow(3));
        let spec = VoronoiSpec { domain, seeds, seed };
        let v = voronoi_grains(&spec).unwrap();
        let vols = v.volumes();
        prop_assert!(vols.iter().all(|&n| n > 0));
        prop_assert_eq!(vols.iter().sum::<usize>(), domain.pow(3));
        prop_assert!(v.count() <= seeds);
        prop_assert_eq!(voronoi_grains(&spec).unwrap(), v);
    }
}

#[test]
fn grains_are_centered_by_centroid() {
    for g in grain_dataset(&GrainSpec::new(16, 8, 4)).unwrap() {
        let mut sum = [0.0f64; 3];
        let mut n = 0.0;
        let [nx, ny, nz] = g.grid.dims();
        for x in 0..nx {
            for y in 0..ny {
                for z in 0..nz {
                    if g.grid.get(x, y, z) > 0.5 {
                        sum[0] += x as f64 + 0.5;
                        sum[1] += y as f64 + 0.5;
                        sum[2] += z as f64 + 0.5;
                        n += 1.0;
                    }
                }
            }
        }
        for s in sum {
            assert!((s / n - 8.0).abs() <= 0.5);
        }
    }
}

#[test]
fn manifest_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("manifest.csv");
    let rows = vec![
        ManifestRow {
            file: "a.vgrid".into(),
            label: "sphere".into(),
            params: "shape=sphere;radius=3".into(),
        },
        ManifestRow {
            file: "b.vgrid".into(),
            label: "grain".into(),
            params: "domain=0;label=4".into(),
        },
    ];
    write_manifest(&path, &rows).unwrap();
    assert_eq!(read_manifest(&path).unwrap(), rows);
    let bad = vec![ManifestRow {
        file: "c,d".into(),
        label: "x".into(),
        params: String::new(),
    }];
    assert!(write_manifest(&path, &bad).is_err());
}
