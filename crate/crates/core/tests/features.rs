use matgan_core::features::{
    accuracy, extract_features, feature_length, nearest_neighbor, pooling_schedule, svm_train, write_features_csv,
    SvmConfig,
};
use matgan_core::gan::{Discriminator, ModelConfig};
use matgan_core::synth::{solids_dataset, SolidClass};
use matgan_core::tensor::Tensor;
use matgan_core::VoxelGrid;

fn tiny(size: usize) -> ModelConfig {
    ModelConfig {
        disc_base_channels: 2,
        ..ModelConfig::desk(size)
    }
}

/// Feature length by running the discriminator and pooling for real.
fn traced_length(c: &ModelConfig) -> usize {
    let d = Discriminator::new(*c, 0).unwrap().bind::<f32>(false);
    let s = c.output_size;
    let x = Tensor::zeros(&[1, c.pack_size, s, s, s]);
    let trace = d.trace(&x).unwrap();
    pooling_schedule(c)
        .iter()
        .map(|p| trace.hidden[p.layer - 1].maxpool3d(p.kernel, p.stride).unwrap().numel())
        .sum()
}

#[test]
fn length_formula_matches_shape_tracing() {
    for size in [16, 32, 64] {
        let c = tiny(size);
        assert_eq!(feature_length(&c), traced_length(&c), "size {size}");
    }
}

#[test]
fn zero_weights_and_purity() {
    let c = tiny(16);
    let solids = solids_dataset(16, 3, 1).unwrap();
    let grids: Vec<&VoxelGrid> = solids.iter().map(|s| &s.grid).collect();
    let zero = extract_features(&Discriminator::zeroed(c).unwrap(), &grids).unwrap();
    assert!(zero.iter().flatten().all(|&v| v == 0.0));
    let d = Discriminator::new(c, 3).unwrap();
    let a = extract_features(&d, &grids).unwrap();
    let b = extract_features(&d, &[grids[1], grids[0], grids[1]]).unwrap();
    assert_eq!(a[1], b[0]);
    assert_eq!(a[0], b[1]);
    assert_eq!(a[1], b[2]);
    assert_eq!(a[0].len(), feature_length(&c));
    let wrong = VoxelGrid::cube(8);
    assert!(extract_features(&d, &[&wrong]).is_err());
}

#[test]
fn svm_is_deterministic_and_separates_solids() {
    let c = tiny(16);
    let d = Discriminator::new(c, 4).unwrap();
    let solids = solids_dataset(16, 60, 2).unwrap();
    let grids: Vec<&VoxelGrid> = solids.iter().map(|s| &s.grid).collect();
    let x = extract_features(&d, &grids).unwrap();
    let y: Vec<usize> = solids.iter().map(|s| s.class.index()).collect();
    let cfg = SvmConfig {
        standardize: true,
        seed: 3,
        ..SvmConfig::default()
    };
    let m1 = svm_train(&x, &y, &cfg).unwrap();
    let m2 = svm_train(&x, &y, &cfg).unwrap();
    assert_eq!(m1, m2);
    let p = m1.predict(&x).unwrap();
    assert_eq!(p, m2.predict(&x).unwrap());
    assert!(accuracy(&p, &y) > 1.0 / SolidClass::ALL.len() as f64);
}

#[test]
fn nearest_neighbor_finds_inserted_query() {
    let corpus: Vec<Vec<f32>> = (0..20).map(|i| (0..5).map(|j| ((i * 5 + j) as f32).sin()).collect()).collect();
    let query: Vec<f32> = vec![0.3, -0.2, 0.9, 0.0, 0.1];
    let mut with = corpus.clone();
    with.push(query.clone());
    assert_eq!(nearest_neighbor(&query, &with).unwrap(), (20, 0.0));
}

#[test]
fn features_csv_has_label_first() {
    let mut buf = Vec::new();
    write_features_csv(&mut buf, &[("sphere".into(), vec![1.0, 2.5]), ("cuboid".into(), vec![0.0, -1.0])]).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text, "label,f0,f1\nsphere,1,2.5\ncuboid,0,-1\n");
}
