use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, ValueEnum};
use matgan_core::features::{accuracy, extract_features, nearest_neighbor, svm_train, write_features_csv, SvmConfig};
use matgan_core::gan::{sample_grids, Checkpoint};
use matgan_core::moments::{self, Invariant, OmegaInvariants};
use matgan_core::rng;
use matgan_core::synth::{self, ManifestRow};
use matgan_core::train::{RunOutputs, Trainer};
use matgan_core::voxel::{binarize, largest_component, load_grid, save_grid};
use matgan_core::VoxelGrid;

use crate::config::RunConfig;

#[derive(Clone, Copy, ValueEnum)]
pub enum SynthKind {
    /// Interior grains of Voronoi tessellations.
    Grains,
    /// Spheres, cuboids and ellipsoids in equal numbers.
    Solids,
}

#[derive(Args)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    kind: SynthKind,
    #[arg(long)]
    count: usize,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
pub struct TrainArgs {
    /// Directory of VGRID training samples.
    #[arg(long)]
    data: PathBuf,
    /// Output directory for the log and checkpoints.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
pub struct GenerateArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    count: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
pub struct MomentsArgs {
    /// VGRID files or directories of them.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Per-grid invariants CSV.
    #[arg(long)]
    out: PathBuf,
    /// Directory for omega1.csv, omega2.csv and omega3.csv summaries.
    #[arg(long)]
    summary_dir: Option<PathBuf>,
    /// Fixed histogram range `LO:HI` shared across runs.
    #[arg(long, value_name = "LO:HI")]
    range: Option<String>,
    /// Keep only the largest 6-connected component of each binarized grid.
    #[arg(long)]
    largest_component: bool,
}

#[derive(Args)]
pub struct CompareArgs {
    #[arg(long)]
    reference: PathBuf,
    #[arg(long)]
    candidate: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct ClassifyArgs {
    /// Checkpoint whose discriminator provides the features.
    #[arg(long)]
    checkpoint: PathBuf,
    /// Training directory with a manifest.csv.
    #[arg(long)]
    train: PathBuf,
    /// Test directory with a manifest.csv.
    #[arg(long)]
    test: PathBuf,
    /// Write the test features here.
    #[arg(long)]
    features_out: Option<PathBuf>,
}

#[derive(Args)]
pub struct NnArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Query VGRID files or directories.
    #[arg(long, required = true, num_args = 1..)]
    query: Vec<PathBuf>,
    /// Corpus VGRID files or directories.
    #[arg(long, required = true, num_args = 1..)]
    corpus: Vec<PathBuf>,
}

/// Expands directories into their `.vgrid` files, sorted by name.
fn vgrid_files(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut files: Vec<PathBuf> = fs::read_dir(p)
                .with_context(|| format!("reading directory {}", p.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "vgrid"))
                .collect();
            files.sort();
            out.extend(files);
        } else if p.exists() {
            out.push(p.clone());
        } else {
            bail!("missing input {}", p.display());
        }
    }
    if out.is_empty() {
        bail!("no .vgrid files found in the given inputs");
    }
    Ok(out)
}

fn load_all(files: &[PathBuf]) -> Result<Vec<VoxelGrid>> {
    files
        .iter()
        .map(|f| load_grid(f).with_context(|| format!("loading {}", f.display())))
        .collect()
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).with_context(|| format!("creating directory {}", path.display()))
}

fn file_stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

pub fn synth(cfg: &RunConfig, a: &SynthArgs) -> Result<()> {
    let size: usize = cfg.get("output_size")?;
    let seed = rng::derive_seed(cfg.seed()?, "synth");
    create_dir(&a.out)?;
    let mut rows = Vec::with_capacity(a.count);
    match a.kind {
        SynthKind::Grains => {
            for (i, g) in synth::grain_dataset(&synth::GrainSpec::new(size, a.count, seed))?.iter().enumerate() {
                let file = format!("grain_{i:05}.vgrid");
                save_grid(a.out.join(&file), &g.grid)?;
                rows.push(ManifestRow {
                    file,
                    label: "grain".into(),
                    params: format!("domain={};label={};volume={}", g.domain_index, g.label, g.volume),
                });
            }
        }
        SynthKind::Solids => {
            for (i, s) in synth::solids_dataset(size, a.count, seed)?.iter().enumerate() {
                let file = format!("solid_{i:05}.vgrid");
                save_grid(a.out.join(&file), &s.grid)?;
                rows.push(ManifestRow {
                    file,
                    label: s.class.name().into(),
                    params: s.shape.describe(),
                });
            }
        }
    }
    synth::write_manifest(&a.out.join("manifest.csv"), &rows)?;
    println!("wrote {} volumes to {}", rows.len(), a.out.display());
    Ok(())
}

pub fn train(cfg: &RunConfig, a: &TrainArgs) -> Result<()> {
    let model = cfg.model()?;
    let tc = cfg.train()?;
    let data = load_all(&vgrid_files(std::slice::from_ref(&a.data))?)?;
    create_dir(&a.out)?;
    fs::write(a.out.join("config.txt"), cfg.to_string())?;
    let mut trainer = Trainer::new(model, tc, data)?;
    let outputs = RunOutputs {
        log_csv: a.out.join("log.csv"),
        checkpoint_dir: a.out.join("checkpoints"),
    };
    let logs = matgan_core::train::train(&mut trainer, &outputs)?;
    if let Some(last) = logs.last() {
        println!(
            "step {} d_loss {:.5} g_loss {:.5} wasserstein {:.5}",
            last.step, last.d_loss, last.g_loss, last.wasserstein_estimate
        );
    }
    Checkpoint::load(&outputs.final_checkpoint()).context("re-reading the final checkpoint")?;
    println!("final checkpoint {}", outputs.final_checkpoint().display());
    Ok(())
}

fn load_checkpoint(path: &Path, cfg: &RunConfig) -> Result<Checkpoint> {
    let ck = Checkpoint::load(path).with_context(|| format!("loading checkpoint {}", path.display()))?;
    let want: usize = cfg.get("output_size")?;
    if ck.config().output_size != want {
        bail!(
            "checkpoint {} is for {}^3 volumes but output_size is {want}",
            path.display(),
            ck.config().output_size
        );
    }
    Ok(ck)
}

pub fn generate(cfg: &RunConfig, a: &GenerateArgs) -> Result<()> {
    let ck = load_checkpoint(&a.checkpoint, cfg)?;
    let variance: f32 = cfg.get("z_variance")?;
    let mut r = rng::stream(cfg.seed()?, "generate");
    let grids = sample_grids(&ck.generator, a.count, variance, &mut r)?;
    create_dir(&a.out)?;
    for (i, grid) in grids.iter().enumerate() {
        if !grid.data().iter().all(|&v| v > 0.0 && v < 1.0) {
            bail!("generated occupancies left the open interval (0, 1)");
        }
        save_grid(a.out.join(format!("gen_{i:05}.vgrid")), grid)?;
    }
    let written = grids.len();
    println!("wrote {written} volumes to {}", a.out.display());
    Ok(())
}

fn parse_range(s: &str) -> Result<(f64, f64)> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| anyhow!("range '{s}' is not LO:HI"))?;
    let lo: f64 = lo.trim().parse().map_err(|_| anyhow!("bad range start '{lo}'"))?;
    let hi: f64 = hi.trim().parse().map_err(|_| anyhow!("bad range end '{hi}'"))?;
    if lo >= hi || lo.is_nan() || hi.is_nan() {
        bail!("range '{s}' must satisfy LO < HI");
    }
    Ok((lo, hi))
}

pub fn moments(cfg: &RunConfig, a: &MomentsArgs) -> Result<()> {
    let threshold = cfg.threshold()?;
    let bins: usize = cfg.get("bins")?;
    let range = a.range.as_deref().map(parse_range).transpose()?;
    let files = vgrid_files(&a.inputs)?;
    let mut rows: Vec<(String, f64, OmegaInvariants)> = Vec::with_capacity(files.len());
    for f in &files {
        let grid = load_grid(f).with_context(|| format!("loading {}", f.display()))?;
        let mut solid = binarize(&grid, threshold)?;
        if a.largest_component && solid.solid_count() > 0 {
            solid = largest_component(&solid)?;
        }
        let inv = moments::grain_invariants(&solid);
        rows.push((file_stem(f), solid.solid_count() as f64, inv));
    }
    let out = BufWriter::new(fs::File::create(&a.out).with_context(|| format!("creating {}", a.out.display()))?);
    moments::write_invariants_csv(out, &rows)?;
    let population: Vec<OmegaInvariants> = rows.iter().map(|r| r.2).collect();
    let valid = population.iter().filter(|p| p.is_valid()).count();
    println!("{} grids, {valid} with valid invariants", rows.len());
    if let Some(dir) = &a.summary_dir {
        create_dir(dir)?;
        for which in Invariant::ALL {
            let s = moments::summarize_in_range(&population, bins, which, range)?;
            let path = dir.join(format!("{which}.csv"));
            moments::write_summary_csv(BufWriter::new(fs::File::create(&path)?), &s)?;
            println!("{which}: mean {:.6} std {:.6} omitted {}", s.mean, s.std, s.omitted_count);
        }
    }
    Ok(())
}

fn read_summary(path: &Path) -> Result<moments::DistributionSummary> {
    let f = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    moments::read_summary_csv(BufReader::new(f)).with_context(|| format!("parsing {}", path.display()))
}

pub fn compare(_cfg: &RunConfig, a: &CompareArgs) -> Result<()> {
    let reference = read_summary(&a.reference)?;
    let candidate = read_summary(&a.candidate)?;
    let c = moments::compare(&reference, &candidate)?;
    let mut text = Vec::new();
    moments::write_comparison_csv(&mut text, &c)?;
    std::io::stdout().write_all(&text)?;
    println!(
        "candidate has lower mean and wider spread: {}",
        if c.lower_mean_wider_spread() { "yes" } else { "no" }
    );
    if let Some(out) = &a.out {
        fs::write(out, &text).with_context(|| format!("writing {}", out.display()))?;
    }
    Ok(())
}

/// Grids and labels listed in `dir/manifest.csv`.
fn labeled_dir(dir: &Path) -> Result<(Vec<VoxelGrid>, Vec<String>)> {
    let manifest = dir.join("manifest.csv");
    let rows = synth::read_manifest(&manifest).with_context(|| format!("reading {}", manifest.display()))?;
    let files: Vec<PathBuf> = rows.iter().map(|r| dir.join(&r.file)).collect();
    Ok((load_all(&files)?, rows.into_iter().map(|r| r.label).collect()))
}

pub fn classify(cfg: &RunConfig, a: &ClassifyArgs) -> Result<()> {
    let ck = load_checkpoint(&a.checkpoint, cfg)?;
    let (train_grids, train_names) = labeled_dir(&a.train)?;
    let (test_grids, test_names) = labeled_dir(&a.test)?;
    let mut classes: Vec<String> = train_names.clone();
    classes.sort();
    classes.dedup();
    let index = |names: &[String]| -> Result<Vec<usize>> {
        names
            .iter()
            .map(|n| {
                classes
                    .binary_search(n)
                    .map_err(|_| anyhow!("test label '{n}' does not occur in the training set"))
            })
            .collect()
    };
    let y_train = index(&train_names)?;
    let y_test = index(&test_names)?;
    let x_train = extract_features(&ck.discriminator, &train_grids.iter().collect::<Vec<_>>())?;
    let x_test = extract_features(&ck.discriminator, &test_grids.iter().collect::<Vec<_>>())?;
    let svm = SvmConfig {
        c: cfg.get("svm_c")?,
        epochs: cfg.get("svm_epochs")?,
        seed: rng::derive_seed(cfg.seed()?, "svm"),
        standardize: cfg.get("svm_standardize")?,
    };
    let model = svm_train(&x_train, &y_train, &svm)?;
    let train_acc = accuracy(&model.predict(&x_train)?, &y_train);
    let test_acc = accuracy(&model.predict(&x_test)?, &y_test);
    println!("classes {}", classes.join(" "));
    println!("train accuracy {train_acc:.4}");
    println!("test accuracy {test_acc:.4}");
    if let Some(out) = &a.features_out {
        let rows: Vec<(String, Vec<f32>)> = test_names.into_iter().zip(x_test).collect();
        write_features_csv(BufWriter::new(fs::File::create(out)?), &rows)?;
    }
    Ok(())
}

pub fn nn(cfg: &RunConfig, a: &NnArgs) -> Result<()> {
    let ck = load_checkpoint(&a.checkpoint, cfg)?;
    let query_files = vgrid_files(&a.query)?;
    let corpus_files = vgrid_files(&a.corpus)?;
    let q = load_all(&query_files)?;
    let c = load_all(&corpus_files)?;
    let fq = extract_features(&ck.discriminator, &q.iter().collect::<Vec<_>>())?;
    let fc = extract_features(&ck.discriminator, &c.iter().collect::<Vec<_>>())?;
    println!("query,nearest,distance");
    let mut min = f64::INFINITY;
    for (f, path) in fq.iter().zip(&query_files) {
        let (i, d) = nearest_neighbor(f, &fc)?;
        min = min.min(d);
        println!("{},{},{d}", file_stem(path), file_stem(&corpus_files[i]));
    }
    eprintln!("minimum distance {min}");
    Ok(())
}
