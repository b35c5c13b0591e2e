use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use super::adam::{AdamConfig, AdamState};
use super::loss::{d_loss, g_loss};
use crate::error::{Error, Result};
use crate::gan::{grids_to_tensor, params::gradients_to_f32, Checkpoint, Discriminator, Generator, ModelConfig};
use crate::rng::{self, Rng};
use crate::tensor::{grad, no_grad, Tensor};
use crate::voxel::VoxelGrid;

/// Optimization hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub lr: f32,
    /// Packed groups per step; each step consumes `pack_size · batch` samples.
    pub batch: usize,
    pub n_critic: usize,
    pub lambda_gp: f32,
    pub beta1: f32,
    pub beta2: f32,
    pub adam_eps: f32,
    /// Variance of the Gaussian latent prior.
    pub z_variance: f32,
    /// Generator updates to run.
    pub steps: usize,
    /// Checkpoint interval in generator steps; 0 disables periodic saves.
    pub checkpoint_every: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 2e-4,
            batch: 8,
            n_critic: 5,
            lambda_gp: 10.0,
            beta1: 0.5,
            beta2: 0.9,
            adam_eps: 1e-8,
            z_variance: 0.2,
            steps: 300,
            checkpoint_every: 0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.lr, self.z_variance, self.adam_eps];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::invalid("lr, z_variance and adam_eps must be positive"));
        }
        if self.batch == 0 || self.n_critic == 0 {
            return Err(Error::invalid("batch and n_critic must be at least 1"));
        }
        if !(self.lambda_gp.is_finite() && self.lambda_gp >= 0.0) {
            return Err(Error::invalid("lambda_gp must be finite and non-negative"));
        }
        for b in [self.beta1, self.beta2] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::invalid("beta1 and beta2 must lie in [0, 1)"));
            }
        }
        Ok(())
    }

    fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.adam_eps,
        }
    }
}

/// One row of the training log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepLog {
    pub step: usize,
    /// Critic loss of the last critic update of this step.
    pub d_loss: f64,
    pub g_loss: f64,
    /// Mean real score minus mean fake score at the last critic update.
    pub wasserstein_estimate: f64,
    pub wall_time_s: f64,
}

pub const LOG_HEADER: &str = "step,d_loss,g_loss,wasserstein_estimate,wall_time_s";

impl StepLog {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{:.3}",
            self.step, self.d_loss, self.g_loss, self.wasserstein_estimate, self.wall_time_s
        )
    }
}

/// WGAN-GP optimization state over an in-memory dataset.
pub struct Trainer {
    config: TrainConfig,
    generator: Generator,
    discriminator: Discriminator,
    adam_g: AdamState,
    adam_d: AdamState,
    data: Vec<VoxelGrid>,
    order: Vec<usize>,
    cursor: usize,
    z_rng: Rng,
    data_rng: Rng,
    eps_rng: Rng,
    z_dist: Normal<f32>,
    step: usize,
    critic_updates: usize,
    generator_updates: usize,
    started: Instant,
}

fn check_finite(step: usize, term: &'static str, value: f32) -> Result<f64> {
    if value.is_finite() {
        Ok(f64::from(value))
    } else {
        Err(Error::NonFinite {
            step,
            term,
            value: f64::from(value),
        })
    }
}

impl Trainer {
    /// Fresh models initialized from `config.seed`.
    pub fn new(model: ModelConfig, config: TrainConfig, data: Vec<VoxelGrid>) -> Result<Self> {
        let generator = Generator::new(model, rng::derive_seed(config.seed, "generator"))?;
        let discriminator = Discriminator::new(model, rng::derive_seed(config.seed, "discriminator"))?;
        Self::from_models(generator, discriminator, config, data)
    }

    pub fn from_models(
        generator: Generator,
        discriminator: Discriminator,
        config: TrainConfig,
        data: Vec<VoxelGrid>,
    ) -> Result<Self> {
        config.validate()?;
        let model = *generator.config();
        if discriminator.config() != &model {
            return Err(Error::invalid("generator and discriminator configurations differ"));
        }
        let need = model.pack_size * config.batch;
        if data.len() < need {
            return Err(Error::invalid(format!(
                "dataset has {} samples but one step needs pack_size·batch = {need}",
                data.len()
            )));
        }
        if let Some(g) = data.iter().find(|g| g.dims() != [model.output_size; 3]) {
            return Err(Error::dim(
                "train",
                format!("sample dims {:?} do not match output_size {}", g.dims(), model.output_size),
            ));
        }
        let order = (0..data.len()).collect();
        Ok(Self {
            adam_g: AdamState::new(generator.params()),
            adam_d: AdamState::new(discriminator.params()),
            generator,
            discriminator,
            data,
            order,
            cursor: usize::MAX,
            z_rng: rng::stream(config.seed, "latent"),
            data_rng: rng::stream(config.seed, "shuffle"),
            eps_rng: rng::stream(config.seed, "interpolation"),
            z_dist: Normal::new(0.0, config.z_variance.sqrt()).expect("validated variance"),
            config,
            step: 0,
            critic_updates: 0,
            generator_updates: 0,
            started: Instant::now(),
        })
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    pub fn discriminator(&self) -> &Discriminator {
        &self.discriminator
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    /// Generator steps completed.
    pub fn step(&self) -> usize {
        self.step
    }

    pub fn critic_updates(&self) -> usize {
        self.critic_updates
    }

    pub fn generator_updates(&self) -> usize {
        self.generator_updates
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            generator: self.generator.clone(),
            discriminator: self.discriminator.clone(),
        }
    }

    fn model(&self) -> ModelConfig {
        *self.generator.config()
    }

    fn sample_z(&mut self, n: usize) -> Tensor<f32> {
        let l = self.model().latent_dim;
        let data = (0..n * l).map(|_| self.z_dist.sample(&mut self.z_rng)).collect();
        Tensor::new(data, &[n, l]).expect("positive latent shape")
    }

    /// Next `pack_size · batch` samples of a seeded per-epoch permutation,
    /// as packs `[batch, pack_size, S, S, S]`.
    fn real_batch(&mut self) -> Result<Tensor<f32>> {
        let model = self.model();
        let n = model.pack_size * self.config.batch;
        if self.cursor.saturating_add(n) > self.order.len() {
            self.order.shuffle(&mut self.data_rng);
            self.cursor = 0;
        }
        let picked: Vec<&VoxelGrid> = self.order[self.cursor..self.cursor + n].iter().map(|&i| &self.data[i]).collect();
        self.cursor += n;
        self.pack(grids_to_tensor(&picked, model.output_size)?)
    }

    fn pack(&self, x: Tensor<f32>) -> Result<Tensor<f32>> {
        let c = self.model();
        let s = c.output_size;
        x.reshape(&[x.shape()[0] / c.pack_size, c.pack_size, s, s, s])
    }

    /// One critic update on a fresh real batch and fresh fakes; returns the
    /// critic loss and the Wasserstein estimate.
    pub fn critic_update(&mut self) -> Result<(f32, f32)> {
        let n = self.model().pack_size * self.config.batch;
        let real = self.real_batch()?;
        let z = self.sample_z(n);
        let g = self.generator.bind::<f32>(false);
        let fake = no_grad(|| g.forward(&z))?;
        let fake = self.pack(fake)?;
        let eps: Vec<f32> = (0..self.config.batch).map(|_| self.eps_rng.random::<f32>()).collect();
        let d = self.discriminator.bind::<f32>(true);
        let loss = d_loss(&d, &real, &fake, self.config.lambda_gp, &eps)?;
        let value = check_finite(self.step, "d_loss", loss.total.item())?;
        let params: Vec<&Tensor<f32>> = d.params().iter().collect();
        let grads = grad(&loss.total, &params, false)?;
        let grads = gradients_to_f32(self.discriminator.params(), &grads)?;
        self.adam_d
            .update(self.discriminator.params_mut(), &grads, &self.config.adam())?;
        self.critic_updates += 1;
        Ok((value as f32, loss.wasserstein))
    }

    /// One generator update; returns the generator loss.
    pub fn generator_update(&mut self) -> Result<f32> {
        let n = self.model().pack_size * self.config.batch;
        let z = self.sample_z(n);
        let g = self.generator.bind::<f32>(true);
        let d = self.discriminator.bind::<f32>(false);
        let fake = self.pack(g.forward(&z)?)?;
        let loss = g_loss(&d, &fake)?;
        check_finite(self.step, "g_loss", loss.item())?;
        let params: Vec<&Tensor<f32>> = g.params().iter().collect();
        let grads = grad(&loss, &params, false)?;
        let grads = gradients_to_f32(self.generator.params(), &grads)?;
        self.adam_g.update(self.generator.params_mut(), &grads, &self.config.adam())?;
        self.generator_updates += 1;
        Ok(loss.item())
    }

    /// `n_critic` critic updates followed by one generator update.
    pub fn train_step(&mut self) -> Result<StepLog> {
        let mut last = (0.0, 0.0);
        for _ in 0..self.config.n_critic {
            last = self.critic_update()?;
        }
        let wasserstein = check_finite(self.step, "wasserstein_estimate", last.1)?;
        let g = self.generator_update()?;
        self.step += 1;
        Ok(StepLog {
            step: self.step,
            d_loss: f64::from(last.0),
            g_loss: f64::from(g),
            wasserstein_estimate: wasserstein,
            wall_time_s: self.started.elapsed().as_secs_f64(),
        })
    }

    /// Runs the remaining configured steps, calling `on_step` after each.
    pub fn run(&mut self, mut on_step: impl FnMut(&Self, &StepLog) -> Result<()>) -> Result<Vec<StepLog>> {
        let mut logs = Vec::with_capacity(self.config.steps.saturating_sub(self.step));
        while self.step < self.config.steps {
            let log = self.train_step()?;
            on_step(self, &log)?;
            logs.push(log);
        }
        Ok(logs)
    }
}

/// Where a file-backed training run writes its outputs.
#[derive(Debug, Clone)]
pub struct RunOutputs {
    pub log_csv: PathBuf,
    pub checkpoint_dir: PathBuf,
}

impl RunOutputs {
    pub fn checkpoint_path(&self, step: usize) -> PathBuf {
        self.checkpoint_dir.join(format!("step_{step:06}.ckpt"))
    }

    pub fn final_checkpoint(&self) -> PathBuf {
        self.checkpoint_dir.join("final.ckpt")
    }
}

/// Trains to completion, streaming the CSV log and writing checkpoints
/// every `checkpoint_every` steps plus a final one.
pub fn train(trainer: &mut Trainer, outputs: &RunOutputs) -> Result<Vec<StepLog>> {
    std::fs::create_dir_all(&outputs.checkpoint_dir)?;
    let mut log = std::io::BufWriter::new(std::fs::File::create(&outputs.log_csv)?);
    writeln!(log, "{LOG_HEADER}")?;
    let every = trainer.config().checkpoint_every;
    let logs = trainer.run(|t, row| {
        writeln!(log, "{}", row.csv_row())?;
        log.flush()?;
        if every > 0 && row.step % every == 0 {
            t.checkpoint().save(&outputs.checkpoint_path(row.step))?;
        }
        Ok(())
    })?;
    trainer.checkpoint().save(&outputs.final_checkpoint())?;
    Ok(logs)
}

/// Reads the `step,d_loss,...` log back.
pub fn read_log(path: &Path) -> Result<Vec<StepLog>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    if lines.next() != Some(LOG_HEADER) {
        return Err(Error::format(0, "unexpected training log header"));
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            let num = |i: usize| -> Result<f64> {
                f.get(i)
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| Error::invalid(format!("bad log row: {l}")))
            };
            Ok(StepLog {
                step: num(0)? as usize,
                d_loss: num(1)?,
                g_loss: num(2)?,
                wasserstein_estimate: num(3)?,
                wall_time_s: num(4)?,
            })
        })
        .collect()
}
