//! `key=value` run configuration shared by all subcommands.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use matgan_core::gan::ModelConfig;
use matgan_core::train::TrainConfig;

/// Every accepted key with its default value and a one-line description.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("seed", "0", "top-level seed; every random stream is derived from it"),
    ("lr", "0.0002", "Adam learning rate for both networks"),
    ("batch", "8", "packed groups per step (m)"),
    ("n_critic", "5", "critic updates per generator update"),
    ("lambda_gp", "10", "gradient penalty coefficient"),
    ("beta1", "0.5", "Adam first-moment decay"),
    ("beta2", "0.9", "Adam second-moment decay"),
    ("adam_eps", "1e-8", "Adam denominator epsilon"),
    ("z_variance", "0.2", "variance of the Gaussian latent prior"),
    ("steps", "300", "generator steps to train"),
    ("checkpoint_every", "100", "checkpoint interval in steps (0 = final only)"),
    ("latent_dim", "512", "latent and intermediate latent width"),
    ("mapping_layers", "8", "fully connected layers in the mapping network"),
    ("output_size", "16", "voxel cube edge: 16, 32 or 64"),
    ("gen_base_channels", "128", "channels of the generator constant"),
    ("disc_base_channels", "16", "channels of the first critic layer"),
    ("pack_size", "2", "samples per critic input pack"),
    ("leaky_slope", "0.2", "LeakyReLU negative slope"),
    ("threshold", "0.5", "occupancy threshold for binarization"),
    ("bins", "20", "histogram bins in distribution summaries"),
    ("svm_c", "1", "SVM inverse regularization"),
    ("svm_epochs", "50", "SVM passes over the training set"),
    ("svm_standardize", "true", "standardize features before the SVM"),
];

/// Effective configuration: defaults, then file values, then overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<&'static str, String>,
}

fn canonical(key: &str) -> Option<&'static str> {
    KEYS.iter().find(|(k, _, _)| *k == key).map(|(k, _, _)| *k)
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            values: KEYS.iter().map(|(k, v, _)| (*k, (*v).to_string())).collect(),
        }
    }
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str, origin: &str) -> Result<()> {
        let k = canonical(key).ok_or_else(|| anyhow!("unknown config key '{key}' ({origin})"))?;
        self.values.insert(k, value.trim().to_string());
        Ok(())
    }

    /// Applies `key=value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str, source: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("expected key=value at {source}:{}", i + 1))?;
            self.set(k.trim(), v, &format!("{source}:{}", i + 1))?;
        }
        Ok(())
    }

    pub fn load(file: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut c = Self::default();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
            c.apply_text(&text, &path.display().to_string())?;
        }
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| anyhow!("override '{o}' is not key=value"))?;
            c.set(k.trim(), v, "--set")?;
        }
        // Surface bad values before any work starts.
        c.model()?;
        c.train()?;
        Ok(c)
    }

    pub fn get<T: FromStr>(&self, key: &'static str) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        let v = &self.values[key];
        v.parse::<T>()
            .map_err(|e| anyhow!("invalid value '{v}' for config key '{key}': {e}"))
    }

    pub fn seed(&self) -> Result<u64> {
        self.get("seed")
    }

    pub fn model(&self) -> Result<ModelConfig> {
        let c = ModelConfig {
            latent_dim: self.get("latent_dim")?,
            mapping_layers: self.get("mapping_layers")?,
            output_size: self.get("output_size")?,
            gen_base_channels: self.get("gen_base_channels")?,
            disc_base_channels: self.get("disc_base_channels")?,
            pack_size: self.get("pack_size")?,
            leaky_slope: self.get("leaky_slope")?,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn train(&self) -> Result<TrainConfig> {
        let c = TrainConfig {
            lr: self.get("lr")?,
            batch: self.get("batch")?,
            n_critic: self.get("n_critic")?,
            lambda_gp: self.get("lambda_gp")?,
            beta1: self.get("beta1")?,
            beta2: self.get("beta2")?,
            adam_eps: self.get("adam_eps")?,
            z_variance: self.get("z_variance")?,
            steps: self.get("steps")?,
            checkpoint_every: self.get("checkpoint_every")?,
            seed: matgan_core::rng::derive_seed(self.seed()?, "train"),
        };
        c.validate()?;
        Ok(c)
    }

    pub fn threshold(&self) -> Result<f32> {
        let t: f32 = self.get("threshold")?;
        if !(t > 0.0 && t < 1.0) {
            bail!("config key 'threshold' must lie in (0, 1), got {t}");
        }
        Ok(t)
    }
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, _, _) in KEYS {
            writeln!(f, "{k}={}", self.values[k])?;
        }
        Ok(())
    }
}

/// Key table for `--help`.
pub fn keys_help() -> String {
    let mut s = String::from("Config keys (file lines or --set key=value):\n");
    for (k, v, d) in KEYS {
        s.push_str(&format!("  {k:<20} {d} [default: {v}]\n"));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_beat_file_and_defaults() {
        let mut c = RunConfig::default();
        c.apply_text("# comment\nlr = 0.001  # trailing\n\nbatch=4\n", "f").unwrap();
        c.set("batch", "2", "--set").unwrap();
        let t = c.train().unwrap();
        assert_eq!(t.lr, 0.001);
        assert_eq!(t.batch, 2);
        assert_eq!(t.n_critic, 5);
    }

    #[test]
    fn unknown_key_names_the_key_and_line() {
        let err = RunConfig::default().apply_text("lr=1\nfoo=2\n", "cfg.txt").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("'foo'") && msg.contains("cfg.txt:2"), "{msg}");
    }

    #[test]
    fn bad_value_is_reported() {
        let mut c = RunConfig::default();
        c.set("batch", "many", "--set").unwrap();
        assert!(c.train().unwrap_err().to_string().contains("batch"));
    }

    #[test]
    fn display_lists_every_key() {
        let text = RunConfig::default().to_string();
        assert_eq!(text.lines().count(), KEYS.len());
        assert!(text.contains("z_variance=0.2"));
    }
}
