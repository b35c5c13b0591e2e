use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng;

/// Settings for one-vs-rest linear SVM training.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmConfig {
    /// Inverse regularization strength; larger fits the data more tightly.
    pub c: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Rescale each feature to zero mean and unit variance first.
    pub standardize: bool,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            epochs: 50,
            seed: 0,
            standardize: false,
        }
    }
}

/// One hyperplane per class, each with a trailing bias weight.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    /// Distinct training labels in increasing order.
    pub classes: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    /// Per-feature (mean, std) when trained with standardization.
    pub scaling: Option<Vec<(f64, f64)>>,
}

fn feature_dim(features: &[Vec<f32>]) -> Result<usize> {
    let d = features.first().map(Vec::len).ok_or_else(|| Error::invalid("no training samples"))?;
    if let Some((i, f)) = features.iter().enumerate().find(|(_, f)| f.len() != d) {
        return Err(Error::dim("svm", format!("sample {i} has {} features, expected {d}", f.len())));
    }
    Ok(d)
}

impl LinearModel {
    fn prepare(&self, f: &[f32]) -> Vec<f64> {
        let mut x: Vec<f64> = match &self.scaling {
            Some(s) => f.iter().zip(s).map(|(&v, &(m, sd))| (f64::from(v) - m) / sd).collect(),
            None => f.iter().map(|&v| f64::from(v)).collect(),
        };
        x.push(1.0);
        x
    }

    /// Margin of every class for one sample.
    pub fn margins(&self, f: &[f32]) -> Result<Vec<f64>> {
        let d = self.weights[0].len() - 1;
        if f.len() != d {
            return Err(Error::dim("svm_predict", format!("{} features, model expects {d}", f.len())));
        }
        let x = self.prepare(f);
        Ok(self.weights.iter().map(|w| dot(w, &x)).collect())
    }

    /// Label with the largest margin; ties go to the lowest class.
    pub fn predict_one(&self, f: &[f32]) -> Result<usize> {
        let m = self.margins(f)?;
        let mut best = 0;
        for k in 1..m.len() {
            if m[k] > m[best] {
                best = k;
            }
        }
        Ok(self.classes[best])
    }

    pub fn predict(&self, features: &[Vec<f32>]) -> Result<Vec<usize>> {
        features.iter().map(|f| self.predict_one(f)).collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Trains one hinge-loss classifier per class against the rest with the
/// Pegasos subgradient method: step `1/(λt)` with `λ = 1/(C·n)`, samples
/// visited in a seeded shuffled order each epoch, weights averaged over
/// the final epoch.
pub fn svm_train(features: &[Vec<f32>], labels: &[usize], cfg: &SvmConfig) -> Result<LinearModel> {
    if features.len() != labels.len() {
        return Err(Error::dim(
            "svm_train",
            format!("{} samples but {} labels", features.len(), labels.len()),
        ));
    }
    let d = feature_dim(features)?;
    let mut classes = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::invalid("svm training needs at least two classes"));
    }
    if !(cfg.c.is_finite() && cfg.c > 0.0) || cfg.epochs == 0 {
        return Err(Error::invalid("svm needs C > 0 and at least one epoch"));
    }
    let n = features.len();
    let scaling = cfg.standardize.then(|| {
        (0..d)
            .map(|j| {
                let mean = features.iter().map(|f| f64::from(f[j])).sum::<f64>() / n as f64;
                let var = features.iter().map(|f| (f64::from(f[j]) - mean).powi(2)).sum::<f64>() / n as f64;
                (mean, if var > 0.0 { var.sqrt() } else { 1.0 })
            })
            .collect::<Vec<_>>()
    });
    let mut model = LinearModel {
        classes,
        weights: Vec::new(),
        scaling,
    };
    let xs: Vec<Vec<f64>> = features.iter().map(|f| model.prepare(f)).collect();
    let lambda = 1.0 / (cfg.c * n as f64);
    let mut order: Vec<usize> = (0..n).collect();
    for (ci, &class) in model.classes.iter().enumerate() {
        let mut r = rng::stream(cfg.seed, &format!("svm/class/{ci}"));
        let mut w = vec![0.0f64; d + 1];
        let mut avg = vec![0.0f64; d + 1];
        let mut t = 0u64;
        for epoch in 0..cfg.epochs {
            order.shuffle(&mut r);
            for &i in &order {
                t += 1;
                let eta = 1.0 / (lambda * t as f64);
                let y = if labels[i] == class { 1.0 } else { -1.0 };
                let violated = y * dot(&w, &xs[i]) < 1.0;
                let shrink = 1.0 - eta * lambda;
                for v in &mut w {
                    *v *= shrink;
                }
                if violated {
                    for (v, x) in w.iter_mut().zip(&xs[i]) {
                        *v += eta * y * x;
                    }
                }
                if epoch + 1 == cfg.epochs {
                    for (a, v) in avg.iter_mut().zip(&w) {
                        *a += v;
                    }
                }
            }
        }
        for a in &mut avg {
            *a /= n as f64;
        }
        model.weights.push(avg);
    }
    Ok(model)
}

/// Fraction of predictions equal to the true labels.
pub fn accuracy(predicted: &[usize], truth: &[usize]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    let hits = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
    hits as f64 / truth.len() as f64
}

/// Index of the closest corpus row in Euclidean distance and that
/// distance; ties go to the lowest index.
pub fn nearest_neighbor(query: &[f32], corpus: &[Vec<f32>]) -> Result<(usize, f64)> {
    if corpus.is_empty() {
        return Err(Error::invalid("nearest neighbor corpus is empty"));
    }
    let mut best = (0, f64::INFINITY);
    for (i, c) in corpus.iter().enumerate() {
        if c.len() != query.len() {
            return Err(Error::dim(
                "nearest_neighbor",
                format!("corpus row {i} has {} values, query has {}", c.len(), query.len()),
            ));
        }
        let d2: f64 = c.iter().zip(query).map(|(&a, &b)| (f64::from(a) - f64::from(b)).powi(2)).sum();
        if d2 < best.1 {
            best = (i, d2);
        }
    }
    Ok((best.0, best.1.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_pair() {
        let x = vec![vec![1.0, 0.0], vec![-1.0, 0.0]];
        let y = vec![0, 1];
        let m = svm_train(&x, &y, &SvmConfig::default()).unwrap();
        assert_eq!(m.predict(&x).unwrap(), y);
    }

    #[test]
    fn identical_features_predict_majority() {
        let x = vec![vec![0.5, 0.5]; 10];
        let y = vec![0, 0, 1, 1, 1, 1, 1, 1, 2, 2];
        let m = svm_train(&x, &y, &SvmConfig::default()).unwrap();
        let p = m.predict(&x).unwrap();
        assert!(p.iter().all(|&v| v == p[0]));
        assert_eq!(accuracy(&p, &y), 0.6);
    }

    #[test]
    fn single_class_errors() {
        assert!(svm_train(&[vec![1.0], vec![2.0]], &[3, 3], &SvmConfig::default()).is_err());
    }

    #[test]
    fn margin_tie_picks_lowest_class() {
        let m = LinearModel {
            classes: vec![2, 5],
            weights: vec![vec![0.0, 1.0], vec![0.0, 1.0]],
            scaling: None,
        };
        assert_eq!(m.predict_one(&[3.0]).unwrap(), 2);
    }

    #[test]
    fn nearest_neighbor_cases() {
        let corpus: Vec<Vec<f32>> = (0..5).map(|i| vec![i as f32, 1.0]).collect();
        assert_eq!(nearest_neighbor(&[3.0, 1.0], &corpus).unwrap(), (3, 0.0));
        assert_eq!(nearest_neighbor(&[100.0, -4.0], &corpus[..1]).unwrap().0, 0);
        assert_eq!(nearest_neighbor(&[1.5, 1.0], &corpus).unwrap().0, 1);
        assert!(nearest_neighbor(&[0.0], &[]).is_err());
    }
}
