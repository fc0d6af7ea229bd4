use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::features::{featurize, FeatureConfig};
use super::model::{CoralGradient, CoralModel, HiddenLayer, InputNorm, N_TASKS};
use crate::color::FitzpatrickType;
use crate::error::{Error, Result};
use crate::synth::Dataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub train_fraction: f64,
    pub val_fraction: f64,
    pub test_fraction: f64,
    pub max_epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Width of an optional `tanh` hidden layer; `None` trains a linear score.
    pub hidden_width: Option<usize>,
    /// Standardize every feature with the training split's mean and spread.
    pub normalize_inputs: bool,
    pub features: FeatureConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            train_fraction: 0.8,
            val_fraction: 0.1,
            test_fraction: 0.1,
            max_epochs: 100,
            batch_size: 64,
            learning_rate: 1e-3,
            seed: 0,
            hidden_width: None,
            normalize_inputs: true,
            features: FeatureConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fr = [self.train_fraction, self.val_fraction, self.test_fraction];
        if fr.iter().any(|f| !(0.0..=1.0).contains(f)) || (fr.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParams(format!(
                "split fractions must lie in [0, 1] and sum to 1, got {fr:?}"
            )));
        }
        if self.train_fraction == 0.0 || self.val_fraction == 0.0 {
            return Err(Error::InvalidParams(
                "train and validation fractions must be positive".into(),
            ));
        }
        if self.max_epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidParams(
                "max_epochs and batch_size must be at least 1".into(),
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.hidden_width == Some(0) {
            return Err(Error::InvalidParams("hidden width must be at least 1".into()));
        }
        self.features.validate()
    }
}

/// Sample indices of each split, ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataSplit {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainMeta {
    pub seed: u64,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub epochs_run: usize,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Whether sorting the checkpoint's biases changed their order.
    pub biases_reordered: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: CoralModel,
    pub log: Vec<EpochLog>,
    pub split: DataSplit,
}

/// Splits every class separately by the configured fractions. Each class
/// with at least three samples contributes at least one sample to the
/// validation split, and to the test split when its fraction is positive.
pub fn stratified_split(labels: &[FitzpatrickType], cfg: &TrainConfig) -> Result<DataSplit> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut split = DataSplit {
        train: Vec::new(),
        val: Vec::new(),
        test: Vec::new(),
    };
    for class in FitzpatrickType::all() {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if idx.is_empty() {
            continue;
        }
        idx.shuffle(&mut rng);
        let n = idx.len();
        let mut n_val = (cfg.val_fraction * n as f64).round() as usize;
        let mut n_test = (cfg.test_fraction * n as f64).round() as usize;
        if n >= 3 {
            n_val = n_val.max(1);
            if cfg.test_fraction > 0.0 {
                n_test = n_test.max(1);
            }
        }
        while n_val + n_test >= n && n_val + n_test > 0 {
            if n_test >= n_val && n_test > 0 {
                n_test -= 1;
            } else {
                n_val -= 1;
            }
        }
        split.val.extend_from_slice(&idx[..n_val]);
        split.test.extend_from_slice(&idx[n_val..n_val + n_test]);
        split.train.extend_from_slice(&idx[n_val + n_test..]);
    }
    split.train.sort_unstable();
    split.val.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}

struct Adam {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: i32,
    lr: f64,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(grad: &CoralGradient, lr: f64) -> Self {
        let zeros: Vec<Vec<f64>> = grad.slices().iter().map(|s| vec![0.0; s.len()]).collect();
        Self {
            m: zeros.clone(),
            v: zeros,
            t: 0,
            lr,
        }
    }

    fn step(&mut self, model: &mut CoralModel, grad: &CoralGradient) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        for (s, (params, g)) in model.param_slices_mut().into_iter().zip(grad.slices()).enumerate() {
            for (i, (p, &gi)) in params.iter_mut().zip(g).enumerate() {
                let m = &mut self.m[s][i];
                let v = &mut self.v[s][i];
                *m = Self::BETA1 * *m + (1.0 - Self::BETA1) * gi;
                *v = Self::BETA2 * *v + (1.0 - Self::BETA2) * gi * gi;
                *p -= self.lr * (*m / c1) / ((*v / c2).sqrt() + Self::EPS);
            }
        }
    }
}

fn mean_loss(model: &CoralModel, x: &[Vec<f64>], y: &[FitzpatrickType], idx: &[usize]) -> Result<(f64, f64)> {
    let mut loss = 0.0;
    let mut correct = 0usize;
    for &i in idx {
        let out = super::model::coral_forward(model, &x[i])?;
        loss += super::model::coral_loss(&out.probs, y[i]).0;
        correct += usize::from(super::model::predict_from_probs(&out.probs) == y[i]);
    }
    let n = idx.len().max(1) as f64;
    Ok((loss / n, correct as f64 / n))
}

fn init_model(d: usize, x: &[Vec<f64>], y: &[FitzpatrickType], train: &[usize], cfg: &TrainConfig) -> CoralModel {
    let mut model = CoralModel::zeros(d, cfg.features);
    // Start each task at the log-odds of its training prevalence.
    let n = train.len() as f64;
    model.biases = std::array::from_fn(|k| {
        let pos = train.iter().filter(|&&i| usize::from(y[i].index()) > k + 1).count() as f64;
        let p = (pos / n).clamp(0.01, 0.99);
        (p / (1.0 - p)).ln()
    });
    if cfg.normalize_inputs {
        let rows: Vec<&[f64]> = train.iter().map(|&i| x[i].as_slice()).collect();
        model.input_norm = Some(InputNorm::fit(&rows));
    }
    if let Some(width) = cfg.hidden_width {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x1a7e_5eed);
        let a = 1.0 / (d as f64).sqrt();
        let b = 1.0 / (width as f64).sqrt();
        model.hidden = Some(HiddenLayer {
            width,
            weights: (0..width * d).map(|_| rng.random_range(-a..a)).collect(),
            biases: vec![0.0; width],
        });
        model.weights = (0..width).map(|_| rng.random_range(-b..b)).collect();
    }
    model
}

/// Trains on precomputed feature vectors with mini-batch Adam. After every
/// epoch the validation loss is evaluated; the parameters of the epoch with
/// the lowest validation loss are returned, with biases sorted descending.
pub fn train_on_features(x: &[Vec<f64>], y: &[FitzpatrickType], cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} feature vectors for {} labels",
            x.len(),
            y.len()
        )));
    }
    let d = x.first().map_or(0, |r| r.len());
    if d == 0 || x.iter().any(|r| r.len() != d) {
        return Err(Error::DimensionMismatch(
            "feature vectors must share a non-zero length".into(),
        ));
    }
    let mut classes: Vec<FitzpatrickType> = y.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "training needs at least 2 Fitzpatrick classes, found {}",
            classes.len()
        )));
    }
    let split = stratified_split(y, cfg)?;
    if split.train.is_empty() || split.val.is_empty() {
        return Err(Error::InsufficientData(format!(
            "{} samples leave an empty training or validation split",
            y.len()
        )));
    }

    let mut model = init_model(d, x, y, &split.train, cfg);
    let mut grad = CoralGradient::zeros_like(&model);
    let mut adam = Adam::new(&grad, cfg.learning_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let mut order = split.train.clone();
    let mut log = Vec::with_capacity(cfg.max_epochs);
    let mut best: Option<(f64, usize, CoralModel)> = None;

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            grad.slices_mut().iter_mut().for_each(|s| s.fill(0.0));
            for &i in batch {
                model.accumulate_gradient(&x[i], y[i], &mut grad)?;
            }
            let inv = 1.0 / batch.len() as f64;
            grad.slices_mut()
                .iter_mut()
                .for_each(|s| s.iter_mut().for_each(|g| *g *= inv));
            adam.step(&mut model, &grad);
        }
        let (train_loss, _) = mean_loss(&model, x, y, &split.train)?;
        let (val_loss, val_accuracy) = mean_loss(&model, x, y, &split.val)?;
        if !train_loss.is_finite() {
            return Err(Error::DegenerateInput(format!("training diverged at epoch {epoch}")));
        }
        log.push(EpochLog {
            epoch,
            train_loss,
            val_loss,
            val_accuracy,
        });
        if best.as_ref().is_none_or(|(l, _, _)| val_loss < *l) {
            best = Some((val_loss, epoch, model.clone()));
        }
    }

    let (best_val_loss, best_epoch, mut model) = best.expect("max_epochs >= 1");
    let biases_reordered = model.sort_biases();
    model.train_meta = Some(TrainMeta {
        seed: cfg.seed,
        best_epoch,
        best_val_loss,
        epochs_run: log.len(),
        n_train: split.train.len(),
        n_val: split.val.len(),
        n_test: split.test.len(),
        learning_rate: cfg.learning_rate,
        batch_size: cfg.batch_size,
        biases_reordered,
    });
    debug_assert_eq!(model.biases.len(), N_TASKS);
    Ok(TrainOutcome { model, log, split })
}

/// Featurizes every image of `ids` in parallel, in order.
pub fn featurize_images(dataset: &Dataset, ids: &[String], features: &FeatureConfig) -> Result<Vec<Vec<f64>>> {
    ids.par_iter()
        .map(|id| featurize(&dataset.load_image(id)?, features))
        .collect()
}

/// Trains on a generated dataset using its ground-truth Fitzpatrick labels.
pub fn train(dataset: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let labels = dataset
        .gt_labels()
        .ok_or_else(|| Error::InsufficientData("dataset has rows without ground-truth Fitzpatrick labels".into()))?;
    let ids: Vec<String> = dataset.rows.iter().map(|r| r.id.clone()).collect();
    let x = featurize_images(dataset, &ids, &cfg.features)?;
    train_on_features(&x, &labels, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ordinal::model::predict_features;

    fn fp(i: u8) -> FitzpatrickType {
        FitzpatrickType::new(i).unwrap()
    }

    fn labels(counts: &[usize]) -> Vec<FitzpatrickType> {
        counts
            .iter()
            .enumerate()
            .flat_map(|(c, &n)| std::iter::repeat_n(fp(c as u8 + 1), n))
            .collect()
    }

    #[test]
    fn split_is_stratified_and_disjoint() {
        let y = labels(&[50, 30, 20, 10, 5, 3]);
        let s = stratified_split(&y, &TrainConfig::default()).unwrap();
        let mut all: Vec<usize> = s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..y.len()).collect::<Vec<_>>());
        for class in FitzpatrickType::all() {
            assert!(
                s.val.iter().any(|&i| y[i] == class),
                "{class:?} missing from validation"
            );
            assert!(s.test.iter().any(|&i| y[i] == class));
        }
        let in_val = s.val.iter().filter(|&&i| y[i] == fp(1)).count();
        assert_eq!(in_val, 5);
        assert_eq!(s, stratified_split(&y, &TrainConfig::default()).unwrap());
    }

    fn separable(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<FitzpatrickType>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let class = i % 2;
                let c = if class == 0 { -1.0 } else { 1.0 };
                let x = vec![c + rng.random_range(-0.5..0.5), rng.random_range(-1.0..1.0)];
                (x, fp(class as u8 + 1))
            })
            .unzip()
    }

    #[test]
    fn separable_toy_problem() {
        let (x, y) = separable(80, 1);
        let cfg = TrainConfig {
            max_epochs: 60,
            learning_rate: 0.02,
            normalize_inputs: false,
            ..Default::default()
        };
        let out = train_on_features(&x, &y, &cfg).unwrap();
        assert!(out.log[..10].windows(2).all(|w| w[1].train_loss < w[0].train_loss));
        let acc = out
            .split
            .train
            .iter()
            .filter(|&&i| predict_features(&out.model, &x[i]).unwrap() == y[i])
            .count() as f64
            / out.split.train.len() as f64;
        assert_eq!(acc, 1.0);
    }

    #[test]
    fn checkpoint_has_minimum_validation_loss() {
        let (x, y) = separable(120, 2);
        let cfg = TrainConfig {
            max_epochs: 30,
            learning_rate: 0.05,
            hidden_width: Some(3),
            ..Default::default()
        };
        let out = train_on_features(&x, &y, &cfg).unwrap();
        let meta = out.model.train_meta.clone().unwrap();
        assert!(out.log.iter().all(|e| meta.best_val_loss <= e.val_loss));
        assert_eq!(out.log[meta.best_epoch - 1].val_loss, meta.best_val_loss);
        assert_eq!(out.log.len(), 30);
        assert!(out.model.biases.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn deterministic_per_seed() {
        let (x, y) = separable(100, 3);
        let cfg = TrainConfig {
            max_epochs: 5,
            hidden_width: Some(2),
            seed: 9,
            ..Default::default()
        };
        let a = train_on_features(&x, &y, &cfg).unwrap();
        let b = train_on_features(&x, &y, &cfg).unwrap();
        assert_eq!(a, b);
        let c = train_on_features(&x, &y, &TrainConfig { seed: 10, ..cfg }).unwrap();
        assert_ne!(a.model.hidden, c.model.hidden);
    }

    #[test]
    fn single_class_rejected() {
        let x = vec![vec![0.0, 1.0]; 10];
        let y = vec![fp(3); 10];
        assert!(matches!(
            train_on_features(&x, &y, &TrainConfig::default()),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn bad_config_rejected() {
        let cfg = TrainConfig {
            train_fraction: 0.9,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        assert!(TrainConfig {
            max_epochs: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }
}
