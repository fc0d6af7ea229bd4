use serde::{Deserialize, Serialize};

use super::features::{featurize, FeatureConfig};
use super::train::TrainMeta;
use crate::color::FitzpatrickType;
use crate::error::{Error, Result};
use crate::imgproc::RgbImage;

/// Cumulative binary tasks `type > k`, k = 1..=5.
pub const N_TASKS: usize = FitzpatrickType::COUNT - 1;

/// Probabilities are clipped to `[PROB_EPS, 1 − PROB_EPS]` inside the loss.
pub const PROB_EPS: f64 = 1e-7;

/// Optional `tanh` layer between the features and the shared score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HiddenLayer {
    pub width: usize,
    /// `width × d`, row-major.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

/// Per-feature affine normalization applied before the first layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputNorm {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl InputNorm {
    /// Mean and standard deviation of each column; near-constant columns get
    /// scale 1.
    pub fn fit(rows: &[&[f64]]) -> InputNorm {
        let d = rows.first().map_or(0, |r| r.len());
        let n = rows.len().max(1) as f64;
        let mut mean = vec![0.0; d];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(*r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(*r).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 1e-6 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        InputNorm { mean, scale }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }
}

/// CORAL model: one score shared by all tasks, plus a bias per task.
/// `logit_k = score(x) + biases[k]`, `P(type > k+1) = sigmoid(logit_k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoralModel {
    pub d: usize,
    /// Length `d` for a linear model, `hidden.width` otherwise.
    pub weights: Vec<f64>,
    pub biases: [f64; N_TASKS],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hidden: Option<HiddenLayer>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_norm: Option<InputNorm>,
    pub feature_config: FeatureConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_meta: Option<TrainMeta>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoralOutput {
    pub logits: [f64; N_TASKS],
    pub probs: [f64; N_TASKS],
}

/// Gradient of the loss, laid out like the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct CoralGradient {
    pub weights: Vec<f64>,
    pub biases: [f64; N_TASKS],
    pub hidden_weights: Vec<f64>,
    pub hidden_biases: Vec<f64>,
}

impl CoralGradient {
    pub fn zeros_like(model: &CoralModel) -> Self {
        let (hw, hb) = model
            .hidden
            .as_ref()
            .map_or((0, 0), |h| (h.weights.len(), h.biases.len()));
        Self {
            weights: vec![0.0; model.weights.len()],
            biases: [0.0; N_TASKS],
            hidden_weights: vec![0.0; hw],
            hidden_biases: vec![0.0; hb],
        }
    }

    pub fn slices(&self) -> [&[f64]; 4] {
        [&self.weights, &self.biases, &self.hidden_weights, &self.hidden_biases]
    }

    pub fn slices_mut(&mut self) -> [&mut [f64]; 4] {
        [
            &mut self.weights,
            &mut self.biases,
            &mut self.hidden_weights,
            &mut self.hidden_biases,
        ]
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Intermediate values of one forward pass, kept for backpropagation.
struct Trace {
    input: Vec<f64>,
    hidden: Option<Vec<f64>>,
    output: CoralOutput,
}

impl CoralModel {
    /// All-zero linear model over `d` features.
    pub fn zeros(d: usize, feature_config: FeatureConfig) -> Self {
        Self {
            d,
            weights: vec![0.0; d],
            biases: [0.0; N_TASKS],
            hidden: None,
            input_norm: None,
            feature_config,
            train_meta: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let expected_w = self.hidden.as_ref().map_or(self.d, |h| h.width);
        if self.weights.len() != expected_w {
            return Err(Error::DimensionMismatch(format!(
                "model has {} output weights, expected {expected_w}",
                self.weights.len()
            )));
        }
        if let Some(h) = &self.hidden {
            if h.weights.len() != h.width * self.d || h.biases.len() != h.width {
                return Err(Error::DimensionMismatch(
                    "hidden layer shape does not match d and width".into(),
                ));
            }
        }
        if let Some(norm) = &self.input_norm {
            if norm.mean.len() != self.d || norm.scale.len() != self.d {
                return Err(Error::DimensionMismatch(
                    "input normalization length differs from d".into(),
                ));
            }
        }
        let params = self
            .weights
            .iter()
            .chain(&self.biases)
            .chain(self.hidden.iter().flat_map(|h| h.weights.iter().chain(&h.biases)));
        if params.clone().any(|v| !v.is_finite()) {
            return Err(Error::DegenerateInput("model has non-finite parameters".into()));
        }
        Ok(())
    }

    pub fn param_slices_mut(&mut self) -> [&mut [f64]; 4] {
        let (hw, hb): (&mut [f64], &mut [f64]) = match &mut self.hidden {
            Some(h) => (&mut h.weights, &mut h.biases),
            None => (&mut [], &mut []),
        };
        [&mut self.weights, &mut self.biases, hw, hb]
    }

    /// Sorts biases in descending order, which makes predictions
    /// rank-consistent. Returns whether the order changed.
    pub fn sort_biases(&mut self) -> bool {
        let before = self.biases;
        self.biases.sort_by(|a, b| b.total_cmp(a));
        before != self.biases
    }

    fn trace(&self, x: &[f64]) -> Result<Trace> {
        if x.len() != self.d {
            return Err(Error::DimensionMismatch(format!(
                "feature vector has length {}, model expects {}",
                x.len(),
                self.d
            )));
        }
        let input = match &self.input_norm {
            Some(norm) => norm.apply(x),
            None => x.to_vec(),
        };
        let (score, hidden) = match &self.hidden {
            None => (dot(&self.weights, &input), None),
            Some(h) => {
                let act: Vec<f64> = h
                    .weights
                    .chunks_exact(self.d)
                    .zip(&h.biases)
                    .map(|(row, b)| (dot(row, &input) + b).tanh())
                    .collect();
                (dot(&self.weights, &act), Some(act))
            }
        };
        let logits = self.biases.map(|b| score + b);
        Ok(Trace {
            input,
            hidden,
            output: CoralOutput {
                logits,
                probs: logits.map(sigmoid),
            },
        })
    }

    /// Loss of one sample; its gradient is added into `grad`.
    pub fn accumulate_gradient(&self, x: &[f64], gt: FitzpatrickType, grad: &mut CoralGradient) -> Result<f64> {
        let t = self.trace(x)?;
        let (loss, dlogits) = coral_loss(&t.output.probs, gt);
        let dscore: f64 = dlogits.iter().sum();
        for (g, d) in grad.biases.iter_mut().zip(&dlogits) {
            *g += d;
        }
        match (&self.hidden, &t.hidden) {
            (Some(h), Some(act)) => {
                for (g, a) in grad.weights.iter_mut().zip(act) {
                    *g += dscore * a;
                }
                for (j, a) in act.iter().enumerate() {
                    let dpre = dscore * self.weights[j] * (1.0 - a * a);
                    grad.hidden_biases[j] += dpre;
                    if dpre != 0.0 {
                        let row = &mut grad.hidden_weights[j * self.d..(j + 1) * self.d];
                        for (g, v) in row.iter_mut().zip(&t.input) {
                            *g += dpre * v;
                        }
                    }
                }
                debug_assert_eq!(h.width, act.len());
            }
            _ => {
                if dscore != 0.0 {
                    for (g, v) in grad.weights.iter_mut().zip(&t.input) {
                        *g += dscore * v;
                    }
                }
            }
        }
        Ok(loss)
    }

    /// Loss and gradient of a single sample.
    pub fn loss_and_gradient(&self, x: &[f64], gt: FitzpatrickType) -> Result<(f64, CoralGradient)> {
        let mut grad = CoralGradient::zeros_like(self);
        let loss = self.accumulate_gradient(x, gt, &mut grad)?;
        Ok((loss, grad))
    }

    pub fn loss(&self, x: &[f64], gt: FitzpatrickType) -> Result<f64> {
        Ok(coral_loss(&self.trace(x)?.output.probs, gt).0)
    }
}

pub fn coral_forward(model: &CoralModel, x: &[f64]) -> Result<CoralOutput> {
    Ok(model.trace(x)?.output)
}

/// Sum over tasks of the binary cross-entropy between `P(type > k)` and the
/// indicator `gt > k`. Also returns the derivative with respect to each
/// logit, which is zero where the probability was clipped.
pub fn coral_loss(probs: &[f64; N_TASKS], gt: FitzpatrickType) -> (f64, [f64; N_TASKS]) {
    let mut loss = 0.0;
    let mut dlogits = [0.0; N_TASKS];
    for (k, &p) in probs.iter().enumerate() {
        let y = if usize::from(gt.index()) > k + 1 { 1.0 } else { 0.0 };
        let pc = p.clamp(PROB_EPS, 1.0 - PROB_EPS);
        loss -= y * pc.ln() + (1.0 - y) * (1.0 - pc).ln();
        if pc == p {
            dlogits[k] = p - y;
        }
    }
    (loss, dlogits)
}

/// `1 + #{k : P(type > k) > 0.5}`.
pub fn predict_from_probs(probs: &[f64; N_TASKS]) -> FitzpatrickType {
    let above = probs.iter().filter(|&&p| p > 0.5).count();
    FitzpatrickType::from_zero_based(above).expect("at most 5 tasks")
}

pub fn predict_features(model: &CoralModel, x: &[f64]) -> Result<FitzpatrickType> {
    Ok(predict_from_probs(&coral_forward(model, x)?.probs))
}

pub fn predict(model: &CoralModel, img: &RgbImage) -> Result<FitzpatrickType> {
    if model.d != model.feature_config.dim() {
        return Err(Error::DimensionMismatch(format!(
            "model expects {} features but its feature config yields {}",
            model.d,
            model.feature_config.dim()
        )));
    }
    predict_features(model, &featurize(img, &model.feature_config)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fp(i: u8) -> FitzpatrickType {
        FitzpatrickType::new(i).unwrap()
    }

    fn random_model(rng: &mut ChaCha8Rng, d: usize, hidden: Option<usize>) -> CoralModel {
        let mut m = CoralModel::zeros(d, FeatureConfig::default());
        m.biases = std::array::from_fn(|_| rng.random_range(-2.0..2.0));
        if let Some(width) = hidden {
            m.hidden = Some(HiddenLayer {
                width,
                weights: (0..width * d).map(|_| rng.random_range(-0.5..0.5)).collect(),
                biases: (0..width).map(|_| rng.random_range(-0.5..0.5)).collect(),
            });
            m.weights = (0..width).map(|_| rng.random_range(-1.0..1.0)).collect();
        } else {
            m.weights = (0..d).map(|_| rng.random_range(-0.5..0.5)).collect();
        }
        if rng.random_bool(0.5) {
            m.input_norm = Some(InputNorm {
                mean: (0..d).map(|_| rng.random_range(-0.5..0.5)).collect(),
                scale: (0..d).map(|_| rng.random_range(0.5..2.0)).collect(),
            });
        }
        m
    }

    /// Straight-line forward pass written independently of the model code.
    fn scalar_forward(m: &CoralModel, x: &[f64]) -> [f64; N_TASKS] {
        let mut input = x.to_vec();
        if let Some(norm) = &m.input_norm {
            for i in 0..input.len() {
                input[i] = (input[i] - norm.mean[i]) / norm.scale[i];
            }
        }
        let mut score = 0.0;
        match &m.hidden {
            None => {
                for i in 0..m.d {
                    score += m.weights[i] * input[i];
                }
            }
            Some(h) => {
                for j in 0..h.width {
                    let mut a = h.biases[j];
                    for i in 0..m.d {
                        a += h.weights[j * m.d + i] * input[i];
                    }
                    score += m.weights[j] * a.tanh();
                }
            }
        }
        let mut p = [0.0; N_TASKS];
        for k in 0..N_TASKS {
            p[k] = 1.0 / (1.0 + (-(score + m.biases[k])).exp());
        }
        p
    }

    #[test]
    fn zero_weights_ordered_biases() {
        let mut m = CoralModel::zeros(4, FeatureConfig::default());
        m.biases = [2.0, 1.0, 0.0, -1.0, -2.0];
        let out = coral_forward(&m, &[0.3, 0.1, 0.9, 0.4]).unwrap();
        let s = |z: f64| 1.0 / (1.0 + (-z).exp());
        let want = [s(2.0), s(1.0), 0.5, s(-1.0), s(-2.0)];
        for (p, w) in out.probs.iter().zip(want) {
            assert!((p - w).abs() < 1e-15);
        }
        assert!(out.probs.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn matches_scalar_forward() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for trial in 0..50 {
            let hidden = (trial % 2 == 1).then_some(4);
            let m = random_model(&mut rng, 7, hidden);
            let x: Vec<f64> = (0..7).map(|_| rng.random_range(0.0..1.0)).collect();
            let got = coral_forward(&m, &x).unwrap().probs;
            let want = scalar_forward(&m, &x);
            for (g, w) in got.iter().zip(want) {
                assert!((g - w).abs() < 1e-12);
                assert!(*g > 0.0 && *g < 1.0);
            }
        }
    }

    #[test]
    fn sorted_biases_give_monotone_probabilities() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let mut m = random_model(&mut rng, 5, None);
            m.sort_biases();
            let x: Vec<f64> = (0..5).map(|_| rng.random_range(-3.0..3.0)).collect();
            let p = coral_forward(&m, &x).unwrap().probs;
            assert!(p.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn sort_biases_reports_change() {
        let mut m = CoralModel::zeros(1, FeatureConfig::default());
        m.biases = [2.0, 1.0, 0.0, -1.0, -2.0];
        assert!(!m.sort_biases());
        m.biases = [1.0, 2.0, 0.0, -1.0, -2.0];
        assert!(m.sort_biases());
        assert_eq!(m.biases, [2.0, 1.0, 0.0, -1.0, -2.0]);
    }

    #[test]
    fn loss_for_type_one() {
        let p = [0.3, 0.2, 0.1, 0.05, 0.01];
        let (loss, _) = coral_loss(&p, fp(1));
        let want: f64 = p.iter().map(|q| -(1.0f64 - q).ln()).sum();
        assert!((loss - want).abs() < 1e-12);
    }

    #[test]
    fn perfect_prediction_loss_is_tiny() {
        for t in 1..=6u8 {
            let p: [f64; N_TASKS] = std::array::from_fn(|k| if usize::from(t) > k + 1 { 1.0 } else { 0.0 });
            let (loss, _) = coral_loss(&p, fp(t));
            assert!(loss >= 0.0);
            assert!(loss <= 5.0 * -(1.0 - PROB_EPS).ln() + 1e-15);
        }
    }

    #[test]
    fn prediction_rule() {
        assert_eq!(predict_from_probs(&[0.4, 0.3, 0.2, 0.1, 0.0]), fp(1));
        assert_eq!(predict_from_probs(&[0.9, 0.8, 0.7, 0.6, 0.51]), fp(6));
        assert_eq!(predict_from_probs(&[0.9, 0.8, 0.4, 0.3, 0.1]), fp(3));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let h = 1e-5;
        for trial in 0..100 {
            let d = rng.random_range(1..8);
            let hidden = (trial % 3 == 2).then(|| rng.random_range(1..5));
            let model = random_model(&mut rng, d, hidden);
            let x: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..1.0)).collect();
            let gt = fp(rng.random_range(1..=6));
            let (_, grad) = model.loss_and_gradient(&x, gt).unwrap();
            let mut probe = model.clone();
            for (s, analytic) in grad.slices().iter().enumerate() {
                for (i, &a) in analytic.iter().enumerate() {
                    let orig = probe.param_slices_mut()[s][i];
                    probe.param_slices_mut()[s][i] = orig + h;
                    let up = probe.loss(&x, gt).unwrap();
                    probe.param_slices_mut()[s][i] = orig - h;
                    let down = probe.loss(&x, gt).unwrap();
                    probe.param_slices_mut()[s][i] = orig;
                    let numeric = (up - down) / (2.0 * h);
                    let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
                    assert!(rel < 1e-4, "trial {trial} slice {s} index {i}: {a} vs {numeric}");
                }
            }
        }
    }

    #[test]
    fn json_fields() {
        let m = CoralModel::zeros(3072, FeatureConfig::default());
        let v = serde_json::to_value(&m).unwrap();
        let obj = v.as_object().unwrap();
        for key in ["d", "weights", "biases", "feature_config"] {
            assert!(obj.contains_key(key), "{key}");
        }
        assert_eq!(obj["biases"].as_array().unwrap().len(), 5);
        let back: CoralModel = serde_json::from_value(v).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn wrong_length_rejected() {
        let m = CoralModel::zeros(4, FeatureConfig::default());
        assert!(matches!(coral_forward(&m, &[1.0; 3]), Err(Error::DimensionMismatch(_))));
    }
}
