use std::path::Path;

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::dataset::RssDataset;
use crate::error::{Error, Result};
use crate::rng;

/// Features below this power are clamped before taking log10 (W).
const RSS_FLOOR: f64 = 1e-30;

const FILE_FORMAT: &str = "owc-sim-mlp";
const FILE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    /// Beam classifier trained with cross-entropy.
    Softmax,
    /// Position regressor trained with squared error.
    Sigmoid,
}

/// Standardisation of `log10(RSS)` features, fitted on the training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Scaler {
    fn fit(rows: &[&[f64]]) -> Scaler {
        let d = rows.first().map_or(0, |r| r.len());
        let n = rows.len().max(1) as f64;
        let mut mean = vec![0.0; d];
        for r in rows {
            for (m, &x) in mean.iter_mut().zip(r.iter()) {
                *m += log_feature(x);
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for r in rows {
            for ((v, &x), m) in var.iter_mut().zip(r.iter()).zip(&mean) {
                *v += (log_feature(x) - m).powi(2);
            }
        }
        let std = var
            .into_iter()
            .map(|v| {
                let s = (v / n).sqrt();
                if s > 1e-12 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Scaler { mean, std }
    }

    fn apply(&self, raw: &[f64], out: &mut [f64]) {
        for i in 0..raw.len() {
            out[i] = (log_feature(raw[i]) - self.mean[i]) / self.std[i];
        }
    }
}

fn log_feature(p: f64) -> f64 {
    p.max(RSS_FLOOR).log10()
}

/// Training target of one row.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Class(usize),
    Values(Vec<f64>),
}

/// One-hidden-layer perceptron with ReLU hidden units.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    /// `[inputs, hidden, outputs]`
    pub dims: [usize; 3],
    pub output: OutputKind,
    pub scaler: Scaler,
    /// Row-major `hidden × inputs`.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    /// Row-major `outputs × hidden`.
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub probabilities: Vec<f64>,
    pub index: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format: String,
    version: u32,
    dims: [usize; 3],
    output: OutputKind,
    scaler: Scaler,
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: Vec<f64>,
}

struct Scratch {
    x: Vec<f64>,
    z1: Vec<f64>,
    a1: Vec<f64>,
    out: Vec<f64>,
}

impl MlpModel {
    /// Random He-style initialisation with an identity scaler.
    pub fn new(dims: [usize; 3], output: OutputKind, seed: u64) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::invalid("dims", "every layer needs at least one unit"));
        }
        let [i, h, o] = dims;
        let mut r = rng::stream(seed, rng::purpose("mlp-init"), 0);
        let n1 = Normal::new(0.0, (2.0 / i as f64).sqrt()).expect("positive std");
        let n2 = Normal::new(0.0, (1.0 / h as f64).sqrt()).expect("positive std");
        Ok(MlpModel {
            dims,
            output,
            scaler: Scaler {
                mean: vec![0.0; i],
                std: vec![1.0; i],
            },
            w1: (0..h * i).map(|_| n1.sample(&mut r)).collect(),
            b1: vec![0.0; h],
            w2: (0..o * h).map(|_| n2.sample(&mut r)).collect(),
            b2: vec![0.0; o],
        })
    }

    pub fn n_params(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    /// All weights flattened as `w1, b1, w2, b2`.
    pub fn params(&self) -> Vec<f64> {
        [&self.w1[..], &self.b1, &self.w2, &self.b2].concat()
    }

    pub fn set_params(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.n_params() {
            return Err(Error::invalid("params", "length does not match the model"));
        }
        let (a, rest) = p.split_at(self.w1.len());
        let (b, rest) = rest.split_at(self.b1.len());
        let (c, d) = rest.split_at(self.w2.len());
        self.w1.copy_from_slice(a);
        self.b1.copy_from_slice(b);
        self.w2.copy_from_slice(c);
        self.b2.copy_from_slice(d);
        Ok(())
    }

    fn scratch(&self) -> Scratch {
        let [i, h, o] = self.dims;
        Scratch {
            x: vec![0.0; i],
            z1: vec![0.0; h],
            a1: vec![0.0; h],
            out: vec![0.0; o],
        }
    }

    fn forward(&self, raw: &[f64], s: &mut Scratch) {
        let [i, h, o] = self.dims;
        self.scaler.apply(raw, &mut s.x);
        for j in 0..h {
            let row = &self.w1[j * i..(j + 1) * i];
            let z = self.b1[j] + row.iter().zip(&s.x).map(|(w, x)| w * x).sum::<f64>();
            s.z1[j] = z;
            s.a1[j] = z.max(0.0);
        }
        for k in 0..o {
            let row = &self.w2[k * h..(k + 1) * h];
            s.out[k] = self.b2[k] + row.iter().zip(&s.a1).map(|(w, a)| w * a).sum::<f64>();
        }
        match self.output {
            OutputKind::Softmax => {
                let m = s.out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mut sum = 0.0;
                for v in s.out.iter_mut() {
                    *v = (*v - m).exp();
                    sum += *v;
                }
                s.out.iter_mut().for_each(|v| *v /= sum);
            }
            OutputKind::Sigmoid => {
                s.out.iter_mut().for_each(|v| *v = 1.0 / (1.0 + (-*v).exp()));
            }
        }
    }

    /// Network output for raw RSS features.
    pub fn predict(&self, raw: &[f64]) -> Result<Vec<f64>> {
        if raw.len() != self.dims[0] {
            return Err(Error::invalid(
                "rss",
                format!("expected {} features, got {}", self.dims[0], raw.len()),
            ));
        }
        let mut s = self.scratch();
        self.forward(raw, &mut s);
        Ok(s.out)
    }

    /// Mean loss over the batch and its gradient with respect to
    /// [`MlpModel::params`].
    pub fn loss_and_gradient(&self, inputs: &[&[f64]], targets: &[Target]) -> Result<(f64, Vec<f64>)> {
        if inputs.len() != targets.len() || inputs.is_empty() {
            return Err(Error::invalid("batch", "inputs and targets must be non-empty and equal in length"));
        }
        let [i, h, o] = self.dims;
        let mut grad = vec![0.0; self.n_params()];
        let (g_w1, rest) = grad.split_at_mut(h * i);
        let (g_b1, rest) = rest.split_at_mut(h);
        let (g_w2, g_b2) = rest.split_at_mut(o * h);
        let mut s = self.scratch();
        let mut dz2 = vec![0.0; o];
        let mut dz1 = vec![0.0; h];
        let mut loss = 0.0;
        for (raw, target) in inputs.iter().zip(targets) {
            if raw.len() != i {
                return Err(Error::invalid("rss", "wrong feature count in batch"));
            }
            self.forward(raw, &mut s);
            match (self.output, target) {
                (OutputKind::Softmax, Target::Class(c)) => {
                    if *c >= o {
                        return Err(Error::invalid("label", "class index outside the output layer"));
                    }
                    loss -= s.out[*c].max(f64::MIN_POSITIVE).ln();
                    dz2.copy_from_slice(&s.out);
                    dz2[*c] -= 1.0;
                }
                (OutputKind::Sigmoid, Target::Values(t)) if t.len() == o => {
                    for k in 0..o {
                        let e = s.out[k] - t[k];
                        loss += 0.5 * e * e;
                        dz2[k] = e * s.out[k] * (1.0 - s.out[k]);
                    }
                }
                _ => return Err(Error::invalid("target", "does not match the output layer")),
            }
            for k in 0..o {
                g_b2[k] += dz2[k];
                for j in 0..h {
                    g_w2[k * h + j] += dz2[k] * s.a1[j];
                }
            }
            for j in 0..h {
                let back: f64 = (0..o).map(|k| self.w2[k * h + j] * dz2[k]).sum();
                dz1[j] = if s.z1[j] > 0.0 { back } else { 0.0 };
                g_b1[j] += dz1[j];
                for (g, x) in g_w1[j * i..(j + 1) * i].iter_mut().zip(&s.x) {
                    *g += dz1[j] * x;
                }
            }
        }
        let n = inputs.len() as f64;
        grad.iter_mut().for_each(|g| *g /= n);
        Ok((loss / n, grad))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = ModelFile {
            format: FILE_FORMAT.into(),
            version: FILE_VERSION,
            dims: self.dims,
            output: self.output,
            scaler: self.scaler.clone(),
            w1: self.w1.clone(),
            b1: self.b1.clone(),
            w2: self.w2.clone(),
            b2: self.b2.clone(),
        };
        std::fs::write(path, serde_json::to_string_pretty(&file)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let f: ModelFile =
            serde_json::from_str(&text).map_err(|e| Error::ModelFormat(e.to_string()))?;
        if f.format != FILE_FORMAT || f.version != FILE_VERSION {
            return Err(Error::ModelFormat(format!(
                "expected {FILE_FORMAT} v{FILE_VERSION}, found {} v{}",
                f.format, f.version
            )));
        }
        let [i, h, o] = f.dims;
        let sizes_ok = f.w1.len() == h * i
            && f.b1.len() == h
            && f.w2.len() == o * h
            && f.b2.len() == o
            && f.scaler.mean.len() == i
            && f.scaler.std.len() == i;
        if !sizes_ok {
            return Err(Error::ModelFormat("weight arrays do not match dims".into()));
        }
        let all = f.w1.iter().chain(&f.b1).chain(&f.w2).chain(&f.b2);
        if !all.chain(&f.scaler.mean).chain(&f.scaler.std).all(|v| v.is_finite()) {
            return Err(Error::ModelFormat("non-finite weight".into()));
        }
        Ok(MlpModel {
            dims: f.dims,
            output: f.output,
            scaler: f.scaler,
            w1: f.w1,
            b1: f.b1,
            w2: f.w2,
            b2: f.b2,
        })
    }
}

/// Class probabilities and the arg-max beam.
pub fn predict_beam(model: &MlpModel, rss: &[f64]) -> Result<Prediction> {
    if model.output != OutputKind::Softmax {
        return Err(Error::invalid("model", "beam prediction needs a softmax classifier"));
    }
    let probabilities = model.predict(rss)?;
    let index = probabilities
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (k, &p)| if p > best.1 { (k, p) } else { best })
        .0;
    Ok(Prediction {
        probabilities,
        index,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub n_hidden: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub output: OutputKind,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            n_hidden: 5,
            epochs: 30,
            learning_rate: 1e-2,
            batch_size: 256,
            output: OutputKind::Softmax,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: MlpModel,
    /// Mean mini-batch loss of each epoch.
    pub epoch_loss: Vec<f64>,
}

/// Adam mini-batch training on the training split. Deterministic for a
/// given seed.
pub fn train_mlp(dataset: &RssDataset, cfg: &TrainConfig, seed: u64) -> Result<TrainOutcome> {
    let train = dataset.train();
    if train.is_empty() {
        return Err(Error::invalid("dataset", "training split is empty"));
    }
    if cfg.n_hidden == 0 || cfg.batch_size == 0 {
        return Err(Error::invalid("train", "n_hidden and batch_size must be positive"));
    }
    if !(cfg.learning_rate.is_finite() && cfg.learning_rate > 0.0) {
        return Err(Error::invalid("train.learning_rate", "must be positive"));
    }
    let n_out = match cfg.output {
        OutputKind::Softmax => dataset.n_beam,
        OutputKind::Sigmoid => 2,
    };
    let mut model = MlpModel::new([5, cfg.n_hidden, n_out], cfg.output, seed)?;
    let features: Vec<&[f64]> = train.iter().map(|r| &r.features[..]).collect();
    model.scaler = Scaler::fit(&features);
    let targets: Vec<Target> = train
        .iter()
        .map(|r| match cfg.output {
            OutputKind::Softmax => Target::Class(r.label),
            OutputKind::Sigmoid => Target::Values(r.position.to_vec()),
        })
        .collect();

    let (b1, b2, eps): (f64, f64, f64) = (0.9, 0.999, 1e-8);
    let mut params = model.params();
    let mut m = vec![0.0; params.len()];
    let mut v = vec![0.0; params.len()];
    let mut step = 0i32;
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut shuffle = rng::stream(seed, rng::purpose("mlp-shuffle"), 0);
    let mut epoch_loss = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut shuffle);
        let mut total = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let xs: Vec<&[f64]> = chunk.iter().map(|&k| features[k]).collect();
            let ts: Vec<Target> = chunk.iter().map(|&k| targets[k].clone()).collect();
            let (loss, grad) = model.loss_and_gradient(&xs, &ts)?;
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Diverged {
                    epoch,
                    detail: format!("loss {loss} after {batches} batches"),
                });
            }
            step += 1;
            let c1 = 1.0 - b1.powi(step);
            let c2 = 1.0 - b2.powi(step);
            for k in 0..params.len() {
                m[k] = b1 * m[k] + (1.0 - b1) * grad[k];
                v[k] = b2 * v[k] + (1.0 - b2) * grad[k] * grad[k];
                params[k] -= cfg.learning_rate * (m[k] / c1) / ((v[k] / c2).sqrt() + eps);
            }
            model.set_params(&params)?;
            total += loss;
            batches += 1;
        }
        epoch_loss.push(total / batches as f64);
    }
    Ok(TrainOutcome { model, epoch_loss })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::dataset::RssRow;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn random_batch(seed: u64, n: usize) -> Vec<Vec<f64>> {
        let mut r = rng::stream(seed, 0, 0);
        (0..n)
            .map(|_| (0..5).map(|_| 10f64.powf(-7.0 + r.random::<f64>())).collect())
            .collect()
    }

    fn fd_check(model: &MlpModel, xs: &[&[f64]], ts: &[Target]) -> f64 {
        let (_, grad) = model.loss_and_gradient(xs, ts).unwrap();
        let p0 = model.params();
        let eps = 1e-5;
        let mut worst: f64 = 0.0;
        for k in 0..p0.len() {
            let mut m = model.clone();
            let mut p = p0.clone();
            p[k] += eps;
            m.set_params(&p).unwrap();
            let up = m.loss_and_gradient(xs, ts).unwrap().0;
            p[k] -= 2.0 * eps;
            m.set_params(&p).unwrap();
            let down = m.loss_and_gradient(xs, ts).unwrap().0;
            let num = (up - down) / (2.0 * eps);
            let err = (num - grad[k]).abs() / num.abs().max(grad[k].abs()).max(1e-6);
            worst = worst.max(err);
        }
        worst
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let raw = random_batch(3, 16);
        let xs: Vec<&[f64]> = raw.iter().map(|r| &r[..]).collect();
        let mut model = MlpModel::new([5, 7, 9], OutputKind::Softmax, 5).unwrap();
        model.scaler = Scaler::fit(&xs);
        let ts: Vec<Target> = (0..16).map(|k| Target::Class(k % 9)).collect();
        let worst = fd_check(&model, &xs, &ts);
        assert!(worst < 1e-4, "softmax max rel err {worst}");

        let mut reg = MlpModel::new([5, 6, 2], OutputKind::Sigmoid, 8).unwrap();
        reg.scaler = Scaler::fit(&xs);
        let ts: Vec<Target> = (0..16)
            .map(|k| Target::Values(vec![k as f64 / 16.0, 1.0 - k as f64 / 16.0]))
            .collect();
        let worst = fd_check(&reg, &xs, &ts);
        assert!(worst < 1e-4, "sigmoid max rel err {worst}");
    }

    #[test]
    fn probabilities_sum_to_one() {
        let model = MlpModel::new([5, 5, 9], OutputKind::Softmax, 1).unwrap();
        for x in random_batch(4, 50) {
            let p = predict_beam(&model, &x).unwrap();
            assert_abs_diff_eq!(p.probabilities.iter().sum::<f64>(), 1.0, epsilon = 1e-9);
        }
        assert!(predict_beam(&model, &[1.0; 4]).is_err());
    }

    #[test]
    fn permuting_outputs_permutes_probabilities() {
        let model = MlpModel::new([5, 5, 4], OutputKind::Softmax, 2).unwrap();
        let perm = [2usize, 0, 3, 1];
        let mut swapped = model.clone();
        for (new, &old) in perm.iter().enumerate() {
            swapped.b2[new] = model.b2[old];
            swapped.w2[new * 5..(new + 1) * 5].copy_from_slice(&model.w2[old * 5..(old + 1) * 5]);
        }
        let x = &random_batch(9, 1)[0];
        let a = predict_beam(&model, x).unwrap().probabilities;
        let b = predict_beam(&swapped, x).unwrap().probabilities;
        for (new, &old) in perm.iter().enumerate() {
            assert_eq!(b[new], a[old]);
        }
    }

    fn toy_dataset() -> RssDataset {
        // two beams separated by the first feature
        let mut r = rng::stream(6, 0, 0);
        let rows = (0..400)
            .map(|k| {
                let label = k % 2;
                let base = if label == 0 { 1e-7 } else { 1e-5 };
                let mut f = [0.0; 5];
                f[0] = base * (1.0 + 0.5 * r.random::<f64>());
                for v in f.iter_mut().skip(1) {
                    *v = 1e-6 * (1.0 + r.random::<f64>());
                }
                RssRow {
                    features: f,
                    label,
                    position: [label as f64, 0.5],
                }
            })
            .collect();
        RssDataset::new(rows, 2, 1.0).unwrap()
    }

    #[test]
    fn separable_toy_set_is_learned() {
        let ds = toy_dataset();
        let cfg = TrainConfig {
            epochs: 200,
            batch_size: 32,
            ..TrainConfig::default()
        };
        let out = train_mlp(&ds, &cfg, 1).unwrap();
        let correct = ds
            .train()
            .iter()
            .filter(|r| predict_beam(&out.model, &r.features).unwrap().index == r.label)
            .count();
        assert_eq!(correct, ds.train().len());
        // loss trends down
        let first: f64 = out.epoch_loss[..10].iter().sum();
        let last: f64 = out.epoch_loss[out.epoch_loss.len() - 10..].iter().sum();
        assert!(last < first);
    }

    #[test]
    fn training_is_deterministic() {
        let ds = toy_dataset();
        let cfg = TrainConfig {
            epochs: 5,
            ..TrainConfig::default()
        };
        let a = train_mlp(&ds, &cfg, 9).unwrap();
        let b = train_mlp(&ds, &cfg, 9).unwrap();
        assert_eq!(a.model, b.model);
    }

    #[test]
    fn divergence_is_reported() {
        let ds = toy_dataset();
        let cfg = TrainConfig {
            epochs: 50,
            learning_rate: 1e300,
            ..TrainConfig::default()
        };
        match train_mlp(&ds, &cfg, 1) {
            Err(Error::Diverged { .. }) => {}
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn save_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        let model = MlpModel::new([5, 3, 9], OutputKind::Softmax, 4).unwrap();
        model.save(&path).unwrap();
        assert_eq!(MlpModel::load(&path).unwrap(), model);

        let text = std::fs::read_to_string(&path).unwrap().replace("\"version\": 1", "\"version\": 7");
        std::fs::write(&path, text).unwrap();
        assert!(matches!(MlpModel::load(&path), Err(Error::ModelFormat(_))));
    }
}
