use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::distributions::{Distribution, Uniform};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::EvalMetrics;
use super::text::{normalize_text, Feature, TextMaps, TextSample};
use super::{Label, TriageError};

pub const MODEL_FORMAT: &str = "scamlens-mlp/1";

/// How raw title/description text becomes tokens; stored with the model so
/// inference matches training.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextPipeline {
    pub feature: Feature,
    pub maps: TextMaps,
}

/// Fully connected layer; `weights[i * outputs + j]` connects input i to
/// output j.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    fn init(inputs: usize, outputs: usize, rng: &mut ChaCha8Rng) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        let dist = Uniform::new_inclusive(-limit, limit);
        Dense {
            inputs,
            outputs,
            weights: (0..inputs * outputs).map(|_| dist.sample(rng)).collect(),
            bias: vec![0.0; outputs],
        }
    }

    fn zeros_like(&self) -> Self {
        Dense {
            inputs: self.inputs,
            outputs: self.outputs,
            weights: vec![0.0; self.weights.len()],
            bias: vec![0.0; self.bias.len()],
        }
    }

    fn forward_sparse(&self, x: &[(usize, f64)]) -> Vec<f64> {
        let mut out = self.bias.clone();
        for &(i, v) in x {
            let row = &self.weights[i * self.outputs..(i + 1) * self.outputs];
            for (o, w) in out.iter_mut().zip(row) {
                *o += v * w;
            }
        }
        out
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut out = self.bias.clone();
        for (i, &v) in x.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let row = &self.weights[i * self.outputs..(i + 1) * self.outputs];
            for (o, w) in out.iter_mut().zip(row) {
                *o += v * w;
            }
        }
        out
    }

    /// Input gradient for output gradient `d`.
    fn backward_input(&self, d: &[f64]) -> Vec<f64> {
        (0..self.inputs)
            .map(|i| {
                let row = &self.weights[i * self.outputs..(i + 1) * self.outputs];
                row.iter().zip(d).map(|(w, g)| w * g).sum()
            })
            .collect()
    }
}

fn relu(z: &[f64]) -> Vec<f64> {
    z.iter().map(|&v| v.max(0.0)).collect()
}

/// Mean-pooled bag of tokens → two ReLU hidden layers → scam/normal logits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierModel {
    pub format: String,
    pub vocabulary: BTreeMap<String, usize>,
    /// Input, hidden and output layers, in order.
    pub layers: Vec<Dense>,
    pub training_seed: u64,
    pub pipeline: TextPipeline,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prediction {
    pub label: Label,
    /// Probability of the scam class.
    pub score: f64,
}

struct Activations {
    z1: Vec<f64>,
    h1: Vec<f64>,
    z2: Vec<f64>,
    h2: Vec<f64>,
    probs: [f64; 2],
}

fn softmax(logits: &[f64]) -> [f64; 2] {
    let m = logits[0].max(logits[1]);
    let e0 = (logits[0] - m).exp();
    let e1 = (logits[1] - m).exp();
    [e0 / (e0 + e1), e1 / (e0 + e1)]
}

// output index 1 is the scam class
fn target(label: Label) -> usize {
    match label {
        Label::Normal => 0,
        Label::Scam => 1,
    }
}

impl ClassifierModel {
    /// Sparse mean-pooled features; unknown tokens are ignored.
    pub fn features(&self, tokens: &[String]) -> Vec<(usize, f64)> {
        let known: Vec<usize> = tokens.iter().filter_map(|t| self.vocabulary.get(t).copied()).collect();
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for i in &known {
            *counts.entry(*i).or_default() += 1;
        }
        let n = known.len() as f64;
        counts.into_iter().map(|(i, c)| (i, c as f64 / n)).collect()
    }

    fn activations(&self, x: &[(usize, f64)]) -> Activations {
        let z1 = self.layers[0].forward_sparse(x);
        let h1 = relu(&z1);
        let z2 = self.layers[1].forward(&h1);
        let h2 = relu(&z2);
        let logits = self.layers[2].forward(&h2);
        Activations {
            z1,
            h1,
            z2,
            h2,
            probs: softmax(&logits),
        }
    }

    pub fn predict_tokens(&self, tokens: &[String]) -> Prediction {
        let score = self.activations(&self.features(tokens)).probs[1];
        Prediction {
            label: if score > 0.5 { Label::Scam } else { Label::Normal },
            score,
        }
    }

    /// Adds this sample's loss gradient into `grads`.
    fn accumulate(&self, x: &[(usize, f64)], label: Label, grads: &mut [Dense]) {
        let a = self.activations(x);
        let mut d3 = a.probs.to_vec();
        d3[target(label)] -= 1.0;

        let out = &mut grads[2];
        for (i, h) in a.h2.iter().enumerate() {
            for (j, d) in d3.iter().enumerate() {
                out.weights[i * out.outputs + j] += h * d;
            }
        }
        out.bias.iter_mut().zip(&d3).for_each(|(b, d)| *b += d);

        let d2: Vec<f64> = self.layers[2]
            .backward_input(&d3)
            .into_iter()
            .zip(&a.z2)
            .map(|(g, &z)| if z > 0.0 { g } else { 0.0 })
            .collect();
        let hid = &mut grads[1];
        for (i, h) in a.h1.iter().enumerate() {
            if *h == 0.0 {
                continue;
            }
            for (j, d) in d2.iter().enumerate() {
                hid.weights[i * hid.outputs + j] += h * d;
            }
        }
        hid.bias.iter_mut().zip(&d2).for_each(|(b, d)| *b += d);

        let d1: Vec<f64> = self.layers[1]
            .backward_input(&d2)
            .into_iter()
            .zip(&a.z1)
            .map(|(g, &z)| if z > 0.0 { g } else { 0.0 })
            .collect();
        let inp = &mut grads[0];
        for &(i, v) in x {
            for (j, d) in d1.iter().enumerate() {
                inp.weights[i * inp.outputs + j] += v * d;
            }
        }
        inp.bias.iter_mut().zip(&d1).for_each(|(b, d)| *b += d);
    }

    fn validate(&self) -> Result<(), TriageError> {
        let bad = |m: String| Err(TriageError::Model(m));
        if self.format != MODEL_FORMAT {
            return bad(format!("unsupported format `{}`", self.format));
        }
        if self.layers.len() != 3 {
            return bad(format!("expected 3 layers, found {}", self.layers.len()));
        }
        let v = self.vocabulary.len();
        let mut seen = vec![false; v];
        for &i in self.vocabulary.values() {
            if i >= v || std::mem::replace(&mut seen[i], true) {
                return bad(format!("vocabulary index {i} is out of range or repeated"));
            }
        }
        let mut width = v;
        for (k, l) in self.layers.iter().enumerate() {
            if l.inputs != width || l.weights.len() != l.inputs * l.outputs || l.bias.len() != l.outputs {
                return bad(format!("layer {k} has inconsistent dimensions"));
            }
            if l.weights.iter().chain(&l.bias).any(|w| !w.is_finite()) {
                return bad(format!("layer {k} has non-finite weights"));
            }
            width = l.outputs;
        }
        if width != 2 {
            return bad(format!("output layer has {width} units, expected 2"));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, TriageError> {
        let model: ClassifierModel =
            serde_json::from_str(text).map_err(|e| TriageError::Model(e.to_string()))?;
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<(), TriageError> {
        fs::write(path, self.to_json()).map_err(|source| TriageError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, TriageError> {
        let text = fs::read_to_string(path).map_err(|source| TriageError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }
}

/// Scores one video with the model's own preprocessing.
pub fn classify(model: &ClassifierModel, title: &str, description: &str) -> Prediction {
    let text = model.pipeline.feature.select(title, description);
    model.predict_tokens(&normalize_text(&text, &model.pipeline.maps))
}

/// Confusion and metrics over labeled samples; unlabeled ones are skipped.
pub fn evaluate(model: &ClassifierModel, test: &[TextSample]) -> EvalMetrics {
    let pairs: Vec<(Label, Label)> = test
        .par_iter()
        .filter_map(|s| s.label.map(|truth| (truth, model.predict_tokens(&s.tokens).label)))
        .collect();
    EvalMetrics::from_pairs(pairs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    pub folds: usize,
    pub epochs: usize,
    pub seed: u64,
    pub hidden: (usize, usize),
    pub learning_rate: f64,
    pub batch_size: usize,
    pub pipeline: TextPipeline,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            folds: 5,
            epochs: 100,
            seed: 0,
            hidden: (32, 16),
            learning_rate: 0.01,
            batch_size: 32,
            pipeline: TextPipeline::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainOutput {
    pub model: ClassifierModel,
    /// Validation metrics, one per fold rotation.
    pub fold_reports: Vec<EvalMetrics>,
    /// Index of the fold whose model was kept (best validation F1).
    pub selected_fold: usize,
}

struct Adam {
    m: Vec<Dense>,
    v: Vec<Dense>,
    t: i32,
    lr: f64,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(layers: &[Dense], lr: f64) -> Self {
        Adam {
            m: layers.iter().map(Dense::zeros_like).collect(),
            v: layers.iter().map(Dense::zeros_like).collect(),
            t: 0,
            lr,
        }
    }

    fn step(&mut self, layers: &mut [Dense], grads: &[Dense], scale: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        let update = |p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]| {
            for k in 0..p.len() {
                let g = g[k] * scale;
                m[k] = Self::B1 * m[k] + (1.0 - Self::B1) * g;
                v[k] = Self::B2 * v[k] + (1.0 - Self::B2) * g * g;
                p[k] -= self.lr * (m[k] / c1) / ((v[k] / c2).sqrt() + Self::EPS);
            }
        };
        for (((layer, g), m), v) in layers.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            update(&mut layer.weights, &g.weights, &mut m.weights, &mut v.weights);
            update(&mut layer.bias, &g.bias, &mut m.bias, &mut v.bias);
        }
    }
}

fn fold_seed(seed: u64, fold: usize) -> u64 {
    seed ^ (fold as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Repeats minority-class samples until both classes have the same count.
fn balance<'a>(train: Vec<&'a TextSample>, rng: &mut ChaCha8Rng) -> Vec<&'a TextSample> {
    let (scam, normal): (Vec<_>, Vec<_>) = train.into_iter().partition(|s| s.label == Some(Label::Scam));
    let (major, mut minor) = if scam.len() >= normal.len() { (scam, normal) } else { (normal, scam) };
    let reps = major.len() / minor.len();
    let extra = major.len() % minor.len();
    let mut out = major;
    for _ in 0..reps {
        out.extend(minor.iter().copied());
    }
    minor.shuffle(rng);
    out.extend(minor.into_iter().take(extra));
    out
}

fn train_fold(
    train: Vec<&TextSample>,
    valid: &[&TextSample],
    opts: &TrainOptions,
    seed: u64,
) -> (ClassifierModel, EvalMetrics) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let train = balance(train, &mut rng);

    let mut words: Vec<&String> = train.iter().flat_map(|s| &s.tokens).collect();
    words.sort();
    words.dedup();
    let vocabulary: BTreeMap<String, usize> =
        words.into_iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();

    let (h1, h2) = opts.hidden;
    let mut model = ClassifierModel {
        format: MODEL_FORMAT.to_string(),
        layers: vec![
            Dense::init(vocabulary.len(), h1, &mut rng),
            Dense::init(h1, h2, &mut rng),
            Dense::init(h2, 2, &mut rng),
        ],
        vocabulary,
        training_seed: opts.seed,
        pipeline: opts.pipeline.clone(),
    };
    let inputs: Vec<(Vec<(usize, f64)>, Label)> = train
        .iter()
        .map(|s| (model.features(&s.tokens), s.label.expect("labels checked")))
        .collect();

    let mut adam = Adam::new(&model.layers, opts.learning_rate);
    let mut grads: Vec<Dense> = model.layers.iter().map(Dense::zeros_like).collect();
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    for _ in 0..opts.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(opts.batch_size.max(1)) {
            for g in &mut grads {
                g.weights.fill(0.0);
                g.bias.fill(0.0);
            }
            for &i in batch {
                model.accumulate(&inputs[i].0, inputs[i].1, &mut grads);
            }
            adam.step(&mut model.layers, &grads, 1.0 / batch.len() as f64);
        }
    }

    let metrics = EvalMetrics::from_pairs(
        valid
            .iter()
            .map(|s| (s.label.expect("labels checked"), model.predict_tokens(&s.tokens).label)),
    );
    (model, metrics)
}

/// k-fold cross-validation: folds are stratified by label, each training
/// split is balanced by duplicating minority samples, and the fold model
/// with the best validation F1 is returned (ties go to the earlier fold).
/// Folds train in parallel but each is seeded independently, so results
/// are identical for a given seed and corpus.
pub fn train_classifier(samples: &[TextSample], opts: &TrainOptions) -> Result<TrainOutput, TriageError> {
    let k = opts.folds;
    if k < 2 {
        return Err(TriageError::InsufficientData(format!(
            "cross-validation needs at least 2 folds, got {k}"
        )));
    }
    if let Some(s) = samples.iter().find(|s| s.label.is_none()) {
        return Err(TriageError::InsufficientData(format!("sample `{}` has no label", s.source_video)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut fold_of = vec![0usize; samples.len()];
    for label in [Label::Scam, Label::Normal] {
        let mut idx: Vec<usize> = (0..samples.len()).filter(|&i| samples[i].label == Some(label)).collect();
        if idx.len() < k {
            return Err(TriageError::InsufficientData(format!(
                "{} {label} samples for {k} folds",
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        for (pos, i) in idx.into_iter().enumerate() {
            fold_of[i] = pos % k;
        }
    }

    let results: Vec<(ClassifierModel, EvalMetrics)> = (0..k)
        .into_par_iter()
        .map(|fold| {
            let (valid, train): (Vec<(usize, &TextSample)>, Vec<(usize, &TextSample)>) =
                samples.iter().enumerate().partition(|(i, _)| fold_of[*i] == fold);
            let valid: Vec<&TextSample> = valid.into_iter().map(|(_, s)| s).collect();
            let train: Vec<&TextSample> = train.into_iter().map(|(_, s)| s).collect();
            train_fold(train, &valid, opts, fold_seed(opts.seed, fold))
        })
        .collect();

    let mut selected = 0;
    for (i, (_, m)) in results.iter().enumerate() {
        if m.f1 > results[selected].1.f1 {
            selected = i;
        }
    }
    let fold_reports = results.iter().map(|(_, m)| m.clone()).collect();
    let model = results.into_iter().nth(selected).expect("k >= 2").0;
    Ok(TrainOutput {
        model,
        fold_reports,
        selected_fold: selected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(words: &str, label: Label) -> TextSample {
        TextSample {
            tokens: words.split(' ').map(str::to_string).collect(),
            label: Some(label),
            source_video: words.to_string(),
        }
    }

    #[test]
    fn balance_equalizes_classes() {
        let s: Vec<TextSample> = (0..7)
            .map(|i| sample(&format!("n{i} a b"), Label::Normal))
            .chain((0..3).map(|i| sample(&format!("s{i} a b"), Label::Scam)))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let out = balance(s.iter().collect(), &mut rng);
        let scams = out.iter().filter(|x| x.label == Some(Label::Scam)).count();
        assert_eq!((scams, out.len() - scams), (7, 7));
    }

    #[test]
    fn inconsistent_dimensions_fail_validation() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut m = ClassifierModel {
            format: MODEL_FORMAT.into(),
            vocabulary: [("a".to_string(), 0)].into_iter().collect(),
            layers: vec![Dense::init(1, 4, &mut rng), Dense::init(4, 3, &mut rng), Dense::init(3, 2, &mut rng)],
            training_seed: 0,
            pipeline: TextPipeline::default(),
        };
        assert!(m.validate().is_ok());
        m.layers[1].bias.pop();
        assert!(m.validate().is_err());
    }
}
