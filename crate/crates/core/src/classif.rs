//! Document classification baselines: TF-IDF vectors with a kernel SVM
//! (SMO solver, one-vs-rest), an MLP over mean-pooled word vectors, and a
//! repeated random-split harness scored with weighted F1.

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{allocate, LabeledDocument};
use crate::embed::EmbeddingProvider;
use crate::error::{Error, Result};
use crate::metrics::{mean_std, t_confidence_interval, weighted_f1, ConfidenceInterval};
use crate::neural::{Adam, AdamConfig, HeadSpec, Mlp, MlpSpec, Mode, Target};

/// Sparse vector with strictly increasing indices.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVec {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseVec {
    pub fn dot(&self, other: &SparseVec) -> f64 {
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        while i < self.indices.len() && j < other.indices.len() {
            match self.indices[i].cmp(&other.indices[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += self.values[i] * other.values[j];
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn from_dense(v: &[f64]) -> SparseVec {
        let (indices, values) = v
            .iter()
            .enumerate()
            .filter(|(_, x)| **x != 0.0)
            .map(|(i, x)| (i, *x))
            .unzip();
        SparseVec { indices, values }
    }
}

pub fn tokenize(text: &str) -> impl Iterator<Item = &str> {
    text.split_whitespace()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TfidfModel {
    pub vocabulary: BTreeMap<String, usize>,
    pub idf: Vec<f64>,
    pub n_docs: usize,
}

/// TF-IDF vectorizer keeping the `k` tokens of highest document frequency
/// (ties in lexicographic order). Tokens present in every document carry no
/// weight and are not retained.
#[derive(Clone, Debug)]
pub struct Tfidf {
    pub k: usize,
    model: Option<TfidfModel>,
}

impl Tfidf {
    pub fn new(k: usize) -> Self {
        Tfidf { k, model: None }
    }

    pub fn model(&self) -> Option<&TfidfModel> {
        self.model.as_ref()
    }

    pub fn fit<S: AsRef<str>>(&mut self, docs: &[S]) -> Result<&TfidfModel> {
        if docs.is_empty() {
            return Err(Error::InvalidArgument(
                "cannot fit TF-IDF on an empty corpus".into(),
            ));
        }
        let mut df: HashMap<&str, usize> = HashMap::new();
        for d in docs {
            let mut seen: Vec<&str> = tokenize(d.as_ref()).collect();
            seen.sort_unstable();
            seen.dedup();
            for t in seen {
                *df.entry(t).or_default() += 1;
            }
        }
        let n = docs.len();
        let mut ranked: Vec<(&str, usize)> = df.into_iter().filter(|&(_, c)| c < n).collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        ranked.truncate(self.k);
        ranked.sort_by(|a, b| a.0.cmp(b.0));
        let vocabulary = ranked
            .iter()
            .enumerate()
            .map(|(i, (t, _))| (t.to_string(), i))
            .collect();
        let idf = ranked
            .iter()
            .map(|&(_, c)| (n as f64 / c as f64).ln())
            .collect();
        self.model = Some(TfidfModel {
            vocabulary,
            idf,
            n_docs: n,
        });
        Ok(self.model.as_ref().expect("just fitted"))
    }

    /// L2-normalized count·idf vector; unknown tokens are ignored.
    pub fn transform(&self, doc: &str) -> Result<SparseVec> {
        let model = self
            .model
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("TF-IDF transform before fit".into()))?;
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for t in tokenize(doc) {
            if let Some(&i) = model.vocabulary.get(t) {
                *counts.entry(i).or_default() += 1.0;
            }
        }
        let (indices, mut values): (Vec<usize>, Vec<f64>) = counts
            .into_iter()
            .map(|(i, c)| (i, c * model.idf[i]))
            .unzip();
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            values.iter_mut().for_each(|v| *v /= norm);
        }
        Ok(SparseVec { indices, values })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    /// K(x, z) = -||x - z||, conditionally positive definite.
    Triangular,
    Linear,
}

impl Kernel {
    fn eval(self, x: &SparseVec, xn: f64, z: &SparseVec, zn: f64) -> f64 {
        match self {
            Kernel::Linear => x.dot(z),
            Kernel::Triangular => -(xn * xn + zn * zn - 2.0 * x.dot(z)).max(0.0).sqrt(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Kernel::Triangular => "triangular: K(x,z) = -||x-z||",
            Kernel::Linear => "linear: K(x,z) = <x,z>",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    pub kernel: Kernel,
    pub c: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            kernel: Kernel::Triangular,
            c: 1.0,
            tol: 1e-3,
            max_iter: 100_000,
        }
    }
}

/// Binary machine: f(x) = sum_i coef_i K(sv_i, x) - rho, coef_i = alpha_i y_i.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub kernel: Kernel,
    pub support: Vec<SparseVec>,
    pub coef: Vec<f64>,
    pub rho: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl SvmModel {
    pub fn decision(&self, x: &SparseVec) -> f64 {
        let xn = x.norm();
        self.support
            .iter()
            .zip(&self.coef)
            .map(|(s, c)| c * self.kernel.eval(s, s.norm(), x, xn))
            .sum::<f64>()
            - self.rho
    }
}

/// Lazily computed rows of Q_ij = y_i y_j K(x_i, x_j).
struct QCache<'a> {
    x: &'a [SparseVec],
    norms: Vec<f64>,
    y: &'a [f64],
    kernel: Kernel,
    rows: HashMap<usize, Vec<f64>>,
    budget: usize,
}

impl QCache<'_> {
    fn row(&mut self, i: usize) -> &[f64] {
        if !self.rows.contains_key(&i) {
            if self.rows.len() * self.x.len() >= self.budget {
                self.rows.clear();
            }
            let (xi, ni, yi) = (&self.x[i], self.norms[i], self.y[i]);
            let row = (0..self.x.len())
                .map(|j| yi * self.y[j] * self.kernel.eval(xi, ni, &self.x[j], self.norms[j]))
                .collect();
            self.rows.insert(i, row);
        }
        &self.rows[&i]
    }
}

const TAU: f64 = 1e-12;

/// SMO with second-order working-set selection on the dual
/// min 1/2 a'Qa - e'a, 0 <= a <= C, y'a = 0. Labels are +1/-1.
pub fn svm_train(x: &[SparseVec], y: &[f64], config: &SvmConfig) -> Result<(SvmModel, Vec<f64>)> {
    if x.len() != y.len() {
        return Err(Error::Dimension {
            expected: x.len(),
            got: y.len(),
        });
    }
    if y.iter().any(|&v| v != 1.0 && v != -1.0) {
        return Err(Error::InvalidArgument("SVM labels must be +1 or -1".into()));
    }
    if !(y.contains(&1.0) && y.contains(&-1.0)) {
        return Err(Error::InvalidArgument(
            "SVM training needs examples of both classes".into(),
        ));
    }
    let n = x.len();
    let c = config.c;
    let mut q = QCache {
        x,
        norms: x.iter().map(SparseVec::norm).collect(),
        y,
        kernel: config.kernel,
        rows: HashMap::new(),
        budget: 64 << 20,
    };
    let diag: Vec<f64> = (0..n)
        .map(|i| config.kernel.eval(&x[i], q.norms[i], &x[i], q.norms[i]))
        .collect();
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let up = |a: f64, yt: f64| (yt > 0.0 && a < c) || (yt < 0.0 && a > 0.0);
    let low = |a: f64, yt: f64| (yt > 0.0 && a > 0.0) || (yt < 0.0 && a < c);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iter {
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..n {
            if up(alpha[t], y[t]) && -y[t] * grad[t] > gmax {
                gmax = -y[t] * grad[t];
                i = t;
            }
        }
        if i == usize::MAX {
            converged = true;
            break;
        }
        let qi = q.row(i).to_vec();
        let mut gmin = f64::INFINITY;
        let mut j = usize::MAX;
        let mut best = f64::INFINITY;
        for t in 0..n {
            if !low(alpha[t], y[t]) {
                continue;
            }
            let v = -y[t] * grad[t];
            gmin = gmin.min(v);
            let b = gmax - v;
            if b > 0.0 {
                // Q_it = y_i y_t K_it, so K_it = y_i y_t Q_it
                let mut a = diag[i] + diag[t] - 2.0 * y[i] * y[t] * qi[t];
                if a <= 0.0 {
                    a = TAU;
                }
                if -(b * b) / a < best {
                    best = -(b * b) / a;
                    j = t;
                }
            }
        }
        if gmax - gmin < config.tol || j == usize::MAX {
            converged = true;
            break;
        }
        iterations += 1;
        let qj = q.row(j).to_vec();
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let mut quad = diag[i] + diag[j] - 2.0 * y[i] * y[j] * qi[j];
        if quad <= 0.0 {
            quad = TAU;
        }
        if y[i] != y[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += qi[t] * di + qj[t] * dj;
        }
    }
    // rho from free variables, else the midpoint of the feasible interval
    let (mut ub, mut lb, mut sum_free, mut n_free) = (f64::INFINITY, f64::NEG_INFINITY, 0.0, 0);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    let rho = if n_free > 0 {
        sum_free / n_free as f64
    } else {
        (ub + lb) / 2.0
    };
    let (support, coef) = (0..n)
        .filter(|&t| alpha[t] > 0.0)
        .map(|t| (x[t].clone(), alpha[t] * y[t]))
        .unzip();
    Ok((
        SvmModel {
            kernel: config.kernel,
            support,
            coef,
            rho,
            iterations,
            converged,
        },
        alpha,
    ))
}

/// One binary machine per class; ties go to the lowest class index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OneVsRest {
    pub machines: Vec<SvmModel>,
}

impl OneVsRest {
    pub fn train(
        x: &[SparseVec],
        labels: &[usize],
        n_classes: usize,
        config: &SvmConfig,
    ) -> Result<Self> {
        let present: std::collections::BTreeSet<usize> = labels.iter().copied().collect();
        if present.len() < 2 {
            return Err(Error::InvalidArgument(
                "classification needs at least two classes".into(),
            ));
        }
        let machines = (0..n_classes)
            .map(|k| {
                let y: Vec<f64> = labels
                    .iter()
                    .map(|&l| if l == k { 1.0 } else { -1.0 })
                    .collect();
                if present.contains(&k) {
                    svm_train(x, &y, config).map(|(m, _)| m)
                } else {
                    // a class absent from training never wins
                    Ok(SvmModel {
                        kernel: config.kernel,
                        support: Vec::new(),
                        coef: Vec::new(),
                        rho: f64::INFINITY,
                        iterations: 0,
                        converged: true,
                    })
                }
            })
            .collect::<Result<_>>()?;
        Ok(OneVsRest { machines })
    }

    pub fn predict(&self, x: &SparseVec) -> usize {
        argmax_first(
            &self
                .machines
                .iter()
                .map(|m| m.decision(x))
                .collect::<Vec<_>>(),
        )
    }
}

/// Index of the maximum; the first one on ties.
pub fn argmax_first(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// A trainable document classifier over class indices.
pub trait TextClassifier: Send {
    fn fit(&mut self, docs: &[&LabeledDocument], labels: &[usize], n_classes: usize) -> Result<()>;
    fn predict(&self, docs: &[&LabeledDocument]) -> Result<Vec<usize>>;
}

pub struct SvmClassifier {
    pub vocab: usize,
    pub config: SvmConfig,
    tfidf: Tfidf,
    model: Option<OneVsRest>,
}

impl SvmClassifier {
    pub fn new(vocab: usize, config: SvmConfig) -> Self {
        SvmClassifier {
            vocab,
            config,
            tfidf: Tfidf::new(vocab),
            model: None,
        }
    }
}

impl TextClassifier for SvmClassifier {
    fn fit(&mut self, docs: &[&LabeledDocument], labels: &[usize], n_classes: usize) -> Result<()> {
        let texts: Vec<&str> = docs.iter().map(|d| d.text.as_str()).collect();
        self.tfidf.fit(&texts)?;
        let x = texts
            .iter()
            .map(|t| self.tfidf.transform(t))
            .collect::<Result<Vec<_>>>()?;
        self.model = Some(OneVsRest::train(&x, labels, n_classes, &self.config)?);
        Ok(())
    }

    fn predict(&self, docs: &[&LabeledDocument]) -> Result<Vec<usize>> {
        let model = self
            .model
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("predict before fit".into()))?;
        docs.iter()
            .map(|d| Ok(model.predict(&self.tfidf.transform(&d.text)?)))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpClassifierConfig {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub lr: f64,
    pub batch: usize,
    pub seed: u64,
}

impl Default for MlpClassifierConfig {
    fn default() -> Self {
        MlpClassifierConfig {
            hidden: vec![64],
            epochs: 30,
            lr: 1e-2,
            batch: 16,
            seed: 1,
        }
    }
}

/// One-head MLP over the mean of the provider's word vectors.
pub struct MlpClassifier {
    pub provider: EmbeddingProvider,
    pub config: MlpClassifierConfig,
    mlp: Option<Mlp>,
}

impl MlpClassifier {
    pub fn new(provider: EmbeddingProvider, config: MlpClassifierConfig) -> Self {
        MlpClassifier {
            provider,
            config,
            mlp: None,
        }
    }

    fn pooled(&self, doc: &LabeledDocument) -> Vec<f64> {
        let dim = self.provider.dim();
        let words: Vec<&str> = tokenize(&doc.text).collect();
        if words.is_empty() {
            return vec![0.0; dim];
        }
        let mut acc = vec![0.0; dim];
        for w in &words {
            acc.iter_mut()
                .zip(self.provider.word_vector(w))
                .for_each(|(a, v)| *a += v);
        }
        acc.iter_mut().for_each(|a| *a /= words.len() as f64);
        acc
    }
}

impl TextClassifier for MlpClassifier {
    fn fit(&mut self, docs: &[&LabeledDocument], labels: &[usize], n_classes: usize) -> Result<()> {
        if docs.is_empty() {
            return Err(Error::InvalidArgument("empty training set".into()));
        }
        let x: Vec<Vec<f64>> = docs.iter().map(|d| self.pooled(d)).collect();
        let spec = MlpSpec::new(
            self.provider.dim(),
            vec![HeadSpec::new("category", n_classes)],
        )
        .with_hidden(&self.config.hidden)
        .with_dropout(0.0, 0.0);
        let mut mlp = Mlp::new(spec, self.config.seed)?;
        let mut adam = Adam::new(AdamConfig::with_lr(self.config.lr), &mlp.params);
        let mut grads = mlp.zero_grads();
        let mut order: Vec<usize> = (0..x.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        for _ in 0..self.config.epochs {
            order.shuffle(&mut rng);
            for chunk in order.chunks(self.config.batch.max(1)) {
                for &k in chunk {
                    let pass = mlp.forward(&x[k], Mode::Eval)?;
                    mlp.backward(&pass, 0, &Target::Class(labels[k]), None, &mut grads)?;
                }
                let scale = 1.0 / chunk.len() as f64;
                grads
                    .iter_mut()
                    .for_each(|g| g.data.iter_mut().for_each(|v| *v *= scale));
                adam.update(&mut mlp.params, &grads)?;
                grads.iter_mut().for_each(|g| g.fill_zero());
            }
        }
        self.mlp = Some(mlp);
        Ok(())
    }

    fn predict(&self, docs: &[&LabeledDocument]) -> Result<Vec<usize>> {
        let mlp = self
            .mlp
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("predict before fit".into()))?;
        docs.iter()
            .map(|d| {
                Ok(argmax_first(
                    &mlp.forward(&self.pooled(d), Mode::Eval)?.logits[0],
                ))
            })
            .collect()
    }
}

/// Stratified random sample of disjoint train and test index sets with
/// (approximately, per-class largest remainder) the requested sizes.
pub fn stratified_sample(
    categories: &[usize],
    train_size: usize,
    test_size: usize,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let n = categories.len();
    if train_size == 0 || test_size == 0 || train_size + test_size > n {
        return Err(Error::InvalidArgument(format!(
            "cannot draw {train_size} training and {test_size} test documents from {n}"
        )));
    }
    let ratios = [
        train_size as f64 / n as f64,
        test_size as f64 / n as f64,
        (n - train_size - test_size) as f64 / n as f64,
    ];
    let mut strata: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &c) in categories.iter().enumerate() {
        strata.entry(c).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for ids in strata.values_mut() {
        ids.shuffle(&mut rng);
        let counts = allocate(ids.len(), &ratios);
        train.extend_from_slice(&ids[..counts[0]]);
        test.extend_from_slice(&ids[counts[0]..counts[0] + counts[1]]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

#[derive(Clone, Debug, Serialize)]
pub struct SplitResult {
    pub split: usize,
    pub seed: u64,
    pub train_size: usize,
    pub test_size: usize,
    pub weighted_f1: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SplitsReport {
    pub categories: Vec<String>,
    pub splits: Vec<SplitResult>,
    pub mean: f64,
    pub std: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci95: Option<ConfidenceInterval>,
}

/// Repeats stratified sampling, fitting and weighted-F1 scoring over
/// `n_splits` seeds (`seed`, `seed + 1`, ...).
pub fn run_splits(
    docs: &[LabeledDocument],
    n_splits: usize,
    train_size: usize,
    test_size: usize,
    seed: u64,
    factory: &(dyn Fn() -> Box<dyn TextClassifier> + Sync),
) -> Result<SplitsReport> {
    if n_splits == 0 {
        return Err(Error::InvalidArgument(
            "at least one split is required".into(),
        ));
    }
    let mut categories: Vec<String> = docs.iter().map(|d| d.category.clone()).collect();
    categories.sort_unstable();
    categories.dedup();
    let index: BTreeMap<&str, usize> = categories
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();
    let labels: Vec<usize> = docs.iter().map(|d| index[d.category.as_str()]).collect();
    let splits = (0..n_splits)
        .into_par_iter()
        .map(|s| {
            let split_seed = seed.wrapping_add(s as u64);
            let (train, test) = stratified_sample(&labels, train_size, test_size, split_seed)?;
            let mut model = factory();
            let train_docs: Vec<&LabeledDocument> = train.iter().map(|&i| &docs[i]).collect();
            let train_labels: Vec<usize> = train.iter().map(|&i| labels[i]).collect();
            model.fit(&train_docs, &train_labels, categories.len())?;
            let test_docs: Vec<&LabeledDocument> = test.iter().map(|&i| &docs[i]).collect();
            let gold: Vec<usize> = test.iter().map(|&i| labels[i]).collect();
            let pred = model.predict(&test_docs)?;
            Ok(SplitResult {
                split: s + 1,
                seed: split_seed,
                train_size: train.len(),
                test_size: test.len(),
                weighted_f1: weighted_f1(&gold, &pred)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let scores: Vec<f64> = splits.iter().map(|s| s.weighted_f1).collect();
    let (mean, std) = mean_std(&scores);
    let ci95 = t_confidence_interval(&scores, 0.95).ok();
    Ok(SplitsReport {
        categories,
        splits,
        mean,
        std,
        ci95,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(pairs: &[(usize, f64)]) -> SparseVec {
        SparseVec {
            indices: pairs.iter().map(|p| p.0).collect(),
            values: pairs.iter().map(|p| p.1).collect(),
        }
    }

    #[test]
    fn idf_of_half_present_token() {
        let mut t = Tfidf::new(10);
        let m = t.fit(&["a b", "a c"]).unwrap();
        assert!(!m.vocabulary.contains_key("a"));
        let b = m.vocabulary["b"];
        assert!((m.idf[b] - 2f64.ln()).abs() < 1e-12);
        let v = t.transform("a b b").unwrap();
        assert_eq!(v.indices, vec![b]);
        assert!((v.norm() - 1.0).abs() < 1e-12);
        assert_eq!(t.transform("").unwrap(), SparseVec::default());
        assert_eq!(t.transform("a a").unwrap().norm(), 0.0);
    }

    #[test]
    fn transform_before_fit() {
        assert!(Tfidf::new(3).transform("x").is_err());
        assert!(Tfidf::new(3).fit::<&str>(&[]).is_err());
    }

    #[test]
    fn vocabulary_top_k_ties_lexicographic() {
        let mut t = Tfidf::new(2);
        let m = t.fit(&["z y x", "z y", "x w", "q"]).unwrap();
        // df: z 2, y 2, x 2, w 1 -> keep the two smallest of {x, y, z}
        let kept: Vec<&str> = m.vocabulary.keys().map(String::as_str).collect();
        assert_eq!(kept, vec!["x", "y"]);
    }

    #[test]
    fn two_points() {
        let x = vec![sv(&[(0, 1.0)]), sv(&[(1, 1.0)])];
        let (m, alpha) = svm_train(&x, &[1.0, -1.0], &SvmConfig::default()).unwrap();
        assert!(m.decision(&x[0]) > 0.0 && m.decision(&x[1]) < 0.0);
        assert!(alpha.iter().all(|&a| a > 0.0));
    }

    #[test]
    fn xor_with_triangular_kernel() {
        let x = vec![
            sv(&[]),
            sv(&[(0, 1.0), (1, 1.0)]),
            sv(&[(0, 1.0)]),
            sv(&[(1, 1.0)]),
        ];
        let y = [1.0, 1.0, -1.0, -1.0];
        let (m, alpha) = svm_train(&x, &y, &SvmConfig::default()).unwrap();
        for (xi, yi) in x.iter().zip(y) {
            assert!(m.decision(xi) * yi > 0.0);
        }
        let s: f64 = alpha.iter().zip(y).map(|(a, y)| a * y).sum();
        assert!(s.abs() < 1e-6);
    }

    #[test]
    fn single_class_rejected() {
        assert!(svm_train(&[sv(&[])], &[1.0], &SvmConfig::default()).is_err());
        assert!(OneVsRest::train(
            &[sv(&[]), sv(&[(0, 1.0)])],
            &[0, 0],
            2,
            &SvmConfig::default()
        )
        .is_err());
    }

    #[test]
    fn ovr_tie_lowest_class() {
        let m = SvmModel {
            kernel: Kernel::Linear,
            support: vec![],
            coef: vec![],
            rho: 0.0,
            iterations: 0,
            converged: true,
        };
        let ovr = OneVsRest {
            machines: vec![m.clone(), m.clone(), m],
        };
        assert_eq!(ovr.predict(&sv(&[])), 0);
    }

    #[test]
    fn sample_sizes() {
        let cats: Vec<usize> = (0..100).map(|i| i % 2).collect();
        let (tr, te) = stratified_sample(&cats, 80, 10, 3).unwrap();
        assert_eq!((tr.len(), te.len()), (80, 10));
        assert!(tr.iter().all(|i| !te.contains(i)));
        assert!(stratified_sample(&cats, 90, 20, 3).is_err());
    }

    struct Oracle(BTreeMap<String, usize>);

    impl TextClassifier for Oracle {
        fn fit(&mut self, docs: &[&LabeledDocument], labels: &[usize], _: usize) -> Result<()> {
            for (d, l) in docs.iter().zip(labels) {
                self.0.insert(d.text.clone(), *l);
            }
            Ok(())
        }
        fn predict(&self, docs: &[&LabeledDocument]) -> Result<Vec<usize>> {
            // text encodes the category index
            Ok(docs.iter().map(|d| d.text.parse().unwrap()).collect())
        }
    }

    #[test]
    fn gold_predictor_scores_one() {
        let docs: Vec<LabeledDocument> = (0..40)
            .map(|i| LabeledDocument {
                id: format!("d{i}"),
                text: (i % 3).to_string(),
                category: format!("c{}", i % 3),
                channel: None,
                date: None,
            })
            .collect();
        let report =
            run_splits(&docs, 4, 20, 10, 1, &|| Box::new(Oracle(BTreeMap::new()))).unwrap();
        assert_eq!((report.mean, report.std), (1.0, 0.0));
    }
}
