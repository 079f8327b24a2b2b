//! Feed-forward classifier: input dropout, ReLU hidden layers with dropout,
//! and one or more linear softmax decision heads sharing the hidden stack.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A named, row-major matrix of parameters (vectors have one row).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(name: impl Into<String>, rows: usize, cols: usize) -> Self {
        Tensor {
            name: name.into(),
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Uniform initialization in `[-bound, bound]`.
    pub fn uniform(
        name: impl Into<String>,
        rows: usize,
        cols: usize,
        bound: f64,
        rng: &mut impl Rng,
    ) -> Self {
        let mut t = Tensor::zeros(name, rows, cols);
        for x in &mut t.data {
            *x = rng.gen_range(-bound..=bound);
        }
        t
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn fill_zero(&mut self) {
        self.data.iter_mut().for_each(|x| *x = 0.0);
    }

    pub fn zeros_like(&self) -> Tensor {
        Tensor::zeros(self.name.clone(), self.rows, self.cols)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeadSpec {
    pub name: String,
    pub arity: usize,
}

impl HeadSpec {
    pub fn new(name: impl Into<String>, arity: usize) -> Self {
        HeadSpec {
            name: name.into(),
            arity,
        }
    }
}

pub const DESK_HIDDEN: [usize; 2] = [320, 160];
pub const FULL_HIDDEN: [usize; 2] = [3200, 1600];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub input_dropout: f64,
    pub hidden_dropout: f64,
    pub heads: Vec<HeadSpec>,
}

impl MlpSpec {
    /// Desk-scale dimensions with the reference dropout rates.
    pub fn new(input_dim: usize, heads: Vec<HeadSpec>) -> Self {
        MlpSpec {
            input_dim,
            hidden: DESK_HIDDEN.to_vec(),
            input_dropout: 0.5,
            hidden_dropout: 0.4,
            heads,
        }
    }

    pub fn with_hidden(mut self, hidden: &[usize]) -> Self {
        self.hidden = hidden.to_vec();
        self
    }

    pub fn with_dropout(mut self, input: f64, hidden: f64) -> Self {
        self.input_dropout = input;
        self.hidden_dropout = hidden;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let dims_ok = self.input_dim > 0
            && self.hidden.iter().all(|&d| d > 0)
            && !self.heads.is_empty()
            && self.heads.iter().all(|h| h.arity > 0);
        if !dims_ok {
            return Err(Error::InvalidArgument(format!(
                "non-positive dimension in {self:?}"
            )));
        }
        for p in [self.input_dropout, self.hidden_dropout] {
            if !(0.0..1.0).contains(&p) {
                return Err(Error::InvalidArgument(format!(
                    "dropout rate {p} outside [0, 1)"
                )));
            }
        }
        Ok(())
    }

    pub fn head_index(&self, name: &str) -> Option<usize> {
        self.heads.iter().position(|h| h.name == name)
    }
}

/// Network parameters. Layout of `params`: for each hidden layer a weight
/// matrix (out x in) then a bias row, then the same pair for each head.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub spec: MlpSpec,
    pub params: Vec<Tensor>,
}

pub enum Mode<'a> {
    Eval,
    Train(&'a mut ChaCha8Rng),
}

/// Activations cached by a forward pass.
#[derive(Clone, Debug)]
pub struct ForwardPass {
    /// Dropout scale applied to each input coordinate (1 in eval mode).
    input_scale: Vec<f64>,
    /// Layer inputs: the dropped-out input, then each hidden output.
    layer_inputs: Vec<Vec<f64>>,
    /// Pre-activations of each hidden layer.
    pre: Vec<Vec<f64>>,
    /// Dropout scale of each hidden unit.
    hidden_scale: Vec<Vec<f64>>,
    pub logits: Vec<Vec<f64>>,
}

impl ForwardPass {
    /// Unmasked softmax of a head.
    pub fn probs(&self, head: usize) -> Vec<f64> {
        masked_softmax(&self.logits[head], None)
    }
}

/// Softmax where masked-out classes get probability exactly 0.
pub fn masked_softmax(logits: &[f64], mask: Option<&[bool]>) -> Vec<f64> {
    let allowed = |i: usize| mask.is_none_or(|m| m[i]);
    let max = logits
        .iter()
        .enumerate()
        .filter(|(i, _)| allowed(*i))
        .map(|(_, &z)| z)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits
        .iter()
        .enumerate()
        .map(|(i, &z)| if allowed(i) { (z - max).exp() } else { 0.0 })
        .collect();
    let sum: f64 = out.iter().sum();
    if sum > 0.0 {
        out.iter_mut().for_each(|p| *p /= sum);
    }
    out
}

/// Training target for one head.
#[derive(Clone, Debug, PartialEq)]
pub enum Target {
    Class(usize),
    /// A distribution over the head's classes (zero on masked classes).
    Distribution(Vec<f64>),
}

fn matvec(w: &[f64], b: &[f64], x: &[f64], out: &mut Vec<f64>) {
    let cols = x.len();
    out.clear();
    out.extend(
        w.chunks_exact(cols)
            .zip(b)
            .map(|(row, bias)| bias + row.iter().zip(x).map(|(a, c)| a * c).sum::<f64>()),
    );
}

impl Mlp {
    /// He-uniform weights for ReLU layers, Glorot-uniform for heads, zero
    /// biases.
    pub fn new(spec: MlpSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Vec::new();
        let mut fan_in = spec.input_dim;
        for (k, &h) in spec.hidden.iter().enumerate() {
            let bound = (6.0 / fan_in as f64).sqrt();
            params.push(Tensor::uniform(
                format!("hidden{k}.w"),
                h,
                fan_in,
                bound,
                &mut rng,
            ));
            params.push(Tensor::zeros(format!("hidden{k}.b"), 1, h));
            fan_in = h;
        }
        for head in &spec.heads {
            let bound = (6.0 / (fan_in + head.arity) as f64).sqrt();
            params.push(Tensor::uniform(
                format!("{}.w", head.name),
                head.arity,
                fan_in,
                bound,
                &mut rng,
            ));
            params.push(Tensor::zeros(format!("{}.b", head.name), 1, head.arity));
        }
        Ok(Mlp { spec, params })
    }

    /// All-zero parameters (useful for checking the softmax baseline).
    pub fn zeroed(spec: MlpSpec) -> Result<Self> {
        let mut m = Mlp::new(spec, 0)?;
        m.params.iter_mut().for_each(Tensor::fill_zero);
        Ok(m)
    }

    fn head_param(&self, head: usize) -> usize {
        2 * (self.spec.hidden.len() + head)
    }

    pub fn forward(&self, x: &[f64], mode: Mode<'_>) -> Result<ForwardPass> {
        if x.len() != self.spec.input_dim {
            return Err(Error::Dimension {
                expected: self.spec.input_dim,
                got: x.len(),
            });
        }
        let mut rng = match mode {
            Mode::Eval => None,
            Mode::Train(rng) => Some(rng),
        };
        let dropout_scale = |len: usize, p: f64, rng: &mut Option<&mut ChaCha8Rng>| -> Vec<f64> {
            match rng {
                Some(rng) if p > 0.0 => (0..len)
                    .map(|_| {
                        if rng.gen::<f64>() < p {
                            0.0
                        } else {
                            1.0 / (1.0 - p)
                        }
                    })
                    .collect(),
                _ => vec![1.0; len],
            }
        };
        let input_scale = dropout_scale(x.len(), self.spec.input_dropout, &mut rng);
        let mut layer_inputs = vec![x
            .iter()
            .zip(&input_scale)
            .map(|(a, s)| a * s)
            .collect::<Vec<_>>()];
        let mut pre = Vec::with_capacity(self.spec.hidden.len());
        let mut hidden_scale = Vec::with_capacity(self.spec.hidden.len());
        for k in 0..self.spec.hidden.len() {
            let (w, b) = (&self.params[2 * k], &self.params[2 * k + 1]);
            let mut z = Vec::with_capacity(w.rows);
            matvec(
                &w.data,
                &b.data,
                layer_inputs.last().expect("input layer"),
                &mut z,
            );
            let scale = dropout_scale(z.len(), self.spec.hidden_dropout, &mut rng);
            let a = z.iter().zip(&scale).map(|(v, s)| v.max(0.0) * s).collect();
            pre.push(z);
            hidden_scale.push(scale);
            layer_inputs.push(a);
        }
        let top = layer_inputs.last().expect("at least the input");
        let logits = (0..self.spec.heads.len())
            .map(|h| {
                let i = self.head_param(h);
                let mut out = Vec::new();
                matvec(
                    &self.params[i].data,
                    &self.params[i + 1].data,
                    top,
                    &mut out,
                );
                out
            })
            .collect();
        Ok(ForwardPass {
            input_scale,
            layer_inputs,
            pre,
            hidden_scale,
            logits,
        })
    }

    /// Eval-mode probabilities of one head under an optional legality mask.
    pub fn predict(&self, x: &[f64], head: usize, mask: Option<&[bool]>) -> Result<Vec<f64>> {
        let pass = self.forward(x, Mode::Eval)?;
        Ok(masked_softmax(&pass.logits[head], mask))
    }

    pub fn zero_grads(&self) -> Vec<Tensor> {
        self.params.iter().map(Tensor::zeros_like).collect()
    }

    /// Cross-entropy gradient of one head, accumulated into `grads`.
    /// Returns the loss and the gradient with respect to the network input.
    pub fn backward(
        &self,
        pass: &ForwardPass,
        head: usize,
        target: &Target,
        mask: Option<&[bool]>,
        grads: &mut [Tensor],
    ) -> Result<(f64, Vec<f64>)> {
        let arity = self
            .spec
            .heads
            .get(head)
            .map(|h| h.arity)
            .ok_or_else(|| Error::InvalidArgument(format!("no head {head}")))?;
        let probs = masked_softmax(&pass.logits[head], mask);
        let allowed = |i: usize| mask.is_none_or(|m| m[i]);
        let (loss, delta) = match target {
            Target::Class(t) => {
                if *t >= arity || !allowed(*t) {
                    return Err(Error::InvalidArgument(format!(
                        "target class {t} is masked or out of range"
                    )));
                }
                let mut d = probs.clone();
                d[*t] -= 1.0;
                (-probs[*t].ln(), d)
            }
            Target::Distribution(q) => {
                if q.len() != arity || q.iter().enumerate().any(|(i, &v)| v > 0.0 && !allowed(i)) {
                    return Err(Error::InvalidArgument(
                        "target distribution puts mass on masked classes".into(),
                    ));
                }
                let loss = q
                    .iter()
                    .zip(&probs)
                    .filter(|(q, _)| **q > 0.0)
                    .map(|(q, p)| -q * p.ln())
                    .sum();
                (
                    loss,
                    probs.iter().zip(q).map(|(p, q)| p - q).collect::<Vec<_>>(),
                )
            }
        };

        let top = pass.layer_inputs.last().expect("input");
        let hi = self.head_param(head);
        let mut upstream = vec![0.0; top.len()];
        accumulate_linear(
            &self.params[hi],
            &delta,
            top,
            &mut grads[hi..hi + 2],
            &mut upstream,
        );

        for k in (0..self.spec.hidden.len()).rev() {
            // through dropout and ReLU
            let delta: Vec<f64> = upstream
                .iter()
                .zip(&pass.hidden_scale[k])
                .zip(&pass.pre[k])
                .map(|((g, s), z)| if *z > 0.0 { g * s } else { 0.0 })
                .collect();
            let input = &pass.layer_inputs[k];
            let mut next = vec![0.0; input.len()];
            accumulate_linear(
                &self.params[2 * k],
                &delta,
                input,
                &mut grads[2 * k..2 * k + 2],
                &mut next,
            );
            upstream = next;
        }
        let input_grad = upstream
            .iter()
            .zip(&pass.input_scale)
            .map(|(g, s)| g * s)
            .collect();
        Ok((loss, input_grad))
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer(std::io::BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mlp: Mlp = serde_json::from_reader(std::io::BufReader::new(file))?;
        mlp.spec.validate()?;
        Ok(mlp)
    }
}

/// For y = W x + b with upstream gradient `delta` on y: accumulates dW, db
/// into `grads[0..2]` and writes dx into `dx`.
fn accumulate_linear(w: &Tensor, delta: &[f64], x: &[f64], grads: &mut [Tensor], dx: &mut [f64]) {
    let (gw, gb) = grads.split_at_mut(1);
    for (o, &d) in delta.iter().enumerate() {
        if d == 0.0 {
            continue;
        }
        gb[0].data[o] += d;
        let row = w.row(o);
        let grow = gw[0].row_mut(o);
        for ((g, xi), (wi, dxi)) in grow.iter_mut().zip(x).zip(row.iter().zip(dx.iter_mut())) {
            *g += d * xi;
            *dxi += d * wi;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        AdamConfig {
            lr,
            ..Default::default()
        }
    }
}

/// Adam optimizer state for a list of tensors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub config: AdamConfig,
    pub step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(config: AdamConfig, params: &[Tensor]) -> Self {
        Adam {
            config,
            step: 0,
            m: params.iter().map(|t| vec![0.0; t.data.len()]).collect(),
            v: params.iter().map(|t| vec![0.0; t.data.len()]).collect(),
        }
    }

    /// One bias-corrected update. Nothing is modified if any gradient is
    /// non-finite.
    pub fn update(&mut self, params: &mut [Tensor], grads: &[Tensor]) -> Result<()> {
        if params.len() != grads.len() || params.len() != self.m.len() {
            return Err(Error::Dimension {
                expected: self.m.len(),
                got: grads.len(),
            });
        }
        for (p, g) in params.iter().zip(grads) {
            if p.data.len() != g.data.len() {
                return Err(Error::Dimension {
                    expected: p.data.len(),
                    got: g.data.len(),
                });
            }
            if g.data.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite(g.name.clone()));
            }
        }
        self.step += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.config;
        let t = self.step as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            for (((w, &gi), mi), vi) in p
                .data
                .iter_mut()
                .zip(&g.data)
                .zip(m.iter_mut())
                .zip(v.iter_mut())
            {
                *mi = beta1 * *mi + (1.0 - beta1) * gi;
                *vi = beta2 * *vi + (1.0 - beta2) * gi * gi;
                let mhat = *mi / c1;
                let vhat = *vi / c2;
                *w -= lr * mhat / (vhat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(input: usize, hidden: &[usize], arities: &[usize]) -> MlpSpec {
        let heads = arities
            .iter()
            .enumerate()
            .map(|(i, &a)| HeadSpec {
                name: format!("h{i}"),
                arity: a,
            })
            .collect();
        MlpSpec::new(input, heads).with_hidden(hidden)
    }

    #[test]
    fn zero_network_is_uniform() {
        let m = Mlp::zeroed(spec(4, &[3], &[5, 2])).unwrap();
        let pass = m.forward(&[1.0, 2.0, 3.0, 4.0], Mode::Eval).unwrap();
        assert!(pass.probs(0).iter().all(|p| (p - 0.2).abs() < 1e-12));
        assert!(pass.probs(1).iter().all(|p| (p - 0.5).abs() < 1e-12));
    }

    #[test]
    fn dimension_mismatch() {
        let m = Mlp::new(spec(4, &[3], &[2]), 1).unwrap();
        assert!(matches!(
            m.forward(&[1.0], Mode::Eval),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn eval_is_deterministic_and_sums_to_one() {
        let m = Mlp::new(spec(6, &[8, 4], &[3]), 2).unwrap();
        let x = [0.1, -0.2, 0.3, 0.5, -1.0, 2.0];
        let a = m.predict(&x, 0, None).unwrap();
        let b = m.predict(&x, 0, None).unwrap();
        assert_eq!(a, b);
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn train_without_dropout_equals_eval() {
        let m = Mlp::new(spec(6, &[8, 4], &[3]).with_dropout(0.0, 0.0), 3).unwrap();
        let x = [0.1, -0.2, 0.3, 0.5, -1.0, 2.0];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = m.forward(&x, Mode::Train(&mut rng)).unwrap();
        let e = m.forward(&x, Mode::Eval).unwrap();
        assert_eq!(t.logits, e.logits);
    }

    #[test]
    fn masked_softmax_zeroes_illegal() {
        let p = masked_softmax(&[1.0, 5.0, 2.0], Some(&[true, false, true]));
        assert_eq!(p[1], 0.0);
        assert!((p[0] + p[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn logit_gradient_is_p_minus_one() {
        // no hidden layer: the head bias gradient equals the logit gradient
        let m = Mlp::new(spec(2, &[], &[3]), 4).unwrap();
        let pass = m.forward(&[0.3, -0.7], Mode::Eval).unwrap();
        let p = pass.probs(0);
        let mut g = m.zero_grads();
        m.backward(&pass, 0, &Target::Class(1), None, &mut g)
            .unwrap();
        assert!((g[1].data[1] - (p[1] - 1.0)).abs() < 1e-12);
        assert!((g[1].data[0] - p[0]).abs() < 1e-12);
    }

    #[test]
    fn linear_softmax_closed_form() {
        // two classes, weights W, input x: dL/dW = (p - y) x^T
        let mut m = Mlp::zeroed(spec(2, &[], &[2])).unwrap();
        m.params[0].data = vec![0.5, -1.0, 0.25, 2.0];
        m.params[1].data = vec![0.1, -0.1];
        let x = [1.0, 0.5];
        let z0: f64 = 0.5 * 1.0 - 1.0 * 0.5 + 0.1;
        let z1: f64 = 0.25 * 1.0 + 2.0 * 0.5 - 0.1;
        let p0 = z0.exp() / (z0.exp() + z1.exp());
        let p1 = 1.0 - p0;
        let pass = m.forward(&x, Mode::Eval).unwrap();
        let mut g = m.zero_grads();
        let (loss, dx) = m
            .backward(&pass, 0, &Target::Class(0), None, &mut g)
            .unwrap();
        assert!((loss + p0.ln()).abs() < 1e-12);
        let expected = [(p0 - 1.0) * 1.0, (p0 - 1.0) * 0.5, p1 * 1.0, p1 * 0.5];
        for (a, b) in g[0].data.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
        let dx0 = (p0 - 1.0) * 0.5 + p1 * 0.25;
        assert!((dx[0] - dx0).abs() < 1e-12);
    }

    #[test]
    fn masked_target_is_error() {
        let m = Mlp::new(spec(2, &[], &[3]), 4).unwrap();
        let pass = m.forward(&[0.3, -0.7], Mode::Eval).unwrap();
        let mut g = m.zero_grads();
        let mask = [true, false, true];
        assert!(m
            .backward(&pass, 0, &Target::Class(1), Some(&mask), &mut g)
            .is_err());
        let (_, _) = m
            .backward(&pass, 0, &Target::Class(2), Some(&mask), &mut g)
            .unwrap();
        // masked class receives no gradient
        assert_eq!(g[1].data[1], 0.0);
    }

    #[test]
    fn adam_zero_gradient_is_noop() {
        let mut params = vec![Tensor::uniform(
            "w",
            2,
            2,
            1.0,
            &mut ChaCha8Rng::seed_from_u64(0),
        )];
        let before = params.clone();
        let grads = vec![params[0].zeros_like()];
        let mut adam = Adam::new(AdamConfig::default(), &params);
        adam.update(&mut params, &grads).unwrap();
        assert_eq!(params, before);
        assert_eq!(adam.step, 1);
    }

    #[test]
    fn adam_minimizes_quadratic() {
        let mut params = vec![Tensor {
            name: "w".into(),
            rows: 1,
            cols: 1,
            data: vec![1.0],
        }];
        let mut adam = Adam::new(AdamConfig::with_lr(0.1), &params);
        for _ in 0..200 {
            let w = params[0].data[0];
            let grads = vec![Tensor {
                name: "w".into(),
                rows: 1,
                cols: 1,
                data: vec![2.0 * w],
            }];
            adam.update(&mut params, &grads).unwrap();
        }
        assert!(params[0].data[0].abs() < 1e-2, "w = {}", params[0].data[0]);
    }

    #[test]
    fn adam_rejects_non_finite() {
        let mut params = vec![Tensor::zeros("emb", 1, 2)];
        let mut adam = Adam::new(AdamConfig::default(), &params);
        let grads = vec![Tensor {
            name: "emb".into(),
            rows: 1,
            cols: 2,
            data: vec![0.0, f64::NAN],
        }];
        match adam.update(&mut params, &grads) {
            Err(Error::NonFinite(name)) => assert_eq!(name, "emb"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
