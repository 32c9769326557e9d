//! The regression network: six conv blocks and a dense head.
//!
//! Every block is conv(3) -> batch norm -> ReLU -> max-pool(2). The pooled
//! map of the last block is flattened position-major, the standardized
//! humidity is appended and a ReLU MLP maps the result to one output.
//!
//! All trainable parameters live in one flat vector. Order, per block:
//! conv weights `[out][tap][in]`, conv bias, BN gamma, BN beta; then per
//! dense layer: weights `[out][in]`, bias.

use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::layers::*;
use crate::data::{Dataset, TimeTrace};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnnArch {
    pub input_len: usize,
    /// output channels of each conv block
    pub channels: Vec<usize>,
    /// hidden widths of the dense head
    pub hidden: Vec<usize>,
    pub bn_eps: f64,
    pub bn_momentum: f64,
}

impl Default for CnnArch {
    fn default() -> Self {
        Self {
            input_len: 760,
            channels: vec![4, 8, 16, 32, 64, 64],
            hidden: vec![64, 16],
            bn_eps: 1e-5,
            bn_momentum: 0.1,
        }
    }
}

impl CnnArch {
    /// Map lengths: the input, then after each pool.
    pub fn shape_chain(&self) -> Vec<usize> {
        let mut v = vec![self.input_len];
        for _ in &self.channels {
            v.push(v.last().unwrap() / 2);
        }
        v
    }

    pub fn flatten_len(&self) -> usize {
        self.shape_chain().last().unwrap() * self.channels.last().copied().unwrap_or(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels.is_empty() || self.channels.contains(&0) || self.hidden.contains(&0) {
            return Err(Error::invalid("channels must be non-empty and positive"));
        }
        if *self.shape_chain().last().unwrap() == 0 {
            return Err(Error::invalid(format!(
                "input length {} is too short for {} pooling blocks",
                self.input_len,
                self.channels.len()
            )));
        }
        if !(self.bn_eps > 0.0) || !(0.0..=1.0).contains(&self.bn_momentum) {
            return Err(Error::invalid("bn_eps must be positive and bn_momentum in [0, 1]"));
        }
        Ok(())
    }

    fn layout(&self) -> Layout {
        let mut off = 0;
        let mut take = |n: usize| {
            let r = off..off + n;
            off += n;
            r
        };
        let mut blocks = Vec::new();
        let mut cin = 1;
        for &c in &self.channels {
            blocks.push(BlockSlots { w: take(c * KERNEL * cin), b: take(c), gamma: take(c), beta: take(c) });
            cin = c;
        }
        let feature = blocks.last().map_or(0, |b: &BlockSlots| b.beta.end);
        let mut dense = Vec::new();
        let mut n_in = self.flatten_len() + 1;
        for &h in self.hidden.iter().chain(std::iter::once(&1)) {
            dense.push((take(h * n_in), take(h)));
            n_in = h;
        }
        let total = dense.last().map_or(feature, |(_, b)| b.end);
        Layout { blocks, dense, feature, total }
    }
}

#[derive(Debug, Clone)]
struct BlockSlots {
    w: Range<usize>,
    b: Range<usize>,
    gamma: Range<usize>,
    beta: Range<usize>,
}

#[derive(Debug, Clone)]
struct Layout {
    blocks: Vec<BlockSlots>,
    dense: Vec<(Range<usize>, Range<usize>)>,
    feature: usize,
    total: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamCount {
    pub total: usize,
    pub feature: usize,
    pub regression: usize,
}

/// Input scaling: traces divided by `input_scale`, humidity standardized
/// with training-set statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub input_scale: f64,
    pub mu_a: f64,
    pub sigma_a: f64,
    /// set when the training humidity had zero spread and `sigma_a` fell back to 1
    pub sigma_defaulted: bool,
}

impl Default for Normalization {
    fn default() -> Self {
        Self { input_scale: 4.0, mu_a: 0.0, sigma_a: 1.0, sigma_defaulted: false }
    }
}

impl Normalization {
    /// Population mean and standard deviation of the training humidity.
    pub fn from_training(a: &[f64]) -> Self {
        if a.is_empty() {
            return Self { sigma_defaulted: true, ..Self::default() };
        }
        let n = a.len() as f64;
        let mu = a.iter().sum::<f64>() / n;
        let sd = (a.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / n).sqrt();
        let ok = sd > 0.0 && sd.is_finite();
        Self { input_scale: 4.0, mu_a: mu, sigma_a: if ok { sd } else { 1.0 }, sigma_defaulted: !ok }
    }

    pub fn trace(&self, samples: &[f32]) -> Vec<f64> {
        samples.iter().map(|&v| v as f64 / self.input_scale).collect()
    }

    pub fn humidity(&self, a: f64) -> f64 {
        (a - self.mu_a) / self.sigma_a
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CnnModel {
    pub arch: CnnArch,
    pub params: Vec<f64>,
    pub running_mean: Vec<Vec<f64>>,
    pub running_var: Vec<Vec<f64>>,
    pub norm: Normalization,
    pub seed: u64,
}

struct BlockCache {
    input: Vec<Tensor1D>,
    bn: BnCache,
    act: Vec<Tensor1D>,
    arg: Vec<Vec<usize>>,
}

/// Intermediate values of a training-mode forward pass.
pub struct ForwardCache {
    blocks: Vec<BlockCache>,
    /// inputs to each dense layer, per sample
    dense_in: Vec<Vec<Vec<f64>>>,
    pub outputs: Vec<f64>,
}

impl ForwardCache {
    /// Per-block biased batch means and variances.
    pub fn batch_stats(&self) -> Vec<(&[f64], &[f64])> {
        self.blocks.iter().map(|b| (b.bn.mean.as_slice(), b.bn.var.as_slice())).collect()
    }

    pub fn batch_positions(&self, block: usize) -> usize {
        self.blocks[block].input.len() * self.blocks[block].input[0].len
    }
}

impl CnnModel {
    /// Fan-in scaled uniform weights (limit `sqrt(6 / fan_in)`, last layer
    /// `sqrt(3 / fan_in)`), zero biases, gamma 1, beta 0. Parameter tensor
    /// `k` in layout order draws from PRNG substream `k`.
    pub fn new(arch: CnnArch, seed: u64) -> Result<Self> {
        arch.validate()?;
        let layout = arch.layout();
        let mut params = vec![0.0; layout.total];
        let root = SplitMix64::new(seed);
        let mut fill = |r: &Range<usize>, limit: f64, id: u64| {
            let mut rng = root.substream(id);
            for p in &mut params[r.clone()] {
                *p = rng.uniform(-limit, limit);
            }
        };
        let mut cin = 1;
        for (k, (b, &c)) in layout.blocks.iter().zip(&arch.channels).enumerate() {
            fill(&b.w, (6.0 / (cin * KERNEL) as f64).sqrt(), 4 * k as u64);
            cin = c;
        }
        let mut n_in = arch.flatten_len() + 1;
        let n_dense = layout.dense.len();
        for (k, (w, _)) in layout.dense.iter().enumerate() {
            let gain = if k + 1 == n_dense { 3.0 } else { 6.0 };
            fill(w, (gain / n_in as f64).sqrt(), 1000 + 2 * k as u64);
            n_in = w.len() / n_in;
        }
        for b in &layout.blocks {
            params[b.gamma.clone()].iter_mut().for_each(|g| *g = 1.0);
        }
        let running_mean = arch.channels.iter().map(|&c| vec![0.0; c]).collect();
        let running_var = arch.channels.iter().map(|&c| vec![1.0; c]).collect();
        Ok(Self { arch, params, running_mean, running_var, norm: Normalization::default(), seed })
    }

    pub fn count_parameters(&self) -> ParamCount {
        let l = self.arch.layout();
        ParamCount { total: l.total, feature: l.feature, regression: l.total - l.feature }
    }

    /// Name and length of every parameter tensor in storage order.
    pub fn param_tensors(&self) -> Vec<(String, usize)> {
        let l = self.arch.layout();
        let mut out = Vec::new();
        for (k, b) in l.blocks.iter().enumerate() {
            out.push((format!("block{}.conv.weight", k + 1), b.w.len()));
            out.push((format!("block{}.conv.bias", k + 1), b.b.len()));
            out.push((format!("block{}.bn.gamma", k + 1), b.gamma.len()));
            out.push((format!("block{}.bn.beta", k + 1), b.beta.len()));
        }
        for (k, (w, b)) in l.dense.iter().enumerate() {
            out.push((format!("dense{}.weight", k + 1), w.len()));
            out.push((format!("dense{}.bias", k + 1), b.len()));
        }
        out
    }

    /// Rounds every stored value to `f32`, the precision of the weight file.
    pub fn round_to_f32(&mut self) {
        let r = |v: &mut f64| *v = *v as f32 as f64;
        self.params.iter_mut().for_each(r);
        self.running_mean.iter_mut().flatten().for_each(r);
        self.running_var.iter_mut().flatten().for_each(r);
    }

    /// Sets the output-layer bias.
    pub fn set_output_bias(&mut self, value: f64) {
        let l = self.arch.layout();
        let (_, b) = l.dense.last().unwrap();
        self.params[b.start] = value;
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if n != self.arch.input_len {
            return Err(Error::ShapeMismatch { expected: self.arch.input_len, actual: n });
        }
        Ok(())
    }

    /// Inference-mode pass on a normalized input; returns the prediction and
    /// the post-ReLU, pre-pool map of every block.
    fn forward_infer(&self, x: Vec<f64>, a_norm: f64) -> (f64, Vec<Tensor1D>) {
        let l = self.arch.layout();
        let p = &self.params;
        let mut h = Tensor1D { len: x.len(), channels: 1, data: x };
        let mut maps = Vec::with_capacity(l.blocks.len());
        for (k, b) in l.blocks.iter().enumerate() {
            let z = conv1d_forward(&h, &p[b.w.clone()], &p[b.b.clone()]).expect("layout shapes");
            let mut y = batchnorm_forward_infer(
                &z,
                &p[b.gamma.clone()],
                &p[b.beta.clone()],
                &self.running_mean[k],
                &self.running_var[k],
                self.arch.bn_eps,
            );
            relu_inplace(&mut y);
            h = maxpool_forward(&y).0;
            maps.push(y);
        }
        let mut v = h.data;
        v.push(a_norm);
        let n_dense = l.dense.len();
        for (k, (w, b)) in l.dense.iter().enumerate() {
            v = dense_forward(&v, &p[w.clone()], &p[b.clone()]);
            if k + 1 < n_dense {
                v.iter_mut().for_each(|x| *x = x.max(0.0));
            }
        }
        (v[0], maps)
    }

    pub fn predict(&self, trace: &TimeTrace, a: f64) -> Result<f64> {
        self.check_len(trace.len())?;
        let (y, _) = self.forward_infer(self.norm.trace(&trace.samples), self.norm.humidity(a));
        if !y.is_finite() {
            return Err(Error::NonFinite("CNN prediction".into()));
        }
        Ok(y)
    }

    pub fn predict_dataset(&self, ds: &Dataset) -> Result<Vec<f64>> {
        ds.records().par_iter().map(|r| self.predict(&r.trace, r.a)).collect()
    }

    /// Channel-averaged post-ReLU activation of every block, taken before
    /// pooling, so block `l` has length `input_len / 2^(l-1)`.
    pub fn layer_activations(&self, trace: &TimeTrace, a: f64) -> Result<Vec<Vec<f64>>> {
        self.check_len(trace.len())?;
        let (_, maps) = self.forward_infer(self.norm.trace(&trace.samples), self.norm.humidity(a));
        Ok(maps.iter().map(Tensor1D::channel_mean).collect())
    }

    /// Training-mode forward pass on normalized inputs.
    pub fn forward_train(&self, xs: &[Vec<f64>], a_norm: &[f64]) -> Result<ForwardCache> {
        if xs.len() != a_norm.len() {
            return Err(Error::ShapeMismatch { expected: xs.len(), actual: a_norm.len() });
        }
        for x in xs {
            self.check_len(x.len())?;
        }
        let l = self.arch.layout();
        let p = &self.params;
        let mut h: Vec<Tensor1D> =
            xs.iter().map(|x| Tensor1D { len: x.len(), channels: 1, data: x.clone() }).collect();
        let mut blocks = Vec::with_capacity(l.blocks.len());
        for b in &l.blocks {
            let z: Vec<Tensor1D> = h
                .par_iter()
                .map(|t| conv1d_forward(t, &p[b.w.clone()], &p[b.b.clone()]))
                .collect::<Result<_>>()?;
            let (mut y, bn) = batchnorm_forward_train(&z, &p[b.gamma.clone()], &p[b.beta.clone()], self.arch.bn_eps)?;
            y.iter_mut().for_each(relu_inplace);
            let (pooled, arg): (Vec<Tensor1D>, Vec<Vec<usize>>) = y.par_iter().map(maxpool_forward).unzip();
            blocks.push(BlockCache { input: std::mem::replace(&mut h, pooled), bn, act: y, arg });
        }
        let n_dense = l.dense.len();
        let mut dense_in = vec![Vec::with_capacity(xs.len()); n_dense];
        let mut outputs = Vec::with_capacity(xs.len());
        for (t, &a) in h.into_iter().zip(a_norm) {
            let mut v = t.data;
            v.push(a);
            for (k, (w, b)) in l.dense.iter().enumerate() {
                let mut out = dense_forward(&v, &p[w.clone()], &p[b.clone()]);
                if k + 1 < n_dense {
                    out.iter_mut().for_each(|x| *x = x.max(0.0));
                }
                dense_in[k].push(std::mem::replace(&mut v, out));
            }
            outputs.push(v[0]);
        }
        Ok(ForwardCache { blocks, dense_in, outputs })
    }

    /// Gradient of the loss with respect to every trainable parameter, given
    /// `d loss / d output` per sample.
    pub fn backward(&self, cache: &ForwardCache, d_out: &[f64]) -> Vec<f64> {
        let l = self.arch.layout();
        let p = &self.params;
        let mut grad = vec![0.0; l.total];
        let n_dense = l.dense.len();
        // Dense head, per sample, accumulated in sample order.
        let mut d_flat = Vec::with_capacity(d_out.len());
        for (s, &g) in d_out.iter().enumerate() {
            let mut dv = vec![g];
            for k in (0..n_dense).rev() {
                let (w, b) = &l.dense[k];
                let x = &cache.dense_in[k][s];
                let (gw, gb) = split_two(&mut grad, w.clone(), b.clone());
                let mut dx = dense_backward(x, &p[w.clone()], &dv, gw, gb);
                if k > 0 {
                    // x is the ReLU output of the previous layer
                    for (d, xv) in dx.iter_mut().zip(x) {
                        if *xv <= 0.0 {
                            *d = 0.0;
                        }
                    }
                }
                dv = dx;
            }
            dv.pop();
            d_flat.push(dv);
        }
        let last = cache.blocks.last().unwrap();
        let (len, ch) = (last.act[0].len / 2, last.act[0].channels);
        let mut dh: Vec<Tensor1D> = d_flat.into_iter().map(|d| Tensor1D { data: d, len, channels: ch }).collect();
        for (k, b) in l.blocks.iter().enumerate().rev() {
            let bc = &cache.blocks[k];
            let dy: Vec<Tensor1D> = dh
                .par_iter()
                .zip(&bc.arg)
                .zip(&bc.act)
                .map(|((d, arg), act)| {
                    let mut g = maxpool_backward(d, arg, act.len);
                    relu_backward_inplace(&mut g, act);
                    g
                })
                .collect();
            let (gg, gb) = split_two(&mut grad, b.gamma.clone(), b.beta.clone());
            let dz = batchnorm_backward(&dy, &bc.bn, &p[b.gamma.clone()], gg, gb);
            let need_dx = k > 0;
            let w = &p[b.w.clone()];
            let per: Vec<(Vec<f64>, Vec<f64>, Option<Tensor1D>)> = bc
                .input
                .par_iter()
                .zip(&dz)
                .map(|(x, d)| {
                    let mut dw = vec![0.0; b.w.len()];
                    let mut db = vec![0.0; b.b.len()];
                    let dx = conv1d_backward(x, w, d, &mut dw, &mut db, need_dx);
                    (dw, db, dx)
                })
                .collect();
            let mut next = Vec::with_capacity(per.len());
            for (dw, db, dx) in per {
                add_into(&mut grad[b.w.clone()], &dw);
                add_into(&mut grad[b.b.clone()], &db);
                if let Some(dx) = dx {
                    next.push(dx);
                }
            }
            dh = next;
        }
        grad
    }

    /// Mean squared error and its gradient on a batch of raw traces.
    pub fn loss_and_gradient(&self, traces: &[&[f32]], a: &[f64], g: &[f64]) -> Result<(f64, Vec<f64>, ForwardCache)> {
        if traces.len() != g.len() {
            return Err(Error::ShapeMismatch { expected: traces.len(), actual: g.len() });
        }
        let xs: Vec<Vec<f64>> = traces.iter().map(|t| self.norm.trace(t)).collect();
        let an: Vec<f64> = a.iter().map(|&v| self.norm.humidity(v)).collect();
        let cache = self.forward_train(&xs, &an)?;
        let n = g.len() as f64;
        let loss = cache.outputs.iter().zip(g).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / n;
        let d_out: Vec<f64> = cache.outputs.iter().zip(g).map(|(p, t)| 2.0 * (p - t) / n).collect();
        let grad = self.backward(&cache, &d_out);
        Ok((loss, grad, cache))
    }

    /// Exponential moving average of the batch statistics; the variance uses
    /// the unbiased batch estimate.
    pub fn update_running_stats(&mut self, cache: &ForwardCache) {
        let m = self.arch.bn_momentum;
        for (k, (mean, var)) in cache.batch_stats().into_iter().enumerate() {
            let n = cache.batch_positions(k) as f64;
            let unbias = if n > 1.0 { n / (n - 1.0) } else { 1.0 };
            for c in 0..mean.len() {
                self.running_mean[k][c] = (1.0 - m) * self.running_mean[k][c] + m * mean[c];
                self.running_var[k][c] = (1.0 - m) * self.running_var[k][c] + m * var[c] * unbias;
            }
        }
    }
}

fn split_two(v: &mut [f64], a: Range<usize>, b: Range<usize>) -> (&mut [f64], &mut [f64]) {
    debug_assert!(a.end <= b.start);
    let (lo, hi) = v.split_at_mut(b.start);
    (&mut lo[a], &mut hi[..b.len()])
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_chain_and_counts() {
        let m = CnnModel::new(CnnArch::default(), 1).unwrap();
        assert_eq!(m.arch.shape_chain(), vec![760, 380, 190, 95, 47, 23, 11]);
        assert_eq!(m.arch.flatten_len(), 704);
        let c = m.count_parameters();
        assert_eq!(c.regression, 46_241);
        assert_eq!(c.feature, 21_024);
        assert_eq!(c.total, 67_265);
    }

    #[test]
    fn single_dense_layer_count() {
        // input 2 -> no conv blocks is not allowed, so count a bare head directly
        let arch = CnnArch { input_len: 2, channels: vec![1], hidden: vec![], ..CnnArch::default() };
        let m = CnnModel::new(arch, 0).unwrap();
        // flatten 1 + humidity = 2 inputs -> 1 output
        assert_eq!(m.count_parameters().regression, 3);
    }

    #[test]
    fn zero_weights_give_zero_output() {
        let mut m = CnnModel::new(CnnArch::default(), 1).unwrap();
        m.params.iter_mut().for_each(|p| *p = 0.0);
        let t = TimeTrace::from_f64(&vec![0.3; 760], 0.05, 0.0).unwrap();
        assert_eq!(m.predict(&t, 9.0).unwrap(), 0.0);
    }

    #[test]
    fn zero_input_zero_activations() {
        let m = CnnModel::new(CnnArch::default(), 3).unwrap();
        let t = TimeTrace::from_f64(&vec![0.0; 760], 0.05, 0.0).unwrap();
        let acts = m.layer_activations(&t, 9.0).unwrap();
        let lens: Vec<usize> = acts.iter().map(Vec::len).collect();
        assert_eq!(lens, vec![760, 380, 190, 95, 47, 23]);
        assert!(acts.iter().all(|a| a.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn normalization_contract() {
        let n = Normalization::from_training(&[8.0, 10.0, 12.0]);
        assert_eq!(n.humidity(10.0), 0.0);
        assert_eq!(n.trace(&[4.0, 4.0]), vec![1.0, 1.0]);
        let flat = Normalization::from_training(&[9.0, 9.0]);
        assert!(flat.sigma_defaulted && flat.sigma_a == 1.0);
        let test_a = [9.5, 11.0, 8.2];
        let a1: Vec<f64> = test_a.iter().map(|&a| n.humidity(a)).collect();
        let a2: Vec<f64> = [8.2, 9.5, 11.0].iter().map(|&a| n.humidity(a)).collect();
        assert_eq!(a1[0], a2[1]);
        assert_eq!(a1[2], a2[0]);
    }

    #[test]
    fn gradient_matches_finite_differences_on_small_net() {
        let arch = CnnArch { input_len: 32, channels: vec![2, 3], hidden: vec![4, 3], ..CnnArch::default() };
        let mut m = CnnModel::new(arch, 7).unwrap();
        m.norm = Normalization { input_scale: 1.0, mu_a: 9.0, sigma_a: 1.5, sigma_defaulted: false };
        let mut rng = SplitMix64::new(8);
        let traces: Vec<Vec<f32>> = (0..4).map(|_| (0..32).map(|_| rng.uniform(-1.0, 1.0) as f32).collect()).collect();
        let refs: Vec<&[f32]> = traces.iter().map(|t| t.as_slice()).collect();
        let a = [8.0, 9.5, 10.0, 11.0];
        let g = [1.0, -0.5, 2.0, 0.3];
        let (_, grad, _) = m.loss_and_gradient(&refs, &a, &g).unwrap();
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for k in 0..m.params.len() {
            let orig = m.params[k];
            m.params[k] = orig + h;
            let lp = m.loss_and_gradient(&refs, &a, &g).unwrap().0;
            m.params[k] = orig - h;
            let lm = m.loss_and_gradient(&refs, &a, &g).unwrap().0;
            m.params[k] = orig;
            let num = (lp - lm) / (2.0 * h);
            let err = (num - grad[k]).abs() / num.abs().max(grad[k].abs()).max(1e-6);
            worst = worst.max(err);
        }
        assert!(worst < 1e-4, "{worst}");
    }
}
