//! Layer primitives on single-sample feature maps.
//!
//! Convolutions are cross-correlations with width-3 kernels and one zero of
//! padding on each side. Kernel weights are stored `[out][tap][in]`.

use crate::error::{Error, Result};

/// Feature map of `len` positions by `channels`, stored position-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor1D {
    pub data: Vec<f64>,
    pub len: usize,
    pub channels: usize,
}

impl Tensor1D {
    pub fn zeros(len: usize, channels: usize) -> Self {
        Self { data: vec![0.0; len * channels], len, channels }
    }

    pub fn from_vec(data: Vec<f64>, len: usize, channels: usize) -> Result<Self> {
        if data.len() != len * channels {
            return Err(Error::ShapeMismatch { expected: len * channels, actual: data.len() });
        }
        Ok(Self { data, len, channels })
    }

    pub fn get(&self, i: usize, c: usize) -> f64 {
        self.data[i * self.channels + c]
    }

    /// Mean over channels at every position.
    pub fn channel_mean(&self) -> Vec<f64> {
        self.data.chunks(self.channels).map(|r| r.iter().sum::<f64>() / self.channels as f64).collect()
    }
}

pub const KERNEL: usize = 3;

pub fn conv1d_forward(x: &Tensor1D, w: &[f64], b: &[f64]) -> Result<Tensor1D> {
    let (d, cin) = (x.len, x.channels);
    let cout = b.len();
    if w.len() != cout * KERNEL * cin {
        return Err(Error::ShapeMismatch { expected: cout * KERNEL * cin, actual: w.len() });
    }
    let mut y = Tensor1D::zeros(d, cout);
    for i in 0..d {
        let out = &mut y.data[i * cout..(i + 1) * cout];
        out.copy_from_slice(b);
        for j in 0..KERNEL {
            let Some(ii) = (i + j).checked_sub(1).filter(|&ii| ii < d) else { continue };
            let xr = &x.data[ii * cin..(ii + 1) * cin];
            for (o, acc) in out.iter_mut().enumerate() {
                let wr = &w[(o * KERNEL + j) * cin..(o * KERNEL + j + 1) * cin];
                *acc += dot(wr, xr);
            }
        }
    }
    Ok(y)
}

/// Accumulates weight and bias gradients into `dw`, `db`; returns the input
/// gradient when `need_dx`.
pub fn conv1d_backward(
    x: &Tensor1D,
    w: &[f64],
    dy: &Tensor1D,
    dw: &mut [f64],
    db: &mut [f64],
    need_dx: bool,
) -> Option<Tensor1D> {
    let (d, cin, cout) = (x.len, x.channels, dy.channels);
    let mut dx = need_dx.then(|| Tensor1D::zeros(d, cin));
    for i in 0..d {
        let g = &dy.data[i * cout..(i + 1) * cout];
        for (o, &go) in g.iter().enumerate() {
            db[o] += go;
        }
        for j in 0..KERNEL {
            let Some(ii) = (i + j).checked_sub(1).filter(|&ii| ii < d) else { continue };
            let xr = &x.data[ii * cin..(ii + 1) * cin];
            for (o, &go) in g.iter().enumerate() {
                if go == 0.0 {
                    continue;
                }
                let off = (o * KERNEL + j) * cin;
                for (dwc, xc) in dw[off..off + cin].iter_mut().zip(xr) {
                    *dwc += go * xc;
                }
                if let Some(dx) = dx.as_mut() {
                    let wr = &w[off..off + cin];
                    for (dxc, wc) in dx.data[ii * cin..(ii + 1) * cin].iter_mut().zip(wr) {
                        *dxc += go * wc;
                    }
                }
            }
        }
    }
    dx
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Batch statistics kept for the backward pass.
#[derive(Debug, Clone)]
pub struct BnCache {
    pub xhat: Vec<Tensor1D>,
    pub inv_std: Vec<f64>,
    pub mean: Vec<f64>,
    /// biased batch variance
    pub var: Vec<f64>,
}

/// Training-mode batch normalization over batch and position, per channel.
pub fn batchnorm_forward_train(z: &[Tensor1D], gamma: &[f64], beta: &[f64], eps: f64) -> Result<(Vec<Tensor1D>, BnCache)> {
    if z.len() < 2 {
        return Err(Error::invalid("batch normalization in training mode needs a batch of at least 2"));
    }
    let k = gamma.len();
    let n = (z.len() * z[0].len) as f64;
    let mut mean = vec![0.0; k];
    for t in z {
        for row in t.data.chunks(k) {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; k];
    for t in z {
        for row in t.data.chunks(k) {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
    }
    var.iter_mut().for_each(|s| *s /= n);
    let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + eps).sqrt()).collect();
    let mut xhat = Vec::with_capacity(z.len());
    let mut out = Vec::with_capacity(z.len());
    for t in z {
        let mut xh = t.clone();
        let mut y = t.clone();
        for (xr, yr) in xh.data.chunks_mut(k).zip(y.data.chunks_mut(k)) {
            for c in 0..k {
                xr[c] = (xr[c] - mean[c]) * inv_std[c];
                yr[c] = gamma[c] * xr[c] + beta[c];
            }
        }
        xhat.push(xh);
        out.push(y);
    }
    Ok((out, BnCache { xhat, inv_std, mean, var }))
}

pub fn batchnorm_forward_infer(z: &Tensor1D, gamma: &[f64], beta: &[f64], mean: &[f64], var: &[f64], eps: f64) -> Tensor1D {
    let k = gamma.len();
    let mut y = z.clone();
    for row in y.data.chunks_mut(k) {
        for c in 0..k {
            row[c] = gamma[c] * (row[c] - mean[c]) / (var[c] + eps).sqrt() + beta[c];
        }
    }
    y
}

/// Returns input gradients and accumulates `dgamma`, `dbeta`.
pub fn batchnorm_backward(
    dy: &[Tensor1D],
    cache: &BnCache,
    gamma: &[f64],
    dgamma: &mut [f64],
    dbeta: &mut [f64],
) -> Vec<Tensor1D> {
    let k = gamma.len();
    let n = (dy.len() * dy[0].len) as f64;
    let mut sum_dy = vec![0.0; k];
    let mut sum_dy_xhat = vec![0.0; k];
    for (g, xh) in dy.iter().zip(&cache.xhat) {
        for (gr, xr) in g.data.chunks(k).zip(xh.data.chunks(k)) {
            for c in 0..k {
                sum_dy[c] += gr[c];
                sum_dy_xhat[c] += gr[c] * xr[c];
            }
        }
    }
    for c in 0..k {
        dgamma[c] += sum_dy_xhat[c];
        dbeta[c] += sum_dy[c];
    }
    dy.iter()
        .zip(&cache.xhat)
        .map(|(g, xh)| {
            let mut dz = g.clone();
            for (dr, xr) in dz.data.chunks_mut(k).zip(xh.data.chunks(k)) {
                for c in 0..k {
                    dr[c] = gamma[c] * cache.inv_std[c] / n * (n * dr[c] - sum_dy[c] - xr[c] * sum_dy_xhat[c]);
                }
            }
            dz
        })
        .collect()
}

pub fn relu_inplace(x: &mut Tensor1D) {
    x.data.iter_mut().for_each(|v| *v = v.max(0.0));
}

/// Zeroes gradient entries where the ReLU output was not positive.
pub fn relu_backward_inplace(dy: &mut Tensor1D, y: &Tensor1D) {
    for (g, v) in dy.data.iter_mut().zip(&y.data) {
        if *v <= 0.0 {
            *g = 0.0;
        }
    }
}

/// Width-2 max pooling; a trailing odd position is dropped. Returns the
/// pooled map and the source position of every output (earlier index on ties).
pub fn maxpool_forward(x: &Tensor1D) -> (Tensor1D, Vec<usize>) {
    let (d, k) = (x.len / 2, x.channels);
    let mut y = Tensor1D::zeros(d, k);
    let mut arg = vec![0; d * k];
    for i in 0..d {
        for c in 0..k {
            let (a, b) = (x.get(2 * i, c), x.get(2 * i + 1, c));
            let (v, src) = if b > a { (b, 2 * i + 1) } else { (a, 2 * i) };
            y.data[i * k + c] = v;
            arg[i * k + c] = src;
        }
    }
    (y, arg)
}

pub fn maxpool_backward(dy: &Tensor1D, arg: &[usize], input_len: usize) -> Tensor1D {
    let k = dy.channels;
    let mut dx = Tensor1D::zeros(input_len, k);
    for (idx, &g) in dy.data.iter().enumerate() {
        dx.data[arg[idx] * k + idx % k] += g;
    }
    dx
}

/// `y = W x + b` with `W` stored `[out][in]`.
pub fn dense_forward(x: &[f64], w: &[f64], b: &[f64]) -> Vec<f64> {
    let n_in = x.len();
    b.iter().enumerate().map(|(o, &bo)| bo + dot(&w[o * n_in..(o + 1) * n_in], x)).collect()
}

pub fn dense_backward(x: &[f64], w: &[f64], dy: &[f64], dw: &mut [f64], db: &mut [f64]) -> Vec<f64> {
    let n_in = x.len();
    let mut dx = vec![0.0; n_in];
    for (o, &g) in dy.iter().enumerate() {
        db[o] += g;
        let row = o * n_in..(o + 1) * n_in;
        for ((dwi, xi), (dxi, wi)) in dw[row.clone()].iter_mut().zip(x).zip(dx.iter_mut().zip(&w[row])) {
            *dwi += g * xi;
            *dxi += g * wi;
        }
    }
    dx
}
