//! Least-squares polynomial fits by Householder QR.

use crate::data::TimeTrace;
use crate::error::{Error, Result};

/// Solves `min |A c - b|` for a column-major `m x n` matrix `a` (`m >= n`).
pub fn lstsq_qr(mut a: Vec<f64>, m: usize, n: usize, b: &[f64]) -> Result<Vec<f64>> {
    if m < n || a.len() != m * n || b.len() != m {
        return Err(Error::RankDeficient(format!("{m} equations for {n} unknowns")));
    }
    let mut rhs = b.to_vec();
    let mut scale: f64 = 0.0;
    for k in 0..n {
        let col = &mut a[k * m..(k + 1) * m];
        let norm = col[k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        scale = scale.max(norm);
        if norm == 0.0 {
            return Err(Error::RankDeficient(format!("column {k} is zero")));
        }
        let alpha = if col[k] > 0.0 { -norm } else { norm };
        // v = x - alpha e_k, stored in place of the column
        col[k] -= alpha;
        let vnorm2: f64 = col[k..].iter().map(|v| v * v).sum();
        let v: Vec<f64> = col[k..].to_vec();
        col[k] = alpha;
        for c in col[k + 1..].iter_mut() {
            *c = 0.0;
        }
        for j in k + 1..n {
            let cj = &mut a[j * m..(j + 1) * m];
            let dot: f64 = v.iter().zip(&cj[k..]).map(|(p, q)| p * q).sum();
            let f = 2.0 * dot / vnorm2;
            for (q, p) in cj[k..].iter_mut().zip(&v) {
                *q -= f * p;
            }
        }
        let dot: f64 = v.iter().zip(&rhs[k..]).map(|(p, q)| p * q).sum();
        let f = 2.0 * dot / vnorm2;
        for (q, p) in rhs[k..].iter_mut().zip(&v) {
            *q -= f * p;
        }
    }
    let mut c = vec![0.0; n];
    for k in (0..n).rev() {
        let rkk = a[k * m + k];
        if rkk.abs() <= 1e-13 * scale {
            return Err(Error::RankDeficient(format!("|R[{k},{k}]| = {rkk:e}")));
        }
        let mut s = rhs[k];
        for j in k + 1..n {
            s -= a[j * m + k] * c[j];
        }
        c[k] = s / rkk;
    }
    Ok(c)
}

/// Coefficients `c_0..c_n` of `sum c_k u^k` fitted to `(u, y)`.
pub fn fit_polynomial(u: &[f64], y: &[f64], n: usize) -> Result<Vec<f64>> {
    let m = u.len();
    if m < n + 1 {
        return Err(Error::RankDeficient(format!("{m} samples cannot determine degree {n}")));
    }
    let mut a = vec![0.0; m * (n + 1)];
    for (i, &ui) in u.iter().enumerate() {
        let mut p = 1.0;
        for k in 0..=n {
            a[k * m + i] = p;
            p *= ui;
        }
    }
    lstsq_qr(a, m, n + 1, y)
}

/// Maps `[t_a, t_b]` onto `[-1, 1]`.
pub fn local_axis(t: f64, t_a: f64, t_b: f64) -> f64 {
    2.0 * (t - t_a) / (t_b - t_a) - 1.0
}

/// Fits the samples of `trace` with time in `[t_a, t_b]` on the window-local
/// axis `[-1, 1]`.
pub fn fit_window_polynomial(trace: &TimeTrace, window: (f64, f64), n: usize) -> Result<Vec<f64>> {
    let (u, y) = window_samples(trace, window)?;
    fit_polynomial(&u, &y, n)
}

pub(crate) fn window_samples(trace: &TimeTrace, (t_a, t_b): (f64, f64)) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(t_b > t_a) {
        return Err(Error::invalid(format!("empty window ({t_a}, {t_b})")));
    }
    let first = ((t_a - trace.t0) / trace.dt - 1e-9).ceil().max(0.0) as usize;
    let last = ((t_b - trace.t0) / trace.dt + 1e-9).floor();
    if last < 0.0 {
        return Ok((Vec::new(), Vec::new()));
    }
    let last = (last as usize).min(trace.len().saturating_sub(1));
    let mut u = Vec::new();
    let mut y = Vec::new();
    for i in first..=last {
        u.push(local_axis(trace.time(i), t_a, t_b));
        y.push(trace.samples[i] as f64);
    }
    Ok((u, y))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_quadratic() {
        let u: Vec<f64> = (0..40).map(|i| -1.0 + 2.0 * i as f64 / 39.0).collect();
        let y: Vec<f64> = u.iter().map(|v| 0.5 - 1.25 * v + 3.0 * v * v).collect();
        let c = fit_polynomial(&u, &y, 2).unwrap();
        for (a, b) in c.iter().zip([0.5, -1.25, 3.0]) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn degree_zero_is_mean() {
        let trace = TimeTrace::new(vec![1.0, 2.0, 4.0, 8.0, 16.0], 0.5, 0.0).unwrap();
        let c = fit_window_polynomial(&trace, (0.5, 1.5), 0).unwrap();
        assert!((c[0] - 14.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn window_edges_are_inclusive() {
        let trace = TimeTrace::new(vec![0.0; 100], 0.05, 1.0).unwrap();
        let (u, _) = window_samples(&trace, (2.0, 3.0)).unwrap();
        assert_eq!(u.len(), 21);
        assert!((u[0] + 1.0).abs() < 1e-12 && (u[20] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn too_few_samples_or_duplicates() {
        assert!(matches!(fit_polynomial(&[0.0, 1.0], &[1.0, 2.0], 2), Err(Error::RankDeficient(_))));
        assert!(matches!(fit_polynomial(&[0.5, 0.5, 0.5], &[1.0, 2.0, 3.0], 1), Err(Error::RankDeficient(_))));
    }
}
