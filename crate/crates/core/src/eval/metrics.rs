use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Denominator offset for the relative metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    /// mg; keeps the ratio finite when g_b is near zero.
    pub epsilon: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        // Matches the gravimetric accuracy floor of the benchmark scale.
        Self { epsilon: 0.1 }
    }
}

fn check_lengths(g_p: &[f64], g_b: &[f64]) -> Result<()> {
    if g_p.is_empty() {
        return Err(Error::EmptyInput("predictions"));
    }
    if g_p.len() != g_b.len() {
        return Err(Error::ShapeMismatch { expected: g_b.len(), actual: g_p.len() });
    }
    Ok(())
}

/// Mean of |g_p - g_b|.
pub fn mae(g_p: &[f64], g_b: &[f64]) -> Result<f64> {
    check_lengths(g_p, g_b)?;
    Ok(g_p.iter().zip(g_b).map(|(p, b)| (p - b).abs()).sum::<f64>() / g_p.len() as f64)
}

/// Median over samples of |g_p - g_b| / (g_b + epsilon), as a fraction.
pub fn median_pct_diff(g_p: &[f64], g_b: &[f64], epsilon: f64) -> Result<f64> {
    check_lengths(g_p, g_b)?;
    if !(epsilon > 0.0) {
        return Err(Error::invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    let ratios: Vec<f64> = g_p.iter().zip(g_b).map(|(p, b)| (p - b).abs() / (b + epsilon)).collect();
    Ok(median(ratios))
}

/// Median; even lengths average the central pair. Panics on empty input.
pub fn median(mut v: Vec<f64>) -> f64 {
    assert!(!v.is_empty());
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn mae_cases() {
        assert_eq!(mae(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mae(&[1.0, 3.0], &[2.0, 2.0]).unwrap(), 1.0);
        assert!(mae(&[], &[]).is_err());
        assert!(mae(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn median_pct_cases() {
        assert_eq!(median_pct_diff(&[3.0, 4.0], &[3.0, 4.0], 0.1).unwrap(), 0.0);
        let v = median_pct_diff(&[9.0], &[10.0], 0.1).unwrap();
        assert!((v - 1.0 / 10.1).abs() < 1e-12);
        let v = median_pct_diff(&[0.05], &[0.0], 0.1).unwrap();
        assert!((v - 0.5).abs() < 1e-12);
        // even count: mean of the central pair, (0.1/1.1 + 1/2.1) / 2
        let v = median_pct_diff(&[1.1, 3.0], &[1.0, 2.0], 0.1).unwrap();
        assert!((v - 0.5 * (0.1 / 1.1 + 1.0 / 2.1)).abs() < 1e-12);
        assert!(median_pct_diff(&[], &[], 0.1).is_err());
        assert!(median_pct_diff(&[1.0], &[1.0], 0.0).is_err());
    }

    proptest! {
        #[test]
        fn scale_consistent(pairs in proptest::collection::vec((0.0f64..30.0, 0.0f64..30.0), 1..50), c in 0.01f64..100.0) {
            let (p, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let base = median_pct_diff(&p, &b, 0.1).unwrap();
            let ps: Vec<f64> = p.iter().map(|x| x * c).collect();
            let bs: Vec<f64> = b.iter().map(|x| x * c).collect();
            let scaled = median_pct_diff(&ps, &bs, 0.1 * c).unwrap();
            prop_assert!((base - scaled).abs() <= 1e-9 * (1.0 + base));
        }

        #[test]
        fn mae_permutation_invariant(pairs in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..40), seed: u64) {
            let (p, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let perm = crate::rng::SplitMix64::new(seed).permutation(p.len());
            let pp: Vec<f64> = perm.iter().map(|&i| p[i]).collect();
            let bp: Vec<f64> = perm.iter().map(|&i| b[i]).collect();
            prop_assert!((mae(&p, &b).unwrap() - mae(&pp, &bp).unwrap()).abs() < 1e-12);
        }
    }
}
