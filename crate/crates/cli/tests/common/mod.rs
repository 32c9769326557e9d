//! Independent reference computations for the acceptance checks.

#![allow(dead_code)]

use num_complex::Complex64;

/// Speed of light in mm/ps.
pub const C: f64 = 0.299_792_458;

/// Airy transmission of a slab of complex index `n` and thickness `d_mm` in
/// vacuum, summed from the Fresnel coefficients.
pub fn airy(n: Complex64, d_mm: f64, f_thz: f64) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    let r = (n - one) / (n + one);
    let t_in = 2.0 / (one + n);
    let t_out = 2.0 * n / (n + one);
    let phase = (Complex64::i() * n * (2.0 * std::f64::consts::PI * f_thz * d_mm / C)).exp();
    t_in * t_out * phase / (one - r * r * phase * phase)
}

/// Double-Debye permittivity written out from its definition.
pub fn double_debye(eps_s: f64, eps_1: f64, eps_inf: f64, tau_1: f64, tau_2: f64, f_thz: f64) -> Complex64 {
    let w = 2.0 * std::f64::consts::PI * f_thz;
    let i = Complex64::i();
    Complex64::new(eps_inf, 0.0) + (eps_s - eps_1) / (1.0 - i * w * tau_1) + (eps_1 - eps_inf) / (1.0 - i * w * tau_2)
}

/// Unevaluated sum `hi + lo` with |lo| <= ulp(hi) / 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    pub fn from(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    fn two_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        let bb = s - a;
        Dd { hi: s, lo: (a - (s - bb)) + (b - bb) }
    }

    fn quick(a: f64, b: f64) -> Dd {
        let s = a + b;
        Dd { hi: s, lo: b - (s - a) }
    }

    pub fn add(self, o: Dd) -> Dd {
        let s = Self::two_sum(self.hi, o.hi);
        let t = Self::two_sum(self.lo, o.lo);
        let s = Self::quick(s.hi, s.lo + t.hi);
        Self::quick(s.hi, s.lo + t.lo)
    }

    pub fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    pub fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    pub fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        Self::quick(p, e + (self.hi * o.lo + self.lo * o.hi))
    }

    pub fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self.sub(o.mul(Dd::from(q1)));
        let q2 = r.hi / o.hi;
        let r = r.sub(o.mul(Dd::from(q2)));
        let q3 = r.hi / o.hi;
        Self::quick(q1, q2).add(Dd::from(q3))
    }

    pub fn abs(self) -> Dd {
        if self.hi < 0.0 { self.neg() } else { self }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

/// Least-squares polynomial coefficients from the normal equations, formed
/// and solved (Gaussian elimination, partial pivoting) in double-double.
pub fn poly_normal_equations(u: &[f64], y: &[f64], degree: usize) -> Vec<f64> {
    let k = degree + 1;
    let mut g = vec![vec![Dd::ZERO; k + 1]; k];
    for (&ui, &yi) in u.iter().zip(y) {
        let mut pow = vec![Dd::from(1.0); 2 * k - 1];
        for p in 1..pow.len() {
            pow[p] = pow[p - 1].mul(Dd::from(ui));
        }
        for r in 0..k {
            for c in 0..k {
                g[r][c] = g[r][c].add(pow[r + c]);
            }
            g[r][k] = g[r][k].add(pow[r].mul(Dd::from(yi)));
        }
    }
    for col in 0..k {
        let piv = (col..k).max_by(|&a, &b| g[a][col].abs().hi.total_cmp(&g[b][col].abs().hi)).unwrap();
        g.swap(col, piv);
        for r in col + 1..k {
            let f = g[r][col].div(g[col][col]);
            for c in col..=k {
                g[r][c] = g[r][c].sub(f.mul(g[col][c]));
            }
        }
    }
    let mut x = vec![Dd::ZERO; k];
    for r in (0..k).rev() {
        let mut s = g[r][k];
        for c in r + 1..k {
            s = s.sub(g[r][c].mul(x[c]));
        }
        x[r] = s.div(g[r][r]);
    }
    x.into_iter().map(Dd::to_f64).collect()
}

/// Exhaustive best root split under squared error with at least `min_leaf`
/// rows on each side: `(sse, feature, threshold)`, or `None` if no split is
/// admissible.
pub fn brute_force_split(x: &[Vec<f64>], y: &[f64], min_leaf: usize) -> Option<(f64, usize, f64)> {
    let p = x[0].len();
    let mut best: Option<(f64, usize, f64)> = None;
    for f in 0..p {
        let mut vals: Vec<f64> = x.iter().map(|r| r[f]).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            let thr = 0.5 * (w[0] + w[1]);
            let sse = split_sse(x, y, f, thr, min_leaf);
            if let Some(s) = sse {
                if best.map_or(true, |b| s < b.0) {
                    best = Some((s, f, thr));
                }
            }
        }
    }
    best
}

/// Two-sided sum of squared deviations of the split `x[f] <= thr`.
pub fn split_sse(x: &[Vec<f64>], y: &[f64], f: usize, thr: f64, min_leaf: usize) -> Option<f64> {
    let (l, r): (Vec<f64>, Vec<f64>) = {
        let mut l = Vec::new();
        let mut r = Vec::new();
        for (row, &v) in x.iter().zip(y) {
            if row[f] <= thr { l.push(v) } else { r.push(v) }
        }
        (l, r)
    };
    if l.len() < min_leaf || r.len() < min_leaf {
        return None;
    }
    let sse = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|a| (a - m).powi(2)).sum::<f64>()
    };
    Some(sse(&l) + sse(&r))
}
