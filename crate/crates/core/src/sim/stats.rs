use crate::data::{Dataset, TimeTrace};
use crate::error::{Error, Result};

/// Peak-normalized difference `E(t) / max E - E_ref(t) / max E_ref`.
pub fn xi_statistic(trace: &TimeTrace, reference: &TimeTrace) -> Result<Vec<f64>> {
    if trace.len() != reference.len() {
        return Err(Error::ShapeMismatch { expected: reference.len(), actual: trace.len() });
    }
    let (m, m0) = (trace.max(), reference.max());
    if !(m > 0.0) || !(m0 > 0.0) {
        return Err(Error::ZeroMaximum);
    }
    Ok(trace.samples.iter().zip(&reference.samples).map(|(&e, &e0)| e as f64 / m - e0 as f64 / m0).collect())
}

/// Population standard deviation across records at each time sample.
pub fn std_trace(dataset: &Dataset) -> Result<Vec<f64>> {
    let n = dataset.len();
    if n < 2 {
        return Err(Error::invalid(format!("std_trace needs at least 2 records, got {n}")));
    }
    let n_t = dataset.time_base().n_t;
    let mut mean = vec![0.0; n_t];
    for r in dataset.records() {
        for (m, &v) in mean.iter_mut().zip(&r.trace.samples) {
            *m += v as f64;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut var = vec![0.0; n_t];
    for r in dataset.records() {
        for ((s, &v), m) in var.iter_mut().zip(&r.trace.samples).zip(&mean) {
            *s += (v as f64 - m).powi(2);
        }
    }
    Ok(var.into_iter().map(|s| (s / n as f64).sqrt()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Orientation, Provenance, SampleRecord, TimeBase};

    fn trace(v: Vec<f32>) -> TimeTrace {
        TimeTrace::new(v, 0.05, 0.0).unwrap()
    }

    fn dataset(traces: Vec<Vec<f32>>) -> Dataset {
        let n_t = traces[0].len();
        let records = traces
            .into_iter()
            .enumerate()
            .map(|(i, v)| SampleRecord {
                trace: trace(v),
                g_b: 0.0,
                a: 9.0,
                series_id: 0,
                acq_index: i as u32,
                orientation: Orientation::TopSide,
            })
            .collect();
        Dataset::new(TimeBase { n_t, dt: 0.05, t0: 0.0 }, records, Provenance::default()).unwrap()
    }

    #[test]
    fn xi_identities() {
        let r = trace(vec![0.1, 1.0, -0.5, 0.3]);
        assert!(xi_statistic(&r, &r).unwrap().iter().all(|&x| x == 0.0));
        let double = trace(r.samples.iter().map(|v| 2.0 * v).collect());
        assert!(xi_statistic(&double, &r).unwrap().iter().all(|&x| x.abs() < 1e-7));
        let neg = trace(vec![-1.0; 4]);
        assert!(matches!(xi_statistic(&neg, &r), Err(Error::ZeroMaximum)));
        assert!(xi_statistic(&trace(vec![1.0; 3]), &r).is_err());
    }

    #[test]
    fn std_closed_forms() {
        let d = dataset(vec![vec![0.5, -1.0, 2.0]; 10]);
        assert!(std_trace(&d).unwrap().iter().all(|&s| s == 0.0));
        let d = dataset(vec![vec![0.0, 1.0, 3.0], vec![0.0, 1.0, 5.0]]);
        assert_eq!(std_trace(&d).unwrap(), vec![0.0, 0.0, 1.0]);
        assert!(std_trace(&d.subset(&[0])).is_err());
    }
}
