//! Weighted sample statistics for the invariance experiments: weighted means
//! and empirical CDFs, the two-sample weighted Kolmogorov-Smirnov statistic,
//! and bootstrap machinery (standard errors and the KS null distribution).
//!
//! Everything is deterministic: bootstrap resampling is keyed through the
//! counter-based streams in [`crate::rng`].

use crate::error::{Error, Result};
use crate::rng;

/// `sum w_i x_i / sum w_i`.
pub fn weighted_mean(values: &[f64], weights: &[f64]) -> Result<f64> {
    check_lengths(values, weights)?;
    let wsum: f64 = weights.iter().sum();
    if wsum <= 0.0 {
        return Err(Error::domain("weighted_mean: total weight must be positive"));
    }
    Ok(values.iter().zip(weights).map(|(x, w)| x * w).sum::<f64>() / wsum)
}

/// Unbiased weighted variance (reliability-weight convention).
pub fn weighted_variance(values: &[f64], weights: &[f64]) -> Result<f64> {
    let mean = weighted_mean(values, weights)?;
    let w1: f64 = weights.iter().sum();
    let w2: f64 = weights.iter().map(|w| w * w).sum();
    let num: f64 = values
        .iter()
        .zip(weights)
        .map(|(x, w)| w * (x - mean) * (x - mean))
        .sum();
    let denom = w1 - w2 / w1;
    if denom <= 0.0 {
        return Err(Error::domain("weighted_variance: effective sample size too small"));
    }
    Ok(num / denom)
}

/// Effective sample size `(sum w)^2 / sum w^2`.
pub fn effective_sample_size(weights: &[f64]) -> f64 {
    let w1: f64 = weights.iter().sum();
    let w2: f64 = weights.iter().map(|w| w * w).sum();
    if w2 == 0.0 {
        0.0
    } else {
        w1 * w1 / w2
    }
}

/// A weighted empirical CDF: sorted support points with normalised cumulative
/// weights.
#[derive(Clone, Debug)]
pub struct WeightedEcdf {
    points: Vec<f64>,
    cumulative: Vec<f64>,
}

impl WeightedEcdf {
    pub fn new(values: &[f64], weights: &[f64]) -> Result<Self> {
        check_lengths(values, weights)?;
        if weights.iter().any(|&w| w < 0.0 || !w.is_finite()) {
            return Err(Error::domain("ecdf weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::domain("ecdf requires positive total weight"));
        }
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
        let mut points = Vec::with_capacity(values.len());
        let mut cumulative = Vec::with_capacity(values.len());
        let mut acc = 0.0;
        for &i in &order {
            acc += weights[i] / total;
            if points.last() == Some(&values[i]) {
                *cumulative.last_mut().unwrap() = acc;
            } else {
                points.push(values[i]);
                cumulative.push(acc);
            }
        }
        Ok(WeightedEcdf { points, cumulative })
    }

    /// `F(x) = P(X <= x)`.
    pub fn eval(&self, x: f64) -> f64 {
        match self.points.partition_point(|&p| p <= x) {
            0 => 0.0,
            k => self.cumulative[k - 1],
        }
    }

    pub fn support(&self) -> &[f64] {
        &self.points
    }
}

/// Two-sample weighted KS statistic `sup_x |F(x) - G(x)|`.
pub fn weighted_ks_statistic(
    x: &[f64],
    wx: &[f64],
    y: &[f64],
    wy: &[f64],
) -> Result<f64> {
    let f = WeightedEcdf::new(x, wx)?;
    let g = WeightedEcdf::new(y, wy)?;
    let mut sup = 0.0_f64;
    for &p in f.support().iter().chain(g.support()) {
        sup = sup.max((f.eval(p) - g.eval(p)).abs());
    }
    Ok(sup)
}

/// Bootstrap standard error of a weighted statistic.
///
/// Each resample draws `n` slots with replacement (value and weight move
/// together) and re-evaluates `stat`.
pub fn bootstrap_se<F>(
    values: &[f64],
    weights: &[f64],
    resamples: usize,
    seed: u64,
    stat: F,
) -> Result<f64>
where
    F: Fn(&[f64], &[f64]) -> Result<f64>,
{
    check_lengths(values, weights)?;
    if resamples < 2 {
        return Err(Error::domain("bootstrap_se: need at least 2 resamples"));
    }
    let n = values.len();
    let mut stats = Vec::with_capacity(resamples);
    let mut rv = vec![0.0; n];
    let mut rw = vec![0.0; n];
    for b in 0..resamples {
        for slot in 0..n {
            let u = rng::unit_uniform(seed, b as u64, slot as u64);
            let pick = ((u * n as f64) as usize).min(n - 1);
            rv[slot] = values[pick];
            rw[slot] = weights[pick];
        }
        stats.push(stat(&rv, &rw)?);
    }
    let m = stats.iter().sum::<f64>() / resamples as f64;
    let var =
        stats.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (resamples as f64 - 1.0);
    Ok(var.sqrt())
}

/// Result of the weighted two-sample KS test.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct KsTestReport {
    pub statistic: f64,
    pub p_value: f64,
    pub resamples: usize,
}

/// Weighted two-sample KS test with a bootstrap null.
///
/// Under the null both samples come from the same law, so null replicates
/// redraw every slot's *value* from the pooled weighted ECDF while each slot
/// keeps its own weight; the p-value is the fraction of null statistics at
/// least as large as the observed one (with the `+1` continuity correction).
pub fn weighted_ks_test(
    x: &[f64],
    wx: &[f64],
    y: &[f64],
    wy: &[f64],
    resamples: usize,
    seed: u64,
) -> Result<KsTestReport> {
    let statistic = weighted_ks_statistic(x, wx, y, wy)?;
    if resamples == 0 {
        return Err(Error::domain("weighted_ks_test: resamples must be positive"));
    }
    // pooled weighted sampler: inverse-CDF over all slots
    let pooled_vals: Vec<f64> = x.iter().chain(y).copied().collect();
    let pooled_w: Vec<f64> = wx.iter().chain(wy).copied().collect();
    let total: f64 = pooled_w.iter().sum();
    let mut cum = Vec::with_capacity(pooled_w.len());
    let mut acc = 0.0;
    for &w in &pooled_w {
        acc += w / total;
        cum.push(acc);
    }
    let n = x.len();
    let m = y.len();
    let exceed = crate::parallel::count_indexed(resamples, |b| {
        let draw = |slot: u64| {
            let u = rng::unit_uniform(seed, b as u64, slot);
            let k = cum.partition_point(|&c| c < u).min(pooled_vals.len() - 1);
            pooled_vals[k]
        };
        let bx: Vec<f64> = (0..n).map(|i| draw(i as u64)).collect();
        let by: Vec<f64> = (0..m).map(|i| draw((n + i) as u64)).collect();
        let ks = weighted_ks_statistic(&bx, wx, &by, wy).expect("valid resample");
        ks >= statistic
    });
    Ok(KsTestReport {
        statistic,
        p_value: (exceed + 1) as f64 / (resamples + 1) as f64,
        resamples,
    })
}

fn check_lengths(values: &[f64], weights: &[f64]) -> Result<()> {
    if values.len() != weights.len() || values.is_empty() {
        return Err(Error::domain("values and weights must be nonempty and equal-length"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_variance_unit_weights() {
        let v = [1.0, 2.0, 3.0, 4.0];
        let w = [1.0; 4];
        assert!((weighted_mean(&v, &w).unwrap() - 2.5).abs() < 1e-15);
        // matches the plain unbiased sample variance
        assert!((weighted_variance(&v, &w).unwrap() - 5.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn mean_invariant_under_weight_scaling() {
        let v = [0.3, -1.0, 2.5];
        let w = [0.2, 0.5, 1.1];
        let w2: Vec<f64> = w.iter().map(|x| 7.0 * x).collect();
        let a = weighted_mean(&v, &w).unwrap();
        let b = weighted_mean(&v, &w2).unwrap();
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn ess_bounds() {
        assert!((effective_sample_size(&[1.0; 10]) - 10.0).abs() < 1e-12);
        let skew = effective_sample_size(&[1.0, 0.0, 0.0, 0.0]);
        assert!((skew - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ecdf_step_function() {
        let f = WeightedEcdf::new(&[2.0, 1.0, 3.0], &[1.0, 1.0, 2.0]).unwrap();
        assert_eq!(f.eval(0.5), 0.0);
        assert!((f.eval(1.0) - 0.25).abs() < 1e-15);
        assert!((f.eval(2.9) - 0.5).abs() < 1e-15);
        assert!((f.eval(3.0) - 1.0).abs() < 1e-15);
        assert_eq!(f.eval(100.0), 1.0);
    }

    #[test]
    fn ecdf_merges_ties() {
        let f = WeightedEcdf::new(&[1.0, 1.0, 2.0], &[1.0, 1.0, 2.0]).unwrap();
        assert_eq!(f.support().len(), 2);
        assert!((f.eval(1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ks_identical_samples_zero() {
        let x = [0.1, 0.7, 0.4, 0.9];
        let w = [1.0, 0.5, 2.0, 0.3];
        let d = weighted_ks_statistic(&x, &w, &x, &w).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn ks_disjoint_samples_one() {
        let d = weighted_ks_statistic(&[0.0, 1.0], &[1.0, 1.0], &[5.0, 6.0], &[2.0, 1.0])
            .unwrap();
        assert!((d - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ks_unit_weights_match_classical() {
        // classical two-sample KS on small samples, hand-computed
        let x = [1.0, 2.0, 3.0];
        let y = [1.5, 2.5];
        let d = weighted_ks_statistic(&x, &[1.0; 3], &y, &[1.0; 2]).unwrap();
        // sup at 2.0: F = 2/3, G = 1/2 -> 1/6; at 1.0: 1/3 vs 0 -> 1/3
        assert!((d - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn bootstrap_se_of_mean_matches_clt() {
        let n = 400;
        let values: Vec<f64> =
            (0..n).map(|i| rng::standard_normal_pair(99, i as u64, 0).0).collect();
        let weights = vec![1.0; n];
        let se = bootstrap_se(&values, &weights, 1000, 7, weighted_mean).unwrap();
        let clt = (weighted_variance(&values, &weights).unwrap() / n as f64).sqrt();
        assert!((se - clt).abs() < 0.35 * clt, "bootstrap {se} vs clt {clt}");
    }

    #[test]
    fn ks_test_null_p_value_is_moderate() {
        // both samples from the same uniform law
        let x: Vec<f64> = (0..300).map(|i| rng::unit_uniform(11, i, 0)).collect();
        let y: Vec<f64> = (0..300).map(|i| rng::unit_uniform(12, i, 0)).collect();
        let w = vec![1.0; 300];
        let rep = weighted_ks_test(&x, &w, &y, &w, 400, 5).unwrap();
        assert!(rep.p_value > 0.01, "p = {}", rep.p_value);
    }

    #[test]
    fn ks_test_detects_shift() {
        let x: Vec<f64> = (0..300).map(|i| rng::unit_uniform(11, i, 0)).collect();
        let y: Vec<f64> = (0..300).map(|i| rng::unit_uniform(12, i, 0) + 0.5).collect();
        let w = vec![1.0; 300];
        let rep = weighted_ks_test(&x, &w, &y, &w, 400, 5).unwrap();
        assert!(rep.p_value < 0.01, "p = {}", rep.p_value);
        assert!(rep.statistic > 0.4);
    }

    #[test]
    fn degenerate_inputs_rejected() {
        assert!(weighted_mean(&[], &[]).is_err());
        assert!(weighted_mean(&[1.0], &[1.0, 2.0]).is_err());
        assert!(weighted_mean(&[1.0], &[0.0]).is_err());
        assert!(WeightedEcdf::new(&[1.0], &[-1.0]).is_err());
    }
}
