//! Empirical verification of the large-deviation and convergence estimates
//! behind the measure construction: the sub-Gaussian tail of Gaussian sums,
//! the chi-square tail of `sum |g_n|^2`, the `H^sigma` tail of dyadic blocks
//! of the random series, and the `L^1` convergence of the truncated potential
//! energy with its spectral majorant.

use crate::bessel::{fit_log_log, BesselBasis};
use crate::error::{Error, Result};
use crate::field::{CutoffChi, SpectralField};
use crate::measure::{gibbs_weight, integral_v, sample_free};
use crate::nonlinearity::NonlinearityModel;
use crate::parallel;
use crate::rng;
use num_complex::Complex64;
use serde::Serialize;
use std::sync::Arc;

/// One tail comparison row.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TailRow {
    pub lambda: f64,
    pub empirical: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Empirical `P(|sum c_n g_n| > lambda)` against the sub-Gaussian bound
/// `4 exp(-beta lambda^2 / sum |c_n|^2)` with `beta = 1/2`.
pub fn tail_subgaussian_test(
    c: &[Complex64],
    lambda_grid: &[f64],
    sample_count: usize,
    seed: u64,
) -> Result<Vec<TailRow>> {
    let norm_sq: f64 = c.iter().map(|x| x.norm_sqr()).sum();
    if norm_sq == 0.0 {
        return Err(Error::domain("tail_subgaussian_test: c must not be identically zero"));
    }
    let magnitudes = parallel::map_indexed(sample_count, |i| {
        let mut s = Complex64::new(0.0, 0.0);
        for (n, &cn) in c.iter().enumerate() {
            s += cn * rng::complex_gaussian(seed, i as u64, (n + 1) as u64);
        }
        s.norm()
    });
    Ok(lambda_grid
        .iter()
        .map(|&lambda| {
            let hits = magnitudes.iter().filter(|&&m| m > lambda).count();
            let empirical = hits as f64 / sample_count as f64;
            let bound = 4.0 * (-0.5 * lambda * lambda / norm_sq).exp();
            TailRow { lambda, empirical, bound, pass: empirical <= bound }
        })
        .collect())
}

/// Report for the chi-square tail `P(sum_{n<=card} |g_n|^2 > lambda)`.
#[derive(Clone, Debug, Serialize)]
pub struct ChiSquareReport {
    pub card: usize,
    pub rows: Vec<(f64, f64)>,
    /// Asymptotic log-slope `c2` fitted on rows with empirical probability in
    /// `[1e-4, 0.5]`; `None` if fewer than two usable rows.
    pub fitted_c2: Option<f64>,
}

pub fn tail_chisquare_test(
    card: usize,
    lambda_grid: &[f64],
    sample_count: usize,
    seed: u64,
) -> Result<ChiSquareReport> {
    if card == 0 {
        return Err(Error::domain("tail_chisquare_test: card must be positive"));
    }
    let sums = parallel::map_indexed(sample_count, |i| {
        (1..=card)
            .map(|n| rng::complex_gaussian(seed, i as u64, n as u64).norm_sqr())
            .sum::<f64>()
    });
    let rows: Vec<(f64, f64)> = lambda_grid
        .iter()
        .map(|&lambda| {
            let hits = sums.iter().filter(|&&v| v > lambda).count();
            (lambda, hits as f64 / sample_count as f64)
        })
        .collect();
    let usable: Vec<(f64, f64)> =
        rows.iter().cloned().filter(|&(_, p)| (1e-4..=0.5).contains(&p)).collect();
    let fitted_c2 = if usable.len() >= 2 {
        // ordinary least squares of log p against lambda
        let n = usable.len() as f64;
        let mx = usable.iter().map(|r| r.0).sum::<f64>() / n;
        let my = usable.iter().map(|r| r.1.ln()).sum::<f64>() / n;
        let sxx: f64 = usable.iter().map(|r| (r.0 - mx) * (r.0 - mx)).sum();
        let sxy: f64 = usable.iter().map(|r| (r.0 - mx) * (r.1.ln() - my)).sum();
        Some(-sxy / sxx)
    } else {
        None
    };
    Ok(ChiSquareReport { card, rows, fitted_c2 })
}

/// Tail of one dyadic block `||S_M phi - S_N phi||_{H^sigma}`.
#[derive(Clone, Debug, Serialize)]
pub struct SobolevTailPair {
    pub n_lo: usize,
    pub n_hi: usize,
    pub rows: Vec<(f64, f64)>,
    /// Fitted slope of `log P` against `lambda^2`; negative when the tail is
    /// at least Gaussian in `lambda`.
    pub lambda_sq_slope: Option<f64>,
}

/// Empirical tails of `||S_M phi - S_N phi||_{H^sigma}` for each `(N, M)`.
pub fn tail_sobolev_test(
    basis: &BesselBasis,
    sigma: f64,
    s: f64,
    pairs: &[(usize, usize)],
    lambda_grid: &[f64],
    sample_count: usize,
    seed: u64,
) -> Result<Vec<SobolevTailPair>> {
    if !(sigma >= s && sigma < 0.5) {
        return Err(Error::domain(format!("tail_sobolev_test: sigma {sigma} outside [s, 1/2)")));
    }
    let mut out = Vec::with_capacity(pairs.len());
    for &(n_lo, n_hi) in pairs {
        if n_lo > n_hi || n_hi > basis.n_modes() {
            return Err(Error::domain(format!("invalid pair ({n_lo}, {n_hi})")));
        }
        // z_n^{2 sigma - 2} weights of the block
        let weights: Vec<f64> = ((n_lo + 1)..=n_hi)
            .map(|n| basis.zero(n).powf(2.0 * sigma - 2.0))
            .collect();
        let norms = parallel::map_indexed(sample_count, |i| {
            weights
                .iter()
                .enumerate()
                .map(|(k, &w)| {
                    w * rng::complex_gaussian(seed, i as u64, (n_lo + 1 + k) as u64).norm_sqr()
                })
                .sum::<f64>()
                .sqrt()
        });
        let rows: Vec<(f64, f64)> = lambda_grid
            .iter()
            .map(|&lambda| {
                let hits = norms.iter().filter(|&&v| v > lambda).count();
                (lambda, hits as f64 / sample_count.max(1) as f64)
            })
            .collect();
        let usable: Vec<(f64, f64)> =
            rows.iter().cloned().filter(|&(l, p)| l > 0.0 && p > 0.0 && p <= 0.5).collect();
        let lambda_sq_slope = if usable.len() >= 2 {
            let n = usable.len() as f64;
            let mx = usable.iter().map(|r| r.0 * r.0).sum::<f64>() / n;
            let my = usable.iter().map(|r| r.1.ln()).sum::<f64>() / n;
            let sxx: f64 =
                usable.iter().map(|r| (r.0 * r.0 - mx) * (r.0 * r.0 - mx)).sum();
            let sxy: f64 = usable.iter().map(|r| (r.0 * r.0 - mx) * (r.1.ln() - my)).sum();
            Some(sxy / sxx)
        } else {
            None
        };
        out.push(SobolevTailPair { n_lo, n_hi, rows, lambda_sq_slope });
    }
    Ok(out)
}

/// One consecutive-pair row of the potential-energy convergence study.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct VnConvergenceRow {
    pub n_lo: usize,
    pub n_hi: usize,
    /// Monte Carlo estimate of `E_mu | \int V(S_N u) - \int V(S_M u) |`.
    pub l1_diff: f64,
    /// Spectral majorant `sum_{N<n<=M} z_n^{-2} ||e_n||_{L^{alpha+2}}^2`.
    pub majorant: f64,
}

/// `L^1(d mu)` differences of `\int V(S_N u)` over consecutive truncation
/// pairs, next to the measured-norm majorant.
pub fn vn_convergence(
    model: &NonlinearityModel,
    basis: &Arc<BesselBasis>,
    s: f64,
    n_list: &[usize],
    sample_count: usize,
    seed: u64,
) -> Result<Vec<VnConvergenceRow>> {
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain("vn_convergence: n_list must be strictly increasing"));
    }
    let n_max = *n_list.last().ok_or_else(|| Error::domain("vn_convergence: empty n_list"))?;
    if n_max > basis.n_modes() {
        return Err(Error::domain("vn_convergence: n_list exceeds basis size"));
    }
    let levels = n_list.len();
    // per sample: integral of V at each truncation level, via incremental
    // synthesis so the field is built once
    let per_sample = parallel::map_indexed(sample_count, |i| {
        let q = basis.quad_order();
        let mut values = vec![Complex64::new(0.0, 0.0); q];
        let mut integrals = Vec::with_capacity(levels);
        let mut n_done = 0;
        for &level in n_list {
            for n in (n_done + 1)..=level {
                let g = rng::complex_gaussian(seed, i as u64, n as u64) / basis.zero(n);
                let row = basis.eigen_row(n);
                for (v, &e) in values.iter_mut().zip(row) {
                    *v += g * e;
                }
            }
            n_done = level;
            let iv: f64 = values
                .iter()
                .zip(basis.disc_weights())
                .map(|(&v, &dw)| dw * model.potential(v))
                .sum();
            integrals.push(iv);
        }
        integrals
    });
    let mut rows = Vec::with_capacity(levels.saturating_sub(1));
    for pair in 0..levels - 1 {
        let l1 = per_sample
            .iter()
            .map(|ints| (ints[pair] - ints[pair + 1]).abs())
            .sum::<f64>()
            / sample_count as f64;
        let p = model.alpha() + 2.0;
        let majorant: f64 = ((n_list[pair] + 1)..=n_list[pair + 1])
            .map(|n| basis.zero(n).powi(-2) * basis.lp_norm(n, p).expect("valid mode").powi(2))
            .sum();
        rows.push(VnConvergenceRow {
            n_lo: n_list[pair],
            n_hi: n_list[pair + 1],
            l1_diff: l1,
            majorant,
        });
    }
    Ok(rows)
}

/// Mean and standard error of `f_N^p` under the free measure, per truncation.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct WeightMomentRow {
    pub n_modes: usize,
    pub p: f64,
    pub mean: f64,
    pub stderr: f64,
}

/// Stability of `E_mu f_N^p` across truncations (the uniform `L^p`
/// boundedness of the Gibbs density factor).
pub fn weight_moment_stability(
    model: &NonlinearityModel,
    chi: &CutoffChi,
    basis: &Arc<BesselBasis>,
    s: f64,
    n_list: &[usize],
    p_list: &[f64],
    sample_count: usize,
    seed: u64,
) -> Result<Vec<WeightMomentRow>> {
    let mut rows = Vec::new();
    for &n in n_list {
        let weights = parallel::map_indexed(sample_count, |i| {
            let u = sample_free(basis, n, s, seed, i as u64).expect("valid truncation");
            gibbs_weight(model, chi, &u)
        });
        for &p in p_list {
            let powered: Vec<f64> = weights.iter().map(|w| w.powf(p)).collect();
            let mean = powered.iter().sum::<f64>() / sample_count as f64;
            let var = powered.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                / (sample_count as f64 - 1.0);
            rows.push(WeightMomentRow {
                n_modes: n,
                p,
                mean,
                stderr: (var / sample_count as f64).sqrt(),
            });
        }
    }
    Ok(rows)
}

/// Gibbs-weighted tail of `||S_N u||_{H^sigma}` with its `lambda^2` slope.
pub fn rho_weighted_sobolev_tail(
    model: &NonlinearityModel,
    chi: &CutoffChi,
    basis: &Arc<BesselBasis>,
    n_modes: usize,
    s: f64,
    sigma: f64,
    lambda_grid: &[f64],
    sample_count: usize,
    seed: u64,
) -> Result<SobolevTailPair> {
    if !(sigma < 0.5) {
        return Err(Error::domain("rho_weighted_sobolev_tail: sigma must be below 1/2"));
    }
    let data = parallel::map_indexed(sample_count, |i| {
        let u = sample_free(basis, n_modes, s, seed, i as u64).expect("valid truncation");
        (u.sobolev_norm(sigma), gibbs_weight(model, chi, &u))
    });
    let total_w: f64 = data.iter().map(|d| d.1).sum();
    let rows: Vec<(f64, f64)> = lambda_grid
        .iter()
        .map(|&lambda| {
            let hit_w: f64 = data.iter().filter(|d| d.0 > lambda).map(|d| d.1).sum();
            (lambda, hit_w / total_w)
        })
        .collect();
    let usable: Vec<(f64, f64)> =
        rows.iter().cloned().filter(|&(l, p)| l > 0.0 && p > 0.0 && p <= 0.5).collect();
    let lambda_sq_slope = if usable.len() >= 2 {
        let xs: Vec<f64> = usable.iter().map(|r| (r.0 * r.0).exp()).collect();
        // log-log fit of p against exp(lambda^2) gives the lambda^2 slope
        let ys: Vec<f64> = usable.iter().map(|r| r.1).collect();
        Some(fit_log_log(&ys, &xs)?.0)
    } else {
        None
    };
    Ok(SobolevTailPair { n_lo: 0, n_hi: n_modes, rows, lambda_sq_slope })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bessel::build_basis_default;
    use crate::field::default_s;

    #[test]
    fn subgaussian_trivial_lambda_zero() {
        let c = vec![Complex64::new(1.0, 0.0)];
        let rows = tail_subgaussian_test(&c, &[0.0], 2000, 5).unwrap();
        assert_eq!(rows[0].empirical, 1.0);
        assert_eq!(rows[0].bound, 4.0);
        assert!(rows[0].pass);
    }

    #[test]
    fn subgaussian_rejects_zero_vector() {
        let c = vec![Complex64::new(0.0, 0.0); 3];
        assert!(tail_subgaussian_test(&c, &[1.0], 10, 0).is_err());
    }

    #[test]
    fn subgaussian_scaling_homogeneity() {
        let c: Vec<Complex64> = vec![Complex64::new(0.5, 0.0); 4];
        let c2: Vec<Complex64> = vec![Complex64::new(1.0, 0.0); 4];
        let a = tail_subgaussian_test(&c, &[1.5], 50_000, 12).unwrap();
        let b = tail_subgaussian_test(&c2, &[3.0], 50_000, 12).unwrap();
        // same normalised statistic, same stream: identical counts
        assert_eq!(a[0].empirical, b[0].empirical);
        assert!((a[0].bound - b[0].bound).abs() < 1e-15);
    }

    #[test]
    fn chisquare_card_one_exponential_law() {
        let grid: Vec<f64> = (0..=6).map(|k| k as f64).collect();
        let rep = tail_chisquare_test(1, &grid, 200_000, 3).unwrap();
        assert_eq!(rep.rows[0].1, 1.0);
        for &(lambda, p) in &rep.rows {
            let exact = (-lambda).exp();
            let se = (exact * (1.0 - exact) / 200_000.0).sqrt();
            assert!((p - exact).abs() <= 3.0 * se + 1e-9, "lambda {lambda}: {p} vs {exact}");
        }
    }

    #[test]
    fn chisquare_requires_positive_card() {
        assert!(tail_chisquare_test(0, &[1.0], 10, 0).is_err());
    }

    #[test]
    fn sobolev_tail_zero_block() {
        let basis = Arc::new(build_basis_default(16).unwrap());
        let s = default_s(2.0, 2.0);
        let rep = tail_sobolev_test(&basis, 0.45, s, &[(8, 8)], &[1.0, 2.0], 500, 1).unwrap();
        for &(_, p) in &rep[0].rows {
            assert_eq!(p, 0.0);
        }
    }

    #[test]
    fn sobolev_tail_decays_quadratically() {
        let basis = Arc::new(build_basis_default(16).unwrap());
        let s = default_s(2.0, 2.0);
        let grid: Vec<f64> = (1..=10).map(|k| 0.15 * k as f64).collect();
        let rep = tail_sobolev_test(&basis, 0.45, s, &[(0, 16)], &grid, 100_000, 2).unwrap();
        let slope = rep[0].lambda_sq_slope.expect("enough usable rows");
        assert!(slope < 0.0, "slope {slope}");
    }

    #[test]
    fn sobolev_tail_sigma_validation() {
        let basis = Arc::new(build_basis_default(8).unwrap());
        assert!(tail_sobolev_test(&basis, 0.6, 0.4, &[(0, 8)], &[1.0], 10, 0).is_err());
        assert!(tail_sobolev_test(&basis, 0.3, 0.4, &[(0, 8)], &[1.0], 10, 0).is_err());
    }

    #[test]
    fn vn_convergence_zero_for_equal_truncations() {
        let basis = Arc::new(build_basis_default(16).unwrap());
        let model = NonlinearityModel::pure_quartic();
        let s = default_s(2.0, 2.0);
        // consecutive equal truncations are rejected as non-increasing
        assert!(vn_convergence(&model, &basis, s, &[8, 8], 10, 0).is_err());
        let rows = vn_convergence(&model, &basis, s, &[4, 8], 200, 0).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].l1_diff > 0.0 && rows[0].majorant > 0.0);
    }
}
