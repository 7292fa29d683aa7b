//! Truncated radial fields in the Dirichlet eigenbasis.
//!
//! A field `u` in `E_N` is stored through its plain coefficients
//! `a_n = <u, e_n>`. The `H^s`-normalised coordinates of the Hamiltonian
//! formulation are `c_n = z_n^s a_n`, so that `u = sum c_n e_{n,s}` with
//! `e_{n,s} = z_n^{-s} e_n`; both Parseval conventions agree.

use crate::bessel::BesselBasis;
use crate::error::{Error, Result};
use num_complex::Complex64;
use std::sync::Arc;

/// Admissible interval for the normalisation index `s` given the growth
/// exponent `alpha` and the defocusing exponent `beta`:
/// `max(1/3, 1-2/alpha, 1-2/beta) < s < 1/2`.
pub fn s_condition_interval(alpha: f64, beta: f64) -> (f64, f64) {
    let lo = (1.0_f64 / 3.0).max(1.0 - 2.0 / alpha).max(1.0 - 2.0 / beta);
    (lo, 0.5)
}

/// Midpoint of the admissible `s` interval; the canonical default.
pub fn default_s(alpha: f64, beta: f64) -> f64 {
    let (lo, hi) = s_condition_interval(alpha, beta);
    0.5 * (lo + hi)
}

/// Check `s` against the index condition.
pub fn validate_s(s: f64, alpha: f64, beta: f64) -> Result<()> {
    let (lo, hi) = s_condition_interval(alpha, beta);
    if s > lo && s < hi {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "s = {s} violates the index condition: must lie in ({lo:.6}, {hi})"
        )))
    }
}

/// A truncated radial field with coefficients in the shared eigenbasis.
#[derive(Clone, Debug)]
pub struct SpectralField {
    basis: Arc<BesselBasis>,
    a: Vec<Complex64>,
    s: f64,
}

impl SpectralField {
    /// Build from plain coefficients `a_n = <u, e_n>`.
    pub fn from_plain(basis: Arc<BesselBasis>, a: Vec<Complex64>, s: f64) -> Result<Self> {
        if a.len() > basis.n_modes() {
            return Err(Error::domain(format!(
                "field truncation {} exceeds basis size {}",
                a.len(),
                basis.n_modes()
            )));
        }
        if a.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::domain("field coefficients must be finite"));
        }
        Ok(SpectralField { basis, a, s })
    }

    /// Build from `H^s` coordinates `c_n` (`u = sum c_n e_{n,s}`).
    pub fn from_hs(basis: Arc<BesselBasis>, c: &[Complex64], s: f64) -> Result<Self> {
        let a = c
            .iter()
            .enumerate()
            .map(|(i, &cn)| cn * basis.zero(i + 1).powf(-s))
            .collect();
        Self::from_plain(basis, a, s)
    }

    /// Zero field with `n` modes.
    pub fn zero(basis: Arc<BesselBasis>, n: usize, s: f64) -> Result<Self> {
        Self::from_plain(basis, vec![Complex64::new(0.0, 0.0); n], s)
    }

    pub fn basis(&self) -> &Arc<BesselBasis> {
        &self.basis
    }

    pub fn truncation(&self) -> usize {
        self.a.len()
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn plain_coeffs(&self) -> &[Complex64] {
        &self.a
    }

    pub fn plain_coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.a
    }

    /// `c_n = z_n^s a_n` for the 1-based mode index.
    pub fn hs_coeff(&self, n: usize) -> Complex64 {
        self.a[n - 1] * self.basis.zero(n).powf(self.s)
    }

    /// All `H^s` coordinates.
    pub fn hs_coeffs(&self) -> Vec<Complex64> {
        (1..=self.a.len()).map(|n| self.hs_coeff(n)).collect()
    }

    /// `||u||_{L^2}^2 = sum |a_n|^2`.
    pub fn l2_norm_sq(&self) -> f64 {
        self.a.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    /// `H^sigma` norm `(sum z_n^{2 sigma} |a_n|^2)^{1/2}` for `sigma` in `[0, 1)`.
    pub fn sobolev_norm(&self, sigma: f64) -> f64 {
        self.a
            .iter()
            .enumerate()
            .map(|(i, c)| self.basis.zero(i + 1).powf(2.0 * sigma) * c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Projection `S_N u`: the first `n` coefficients.
    pub fn truncated(&self, n: usize) -> Self {
        SpectralField {
            basis: Arc::clone(&self.basis),
            a: self.a[..n.min(self.a.len())].to_vec(),
            s: self.s,
        }
    }

    /// Values `u(r_q)` on the basis quadrature grid.
    pub fn synthesize(&self) -> Vec<Complex64> {
        let q = self.basis.quad_order();
        let mut values = vec![Complex64::new(0.0, 0.0); q];
        for (i, &an) in self.a.iter().enumerate() {
            if an == Complex64::new(0.0, 0.0) {
                continue;
            }
            let row = self.basis.eigen_row(i + 1);
            for (v, &e) in values.iter_mut().zip(row) {
                *v += an * e;
            }
        }
        values
    }
}

/// Continuous compactly supported cutoff: `1` on `[0, plateau]`, affine ramp
/// down to `0` on `[plateau, plateau + ramp]`, `0` beyond.
#[derive(Clone, Copy, Debug)]
pub struct CutoffChi {
    pub plateau: f64,
    pub ramp: f64,
}

impl CutoffChi {
    pub fn new(plateau: f64, ramp: f64) -> Result<Self> {
        if !(plateau > 0.0 && ramp > 0.0) {
            return Err(Error::domain("cutoff requires positive plateau and ramp"));
        }
        Ok(CutoffChi { plateau, ramp })
    }

    /// Default: plateau `3 (sum_{n<=N} z_n^{-2})^{1/2}`, ramp a quarter of it.
    pub fn default_for(basis: &BesselBasis, n_modes: usize) -> Self {
        let var: f64 = (1..=n_modes).map(|n| basis.zero(n).powi(-2)).sum();
        let plateau = 3.0 * var.sqrt();
        CutoffChi { plateau, ramp: plateau / 4.0 }
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.plateau {
            1.0
        } else if x < self.plateau + self.ramp {
            1.0 - (x - self.plateau) / self.ramp
        } else {
            0.0
        }
    }

    pub fn support_end(&self) -> f64 {
        self.plateau + self.ramp
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bessel::build_basis_default;

    fn basis() -> Arc<BesselBasis> {
        Arc::new(build_basis_default(8).unwrap())
    }

    #[test]
    fn s_condition() {
        // alpha = beta = 2: lower endpoint is 1/3
        let (lo, hi) = s_condition_interval(2.0, 2.0);
        assert!((lo - 1.0 / 3.0).abs() < 1e-15 && hi == 0.5);
        assert!(validate_s(0.1, 2.0, 2.0).is_err());
        assert!(validate_s(default_s(2.0, 2.0), 2.0, 2.0).is_ok());
        // alpha = 3: 1 - 2/3 = 1/3 still; alpha = 3.5: 1 - 4/7 > 1/3
        let (lo, _) = s_condition_interval(3.5, 2.0);
        assert!((lo - (1.0 - 2.0 / 3.5)).abs() < 1e-15);
    }

    #[test]
    fn hs_round_trip() {
        let b = basis();
        let s = default_s(2.0, 2.0);
        let a: Vec<Complex64> =
            (0..8).map(|i| Complex64::new(0.3 * i as f64 - 1.0, 0.1 * i as f64)).collect();
        let u = SpectralField::from_plain(Arc::clone(&b), a.clone(), s).unwrap();
        let back = SpectralField::from_hs(Arc::clone(&b), &u.hs_coeffs(), s).unwrap();
        for (x, y) in a.iter().zip(back.plain_coeffs()) {
            assert!((x - y).norm() <= 1e-15 * (1.0 + x.norm()));
        }
    }

    #[test]
    fn parseval_both_conventions() {
        let b = basis();
        let s = 0.4;
        let a: Vec<Complex64> =
            (0..8).map(|i| Complex64::new(1.0 / (i + 1) as f64, -0.2)).collect();
        let u = SpectralField::from_plain(Arc::clone(&b), a, s).unwrap();
        let via_a = u.l2_norm_sq();
        let via_c: f64 = (1..=8)
            .map(|n| b.zero(n).powf(-2.0 * s) * u.hs_coeff(n).norm_sqr())
            .sum();
        assert!((via_a - via_c).abs() < 1e-12 * via_a);
        // quadrature route
        let synth = u.synthesize();
        let quad: f64 = synth
            .iter()
            .zip(b.disc_weights())
            .map(|(v, &dw)| dw * v.norm_sqr())
            .sum();
        assert!((via_a - quad).abs() < 1e-9 * via_a);
    }

    #[test]
    fn sobolev_norm_cases() {
        let b = basis();
        let u = {
            let mut a = vec![Complex64::new(0.0, 0.0); 8];
            a[2] = Complex64::new(1.0, 0.0); // single mode n = 3
            SpectralField::from_plain(Arc::clone(&b), a, 0.4).unwrap()
        };
        assert!((u.sobolev_norm(0.0) - u.l2_norm()).abs() < 1e-15);
        let sigma = 0.37;
        assert!((u.sobolev_norm(sigma) - b.zero(3).powf(sigma)).abs() < 1e-13);
    }

    #[test]
    fn oversized_truncation_rejected() {
        let b = basis();
        assert!(SpectralField::zero(Arc::clone(&b), 9, 0.4).is_err());
        assert!(SpectralField::from_plain(b, vec![Complex64::new(f64::NAN, 0.0)], 0.4).is_err());
    }

    #[test]
    fn cutoff_shape() {
        let chi = CutoffChi::new(2.0, 0.5).unwrap();
        assert_eq!(chi.eval(0.0), 1.0);
        assert_eq!(chi.eval(2.0), 1.0);
        assert!((chi.eval(2.25) - 0.5).abs() < 1e-15);
        assert_eq!(chi.eval(2.5), 0.0);
        assert_eq!(chi.eval(10.0), 0.0);
        for i in 0..100 {
            let x = i as f64 * 0.05;
            let v = chi.eval(x);
            assert!((0.0..=1.0).contains(&v));
        }
    }
}
