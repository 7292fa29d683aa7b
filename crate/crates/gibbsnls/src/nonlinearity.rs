//! Gauge-invariant potentials `V(z) = G(|z|^2)` and forces `F(z) = G'(|z|^2) z`.
//!
//! Built-in families: the saturated potential
//! `V(z) = (2/(alpha+2)) (1+|z|^2)^{(alpha+2)/2}` and the pure quartic
//! `V(z) = |z|^4 / 2` (cubic defocusing force `F(u) = |u|^2 u`). Custom models
//! supply `G` as a complex-analytic evaluator of the real variable
//! `rho = |z|^2`; the force is then produced by complex-step differentiation.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::fmt;
use std::sync::Arc;

/// Complex-step step size for custom derivatives.
const CS_STEP: f64 = 1e-20;

type GEval = Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>;

#[derive(Clone)]
pub enum Family {
    /// `V(z) = (2/(alpha+2)) (1+|z|^2)^{(alpha+2)/2}`.
    Saturated,
    /// `V(z) = |z|^4 / 2`, cubic defocusing.
    PureQuartic,
    /// User-supplied `G(rho)` with `V(z) = G(|z|^2)`.
    Custom(GEval),
}

impl fmt::Debug for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Saturated => write!(f, "Saturated"),
            Family::PureQuartic => write!(f, "PureQuartic"),
            Family::Custom(_) => write!(f, "Custom"),
        }
    }
}

/// A gauge-invariant nonlinearity with validated growth exponents.
#[derive(Clone, Debug)]
pub struct NonlinearityModel {
    family: Family,
    alpha: f64,
    beta_defocus: f64,
}

impl NonlinearityModel {
    /// Saturated family with growth degree `alpha` in `(0, 4)`.
    pub fn saturated(alpha: f64) -> Result<Self> {
        Self::new(Family::Saturated, alpha, 2.0)
    }

    /// Pure quartic (`alpha = 2`) cubic defocusing model.
    pub fn pure_quartic() -> Self {
        Self::new(Family::PureQuartic, 2.0, 2.0).expect("fixed exponents are valid")
    }

    /// Custom model from a complex-analytic `G(rho)`.
    pub fn custom(g: GEval, alpha: f64, beta_defocus: f64) -> Result<Self> {
        Self::new(Family::Custom(g), alpha, beta_defocus)
    }

    fn new(family: Family, alpha: f64, beta_defocus: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 4.0) {
            return Err(Error::domain(format!("alpha {alpha} outside (0, 4)")));
        }
        if !(2.0..4.0).contains(&beta_defocus) {
            return Err(Error::domain(format!("beta_defocus {beta_defocus} outside [2, 4)")));
        }
        Ok(NonlinearityModel { family, alpha, beta_defocus })
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn family_name(&self) -> &'static str {
        match self.family {
            Family::Saturated => "saturated",
            Family::PureQuartic => "pure_quartic",
            Family::Custom(_) => "custom",
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta_defocus(&self) -> f64 {
        self.beta_defocus
    }

    /// Built-in families are nonnegative everywhere, which certifies both the
    /// defocusing bound and the rejection-sampling envelope.
    pub fn certified_nonnegative(&self) -> bool {
        matches!(self.family, Family::Saturated | Family::PureQuartic)
    }

    /// `G(rho)` evaluated on the real axis.
    fn g(&self, rho: f64) -> f64 {
        match &self.family {
            Family::Saturated => {
                let e = 0.5 * self.alpha + 1.0;
                (1.0 / e) * (1.0 + rho).powf(e)
            }
            Family::PureQuartic => 0.5 * rho * rho,
            Family::Custom(g) => g(Complex64::new(rho, 0.0)).re,
        }
    }

    /// `G'(rho)`; analytic for the built-ins, complex step for custom models.
    pub fn g_prime(&self, rho: f64) -> f64 {
        match &self.family {
            Family::Saturated => (1.0 + rho).powf(0.5 * self.alpha),
            Family::PureQuartic => rho,
            Family::Custom(g) => g(Complex64::new(rho, CS_STEP)).im / CS_STEP,
        }
    }

    /// `G''(rho)`; the custom path differences the complex-step `G'`.
    fn g_second(&self, rho: f64) -> f64 {
        match &self.family {
            Family::Saturated => 0.5 * self.alpha * (1.0 + rho).powf(0.5 * self.alpha - 1.0),
            Family::PureQuartic => 1.0,
            Family::Custom(_) => {
                let h = 1e-6 * (1.0 + rho.abs());
                (self.g_prime(rho + h) - self.g_prime(rho - h)) / (2.0 * h)
            }
        }
    }

    /// Potential `V(z) = G(|z|^2)`.
    pub fn potential(&self, z: Complex64) -> f64 {
        self.g(z.norm_sqr())
    }

    /// Force `F(z) = G'(|z|^2) z`.
    pub fn force(&self, z: Complex64) -> Complex64 {
        z * self.g_prime(z.norm_sqr())
    }

    /// Magnitude of the Wirtinger derivative `|d^{k1} dbar^{k2} V|` at `z`
    /// for `k1 + k2 <= 2`.
    fn wirtinger_magnitude(&self, z: Complex64, k1: usize, k2: usize) -> Result<f64> {
        let rho = z.norm_sqr();
        let val = match (k1, k2) {
            (0, 0) => self.g(rho).abs(),
            (1, 0) | (0, 1) => self.g_prime(rho).abs() * z.norm(),
            (1, 1) => (self.g_prime(rho) + self.g_second(rho) * rho).abs(),
            (2, 0) | (0, 2) => self.g_second(rho).abs() * rho,
            _ => {
                return Err(Error::Unsupported(format!(
                    "growth sweep implemented for k1 + k2 <= 2, got ({k1}, {k2})"
                )))
            }
        };
        Ok(val)
    }
}

/// Outcome of a growth or defocusing sweep.
#[derive(Debug, Clone, Copy)]
pub struct GrowthReport {
    pub holds: bool,
    pub fitted_c: f64,
    /// Log-log slope of the required constant against `1 + |z|`; positive
    /// slopes mean the bound fails in the large-`|z|` limit.
    pub slope: f64,
}

/// Sweep the growth bound `|d^{k1} dbar^{k2} V| <= C (1+|z|)^{2+alpha-k1-k2}`
/// over the given `|z|` grid.
pub fn verify_growth(
    model: &NonlinearityModel,
    order: (usize, usize),
    grid: &[f64],
) -> Result<GrowthReport> {
    let (k1, k2) = order;
    if grid.len() < 4 {
        return Err(Error::domain("verify_growth: need at least 4 grid points"));
    }
    let exponent = 2.0 + model.alpha() - (k1 + k2) as f64;
    let mut ratios = Vec::with_capacity(grid.len());
    for &m in grid {
        if !(m >= 0.0) {
            return Err(Error::domain("verify_growth: |z| grid must be nonnegative"));
        }
        let z = Complex64::new(m, 0.0); // gauge invariance: magnitude suffices
        let deriv = model.wirtinger_magnitude(z, k1, k2)?;
        ratios.push(deriv / (1.0 + m).powf(exponent));
    }
    slope_report(grid, &ratios)
}

/// Smallest `C` with `V(z) >= -C (1+|z|)^beta` on the grid, and whether the
/// required constant stays bounded as `|z|` grows.
pub fn defocusing_check<Vf: Fn(Complex64) -> f64>(
    v: Vf,
    beta: f64,
    grid: &[f64],
) -> Result<GrowthReport> {
    if grid.len() < 4 {
        return Err(Error::domain("defocusing_check: need at least 4 grid points"));
    }
    let mut ratios = Vec::with_capacity(grid.len());
    for &m in grid {
        let neg = (-v(Complex64::new(m, 0.0))).max(0.0);
        ratios.push(neg / (1.0 + m).powf(beta));
    }
    slope_report(grid, &ratios)
}

fn slope_report(grid: &[f64], ratios: &[f64]) -> Result<GrowthReport> {
    let fitted_c = ratios.iter().cloned().fold(0.0, f64::max);
    // Slope test on the top quarter of the grid, where transients from the
    // low-|z| region have died out; all-zero ratios trivially hold.
    let start = 3 * grid.len() / 4;
    let xs: Vec<f64> = grid[start..].iter().map(|&m| 1.0 + m).collect();
    let ys: Vec<f64> = ratios[start..].to_vec();
    let slope = if ys.iter().all(|&r| r > 0.0) {
        crate::bessel::fit_log_log(&ys, &xs)?.0
    } else {
        0.0
    };
    Ok(GrowthReport { holds: slope <= 0.05, fitted_c, slope })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
            .collect()
    }

    #[test]
    fn saturated_potential_values() {
        let m = NonlinearityModel::saturated(2.0).unwrap();
        assert!((m.potential(Complex64::new(0.0, 0.0)) - 0.5).abs() < 1e-15);
        assert!((m.potential(Complex64::new(1.0, 0.0)) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn quartic_potential_and_force() {
        let m = NonlinearityModel::pure_quartic();
        assert_eq!(m.potential(Complex64::new(0.0, 0.0)), 0.0);
        let f = m.force(Complex64::new(2.0, 0.0));
        assert!((f.re - 8.0).abs() < 1e-14 && f.im.abs() < 1e-15);
        assert_eq!(m.force(Complex64::new(0.0, 0.0)), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn saturated_force_value() {
        let m = NonlinearityModel::saturated(2.0).unwrap();
        let f = m.force(Complex64::new(1.0, 0.0));
        assert!((f.re - 2.0).abs() < 1e-14);
    }

    #[test]
    fn gauge_invariance_on_samples() {
        let models = [NonlinearityModel::saturated(1.3).unwrap(), NonlinearityModel::pure_quartic()];
        for m in &models {
            for k in 0..24 {
                let theta = 0.261799 * k as f64;
                let z = Complex64::new(0.7, -1.1);
                let rot = Complex64::from_polar(1.0, theta);
                assert!((m.potential(z * rot) - m.potential(z)).abs() < 1e-12);
                // force is equivariant: F(e^{i t} z) = e^{i t} F(z)
                assert!((m.force(z * rot) - rot * m.force(z)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn force_identity_on_grid() {
        let m = NonlinearityModel::saturated(2.0).unwrap();
        for &x in &[0.0, 0.3, 1.0, 2.5] {
            for &y in &[0.0, -0.4, 1.7] {
                let z = Complex64::new(x, y);
                let direct = z * m.g_prime(z.norm_sqr());
                assert!((m.force(z) - direct).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn exponent_validation() {
        assert!(NonlinearityModel::saturated(5.0).is_err());
        assert!(NonlinearityModel::saturated(0.0).is_err());
        let g: super::GEval = Arc::new(|r: Complex64| r * r * 0.5);
        assert!(NonlinearityModel::custom(g.clone(), 2.0, 1.0).is_err());
        assert!(NonlinearityModel::custom(g, 2.0, 4.0).is_err());
    }

    #[test]
    fn growth_bound_saturated() {
        let m = NonlinearityModel::saturated(2.0).unwrap();
        let grid = logspace(0.1, 1e3, 40);
        let rep = verify_growth(&m, (0, 0), &grid).unwrap();
        assert!(rep.holds);
        // (1/2)(1+|z|^2)^2 <= (1+|z|)^4 pointwise
        assert!(rep.fitted_c <= 1.0, "fitted C = {}", rep.fitted_c);
        for k in [(1, 0), (0, 1), (1, 1), (2, 0), (0, 2)] {
            assert!(verify_growth(&m, k, &grid).unwrap().holds, "order {k:?}");
        }
        assert!(verify_growth(&m, (2, 1), &grid).is_err());
    }

    #[test]
    fn growth_bound_quartic() {
        let m = NonlinearityModel::pure_quartic();
        let grid = logspace(0.1, 1e3, 40);
        let rep = verify_growth(&m, (0, 0), &grid).unwrap();
        assert!(rep.holds && rep.fitted_c <= 0.5 + 1e-12);
    }

    #[test]
    fn focusing_probe_fails_defocusing() {
        let grid = logspace(1.0, 1e4, 40);
        for beta in [2.0, 3.0, 3.9] {
            let rep = defocusing_check(|z| -0.5 * z.norm_sqr() * z.norm_sqr(), beta, &grid).unwrap();
            assert!(!rep.holds, "beta {beta} should fail, slope {}", rep.slope);
        }
        let rep = defocusing_check(|z| -0.5 * z.norm_sqr() * z.norm_sqr(), 4.0, &grid).unwrap();
        assert!(rep.holds);
    }

    #[test]
    fn builtin_families_nonnegative_on_sweep() {
        let models = [NonlinearityModel::saturated(3.0).unwrap(), NonlinearityModel::pure_quartic()];
        for m in &models {
            for &r in &logspace(1e-3, 1e3, 50) {
                assert!(m.potential(Complex64::new(r, 0.0)) >= 0.0);
            }
            assert!(m.certified_nonnegative());
        }
    }

    #[test]
    fn wirtinger_consistency_complex_step() {
        // dbar V = G'(|z|^2) z = F(z); check the custom complex-step G'
        // against the analytic built-in on a grid with |z| <= 10.
        let analytic = NonlinearityModel::saturated(2.0).unwrap();
        let g: super::GEval = Arc::new(|r: Complex64| {
            (Complex64::new(1.0, 0.0) + r).powf(2.0) * 0.5
        });
        let custom = NonlinearityModel::custom(g, 2.0, 2.0).unwrap();
        for &x in &[0.1, 0.5, 1.0, 3.0, 10.0] {
            let z = Complex64::new(x * 0.6, -x * 0.8);
            assert!((custom.force(z) - analytic.force(z)).norm() < 1e-8 * (1.0 + analytic.force(z).norm()));
        }
        // central-difference dbar of V matches F
        let h = 1e-6;
        for &x in &[0.3, 1.0, 4.0] {
            let z = Complex64::new(x, 0.5 * x);
            let dx = (analytic.potential(z + h) - analytic.potential(z - h)) / (2.0 * h);
            let dy = (analytic.potential(z + Complex64::new(0.0, h))
                - analytic.potential(z - Complex64::new(0.0, h)))
                / (2.0 * h);
            let dbar = Complex64::new(dx, dy) * 0.5;
            assert!((dbar - analytic.force(z)).norm() < 1e-7 * (1.0 + analytic.force(z).norm()));
        }
    }
}
