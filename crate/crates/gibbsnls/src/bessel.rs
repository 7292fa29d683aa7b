//! Radial Dirichlet eigenbasis of the unit disc.
//!
//! The basis functions are `e_n(r) = J0(z_n r) / ||J0(z_n .)||_{L2}`, where
//! `z_n` is the n-th positive zero of the order-zero Bessel function and the
//! disc norm is `||f||^2 = 2 pi \int_0^1 |f(r)|^2 r dr`. `J0` is evaluated by
//! power series for small arguments and by normalised backward recurrence
//! (Miller's algorithm) for large ones; both paths deliver absolute error
//! below `1e-13` on the ranges used here.

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;

use std::f64::consts::PI;

/// Crossover between the power series and the backward recurrence.
const SERIES_CUTOFF: f64 = 7.0;

fn j0_series(x: f64) -> f64 {
    // terms peak near m = x/2; for x <= 7 cancellation costs < 3e-14 absolute
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for m in 1..200 {
        term *= q / ((m * m) as f64);
        sum += term;
        if term.abs() < 1e-18 {
            break;
        }
    }
    sum
}

fn j1_series(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 0.5 * x;
    let mut sum = term;
    for m in 1..200 {
        term *= q / ((m * (m + 1)) as f64);
        sum += term;
        if term.abs() < 1e-18 {
            break;
        }
    }
    sum
}

/// `(J0(x), J1(x))` by Miller's normalised backward recurrence.
///
/// The downward recurrence `J_{k-1} = (2k/x) J_k - J_{k+1}` is stable and the
/// normalisation `J_0 + 2 \sum_{k even} J_k = 1` fixes the scale.
fn j0_j1_recurrence(x: f64) -> (f64, f64) {
    debug_assert!(x > 0.0);
    let start = ((x + 15.0 * x.sqrt() + 40.0) as usize) & !1; // even start index
    let mut fkp1 = 0.0_f64;
    let mut fk = 1e-300_f64;
    let mut f0 = 0.0;
    let mut f1 = 0.0;
    let mut norm = 0.0;
    for k in (1..=start).rev() {
        let fkm1 = (2.0 * k as f64 / x) * fk - fkp1;
        fkp1 = fk;
        fk = fkm1;
        if k - 1 >= 2 && (k - 1) % 2 == 0 {
            norm += 2.0 * fk;
        }
        if k - 1 == 1 {
            f1 = fk;
        }
        if k - 1 == 0 {
            f0 = fk;
        }
        if fk.abs() > 1e250 {
            let scale = 1e-250;
            fk *= scale;
            fkp1 *= scale;
            norm *= scale;
            f1 *= scale;
        }
    }
    norm += f0;
    (f0 / norm, f1 / norm)
}

/// Zero-order Bessel function of the first kind.
pub fn bessel_j0(x: f64) -> Result<f64> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::domain(format!("bessel_j0: argument {x} not a finite nonnegative real")));
    }
    if x <= SERIES_CUTOFF {
        Ok(j0_series(x))
    } else {
        Ok(j0_j1_recurrence(x).0)
    }
}

/// First-order Bessel function of the first kind.
pub fn bessel_j1(x: f64) -> Result<f64> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::domain(format!("bessel_j1: argument {x} not a finite nonnegative real")));
    }
    if x <= SERIES_CUTOFF {
        Ok(j1_series(x))
    } else {
        Ok(j0_j1_recurrence(x).1)
    }
}

/// First `count` positive zeros of `J0`, strictly increasing, refined to
/// machine accuracy.
///
/// Each zero is bracketed in `((n-1) pi, n pi + pi/4)`, bisected to `1e-6`
/// and polished by Newton with `J0' = -J1`.
pub fn bessel_zeros(count: usize) -> Result<Vec<f64>> {
    let mut zeros = Vec::with_capacity(count);
    for n in 1..=count {
        let mut lo = (n as f64 - 1.0) * PI;
        let mut hi = n as f64 * PI + PI / 4.0;
        if n == 1 {
            lo = 1.0; // J0 > 0 on [0, 1]; avoids the trivial positive endpoint
        }
        let mut flo = bessel_j0(lo)?;
        let fhi = bessel_j0(hi)?;
        debug_assert!(flo * fhi < 0.0, "bracket must straddle z_{n}");
        while hi - lo > 1e-6 {
            let mid = 0.5 * (lo + hi);
            let fmid = bessel_j0(mid)?;
            if flo * fmid <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
                flo = fmid;
            }
        }
        let mut z = 0.5 * (lo + hi);
        for _ in 0..30 {
            let f = bessel_j0(z)?;
            let df = -bessel_j1(z)?;
            let dz = f / df;
            z -= dz;
            if dz.abs() < 1e-15 * z {
                break;
            }
        }
        zeros.push(z);
    }
    Ok(zeros)
}

/// Precomputed eigenbasis data on a fixed Gauss–Legendre radial grid.
#[derive(Debug, Clone)]
pub struct BesselBasis {
    n_modes: usize,
    zeros: Vec<f64>,
    quad_nodes: Vec<f64>,
    quad_weights: Vec<f64>,
    /// `2 pi w_q r_q`, the disc measure factor folded into each node.
    disc_weights: Vec<f64>,
    /// Row-major `N x Q` table of `e_n(r_q)`.
    eigen_samples: Vec<f64>,
    /// `||J0(z_n .)||_{L2}` per mode.
    l2_raw_norms: Vec<f64>,
}

/// Default quadrature order for a given mode count.
pub fn default_quadrature_order(n_modes: usize) -> usize {
    4 * n_modes + 64
}

/// Build the basis with `n_modes` modes on a `quad_order`-point radial grid.
///
/// Fails if the grid cannot certify the Gram matrix to `1e-9`.
pub fn build_basis(n_modes: usize, quad_order: usize) -> Result<BesselBasis> {
    assert!(n_modes >= 1);
    let zeros = bessel_zeros(n_modes)?;
    let (quad_nodes, quad_weights) = gauss_legendre(quad_order, 0.0, 1.0);
    let disc_weights: Vec<f64> = quad_nodes
        .iter()
        .zip(&quad_weights)
        .map(|(&r, &w)| 2.0 * PI * w * r)
        .collect();

    let mut eigen_samples = vec![0.0; n_modes * quad_order];
    let mut l2_raw_norms = vec![0.0; n_modes];
    for n in 0..n_modes {
        let row = &mut eigen_samples[n * quad_order..(n + 1) * quad_order];
        for (q, &r) in quad_nodes.iter().enumerate() {
            row[q] = bessel_j0(zeros[n] * r)?;
        }
        let norm_sq: f64 = row
            .iter()
            .zip(&disc_weights)
            .map(|(&v, &dw)| dw * v * v)
            .sum();
        let norm = norm_sq.sqrt();
        l2_raw_norms[n] = norm;
        for v in row.iter_mut() {
            *v /= norm;
        }
    }

    let basis = BesselBasis {
        n_modes,
        zeros,
        quad_nodes,
        quad_weights,
        disc_weights,
        eigen_samples,
        l2_raw_norms,
    };
    basis.certify_orthogonality(1e-9)?;
    Ok(basis)
}

/// Build with the default quadrature order `4N + 64`.
pub fn build_basis_default(n_modes: usize) -> Result<BesselBasis> {
    build_basis(n_modes, default_quadrature_order(n_modes))
}

impl BesselBasis {
    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn quad_order(&self) -> usize {
        self.quad_nodes.len()
    }

    /// `z_n` for the 1-based mode index.
    pub fn zero(&self, n: usize) -> f64 {
        self.zeros[n - 1]
    }

    pub fn zeros(&self) -> &[f64] {
        &self.zeros
    }

    pub fn quad_nodes(&self) -> &[f64] {
        &self.quad_nodes
    }

    pub fn quad_weights(&self) -> &[f64] {
        &self.quad_weights
    }

    /// Disc measure factors `2 pi w_q r_q`.
    pub fn disc_weights(&self) -> &[f64] {
        &self.disc_weights
    }

    /// Sampled values `e_n(r_q)` for the 1-based mode index.
    pub fn eigen_row(&self, n: usize) -> &[f64] {
        let q = self.quad_order();
        &self.eigen_samples[(n - 1) * q..n * q]
    }

    /// `||J0(z_n .)||_{L2}` for the 1-based mode index.
    pub fn l2_raw_norm(&self, n: usize) -> f64 {
        self.l2_raw_norms[n - 1]
    }

    /// Pointwise evaluation of `e_n` (1-based).
    pub fn eigen_at(&self, n: usize, r: f64) -> Result<f64> {
        Ok(bessel_j0(self.zeros[n - 1] * r)? / self.l2_raw_norms[n - 1])
    }

    /// Radial derivative `e_n'(r) = -z_n J1(z_n r) / ||J0(z_n .)||` (1-based).
    pub fn eigen_derivative_at(&self, n: usize, r: f64) -> Result<f64> {
        let z = self.zeros[n - 1];
        Ok(-z * bessel_j1(z * r)? / self.l2_raw_norms[n - 1])
    }

    /// `<e_m, e_n>` under disc quadrature (1-based indices).
    pub fn inner_product(&self, m: usize, n: usize) -> f64 {
        let em = self.eigen_row(m);
        let en = self.eigen_row(n);
        em.iter()
            .zip(en)
            .zip(&self.disc_weights)
            .map(|((&a, &b), &dw)| dw * a * b)
            .sum()
    }

    fn certify_orthogonality(&self, tol: f64) -> Result<()> {
        for m in 1..=self.n_modes {
            for n in m..=self.n_modes {
                let ip = self.inner_product(m, n);
                let target = if m == n { 1.0 } else { 0.0 };
                if (ip - target).abs() > tol {
                    return Err(Error::QuadratureTooCoarse {
                        order: self.quad_order(),
                        m,
                        n,
                        value: (ip - target).abs(),
                        tol,
                    });
                }
            }
        }
        Ok(())
    }

    /// `L^p` norm of `e_n` on the disc; `p = f64::INFINITY` gives the sup norm.
    pub fn lp_norm(&self, n: usize, p: f64) -> Result<f64> {
        if n < 1 || n > self.n_modes {
            return Err(Error::domain(format!("mode index {n} out of 1..={}", self.n_modes)));
        }
        if p.is_infinite() {
            return Ok(self.sup_norm(n));
        }
        if p < 1.0 {
            return Err(Error::domain(format!("L^p exponent {p} below 1")));
        }
        let row = self.eigen_row(n);
        let integral: f64 = row
            .iter()
            .zip(&self.disc_weights)
            .map(|(&v, &dw)| dw * v.abs().powf(p))
            .sum();
        Ok(integral.powf(1.0 / p))
    }

    /// Sup norm: grid maximum plus golden-section refinement near the best
    /// node. `|J0|` attains its global maximum at the origin, so this equals
    /// `e_n(0) = 1 / ||J0(z_n .)||`.
    fn sup_norm(&self, n: usize) -> f64 {
        let row = self.eigen_row(n);
        let (best_q, _) = row
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
            .unwrap();
        let lo = if best_q == 0 { 0.0 } else { self.quad_nodes[best_q - 1] };
        let hi = if best_q + 1 == row.len() { 1.0 } else { self.quad_nodes[best_q + 1] };
        let refined = golden_max(|r| self.eigen_at(n, r).unwrap().abs(), lo, hi);
        let at_origin = 1.0 / self.l2_raw_norms[n - 1];
        refined.max(at_origin)
    }

    /// CSV rows `(n, z_n, L2, L4, Linf)` with 15 significant digits.
    pub fn export_csv<W: std::io::Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "n,z_n,l2_norm,l4_norm,linf_norm")?;
        for n in 1..=self.n_modes {
            let l2 = self.lp_norm(n, 2.0).expect("valid index");
            let l4 = self.lp_norm(n, 4.0).expect("valid index");
            let li = self.lp_norm(n, f64::INFINITY).expect("valid index");
            writeln!(out, "{},{:.14e},{:.14e},{:.14e},{:.14e}", n, self.zeros[n - 1], l2, l4, li)?;
        }
        Ok(())
    }
}

fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..80 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
        if b - a < 1e-12 {
            break;
        }
    }
    fc.max(fd)
}

/// Ordinary least-squares slope of `log(values)` against `log(xs)` and the
/// `r^2` of the fit.
///
/// Requires at least 10 points; [`fit_log_log`] is the same fit without the
/// floor, for short dilation grids.
pub fn asymptotic_exponent_fit(values: &[f64], xs: &[f64]) -> Result<(f64, f64)> {
    if values.len() < 10 {
        return Err(Error::domain("asymptotic_exponent_fit: need at least 10 points"));
    }
    fit_log_log(values, xs)
}

/// Unrestricted log-log least-squares fit: `(slope, r^2)`.
pub fn fit_log_log(values: &[f64], xs: &[f64]) -> Result<(f64, f64)> {
    if values.len() != xs.len() {
        return Err(Error::domain("fit_log_log: length mismatch"));
    }
    if values.len() < 2 {
        return Err(Error::domain("fit_log_log: need at least 2 points"));
    }
    if values.iter().chain(xs).any(|&v| !(v > 0.0)) {
        return Err(Error::domain("fit_log_log: all points must be positive"));
    }
    let n = values.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|&x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(&x, &y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|&y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::domain("asymptotic_exponent_fit: degenerate abscissae"));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok((slope, r_squared))
}

/// One row of the dilation table for the built-in radial bump.
#[derive(Debug, Clone, Copy)]
pub struct ScalingRow {
    pub lambda: f64,
    pub l4: f64,
    pub l2: f64,
    pub h1: f64,
}

fn bump(r: f64) -> f64 {
    let t = 2.0 * r;
    if t >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - t * t)).exp()
    }
}

fn bump_derivative(r: f64) -> f64 {
    let t = 2.0 * r;
    if t >= 1.0 {
        0.0
    } else {
        let den = 1.0 - t * t;
        bump(r) * (-8.0 * r / (den * den))
    }
}

/// Disc norms of the dilates `v_lambda(x) = v(lambda x)` of the built-in bump
/// `v(r) = exp(-1/(1-(2r)^2))` supported in `r < 1/2`.
pub fn scaling_counterexample(lambda_grid: &[f64]) -> Result<Vec<ScalingRow>> {
    let order = 200;
    let mut rows = Vec::with_capacity(lambda_grid.len());
    for &lambda in lambda_grid {
        if !(lambda >= 1.0) {
            return Err(Error::domain(format!("scaling_counterexample: lambda {lambda} must be >= 1")));
        }
        let support = 0.5 / lambda;
        let (r, w) = gauss_legendre(order, 0.0, support);
        let mut i2 = 0.0;
        let mut i4 = 0.0;
        let mut grad2 = 0.0;
        for (&rq, &wq) in r.iter().zip(&w) {
            let v = bump(lambda * rq);
            let dv = lambda * bump_derivative(lambda * rq);
            i2 += wq * rq * v * v;
            i4 += wq * rq * v.powi(4);
            grad2 += wq * rq * dv * dv;
        }
        let l2 = (2.0 * PI * i2).sqrt();
        let l4 = (2.0 * PI * i4).powf(0.25);
        let h1 = (2.0 * PI * (i2 + grad2)).sqrt();
        rows.push(ScalingRow { lambda, l4, l2, h1 });
    }
    Ok(rows)
}
