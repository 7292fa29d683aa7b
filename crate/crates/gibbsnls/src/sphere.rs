//! Exact zonal machinery on S^3: the basis `P_n = sqrt(2/pi) sin(n theta) /
//! sin theta`, the product expansion, the quadrilinear coefficient
//! `gamma = (2/pi) m` with `m` an exact integer, the Lemma-ihp sums, the
//! Wiener-chaos moment sums I1/I2, and the second Picard iterate `v_2` with
//! its fixed-time `H^sigma` and windowed discrete `X^{sigma,b}` moments.
//!
//! All gamma arithmetic stays in integers until the final `2/pi` scaling.

use crate::error::{Error, Result};
use crate::parallel;
use crate::quadrature::gauss_legendre;
use crate::rng;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

const I: Complex64 = Complex64::new(0.0, 1.0);
const TWO_OVER_PI: f64 = std::f64::consts::FRAC_2_PI;

/// `P_n(theta) = sqrt(2/pi) sin(n theta)/sin(theta)`, `theta` in `(0, pi)`.
pub fn zonal_eigenfunction(n: usize, theta: f64) -> f64 {
    (TWO_OVER_PI).sqrt() * (n as f64 * theta).sin() / theta.sin()
}

/// Indices in the expansion `P_k P_l = sqrt(2/pi) sum P_idx`:
/// `idx = |k-l| + 2j - 1` for `j = 1..min(k,l)`, each with unit multiplicity.
pub fn product_expand(k: usize, l: usize) -> Vec<usize> {
    let d = k.abs_diff(l);
    (1..=k.min(l)).map(|j| d + 2 * j - 1).collect()
}

/// `m` such that `gamma(n,n1,n2,n3) = (2/pi) m`, by coincidence counting on
/// the two product expansions (the definition made computable; used as the
/// oracle for the closed form).
pub fn gamma_m_by_expansion(n: usize, n1: usize, n2: usize, n3: usize) -> u64 {
    let a = product_expand(n, n3);
    let b = product_expand(n1, n2);
    let mut count = 0;
    for x in &a {
        if b.contains(x) {
            count += 1;
        }
    }
    count
}

/// Closed form for `m`: the expansions of `P_n P_{n3}` and `P_{n1} P_{n2}`
/// are arithmetic progressions of step 2, so the coincidence count is the
/// half-length of the interval overlap, and vanishes unless the parities of
/// the endpoints agree, i.e. `n + n1 + n2 + n3` is even.
pub fn gamma_m(n: usize, n1: usize, n2: usize, n3: usize) -> u64 {
    if (n + n1 + n2 + n3) % 2 != 0 {
        return 0;
    }
    let hi = (n + n3).min(n1 + n2) as i64;
    let lo = (n.abs_diff(n3)).max(n1.abs_diff(n2)) as i64;
    if hi > lo {
        ((hi - lo) / 2) as u64
    } else {
        0
    }
}

/// `gamma(n,n1,n2,n3)` as a float.
pub fn gamma(n: usize, n1: usize, n2: usize, n3: usize) -> f64 {
    TWO_OVER_PI * gamma_m(n, n1, n2, n3) as f64
}

/// Sparse table of nonzero `m` values for indices up to a bound.
#[derive(Clone, Debug)]
pub struct GammaTensor {
    pub max_index: usize,
    /// Entries `(n, n1, n2, n3, m)` with `n <= n1 <= n2 <= n3` (canonical
    /// order; `m` is fully symmetric).
    pub entries: Vec<(usize, usize, usize, usize, u64)>,
}

impl GammaTensor {
    pub fn build(max_index: usize) -> Self {
        let per_n: Vec<Vec<(usize, usize, usize, usize, u64)>> =
            parallel::map_indexed(max_index, |i| {
                let n = i + 1;
                let mut rows = Vec::new();
                for n1 in n..=max_index {
                    for n2 in n1..=max_index {
                        for n3 in n2..=max_index {
                            let m = gamma_m(n, n1, n2, n3);
                            if m > 0 {
                                rows.push((n, n1, n2, n3, m));
                            }
                        }
                    }
                }
                rows
            });
        GammaTensor { max_index, entries: per_n.into_iter().flatten().collect() }
    }

    /// Look up `m` for an arbitrary index order.
    pub fn m(&self, idx: [usize; 4]) -> u64 {
        let mut s = idx;
        s.sort_unstable();
        if s[3] > self.max_index {
            return 0;
        }
        self.entries
            .iter()
            .find(|e| (e.0, e.1, e.2, e.3) == (s[0], s[1], s[2], s[3]))
            .map(|e| e.4)
            .unwrap_or(0)
    }

    /// CSV `(n,n1,n2,n3,m)` of nonzero canonical entries.
    pub fn export_csv<W: std::io::Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "n,n1,n2,n3,m")?;
        for &(n, n1, n2, n3, m) in &self.entries {
            writeln!(out, "{n},{n1},{n2},{n3},{m}")?;
        }
        Ok(())
    }
}

/// A violation found by [`gamma_law_check`].
#[derive(Clone, Debug, Serialize)]
pub struct GammaViolation {
    pub tuple: [usize; 4],
    pub law: String,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct GammaLawReport {
    pub max_index: usize,
    pub tuples_checked: usize,
    pub quadrature_checks: usize,
    pub max_quadrature_error: f64,
    pub violations: Vec<GammaViolation>,
}

impl GammaLawReport {
    pub fn clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Direct quadrature of `int_0^pi P_n P_{n1} P_{n2} P_{n3} sin^2 theta dtheta`.
pub fn gamma_by_quadrature(n: usize, n1: usize, n2: usize, n3: usize) -> f64 {
    // integrand is a trig polynomial of degree ~ sum of indices
    let order = 2 * (n + n1 + n2 + n3) + 40;
    let (nodes, weights) = gauss_legendre(order, 0.0, std::f64::consts::PI);
    nodes
        .iter()
        .zip(&weights)
        .map(|(&th, &w)| {
            w * zonal_eigenfunction(n, th)
                * zonal_eigenfunction(n1, th)
                * zonal_eigenfunction(n2, th)
                * zonal_eigenfunction(n3, th)
                * th.sin().powi(2)
        })
        .sum()
}

/// Exhaustive verification of Lemmas l1/l2, permutation symmetry, and pairing
/// independence for indices `<= max_index`, plus random quadrature
/// cross-checks of the closed form.
pub fn gamma_law_check(max_index: usize, quadrature_checks: usize, seed: u64) -> Result<GammaLawReport> {
    if max_index > 40 {
        return Err(Error::domain("gamma_law_check: max_index must be <= 40"));
    }
    let mut violations = Vec::new();
    let mut tuples = 0usize;
    for n in 1..=max_index {
        for n1 in n..=max_index {
            for n2 in n1..=max_index {
                for n3 in n2..=max_index {
                    tuples += 1;
                    let t = [n, n1, n2, n3];
                    let m = gamma_m(n, n1, n2, n3);
                    if m > n as u64 {
                        violations.push(GammaViolation {
                            tuple: t,
                            law: "l1".into(),
                            detail: format!("m = {m} exceeds min index {n}"),
                        });
                    }
                    if n3 > n + n1 + n2 && m != 0 {
                        violations.push(GammaViolation {
                            tuple: t,
                            law: "l2".into(),
                            detail: format!("m = {m} beyond the triangle condition"),
                        });
                    }
                    // pairing independence and the expansion oracle: the
                    // closed form must agree with coincidence counting for
                    // both groupings (n,n3)x(n1,n2) and (n,n1)x(n2,n3)
                    let e1 = gamma_m_by_expansion(n, n1, n2, n3);
                    let e2 = gamma_m_by_expansion(n1, n, n2, n3);
                    if m != e1 || m != e2 {
                        violations.push(GammaViolation {
                            tuple: t,
                            law: "pairing".into(),
                            detail: format!("closed form {m}, pairings {e1}/{e2}"),
                        });
                    }
                    // permutation symmetry of the closed form
                    for perm in [[n1, n, n2, n3], [n2, n1, n, n3], [n3, n1, n2, n]] {
                        if gamma_m(perm[0], perm[1], perm[2], perm[3]) != m {
                            violations.push(GammaViolation {
                                tuple: t,
                                law: "symmetry".into(),
                                detail: format!("permutation {perm:?} disagrees"),
                            });
                        }
                    }
                }
            }
        }
    }
    let mut max_err = 0.0_f64;
    for k in 0..quadrature_checks {
        let pick = |slot: u64| -> usize {
            1 + (rng::unit_uniform(seed, k as u64, slot) * max_index as f64) as usize
        };
        let t = [pick(0).min(max_index), pick(1).min(max_index), pick(2).min(max_index), pick(3).min(max_index)];
        let exact = gamma(t[0], t[1], t[2], t[3]);
        let quad = gamma_by_quadrature(t[0], t[1], t[2], t[3]);
        let err = (exact - quad).abs();
        max_err = max_err.max(err);
        if err > 1e-8 {
            violations.push(GammaViolation {
                tuple: t,
                law: "quadrature".into(),
                detail: format!("closed form {exact:.12e} vs quadrature {quad:.12e}"),
            });
        }
    }
    Ok(GammaLawReport {
        max_index,
        tuples_checked: tuples,
        quadrature_checks,
        max_quadrature_error: max_err,
        violations,
    })
}

/// Outcome of the Lemma-ihp sum `S(alpha) = sum n^{2 sigma}(1+|n^2-alpha|)^{-beta}`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct IhpReport {
    pub alpha: f64,
    pub partial_sum: f64,
    pub tail_bound: f64,
    /// `S(alpha) / (1+|alpha|)^sigma`, the constant the lemma bounds.
    pub ratio: f64,
}

/// Partial sum of the Lemma-ihp series with an integral tail bound.
pub fn ihp_sum(sigma: f64, beta: f64, alpha: f64, n_max: usize) -> Result<IhpReport> {
    if !(sigma > 0.0 && sigma < 0.5) {
        return Err(Error::domain("ihp_sum: sigma must lie in (0, 1/2)"));
    }
    if !(beta < 1.0 && 2.0 * beta - 2.0 * sigma > 1.0) {
        return Err(Error::domain(format!(
            "ihp_sum: need 1/2 + sigma < beta < 1 for convergence; got beta = {beta}, 2*beta - 2*sigma = {}",
            2.0 * beta - 2.0 * sigma
        )));
    }
    if (n_max as f64).powi(2) < 4.0 * alpha.abs() {
        return Err(Error::domain(format!(
            "ihp_sum: n_max = {n_max} too small for the tail bound; need n_max^2 >= 4|alpha|"
        )));
    }
    let partial = parallel::sum_indexed(n_max, |i| {
        let n = (i + 1) as f64;
        n.powf(2.0 * sigma) / (1.0 + (n * n - alpha).abs()).powf(beta)
    });
    // beyond n_max: |n^2 - alpha| >= (3/4) n^2, so the terms are dominated by
    // (4/3)^beta x^{2 sigma - 2 beta}, integrable since 2 beta - 2 sigma > 1
    let p = 2.0 * beta - 2.0 * sigma;
    let tail = (4.0_f64 / 3.0).powf(beta) * (n_max as f64).powf(1.0 - p) / (p - 1.0);
    Ok(IhpReport {
        alpha,
        partial_sum: partial,
        tail_bound: tail,
        // the tail decays like n_max^{2 sigma - 2 beta + 1}, glacially for
        // beta near 1/2 + sigma; the lemma-constant ratio uses the partial
        // sum so a common n_max compares alpha-dependence, with the tail
        // reported separately
        ratio: partial / (1.0 + alpha.abs()).powf(sigma),
    })
}

/// Partial sums of the chaos moment majorants (9) and (8bis) with their
/// Cauchy increments from `n_max/2` to `n_max`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PicardSumsReport {
    pub sigma: f64,
    pub beta: f64,
    pub n_max: usize,
    pub i1: f64,
    pub i2: f64,
    pub i1_increment: f64,
    pub i2_increment: f64,
}

fn i1_partial(sigma: f64, beta: f64, n_max: usize) -> f64 {
    // sum over n1, n2, n3 <= n_max and the n-interval where gamma != 0,
    // using the n1 <-> n3 symmetry of the summand
    parallel::sum_indexed(n_max, |i| {
        let n1 = i + 1;
        let mut acc = 0.0;
        for n2 in 1..=n_max {
            for n3 in 1..=n1 {
                let mult = if n3 < n1 { 2.0 } else { 1.0 };
                let denom = (n1 * n2 * n3) as f64;
                let omega3 = (n1 * n1 + n3 * n3) as i64 - (n2 * n2) as i64;
                let lo = 1
                    .max(n1.abs_diff(n2) as i64 - n3 as i64 + 1)
                    .max(n3 as i64 - (n1 + n2) as i64 + 1) as usize;
                let hi = n1 + n2 + n3 - 1;
                // parity: n + n1 + n2 + n3 even
                let start = if (lo + n1 + n2 + n3) % 2 == 0 { lo } else { lo + 1 };
                let mut inner = 0.0;
                let mut n = start;
                while n <= hi {
                    let m = gamma_m(n, n1, n2, n3);
                    if m > 0 {
                        let g = TWO_OVER_PI * m as f64;
                        let detune = 1.0 + ((n * n) as i64 - omega3).unsigned_abs() as f64;
                        inner += (n as f64).powf(2.0 * sigma) * g * g
                            / (detune.powf(beta) * denom * denom);
                    }
                    n += 2;
                }
                acc += mult * inner;
            }
        }
        acc
    })
}

fn i2_partial(sigma: f64, beta: f64, n_max: usize) -> f64 {
    // factorized: A(n, k) = sum_{j <= n_max} gamma(n,j,j,k)/j^2, then
    // I2 = sum_{n,k} n^{2 sigma} (1+|k^2-n^2|)^{-beta} A(n,k)^2 / k^2
    let n_top = 3 * n_max;
    let a: Vec<Vec<f64>> = parallel::map_indexed(n_top, |i| {
        let n = i + 1;
        (1..=n_max)
            .map(|k| {
                let mut s = 0.0;
                for j in 1..=n_max {
                    let m = gamma_m(n, j, j, k);
                    if m > 0 {
                        s += TWO_OVER_PI * m as f64 / (j * j) as f64;
                    }
                }
                s
            })
            .collect()
    });
    let mut total = 0.0;
    for (i, row) in a.iter().enumerate() {
        let n = i + 1;
        for (ki, &ank) in row.iter().enumerate() {
            let k = ki + 1;
            if ank == 0.0 {
                continue;
            }
            let detune = 1.0 + ((k * k) as i64 - (n * n) as i64).unsigned_abs() as f64;
            total += (n as f64).powf(2.0 * sigma) / detune.powf(beta) * ank * ank
                / (k * k) as f64;
        }
    }
    total
}

pub fn picard_moment_sums(sigma: f64, beta: f64, n_max: usize) -> Result<PicardSumsReport> {
    if !(sigma < 0.5) {
        return Err(Error::domain("picard_moment_sums: sigma must be below 1/2"));
    }
    if n_max < 2 || n_max % 2 != 0 {
        if n_max == 1 {
            let i1 = i1_partial(sigma, beta, 1);
            let i2 = i2_partial(sigma, beta, 1);
            return Ok(PicardSumsReport { sigma, beta, n_max, i1, i2, i1_increment: i1, i2_increment: i2 });
        }
        return Err(Error::domain("picard_moment_sums: n_max must be 1 or even"));
    }
    let i1 = i1_partial(sigma, beta, n_max);
    let i2 = i2_partial(sigma, beta, n_max);
    let i1h = i1_partial(sigma, beta, n_max / 2);
    let i2h = i2_partial(sigma, beta, n_max / 2);
    Ok(PicardSumsReport {
        sigma,
        beta,
        n_max,
        i1,
        i2,
        i1_increment: i1 - i1h,
        i2_increment: i2 - i2h,
    })
}

/// A truncated zonal field `sum b_n P_n`.
#[derive(Clone, Debug)]
pub struct ZonalField {
    pub coeffs: Vec<Complex64>,
}

impl ZonalField {
    pub fn n_modes(&self) -> usize {
        self.coeffs.len()
    }

    /// Eigenvalue of `-Delta_{S^3}` for the 1-based mode index.
    pub fn eigenvalue(n: usize) -> f64 {
        (n * n) as f64 - 1.0
    }

    /// `||u||_{L^2_rad}^2 = sum |b_n|^2` (Parseval).
    pub fn l2_norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `H^sigma` norm with the `n^{2 sigma}` weights of Eq. (7).
    pub fn sobolev_norm_sq(&self, sigma: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| ((i + 1) as f64).powf(2.0 * sigma) * c.norm_sqr())
            .sum()
    }

    /// Pointwise value at `theta` in `(0, pi)`.
    pub fn eval(&self, theta: f64) -> Complex64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, &b)| b * zonal_eigenfunction(i + 1, theta))
            .sum()
    }
}

/// The Gaussians `g_n` of one sample, on the shared counter-based streams.
pub fn sphere_gaussians(n_modes: usize, master_seed: u64, sample: u64) -> Vec<Complex64> {
    (1..=n_modes)
        .map(|n| rng::complex_gaussian(master_seed, sample, n as u64))
        .collect()
}

/// First Picard iterate `u_1(t) = sum (g_n/n) e^{-i t n^2} P_n`.
pub fn sample_u1(n_modes: usize, master_seed: u64, sample: u64, t: f64) -> ZonalField {
    let g = sphere_gaussians(n_modes, master_seed, sample);
    ZonalField {
        coeffs: g
            .into_iter()
            .enumerate()
            .map(|(i, gn)| {
                let n = (i + 1) as f64;
                gn / n * (-I * (t * n * n)).exp()
            })
            .collect(),
    }
}

/// The second Picard correction at one time.
#[derive(Clone, Debug)]
pub struct PicardSample {
    pub gaussians: Vec<Complex64>,
    pub t: f64,
    /// `<v_2(t), P_n>` for `n = 1..3N`.
    pub v2_coeffs: Vec<Complex64>,
}

/// Exact Duhamel phase factor `E(t, Omega) = (e^{i Omega t} - 1)/(i Omega)`,
/// `E(t, 0) = t`.
pub fn duhamel_phase(t: f64, omega: i64) -> Complex64 {
    if omega == 0 {
        Complex64::new(t, 0.0)
    } else {
        let w = omega as f64;
        ((I * (w * t)).exp() - 1.0) / (I * w)
    }
}

/// Accumulate `sum gamma * g_{n1} conj(g_{n2}) g_{n3} / (n1 n2 n3) * E(t, n^2 - Omega_3)`
/// per output mode `n <= 3N`, the t-independent phases factored out.
fn v2_accumulate(g: &[Complex64], t: f64) -> Vec<Complex64> {
    let n_modes = g.len();
    let n_top = 3 * n_modes;
    // e^{i n^2 t} table for the E factors
    let phase_n2: Vec<Complex64> =
        (0..=n_top).map(|n| (I * (t * (n * n) as f64)).exp()).collect();
    parallel::map_indexed(n_top, |ni| {
        let n = ni + 1;
        let en2t = phase_n2[n];
        let mut acc = Complex64::new(0.0, 0.0);
        for n1 in 1..=n_modes {
            for n2 in 1..=n_modes {
                for n3 in 1..=n1 {
                    let m = gamma_m(n, n1, n2, n3);
                    if m == 0 {
                        continue;
                    }
                    let mult = if n3 < n1 { 2.0 } else { 1.0 };
                    let coef = mult * m as f64 / (n1 * n2 * n3) as f64
                        * (g[n1 - 1] * g[n2 - 1].conj() * g[n3 - 1]);
                    let omega3 = (n1 * n1 + n3 * n3) as i64 - (n2 * n2) as i64;
                    let omega = (n * n) as i64 - omega3;
                    // E(t, omega) with e^{i omega t} = e^{i n^2 t} e^{-i omega3 t}
                    let e = if omega == 0 {
                        Complex64::new(t, 0.0)
                    } else {
                        let eot = en2t * (-I * (t * omega3 as f64)).exp();
                        (eot - 1.0) / (I * omega as f64)
                    };
                    acc += coef * e;
                }
            }
        }
        acc
    })
}

/// `v_2(t)` coefficients: `<v_2(t), P_n> = -i (2/pi) e^{-i t n^2} *` the
/// accumulated chaos sum.
pub fn compute_v2(n_modes: usize, master_seed: u64, sample: u64, t: f64) -> Result<PicardSample> {
    if n_modes == 0 || n_modes > 64 {
        return Err(Error::domain("compute_v2: need 1 <= N <= 64"));
    }
    let g = sphere_gaussians(n_modes, master_seed, sample);
    let acc = v2_accumulate(&g, t);
    let v2_coeffs = acc
        .into_iter()
        .enumerate()
        .map(|(i, a)| {
            let n = (i + 1) as f64;
            -I * TWO_OVER_PI * (-I * (t * n * n)).exp() * a
        })
        .collect();
    Ok(PicardSample { gaussians: g, t, v2_coeffs })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum V2Mode {
    FixedTimeHsigma,
    DiscreteXsigmaB,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct V2MomentRow {
    pub n_modes: usize,
    pub estimate: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct V2MomentReport {
    pub sigma: f64,
    pub t: f64,
    pub mode: V2Mode,
    pub sample_count: usize,
    pub rows: Vec<V2MomentRow>,
    /// `estimate(N_{k+1}) - estimate(N_k)` between consecutive truncations.
    pub increments: Vec<f64>,
}

/// Windowed discrete `X^{sigma,b}` parameters (Design Decisions): `T = 1`,
/// `2^10` uniform time samples, raised-cosine window, `b = 0.55`.
pub const XSB_T: f64 = 1.0;
pub const XSB_GRID: usize = 1 << 10;
pub const XSB_B: f64 = 0.55;

fn raised_cosine(t: f64) -> f64 {
    if t.abs() >= XSB_T {
        0.0
    } else {
        0.5 * (1.0 + (std::f64::consts::PI * t / XSB_T).cos())
    }
}

/// Squared windowed discrete `X^{sigma,b}` norm of `v_2` for one sample.
fn v2_xsb_norm_sq(g: &[Complex64], sigma: f64) -> f64 {
    let n_modes = g.len();
    let n_top = 3 * n_modes;
    // accumulate S_n[omega3] = sum gamma g1 conj(g2) g3 / (n1 n2 n3) by the
    // integer detuning omega3 = n1^2 - n2^2 + n3^2 (t-independent)
    let omega3_min = 2 - (n_modes * n_modes) as i64;
    let omega3_span = (2 * n_modes * n_modes) as i64 - 1 - omega3_min + 1;
    let tables: Vec<Vec<Complex64>> = parallel::map_indexed(n_top, |ni| {
        let n = ni + 1;
        let mut s = vec![Complex64::new(0.0, 0.0); omega3_span as usize];
        for n1 in 1..=n_modes {
            for n2 in 1..=n_modes {
                for n3 in 1..=n1 {
                    let m = gamma_m(n, n1, n2, n3);
                    if m == 0 {
                        continue;
                    }
                    let mult = if n3 < n1 { 2.0 } else { 1.0 };
                    let coef = mult * m as f64 / (n1 * n2 * n3) as f64
                        * (g[n1 - 1] * g[n2 - 1].conj() * g[n3 - 1]);
                    let omega3 = (n1 * n1 + n3 * n3) as i64 - (n2 * n2) as i64;
                    s[(omega3 - omega3_min) as usize] += coef;
                }
            }
        }
        s
    });
    let grid = XSB_GRID;
    let dt = 2.0 * XSB_T / grid as f64;
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(grid);
    let mut total = 0.0;
    let mut buf = vec![rustfft::num_complex::Complex::<f64>::new(0.0, 0.0); grid];
    for (ni, table) in tables.iter().enumerate() {
        let n = ni + 1;
        // v2_n(t) e^{i t n^2} = sum_omega3 S[omega3] E(t, n^2 - omega3);
        // evaluate the trig series by per-frequency geometric recurrences
        let mut series = vec![Complex64::new(0.0, 0.0); grid];
        let t0 = -XSB_T;
        for (oi, &s) in table.iter().enumerate() {
            if s == Complex64::new(0.0, 0.0) {
                continue;
            }
            let omega = (n * n) as i64 - (oi as i64 + omega3_min);
            if omega == 0 {
                for (k, slot) in series.iter_mut().enumerate() {
                    *slot += s * (t0 + k as f64 * dt);
                }
            } else {
                let w = omega as f64;
                let d = s / (I * w);
                let step = (I * (w * dt)).exp();
                let mut ph = (I * (w * t0)).exp();
                for slot in series.iter_mut() {
                    *slot += d * (ph - 1.0);
                    ph *= step;
                }
            }
        }
        // window, restore the e^{-i t n^2} phase, DFT in t
        for (k, slot) in buf.iter_mut().enumerate() {
            let t = t0 + k as f64 * dt;
            let v = -I * TWO_OVER_PI * (-I * (t * (n * n) as f64)).exp() * series[k];
            let w = raised_cosine(t) * v;
            *slot = rustfft::num_complex::Complex::new(w.re, w.im);
        }
        fft.process(&mut buf);
        // frequency tau_j = pi * j, j = -grid/2 .. grid/2 - 1 (fftshift)
        let dtau = std::f64::consts::PI;
        let nsig = (n as f64).powf(2.0 * sigma);
        for (j, &c) in buf.iter().enumerate() {
            let jj = if j < grid / 2 { j as i64 } else { j as i64 - grid as i64 };
            let tau = dtau * jj as f64;
            let weight = (1.0 + (tau + (n * n) as f64).powi(2)).powf(XSB_B);
            total += nsig * weight * (c.norm_sqr() * dt * dt) * dtau / (2.0 * std::f64::consts::PI);
        }
    }
    total
}

/// Monte Carlo moments of `v_2` across truncations.
pub fn v2_moment(
    sigma: f64,
    n_list: &[usize],
    t: f64,
    sample_count: usize,
    master_seed: u64,
    mode: V2Mode,
) -> Result<V2MomentReport> {
    if !(sigma < 0.5) {
        return Err(Error::domain(
            "v2_moment: sigma must be below 1/2 (hypothesis of Proposition thm4)",
        ));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain("v2_moment: n_list must be strictly increasing"));
    }
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        if sample_count == 0 {
            continue;
        }
        let values = parallel::map_indexed(sample_count, |i| match mode {
            V2Mode::FixedTimeHsigma => {
                let sample = compute_v2(n, master_seed, i as u64, t).expect("valid N");
                ZonalField { coeffs: sample.v2_coeffs }.sobolev_norm_sq(sigma)
            }
            V2Mode::DiscreteXsigmaB => {
                let g = sphere_gaussians(n, master_seed, i as u64);
                v2_xsb_norm_sq(&g, sigma)
            }
        });
        let mean = values.iter().sum::<f64>() / sample_count as f64;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            / (sample_count as f64 - 1.0).max(1.0);
        rows.push(V2MomentRow {
            n_modes: n,
            estimate: mean,
            stderr: (var / sample_count as f64).sqrt(),
        });
    }
    let increments = rows.windows(2).map(|w| w[1].estimate - w[0].estimate).collect();
    Ok(V2MomentReport { sigma, t, mode, sample_count, rows, increments })
}

/// CSV for moment reports: `(N, sigma, estimate, stderr)`.
pub fn export_moment_csv<W: std::io::Write>(
    report: &V2MomentReport,
    out: &mut W,
) -> std::io::Result<()> {
    writeln!(out, "n_modes,sigma,estimate,stderr")?;
    for row in &report.rows {
        writeln!(
            out,
            "{},{:.17e},{:.17e},{:.17e}",
            row.n_modes, report.sigma, row.estimate, row.stderr
        )?;
    }
    Ok(())
}
