//! Sampling the free measure and the Gibbs measure on `E_N`.
//!
//! Free samples are the random series `phi_N = sum_{n<=N} (g_n / z_n) e_n`
//! with i.i.d. normalised complex Gaussians `g_n` drawn from counter-based
//! streams. The Gibbs measure reweights by
//! `f_N(u) = chi(||u||_{L2}) exp(-\int V(u))`, realised either by importance
//! weights or by rejection (valid when `V >= 0`, so `f_N <= 1`).

use crate::bessel::BesselBasis;
use crate::error::{Error, Result};
use crate::field::{CutoffChi, SpectralField};
use crate::nonlinearity::NonlinearityModel;
use crate::parallel;
use crate::rng;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

/// Draw one free-measure sample `phi_N` with `a_n = g_n / z_n`.
///
/// The Gaussian for mode `n` is keyed by `(master_seed, sample_index, n)`, so
/// truncations of the same sample share coefficients.
pub fn sample_free(
    basis: &Arc<BesselBasis>,
    n_modes: usize,
    s: f64,
    master_seed: u64,
    sample_index: u64,
) -> Result<SpectralField> {
    if n_modes > basis.n_modes() {
        return Err(Error::domain(format!(
            "truncation {n_modes} exceeds basis size {}",
            basis.n_modes()
        )));
    }
    let a: Vec<Complex64> = (1..=n_modes)
        .map(|n| rng::complex_gaussian(master_seed, sample_index, n as u64) / basis.zero(n))
        .collect();
    SpectralField::from_plain(Arc::clone(basis), a, s)
}

/// `\int_Theta V(u) = 2 pi sum_q w_q V(u(r_q)) r_q` by disc quadrature.
pub fn integral_v(model: &NonlinearityModel, u: &SpectralField) -> f64 {
    let values = u.synthesize();
    values
        .iter()
        .zip(u.basis().disc_weights())
        .map(|(&v, &dw)| dw * model.potential(v))
        .sum()
}

/// Gibbs density factor `f_N(u) = chi(||u||_{L2}) exp(-\int V(u))`.
pub fn gibbs_weight(model: &NonlinearityModel, chi: &CutoffChi, u: &SpectralField) -> f64 {
    let amp = chi.eval(u.l2_norm());
    if amp == 0.0 {
        return 0.0; // skip the quadrature outside the cutoff support
    }
    amp * (-integral_v(model, u)).exp()
}

/// How Gibbs samples were produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerMode {
    Importance,
    Rejection,
}

/// A Monte Carlo sample set with importance weights.
#[derive(Clone, Debug)]
pub struct WeightedEnsemble {
    pub samples: Vec<SpectralField>,
    pub weights: Vec<f64>,
    pub mode: SamplerMode,
    pub master_seed: u64,
}

impl WeightedEnsemble {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Effective sample size `(sum w)^2 / sum w^2`.
    pub fn ess(&self) -> f64 {
        let sw: f64 = self.weights.iter().sum();
        let sw2: f64 = self.weights.iter().map(|w| w * w).sum();
        if sw2 == 0.0 {
            0.0
        } else {
            sw * sw / sw2
        }
    }

    /// Self-normalised weighted mean of an observable.
    pub fn weighted_mean<F: Fn(&SpectralField) -> f64>(&self, f: F) -> f64 {
        let sw: f64 = self.weights.iter().sum();
        self.samples
            .iter()
            .zip(&self.weights)
            .map(|(u, &w)| w * f(u))
            .sum::<f64>()
            / sw
    }
}

/// Draw a `count`-sample ensemble from the Gibbs measure.
///
/// Importance mode draws from the free measure and attaches weights `f_N`.
/// Rejection mode requires a certified nonnegative potential (`f_N <= 1`) and
/// scans candidate indices deterministically, keeping accepted draws in
/// candidate order, so the ensemble does not depend on worker count.
#[allow(clippy::too_many_arguments)]
pub fn sample_gibbs(
    model: &NonlinearityModel,
    chi: &CutoffChi,
    basis: &Arc<BesselBasis>,
    n_modes: usize,
    s: f64,
    count: usize,
    master_seed: u64,
    mode: SamplerMode,
) -> Result<WeightedEnsemble> {
    match mode {
        SamplerMode::Importance => {
            let pairs = parallel::map_indexed(count, |i| {
                let u = sample_free(basis, n_modes, s, master_seed, i as u64)
                    .expect("validated truncation");
                let w = gibbs_weight(model, chi, &u);
                (u, w)
            });
            let (samples, weights): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
            if count > 0 && weights.iter().sum::<f64>() <= 0.0 {
                return Err(Error::domain(
                    "importance sampling produced an all-zero weight vector",
                ));
            }
            Ok(WeightedEnsemble { samples, weights, mode, master_seed })
        }
        SamplerMode::Rejection => {
            if !model.certified_nonnegative() {
                return Err(Error::Unsupported(
                    "rejection sampling needs a certified nonnegative potential (envelope f_N <= 1)"
                        .into(),
                ));
            }
            let mut samples = Vec::with_capacity(count);
            let mut candidate: u64 = 0;
            let batch = (4 * count.max(64)) as u64;
            let mut attempts: u64 = 0;
            while samples.len() < count {
                let lo = candidate;
                let hi = candidate + batch;
                candidate = hi;
                let accepted: Vec<(u64, SpectralField)> = parallel::map_indexed(
                    (hi - lo) as usize,
                    |j| {
                        let idx = lo + j as u64;
                        let u = sample_free(basis, n_modes, s, master_seed, idx)
                            .expect("validated truncation");
                        let f = gibbs_weight(model, chi, &u);
                        let accept = rng::unit_uniform(master_seed, idx, 0) < f;
                        (idx, u, accept)
                    },
                )
                .into_iter()
                .filter_map(|(idx, u, acc)| acc.then_some((idx, u)))
                .collect();
                samples.extend(accepted.into_iter().map(|(_, u)| u));
                attempts += batch;
                if attempts > 20_000 && (samples.len() as f64) < 1e-4 * attempts as f64 {
                    return Err(Error::domain(format!(
                        "rejection acceptance rate below 1e-4 ({} / {attempts})",
                        samples.len()
                    )));
                }
            }
            samples.truncate(count);
            Ok(WeightedEnsemble {
                weights: vec![1.0; samples.len()],
                samples,
                mode,
                master_seed,
            })
        }
    }
}

/// Metadata stored next to a persisted ensemble.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnsembleManifest {
    pub seed: u64,
    pub n_modes: usize,
    pub s: f64,
    pub cutoff_plateau: f64,
    pub cutoff_ramp: f64,
    pub family: String,
    pub alpha: f64,
    pub mode: SamplerMode,
    pub count: usize,
    pub ess: f64,
    /// `ln kappa_N = -N ln pi + (2 - 2s) sum ln z_n`, the normalisation of
    /// the coordinate density, reported as metadata only.
    pub ln_kappa_n: f64,
}

/// `ln kappa_N` for the truncated coordinate density.
pub fn ln_kappa_n(basis: &BesselBasis, n_modes: usize, s: f64) -> f64 {
    let log_prod: f64 = (1..=n_modes).map(|n| basis.zero(n).ln()).sum();
    -(n_modes as f64) * PI.ln() + (2.0 - 2.0 * s) * log_prod
}

impl WeightedEnsemble {
    /// CSV rows `(sample_index, n, Re a_n, Im a_n, weight)` with 17
    /// significant digits.
    pub fn export_csv<W: std::io::Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "sample_index,n,re_a,im_a,weight")?;
        for (i, (u, w)) in self.samples.iter().zip(&self.weights).enumerate() {
            for (j, c) in u.plain_coeffs().iter().enumerate() {
                writeln!(out, "{},{},{:.16e},{:.16e},{:.16e}", i, j + 1, c.re, c.im, w)?;
            }
        }
        Ok(())
    }

    pub fn manifest(
        &self,
        model: &NonlinearityModel,
        chi: &CutoffChi,
        n_modes: usize,
        s: f64,
    ) -> EnsembleManifest {
        let basis = self.samples.first().map(|u| u.basis());
        EnsembleManifest {
            seed: self.master_seed,
            n_modes,
            s,
            cutoff_plateau: chi.plateau,
            cutoff_ramp: chi.ramp,
            family: model.family_name().to_string(),
            alpha: model.alpha(),
            mode: self.mode,
            count: self.len(),
            ess: self.ess(),
            ln_kappa_n: basis.map(|b| ln_kappa_n(b, n_modes, s)).unwrap_or(f64::NAN),
        }
    }
}
