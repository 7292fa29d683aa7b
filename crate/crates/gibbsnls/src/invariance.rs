//! Statistical verification that the truncated Gibbs ensemble is invariant
//! under the truncated NLS flow: evolve a weighted ensemble, then compare
//! before/after weighted means (paired bootstrap z-scores) and marginal laws
//! (weighted two-sample KS with a bootstrap null) for a registry of
//! observables. A direct Liouville check measures the Jacobian determinant of
//! the flow map in real coordinates.

use crate::dynamics::{evolve, FlowDiagnostics, Integrator, StepControl};
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::measure::{integral_v, WeightedEnsemble};
use crate::nonlinearity::NonlinearityModel;
use crate::parallel;
use crate::stats::{
    bootstrap_se, effective_sample_size, weighted_ks_test, weighted_mean, KsTestReport,
};
use num_complex::Complex64;
use serde::Serialize;
use std::sync::Arc;

/// A named scalar functional of the field.
#[derive(Clone)]
pub struct Observable {
    pub name: String,
    pub eval: Arc<dyn Fn(&SpectralField) -> f64 + Send + Sync>,
}

impl Observable {
    pub fn new(
        name: impl Into<String>,
        eval: impl Fn(&SpectralField) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Observable { name: name.into(), eval: Arc::new(eval) }
    }
}

impl std::fmt::Debug for Observable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Observable").field("name", &self.name).finish()
    }
}

/// The default registry: `||u||_{L^2}^2`, `||u||_{H^sigma}^2`, the first
/// three mode energies `|c_n|^2`, `Re c_1`, and `\int V(u)`.
pub fn default_observables(model: &NonlinearityModel, sigma: f64) -> Vec<Observable> {
    let m = model.clone();
    let mut obs = vec![
        Observable::new("l2_norm_sq", |u| u.l2_norm_sq()),
        Observable::new("sobolev_norm_sq", move |u: &SpectralField| {
            let n = u.sobolev_norm(sigma);
            n * n
        }),
    ];
    for n in 1..=3 {
        obs.push(Observable::new(format!("mode_energy_{n}"), move |u: &SpectralField| {
            if u.truncation() >= n {
                u.hs_coeff(n).norm_sqr()
            } else {
                0.0
            }
        }));
    }
    obs.push(Observable::new("re_c1", |u: &SpectralField| {
        if u.truncation() >= 1 {
            u.hs_coeff(1).re
        } else {
            0.0
        }
    }));
    obs.push(Observable::new("potential", move |u: &SpectralField| integral_v(&m, u)));
    obs
}

/// Look up a subset of the default registry by name.
pub fn observables_by_name(
    model: &NonlinearityModel,
    sigma: f64,
    names: &[String],
) -> Result<Vec<Observable>> {
    let registry = default_observables(model, sigma);
    let known: Vec<String> = registry.iter().map(|o| o.name.clone()).collect();
    names
        .iter()
        .map(|name| {
            registry
                .iter()
                .find(|o| &o.name == name)
                .cloned()
                .ok_or_else(|| Error::UnknownObservable {
                    name: name.clone(),
                    registry: known.clone(),
                })
        })
        .collect()
}

/// Per-observable comparison of the ensemble before and after the flow.
#[derive(Clone, Debug, Serialize)]
pub struct ObservableReport {
    pub name: String,
    pub mean_before: f64,
    pub mean_after: f64,
    /// Paired z-score of the weighted mean shift, against a bootstrap SE.
    pub z_score: f64,
    pub ks: KsTestReport,
}

/// Outcome of a full invariance experiment.
#[derive(Clone, Debug, Serialize)]
pub struct InvarianceReport {
    pub n_modes: usize,
    pub sample_count: usize,
    pub flow_failures: usize,
    pub ess: f64,
    pub t_final: f64,
    pub dt: f64,
    pub max_l2_drift: f64,
    pub max_hamiltonian_drift: f64,
    pub max_fp_iters: usize,
    pub observables: Vec<ObservableReport>,
}

impl InvarianceReport {
    /// Largest |z| over observables.
    pub fn max_abs_z(&self) -> f64 {
        self.observables.iter().map(|o| o.z_score.abs()).fold(0.0, f64::max)
    }

    /// Smallest KS p-value over observables.
    pub fn min_ks_p(&self) -> f64 {
        self.observables.iter().map(|o| o.ks.p_value).fold(1.0, f64::min)
    }
}

/// Evolve every ensemble member and compare observable statistics.
///
/// Flow failures on more than 1% of the ensemble abort the experiment;
/// isolated failures drop the affected member from both sides of the
/// comparison. `boot_seed` keys the bootstrap streams only.
pub fn run_invariance_experiment(
    model: &NonlinearityModel,
    ensemble: &WeightedEnsemble,
    t_final: f64,
    dt: f64,
    integrator: Integrator,
    observables: &[Observable],
    bootstrap_resamples: usize,
    ks_resamples: usize,
    boot_seed: u64,
) -> Result<InvarianceReport> {
    if ensemble.is_empty() {
        return Err(Error::Experiment("empty ensemble".into()));
    }
    if observables.is_empty() {
        return Err(Error::Experiment("no observables registered".into()));
    }
    let ctrl = StepControl::default();
    let count = ensemble.len();
    let evolved: Vec<Result<(SpectralField, FlowDiagnostics)>> =
        parallel::map_indexed(count, |i| {
            let u0 = &ensemble.samples[i];
            evolve(model, u0, t_final, dt, integrator, 0, &ctrl)
                .map(|r| (r.final_field, r.diagnostics))
        });
    let flow_failures = evolved.iter().filter(|r| r.is_err()).count();
    if flow_failures * 100 > count {
        return Err(Error::Experiment(format!(
            "{flow_failures} of {count} trajectories failed (over the 1% budget)"
        )));
    }
    let mut weights = Vec::with_capacity(count - flow_failures);
    let mut before_fields = Vec::new();
    let mut after_fields = Vec::new();
    let mut max_l2_drift = 0.0_f64;
    let mut max_h_drift = 0.0_f64;
    let mut max_fp_iters = 0usize;
    for (i, item) in evolved.into_iter().enumerate() {
        if let Ok((field, diag)) = item {
            weights.push(ensemble.weights[i]);
            before_fields.push(ensemble.samples[i].clone());
            after_fields.push(field);
            max_l2_drift = max_l2_drift.max(diag.l2_drift);
            max_h_drift = max_h_drift.max(diag.hamiltonian_drift);
            max_fp_iters = max_fp_iters.max(diag.max_fp_iters);
        }
    }
    let mut reports = Vec::with_capacity(observables.len());
    for (k, obs) in observables.iter().enumerate() {
        let before: Vec<f64> = before_fields.iter().map(|u| (obs.eval)(u)).collect();
        let after: Vec<f64> = after_fields.iter().map(|u| (obs.eval)(u)).collect();
        let diffs: Vec<f64> = before.iter().zip(&after).map(|(b, a)| a - b).collect();
        let mean_before = weighted_mean(&before, &weights)?;
        let mean_after = weighted_mean(&after, &weights)?;
        let diff_mean = weighted_mean(&diffs, &weights)?;
        let se = bootstrap_se(
            &diffs,
            &weights,
            bootstrap_resamples,
            boot_seed.wrapping_add(k as u64),
            weighted_mean,
        )?;
        let z_score = if se > 0.0 { diff_mean / se } else { 0.0 };
        let ks = weighted_ks_test(
            &before,
            &weights,
            &after,
            &weights,
            ks_resamples,
            boot_seed.wrapping_add(1000 + k as u64),
        )?;
        reports.push(ObservableReport {
            name: obs.name.clone(),
            mean_before,
            mean_after,
            z_score,
            ks,
        });
    }
    Ok(InvarianceReport {
        n_modes: before_fields.first().map(|u| u.truncation()).unwrap_or(0),
        sample_count: count,
        flow_failures,
        ess: effective_sample_size(&weights),
        t_final,
        dt,
        max_l2_drift,
        max_hamiltonian_drift: max_h_drift,
        max_fp_iters,
        observables: reports,
    })
}

/// Determinant of a square matrix by LU with partial pivoting.
fn lu_determinant(mut m: Vec<Vec<f64>>) -> f64 {
    let n = m.len();
    let mut det = 1.0;
    for col in 0..n {
        let (pivot, _) = m
            .iter()
            .enumerate()
            .skip(col)
            .map(|(i, row)| (i, row[col].abs()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if m[pivot][col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            m.swap(pivot, col);
            det = -det;
        }
        det *= m[col][col];
        for row in col + 1..n {
            let factor = m[row][col] / m[col][col];
            for k in col..n {
                m[row][k] -= factor * m[col][k];
            }
        }
    }
    det
}

/// Jacobian determinant of the time-`t` flow map in real coordinates
/// `(Re a_1, Im a_1, ..., Re a_N, Im a_N)`, by forward differences.
///
/// The exact flow is volume-preserving (Liouville), so the determinant should
/// be `1` up to integrator and differencing error. Restricted to `N <= 4`:
/// the cost is `2N + 1` trajectories and the conditioning of forward
/// differences degrades with dimension.
pub fn liouville_volume_check(
    model: &NonlinearityModel,
    u0: &SpectralField,
    t_final: f64,
    dt: f64,
    integrator: Integrator,
) -> Result<f64> {
    let n = u0.truncation();
    if n == 0 || n > 4 {
        return Err(Error::domain("liouville_volume_check supports 1 <= N <= 4"));
    }
    let h = 1e-5;
    let ctrl = StepControl::default();
    let flow = |a: Vec<Complex64>| -> Result<Vec<f64>> {
        let u = SpectralField::from_plain(Arc::clone(u0.basis()), a, u0.s())?;
        let end = evolve(model, &u, t_final, dt, integrator, 0, &ctrl)?.final_field;
        Ok(end
            .plain_coeffs()
            .iter()
            .flat_map(|c| [c.re, c.im])
            .collect())
    };
    let base = flow(u0.plain_coeffs().to_vec())?;
    let dim = 2 * n;
    let mut jac = vec![vec![0.0; dim]; dim];
    for j in 0..dim {
        let mut a = u0.plain_coeffs().to_vec();
        if j % 2 == 0 {
            a[j / 2].re += h;
        } else {
            a[j / 2].im += h;
        }
        let shifted = flow(a)?;
        for i in 0..dim {
            jac[i][j] = (shifted[i] - base[i]) / h;
        }
    }
    Ok(lu_determinant(jac))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bessel::build_basis_default;
    use crate::field::{default_s, CutoffChi};
    use crate::measure::{sample_gibbs, SamplerMode};

    #[test]
    fn registry_names_and_lookup() {
        let model = NonlinearityModel::pure_quartic();
        let obs = default_observables(&model, 0.45);
        let names: Vec<&str> = obs.iter().map(|o| o.name.as_str()).collect();
        assert_eq!(
            names,
            [
                "l2_norm_sq",
                "sobolev_norm_sq",
                "mode_energy_1",
                "mode_energy_2",
                "mode_energy_3",
                "re_c1",
                "potential"
            ]
        );
        let picked =
            observables_by_name(&model, 0.45, &["re_c1".into(), "potential".into()]).unwrap();
        assert_eq!(picked.len(), 2);
        let err = observables_by_name(&model, 0.45, &["bogus".into()]).unwrap_err();
        assert!(matches!(err, Error::UnknownObservable { .. }));
    }

    #[test]
    fn lu_determinant_cases() {
        assert!((lu_determinant(vec![vec![3.0]]) - 3.0).abs() < 1e-15);
        let m = vec![vec![0.0, 1.0], vec![1.0, 0.0]]; // needs pivoting
        assert!((lu_determinant(m) + 1.0).abs() < 1e-15);
        let rot = vec![vec![0.6, -0.8], vec![0.8, 0.6]];
        assert!((lu_determinant(rot) - 1.0).abs() < 1e-15);
        let singular = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert_eq!(lu_determinant(singular), 0.0);
    }

    #[test]
    fn liouville_determinant_near_one() {
        let model = NonlinearityModel::pure_quartic();
        let basis = Arc::new(build_basis_default(2).unwrap());
        let s = default_s(model.alpha(), model.beta_defocus());
        let u0 = crate::measure::sample_free(&basis, 2, s, 17, 0).unwrap();
        let det =
            liouville_volume_check(&model, &u0, 0.02, 2e-3, Integrator::ImplicitMidpoint)
                .unwrap();
        assert!((det - 1.0).abs() < 1e-3, "det {det}");
    }

    #[test]
    fn liouville_rejects_large_truncation() {
        let model = NonlinearityModel::pure_quartic();
        let basis = Arc::new(build_basis_default(8).unwrap());
        let s = default_s(model.alpha(), model.beta_defocus());
        let u0 = crate::measure::sample_free(&basis, 8, s, 17, 0).unwrap();
        assert!(
            liouville_volume_check(&model, &u0, 0.01, 1e-3, Integrator::Strang).is_err()
        );
    }

    #[test]
    fn small_invariance_experiment_is_calibrated() {
        let model = NonlinearityModel::pure_quartic();
        let basis = Arc::new(build_basis_default(4).unwrap());
        let s = default_s(model.alpha(), model.beta_defocus());
        let chi = CutoffChi::default_for(&basis, 4);
        let ensemble =
            sample_gibbs(&model, &chi, &basis, 4, s, 23, 200, SamplerMode::Importance)
                .unwrap();
        let obs = default_observables(&model, 0.45);
        let report = run_invariance_experiment(
            &model,
            &ensemble,
            0.1,
            5e-3,
            Integrator::Strang,
            &obs,
            200,
            100,
            91,
        )
        .unwrap();
        assert_eq!(report.flow_failures, 0);
        // quartic importance weights are heavy-tailed; ESS well below the
        // sample count is expected, it just must not collapse
        assert!(report.ess > 10.0, "ess {}", report.ess);
        assert!(report.max_l2_drift < 1e-10);
        // invariance holds, so z-scores should be modest and p-values not tiny
        assert!(report.max_abs_z() < 4.0, "max |z| = {}", report.max_abs_z());
        assert!(report.min_ks_p() > 0.005, "min p = {}", report.min_ks_p());
    }

    #[test]
    fn zero_time_flow_is_exact_null() {
        let model = NonlinearityModel::pure_quartic();
        let basis = Arc::new(build_basis_default(4).unwrap());
        let s = default_s(model.alpha(), model.beta_defocus());
        let chi = CutoffChi::default_for(&basis, 4);
        let ensemble =
            sample_gibbs(&model, &chi, &basis, 4, s, 29, 100, SamplerMode::Importance)
                .unwrap();
        let obs = default_observables(&model, 0.45);
        let report = run_invariance_experiment(
            &model,
            &ensemble,
            0.0,
            1e-3,
            Integrator::ImplicitMidpoint,
            &obs,
            100,
            50,
            7,
        )
        .unwrap();
        for o in &report.observables {
            assert_eq!(o.z_score, 0.0, "{}", o.name);
            assert_eq!(o.ks.statistic, 0.0);
        }
    }
}
