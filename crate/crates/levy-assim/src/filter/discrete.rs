//! Continuous-discrete filtering: the conditional density follows the
//! Fokker-Planck equation between observation instants and is multiplied by
//! the Gaussian observation likelihood (Bayes rule) at each instant,
//!
//! ```text
//! p(x, t_k | Y_k) = p(y_k | x) p(x, t_k | Y_{k-1}) / int p(y_k | xi) p(xi, t_k | Y_{k-1}) dxi.
//! ```
//!
//! Likelihoods are evaluated in log space and shifted by their maximum before
//! exponentiation, so the denominator cannot underflow for representable
//! inputs; a genuinely zero denominator (observation wildly inconsistent with
//! the prior support) is surfaced as an error.

use crate::density::{DensityEvolution, DensityField, Snapshot, SnapshotKind, StepDiagnostics};
use crate::error::{Error, Result};
use crate::filter::ObservationFn;
use crate::fp::{stability_limit, step_fp};
use crate::operator::{DriftFn, DriftScheme, OperatorMatrix};
use crate::stable::StableParams;

/// Discrete observation series `y_k = h(x_k, t_k) + sqrt(R_k) v_k`.
#[derive(Debug, Clone)]
pub struct DiscreteObservations {
    times: Vec<f64>,
    values: Vec<f64>,
    variances: Vec<f64>,
    h: ObservationFn,
}

impl DiscreteObservations {
    pub fn new(
        times: Vec<f64>,
        values: Vec<f64>,
        variances: Vec<f64>,
        h: ObservationFn,
    ) -> Result<Self> {
        if times.len() != values.len() || times.len() != variances.len() {
            return Err(Error::AxisMismatch(
                "observation times, values and variances must have equal length".to_string(),
            ));
        }
        for w in times.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidParameter(
                    "observation times must be strictly increasing".to_string(),
                ));
            }
        }
        // R_k = 0 degenerates the Gaussian likelihood to a point mass.
        for &r in &variances {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "observation noise variances must be positive, got {r}"
                )));
            }
        }
        if times.iter().any(|t| !t.is_finite()) || values.iter().any(|y| !y.is_finite()) {
            return Err(Error::InvalidParameter(
                "observation times and values must be finite".to_string(),
            ));
        }
        Ok(Self {
            times,
            values,
            variances,
            h,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn observation_fn(&self) -> &ObservationFn {
        &self.h
    }
}

/// Gaussian observation likelihood
/// `p(y|x) = (2 pi r)^(-1/2) exp(-(y - h(x,t))^2 / (2r))`.
pub fn gaussian_likelihood(y: f64, x: f64, t: f64, r: f64, h: &ObservationFn) -> f64 {
    let d = y - h.eval(x, t);
    (2.0 * std::f64::consts::PI * r).sqrt().recip() * (-0.5 * d * d / r).exp()
}

/// Bayes update: posterior proportional to likelihood times prior, normalized
/// on the grid.
pub fn bayes_update(
    prior: &DensityField,
    y: f64,
    t: f64,
    r: f64,
    h: &ObservationFn,
) -> Result<DensityField> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "observation variance must be positive, got {r}"
        )));
    }
    let grid = *prior.grid();
    let n = grid.len();
    let mut log_lik = Vec::with_capacity(n);
    let mut max_ll = f64::NEG_INFINITY;
    for i in 0..n {
        let d = y - h.eval(grid.node(i), t);
        let ll = -0.5 * d * d / r;
        if ll > max_ll {
            max_ll = ll;
        }
        log_lik.push(ll);
    }
    let mut values = prior.values().clone();
    for i in 0..n {
        values[i] *= (log_lik[i] - max_ll).exp();
    }
    let mut posterior = DensityField::new(grid, values)?;
    match posterior.normalize() {
        Ok(_) => Ok(posterior),
        Err(Error::ZeroDensity) => Err(Error::DegenerateEvidence { t }),
        Err(e) => Err(e),
    }
}

/// Run the continuous-discrete filter from `t = 0` to `t_end`.
///
/// Between observation instants the density is propagated by explicit
/// Fokker-Planck steps of size `dt` (snapshots every `store_stride` steps);
/// at each `t_k` both the propagated pre-update density and the normalized
/// posterior are stored, flagged by [`SnapshotKind`].
#[allow(clippy::too_many_arguments)]
pub fn run_cd_filter(
    p0: &DensityField,
    obs: &DiscreteObservations,
    drift: &DriftFn,
    params: &StableParams,
    dt: f64,
    t_end: f64,
    store_stride: usize,
) -> Result<DensityEvolution> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    if store_stride == 0 {
        return Err(Error::InvalidParameter("store_stride must be >= 1".into()));
    }
    if let (Some(first), Some(last)) = (obs.times().first(), obs.times().last()) {
        if *first < 0.0 || *last > t_end + 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "observation times [{first}, {last}] must lie within [0, {t_end}]"
            )));
        }
    }
    // dt must divide the inter-observation gaps (and the lead-in/run-out).
    let mut boundaries = vec![0.0];
    boundaries.extend_from_slice(obs.times());
    if t_end > *boundaries.last().unwrap() {
        boundaries.push(t_end);
    }
    for w in boundaries.windows(2) {
        let gap = w[1] - w[0];
        if gap > 0.0 {
            let steps = (gap / dt).round();
            if steps < 1.0 || (steps * dt - gap).abs() > 1e-6 * dt.max(gap) {
                return Err(Error::InvalidParameter(format!(
                    "dt = {dt} does not divide the observation gap [{}, {}]",
                    w[0], w[1]
                )));
            }
        }
    }

    let grid = *p0.grid();
    let mut op = OperatorMatrix::assemble(&grid, params, drift, 0.0, DriftScheme::Auto)?;
    let limit = stability_limit(&op);
    if dt > limit {
        return Err(Error::InvalidParameter(format!(
            "dt = {dt} exceeds the positivity stability limit {limit:.6e}"
        )));
    }

    let mut evo = DensityEvolution::new(grid);
    evo.push(Snapshot {
        t: 0.0,
        kind: SnapshotKind::State,
        values: p0.values().clone(),
        log_norm: 0.0,
    })?;

    let mut p = p0.clone();
    let mut diag = StepDiagnostics::default();
    let mut step_count: usize = 0;
    let mut t_cur = 0.0;

    let with_t = |e: Error, t: f64| match e {
        Error::Instability { .. } => Error::Instability { t },
        Error::DegenerateEvidence { .. } => Error::DegenerateEvidence { t },
        other => other,
    };

    let mut propagate_to = |p: &mut DensityField,
                            op: &mut OperatorMatrix,
                            t_from: f64,
                            t_to: f64,
                            step_count: &mut usize,
                            evo: &mut DensityEvolution,
                            diag: &mut StepDiagnostics|
     -> Result<()> {
        if t_to <= t_from {
            return Ok(());
        }
        let n_steps = ((t_to - t_from) / dt).round().max(1.0) as usize;
        for k in 0..n_steps {
            let t = t_from + k as f64 * dt;
            let t_next = if k + 1 == n_steps { t_to } else { t_from + (k + 1) as f64 * dt };
            if drift.is_time_dependent() {
                op.refresh_drift(drift, t);
            }
            *p = step_fp(p, op, t_next - t, diag).map_err(|e| with_t(e, t))?;
            *step_count += 1;
            if *step_count % store_stride == 0 && t_next < t_to {
                evo.push(Snapshot {
                    t: t_next,
                    kind: SnapshotKind::State,
                    values: p.values().clone(),
                    log_norm: 0.0,
                })?;
            }
        }
        Ok(())
    };

    for k in 0..obs.len() {
        let t_k = obs.times()[k];
        propagate_to(&mut p, &mut op, t_cur, t_k, &mut step_count, &mut evo, &mut diag)?;
        t_cur = t_k;
        evo.push(Snapshot {
            t: t_k,
            kind: SnapshotKind::PreUpdate,
            values: p.values().clone(),
            log_norm: 0.0,
        })?;
        p = bayes_update(
            &p,
            obs.values()[k],
            t_k,
            obs.variances()[k],
            obs.observation_fn(),
        )
        .map_err(|e| with_t(e, t_k))?;
        evo.push(Snapshot {
            t: t_k,
            kind: SnapshotKind::PostUpdate,
            values: p.values().clone(),
            log_norm: 0.0,
        })?;
    }
    if t_end > t_cur {
        propagate_to(&mut p, &mut op, t_cur, t_end, &mut step_count, &mut evo, &mut diag)?;
        evo.push(Snapshot {
            t: t_end,
            kind: SnapshotKind::State,
            values: p.values().clone(),
            log_norm: 0.0,
        })?;
    }
    evo.diagnostics = diag;
    Ok(evo)
}
