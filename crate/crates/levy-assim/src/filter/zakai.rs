//! Explicit stepping of the nonlocal Zakai equation for continuous-time
//! observations `dY_t = h(X_t, t) dt + scale dW_t`,
//!
//! ```text
//! dp(x,t|Y) = A* p dt + gain * h(x,t) p dY_t,   dY_t ~ Y_{t+dt} - Y_t,
//! ```
//!
//! with `gain = 1/scale^2` the likelihood-consistent weighting of the
//! observation increments (for unit observation noise this is the plain
//! `h p dY` form). The marching field is unnormalized; it is renormalized
//! every `renormalize_every` steps for conditioning, with every divided-out
//! constant logged so the unnormalized solution stays reconstructible. This
//! per-step renormalization yields the same normalized posterior and the same
//! density argmax as the nonlinear (Kushner) form of the recursion.

use crate::density::{DensityEvolution, DensityField, Snapshot, SnapshotKind, StepDiagnostics};
use crate::error::{Error, Result};
use crate::filter::ObservationFn;
use crate::fp::stability_limit;
use crate::operator::{DriftFn, DriftScheme, OperatorMatrix};
use crate::stable::StableParams;

/// Cumulative continuous observation path on a uniform time grid.
#[derive(Debug, Clone)]
pub struct ContinuousObservationPath {
    times: Vec<f64>,
    values: Vec<f64>,
    obs_noise_scale: f64,
    h: ObservationFn,
}

impl ContinuousObservationPath {
    pub fn new(
        times: Vec<f64>,
        values: Vec<f64>,
        obs_noise_scale: f64,
        h: ObservationFn,
    ) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::AxisMismatch(
                "path times and values must have equal length".to_string(),
            ));
        }
        if times.len() < 2 {
            return Err(Error::InvalidParameter(
                "observation path needs at least two samples".to_string(),
            ));
        }
        let dt = times[1] - times[0];
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter(
                "path times must be increasing".to_string(),
            ));
        }
        for (k, w) in times.windows(2).enumerate() {
            if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(1.0) {
                return Err(Error::InvalidParameter(format!(
                    "path times must be uniform (gap {} at index {k} vs {dt})",
                    w[1] - w[0]
                )));
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "path values must be finite".to_string(),
            ));
        }
        if !(obs_noise_scale >= 0.0 && obs_noise_scale.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "observation noise scale must be nonnegative, got {obs_noise_scale}"
            )));
        }
        Ok(Self {
            times,
            values,
            obs_noise_scale,
            h,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dt_obs(&self) -> f64 {
        self.times[1] - self.times[0]
    }

    pub fn t_start(&self) -> f64 {
        self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn obs_noise_scale(&self) -> f64 {
        self.obs_noise_scale
    }

    pub fn observation_fn(&self) -> &ObservationFn {
        &self.h
    }

    pub fn increments(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// One explicit Zakai step on the unnormalized field:
/// `p <- p + dt A* p + gain h(x,t) p dY`.
///
/// Negatives are clipped with diagnostics, and the same blow-up guard as the
/// Fokker-Planck step applies.
#[allow(clippy::too_many_arguments)]
pub fn step_zakai(
    p: &DensityField,
    op: &OperatorMatrix,
    h: &ObservationFn,
    t: f64,
    dy: f64,
    dt: f64,
    gain: f64,
    diag: &mut StepDiagnostics,
) -> Result<DensityField> {
    if p.grid() != op.grid() {
        return Err(Error::AxisMismatch(
            "density and operator live on different grids".to_string(),
        ));
    }
    if !dy.is_finite() || !(dt >= 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "step requires finite dY and dt >= 0, got dY={dy}, dt={dt}"
        )));
    }
    let grid = *p.grid();
    let mut out = op.apply(p.values());
    out *= dt;
    for i in 0..grid.len() {
        out[i] += p.values()[i] * (1.0 + gain * h.eval(grid.node(i), t) * dy);
    }

    let prev_max = p.values().amax();
    if prev_max > 0.0 && out.amax() > 10.0 * prev_max {
        return Err(Error::Instability { t });
    }

    let mut negatives = vec![0.0; out.len()];
    let mut any = false;
    for (i, v) in out.iter_mut().enumerate() {
        if *v < 0.0 {
            negatives[i] = -*v;
            *v = 0.0;
            any = true;
        }
    }
    diag.record_clip(if any { grid.trapezoid(&negatives) } else { 0.0 });
    DensityField::new(grid, out)
}

/// March the Zakai equation across the whole observation path.
///
/// The solver step `dt` must divide the path resolution `dt_obs`; each
/// observation increment is apportioned linearly across its sub-steps.
/// Snapshots are stored renormalized every `store_stride` steps with the
/// accumulated log-normalization constant.
#[allow(clippy::too_many_arguments)]
pub fn run_zakai(
    p0: &DensityField,
    path: &ContinuousObservationPath,
    drift: &DriftFn,
    params: &StableParams,
    dt: f64,
    renormalize_every: usize,
    store_stride: usize,
) -> Result<DensityEvolution> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    if renormalize_every == 0 || store_stride == 0 {
        return Err(Error::InvalidParameter(
            "renormalize_every and store_stride must be >= 1".to_string(),
        ));
    }
    let scale = path.obs_noise_scale();
    if !(scale > 0.0) {
        return Err(Error::InvalidParameter(
            "filtering needs obs_noise_scale > 0 (the observation gain is h/scale^2)".to_string(),
        ));
    }
    let gain = 1.0 / (scale * scale);
    let dt_obs = path.dt_obs();
    let sub = (dt_obs / dt).round();
    if sub < 1.0 || (sub * dt - dt_obs).abs() > 1e-6 * dt_obs {
        return Err(Error::InvalidParameter(format!(
            "dt = {dt} must divide the observation resolution dt_obs = {dt_obs}"
        )));
    }
    let sub = sub as usize;

    let grid = *p0.grid();
    let mut op = OperatorMatrix::assemble(&grid, params, drift, path.t_start(), DriftScheme::Auto)?;
    let limit = stability_limit(&op);
    if dt > limit {
        return Err(Error::InvalidParameter(format!(
            "dt = {dt} exceeds the positivity stability limit {limit:.6e}"
        )));
    }

    let mut evo = DensityEvolution::new(grid);
    let mut diag = StepDiagnostics::default();
    let mut p = p0.clone();
    let mut log_acc = 0.0;
    let t0 = path.t_start();

    let store = |evo: &mut DensityEvolution, t: f64, p: &DensityField, log_acc: f64| -> Result<()> {
        let m = p.mass();
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::ZeroDensity);
        }
        evo.push(Snapshot {
            t,
            kind: SnapshotKind::State,
            values: p.values() / m,
            log_norm: log_acc + m.ln(),
        })
    };

    store(&mut evo, t0, &p, log_acc)?;

    let increments = path.increments();
    let h = path.observation_fn();
    let mut step_count: usize = 0;
    let total_steps = increments.len() * sub;
    for (j, dy_full) in increments.iter().enumerate() {
        let dy_sub = dy_full / sub as f64;
        for s in 0..sub {
            let t = t0 + (j * sub + s) as f64 * dt;
            if drift.is_time_dependent() {
                op.refresh_drift(drift, t);
            }
            p = step_zakai(&p, &op, h, t, dy_sub, dt, gain, &mut diag)?;
            step_count += 1;
            if step_count % renormalize_every == 0 {
                let m = p.mass();
                if !(m > 0.0 && m.is_finite()) {
                    return Err(Error::ZeroDensity);
                }
                log_acc += m.ln();
                *p.values_mut() /= m;
            }
            if step_count % store_stride == 0 || step_count == total_steps {
                let t_snap = if step_count == total_steps {
                    path.t_end()
                } else {
                    t0 + step_count as f64 * dt
                };
                store(&mut evo, t_snap, &p, log_acc)?;
            }
        }
    }
    evo.diagnostics = diag;
    Ok(evo)
}
