//! Ground-truth path simulation, synthetic observation generation, and the
//! bootstrap particle filter used as an independent verification oracle.
//!
//! All operations are deterministic in the scenario seed; state noise,
//! observation noise and particle noise draw from disjoint substreams.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::density::{DensityEvolution, DensityField, InitialDensity, Snapshot, SnapshotKind};
use crate::error::{Error, Result};
use crate::filter::{ContinuousObservationPath, DiscreteObservations, ObservationFn};
use crate::grid::Grid1D;
use crate::operator::DriftFn;
use crate::stable::{increment_scale, seeded_rng, standard_stable, StableParams, Substream};

/// Heavy-tail excursion guard: explicit Euler with a superlinear drift
/// overshoots once a jump lands far outside the wells, so runs are truncated
/// (flagged, not crashed) and particles are parked when |x| passes this.
pub const OVERFLOW_BOUND: f64 = 1e6;

/// A simulated state path with full provenance, regenerable bit-identically.
#[derive(Debug, Clone)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<f64>,
    pub seed: u64,
    pub params: StableParams,
    pub drift_name: String,
    pub dt: f64,
    /// Set when the overflow guard stopped the run early.
    pub truncated_at: Option<f64>,
}

impl Trajectory {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[f64] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// State at the node nearest to `t` (within half a step).
    pub fn state_at(&self, t: f64) -> Result<f64> {
        let idx = (t / self.dt).round();
        if idx < 0.0 || idx as usize >= self.len() || (t - idx * self.dt).abs() > 0.5 * self.dt {
            return Err(Error::InvalidParameter(format!(
                "time {t} is not on the trajectory grid (dt = {}, t_end = {})",
                self.dt,
                self.t_end()
            )));
        }
        Ok(self.states[idx as usize])
    }

    pub(crate) fn from_parts(
        times: Vec<f64>,
        states: Vec<f64>,
        seed: u64,
        params: StableParams,
        drift_name: String,
        dt: f64,
        truncated_at: Option<f64>,
    ) -> Self {
        Self {
            times,
            states,
            seed,
            params,
            drift_name,
            dt,
            truncated_at,
        }
    }
}

/// Euler-Maruyama simulation of `dX = f(X,t) dt + eps dL^alpha` from `x0`.
pub fn simulate_state(
    x0: f64,
    drift: &DriftFn,
    params: &StableParams,
    dt: f64,
    t_end: f64,
    seed: u64,
) -> Result<Trajectory> {
    if !(dt > 0.0 && dt.is_finite()) || !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "need dt > 0 and t_end >= 0, got dt={dt}, t_end={t_end}"
        )));
    }
    let n_steps = (t_end / dt).round() as usize;
    let scale = increment_scale(params, dt);
    let mut rng = seeded_rng(seed, Substream::StatePath);
    let mut times = Vec::with_capacity(n_steps + 1);
    let mut states = Vec::with_capacity(n_steps + 1);
    times.push(0.0);
    states.push(x0);
    let mut x = x0;
    let mut truncated_at = None;
    for k in 0..n_steps {
        let t = k as f64 * dt;
        let x_next = x + drift.eval(x, t) * dt + scale * standard_stable(params.alpha(), &mut rng);
        let t_next = (k + 1) as f64 * dt;
        if x_next.abs() > OVERFLOW_BOUND || !x_next.is_finite() {
            truncated_at = Some(t_next);
            break;
        }
        x = x_next;
        times.push(t_next);
        states.push(x);
    }
    Ok(Trajectory::from_parts(
        times,
        states,
        seed,
        *params,
        drift.name().to_string(),
        dt,
        truncated_at,
    ))
}

/// Discrete observations `y_k = h(x(t_k), t_k) + sqrt(r) v_k` at the given
/// times (snapped to the nearest trajectory node within half a step).
pub fn generate_discrete_obs(
    traj: &Trajectory,
    h: &ObservationFn,
    r: f64,
    obs_times: &[f64],
    seed: u64,
) -> Result<DiscreteObservations> {
    let mut rng = seeded_rng(seed, Substream::DiscreteObs);
    let mut times = Vec::with_capacity(obs_times.len());
    let mut values = Vec::with_capacity(obs_times.len());
    for &t in obs_times {
        let x = traj.state_at(t)?;
        let t_snap = (t / traj.dt).round() * traj.dt;
        let z: f64 = StandardNormal.sample(&mut rng);
        times.push(t_snap);
        values.push(h.eval(x, t_snap) + r.sqrt() * z);
    }
    let variances = vec![r; times.len()];
    DiscreteObservations::new(times, values, variances, h.clone())
}

/// Cumulative continuous observation path `dY = h(X,t) dt + scale dW`
/// accumulated by left-endpoint Euler-Maruyama at resolution `dt` (a multiple
/// of the trajectory step), with `Y(0) = 0`.
pub fn generate_continuous_obs(
    traj: &Trajectory,
    h: &ObservationFn,
    obs_noise_scale: f64,
    dt: f64,
    seed: u64,
) -> Result<ContinuousObservationPath> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    let stride = (dt / traj.dt).round();
    if stride < 1.0 || (stride * traj.dt - dt).abs() > 1e-9 * dt {
        return Err(Error::InvalidParameter(format!(
            "observation step {dt} must be a multiple of the trajectory step {}",
            traj.dt
        )));
    }
    let stride = stride as usize;
    let n_obs = (traj.len() - 1) / stride;
    if n_obs < 1 {
        return Err(Error::InvalidParameter(
            "trajectory too short for one observation increment".to_string(),
        ));
    }
    let mut rng = seeded_rng(seed, Substream::ContinuousObs);
    let sqrt_dt = dt.sqrt();
    let mut times = Vec::with_capacity(n_obs + 1);
    let mut values = Vec::with_capacity(n_obs + 1);
    times.push(0.0);
    values.push(0.0);
    let mut y = 0.0;
    for j in 0..n_obs {
        let idx = j * stride;
        let t = traj.times()[idx];
        let z: f64 = StandardNormal.sample(&mut rng);
        y += h.eval(traj.states()[idx], t) * dt + obs_noise_scale * sqrt_dt * z;
        times.push((j + 1) as f64 * dt);
        values.push(y);
    }
    ContinuousObservationPath::new(times, values, obs_noise_scale, h.clone())
}

/// Weighted particle cloud at one time.
#[derive(Debug, Clone)]
pub struct ParticleEnsemble {
    pub t: f64,
    positions: Vec<f64>,
    weights: Vec<f64>,
}

impl ParticleEnsemble {
    pub fn new(t: f64, positions: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if positions.len() != weights.len() {
            return Err(Error::AxisMismatch(
                "positions and weights must have equal length".to_string(),
            ));
        }
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0 && sum.is_finite()) {
            return Err(Error::WeightCollapse);
        }
        let weights = weights.iter().map(|w| w / sum).collect();
        Ok(Self {
            t,
            positions,
            weights,
        })
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    /// Normalized weights (sum exactly one up to rounding).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Effective sample size `1 / sum w_i^2`.
    pub fn ess(&self) -> f64 {
        1.0 / self.weights.iter().map(|w| w * w).sum::<f64>()
    }

    /// Normalized histogram projection onto the grid (linear binning).
    pub fn histogram(&self, grid: &Grid1D) -> Result<DensityField> {
        let mut f = histogram_density(grid, &self.positions, &self.weights)?;
        f.normalize()?;
        Ok(f)
    }
}

/// Linear-binning (cloud-in-cell) histogram of weighted samples as a density
/// on the grid. Samples outside the domain are dropped, so with probability
/// weights the result is a sub-probability density matching the absorbing
/// truncation of the grid solvers.
pub fn histogram_density(grid: &Grid1D, positions: &[f64], weights: &[f64]) -> Result<DensityField> {
    if positions.len() != weights.len() {
        return Err(Error::AxisMismatch(
            "positions and weights must have equal length".to_string(),
        ));
    }
    let n = grid.len();
    let dx = grid.dx();
    let mut values = nalgebra::DVector::zeros(n);
    for (&x, &w) in positions.iter().zip(weights) {
        if x < grid.x_min() || x > grid.x_max() {
            continue;
        }
        let pos = ((x - grid.x_min()) / dx).min((n - 1) as f64 - 1e-9).max(0.0);
        let i0 = pos.floor() as usize;
        let frac = pos - i0 as f64;
        values[i0] += w * (1.0 - frac) / dx;
        values[i0 + 1] += w * frac / dx;
    }
    DensityField::new(*grid, values)
}

/// Bootstrap particle-filter output: weighted ensembles at observation (or
/// requested snapshot) times, plus non-fatal warnings such as low effective
/// sample size.
#[derive(Debug)]
pub struct ParticleFilterOutput {
    pub ensembles: Vec<ParticleEnsemble>,
    pub warnings: Vec<String>,
}

fn sample_init<R: Rng + ?Sized>(init: &InitialDensity, n: usize, rng: &mut R) -> Vec<f64> {
    (0..n)
        .map(|_| match *init {
            InitialDensity::Gaussian { center, sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                center + sigma * z
            }
            InitialDensity::Uniform { a, b } => a + (b - a) * rng.random::<f64>(),
            InitialDensity::PointMass { at } => at,
        })
        .collect()
}

fn systematic_resample<R: Rng + ?Sized>(
    positions: &mut Vec<f64>,
    weights: &[f64],
    rng: &mut R,
) {
    let n = positions.len();
    let u0: f64 = rng.random::<f64>() / n as f64;
    let mut out = Vec::with_capacity(n);
    let mut cum = weights[0];
    let mut i = 0;
    for k in 0..n {
        let target = u0 + k as f64 / n as f64;
        while cum < target && i + 1 < n {
            i += 1;
            cum += weights[i];
        }
        out.push(positions[i]);
    }
    *positions = out;
}

fn normalized_weights(log_weights: &[f64]) -> Result<Vec<f64>> {
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::WeightCollapse);
    }
    let mut w: Vec<f64> = log_weights.iter().map(|lw| (lw - max).exp()).collect();
    let sum: f64 = w.iter().sum();
    if !(sum > 0.0 && sum.is_finite()) {
        return Err(Error::WeightCollapse);
    }
    w.iter_mut().for_each(|v| *v /= sum);
    Ok(w)
}

fn ess_of(weights: &[f64]) -> f64 {
    1.0 / weights.iter().map(|w| w * w).sum::<f64>()
}

struct ParticleState {
    positions: Vec<f64>,
    log_weights: Vec<f64>,
}

impl ParticleState {
    fn propagate<R: Rng + ?Sized>(
        &mut self,
        drift: &DriftFn,
        params: &StableParams,
        t: f64,
        dt: f64,
        rng: &mut R,
    ) {
        let scale = increment_scale(params, dt);
        let alpha = params.alpha();
        for x in self.positions.iter_mut() {
            if x.abs() >= OVERFLOW_BOUND {
                continue; // parked: a heavy-tail overshoot already killed it
            }
            let noise = scale * standard_stable(alpha, rng);
            let x_next = *x + drift.eval(*x, t) * dt + noise;
            *x = if x_next.is_finite() {
                x_next.clamp(-OVERFLOW_BOUND, OVERFLOW_BOUND)
            } else {
                OVERFLOW_BOUND
            };
        }
    }

    fn maybe_resample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<(f64, bool)> {
        let w = normalized_weights(&self.log_weights)?;
        let ess = ess_of(&w);
        let n = self.positions.len();
        if ess < n as f64 / 2.0 {
            systematic_resample(&mut self.positions, &w, rng);
            self.log_weights.iter_mut().for_each(|lw| *lw = 0.0);
            Ok((ess, true))
        } else {
            Ok((ess, false))
        }
    }

    fn ensemble(&self, t: f64) -> Result<ParticleEnsemble> {
        ParticleEnsemble::new(t, self.positions.clone(), normalized_weights(&self.log_weights)?)
    }
}

/// Bootstrap particle filter for discrete observations: propagate with the
/// state dynamics, weight by the Gaussian likelihood at each observation,
/// resample systematically when the effective sample size drops below `n/2`.
/// Returns the weighted ensemble at every observation time.
pub fn bootstrap_particle_filter_discrete(
    obs: &DiscreteObservations,
    drift: &DriftFn,
    params: &StableParams,
    init: &InitialDensity,
    n_particles: usize,
    dt: f64,
    seed: u64,
) -> Result<ParticleFilterOutput> {
    if n_particles < 100 {
        return Err(Error::InvalidParameter(format!(
            "particle filter needs at least 100 particles, got {n_particles}"
        )));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    let mut rng = seeded_rng(seed, Substream::Particles);
    let mut state = ParticleState {
        positions: sample_init(init, n_particles, &mut rng),
        log_weights: vec![0.0; n_particles],
    };
    let mut out = ParticleFilterOutput {
        ensembles: Vec::with_capacity(obs.len()),
        warnings: Vec::new(),
    };
    let h = obs.observation_fn();
    let mut t_cur = 0.0;
    for k in 0..obs.len() {
        let t_k = obs.times()[k];
        if t_k > t_cur {
            let n_sub = ((t_k - t_cur) / dt).round().max(1.0) as usize;
            let sub_dt = (t_k - t_cur) / n_sub as f64;
            for s in 0..n_sub {
                state.propagate(drift, params, t_cur + s as f64 * sub_dt, sub_dt, &mut rng);
            }
            t_cur = t_k;
        }
        let (y, r) = (obs.values()[k], obs.variances()[k]);
        for (x, lw) in state.positions.iter().zip(state.log_weights.iter_mut()) {
            let d = y - h.eval(*x, t_k);
            *lw += -0.5 * d * d / r;
        }
        out.ensembles.push(state.ensemble(t_k)?);
        let (ess, _) = state.maybe_resample(&mut rng)?;
        if ess < 10.0 {
            out.warnings
                .push(format!("weight collapse risk at t={t_k}: ess={ess:.2}"));
        }
    }
    Ok(out)
}

/// Bootstrap particle filter for a continuous observation path: weights carry
/// the Girsanov increment `(h dY - h^2 dt / 2) / scale^2` per step. Ensembles
/// are stored at the requested snapshot times (nearest path node).
pub fn bootstrap_particle_filter_continuous(
    path: &ContinuousObservationPath,
    drift: &DriftFn,
    params: &StableParams,
    init: &InitialDensity,
    n_particles: usize,
    snapshot_times: &[f64],
    seed: u64,
) -> Result<ParticleFilterOutput> {
    if n_particles < 100 {
        return Err(Error::InvalidParameter(format!(
            "particle filter needs at least 100 particles, got {n_particles}"
        )));
    }
    let scale = path.obs_noise_scale();
    if !(scale > 0.0) {
        return Err(Error::InvalidParameter(
            "continuous-observation weights need obs_noise_scale > 0".to_string(),
        ));
    }
    let gain = 1.0 / (scale * scale);
    let dt = path.dt_obs();
    let h = path.observation_fn();
    let mut rng = seeded_rng(seed, Substream::Particles);
    let mut state = ParticleState {
        positions: sample_init(init, n_particles, &mut rng),
        log_weights: vec![0.0; n_particles],
    };
    let mut out = ParticleFilterOutput {
        ensembles: Vec::with_capacity(snapshot_times.len()),
        warnings: Vec::new(),
    };
    let mut snap_iter = snapshot_times.iter().copied().peekable();
    // snapshot requested at the path start
    while let Some(&ts) = snap_iter.peek() {
        if ts <= path.t_start() + 0.5 * dt {
            out.ensembles.push(state.ensemble(path.t_start())?);
            snap_iter.next();
        } else {
            break;
        }
    }
    let increments = path.increments();
    let mut low_ess_since: Option<f64> = None;
    for (j, dy) in increments.iter().enumerate() {
        let t = path.t_start() + j as f64 * dt;
        state.propagate(drift, params, t, dt, &mut rng);
        for (x, lw) in state.positions.iter().zip(state.log_weights.iter_mut()) {
            let hx = h.eval(*x, t);
            *lw += gain * (hx * dy - 0.5 * hx * hx * dt);
        }
        let t_next = path.t_start() + (j + 1) as f64 * dt;
        while let Some(&ts) = snap_iter.peek() {
            if (ts - t_next).abs() <= 0.5 * dt || (j + 1 == increments.len() && ts >= t_next) {
                out.ensembles.push(state.ensemble(t_next)?);
                snap_iter.next();
            } else {
                break;
            }
        }
        let (ess, _) = state.maybe_resample(&mut rng)?;
        if ess < 10.0 && low_ess_since.is_none() {
            low_ess_since = Some(t_next);
            out.warnings
                .push(format!("weight collapse risk at t={t_next}: ess={ess:.2}"));
        }
    }
    Ok(out)
}

/// Monte-Carlo density evolution: an ensemble of Euler-Maruyama paths started
/// from `init`, killed on leaving the grid domain (matching the absorbing
/// truncation of the grid solvers), projected to sub-probability histogram
/// densities at the requested times.
#[allow(clippy::too_many_arguments)]
pub fn mc_density_evolution(
    init: &InitialDensity,
    drift: &DriftFn,
    params: &StableParams,
    grid: &Grid1D,
    dt: f64,
    t_end: f64,
    n_samples: usize,
    snapshot_times: &[f64],
    seed: u64,
) -> Result<DensityEvolution> {
    if n_samples == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    let mut rng = seeded_rng(seed, Substream::Particles);
    let mut xs = sample_init(init, n_samples, &mut rng);
    let mut alive: Vec<bool> = xs
        .iter()
        .map(|&x| x >= grid.x_min() && x <= grid.x_max())
        .collect();
    let w = 1.0 / n_samples as f64;
    let scale = increment_scale(params, dt);
    let alpha = params.alpha();

    let mut evo = DensityEvolution::new(*grid);
    let mut store = |evo: &mut DensityEvolution, t: f64, xs: &[f64], alive: &[bool]| -> Result<()> {
        let pts: Vec<f64> = xs
            .iter()
            .zip(alive)
            .filter(|(_, &a)| a)
            .map(|(&x, _)| x)
            .collect();
        let ws = vec![w; pts.len()];
        let f = histogram_density(grid, &pts, &ws)?;
        evo.push(Snapshot {
            t,
            kind: SnapshotKind::State,
            values: f.values().clone(),
            log_norm: 0.0,
        })
    };

    let mut snaps: Vec<f64> = snapshot_times.to_vec();
    snaps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut snap_iter = snaps.into_iter().peekable();
    while let Some(&ts) = snap_iter.peek() {
        if ts <= 0.5 * dt {
            store(&mut evo, 0.0, &xs, &alive)?;
            snap_iter.next();
        } else {
            break;
        }
    }

    let n_steps = (t_end / dt).round() as usize;
    for k in 0..n_steps {
        let t = k as f64 * dt;
        for (x, a) in xs.iter_mut().zip(alive.iter_mut()) {
            if !*a {
                continue;
            }
            let x_next = *x + drift.eval(*x, t) * dt + scale * standard_stable(alpha, &mut rng);
            if !x_next.is_finite() || x_next < grid.x_min() || x_next > grid.x_max() {
                *a = false;
            } else {
                *x = x_next;
            }
        }
        let t_next = (k + 1) as f64 * dt;
        while let Some(&ts) = snap_iter.peek() {
            if (ts - t_next).abs() <= 0.5 * dt || (k + 1 == n_steps && ts >= t_next) {
                store(&mut evo, t_next, &xs, &alive)?;
                snap_iter.next();
            } else {
                break;
            }
        }
    }
    Ok(evo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stable::stable_from_uniforms;
    use approx::assert_relative_eq;

    fn dw_params() -> StableParams {
        StableParams::new(1.5, 0.24_f64.sqrt()).unwrap()
    }

    #[test]
    fn zero_noise_equilibrium_is_fixed() {
        let p = StableParams::new(1.5, 0.0).unwrap();
        let traj = simulate_state(-1.0, &DriftFn::double_well(), &p, 1e-3, 1.0, 4).unwrap();
        assert!(traj.states().iter().all(|&x| x == -1.0));
        assert!(traj.truncated_at.is_none());
        assert_eq!(traj.len(), 1001);
    }

    #[test]
    fn zero_noise_basin_convergence_matches_ode_oracle() {
        let p = StableParams::new(1.5, 0.0).unwrap();
        let dt = 1e-3;
        let traj = simulate_state(0.5, &DriftFn::double_well(), &p, dt, 2.0, 4).unwrap();
        // monotone ascent into the +1 well
        for w in traj.states().windows(2) {
            assert!(w[1] >= w[0]);
        }
        // independent RK4 integration of dx/dt = 4(x - x^3)
        let f = |x: f64| 4.0 * (x - x * x * x);
        let mut x = 0.5;
        let hh = dt;
        for k in 0..traj.len() - 1 {
            let k1 = f(x);
            let k2 = f(x + 0.5 * hh * k1);
            let k3 = f(x + 0.5 * hh * k2);
            let k4 = f(x + hh * k3);
            x += hh / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if (k + 1) % 500 == 0 {
                assert!(
                    (traj.states()[k + 1] - x).abs() < 0.01,
                    "step {}: euler {} vs rk4 {x}",
                    k + 1,
                    traj.states()[k + 1]
                );
            }
        }
        assert!((traj.states().last().unwrap() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn driftless_endpoint_has_stable_characteristic_function() {
        // f = 0 makes x(1) = eps * L_1 exactly; check the empirical CF over
        // many seeded one-step paths.
        let p = StableParams::new(1.5, 1.0).unwrap();
        let n = 100_000;
        let mut xs = Vec::with_capacity(n);
        for seed in 0..n as u64 {
            let traj = simulate_state(0.0, &DriftFn::zero(), &p, 1.0, 1.0, seed).unwrap();
            xs.push(*traj.states().last().unwrap());
        }
        for xi in [0.5, 1.0] {
            let emp: f64 = xs.iter().map(|&x| (xi * x).cos()).sum::<f64>() / n as f64;
            let exact = (-xi.abs().powf(1.5)).exp();
            assert!((emp - exact).abs() < 0.02, "xi={xi}: {emp} vs {exact}");
        }
    }

    #[test]
    fn mirrored_noise_stream_mirrors_the_path() {
        // For an odd drift, negating the angle stream and the start point
        // yields the exactly mirrored path.
        let params = dw_params();
        let drift = DriftFn::double_well();
        let dt = 1e-3;
        let scale = increment_scale(&params, dt);
        let mut rng = seeded_rng(11, Substream::StatePath);
        let (mut x, mut z) = (-0.7, 0.7);
        for k in 0..2000 {
            let u1: f64 = rng.random();
            let u2: f64 = rng.random();
            let xi = stable_from_uniforms(params.alpha(), u1, u2);
            let xi_mirror = stable_from_uniforms(params.alpha(), 1.0 - u1, u2);
            let t = k as f64 * dt;
            x = x + drift.eval(x, t) * dt + scale * xi;
            z = z + drift.eval(z, t) * dt + scale * xi_mirror;
            assert_eq!(z, -x, "step {k}");
        }
    }

    #[test]
    fn discrete_obs_noise_moments_match() {
        let params = dw_params();
        let traj = simulate_state(-1.0, &DriftFn::double_well(), &params, 1e-3, 10.0, 21).unwrap();
        let obs_times: Vec<f64> = (1..=10_000).map(|k| k as f64 * 1e-3).collect();
        let r = 0.1;
        let obs =
            generate_discrete_obs(&traj, &ObservationFn::identity(), r, &obs_times, 21).unwrap();
        let resid: Vec<f64> = obs
            .values()
            .iter()
            .zip(obs.times())
            .map(|(&y, &t)| y - traj.state_at(t).unwrap())
            .collect();
        let n = resid.len() as f64;
        let mean = resid.iter().sum::<f64>() / n;
        let var = resid.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 3.0 * (r / n).sqrt(), "mean {mean}");
        assert!((var - r).abs() < 0.05 * r, "variance {var} vs {r}");
    }

    #[test]
    fn tiny_observation_noise_reproduces_h() {
        let params = dw_params();
        let traj = simulate_state(-1.0, &DriftFn::double_well(), &params, 1e-3, 1.0, 3).unwrap();
        let obs = generate_discrete_obs(
            &traj,
            &ObservationFn::identity(),
            1e-12,
            &[0.25, 0.5, 0.75],
            3,
        )
        .unwrap();
        for (&y, &t) in obs.values().iter().zip(obs.times()) {
            assert_relative_eq!(y, traj.state_at(t).unwrap(), epsilon = 1e-5);
        }
    }

    #[test]
    fn noise_free_path_is_left_riemann_integral() {
        let params = dw_params();
        let traj = simulate_state(-1.0, &DriftFn::double_well(), &params, 1e-3, 1.0, 8).unwrap();
        let path =
            generate_continuous_obs(&traj, &ObservationFn::identity(), 0.0, 1e-3, 8).unwrap();
        let mut acc = 0.0;
        for (j, &y) in path.values().iter().enumerate().skip(1) {
            acc += traj.states()[j - 1] * 1e-3;
            assert_relative_eq!(y, acc, epsilon = 1e-12);
        }
    }

    #[test]
    fn brownian_quadratic_variation_matches_scale() {
        let params = StableParams::new(1.5, 0.0).unwrap();
        let traj = simulate_state(0.0, &DriftFn::zero(), &params, 1e-3, 10.0, 5).unwrap();
        let scale = 0.05f64.sqrt();
        let path = generate_continuous_obs(&traj, &ObservationFn::zero(), scale, 1e-3, 5).unwrap();
        let qv: f64 = path.increments().iter().map(|d| d * d).sum();
        let expect = scale * scale * 10.0;
        assert!(
            (qv - expect).abs() < 0.05 * expect,
            "quadratic variation {qv} vs {expect}"
        );
    }

    #[test]
    fn observation_increments_pass_moment_checks() {
        // increments of Y - int h dt are iid N(0, scale^2 dt)
        let params = dw_params();
        let traj = simulate_state(-1.0, &DriftFn::double_well(), &params, 1e-3, 10.0, 13).unwrap();
        let scale = 0.05f64.sqrt();
        let path =
            generate_continuous_obs(&traj, &ObservationFn::identity(), scale, 1e-3, 13).unwrap();
        let dt = 1e-3;
        let noise: Vec<f64> = path
            .increments()
            .iter()
            .enumerate()
            .map(|(j, dy)| dy - traj.states()[j] * dt)
            .collect();
        let n = noise.len() as f64;
        let mean = noise.iter().sum::<f64>() / n;
        let var = noise.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n;
        let skew = noise.iter().map(|d| (d - mean).powi(3)).sum::<f64>() / n / var.powf(1.5);
        let kurt = noise.iter().map(|d| (d - mean).powi(4)).sum::<f64>() / n / (var * var);
        assert!((var - scale * scale * dt).abs() < 0.05 * scale * scale * dt);
        assert!(skew.abs() < 0.08, "skewness {skew}");
        assert!((kurt - 3.0).abs() < 0.25, "kurtosis {kurt}");
    }

    #[test]
    fn single_sharp_observation_concentrates_posterior() {
        let params = dw_params();
        let init = InitialDensity::Uniform { a: -2.0, b: 2.0 };
        // pick the observation at a position some particle can reach easily
        let obs = DiscreteObservations::new(
            vec![0.001],
            vec![0.5],
            vec![1e-8],
            ObservationFn::identity(),
        )
        .unwrap();
        let out = bootstrap_particle_filter_discrete(
            &obs,
            &DriftFn::double_well(),
            &params,
            &init,
            2000,
            1e-3,
            17,
        )
        .unwrap();
        let ens = &out.ensembles[0];
        let max_w = ens.weights().iter().copied().fold(0.0, f64::max);
        let best = ens.positions()[ens
            .weights()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0];
        assert!(max_w > 0.5, "posterior should concentrate, max weight {max_w}");
        assert!((best - 0.5).abs() < 0.05);
    }

    #[test]
    fn particle_counts_are_validated() {
        let obs =
            DiscreteObservations::new(vec![0.1], vec![0.0], vec![0.1], ObservationFn::identity())
                .unwrap();
        assert!(bootstrap_particle_filter_discrete(
            &obs,
            &DriftFn::double_well(),
            &dw_params(),
            &InitialDensity::PointMass { at: -1.0 },
            50,
            1e-3,
            1,
        )
        .is_err());
    }

    #[test]
    fn seed_determinism_across_operations() {
        let params = dw_params();
        let drift = DriftFn::double_well();
        let a = simulate_state(-1.0, &drift, &params, 1e-3, 1.0, 77).unwrap();
        let b = simulate_state(-1.0, &drift, &params, 1e-3, 1.0, 77).unwrap();
        assert_eq!(a.states(), b.states());
        let oa = generate_discrete_obs(&a, &ObservationFn::identity(), 0.1, &[0.5, 1.0], 77).unwrap();
        let ob = generate_discrete_obs(&b, &ObservationFn::identity(), 0.1, &[0.5, 1.0], 77).unwrap();
        assert_eq!(oa.values(), ob.values());
        // state path and observation noise come from different substreams
        assert_ne!(oa.values()[0], a.state_at(0.5).unwrap());
    }
}
