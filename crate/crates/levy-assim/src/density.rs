//! Probability density fields on a grid and time-indexed evolutions of them.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid1D;

/// Initial density specification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialDensity {
    Gaussian { center: f64, sigma: f64 },
    Uniform { a: f64, b: f64 },
    PointMass { at: f64 },
}

impl InitialDensity {
    /// Deterministic representative point (used as the default truth start in
    /// twin experiments): the Gaussian center, the uniform midpoint, or the
    /// point-mass location.
    pub fn center(&self) -> f64 {
        match self {
            InitialDensity::Gaussian { center, .. } => *center,
            InitialDensity::Uniform { a, b } => 0.5 * (a + b),
            InitialDensity::PointMass { at } => *at,
        }
    }
}

/// Density values on the nodes of a [`Grid1D`] at one time instant.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    grid: Grid1D,
    values: DVector<f64>,
    normalized: bool,
}

impl DensityField {
    pub fn new(grid: Grid1D, values: DVector<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::AxisMismatch(format!(
                "field has {} values for a {}-node grid",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self {
            grid,
            values,
            normalized: false,
        })
    }

    pub fn zeros(grid: Grid1D) -> Self {
        let n = grid.len();
        Self {
            grid,
            values: DVector::zeros(n),
            normalized: false,
        }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut DVector<f64> {
        self.normalized = false;
        &mut self.values
    }

    pub fn as_slice(&self) -> &[f64] {
        self.values.as_slice()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Trapezoidal mass of the field.
    pub fn mass(&self) -> f64 {
        self.grid.trapezoid(self.values.as_slice())
    }

    /// Rescale to unit trapezoidal mass; returns the mass that was divided
    /// out. Zero or non-finite mass is an error, not a silent pass.
    pub fn normalize(&mut self) -> Result<f64> {
        let m = self.mass();
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::ZeroDensity);
        }
        self.values /= m;
        self.normalized = true;
        Ok(m)
    }

    pub fn normalized_copy(&self) -> Result<Self> {
        let mut out = self.clone();
        out.normalize()?;
        Ok(out)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Construct a normalized initial density on the grid.
///
/// The point mass is a single-node spike of mass one (value `1/dx` at
/// interior nodes). The uniform density takes value `1/(b-a)` on every node
/// with `a <= x <= b`; when `a` and `b` are grid nodes its trapezoidal mass
/// is exactly one.
pub fn init_density(grid: &Grid1D, spec: &InitialDensity) -> Result<DensityField> {
    let n = grid.len();
    let mut values = DVector::zeros(n);
    match *spec {
        InitialDensity::Gaussian { center, sigma } => {
            if !(sigma > 0.0 && sigma.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "gaussian sigma must be positive, got {sigma}"
                )));
            }
            for i in 0..n {
                let z = (grid.node(i) - center) / sigma;
                values[i] = (-0.5 * z * z).exp();
            }
        }
        InitialDensity::Uniform { a, b } => {
            if !(a < b) {
                return Err(Error::InvalidParameter(format!(
                    "uniform support needs a < b, got [{a}, {b}]"
                )));
            }
            // Cell-averaged indicator: nodes strictly inside carry 1/(b-a),
            // a node sitting exactly on a support edge carries half of it,
            // and the trapezoidal mass comes out as one for grid-aligned
            // supports before the final renormalization.
            let height = 1.0 / (b - a);
            let half = 0.5 * grid.dx();
            for i in 0..n {
                let x = grid.node(i);
                let overlap = (b.min(x + half) - a.max(x - half)).clamp(0.0, grid.dx());
                values[i] = height * overlap / grid.dx();
            }
        }
        InitialDensity::PointMass { at } => {
            if at < grid.x_min() - 0.5 * grid.dx() || at > grid.x_max() + 0.5 * grid.dx() {
                return Err(Error::EmptySupport);
            }
            values[grid.nearest_node(at)] = 1.0 / grid.dx();
        }
    }
    let mut field = DensityField::new(*grid, values)?;
    match field.normalize() {
        Ok(_) => Ok(field),
        Err(Error::ZeroDensity) => Err(Error::EmptySupport),
        Err(e) => Err(e),
    }
}

/// What a stored snapshot represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SnapshotKind {
    /// A plain evolution frame (Fokker-Planck or Zakai step output).
    State,
    /// The propagated density just before a discrete observation.
    PreUpdate,
    /// The posterior just after a discrete observation.
    PostUpdate,
}

impl SnapshotKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SnapshotKind::State => "state",
            SnapshotKind::PreUpdate => "pre",
            SnapshotKind::PostUpdate => "post",
        }
    }
}

/// One stored frame of a density evolution.
///
/// `log_norm` accumulates the logarithm of every normalization constant
/// divided out of the marching field before this snapshot was taken, so the
/// unnormalized solution is `exp(log_norm) * values`. Plain Fokker-Planck
/// evolutions never renormalize and carry `log_norm = 0`.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub kind: SnapshotKind,
    pub values: DVector<f64>,
    pub log_norm: f64,
}

/// Clip and renormalization accounting accumulated across a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct StepDiagnostics {
    /// Number of explicit steps taken.
    pub steps: usize,
    /// Total trapezoidal mass removed by clipping negative values.
    pub clipped_mass: f64,
    /// Largest single-step clipped mass.
    pub max_step_clip: f64,
}

impl StepDiagnostics {
    pub fn record_clip(&mut self, clip: f64) {
        self.steps += 1;
        self.clipped_mass += clip;
        if clip > self.max_step_clip {
            self.max_step_clip = clip;
        }
    }
}

/// Time-indexed sequence of density snapshots on one grid.
///
/// Times are nondecreasing; two snapshots may share one time only as a
/// pre-update/post-update pair at an observation instant.
#[derive(Debug, Clone)]
pub struct DensityEvolution {
    grid: Grid1D,
    snapshots: Vec<Snapshot>,
    pub diagnostics: StepDiagnostics,
}

impl DensityEvolution {
    pub fn new(grid: Grid1D) -> Self {
        Self {
            grid,
            snapshots: Vec::new(),
            diagnostics: StepDiagnostics::default(),
        }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn push(&mut self, snap: Snapshot) -> Result<()> {
        if snap.values.len() != self.grid.len() {
            return Err(Error::AxisMismatch(
                "snapshot length does not match the evolution grid".to_string(),
            ));
        }
        if let Some(last) = self.snapshots.last() {
            let ordered = snap.t > last.t
                || (snap.t == last.t
                    && last.kind == SnapshotKind::PreUpdate
                    && snap.kind == SnapshotKind::PostUpdate);
            if !ordered {
                return Err(Error::AxisMismatch(format!(
                    "snapshot times must increase (got {} after {})",
                    snap.t, last.t
                )));
            }
        }
        self.snapshots.push(snap);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    pub fn last(&self) -> Option<&Snapshot> {
        self.snapshots.last()
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    /// Observation events in order: `(t, kind)` for pre/post-update frames.
    pub fn events(&self) -> Vec<(f64, SnapshotKind)> {
        self.snapshots
            .iter()
            .filter(|s| s.kind != SnapshotKind::State)
            .map(|s| (s.t, s.kind))
            .collect()
    }

    /// The snapshot nearest to time `t`, preferring the post-update frame
    /// when a pre/post pair shares the time.
    pub fn nearest(&self, t: f64) -> Option<&Snapshot> {
        let mut best: Option<&Snapshot> = None;
        for s in &self.snapshots {
            match best {
                None => best = Some(s),
                Some(b) => {
                    let (db, ds) = ((b.t - t).abs(), (s.t - t).abs());
                    if ds < db || (ds == db && s.t == b.t) {
                        best = Some(s);
                    }
                }
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn example_grid() -> Grid1D {
        Grid1D::from_spacing(-2.5, 2.5, 0.05).unwrap()
    }

    #[test]
    fn uniform_on_aligned_support_has_exact_height_and_mass() {
        let grid = example_grid();
        let f = init_density(&grid, &InitialDensity::Uniform { a: -1.25, b: -0.75 }).unwrap();
        assert_relative_eq!(f.mass(), 1.0, epsilon = 1e-12);
        for i in 0..grid.len() {
            let x = grid.node(i);
            if x > -1.25 + 1e-9 && x < -0.75 - 1e-9 {
                assert_relative_eq!(f.values()[i], 2.0, epsilon = 1e-9);
            } else if (x + 1.25).abs() < 1e-9 || (x + 0.75).abs() < 1e-9 {
                // support edges sit on grid nodes: cell-averaged half height
                assert_relative_eq!(f.values()[i], 1.0, epsilon = 1e-9);
            } else {
                assert_eq!(f.values()[i], 0.0);
            }
        }
    }

    #[test]
    fn gaussian_mass_is_unit_after_truncation_renormalization() {
        let grid = example_grid();
        for sigma in [0.05, 0.1, 0.5] {
            let f = init_density(
                &grid,
                &InitialDensity::Gaussian {
                    center: -1.0,
                    sigma,
                },
            )
            .unwrap();
            assert!((f.mass() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn point_mass_spikes_one_node() {
        let grid = example_grid();
        let f = init_density(&grid, &InitialDensity::PointMass { at: 0.0 }).unwrap();
        let i = grid.nearest_node(0.0);
        assert_relative_eq!(f.values()[i], 1.0 / grid.dx(), epsilon = 1e-9);
        assert_relative_eq!(f.mass(), 1.0, epsilon = 1e-12);
        assert_eq!(
            f.values().iter().filter(|&&v| v != 0.0).count(),
            1
        );
    }

    #[test]
    fn empty_support_is_rejected() {
        let grid = example_grid();
        assert!(matches!(
            init_density(&grid, &InitialDensity::Uniform { a: 5.0, b: 6.0 }),
            Err(Error::EmptySupport)
        ));
        assert!(matches!(
            init_density(&grid, &InitialDensity::PointMass { at: 10.0 }),
            Err(Error::EmptySupport)
        ));
        assert!(init_density(&grid, &InitialDensity::Uniform { a: 1.0, b: 1.0 }).is_err());
    }

    #[test]
    fn evolution_rejects_disordered_times() {
        let grid = example_grid();
        let mut evo = DensityEvolution::new(grid);
        let snap = |t, kind| Snapshot {
            t,
            kind,
            values: DVector::zeros(grid.len()),
            log_norm: 0.0,
        };
        evo.push(snap(0.0, SnapshotKind::State)).unwrap();
        evo.push(snap(0.1, SnapshotKind::PreUpdate)).unwrap();
        evo.push(snap(0.1, SnapshotKind::PostUpdate)).unwrap();
        assert!(evo.push(snap(0.1, SnapshotKind::PostUpdate)).is_err());
        assert!(evo.push(snap(0.05, SnapshotKind::State)).is_err());
        assert_eq!(evo.events().len(), 2);
    }
}
