//! Most-probable-orbit extraction and metastable-transition detection.
//!
//! The most probable orbit is the time series of spatial maximizers
//! `x*(t) = argmax_x p(x, t)` of the conditional density; it serves as the
//! state estimate. Transitions between metastable wells are labeled with a
//! hysteresis rule: the orbit must come within a deadband of a well center to
//! commit to that well, so chatter between wells creates no events.

use crate::density::{DensityEvolution, SnapshotKind};
use crate::error::{Error, Result};

/// Argmax track of a density evolution.
#[derive(Debug, Clone)]
pub struct MostProbableOrbit {
    times: Vec<f64>,
    x_star: Vec<f64>,
    peak_value: Vec<f64>,
}

impl MostProbableOrbit {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn x_star(&self) -> &[f64] {
        &self.x_star
    }

    pub fn peak_value(&self) -> &[f64] {
        &self.peak_value
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn from_parts(times: Vec<f64>, x_star: Vec<f64>, peak_value: Vec<f64>) -> Self {
        Self {
            times,
            x_star,
            peak_value,
        }
    }
}

/// A committed change of well.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionEvent {
    pub t_cross: f64,
    pub from_well: f64,
    pub to_well: f64,
    /// Time spent committed to `from_well` before this crossing.
    pub dwell_before: f64,
}

/// Extract the per-snapshot argmax of a density evolution.
///
/// At an observation instant the post-update frame wins over the pre-update
/// frame. Exact peak ties break toward the node closest to the previous
/// argmax (first snapshot: the smallest x); on a distance tie the smaller x
/// wins. The tie rule keeps a near-balanced bimodal density from producing
/// spurious transition chatter.
pub fn most_probable_orbit(evo: &DensityEvolution) -> Result<MostProbableOrbit> {
    if evo.is_empty() {
        return Err(Error::InvalidParameter(
            "cannot extract an orbit from an empty evolution".to_string(),
        ));
    }
    let grid = evo.grid();
    let mut times = Vec::new();
    let mut x_star = Vec::new();
    let mut peaks = Vec::new();
    let mut prev: Option<f64> = None;

    for snap in evo.snapshots() {
        // collapse pre/post pairs: drop the pre frame when a post follows at
        // the same time
        let superseded = snap.kind == SnapshotKind::PreUpdate
            && evo
                .snapshots()
                .iter()
                .any(|s| s.t == snap.t && s.kind == SnapshotKind::PostUpdate);
        if superseded {
            continue;
        }
        let max = snap.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(max > 0.0) {
            return Err(Error::ZeroDensity);
        }
        let candidates: Vec<usize> = (0..grid.len())
            .filter(|&i| snap.values[i] == max)
            .collect();
        let pick = match prev {
            None => candidates[0], // lowest index = smallest x
            Some(p) => *candidates
                .iter()
                .min_by(|&&a, &&b| {
                    let da = (grid.node(a) - p).abs();
                    let db = (grid.node(b) - p).abs();
                    da.partial_cmp(&db)
                        .unwrap()
                        .then(grid.node(a).partial_cmp(&grid.node(b)).unwrap())
                })
                .unwrap(),
        };
        let x = grid.node(pick);
        times.push(snap.t);
        x_star.push(x);
        peaks.push(max);
        prev = Some(x);
    }
    Ok(MostProbableOrbit::from_parts(times, x_star, peaks))
}

/// Hysteresis transition labeling of an arbitrary time series (works on
/// orbits and on raw truth paths alike).
///
/// A point within `deadband` of a well center commits the series to that
/// well; an event is emitted when the committed well changes. Points in the
/// inter-well gap never create events.
pub fn detect_transitions(
    times: &[f64],
    xs: &[f64],
    wells: &[f64],
    deadband: f64,
) -> Result<Vec<TransitionEvent>> {
    if times.len() != xs.len() {
        return Err(Error::AxisMismatch(
            "times and values must have equal length".to_string(),
        ));
    }
    if wells.len() < 2 {
        return Err(Error::InvalidParameter(
            "need at least two well centers".to_string(),
        ));
    }
    let mut min_sep = f64::INFINITY;
    for (i, &a) in wells.iter().enumerate() {
        for &b in wells.iter().skip(i + 1) {
            let d = (a - b).abs();
            if d == 0.0 {
                return Err(Error::InvalidParameter("well centers must be distinct".into()));
            }
            min_sep = min_sep.min(d);
        }
    }
    if !(deadband > 0.0 && deadband < 0.5 * min_sep) {
        return Err(Error::InvalidParameter(format!(
            "deadband must lie in (0, {}), got {deadband}",
            0.5 * min_sep
        )));
    }

    let mut events = Vec::new();
    let mut committed: Option<(f64, f64)> = None; // (well, commit time)
    for (&t, &x) in times.iter().zip(xs) {
        let hit = wells.iter().copied().find(|w| (x - w).abs() <= deadband);
        if let Some(w) = hit {
            match committed {
                None => committed = Some((w, t)),
                Some((cur, since)) if cur != w => {
                    events.push(TransitionEvent {
                        t_cross: t,
                        from_well: cur,
                        to_well: w,
                        dwell_before: t - since,
                    });
                    committed = Some((w, t));
                }
                _ => {}
            }
        }
    }
    Ok(events)
}

/// Transition labeling of an orbit against the default wells.
pub fn orbit_transitions(
    orbit: &MostProbableOrbit,
    wells: &[f64],
    deadband: f64,
) -> Result<Vec<TransitionEvent>> {
    detect_transitions(orbit.times(), orbit.x_star(), wells, deadband)
}
