//! Uniform 1-D spatial grid on a truncated domain.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid on `[x_min, x_max]` with `n` nodes (boundary nodes included).
///
/// The grid owns the trapezoidal integration convention used everywhere in
/// this crate: boundary nodes carry weight `dx/2`, interior nodes `dx`.
/// Densities are taken to vanish identically outside `[x_min, x_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    x_min: f64,
    x_max: f64,
    n: usize,
    dx: f64,
}

impl Grid1D {
    /// Grid with `n` uniformly spaced nodes, endpoints included.
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite()) || x_min >= x_max {
            return Err(Error::InvalidParameter(format!(
                "grid endpoints must be finite with x_min < x_max, got [{x_min}, {x_max}]"
            )));
        }
        if n < 5 {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least 5 nodes, got {n}"
            )));
        }
        let dx = (x_max - x_min) / (n - 1) as f64;
        Ok(Self { x_min, x_max, n, dx })
    }

    /// Grid from a requested spacing; `n` is rounded so the endpoints are hit
    /// exactly and the actual spacing is `(x_max - x_min)/(n - 1)`.
    pub fn from_spacing(x_min: f64, x_max: f64, dx: f64) -> Result<Self> {
        if !(dx.is_finite() && dx > 0.0) {
            return Err(Error::InvalidParameter(format!("dx must be positive, got {dx}")));
        }
        let n = ((x_max - x_min) / dx).round() as i64 + 1;
        if n < 5 {
            return Err(Error::InvalidParameter(format!(
                "spacing {dx} leaves fewer than 5 nodes on [{x_min}, {x_max}]"
            )));
        }
        Self::new(x_min, x_max, n as usize)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    /// Number of nodes, boundary nodes included.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Full domain width `x_max - x_min`; also the truncation radius of the
    /// jump integral (no jump from inside the domain can stay inside beyond it).
    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn node(&self, i: usize) -> f64 {
        debug_assert!(i < self.n);
        self.x_min + i as f64 * self.dx
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    /// Index of the node nearest to `x` (clamped to the grid).
    pub fn nearest_node(&self, x: f64) -> usize {
        let i = ((x - self.x_min) / self.dx).round();
        (i.max(0.0) as usize).min(self.n - 1)
    }

    /// Trapezoidal integral of node values over the domain.
    pub fn trapezoid(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.n);
        let interior: f64 = values[1..self.n - 1].iter().sum();
        self.dx * (interior + 0.5 * (values[0] + values[self.n - 1]))
    }

    /// Trapezoidal quadrature weight of node `i`.
    pub fn weight(&self, i: usize) -> f64 {
        if i == 0 || i == self.n - 1 {
            0.5 * self.dx
        } else {
            self.dx
        }
    }

    /// Trapezoidal inner product `sum_i w_i a_i b_i`.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), self.n);
        debug_assert_eq!(b.len(), self.n);
        (0..self.n).map(|i| self.weight(i) * a[i] * b[i]).sum()
    }
}
