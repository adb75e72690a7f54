//! Symmetric alpha-stable law: the jump-measure intensity constant, the jump
//! density, and seeded sampling of stable increments.
//!
//! A standard symmetric alpha-stable variate has characteristic function
//! `exp(-|xi|^alpha)` and Levy jump measure
//!
//! ```text
//! nu_alpha(dy) = C_alpha |y|^(-1-alpha) dy,
//! C_alpha = alpha * Gamma((1+alpha)/2) / (2^(1-alpha) * sqrt(pi) * Gamma(1-alpha/2)).
//! ```
//!
//! Sampling uses the Chambers-Mallows-Stuck transform of a uniform angle and
//! an exponential variate, which is exact for the symmetric case and needs two
//! uniforms per draw. Increments of `epsilon * L_t^alpha` over a step `dt`
//! scale the standard variate by `epsilon * dt^(1/alpha)` (self-similarity).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

/// Stability index and noise intensity of `epsilon * dL_t^alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableParams {
    alpha: f64,
    epsilon: f64,
}

impl StableParams {
    pub fn new(alpha: f64, epsilon: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::InvalidParameter(format!(
                "stability index must lie in (0, 2), got {alpha}"
            )));
        }
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "noise intensity must be a finite nonnegative number, got {epsilon}"
            )));
        }
        Ok(Self { alpha, epsilon })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// `epsilon^alpha`, the factor the noise intensity contributes to the
    /// jump measure (and hence to the nonlocal operator).
    pub fn epsilon_pow_alpha(&self) -> f64 {
        self.epsilon.powf(self.alpha)
    }
}

/// Jump measure `nu_alpha(dy) = c_alpha |y|^(-1-alpha) dy` of the standard
/// symmetric alpha-stable motion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpMeasure {
    alpha: f64,
    c_alpha: f64,
}

impl JumpMeasure {
    pub fn new(alpha: f64) -> Result<Self> {
        Ok(Self {
            alpha,
            c_alpha: levy_constant(alpha)?,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn intensity(&self) -> f64 {
        self.c_alpha
    }

    /// Density `c_alpha |y|^(-1-alpha)` of the jump measure at jump size `y`.
    ///
    /// The singularity at `y = 0` is non-integrable; querying it is a domain
    /// error rather than `inf`.
    pub fn density(&self, y: f64) -> Result<f64> {
        if y == 0.0 {
            return Err(Error::Domain(
                "jump density is singular at y = 0".to_string(),
            ));
        }
        Ok(self.c_alpha * y.abs().powf(-1.0 - self.alpha))
    }
}

/// Closed-form intensity constant of the symmetric alpha-stable jump measure,
///
/// `C_alpha = alpha * Gamma((1+alpha)/2) / (2^(1-alpha) * sqrt(pi) * Gamma(1-alpha/2))`.
///
/// Defined for `alpha` in (0, 2); the `Gamma(1-alpha/2)` pole makes the
/// formula meaningless at the Gaussian endpoint `alpha = 2`.
pub fn levy_constant(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::Domain(format!(
            "levy_constant requires alpha in (0, 2), got {alpha}"
        )));
    }
    let num = alpha * gamma((1.0 + alpha) / 2.0);
    let den = 2.0_f64.powf(1.0 - alpha) * std::f64::consts::PI.sqrt() * gamma(1.0 - alpha / 2.0);
    Ok(num / den)
}

/// Named substreams of one scenario seed, so state noise, observation noise
/// and the particle-filter oracle never share random numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Substream {
    StatePath,
    DiscreteObs,
    ContinuousObs,
    Particles,
}

impl Substream {
    fn stream_id(self) -> u64 {
        match self {
            Substream::StatePath => 0,
            Substream::DiscreteObs => 1,
            Substream::ContinuousObs => 2,
            Substream::Particles => 3,
        }
    }
}

/// Deterministic generator for one substream of a scenario seed.
///
/// ChaCha8 keyed by the seed; the substream selects an independent counter
/// stream, so the same scenario seed yields disjoint random sequences per
/// purpose and every run is bit-reproducible.
pub fn seeded_rng(seed: u64, stream: Substream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.stream_id());
    rng
}

const UNIFORM_CLAMP: f64 = 1e-12;

fn clamp_open_unit(u: f64) -> f64 {
    u.clamp(UNIFORM_CLAMP, 1.0 - UNIFORM_CLAMP)
}

/// Chambers-Mallows-Stuck transform for the standard symmetric alpha-stable
/// law, written on the two driving uniforms.
///
/// `u1` maps to the angle `U = pi*(u1 - 1/2)`, `u2` to the exponential
/// `W = -ln(u2)`. The output has characteristic function `exp(-|xi|^alpha)`.
/// The map is odd in the angle: `(1 - u1, u2)` yields the negated variate.
pub fn stable_from_uniforms(alpha: f64, u1: f64, u2: f64) -> f64 {
    let u = std::f64::consts::PI * (clamp_open_unit(u1) - 0.5);
    let w = -clamp_open_unit(u2).ln();
    let cos_u = u.cos();
    (alpha * u).sin() / cos_u.powf(1.0 / alpha)
        * (((1.0 - alpha) * u).cos() / w).powf((1.0 - alpha) / alpha)
}

/// One standard symmetric alpha-stable draw. Consumes exactly two uniforms
/// from `rng`, angle first.
pub fn standard_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let u1: f64 = rng.random();
    let u2: f64 = rng.random();
    stable_from_uniforms(alpha, u1, u2)
}

/// `n` i.i.d. increments of `epsilon * L^alpha` over steps of length `dt`,
/// fully determined by `seed` (state-path substream).
pub fn sample_stable_increments(
    params: &StableParams,
    dt: f64,
    n: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "dt must be positive and finite, got {dt}"
        )));
    }
    let mut rng = seeded_rng(seed, Substream::StatePath);
    let scale = increment_scale(params, dt);
    Ok((0..n)
        .map(|_| scale * standard_stable(params.alpha(), &mut rng))
        .collect())
}

/// Scale of one increment: `epsilon * dt^(1/alpha)`.
pub fn increment_scale(params: &StableParams, dt: f64) -> f64 {
    params.epsilon() * dt.powf(1.0 / params.alpha())
}
