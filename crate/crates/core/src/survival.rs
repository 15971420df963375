//! Weibull survival math and the censoring-aware per-step log-likelihood.
//!
//! The random quantity throughout is a positive time `Y` with survival
//! function `S(y) = exp(-(y/scale)^shape)`. Observations are made part-way
//! through a span: `tse` time units have already elapsed since the last
//! arrival, so the relevant law is the conditional excess distribution of
//! the remaining time `Z = Y - tse` given `Y > tse`.
//!
//! Time is observed on a unit grid. An uncensored observation with
//! remaining time `tte` therefore means the next arrival fell somewhere in
//! `[tte, tte + 1)`, and its likelihood is the interval mass
//! `S_Z(tte) - S_Z(tte + 1)`. A censored observation only says the span is
//! still open at `tte`, contributing the tail mass `S_Z(tte)`.
//!
//! Probabilities are clamped to `[PROB_FLOOR, 1]` before taking logs so the
//! loss stays finite under arbitrarily bad parameters; inside the clamped
//! region the gradient is defined as zero.

use crate::error::{Error, Result};

/// Upper bound on the shape parameter.
pub const K_MAX: f64 = 10.0;

/// Probabilities are clamped to `[PROB_FLOOR, 1]` before `ln`.
pub const PROB_FLOOR: f64 = 1e-12;

/// `ln(PROB_FLOOR)`, the floor of any step log-likelihood.
pub const LOG_PROB_FLOOR: f64 = -27.631021115928547;

/// Scale and shape of one Weibull distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeibullParams {
    /// Scale, in grid time units. Strictly positive.
    pub scale: f64,
    /// Shape, dimensionless. In `(0, K_MAX)`.
    pub shape: f64,
}

impl WeibullParams {
    pub fn new(scale: f64, shape: f64) -> Result<Self> {
        if !scale.is_finite() || scale <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "scale must be finite and > 0, got {scale}"
            )));
        }
        if !shape.is_finite() || shape <= 0.0 || shape >= K_MAX {
            return Err(Error::InvalidParameter(format!(
                "shape must lie in (0, {K_MAX}), got {shape}"
            )));
        }
        Ok(Self { scale, shape })
    }
}

/// One per-step supervision value: elapsed time `tse`, observed remaining
/// time `tte`, and whether the next arrival was actually seen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CensorObservation {
    /// Elapsed time since the last arrival (the conditioning value).
    pub tse: f64,
    /// Observed remaining time; exact span remainder if uncensored, a lower
    /// bound otherwise.
    pub tte: f64,
    pub uncensored: bool,
}

impl CensorObservation {
    pub fn new(tse: f64, tte: f64, uncensored: bool) -> Result<Self> {
        if !tse.is_finite() || tse < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "tse must be finite and >= 0, got {tse}"
            )));
        }
        if !tte.is_finite() || tte < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "tte must be finite and >= 0, got {tte}"
            )));
        }
        Ok(Self { tse, tte, uncensored })
    }
}

/// Cumulative hazard `(y/scale)^shape`; the workhorse for everything else.
#[inline]
fn hazard(y: f64, p: &WeibullParams) -> f64 {
    if y == 0.0 {
        0.0
    } else {
        (y / p.scale).powf(p.shape)
    }
}

/// `d hazard / d scale = -(shape/scale) * hazard`.
#[inline]
fn hazard_dscale(h: f64, p: &WeibullParams) -> f64 {
    -(p.shape / p.scale) * h
}

/// `d hazard / d shape = hazard * ln(y/scale)`, zero at `y = 0`.
#[inline]
fn hazard_dshape(y: f64, h: f64, p: &WeibullParams) -> f64 {
    if y == 0.0 {
        0.0
    } else {
        h * (y / p.scale).ln()
    }
}

fn check_nonneg(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() || v < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "{name} must be finite and >= 0, got {v}"
        )));
    }
    Ok(())
}

/// `P(Y > y) = exp(-(y/scale)^shape)`.
pub fn weibull_survival(y: f64, p: &WeibullParams) -> Result<f64> {
    check_nonneg("y", y)?;
    Ok((-hazard(y, p)).exp())
}

/// Density of `Y`. For `shape < 1` the density diverges at the origin; `y`
/// is floored at 1e-12 there so the return value stays finite.
pub fn weibull_density(y: f64, p: &WeibullParams) -> Result<f64> {
    check_nonneg("y", y)?;
    let y = if p.shape < 1.0 { y.max(1e-12) } else { y };
    let s = (-hazard(y, p)).exp();
    Ok((p.shape / p.scale) * (y / p.scale).powf(p.shape - 1.0) * s)
}

/// `P(Z > t)` for the excess time `Z = Y - s` given `Y > s`:
/// `exp(-((s+t)/scale)^shape + (s/scale)^shape)`.
pub fn excess_survival(t: f64, s: f64, p: &WeibullParams) -> Result<f64> {
    check_nonneg("t", t)?;
    check_nonneg("s", s)?;
    Ok((-(hazard(s + t, p) - hazard(s, p))).exp())
}

/// Density of the excess time `Z` at `t`, conditioning on `s` elapsed.
pub fn excess_density(t: f64, s: f64, p: &WeibullParams) -> Result<f64> {
    check_nonneg("t", t)?;
    check_nonneg("s", s)?;
    let y = if p.shape < 1.0 { (s + t).max(1e-12) } else { s + t };
    let sv = (-(hazard(y, p) - hazard(s, p))).exp();
    Ok((p.shape / p.scale) * (y / p.scale).powf(p.shape - 1.0) * sv)
}

/// Log-likelihood of one observation under `p`, clamped to be finite.
///
/// Uncensored: `ln(S_Z(tte) - S_Z(tte + 1))`. Censored: `ln S_Z(tte)`.
pub fn step_log_likelihood(obs: &CensorObservation, p: &WeibullParams) -> Result<f64> {
    Ok(step_log_likelihood_with_gradient(obs, p)?.0)
}

/// Partial derivatives of [`step_log_likelihood`] with respect to scale and
/// shape. Zero wherever the probability clamp is active.
pub fn step_log_likelihood_gradient(
    obs: &CensorObservation,
    p: &WeibullParams,
) -> Result<(f64, f64)> {
    let (_, ds, dk) = step_log_likelihood_with_gradient(obs, p)?;
    Ok((ds, dk))
}

/// Fused log-likelihood and gradient, `(ll, d/dscale, d/dshape)`. The
/// training loop calls this once per step per process.
pub fn step_log_likelihood_with_gradient(
    obs: &CensorObservation,
    p: &WeibullParams,
) -> Result<(f64, f64, f64)> {
    check_nonneg("tse", obs.tse)?;
    check_nonneg("tte", obs.tte)?;
    let s = obs.tse;
    let y_a = s + obs.tte;

    let h_s = hazard(s, p);
    let h_a = hazard(y_a, p);
    // a = cumulative excess hazard at tte; exp(-a) = S_Z(tte).
    let a = h_a - h_s;

    if !obs.uncensored {
        if -a < LOG_PROB_FLOOR {
            return Ok((LOG_PROB_FLOOR, 0.0, 0.0));
        }
        let ds = -(hazard_dscale(h_a, p) - hazard_dscale(h_s, p));
        let dk = -(hazard_dshape(y_a, h_a, p) - hazard_dshape(s, h_s, p));
        return Ok((-a, ds, dk));
    }

    let y_b = y_a + 1.0;
    let h_b = hazard(y_b, p);
    let b = h_b - h_s;
    // Interval mass exp(-a) - exp(-b) = exp(-a) * (1 - exp(-(b - a))).
    let d = (b - a).max(0.0);
    let one_minus_emd = -(-d).exp_m1();
    let ll = -a + one_minus_emd.ln();
    if ll.is_nan() || ll < LOG_PROB_FLOOR {
        return Ok((LOG_PROB_FLOOR, 0.0, 0.0));
    }

    // d ll / d theta = (-dA + exp(-d) * dB) / (1 - exp(-d)).
    let emd = (-d).exp();
    let da_scale = hazard_dscale(h_a, p) - hazard_dscale(h_s, p);
    let db_scale = hazard_dscale(h_b, p) - hazard_dscale(h_s, p);
    let da_shape = hazard_dshape(y_a, h_a, p) - hazard_dshape(s, h_s, p);
    let db_shape = hazard_dshape(y_b, h_b, p) - hazard_dshape(s, h_s, p);
    let ds = (-da_scale + emd * db_scale) / one_minus_emd;
    let dk = (-da_shape + emd * db_shape) / one_minus_emd;
    Ok((ll, ds, dk))
}
