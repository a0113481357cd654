//! Stable variates and the gamma mixtures built from them.
//!
//! Conventions: symmetric stable draws have CF `exp(−|t|^α)`, positive
//! stable draws have LT `exp(−s^α)`.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, Poisson};

use super::LawError;

/// Largest rate handed to the Poisson sampler; above it the draw is
/// replaced by the rounded rate (relative sd below 1e-9).
const POISSON_RATE_CAP: f64 = 1e18;

/// Chambers–Mallows–Stuck draw of a symmetric α-stable variate,
/// `α ∈ (0, 2]`.
pub fn symmetric_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let v = PI * (rng.random::<f64>() - 0.5);
    if alpha == 1.0 {
        return v.tan();
    }
    let w: f64 = Exp1.sample(rng);
    let lead = (alpha * v).sin() / v.cos().powf(1.0 / alpha);
    lead * (((1.0 - alpha) * v).cos() / w).powf((1.0 - alpha) / alpha)
}

/// Kanter's draw of a positive α-stable variate, `α ∈ (0, 1]`.
pub fn positive_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    if alpha == 1.0 {
        return 1.0;
    }
    // u in (0, π)
    let u = loop {
        let u = PI * rng.random::<f64>();
        if u > 0.0 {
            break u;
        }
    };
    let e: f64 = Exp1.sample(rng);
    let inv = 1.0 / (1.0 - alpha);
    let a_u = (alpha * u).sin().powf(alpha * inv) * ((1.0 - alpha) * u).sin()
        / u.sin().powf(inv);
    (a_u / e).powf((1.0 - alpha) / alpha)
}

fn check_alpha(alpha: f64, hi: f64) -> Result<(), LawError> {
    if alpha > 0.0 && alpha <= hi {
        Ok(())
    } else {
        Err(LawError::Parameter {
            name: "alpha",
            value: alpha,
            reason: format!("must lie in (0, {hi}]"),
        })
    }
}

fn mixing_gamma(lambda: f64, k: u32) -> Result<Gamma<f64>, LawError> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(LawError::Parameter {
            name: "lambda",
            value: lambda,
            reason: "must be finite and positive".into(),
        });
    }
    if k == 0 {
        return Err(LawError::Parameter {
            name: "k",
            value: 0.0,
            reason: "k must be a positive integer".into(),
        });
    }
    Gamma::new(1.0 / k as f64, lambda).map_err(|e| LawError::Parameter {
        name: "lambda",
        value: lambda,
        reason: e.to_string(),
    })
}

/// Generalized Linnik draw `G^{1/α} S` with `G ~ gamma(1/k, λ)` and `S`
/// symmetric α-stable; CF `{1 + λ|t|^α}^{-1/k}`.
pub fn sample_linnik<R: Rng + ?Sized>(
    alpha: f64,
    lambda: f64,
    k: u32,
    rng: &mut R,
) -> Result<f64, LawError> {
    check_alpha(alpha, 2.0)?;
    let g = mixing_gamma(lambda, k)?.sample(rng);
    Ok(g.powf(1.0 / alpha) * symmetric_stable(alpha, rng))
}

/// Generalized Mittag-Leffler draw `G^{1/α} S⁺` with `S⁺` positive
/// α-stable; LT `{1 + λ s^α}^{-1/k}`. At `α = 1` this is `gamma(1/k, λ)`.
pub fn sample_ml_positive<R: Rng + ?Sized>(
    alpha: f64,
    lambda: f64,
    k: u32,
    rng: &mut R,
) -> Result<f64, LawError> {
    check_alpha(alpha, 1.0)?;
    let g = mixing_gamma(lambda, k)?.sample(rng);
    Ok(g.powf(1.0 / alpha) * positive_stable(alpha, rng))
}

/// Poisson draw that tolerates a zero or enormous rate.
pub fn poisson<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> u64 {
    if !(rate > 0.0) {
        return 0;
    }
    if rate > POISSON_RATE_CAP {
        return rate.round() as u64;
    }
    let draw: f64 = Poisson::new(rate)
        .expect("rate checked positive and finite")
        .sample(rng);
    draw as u64
}
