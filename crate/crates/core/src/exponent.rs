//! Semi-stable exponents.
//!
//! A semi-stable exponent is a function `ψ` on `(0, ∞)` obeying the scaling
//! law `ψ(x) = a ψ(b x)` (or `ψ(x) = a ψ(x / b)` for the decreasing, Fréchet
//! type) with `a = b^{-α}`. Every law in this crate is a transform of the
//! form `{1 + ψ}^{-1/k}` or `exp{-ψ}` built on one of these.
//!
//! The periodic factor is fixed to `h(u) = exp(β sin(2πu / |ln b|))`, which is
//! positive, bounded and log-periodic with period `|ln b|`, so the scaling law
//! holds exactly and the whole family is described by `(λ, α, β, b)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Slack kept between `|β|` and the monotonicity bound.
pub const MONOTONE_SLACK: f64 = 1e-9;

/// Absolute floor used when normalising relative residuals.
pub const RESIDUAL_FLOOR: f64 = 1e-300;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExponentError {
    #[error("invalid parameter {name} = {value}: {reason}")]
    Parameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error(
        "|beta| = {beta} breaks strict monotonicity; admissible bound is |beta| <= alpha*|ln b|/(2*pi) = {bound}"
    )]
    NotMonotone { beta: f64, bound: f64 },
    #[error("argument {0} is outside (0, inf)")]
    Domain(f64),
    #[error("value {0} cannot be inverted to a finite positive argument")]
    Range(f64),
}

/// Direction of the power law carried by the exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tail {
    /// `ψ(x) = λ x^α h(ln x)`: sum, minimum and lattice usage.
    Increasing,
    /// `ψ(x) = λ x^{-α} h(ln x)`: Fréchet-type maximum usage.
    Decreasing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemiStableExponent {
    lambda: f64,
    alpha: f64,
    beta: f64,
    b: f64,
    tail: Tail,
}

/// Largest `|β|` for which `ψ` stays strictly monotone: `α |ln b| / (2π)`.
pub fn beta_bound(alpha: f64, b: f64) -> f64 {
    alpha * b.ln().abs() / (2.0 * PI)
}

impl SemiStableExponent {
    pub fn new(lambda: f64, alpha: f64, beta: f64, b: f64, tail: Tail) -> Result<Self, ExponentError> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(ExponentError::Parameter {
                name: "lambda",
                value: lambda,
                reason: "must be finite and positive",
            });
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(ExponentError::Parameter {
                name: "alpha",
                value: alpha,
                reason: "must be finite and positive",
            });
        }
        if !(b > 0.0 && b < 1.0) {
            return Err(ExponentError::Parameter {
                name: "b",
                value: b,
                reason: "must lie in (0, 1)",
            });
        }
        if !beta.is_finite() {
            return Err(ExponentError::Parameter {
                name: "beta",
                value: beta,
                reason: "must be finite",
            });
        }
        let bound = beta_bound(alpha, b);
        if beta.abs() > bound - MONOTONE_SLACK && beta != 0.0 {
            return Err(ExponentError::NotMonotone { beta, bound });
        }
        Ok(Self {
            lambda,
            alpha,
            beta,
            b,
            tail,
        })
    }

    /// Pure power law `λ x^{±α}`; the scale `b` only fixes `a` and is
    /// otherwise irrelevant.
    pub fn power(lambda: f64, alpha: f64, b: f64, tail: Tail) -> Result<Self, ExponentError> {
        Self::new(lambda, alpha, 0.0, b, tail)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn tail(&self) -> Tail {
        self.tail
    }

    /// `a = b^{-α}`, so that `ψ(x) = a ψ(scaled(x))`.
    pub fn a(&self) -> f64 {
        self.b.powf(-self.alpha)
    }

    /// `c = 1/b`.
    pub fn c(&self) -> f64 {
        1.0 / self.b
    }

    pub fn beta_bound(&self) -> f64 {
        beta_bound(self.alpha, self.b)
    }

    /// Point at which `ψ` is `1/a` times its value at `x`: `b x` for
    /// increasing tails, `x / b` for decreasing ones.
    pub fn scaled(&self, x: f64) -> f64 {
        match self.tail {
            Tail::Increasing => self.b * x,
            Tail::Decreasing => x / self.b,
        }
    }

    /// Same exponent with a different overall scale.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self, ExponentError> {
        Self::new(lambda, self.alpha, self.beta, self.b, self.tail)
    }

    fn signed_alpha(&self) -> f64 {
        match self.tail {
            Tail::Increasing => self.alpha,
            Tail::Decreasing => -self.alpha,
        }
    }

    fn angular(&self) -> f64 {
        2.0 * PI / self.b.ln().abs()
    }

    /// `ln ψ(e^u)`.
    fn log_eval(&self, u: f64) -> f64 {
        self.lambda.ln() + self.signed_alpha() * u + self.beta * (self.angular() * u).sin()
    }

    /// `ψ(x)` for `x > 0`.
    pub fn eval(&self, x: f64) -> Result<f64, ExponentError> {
        if !(x > 0.0) || x.is_nan() {
            return Err(ExponentError::Domain(x));
        }
        Ok(self.eval_unchecked(x))
    }

    /// `ψ(x)` extended by continuity: `ψ(0) = 0` for increasing tails.
    /// Callers guarantee `x >= 0`.
    pub(crate) fn eval_unchecked(&self, x: f64) -> f64 {
        if x == 0.0 {
            return match self.tail {
                Tail::Increasing => 0.0,
                Tail::Decreasing => f64::INFINITY,
            };
        }
        if x.is_infinite() {
            return match self.tail {
                Tail::Increasing => f64::INFINITY,
                Tail::Decreasing => 0.0,
            };
        }
        let u = x.ln();
        let h = (self.beta * (self.angular() * u).sin()).exp();
        self.lambda * x.powf(self.signed_alpha()) * h
    }

    /// Analytic continuation of `ψ` to the open right half-plane using the
    /// principal logarithm. `ψ(0) = 0` for increasing tails.
    pub fn eval_complex(&self, w: Complex64) -> Complex64 {
        if w == Complex64::new(0.0, 0.0) {
            return match self.tail {
                Tail::Increasing => Complex64::new(0.0, 0.0),
                Tail::Decreasing => Complex64::new(f64::INFINITY, 0.0),
            };
        }
        let log_w = w.ln();
        let mut log_psi = self.lambda.ln() + self.signed_alpha() * log_w;
        if self.beta != 0.0 {
            log_psi += self.beta * (self.angular() * log_w).sin();
        }
        log_psi.exp()
    }

    /// Solves `ψ(x) = y`.
    ///
    /// Works on `u = ln x`, where `ln ψ(e^u) = ln λ ± αu + β sin(ωu)`. The
    /// periodic term moves the root by at most `|β|/α` from the pure power
    /// solution, which gives a guaranteed bracket; Newton steps are taken
    /// inside it and replaced by bisection whenever they leave it.
    pub fn invert(&self, y: f64) -> Result<f64, ExponentError> {
        if !(y > 0.0) || !y.is_finite() {
            return Err(ExponentError::Range(y));
        }
        let target = y.ln();
        let sa = self.signed_alpha();
        let omega = self.angular();
        let u0 = (target - self.lambda.ln()) / sa;
        let spread = self.beta.abs() / self.alpha;
        let (mut lo, mut hi) = (u0 - spread - 1e-12, u0 + spread + 1e-12);
        // g is increasing in u for Increasing, decreasing for Decreasing; work
        // with the increasing version.
        let g = |u: f64| (self.log_eval(u) - target) * sa.signum();
        let dg = |u: f64| (sa + self.beta * omega * (omega * u).cos()) * sa.signum();

        let mut u = u0;
        if self.beta != 0.0 {
            for _ in 0..200 {
                let gu = g(u);
                if gu.abs() <= 1e-14 * (1.0 + target.abs()) {
                    break;
                }
                if gu > 0.0 {
                    hi = u;
                } else {
                    lo = u;
                }
                let step = gu / dg(u);
                let mut next = u - step;
                if !(next > lo && next < hi) {
                    next = 0.5 * (lo + hi);
                }
                if (next - u).abs() <= 1e-16 * (1.0 + u.abs()) {
                    u = next;
                    break;
                }
                u = next;
            }
        }
        let x = u.exp();
        if !(x > 0.0) || !x.is_finite() {
            return Err(ExponentError::Range(y));
        }
        Ok(x)
    }

    /// `sup_x |ψ(x) − a ψ(scaled x)| / max(ψ(x), floor)` with this exponent's
    /// own `(a, b)`.
    pub fn check_scaling_identity(&self, grid: &[f64]) -> Result<f64, ExponentError> {
        let a = self.a();
        self.scaling_residual(a, self.b, grid)
    }

    /// Scaling residual with arbitrary constants `(a, b)` substituted, used
    /// for negative controls and for the two-scale (incommensurable) check.
    pub fn scaling_residual(&self, a: f64, b: f64, grid: &[f64]) -> Result<f64, ExponentError> {
        let mut worst = 0.0_f64;
        for &x in grid {
            let psi = self.eval(x)?;
            let scaled = match self.tail {
                Tail::Increasing => b * x,
                Tail::Decreasing => x / b,
            };
            let psi_s = self.eval(scaled)?;
            let r = (psi - a * psi_s).abs() / psi.max(RESIDUAL_FLOOR);
            worst = worst.max(r);
        }
        Ok(worst)
    }
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi >= lo && n >= 2);
    let (l0, l1) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (l0 + (l1 - l0) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn make_pure_power() {
        let e = SemiStableExponent::new(1.0, 1.0, 0.0, 0.5, Tail::Increasing).unwrap();
        assert_eq!(e.eval(3.25).unwrap(), 3.25);
        assert_relative_eq!(e.a(), 2.0, max_relative = 1e-15);
    }

    #[test]
    fn beta_too_large_names_bound() {
        let err = SemiStableExponent::new(1.0, 1.0, 10.0, 0.5, Tail::Increasing).unwrap_err();
        match err {
            ExponentError::NotMonotone { bound, .. } => {
                // ln 2 / (2π)
                assert_relative_eq!(bound, 0.110_317_800_076_325_8, max_relative = 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn decreasing_power() {
        let e = SemiStableExponent::new(2.0, 0.5, 0.0, 0.25, Tail::Decreasing).unwrap();
        assert_relative_eq!(e.a(), 2.0, max_relative = 1e-15);
        assert_relative_eq!(e.eval(4.0).unwrap(), 1.0, max_relative = 1e-15);
        assert_relative_eq!(e.eval(0.25).unwrap(), 4.0, max_relative = 1e-15);
    }

    #[test]
    fn bad_parameters() {
        assert!(matches!(
            SemiStableExponent::new(0.0, 1.0, 0.0, 0.5, Tail::Increasing),
            Err(ExponentError::Parameter { name: "lambda", .. })
        ));
        assert!(matches!(
            SemiStableExponent::new(1.0, -1.0, 0.0, 0.5, Tail::Increasing),
            Err(ExponentError::Parameter { name: "alpha", .. })
        ));
        assert!(matches!(
            SemiStableExponent::new(1.0, 1.0, 0.0, 1.0, Tail::Increasing),
            Err(ExponentError::Parameter { name: "b", .. })
        ));
    }

    #[test]
    fn eval_examples() {
        let e = SemiStableExponent::new(1.0, 1.0, 0.0, 0.5, Tail::Increasing).unwrap();
        assert_eq!(e.eval(2.0).unwrap(), 2.0);
        let e = SemiStableExponent::new(1.0, 1.0, 0.1, 0.5, Tail::Increasing).unwrap();
        assert_eq!(e.eval(1.0).unwrap(), 1.0);
        let e = SemiStableExponent::new(1.0, 2.0, 0.0, 0.5, Tail::Increasing).unwrap();
        assert_relative_eq!(e.eval(3.0).unwrap(), 9.0, max_relative = 1e-15);
        assert!(matches!(e.eval(0.0), Err(ExponentError::Domain(_))));
        assert!(matches!(e.eval(-1.0), Err(ExponentError::Domain(_))));
    }

    #[test]
    fn scaling_identity_and_perturbation() {
        let grid = log_grid(0.1, 100.0, 200);
        let e = SemiStableExponent::new(1.3, 1.2, 0.1, 0.5, Tail::Increasing).unwrap();
        assert!(e.check_scaling_identity(&grid).unwrap() < 1e-12);
        let r = e.scaling_residual(e.a() * 1.01, e.b(), &grid).unwrap();
        assert_relative_eq!(r, 0.01, max_relative = 1e-9);

        let d = SemiStableExponent::new(0.7, 1.5, 0.2, 0.3, Tail::Decreasing).unwrap();
        assert!(d.check_scaling_identity(&grid).unwrap() < 1e-12);
    }

    #[test]
    fn pure_power_scales_for_every_b() {
        let grid = log_grid(0.1, 100.0, 200);
        let e = SemiStableExponent::new(1.0, 1.7, 0.0, 0.5, Tail::Increasing).unwrap();
        for b2 in [0.1, 0.37, 0.9] {
            let a2 = f64::powf(b2, -1.7);
            assert!(e.scaling_residual(a2, b2, &grid).unwrap() < 1e-12);
        }
    }

    #[test]
    fn invert_examples() {
        let sq = SemiStableExponent::new(1.0, 2.0, 0.0, 0.5, Tail::Increasing).unwrap();
        assert_relative_eq!(sq.invert(4.0).unwrap(), 2.0, max_relative = 1e-14);
        let inv = SemiStableExponent::new(1.0, 1.0, 0.0, 0.5, Tail::Decreasing).unwrap();
        assert_relative_eq!(inv.invert(0.5).unwrap(), 2.0, max_relative = 1e-14);
        let semi = SemiStableExponent::new(1.0, 1.0, 0.1, 0.5, Tail::Increasing).unwrap();
        let y = semi.eval(3.7).unwrap();
        assert_relative_eq!(semi.invert(y).unwrap(), 3.7, max_relative = 1e-10);
        assert!(matches!(semi.invert(0.0), Err(ExponentError::Range(_))));
        assert!(matches!(semi.invert(f64::INFINITY), Err(ExponentError::Range(_))));
    }

    #[test]
    fn complex_matches_real_on_axis() {
        let e = SemiStableExponent::new(1.3, 0.8, 0.05, 0.4, Tail::Increasing).unwrap();
        for x in [0.01, 0.3, 1.0, 7.0] {
            let z = e.eval_complex(Complex64::new(x, 0.0));
            assert_relative_eq!(z.re, e.eval(x).unwrap(), max_relative = 1e-13);
            assert!(z.im.abs() < 1e-13 * z.re);
        }
    }

    fn exponent_strategy() -> impl Strategy<Value = SemiStableExponent> {
        (0.1f64..5.0, 0.2f64..3.0, 0.05f64..0.95, -0.99f64..0.99, any::<bool>()).prop_map(
            |(lambda, alpha, b, frac, inc)| {
                let beta = frac * (beta_bound(alpha, b) - MONOTONE_SLACK);
                let tail = if inc { Tail::Increasing } else { Tail::Decreasing };
                SemiStableExponent::new(lambda, alpha, beta, b, tail).unwrap()
            },
        )
    }

    proptest! {
        #[test]
        fn scaling_law_holds(e in exponent_strategy(), x in 1e-3f64..1e3) {
            let psi = e.eval(x).unwrap();
            let rhs = e.a() * e.eval(e.scaled(x)).unwrap();
            prop_assert!((psi - rhs).abs() <= 1e-12 * psi.max(1.0));
        }

        #[test]
        fn log_periodic_structure(e in exponent_strategy(), x in 1e-2f64..1e2, n in -3i32..=3) {
            let lhs = e.eval(x * e.b().powi(n)).unwrap();
            let sign = if e.tail() == Tail::Increasing { 1.0 } else { -1.0 };
            let rhs = e.b().powf(sign * n as f64 * e.alpha()) * e.eval(x).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-11 * rhs.max(1e-300));
        }

        #[test]
        fn strictly_monotone(e in exponent_strategy(), x in 1e-3f64..1e3, step in 1e-6f64..1.0) {
            let (p1, p2) = (e.eval(x).unwrap(), e.eval(x * (1.0 + step)).unwrap());
            match e.tail() {
                Tail::Increasing => prop_assert!(p2 > p1),
                Tail::Decreasing => prop_assert!(p2 < p1),
            }
        }

        #[test]
        fn invert_round_trip(e in exponent_strategy(), x in 1e-4f64..1e4) {
            let y = e.eval(x).unwrap();
            let back = e.invert(y).unwrap();
            prop_assert!((back - x).abs() <= 1e-10 * x);
            let y2 = e.eval(back).unwrap();
            prop_assert!((y2 - y).abs() <= 1e-12 * y);
        }
    }
}
