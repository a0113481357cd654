//! Distribution families built on a [`SemiStableExponent`], with their
//! defining transforms and samplers.

mod families;
mod harris;
mod inversion;
mod lattice;
mod stable;

use std::fmt;
use std::sync::Arc;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exponent::{ExponentError, SemiStableExponent};

pub use families::{
    DiscreteGenSemiMlLaw, GammaMaxSemiStableLaw, GenSemiAlphaLaplaceLaw, GenSemiMlLaw,
    GenSemiParetoLaw, MaxSemiStableLaw,
};
pub use harris::{harris_pgf_complex, HarrisLaw};
pub use inversion::{df_from_cf, CdfEstimate, InversionTable, QuadParams, TableParams};
pub use lattice::{pgf_coefficients, pmf_from_pgf, sample_lattice, LatticePmf, LatticeSampler};
pub use stable::{
    poisson, positive_stable, sample_linnik, sample_ml_positive, symmetric_stable,
};

/// Coefficients below this are treated as evidence of an invalid p.g.f.
pub const PMF_NEGATIVE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum LawError {
    #[error(transparent)]
    Exponent(#[from] ExponentError),
    #[error("invalid parameter {name} = {value}: {reason}")]
    Parameter {
        name: &'static str,
        value: f64,
        reason: String,
    },
    #[error("{what} = {value} is outside the transform domain")]
    Domain { what: &'static str, value: f64 },
    #[error("coefficient {index} = {value:e} is negative beyond tolerance; not a p.g.f.")]
    InvalidPgf { index: usize, value: f64 },
    #[error("truncation mass {mass:e} exceeds {limit:e}; increase n_max")]
    Truncation { mass: f64, limit: f64 },
    #[error(
        "characteristic-function inversion at x = {x} did not converge (tail estimate {estimate:e}); try t_max >= {suggested_t_max:e}"
    )]
    Quadrature {
        x: f64,
        estimate: f64,
        suggested_t_max: f64,
    },
    #[error("inversion table is not monotone at node {index} (drop {drop:e}); the characteristic function is not positive definite at these parameters")]
    NonMonotoneTable { index: usize, drop: f64 },
    #[error("{0}")]
    Unsupported(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Which transform a law is defined through.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformKind {
    /// Characteristic function, real-valued and even.
    Cf,
    /// Laplace transform on `s >= 0`.
    Lt,
    /// Probability generating function on `[0, 1]`.
    Pgf,
    /// Distribution function on `x > 0`.
    Df,
    /// Survival function on `x > 0`.
    Sf,
}

/// A source of i.i.d. draws. Integer-valued samplers return exact integers
/// stored in `f64`.
pub trait Sampler: Send + Sync + fmt::Debug {
    fn sample(&self, rng: &mut dyn RngCore) -> f64;

    fn integer_valued(&self) -> bool {
        false
    }
}

/// Point mass, mostly useful for exploratory runs and tests.
#[derive(Debug, Clone, Copy)]
pub struct Degenerate(pub f64);

impl Sampler for Degenerate {
    fn sample(&self, _rng: &mut dyn RngCore) -> f64 {
        self.0
    }

    fn integer_valued(&self) -> bool {
        self.0.fract() == 0.0
    }
}

/// Any of the families, viewed through its defining transform.
#[derive(Debug, Clone)]
pub enum Law {
    SemiAlphaLaplace(GenSemiAlphaLaplaceLaw),
    SemiMittagLeffler(GenSemiMlLaw),
    DiscreteSemiMittagLeffler(DiscreteGenSemiMlLaw),
    SemiPareto(GenSemiParetoLaw),
    GammaMaxSemiStable(GammaMaxSemiStableLaw),
    MaxSemiStable(MaxSemiStableLaw),
}

impl Law {
    pub fn kind(&self) -> TransformKind {
        match self {
            Law::SemiAlphaLaplace(_) => TransformKind::Cf,
            Law::SemiMittagLeffler(_) => TransformKind::Lt,
            Law::DiscreteSemiMittagLeffler(_) => TransformKind::Pgf,
            Law::SemiPareto(_) => TransformKind::Sf,
            Law::GammaMaxSemiStable(_) | Law::MaxSemiStable(_) => TransformKind::Df,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Law::SemiAlphaLaplace(_) => "gen_semi_alpha_laplace",
            Law::SemiMittagLeffler(_) => "gen_semi_ml",
            Law::DiscreteSemiMittagLeffler(_) => "discrete_gen_semi_ml",
            Law::SemiPareto(_) => "gen_semi_pareto",
            Law::GammaMaxSemiStable(_) => "gamma_max_semi_stable",
            Law::MaxSemiStable(_) => "max_semi_stable",
        }
    }

    pub fn exponent(&self) -> &SemiStableExponent {
        match self {
            Law::SemiAlphaLaplace(l) => l.exponent(),
            Law::SemiMittagLeffler(l) => l.exponent(),
            Law::DiscreteSemiMittagLeffler(l) => l.exponent(),
            Law::SemiPareto(l) => l.exponent(),
            Law::GammaMaxSemiStable(l) => l.exponent(),
            Law::MaxSemiStable(l) => l.exponent(),
        }
    }

    /// Number of components `k`; the max-semi-stable law has no `k` and
    /// reports 1.
    pub fn k(&self) -> u32 {
        match self {
            Law::SemiAlphaLaplace(l) => l.k(),
            Law::SemiMittagLeffler(l) => l.k(),
            Law::DiscreteSemiMittagLeffler(l) => l.k(),
            Law::SemiPareto(l) => l.k(),
            Law::GammaMaxSemiStable(l) => l.k(),
            Law::MaxSemiStable(_) => 1,
        }
    }

    /// Lattice gap `m` (1 for everything but gapped discrete laws).
    pub fn gap(&self) -> u32 {
        match self {
            Law::DiscreteSemiMittagLeffler(l) => l.m(),
            _ => 1,
        }
    }

    /// The Harris parameter `a = b^{-α}` the law is stable under.
    pub fn harris_a(&self) -> f64 {
        self.exponent().a()
    }

    /// Skip probability `p = 1/a` of the matching randomized scheme.
    pub fn scheme_p(&self) -> f64 {
        1.0 / self.harris_a()
    }

    /// Scale `b` of the matching AR(1) scheme: the exponent's `b` for sums,
    /// lattice sums and maxima; `1/b` (an expanding scheme) for minima.
    pub fn scheme_b(&self) -> f64 {
        match self.kind() {
            TransformKind::Sf => self.exponent().c(),
            _ => self.exponent().b(),
        }
    }

    /// The defining transform at `x`.
    pub fn transform(&self, x: f64) -> Result<f64, LawError> {
        match self {
            Law::SemiAlphaLaplace(l) => Ok(l.cf(x)),
            Law::SemiMittagLeffler(l) => l.lt(x),
            Law::DiscreteSemiMittagLeffler(l) => l.pgf(x),
            Law::SemiPareto(l) => l.sf(x),
            Law::GammaMaxSemiStable(l) => l.df(x),
            Law::MaxSemiStable(l) => l.df(x),
        }
    }

    /// Argument at which the transform of `b·X` (or `b∘X` on the lattice)
    /// agrees with the transform of `X` at `x`:
    /// CF/LT `b x`; p.g.f. `(1 − b(1 − s^m))^{1/m}`; d.f./s.f. `x / b`.
    pub fn scheme_point(&self, x: f64, b: f64) -> f64 {
        match self.kind() {
            TransformKind::Cf | TransformKind::Lt => b * x,
            TransformKind::Pgf => {
                let m = self.gap() as i32;
                let u = 1.0 - b * (1.0 - x.powi(m));
                if m == 1 {
                    u
                } else {
                    u.powf(1.0 / m as f64)
                }
            }
            TransformKind::Df | TransformKind::Sf => x / b,
        }
    }

    /// Same family with `α` multiplied by `factor` and everything else kept
    /// (β is scaled along so it stays admissible).
    pub fn with_alpha_factor(&self, factor: f64) -> Result<Law, LawError> {
        let e = self.exponent();
        let exp = SemiStableExponent::new(
            e.lambda(),
            e.alpha() * factor,
            e.beta() * factor.min(1.0),
            e.b(),
            e.tail(),
        )?;
        self.with_exponent(exp, self.k())
    }

    /// Same family with a different component count.
    pub fn with_k(&self, k: u32) -> Result<Law, LawError> {
        self.with_exponent(*self.exponent(), k)
    }

    fn with_exponent(&self, exp: SemiStableExponent, k: u32) -> Result<Law, LawError> {
        Ok(match self {
            Law::SemiAlphaLaplace(_) => Law::SemiAlphaLaplace(GenSemiAlphaLaplaceLaw::new(exp, k)?),
            Law::SemiMittagLeffler(_) => Law::SemiMittagLeffler(GenSemiMlLaw::new(exp, k)?),
            Law::DiscreteSemiMittagLeffler(l) => {
                Law::DiscreteSemiMittagLeffler(DiscreteGenSemiMlLaw::new(exp, k, l.m())?)
            }
            Law::SemiPareto(_) => Law::SemiPareto(GenSemiParetoLaw::new(exp, k)?),
            Law::GammaMaxSemiStable(_) => {
                Law::GammaMaxSemiStable(GammaMaxSemiStableLaw::new(exp, k)?)
            }
            Law::MaxSemiStable(_) => Law::MaxSemiStable(MaxSemiStableLaw::new(exp)?),
        })
    }

    /// Closed-form distribution function where the family has one.
    pub fn df(&self, x: f64) -> Option<f64> {
        match self {
            Law::SemiPareto(l) => l.sf(x).ok().map(|r| 1.0 - r),
            Law::GammaMaxSemiStable(l) => l.df(x).ok(),
            Law::MaxSemiStable(l) => l.df(x).ok(),
            _ => None,
        }
    }

    /// A sampler for the law. Additive semi laws with `β ≠ 0` go through a
    /// CF-inversion table built with `table`; lattice laws with `β ≠ 0`
    /// through DFT coefficient extraction.
    pub fn sampler(&self, table: &TableParams) -> Result<Arc<dyn Sampler>, LawError> {
        Ok(match self {
            Law::SemiAlphaLaplace(l) => {
                if l.exponent().beta() == 0.0 {
                    Arc::new(l.clone())
                } else {
                    Arc::new(l.inversion_table(table)?)
                }
            }
            Law::SemiMittagLeffler(l) => {
                if l.exponent().beta() != 0.0 {
                    return Err(LawError::Unsupported(
                        "no sampler for semi-Mittag-Leffler laws with beta != 0".into(),
                    ));
                }
                Arc::new(l.clone())
            }
            Law::DiscreteSemiMittagLeffler(l) => {
                if l.exponent().beta() == 0.0 {
                    Arc::new(l.clone())
                } else {
                    let n = lattice::DEFAULT_DFT_SIZE * l.m() as usize;
                    let pmf = l.pmf(n, n - 1)?;
                    Arc::new(LatticeSampler::new(pmf)?)
                }
            }
            Law::SemiPareto(l) => Arc::new(l.clone()),
            Law::GammaMaxSemiStable(l) => Arc::new(l.clone()),
            Law::MaxSemiStable(l) => Arc::new(l.clone()),
        })
    }
}

pub use lattice::DEFAULT_DFT_SIZE;
