//! Numerical certification of stability fixed points, stationarity
//! identities and residual validity, plus brute-force oracles and
//! goodness-of-fit statistics.

mod oracles;
mod residuals;
mod stats;
mod suite;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::exponent::{log_grid, ExponentError};
use crate::laws::{Law, LawError, TransformKind};

pub use oracles::{
    dft_harris_sum_pmf, harris_extreme_series_oracle, harris_series, harris_sum_convolution_oracle,
    total_variation,
};
pub use residuals::{
    harris_fixed_point_residual, ssd_residual, stationarity_identity_residual, two_scale_residual,
    StabilityKind,
};
pub use stats::{
    concentration_threshold, empirical_cf_distance, empirical_lt_distance, kolmogorov_q,
    ks_critical_value, ks_statistic, ks_two_sample, KsResult, TwoSampleKs,
};
pub use suite::{
    canonical_laws, fixed_point_suite, law_suite, negative_control_suite, oracle_suite, run_suite,
    ssd_suite, stationarity_suite, two_scale_suite, SUITE_NAMES,
};

/// Residual ceiling for identities that hold exactly in real arithmetic.
pub const POSITIVE_THRESHOLD: f64 = 1e-11;
/// Floor a residual must exceed for a perturbed check to count as detected.
pub const NEGATIVE_THRESHOLD: f64 = 1e-4;
/// Residual p.g.f. coefficients above `-PGF_COEFFICIENT_TOLERANCE` count as
/// nonnegative.
pub const PGF_COEFFICIENT_TOLERANCE: f64 = 1e-10;

const WORST_KEPT: usize = 8;

#[derive(Debug, thiserror::Error)]
pub enum VerifyError {
    #[error(transparent)]
    Law(#[from] LawError),
    #[error(transparent)]
    Exponent(#[from] ExponentError),
    #[error("{0}")]
    Mismatch(String),
    #[error("Harris tail beyond n_trunc = {n_trunc} is {tail:e}; need n_trunc >= {required}")]
    TruncationBudget {
        n_trunc: usize,
        tail: f64,
        required: usize,
    },
    #[error("innovation pmf has truncation mass {0:e}; need below 1e-10")]
    InnovationTruncated(f64),
    #[error("sample is not sorted (index {0})")]
    Unsorted(usize),
    #[error("need at least {need} observations, got {got}")]
    SampleTooSmall { need: usize, got: usize },
    #[error("unknown check {0:?}")]
    UnknownCheck(String),
}

/// How `max_residual` is compared with `threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// Passes when the residual does not exceed the threshold.
    AtMost,
    /// Passes when the residual exceeds the threshold (negative controls).
    Above,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub description: String,
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub x: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check_name: String,
    pub parameters: BTreeMap<String, f64>,
    pub grid: GridSpec,
    pub max_residual: f64,
    pub threshold: f64,
    pub comparison: Comparison,
    pub passed: bool,
    /// Largest per-point residuals, worst first.
    pub worst: Vec<PointRecord>,
    pub notes: Vec<String>,
}

impl VerificationReport {
    /// Builds a report from per-point residuals; NaN residuals count as
    /// infinite.
    pub fn from_points(
        check_name: impl Into<String>,
        parameters: &[(&str, f64)],
        grid: GridSpec,
        points: Vec<PointRecord>,
        threshold: f64,
        comparison: Comparison,
        notes: Vec<String>,
    ) -> Self {
        let mut points: Vec<PointRecord> = points
            .into_iter()
            .map(|p| PointRecord {
                x: p.x,
                residual: if p.residual.is_nan() { f64::INFINITY } else { p.residual },
            })
            .collect();
        points.sort_by(|a, b| b.residual.total_cmp(&a.residual));
        let max_residual = points.first().map_or(0.0, |p| p.residual);
        points.truncate(WORST_KEPT);
        let passed = match comparison {
            Comparison::AtMost => max_residual <= threshold,
            Comparison::Above => max_residual > threshold,
        };
        Self {
            check_name: check_name.into(),
            parameters: parameters.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            grid,
            max_residual,
            threshold,
            comparison,
            passed,
            worst: points,
            notes,
        }
    }

    /// Same residuals judged as a negative control.
    pub fn as_negative_control(mut self, name: impl Into<String>) -> Self {
        self.check_name = name.into();
        self.threshold = NEGATIVE_THRESHOLD;
        self.comparison = Comparison::Above;
        self.passed = self.max_residual > NEGATIVE_THRESHOLD;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridOptions {
    pub points_per_decade: usize,
    pub decades: f64,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self {
            points_per_decade: 256,
            decades: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub points: Vec<f64>,
    pub spec: GridSpec,
}

/// Log-spaced grid centred on `ψ^{-1}(1)`; for p.g.f.s, `s = 1 − w` with
/// `w` log-spaced over `[10^{-decades}, 1]`.
pub fn standard_grid(law: &Law, opts: &GridOptions) -> Result<Grid, VerifyError> {
    let n = (opts.points_per_decade as f64 * opts.decades).round() as usize + 1;
    if law.kind() == TransformKind::Pgf {
        let lo = 10f64.powf(-opts.decades);
        let points = log_grid(lo, 1.0, n).into_iter().map(|w| 1.0 - w).collect();
        return Ok(Grid {
            points,
            spec: GridSpec {
                description: format!(
                    "s = 1 - w, w log-spaced on [1e-{}, 1], {} per decade",
                    opts.decades, opts.points_per_decade
                ),
                lo: 0.0,
                hi: 1.0 - lo,
                points: n,
            },
        });
    }
    let centre = law.exponent().invert(1.0)?;
    let half = 10f64.powf(opts.decades / 2.0);
    let (lo, hi) = (centre / half, centre * half);
    Ok(Grid {
        points: log_grid(lo, hi, n),
        spec: GridSpec {
            description: format!(
                "log-spaced, {} decades centred on psi^-1(1) = {centre:.6e}, {} per decade",
                opts.decades, opts.points_per_decade
            ),
            lo,
            hi,
            points: n,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponent::{SemiStableExponent, Tail};
    use crate::laws::{DiscreteGenSemiMlLaw, GenSemiParetoLaw};

    #[test]
    fn report_pass_logic() {
        let grid = GridSpec {
            description: "t".into(),
            lo: 0.0,
            hi: 1.0,
            points: 2,
        };
        let pts = vec![
            PointRecord { x: 0.0, residual: 1e-13 },
            PointRecord { x: 1.0, residual: 3e-12 },
        ];
        let r = VerificationReport::from_points(
            "c",
            &[("a", 2.0)],
            grid.clone(),
            pts.clone(),
            1e-11,
            Comparison::AtMost,
            vec![],
        );
        assert!(r.passed);
        assert_eq!(r.max_residual, 3e-12);
        assert_eq!(r.worst[0].x, 1.0);
        assert!(!r.clone().as_negative_control("n").passed);

        let nan = vec![PointRecord { x: 0.5, residual: f64::NAN }];
        let r = VerificationReport::from_points("c", &[], grid, nan, 1e-11, Comparison::AtMost, vec![]);
        assert!(!r.passed);
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"check_name\":\"c\""));
    }

    #[test]
    fn grids() {
        let law = Law::SemiPareto(GenSemiParetoLaw::from_p(1.0, 1.0, 0.0, 0.5, 1).unwrap());
        let g = standard_grid(&law, &GridOptions::default()).unwrap();
        assert_eq!(g.points.len(), 1025);
        assert!((g.points[0] - 1e-2).abs() < 1e-15);
        assert!((g.points[1024] - 1e2).abs() < 1e-10);

        let exp = SemiStableExponent::power(1.0, 0.8, 0.5, Tail::Increasing).unwrap();
        let pgf = Law::DiscreteSemiMittagLeffler(DiscreteGenSemiMlLaw::new(exp, 1, 1).unwrap());
        let g = standard_grid(&pgf, &GridOptions::default()).unwrap();
        assert!(g.points.iter().all(|s| (0.0..1.0).contains(s)));
        assert_eq!(g.points[g.points.len() - 1], 0.0);
    }
}
