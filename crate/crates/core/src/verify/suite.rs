//! The canonical law/scheme pairings and the named check suites run by the
//! command line.

use crate::exponent::{beta_bound, SemiStableExponent, Tail};
use crate::laws::{
    DiscreteGenSemiMlLaw, GammaMaxSemiStableLaw, GenSemiAlphaLaplaceLaw, GenSemiMlLaw,
    GenSemiParetoLaw, LatticePmf, Law, TransformKind, DEFAULT_DFT_SIZE,
};

use super::{
    dft_harris_sum_pmf, harris_extreme_series_oracle, harris_fixed_point_residual,
    harris_sum_convolution_oracle, ssd_residual, standard_grid, stationarity_identity_residual,
    total_variation, two_scale_residual, Comparison, GridOptions, GridSpec, PointRecord,
    StabilityKind, VerificationReport, VerifyError,
};

pub const SUITE_NAMES: &[&str] = &[
    "all",
    "fixed_point",
    "negative_controls",
    "stationarity",
    "ssd",
    "oracles",
    "two_scale",
];

const A_VALUES: [f64; 3] = [1.5, 2.0, 4.0];
const K_VALUES: [u32; 3] = [1, 2, 3];
const BETA_FRACTIONS: [f64; 2] = [0.0, 0.8];
const PERTURBATION: f64 = 1.05;
const ORACLE_N_TRUNC: usize = 400;
const TV_THRESHOLD: f64 = 1e-6;

fn exponent(alpha: f64, a: f64, beta_fraction: f64, tail: Tail) -> Result<SemiStableExponent, VerifyError> {
    let b = a.powf(-1.0 / alpha);
    let beta = beta_fraction * beta_bound(alpha, b);
    Ok(SemiStableExponent::new(1.0, alpha, beta, b, tail)?)
}

/// One law per stability pairing, all stable under Harris(1, a, k):
/// semi-α-Laplace (CF, α = 1.5), semi-Mittag-Leffler (LT, α = 0.7),
/// discrete semi-Mittag-Leffler (p.g.f., α = 0.8, gaps 1 and 3),
/// gamma-max-semi-stable (d.f., α = 1.2) and semi-Pareto (s.f., α = 1.2).
/// `β` is `beta_fraction` times the monotonicity bound.
pub fn canonical_laws(a: f64, k: u32, beta_fraction: f64) -> Result<Vec<Law>, VerifyError> {
    let inc = |alpha| exponent(alpha, a, beta_fraction, Tail::Increasing);
    Ok(vec![
        Law::SemiAlphaLaplace(GenSemiAlphaLaplaceLaw::new(inc(1.5)?, k)?),
        Law::SemiMittagLeffler(GenSemiMlLaw::new(inc(0.7)?, k)?),
        Law::DiscreteSemiMittagLeffler(DiscreteGenSemiMlLaw::new(inc(0.8)?, k, 1)?),
        Law::DiscreteSemiMittagLeffler(DiscreteGenSemiMlLaw::new(inc(0.8)?, k, 3)?),
        Law::GammaMaxSemiStable(GammaMaxSemiStableLaw::new(
            exponent(1.2, a, beta_fraction, Tail::Decreasing)?,
            k,
        )?),
        Law::SemiPareto(GenSemiParetoLaw::new(inc(1.2)?, k)?),
    ])
}

fn label(law: &Law) -> String {
    let base = law.name().to_string();
    if law.gap() > 1 {
        format!("{base}_m{}", law.gap())
    } else {
        base
    }
}

fn tag(law: &Law, frac: f64) -> String {
    format!(
        "{}[a={},k={},beta={}bmax]",
        label(law),
        law.harris_a(),
        law.k(),
        frac
    )
}

fn renamed(mut r: VerificationReport, name: String) -> VerificationReport {
    r.check_name = name;
    r
}

fn fixed_point(law: &Law, opts: &GridOptions) -> Result<VerificationReport, VerifyError> {
    let grid = standard_grid(law, opts)?;
    harris_fixed_point_residual(
        law,
        law.harris_a(),
        law.scheme_b(),
        law.k(),
        StabilityKind::of(law),
        &grid,
    )
}

/// Fixed points for every canonical law, `a ∈ {1.5, 2, 4}`, `k ∈ {1, 2, 3}`,
/// `β ∈ {0, 0.8 β_max}`.
pub fn fixed_point_suite(opts: &GridOptions) -> Result<Vec<VerificationReport>, VerifyError> {
    let mut out = Vec::new();
    for a in A_VALUES {
        for k in K_VALUES {
            for frac in BETA_FRACTIONS {
                for law in canonical_laws(a, k, frac)? {
                    let r = fixed_point(&law, opts)?;
                    out.push(renamed(r, format!("fixed_point/{}", tag(&law, frac))));
                }
            }
        }
    }
    Ok(out)
}

/// `a`, `b` and `α` each perturbed by 5% for one law; every report passes
/// when its residual exceeds the negative-control floor.
fn negative_controls_for(law: &Law, name: &str, opts: &GridOptions) -> Result<Vec<VerificationReport>, VerifyError> {
    let grid = standard_grid(law, opts)?;
    let (a, b, k, kind) = (law.harris_a(), law.scheme_b(), law.k(), StabilityKind::of(law));
    let perturbed_alpha = law.with_alpha_factor(PERTURBATION)?;
    Ok(vec![
        harris_fixed_point_residual(law, PERTURBATION * a, b, k, kind, &grid)?
            .as_negative_control(format!("negative_control/a/{name}")),
        harris_fixed_point_residual(law, a, PERTURBATION * b, k, kind, &grid)?
            .as_negative_control(format!("negative_control/b/{name}")),
        harris_fixed_point_residual(&perturbed_alpha, a, b, k, kind, &grid)?
            .as_negative_control(format!("negative_control/alpha/{name}")),
    ])
}

pub fn negative_control_suite(opts: &GridOptions) -> Result<Vec<VerificationReport>, VerifyError> {
    let mut out = Vec::new();
    for frac in BETA_FRACTIONS {
        for a in A_VALUES {
            for law in canonical_laws(a, 2, frac)? {
                out.extend(negative_controls_for(&law, &tag(&law, frac), opts)?);
            }
        }
    }
    Ok(out)
}

/// Stationarity identities for every canonical law, plus a 5% perturbation
/// of `p` as a negative control.
pub fn stationarity_suite(opts: &GridOptions) -> Result<Vec<VerificationReport>, VerifyError> {
    let mut out = Vec::new();
    for a in A_VALUES {
        for k in K_VALUES {
            for frac in BETA_FRACTIONS {
                for law in canonical_laws(a, k, frac)? {
                    let grid = standard_grid(&law, opts)?;
                    let (p, b) = (law.scheme_p(), law.scheme_b());
                    let name = tag(&law, frac);
                    let r = stationarity_identity_residual(&law, p, b, &grid)?;
                    out.push(renamed(r, format!("stationarity/{name}")));
                    out.push(
                        stationarity_identity_residual(&law, PERTURBATION * p, b, &grid)?
                            .as_negative_control(format!("negative_control/p/{name}")),
                    );
                }
            }
        }
    }
    Ok(out)
}

fn ssd_at(law: &Law, scale: f64, opts: &GridOptions, name: String) -> Result<VerificationReport, VerifyError> {
    let grid = standard_grid(law, opts)?;
    Ok(renamed(ssd_residual(law, scale, &grid)?.0, name))
}

fn natural_scale(law: &Law) -> f64 {
    match law.kind() {
        TransformKind::Df => law.exponent().c(),
        _ => law.exponent().b(),
    }
}

/// Residual validity at each law's own scale (`β = 0`, `a = 2`, `k = 2`),
/// the Pareto residual at every `c ∈ {0.1, …, 0.9}`, and the trivial
/// scale 1.
pub fn ssd_suite(opts: &GridOptions) -> Result<Vec<VerificationReport>, VerifyError> {
    let mut out = Vec::new();
    for law in canonical_laws(2.0, 2, 0.0)? {
        let scale = natural_scale(&law);
        out.push(ssd_at(&law, scale, opts, format!("ssd/{}", tag(&law, 0.0)))?);
        out.push(ssd_at(&law, 1.0, opts, format!("ssd/{}/scale=1", label(&law)))?);
    }
    let pareto = Law::SemiPareto(GenSemiParetoLaw::new(
        SemiStableExponent::power(1.0, 1.0, 0.5, Tail::Increasing)?,
        1,
    )?);
    for i in 1..=9 {
        let c = i as f64 / 10.0;
        out.push(ssd_at(&pareto, c, opts, format!("ssd/pareto/c={c}"))?);
    }
    Ok(out)
}

fn geometric_pmf(q: f64, n: usize) -> LatticePmf {
    let w: Vec<f64> = (0..=n).map(|i| (1.0 - q) * q.powi(i as i32)).collect();
    let mass: f64 = w.iter().sum();
    LatticePmf::new(0, 1, w, (1.0 - mass).max(0.0))
}

/// Negative binomial with shape `r` and `P(s) = ((1 − q)/(1 − q s))^r`.
fn negative_binomial_pmf(r: f64, q: f64, n: usize) -> LatticePmf {
    let mut w = Vec::with_capacity(n + 1);
    let mut cur = (1.0 - q).powf(r);
    for i in 0..=n {
        w.push(cur);
        cur *= (r + i as f64) / (i as f64 + 1.0) * q;
    }
    let mass: f64 = w.iter().sum();
    LatticePmf::new(0, 1, w, (1.0 - mass).max(0.0))
}

/// Convolution oracle against DFT extraction, and the extreme-value series
/// against the closed composition.
pub fn oracle_suite(opts: &GridOptions) -> Result<Vec<VerificationReport>, VerifyError> {
    let mut out = Vec::new();
    let innovations = [
        ("geometric(0.5)", geometric_pmf(0.5, ORACLE_N_TRUNC)),
        ("negative_binomial(2,0.3)", negative_binomial_pmf(2.0, 0.3, ORACLE_N_TRUNC)),
    ];
    for (name, innov) in &innovations {
        for k in [1, 2] {
            let conv = harris_sum_convolution_oracle(innov, 2.0, k, ORACLE_N_TRUNC)?;
            let dft = dft_harris_sum_pmf(innov, 2.0, k, DEFAULT_DFT_SIZE, innov.max_value() as usize)?;
            let tv = total_variation(&conv, &dft);
            out.push(VerificationReport::from_points(
                format!("convolution_oracle/{name}/k={k}"),
                &[("a", 2.0), ("k", k as f64), ("n_trunc", ORACLE_N_TRUNC as f64)],
                GridSpec {
                    description: "total variation over the support 0..=400".into(),
                    lo: 0.0,
                    hi: ORACLE_N_TRUNC as f64,
                    points: ORACLE_N_TRUNC + 1,
                },
                vec![PointRecord {
                    x: ORACLE_N_TRUNC as f64,
                    residual: tv,
                }],
                TV_THRESHOLD,
                Comparison::AtMost,
                vec![],
            ));
        }
    }
    for frac in BETA_FRACTIONS {
        for law in canonical_laws(2.0, 2, frac)? {
            if !matches!(law.kind(), TransformKind::Df | TransformKind::Sf) {
                continue;
            }
            let grid = standard_grid(&law, opts)?;
            let r = harris_extreme_series_oracle(&law, 2.0, 2, &grid, 200)?;
            out.push(renamed(r, format!("extreme_series_oracle/{}", tag(&law, frac))));
        }
    }
    Ok(out)
}

/// Stability at a second scale `b₂ = b^{√2}`: holds for `β = 0`, fails
/// (reported as a detected negative control) for `β ≠ 0`.
pub fn two_scale_suite(opts: &GridOptions) -> Result<Vec<VerificationReport>, VerifyError> {
    let mut out = Vec::new();
    for frac in BETA_FRACTIONS {
        for law in canonical_laws(2.0, 2, frac)? {
            let grid = standard_grid(&law, opts)?;
            let b2 = law.exponent().b().powf(2f64.sqrt());
            let r = two_scale_residual(&law, b2, &grid)?;
            let name = format!("two_scale/{}", tag(&law, frac));
            out.push(if frac == 0.0 {
                renamed(r, name)
            } else {
                r.as_negative_control(name)
            });
        }
    }
    Ok(out)
}

/// Checks for a single user-supplied law at its own Harris parameters.
pub fn law_suite(law: &Law, opts: &GridOptions) -> Result<Vec<VerificationReport>, VerifyError> {
    let mut out = Vec::new();
    let name = label(law);
    if matches!(law, Law::MaxSemiStable(_)) {
        return Err(VerifyError::Mismatch(
            "max-semi-stable laws are not Harris-stable; nothing to verify".into(),
        ));
    }
    out.push(renamed(fixed_point(law, opts)?, format!("fixed_point/{name}")));
    let grid = standard_grid(law, opts)?;
    out.push(renamed(
        stationarity_identity_residual(law, law.scheme_p(), law.scheme_b(), &grid)?,
        format!("stationarity/{name}"),
    ));
    if !(law.kind() == TransformKind::Pgf && law.exponent().beta() != 0.0) {
        out.push(ssd_at(law, natural_scale(law), opts, format!("ssd/{name}"))?);
    }
    out.extend(negative_controls_for(law, &name, opts)?);
    Ok(out)
}

/// Runs a named suite (see [`SUITE_NAMES`]).
pub fn run_suite(name: &str, opts: &GridOptions) -> Result<Vec<VerificationReport>, VerifyError> {
    match name {
        "fixed_point" => fixed_point_suite(opts),
        "negative_controls" => negative_control_suite(opts),
        "stationarity" => stationarity_suite(opts),
        "ssd" => ssd_suite(opts),
        "oracles" => oracle_suite(opts),
        "two_scale" => two_scale_suite(opts),
        "all" => {
            let mut out = Vec::new();
            for n in &SUITE_NAMES[1..] {
                out.extend(run_suite(n, opts)?);
            }
            Ok(out)
        }
        other => Err(VerifyError::UnknownCheck(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn failures(reports: &[VerificationReport]) -> Vec<String> {
        reports
            .iter()
            .filter(|r| !r.passed)
            .map(|r| format!("{}: {:e} vs {:e}", r.check_name, r.max_residual, r.threshold))
            .collect()
    }

    #[test]
    fn every_suite_passes() {
        let opts = GridOptions::default();
        for name in &SUITE_NAMES[1..] {
            let reports = run_suite(name, &opts).unwrap();
            assert!(!reports.is_empty());
            let bad = failures(&reports);
            assert!(bad.is_empty(), "{name}: {bad:#?}");
        }
        assert!(run_suite("nope", &opts).is_err());
    }

    #[test]
    fn single_law_suite() {
        let opts = GridOptions::default();
        for law in canonical_laws(2.0, 2, 0.0).unwrap() {
            let reports = law_suite(&law, &opts).unwrap();
            assert!(failures(&reports).is_empty(), "{:#?}", failures(&reports));
        }
    }

    #[test]
    fn negative_binomial_series() {
        let nb = negative_binomial_pmf(2.0, 0.3, 400);
        let mean = nb.mean();
        assert!((mean - 2.0 * 0.3 / 0.7).abs() < 1e-12);
        assert!(nb.truncation_mass() < 1e-15);
    }
}
