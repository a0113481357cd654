use num_complex::Complex64;

use crate::laws::{pgf_coefficients, HarrisLaw, Law, TransformKind, DEFAULT_DFT_SIZE};

use super::{
    Comparison, Grid, GridSpec, PointRecord, VerificationReport, VerifyError,
    PGF_COEFFICIENT_TOLERANCE, POSITIVE_THRESHOLD,
};

/// Which extreme or sum operation a stability identity is about.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabilityKind {
    Sum,
    Max,
    Min,
}

impl StabilityKind {
    pub fn of(law: &Law) -> Self {
        match law.kind() {
            TransformKind::Cf | TransformKind::Lt | TransformKind::Pgf => StabilityKind::Sum,
            TransformKind::Df => StabilityKind::Max,
            TransformKind::Sf => StabilityKind::Min,
        }
    }
}

/// Values below this in a denominator exclude the point.
const DENOMINATOR_FLOOR: f64 = 1e-300;

fn harris_form(law: &Law) -> bool {
    !matches!(law, Law::MaxSemiStable(_))
}

/// Evaluates `T(x)` and `T(scheme_point(x, b))`; `None` with a note when the
/// scaled point leaves the transform's domain.
fn paired(law: &Law, x: f64, b: f64, notes: &mut Vec<String>) -> Option<(f64, f64)> {
    let sc = law.scheme_point(x, b);
    match (law.transform(x), law.transform(sc)) {
        (Ok(t), Ok(ts)) => Some((t, ts)),
        _ => {
            notes.push(format!("skipped x = {x:e}: scaled point {sc:e} outside the domain"));
            None
        }
    }
}

/// `sup |T(x) − P_H(T(scaled x))|` with `P_H` the Harris(1, a, k) p.g.f.
pub fn harris_fixed_point_residual(
    law: &Law,
    a: f64,
    b: f64,
    k: u32,
    kind: StabilityKind,
    grid: &Grid,
) -> Result<VerificationReport, VerifyError> {
    if kind != StabilityKind::of(law) {
        return Err(VerifyError::Mismatch(format!(
            "{} is not a {kind:?}-stability law",
            law.name()
        )));
    }
    let harris = HarrisLaw::new(a, k)?;
    let mut notes = Vec::new();
    let points = grid
        .points
        .iter()
        .filter_map(|&x| {
            let (t, ts) = paired(law, x, b, &mut notes)?;
            Some(PointRecord {
                x,
                residual: (t - harris.pgf_unchecked(ts)).abs(),
            })
        })
        .collect();
    Ok(VerificationReport::from_points(
        format!("fixed_point/{}", law.name()),
        &[
            ("a", a),
            ("b", b),
            ("k", k as f64),
            ("alpha", law.exponent().alpha()),
            ("beta", law.exponent().beta()),
            ("law_k", law.k() as f64),
        ],
        grid.spec.clone(),
        points,
        POSITIVE_THRESHOLD,
        Comparison::AtMost,
        notes,
    ))
}

/// `sup |p T^k(sc) + (1 − p) T^k(sc) T^k(x) − T^k(x)|`, the transform of the
/// `k`-component aggregate of the randomized scheme with a shared coin.
pub fn stationarity_identity_residual(
    law: &Law,
    p: f64,
    b: f64,
    grid: &Grid,
) -> Result<VerificationReport, VerifyError> {
    if !harris_form(law) {
        return Err(VerifyError::Mismatch(format!(
            "{} has no randomized stationary scheme",
            law.name()
        )));
    }
    let k = law.k() as i32;
    let mut notes = Vec::new();
    let points = grid
        .points
        .iter()
        .filter_map(|&x| {
            let (t, ts) = paired(law, x, b, &mut notes)?;
            let (g, gs) = (t.powi(k), ts.powi(k));
            Some(PointRecord {
                x,
                residual: (p * gs + (1.0 - p) * gs * g - g).abs(),
            })
        })
        .collect();
    Ok(VerificationReport::from_points(
        format!("stationarity/{}", law.name()),
        &[
            ("p", p),
            ("b", b),
            ("k", k as f64),
            ("alpha", law.exponent().alpha()),
            ("beta", law.exponent().beta()),
        ],
        grid.spec.clone(),
        points,
        POSITIVE_THRESHOLD,
        Comparison::AtMost,
        notes,
    ))
}

/// Fixed-point residual for the law's own scale and for `b2` (which should
/// be incommensurable with it); the larger of the two is reported. Only a
/// pure power exponent is stable at both.
pub fn two_scale_residual(law: &Law, b2: f64, grid: &Grid) -> Result<VerificationReport, VerifyError> {
    let kind = StabilityKind::of(law);
    let alpha = law.exponent().alpha();
    let b1 = law.exponent().b();
    let scheme = |b: f64| if kind == StabilityKind::Min { 1.0 / b } else { b };
    let r1 = harris_fixed_point_residual(law, b1.powf(-alpha), scheme(b1), law.k(), kind, grid)?;
    let r2 = harris_fixed_point_residual(law, b2.powf(-alpha), scheme(b2), law.k(), kind, grid)?;
    let mut points = r1.worst.clone();
    points.extend(r2.worst.iter().cloned());
    let mut notes = r1.notes;
    notes.extend(r2.notes);
    Ok(VerificationReport::from_points(
        format!("two_scale/{}", law.name()),
        &[
            ("b1", b1),
            ("b2", b2),
            ("alpha", alpha),
            ("beta", law.exponent().beta()),
        ],
        grid.spec.clone(),
        points,
        POSITIVE_THRESHOLD,
        Comparison::AtMost,
        notes,
    ))
}

/// Residual `r = T(x)/T(scale·x)` of the SSD factorisation, checked for the
/// necessary conditions of its kind and, at the law's own scale, against
/// the closed Harris form `r = {p + (1 − p) T^k}^{1/k}`. Returns the report
/// and the `(x, r(x))` table.
pub fn ssd_residual(
    law: &Law,
    scale: f64,
    grid: &Grid,
) -> Result<(VerificationReport, Vec<(f64, f64)>), VerifyError> {
    let kind = law.kind();
    let exp = law.exponent();
    let in_range = match kind {
        TransformKind::Cf | TransformKind::Lt | TransformKind::Pgf | TransformKind::Sf => {
            scale > 0.0 && scale <= 1.0
        }
        TransformKind::Df => scale >= 1.0 && scale.is_finite(),
    };
    if !in_range {
        return Err(VerifyError::Mismatch(format!(
            "scale {scale} outside the range for {kind:?} residuals"
        )));
    }
    let natural = match kind {
        TransformKind::Df => exp.c(),
        _ => exp.b(),
    };
    let identify = harris_form(law) && (scale - natural).abs() <= 1e-15 * natural;
    let p = 1.0 / exp.a();
    let k = law.k() as f64;
    let closed = |t: f64| (p + (1.0 - p) * t.powf(k)).powf(1.0 / k);

    // real-line residual, argument mapped the same way as the defining
    // transform (scale·t, scale·x, (1 − scale(1 − s^m))^{1/m})
    let scaled = |x: f64| match kind {
        TransformKind::Pgf => law.scheme_point(x, scale),
        _ => scale * x,
    };
    let mut notes = Vec::new();
    let mut table = Vec::with_capacity(grid.points.len());
    let mut points = Vec::new();
    for &x in &grid.points {
        let t = law.transform(x)?;
        let ts = law.transform(scaled(x))?;
        if ts.abs() < DENOMINATOR_FLOOR {
            notes.push(format!("excluded x = {x:e}: T(scaled) below 1e-300"));
            continue;
        }
        let r = t / ts;
        table.push((x, r));
        let mut worst = (r.abs() - 1.0).max(0.0).max(-r.min(0.0));
        if identify {
            worst = worst.max((r - closed(t)).abs());
        }
        points.push(PointRecord { x, residual: worst });
    }

    let mut threshold = POSITIVE_THRESHOLD;
    match kind {
        TransformKind::Cf | TransformKind::Lt => {
            let r0 = law.transform(0.0)? / law.transform(0.0)?;
            points.push(PointRecord {
                x: 0.0,
                residual: (r0 - 1.0).abs(),
            });
            if kind == TransformKind::Cf {
                for &(x, r) in &table {
                    let rn = law.transform(-x)? / law.transform(-scale * x)?;
                    points.push(PointRecord {
                        x: -x,
                        residual: (rn - r).abs(),
                    });
                }
            }
        }
        TransformKind::Sf | TransformKind::Df => {
            // nonincreasing (Sf) / nondecreasing (Df) along the grid
            let sign = if kind == TransformKind::Sf { 1.0 } else { -1.0 };
            for w in table.windows(2) {
                points.push(PointRecord {
                    x: w[1].0,
                    residual: (sign * (w[1].1 - w[0].1)).max(0.0),
                });
            }
            // r(0+) = 1 for Sf, r(∞) = 1 for Df: go where ψ is negligible
            let x_lim = exp.invert(1e-14)?;
            let r_lim = law.transform(x_lim)? / law.transform(scale * x_lim)?;
            points.push(PointRecord {
                x: x_lim,
                residual: (r_lim - 1.0).abs(),
            });
        }
        TransformKind::Pgf => {
            threshold = PGF_COEFFICIENT_TOLERANCE;
            let Law::DiscreteSemiMittagLeffler(d) = law else {
                unreachable!("only discrete laws have a p.g.f. transform")
            };
            let m = d.m();
            let coef = pgf_coefficients(
                |z| {
                    let u = z.powu(m);
                    d.block_pgf_complex(u) / d.block_pgf_complex(Complex64::new(1.0 - scale, 0.0) + scale * u)
                },
                DEFAULT_DFT_SIZE * m as usize,
            );
            let (mut min, mut index) = (f64::INFINITY, 0);
            let mut off_lattice = 0.0;
            for (j, &c) in coef.iter().enumerate() {
                if c < min {
                    min = c;
                    index = j;
                }
                if j % m as usize != 0 {
                    off_lattice += c.abs();
                }
            }
            let total: f64 = coef.iter().sum();
            notes.push(format!(
                "residual coefficients: min {min:e} at {index}, sum {total:.17}, off-lattice mass {off_lattice:e}"
            ));
            points.push(PointRecord {
                x: index as f64,
                residual: (-min).max(0.0),
            });
            points.push(PointRecord {
                x: f64::INFINITY,
                residual: (total - 1.0).abs(),
            });
            points.push(PointRecord {
                x: -1.0,
                residual: off_lattice,
            });
        }
    }
    if !identify && harris_form(law) {
        notes.push("scale differs from the law's own; closed-form identification skipped".into());
    }
    let report = VerificationReport::from_points(
        format!("ssd/{}", law.name()),
        &[
            ("scale", scale),
            ("alpha", exp.alpha()),
            ("beta", exp.beta()),
            ("k", k),
        ],
        GridSpec {
            description: grid.spec.description.clone(),
            ..grid.spec.clone()
        },
        points,
        threshold,
        Comparison::AtMost,
        notes,
    );
    Ok((report, table))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponent::{SemiStableExponent, Tail};
    use crate::laws::{
        DiscreteGenSemiMlLaw, GammaMaxSemiStableLaw, GenSemiAlphaLaplaceLaw, GenSemiParetoLaw,
    };
    use crate::verify::{standard_grid, GridOptions};

    fn grid(law: &Law) -> Grid {
        standard_grid(law, &GridOptions::default()).unwrap()
    }

    fn laplace(beta_frac: f64) -> Law {
        let b = 2f64.powf(-1.0 / 1.5);
        let beta = beta_frac * crate::exponent::beta_bound(1.5, b);
        let e = SemiStableExponent::new(1.0, 1.5, beta, b, Tail::Increasing).unwrap();
        Law::SemiAlphaLaplace(GenSemiAlphaLaplaceLaw::new(e, 2).unwrap())
    }

    #[test]
    fn fixed_point_examples() {
        let pareto = Law::SemiPareto(GenSemiParetoLaw::from_p(1.0, 1.2, 0.1, 0.5, 2).unwrap());
        let r = harris_fixed_point_residual(
            &pareto,
            2.0,
            pareto.scheme_b(),
            2,
            StabilityKind::Min,
            &grid(&pareto),
        )
        .unwrap();
        assert!(r.passed, "{}", r.max_residual);

        let law = laplace(0.8);
        let g = grid(&law);
        let r = harris_fixed_point_residual(&law, 2.0, law.scheme_b(), 2, StabilityKind::Sum, &g)
            .unwrap();
        assert!(r.passed, "{}", r.max_residual);
        let r = harris_fixed_point_residual(&law, 2.0, 1.05 * law.scheme_b(), 2, StabilityKind::Sum, &g)
            .unwrap();
        assert!(r.max_residual > 1e-3);
        assert!(harris_fixed_point_residual(&law, 2.0, 0.5, 2, StabilityKind::Max, &g).is_err());
    }

    #[test]
    fn stationarity_examples() {
        let law = laplace(0.8);
        let g = grid(&law);
        let r = stationarity_identity_residual(&law, 0.5, law.scheme_b(), &g).unwrap();
        assert!(r.passed, "{}", r.max_residual);
        let r = stationarity_identity_residual(&law, 0.525, law.scheme_b(), &g).unwrap();
        assert!(r.max_residual > 1e-4);

        let e = SemiStableExponent::new(1.0, 1.3, 0.05, 0.4, Tail::Decreasing).unwrap();
        let gm = Law::GammaMaxSemiStable(GammaMaxSemiStableLaw::new(e, 3).unwrap());
        let r = stationarity_identity_residual(&gm, gm.scheme_p(), gm.scheme_b(), &grid(&gm)).unwrap();
        assert!(r.passed, "{}", r.max_residual);
    }

    #[test]
    fn ssd_examples() {
        let pareto = Law::SemiPareto(GenSemiParetoLaw::from_p(1.0, 1.2, 0.0, 0.5, 2).unwrap());
        let (r, table) = ssd_residual(&pareto, pareto.exponent().b(), &grid(&pareto)).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(table.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-15));

        let e = SemiStableExponent::power(1.0, 0.8, 0.5f64.powf(1.0 / 0.8), Tail::Increasing).unwrap();
        let gapped = Law::DiscreteSemiMittagLeffler(DiscreteGenSemiMlLaw::new(e, 2, 3).unwrap());
        let (r, _) = ssd_residual(&gapped, gapped.exponent().b(), &grid(&gapped)).unwrap();
        assert!(r.passed, "{r:?}");

        for law in [pareto, gapped, laplace(0.0)] {
            let (r, table) = ssd_residual(&law, 1.0, &grid(&law)).unwrap();
            assert!(r.passed, "{r:?}");
            assert!(table.iter().all(|(_, v)| *v == 1.0));
        }
        let law = laplace(0.0);
        assert!(ssd_residual(&law, 1.5, &grid(&law)).is_err());
    }

    #[test]
    fn two_scale() {
        let law = laplace(0.0);
        let b2 = law.exponent().b().powf(2f64.sqrt());
        assert!(two_scale_residual(&law, b2, &grid(&law)).unwrap().passed);
        let law = laplace(0.8);
        let r = two_scale_residual(&law, b2, &grid(&law)).unwrap();
        assert!(r.max_residual > 1e-4, "{}", r.max_residual);
    }
}
