use crate::laws::{harris_pgf_complex, pmf_from_pgf, HarrisLaw, LatticePmf, Law, TransformKind};

use super::{Comparison, Grid, PointRecord, VerificationReport, VerifyError};

/// Largest Harris tail and innovation truncation the convolution oracle
/// accepts.
const ORACLE_BUDGET: f64 = 1e-10;

fn convolve(p: &[f64], q: &[f64], len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    for (i, &pi) in p.iter().enumerate().take(len) {
        if pi == 0.0 {
            continue;
        }
        for (j, &qj) in q.iter().enumerate().take(len - i) {
            out[i + j] += pi * qj;
        }
    }
    out
}

/// Number of Harris atoms `1 + km <= n_trunc`.
fn atoms_within(k: u32, n_trunc: usize) -> usize {
    if n_trunc == 0 {
        0
    } else {
        (n_trunc - 1) / k as usize + 1
    }
}

/// Pmf of the Harris(1, a, k)-random sum of i.i.d. copies of `innov`, by
/// explicit repeated convolution over the atoms `N = 1 + km <= n_trunc`.
/// The result lives on `0..=innov.max_value()`.
pub fn harris_sum_convolution_oracle(
    innov: &LatticePmf,
    a: f64,
    k: u32,
    n_trunc: usize,
) -> Result<LatticePmf, VerifyError> {
    if innov.truncation_mass() >= ORACLE_BUDGET {
        return Err(VerifyError::InnovationTruncated(innov.truncation_mass()));
    }
    let harris = HarrisLaw::new(a, k)?;
    let count = atoms_within(k, n_trunc);
    let tail = harris.tail_mass(count);
    if tail >= ORACLE_BUDGET {
        let mut needed = count.max(1);
        while harris.tail_mass(needed) >= ORACLE_BUDGET {
            needed *= 2;
        }
        return Err(VerifyError::TruncationBudget {
            n_trunc,
            tail,
            required: 1 + k as usize * (needed - 1),
        });
    }
    let base = innov.to_dense();
    let len = base.len();
    let mut block = base.clone();
    for _ in 1..k {
        block = convolve(&block, &base, len);
    }
    let weights = harris.atom_weights(count);
    let mut power = base;
    let mut acc = vec![0.0; len];
    for (m, w) in weights.iter().enumerate() {
        if m > 0 {
            power = convolve(&power, &block, len);
        }
        for (a, p) in acc.iter_mut().zip(&power) {
            *a += w * p;
        }
    }
    let mass: f64 = acc.iter().sum();
    Ok(LatticePmf::new(0, 1, acc, (1.0 - mass).max(0.0)))
}

/// The same random-sum pmf by unit-circle extraction of `P_H(Q(z))`.
pub fn dft_harris_sum_pmf(
    innov: &LatticePmf,
    a: f64,
    k: u32,
    nodes: usize,
    n_max: usize,
) -> Result<LatticePmf, VerifyError> {
    Ok(pmf_from_pgf(|z| harris_pgf_complex(a, k, innov.pgf(z)), nodes, n_max)?)
}

/// `½ Σ |p_n − q_n|`, with unrepresented (truncated) mass counted as one
/// extra cell.
pub fn total_variation(p: &LatticePmf, q: &LatticePmf) -> f64 {
    let (dp, dq) = (p.to_dense(), q.to_dense());
    let len = dp.len().max(dq.len());
    let cell = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
    let head: f64 = (0..len).map(|i| (cell(&dp, i) - cell(&dq, i)).abs()).sum();
    0.5 * (head + (p.truncation_mass() - q.truncation_mass()).abs())
}

/// `Σ_{1+km <= n_trunc} P(N = 1+km) t^{1+km}` and a bound on the omitted
/// terms.
pub fn harris_series(a: f64, k: u32, t: f64, n_trunc: usize) -> Result<(f64, f64), VerifyError> {
    let harris = HarrisLaw::new(a, k)?;
    let count = atoms_within(k, n_trunc);
    let sum = harris
        .atom_weights(count)
        .iter()
        .enumerate()
        .map(|(m, w)| w * t.powi(1 + k as i32 * m as i32))
        .sum();
    let bound = harris.tail_mass(count) * t.abs().powi(1 + k as i32 * count as i32);
    Ok((sum, bound))
}

/// Truncated series `E[T^N]` against the closed composition `P_H(T)` for a
/// d.f. or s.f. law on `grid`.
pub fn harris_extreme_series_oracle(
    law: &Law,
    a: f64,
    k: u32,
    grid: &Grid,
    n_trunc: usize,
) -> Result<VerificationReport, VerifyError> {
    if !matches!(law.kind(), TransformKind::Df | TransformKind::Sf) {
        return Err(VerifyError::Mismatch(format!(
            "{} has neither a d.f. nor an s.f. transform",
            law.name()
        )));
    }
    let harris = HarrisLaw::new(a, k)?;
    let mut points = Vec::with_capacity(grid.points.len());
    let mut worst_bound = 0.0_f64;
    for &x in &grid.points {
        let t = law.transform(x)?;
        let (series, bound) = harris_series(a, k, t, n_trunc)?;
        worst_bound = worst_bound.max(bound);
        points.push(PointRecord {
            x,
            residual: (series - harris.pgf_unchecked(t)).abs(),
        });
    }
    Ok(VerificationReport::from_points(
        format!("extreme_series_oracle/{}", law.name()),
        &[("a", a), ("k", k as f64), ("n_trunc", n_trunc as f64)],
        grid.spec.clone(),
        points,
        worst_bound + 1e-12,
        Comparison::AtMost,
        vec![format!("largest series tail bound {worst_bound:e}")],
    ))
}
