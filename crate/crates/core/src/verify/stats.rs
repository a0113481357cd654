use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::VerifyError;

const KS_MIN_SAMPLE: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub d: f64,
    pub p_value: f64,
}

/// Kolmogorov survival function `Q(λ) = P(K > λ)`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Jacobi form, fast for small λ
        let y = -std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
        let sum: f64 = (1..=20)
            .map(|j| ((2 * j - 1) as f64).powi(2) * y)
            .map(f64::exp)
            .sum();
        (1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * sum).clamp(0.0, 1.0)
    } else {
        let sum: f64 = (1..=100)
            .map(|j| {
                let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
                sign * (-2.0 * (j * j) as f64 * lambda * lambda).exp()
            })
            .sum();
        (2.0 * sum).clamp(0.0, 1.0)
    }
}

/// One-sample KS statistic of a sorted sample against `df`, handling ties
/// and atoms through left limits `F(v⁻)`.
pub fn ks_statistic<F>(sample: &[f64], df: F) -> Result<KsResult, VerifyError>
where
    F: Fn(f64) -> f64,
{
    let n = sample.len();
    if n < KS_MIN_SAMPLE {
        return Err(VerifyError::SampleTooSmall {
            need: KS_MIN_SAMPLE,
            got: n,
        });
    }
    if let Some(i) = sample.windows(2).position(|w| w[1] < w[0] || w[1].is_nan()) {
        return Err(VerifyError::Unsorted(i + 1));
    }
    let nf = n as f64;
    let mut d = 0.0_f64;
    let mut i = 0;
    while i < n {
        let v = sample[i];
        let mut j = i;
        while j + 1 < n && sample[j + 1] == v {
            j += 1;
        }
        let below = i as f64 / nf;
        let at = (j + 1) as f64 / nf;
        d = d.max(at - df(v)).max(df(v.next_down()) - below);
        i = j + 1;
    }
    Ok(KsResult {
        d,
        p_value: kolmogorov_q(nf.sqrt() * d),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoSampleKs {
    pub d: f64,
    pub critical: f64,
    pub p_value: f64,
    pub passed: bool,
}

/// `c(α) sqrt((n + m)/(n m))` with `Q(c(α)) = α`.
pub fn ks_critical_value(level: f64, n: usize, m: usize) -> f64 {
    let (mut lo, mut hi) = (0.1, 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if kolmogorov_q(mid) > level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (n, m) = (n as f64, m as f64);
    0.5 * (lo + hi) * ((n + m) / (n * m)).sqrt()
}

/// Two-sample KS test at `level`; inputs need not be sorted.
pub fn ks_two_sample(x: &[f64], y: &[f64], level: f64) -> Result<TwoSampleKs, VerifyError> {
    for s in [x, y] {
        if s.len() < KS_MIN_SAMPLE {
            return Err(VerifyError::SampleTooSmall {
                need: KS_MIN_SAMPLE,
                got: s.len(),
            });
        }
    }
    let mut xs = x.to_vec();
    let mut ys = y.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (n, m) = (xs.len(), ys.len());
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0_f64;
    while i < n && j < m {
        let v = xs[i].min(ys[j]);
        while i < n && xs[i] == v {
            i += 1;
        }
        while j < m && ys[j] == v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let critical = ks_critical_value(level, n, m);
    let en = ((n * m) as f64 / (n + m) as f64).sqrt();
    Ok(TwoSampleKs {
        d,
        critical,
        p_value: kolmogorov_q(en * d),
        passed: d < critical,
    })
}

/// Per-point acceptance level `4/√n` for empirical transform distances.
pub fn concentration_threshold(n: usize) -> f64 {
    4.0 / (n as f64).sqrt()
}

/// `sup_t |(1/n) Σ e^{itX_j} − cf(t)|` over `t_grid`.
pub fn empirical_cf_distance<F>(sample: &[f64], cf: F, t_grid: &[f64]) -> f64
where
    F: Fn(f64) -> Complex64 + Sync,
{
    let n = sample.len() as f64;
    t_grid
        .par_iter()
        .map(|&t| {
            let (mut re, mut im) = (0.0, 0.0);
            for x in sample {
                let (s, c) = (t * x).sin_cos();
                re += c;
                im += s;
            }
            (Complex64::new(re / n, im / n) - cf(t)).norm()
        })
        .reduce(|| 0.0, f64::max)
}

/// `sup_s |(1/n) Σ e^{-sX_j} − lt(s)|` over `s_grid`.
pub fn empirical_lt_distance<F>(sample: &[f64], lt: F, s_grid: &[f64]) -> f64
where
    F: Fn(f64) -> f64 + Sync,
{
    let n = sample.len() as f64;
    s_grid
        .par_iter()
        .map(|&s| {
            let mean = sample.iter().map(|x| (-s * x).exp()).sum::<f64>() / n;
            (mean - lt(s)).abs()
        })
        .reduce(|| 0.0, f64::max)
}
