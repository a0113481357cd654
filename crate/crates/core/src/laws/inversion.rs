//! Distribution functions recovered from characteristic functions, and
//! inverse-CDF tables built on top of them.
//!
//! `F(x) = 1/2 − (1/π) ∫₀^∞ Im(e^{-itx} φ(t)) / t dt`. After the substitution
//! `u = t|x|` the integrand oscillates with period `2π` in `u` whatever `x`
//! is, so the integral is split into panels of width `π`, each integrated by
//! adaptive Simpson, and the resulting (alternating, for even `φ`) series of
//! partial sums is accelerated with Wynn's ε-algorithm. Summation stops when
//! the accelerated value settles or when `|φ(T)|/T` falls below the tail
//! tolerance.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, RngCore};
use rand_distr::Open01;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{LawError, Sampler};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadParams {
    /// Target absolute accuracy of `F(x)` (distribution functions live in
    /// `[0, 1]`, so absolute and relative coincide at the scale that matters).
    pub rel_tol: f64,
    /// Stop once `|φ(T)| / T` drops below this.
    pub tail_tol: f64,
    /// Hard cap on the number of `π`-panels.
    pub max_panels: usize,
}

impl Default for QuadParams {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            tail_tol: 1e-10,
            max_panels: 200_000,
        }
    }
}

/// Value of `F(x)` with an estimate of its quadrature error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdfEstimate {
    pub value: f64,
    pub error: f64,
    /// Largest `t` the integrand was sampled at.
    pub t_max: f64,
}

/// Number of trailing partial sums fed to the ε-algorithm.
const WYNN_WINDOW: usize = 21;
const SIMPSON_MAX_DEPTH: u32 = 40;

struct Simpson<'a, F: Fn(f64) -> f64> {
    f: &'a F,
    evals: usize,
}

impl<F: Fn(f64) -> f64> Simpson<'_, F> {
    fn eval(&mut self, x: f64) -> f64 {
        self.evals += 1;
        (self.f)(x)
    }

    fn integrate(&mut self, a: f64, b: f64, eps: f64) -> (f64, f64) {
        let m = 0.5 * (a + b);
        let (fa, fm, fb) = (self.eval(a), self.eval(m), self.eval(b));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        self.recurse(a, b, fa, fm, fb, whole, eps, SIMPSON_MAX_DEPTH)
    }

    #[allow(clippy::too_many_arguments)]
    fn recurse(
        &mut self,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        eps: f64,
        depth: u32,
    ) -> (f64, f64) {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (self.eval(lm), self.eval(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * eps {
            return (left + right + delta / 15.0, delta.abs() / 15.0);
        }
        let (l, le) = self.recurse(a, m, fa, flm, fm, left, 0.5 * eps, depth - 1);
        let (r, re) = self.recurse(m, b, fm, frm, fb, right, 0.5 * eps, depth - 1);
        (l + r, le + re)
    }
}

/// Highest even-column estimate of Wynn's ε-table for `s`.
fn wynn_epsilon(s: &[f64]) -> f64 {
    let n = s.len();
    let mut best = s[n - 1];
    let mut prev = vec![0.0; n];
    let mut cur = s.to_vec();
    for col in 1..n {
        let mut next = Vec::with_capacity(n - col);
        for i in 0..(n - col) {
            let d = cur[i + 1] - cur[i];
            if d == 0.0 || !d.is_finite() {
                return best;
            }
            next.push(prev[i + 1] + 1.0 / d);
        }
        prev = cur;
        cur = next;
        if col % 2 == 0 {
            let candidate = cur[cur.len() - 1];
            if !candidate.is_finite() {
                return best;
            }
            best = candidate;
        }
    }
    best
}

/// Gil–Pelaez inversion of `cf` at `x`, clamped to `[0, 1]`.
pub fn df_from_cf<F>(cf: F, x: f64, quad: &QuadParams) -> Result<CdfEstimate, LawError>
where
    F: Fn(f64) -> Complex64,
{
    if !x.is_finite() {
        return Err(LawError::Domain {
            what: "x",
            value: x,
        });
    }
    let (sign, scale) = if x == 0.0 { (0.0, 1.0) } else { (x.signum(), x.abs()) };
    let rotation = |u: f64| Complex64::from_polar(1.0, -sign * u);
    let integrand = |u: f64| {
        // the u -> 0 limit is finite; evaluate just off the origin
        let u = u.max(f64::EPSILON);
        (rotation(u) * cf(u / scale)).im / u
    };
    let mut simpson = Simpson {
        f: &integrand,
        evals: 0,
    };
    let panel_tol = 0.1 * quad.rel_tol;

    let mut partials: Vec<f64> = Vec::new();
    let mut sum = 0.0;
    let mut simpson_err = 0.0;
    let mut last_estimate: Option<f64> = None;
    let mut settled = 0;
    for j in 0..quad.max_panels {
        let (a, b) = (j as f64 * PI, (j + 1) as f64 * PI);
        let (val, err) = simpson.integrate(a, b, panel_tol);
        sum += val;
        simpson_err += err;
        partials.push(sum);

        let t_end = b / scale;
        let tail = cf(t_end).norm() / t_end;
        let window = &partials[partials.len().saturating_sub(WYNN_WINDOW)..];
        let estimate = if window.len() >= 3 { wynn_epsilon(window) } else { sum };
        let change = last_estimate.map_or(f64::INFINITY, |e| (e - estimate).abs());
        last_estimate = Some(estimate);

        if change <= panel_tol {
            settled += 1;
        } else {
            settled = 0;
        }
        let done = (tail < quad.tail_tol && j >= 2) || (settled >= 3 && j >= 8);
        if done {
            let value = (0.5 - estimate / PI).clamp(0.0, 1.0);
            let error = (change.min(tail) + simpson_err) / PI;
            return Ok(CdfEstimate {
                value,
                error,
                t_max: t_end,
            });
        }
    }
    let t_max = quad.max_panels as f64 * PI / scale;
    Err(LawError::Quadrature {
        x,
        estimate: cf(t_max).norm() / t_max,
        suggested_t_max: 10.0 * t_max,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableParams {
    /// The table covers quantiles `[q_lo, 1 − q_lo]`.
    pub q_lo: f64,
    pub nodes: usize,
    pub quad: QuadParams,
}

impl Default for TableParams {
    fn default() -> Self {
        Self {
            q_lo: 1e-4,
            nodes: 4096,
            quad: QuadParams::default(),
        }
    }
}

/// Monotone `(x, F(x))` table with linear-interpolation inversion.
#[derive(Debug, Clone)]
pub struct InversionTable {
    xs: Vec<f64>,
    fs: Vec<f64>,
    max_error: f64,
}

impl InversionTable {
    /// Builds a table for the law with CF `cf`; `scale` is a rough spread
    /// used to place nodes (`x = scale·sinh(v)` with `v` uniform).
    pub fn build<F>(cf: F, scale: f64, params: &TableParams) -> Result<Self, LawError>
    where
        F: Fn(f64) -> Complex64 + Sync,
    {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(LawError::Parameter {
                name: "scale",
                value: scale,
                reason: "must be finite and positive".into(),
            });
        }
        if params.nodes < 2 || !(params.q_lo > 0.0 && params.q_lo < 0.5) {
            return Err(LawError::Parameter {
                name: "q_lo",
                value: params.q_lo,
                reason: "need q_lo in (0, 1/2) and at least two nodes".into(),
            });
        }
        let df = |x: f64| df_from_cf(&cf, x, &params.quad);

        let mut hi = scale;
        while df(hi)?.value < 1.0 - params.q_lo {
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(LawError::Unsupported("upper quantile not reached".into()));
            }
        }
        let mut lo = -scale;
        while df(lo)?.value > params.q_lo {
            lo *= 2.0;
            if !lo.is_finite() {
                return Err(LawError::Unsupported("lower quantile not reached".into()));
            }
        }
        let (v0, v1) = ((lo / scale).asinh(), (hi / scale).asinh());
        let n = params.nodes;
        let xs: Vec<f64> = (0..n)
            .map(|i| scale * (v0 + (v1 - v0) * i as f64 / (n - 1) as f64).sinh())
            .collect();
        let estimates: Vec<CdfEstimate> = xs
            .par_iter()
            .map(|&x| df(x))
            .collect::<Result<_, _>>()?;

        let mut fs = Vec::with_capacity(n);
        let mut running = 0.0_f64;
        let mut max_error = 0.0_f64;
        for (i, e) in estimates.iter().enumerate() {
            let drop = running - e.value;
            if drop > 1e-8_f64.max(10.0 * e.error) {
                return Err(LawError::NonMonotoneTable { index: i, drop });
            }
            running = running.max(e.value);
            max_error = max_error.max(e.error);
            fs.push(running);
        }
        Ok(Self { xs, fs, max_error })
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn fs(&self) -> &[f64] {
        &self.fs
    }

    /// Largest quadrature error estimate over the nodes.
    pub fn max_error(&self) -> f64 {
        self.max_error
    }

    /// Largest jump `F(x_{i+1}) − F(x_i)` between neighbouring nodes.
    pub fn resolution(&self) -> f64 {
        self.fs
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    /// Probability outside the tabulated range (drawn as the end nodes).
    pub fn tail_mass(&self) -> f64 {
        self.fs[0] + (1.0 - self.fs[self.fs.len() - 1])
    }

    /// Interpolated distribution function.
    pub fn df(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.fs[0];
        }
        if x >= self.xs[n - 1] {
            return self.fs[n - 1];
        }
        let i = self.xs.partition_point(|&v| v <= x);
        let (x0, x1, f0, f1) = (self.xs[i - 1], self.xs[i], self.fs[i - 1], self.fs[i]);
        f0 + (f1 - f0) * (x - x0) / (x1 - x0)
    }

    /// Interpolated quantile; clamps to the end nodes outside the table.
    pub fn quantile(&self, u: f64) -> f64 {
        let n = self.fs.len();
        if u <= self.fs[0] {
            return self.xs[0];
        }
        if u >= self.fs[n - 1] {
            return self.xs[n - 1];
        }
        let i = self.fs.partition_point(|&f| f < u);
        let (f0, f1) = (self.fs[i - 1], self.fs[i]);
        if f1 <= f0 {
            return self.xs[i];
        }
        self.xs[i - 1] + (self.xs[i] - self.xs[i - 1]) * (u - f0) / (f1 - f0)
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.sample(Open01))
    }

    /// CSV with columns `x,F`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), LawError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "F"])?;
        for (x, f) in self.xs.iter().zip(&self.fs) {
            w.write_record([format!("{x:.16e}"), format!("{f:.16e}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

impl Sampler for InversionTable {
    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        self.draw(rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn laplace(t: f64) -> Complex64 {
        Complex64::new(1.0 / (1.0 + t * t), 0.0)
    }

    #[test]
    fn laplace_cdf() {
        let q = QuadParams::default();
        let f0 = df_from_cf(laplace, 0.0, &q).unwrap();
        assert_relative_eq!(f0.value, 0.5, epsilon = 1e-12);
        let f1 = df_from_cf(laplace, 1.0, &q).unwrap();
        assert_relative_eq!(f1.value, 0.816_060_279_414_278_8, epsilon = 1e-8);
        for x in [-7.0, -2.5, -0.1, 0.3, 4.0] {
            let want = if x < 0.0 {
                0.5 * f64::exp(x)
            } else {
                1.0 - 0.5 * f64::exp(-x)
            };
            let got = df_from_cf(laplace, x, &q).unwrap();
            assert!((got.value - want).abs() < 1e-8, "x = {x}: {} vs {want}", got.value);
        }
    }

    #[test]
    fn gaussian_and_cauchy() {
        let q = QuadParams::default();
        let normal = |t: f64| Complex64::new((-t * t).exp(), 0.0);
        assert_relative_eq!(df_from_cf(normal, 0.0, &q).unwrap().value, 0.5, epsilon = 1e-12);
        // variance 2: F(x) = Φ(x/√2); Φ(1) = 0.8413447460685429
        let f = df_from_cf(normal, 2f64.sqrt(), &q).unwrap().value;
        assert_relative_eq!(f, 0.841_344_746_068_542_9, epsilon = 1e-8);
        let cauchy = |t: f64| Complex64::new((-t.abs()).exp(), 0.0);
        for x in [-30.0, -1.0, 0.5, 200.0] {
            let want = 0.5 + f64::atan(x) / PI;
            let got = df_from_cf(cauchy, x, &q).unwrap().value;
            assert!((got - want).abs() < 1e-8, "x = {x}: {got} vs {want}");
        }
    }

    #[test]
    fn shifted_asymmetric_cf() {
        // point mass at 1 smoothed by a unit normal: N(1, 1)
        let q = QuadParams::default();
        let cf = |t: f64| Complex64::from_polar((-0.5 * t * t).exp(), t);
        let got = df_from_cf(cf, 1.0, &q).unwrap().value;
        assert_relative_eq!(got, 0.5, epsilon = 1e-8);
        let got = df_from_cf(cf, 0.0, &q).unwrap().value;
        // Φ(−1)
        assert_relative_eq!(got, 0.158_655_253_931_457_05, epsilon = 1e-8);
    }

    #[test]
    fn nonconvergent_reports_suggestion() {
        let q = QuadParams {
            max_panels: 4,
            ..QuadParams::default()
        };
        let cauchy = |t: f64| Complex64::new((-t.abs() * 1e-6).exp(), 0.0);
        let err = df_from_cf(cauchy, 1.0, &q).unwrap_err();
        assert!(matches!(err, LawError::Quadrature { suggested_t_max, .. } if suggested_t_max > 0.0));
    }

    #[test]
    fn laplace_table() {
        let params = TableParams {
            nodes: 512,
            ..TableParams::default()
        };
        let table = InversionTable::build(laplace, 1.0, &params).unwrap();
        assert!(table.fs().windows(2).all(|w| w[1] >= w[0]));
        assert!(table.tail_mass() <= 2e-4 + 1e-12);
        for u in [0.01_f64, 0.3, 0.5, 0.9, 0.999] {
            let want = if u < 0.5 {
                (2.0 * u).ln()
            } else {
                -(2.0 * (1.0 - u)).ln()
            };
            assert!((table.quantile(u) - want).abs() < 2e-3, "u = {u}");
        }
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("x,F\n"));
    }
}
