use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, RngCore};
use rustfft::FftPlanner;

use super::{LawError, Sampler, PMF_NEGATIVE_TOLERANCE};

/// Default number of unit-circle nodes for coefficient extraction.
pub const DEFAULT_DFT_SIZE: usize = 1 << 14;

/// Largest truncation mass accepted by the lattice sampler.
pub const SAMPLER_TRUNCATION_LIMIT: f64 = 1e-9;

/// Finite pmf on the lattice `{offset + stride·i}`, with the probability not
/// represented by `weights` kept in `truncation_mass`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticePmf {
    offset: u64,
    stride: u64,
    weights: Vec<f64>,
    truncation_mass: f64,
}

impl LatticePmf {
    pub fn new(offset: u64, stride: u64, weights: Vec<f64>, truncation_mass: f64) -> Self {
        debug_assert!(stride > 0);
        Self {
            offset,
            stride,
            weights,
            truncation_mass,
        }
    }

    pub fn degenerate(value: u64) -> Self {
        Self::new(value, 1, vec![1.0], 0.0)
    }

    pub fn offset(&self) -> u64 {
        self.offset
    }

    pub fn stride(&self) -> u64 {
        self.stride
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn truncation_mass(&self) -> f64 {
        self.truncation_mass
    }

    pub fn value(&self, index: usize) -> u64 {
        self.offset + self.stride * index as u64
    }

    /// Largest value carried by `weights`.
    pub fn max_value(&self) -> u64 {
        self.value(self.weights.len().saturating_sub(1))
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .map(|(i, w)| w * self.value(i) as f64)
            .sum()
    }

    /// Probability of the integer `n` (zero off the lattice or beyond the
    /// stored range).
    pub fn prob(&self, n: u64) -> f64 {
        if n < self.offset || (n - self.offset) % self.stride != 0 {
            return 0.0;
        }
        let i = ((n - self.offset) / self.stride) as usize;
        self.weights.get(i).copied().unwrap_or(0.0)
    }

    /// Dense vector `p[n]`, `n = 0..=max_value`.
    pub fn to_dense(&self) -> Vec<f64> {
        if self.weights.is_empty() {
            return Vec::new();
        }
        let mut dense = vec![0.0; self.max_value() as usize + 1];
        for (i, &w) in self.weights.iter().enumerate() {
            dense[self.value(i) as usize] = w;
        }
        dense
    }

    /// Evaluates the (truncated) p.g.f. `Σ p_n z^n`.
    pub fn pgf(&self, z: Complex64) -> Complex64 {
        let step = z.powu(self.stride as u32);
        let mut acc = Complex64::new(0.0, 0.0);
        for &w in self.weights.iter().rev() {
            acc = acc * step + w;
        }
        acc * z.powu(self.offset as u32)
    }

    /// Real p.g.f. by Horner on the stored weights.
    pub fn pgf_real(&self, s: f64) -> f64 {
        let step = s.powi(self.stride as i32);
        let acc = self.weights.iter().rev().fold(0.0, |acc, &w| acc * step + w);
        acc * s.powi(self.offset as i32)
    }

    /// CSV with columns `value,probability`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), LawError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["value", "probability"])?;
        for (i, p) in self.weights.iter().enumerate() {
            w.write_record([self.value(i).to_string(), format!("{p:.16e}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Raw DFT coefficients `(1/N) Σ_j P(ω^j) ω^{-jn}`, `n = 0..N`, real parts,
/// no clamping. Aliased tail mass lands on `n mod N`, so for laws on a
/// stride-`m` lattice `N` should be a multiple of `m`.
pub fn pgf_coefficients<F>(pgf: F, n: usize) -> Vec<f64>
where
    F: Fn(Complex64) -> Complex64,
{
    assert!(n > 0, "DFT size must be positive");
    let mut buf: Vec<Complex64> = (0..n)
        .map(|j| {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
            pgf(Complex64::from_polar(1.0, theta))
        })
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf.iter().map(|c| c.re / n as f64).collect()
}

/// Pmf of the p.g.f. `pgf` on `0..=n_max`, extracted on `n` unit-circle
/// nodes. Coefficients in `[-1e-10, 0)` are clamped to zero and the result
/// renormalised; anything more negative means `pgf` is not a p.g.f.
pub fn pmf_from_pgf<F>(pgf: F, n: usize, n_max: usize) -> Result<LatticePmf, LawError>
where
    F: Fn(Complex64) -> Complex64,
{
    if n_max >= n {
        return Err(LawError::Parameter {
            name: "n_max",
            value: n_max as f64,
            reason: format!("must be below the DFT size {n}"),
        });
    }
    let mut coef = pgf_coefficients(pgf, n);
    for (index, c) in coef.iter_mut().enumerate() {
        if !c.is_finite() || *c < -PMF_NEGATIVE_TOLERANCE {
            return Err(LawError::InvalidPgf { index, value: *c });
        }
        if *c < 0.0 {
            *c = 0.0;
        }
    }
    let total: f64 = coef.iter().sum();
    let head: Vec<f64> = coef[..=n_max].iter().map(|c| c / total).collect();
    let tail: f64 = coef[n_max + 1..].iter().sum::<f64>() / total;
    Ok(LatticePmf::new(0, 1, head, tail))
}

/// Inverse-CDF sampler over a lattice pmf.
#[derive(Debug, Clone)]
pub struct LatticeSampler {
    pmf: LatticePmf,
    cumulative: Vec<f64>,
}

impl LatticeSampler {
    pub fn new(pmf: LatticePmf) -> Result<Self, LawError> {
        if pmf.truncation_mass() >= SAMPLER_TRUNCATION_LIMIT {
            return Err(LawError::Truncation {
                mass: pmf.truncation_mass(),
                limit: SAMPLER_TRUNCATION_LIMIT,
            });
        }
        let mut acc = 0.0;
        let cumulative = pmf
            .weights()
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        Ok(Self { pmf, cumulative })
    }

    pub fn pmf(&self) -> &LatticePmf {
        &self.pmf
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let total = *self.cumulative.last().unwrap_or(&1.0);
        let u = rng.random::<f64>() * total;
        let idx = self.cumulative.partition_point(|&c| c <= u);
        self.pmf.value(idx.min(self.cumulative.len() - 1))
    }
}

impl Sampler for LatticeSampler {
    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        self.draw(rng) as f64
    }

    fn integer_valued(&self) -> bool {
        true
    }
}

/// One draw from `pmf`; prefer [`LatticeSampler`] for repeated draws.
pub fn sample_lattice<R: Rng + ?Sized>(pmf: &LatticePmf, rng: &mut R) -> Result<u64, LawError> {
    Ok(LatticeSampler::new(pmf.clone())?.draw(rng))
}
