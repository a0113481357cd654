use num_complex::Complex64;
use rand::{Rng, RngCore};
use rand_distr::{Distribution, Gamma};

use super::lattice::LatticePmf;
use super::stable::poisson;
use super::{LawError, Sampler};

/// Harris(1, a, k): the law of `1 + kM` with `M` negative binomial of shape
/// `1/k` and success probability `1/a`. Supported on `{1, 1+k, 1+2k, …}`;
/// `k = 1` is geometric(1/a) on `{1, 2, …}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarrisLaw {
    a: f64,
    k: u32,
}

impl HarrisLaw {
    pub fn new(a: f64, k: u32) -> Result<Self, LawError> {
        if !(a > 1.0 && a.is_finite()) {
            return Err(LawError::Parameter {
                name: "a",
                value: a,
                reason: "Harris law needs a > 1".into(),
            });
        }
        if k == 0 {
            return Err(LawError::Parameter {
                name: "k",
                value: 0.0,
                reason: "k must be a positive integer".into(),
            });
        }
        Ok(Self { a, k })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// `P(s) = s / {a − (a−1)s^k}^{1/k}`.
    pub fn pgf(&self, s: f64) -> Result<f64, LawError> {
        if !(0.0..=1.0).contains(&s) {
            return Err(LawError::Domain {
                what: "s",
                value: s,
            });
        }
        Ok(self.pgf_unchecked(s))
    }

    /// The p.g.f. without the `[0, 1]` domain check; used for compositions
    /// where the argument is itself a transform value.
    pub fn pgf_unchecked(&self, s: f64) -> f64 {
        let k = self.k as f64;
        s / (self.a - (self.a - 1.0) * s.powi(self.k as i32)).powf(1.0 / k)
    }

    /// Probability of the atom `1 + k m`.
    pub fn atom_weights(&self, count: usize) -> Vec<f64> {
        let r = 1.0 / self.k as f64;
        let q = 1.0 - 1.0 / self.a;
        let mut w = Vec::with_capacity(count);
        let mut cur = self.a.powf(-r);
        for m in 0..count {
            w.push(cur);
            cur *= (r + m as f64) / (m as f64 + 1.0) * q;
        }
        w
    }

    /// Mass carried by atoms `1 + k m` with `m >= count`.
    pub fn tail_mass(&self, count: usize) -> f64 {
        let head: f64 = self.atom_weights(count).iter().sum();
        (1.0 - head).max(0.0)
    }

    /// Pmf on `{1, 1+k, …}` up to value `n_max`, from the negative binomial
    /// series `P(X = 1+km) = C(1/k + m − 1, m) a^{-1/k} (1 − 1/a)^m`.
    pub fn pmf(&self, n_max: u64) -> LatticePmf {
        let count = if n_max == 0 {
            0
        } else {
            ((n_max - 1) / self.k as u64 + 1) as usize
        };
        let weights = self.atom_weights(count);
        let mass: f64 = weights.iter().sum();
        LatticePmf::new(1, self.k as u64, weights, (1.0 - mass).max(0.0))
    }

    pub fn mean(&self) -> f64 {
        self.a
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let shape = 1.0 / self.k as f64;
        let g = Gamma::new(shape, self.a - 1.0)
            .expect("validated gamma parameters")
            .sample(rng);
        1 + self.k as u64 * poisson(rng, g)
    }
}

impl Sampler for HarrisLaw {
    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        HarrisLaw::sample(self, rng) as f64
    }

    fn integer_valued(&self) -> bool {
        true
    }
}

/// Harris p.g.f. continued to the closed unit disk, where
/// `Re(a − (a−1)z^k) >= 1` keeps the principal root analytic.
pub fn harris_pgf_complex(a: f64, k: u32, z: Complex64) -> Complex64 {
    let denom = a - (a - 1.0) * z.powu(k);
    z * (-(denom.ln()) / k as f64).exp()
}
