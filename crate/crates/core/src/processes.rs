//! AR(1) schemes whose observation is the sum, maximum or minimum of `k`
//! independent component chains.
//!
//! Each path `r` draws from `ChaCha20Rng::seed_from_u64(seed)` on stream `r`,
//! so results do not depend on how paths are scheduled. Within a step the
//! p-coin(s) are drawn first, then the innovations of the components that
//! innovate, in component order.

use std::io::Write;
use std::sync::Arc;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::laws::Sampler;

#[derive(Debug, thiserror::Error)]
pub enum ProcessError {
    #[error("invalid scheme parameter {name} = {value}: {reason}")]
    Parameter {
        name: &'static str,
        value: f64,
        reason: String,
    },
    #[error("state {value} at component {component} is outside the scheme's support: {reason}")]
    Domain {
        component: usize,
        value: f64,
        reason: &'static str,
    },
    #[error("state has {got} components, scheme has k = {want}")]
    Dimension { got: usize, want: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Operation joining `b·X_{n−1}` with `ε_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combiner {
    Add,
    Max,
    Min,
    /// `b∘X_{n−1} + ε_n` with binomial thinning; integer states.
    ThinnedAdd,
}

impl Combiner {
    /// Pointwise fold used for the aggregate series.
    pub fn fold(self, values: &[f64]) -> f64 {
        match self {
            Combiner::Add | Combiner::ThinnedAdd => values.iter().sum(),
            Combiner::Max => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            Combiner::Min => values.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoinMode {
    /// One p-coin per step for all components.
    #[default]
    Shared,
    PerComponent,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// `Y_{i,0}` drawn fresh from the innovation law.
    #[default]
    InnovationDraw,
    Custom(Vec<f64>),
}

/// One AR(1) scheme. [`SchemeSpec::new`] and [`SchemeSpec::randomized`]
/// validate; the fields are public so degenerate settings (`b = 0`,
/// `p = 1`, ...) can still be stepped by hand.
#[derive(Debug, Clone)]
pub struct SchemeSpec {
    pub combiner: Combiner,
    /// Skip probability; `None` means every step innovates.
    pub p: Option<f64>,
    pub b: f64,
    pub k: usize,
    pub innovation: Arc<dyn Sampler>,
    pub init: Init,
    pub coin_mode: CoinMode,
    pub burn_in: usize,
}

fn param(name: &'static str, value: f64, reason: &str) -> ProcessError {
    ProcessError::Parameter {
        name,
        value,
        reason: reason.to_string(),
    }
}

impl SchemeSpec {
    pub fn new(
        combiner: Combiner,
        b: f64,
        k: usize,
        innovation: Arc<dyn Sampler>,
    ) -> Result<Self, ProcessError> {
        let spec = Self {
            combiner,
            p: None,
            b,
            k,
            innovation,
            init: Init::InnovationDraw,
            coin_mode: CoinMode::Shared,
            burn_in: 0,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Innovate only with probability `1 − p`.
    pub fn randomized(mut self, p: f64) -> Result<Self, ProcessError> {
        self.p = Some(p);
        self.validate()?;
        Ok(self)
    }

    pub fn with_coin_mode(mut self, mode: CoinMode) -> Self {
        self.coin_mode = mode;
        self
    }

    pub fn with_init(mut self, init: Init) -> Result<Self, ProcessError> {
        self.init = init;
        self.validate()?;
        Ok(self)
    }

    pub fn with_burn_in(mut self, steps: usize) -> Self {
        self.burn_in = steps;
        self
    }

    pub fn is_randomized(&self) -> bool {
        self.p.is_some()
    }

    pub fn validate(&self) -> Result<(), ProcessError> {
        let b = self.b;
        match self.combiner {
            Combiner::Add if !(b > 0.0 && b < 1.0) => {
                return Err(param("b", b, "additive schemes need 0 < b < 1"))
            }
            Combiner::ThinnedAdd if !(b > 0.0 && b < 1.0) => {
                return Err(param("b", b, "thinning probability must lie in (0, 1)"))
            }
            Combiner::Max if !(b > 0.0 && b.is_finite()) => {
                return Err(param("b", b, "maximum schemes need b > 0"))
            }
            Combiner::Min if !(b > 1.0 && b.is_finite()) => {
                return Err(param("b", b, "minimum schemes need b > 1"))
            }
            _ => {}
        }
        if let Some(p) = self.p {
            if !(p > 0.0 && p < 1.0) {
                return Err(param("p", p, "must lie in (0, 1)"));
            }
        }
        if self.k == 0 {
            return Err(param("k", 0.0, "need at least one component"));
        }
        if self.combiner == Combiner::ThinnedAdd && !self.innovation.integer_valued() {
            return Err(param(
                "innovation",
                f64::NAN,
                "thinned schemes need an integer-valued innovation law",
            ));
        }
        if let Init::Custom(values) = &self.init {
            if values.len() != self.k {
                return Err(param("init", values.len() as f64, "need one value per component"));
            }
            check_state(self.combiner, values)?;
        }
        Ok(())
    }
}

fn check_state(combiner: Combiner, state: &[f64]) -> Result<(), ProcessError> {
    for (component, &value) in state.iter().enumerate() {
        match combiner {
            Combiner::Min if !(value >= 0.0) => {
                return Err(ProcessError::Domain {
                    component,
                    value,
                    reason: "minimum schemes live on [0, ∞)",
                })
            }
            Combiner::ThinnedAdd if !(value >= 0.0 && value.fract() == 0.0) => {
                return Err(ProcessError::Domain {
                    component,
                    value,
                    reason: "thinned schemes live on the nonnegative integers",
                })
            }
            _ => {}
        }
    }
    Ok(())
}

/// Binomial thinning `b∘x`: the number of successes among `x` Bernoulli(b)
/// trials.
pub fn thin<R: Rng + ?Sized>(b: f64, x: u64, rng: &mut R) -> u64 {
    if x == 0 || b <= 0.0 {
        return 0;
    }
    if b >= 1.0 {
        return x;
    }
    Binomial::new(x, b)
        .expect("b checked to lie in (0, 1)")
        .sample(rng)
}

/// One transition of all `k` components.
pub fn step(spec: &SchemeSpec, state: &[f64], rng: &mut dyn RngCore) -> Result<Vec<f64>, ProcessError> {
    if state.len() != spec.k {
        return Err(ProcessError::Dimension {
            got: state.len(),
            want: spec.k,
        });
    }
    check_state(spec.combiner, state)?;
    let innovate: Vec<bool> = match (spec.p, spec.coin_mode) {
        (None, _) => vec![true; spec.k],
        (Some(p), CoinMode::Shared) => vec![rng.random::<f64>() >= p; spec.k],
        (Some(p), CoinMode::PerComponent) => {
            (0..spec.k).map(|_| rng.random::<f64>() >= p).collect()
        }
    };
    let mut next = Vec::with_capacity(spec.k);
    for (&y, &fresh) in state.iter().zip(&innovate) {
        let carried = match spec.combiner {
            Combiner::ThinnedAdd => thin(spec.b, y as u64, rng) as f64,
            _ => spec.b * y,
        };
        let value = if fresh {
            let e = spec.innovation.sample(rng);
            match spec.combiner {
                Combiner::Add | Combiner::ThinnedAdd => carried + e,
                Combiner::Max => carried.max(e),
                Combiner::Min => carried.min(e),
            }
        } else {
            carried
        };
        next.push(value);
    }
    Ok(next)
}

/// A simulated path: `components[i][n]` is `Y_{i,n}`, `aggregate[n]` the
/// combiner-fold over `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub path: usize,
    pub seed: u64,
    pub components: Vec<Vec<f64>>,
    pub aggregate: Vec<f64>,
    pub integer: bool,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.aggregate.len()
    }

    pub fn is_empty(&self) -> bool {
        self.aggregate.is_empty()
    }
}

/// Pointwise fold of component series.
pub fn aggregate(components: &[Vec<f64>], combiner: Combiner) -> Vec<f64> {
    let len = components.first().map_or(0, Vec::len);
    let mut column = vec![0.0; components.len()];
    (0..len)
        .map(|n| {
            for (c, series) in column.iter_mut().zip(components) {
                *c = series[n];
            }
            combiner.fold(&column)
        })
        .collect()
}

fn path_rng(seed: u64, path: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(path as u64);
    rng
}

fn simulate_path(
    spec: &SchemeSpec,
    n_steps: usize,
    seed: u64,
    path: usize,
) -> Result<Trajectory, ProcessError> {
    let mut rng = path_rng(seed, path);
    let mut state: Vec<f64> = match &spec.init {
        Init::InnovationDraw => (0..spec.k).map(|_| spec.innovation.sample(&mut rng)).collect(),
        Init::Custom(values) => values.clone(),
    };
    for _ in 0..spec.burn_in {
        state = step(spec, &state, &mut rng)?;
    }
    let mut components = vec![Vec::with_capacity(n_steps + 1); spec.k];
    for n in 0..=n_steps {
        if n > 0 {
            state = step(spec, &state, &mut rng)?;
        }
        for (series, &y) in components.iter_mut().zip(&state) {
            series.push(y);
        }
    }
    let aggregate = aggregate(&components, spec.combiner);
    Ok(Trajectory {
        path,
        seed,
        components,
        aggregate,
        integer: spec.combiner == Combiner::ThinnedAdd || spec.innovation.integer_valued(),
    })
}

/// Simulates `n_paths` independent paths of `n_steps` transitions each
/// (`n_steps + 1` recorded values including `n = 0`).
pub fn simulate(
    spec: &SchemeSpec,
    n_steps: usize,
    n_paths: usize,
    seed: u64,
) -> Result<Vec<Trajectory>, ProcessError> {
    spec.validate()?;
    if n_steps == 0 || n_paths == 0 {
        return Err(param(
            "n_steps",
            n_steps.min(n_paths) as f64,
            "need at least one step and one path",
        ));
    }
    (0..n_paths)
        .into_par_iter()
        .map(|path| simulate_path(spec, n_steps, seed, path))
        .collect()
}

/// Aggregate values at time `n` across paths.
pub fn marginal(trajectories: &[Trajectory], n: usize) -> Vec<f64> {
    trajectories.iter().map(|t| t.aggregate[n]).collect()
}

fn format_value(x: f64, integer: bool) -> String {
    if integer {
        format!("{}", x as i64)
    } else {
        format!("{x:.16e}")
    }
}

/// CSV with columns `path,n,component_1..component_k,aggregate`.
pub fn write_trajectories_csv<W: Write>(
    trajectories: &[Trajectory],
    out: W,
) -> Result<(), ProcessError> {
    let mut w = csv::Writer::from_writer(out);
    let k = trajectories.first().map_or(0, |t| t.components.len());
    let mut header = vec!["path".to_string(), "n".to_string()];
    header.extend((1..=k).map(|i| format!("component_{i}")));
    header.push("aggregate".to_string());
    w.write_record(&header)?;
    for t in trajectories {
        for n in 0..t.len() {
            let mut row = vec![t.path.to_string(), n.to_string()];
            row.extend(t.components.iter().map(|c| format_value(c[n], t.integer)));
            row.push(format_value(t.aggregate[n], t.integer));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponent::{SemiStableExponent, Tail};
    use crate::laws::{Degenerate, GenSemiParetoLaw, HarrisLaw, LatticePmf, LatticeSampler};
    use crate::verify::ks_statistic;
    use proptest::prelude::*;

    fn rng(seed: u64) -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(seed)
    }

    #[test]
    fn step_examples() {
        let mut r = rng(1);
        let innov: Arc<dyn Sampler> = Arc::new(Degenerate(3.0));
        let mut spec = SchemeSpec::new(Combiner::Add, 0.5, 2, innov.clone()).unwrap();
        spec.b = 0.0;
        assert_eq!(step(&spec, &[10.0, -4.0], &mut r).unwrap(), vec![3.0, 3.0]);

        let mut spec = SchemeSpec::new(Combiner::Add, 0.5, 2, innov.clone()).unwrap();
        spec.p = Some(1.0);
        for _ in 0..50 {
            assert_eq!(step(&spec, &[10.0, -4.0], &mut r).unwrap(), vec![5.0, -2.0]);
        }

        let counts: Arc<dyn Sampler> = Arc::new(HarrisLaw::new(2.0, 1).unwrap());
        let mut spec = SchemeSpec::new(Combiner::ThinnedAdd, 0.5, 1, counts).unwrap();
        spec.b = 1.0;
        for _ in 0..50 {
            let next = step(&spec, &[7.0], &mut r).unwrap()[0];
            assert!(next >= 8.0 && next.fract() == 0.0);
        }

        let spec = SchemeSpec::new(Combiner::Max, 2.0, 1, innov.clone()).unwrap();
        assert_eq!(step(&spec, &[1.0], &mut r).unwrap(), vec![3.0]);
        assert_eq!(step(&spec, &[2.0], &mut r).unwrap(), vec![4.0]);
        let spec = SchemeSpec::new(Combiner::Min, 2.0, 1, innov).unwrap();
        assert_eq!(step(&spec, &[1.0], &mut r).unwrap(), vec![2.0]);
        assert!(matches!(
            step(&spec, &[-1.0], &mut r),
            Err(ProcessError::Domain { .. })
        ));
        assert!(matches!(
            step(&spec, &[1.0, 1.0], &mut r),
            Err(ProcessError::Dimension { .. })
        ));
    }

    #[test]
    fn validation() {
        let innov: Arc<dyn Sampler> = Arc::new(Degenerate(1.0));
        assert!(SchemeSpec::new(Combiner::Add, 1.0, 1, innov.clone()).is_err());
        assert!(SchemeSpec::new(Combiner::Min, 0.5, 1, innov.clone()).is_err());
        assert!(SchemeSpec::new(Combiner::Max, 3.0, 1, innov.clone()).is_ok());
        assert!(SchemeSpec::new(Combiner::Add, 0.5, 0, innov.clone()).is_err());
        let spec = SchemeSpec::new(Combiner::Add, 0.5, 1, innov.clone()).unwrap();
        assert!(spec.clone().randomized(1.5).is_err());
        assert!(spec.clone().randomized(0.0).is_err());
        assert!(spec.with_init(Init::Custom(vec![1.0, 2.0])).is_err());
        let real: Arc<dyn Sampler> = Arc::new(Degenerate(0.5));
        assert!(SchemeSpec::new(Combiner::ThinnedAdd, 0.5, 1, real).is_err());
    }

    #[test]
    fn thinning() {
        let mut r = rng(2);
        assert_eq!(thin(0.3, 0, &mut r), 0);
        assert_eq!(thin(1.0, 17, &mut r), 17);
        assert_eq!(thin(0.0, 17, &mut r), 0);
        let n = 100_000;
        let mean = (0..n).map(|_| thin(0.5, 10, &mut r) as f64).sum::<f64>() / n as f64;
        let se = (2.5 / n as f64).sqrt();
        assert!((mean - 5.0).abs() < 3.0 * se, "{mean}");
    }

    #[test]
    fn aggregate_examples() {
        let y = vec![1.0, -2.0, 3.5];
        assert_eq!(aggregate(&[y.clone()], Combiner::Add), y);
        assert_eq!(aggregate(&[y.clone()], Combiner::Min), y);
        let three = aggregate(&[y.clone(), y.clone(), y.clone()], Combiner::Add);
        assert_eq!(three, vec![3.0, -6.0, 10.5]);
        let m = aggregate(&[vec![1.0, 5.0], vec![4.0, 2.0]], Combiner::Max);
        assert_eq!(m, vec![4.0, 5.0]);
    }

    fn pareto_min_spec(k: usize) -> (GenSemiParetoLaw, SchemeSpec) {
        let law = GenSemiParetoLaw::from_p(1.0, 1.2, 0.0, 0.5, k as u32).unwrap();
        let c = law.exponent().c();
        let spec = SchemeSpec::new(Combiner::Min, c, k, Arc::new(law.clone()))
            .unwrap()
            .randomized(law.p())
            .unwrap();
        (law, spec)
    }

    #[test]
    fn deterministic_and_order_free() {
        let (_, spec) = pareto_min_spec(2);
        let a = simulate(&spec, 20, 64, 9).unwrap();
        let b = simulate(&spec, 20, 64, 9).unwrap();
        assert_eq!(a, b);
        let c = simulate(&spec, 20, 64, 10).unwrap();
        assert_ne!(a, c);
        // a path only depends on (seed, path)
        let single = simulate_path(&spec, 20, 9, 17).unwrap();
        assert_eq!(single, a[17]);
        for t in &a {
            assert_eq!(t.len(), 21);
            for n in 0..t.len() {
                let col: Vec<f64> = t.components.iter().map(|c| c[n]).collect();
                assert_eq!(t.aggregate[n], Combiner::Min.fold(&col));
            }
        }
    }

    #[test]
    fn k1_aggregate_is_component() {
        let innov: Arc<dyn Sampler> = Arc::new(HarrisLaw::new(3.0, 1).unwrap());
        let spec = SchemeSpec::new(Combiner::Add, 0.4, 1, innov).unwrap();
        for t in simulate(&spec, 10, 5, 3).unwrap() {
            assert_eq!(t.aggregate, t.components[0]);
        }
    }

    #[test]
    fn min_scheme_marginal_matches_pareto() {
        let (_, spec) = pareto_min_spec(2);
        // the aggregate of two semi-Pareto(1/2) components is semi-Pareto(1)
        let agg_law = GenSemiParetoLaw::from_p(1.0, 1.2, 0.0, 0.5, 1).unwrap();
        let paths = simulate(&spec, 25, 10_000, 2024).unwrap();
        let mut xs = marginal(&paths, 25);
        xs.sort_by(f64::total_cmp);
        let ks = ks_statistic(&xs, |x| agg_law.df(x).unwrap_or(0.0)).unwrap();
        assert!(ks.p_value > 0.01, "D = {}, p = {}", ks.d, ks.p_value);
    }

    #[test]
    fn explosive_max_coupling() {
        let law = crate::laws::GammaMaxSemiStableLaw::new(
            SemiStableExponent::power(1.0, 1.0, 0.5, Tail::Decreasing).unwrap(),
            1,
        )
        .unwrap();
        let innov: Arc<dyn Sampler> = Arc::new(law);
        let bs = [0.5, 1.0, 1.5, 3.0];
        let runs: Vec<Vec<Trajectory>> = bs
            .iter()
            .map(|&b| {
                let spec = SchemeSpec::new(Combiner::Max, b, 2, innov.clone())
                    .unwrap()
                    .randomized(0.3)
                    .unwrap();
                simulate(&spec, 30, 50, 77).unwrap()
            })
            .collect();
        for w in runs.windows(2) {
            for (lo, hi) in w[0].iter().zip(&w[1]) {
                for (x, y) in lo.aggregate.iter().zip(&hi.aggregate) {
                    assert!(y >= x);
                }
            }
        }
        assert!(runs[3].iter().all(|t| t.aggregate.iter().all(|x| x.is_finite())));
    }

    #[test]
    fn support_and_gaps() {
        // stride-3 innovations: the thinned part breaks the gap
        let pmf = LatticePmf::new(0, 3, vec![0.5, 0.3, 0.2], 0.0);
        let innov: Arc<dyn Sampler> = Arc::new(LatticeSampler::new(pmf).unwrap());
        let spec = SchemeSpec::new(Combiner::ThinnedAdd, 0.5, 2, innov).unwrap();
        let paths = simulate(&spec, 40, 200, 5).unwrap();
        let mut off_lattice = 0usize;
        for t in &paths {
            for c in &t.components {
                assert!(c.iter().all(|x| *x >= 0.0 && x.fract() == 0.0));
                off_lattice += c.iter().filter(|x| (**x as u64) % 3 != 0).count();
            }
        }
        assert!(off_lattice > 0);

        let (_, spec) = pareto_min_spec(3);
        for t in simulate(&spec, 40, 50, 6).unwrap() {
            assert!(t.aggregate.iter().all(|x| *x >= 0.0));
        }
    }

    #[test]
    fn csv_layout() {
        let (_, spec) = pareto_min_spec(2);
        let paths = simulate(&spec, 2, 2, 1).unwrap();
        let mut buf = Vec::new();
        write_trajectories_csv(&paths, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "path,n,component_1,component_2,aggregate");
        assert_eq!(lines.len(), 1 + 2 * 3);
        assert!(lines[1].starts_with("0,0,"));
        let value: f64 = lines[1].split(',').nth(2).unwrap().parse().unwrap();
        assert_eq!(value, paths[0].components[0][0]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn thin_bounded(b in 0.0f64..=1.0, x in 0u64..500, seed in any::<u64>()) {
            let mut r = rng(seed);
            prop_assert!(thin(b, x, &mut r) <= x);
        }

        #[test]
        fn aggregate_is_fold(k in 1usize..4, seed in any::<u64>()) {
            let innov: Arc<dyn Sampler> = Arc::new(HarrisLaw::new(2.0, 2).unwrap());
            let spec = SchemeSpec::new(Combiner::ThinnedAdd, 0.6, k, innov)
                .unwrap()
                .randomized(0.5)
                .unwrap()
                .with_coin_mode(CoinMode::PerComponent);
            let t = simulate(&spec, 10, 1, seed).unwrap().remove(0);
            prop_assert_eq!(aggregate(&t.components, Combiner::ThinnedAdd), t.aggregate);
        }
    }
}
