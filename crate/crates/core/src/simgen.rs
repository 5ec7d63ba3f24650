//! Seeded simulators for binomial AR(p), binomial INARCH(p) and ordinal logit
//! AR(1) processes, and the catalog of benchmark scenarios.
//!
//! Each series in a data set owns its own ChaCha8 stream: the generator is
//! seeded with the data-set seed and the stream is set to the series index,
//! so series are reproducible independently of generation order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{LagSet, OrdinalRange, OrdinalSeries};

pub const BURN_IN: usize = 500;

/// Draw from Bin(n, p); `p` is clamped to [0, 1].
pub fn binomial<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> usize {
    let p = p.clamp(0.0, 1.0);
    Binomial::new(n as u64, p).expect("p in [0, 1]").sample(rng) as usize
}

/// `a ∘ y`: number of successes among `y` independent trials with probability `a`.
pub fn binomial_thinning<R: Rng + ?Sized>(y: usize, a: f64, rng: &mut R) -> usize {
    binomial(y, a, rng)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinomialArParams {
    pub n: usize,
    pub alpha: f64,
    pub beta: f64,
    /// Regime probabilities for lags `1..=p`.
    pub phi: Vec<f64>,
}

impl BinomialArParams {
    pub fn ar1(n: usize, alpha: f64, beta: f64) -> Self {
        Self { n, alpha, beta, phi: vec![1.0] }
    }

    pub fn order(&self) -> usize {
        self.phi.len()
    }

    /// Stationary success probability `β / (1 − α + β)`.
    pub fn pi(&self) -> f64 {
        self.beta / (1.0 - self.alpha + self.beta)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::InvalidParams("n must be at least 1".into()));
        }
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidParams(format!("{name} = {v} outside (0, 1)")));
            }
        }
        if self.phi.is_empty() || self.phi.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::InvalidParams("phi must be nonempty and non-negative".into()));
        }
        if (self.phi.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParams("phi must sum to 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinomialInarchParams {
    pub n: usize,
    pub alphas: Vec<f64>,
    pub beta: f64,
}

impl BinomialInarchParams {
    pub fn order(&self) -> usize {
        self.alphas.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::InvalidParams("n must be at least 1".into()));
        }
        if self.alphas.is_empty() || self.alphas.iter().any(|&a| !(a >= 0.0)) {
            return Err(Error::InvalidParams("alphas must be nonempty and non-negative".into()));
        }
        let top = self.beta + self.alphas.iter().sum::<f64>();
        if !(self.beta > 0.0 && self.beta < 1.0 && top > 0.0 && top < 1.0) {
            return Err(Error::InvalidParams(format!(
                "need beta and beta + sum(alpha) in (0, 1), got {} and {top}",
                self.beta
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrdinalLogitParams {
    pub n: usize,
    /// Effect of the previous state `j < n`; state `n` is the reference.
    pub alpha: Vec<f64>,
    /// Strictly increasing thresholds `η_0 < … < η_{n−1}`.
    pub eta: Vec<f64>,
}

impl OrdinalLogitParams {
    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::InvalidParams("n must be at least 1".into()));
        }
        if self.alpha.len() != self.n || self.eta.len() != self.n {
            return Err(Error::InvalidParams(format!(
                "alpha and eta need length n = {}, got {} and {}",
                self.n,
                self.alpha.len(),
                self.eta.len()
            )));
        }
        if self.eta.windows(2).any(|w| !(w[0] < w[1])) || self.alpha.iter().chain(&self.eta).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("eta must be finite and strictly increasing".into()));
        }
        Ok(())
    }
}

fn check_length(t: usize) -> Result<()> {
    if t < 2 {
        return Err(Error::InvalidParams(format!("length {t} is below 2")));
    }
    Ok(())
}

fn to_series(id: &str, n: usize, states: Vec<usize>) -> Result<OrdinalSeries> {
    OrdinalSeries::new(id, OrdinalRange::new(n)?, states)
}

pub fn simulate_binomial_ar<R: Rng + ?Sized>(
    params: &BinomialArParams,
    t: usize,
    rng: &mut R,
) -> Result<OrdinalSeries> {
    params.validate()?;
    check_length(t)?;
    let (n, p) = (params.n, params.order());
    let pi = params.pi();
    let mut x: Vec<usize> = (0..p).map(|_| binomial(n, pi, rng)).collect();
    let total = p + BURN_IN + t;
    while x.len() < total {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut lag = p;
        for (i, w) in params.phi.iter().enumerate() {
            acc += w;
            if u < acc {
                lag = i + 1;
                break;
            }
        }
        let prev = x[x.len() - lag];
        let next = binomial_thinning(prev, params.alpha, rng) + binomial_thinning(n - prev, params.beta, rng);
        x.push(next);
    }
    to_series("binar", n, x.split_off(total - t))
}

pub fn simulate_binomial_inarch<R: Rng + ?Sized>(
    params: &BinomialInarchParams,
    t: usize,
    rng: &mut R,
) -> Result<OrdinalSeries> {
    params.validate()?;
    check_length(t)?;
    let (n, p) = (params.n, params.order());
    let mut x = vec![0usize; p];
    let total = p + BURN_IN + t;
    while x.len() < total {
        let k = x.len();
        let pi = params.beta
            + params.alphas.iter().enumerate().map(|(i, a)| a * x[k - 1 - i] as f64).sum::<f64>() / n as f64;
        assert!((0.0..=1.0).contains(&pi), "success probability {pi} left [0, 1]");
        x.push(binomial(n, pi, rng));
    }
    to_series("inarch", n, x.split_off(total - t))
}

fn standard_logistic<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return (u / (1.0 - u)).ln();
        }
    }
}

pub fn simulate_ordinal_logit_ar1<R: Rng + ?Sized>(
    params: &OrdinalLogitParams,
    t: usize,
    rng: &mut R,
) -> Result<OrdinalSeries> {
    params.validate()?;
    check_length(t)?;
    let n = params.n;
    let draw = |shift: f64, rng: &mut R| {
        let q = standard_logistic(rng) - shift;
        params.eta.iter().take_while(|&&e| e <= q).count()
    };
    let total = BURN_IN + t;
    let mut x = Vec::with_capacity(total);
    x.push(draw(0.0, rng));
    while x.len() < total {
        let prev = *x.last().expect("nonempty");
        let shift = if prev < n { params.alpha[prev] } else { 0.0 };
        x.push(draw(shift, rng));
    }
    to_series("logit", n, x.split_off(total - t))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum Generator {
    BinomialAr(BinomialArParams),
    BinomialInarch(BinomialInarchParams),
    OrdinalLogit(OrdinalLogitParams),
}

impl Generator {
    pub fn n(&self) -> usize {
        match self {
            Generator::BinomialAr(p) => p.n,
            Generator::BinomialInarch(p) => p.n,
            Generator::OrdinalLogit(p) => p.n,
        }
    }

    pub fn simulate<R: Rng + ?Sized>(&self, t: usize, rng: &mut R) -> Result<OrdinalSeries> {
        match self {
            Generator::BinomialAr(p) => simulate_binomial_ar(p, t, rng),
            Generator::BinomialInarch(p) => simulate_binomial_inarch(p, t, rng),
            Generator::OrdinalLogit(p) => simulate_ordinal_logit_ar1(p, t, rng),
        }
    }
}

/// RNG for series `index` of a data set generated with `seed`.
pub fn series_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// A group of series sharing one generator. `label` is `None` for isolated series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub generator: Generator,
    pub count: usize,
    pub label: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub id: u32,
    pub n: usize,
    pub groups: Vec<GroupSpec>,
    /// One length per series, in group order.
    pub lengths: Vec<usize>,
    pub default_lags: LagSet,
}

impl ScenarioSpec {
    /// Number of regular (labelled) groups.
    pub fn clusters(&self) -> usize {
        self.groups.iter().filter(|g| g.label.is_some()).count()
    }

    pub fn series_count(&self) -> usize {
        self.groups.iter().map(|g| g.count).sum()
    }

    pub fn generate(&self, seed: u64) -> Result<LabeledDataSet> {
        let plan: Vec<(String, &Generator, Option<usize>)> = self
            .groups
            .iter()
            .flat_map(|g| {
                (0..g.count).map(move |k| {
                    let id = match g.label {
                        Some(c) => format!("C{}-{}", c + 1, k + 1),
                        None => format!("ISO-{}", k + 1),
                    };
                    (id, &g.generator, g.label)
                })
            })
            .collect();
        if plan.len() != self.lengths.len() {
            return Err(Error::SizeMismatch(plan.len(), self.lengths.len()));
        }
        let series = plan
            .par_iter()
            .enumerate()
            .map(|(i, (id, g, _))| {
                let mut rng = series_rng(seed, i as u64);
                Ok(g.simulate(self.lengths[i], &mut rng)?.with_id(id.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(LabeledDataSet {
            series,
            labels: plan.iter().map(|p| p.2).collect(),
            clusters: self.clusters(),
            default_lags: self.default_lags.clone(),
        })
    }
}

/// Simulated series with ground truth; `labels[i]` is `None` for isolated series.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataSet {
    pub series: Vec<OrdinalSeries>,
    pub labels: Vec<Option<usize>>,
    pub clusters: usize,
    pub default_lags: LagSet,
}

fn bar(n: usize, alpha: f64, beta: f64) -> Generator {
    Generator::BinomialAr(BinomialArParams::ar1(n, alpha, beta))
}

fn bar2(n: usize, alpha: f64, beta: f64, phi1: f64, phi2: f64) -> Generator {
    Generator::BinomialAr(BinomialArParams { n, alpha, beta, phi: vec![phi1, phi2] })
}

fn inarch(n: usize, alphas: &[f64], beta: f64) -> Generator {
    Generator::BinomialInarch(BinomialInarchParams { n, alphas: alphas.to_vec(), beta })
}

fn logit(n: usize, alpha: &[f64]) -> Generator {
    Generator::OrdinalLogit(OrdinalLogitParams { n, alpha: alpha.to_vec(), eta: default_eta(n) })
}

/// `n` thresholds equally spaced on [−2, 2]; for n = 5 this is (−2, −1, 0, 1, 2).
pub fn default_eta(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.0];
    }
    (0..n).map(|j| -2.0 + 4.0 * j as f64 / (n - 1) as f64).collect()
}

/// Pattern (1, −2, 3, 4, 5, 6, …) truncated to `n` entries.
fn strong_logit_alpha(n: usize) -> Vec<f64> {
    (1..=n).map(|k| if k == 2 { -2.0 } else { k as f64 }).collect()
}

fn regular(generators: Vec<Generator>, count: usize) -> Vec<GroupSpec> {
    generators.into_iter().enumerate().map(|(c, generator)| GroupSpec { generator, count, label: Some(c) }).collect()
}

fn scenario4_generators(n: usize) -> Vec<Generator> {
    vec![
        bar(n, 0.70, 0.20),
        bar(n, 0.72, 0.12),
        logit(n, &strong_logit_alpha(n)),
        inarch(n, &[0.1, 0.3, 0.2], 0.2),
        inarch(n, &[0.1, 0.2, 0.3], 0.2),
        inarch(n, &[0.1, 0.25, 0.25], 0.2),
    ]
}

/// Specification of benchmark scenario `id`. `t = None` is only allowed for
/// scenario 5, whose lengths are then drawn per series.
pub fn scenario_spec(id: u32, t: Option<usize>, seed: u64) -> Result<ScenarioSpec> {
    const N: usize = 5;
    let need_t = || t.ok_or_else(|| Error::InvalidConfig(format!("scenario {id} needs a series length")));
    let lags = |v: Vec<usize>| LagSet::new(v).expect("static lag sets are valid");
    let (n, groups, default_lags) = match id {
        1 => (
            N,
            regular(
                vec![
                    bar(N, 0.70, 0.20),
                    bar(N, 0.72, 0.12),
                    bar2(N, 0.76, 0.06, 0.5, 0.5),
                    bar2(N, 0.91, 0.01, 0.5, 0.5),
                ],
                5,
            ),
            lags(vec![1, 2]),
        ),
        2 => (
            N,
            regular(
                vec![
                    inarch(N, &[0.30], 0.35),
                    inarch(N, &[0.30], 0.40),
                    inarch(N, &[0.1, 0.1], 0.2),
                    inarch(N, &[0.1, 0.1], 0.4),
                ],
                5,
            ),
            lags(vec![1, 2]),
        ),
        3 => (
            N,
            regular(
                vec![
                    logit(N, &[0.4, -0.8, 1.2, 1.6, 2.0]),
                    logit(N, &[0.6, -1.2, 1.8, 2.4, 3.0]),
                    logit(N, &[0.8, -1.6, 2.4, 3.2, 4.0]),
                    logit(N, &[1.0, -2.0, 3.0, 4.0, 5.0]),
                ],
                5,
            ),
            lags(vec![1]),
        ),
        4 => (N, regular(scenario4_generators(N), 5), lags(vec![1, 2, 3])),
        5 => {
            let mut rng = series_rng(seed, u64::MAX);
            let n = rng.random_range(1..=10);
            let groups: Vec<GroupSpec> = scenario4_generators(n)
                .into_iter()
                .enumerate()
                .map(|(c, generator)| GroupSpec { generator, count: rng.random_range(2..=10), label: Some(c) })
                .collect();
            let total: usize = groups.iter().map(|g| g.count).sum();
            let lengths = match t {
                Some(t) => vec![t; total],
                None => (0..total).map(|_| 100 * rng.random_range(1..=5)).collect(),
            };
            return Ok(ScenarioSpec { id, n, groups, lengths, default_lags: lags(vec![1, 2, 3]) });
        }
        6 | 7 => {
            let pair = if id == 6 {
                vec![bar(N, 0.52, 0.12), bar2(N, 0.42, 0.07, 0.1, 0.9)]
            } else {
                vec![inarch(N, &[0.1, 0.1], 0.1), inarch(N, &[0.5, 0.1], 0.1)]
            };
            let mut groups = regular(pair, 5);
            groups.push(GroupSpec { generator: logit(N, &[0.5, -1.0, 1.5, 2.0, 2.5]), count: 1, label: None });
            (N, groups, lags(vec![1, 2]))
        }
        other => return Err(Error::UnknownScenario(other)),
    };
    let t = need_t()?;
    let total = groups.iter().map(|g| g.count).sum();
    Ok(ScenarioSpec { id, n, groups, lengths: vec![t; total], default_lags })
}

/// Simulates benchmark scenario `id` with series length `t` (`None` for
/// variable lengths, scenario 5 only).
pub fn scenario(id: u32, t: Option<usize>, seed: u64) -> Result<LabeledDataSet> {
    scenario_spec(id, t, seed)?.generate(seed)
}
