//! Per-series estimators: marginal and lagged joint probabilities (cumulative
//! and mass), block-distance features, ordinal Cohen's kappa, partial kappas
//! and the autocorrelation of the underlying count series.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{LagSet, OrdinalSeries};

/// `f̂_i = P̂(X ≤ s_i)` for `i = 0..n-1`; `f̂_n = 1` is implicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulativeMarginal(pub Vec<f64>);

impl CumulativeMarginal {
    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// Value at `i`, with `f̂_{-1} = 0` and `f̂_n = 1`.
    fn at(&self, i: isize) -> f64 {
        if i < 0 {
            0.0
        } else if i as usize >= self.0.len() {
            1.0
        } else {
            self.0[i as usize]
        }
    }

    /// Mass function recovered by differencing.
    pub fn to_pmf(&self) -> MarginalPmf {
        let n = self.n() as isize;
        MarginalPmf((0..=n).map(|i| self.at(i) - self.at(i - 1)).collect())
    }
}

/// `n × n` matrix of `f̂_ij(lag)`, row index for the earlier observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulativeJoint {
    pub lag: usize,
    pub n: usize,
    pub values: Vec<f64>,
}

impl CumulativeJoint {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalPmf(pub Vec<f64>);

impl MarginalPmf {
    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// `(n+1) × (n+1)` matrix of `p̂_ij(lag)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointPmf {
    pub lag: usize,
    pub size: usize,
    pub values: Vec<f64>,
}

impl JointPmf {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.size + j]
    }
}

/// Raw (unnormalized) block-distance features of the marginal distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginalFeatures {
    pub loc: f64,
    pub disp: f64,
    pub asym: f64,
    pub skew: f64,
}

fn state_counts(states: &[usize], n: usize) -> Vec<u64> {
    let mut counts = vec![0u64; n + 1];
    for &s in states {
        counts[s] += 1;
    }
    counts
}

fn pair_counts(states: &[usize], n: usize, lag: usize) -> Vec<u64> {
    let size = n + 1;
    let mut counts = vec![0u64; size * size];
    for (a, b) in states.iter().zip(&states[lag..]) {
        counts[a * size + b] += 1;
    }
    counts
}

fn check_lag(series: &OrdinalSeries, lag: usize) -> Result<()> {
    if lag == 0 {
        return Err(Error::InvalidLags("lag must be positive".into()));
    }
    if lag >= series.len() {
        return Err(Error::LagTooLarge { lag, len: series.len() });
    }
    Ok(())
}

pub fn estimate_cumulative_marginal(series: &OrdinalSeries) -> CumulativeMarginal {
    let n = series.n();
    let t = series.len() as f64;
    let counts = state_counts(series.states(), n);
    let mut acc = 0u64;
    let f = counts[..n]
        .iter()
        .map(|&c| {
            acc += c;
            acc as f64 / t
        })
        .collect();
    CumulativeMarginal(f)
}

pub fn estimate_cumulative_joint(series: &OrdinalSeries, lag: usize) -> Result<CumulativeJoint> {
    check_lag(series, lag)?;
    let n = series.n();
    let size = n + 1;
    let counts = pair_counts(series.states(), n, lag);
    // 2-D prefix sums over integer counts, so entries are exact count / (T - lag).
    let mut cum = vec![0u64; size * size];
    for i in 0..size {
        let mut row = 0u64;
        for j in 0..size {
            row += counts[i * size + j];
            cum[i * size + j] = row + if i > 0 { cum[(i - 1) * size + j] } else { 0 };
        }
    }
    let norm = (series.len() - lag) as f64;
    let mut values = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            values.push(cum[i * size + j] as f64 / norm);
        }
    }
    Ok(CumulativeJoint { lag, n, values })
}

pub fn estimate_marginal_pmf(series: &OrdinalSeries) -> MarginalPmf {
    let t = series.len() as f64;
    MarginalPmf(state_counts(series.states(), series.n()).into_iter().map(|c| c as f64 / t).collect())
}

pub fn estimate_joint_pmf(series: &OrdinalSeries, lag: usize) -> Result<JointPmf> {
    check_lag(series, lag)?;
    let size = series.n() + 1;
    let norm = (series.len() - lag) as f64;
    let values = pair_counts(series.states(), series.n(), lag).into_iter().map(|c| c as f64 / norm).collect();
    Ok(JointPmf { lag, size, values })
}

/// Marginal mass function plus one joint mass matrix per lag.
pub fn estimate_pmf(series: &OrdinalSeries, lags: &LagSet) -> Result<(MarginalPmf, Vec<JointPmf>)> {
    let joints = lags.lags().iter().map(|&l| estimate_joint_pmf(series, l)).collect::<Result<Vec<_>>>()?;
    Ok((estimate_marginal_pmf(series), joints))
}

/// Location, dispersion, asymmetry and skewness from the block distance.
///
/// `skew` is `E|X - s_n| - E|X - s_0| = 2 Σ f_i - n`, which lies in `[-n, n]`
/// like the other features before the `1/n` scaling applied by the `d2`
/// marginal component.
pub fn marginal_features(f: &CumulativeMarginal) -> MarginalFeatures {
    let n = f.n();
    let v = f.values();
    let loc = (0..n).map(|i| (i + 1) as f64 * (f.at(i as isize + 1) - v[i])).sum();
    let disp = 2.0 * v.iter().map(|&x| x * (1.0 - x)).sum::<f64>();
    let asym = (0..n)
        .map(|i| {
            let d = 1.0 - v[i] - v[n - i - 1];
            d * d
        })
        .sum();
    let skew = 2.0 * v.iter().sum::<f64>() - n as f64;
    MarginalFeatures { loc, disp, asym, skew }
}

/// Ordinal Cohen's kappa from already estimated cumulative quantities.
pub fn kappa_from(f: &CumulativeMarginal, joint: &CumulativeJoint) -> Option<f64> {
    let denom: f64 = f.values().iter().map(|&x| x * (1.0 - x)).sum();
    if denom <= 0.0 {
        return None;
    }
    let num: f64 = f.values().iter().enumerate().map(|(i, &fi)| joint.get(i, i) - fi * fi).sum();
    Some(num / denom)
}

/// `κ̂(lag) = Σ (f̂_ii(lag) - f̂_i²) / Σ f̂_i (1 - f̂_i)`. Not clamped.
pub fn ordinal_kappa(series: &OrdinalSeries, lag: usize) -> Result<f64> {
    let joint = estimate_cumulative_joint(series, lag)?;
    let f = estimate_cumulative_marginal(series);
    kappa_from(&f, &joint).ok_or_else(|| Error::ZeroDispersion(series.id().to_string()))
}

/// Partial coefficients of an autocorrelation-like sequence `r(1..=L)` via the
/// Durbin-Levinson recursion (`r(0) = 1` implicit).
pub fn partial_kappas(r: &[f64]) -> Result<Vec<f64>> {
    let mut partial = Vec::with_capacity(r.len());
    let mut phi: Vec<f64> = Vec::with_capacity(r.len());
    let mut v: f64 = 1.0;
    for k in 0..r.len() {
        let num = r[k] - phi.iter().enumerate().map(|(j, p)| p * r[k - 1 - j]).sum::<f64>();
        if v.abs() < 1e-14 {
            return Err(Error::SingularRecursion(k + 1));
        }
        let a = num / v;
        let prev = phi.clone();
        for j in 0..k {
            phi[j] = prev[j] - a * prev[k - 1 - j];
        }
        phi.push(a);
        v *= 1.0 - a * a;
        partial.push(a);
    }
    Ok(partial)
}

/// Sample autocorrelation of the count series at `lag`.
pub fn count_acf(series: &OrdinalSeries, lag: usize) -> Result<f64> {
    if lag >= series.len() {
        return Err(Error::LagTooLarge { lag, len: series.len() });
    }
    let x = series.states();
    let t = x.len() as f64;
    let mean = x.iter().map(|&v| v as f64).sum::<f64>() / t;
    let gamma0: f64 = x.iter().map(|&v| (v as f64 - mean).powi(2)).sum();
    if gamma0 <= 0.0 {
        return Err(Error::ZeroVariance(series.id().to_string()));
    }
    let gamma: f64 = x.iter().zip(&x[lag..]).map(|(&a, &b)| (a as f64 - mean) * (b as f64 - mean)).sum();
    Ok(gamma / gamma0)
}

/// Every per-series quantity the distance layer needs, computed once.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRepr {
    pub id: String,
    pub n: usize,
    pub len: usize,
    pub lags: LagSet,
    pub cumulative: CumulativeMarginal,
    pub cumulative_joint: Vec<CumulativeJoint>,
    pub pmf: MarginalPmf,
    pub joint_pmf: Vec<JointPmf>,
    pub features: MarginalFeatures,
    pub kappa: Vec<f64>,
    pub acf: Vec<f64>,
    /// Set when the series is constant: kappa and ACF are then reported as 0.
    pub degenerate: bool,
}

pub fn build_repr(series: &OrdinalSeries, lags: &LagSet) -> Result<SeriesRepr> {
    lags.check_length(series.len())?;
    let cumulative = estimate_cumulative_marginal(series);
    let cumulative_joint =
        lags.lags().iter().map(|&l| estimate_cumulative_joint(series, l)).collect::<Result<Vec<_>>>()?;
    let (pmf, joint_pmf) = estimate_pmf(series, lags)?;
    let features = marginal_features(&cumulative);

    let kappa_raw: Option<Vec<f64>> = cumulative_joint.iter().map(|j| kappa_from(&cumulative, j)).collect();
    let degenerate = kappa_raw.is_none();
    if degenerate {
        log::warn!("series {:?} is constant; kappa and ACF set to 0", series.id());
    }
    let kappa = kappa_raw.unwrap_or_else(|| vec![0.0; lags.len()]);
    let acf = lags
        .lags()
        .iter()
        .map(|&l| match count_acf(series, l) {
            Ok(v) => Ok(v),
            Err(Error::ZeroVariance(_)) => Ok(0.0),
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(SeriesRepr {
        id: series.id().to_string(),
        n: series.n(),
        len: series.len(),
        lags: lags.clone(),
        cumulative,
        cumulative_joint,
        pmf,
        joint_pmf,
        features,
        kappa,
        acf,
        degenerate,
    })
}

/// Builds representations for a whole data set in parallel, preserving order.
pub fn build_reprs(series: &[OrdinalSeries], lags: &LagSet) -> Result<Vec<SeriesRepr>> {
    use rayon::prelude::*;
    series.par_iter().map(|s| build_repr(s, lags)).collect()
}
