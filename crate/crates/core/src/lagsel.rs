//! Data-driven choice of the lag set through per-series tests of serial
//! independence based on partial ordinal kappas.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::estimation::{
    estimate_cumulative_joint, estimate_cumulative_marginal, kappa_from, marginal_features, partial_kappas,
};
use crate::series::{LagSet, OrdinalSeries};

/// Quantile function of the standard normal distribution.
pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    Normal::standard().inverse_cdf(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Correction {
    Bonferroni,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagSelectionConfig {
    pub alpha: f64,
    pub max_lag: usize,
    pub correction: Correction,
}

impl Default for LagSelectionConfig {
    fn default() -> Self {
        Self { alpha: 0.05, max_lag: 5, correction: Correction::Bonferroni }
    }
}

impl LagSelectionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.max_lag == 0 {
            return Err(Error::InvalidConfig("maximum lag must be at least 1".into()));
        }
        Ok(())
    }

    /// Per-test level after the multiple-testing correction for `s` series.
    pub fn corrected_alpha(&self, s: usize) -> f64 {
        match self.correction {
            Correction::Bonferroni => self.alpha / (s * self.max_lag) as f64,
            Correction::None => self.alpha,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagSelectionReport {
    pub ids: Vec<String>,
    /// Largest significant lag per series, 0 when none is significant.
    pub per_series: Vec<usize>,
    pub chosen: usize,
    pub lags: LagSet,
    pub alpha_prime: f64,
    pub critical_value: f64,
    pub fallback: bool,
    /// Series left out because they are constant.
    pub skipped: Vec<String>,
}

/// Absolute standardized statistics for lags `1..=max_lag`. Entries are `NaN`
/// past a lag where the partial-kappa recursion becomes singular.
pub fn kappa_test_statistics(series: &OrdinalSeries, max_lag: usize) -> Result<Vec<f64>> {
    if max_lag == 0 {
        return Err(Error::InvalidLags("maximum lag must be at least 1".into()));
    }
    if max_lag >= series.len() {
        return Err(Error::LagTooLarge { lag: max_lag, len: series.len() });
    }
    let f = estimate_cumulative_marginal(series);
    let disp = marginal_features(&f).disp;
    if disp <= 0.0 {
        return Err(Error::ZeroDispersion(series.id().to_string()));
    }
    let kappas = (1..=max_lag)
        .map(|l| {
            let joint = estimate_cumulative_joint(series, l)?;
            kappa_from(&f, &joint).ok_or_else(|| Error::ZeroDispersion(series.id().to_string()))
        })
        .collect::<Result<Vec<_>>>()?;

    // largest prefix on which the recursion stays regular
    let mut partial = Vec::with_capacity(max_lag);
    for l in (1..=max_lag).rev() {
        if let Ok(p) = partial_kappas(&kappas[..l]) {
            partial = p;
            break;
        }
    }
    partial.resize(max_lag, f64::NAN);

    let fv = f.values();
    let mut ss = 0.0;
    for k in 0..fv.len() {
        for l in 0..fv.len() {
            let v = fv[k.min(l)] - fv[k] * fv[l];
            ss += v * v;
        }
    }
    let t = series.len() as f64;
    let scale = t.sqrt() * disp / (2.0 * ss.sqrt());
    Ok(partial.into_iter().map(|p| (scale * (p + 1.0 / t)).abs()).collect())
}

pub fn kappa_test_statistic(series: &OrdinalSeries, lag: usize) -> Result<f64> {
    Ok(kappa_test_statistics(series, lag)?[lag - 1])
}

pub fn select_lags(series: &[OrdinalSeries], cfg: &LagSelectionConfig) -> Result<LagSelectionReport> {
    cfg.validate()?;
    if series.is_empty() {
        return Err(Error::EmptyDataSet);
    }
    let alpha_prime = cfg.corrected_alpha(series.len());
    let z = normal_quantile(1.0 - alpha_prime / 2.0);
    let outcomes: Vec<Result<usize>> = series
        .par_iter()
        .map(|s| {
            let stats = kappa_test_statistics(s, cfg.max_lag)?;
            Ok(stats.iter().rposition(|&v| v > z).map_or(0, |i| i + 1))
        })
        .collect();

    let mut per_series = Vec::with_capacity(series.len());
    let mut skipped = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(l) => per_series.push(l),
            Err(Error::ZeroDispersion(id)) => {
                log::warn!("series {id:?} is constant and is left out of lag selection");
                skipped.push(id);
                per_series.push(0);
            }
            Err(e) => return Err(e),
        }
    }
    let chosen = per_series.iter().copied().max().unwrap_or(0);
    let fallback = chosen == 0;
    if fallback {
        log::warn!("no significant lag found, falling back to {{1}}");
    }
    Ok(LagSelectionReport {
        ids: series.iter().map(|s| s.id().to_string()).collect(),
        per_series,
        chosen,
        lags: LagSet::up_to(chosen.max(1))?,
        alpha_prime,
        critical_value: z,
        fallback,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::OrdinalRange;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn series(states: Vec<usize>, n: usize) -> OrdinalSeries {
        OrdinalSeries::new("s", OrdinalRange::new(n).unwrap(), states).unwrap()
    }

    #[test]
    fn quantiles_match_reference_values() {
        // reference values from an independent implementation
        let cases = [
            (0.5, 0.0),
            (0.975, 1.959963984540054),
            (0.995, 2.5758293035489004),
            (0.9999, 3.719016485455709),
            (1e-10, -6.361340902404056),
            (0.02425, -1.972961051311885),
            (0.3, -0.5244005127080409),
            (1.0 - 1e-12, 7.0344869100478356),
        ];
        for (p, z) in cases {
            assert_abs_diff_eq!(normal_quantile(p), z, epsilon = 1e-9);
        }
        assert_eq!(normal_quantile(0.0), f64::NEG_INFINITY);
    }

    #[test]
    fn statistic_matches_direct_computation() {
        let s = series(vec![0, 1, 2, 2, 1, 0, 0, 1, 2, 2, 2, 1, 0, 1, 1, 0], 2);
        let stats = kappa_test_statistics(&s, 3).unwrap();
        let expected = [0.677668242265596, 2.2699328613278706, 2.074923117406616];
        for (a, b) in stats.iter().zip(expected) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(kappa_test_statistic(&s, 2).unwrap(), expected[1], epsilon = 1e-12);
    }

    #[test]
    fn constant_series_has_zero_dispersion() {
        let s = series(vec![1; 30], 3);
        assert!(matches!(kappa_test_statistic(&s, 1), Err(Error::ZeroDispersion(_))));
    }

    #[test]
    fn strongly_persistent_series_is_significant() {
        // long runs of each state: partial kappa at lag 1 close to one
        let states: Vec<usize> = (0..600).map(|t| (t / 20) % 4).collect();
        let stat = kappa_test_statistic(&series(states, 3), 1).unwrap();
        assert!(stat > 10.0 * normal_quantile(0.975));
    }

    #[test]
    fn iid_size_is_near_nominal() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let z = normal_quantile(0.975);
        let reps = 1000;
        let mut rejections = 0;
        for _ in 0..reps {
            let x: Vec<usize> = (0..500).map(|_| rng.random_range(0..=3)).collect();
            if kappa_test_statistic(&series(x, 3), 1).unwrap() > z {
                rejections += 1;
            }
        }
        let rate = rejections as f64 / reps as f64;
        assert!((0.03..=0.08).contains(&rate), "rejection rate {rate}");
    }

    #[test]
    fn fallback_and_skips() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut data: Vec<OrdinalSeries> = (0..4)
            .map(|i| {
                let x: Vec<usize> = (0..200).map(|_| rng.random_range(0..=2)).collect();
                OrdinalSeries::new(format!("s{i}"), OrdinalRange::new(2).unwrap(), x).unwrap()
            })
            .collect();
        data.push(OrdinalSeries::new("flat", OrdinalRange::new(2).unwrap(), vec![2; 200]).unwrap());
        let cfg = LagSelectionConfig { alpha: 0.01, max_lag: 3, correction: Correction::Bonferroni };
        let r = select_lags(&data, &cfg).unwrap();
        assert_eq!(r.skipped, vec!["flat".to_string()]);
        assert!(r.fallback);
        assert_eq!(r.lags.lags(), &[1]);
        assert_abs_diff_eq!(r.alpha_prime, 0.01 / 15.0, epsilon = 1e-18);
    }

    #[test]
    fn larger_alpha_never_selects_fewer_lags() {
        let states: Vec<usize> = (0..300).map(|t| ((t / 3) % 3 + t % 2) % 3).collect();
        let data = vec![series(states, 2)];
        let mut last = 0;
        for alpha in [0.001, 0.01, 0.05, 0.2, 0.5] {
            let cfg = LagSelectionConfig { alpha, max_lag: 6, correction: Correction::Bonferroni };
            let chosen = select_lags(&data, &cfg).unwrap().chosen;
            assert!(chosen >= last);
            last = chosen;
        }
    }

    #[test]
    fn config_is_validated() {
        let s = vec![series(vec![0, 1, 0, 1, 1], 1)];
        let bad = LagSelectionConfig { alpha: 1.0, ..Default::default() };
        assert!(matches!(select_lags(&s, &bad), Err(Error::InvalidConfig(_))));
        let long = LagSelectionConfig { max_lag: 5, ..Default::default() };
        assert!(matches!(select_lags(&s, &long), Err(Error::LagTooLarge { .. })));
    }
}
