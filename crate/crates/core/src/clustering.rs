//! Standard and weighted fuzzy C-medoids over precomputed distance matrices.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;
use crate::metrics::DistanceMatrix;

pub const DEFAULT_MAX_ITER: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterConfig {
    pub clusters: usize,
    pub m: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// Independent starts; the run with the lowest objective is kept.
    pub restarts: usize,
    pub weighted: bool,
    pub initial_beta: f64,
    /// Keep β at `initial_beta` for the whole weighted run.
    #[serde(default)]
    pub freeze_beta: bool,
}

impl ClusterConfig {
    pub fn new(clusters: usize, m: f64) -> Self {
        Self {
            clusters,
            m,
            max_iter: DEFAULT_MAX_ITER,
            seed: 0,
            restarts: 1,
            weighted: false,
            initial_beta: 0.5,
            freeze_beta: false,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn weighted(mut self, initial_beta: f64) -> Self {
        self.weighted = true;
        self.initial_beta = initial_beta;
        self
    }

    pub fn validate(&self, series: usize) -> Result<()> {
        if self.clusters < 2 {
            return Err(Error::InvalidConfig(format!("C must be at least 2, got {}", self.clusters)));
        }
        if !(self.m.is_finite() && self.m > 1.0) {
            return Err(Error::InvalidConfig(format!("m must be > 1, got {}", self.m)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be positive".into()));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidConfig("restarts must be positive".into()));
        }
        if self.weighted && !(0.0..=1.0).contains(&self.initial_beta) {
            return Err(Error::InvalidConfig(format!("initial beta {} outside [0, 1]", self.initial_beta)));
        }
        if self.clusters > series {
            return Err(Error::TooFewSeries { clusters: self.clusters, series });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzyPartition {
    /// Row `i` holds the memberships of series `i`.
    pub memberships: Vec<Vec<f64>>,
    pub medoids: Vec<usize>,
    pub beta: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub objective: f64,
    /// Objective after every membership update.
    pub objective_trace: Vec<f64>,
}

impl FuzzyPartition {
    pub fn len(&self) -> usize {
        self.memberships.len()
    }

    pub fn is_empty(&self) -> bool {
        self.memberships.is_empty()
    }

    pub fn clusters(&self) -> usize {
        self.medoids.len()
    }

    pub fn hard_labels(&self) -> Vec<usize> {
        crispify(&self.memberships)
    }
}

/// Memberships of one object given its distances to the C medoids.
pub fn membership_row(dist: &[f64], m: f64) -> Vec<f64> {
    let zeros = dist.iter().filter(|&&d| d == 0.0).count();
    if zeros > 0 {
        let w = 1.0 / zeros as f64;
        return dist.iter().map(|&d| if d == 0.0 { w } else { 0.0 }).collect();
    }
    // u_c ∝ d_c^{-1/(m-1)}, normalized in log space to survive m close to 1
    let e = 1.0 / (m - 1.0);
    let logw: Vec<f64> = dist.iter().map(|d| -e * d.ln()).collect();
    let top = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logw.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

pub fn update_memberships(d: &SquareMatrix, medoids: &[usize], m: f64) -> Vec<Vec<f64>> {
    (0..d.size())
        .map(|i| {
            let row: Vec<f64> = medoids.iter().map(|&j| d.get(i, j)).collect();
            membership_row(&row, m)
        })
        .collect()
}

pub fn objective(d: &SquareMatrix, u: &[Vec<f64>], medoids: &[usize], m: f64) -> f64 {
    u.iter()
        .enumerate()
        .map(|(i, row)| row.iter().zip(medoids).map(|(uic, &j)| uic.powf(m) * d.get(i, j)).sum::<f64>())
        .sum()
}

/// Membership-weighted medoid choice, one cluster at a time. A candidate already
/// taken by an earlier cluster is skipped in favour of the next best one.
pub fn update_medoids(d: &SquareMatrix, u: &[Vec<f64>], m: f64) -> Vec<usize> {
    let s = d.size();
    let clusters = u.first().map_or(0, Vec::len);
    let mut chosen: Vec<usize> = Vec::with_capacity(clusters);
    for c in 0..clusters {
        let weights: Vec<f64> = u.iter().map(|row| row[c].powf(m)).collect();
        let mut costs: Vec<(f64, usize)> =
            (0..s).map(|j| ((0..s).map(|i| weights[i] * d.get(i, j)).sum::<f64>(), j)).collect();
        costs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let pick =
            costs.iter().map(|&(_, j)| j).find(|j| !chosen.contains(j)).expect("C <= s guarantees a free candidate");
        chosen.push(pick);
    }
    chosen
}

fn same_set(a: &[usize], b: &[usize]) -> bool {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_unstable();
    b.sort_unstable();
    a == b
}

fn initial_medoids(s: usize, clusters: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rand::seq::index::sample(&mut rng, s, clusters).into_vec()
}

/// Medoid step that never raises the objective for the current memberships.
fn guarded_medoids(d: &SquareMatrix, u: &[Vec<f64>], m: f64, current: &[usize]) -> Vec<usize> {
    let proposal = update_medoids(d, u, m);
    if objective(d, u, &proposal, m) > objective(d, u, current, m) {
        current.to_vec()
    } else {
        proposal
    }
}

fn check_trace(trace: &[f64]) {
    if let [.., prev, last] = trace {
        debug_assert!(*last <= prev + 1e-9 * (1.0 + prev.abs()), "objective increased from {prev} to {last}");
    }
}

fn single_run(d: &SquareMatrix, cfg: &ClusterConfig, seed: u64) -> FuzzyPartition {
    let m = cfg.m;
    let mut medoids = initial_medoids(d.size(), cfg.clusters, seed);
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut u = Vec::new();
    while iterations < cfg.max_iter {
        iterations += 1;
        u = update_memberships(d, &medoids, m);
        trace.push(objective(d, &u, &medoids, m));
        check_trace(&trace);
        let next = guarded_medoids(d, &u, m, &medoids);
        if same_set(&next, &medoids) {
            converged = true;
            break;
        }
        medoids = next;
    }
    if !converged {
        u = update_memberships(d, &medoids, m);
        trace.push(objective(d, &u, &medoids, m));
        check_trace(&trace);
    }
    FuzzyPartition {
        objective: *trace.last().expect("at least one iteration"),
        memberships: u,
        medoids,
        beta: None,
        iterations,
        converged,
        objective_trace: trace,
    }
}

fn best_of(runs: Vec<FuzzyPartition>) -> FuzzyPartition {
    runs.into_iter()
        .reduce(|best, r| if r.objective < best.objective { r } else { best })
        .expect("at least one restart")
}

pub fn fuzzy_cmedoids(d: &SquareMatrix, cfg: &ClusterConfig) -> Result<FuzzyPartition> {
    cfg.validate(d.size())?;
    d.validate_dissimilarity()?;
    let runs: Vec<_> =
        (0..cfg.restarts as u64).into_par_iter().map(|r| single_run(d, cfg, cfg.seed.wrapping_add(r))).collect();
    Ok(best_of(runs))
}

/// `β² d_M + (1 − β)² d_B`.
pub fn combined_distance(marginal: &SquareMatrix, serial: &SquareMatrix, beta: f64) -> SquareMatrix {
    marginal.combine(beta * beta, serial, (1.0 - beta) * (1.0 - beta))
}

/// Optimal weight for fixed memberships and medoids.
pub fn update_beta(
    u: &[Vec<f64>],
    marginal: &SquareMatrix,
    serial: &SquareMatrix,
    m: f64,
    medoids: &[usize],
) -> Result<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for (i, row) in u.iter().enumerate() {
        for (uic, &j) in row.iter().zip(medoids) {
            let w = uic.powf(m);
            num += w * serial.get(i, j);
            den += w * (marginal.get(i, j) + serial.get(i, j));
        }
    }
    if den <= 0.0 {
        return Err(Error::DegenerateDistances);
    }
    Ok((num / den).clamp(0.0, 1.0))
}

pub fn update_memberships_weighted(
    marginal: &SquareMatrix,
    serial: &SquareMatrix,
    medoids: &[usize],
    beta: f64,
    m: f64,
) -> Vec<Vec<f64>> {
    update_memberships(&combined_distance(marginal, serial, beta), medoids, m)
}

fn single_weighted_run(
    marginal: &SquareMatrix,
    serial: &SquareMatrix,
    cfg: &ClusterConfig,
    seed: u64,
) -> FuzzyPartition {
    let m = cfg.m;
    let mut beta = cfg.initial_beta;
    let mut d = combined_distance(marginal, serial, beta);
    let mut medoids = initial_medoids(d.size(), cfg.clusters, seed);
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut u = Vec::new();
    let mut stale = false;
    while iterations < cfg.max_iter {
        iterations += 1;
        u = update_memberships(&d, &medoids, m);
        trace.push(objective(&d, &u, &medoids, m));
        check_trace(&trace);
        stale = false;
        if !cfg.freeze_beta {
            match update_beta(&u, marginal, serial, m, &medoids) {
                Ok(b) if b != beta => {
                    beta = b;
                    d = combined_distance(marginal, serial, beta);
                    stale = true;
                }
                Ok(_) => {}
                Err(_) => log::debug!("degenerate weight update, keeping beta = {beta}"),
            }
        }
        let next = guarded_medoids(&d, &u, m, &medoids);
        if same_set(&next, &medoids) {
            converged = true;
            break;
        }
        medoids = next;
        stale = true;
    }
    if stale {
        u = update_memberships(&d, &medoids, m);
        trace.push(objective(&d, &u, &medoids, m));
        check_trace(&trace);
    }
    FuzzyPartition {
        objective: *trace.last().expect("at least one iteration"),
        memberships: u,
        medoids,
        beta: Some(beta),
        iterations,
        converged,
        objective_trace: trace,
    }
}

pub fn weighted_fuzzy_cmedoids(
    marginal: &SquareMatrix,
    serial: &SquareMatrix,
    cfg: &ClusterConfig,
) -> Result<FuzzyPartition> {
    if marginal.size() != serial.size() {
        return Err(Error::SizeMismatch(marginal.size(), serial.size()));
    }
    let mut cfg = cfg.clone();
    cfg.weighted = true;
    cfg.validate(marginal.size())?;
    marginal.validate_dissimilarity()?;
    serial.validate_dissimilarity()?;
    let runs: Vec<_> = (0..cfg.restarts as u64)
        .into_par_iter()
        .map(|r| single_weighted_run(marginal, serial, &cfg, cfg.seed.wrapping_add(r)))
        .collect();
    Ok(best_of(runs))
}

/// Runs the solver selected by `cfg.weighted` on a distance matrix.
pub fn cluster(dm: &DistanceMatrix, cfg: &ClusterConfig) -> Result<FuzzyPartition> {
    if cfg.weighted {
        weighted_fuzzy_cmedoids(&dm.marginal, &dm.serial, cfg)
    } else {
        fuzzy_cmedoids(&dm.total, cfg)
    }
}

/// Argmax per row, ties to the lowest cluster index.
pub fn crispify(u: &[Vec<f64>]) -> Vec<usize> {
    u.iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (c, &v)| if v > best.1 { (c, v) } else { best })
                .0
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_matrix(s: usize, seed: u64) -> SquareMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = SquareMatrix::zeros(s);
        for i in 0..s {
            for j in i + 1..s {
                let v: f64 = rng.random_range(0.01..1.0);
                m.set(i, j, v);
                m.set(j, i, v);
            }
        }
        m
    }

    #[test]
    fn membership_rows() {
        assert_eq!(membership_row(&[1.0, 3.0], 2.0), vec![0.75, 0.25]);
        for &m in &[1.1, 2.0, 7.0] {
            for v in membership_row(&[0.4, 0.4, 0.4], m) {
                assert_abs_diff_eq!(v, 1.0 / 3.0, epsilon = 1e-15);
            }
        }
        assert_eq!(membership_row(&[0.0, 5.0], 1.5), vec![1.0, 0.0]);
        assert_eq!(membership_row(&[0.0, 2.0, 0.0], 1.5), vec![0.5, 0.0, 0.5]);
    }

    #[test]
    fn membership_limits_in_m() {
        let u = membership_row(&[1.0, 2.5, 4.0], 1.01);
        assert!(u[0] > 0.99);
        let u = membership_row(&[1.0, 2.5, 4.0], 20.0);
        assert!(u.iter().all(|v| (v - 1.0 / 3.0).abs() < 0.05));
    }

    #[test]
    fn medoids_of_identity_memberships() {
        let d = random_matrix(4, 3);
        let u: Vec<Vec<f64>> = (0..4).map(|i| (0..4).map(|c| if c == i { 1.0 } else { 0.0 }).collect()).collect();
        assert_eq!(update_medoids(&d, &u, 2.0), vec![0, 1, 2, 3]);
    }

    #[test]
    fn medoid_ties_and_duplicates() {
        // Two identical objects: both are optimal for cluster 0, smaller index wins;
        // cluster 1 with the same memberships takes the next free candidate.
        let d = SquareMatrix::from_rows(vec![vec![0.0, 0.0, 1.0], vec![0.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]]).unwrap();
        let u = vec![vec![0.5, 0.5]; 3];
        assert_eq!(update_medoids(&d, &u, 2.0), vec![0, 1]);
    }

    #[test]
    fn medoids_match_exhaustive_search() {
        // d(0,1) small, everything else far: the best 2-medoid set holds 2 and one of {0, 1}
        let d = SquareMatrix::from_rows(vec![vec![0.0, 0.1, 5.0], vec![0.1, 0.0, 5.2], vec![5.0, 5.2, 0.0]]).unwrap();
        let cfg = ClusterConfig::new(2, 1.5).with_restarts(4);
        let p = fuzzy_cmedoids(&d, &cfg).unwrap();
        let mut best = (f64::INFINITY, vec![]);
        for a in 0..3 {
            for b in a + 1..3 {
                let u = update_memberships(&d, &[a, b], 1.5);
                let j = objective(&d, &u, &[a, b], 1.5);
                if j < best.0 {
                    best = (j, vec![a, b]);
                }
            }
        }
        assert!(p.medoids.contains(&2));
        assert_abs_diff_eq!(p.objective, best.0, epsilon = 1e-12);
    }

    #[test]
    fn two_identical_pairs() {
        let d = SquareMatrix::from_rows(vec![
            vec![0.0, 0.0, 4.0, 4.0],
            vec![0.0, 0.0, 4.0, 4.0],
            vec![4.0, 4.0, 0.0, 0.0],
            vec![4.0, 4.0, 0.0, 0.0],
        ])
        .unwrap();
        for seed in 0..10 {
            // a start on one identical pair is a fixed point, restarts escape it
            let p = fuzzy_cmedoids(&d, &ClusterConfig::new(2, 1.5).with_seed(seed).with_restarts(5)).unwrap();
            let labels = p.hard_labels();
            assert_eq!(labels[0], labels[1]);
            assert_eq!(labels[2], labels[3]);
            assert_ne!(labels[0], labels[2]);
            assert!(p.memberships.iter().all(|r| r.iter().cloned().fold(0.0, f64::max) >= 0.99));
        }
    }

    #[test]
    fn config_rules() {
        let d = random_matrix(3, 1);
        assert!(matches!(fuzzy_cmedoids(&d, &ClusterConfig::new(1, 2.0)), Err(Error::InvalidConfig(_))));
        assert!(matches!(fuzzy_cmedoids(&d, &ClusterConfig::new(2, 1.0)), Err(Error::InvalidConfig(_))));
        assert_eq!(
            fuzzy_cmedoids(&d, &ClusterConfig::new(4, 2.0)),
            Err(Error::TooFewSeries { clusters: 4, series: 3 })
        );
    }

    #[test]
    fn beta_special_cases() {
        let d = random_matrix(6, 9);
        let u = update_memberships(&d, &[0, 3], 2.0);
        assert_abs_diff_eq!(update_beta(&u, &d, &d, 2.0, &[0, 3]).unwrap(), 0.5, epsilon = 1e-15);
        let zero = SquareMatrix::zeros(6);
        assert_eq!(update_beta(&u, &d, &zero, 2.0, &[0, 3]).unwrap(), 0.0);
        assert_eq!(update_beta(&u, &zero, &zero, 2.0, &[0, 3]), Err(Error::DegenerateDistances));
    }

    #[test]
    fn beta_matches_golden_section_minimum() {
        for seed in 0..20 {
            let dm = random_matrix(8, seed);
            let db = random_matrix(8, seed + 100);
            let medoids = [1, 4, 6];
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u: Vec<Vec<f64>> = (0..8)
                .map(|_| {
                    let r: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..1.0)).collect();
                    let s: f64 = r.iter().sum();
                    r.iter().map(|x| x / s).collect()
                })
                .collect();
            let j = |b: f64| objective(&combined_distance(&dm, &db, b), &u, &medoids, 1.7);
            let (mut lo, mut hi) = (0.0f64, 1.0f64);
            let g = (5f64.sqrt() - 1.0) / 2.0;
            for _ in 0..200 {
                let (x1, x2) = (hi - g * (hi - lo), lo + g * (hi - lo));
                if j(x1) < j(x2) {
                    hi = x2;
                } else {
                    lo = x1;
                }
            }
            let beta = update_beta(&u, &dm, &db, 1.7, &medoids).unwrap();
            assert_abs_diff_eq!(beta, (lo + hi) / 2.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn weighted_membership_reductions() {
        let dm = SquareMatrix::from_rows(vec![vec![0.0, 1.0, 3.0], vec![1.0, 0.0, 2.0], vec![3.0, 2.0, 0.0]]).unwrap();
        let db = SquareMatrix::from_rows(vec![vec![0.0, 3.0, 1.0], vec![3.0, 0.0, 2.0], vec![1.0, 2.0, 0.0]]).unwrap();
        assert_eq!(update_memberships_weighted(&dm, &db, &[1, 2], 0.0, 2.0), update_memberships(&db, &[1, 2], 2.0));
        assert_eq!(update_memberships_weighted(&dm, &db, &[1, 2], 1.0, 2.0), update_memberships(&dm, &[1, 2], 2.0));
        assert_eq!(update_memberships_weighted(&dm, &db, &[1, 2], 0.5, 2.0)[0], vec![0.5, 0.5]);
    }

    #[test]
    fn identical_components_match_unweighted() {
        let d = random_matrix(12, 5);
        let cfg = ClusterConfig::new(3, 1.6).with_seed(11);
        let w = weighted_fuzzy_cmedoids(&d, &d, &cfg.clone().weighted(0.5)).unwrap();
        let plain = fuzzy_cmedoids(&combined_distance(&d, &d, 0.5), &cfg).unwrap();
        assert_eq!(w.beta, Some(0.5));
        assert_eq!(w.medoids, plain.medoids);
        assert_eq!(w.memberships, plain.memberships);
    }

    #[test]
    fn crisp_labels() {
        assert_eq!(crispify(&[vec![0.2, 0.5, 0.3]]), vec![1]);
        assert_eq!(crispify(&[vec![0.5, 0.5]]), vec![0]);
        let hard = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 1.0]];
        assert_eq!(crispify(&hard), vec![0, 1, 1]);
    }

    #[test]
    fn deterministic_given_seed() {
        let d = random_matrix(15, 2);
        let cfg = ClusterConfig::new(3, 1.5).with_seed(42).with_restarts(3);
        assert_eq!(fuzzy_cmedoids(&d, &cfg).unwrap(), fuzzy_cmedoids(&d, &cfg).unwrap());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn solver_contracts(seed in any::<u64>(), c in 2usize..5, m in 1.05f64..4.0) {
            let dm = random_matrix(14, seed);
            let db = random_matrix(14, seed ^ 0x5555);
            let cfg = ClusterConfig::new(c, m).with_seed(seed);
            for p in [
                fuzzy_cmedoids(&dm, &cfg).unwrap(),
                weighted_fuzzy_cmedoids(&dm, &db, &cfg.clone().weighted(0.5)).unwrap(),
            ] {
                for row in &p.memberships {
                    prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                    prop_assert!(row.iter().all(|v| (0.0..=1.0).contains(v)));
                }
                for w in p.objective_trace.windows(2) {
                    prop_assert!(w[1] <= w[0] + 1e-12 * (1.0 + w[0].abs()));
                }
                let mut med = p.medoids.clone();
                med.sort_unstable();
                med.dedup();
                prop_assert_eq!(med.len(), c);
                for (k, &j) in p.medoids.iter().enumerate() {
                    prop_assert_eq!(p.memberships[j][k], 1.0);
                }
                if let Some(b) = p.beta {
                    prop_assert!((0.0..=1.0).contains(&b));
                }
            }
        }
    }
}
