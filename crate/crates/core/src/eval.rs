//! Quality measures for fuzzy partitions: fuzzy ARI / Jaccard, cutoff-based
//! classification, area under the fuzziness curve, two-dimensional scaling,
//! internal validity indices and the (C, m) grid search built on them.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::{cluster, combined_distance, ClusterConfig, FuzzyPartition};
use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;
use crate::metrics::DistanceMatrix;

/// One-hot membership rows for hard labels.
pub fn one_hot(labels: &[usize]) -> Vec<Vec<f64>> {
    let k = labels.iter().max().map_or(0, |&l| l + 1);
    labels.iter().map(|&l| (0..k).map(|c| if c == l { 1.0 } else { 0.0 }).collect()).collect()
}

/// Same-cluster and different-cluster degrees of every unordered pair, in
/// the order (0,1), (0,2), …, (1,2), …
pub fn pair_bonds(u: &[Vec<f64>]) -> Vec<(f64, f64)> {
    let s = u.len();
    let mut out = Vec::with_capacity(s * s.saturating_sub(1) / 2);
    for i in 0..s {
        for j in i + 1..s {
            let (a, b) = (&u[i], &u[j]);
            let mut rho = 0.0f64;
            let mut delta = 0.0f64;
            for (c, &x) in a.iter().enumerate() {
                for (c2, &y) in b.iter().enumerate() {
                    let v = x.min(y);
                    if c == c2 {
                        rho = rho.max(v);
                    } else {
                        delta = delta.max(v);
                    }
                }
            }
            out.push((rho, delta));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub arif: f64,
    pub jif: f64,
    /// ARIF denominator vanished; `arif` is reported as 0.
    pub arif_degenerate: bool,
    /// JIF denominator vanished; `jif` is reported as 0.
    pub jif_degenerate: bool,
}

/// Fuzzy agreement between a reference and a compared membership matrix.
pub fn agreement(reference: &[Vec<f64>], partition: &[Vec<f64>]) -> Result<Agreement> {
    if reference.len() != partition.len() {
        return Err(Error::SizeMismatch(reference.len(), partition.len()));
    }
    let (mut a, mut b, mut c, mut d) = (0.0, 0.0, 0.0, 0.0);
    for ((rr, dr), (rq, dq)) in pair_bonds(reference).into_iter().zip(pair_bonds(partition)) {
        a += rr.min(rq);
        b += rr.min(dq);
        c += dr.min(rq);
        d += dr.min(dq);
    }
    let den = (a + b) * (b + d) + (a + c) * (c + d);
    let arif_degenerate = den == 0.0;
    let arif = if arif_degenerate { 0.0 } else { 2.0 * (a * d - b * c) / den };
    let jden = a + b + c;
    let jif_degenerate = jden == 0.0;
    let jif = if jif_degenerate { 0.0 } else { a / jden };
    Ok(Agreement { a, b, c, d, arif, jif, arif_degenerate, jif_degenerate })
}

pub fn arif(reference: &[usize], partition: &FuzzyPartition) -> Result<f64> {
    Ok(agreement(&one_hot(reference), &partition.memberships)?.arif)
}

pub fn jif(reference: &[usize], partition: &FuzzyPartition) -> Result<f64> {
    Ok(agreement(&one_hot(reference), &partition.memberships)?.jif)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub success: bool,
    /// Several group-to-cluster assignments carry the same maximal mass.
    pub ambiguous: bool,
    /// Cluster assigned to each regular group.
    pub mapping: Vec<usize>,
}

/// Exact maximum-mass assignment of groups to distinct clusters, with the
/// number of optimal assignments (ties within a relative 1e-12).
fn best_assignment(mass: &[Vec<f64>], clusters: usize) -> (Vec<usize>, usize) {
    let groups = mass.len();
    let full = 1usize << clusters;
    // dp[mask]: best total using the first popcount(mask) groups on the clusters in mask
    let mut value = vec![f64::NEG_INFINITY; full];
    let mut ways = vec![0usize; full];
    let mut choice = vec![usize::MAX; full];
    value[0] = 0.0;
    ways[0] = 1;
    for mask in 0..full {
        let g = mask.count_ones() as usize;
        if g >= groups || ways[mask] == 0 {
            continue;
        }
        for c in 0..clusters {
            if mask & (1 << c) != 0 {
                continue;
            }
            let next = mask | (1 << c);
            let v = value[mask] + mass[g][c];
            let tol = 1e-12 * (1.0 + v.abs());
            if v > value[next] + tol {
                value[next] = v;
                ways[next] = ways[mask];
                choice[next] = c;
            } else if (v - value[next]).abs() <= tol {
                ways[next] += ways[mask];
            }
        }
    }
    let (mut best, mut best_mask, mut total_ways) = (f64::NEG_INFINITY, 0, 0);
    for mask in (0..full).filter(|m| m.count_ones() as usize == groups) {
        let tol = 1e-12 * (1.0 + value[mask].abs());
        if value[mask] > best + tol {
            best = value[mask];
            best_mask = mask;
            total_ways = ways[mask];
        } else if (value[mask] - best).abs() <= tol {
            total_ways += ways[mask];
        }
    }
    let mut mapping = vec![0; groups];
    let mut mask = best_mask;
    for g in (0..groups).rev() {
        let c = choice[mask];
        mapping[g] = c;
        mask &= !(1 << c);
    }
    (mapping, total_ways)
}

/// Cutoff rule: every regular series has membership above `cutoff` in its
/// group's cluster and every isolated series (`None`) stays at or below it
/// in all clusters.
pub fn correct_classification(u: &[Vec<f64>], truth: &[Option<usize>], cutoff: f64) -> Result<Classification> {
    if u.len() != truth.len() {
        return Err(Error::SizeMismatch(u.len(), truth.len()));
    }
    let clusters = u.first().map_or(0, Vec::len);
    let groups = truth.iter().flatten().max().map_or(0, |&g| g + 1);
    if groups != clusters {
        return Err(Error::InvalidConfig(format!("{groups} regular groups but {clusters} clusters")));
    }
    if clusters > 20 {
        return Err(Error::InvalidConfig("group mapping supports at most 20 clusters".into()));
    }
    let mut mass = vec![vec![0.0; clusters]; groups];
    for (row, t) in u.iter().zip(truth) {
        if let Some(g) = t {
            for (c, v) in row.iter().enumerate() {
                mass[*g][c] += v;
            }
        }
    }
    let (mapping, ways) = best_assignment(&mass, clusters);
    if ways > 1 {
        return Ok(Classification { success: false, ambiguous: true, mapping });
    }
    let success = u.iter().zip(truth).all(|(row, t)| match t {
        Some(g) => row[mapping[*g]] > cutoff,
        None => row.iter().all(|&v| v <= cutoff),
    });
    Ok(Classification { success, ambiguous: false, mapping })
}

/// Trapezoidal area under a rate curve over a strictly increasing m-grid.
pub fn aufc(m_grid: &[f64], rates: &[f64]) -> Result<f64> {
    if m_grid.len() != rates.len() {
        return Err(Error::SizeMismatch(m_grid.len(), rates.len()));
    }
    if m_grid.len() < 2 {
        return Err(Error::GridTooSmall);
    }
    if m_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidGrid("m-grid must be strictly increasing".into()));
    }
    Ok(m_grid.windows(2).zip(rates.windows(2)).map(|(m, r)| (m[1] - m[0]) * (r[0] + r[1]) / 2.0).sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding2D {
    pub points: Vec<[f64; 2]>,
    pub stress: f64,
    pub r_squared: f64,
    pub iterations: usize,
}

fn point_distances(x: &[[f64; 2]]) -> SquareMatrix {
    SquareMatrix::from_fn(x.len(), |i, j| {
        let (dx, dy) = (x[i][0] - x[j][0], x[i][1] - x[j][1]);
        (dx * dx + dy * dy).sqrt()
    })
}

fn raw_stress(d: &SquareMatrix, fit: &SquareMatrix) -> f64 {
    let s = d.size();
    let mut total = 0.0;
    for i in 0..s {
        for j in i + 1..s {
            let e = fit.get(i, j) - d.get(i, j);
            total += e * e;
        }
    }
    total
}

/// Classical scaling start followed by SMACOF majorization.
pub fn mds_2d(d: &SquareMatrix) -> Result<Embedding2D> {
    d.validate_dissimilarity()?;
    let s = d.size();
    if s == 0 {
        return Err(Error::EmptyDataSet);
    }
    let mut x = classical_scaling(d);
    let mut fit = point_distances(&x);
    let mut sigma = raw_stress(d, &fit);
    let mut iterations = 0;
    while iterations < 300 && sigma > 0.0 {
        iterations += 1;
        // Guttman transform: X ← (1/s) B(X) X
        let mut next = vec![[0.0; 2]; s];
        for i in 0..s {
            let mut diag = 0.0;
            for j in 0..s {
                if i == j {
                    continue;
                }
                let dist = fit.get(i, j);
                let b = if dist > 0.0 { -d.get(i, j) / dist } else { 0.0 };
                diag -= b;
                next[i][0] += b * x[j][0];
                next[i][1] += b * x[j][1];
            }
            next[i][0] = (next[i][0] + diag * x[i][0]) / s as f64;
            next[i][1] = (next[i][1] + diag * x[i][1]) / s as f64;
        }
        let next_fit = point_distances(&next);
        let next_sigma = raw_stress(d, &next_fit);
        debug_assert!(next_sigma <= sigma * (1.0 + 1e-9) + 1e-15, "stress increased: {sigma} -> {next_sigma}");
        let improvement = (sigma - next_sigma) / sigma;
        x = next;
        fit = next_fit;
        sigma = next_sigma;
        if improvement < 1e-8 {
            break;
        }
    }
    let total_sq: f64 = (0..s).flat_map(|i| (i + 1..s).map(move |j| (i, j))).map(|(i, j)| d.get(i, j).powi(2)).sum();
    let stress = if total_sq > 0.0 { (sigma / total_sq).sqrt() } else { 0.0 };
    Ok(Embedding2D { r_squared: fit_r_squared(d, &fit), points: x, stress, iterations })
}

fn classical_scaling(d: &SquareMatrix) -> Vec<[f64; 2]> {
    let s = d.size();
    let sq = DMatrix::from_fn(s, s, |i, j| d.get(i, j).powi(2));
    let row_means: Vec<f64> = (0..s).map(|i| sq.row(i).mean()).collect();
    let grand = sq.mean();
    let b = DMatrix::from_fn(s, s, |i, j| -0.5 * (sq[(i, j)] - row_means[i] - row_means[j] + grand));
    let eig = SymmetricEigen::new(b);
    let mut order: Vec<usize> = (0..s).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut x = vec![[0.0; 2]; s];
    for (k, &idx) in order.iter().take(2).enumerate() {
        let scale = eig.eigenvalues[idx].max(0.0).sqrt();
        for (i, p) in x.iter_mut().enumerate() {
            p[k] = eig.eigenvectors[(i, idx)] * scale;
        }
    }
    x
}

fn fit_r_squared(d: &SquareMatrix, fit: &SquareMatrix) -> f64 {
    let s = d.size();
    let pairs: Vec<(f64, f64)> =
        (0..s).flat_map(|i| (i + 1..s).map(move |j| (i, j))).map(|(i, j)| (d.get(i, j), fit.get(i, j))).collect();
    if pairs.is_empty() {
        return 1.0;
    }
    let k = pairs.len() as f64;
    let (mx, my) = (pairs.iter().map(|p| p.0).sum::<f64>() / k, pairs.iter().map(|p| p.1).sum::<f64>() / k);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in &pairs {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return if sxx == syy { 1.0 } else { 0.0 };
    }
    sxy * sxy / (sxx * syy)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidityIndices {
    pub xie_beni: f64,
    pub kwon: f64,
    pub tang: f64,
    pub bensaid: f64,
}

impl ValidityIndices {
    pub fn as_array(&self) -> [f64; 4] {
        [self.xie_beni, self.kwon, self.tang, self.bensaid]
    }

    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|v| v.is_finite())
    }
}

/// Medoid versions of four internal validity indices; lower is better.
/// Coincident medoids give `+inf` for all four.
pub fn validity_indices(u: &[Vec<f64>], medoids: &[usize], d: &SquareMatrix, m: f64) -> ValidityIndices {
    let s = u.len();
    let k = medoids.len();
    let mut sep_min = f64::INFINITY;
    let mut sep_total = 0.0;
    for (a, &ja) in medoids.iter().enumerate() {
        for (b, &jb) in medoids.iter().enumerate() {
            if a != b {
                sep_min = sep_min.min(d.get(ja, jb));
                sep_total += d.get(ja, jb);
            }
        }
    }
    if !(sep_min > 0.0) {
        let inf = f64::INFINITY;
        return ValidityIndices { xie_beni: inf, kwon: inf, tang: inf, bensaid: inf };
    }
    let per_cluster: Vec<f64> = (0..k).map(|c| (0..s).map(|i| u[i][c].powf(m) * d.get(i, medoids[c])).sum()).collect();
    let compact: f64 = per_cluster.iter().sum();

    let xie_beni = compact / (s as f64 * sep_min);
    let spread: f64 = medoids.iter().map(|&j| (0..s).map(|i| d.get(i, j)).sum::<f64>() / s as f64).sum::<f64>();
    let kwon = (compact + spread / k as f64) / sep_min;
    let tang = (compact + sep_total / (k * (k - 1)) as f64) / (sep_min + 1.0 / k as f64);
    let bensaid = (0..k)
        .map(|c| {
            let size: f64 = (0..s).map(|i| u[i][c]).sum();
            let sep: f64 = medoids.iter().map(|&j| d.get(j, medoids[c])).sum();
            per_cluster[c] / (size * sep)
        })
        .sum();
    ValidityIndices { xie_beni, kwon, tang, bensaid }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub clusters: usize,
    pub m: f64,
    pub indices: ValidityIndices,
    /// Mean of the standardized indices; `None` for disqualified cells.
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSelection {
    pub cells: Vec<GridCell>,
    pub best: usize,
    pub clusters: usize,
    pub m: f64,
}

/// Runs the solver on every (C, m) cell and picks the cell with the lowest
/// average of z-standardized validity indices. Cell `k` uses seed `cfg.seed + k`.
pub fn select_c_m(dm: &DistanceMatrix, c_grid: &[usize], m_grid: &[f64], cfg: &ClusterConfig) -> Result<GridSelection> {
    let s = dm.len();
    if c_grid.is_empty() || m_grid.is_empty() {
        return Err(Error::InvalidGrid("grids must be nonempty".into()));
    }
    if let Some(&c) = c_grid.iter().find(|&&c| c < 2 || c + 1 > s) {
        return Err(Error::InvalidGrid(format!("C = {c} outside [2, {}]", s.saturating_sub(1))));
    }
    let plan: Vec<(usize, f64)> = c_grid.iter().flat_map(|&c| m_grid.iter().map(move |&m| (c, m))).collect();
    let results = plan
        .par_iter()
        .enumerate()
        .map(|(k, &(c, m))| {
            let cell_cfg = ClusterConfig { clusters: c, m, seed: cfg.seed.wrapping_add(k as u64), ..cfg.clone() };
            let p = cluster(dm, &cell_cfg)?;
            let d = match p.beta {
                Some(beta) => combined_distance(&dm.marginal, &dm.serial, beta),
                None => dm.total.clone(),
            };
            Ok(validity_indices(&p.memberships, &p.medoids, &d, m))
        })
        .collect::<Result<Vec<_>>>()?;

    let finite: Vec<usize> = (0..results.len()).filter(|&k| results[k].is_finite()).collect();
    if finite.is_empty() {
        return Err(Error::AllCellsDegenerate);
    }
    let mut scores = vec![0.0; results.len()];
    for idx in 0..4 {
        let vals: Vec<f64> = finite.iter().map(|&k| results[k].as_array()[idx]).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64).sqrt();
        for &k in &finite {
            let z = if sd > 0.0 { (results[k].as_array()[idx] - mean) / sd } else { 0.0 };
            scores[k] += z / 4.0;
        }
    }
    let best = finite.iter().copied().reduce(|a, b| if scores[b] < scores[a] { b } else { a }).expect("nonempty");
    let cells = plan
        .iter()
        .zip(&results)
        .enumerate()
        .map(|(k, (&(clusters, m), &indices))| GridCell {
            clusters,
            m,
            indices,
            score: finite.contains(&k).then_some(scores[k]),
        })
        .collect();
    Ok(GridSelection { cells, best, clusters: plan[best].0, m: plan[best].1 })
}
