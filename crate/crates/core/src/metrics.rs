//! Dissimilarities between ordinal series, computed from cached
//! [`SeriesRepr`](crate::estimation::SeriesRepr) values.
//!
//! * `d1`: squared Euclidean distance between cumulative marginal and
//!   cumulative lagged joint probabilities.
//! * `d2`: squared Euclidean distance between the `1/n`-normalized
//!   block-distance features plus squared differences of ordinal kappas.
//! * `pmf`: same construction as `d1` on probability mass functions.
//! * `acf`: squared Euclidean distance between count autocorrelations.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{build_reprs, SeriesRepr};
use crate::matrix::SquareMatrix;
use crate::series::{LagSet, OrdinalSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    D1,
    D2,
    Pmf,
    Acf,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::D1, Metric::D2, Metric::Pmf, Metric::Acf];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::D1 => "d1",
            Metric::D2 => "d2",
            Metric::Pmf => "pmf",
            Metric::Acf => "acf",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "d1" => Ok(Metric::D1),
            "d2" => Ok(Metric::D2),
            "pmf" | "d_pmf" => Ok(Metric::Pmf),
            "acf" | "d_acf" => Ok(Metric::Acf),
            other => Err(Error::InvalidConfig(format!("unknown metric {other:?}"))),
        }
    }
}

/// Marginal and serial parts of a dissimilarity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceRecord {
    pub marginal: f64,
    pub serial: f64,
}

impl DistanceRecord {
    pub fn total(&self) -> f64 {
        self.marginal + self.serial
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check_compatible(a: &SeriesRepr, b: &SeriesRepr) -> Result<()> {
    if a.n != b.n {
        return Err(Error::RangeMismatch(a.n, b.n));
    }
    if a.lags != b.lags {
        return Err(Error::LagMismatch);
    }
    Ok(())
}

pub fn d1_components(a: &SeriesRepr, b: &SeriesRepr) -> Result<DistanceRecord> {
    check_compatible(a, b)?;
    let marginal = sq_dist(a.cumulative.values(), b.cumulative.values());
    let serial = a.cumulative_joint.iter().zip(&b.cumulative_joint).map(|(x, y)| sq_dist(&x.values, &y.values)).sum();
    Ok(DistanceRecord { marginal, serial })
}

/// The four marginal features scaled as they enter `d2`.
pub fn normalized_features(r: &SeriesRepr) -> [f64; 4] {
    let n = r.n as f64;
    let f = &r.features;
    [f.loc / n, 2.0 * f.disp / n, f.asym / n, f.skew / n]
}

pub fn d2_components(a: &SeriesRepr, b: &SeriesRepr) -> Result<DistanceRecord> {
    check_compatible(a, b)?;
    let marginal = sq_dist(&normalized_features(a), &normalized_features(b));
    let serial = sq_dist(&a.kappa, &b.kappa);
    Ok(DistanceRecord { marginal, serial })
}

pub fn d_pmf_components(a: &SeriesRepr, b: &SeriesRepr) -> Result<DistanceRecord> {
    check_compatible(a, b)?;
    let marginal = sq_dist(a.pmf.values(), b.pmf.values());
    let serial = a.joint_pmf.iter().zip(&b.joint_pmf).map(|(x, y)| sq_dist(&x.values, &y.values)).sum();
    Ok(DistanceRecord { marginal, serial })
}

pub fn d_acf(a: &SeriesRepr, b: &SeriesRepr) -> Result<f64> {
    if a.lags != b.lags {
        return Err(Error::LagMismatch);
    }
    Ok(sq_dist(&a.acf, &b.acf))
}

/// Marginal component of `d1` written in terms of mass functions.
pub fn d1m_via_pmf(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch(p.len(), q.len()));
    }
    if p.len() < 2 {
        return Err(Error::EmptyRange(p.len() as i64 - 1));
    }
    let n = p.len() - 1;
    let diff: Vec<f64> = p.iter().zip(q).map(|(a, b)| a - b).collect();
    let mut total = 0.0;
    for i in 0..n {
        total += (n - i) as f64 * diff[i] * diff[i];
    }
    for j in 0..n.saturating_sub(1) {
        for k in j + 1..n {
            total += 2.0 * (n - k) as f64 * diff[j] * diff[k];
        }
    }
    Ok(total)
}

/// Components of `metric` between two representations. For `acf` the whole
/// distance is reported as the serial part.
pub fn components(metric: Metric, a: &SeriesRepr, b: &SeriesRepr) -> Result<DistanceRecord> {
    match metric {
        Metric::D1 => d1_components(a, b),
        Metric::D2 => d2_components(a, b),
        Metric::Pmf => d_pmf_components(a, b),
        Metric::Acf => Ok(DistanceRecord { marginal: 0.0, serial: d_acf(a, b)? }),
    }
}

/// Pairwise component matrices over a data set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    pub ids: Vec<String>,
    pub metric: Metric,
    pub lags: LagSet,
    pub marginal: SquareMatrix,
    pub serial: SquareMatrix,
    pub total: SquareMatrix,
}

impl DistanceMatrix {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// CSV of the total matrix: a header of ids, then one row of floats per series.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_matrix_csv(&self.ids, &self.total, w)
    }
}

pub fn write_matrix_csv<W: Write>(ids: &[String], m: &SquareMatrix, w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(ids)?;
    for i in 0..m.size() {
        wtr.write_record(m.row(i).iter().map(|v| format!("{v:.16e}")))?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads a matrix written by [`write_matrix_csv`].
pub fn read_matrix_csv<R: Read>(r: R) -> Result<(Vec<String>, SquareMatrix)> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let ids: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::with_capacity(ids.len());
    for rec in rdr.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|v| v.trim().parse::<f64>().map_err(|e| Error::Format(format!("{v:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    if rows.len() != ids.len() {
        return Err(Error::Format(format!("{} ids but {} rows", ids.len(), rows.len())));
    }
    Ok((ids, SquareMatrix::from_rows(rows)?))
}

/// Builds the symmetric component matrices for `metric`. All representations
/// must share one range and one lag set.
pub fn pairwise_matrix(reprs: &[SeriesRepr], metric: Metric) -> Result<DistanceMatrix> {
    let first = reprs.first().ok_or(Error::EmptyDataSet)?;
    for r in reprs {
        if metric != Metric::Acf && r.n != first.n {
            return Err(Error::RangeMismatch(first.n, r.n));
        }
        if r.lags != first.lags {
            return Err(Error::LagMismatch);
        }
    }
    let s = reprs.len();
    let pairs: Vec<(usize, usize)> = (0..s).flat_map(|i| (i + 1..s).map(move |j| (i, j))).collect();
    let records =
        pairs.par_iter().map(|&(i, j)| components(metric, &reprs[i], &reprs[j])).collect::<Result<Vec<_>>>()?;

    let mut marginal = SquareMatrix::zeros(s);
    let mut serial = SquareMatrix::zeros(s);
    let mut total = SquareMatrix::zeros(s);
    for (&(i, j), rec) in pairs.iter().zip(&records) {
        for (m, v) in [(&mut marginal, rec.marginal), (&mut serial, rec.serial), (&mut total, rec.total())] {
            m.set(i, j, v);
            m.set(j, i, v);
        }
    }
    Ok(DistanceMatrix {
        ids: reprs.iter().map(|r| r.id.clone()).collect(),
        metric,
        lags: first.lags.clone(),
        marginal,
        serial,
        total,
    })
}

/// Estimates representations and builds the matrix in one call.
pub fn distance_matrix(series: &[OrdinalSeries], metric: Metric, lags: &LagSet) -> Result<DistanceMatrix> {
    let reprs = build_reprs(series, lags)?;
    pairwise_matrix(&reprs, metric)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::{build_repr, CumulativeMarginal, MarginalPmf};
    use crate::series::{OrdinalRange, OrdinalSeries};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn repr(states: &[usize], n: usize, lags: &[usize]) -> SeriesRepr {
        let s = OrdinalSeries::new("x", OrdinalRange::new(n).unwrap(), states.to_vec()).unwrap();
        build_repr(&s, &LagSet::new(lags.to_vec()).unwrap()).unwrap()
    }

    fn with_marginal(base: &SeriesRepr, p: &[f64]) -> SeriesRepr {
        let mut r = base.clone();
        r.pmf = MarginalPmf(p.to_vec());
        let mut acc = 0.0;
        r.cumulative = CumulativeMarginal(
            p[..p.len() - 1]
                .iter()
                .map(|v| {
                    acc += v;
                    acc
                })
                .collect(),
        );
        r
    }

    #[test]
    fn toy_triple_cumulative_and_pmf() {
        let base = repr(&[0, 1, 2, 3, 0, 1], 3, &[1]);
        let p1 = with_marginal(&base, &[0.4, 0.1, 0.1, 0.4]);
        let p2 = with_marginal(&base, &[0.1, 0.4, 0.1, 0.4]);
        let p3 = with_marginal(&base, &[0.1, 0.1, 0.4, 0.4]);
        let d = |a, b| d1_components(a, b).unwrap().marginal;
        assert_abs_diff_eq!(d(&p1, &p2), 0.09, epsilon = 1e-12);
        assert_abs_diff_eq!(d(&p2, &p3), 0.09, epsilon = 1e-12);
        assert_abs_diff_eq!(d(&p1, &p3), 0.18, epsilon = 1e-12);
        let dp = |a, b| d_pmf_components(a, b).unwrap().marginal;
        for (a, b) in [(&p1, &p2), (&p1, &p3), (&p2, &p3)] {
            assert_abs_diff_eq!(dp(a, b), 0.18, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(d1m_via_pmf(&[0.4, 0.1, 0.1, 0.4], &[0.1, 0.4, 0.1, 0.4]).unwrap(), 0.09, epsilon = 1e-12);
    }

    #[test]
    fn permuting_categories_changes_only_d1() {
        // p2 is p1 with s_0 and s_1 swapped; p3 with s_0 and s_2 swapped
        let p1 = [0.4, 0.1, 0.1, 0.4];
        let p2 = [0.1, 0.4, 0.1, 0.4];
        let p3 = [0.1, 0.1, 0.4, 0.4];
        let pmf = |a: &[f64], b: &[f64]| sq_dist(a, b);
        assert_abs_diff_eq!(pmf(&p1, &p2), pmf(&p1, &p3), epsilon = 1e-15);
        assert!(d1m_via_pmf(&p1, &p2).unwrap() < d1m_via_pmf(&p1, &p3).unwrap() - 0.05);
    }

    #[test]
    fn self_distance_is_zero() {
        let r = repr(&[0, 1, 2, 2, 1, 0, 0, 2], 2, &[1, 2]);
        for m in Metric::ALL {
            let c = components(m, &r, &r).unwrap();
            assert_eq!((c.marginal, c.serial, c.total()), (0.0, 0.0, 0.0));
        }
    }

    #[test]
    fn d2_component_formulas() {
        let a = repr(&[0, 1, 2, 1, 0, 2, 2, 1], 2, &[1]);
        let mut b = a.clone();
        b.kappa[0] += 0.5;
        let c = d2_components(&a, &b).unwrap();
        assert_abs_diff_eq!(c.serial, 0.25, epsilon = 1e-15);
        assert_eq!(c.marginal, 0.0);

        let mut b = a.clone();
        b.features.loc += a.n as f64;
        let c = d2_components(&a, &b).unwrap();
        assert_abs_diff_eq!(c.marginal, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn acf_distance_formula() {
        let mut a = repr(&[0, 1, 2, 1, 0, 2, 2, 1], 2, &[1]);
        let mut b = a.clone();
        a.acf = vec![0.5];
        b.acf = vec![0.1];
        assert_abs_diff_eq!(d_acf(&a, &b).unwrap(), 0.16, epsilon = 1e-15);
    }

    #[test]
    fn mismatches_are_rejected() {
        let a = repr(&[0, 1, 2, 1], 2, &[1]);
        let b = repr(&[0, 1, 3, 1], 3, &[1]);
        let c = repr(&[0, 1, 2, 1], 2, &[1, 2]);
        assert_eq!(d1_components(&a, &b), Err(Error::RangeMismatch(2, 3)));
        assert_eq!(d2_components(&a, &c), Err(Error::LagMismatch));
        assert_eq!(d1m_via_pmf(&[0.5, 0.5], &[1.0, 0.0, 0.0]), Err(Error::LengthMismatch(2, 3)));
        assert!(pairwise_matrix(&[a, b], Metric::D1).is_err());
    }

    #[test]
    fn matrix_small_cases() {
        let a = repr(&[0, 1, 2, 1, 0], 2, &[1]);
        let m = pairwise_matrix(std::slice::from_ref(&a), Metric::D1).unwrap();
        assert_eq!(m.total.rows(), vec![vec![0.0]]);
        let m = pairwise_matrix(&[a.clone(), a], Metric::D2).unwrap();
        assert_eq!(m.total.get(0, 1), 0.0);
    }

    #[test]
    fn csv_round_trip() {
        let reprs: Vec<_> = (0..4)
            .map(|k| {
                let mut r = repr(&[0, 1, 2, (k % 3) as usize, 1, 0, 2], 2, &[1, 2]);
                r.id = format!("s{k}");
                r
            })
            .collect();
        let m = pairwise_matrix(&reprs, Metric::D1).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let (ids, back) = read_matrix_csv(&buf[..]).unwrap();
        assert_eq!(ids, m.ids);
        assert_eq!(back, m.total);
        let json = serde_json::to_string(&m).unwrap();
        let parsed: DistanceMatrix = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed, m);
    }

    fn arb_pmf_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1usize..=10).prop_flat_map(|n| {
            let v = prop::collection::vec(0.01f64..1.0, n + 1);
            (v.clone(), v).prop_map(|(a, b)| {
                let (sa, sb) = (a.iter().sum::<f64>(), b.iter().sum::<f64>());
                (a.iter().map(|x| x / sa).collect(), b.iter().map(|x| x / sb).collect())
            })
        })
    }

    fn cumulative(p: &[f64]) -> Vec<f64> {
        p[..p.len() - 1]
            .iter()
            .scan(0.0, |a, v| {
                *a += v;
                Some(*a)
            })
            .collect()
    }

    proptest! {
        #[test]
        fn pmf_form_matches_cumulative_form((p, q) in arb_pmf_pair()) {
            let direct = sq_dist(&cumulative(&p), &cumulative(&q));
            prop_assert!((d1m_via_pmf(&p, &q).unwrap() - direct).abs() < 1e-12);
        }

        #[test]
        fn matrices_are_symmetric_nonnegative(
            xs in prop::collection::vec(prop::collection::vec(0usize..4, 12..30), 2..6),
        ) {
            let series: Vec<OrdinalSeries> = xs.iter().enumerate()
                .map(|(i, x)| OrdinalSeries::new(format!("s{i}"), OrdinalRange::new(3).unwrap(), x.clone()).unwrap())
                .collect();
            let lags = LagSet::new(vec![1, 2]).unwrap();
            for m in Metric::ALL {
                let dm = distance_matrix(&series, m, &lags).unwrap();
                prop_assert!(dm.total.validate_dissimilarity().is_ok());
                prop_assert!(dm.marginal.validate_dissimilarity().is_ok());
                prop_assert!(dm.serial.validate_dissimilarity().is_ok());
            }
        }

        #[test]
        fn metrics_depend_only_on_indices(
            x in prop::collection::vec(0usize..3, 10..30),
            y in prop::collection::vec(0usize..3, 10..30),
        ) {
            let lo = OrdinalRange::from_labels(&["low", "mid", "high"]).unwrap();
            let hi = OrdinalRange::from_labels(&["a", "b", "c"]).unwrap();
            let lags = LagSet::new(vec![1]).unwrap();
            let mk = |r: &OrdinalRange, v: &Vec<usize>| {
                build_repr(&OrdinalSeries::new("s", r.clone(), v.clone()).unwrap(), &lags).unwrap()
            };
            for m in Metric::ALL {
                let d_lo = components(m, &mk(&lo, &x), &mk(&lo, &y)).unwrap();
                let d_hi = components(m, &mk(&hi, &x), &mk(&hi, &y)).unwrap();
                prop_assert_eq!(d_lo, d_hi);
            }
        }
    }
}
