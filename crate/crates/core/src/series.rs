//! Ordinal ranges, validated series and lag sets.
//!
//! States are always stored as count indices `0..=n`. Labels attached to a
//! range are presentation only.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered categorical range `s_0 < s_1 < ... < s_n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrdinalRange {
    n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

impl OrdinalRange {
    pub fn new(n: usize) -> Result<Self> {
        if n < 1 {
            return Err(Error::EmptyRange(n as i64));
        }
        Ok(Self { n, labels: None })
    }

    /// Builds a range from `n + 1` distinct labels listed from lowest to highest.
    pub fn from_labels<S: AsRef<str>>(labels: &[S]) -> Result<Self> {
        if labels.len() < 2 {
            return Err(Error::EmptyRange(labels.len() as i64 - 1));
        }
        let mut seen = HashSet::new();
        for l in labels {
            if !seen.insert(l.as_ref()) {
                return Err(Error::InvalidLabels(format!("duplicate label {:?}", l.as_ref())));
            }
        }
        Ok(Self { n: labels.len() - 1, labels: Some(labels.iter().map(|l| l.as_ref().to_string()).collect()) })
    }

    /// Largest state index.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of states, `n + 1`.
    pub fn size(&self) -> usize {
        self.n + 1
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }
}

/// A finite realization of an ordinal process, stored as state indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrdinalSeries {
    id: String,
    range: OrdinalRange,
    states: Vec<usize>,
}

impl OrdinalSeries {
    /// Validates already non-negative states against a range.
    pub fn new(id: impl Into<String>, range: OrdinalRange, states: Vec<usize>) -> Result<Self> {
        if states.len() < 2 {
            return Err(Error::TooShort(states.len()));
        }
        if let Some((position, &value)) = states.iter().enumerate().find(|(_, &s)| s > range.n) {
            return Err(Error::OutOfRangeState { position, value: value as i64, n: range.n });
        }
        Ok(Self { id: id.into(), range, states })
    }

    /// Encodes a symbol sequence against the labels of `range`.
    pub fn from_labels<S: AsRef<str>>(id: impl Into<String>, symbols: &[S], range: OrdinalRange) -> Result<Self> {
        let labels = range.labels().ok_or_else(|| Error::InvalidLabels("range carries no labels".into()))?;
        let states = encode_labels(symbols, labels)?;
        Self::new(id, range, states)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn range(&self) -> &OrdinalRange {
        &self.range
    }

    pub fn n(&self) -> usize {
        self.range.n
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Symbol sequence, if the range carries labels.
    pub fn decode(&self) -> Option<Vec<String>> {
        let labels = self.range.labels()?;
        Some(decode_labels(&self.states, labels))
    }

    pub(crate) fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }
}

/// Checks a raw state sequence. Never clamps: any state outside `[0, n]` is an error.
pub fn validate_series(id: &str, states: &[i64], n: i64) -> Result<OrdinalSeries> {
    if n < 1 {
        return Err(Error::EmptyRange(n));
    }
    if states.len() < 2 {
        return Err(Error::TooShort(states.len()));
    }
    let mut out = Vec::with_capacity(states.len());
    for (position, &value) in states.iter().enumerate() {
        if value < 0 || value > n {
            return Err(Error::OutOfRangeState { position, value, n: n as usize });
        }
        out.push(value as usize);
    }
    OrdinalSeries::new(id, OrdinalRange::new(n as usize)?, out)
}

/// Positional encoding of symbols against an ordered label list.
pub fn encode_labels<S: AsRef<str>, L: AsRef<str>>(symbols: &[S], labels: &[L]) -> Result<Vec<usize>> {
    symbols
        .iter()
        .map(|s| {
            labels
                .iter()
                .position(|l| l.as_ref() == s.as_ref())
                .ok_or_else(|| Error::UnknownLabel(s.as_ref().to_string()))
        })
        .collect()
}

pub fn decode_labels<L: AsRef<str>>(states: &[usize], labels: &[L]) -> Vec<String> {
    states.iter().map(|&s| labels[s].as_ref().to_string()).collect()
}

/// Strictly increasing collection of positive lags.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct LagSet(Vec<usize>);

impl LagSet {
    pub fn new(lags: Vec<usize>) -> Result<Self> {
        if lags.is_empty() {
            return Err(Error::InvalidLags("lag set is empty".into()));
        }
        if lags[0] == 0 {
            return Err(Error::InvalidLags("lags must be positive".into()));
        }
        if lags.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidLags("lags must be strictly increasing".into()));
        }
        Ok(Self(lags))
    }

    /// `{1, ..., max_lag}`.
    pub fn up_to(max_lag: usize) -> Result<Self> {
        Self::new((1..=max_lag).collect())
    }

    pub fn lags(&self) -> &[usize] {
        &self.0
    }

    pub fn max_lag(&self) -> usize {
        *self.0.last().expect("lag set is nonempty")
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Checks that every lag is usable on a series of length `min_len`.
    pub fn check_length(&self, min_len: usize) -> Result<()> {
        if self.max_lag() >= min_len {
            return Err(Error::LagTooLarge { lag: self.max_lag(), len: min_len });
        }
        Ok(())
    }
}

impl TryFrom<Vec<usize>> for LagSet {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<LagSet> for Vec<usize> {
    fn from(l: LagSet) -> Self {
        l.0
    }
}

impl std::str::FromStr for LagSet {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let lags = s
            .split(',')
            .map(|t| t.trim().parse::<usize>().map_err(|e| Error::InvalidLags(format!("{t:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(lags)
    }
}

/// Checks that all series share one range size and returns it.
pub fn common_range(series: &[OrdinalSeries]) -> Result<usize> {
    let first = series.first().ok_or(Error::EmptyDataSet)?.n();
    for s in series {
        if s.n() != first {
            return Err(Error::RangeMismatch(first, s.n()));
        }
    }
    Ok(first)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn validates_well_formed_series() {
        let s = validate_series("a", &[0, 1, 2], 2).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.states(), &[0, 1, 2]);
    }

    #[test]
    fn rejects_out_of_range_state() {
        assert!(matches!(
            validate_series("b", &[0, 3], 2),
            Err(Error::OutOfRangeState { position: 1, value: 3, n: 2 })
        ));
        assert!(matches!(validate_series("b", &[0, -1], 2), Err(Error::OutOfRangeState { .. })));
    }

    #[test]
    fn rejects_short_series_and_empty_range() {
        assert_eq!(validate_series("c", &[1], 5), Err(Error::TooShort(1)));
        assert_eq!(validate_series("d", &[0, 0], 0), Err(Error::EmptyRange(0)));
    }

    fn rating_labels() -> Vec<&'static str> {
        vec![
            "D", "SD", "R", "CC", "CCC-", "CCC", "CCC+", "B-", "B", "B+", "BB-", "BB", "BB+", "BBB-", "BBB", "BBB+",
            "A-", "A", "A+", "AA-", "AA", "AA+", "AAA",
        ]
    }

    #[test]
    fn positional_label_encoding() {
        let labels = rating_labels();
        assert_eq!(labels.len(), 23);
        assert_eq!(encode_labels(&["D", "SD"], &labels).unwrap(), vec![0, 1]);
        assert_eq!(encode_labels(&["AAA"], &labels).unwrap(), vec![22]);
        assert_eq!(encode_labels(&["X"], &["D", "SD"]), Err(Error::UnknownLabel("X".into())));
    }

    #[test]
    fn labelled_series_round_trip() {
        let range = OrdinalRange::from_labels(&rating_labels()).unwrap();
        assert_eq!(range.n(), 22);
        let s = OrdinalSeries::from_labels("EE", &["BBB+", "A-", "A-", "AA-"], range).unwrap();
        assert_eq!(s.states(), &[15, 16, 16, 19]);
        assert_eq!(s.decode().unwrap(), vec!["BBB+", "A-", "A-", "AA-"]);
    }

    #[test]
    fn duplicate_labels_rejected() {
        assert!(OrdinalRange::from_labels(&["lo", "hi", "lo"]).is_err());
    }

    #[test]
    fn lag_set_rules() {
        assert!(LagSet::new(vec![]).is_err());
        assert!(LagSet::new(vec![0, 1]).is_err());
        assert!(LagSet::new(vec![2, 1]).is_err());
        assert!(LagSet::new(vec![1, 1]).is_err());
        let l: LagSet = "1, 2,5".parse().unwrap();
        assert_eq!(l.lags(), &[1, 2, 5]);
        assert!(l.check_length(5).is_err());
        assert!(l.check_length(6).is_ok());
    }

    proptest! {
        #[test]
        fn validation_accepts_exactly_in_range(states in prop::collection::vec(-2i64..8, 0..12), n in 1i64..6) {
            let ok = states.len() >= 2 && states.iter().all(|&s| (0..=n).contains(&s));
            prop_assert_eq!(validate_series("p", &states, n).is_ok(), ok);
        }

        #[test]
        fn encode_decode_identity(idx in prop::collection::vec(0usize..23, 1..40)) {
            let labels = rating_labels();
            let symbols = decode_labels(&idx, &labels);
            prop_assert_eq!(encode_labels(&symbols, &labels).unwrap(), idx);
        }
    }
}
