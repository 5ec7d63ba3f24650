//! On-disk formats.
//!
//! * Series: JSON lines. An optional first line
//!   `{"format":"ots-jsonl","version":1,"labels":[...]}` names the ordered
//!   categories; every other line is `{"id":..,"n":..,"states":[..]}` where
//!   states are indices, or label strings when a header is present.
//! * Series CSV: columns `id,n,states` with space-separated indices.
//! * Truth sidecar: `{"truth":[{"id":..,"cluster":1|"none"}], ...}` with
//!   1-based cluster numbers.
//! * Partitions and distance matrices: JSON documents.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::clustering::{ClusterConfig, FuzzyPartition};
use crate::error::{Error, Result};
use crate::metrics::{DistanceMatrix, Metric};
use crate::series::{encode_labels, validate_series, LagSet, OrdinalRange, OrdinalSeries};

pub const FORMAT_TAG: &str = "ots-jsonl";
pub const FORMAT_VERSION: u64 = 1;

pub fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn read_series_jsonl<R: BufRead>(reader: R) -> Result<Vec<OrdinalSeries>> {
    let mut labels: Option<Vec<String>> = None;
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let v: Value = serde_json::from_str(&line).map_err(|e| Error::Format(format!("line {}: {e}", lineno + 1)))?;
        if v.get("format").is_some() {
            if lineno != 0 || !out.is_empty() {
                return Err(Error::Format("header must be the first line".into()));
            }
            if v["format"] != FORMAT_TAG || v["version"] != FORMAT_VERSION {
                return Err(Error::Format(format!("unsupported header {v}")));
            }
            if let Some(l) = v.get("labels").filter(|l| !l.is_null()) {
                labels = Some(serde_json::from_value(l.clone())?);
            }
            continue;
        }
        out.push(parse_row(&v, labels.as_deref()).map_err(|e| match e {
            Error::Format(m) => Error::Format(format!("line {}: {m}", lineno + 1)),
            other => other,
        })?);
    }
    if out.is_empty() {
        return Err(Error::EmptyDataSet);
    }
    Ok(out)
}

fn parse_row(v: &Value, labels: Option<&[String]>) -> Result<OrdinalSeries> {
    let id = v["id"].as_str().ok_or_else(|| Error::Format("missing string field \"id\"".into()))?;
    let states = v["states"].as_array().ok_or_else(|| Error::Format("missing array field \"states\"".into()))?;
    if states.first().is_some_and(Value::is_string) {
        let labels = labels.ok_or_else(|| Error::Format("label states need a header with labels".into()))?;
        let symbols: Vec<&str> = states
            .iter()
            .map(|s| s.as_str().ok_or_else(|| Error::Format("mixed state types".into())))
            .collect::<Result<_>>()?;
        return OrdinalSeries::new(id, OrdinalRange::from_labels(labels)?, encode_labels(&symbols, labels)?);
    }
    let n = match (v.get("n").and_then(Value::as_i64), labels) {
        (Some(n), _) => n,
        (None, Some(l)) => l.len() as i64 - 1,
        (None, None) => return Err(Error::Format("missing integer field \"n\"".into())),
    };
    let raw: Vec<i64> = states
        .iter()
        .map(|s| s.as_i64().ok_or_else(|| Error::Format(format!("state {s} is not an integer"))))
        .collect::<Result<_>>()?;
    let series = validate_series(id, &raw, n)?;
    match labels {
        Some(l) if l.len() as i64 == n + 1 => {
            OrdinalSeries::new(id, OrdinalRange::from_labels(l)?, series.states().to_vec())
        }
        Some(l) => Err(Error::Format(format!("header has {} labels but n = {n}", l.len()))),
        None => Ok(series),
    }
}

pub fn write_series_jsonl<W: Write>(series: &[OrdinalSeries], mut w: W) -> Result<()> {
    if let Some(labels) = series.first().and_then(|s| s.range().labels()) {
        writeln!(w, "{}", json!({"format": FORMAT_TAG, "version": FORMAT_VERSION, "labels": labels}))?;
    }
    for s in series {
        writeln!(w, "{}", json!({"id": s.id(), "n": s.n(), "states": s.states()}))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_series_csv<R: Read>(reader: R) -> Result<Vec<OrdinalSeries>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::Format(format!("missing column {name:?}")))
    };
    let (ci, cn, cs) = (col("id")?, col("n")?, col("states")?);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let n: i64 = rec[cn].parse().map_err(|e| Error::Format(format!("n = {:?}: {e}", &rec[cn])))?;
        let states = rec[cs]
            .split_whitespace()
            .map(|t| t.parse::<i64>().map_err(|e| Error::Format(format!("state {t:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        out.push(validate_series(&rec[ci], &states, n)?);
    }
    if out.is_empty() {
        return Err(Error::EmptyDataSet);
    }
    Ok(out)
}

/// Reads series by extension: `.csv` as CSV, anything else as JSON lines.
pub fn read_series_file(path: &Path) -> Result<Vec<OrdinalSeries>> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        read_series_csv(open(path)?)
    } else {
        read_series_jsonl(open(path)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ClusterTag {
    Cluster(usize),
    None(NoneTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoneTag {
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthEntry {
    pub id: String,
    pub cluster: ClusterTag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub clusters: usize,
    pub truth: Vec<TruthEntry>,
}

impl TruthFile {
    /// Builds a sidecar from 0-based labels.
    pub fn new(ids: &[String], labels: &[Option<usize>], clusters: usize) -> Self {
        let truth = ids
            .iter()
            .zip(labels)
            .map(|(id, l)| TruthEntry {
                id: id.clone(),
                cluster: match l {
                    Some(c) => ClusterTag::Cluster(c + 1),
                    None => ClusterTag::None(NoneTag::None),
                },
            })
            .collect();
        Self { scenario: None, seed: None, clusters, truth }
    }

    /// 0-based labels in the order of `ids`.
    pub fn labels_for(&self, ids: &[String]) -> Result<Vec<Option<usize>>> {
        ids.iter()
            .map(|id| {
                let e = self
                    .truth
                    .iter()
                    .find(|e| &e.id == id)
                    .ok_or_else(|| Error::Format(format!("no ground truth for series {id:?}")))?;
                match e.cluster {
                    ClusterTag::Cluster(0) => Err(Error::Format("cluster numbers start at 1".into())),
                    ClusterTag::Cluster(c) => Ok(Some(c - 1)),
                    ClusterTag::None(_) => Ok(None),
                }
            })
            .collect()
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(open(path)?)?)
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Partition document with ids, medoid ids and the configuration that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionFile {
    pub ids: Vec<String>,
    pub memberships: Vec<Vec<f64>>,
    pub medoids: Vec<String>,
    pub medoid_indices: Vec<usize>,
    pub beta: Option<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<Metric>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lags: Option<LagSet>,
    pub config: ClusterConfig,
    #[serde(default)]
    pub objective_trace: Vec<f64>,
}

impl PartitionFile {
    pub fn new(ids: &[String], p: &FuzzyPartition, config: &ClusterConfig, dm: Option<&DistanceMatrix>) -> Self {
        Self {
            ids: ids.to_vec(),
            memberships: p.memberships.clone(),
            medoids: p.medoids.iter().map(|&j| ids[j].clone()).collect(),
            medoid_indices: p.medoids.clone(),
            beta: p.beta,
            objective: p.objective,
            iterations: p.iterations,
            converged: p.converged,
            metric: dm.map(|d| d.metric),
            lags: dm.map(|d| d.lags.clone()),
            config: config.clone(),
            objective_trace: p.objective_trace.clone(),
        }
    }

    pub fn partition(&self) -> FuzzyPartition {
        FuzzyPartition {
            memberships: self.memberships.clone(),
            medoids: self.medoid_indices.clone(),
            beta: self.beta,
            iterations: self.iterations,
            converged: self.converged,
            objective: self.objective,
            objective_trace: self.objective_trace.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_round_trip_with_and_without_labels() {
        let plain = vec![validate_series("a", &[0, 1, 2, 1], 2).unwrap(), validate_series("b", &[2, 2, 0], 2).unwrap()];
        let mut buf = Vec::new();
        write_series_jsonl(&plain, &mut buf).unwrap();
        assert_eq!(read_series_jsonl(&buf[..]).unwrap(), plain);

        let range = OrdinalRange::from_labels(&["low", "mid", "high"]).unwrap();
        let labelled = vec![OrdinalSeries::from_labels("c", &["low", "high", "mid"], range).unwrap()];
        let mut buf = Vec::new();
        write_series_jsonl(&labelled, &mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("{\"format\":\"ots-jsonl\""));
        assert_eq!(read_series_jsonl(&buf[..]).unwrap(), labelled);
    }

    #[test]
    fn label_states_are_encoded_positionally() {
        let text = "{\"format\":\"ots-jsonl\",\"version\":1,\"labels\":[\"D\",\"C\",\"B\",\"A\"]}\n\
                    {\"id\":\"x\",\"states\":[\"A\",\"B\",\"D\"]}\n";
        let s = read_series_jsonl(text.as_bytes()).unwrap();
        assert_eq!(s[0].states(), &[3, 2, 0]);
        assert_eq!(s[0].n(), 3);
    }

    #[test]
    fn jsonl_errors() {
        assert_eq!(read_series_jsonl("".as_bytes()), Err(Error::EmptyDataSet));
        assert!(matches!(
            read_series_jsonl("{\"id\":\"x\",\"n\":2,\"states\":[0,3]}".as_bytes()),
            Err(Error::OutOfRangeState { position: 1, .. })
        ));
        assert!(matches!(read_series_jsonl("{\"id\":\"x\",\"n\":2}".as_bytes()), Err(Error::Format(_))));
        assert!(matches!(read_series_jsonl("not json".as_bytes()), Err(Error::Format(_))));
        assert!(matches!(
            read_series_jsonl("{\"id\":\"x\",\"states\":[\"A\",\"B\"]}".as_bytes()),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn csv_series() {
        let text = "id,n,states\ns1,3,0 1 2 3 3\ns2,3,1 1 0\n";
        let s = read_series_csv(text.as_bytes()).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].states(), &[0, 1, 2, 3, 3]);
        assert!(read_series_csv("id,n,states\ns1,3,0 x\n".as_bytes()).is_err());
    }

    #[test]
    fn truth_sidecar_round_trip() {
        let ids: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let t = TruthFile::new(&ids, &[Some(0), Some(1), None], 2);
        let text = serde_json::to_string(&t).unwrap();
        assert!(text.contains("\"cluster\":1") && text.contains("\"cluster\":\"none\""));
        let back: TruthFile = serde_json::from_str(&text).unwrap();
        let reordered = vec!["c".to_string(), "a".to_string()];
        assert_eq!(back.labels_for(&reordered).unwrap(), vec![None, Some(0)]);
        assert!(back.labels_for(&["zz".to_string()]).is_err());
    }
}
