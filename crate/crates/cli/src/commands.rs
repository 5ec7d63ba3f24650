use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use log::{info, warn};
use serde::Serialize;

use otsclust::estimation::MarginalFeatures;
use otsclust::eval::{one_hot, Classification};
use otsclust::io::{
    create, open, read_json, read_series_file, write_json, write_series_jsonl, PartitionFile, TruthFile,
};
use otsclust::metrics::read_matrix_csv;
use otsclust::{
    agreement, build_reprs, cluster, correct_classification, distance_matrix, mds_2d, run_bench, select_c_m,
    select_lags, BenchConfig, ClusterConfig, Correction, DistanceMatrix, Error, LagSelectionConfig, LagSet,
    OrdinalSeries,
};

use crate::grid::{parse_int_grid, parse_lags, parse_real_grid, LagMode};
use crate::{
    BenchArgs, ClusterArgs, Command, CorrectionArg, DistmatArgs, EvaluateArgs, FeaturesArgs, LagArgs, MatrixFormat,
    MdsArgs, SelectCmArgs, SelectLagsArgs, SimulateArgs, SolverArgs,
};

/// 2 for configuration and validation errors, 3 for IO, 4 for degenerate data.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(err) = cause.downcast_ref::<Error>() {
            return match err {
                Error::Io(_) => 3,
                Error::ZeroDispersion(_)
                | Error::ZeroVariance(_)
                | Error::SingularRecursion(_)
                | Error::DegenerateDistances
                | Error::AllCellsDegenerate => 4,
                _ => 2,
            };
        }
        if cause.downcast_ref::<io::Error>().is_some() {
            return 3;
        }
    }
    2
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Simulate(a) => simulate(a),
        Command::Features(a) => features(a),
        Command::Distmat(a) => distmat(a),
        Command::Cluster(a) => cluster_cmd(a),
        Command::SelectLags(a) => select_lags_cmd(a),
        Command::SelectCm(a) => select_cm(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Mds(a) => mds(a),
        Command::Bench(a) => bench(a),
    }
}

/// JSON to a file, or pretty-printed to standard output.
fn emit_json<T: Serialize>(value: &T, output: Option<&Path>) -> Result<()> {
    match output {
        Some(path) => write_json(value, path)?,
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            serde_json::to_writer_pretty(&mut w, value)?;
            writeln!(w)?;
        }
    }
    Ok(())
}

fn sink(output: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match output {
        Some(path) => Box::new(create(path)?),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn load_series(path: &Path) -> Result<Vec<OrdinalSeries>> {
    let series = read_series_file(path).with_context(|| format!("reading {}", path.display()))?;
    if series.is_empty() {
        return Err(Error::EmptyDataSet).with_context(|| format!("reading {}", path.display()));
    }
    info!("read {} series from {}", series.len(), path.display());
    Ok(series)
}

fn resolve_lags(series: &[OrdinalSeries], args: &LagArgs) -> Result<LagSet> {
    match parse_lags(&args.lags)? {
        LagMode::Fixed(lags) => Ok(lags),
        LagMode::Auto => {
            let cfg =
                LagSelectionConfig { alpha: args.alpha, max_lag: args.max_lag, correction: Correction::Bonferroni };
            let report = select_lags(series, &cfg)?;
            if report.fallback {
                warn!("no significant lag found; using lag set {{1}}");
            }
            info!("selected lags {:?} (alpha' = {:.3e})", report.lags.lags(), report.alpha_prime);
            Ok(report.lags)
        }
    }
}

/// Identical series leave nothing to partition.
fn check_spread(dm: &DistanceMatrix) -> Result<()> {
    let s = dm.len();
    if (0..s).all(|i| (0..s).all(|j| dm.total.get(i, j) == 0.0)) {
        return Err(Error::DegenerateDistances).context("all pairwise distances are zero");
    }
    Ok(())
}

fn cluster_config(clusters: usize, m: f64, solver: &SolverArgs) -> ClusterConfig {
    let mut cfg = ClusterConfig::new(clusters, m).with_seed(solver.seed).with_restarts(solver.restarts);
    cfg.max_iter = solver.max_iter;
    if solver.weighted {
        cfg = cfg.weighted(solver.initial_beta);
    }
    cfg
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let data = otsclust::scenario(a.scenario, a.length, a.seed)?;
    fs::create_dir_all(&a.output).map_err(|e| Error::Io(format!("{}: {e}", a.output.display())))?;
    let series_path = a.output.join("series.jsonl");
    let mut w = create(&series_path)?;
    write_series_jsonl(&data.series, &mut w)?;
    w.flush().map_err(Error::from)?;

    let ids: Vec<String> = data.series.iter().map(|s| s.id().to_string()).collect();
    let mut truth = TruthFile::new(&ids, &data.labels, data.clusters);
    truth.scenario = Some(a.scenario);
    truth.seed = Some(a.seed);
    write_json(&truth, &a.output.join("truth.json"))?;
    info!("wrote {} series to {}", data.series.len(), series_path.display());
    Ok(())
}

#[derive(Serialize)]
struct FeatureRow {
    id: String,
    n: usize,
    len: usize,
    lags: Vec<usize>,
    cumulative: Vec<f64>,
    features: MarginalFeatures,
    kappa: Vec<f64>,
    acf: Vec<f64>,
    degenerate: bool,
}

fn features(a: FeaturesArgs) -> Result<()> {
    let series = load_series(&a.input)?;
    let lags = resolve_lags(&series, &a.lags)?;
    let rows: Vec<FeatureRow> = build_reprs(&series, &lags)?
        .into_iter()
        .map(|r| FeatureRow {
            id: r.id,
            n: r.n,
            len: r.len,
            lags: r.lags.lags().to_vec(),
            cumulative: r.cumulative.values().to_vec(),
            features: r.features,
            kappa: r.kappa,
            acf: r.acf,
            degenerate: r.degenerate,
        })
        .collect();
    emit_json(&rows, a.output.as_deref())
}

fn distmat(a: DistmatArgs) -> Result<()> {
    let series = load_series(&a.input)?;
    let lags = resolve_lags(&series, &a.lags)?;
    let dm = distance_matrix(&series, a.metric, &lags)?;
    match a.format {
        MatrixFormat::Csv => {
            let mut w = sink(a.output.as_deref())?;
            dm.write_csv(&mut w)?;
            w.flush()?;
        }
        MatrixFormat::Json => emit_json(&dm, a.output.as_deref())?,
    }
    Ok(())
}

fn cluster_cmd(a: ClusterArgs) -> Result<()> {
    let series = load_series(&a.input)?;
    let cfg = cluster_config(a.clusters, a.fuzziness, &a.solver);
    // fail on a bad configuration before any estimation work
    cfg.validate(series.len())?;
    let lags = resolve_lags(&series, &a.lags)?;
    let dm = distance_matrix(&series, a.metric, &lags)?;
    check_spread(&dm)?;
    let p = cluster(&dm, &cfg)?;
    if !p.converged {
        warn!("no convergence within {} iterations", cfg.max_iter);
    }
    info!("objective {:.6e} after {} iterations", p.objective, p.iterations);
    emit_json(&PartitionFile::new(&dm.ids, &p, &cfg, Some(&dm)), a.output.as_deref())
}

fn select_lags_cmd(a: SelectLagsArgs) -> Result<()> {
    let series = load_series(&a.input)?;
    let correction = match a.correction {
        CorrectionArg::Bonferroni => Correction::Bonferroni,
        CorrectionArg::None => Correction::None,
    };
    let report = select_lags(&series, &LagSelectionConfig { alpha: a.alpha, max_lag: a.max_lag, correction })?;
    emit_json(&report, a.output.as_deref())
}

fn select_cm(a: SelectCmArgs) -> Result<()> {
    let c_grid = parse_int_grid(&a.clusters)?;
    let m_grid = parse_real_grid(&a.fuzziness)?;
    let series = load_series(&a.input)?;
    let lags = resolve_lags(&series, &a.lags)?;
    let dm = distance_matrix(&series, a.metric, &lags)?;
    check_spread(&dm)?;
    let cfg = cluster_config(c_grid[0], m_grid[0], &a.solver);
    let selection = select_c_m(&dm, &c_grid, &m_grid, &cfg)?;
    info!("selected C = {}, m = {}", selection.clusters, selection.m);
    emit_json(&selection, a.output.as_deref())
}

#[derive(Serialize)]
struct EvaluationReport {
    series: usize,
    clusters: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    arif: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    jif: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    classification: Option<Classification>,
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let partition: PartitionFile =
        read_json(&a.partition).with_context(|| format!("reading {}", a.partition.display()))?;
    let truth: TruthFile = read_json(&a.truth).with_context(|| format!("reading {}", a.truth.display()))?;
    let labels = truth.labels_for(&partition.ids)?;
    let complete: Option<Vec<usize>> = labels.iter().copied().collect();

    let (arif, jif) = match &complete {
        Some(l) => {
            let ag = agreement(&one_hot(l), &partition.memberships)?;
            (Some(ag.arif), Some(ag.jif))
        }
        None => {
            info!("ground truth has isolated series; ARIF/JIF skipped");
            (None, None)
        }
    };
    let classification = a.cutoff.map(|c| correct_classification(&partition.memberships, &labels, c)).transpose()?;
    if arif.is_none() && classification.is_none() {
        bail!(Error::InvalidConfig("ground truth contains isolated series; pass --cutoff".into()));
    }
    let report = EvaluationReport {
        series: partition.ids.len(),
        clusters: partition.medoid_indices.len(),
        arif,
        jif,
        classification,
    };
    emit_json(&report, a.output.as_deref())
}

#[derive(Serialize)]
struct MdsSummary {
    stress: f64,
    r_squared: f64,
    iterations: usize,
}

fn mds(a: MdsArgs) -> Result<()> {
    let (ids, d) = read_matrix_csv(open(&a.input)?).with_context(|| format!("reading {}", a.input.display()))?;
    let emb = mds_2d(&d)?;
    info!("stress {:.4e}, R² {:.4}", emb.stress, emb.r_squared);

    let mut w = sink(a.output.as_deref())?;
    writeln!(w, "id,x,y")?;
    for (id, p) in ids.iter().zip(&emb.points) {
        writeln!(w, "{id},{:.16e},{:.16e}", p[0], p[1])?;
    }
    w.flush()?;
    if let Some(path) = &a.summary {
        write_json(&MdsSummary { stress: emb.stress, r_squared: emb.r_squared, iterations: emb.iterations }, path)?;
    }
    Ok(())
}

fn bench(a: BenchArgs) -> Result<()> {
    let m_grid = parse_real_grid(&a.fuzziness)?;
    let mut cfg = BenchConfig::new(a.scenario, a.length, a.trials, a.metrics.clone(), m_grid);
    cfg.seed = a.seed;
    cfg.restarts = a.restarts;
    cfg.max_iter = a.max_iter;
    cfg.weighted = a.weighted;
    cfg.cutoff = a.cutoff;
    cfg.lags = match a.lags.as_deref().map(parse_lags).transpose()? {
        None => None,
        Some(LagMode::Fixed(l)) => Some(l),
        Some(LagMode::Auto) => bail!(Error::InvalidConfig("bench takes an explicit lag set".into())),
    };
    cfg.validate()?;
    // unknown scenario ids should fail fast, not after spinning up trials
    otsclust::simgen::scenario_spec(a.scenario, a.length, a.seed)?;

    let report = run_bench(&cfg)?;
    for row in &report.summary {
        info!("{} m={}: ARIF {:?}, rate {:?}", row.metric, row.m, row.mean_arif, row.rate);
    }
    if let Some(path) = &a.trials_csv {
        let mut w = create(path)?;
        report.write_trials_csv(&mut w)?;
        w.flush().map_err(Error::from)?;
    }
    emit_json(&report, a.output.as_deref())
}
