use std::fs;
use std::path::{Path, PathBuf};

use covpow::consistency::{parse_summary_csv, verify_batch, SummaryRow};
use covpow::features::{power_features, window_covariances, FeatureMatrix, Ridge, WindowSpec};
use covpow::geometry::{class_distance_stats, distance_matrix_csv};
use covpow::graph::{sample_inhomogeneous_er, WeightedGraph};
use covpow::io;
use covpow::linalg::SpdMatrix;
use covpow::matern::MaternModel;
use covpow::pipeline::{
    evaluate, extract_features, fit_at, select_beta, synthetic_two_class, DataSplit, Dataset,
    FeatureSet, LinearClassifier, Metrics, Part, SelectionResult,
};
use covpow::signatures::{class_signatures, support_recovery_metrics, Signature, SupportMetrics};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{
    self, DatasetSource, EvaluateConfig, ExtractConfig, GeometryConfig, GraphSource,
    PipelineConfig, ReportConfig, RunConfig, SelectConfig, SignaturesConfig, SimulateConfig,
    VerifyConfig,
};
use crate::error::{CliError, CliResult};
use crate::run::{resolve_run_dir, Manifest, RunDir};

/// A parsed invocation.
pub struct Invocation {
    pub verb: &'static str,
    pub config_text: String,
    /// Directory that relative input paths are resolved against.
    pub base: PathBuf,
    /// Overrides the config's `output_dir`.
    pub output_dir: Option<String>,
}

impl Invocation {
    pub fn load(verb: &'static str, config: &Path, output_dir: Option<String>) -> CliResult<Self> {
        let config_text = fs::read_to_string(config).map_err(|e| {
            CliError::config(format!("cannot read config {}: {e}", config.display()))
        })?;
        let base = config
            .parent()
            .map(Path::to_path_buf)
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or_else(|| PathBuf::from("."));
        Ok(Invocation {
            verb,
            config_text,
            base,
            output_dir,
        })
    }

    fn path(&self, p: &Path) -> PathBuf {
        config::resolve(&self.base, p)
    }
}

fn execute<T: RunConfig>(
    inv: &Invocation,
    body: impl FnOnce(&T, &mut RunDir) -> CliResult<()>,
) -> CliResult<(PathBuf, Manifest)> {
    let cfg: T = config::parse(&inv.config_text)?;
    let out = inv
        .output_dir
        .clone()
        .or_else(|| cfg.output_dir().map(str::to_string))
        .unwrap_or_else(|| inv.verb.to_string());
    let target = resolve_run_dir(&out);
    let mut run = RunDir::create(target.clone())?;
    run.add_input("config.json", inv.config_text.as_bytes());
    body(&cfg, &mut run)?;
    let manifest = run.finish(inv.verb, cfg.schema_version(), inv.config_text.as_bytes())?;
    Ok((target, manifest))
}

pub fn dispatch(inv: &Invocation) -> CliResult<(PathBuf, Manifest)> {
    match inv.verb {
        "simulate" => execute(inv, |c, r| simulate(inv, c, r)),
        "verify" => execute(inv, verify),
        "extract" => execute(inv, |c, r| extract(inv, c, r)),
        "select" => execute(inv, |c, r| select(inv, c, r)),
        "evaluate" => execute(inv, |c, r| evaluate_cmd(inv, c, r)),
        "geometry" => execute(inv, |c, r| geometry(inv, c, r)),
        "signatures" => execute(inv, |c, r| signatures(inv, c, r)),
        "pipeline" => execute(inv, |c, r| pipeline(inv, c, r)),
        "report" => execute(inv, |c, r| report(inv, c, r)),
        other => Err(CliError::config(format!("unknown command {other}"))),
    }
}

fn read_input(inv: &Invocation, run: &mut RunDir, p: &Path) -> CliResult<String> {
    let path = inv.path(p);
    let text = fs::read_to_string(&path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    run.add_input(&p.to_string_lossy(), text.as_bytes());
    Ok(text)
}

#[derive(Serialize, Deserialize)]
struct ModelSidecar {
    model: MaternModel,
    seed: u64,
    n_samples: usize,
}

fn simulate(inv: &Invocation, cfg: &SimulateConfig, run: &mut RunDir) -> CliResult<()> {
    if let Some(spec) = &cfg.two_class {
        let spec = covpow::pipeline::SyntheticSpec {
            seed: cfg.seed,
            ..spec.clone()
        };
        let data = synthetic_two_class(&spec)?;
        let mut index = Vec::new();
        for (i, rec) in data.dataset.recordings.iter().enumerate() {
            let file = format!("recordings/rec_{i:04}.csv");
            run.write(&file, io::series_to_csv(rec))?;
            index.push(json!({"file": file, "label": rec.labels()[0]}));
        }
        for (c, m) in data.models.iter().enumerate() {
            run.write(&format!("graphs/class{c}.csv"), io::graph_to_csv(m.graph()))?;
        }
        run.write_json("models.json", &data.models)?;
        run.write_json("dataset.json", &json!({"spec": spec, "recordings": index}))?;
        return Ok(());
    }
    let spec = cfg
        .model
        .as_ref()
        .ok_or_else(|| CliError::config("missing model"))?;
    let graph = match &spec.graph {
        GraphSource::Inline(g) => g.clone(),
        GraphSource::Csv { path, n } => io::graph_from_csv(&read_input(inv, run, path)?, *n)?,
        GraphSource::Er(p) => sample_inhomogeneous_er(p, cfg.seed)?.graph,
    };
    let model = MaternModel::new(graph, spec.kappa, spec.alpha, spec.sigma)?;
    model.require_contractive()?;
    let n_samples = cfg.n_samples.unwrap_or(1000);
    let samples = model.sample_field(n_samples, cfg.seed)?;
    run.write("samples.csv", io::samples_to_csv(&samples))?;
    run.write("graph.csv", io::graph_to_csv(model.graph()))?;
    run.write_json(
        "model.json",
        &ModelSidecar {
            model,
            seed: cfg.seed,
            n_samples,
        },
    )
}

fn verify(cfg: &VerifyConfig, run: &mut RunDir) -> CliResult<()> {
    let reports = verify_batch(&cfg.scenario, &cfg.seeds.seeds(), &cfg.options)?;
    let mut rows = Vec::with_capacity(reports.len());
    for (seed, r) in &reports {
        run.write_json(&format!("reports/seed_{seed}.json"), r)?;
        rows.push(SummaryRow::new(*seed, r));
    }
    run.write("summary.csv", covpow::consistency::summary_csv(&rows)?)
}

struct LoadedData {
    dataset: Dataset,
    /// Class graphs when the data were simulated here.
    truth: Option<[WeightedGraph; 2]>,
}

fn load_dataset(inv: &Invocation, run: &mut RunDir, src: &DatasetSource) -> CliResult<LoadedData> {
    let files: Vec<PathBuf> = match src {
        DatasetSource::Synthetic(spec) => {
            let data = synthetic_two_class(spec)?;
            let [a, b] = data.models;
            return Ok(LoadedData {
                dataset: data.dataset,
                truth: Some([a.graph().clone(), b.graph().clone()]),
            });
        }
        DatasetSource::Files(f) => f.clone(),
        DatasetSource::Dir(d) => {
            let dir = inv.path(d);
            let mut names: Vec<PathBuf> = fs::read_dir(&dir)
                .map_err(|e| CliError::config(format!("cannot read {}: {e}", dir.display())))?
                .filter_map(|e| e.ok().map(|e| PathBuf::from(e.file_name())))
                .filter(|p| p.extension().is_some_and(|x| x == "csv"))
                .collect();
            names.sort();
            names.into_iter().map(|n| d.join(n)).collect()
        }
    };
    let recordings = files
        .iter()
        .map(|f| Ok(io::series_from_csv(&read_input(inv, run, f)?)?))
        .collect::<CliResult<Vec<_>>>()?;
    Ok(LoadedData {
        dataset: Dataset::new(recordings)?,
        truth: None,
    })
}

fn whole_recording_features(
    ds: &Dataset,
    window: &WindowSpec,
    ridge: Ridge,
    beta: f64,
) -> CliResult<Vec<FeatureMatrix>> {
    let mut out = Vec::new();
    for (r, rec) in ds.recordings.iter().enumerate() {
        for w in window_covariances(rec, window, ridge, r)? {
            out.push(power_features(
                &w.cov,
                beta,
                w.label,
                w.window,
                w.recording,
            )?);
        }
    }
    Ok(out)
}

fn archive(
    run: &mut RunDir,
    rel: &str,
    features: &[FeatureMatrix],
    window: WindowSpec,
    ridge: Ridge,
    provenance: serde_json::Value,
) -> CliResult<()> {
    let dir = run.staged_dir(rel)?;
    io::write_feature_archive(&dir, features, Some(window), Some(ridge), provenance)?;
    run.register_dir(rel)
}

fn extract(inv: &Invocation, cfg: &ExtractConfig, run: &mut RunDir) -> CliResult<()> {
    let data = load_dataset(inv, run, &cfg.dataset)?;
    let Some(spec) = &cfg.split else {
        let feats = whole_recording_features(&data.dataset, &cfg.window, cfg.ridge, cfg.beta)?;
        let prov = json!({"command": "extract", "dataset": cfg.dataset});
        return archive(run, "features", &feats, cfg.window, cfg.ridge, prov);
    };
    let split = DataSplit::new(&data.dataset, spec)?;
    for part in Part::ALL {
        let set = extract_features(
            &data.dataset,
            &split,
            part,
            &cfg.window,
            cfg.ridge,
            cfg.beta,
        )?;
        let prov = json!({
            "command": "extract",
            "dataset": cfg.dataset,
            "split": spec,
            "part": part,
            "token": set.token,
        });
        archive(
            run,
            &format!("features/{}", part.name()),
            &set.features,
            cfg.window,
            cfg.ridge,
            prov,
        )?;
    }
    Ok(())
}

/// A classifier together with the feature recipe it was trained on.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FittedModel {
    pub beta: f64,
    pub window: WindowSpec,
    pub ridge: Ridge,
    pub classifier: LinearClassifier,
}

fn run_selection(
    run: &mut RunDir,
    ds: &Dataset,
    split: &DataSplit,
    sel: &covpow::pipeline::SelectionConfig,
) -> CliResult<(SelectionResult, FittedModel)> {
    let res = select_beta(ds, split, sel)?;
    let window = res.window_spec_star.ok_or_else(|| {
        CliError::Core(covpow::Error::Numerical(
            "selection returned no window".into(),
        ))
    })?;
    let classifier = fit_at(ds, split, res.beta_star, &window, sel)?;
    let fitted = FittedModel {
        beta: res.beta_star,
        window,
        ridge: sel.ridge,
        classifier,
    };
    run.write_json("selection.json", &res)?;
    run.write("candidates.csv", res.table_csv()?)?;
    run.write_json("model.json", &fitted)?;
    Ok((res, fitted))
}

fn select(inv: &Invocation, cfg: &SelectConfig, run: &mut RunDir) -> CliResult<()> {
    let data = load_dataset(inv, run, &cfg.dataset)?;
    let split = DataSplit::new(&data.dataset, &cfg.split)?;
    run_selection(run, &data.dataset, &split, &cfg.selection)?;
    Ok(())
}

#[derive(Serialize)]
struct EvaluationRecord<'a> {
    part: Part,
    beta: f64,
    window: WindowSpec,
    n_windows: usize,
    metrics: &'a Metrics,
}

fn evaluate_cmd(inv: &Invocation, cfg: &EvaluateConfig, run: &mut RunDir) -> CliResult<()> {
    let fitted: FittedModel = serde_json::from_str(&read_input(inv, run, &cfg.model)?)?;
    let data = load_dataset(inv, run, &cfg.dataset)?;
    let split = DataSplit::new(&data.dataset, &cfg.split)?;
    let set = extract_features(
        &data.dataset,
        &split,
        cfg.part,
        &fitted.window,
        fitted.ridge,
        fitted.beta,
    )?;
    let metrics = evaluate(&fitted.classifier, &set)?;
    run.write_json(
        "metrics.json",
        &EvaluationRecord {
            part: cfg.part,
            beta: fitted.beta,
            window: fitted.window,
            n_windows: set.features.len(),
            metrics: &metrics,
        },
    )
}

fn load_archive(inv: &Invocation, run: &mut RunDir, dir: &Path) -> CliResult<Vec<FeatureMatrix>> {
    let path = inv.path(dir);
    let (manifest, features) = io::read_feature_archive(&path)?;
    let label = dir.to_string_lossy();
    run.add_input(
        &format!("{label}/{}", io::ARCHIVE_MANIFEST),
        &fs::read(path.join(io::ARCHIVE_MANIFEST))?,
    );
    for e in &manifest.entries {
        run.add_input(
            &format!("{label}/{}", e.file),
            &fs::read(path.join(&e.file))?,
        );
    }
    Ok(features)
}

fn write_identifiability(
    run: &mut RunDir,
    features: &[FeatureMatrix],
    dump: bool,
) -> CliResult<()> {
    let report = class_distance_stats(features)?;
    run.write_json("identifiability.json", &report)?;
    if dump {
        let mats: Vec<&SpdMatrix> = features.iter().map(|f| &f.matrix).collect();
        run.write("distances.csv", distance_matrix_csv(&mats)?)?;
    }
    Ok(())
}

fn geometry(inv: &Invocation, cfg: &GeometryConfig, run: &mut RunDir) -> CliResult<()> {
    let features = load_archive(inv, run, &cfg.features)?;
    write_identifiability(run, &features, cfg.distance_matrix)
}

#[derive(Serialize)]
struct SignatureMeta<'a> {
    label: u8,
    source: &'a str,
    n: usize,
    threshold: f64,
    n_edges: usize,
    gmm: &'a covpow::signatures::GmmFit,
}

#[derive(Serialize)]
struct Recovery<'a> {
    source: &'a str,
    label: u8,
    metrics: SupportMetrics,
}

fn write_signatures(
    run: &mut RunDir,
    sigs: &[Signature],
    truth: Option<&[WeightedGraph; 2]>,
) -> CliResult<()> {
    let mut recovery = Vec::new();
    for s in sigs {
        run.write(&format!("signatures/{}.csv", s.source), s.edge_csv())?;
        run.write_json(
            &format!("signatures/{}.json", s.source),
            &SignatureMeta {
                label: s.label,
                source: &s.source,
                n: s.n,
                threshold: s.threshold,
                n_edges: s.edges.len(),
                gmm: &s.gmm,
            },
        )?;
        if let Some(t) = truth {
            let g = t
                .get(s.label as usize)
                .ok_or_else(|| CliError::config("signature label has no ground truth"))?;
            recovery.push(Recovery {
                source: &s.source,
                label: s.label,
                metrics: support_recovery_metrics(&s.graph()?, g)?,
            });
        }
    }
    if truth.is_some() {
        run.write_json("recovery.json", &recovery)?;
    }
    Ok(())
}

fn signatures(inv: &Invocation, cfg: &SignaturesConfig, run: &mut RunDir) -> CliResult<()> {
    let features = load_archive(inv, run, &cfg.features)?;
    let truth = match &cfg.truth {
        Some([a, b]) => Some([
            io::graph_from_csv(&read_input(inv, run, a)?, None)?,
            io::graph_from_csv(&read_input(inv, run, b)?, None)?,
        ]),
        None => None,
    };
    let sigs = class_signatures(&features, cfg.mode, &cfg.gmm)?;
    write_signatures(run, &sigs, truth.as_ref())
}

fn pipeline(inv: &Invocation, cfg: &PipelineConfig, run: &mut RunDir) -> CliResult<()> {
    let data = load_dataset(inv, run, &cfg.dataset)?;
    let ds = &data.dataset;
    let split = DataSplit::new(ds, &cfg.split)?;
    let (res, fitted) = run_selection(run, ds, &split, &cfg.selection)?;

    let test = extract_features(
        ds,
        &split,
        Part::Test,
        &fitted.window,
        fitted.ridge,
        fitted.beta,
    )?;
    let metrics = evaluate(&fitted.classifier, &test)?;
    run.write_json(
        "test_metrics.json",
        &EvaluationRecord {
            part: Part::Test,
            beta: res.beta_star,
            window: fitted.window,
            n_windows: test.features.len(),
            metrics: &metrics,
        },
    )?;

    let id = &cfg.identifiability;
    let id_window = WindowSpec::new(fitted.window.length, id.overlap)?;
    let FeatureSet { features, .. } =
        extract_features(ds, &split, id.part, &id_window, fitted.ridge, fitted.beta)?;
    write_identifiability(run, &features, id.distance_matrix)?;

    let sigs = class_signatures(&features, cfg.signatures.mode, &cfg.signatures.gmm)?;
    write_signatures(run, &sigs, data.truth.as_ref())?;
    run.write_json("split.json", &split)
}

#[derive(Debug, Serialize)]
struct ReportSummary {
    files: Vec<String>,
    rows: usize,
    /// Rows whose cross-block norm lies below the reported gate.
    gated_rows: usize,
    consistent_rows: usize,
    inconsistent_rows: usize,
    undetermined_rows: usize,
    gated_inconsistent_rows: usize,
    rows_with_bound: usize,
    bound_violations: usize,
    max_norm_to_bound: Option<f64>,
}

fn summarize(files: Vec<String>, rows: &[SummaryRow]) -> ReportSummary {
    let gated = |r: &SummaryRow| r.g.is_some_and(|g| r.cross_norm < g);
    let bounded: Vec<&SummaryRow> = rows.iter().filter(|r| r.bound.is_some()).collect();
    ReportSummary {
        files,
        rows: rows.len(),
        gated_rows: rows.iter().filter(|r| gated(r)).count(),
        consistent_rows: rows.iter().filter(|r| r.consistent == Some(true)).count(),
        inconsistent_rows: rows.iter().filter(|r| r.consistent == Some(false)).count(),
        undetermined_rows: rows.iter().filter(|r| r.consistent.is_none()).count(),
        gated_inconsistent_rows: rows
            .iter()
            .filter(|r| gated(r) && r.consistent == Some(false))
            .count(),
        rows_with_bound: bounded.len(),
        bound_violations: bounded
            .iter()
            .filter(|r| r.bound.is_some_and(|b| r.empirical_norm > b))
            .count(),
        max_norm_to_bound: bounded
            .iter()
            .filter_map(|r| r.bound.filter(|b| *b > 0.0).map(|b| r.empirical_norm / b))
            .reduce(f64::max),
    }
}

fn report(inv: &Invocation, cfg: &ReportConfig, run: &mut RunDir) -> CliResult<()> {
    let mut rows = Vec::new();
    let mut files = Vec::new();
    for p in &cfg.summaries {
        rows.extend(parse_summary_csv(&read_input(inv, run, p)?)?);
        files.push(p.to_string_lossy().into_owned());
    }
    run.write_json("report.json", &summarize(files, &rows))
}
