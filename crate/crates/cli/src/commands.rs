use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use leafwet::cnn::{history_csv, load_model, save_model, CnnHeader, CnnModel, HEADER_FILE};
use leafwet::data::{read_dataset, write_dataset};
use leafwet::eval::{
    fit_cnn_pipeline, fit_dt_pipeline, run_scenario, time_inference, DtModel, DtTrainInfo, ModelReport, ScenarioId,
};
use leafwet::sim::{generate_dataset, std_trace, xi_statistic};
use leafwet::Dataset;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{create_dir, write_file, CliError, CliResult};
use crate::svg::{line_panels, Series};

pub const DATASET_DIR: &str = "dataset";
pub const CONFIG_FILE: &str = "config.toml";
pub const RUN_FILE: &str = "run.json";
pub const MODEL_FILE: &str = "model.json";
pub const HISTORY_FILE: &str = "history.csv";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_CSV: &str = "report.csv";

/// Written next to every command's outputs.
#[derive(Debug, Serialize)]
struct RunRecord<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config_sha256: String,
    /// content hashes of the datasets read or written
    datasets: BTreeMap<String, String>,
}

fn write_provenance(out: &Path, command: &str, cfg: &RunConfig, datasets: BTreeMap<String, String>) -> CliResult<()> {
    create_dir(out)?;
    write_file(out.join(CONFIG_FILE), cfg.to_toml())?;
    let rec = RunRecord {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command,
        config_sha256: cfg.hash(),
        datasets,
    };
    write_file(out.join(RUN_FILE), to_json(&rec)?)
}

fn to_json<T: Serialize>(v: &T) -> CliResult<String> {
    serde_json::to_string_pretty(v).map_err(|e| CliError::Pipeline(e.into()))
}

/// Accepts a dataset directory or the `synth` output directory holding one.
fn load_data(dir: &Path, what: &str) -> CliResult<Dataset> {
    let inner = dir.join(DATASET_DIR);
    let dir = if inner.is_dir() { &inner } else { dir };
    let d = read_dataset(dir)?;
    eprintln!("{what}: {} records from {}", d.len(), dir.display());
    Ok(d)
}

fn g_histogram(ds: &Dataset) -> (String, String) {
    let g = ds.g_values();
    let top = g.iter().cloned().fold(0.0, f64::max).ceil().max(1.0) as usize;
    let mut counts = vec![0usize; top];
    for v in &g {
        counts[(v.floor() as usize).min(top - 1)] += 1;
    }
    let mut csv = String::from("g_lo,g_hi,count\n");
    let mut text = String::new();
    let peak = counts.iter().cloned().max().unwrap_or(0).max(1);
    for (i, c) in counts.iter().enumerate() {
        let _ = writeln!(csv, "{i},{},{c}", i + 1);
        let _ = writeln!(text, "{i:>3}-{:<3} mg {c:>6} {}", i + 1, "#".repeat(40 * c / peak));
    }
    (csv, text)
}

pub fn synth(cfg: &RunConfig, out: &Path) -> CliResult<()> {
    cfg.sim.validate().map_err(|e| CliError::Config(format!("sim: {e}")))?;
    if cfg.sim.n_series == 0 {
        eprintln!("warning: sim.n_series = 0, writing an empty dataset");
    }
    let ds = generate_dataset(&cfg.sim)?;
    write_dataset(&ds, out.join(DATASET_DIR))?;
    let (csv, text) = g_histogram(&ds);
    write_file(out.join("g_histogram.csv"), csv)?;
    write_provenance(out, "synth", cfg, BTreeMap::from([("output".into(), ds.content_hash())]))?;
    println!("{} records in {} series ({:?})", ds.len(), ds.series_ids().len(), cfg.sim.orientation);
    if !ds.is_empty() {
        println!("g_b histogram:\n{text}");
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ModelArg {
    Dt,
    Cnn,
}

#[derive(Debug, Serialize)]
struct DtMetrics<'a> {
    orders: &'a [usize],
    selected_features: &'a [String],
    best_cv_loss: Option<f64>,
    rfe_baseline_loss: Option<f64>,
    rfe_val_loss: Option<f64>,
}

#[derive(Debug, Serialize)]
struct CnnMetrics {
    epochs: usize,
    best_epoch: Option<usize>,
    best_val_loss: Option<f64>,
}

fn grid_csv(info: &DtTrainInfo) -> String {
    let mut s = String::from("n_samples_per_tree,max_depth,max_features,cv_loss\n");
    for r in &info.grid {
        let depth = r.params.max_depth.map_or("none".to_string(), |d| d.to_string());
        let feats = match r.params.max_features {
            leafwet::tree::MaxFeatures::All => "all".to_string(),
            leafwet::tree::MaxFeatures::Count(k) => k.to_string(),
        };
        let _ = writeln!(s, "{},{depth},{feats},{:e}", r.params.n_samples_per_tree, r.cv_loss);
    }
    s
}

pub fn train(model: ModelArg, cfg: &RunConfig, data: &Path, out: &Path) -> CliResult<()> {
    let ds = load_data(data, "training set")?;
    create_dir(out)?;
    let hash = ds.content_hash();
    match model {
        ModelArg::Dt => {
            let (m, info) = fit_dt_pipeline(&ds, &cfg.dt)?;
            write_file(out.join(MODEL_FILE), m.to_json()?)?;
            let grid = grid_csv(&info);
            write_file(out.join("grid_search.csv"), &grid)?;
            let mut orders = String::from("window,order,val_loss\n");
            for (w, n, l) in &info.order_history {
                let _ = writeln!(orders, "{},{n},{l:e}", w + 1);
            }
            write_file(out.join("order_search.csv"), orders)?;
            let names = cfg.dt.windows.feature_names();
            let mut rfe = String::from("step,n_features,val_loss,removed\n");
            if let Some(t) = &info.rfe {
                for (i, s) in t.steps.iter().enumerate() {
                    let removed = s.removed.map_or(String::new(), |j| names.get(j).cloned().unwrap_or_default());
                    let kept = s.mask.iter().filter(|&&b| b).count();
                    let _ = writeln!(rfe, "{i},{kept},{:e},{removed}", s.val_loss);
                }
            }
            write_file(out.join("rfe.csv"), rfe)?;
            let best = info.grid.iter().map(|r| r.cv_loss).fold(None, |a: Option<f64>, v| Some(a.map_or(v, |a| a.min(v))));
            let rfe_val = info.rfe.as_ref().and_then(|t| {
                t.steps.iter().filter(|s| s.mask == t.mask).map(|s| s.val_loss).next()
            });
            let metrics = DtMetrics {
                orders: &info.orders,
                selected_features: &info.selected_features,
                best_cv_loss: best,
                rfe_baseline_loss: info.rfe.as_ref().map(|t| t.baseline_loss),
                rfe_val_loss: rfe_val,
            };
            write_file(out.join("metrics.json"), to_json(&metrics)?)?;
            if !info.grid.is_empty() {
                print!("{grid}");
            }
            println!("orders {:?}; {} features kept", info.orders, info.selected_features.len());
        }
        ModelArg::Cnn => {
            let (m, history) = fit_cnn_pipeline(&ds, &cfg.cnn)?;
            save_model(&m, out, &hash)?;
            write_file(out.join(HISTORY_FILE), history_csv(&history))?;
            let best = history
                .iter()
                .filter(|h| h.val_loss.is_finite())
                .min_by(|a, b| a.val_loss.total_cmp(&b.val_loss));
            let metrics = CnnMetrics {
                epochs: history.len(),
                best_epoch: best.map(|h| h.epoch),
                best_val_loss: best.map(|h| h.val_loss),
            };
            write_file(out.join("metrics.json"), to_json(&metrics)?)?;
            match metrics.best_val_loss {
                Some(v) => println!("{} epochs; best validation MSE {v:.4}", history.len()),
                None => println!("{} epochs; no validation rows", history.len()),
            }
        }
    }
    write_provenance(out, "train", cfg, BTreeMap::from([("train".into(), hash)]))
}

pub enum LoadedModel {
    Dt(DtModel),
    Cnn(CnnModel, CnnHeader),
}

impl LoadedModel {
    fn name(&self) -> &'static str {
        match self {
            LoadedModel::Dt(_) => "dt",
            LoadedModel::Cnn(..) => "cnn",
        }
    }

    fn train_hash(&self) -> &str {
        match self {
            LoadedModel::Dt(m) => &m.ensemble.data_hash,
            LoadedModel::Cnn(_, h) => &h.provenance,
        }
    }

    fn predict(&self, ds: &Dataset) -> CliResult<Vec<f64>> {
        Ok(match self {
            LoadedModel::Dt(m) => m.predict_dataset(ds)?,
            LoadedModel::Cnn(m, _) => m.predict_dataset(ds)?,
        })
    }
}

pub fn load_any_model(dir: &Path) -> CliResult<LoadedModel> {
    let path = dir.join(MODEL_FILE);
    debug_assert_eq!(MODEL_FILE, HEADER_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    let v: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if v.get("ensemble").is_some() {
        Ok(LoadedModel::Dt(DtModel::from_json(&text)?))
    } else if v.get("arch").is_some() {
        let (m, h) = load_model(dir)?;
        Ok(LoadedModel::Cnn(m, h))
    } else {
        Err(CliError::Config(format!("{} is neither a tree nor a CNN model", path.display())))
    }
}

pub fn eval(cfg: &RunConfig, model_dir: &Path, data: &Path, out: &Path) -> CliResult<()> {
    let model = load_any_model(model_dir)?;
    let ds = load_data(data, "test set")?;
    let g_p = model.predict(&ds)?;
    let mut report = ModelReport::with_train_hash(model.name(), model.train_hash(), &ds, &g_p, &cfg.eval.metric)?;
    report.timing = match &model {
        LoadedModel::Dt(m) => time_inference(ds.len(), &cfg.eval.timing, |i| {
            m.predict_dataset(&ds.subset(&[i])).map(|v| v[0])
        })?,
        LoadedModel::Cnn(m, _) => time_inference(ds.len(), &cfg.eval.timing, |i| {
            let r = &ds.records()[i];
            m.predict(&r.trace, r.a)
        })?,
    };
    create_dir(out)?;
    write_file(out.join(REPORT_JSON), to_json(&report)?)?;
    write_file(out.join(REPORT_CSV), report.to_csv())?;
    write_provenance(
        out,
        "eval",
        cfg,
        BTreeMap::from([("test".into(), report.test_hash.clone()), ("train".into(), report.train_hash.clone())]),
    )?;
    if report.leak {
        eprintln!("warning: the test set is identical to the model's training set");
    }
    println!(
        "{}: {} records, MAE {:.3} mg, median rel. diff {:.2}%{}",
        report.model,
        report.n_test,
        report.mae,
        100.0 * report.median_pct_diff,
        report.timing.map_or(String::new(), |t| format!(", {:.2} ± {:.2} ms per trace", t.mean_ms, t.sd_ms))
    );
    Ok(())
}

pub fn scenario(cfg: &RunConfig, id: ScenarioId, top: &Path, bottom: Option<&Path>, out: &Path) -> CliResult<()> {
    if matches!(id, ScenarioId::CaseII | ScenarioId::CaseIII) && bottom.is_none() {
        return Err(CliError::Usage(format!(
            "scenario {} needs a BottomSide dataset: pass --bottom <DIR>",
            id.label()
        )));
    }
    let top_ds = load_data(top, "TopSide set")?;
    let bottom_ds = bottom.map(|p| load_data(p, "BottomSide set")).transpose()?;
    let report = run_scenario(id, &top_ds, bottom_ds.as_ref(), &cfg.scenario())?;
    create_dir(out)?;
    write_file(out.join(REPORT_JSON), report.to_json()?)?;
    write_file(out.join(REPORT_CSV), report.to_csv())?;
    let mut hashes = BTreeMap::from([("top".to_string(), top_ds.content_hash())]);
    if let Some(b) = &bottom_ds {
        hashes.insert("bottom".into(), b.content_hash());
    }
    write_provenance(out, "scenario", cfg, hashes)?;
    print!("{}", report.summary());
    Ok(())
}

pub struct InspectArgs<'a> {
    pub model: &'a Path,
    pub data: &'a Path,
    pub records: &'a [usize],
    pub reference: Option<usize>,
    pub xi: bool,
    pub sigma: bool,
    pub svg: bool,
    pub out: &'a Path,
}

/// Dry acquisition of the record's series: the lowest `acq_index`.
fn dry_reference(ds: &Dataset, i: usize) -> usize {
    let s = ds.records()[i].series_id;
    (0..ds.len())
        .filter(|&j| ds.records()[j].series_id == s)
        .min_by_key(|&j| ds.records()[j].acq_index)
        .unwrap_or(i)
}

pub fn inspect(cfg: &RunConfig, args: &InspectArgs<'_>) -> CliResult<()> {
    let model = match load_any_model(args.model)? {
        LoadedModel::Cnn(m, _) => m,
        LoadedModel::Dt(_) => {
            return Err(CliError::Usage("inspect needs a CNN model; tree models have no activations".into()))
        }
    };
    let ds = load_data(args.data, "dataset")?;
    if let Some(&bad) = args.records.iter().chain(args.reference.as_ref()).find(|&&i| i >= ds.len()) {
        return Err(CliError::Usage(format!("record {bad} out of range (dataset has {})", ds.len())));
    }
    create_dir(args.out)?;
    let times = ds.time_base().times();
    let shapes = model.arch.shape_chain();
    for &i in args.records {
        let r = &ds.records()[i];
        let acts = model.layer_activations(&r.trace, r.a)?;
        let mut csv = String::from("block,position,activation\n");
        for (b, a) in acts.iter().enumerate() {
            for (p, v) in a.iter().enumerate() {
                let _ = writeln!(csv, "{},{p},{v:e}", b + 1);
            }
        }
        write_file(args.out.join(format!("activations_{i}.csv")), csv)?;
        if args.svg {
            let xs: Vec<Vec<f64>> = acts.iter().map(|a| (0..a.len()).map(|p| p as f64).collect()).collect();
            let series: Vec<Series<'_>> = acts
                .iter()
                .zip(&xs)
                .enumerate()
                .map(|(b, (a, x))| Series { label: format!("block {} ({} positions)", b + 1, shapes[b]), x, y: a })
                .collect();
            let title = format!("record {i}: g_b = {:.2} mg, series {}", r.g_b, r.series_id);
            write_file(args.out.join(format!("activations_{i}.svg")), line_panels(&title, &series))?;
        }
        if args.xi {
            let j = args.reference.unwrap_or_else(|| dry_reference(&ds, i));
            let xi = xi_statistic(&r.trace, &ds.records()[j].trace)?;
            let mut csv = format!("# reference record {j}\nt_ps,xi\n");
            for (t, v) in times.iter().zip(&xi) {
                let _ = writeln!(csv, "{t:e},{v:e}");
            }
            write_file(args.out.join(format!("xi_{i}.csv")), csv)?;
            if args.svg {
                let s = [Series { label: format!("xi vs record {j}"), x: &times, y: &xi }];
                write_file(args.out.join(format!("xi_{i}.svg")), line_panels(&format!("record {i}"), &s))?;
            }
        }
    }
    if args.sigma {
        let sd = std_trace(&ds)?;
        let mut csv = String::from("t_ps,sigma\n");
        for (t, v) in times.iter().zip(&sd) {
            let _ = writeln!(csv, "{t:e},{v:e}");
        }
        write_file(args.out.join("sigma.csv"), csv)?;
        if args.svg {
            let s = [Series { label: "sigma(t)".into(), x: &times, y: &sd }];
            write_file(args.out.join("sigma.svg"), line_panels("ensemble standard deviation", &s))?;
        }
    }
    write_provenance(args.out, "inspect", cfg, BTreeMap::from([("data".into(), ds.content_hash())]))?;
    println!("wrote {} record(s) to {}", args.records.len(), args.out.display());
    Ok(())
}
