//! Subcommand implementations. Every output file embeds the format version,
//! method and seed, and identical inputs with identical flags produce
//! byte-identical files.

use std::path::Path;

use ispca_core::eval::{run_protocol, EvalReport, SplitPlan};
use ispca_core::{Dataset, FitConfig, Method, ProjectionModel, TargetKind};
use serde::Serialize;

use crate::io::{fmt_f64, load_csv, write_matrix_csv, LoadOptions};
use crate::modelfile::{load_model, provenance, save_model, MODEL_FORMAT};
use crate::{CliError, Result};

/// Fit-time knobs shared by `fit` and `eval`.
#[derive(Debug, Clone)]
pub struct FitParams {
    pub method: Method,
    pub k_total: Option<usize>,
    pub alpha: f64,
    pub n_perms: usize,
    pub grid_size: usize,
    pub window: usize,
    pub screening_p: f64,
    pub seed: u64,
}

impl FitParams {
    fn config_for(&self, data: &Dataset) -> Result<FitConfig> {
        let k_total = self.k_total.unwrap_or_else(|| FitConfig::default_k_total(&data.target));
        let mut config = FitConfig::new(k_total).with_seed(self.seed);
        config.alpha = self.alpha;
        config.n_permutations = self.n_perms;
        config.grid_size = self.grid_size;
        config.window = self.window;
        config.screening_level = self.screening_p;
        if let Some(v) = self.method.variant() {
            config.variant = v;
        }
        config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(config)
    }
}

fn target_description(model: &ProjectionModel) -> String {
    match (&model.target_kind, &model.label_map) {
        (TargetKind::Regression, _) => "regression".to_string(),
        (TargetKind::Binary, Some(names)) => format!("binary (classes: {})", names.join(", ")),
        (TargetKind::Binary, None) => "binary".to_string(),
        (TargetKind::Multiclass(c), Some(names)) => {
            format!("multiclass ({c} classes: {})", names.join(", "))
        }
        (TargetKind::Multiclass(c), None) => format!("multiclass ({c} classes)"),
    }
}

fn summary_text(model: &ProjectionModel, n_rows: usize) -> String {
    let mut s = String::new();
    s.push_str(&format!("{MODEL_FORMAT}\n"));
    s.push_str(&format!("method: {}\n", model.method));
    s.push_str(&format!("seed: {}\n", model.config.seed));
    s.push_str(&format!("rows: {n_rows}\n"));
    s.push_str(&format!("features: {}\n", model.n_features()));
    s.push_str(&format!("target: {}\n", target_description(model)));
    s.push_str(&format!("components requested: {}\n", model.config.k_total));
    s.push_str(&format!("components fitted: {}\n", model.k_fitted()));
    s.push_str(&format!("supervised components: {}\n", model.n_supervised()));
    s.push_str("components:\n");
    for (i, c) in model.components.iter().enumerate() {
        let mut line = format!("  {:>3} {}", i + 1, c.kind.as_str());
        if let Some(g) = c.gamma {
            line.push_str(&format!(" gamma={}", fmt_f64(g)));
        }
        if let Some(p) = c.pvalue {
            line.push_str(&format!(" pvalue={}", fmt_f64(p)));
        }
        line.push_str(&format!(" score={}", fmt_f64(c.score)));
        if let Some(cl) = c.source_class {
            let name = model
                .label_map
                .as_ref()
                .and_then(|m| m.get(cl - 1))
                .cloned()
                .unwrap_or_else(|| cl.to_string());
            line.push_str(&format!(" class={name}"));
        }
        if c.degenerate {
            line.push_str(" degenerate");
        }
        s.push_str(&line);
        s.push('\n');
    }
    if model.warnings.is_empty() {
        s.push_str("warnings: none\n");
    } else {
        s.push_str(&format!("warnings: {}\n", model.warnings.join("; ")));
    }
    s
}

fn write_z_csv(path: &Path, model: &ProjectionModel, z: &ndarray::Array2<f64>) -> Result<()> {
    let headers: Vec<String> = (1..=z.ncols()).map(|k| format!("z{k}")).collect();
    write_matrix_csv(path, &headers, &z.view(), Some(&provenance(model.method, &model.config)))
}

pub fn cmd_fit(
    data_path: &Path,
    load: &LoadOptions,
    params: &FitParams,
    out_dir: &Path,
) -> Result<()> {
    if load.label_col.is_none() {
        return Err(CliError::Usage("fit requires --label-col".into()));
    }
    let loaded = load_csv(data_path, load)?;
    let config = params.config_for(&loaded.dataset)?;
    let fitted = ispca_core::fit(params.method, &loaded.dataset, &config)?;
    std::fs::create_dir_all(out_dir)?;
    save_model(out_dir, "model", &fitted.model)?;
    let z = fitted.model.transform(&loaded.dataset.features.view())?;
    write_z_csv(&out_dir.join("Z.csv"), &fitted.model, &z)?;
    let summary = summary_text(&fitted.model, loaded.dataset.n_rows());
    std::fs::write(out_dir.join("summary.txt"), &summary)?;
    print!("{summary}");
    println!("wrote: {}", out_dir.join("model.json").display());
    Ok(())
}

pub fn cmd_transform(
    model_path: &Path,
    data_path: &Path,
    load: &LoadOptions,
    out_path: &Path,
) -> Result<()> {
    let model = load_model(model_path)?;
    let loaded = load_csv(data_path, load)?;
    if loaded.dataset.n_features() != model.n_features() {
        return Err(CliError::Data(format!(
            "{} has {} feature columns but the model expects {}",
            data_path.display(),
            loaded.dataset.n_features(),
            model.n_features()
        )));
    }
    let z = model.transform(&loaded.dataset.features.view())?;
    if let Some(dir) = out_path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    write_z_csv(out_path, &model, &z)?;
    println!("wrote: {}", out_path.display());
    Ok(())
}

#[derive(Serialize)]
struct SummaryJson {
    method: String,
    n_ok: usize,
    n_failed: usize,
    mean_mlpd: f64,
    mlpd_low: f64,
    mlpd_high: f64,
    mean_accuracy: f64,
    accuracy_low: f64,
    accuracy_high: f64,
}

#[derive(Serialize)]
struct FailureJson {
    method: String,
    split: usize,
    message: String,
}

#[derive(Serialize)]
struct ReportJson {
    format: String,
    methods: Vec<String>,
    n_repeats: usize,
    test_fraction: f64,
    seed: u64,
    k_total: usize,
    alpha: f64,
    n_permutations: usize,
    screening_level: f64,
    summaries: Vec<SummaryJson>,
    failures: Vec<FailureJson>,
}

fn report_json(
    report: &EvalReport,
    methods: &[Method],
    plan: &SplitPlan,
    config: &FitConfig,
) -> ReportJson {
    ReportJson {
        format: "ispca-eval/1".to_string(),
        methods: methods.iter().map(|m| m.to_string()).collect(),
        n_repeats: plan.n_repeats,
        test_fraction: plan.test_fraction,
        seed: config.seed,
        k_total: config.k_total,
        alpha: config.alpha,
        n_permutations: config.n_permutations,
        screening_level: config.screening_level,
        summaries: report
            .summaries
            .iter()
            .map(|s| SummaryJson {
                method: s.method.to_string(),
                n_ok: s.n_ok,
                n_failed: plan.n_repeats - s.n_ok,
                mean_mlpd: s.mean_mlpd,
                mlpd_low: s.mlpd_interval.0,
                mlpd_high: s.mlpd_interval.1,
                mean_accuracy: s.mean_accuracy,
                accuracy_low: s.accuracy_interval.0,
                accuracy_high: s.accuracy_interval.1,
            })
            .collect(),
        failures: report
            .failures
            .iter()
            .map(|f| FailureJson {
                method: f.method.to_string(),
                split: f.split,
                message: f.message.clone(),
            })
            .collect(),
    }
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_eval(
    data_path: &Path,
    load: &LoadOptions,
    params: &FitParams,
    methods: &[Method],
    n_repeats: usize,
    test_fraction: f64,
    out_dir: &Path,
) -> Result<()> {
    if load.label_col.is_none() {
        return Err(CliError::Usage("eval requires --label-col".into()));
    }
    let loaded = load_csv(data_path, load)?;
    let config = params.config_for(&loaded.dataset)?;
    let plan = SplitPlan { n_repeats, test_fraction, seed: params.seed };
    plan.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let report = run_protocol(&loaded.dataset, methods, &plan, &config)?;

    std::fs::create_dir_all(out_dir)?;
    let mut csv_text = format!(
        "# ispca-eval/1 seed={} repeats={} test-fraction={} k-total={}\n",
        params.seed,
        n_repeats,
        fmt_f64(test_fraction),
        config.k_total
    );
    csv_text.push_str(&report.to_csv());
    std::fs::write(out_dir.join("report.csv"), &csv_text)?;

    let json = report_json(&report, methods, &plan, &config);
    let mut text = serde_json::to_string_pretty(&json)
        .map_err(|e| CliError::Data(format!("serializing report: {e}")))?;
    text.push('\n');
    std::fs::write(out_dir.join("report.json"), text)?;

    println!("method        mean MLPD (95% int)           mean acc (95% int)      ok/total");
    for s in &report.summaries {
        println!(
            "{:<13} {:>8.4} [{:>8.4}, {:>8.4}]  {:>6.4} [{:>6.4}, {:>6.4}]  {}/{}",
            s.method.to_string(),
            s.mean_mlpd,
            s.mlpd_interval.0,
            s.mlpd_interval.1,
            s.mean_accuracy,
            s.accuracy_interval.0,
            s.accuracy_interval.1,
            s.n_ok,
            plan.n_repeats
        );
    }
    for f in &report.failures {
        eprintln!("failed: {} split {}: {}", f.method, f.split, f.message);
    }
    println!("wrote: {}", out_dir.join("report.csv").display());
    Ok(())
}

pub fn cmd_plot(
    model_path: &Path,
    data_path: &Path,
    load: &LoadOptions,
    components: (usize, usize),
    out_dir: &Path,
) -> Result<()> {
    if load.label_col.is_none() {
        return Err(CliError::Usage("plot requires --label-col".into()));
    }
    let model = load_model(model_path)?;
    let loaded = load_csv(data_path, load)?;
    let n_classes = loaded
        .dataset
        .target
        .n_classes()
        .ok_or_else(|| CliError::Data("plot requires a classification target".into()))?;
    let (ci, cj) = components;
    if ci == 0 || cj == 0 || ci > model.k_fitted() || cj > model.k_fitted() {
        return Err(CliError::Usage(format!(
            "components must lie in 1..={}, got {ci},{cj}",
            model.k_fitted()
        )));
    }
    let z = model.transform(&loaded.dataset.features.view())?;

    let class_names: Vec<String> = match &loaded.dataset.label_names {
        Some(names) => names.clone(),
        None => (1..=n_classes).map(|c| format!("class {c}")).collect(),
    };
    let mut points = Vec::with_capacity(z.nrows());
    for i in 0..z.nrows() {
        let class = loaded.dataset.target.class_index(i).expect("classification target");
        points.push((z[[i, ci - 1]], z[[i, cj - 1]], class));
    }

    std::fs::create_dir_all(out_dir)?;
    let mut csv_text = provenance(model.method, &model.config);
    csv_text.push('\n');
    csv_text.push_str(&format!("z{ci},z{cj},label\n"));
    for (i, &(x, y, class)) in points.iter().enumerate() {
        let _ = i;
        csv_text.push_str(&format!("{},{},{}\n", fmt_f64(x), fmt_f64(y), class_names[class]));
    }
    std::fs::write(out_dir.join("plot.csv"), &csv_text)?;

    let svg = crate::svg::scatter(&points, &class_names, &format!("z{ci}"), &format!("z{cj}"));
    std::fs::write(out_dir.join("plot.svg"), svg)?;
    println!("wrote: {}", out_dir.join("plot.svg").display());
    Ok(())
}
