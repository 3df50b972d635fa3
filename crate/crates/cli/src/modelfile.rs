//! Model persistence: a versioned JSON document plus a companion CSV holding
//! the projection matrix. Saving then loading yields a model whose transform
//! output is bit-identical, because every float is written in shortest
//! round-trip form.

use std::path::{Path, PathBuf};

use ispca_core::{
    ComponentKind, ComponentMeta, FitConfig, Method, ProjectionModel, StandardizationParams,
    TargetKind, Variant,
};
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::io::{fmt_f64, write_matrix_csv};
use crate::{CliError, Result};

pub const MODEL_FORMAT: &str = "ispca-model/1";

#[derive(Serialize, Deserialize)]
struct ConfigJson {
    alpha: f64,
    n_permutations: usize,
    grid_size: usize,
    window: usize,
    k_total: usize,
    variant: String,
    seed: u64,
    screening_level: f64,
}

#[derive(Serialize, Deserialize)]
struct StandardizationJson {
    means: Vec<f64>,
    sds: Vec<f64>,
    constant: Vec<bool>,
}

#[derive(Serialize, Deserialize)]
struct ComponentJson {
    kind: String,
    gamma: Option<f64>,
    pvalue: Option<f64>,
    score: f64,
    source_class: Option<usize>,
    degenerate: bool,
}

#[derive(Serialize, Deserialize)]
struct ModelJson {
    format: String,
    method: String,
    config: ConfigJson,
    n_features: usize,
    k_fitted: usize,
    target_kind: String,
    n_classes: Option<usize>,
    standardization: StandardizationJson,
    z_scales: Vec<f64>,
    components: Vec<ComponentJson>,
    label_map: Option<Vec<String>>,
    warnings: Vec<String>,
    w_file: String,
}

/// One-line `#` comment carrying the format version, method and fit
/// configuration; embedded in every CSV the tool writes.
pub fn provenance(method: Method, config: &FitConfig) -> String {
    format!(
        "# {MODEL_FORMAT} method={} seed={} k-total={} alpha={} n-perms={} grid-size={} window={} screening-p={} variant={}",
        method,
        config.seed,
        config.k_total,
        fmt_f64(config.alpha),
        config.n_permutations,
        config.grid_size,
        config.window,
        fmt_f64(config.screening_level),
        config.variant.as_str(),
    )
}

/// Writes `<stem>.json` and `<stem>_w.csv` under `dir`.
pub fn save_model(dir: &Path, stem: &str, model: &ProjectionModel) -> Result<PathBuf> {
    let w_file = format!("{stem}_w.csv");
    let headers: Vec<String> = (1..=model.k_fitted()).map(|k| format!("c{k}")).collect();
    write_matrix_csv(
        &dir.join(&w_file),
        &headers,
        &model.w.view(),
        Some(&provenance(model.method, &model.config)),
    )?;

    let (target_kind, n_classes) = match model.target_kind {
        TargetKind::Regression => ("regression", None),
        TargetKind::Binary => ("binary", Some(2)),
        TargetKind::Multiclass(c) => ("multiclass", Some(c)),
    };
    let json = ModelJson {
        format: MODEL_FORMAT.to_string(),
        method: model.method.to_string(),
        config: ConfigJson {
            alpha: model.config.alpha,
            n_permutations: model.config.n_permutations,
            grid_size: model.config.grid_size,
            window: model.config.window,
            k_total: model.config.k_total,
            variant: model.config.variant.as_str().to_string(),
            seed: model.config.seed,
            screening_level: model.config.screening_level,
        },
        n_features: model.n_features(),
        k_fitted: model.k_fitted(),
        target_kind: target_kind.to_string(),
        n_classes,
        standardization: StandardizationJson {
            means: model.standardization.means.to_vec(),
            sds: model.standardization.sds.to_vec(),
            constant: model.standardization.constant.clone(),
        },
        z_scales: model.z_scales.to_vec(),
        components: model
            .components
            .iter()
            .map(|c| ComponentJson {
                kind: c.kind.as_str().to_string(),
                gamma: c.gamma,
                pvalue: c.pvalue,
                score: c.score,
                source_class: c.source_class,
                degenerate: c.degenerate,
            })
            .collect(),
        label_map: model.label_map.clone(),
        warnings: model.warnings.clone(),
        w_file,
    };
    let path = dir.join(format!("{stem}.json"));
    let mut text = serde_json::to_string_pretty(&json)
        .map_err(|e| CliError::Data(format!("serializing model: {e}")))?;
    text.push('\n');
    std::fs::write(&path, text)?;
    Ok(path)
}

fn parse_variant(s: &str) -> Result<Variant> {
    match s {
        "naive" => Ok(Variant::Naive),
        "small" => Ok(Variant::Small),
        "full" => Ok(Variant::Full),
        other => Err(CliError::Data(format!("unknown variant '{other}' in model file"))),
    }
}

fn parse_kind(s: &str) -> Result<ComponentKind> {
    match s {
        "supervised" => Ok(ComponentKind::Supervised),
        "unsupervised" => Ok(ComponentKind::Unsupervised),
        other => Err(CliError::Data(format!("unknown component kind '{other}' in model file"))),
    }
}

/// Loads a model saved by [`save_model`]; the projection CSV is resolved
/// relative to the JSON file.
pub fn load_model(json_path: &Path) -> Result<ProjectionModel> {
    let text = std::fs::read_to_string(json_path)?;
    let json: ModelJson = serde_json::from_str(&text)
        .map_err(|e| CliError::Data(format!("{}: {e}", json_path.display())))?;
    if json.format != MODEL_FORMAT {
        return Err(CliError::Data(format!(
            "{}: format '{}' is not supported (expected {MODEL_FORMAT})",
            json_path.display(),
            json.format
        )));
    }
    let method = Method::parse(&json.method)
        .ok_or_else(|| CliError::Data(format!("unknown method '{}' in model file", json.method)))?;
    let dir = json_path.parent().unwrap_or_else(|| Path::new("."));
    let w_path = dir.join(&json.w_file);
    // A gate that stops before the first extraction leaves a model with no
    // components; its projection matrix has zero columns, which CSV cannot
    // represent, so it is reconstructed from the declared shape instead.
    let w: Array2<f64> = if json.k_fitted == 0 {
        Array2::zeros((json.n_features, 0))
    } else {
        let loaded = crate::io::load_csv(
            &w_path,
            &crate::io::LoadOptions { label_col: None, has_header: true, target: Default::default() },
        )?;
        loaded.dataset.features
    };
    if w.nrows() != json.n_features && json.k_fitted > 0 || w.ncols() != json.k_fitted {
        return Err(CliError::Data(format!(
            "{}: projection matrix is {}x{} but the model declares {}x{}",
            w_path.display(),
            w.nrows(),
            w.ncols(),
            json.n_features,
            json.k_fitted
        )));
    }

    let target_kind = match (json.target_kind.as_str(), json.n_classes) {
        ("regression", _) => TargetKind::Regression,
        ("binary", _) => TargetKind::Binary,
        ("multiclass", Some(c)) => TargetKind::Multiclass(c),
        (other, _) => {
            return Err(CliError::Data(format!("unknown target kind '{other}' in model file")))
        }
    };
    let mut components = Vec::with_capacity(json.components.len());
    for c in &json.components {
        components.push(ComponentMeta {
            kind: parse_kind(&c.kind)?,
            gamma: c.gamma,
            pvalue: c.pvalue,
            score: c.score,
            source_class: c.source_class,
            degenerate: c.degenerate,
        });
    }
    Ok(ProjectionModel {
        w,
        components,
        standardization: StandardizationParams {
            means: Array1::from_vec(json.standardization.means),
            sds: Array1::from_vec(json.standardization.sds),
            constant: json.standardization.constant,
        },
        z_scales: Array1::from_vec(json.z_scales),
        method,
        config: FitConfig {
            alpha: json.config.alpha,
            n_permutations: json.config.n_permutations,
            grid_size: json.config.grid_size,
            window: json.config.window,
            k_total: json.config.k_total,
            variant: parse_variant(&json.config.variant)?,
            seed: json.config.seed,
            screening_level: json.config.screening_level,
        },
        target_kind,
        label_map: json.label_map,
        warnings: json.warnings,
    })
}
