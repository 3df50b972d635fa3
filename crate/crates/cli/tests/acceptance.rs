//! Acceptance suite: one test per criterion, named `criterion_NN_*`, so the
//! harness prints a pass/fail line for each. Heavy criteria serialize on a
//! shared lock so their runtime budgets are measured without interference.
//!
//! Run with `cargo test -p ispca-cli --test acceptance` (add
//! `-- --nocapture` for the per-criterion metrics).

use std::process::Command;
use std::sync::Mutex;
use std::time::Instant;

use ispca_core::eval::{gen_blobs, gen_noise, gen_toy1, gen_toy2, run_protocol, SplitPlan};
use ispca_core::logistic::objective_and_gradient;
use ispca_core::{
    ispca_fit, pca_fit, projection_vectors, spca_fit, standardize, ComponentKind, Dataset,
    DeflationRecord, FitConfig, Method, Target, Variant,
};
use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand_distr::Distribution;

static HEAVY: Mutex<()> = Mutex::new(());

fn heavy_guard() -> std::sync::MutexGuard<'static, ()> {
    HEAVY.lock().unwrap_or_else(|e| e.into_inner())
}

fn randn(n: usize, d: usize, seed: u64) -> Array2<f64> {
    let mut r = ispca_core::rng::substream(seed, 0);
    let normal = rand_distr::StandardNormal;
    Array2::from_shape_fn((n, d), |_| normal.sample(&mut r))
}

/// Binary dataset with a handful of class-loaded columns.
fn planted_binary(n: usize, d: usize, n_signal: usize, strength: f64, seed: u64) -> Dataset {
    let mut x = randn(n, d, seed);
    let labels: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
    for j in 0..n_signal {
        let a = strength * (1.0 - 0.5 * j as f64 / n_signal.max(1) as f64);
        for i in 0..n {
            x[[i, j * (d / n_signal.max(1))]] += if labels[i] == 1 { a } else { -a };
        }
    }
    Dataset::new(x, Target::Binary(labels)).unwrap()
}

fn max_offdiag_gram(z: &ArrayView2<f64>) -> f64 {
    let gram = z.t().dot(z);
    let k = gram.nrows();
    let mut worst = 0.0f64;
    for i in 0..k {
        for j in 0..k {
            if i != j {
                let scale = (gram[[i, i]] * gram[[j, j]]).sqrt().max(1e-300);
                worst = worst.max(gram[[i, j]].abs() / scale);
            }
        }
    }
    worst
}

fn dense_projection_oracle(
    vs: &[Array1<f64>],
    records: &[DeflationRecord],
) -> Vec<Array1<f64>> {
    let d = vs[0].len();
    let eye: Array2<f64> = Array2::eye(d);
    let mut out = Vec::with_capacity(vs.len());
    for (k, v) in vs.iter().enumerate() {
        let mut product = eye.clone();
        for t in 0..k {
            let mut a_t = eye.clone();
            for i in 0..d {
                for j in 0..d {
                    a_t[[i, j]] -= vs[t][i] * records[t].coefficients[j];
                }
            }
            product = product.dot(&a_t);
        }
        out.push(product.dot(v));
    }
    out
}

/// The 20-dataset suite shared by criteria 1 and 2: half pure noise, half
/// planted signal, all n = 50, D = 200, binary.
fn orthogonality_suite() -> Vec<Dataset> {
    let mut suite = Vec::new();
    for seed in 0..10u64 {
        suite.push(gen_noise(50, 200, 1000 + seed));
    }
    for seed in 0..10u64 {
        suite.push(planted_binary(50, 200, 5, 1.2, 2000 + seed));
    }
    suite
}

#[test]
fn criterion_01_orthogonality_suite() {
    let _guard = heavy_guard();
    let start = Instant::now();
    let mut worst = 0.0f64;
    for (i, data) in orthogonality_suite().iter().enumerate() {
        let config = FitConfig::new(FitConfig::default_k_total(&data.target)).with_seed(i as u64);
        let fitted = ispca_fit(data, &config).unwrap();
        assert!(fitted.model.k_fitted() >= 40, "dataset {i}: too few components");
        let off = max_offdiag_gram(&fitted.z_train.view());
        worst = worst.max(off);
        assert!(off < 1e-8, "dataset {i}: max relative off-diagonal {off}");
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "orthogonality suite took {elapsed:?}");
    println!("criterion 1 PASS: 20 fits, worst off-diagonal {worst:.3e}, {elapsed:.2?}");
}

#[test]
fn criterion_02_decomposition_equivalence() {
    // same suite as criterion 1: z_k == X_std w_k columnwise
    let mut worst_rel = 0.0f64;
    for (i, data) in orthogonality_suite().iter().enumerate() {
        let config = FitConfig::new(FitConfig::default_k_total(&data.target)).with_seed(i as u64);
        let fitted = ispca_fit(data, &config).unwrap();
        let (x_std, _) = standardize(&data.features.view()).unwrap();
        for k in 0..fitted.components.len() {
            let via_w = x_std.dot(&fitted.components[k].w);
            let z_k = fitted.z_train.column(k);
            let diff = &via_w - &z_k;
            let rel = diff.dot(&diff).sqrt() / z_k.dot(&z_k).sqrt().max(1e-300);
            worst_rel = worst_rel.max(rel);
            assert!(rel < 1e-8, "dataset {i} component {k}: relative error {rel}");
        }
    }
    // dense-product oracle at small D
    let mut worst_abs = 0.0f64;
    for seed in 0..5u64 {
        let data = planted_binary(18, 16, 3, 1.3, 3000 + seed);
        let mut config = FitConfig::new(6).with_seed(seed).with_variant(Variant::Naive);
        config.n_permutations = 50;
        let fitted = ispca_fit(&data, &config).unwrap();
        let vs: Vec<Array1<f64>> = fitted.components.iter().map(|c| c.v.clone()).collect();
        let rec = projection_vectors(&vs, &fitted.deflations);
        let oracle = dense_projection_oracle(&vs, &fitted.deflations);
        for k in 0..vs.len() {
            let d1 = (&rec[k] - &oracle[k]).mapv(f64::abs).iter().copied().fold(0.0f64, f64::max);
            let d2 = (&fitted.components[k].w - &oracle[k])
                .mapv(f64::abs)
                .iter()
                .copied()
                .fold(0.0f64, f64::max);
            worst_abs = worst_abs.max(d1).max(d2);
            assert!(d1 < 1e-10 && d2 < 1e-10, "seed {seed} component {k}: {d1} / {d2}");
        }
    }
    println!(
        "criterion 2 PASS: worst relative z-deviation {worst_rel:.3e}, worst dense-oracle deviation {worst_abs:.3e}"
    );
}

#[test]
fn criterion_03_toy1_single_supervised_component() {
    let _guard = heavy_guard();
    let mut hits = 0;
    for seed in 0..100u64 {
        let data = gen_toy1(seed);
        let fitted = ispca_fit(&data, &FitConfig::new(2).with_seed(seed)).unwrap();
        if fitted.model.n_supervised() != 1 {
            continue;
        }
        let w1 = &fitted.components[0].w;
        let dist_pos = ((w1[0] - 0.0).powi(2) + (w1[1] - 1.0).powi(2)).sqrt();
        let dist_neg = ((w1[0] - 0.0).powi(2) + (w1[1] + 1.0).powi(2)).sqrt();
        if dist_pos.min(dist_neg) < 1e-6 {
            hits += 1;
        }
    }
    assert!(hits >= 95, "only {hits}/100 runs produced K = 1 with w1 = (0, +-1)");
    println!("criterion 3 PASS: {hits}/100 toy-1 regenerations");
}

#[test]
fn criterion_04_toy2_two_supervised_components() {
    let _guard = heavy_guard();
    let mut hits = 0;
    for seed in 0..100u64 {
        let data = gen_toy2(seed);
        let fitted = ispca_fit(&data, &FitConfig::new(2).with_seed(seed)).unwrap();
        if fitted.model.n_supervised() != 2 {
            continue;
        }
        let w1 = &fitted.components[0].w;
        let dist_pos = ((w1[0] - 0.0).powi(2) + (w1[1] - 1.0).powi(2)).sqrt();
        let dist_neg = ((w1[0] - 0.0).powi(2) + (w1[1] + 1.0).powi(2)).sqrt();
        if dist_pos.min(dist_neg) >= 1e-6 {
            continue;
        }
        let w2 = &fitted.components[1].w;
        if w2[0] * w2[1] >= 0.0 || w2[1] == 0.0 {
            continue;
        }
        let ratio = (w2[0] / w2[1]).abs();
        if (1.0..=3.0).contains(&ratio) {
            hits += 1;
        }
    }
    assert!(hits >= 90, "only {hits}/100 runs matched the toy-2 geometry");
    println!("criterion 4 PASS: {hits}/100 toy-2 regenerations");
}

#[test]
fn criterion_05_null_calibration() {
    let _guard = heavy_guard();
    let start = Instant::now();
    let mut false_discoveries = 0;
    for seed in 0..200u64 {
        let data = gen_noise(30, 100, 5000 + seed);
        let fitted = ispca_fit(&data, &FitConfig::new(5).with_seed(seed)).unwrap();
        if fitted.model.n_supervised() >= 1 {
            false_discoveries += 1;
        }
    }
    let elapsed = start.elapsed();
    let fraction = false_discoveries as f64 / 200.0;
    assert!(fraction <= 0.05, "false-discovery fraction {fraction} over 200 runs");
    assert!(elapsed.as_secs_f64() < 300.0, "null calibration took {elapsed:?}");
    // a gate that never fires leaves plain PCA of X
    let data = gen_noise(30, 100, 5000);
    let fitted = ispca_fit(&data, &FitConfig::new(5).with_seed(0)).unwrap();
    if fitted.model.n_supervised() == 0 {
        let pca = pca_fit(&data, &FitConfig::new(5).with_seed(0)).unwrap();
        let diff = (&fitted.model.w - &pca.model.w)
            .mapv(f64::abs)
            .iter()
            .copied()
            .fold(0.0f64, f64::max);
        assert!(diff < 1e-12, "K = 0 model should equal plain PCA, max |dW| = {diff}");
    }
    println!(
        "criterion 5 PASS: {false_discoveries}/200 null runs with K >= 1 ({fraction:.3}), {elapsed:.2?}"
    );
}

#[test]
fn criterion_06_spca_degenerates_to_pca() {
    // every feature carries some class loading, so no p-value can reach 1
    // and a screening level just under 1 keeps the full feature set
    let data = planted_binary(30, 20, 20, 0.8, 77);
    let mut config = FitConfig::new(6).with_seed(4);
    config.n_permutations = 400;
    config.screening_level = 1.0 - 1e-12;
    let s = spca_fit(&data, &config).unwrap();
    assert!(s.model.warnings.is_empty(), "unexpected warnings: {:?}", s.model.warnings);
    let (x_std, _) = standardize(&data.features.view()).unwrap();
    let screening = ispca_core::screen(
        &x_std.view(),
        &data.target,
        config.screening_level,
        config.n_permutations,
        ispca_core::rng::derive_seed(config.seed, ispca_core::rng::DOMAIN_SCREEN, 0),
    )
    .unwrap();
    assert_eq!(screening.kept.len(), data.n_features(), "screening dropped features");
    let p = pca_fit(&data, &config).unwrap();
    let mut worst = 0.0f64;
    for k in 0..s.model.k_fitted().min(p.model.k_fitted()) {
        let ws = s.model.w.column(k);
        let wp = p.model.w.column(k);
        let direct = (&ws - &wp).mapv(f64::abs).iter().copied().fold(0.0f64, f64::max);
        let flipped = (&ws + &wp).mapv(f64::abs).iter().copied().fold(0.0f64, f64::max);
        worst = worst.max(direct.min(flipped));
    }
    assert!(worst < 1e-8, "SPCA(keep-all) vs PCA columnwise max |dW| = {worst}");
    println!("criterion 6 PASS: keep-all SPCA equals PCA up to sign, max |dW| = {worst:.3e}");
}

#[test]
fn criterion_07_back_transform_consistency() {
    let data = planted_binary(60, 40, 4, 1.2, 11);
    let train_rows: Vec<usize> = (0..40).collect();
    let test_rows: Vec<usize> = (40..60).collect();
    let train = data.select_rows(&train_rows);
    let heldout = data.features.select(Axis(0), &test_rows);
    let mut config = FitConfig::new(6).with_seed(2);
    config.n_permutations = 300;
    let fitted = ispca_fit(&train, &config).unwrap();
    let k = fitted.model.k_fitted();

    let z_train = fitted.model.transform(&train.features.view()).unwrap();
    let z_test = fitted.model.transform(&heldout.view()).unwrap();
    let x_std_train =
        ispca_core::apply_standardization(&train.features.view(), &fitted.model.standardization)
            .unwrap();
    let x_std_test =
        ispca_core::apply_standardization(&heldout.view(), &fitted.model.standardization).unwrap();

    // the fitted classifier's coefficients plus random coefficient vectors
    let clf = ispca_core::logistic::fit_logistic(&z_train.view(), &train.target, 1.0).unwrap();
    let mut betas: Vec<Array1<f64>> = vec![clf.coefficients.row(0).to_owned()];
    let mut r = ispca_core::rng::substream(9, 0);
    let normal = rand_distr::StandardNormal;
    for _ in 0..5 {
        betas.push((0..k).map(|_| normal.sample(&mut r)).collect());
    }
    let mut worst = 0.0f64;
    for beta_z in &betas {
        let beta = fitted.model.back_transform_coefficients(&beta_z.view()).unwrap();
        for (x_std, z) in [(&x_std_train, &z_train), (&x_std_test, &z_test)] {
            let lhs = x_std.dot(&beta);
            let rhs = z.dot(beta_z);
            let diff = (&lhs - &rhs).mapv(f64::abs).iter().copied().fold(0.0f64, f64::max);
            worst = worst.max(diff);
            assert!(diff < 1e-8, "rowwise |X_std b - Z b_z| = {diff}");
        }
    }
    println!("criterion 7 PASS: worst rowwise deviation {worst:.3e} across {} coefficient vectors", betas.len());
}

#[test]
fn criterion_08_naive_overfits_where_gate_stops() {
    let _guard = heavy_guard();
    let mut joint_hits = 0;
    for seed in 0..200u64 {
        let data = gen_noise(30, 100, 5000 + seed);
        let naive_cfg = FitConfig::new(10).with_seed(seed).with_variant(Variant::Naive);
        let naive = ispca_fit(&data, &naive_cfg).unwrap();
        let overfit = naive.components.first().map(|c| c.score > 0.4).unwrap_or(false);
        let gated_cfg = FitConfig::new(10).with_seed(seed).with_variant(Variant::Small);
        let gated = ispca_fit(&data, &gated_cfg).unwrap();
        let stopped = gated.model.n_supervised() == 0;
        if overfit && stopped {
            joint_hits += 1;
        }
    }
    assert!(
        joint_hits >= 160,
        "only {joint_hits}/200 runs show the naive-overfit/gated-stop contrast"
    );
    println!("criterion 8 PASS: {joint_hits}/200 runs with naive S(z1, y) > 0.4 and gated K = 0");
}

#[test]
fn criterion_09_multiclass_blobs() {
    let _guard = heavy_guard();
    let data = gen_blobs(120, 500, 4, 10, 2.5, 31).unwrap();
    let config = FitConfig::new(6).with_seed(13);
    let plan = SplitPlan { n_repeats: 20, test_fraction: 0.2, seed: 13 };
    let report = run_protocol(&data, &[Method::Ispca], &plan, &config).unwrap();
    assert!(report.failures.is_empty(), "{:?}", report.failures);
    let summary = &report.summaries[0];
    assert!(
        summary.mean_accuracy >= 0.90,
        "mean test accuracy {} over 20 splits",
        summary.mean_accuracy
    );
    // a full-data fit must name a source class on every supervised component
    let fitted = ispca_fit(&data, &config).unwrap();
    let supervised: Vec<_> = fitted
        .model
        .components
        .iter()
        .filter(|c| c.kind == ComponentKind::Supervised)
        .collect();
    assert!(!supervised.is_empty());
    for c in &supervised {
        assert!(c.source_class.is_some(), "supervised component without a source class");
    }
    println!(
        "criterion 9 PASS: mean accuracy {:.4} over 20 splits, {} supervised components with source classes",
        summary.mean_accuracy,
        supervised.len()
    );
}

#[test]
fn criterion_10_throughput_budget() {
    let _guard = heavy_guard();
    let data = planted_binary(100, 5000, 10, 1.0, 99);
    let config = FitConfig::new(10).with_seed(1);
    let start = Instant::now();
    let fitted = ispca_fit(&data, &config).unwrap();
    let elapsed = start.elapsed();
    assert_eq!(fitted.model.k_fitted(), 10);
    assert!(
        elapsed.as_secs_f64() < 60.0,
        "n=100, D=5000, R=1000, K_tot=10 fit took {elapsed:?}"
    );
    println!(
        "criterion 10 PASS: fit in {elapsed:.2?} ({} supervised)",
        fitted.model.n_supervised()
    );
}

#[test]
fn criterion_11_logistic_gradient_check() {
    let mut r = ispca_core::rng::substream(17, 0);
    let normal = rand_distr::StandardNormal;
    let mut worst = 0.0f64;
    for instance in 0..5u64 {
        let n = 8 + instance as usize;
        let k = 2 + (instance as usize % 3);
        let z = randn(n, k, 400 + instance);
        let target = if instance % 2 == 0 {
            Target::Binary((0..n).map(|i| (i % 2) as u8).collect())
        } else {
            Target::Multiclass { labels: (0..n).map(|i| i % 3 + 1).collect(), n_classes: 3 }
        };
        let c = target.n_classes().unwrap();
        let dim = (c - 1) * (k + 1);
        let theta: Array1<f64> = (0..dim).map(|_| {
            let v: f64 = normal.sample(&mut r);
            0.5 * v
        }).collect();
        let l2 = 0.3 + 0.2 * instance as f64;
        let (_, grad) = objective_and_gradient(&theta.view(), &z.view(), &target, l2).unwrap();
        let h = 1e-6;
        for p in 0..dim {
            let mut tp = theta.clone();
            tp[p] += h;
            let (fp, _) = objective_and_gradient(&tp.view(), &z.view(), &target, l2).unwrap();
            tp[p] -= 2.0 * h;
            let (fm, _) = objective_and_gradient(&tp.view(), &z.view(), &target, l2).unwrap();
            let fd = (fp - fm) / (2.0 * h);
            let rel = (grad[p] - fd).abs() / grad[p].abs().max(1.0);
            worst = worst.max(rel);
            assert!(rel <= 1e-6, "instance {instance} param {p}: relative error {rel}");
        }
    }
    println!("criterion 11 PASS: worst relative gradient error {worst:.3e} over 5 instances");
}

#[test]
fn criterion_12_cmd_fit_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let data = gen_toy2(6);
    let mut csv = String::from("x1,x2,label\n");
    for i in 0..data.n_rows() {
        let label = data.target.class_index(i).unwrap();
        csv.push_str(&format!("{},{},c{label}\n", data.features[[i, 0]], data.features[[i, 1]]));
    }
    let csv_path = dir.path().join("toy.csv");
    std::fs::write(&csv_path, csv).unwrap();

    let mut dirs = Vec::new();
    for run in ["one", "two"] {
        let out = dir.path().join(run);
        let status = Command::new(env!("CARGO_BIN_EXE_ispca"))
            .args(["fit", "--data"])
            .arg(&csv_path)
            .args([
                "--label-col",
                "label",
                "--method",
                "ispca",
                "--k-total",
                "2",
                "--seed",
                "1234",
            ])
            .arg("--out-dir")
            .arg(&out)
            .output()
            .unwrap();
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        dirs.push(out);
    }
    for f in ["model.json", "model_w.csv", "Z.csv", "summary.txt"] {
        let a = std::fs::read(dirs[0].join(f)).unwrap();
        let b = std::fs::read(dirs[1].join(f)).unwrap();
        assert_eq!(a, b, "{f} differs between identical invocations");
    }
    println!("criterion 12 PASS: model.json, model_w.csv, Z.csv and summary.txt byte-identical");
}
