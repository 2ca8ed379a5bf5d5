//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tdi_cli::{run, Command, RunConfig};
use tdi_core::eval::{mask_random, nrmse, rmse, run_masking_benchmark, smape};
use tdi_core::impute::{forward_fill, iterative_impute, soft_impute, FlatMatrix};
use tdi_core::ingest::generate_synthetic;
use tdi_core::predict::{
    auroc, build_cohort, cross_validate, generate_synthetic_cohort, shuffle_labels, CohortFilter,
};
use tdi_core::tdi::{compute_deltas, fuse, multiple_impute, weight};
use tdi_core::{
    build_mask, tdi_impute, ImputerSpec, IterativeParams, MethodSpec, NamedMethod, PanelDataset, PatientSeries,
    Provenance, SoftImputeParams, TaskConfig, TdiSpec, VariableMeta, WeightConfig, WeightFamily,
};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn benchmark_config() -> RunConfig {
    RunConfig::load(&config_path("synthetic_benchmark.toml")).expect("committed benchmark config parses")
}

fn benchmark_panel() -> PanelDataset {
    generate_synthetic(&benchmark_config().synthetic_config().unwrap()).unwrap().observed
}

fn replication_path() -> Outcome {
    let cfg = RunConfig::load(&config_path("mimic_replication.toml")).map_err(|e| e.to_string())?;
    let input = cfg.input.as_ref().ok_or("no [input] section")?;
    ensure!(input.max_patients == Some(8000), "max_patients = {:?}", input.max_patients);
    ensure!(cfg.masking.p == 0.1, "p = {}", cfg.masking.p);
    ensure!(cfg.standardize, "standardization disabled");
    let methods = cfg.methods().map_err(|e| e.to_string())?;
    for wanted in ["tdi", "soft_impute", "iterative", "mean"] {
        ensure!(
            methods.iter().any(|m| m.name == wanted || matches!(&m.spec, MethodSpec::Imputer(s) if s.kind_name() == wanted)),
            "registry lacks {wanted}"
        );
    }
    let readme = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../README.md"))
        .map_err(|e| format!("README: {e}"))?;
    ensure!(readme.contains("patient_id,time,variable,value"), "README does not document the long CSV schema");
    ensure!(readme.contains("mimic_replication.toml"), "README does not point at the replication config");
    Ok(format!("{} methods, N = 8000, p = 0.1, standardized", methods.len()))
}

fn synthetic_ordering() -> Outcome {
    let mut cfg = benchmark_config();
    let keep = ["mean", "iterative", "tdi"];
    cfg.imputers.retain(|e| keep.contains(&e.name.as_deref().or(e.rest.get("kind").and_then(|k| k.as_str())).unwrap_or("")));
    let start = Instant::now();
    let outputs = run(Command::MaskEval, &cfg).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed().as_secs_f64();
    let json = &outputs.files.iter().find(|(n, _)| n == "mask_eval.json").ok_or("no mask_eval.json")?.1;
    let report: serde_json::Value = serde_json::from_slice(json).map_err(|e| e.to_string())?;
    let overall = |m: &str| {
        report["rows"]
            .as_array()
            .unwrap()
            .iter()
            .find(|r| r["imputer"] == m && r["variable"] == "__overall__")
            .and_then(|r| r["rmse"].as_f64())
            .unwrap()
    };
    let (t, it, mean) = (overall("tdi"), overall("iterative"), overall("mean"));
    let summary = format!("RMSE tdi {t:.4}, iterative {it:.4}, mean {mean:.4}, {elapsed:.1} s");
    ensure!(t < it && t < mean, "{summary}");
    ensure!(elapsed < 60.0, "{summary}");
    Ok(summary)
}

fn pairwise_auroc(labels: &[bool], scores: &[f64]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (i, &li) in labels.iter().enumerate() {
        for (j, &lj) in labels.iter().enumerate() {
            if li && !lj {
                pairs += 1.0;
                wins += if scores[i] > scores[j] { 1.0 } else if scores[i] == scores[j] { 0.5 } else { 0.0 };
            }
        }
    }
    wins / pairs
}

fn metric_oracles() -> Outcome {
    let cases: [(&[f64], &[f64], f64, f64, f64); 5] = [
        (&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0], 0.0, 0.0, 0.0),
        (&[1.0, 2.0, 3.0, 4.0], &[2.0; 4], 1.5f64.sqrt(), 1.5f64.sqrt() / 3.0, 13.0 / 30.0),
        (&[0.0, 10.0], &[5.0, 5.0], 5.0, 0.5, 4.0 / 3.0),
        (&[-1.0, 1.0], &[1.0, -1.0], 2.0, 1.0, 0.0),
        (&[-2.0, -4.0], &[-1.0, -5.0], 1.0, 0.5, -4.0 / 9.0),
    ];
    for (k, (y, y_hat, r, n, s)) in cases.iter().enumerate() {
        let range = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - y.iter().cloned().fold(f64::INFINITY, f64::min);
        let got = (
            rmse(y, y_hat).unwrap(),
            nrmse(y, y_hat, range).unwrap(),
            smape(y, y_hat).unwrap(),
        );
        ensure!(
            (got.0 - r).abs() < 1e-12 && (got.1 - n).abs() < 1e-12 && (got.2 - s).abs() < 1e-12,
            "vector {k}: got {got:?}, want ({r}, {n}, {s})"
        );
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let mut worst = 0.0f64;
    for trial in 0..10 {
        let labels: Vec<bool> = (0..1000).map(|_| rng.random_bool(0.4)).collect();
        let scores: Vec<f64> = labels
            .iter()
            .map(|&l| {
                let s = rng.random::<f64>() + if l { 0.25 } else { 0.0 };
                if trial % 2 == 1 { (s * 8.0).round() } else { s }
            })
            .collect();
        worst = worst.max((auroc(&labels, &scores).unwrap() - pairwise_auroc(&labels, &scores)).abs());
    }
    ensure!(worst < 1e-12, "AUROC deviates from the pairwise oracle by {worst:e}");
    Ok(format!("5 vectors exact; AUROC max deviation {worst:e} over 10 x 1000 examples"))
}

fn constituent_recovery() -> Outcome {
    let data = benchmark_panel();
    let (masked, mask, plan) = mask_random(&data, &build_mask(&data), 0.1, 1).unwrap();
    let spec = |c| TdiSpec {
        weight: WeightConfig::new(WeightFamily::Constant(c)),
        seed: 3,
        ..TdiSpec::default()
    };
    let ff = forward_fill(&masked);
    let one = tdi_impute(&masked, &mask, &spec(1.0)).unwrap();
    let mut covered = 0;
    for c in &plan.cells {
        if let Some(x) = ff.get(c.patient, c.row, c.variable) {
            covered += 1;
            let got = one.values.get(c.patient, c.row, c.variable).unwrap();
            ensure!(got.to_bits() == x.to_bits(), "constant 1 differs from forward fill: {got} vs {x}");
        }
    }
    let zero = tdi_impute(&masked, &mask, &spec(0.0)).unwrap();
    let it = ImputerSpec { seed: 3, ..ImputerSpec::iterative(IterativeParams::default()) }.estimate(&masked).unwrap();
    let mut fused = 0;
    for i in 0..masked.n_patients() {
        for t in 0..masked.patient(i).len() {
            for d in 0..masked.n_vars() {
                if let Provenance::Fused(_) = zero.provenance_at(i, t, d) {
                    fused += 1;
                    let (a, b) = (zero.values.get(i, t, d).unwrap(), it.get(i, t, d).unwrap());
                    ensure!(a.to_bits() == b.to_bits(), "constant 0 differs from iterative: {a} vs {b}");
                }
            }
        }
    }
    ensure!(covered > 0 && fused > 0, "nothing to compare");
    Ok(format!("{covered} forward-fill cells and {fused} fused cells bitwise equal"))
}

fn iterative_linear() -> Outcome {
    let params = IterativeParams { ridge_alpha: 1e-6, clip: false, ..IterativeParams::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let n = 100;
    let x1: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    let missing = rand::seq::index::sample(&mut rng, n, n / 5).into_vec();
    let rows: Vec<Vec<Option<f64>>> =
        (0..n).map(|r| vec![Some(x1[r]), (!missing.contains(&r)).then_some(2.0 * x1[r])]).collect();
    let out = iterative_impute(&FlatMatrix::from_rows(&rows).unwrap(), &params, 0).map_err(|e| e.to_string())?;
    let worst = missing.iter().map(|&r| (out.matrix.get(r, 1).unwrap() - 2.0 * x1[r]).abs()).fold(0.0, f64::max);
    ensure!(worst < 1e-6, "max error {worst:e}");
    ensure!(out.rounds <= 10, "{} rounds", out.rounds);
    Ok(format!("max error {worst:.1e} after {} rounds", out.rounds))
}

fn soft_rank_one() -> Outcome {
    let params = SoftImputeParams { lambda: Some(1e-4), max_rank: Some(1), max_iter: 10_000, tol: 1e-12, center: false };
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let u: Vec<f64> = (0..4).map(|_| rng.random_range(0.5..2.0)).collect();
        let v: Vec<f64> = (0..4).map(|_| rng.random_range(0.5..2.0)).collect();
        for (hi, hj) in (0..4).flat_map(|i| (0..4).map(move |j| (i, j))) {
            let rows: Vec<Vec<Option<f64>>> =
                (0..4).map(|i| (0..4).map(|j| ((i, j) != (hi, hj)).then_some(u[i] * v[j])).collect()).collect();
            let out = soft_impute(&FlatMatrix::from_rows(&rows).unwrap(), &params).map_err(|e| e.to_string())?;
            worst = worst.max((out.matrix.get(hi, hj).unwrap() - u[hi] * v[hj]).abs());
        }
    }
    ensure!(worst < 1e-3, "max error {worst:e}");
    Ok(format!("80 single-hole 4x4 matrices, max error {worst:.1e}"))
}

fn random_small_panel(rng: &mut ChaCha8Rng) -> PanelDataset {
    let d = rng.random_range(2..5);
    let patients = (0..rng.random_range(1..5))
        .map(|i| {
            let n = rng.random_range(1..8);
            let mut t = 0.0;
            let ts: Vec<f64> = (0..n)
                .map(|_| {
                    t += rng.random_range(0.25..3.0);
                    t
                })
                .collect();
            let rows = (0..n)
                .map(|_| (0..d).map(|_| rng.random_bool(0.6).then(|| rng.random_range(-5.0..5.0))).collect())
                .collect();
            PatientSeries::new(format!("p{i}"), ts, rows).unwrap()
        })
        .collect();
    PanelDataset::new((0..d).map(|j| VariableMeta::new(format!("v{j}"))).collect(), patients).unwrap()
}

fn invariant_suite() -> Outcome {
    let data = benchmark_panel();
    let (masked, mask, _) = mask_random(&data, &build_mask(&data), 0.1, 2).unwrap();
    let small = masked.select_patients(&(0..40).collect::<Vec<_>>());
    let engines = [
        ImputerSpec::mean(),
        ImputerSpec::median(),
        ImputerSpec::forward_fill(),
        ImputerSpec::knn(5),
        ImputerSpec::soft_impute(SoftImputeParams::default()),
        ImputerSpec::iterative(IterativeParams::default()),
    ];
    for spec in &engines {
        let est = spec.estimate(&small).map_err(|e| e.to_string())?;
        for i in 0..small.n_patients() {
            for t in 0..small.patient(i).len() {
                for d in 0..small.n_vars() {
                    if let Some(x) = small.get(i, t, d) {
                        ensure!(est.get(i, t, d) == Some(x), "{} altered an observed cell", spec.kind_name());
                    }
                }
            }
        }
        ensure!(spec.kind_name() == "forward_fill" || est.is_complete(), "{} left cells empty", spec.kind_name());
    }

    let tdi = tdi_impute(&masked, &mask, &TdiSpec::default()).unwrap();
    ensure!(tdi.values.is_complete(), "TDI output incomplete");
    let ff = forward_fill(&masked);
    let it = ImputerSpec::iterative(IterativeParams::default()).estimate(&masked).unwrap();
    let mut fused = 0;
    for i in 0..masked.n_patients() {
        for t in 0..masked.patient(i).len() {
            for d in 0..masked.n_vars() {
                if let Provenance::Fused(w) = tdi.provenance_at(i, t, d) {
                    fused += 1;
                    let (a, b, x) = (ff.get(i, t, d).unwrap(), it.get(i, t, d).unwrap(), tdi.values.get(i, t, d).unwrap());
                    ensure!(a.min(b) <= x && x <= a.max(b) && x == fuse(a, b, w), "fused value outside its constituents");
                }
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(10_000);
    for _ in 0..10_000 {
        let (f, r, dt) = (rng.random_range(0.0..5.0), rng.random_range(0.0..=1.0), rng.random_range(0.0..100.0));
        let step = rng.random_range(0.0..1.0);
        for family in [WeightFamily::Reciprocal, WeightFamily::Exponential] {
            let cfg = WeightConfig::new(family);
            let w = weight(f, r, dt, &cfg).unwrap();
            ensure!((0.0..=1.0).contains(&w), "weight {w} out of range");
            ensure!(
                weight(f + step, r, dt, &cfg).unwrap() <= w
                    && weight(f, (r + step).min(1.0), dt, &cfg).unwrap() <= w
                    && weight(f, r, dt + step, &cfg).unwrap() <= w,
                "weight increased at ({f}, {r}, {dt})"
            );
        }
    }

    for _ in 0..100 {
        let p = random_small_panel(&mut rng);
        let delta = compute_deltas(&p, &build_mask(&p)).unwrap();
        for (i, s) in p.patients().iter().enumerate() {
            let ts = s.timestamps();
            for t in 0..s.len() {
                for d in 0..p.n_vars() {
                    let want = if s.is_observed(t, d) {
                        0.0
                    } else {
                        (0..t).rev().find(|&u| s.is_observed(u, d)).map_or(f64::INFINITY, |u| ts[t] - ts[u])
                    };
                    ensure!(delta[i][t * p.n_vars() + d] == want, "delta mismatch");
                }
            }
        }
    }

    let methods = [NamedMethod::imputer("mean", ImputerSpec::mean()), NamedMethod::tdi("tdi", TdiSpec::default())];
    let json = |seed| {
        let mut b = Vec::new();
        run_masking_benchmark(&data, &methods, 0.1, seed, None).unwrap().write_json(&mut b).unwrap();
        b
    };
    ensure!(json(9) == json(9), "mask-eval report not reproducible");
    let cfg = benchmark_config();
    let cohort = generate_synthetic_cohort(&cfg.synthetic_cohort_config().unwrap()).unwrap();
    let (task, _) = build_cohort(&cohort.observed, &cohort.labels, None, &CohortFilter::default()).unwrap();
    let cv = |_| {
        let mut b = Vec::new();
        cross_validate(&task, &MethodSpec::Tdi(TdiSpec::default()), &cfg.cv_config(), &TaskConfig::default())
            .unwrap()
            .write_json(&mut b)
            .unwrap();
        b
    };
    ensure!(cv(0) == cv(1), "cross-validation report not reproducible");
    Ok(format!("6 engines, {fused} fused cells, 10^4 weight triples, 100 delta panels, 2 determinism checks"))
}

fn multiple_imputation() -> Outcome {
    let data = benchmark_panel();
    let mask = build_mask(&data);
    let mi = multiple_impute(&data, &mask, &TdiSpec { seed: 100, ..TdiSpec::default() }, 5).map_err(|e| e.to_string())?;
    let seeds = &mi.seeds;
    ensure!(seeds.windows(2).all(|w| w[0] != w[1]), "seeds not distinct: {seeds:?}");
    let n_vars = data.n_vars();
    let (mut positive, mut observed) = (0, 0);
    for (i, var) in mi.variance.iter().enumerate() {
        for (k, &v) in var.iter().enumerate() {
            if mask.get(i, k / n_vars, k % n_vars) {
                observed += 1;
                ensure!(v == 0.0, "observed cell with variance {v}");
            } else if v > 0.0 {
                positive += 1;
            }
        }
    }
    ensure!(positive > 0, "no imputed cell has positive variance");
    Ok(format!("{positive} imputed cells with variance > 0; {observed} observed cells at 0"))
}

fn prediction_sanity() -> Outcome {
    let start = Instant::now();
    let mut cfg = benchmark_config();
    cfg.synthetic.as_mut().unwrap().n_patients = 500;
    let cohort = generate_synthetic_cohort(&cfg.synthetic_cohort_config().unwrap()).unwrap();
    let (task, _) = build_cohort(&cohort.observed, &cohort.labels, None, &cfg.task.filter).unwrap();
    let settings = TaskConfig { features: cfg.task.features, standardize: true, logistic: cfg.task.logistic };
    let methods = cfg.methods().map_err(|e| e.to_string())?;
    let spec = |name: &str| methods.iter().find(|m| m.name == name).unwrap().spec.clone();
    let cv = cfg.cv_config();
    let score = |t: &tdi_core::predict::TaskCohort, m: &MethodSpec| {
        cross_validate(t, m, &cv, &settings).map(|r| r.auroc.mean).map_err(|e| e.to_string())
    };
    let tdi = score(&task, &spec("tdi"))?;
    let mean = score(&task, &spec("mean"))?;
    let mut permuted = task.clone();
    permuted.labels = shuffle_labels(&task.labels, 77);
    let control = score(&permuted, &spec("tdi"))?;
    let elapsed = start.elapsed().as_secs_f64();
    let summary = format!("AUROC tdi {tdi:.3}, mean {mean:.3}, permuted {control:.3}, {elapsed:.1} s");
    ensure!(tdi >= mean - 0.01 && tdi >= 0.7 && mean >= 0.7, "{summary}");
    ensure!((control - 0.5).abs() <= 0.1, "{summary}");
    ensure!(elapsed < 120.0, "{summary}");
    Ok(summary)
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("replication path", replication_path),
        ("synthetic ordering", synthetic_ordering),
        ("metric oracles", metric_oracles),
        ("constituent recovery", constituent_recovery),
        ("iterative linear recovery", iterative_linear),
        ("softimpute rank-1 recovery", soft_rank_one),
        ("invariant suite", invariant_suite),
        ("multiple imputation", multiple_imputation),
        ("prediction sanity", prediction_sanity),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
