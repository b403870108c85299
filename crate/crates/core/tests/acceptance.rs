//! Acceptance suite: each criterion runs at its stated scale and tolerance
//! and prints one PASS/FAIL line. The process fails if any criterion fails.

// `check!(a < b)` negates on purpose so that NaN fails.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod common;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::panic;
use std::path::{Path, PathBuf};
use std::time::Instant;

use common::*;
use densecascade::cli;
use densecascade::datatools::{execute_split, plan_split, SplitRatios};
use densecascade::feature_select::{
    aggregate_ranks, fit_adaptive_variance, fit_chained, ScoreFn, SelectorSpec,
};
use densecascade::neuralnet::{
    encode_targets, train_with_observer, Activation, Dataset, DenseLayer, DenseNetwork,
    EpochRecord, EsMode, LayerSpec, LossKind, ModelFile, TrainConfig, TrainObserver,
};
use densecascade::numerics::{fit_pca, Matrix, Rng};
use densecascade::pccdnas::{build, data_init, PcaVariance, SearchConfig, SearchResult};
use densecascade::report::{render_history, PlotSpec};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! check {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn pca_oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = Rng::new(1);
    let mut worst: f64 = 0.0;
    for case in 0..100 {
        let rows = 5 + rng.below(46);
        let cols = 2 + rng.below(19);
        let x = random_matrix(&mut rng, rows, cols);
        let model = fit_pca(&x).map_err(|e| format!("case {case}: {e}"))?;
        let expected_rank = (rows - 1).min(cols);
        check!(
            model.n_components() == expected_rank,
            "case {case}: {} components, expected {expected_rank}",
            model.n_components()
        );
        let oracle = oracle_ratios(&x, expected_rank);
        for (got, want) in model.explained_variance_ratio().iter().zip(&oracle) {
            worst = worst.max(rel_err(*got, *want));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check!(worst <= 1e-8, "worst relative error {worst:e}");
    check!(secs < 10.0, "took {secs:.2} s");
    Ok(format!(
        "100 matrices, worst rel err {worst:.2e}, {secs:.2} s"
    ))
}

fn gradient_correctness() -> Outcome {
    let start = Instant::now();
    let mut rng = Rng::new(2);
    let mut worst: f64 = 0.0;
    let mut seen = std::collections::BTreeSet::new();
    for i in 0..50 {
        let pairing = i % 30;
        let act = Activation::ALL[pairing / 6];
        let loss = LossKind::ALL[(pairing / 2) % 3];
        let l2 = if pairing % 2 == 1 { 0.01 } else { 0.0 };
        let units = if act == Activation::Softmax {
            3
        } else {
            1 + rng.below(3)
        };
        let batch_norm = i >= 30;
        let net = random_network(&mut rng, 4, units, act, l2, batch_norm);
        let x = random_matrix(&mut rng, 6, 4);
        let t = random_targets(&mut rng, 6, units, loss);
        let err = gradient_check(&net, &x, &t, loss, 1e-5, 1e-6);
        check!(err <= 1e-4, "net {i} ({act:?}/{loss:?}/l2={l2}): {err:e}");
        worst = worst.max(err);
        seen.insert(pairing);
    }
    let secs = start.elapsed().as_secs_f64();
    check!(seen.len() == 30, "only {} pairings covered", seen.len());
    check!(secs < 30.0, "took {secs:.2} s");
    Ok(format!(
        "50 networks, 30 pairings, worst rel err {worst:.2e}, {secs:.2} s"
    ))
}

fn quiet_train() -> TrainConfig {
    TrainConfig {
        epochs: 10,
        stop_criteria: "loss".into(),
        ..TrainConfig::default()
    }
}

fn width_search(x: &Matrix, y: &[usize], threshold: f64) -> Result<usize, String> {
    let cfg = SearchConfig {
        layers: 1,
        pca_variance: PcaVariance::Uniform(threshold),
        train: quiet_train(),
        ..SearchConfig::default()
    };
    let data = data_init(x, y, None, cfg.normalize, cfg.unit).map_err(|e| e.to_string())?;
    let result = build(&cfg, &data).map_err(|e| e.to_string())?;
    Ok(result.widths[0])
}

/// Default three-layer search on the low-rank fixture with a 400/100
/// train/validation split.
fn three_layer_search(x: &Matrix, y: &[usize]) -> Result<(SearchResult, ModelFile), String> {
    let train_idx: Vec<usize> = (0..400).collect();
    let val_idx: Vec<usize> = (400..500).collect();
    let xt = x.select_rows(&train_idx).unwrap();
    let xv = x.select_rows(&val_idx).unwrap();
    let cfg = SearchConfig::default();
    let data = data_init(
        &xt,
        &y[..400],
        Some((&xv, &y[400..])),
        cfg.normalize,
        cfg.unit,
    )
    .map_err(|e| e.to_string())?;
    let result = build(&cfg, &data).map_err(|e| e.to_string())?;
    let model = ModelFile {
        network: result.model.clone(),
        scaler: data.scaler.clone(),
        class_names: vec![],
    };
    Ok((result, model))
}

fn low_rank_fixture() -> (Matrix, Vec<usize>) {
    low_rank_dataset(&mut Rng::new(3), 500, 50, 5, 1e-6)
}

fn pccdnas_width_fidelity() -> Outcome {
    let start = Instant::now();
    let (x, y) = low_rank_fixture();
    let oracle = oracle_ratios(&standardize(&x), 50);
    let mut widths = Vec::new();
    for t in [0.6, 0.8, 0.95, 0.99] {
        let w = width_search(&x, &y, t)?;
        let want = oracle_k(&oracle, t);
        check!(w == want, "threshold {t}: width {w}, oracle {want}");
        widths.push(w);
    }
    check!(widths[2] == 5, "width at 0.95 is {}, expected 5", widths[2]);
    check!(
        widths.windows(2).all(|w| w[0] <= w[1]),
        "widths not monotone: {widths:?}"
    );
    let build_start = Instant::now();
    let (result, _) = three_layer_search(&x, &y)?;
    let build_secs = build_start.elapsed().as_secs_f64();
    check!(
        result.widths.len() == 3,
        "built {} layers",
        result.widths.len()
    );
    check!(
        result.widths[0] == 5,
        "3-layer stage-1 width {}",
        result.widths[0]
    );
    check!(build_secs < 60.0, "3-layer build took {build_secs:.2} s");
    Ok(format!(
        "widths {widths:?} for 0.6/0.8/0.95/0.99, 3-layer widths {:?} in {build_secs:.2} s (total {:.2} s)",
        result.widths,
        start.elapsed().as_secs_f64()
    ))
}

fn avt_oracle_equivalence() -> Outcome {
    let mut rng = Rng::new(4);
    let percentiles = [0.0, 1.5, 25.0, 50.0, 90.0, 100.0];
    let mut checked = 0;
    for case in 0..200 {
        let rows = 2 + rng.below(30);
        let cols = 1 + rng.below(25);
        let scales: Vec<f64> = (0..cols).map(|_| rng.uniform_range(0.0, 3.0)).collect();
        let mut x = Matrix::from_fn(rows, cols, |_, j| scales[j] * rng.normal()).unwrap();
        if case % 4 == 0 && cols > 2 {
            // duplicated and constant columns produce exact variance ties
            let mut rows_v: Vec<Vec<f64>> = x.row_iter().map(|r| r.to_vec()).collect();
            for r in rows_v.iter_mut() {
                r[1] = r[0];
                r[2] = 7.0;
            }
            x = Matrix::from_rows(&rows_v).unwrap();
        }
        for &p in &percentiles {
            let got = fit_adaptive_variance(&x, p).map_err(|e| e.to_string())?;
            let want = reference_avt(&x, p);
            check!(
                got.selected() == want.as_slice(),
                "case {case} p={p}: {:?} vs {want:?}",
                got.selected()
            );
            checked += 1;
        }
    }
    Ok(format!("{checked} dataset/percentile pairs match"))
}

fn integer_scores(rng: &mut Rng, p: usize) -> Vec<f64> {
    (0..p).map(|_| rng.below(12) as f64).collect()
}

fn rafs_properties() -> Outcome {
    let mut rng = Rng::new(5);
    let selected = |sets: &[Vec<f64>], k: usize| -> Result<Vec<usize>, String> {
        Ok(aggregate_ranks(sets, k)
            .map_err(|e| e.to_string())?
            .selected()
            .to_vec())
    };
    for case in 0..100 {
        let p = 2 + rng.below(20);
        let m = 1 + rng.below(4);
        let k = 1 + rng.below(p);
        let sets: Vec<Vec<f64>> = (0..m).map(|_| integer_scores(&mut rng, p)).collect();
        let base = selected(&sets, k)?;
        let doubled: Vec<Vec<f64>> = sets.iter().chain(sets.iter()).cloned().collect();
        check!(selected(&doubled, k)? == base, "duplication, case {case}");
    }
    for case in 0..100 {
        let p = 2 + rng.below(20);
        let m = 1 + rng.below(4);
        let k = 1 + rng.below(p);
        let sets: Vec<Vec<f64>> = (0..m).map(|_| integer_scores(&mut rng, p)).collect();
        let base = selected(&sets, k)?;
        let which = rng.below(m);
        let transforms: [fn(f64) -> f64; 3] =
            [|v| 2.0 * v + 1.0, |v| v * v * v, |v| (v / 4.0).exp()];
        let f = transforms[case % 3];
        let mut rescaled = sets.clone();
        rescaled[which] = rescaled[which].iter().map(|&v| f(v)).collect();
        check!(selected(&rescaled, k)? == base, "rescaling, case {case}");
    }
    for case in 0..100 {
        let p = 1 + rng.below(20);
        let k = 1 + rng.below(p);
        let scores = if case % 2 == 0 {
            integer_scores(&mut rng, p)
        } else {
            (0..p).map(|_| rng.normal()).collect()
        };
        let got = selected(std::slice::from_ref(&scores), k)?;
        check!(got == reference_top_k(&scores, k), "singleton, case {case}");
    }
    Ok("duplication, monotone rescaling and singleton top-k: 100 instances each".into())
}

fn random_stage(rng: &mut Rng, width: usize) -> SelectorSpec {
    let score_fn = if rng.below(2) == 0 {
        ScoreFn::FClassif
    } else {
        ScoreFn::MutualInfo
    };
    match rng.below(5) {
        0 => SelectorSpec::VarianceThreshold {
            threshold: rng.uniform_range(0.0, 1.5),
        },
        1 => SelectorSpec::AdaptiveVariance {
            percentile: rng.uniform_range(0.0, 100.0),
        },
        2 | 3 => SelectorSpec::SelectKBest {
            k: 1 + rng.below(width),
            score_fn,
        },
        _ => SelectorSpec::RankAggregated {
            methods: vec![
                SelectorSpec::SelectKBest {
                    k: 1,
                    score_fn: ScoreFn::FClassif,
                },
                SelectorSpec::SelectKBest {
                    k: 1,
                    score_fn: ScoreFn::MutualInfo,
                },
            ],
            k: 1 + rng.below(width),
        },
    }
}

fn chained_composition() -> Outcome {
    let mut rng = Rng::new(6);
    let mut emptied = 0;
    for case in 0..100 {
        let rows = 20 + rng.below(40);
        let cols = 2 + rng.below(15);
        let scales: Vec<f64> = (0..cols).map(|_| rng.uniform_range(0.1, 2.0)).collect();
        let y: Vec<usize> = (0..rows).map(|i| i % 3).collect();
        let x = Matrix::from_fn(rows, cols, |i, j| {
            scales[j] * rng.normal() + 0.3 * y[i] as f64 * (j % 2) as f64
        })
        .unwrap();
        let len = 1 + rng.below(4);

        // manual application, generating each stage for the width it sees
        let mut specs = Vec::new();
        let mut current = x.clone();
        let mut original: Vec<usize> = (0..cols).collect();
        let mut empty_at = None;
        for stage in 0..len {
            let spec = random_stage(&mut rng, current.cols());
            let sel = spec
                .fit(&current, Some(&y))
                .map_err(|e| format!("case {case}: {e}"))?;
            specs.push(spec);
            if sel.selected().is_empty() {
                empty_at = Some(stage + 1);
                break;
            }
            original = sel.selected().iter().map(|&i| original[i]).collect();
            current = current.select_columns(sel.selected()).unwrap();
        }
        match (fit_chained(&x, Some(&y), &specs), empty_at) {
            (Ok(sel), None) => check!(
                sel.selected() == original.as_slice(),
                "case {case}: {:?} vs {original:?}",
                sel.selected()
            ),
            (Err(densecascade::Error::ChainStageEmpty { stage, .. }), Some(s)) => {
                check!(stage == s, "case {case}: empty stage {stage}, expected {s}");
                emptied += 1;
            }
            (other, _) => {
                return Err(format!(
                    "case {case}: unexpected {other:?} (empty at {empty_at:?})"
                ))
            }
        }
    }
    Ok(format!(
        "100 chains match manual application ({emptied} ended in an empty stage)"
    ))
}

fn splitter_partition() -> Outcome {
    let mut rng = Rng::new(7);
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let fixed = [
        (0.7, 0.15, 0.15),
        (1.0, 0.0, 0.0),
        (0.5, 0.5, 0.0),
        (0.2, 0.3, 0.5),
    ];
    for case in 0..30 {
        let root = tmp.path().join(format!("case{case}"));
        let src = root.join("src");
        let n_classes = 2 + rng.below(4);
        let classes: Vec<(String, usize)> = (0..n_classes)
            .map(|c| (format!("class_{c}"), 1 + rng.below(50)))
            .collect();
        class_tree(&src, &classes);
        let (a, b, c) = if case < fixed.len() {
            fixed[case]
        } else {
            let w = [rng.uniform(), rng.uniform(), rng.uniform()];
            let s: f64 = w.iter().sum();
            (w[0] / s, w[1] / s, 1.0 - w[0] / s - w[1] / s)
        };
        let ratios = SplitRatios::new(a, b, c).map_err(|e| e.to_string())?;
        let seed = rng.next_u64();
        let before = snapshot_files(&src);

        let plan = plan_split(&src, ratios, seed).map_err(|e| e.to_string())?;
        check!(
            plan == plan_split(&src, ratios, seed).unwrap(),
            "case {case}: plan not reproducible"
        );
        let source = scan_tree(&src);
        for cs in &plan.classes {
            let files = &source[&cs.name];
            let n = files.len();
            let n_tr = (a * n as f64).floor() as usize;
            let n_v = ((b * n as f64).floor() as usize).min(n - n_tr);
            check!(
                (cs.train.len(), cs.val.len(), cs.test.len()) == (n_tr, n_v, n - n_tr - n_v),
                "case {case} {}: counts {}/{}/{} for n={n}",
                cs.name,
                cs.train.len(),
                cs.val.len(),
                cs.test.len()
            );
            let mut all: Vec<&String> = cs.train.iter().chain(&cs.val).chain(&cs.test).collect();
            all.sort();
            let before_dedup = all.len();
            all.dedup();
            check!(
                all.len() == before_dedup,
                "case {case} {}: overlapping parts",
                cs.name
            );
            check!(
                all.into_iter()
                    .cloned()
                    .collect::<std::collections::BTreeSet<_>>()
                    == *files,
                "case {case} {}: not complete",
                cs.name
            );
        }

        let dest_a = root.join("a");
        let dest_b = root.join("b");
        execute_split(&plan, &dest_a).map_err(|e| e.to_string())?;
        let again = plan_split(&src, ratios, seed).unwrap();
        execute_split(&again, &dest_b).map_err(|e| e.to_string())?;
        for cs in &plan.classes {
            for split in ["train", "val", "test"] {
                let on_disk = scan_tree(&dest_a.join(split))
                    .remove(&cs.name)
                    .unwrap_or_default();
                let planned: std::collections::BTreeSet<String> =
                    cs.part(split).iter().cloned().collect();
                check!(
                    on_disk == planned,
                    "case {case}: {split}/{} differs from plan",
                    cs.name
                );
            }
        }
        let copied = snapshot_files(&dest_a);
        check!(
            copied == snapshot_files(&dest_b),
            "case {case}: same seed gave different trees"
        );
        for (rel, bytes) in &copied {
            let orig: PathBuf = rel.components().skip(1).collect();
            check!(
                before.get(&orig) == Some(bytes),
                "case {case}: {} content differs",
                rel.display()
            );
        }
        check!(
            snapshot_files(&src) == before,
            "case {case}: source modified"
        );
    }
    Ok("30 directory fixtures: partition, floor counts, copies and reproducibility hold".into())
}

/// Replaces the monitored value with a scripted sequence and snapshots the
/// weights after each epoch.
struct Script {
    key: &'static str,
    values: Vec<f64>,
    snapshots: Vec<Vec<DenseLayer>>,
}

impl TrainObserver for Script {
    fn on_epoch_end(&mut self, epoch: usize, record: &mut EpochRecord, net: &DenseNetwork) {
        record.set(self.key, self.values[epoch]);
        self.snapshots.push(net.layers().to_vec());
    }
}

fn early_stopping() -> Outcome {
    let mut rng = Rng::new(8);
    let x = random_matrix(&mut rng, 24, 3);
    let labels: Vec<usize> = (0..24)
        .map(|i| usize::from(x.get(i, 0) + x.get(i, 1) > 0.0))
        .collect();
    let t = encode_targets(&labels, 1).unwrap();
    let specs = [
        LayerSpec::new(4, Activation::Tanh),
        LayerSpec::new(1, Activation::Sigmoid),
    ];

    let mut sequences: Vec<Vec<f64>> = vec![
        vec![5.0, 4.0, 3.0, 2.0, 1.0, 0.5, 0.4, 0.3],
        vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0],
        vec![3.0, 3.0, 3.0, 3.0, 3.0, 3.0, 3.0, 3.0],
        vec![4.0, 2.0, 2.0, 3.0, 1.0, 1.0, 5.0, 0.5],
        vec![1.0, 3.0, 2.0, 3.0, 4.0, 0.0, 2.0, 2.0],
    ];
    for _ in 0..15 {
        sequences.push((0..10).map(|_| rng.below(6) as f64).collect());
    }
    let mut runs = 0;
    for (s, seq) in sequences.iter().enumerate() {
        for patience in [0usize, 1, 3] {
            for (mode, key) in [(EsMode::Min, "val_loss"), (EsMode::Max, "val_accuracy")] {
                let cfg = TrainConfig {
                    epochs: seq.len(),
                    batch_size: 8,
                    learn_rate: 0.05,
                    stop_criteria: key.into(),
                    es_mode: mode,
                    es_patience: patience,
                    seed: s as u64,
                    ..TrainConfig::default()
                };
                let mut net = DenseNetwork::with_layers(3, &specs, 11).unwrap();
                let mut script = Script {
                    key,
                    values: seq.clone(),
                    snapshots: vec![],
                };
                let data = Dataset::new(&x, &t).unwrap();
                let h = train_with_observer(&mut net, data, Some(data), &cfg, &mut script)
                    .map_err(|e| e.to_string())?;
                let (ran, best, stopped) = expected_early_stop(seq, mode == EsMode::Min, patience);
                let tag = format!("seq {s} patience {patience} {mode:?}");
                check!(
                    h.epochs.len() == ran,
                    "{tag}: ran {} epochs, expected {ran}",
                    h.epochs.len()
                );
                check!(
                    h.best_epoch == best,
                    "{tag}: best {} expected {best}",
                    h.best_epoch
                );
                check!(
                    h.stopped_early == stopped,
                    "{tag}: stopped_early {}",
                    h.stopped_early
                );
                check!(
                    net.layers() == script.snapshots[best].as_slice(),
                    "{tag}: weights not restored to epoch {best}"
                );
                if best + 1 < script.snapshots.len() {
                    check!(
                        script.snapshots[best] != *script.snapshots.last().unwrap(),
                        "{tag}: weights never changed"
                    );
                }
                runs += 1;
            }
        }
    }
    Ok(format!(
        "{runs} scripted runs: stop epoch, best epoch and restored weights match"
    ))
}

fn os(args: &[&dyn AsRef<std::ffi::OsStr>]) -> Vec<OsString> {
    args.iter().map(|a| a.as_ref().to_os_string()).collect()
}

fn run_cli(args: Vec<OsString>) -> Result<String, String> {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = cli::run_with(args, &mut out, &mut err);
    if code != 0 {
        return Err(format!("exit {code}: {}", String::from_utf8_lossy(&err)));
    }
    Ok(String::from_utf8(out).unwrap())
}

const NAS_CONFIG: &str = "schema_version = 1\n\n[search]\nlayers = 2\npca_variance = 0.95\n\n[search.train]\nepochs = 50\nlearn_rate = 0.01\nseed = 9\n";

struct EndToEnd {
    val_accuracy: f64,
    trace: u64,
    total: u64,
    secs: f64,
    outputs: BTreeMap<PathBuf, Vec<u8>>,
}

/// Writes the two-Gaussian CSVs, runs `nas` then `report` through the CLI
/// and collects every produced file.
fn end_to_end(root: &Path) -> Result<EndToEnd, String> {
    let start = Instant::now();
    let mut rng = Rng::new(9);
    let (xt, lt) = two_gaussians(&mut rng, 400);
    let (xv, lv) = two_gaussians(&mut rng, 100);
    let data = root.join("data");
    fs::create_dir_all(&data).unwrap();
    write_csv(&data.join("train.csv"), &xt, &lt);
    write_csv(&data.join("val.csv"), &xv, &lv);
    fs::write(data.join("run.toml"), NAS_CONFIG).unwrap();
    let out = root.join("out");
    let model = out.join("model.cmnet");
    let reports = out.join("nas");
    fs::create_dir_all(&out).unwrap();

    run_cli(os(&[
        &"densecascade",
        &"nas",
        &"--train",
        &data.join("train.csv"),
        &"--val",
        &data.join("val.csv"),
        &"--label",
        &"label",
        &"--config",
        &data.join("run.toml"),
        &"--out-model",
        &model,
        &"--report-dir",
        &reports,
    ]))?;
    run_cli(os(&[
        &"densecascade",
        &"report",
        &"--model",
        &model,
        &"--data",
        &data.join("val.csv"),
        &"--label",
        &"label",
        &"--out-dir",
        &out.join("eval"),
        &"--history",
        &reports.join("history_final.json"),
    ]))?;
    let secs = start.elapsed().as_secs_f64();

    let metrics: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(reports.join("metrics.json")).unwrap()).unwrap();
    let val_accuracy = metrics["val_accuracy"].as_f64().ok_or("no val_accuracy")?;
    let table = fs::read_to_string(out.join("eval/confusion.txt")).unwrap();
    let last = table.lines().last().ok_or("empty confusion table")?;
    // "accuracy: t/n = x"
    let frac = last
        .trim_start_matches("accuracy: ")
        .split(' ')
        .next()
        .unwrap();
    let (t, n) = frac.split_once('/').ok_or("malformed accuracy line")?;
    Ok(EndToEnd {
        val_accuracy,
        trace: t.parse().map_err(|_| "bad trace")?,
        total: n.parse().map_err(|_| "bad total")?,
        secs,
        outputs: snapshot_files(&out),
    })
}

fn end_to_end_two_gaussians() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let r = end_to_end(tmp.path())?;
    check!(r.total == 100, "confusion total {}", r.total);
    let cm_acc = r.trace as f64 / r.total as f64;
    check!(
        r.val_accuracy >= 0.95,
        "validation accuracy {}",
        r.val_accuracy
    );
    check!(
        (cm_acc - r.val_accuracy).abs() <= 1e-12,
        "confusion accuracy {cm_acc} vs reported {}",
        r.val_accuracy
    );
    check!(r.secs < 30.0, "took {:.2} s", r.secs);
    Ok(format!(
        "val accuracy {:.4}, confusion {}/{}, {:.2} s",
        r.val_accuracy, r.trace, r.total, r.secs
    ))
}

fn search_artifacts() -> Result<Vec<String>, String> {
    let (x, y) = low_rank_fixture();
    let (result, model) = three_layer_search(&x, &y)?;
    let spec = PlotSpec::default();
    let mut out = vec![
        result.widths_table(),
        result.variance_table(),
        model.to_text().unwrap(),
    ];
    for stage in &result.stages {
        if let Some(h) = &stage.history {
            out.push(h.to_json());
            out.push(render_history(h, &spec).map_err(|e| e.to_string())?);
        }
    }
    out.push(result.final_history.to_json());
    out.push(render_history(&result.final_history, &spec).map_err(|e| e.to_string())?);
    Ok(out)
}

fn determinism() -> Outcome {
    let first = search_artifacts()?;
    let second = search_artifacts()?;
    check!(first == second, "search artifacts differ between runs");
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let a = end_to_end(&tmp.path().join("a"))?;
    let b = end_to_end(&tmp.path().join("b"))?;
    check!(
        a.outputs.len() >= 10,
        "only {} files produced",
        a.outputs.len()
    );
    for (path, bytes) in &a.outputs {
        check!(
            b.outputs.get(path) == Some(bytes),
            "{} differs",
            path.display()
        );
    }
    check!(a.outputs.len() == b.outputs.len(), "file sets differ");
    Ok(format!(
        "{} search artifacts and {} end-to-end files byte-identical",
        first.len(),
        a.outputs.len()
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("PCA oracle equivalence", pca_oracle_equivalence),
        ("gradient correctness", gradient_correctness),
        ("PCCDNAS width fidelity", pccdnas_width_fidelity),
        ("AVT oracle equivalence", avt_oracle_equivalence),
        ("RAFS properties", rafs_properties),
        ("ChainedFS composition", chained_composition),
        ("splitter partition and determinism", splitter_partition),
        ("early stopping", early_stopping),
        ("end-to-end two Gaussians", end_to_end_two_gaussians),
        ("determinism", determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(run).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
