use std::fs;
use std::io::Write;
use std::path::Path;

use super::config::RunConfig;
use super::{Given, NasArgs, ReportArgs, SelectArgs, SplitArgs, SubsampleArgs};
use crate::datatools::{execute_split, load_csv, plan_split, stratified_split, TabularDataset};
use crate::error::{Error, Result};
use crate::feature_select::fit_chained;
use crate::neuralnet::{accuracy, encode_targets, ModelFile, Task, TrainingHistory};
use crate::numerics::Matrix;
use crate::pccdnas::{build, data_init, PcaVariance, SearchResult};
use crate::report::{
    confusion_matrix, render_confusion, render_history, render_variance_curve, PlotSpec,
};

fn emit(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes())
        .map_err(|e| Error::io("<stdout>", e))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub(super) fn split(a: &SplitArgs, given: &Given, out: &mut dyn Write) -> Result<()> {
    let mut cfg = RunConfig::load_or_default(a.config.as_deref())?.split;
    if given.has("train") {
        cfg.train = a.train;
    }
    if given.has("val") {
        cfg.val = a.val;
    }
    if given.has("test") {
        cfg.test = a.test;
    }
    if given.has("seed") {
        cfg.seed = a.seed;
    }
    let ratios = cfg.ratios()?;
    let plan = plan_split(&a.data_dir, ratios, cfg.seed)?;
    let summary = execute_split(&plan, &a.dest)?;
    emit(out, &summary.table())
}

pub(super) fn subsample(a: &SubsampleArgs, given: &Given, out: &mut dyn Write) -> Result<()> {
    let mut cfg = RunConfig::load_or_default(a.config.as_deref())?.subsample;
    if given.has("fraction") {
        cfg.fraction = a.fraction;
    }
    if given.has("seed") {
        cfg.seed = a.seed;
    }
    cfg.validate()?;
    let summary = crate::datatools::subsample(&a.data_dir, &a.dest, cfg.fraction, cfg.seed)?;
    emit(out, &summary.table())
}

pub(super) fn select(a: &SelectArgs, out: &mut dyn Write) -> Result<()> {
    let chain = RunConfig::load(&a.config)?.select.chain;
    for spec in &chain {
        spec.validate()?;
    }
    let ds = load_csv(&a.input, &a.label)?;
    let selected: Vec<usize> = if chain.is_empty() {
        (0..ds.x.cols()).collect()
    } else {
        fit_chained(&ds.x, Some(&ds.y), &chain)?.selected().to_vec()
    };
    let names: Vec<String> = selected
        .iter()
        .map(|&i| ds.feature_names[i].clone())
        .collect();
    let reduced = ds.with_features(ds.x.select_columns(&selected)?, names.clone())?;
    reduced.save_csv(&a.out)?;

    let mut text = format!(
        "selected {} of {} features\nindex\tname\n",
        selected.len(),
        ds.x.cols()
    );
    for (i, name) in selected.iter().zip(&names) {
        text.push_str(&format!("{i}\t{name}\n"));
    }
    emit(out, &text)
}

fn parse_variance(text: &str) -> Result<PcaVariance> {
    let values = text
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::invalid(format!("--pca-variance: '{t}' is not a number")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(match values.as_slice() {
        [single] => PcaVariance::Uniform(*single),
        _ => PcaVariance::PerLayer(values),
    })
}

fn nas_config(a: &NasArgs, given: &Given) -> Result<RunConfig> {
    let mut cfg = RunConfig::load_or_default(a.config.as_deref())?;
    let s = &mut cfg.search;
    if given.has("layers") {
        s.layers = a.layers;
    }
    if given.has("pca_variance") {
        s.pca_variance = parse_variance(&a.pca_variance)?;
    }
    if given.has("epochs") {
        s.train.epochs = a.epochs;
    }
    if given.has("batch_size") {
        s.train.batch_size = a.batch_size;
    }
    if given.has("learn_rate") {
        s.train.learn_rate = a.learn_rate;
    }
    if given.has("patience") {
        s.train.es_patience = a.patience;
    }
    if given.has("seed") {
        s.train.seed = a.seed;
    }
    if given.has("verbose") {
        s.train.verbose = a.verbose;
    }
    if given.has("val_fraction") {
        cfg.nas.val_fraction = a.val_fraction;
    }
    cfg.search.validate()?;
    let vf = cfg.nas.val_fraction;
    if !(0.0..1.0).contains(&vf) {
        return Err(Error::invalid(format!("val_fraction {vf} outside [0, 1)")));
    }
    if let Some(m) = &cfg.plot.user_metric {
        if !cfg.search.train.metrics.iter().any(|k| k.name() == m) {
            return Err(Error::invalid(format!(
                "plot user_metric '{m}' is not among the training metrics"
            )));
        }
    }
    Ok(cfg)
}

/// Labels of `ds` re-expressed in the index order of `class_names`.
fn align_labels(ds: &TabularDataset, class_names: &[String]) -> Result<Vec<usize>> {
    let map = ds
        .class_names
        .iter()
        .map(|name| {
            class_names.iter().position(|c| c == name).ok_or_else(|| {
                Error::invalid(format!(
                    "label '{name}' does not occur in the training data"
                ))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ds.y.iter().map(|&l| map[l]).collect())
}

fn task_for(output_dim: usize) -> Task {
    if output_dim == 1 {
        Task::Binary
    } else {
        Task::Categorical
    }
}

fn check_head(output_neurons: usize, n_classes: usize) -> Result<()> {
    let capacity = if output_neurons == 1 {
        2
    } else {
        output_neurons
    };
    if n_classes > capacity {
        return Err(Error::invalid(format!(
            "{n_classes} classes do not fit an output layer of {output_neurons} unit(s)"
        )));
    }
    Ok(())
}

fn plot_spec(cfg: &RunConfig, title: String) -> PlotSpec {
    PlotSpec {
        show_min_max: cfg.plot.show_min_max,
        user_metric: cfg.plot.user_metric.clone(),
        title,
    }
}

fn write_history(dir: &Path, stem: &str, history: &TrainingHistory, spec: &PlotSpec) -> Result<()> {
    write_file(&dir.join(format!("{stem}.json")), &history.to_json())?;
    write_file(
        &dir.join(format!("{stem}.svg")),
        &render_history(history, spec)?,
    )
}

fn write_nas_reports(
    dir: &Path,
    cfg: &RunConfig,
    result: &SearchResult,
    metrics: &str,
) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_file(&dir.join("widths.tsv"), &result.widths_table())?;
    write_file(&dir.join("variance.tsv"), &result.variance_table())?;
    for (i, stage) in result.stages.iter().enumerate() {
        let layer = i + 1;
        let svg = render_variance_curve(
            &stage.explained_variance_ratio,
            stage.threshold,
            if stage.degenerate { 0 } else { stage.width },
            &format!("Layer {layer} cumulative explained variance"),
        );
        write_file(&dir.join(format!("variance_layer{layer}.svg")), &svg)?;
        if let Some(h) = &stage.history {
            let spec = plot_spec(cfg, format!("Training before sizing layer {layer}"));
            write_history(dir, &format!("history_stage{layer}"), h, &spec)?;
        }
    }
    let spec = plot_spec(cfg, "Final training".to_string());
    write_history(dir, "history_final", &result.final_history, &spec)?;
    write_file(&dir.join("metrics.json"), metrics)
}

pub(super) fn nas(a: &NasArgs, given: &Given, out: &mut dyn Write) -> Result<()> {
    let cfg = nas_config(a, given)?;
    let search = &cfg.search;
    let full = load_csv(&a.train, &a.label)?;
    check_head(search.output_neurons, full.n_classes())?;

    let (train_ds, val_x, val_y) = match &a.val {
        Some(path) => {
            let val = load_csv(path, &a.label)?;
            if val.feature_names != full.feature_names {
                return Err(Error::invalid(
                    "validation CSV columns differ from the training CSV",
                ));
            }
            let y = align_labels(&val, &full.class_names)?;
            (full.clone(), Some(val.x), Some(y))
        }
        None if cfg.nas.val_fraction > 0.0 => {
            let (tr, va) = stratified_split(&full, cfg.nas.val_fraction, search.train.seed)?;
            (tr, Some(va.x), Some(va.y))
        }
        None => (full.clone(), None, None),
    };
    let validation = val_x.as_ref().zip(val_y.as_deref());
    let data = data_init(
        &train_ds.x,
        &train_ds.y,
        validation,
        search.normalize,
        search.unit,
    )?;

    let result = build(search, &data)?;
    let score = |x: &Matrix, y: &[usize]| -> Result<f64> {
        let pred = result.model.predict(x)?;
        Ok(accuracy(&pred, &encode_targets(y, search.output_neurons)?))
    };
    let train_acc = score(&data.x_train, &data.y_train)?;
    let val_acc = match (&data.x_val, &data.y_val) {
        (Some(x), Some(y)) => Some(score(x, y)?),
        _ => None,
    };
    let metrics = serde_json::json!({
        "widths": result.widths,
        "train_accuracy": train_acc,
        "val_accuracy": val_acc,
        "best_epoch": result.final_history.best_epoch,
        "stopped_early": result.final_history.stopped_early,
    });
    let metrics = format!(
        "{}\n",
        serde_json::to_string_pretty(&metrics).expect("plain json")
    );

    let model = ModelFile {
        network: result.model.clone(),
        scaler: data.scaler.clone(),
        class_names: full.class_names.clone(),
    };
    let text = model.to_text()?;
    write_nas_reports(&a.report_dir, &cfg, &result, &metrics)?;
    write_file(&a.out_model, &text)?;

    let mut summary = result.widths_table();
    summary.push_str(&format!("training accuracy: {train_acc:.6}\n"));
    if let Some(v) = val_acc {
        summary.push_str(&format!("validation accuracy: {v:.6}\n"));
    }
    emit(out, &summary)
}

pub(super) fn report(a: &ReportArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = RunConfig::load_or_default(a.config.as_deref())?;
    let model = ModelFile::load(&a.model)?;
    let ds = load_csv(&a.data, &a.label)?;
    let net = &model.network;
    if ds.x.cols() != net.input_dim() {
        return Err(Error::invalid(format!(
            "model expects {} features but {} has {}",
            net.input_dim(),
            a.data.display(),
            ds.x.cols()
        )));
    }
    let history = a
        .history
        .as_deref()
        .map(|p| {
            let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            TrainingHistory::from_json(&text)
        })
        .transpose()?;

    let task = task_for(net.output_dim());
    let (names, y) = if model.class_names.is_empty() {
        let mut names = ds.class_names.clone();
        let width = if task == Task::Binary {
            2
        } else {
            net.output_dim()
        };
        for i in names.len()..width {
            names.push(format!("class {i}"));
        }
        (names, ds.y.clone())
    } else {
        (
            model.class_names.clone(),
            align_labels(&ds, &model.class_names)?,
        )
    };
    check_head(net.output_dim(), names.len())?;

    let x = match &model.scaler {
        Some(s) => s.apply(&ds.x)?,
        None => ds.x.clone(),
    };
    let pred = net.predict_classes(&x, task)?;
    let cm = confusion_matrix(&y, &pred, &names)?;
    let table = cm.text_table();
    let svg = render_confusion(&cm, &a.title);
    let plot = history
        .map(|h| render_history(&h, &plot_spec(&cfg, "Training history".to_string())))
        .transpose()?;

    fs::create_dir_all(&a.out_dir).map_err(|e| Error::io(&a.out_dir, e))?;
    write_file(&a.out_dir.join("confusion.txt"), &table)?;
    write_file(&a.out_dir.join("confusion.svg"), &svg)?;
    if let Some(p) = plot {
        write_file(&a.out_dir.join("history.svg"), &p)?;
    }
    emit(out, &table)
}
