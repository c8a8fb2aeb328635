//! Training loop and checkpoint-directory layout.
//!
//! A training run writes into its output directory:
//!
//! * `config.txt`: canonical config with the resolved `vocab_size`
//! * `vocab.txt`: one token per line in id order
//! * `metrics.csv`: `epoch,train_loss,dev_accuracy,dev_macro_f1,dev_max_attention`
//! * `timing.csv`: `epoch,wall_seconds`
//! * `best.ckpt` (highest dev accuracy, earliest on ties) and `final.ckpt`
//!
//! Row 0 of the metrics log describes the untrained model. The metrics log
//! holds only seed-determined values, so repeated runs produce identical
//! files; wall-clock time lives in `timing.csv`.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;

use super::config::TrainConfig;
use super::data::{encode, load_tsv, Example, Vocab};
use super::metrics::{evaluate_predictions, EvalReport};
use crate::error::{QatError, Result};
use crate::model::{argmax_rows, Model, StepKey};
use crate::nn::rng::stream;
use crate::nn::{adamw_step, checkpoint, OptimState};

pub const METRICS_HEADER: &str = "epoch,train_loss,dev_accuracy,dev_macro_f1,dev_max_attention";

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_accuracy: f64,
    pub dev_macro_f1: f64,
    pub dev_max_attention: f64,
    pub wall_seconds: f64,
}

impl EpochRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{:?},{:?},{:?},{:?}",
            self.epoch, self.train_loss, self.dev_accuracy, self.dev_macro_f1, self.dev_max_attention
        )
    }
}

pub struct TrainOutcome {
    pub final_model: Model,
    pub best_model: Model,
    pub best_epoch: usize,
    pub log: Vec<EpochRecord>,
}

impl TrainOutcome {
    pub fn metrics_csv(&self) -> String {
        let mut out = String::from(METRICS_HEADER);
        out.push('\n');
        for r in &self.log {
            writeln!(out, "{}", r.csv_row()).expect("write to String");
        }
        out
    }
}

/// Evaluation-mode predictions, mean loss and the largest attention weight.
pub struct Evaluation {
    pub preds: Vec<usize>,
    pub mean_loss: f64,
    pub max_attention: f64,
    pub report: EvalReport,
}

pub fn evaluate(model: &Model, data: &[Example], batch_size: usize) -> Result<Evaluation> {
    let n_classes = model.config().n_classes;
    let mut preds = Vec::with_capacity(data.len());
    let mut loss_sum = 0.0;
    let mut max_attention = 0.0f64;
    for chunk in data.chunks(batch_size.max(1)) {
        let ids: Vec<Vec<usize>> = chunk.iter().map(|e| e.tokens.clone()).collect();
        let labels: Vec<usize> = chunk.iter().map(|e| e.label).collect();
        let pass = model.forward(&ids, Some(&labels), None)?;
        loss_sum += pass.loss_value().expect("labels given") * chunk.len() as f64;
        preds.extend(argmax_rows(pass.logits_value()));
        for a in &pass.diagnostics.attn {
            max_attention = a.iter().fold(max_attention, |m, &v| m.max(v));
        }
    }
    let gold: Vec<usize> = data.iter().map(|e| e.label).collect();
    let report = evaluate_predictions(&preds, &gold, n_classes)?;
    Ok(Evaluation {
        preds,
        mean_loss: if data.is_empty() {
            0.0
        } else {
            loss_sum / data.len() as f64
        },
        max_attention,
        report,
    })
}

fn check_data(data: &[Example], vocab_size: usize, what: &'static str) -> Result<()> {
    if data.is_empty() {
        return Err(QatError::Empty(what));
    }
    for e in data {
        if let Some(&id) = e.tokens.iter().find(|&&id| id >= vocab_size) {
            return Err(QatError::TokenOutOfRange { id, vocab_size });
        }
    }
    Ok(())
}

/// Trains from `config.model` initial parameters. `on_epoch` sees every
/// record as soon as it is produced.
pub fn train(
    config: &TrainConfig,
    train_data: &[Example],
    dev_data: &[Example],
    mut on_epoch: impl FnMut(&EpochRecord, &Model, bool) -> Result<()>,
) -> Result<TrainOutcome> {
    config.validate()?;
    let vocab_size = config.model.vocab_size;
    check_data(train_data, vocab_size, "training data")?;
    check_data(dev_data, vocab_size, "dev data")?;

    let mut model = Model::new(config.model.clone())?;
    let mut opt = OptimState::new(model.params(), config.optim);
    let seed = config.model.seed;
    let mut log = Vec::with_capacity(config.epochs + 1);

    let start = Instant::now();
    let initial_train = evaluate(&model, train_data, config.batch_size)?;
    let initial_dev = evaluate(&model, dev_data, config.batch_size)?;
    let record = EpochRecord {
        epoch: 0,
        train_loss: initial_train.mean_loss,
        dev_accuracy: initial_dev.report.accuracy,
        dev_macro_f1: initial_dev.report.macro_f1,
        dev_max_attention: initial_dev.max_attention,
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    on_epoch(&record, &model, false)?;
    log.push(record);

    let mut best: Option<(usize, f64, crate::nn::ParamSet)> = None;
    let mut order: Vec<usize> = (0..train_data.len()).collect();
    for epoch in 1..=config.epochs {
        let start = Instant::now();
        order.shuffle(&mut stream(seed, [0x5eed, epoch as u64, 0]));
        let mut loss_sum = 0.0;
        for (b, batch) in order.chunks(config.batch_size).enumerate() {
            let ids: Vec<Vec<usize>> = batch.iter().map(|&i| train_data[i].tokens.clone()).collect();
            let labels: Vec<usize> = batch.iter().map(|&i| train_data[i].label).collect();
            let key = StepKey {
                epoch: epoch as u64,
                batch: b as u64,
            };
            let pass = model.forward(&ids, Some(&labels), Some(key))?;
            loss_sum += pass.loss_value().expect("labels given") * batch.len() as f64;
            let grads = pass.grads()?;
            adamw_step(model.params_mut(), &grads, &mut opt)?;
        }
        let dev = evaluate(&model, dev_data, config.batch_size)?;
        let record = EpochRecord {
            epoch,
            train_loss: loss_sum / train_data.len() as f64,
            dev_accuracy: dev.report.accuracy,
            dev_macro_f1: dev.report.macro_f1,
            dev_max_attention: dev.max_attention,
            wall_seconds: start.elapsed().as_secs_f64(),
        };
        let improved = best.as_ref().is_none_or(|(_, acc, _)| dev.report.accuracy > *acc);
        if improved {
            best = Some((epoch, dev.report.accuracy, model.params().clone()));
        }
        on_epoch(&record, &model, improved)?;
        log.push(record);
    }

    let (best_epoch, best_params) = match best {
        Some((e, _, p)) => (e, p),
        None => (0, model.params().clone()),
    };
    let best_model = Model::from_params(config.model.clone(), best_params)?;
    Ok(TrainOutcome {
        final_model: model,
        best_model,
        best_epoch,
        log,
    })
}

/// Paths of a training output directory.
#[derive(Debug, Clone)]
pub struct RunDir {
    pub root: PathBuf,
}

impl RunDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    /// Directory holding `ckpt` (config and vocab sit next to checkpoints).
    pub fn of_checkpoint(ckpt: &Path) -> Self {
        Self::new(ckpt.parent().map(Path::to_path_buf).unwrap_or_default())
    }

    pub fn config(&self) -> PathBuf {
        self.root.join("config.txt")
    }
    pub fn vocab(&self) -> PathBuf {
        self.root.join("vocab.txt")
    }
    pub fn metrics(&self) -> PathBuf {
        self.root.join("metrics.csv")
    }
    pub fn timing(&self) -> PathBuf {
        self.root.join("timing.csv")
    }
    pub fn best(&self) -> PathBuf {
        self.root.join("best.ckpt")
    }
    pub fn final_ckpt(&self) -> PathBuf {
        self.root.join("final.ckpt")
    }
}

fn append_line(path: &Path, line: &str) -> Result<()> {
    let mut f = std::fs::OpenOptions::new()
        .append(true)
        .create(true)
        .open(path)
        .map_err(|e| QatError::io(path, e))?;
    writeln!(f, "{line}").map_err(|e| QatError::io(path, e))
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content).map_err(|e| QatError::io(path, e))
}

/// Builds the vocabulary from the training texts, trains, and writes the
/// run directory.
pub fn train_files(config: &TrainConfig, train_tsv: &Path, dev_tsv: &Path, out: &Path) -> Result<TrainOutcome> {
    let train_rows = load_tsv(train_tsv)?;
    let dev_rows = load_tsv(dev_tsv)?;
    if train_rows.is_empty() {
        return Err(QatError::Empty("training data"));
    }
    let vocab = Vocab::build(train_rows.iter().map(|r| r.text.as_str()), config.max_vocab)?;
    let mut config = config.clone();
    if config.fixed_vocab && config.model.vocab_size != vocab.len() {
        return Err(QatError::Config(format!(
            "config pins vocab_size={} but the training data yields {}",
            config.model.vocab_size,
            vocab.len()
        )));
    }
    config.model.vocab_size = vocab.len();
    config.fixed_vocab = true;
    let (l, c) = (config.model.seq_len, config.model.n_classes);
    let train_data = encode(&train_rows, &vocab, l, c, &train_tsv.display().to_string())?;
    let dev_data = encode(&dev_rows, &vocab, l, c, &dev_tsv.display().to_string())?;

    let dir = RunDir::new(out);
    std::fs::create_dir_all(out).map_err(|e| QatError::io(out, e))?;
    write_file(&dir.config(), &config.to_config_string())?;
    vocab.save(&dir.vocab())?;
    write_file(&dir.metrics(), &format!("{METRICS_HEADER}\n"))?;
    write_file(&dir.timing(), "epoch,wall_seconds\n")?;

    let outcome = train(&config, &train_data, &dev_data, |rec, model, improved| {
        append_line(&dir.metrics(), &rec.csv_row())?;
        append_line(&dir.timing(), &format!("{},{:.3}", rec.epoch, rec.wall_seconds))?;
        if improved {
            checkpoint::save(model.params(), &dir.best())?;
        }
        Ok(())
    })?;
    if !dir.best().exists() {
        checkpoint::save(outcome.best_model.params(), &dir.best())?;
    }
    checkpoint::save(outcome.final_model.params(), &dir.final_ckpt())?;
    Ok(outcome)
}

/// A trained model with its vocabulary and config, loaded from a checkpoint
/// inside a run directory.
pub struct Trained {
    pub model: Model,
    pub vocab: Vocab,
    pub config: TrainConfig,
}

impl Trained {
    pub fn load(ckpt: &Path) -> Result<Self> {
        let dir = RunDir::of_checkpoint(ckpt);
        let config = TrainConfig::load(&dir.config())?;
        let vocab = Vocab::load(&dir.vocab())?;
        if vocab.len() != config.model.vocab_size {
            return Err(QatError::Config(format!(
                "vocab.txt has {} entries, config says {}",
                vocab.len(),
                config.model.vocab_size
            )));
        }
        let params = checkpoint::load(ckpt)?;
        let model = Model::from_params(config.model.clone(), params)?;
        Ok(Self { model, vocab, config })
    }

    pub fn encode_file(&self, tsv: &Path) -> Result<Vec<Example>> {
        let rows = load_tsv(tsv)?;
        let m = &self.config.model;
        encode(&rows, &self.vocab, m.seq_len, m.n_classes, &tsv.display().to_string())
    }
}
