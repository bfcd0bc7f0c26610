use std::io::Write;

use anyhow::{Context, Result};
use genbayes_core::causal::{
    causal_train_config, train_causal_with, CausalArch, LossComponents, LossWeights, Modulation, TrainingGate,
};
use genbayes_core::dgp::{fmt_f64, load_csv, CausalDataset, ConjugateModel};
use genbayes_core::engine::{build_sim_table, engine_train_config, train_inverse_map_with, ArchConfig, BaseDist, HeadLoss, TauEmbedding};
use genbayes_core::metrics::OracleModel;
use genbayes_core::nn::{Activation, OptimizerKind, Schedule, TrainConfig};
use genbayes_core::Rng;

use super::create;
use crate::config::{derived, key, usage, Key, Settings};
use crate::model::SavedModel;

pub const CHECKPOINT: &str = "checkpoint.json";
pub const LOSS_TRACE: &str = "loss_trace.csv";
pub const CAUSAL_TRACE_HEADER: &str = "epoch,l_z,l_q,l_mse,l_cross,total,clamped";

/// Optimizer and causal-network settings, shared with `benchmark`.
pub fn causal_keys() -> Vec<Key> {
    vec![
        derived("epochs", "Training epochs [default: 2000 causal, 30 engine]"),
        derived("batch-size", "Minibatch size [default: 128 causal, 512 engine]"),
        derived("learning-rate", "Base learning rate [default: 1e-3 causal, 5e-3 engine]"),
        derived("schedule", "Learning-rate schedule: constant or cosine [default: constant causal, cosine engine]"),
        key("lr-floor", "0.01", "Final fraction of the base rate under the cosine schedule"),
        key("optimizer", "adam", "sgd or adam"),
        key("beta1", "0.9", "Adam first-moment decay"),
        key("beta2", "0.999", "Adam second-moment decay"),
        key("eps", "1e-8", "Adam denominator offset"),
        key("grad-clip", "none", "Global gradient-norm clip"),
        key("w-z", "1", "Weight of the propensity cross-entropy"),
        key("w-q", "1", "Weight of the pinball loss"),
        key("w-mse", "1", "Weight of the mean-head squared error"),
        key("w-cross", "1", "Weight of the quantile-crossing penalty"),
        key("embed-dim", "32", "Cosine features of the quantile level"),
        key("width", "32", "Width of the outcome blocks"),
        key("prop-width", "8", "Hidden width of the propensity block"),
        key("activation", "relu", "Hidden activation: relu, tanh, sigmoid or identity"),
        key("modulation", "embedded", "Quantile modulation: embedded or scalar"),
        key("training-gate", "treatment", "Gate during training: treatment or propensity"),
    ]
}

pub fn keys() -> Vec<Key> {
    let mut k = vec![
        key("mode", "causal", "causal, engine or oracle"),
        derived("data", "Dataset CSV (causal and oracle modes)"),
        key("seed", "0", "Random seed"),
    ];
    k.extend(causal_keys());
    k.extend([
        key("model", "conjugate", "Engine simulator (conjugate)"),
        key("sims", "100000", "Engine simulation table rows"),
        key("prior-mean", "0", "Conjugate prior mean"),
        key("prior-sd", "1", "Conjugate prior standard deviation"),
        key("like-sd", "1", "Conjugate likelihood standard deviation"),
        key("obs", "1", "Observations per simulated data set"),
        key("fixed-tau", "false", "Keep each row's tau fixed instead of redrawing every epoch"),
        key("head-loss", "quantile", "Engine head loss: quantile or l2"),
        derived("sigma", "Outcome noise standard deviation (oracle mode)"),
    ]);
    k
}

fn parse_with<T>(s: &Settings, name: &str, f: impl Fn(&str) -> Option<T>, expected: &str) -> Result<T> {
    let v: String = s.get(name)?;
    f(&v).ok_or_else(|| usage(format!("invalid value `{v}` for `--{name}`: expected {expected}")))
}

fn fill_defaults(s: &mut Settings, base: &TrainConfig) {
    s.set_default("epochs", base.epochs);
    s.set_default("batch-size", base.batch_size);
    s.set_default("learning-rate", base.learning_rate);
    s.set_default(
        "schedule",
        match base.schedule {
            Schedule::Constant => "constant",
            Schedule::Cosine { .. } => "cosine",
        },
    );
}

fn train_config(s: &Settings, seed: u64) -> Result<TrainConfig> {
    let optimizer = match s.get::<String>("optimizer")?.as_str() {
        "sgd" => OptimizerKind::Sgd,
        "adam" => OptimizerKind::Adam {
            beta1: s.get("beta1")?,
            beta2: s.get("beta2")?,
            eps: s.get("eps")?,
        },
        o => return Err(usage(format!("invalid value `{o}` for `--optimizer`: expected sgd or adam"))),
    };
    let floor: f64 = s.get("lr-floor")?;
    let schedule = parse_with(
        s,
        "schedule",
        |v| match v {
            "constant" => Some(Schedule::Constant),
            "cosine" => Some(Schedule::Cosine { floor }),
            _ => None,
        },
        "constant or cosine",
    )?;
    let cfg = TrainConfig {
        learning_rate: s.positive("learning-rate")?,
        batch_size: s.count("batch-size", 1)?,
        epochs: s.count("epochs", 1)?,
        optimizer,
        seed,
        grad_clip: s.opt("grad-clip")?,
        schedule,
    };
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    Ok(cfg)
}

/// Resolves the causal architecture, optimizer and loss weights.
pub fn causal_setup(s: &mut Settings, seed: u64) -> Result<(CausalArch, TrainConfig, LossWeights)> {
    fill_defaults(s, &causal_train_config(seed));
    let arch = CausalArch {
        embed_dim: s.count("embed-dim", 1)?,
        width: s.count("width", 1)?,
        prop_width: s.count("prop-width", 1)?,
        activation: s.get::<Activation>("activation")?,
        modulation: parse_with(
            s,
            "modulation",
            |v| match v {
                "embedded" => Some(Modulation::Embedded),
                "scalar" => Some(Modulation::Scalar),
                _ => None,
            },
            "embedded or scalar",
        )?,
        training_gate: parse_with(
            s,
            "training-gate",
            |v| match v {
                "treatment" => Some(TrainingGate::Treatment),
                "propensity" => Some(TrainingGate::Propensity),
                _ => None,
            },
            "treatment or propensity",
        )?,
    };
    let weights = LossWeights {
        w_z: s.non_negative("w-z")?,
        w_q: s.non_negative("w-q")?,
        w_mse: s.non_negative("w-mse")?,
        w_cross: s.non_negative("w-cross")?,
    };
    weights.validate().map_err(|e| usage(e.to_string()))?;
    Ok((arch, train_config(s, seed)?, weights))
}

pub fn causal_trace_row(epoch: usize, c: &LossComponents) -> String {
    format!(
        "{epoch},{},{},{},{},{},{}",
        fmt_f64(c.l_z),
        fmt_f64(c.l_q),
        fmt_f64(c.l_mse),
        fmt_f64(c.l_cross),
        fmt_f64(c.total),
        c.clamped
    )
}

pub(crate) fn load_dataset(s: &Settings) -> Result<CausalDataset> {
    let path = s.path("data")?;
    load_csv(&path).with_context(|| format!("loading dataset {}", path.display()))
}

fn train_causal_mode(s: &mut Settings, seed: u64) -> Result<SavedModel> {
    let (arch, cfg, weights) = causal_setup(s, seed)?;
    let ds = load_dataset(s)?.observational();
    s.write()?;

    let path = s.out_file(LOSS_TRACE);
    let mut trace = create(&path)?;
    writeln!(trace, "{CAUSAL_TRACE_HEADER}")?;
    let mut io_err = None;
    let result = train_causal_with(&ds, &arch, &cfg, &weights, |epoch, c| {
        if io_err.is_none() {
            if let Err(e) = writeln!(trace, "{}", causal_trace_row(epoch, c)) {
                io_err = Some(e);
            }
        }
    });
    trace.flush().with_context(|| format!("writing {}", path.display()))?;
    if let Some(e) = io_err {
        return Err(e).with_context(|| format!("writing {}", path.display()));
    }
    let net = result.context("training failed; the loss trace up to the failure was kept")?;
    if let Some(last) = net.loss_trace.last() {
        println!("final loss      {:.6} (l_z {:.4}, l_q {:.4}, l_mse {:.4}, l_cross {:.4})", last.total, last.l_z, last.l_q, last.l_mse, last.l_cross);
    }
    Ok(SavedModel::Causal { net })
}

fn train_engine_mode(s: &mut Settings, seed: u64) -> Result<SavedModel> {
    let model_name: String = s.get("model")?;
    if model_name != "conjugate" {
        return Err(usage(format!("invalid value `{model_name}` for `--model`: expected conjugate")));
    }
    let model = ConjugateModel {
        prior_mean: s.get("prior-mean")?,
        prior_sd: s.positive("prior-sd")?,
        like_sd: s.positive("like-sd")?,
        obs: s.count("obs", 1)?,
    };
    let rows = s.count("sims", 2)?;
    let head_loss = s.get::<HeadLoss>("head-loss")?;
    let arch = ArchConfig {
        resample_tau: !s.flag("fixed-tau")?,
        loss: head_loss,
        embedding: TauEmbedding::Cosine { dim: s.count("embed-dim", 1)? },
        ..ArchConfig::default()
    };
    fill_defaults(s, &engine_train_config(seed));
    let cfg = train_config(s, Rng::sub_seed(seed, 1))?;
    s.write()?;

    let table = build_sim_table(&model, rows, BaseDist::Uniform, 1, Rng::sub_seed(seed, 0))?;
    let path = s.out_file(LOSS_TRACE);
    let mut trace = create(&path)?;
    writeln!(trace, "epoch,loss")?;
    let mut io_err = None;
    let result = train_inverse_map_with(&table, &arch, &cfg, |epoch, loss| {
        if io_err.is_none() {
            if let Err(e) = writeln!(trace, "{epoch},{}", fmt_f64(loss)) {
                io_err = Some(e);
            }
        }
    });
    trace.flush().with_context(|| format!("writing {}", path.display()))?;
    if let Some(e) = io_err {
        return Err(e).with_context(|| format!("writing {}", path.display()));
    }
    let map = result.context("training failed; the loss trace up to the failure was kept")?;
    if let Some(last) = map.loss_trace.last() {
        println!("final loss      {last:.6}");
    }
    Ok(SavedModel::Engine { map, model })
}

fn oracle_mode(s: &mut Settings) -> Result<SavedModel> {
    let sigma = s.non_negative("sigma")?;
    let ds = load_dataset(s)?;
    s.write()?;
    let mut oracle = OracleModel::from_dataset(&ds).context("oracle mode needs a dataset with ground truth")?;
    oracle.sigma = sigma;
    Ok(SavedModel::Oracle { oracle })
}

pub fn run(s: &mut Settings) -> Result<()> {
    let seed: u64 = s.get("seed")?;
    let saved = match s.get::<String>("mode")?.as_str() {
        "causal" => train_causal_mode(s, seed)?,
        "engine" => train_engine_mode(s, seed)?,
        "oracle" => oracle_mode(s)?,
        o => return Err(usage(format!("invalid value `{o}` for `--mode`: expected causal, engine or oracle"))),
    };
    saved.save(&s.out_file(CHECKPOINT))?;
    println!("wrote {}", s.out.display());
    Ok(())
}
