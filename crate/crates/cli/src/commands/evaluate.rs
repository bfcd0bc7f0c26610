use std::fs;

use anyhow::{Context, Result};
use genbayes_core::causal::{predict, Gate, TrainingGate};
use genbayes_core::dgp::{fmt_f64, CausalDataset};
use genbayes_core::metrics::{conjugate_report, evaluate_detailed, CateModel, EvalConfig, Evaluation, MetricsReport};

use super::train::load_dataset;
use super::write_lines;
use crate::config::{derived, key, usage, Key, Settings};
use crate::model::SavedModel;

pub const REPORT_TXT: &str = "report.txt";
pub const REPORT_CSV: &str = "report.csv";
pub const PREDICTIONS: &str = "predictions.csv";

pub fn eval_keys() -> Vec<Key> {
    vec![
        key("m", "1000", "Posterior draws per unit"),
        key("level", "0.95", "Credible level"),
        key("grid", "99", "Quantile grid size for the average effect"),
    ]
}

pub fn keys() -> Vec<Key> {
    let mut k = vec![
        derived("checkpoint", "Checkpoint written by `train`"),
        derived("data", "Dataset CSV with ground truth (causal and oracle checkpoints)"),
        key("seed", "0", "Random seed"),
    ];
    k.extend(eval_keys());
    k.extend([
        key("holdout", "500", "Held-out observations for engine calibration"),
        key("y-points", "-2,0,2", "Observations at which engine moments are compared"),
    ]);
    k
}

pub fn eval_config(s: &Settings, seed: u64) -> Result<EvalConfig> {
    let level: f64 = s.get("level")?;
    if !(level > 0.0 && level < 1.0) {
        return Err(usage(format!("`--level` must lie in (0, 1), got {level}")));
    }
    Ok(EvalConfig {
        m: s.count("m", 100)?,
        level,
        seed,
        grid: s.count("grid", 1)?,
    })
}

/// Per-unit point predictions next to the effect summaries.
fn predictions(model: &SavedModel, ds: &CausalDataset, ev: &Evaluation) -> Result<Vec<String>> {
    let n = ds.n();
    let truth = ds.truth()?;
    let (mean, q50, pi) = match model {
        SavedModel::Causal { net } => {
            let gate = match net.arch.training_gate {
                TrainingGate::Treatment => Gate::PerUnit(ds.z_f64()),
                TrainingGate::Propensity => Gate::Propensity,
            };
            let p = predict(net, &ds.x, &vec![0.5; n], &gate)?;
            (p.y_mean, p.y_quantile, p.z_prob)
        }
        SavedModel::Oracle { oracle } => {
            let mean = (0..n).map(|i| truth.mu[i] + if ds.z[i] { truth.tau[i] } else { 0.0 }).collect();
            (mean, oracle.outcome_quantiles(ds, &vec![0.5; n])?, truth.pi.clone())
        }
        SavedModel::Engine { .. } => unreachable!("engine checkpoints have no unit predictions"),
    };
    Ok(ev
        .units
        .iter()
        .enumerate()
        .map(|(i, u)| {
            [mean[i], q50[i], pi[i], u.cate_mean, u.ci_lo, u.ci_hi]
                .iter()
                .fold(i.to_string(), |acc, &v| acc + "," + &fmt_f64(v))
        })
        .collect())
}

/// Scores a causal or oracle checkpoint.
pub fn evaluate_causal(model: &SavedModel, ds: &CausalDataset, cfg: &EvalConfig) -> Result<(Evaluation, Vec<String>)> {
    let cate: &dyn CateModel = match model {
        SavedModel::Causal { net } => net,
        SavedModel::Oracle { oracle } => oracle,
        SavedModel::Engine { .. } => return Err(usage("engine checkpoints are scored without a dataset")),
    };
    let ev = evaluate_detailed(ds, cate, cfg)?;
    let rows = predictions(model, ds, &ev)?;
    Ok((ev, rows))
}

fn write_text(path: &std::path::Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn run(s: &mut Settings) -> Result<()> {
    let seed: u64 = s.get("seed")?;
    let cfg = eval_config(s, seed)?;
    let holdout = s.count("holdout", 2)?;
    let points: Vec<f64> = s.list("y-points")?;
    let model = SavedModel::load(&s.path("checkpoint")?)?;

    if let SavedModel::Engine { map, model: sim } = &model {
        s.write()?;
        let pts: Vec<Vec<f64>> = points.iter().map(|&y| vec![y; sim.obs]).collect();
        let rep = conjugate_report(map, sim, &pts, cfg.m, holdout, seed)?;
        let text = rep.to_text();
        write_text(&s.out_file(REPORT_TXT), &text)?;
        let (keys, vals): (Vec<&str>, Vec<&str>) = text.lines().filter_map(|l| l.split_once(" = ")).unzip();
        write_text(&s.out_file(REPORT_CSV), &format!("{}\n{}\n", keys.join(","), vals.join(",")))?;
        print!("{text}");
        return Ok(());
    }

    let ds = load_dataset(s)?;
    s.write()?;
    let (ev, rows) = evaluate_causal(&model, &ds, &cfg)?;
    let r = &ev.report;
    write_text(&s.out_file(REPORT_TXT), &r.to_text())?;
    write_text(&s.out_file(REPORT_CSV), &format!("{}\n{}\n", MetricsReport::csv_header(), r.csv_row()))?;
    write_lines(
        &s.out_file(PREDICTIONS),
        "unit_id,y_hat_mean,y_hat_q50,pi_hat,cate_mean,ci_lo,ci_hi",
        rows,
    )?;
    println!("ate             {:.4} (true {:.4})", r.ate_est, r.ate_true);
    println!("cate rmse       {:.4} (linear baseline {:.4})", r.cate_rmse, r.baseline_cate_rmse);
    println!("cate corr       {:.4}", r.cate_corr);
    println!("coverage        {:.4} at level {}", r.coverage, r.level);
    println!("crossing rate   {:.4}", r.crossing_rate);
    println!("wrote {}", s.out.display());
    Ok(())
}

