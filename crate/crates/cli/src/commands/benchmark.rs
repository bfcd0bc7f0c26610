use anyhow::{anyhow, Result};
use genbayes_core::causal::train_causal;
use genbayes_core::dgp::fmt_f64;
use genbayes_core::metrics::{evaluate, MetricsReport};
use genbayes_core::{stats, Rng};

use super::evaluate::{eval_config, eval_keys};
use super::generate::dgp;
use super::train::{causal_keys, causal_setup};
use super::write_lines;
use crate::config::{key, Key, Settings};

pub const BENCHMARK: &str = "benchmark.csv";
pub const AGGREGATE: &str = "aggregate.csv";

/// Per-replication metric columns, in output order.
pub const METRICS: [&str; 13] = [
    "ate_true",
    "ate_est",
    "ate_abs_err",
    "ate_sq_err",
    "cate_rmse",
    "baseline_cate_rmse",
    "beats_baseline",
    "cate_corr",
    "coverage",
    "avg_interval_length",
    "crossing_rate",
    "pit_ks",
    "loss_total",
];

pub fn keys() -> Vec<Key> {
    let mut k = vec![
        key("reps", "20", "Replications"),
        key("n", "1000", "Units per replication"),
        key("sigma", "1", "Outcome noise standard deviation"),
        key("p", "3", "Covariates; columns past the third are noise"),
        key("tau-scale", "standardized", "Effect entering the outcome: standardized or raw"),
        key("seed", "0", "Master seed; replication seeds are derived from it"),
    ];
    k.extend(causal_keys());
    k.extend(eval_keys());
    k
}

/// Seeds of replication `rep` for data, training and evaluation.
pub fn rep_seeds(seed: u64, rep: usize) -> [u64; 3] {
    let r = 3 * rep as u64;
    [Rng::sub_seed(seed, r), Rng::sub_seed(seed, r + 1), Rng::sub_seed(seed, r + 2)]
}

fn metric_values(r: &MetricsReport) -> Vec<f64> {
    let fields = r.numeric_fields();
    METRICS
        .iter()
        .map(|&name| match name {
            "beats_baseline" => f64::from(u8::from(r.cate_rmse < r.baseline_cate_rmse)),
            _ => fields.iter().find(|(k, _)| *k == name).map_or(f64::NAN, |(_, v)| *v),
        })
        .collect()
}

pub fn run(s: &mut Settings) -> Result<()> {
    let reps = s.count("reps", 1)?;
    let dgp = dgp(s)?;
    let seed: u64 = s.get("seed")?;
    let (arch, base_train, weights) = causal_setup(s, seed)?;
    let base_eval = eval_config(s, seed)?;
    s.write()?;

    let mut rows = Vec::with_capacity(reps);
    let mut ok: Vec<Vec<f64>> = Vec::new();
    let mut failed = 0;
    for rep in 0..reps {
        let [data_seed, train_seed, eval_seed] = rep_seeds(seed, rep);
        let outcome = dgp.generate(data_seed).and_then(|ds| {
            let train = genbayes_core::nn::TrainConfig { seed: train_seed, ..base_train.clone() };
            let net = train_causal(&ds.observational(), &arch, &train, &weights)?;
            let eval = genbayes_core::metrics::EvalConfig { seed: eval_seed, ..base_eval };
            evaluate(&ds, &net, &eval)
        });
        let prefix = format!("{rep},{data_seed},{train_seed},{eval_seed}");
        match outcome {
            Ok(report) => {
                let v = metric_values(&report);
                let cells: Vec<String> = v.iter().map(|&x| fmt_f64(x)).collect();
                rows.push(format!("{prefix},ok,{},", cells.join(",")));
                println!(
                    "rep {rep:>3}  ate err {:+.4}  coverage {:.3}  corr {:.3}  rmse {:.3} (baseline {:.3})",
                    report.ate_est - report.ate_true,
                    report.coverage,
                    report.cate_corr,
                    report.cate_rmse,
                    report.baseline_cate_rmse
                );
                ok.push(v);
            }
            Err(e) => {
                failed += 1;
                let msg = e.to_string().replace([',', '\n', '"'], ";");
                rows.push(format!("{prefix},failed,{}{msg}", ",".repeat(METRICS.len())));
                println!("rep {rep:>3}  failed: {e}");
            }
        }
    }

    let header = format!("rep,data_seed,train_seed,eval_seed,status,{},error", METRICS.join(","));
    write_lines(&s.out_file(BENCHMARK), &header, rows)?;
    let agg = METRICS.iter().enumerate().map(|(j, name)| {
        let col: Vec<f64> = ok.iter().map(|v| v[j]).collect();
        format!("{name},{},{}", fmt_f64(stats::mean(&col)), fmt_f64(stats::variance(&col).sqrt()))
    });
    write_lines(&s.out_file(AGGREGATE), "metric,mean,sd", agg)?;
    println!("wrote {}", s.out.display());

    if failed > 0 {
        return Err(anyhow!("{failed} of {reps} replications failed"));
    }
    Ok(())
}
