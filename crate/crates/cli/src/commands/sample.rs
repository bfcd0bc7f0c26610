use anyhow::{Context, Result};
use genbayes_core::dgp::fmt_f64;
use genbayes_core::metrics::CateModel;

use super::train::load_dataset;
use super::write_lines;
use crate::config::{derived, key, usage, Key, Settings};
use crate::model::SavedModel;

pub const SAMPLES: &str = "samples.csv";

pub fn keys() -> Vec<Key> {
    vec![
        derived("checkpoint", "Checkpoint written by `train`"),
        derived("data", "Dataset CSV whose units are sampled (causal and oracle checkpoints)"),
        key("m", "1000", "Posterior draws per unit"),
        key("seed", "0", "Random seed"),
        key("units", "all", "Sample only the first this many units"),
        key("y-obs", "0", "Comma-separated observation for engine checkpoints"),
    ]
}

pub fn run(s: &mut Settings) -> Result<()> {
    let m = s.count("m", 1)?;
    let seed: u64 = s.get("seed")?;
    let units = match s.raw("units") {
        Some("all") | None => None,
        Some(_) => Some(s.count("units", 1)?),
    };
    let y_obs: Vec<f64> = s.list("y-obs")?;
    let model = SavedModel::load(&s.path("checkpoint")?)?;
    s.write()?;

    let path = s.out_file(SAMPLES);
    let cate: &dyn CateModel = match &model {
        SavedModel::Causal { net } => net,
        SavedModel::Oracle { oracle } => oracle,
        SavedModel::Engine { map, .. } => {
            let draws = map.posterior_sample(&y_obs, m, seed).context("sampling the posterior engine")?;
            let k = draws.cols();
            let header = std::iter::once("draw_id".to_owned())
                .chain((1..=k).map(|j| format!("theta{j}")))
                .collect::<Vec<_>>()
                .join(",");
            let rows = (0..draws.rows()).map(|d| {
                std::iter::once(d.to_string())
                    .chain(draws.row(d).iter().map(|&v| fmt_f64(v)))
                    .collect::<Vec<_>>()
                    .join(",")
            });
            write_lines(&path, &header, rows)?;
            println!("wrote {m} draws to {}", path.display());
            return Ok(());
        }
    };

    let ds = load_dataset(s)?;
    let keep = units.unwrap_or(ds.n());
    if keep > ds.n() {
        return Err(usage(format!("`--units` is {keep} but the dataset has {} units", ds.n())));
    }
    // unit streams are seeded by index, so truncating equals sampling a prefix
    let mut posts = cate.posteriors(&ds, m, seed)?;
    posts.truncate(keep);
    let rows = posts.iter().flat_map(|p| {
        p.draws
            .iter()
            .enumerate()
            .map(move |(d, &v)| format!("{},{d},{}", p.unit, fmt_f64(v)))
    });
    write_lines(&path, "unit_id,draw_id,tau_draw", rows)?;
    println!("wrote {} x {m} draws to {}", posts.len(), path.display());
    Ok(())
}
