use anyhow::Result;
use genbayes_core::dgp::{fmt_f64, save_csv, true_ate, true_ate_raw, CausalDgp, TauScale};
use genbayes_core::stats;

use super::write_lines;
use crate::config::{key, Key, Settings};

pub const DATASET: &str = "dataset.csv";
pub const TRUTH: &str = "truth.csv";
pub const HISTOGRAMS: &str = "histograms.csv";

pub fn keys() -> Vec<Key> {
    vec![
        key("n", "1000", "Number of units"),
        key("sigma", "1", "Outcome noise standard deviation"),
        key("p", "3", "Covariates; columns past the third are noise"),
        key("tau-scale", "standardized", "Effect entering the outcome: standardized or raw"),
        key("seed", "0", "Random seed"),
        key("bins", "20", "Histogram bins"),
    ]
}

pub(crate) fn dgp(s: &Settings) -> Result<CausalDgp> {
    Ok(CausalDgp {
        n: s.count("n", 1)?,
        sigma: s.non_negative("sigma")?,
        p: s.count("p", 3)?,
        tau_scale: s.get::<TauScale>("tau-scale")?,
    })
}

/// Equal-width bins over `[min, max]`; the last bin is closed.
pub fn histogram(v: &[f64], bins: usize) -> Vec<(f64, f64, usize)> {
    let (lo, hi) = v
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![0usize; bins];
    for &x in v {
        let b = (((x - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(b, c)| (lo + b as f64 * width, lo + (b + 1) as f64 * width, c))
        .collect()
}

pub fn run(s: &mut Settings) -> Result<()> {
    let dgp = dgp(s)?;
    let seed: u64 = s.get("seed")?;
    let bins = s.count("bins", 1)?;
    s.write()?;

    let ds = dgp.generate(seed)?;
    save_csv(&ds.observational(), s.out_file(DATASET), false)?;
    save_csv(&ds, s.out_file(TRUTH), true)?;

    let truth = ds.truth()?;
    let columns = [("y", &ds.y), ("mu", &truth.mu), ("tau", &truth.tau), ("pi", &truth.pi)];
    let hists: Vec<_> = columns.iter().map(|(_, v)| histogram(v, bins)).collect();
    let header = std::iter::once("bin".to_owned())
        .chain(columns.iter().flat_map(|(c, _)| [format!("{c}_lo"), format!("{c}_hi"), format!("{c}_count")]))
        .collect::<Vec<_>>()
        .join(",");
    let rows = (0..bins).map(|b| {
        let mut r = vec![b.to_string()];
        for h in &hists {
            let (lo, hi, c) = h[b];
            r.extend([fmt_f64(lo), fmt_f64(hi), c.to_string()]);
        }
        r.join(",")
    });
    write_lines(&s.out_file(HISTOGRAMS), &header, rows)?;

    let treated = ds.z.iter().filter(|&&z| z).count();
    println!("units           {}", ds.n());
    println!("treated         {treated} ({:.3})", treated as f64 / ds.n() as f64);
    println!("mean y          {:.4}", stats::mean(&ds.y));
    println!("mean pi         {:.4}", stats::mean(&truth.pi));
    println!("ate (std)       {:.4}", true_ate(&ds)?);
    println!("ate (raw)       {:.4}", true_ate_raw(&ds)?);
    println!("wrote {}", s.out.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_counts_everything() {
        let v = [0.0, 0.1, 0.5, 0.99, 1.0];
        let h = histogram(&v, 2);
        assert_eq!(h.len(), 2);
        assert_eq!(h[0], (0.0, 0.5, 2));
        assert_eq!(h[1], (0.5, 1.0, 3));
        assert_eq!(histogram(&[3.0, 3.0], 4).iter().map(|b| b.2).sum::<usize>(), 2);
    }
}
