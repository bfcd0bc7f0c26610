//! Cosine features of a quantile level: `s_i = cos(i * pi * q)`, `i = 1..=m`.

use crate::{Error, Result};

pub fn cosine_embed(q: f64, m: usize) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::invalid(format!("quantile level {q} outside [0, 1]")));
    }
    let mut out = vec![0.0; m];
    cosine_embed_into(q, &mut out);
    Ok(out)
}

/// Unchecked variant writing `out.len()` features.
#[inline]
pub fn cosine_embed_into(q: f64, out: &mut [f64]) {
    let base = std::f64::consts::PI * q;
    for (i, s) in out.iter_mut().enumerate() {
        *s = ((i + 1) as f64 * base).cos();
    }
}
