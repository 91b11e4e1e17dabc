//! Hypergeometric law of one network's edge count in a cell given the pooled
//! counts: `m` potential edges of which `d` are present, `m1` of them
//! belonging to network 1.

use rand::Rng;

use crate::error::{Error, Result};

fn check(m: u64, d: u64, m1: u64) -> Result<()> {
    if d > m || m1 > m {
        return Err(Error::Domain(format!(
            "hypergeometric parameters require d <= m and m1 <= m, got m={m}, d={d}, m1={m1}"
        )));
    }
    Ok(())
}

/// Mean and variance of `D1`:
/// `E = m1·d/m`, `V = m1·(d/m)·((m-d)/m)·((m-m1)/(m-1))`.
///
/// `None` when `m = 0` (the cell holds no dyads); `V = 0` when `m = 1`.
pub fn hypergeom_moments(m: u64, d: u64, m1: u64) -> Result<Option<(f64, f64)>> {
    check(m, d, m1)?;
    if m == 0 {
        return Ok(None);
    }
    let (mf, df, m1f) = (m as f64, d as f64, m1 as f64);
    let e = m1f * df / mf;
    let v = if m <= 1 {
        0.0
    } else {
        m1f * (df / mf) * ((mf - df) / mf) * ((mf - m1f) / (mf - 1.0))
    };
    Ok(Some((e, v)))
}

/// Exact distribution of `D1`, stored as a cumulative table over its support
/// `[max(0, d + m1 - m), min(d, m1)]`.
#[derive(Debug, Clone)]
pub struct Hypergeometric {
    lo: u64,
    cdf: Vec<f64>,
}

impl Hypergeometric {
    pub fn new(m: u64, d: u64, m1: u64) -> Result<Self> {
        check(m, d, m1)?;
        let lo = (d + m1).saturating_sub(m);
        let hi = d.min(m1);
        // log pmf(k+1) - log pmf(k) = log[(d-k)(m1-k) / ((k+1)(m-d-m1+k+1))]
        let mut logw = Vec::with_capacity((hi - lo + 1) as usize);
        let mut acc = 0.0f64;
        logw.push(0.0);
        for k in lo..hi {
            let num = ((d - k) as f64) * ((m1 - k) as f64);
            let den = ((k + 1) as f64) * ((m + k + 1 - d - m1) as f64);
            acc += (num / den).ln();
            logw.push(acc);
        }
        let top = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = logw.iter().map(|l| (l - top).exp()).collect();
        let total: f64 = w.iter().sum();
        let mut cdf = Vec::with_capacity(w.len());
        let mut run = 0.0;
        for x in &w {
            run += x / total;
            cdf.push(run);
        }
        *cdf.last_mut().expect("nonempty support") = 1.0;
        Ok(Hypergeometric { lo, cdf })
    }

    pub fn support(&self) -> (u64, u64) {
        (self.lo, self.lo + self.cdf.len() as u64 - 1)
    }

    pub fn pmf(&self, k: u64) -> f64 {
        let (lo, hi) = self.support();
        if k < lo || k > hi {
            return 0.0;
        }
        let i = (k - lo) as usize;
        if i == 0 {
            self.cdf[0]
        } else {
            self.cdf[i] - self.cdf[i - 1]
        }
    }

    /// Inverse-CDF draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u: f64 = rng.random();
        let i = self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1);
        self.lo + i as u64
    }
}

/// Cells with at most this many potential edges are drawn by inverse CDF.
const INVERSE_CDF_MAX_M: u64 = 100_000;

/// One draw of `D1`. Small cells use the exact inverse CDF; large cells draw
/// the `m1` network-1 dyads one by one from the urn.
pub fn hypergeom_sample<R: Rng + ?Sized>(m: u64, d: u64, m1: u64, rng: &mut R) -> Result<u64> {
    check(m, d, m1)?;
    if m <= INVERSE_CDF_MAX_M {
        return Ok(Hypergeometric::new(m, d, m1)?.sample(rng));
    }
    let (mut remaining, mut present, mut hits) = (m, d, 0);
    for _ in 0..m1 {
        if rng.random_range(0..remaining) < present {
            present -= 1;
            hits += 1;
        }
        remaining -= 1;
    }
    Ok(hits)
}
