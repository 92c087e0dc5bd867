//! `2..8`, `3`, `2,4,8` for integers; `0.1..0.9`, `0.1..0.9:0.05`, `0.3,0.5`
//! for reals. Bounds are inclusive.

use crate::{CliError, CliResult};

fn bad(text: &str, why: &str) -> CliError {
    CliError::Input(format!("bad range '{text}': {why}"))
}

pub fn parse_usize_range(text: &str) -> CliResult<Vec<usize>> {
    let num = |s: &str| s.trim().parse::<usize>().map_err(|_| bad(text, "expected an integer"));
    let values = if let Some((lo, hi)) = text.split_once("..") {
        let (lo, hi) = (num(lo)?, num(hi)?);
        if lo > hi {
            return Err(bad(text, "empty"));
        }
        (lo..=hi).collect()
    } else {
        text.split(',').map(num).collect::<CliResult<Vec<_>>>()?
    };
    if values.is_empty() {
        return Err(bad(text, "empty"));
    }
    Ok(values)
}

const MAX_POINTS: usize = 100_000;

pub fn parse_f64_range(text: &str, default_step: f64) -> CliResult<Vec<f64>> {
    let num = |s: &str| -> CliResult<f64> {
        let v = s.trim().parse::<f64>().map_err(|_| bad(text, "expected a number"))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(bad(text, "not finite"))
        }
    };
    let Some((lo, rest)) = text.split_once("..") else {
        return text.split(',').map(num).collect();
    };
    let (hi, step) = match rest.split_once(':') {
        Some((hi, step)) => (num(hi)?, num(step)?),
        None => (num(rest)?, default_step),
    };
    let lo = num(lo)?;
    if step <= 0.0 || lo > hi {
        return Err(bad(text, "need lo <= hi and a positive step"));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    if n > MAX_POINTS {
        return Err(bad(text, "too many points"));
    }
    // Rounded to 12 decimals so 0.1 + 2*0.1 prints as 0.3.
    Ok((0..n).map(|k| ((lo + k as f64 * step) * 1e12).round() / 1e12).collect())
}
