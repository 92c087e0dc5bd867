use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::classes::{classify_pair_patterns, LocalPattern, NUM_CLASSES};
use super::haar::{outcome_distribution, sample_setting, UnitarySetting};
use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::state::DensityMatrix;

/// Settings per work unit in [`run_protocol_summary`].
const SUMMARY_CHUNK: u64 = 1024;

/// Reduced correlators `y_0 … y_9` (exact or estimated).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorVector {
    pub y: [f64; NUM_CLASSES],
    /// Settings averaged (0 for exact values).
    pub n_u: u64,
    /// Shots per setting (0 for exact values).
    pub n_s: usize,
}

impl CorrelatorVector {
    pub fn exact(y: [f64; NUM_CLASSES]) -> Self {
        Self { y, n_u: 0, n_s: 0 }
    }

    pub fn sum(&self) -> f64 {
        self.y.iter().sum()
    }

    /// `N_U · N_S`.
    pub fn n_tot(&self) -> u64 {
        self.n_u * self.n_s as u64
    }
}

#[derive(Debug, Clone)]
pub struct ProtocolConfig {
    pub n_u: u64,
    pub n_s: usize,
    pub master_seed: u64,
    pub state: DensityMatrix,
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_s < 3 {
            return Err(Error::Config(format!("n_s={} but the triple estimator needs n_s >= 3", self.n_s)));
        }
        if self.n_u < 1 {
            return Err(Error::Config("n_u must be at least 1".into()));
        }
        Ok(())
    }
}

/// One line of the per-setting JSONL record stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingRecord {
    pub setting_index: u64,
    pub setting_seed: u64,
    pub y_hat: [f64; NUM_CLASSES],
}

#[derive(Debug, Clone)]
pub struct ProtocolRun {
    pub global: CorrelatorVector,
    pub records: Vec<SettingRecord>,
}

/// Streaming first and second moments of per-setting estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelatorAccumulator {
    pub count: u64,
    pub sum: [f64; NUM_CLASSES],
    pub sum_outer: [[f64; NUM_CLASSES]; NUM_CLASSES],
}

impl Default for CorrelatorAccumulator {
    fn default() -> Self {
        Self { count: 0, sum: [0.0; NUM_CLASSES], sum_outer: [[0.0; NUM_CLASSES]; NUM_CLASSES] }
    }
}

impl CorrelatorAccumulator {
    pub fn push(&mut self, y: &[f64; NUM_CLASSES]) {
        self.count += 1;
        for i in 0..NUM_CLASSES {
            self.sum[i] += y[i];
            if y[i] == 0.0 {
                continue;
            }
            for j in 0..NUM_CLASSES {
                self.sum_outer[i][j] += y[i] * y[j];
            }
        }
    }

    pub fn merge(&mut self, other: &Self) {
        self.count += other.count;
        for i in 0..NUM_CLASSES {
            self.sum[i] += other.sum[i];
            for j in 0..NUM_CLASSES {
                self.sum_outer[i][j] += other.sum_outer[i][j];
            }
        }
    }

    pub fn mean(&self) -> [f64; NUM_CLASSES] {
        let n = self.count.max(1) as f64;
        self.sum.map(|s| s / n)
    }

    /// Unbiased sample covariance of the per-setting vectors.
    pub fn covariance(&self) -> [[f64; NUM_CLASSES]; NUM_CLASSES] {
        let n = self.count as f64;
        let mean = self.mean();
        let mut cov = [[0.0; NUM_CLASSES]; NUM_CLASSES];
        if self.count < 2 {
            return cov;
        }
        for i in 0..NUM_CLASSES {
            for j in 0..NUM_CLASSES {
                cov[i][j] = (self.sum_outer[i][j] - n * mean[i] * mean[j]) / (n - 1.0);
            }
        }
        cov
    }
}

#[derive(Debug, Clone)]
pub struct ProtocolSummary {
    pub global: CorrelatorVector,
    pub moments: CorrelatorAccumulator,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based seed of setting `index` under `master_seed`.
pub fn derive_setting_seed(master_seed: u64, index: u64) -> u64 {
    splitmix64(master_seed ^ splitmix64(index.wrapping_add(0xA076_1D64_78BD_642F)))
}

/// Generator for everything drawn inside one setting (unitaries, then shots).
pub fn setting_rng(setting_seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(setting_seed)
}

/// `C(n, 3)`.
pub fn binomial3(n: usize) -> u64 {
    if n < 3 {
        return 0;
    }
    let n = n as u64;
    n * (n - 1) * (n - 2) / 6
}

fn draw(cdf: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.random::<f64>() * cdf[cdf.len() - 1];
    cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1)
}

/// U-statistic estimate of `y(U)` from `n_s` fresh shots at one setting.
pub fn estimate_setting<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    setting: &UnitarySetting,
    n_s: usize,
    rng: &mut R,
) -> Result<CorrelatorVector> {
    if n_s < 3 {
        return Err(Error::Config(format!("n_s={n_s} but the triple estimator needs n_s >= 3")));
    }
    let p = outcome_distribution(rho, setting)?;
    let mut acc = 0.0;
    let cdf: Vec<f64> = p
        .iter()
        .map(|v| {
            acc += v;
            acc
        })
        .collect();
    let d_b = rho.d_b();
    let mut rng = rng;
    let shots: Vec<(usize, usize)> = (0..n_s)
        .map(|_| {
            let k = draw(&cdf, &mut rng);
            (k / d_b, k % d_b)
        })
        .collect();
    let mut counts = [0u64; NUM_CLASSES];
    for a in 0..n_s {
        for b in a + 1..n_s {
            for c in b + 1..n_s {
                let pa = LocalPattern::of(shots[a].0, shots[b].0, shots[c].0);
                let pb = LocalPattern::of(shots[a].1, shots[b].1, shots[c].1);
                counts[classify_pair_patterns(pa, pb).index()] += 1;
            }
        }
    }
    let total = binomial3(n_s) as f64;
    Ok(CorrelatorVector { y: counts.map(|n| n as f64 / total), n_u: 1, n_s })
}

fn run_setting(cfg: &ProtocolConfig, index: u64) -> Result<SettingRecord> {
    let (d_a, d_b) = cfg.state.dims();
    let seed = derive_setting_seed(cfg.master_seed, index);
    let mut rng = setting_rng(seed);
    let setting = sample_setting(d_a, d_b, seed, &mut rng);
    let y = estimate_setting(&cfg.state, &setting, cfg.n_s, &mut rng)?;
    Ok(SettingRecord { setting_index: index, setting_seed: seed, y_hat: y.y })
}

/// Full campaign, keeping every per-setting estimate.
pub fn run_protocol(cfg: &ProtocolConfig, exec: Execution) -> Result<ProtocolRun> {
    cfg.validate()?;
    let records = map_indexed(exec, cfg.n_u as usize, |i| run_setting(cfg, i as u64))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let mut sum = [0.0; NUM_CLASSES];
    for r in &records {
        for (s, v) in sum.iter_mut().zip(r.y_hat) {
            *s += v;
        }
    }
    let n = cfg.n_u as f64;
    Ok(ProtocolRun {
        global: CorrelatorVector { y: sum.map(|s| s / n), n_u: cfg.n_u, n_s: cfg.n_s },
        records,
    })
}

/// Full campaign reduced to first and second moments; memory is independent
/// of `n_u`. Results do not depend on the execution mode.
pub fn run_protocol_summary(cfg: &ProtocolConfig, exec: Execution) -> Result<ProtocolSummary> {
    cfg.validate()?;
    let chunks = cfg.n_u.div_ceil(SUMMARY_CHUNK);
    let parts = map_indexed(exec, chunks as usize, |c| -> Result<CorrelatorAccumulator> {
        let start = c as u64 * SUMMARY_CHUNK;
        let end = (start + SUMMARY_CHUNK).min(cfg.n_u);
        let mut acc = CorrelatorAccumulator::default();
        for i in start..end {
            acc.push(&run_setting(cfg, i)?.y_hat);
        }
        Ok(acc)
    });
    let mut moments = CorrelatorAccumulator::default();
    for p in parts {
        moments.merge(&p?);
    }
    Ok(ProtocolSummary {
        global: CorrelatorVector { y: moments.mean(), n_u: cfg.n_u, n_s: cfg.n_s },
        moments,
    })
}
