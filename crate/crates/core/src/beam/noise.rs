use ndarray::{Array1, Array2, ArrayView1};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// SplitMix64 finalizer; spreads small integers over the full word.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of one (level, repetition) sweep cell: `base ⊕ hash(level, rep)`.
pub fn cell_seed(base: u64, level_index: usize, rep_index: usize) -> u64 {
    base ^ mix64(mix64(level_index as u64).wrapping_add(rep_index as u64))
}

/// Seed of channel `ch` within one noise draw.
pub fn channel_seed(seed: u64, ch: usize) -> u64 {
    mix64(seed ^ mix64(ch as u64 ^ 0x5eed))
}

fn population_std(x: ArrayView1<f64>) -> f64 {
    let n = x.len() as f64;
    let mean = x.sum() / n;
    (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Adds zero-mean Gaussian noise with standard deviation
/// `percent/100 · std(signal)`.
pub fn add_awgn(signal: ArrayView1<f64>, percent: f64, seed: u64) -> Result<Array1<f64>> {
    if !(percent.is_finite() && percent >= 0.0) {
        return Err(Error::precondition(format!("noise level must be >= 0, got {percent}")));
    }
    if percent == 0.0 || signal.is_empty() {
        return Ok(signal.to_owned());
    }
    let sigma = percent / 100.0 * population_std(signal);
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    Ok(signal
        .iter()
        .map(|&v| {
            let n: f64 = StandardNormal.sample(&mut rng);
            v + sigma * n
        })
        .collect())
}

/// Row-wise [`add_awgn`] with an independent stream per channel.
pub fn add_awgn_channels(signal: &Array2<f64>, percent: f64, seed: u64) -> Result<Array2<f64>> {
    let mut out = signal.clone();
    for (ch, mut row) in out.rows_mut().into_iter().enumerate() {
        let noisy = add_awgn(row.view(), percent, channel_seed(seed, ch))?;
        row.assign(&noisy);
    }
    Ok(out)
}
