//! Commit arrival processes.

use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::ingest::SECONDS_PER_DAY;
use crate::seeds;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Homogeneous Poisson arrivals.
    Steady,
    /// Intensity decays linearly to 10% by the end of the window.
    FrontLoaded,
    /// Clusters of about five commits within a day or so of each other.
    Bursty,
}

pub(crate) fn poisson<R: Rng>(rng: &mut R, lambda: f64) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    Poisson::new(lambda).map_or(0, |p| p.sample(rng) as u64)
}

const BURST_MEAN: f64 = 5.0;

/// Commit times in seconds from the start of a `duration_days` window,
/// sorted. `intensity` is the expected commits per day at the start.
pub fn regime_stream(regime: Regime, intensity: f64, duration_days: f64, seed: u64) -> Vec<i64> {
    let mut rng = seeds::rng(seeds::derive(seed, "regime"));
    let span = duration_days * SECONDS_PER_DAY as f64;
    if intensity <= 0.0 || duration_days <= 0.0 {
        return Vec::new();
    }
    let mut out: Vec<i64> = Vec::new();
    match regime {
        Regime::Steady => {
            let n = poisson(&mut rng, intensity * duration_days);
            out.extend((0..n).map(|_| rng.random_range(0.0..span) as i64));
        }
        Regime::FrontLoaded => {
            let n = poisson(&mut rng, intensity * duration_days);
            for _ in 0..n {
                let s: f64 = rng.random_range(0.0..span);
                if rng.random::<f64>() < 1.0 - 0.9 * s / span {
                    out.push(s as i64);
                }
            }
        }
        Regime::Bursty => {
            let clusters = poisson(&mut rng, intensity * duration_days / BURST_MEAN);
            let jitter = Normal::new(0.0, 0.5 * SECONDS_PER_DAY as f64).expect("valid normal");
            for _ in 0..clusters {
                let centre: f64 = rng.random_range(0.0..span);
                let size = 1 + poisson(&mut rng, BURST_MEAN - 1.0);
                for _ in 0..size {
                    let mut s = centre + jitter.sample(&mut rng);
                    if s < 0.0 {
                        s = -s;
                    }
                    if s >= span {
                        s = 2.0 * span - s - 1.0;
                    }
                    out.push(s.clamp(0.0, span - 1.0) as i64);
                }
            }
        }
    }
    out.sort_unstable();
    out
}
