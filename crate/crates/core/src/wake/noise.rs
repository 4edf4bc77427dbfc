//! Additive white Gaussian noise at a target SNR.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{Provenance, WakeSeries};
use crate::error::{Error, Result};

/// Adds `N(0, σ²)` with `σ² = P_signal / 10^{snr/10}` to each sample and
/// clamps at zero. An infinite SNR returns the series unchanged.
pub fn add_noise(series: &WakeSeries, snr_db: f64, seed: u64) -> Result<WakeSeries> {
    add_noise_detailed(series, snr_db, seed).map(|(s, _)| s)
}

/// [`add_noise`] that also returns the injected (pre-clamp) noise draws.
pub fn add_noise_detailed(series: &WakeSeries, snr_db: f64, seed: u64) -> Result<(WakeSeries, Vec<f64>)> {
    if series.is_empty() {
        return Err(Error::domain("cannot add noise to an empty series"));
    }
    if let Provenance::Noisy { .. } = series.provenance {
        return Err(Error::domain("series already carries noise"));
    }
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(Error::domain(format!(
            "SNR must be a number above -inf dB, got {snr_db}"
        )));
    }
    if snr_db == f64::INFINITY {
        return Ok((series.clone(), vec![0.0; series.len()]));
    }
    let sigma = (series.power() / 10f64.powf(snr_db / 10.0)).sqrt();
    let dist = Normal::new(0.0, sigma).map_err(|e| Error::domain(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise: Vec<f64> = (0..series.len()).map(|_| dist.sample(&mut rng)).collect();
    let samples = series
        .samples
        .iter()
        .zip(&noise)
        .map(|(s, n)| (s + n).max(0.0))
        .collect();
    Ok((
        WakeSeries {
            samples,
            provenance: Provenance::Noisy { snr_db },
            ..*series
        },
        noise,
    ))
}

/// `10 log10(P_signal / P_noise)`.
pub fn realized_snr_db(signal: &[f64], noise: &[f64]) -> f64 {
    let p = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>() / v.len().max(1) as f64;
    10.0 * (p(signal) / p(noise)).log10()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(n: usize) -> WakeSeries {
        WakeSeries {
            samples: (0..n).map(|i| 1.0 + (i as f64 * 0.37).sin().abs()).collect(),
            t_start: 0.0,
            sample_rate: 10.0,
            provenance: Provenance::Clean,
        }
    }

    #[test]
    fn infinite_snr_is_identity() {
        let s = series(15);
        assert_eq!(add_noise(&s, f64::INFINITY, 3).unwrap(), s);
    }

    #[test]
    fn realized_snr_on_long_series() {
        let s = series(1_000_000);
        for snr in [-10.0, 0.0, 10.0, 20.0] {
            let (_, noise) = add_noise_detailed(&s, snr, 11).unwrap();
            let got = realized_snr_db(&s.samples, &noise);
            assert!((got - snr).abs() < 0.1, "{snr}: {got}");
        }
    }

    #[test]
    fn output_is_nonnegative_and_seeded() {
        let s = series(100);
        let a = add_noise(&s, -10.0, 5).unwrap();
        assert!(a.samples.iter().all(|&v| v >= 0.0));
        assert_eq!(a, add_noise(&s, -10.0, 5).unwrap());
        assert_ne!(a, add_noise(&s, -10.0, 6).unwrap());
        assert_eq!(a.provenance, Provenance::Noisy { snr_db: -10.0 });
        assert!(add_noise(&a, 0.0, 1).is_err());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(add_noise(&series(0), 0.0, 0).is_err());
        assert!(add_noise(&series(3), f64::NAN, 0).is_err());
    }
}
