//! Monte Carlo θ-rules. Draws are uniform on the clipped domain and each
//! carries the weight `(π − 2 clip) / n`, so an estimate is the sample mean
//! times the domain length.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// `n` uniform draws on `[−π/2 + clip, π/2 − clip]` with their weights.
pub fn mc_nodes(n: usize, clip: f64, seed: u64) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::config("Monte Carlo sample count must be at least 1"));
    }
    if !(clip > 0.0 && clip < 0.1) {
        return Err(Error::config(format!("angle clip must lie in (0, 0.1), got {clip}")));
    }
    let half = 0.5 * PI - clip;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nodes: Vec<f64> = (0..n).map(|_| rng.random_range(-half..half)).collect();
    let weights = vec![2.0 * half / n as f64; n];
    Ok((nodes, weights))
}

/// Monte Carlo estimate of `∫ f(θ) dθ` over the clipped domain.
pub fn mc_integral<const N: usize>(
    mut f: impl FnMut(f64) -> [Complex64; N],
    n: usize,
    clip: f64,
    seed: u64,
) -> Result<[Complex64; N]> {
    let (nodes, weights) = mc_nodes(n, clip, seed)?;
    let mut acc = [Complex64::new(0.0, 0.0); N];
    for (t, w) in nodes.into_iter().zip(weights) {
        let v = f(t);
        for i in 0..N {
            acc[i] += v[i] * w;
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_domain_length() {
        let (nodes, w) = mc_nodes(1000, 1e-3, 7).unwrap();
        let total: f64 = w.iter().sum();
        assert!((total - (PI - 2e-3)).abs() < 1e-12);
        assert!(nodes.iter().all(|t| t.abs() <= 0.5 * PI - 1e-3));
    }

    #[test]
    fn constant_is_exact_and_seed_reproducible() {
        let one = |_: f64| [Complex64::new(1.0, 0.0)];
        let v = mc_integral(one, 17, 1e-3, 1).unwrap();
        assert!((v[0].re - (PI - 2e-3)).abs() < 1e-12);
        let f = |t: f64| [Complex64::new(t.cos(), t.sin())];
        assert_eq!(
            mc_integral(f, 64, 1e-3, 9).unwrap(),
            mc_integral(f, 64, 1e-3, 9).unwrap()
        );
    }

    #[test]
    fn error_decays_like_inverse_root() {
        // ∫ cos² over the clipped domain.
        let exact = {
            let h = 0.5 * PI - 1e-3;
            h + 0.5 * (2.0 * h).sin()
        };
        let f = |t: f64| [Complex64::new(t.cos().powi(2), 0.0)];
        let rms = |n: usize| {
            let seeds = 200;
            let s: f64 = (0..seeds)
                .map(|s| (mc_integral(f, n, 1e-3, s).unwrap()[0].re - exact).powi(2))
                .sum();
            (s / seeds as f64).sqrt()
        };
        let (n1, n2) = (64usize, 4096usize);
        let slope = (rms(n2) / rms(n1)).ln() / ((n2 as f64) / (n1 as f64)).ln();
        assert!((slope + 0.5).abs() < 0.1, "{slope}");
    }

    #[test]
    fn rejects_bad_settings() {
        assert!(mc_nodes(0, 1e-3, 0).is_err());
        assert!(mc_nodes(10, 0.0, 0).is_err());
    }
}
