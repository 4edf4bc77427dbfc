use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};

const MAX_ITER: usize = 200;
const REL_TOL: f64 = 1e-13;

/// Wavenumber of the steady Kelvin wave travelling at angle `theta`.
///
/// Solves `k tanh(k d) = ω²/g` with `ω = k V cos θ`, i.e.
/// `tanh(k d) = k c` with `c = V² cos²θ / g`. The nontrivial root lies
/// strictly between a shallow-water lower bound and the deep-water value
/// `1/c`. The residual is concave in `k`, so Newton from the deep-water end
/// converges monotonically; bisection guards the bracket anyway.
pub fn solve_dispersion(theta: f64, speed: f64, depth: f64, gravity: f64) -> Result<f64> {
    if !(theta.abs() < FRAC_PI_2) {
        return Err(Error::domain(format!("|theta| must be < pi/2, got {theta}")));
    }
    for (name, v) in [("speed", speed), ("depth", depth), ("gravity", gravity)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::domain(format!("{name} must be positive, got {v}")));
        }
    }
    let cos = theta.cos();
    let speed_sq = speed * speed * cos * cos;
    if speed_sq >= gravity * depth {
        return Err(Error::NoPropagatingWave {
            speed_sq,
            gd: gravity * depth,
        });
    }
    let c = speed_sq / gravity;
    let residual = |k: f64| (k * depth).tanh() - c * k;

    let mut hi = 1.0 / c;
    // tanh(x) >= x - x³/3 gives residual(lo) >= (d - c) lo / 2 > 0.
    let mut lo = (1.5 * (depth - c) / depth.powi(3)).sqrt().min(0.5 * hi);
    if residual(hi) >= 0.0 {
        return Ok(hi);
    }

    let mut k = hi;
    for _ in 0..MAX_ITER {
        let f = residual(k);
        if f > 0.0 {
            lo = k;
        } else {
            hi = k;
        }
        let sech = 1.0 / (k * depth).cosh();
        let df = depth * sech * sech - c;
        let mut next = k - f / df;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        let step = (next - k).abs();
        k = next;
        if step <= REL_TOL * k {
            break;
        }
    }
    Ok(k)
}

/// `|k tanh(k d) − ω²/g| / (ω²/g)` with `ω = k V cos θ`.
pub fn dispersion_residual(k: f64, theta: f64, speed: f64, depth: f64, gravity: f64) -> f64 {
    let omega = k * speed * theta.cos();
    let rhs = omega * omega / gravity;
    (k * (k * depth).tanh() - rhs).abs() / rhs
}

/// `A(θ) e^{k d}`: the spectral amplitude with its `e^{-k d}` decay removed.
///
/// The ratio `(e^{kd} − e^{-kd}) / (e^{2kd} − e^{-2kd} − 4kd)` is rewritten as
/// `e^{-kd} (1 − e^{-2kd}) / (1 − e^{-4kd} − 4kd e^{-2kd})`; the returned value
/// omits the leading `e^{-kd}`.
pub fn amplitude_scaled(theta: f64, k: f64, omega: f64, speed: f64, depth: f64, gravity: f64) -> Result<f64> {
    let cos = theta.cos();
    if !(theta.abs() < FRAC_PI_2) || cos < 1e-12 {
        return Err(Error::Singular(format!("cos(theta) = 0 at theta = {theta}")));
    }
    let prefactor = 2.0 * omega * gravity / (cos.powi(3) * PI * speed.powi(3));
    let x = k * depth;
    let num = -(-2.0 * x).exp_m1();
    let den = if x < 1.0 {
        // e^{-2x} (2 sinh 2x − 4x), summed as a series to avoid cancellation.
        let y = 2.0 * x;
        let mut term = y * y * y / 6.0;
        let mut sum = 0.0f64;
        let mut n = 3.0;
        while term.abs() > 1e-18 * sum.abs() || sum == 0.0 {
            sum += term;
            term *= y * y / ((n + 1.0) * (n + 2.0));
            n += 2.0;
            if n > 200.0 {
                break;
            }
        }
        (-y).exp() * 2.0 * sum
    } else {
        -(-4.0 * x).exp_m1() - 4.0 * x * (-2.0 * x).exp()
    };
    if den == 0.0 {
        return Err(Error::Singular("amplitude denominator vanished (k d = 0)".into()));
    }
    Ok(prefactor * num / den)
}

/// `A(θ)` itself. Underflows to zero once `k d` exceeds roughly 700.
pub fn amplitude(theta: f64, k: f64, omega: f64, speed: f64, depth: f64, gravity: f64) -> Result<f64> {
    Ok(amplitude_scaled(theta, k, omega, speed, depth, gravity)? * (-k * depth).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hydro::GRAVITY;
    use proptest::prelude::*;

    /// Plain bisection on `tanh(k d) − c k`; the oracle for the Newton solver.
    fn bisect(theta: f64, speed: f64, depth: f64, mut lo: f64, mut hi: f64) -> f64 {
        let c = (speed * theta.cos()).powi(2) / GRAVITY;
        let f = |k: f64| (k * depth).tanh() - c * k;
        assert!(f(lo) > 0.0 && f(hi) < 0.0, "oracle bracket invalid");
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn deep_water_head_on() {
        let k = solve_dispersion(0.0, 10.0, 3000.0, GRAVITY).unwrap();
        assert!((k - 0.0981).abs() < 1e-15);
    }

    #[test]
    fn hundred_metres_matches_bisection() {
        let k = solve_dispersion(0.0, 10.0, 100.0, GRAVITY).unwrap();
        let oracle = bisect(0.0, 10.0, 100.0, 0.05, 0.2);
        assert!((k - oracle).abs() < 1e-12);
        // tanh(9.81) falls short of 1 by 6e-9, which moves the root by 5.9e-10.
        assert!((k - 0.0981).abs() < 1e-9);
        assert!((k - 0.0981).abs() > 5e-10);
    }

    #[test]
    fn oblique_wave_matches_bisection() {
        let theta = PI / 3.0;
        let k = solve_dispersion(theta, 5.0, 200.0, GRAVITY).unwrap();
        let deep = GRAVITY / (25.0 * theta.cos().powi(2));
        assert!((deep - 1.5696).abs() < 1e-4);
        let oracle = bisect(theta, 5.0, 200.0, 0.5, 2.0);
        assert!((k - oracle).abs() < 1e-12 * oracle);
    }

    #[test]
    fn shallow_water_root_is_below_deep_water_value() {
        // Froude number near 1: strongly finite-depth.
        let k = solve_dispersion(0.0, 9.0, 10.0, GRAVITY).unwrap();
        let oracle = bisect(0.0, 9.0, 10.0, 1e-4, GRAVITY / 81.0);
        assert!((k - oracle).abs() < 1e-12 * oracle);
        assert!(k < GRAVITY / 81.0 * 0.9);
        assert!(dispersion_residual(k, 0.0, 9.0, 10.0, GRAVITY) < 1e-12);
    }

    #[test]
    fn domain_errors() {
        assert!(solve_dispersion(FRAC_PI_2, 5.0, 100.0, GRAVITY).is_err());
        assert!(solve_dispersion(0.1, 0.0, 100.0, GRAVITY).is_err());
        assert!(solve_dispersion(0.1, 5.0, -1.0, GRAVITY).is_err());
        assert!(matches!(
            solve_dispersion(0.0, 40.0, 100.0, GRAVITY),
            Err(Error::NoPropagatingWave { .. })
        ));
    }

    #[test]
    fn amplitude_is_finite_at_large_depth_ratio() {
        let (theta, speed, k) = (0.0, 10.0, 0.0981);
        let omega = k * speed;
        for kd in [300.0, 400.0, 5000.0] {
            let depth = kd / k;
            let a = amplitude(theta, k, omega, speed, depth, GRAVITY).unwrap();
            assert!(a.is_finite() && !a.is_nan());
            let s = amplitude_scaled(theta, k, omega, speed, depth, GRAVITY).unwrap();
            assert!(s.is_finite() && s > 0.0);
        }
        // The printed form already overflows at k d = 400.
        let naive = (2.0f64 * 400.0).exp() - (-800.0f64).exp() - 1600.0;
        assert!(naive.is_infinite());
    }

    #[test]
    fn amplitude_deep_limit_is_prefactor_times_decay() {
        let (theta, speed, depth) = (0.2, 7.0, 2000.0);
        let k = solve_dispersion(theta, speed, depth, GRAVITY).unwrap();
        let omega = k * speed * theta.cos();
        let pref = 2.0 * omega * GRAVITY / (PI * speed.powi(3) * theta.cos().powi(3));
        let a = amplitude_scaled(theta, k, omega, speed, depth, GRAVITY).unwrap();
        assert!((a - pref).abs() < 1e-14 * pref);
    }

    #[test]
    fn amplitude_matches_direct_evaluation() {
        // k d ≈ 45 here, so the printed form is representable in f64 and
        // serves as an independent oracle.
        let (theta, speed, depth) = (0.3f64, 6.0, 150.0);
        let k = solve_dispersion(theta, speed, depth, GRAVITY).unwrap();
        let omega = k * speed * theta.cos();
        let x = k * depth;
        let direct = 2.0 * omega * GRAVITY / (theta.cos().powi(3) * PI * speed.powi(3)) * (x.exp() - (-x).exp())
            / ((2.0 * x).exp() - (-2.0 * x).exp() - 4.0 * x);
        let a = amplitude(theta, k, omega, speed, depth, GRAVITY).unwrap();
        assert!((a - direct).abs() < 1e-12 * direct.abs(), "{a} vs {direct}");
    }

    #[test]
    fn amplitude_small_depth_ratio_uses_stable_series() {
        let (theta, speed, depth, k) = (0.1f64, 3.0, 1.0, 0.05);
        let omega = k * speed * theta.cos();
        let x = k * depth;
        let direct = 2.0 * omega * GRAVITY / (theta.cos().powi(3) * PI * speed.powi(3)) * (x.exp() - (-x).exp())
            / ((2.0 * x).exp() - (-2.0 * x).exp() - 4.0 * x);
        let a = amplitude(theta, k, omega, speed, depth, GRAVITY).unwrap();
        // The direct form loses about eight digits to cancellation at x = 0.05.
        assert!((a - direct).abs() < 1e-6 * direct.abs());
    }

    #[test]
    fn singular_angle() {
        assert!(amplitude_scaled(FRAC_PI_2, 1.0, 1.0, 1.0, 10.0, GRAVITY).is_err());
    }

    proptest! {
        #[test]
        fn residual_below_tolerance(theta in -1.5f64..1.5, speed in 1.0f64..10.0, depth in 100.0f64..3000.0) {
            let k = solve_dispersion(theta, speed, depth, GRAVITY).unwrap();
            prop_assert!(dispersion_residual(k, theta, speed, depth, GRAVITY) < 1e-12);
        }

        #[test]
        fn wavenumber_grows_with_angle(speed in 1.0f64..10.0, depth in 100.0f64..3000.0, a in 0.0f64..1.5, b in 0.0f64..1.5) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let k_lo = solve_dispersion(lo, speed, depth, GRAVITY).unwrap();
            let k_hi = solve_dispersion(hi, speed, depth, GRAVITY).unwrap();
            prop_assert!(k_hi >= k_lo);
        }

        #[test]
        fn deep_water_consistency(theta in -1.5f64..1.5, speed in 1.0f64..10.0, depth in 100.0f64..3000.0) {
            let k = solve_dispersion(theta, speed, depth, GRAVITY).unwrap();
            if k * depth > 20.0 {
                let deep = GRAVITY / (speed * theta.cos()).powi(2);
                prop_assert!((k - deep).abs() / k < 1e-8);
            }
        }
    }
}
