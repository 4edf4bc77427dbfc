//! Tiny dense complex solver for the boundary-condition systems (N ≤ 4).

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest condition number accepted before a system is declared degenerate.
pub const MAX_CONDITION: f64 = 1e12;

/// Solution of `M x = b` with diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Solved<const N: usize> {
    pub x: [Complex64; N],
    /// 1-norm condition number of the row-equilibrated matrix.
    pub cond: f64,
    /// `‖M x − b‖ / ‖b‖` against the original (unscaled) system; 0 when `b = 0`.
    pub residual: f64,
}

fn norm1_cols<const N: usize>(m: &[[Complex64; N]; N]) -> f64 {
    (0..N)
        .map(|j| (0..N).map(|i| m[i][j].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// LU with partial pivoting, in place. Returns the pivot order or `None` when
/// a pivot vanishes.
fn lu<const N: usize>(a: &mut [[Complex64; N]; N]) -> Option<[usize; N]> {
    let mut perm = [0usize; N];
    for (i, p) in perm.iter_mut().enumerate() {
        *p = i;
    }
    for col in 0..N {
        let pivot = (col..N).max_by(|&i, &j| a[i][col].norm().total_cmp(&a[j][col].norm()))?;
        if a[pivot][col].norm() == 0.0 || !a[pivot][col].norm().is_finite() {
            return None;
        }
        a.swap(col, pivot);
        perm.swap(col, pivot);
        let inv = a[col][col].inv();
        for row in col + 1..N {
            let f = a[row][col] * inv;
            a[row][col] = f;
            for c in col + 1..N {
                let sub = f * a[col][c];
                a[row][c] -= sub;
            }
        }
    }
    Some(perm)
}

fn lu_solve<const N: usize>(lu: &[[Complex64; N]; N], perm: &[usize; N], b: &[Complex64; N]) -> [Complex64; N] {
    let mut y = [Complex64::new(0.0, 0.0); N];
    for i in 0..N {
        let mut s = b[perm[i]];
        for j in 0..i {
            s -= lu[i][j] * y[j];
        }
        y[i] = s;
    }
    for i in (0..N).rev() {
        let mut s = y[i];
        for j in i + 1..N {
            s -= lu[i][j] * y[j];
        }
        y[i] = s / lu[i][i];
    }
    y
}

pub fn mat_vec<const N: usize>(m: &[[Complex64; N]; N], x: &[Complex64; N]) -> [Complex64; N] {
    let mut out = [Complex64::new(0.0, 0.0); N];
    for i in 0..N {
        for j in 0..N {
            out[i] += m[i][j] * x[j];
        }
    }
    out
}

pub fn vec_norm<const N: usize>(v: &[Complex64; N]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// `‖M x − b‖ / ‖b‖`, or `‖M x‖` when `b = 0`.
pub fn relative_residual<const N: usize>(m: &[[Complex64; N]; N], x: &[Complex64; N], b: &[Complex64; N]) -> f64 {
    let mx = mat_vec(m, x);
    let mut r = [Complex64::new(0.0, 0.0); N];
    for i in 0..N {
        r[i] = mx[i] - b[i];
    }
    let nb = vec_norm(b);
    if nb == 0.0 {
        vec_norm(&r)
    } else {
        vec_norm(&r) / nb
    }
}

/// Solves `M x = b` after scaling every row to unit max-modulus. Fails with a
/// degenerate-boundary error when the equilibrated matrix is singular or its
/// condition number exceeds [`MAX_CONDITION`].
pub fn solve<const N: usize>(m: &[[Complex64; N]; N], b: &[Complex64; N]) -> Result<Solved<N>> {
    let mut a = *m;
    let mut rhs = *b;
    for i in 0..N {
        let s = a[i].iter().map(|c| c.norm()).fold(0.0, f64::max);
        if s == 0.0 || !s.is_finite() {
            return Err(Error::DegenerateBoundary { cond: f64::INFINITY });
        }
        for c in a[i].iter_mut() {
            *c /= s;
        }
        rhs[i] /= s;
    }
    let scaled = a;
    let perm = lu(&mut a).ok_or(Error::DegenerateBoundary { cond: f64::INFINITY })?;

    // ‖A⁻¹‖₁ from the explicit inverse; N is at most 4.
    let mut inv_norm = 0.0f64;
    for j in 0..N {
        let mut e = [Complex64::new(0.0, 0.0); N];
        e[j] = Complex64::new(1.0, 0.0);
        let col = lu_solve(&a, &perm, &e);
        inv_norm = inv_norm.max(col.iter().map(|c| c.norm()).sum());
    }
    let cond = norm1_cols(&scaled) * inv_norm;
    if !(cond <= MAX_CONDITION) {
        return Err(Error::DegenerateBoundary { cond });
    }
    let x = lu_solve(&a, &perm, &rhs);
    let residual = relative_residual(m, &x, b);
    Ok(Solved { x, cond, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn solves_random_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let mut m = [[c(0.0, 0.0); 4]; 4];
            let mut b = [c(0.0, 0.0); 4];
            for i in 0..4 {
                for j in 0..4 {
                    m[i][j] = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                }
                m[i][i] += c(3.0, 0.0);
                b[i] = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            }
            let s = solve(&m, &b).unwrap();
            assert!(s.residual < 1e-14, "{}", s.residual);
            assert!(s.cond >= 1.0);
        }
    }

    #[test]
    fn singular_matrix_is_degenerate() {
        let m = [[c(1.0, 0.0), c(2.0, 0.0)], [c(2.0, 0.0), c(4.0, 0.0)]];
        assert!(matches!(
            solve(&m, &[c(1.0, 0.0), c(0.0, 0.0)]),
            Err(Error::DegenerateBoundary { .. })
        ));
        let m = [[c(1.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(1.0 + 1e-15, 0.0)]];
        assert!(matches!(
            solve(&m, &[c(1.0, 0.0), c(0.0, 0.0)]),
            Err(Error::DegenerateBoundary { .. })
        ));
    }

    #[test]
    fn badly_scaled_rows_are_equilibrated() {
        let m = [[c(1e-200, 0.0), c(2e-200, 1e-200)], [c(3e150, 0.0), c(-1e150, 0.0)]];
        let b = [c(1e-200, 0.0), c(0.0, 1e150)];
        let s = solve(&m, &b).unwrap();
        assert!(s.cond < 10.0);
        assert!(s.residual < 1e-15);
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let m = [[c(2.0, 1.0), c(0.0, 1.0)], [c(1.0, 0.0), c(3.0, 0.0)]];
        let s = solve(&m, &[c(0.0, 0.0); 2]).unwrap();
        assert_eq!(s.x, [c(0.0, 0.0); 2]);
        assert_eq!(s.residual, 0.0);
    }
}
