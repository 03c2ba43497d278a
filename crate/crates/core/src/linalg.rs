//! Dense symmetric positive-definite solves for the offline estimator.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Lower-triangular Cholesky factor of an `n × n` SPD matrix, row-major.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    lower: Vec<f64>,
}

impl Cholesky {
    /// Factors `a` (row-major, only the lower triangle is read).
    ///
    /// Fails when a pivot drops below `n · ε · max|a_ii|`, which catches
    /// matrices that are singular up to rounding as well as indefinite ones.
    pub fn factor(a: &[f64], n: usize) -> Result<Self> {
        if a.len() != n * n {
            return Err(Error::invalid(format!(
                "matrix has {} entries, expected {n}x{n}",
                a.len()
            )));
        }
        let max_diag = (0..n).map(|i| a[i * n + i].abs()).fold(0.0, f64::max);
        let tol = (n as f64) * f64::EPSILON * max_diag;
        let mut lower = alloc::vec![0.0; n * n];
        for j in 0..n {
            let mut d = a[j * n + j];
            for k in 0..j {
                d -= lower[j * n + k] * lower[j * n + k];
            }
            if d.is_nan() || d <= tol {
                return Err(Error::Numerical(format!(
                    "matrix is not positive definite: pivot {j} is {d:.3e} (tolerance {tol:.3e})"
                )));
            }
            let ljj = libm::sqrt(d);
            lower[j * n + j] = ljj;
            for i in (j + 1)..n {
                let mut s = a[i * n + j];
                for k in 0..j {
                    s -= lower[i * n + k] * lower[j * n + k];
                }
                lower[i * n + j] = s / ljj;
            }
        }
        Ok(Self { n, lower })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `L Lᵀ x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(b.len(), n, "right-hand side length");
        let l = &self.lower;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= l[i * n + k] * y[k];
            }
            y[i] = s / l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= l[k * n + i] * y[k];
            }
            y[i] = s / l[i * n + i];
        }
        y
    }
}

/// `a x - b` for a row-major square `a`.
pub fn residual(a: &[f64], x: &[f64], b: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|i| {
            let row = &a[i * n..(i + 1) * n];
            row.iter().zip(x).map(|(aij, xj)| aij * xj).sum::<f64>() - b[i]
        })
        .collect()
}

pub fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| f64::max(m, x.abs()))
}

/// Solves the SPD system `a x = b` by Cholesky with a couple of rounds of
/// iterative refinement.
pub fn solve_spd(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    let chol = Cholesky::factor(a, n)?;
    let mut x = chol.solve(b);
    for _ in 0..2 {
        let r = residual(a, &x, b);
        if inf_norm(&r) == 0.0 {
            break;
        }
        let dx = chol.solve(&r);
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi -= di;
        }
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite solution".into()));
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn solves_small_spd_system() {
        let a = [4.0, 2.0, 0.6, 2.0, 5.0, 1.0, 0.6, 1.0, 3.0];
        let b = [1.0, -2.0, 0.5];
        let x = solve_spd(&a, &b).unwrap();
        assert!(inf_norm(&residual(&a, &x, &b)) < 1e-14);
    }

    #[test]
    fn scalar_systems() {
        assert_abs_diff_eq!(solve_spd(&[2.0], &[1.0]).unwrap()[0], 0.5);
        assert_eq!(solve_spd(&[1.0], &[1.0]).unwrap(), vec![1.0]);
    }

    #[test]
    fn rejects_singular_and_indefinite() {
        // rank one
        let a = [1.0, 1.0, 1.0, 1.0];
        assert!(matches!(Cholesky::factor(&a, 2), Err(Error::Numerical(_))));
        let a = [1.0, 2.0, 2.0, 1.0];
        assert!(matches!(Cholesky::factor(&a, 2), Err(Error::Numerical(_))));
        assert!(matches!(
            Cholesky::factor(&[1.0; 3], 2),
            Err(Error::InvalidInput(_))
        ));
    }
}
