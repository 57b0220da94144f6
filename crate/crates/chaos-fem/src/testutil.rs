//! Shared helpers for unit tests: dense reference linear algebra and random
//! toy operators small enough to densify.

use rand::Rng;

use crate::fem::TridiagonalMatrix;
use crate::operator::{ChaosVector, KroneckerChaosOperator};

/// FEM-style SPD tridiagonal built from random per-element conductances.
pub(crate) fn random_spd_tridiagonal(rng: &mut impl Rng, dim: usize) -> TridiagonalMatrix {
    let c: Vec<f64> = (0..=dim).map(|_| rng.random_range(0.2..3.0)).collect();
    let diag = (0..dim).map(|i| c[i] + c[i + 1]).collect();
    let off = (0..dim.saturating_sub(1)).map(|i| -c[i + 1]).collect();
    TridiagonalMatrix::from_parts(diag, off).unwrap()
}

/// Random operator with S SPD sample matrices and an evaluation matrix whose
/// first column is the constant 1 (as a polynomial basis would produce).
pub(crate) fn random_toy_operator(
    rng: &mut impl Rng,
    s: usize,
    n2: usize,
    n_dof: usize,
) -> KroneckerChaosOperator {
    let mats: Vec<TridiagonalMatrix> = (0..s).map(|_| random_spd_tridiagonal(rng, n_dof)).collect();
    let z: Vec<Vec<f64>> = (0..s)
        .map(|_| {
            let mut row = vec![1.0];
            for _ in 1..n2 {
                row.push(rng.random_range(-1.5..1.5));
            }
            row
        })
        .collect();
    KroneckerChaosOperator::from_parts(mats, z).unwrap()
}

pub(crate) fn random_chaos_vector(rng: &mut impl Rng, n2: usize, n_dof: usize) -> ChaosVector {
    let blocks = (0..n2)
        .map(|_| (0..n_dof).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    ChaosVector::from_blocks(blocks).unwrap()
}

pub(crate) fn dense_matvec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|row| row.iter().zip(x).map(|(r, v)| r * v).sum())
        .collect()
}

/// Dense Cholesky solve; None when the matrix is not positive definite.
#[allow(clippy::needless_range_loop)]
pub(crate) fn cholesky_solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i][j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            if i == j {
                if sum <= 0.0 {
                    return None;
                }
                l[i][i] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= l[i][k] * y[k];
        }
        y[i] /= l[i][i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            y[i] -= l[k][i] * y[k];
        }
        y[i] /= l[i][i];
    }
    Some(y)
}
