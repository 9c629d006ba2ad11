//! Dense real matrix arithmetic, SVD, and reverse-mode differentiation.
//!
//! Everything runs in 64-bit floats. The tensor type is a plain row-major
//! dense matrix; the SVD is a one-sided Jacobi (the matrices here are at
//! most a few thousand rows by 64 columns, and Jacobi keeps high relative
//! accuracy for the small singular values the rank diagnostics care
//! about); the differentiation tape covers a closed operation set rather
//! than a general tensor framework so its adjoints stay auditable.

mod autodiff;
mod rng;
mod svd;
mod tensor;

pub use autodiff::{PoolKind, Tape, Value};
pub use rng::SplitMix64;
pub use svd::{svd, SvdResult};
pub use tensor::Tensor;

/// Solve the symmetric positive-definite system `a * x = b` in place via
/// Cholesky. `a` is n×n, `b` has length n. Used by the probe optimizer.
pub fn solve_spd(a: &Tensor, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.rows();
    if a.cols() != n || b.len() != n {
        return None;
    }
    // Lower-triangular factor, row major.
    let mut l = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= 0.0 {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    // Forward then backward substitution.
    let mut y = vec![0.0f64; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    let mut x = vec![0.0f64; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    Some(x)
}
