//! Singular value decomposition by one-sided (Hestenes) Jacobi rotations.
//!
//! The matrices this crate decomposes are small — feature matrices of at
//! most a few dozen rows and pooled-embedding stacks of at most a few
//! thousand rows by 64 columns — so a one-sided Jacobi is both simple and
//! accurate: it delivers high *relative* accuracy for small singular
//! values, which the rank-collapse tracking depends on.
//!
//! Columns of the working matrix are orthogonalized pairwise by plane
//! rotations accumulated into `V`; on convergence the column norms are the
//! singular values and the normalized columns form `U`. Matrices with more
//! columns than rows are decomposed through their transpose.

use crate::error::Error;
use crate::numerics::Tensor;

/// Result of [`svd`]: `a ≈ u * diag(sigma) * v^T` with `k = min(rows, cols)`
/// computed columns.
#[derive(Debug, Clone)]
pub struct SvdResult {
    /// Left singular vectors, `rows × k`, orthonormal columns.
    pub u: Tensor,
    /// Singular values, descending, all non-negative, length `k`.
    pub sigma: Vec<f64>,
    /// Right singular vectors, `cols × k`, orthonormal columns.
    pub v: Tensor,
}

/// Pairwise-orthogonality threshold: rotations stop once every pair of
/// columns satisfies `|<a_i, a_j>| <= ORTH_TOL * ||a_i|| * ||a_j||`.
const ORTH_TOL: f64 = 1e-14;

pub fn svd(a: &Tensor) -> Result<SvdResult, Error> {
    if a.rows() == 0 || a.cols() == 0 {
        return Err(Error::ShapeMismatch("svd requires at least one row and one column".into()));
    }
    a.check_finite("svd input")?;

    if a.rows() >= a.cols() {
        jacobi_tall(a)
    } else {
        // Decompose the transpose and swap the factors.
        let r = jacobi_tall(&a.transpose())?;
        Ok(SvdResult { u: r.v, sigma: r.sigma, v: r.u })
    }
}

/// One-sided Jacobi for `rows >= cols`.
fn jacobi_tall(a: &Tensor) -> Result<SvdResult, Error> {
    let m = a.rows();
    let n = a.cols();

    // Column-major working copies: w[j] is the j-th column of A, v[j] the
    // j-th column of the accumulated rotation matrix.
    let mut w: Vec<Vec<f64>> = (0..n).map(|j| (0..m).map(|i| a.get(i, j)).collect()).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();

    let max_sweeps = 100 * n.min(m).max(1);
    let mut converged = false;
    for _sweep in 0..max_sweeps {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (alpha, beta, gamma) = col_moments(&w[p], &w[q]);
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                if gamma.abs() <= ORTH_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                // Rutishauser rotation zeroing <w_p, w_q>.
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_pair(&mut w, p, q, c, s);
                rotate_pair(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence(max_sweeps));
    }

    // Column norms are the singular values; sort descending (stable, so
    // the output is deterministic for tied values).
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = w.iter().map(|col| col.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap());

    let mut sigma = Vec::with_capacity(n);
    let mut u_cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut v_cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    for &j in &order {
        sigma.push(norms[j]);
        v_cols.push(v[j].clone());
        if norms[j] > 0.0 {
            u_cols.push(w[j].iter().map(|x| x / norms[j]).collect());
        } else {
            u_cols.push(vec![0.0; m]); // filled below
        }
    }

    complete_basis(&mut u_cols, &sigma);

    let mut u = Tensor::zeros(m, n);
    let mut vt = Tensor::zeros(n, n);
    for j in 0..n {
        for i in 0..m {
            u.set(i, j, u_cols[j][i]);
        }
        for i in 0..n {
            vt.set(i, j, v_cols[j][i]);
        }
    }
    Ok(SvdResult { u, sigma, v: vt })
}

fn col_moments(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let mut alpha = 0.0;
    let mut beta = 0.0;
    let mut gamma = 0.0;
    for i in 0..x.len() {
        alpha += x[i] * x[i];
        beta += y[i] * y[i];
        gamma += x[i] * y[i];
    }
    (alpha, beta, gamma)
}

fn rotate_pair(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    // Split borrow of the two columns.
    let (lo, hi) = if p < q { (p, q) } else { (q, p) };
    let (head, tail) = cols.split_at_mut(hi);
    let (cp, cq) = if p < q { (&mut head[p], &mut tail[0]) } else { (&mut tail[0], &mut head[q]) };
    for i in 0..cp.len() {
        let xp = cp[i];
        let xq = cq[i];
        cp[i] = c * xp - s * xq;
        cq[i] = s * xp + c * xq;
    }
}

/// Replace the U columns of zero singular values with unit vectors
/// orthogonal to all previously placed columns, so U^T U is the identity
/// on every computed column even for rank-deficient input.
fn complete_basis(u_cols: &mut [Vec<f64>], sigma: &[f64]) {
    let m = u_cols.first().map_or(0, Vec::len);
    for j in 0..u_cols.len() {
        if sigma[j] > 0.0 {
            continue;
        }
        let mut placed = false;
        for cand in 0..m {
            let mut col = vec![0.0; m];
            col[cand] = 1.0;
            // Project out the existing columns (two passes of classical
            // Gram-Schmidt keep the 1e-10 orthogonality budget).
            for _ in 0..2 {
                for (k, other) in u_cols.iter().enumerate() {
                    if k == j {
                        continue;
                    }
                    let dot: f64 = col.iter().zip(other).map(|(a, b)| a * b).sum();
                    for (ci, oi) in col.iter_mut().zip(other) {
                        *ci -= dot * oi;
                    }
                }
            }
            let norm: f64 = col.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.5 {
                for ci in &mut col {
                    *ci /= norm;
                }
                u_cols[j] = col;
                placed = true;
                break;
            }
        }
        debug_assert!(placed, "basis completion failed");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::SplitMix64;

    fn reconstruction_error(a: &Tensor, r: &SvdResult) -> f64 {
        let k = r.sigma.len();
        let mut us = r.u.clone();
        for j in 0..k {
            for i in 0..us.rows() {
                *us.get_mut(i, j) *= r.sigma[j];
            }
        }
        us.matmul(&r.v.transpose()).sub(a).frobenius_norm()
    }

    fn max_orthogonality_defect(t: &Tensor) -> f64 {
        let g = t.transpose().matmul(t);
        let mut worst: f64 = 0.0;
        for i in 0..g.rows() {
            for j in 0..g.cols() {
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g.get(i, j) - want).abs());
            }
        }
        worst
    }

    #[test]
    fn identity_has_unit_singular_values() {
        let r = svd(&Tensor::identity(3)).unwrap();
        assert_eq!(r.sigma, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn diagonal_matrix_sorts_descending() {
        let a = Tensor::from_rows(&[vec![3.0, 0.0], vec![0.0, 0.0]]);
        let r = svd(&a).unwrap();
        assert_eq!(r.sigma, vec![3.0, 0.0]);
        assert!(max_orthogonality_defect(&r.u) <= 1e-10);
    }

    #[test]
    fn invariants_hold_on_random_shapes() {
        let mut rng = SplitMix64::new(17);
        for &(m, n) in &[(5usize, 5usize), (40, 7), (7, 40), (64, 3), (1, 4), (4, 1)] {
            let mut a = Tensor::zeros(m, n);
            for v in a.data_mut() {
                *v = rng.next_gaussian();
            }
            let r = svd(&a).unwrap();
            let scale = a.frobenius_norm().max(1.0);
            assert!(reconstruction_error(&a, &r) <= 1e-10 * scale, "({m},{n})");
            assert!(max_orthogonality_defect(&r.u) <= 1e-10, "U ({m},{n})");
            assert!(max_orthogonality_defect(&r.v) <= 1e-10, "V ({m},{n})");
            for w in r.sigma.windows(2) {
                assert!(w[0] >= w[1]);
            }
        }
    }

    #[test]
    fn rank_deficient_input_completes_the_basis() {
        // Two identical columns: one singular value is exactly zero after
        // the rotation, and U must still come back orthonormal.
        let a = Tensor::from_rows(&[vec![1.0, 1.0], vec![2.0, 2.0], vec![3.0, 3.0]]);
        let r = svd(&a).unwrap();
        assert!(r.sigma[1].abs() <= 1e-12 * r.sigma[0]);
        assert!(max_orthogonality_defect(&r.u) <= 1e-10);
        assert!(reconstruction_error(&a, &r) <= 1e-10 * a.frobenius_norm());
    }

    #[test]
    fn all_zero_matrix_is_handled() {
        let r = svd(&Tensor::zeros(4, 2)).unwrap();
        assert_eq!(r.sigma, vec![0.0, 0.0]);
        assert!(max_orthogonality_defect(&r.u) <= 1e-10);
    }

    #[test]
    fn non_finite_input_is_rejected() {
        let a = Tensor::from_vec(1, 2, vec![1.0, f64::INFINITY]);
        assert!(matches!(svd(&a), Err(Error::NonFinite(_))));
    }

    #[test]
    fn same_bits_in_same_bits_out() {
        let mut rng = SplitMix64::new(3);
        let mut a = Tensor::zeros(20, 6);
        for v in a.data_mut() {
            *v = rng.next_gaussian();
        }
        let r1 = svd(&a).unwrap();
        let r2 = svd(&a).unwrap();
        assert_eq!(r1.sigma, r2.sigma);
        assert_eq!(r1.u.data(), r2.u.data());
        assert_eq!(r1.v.data(), r2.v.data());
    }
}
