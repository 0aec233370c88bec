//! Symmetric eigendecomposition and spectral projectors.
//!
//! Eigenvalues are returned in non-increasing order. Each eigenvector is
//! normalized so that its largest-magnitude entry is positive (lowest index
//! wins among equal magnitudes), which makes every downstream projector a
//! deterministic function of the input matrix. Subspaces are compared through
//! their projector matrices, never through raw bases.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{invalid, Result};

/// Relative slack used when deciding which entries tie for largest magnitude.
const SIGN_TIE_RTOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct EigenPair {
    /// Non-increasing.
    pub values: DVector<f64>,
    /// Column `k` pairs with `values[k]`.
    pub vectors: DMatrix<f64>,
}

impl EigenPair {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `vectors * diag(values) * vectorsᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.vectors * DMatrix::from_diagonal(&self.values) * self.vectors.transpose()
    }

    /// `λ_d − λ_{d+1}` with 1-based eigenvalue indices; infinite when either
    /// side of the split is empty.
    pub fn gap(&self, d: usize) -> f64 {
        if d == 0 || d >= self.dim() {
            f64::INFINITY
        } else {
            self.values[d - 1] - self.values[d]
        }
    }

    /// Projector onto the span of the leading `d` eigenvectors.
    pub fn top_projector(&self, d: usize) -> Result<Projector> {
        let n = self.dim();
        if d > n {
            return Err(invalid(format!("projector rank {d} exceeds dimension {n}")));
        }
        let basis = self.vectors.columns(0, d);
        Ok(Projector {
            matrix: &basis * basis.transpose(),
            rank: d,
            gap: self.gap(d),
        })
    }
}

#[derive(Debug, Clone)]
pub struct Projector {
    pub matrix: DMatrix<f64>,
    pub rank: usize,
    /// Eigengap at the split that produced this projector.
    pub gap: f64,
}

impl Projector {
    pub fn residual_projector(&self) -> DMatrix<f64> {
        DMatrix::identity(self.matrix.nrows(), self.matrix.ncols()) - &self.matrix
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.matrix * v
    }
}

fn check_square_finite(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(invalid(format!("matrix is {}x{}, expected square", m.nrows(), m.ncols())));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(invalid("matrix has non-finite entries"));
    }
    Ok(())
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn normalize_sign(v: &mut nalgebra::DVectorViewMut<'_, f64>) {
    let max = v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    if max == 0.0 {
        return;
    }
    let pivot = v
        .iter()
        .position(|x| x.abs() >= max * (1.0 - SIGN_TIE_RTOL))
        .unwrap_or(0);
    if v[pivot] < 0.0 {
        v.neg_mut();
    }
}

/// Eigendecomposition of the symmetric part of `m`.
pub fn sym_eig(m: &DMatrix<f64>) -> Result<EigenPair> {
    check_square_finite(m)?;
    let n = m.nrows();
    let eig = SymmetricEigen::new(symmetrize(m));

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let values = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
        let mut col = vectors.column_mut(dst);
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
        }
        normalize_sign(&mut col);
    }
    Ok(EigenPair { values, vectors })
}

/// Projector onto the leading-`d` eigenspace of `m`.
pub fn top_projector(m: &DMatrix<f64>, d: usize) -> Result<Projector> {
    if d > m.nrows() {
        return Err(invalid(format!("projector rank {d} exceeds dimension {}", m.nrows())));
    }
    sym_eig(m)?.top_projector(d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankOneBias {
    /// `‖Π_A u‖` with `A = B + λuuᵀ`.
    pub lhs: f64,
    /// `‖Π_B u‖`.
    pub rhs: f64,
    pub holds: bool,
}

/// Compares how much of `u` the leading-`d` eigenspace captures before and
/// after adding the positive rank-one term `λuuᵀ`.
pub fn check_rank_one_bias(
    b: &DMatrix<f64>,
    u: &DVector<f64>,
    lambda: f64,
    d: usize,
) -> Result<RankOneBias> {
    check_square_finite(b)?;
    if u.len() != b.nrows() {
        return Err(invalid("vector length does not match matrix dimension"));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(invalid(format!("rank-one weight must be finite and nonnegative, got {lambda}")));
    }
    let a = b + lambda * u * u.transpose();
    let lhs = top_projector(&a, d)?.apply(u).norm();
    let rhs = top_projector(b, d)?.apply(u).norm();
    Ok(RankOneBias { lhs, rhs, holds: lhs >= rhs - 1e-10 })
}

/// Builds `u = U_d·alpha` from the leading eigenvectors of `b` and reports
/// whether eigenvalues `d+1..D` of `b + λuuᵀ` match those of `b`.
pub fn check_tail_spectrum_preserved(
    b: &DMatrix<f64>,
    alpha: &DVector<f64>,
    lambda: f64,
    d: usize,
) -> Result<bool> {
    Ok(tail_spectrum_deviation(b, alpha, lambda, d)? <= 1e-9)
}

/// Largest absolute change among the trailing `D − d` eigenvalues.
pub fn tail_spectrum_deviation(
    b: &DMatrix<f64>,
    alpha: &DVector<f64>,
    lambda: f64,
    d: usize,
) -> Result<f64> {
    check_square_finite(b)?;
    let n = b.nrows();
    if d > n || alpha.len() != d {
        return Err(invalid(format!(
            "coefficient vector must have length d={d} with d <= {n}"
        )));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(invalid(format!("rank-one weight must be finite and nonnegative, got {lambda}")));
    }
    let eb = sym_eig(b)?;
    let u = eb.vectors.columns(0, d) * alpha;
    let ea = sym_eig(&(b + lambda * &u * u.transpose()))?;
    Ok((d..n)
        .map(|k| (ea.values[k] - eb.values[k]).abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sym(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
        let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        symmetrize(&m)
    }

    #[test]
    fn diagonal_input() {
        let e = sym_eig(&DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0]))).unwrap();
        assert_eq!(e.values.as_slice(), &[3.0, 1.0]);
        assert_abs_diff_eq!(e.vectors, DMatrix::identity(2, 2), epsilon = 1e-15);

        let e = sym_eig(&DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 3.0]))).unwrap();
        assert_eq!(e.values.as_slice(), &[3.0, 1.0]);
        assert_abs_diff_eq!(e.vectors[(1, 0)], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn identity_gives_orthonormal_basis() {
        let e = sym_eig(&DMatrix::identity(2, 2)).unwrap();
        assert_eq!(e.values.as_slice(), &[1.0, 1.0]);
        let g = e.vectors.transpose() * &e.vectors;
        assert_abs_diff_eq!(g, DMatrix::identity(2, 2), epsilon = 1e-10);
    }

    #[test]
    fn random_reconstruction_and_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=8 {
            for _ in 0..20 {
                let m = random_sym(&mut rng, n);
                let e = sym_eig(&m).unwrap();
                for k in 1..n {
                    assert!(e.values[k - 1] >= e.values[k]);
                }
                let g = e.vectors.transpose() * &e.vectors;
                assert!((g - DMatrix::identity(n, n)).amax() < 1e-10);
                let rel = (e.reconstruct() - &m).norm() / m.norm().max(1e-300);
                assert!(rel < 1e-9, "reconstruction error {rel}");
                for k in 0..n {
                    let col = e.vectors.column(k);
                    let max = col.amax();
                    let first = col.iter().position(|x| x.abs() >= max * (1.0 - 1e-12)).unwrap();
                    assert!(col[first] > 0.0);
                }
            }
        }
    }

    #[test]
    fn rejects_non_finite() {
        let mut m = DMatrix::identity(2, 2);
        m[(0, 1)] = f64::NAN;
        assert!(sym_eig(&m).is_err());
        assert!(sym_eig(&DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn projector_examples() {
        let p = top_projector(&DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0])), 1).unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert_abs_diff_eq!(p.matrix, expect, epsilon = 1e-15);
        assert_eq!(p.gap, 2.0);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_sym(&mut rng, 4);
        let full = top_projector(&m, 4).unwrap();
        assert_abs_diff_eq!(full.matrix, DMatrix::identity(4, 4), epsilon = 1e-12);

        // Degenerate leading pair: compare projectors, not bases.
        let p = top_projector(&DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 2.0, -1.0])), 2)
            .unwrap();
        let expect = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, 0.0]));
        assert_abs_diff_eq!(p.matrix, expect, epsilon = 1e-12);
        assert_eq!(p.gap, 3.0);

        assert!(top_projector(&m, 5).is_err());
    }

    #[test]
    fn projector_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 1..=6 {
            let m = random_sym(&mut rng, n);
            for d in 0..=n {
                let p = top_projector(&m, d).unwrap();
                assert!((&p.matrix * &p.matrix - &p.matrix).amax() < 1e-9);
                assert!((p.matrix.trace() - d as f64).abs() < 1e-8);
                assert!((&p.matrix - p.matrix.transpose()).amax() < 1e-15);
            }
        }
    }

    #[test]
    fn rank_one_bias_examples() {
        // A = diag(1, 2): the leading direction flips to e2.
        let b = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0]));
        let u = DVector::from_vec(vec![0.0, 1.0]);
        let r = check_rank_one_bias(&b, &u, 2.0, 1).unwrap();
        assert_abs_diff_eq!(r.lhs, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.rhs, 0.0, epsilon = 1e-12);
        assert!(r.holds);

        let r = check_rank_one_bias(&b, &DVector::from_vec(vec![0.6, 0.8]), 0.0, 1).unwrap();
        assert_eq!(r.lhs, r.rhs);
        assert!(r.holds);

        assert!(check_rank_one_bias(&b, &u, -1.0, 1).is_err());
    }

    #[test]
    fn tail_spectrum_examples() {
        let b = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 2.0, 1.0]));
        let alpha = DVector::from_vec(vec![1.0, 0.0]);
        assert!(check_tail_spectrum_preserved(&b, &alpha, 5.0, 2).unwrap());
        assert!(check_tail_spectrum_preserved(&b, &alpha, 0.0, 2).unwrap());

        // Outside the leading span the tail moves: diag(3,2,1) + 5·e3e3ᵀ.
        let e3 = DVector::from_vec(vec![0.0, 0.0, 1.0]);
        let a = &b + 5.0 * &e3 * e3.transpose();
        let ea = sym_eig(&a).unwrap();
        assert!((ea.values[2] - 1.0).abs() > 0.5);
    }
}
