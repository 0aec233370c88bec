//! Ridge membership.
//!
//! A point `x` lies on the `d`-dimensional ridge of `f∘p` when the gradient
//! lies in the span of the leading `d` Hessian eigenvectors and the
//! `(d+1)`-th eigenvalue is negative. Because ridges have measure zero, the
//! alignment is tested with a relative tolerance:
//! `‖Π⊥ ∇(f∘p)‖ / ‖∇(f∘p)‖ <= tol_align`, vacuous where the gradient vanishes.
//!
//! For a KDE the same test reduces to the spectrum of
//! `Γ(q,x) = Σ w_i (x_i − x)(x_i − x)ᵀ + (q − 1)(c − x)(c − x)ᵀ`
//! because `H_{f^q∘p} = (4 p^q / h⁴)(Γ − h²/2 · I)`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::cloud::{Point, PointCloud};
use crate::density::{weighted_scatter, BimodalModel, DensityModel, KdeModel, KernelStats};
use crate::error::{invalid, Error, Result};
use crate::spectral::{sym_eig, EigenPair};
use crate::transform::{normalized_hessian, PowerTransform};

pub const DEFAULT_TOL_ALIGN: f64 = 1e-6;
pub const DEFAULT_BAND: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RidgeQuery {
    pub d: usize,
    pub tol_align: f64,
    /// Required `λ_d − λ_{d+1}`; zero means only the strict sign condition.
    pub min_gap: f64,
}

impl RidgeQuery {
    pub fn new(d: usize) -> Self {
        Self { d, tol_align: DEFAULT_TOL_ALIGN, min_gap: 0.0 }
    }

    pub fn with_tol_align(mut self, tol_align: f64) -> Self {
        self.tol_align = tol_align;
        self
    }

    pub fn with_min_gap(mut self, min_gap: f64) -> Self {
        self.min_gap = min_gap;
        self
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.d >= dim {
            return Err(invalid(format!("ridge dimension {} must be below ambient dimension {dim}", self.d)));
        }
        if !(self.tol_align >= 0.0) || !(self.min_gap >= 0.0) {
            return Err(invalid("alignment tolerance and minimum gap must be nonnegative"));
        }
        Ok(())
    }

    fn gap_ok(&self, gap: f64) -> bool {
        self.min_gap == 0.0 || gap >= self.min_gap
    }
}

/// Diagnostics of a single membership test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RidgeStatus {
    pub member: bool,
    /// Relative gradient mass outside the leading-`d` eigenspace.
    pub align: f64,
    /// `λ_d − λ_{d+1}` of the matrix the test used (infinite for `d = 0`).
    pub gap: f64,
    /// `λ_{d+1}` of the same matrix.
    pub lambda_next: f64,
}

#[derive(Debug, Clone)]
pub struct GammaMatrix {
    pub matrix: DMatrix<f64>,
    pub q: f64,
    pub x: Point,
}

/// Scatter of `stats` around `x` plus `coeff·(c − x)(c − x)ᵀ`.
pub(crate) fn gamma_from_stats(
    samples: &PointCloud,
    stats: &KernelStats,
    x: &Point,
    rank_one_coeff: f64,
) -> DMatrix<f64> {
    let mut g = weighted_scatter(samples, x, stats);
    let shift = &stats.center - x;
    g.ger(rank_one_coeff, &shift, &shift, 1.0);
    g
}

/// `Γ(q, x)` over all samples.
pub fn gamma(model: &KdeModel, q: f64, x: &Point) -> Result<GammaMatrix> {
    let stats = model.kernel_stats(x)?;
    Ok(GammaMatrix { matrix: gamma_from_stats(model.samples(), &stats, x, q - 1.0), q, x: x.clone() })
}

/// `Γ_I(q, x)` with `I` the `k` samples nearest to `x` and weights
/// renormalized over `I`.
pub fn gamma_local(model: &KdeModel, q: f64, x: &Point, k: usize) -> Result<GammaMatrix> {
    let idx = model.nearest_indices(x, k)?;
    let stats = model.kernel_stats_over(x, idx)?;
    Ok(GammaMatrix { matrix: gamma_from_stats(model.samples(), &stats, x, q - 1.0), q, x: x.clone() })
}

/// `‖Π⊥ v‖ / ‖v‖` for the trailing eigenspace past index `d`; zero for `v = 0`.
fn residual_fraction(eig: &EigenPair, d: usize, v: &DVector<f64>) -> f64 {
    let norm = v.norm();
    if norm == 0.0 {
        return 0.0;
    }
    let unit = v / norm;
    let n = eig.dim();
    let tail = eig.vectors.columns(d, n - d);
    let coeffs = tail.transpose() * &unit;
    coeffs.norm().min(1.0)
}

fn leading_fraction(eig: &EigenPair, d: usize, v: &DVector<f64>) -> f64 {
    let unit = v / v.norm();
    let coeffs = eig.vectors.columns(0, d).transpose() * &unit;
    coeffs.norm().min(1.0)
}

fn status_from(eig: &EigenPair, query: &RidgeQuery, direction: &DVector<f64>, eig_margin: f64) -> RidgeStatus {
    let align = residual_fraction(eig, query.d, direction);
    let gap = eig.gap(query.d);
    RidgeStatus {
        member: align <= query.tol_align && eig_margin > 0.0 && query.gap_ok(gap),
        align,
        gap,
        lambda_next: eig.values[query.d],
    }
}

/// Ridge test on the Hessian of `f∘p`.
pub fn is_ridge_point(
    model: &dyn DensityModel,
    t: PowerTransform,
    query: &RidgeQuery,
    x: &Point,
) -> Result<RidgeStatus> {
    query.validate(model.dim())?;
    let ld = model.log_derivatives(x)?;
    let eig = sym_eig(&normalized_hessian(&ld, t))?;
    let lambda_next = eig.values[query.d];
    Ok(status_from(&eig, query, &ld.grad_ratio, -lambda_next))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KdeRidgeStatus {
    pub member: bool,
    pub align: f64,
    /// `h²/2 − λ_{d+1}(Γ)`; positive on the ridge.
    pub eig_margin: f64,
    pub gap: f64,
}

/// Ridge test through `Γ(q, x)` and the mean-shift vector `c(x) − x`.
pub fn kde_ridge_condition(
    model: &KdeModel,
    q: f64,
    query: &RidgeQuery,
    x: &Point,
) -> Result<KdeRidgeStatus> {
    kde_ridge_condition_with_coeff(model, q - 1.0, query, x)
}

/// Same as [`kde_ridge_condition`] with an explicit coefficient on the
/// rank-one term. Only the verification harness uses a coefficient other than
/// `q − 1`, to confirm that a corrupted Γ is caught.
#[doc(hidden)]
pub fn kde_ridge_condition_with_coeff(
    model: &KdeModel,
    rank_one_coeff: f64,
    query: &RidgeQuery,
    x: &Point,
) -> Result<KdeRidgeStatus> {
    query.validate(model.dim())?;
    let stats = model.kernel_stats(x)?;
    let eig = sym_eig(&gamma_from_stats(model.samples(), &stats, x, rank_one_coeff))?;
    let h = model.bandwidth();
    let eig_margin = 0.5 * h * h - eig.values[query.d];
    let s = status_from(&eig, query, &(&stats.center - x), eig_margin);
    Ok(KdeRidgeStatus { member: s.member, align: s.align, eig_margin, gap: s.gap })
}

/// `s(x) = ‖Π ∇p‖ / ‖∇p‖` with `Π` the leading-`d` eigenprojector of the
/// Hessian of `f∘p`.
pub fn cosine_score(model: &dyn DensityModel, t: PowerTransform, d: usize, x: &Point) -> Result<f64> {
    if d > model.dim() {
        return Err(invalid(format!("rank {d} exceeds dimension {}", model.dim())));
    }
    let ld = model.log_derivatives(x)?;
    if ld.grad_ratio.norm() == 0.0 {
        return Err(Error::ZeroGradient);
    }
    let eig = sym_eig(&normalized_hessian(&ld, t))?;
    Ok(leading_fraction(&eig, d, &ld.grad_ratio))
}

/// Cosine score and the normal direction `u` (trailing eigenvector of Γ) for
/// a KDE in the plane with `d = 1`, so that `Π⊥ = u uᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample {
    /// `None` where the mean-shift vector vanishes.
    pub score: Option<f64>,
    pub normal: DVector<f64>,
}

pub fn kde_field_sample(model: &KdeModel, q: f64, d: usize, x: &Point) -> Result<FieldSample> {
    let dim = model.dim();
    if d >= dim {
        return Err(invalid(format!("rank {d} must be below dimension {dim}")));
    }
    let stats = model.kernel_stats(x)?;
    let eig = sym_eig(&gamma_from_stats(model.samples(), &stats, x, q - 1.0))?;
    let shift = &stats.center - x;
    let score = (shift.norm() > 0.0).then(|| leading_fraction(&eig, d, &shift));
    Ok(FieldSample { score, normal: eig.vectors.column(dim - 1).into_owned() })
}

/// Axis-aligned box `lo[k] <= x_k <= hi[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl GridBox {
    pub fn square(lo: f64, hi: f64, dim: usize) -> Self {
        Self { lo: vec![lo; dim], hi: vec![hi; dim] }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn validate(&self, resolution: usize) -> Result<()> {
        if resolution < 2 {
            return Err(invalid("grid resolution must be at least 2"));
        }
        if self.lo.len() != self.hi.len() || self.lo.is_empty() {
            return Err(invalid("grid bounds must have matching nonzero dimension"));
        }
        for (l, h) in self.lo.iter().zip(&self.hi) {
            if !l.is_finite() || !h.is_finite() || l > h {
                return Err(invalid(format!("invalid grid bounds [{l}, {h}]")));
            }
        }
        Ok(())
    }

    pub fn cell(&self, resolution: usize, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / (resolution - 1) as f64
    }

    pub fn coordinate(&self, resolution: usize, axis: usize, i: usize) -> f64 {
        self.lo[axis] + (self.hi[axis] - self.lo[axis]) * i as f64 / (resolution - 1) as f64
    }

    /// All nodes, first axis slowest.
    pub fn nodes(&self, resolution: usize) -> Vec<(Vec<usize>, Point)> {
        let dim = self.dim();
        let total = resolution.pow(dim as u32);
        (0..total)
            .map(|mut flat| {
                let mut index = vec![0; dim];
                for axis in (0..dim).rev() {
                    index[axis] = flat % resolution;
                    flat /= resolution;
                }
                let coords = index
                    .iter()
                    .enumerate()
                    .map(|(axis, &i)| self.coordinate(resolution, axis, i));
                (index.clone(), DVector::from_iterator(dim, coords))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridNode {
    pub index: Vec<usize>,
    pub point: Point,
    pub status: RidgeStatus,
}

/// Evaluates [`is_ridge_point`] at every node; output is in node order.
pub fn grid_evaluate(
    model: &dyn DensityModel,
    t: PowerTransform,
    query: &RidgeQuery,
    bounds: &GridBox,
    resolution: usize,
) -> Result<Vec<GridNode>> {
    bounds.validate(resolution)?;
    if bounds.dim() != model.dim() {
        return Err(invalid("grid dimension does not match the model"));
    }
    query.validate(model.dim())?;
    bounds
        .nodes(resolution)
        .into_par_iter()
        .map(|(index, point)| {
            let status = is_ridge_point(model, t, query, &point)?;
            Ok(GridNode { index, point, status })
        })
        .collect()
}

/// Grid nodes flagged as ridge members.
pub fn grid_ridge_set(
    model: &dyn DensityModel,
    t: PowerTransform,
    query: &RidgeQuery,
    bounds: &GridBox,
    resolution: usize,
) -> Result<Vec<GridNode>> {
    Ok(grid_evaluate(model, t, query, bounds, resolution)?
        .into_iter()
        .filter(|n| n.status.member)
        .collect())
}

/// Analytic 1-D ridge of `f^q ∘ exp(−x₁² − 2x₂²)`; `band` is the spatial
/// tolerance around the measure-zero axis sets.
///
/// The off-axis branch for `q > 0` is `{(0, x₂) : x₂² > 1/(8q)}`, read off the
/// Hessian `4p^q·(diag(−1/2, −1) + q·diag(x₁², 4x₂²))` on the `x₂`-axis.
pub fn analytic_ridge_unimodal(q: f64, x: &[f64], band: f64) -> bool {
    let on_x1_axis = x[1].abs() <= band;
    let on_x2_axis = x[0].abs() <= band;
    if q < 0.0 {
        on_x1_axis && x[0] * x[0] < -1.0 / (2.0 * q)
    } else if q == 0.0 {
        on_x1_axis
    } else {
        on_x1_axis || (on_x2_axis && x[1] * x[1] > 1.0 / (8.0 * q))
    }
}

/// Analytic 1-D ridge of `f^q ∘ (p₁ + p₂)` for the two-bump model.
///
/// On the `x₁`-axis the condition is `1/2 + a²(1 − δ*²) > −q (x₁ + aδ*)²`.
/// For `q > 0` the extra branches sit on the vertical lines `x₁ = s` with
/// `s + aδ*(s) = 0`, where they need `−1/2 + a² − s² < 0` and
/// `x₂² > (1/2 + a² − s²)/(4q)`.
pub fn analytic_ridge_bimodal(q: f64, a: f64, x: &[f64], band: f64) -> bool {
    let model = BimodalModel::new(a).expect("mode separation must be nonnegative");
    let x1 = x[0];
    let x2 = x[1];
    if x2.abs() <= band {
        let delta = model.delta_star(x1);
        let shift = x1 + a * delta;
        if 0.5 + a * a * (1.0 - delta * delta) > -q * shift * shift {
            return true;
        }
    }
    if q > 0.0 {
        for s in model.balance_roots() {
            if (x1 - s).abs() <= band {
                let tail = -0.5 + a * a - s * s;
                if tail < 0.0 && x2 * x2 > (0.5 + a * a - s * s) / (4.0 * q) {
                    return true;
                }
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::UnimodalModel;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pt(v: &[f64]) -> Point {
        DVector::from_column_slice(v)
    }

    fn t(q: f64) -> PowerTransform {
        PowerTransform::new(q).unwrap()
    }

    fn random_kde(seed: u64, n: usize, h: f64) -> KdeModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cloud = PointCloud::from_flat(2, (0..2 * n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        KdeModel::new(cloud, h).unwrap()
    }

    fn gamma_oracle(cloud: &PointCloud, h: f64, q: f64, x: &Point, idx: &[usize]) -> DMatrix<f64> {
        let raw: Vec<f64> = idx
            .iter()
            .map(|&i| (-(pt(cloud.row(i)) - x).norm_squared() / (h * h)).exp())
            .collect();
        let total: f64 = raw.iter().sum();
        let mut c = DVector::zeros(2);
        let mut cov = DMatrix::zeros(2, 2);
        for (&i, r) in idx.iter().zip(&raw) {
            let xi = pt(cloud.row(i));
            c += &xi * (r / total);
            let diff = &xi - x;
            cov += &diff * diff.transpose() * (r / total);
        }
        let m = c - x;
        cov + &m * m.transpose() * (q - 1.0)
    }

    #[test]
    fn gamma_examples() {
        let one = KdeModel::new(PointCloud::from_rows(&[vec![0.5, 0.5]]).unwrap(), 1.0).unwrap();
        let g = gamma(&one, -3.0, &pt(&[0.5, 0.5])).unwrap();
        assert_eq!(g.matrix, DMatrix::zeros(2, 2));

        let kde = random_kde(1, 6, 0.7);
        let x = pt(&[0.1, -0.2]);
        let all: Vec<usize> = (0..6).collect();
        for q in [-2.0, 0.0, 0.5, 1.0] {
            let g = gamma(&kde, q, &x).unwrap();
            let oracle = gamma_oracle(kde.samples(), 0.7, q, &x, &all);
            assert!((&g.matrix - &oracle).amax() < 1e-12);
        }
        let g1 = gamma(&kde, 1.0, &x).unwrap();
        let stats = kde.kernel_stats(&x).unwrap();
        assert_eq!(g1.matrix, kde.weighted_scatter(&x, &stats));
    }

    #[test]
    fn gamma_local_examples() {
        let kde = random_kde(2, 9, 0.5);
        let x = pt(&[0.3, 0.1]);
        for q in [-1.0, 0.0, 0.8] {
            let full = gamma(&kde, q, &x).unwrap();
            let local = gamma_local(&kde, q, &x, 9).unwrap();
            assert!((&full.matrix - &local.matrix).amax() < 1e-14);

            let nn = kde.nearest_indices(&x, 1).unwrap()[0];
            let diff = pt(kde.samples().row(nn)) - &x;
            let one = gamma_local(&kde, q, &x, 1).unwrap();
            let expect = &diff * diff.transpose() * q;
            assert!((&one.matrix - &expect).amax() < 1e-14);

            let idx = kde.nearest_indices(&x, 3).unwrap();
            let three = gamma_local(&kde, q, &x, 3).unwrap();
            let oracle = gamma_oracle(kde.samples(), 0.5, q, &x, &idx);
            assert!((&three.matrix - &oracle).amax() < 1e-12);
        }
        assert!(gamma_local(&kde, 0.0, &x, 10).is_err());
    }

    #[test]
    fn unimodal_membership_examples() {
        let q = RidgeQuery::new(1);
        assert!(is_ridge_point(&UnimodalModel, t(0.0), &q, &pt(&[0.7, 0.0])).unwrap().member);
        assert!(!is_ridge_point(&UnimodalModel, t(-1.0), &q, &pt(&[1.0, 0.0])).unwrap().member);
        assert!(is_ridge_point(&UnimodalModel, t(-1.0), &q, &pt(&[0.5, 0.0])).unwrap().member);
        for qq in [-1e4, -1.0, 0.0, 0.5, 1.0] {
            let s = is_ridge_point(&UnimodalModel, t(qq), &q, &pt(&[0.0, 0.0])).unwrap();
            assert!(s.member);
            assert_eq!(s.align, 0.0);
            assert!(s.lambda_next < 0.0);
        }
        assert!(is_ridge_point(&UnimodalModel, t(0.0), &RidgeQuery::new(2), &pt(&[0.0, 0.0])).is_err());
    }

    #[test]
    fn off_axis_branch_threshold_follows_hessian() {
        // On the x₂-axis, e₂ leads iff 16q·x₂² − 4 > −2, i.e. x₂² > 1/(8q).
        let q = RidgeQuery::new(1);
        for qq in [0.25, 0.5, 1.0] {
            let edge = (1.0 / (8.0 * qq) as f64).sqrt();
            let inside = is_ridge_point(&UnimodalModel, t(qq), &q, &pt(&[0.0, edge * 0.98])).unwrap();
            let outside = is_ridge_point(&UnimodalModel, t(qq), &q, &pt(&[0.0, edge * 1.02])).unwrap();
            assert!(!inside.member);
            assert!(outside.member);
        }
        // The point (0, 0.6) at q = 0.5 has x₂² = 0.36 > 0.25.
        assert!(is_ridge_point(&UnimodalModel, t(0.5), &q, &pt(&[0.0, 0.6])).unwrap().member);
        assert!(analytic_ridge_unimodal(0.5, &[0.0, 0.6], DEFAULT_BAND));
    }

    #[test]
    fn analytic_unimodal_examples() {
        assert!(analytic_ridge_unimodal(-1.0, &[0.5, 0.0], DEFAULT_BAND));
        assert!(!analytic_ridge_unimodal(-1.0, &[0.75, 0.0], DEFAULT_BAND));
        assert!(analytic_ridge_unimodal(0.0, &[12.0, 0.0], DEFAULT_BAND));
        assert!(!analytic_ridge_unimodal(0.0, &[0.0, 1.0], DEFAULT_BAND));
        assert!(!analytic_ridge_unimodal(0.5, &[0.0, 0.45], DEFAULT_BAND));
        assert!(!analytic_ridge_unimodal(1.0, &[0.1, 0.45], DEFAULT_BAND));
    }

    #[test]
    fn bimodal_reduces_to_unimodal_at_zero_separation() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..2000 {
            let q = [-10.0, -1.0, -0.3, 0.0, 0.2, 0.5, 1.0][rng.random_range(0..7)];
            let x1 = rng.random_range(-3.0..3.0);
            let x2 = rng.random_range(-3.0..3.0);
            for x in [[x1, x2], [x1, 0.0], [0.0, x2]] {
                assert_eq!(
                    analytic_ridge_bimodal(q, 0.0, &x, DEFAULT_BAND),
                    analytic_ridge_unimodal(q, &x, DEFAULT_BAND),
                    "q={q} x={x:?}"
                );
            }
        }
    }

    #[test]
    fn kde_condition_examples() {
        let one = KdeModel::new(PointCloud::from_rows(&[vec![0.0, 0.0]]).unwrap(), 0.5).unwrap();
        let s = kde_ridge_condition(&one, 0.0, &RidgeQuery::new(0), &pt(&[0.0, 0.0])).unwrap();
        assert!(s.member);
        assert_eq!(s.eig_margin, 0.125);

        let two = KdeModel::new(PointCloud::from_rows(&[vec![-0.2, 0.0], vec![0.2, 0.0]]).unwrap(), 0.5)
            .unwrap();
        let s = kde_ridge_condition(&two, 1.0, &RidgeQuery::new(1), &pt(&[0.0, 0.0])).unwrap();
        // Γ = diag(0.04, 0): leading direction along the sample axis, λ₂ = 0 < h²/2.
        assert!(s.member);
        assert_abs_diff_eq!(s.eig_margin, 0.125, epsilon = 1e-15);
        let g = gamma(&two, 1.0, &pt(&[0.0, 0.0])).unwrap();
        assert_abs_diff_eq!(g.matrix, DMatrix::from_diagonal(&pt(&[0.04, 0.0])), epsilon = 1e-15);
    }

    #[test]
    fn kde_condition_matches_hessian_predicate() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let kde = random_kde(7, 15, 0.45);
        for _ in 0..200 {
            let x = pt(&[rng.random_range(-1.2..1.2), rng.random_range(-1.2..1.2)]);
            let q = rng.random_range(-5.0..1.0);
            let tol = 0.2;
            let query = RidgeQuery::new(1).with_tol_align(tol);
            let a = kde_ridge_condition(&kde, q, &query, &x).unwrap();
            let b = is_ridge_point(&kde, t(q), &query, &x).unwrap();
            assert!((a.align - b.align).abs() < 1e-8);
            let h2 = 0.45 * 0.45;
            assert!((a.eig_margin * 4.0 / (h2 * h2) + b.lambda_next).abs() < 1e-8 * (1.0 + b.lambda_next.abs()));
            if a.align < tol / 10.0 || a.align > tol * 10.0 {
                assert_eq!(a.member, b.member);
            }
        }
    }

    #[test]
    fn cosine_examples() {
        for x1 in [-2.0, -0.3, 0.4, 1.7] {
            let s = cosine_score(&UnimodalModel, t(0.0), 1, &pt(&[x1, 0.0])).unwrap();
            assert_abs_diff_eq!(s, 1.0, epsilon = 1e-8);
        }
        assert!(matches!(
            cosine_score(&UnimodalModel, t(0.0), 1, &pt(&[0.0, 0.0])),
            Err(Error::ZeroGradient)
        ));
        let kde = random_kde(3, 10, 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let x = pt(&[rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]);
            let q = rng.random_range(-3.0..1.0);
            assert_abs_diff_eq!(cosine_score(&kde, t(q), 2, &x).unwrap(), 1.0, epsilon = 1e-12);
            let s = cosine_score(&kde, t(q), 1, &x).unwrap();
            let r = is_ridge_point(&kde, t(q), &RidgeQuery::new(1), &x).unwrap();
            assert_abs_diff_eq!(s * s + r.align * r.align, 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn grid_on_unimodal_log_ridge_is_the_axis() {
        let b = GridBox::square(-2.0, 2.0, 2);
        let members = grid_ridge_set(&UnimodalModel, t(0.0), &RidgeQuery::new(1), &b, 81).unwrap();
        assert_eq!(members.len(), 81);
        assert!(members.iter().all(|n| n.point[1] == 0.0 && n.index[1] == 40));
    }

    #[test]
    fn grid_missing_the_ridge_is_empty() {
        // Even resolution never lands on x₂ = 0.
        let b = GridBox::square(-2.0, 2.0, 2);
        let q = RidgeQuery::new(1).with_tol_align(0.0);
        assert!(grid_ridge_set(&UnimodalModel, t(-1.0), &q, &b, 80).unwrap().is_empty());
        assert!(b.validate(1).is_err());
    }

    #[test]
    fn grid_sets_nest_along_q() {
        let b = GridBox::square(-3.0, 3.0, 2);
        let query = RidgeQuery::new(1);
        let sets: Vec<Vec<Vec<usize>>> = [-1.0, 0.0, 1.0]
            .iter()
            .map(|&q| {
                grid_ridge_set(&UnimodalModel, t(q), &query, &b, 61)
                    .unwrap()
                    .into_iter()
                    .map(|n| n.index)
                    .collect()
            })
            .collect();
        for w in sets.windows(2) {
            assert!(w[0].iter().all(|i| w[1].contains(i)));
        }
        assert!(sets[0].len() < sets[1].len() && sets[1].len() < sets[2].len());
    }
}
