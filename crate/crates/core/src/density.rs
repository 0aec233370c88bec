//! Density models exposing `p`, `∇p` and `H_p`.
//!
//! Every model works in the log domain: the primitive it provides is
//! `(log p, ∇p/p, H_p/p)`. These ratios stay finite far from the data, where
//! `p` itself underflows, and they are all the ridge machinery needs.

use nalgebra::{DMatrix, DVector};

use crate::cloud::{dist2, Point, PointCloud};
use crate::error::{invalid, Error, Result};

/// `log p`, `∇p / p` and `H_p / p` at a point.
#[derive(Debug, Clone)]
pub struct LogDerivatives {
    pub log_p: f64,
    pub grad_ratio: DVector<f64>,
    pub hess_ratio: DMatrix<f64>,
}

pub trait DensityModel: Sync {
    fn dim(&self) -> usize;

    fn log_derivatives(&self, x: &Point) -> Result<LogDerivatives>;

    fn log_p(&self, x: &Point) -> Result<f64> {
        Ok(self.log_derivatives(x)?.log_p)
    }

    fn eval_p(&self, x: &Point) -> Result<f64> {
        positive_exp(self.log_p(x)?)
    }

    fn eval_grad(&self, x: &Point) -> Result<DVector<f64>> {
        let ld = self.log_derivatives(x)?;
        Ok(ld.grad_ratio * positive_exp(ld.log_p)?)
    }

    fn eval_hess(&self, x: &Point) -> Result<DMatrix<f64>> {
        let ld = self.log_derivatives(x)?;
        Ok(ld.hess_ratio * positive_exp(ld.log_p)?)
    }
}

fn positive_exp(log_p: f64) -> Result<f64> {
    let p = log_p.exp();
    if p > 0.0 && p.is_finite() {
        Ok(p)
    } else {
        Err(Error::Domain(format!(
            "density exp({log_p}) is not representable as a positive float"
        )))
    }
}

pub(crate) fn check_point(x: &Point, dim: usize) -> Result<()> {
    if x.len() != dim {
        return Err(invalid(format!("point has {} coordinates, model dimension is {dim}", x.len())));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(invalid("point has non-finite coordinates"));
    }
    Ok(())
}

/// Softmax of `logits` computed after subtracting the maximum; returns the
/// weights and `log Σ exp(logits)`.
pub(crate) fn softmax(logits: &[f64]) -> (Vec<f64>, f64) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = w.iter().sum();
    for v in &mut w {
        *v /= total;
    }
    (w, max + total.ln())
}

/// Gaussian KDE `p(x) = 1/(n h^D) Σ exp(−‖x − x_i‖² / h²)`.
#[derive(Debug, Clone)]
pub struct KdeModel {
    samples: PointCloud,
    bandwidth: f64,
}

/// Kernel weights and weighted center over a subset of samples.
#[derive(Debug, Clone)]
pub struct KernelStats {
    pub indices: Vec<usize>,
    pub weights: Vec<f64>,
    pub center: DVector<f64>,
    /// `log Σ exp(−‖x − x_i‖²/h²)` over the subset.
    pub log_mass: f64,
}

impl KdeModel {
    pub fn new(samples: PointCloud, bandwidth: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(invalid("KDE needs at least one sample"));
        }
        if !(bandwidth > 0.0) || !bandwidth.is_finite() {
            return Err(invalid(format!("bandwidth must be positive and finite, got {bandwidth}")));
        }
        if !samples.is_finite() {
            return Err(invalid("KDE samples must be finite"));
        }
        Ok(Self { samples, bandwidth })
    }

    pub fn samples(&self) -> &PointCloud {
        &self.samples
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Same samples, different bandwidth.
    pub fn with_bandwidth(&self, bandwidth: f64) -> Result<Self> {
        Self::new(self.samples.clone(), bandwidth)
    }

    /// Weights and center restricted to `indices`, renormalized to sum to one.
    pub fn kernel_stats_over(&self, x: &Point, indices: Vec<usize>) -> Result<KernelStats> {
        check_point(x, self.samples.dim())?;
        kernel_stats_for(&self.samples, self.bandwidth, x, indices)
    }

    pub fn kernel_stats(&self, x: &Point) -> Result<KernelStats> {
        self.kernel_stats_over(x, (0..self.len()).collect())
    }

    /// Normalized kernel weights `w(x, x_i)`.
    pub fn kde_weights(&self, x: &Point) -> Result<Vec<f64>> {
        Ok(self.kernel_stats(x)?.weights)
    }

    /// `c(x) = Σ w(x, x_i) x_i`.
    pub fn weighted_center(&self, x: &Point) -> Result<DVector<f64>> {
        Ok(self.kernel_stats(x)?.center)
    }

    /// Indices of the `k` samples nearest to `x`, ties broken by index.
    pub fn nearest_indices(&self, x: &Point, k: usize) -> Result<Vec<usize>> {
        check_point(x, self.samples.dim())?;
        nearest_indices(&self.samples, x.as_slice(), k)
    }

    /// `Σ w_i (x_i − x)(x_i − x)ᵀ` for the given stats.
    pub fn weighted_scatter(&self, x: &Point, stats: &KernelStats) -> DMatrix<f64> {
        weighted_scatter(&self.samples, x, stats)
    }
}

/// Kernel weights over `indices` at bandwidth `h`, renormalized over the subset.
/// Indices are summed in ascending order, so the full index set reproduces the
/// all-sample result bit for bit.
pub(crate) fn kernel_stats_for(
    samples: &PointCloud,
    h: f64,
    x: &Point,
    mut indices: Vec<usize>,
) -> Result<KernelStats> {
    if indices.is_empty() {
        return Err(Error::IsolatedPoint);
    }
    indices.sort_unstable();
    let h2 = h * h;
    let logits: Vec<f64> = indices
        .iter()
        .map(|&i| -dist2(x.as_slice(), samples.row(i)) / h2)
        .collect();
    let (weights, log_mass) = softmax(&logits);
    let mut center = DVector::zeros(samples.dim());
    for (&i, &w) in indices.iter().zip(&weights) {
        for (c, s) in center.iter_mut().zip(samples.row(i)) {
            *c += w * s;
        }
    }
    Ok(KernelStats { indices, weights, center, log_mass })
}

pub(crate) fn weighted_scatter(samples: &PointCloud, x: &Point, stats: &KernelStats) -> DMatrix<f64> {
    let dim = samples.dim();
    let mut scatter = DMatrix::zeros(dim, dim);
    let mut diff = DVector::zeros(dim);
    for (&i, &w) in stats.indices.iter().zip(&stats.weights) {
        if w == 0.0 {
            continue;
        }
        for (k, s) in samples.row(i).iter().enumerate() {
            diff[k] = s - x[k];
        }
        scatter.ger(w, &diff, &diff, 1.0);
    }
    scatter
}

pub(crate) fn nearest_indices(samples: &PointCloud, x: &[f64], k: usize) -> Result<Vec<usize>> {
    let n = samples.len();
    if k == 0 || k > n {
        return Err(invalid(format!("neighbor count {k} must be in 1..={n}")));
    }
    let mut keyed: Vec<(f64, usize)> =
        samples.rows().enumerate().map(|(i, r)| (dist2(x, r), i)).collect();
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < n {
        keyed.select_nth_unstable_by(k - 1, cmp);
        keyed.truncate(k);
    }
    keyed.sort_by(cmp);
    Ok(keyed.into_iter().map(|(_, i)| i).collect())
}

impl DensityModel for KdeModel {
    fn dim(&self) -> usize {
        self.samples.dim()
    }

    fn log_derivatives(&self, x: &Point) -> Result<LogDerivatives> {
        let stats = self.kernel_stats(x)?;
        let dim = self.dim();
        let h2 = self.bandwidth * self.bandwidth;
        let n = self.len() as f64;
        let log_p = stats.log_mass - n.ln() - dim as f64 * self.bandwidth.ln();
        let grad_ratio = (&stats.center - x) * (2.0 / h2);
        let hess_ratio = self.weighted_scatter(x, &stats) * (4.0 / (h2 * h2))
            - DMatrix::identity(dim, dim) * (2.0 / h2);
        Ok(LogDerivatives { log_p, grad_ratio, hess_ratio })
    }
}

/// `p(x) = exp(−x₁² − 2x₂²)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct UnimodalModel;

impl DensityModel for UnimodalModel {
    fn dim(&self) -> usize {
        2
    }

    fn log_derivatives(&self, x: &Point) -> Result<LogDerivatives> {
        check_point(x, 2)?;
        let log_p = -x[0] * x[0] - 2.0 * x[1] * x[1];
        let g = DVector::from_vec(vec![-2.0 * x[0], -4.0 * x[1]]);
        let hess_ratio = &g * g.transpose() + DMatrix::from_diagonal(&DVector::from_vec(vec![-2.0, -4.0]));
        Ok(LogDerivatives { log_p, grad_ratio: g, hess_ratio })
    }
}

/// `p(x) = exp(−(x₁+a)² − 2x₂²) + exp(−(x₁−a)² − 2x₂²)`.
#[derive(Debug, Clone, Copy)]
pub struct BimodalModel {
    a: f64,
}

impl BimodalModel {
    pub fn new(a: f64) -> Result<Self> {
        if !(a >= 0.0) || !a.is_finite() {
            return Err(invalid(format!("mode half-separation must be finite and >= 0, got {a}")));
        }
        Ok(Self { a })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    /// `δ*(x₁) = (p₁ − p₂)/p`, which simplifies to `−tanh(2a·x₁)`.
    pub fn delta_star(&self, x1: f64) -> f64 {
        -(2.0 * self.a * x1).tanh()
    }

    /// Roots of `x₁ + a·δ*(x₁) = 0`, ascending. Zero is always a root; the
    /// others are bracketed by sign changes on a uniform scan of
    /// `[−a−1, a+1]` and refined by bisection to 1e-12.
    pub fn balance_roots(&self) -> Vec<f64> {
        let g = |t: f64| t + self.a * self.delta_star(t);
        let lo = -self.a - 1.0;
        let hi = self.a + 1.0;
        let steps = 4000;
        let mut roots = vec![0.0];
        let mut prev = (lo, g(lo));
        for s in 1..=steps {
            let t = lo + (hi - lo) * s as f64 / steps as f64;
            let cur = (t, g(t));
            if prev.1 * cur.1 < 0.0 {
                let (mut a, mut b) = (prev.0, cur.0);
                let mut ga = prev.1;
                while b - a > 1e-12 {
                    let m = 0.5 * (a + b);
                    let gm = g(m);
                    if gm == 0.0 {
                        a = m;
                        b = m;
                        break;
                    }
                    if ga * gm < 0.0 {
                        b = m;
                    } else {
                        a = m;
                        ga = gm;
                    }
                }
                let r = 0.5 * (a + b);
                if r.abs() > 1e-9 {
                    roots.push(r);
                }
            }
            prev = cur;
        }
        roots.sort_by(f64::total_cmp);
        roots
    }
}

impl DensityModel for BimodalModel {
    fn dim(&self) -> usize {
        2
    }

    fn log_derivatives(&self, x: &Point) -> Result<LogDerivatives> {
        check_point(x, 2)?;
        let centers = [-self.a, self.a];
        let logits: Vec<f64> = centers
            .iter()
            .map(|c| -(x[0] - c) * (x[0] - c) - 2.0 * x[1] * x[1])
            .collect();
        let (w, log_p) = softmax(&logits);
        let mut grad_ratio = DVector::zeros(2);
        let mut hess_ratio = DMatrix::from_diagonal(&DVector::from_vec(vec![-2.0, -4.0]));
        for (c, wk) in centers.iter().zip(w) {
            let g = DVector::from_vec(vec![-2.0 * (x[0] - c), -4.0 * x[1]]);
            grad_ratio += &g * wk;
            hess_ratio.ger(wk, &g, &g, 1.0);
        }
        Ok(LogDerivatives { log_p, grad_ratio, hess_ratio })
    }
}
