//! Subspace-constrained mean shift.
//!
//! Every input point is iterated independently:
//!
//! ```text
//! x ← x + κ · Π⊥(x) · μ(x)      until ‖κ Π⊥ μ‖ <= ε
//! ```
//!
//! The four variants differ in the attraction force `μ` and in the
//! intermediate matrix whose eigenvectors define `Π⊥`:
//!
//! | method  | μ(x)                    | intermediate matrix | Π⊥                     |
//! |---------|-------------------------|---------------------|------------------------|
//! | SCORE   | c(x) − x                | Γ(q, x)             | I − U_d U_dᵀ           |
//! | l-SCORE | c_I(x) − x              | Γ_I(q, x)           | I − U_d U_dᵀ           |
//! | MFIT-i  | Σ αᵢ Πᵢ⊥ (xᵢ − x)       | Σ αᵢ Πᵢ⊥            | V_{D−d} V_{D−d}ᵀ       |
//! | MFIT-ii | Σ αᵢ (xᵢ − x)           | Σ αᵢ Πᵢ⊥            | V_{D−d} V_{D−d}ᵀ       |
//!
//! For SCORE the leading eigenvectors of Γ approximate the tangent space, so
//! they are removed. For MFIT the averaged normal projectors have their
//! leading eigenspace along the normal space, so it is kept.
//!
//! MFIT weights are `αᵢ(x) ∝ exp(−‖x − xᵢ‖²/r²)` over samples with
//! `‖x − xᵢ‖ <= 2r`, and `Πᵢ⊥ = I − VᵢVᵢᵀ` where `Vᵢ` holds the top-`d`
//! principal directions of the samples within `r` of `xᵢ`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::cloud::{dist, dist2, Point, PointCloud};
use crate::density::{kernel_stats_for, nearest_indices, softmax};
use crate::error::{invalid, Error, Result};
use crate::ridge::gamma_from_stats;
use crate::spectral::sym_eig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodKind {
    Score,
    LScore { neighbors: usize },
    MfitI,
    MfitIi,
}

impl MethodKind {
    pub fn name(&self) -> &'static str {
        match self {
            MethodKind::Score => "score",
            MethodKind::LScore { .. } => "l-score",
            MethodKind::MfitI => "mfit-i",
            MethodKind::MfitIi => "mfit-ii",
        }
    }

    pub fn uses_power(&self) -> bool {
        matches!(self, MethodKind::Score | MethodKind::LScore { .. })
    }

    pub fn neighbors(&self) -> Option<usize> {
        match self {
            MethodKind::LScore { neighbors } => Some(*neighbors),
            _ => None,
        }
    }

    /// Parses `score`, `l-score`, `mfit-i` or `mfit-ii`; `neighbors` is
    /// required for `l-score` and ignored otherwise.
    pub fn parse(name: &str, neighbors: Option<usize>) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "score" => Ok(MethodKind::Score),
            "l-score" | "lscore" => neighbors
                .map(|neighbors| MethodKind::LScore { neighbors })
                .ok_or_else(|| invalid("l-score needs a neighbor count")),
            "mfit-i" => Ok(MethodKind::MfitI),
            "mfit-ii" => Ok(MethodKind::MfitIi),
            other => Err(invalid(format!("unknown method `{other}`"))),
        }
    }
}

impl fmt::Display for MethodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Kernel bandwidth (SCORE family) or neighborhood radius (MFIT family).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scale {
    Fixed(f64),
    /// Distance from the evaluation point to its K-th nearest sample.
    KthNeighbor(usize),
}

impl Scale {
    fn at(&self, samples: &PointCloud, x: &[f64]) -> Result<f64> {
        match *self {
            Scale::Fixed(h) => Ok(h),
            Scale::KthNeighbor(k) => {
                let idx = nearest_indices(samples, x, k)?;
                let r = dist(x, samples.row(idx[k - 1]));
                if r > 0.0 {
                    Ok(r)
                } else {
                    Err(Error::IsolatedPoint)
                }
            }
        }
    }
}

impl FromStr for Scale {
    type Err = Error;

    /// `0.3` for a fixed value, `knn:16` for the 16th-neighbor distance.
    fn from_str(s: &str) -> Result<Self> {
        if let Some(k) = s.strip_prefix("knn:") {
            let k: usize = k.parse().map_err(|_| invalid(format!("bad neighbor count in `{s}`")))?;
            return Ok(Scale::KthNeighbor(k));
        }
        s.parse::<f64>()
            .map(Scale::Fixed)
            .map_err(|_| invalid(format!("bad scale `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScmsConfig {
    pub method: MethodKind,
    /// Power exponent; only the SCORE family uses it.
    pub q: f64,
    pub d: usize,
    /// Convergence tolerance on the step length; `None` means
    /// `1e-7 × diameter(inputs)`.
    pub epsilon: Option<f64>,
    pub kappa: f64,
    pub max_iters: usize,
    pub scale: Scale,
}

impl ScmsConfig {
    pub fn new(method: MethodKind, q: f64, d: usize, scale: Scale) -> Self {
        Self { method, q, d, epsilon: None, kappa: 1.0, max_iters: 500, scale }
    }

    pub fn validate(&self, dim: usize, n: usize) -> Result<()> {
        if self.d >= dim {
            return Err(invalid(format!("ridge dimension {} must be below ambient dimension {dim}", self.d)));
        }
        if let Some(eps) = self.epsilon {
            if !(eps > 0.0) || !eps.is_finite() {
                return Err(invalid(format!("epsilon must be positive, got {eps}")));
            }
        }
        if !(self.kappa >= 0.0 && self.kappa <= 1.0) {
            return Err(invalid(format!("kappa must lie in [0, 1], got {}", self.kappa)));
        }
        if self.max_iters == 0 {
            return Err(invalid("max_iters must be at least 1"));
        }
        if self.method.uses_power() && (self.q.is_nan() || self.q > 1.0 || self.q.is_infinite()) {
            return Err(invalid(format!("q must be finite and <= 1, got {}", self.q)));
        }
        if let MethodKind::LScore { neighbors } = self.method {
            if neighbors == 0 || neighbors > n {
                return Err(invalid(format!("neighbor count {neighbors} must be in 1..={n}")));
            }
        }
        match self.scale {
            Scale::Fixed(h) if !(h > 0.0) || !h.is_finite() => {
                Err(invalid(format!("bandwidth/radius must be positive, got {h}")))
            }
            Scale::KthNeighbor(k) if k == 0 || k > n => {
                Err(invalid(format!("K-th neighbor index {k} must be in 1..={n}")))
            }
            _ => Ok(()),
        }
    }
}

/// Quantities of one iteration at a point.
#[derive(Debug, Clone)]
pub struct LocalFrame {
    pub attraction: DVector<f64>,
    pub intermediate: DMatrix<f64>,
    pub normal_projector: DMatrix<f64>,
}

impl LocalFrame {
    /// `Π⊥ μ`.
    pub fn projected_force(&self) -> DVector<f64> {
        &self.normal_projector * &self.attraction
    }

    /// `‖Π⊥ μ‖ / ‖μ‖`, zero when `μ = 0`.
    pub fn normal_fraction(&self) -> f64 {
        let n = self.attraction.norm();
        if n == 0.0 {
            0.0
        } else {
            (self.projected_force().norm() / n).min(1.0)
        }
    }
}

/// Read-only per-run state: the samples and, for MFIT, one normal projector
/// per sample.
#[derive(Debug, Clone)]
pub struct ScmsState {
    config: ScmsConfig,
    samples: PointCloud,
    sample_normals: Vec<DMatrix<f64>>,
}

impl ScmsState {
    pub fn new(config: ScmsConfig, samples: PointCloud) -> Result<Self> {
        if samples.is_empty() || !samples.is_finite() {
            return Err(invalid("samples must be non-empty and finite"));
        }
        config.validate(samples.dim(), samples.len())?;
        let sample_normals = match config.method {
            MethodKind::MfitI | MethodKind::MfitIi => (0..samples.len())
                .into_par_iter()
                .map(|i| local_normal_projector(&samples, i, config.scale, config.d))
                .collect::<Result<Vec<_>>>()?,
            _ => Vec::new(),
        };
        Ok(Self { config, samples, sample_normals })
    }

    pub fn config(&self) -> &ScmsConfig {
        &self.config
    }

    pub fn samples(&self) -> &PointCloud {
        &self.samples
    }

    /// Normal projector `Πᵢ⊥` attached to sample `i` (MFIT only).
    pub fn sample_normal(&self, i: usize) -> Option<&DMatrix<f64>> {
        self.sample_normals.get(i)
    }

    fn check(&self, x: &Point) -> Result<()> {
        if x.len() != self.samples.dim() || x.iter().any(|v| !v.is_finite()) {
            return Err(invalid("point must be finite with the sample dimension"));
        }
        Ok(())
    }

    /// MFIT weights `(index, α)` over samples within `2r` of `x`.
    fn mfit_weights(&self, x: &Point) -> Result<Vec<(usize, f64)>> {
        let r = self.config.scale.at(&self.samples, x.as_slice())?;
        let r2 = r * r;
        let (idx, logits): (Vec<usize>, Vec<f64>) = self
            .samples
            .rows()
            .enumerate()
            .filter_map(|(i, row)| {
                let d2 = dist2(x.as_slice(), row);
                (d2 <= 4.0 * r2).then_some((i, -d2 / r2))
            })
            .unzip();
        if idx.is_empty() {
            return Err(Error::IsolatedPoint);
        }
        let (w, _) = softmax(&logits);
        Ok(idx.into_iter().zip(w).collect())
    }

    pub fn frame(&self, x: &Point) -> Result<LocalFrame> {
        self.check(x)?;
        let dim = self.samples.dim();
        let d = self.config.d;
        match self.config.method {
            MethodKind::Score | MethodKind::LScore { .. } => {
                let indices = match self.config.method {
                    MethodKind::LScore { neighbors } => nearest_indices(&self.samples, x.as_slice(), neighbors)?,
                    _ => (0..self.samples.len()).collect(),
                };
                let h = self.config.scale.at(&self.samples, x.as_slice())?;
                let stats = kernel_stats_for(&self.samples, h, x, indices)?;
                let intermediate = gamma_from_stats(&self.samples, &stats, x, self.config.q - 1.0);
                let eig = sym_eig(&intermediate)?;
                let tangent = eig.vectors.columns(0, d);
                let normal_projector = DMatrix::identity(dim, dim) - &tangent * tangent.transpose();
                Ok(LocalFrame { attraction: stats.center - x, intermediate, normal_projector })
            }
            MethodKind::MfitI | MethodKind::MfitIi => {
                let weights = self.mfit_weights(x)?;
                let mut intermediate = DMatrix::zeros(dim, dim);
                let mut attraction = DVector::zeros(dim);
                for &(i, a) in &weights {
                    let pi = &self.sample_normals[i];
                    intermediate += pi * a;
                    let diff = self.samples.point(i) - x;
                    attraction += match self.config.method {
                        MethodKind::MfitI => pi * diff * a,
                        _ => diff * a,
                    };
                }
                let eig = sym_eig(&intermediate)?;
                let normal = eig.vectors.columns(0, dim - d);
                let normal_projector = &normal * normal.transpose();
                Ok(LocalFrame { attraction, intermediate, normal_projector })
            }
        }
    }

    pub fn attraction_force(&self, x: &Point) -> Result<DVector<f64>> {
        Ok(self.frame(x)?.attraction)
    }

    pub fn intermediate_matrix(&self, x: &Point) -> Result<DMatrix<f64>> {
        Ok(self.frame(x)?.intermediate)
    }

    /// `x + κ Π⊥ μ(x)`.
    pub fn step(&self, x: &Point) -> Result<Point> {
        Ok(x + self.frame(x)?.projected_force() * self.config.kappa)
    }

    /// Iterates one point to convergence or the iteration cap.
    pub fn trace(&self, start: &Point, epsilon: f64) -> PointOutcome {
        let mut x = start.clone();
        let mut outcome = PointOutcome {
            point: x.clone(),
            iterations: 0,
            converged: false,
            isolated: false,
            final_align: f64::NAN,
        };
        for it in 1..=self.config.max_iters {
            let frame = match self.frame(&x) {
                Ok(f) => f,
                Err(_) => {
                    outcome.isolated = true;
                    break;
                }
            };
            let delta = frame.projected_force() * self.config.kappa;
            x += &delta;
            outcome.iterations = it;
            outcome.final_align = frame.normal_fraction();
            if delta.norm() <= epsilon {
                outcome.converged = true;
                break;
            }
        }
        outcome.point = x;
        outcome
    }

    pub fn run_from(&self, starts: &PointCloud) -> Result<ScmsResult> {
        if starts.dim() != self.samples.dim() {
            return Err(invalid("start points and samples differ in dimension"));
        }
        let epsilon = match self.config.epsilon {
            Some(e) => e,
            None => default_epsilon(starts),
        };
        let outcomes: Vec<PointOutcome> = (0..starts.len())
            .into_par_iter()
            .map(|i| self.trace(&starts.point(i), epsilon))
            .collect();
        let mut output = PointCloud::new(starts.dim());
        for o in &outcomes {
            output.push(o.point.as_slice())?;
        }
        Ok(ScmsResult {
            output,
            iterations: outcomes.iter().map(|o| o.iterations).collect(),
            converged: outcomes.iter().map(|o| o.converged).collect(),
            isolated: outcomes.iter().map(|o| o.isolated).collect(),
            final_align: outcomes.iter().map(|o| o.final_align).collect(),
            epsilon,
        })
    }
}

pub fn default_epsilon(cloud: &PointCloud) -> f64 {
    let diam = cloud.diameter();
    if diam > 0.0 {
        1e-7 * diam
    } else {
        1e-12
    }
}

/// `I − VVᵀ` with `V` the top-`d` principal directions of the samples within
/// the scale radius of sample `i`, centered at their mean.
fn local_normal_projector(samples: &PointCloud, i: usize, scale: Scale, d: usize) -> Result<DMatrix<f64>> {
    let dim = samples.dim();
    let center = samples.row(i);
    let r = match scale.at(samples, center) {
        Ok(r) => r,
        Err(Error::IsolatedPoint) => 0.0,
        Err(e) => return Err(e),
    };
    let members: Vec<&[f64]> = samples.rows().filter(|row| dist(center, row) <= r).collect();
    let mut mean = DVector::zeros(dim);
    for row in &members {
        mean += DVector::from_column_slice(row);
    }
    mean /= members.len() as f64;
    let mut cov = DMatrix::zeros(dim, dim);
    for row in &members {
        let diff = DVector::from_column_slice(row) - &mean;
        cov.ger(1.0, &diff, &diff, 1.0);
    }
    let eig = sym_eig(&cov)?;
    let v = eig.vectors.columns(0, d);
    Ok(DMatrix::identity(dim, dim) - &v * v.transpose())
}

#[derive(Debug, Clone)]
pub struct PointOutcome {
    pub point: Point,
    pub iterations: usize,
    pub converged: bool,
    pub isolated: bool,
    /// `‖Π⊥ μ‖ / ‖μ‖` at the last evaluated iterate.
    pub final_align: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScmsResult {
    pub output: PointCloud,
    pub iterations: Vec<usize>,
    pub converged: Vec<bool>,
    pub isolated: Vec<bool>,
    pub final_align: Vec<f64>,
    pub epsilon: f64,
}

impl ScmsResult {
    pub fn converged_fraction(&self) -> f64 {
        if self.converged.is_empty() {
            return 0.0;
        }
        self.converged.iter().filter(|&&c| c).count() as f64 / self.converged.len() as f64
    }

    /// Columns `x0.., iterations, converged, final_align`.
    pub fn to_csv_string(&self) -> String {
        let mut header = self.output.header();
        header.extend(["iterations", "converged", "final_align"].map(String::from));
        let mut out = header.join(",");
        out.push('\n');
        for (i, row) in self.output.rows().enumerate() {
            out.push_str(&crate::cloud::join_floats(row));
            out.push_str(&format!(
                ",{},{},{:?}\n",
                self.iterations[i],
                u8::from(self.converged[i]),
                self.final_align[i]
            ));
        }
        out
    }
}

/// Runs SCMS with the inputs serving as both samples and starting points.
pub fn run(config: &ScmsConfig, inputs: &PointCloud) -> Result<ScmsResult> {
    ScmsState::new(config.clone(), inputs.clone())?.run_from(inputs)
}
