//! Self-contained numerical property suites.
//!
//! Each suite draws its instances from a seeded generator, checks a property
//! of the implementation, and records the first counterexample it meets.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::cloud::{Point, PointCloud};
use crate::density::{BimodalModel, DensityModel, KdeModel, UnimodalModel};
use crate::error::{invalid, Error, Result};
use crate::eval::{directed_hausdorff, hausdorff, hausdorff_to_projection, project_cloud, ReferenceManifold};
use crate::ridge::{grid_evaluate, is_ridge_point, kde_ridge_condition_with_coeff, GridBox, RidgeQuery};
use crate::spectral::{check_rank_one_bias, tail_spectrum_deviation};
use crate::transform::{composed_grad, composed_hess, PowerTransform};

pub const Q_CHAIN: [f64; 5] = [-10.0, -1.0, 0.0, 0.5, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Suite {
    Lemma1,
    Lemma2,
    Inclusion,
    Concentration,
    Fd,
    Hausdorff,
    Equivalence,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::Lemma1,
        Suite::Lemma2,
        Suite::Inclusion,
        Suite::Concentration,
        Suite::Fd,
        Suite::Hausdorff,
        Suite::Equivalence,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Lemma1 => "lemma1",
            Suite::Lemma2 => "lemma2",
            Suite::Inclusion => "inclusion",
            Suite::Concentration => "concentration",
            Suite::Fd => "fd",
            Suite::Hausdorff => "hausdorff",
            Suite::Equivalence => "equivalence",
        }
    }

    pub fn default_trials(&self) -> usize {
        match self {
            Suite::Lemma1 | Suite::Lemma2 => 5000,
            _ => 200,
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| invalid(format!("unknown suite `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    /// Instance count; `None` uses each suite's default.
    pub trials: Option<usize>,
    pub seed: u64,
    /// Grid resolution for the inclusion and concentration suites.
    pub resolution: usize,
    /// Flips the sign of the rank-one term of Γ in the KDE inclusion check.
    pub inject_gamma_sign_flip: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { trials: None, seed: 20240607, resolution: 161, inject_gamma_sign_flip: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub suite: Suite,
    pub checked: usize,
    pub failures: usize,
    pub first_failure: Option<String>,
    pub note: Option<String>,
    pub elapsed: Duration,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures == 0 && self.checked > 0
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: {}/{} pass ({:.2}s)",
            if self.passed() { "PASS" } else { "FAIL" },
            self.suite,
            self.checked - self.failures,
            self.checked,
            self.elapsed.as_secs_f64()
        )?;
        if let Some(note) = &self.note {
            write!(f, " [{note}]")?;
        }
        if let Some(w) = &self.first_failure {
            write!(f, "\n  first counterexample: {w}")?;
        }
        Ok(())
    }
}

/// Collects pass/fail outcomes; the first failure message wins.
#[derive(Default)]
struct Tally {
    checked: usize,
    failures: usize,
    first_failure: Option<String>,
}

impl Tally {
    fn record(&mut self, failure: Option<String>) {
        self.checked += 1;
        if let Some(msg) = failure {
            self.failures += 1;
            self.first_failure.get_or_insert(msg);
        }
    }

    fn finish(self, suite: Suite, note: Option<String>, start: Instant) -> SuiteReport {
        SuiteReport {
            suite,
            checked: self.checked,
            failures: self.failures,
            first_failure: self.first_failure,
            note,
            elapsed: start.elapsed(),
        }
    }
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| normal(rng));
    (&a + a.transpose()) * 0.5
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| normal(rng))
}

fn fmt_point(x: &[f64]) -> String {
    let parts: Vec<String> = x.iter().map(|v| format!("{v:.6}")).collect();
    format!("({})", parts.join(", "))
}

pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> Result<SuiteReport> {
    let trials = opts.trials.unwrap_or(suite.default_trials());
    if trials == 0 {
        return Err(invalid("trials must be at least 1"));
    }
    match suite {
        Suite::Lemma1 => lemma1(trials, opts.seed),
        Suite::Lemma2 => lemma2(trials, opts.seed),
        Suite::Inclusion => inclusion(opts),
        Suite::Concentration => concentration(opts.resolution),
        Suite::Fd => finite_differences(trials, opts.seed),
        Suite::Hausdorff => hausdorff_subsets(trials, opts.seed),
        Suite::Equivalence => equivalence(trials, opts.seed),
    }
}

pub fn run_all(opts: &VerifyOptions) -> Result<Vec<SuiteReport>> {
    Suite::ALL.iter().map(|&s| run_suite(s, opts)).collect()
}

/// Adding `λuuᵀ` never reduces how much of `u` the leading eigenspace holds.
pub fn lemma1(trials: usize, seed: u64) -> Result<SuiteReport> {
    let start = Instant::now();
    let outcomes = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, trial);
            let n = rng.random_range(2..=8);
            let d = rng.random_range(1..n);
            let b = random_symmetric(&mut rng, n);
            let u = random_vector(&mut rng, n).normalize();
            let lambda = rng.random_range(-3.0f64..3.0).exp();
            let r = check_rank_one_bias(&b, &u, lambda, d)?;
            Ok((!r.holds).then(|| {
                format!("trial {trial}: D={n} d={d} lambda={lambda:.4} ‖Π_A u‖={:.3e} < ‖Π_B u‖={:.3e}", r.lhs, r.rhs)
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut tally = Tally::default();
    outcomes.into_iter().for_each(|o| tally.record(o));
    Ok(tally.finish(Suite::Lemma1, None, start))
}

/// A rank-one term inside the leading eigenspace leaves the trailing
/// eigenvalues untouched.
pub fn lemma2(trials: usize, seed: u64) -> Result<SuiteReport> {
    let start = Instant::now();
    let outcomes = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed ^ 0x5eed_0002, trial);
            let n = rng.random_range(2..=8);
            let d = rng.random_range(1..n);
            let b = random_symmetric(&mut rng, n);
            let alpha = random_vector(&mut rng, d);
            let lambda = rng.random_range(-3.0f64..3.0).exp();
            let dev = tail_spectrum_deviation(&b, &alpha, lambda, d)?;
            Ok((dev > 1e-9).then(|| format!("trial {trial}: D={n} d={d} lambda={lambda:.4} deviation={dev:.3e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut tally = Tally::default();
    outcomes.into_iter().for_each(|o| tally.record(o));
    Ok(tally.finish(Suite::Lemma2, None, start))
}

/// Membership of every grid node under each `q`, in chain order.
type Membership = Vec<Vec<bool>>;

fn nesting(tally: &mut Tally, label: &str, nodes: &[Point], chain: &[f64], member: &Membership) {
    for (k, pair) in chain.windows(2).enumerate() {
        for (i, x) in nodes.iter().enumerate() {
            let bad = member[k][i] && !member[k + 1][i];
            tally.record(bad.then(|| {
                format!(
                    "{label}: node {} is a ridge point at q={} but not at q={}",
                    fmt_point(x.as_slice()),
                    pair[0],
                    pair[1]
                )
            }));
        }
    }
}

fn analytic_membership(
    model: &dyn DensityModel,
    query: &RidgeQuery,
    bounds: &GridBox,
    resolution: usize,
) -> Result<(Vec<Point>, Membership)> {
    let mut nodes = Vec::new();
    let mut member = Vec::new();
    for &q in &Q_CHAIN {
        let grid = grid_evaluate(model, PowerTransform::new(q)?, query, bounds, resolution)?;
        if nodes.is_empty() {
            nodes = grid.iter().map(|n| n.point.clone()).collect();
        }
        member.push(grid.iter().map(|n| n.status.member).collect());
    }
    Ok((nodes, member))
}

/// Lattice symmetric under both coordinate reflections and elongated along
/// the second axis.
pub fn symmetric_lattice() -> PointCloud {
    let mut rows = Vec::new();
    for i in -2..=2 {
        for j in -6..=6 {
            rows.push(vec![0.25 * i as f64, 0.25 * j as f64]);
        }
    }
    PointCloud::from_rows(&rows).expect("lattice rows are well formed")
}

/// Ridge sets shrink as `q` decreases: every node on the ridge at `q₁` is on
/// it at every `q₂ > q₁`.
pub fn inclusion(opts: &VerifyOptions) -> Result<SuiteReport> {
    let start = Instant::now();
    let query = RidgeQuery::new(1);
    let bounds = GridBox::square(-3.0, 3.0, 2);
    let mut tally = Tally::default();
    let models: [(&str, Box<dyn DensityModel>); 2] = [
        ("unimodal", Box::new(UnimodalModel)),
        ("bimodal a=1.5", Box::new(BimodalModel::new(1.5)?)),
    ];
    let mut sizes = Vec::new();
    for (label, model) in &models {
        let (nodes, member) = analytic_membership(model.as_ref(), &query, &bounds, opts.resolution)?;
        sizes.push(format!("{label} {}", member.iter().map(|m| m.iter().filter(|&&b| b).count().to_string()).collect::<Vec<_>>().join("<=")));
        nesting(&mut tally, label, &nodes, &Q_CHAIN, &member);
    }

    let kde = KdeModel::new(symmetric_lattice(), 0.5)?;
    let kde_bounds = GridBox::square(-2.0, 2.0, 2);
    let kde_res = 41;
    let nodes: Vec<Point> = kde_bounds.nodes(kde_res).into_iter().map(|(_, p)| p).collect();
    let mut member = Vec::new();
    for &q in &Q_CHAIN {
        let coeff = if opts.inject_gamma_sign_flip { 1.0 - q } else { q - 1.0 };
        let flags = nodes
            .par_iter()
            .map(|x| Ok(kde_ridge_condition_with_coeff(&kde, coeff, &query, x)?.member))
            .collect::<Result<Vec<bool>>>()?;
        member.push(flags);
    }
    sizes.push(format!("kde {}", member.iter().map(|m| m.iter().filter(|&&b| b).count().to_string()).collect::<Vec<_>>().join("<=")));
    nesting(&mut tally, "kde lattice", &nodes, &Q_CHAIN, &member);
    Ok(tally.finish(Suite::Inclusion, Some(sizes.join("; ")), start))
}

/// For a strongly concave transform the ridge of the single-bump model
/// collapses onto the mode.
pub fn concentration(resolution: usize) -> Result<SuiteReport> {
    let start = Instant::now();
    let q = -1e4;
    let grid = grid_evaluate(
        &UnimodalModel,
        PowerTransform::new(q)?,
        &RidgeQuery::new(1),
        &GridBox::square(-3.0, 3.0, 2),
        resolution,
    )?;
    let mut tally = Tally::default();
    let mut members = 0;
    for node in &grid {
        if node.status.member {
            members += 1;
        }
        let far = node.status.member && node.point.norm() > 0.05;
        tally.record(far.then(|| format!("node {} is a ridge point at q={q}", fmt_point(node.point.as_slice()))));
    }
    let origin = grid.iter().find(|n| n.point.norm() == 0.0);
    tally.record(match origin {
        Some(n) if n.status.member => None,
        Some(_) => Some("the mode is not a ridge point".to_string()),
        None => Some(format!("resolution {resolution} has no node at the mode")),
    });
    Ok(tally.finish(Suite::Concentration, Some(format!("{members} member nodes")), start))
}

/// `f^q(p(x))` from `log p`, avoiding the separate evaluation of `p`.
fn composed_value(model: &dyn DensityModel, t: PowerTransform, x: &Point) -> Result<f64> {
    let lp = model.log_p(x)?;
    Ok(if t.is_log() { lp } else { (t.q() * lp).exp() / t.q() })
}

fn five_point<F>(x: &Point, step: f64, mut f: F) -> Result<Vec<DVector<f64>>>
where
    F: FnMut(&Point) -> Result<DVector<f64>>,
{
    (0..x.len())
        .map(|k| {
            let mut at = |s: f64| {
                let mut y = x.clone();
                y[k] += s * step;
                f(&y)
            };
            let (p2, p1, m1, m2) = (at(2.0)?, at(1.0)?, at(-1.0)?, at(-2.0)?);
            Ok((m2 - p2 + (p1 - m1) * 8.0) / (12.0 * step))
        })
        .collect()
}

pub struct FdError {
    pub grad: f64,
    pub hess: f64,
}

/// Relative errors of [`composed_grad`] and [`composed_hess`] against
/// fourth-order central differences of the composed value and gradient.
pub fn fd_errors(model: &dyn DensityModel, t: PowerTransform, x: &Point) -> Result<FdError> {
    let ld = model.log_derivatives(x)?;
    let lift = (t.q() - 1.0).abs() + 1.0;
    let scale = 1.0 + lift * ld.grad_ratio.norm() + (lift * ld.hess_ratio.norm()).sqrt();
    let step = 1e-3 / scale;
    let natural = (t.q() * ld.log_p).exp();

    let grad = composed_grad(model, t, x)?;
    let cols = five_point(x, step, |y| Ok(DVector::from_element(1, composed_value(model, t, y)?)))?;
    let fd_grad = DVector::from_iterator(x.len(), cols.iter().map(|c| c[0]));
    let grad_err = (&fd_grad - &grad).norm() / grad.norm().max(1e-6 * natural * scale);

    let hess = composed_hess(model, t, x)?;
    let cols = five_point(x, step, |y| composed_grad(model, t, y))?;
    let fd_hess = DMatrix::from_columns(&cols);
    let hess_err = (&fd_hess - &hess).norm() / hess.norm().max(1e-6 * natural * scale * scale);
    Ok(FdError { grad: grad_err, hess: hess_err })
}

pub fn fd_cloud() -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    PointCloud::from_flat(2, (0..100).map(|_| rng.random_range(-1.0..1.0)).collect()).expect("even length")
}

/// Analytic derivatives of `f^q ∘ p` against finite differences for every
/// model and every exponent in the chain.
pub fn finite_differences(trials: usize, seed: u64) -> Result<SuiteReport> {
    let start = Instant::now();
    let models: [(&str, Box<dyn DensityModel>, [f64; 2]); 3] = [
        ("unimodal", Box::new(UnimodalModel), [1.5, 1.5]),
        ("bimodal a=1.5", Box::new(BimodalModel::new(1.5)?), [3.0, 1.5]),
        ("kde", Box::new(KdeModel::new(fd_cloud(), 0.5)?), [1.5, 1.5]),
    ];
    let mut tally = Tally::default();
    let mut worst = (0.0f64, 0.0f64);
    for (m, (label, model, half)) in models.iter().enumerate() {
        let outcomes = (0..trials)
            .into_par_iter()
            .map(|trial| {
                let mut rng = trial_rng(seed ^ 0xfd, m * trials + trial);
                let x = DVector::from_fn(2, |k, _| rng.random_range(-half[k]..half[k]));
                Q_CHAIN
                    .iter()
                    .map(|&q| {
                        let e = fd_errors(model.as_ref(), PowerTransform::new(q)?, &x)?;
                        let bad = e.grad >= 1e-5 || e.hess >= 1e-4;
                        Ok((e.grad, e.hess, bad.then(|| {
                            format!(
                                "{label} q={q} at {}: gradient error {:.2e}, Hessian error {:.2e}",
                                fmt_point(x.as_slice()),
                                e.grad,
                                e.hess
                            )
                        })))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        for (g, h, failure) in outcomes.into_iter().flatten() {
            worst = (worst.0.max(g), worst.1.max(h));
            tally.record(failure);
        }
    }
    let note = format!("max gradient error {:.1e}, max Hessian error {:.1e}", worst.0, worst.1);
    Ok(tally.finish(Suite::Fd, Some(note), start))
}

/// The distance from a set to its projection never grows when points are
/// removed, and its one-sided form equals the symmetric one.
pub fn hausdorff_subsets(trials: usize, seed: u64) -> Result<SuiteReport> {
    let start = Instant::now();
    let mut tally = Tally::default();
    for trial in 0..trials {
        let mut rng = trial_rng(seed ^ 0x4a05, trial);
        let (dim, reference) =
            if trial % 2 == 0 { (2, ReferenceManifold::Circle(1.0)) } else { (3, ReferenceManifold::Sphere(1.0)) };
        let n = rng.random_range(5..=40);
        let big = PointCloud::from_flat(dim, (0..n * dim).map(|_| rng.random_range(-2.0..2.0)).collect())?;
        let mut keep: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.5)).collect();
        if keep.is_empty() {
            keep.push(rng.random_range(0..n));
        }
        let small = big.select(&keep);
        let hs = hausdorff_to_projection(&small, &reference)?;
        let hb = hausdorff_to_projection(&big, &reference)?;
        tally.record((hs > hb).then(|| format!("trial {trial}: subset gives {hs} > {hb}")));

        let proj = project_cloud(&reference, &small)?;
        let one = directed_hausdorff(&small, &proj)?;
        let two = hausdorff(&small, &proj)?;
        tally.record((one != two).then(|| format!("trial {trial}: one-sided {one} != symmetric {two}")));
    }
    Ok(tally.finish(Suite::Hausdorff, None, start))
}

/// The Γ-based KDE test and the Hessian-based test agree away from the
/// tolerance boundaries.
pub fn equivalence(trials: usize, seed: u64) -> Result<SuiteReport> {
    let start = Instant::now();
    let h = 0.4;
    let kde = KdeModel::new(fd_cloud(), h)?;
    let query = RidgeQuery::new(1).with_tol_align(0.2);
    let mut tally = Tally::default();
    let mut rng = trial_rng(seed ^ 0xe0, 0);
    let mut members = 0;
    let mut skipped = 0;
    while tally.checked < trials {
        if skipped > 10 * trials {
            return Err(invalid("too many probes fell on a tolerance boundary"));
        }
        let x = DVector::from_fn(2, |_, _| rng.random_range(-1.2..1.2));
        let q = Q_CHAIN[rng.random_range(0..Q_CHAIN.len())];
        let a = kde_ridge_condition_with_coeff(&kde, q - 1.0, &query, &x)?;
        let b = is_ridge_point(&kde, PowerTransform::new(q)?, &query, &x)?;
        let near = |align: f64| (align - query.tol_align).abs() < 1e-6;
        if near(a.align) || near(b.align) || a.eig_margin.abs() < 1e-9 * h * h {
            skipped += 1;
            continue;
        }
        members += usize::from(a.member);
        tally.record((a.member != b.member).then(|| {
            format!(
                "q={q} at {}: Γ test says {}, Hessian test says {}",
                fmt_point(x.as_slice()),
                a.member,
                b.member
            )
        }));
    }
    let note = format!("{members} members, {skipped} boundary probes skipped");
    Ok(tally.finish(Suite::Equivalence, Some(note), start))
}
