use std::fs;
use std::io::{self, Write};
use std::path::Path;

use scms_core::datagen::{self, NoiseSpec};
use scms_core::density::KdeModel;
use scms_core::eval::{self, ReferenceManifold};
use scms_core::ridge::{kde_field_sample, GridBox};
use scms_core::scms::{self, MethodKind, Scale, ScmsConfig};
use scms_core::verify::{self, Suite, VerifyOptions};
use scms_core::PointCloud;

use crate::{
    CliError, DenoiseArgs, EstimateArgs, FieldArgs, GenerateArgs, MethodArgs, MethodName, Shape, SweepArgs,
    VerifyArgs,
};

type Result<T> = std::result::Result<T, CliError>;

fn bad(flag: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("invalid value for --{flag}: {msg}"))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display()))),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(format!("cannot write to stdout: {e}"))),
    }
}

fn read_cloud(path: &Path) -> Result<PointCloud> {
    PointCloud::read_csv(path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))
}

fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

pub fn generate(a: &GenerateArgs) -> Result<()> {
    if !(a.sigma >= 0.0) || !a.sigma.is_finite() {
        return Err(bad("sigma", format!("must be finite and >= 0, got {}", a.sigma)));
    }
    if a.m == 0 {
        return Err(bad("m", "must be at least 1"));
    }
    if matches!(a.shape, Shape::Circle | Shape::Sphere) && !(a.radius > 0.0 && a.radius.is_finite()) {
        return Err(bad("radius", format!("must be positive, got {}", a.radius)));
    }
    if a.shape == Shape::Bimodal && !(a.a >= 0.0 && a.a.is_finite()) {
        return Err(bad("a", format!("must be finite and >= 0, got {}", a.a)));
    }
    if a.shape == Shape::Curve && a.dim < 4 {
        return Err(bad("dim", format!("must be at least 4, got {}", a.dim)));
    }
    let noise = NoiseSpec::new(a.sigma, a.seed)?;
    let cloud = match a.shape {
        Shape::Circle => datagen::sample_circle(a.m, a.radius, noise)?,
        Shape::Sphere => datagen::sample_sphere(a.m, a.radius, noise)?,
        Shape::SwissRoll => datagen::sample_swiss_roll_2d(a.m, noise)?,
        Shape::Bimodal => datagen::sample_bimodal(a.m, a.a, noise)?,
        Shape::Curve => datagen::sample_embedded_curve(a.m, a.dim, noise)?,
    };
    emit(a.out.as_deref(), &cloud.to_csv_string())
}

fn method_kind(name: MethodName, neighbors: Option<usize>) -> Result<MethodKind> {
    Ok(match name {
        MethodName::Score => MethodKind::Score,
        MethodName::LScore => MethodKind::LScore {
            neighbors: neighbors.ok_or_else(|| bad("neighbors", "l-score needs a neighbor count"))?,
        },
        MethodName::MfitI => MethodKind::MfitI,
        MethodName::MfitIi => MethodKind::MfitIi,
    })
}

struct Common {
    d: usize,
    epsilon: Option<f64>,
    kappa: f64,
    max_iters: usize,
}

fn build_config(method: MethodKind, q: f64, scale: Scale, c: &Common, data: &PointCloud) -> Result<ScmsConfig> {
    let cfg = ScmsConfig {
        method,
        q,
        d: c.d,
        epsilon: c.epsilon,
        kappa: c.kappa,
        max_iters: c.max_iters,
        scale,
    };
    if c.kappa <= 0.0 {
        return Err(bad("kappa", format!("must lie in (0, 1], got {}", c.kappa)));
    }
    cfg.validate(data.dim(), data.len())?;
    Ok(cfg)
}

fn method_config(m: &MethodArgs, data: &PointCloud) -> Result<ScmsConfig> {
    let kind = method_kind(m.method, m.neighbors)?;
    let scale = match kind {
        MethodKind::MfitI | MethodKind::MfitIi => m.radius.or(m.h).ok_or_else(|| bad("radius", "MFIT needs --radius or --h"))?,
        _ => m.h.ok_or_else(|| bad("h", "the score methods need a bandwidth"))?,
    };
    if m.q > 1.0 || !m.q.is_finite() {
        return Err(bad("q", format!("must be finite and <= 1, got {}", m.q)));
    }
    let common = Common { d: m.d, epsilon: m.epsilon, kappa: m.kappa, max_iters: m.max_iters };
    build_config(kind, m.q, scale, &common, data)
}

fn parse_reference(text: &str) -> Result<ReferenceManifold> {
    ReferenceManifold::parse(text).map_err(|e| bad("reference", e))
}

fn metrics_line(result: &scms::ScmsResult, reference: &ReferenceManifold) -> Result<String> {
    let m = eval::metrics(&result.output, reference)?;
    Ok(format!(
        "marg={} haus={} converged_frac={}",
        fmt_f64(m.marg),
        fmt_f64(m.haus),
        fmt_f64(result.converged_fraction())
    ))
}

pub fn estimate(a: &EstimateArgs) -> Result<()> {
    let reference = a.reference.as_deref().map(parse_reference).transpose()?;
    let data = read_cloud(&a.input)?;
    let cfg = method_config(&a.method, &data)?;
    let result = scms::run(&cfg, &data)?;
    emit(Some(&a.out), &result.to_csv_string())?;
    match reference {
        Some(r) => println!("{}", metrics_line(&result, &r)?),
        None => println!("converged_frac={}", fmt_f64(result.converged_fraction())),
    }
    Ok(())
}

struct Cell {
    method: MethodKind,
    q: Option<f64>,
    h: f64,
}

fn sweep_cells(a: &SweepArgs) -> Result<Vec<Cell>> {
    let mut cells = Vec::new();
    for &h in &a.hs {
        for &name in &a.methods {
            match name {
                MethodName::MfitI | MethodName::MfitIi => {
                    cells.push(Cell { method: method_kind(name, None)?, q: None, h });
                }
                MethodName::Score => {
                    for &q in &a.qs {
                        cells.push(Cell { method: MethodKind::Score, q: Some(q), h });
                    }
                }
                MethodName::LScore => {
                    for &k in &a.neighbors {
                        for &q in &a.qs {
                            cells.push(Cell { method: MethodKind::LScore { neighbors: k }, q: Some(q), h });
                        }
                    }
                }
            }
        }
    }
    Ok(cells)
}

fn sweep_row(cell: &Cell, common: &Common, data: &PointCloud, reference: &ReferenceManifold) -> String {
    let q = cell.q.map(fmt_f64).unwrap_or_default();
    let k = cell.method.neighbors().map(|k| k.to_string()).unwrap_or_default();
    let prefix = format!("{},{q},{},{k}", cell.method, fmt_f64(cell.h));
    let outcome = build_config(cell.method, cell.q.unwrap_or(1.0), Scale::Fixed(cell.h), common, data)
        .and_then(|cfg| Ok(scms::run(&cfg, data)?))
        .and_then(|res| Ok((eval::metrics(&res.output, reference)?, res.converged_fraction())));
    match outcome {
        Ok((m, frac)) => format!("{prefix},{},{},{},ok", fmt_f64(m.marg), fmt_f64(m.haus), fmt_f64(frac)),
        Err(e) => format!("{prefix},,,,error: {}", e.to_string().replace([',', '\n'], ";")),
    }
}

pub fn sweep(a: &SweepArgs) -> Result<()> {
    let reference = parse_reference(&a.reference)?;
    if a.hs.iter().any(|&h| !(h > 0.0 && h.is_finite())) {
        return Err(bad("hs", "every value must be positive"));
    }
    if a.qs.iter().any(|&q| !(q <= 1.0 && q.is_finite())) {
        return Err(bad("qs", "every value must be finite and <= 1"));
    }
    if a.kappa <= 0.0 || a.kappa > 1.0 {
        return Err(bad("kappa", format!("must lie in (0, 1], got {}", a.kappa)));
    }
    let data = read_cloud(&a.input)?;
    let common = Common { d: a.d, epsilon: a.epsilon, kappa: a.kappa, max_iters: a.max_iters };
    let cells = sweep_cells(a)?;
    let mut out = String::from("method,q,h,k,marg,haus,converged_frac,status\n");
    let mut succeeded = 0;
    for cell in &cells {
        let row = sweep_row(cell, &common, &data, &reference);
        succeeded += usize::from(row.ends_with(",ok"));
        out.push_str(&row);
        out.push('\n');
    }
    emit(a.out.as_deref(), &out)?;
    if succeeded == 0 {
        return Err(CliError::Config("no sweep cell succeeded".into()));
    }
    Ok(())
}

fn default_box(data: &PointCloud) -> GridBox {
    let mut lo = vec![f64::INFINITY; 2];
    let mut hi = vec![f64::NEG_INFINITY; 2];
    for row in data.rows() {
        for k in 0..2 {
            lo[k] = lo[k].min(row[k]);
            hi[k] = hi[k].max(row[k]);
        }
    }
    for k in 0..2 {
        let pad = 0.1 * (hi[k] - lo[k]).max(1e-9);
        lo[k] -= pad;
        hi[k] += pad;
    }
    GridBox { lo, hi }
}

pub fn field(a: &FieldArgs) -> Result<()> {
    if !(a.h > 0.0 && a.h.is_finite()) {
        return Err(bad("h", format!("must be positive, got {}", a.h)));
    }
    if a.qs.iter().any(|&q| !(q <= 1.0 && q.is_finite())) {
        return Err(bad("qs", "every value must be finite and <= 1"));
    }
    if a.resolution < 2 {
        return Err(bad("resolution", "must be at least 2"));
    }
    if a.bounds.as_ref().is_some_and(|b| b.len() != 4) {
        return Err(bad("box", "expected xmin,xmax,ymin,ymax"));
    }
    let bounds = a.bounds.as_ref().map(|b| GridBox { lo: vec![b[0], b[2]], hi: vec![b[1], b[3]] });
    if let Some(b) = &bounds {
        b.validate(a.resolution).map_err(|e| bad("box", e))?;
    }
    let data = read_cloud(&a.input)?;
    if data.dim() != 2 {
        return Err(bad("input", format!("field needs planar data, got dimension {}", data.dim())));
    }
    let bounds = bounds.unwrap_or_else(|| default_box(&data));
    let kde = KdeModel::new(data, a.h)?;
    let nodes = bounds.nodes(a.resolution);
    let mut out = String::from("x,y,q,s,ux,uy\n");
    for &q in &a.qs {
        for (_, x) in &nodes {
            let f = kde_field_sample(&kde, q, 1, x)?;
            let s = f.score.map(fmt_f64).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{s},{},{}\n",
                fmt_f64(x[0]),
                fmt_f64(x[1]),
                fmt_f64(q),
                fmt_f64(f.normal[0]),
                fmt_f64(f.normal[1])
            ));
        }
    }
    emit(a.out.as_deref(), &out)
}

pub fn verify(a: &VerifyArgs) -> Result<()> {
    if a.trials == Some(0) {
        return Err(bad("trials", "must be at least 1"));
    }
    if a.resolution < 2 {
        return Err(bad("resolution", "must be at least 2"));
    }
    let opts = VerifyOptions {
        trials: a.trials,
        seed: a.seed,
        resolution: a.resolution,
        inject_gamma_sign_flip: a.inject_gamma_sign_flip,
    };
    let suites: Vec<Suite> = if a.suite.is_empty() { Suite::ALL.to_vec() } else { a.suite.clone() };
    let mut failed = Vec::new();
    for suite in suites {
        let report = verify::run_suite(suite, &opts)?;
        println!("{report}");
        if !report.passed() {
            failed.push(suite.name());
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(format!("failing suites: {}", failed.join(", "))))
    }
}

pub fn denoise(a: &DenoiseArgs) -> Result<()> {
    if !(a.sigma >= 0.0) || !a.sigma.is_finite() {
        return Err(bad("sigma", format!("must be finite and >= 0, got {}", a.sigma)));
    }
    let clean = read_cloud(&a.input)?;
    if a.k == 0 || a.k > clean.dim() {
        return Err(bad("k", format!("must be in 1..={}", clean.dim())));
    }
    let u = eval::pca_subspace(&clean, a.k)?;
    let noisy = eval::corrupt_in_subspace(&clean, &u, NoiseSpec::new(a.sigma, a.seed)?)?;
    let corrupted_mse = eval::denoise_mse(&clean, &noisy, &u)?;
    let estimated = if a.identity {
        noisy
    } else {
        let cfg = method_config(&a.method, &noisy)?;
        scms::run(&cfg, &noisy)?.output
    };
    let mse = eval::denoise_mse(&clean, &estimated, &u)?;
    if let Some(path) = &a.out {
        emit(Some(path), &estimated.to_csv_string())?;
    }
    println!("mse={} corrupted_mse={}", fmt_f64(mse), fmt_f64(corrupted_mse));
    Ok(())
}
