//! Quality metrics against reference manifolds.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::cloud::{dist, dist2, Point, PointCloud};
use crate::datagen::{add_noise, NoiseSpec};
use crate::error::{invalid, Error, Result};
use crate::spectral::sym_eig;

#[derive(Debug, Clone, PartialEq)]
pub enum ReferenceManifold {
    Circle(f64),
    Sphere(f64),
    Explicit(PointCloud),
}

impl ReferenceManifold {
    /// Parses `circle:R` or `sphere:R`.
    pub fn parse(text: &str) -> Result<Self> {
        let (kind, r) = text
            .split_once(':')
            .ok_or_else(|| invalid(format!("reference `{text}` must look like circle:R or sphere:R")))?;
        let r: f64 = r.trim().parse().map_err(|_| invalid(format!("bad radius in `{text}`")))?;
        let m = match kind.trim() {
            "circle" => ReferenceManifold::Circle(r),
            "sphere" => ReferenceManifold::Sphere(r),
            other => return Err(invalid(format!("unknown reference kind `{other}`"))),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ReferenceManifold::Circle(r) | ReferenceManifold::Sphere(r) if !(*r > 0.0) || !r.is_finite() => {
                Err(invalid(format!("radius must be positive, got {r}")))
            }
            ReferenceManifold::Explicit(c) if c.is_empty() => Err(invalid("explicit reference set is empty")),
            _ => Ok(()),
        }
    }

    fn ambient(&self) -> Option<usize> {
        match self {
            ReferenceManifold::Circle(_) => Some(2),
            ReferenceManifold::Sphere(_) => Some(3),
            ReferenceManifold::Explicit(c) => Some(c.dim()),
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        match self.ambient() {
            Some(d) if d != x.len() => Err(invalid(format!("point has dimension {}, reference has {d}", x.len()))),
            _ => Ok(()),
        }
    }

    /// Distance from `x` to the manifold.
    pub fn distance(&self, x: &[f64]) -> Result<f64> {
        self.validate()?;
        self.check_dim(x)?;
        match self {
            ReferenceManifold::Circle(r) | ReferenceManifold::Sphere(r) => {
                Ok((x.iter().map(|v| v * v).sum::<f64>().sqrt() - r).abs())
            }
            ReferenceManifold::Explicit(c) => Ok(dist(x, c.row(nearest(c, x)))),
        }
    }
}

fn nearest(set: &PointCloud, x: &[f64]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, row) in set.rows().enumerate() {
        let d = dist2(x, row);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

/// Radial normalization for circle and sphere, nearest member (lowest index
/// on ties) for explicit sets.
pub fn project_reference(m: &ReferenceManifold, x: &Point) -> Result<Point> {
    m.validate()?;
    m.check_dim(x.as_slice())?;
    match m {
        ReferenceManifold::Circle(r) | ReferenceManifold::Sphere(r) => {
            let n = x.norm();
            if n == 0.0 {
                Err(Error::DegenerateProjection)
            } else {
                Ok(x * (*r / n))
            }
        }
        ReferenceManifold::Explicit(c) => Ok(c.point(nearest(c, x.as_slice()))),
    }
}

pub fn project_cloud(m: &ReferenceManifold, cloud: &PointCloud) -> Result<PointCloud> {
    let points = (0..cloud.len())
        .into_par_iter()
        .map(|i| project_reference(m, &cloud.point(i)))
        .collect::<Result<Vec<_>>>()?;
    PointCloud::from_points(cloud.dim(), &points)
}

fn check_pair(a: &PointCloud, b: &PointCloud) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(invalid("Hausdorff distance needs non-empty sets"));
    }
    if a.dim() != b.dim() {
        return Err(invalid("point sets differ in dimension"));
    }
    Ok(())
}

/// `max_{a ∈ A} min_{b ∈ B} ‖a − b‖`.
pub fn directed_hausdorff(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    check_pair(a, b)?;
    let worst = (0..a.len())
        .into_par_iter()
        .map(|i| {
            let x = a.row(i);
            b.rows().map(|y| dist2(x, y)).fold(f64::INFINITY, f64::min)
        })
        .reduce(|| 0.0, f64::max);
    Ok(worst.sqrt())
}

pub fn hausdorff(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    Ok(directed_hausdorff(a, b)?.max(directed_hausdorff(b, a)?))
}

/// Largest distance from a point of `r` to the manifold, i.e. the Hausdorff
/// distance between `r` and its projection.
pub fn hausdorff_to_projection(r: &PointCloud, m: &ReferenceManifold) -> Result<f64> {
    if r.is_empty() {
        return Err(invalid("point set is empty"));
    }
    let d = distances(r, m)?;
    Ok(d.into_iter().fold(0.0, f64::max))
}

/// Mean distance from the points of `r` to the manifold.
pub fn margin(r: &PointCloud, m: &ReferenceManifold) -> Result<f64> {
    if r.is_empty() {
        return Err(invalid("point set is empty"));
    }
    let d = distances(r, m)?;
    Ok(d.iter().sum::<f64>() / d.len() as f64)
}

fn distances(r: &PointCloud, m: &ReferenceManifold) -> Result<Vec<f64>> {
    (0..r.len()).into_par_iter().map(|i| m.distance(r.row(i))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub marg: f64,
    pub haus: f64,
}

pub fn metrics(r: &PointCloud, m: &ReferenceManifold) -> Result<Metrics> {
    Ok(Metrics { marg: margin(r, m)?, haus: hausdorff_to_projection(r, m)? })
}

/// Orthonormal `D × k` basis of the top-`k` principal directions.
pub fn pca_subspace(data: &PointCloud, k: usize) -> Result<DMatrix<f64>> {
    let dim = data.dim();
    if k == 0 || k > dim {
        return Err(invalid(format!("subspace dimension {k} must be in 1..={dim}")));
    }
    if data.len() < 2 {
        return Err(invalid("PCA needs at least two points"));
    }
    let mut mean = DVector::zeros(dim);
    for row in data.rows() {
        mean += DVector::from_column_slice(row);
    }
    mean /= data.len() as f64;
    let mut cov = DMatrix::zeros(dim, dim);
    for row in data.rows() {
        let diff = DVector::from_column_slice(row) - &mean;
        cov.ger(1.0, &diff, &diff, 1.0);
    }
    cov /= (data.len() - 1) as f64;
    let eig = sym_eig(&cov)?;
    Ok(eig.vectors.columns(0, k).into_owned())
}

/// Coordinates `Uᵀ x` of every point.
pub fn project_coordinates(data: &PointCloud, u: &DMatrix<f64>) -> Result<PointCloud> {
    if u.nrows() != data.dim() {
        return Err(invalid("basis and data differ in dimension"));
    }
    let ut = u.transpose();
    let mut out = PointCloud::new(u.ncols());
    for row in data.rows() {
        out.push((&ut * DVector::from_column_slice(row)).as_slice())?;
    }
    Ok(out)
}

/// Coordinates `Uᵀ x̃ᵢ + εᵢ` of the clean points corrupted by isotropic noise
/// inside the subspace.
pub fn corrupt_in_subspace(clean: &PointCloud, u: &DMatrix<f64>, noise: NoiseSpec) -> Result<PointCloud> {
    add_noise(&project_coordinates(clean, u)?, noise)
}

/// `(1/m) Σ ‖Uᵀ x̃ᵢ − x̂ᵢ‖²` with `x̂ᵢ` given in the `k`-dimensional frame.
pub fn denoise_mse(clean: &PointCloud, estimated: &PointCloud, u: &DMatrix<f64>) -> Result<f64> {
    if clean.len() != estimated.len() {
        return Err(invalid(format!("{} clean points but {} estimates", clean.len(), estimated.len())));
    }
    if clean.is_empty() {
        return Err(invalid("no points"));
    }
    if estimated.dim() != u.ncols() {
        return Err(invalid("estimates are not in the basis frame"));
    }
    let coords = project_coordinates(clean, u)?;
    let total: f64 = coords.rows().zip(estimated.rows()).map(|(a, b)| dist2(a, b)).sum();
    Ok(total / clean.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pt(v: &[f64]) -> Point {
        DVector::from_column_slice(v)
    }

    fn random_cloud(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> PointCloud {
        PointCloud::from_flat(dim, (0..n * dim).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap()
    }

    #[test]
    fn projection_examples() {
        let c = ReferenceManifold::Circle(1.0);
        assert_eq!(project_reference(&c, &pt(&[2.0, 0.0])).unwrap(), pt(&[1.0, 0.0]));
        let s = ReferenceManifold::Sphere(1.0);
        assert_eq!(project_reference(&s, &pt(&[0.0, 0.0, 0.5])).unwrap(), pt(&[0.0, 0.0, 1.0]));
        assert!(matches!(project_reference(&c, &pt(&[0.0, 0.0])), Err(Error::DegenerateProjection)));
        assert!(project_reference(&c, &pt(&[1.0, 0.0, 0.0])).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let set = random_cloud(&mut rng, 50, 2);
        let e = ReferenceManifold::Explicit(set.clone());
        for _ in 0..20 {
            let x = pt(&[rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]);
            let p = project_reference(&e, &x).unwrap();
            let best = set.rows().map(|r| dist(x.as_slice(), r)).fold(f64::INFINITY, f64::min);
            assert_eq!(dist(x.as_slice(), p.as_slice()), best);
        }
        let tie = ReferenceManifold::Explicit(PointCloud::from_rows(&[vec![-1.0, 0.0], vec![1.0, 0.0]]).unwrap());
        assert_eq!(project_reference(&tie, &pt(&[0.0, 0.0])).unwrap(), pt(&[-1.0, 0.0]));
    }

    #[test]
    fn parse_reference() {
        assert_eq!(ReferenceManifold::parse("circle:1").unwrap(), ReferenceManifold::Circle(1.0));
        assert_eq!(ReferenceManifold::parse("sphere:2.5").unwrap(), ReferenceManifold::Sphere(2.5));
        assert!(ReferenceManifold::parse("circle:-1").is_err());
        assert!(ReferenceManifold::parse("torus:1").is_err());
        assert!(ReferenceManifold::parse("circle").is_err());
    }

    #[test]
    fn hausdorff_examples() {
        let a = PointCloud::from_rows(&[vec![0.0, 0.0]]).unwrap();
        let b = PointCloud::from_rows(&[vec![3.0, 4.0]]).unwrap();
        assert_eq!(hausdorff(&a, &b).unwrap(), 5.0);
        assert_eq!(hausdorff(&a, &a).unwrap(), 0.0);
        assert!(hausdorff(&a, &PointCloud::new(2)).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let a = random_cloud(&mut rng, 15, 3);
            let b = random_cloud(&mut rng, 9, 3);
            let mut ab: f64 = 0.0;
            for x in a.rows() {
                ab = ab.max(b.rows().map(|y| dist(x, y)).fold(f64::INFINITY, f64::min));
            }
            let mut ba: f64 = 0.0;
            for y in b.rows() {
                ba = ba.max(a.rows().map(|x| dist(x, y)).fold(f64::INFINITY, f64::min));
            }
            assert_eq!(hausdorff(&a, &b).unwrap(), ab.max(ba));
            assert_eq!(hausdorff(&a, &b).unwrap(), hausdorff(&b, &a).unwrap());
        }
    }

    #[test]
    fn margin_examples() {
        let c = ReferenceManifold::Circle(1.0);
        let on = PointCloud::from_rows(&[vec![1.0, 0.0], vec![0.0, -1.0]]).unwrap();
        assert_eq!(margin(&on, &c).unwrap(), 0.0);
        let r = PointCloud::from_rows(&[vec![1.1, 0.0]]).unwrap();
        assert!((margin(&r, &c).unwrap() - 0.1).abs() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let set = random_cloud(&mut rng, 40, 2);
        let e = ReferenceManifold::Explicit(set.clone());
        let r = random_cloud(&mut rng, 25, 2);
        let brute: Vec<f64> =
            r.rows().map(|x| set.rows().map(|y| dist(x, y)).fold(f64::INFINITY, f64::min)).collect();
        let expect = brute.iter().sum::<f64>() / brute.len() as f64;
        assert!((margin(&r, &e).unwrap() - expect).abs() < 1e-14);
    }

    #[test]
    fn projection_hausdorff_is_one_sided() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for (m, dim) in [(ReferenceManifold::Circle(1.0), 2), (ReferenceManifold::Sphere(1.3), 3)] {
            let r = random_cloud(&mut rng, 30, dim);
            let p = project_cloud(&m, &r).unwrap();
            let full = hausdorff(&r, &p).unwrap();
            let one = directed_hausdorff(&r, &p).unwrap();
            assert_eq!(full, one);
            assert!((hausdorff_to_projection(&r, &m).unwrap() - one).abs() < 1e-12);
        }
    }

    #[test]
    fn pca_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let scales = [0.1, 3.0, 0.2, 2.0];
        let data = PointCloud::from_flat(
            4,
            (0..400).flat_map(|_| scales.map(|s| s * rng.random_range(-1.0..1.0))).collect(),
        )
        .unwrap();
        let u = pca_subspace(&data, 2).unwrap();
        let proj = &u * u.transpose();
        let mut expect = DMatrix::zeros(4, 4);
        expect[(1, 1)] = 1.0;
        expect[(3, 3)] = 1.0;
        assert!((proj - expect).amax() < 0.05);
        assert!((u.transpose() * &u - DMatrix::identity(2, 2)).amax() < 1e-12);

        let full = pca_subspace(&data, 4).unwrap();
        assert!((&full * full.transpose() - DMatrix::identity(4, 4)).amax() < 1e-12);

        let v = [0.6, 0.8];
        let line = PointCloud::from_flat(2, (0..20).flat_map(|i| v.map(|c| c * (i as f64 - 7.0))).collect()).unwrap();
        let u = pca_subspace(&line, 1).unwrap();
        assert!((u[(0, 0)] - 0.6).abs() < 1e-12 && (u[(1, 0)] - 0.8).abs() < 1e-12);

        let flat = PointCloud::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(pca_subspace(&flat, 1).unwrap(), pca_subspace(&flat, 1).unwrap());
        assert!(pca_subspace(&flat, 3).is_err());
    }

    #[test]
    fn mse_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let clean = random_cloud(&mut rng, 30, 5);
        let u = pca_subspace(&clean, 2).unwrap();
        let exact = project_coordinates(&clean, &u).unwrap();
        assert_eq!(denoise_mse(&clean, &exact, &u).unwrap(), 0.0);

        let ident = DMatrix::identity(2, 2);
        let one = PointCloud::from_rows(&[vec![0.0, 0.0]]).unwrap();
        let moved = PointCloud::from_rows(&[vec![0.0, 1.0]]).unwrap();
        assert_eq!(denoise_mse(&one, &moved, &ident).unwrap(), 1.0);
        assert!(denoise_mse(&clean, &one, &ident).is_err());

        let est = random_cloud(&mut rng, 30, 2);
        let mut total = 0.0;
        for (c, e) in clean.rows().zip(est.rows()) {
            let x = DVector::from_column_slice(c);
            let y = u.transpose() * x;
            total += (0..2).map(|j| (y[j] - e[j]).powi(2)).sum::<f64>();
        }
        assert!((denoise_mse(&clean, &est, &u).unwrap() - total / 30.0).abs() < 1e-12);
    }
}
