//! Point clouds and their CSV representation.
//!
//! A cloud is stored row-major: point `i` occupies `data[i * dim..(i + 1) * dim]`.
//! CSV files carry one point per row; a leading row whose first field does not
//! parse as a number is treated as a header.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DVector;

use crate::error::{invalid, Error, Result};

pub type Point = DVector<f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    data: Vec<f64>,
}

impl PointCloud {
    pub fn new(dim: usize) -> Self {
        Self { dim, data: Vec::new() }
    }

    pub fn from_flat(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("ambient dimension must be at least 1"));
        }
        if data.len() % dim != 0 {
            return Err(invalid(format!(
                "flat buffer of length {} is not a multiple of dimension {}",
                data.len(),
                dim
            )));
        }
        Ok(Self { dim, data })
    }

    pub fn from_points(dim: usize, points: &[Point]) -> Result<Self> {
        let mut cloud = Self::new(dim);
        for p in points {
            cloud.push(p.as_slice())?;
        }
        Ok(cloud)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows
            .first()
            .map(|r| r.len())
            .ok_or_else(|| invalid("cannot infer dimension of an empty row list"))?;
        let mut cloud = Self::new(dim);
        for r in rows {
            cloud.push(r)?;
        }
        Ok(cloud)
    }

    pub fn push(&mut self, point: &[f64]) -> Result<()> {
        if point.len() != self.dim {
            return Err(invalid(format!(
                "point has {} coordinates, cloud dimension is {}",
                point.len(),
                self.dim
            )));
        }
        self.data.extend_from_slice(point);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn point(&self, i: usize) -> Point {
        DVector::from_column_slice(self.row(i))
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn points(&self) -> Vec<Point> {
        self.rows().map(DVector::from_column_slice).collect()
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Subset by index, preserving the given order.
    pub fn select(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self { dim: self.dim, data }
    }

    /// Largest pairwise distance, computed exhaustively.
    pub fn diameter(&self) -> f64 {
        let mut best = 0.0f64;
        let rows: Vec<&[f64]> = self.rows().collect();
        for i in 0..rows.len() {
            for j in (i + 1)..rows.len() {
                best = best.max(dist(rows[i], rows[j]));
            }
        }
        best
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let mut text = String::new();
        File::open(path.as_ref())?.read_to_string(&mut text)?;
        Self::parse_csv(&text)
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(text.as_bytes());
        let mut cloud: Option<PointCloud> = None;
        for (line, record) in reader.records().enumerate() {
            let record = record?;
            if record.iter().all(|f| f.is_empty()) {
                continue;
            }
            let parsed: std::result::Result<Vec<f64>, _> =
                record.iter().map(|f| f.parse::<f64>()).collect();
            match parsed {
                Ok(values) => match cloud.as_mut() {
                    Some(c) => c.push(&values).map_err(|e| {
                        Error::Parse(format!("row {}: {}", line + 1, e))
                    })?,
                    None => cloud = Some(PointCloud::from_rows(&[values])?),
                },
                Err(_) if line == 0 => continue,
                Err(e) => {
                    return Err(Error::Parse(format!("row {}: {}", line + 1, e)));
                }
            }
        }
        cloud.ok_or_else(|| Error::Parse("no numeric rows".into()))
    }

    /// Column names `x0, x1, ...`.
    pub fn header(&self) -> Vec<String> {
        (0..self.dim).map(|k| format!("x{k}")).collect()
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut file = File::create(path.as_ref())?;
        file.write_all(self.to_csv_string().as_bytes())?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = self.header().join(",");
        out.push('\n');
        for row in self.rows() {
            out.push_str(&join_floats(row));
            out.push('\n');
        }
        out
    }
}

/// Shortest round-trip decimal rendering of each value, comma separated.
pub fn join_floats(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(",")
}

pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist2(a, b).sqrt()
}
