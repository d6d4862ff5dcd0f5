use super::FitError;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataPoint {
    pub x: f64,
    pub y: f64,
    pub sigma: f64,
}

/// Observations with absolute 1σ errors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dataset {
    points: Vec<DataPoint>,
}

impl Dataset {
    pub fn new(points: Vec<DataPoint>) -> Result<Self, FitError> {
        for (i, p) in points.iter().enumerate() {
            if !(p.x.is_finite() && p.y.is_finite()) {
                return Err(FitError::Data(format!("point {i}: x and y must be finite")));
            }
            if !(p.sigma > 0.0 && p.sigma.is_finite()) {
                return Err(FitError::Data(format!("point {i}: sigma must be > 0, got {}", p.sigma)));
            }
        }
        Ok(Self { points })
    }

    pub fn from_xys(x: &[f64], y: &[f64], sigma: &[f64]) -> Result<Self, FitError> {
        if x.len() != y.len() || x.len() != sigma.len() {
            return Err(FitError::Data("x, y and sigma lengths differ".into()));
        }
        Self::new(x.iter().zip(y).zip(sigma).map(|((&x, &y), &sigma)| DataPoint { x, y, sigma }).collect())
    }

    /// Count data with Poisson errors: y = scale·N, σ = scale·√max(N, 1).
    pub fn from_counts(x: &[f64], counts: &[u64], scale: f64) -> Result<Self, FitError> {
        if x.len() != counts.len() {
            return Err(FitError::Data("x and counts lengths differ".into()));
        }
        Self::new(
            x.iter()
                .zip(counts)
                .map(|(&x, &n)| DataPoint { x, y: scale * n as f64, sigma: scale * (n.max(1) as f64).sqrt() })
                .collect(),
        )
    }

    pub fn points(&self) -> &[DataPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn xs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.x).collect()
    }

    pub fn filter(&self, keep: impl Fn(&DataPoint) -> bool) -> Self {
        Self { points: self.points.iter().copied().filter(keep).collect() }
    }

    pub fn concat(&self, other: &Dataset) -> Self {
        Self { points: self.points.iter().chain(&other.points).copied().collect() }
    }

    /// CSV with header `x,y,sigma`.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self, FitError> {
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
        if header != ["x", "y", "sigma"] {
            return Err(FitError::Data(format!("expected header x,y,sigma, found {}", header.join(","))));
        }
        let mut points = Vec::new();
        for row in r.deserialize() {
            points.push(row?);
        }
        Self::new(points)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self, FitError> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), FitError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["x", "y", "sigma"])?;
        for p in &self.points {
            w.write_record([format!("{:.16e}", p.x), format!("{:.16e}", p.y), format!("{:.16e}", p.sigma)])?;
        }
        w.flush()?;
        Ok(())
    }
}
