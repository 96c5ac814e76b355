//! Compositional predictors: the unit simplex, log-ratio coordinates, and the
//! Aitchison geometry used to move between the two.
//!
//! A D-part composition carries relative information only, so Euclidean
//! operations on the raw parts are meaningless. The isometric log-ratio (ilr)
//! map sends the simplex to ordinary (D-1)-dimensional space, where the usual
//! inner product agrees with the Aitchison one. Model coefficients are fit in
//! ilr coordinates and mapped back to the simplex for reporting.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point on the open unit simplex: strictly positive parts summing to one.
///
/// Construction validates the invariants once; every function taking a
/// `Composition` may then assume them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Composition {
    parts: Vec<f64>,
}

impl Composition {
    /// Wraps already-closed parts, checking that each lies strictly inside
    /// (0, 1) and that they sum to one within 1e-12.
    pub fn new(parts: Vec<f64>) -> Result<Self> {
        if parts.len() < 2 {
            return Err(Error::InvalidDimension(format!(
                "a composition needs at least 2 parts, got {}",
                parts.len()
            )));
        }
        for (index, &value) in parts.iter().enumerate() {
            if !value.is_finite() || value <= 0.0 || value >= 1.0 {
                return Err(Error::NonPositiveEntry { index, value });
            }
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::NotClosed { sum });
        }
        Ok(Self { parts })
    }

    pub fn parts(&self) -> &[f64] {
        &self.parts
    }

    /// Number of parts D.
    pub fn dim(&self) -> usize {
        self.parts.len()
    }
}

impl TryFrom<Vec<f64>> for Composition {
    type Error = Error;

    fn try_from(parts: Vec<f64>) -> Result<Self> {
        Composition::new(parts)
    }
}

impl From<Composition> for Vec<f64> {
    fn from(c: Composition) -> Self {
        c.parts
    }
}

/// Ilr coordinates of a composition: a free vector in R^(D-1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct IlrVector {
    coords: Vec<f64>,
}

impl IlrVector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidDimension(
                "an ilr vector needs at least 1 coordinate".into(),
            ));
        }
        if let Some(bad) = coords.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue(format!("ilr coordinate {bad}")));
        }
        Ok(Self { coords })
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }
}

impl TryFrom<Vec<f64>> for IlrVector {
    type Error = Error;

    fn try_from(coords: Vec<f64>) -> Result<Self> {
        IlrVector::new(coords)
    }
}

impl From<IlrVector> for Vec<f64> {
    fn from(v: IlrVector) -> Self {
        v.coords
    }
}

/// The (D-1) x D orthonormal contrast matrix that defines the ilr basis.
///
/// Row i (1-based) balances the geometric mean of the first D-i parts against
/// part D-i+1. Rows are orthonormal and each sums to zero, which is exactly
/// what makes ilr an isometry from the Aitchison geometry to ordinary
/// Euclidean space.
#[derive(Debug, Clone, PartialEq)]
pub struct ContrastMatrix {
    psi: DMatrix<f64>,
}

impl ContrastMatrix {
    /// Rows of the matrix, i.e. the ilr basis expressed in clr coordinates.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.psi
    }

    /// Number of parts D of the compositions this matrix applies to.
    pub fn dim(&self) -> usize {
        self.psi.ncols()
    }
}

/// Builds the contrast matrix for D-part compositions.
pub fn contrast_matrix(d: usize) -> Result<ContrastMatrix> {
    if d < 2 {
        return Err(Error::InvalidDimension(format!(
            "contrast matrix needs D >= 2, got {d}"
        )));
    }
    let mut psi = DMatrix::zeros(d - 1, d);
    for i in 0..d - 1 {
        // k parts in the numerator group, part k (0-based) in the denominator.
        let k = d - 1 - i;
        let pos = (1.0 / (k as f64 * (k + 1) as f64)).sqrt();
        for j in 0..k {
            psi[(i, j)] = pos;
        }
        psi[(i, k)] = -((k as f64) / (k + 1) as f64).sqrt();
    }
    Ok(ContrastMatrix { psi })
}

/// Normalizes raw positive magnitudes (counts, intensities) to a composition.
pub fn closure(raw: &[f64]) -> Result<Composition> {
    if raw.len() < 2 {
        return Err(Error::InvalidDimension(format!(
            "closure needs at least 2 parts, got {}",
            raw.len()
        )));
    }
    for (index, &value) in raw.iter().enumerate() {
        if !value.is_finite() || value <= 0.0 {
            return Err(Error::NonPositiveEntry { index, value });
        }
    }
    let sum: f64 = raw.iter().sum();
    if !sum.is_finite() {
        return Err(Error::NonFiniteValue("sum of parts overflows".into()));
    }
    Composition::new(raw.iter().map(|v| v / sum).collect())
}

/// Centered log-ratio transform: log parts minus their mean. The result sums
/// to zero and is the coordinate system the contrast matrix rows live in.
pub fn clr(c: &Composition) -> Vec<f64> {
    let logs: Vec<f64> = c.parts().iter().map(|p| p.ln()).collect();
    let mean = logs.iter().sum::<f64>() / logs.len() as f64;
    logs.iter().map(|l| l - mean).collect()
}

/// Isometric log-ratio transform of a composition.
pub fn ilr(c: &Composition) -> IlrVector {
    let psi = contrast_matrix(c.dim()).expect("composition guarantees D >= 2");
    let clr_vec = DVector::from_vec(clr(c));
    let coords = psi.matrix() * clr_vec;
    IlrVector {
        coords: coords.data.into(),
    }
}

/// Inverse ilr: maps coordinates back to a D-part composition.
///
/// `d` must equal one plus the coordinate length; passing it explicitly keeps
/// silent dimension drift from going unnoticed at call sites.
pub fn ilr_inv(v: &IlrVector, d: usize) -> Result<Composition> {
    if v.len() + 1 != d {
        return Err(Error::DimensionMismatch(format!(
            "ilr vector of length {} cannot invert to a {d}-part composition",
            v.len()
        )));
    }
    let psi = contrast_matrix(d)?;
    let coords = DVector::from_column_slice(v.coords());
    let w = psi.matrix().transpose() * coords;
    let mut parts = Vec::with_capacity(d);
    for &wi in w.iter() {
        let e = wi.exp();
        // exp saturating in either direction destroys the part ratios, so
        // refuse instead of closing a vector with zeros or infinities in it.
        if !e.is_finite() || e == 0.0 {
            return Err(Error::Overflow(wi));
        }
        parts.push(e);
    }
    closure(&parts)
}

/// Distance in the Aitchison geometry, computed as the Euclidean distance
/// between clr images.
pub fn aitchison_distance(a: &Composition, b: &Composition) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "compositions have {} and {} parts",
            a.dim(),
            b.dim()
        )));
    }
    let ca = clr(a);
    let cb = clr(b);
    Ok(ca
        .iter()
        .zip(&cb)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}
