//! Functional principal component analysis on a shared uniform grid.
//!
//! Curves are observed at p points with constant spacing dt. Integrals are
//! rectangle-rule sums weighted by dt, and the continuum eigenproblem for the
//! covariance operator becomes a symmetric p x p eigenproblem for K * dt.
//! Eigenvectors scaled by 1/sqrt(dt) are then orthonormal under the same
//! quadrature rule, and the score variance along component j equals its
//! eigenvalue exactly, with no separate normalization step.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A strictly increasing, uniformly spaced observation grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Grid {
    points: Vec<f64>,
    spacing: f64,
}

impl Grid {
    /// Validates the points: at least two, finite, strictly increasing, with
    /// every gap within relative 1e-9 of the mean spacing.
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 points, got {}",
                points.len()
            )));
        }
        if let Some(bad) = points.iter().find(|t| !t.is_finite()) {
            return Err(Error::InvalidGrid(format!("non-finite grid point {bad}")));
        }
        let spacing = (points[points.len() - 1] - points[0]) / (points.len() - 1) as f64;
        if !(spacing > 0.0) {
            return Err(Error::InvalidGrid(
                "grid points must be strictly increasing".into(),
            ));
        }
        for w in points.windows(2) {
            let gap = w[1] - w[0];
            if gap <= 0.0 {
                return Err(Error::InvalidGrid(
                    "grid points must be strictly increasing".into(),
                ));
            }
            if (gap - spacing).abs() > 1e-9 * spacing {
                return Err(Error::InvalidGrid(format!(
                    "gap {gap} deviates from uniform spacing {spacing}"
                )));
            }
        }
        Ok(Self { points, spacing })
    }

    /// Uniform grid of `len` points from `start` to `end` inclusive.
    pub fn uniform(start: f64, end: f64, len: usize) -> Result<Self> {
        if len < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 points, got {len}"
            )));
        }
        if !start.is_finite() || !end.is_finite() || end <= start {
            return Err(Error::InvalidGrid(format!(
                "bad endpoints [{start}, {end}]"
            )));
        }
        let step = (end - start) / (len - 1) as f64;
        let mut points: Vec<f64> = (0..len).map(|i| start + i as f64 * step).collect();
        points[len - 1] = end;
        Grid::new(points)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Constant gap dt between consecutive points.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }
}

impl TryFrom<Vec<f64>> for Grid {
    type Error = Error;

    fn try_from(points: Vec<f64>) -> Result<Self> {
        Grid::new(points)
    }
}

impl From<Grid> for Vec<f64> {
    fn from(g: Grid) -> Self {
        g.points
    }
}

/// One curve observed on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SampleRepr", into = "SampleRepr")]
pub struct FunctionalSample {
    grid: Grid,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct SampleRepr {
    grid: Grid,
    values: Vec<f64>,
}

impl FunctionalSample {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} values on a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue(format!("curve value {bad}")));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl TryFrom<SampleRepr> for FunctionalSample {
    type Error = Error;

    fn try_from(repr: SampleRepr) -> Result<Self> {
        FunctionalSample::new(repr.grid, repr.values)
    }
}

impl From<FunctionalSample> for SampleRepr {
    fn from(s: FunctionalSample) -> Self {
        SampleRepr {
            grid: s.grid,
            values: s.values,
        }
    }
}

/// Principal component scores of one curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreVector {
    scores: Vec<f64>,
}

impl ScoreVector {
    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

impl From<ScoreVector> for Vec<f64> {
    fn from(s: ScoreVector) -> Self {
        s.scores
    }
}

/// Truncated eigenbasis of the empirical covariance operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BasisRepr", into = "BasisRepr")]
pub struct FpcaBasis {
    grid: Grid,
    mean: Vec<f64>,
    eigenvalues: Vec<f64>,
    eigenfunctions: Vec<Vec<f64>>,
    total_variance: f64,
    lambda: f64,
}

#[derive(Serialize, Deserialize)]
struct BasisRepr {
    grid: Grid,
    mean: Vec<f64>,
    eigenvalues: Vec<f64>,
    eigenfunctions: Vec<Vec<f64>>,
    total_variance: f64,
    lambda: f64,
}

impl FpcaBasis {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Pointwise mean of the training curves.
    pub fn mean_curve(&self) -> &[f64] {
        &self.mean
    }

    /// Retained eigenvalues, sorted in decreasing order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Number of retained components M.
    pub fn m(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Values of eigenfunction `j` on the grid.
    pub fn eigenfunction(&self, j: usize) -> &[f64] {
        &self.eigenfunctions[j]
    }

    /// Sum of the full eigenvalue spectrum, retained or not.
    pub fn total_variance(&self) -> f64 {
        self.total_variance
    }

    /// Fraction of total variance carried by the retained components.
    pub fn captured_fraction(&self) -> f64 {
        self.eigenvalues.iter().sum::<f64>() / self.total_variance
    }

    /// Variance-fraction threshold the truncation was selected for.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

impl TryFrom<BasisRepr> for FpcaBasis {
    type Error = Error;

    fn try_from(r: BasisRepr) -> Result<Self> {
        let p = r.grid.len();
        if r.mean.len() != p {
            return Err(Error::ModelFormat(format!(
                "mean curve has {} values on a grid of {p} points",
                r.mean.len()
            )));
        }
        if r.eigenvalues.len() != r.eigenfunctions.len() || r.eigenvalues.is_empty() {
            return Err(Error::ModelFormat(format!(
                "{} eigenvalues against {} eigenfunctions",
                r.eigenvalues.len(),
                r.eigenfunctions.len()
            )));
        }
        if r.eigenfunctions.iter().any(|f| f.len() != p) {
            return Err(Error::ModelFormat(
                "eigenfunction length differs from grid length".into(),
            ));
        }
        let finite = r.mean.iter().all(|v| v.is_finite())
            && r.eigenvalues.iter().all(|v| v.is_finite() && *v >= 0.0)
            && r.eigenfunctions.iter().flatten().all(|v| v.is_finite())
            && r.total_variance.is_finite();
        if !finite {
            return Err(Error::ModelFormat("non-finite basis entries".into()));
        }
        if !(r.lambda > 0.0 && r.lambda <= 1.0) {
            return Err(Error::ModelFormat(format!(
                "variance fraction {} outside (0, 1]",
                r.lambda
            )));
        }
        Ok(FpcaBasis {
            grid: r.grid,
            mean: r.mean,
            eigenvalues: r.eigenvalues,
            eigenfunctions: r.eigenfunctions,
            total_variance: r.total_variance,
            lambda: r.lambda,
        })
    }
}

impl From<FpcaBasis> for BasisRepr {
    fn from(b: FpcaBasis) -> Self {
        BasisRepr {
            grid: b.grid,
            mean: b.mean,
            eigenvalues: b.eigenvalues,
            eigenfunctions: b.eigenfunctions,
            total_variance: b.total_variance,
            lambda: b.lambda,
        }
    }
}

fn shared_grid<'a>(samples: &'a [FunctionalSample]) -> Result<&'a Grid> {
    let first = samples[0].grid();
    for s in &samples[1..] {
        if s.grid() != first {
            return Err(Error::GridMismatch(format!(
                "expected {} points spaced {}, found {} points spaced {}",
                first.len(),
                first.spacing(),
                s.grid().len(),
                s.grid().spacing()
            )));
        }
    }
    Ok(first)
}

/// Computes the pointwise mean curve and the mean-centered samples.
pub fn center(samples: &[FunctionalSample]) -> Result<(FunctionalSample, Vec<FunctionalSample>)> {
    if samples.len() < 2 {
        return Err(Error::InvalidDimension(format!(
            "need at least 2 curves to center, got {}",
            samples.len()
        )));
    }
    let grid = shared_grid(samples)?.clone();
    let p = grid.len();
    let n = samples.len() as f64;
    let mut mean = vec![0.0; p];
    for s in samples {
        for (m, v) in mean.iter_mut().zip(s.values()) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= n;
    }
    let centered = samples
        .iter()
        .map(|s| {
            let values = s.values().iter().zip(&mean).map(|(v, m)| v - m).collect();
            FunctionalSample::new(grid.clone(), values)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((FunctionalSample::new(grid, mean)?, centered))
}

/// Empirical covariance matrix K of already-centered curves, dividing by n.
pub fn empirical_covariance(centered: &[FunctionalSample]) -> Result<DMatrix<f64>> {
    if centered.is_empty() {
        return Err(Error::InvalidDimension(
            "covariance of an empty sample".into(),
        ));
    }
    let grid = shared_grid(centered)?;
    let n = centered.len();
    let p = grid.len();
    let x = DMatrix::from_fn(n, p, |i, k| centered[i].values()[k]);
    Ok(x.tr_mul(&x) / n as f64)
}

/// Fits the eigenbasis and truncates it at the smallest M whose components
/// capture at least a `lambda` fraction of total variance.
pub fn fit_fpca(samples: &[FunctionalSample], lambda: f64) -> Result<FpcaBasis> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "variance fraction {lambda} outside (0, 1]"
        )));
    }
    let (mean, centered) = center(samples)?;
    let grid = mean.grid().clone();
    let dt = grid.spacing();
    let p = grid.len();

    let cov = empirical_covariance(&centered)?;
    let eig = SymmetricEigen::new(cov * dt);

    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    // Tiny negative eigenvalues are rounding debris from an exactly PSD
    // operator; clamp them rather than letting them poison the variance sums.
    let theta: Vec<f64> = order
        .iter()
        .map(|&i| eig.eigenvalues[i].max(0.0))
        .collect();

    if theta[0] <= 1e-12 {
        return Err(Error::DegenerateData);
    }
    let total_variance: f64 = theta.iter().sum();
    let rank = theta.iter().filter(|&&t| t > 1e-12 * theta[0]).count();

    let mut m = rank;
    let mut cum = 0.0;
    for (j, &t) in theta.iter().take(rank).enumerate() {
        cum += t;
        if cum / total_variance >= lambda {
            m = j + 1;
            break;
        }
    }

    let scale = 1.0 / dt.sqrt();
    let eigenfunctions: Vec<Vec<f64>> = order[..m]
        .iter()
        .map(|&i| {
            let col = eig.eigenvectors.column(i);
            let mut f: Vec<f64> = col.iter().map(|v| v * scale).collect();
            // Sign convention: make the largest-magnitude value positive so
            // refits produce identical bases (ties keep the earliest point).
            let mut arg = 0;
            for (k, v) in f.iter().enumerate() {
                if v.abs() > f[arg].abs() {
                    arg = k;
                }
            }
            if f[arg] < 0.0 {
                for v in f.iter_mut() {
                    *v = -*v;
                }
            }
            f
        })
        .collect();

    Ok(FpcaBasis {
        grid,
        mean: mean.values().to_vec(),
        eigenvalues: theta[..m].to_vec(),
        eigenfunctions,
        total_variance,
        lambda,
    })
}

/// Scores of one curve against a fitted basis: the quadrature inner product
/// of the mean-centered curve with each retained eigenfunction.
pub fn project(basis: &FpcaBasis, sample: &FunctionalSample) -> Result<ScoreVector> {
    if sample.grid() != basis.grid() {
        return Err(Error::GridMismatch(
            "sample grid differs from the basis grid".into(),
        ));
    }
    let dt = basis.grid().spacing();
    let centered: Vec<f64> = sample
        .values()
        .iter()
        .zip(basis.mean_curve())
        .map(|(v, m)| v - m)
        .collect();
    let scores = (0..basis.m())
        .map(|j| {
            dt * centered
                .iter()
                .zip(basis.eigenfunction(j))
                .map(|(x, f)| x * f)
                .sum::<f64>()
        })
        .collect();
    Ok(ScoreVector { scores })
}

/// Linear combination of the basis eigenfunctions with the given weights.
/// This is how a coefficient vector on scores becomes a curve again.
pub fn reconstruct_curve(basis: &FpcaBasis, coefs: &[f64]) -> Result<FunctionalSample> {
    if coefs.len() != basis.m() {
        return Err(Error::DimensionMismatch(format!(
            "{} coefficients for a basis of {} components",
            coefs.len(),
            basis.m()
        )));
    }
    let mut values = vec![0.0; basis.grid().len()];
    for (j, &c) in coefs.iter().enumerate() {
        for (v, f) in values.iter_mut().zip(basis.eigenfunction(j)) {
            *v += c * f;
        }
    }
    FunctionalSample::new(basis.grid().clone(), values)
}

/// Rectangle-rule inner product of two value vectors on a shared grid.
pub fn quadrature_inner_product(f: &[f64], g: &[f64], grid: &Grid) -> Result<f64> {
    if f.len() != grid.len() || g.len() != grid.len() {
        return Err(Error::DimensionMismatch(format!(
            "inner product of lengths {} and {} on a grid of {} points",
            f.len(),
            g.len(),
            grid.len()
        )));
    }
    Ok(grid.spacing() * f.iter().zip(g).map(|(a, b)| a * b).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::DVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn random_curves(n: usize, p: usize, seed: u64) -> Vec<FunctionalSample> {
        let grid = Grid::uniform(0.0, 1.0, p).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let values = (0..p).map(|_| rng.random::<f64>() - 0.5).collect();
                FunctionalSample::new(grid.clone(), values).unwrap()
            })
            .collect()
    }

    #[test]
    fn grid_rejects_bad_points() {
        assert!(matches!(Grid::new(vec![0.0]), Err(Error::InvalidGrid(_))));
        assert!(matches!(
            Grid::new(vec![0.0, 1.0, 0.5]),
            Err(Error::InvalidGrid(_))
        ));
        assert!(matches!(
            Grid::new(vec![0.0, 0.0, 1.0]),
            Err(Error::InvalidGrid(_))
        ));
        assert!(matches!(
            Grid::new(vec![0.0, 0.1, 1.0]),
            Err(Error::InvalidGrid(_))
        ));
        assert!(matches!(
            Grid::new(vec![0.0, f64::NAN]),
            Err(Error::InvalidGrid(_))
        ));
    }

    #[test]
    fn uniform_grid_hits_both_endpoints() {
        let g = Grid::uniform(0.0, 1.0, 100).unwrap();
        assert_eq!(g.len(), 100);
        assert_eq!(g.points()[0], 0.0);
        assert_eq!(g.points()[99], 1.0);
        assert_abs_diff_eq!(g.spacing(), 1.0 / 99.0, epsilon = 1e-15);
    }

    #[test]
    fn quadrature_matches_direct_sum() {
        let grid = Grid::uniform(0.0, 1.0, 11).unwrap();
        let f: Vec<f64> = grid.points().to_vec();
        let g = vec![1.0; 11];
        // Direct evaluation of the same rectangle rule.
        let want = 0.1 * f.iter().sum::<f64>();
        let got = quadrature_inner_product(&f, &g, &grid).unwrap();
        assert_abs_diff_eq!(got, want, epsilon = 1e-14);
    }

    #[test]
    fn quadrature_converges_to_continuum_integral() {
        // integral of 2 cos^2(pi t) over [0,1] is 1; the rectangle rule
        // should approach it as the grid refines.
        let mut errors = Vec::new();
        for &p in &[20usize, 200, 2000] {
            let grid = Grid::uniform(0.0, 1.0, p).unwrap();
            let f: Vec<f64> = grid
                .points()
                .iter()
                .map(|t| 2.0f64.sqrt() * (std::f64::consts::PI * t).cos())
                .collect();
            let val = quadrature_inner_product(&f, &f, &grid).unwrap();
            errors.push((val - 1.0).abs());
        }
        // The endpoint-inclusive rectangle rule double-counts the period
        // boundary of cos^2, so the error scales like 2/p.
        assert!(errors[2] < errors[1] && errors[1] < errors[0]);
        assert!(errors[2] < 2e-3);
    }

    #[test]
    fn covariance_matches_double_loop() {
        let curves = random_curves(5, 7, 11);
        let (_, centered) = center(&curves).unwrap();
        let cov = empirical_covariance(&centered).unwrap();
        for k in 0..7 {
            for l in 0..7 {
                let mut want = 0.0;
                for c in &centered {
                    want += c.values()[k] * c.values()[l];
                }
                want /= 5.0;
                assert_abs_diff_eq!(cov[(k, l)], want, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn centering_removes_the_mean() {
        let curves = random_curves(10, 13, 7);
        let (mean, centered) = center(&curves).unwrap();
        for k in 0..13 {
            let direct: f64 = curves.iter().map(|c| c.values()[k]).sum::<f64>() / 10.0;
            assert_abs_diff_eq!(mean.values()[k], direct, epsilon = 1e-14);
            let residual: f64 = centered.iter().map(|c| c.values()[k]).sum();
            assert_abs_diff_eq!(residual, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn identical_curves_are_degenerate() {
        let grid = Grid::uniform(0.0, 1.0, 5).unwrap();
        let c = FunctionalSample::new(grid, vec![1.0, 2.0, 3.0, 2.0, 1.0]).unwrap();
        let fit = fit_fpca(&[c.clone(), c], 0.9);
        assert!(matches!(fit, Err(Error::DegenerateData)));
    }

    #[test]
    fn eigenfunctions_are_quadrature_orthonormal() {
        let curves = random_curves(40, 15, 3);
        let basis = fit_fpca(&curves, 1.0).unwrap();
        let grid = basis.grid();
        for j in 0..basis.m() {
            for k in 0..basis.m() {
                let ip = quadrature_inner_product(
                    basis.eigenfunction(j),
                    basis.eigenfunction(k),
                    grid,
                )
                .unwrap();
                let want = if j == k { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(ip, want, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn score_variance_equals_eigenvalue() {
        let curves = random_curves(30, 12, 5);
        let basis = fit_fpca(&curves, 1.0).unwrap();
        let n = curves.len() as f64;
        let scores: Vec<ScoreVector> = curves
            .iter()
            .map(|c| project(&basis, c).unwrap())
            .collect();
        for j in 0..basis.m() {
            let mean: f64 = scores.iter().map(|s| s.scores()[j]).sum::<f64>() / n;
            assert_abs_diff_eq!(mean, 0.0, epsilon = 1e-10);
            let var: f64 = scores.iter().map(|s| s.scores()[j].powi(2)).sum::<f64>() / n;
            let theta = basis.eigenvalues()[j];
            assert_abs_diff_eq!(var, theta, epsilon = 1e-10 * theta.max(1.0));
        }
    }

    #[test]
    fn truncation_is_minimal_and_monotone_in_lambda() {
        let curves = random_curves(25, 10, 9);
        let mut prev_m = 0;
        for &lambda in &[0.3, 0.6, 0.9, 0.99, 1.0] {
            let basis = fit_fpca(&curves, lambda).unwrap();
            assert!(basis.captured_fraction() >= lambda - 1e-12);
            assert!(basis.m() >= prev_m);
            if basis.m() > 1 {
                let below: f64 = basis.eigenvalues()[..basis.m() - 1].iter().sum();
                assert!(below / basis.total_variance() < lambda);
            }
            prev_m = basis.m();
        }
    }

    #[test]
    fn full_lambda_keeps_the_numerical_rank() {
        // Rank-2 data: every curve is a combination of two fixed shapes.
        let grid = Grid::uniform(0.0, 1.0, 8).unwrap();
        let s1: Vec<f64> = grid.points().iter().map(|t| (3.0 * t).sin()).collect();
        let s2: Vec<f64> = grid.points().iter().map(|t| t * t).collect();
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        let curves: Vec<FunctionalSample> = (0..20)
            .map(|_| {
                let (a, b) = (rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
                let v = s1.iter().zip(&s2).map(|(x, y)| a * x + b * y).collect();
                FunctionalSample::new(grid.clone(), v).unwrap()
            })
            .collect();
        let basis = fit_fpca(&curves, 1.0).unwrap();
        assert_eq!(basis.m(), 2);
        assert_abs_diff_eq!(basis.captured_fraction(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn eigenvalue_equation_holds() {
        let curves = random_curves(30, 9, 13);
        let (_, centered) = center(&curves).unwrap();
        let cov = empirical_covariance(&centered).unwrap();
        let basis = fit_fpca(&curves, 1.0).unwrap();
        let dt = basis.grid().spacing();
        let a = cov * dt;
        for j in 0..basis.m() {
            let u = DVector::from_iterator(
                9,
                basis.eigenfunction(j).iter().map(|v| v * dt.sqrt()),
            );
            let au = &a * &u;
            let theta = basis.eigenvalues()[j];
            for k in 0..9 {
                assert_abs_diff_eq!(au[k], theta * u[k], epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn sign_convention_makes_peak_positive() {
        let curves = random_curves(30, 12, 21);
        let basis = fit_fpca(&curves, 1.0).unwrap();
        for j in 0..basis.m() {
            let f = basis.eigenfunction(j);
            let mut arg = 0;
            for (k, v) in f.iter().enumerate() {
                if v.abs() > f[arg].abs() {
                    arg = k;
                }
            }
            assert!(f[arg] > 0.0);
        }
    }

    #[test]
    fn reconstruction_error_shrinks_with_more_components() {
        let curves = random_curves(20, 10, 31);
        let basis = fit_fpca(&curves, 1.0).unwrap();
        let sample = &curves[4];
        let scores = project(&basis, sample).unwrap();
        let centered: Vec<f64> = sample
            .values()
            .iter()
            .zip(basis.mean_curve())
            .map(|(v, m)| v - m)
            .collect();
        let mut prev = f64::INFINITY;
        for m in 1..=basis.m() {
            let mut partial = vec![0.0; 10];
            for j in 0..m {
                for (v, f) in partial.iter_mut().zip(basis.eigenfunction(j)) {
                    *v += scores.scores()[j] * f;
                }
            }
            let err: Vec<f64> = centered.iter().zip(&partial).map(|(a, b)| a - b).collect();
            let norm = quadrature_inner_product(&err, &err, basis.grid()).unwrap();
            assert!(norm <= prev + 1e-12);
            prev = norm;
        }
        assert_abs_diff_eq!(prev, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn projecting_the_mean_gives_zero_scores() {
        let curves = random_curves(15, 8, 41);
        let basis = fit_fpca(&curves, 0.9).unwrap();
        let mean =
            FunctionalSample::new(basis.grid().clone(), basis.mean_curve().to_vec()).unwrap();
        let scores = project(&basis, &mean).unwrap();
        for &s in scores.scores() {
            assert_abs_diff_eq!(s, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let curves = random_curves(10, 8, 51);
        let basis = fit_fpca(&curves, 0.9).unwrap();
        let other = Grid::uniform(0.0, 2.0, 8).unwrap();
        let stranger = FunctionalSample::new(other, vec![0.0; 8]).unwrap();
        assert!(matches!(
            project(&basis, &stranger),
            Err(Error::GridMismatch(_))
        ));
        let mut mixed = random_curves(3, 8, 61);
        mixed.push(stranger);
        assert!(matches!(center(&mixed), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn reconstruct_checks_coefficient_length()  {
        let curves = random_curves(10, 8, 71);
        let basis = fit_fpca(&curves, 0.9).unwrap();
        assert!(matches!(
            reconstruct_curve(&basis, &vec![0.0; basis.m() + 1]),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn lambda_outside_unit_interval_is_rejected() {
        let curves = random_curves(10, 8, 81);
        assert!(matches!(
            fit_fpca(&curves, 0.0),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            fit_fpca(&curves, 1.5),
            Err(Error::InvalidParameter(_))
        ));
    }
}
