//! Uniform Cartesian sampling of the plane truncated to a square box.
//!
//! Nodes are cell-centred: with `n` points per axis on `[c - R, c + R]` the
//! node coordinates are `c - R + (i + 1/2) h`, `h = 2R / n`, and quadrature is
//! the midpoint rule over the node cells. Values are stored row-major with the
//! `x1` index running fastest.

pub mod dump;
pub mod energy;
pub mod neumann;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use energy::*;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub n: usize,
    pub half_extent: f64,
    #[serde(default)]
    pub center: [f64; 2],
}

impl Grid2D {
    /// Box `[-R, R]^2` with `n` points per axis; `n` must be even.
    pub fn new(n: usize, half_extent: f64) -> Result<Self> {
        Self::centered(n, half_extent, [0.0, 0.0])
    }

    pub fn centered(n: usize, half_extent: f64, center: [f64; 2]) -> Result<Self> {
        if n < 4 || n % 2 != 0 {
            return Err(Error::Config(format!("grid size n = {n} must be even and >= 4")));
        }
        if !(half_extent > 0.0 && half_extent.is_finite()) {
            return Err(Error::Config(format!("half_extent = {half_extent} must be positive")));
        }
        Ok(Self { n, half_extent, center })
    }

    /// Grid whose spacing is exactly `spacing`.
    pub fn with_spacing(n: usize, spacing: f64) -> Result<Self> {
        Self::new(n, 0.5 * n as f64 * spacing)
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_extent / self.n as f64
    }

    pub fn cell_area(&self) -> f64 {
        let h = self.spacing();
        h * h
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn coord(&self, i: usize, axis: usize) -> f64 {
        self.center[axis] - self.half_extent + (i as f64 + 0.5) * self.spacing()
    }

    #[inline]
    pub fn point(&self, i: usize, j: usize) -> [f64; 2] {
        [self.coord(i, 0), self.coord(j, 1)]
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    /// All node coordinates in storage order.
    pub fn points(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        (0..self.n).flat_map(move |j| (0..self.n).map(move |i| self.point(i, j)))
    }

    /// Node mask of a predicate.
    pub fn mask<F: Fn([f64; 2]) -> bool>(&self, pred: F) -> Vec<bool> {
        self.points().map(pred).collect()
    }

    /// Continuous index of a coordinate, `x = coord(t)`.
    pub fn fractional_index(&self, x: f64, axis: usize) -> f64 {
        (x - self.center[axis] + self.half_extent) / self.spacing() - 0.5
    }

    /// Multiplicity of the edge between nodes `i` and `i + 1` along one axis.
    ///
    /// Edges touching the first or last node carry an extra half so that the
    /// edge sum covers the full box, i.e. one-sided differences at the edge.
    #[inline]
    pub fn edge_multiplicity(&self, i: usize) -> f64 {
        let mut c = 1.0;
        if i == 0 {
            c += 0.5;
        }
        if i + 2 == self.n {
            c += 0.5;
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Grid2D,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    pub grid: Grid2D,
    pub values: Vec<Complex64>,
}

impl ScalarField {
    pub fn from_fn<F: FnMut([f64; 2]) -> f64>(grid: Grid2D, mut f: F) -> Self {
        let values = grid.points().map(&mut f).collect();
        Self { grid, values }
    }

    pub fn constant(grid: Grid2D, c: f64) -> Self {
        Self { grid, values: vec![c; grid.len()] }
    }

    pub fn zeros(grid: Grid2D) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn squared(&self) -> ScalarField {
        ScalarField { grid: self.grid, values: self.values.iter().map(|v| v * v).collect() }
    }

    pub fn to_complex(&self) -> ComplexField {
        ComplexField {
            grid: self.grid,
            values: self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }

    /// Bilinear interpolation between nodes.
    pub fn sample(&self, x: [f64; 2]) -> Result<f64> {
        let g = &self.grid;
        let tx = g.fractional_index(x[0], 0);
        let ty = g.fractional_index(x[1], 1);
        let last = (g.n - 1) as f64;
        if !(0.0..=last).contains(&tx) || !(0.0..=last).contains(&ty) {
            return Err(Error::InterpolationOutOfRange);
        }
        let i = (tx.floor() as usize).min(g.n - 2);
        let j = (ty.floor() as usize).min(g.n - 2);
        let (fx, fy) = (tx - i as f64, ty - j as f64);
        let v00 = self.get(i, j);
        let v10 = self.get(i + 1, j);
        let v01 = self.get(i, j + 1);
        let v11 = self.get(i + 1, j + 1);
        Ok((1.0 - fy) * ((1.0 - fx) * v00 + fx * v10) + fy * ((1.0 - fx) * v01 + fx * v11))
    }
}

impl ComplexField {
    pub fn from_fn<F: FnMut([f64; 2]) -> Complex64>(grid: Grid2D, mut f: F) -> Self {
        let values = grid.points().map(&mut f).collect();
        Self { grid, values }
    }

    pub fn constant(grid: Grid2D, c: Complex64) -> Self {
        Self { grid, values: vec![c; grid.len()] }
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn modulus(&self) -> ScalarField {
        ScalarField { grid: self.grid, values: self.values.iter().map(|z| z.norm()).collect() }
    }

    pub fn scaled(&self, c: Complex64) -> ComplexField {
        ComplexField { grid: self.grid, values: self.values.iter().map(|z| z * c).collect() }
    }

    pub fn conj(&self) -> ComplexField {
        ComplexField { grid: self.grid, values: self.values.iter().map(|z| z.conj()).collect() }
    }

    /// Pointwise product with a real field, e.g. `u = eta * v`.
    pub fn times(&self, w: &ScalarField) -> Result<ComplexField> {
        same_grid(&self.grid, &w.grid)?;
        Ok(ComplexField {
            grid: self.grid,
            values: self.values.iter().zip(&w.values).map(|(z, r)| z * r).collect(),
        })
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest modulus on the outermost `rows` rings of nodes.
    pub fn boundary_max(&self, rows: usize) -> f64 {
        let n = self.grid.n;
        let mut m: f64 = 0.0;
        for j in 0..n {
            for i in 0..n {
                let edge = i.min(j).min(n - 1 - i).min(n - 1 - j);
                if edge < rows {
                    m = m.max(self.get(i, j).norm());
                }
            }
        }
        m
    }
}

pub(crate) fn same_grid(a: &Grid2D, b: &Grid2D) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

/// Midpoint quadrature over the box.
pub fn integrate(f: &ScalarField) -> f64 {
    f.values.iter().sum::<f64>() * f.grid.cell_area()
}

/// Quadrature restricted to a node mask.
pub fn integrate_masked(f: &ScalarField, mask: &[bool]) -> f64 {
    f.values.iter().zip(mask).filter(|(_, &m)| m).map(|(v, _)| v).sum::<f64>() * f.grid.cell_area()
}

/// `int |u|^2`, or `int w^2 |u|^2` with a weight.
pub fn mass(u: &ComplexField, weight: Option<&ScalarField>) -> Result<f64> {
    let s: f64 = match weight {
        None => u.values.iter().map(|z| z.norm_sqr()).sum(),
        Some(w) => {
            same_grid(&u.grid, &w.grid)?;
            u.values.iter().zip(&w.values).map(|(z, w)| w * w * z.norm_sqr()).sum()
        }
    };
    Ok(s * u.grid.cell_area())
}

/// Warns when a field is not negligible near the box boundary.
pub fn check_truncation(u: &ComplexField, what: &str) -> bool {
    let tail = u.boundary_max(3);
    if tail >= 1e-8 {
        log::warn!("{what}: |u| = {tail:.2e} on the outer rows; box truncation not negligible");
        false
    } else {
        true
    }
}
