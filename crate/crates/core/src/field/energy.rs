//! Discrete energies.
//!
//! Gradients live on grid edges. The covariant difference along an edge from
//! node `a` to node `b` is `(u_b (1 - i t/2) - u_a (1 + i t/2)) / h` where
//! `t = h * B * A(midpoint) . e`, i.e. the difference quotient minus
//! `i B A` times the edge average. With `A = x^perp / 2` an x-edge carries
//! `t = -h B y / 2` and a y-edge `t = h B x / 2`. Edges next to the box
//! boundary are counted with multiplicity 3/2 (see
//! [`Grid2D::edge_multiplicity`]). A node weight `w` enters as the edge mean.

use num_complex::Complex64;
use rayon::prelude::*;

use super::{same_grid, ComplexField, Grid2D, ScalarField};
use crate::error::{Error, Result};
use crate::params::PhysicalParams;

/// Visits every edge as `(a, b, multiplicity, t, extra_to_a, extra_to_b)`.
///
/// The last two flags tell which endpoint is the boundary node owning the
/// extra half of the multiplicity.
#[inline]
fn for_each_edge<F>(grid: &Grid2D, field: f64, mut f: F)
where
    F: FnMut(usize, usize, f64, f64, bool, bool),
{
    let n = grid.n;
    let h = grid.spacing();
    for j in 0..n {
        let y = grid.coord(j, 1);
        let tx = -0.5 * h * field * y;
        for i in 0..n - 1 {
            let a = grid.index(i, j);
            f(a, a + 1, grid.edge_multiplicity(i), tx, i == 0, i + 2 == n);
        }
    }
    for j in 0..n - 1 {
        let cy = grid.edge_multiplicity(j);
        for i in 0..n {
            let x = grid.coord(i, 0);
            let ty = 0.5 * h * field * x;
            let a = grid.index(i, j);
            f(a, a + n, cy, ty, j == 0, j + 2 == n);
        }
    }
}

#[inline]
fn edge_weight(w: Option<&[f64]>, a: usize, b: usize) -> f64 {
    match w {
        None => 1.0,
        Some(w) => 0.5 * (w[a] + w[b]),
    }
}

#[inline]
fn edge_diff(ua: Complex64, ub: Complex64, t: f64) -> Complex64 {
    let half = Complex64::new(0.0, 0.5 * t);
    ub * (1.0 - half) - ua * (1.0 + half)
}

/// `int w |(grad - i B A0) u|^2` for node weights `w`.
pub fn kinetic_energy(u: &[Complex64], grid: &Grid2D, field: f64, w: Option<&[f64]>) -> f64 {
    let mut s = 0.0;
    for_each_edge(grid, field, |a, b, c, t, _, _| {
        s += c * edge_weight(w, a, b) * edge_diff(u[a], u[b], t).norm_sqr();
    });
    s
}

/// Node density of [`kinetic_energy`]; its midpoint integral is the energy.
pub fn kinetic_density_values(u: &[Complex64], grid: &Grid2D, field: f64, w: Option<&[f64]>) -> Vec<f64> {
    let mut d = vec![0.0; grid.len()];
    let inv = 1.0 / grid.cell_area();
    for_each_edge(grid, field, |a, b, c, t, xa, xb| {
        let e = edge_weight(w, a, b) * edge_diff(u[a], u[b], t).norm_sqr() * inv;
        d[a] += 0.5 * e;
        d[b] += 0.5 * e;
        if c > 1.0 {
            if xa {
                d[a] += 0.5 * e;
            }
            if xb {
                d[b] += 0.5 * e;
            }
        }
    });
    d
}

/// Adds the L2 gradient of [`kinetic_energy`] to `grad`, returns the energy.
///
/// The L2 gradient `g` satisfies `dE = Re sum conj(g) du h^2`. Rows are
/// processed in parallel; every node gathers the terms of its own edges.
pub fn kinetic_gradient(
    u: &[Complex64],
    grid: &Grid2D,
    field: f64,
    w: Option<&[f64]>,
    grad: &mut [Complex64],
) -> f64 {
    let n = grid.n;
    let h = grid.spacing();
    let inv = 2.0 / grid.cell_area();
    grad.par_chunks_mut(n)
        .enumerate()
        .map(|(j, row)| {
            let base = j * n;
            let tx = -0.5 * h * field * grid.coord(j, 1);
            let hx = Complex64::new(0.0, 0.5 * tx);
            let mut s = 0.0;
            for i in 0..n - 1 {
                let (a, b) = (base + i, base + i + 1);
                let cw = grid.edge_multiplicity(i) * edge_weight(w, a, b);
                let d = edge_diff(u[a], u[b], tx);
                s += cw * d.norm_sqr();
                let k = cw * inv;
                row[i + 1] += (1.0 - hx).conj() * d * k;
                row[i] -= (1.0 + hx).conj() * d * k;
            }
            for i in 0..n {
                let ty = 0.5 * h * field * grid.coord(i, 0);
                let hy = Complex64::new(0.0, 0.5 * ty);
                let a = base + i;
                if j + 1 < n {
                    let b = a + n;
                    let cw = grid.edge_multiplicity(j) * edge_weight(w, a, b);
                    let d = edge_diff(u[a], u[b], ty);
                    s += cw * d.norm_sqr();
                    row[i] -= (1.0 + hy).conj() * d * (cw * inv);
                }
                if j > 0 {
                    let c = a - n;
                    let cw = grid.edge_multiplicity(j - 1) * edge_weight(w, c, a);
                    let d = edge_diff(u[c], u[a], ty);
                    row[i] += (1.0 - hy).conj() * d * (cw * inv);
                }
            }
            s
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum()
}

/// `int |grad eta|^2` for a real field.
pub fn dirichlet_energy(eta: &[f64], grid: &Grid2D) -> f64 {
    let mut s = 0.0;
    for_each_edge(grid, 0.0, |a, b, c, _, _, _| {
        let d = eta[b] - eta[a];
        s += c * d * d;
    });
    s
}

/// Adds `-2 Lap_h eta` (the L2 gradient of [`dirichlet_energy`]) to `grad`.
pub fn dirichlet_gradient(eta: &[f64], grid: &Grid2D, grad: &mut [f64]) -> f64 {
    let inv = 2.0 / grid.cell_area();
    let mut s = 0.0;
    for_each_edge(grid, 0.0, |a, b, c, _, _, _| {
        let d = eta[b] - eta[a];
        s += c * d * d;
        grad[b] += c * d * inv;
        grad[a] -= c * d * inv;
    });
    s
}

/// Trap `a(x)` sampled at the nodes.
pub fn trap_values(grid: &Grid2D, p: &PhysicalParams) -> Vec<f64> {
    let l2 = p.lambda * p.lambda;
    grid.points().map(|x| p.a0 - x[0] * x[0] - l2 * x[1] * x[1]).collect()
}

/// Pointwise potential part of `F` and `E`.
#[inline]
fn gp_potential(a: f64, r2: f64, rho: f64, p: &PhysicalParams) -> f64 {
    let am = (-a).max(0.0);
    let d = a - rho;
    (d * d - am * am) / (2.0 * p.epsilon * p.epsilon) - 0.25 * p.omega * p.omega * r2 * rho
}

fn potential_sum(u: &ComplexField, p: &PhysicalParams) -> f64 {
    let a = trap_values(&u.grid, p);
    u.grid
        .points()
        .zip(&u.values)
        .zip(&a)
        .map(|((x, z), &a)| gp_potential(a, x[0] * x[0] + x[1] * x[1], z.norm_sqr(), p))
        .sum()
}

fn finite(e: f64) -> Result<f64> {
    if e.is_finite() {
        Ok(e)
    } else {
        Err(Error::NonFiniteEnergy)
    }
}

/// Pointwise `|(grad - i omega A0) u|^2`.
pub fn covariant_kinetic_density(u: &ComplexField, omega: f64) -> ScalarField {
    ScalarField { grid: u.grid, values: kinetic_density_values(&u.values, &u.grid, omega, None) }
}

/// The rotating functional `F`.
pub fn energy_f(u: &ComplexField, p: &PhysicalParams) -> Result<f64> {
    let h2 = u.grid.cell_area();
    finite(kinetic_energy(&u.values, &u.grid, p.omega, None) + potential_sum(u, p) * h2)
}

/// The reduced functional `E`: no magnetic potential, centrifugal term kept.
pub fn energy_e(u: &ComplexField, p: &PhysicalParams) -> Result<f64> {
    let h2 = u.grid.cell_area();
    finite(kinetic_energy(&u.values, &u.grid, 0.0, None) + potential_sum(u, p) * h2)
}

/// `E` for a real profile.
pub fn energy_e_real(eta: &ScalarField, p: &PhysicalParams) -> Result<f64> {
    let g = &eta.grid;
    let a = trap_values(g, p);
    let pot: f64 = g
        .points()
        .zip(&eta.values)
        .zip(&a)
        .map(|((x, e), &a)| gp_potential(a, x[0] * x[0] + x[1] * x[1], e * e, p))
        .sum();
    finite(dirichlet_energy(&eta.values, g) + pot * g.cell_area())
}

/// The weighted functional `G(v)` with profile `eta`.
pub fn energy_g(v: &ComplexField, eta: &ScalarField, p: &PhysicalParams) -> Result<f64> {
    same_grid(&v.grid, &eta.grid)?;
    let eta2: Vec<f64> = eta.values.iter().map(|e| e * e).collect();
    let kin = kinetic_energy(&v.values, &v.grid, p.omega, Some(&eta2));
    let c = 0.5 / (p.epsilon * p.epsilon);
    let pot: f64 = v
        .values
        .iter()
        .zip(&eta2)
        .map(|(z, w)| {
            let d = 1.0 - z.norm_sqr();
            c * w * w * d * d
        })
        .sum();
    finite(kin + pot * v.grid.cell_area())
}

/// Pointwise integrand of `G`.
pub fn g_density(v: &ComplexField, eta: &ScalarField, p: &PhysicalParams) -> Result<ScalarField> {
    same_grid(&v.grid, &eta.grid)?;
    let eta2: Vec<f64> = eta.values.iter().map(|e| e * e).collect();
    let mut d = kinetic_density_values(&v.values, &v.grid, p.omega, Some(&eta2));
    let c = 0.5 / (p.epsilon * p.epsilon);
    for ((d, z), w) in d.iter_mut().zip(&v.values).zip(&eta2) {
        let q = 1.0 - z.norm_sqr();
        *d += c * w * w * q * q;
    }
    Ok(ScalarField { grid: v.grid, values: d })
}

/// Adds the L2 gradient of `G` to `grad` and returns `G`.
pub fn g_gradient(
    v: &[Complex64],
    eta2: &[f64],
    grid: &Grid2D,
    p: &PhysicalParams,
    grad: &mut [Complex64],
) -> f64 {
    let kin = kinetic_gradient(v, grid, p.omega, Some(eta2), grad);
    let c = 0.5 / (p.epsilon * p.epsilon);
    // per-row partial sums keep the result independent of the thread count
    let n = grid.n;
    let pot: f64 = grad
        .par_chunks_mut(n)
        .zip(v.par_chunks(n).zip(eta2.par_chunks(n)))
        .map(|(g, (z, w))| {
            let mut s = 0.0;
            for ((g, z), w) in g.iter_mut().zip(z).zip(w) {
                let q = 1.0 - z.norm_sqr();
                *g -= z * (4.0 * c * w * w * q);
                s += c * w * w * q * q;
            }
            s
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    kin + pot * grid.cell_area()
}

/// Integral of the `G` integrand over a node mask.
pub fn local_energy(v: &ComplexField, eta: &ScalarField, p: &PhysicalParams, mask: &[bool]) -> Result<f64> {
    if mask.len() != v.grid.len() {
        return Err(Error::GridMismatch);
    }
    if !mask.iter().any(|&m| m) {
        return Err(Error::EmptyRegion("local energy mask".into()));
    }
    let d = g_density(v, eta, p)?;
    finite(super::integrate_masked(&d, mask))
}

/// True when the grid is the unit square `(-1/2, 1/2)^2`.
pub fn covers_unit_square(grid: &Grid2D) -> bool {
    (grid.half_extent - 0.5).abs() < 1e-12 && grid.center[0].abs() < 1e-12 && grid.center[1].abs() < 1e-12
}

/// Two-dimensional GL energy on the unit square.
pub fn energy_gl2d(u: &ComplexField, lambda_coef: f64, h_ex: f64, eps: f64) -> Result<f64> {
    if !covers_unit_square(&u.grid) {
        return Err(Error::GridMismatch);
    }
    let kin = kinetic_energy(&u.values, &u.grid, h_ex, None);
    let pot = gl2d_quartic(u, lambda_coef, eps);
    finite(kin + pot)
}

/// The quartic part `lambda/(2 eps^2) int (1 - |u|^2)^2` alone.
pub fn gl2d_quartic(u: &ComplexField, lambda_coef: f64, eps: f64) -> f64 {
    let c = 0.5 * lambda_coef / (eps * eps);
    u.values.iter().map(|z| (1.0 - z.norm_sqr()).powi(2)).sum::<f64>() * c * u.grid.cell_area()
}
