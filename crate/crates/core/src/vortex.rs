//! Vortex detection by plaquette winding numbers, vortex balls, good and bad
//! squares, and box-averaged vorticity densities.

use std::collections::VecDeque;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{covariant_kinetic_density, ComplexField};
use crate::params::{DerivedParams, PhysicalParams};
use crate::profile::ProfileSolution;

const DEGENERATE: f64 = 1e-14;

/// Winding numbers on the `(n-1)^2` plaquettes of a grid. Plaquette
/// `(i, j)` has corners `(i, j)`, `(i+1, j)`, `(i+1, j+1)`, `(i, j+1)`.
#[derive(Debug, Clone)]
pub struct WindingMap {
    pub n: usize,
    pub values: Vec<i32>,
    /// Largest distance of a raw winding from its rounded value.
    pub max_residue: f64,
    /// Plaquettes with a corner of modulus below `1e-14`.
    pub degenerate: Vec<usize>,
}

impl WindingMap {
    pub fn get(&self, i: usize, j: usize) -> i32 {
        self.values[j * self.n + i]
    }

    pub fn total(&self) -> i64 {
        self.values.iter().map(|&w| w as i64).sum()
    }

    /// Sum over plaquettes `i0..i1` x `j0..j1`.
    pub fn sum_rect(&self, i0: usize, j0: usize, i1: usize, j1: usize) -> i64 {
        (j0..j1).flat_map(|j| (i0..i1).map(move |i| (i, j))).map(|(i, j)| self.get(i, j) as i64).sum()
    }
}

#[inline]
fn regularized(z: Complex64) -> Complex64 {
    if z.norm() < DEGENERATE {
        Complex64::new(1.0, 0.0)
    } else {
        z
    }
}

#[inline]
fn step(a: Complex64, b: Complex64) -> f64 {
    (regularized(b) * regularized(a).conj()).arg()
}

pub fn winding_map(v: &ComplexField) -> WindingMap {
    let n = v.grid.n;
    let z = &v.values;
    // principal phase steps along x-edges and y-edges
    let mut ex = vec![0.0; n * n];
    let mut ey = vec![0.0; n * n];
    for j in 0..n {
        for i in 0..n {
            let k = j * n + i;
            if i + 1 < n {
                ex[k] = step(z[k], z[k + 1]);
            }
            if j + 1 < n {
                ey[k] = step(z[k], z[k + n]);
            }
        }
    }
    let np = n - 1;
    let mut values = vec![0; np * np];
    let mut max_residue: f64 = 0.0;
    let mut degenerate = Vec::new();
    for j in 0..np {
        for i in 0..np {
            let k = j * n + i;
            let s = ex[k] + ey[k + 1] - ex[k + n] - ey[k];
            let w = s / (2.0 * PI);
            let r = w.round();
            max_residue = max_residue.max((w - r).abs());
            values[j * np + i] = r as i32;
            if [k, k + 1, k + n, k + n + 1].iter().any(|&c| z[c].norm() < DEGENERATE) {
                degenerate.push(j * np + i);
            }
        }
    }
    WindingMap { n: np, values, max_residue, degenerate }
}

/// Like [`winding_map`] but refuses fields with degenerate corners.
pub fn winding_map_strict(v: &ComplexField) -> Result<WindingMap> {
    let wm = winding_map(v);
    if wm.degenerate.is_empty() {
        Ok(wm)
    } else {
        Err(Error::DegenerateModulus(wm.degenerate.len()))
    }
}

/// Raw winding along the node rectangle `[i0, i1] x [j0, j1]`, counterclockwise.
pub fn boundary_winding(v: &ComplexField, i0: usize, j0: usize, i1: usize, j1: usize) -> f64 {
    let at = |i: usize, j: usize| v.get(i, j);
    let mut s = 0.0;
    for i in i0..i1 {
        s += step(at(i, j0), at(i + 1, j0));
        s -= step(at(i, j1), at(i + 1, j1));
    }
    for j in j0..j1 {
        s += step(at(i1, j), at(i1, j + 1));
        s -= step(at(i0, j), at(i0, j + 1));
    }
    s / (2.0 * PI)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Vortex {
    pub center: [f64; 2],
    pub radius: f64,
    pub degree: i32,
    /// Nodes in the component.
    pub size: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct VortexSet {
    pub vortices: Vec<Vortex>,
    pub total_degree: i64,
    pub total_abs_degree: i64,
    pub sum_radii: f64,
    /// Winding carried by plaquettes that touch no component.
    pub unassigned_degree: i64,
}

/// Connected components of `{|v| < threshold}` (4-neighbour) as vortex balls.
pub fn extract_vortices(v: &ComplexField, threshold: f64, mask: Option<&[bool]>) -> VortexSet {
    let g = &v.grid;
    let n = g.n;
    let h = g.spacing();
    let low: Vec<bool> = v
        .values
        .iter()
        .enumerate()
        .map(|(k, z)| z.norm() < threshold && mask.is_none_or(|m| m[k]))
        .collect();
    let wm = winding_map(v);
    let np = n - 1;
    let mut label = vec![usize::MAX; n * n];
    let mut claimed = vec![false; np * np];
    let mut vortices = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..n * n {
        if !low[start] || label[start] != usize::MAX {
            continue;
        }
        let id = vortices.len();
        let mut nodes = Vec::new();
        label[start] = id;
        queue.push_back(start);
        while let Some(k) = queue.pop_front() {
            nodes.push(k);
            let (i, j) = (k % n, k / n);
            let mut visit = |q: usize| {
                if low[q] && label[q] == usize::MAX {
                    label[q] = id;
                    queue.push_back(q);
                }
            };
            if i > 0 {
                visit(k - 1);
            }
            if i + 1 < n {
                visit(k + 1);
            }
            if j > 0 {
                visit(k - n);
            }
            if j + 1 < n {
                visit(k + n);
            }
        }
        let mut degree = 0i32;
        let (mut wx, mut wy, mut wsum, mut ax, mut ay, mut asum) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for &k in &nodes {
            let (i, j) = (k % n, k / n);
            for (pi, pj) in [(i, j), (i.wrapping_sub(1), j), (i, j.wrapping_sub(1)), (i.wrapping_sub(1), j.wrapping_sub(1))] {
                if pi >= np || pj >= np || claimed[pj * np + pi] {
                    continue;
                }
                claimed[pj * np + pi] = true;
                let w = wm.values[pj * np + pi];
                if w != 0 {
                    let c = [g.coord(pi, 0) + 0.5 * h, g.coord(pj, 1) + 0.5 * h];
                    degree += w;
                    wx += w as f64 * c[0];
                    wy += w as f64 * c[1];
                    wsum += w as f64;
                    ax += w.abs() as f64 * c[0];
                    ay += w.abs() as f64 * c[1];
                    asum += w.abs() as f64;
                }
            }
        }
        let center = if wsum != 0.0 {
            [wx / wsum, wy / wsum]
        } else if asum > 0.0 {
            [ax / asum, ay / asum]
        } else {
            let s = nodes.len() as f64;
            let (sx, sy) = nodes.iter().fold((0.0, 0.0), |(a, b), &k| {
                let x = g.point(k % n, k / n);
                (a + x[0], b + x[1])
            });
            [sx / s, sy / s]
        };
        let radius = nodes
            .iter()
            .map(|&k| {
                let x = g.point(k % n, k / n);
                (x[0] - center[0]).hypot(x[1] - center[1])
            })
            .fold(0.0, f64::max)
            + h;
        vortices.push(Vortex { center, radius, degree, size: nodes.len() });
    }
    let unassigned_degree = wm
        .values
        .iter()
        .zip(&claimed)
        .filter(|(_, &c)| !c)
        .map(|(&w, _)| w as i64)
        .sum::<i64>();
    VortexSet {
        total_degree: vortices.iter().map(|v| v.degree as i64).sum(),
        total_abs_degree: vortices.iter().map(|v| v.degree.abs() as i64).sum(),
        sum_radii: vortices.iter().map(|v| v.radius).sum(),
        vortices,
        unassigned_degree,
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ClassifiedSquare {
    pub center: [f64; 2],
    pub energy: f64,
    pub good: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SquareClassification {
    /// Half side of the squares.
    pub delta: f64,
    /// Reference energy per square, `Omega |K_j| ln(1/(eps sqrt(Omega)))`.
    pub reference: f64,
    pub threshold: f64,
    pub squares: Vec<ClassifiedSquare>,
    pub n_good: usize,
    pub n_bad: usize,
    pub bad_over_good: f64,
    /// Set when `v` vanishes identically and the report is vacuous.
    pub degenerate: bool,
}

/// Half side `(1/2) (|ln eps| / Omega)^(1/4)` of the classification squares.
pub fn square_half_side(p: &PhysicalParams) -> f64 {
    0.5 * (p.epsilon.ln().abs() / p.omega).powf(0.25)
}

/// Good/bad squares of side `2 delta` centred on `2 delta Z^2` inside
/// `U = {|x|_Lambda~ < u_radius}`.
pub fn classify_squares(
    v: &ComplexField,
    p: &PhysicalParams,
    d: &DerivedParams,
    sol: &ProfileSolution,
    g_eps: f64,
    u_radius: f64,
) -> Result<SquareClassification> {
    if p.omega <= 0.0 {
        return Err(Error::RegimeViolation("square classification needs rotation".into()));
    }
    let g = &v.grid;
    if *g != sol.eta.grid {
        return Err(Error::GridMismatch);
    }
    let delta = square_half_side(p);
    let log = (1.0 / (p.epsilon * p.omega.sqrt())).ln();
    let reference = p.omega * 4.0 * delta * delta * log;
    let threshold = (1.0 + g_eps.sqrt()) * reference;
    let degenerate = v.values.iter().all(|z| z.norm() == 0.0);

    let kin = covariant_kinetic_density(v, p.omega);
    let side = 2.0 * delta;
    let kmax = (u_radius / side).ceil() as i64 + 1;
    let inside = |x: [f64; 2]| d.elliptic_radius(x) < u_radius;
    let h2 = g.cell_area();
    let mut squares = Vec::new();
    for qj in -kmax..=kmax {
        for qi in -kmax..=kmax {
            let c = [qi as f64 * side, qj as f64 * side];
            let corners = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];
            if !corners.iter().all(|s| inside([c[0] + s[0] * delta, c[1] + s[1] * delta])) {
                continue;
            }
            let w = sol.eta.sample(c)?.powi(2);
            let q = 0.5 * w / (p.epsilon * p.epsilon);
            let mut e = 0.0;
            let mut cells = 0;
            for (k, x) in g.points().enumerate() {
                if (x[0] - c[0]).abs() < delta && (x[1] - c[1]).abs() < delta {
                    e += kin.values[k] + q * (1.0 - v.values[k].norm_sqr()).powi(2);
                    cells += 1;
                }
            }
            if cells == 0 {
                continue;
            }
            e *= h2;
            squares.push(ClassifiedSquare { center: c, energy: e, good: degenerate || e <= threshold });
        }
    }
    if squares.is_empty() {
        return Err(Error::EmptyRegion("no classification square fits inside U".into()));
    }
    let n_good = squares.iter().filter(|s| s.good).count();
    let n_bad = squares.len() - n_good;
    Ok(SquareClassification {
        delta,
        reference,
        threshold,
        bad_over_good: if n_good > 0 { n_bad as f64 / n_good as f64 } else { f64::INFINITY },
        squares,
        n_good,
        n_bad,
        degenerate,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DensityBox {
    pub center: [f64; 2],
    pub degree: i64,
    /// Degree per `Omega` times area.
    pub density: f64,
    /// `2 pi` times `density`, i.e. normalised by `Omega / 2 pi`.
    pub density_2pi: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VorticityMeasure {
    pub atoms: Vec<([f64; 2], i32)>,
    pub total_weight: i64,
    pub box_size: f64,
    pub boxes: Vec<DensityBox>,
    pub mean_density: f64,
    pub mean_density_2pi: f64,
    /// Coefficient of variation of the box densities.
    pub cv: f64,
}

/// Box-averaged degree density of the vortices in `U`, with boxes of side
/// `box_size` centred on `box_size Z^2` and fully inside `U`.
pub fn vorticity_density_report<U: Fn([f64; 2]) -> bool>(
    vs: &VortexSet,
    region: U,
    omega: f64,
    box_size: f64,
) -> Result<VorticityMeasure> {
    if !(omega > 0.0 && box_size > 0.0) {
        return Err(Error::Config("density report needs positive omega and box size".into()));
    }
    let atoms: Vec<([f64; 2], i32)> =
        vs.vortices.iter().filter(|v| v.degree != 0 && region(v.center)).map(|v| (v.center, v.degree)).collect();
    let half = 0.5 * box_size;
    let mut boxes = Vec::new();
    let mut k = 0i64;
    loop {
        // grow rings of boxes until a full ring misses U
        let mut any = false;
        for qj in -k..=k {
            for qi in -k..=k {
                if qi.abs().max(qj.abs()) != k {
                    continue;
                }
                let c = [qi as f64 * box_size, qj as f64 * box_size];
                let corners = [[-half, -half], [half, -half], [half, half], [-half, half]];
                if !corners.iter().all(|s| region([c[0] + s[0], c[1] + s[1]])) {
                    continue;
                }
                any = true;
                let degree: i64 = atoms
                    .iter()
                    .filter(|(a, _)| (a[0] - c[0]).abs() < half && (a[1] - c[1]).abs() < half)
                    .map(|(_, d)| *d as i64)
                    .sum();
                let density = degree as f64 / (omega * box_size * box_size);
                boxes.push(DensityBox { center: c, degree, density, density_2pi: 2.0 * PI * density });
            }
        }
        if !any && k > 0 {
            break;
        }
        k += 1;
        if k > 100_000 {
            break;
        }
    }
    if boxes.is_empty() {
        return Err(Error::EmptyRegion("no density box fits inside U".into()));
    }
    let nb = boxes.len() as f64;
    let mean = boxes.iter().map(|b| b.density).sum::<f64>() / nb;
    let var = boxes.iter().map(|b| (b.density - mean).powi(2)).sum::<f64>() / nb;
    Ok(VorticityMeasure {
        total_weight: atoms.iter().map(|(_, d)| *d as i64).sum(),
        atoms,
        box_size,
        boxes,
        mean_density: mean,
        mean_density_2pi: 2.0 * PI * mean,
        cv: if mean != 0.0 { var.sqrt() / mean.abs() } else { f64::NAN },
    })
}
