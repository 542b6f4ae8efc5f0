//! Vortex-lattice building block on the unit square.
//!
//! A periodic potential `H` on the vertex lattice (plaquette centres) solves
//! `-Lap_h H + B = 2 pi delta / h^2` with one source per period, which needs
//! `B (m h)^2 = 2 pi`. The phase gradient `-curl H + B A0` is integrated edge by
//! edge into unit complex numbers; every plaquette then carries circulation
//! `2 pi` at a source and `0` elsewhere. Multiplying by the cutoff
//! `rho = min(1, dist / core)` gives the lattice field.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{covariant_kinetic_density, energy_gl2d, gl2d_quartic, integrate_masked, mass, ComplexField, Grid2D, ScalarField};
use crate::vortex::winding_map;

/// Periodic vertex potential of one lattice period.
#[derive(Debug, Clone)]
pub struct Lattice {
    /// Vertices per period and axis.
    pub m: usize,
    pub spacing: f64,
    pub field: f64,
    /// Row-major, source at index `(0, 0)`, zero mean.
    pub h: Vec<f64>,
    pub cg_iterations: usize,
}

impl Lattice {
    pub fn solve(m: usize, spacing: f64, field: f64) -> Result<Self> {
        let flux = field * (m as f64 * spacing).powi(2);
        if m < 2 || (flux - 2.0 * PI).abs() > 1e-9 * 2.0 * PI {
            return Err(Error::SingularSystem(format!(
                "flux per period B (m h)^2 = {flux} differs from 2 pi"
            )));
        }
        let len = m * m;
        let mut b = vec![-field * spacing * spacing; len];
        b[0] += 2.0 * PI;
        remove_mean(&mut b);
        let apply = |x: &[f64], y: &mut [f64]| {
            for j in 0..m {
                let jp = (j + 1) % m;
                let jm = (j + m - 1) % m;
                for i in 0..m {
                    let ip = (i + 1) % m;
                    let im = (i + m - 1) % m;
                    y[j * m + i] = 4.0 * x[j * m + i] - x[j * m + ip] - x[j * m + im] - x[jp * m + i] - x[jm * m + i];
                }
            }
        };
        let mut x = vec![0.0; len];
        let mut r = b.clone();
        let mut p = r.clone();
        let mut ap = vec![0.0; len];
        let bn = dot(&b, &b).sqrt();
        let mut rr = dot(&r, &r);
        let mut it = 0;
        while rr.sqrt() > 1e-12 * bn {
            if it > 20 * len {
                return Err(Error::NoConvergence { iterations: it, residual: rr.sqrt() / bn });
            }
            apply(&p, &mut ap);
            let alpha = rr / dot(&p, &ap);
            for k in 0..len {
                x[k] += alpha * p[k];
                r[k] -= alpha * ap[k];
            }
            remove_mean(&mut r);
            let rr_new = dot(&r, &r);
            let beta = rr_new / rr;
            for k in 0..len {
                p[k] = r[k] + beta * p[k];
            }
            rr = rr_new;
            it += 1;
        }
        remove_mean(&mut x);
        Ok(Self { m, spacing, field, h: x, cg_iterations: it })
    }

    #[inline]
    fn at(&self, a: i64, b: i64) -> f64 {
        let m = self.m as i64;
        self.h[(b.rem_euclid(m) * m + a.rem_euclid(m)) as usize]
    }

    /// Unit phase field on `nx * ny` nodes; node `(i, j)` sits at
    /// `origin + (i, j) h`, and vertex `a` (between nodes `a - 1` and `a`)
    /// maps to potential index `a - offset`.
    pub fn phase(&self, origin: [f64; 2], nx: usize, ny: usize, offset: [i64; 2]) -> Vec<Complex64> {
        let h = self.spacing;
        let bh = 0.5 * self.field * h;
        let hv = |a: usize, b: usize| self.at(a as i64 - offset[0], b as i64 - offset[1]);
        let tx = |i: usize, j: usize| hv(i + 1, j + 1) - hv(i + 1, j) - bh * (origin[1] + j as f64 * h);
        let ty = |i: usize, j: usize| -(hv(i + 1, j + 1) - hv(i, j + 1)) + bh * (origin[0] + i as f64 * h);
        let mut z = vec![Complex64::new(0.0, 0.0); nx * ny];
        z[0] = Complex64::new(1.0, 0.0);
        for i in 0..nx - 1 {
            let w = z[i] * Complex64::from_polar(1.0, tx(i, 0));
            z[i + 1] = w / w.norm();
        }
        for j in 0..ny - 1 {
            for i in 0..nx {
                let w = z[j * nx + i] * Complex64::from_polar(1.0, ty(i, j));
                z[(j + 1) * nx + i] = w / w.norm();
            }
        }
        z
    }

    /// Distance from `x` to the nearest source, sources at
    /// `center + period * Z^2`.
    pub fn nearest_distance(&self, x: [f64; 2], center: [f64; 2]) -> f64 {
        let period = self.m as f64 * self.spacing;
        let d = |t: f64| {
            let s = t / period;
            (s - s.round()).abs() * period
        };
        d(x[0] - center[0]).hypot(d(x[1] - center[1]))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn remove_mean(x: &mut [f64]) {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter_mut().for_each(|v| *v -= mean);
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CellProblem {
    pub h_ex: f64,
    pub eps_cell: f64,
    /// Vortices per side, the largest `N` with `N <= sqrt(h_ex / 2 pi)`.
    pub n_lattice: usize,
    /// Nodes per subcell side; even.
    pub m: usize,
    pub grid: Grid2D,
}

impl CellProblem {
    pub fn new(h_ex: f64, eps_cell: f64, m: usize) -> Result<Self> {
        let n_lattice = (h_ex / (2.0 * PI)).sqrt().floor() as usize;
        if n_lattice == 0 {
            return Err(Error::RegimeViolation(format!("h_ex = {h_ex} < 2 pi leaves no vortex in the cell")));
        }
        if !(eps_cell > 0.0 && eps_cell < 0.5 / n_lattice as f64) {
            return Err(Error::ResolutionError(format!(
                "core radius {eps_cell} does not fit a subcell of side 1/{n_lattice}"
            )));
        }
        if m < 4 || m % 2 != 0 {
            return Err(Error::Config(format!("points per subcell m = {m} must be even and >= 4")));
        }
        let grid = Grid2D::new(n_lattice * m, 0.5)?;
        Ok(Self { h_ex, eps_cell, n_lattice, m, grid })
    }

    /// Resolution with spacing at most `eps_cell / 4`.
    pub fn resolved(h_ex: f64, eps_cell: f64) -> Result<Self> {
        let n = ((h_ex / (2.0 * PI)).sqrt().floor() as usize).max(1);
        let m = (4.0 / (n as f64 * eps_cell)).ceil() as usize;
        Self::new(h_ex, eps_cell, m + m % 2)
    }

    /// Field used inside the cell solve, `2 pi N^2`.
    pub fn h_cell(&self) -> f64 {
        2.0 * PI * (self.n_lattice * self.n_lattice) as f64
    }

    pub fn vortex_centers(&self) -> Vec<[f64; 2]> {
        let n = self.n_lattice;
        let s = 1.0 / n as f64;
        (0..n)
            .flat_map(|q| (0..n).map(move |p| [-0.5 + (p as f64 + 0.5) * s, -0.5 + (q as f64 + 0.5) * s]))
            .collect()
    }
}

/// The cell potential on the subcell around its centred source, sampled on
/// the vertex lattice (the source is node `(m/2 - 1, m/2 - 1)`).
pub fn solve_cell_h(cp: &CellProblem) -> Result<ScalarField> {
    let lat = Lattice::solve(cp.m, cp.grid.spacing(), cp.h_cell())?;
    Ok(lattice_to_field(&lat, cp))
}

fn lattice_to_field(lat: &Lattice, cp: &CellProblem) -> ScalarField {
    let m = cp.m;
    let side = 1.0 / cp.n_lattice as f64;
    let a0 = cp.vortex_centers()[0];
    let h = lat.spacing;
    let grid = Grid2D::centered(m, 0.5 * side, [a0[0] + 0.5 * h, a0[1] + 0.5 * h]).expect("valid subcell grid");
    let c = m as i64 / 2 - 1;
    let values = (0..m)
        .flat_map(|j| (0..m).map(move |i| (i, j)))
        .map(|(i, j)| lat.at(i as i64 - c, j as i64 - c))
        .collect();
    ScalarField { grid, values }
}

#[derive(Debug, Clone)]
pub struct CellSolution {
    pub problem: CellProblem,
    pub h_field: ScalarField,
    pub f: ComplexField,
    pub vortex_centers: Vec<[f64; 2]>,
    pub mass: f64,
    /// `E2D` with unit quartic coefficient divided by `N^2`.
    pub energy_per_cell: f64,
    pub subcell_windings: Vec<i32>,
    /// Largest seam mismatch of the magnetic-periodic extension.
    pub seam_mismatch: f64,
}

/// Builds the lattice field on the unit square.
pub fn build_f(cp: &CellProblem) -> Result<CellSolution> {
    let lat = Lattice::solve(cp.m, cp.grid.spacing(), cp.h_cell())?;
    let g = cp.grid;
    let n = g.n;
    let origin = [g.coord(0, 0), g.coord(0, 1)];
    let off = [cp.m as i64 / 2, cp.m as i64 / 2];
    // one extra period to the right for the seam check
    let ext = lattice_field(&lat, origin, 2 * n, n, off, cp.eps_cell, [-0.5 + 0.5 / cp.n_lattice as f64; 2]);
    let mut values = Vec::with_capacity(n * n);
    for j in 0..n {
        values.extend_from_slice(&ext[j * 2 * n..j * 2 * n + n]);
    }
    let f = ComplexField { grid: g, values };

    let mut num = Complex64::new(0.0, 0.0);
    for j in 0..n {
        let y = g.coord(j, 1);
        for i in 0..n {
            let shifted = Complex64::from_polar(1.0, 0.5 * lat.field * y) * f.values[j * n + i];
            num += ext[j * 2 * n + i + n] * shifted.conj();
        }
    }
    let c = num / num.norm();
    let mut seam: f64 = 0.0;
    for j in 0..n {
        let y = g.coord(j, 1);
        for i in 0..n {
            let expect = c * Complex64::from_polar(1.0, 0.5 * lat.field * y) * f.values[j * n + i];
            seam = seam.max((ext[j * 2 * n + i + n] - expect).norm());
        }
    }

    let wm = winding_map(&f);
    let nl = cp.n_lattice;
    let mut subcell_windings = vec![0i32; nl * nl];
    for pj in 0..n - 1 {
        for pi in 0..n - 1 {
            // plaquette centre is vertex (pi + 1, pj + 1)
            let (a, b) = (pi + 1, pj + 1);
            if a % cp.m == 0 || b % cp.m == 0 {
                continue;
            }
            subcell_windings[(b / cp.m) * nl + a / cp.m] += wm.get(pi, pj);
        }
    }
    if let Some((index, &degree)) = subcell_windings.iter().enumerate().find(|(_, &w)| w != 1) {
        return Err(Error::WindingMismatch { index, degree });
    }

    let mass = mass(&f, None)?;
    let energy = energy_gl2d(&f, 1.0, cp.h_ex, cp.eps_cell)?;
    Ok(CellSolution {
        problem: *cp,
        h_field: lattice_to_field(&lat, cp),
        f,
        vortex_centers: cp.vortex_centers(),
        mass,
        energy_per_cell: energy / (nl * nl) as f64,
        subcell_windings,
        seam_mismatch: seam,
    })
}

/// `rho * e^{i phi}` on an `nx * ny` block of nodes starting at `origin`.
pub fn lattice_field(
    lat: &Lattice,
    origin: [f64; 2],
    nx: usize,
    ny: usize,
    offset: [i64; 2],
    core: f64,
    source: [f64; 2],
) -> Vec<Complex64> {
    let mut z = lat.phase(origin, nx, ny, offset);
    let h = lat.spacing;
    for j in 0..ny {
        for i in 0..nx {
            let x = [origin[0] + i as f64 * h, origin[1] + j as f64 * h];
            let rho = (lat.nearest_distance(x, source) / core).min(1.0);
            let w = &mut z[j * nx + i];
            *w *= rho;
            // rounding in the unit phase can leave |w| one ulp above 1
            while w.norm() > 1.0 {
                *w *= 1.0 - f64::EPSILON;
            }
        }
    }
    z
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CellMetrics {
    pub h_ex: f64,
    pub h_cell: f64,
    pub n_lattice: usize,
    pub eps_cell: f64,
    pub energy: f64,
    pub target: f64,
    pub ratio: f64,
    pub per_vortex: f64,
    pub per_vortex_target: f64,
    pub mass: f64,
    pub mass_deficit: f64,
    /// `N^2 pi eps^2 / 2`, the deficit of the cutoff cores.
    pub core_deficit: f64,
    /// Quartic term at `2 lambda` over the one at `lambda`.
    pub quartic_ratio: f64,
    /// `N^2 E(K_0) / E(K)` with `K_0` the first subcell.
    pub additivity: f64,
    pub seam_mismatch: f64,
}

pub fn cell_metrics(cs: &CellSolution, lambda_coef: f64) -> Result<CellMetrics> {
    let cp = &cs.problem;
    let eps = cp.eps_cell;
    let energy = energy_gl2d(&cs.f, lambda_coef, cp.h_ex, eps)?;
    let log = (1.0 / (eps * cp.h_ex.sqrt())).ln();
    let target = cp.h_ex * log;
    let nl = cp.n_lattice;
    let q1 = gl2d_quartic(&cs.f, lambda_coef, eps);
    let q2 = gl2d_quartic(&cs.f, 2.0 * lambda_coef, eps);

    let g = &cs.f.grid;
    let mut dens = covariant_kinetic_density(&cs.f, cp.h_ex);
    let c = 0.5 * lambda_coef / (eps * eps);
    for (d, z) in dens.values.iter_mut().zip(&cs.f.values) {
        *d += c * (1.0 - z.norm_sqr()).powi(2);
    }
    let side = 1.0 / nl as f64;
    // subcell away from the box edge when there is one
    let (p0, q0) = (nl / 2, nl / 2);
    let lo = [-0.5 + p0 as f64 * side, -0.5 + q0 as f64 * side];
    let mask = g.mask(|x| x[0] > lo[0] && x[0] < lo[0] + side && x[1] > lo[1] && x[1] < lo[1] + side);
    let sub = integrate_masked(&dens, &mask);

    Ok(CellMetrics {
        h_ex: cp.h_ex,
        h_cell: cp.h_cell(),
        n_lattice: nl,
        eps_cell: eps,
        energy,
        target,
        ratio: energy / target,
        per_vortex: energy / (nl * nl) as f64,
        per_vortex_target: 2.0 * PI * log,
        mass: cs.mass,
        mass_deficit: 1.0 - cs.mass,
        core_deficit: (nl * nl) as f64 * PI * eps * eps / 2.0,
        quartic_ratio: q2 / q1,
        additivity: (nl * nl) as f64 * sub / energy,
        seam_mismatch: cs.seam_mismatch,
    })
}
