//! Global trial state: a flux-matched vortex lattice times a smooth cutoff,
//! normalised in the weighted mass.
//!
//! The lattice has period `s = sqrt(2 pi / Omega)` (one vortex per flux
//! quantum), vortices on `s Z^2`, core radius `eps`. In the rescaled variable
//! `y = l sqrt(Omega) x` this is the unit-cell construction with field
//! `h_ex = 1 / l^2` and core `eps l sqrt(Omega)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::cell::{lattice_field, Lattice};
use crate::error::{Error, Result};
use crate::field::{energy_g, g_density, integrate_masked, mass, ComplexField, Grid2D};
use crate::params::{DerivedParams, PhysicalParams};
use crate::profile::ProfileSolution;
use crate::vortex::winding_map;

/// Geometry of the flux-matched lattice on a grid.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LatticeGeometry {
    pub period: f64,
    /// Nodes per period.
    pub m: usize,
    pub spacing: f64,
}

impl LatticeGeometry {
    pub fn new(p: &PhysicalParams) -> Result<Self> {
        if p.omega <= 0.0 {
            return Err(Error::RegimeViolation("the vortex lattice needs omega > 0".into()));
        }
        let period = (2.0 * PI / p.omega).sqrt();
        let m = (period / (0.25 * p.epsilon)).ceil() as usize;
        Ok(Self { period, m, spacing: period / m as f64 })
    }
}

/// Grid aligned with the lattice: spacing `s / m <= eps / 4`, a vertex at the
/// origin, and half extent at least `min_half_extent`.
pub fn trial_grid(p: &PhysicalParams, min_half_extent: f64) -> Result<Grid2D> {
    let geo = LatticeGeometry::new(p)?;
    let half_nodes = (min_half_extent / geo.spacing).ceil() as usize;
    Grid2D::with_spacing(2 * half_nodes.max(2), geo.spacing)
}

/// Half extent `sqrt(alpha) + 3 eps^(1/3)`, past which the profile is
/// negligible; smaller than `2L`, so the outer cutoff band is truncated.
pub fn compact_half_extent(p: &PhysicalParams, d: &DerivedParams) -> f64 {
    d.alpha_eo.sqrt() + 3.0 * p.epsilon.cbrt()
}

/// Default cutoff parameters `delta = 0.1 sqrt(alpha)`, `L = 1.5 sqrt(alpha)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TrialOptions {
    pub delta: f64,
    pub l_cut: f64,
    /// Lattice translation in grid nodes; a vortex sits at `shift * h`.
    pub shift: [i64; 2],
}

impl TrialOptions {
    pub fn defaults(d: &DerivedParams) -> Self {
        let r = d.alpha_eo.sqrt();
        Self { delta: 0.1 * r, l_cut: 1.5 * r, shift: [0, 0] }
    }
}

/// `C^2` cutoff in the elliptic radius: 1 up to `L`, 0 from `2L`.
pub fn chi(r: f64, l_cut: f64) -> f64 {
    let t = ((r - l_cut) / l_cut).clamp(0.0, 1.0);
    1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
}

#[derive(Debug, Clone)]
pub struct TrialState {
    pub v: ComplexField,
    /// `int eta^2 |chi f|^2` before normalisation.
    pub raw_mass: f64,
    pub l_cut: f64,
    pub delta: f64,
    pub chi_width: f64,
    pub geometry: LatticeGeometry,
    /// Energy split over the radial bands.
    pub split: [f64; 4],
    pub energy: f64,
}

/// Checks the admissibility of `delta` and `L`.
pub fn check_cutoffs(p: &PhysicalParams, opts: &TrialOptions) -> Result<()> {
    let mm = p.m_cap * p.m_cap;
    let l_min = (p.a0 * (1.0 - mm / 4.0).powf(-0.25)).sqrt();
    let d_max = (p.a0 * (1.0 - mm / (4.0 * p.lambda * p.lambda))).sqrt().min(0.5 * opts.l_cut);
    if opts.l_cut <= l_min {
        return Err(Error::RegimeViolation(format!("cutoff radius {} <= {l_min}", opts.l_cut)));
    }
    if !(opts.delta > 0.0 && opts.delta < d_max) {
        return Err(Error::RegimeViolation(format!("band width {} not in (0, {d_max})", opts.delta)));
    }
    Ok(())
}

/// Builds the trial state on the profile's grid, which must come from
/// [`trial_grid`].
pub fn build_trial(
    p: &PhysicalParams,
    d: &DerivedParams,
    sol: &ProfileSolution,
    opts: &TrialOptions,
) -> Result<TrialState> {
    p.validate()?;
    check_cutoffs(p, opts)?;
    let geo = LatticeGeometry::new(p)?;
    let grid = sol.eta.grid;
    let h = grid.spacing();
    let aligned = ((h - geo.spacing) / geo.spacing).abs() < 1e-9 && grid.center == [0.0, 0.0];
    if !aligned {
        return Err(Error::ResolutionError(format!(
            "grid spacing {h} is not the lattice spacing {} (use trial_grid)",
            geo.spacing
        )));
    }
    let tail = sol.eta.to_complex().boundary_max(3) / sol.eta.max();
    if tail > 1e-6 {
        return Err(Error::ResolutionError(format!("profile is {tail:.1e} of its maximum at the box boundary")));
    }
    let lat = Lattice::solve(geo.m, h, p.omega)?;
    assemble(&lat, geo, p, d, sol, opts)
}

fn assemble(
    lat: &Lattice,
    geo: LatticeGeometry,
    p: &PhysicalParams,
    d: &DerivedParams,
    sol: &ProfileSolution,
    opts: &TrialOptions,
) -> Result<TrialState> {
    let grid = sol.eta.grid;
    let h = grid.spacing();
    let n = grid.n;
    let origin = [grid.coord(0, 0), grid.coord(0, 1)];
    let half = n as i64 / 2;
    let offset = [half + opts.shift[0], half + opts.shift[1]];
    let source = [opts.shift[0] as f64 * h, opts.shift[1] as f64 * h];
    let mut values = lattice_field(lat, origin, n, n, offset, p.epsilon, source);
    for (z, x) in values.iter_mut().zip(grid.points()) {
        *z *= chi(d.elliptic_radius(x), opts.l_cut);
    }
    let raw = ComplexField { grid, values };
    let raw_mass = mass(&raw, Some(&sol.eta))?;
    let v = raw.scaled(Complex64::new(1.0 / raw_mass.sqrt(), 0.0));
    let energy = energy_g(&v, &sol.eta, p)?;
    let split = band_split(&v, p, d, sol, opts)?;
    Ok(TrialState {
        v,
        raw_mass,
        l_cut: opts.l_cut,
        delta: opts.delta,
        chi_width: opts.l_cut,
        geometry: geo,
        split,
        energy,
    })
}

/// Trial energies over `k * k` lattice translations spread uniformly over
/// one period. Every translate is admissible, so the mean is an upper bound
/// of the ground state energy that does not depend on how the few lattice
/// sites happen to sample the profile.
#[derive(Debug, Clone, Serialize)]
pub struct RegistrationAverage {
    pub shifts: Vec<[i64; 2]>,
    pub energies: Vec<f64>,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub ratio_mean: f64,
    pub ratio_min: f64,
    pub ratio_max: f64,
}

pub fn registration_average(
    p: &PhysicalParams,
    d: &DerivedParams,
    sol: &ProfileSolution,
    opts: &TrialOptions,
    k: usize,
) -> Result<RegistrationAverage> {
    // validates the grid and cutoffs once
    build_trial(p, d, sol, opts)?;
    let geo = LatticeGeometry::new(p)?;
    let lat = Lattice::solve(geo.m, sol.eta.grid.spacing(), p.omega)?;
    let k = k.max(1);
    let m = geo.m as i64;
    let shifts: Vec<[i64; 2]> = (0..k * k)
        .map(|t| {
            let step = |a: usize| (a as i64 * m + k as i64 / 2) / k as i64;
            [step(t % k), step(t / k)]
        })
        .collect();
    let energies = shifts
        .par_iter()
        .map(|&shift| assemble(&lat, geo, p, d, sol, &TrialOptions { shift, ..*opts }).map(|t| t.energy))
        .collect::<Result<Vec<f64>>>()?;
    let mean = energies.iter().sum::<f64>() / energies.len() as f64;
    let min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let max = energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let target = p.omega * (1.0 / (p.epsilon * p.omega.sqrt())).ln();
    Ok(RegistrationAverage {
        shifts,
        energies,
        mean,
        min,
        max,
        ratio_mean: mean / target,
        ratio_min: min / target,
        ratio_max: max / target,
    })
}

/// Energy of `v` over `{r <= sqrt(a)-delta}`, `{|r - sqrt(a)| < delta}`,
/// `{sqrt(a)+delta <= r < 2L}` and `{r >= 2L}` in the elliptic radius.
pub fn band_split(
    v: &ComplexField,
    p: &PhysicalParams,
    d: &DerivedParams,
    sol: &ProfileSolution,
    opts: &TrialOptions,
) -> Result<[f64; 4]> {
    let dens = g_density(v, &sol.eta, p)?;
    let ra = d.alpha_eo.sqrt();
    let band = |x: [f64; 2]| {
        let r = d.elliptic_radius(x);
        if r <= ra - opts.delta {
            0
        } else if r < ra + opts.delta {
            1
        } else if r < 2.0 * opts.l_cut {
            2
        } else {
            3
        }
    };
    let bands: Vec<usize> = v.grid.points().map(band).collect();
    let mut out = [0.0; 4];
    for (k, o) in out.iter_mut().enumerate() {
        let mask: Vec<bool> = bands.iter().map(|&b| b == k).collect();
        *o = integrate_masked(&dens, &mask);
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct UpperBoundReport {
    pub energy: f64,
    /// `Omega ln(1/(eps sqrt(Omega)))`.
    pub target: f64,
    pub ratio: f64,
    /// Energy over `2 Omega ln(1/(eps sqrt(Omega)))`.
    pub ratio_2omega: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "C2")]
    pub c2: f64,
    #[serde(rename = "C3")]
    pub c3: f64,
    #[serde(rename = "C4")]
    pub c4: f64,
    pub raw_mass: f64,
    pub mass_deficit: f64,
    pub vortex_count: i64,
    /// `Omega / 2 pi` times the area of `{|x| <= L}`.
    pub expected_count: f64,
    pub eps_tilde: f64,
    pub h_ex: f64,
    pub n_lattice: usize,
    pub h_cell: f64,
    pub period: f64,
}

pub fn upper_bound_report(
    ts: &TrialState,
    p: &PhysicalParams,
    d: &DerivedParams,
    sol: &ProfileSolution,
) -> Result<UpperBoundReport> {
    if p.omega <= 0.0 {
        return Err(Error::RegimeViolation("the upper bound needs omega > 0".into()));
    }
    if ts.v.grid != sol.eta.grid {
        return Err(Error::GridMismatch);
    }
    let energy = ts.energy;
    let target = p.omega * (1.0 / (p.epsilon * p.omega.sqrt())).ln();
    let wm = winding_map(&ts.v);
    let g = &ts.v.grid;
    let h = g.spacing();
    let mut count = 0i64;
    for j in 0..wm.n {
        for i in 0..wm.n {
            let c = [g.coord(i, 0) + 0.5 * h, g.coord(j, 1) + 0.5 * h];
            if d.elliptic_radius(c) <= ts.l_cut {
                count += wm.get(i, j) as i64;
            }
        }
    }
    let area = PI * ts.l_cut * ts.l_cut / d.lambda_eo;
    let n_lattice = ((d.h_ex / (2.0 * PI)).sqrt().floor() as usize).max(1);
    Ok(UpperBoundReport {
        energy,
        target,
        ratio: energy / target,
        ratio_2omega: energy / (2.0 * target),
        c1: ts.split[0],
        c2: ts.split[1],
        c3: ts.split[2],
        c4: ts.split[3],
        raw_mass: ts.raw_mass,
        mass_deficit: 1.0 - ts.raw_mass,
        vortex_count: count,
        expected_count: area * p.omega / (2.0 * PI),
        eps_tilde: p.epsilon * d.ell * p.omega.sqrt(),
        h_ex: d.h_ex,
        n_lattice,
        h_cell: 2.0 * PI * (n_lattice * n_lattice) as f64,
        period: ts.geometry.period,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::derive_params;
    use crate::profile::solve_profile;

    #[test]
    fn cutoff_values() {
        assert_eq!(chi(0.0, 1.0), 1.0);
        assert_eq!(chi(1.0, 1.0), 1.0);
        assert_eq!(chi(2.0, 1.0), 0.0);
        assert_eq!(chi(3.0, 1.0), 0.0);
        assert!((chi(1.5, 1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn small_trial_state() {
        let p = PhysicalParams::isotropic(0.1, 8.0);
        let d = derive_params(&p).unwrap();
        let opts = TrialOptions::defaults(&d);
        let grid = trial_grid(&p, 2.0 * opts.l_cut).unwrap();
        let sol = solve_profile(&p, &grid, 1e-8).unwrap();
        let ts = build_trial(&p, &d, &sol, &opts).unwrap();
        assert!((mass(&ts.v, Some(&sol.eta)).unwrap() - 1.0).abs() < 1e-10);
        assert!(1.0 - ts.raw_mass <= 10.0 * p.epsilon * p.epsilon * p.omega);
        let total: f64 = ts.split.iter().sum();
        assert!((total - ts.energy).abs() < 1e-9 * ts.energy);
        let rep = upper_bound_report(&ts, &p, &d, &sol).unwrap();
        assert!((rep.vortex_count as f64 - rep.expected_count).abs() <= 0.1 * rep.expected_count + 2.0);

        let mut other = p;
        other.omega = 0.0;
        assert!(matches!(upper_bound_report(&ts, &other, &d, &sol), Err(Error::RegimeViolation(_))));
    }

    #[test]
    fn registration_average_brackets_translates() {
        let p = PhysicalParams::isotropic(0.1, 8.0);
        let d = derive_params(&p).unwrap();
        let opts = TrialOptions::defaults(&d);
        let grid = trial_grid(&p, 2.0 * opts.l_cut).unwrap();
        let sol = solve_profile(&p, &grid, 1e-8).unwrap();
        let avg = registration_average(&p, &d, &sol, &opts, 2).unwrap();
        assert_eq!(avg.shifts[0], [0, 0]);
        assert_eq!(avg.energies.len(), 4);
        let canonical = build_trial(&p, &d, &sol, &opts).unwrap().energy;
        assert!((avg.energies[0] - canonical).abs() < 1e-12 * canonical);
        assert!(avg.min <= avg.mean && avg.mean <= avg.max);
    }

    #[test]
    fn misaligned_grid_is_rejected() {
        let p = PhysicalParams::isotropic(0.1, 8.0);
        let d = derive_params(&p).unwrap();
        let sol = solve_profile(&p, &Grid2D::new(128, 3.0).unwrap(), 1e-8).unwrap();
        assert!(matches!(build_trial(&p, &d, &sol, &TrialOptions::defaults(&d)), Err(Error::ResolutionError(_))));
    }
}
