//! Minimization of the weighted functional `G` under `int eta^2 |v|^2 = 1`,
//! the resulting estimate of `C_0`, and the per-square lower-bound audit.

use std::f64::consts::PI;
use std::path::PathBuf;

use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::dump::load_complex;
use crate::field::neumann::NeumannSolver;
use crate::field::{energy_e_real, energy_f, energy_g, g_density, g_gradient, ComplexField};
use crate::optim::{minimize_on_sphere, Sphere, SphereOptions};
use crate::params::{trap_profile, DerivedParams, PhysicalParams, TrapKind};
use crate::profile::ProfileSolution;
use crate::trial::{build_trial, TrialOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitMode {
    /// Start from the trial lattice state.
    Warm,
    /// Start from vortices at random positions in the bulk.
    Cold,
    /// Start from a dumped field, given by its path stem.
    File(PathBuf),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct MinimizeConfig {
    pub max_iters: usize,
    /// Target for the Euler-Lagrange residual in L2.
    pub tol: f64,
    pub step: f64,
    pub init: InitMode,
    pub seed: u64,
    /// Stop after this many steps without residual improvement.
    pub patience: usize,
}

impl Default for MinimizeConfig {
    fn default() -> Self {
        Self { max_iters: 4000, tol: 1e-3, step: 0.5, init: InitMode::Warm, seed: 0, patience: 500 }
    }
}

#[derive(Debug, Clone)]
pub struct MinimizeResult {
    pub v: ComplexField,
    pub energy: f64,
    /// Multiplier of the full problem, `k_G + k_eps`.
    pub lagrange: f64,
    /// Multiplier of the weighted constraint alone.
    pub g_multiplier: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub history: Vec<f64>,
    /// Energy of the initial state.
    pub initial_energy: f64,
}

impl MinimizeResult {
    pub fn require_converged(&self) -> Result<()> {
        if self.converged {
            Ok(())
        } else {
            Err(Error::NotConverged(self.residual))
        }
    }
}

/// Initial state for the given mode.
pub fn initial_state(
    p: &PhysicalParams,
    d: &DerivedParams,
    sol: &ProfileSolution,
    cfg: &MinimizeConfig,
) -> Result<ComplexField> {
    let grid = sol.eta.grid;
    match &cfg.init {
        InitMode::Warm => {
            if p.omega <= 0.0 {
                return Ok(ComplexField::constant(grid, Complex64::new(1.0, 0.0)));
            }
            Ok(build_trial(p, d, sol, &TrialOptions::defaults(d))?.v)
        }
        InitMode::Cold => Ok(random_vortices(p, d, sol, cfg.seed)),
        InitMode::File(stem) => {
            let (v, _) = load_complex(stem)?;
            if v.grid != grid {
                return Err(Error::GridMismatch);
            }
            Ok(v)
        }
    }
}

/// `Omega / 2 pi` times the bulk area of unit vortices at uniform random
/// positions in the bulk, cores of radius `eps`.
pub fn random_vortices(p: &PhysicalParams, d: &DerivedParams, sol: &ProfileSolution, seed: u64) -> ComplexField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = d.alpha_eo.sqrt();
    let count = (p.omega / (2.0 * PI) * PI * r * r / d.lambda_eo).round() as usize;
    let mut centers = Vec::with_capacity(count);
    while centers.len() < count {
        let x = [r * (2.0 * rng.random::<f64>() - 1.0), r / d.lambda_eo * (2.0 * rng.random::<f64>() - 1.0)];
        if d.elliptic_radius(x) < r {
            centers.push(x);
        }
    }
    ComplexField::from_fn(sol.eta.grid, |x| {
        let mut z = Complex64::new(1.0, 0.0);
        for c in &centers {
            let w = Complex64::new(x[0] - c[0], x[1] - c[1]);
            let n = w.norm();
            if n > 0.0 {
                z *= w / n * (n / p.epsilon).min(1.0);
            } else {
                z = Complex64::new(0.0, 0.0);
            }
        }
        z
    })
}

/// Minimizes `G` by preconditioned projected gradient descent. The
/// preconditioner is `S (-Lap + c)^-1 S` with `S = 1 / eta`, floored.
pub fn minimize_g(
    p: &PhysicalParams,
    d: &DerivedParams,
    sol: &ProfileSolution,
    cfg: &MinimizeConfig,
) -> Result<MinimizeResult> {
    p.validate()?;
    let grid = sol.eta.grid;
    if grid.spacing() > 0.5 * p.epsilon {
        return Err(Error::ResolutionError(format!(
            "spacing {} does not resolve eps = {}",
            grid.spacing(),
            p.epsilon
        )));
    }
    let v0 = initial_state(p, d, sol, cfg)?;
    let initial_energy = energy_g(&v0, &sol.eta, p)?;
    let len = grid.len();
    let eta2: Vec<f64> = sol.eta.values.iter().map(|e| e * e).collect();
    let floor = 1e-4 * eta2.iter().copied().fold(0.0, f64::max);
    let scale: Vec<f64> = eta2.iter().map(|w| 1.0 / w.max(floor).sqrt()).collect();
    let pre = NeumannSolver::new(grid.n, grid.spacing(), 1.0 / (p.epsilon * p.epsilon));

    let mut x0 = vec![0.0; 2 * len];
    for (k, z) in v0.values.iter().enumerate() {
        x0[k] = z.re;
        x0[len + k] = z.im;
    }
    let sphere = Sphere { weight: &eta2, cell_area: grid.cell_area() };
    let opts = SphereOptions { max_iters: cfg.max_iters, tol: cfg.tol, step: cfg.step, patience: cfg.patience };
    let mut zs = vec![Complex64::new(0.0, 0.0); len];
    let mut gz = vec![Complex64::new(0.0, 0.0); len];
    let out = minimize_on_sphere(
        &sphere,
        x0,
        &opts,
        |x, g| {
            for k in 0..len {
                zs[k] = Complex64::new(x[k], x[len + k]);
            }
            gz.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
            let e = g_gradient(&zs, &eta2, &grid, p, &mut gz);
            for k in 0..len {
                g[k] = gz[k].re;
                g[len + k] = gz[k].im;
            }
            e
        },
        |r| {
            for plane in r.chunks_mut(len) {
                plane.iter_mut().zip(&scale).for_each(|(a, s)| *a *= s);
                pre.apply(plane);
                plane.iter_mut().zip(&scale).for_each(|(a, s)| *a *= s);
            }
        },
    );
    let values = (0..len).map(|k| Complex64::new(out.x[k], out.x[len + k])).collect();
    let v = ComplexField { grid, values };
    Ok(MinimizeResult {
        energy: energy_g(&v, &sol.eta, p)?,
        v,
        lagrange: out.multiplier + sol.k_eps,
        g_multiplier: out.multiplier,
        residual: out.residual,
        iterations: out.iterations,
        converged: out.converged,
        history: out.history,
        initial_energy,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct C0Report {
    pub c0: f64,
    /// `Omega ln(1/(eps sqrt(Omega)))`.
    pub target: f64,
    pub ratio: f64,
    pub ratio_2omega: f64,
    /// `E(eta) + C_0`.
    pub gse: f64,
    pub profile_energy: f64,
    /// `|F(eta v) - E(eta) - G(v)| / F(eta v)`.
    pub decomposition_defect: f64,
    pub lagrange: f64,
    /// `|lagrange| eps / Omega`.
    pub lagrange_scaled: f64,
}

pub fn c0_estimate(p: &PhysicalParams, sol: &ProfileSolution, res: &MinimizeResult) -> Result<C0Report> {
    res.require_converged()?;
    let target = if p.omega > 0.0 { p.omega * (1.0 / (p.epsilon * p.omega.sqrt())).ln() } else { f64::NAN };
    let profile_energy = energy_e_real(&sol.eta, p)?;
    let u = res.v.times(&sol.eta)?;
    let f = energy_f(&u, p)?;
    Ok(C0Report {
        c0: res.energy,
        target,
        ratio: res.energy / target,
        ratio_2omega: res.energy / (2.0 * target),
        gse: profile_energy + res.energy,
        profile_energy,
        decomposition_defect: (f - profile_energy - res.energy).abs() / f.abs(),
        lagrange: res.lagrange,
        lagrange_scaled: if p.omega > 0.0 { res.lagrange.abs() * p.epsilon / p.omega } else { f64::NAN },
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct AuditSquare {
    pub center: [f64; 2],
    /// Integral of the `G` integrand over the square.
    pub energy: f64,
    /// `p(x_j)` at the centre.
    pub weight: f64,
    pub weight_min: f64,
    pub weight_max: f64,
    /// `p(x_j) ln(1/(eps sqrt(Omega))) / l^2`.
    pub reference: f64,
    /// `energy / reference`.
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SquareAudit {
    pub side: f64,
    pub delta: f64,
    /// Lattice offset in units of the side.
    pub registration: [f64; 2],
    pub squares: Vec<AuditSquare>,
    pub aggregate: f64,
    pub reference_sum: f64,
    /// `int_{U_delta} p`.
    pub p_integral: f64,
    /// `aggregate / (Omega ln(1/(eps sqrt(Omega))) int_{U_delta} p)`.
    pub ratio: f64,
    /// `aggregate / reference_sum`.
    pub ratio_riemann: f64,
    /// Coefficient of variation of the per-square ratios.
    pub cv: f64,
    /// Result for the lattice anchored at the origin.
    pub anchored_count: usize,
    pub anchored_ratio: f64,
}

/// Squares of side `1/(l sqrt(Omega))` inside `U_delta = {|x| <= sqrt(alpha) -
/// delta}`. The offsets `{0, 1/2}^2` are searched for the largest number of
/// squares, ties going to the origin-anchored lattice.
pub fn square_audit(
    v: &ComplexField,
    p: &PhysicalParams,
    d: &DerivedParams,
    sol: &ProfileSolution,
    delta: f64,
) -> Result<SquareAudit> {
    if p.omega <= 0.0 {
        return Err(Error::RegimeViolation("the square audit needs omega > 0".into()));
    }
    if v.grid != sol.eta.grid {
        return Err(Error::GridMismatch);
    }
    let side = d.lattice_side(p.omega);
    let radius = d.alpha_eo.sqrt() - delta;
    let log = (1.0 / (p.epsilon * p.omega.sqrt())).ln();
    let dens = g_density(v, &sol.eta, p)?;
    let g = v.grid;
    let h2 = g.cell_area();
    let pe = |x: [f64; 2]| trap_profile(x, p, d, TrapKind::PEo);
    let p_integral: f64 = g
        .points()
        .filter(|&x| d.elliptic_radius(x) <= radius)
        .map(|x| pe(x).max(0.0))
        .sum::<f64>()
        * h2;

    let build = |reg: [f64; 2]| -> Vec<AuditSquare> {
        let half = 0.5 * side;
        let kmax = (radius / side).ceil() as i64 + 1;
        let mut out = Vec::new();
        for qj in -kmax..=kmax {
            for qi in -kmax..=kmax {
                let c = [(qi as f64 + reg[0]) * side, (qj as f64 + reg[1]) * side];
                let corners = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];
                if !corners.iter().all(|s| d.elliptic_radius([c[0] + s[0] * half, c[1] + s[1] * half]) <= radius) {
                    continue;
                }
                let mut e = 0.0;
                let (mut wmin, mut wmax) = (f64::INFINITY, f64::NEG_INFINITY);
                for (k, x) in g.points().enumerate() {
                    if (x[0] - c[0]).abs() < half && (x[1] - c[1]).abs() < half {
                        e += dens.values[k];
                        let w = pe(x);
                        wmin = wmin.min(w);
                        wmax = wmax.max(w);
                    }
                }
                let w = pe(c);
                let reference = w * log / (d.ell * d.ell);
                let energy = e * h2;
                out.push(AuditSquare {
                    center: c,
                    energy,
                    weight: w,
                    weight_min: wmin,
                    weight_max: wmax,
                    reference,
                    ratio: energy / reference,
                });
            }
        }
        out
    };

    let anchored = build([0.0, 0.0]);
    let mut best = ([0.0, 0.0], anchored.clone());
    for reg in [[0.5, 0.0], [0.0, 0.5], [0.5, 0.5]] {
        let s = build(reg);
        if s.len() > best.1.len() {
            best = (reg, s);
        }
    }
    let (registration, squares) = best;
    if squares.is_empty() {
        return Err(Error::EmptyAudit);
    }
    let denom = p.omega * log * p_integral;
    let aggregate: f64 = squares.iter().map(|s| s.energy).sum();
    let reference_sum: f64 = squares.iter().map(|s| s.reference).sum();
    let anchored_sum: f64 = anchored.iter().map(|s| s.energy).sum();
    let ratios: Vec<f64> = squares.iter().map(|s| s.ratio).collect();
    Ok(SquareAudit {
        side,
        delta,
        registration,
        aggregate,
        reference_sum,
        p_integral,
        ratio: aggregate / denom,
        ratio_riemann: aggregate / reference_sum,
        cv: coefficient_of_variation(&ratios),
        anchored_count: anchored.len(),
        anchored_ratio: anchored_sum / denom,
        squares,
    })
}

pub(crate) fn coefficient_of_variation(x: &[f64]) -> f64 {
    if x.is_empty() {
        return f64::NAN;
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    var.sqrt() / mean.abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{mass, Grid2D};
    use crate::params::derive_params;
    use crate::profile::solve_profile;
    use crate::trial::trial_grid;

    #[test]
    fn no_rotation_gives_constant_phase() {
        let p = PhysicalParams::isotropic(0.1, 0.0);
        let d = derive_params(&p).unwrap();
        let sol = solve_profile(&p, &Grid2D::new(64, 1.6).unwrap(), 1e-9).unwrap();
        let res = minimize_g(&p, &d, &sol, &MinimizeConfig { tol: 1e-9, ..Default::default() }).unwrap();
        assert!(res.converged);
        assert!(res.energy < 1e-12, "{}", res.energy);
        assert!((mass(&res.v, Some(&sol.eta)).unwrap() - 1.0).abs() < 1e-10);
        assert_eq!(crate::vortex::winding_map(&res.v).total(), 0);
    }

    #[test]
    fn warm_start_lowers_trial_energy() {
        let p = PhysicalParams::isotropic(0.1, 8.0);
        let d = derive_params(&p).unwrap();
        let opts = TrialOptions::defaults(&d);
        let grid = trial_grid(&p, 2.0 * opts.l_cut).unwrap();
        let sol = solve_profile(&p, &grid, 1e-8).unwrap();
        let res = minimize_g(&p, &d, &sol, &MinimizeConfig { max_iters: 300, ..Default::default() }).unwrap();
        assert!(res.energy <= res.initial_energy);
        for w in res.history.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
        assert!((mass(&res.v, Some(&sol.eta)).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn constant_field_audit_matches_direct_quadrature() {
        let p = PhysicalParams::isotropic(0.1, 8.0);
        let d = derive_params(&p).unwrap();
        let sol = solve_profile(&p, &Grid2D::new(128, 1.6).unwrap(), 1e-8).unwrap();
        let v = ComplexField::constant(sol.eta.grid, Complex64::new(1.0, 0.0));
        let audit = square_audit(&v, &p, &d, &sol, 0.05).unwrap();
        let half = 0.5 * audit.side;
        for s in &audit.squares {
            let direct: f64 = v
                .grid
                .points()
                .enumerate()
                .filter(|(_, x)| (x[0] - s.center[0]).abs() < half && (x[1] - s.center[1]).abs() < half)
                .map(|(k, x)| sol.eta.values[k].powi(2) * p.omega * p.omega * (x[0] * x[0] + x[1] * x[1]) / 4.0)
                .sum::<f64>()
                * v.grid.cell_area();
            assert!((s.energy - direct).abs() <= 2e-3 * direct, "{} {direct}", s.energy);
        }
        assert!(matches!(square_audit(&v, &p, &d, &sol, 10.0), Err(Error::EmptyAudit)));
    }
}
