//! The mass-constrained real profile minimising `E`, its multiplier, and the
//! comparisons with the Thomas-Fermi surrogate `sqrt(p)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::neumann::NeumannSolver;
use crate::field::{
    dirichlet_gradient, energy_e_real, integrate, trap_values, ComplexField, Grid2D, ScalarField,
};
use crate::optim::{minimize_on_sphere, Sphere, SphereOptions};
use crate::params::{derive_params, trap_profile, DerivedParams, PhysicalParams, TrapKind};

#[derive(Debug, Clone)]
pub struct ProfileSolution {
    pub eta: ScalarField,
    /// Multiplier `k` in `-Lap eta = (k eps^2 + V - eta^2) eta / eps^2`.
    pub k_eps: f64,
    pub residual: f64,
    pub iterations: usize,
    pub energy: f64,
    pub tol: f64,
    pub energy_history: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ProfileSummary {
    pub k_eps: f64,
    pub residual: f64,
    pub iterations: usize,
    pub energy: f64,
}

impl ProfileSolution {
    pub fn summary(&self) -> ProfileSummary {
        ProfileSummary { k_eps: self.k_eps, residual: self.residual, iterations: self.iterations, energy: self.energy }
    }

    pub fn is_converged(&self) -> bool {
        self.residual <= self.tol
    }

    fn require_converged(&self) -> Result<()> {
        if self.is_converged() {
            Ok(())
        } else {
            Err(Error::NotConverged(self.residual))
        }
    }
}

/// `V(x) = a(x) + eps^2 omega^2 |x|^2 / 4` at the nodes.
pub fn effective_potential(grid: &Grid2D, p: &PhysicalParams) -> Vec<f64> {
    let c = 0.25 * p.eps_omega().powi(2);
    trap_values(grid, p).iter().zip(grid.points()).map(|(a, x)| a + c * (x[0] * x[0] + x[1] * x[1])).collect()
}

/// L2 gradient of `E` for a real profile, written into `grad`.
fn e_gradient(eta: &[f64], v: &[f64], grid: &Grid2D, p: &PhysicalParams, grad: &mut [f64]) -> f64 {
    grad.iter_mut().for_each(|g| *g = 0.0);
    let kin = dirichlet_gradient(eta, grid, grad);
    let inv = 1.0 / (p.epsilon * p.epsilon);
    let c = 0.25 * p.omega * p.omega;
    let mut pot = 0.0;
    for (((g, &e), &v), x) in grad.iter_mut().zip(eta).zip(v).zip(grid.points()) {
        let r2 = x[0] * x[0] + x[1] * x[1];
        let a = v - c * p.epsilon * p.epsilon * r2;
        let am = (-a).max(0.0);
        let rho = e * e;
        pot += 0.5 * inv * ((a - rho).powi(2) - am * am) - c * r2 * rho;
        *g -= 2.0 * inv * (v - rho) * e;
    }
    kin + pot * grid.cell_area()
}

/// Pointwise `-Lap_h eta - (k eps^2 + V - eta^2) eta / eps^2` in the L2 norm.
pub fn el_residual(eta: &ScalarField, p: &PhysicalParams, k: f64) -> f64 {
    let g = &eta.grid;
    let v = effective_potential(g, p);
    let mut lap = vec![0.0; g.len()];
    dirichlet_gradient(&eta.values, g, &mut lap);
    let inv = 1.0 / (p.epsilon * p.epsilon);
    let s: f64 = lap
        .iter()
        .zip(&eta.values)
        .zip(&v)
        .map(|((l, e), v)| {
            let r = 0.5 * l - inv * (k * p.epsilon * p.epsilon + v - e * e) * e;
            r * r
        })
        .sum();
    (s * g.cell_area()).sqrt()
}

/// Least-squares multiplier over `{eta > 0.1 max eta}`.
pub fn fit_multiplier(eta: &ScalarField, p: &PhysicalParams) -> f64 {
    let g = &eta.grid;
    let v = effective_potential(g, p);
    let mut lap = vec![0.0; g.len()];
    dirichlet_gradient(&eta.values, g, &mut lap);
    let cut = 0.1 * eta.max();
    let inv = 1.0 / (p.epsilon * p.epsilon);
    let (mut num, mut den) = (0.0, 0.0);
    for ((l, &e), v) in lap.iter().zip(&eta.values).zip(&v) {
        if e > cut {
            num += (0.5 * l - inv * (v - e * e) * e) * e;
            den += e * e;
        }
    }
    num / den
}

/// Thomas-Fermi seed `sqrt(p_+)` after one diffusion step.
pub fn tf_seed(grid: &Grid2D, p: &PhysicalParams, d: &DerivedParams) -> ScalarField {
    let raw = ScalarField::from_fn(*grid, |x| trap_profile(x, p, d, TrapKind::PEo).max(0.0).sqrt());
    let n = grid.n;
    let mut out = raw.clone();
    for j in 0..n {
        for i in 0..n {
            let c = raw.get(i, j);
            let nb = |di: isize, dj: isize| {
                let ii = (i as isize + di).clamp(0, n as isize - 1) as usize;
                let jj = (j as isize + dj).clamp(0, n as isize - 1) as usize;
                raw.get(ii, jj)
            };
            let s = nb(1, 0) + nb(-1, 0) + nb(0, 1) + nb(0, -1);
            out.values[grid.index(i, j)] = 0.5 * c + 0.125 * s;
        }
    }
    out
}

/// Minimises `E` over real profiles of unit mass.
pub fn solve_profile(p: &PhysicalParams, grid: &Grid2D, tol: f64) -> Result<ProfileSolution> {
    solve_profile_with(p, grid, &SphereOptions { tol, ..SphereOptions::default() })
}

pub fn solve_profile_with(p: &PhysicalParams, grid: &Grid2D, opts: &SphereOptions) -> Result<ProfileSolution> {
    p.validate()?;
    let d = derive_params(p)?;
    let v = effective_potential(grid, p);
    let seed = tf_seed(grid, p, &d);
    let ones = vec![1.0; grid.len()];
    let sphere = Sphere { weight: &ones, cell_area: grid.cell_area() };
    let shift = 2.0 * p.a0 / (p.epsilon * p.epsilon);
    let pre = NeumannSolver::new(grid.n, grid.spacing(), shift);
    let out = minimize_on_sphere(
        &sphere,
        seed.values,
        opts,
        |x, g| e_gradient(x, &v, grid, p, g),
        |r| pre.apply(r),
    );
    let mut eta = ScalarField { grid: *grid, values: out.x };
    eta.values.iter_mut().for_each(|e| *e = e.abs());
    let energy = energy_e_real(&eta, p)?;
    if !out.converged {
        return Err(Error::NoConvergence { iterations: out.iterations, residual: out.residual });
    }
    Ok(ProfileSolution {
        k_eps: fit_multiplier(&eta, p),
        eta,
        residual: out.residual,
        iterations: out.iterations,
        energy,
        tol: opts.tol,
        energy_history: out.history,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ProfileBounds {
    pub threshold: f64,
    /// sup of `eta / sqrt(p)` on `{p >= threshold}`.
    pub ratio_sup: f64,
    /// inf of `eta / sqrt(p)` on the same set.
    pub ratio_inf: f64,
    /// `(1 - ratio_inf) / eps^(1/3)`.
    pub fitted_c: f64,
    /// sup of `eta` on `{|p| <= threshold}` over `eps^(1/3)`.
    pub interface_sup_scaled: f64,
    /// Rays outside the bulk along which `eta` is non-increasing.
    pub monotone_rays: usize,
    pub rays: usize,
    /// Least-squares slope of `ln eta` against `p / eps^(2/3)` outside the bulk.
    pub decay_slope: f64,
    pub min_interior: f64,
}

/// Measures the constants of the profile bounds, with `delta0` setting the
/// band `{|p| <= delta0 eps^(1/3)}`.
pub fn verify_profile_bounds(
    sol: &ProfileSolution,
    p: &PhysicalParams,
    d: &DerivedParams,
    delta0: f64,
) -> Result<ProfileBounds> {
    sol.require_converged()?;
    let e13 = p.epsilon.cbrt();
    let threshold = delta0 * e13;
    let g = &sol.eta.grid;
    let (mut sup, mut inf, mut band, mut min_interior) = (0.0f64, f64::INFINITY, 0.0f64, f64::INFINITY);
    for (x, &e) in g.points().zip(&sol.eta.values) {
        let pe = trap_profile(x, p, d, TrapKind::PEo);
        if pe >= threshold {
            let r = e / pe.sqrt();
            sup = sup.max(r);
            inf = inf.min(r);
            min_interior = min_interior.min(e);
        } else if pe.abs() <= threshold {
            band = band.max(e);
        }
    }
    if !sup.is_finite() || sup == 0.0 {
        return Err(Error::EmptyRegion("no node with p above the threshold".into()));
    }

    // rays follow grid lines and diagonals from the central nodes; values
    // below the solver noise floor are ignored
    let floor = 1e-9 * sol.eta.max();
    let n = g.n as isize;
    let mut rays = 0;
    let mut monotone = 0;
    let (mut sx, mut sy, mut sxx, mut sxy, mut cnt) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for di in -1isize..=1 {
        for dj in -1isize..=1 {
            if di == 0 && dj == 0 {
                continue;
            }
            rays += 1;
            let start = |s: isize| if s < 0 { n / 2 - 1 } else { n / 2 };
            let (mut i, mut j) = (start(di), start(dj));
            let mut last = f64::INFINITY;
            let mut ok = true;
            while (0..n).contains(&i) && (0..n).contains(&j) {
                let x = g.point(i as usize, j as usize);
                let pe = trap_profile(x, p, d, TrapKind::PEo);
                let e = sol.eta.get(i as usize, j as usize);
                if pe < 0.0 && e > floor {
                    if e > last * (1.0 + 1e-12) {
                        ok = false;
                    }
                    last = e;
                    let t = pe / (e13 * e13);
                    let l = e.ln();
                    sx += t;
                    sy += l;
                    sxx += t * t;
                    sxy += t * l;
                    cnt += 1.0;
                }
                i += di;
                j += dj;
            }
            if ok {
                monotone += 1;
            }
        }
    }
    let decay_slope = if cnt > 2.0 { (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx) } else { f64::NAN };

    Ok(ProfileBounds {
        threshold,
        ratio_sup: sup,
        ratio_inf: inf,
        fitted_c: (1.0 - inf) / e13,
        interface_sup_scaled: band / e13,
        monotone_rays: monotone,
        rays,
        decay_slope,
        min_interior,
    })
}

#[derive(Debug, Clone)]
pub struct Rescaled {
    pub eps_tilde: f64,
    pub nu: ScalarField,
    pub a0_tilde: f64,
    /// EL residual of `nu` in the unconstrained equation with `a~`.
    pub residual: f64,
}

/// Maps the constrained profile to the unconstrained one.
///
/// The rescaled field lives on the grid of spacing `h / sigma`,
/// `sigma = sqrt((a0 + k eps^2) / a0)`, so no interpolation is needed. The
/// amplitude carries an extra `(1 - eps^2 omega^2 / 4)^(-1/2)` so that the
/// cubic term of the unconstrained equation has unit coefficient for all
/// rotation speeds.
pub fn rescale_to_unconstrained(sol: &ProfileSolution, p: &PhysicalParams, d: &DerivedParams) -> Result<Rescaled> {
    sol.require_converged()?;
    let e2 = p.epsilon * p.epsilon;
    let c = p.a0 + sol.k_eps * e2;
    if c <= 0.0 {
        return Err(Error::RegimeViolation(format!("a0 + k eps^2 = {c} is not positive")));
    }
    let beta = 1.0 - 0.25 * p.eps_omega().powi(2);
    let sigma = (c / p.a0).sqrt();
    let g = &sol.eta.grid;
    let grid = Grid2D::centered(g.n, g.half_extent / sigma, [g.center[0] / sigma, g.center[1] / sigma])?;
    let amp = (p.a0 / c).sqrt() / beta.sqrt();
    let nu = ScalarField { grid, values: sol.eta.values.iter().map(|e| amp * e).collect() };
    let eps_tilde = p.epsilon * (p.a0 / c) / beta.sqrt();

    let mut lap = vec![0.0; grid.len()];
    dirichlet_gradient(&nu.values, &grid, &mut lap);
    let lt2 = d.lambda_tilde_sq;
    let inv = 1.0 / (eps_tilde * eps_tilde);
    let s: f64 = lap
        .iter()
        .zip(&nu.values)
        .zip(grid.points())
        .map(|((l, v), x)| {
            let at = d.a0_tilde - x[0] * x[0] - lt2 * x[1] * x[1];
            let r = 0.5 * l - inv * (at - v * v) * v;
            r * r
        })
        .sum();
    let residual = (s * grid.cell_area()).sqrt();
    if residual > 10.0 * sol.tol.max(sol.residual) {
        return Err(Error::NotConverged(residual));
    }
    Ok(Rescaled { eps_tilde, nu, a0_tilde: d.a0_tilde, residual })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct UniformBound {
    pub sup_u: f64,
    pub sup_sqrt_p: f64,
    pub ratio: f64,
    pub pass: bool,
}

/// Compares `sup |u|` with `sup sqrt(p) = sqrt(alpha)`.
pub fn uniform_bound_check(u: &ComplexField, _p: &PhysicalParams, d: &DerivedParams) -> UniformBound {
    let sup_u = u.values.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let sup_sqrt_p = d.alpha_eo.sqrt();
    let ratio = sup_u / sup_sqrt_p;
    UniformBound { sup_u, sup_sqrt_p, ratio, pass: ratio <= 2.0 }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Concentration {
    pub delta: f64,
    pub inside: f64,
    pub outside: f64,
    /// `(1 - inside) / delta`.
    pub c: f64,
}

/// Mass of `u` on `{p > delta}` and outside it.
pub fn concentration(u: &ComplexField, p: &PhysicalParams, d: &DerivedParams, delta: f64) -> Concentration {
    let dens = ScalarField { grid: u.grid, values: u.values.iter().map(|z| z.norm_sqr()).collect() };
    let total = integrate(&dens);
    let mask = u.grid.mask(|x| trap_profile(x, p, d, TrapKind::PEo) > delta);
    let inside = crate::field::integrate_masked(&dens, &mask);
    Concentration { delta, inside, outside: total - inside, c: (1.0 - inside) / delta }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::mass;

    fn small_solve(eps: f64, omega: f64) -> (PhysicalParams, DerivedParams, ProfileSolution) {
        let p = PhysicalParams::isotropic(eps, omega);
        let d = derive_params(&p).unwrap();
        let grid = Grid2D::new(96, 1.5).unwrap();
        let sol = solve_profile(&p, &grid, 1e-9).unwrap();
        (p, d, sol)
    }

    #[test]
    fn profile_is_normalised_positive_and_monotone() {
        let (p, d, sol) = small_solve(0.2, 2.0);
        assert!((mass(&sol.eta.to_complex(), None).unwrap() - 1.0).abs() < 1e-10);
        assert!(sol.eta.min() >= 0.0);
        assert!(p.a0 + sol.k_eps * p.epsilon * p.epsilon > 0.0);
        for w in sol.energy_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0));
        }
        assert!(el_residual(&sol.eta, &p, sol.k_eps) < 1e-7);
        let b = verify_profile_bounds(&sol, &p, &d, 1.0).unwrap();
        assert!(b.min_interior > 0.0);
    }

    #[test]
    fn rescaling_satisfies_unconstrained_equation() {
        for omega in [0.0, 2.0] {
            let (p, d, sol) = small_solve(0.2, omega);
            let r = rescale_to_unconstrained(&sol, &p, &d).unwrap();
            assert!(r.residual <= 10.0 * sol.tol, "{}", r.residual);
            let c = p.a0 + sol.k_eps * p.epsilon * p.epsilon;
            let beta = 1.0 - 0.25 * p.eps_omega().powi(2);
            let m = mass(&r.nu.to_complex(), None).unwrap();
            assert!((m - (p.a0 / c).powi(2) / beta).abs() < 1e-9, "{m}");
        }
    }

    #[test]
    fn uniform_bound_examples() {
        let (p, d, sol) = small_solve(0.2, 0.0);
        let u = sol.eta.to_complex();
        let rep = uniform_bound_check(&u, &p, &d);
        assert!(rep.ratio <= 1.05 && rep.pass);
        let zero = ComplexField::constant(u.grid, num_complex::Complex64::new(0.0, 0.0));
        let rep = uniform_bound_check(&zero, &p, &d);
        assert_eq!(rep.sup_u, 0.0);
        assert!(rep.pass);
    }

    #[test]
    fn unconverged_solution_is_rejected() {
        let (p, d, mut sol) = small_solve(0.2, 0.0);
        sol.residual = 1.0;
        assert!(matches!(verify_profile_bounds(&sol, &p, &d, 1.0), Err(Error::NotConverged(_))));
        assert!(rescale_to_unconstrained(&sol, &p, &d).is_err());
    }
}
