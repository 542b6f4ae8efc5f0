//! Preconditioned projected gradient descent on a weighted unit sphere.
//!
//! Unknowns are stored as real planes (one for a real field, two for a complex
//! one, real part first). The constraint is `sum W x^2 h^2 = 1` with a node
//! weight `W` shared by all planes. With `g` the L2 gradient of the energy the
//! Lagrange multiplier is `k = <g, x> / (2 <W x, x>)` and the residual is
//! `r = g - 2 k W x`; a critical point has `r = 0`. The search direction is
//! `-P r` projected onto the tangent space, followed by renormalisation. Steps
//! use the Barzilai-Borwein length with backtracking.

#[derive(Debug, Clone, Copy)]
pub struct SphereOptions {
    pub max_iters: usize,
    /// Target for `|r| / 2` in the L2 norm.
    pub tol: f64,
    /// Initial step length.
    pub step: f64,
    /// Stop when the best residual has not improved for this many steps.
    pub patience: usize,
}

impl Default for SphereOptions {
    fn default() -> Self {
        Self { max_iters: 20_000, tol: 1e-8, step: 0.5, patience: 2_000 }
    }
}

#[derive(Debug, Clone)]
pub struct SphereOutcome {
    pub x: Vec<f64>,
    pub energy: f64,
    pub multiplier: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub history: Vec<f64>,
}

pub struct Sphere<'a> {
    pub weight: &'a [f64],
    pub cell_area: f64,
}

impl Sphere<'_> {
    fn w(&self, k: usize) -> f64 {
        self.weight[k % self.weight.len()]
    }

    pub fn weighted_dot(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).enumerate().map(|(k, (x, y))| self.w(k) * x * y).sum::<f64>() * self.cell_area
    }

    pub fn normalize(&self, x: &mut [f64]) {
        let m = self.weighted_dot(x, x).sqrt();
        x.iter_mut().for_each(|v| *v /= m);
    }

    fn residual(&self, x: &[f64], g: &[f64]) -> (f64, Vec<f64>, f64) {
        let gx = dot(g, x);
        let wxx = self.weighted_dot(x, x) / self.cell_area;
        let k = 0.5 * gx / wxx;
        let r: Vec<f64> = g.iter().zip(x).enumerate().map(|(i, (g, x))| g - 2.0 * k * self.w(i) * x).collect();
        let norm = 0.5 * (dot(&r, &r) * self.cell_area).sqrt();
        (k, r, norm)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes `eval` on the sphere. `eval(x, g)` overwrites `g` with the L2
/// gradient and returns the energy; `precondition` maps a residual to a
/// direction in place and must be symmetric positive definite.
pub fn minimize_on_sphere<E, P>(
    sphere: &Sphere<'_>,
    x0: Vec<f64>,
    opts: &SphereOptions,
    mut eval: E,
    mut precondition: P,
) -> SphereOutcome
where
    E: FnMut(&[f64], &mut [f64]) -> f64,
    P: FnMut(&mut [f64]),
{
    let len = x0.len();
    let mut x = x0;
    sphere.normalize(&mut x);
    let mut g = vec![0.0; len];
    let mut energy = eval(&x, &mut g);
    let (mut k, mut r, mut res) = sphere.residual(&x, &g);
    let mut history = vec![energy];
    let mut tau = opts.step;
    let mut prev: Option<(Vec<f64>, Vec<f64>, Vec<f64>)> = None;
    let mut best = res;
    let mut since_best = 0;
    let mut iterations = 0;
    let mut xt = vec![0.0; len];
    let mut gt = vec![0.0; len];

    while iterations < opts.max_iters && res > opts.tol {
        let mut pr = r.clone();
        precondition(&mut pr);
        // tangent projection in the weighted inner product
        let c = sphere.weighted_dot(&x, &pr) / sphere.weighted_dot(&x, &x);
        let d: Vec<f64> = pr.iter().zip(&x).map(|(p, x)| -(p - c * x)).collect();

        if let Some((xp, rp, prp)) = &prev {
            // P is linear, so P y = P r - P r_prev
            let (mut sy, mut ypy) = (0.0, 0.0);
            for k in 0..len {
                let y = r[k] - rp[k];
                sy += (x[k] - xp[k]) * y;
                ypy += y * (pr[k] - prp[k]);
            }
            tau = if sy > 0.0 && ypy > 0.0 { sy / ypy } else { 2.0 * tau };
        }

        let tol_e = 1e-12 * energy.abs().max(1.0);
        let mut accepted = false;
        for _ in 0..40 {
            xt.iter_mut().zip(&x).zip(&d).for_each(|((t, x), d)| *t = x + tau * d);
            sphere.normalize(&mut xt);
            let et = eval(&xt, &mut gt);
            if et.is_finite() && et <= energy + tol_e {
                accepted = true;
                prev = Some((x.clone(), r.clone(), pr.clone()));
                std::mem::swap(&mut x, &mut xt);
                std::mem::swap(&mut g, &mut gt);
                energy = et;
                break;
            }
            tau *= 0.5;
        }
        iterations += 1;
        if !accepted {
            break;
        }
        (k, r, res) = sphere.residual(&x, &g);
        history.push(energy);
        if res < best * 0.999 {
            best = res;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best > opts.patience {
                break;
            }
        }
    }

    SphereOutcome { x, energy, multiplier: k, residual: res, iterations, converged: res <= opts.tol, history }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_lowest_eigenvector_of_diagonal_quadratic() {
        // E = sum d_i x_i^2 on the unit sphere: minimum d_0 at e_0
        let n = 50;
        let diag: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
        let w = vec![1.0; n];
        let sphere = Sphere { weight: &w, cell_area: 1.0 };
        let x0: Vec<f64> = (0..n).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let out = minimize_on_sphere(
            &sphere,
            x0,
            &SphereOptions { tol: 1e-10, ..Default::default() },
            |x, g| {
                for i in 0..n {
                    g[i] = 2.0 * diag[i] * x[i];
                }
                x.iter().zip(&diag).map(|(x, d)| d * x * x).sum()
            },
            |_| {},
        );
        assert!(out.converged, "{out:?}");
        assert!((out.energy - 1.0).abs() < 1e-12);
        assert!((out.multiplier - 1.0).abs() < 1e-9);
        assert!((sphere.weighted_dot(&out.x, &out.x) - 1.0).abs() < 1e-12);
        for pair in out.history.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-12);
        }
    }

    #[test]
    fn weighted_constraint_is_respected() {
        let n = 20;
        let w: Vec<f64> = (0..n).map(|i| 0.5 + (i as f64 * 0.3).sin().abs()).collect();
        let sphere = Sphere { weight: &w, cell_area: 0.25 };
        let out = minimize_on_sphere(
            &sphere,
            vec![1.0; 2 * n],
            &SphereOptions { tol: 1e-10, ..Default::default() },
            |x, g| {
                let mut e = 0.0;
                for i in 0..2 * n {
                    let c = 1.0 + (i % 7) as f64;
                    g[i] = 2.0 * c * x[i];
                    e += c * x[i] * x[i] * 0.25;
                }
                e
            },
            |_| {},
        );
        assert!(out.converged);
        assert!((sphere.weighted_dot(&out.x, &out.x) - 1.0).abs() < 1e-12);
    }
}
