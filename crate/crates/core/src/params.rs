//! Physical parameters of the trapped condensate and the quantities derived
//! from them: the rotation-deformed bulk ellipse, the trap profiles and the
//! lattice scale used by the vortex constructions.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Coupling constant, rotation speed and trap geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub epsilon: f64,
    pub omega: f64,
    /// Trap anisotropy, in (0, 1].
    pub lambda: f64,
    /// Upper regime constant: the admissible speeds satisfy `omega <= m_cap / epsilon`.
    pub m_cap: f64,
    /// Trap depth.
    pub a0: f64,
}

/// JSON parameter block; `a0` falls back to the normalizing depth.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamBlock {
    pub epsilon: f64,
    pub omega: f64,
    pub lambda: f64,
    pub m_cap: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a0: Option<f64>,
}

impl Default for ParamBlock {
    fn default() -> Self {
        Self { epsilon: 0.05, omega: 10.0, lambda: 1.0, m_cap: 1.0, a0: None }
    }
}

impl From<ParamBlock> for PhysicalParams {
    fn from(b: ParamBlock) -> Self {
        let mut p = PhysicalParams::new(b.epsilon, b.omega, b.lambda, b.m_cap);
        if let Some(a0) = b.a0 {
            p.a0 = a0;
        }
        p
    }
}

/// Depth that makes the positive part of the trap profile integrate to one.
pub fn default_a0(lambda: f64) -> f64 {
    (2.0 * lambda / PI).sqrt()
}

impl PhysicalParams {
    pub fn new(epsilon: f64, omega: f64, lambda: f64, m_cap: f64) -> Self {
        Self { epsilon, omega, lambda, m_cap, a0: default_a0(lambda) }
    }

    /// Isotropic trap, `M = 1`.
    pub fn isotropic(epsilon: f64, omega: f64) -> Self {
        Self::new(epsilon, omega, 1.0, 1.0)
    }

    pub fn with_a0(mut self, a0: f64) -> Self {
        self.a0 = a0;
        self
    }

    pub fn has_default_a0(&self) -> bool {
        (self.a0 - default_a0(self.lambda)).abs() <= 1e-15 * self.a0.abs().max(1.0)
    }

    pub fn eps_omega(&self) -> f64 {
        self.epsilon * self.omega
    }

    /// Checks ranges and the existence threshold `epsilon * omega < 2 * lambda`.
    pub fn validate(&self) -> Result<()> {
        let finite = [self.epsilon, self.omega, self.lambda, self.m_cap, self.a0]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Config("non-finite parameter".into()));
        }
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return Err(Error::Config(format!("lambda = {} not in (0, 1]", self.lambda)));
        }
        if !(self.m_cap > 0.0 && self.m_cap < 2.0 * self.lambda) {
            return Err(Error::Config(format!(
                "m_cap = {} not in (0, 2*lambda = {})",
                self.m_cap,
                2.0 * self.lambda
            )));
        }
        if !(self.a0 > 0.0) {
            return Err(Error::Config(format!("a0 = {} must be positive", self.a0)));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::RegimeViolation(format!(
                "epsilon = {} outside (0, 1)",
                self.epsilon
            )));
        }
        if self.omega < 0.0 {
            return Err(Error::Config(format!("omega = {} is negative", self.omega)));
        }
        if self.eps_omega() >= 2.0 * self.lambda {
            return Err(Error::RegimeViolation(format!(
                "epsilon*omega = {} >= 2*lambda = {}: energy unbounded below",
                self.eps_omega(),
                2.0 * self.lambda
            )));
        }
        Ok(())
    }
}

/// Rotation-deformed quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    /// Squared semi-axis of the bulk ellipse along `x1`.
    pub alpha_eo: f64,
    /// Anisotropy of the bulk ellipse.
    pub lambda_eo: f64,
    pub a0_tilde: f64,
    pub lambda_tilde_sq: f64,
    /// Lattice length scale; infinite without rotation.
    pub ell: f64,
    /// Effective applied field `1 / ell^2`.
    pub h_ex: f64,
    pub log_eps: f64,
}

impl DerivedParams {
    /// `sqrt(x1^2 + lambda_eo^2 x2^2)`.
    pub fn elliptic_radius(&self, x: [f64; 2]) -> f64 {
        (x[0] * x[0] + self.lambda_eo * self.lambda_eo * x[1] * x[1]).sqrt()
    }

    /// Semi-axis of the bulk along `x1` (the conjugate one when `lambda < 1`).
    pub fn conjugate_semi_axis(&self) -> f64 {
        self.alpha_eo.sqrt()
    }

    pub fn transverse_semi_axis(&self) -> f64 {
        self.alpha_eo.sqrt() / self.lambda_eo
    }

    /// Side of the lattice squares `1 / (ell sqrt(omega))`.
    pub fn lattice_side(&self, omega: f64) -> f64 {
        1.0 / (self.ell * omega.sqrt())
    }
}

/// Closed-form derived quantities.
pub fn derive_params(p: &PhysicalParams) -> Result<DerivedParams> {
    p.validate()?;
    let q = p.eps_omega() * p.eps_omega() / 4.0;
    let lam2 = p.lambda * p.lambda;
    let ratio = (1.0 - q / lam2) / (1.0 - q);
    let alpha_eo = p.a0 * ratio.powf(0.25);
    let lambda_eo = p.lambda * ratio.sqrt();
    let a0_tilde = p.a0 / (1.0 - q);
    let lambda_tilde_sq = (lam2 - q) / (1.0 - q);
    let log_eps = -p.epsilon.ln();
    let (ell, h_ex) = if p.omega > 0.0 {
        let ell = (p.omega / log_eps).powf(0.25) / p.omega.sqrt();
        (ell, 1.0 / (ell * ell))
    } else {
        (f64::INFINITY, 0.0)
    };
    Ok(DerivedParams { alpha_eo, lambda_eo, a0_tilde, lambda_tilde_sq, ell, h_ex, log_eps })
}

/// Which closed-form potential to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrapKind {
    /// `a(x) = a0 - |x|_Lambda^2`.
    A,
    /// Thomas-Fermi density `alpha_eo - |x|^2` in the deformed norm.
    PEo,
    /// Rotation-corrected potential `a(x) + (eps omega)^2 |x|^2 / 4`.
    VEo,
}

pub fn trap_profile(x: [f64; 2], p: &PhysicalParams, d: &DerivedParams, kind: TrapKind) -> f64 {
    let (x1, x2) = (x[0], x[1]);
    match kind {
        TrapKind::A => p.a0 - x1 * x1 - p.lambda * p.lambda * x2 * x2,
        TrapKind::PEo => d.alpha_eo - x1 * x1 - d.lambda_eo * d.lambda_eo * x2 * x2,
        TrapKind::VEo => {
            let q = p.eps_omega() * p.eps_omega() / 4.0;
            p.a0 - x1 * x1 - p.lambda * p.lambda * x2 * x2 + q * (x1 * x1 + x2 * x2)
        }
    }
}

/// Position of the rotation speed inside `b |ln eps| <= omega <= M / eps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub omega: f64,
    pub lower_ok: bool,
    pub upper_ok: bool,
    /// `omega - lower_bound`.
    pub lower_margin: f64,
    /// `upper_bound - omega`.
    pub upper_margin: f64,
    /// `omega / |ln eps|`; asymptotics need this to be large.
    pub ultra_speed_ratio: f64,
    pub pass: bool,
}

pub fn check_regime(p: &PhysicalParams, b_factor: f64) -> RegimeReport {
    let log_eps = -p.epsilon.ln();
    let lower_bound = b_factor * log_eps;
    let upper_bound = p.m_cap / p.epsilon;
    let lower_ok = lower_bound <= p.omega;
    let upper_ok = p.omega <= upper_bound;
    RegimeReport {
        lower_bound,
        upper_bound,
        omega: p.omega,
        lower_ok,
        upper_ok,
        lower_margin: p.omega - lower_bound,
        upper_margin: upper_bound - p.omega,
        ultra_speed_ratio: p.omega / log_eps,
        pass: lower_ok && upper_ok,
    }
}

/// Diameters of the bulk ellipse at one value of `epsilon * omega`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BulkAxes {
    pub lambda: f64,
    pub eps_omega: f64,
    pub alpha_eo: f64,
    pub lambda_eo: f64,
    pub conjugate_diameter: f64,
    pub transverse_diameter: f64,
}

/// Bulk ellipse for each `eps_omega`, evaluated at a fixed small `epsilon`.
pub fn bulk_axes(lambda: f64, eps_omegas: &[f64]) -> Result<Vec<BulkAxes>> {
    let epsilon = 0.01;
    eps_omegas
        .iter()
        .map(|&eo| {
            let p = PhysicalParams::new(epsilon, eo / epsilon, lambda, lambda);
            let d = derive_params(&p)?;
            Ok(BulkAxes {
                lambda,
                eps_omega: eo,
                alpha_eo: d.alpha_eo,
                lambda_eo: d.lambda_eo,
                conjugate_diameter: 2.0 * d.conjugate_semi_axis(),
                transverse_diameter: 2.0 * d.transverse_semi_axis(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn isotropic_limit() {
        let p = PhysicalParams::new(0.05, 0.0, 1.0, 1.0);
        let d = derive_params(&p).unwrap();
        assert_relative_eq!(d.alpha_eo, p.a0, epsilon = 1e-15);
        assert_relative_eq!(d.alpha_eo, 0.797_884_560_802_865_4, epsilon = 1e-15);
        assert_eq!(d.lambda_eo, 1.0);
    }

    #[test]
    fn ell_and_h_ex_exact() {
        let eps = (-4.0f64).exp();
        let p = PhysicalParams::isotropic(eps, 64.0);
        let d = derive_params(&p).unwrap();
        assert_relative_eq!(d.ell, 0.25, epsilon = 1e-14);
        assert_relative_eq!(d.h_ex, 16.0, epsilon = 1e-12);
        assert_relative_eq!(d.h_ex * d.ell * d.ell, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn isotropic_invariance_over_rotation() {
        for k in 0..40 {
            let eo = 1.9 * k as f64 / 39.0;
            let p = PhysicalParams::new(0.01, eo / 0.01, 1.0, 1.95);
            let d = derive_params(&p).unwrap();
            assert_relative_eq!(d.alpha_eo, p.a0, epsilon = 1e-14);
            assert_relative_eq!(d.lambda_eo, 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn anisotropic_deformation_is_monotone() {
        let mut prev: Option<DerivedParams> = None;
        for k in 1..=50 {
            let eo = 1.4 * k as f64 / 51.0;
            let p = PhysicalParams::new(0.01, eo / 0.01, 0.7, 1.39);
            let d = derive_params(&p).unwrap();
            if let Some(q) = prev {
                assert!(d.lambda_eo < q.lambda_eo);
                assert!(d.alpha_eo < q.alpha_eo);
            }
            prev = Some(d);
        }
    }

    #[test]
    fn anisotropic_closed_form_values() {
        // 40-digit evaluation of the closed forms at Lambda = 0.8, eps*omega = 1.
        let p = PhysicalParams::new(0.01, 100.0, 0.8, 1.2);
        let d = derive_params(&p).unwrap();
        assert_relative_eq!(d.alpha_eo, 0.677_549_294_479_084_737_6, max_relative = 1e-14);
        assert_relative_eq!(d.lambda_eo, 0.721_110_255_092_797_858_6, max_relative = 1e-14);
        assert_relative_eq!(d.a0_tilde, 0.951_532_861_948_144_594_4, max_relative = 1e-14);
        assert_relative_eq!(d.lambda_tilde_sq, 0.52, max_relative = 1e-14);
        assert_relative_eq!(d.lambda_eo * d.lambda_eo, d.lambda_tilde_sq, max_relative = 1e-14);
    }

    #[test]
    fn no_rotation_has_no_lattice_scale() {
        let d = derive_params(&PhysicalParams::isotropic(0.05, 0.0)).unwrap();
        assert!(d.ell.is_infinite());
        assert_eq!(d.h_ex, 0.0);
    }

    #[test]
    fn regime_violation_above_threshold() {
        let p = PhysicalParams::new(0.1, 20.0, 1.0, 1.0);
        assert!(matches!(derive_params(&p), Err(Error::RegimeViolation(_))));
        let p = PhysicalParams::new(0.1, 14.0, 0.7, 1.0);
        assert!(matches!(derive_params(&p), Err(Error::RegimeViolation(_))));
    }

    #[test]
    fn regime_report_examples() {
        let r = check_regime(&PhysicalParams::isotropic(0.02, 25.0), 2.0);
        assert!(r.pass);
        assert_relative_eq!(r.lower_bound, 2.0 * 50f64.ln(), epsilon = 1e-12);
        assert_relative_eq!(r.upper_bound, 50.0, epsilon = 1e-12);
        let r = check_regime(&PhysicalParams::isotropic(0.02, 60.0), 2.0);
        assert!(!r.upper_ok && r.lower_ok && !r.pass);
        let r = check_regime(&PhysicalParams::isotropic(0.02, 4.0), 2.0);
        assert!(!r.lower_ok && r.upper_ok && !r.pass);
    }

    #[test]
    fn profiles_at_origin_and_degenerate_rotation() {
        let p = PhysicalParams::new(0.03, 0.0, 0.8, 1.0);
        let d = derive_params(&p).unwrap();
        assert_eq!(trap_profile([0.0, 0.0], &p, &d, TrapKind::A), p.a0);
        let pts = [[0.1, 0.2], [-0.5, 0.3], [0.9, -0.9], [0.0, 1.2], [0.33, 0.0]];
        for x in pts {
            assert_relative_eq!(
                trap_profile(x, &p, &d, TrapKind::PEo),
                trap_profile(x, &p, &d, TrapKind::A),
                epsilon = 1e-15
            );
        }
    }
}
