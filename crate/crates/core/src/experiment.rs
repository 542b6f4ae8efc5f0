//! Experiment orchestration behind the command-line front end: configuration,
//! one pipeline per command, sweeps and plot-ready tables.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::cell::{build_f, cell_metrics, CellProblem};
use crate::error::{Error, Result};
use crate::field::dump::{dump_complex, dump_scalar, load_complex, write_atomic, FieldMeta};
use crate::field::{ComplexField, Grid2D};
use crate::params::{bulk_axes, check_regime, derive_params, DerivedParams, ParamBlock, PhysicalParams};
use crate::profile::{solve_profile, verify_profile_bounds, ProfileSolution};
use crate::solver::{c0_estimate, minimize_g, square_audit, MinimizeConfig};
use crate::trial::{
    build_trial, compact_half_extent, registration_average, trial_grid, upper_bound_report, LatticeGeometry,
    TrialOptions,
};
use crate::vortex::{classify_squares, extract_vortices, vorticity_density_report, VortexSet, VorticityMeasure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Derive,
    Profile,
    Cell,
    Trial,
    Minimize,
    Vortices,
    Audit,
    Sweep,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    /// Nodes per axis for `profile`; lattice-aligned commands pick their own.
    pub n: Option<usize>,
    pub half_extent: Option<f64>,
    /// Use a box of half extent `2L` instead of the compact one.
    pub full_box: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrialSpec {
    pub delta: Option<f64>,
    pub l_cut: Option<f64>,
    /// Translations per axis for the registration average.
    pub registrations: usize,
}

impl Default for TrialSpec {
    fn default() -> Self {
        Self { delta: None, l_cut: None, registrations: 4 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CellSpec {
    pub h_ex: f64,
    pub eps_cell: f64,
    pub lambda: f64,
}

impl Default for CellSpec {
    fn default() -> Self {
        Self { h_ex: 16.0, eps_cell: 0.01, lambda: 1.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub epsilons: Vec<f64>,
    /// Explicit speeds, one per epsilon; otherwise `omega_eps / epsilon`.
    pub omegas: Option<Vec<f64>>,
    pub omega_eps: f64,
    /// Also minimize at every point.
    pub minimize: bool,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self { epsilons: vec![0.05, 0.03, 0.02], omegas: None, omega_eps: 0.5, minimize: false }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditSpec {
    /// Width of the excluded band; defaults to `0.1 sqrt(alpha)`.
    pub delta: Option<f64>,
    pub g_eps: f64,
}

impl Default for AuditSpec {
    fn default() -> Self {
        Self { delta: None, g_eps: 0.2 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub params: ParamBlock,
    pub grid: GridSpec,
    pub profile_tol: f64,
    pub minimize: MinimizeConfig,
    pub trial: TrialSpec,
    pub cell: CellSpec,
    pub sweep: SweepSpec,
    pub audit: AuditSpec,
    /// `eps * omega` values of the bulk-axes table.
    pub bulk_eps_omega: Vec<f64>,
    /// Stem of a dumped field for `vortices` and `audit`.
    pub input: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            params: ParamBlock::default(),
            grid: GridSpec::default(),
            profile_tol: 1e-8,
            minimize: MinimizeConfig::default(),
            trial: TrialSpec::default(),
            cell: CellSpec::default(),
            sweep: SweepSpec::default(),
            audit: AuditSpec::default(),
            bulk_eps_omega: vec![0.0, 0.5, 1.0, 1.3],
            input: None,
        }
    }
}

fn strictly_monotone(x: &[f64]) -> bool {
    x.windows(2).all(|w| w[0] < w[1]) || x.windows(2).all(|w| w[0] > w[1])
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|_| Error::MissingInput(path.display().to_string()))?;
        Self::from_json(&text)
    }

    pub fn physical(&self) -> PhysicalParams {
        self.params.into()
    }

    pub fn validate(&self) -> Result<()> {
        if self.sweep.epsilons.is_empty() || !strictly_monotone(&self.sweep.epsilons) {
            return Err(Error::Config("sweep.epsilons must be nonempty and sorted".into()));
        }
        if let Some(om) = &self.sweep.omegas {
            if om.len() != self.sweep.epsilons.len() {
                return Err(Error::Config("sweep.omegas must match sweep.epsilons in length".into()));
            }
        }
        if self.bulk_eps_omega.is_empty() || !strictly_monotone(&self.bulk_eps_omega) {
            return Err(Error::Config("bulk_eps_omega must be nonempty and sorted".into()));
        }
        if !(self.profile_tol > 0.0) || !(self.minimize.tol > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        if self.trial.registrations == 0 {
            return Err(Error::Config("trial.registrations must be positive".into()));
        }
        let p = self.physical();
        if !(p.epsilon > 0.0 && p.epsilon < 1.0) {
            return Err(Error::Config(format!("epsilon = {} outside (0, 1)", p.epsilon)));
        }
        if !(p.lambda > 0.0 && p.lambda <= 1.0) || !(p.m_cap > 0.0) || p.omega < 0.0 {
            return Err(Error::Config("params out of range".into()));
        }
        Ok(())
    }
}

/// Artifacts written by one command.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub command: Command,
    pub files: Vec<PathBuf>,
    pub report: Value,
}

struct Writer<'a> {
    dir: &'a Path,
    provenance: Value,
    files: Vec<PathBuf>,
}

impl Writer<'_> {
    fn json(&mut self, name: &str, kind: &str, body: Value) -> Result<Value> {
        let mut doc = json!({ "kind": kind, "provenance": self.provenance });
        if let (Value::Object(d), Value::Object(b)) = (&mut doc, body) {
            d.extend(b);
        }
        let path = self.dir.join(name);
        write_atomic(&path, serde_json::to_string_pretty(&doc)?.as_bytes())?;
        self.files.push(path);
        Ok(doc)
    }

    fn csv<R: Serialize>(&mut self, name: &str, rows: &[R], header: &[&str]) -> Result<()> {
        let path = self.dir.join(name);
        write_csv(&path, rows, header)?;
        let meta = self.dir.join(format!("{name}.meta.json"));
        write_atomic(&meta, serde_json::to_string_pretty(&self.provenance)?.as_bytes())?;
        self.files.push(path);
        self.files.push(meta);
        Ok(())
    }

    fn field(&mut self, stem: &str, v: &ComplexField, p: &PhysicalParams, kind: &str) -> Result<()> {
        let path = self.dir.join(stem);
        dump_complex(&path, v, &FieldMeta::new(&v.grid, p.epsilon, p.omega, p.lambda, kind))?;
        self.files.push(path.with_extension("bin"));
        self.files.push(path.with_extension("json"));
        Ok(())
    }
}

/// CSV with an explicit header, written atomically. The header is kept even
/// when there are no rows.
pub fn write_csv<R: Serialize>(path: &Path, rows: &[R], header: &[&str]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    write_atomic(path, &bytes)
}

#[derive(Debug, Clone, Copy, Serialize)]
struct VortexRow {
    x: f64,
    y: f64,
    radius: f64,
    degree: i32,
}

fn vortex_rows(vs: &VortexSet) -> Vec<VortexRow> {
    vs.vortices
        .iter()
        .map(|v| VortexRow { x: v.center[0], y: v.center[1], radius: v.radius, degree: v.degree })
        .collect()
}

/// Grid aligned with the vortex lattice, compact unless `full_box`.
pub fn lattice_grid(p: &PhysicalParams, d: &DerivedParams, spec: &GridSpec, opts: &TrialOptions) -> Result<Grid2D> {
    let r = if spec.full_box { 2.0 * opts.l_cut } else { compact_half_extent(p, d) };
    trial_grid(p, spec.half_extent.unwrap_or(0.0).max(r))
}

fn trial_options(d: &DerivedParams, spec: &TrialSpec) -> TrialOptions {
    let mut o = TrialOptions::defaults(d);
    if let Some(x) = spec.delta {
        o.delta = x;
    }
    if let Some(x) = spec.l_cut {
        o.l_cut = x;
    }
    o
}

/// Interior region `{|x| < 0.7 sqrt(alpha)}` used for densities.
fn interior(d: &DerivedParams) -> impl Fn([f64; 2]) -> bool + '_ {
    let r = 0.7 * d.alpha_eo.sqrt();
    move |x| d.elliptic_radius(x) < r
}

/// Vortices in the interior and their box density with one lattice period
/// per box; `None` without rotation or when no box fits.
pub fn interior_density(v: &ComplexField, p: &PhysicalParams, d: &DerivedParams) -> (VortexSet, Option<VorticityMeasure>) {
    let u = interior(d);
    let mask: Vec<bool> = v.grid.points().map(&u).collect();
    let vs = extract_vortices(v, 0.5, Some(&mask));
    let measure = LatticeGeometry::new(p)
        .ok()
        .and_then(|geo| vorticity_density_report(&vs, &u, p.omega, geo.period).ok());
    (vs, measure)
}

struct Prepared {
    p: PhysicalParams,
    d: DerivedParams,
    opts: TrialOptions,
    sol: ProfileSolution,
}

fn prepare(cfg: &ExperimentConfig, p: PhysicalParams) -> Result<Prepared> {
    p.validate()?;
    let d = derive_params(&p)?;
    let opts = trial_options(&d, &cfg.trial);
    let grid = lattice_grid(&p, &d, &cfg.grid, &opts)?;
    let sol = solve_profile(&p, &grid, cfg.profile_tol)?;
    Ok(Prepared { p, d, opts, sol })
}

fn load_input(cfg: &ExperimentConfig) -> Result<(ComplexField, FieldMeta)> {
    let stem = cfg.input.as_ref().ok_or_else(|| Error::MissingInput("config field `input` is not set".into()))?;
    load_complex(stem)
}

/// Runs one command and writes its artifacts into `out`.
pub fn run(command: Command, cfg: &ExperimentConfig, out: &Path) -> Result<RunSummary> {
    cfg.validate()?;
    fs::create_dir_all(out)?;
    let mut w = Writer { dir: out, provenance: json!({ "command": command, "config": cfg }), files: Vec::new() };
    let p = cfg.physical();
    let report = match command {
        Command::Derive => {
            p.validate()?;
            let d = derive_params(&p)?;
            let axes = bulk_axes(p.lambda, &cfg.bulk_eps_omega)?;
            w.csv(
                "bulk_axes.csv",
                &axes,
                &["lambda", "eps_omega", "alpha_eo", "lambda_eo", "conjugate_diameter", "transverse_diameter"],
            )?;
            w.json(
                "derive.json",
                "derive",
                json!({ "params": p, "derived": d, "ell": d.ell, "h_ex": d.h_ex,
                        "regime": check_regime(&p, 1.0), "bulk_axes": axes }),
            )?
        }
        Command::Profile => {
            p.validate()?;
            let d = derive_params(&p)?;
            let grid = match cfg.grid.n {
                Some(n) => Grid2D::new(n, cfg.grid.half_extent.unwrap_or(d.alpha_eo.sqrt() + 3.0 * p.epsilon.cbrt()))?,
                None => lattice_grid(&p, &d, &cfg.grid, &TrialOptions::defaults(&d))?,
            };
            let sol = solve_profile(&p, &grid, cfg.profile_tol)?;
            let bounds = verify_profile_bounds(&sol, &p, &d, 1.0)?;
            let stem = out.join("eta");
            dump_scalar(&stem, &sol.eta, &FieldMeta::new(&grid, p.epsilon, p.omega, p.lambda, "eta"))?;
            w.files.push(stem.with_extension("bin"));
            w.files.push(stem.with_extension("json"));
            w.json("profile.json", "profile", json!({ "params": p, "n": grid.n, "half_extent": grid.half_extent,
                    "solution": sol.summary(), "bounds": bounds }))?
        }
        Command::Cell => {
            let cp = CellProblem::resolved(cfg.cell.h_ex, cfg.cell.eps_cell)?;
            let cs = build_f(&cp)?;
            let metrics = cell_metrics(&cs, cfg.cell.lambda)?;
            w.field("cell_f", &cs.f, &p, "cell")?;
            w.json("cell.json", "cell", json!({ "metrics": metrics, "subcell_windings": cs.subcell_windings }))?
        }
        Command::Trial => {
            let pr = prepare(cfg, p)?;
            let ts = build_trial(&pr.p, &pr.d, &pr.sol, &pr.opts)?;
            let ub = upper_bound_report(&ts, &pr.p, &pr.d, &pr.sol)?;
            let avg = registration_average(&pr.p, &pr.d, &pr.sol, &pr.opts, cfg.trial.registrations)?;
            let (vs, measure) = interior_density(&ts.v, &pr.p, &pr.d);
            w.field("trial_v", &ts.v, &pr.p, "trial")?;
            w.csv("vortices.csv", &vortex_rows(&vs), &["x", "y", "radius", "degree"])?;
            if let Some(m) = &measure {
                w.csv("density_boxes.csv", &m.boxes, &["x", "y", "degree", "density", "density_2pi"])?;
            }
            w.json("trial.json", "trial", json!({ "params": pr.p, "n": ts.v.grid.n, "upper_bound": ub,
                    "registration_average": avg, "density": measure }))?
        }
        Command::Minimize => {
            let pr = prepare(cfg, p)?;
            let mut mc = cfg.minimize.clone();
            if let Some(input) = &cfg.input {
                mc.init = crate::solver::InitMode::File(input.clone());
            }
            let res = minimize_g(&pr.p, &pr.d, &pr.sol, &mc)?;
            res.require_converged()?;
            let c0 = c0_estimate(&pr.p, &pr.sol, &res)?;
            let (vs, measure) = interior_density(&res.v, &pr.p, &pr.d);
            w.field("minimizer_v", &res.v, &pr.p, "minimizer")?;
            w.csv("vortices.csv", &vortex_rows(&vs), &["x", "y", "radius", "degree"])?;
            w.json("minimize.json", "minimize", json!({ "params": pr.p, "n": res.v.grid.n, "c0": c0,
                    "residual": res.residual, "iterations": res.iterations, "initial_energy": res.initial_energy,
                    "g_multiplier": res.g_multiplier, "vortex_count": vs.total_degree, "density": measure }))?
        }
        Command::Vortices => {
            let (v, meta) = load_input(cfg)?;
            let fp = PhysicalParams::new(meta.epsilon, meta.omega, meta.lambda, p.m_cap);
            let vs = extract_vortices(&v, 0.5, None);
            w.csv("vortices.csv", &vortex_rows(&vs), &["x", "y", "radius", "degree"])?;
            let measure = match derive_params(&fp) {
                Ok(d) if fp.omega > 0.0 => interior_density(&v, &fp, &d).1,
                _ => None,
            };
            w.json("vortices.json", "vortices", json!({ "total_degree": vs.total_degree,
                    "total_abs_degree": vs.total_abs_degree, "count": vs.vortices.len(),
                    "sum_radii": vs.sum_radii, "density": measure }))?
        }
        Command::Audit => {
            let pr = prepare(cfg, p)?;
            let v = match &cfg.input {
                Some(_) => {
                    let (v, _) = load_input(cfg)?;
                    if v.grid != pr.sol.eta.grid {
                        return Err(Error::GridMismatch);
                    }
                    v
                }
                None => {
                    let res = minimize_g(&pr.p, &pr.d, &pr.sol, &cfg.minimize)?;
                    res.require_converged()?;
                    res.v
                }
            };
            let delta = cfg.audit.delta.unwrap_or(0.1 * pr.d.alpha_eo.sqrt());
            let audit = square_audit(&v, &pr.p, &pr.d, &pr.sol, delta)?;
            let classes = classify_squares(&v, &pr.p, &pr.d, &pr.sol, cfg.audit.g_eps, pr.d.alpha_eo.sqrt() - delta)?;
            let rows: Vec<_> = audit
                .squares
                .iter()
                .map(|s| (s.center[0], s.center[1], s.energy, s.weight, s.weight_min, s.weight_max, s.reference, s.ratio))
                .collect();
            w.csv(
                "audit_squares.csv",
                &rows,
                &["x", "y", "energy", "weight", "weight_min", "weight_max", "reference", "ratio"],
            )?;
            w.json("audit.json", "audit", json!({ "params": pr.p, "audit": audit, "classification": classes }))?
        }
        Command::Sweep => {
            let rows = sweep(cfg)?;
            w.csv(
                "sweep.csv",
                &rows.iter().map(SweepRow::summary).collect::<Vec<_>>(),
                &["epsilon", "omega", "energy", "target", "ratio", "vortex_count", "density", "density_over_2pi"],
            )?;
            w.json("sweep.json", "sweep", json!({ "rows": rows }))?
        }
    };
    Ok(RunSummary { command, files: w.files, report })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub omega: f64,
    /// Registration-averaged trial energy, or the minimizer's when requested.
    pub energy: f64,
    pub target: f64,
    pub ratio: f64,
    pub vortex_count: i64,
    pub density: f64,
    pub density_over_2pi: f64,
    pub trial_energy_canonical: f64,
    pub trial_ratio_canonical: f64,
    pub trial_ratio_min: f64,
    pub trial_ratio_max: f64,
    pub minimizer_energy: Option<f64>,
}

type SummaryRow = (f64, f64, f64, f64, f64, i64, f64, f64);

impl SweepRow {
    fn summary(&self) -> SummaryRow {
        (
            self.epsilon,
            self.omega,
            self.energy,
            self.target,
            self.ratio,
            self.vortex_count,
            self.density,
            self.density_over_2pi,
        )
    }
}

/// Evaluates every sweep point concurrently.
pub fn sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    let base = cfg.physical();
    let points: Vec<(f64, f64)> = match &cfg.sweep.omegas {
        Some(om) => cfg.sweep.epsilons.iter().copied().zip(om.iter().copied()).collect(),
        None => cfg.sweep.epsilons.iter().map(|&e| (e, cfg.sweep.omega_eps / e)).collect(),
    };
    points
        .par_iter()
        .map(|&(eps, omega)| {
            let p = PhysicalParams { epsilon: eps, omega, ..base };
            let pr = prepare(cfg, p)?;
            let ts = build_trial(&pr.p, &pr.d, &pr.sol, &pr.opts)?;
            let ub = upper_bound_report(&ts, &pr.p, &pr.d, &pr.sol)?;
            let avg = registration_average(&pr.p, &pr.d, &pr.sol, &pr.opts, cfg.trial.registrations)?;
            let (mut energy, mut v) = (avg.mean, ts.v);
            let mut minimizer_energy = None;
            if cfg.sweep.minimize {
                let res = minimize_g(&pr.p, &pr.d, &pr.sol, &cfg.minimize)?;
                res.require_converged()?;
                energy = res.energy;
                minimizer_energy = Some(res.energy);
                v = res.v;
            }
            let (vs, measure) = interior_density(&v, &pr.p, &pr.d);
            let (density, density_over_2pi) =
                measure.map(|m| (m.mean_density, m.mean_density_2pi)).unwrap_or((f64::NAN, f64::NAN));
            Ok(SweepRow {
                epsilon: eps,
                omega,
                energy,
                target: ub.target,
                ratio: energy / ub.target,
                vortex_count: vs.total_degree,
                density,
                density_over_2pi,
                trial_energy_canonical: ub.energy,
                trial_ratio_canonical: ub.ratio,
                trial_ratio_min: avg.ratio_min,
                trial_ratio_max: avg.ratio_max,
                minimizer_energy,
            })
        })
        .collect()
}

/// Tidy tables from report files: `energy_ratio.csv` from sweeps,
/// `bulk_axes.csv` from derive reports, `vorticity_boxes.csv` from trial,
/// minimize and vortices reports, `audit_squares.csv` from audits. Only
/// tables with a contributing report are written.
pub fn emit_plot_data(reports: &[PathBuf], out: &Path) -> Result<Vec<PathBuf>> {
    if reports.is_empty() {
        return Err(Error::MissingInput("no report files given".into()));
    }
    let mut ratio = Vec::new();
    let mut axes = Vec::new();
    let mut boxes = Vec::new();
    let mut squares = Vec::new();
    for path in reports {
        let text = fs::read_to_string(path).map_err(|_| Error::MissingInput(path.display().to_string()))?;
        let doc: Value = serde_json::from_str(&text)?;
        let src = path.display().to_string();
        let num = |v: &Value| v.as_f64().unwrap_or(f64::NAN);
        match doc["kind"].as_str() {
            Some("sweep") => {
                for r in doc["rows"].as_array().into_iter().flatten() {
                    ratio.push((src.clone(), num(&r["epsilon"]), num(&r["omega"]), num(&r["ratio"]), num(&r["energy"])));
                }
            }
            Some("derive") => {
                for r in doc["bulk_axes"].as_array().into_iter().flatten() {
                    axes.push((
                        src.clone(),
                        num(&r["lambda"]),
                        num(&r["eps_omega"]),
                        num(&r["conjugate_diameter"]),
                        num(&r["transverse_diameter"]),
                    ));
                }
            }
            Some("trial") | Some("minimize") | Some("vortices") => {
                for b in doc["density"]["boxes"].as_array().into_iter().flatten() {
                    boxes.push((
                        src.clone(),
                        num(&b["center"][0]),
                        num(&b["center"][1]),
                        b["degree"].as_i64().unwrap_or(0),
                        num(&b["density"]),
                        num(&b["density_2pi"]),
                    ));
                }
            }
            Some("audit") => {
                for s in doc["audit"]["squares"].as_array().into_iter().flatten() {
                    squares.push((
                        src.clone(),
                        num(&s["center"][0]),
                        num(&s["center"][1]),
                        num(&s["energy"]),
                        num(&s["reference"]),
                        num(&s["ratio"]),
                    ));
                }
            }
            _ => return Err(Error::Config(format!("{src}: unknown report kind"))),
        }
    }
    fs::create_dir_all(out)?;
    let mut files = Vec::new();
    let mut emit = |name: &str, ok: bool, write: &dyn Fn(&Path) -> Result<()>| -> Result<()> {
        if ok {
            let path = out.join(name);
            write(&path)?;
            files.push(path);
        }
        Ok(())
    };
    emit("energy_ratio.csv", !ratio.is_empty(), &|p| {
        write_csv(p, &ratio, &["source", "epsilon", "omega", "ratio", "energy"])
    })?;
    emit("bulk_axes.csv", !axes.is_empty(), &|p| {
        write_csv(p, &axes, &["source", "lambda", "eps_omega", "conjugate_diameter", "transverse_diameter"])
    })?;
    emit("vorticity_boxes.csv", !boxes.is_empty(), &|p| {
        write_csv(p, &boxes, &["source", "x", "y", "degree", "density", "density_2pi"])
    })?;
    emit("audit_squares.csv", !squares.is_empty(), &|p| {
        write_csv(p, &squares, &["source", "x", "y", "energy", "reference", "ratio"])
    })?;
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_and_validation() {
        let cfg = ExperimentConfig::from_json("{}").unwrap();
        assert_eq!(cfg.sweep.epsilons, vec![0.05, 0.03, 0.02]);
        assert!(ExperimentConfig::from_json(r#"{"sweep": {"epsilons": []}}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"sweep": {"epsilons": [0.02, 0.05, 0.03]}}"#).is_err());
        assert!(matches!(ExperimentConfig::from_json(r#"{"bogus": 1}"#), Err(Error::Config(_))));
        let c = ExperimentConfig::from_json(r#"{"minimize": {"init": "cold", "tol": 1e-4}}"#).unwrap();
        assert_eq!(c.minimize.init, crate::solver::InitMode::Cold);
    }

    #[test]
    fn plot_data_needs_reports() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(emit_plot_data(&[], dir.path()), Err(Error::MissingInput(_))));
        let missing = dir.path().join("nope.json");
        assert!(matches!(emit_plot_data(&[missing], dir.path()), Err(Error::MissingInput(_))));
    }
}
