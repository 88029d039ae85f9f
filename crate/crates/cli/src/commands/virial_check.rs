use std::io::{BufReader, Write};
use std::path::PathBuf;

use inls_core::cutoffs::{chi_profile, CutoffKind};
use inls_core::virial::{
    bound_1d, localized_bound_general, localized_bound_mass_critical, trajectory_consistency, virial_second_derivative,
    FdConsistency, Weight,
};
use inls_core::{observables, Field, InlsError, PhysParams};
use serde::Serialize;

use super::evolve::CheckpointIndex;
use super::{config_json, load, out_dir, weights, Ctx};
use crate::config::set;
use crate::output::{io_failure, RunInfo};
use crate::{CliError, Common};

pub const SCHEMA: &str = "inls.virial-check.v1";

pub struct Flags {
    pub trajectory: Option<PathBuf>,
    pub weights: Vec<String>,
    pub tol_first: Option<f64>,
    pub tol_second: Option<f64>,
    pub eps: Option<f64>,
    pub bound_slack: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct WeightCheck {
    pub id: String,
    pub fd: FdConsistency,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct BoundRow {
    pub t: f64,
    pub id: String,
    pub d2v: f64,
    pub bound: Option<f64>,
    pub holds: Option<bool>,
    pub note: Option<String>,
}

/// `d²V/dt² = 16E(u₀)` for the variance at the mass-critical power.
#[derive(Debug, Serialize)]
pub struct Convexity {
    pub target: f64,
    pub max_rel_deviation: f64,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub params: PhysParams,
    pub checkpoints: usize,
    pub tol_first: f64,
    pub tol_second: f64,
    pub eps: f64,
    pub bound_slack: f64,
    pub weights: Vec<WeightCheck>,
    pub convexity: Option<Convexity>,
    pub bounds: Vec<BoundRow>,
    pub bounds_pass: bool,
    pub all_pass: bool,
}

/// Convexity defect allowed for the variance second difference, relative to `16E`.
const CONVEXITY_TOL: f64 = 1e-2;

fn load_trajectory(dir: &std::path::Path) -> Result<(CheckpointIndex, Vec<Field>), CliError> {
    let idx_path = dir.join("checkpoints").join("index.json");
    let text = std::fs::read_to_string(&idx_path)
        .map_err(|e| CliError::Config(format!("{}: {e} (run evolve with checkpoint_every > 0)", idx_path.display())))?;
    let index: CheckpointIndex =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", idx_path.display())))?;
    if index.times.len() != index.files.len() {
        return Err(CliError::Config(format!("{}: times and files differ in length", idx_path.display())));
    }
    let mut fields = Vec::with_capacity(index.files.len());
    for name in &index.files {
        let p = dir.join("checkpoints").join(name);
        let f = std::fs::File::open(&p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
        let (params, field) =
            Field::read_columnar(BufReader::new(f)).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
        if params != index.params {
            return Err(CliError::Config(format!("{} disagrees with the index parameters", p.display())));
        }
        fields.push(field);
    }
    Ok((index, fields))
}

fn bound_for(field: &Field, w: &Weight, params: &PhysParams, eps: f64, energy0: f64) -> Result<Option<f64>, InlsError> {
    let Weight::Cutoff(fam) = w else { return Ok(None) };
    let chi = chi_profile(fam, params)?;
    let v = match fam.kind() {
        CutoffKind::OneDimensional => bound_1d(field, &chi, energy0)?,
        CutoffKind::RadialQuadraticCapped if params.is_mass_critical() => {
            localized_bound_mass_critical(field, &chi, params, eps, energy0)?.value
        }
        CutoffKind::RadialQuadraticCapped => localized_bound_general(field, &chi, params, eps)?.value,
    };
    Ok(Some(v))
}

pub fn run(ctx: &Ctx, common: Common, f: Flags) -> Result<u8, CliError> {
    let mut cfg = load(&common)?;
    let v = &mut cfg.virial;
    set(&mut v.trajectory, f.trajectory);
    if !f.weights.is_empty() {
        v.weights = Some(f.weights);
    }
    set(&mut v.tol_first, f.tol_first);
    set(&mut v.tol_second, f.tol_second);
    set(&mut v.eps, f.eps);
    set(&mut v.bound_slack, f.bound_slack);
    let dir = cfg.virial.trajectory.clone().ok_or_else(|| CliError::Config("missing virial.trajectory".into()))?;
    let tol_first = cfg.virial.tol_first.unwrap_or(1e-4);
    let tol_second = cfg.virial.tol_second.unwrap_or(2e-3);
    let eps = cfg.virial.eps.unwrap_or(0.1);
    let slack = cfg.virial.bound_slack.unwrap_or(1e-6);
    let mut ws = weights(&cfg.virial.weights)?;
    if ws.is_empty() {
        ws.push(Weight::Quadratic);
    }

    let (index, fields) = load_trajectory(&dir)?;
    let params = index.params;
    if fields.len() < 5 {
        return Err(CliError::Config(format!("{} checkpoints, need at least 5", fields.len())));
    }
    let out = out_dir(&cfg)?;
    let mut info = RunInfo::new("virial-check", config_json(&cfg));
    ctx.say(&cfg, 1, format!("checking {} checkpoints from {}", fields.len(), dir.display()));

    let mut checks = Vec::new();
    for w in &ws {
        let fd = trajectory_consistency(&index.times, &fields, w, &params)?;
        let pass = fd.max_rel_first <= tol_first && fd.max_rel_second <= tol_second;
        checks.push(WeightCheck { id: w.id(), fd, pass });
    }

    let energy0 = observables(&fields[0], &params)?.energy;
    let convexity = if params.is_mass_critical() {
        checks.iter().find(|c| c.id == Weight::Quadratic.id()).map(|c| {
            let target = 16.0 * energy0;
            let dev = c.fd.rows.iter().map(|r| (r[4] - target).abs()).fold(0.0, f64::max);
            let rel = if target != 0.0 { dev / target.abs() } else { dev };
            Convexity { target, max_rel_deviation: rel, pass: rel <= CONVEXITY_TOL }
        })
    } else {
        None
    };

    let mut bounds = Vec::new();
    for w in ws.iter().filter(|w| matches!(w, Weight::Cutoff(_))) {
        for (t, field) in index.times.iter().zip(&fields) {
            let d2v = virial_second_derivative(field, w, &params)?;
            let row = match bound_for(field, w, &params, eps, energy0) {
                Ok(bound) => {
                    let holds = bound.map(|b| d2v <= b + slack * d2v.abs().max(b.abs()));
                    BoundRow { t: *t, id: w.id(), d2v, bound, holds, note: None }
                }
                Err(e @ (InlsError::Precondition(_) | InlsError::Parameter(_))) => {
                    BoundRow { t: *t, id: w.id(), d2v, bound: None, holds: None, note: Some(e.to_string()) }
                }
                Err(e) => return Err(e.into()),
            };
            bounds.push(row);
        }
    }
    let bounds_pass = bounds.iter().all(|r| r.holds != Some(false));
    let all_pass = bounds_pass && checks.iter().all(|c| c.pass) && convexity.as_ref().is_none_or(|c| c.pass);

    let report = Report {
        params,
        checkpoints: fields.len(),
        tol_first,
        tol_second,
        eps,
        bound_slack: slack,
        weights: checks,
        convexity,
        bounds,
        bounds_pass,
        all_pass,
    };
    out.json("virial_report.json", SCHEMA, &report)?;
    write_tables(&out, &report)?;
    info.files = vec!["virial_report.json".into(), "virial_fd.csv".into(), "virial_bounds.csv".into()];
    let code = if all_pass { 0 } else { 2 };
    if !all_pass {
        ctx.say(&cfg, 0, "virial checks failed; see virial_report.json");
    }
    info.write_metadata(&out, code as i32)?;
    Ok(code)
}

fn write_tables(out: &crate::output::OutDir, r: &Report) -> Result<(), CliError> {
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.17e}"));
    let mut w = out.writer("virial_fd.csv")?;
    let res = (|| -> std::io::Result<()> {
        writeln!(w, "weight,t,V,dV_fd,dV_formula,d2V_fd,d2V_formula")?;
        for c in &r.weights {
            for row in &c.fd.rows {
                write!(w, "{}", c.id)?;
                for x in row {
                    write!(w, ",{x:.17e}")?;
                }
                writeln!(w)?;
            }
        }
        w.flush()
    })();
    res.map_err(|e| io_failure(&out.file("virial_fd.csv"), e))?;
    let mut w = out.writer("virial_bounds.csv")?;
    let res = (|| -> std::io::Result<()> {
        writeln!(w, "weight,t,d2V,bound,holds")?;
        for b in &r.bounds {
            let holds = b.holds.map_or("", |h| if h { "true" } else { "false" });
            writeln!(w, "{},{:.17e},{:.17e},{},{holds}", b.id, b.t, b.d2v, opt(b.bound))?;
        }
        w.flush()
    })();
    res.map_err(|e| io_failure(&out.file("virial_bounds.csv"), e))
}
