use std::io::{BufReader, Write};

use inls_core::evolution::{evolve, BlowupReason, BlowupVerdict, TrajectoryRecord};
use inls_core::scenarios::build_scenario;
use inls_core::{Field, Observables, PhysParams};
use serde::{Deserialize, Serialize};

use super::{config_json, evolve_config, load, out_dir, overlay_evolve, overlay_grid, overlay_params, scenario_spec, weights, Ctx};
use crate::config::FileConfig;
use crate::output::{io_failure, OutDir, RunInfo};
use crate::{CliError, Common, EvolveArgs, GridArgs, ParamArgs};

pub const SCHEMA: &str = "inls.evolve.v1";
pub const CHECKPOINT_SCHEMA: &str = "inls.checkpoints.v1";

#[derive(Debug, Serialize)]
pub struct EvolveSummary {
    pub params: PhysParams,
    pub verdict: BlowupVerdict,
    pub termination: BlowupReason,
    pub t_end: f64,
    pub steps: usize,
    pub dt_min: f64,
    pub gradient_factor: f64,
    pub records: usize,
    pub max_rel_mass_drift: f64,
    pub max_rel_energy_drift: f64,
    pub initial: Observables,
    pub last: Observables,
}

/// `checkpoints/index.json`: times and field files, relative to the index.
#[derive(Debug, Serialize, Deserialize)]
pub struct CheckpointIndex {
    pub params: PhysParams,
    pub times: Vec<f64>,
    pub files: Vec<String>,
}

fn rel_drift(series: impl Iterator<Item = f64>, reference: f64) -> f64 {
    let scale = reference.abs();
    series.map(|v| (v - reference).abs() / if scale > 0.0 { scale } else { 1.0 }).fold(0.0, f64::max)
}

/// Initial data from `evolve.input`, otherwise from the scenario sections.
pub fn initial_data(cfg: &FileConfig) -> Result<(PhysParams, Field), CliError> {
    if let Some(path) = &cfg.evolve.input {
        let f = std::fs::File::open(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let (params, field) = Field::read_columnar(BufReader::new(f))
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let p = &cfg.params;
        let clash = p.d.is_some_and(|d| d != params.d)
            || p.b.is_some_and(|b| b != params.b)
            || p.alpha.is_some_and(|a| a != params.alpha)
            || p.mu.is_some_and(|m| m != params.mu);
        if clash {
            return Err(CliError::Config(format!("{} was written for different parameters", path.display())));
        }
        return Ok((params, field));
    }
    let spec = scenario_spec(cfg)?;
    let s = build_scenario(&spec)?;
    Ok((s.params, s.field))
}

pub fn summarize(params: PhysParams, rec: &TrajectoryRecord) -> EvolveSummary {
    let o0 = rec.observables[0];
    EvolveSummary {
        params,
        verdict: rec.verdict.clone(),
        termination: rec.termination,
        t_end: *rec.times.last().unwrap_or(&0.0),
        steps: rec.steps,
        dt_min: rec.dt_min,
        gradient_factor: rec.gradient_factor,
        records: rec.times.len(),
        max_rel_mass_drift: rel_drift(rec.observables.iter().map(|o| o.mass), o0.mass),
        max_rel_energy_drift: rel_drift(rec.observables.iter().map(|o| o.energy), o0.energy),
        initial: o0,
        last: *rec.observables.last().unwrap_or(&o0),
    }
}

/// Exit code for a finished run: 3 on blowup, 2 when the mass guard aborted it.
pub fn exit_code(v: &BlowupVerdict) -> u8 {
    if v.blew_up {
        3
    } else if v.reason == BlowupReason::MassDriftAbort {
        2
    } else {
        0
    }
}

fn write_growth(out: &OutDir, rec: &TrajectoryRecord) -> Result<(), CliError> {
    let mut w = out.writer("growth.csv")?;
    let res = (|| -> std::io::Result<()> {
        writeln!(w, "t,grad_norm")?;
        for [t, g] in &rec.growth_samples {
            writeln!(w, "{t:.17e},{g:.17e}")?;
        }
        w.flush()
    })();
    res.map_err(|e| io_failure(&out.file("growth.csv"), e))
}

fn write_checkpoints(out: &OutDir, params: &PhysParams, rec: &TrajectoryRecord) -> Result<Vec<String>, CliError> {
    let mut files = Vec::new();
    for (i, c) in rec.checkpoints.iter().enumerate() {
        let name = format!("cp_{i:05}.dat");
        out.field(&format!("checkpoints/{name}"), &c.field, params)?;
        files.push(name);
    }
    let index = CheckpointIndex { params: *params, times: rec.checkpoint_times(), files };
    out.json("checkpoints/index.json", CHECKPOINT_SCHEMA, &index)?;
    Ok(index.files)
}

pub fn run(ctx: &Ctx, common: Common, p: ParamArgs, g: GridArgs, e: EvolveArgs) -> Result<u8, CliError> {
    let mut cfg = load(&common)?;
    overlay_params(&mut cfg, p);
    overlay_grid(&mut cfg, g);
    overlay_evolve(&mut cfg, e);
    let config = evolve_config(&cfg)?;
    let weights = weights(&cfg.evolve.weights)?;
    let (params, field) = initial_data(&cfg)?;
    let out = out_dir(&cfg)?;
    let mut info = RunInfo::new("evolve", config_json(&cfg));

    ctx.say(&cfg, 1, format!("evolving to t = {} with dt0 = {} on n = {}", config.t_max, config.dt0, field.grid().n()));
    let rec = evolve(&field, &params, &config, &weights)?;
    ctx.say(&cfg, 1, format!("{} after {} steps", rec.verdict.reason, rec.steps));

    let mut w = out.writer("trajectory.csv")?;
    rec.write_csv(&mut w)?;
    w.flush().map_err(|e| io_failure(&out.file("trajectory.csv"), e))?;
    write_growth(&out, &rec)?;
    out.json("verdict.json", SCHEMA, &summarize(params, &rec))?;
    info.files = vec!["trajectory.csv".into(), "growth.csv".into(), "verdict.json".into()];
    if !rec.checkpoints.is_empty() {
        for f in write_checkpoints(&out, &params, &rec)? {
            info.files.push(format!("checkpoints/{f}"));
        }
        info.files.push("checkpoints/index.json".into());
    }
    if params.b_zero_test_mode {
        info.notes.push(super::ground_state::B_ZERO_NOTE.into());
    }
    if rec.verdict.blew_up {
        info.notes.push(rec.verdict.disclaimer.clone());
    }
    let code = exit_code(&rec.verdict);
    info.write_metadata(&out, code as i32)?;
    Ok(code)
}
