pub mod evolve;
pub mod ground_state;
pub mod scenario;
pub mod sweep;
pub mod virial_check;

use std::sync::Arc;

use inls_core::cutoffs::{build_1d_cutoff, build_radial_cutoff};
use inls_core::evolution::EvolveConfig;
use inls_core::scenarios::{DataSpec, Family, GridSpec, Hypothesis, ParamSpec, ScenarioSpec, TargetSpec};
use inls_core::virial::Weight;
use inls_core::{PhysParams, RadialGrid};

use crate::config::{output_dir, set, FileConfig};
use crate::output::OutDir;
use crate::{CliError, Common, EvolveArgs, GridArgs, ParamArgs};

pub struct Ctx {
    pub verbose: u8,
}

impl Ctx {
    pub fn say(&self, cfg: &FileConfig, level: u8, msg: impl AsRef<str>) {
        if self.verbose.max(cfg.output.verbosity.unwrap_or(0)) >= level {
            eprintln!("inls: {}", msg.as_ref());
        }
    }
}

/// Loads the config file and lays the shared flags over it.
pub fn load(common: &Common) -> Result<FileConfig, CliError> {
    let mut cfg = FileConfig::load_opt(common.config.as_deref())?;
    set(&mut cfg.output.dir, common.out.clone());
    Ok(cfg)
}

pub fn out_dir(cfg: &FileConfig) -> Result<OutDir, CliError> {
    OutDir::create(output_dir(None, &cfg.output))
}

pub fn overlay_params(cfg: &mut FileConfig, p: ParamArgs) {
    set(&mut cfg.params.d, p.d);
    set(&mut cfg.params.b, p.b);
    set(&mut cfg.params.alpha, p.alpha);
    set(&mut cfg.params.mu, p.mu);
}

pub fn overlay_grid(cfg: &mut FileConfig, g: GridArgs) {
    set(&mut cfg.grid.r_max, g.r_max);
    set(&mut cfg.grid.n, g.n);
}

pub fn overlay_evolve(cfg: &mut FileConfig, e: EvolveArgs) {
    let s = &mut cfg.evolve;
    set(&mut s.input, e.input);
    set(&mut s.dt0, e.dt0);
    set(&mut s.t_max, e.t_max);
    set(&mut s.cfl_safety, e.cfl_safety);
    set(&mut s.blowup_gradient_factor, e.blowup_gradient_factor);
    set(&mut s.mass_drift_tol, e.mass_drift_tol);
    set(&mut s.record_every, e.record_every);
    set(&mut s.checkpoint_every, e.checkpoint_every);
    if !e.weights.is_empty() {
        s.weights = Some(e.weights);
    }
}

fn missing(key: &str) -> CliError {
    CliError::Config(format!("missing {key} (config file or flag)"))
}

pub fn param_spec(cfg: &FileConfig) -> Result<ParamSpec, CliError> {
    let p = &cfg.params;
    Ok(ParamSpec {
        d: p.d.ok_or_else(|| missing("params.d"))?,
        b: p.b.ok_or_else(|| missing("params.b"))?,
        alpha: p.alpha,
        mu: p.mu.unwrap_or(1.0),
    })
}

pub fn params(cfg: &FileConfig) -> Result<PhysParams, CliError> {
    Ok(param_spec(cfg)?.build()?)
}

pub fn grid_spec(cfg: &FileConfig, default_r_max: f64, default_n: usize) -> GridSpec {
    GridSpec { r_max: cfg.grid.r_max.unwrap_or(default_r_max), n: cfg.grid.n.unwrap_or(default_n) }
}

pub fn grid(cfg: &FileConfig, d: usize, default_r_max: f64, default_n: usize) -> Result<Arc<RadialGrid>, CliError> {
    Ok(grid_spec(cfg, default_r_max, default_n).build(d)?)
}

pub fn evolve_config(cfg: &FileConfig) -> Result<EvolveConfig, CliError> {
    let s = &cfg.evolve;
    let d = EvolveConfig::default();
    let c = EvolveConfig {
        dt0: s.dt0.unwrap_or(d.dt0),
        t_max: s.t_max.unwrap_or(d.t_max),
        cfl_safety: s.cfl_safety.unwrap_or(d.cfl_safety),
        blowup_gradient_factor: s.blowup_gradient_factor.unwrap_or(d.blowup_gradient_factor),
        mass_drift_tol: s.mass_drift_tol.unwrap_or(d.mass_drift_tol),
        record_every: s.record_every.unwrap_or(d.record_every),
        checkpoint_every: s.checkpoint_every.unwrap_or(d.checkpoint_every),
    };
    c.validate()?;
    Ok(c)
}

/// `quadratic`, `radial:<R>` or `1d`.
pub fn parse_weight(s: &str) -> Result<Weight, CliError> {
    let bad = || CliError::Config(format!("unknown weight '{s}' (quadratic, radial:<R> or 1d)"));
    match s.trim() {
        "quadratic" => Ok(Weight::Quadratic),
        "1d" => Ok(Weight::Cutoff(build_1d_cutoff())),
        other => {
            let r: f64 = other.strip_prefix("radial:").ok_or_else(bad)?.parse().map_err(|_| bad())?;
            Ok(Weight::Cutoff(build_radial_cutoff(r)?))
        }
    }
}

pub fn weights(list: &Option<Vec<String>>) -> Result<Vec<Weight>, CliError> {
    list.iter().flatten().map(|s| parse_weight(s)).collect()
}

fn default_hypothesis(family: Family) -> Hypothesis {
    match family {
        Family::ScaledGroundState => Hypothesis::AboveThreshold,
        Family::Remark41 => Hypothesis::PositiveEnergyRemark41,
        Family::Gaussian | Family::CustomFile => Hypothesis::NegativeEnergy,
    }
}

/// A scenario from the `[params]`, `[grid]`, `[data]` and `[target]` sections. Without a
/// target the hypothesis follows from the data family.
pub fn scenario_spec(cfg: &FileConfig) -> Result<ScenarioSpec, CliError> {
    let data = cfg.data.as_ref().ok_or_else(|| missing("[data] section"))?;
    let r_max = cfg.grid.r_max.ok_or_else(|| missing("grid.r_max"))?;
    let n = cfg.grid.n.ok_or_else(|| missing("grid.n"))?;
    let hypothesis = cfg.target.as_ref().map_or_else(|| default_hypothesis(data.family), |t| t.hypothesis);
    Ok(ScenarioSpec {
        params: param_spec(cfg)?,
        grid: GridSpec { r_max, n },
        data: DataSpec {
            family: data.family,
            amplitude: data.amplitude,
            width: data.width.unwrap_or(1.0),
            phase: data.phase.unwrap_or(0.0),
            file: data.file.clone(),
            e_target: data.e_target,
        },
        target: TargetSpec { hypothesis },
    })
}

pub fn config_json(cfg: &FileConfig) -> serde_json::Value {
    serde_json::to_value(cfg).unwrap_or(serde_json::Value::Null)
}
