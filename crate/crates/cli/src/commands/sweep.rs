use inls_core::evolution::{evolve, EvolveConfig};
use inls_core::parallel;
use inls_core::scenarios::{build_scenario, Prediction, ScenarioSpec};
use serde::Serialize;

use super::{config_json, evolve_config, load, out_dir, overlay_evolve, scenario_spec, Ctx};
use crate::config::FileConfig;
use crate::output::{io_failure, RunInfo};
use crate::{CliError, Common, EvolveArgs};

/// One run of the sweep; empty cells mean "not available for this run".
#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub index: usize,
    pub d: usize,
    pub b: f64,
    pub alpha: Option<f64>,
    pub amplitude: Option<f64>,
    pub width: f64,
    pub status: &'static str,
    pub reason: Option<String>,
    pub blew_up: Option<bool>,
    pub t_detect: Option<f64>,
    pub growth_exponent: Option<f64>,
    pub energy: Option<f64>,
    pub prediction: Option<Prediction>,
    pub below_energy_threshold: Option<bool>,
    pub above_gradient_threshold: Option<bool>,
    pub hypothesis_met: Option<bool>,
    pub error: Option<String>,
}

/// The run grid, `b` outermost and amplitude innermost. Axes left out keep the base value.
fn expand(cfg: &FileConfig, base: &ScenarioSpec) -> Result<Vec<ScenarioSpec>, CliError> {
    let sweep = cfg.sweep.clone().unwrap_or_default();
    if sweep.amplitude.is_none() && sweep.width.is_none() && sweep.b.is_none() {
        return Err(CliError::Config("empty sweep grid: give [sweep] amplitude, width or b".into()));
    }
    let axis = |v: Option<Vec<f64>>, name: &str, fallback: Option<f64>| -> Result<Vec<Option<f64>>, CliError> {
        match v {
            Some(v) if v.is_empty() => Err(CliError::Config(format!("empty sweep grid: sweep.{name} has no values"))),
            Some(v) => Ok(v.into_iter().map(Some).collect()),
            None => Ok(vec![fallback]),
        }
    };
    let bs = axis(sweep.b, "b", Some(base.params.b))?;
    let widths = axis(sweep.width, "width", Some(base.data.width))?;
    let amps = axis(sweep.amplitude, "amplitude", base.data.amplitude)?;
    let mut specs = Vec::with_capacity(bs.len() * widths.len() * amps.len());
    for b in &bs {
        for w in &widths {
            for a in &amps {
                let mut s = base.clone();
                s.params.b = b.expect("b always set");
                s.data.width = w.expect("width always set");
                s.data.amplitude = *a;
                specs.push(s);
            }
        }
    }
    Ok(specs)
}

fn one_run(index: usize, spec: &ScenarioSpec, config: &EvolveConfig) -> Row {
    let mut row = Row {
        index,
        d: spec.params.d,
        b: spec.params.b,
        alpha: spec.params.alpha,
        amplitude: spec.data.amplitude,
        width: spec.data.width,
        status: "error",
        reason: None,
        blew_up: None,
        t_detect: None,
        growth_exponent: None,
        energy: None,
        prediction: None,
        below_energy_threshold: None,
        above_gradient_threshold: None,
        hypothesis_met: None,
        error: None,
    };
    let scenario = match build_scenario(spec) {
        Ok(s) => s,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    let c = &scenario.provenance.classify;
    row.alpha = Some(scenario.params.alpha);
    row.amplitude = scenario.provenance.amplitude;
    row.energy = Some(c.observables.energy);
    row.prediction = Some(c.prediction);
    row.below_energy_threshold = c.below_energy_threshold;
    row.above_gradient_threshold = c.above_gradient_threshold;
    row.hypothesis_met = Some(scenario.provenance.hypothesis_met);
    match evolve(&scenario.field, &scenario.params, config, &[]) {
        Ok(rec) => {
            let v = rec.verdict;
            row.status = "ok";
            row.reason = Some(v.reason.to_string());
            row.blew_up = Some(v.blew_up);
            row.t_detect = v.t_detect;
            row.growth_exponent = v.growth_exponent_estimate;
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

pub fn run(ctx: &Ctx, common: Common, e: EvolveArgs) -> Result<u8, CliError> {
    let mut cfg = load(&common)?;
    overlay_evolve(&mut cfg, e);
    if cfg.evolve.input.is_some() {
        return Err(CliError::Config("sweeps build their data from [data]; evolve.input is not used".into()));
    }
    let config = evolve_config(&cfg)?;
    let base = scenario_spec(&cfg)?;
    let specs = expand(&cfg, &base)?;
    let out = out_dir(&cfg)?;
    let mut info = RunInfo::new("sweep", config_json(&cfg));
    ctx.say(&cfg, 1, format!("{} runs", specs.len()));

    let indexed: Vec<(usize, &ScenarioSpec)> = specs.iter().enumerate().collect();
    let rows = parallel::map(&indexed, |(i, s)| one_run(*i, s, &config));

    let path = out.file("sweep.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::Failure(format!("{}: {e}", path.display())))?;
    for r in &rows {
        w.serialize(r).map_err(|e| CliError::Failure(format!("{}: {e}", path.display())))?;
    }
    w.flush().map_err(|e| io_failure(&path, e))?;
    info.files = vec!["sweep.csv".into()];
    let failed = rows.iter().filter(|r| r.status != "ok").count();
    if failed > 0 {
        info.notes.push(format!("{failed} of {} runs failed", rows.len()));
    }
    let code = if failed == rows.len() { 2 } else { 0 };
    info.write_metadata(&out, code as i32)?;
    Ok(code)
}
