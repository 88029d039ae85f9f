use inls_core::scenarios::build_scenario;

use super::{config_json, load, out_dir, overlay_grid, overlay_params, scenario_spec, Ctx};
use crate::output::RunInfo;
use crate::{CliError, Common, GridArgs, ParamArgs};

pub const SCHEMA: &str = "inls.provenance.v1";

pub fn run(ctx: &Ctx, common: Common, p: ParamArgs, g: GridArgs) -> Result<u8, CliError> {
    let mut cfg = load(&common)?;
    overlay_params(&mut cfg, p);
    overlay_grid(&mut cfg, g);
    let spec = scenario_spec(&cfg)?;
    spec.validate()?;
    let out = out_dir(&cfg)?;
    let mut info = RunInfo::new("scenario", config_json(&cfg));

    let s = build_scenario(&spec)?;
    out.field("scenario.dat", &s.field, &s.params)?;
    out.json("provenance.json", SCHEMA, &s.provenance)?;
    info.files = vec!["scenario.dat".into(), "provenance.json".into()];
    if !s.provenance.hypothesis_met {
        let msg = format!("constructed data does not meet the {:?} hypothesis", s.provenance.hypothesis);
        ctx.say(&cfg, 0, &msg);
        info.notes.push(msg);
    }
    if s.params.b_zero_test_mode {
        info.notes.push(super::ground_state::B_ZERO_NOTE.into());
    }
    info.write_metadata(&out, 0)?;
    Ok(0)
}
