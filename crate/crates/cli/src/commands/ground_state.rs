use inls_core::ground_state::{solve_ground_state, DEFAULT_TOL};

use super::{config_json, grid, load, out_dir, overlay_grid, overlay_params, params, Ctx};
use crate::config::set;
use crate::output::RunInfo;
use crate::{CliError, Common, GridArgs, ParamArgs};

pub const SCHEMA: &str = "inls.ground-state.v1";
pub const B_ZERO_NOTE: &str = "b=0 test mode: classical NLS admitted for closed-form comparison";

pub fn run(ctx: &Ctx, common: Common, p: ParamArgs, g: GridArgs, tol: Option<f64>) -> Result<u8, CliError> {
    let mut cfg = load(&common)?;
    overlay_params(&mut cfg, p);
    overlay_grid(&mut cfg, g);
    set(&mut cfg.solver.tol, tol);
    let params = params(&cfg)?;
    params.check_subcritical_energy()?;
    if !params.is_focusing() {
        return Err(CliError::Config("ground states need the focusing sign mu = +1".into()));
    }
    let tol = cfg.solver.tol.unwrap_or(DEFAULT_TOL);
    if !(tol > 0.0) {
        return Err(CliError::Config(format!("solver.tol = {tol} must be positive")));
    }
    let grid = grid(&cfg, params.d, 20.0, 4096)?;
    let out = out_dir(&cfg)?;
    let mut info = RunInfo::new("ground-state", config_json(&cfg));

    ctx.say(&cfg, 1, format!("solving for Q: d={} b={} alpha={} on n={}", params.d, params.b, params.alpha, grid.n()));
    let q = solve_ground_state(&params, grid, tol)?;
    let summary = q.summary();
    ctx.say(&cfg, 1, format!("converged, residual {:e}", summary.residuals.solver));

    out.field("ground_state.dat", &q.field(), &params)?;
    out.json("ground_state.json", SCHEMA, &summary)?;
    info.files = vec!["ground_state.dat".into(), "ground_state.json".into()];
    if params.b_zero_test_mode {
        info.notes.push(B_ZERO_NOTE.into());
    }
    info.write_metadata(&out, 0)?;
    Ok(0)
}
