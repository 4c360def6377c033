use critspec::noise::noise_spectral_density_with;
use rayon::prelude::*;

use super::Context;
use crate::error::CliError;
use crate::table::Table;
use crate::Output;

pub fn run(ctx: &Context) -> Result<Output, CliError> {
    let l = ctx.loaded;
    let model = l.model()?;
    let geom = l.geometry()?;
    let omegas = l.config.omega.as_ref().ok_or_else(|| CliError::Config("spectrum needs an `omega` axis".into()))?.values("omega")?;
    let tol = l.config.tolerances.q;
    let rows = omegas
        .par_iter()
        .map(|&w| noise_spectral_density_with(w, model, geom, tol).map(|e| vec![w, e.value, e.error]))
        .collect::<Result<Vec<_>, _>>()?;
    let mut t = Table::new(ctx.header("spectrum"), &["omega", "noise_density", "err_estimate"]);
    t.rows = rows;
    Ok(Output { main: t.render(), extra: Vec::new() })
}
