use critspec::noise::phase_variance;
use critspec::oracle::{monte_carlo_phi_squared, simulate_ensemble, DiscreteModeNoise, DEFAULT_MODE_CAP};

use super::Context;
use crate::error::CliError;
use crate::table::{Report, Table};
use crate::Output;

pub fn run(ctx: &Context) -> Result<Output, CliError> {
    let l = ctx.loaded;
    let model = l.model()?;
    let geom = l.geometry()?;
    let spec = l.config.oracle.as_ref().ok_or_else(|| CliError::Config("config needs an `oracle` block".into()))?;
    if spec.traces < 2 {
        return Err(CliError::Config("oracle needs at least two traces".into()));
    }
    if !(spec.tau > 0.0 && spec.tau.is_finite()) {
        return Err(CliError::Config("oracle tau must be positive".into()));
    }
    let seq = l.sequence()?.at(spec.tau)?;
    let dt = spec.dt.unwrap_or(spec.tau / (100.0 * seq.pulse_count().max(1) as f64));
    let traces = simulate_ensemble(model, geom, &spec.lattice, spec.tau, dt, ctx.seed, spec.traces, spec.mode_cap.unwrap_or(DEFAULT_MODE_CAP))?;
    let mc = monte_carlo_phi_squared(&traces, &seq)?;
    let noise = DiscreteModeNoise::new(model, geom, &spec.lattice)?;
    let quad = phase_variance(&noise, &seq, l.config.tolerances.omega)?;
    let z = if mc.stderr > 0.0 {
        (mc.mean - quad.value) / mc.stderr
    } else if mc.mean == quad.value {
        0.0
    } else {
        f64::INFINITY
    };

    let mut r = Report::new(ctx.header("oracle"));
    r.put("sequence", format!("{:?}", seq.kind));
    r.num("tau", spec.tau);
    r.num("dt", dt);
    r.put("lattice", spec.lattice.size);
    r.num("mc_mean", mc.mean);
    r.num("mc_stderr", mc.stderr);
    r.num("quadrature", quad.value);
    r.num("quadrature_err", quad.error);
    r.num("z_score", z);
    r.put("traces", mc.count);
    r.put("seed", ctx.seed);

    let mut extra = Vec::new();
    if let Some(p) = &spec.traces_out {
        let path = l.resolve(p);
        let mut t = Table::new(ctx.header("oracle traces"), &["trace", "t", "b"]);
        for tr in &traces {
            for (k, &b) in tr.samples.iter().enumerate() {
                t.rows.push(vec![tr.index as f64, k as f64 * tr.dt, b]);
            }
        }
        r.put("traces_out", path.display());
        extra.push((path, t.render()));
    }
    Ok(Output { main: r.render(), extra })
}
