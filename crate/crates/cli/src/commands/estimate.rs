use critspec::noise::materials::cri3_t2_estimate;

use super::Context;
use crate::config::{MaterialSource, MaterialSpec};
use crate::error::CliError;
use crate::table::{fmt_num, Report};
use crate::Output;

pub fn run(ctx: &Context) -> Result<Output, CliError> {
    let l = ctx.loaded;
    let e = l.config.estimate.as_ref().ok_or_else(|| CliError::Config("config needs an `estimate` block".into()))?;
    let spec: MaterialSpec = match &e.material {
        MaterialSource::Inline(m) => *m,
        MaterialSource::File(p) => {
            let path = l.resolve(p);
            let text = std::fs::read_to_string(&path).map_err(|err| CliError::Io(format!("{}: {err}", path.display())))?;
            serde_json::from_str(&text).map_err(|err| CliError::Config(format!("{}: {err}", path.display())))?
        }
    };
    let m = spec.to_si();
    let rep = cri3_t2_estimate(&m, e.temperature_k, e.d_nm * 1e-9, e.xi_nm * 1e-9)?;
    let mut r = Report::new(ctx.header("estimate-t2"));
    r.num("t2_s", rep.t2);
    r.num("t2_us", rep.t2 * 1e6);
    r.num("rate_per_s", rep.rate);
    r.num("coupling_sq_per_t2_s2", rep.coupling_sq);
    r.num("field_sq_t2", rep.field_sq);
    r.num("correlation_time_s", rep.correlation_time);
    r.put("formula", &rep.formula);
    r.put(
        "inputs",
        format!(
            "J = {} J, a = {} m, S = {}, g_s = {}, g_probe = {}, T = {} K, d = {} m, xi = {} m",
            fmt_num(m.j),
            fmt_num(m.a),
            fmt_num(m.s),
            fmt_num(m.g_s),
            fmt_num(m.g_probe),
            fmt_num(e.temperature_k),
            fmt_num(e.d_nm * 1e-9),
            fmt_num(e.xi_nm * 1e-9)
        ),
    );
    Ok(Output { main: r.render(), extra: Vec::new() })
}
