use std::path::PathBuf;

use critspec::collapse::{classical_collapse, quantum_collapse, scaled_points, CollapseBounds, CollapseMode, CollapseOptions, SweepGrid};

use super::sweep::sweep_records;
use super::Context;
use crate::error::CliError;
use crate::table::{fmt_num, Report, Table};
use crate::Output;

fn list(v: &[String]) -> String {
    if v.is_empty() {
        "none".into()
    } else {
        v.join(",")
    }
}

pub fn run(ctx: &Context) -> Result<Output, CliError> {
    let l = ctx.loaded;
    let spec = l.config.collapse.as_ref().ok_or_else(|| CliError::Config("config needs a `collapse` block".into()))?;
    let data = l.resolve(&spec.data);
    let text = std::fs::read_to_string(&data).map_err(|e| CliError::Io(format!("{}: {e}", data.display())))?;
    let table = Table::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", data.display())))?;
    let grid = SweepGrid::new(sweep_records(&table)?).map_err(|e| CliError::Config(format!("{}: {e}", data.display())))?;
    let mode = spec.mode();
    let defaults = match mode {
        CollapseMode::Classical => CollapseBounds::classical(&grid),
        CollapseMode::Quantum => CollapseBounds::quantum(&grid),
    };
    let bounds = spec.bounds(defaults);
    bounds.validate().map_err(|e| CliError::Config(format!("bounds: {e}")))?;
    let d = CollapseOptions::default();
    let options = CollapseOptions {
        seed: ctx.seed,
        starts: spec.starts.unwrap_or(d.starts),
        bootstrap: spec.bootstrap.unwrap_or(d.bootstrap),
        max_evaluations: spec.max_evaluations.unwrap_or(d.max_evaluations),
        neighbours: spec.neighbours,
        grouping: spec.grouping(),
    };
    let result = match mode {
        CollapseMode::Classical => classical_collapse(&grid, &bounds, &options)?,
        CollapseMode::Quantum => quantum_collapse(&grid, &bounds, &options)?,
    };

    let mut r = Report::new(ctx.header("collapse"));
    r.put("mode", format!("{mode:?}").to_lowercase());
    r.put("data", data.display());
    r.put("records", grid.records().len());
    let names = result.names();
    let (p, se) = (result.params(), result.stderr());
    for i in 0..5 {
        r.num(names[i], p[i]);
    }
    for i in 0..5 {
        r.num(&format!("{}_stderr", names[i]), se[i]);
    }
    r.num("residual", result.residual);
    for (i, row) in result.covariance.iter().enumerate() {
        r.put(&format!("covariance_{}", names[i]), row.iter().map(|&x| fmt_num(x)).collect::<Vec<_>>().join(" "));
    }
    r.put("converged", result.converged);
    r.put("clamped", list(&result.clamped));
    r.put("degenerate", list(&result.degenerate));
    r.put("evaluations", result.evaluations);
    r.put("bootstrap_replicas", result.bootstrap_replicas);
    r.put("seed", ctx.seed);

    let points_path: Option<PathBuf> = match (&spec.points, ctx.out) {
        (Some(p), _) => Some(l.resolve(p)),
        (None, Some(out)) => {
            let mut s = out.as_os_str().to_owned();
            s.push(".points.csv");
            Some(PathBuf::from(s))
        }
        (None, None) => None,
    };
    let mut extra = Vec::new();
    if let Some(path) = points_path {
        let pts = scaled_points(&grid, mode, spec.grouping(), p);
        let dims = pts.first().map_or(0, |q| q.x.len());
        let xs: Vec<String> = (0..dims).map(|i| format!("x{i}")).collect();
        let mut header: Vec<&str> = xs.iter().map(String::as_str).collect();
        header.extend(["y", "group", "branch"]);
        let mut t = Table::new(ctx.header("collapse points"), &header);
        t.rows = pts
            .iter()
            .map(|q| {
                let mut row = q.x.clone();
                row.extend([q.y, q.group as f64, q.branch as f64]);
                row
            })
            .collect();
        r.put("points", path.display());
        extra.push((path, t.render()));
    }
    Ok(Output { main: r.render(), extra })
}
