use critspec::collapse::SweepRecord;
use critspec::filters::GeometryConfig;
use critspec::noise::NoiseEngine;
use rayon::prelude::*;

use super::decohere::phase_curve;
use super::Context;
use crate::config::model_at;
use crate::error::CliError;
use crate::table::Table;
use crate::Output;

/// Renders records in long form; the lambda column appears when present.
pub fn sweep_table(comments: Vec<String>, records: &[SweepRecord]) -> Table {
    let with_lambda = records.first().is_some_and(|r| r.lambda.is_some());
    let header: &[&str] = if with_lambda { &["d", "tau", "T", "lambda", "phi_sq", "err"] } else { &["d", "tau", "T", "phi_sq", "err"] };
    let mut t = Table::new(comments, header);
    t.rows = records
        .iter()
        .map(|r| {
            let mut row = vec![r.d, r.tau, r.temperature];
            row.extend(r.lambda);
            row.extend([r.phi_sq, r.err]);
            row
        })
        .collect();
    t
}

/// Reads records back from a sweep table.
pub fn sweep_records(t: &Table) -> Result<Vec<SweepRecord>, CliError> {
    let col = |name: &str| t.column(name).ok_or_else(|| CliError::Config(format!("sweep file lacks a `{name}` column")));
    let (d, tau, temp, phi, err) = (col("d")?, col("tau")?, col("T")?, col("phi_sq")?, col("err")?);
    let lambda = t.column("lambda");
    Ok(t.rows
        .iter()
        .map(|r| SweepRecord { d: r[d], tau: r[tau], temperature: r[temp], lambda: lambda.map(|i| r[i]), phi_sq: r[phi], err: r[err] })
        .collect())
}

pub fn run(ctx: &Context) -> Result<Output, CliError> {
    let l = ctx.loaded;
    let base = l.model()?;
    let geom = l.geometry()?;
    let taus = l.taus()?;
    let seq = l.sequence()?.at(taus[0])?;
    let sw = &l.config.sweep;
    let ds = match &sw.d {
        Some(a) => a.values("d")?,
        None => vec![geom.d],
    };
    let temps = match &sw.temperature {
        Some(a) => a.values("temperature")?,
        None => vec![base.temperature()],
    };
    let lambdas: Vec<Option<f64>> = match &sw.lambda {
        Some(a) => a.values("lambda")?.into_iter().map(Some).collect(),
        None => vec![None],
    };
    let mut combos = Vec::with_capacity(ds.len() * temps.len() * lambdas.len());
    for &d in &ds {
        for &t in &temps {
            for &lam in &lambdas {
                combos.push((d, t, lam));
            }
        }
    }
    let tol = l.config.tolerances;
    let engine = NoiseEngine::new(tol.q, tol.omega)?;
    let critical = l.config.critical.as_ref();
    let curves = combos
        .par_iter()
        .map(|&(d, t, lam)| {
            let m = model_at(base, critical, t, lam)?;
            let g = GeometryConfig { d, ..geom.clone() };
            g.validate().map_err(|e| CliError::Config(format!("geometry at d = {d}: {e}")))?;
            let curve = phase_curve(&engine, &taus, &seq, &m, &g)?;
            Ok(curve
                .points
                .iter()
                .map(|p| SweepRecord { d, tau: p.tau, temperature: t, lambda: lam, phi_sq: p.phi_sq, err: p.error })
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let records: Vec<SweepRecord> = curves.into_iter().flatten().collect();
    let mut comments = ctx.header("sweep");
    comments.push(format!("sequence: {:?}, kappa {}", seq.kind, seq.kappa));
    Ok(Output { main: sweep_table(comments, &records).render(), extra: Vec::new() })
}
