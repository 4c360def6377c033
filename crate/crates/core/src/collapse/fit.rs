use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Uniform};
use rayon::prelude::*;

use crate::error::{Error, Result};

use super::quality::{grouped_quality, ScaledPoint};
use super::simplex::{nelder_mead, radical_inverse, Descent, PRIMES};
use super::{
    Axis, CollapseBounds, CollapseMode, CollapseOptions, CollapseResult, Grouping, Interval, SweepGrid, SweepRecord, PARAM_NAMES,
};

const FTOL: f64 = 1e-8;
const XTOL: f64 = 1e-6;
const INSENSITIVE: f64 = 1e-6;
/// Halton points screened per descent.
const SCREEN: usize = 4;

/// Points closer than this (relative) to the critical point are left out.
const CRITICAL_GAP: f64 = 1e-12;

#[derive(Clone)]
struct Problem {
    mode: CollapseMode,
    grouping: Grouping,
    records: Vec<SweepRecord>,
    curves: Vec<usize>,
    bounds: [Interval; 5],
    free: Vec<usize>,
    neighbours: Option<usize>,
    tau_swept: bool,
    d_swept: bool,
}

impl Problem {
    fn full(&self, v: &[f64]) -> [f64; 5] {
        let mut p: [f64; 5] = std::array::from_fn(|i| self.bounds[i].lo);
        for (&k, &x) in self.free.iter().zip(v) {
            p[k] = x.clamp(self.bounds[k].lo, self.bounds[k].hi);
        }
        p
    }

    fn points(&self, p: &[f64; 5]) -> Vec<ScaledPoint> {
        let [nu, eta, z, crit, amp] = *p;
        let mut out = Vec::with_capacity(self.records.len());
        for (r, &group) in self.records.iter().zip(&self.curves) {
            let (ln_d, ln_tau, ln_t) = (r.d.ln(), r.tau.ln(), r.temperature.ln());
            match self.mode {
                CollapseMode::Classical => {
                    let gap = r.temperature - crit;
                    if gap.abs() <= CRITICAL_GAP * crit.abs().max(r.temperature) {
                        continue;
                    }
                    let ln_xi = amp.ln() - nu * gap.abs().ln();
                    let x1 = match self.grouping {
                        Grouping::DistanceTime => ln_tau - z * ln_d,
                        Grouping::CorrelationTime => ln_tau - z * ln_xi,
                    };
                    let y = r.phi_sq.ln() + (2.0 + eta - z) * ln_d - ln_t - ln_tau;
                    out.push(ScaledPoint { x: vec![x1, ln_d - ln_xi], y, group, branch: if gap > 0.0 { 1 } else { -1 } });
                }
                CollapseMode::Quantum => {
                    let lambda = r.lambda.unwrap_or(f64::NAN);
                    let gap = lambda - crit;
                    if !(gap.abs() > CRITICAL_GAP * crit.abs().max(lambda)) {
                        continue;
                    }
                    let ln_delta = amp.ln() + z * nu * gap.abs().ln();
                    let mut x = Vec::with_capacity(3);
                    if self.tau_swept {
                        x.push(ln_delta + ln_tau);
                    }
                    if self.d_swept {
                        x.push(ln_delta + ln_d / z);
                    }
                    x.push(ln_delta - ln_t);
                    let y = r.phi_sq.ln() - (2.0 + eta - z) / z * ln_t;
                    out.push(ScaledPoint { x, y, group, branch: if gap > 0.0 { 1 } else { -1 } });
                }
            }
        }
        out
    }

    fn residual(&self, p: &[f64; 5]) -> Result<f64> {
        grouped_quality(&self.points(p), self.neighbours)
    }

    fn objective(&self, v: &[f64]) -> f64 {
        self.residual(&self.full(v)).unwrap_or(f64::INFINITY)
    }

    fn widths(&self) -> Vec<f64> {
        self.free.iter().map(|&k| self.bounds[k].width()).collect()
    }

    fn descend(&self, start: &[f64], scale: f64, budget: usize) -> Descent {
        let w = self.widths();
        // Step inward from starts that sit near the upper bound.
        let step: Vec<f64> = self
            .free
            .iter()
            .zip(start)
            .zip(&w)
            .map(|((&k, &s), &w)| if s + scale * w > self.bounds[k].hi { -scale * w } else { scale * w })
            .collect();
        let xtol: Vec<f64> = w.iter().map(|w| XTOL * w).collect();
        let f = |v: &[f64]| self.objective(v);
        let mut d = nelder_mead(&f, start, &step, &xtol, FTOL, 0.0, budget);
        // Report the clamped point actually evaluated.
        let p = self.full(&d.point);
        d.point = self.free.iter().map(|&k| p[k]).collect();
        d
    }
}

fn lexicographic(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
}

fn problem(grid: &SweepGrid, bounds: &CollapseBounds, options: &CollapseOptions, mode: CollapseMode) -> Result<Problem> {
    bounds.validate()?;
    let arr = bounds.as_array();
    Ok(Problem {
        mode,
        grouping: options.grouping,
        records: grid.records.clone(),
        curves: grid.curves.clone(),
        bounds: arr,
        free: (0..5).filter(|&k| !arr[k].is_pinned()).collect(),
        neighbours: options.neighbours,
        tau_swept: grid.is_swept(Axis::Tau),
        d_swept: grid.is_swept(Axis::D),
    })
}

/// Fit (ν, η, z, T_c, ξ₀) to classical sweep data.
pub fn classical_collapse(grid: &SweepGrid, bounds: &CollapseBounds, options: &CollapseOptions) -> Result<CollapseResult> {
    if grid.span(Axis::Tau) < 10.0 || grid.span(Axis::D) < 10.0 {
        return Err(Error::Validation("classical collapse needs at least a decade in both tau and d".into()));
    }
    if !grid.is_swept(Axis::Temperature) {
        return Err(Error::Validation("classical collapse needs a temperature sweep".into()));
    }
    let t = grid.distinct(Axis::Temperature);
    if !(bounds.critical.hi > t[0] && bounds.critical.lo < t[t.len() - 1]) {
        return Err(Error::Validation("the temperature sweep does not bracket the critical-temperature bounds".into()));
    }
    run(problem(grid, bounds, options, CollapseMode::Classical)?, options)
}

/// Fit (ν, η, z, λ_c, Δ₀) to quantum sweep data with a coupling axis.
pub fn quantum_collapse(grid: &SweepGrid, bounds: &CollapseBounds, options: &CollapseOptions) -> Result<CollapseResult> {
    if !grid.has_lambda() {
        return Err(Error::Validation("quantum collapse needs a lambda column".into()));
    }
    if !grid.is_swept(Axis::Temperature) || !grid.is_swept(Axis::Lambda) {
        return Err(Error::Validation("quantum collapse needs sweeps in T and lambda".into()));
    }
    if !grid.is_swept(Axis::Tau) && !grid.is_swept(Axis::D) {
        return Err(Error::Validation("quantum collapse needs a sweep in d or tau".into()));
    }
    run(problem(grid, bounds, options, CollapseMode::Quantum)?, options)
}

/// Scaling coordinates of every usable record at the given parameters
/// (ν, η, z, critical point, amplitude).
pub fn scaled_points(grid: &SweepGrid, mode: CollapseMode, grouping: Grouping, params: [f64; 5]) -> Vec<ScaledPoint> {
    let bounds: [Interval; 5] = std::array::from_fn(|i| Interval::pinned(params[i]));
    let p = Problem {
        mode,
        grouping,
        records: grid.records.clone(),
        curves: grid.curves.clone(),
        bounds,
        free: Vec::new(),
        neighbours: None,
        tau_swept: grid.is_swept(Axis::Tau),
        d_swept: grid.is_swept(Axis::D),
    };
    p.points(&params)
}

impl Problem {
    /// Sampled values of the axis that carries the critical point.
    fn critical_axis(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .records
            .iter()
            .filter_map(|r| match self.mode {
                CollapseMode::Classical => Some(r.temperature),
                CollapseMode::Quantum => r.lambda,
            })
            .collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    /// The residual is singular whenever the critical point crosses a
    /// sampled temperature (or coupling), so the critical point is searched
    /// separately between consecutive sampled values.
    fn segments(&self) -> Vec<Interval> {
        let b = self.bounds[3];
        if b.is_pinned() {
            return vec![b];
        }
        let mut cuts = vec![b.lo];
        cuts.extend(self.critical_axis().into_iter().filter(|&v| v > b.lo && v < b.hi));
        cuts.push(b.hi);
        cuts.windows(2).map(|w| Interval::new(w[0], w[1])).collect()
    }
}

fn multistart(problem: &Problem, options: &CollapseOptions, shift: &[f64]) -> (Descent, usize) {
    // Screen an oversampled Halton set and descend from its best points.
    let screen: Vec<(f64, Vec<f64>)> = (0..(SCREEN * options.starts.max(1)) as u64)
        .into_par_iter()
        .map(|i| {
            let v: Vec<f64> = problem
                .free
                .iter()
                .enumerate()
                .map(|(j, &k)| {
                    let u = (radical_inverse(i + 1, PRIMES[j]) + shift[j]).fract();
                    problem.bounds[k].lo + u * problem.bounds[k].width()
                })
                .collect();
            (problem.objective(&v), v)
        })
        .collect();
    let mut order: Vec<usize> = (0..screen.len()).collect();
    order.sort_by(|&a, &b| screen[a].0.total_cmp(&screen[b].0).then(a.cmp(&b)));
    let starts: Vec<Vec<f64>> = order.iter().take(options.starts.max(1)).map(|&i| screen[i].1.clone()).collect();
    let descents: Vec<Descent> = starts.par_iter().map(|s| problem.descend(s, 0.1, options.max_evaluations)).collect();
    let evaluations = screen.len() + descents.iter().map(|d| d.evaluations).sum::<usize>();
    let best = descents
        .into_iter()
        .min_by(|a, b| a.value.total_cmp(&b.value).then_with(|| lexicographic(&a.point, &b.point)))
        .expect("at least one start");
    (best, evaluations)
}

fn run(problem: Problem, options: &CollapseOptions) -> Result<CollapseResult> {
    let n = problem.free.len();
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let unit = Uniform::new(0.0, 1.0).map_err(|e| Error::Fit(e.to_string()))?;
    let shift: Vec<f64> = (0..n).map(|_| unit.sample(&mut rng)).collect();

    let mut evaluations = 0;
    let mut best: Option<(Descent, Problem)> = None;
    for seg in problem.segments() {
        let mut sub = problem.clone();
        sub.bounds[3] = seg;
        let (d, e) = multistart(&sub, options, &shift);
        evaluations += e;
        let better = match &best {
            None => true,
            Some((b, _)) => d.value.total_cmp(&b.value).then_with(|| lexicographic(&d.point, &b.point)).is_lt(),
        };
        if better {
            best = Some((d, sub));
        }
    }
    let (best, sub) = best.ok_or_else(|| Error::Fit("no starting point".into()))?;
    let polish = sub.descend(&best.point, 0.02, options.max_evaluations);
    evaluations += polish.evaluations;
    let converged = polish.converged;
    let best = if polish.value <= best.value { polish } else { best };
    if !best.value.is_finite() {
        return Err(Error::Fit("no parameters inside the bounds give a usable collapse".into()));
    }
    let params = problem.full(&best.point);
    let residual = problem.residual(&params)?;

    let mut clamped = Vec::new();
    let mut degenerate = Vec::new();
    for &k in &problem.free {
        let b = problem.bounds[k];
        let tol = 1e-9 * b.width();
        if params[k] - b.lo <= tol || b.hi - params[k] <= tol {
            clamped.push(PARAM_NAMES[k].to_string());
        }
        let shifts = [params[k] - 0.05 * b.width(), params[k] + 0.05 * b.width()];
        let mut responses = shifts.iter().filter(|&&v| v >= b.lo && v <= b.hi).map(|&v| {
            let mut q = params;
            q[k] = v;
            problem.residual(&q).map(|r| (r - residual).abs()).unwrap_or(f64::INFINITY)
        });
        if responses.all(|dr| dr <= INSENSITIVE * residual + 1e-300) {
            degenerate.push(PARAM_NAMES[k].to_string());
        }
    }

    let (covariance, replicas) = bootstrap(&sub, &best.point, options);
    let [nu, eta, z, critical, amplitude] = params;
    Ok(CollapseResult {
        mode: problem.mode,
        nu,
        eta,
        z,
        critical,
        amplitude,
        residual,
        covariance,
        bootstrap_replicas: replicas,
        converged,
        clamped,
        degenerate,
        evaluations,
    })
}

/// Covariance of the refitted parameters over resampled records, each
/// replica descending from the full-data optimum.
fn bootstrap(problem: &Problem, best: &[f64], options: &CollapseOptions) -> ([[f64; 5]; 5], usize) {
    let m = problem.records.len();
    let fits: Vec<Option<[f64; 5]>> = (0..options.bootstrap as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
            rng.set_stream(b + 1);
            let pick = Uniform::new(0, m).ok()?;
            let idx: Vec<usize> = (0..m).map(|_| pick.sample(&mut rng)).collect();
            let mut sub = problem.clone();
            sub.records = idx.iter().map(|&i| problem.records[i]).collect();
            sub.curves = idx.iter().map(|&i| problem.curves[i]).collect();
            let d = sub.descend(best, 0.05, options.max_evaluations / 2);
            d.value.is_finite().then(|| sub.full(&d.point))
        })
        .collect();
    let ok: Vec<[f64; 5]> = fits.into_iter().flatten().collect();
    let n = ok.len();
    if n < 2 {
        return ([[f64::NAN; 5]; 5], n);
    }
    let mean: [f64; 5] = std::array::from_fn(|i| ok.iter().map(|p| p[i]).sum::<f64>() / n as f64);
    let cov = std::array::from_fn(|i| {
        std::array::from_fn(|j| ok.iter().map(|p| (p[i] - mean[i]) * (p[j] - mean[j])).sum::<f64>() / (n - 1) as f64)
    });
    (cov, n)
}
