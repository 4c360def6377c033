//! Nelder–Mead descent and Halton points for the multi-start fits.

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Descent {
    pub point: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Radical inverse of `index` in `base`.
pub(crate) fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while index > 0 {
        r += f * (index % base) as f64;
        index /= base;
        f *= inv;
    }
    r
}

pub(crate) const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// Nelder–Mead with the standard coefficients. Stops once the spread of
/// values falls below `ftol·|f_best|` (or below `fabs`) and every vertex lies
/// within `xtol[i]` of the best along each axis.
pub(crate) fn nelder_mead(
    f: &dyn Fn(&[f64]) -> f64,
    start: &[f64],
    step: &[f64],
    xtol: &[f64],
    ftol: f64,
    fabs: f64,
    max_evaluations: usize,
) -> Descent {
    let n = start.len();
    let eval = |p: &[f64]| {
        let v = f(p);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut evaluations = 0;
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((start.to_vec(), eval(start)));
    evaluations += 1;
    for i in 0..n {
        let mut p = start.to_vec();
        p[i] += step[i];
        let v = eval(&p);
        simplex.push((p, v));
        evaluations += 1;
    }
    let order = |a: &(Vec<f64>, f64), b: &(Vec<f64>, f64)| {
        a.1.total_cmp(&b.1).then_with(|| a.0.iter().zip(&b.0).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal))
    };
    let mut converged = false;
    loop {
        simplex.sort_by(order);
        let best = simplex[0].1;
        let worst = simplex[n].1;
        let flat = worst - best <= ftol * best.abs() || worst - best <= fabs;
        let small = simplex[1..].iter().all(|(p, _)| p.iter().zip(&simplex[0].0).zip(xtol).all(|((a, b), t)| (a - b).abs() <= *t));
        if n == 0 || (flat && small) {
            converged = true;
            break;
        }
        if evaluations >= max_evaluations {
            break;
        }
        let centroid: Vec<f64> = (0..n).map(|i| simplex[..n].iter().map(|v| v.0[i]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> { centroid.iter().zip(&simplex[n].0).map(|(c, w)| c + t * (c - w)).collect() };
        let xr = along(1.0);
        let fr = eval(&xr);
        evaluations += 1;
        if fr < simplex[0].1 {
            let xe = along(2.0);
            let fe = eval(&xe);
            evaluations += 1;
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < simplex[n].1 {
            let x = along(0.5);
            let v = eval(&x);
            (x, v)
        } else {
            let x = along(-0.5);
            let v = eval(&x);
            (x, v)
        };
        evaluations += 1;
        if fc < simplex[n].1.min(fr) {
            simplex[n] = (xc, fc);
            continue;
        }
        let b = simplex[0].0.clone();
        for v in simplex.iter_mut().skip(1) {
            v.0 = v.0.iter().zip(&b).map(|(x, y)| y + 0.5 * (x - y)).collect();
            v.1 = eval(&v.0);
            evaluations += 1;
        }
    }
    simplex.sort_by(order);
    let (point, value) = simplex.swap_remove(0);
    Descent { point, value, evaluations, converged }
}
