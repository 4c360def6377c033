use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Fewest points a collapse quality can be computed from.
pub const MIN_POINTS: usize = 10;

/// A point in scaling coordinates. Points of the same `group` (one measured
/// curve) never serve as each other's neighbours, and only points on the same
/// `branch` (side of the transition) are compared.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledPoint {
    pub x: Vec<f64>,
    pub y: f64,
    pub group: usize,
    pub branch: i8,
}

/// Quality of a two-variable collapse, every point being its own curve.
///
/// Each point is predicted by a tricube-weighted quadratic least-squares
/// surface through its nearest neighbours (leave-one-out); the result is the
/// mean squared prediction error, corrected for the variance of the fitted
/// surface so that independent noise of variance σ² on y yields ≈ σ².
pub fn collapse_quality(points: &[(f64, f64, f64)]) -> Result<f64> {
    let pts: Vec<ScaledPoint> = points
        .iter()
        .enumerate()
        .map(|(i, &(x1, x2, y))| ScaledPoint { x: vec![x1, x2], y, group: i, branch: 0 })
        .collect();
    grouped_quality(&pts, None)
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Collapse quality over arbitrary dimension with curve and branch labels.
/// `neighbours` defaults to three times the number of quadratic terms.
pub fn grouped_quality(points: &[ScaledPoint], neighbours: Option<usize>) -> Result<f64> {
    if points.len() < MIN_POINTS {
        return Err(Error::Fit(format!("collapse quality needs at least {MIN_POINTS} points, got {}", points.len())));
    }
    let dim = points[0].x.len();
    if dim == 0 || points.iter().any(|p| p.x.len() != dim) {
        return Err(Error::Fit("scaling points must share a nonzero dimension".into()));
    }
    if points.iter().any(|p| !p.y.is_finite() || p.x.iter().any(|v| !v.is_finite())) {
        return Err(Error::Fit("non-finite scaling coordinate".into()));
    }

    // Robust per-axis centring and scale; axes without spread carry no
    // information and are dropped.
    let mut axes = Vec::new();
    for k in 0..dim {
        let mut v: Vec<f64> = points.iter().map(|p| p.x[k]).collect();
        let med = median(&mut v);
        let mut dev: Vec<f64> = v.iter().map(|x| (x - med).abs()).collect();
        let mut s = median(&mut dev);
        if s <= 1e-12 * (1.0 + med.abs()) {
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            s = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64).sqrt();
        }
        if s > 1e-12 * (1.0 + med.abs()) {
            axes.push((k, med, s));
        }
    }
    if axes.is_empty() {
        return Err(Error::Fit("all points fall in a single bin".into()));
    }
    let m = axes.len();
    let nb = 1 + m + m * (m + 1) / 2;
    let k = neighbours.unwrap_or(3 * nb).max(nb + 2);
    let coords: Vec<Vec<f64>> = points.iter().map(|p| axes.iter().map(|&(a, c, s)| (p.x[a] - c) / s).collect()).collect();

    let terms: Vec<Option<f64>> = (0..points.len())
        .into_par_iter()
        .map(|i| loo_term(points, &coords, i, k, nb))
        .collect();
    let (sum, count) = terms.iter().flatten().fold((0.0, 0usize), |(s, c), t| (s + t, c + 1));
    if count == 0 {
        return Err(Error::Fit("no point has enough neighbours from other curves".into()));
    }
    Ok(sum / count as f64)
}

fn loo_term(points: &[ScaledPoint], coords: &[Vec<f64>], i: usize, k: usize, nb: usize) -> Option<f64> {
    let pi = &points[i];
    let xi = &coords[i];
    let mut cand: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .filter(|(_, p)| p.group != pi.group && p.branch == pi.branch)
        .map(|(j, _)| (coords[j].iter().zip(xi).map(|(a, b)| (a - b).powi(2)).sum::<f64>(), j))
        .collect();
    if cand.len() < nb + 2 {
        return None;
    }
    let order = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if cand.len() > k {
        cand.select_nth_unstable_by(k - 1, order);
        cand.truncate(k);
    }
    cand.sort_by(order);
    // Tricube weights vanish at the k-th neighbour, so the surface changes
    // continuously as points enter or leave the neighbourhood.
    let radius = cand.last()?.0.sqrt();
    if radius <= 0.0 {
        return Some((pi.y - cand.iter().map(|c| points[c.1].y).sum::<f64>() / cand.len() as f64).powi(2));
    }

    let m = xi.len();
    let mut design = DMatrix::<f64>::zeros(cand.len(), nb);
    let mut sqrt_w = DVector::<f64>::zeros(cand.len());
    let mut rhs = DVector::<f64>::zeros(cand.len());
    for (r, &(d2, j)) in cand.iter().enumerate() {
        let w = (1.0 - (d2.sqrt() / radius).powi(3)).max(0.0).powi(3);
        let sw = w.sqrt();
        let u: Vec<f64> = coords[j].iter().zip(xi).map(|(a, b)| (a - b) / radius).collect();
        let mut c = 0;
        design[(r, c)] = sw;
        c += 1;
        for &ua in &u {
            design[(r, c)] = sw * ua;
            c += 1;
        }
        for a in 0..m {
            for b in a..m {
                design[(r, c)] = sw * u[a] * u[b];
                c += 1;
            }
        }
        sqrt_w[r] = sw;
        rhs[r] = sw * points[j].y;
    }

    // The intercept of the weighted fit is a linear combination Σ c_j y_j of
    // the neighbours, and Σ c_j² is the variance of the prediction in units
    // of the noise. With A = W^{1/2}X, c = A(AᵀA)⁻¹e₀ scaled by √w; the
    // normal equations are used when well conditioned, the SVD otherwise.
    let coef = intercept_weights(&design).or_else(|| intercept_weights_svd(design))?;
    let pred = coef.dot(&rhs);
    let lev = coef.component_mul(&sqrt_w).norm_squared();
    // Leverage correction capped so that extrapolated points keep weight.
    Some((pi.y - pred).powi(2) / (1.0 + lev.min(1.0)))
}

fn intercept_weights(design: &DMatrix<f64>) -> Option<DVector<f64>> {
    let gram = design.tr_mul(design);
    let diag_max = gram.diagonal().max();
    let chol = gram.cholesky()?;
    let l = chol.l_dirty();
    let lmin = (0..l.nrows()).map(|i| l[(i, i)]).fold(f64::INFINITY, f64::min);
    if lmin * lmin <= 1e-10 * diag_max {
        return None;
    }
    let mut e0 = DVector::<f64>::zeros(design.ncols());
    e0[0] = 1.0;
    Some(design * chol.solve(&e0))
}

fn intercept_weights_svd(design: DMatrix<f64>) -> Option<DVector<f64>> {
    let svd = design.svd(true, true);
    let (u, vt) = (svd.u?, svd.v_t?);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let mut coef = DVector::<f64>::zeros(u.nrows());
    for (l, &s) in svd.singular_values.iter().enumerate() {
        if s > 1e-10 * smax {
            coef.axpy(vt[(l, 0)] / s, &u.column(l), 1.0);
        }
    }
    Some(coef)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal, Uniform};

    fn cloud(n: usize, seed: u64) -> Vec<(f64, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = Uniform::new(-2.0, 2.0).unwrap();
        (0..n).map(|_| (u.sample(&mut rng), u.sample(&mut rng))).collect()
    }

    fn quad(x: f64, y: f64) -> f64 {
        1.0 + 0.3 * x - 0.2 * y + 0.05 * x * y - 0.1 * x * x + 0.07 * y * y
    }

    #[test]
    fn quadratic_surface_is_exact() {
        let pts: Vec<_> = cloud(200, 1).into_iter().map(|(a, b)| (a, b, quad(a, b))).collect();
        assert!(collapse_quality(&pts).unwrap() < 1e-20);
    }

    #[test]
    fn jitter_variance_is_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let sigma = 0.05;
        let pts: Vec<_> = cloud(600, 3)
            .into_iter()
            .map(|(a, b)| {
                let n: f64 = StandardNormal.sample(&mut rng);
                (a, b, quad(a, b) + sigma * n)
            })
            .collect();
        let r = collapse_quality(&pts).unwrap();
        assert!((r / (sigma * sigma) - 1.0).abs() < 0.2, "{r}");
    }

    #[test]
    fn degenerate_inputs() {
        assert!(collapse_quality(&[(0.0, 0.0, 1.0); 5]).is_err());
        assert!(matches!(collapse_quality(&[(1.0, 2.0, 1.0); 20]), Err(Error::Fit(_))));
        let mut pts: Vec<_> = cloud(20, 4).into_iter().map(|(a, b)| (a, b, 1.0)).collect();
        pts[3].2 = f64::NAN;
        assert!(collapse_quality(&pts).is_err());
    }

    #[test]
    fn one_dimensional_data_drops_the_flat_axis() {
        let pts: Vec<_> = (0..30).map(|i| (i as f64 * 0.1, 5.0, (i as f64 * 0.1).powi(2))).collect();
        assert!(collapse_quality(&pts).unwrap() < 1e-20);
    }
}
