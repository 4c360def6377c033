use crate::error::{Error, Result};

/// Critical temperature from the minimum of T₂*(T).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TcEstimate {
    pub t_c: f64,
    /// Half of the larger grid spacing next to the sampled minimum.
    pub half_width: f64,
}

/// Vertex of the parabola through the sampled minimum and its two
/// neighbours.
pub fn tc_locate(t2_vs_t: &[(f64, f64)]) -> Result<TcEstimate> {
    if t2_vs_t.len() < 3 {
        return Err(Error::Validation("locating a minimum needs at least three points".into()));
    }
    if t2_vs_t.iter().any(|&(t, v)| !t.is_finite() || !v.is_finite()) {
        return Err(Error::Validation("non-finite (T, T2) pair".into()));
    }
    let mut pts = t2_vs_t.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    if pts.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::Validation("temperatures must be distinct".into()));
    }
    let i = (0..pts.len()).min_by(|&a, &b| pts[a].1.total_cmp(&pts[b].1)).unwrap_or(0);
    if i == 0 || i == pts.len() - 1 {
        return Err(Error::Range("T2 has no interior minimum over the sampled temperatures".into()));
    }
    let (x0, y0) = pts[i - 1];
    let (x1, y1) = pts[i];
    let (x2, y2) = pts[i + 1];
    let num = (x1 - x0).powi(2) * (y1 - y2) - (x1 - x2).powi(2) * (y1 - y0);
    let den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0);
    let t_c = if den == 0.0 { x1 } else { (x1 - 0.5 * num / den).clamp(x0, x2) };
    Ok(TcEstimate { t_c, half_width: 0.5 * (x1 - x0).max(x2 - x1) })
}
