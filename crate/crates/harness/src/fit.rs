//! Least-squares order fitting on `(log h, log error)`.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit in natural-log units.
    pub residual: f64,
    pub points: usize,
}

/// Ordinary least squares of `ln error` against `ln h`. Needs at least two
/// points with positive finite coordinates; others are ignored.
pub fn fit_slope(samples: &[(f64, f64)]) -> Option<SlopeFit> {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(h, e)| *h > 0.0 && *e > 0.0 && h.is_finite() && e.is_finite())
        .map(|&(h, e)| (h.ln(), e.ln()))
        .collect();
    let n = pts.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum::<f64>()
        / nf)
        .sqrt();
    Some(SlopeFit {
        slope,
        intercept,
        residual,
        points: n,
    })
}
