use alloc::vec::Vec;

/// `1 / N`.
pub fn plain_scale(n: usize) -> f64 {
    1.0 / n as f64
}

/// `ln N / N`.
pub fn ln_adjusted_scale(n: usize) -> f64 {
    libm::log(n as f64) / n as f64
}

/// `(K + 1) / N` for a piecewise-equidistant mesh with `K + 1` subintervals.
pub fn k_plus_one_scale(n: usize, levels: usize) -> f64 {
    (levels + 1) as f64 / n as f64
}

/// Rates between consecutive entries, `ln(e_i / e_{i+1}) / ln(h_i / h_{i+1})`.
pub fn pairwise_rates(scales: &[f64], errors: &[f64]) -> Vec<f64> {
    scales
        .windows(2)
        .zip(errors.windows(2))
        .map(|(h, e)| libm::log(e[0] / e[1]) / libm::log(h[0] / h[1]))
        .collect()
}

/// Least-squares slope of `ln e` against `ln h`. `NaN` with fewer than two
/// points or when every `h` coincides.
pub fn fit_order(scales: &[f64], errors: &[f64]) -> f64 {
    let n = scales.len().min(errors.len());
    if n < 2 {
        return f64::NAN;
    }
    let xs: Vec<f64> = scales[..n].iter().map(|h| libm::log(*h)).collect();
    let ys: Vec<f64> = errors[..n].iter().map(|e| libm::log(*e)).collect();
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
