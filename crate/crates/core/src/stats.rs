//! Fixed-threshold statistical checks used by the validation suites.

/// One-sample Kolmogorov–Smirnov statistic against Uniform(0, 1):
/// `sup |F_n(x) - x|` over the sorted sample.
pub fn ks_statistic_uniform(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "KS statistic of an empty sample");
    let mut xs = values.to_vec();
    xs.sort_unstable_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut sup = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let lo = (x - i as f64 / n).abs();
        let hi = ((i + 1) as f64 / n - x).abs();
        sup = sup.max(lo).max(hi);
    }
    sup
}

/// Pearson correlation coefficient of two equal-length samples.
pub fn pearson_correlation(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() > 1);
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        cov += (x - mx) * (y - my);
        vx += (x - mx) * (x - mx);
        vy += (y - my) * (y - my);
    }
    cov / (vx.sqrt() * vy.sqrt())
}

/// Three binomial standard deviations of an empirical frequency:
/// `3 * sqrt(p (1-p) / n)`.
pub fn binomial_three_sigma(p: f64, n: usize) -> f64 {
    3.0 * (p * (1.0 - p) / n as f64).sqrt()
}

pub fn mean(values: &[f64]) -> f64 {
    assert!(!values.is_empty());
    values.iter().sum::<f64>() / values.len() as f64
}

/// Coefficient of variation (sample standard deviation over mean).
pub fn coefficient_of_variation(values: &[f64]) -> f64 {
    assert!(values.len() > 1);
    let m = mean(values);
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - 1) as f64;
    var.sqrt() / m
}
