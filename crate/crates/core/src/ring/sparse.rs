/// Zeroes every element with magnitude below `lambda`.
pub fn sparsify(x: &[f64], lambda: f64) -> Vec<f64> {
    x.iter().map(|&v| if v.abs() >= lambda { v } else { 0.0 }).collect()
}

/// Fraction of exact zeros.
pub fn sparsity(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().filter(|&&v| v == 0.0).count() as f64 / x.len() as f64
}

/// Smallest threshold that zeroes at least `target` of `x` (absent ties),
/// found by quantile selection over the magnitudes.
pub fn lambda_for_sparsity(x: &[f64], target: f64) -> f64 {
    let n = x.len();
    let m = (target.clamp(0.0, 1.0) * n as f64).ceil() as usize;
    if m == 0 {
        return 0.0;
    }
    if m >= n {
        return f64::INFINITY;
    }
    let mut mags: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    let (_, kth, _) = mags.select_nth_unstable_by(m, f64::total_cmp);
    *kth
}
