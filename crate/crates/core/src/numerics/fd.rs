//! Central finite differences, used to verify analytic gradients.

/// Default step for 64-bit checks.
pub const STEP: f64 = 1e-5;

/// Relative error between an analytic and a numeric derivative. The floor
/// keeps entries whose true derivative is ~0 from dominating.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Numeric gradient of `f` at `x` by central differences with step `h`.
/// `f` receives the perturbed point.
pub fn central_gradient(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}
