//! Richardson-refined finite differences at the origin, used to read moments
//! off transforms.

/// `f'(0)` from central differences with step `h` and `h/2`.
pub fn derivative_at_zero<F: Fn(f64) -> f64>(f: F, h: f64) -> f64 {
    let d = |e: f64| (f(e) - f(-e)) / (2.0 * e);
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

/// `f''(0)` from central differences with step `h` and `h/2`.
pub fn second_derivative_at_zero<F: Fn(f64) -> f64>(f: F, h: f64) -> f64 {
    let f0 = f(0.0);
    let d = |e: f64| (f(e) - 2.0 * f0 + f(-e)) / (e * e);
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

/// `d^2 f / dx dy` at the origin from the four-point stencil.
pub fn mixed_partial_at_zero<F: Fn(f64, f64) -> f64>(f: F, h: f64) -> f64 {
    let m = |e: f64| (f(e, e) - f(e, -e) - f(-e, e) + f(-e, -e)) / (4.0 * e * e);
    (4.0 * m(h / 2.0) - m(h)) / 3.0
}
