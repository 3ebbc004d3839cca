//! Complex arithmetic helpers shared by the transform-domain modules.
//!
//! All square roots are principal: branch cut on the negative real axis, with
//! points on the cut mapped to the upper imaginary axis regardless of the sign
//! of a zero imaginary part.

pub use num_complex::Complex64 as Complex;

/// Shorthand constructor.
#[inline]
pub fn c64(re: f64, im: f64) -> Complex {
    Complex::new(re, im)
}

/// Principal square root with a sign-insensitive cut.
#[inline]
pub fn principal_sqrt(z: Complex) -> Complex {
    if z.im == 0.0 {
        if z.re >= 0.0 {
            return c64(z.re.sqrt(), 0.0);
        }
        return c64(0.0, (-z.re).sqrt());
    }
    z.sqrt()
}

/// `sinh(x) / x`, accurate near the origin.
pub fn sinhc(x: Complex) -> Complex {
    if x.norm_sqr() < 1e-8 {
        let x2 = x * x;
        Complex::from(1.0) + x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sinh() / x
    }
}

/// Largest real part for which `sinh` stays comfortably finite in products.
const OVERFLOW_GUARD: f64 = 340.0;

/// Evaluates `s / (cosh(sqrt(z)) - cosh(b))` without cancellation, where the
/// caller guarantees `z - b^2 = k * s` for a real constant `k != 0`.
///
/// Uses `cosh A - cosh B = 2 sinh((A+B)/2) sinh((A-B)/2)` with
/// `A - B = k s / (A + B)`, so the factor `s` cancels analytically and the
/// removable point `s = 0` needs no special casing. The sign of `A = ±sqrt(z)`
/// is chosen nearest to `b`; `cosh` is even so both are valid.
pub fn s_over_cosh_difference(z: Complex, b: Complex, k: f64, s: Complex) -> Complex {
    let mut a = principal_sqrt(z);
    if (a - b).norm_sqr() > (a + b).norm_sqr() {
        a = -a;
    }
    let sum = a + b;
    let half_sum = sum * 0.5;
    let half_diff = k * s / (2.0 * sum);
    if half_sum.re.abs() > OVERFLOW_GUARD || half_diff.re.abs() > OVERFLOW_GUARD {
        return Complex::new(0.0, 0.0);
    }
    sum / (k * half_sum.sinh() * sinhc(half_diff))
}

/// Neumaier-compensated running sum of complex terms.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: Complex,
    comp: Complex,
}

impl CompensatedSum {
    pub fn add(&mut self, x: Complex) {
        let (re, cre) = neumaier(self.sum.re, self.comp.re, x.re);
        let (im, cim) = neumaier(self.sum.im, self.comp.im, x.im);
        self.sum = c64(re, im);
        self.comp = c64(cre, cim);
    }

    pub fn value(&self) -> Complex {
        self.sum + self.comp
    }
}

#[inline]
fn neumaier(sum: f64, comp: f64, x: f64) -> (f64, f64) {
    let t = sum + x;
    let c = if sum.abs() >= x.abs() {
        comp + ((sum - t) + x)
    } else {
        comp + ((x - t) + sum)
    };
    (t, c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_on_the_cut_is_upper() {
        let r = principal_sqrt(c64(-4.0, -0.0));
        assert_eq!(r, c64(0.0, 2.0));
        let r = principal_sqrt(c64(-4.0, 0.0));
        assert_eq!(r, c64(0.0, 2.0));
    }

    #[test]
    fn cosh_difference_matches_direct_away_from_zero() {
        let b = c64(0.0, 0.7);
        let k = 3.0;
        for s in [c64(0.5, 0.0), c64(1.0, 2.0), c64(-0.1, 0.3)] {
            let z = b * b + k * s;
            let direct = s / (principal_sqrt(z).cosh() - b.cosh());
            let stable = s_over_cosh_difference(z, b, k, s);
            assert!((direct - stable).norm() < 1e-12 * direct.norm().max(1.0));
        }
    }

    #[test]
    fn cosh_difference_limit_at_zero() {
        let b = c64(0.0, 0.7);
        let k = 3.0;
        let at_zero = s_over_cosh_difference(b * b, b, k, Complex::new(0.0, 0.0));
        // derivative of cosh(sqrt(b^2 + k s)) at s = 0 is k sinh(b) / (2b)
        let expected = 2.0 * b / (k * b.sinh());
        assert!((at_zero - expected).norm() < 1e-14);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut acc = CompensatedSum::default();
        acc.add(c64(1e16, 0.0));
        acc.add(c64(1.0, 1.0));
        acc.add(c64(-1e16, 0.0));
        assert_eq!(acc.value(), c64(1.0, 1.0));
    }
}
