//! Upper incomplete gamma function for complex arguments in the closed right
//! half-plane.

use num_complex::Complex64;

const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;

/// `Γ(b, x)` for `b > 0`, `Re x ≥ 0`, `x ≠ 0`.
pub fn upper_gamma_positive(b: f64, x: Complex64) -> Complex64 {
    if x.norm() < 3.0 {
        Complex64::new(libm::tgamma(b), 0.0) - lower_gamma_series(b, x)
    } else {
        upper_gamma_fraction(b, x)
    }
}

/// `Γ(a, x)` for `a ∈ (-1, 0)` via `Γ(a, x) = (Γ(a+1, x) − x^a e^{-x}) / a`.
pub fn upper_gamma(a: f64, x: Complex64) -> Complex64 {
    if a > 0.0 {
        return upper_gamma_positive(a, x);
    }
    debug_assert!(a > -1.0 && a < 0.0);
    (upper_gamma_positive(a + 1.0, x) - x.powf(a) * (-x).exp()) / a
}

fn lower_gamma_series(b: f64, x: Complex64) -> Complex64 {
    let mut term = Complex64::new(1.0 / b, 0.0);
    let mut sum = term;
    let mut denom = b;
    for _ in 0..500 {
        denom += 1.0;
        term *= x / denom;
        sum += term;
        if term.norm() < EPS * sum.norm() {
            break;
        }
    }
    sum * x.powf(b) * (-x).exp()
}

/// Modified Lentz evaluation of the Legendre continued fraction.
fn upper_gamma_fraction(b: f64, x: Complex64) -> Complex64 {
    let mut bb = x + 1.0 - b;
    let mut c = Complex64::new(1.0 / TINY, 0.0);
    let mut d = 1.0 / bb;
    let mut h = d;
    for i in 1..10_000 {
        let an = -(i as f64) * (i as f64 - b);
        bb += 2.0;
        d = bb + d * an;
        if d.norm() < TINY {
            d = Complex64::new(TINY, 0.0);
        }
        c = bb + an / c;
        if c.norm() < TINY {
            c = Complex64::new(TINY, 0.0);
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).norm() < EPS {
            break;
        }
    }
    (-x).exp() * x.powf(b) * h
}
