//! Complementary error function with full relative accuracy in the tail.

use std::f64::consts::PI;

const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;

// Above this, 1 - erf would lose more than a decimal digit of erfc.
const SERIES_LIMIT: f64 = 1.25;

/// `erfc(z)` to a few ulps.
///
/// Below `z = 1.25` the positive-term series
/// `erf z = 2/sqrt(pi) e^{-z^2} sum (2z^2)^n z / (2n+1)!!` is used, which has
/// no cancellation. From 1.25 upward the Laplace continued fraction is evaluated
/// with the modified Lentz method.
pub fn erfc(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    if z < 0.0 {
        return 2.0 - erfc(-z);
    }
    if z < SERIES_LIMIT {
        1.0 - erf_series(z)
    } else {
        erfc_continued_fraction(z)
    }
}

pub fn erf(z: f64) -> f64 {
    if z < 0.0 {
        return -erf(-z);
    }
    if z < SERIES_LIMIT {
        erf_series(z)
    } else {
        1.0 - erfc_continued_fraction(z)
    }
}

fn erf_series(z: f64) -> f64 {
    let z2 = z * z;
    let mut term = z;
    let mut sum = z;
    let mut n = 0.0;
    while term > sum * 1e-18 {
        n += 1.0;
        term *= 2.0 * z2 / (2.0 * n + 1.0);
        sum += term;
    }
    FRAC_2_SQRT_PI * (-z2).exp() * sum
}

// erfc z = e^{-z^2}/sqrt(pi) * 1/(z + (1/2)/(z + 1/(z + (3/2)/(z + ...))))
fn erfc_continued_fraction(z: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = z;
    let mut c = z;
    let mut d = 0.0;
    for n in 1..5000 {
        let a = n as f64 / 2.0;
        d = z + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = z + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-17 {
            break;
        }
    }
    (-z * z).exp() / (PI.sqrt() * f)
}

/// Standard normal distribution function.
pub fn standard_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}
