//! Shared oracles for integration tests. These stay independent of the
//! library's sampling paths: the incomplete gamma function is computed by
//! series/continued fraction, and quantiles are found by bisection on it.

/// Regularized lower incomplete gamma P(a, x), by power series for
/// `x < a + 1` and by the continued fraction of Q(a, x) otherwise.
pub fn reg_lower_gamma(a: f64, x: f64) -> f64 {
    assert!(a > 0.0 && x >= 0.0);
    if x == 0.0 {
        return 0.0;
    }
    let ln_gamma_a = ln_gamma(a);
    let log_prefix = a * x.ln() - x - ln_gamma_a;
    if x < a + 1.0 {
        // Series: P(a,x) = prefix * sum_{k>=0} x^k / (a (a+1) ... (a+k)).
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut denom = a;
        for _ in 0..500 {
            denom += 1.0;
            term *= x / denom;
            sum += term;
            if term.abs() < sum.abs() * 1e-16 {
                break;
            }
        }
        (log_prefix.exp() * sum).clamp(0.0, 1.0)
    } else {
        // Lentz continued fraction for Q(a,x).
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        (1.0 - log_prefix.exp() * h).clamp(0.0, 1.0)
    }
}

/// Quantile of Gamma(a, rate 1) by bisection on the regularized incomplete
/// gamma.
pub fn gamma_quantile(a: f64, p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0);
    let mut lo = 0.0;
    let mut hi = a + 20.0 * a.sqrt() + 20.0;
    while reg_lower_gamma(a, hi) < p {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if reg_lower_gamma(a, mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn gamma_median(a: f64) -> f64 {
    gamma_quantile(a, 0.5)
}

/// Stirling-series log-gamma, independent of the library implementation.
pub fn ln_gamma(mut x: f64) -> f64 {
    assert!(x > 0.0);
    let mut shift = 0.0;
    while x < 10.0 {
        shift -= x.ln();
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv / 12.0 - inv * inv2 / 360.0 + inv * inv2 * inv2 / 1260.0
        - inv * inv2 * inv2 * inv2 / 1680.0;
    shift + 0.5 * (2.0 * std::f64::consts::PI).ln() + (x - 0.5) * x.ln() - x + series
}

#[allow(dead_code)]
pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

#[allow(dead_code)]
pub fn standard_error(values: &[f64]) -> f64 {
    let m = mean(values);
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - 1) as f64;
    (var / values.len() as f64).sqrt()
}
