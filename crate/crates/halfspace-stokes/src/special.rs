//! The few special functions the solver needs: error function (for Gaussian
//! tail bounds) and the Lambert W function (principal branch on z > 0).

use std::f64::consts::PI;

const MAX_ITER: usize = 300;
const EPS: f64 = 1e-16;

/// Regularized lower incomplete gamma P(a, x) by power series; requires
/// x < a + 1 for fast convergence.
fn gamma_p_series(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut ap = a;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

/// Regularized upper incomplete gamma Q(a, x) by Lentz continued fraction;
/// requires x >= a + 1.
fn gamma_q_contfrac(a: f64, x: f64) -> f64 {
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=MAX_ITER {
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
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// Lanczos approximation of ln Gamma for positive arguments.
pub fn ln_gamma(x: f64) -> f64 {
    const G: [f64; 6] = [
        76.18009172947146,
        -86.50532032941677,
        24.01409824083091,
        -1.231739572450155,
        0.1208650973866179e-2,
        -0.5395239384953e-5,
    ];
    let mut y = x;
    let tmp = x + 5.5;
    let tmp = tmp - (x + 0.5) * tmp.ln();
    let mut ser = 1.000000000190015;
    for &g in &G {
        y += 1.0;
        ser += g / y;
    }
    -tmp + (2.5066282746310005 * ser / x).ln()
}

pub fn erf(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let v = if x * x < 1.5 {
        gamma_p_series(0.5, x * x)
    } else {
        1.0 - gamma_q_contfrac(0.5, x * x)
    };
    if x > 0.0 {
        v
    } else {
        -v
    }
}

pub fn erfc(x: f64) -> f64 {
    if x < 0.0 {
        2.0 - erfc(-x)
    } else if x * x < 1.5 {
        1.0 - gamma_p_series(0.5, x * x)
    } else {
        gamma_q_contfrac(0.5, x * x)
    }
}

/// Principal branch of the Lambert W function for z > 0, solving w e^w = z.
/// Newton iteration with a log-based starting guess; the residual tolerance
/// is 1e-12 relative.
pub fn lambert_w(z: f64) -> Result<f64, &'static str> {
    if !(z > 0.0) {
        return Err("lambert_w: requires z > 0");
    }
    let mut w = if z < std::f64::consts::E {
        // Near zero W(z) ~ z(1 - z); ln(1+z) is a stable start everywhere here.
        (1.0 + z).ln()
    } else {
        let l = z.ln();
        l - l.ln().max(0.0)
    };
    for _ in 0..100 {
        let ew = w.exp();
        let f = w * ew - z;
        let fp = ew * (1.0 + w);
        let step = f / fp;
        w -= step;
        if step.abs() <= 1e-12 * w.abs().max(1e-12) {
            return Ok(w);
        }
    }
    Err("lambert_w: no convergence after 100 iterations")
}

/// Gaussian tail mass `int_{|u| > rho} e^{-u^2/(4 tau)} du` in dimension
/// `dim` (1 or 2); used when tangential domains are truncated.
pub fn gaussian_tail(dim: usize, rho: f64, tau: f64) -> f64 {
    if tau <= 0.0 || rho <= 0.0 {
        return 0.0;
    }
    match dim {
        1 => 2.0 * (PI * tau).sqrt() * erfc(rho / (2.0 * tau.sqrt())),
        2 => 4.0 * PI * tau * (-rho * rho / (4.0 * tau)).exp(),
        _ => panic!("gaussian_tail: dim must be 1 or 2"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erf_reference_values() {
        // Abramowitz & Stegun 7.1
        assert!((erf(0.5) - 0.5204998778130465).abs() < 1e-12);
        assert!((erf(1.0) - 0.8427007929497149).abs() < 1e-12);
        assert!((erf(2.0) - 0.9953222650189527).abs() < 1e-12);
        assert!((erfc(3.0) - 2.209049699858544e-5).abs() < 1e-15);
    }

    #[test]
    fn lambert_w_fixed_points() {
        assert!((lambert_w(std::f64::consts::E).unwrap() - 1.0).abs() < 1e-12);
        let z = 3.7;
        let w = lambert_w(z).unwrap();
        assert!((w * w.exp() - z).abs() < 1e-11);
        assert!(lambert_w(1e-12).unwrap() < 1.1e-12);
    }

    #[test]
    fn gaussian_tail_matches_quadrature() {
        // 1-D: int_{|u|>2} e^{-u^2/4} du with tau = 1.
        let direct: f64 = {
            let mut s = 0.0;
            let m = 400_000;
            let h = 40.0 / m as f64;
            for i in 0..m {
                let u = 2.0 + (i as f64 + 0.5) * h;
                s += (-u * u / 4.0).exp() * h;
            }
            2.0 * s
        };
        assert!((gaussian_tail(1, 2.0, 1.0) - direct).abs() < 1e-6);
    }
}
