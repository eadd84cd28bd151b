//! Closed-form heat and Newtonian kernels with the derivatives the Green
//! tensor needs.
//!
//! The heat kernel is `(4 pi t)^{-n/2} exp(-|x|^2/(4t))` for t > 0 and zero
//! for t <= 0. The Newtonian kernel is the fundamental solution of the
//! Laplacian: `ln|x| / (2 pi)` in two dimensions and
//! `-|x|^{2-n} / (n (n-2) omega_n)` for n >= 3, `omega_n` the volume of the
//! unit ball. Only n = 2 and n = 3 are exercised by the test suites; the
//! formulas are written for general n.

use std::f64::consts::PI;

/// Volume of the n-dimensional unit ball, pi^{n/2} / Gamma(n/2 + 1),
/// precomputed for the supported dimensions.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        2 => PI,
        3 => 4.0 * PI / 3.0,
        _ => {
            let h = n as f64 / 2.0;
            (PI.powf(h).ln() - crate::special::ln_gamma(h + 1.0)).exp()
        }
    }
}

/// A point (x', x_n) of the closed half space, tangential part split from
/// the normal coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct SpacePoint {
    pub x_prime: Vec<f64>,
    pub x_n: f64,
}

impl SpacePoint {
    pub fn new(x_prime: Vec<f64>, x_n: f64) -> Self {
        assert!(x_n >= 0.0, "SpacePoint: x_n must be nonnegative");
        let n = x_prime.len() + 1;
        assert!(n == 2 || n == 3, "SpacePoint: only n in {{2, 3}} is supported");
        Self { x_prime, x_n }
    }

    pub fn dim(&self) -> usize {
        self.x_prime.len() + 1
    }

    pub fn tangential_norm(&self) -> f64 {
        self.x_prime.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn norm(&self) -> f64 {
        (self.x_prime.iter().map(|v| v * v).sum::<f64>() + self.x_n * self.x_n).sqrt()
    }

    pub fn coords(&self) -> Vec<f64> {
        let mut v = self.x_prime.clone();
        v.push(self.x_n);
        v
    }
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// n-dimensional heat kernel; identically zero for t <= 0.
pub fn heat_kernel(x: &[f64], t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let n = x.len() as f64;
    (4.0 * PI * t).powf(-0.5 * n) * (-norm2(x) / (4.0 * t)).exp()
}

/// One-dimensional heat kernel in the normal variable.
pub fn heat_kernel_1d(x_n: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    (4.0 * PI * t).powf(-0.5) * (-x_n * x_n / (4.0 * t)).exp()
}

/// (n-1)-dimensional heat kernel in the tangential variables.
pub fn heat_kernel_prime(x_prime: &[f64], t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let d = x_prime.len() as f64;
    (4.0 * PI * t).powf(-0.5 * d) * (-norm2(x_prime) / (4.0 * t)).exp()
}

/// First derivative of the heat kernel in coordinate i; requires t > 0.
pub fn heat_grad_i(x: &[f64], t: f64, i: usize) -> f64 {
    assert!(t > 0.0, "heat kernel derivatives require t > 0");
    -x[i] / (2.0 * t) * heat_kernel(x, t)
}

/// Normal derivative of the full heat kernel (last coordinate).
pub fn heat_kernel_dn(x: &[f64], t: f64) -> f64 {
    heat_grad_i(x, t, x.len() - 1)
}

/// Derivative of the one-dimensional heat kernel.
pub fn heat_kernel_1d_dn(x_n: f64, t: f64) -> f64 {
    assert!(t > 0.0, "heat kernel derivatives require t > 0");
    -x_n / (2.0 * t) * heat_kernel_1d(x_n, t)
}

/// Second derivative d_i d_j of the heat kernel; requires t > 0.
pub fn heat_hess_ij(x: &[f64], t: f64, i: usize, j: usize) -> f64 {
    assert!(t > 0.0, "heat kernel derivatives require t > 0");
    let g = heat_kernel(x, t);
    let a = x[i] * x[j] / (4.0 * t * t);
    let b = if i == j { 1.0 / (2.0 * t) } else { 0.0 };
    (a - b) * g
}

/// Newtonian kernel.
pub fn newton_kernel(x: &[f64]) -> f64 {
    let n = x.len();
    let r2 = norm2(x);
    assert!(r2 > 0.0, "newton kernel: x = 0 is outside the domain");
    match n {
        2 => r2.sqrt().ln() / (2.0 * PI),
        _ => {
            let nf = n as f64;
            -r2.sqrt().powf(2.0 - nf) / (nf * (nf - 2.0) * unit_ball_volume(n))
        }
    }
}

/// Gradient of the Newtonian kernel: x_i / (n omega_n |x|^n).
pub fn newton_grad(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let r2 = norm2(x);
    assert!(r2 > 0.0, "newton kernel: x = 0 is outside the domain");
    let c = 1.0 / (n as f64 * unit_ball_volume(n) * r2.powf(n as f64 / 2.0));
    x.iter().map(|&xi| c * xi).collect()
}

pub fn newton_grad_i(x: &[f64], i: usize) -> f64 {
    let n = x.len();
    let r2 = norm2(x);
    debug_assert!(r2 > 0.0);
    x[i] / (n as f64 * unit_ball_volume(n) * r2.powf(n as f64 / 2.0))
}

/// Hessian d_i d_j of the Newtonian kernel:
/// (delta_ij |x|^2 - n x_i x_j) / (n omega_n |x|^{n+2}).
pub fn newton_hess(x: &[f64]) -> Vec<Vec<f64>> {
    let n = x.len();
    (0..n)
        .map(|i| (0..n).map(|j| newton_hess_ij(x, i, j)).collect())
        .collect()
}

pub fn newton_hess_ij(x: &[f64], i: usize, j: usize) -> f64 {
    let n = x.len();
    let nf = n as f64;
    let r2 = norm2(x);
    debug_assert!(r2 > 0.0);
    let c = 1.0 / (nf * unit_ball_volume(n) * r2.powf(nf / 2.0 + 1.0));
    let d = if i == j { r2 } else { 0.0 };
    c * (d - nf * x[i] * x[j])
}

/// Third derivative d_i d_j d_k of the Newtonian kernel:
/// [-(d_ij x_k + d_ik x_j + d_jk x_i) |x|^2 + (n+2) x_i x_j x_k] / (omega_n |x|^{n+4}).
pub fn newton_third_ijk(x: &[f64], i: usize, j: usize, k: usize) -> f64 {
    let n = x.len();
    let nf = n as f64;
    let r2 = norm2(x);
    debug_assert!(r2 > 0.0);
    let c = 1.0 / (unit_ball_volume(n) * r2.powf(nf / 2.0 + 2.0));
    let kron = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let sym = kron(i, j) * x[k] + kron(i, k) * x[j] + kron(j, k) * x[i];
    c * ((nf + 2.0) * x[i] * x[j] * x[k] - sym * r2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::SplitMix64;

    fn fd_grad(f: impl Fn(&[f64]) -> f64, x: &[f64], i: usize, h: f64) -> f64 {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[i] += h;
        xm[i] -= h;
        (f(&xp) - f(&xm)) / (2.0 * h)
    }

    #[test]
    fn heat_kernel_prefactor_normalization() {
        // at x = 0, t = 1/(4 pi), n = 2 the kernel equals 1
        assert!((heat_kernel(&[0.0, 0.0], 1.0 / (4.0 * PI)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn heat_kernel_zero_branch() {
        assert_eq!(heat_kernel(&[1.0, 2.0], -1.0), 0.0);
        assert_eq!(heat_kernel(&[1.0, 2.0], 0.0), 0.0);
        assert_eq!(heat_kernel_1d(0.3, -0.5), 0.0);
    }

    #[test]
    fn heat_kernel_even_in_x() {
        let mut rng = SplitMix64::new(11);
        for _ in 0..100 {
            let x = [rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)];
            let mx = [-x[0], -x[1]];
            let t = rng.uniform(0.01, 10.0);
            assert_eq!(heat_kernel(&x, t), heat_kernel(&mx, t));
        }
    }

    #[test]
    fn heat_kernel_factorizes() {
        let mut rng = SplitMix64::new(12);
        for _ in 0..50 {
            let n = if rng.next_f64() < 0.5 { 2 } else { 3 };
            let xp: Vec<f64> = (0..n - 1).map(|_| rng.uniform(-3.0, 3.0)).collect();
            let xn = rng.uniform(0.0, 3.0);
            let t = rng.uniform(0.05, 5.0);
            let mut x = xp.clone();
            x.push(xn);
            let full = heat_kernel(&x, t);
            let split = heat_kernel_1d(xn, t) * heat_kernel_prime(&xp, t);
            assert!(
                (full - split).abs() <= 1e-14 * full.abs().max(1e-300),
                "{full} vs {split}"
            );
        }
    }

    #[test]
    fn normal_derivative_sign_and_zero() {
        assert_eq!(heat_kernel_dn(&[1.0, 0.0], 1.0), 0.0);
        let mut rng = SplitMix64::new(13);
        for _ in 0..50 {
            let x = [rng.uniform(-3.0, 3.0), rng.uniform(0.01, 4.0)];
            let t = rng.uniform(0.01, 4.0);
            assert!(heat_kernel_dn(&x, t) < 0.0);
        }
    }

    #[test]
    fn newton_reference_values() {
        // n = 2, |x| = 1 -> 0
        assert!(newton_kernel(&[0.6, 0.8]).abs() < 1e-15);
        // n = 3, |x| = 1 -> -1/(4 pi), from omega_3 = 4 pi / 3
        let v = newton_kernel(&[0.0, 0.6, 0.8]);
        assert!((v + 1.0 / (4.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn newton_hessian_trace_vanishes() {
        let mut rng = SplitMix64::new(14);
        for _ in 0..100 {
            let n = if rng.next_f64() < 0.5 { 2 } else { 3 };
            let x: Vec<f64> = (0..n).map(|_| rng.uniform(0.5, 50.0) * if rng.next_f64() < 0.5 { -1.0 } else { 1.0 }).collect();
            let h = newton_hess(&x);
            let trace: f64 = (0..n).map(|i| h[i][i]).sum();
            assert!(trace.abs() < 1e-12, "trace {trace} at {x:?}");
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let mut rng = SplitMix64::new(15);
        let h = 1e-5;
        for _ in 0..40 {
            let n = if rng.next_f64() < 0.5 { 2 } else { 3 };
            let x: Vec<f64> = (0..n)
                .map(|_| rng.uniform(0.5, 50.0) * if rng.next_f64() < 0.5 { -1.0 } else { 1.0 })
                .collect();
            let t = rng.uniform(0.2, 5.0);

            for i in 0..n {
                let fd = fd_grad(|y| heat_kernel(y, t), &x, i, h);
                let an = heat_grad_i(&x, t, i);
                let scale = an.abs().max(heat_kernel(&x, t) / t).max(1e-300);
                assert!((fd - an).abs() <= 1e-6 * scale, "heat grad {i}: {fd} vs {an}");

                let fdn = fd_grad(|y| newton_kernel(y), &x, i, h);
                let ann = newton_grad(&x)[i];
                assert!(
                    (fdn - ann).abs() <= 1e-6 * ann.abs().max(1e-10),
                    "newton grad {i}: {fdn} vs {ann}"
                );
                for j in 0..n {
                    let fdh = fd_grad(|y| newton_grad(y)[j], &x, i, h);
                    let anh = newton_hess_ij(&x, i, j);
                    assert!(
                        (fdh - anh).abs() <= 1e-6 * anh.abs().max(1e-10),
                        "newton hess {i}{j}: {fdh} vs {anh}"
                    );
                    let fd2 = fd_grad(|y| heat_grad_i(y, t, j), &x, i, h);
                    let an2 = heat_hess_ij(&x, t, i, j);
                    let scale2 = an2.abs().max(heat_kernel(&x, t) / (t * t)).max(1e-300);
                    assert!((fd2 - an2).abs() <= 1e-5 * scale2, "heat hess {i}{j}");
                    for k in 0..n {
                        let fdt = fd_grad(|y| newton_hess_ij(y, j, k), &x, i, h);
                        let ant = newton_third_ijk(&x, i, j, k);
                        assert!(
                            (fdt - ant).abs() <= 1e-5 * ant.abs().max(1e-9),
                            "newton third {i}{j}{k}: {fdt} vs {ant}"
                        );
                    }
                }
            }
        }
    }
}
