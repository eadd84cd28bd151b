//! The boundary influx g(y', s) = psi(y') phi(s) e_n.
//!
//! psi is a normalized smooth bump supported in the tangential ball of
//! radius 1/2. phi vanishes on [0, 1/4], ramps up smoothly on (1/4, 1/2) and
//! equals (1-s)^a exactly on [1/2, 1); a in (-1, 1]. Only the normal
//! component of the data is nonzero.

use crate::quad::{integrate_disk, QuadSpec};

/// Smooth partition function: 0 at u <= 0, 1 at u >= 1.
fn smooth_step(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / u).exp();
        let b = (-1.0 / (1.0 - u)).exp();
        a / (a + b)
    }
}

/// Temporal profile parameters and cached derived quantities.
#[derive(Debug, Clone)]
pub struct BoundaryProfile {
    /// Algebraic exponent of (1-s)^a near the final time; in (-1, 1].
    pub a: f64,
    /// Ramp knots: phi = 0 below the first, pure power above the second.
    pub ramp_lo: f64,
    pub ramp_hi: f64,
    /// Tangential dimension n-1.
    pub dim: usize,
    /// Amplitude multiplying psi (1 for the normalized bump).
    pub amplitude: f64,
    /// Cached mass integral of phi over (0, 1/2).
    pub mass: f64,
    /// Cached normalization constant of psi.
    psi_norm: f64,
}

impl BoundaryProfile {
    /// Build a profile for dimension n in {2, 3}. `a` beyond 1 is accepted
    /// but untested territory; it is reported, not rejected.
    pub fn new(n: usize, a: f64, spec: &QuadSpec) -> Self {
        assert!(n == 2 || n == 3, "only n in {{2, 3}} is supported");
        assert!(a > -1.0, "profile exponent must exceed -1");
        let dim = n - 1;
        let raw = integrate_disk(dim, |y| bump_raw(y), 0.5, spec)
            .expect("psi normalization integral must converge");
        let psi_norm = 1.0 / raw.value;
        let mut profile = Self {
            a,
            ramp_lo: 0.25,
            ramp_hi: 0.5,
            dim,
            amplitude: 1.0,
            mass: 0.0,
            psi_norm,
        };
        profile.mass = profile.compute_mass(spec);
        profile
    }

    /// Same profile with the bump amplitude scaled; the induced flow scales
    /// linearly with it.
    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    pub fn n(&self) -> usize {
        self.dim + 1
    }

    /// Normalized spatial bump; vanishes outside |y'| < 1/2 and integrates
    /// to `amplitude`.
    pub fn psi(&self, y_prime: &[f64]) -> f64 {
        self.amplitude * self.psi_norm * bump_raw(y_prime)
    }

    /// Gradient of the bump; needed by the stabilized near-boundary
    /// convolutions.
    pub fn psi_grad(&self, y_prime: &[f64]) -> Vec<f64> {
        let r2: f64 = y_prime.iter().map(|v| 4.0 * v * v).sum();
        if r2 >= 1.0 {
            return vec![0.0; y_prime.len()];
        }
        let g = 1.0 - r2;
        let psi = self.psi(y_prime);
        y_prime.iter().map(|&yk| psi * (-8.0 * yk / (g * g))).collect()
    }

    /// Temporal profile: smooth ramp times (1-s)^a, supported in (1/4, 1).
    pub fn phi(&self, s: f64) -> f64 {
        if s <= self.ramp_lo || s >= 1.0 {
            return 0.0;
        }
        let ramp = smooth_step((s - self.ramp_lo) / (self.ramp_hi - self.ramp_lo));
        ramp * (1.0 - s).powf(self.a)
    }

    /// Mass of phi below the pure-power regime start; phi vanishes below
    /// the ramp so the integral runs over (ramp_lo, 1/2).
    fn compute_mass(&self, spec: &QuadSpec) -> f64 {
        crate::quad::integrate_1d(|s| self.phi(s), self.ramp_lo, self.ramp_hi, spec)
            .expect("phi mass integral must converge")
            .value
    }

    pub fn mass_m(&self) -> f64 {
        self.mass
    }
}

fn bump_raw(y: &[f64]) -> f64 {
    let r2: f64 = y.iter().map(|v| 4.0 * v * v).sum();
    if r2 >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - r2)).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> QuadSpec {
        QuadSpec::default_tols()
    }

    #[test]
    fn psi_vanishes_on_support_boundary() {
        let p = BoundaryProfile::new(2, -0.5, &spec());
        assert_eq!(p.psi(&[0.5]), 0.0);
        assert_eq!(p.psi(&[0.7]), 0.0);
        let p3 = BoundaryProfile::new(3, -0.5, &spec());
        assert_eq!(p3.psi(&[0.3, 0.4]), 0.0);
    }

    #[test]
    fn psi_normalized_and_even() {
        for n in [2usize, 3] {
            let p = BoundaryProfile::new(n, 0.0, &spec());
            let total = integrate_disk(n - 1, |y| p.psi(y), 0.5, &spec()).unwrap();
            assert!((total.value - 1.0).abs() < 1e-9, "n={n}: {}", total.value);
            let y = if n == 2 { vec![0.21] } else { vec![0.1, -0.17] };
            let ym: Vec<f64> = y.iter().map(|v| -v).collect();
            assert_eq!(p.psi(&y), p.psi(&ym));
        }
    }

    #[test]
    fn phi_pure_power_region() {
        for a in [-0.9, -0.5, 0.0, 0.5, 1.0] {
            let p = BoundaryProfile::new(2, a, &spec());
            assert!((p.phi(0.75) - 0.25f64.powf(a)).abs() < 1e-15);
            assert_eq!(p.phi(0.1), 0.0);
            assert_eq!(p.phi(1.0), 0.0);
        }
    }

    #[test]
    fn phi_endpoint_behavior_by_exponent_sign() {
        let blow = BoundaryProfile::new(2, -0.5, &spec());
        assert!(blow.phi(1.0 - 1e-12) > 1e5);
        let vanish = BoundaryProfile::new(2, 0.5, &spec());
        assert!(vanish.phi(1.0 - 1e-12) < 1e-5);
    }

    #[test]
    fn phi_c1_at_gluing_point() {
        // one-sided difference quotients agree at s = 1/2
        for a in [-0.5, 0.3] {
            let p = BoundaryProfile::new(2, a, &spec());
            let h = 1e-7;
            let left = (p.phi(0.5) - p.phi(0.5 - h)) / h;
            let right = (p.phi(0.5 + h) - p.phi(0.5)) / h;
            assert!(
                (left - right).abs() < 1e-5 * left.abs().max(1.0),
                "a={a}: {left} vs {right}"
            );
        }
    }

    #[test]
    fn mass_positive_and_decreasing_in_exponent() {
        let masses: Vec<f64> = [-0.9, -0.5, 0.0, 0.5, 1.0]
            .iter()
            .map(|&a| BoundaryProfile::new(2, a, &spec()).mass_m())
            .collect();
        for m in &masses {
            assert!(*m > 0.0);
        }
        for w in masses.windows(2) {
            assert!(w[0] > w[1], "mass must decrease in a: {masses:?}");
        }
        // a = 0: the mass is the ramp integral, strictly inside (0, 1/4)
        let m0 = BoundaryProfile::new(2, 0.0, &spec()).mass_m();
        assert!(m0 > 0.0 && m0 < 0.25);
    }
}
