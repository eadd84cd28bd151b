//! Integrals over the tangential ball B'(0, radius) in n-1 dimensions.

use super::adaptive::integrate_1d_vec;
use super::{EvalResult, QuadError, QuadSpec};
use std::f64::consts::PI;

/// Integrate `f` over the ball of the given radius in `dim` tangential
/// dimensions (dim = n-1, so 1 for the planar problem and 2 for the spatial
/// one). In two dimensions polar coordinates are used: the radial rule is
/// adaptive, the angular rule is a uniform composite panel rule whose panel
/// count is chosen once per call.
pub fn integrate_disk<F>(
    dim: usize,
    f: F,
    radius: f64,
    spec: &QuadSpec,
) -> Result<EvalResult, QuadError>
where
    F: Fn(&[f64]) -> f64,
{
    assert!(radius > 0.0, "integrate_disk: radius must be positive");
    match dim {
        1 => {
            let r = integrate_1d_vec(
                |y, out| out[0] = f(&[y]),
                1,
                -radius,
                radius,
                &[0.0],
                spec,
            )?;
            finish(r, spec)
        }
        2 => {
            let panels = angular_panel_count(&f, radius, spec);
            let r = integrate_1d_vec(
                |rho, out| out[0] = rho * angular_average(&f, rho, panels),
                1,
                0.0,
                radius,
                &[],
                spec,
            )?;
            finish(r, spec)
        }
        _ => panic!("integrate_disk: dim must be 1 or 2"),
    }
}

fn finish(
    r: super::adaptive::VecResult,
    spec: &QuadSpec,
) -> Result<EvalResult, QuadError> {
    let res = r.component(0);
    if !r.converged && res.error_estimate > spec.tolerance_for(res.value) {
        return Err(QuadError::NonConvergence(res));
    }
    Ok(res)
}

/// Composite midpoint-free panel rule over the full angle: each panel is a
/// 15-point Kronrod rule mapped onto its arc.
fn angular_average<F>(f: &F, rho: f64, panels: usize) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    use super::gk::{WGK, XGK};
    let mut total = 0.0;
    let width = 2.0 * PI / panels as f64;
    for p in 0..panels {
        let c = (p as f64 + 0.5) * width;
        let half = 0.5 * width;
        let mut acc = WGK[7] * f(&[rho * c.cos(), rho * c.sin()]);
        for (k, &xi) in XGK.iter().enumerate().take(7) {
            let a1 = c - half * xi;
            let a2 = c + half * xi;
            acc += WGK[k]
                * (f(&[rho * a1.cos(), rho * a1.sin()]) + f(&[rho * a2.cos(), rho * a2.sin()]));
        }
        total += acc * half;
    }
    total
}

fn angular_panel_count<F>(f: &F, radius: f64, spec: &QuadSpec) -> usize
where
    F: Fn(&[f64]) -> f64,
{
    let probe = 0.61803398875 * radius;
    let mut panels = 4;
    let mut prev = angular_average(f, probe, panels);
    while panels < 256 {
        let next_panels = panels * 2;
        let next = angular_average(f, probe, next_panels);
        let tol = spec.abs_tol.max(spec.rel_tol * next.abs()) * 0.1;
        if (next - prev).abs() <= tol.max(f64::EPSILON * next.abs() * 8.0) {
            return next_panels;
        }
        panels = next_panels;
        prev = next;
    }
    panels
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_area_two_dims() {
        let spec = QuadSpec::default_tols();
        let r = integrate_disk(2, |_| 1.0, 0.5, &spec).unwrap();
        assert!((r.value - PI / 4.0).abs() < 1e-10);
    }

    #[test]
    fn interval_length_one_dim() {
        let spec = QuadSpec::default_tols();
        let r = integrate_disk(1, |_| 1.0, 0.5, &spec).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn odd_integrand_vanishes() {
        let spec = QuadSpec::default_tols();
        for radius in [0.25, 1.0, 3.0] {
            let r1 = integrate_disk(1, |y| y[0], radius, &spec).unwrap();
            assert!(r1.value.abs() < 1e-12);
            let r2 = integrate_disk(2, |y| y[0], radius, &spec).unwrap();
            assert!(r2.value.abs() < 1e-10);
        }
    }

    #[test]
    fn gaussian_mass() {
        let spec = QuadSpec::default_tols();
        let r = integrate_disk(2, |y| (-(y[0] * y[0] + y[1] * y[1])).exp(), 6.0, &spec).unwrap();
        assert!((r.value - PI * (1.0 - (-36.0f64).exp())).abs() < 1e-9);
    }
}
