//! One-dimensional adaptive integration with fixed accumulation order.

use super::gk::panel_vec;
use super::{Endpoint, EvalResult, QuadError, QuadSpec};

thread_local! {
    /// Debug label naming the integral currently being refined; only used
    /// by the trace instrumentation.
    pub static TRACE_LABEL: std::cell::RefCell<&'static str> =
        const { std::cell::RefCell::new("?") };
}

pub fn set_trace_label(l: &'static str) {
    TRACE_LABEL.with(|c| *c.borrow_mut() = l);
}

/// Vector-valued result; `values[i]` and `errors[i]` belong to component i.
#[derive(Debug, Clone)]
pub struct VecResult {
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
    pub subdivisions: u32,
    pub converged: bool,
}

impl VecResult {
    fn new(m: usize) -> Self {
        Self {
            values: vec![0.0; m],
            errors: vec![0.0; m],
            subdivisions: 0,
            converged: true,
        }
    }

    pub fn component(&self, i: usize) -> EvalResult {
        EvalResult {
            value: self.values[i],
            error_estimate: self.errors[i],
            subdivisions: self.subdivisions,
        }
    }
}

struct Ctx<'a> {
    f: &'a dyn Fn(f64, &mut [f64]),
    m: usize,
    /// only the first `active` components drive refinement; the rest are
    /// carried along (used for noisy side channels like error estimates)
    active: usize,
    // tolerance per unit length, per component
    tol_density: Vec<f64>,
    noise_floor: f64,
    max_depth: u32,
    nan_at: Option<f64>,
    panels: u32,
    unconverged: bool,
}

fn refine(ctx: &mut Ctx, a: f64, b: f64, depth: u32, out_v: &mut [f64], out_e: &mut [f64]) {
    if std::env::var_os("STOKES_TRACE").is_some() {
        use std::sync::atomic::{AtomicUsize, Ordering};
        static PANELS: AtomicUsize = AtomicUsize::new(0);
        let n = PANELS.fetch_add(1, Ordering::Relaxed);
        if n % 250 == 0 {
            eprintln!("[refine] panel {n} depth {depth} [{a:.10e}, {b:.10e}] m={}", ctx.m);
        }
    }
    let m = ctx.m;
    let mut v = vec![0.0; m];
    let mut e = vec![0.0; m];
    panel_vec(ctx.f, a, b, m, &mut v, &mut e, &mut ctx.nan_at);
    ctx.panels += 1;
    if ctx.nan_at.is_some() {
        return;
    }
    let w = b - a;
    let ok = (0..ctx.active)
        .all(|j| e[j] <= ctx.tol_density[j] * w + ctx.noise_floor * v[j].abs());
    if !ok && depth >= 12 && std::env::var_os("STOKES_TRACE").is_some() {
        use std::sync::atomic::{AtomicUsize, Ordering};
        static FAILS: AtomicUsize = AtomicUsize::new(0);
        let n = FAILS.fetch_add(1, Ordering::Relaxed);
        if n % 100 == 0 {
            let label = TRACE_LABEL.with(|c| *c.borrow());
            for j in 0..ctx.active {
                eprintln!(
                    "[fail {n}] {label} m={} md={} depth={depth} [{a:.8e},{b:.8e}] j={j}: e={:.3e} tolw={:.3e} floorv={:.3e} v={:.3e}",
                    ctx.m, ctx.max_depth, e[j], ctx.tol_density[j] * w, ctx.noise_floor * v[j].abs(), v[j]
                );
            }
        }
    }
    if ok || depth >= ctx.max_depth {
        if !ok {
            ctx.unconverged = true;
        }
        for j in 0..m {
            out_v[j] += v[j];
            out_e[j] += e[j];
        }
        return;
    }
    let mid = 0.5 * (a + b);
    refine(ctx, a, mid, depth + 1, out_v, out_e);
    if ctx.nan_at.is_some() {
        return;
    }
    refine(ctx, mid, b, depth + 1, out_v, out_e);
}

fn run_plain<F>(
    f: &F,
    m: usize,
    active: usize,
    a: f64,
    b: f64,
    breaks: &[f64],
    spec: &QuadSpec,
) -> Result<VecResult, QuadError>
where
    F: Fn(f64, &mut [f64]),
{
    // Segment ends: a, interior breakpoints (sorted, deduplicated), b.
    let mut ends: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|&x| x > a && x < b && x.is_finite())
        .collect();
    ends.sort_by(|p, q| p.partial_cmp(q).unwrap());
    ends.dedup();
    ends.insert(0, a);
    ends.push(b);

    // First pass: one panel per segment gives the magnitude scale that the
    // relative tolerance refers to.
    let mut coarse = vec![0.0; m];
    let mut scale = vec![0.0; m];
    {
        let mut nan_at = None;
        let mut v = vec![0.0; m];
        let mut e = vec![0.0; m];
        for seg in ends.windows(2) {
            panel_vec(f, seg[0], seg[1], m, &mut v, &mut e, &mut nan_at);
            for j in 0..m {
                coarse[j] += v[j];
                scale[j] += v[j].abs();
            }
        }
        if let Some(at) = nan_at {
            return Err(QuadError::EvaluationFailure { at });
        }
    }

    let width = b - a;
    let mut ctx = Ctx {
        f,
        m,
        active,
        tol_density: (0..m)
            .map(|j| spec.abs_tol.max(spec.rel_tol * scale[j].max(coarse[j].abs())) / width)
            .collect(),
        max_depth: spec.max_depth,
        noise_floor: spec.noise_floor,
        nan_at: None,
        panels: 0,
        unconverged: false,
    };

    let mut res = VecResult::new(m);
    for seg in ends.windows(2) {
        refine(&mut ctx, seg[0], seg[1], 0, &mut res.values, &mut res.errors);
        if let Some(at) = ctx.nan_at {
            return Err(QuadError::EvaluationFailure { at });
        }
    }
    res.subdivisions = ctx.panels;
    res.converged = !ctx.unconverged;
    Ok(res)
}

/// Integrate an m-component integrand over [a, b].
///
/// If `spec.singularity` declares an algebraic endpoint singularity with
/// exponent alpha > -1, the substitution `u = (d)^{1+alpha}` in the distance
/// d to that endpoint is applied first; a pure power `d^alpha` becomes an
/// exactly constant integrand under this map.
pub fn integrate_1d_vec<F>(
    f: F,
    m: usize,
    a: f64,
    b: f64,
    breaks: &[f64],
    spec: &QuadSpec,
) -> Result<VecResult, QuadError>
where
    F: Fn(f64, &mut [f64]),
{
    integrate_1d_vec_active(f, m, m, a, b, breaks, spec)
}

/// Like `integrate_1d_vec` but only the first `active` components drive
/// panel refinement; trailing components (noisy side channels such as
/// error estimates) are accumulated on the panel structure the active
/// ones select.
pub fn integrate_1d_vec_active<F>(
    f: F,
    m: usize,
    active: usize,
    a: f64,
    b: f64,
    breaks: &[f64],
    spec: &QuadSpec,
) -> Result<VecResult, QuadError>
where
    F: Fn(f64, &mut [f64]),
{
    assert!(active >= 1 && active <= m);
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        if a == b {
            return Ok(VecResult::new(m));
        }
        return Err(QuadError::BadInterval { a, b });
    }

    match spec.singularity {
        None => run_plain(&f, m, active, a, b, breaks, spec),
        Some(s) => {
            let alpha = s.exponent;
            assert!(alpha > -1.0, "algebraic exponent must exceed -1");
            if alpha == 0.0 {
                return run_plain(&f, m, active, a, b, breaks, spec);
            }
            let p = 1.0 + alpha;
            let q = 1.0 / p;
            let len = b - a;
            let u_hi = len.powf(p);
            let sub_breaks: Vec<f64> = breaks
                .iter()
                .filter_map(|&x| {
                    let d = match s.endpoint {
                        Endpoint::Upper => b - x,
                        Endpoint::Lower => x - a,
                    };
                    (d > 0.0 && d < len).then(|| d.powf(p))
                })
                .collect();
            let g = |u: f64, out: &mut [f64]| {
                let d = u.powf(q);
                let x = match s.endpoint {
                    Endpoint::Upper => b - d,
                    Endpoint::Lower => a + d,
                };
                f(x, out);
                let jac = q * u.powf(q - 1.0);
                for o in out.iter_mut() {
                    *o *= jac;
                }
            };
            let mut inner_spec = *spec;
            inner_spec.singularity = None;
            run_plain(&g, m, active, 0.0, u_hi, &sub_breaks, &inner_spec)
        }
    }
}

/// Scalar convenience wrapper. Returns `NonConvergence` if the summed error
/// estimate is still above tolerance after `max_depth` levels.
pub fn integrate_1d<F>(f: F, a: f64, b: f64, spec: &QuadSpec) -> Result<EvalResult, QuadError>
where
    F: Fn(f64) -> f64,
{
    let r = integrate_1d_vec(|x, out| out[0] = f(x), 1, a, b, &[], spec)?;
    let res = r.component(0);
    if !r.converged && res.error_estimate > spec.tolerance_for(res.value) {
        return Err(QuadError::NonConvergence(res));
    }
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::Endpoint;

    #[test]
    fn smooth_exponential() {
        let spec = QuadSpec::default_tols();
        let r = integrate_1d(|s| (-s).exp(), 0.0, 1.0, &spec).unwrap();
        let exact = 1.0 - (-1.0f64).exp();
        assert!((r.value - exact).abs() < 1e-12);
        assert!((r.value - exact).abs() <= r.error_estimate.max(1e-14));
    }

    #[test]
    fn inverse_sqrt_singularity_at_zero() {
        let spec = QuadSpec::default_tols().with_singularity(Endpoint::Lower, -0.5);
        let r = integrate_1d(|s| s.powf(-0.5), 0.0, 1.0, &spec).unwrap();
        assert!((r.value - 2.0).abs() < 1e-10);
    }

    #[test]
    fn upper_algebraic_singularity() {
        // int_{1/2}^{1} (1-s)^{-3/4} ds = 4 (1/2)^{1/4}
        let spec = QuadSpec::default_tols().with_singularity(Endpoint::Upper, -0.75);
        let r = integrate_1d(|s| (1.0 - s).powf(-0.75), 0.5, 1.0, &spec).unwrap();
        let exact = 4.0 * 0.5f64.powf(0.25);
        assert!((r.value - exact).abs() < 1e-10, "{} vs {}", r.value, exact);
    }

    #[test]
    fn declared_singularity_needs_fewer_subdivisions() {
        // Regression guard: the substitution path must use at most a quarter
        // of the subdivisions of the naive path on (1-s)^{-0.9}.
        let loose = QuadSpec::new(1e-6, 1e-6);
        let naive = integrate_1d_vec(
            |s: f64, out: &mut [f64]| out[0] = (1.0 - s).powf(-0.9),
            1,
            0.0,
            1.0 - 1e-14,
            &[],
            &loose,
        )
        .unwrap();
        let hinted = integrate_1d_vec(
            |s: f64, out: &mut [f64]| out[0] = (1.0 - s).powf(-0.9),
            1,
            0.0,
            1.0,
            &[],
            &loose.with_singularity(Endpoint::Upper, -0.9),
        )
        .unwrap();
        assert!((hinted.values[0] - 10.0).abs() < 1e-6);
        assert!(
            4 * hinted.subdivisions <= naive.subdivisions,
            "hinted {} vs naive {}",
            hinted.subdivisions,
            naive.subdivisions
        );
    }

    #[test]
    fn nan_propagates_as_failure() {
        let spec = QuadSpec::default_tols();
        let r = integrate_1d(|s| if s > 0.5 { f64::NAN } else { 1.0 }, 0.0, 1.0, &spec);
        assert!(matches!(r, Err(QuadError::EvaluationFailure { .. })));
    }

    #[test]
    fn breakpoints_respected() {
        // A kink at 0.3 is resolved without excessive panels when declared.
        let f = |x: f64, out: &mut [f64]| out[0] = (x - 0.3f64).abs();
        let spec = QuadSpec::default_tols();
        let r = integrate_1d_vec(f, 1, 0.0, 1.0, &[0.3], &spec).unwrap();
        let exact = 0.5 * (0.3f64.powi(2) + 0.7f64.powi(2));
        assert!((r.values[0] - exact).abs() < 1e-12);
    }
}
