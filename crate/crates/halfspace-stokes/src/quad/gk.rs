//! Embedded Gauss(7)/Kronrod(15) panel rule, vector-valued.

/// Kronrod abscissae on [0, 1] (positive half; the rule is symmetric).
pub const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];

/// Gauss weights for the embedded 7-point rule.
pub const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Kronrod weights.
pub const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

/// One 15-point panel over [a, b] for an m-component integrand.
/// `f(x, out)` writes the m components at x into `out`.
/// Returns (kronrod values, per-component error estimates). A NaN in any
/// component is reported through `nan_at`.
pub fn panel_vec<F>(
    f: &F,
    a: f64,
    b: f64,
    m: usize,
    value: &mut [f64],
    error: &mut [f64],
    nan_at: &mut Option<f64>,
) where
    F: Fn(f64, &mut [f64]) + ?Sized,
{
    debug_assert_eq!(value.len(), m);
    debug_assert_eq!(error.len(), m);
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let mut fv = vec![0.0; m];
    let mut kron = vec![0.0; m];
    let mut gauss = vec![0.0; m];
    let mut resabs = vec![0.0; m];

    f(center, &mut fv);
    for j in 0..m {
        if fv[j].is_nan() {
            *nan_at = Some(center);
        }
        kron[j] = WGK[7] * fv[j];
        resabs[j] = WGK[7] * fv[j].abs();
    }
    // 7-point Gauss rule does not use the center for an even count of
    // Gauss nodes; with 7 nodes the center carries WG[3].
    for j in 0..m {
        gauss[j] = WG[3] * fv[j];
    }

    let mut fv2 = vec![0.0; m];
    for (k, &xi) in XGK.iter().enumerate().take(7) {
        let dx = half * xi;
        f(center - dx, &mut fv);
        f(center + dx, &mut fv2);
        for j in 0..m {
            if fv[j].is_nan() || fv2[j].is_nan() {
                *nan_at = Some(center - dx);
            }
            let sum = fv[j] + fv2[j];
            kron[j] += WGK[k] * sum;
            resabs[j] += WGK[k] * (fv[j].abs() + fv2[j].abs());
            if k % 2 == 1 {
                // odd Kronrod indices are the embedded Gauss nodes
                gauss[j] += WG[k / 2] * sum;
            }
        }
    }

    for j in 0..m {
        let v = kron[j] * half;
        let raw = ((kron[j] - gauss[j]) * half).abs();
        // QUADPACK-style rescaling so the estimate is not absurdly
        // optimistic on rough integrands.
        let scale = resabs[j] * half.abs();
        let err = if scale > 0.0 && raw > 0.0 {
            let r = (200.0 * raw / scale).powf(1.5);
            if r < 1.0 {
                scale * r
            } else {
                raw.min(scale)
            }
        } else {
            raw
        };
        value[j] = v;
        error[j] = err.max(v.abs() * 50.0 * f64::EPSILON);
    }
}
