//! Adaptive Gauss-Kronrod quadrature for complex-valued integrands.
//!
//! A 7-point Gauss / 15-point Kronrod pair with bisection drives the
//! pointwise scalar evaluations (principal values, off-contour Cauchy
//! integrals, mollified approximants) where spectral piece grids are
//! either unavailable or not accurate enough near singularities.

use crate::error::{Result, RhError};
use num_complex::Complex64 as C64;

/// Kronrod-15 nodes on [0, 1] side (symmetric); indices 1,3,5,7 are
/// the embedded Gauss-7 nodes.
const XK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];

const WK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];

const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

/// One G7/K15 application on `[a, b]`; returns the Kronrod value, the
/// error estimate `|k - g|`, and the `L^1` magnitude of the integrand
/// on the panel (the roundoff scale the error cannot go below).
fn gk15<F: Fn(f64) -> C64>(f: &F, a: f64, b: f64) -> (C64, f64, f64) {
    let h = 0.5 * (b - a);
    let m = 0.5 * (a + b);
    let mut k = C64::new(0.0, 0.0);
    let mut g = C64::new(0.0, 0.0);
    let mut resabs = 0.0;
    for i in 0..8 {
        let v = if XK[i] == 0.0 {
            let v = f(m);
            resabs += v.norm() * WK[i];
            v
        } else {
            let (vl, vr) = (f(m - h * XK[i]), f(m + h * XK[i]));
            resabs += (vl.norm() + vr.norm()) * WK[i];
            vl + vr
        };
        k += v * WK[i];
        if i % 2 == 1 {
            g += v * WG[i / 2];
        }
    }
    k *= h;
    g *= h;
    (k, (k - g).norm(), resabs * h.abs())
}

/// Sort a breakpoint list and drop (near-)duplicates so it satisfies
/// the `integrate_split` monotonicity requirement.
pub fn sanitize_breakpoints(pts: &mut Vec<f64>) {
    pts.retain(|p| p.is_finite());
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|b, a| {
        let scale = a.abs().max(b.abs());
        (*b - *a).abs() <= 8.0 * f64::EPSILON * scale
    });
}

/// Adaptively integrate `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> C64>(f: &F, a: f64, b: f64, tol: f64) -> Result<C64> {
    integrate_split(f, &[a, b], tol)
}

/// Adaptively integrate over `[pts[0], pts[last]]` with forced initial
/// breakpoints at the interior points (useful when the integrand has
/// known kinks or near-singularities).
pub fn integrate_split<F: Fn(f64) -> C64>(f: &F, pts: &[f64], tol: f64) -> Result<C64> {
    if pts.len() < 2 {
        return Err(RhError::InvalidParameter(
            "integrate_split needs at least two breakpoints".into(),
        ));
    }
    if pts.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(RhError::InvalidParameter(
            "breakpoints must be strictly increasing".into(),
        ));
    }
    // Worst-first refinement against a global error budget: split the
    // panel with the largest error estimate until the total estimate
    // drops below `tol`. Panels whose estimate sits at the roundoff
    // floor of the integrand magnitude are frozen — bisection cannot
    // improve them past double-precision noise.
    struct Panel {
        a: f64,
        b: f64,
        depth: u32,
        k: C64,
        err: f64,
    }
    impl Panel {
        fn key(&self) -> f64 {
            self.err
        }
    }
    impl PartialEq for Panel {
        fn eq(&self, other: &Self) -> bool {
            self.key() == other.key()
        }
    }
    impl Eq for Panel {}
    impl PartialOrd for Panel {
        fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(other))
        }
    }
    impl Ord for Panel {
        fn cmp(&self, other: &Self) -> std::cmp::Ordering {
            self.key().total_cmp(&other.key())
        }
    }

    let mut evals: usize = 0;
    let mut frozen_sum = C64::new(0.0, 0.0);
    let mut frozen_err = 0.0;
    let mut live: std::collections::BinaryHeap<Panel> = std::collections::BinaryHeap::new();
    let mut live_err = 0.0;
    let mut live_sum = C64::new(0.0, 0.0);

    let assess = |a: f64,
                      b: f64,
                      depth: u32,
                      evals: &mut usize|
     -> Result<(Panel, bool)> {
        let (k, err, resabs) = gk15(f, a, b);
        *evals += 15;
        // Noise floor: nothing below the rounding scale of the panel
        // magnitude is resolvable.
        let floor = err <= 1e-14 * k.norm() || err <= 1e-13 * resabs;
        let m = 0.5 * (a + b);
        let atomic = !(m > a && m < b) || depth >= 60;
        if atomic && !floor && err > 1e-10 * resabs && err > tol {
            return Err(RhError::QuadratureFailure(format!(
                "integrand irregular at machine resolution on [{a}, {b}], err {err:.3e}"
            )));
        }
        Ok((Panel { a, b, depth, k, err }, floor || atomic))
    };

    for w in pts.windows(2) {
        let (p, frozen) = assess(w[0], w[1], 0, &mut evals)?;
        if frozen {
            frozen_sum += p.k;
            frozen_err += p.err.min(1e-10);
        } else {
            live_err += p.err;
            live_sum += p.k;
            live.push(p);
        }
    }
    while frozen_err + live_err > tol {
        let Some(p) = live.pop() else { break };
        live_err -= p.err;
        live_sum -= p.k;
        if evals > 4_000_000 {
            return Err(RhError::QuadratureFailure(
                "evaluation budget exhausted".into(),
            ));
        }
        let m = 0.5 * (p.a + p.b);
        for (a, b) in [(p.a, m), (m, p.b)] {
            let (half, frozen) = assess(a, b, p.depth + 1, &mut evals)?;
            if frozen {
                frozen_sum += half.k;
                frozen_err += half.err.min(1e-10);
            } else {
                live_err += half.err;
                live_sum += half.k;
                live.push(half);
            }
        }
    }
    Ok(frozen_sum + live_sum)
}

/// Integrate `f` over `(-inf, upper]` through the substitution
/// `s = upper - e^u`, which resolves both the endpoint scale and the
/// exponential tail; `f` must decay at least like `1/s^2`.
pub fn integrate_left_tail<F: Fn(f64) -> C64>(f: &F, upper: f64, tol: f64) -> Result<C64> {
    let g = |u: f64| {
        let e = u.exp();
        f(upper - e) * e
    };
    integrate_split(&g, &[-40.0, 0.0, 40.0], tol)
}

/// Neville polynomial extrapolation of samples `(xs[i], ys[i])` to
/// `x = 0`, used for Richardson limits toward a boundary.
pub fn neville_at_zero(xs: &[f64], ys: &[C64]) -> C64 {
    assert_eq!(xs.len(), ys.len());
    assert!(!xs.is_empty());
    let mut p: Vec<C64> = ys.to_vec();
    let n = p.len();
    for level in 1..n {
        for i in 0..n - level {
            let xi = xs[i];
            let xj = xs[i + level];
            p[i] = (p[i + 1] * (-xi) - p[i] * (-xj)) / (xj - xi);
        }
    }
    p[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neville_extrapolates_polynomial_exactly() {
        let f = |x: f64| C64::new(2.0 - 3.0 * x + x * x * x, 1.0 + x * x);
        let xs = [0.8, 0.4, 0.2, 0.1];
        let ys: Vec<C64> = xs.iter().map(|&x| f(x)).collect();
        let p = neville_at_zero(&xs, &ys);
        assert!((p - f(0.0)).norm() < 1e-13);
    }

    #[test]
    fn smooth_integral() {
        let v = integrate(&|x: f64| C64::new(x.cos(), x.sin()), 0.0, 1.0, 1e-13).unwrap();
        assert!((v.re - 1.0_f64.sin()).abs() < 1e-13);
        assert!((v.im - (1.0 - 1.0_f64.cos())).abs() < 1e-13);
    }

    #[test]
    fn near_singular_integral() {
        // integral of 1/(x^2 + g^2) over [-1, 1] with small g.
        let g = 1e-6_f64;
        let exact = 2.0 * (1.0 / g).atan() / g;
        let v = integrate(&|x: f64| C64::new(1.0 / (x * x + g * g), 0.0), -1.0, 1.0, 1e-8 * exact)
            .unwrap();
        assert!((v.re - exact).abs() / exact < 1e-9, "{} vs {}", v.re, exact);
    }

    #[test]
    fn left_tail_lorentzian() {
        // integral over (-inf, 0] of 1/(1+s^2) = pi/2.
        let v = integrate_left_tail(&|s: f64| C64::new(1.0 / (1.0 + s * s), 0.0), 0.0, 1e-12)
            .unwrap();
        assert!((v.re - std::f64::consts::FRAC_PI_2).abs() < 1e-11);
    }

    #[test]
    fn rejects_bad_breakpoints() {
        assert!(integrate_split(&|_| C64::new(1.0, 0.0), &[0.0], 1e-8).is_err());
        assert!(integrate_split(&|_| C64::new(1.0, 0.0), &[1.0, 0.0], 1e-8).is_err());
    }
}
