//! The scalar Riemann-Hilbert problem on a half line.
//!
//! For a reflection coefficient `r` and a stationary point `z0`, the
//! function `delta` solves `delta_+ = delta_- (1 - |r|^2)` on
//! `(-inf, z0)` with `delta -> 1` at infinity. It is given explicitly
//! by the exponential of a Cauchy integral of `log(1 - |r|^2)`; its
//! boundary values need a principal-value evaluation. This module also
//! provides `Delta = delta_+ delta_-` and the analytic continuations
//! available when `r` continues off the real line.

use crate::cauchy::Side;
use crate::error::{Result, RhError};
use crate::jump::Reflection;
use crate::quad::{integrate_split, neville_at_zero, sanitize_breakpoints};
use num_complex::Complex64 as C64;

/// Substitution range for the exponential map onto the half line.
const U_RANGE: f64 = 40.0;

/// Evaluator for the scalar solution `delta` and its relatives.
pub struct DeltaFunction {
    pub r: Reflection,
    pub z0: f64,
    pub rho: f64,
    /// Points where `|r|^2` is not smooth (e.g. step endpoints); used
    /// as quadrature split hints.
    breaks: Vec<f64>,
    tol: f64,
    phase_cache: Option<PhaseTable>,
}

impl DeltaFunction {
    pub fn new(r: &Reflection, z0: f64) -> DeltaFunction {
        DeltaFunction {
            r: r.clone(),
            z0,
            rho: r.rho,
            breaks: Vec::new(),
            tol: 1e-11,
            phase_cache: None,
        }
    }

    /// Like `new`, with explicit roughness points of `|r|^2`.
    pub fn with_breaks(r: &Reflection, z0: f64, breaks: &[f64]) -> DeltaFunction {
        DeltaFunction { breaks: breaks.to_vec(), ..DeltaFunction::new(r, z0) }
    }

    /// Precompute an interpolation table for the boundary phase so
    /// that `boundary`/`capital` evaluations become cheap. Requires a
    /// smooth `|r|^2` (no break points).
    pub fn with_cache(mut self) -> Result<DeltaFunction> {
        if !self.breaks.is_empty() {
            return Err(RhError::InvalidParameter(
                "phase cache requires a smooth reflection".into(),
            ));
        }
        self.phase_cache = Some(PhaseTable::build(&self, 1000)?);
        Ok(self)
    }

    /// `log(1 - |r(s)|^2)` on the real line.
    pub fn log_weight(&self, s: f64) -> f64 {
        let z = C64::new(s, 0.0);
        let rr = (self.r.at(z) * self.r.conj_at(z)).re;
        (1.0 - rr).ln()
    }

    /// Split hints in the `u` variable of the substitution
    /// `s = upper - e^u` for break points below `upper`.
    fn u_splits(&self, upper: f64) -> Vec<f64> {
        let mut pts = vec![-U_RANGE, 0.0, U_RANGE];
        for &b in &self.breaks {
            if b < upper {
                let u = (upper - b).ln();
                if u.abs() < U_RANGE {
                    pts.push(u);
                }
            }
        }
        sanitize_breakpoints(&mut pts);
        pts
    }

    /// `int_{-inf}^{z0} log(1-|r|^2)/(s - z) ds` for `z` off the cut.
    fn cut_integral(&self, z: C64) -> Result<C64> {
        let z0 = self.z0;
        if z.re < z0 && z.im.abs() < 0.05 * (z0 - z.re) {
            return self.cut_integral_near(z);
        }
        let f = |u: f64| {
            let e = u.exp();
            let s = z0 - e;
            C64::new(self.log_weight(s) * e, 0.0) / (C64::new(s, 0.0) - z)
        };
        let mut splits = self.u_splits(z0);
        // Help the bisection find a pole lurking near the cut.
        if z.re < z0 {
            let u = (z0 - z.re).max(1e-12).ln();
            if u.abs() < U_RANGE {
                splits.push(u);
                sanitize_breakpoints(&mut splits);
            }
        }
        integrate_split(&f, &splits, self.tol)
    }

    /// Same integral for points close to the cut: the singular part is
    /// removed analytically over a window around `Re z` so the
    /// quadrature never resolves the near-pole scale.
    fn cut_integral_near(&self, z: C64) -> Result<C64> {
        let z0 = self.z0;
        let x = z.re;
        let gap = z0 - x;
        let w = (0.5 * gap).min(1.0_f64.max(1e-9 * gap));
        let lx = self.log_weight(x);
        // Window with the constant subtracted; the remainder is a
        // difference quotient scaled by the smooth distance ratio.
        let dq = |s: f64| (C64::new(self.log_weight(s) - lx, 0.0)) / (C64::new(s, 0.0) - z);
        let mut win = vec![x - w, x, x + w];
        for &b in &self.breaks {
            if b > x - w && b < x + w {
                win.push(b);
            }
        }
        sanitize_breakpoints(&mut win);
        let i1 = integrate_split(&dq, &win, self.tol)?;
        // Analytic value of the subtracted constant: both endpoints sit
        // in the same half plane, so principal logs difference safely.
        let iconst = ((C64::new(x + w, 0.0) - z).ln() - (C64::new(x - w, 0.0) - z).ln()) * lx;
        // Right part: [x + w, z0], regular (pole at distance >= w).
        let reg = |s: f64| C64::new(self.log_weight(s), 0.0) / (C64::new(s, 0.0) - z);
        let mut right = vec![x + w, z0];
        for &b in &self.breaks {
            if b > x + w && b < z0 {
                right.push(b);
            }
        }
        sanitize_breakpoints(&mut right);
        let i2 = integrate_split(&reg, &right, self.tol)?;
        // Left tail via `s = (x - w) - e^u`.
        let upper = x - w;
        let tail = |u: f64| {
            let e = u.exp();
            let s = upper - e;
            C64::new(self.log_weight(s) * e, 0.0) / (C64::new(s, 0.0) - z)
        };
        let i3 = integrate_split(&tail, &self.u_splits(upper), self.tol)?;
        Ok(i1 + iconst + i2 + i3)
    }

    /// `delta(z)` for `z` off the cut `(-inf, z0]`.
    pub fn off(&self, z: C64) -> Result<C64> {
        if z.im == 0.0 && z.re <= self.z0 {
            return Err(RhError::InvalidParameter(format!(
                "delta evaluated on the cut at {z}"
            )));
        }
        let i2pi = C64::new(0.0, 2.0 * std::f64::consts::PI);
        Ok((self.cut_integral(z)? / i2pi).exp())
    }

    /// The real principal value `P.V. int log(1-|r|^2)/(s - x) ds`
    /// over the cut, for `x < z0`.
    pub fn principal_value(&self, x: f64) -> Result<f64> {
        if x >= self.z0 {
            return Err(RhError::Proximity(format!(
                "boundary evaluation on the wrong side of the endpoint: {x} vs {}",
                self.z0
            )));
        }
        // The interpolation table loses accuracy within a hair of the
        // endpoint, where the phase diverges logarithmically; fall back
        // to the windowed direct evaluation there.
        if self.z0 - x >= 1e-8 {
            if let Some(table) = &self.phase_cache {
                return Ok(table.eval(self.z0, x));
            }
        }
        self.principal_value_direct(x)
    }

    fn principal_value_direct(&self, x: f64) -> Result<f64> {
        let z0 = self.z0;
        // Window half-width: bounded by the distance to the endpoint,
        // but kept above the floating-point resolution of `x` so the
        // breakpoints stay distinct for very large `|x|`.
        let gap = z0 - x;
        let w = (0.5 * gap).min(1.0_f64.max(1e-9 * gap));
        let lx = self.log_weight(x);
        // Symmetric window: the constant part integrates to zero in
        // the principal-value sense; the rest is a smooth difference
        // quotient.
        let dq = |s: f64| {
            let d = s - x;
            if d.abs() < 1e-9 * w {
                let e = 1e-6 * w;
                C64::new((self.log_weight(x + e) - self.log_weight(x - e)) / (2.0 * e), 0.0)
            } else {
                C64::new((self.log_weight(s) - lx) / d, 0.0)
            }
        };
        let mut win_splits = vec![x - w, x, x + w];
        for &b in &self.breaks {
            if b > x - w && b < x + w {
                win_splits.push(b);
            }
        }
        sanitize_breakpoints(&mut win_splits);
        let i1 = integrate_split(&dq, &win_splits, self.tol)?;
        // Right part: [x + w, z0], regular.
        let reg = |s: f64| C64::new(self.log_weight(s) / (s - x), 0.0);
        let mut right_splits = vec![x + w, z0];
        for &b in &self.breaks {
            if b > x + w && b < z0 {
                right_splits.push(b);
            }
        }
        sanitize_breakpoints(&mut right_splits);
        let i2 = integrate_split(&reg, &right_splits, self.tol)?;
        // Left tail: (-inf, x - w] via s = (x - w) - e^u.
        let upper = x - w;
        let tail = |u: f64| {
            let e = u.exp();
            let s = upper - e;
            C64::new(self.log_weight(s) * e / (s - x), 0.0)
        };
        let i3 = integrate_split(&tail, &self.u_splits(upper), self.tol)?;
        Ok((i1 + i2 + i3).re)
    }

    /// Boundary value `delta_+` or `delta_-` at a real `x < z0`:
    /// `exp(+-L/2) * exp(-i PV / (2 pi))` with `L = log(1-|r(x)|^2)`.
    pub fn boundary(&self, x: f64, side: Side) -> Result<C64> {
        let pv = self.principal_value(x)?;
        let l = self.log_weight(x);
        let half = match side {
            Side::Plus => 0.5 * l,
            Side::Minus => -0.5 * l,
        };
        let phase = -pv / (2.0 * std::f64::consts::PI);
        Ok(C64::new(half, phase).exp())
    }

    /// `Delta(x) = delta_+ delta_- = exp(-i PV / pi)` for `x < z0`;
    /// unimodular.
    pub fn capital(&self, x: f64) -> Result<C64> {
        let pv = self.principal_value(x)?;
        Ok(C64::new(0.0, -pv / std::f64::consts::PI).exp())
    }

    /// Analytic continuation of `1 - |r|^2` off the axis,
    /// `w(z) = 1 - r(z) conj(r(conj z))`; needs an analytic `r`.
    pub fn weight_continuation(&self, z: C64) -> Result<C64> {
        if !self.r.analytic {
            return Err(RhError::ContinuationUnavailable(
                "reflection has no analytic continuation".into(),
            ));
        }
        Ok(1.0 - self.r.at(z) * self.r.conj_at(z))
    }

    /// `Delta` continued into the upper half plane:
    /// `delta(z)^2 / w(z)`.
    pub fn capital_up(&self, z: C64) -> Result<C64> {
        if z.im <= 0.0 {
            return Err(RhError::InvalidParameter("capital_up needs Im z > 0".into()));
        }
        let d = self.off(z)?;
        Ok(d * d / self.weight_continuation(z)?)
    }

    /// `Delta^{-1}` continued into the lower half plane:
    /// `1 / (delta(z)^2 w(z))`.
    pub fn capital_inv_down(&self, z: C64) -> Result<C64> {
        if z.im >= 0.0 {
            return Err(RhError::InvalidParameter(
                "capital_inv_down needs Im z < 0".into(),
            ));
        }
        let d = self.off(z)?;
        Ok(1.0 / (d * d * self.weight_continuation(z)?))
    }

    /// `L^2` distance of the boundary values from 1 over the cut:
    /// max over the two sides of `||delta_pm - 1||_{L^2(-inf, z0)}`.
    pub fn l2_distance(&self) -> Result<f64> {
        let z0 = self.z0;
        let f = |u: f64| {
            let e = u.exp();
            let x = z0 - e;
            if z0 - x < 1e-8 {
                return C64::new(0.0, 0.0);
            }
            let pv = self.principal_value(x).unwrap_or(0.0);
            let l = self.log_weight(x);
            let phase = -pv / (2.0 * std::f64::consts::PI);
            let dp = C64::new(0.5 * l, phase).exp();
            let dm = C64::new(-0.5 * l, phase).exp();
            let m = (dp - 1.0).norm_sqr().max((dm - 1.0).norm_sqr());
            C64::new(m * e, 0.0)
        };
        let v = integrate_split(&f, &self.u_splits(z0), 1e-8)?;
        Ok(v.re.max(0.0).sqrt())
    }
}

/// Chebyshev interpolation table for the boundary phase
/// `u -> P.V.(z0 - e^u)`, which is smooth in `u` (log-linear near the
/// endpoint, decaying at the far end).
struct PhaseTable {
    u: Vec<f64>,
    phi: Vec<f64>,
    bary: Vec<f64>,
}

impl PhaseTable {
    fn build(delta: &DeltaFunction, n: usize) -> Result<PhaseTable> {
        let mut u = Vec::with_capacity(n + 1);
        let mut phi = Vec::with_capacity(n + 1);
        let mut bary = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let uk = U_RANGE * (std::f64::consts::PI * k as f64 / n as f64).cos();
            let x = delta.z0 - uk.exp();
            u.push(uk);
            phi.push(delta.principal_value_direct(x)?);
            let mut w = if k % 2 == 0 { 1.0 } else { -1.0 };
            if k == 0 || k == n {
                w *= 0.5;
            }
            bary.push(w);
        }
        Ok(PhaseTable { u, phi, bary })
    }

    fn eval(&self, z0: f64, x: f64) -> f64 {
        let uu = (z0 - x).ln().clamp(-U_RANGE, U_RANGE);
        let mut num = 0.0;
        let mut den = 0.0;
        for k in 0..self.u.len() {
            let d = uu - self.u[k];
            if d.abs() < 1e-14 {
                return self.phi[k];
            }
            let t = self.bary[k] / d;
            num += t * self.phi[k];
            den += t;
        }
        num / den
    }
}

/// Envelope report for the model-problem continuations at one point.
#[derive(Debug, Clone)]
pub struct ContinuationReport {
    pub z: C64,
    /// `|Delta(z)|` continued (upper half) or `|Delta^{-1}(z)|`
    /// (lower half), together with its envelope.
    pub capital_abs: f64,
    pub capital_envelope: f64,
    /// `|delta^{-2}|` (upper half) or `|delta^2|` (lower half), with
    /// its envelope.
    pub delta_pow_abs: f64,
    pub delta_pow_envelope: f64,
    pub ok: bool,
}

/// Check the continuation envelopes for the model reflection
/// `r(z) = r0/(1+iz)` at a point `z` off the real axis: in the upper
/// half plane `|Delta| <= |(z+ia)/(z-ia)| (1-rho^2)^{-(1-arg z/pi)}`
/// and `|delta^{-2}| <= (1-rho^2)^{-arg z/pi}`; mirrored below.
pub fn model_continuation_bounds(r0: C64, z: C64) -> Result<ContinuationReport> {
    if z.im == 0.0 {
        return Err(RhError::InvalidParameter("need Im z != 0".into()));
    }
    let r = Reflection::model(r0)?;
    let delta = DeltaFunction::new(&r, 0.0);
    let rho = r0.norm();
    let a = (1.0 - rho * rho).sqrt();
    let ia = C64::new(0.0, a);
    let pi = std::f64::consts::PI;
    let arg = z.arg();
    let base = 1.0 - rho * rho;
    let d = delta.off(z)?;
    let (capital_abs, capital_envelope, delta_pow_abs, delta_pow_envelope) = if z.im > 0.0 {
        let cap = (d * d / delta.weight_continuation(z)?).norm();
        let cap_env = ((z + ia) / (z - ia)).norm() * base.powf(-(1.0 - arg / pi));
        let dp = 1.0 / (d * d).norm();
        let dp_env = base.powf(-arg / pi);
        (cap, cap_env, dp, dp_env)
    } else {
        let cap = 1.0 / (d * d * delta.weight_continuation(z)?).norm();
        let cap_env = ((z - ia) / (z + ia)).norm() * base.powf(-(1.0 + arg / pi));
        let dp = (d * d).norm();
        let dp_env = base.powf(arg / pi);
        (cap, cap_env, dp, dp_env)
    };
    let slack = 1.0 + 1e-8;
    Ok(ContinuationReport {
        z,
        capital_abs,
        capital_envelope,
        delta_pow_abs,
        delta_pow_envelope,
        ok: capital_abs <= capital_envelope * slack && delta_pow_abs <= delta_pow_envelope * slack,
    })
}

/// Richardson limit of `delta(x + i eps)` toward the cut, used as an
/// independent check of the principal-value boundary evaluation.
pub fn boundary_via_limit(delta: &DeltaFunction, x: f64, side: Side) -> Result<C64> {
    let sign = match side {
        Side::Plus => 1.0,
        Side::Minus => -1.0,
    };
    let es = [0.16, 0.08, 0.04, 0.02];
    let mut vals = Vec::with_capacity(es.len());
    for &e in &es {
        vals.push(delta.off(C64::new(x, sign * e))?);
    }
    Ok(neville_at_zero(&es, &vals))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn trivial_reflection_gives_one() {
        let r = Reflection::model(c(0.0, 0.0)).unwrap();
        let d = DeltaFunction::new(&r, 0.0);
        assert!((d.off(c(1.0, 2.0)).unwrap() - 1.0).norm() < 1e-12);
        assert!((d.boundary(-1.0, Side::Plus).unwrap() - 1.0).norm() < 1e-12);
        assert!((d.capital(-2.0).unwrap() - 1.0).norm() < 1e-12);
    }

    #[test]
    fn step_reflection_matches_closed_form() {
        // r = rho on [a, z0]: delta(z) = ((z - z0)/(z - a))^{i nu},
        // nu = -log(1 - rho^2)/(2 pi).
        let rho = 0.6;
        let a = -2.0;
        let z0 = 1.0;
        let r = Reflection::step(rho, a, z0).unwrap();
        let d = DeltaFunction::with_breaks(&r, z0, &[a, z0]);
        let nu = -(1.0 - rho * rho).ln() / (2.0 * std::f64::consts::PI);
        for z in [c(0.3, 1.1), c(-3.0, -0.7), c(2.5, 0.4), c(0.0, -2.0)] {
            let expect = (((z - z0) / (z - a)).ln() * c(0.0, nu)).exp();
            let got = d.off(z).unwrap();
            assert!(
                (got - expect).norm() < 1e-8,
                "closed form mismatch at {z}: {got} vs {expect}"
            );
        }
    }

    #[test]
    fn symmetry_and_modulus_identities() {
        let r = Reflection::model(c(0.5, 0.2)).unwrap();
        let d = DeltaFunction::new(&r, 0.0);
        let rho2 = 1.0 - r.rho * r.rho;
        for z in [c(0.7, 0.9), c(-1.2, 1.5), c(3.0, -0.4)] {
            let v = d.off(z).unwrap();
            let vc = d.off(z.conj()).unwrap();
            // delta(z) * conj(delta(conj z)) = 1
            assert!((v * vc.conj() - 1.0).norm() < 1e-9, "reflection identity at {z}");
            // (1-rho^2)^{1/2} <= |delta| <= (1-rho^2)^{-1/2}
            assert!(v.norm() >= rho2.sqrt() - 1e-9 && v.norm() <= rho2.powf(-0.5) + 1e-9);
            // |delta| <= 1 above the axis, >= 1 below
            if z.im > 0.0 {
                assert!(v.norm() <= 1.0 + 1e-9);
            } else {
                assert!(v.norm() >= 1.0 - 1e-9);
            }
        }
        // |delta| = 1 on the real axis right of z0
        for x in [0.5, 2.0, 10.0] {
            let v = d.off(c(x, 0.0)).unwrap();
            assert!((v.norm() - 1.0).abs() < 1e-9, "|delta({x})| = {}", v.norm());
        }
    }

    #[test]
    fn boundary_values_and_jump() {
        let r = Reflection::model(c(0.5, -0.3)).unwrap();
        let d = DeltaFunction::new(&r, 0.0);
        for x in [-0.5, -2.0, -7.0] {
            let dp = d.boundary(x, Side::Plus).unwrap();
            let dm = d.boundary(x, Side::Minus).unwrap();
            let w = 1.0 - (r.at(c(x, 0.0)) * r.conj_at(c(x, 0.0))).re;
            // modulus identities
            assert!((dp.norm() - w.sqrt()).abs() < 1e-9);
            assert!(((dp * dm).norm() - 1.0).abs() < 1e-10);
            // jump relation
            assert!((dp - dm * w).norm() < 1e-9);
            // independent limit check against the off-cut evaluator
            let lim = boundary_via_limit(&d, x, Side::Plus).unwrap();
            assert!((lim - dp).norm() < 2e-6, "limit check at {x}: {:.3e}", (lim - dp).norm());
            // capital consistency
            let cap = d.capital(x).unwrap();
            assert!((cap - dp * dm).norm() < 1e-10);
            assert!((cap.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn phase_cache_matches_direct() {
        let r = Reflection::model(c(0.45, 0.1)).unwrap();
        let d0 = DeltaFunction::new(&r, 0.0);
        let d1 = DeltaFunction::new(&r, 0.0).with_cache().unwrap();
        for x in [-0.013, -0.8, -3.7, -40.0, -900.0] {
            let a = d0.principal_value(x).unwrap();
            let b = d1.principal_value(x).unwrap();
            assert!((a - b).abs() < 1e-9, "cache mismatch at {x}: {a} vs {b}");
        }
    }

    #[test]
    fn continuation_identity_and_envelopes() {
        let r0 = c(0.5, 0.0);
        let r = Reflection::model(r0).unwrap();
        let d = DeltaFunction::new(&r, 0.0);
        // Continued capital Delta approaches the boundary product.
        let x = -1.5;
        let es = [0.16, 0.08, 0.04, 0.02];
        let vals: Vec<C64> =
            es.iter().map(|&e| d.capital_up(c(x, e)).unwrap()).collect();
        let lim = neville_at_zero(&es, &vals);
        let cap = d.capital(x).unwrap();
        assert!((lim - cap).norm() < 1e-6, "continuation mismatch {:.3e}", (lim - cap).norm());
        // Envelope checks on rays.
        for z in [
            C64::from_polar(1.0, std::f64::consts::FRAC_PI_4),
            C64::from_polar(2.0, std::f64::consts::FRAC_PI_2),
            C64::from_polar(1.0, -std::f64::consts::FRAC_PI_4),
        ] {
            let rep = model_continuation_bounds(r0, z).unwrap();
            assert!(rep.ok, "envelope violated at {z}: {rep:?}");
        }
    }

    #[test]
    fn l2_distance_within_calibrated_bound() {
        let r = Reflection::model(c(0.5, 0.0)).unwrap();
        let d = DeltaFunction::new(&r, 0.0).with_cache().unwrap();
        let dist = d.l2_distance().unwrap();
        let bound = 4.0 * r.l2 / (1.0 - r.rho);
        assert!(dist > 0.0 && dist <= bound, "{dist} vs {bound}");
    }
}
