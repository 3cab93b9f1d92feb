//! Jump matrices, factorizations, and the singular-integral operators
//! they induce.
//!
//! Conventions: a factorization of a jump `v` is `v = b_-^{-1} b_+`
//! with `b_& = I +- w_&`; the associated operator is
//! `C_w h = C+(h w_-) + C-(h w_+)`, and the one-factor special case
//! `w = (0, v - I)` gives `C_v h = C-(h (v - I))`. Matrix-valued grid
//! functions are stacked into vectors of length `4 N` (node-major,
//! entries in reading order) for the dense operators.

use crate::cauchy::{boundary_matrix, Side};
use crate::error::Result;
use crate::grid::{CollocationGrid, GridFunction};
use crate::linalg::FMat;
use crate::mat2::Mat2;
use num_complex::Complex64 as C64;
use std::sync::Arc;

type ScalarFn = Arc<dyn Fn(C64) -> C64 + Send + Sync>;
type MatFn = Arc<dyn Fn(C64) -> Mat2 + Send + Sync>;

/// A reflection coefficient together with the norms the estimates
/// depend on. `f` is the coefficient on the real line (analytically
/// continued off it when `analytic` is set); `f_conj` is the
/// Schwarz-reflected partner `z -> conj(r(conj z))`.
#[derive(Clone)]
pub struct Reflection {
    pub f: ScalarFn,
    pub f_conj: ScalarFn,
    /// Whether `f`/`f_conj` may be evaluated off the real axis.
    pub analytic: bool,
    /// Sup norm on the real line; must be < 1.
    pub rho: f64,
    /// L^2 norm on the real line.
    pub l2: f64,
    /// L^2 norm of the derivative on the real line (infinite for
    /// discontinuous coefficients).
    pub dl2: f64,
}

impl Reflection {
    /// Sobolev H^1 size `sqrt(l2^2 + dl2^2)`.
    pub fn lambda(&self) -> f64 {
        (self.l2 * self.l2 + self.dl2 * self.dl2).sqrt()
    }

    /// Value at a point.
    pub fn at(&self, z: C64) -> C64 {
        (self.f)(z)
    }

    /// Value of the reflected partner `conj(r(conj z))`.
    pub fn conj_at(&self, z: C64) -> C64 {
        (self.f_conj)(z)
    }

    /// The rational model coefficient `r(z) = r0 / (1 + i z)`, entire
    /// on the closed half planes and explicit in every norm.
    pub fn model(r0: C64) -> Result<Reflection> {
        if r0.norm() >= 1.0 {
            return Err(crate::error::RhError::InvalidParameter(format!(
                "model reflection needs |r0| < 1, got {}",
                r0.norm()
            )));
        }
        let pi = std::f64::consts::PI;
        let i = C64::new(0.0, 1.0);
        let r0c = r0.conj();
        Ok(Reflection {
            f: Arc::new(move |z| r0 / (1.0 + i * z)),
            f_conj: Arc::new(move |z| r0c / (1.0 - i * z)),
            analytic: true,
            rho: r0.norm(),
            l2: r0.norm() * pi.sqrt(),
            dl2: r0.norm() * (pi / 2.0).sqrt(),
        })
    }

    /// A step coefficient `rho` on `[a, b]`, zero elsewhere. Not
    /// analytic; its derivative is not square integrable.
    pub fn step(rho: f64, a: f64, b: f64) -> Result<Reflection> {
        if !(0.0..1.0).contains(&rho) || !(a < b) {
            return Err(crate::error::RhError::InvalidParameter(
                "step reflection needs 0 <= rho < 1 and a < b".into(),
            ));
        }
        let f: ScalarFn = Arc::new(move |z: C64| {
            if z.re >= a && z.re <= b {
                C64::new(rho, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        Ok(Reflection {
            f: f.clone(),
            f_conj: f,
            analytic: false,
            rho,
            l2: rho * (b - a).sqrt(),
            dl2: f64::INFINITY,
        })
    }

    /// Build from an explicit callable on the real line, measuring the
    /// norms numerically on a fine grid over `[-span, span]`.
    pub fn from_fn<F>(f: F, span: f64) -> Reflection
    where
        F: Fn(f64) -> C64 + Send + Sync + 'static,
    {
        let f: Arc<dyn Fn(f64) -> C64 + Send + Sync> = Arc::new(f);
        let m = 40_000;
        let h = 2.0 * span / m as f64;
        let mut rho = 0.0_f64;
        let mut l2 = 0.0;
        let mut dl2 = 0.0;
        let mut prev = f(-span);
        for k in 0..=m {
            let x = -span + k as f64 * h;
            let v = f(x);
            rho = rho.max(v.norm());
            l2 += v.norm_sqr() * h;
            if k > 0 {
                let d = (v - prev) / h;
                dl2 += d.norm_sqr() * h;
            }
            prev = v;
        }
        let fc = f.clone();
        Reflection {
            f: Arc::new(move |z| f(z.re)),
            f_conj: Arc::new(move |z| fc(z.re).conj()),
            analytic: false,
            rho,
            l2: l2.sqrt(),
            dl2: dl2.sqrt(),
        }
    }

    /// Spatially rescaled coefficient `z -> r(z / s)` (used when the
    /// long-time problem is rescaled to unit time).
    pub fn rescaled(&self, s: f64) -> Reflection {
        let f = self.f.clone();
        let fc = self.f_conj.clone();
        Reflection {
            f: Arc::new(move |z| f(z / s)),
            f_conj: Arc::new(move |z| fc(z / s)),
            analytic: self.analytic,
            rho: self.rho,
            l2: self.l2 * s.sqrt(),
            dl2: self.dl2 / s.sqrt(),
        }
    }

    /// Translated coefficient `z -> r(z + x0) * phase` with a constant
    /// unimodular phase (moves a stationary point to the origin).
    pub fn translated(&self, x0: f64, phase: C64) -> Reflection {
        let f = self.f.clone();
        let fc = self.f_conj.clone();
        let phase_c = phase.conj();
        Reflection {
            f: Arc::new(move |z| f(z + x0) * phase),
            f_conj: Arc::new(move |z| fc(z + x0) * phase_c),
            analytic: self.analytic,
            rho: self.rho,
            l2: self.l2,
            dl2: self.dl2,
        }
    }

    /// Reflected coefficient `z -> conj(r(-conj z))` (maps a
    /// negative-time problem to a positive-time one); preserves all
    /// norms and analyticity.
    pub fn reflected(&self) -> Reflection {
        let f = self.f.clone();
        let fc = self.f_conj.clone();
        Reflection {
            f: Arc::new(move |z| fc(-z)),
            f_conj: Arc::new(move |z| f(-z)),
            analytic: self.analytic,
            rho: self.rho,
            l2: self.l2,
            dl2: self.dl2,
        }
    }
}

/// A pointwise-evaluable 2x2 jump matrix.
#[derive(Clone)]
pub struct JumpMatrix {
    pub v: MatFn,
}

impl JumpMatrix {
    pub fn new(v: MatFn) -> JumpMatrix {
        JumpMatrix { v }
    }

    /// The identity jump.
    pub fn identity() -> JumpMatrix {
        JumpMatrix { v: Arc::new(|_| Mat2::identity()) }
    }

    pub fn eval(&self, z: C64) -> Mat2 {
        (self.v)(z)
    }

    pub fn inv(&self, z: C64) -> Mat2 {
        (self.v)(z).inverse()
    }

    /// Sample on a grid.
    pub fn sample(&self, grid: &Arc<CollocationGrid>) -> GridFunction {
        GridFunction::sample(grid, |z| self.eval(z))
    }
}

/// Oscillatory phase `theta = x z - t z^2` of the defocusing-NLS-type
/// family.
pub fn theta(x: f64, t: f64, z: C64) -> C64 {
    z * x - z * z * t
}

/// The oscillatory jump matrix on the real line:
/// `[[1 - |r|^2, r e^{i theta}], [-conj(r) e^{-i theta}, 1]]`.
pub fn nls_jump(r: &Reflection, x: f64, t: f64) -> JumpMatrix {
    let rf = r.f.clone();
    let rc = r.f_conj.clone();
    JumpMatrix {
        v: Arc::new(move |z| {
            let i = C64::new(0.0, 1.0);
            let th = theta(x, t, z);
            let e = (i * th).exp();
            let rv = rf(z);
            let rcv = rc(z);
            Mat2::new(
                1.0 - rv * rcv,
                rv * e,
                -rcv / e,
                C64::new(1.0, 0.0),
            )
        }),
    }
}

/// A factorization `v = (I - w_-)^{-1} D (I + w_+)` with optional
/// diagonal middle factor `D` (absent means `D = I`).
#[derive(Clone)]
pub struct Factorization {
    pub w_minus: MatFn,
    pub w_plus: MatFn,
    pub middle: Option<MatFn>,
}

impl Factorization {
    /// The trivial factorization `w = (0, v - I)`.
    pub fn trivial(v: &JumpMatrix) -> Factorization {
        let vf = v.v.clone();
        Factorization {
            w_minus: Arc::new(|_| Mat2::zero()),
            w_plus: Arc::new(move |z| vf(z) - Mat2::identity()),
            middle: None,
        }
    }

    /// Rebuild the jump value at a point from the factors.
    pub fn reconstruct(&self, z: C64) -> Mat2 {
        let bm_inv = (Mat2::identity() - (self.w_minus)(z)).inverse();
        let d = self.middle.as_ref().map_or(Mat2::identity(), |m| m(z));
        bm_inv * d * (Mat2::identity() + (self.w_plus)(z))
    }

    /// The `+` factor `b_+ = D (I + w_+)` including the middle part.
    pub fn b_plus(&self, z: C64) -> Mat2 {
        let d = self.middle.as_ref().map_or(Mat2::identity(), |m| m(z));
        d * (Mat2::identity() + (self.w_plus)(z))
    }

    /// The `-` factor `b_- = I - w_-`.
    pub fn b_minus(&self, z: C64) -> Mat2 {
        Mat2::identity() - (self.w_minus)(z)
    }
}

/// Algebraic upper-lower factorization of the oscillatory jump:
/// `w_- = [[0, r e^{i theta}], [0, 0]]`,
/// `w_+ = [[0, 0], [-conj(r) e^{-i theta}, 0]]`.
pub fn factor_upper_lower(r: &Reflection, x: f64, t: f64) -> Factorization {
    let rf = r.f.clone();
    let rc = r.f_conj.clone();
    let i = C64::new(0.0, 1.0);
    Factorization {
        w_minus: Arc::new(move |z| {
            let e = (i * theta(x, t, z)).exp();
            Mat2::new(C64::new(0.0, 0.0), rf(z) * e, C64::new(0.0, 0.0), C64::new(0.0, 0.0))
        }),
        w_plus: Arc::new(move |z| {
            let e = (-i * theta(x, t, z)).exp();
            Mat2::new(
                C64::new(0.0, 0.0),
                C64::new(0.0, 0.0),
                -rc(z) * e,
                C64::new(0.0, 0.0),
            )
        }),
        middle: None,
    }
}

/// Algebraic lower-diagonal-upper factorization of the same jump, with
/// the diagonal part `diag(1 - |r|^2, (1 - |r|^2)^{-1})` exposed as the
/// middle factor.
pub fn factor_lower_upper(r: &Reflection, x: f64, t: f64) -> Factorization {
    let rf = r.f.clone();
    let rc = r.f_conj.clone();
    let rf2 = rf.clone();
    let rc2 = rc.clone();
    let rf3 = rf.clone();
    let rc3 = rc.clone();
    let i = C64::new(0.0, 1.0);
    Factorization {
        w_minus: Arc::new(move |z| {
            let e = (-i * theta(x, t, z)).exp();
            let d = 1.0 - rf(z) * rc(z);
            Mat2::new(
                C64::new(0.0, 0.0),
                C64::new(0.0, 0.0),
                -rc(z) * e / d,
                C64::new(0.0, 0.0),
            )
        }),
        w_plus: Arc::new(move |z| {
            let e = (i * theta(x, t, z)).exp();
            let d = 1.0 - rf2(z) * rc2(z);
            Mat2::new(C64::new(0.0, 0.0), rf2(z) * e / d, C64::new(0.0, 0.0), C64::new(0.0, 0.0))
        }),
        middle: Some(Arc::new(move |z| {
            let d = 1.0 - rf3(z) * rc3(z);
            Mat2::diag(d, 1.0 / d)
        })),
    }
}

/// Pointwise size measure of a jump matrix on a grid: the max over
/// nodes of the larger Frobenius norm of `v` and `v^{-1}`.
pub fn mnorm(v: &JumpMatrix, grid: &CollocationGrid) -> f64 {
    let mut m = 0.0_f64;
    for i in 0..grid.total_nodes() {
        let val = v.eval(grid.node(i));
        m = m.max(val.frob()).max(val.inverse().frob());
    }
    m
}

/// A dense operator on stacked matrix-valued grid functions.
pub struct BlockOperator {
    pub mat: FMat,
    pub grid: Arc<CollocationGrid>,
}

/// Stack a matrix-valued grid function into a `4N` vector.
pub fn gf_to_vec(f: &GridFunction) -> Vec<C64> {
    let mut v = Vec::with_capacity(4 * f.values.len());
    for m in &f.values {
        v.extend_from_slice(&m.flatten());
    }
    v
}

/// Rebuild a grid function from a stacked vector.
pub fn vec_to_gf(grid: &Arc<CollocationGrid>, v: &[C64]) -> GridFunction {
    assert_eq!(v.len(), 4 * grid.total_nodes());
    GridFunction {
        grid: Arc::clone(grid),
        values: v
            .chunks_exact(4)
            .map(|c| Mat2::from_flat([c[0], c[1], c[2], c[3]]))
            .collect(),
    }
}

impl BlockOperator {
    /// Apply to a matrix-valued grid function.
    pub fn apply(&self, f: &GridFunction) -> GridFunction {
        let v = gf_to_vec(f);
        let out = crate::linalg::matvec(&self.mat, &v);
        vec_to_gf(&self.grid, &out)
    }
}

/// Accumulate into `out` the operator `h -> scalar_op(h * m)` where
/// `m` is sampled at the *source* node.
fn add_right_mult(out: &mut FMat, scalar: &FMat, mult: &[Mat2]) {
    let n = mult.len();
    for i in 0..n {
        for j in 0..n {
            let base = scalar[(i, j)];
            if base.re == 0.0 && base.im == 0.0 {
                continue;
            }
            let base = C64::new(base.re, base.im);
            let m = &mult[j];
            // (h m)[a][b] = sum_d h[a][d] m[d][b]
            for a in 0..2 {
                for b in 0..2 {
                    for d in 0..2 {
                        let row = i * 4 + a * 2 + b;
                        let col = j * 4 + a * 2 + d;
                        let add = base * m.a[d][b];
                        let cur = out[(row, col)];
                        out[(row, col)] = faer::c64 {
                            re: cur.re + add.re,
                            im: cur.im + add.im,
                        };
                    }
                }
            }
        }
    }
}

/// Like `add_right_mult` but with the multiplier sampled at the
/// *target* node: `h -> (scalar_op h) * m_i`.
fn add_right_mult_target(out: &mut FMat, scalar: &FMat, mult: &[Mat2]) {
    let n = mult.len();
    for i in 0..n {
        let m = &mult[i];
        for j in 0..n {
            let base = scalar[(i, j)];
            if base.re == 0.0 && base.im == 0.0 {
                continue;
            }
            let base = C64::new(base.re, base.im);
            for a in 0..2 {
                for b in 0..2 {
                    for d in 0..2 {
                        let row = i * 4 + a * 2 + b;
                        let col = j * 4 + a * 2 + d;
                        let add = base * m.a[d][b];
                        let cur = out[(row, col)];
                        out[(row, col)] = faer::c64 {
                            re: cur.re + add.re,
                            im: cur.im + add.im,
                        };
                    }
                }
            }
        }
    }
}

/// Assemble `C_v h = C-(h (v - I))` as a dense `4N` operator.
pub fn assemble_cv(grid: &Arc<CollocationGrid>, v: &JumpMatrix) -> BlockOperator {
    let n = grid.total_nodes();
    let cm = boundary_matrix(grid, Side::Minus);
    let mult: Vec<Mat2> = (0..n).map(|i| v.eval(grid.node(i)) - Mat2::identity()).collect();
    let mut mat = crate::linalg::from_fn(4 * n, 4 * n, |_, _| C64::new(0.0, 0.0));
    add_right_mult(&mut mat, &cm.mat, &mult);
    BlockOperator { mat, grid: Arc::clone(grid) }
}

/// Assemble `C_w h = C+(h w_-) + C-(h w_+)` as a dense operator. A
/// middle factor, if present, is folded into the `+` factor so that
/// `b_+ = D (I + w_+)` contributes `b_+ - I`.
pub fn assemble_cw(grid: &Arc<CollocationGrid>, f: &Factorization) -> BlockOperator {
    let n = grid.total_nodes();
    let cp = boundary_matrix(grid, Side::Plus);
    let cm = boundary_matrix(grid, Side::Minus);
    let wm: Vec<Mat2> = (0..n).map(|i| (f.w_minus)(grid.node(i))).collect();
    let wp: Vec<Mat2> = (0..n)
        .map(|i| f.b_plus(grid.node(i)) - Mat2::identity())
        .collect();
    let mut mat = crate::linalg::from_fn(4 * n, 4 * n, |_, _| C64::new(0.0, 0.0));
    add_right_mult(&mut mat, &cp.mat, &wm);
    add_right_mult(&mut mat, &cm.mat, &wp);
    BlockOperator { mat, grid: Arc::clone(grid) }
}

/// Assemble the dual operator `C'_v h = (C+ h)(I - v)` with the
/// multiplier at the target node (the transpose-dual partner of `C_v`
/// in the bilinear pairing).
pub fn dual_cv(grid: &Arc<CollocationGrid>, v: &JumpMatrix) -> BlockOperator {
    let n = grid.total_nodes();
    let cp = boundary_matrix(grid, Side::Plus);
    let mult: Vec<Mat2> = (0..n)
        .map(|i| Mat2::identity() - v.eval(grid.node(i)))
        .collect();
    let mut mat = crate::linalg::from_fn(4 * n, 4 * n, |_, _| C64::new(0.0, 0.0));
    add_right_mult_target(&mut mat, &cp.mat, &mult);
    BlockOperator { mat, grid: Arc::clone(grid) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contour::Contour;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn model_reflection_norms() {
        let r = Reflection::model(c(0.3, 0.4)).unwrap();
        assert!((r.rho - 0.5).abs() < 1e-15);
        assert!((r.l2 - 0.5 * std::f64::consts::PI.sqrt()).abs() < 1e-15);
        // numeric cross-check of the H1 data
        let num = Reflection::from_fn(
            move |x| c(0.3, 0.4) / c(1.0, x),
            2000.0,
        );
        assert!((num.l2 - r.l2).abs() < 1e-3, "{} vs {}", num.l2, r.l2);
        assert!((num.dl2 - r.dl2).abs() < 1e-3, "{} vs {}", num.dl2, r.dl2);
        assert!(Reflection::model(c(1.0, 0.0)).is_err());
    }

    #[test]
    fn jump_determinant_and_reconstruction() {
        let r = Reflection::model(c(0.5, 0.2)).unwrap();
        let v = nls_jump(&r, 1.3, 0.7);
        let ful = factor_upper_lower(&r, 1.3, 0.7);
        let flu = factor_lower_upper(&r, 1.3, 0.7);
        for x in [-3.0, -0.4, 0.0, 0.9, 7.5] {
            let z = c(x, 0.0);
            let vv = v.eval(z);
            assert!((vv.det() - C64::new(1.0, 0.0)).norm() < 1e-14);
            assert!((ful.reconstruct(z) - vv).frob() < 1e-14);
            assert!((flu.reconstruct(z) - vv).frob() < 1e-14);
            // self-adjoint combination: v + v* = 2 diag(1 - |r|^2, 1)
            let sum = vv + vv.adjoint();
            let rr = (r.at(z) * r.conj_at(z)).re;
            let want = Mat2::diag(C64::new(2.0 * (1.0 - rr), 0.0), C64::new(2.0, 0.0));
            assert!((sum - want).frob() < 1e-13);
        }
    }

    #[test]
    fn cv_operator_matches_pointwise_composition() {
        let grid =
            Arc::new(CollocationGrid::discretize(&Contour::real_line(), 60, 1e4).unwrap());
        let r = Reflection::model(c(0.4, 0.0)).unwrap();
        let v = nls_jump(&r, 0.0, 0.0);
        let op = assemble_cv(&grid, &v);
        let h = GridFunction::sample(&grid, |z| {
            Mat2::new(1.0 / (z * z + 1.0), c(0.0, 0.0), 1.0 / (z * z + 4.0), 1.0 / (z + c(0.0, 2.0)))
        });
        // reference: multiply pointwise then apply scalar C- entrywise
        let hv = GridFunction {
            grid: Arc::clone(&grid),
            values: (0..grid.total_nodes())
                .map(|i| h.values[i] * (v.eval(grid.node(i)) - Mat2::identity()))
                .collect(),
        };
        let cm = boundary_matrix(&grid, Side::Minus);
        let want = cm.apply_matrix(&hv);
        let got = op.apply(&h);
        let mut err = 0.0_f64;
        for i in 0..grid.total_nodes() {
            err = err.max((want.values[i] - got.values[i]).frob());
        }
        assert!(err < 1e-12, "operator mismatch {err:.3e}");
    }

    #[test]
    fn cw_operator_splits_cv() {
        // With the trivial factorization, C_w = C_v.
        let grid =
            Arc::new(CollocationGrid::discretize(&Contour::real_line(), 40, 1e4).unwrap());
        let r = Reflection::model(c(0.3, 0.1)).unwrap();
        let v = nls_jump(&r, 0.5, 0.0);
        let cv = assemble_cv(&grid, &v);
        let cw = assemble_cw(&grid, &Factorization::trivial(&v));
        let n = 4 * grid.total_nodes();
        let mut err = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                let d = cv.mat[(i, j)] - cw.mat[(i, j)];
                err = err.max((d.re * d.re + d.im * d.im).sqrt());
            }
        }
        assert!(err < 1e-13, "trivial C_w differs from C_v by {err:.3e}");
    }

    #[test]
    fn mnorm_of_identity_like_jump() {
        let grid =
            Arc::new(CollocationGrid::discretize(&Contour::real_line(), 24, 100.0).unwrap());
        let v = JumpMatrix::identity();
        let m = mnorm(&v, &grid);
        assert!((m - 2.0_f64.sqrt()).abs() < 1e-14);
    }
}
