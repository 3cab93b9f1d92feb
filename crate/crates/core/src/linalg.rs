//! Dense linear algebra helpers on top of `faer`.
//!
//! The discretized singular-integral operators live here as dense
//! complex matrices. This module provides LU factorization wrappers,
//! explicit inverses, and operator-norm estimation in the weighted
//! mixed norms used by the rest of the crate: grid functions carry a
//! per-node weight and a per-node block (Frobenius) norm, so the
//! natural operator norm is an `L^p` norm of block `l^2` norms.

use crate::error::{Result, RhError};
use faer::prelude::*;
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Dense complex matrix type used throughout.
pub type FMat = Mat<c64>;

#[inline]
fn to_f(z: C64) -> c64 {
    c64 { re: z.re, im: z.im }
}

#[inline]
fn to_c(z: c64) -> C64 {
    C64::new(z.re, z.im)
}

/// Build a dense matrix from an entry function.
pub fn from_fn(m: usize, n: usize, f: impl Fn(usize, usize) -> C64) -> FMat {
    Mat::from_fn(m, n, |i, j| to_f(f(i, j)))
}

/// Identity matrix.
pub fn identity(n: usize) -> FMat {
    Mat::from_fn(n, n, |i, j| {
        if i == j {
            c64 { re: 1.0, im: 0.0 }
        } else {
            c64 { re: 0.0, im: 0.0 }
        }
    })
}

/// Matrix-vector product.
pub fn matvec(a: &FMat, x: &[C64]) -> Vec<C64> {
    let n = a.ncols();
    assert_eq!(n, x.len(), "matvec shape mismatch");
    let mut y = vec![C64::new(0.0, 0.0); a.nrows()];
    for j in 0..n {
        let xj = x[j];
        if xj == C64::new(0.0, 0.0) {
            continue;
        }
        for i in 0..a.nrows() {
            y[i] += to_c(a[(i, j)]) * xj;
        }
    }
    y
}

/// Adjoint matrix-vector product `A^H x`.
pub fn matvec_adj(a: &FMat, x: &[C64]) -> Vec<C64> {
    let m = a.nrows();
    assert_eq!(m, x.len(), "matvec_adj shape mismatch");
    let mut y = vec![C64::new(0.0, 0.0); a.ncols()];
    for j in 0..a.ncols() {
        let mut s = C64::new(0.0, 0.0);
        for i in 0..m {
            s += to_c(a[(i, j)]).conj() * x[i];
        }
        y[j] = s;
    }
    y
}

/// LU factorization wrapper with vector solves.
pub struct Lu {
    lu: faer::linalg::solvers::PartialPivLu<c64>,
    n: usize,
}

impl Lu {
    /// Factor a square matrix.
    pub fn new(a: &FMat) -> Result<Lu> {
        if a.nrows() != a.ncols() {
            return Err(RhError::ShapeMismatch(format!(
                "LU needs a square matrix, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        Ok(Lu { lu: a.partial_piv_lu(), n: a.nrows() })
    }

    /// Solve `A x = b`.
    pub fn solve_vec(&self, b: &[C64]) -> Vec<C64> {
        assert_eq!(b.len(), self.n);
        let rhs = Mat::from_fn(self.n, 1, |i, _| to_f(b[i]));
        let x = self.lu.solve(&rhs);
        (0..self.n).map(|i| to_c(x[(i, 0)])).collect()
    }

    /// Solve `A^H x = b`.
    pub fn solve_adjoint_vec(&self, b: &[C64]) -> Vec<C64> {
        assert_eq!(b.len(), self.n);
        let rhs = Mat::from_fn(self.n, 1, |i, _| to_f(b[i]));
        let x = self.lu.solve_adjoint(&rhs);
        (0..self.n).map(|i| to_c(x[(i, 0)])).collect()
    }

    /// Dense inverse (one solve per column).
    pub fn inverse(&self) -> FMat {
        self.lu.solve(&identity(self.n))
    }

    /// Solve `A X = B` for a matrix right-hand side.
    pub fn solve_mat(&self, b: &FMat) -> FMat {
        assert_eq!(b.nrows(), self.n);
        self.lu.solve(b)
    }

    /// Dimension of the factored matrix.
    pub fn dim(&self) -> usize {
        self.n
    }
}

/// Mixed norm of a block vector: `L^p` over nodes of the block
/// euclidean norms, with per-node weights (`w.len() * block ==
/// v.len()`); `p = inf` gives the weighted-independent sup.
pub fn mixed_norm(v: &[C64], w: &[f64], block: usize, p: f64) -> f64 {
    assert_eq!(v.len(), w.len() * block);
    let blocks = w.len();
    let bn = |i: usize| -> f64 {
        (0..block)
            .map(|k| v[i * block + k].norm_sqr())
            .sum::<f64>()
            .sqrt()
    };
    if p.is_infinite() {
        (0..blocks).map(bn).fold(0.0, f64::max)
    } else {
        (0..blocks)
            .map(|i| w[i] * bn(i).powf(p))
            .sum::<f64>()
            .powf(1.0 / p)
    }
}

/// Normalize a block vector to unit mixed norm (in place); returns the
/// previous norm.
fn normalize(v: &mut [C64], w: &[f64], block: usize, p: f64) -> f64 {
    let n = mixed_norm(v, w, block, p);
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
    n
}

/// Dual vector of `v` in the weighted mixed `L^p` pairing
/// `<xi, v> = sum_i w_i <xi_i, v_i>_{C^block}`: the returned `xi` has
/// unit dual norm and pairs with `v` to `mixed_norm(v)`.
fn dualize(v: &[C64], w: &[f64], block: usize, p: f64) -> Vec<C64> {
    let blocks = w.len();
    let mut xi = vec![C64::new(0.0, 0.0); v.len()];
    let norm = mixed_norm(v, w, block, p);
    if norm == 0.0 {
        return xi;
    }
    if p.is_infinite() {
        // Dual of sup is weighted-L1: put all mass on a maximizing block.
        let mut best = 0;
        let mut bestn = -1.0;
        for i in 0..blocks {
            let bn = (0..block)
                .map(|k| v[i * block + k].norm_sqr())
                .sum::<f64>()
                .sqrt();
            if bn > bestn {
                bestn = bn;
                best = i;
            }
        }
        for k in 0..block {
            xi[best * block + k] = v[best * block + k] / (bestn * w[best]);
        }
        return xi;
    }
    for i in 0..blocks {
        let bn = (0..block)
            .map(|k| v[i * block + k].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if bn == 0.0 {
            continue;
        }
        let scale = bn.powf(p - 1.0) / bn / norm.powf(p - 1.0);
        for k in 0..block {
            xi[i * block + k] = v[i * block + k] * scale;
        }
    }
    xi
}

/// Lower bound for the operator mixed-`L^p` norm of `apply` via the
/// power method with dual corrections, maximized over random restarts.
/// `apply_adj` must be the adjoint in the *weighted* pairing.
#[allow(clippy::too_many_arguments)]
pub fn op_norm_lower<A, B>(
    apply: A,
    apply_adj: B,
    dim: usize,
    w: &[f64],
    block: usize,
    p: f64,
    restarts: usize,
    iters: usize,
    seed: u64,
) -> f64
where
    A: Fn(&[C64]) -> Vec<C64>,
    B: Fn(&[C64]) -> Vec<C64>,
{
    let q = if p.is_infinite() { 1.0 } else if p == 1.0 { f64::INFINITY } else { p / (p - 1.0) };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: f64 = 0.0;
    for _ in 0..restarts.max(1) {
        let mut x: Vec<C64> = (0..dim)
            .map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        normalize(&mut x, w, block, p);
        for _ in 0..iters {
            let y = apply(&x);
            let ny = mixed_norm(&y, w, block, p);
            if ny > best {
                best = ny;
            }
            if ny == 0.0 {
                break;
            }
            let xi = dualize(&y, w, block, p);
            let mut z = apply_adj(&xi);
            // Steepest-ascent update: x aligned with the dual of z.
            z = dualize(&z, w, block, q);
            x = z;
            normalize(&mut x, w, block, p);
        }
    }
    best
}

/// Adjoint of a dense matrix in the weighted pairing:
/// `A^*_w = W^{-1} A^H W` applied to a vector.
pub fn weighted_adj_apply(a: &FMat, w: &[f64], block: usize, x: &[C64]) -> Vec<C64> {
    let mut wx: Vec<C64> = x.to_vec();
    for i in 0..w.len() {
        for k in 0..block {
            wx[i * block + k] *= w[i];
        }
    }
    let mut y = matvec_adj(a, &wx);
    for i in 0..w.len() {
        for k in 0..block {
            y[i * block + k] /= w[i];
        }
    }
    y
}

/// Upper bound for the weighted sup-norm operator norm of a dense
/// block matrix: the max over block rows of the sum of block Frobenius
/// norms (Frobenius dominates the spectral norm of each block).
pub fn op_norm_inf_upper(a: &FMat, blocks: usize, block: usize) -> f64 {
    let mut best = 0.0_f64;
    for i in 0..blocks {
        let mut row = 0.0;
        for j in 0..blocks {
            let mut fr = 0.0;
            for bi in 0..block {
                for bj in 0..block {
                    let z = a[(i * block + bi, j * block + bj)];
                    fr += z.re * z.re + z.im * z.im;
                }
            }
            row += fr.sqrt();
        }
        best = best.max(row);
    }
    best
}

/// Largest singular value of a dense matrix in the weighted `L^2`
/// block norm, via power iteration on `A^* A` (the weighted adjoint).
pub fn sigma_max(a: &FMat, w: &[f64], block: usize, iters: usize, seed: u64) -> f64 {
    op_norm_lower(
        |x| matvec(a, x),
        |x| weighted_adj_apply(a, w, block, x),
        a.ncols(),
        w,
        block,
        2.0,
        2,
        iters,
        seed,
    )
}

/// Condition number estimate `sigma_max(A) * sigma_max(A^{-1})` using
/// power iteration with LU solves for the inverse factor.
pub fn condition_estimate(a: &FMat, lu: &Lu, w: &[f64], block: usize, seed: u64) -> f64 {
    let s1 = sigma_max(a, w, block, 40, seed);
    let s2 = op_norm_lower(
        |x| lu.solve_vec(x),
        |x| {
            let mut wx: Vec<C64> = x.to_vec();
            for i in 0..w.len() {
                for k in 0..block {
                    wx[i * block + k] *= w[i];
                }
            }
            let mut y = lu.solve_adjoint_vec(&wx);
            for i in 0..w.len() {
                for k in 0..block {
                    y[i * block + k] /= w[i];
                }
            }
            y
        },
        lu.dim(),
        w,
        block,
        2.0,
        2,
        40,
        seed ^ 0x9e3779b97f4a7c15,
    );
    s1 * s2
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn lu_solve_roundtrip() {
        let n = 40;
        let a = from_fn(n, n, |i, j| {
            let d = if i == j { 3.0 } else { 0.0 };
            c(d + 0.1 * ((i * 7 + j * 3) % 5) as f64, 0.05 * ((i + 2 * j) % 7) as f64)
        });
        let lu = Lu::new(&a).unwrap();
        let b: Vec<C64> = (0..n).map(|i| c(i as f64, -(i as f64) / 3.0)).collect();
        let x = lu.solve_vec(&b);
        let r = matvec(&a, &x);
        let err: f64 = r.iter().zip(&b).map(|(u, v)| (u - v).norm()).sum();
        assert!(err < 1e-10, "residual {err}");
        // adjoint solve
        let y = lu.solve_adjoint_vec(&b);
        let r2 = matvec_adj(&a, &y);
        let err2: f64 = r2.iter().zip(&b).map(|(u, v)| (u - v).norm()).sum();
        assert!(err2 < 1e-10, "adjoint residual {err2}");
    }

    #[test]
    fn sigma_max_of_diagonal() {
        let n = 16;
        let a = from_fn(n, n, |i, j| {
            if i == j {
                c(1.0 + i as f64, 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        let w = vec![1.0; n];
        let s = sigma_max(&a, &w, 1, 200, 7);
        assert!((s - n as f64).abs() / (n as f64) < 1e-6, "sigma {s}");
    }

    #[test]
    fn weighted_two_norm_matches_similarity() {
        // For diagonal weights, the weighted L2 operator norm equals
        // sigma_max(W^{1/2} A W^{-1/2}).
        let n = 10;
        let a = from_fn(n, n, |i, j| c(((i + 1) * (j + 2) % 7) as f64, ((i * j) % 3) as f64));
        let w: Vec<f64> = (0..n).map(|i| 0.5 + (i as f64) / 4.0).collect();
        let s_weighted = sigma_max(&a, &w, 1, 200, 3);
        let b = from_fn(n, n, |i, j| {
            C64::new(a[(i, j)].re, a[(i, j)].im) * (w[i].sqrt() / w[j].sqrt())
        });
        let s_plain = sigma_max(&b, &vec![1.0; n], 1, 200, 3);
        assert!(
            (s_weighted - s_plain).abs() / s_plain < 1e-6,
            "{s_weighted} vs {s_plain}"
        );
    }

    #[test]
    fn inf_norm_upper_bound_dominates() {
        let n = 8;
        let a = from_fn(n, n, |i, j| c((i + j) as f64 / 3.0, (i as f64) - (j as f64)));
        let w = vec![1.0; n];
        let lower = op_norm_lower(
            |x| matvec(&a, x),
            |x| weighted_adj_apply(&a, &w, 1, x),
            n,
            &w,
            1,
            f64::INFINITY,
            4,
            20,
            11,
        );
        let upper = op_norm_inf_upper(&a, n, 1);
        assert!(lower <= upper * (1.0 + 1e-12), "{lower} > {upper}");
        assert!(lower > 0.5 * upper, "power method too loose: {lower} vs {upper}");
    }
}
