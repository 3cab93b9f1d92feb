//! Discrete Cauchy operators on collocation grids.
//!
//! The boundary operators `C+` and `C-` (limits of the Cauchy integral
//! from the left/right of the oriented contour) are assembled as dense
//! matrices acting on node values. Per source piece the integral of
//! the barycentric interpolant against the Cauchy kernel is computed
//! with a singularity-subtraction rule: the kernel pole is pulled back
//! through the (Moebius) node map to a point `x_z` in the reference
//! plane, the interpolant is evaluated there barycentrically, and the
//! remaining difference quotient is smooth enough for the underlying
//! Gauss rule. On the diagonal (target equals a source node) the same
//! subtraction reduces to a principal-value rule with an exact
//! logarithmic endpoint term. `C+ - C- = I` holds exactly by
//! construction, and the half-jump term carries the orientation of
//! each piece.

use crate::contour::PieceKind;
use crate::error::{Result, RhError};
use crate::grid::{CollocationGrid, GridFunction, ScalarGridFunction};
use crate::linalg::FMat;
use crate::mat2::Mat2;
use num_complex::Complex64 as C64;
use std::sync::Arc;

/// Which one-sided boundary value of the Cauchy integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Plus,
    Minus,
}

/// A dense operator acting on scalar node values of a grid (and, by
/// acting entrywise, on 2x2-matrix-valued grid functions).
pub struct DenseOperator {
    pub mat: FMat,
    pub grid: Arc<CollocationGrid>,
}

impl DenseOperator {
    /// Apply to scalar node values.
    pub fn apply_scalar(&self, v: &[C64]) -> Vec<C64> {
        crate::linalg::matvec(&self.mat, v)
    }

    /// Apply to a scalar grid function.
    pub fn apply(&self, f: &ScalarGridFunction) -> ScalarGridFunction {
        ScalarGridFunction {
            grid: Arc::clone(&f.grid),
            values: self.apply_scalar(&f.values),
        }
    }

    /// Apply entrywise to a matrix-valued grid function.
    pub fn apply_matrix(&self, f: &GridFunction) -> GridFunction {
        let n = f.values.len();
        let mut comps: [Vec<C64>; 4] = [
            Vec::with_capacity(n),
            Vec::with_capacity(n),
            Vec::with_capacity(n),
            Vec::with_capacity(n),
        ];
        for m in &f.values {
            let fl = m.flatten();
            for k in 0..4 {
                comps[k].push(fl[k]);
            }
        }
        let out: Vec<Vec<C64>> = comps.iter().map(|c| self.apply_scalar(c)).collect();
        GridFunction {
            grid: Arc::clone(&f.grid),
            values: (0..n)
                .map(|i| Mat2::from_flat([out[0][i], out[1][i], out[2][i], out[3][i]]))
                .collect(),
        }
    }
}

/// Distance from a complex point to the real segment [-1, 1].
fn dist_to_reference(x: C64) -> f64 {
    if x.re.abs() <= 1.0 {
        x.im.abs()
    } else {
        (x - C64::new(x.re.signum(), 0.0)).norm()
    }
}

/// Integral over piece `p` of `interpolant(s) / (s - z) ds` in the
/// ascending-natural-parameter sense (no traversal sign, no `2 pi i`),
/// as a row over the piece's node values. `on_node = Some(i)` marks a
/// target that coincides with node `i` of this piece, in which case
/// the principal value is returned.
fn piece_kernel_row(
    grid: &CollocationGrid,
    p: usize,
    z: C64,
    on_node: Option<usize>,
) -> Vec<C64> {
    let pg = &grid.pieces[p];
    let piece = &grid.contour.pieces[p];
    let n = pg.len();
    let mut row = vec![C64::new(0.0, 0.0); n];

    if let Some(i) = on_node {
        // Principal value at node i:
        //   PV int q(x)/(x - x_i) dx
        //     = sum_{j != i} w_j (q_j - q_i)/(x_j - x_i)
        //       + w_i q'(x_i) + q_i log((1 - x_i)/(1 + x_i))
        // with q = h * dtau * (x - x_i)/(tau - tau_i), so q_i = h_i and
        // q'(x_i) = h'(x_i) + h_i * ddtau_i / (2 dtau_i).
        let xi = pg.x[i];
        let mut self_coeff = C64::new(
            (1.0 - xi).ln() - (1.0 + xi).ln()
                + pg.w[i] * (pg.diff[i * n + i] + pg.ddtau[i] / (2.0 * pg.dtau[i])),
            0.0,
        );
        for j in 0..n {
            if j == i {
                continue;
            }
            let dx = pg.x[j] - xi;
            let g = pg.dtau[j] * dx / (pg.tau[j] - pg.tau[i]);
            row[j] = C64::new(pg.w[j] * g / dx + pg.w[i] * pg.diff[i * n + j], 0.0);
            self_coeff -= pg.w[j] / dx;
        }
        row[i] = self_coeff;
        return row;
    }

    // Pull the pole back through the node map: zeta is the arc-length
    // coordinate of z along the piece's line, x_z its reference image.
    let d = piece.natural_dir();
    let zeta = (z - piece.start) * d.conj();
    let xz = match piece.kind {
        PieceKind::Segment => zeta * (2.0 / piece.length()) - 1.0,
        PieceKind::Ray => {
            let a = grid.ray_scale;
            let r = grid.truncation;
            (zeta * (1.0 + 2.0 * a / r) - a) / (zeta + a)
        }
    };

    if dist_to_reference(xz) > 0.25 {
        // Kernel is smooth on the piece: plain quadrature.
        for j in 0..n {
            row[j] = pg.w[j] * pg.dtau[j] / (pg.tau[j] - zeta);
        }
        return row;
    }

    // Singularity subtraction at the complex pre-image:
    //   int q(x)/(x - x_z) dx
    //     = sum_j w_j (q_j - q(x_z))/(x_j - x_z) + q(x_z) * L,
    //   L = Log((1 - x_z)/(-1 - x_z)),
    // where q = h * dtau * (x - x_z)/(tau - zeta) satisfies
    // q(x_z) = interpolant(x_z), evaluated barycentrically.
    let mut eval: Vec<C64> = (0..n).map(|j| C64::new(pg.bary[j], 0.0) / (xz - pg.x[j])).collect();
    let s: C64 = eval.iter().sum();
    for e in eval.iter_mut() {
        *e /= s;
    }
    let big_l = ((1.0 - xz) / (-1.0 - xz)).ln();
    let mut base = big_l;
    for j in 0..n {
        let dx = C64::new(pg.x[j], 0.0) - xz;
        let g = pg.dtau[j] * dx / (pg.tau[j] - zeta);
        row[j] = pg.w[j] * g / dx;
        base -= pg.w[j] / dx;
    }
    for j in 0..n {
        row[j] += eval[j] * base;
    }
    row
}

/// Row of the full-contour Cauchy integral `(2 pi i)^{-1} int h(s)/(s-z) ds`
/// over all node values, traversal signs included. For targets on the
/// contour this is the principal value.
pub fn cauchy_kernel_row(grid: &CollocationGrid, z: C64, on_node: Option<usize>) -> Vec<C64> {
    let n_pieces = grid.pieces.len();
    let npp = grid.n;
    let mut row = vec![C64::new(0.0, 0.0); grid.total_nodes()];
    let two_pi_i = C64::new(0.0, 2.0 * std::f64::consts::PI);
    for p in 0..n_pieces {
        let local_on = match on_node {
            Some(i) if i / npp == p => Some(i % npp),
            _ => None,
        };
        let pr = piece_kernel_row(grid, p, z, local_on);
        let sign = if grid.contour.pieces[p].reversed { -1.0 } else { 1.0 };
        for (j, v) in pr.into_iter().enumerate() {
            row[p * npp + j] = v * sign / two_pi_i;
        }
    }
    row
}

/// Assemble the one-sided boundary operator `C+` or `C-` on the grid.
pub fn boundary_matrix(grid: &Arc<CollocationGrid>, side: Side) -> DenseOperator {
    let n = grid.total_nodes();
    let mut mat = crate::linalg::from_fn(n, n, |_, _| C64::new(0.0, 0.0));
    for i in 0..n {
        let z = grid.node(i);
        let row = cauchy_kernel_row(grid, z, Some(i));
        for (j, v) in row.into_iter().enumerate() {
            mat[(i, j)] = faer::c64 { re: v.re, im: v.im };
        }
        let half = match side {
            Side::Plus => 0.5,
            Side::Minus => -0.5,
        };
        let d = mat[(i, i)];
        mat[(i, i)] = faer::c64 { re: d.re + half, im: d.im };
    }
    DenseOperator { mat, grid: Arc::clone(grid) }
}

/// The operator `I - 2 C+ = -(C+ + C-)`, the Hilbert transform in the
/// normalization where it squares to the identity on a complete
/// contour.
pub fn hilbert(grid: &Arc<CollocationGrid>) -> DenseOperator {
    let cp = boundary_matrix(grid, Side::Plus);
    let n = grid.total_nodes();
    let mut mat = cp.mat;
    for i in 0..n {
        for j in 0..n {
            let v = mat[(i, j)];
            mat[(i, j)] = faer::c64 { re: -2.0 * v.re, im: -2.0 * v.im };
        }
        let d = mat[(i, i)];
        mat[(i, i)] = faer::c64 { re: d.re + 1.0, im: d.im };
    }
    DenseOperator { mat, grid: Arc::clone(grid) }
}

/// Minimal distance from `z` to the grid nodes together with the local
/// spacing at the nearest node.
fn nearest_node(grid: &CollocationGrid, z: C64) -> (usize, f64) {
    let mut best = 0;
    let mut bestd = f64::INFINITY;
    for i in 0..grid.total_nodes() {
        let d = (grid.node(i) - z).norm();
        if d < bestd {
            bestd = d;
            best = i;
        }
    }
    (best, bestd)
}

fn off_contour_gate(grid: &CollocationGrid, z: C64) -> Result<()> {
    let (i, d) = nearest_node(grid, z);
    let spacing = grid.local_spacing(i);
    if d < spacing {
        return Err(RhError::Proximity(format!(
            "z = {z} is {d:.3e} from the contour; nearest local node spacing is {spacing:.3e}"
        )));
    }
    Ok(())
}

/// Cauchy integral of a scalar grid function at a point off the
/// contour. Rejects points closer to the contour than one local node
/// spacing: the boundary operators are the sanctioned way to evaluate
/// there.
pub fn cauchy_off_scalar(f: &ScalarGridFunction, z: C64) -> Result<C64> {
    off_contour_gate(&f.grid, z)?;
    let row = cauchy_kernel_row(&f.grid, z, None);
    Ok(row.iter().zip(&f.values).map(|(r, v)| r * v).sum())
}

/// Cauchy integral of a matrix-valued grid function off the contour.
pub fn cauchy_off(f: &GridFunction, z: C64) -> Result<Mat2> {
    off_contour_gate(&f.grid, z)?;
    let row = cauchy_kernel_row(&f.grid, z, None);
    let mut acc = Mat2::zero();
    for (r, v) in row.iter().zip(&f.values) {
        acc = acc + v.scale(*r);
    }
    Ok(acc)
}

/// Density of the product of two Cauchy integrals: with
/// `H = -(C+ + C-)`, the function `h = -((Hf) g + f (Hg))/2` satisfies
/// `C(f) C(g) = C(h)` off the contour.
pub fn product_density(f: &ScalarGridFunction, g: &ScalarGridFunction) -> ScalarGridFunction {
    assert_eq!(f.values.len(), g.values.len());
    let h = hilbert(&f.grid);
    let hf = h.apply_scalar(&f.values);
    let hg = h.apply_scalar(&g.values);
    let values = (0..f.values.len())
        .map(|i| (hf[i] * g.values[i] + f.values[i] * hg[i]) * (-0.5))
        .collect();
    ScalarGridFunction { grid: Arc::clone(&f.grid), values }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contour::Contour;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn real_grid(n: usize, r: f64) -> Arc<CollocationGrid> {
        Arc::new(CollocationGrid::discretize(&Contour::real_line(), n, r).unwrap())
    }

    #[test]
    fn plemelj_jump_is_identity() {
        let g = real_grid(40, 1e4);
        let cp = boundary_matrix(&g, Side::Plus);
        let cm = boundary_matrix(&g, Side::Minus);
        let n = g.total_nodes();
        for i in 0..n {
            for j in 0..n {
                let d = cp.mat[(i, j)] - cm.mat[(i, j)];
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((d.re - want).abs() < 1e-15 && d.im.abs() < 1e-15);
            }
        }
    }

    #[test]
    fn boundary_values_of_plus_function() {
        // h(s) = 1/(s + i) extends analytically to the upper half
        // plane and decays, so C+ h = h and C- h = 0.
        let g = real_grid(200, 1e8);
        let h = ScalarGridFunction::sample(&g, |z| 1.0 / (z + c(0.0, 1.0)));
        let cp = boundary_matrix(&g, Side::Plus).apply(&h);
        let cm = boundary_matrix(&g, Side::Minus).apply(&h);
        let mut err_p = 0.0_f64;
        let mut err_m = 0.0_f64;
        for i in 0..g.total_nodes() {
            err_p = err_p.max((cp.values[i] - h.values[i]).norm());
            err_m = err_m.max(cm.values[i].norm());
        }
        assert!(err_p < 1e-7, "C+ reproduction error {err_p:.3e}");
        assert!(err_m < 1e-7, "C- annihilation error {err_m:.3e}");
    }

    #[test]
    fn hilbert_of_lorentzian() {
        // With H = -(C+ + C-): H[1/(1+s^2)](z) = -i z/(1+z^2).
        let g = real_grid(160, 1e5);
        let f = ScalarGridFunction::sample(&g, |z| 1.0 / (z * z + 1.0));
        let hf = hilbert(&g).apply(&f);
        let mut err = 0.0_f64;
        for i in 0..g.total_nodes() {
            let z = g.node(i);
            let want = c(0.0, -1.0) * z / (z * z + 1.0);
            err = err.max((hf.values[i] - want).norm());
        }
        assert!(err < 1e-8, "hilbert error {err:.3e}");
    }

    #[test]
    fn off_contour_values_and_gate() {
        let g = real_grid(200, 1e8);
        let h = ScalarGridFunction::sample(&g, |z| 1.0 / (z + c(0.0, 1.0)));
        // Upper half plane: C(h)(z) = h(z); lower half plane: 0.
        let zu = c(0.7, 1.3);
        let vu = cauchy_off_scalar(&h, zu).unwrap();
        assert!((vu - 1.0 / (zu + c(0.0, 1.0))).norm() < 1e-7, "{vu}");
        let zl = c(-0.4, -2.0);
        let vl = cauchy_off_scalar(&h, zl).unwrap();
        assert!(vl.norm() < 1e-7, "{vl}");
        // Proximity gate.
        let znear = g.node(3) + c(0.0, 1e-12);
        assert!(cauchy_off_scalar(&h, znear).is_err());
    }

    #[test]
    fn product_of_cauchy_integrals() {
        let g = real_grid(200, 1e5);
        let f = ScalarGridFunction::sample(&g, |z| 1.0 / (z * z + 1.0));
        let q = ScalarGridFunction::sample(&g, |z| z / (z * z + 4.0));
        let h = product_density(&f, &q);
        for z in [c(0.3, 0.9), c(-1.2, 2.0), c(0.1, -1.4)] {
            let lhs = cauchy_off_scalar(&f, z).unwrap() * cauchy_off_scalar(&q, z).unwrap();
            let rhs = cauchy_off_scalar(&h, z).unwrap();
            assert!((lhs - rhs).norm() < 1e-8, "at {z}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn boundary_matches_offset_limit() {
        // Richardson check: C+ h at a node equals the limit of the
        // off-contour Cauchy integral from above.
        let g = real_grid(160, 1e5);
        let h = ScalarGridFunction::sample(&g, |z| 1.0 / (z * z + 2.0 * z + 5.0));
        let cp = boundary_matrix(&g, Side::Plus).apply(&h);
        let i = 30;
        let z0 = g.node(i);
        // polynomial extrapolation in eps from three offsets
        let eps = [0.08, 0.04, 0.02];
        let vals: Vec<C64> = eps
            .iter()
            .map(|&e| cauchy_off_scalar(&h, z0 + c(0.0, e)).unwrap())
            .collect();
        // Neville to eps = 0 (three points, quadratic model).
        let f01 = (vals[1] * eps[0] - vals[0] * eps[1]) / (eps[0] - eps[1]);
        let f12 = (vals[2] * eps[1] - vals[1] * eps[2]) / (eps[1] - eps[2]);
        let f012 = (f12 * eps[0] - f01 * eps[2]) / (eps[0] - eps[2]);
        assert!((f012 - cp.values[i]).norm() < 1e-6, "{f012} vs {}", cp.values[i]);
    }

    #[test]
    fn cross_contour_plus_function() {
        // On the cross, 1/(z - z0) with z0 in the interior of the
        // second quadrant is analytic across the first/third/fourth
        // quadrant sectors; check C+ C- h = C+ (C- h) is small for a
        // smooth decaying density (complementary projections).
        let contour = Contour::cross();
        let g =
            Arc::new(CollocationGrid::discretize(&contour, 160, 1e8).unwrap());
        let h = ScalarGridFunction::sample(&g, |z| {
            let w = z - c(1.0, 1.0);
            1.0 / (w * w + 4.0)
        });
        let cp = boundary_matrix(&g, Side::Plus);
        let cm = boundary_matrix(&g, Side::Minus);
        let cmh = cm.apply(&h);
        let cpcmh = cp.apply(&cmh);
        let norm_in = h.lp_norm(2.0).unwrap();
        let norm_out = cpcmh.lp_norm(2.0).unwrap();
        assert!(
            norm_out / norm_in < 1e-6,
            "C+ C- not small on cross: {:.3e}",
            norm_out / norm_in
        );
    }
}
