//! Collocation grids on contours and functions sampled on them.
//!
//! Each contour piece carries an `n`-point Gauss-Legendre rule mapped
//! onto the piece: affinely for segments, and through a rational map
//! for rays so that nodes accumulate near the finite endpoint while a
//! single rule still covers an unbounded tail up to a truncation
//! radius. Barycentric interpolation and spectral differentiation on
//! the underlying nodes drive the singular-integral assembly.

use crate::contour::{Contour, PieceKind};
use crate::error::{Result, RhError};
use crate::mat2::Mat2;
use gauss_quad::GaussLegendre;
use num_complex::Complex64 as C64;
use std::io::Write;
use std::num::NonZeroUsize;
use std::sync::Arc;

/// Default scale of the rational ray map (controls where half of the
/// nodes land: at parameter values below roughly this scale).
pub const DEFAULT_RAY_SCALE: f64 = 2.0;

/// Quadrature and interpolation data for one contour piece.
#[derive(Debug, Clone)]
pub struct PieceGrid {
    /// Gauss-Legendre nodes in `[-1, 1]`, ascending.
    pub x: Vec<f64>,
    /// Gauss-Legendre weights.
    pub w: Vec<f64>,
    /// Natural parameter (arc length from the piece start) per node.
    pub tau: Vec<f64>,
    /// First derivative of the parameter map at each node.
    pub dtau: Vec<f64>,
    /// Second derivative of the parameter map at each node.
    pub ddtau: Vec<f64>,
    /// Node locations in the plane.
    pub nodes: Vec<C64>,
    /// Barycentric weights of the reference nodes.
    pub bary: Vec<f64>,
    /// Spectral differentiation matrix (d/dx at nodes), row-major.
    pub diff: Vec<f64>,
}

impl PieceGrid {
    fn build(
        piece_len: f64,
        ray_scale: f64,
        truncation: f64,
        xw: &[(f64, f64)],
    ) -> PieceGrid {
        let n = xw.len();
        let mut x = Vec::with_capacity(n);
        let mut w = Vec::with_capacity(n);
        let mut tau = Vec::with_capacity(n);
        let mut dtau = Vec::with_capacity(n);
        let mut ddtau = Vec::with_capacity(n);
        for &(xi, wi) in xw {
            x.push(xi);
            w.push(wi);
            if piece_len.is_finite() {
                tau.push(piece_len * (1.0 + xi) / 2.0);
                dtau.push(piece_len / 2.0);
                ddtau.push(0.0);
            } else {
                // tau(x) = a(1+x)/(1-x+2a/R): maps [-1,1] to [0,R].
                let a = ray_scale;
                let d = 1.0 - xi + 2.0 * a / truncation;
                let c = a * (2.0 + 2.0 * a / truncation);
                tau.push(a * (1.0 + xi) / d);
                dtau.push(c / (d * d));
                ddtau.push(2.0 * c / (d * d * d));
            }
        }
        // Barycentric weights for Gauss-Legendre nodes.
        let mut bary = Vec::with_capacity(n);
        for (k, &(xi, wi)) in xw.iter().enumerate() {
            let b = ((1.0 - xi * xi) * wi).sqrt();
            bary.push(if k % 2 == 0 { b } else { -b });
        }
        // Differentiation matrix from barycentric weights.
        let mut diff = vec![0.0; n * n];
        for i in 0..n {
            let mut rowsum = 0.0;
            for j in 0..n {
                if i != j {
                    let d = bary[j] / bary[i] / (x[i] - x[j]);
                    diff[i * n + j] = d;
                    rowsum += d;
                }
            }
            diff[i * n + i] = -rowsum;
        }
        PieceGrid { x, w, tau, dtau, ddtau, nodes: Vec::new(), bary, diff }
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.x.len()
    }

    /// True if the grid carries no nodes.
    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Barycentric interpolation row at reference coordinate `xs`:
    /// `p(xs) = sum_j row[j] * f_j` for data at the piece nodes.
    pub fn eval_row(&self, xs: f64) -> Vec<f64> {
        let n = self.len();
        for j in 0..n {
            if (xs - self.x[j]).abs() < 1e-14 {
                let mut row = vec![0.0; n];
                row[j] = 1.0;
                return row;
            }
        }
        let mut row: Vec<f64> = (0..n).map(|j| self.bary[j] / (xs - self.x[j])).collect();
        let s: f64 = row.iter().sum();
        for r in row.iter_mut() {
            *r /= s;
        }
        row
    }

    /// Derivative row at reference coordinate `xs`:
    /// `p'(xs) = sum_j row[j] * f_j`.
    pub fn deriv_row(&self, xs: f64) -> Vec<f64> {
        let n = self.len();
        for j in 0..n {
            if (xs - self.x[j]).abs() < 1e-14 {
                return self.diff[j * n..(j + 1) * n].to_vec();
            }
        }
        let sj: Vec<f64> = (0..n).map(|j| self.bary[j] / (xs - self.x[j])).collect();
        let qj: Vec<f64> = (0..n).map(|j| sj[j] / (xs - self.x[j])).collect();
        let s: f64 = sj.iter().sum();
        let q: f64 = qj.iter().sum();
        let ev = self.eval_row(xs);
        (0..n).map(|j| (q * ev[j] - qj[j]) / s).collect()
    }
}

/// A quadrature/collocation grid over all pieces of a contour.
#[derive(Debug, Clone)]
pub struct CollocationGrid {
    pub contour: Contour,
    /// Nodes per piece.
    pub n: usize,
    /// Truncation radius for ray pieces.
    pub truncation: f64,
    /// Scale of the rational ray map.
    pub ray_scale: f64,
    pub pieces: Vec<PieceGrid>,
}

impl CollocationGrid {
    /// Discretize `contour` with `n` nodes per piece, truncating rays
    /// at radius `truncation`, using the default ray-map scale.
    pub fn discretize(contour: &Contour, n: usize, truncation: f64) -> Result<CollocationGrid> {
        Self::discretize_scaled(contour, n, truncation, DEFAULT_RAY_SCALE)
    }

    /// Discretize with an explicit ray-map scale.
    pub fn discretize_scaled(
        contour: &Contour,
        n: usize,
        truncation: f64,
        ray_scale: f64,
    ) -> Result<CollocationGrid> {
        if n < 4 {
            return Err(RhError::InvalidParameter(format!(
                "need at least 4 nodes per piece, got {n}"
            )));
        }
        if truncation <= 0.0 || ray_scale <= 0.0 {
            return Err(RhError::InvalidParameter(
                "truncation radius and ray scale must be positive".into(),
            ));
        }
        let rule = GaussLegendre::new(NonZeroUsize::new(n).unwrap());
        let mut xw = rule.into_node_weight_pairs().into_vec();
        xw.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut pieces = Vec::with_capacity(contour.pieces.len());
        for piece in &contour.pieces {
            let mut pg = PieceGrid::build(piece.length(), ray_scale, truncation, &xw);
            pg.nodes = pg.tau.iter().map(|&t| piece.point(t)).collect();
            pieces.push(pg);
        }
        Ok(CollocationGrid {
            contour: contour.clone(),
            n,
            truncation,
            ray_scale,
            pieces,
        })
    }

    /// Total number of nodes over all pieces.
    pub fn total_nodes(&self) -> usize {
        self.pieces.iter().map(|p| p.len()).sum()
    }

    /// Split a global node index into (piece index, local index).
    pub fn split_index(&self, i: usize) -> (usize, usize) {
        (i / self.n, i % self.n)
    }

    /// Node location by global index.
    pub fn node(&self, i: usize) -> C64 {
        let (p, k) = self.split_index(i);
        self.pieces[p].nodes[k]
    }

    /// Positive arc-length weight by global index (for norms).
    pub fn arc_weight(&self, i: usize) -> f64 {
        let (p, k) = self.split_index(i);
        self.pieces[p].w[k] * self.pieces[p].dtau[k]
    }

    /// Complex line-element weight by global index, in the traversal
    /// sense of the piece (for contour integrals).
    pub fn complex_weight(&self, i: usize) -> C64 {
        let (p, k) = self.split_index(i);
        // Quadrature runs over the ascending natural parameter, so the
        // traversal sign is carried entirely by the effective tangent.
        let dir = self.contour.pieces[p].effective_dir();
        dir * (self.pieces[p].w[k] * self.pieces[p].dtau[k])
    }

    /// Approximate distance between a node and its nearest neighbor on
    /// the same piece.
    pub fn local_spacing(&self, i: usize) -> f64 {
        let (p, k) = self.split_index(i);
        let pg = &self.pieces[p];
        let mut d = f64::INFINITY;
        if k > 0 {
            d = d.min((pg.nodes[k] - pg.nodes[k - 1]).norm());
        }
        if k + 1 < pg.len() {
            d = d.min((pg.nodes[k + 1] - pg.nodes[k]).norm());
        }
        d
    }

    /// Reference coordinate of arc-length parameter `tau` on piece `p`
    /// (inverse of the node map).
    pub fn tau_to_x(&self, p: usize, tau: f64) -> f64 {
        let piece = &self.contour.pieces[p];
        match piece.kind {
            PieceKind::Segment => 2.0 * tau / piece.length() - 1.0,
            PieceKind::Ray => {
                let a = self.ray_scale;
                let r = self.truncation;
                (tau * (1.0 + 2.0 * a / r) - a) / (tau + a)
            }
        }
    }

    /// Integrate a complex-valued function over the whole contour in
    /// the traversal sense using the grid weights.
    pub fn integrate<F: Fn(C64) -> C64>(&self, f: F) -> C64 {
        let mut s = C64::new(0.0, 0.0);
        for i in 0..self.total_nodes() {
            s += f(self.node(i)) * self.complex_weight(i);
        }
        s
    }
}

/// A 2x2 matrix-valued function sampled at the grid nodes.
#[derive(Debug, Clone)]
pub struct GridFunction {
    pub grid: Arc<CollocationGrid>,
    pub values: Vec<Mat2>,
}

impl GridFunction {
    /// Sample a pointwise function on the grid.
    pub fn sample<F: Fn(C64) -> Mat2>(grid: &Arc<CollocationGrid>, f: F) -> GridFunction {
        let values = (0..grid.total_nodes()).map(|i| f(grid.node(i))).collect();
        GridFunction { grid: Arc::clone(grid), values }
    }

    /// Constant function equal to `m` everywhere.
    pub fn constant(grid: &Arc<CollocationGrid>, m: Mat2) -> GridFunction {
        GridFunction {
            grid: Arc::clone(grid),
            values: vec![m; grid.total_nodes()],
        }
    }

    /// Discrete L^p norm with the arc-length weights; `p` must be at
    /// least 1, with `f64::INFINITY` for the sup norm. Entrywise size
    /// of the matrix values is measured in the Frobenius norm.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        lp_norm_impl(&self.grid, self.values.iter().map(|m| m.frob()), p)
    }

    /// Pointwise product with another grid function (same grid).
    pub fn pointwise_mul(&self, other: &GridFunction) -> GridFunction {
        GridFunction {
            grid: Arc::clone(&self.grid),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| *a * *b)
                .collect(),
        }
    }

    /// Write the sampled values as CSV with one row per node.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(
            out,
            "piece,re_node,im_node,weight,re_v11,im_v11,re_v12,im_v12,re_v21,im_v21,re_v22,im_v22"
        )?;
        for i in 0..self.grid.total_nodes() {
            let (p, _) = self.grid.split_index(i);
            let z = self.grid.node(i);
            let w = self.grid.arc_weight(i);
            let v = self.values[i].flatten();
            writeln!(
                out,
                "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                p, z.re, z.im, w, v[0].re, v[0].im, v[1].re, v[1].im, v[2].re, v[2].im, v[3].re,
                v[3].im
            )?;
        }
        Ok(())
    }
}

/// A scalar complex function sampled at the grid nodes.
#[derive(Debug, Clone)]
pub struct ScalarGridFunction {
    pub grid: Arc<CollocationGrid>,
    pub values: Vec<C64>,
}

impl ScalarGridFunction {
    /// Sample a pointwise scalar function on the grid.
    pub fn sample<F: Fn(C64) -> C64>(grid: &Arc<CollocationGrid>, f: F) -> ScalarGridFunction {
        let values = (0..grid.total_nodes()).map(|i| f(grid.node(i))).collect();
        ScalarGridFunction { grid: Arc::clone(grid), values }
    }

    /// Discrete L^p norm with the arc-length weights.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        lp_norm_impl(&self.grid, self.values.iter().map(|v| v.norm()), p)
    }
}

fn lp_norm_impl<I: Iterator<Item = f64>>(
    grid: &CollocationGrid,
    sizes: I,
    p: f64,
) -> Result<f64> {
    if p.is_infinite() {
        return Ok(sizes.fold(0.0, f64::max));
    }
    if !(p >= 1.0) {
        return Err(RhError::InvalidParameter(format!(
            "lp_norm requires p >= 1 or infinity, got {p}"
        )));
    }
    let mut s = 0.0;
    for (i, sz) in sizes.enumerate() {
        s += grid.arc_weight(i) * sz.powf(p);
    }
    Ok(s.powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contour::ContourPiece;
    use crate::contour::ContourTag;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn segment_weights_sum_to_length() {
        let contour = Contour {
            tag: ContourTag::Custom,
            pieces: vec![ContourPiece::segment(c(0.0, 0.0), c(1.0, 0.0), false)],
            flipped: vec![],
        };
        let g = CollocationGrid::discretize(&contour, 24, 10.0).unwrap();
        let total: f64 = (0..g.total_nodes()).map(|i| g.arc_weight(i)).sum();
        assert!((total - 1.0).abs() < 1e-12, "sum {total}");
    }

    #[test]
    fn real_line_node_count_and_symmetry() {
        let g = CollocationGrid::discretize(&Contour::real_line(), 100, 40.0).unwrap();
        assert_eq!(g.total_nodes(), 200);
        // Nodes of the negative ray mirror those of the positive ray.
        for k in 0..100 {
            let zp = g.pieces[0].nodes[k];
            let zm = g.pieces[1].nodes[k];
            assert!((zp + zm).norm() < 1e-14);
        }
    }

    #[test]
    fn gaussian_integral_on_real_line() {
        let g = CollocationGrid::discretize(&Contour::real_line(), 100, 40.0).unwrap();
        let s = g.integrate(|z| C64::new((-z.re * z.re).exp(), 0.0));
        let exact = std::f64::consts::PI.sqrt();
        assert!(
            (s.re - exact).abs() < 1e-10 && s.im.abs() < 1e-14,
            "got {s}, want {exact}"
        );
    }

    #[test]
    fn reversed_ray_weights_flip_sign() {
        // integral over the real line of 1/(s^2+1) = pi, using both
        // rays with their traversal directions.
        let r = 1e4;
        let g = CollocationGrid::discretize(&Contour::real_line(), 200, r).unwrap();
        let s = g.integrate(|z| 1.0 / (z * z + 1.0));
        // Compare against the exact integral over [-r, r] so the test
        // measures the weights, not the truncated tail.
        let exact = 2.0 * r.atan();
        assert!((s.re - exact).abs() < 1e-9, "got {s}, want {exact}");
    }

    #[test]
    fn interpolation_and_derivative_rows() {
        let contour = Contour {
            tag: ContourTag::Custom,
            pieces: vec![ContourPiece::segment(c(-1.0, 0.0), c(1.0, 0.0), false)],
            flipped: vec![],
        };
        let g = CollocationGrid::discretize(&contour, 24, 10.0).unwrap();
        let pg = &g.pieces[0];
        let f: Vec<f64> = pg.x.iter().map(|&x| (2.0 * x).sin()).collect();
        let xs = 0.3717;
        let ev = pg.eval_row(xs);
        let dv = pg.deriv_row(xs);
        let p: f64 = ev.iter().zip(&f).map(|(r, v)| r * v).sum();
        let dp: f64 = dv.iter().zip(&f).map(|(r, v)| r * v).sum();
        assert!((p - (2.0 * xs).sin()).abs() < 1e-12);
        assert!((dp - 2.0 * (2.0 * xs).cos()).abs() < 1e-9);
    }

    #[test]
    fn lp_norm_against_closed_form() {
        // || 1/(1+s^2) ||_2 on the real line: integral of 1/(1+s^2)^2
        // equals pi/2 so the norm is sqrt(pi/2).
        let g = Arc::new(CollocationGrid::discretize(&Contour::real_line(), 200, 1e5).unwrap());
        let f = ScalarGridFunction::sample(&g, |z| 1.0 / (z * z + 1.0));
        let n2 = f.lp_norm(2.0).unwrap();
        assert!((n2 - (std::f64::consts::PI / 2.0).sqrt()).abs() < 1e-7, "{n2}");
        let ni = f.lp_norm(f64::INFINITY).unwrap();
        assert!(ni <= 1.0 && ni > 0.99);
        assert!(f.lp_norm(0.5).is_err());
    }

    #[test]
    fn tau_inverse_map() {
        let g = CollocationGrid::discretize(&Contour::real_line(), 60, 1e3).unwrap();
        for k in [0, 17, 42, 59] {
            let x = g.pieces[0].x[k];
            let tau = g.pieces[0].tau[k];
            assert!((g.tau_to_x(0, tau) - x).abs() < 1e-12);
        }
    }
}
