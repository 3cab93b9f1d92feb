//! Subcommand implementations: each returns artifacts through the
//! configured output paths and a machine-readable summary on stdout.

use crate::config::RunConfig;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rh_core::bounds::{self, SweepParams, SweepRow};
use rh_core::cauchy::{boundary_matrix, cauchy_off_scalar, Side};
use rh_core::contour::Contour;
use rh_core::deform::{choose_gamma, epsilon_default, translate_reduce};
use rh_core::grid::{CollocationGrid, GridFunction, ScalarGridFunction};
use rh_core::jump::{factor_upper_lower, nls_jump, Factorization};
use rh_core::rhp::{self, RhpSystem};
use rh_core::scalar::DeltaFunction;
use rh_core::{Mat2, Result, RhError};
use serde_json::json;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

/// Open the configured output path, or fall back to stdout.
fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn real_grid(cfg: &RunConfig) -> Result<Arc<CollocationGrid>> {
    Ok(Arc::new(CollocationGrid::discretize(
        &Contour::real_line(),
        cfg.n,
        cfg.truncation,
    )?))
}

/// Emit one line-delimited JSON plot record per sample.
fn emit_plot(path: &Path, series: &[(&str, Vec<(f64, f64)>)]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for (name, pts) in series {
        for (x, y) in pts {
            writeln!(out, "{}", json!({ "series": name, "x": x, "y": y }))?;
        }
    }
    Ok(())
}

/// `delta`: tabulate the scalar factor's boundary values on the cut
/// and the residuals of its defining properties.
pub fn delta(cfg: &RunConfig) -> Result<()> {
    let r = cfg.r.build()?;
    let z0 = if cfg.t != 0.0 { cfg.x / (2.0 * cfg.t) } else { 0.0 };
    let d = DeltaFunction::new(&r, z0);
    let mut out = open_out(cfg.out.as_deref())?;
    writeln!(
        out,
        "x,re_delta_plus,im_delta_plus,re_delta_minus,im_delta_minus,jump_residual,modulus_residual"
    )?;
    let count = 50usize;
    let mut plot_pts = Vec::with_capacity(count);
    for k in 0..count {
        let x = z0 - 10.0 + 9.9 * (k as f64 + 0.5) / count as f64;
        let dp = d.boundary(x, Side::Plus)?;
        let dm = d.boundary(x, Side::Minus)?;
        let rv = (r.f)(C64::new(x, 0.0));
        let rc = (r.f_conj)(C64::new(x, 0.0));
        let w = C64::new(1.0, 0.0) - rv * rc;
        let jump = (dp - dm * w).norm();
        let modulus = ((dp * dm).norm() - 1.0).abs();
        writeln!(
            out,
            "{x},{},{},{},{},{jump:e},{modulus:e}",
            dp.re, dp.im, dm.re, dm.im
        )?;
        plot_pts.push((x, dp.norm()));
    }
    if let Some(p) = &cfg.plot {
        emit_plot(p, &[("delta_plus_abs", plot_pts)])?;
    }
    Ok(())
}

/// `solve`: solve the normalized problem for the oscillatory jump at
/// `(x, t)`, write the minus boundary values as CSV, and print solve
/// diagnostics as JSON.
pub fn solve(cfg: &RunConfig) -> Result<()> {
    let r = cfg.r.build()?;
    let grid = real_grid(cfg)?;
    let v = nls_jump(&r, cfg.x, cfg.t);
    let sol = rhp::solve_normalized(&grid, &v)?;
    let mut out = open_out(cfg.out.as_deref())?;
    sol.minus.write_csv(&mut out)?;
    drop(out);
    if let Some(p) = &cfg.plot {
        let pts: Vec<(f64, f64)> = (0..grid.total_nodes())
            .map(|i| (grid.node(i).re, sol.density.values[i].frob()))
            .collect();
        emit_plot(p, &[("density_frob", pts)])?;
    }
    println!(
        "{}",
        json!({
            "residual": sol.residual,
            "condition": sol.condition,
            "identity_at_infinity": sol.identity_at_infinity,
        })
    );
    Ok(())
}

/// `deform`: emit the deformation plan for `(x, t)` as JSON — the
/// stationary point, sector opening, strip displacement, mollifier
/// scale, and the augmented contour.
pub fn deform(cfg: &RunConfig) -> Result<()> {
    let r = cfg.r.build()?;
    let (reduced, _) = if cfg.x == 0.0 {
        (r.clone(), 1.0)
    } else {
        translate_reduce(&r, cfg.x, cfg.t)?
    };
    if cfg.t <= 0.0 {
        return Err(RhError::InvalidParameter(format!(
            "deformation requires t > 0, got {}",
            cfg.t
        )));
    }
    let z0 = cfg.x / (2.0 * cfg.t);
    let gamma = choose_gamma(reduced.lambda(), reduced.rho, cfg.beta)?;
    let epsilon = epsilon_default(reduced.rho, cfg.beta);
    let contour = Contour::augmented_cross(cfg.beta)?;
    let plan = json!({
        "x": cfg.x,
        "t": cfg.t,
        "stationary_point": z0,
        "beta": cfg.beta,
        "rho": reduced.rho,
        "lambda": reduced.lambda(),
        "gamma": gamma,
        "epsilon": epsilon,
        "contour": serde_json::from_str::<serde_json::Value>(&contour.to_json()?)?,
    });
    let mut out = open_out(cfg.out.as_deref())?;
    writeln!(out, "{}", serde_json::to_string_pretty(&plan)?)?;
    Ok(())
}

/// `sweep`: estimate resolvent norms over the `(x, t, p)` grid and
/// write rows in the declared sweep CSV schema.
pub fn sweep(cfg: &RunConfig) -> Result<()> {
    let r = cfg.r.build()?;
    let params = SweepParams {
        n: cfg.n,
        truncation: cfg.truncation,
        beta_prime: cfg.beta_prime,
        beta: cfg.beta,
    };
    let points: Vec<(f64, f64)> = cfg
        .x_list
        .iter()
        .flat_map(|&x| cfg.t_list.iter().map(move |&t| (x, t)))
        .collect();
    let mut rows: Vec<SweepRow> = Vec::new();
    for &p in &cfg.p_list {
        rows.extend(bounds::uniformity_sweep(&r, p, &points, &params));
    }
    let mut out = open_out(cfg.out.as_deref())?;
    bounds::write_sweep_csv(&rows, &mut out)?;
    drop(out);
    if let Some(path) = &cfg.plot {
        let hi: Vec<(f64, f64)> = rows.iter().map(|r| (r.t, r.estimate_hi)).collect();
        let th: Vec<(f64, f64)> = rows.iter().map(|r| (r.t, r.theoretical)).collect();
        emit_plot(path, &[("estimate_hi", hi), ("theoretical", th)])?;
    }
    Ok(())
}

/// One checked invariant with its measured value.
struct Check {
    name: &'static str,
    measured: f64,
    tolerance: f64,
}

impl Check {
    fn pass(&self) -> bool {
        self.measured.is_finite() && self.measured <= self.tolerance
    }
}

/// `verify`: run the invariant suite and print a JSON summary listing
/// every invariant with its measured value. Returns the number of
/// failures.
pub fn verify(cfg: &RunConfig) -> Result<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut checks: Vec<Check> = Vec::new();

    // Plemelj difference: C+ - C- = I holds exactly by construction.
    let cross = Arc::new(CollocationGrid::discretize(&Contour::cross(), 24, 50.0)?);
    let cp = boundary_matrix(&cross, Side::Plus);
    let cm = boundary_matrix(&cross, Side::Minus);
    let mut worst = 0.0_f64;
    for i in 0..cross.total_nodes() {
        for j in 0..cross.total_nodes() {
            let d = cp.mat[(i, j)] - cm.mat[(i, j)];
            let want = if i == j { 1.0 } else { 0.0 };
            worst = worst.max(((d.re - want).powi(2) + d.im * d.im).sqrt());
        }
    }
    checks.push(Check { name: "plemelj_difference", measured: worst, tolerance: 1e-12 });

    // Offset limit: boundary value of a rational density matches the
    // polynomial extrapolation of off-contour evaluations.
    let line = Arc::new(CollocationGrid::discretize(&Contour::real_line(), 80, 400.0)?);
    let h = ScalarGridFunction::sample(&line, |z| 1.0 / (z + C64::new(0.3, 1.0)));
    let cmr = boundary_matrix(&line, Side::Minus);
    let hv = cmr.apply(&h);
    let i0 = line.total_nodes() / 3;
    let z = line.node(i0);
    let eps = [0.08, 0.04, 0.02];
    let vals: Vec<C64> = eps
        .iter()
        .map(|&e| cauchy_off_scalar(&h, z - C64::new(0.0, e)))
        .collect::<Result<_>>()?;
    let f01 = (vals[1] * eps[0] - vals[0] * eps[1]) / (eps[0] - eps[1]);
    let f12 = (vals[2] * eps[1] - vals[1] * eps[2]) / (eps[1] - eps[2]);
    let f012 = (f12 * eps[0] - f01 * eps[2]) / (eps[0] - eps[2]);
    checks.push(Check {
        name: "boundary_offset_limit",
        measured: (f012 - hv.values[i0]).norm(),
        tolerance: 1e-6,
    });

    // Complementary projections: C+ C- annihilates random densities
    // on a complete contour.
    let mut proj_worst = 0.0_f64;
    for _ in 0..5 {
        let coeffs: Vec<C64> = (0..4)
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let h = ScalarGridFunction::sample(&cross, |z| {
            coeffs[0] / (z - C64::new(0.4, 0.9)) + coeffs[1] / (z + C64::new(1.1, 0.7))
                + coeffs[2] / (z - C64::new(-0.6, 1.3)) + coeffs[3] / (z + C64::new(0.2, 1.8))
        });
        let both = cp.apply(&cm.apply(&h));
        let num = both.lp_norm(2.0)?;
        let den = h.lp_norm(2.0)?.max(1e-300);
        proj_worst = proj_worst.max(num / den);
    }
    checks.push(Check {
        name: "complementary_projections",
        measured: proj_worst,
        tolerance: 1e-6,
    });

    // Scalar factor: jump relation and unimodular product on the cut.
    let r = cfg.r.build()?;
    let d = DeltaFunction::new(&r, 0.0);
    let (mut jump_worst, mut mod_worst) = (0.0_f64, 0.0_f64);
    for k in 0..20 {
        let x = -8.0 + 7.8 * (k as f64 + 0.5) / 20.0;
        let dp = d.boundary(x, Side::Plus)?;
        let dm = d.boundary(x, Side::Minus)?;
        let rv = (r.f)(C64::new(x, 0.0));
        let rc = (r.f_conj)(C64::new(x, 0.0));
        let w = C64::new(1.0, 0.0) - rv * rc;
        jump_worst = jump_worst.max((dp - dm * w).norm());
        mod_worst = mod_worst.max(((dp * dm).norm() - 1.0).abs());
    }
    checks.push(Check { name: "delta_jump_relation", measured: jump_worst, tolerance: 1e-6 });
    checks.push(Check { name: "delta_unimodular_product", measured: mod_worst, tolerance: 1e-8 });

    // Two-path solve: resolving the same data through the trivial and
    // the upper-lower splitting agrees after the change-of-splitting
    // multiplier.
    let v = nls_jump(&r, cfg.x, cfg.t);
    let grid = real_grid(cfg)?;
    let trivial = Factorization::trivial(&v);
    let ul = factor_upper_lower(&r, cfg.x, cfg.t);
    let f = GridFunction::sample(&grid, |z| {
        Mat2::new(
            1.0 / (z * z + 2.0),
            C64::new(0.0, 0.0),
            1.0 / (z + C64::new(0.0, 2.0)),
            1.0 / (z * z + 9.0),
        )
    });
    let sys_triv = RhpSystem::build_from_factorization(&grid, &trivial)?;
    let sys_ul = RhpSystem::build_from_factorization(&grid, &ul)?;
    let (u_triv, _) = sys_triv.resolve(&f);
    let (u_ul, _) = sys_ul.resolve(&f);
    let b = rhp::factorization_transport(&grid, &ul, &trivial)?;
    let mut diff = 0.0_f64;
    let mut scale = 0.0_f64;
    for i in 0..grid.total_nodes() {
        diff = diff.max((u_triv.values[i] - u_ul.values[i] * b.values[i]).frob());
        scale = scale.max(u_triv.values[i].frob());
    }
    checks.push(Check {
        name: "factorization_two_path",
        measured: diff / scale.max(1e-300),
        tolerance: 1e-8,
    });

    // Energy identity on random inhomogeneities.
    let mut energy_worst = 0.0_f64;
    for _ in 0..3 {
        let c: Vec<C64> = (0..4)
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let f = GridFunction::sample(&grid, |z| {
            let g = 1.0 / (z * z + C64::new(0.0, 1.5));
            Mat2::new(c[0] * g, c[1] * g, c[2] * g, c[3] * g)
        });
        energy_worst = energy_worst.max(rhp::energy_identity_residual(&grid, &v, &f)?);
    }
    checks.push(Check { name: "energy_identity", measured: energy_worst, tolerance: 1e-6 });

    // Calibrated resolvent bound in L2.
    let est = bounds::resolvent_norm(&grid, &v, 2.0)?;
    checks.push(Check {
        name: "l2_resolvent_bound",
        measured: est.value,
        tolerance: bounds::theoretical_bound(r.lambda(), r.rho, 2.0, cfg.beta_prime)?,
    });

    // Orientation data of the built-in contours is self-consistent.
    let mut orient = 0.0;
    for c in [Contour::real_line(), Contour::cross()] {
        if c.check_completeness().is_err() || !c.is_orientation_consistent() {
            orient = 1.0;
        }
    }
    checks.push(Check { name: "contour_completeness", measured: orient, tolerance: 0.5 });

    let failed = checks.iter().filter(|c| !c.pass()).count();
    let summary = json!({
        "invariants": checks.iter().map(|c| json!({
            "invariant": c.name,
            "measured": c.measured,
            "tolerance": c.tolerance,
            "pass": c.pass(),
        })).collect::<Vec<_>>(),
        "passed": checks.len() - failed,
        "failed": failed,
    });
    let mut out = open_out(cfg.out.as_deref())?;
    writeln!(out, "{}", serde_json::to_string_pretty(&summary)?)?;
    Ok(failed)
}
