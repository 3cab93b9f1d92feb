use num_complex::Complex64 as C64;
use rh_core::bounds;
use rh_core::contour::Contour;
use rh_core::grid::CollocationGrid;
use rh_core::jump::{nls_jump, Reflection};
use std::sync::Arc;

fn main() {
    for rho in [0.3_f64, 0.5, 0.9] {
        let r = Reflection::model(C64::new(rho, 0.0)).unwrap();
        for t in [0.0_f64, 1.0] {
            for (n, rad) in [(80usize, 400.0), (200, 2000.0), (300, 2000.0)] {
                let grid = Arc::new(
                    CollocationGrid::discretize(&Contour::real_line(), n, rad).unwrap(),
                );
                let v = nls_jump(&r, 0.0, t);
                let est = bounds::resolvent_norm(&grid, &v, 2.0).unwrap();
                let est4 = bounds::resolvent_norm(&grid, &v, 4.0).unwrap();
                println!(
                    "rho={rho} t={t} n={n} rad={rad}: p2={:.4} p4=[{:.4},{:.4}]",
                    est.value, est4.lower, est4.value
                );
            }
        }
    }
}
