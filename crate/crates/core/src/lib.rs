//! Numerical toolkit for Riemann-Hilbert problems on piecewise-linear
//! contours.

pub mod bounds;
pub mod contour;
pub mod error;
pub mod grid;
pub mod jump;
pub mod linalg;
pub mod mat2;
pub mod cauchy;
pub mod deform;
pub mod quad;
pub mod rhp;
pub mod scalar;

pub use bounds::{BoundReport, NormEstimate, NormMethod, Route, SweepParams, SweepRow};
pub use contour::{BaseKind, Classification, Contour, ContourPiece, ContourTag, PieceKind, RegionLabel};
pub use deform::{GeneralDeformation, ModelDeformation, MollifiedApproximant, Quadrant};
pub use error::{Result, RhError};
pub use grid::{CollocationGrid, GridFunction, PieceGrid, ScalarGridFunction};
pub use jump::{Factorization, JumpMatrix, Reflection};
pub use mat2::Mat2;
pub use rhp::{RhpSolution, RhpSystem};
pub use scalar::DeltaFunction;
