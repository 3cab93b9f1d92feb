//! Oriented piecewise-linear contours in the complex plane.
//!
//! A contour is a list of oriented pieces (segments and rays) together
//! with a labeling of the complementary regions. Orientation is the
//! load-bearing convention: the `+` side of every piece is the side on
//! the left when walking along the traversal direction, and a contour
//! is *complete* when the `+`/`-` sides of all pieces glue into a
//! consistent two-coloring of the plane.

use crate::error::{Result, RhError};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Geometric kind of a contour piece.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PieceKind {
    /// Finite segment from `start` to `end_or_dir` (an endpoint).
    Segment,
    /// Half-line from `start` in unit direction `end_or_dir`.
    Ray,
}

/// One oriented straight piece of a contour.
///
/// The natural parametrization is `start + tau * dir` with `tau` in
/// `[0, L]` (segment) or `[0, inf)` (ray). When `reversed` is set the
/// piece is traversed in decreasing `tau`, so the effective tangent is
/// the negated natural direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourPiece {
    pub kind: PieceKind,
    #[serde(with = "complex_pair")]
    pub start: C64,
    /// Endpoint for a segment; unit direction for a ray.
    #[serde(rename = "dir_or_end", with = "complex_pair")]
    pub end_or_dir: C64,
    #[serde(default)]
    pub reversed: bool,
}

/// Serialize a complex number as `[re, im]`.
mod complex_pair {
    use num_complex::Complex64 as C64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(z: &C64, s: S) -> Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<C64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(C64::new(re, im))
    }
}

impl ContourPiece {
    /// A segment from `a` to `b` (natural orientation `a -> b`).
    pub fn segment(a: C64, b: C64, reversed: bool) -> Self {
        ContourPiece { kind: PieceKind::Segment, start: a, end_or_dir: b, reversed }
    }

    /// A ray from `start` in direction `dir` (normalized here).
    pub fn ray(start: C64, dir: C64, reversed: bool) -> Self {
        ContourPiece {
            kind: PieceKind::Ray,
            start,
            end_or_dir: dir / dir.norm(),
            reversed,
        }
    }

    /// Unit vector of the natural (unreversed) parametrization.
    pub fn natural_dir(&self) -> C64 {
        match self.kind {
            PieceKind::Ray => self.end_or_dir,
            PieceKind::Segment => {
                let d = self.end_or_dir - self.start;
                d / d.norm()
            }
        }
    }

    /// Unit tangent in the traversal sense (accounts for `reversed`).
    pub fn effective_dir(&self) -> C64 {
        let d = self.natural_dir();
        if self.reversed {
            -d
        } else {
            d
        }
    }

    /// Arc length; infinite for rays.
    pub fn length(&self) -> f64 {
        match self.kind {
            PieceKind::Ray => f64::INFINITY,
            PieceKind::Segment => (self.end_or_dir - self.start).norm(),
        }
    }

    /// Point at natural parameter `tau` (arc length from `start`).
    pub fn point(&self, tau: f64) -> C64 {
        self.start + self.natural_dir() * tau
    }

    /// Natural parameter of the orthogonal projection of `z`, clamped
    /// to the piece, together with the distance from `z` to the piece.
    pub fn project(&self, z: C64) -> (f64, f64) {
        let d = self.natural_dir();
        let u = ((z - self.start) * d.conj()).re;
        let u = match self.kind {
            PieceKind::Ray => u.max(0.0),
            PieceKind::Segment => u.clamp(0.0, self.length()),
        };
        (u, (z - self.point(u)).norm())
    }

    /// Distance from `z` to the piece.
    pub fn distance(&self, z: C64) -> f64 {
        self.project(z).1
    }

    /// Flip the traversal direction.
    pub fn reverse(&self) -> ContourPiece {
        ContourPiece { reversed: !self.reversed, ..*self }
    }
}

/// Which base contour an extended contour was grown from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseKind {
    RealLine,
    Cross,
}

/// Identity of a contour; drives region classification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum ContourTag {
    /// The real line, oriented left to right.
    RealLine,
    /// Real and imaginary axes through the origin.
    Cross,
    /// Real line plus two oblique rays above and two below, with the
    /// oblique rays at angles `beta*pi` and `pi - beta*pi` (and their
    /// reflections) from the positive real axis.
    AugmentedCross { beta: f64 },
    /// A base contour together with a nearby auxiliary contour at
    /// distance `separation`, used for resolvent-restriction bounds.
    Extended { base: BaseKind, separation: f64 },
    /// Anything else (e.g. a contour with a reversed piece subset).
    Custom,
}

/// Region label attached to a face of the plane cut by the contour.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionLabel {
    OmegaPlus,
    OmegaMinus,
    /// Auxiliary numbered region (sectors where lensing factors are
    /// trivial, or faces beyond an extension contour).
    Omega(u8),
}

/// Result of classifying a point against a contour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub label: RegionLabel,
    /// +1 if the point is on the `+` side two-coloring, -1 otherwise.
    pub side: i8,
    /// Index of the sector/face in the contour's own numbering.
    pub sector: usize,
}

/// An oriented piecewise-linear contour with labeled faces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    pub tag: ContourTag,
    pub pieces: Vec<ContourPiece>,
    /// Indices of pieces whose traversal was flipped relative to the
    /// tagged orientation (empty for the built-in contours).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flipped: Vec<usize>,
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

impl Contour {
    /// The real line oriented from -inf to +inf, upper half plane `+`.
    pub fn real_line() -> Contour {
        Contour {
            tag: ContourTag::RealLine,
            pieces: vec![
                ContourPiece::ray(c(0.0, 0.0), c(1.0, 0.0), false),
                ContourPiece::ray(c(0.0, 0.0), c(-1.0, 0.0), true),
            ],
            flipped: vec![],
        }
    }

    /// Real and imaginary axes with quadrants colored `+,-,+,-`
    /// starting from the first quadrant. Axis pieces are oriented so
    /// that the imaginary axis flows toward the origin and the real
    /// axis flows away from it.
    pub fn cross() -> Contour {
        Contour {
            tag: ContourTag::Cross,
            pieces: vec![
                ContourPiece::ray(c(0.0, 0.0), c(1.0, 0.0), false),
                ContourPiece::ray(c(0.0, 0.0), c(-1.0, 0.0), false),
                ContourPiece::ray(c(0.0, 0.0), c(0.0, 1.0), true),
                ContourPiece::ray(c(0.0, 0.0), c(0.0, -1.0), true),
            ],
            flipped: vec![],
        }
    }

    /// Real line plus four oblique rays at angles `+-beta*pi` and
    /// `pi -+ beta*pi`. Requires `0 < beta < 1/2`. Sector coloring
    /// alternates starting with `+` in the sector just above the
    /// positive real axis; the wide sectors adjacent to the oblique
    /// rays are the trivial regions `Omega(0)`.
    pub fn augmented_cross(beta: f64) -> Result<Contour> {
        if !(0.0..0.5).contains(&beta) || beta <= 0.0 {
            return Err(RhError::InvalidParameter(format!(
                "augmented cross requires 0 < beta < 1/2, got {beta}"
            )));
        }
        let ang = |t: f64| c(t.cos(), t.sin());
        Ok(Contour {
            tag: ContourTag::AugmentedCross { beta },
            pieces: vec![
                ContourPiece::ray(c(0.0, 0.0), c(1.0, 0.0), false),
                ContourPiece::ray(c(0.0, 0.0), c(-1.0, 0.0), true),
                ContourPiece::ray(c(0.0, 0.0), ang(beta * PI), true),
                ContourPiece::ray(c(0.0, 0.0), ang(PI - beta * PI), false),
                ContourPiece::ray(c(0.0, 0.0), ang(PI + beta * PI), false),
                ContourPiece::ray(c(0.0, 0.0), ang(-beta * PI), true),
            ],
            flipped: vec![],
        })
    }

    /// Extend a base contour by an auxiliary contour at distance
    /// `separation`, oriented so that the combined contour is complete.
    pub fn extended(base: BaseKind, separation: f64) -> Result<Contour> {
        if separation <= 0.0 {
            return Err(RhError::InvalidParameter(format!(
                "extension separation must be positive, got {separation}"
            )));
        }
        let s = separation;
        let mut pieces = match base {
            BaseKind::RealLine => Contour::real_line().pieces,
            BaseKind::Cross => Contour::cross().pieces,
        };
        match base {
            BaseKind::RealLine => {
                // Two horizontal lines Im = +-s, each traversed right
                // to left so the strip side stays on the correct side.
                for ys in [s, -s] {
                    pieces.push(ContourPiece::ray(c(0.0, ys), c(1.0, 0.0), true));
                    pieces.push(ContourPiece::ray(c(0.0, ys), c(-1.0, 0.0), false));
                }
            }
            BaseKind::Cross => {
                // One L-shaped corner per quadrant: in along the
                // horizontal arm toward the corner, then out along the
                // vertical arm away from the real axis.
                let corners = [
                    (c(s, s), c(1.0, 0.0), c(0.0, 1.0)),
                    (c(-s, s), c(-1.0, 0.0), c(0.0, 1.0)),
                    (c(-s, -s), c(-1.0, 0.0), c(0.0, -1.0)),
                    (c(s, -s), c(1.0, 0.0), c(0.0, -1.0)),
                ];
                for (corner, hdir, vdir) in corners {
                    pieces.push(ContourPiece::ray(corner, hdir, true));
                    pieces.push(ContourPiece::ray(corner, vdir, false));
                }
            }
        }
        Ok(Contour {
            tag: ContourTag::Extended { base, separation },
            pieces,
            flipped: vec![],
        })
    }

    /// Return a copy with the traversal of the given pieces reversed.
    /// Reversing twice restores the original contour. A contour with a
    /// proper nonempty subset reversed is no longer globally complete;
    /// classification still reports the labels of the tagged
    /// orientation.
    pub fn reverse_subset(&self, indices: &[usize]) -> Result<Contour> {
        let mut out = self.clone();
        for &i in indices {
            if i >= out.pieces.len() {
                return Err(RhError::InvalidParameter(format!(
                    "piece index {i} out of range ({} pieces)",
                    out.pieces.len()
                )));
            }
            out.pieces[i] = out.pieces[i].reverse();
            if let Some(pos) = out.flipped.iter().position(|&j| j == i) {
                out.flipped.remove(pos);
            } else {
                out.flipped.push(i);
            }
        }
        out.flipped.sort_unstable();
        Ok(out)
    }

    /// Whether every piece carries the orientation of the tagged
    /// contour (no outstanding reversals).
    pub fn is_orientation_consistent(&self) -> bool {
        self.flipped.is_empty()
    }

    /// Distance between base and auxiliary contour for an extended
    /// contour; `None` otherwise.
    pub fn separation(&self) -> Option<f64> {
        match self.tag {
            ContourTag::Extended { separation, .. } => Some(separation),
            _ => None,
        }
    }

    /// Classify a point off the contour by face.
    pub fn classify(&self, z: C64) -> Classification {
        match &self.tag {
            ContourTag::RealLine => {
                if z.im >= 0.0 {
                    Classification { label: RegionLabel::OmegaPlus, side: 1, sector: 0 }
                } else {
                    Classification { label: RegionLabel::OmegaMinus, side: -1, sector: 1 }
                }
            }
            ContourTag::Cross => {
                let q = quadrant(z);
                let plus = q % 2 == 1;
                Classification {
                    label: if plus { RegionLabel::OmegaPlus } else { RegionLabel::OmegaMinus },
                    side: if plus { 1 } else { -1 },
                    sector: q,
                }
            }
            ContourTag::AugmentedCross { beta } => {
                let mut phi = z.arg();
                if phi < 0.0 {
                    phi += 2.0 * PI;
                }
                let b = beta * PI;
                // Sectors 1..=6 counterclockwise from the positive
                // real axis; odd sectors are on the `+` side.
                let (sector, label) = if phi < b {
                    (1, RegionLabel::OmegaPlus)
                } else if phi < PI - b {
                    (2, RegionLabel::Omega(0))
                } else if phi < PI {
                    (3, RegionLabel::OmegaPlus)
                } else if phi < PI + b {
                    (4, RegionLabel::OmegaMinus)
                } else if phi < 2.0 * PI - b {
                    (5, RegionLabel::Omega(0))
                } else {
                    (6, RegionLabel::OmegaMinus)
                };
                Classification { label, side: if sector % 2 == 1 { 1 } else { -1 }, sector }
            }
            ContourTag::Extended { base: BaseKind::RealLine, separation } => {
                let s = *separation;
                let (sector, label, side) = if z.im > s {
                    (0, RegionLabel::Omega(1), -1)
                } else if z.im >= 0.0 {
                    (1, RegionLabel::OmegaPlus, 1)
                } else if z.im >= -s {
                    (2, RegionLabel::OmegaMinus, -1)
                } else {
                    (3, RegionLabel::Omega(2), 1)
                };
                Classification { label, side, sector }
            }
            ContourTag::Extended { base: BaseKind::Cross, separation } => {
                let s = *separation;
                let q = quadrant(z);
                let inner = z.re.abs().min(z.im.abs()) < s;
                let plus_inner = q % 2 == 1;
                let plus = plus_inner == inner;
                Classification {
                    label: if inner {
                        if plus { RegionLabel::OmegaPlus } else { RegionLabel::OmegaMinus }
                    } else {
                        RegionLabel::Omega(q as u8)
                    },
                    side: if plus { 1 } else { -1 },
                    sector: if inner { q } else { 4 + q },
                }
            }
            ContourTag::Custom => {
                // Best effort: custom contours arise from reversals of
                // tagged ones in this crate, which keep their tag, so a
                // genuinely custom contour has no face chart.
                Classification { label: RegionLabel::Omega(255), side: 1, sector: 0 }
            }
        }
    }

    /// Verify that the `+` side of each piece (left of traversal)
    /// agrees with the face two-coloring. Probes a few points per
    /// piece at a small normal offset.
    pub fn check_completeness(&self) -> Result<()> {
        if matches!(self.tag, ContourTag::Custom) {
            return Err(RhError::InvariantViolation(
                "custom contour has no face chart to check".into(),
            ));
        }
        if !self.flipped.is_empty() {
            return Err(RhError::InvariantViolation(format!(
                "pieces {:?} are reversed relative to the tagged orientation",
                self.flipped
            )));
        }
        for (idx, piece) in self.pieces.iter().enumerate() {
            let taus: &[f64] = match piece.kind {
                PieceKind::Ray => &[0.37, 2.1, 17.3],
                PieceKind::Segment => &[0.5],
            };
            for &t in taus {
                let tau = match piece.kind {
                    PieceKind::Ray => t,
                    PieceKind::Segment => t * piece.length(),
                };
                let p = piece.point(tau);
                let eps = 1e-7 * p.norm().max(1.0);
                let n = piece.effective_dir() * C64::new(0.0, 1.0);
                let left = self.classify(p + n * eps);
                let right = self.classify(p - n * eps);
                if left.side != 1 || right.side != -1 {
                    return Err(RhError::InvariantViolation(format!(
                        "piece {idx} at tau={tau}: left side {} right side {}",
                        left.side, right.side
                    )));
                }
            }
        }
        Ok(())
    }

    /// Distinct junction points (piece start points and segment
    /// endpoints), deduplicated.
    pub fn junctions(&self) -> Vec<C64> {
        let mut pts: Vec<C64> = Vec::new();
        let mut push = |z: C64| {
            if !pts.iter().any(|p| (p - z).norm() < 1e-12) {
                pts.push(z);
            }
        };
        for p in &self.pieces {
            push(p.start);
            if p.kind == PieceKind::Segment {
                push(p.end_or_dir);
            }
        }
        pts
    }

    /// Distance from `z` to the contour.
    pub fn distance(&self, z: C64) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.distance(z))
            .fold(f64::INFINITY, f64::min)
    }

    /// Serialize to a JSON string.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Deserialize from a JSON string.
    pub fn from_json(s: &str) -> Result<Contour> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Quadrant 1..=4 of a point (boundary resolved toward lower index).
fn quadrant(z: C64) -> usize {
    match (z.re >= 0.0, z.im >= 0.0) {
        (true, true) => 1,
        (false, true) => 2,
        (false, false) => 3,
        (true, false) => 4,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_contours_are_complete() {
        Contour::real_line().check_completeness().unwrap();
        Contour::cross().check_completeness().unwrap();
        Contour::augmented_cross(0.25).unwrap().check_completeness().unwrap();
        Contour::augmented_cross(0.125).unwrap().check_completeness().unwrap();
        Contour::extended(BaseKind::RealLine, 0.5).unwrap().check_completeness().unwrap();
        Contour::extended(BaseKind::Cross, 0.8).unwrap().check_completeness().unwrap();
    }

    #[test]
    fn beta_domain_enforced() {
        assert!(Contour::augmented_cross(0.0).is_err());
        assert!(Contour::augmented_cross(0.5).is_err());
        assert!(Contour::augmented_cross(-0.1).is_err());
    }

    #[test]
    fn reverse_subset_involution() {
        let g = Contour::cross();
        let r = g.reverse_subset(&[1, 3]).unwrap();
        assert!(!r.is_orientation_consistent());
        assert!(r.check_completeness().is_err());
        let rr = r.reverse_subset(&[1, 3]).unwrap();
        assert_eq!(g, rr);
        rr.check_completeness().unwrap();
    }

    #[test]
    fn json_roundtrip() {
        for g in [
            Contour::real_line(),
            Contour::cross(),
            Contour::augmented_cross(0.25).unwrap(),
            Contour::extended(BaseKind::Cross, 1.5).unwrap(),
        ] {
            let s = g.to_json().unwrap();
            let back = Contour::from_json(&s).unwrap();
            assert_eq!(g, back);
        }
    }

    #[test]
    fn classification_sectors() {
        let g = Contour::augmented_cross(0.25).unwrap();
        let p = |re, im| g.classify(C64::new(re, im));
        assert_eq!(p(1.0, 0.1).sector, 1);
        assert_eq!(p(0.0, 1.0).sector, 2);
        assert_eq!(p(-1.0, 0.1).sector, 3);
        assert_eq!(p(-1.0, -0.1).sector, 4);
        assert_eq!(p(0.0, -1.0).sector, 5);
        assert_eq!(p(1.0, -0.1).sector, 6);
        assert_eq!(p(1.0, 0.1).label, RegionLabel::OmegaPlus);
        assert_eq!(p(0.0, 1.0).label, RegionLabel::Omega(0));
    }

    #[test]
    fn extended_separation() {
        let g = Contour::extended(BaseKind::RealLine, 0.75).unwrap();
        assert_eq!(g.separation(), Some(0.75));
        assert!(Contour::extended(BaseKind::Cross, 0.0).is_err());
    }
}
