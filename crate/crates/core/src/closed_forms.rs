//! Closed-form extremal growth functions for the compact factors used by
//! the product engine: discs, the real interval (Joukowski map), and
//! polydiscs sitting inside the zero set of H_S.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::body::ConvexBody;
use crate::error::{Error, Result};
use crate::log_support::{MaxAffine, Piece};

/// A compact factor in one block of the product: disc, real interval, or
/// polydisc. All of these are non-pluripolar.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CompactFactorSpec {
    Disc { center: [f64; 2], radius: f64 },
    Interval { a: f64, b: f64 },
    Polydisc { radii: Vec<f64> },
}

impl CompactFactorSpec {
    pub fn unit_disc() -> Self {
        CompactFactorSpec::Disc {
            center: [0.0, 0.0],
            radius: 1.0,
        }
    }

    pub fn unit_polydisc(dim: usize) -> Self {
        CompactFactorSpec::Polydisc {
            radii: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            CompactFactorSpec::Disc { .. } | CompactFactorSpec::Interval { .. } => 1,
            CompactFactorSpec::Polydisc { radii } => radii.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            CompactFactorSpec::Disc { radius, .. } => {
                if *radius <= 0.0 {
                    return Err(Error::InvalidArgument(format!("disc radius {radius} <= 0")));
                }
            }
            CompactFactorSpec::Interval { a, b } => {
                if a >= b {
                    return Err(Error::InvalidArgument(format!("interval [{a}, {b}] empty")));
                }
            }
            CompactFactorSpec::Polydisc { radii } => {
                if radii.is_empty() || radii.iter().any(|&r| r <= 0.0) {
                    return Err(Error::InvalidArgument(format!("bad polydisc radii {radii:?}")));
                }
            }
        }
        Ok(())
    }

    /// Is the factor a polydisc with all radii 1 (a disc at the origin with
    /// radius 1 counts)?
    pub fn is_unit_polydisc(&self) -> bool {
        match self {
            CompactFactorSpec::Disc { center, radius } => {
                center == &[0.0, 0.0] && *radius == 1.0
            }
            CompactFactorSpec::Polydisc { radii } => radii.iter().all(|&r| r == 1.0),
            CompactFactorSpec::Interval { .. } => false,
        }
    }
}

/// The compact set of one factor block, assembled from specs; K_j as a
/// cartesian product of its parts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProductCompact {
    pub factors: Vec<CompactFactorSpec>,
}

impl ProductCompact {
    pub fn new(factors: Vec<CompactFactorSpec>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidArgument("empty compact factor list".into()));
        }
        for f in &factors {
            f.validate()?;
        }
        Ok(ProductCompact { factors })
    }

    pub fn total_dim(&self) -> usize {
        self.factors.iter().map(|f| f.dim()).sum()
    }

    pub fn is_unit_polydisc(&self) -> bool {
        self.factors.iter().all(|f| f.is_unit_polydisc())
    }

    /// Per-coordinate radii when every part is a disc or polydisc centered
    /// at 0; None when an interval or an off-center disc is present.
    pub fn toric_radii(&self) -> Option<Vec<f64>> {
        let mut out = Vec::with_capacity(self.total_dim());
        for f in &self.factors {
            match f {
                CompactFactorSpec::Disc { center, radius } if center == &[0.0, 0.0] => {
                    out.push(*radius)
                }
                CompactFactorSpec::Polydisc { radii } => out.extend_from_slice(radii),
                _ => return None,
            }
        }
        Some(out)
    }
}

/// V for a closed disc: log^+(|z - center| / radius).
pub fn v_disc(center: Complex64, radius: f64, z: Complex64) -> f64 {
    ((z - center).norm() / radius).ln().max(0.0)
}

/// V for the real interval [a, b]: Green function of the complement via the
/// Joukowski map, log|w + sqrt(w^2 - 1)| with the branch of modulus >= 1.
pub fn v_interval(a: f64, b: f64, z: Complex64) -> f64 {
    let w = (z * 2.0 - Complex64::new(a + b, 0.0)) / (b - a);
    let s = (w * w - Complex64::new(1.0, 0.0)).sqrt();
    let u = if (w + s).norm() >= (w - s).norm() {
        w + s
    } else {
        w - s
    };
    u.norm().ln().max(0.0)
}

/// V^S_K for K the polydisc of the given radii, valid when the polydisc
/// sits inside {H_S = 0}: pieces (g, -<g, Log r>). For unit radii this is
/// exactly H_S.
pub fn v_polydisc_body(body: &ConvexBody, radii: &[f64]) -> Result<MaxAffine> {
    if radii.len() != body.dim {
        return Err(Error::DimensionMismatch {
            expected: body.dim,
            got: radii.len(),
        });
    }
    if radii.iter().any(|&r| r <= 0.0) {
        return Err(Error::InvalidArgument(format!("bad polydisc radii {radii:?}")));
    }
    let log_r: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let canon = body.canonicalize();
    let mut pieces = Vec::with_capacity(canon.generators.len());
    for g in canon.generators {
        let shift: f64 = g.iter().zip(&log_r).map(|(gi, li)| gi * li).sum();
        if shift > 1e-12 {
            return Err(Error::Unsupported(format!(
                "polydisc with radii {radii:?} leaves the zero set of the \
                 logarithmic supporting function (generator {g:?})"
            )));
        }
        pieces.push(Piece {
            slope: g,
            offset: -shift,
        });
    }
    MaxAffine::new(body.dim, pieces)
}

/// s * V_K for a one-dimensional factor; the growth body [0, s] scales the
/// class linearly, and s = 0 collapses the function to 0.
pub fn v_factor_scaled(k: &CompactFactorSpec, s: f64, z: Complex64) -> Result<f64> {
    if k.dim() != 1 {
        return Err(Error::Unsupported(format!(
            "scaled factor evaluation requires a one-dimensional compact, got dim {}",
            k.dim()
        )));
    }
    if s < 0.0 {
        return Err(Error::InvalidArgument(format!("negative scale {s}")));
    }
    if s == 0.0 {
        return Ok(0.0);
    }
    let v = match k {
        CompactFactorSpec::Disc { center, radius } => {
            v_disc(Complex64::new(center[0], center[1]), *radius, z)
        }
        CompactFactorSpec::Interval { a, b } => v_interval(*a, *b, z),
        CompactFactorSpec::Polydisc { radii } => v_disc(Complex64::new(0.0, 0.0), radii[0], z),
    };
    Ok(s * v)
}
