//! Logarithmic supporting functions H_S on C^n as exact max-affine
//! functions of Log z, including the limsup extension across coordinate
//! hyperplanes and Lelong-class certificates u <= H_S + c.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::body::{ConvexBody, TAU_NUM};
use crate::error::{Error, Result};
use crate::lp;

/// One affine piece <slope, xi> + offset; slopes lie in R^n_+.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Piece {
    pub slope: Vec<f64>,
    pub offset: f64,
}

/// Exact piecewise-affine function of xi = Log z:
/// f(xi) = max over pieces of <slope, xi> + offset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaxAffine {
    pub dim: usize,
    pub pieces: Vec<Piece>,
}

/// The value Log z = (log|z_1|, ..., log|z_n|); -inf encodes z_i = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct LogPoint(pub Vec<f64>);

impl LogPoint {
    pub fn from_complex(z: &[Complex64]) -> Self {
        LogPoint(
            z.iter()
                .map(|zi| {
                    let r = zi.norm();
                    if r == 0.0 {
                        f64::NEG_INFINITY
                    } else {
                        r.ln()
                    }
                })
                .collect(),
        )
    }

    pub fn finite(xi: Vec<f64>) -> Self {
        LogPoint(xi)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl MaxAffine {
    pub fn new(dim: usize, pieces: Vec<Piece>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::InvalidArgument("piece list is empty".into()));
        }
        for p in &pieces {
            if p.slope.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.slope.len(),
                });
            }
            if p.slope.iter().any(|&s| s < -TAU_NUM || !s.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "piece slope {:?} leaves the nonnegative orthant",
                    p.slope
                )));
            }
        }
        Ok(MaxAffine { dim, pieces })
    }

    /// The constant function.
    pub fn constant(dim: usize, value: f64) -> Self {
        MaxAffine {
            dim,
            pieces: vec![Piece {
                slope: vec![0.0; dim],
                offset: value,
            }],
        }
    }

    /// Evaluate at a finite point.
    pub fn eval(&self, xi: &[f64]) -> Result<f64> {
        if xi.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: xi.len(),
            });
        }
        Ok(self
            .pieces
            .iter()
            .map(|p| dot(&p.slope, xi) + p.offset)
            .fold(f64::NEG_INFINITY, f64::max))
    }

    /// Evaluate with the limsup extension across coordinate hyperplanes.
    ///
    /// At a point with xi_i = -inf only the pieces whose slope vanishes on
    /// every such coordinate survive the limit (those are constant in the
    /// vanishing directions; all others tend to -inf along the approach).
    /// Returns -inf when no piece qualifies.
    pub fn eval_extended(&self, p: &LogPoint) -> Result<f64> {
        if p.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: p.dim(),
            });
        }
        let xi = &p.0;
        let mut best = f64::NEG_INFINITY;
        'pieces: for piece in &self.pieces {
            let mut v = piece.offset;
            for (si, &x) in piece.slope.iter().zip(xi.iter()) {
                if x == f64::NEG_INFINITY {
                    if *si > 1e-12 {
                        continue 'pieces;
                    }
                } else {
                    v += si * x;
                }
            }
            best = best.max(v);
        }
        Ok(best)
    }

    /// Add a constant to the function.
    pub fn add_constant(&self, c: f64) -> MaxAffine {
        MaxAffine {
            dim: self.dim,
            pieces: self
                .pieces
                .iter()
                .map(|p| Piece {
                    slope: p.slope.clone(),
                    offset: p.offset + c,
                })
                .collect(),
        }
    }

    /// Canonical form: no piece dominated by the max of the others.
    ///
    /// Piece i is redundant iff its slope is a convex combination of the
    /// other slopes whose combined offset is at least o_i; that combination
    /// is found by a small LP.
    pub fn canonical(&self) -> MaxAffine {
        let mut kept: Vec<Piece> = Vec::new();
        for p in &self.pieces {
            let dup = kept.iter().any(|q| {
                (q.offset - p.offset).abs() <= TAU_NUM
                    && q.slope
                        .iter()
                        .zip(&p.slope)
                        .all(|(a, b)| (a - b).abs() <= TAU_NUM)
            });
            if !dup {
                kept.push(p.clone());
            }
        }
        let mut i = kept.len();
        while i > 0 {
            i -= 1;
            if kept.len() == 1 {
                break;
            }
            let candidate = kept[i].clone();
            let others: Vec<Piece> = kept
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, q)| q.clone())
                .collect();
            if dominated(&candidate, &others, self.dim) {
                kept.remove(i);
            }
        }
        MaxAffine {
            dim: self.dim,
            pieces: kept,
        }
    }

    /// Piece-set equality of canonical forms within `tol`.
    pub fn same_function(&self, other: &MaxAffine, tol: f64) -> bool {
        if self.dim != other.dim {
            return false;
        }
        let mut a = self.canonical().pieces;
        let mut b = other.canonical().pieces;
        if a.len() != b.len() {
            return false;
        }
        let key = |p: &Piece| {
            let mut k = p.slope.clone();
            k.push(p.offset);
            k
        };
        a.sort_by(|p, q| key(p).partial_cmp(&key(q)).unwrap());
        b.sort_by(|p, q| key(p).partial_cmp(&key(q)).unwrap());
        a.iter().zip(&b).all(|(p, q)| {
            (p.offset - q.offset).abs() <= tol
                && p.slope
                    .iter()
                    .zip(&q.slope)
                    .all(|(x, y)| (x - y).abs() <= tol)
        })
    }
}

/// Is `max of others >= piece` everywhere? Holds iff the piece's slope is a
/// convex combination of the other slopes with combined offset >= o_i.
fn dominated(piece: &Piece, others: &[Piece], dim: usize) -> bool {
    let k = others.len();
    let mut a = Vec::with_capacity(dim + 1);
    for i in 0..dim {
        a.push(others.iter().map(|q| q.slope[i]).collect::<Vec<f64>>());
    }
    a.push(vec![1.0; k]);
    let mut b: Vec<f64> = piece.slope.clone();
    b.push(1.0);
    let c: Vec<f64> = others.iter().map(|q| q.offset).collect();
    match lp::maximize(&a, &b, &c) {
        Ok(Some(sol)) => sol.objective >= piece.offset - TAU_NUM,
        _ => false,
    }
}

/// H_S as a max-affine function: one piece (g, 0) per canonical generator.
/// Nonnegativity of the result needs 0 in the body; callers wanting that
/// guarantee should check `body.contains(&origin)` first.
pub fn h_of_body(body: &ConvexBody) -> MaxAffine {
    let canon = body.canonicalize();
    MaxAffine {
        dim: canon.dim,
        pieces: canon
            .generators
            .into_iter()
            .map(|g| Piece {
                slope: g,
                offset: 0.0,
            })
            .collect(),
    }
}

/// Certificate for membership of `subject` in the Lelong class of `body`:
/// valid iff subject <= H_body + c_u pointwise.
#[derive(Debug, Clone)]
pub struct LelongCertificate {
    pub c_u: f64,
    pub body: ConvexBody,
    pub subject: MaxAffine,
}

/// For max-affine subjects the pointwise bound subject <= H_body + c_u is
/// equivalent to: every subject slope lies in the body and every offset is
/// at most c_u.
pub fn check_lelong(cert: &LelongCertificate) -> Result<bool> {
    if cert.subject.dim != cert.body.dim {
        return Err(Error::DimensionMismatch {
            expected: cert.body.dim,
            got: cert.subject.dim,
        });
    }
    for p in &cert.subject.pieces {
        if p.offset > cert.c_u + TAU_NUM {
            return Ok(false);
        }
        if !cert.body.contains(&p.slope)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The composition xi -> phi_T(f_1(xi_1), ..., f_l(xi_l)) as a max-affine
/// function on the concatenated domain. Valid because the T generators are
/// nonnegative, so the outer max distributes over the per-part maxima.
pub fn compose_support(t_body: &ConvexBody, parts: &[MaxAffine]) -> Result<MaxAffine> {
    if t_body.dim != parts.len() {
        return Err(Error::DimensionMismatch {
            expected: t_body.dim,
            got: parts.len(),
        });
    }
    let t = t_body.canonicalize();
    let n: usize = parts.iter().map(|p| p.dim).sum();
    let combos: usize = parts.iter().map(|p| p.pieces.len()).product();
    let total = combos.saturating_mul(t.generators.len());
    const CAP: usize = 1_000_000;
    if total > CAP {
        return Err(Error::Resource(format!(
            "composition would expand into {total} pieces (cap {CAP})"
        )));
    }
    let mut pieces = Vec::with_capacity(total);
    let mut idx = vec![0usize; parts.len()];
    for tg in &t.generators {
        idx.iter_mut().for_each(|v| *v = 0);
        loop {
            let mut slope = Vec::with_capacity(n);
            let mut offset = 0.0;
            for (j, part) in parts.iter().enumerate() {
                let piece = &part.pieces[idx[j]];
                slope.extend(piece.slope.iter().map(|&s| tg[j] * s));
                offset += tg[j] * piece.offset;
            }
            pieces.push(Piece { slope, offset });
            let mut j = 0;
            loop {
                if j == parts.len() {
                    break;
                }
                idx[j] += 1;
                if idx[j] < parts[j].pieces.len() {
                    break;
                }
                idx[j] = 0;
                j += 1;
            }
            if j == parts.len() {
                break;
            }
        }
    }
    Ok(MaxAffine { dim: n, pieces }.canonical())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::{build_product_body, ProductStructure};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn intro_body(a: f64) -> ConvexBody {
        ConvexBody::new(
            2,
            vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, a]],
        )
        .unwrap()
    }

    #[test]
    fn h_of_simplex_is_log_plus_max() {
        let h = h_of_body(&ConvexBody::simplex(2));
        for xi in [[0.5f64, 1.3], [-2.0, 0.7], [-1.0, -1.0]] {
            let expected = 0f64.max(xi[0]).max(xi[1]);
            assert!((h.eval(&xi).unwrap() - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn h_of_intro_body_matches_formula() {
        let a = 0.3;
        let h = h_of_body(&intro_body(a));
        for xi in [[1.5f64, -0.7], [-2.0, 3.0], [0.3, 0.9], [-1.0, -1.0]] {
            let expected = (xi[0].max(0.0))
                .max((xi[0] + xi[1]).max(0.0))
                .max(a * xi[1].max(0.0));
            assert!((h.eval(&xi).unwrap() - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn h_of_origin_is_zero() {
        let h = h_of_body(&ConvexBody::origin(3));
        assert_eq!(h.eval(&[5.0, -2.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn extended_eval_drops_pieces() {
        // H_Sigma2 at z = (0, w): pieces with slope e1 drop out
        let h = h_of_body(&ConvexBody::simplex(2));
        for w in [0.5f64, 2.0, 7.0] {
            let p = LogPoint(vec![f64::NEG_INFINITY, w.ln()]);
            assert!((h.eval_extended(&p).unwrap() - w.ln().max(0.0)).abs() < 1e-12);
        }

        // S = ch{0, (1,1)}: only the zero piece survives at z = (0, w)
        let s = ConvexBody::new(2, vec![vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let h = h_of_body(&s);
        let p = LogPoint(vec![f64::NEG_INFINITY, 3.0]);
        assert_eq!(h.eval_extended(&p).unwrap(), 0.0);

        // no qualifying piece: -inf
        let only_diag = MaxAffine::new(
            2,
            vec![Piece {
                slope: vec![1.0, 1.0],
                offset: 0.0,
            }],
        )
        .unwrap();
        let p = LogPoint(vec![f64::NEG_INFINITY, 0.0]);
        assert_eq!(only_diag.eval_extended(&p).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn extended_eval_finite_point_is_plain_max() {
        let h = h_of_body(&intro_body(0.5));
        let xi = vec![0.7, -0.2];
        let p = LogPoint(xi.clone());
        assert_eq!(h.eval(&xi).unwrap(), h.eval_extended(&p).unwrap());
    }

    #[test]
    fn lelong_certificates() {
        let s = intro_body(0.5);
        let h = h_of_body(&s);
        assert!(check_lelong(&LelongCertificate {
            c_u: 0.0,
            body: s.clone(),
            subject: h.clone(),
        })
        .unwrap());

        // offset above the budget
        let shifted = h_of_body(&ConvexBody::simplex(2)).add_constant(5.0);
        assert!(!check_lelong(&LelongCertificate {
            c_u: 4.0,
            body: ConvexBody::simplex(2),
            subject: shifted,
        })
        .unwrap());

        // diagonal segment sits inside the unit square
        let diag = h_of_body(&ConvexBody::new(2, vec![vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap());
        assert!(check_lelong(&LelongCertificate {
            c_u: 0.0,
            body: ConvexBody::unit_box(2),
            subject: diag,
        })
        .unwrap());

        // a slope pushed outside the body fails
        let poked = MaxAffine::new(
            2,
            vec![Piece {
                slope: vec![1.0 + 1e-5, 0.0],
                offset: 0.0,
            }],
        )
        .unwrap();
        assert!(!check_lelong(&LelongCertificate {
            c_u: 0.0,
            body: ConvexBody::simplex(2),
            subject: poked,
        })
        .unwrap());
    }

    #[test]
    fn compose_simplex_takes_max_of_parts() {
        let t = ConvexBody::new(2, vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let logp = h_of_body(&ConvexBody::interval(0.0, 1.0).unwrap());
        let f = compose_support(&t, &[logp.clone(), logp]).unwrap();
        for xi in [[1.0f64, 2.0], [-0.5, 0.3], [-2.0, -1.0]] {
            let expected = 0f64.max(xi[0]).max(xi[1]);
            assert!((f.eval(&xi).unwrap() - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn compose_singleton_t_is_sum() {
        let t = ConvexBody::point(vec![1.0, 1.0]).unwrap();
        let p1 = h_of_body(&intro_body(0.5));
        let p2 = h_of_body(&ConvexBody::interval(0.0, 2.0).unwrap());
        let f = compose_support(&t, &[p1.clone(), p2.clone()]).unwrap();
        for xi in [[0.4f64, -0.8, 1.2], [-1.0, 2.0, -0.3]] {
            let expected = p1.eval(&xi[..2]).unwrap() + p2.eval(&xi[2..]).unwrap();
            assert!((f.eval(&xi).unwrap() - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn compose_constant_parts() {
        let t = ConvexBody::simplex(2);
        let f = compose_support(&t, &[MaxAffine::constant(1, 0.0), MaxAffine::constant(1, 0.0)])
            .unwrap();
        assert_eq!(f.eval(&[3.0, -4.0]).unwrap(), 0.0);
    }

    #[test]
    fn product_body_h_equals_composition() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let t = ConvexBody::new(2, vec![vec![1.0, 0.5], vec![0.25, 1.0], vec![0.0, 0.0]]).unwrap();
        let s1 = intro_body(0.5);
        let s2 = ConvexBody::interval(0.0, 1.5).unwrap();
        let ps = ProductStructure::new(t.clone(), vec![s1.clone(), s2.clone()]).unwrap();
        let lhs = h_of_body(&build_product_body(&ps));
        let rhs = compose_support(&t, &[h_of_body(&s1), h_of_body(&s2)]).unwrap();
        for _ in 0..1000 {
            let xi: Vec<f64> = (0..3).map(|_| rng.gen_range(-3.0..3.0)).collect();
            assert!((lhs.eval(&xi).unwrap() - rhs.eval(&xi).unwrap()).abs() < 1e-9);
        }
        // points on coordinate hyperplanes
        for _ in 0..100 {
            let mut xi: Vec<f64> = (0..3).map(|_| rng.gen_range(-3.0..3.0)).collect();
            xi[rng.gen_range(0..3)] = f64::NEG_INFINITY;
            if rng.gen_bool(0.5) {
                xi[rng.gen_range(0..3)] = f64::NEG_INFINITY;
            }
            let p = LogPoint(xi);
            let a = lhs.eval_extended(&p).unwrap();
            let b = rhs.eval_extended(&p).unwrap();
            assert!(a == b || (a - b).abs() < 1e-9, "{a} vs {b} at {:?}", p);
        }
    }

    #[test]
    fn canonical_prunes_dominated_pieces() {
        let f = MaxAffine::new(
            2,
            vec![
                Piece {
                    slope: vec![0.0, 0.0],
                    offset: 0.0,
                },
                Piece {
                    slope: vec![1.0, 0.0],
                    offset: 0.0,
                },
                Piece {
                    slope: vec![0.0, 1.0],
                    offset: 0.0,
                },
                // midpoint of the two axis pieces with a lower offset
                Piece {
                    slope: vec![0.5, 0.5],
                    offset: -1.0,
                },
            ],
        )
        .unwrap();
        assert_eq!(f.canonical().pieces.len(), 3);

        // same midpoint with a higher offset must stay
        let g = MaxAffine::new(
            2,
            vec![
                Piece {
                    slope: vec![1.0, 0.0],
                    offset: 0.0,
                },
                Piece {
                    slope: vec![0.0, 1.0],
                    offset: 0.0,
                },
                Piece {
                    slope: vec![0.5, 0.5],
                    offset: 1.0,
                },
            ],
        )
        .unwrap();
        assert_eq!(g.canonical().pieces.len(), 3);
    }

    #[test]
    fn intro_counterexample_gap_reproduced() {
        let a = 0.5;
        let s = intro_body(a);
        let h = h_of_body(&s);
        // the erroneous identification composes phi_S itself over the
        // per-coordinate values
        let unit = h_of_body(&ConvexBody::interval(0.0, 1.0).unwrap());
        let wrong = compose_support(&s, &[unit.clone(), unit]).unwrap();
        for r in [1.5f64, std::f64::consts::E, 10.0] {
            let xi = [-r.ln(), r.ln()];
            let lhs = h.eval(&xi).unwrap();
            let rhs = wrong.eval(&xi).unwrap();
            assert!((lhs - a * r.ln()).abs() < 1e-12);
            assert!((rhs - r.ln()).abs() < 1e-12);
            assert!((rhs - lhs - (1.0 - a) * r.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn monotone_in_each_coordinate() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let h = h_of_body(&intro_body(0.7));
        for _ in 0..500 {
            let xi: Vec<f64> = (0..2).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let mut up = xi.clone();
            up[rng.gen_range(0..2)] += rng.gen_range(0.0..2.0);
            assert!(h.eval(&up).unwrap() >= h.eval(&xi).unwrap() - 1e-12);
        }
    }
}
