//! Compact convex bodies in the nonnegative orthant, represented by a
//! finite generator set. The represented set is always the convex hull of
//! the generators; support evaluation is a max over generators and never
//! needs facet enumeration.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp;

/// Tolerance for support-function arithmetic.
pub const TAU_NUM: f64 = 1e-9;
/// Tolerance for LP membership tests.
pub const TAU_MEM: f64 = 1e-8;

/// A compact convex subset of R^n_+ given by generators (vertex candidates).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvexBody {
    pub dim: usize,
    pub generators: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl ConvexBody {
    pub fn new(dim: usize, generators: Vec<Vec<f64>>) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::InvalidArgument("generator list is empty".into()));
        }
        for g in &generators {
            if g.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: g.len(),
                });
            }
            if g.iter().any(|&v| v < -TAU_MEM || !v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "generator {g:?} leaves the nonnegative orthant"
                )));
            }
        }
        Ok(ConvexBody {
            dim,
            generators,
            label: None,
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    /// The origin in R^n.
    pub fn origin(dim: usize) -> Self {
        ConvexBody::new(dim, vec![vec![0.0; dim]]).unwrap()
    }

    /// A single point.
    pub fn point(p: Vec<f64>) -> Result<Self> {
        ConvexBody::new(p.len(), vec![p])
    }

    /// The interval [a, b] as a one-dimensional body, 0 <= a <= b.
    pub fn interval(a: f64, b: f64) -> Result<Self> {
        if a > b {
            return Err(Error::InvalidArgument(format!("interval [{a}, {b}] empty")));
        }
        ConvexBody::new(1, vec![vec![a], vec![b]])
    }

    /// The standard simplex ch{0, e_1, ..., e_n}.
    pub fn simplex(dim: usize) -> Self {
        let mut gens = vec![vec![0.0; dim]];
        for j in 0..dim {
            let mut e = vec![0.0; dim];
            e[j] = 1.0;
            gens.push(e);
        }
        ConvexBody::new(dim, gens).unwrap()
    }

    /// The simplex ch{0, x_1 e_1, ..., x_n e_n} given by axis lengths x.
    pub fn simplex_scaled(x: &[f64]) -> Result<Self> {
        let dim = x.len();
        let mut gens = vec![vec![0.0; dim]];
        for (j, &xj) in x.iter().enumerate() {
            let mut e = vec![0.0; dim];
            e[j] = xj;
            gens.push(e);
        }
        ConvexBody::new(dim, gens)
    }

    /// The box [0, 1]^n.
    pub fn unit_box(dim: usize) -> Self {
        let mut gens = Vec::with_capacity(1 << dim);
        for mask in 0u32..(1 << dim) {
            gens.push((0..dim).map(|j| ((mask >> j) & 1) as f64).collect());
        }
        ConvexBody::new(dim, gens).unwrap()
    }

    /// Supporting function: max over generators of <g, xi>.
    pub fn support(&self, xi: &[f64]) -> Result<f64> {
        if xi.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: xi.len(),
            });
        }
        Ok(self
            .generators
            .iter()
            .map(|g| dot(g, xi))
            .fold(f64::NEG_INFINITY, f64::max))
    }

    /// Membership in the convex hull of the generators, by a feasibility LP
    /// on barycentric coordinates.
    pub fn contains(&self, p: &[f64]) -> Result<bool> {
        if p.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: p.len(),
            });
        }
        let k = self.generators.len();
        let mut a = Vec::with_capacity(self.dim + 1);
        for i in 0..self.dim {
            a.push(self.generators.iter().map(|g| g[i]).collect::<Vec<_>>());
        }
        a.push(vec![1.0; k]);
        let mut b: Vec<f64> = p.to_vec();
        b.push(1.0);
        Ok(lp::feasible(&a, &b)?.is_some())
    }

    /// The body scaled by t >= 0.
    pub fn scale(&self, t: f64) -> ConvexBody {
        ConvexBody {
            dim: self.dim,
            generators: self
                .generators
                .iter()
                .map(|g| g.iter().map(|&v| t * v).collect())
                .collect(),
            label: None,
        }
    }

    /// Remove duplicate generators and generators interior to the hull of
    /// the others. Idempotent; the hull is unchanged.
    pub fn canonicalize(&self) -> ConvexBody {
        let mut kept: Vec<Vec<f64>> = Vec::new();
        for g in &self.generators {
            if !kept
                .iter()
                .any(|h| h.iter().zip(g).all(|(a, b)| (a - b).abs() <= TAU_MEM))
            {
                kept.push(g.clone());
            }
        }
        // prune hull-interior generators, scanning from the back so the
        // surviving set is stable with respect to input order
        let mut i = kept.len();
        while i > 0 {
            i -= 1;
            if kept.len() == 1 {
                break;
            }
            let mut others = kept.clone();
            let g = others.remove(i);
            let body = ConvexBody {
                dim: self.dim,
                generators: others,
                label: None,
            };
            if body.contains(&g).unwrap_or(false) {
                kept.remove(i);
            }
        }
        ConvexBody {
            dim: self.dim,
            generators: kept,
            label: self.label.clone(),
        }
    }

    /// The lower hull: smallest set containing the body that also contains
    /// the coordinate box below each of its points. Generated by the 2^n
    /// coordinate maskings of each generator; its support is xi -> support(xi^+).
    pub fn lower_hull(&self) -> Result<ConvexBody> {
        if self.dim > 8 {
            return Err(Error::Resource(format!(
                "lower_hull limited to dimension <= 8, got {}",
                self.dim
            )));
        }
        let mut gens = Vec::new();
        for g in &self.generators {
            for mask in 0u32..(1 << self.dim) {
                gens.push(
                    (0..self.dim)
                        .map(|j| if (mask >> j) & 1 == 1 { g[j] } else { 0.0 })
                        .collect::<Vec<f64>>(),
                );
            }
        }
        Ok(ConvexBody {
            dim: self.dim,
            generators: gens,
            label: None,
        }
        .canonicalize())
    }

    /// Per-axis extent x_j = max{t : t e_j in body}, by a one-dimensional LP
    /// over barycentric coordinates with the off-axis coordinates pinned to 0.
    pub fn axis_extents(&self) -> Result<Vec<f64>> {
        let k = self.generators.len();
        let mut out = Vec::with_capacity(self.dim);
        for j in 0..self.dim {
            let mut a = Vec::new();
            for i in 0..self.dim {
                if i != j {
                    a.push(self.generators.iter().map(|g| g[i]).collect::<Vec<_>>());
                }
            }
            a.push(vec![1.0; k]);
            let mut b = vec![0.0; self.dim - 1];
            b.push(1.0);
            let c: Vec<f64> = self.generators.iter().map(|g| g[j]).collect();
            match lp::maximize(&a, &b, &c)? {
                Some(sol) => out.push(sol.objective.max(0.0)),
                None => out.push(0.0),
            }
        }
        Ok(out)
    }

    /// Largest pairwise generator distance and a unit direction realizing
    /// it. Tie-break: first maximizing pair in generator order. A
    /// single-point body reports diameter 0 with no direction.
    pub fn diameter_and_witness(&self) -> Result<(f64, Option<Vec<f64>>)> {
        let gens = &self.generators;
        let mut best = 0.0;
        let mut pair = None;
        for i in 0..gens.len() {
            for j in (i + 1)..gens.len() {
                let d2: f64 = gens[i]
                    .iter()
                    .zip(&gens[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                if d2 > best {
                    best = d2;
                    pair = Some((i, j));
                }
            }
        }
        let Some((i, j)) = pair else {
            return Ok((0.0, None));
        };
        let diam = best.sqrt();
        if diam <= TAU_NUM {
            return Ok((0.0, None));
        }
        let eta: Vec<f64> = gens[i]
            .iter()
            .zip(&gens[j])
            .map(|(a, b)| (a - b) / diam)
            .collect();
        let neg: Vec<f64> = eta.iter().map(|v| -v).collect();
        debug_assert!(self.support(&eta)? + self.support(&neg)? >= diam - TAU_NUM);
        Ok((diam, Some(eta)))
    }

    /// Whether the body is (within tolerance) the simplex of its axis
    /// extents; otherwise a generator violating sum s_i / x_i <= 1.
    pub fn simplex_report(&self) -> Result<SimplexReport> {
        let extents = self.axis_extents()?;
        if extents.iter().any(|&x| x <= TAU_MEM) {
            return Err(Error::DegenerateBody(format!(
                "axis extent not positive: {extents:?}"
            )));
        }
        let mut worst = f64::NEG_INFINITY;
        let mut witness = None;
        for g in &self.generators {
            let r: f64 = g.iter().zip(&extents).map(|(s, x)| s / x).sum();
            if r > worst {
                worst = r;
                witness = Some(g.clone());
            }
        }
        if worst <= 1.0 + TAU_MEM {
            Ok(SimplexReport {
                is_simplex: true,
                axis_extents: extents,
                witness: None,
            })
        } else {
            Ok(SimplexReport {
                is_simplex: false,
                axis_extents: extents,
                witness,
            })
        }
    }

    /// A random point of the body, as a random convex combination of the
    /// generators (Dirichlet weights).
    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let k = self.generators.len();
        let mut w: Vec<f64> = (0..k).map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
        let s: f64 = w.iter().sum();
        for v in w.iter_mut() {
            *v /= s;
        }
        let mut p = vec![0.0; self.dim];
        for (wi, g) in w.iter().zip(&self.generators) {
            for (pi, gi) in p.iter_mut().zip(g) {
                *pi += wi * gi;
            }
        }
        p
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Result of the simplex test of a body against its axis extents.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimplexReport {
    pub is_simplex: bool,
    pub axis_extents: Vec<f64>,
    pub witness: Option<Vec<f64>>,
}

/// The data (T, [S_1, ..., S_l]) driving the product construction
/// S = union over x in T of (x_1 S_1) x ... x (x_l S_l).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProductStructure {
    pub t_body: ConvexBody,
    pub factors: Vec<ConvexBody>,
}

impl ProductStructure {
    pub fn new(t_body: ConvexBody, factors: Vec<ConvexBody>) -> Result<Self> {
        if t_body.dim != factors.len() {
            return Err(Error::DimensionMismatch {
                expected: t_body.dim,
                got: factors.len(),
            });
        }
        for s in &factors {
            if !s.contains(&vec![0.0; s.dim])? {
                return Err(Error::InvalidArgument(format!(
                    "factor body {:?} does not contain the origin",
                    s.label
                )));
            }
        }
        Ok(ProductStructure { t_body, factors })
    }

    pub fn factor_dims(&self) -> Vec<usize> {
        self.factors.iter().map(|s| s.dim).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.factors.iter().map(|s| s.dim).sum()
    }

    /// Split a total-dimension vector into per-factor blocks.
    pub fn split<'a, T>(&self, v: &'a [T]) -> Vec<&'a [T]> {
        let mut out = Vec::with_capacity(self.factors.len());
        let mut off = 0;
        for s in &self.factors {
            out.push(&v[off..off + s.dim]);
            off += s.dim;
        }
        out
    }
}

/// The body S of the product construction: generators are all blockwise
/// products (t_1 v_1, ..., t_l v_l) of a T generator with factor generators.
pub fn build_product_body(ps: &ProductStructure) -> ConvexBody {
    let n = ps.total_dim();
    let mut gens = Vec::new();
    let mut combo = vec![0usize; ps.factors.len()];
    for t in &ps.t_body.generators {
        loop {
            let mut g = Vec::with_capacity(n);
            for (j, s) in ps.factors.iter().enumerate() {
                let v = &s.generators[combo[j]];
                g.extend(v.iter().map(|&vi| t[j] * vi));
            }
            gens.push(g);
            // advance the mixed-radix combination counter
            let mut j = 0;
            loop {
                if j == ps.factors.len() {
                    break;
                }
                combo[j] += 1;
                if combo[j] < ps.factors[j].generators.len() {
                    break;
                }
                combo[j] = 0;
                j += 1;
            }
            if j == ps.factors.len() {
                break;
            }
        }
    }
    ConvexBody {
        dim: n,
        generators: gens,
        label: None,
    }
}

/// Sample random midpoints of pairs drawn from the raw union
/// U_{x in T} (x_1 S_1) x ... x (x_l S_l) and check each midpoint lies in
/// the hull of `build_product_body`. True iff every probe passes.
pub fn probe_union_convexity<R: Rng + ?Sized>(
    ps: &ProductStructure,
    trials: usize,
    rng: &mut R,
) -> Result<bool> {
    let hull = build_product_body(ps).canonicalize();
    for _ in 0..trials {
        let p1 = sample_union_point(ps, rng);
        let p2 = sample_union_point(ps, rng);
        let mid: Vec<f64> = p1.iter().zip(&p2).map(|(a, b)| 0.5 * (a + b)).collect();
        if !hull.contains(&mid)? {
            return Ok(false);
        }
    }
    Ok(true)
}

fn sample_union_point<R: Rng + ?Sized>(ps: &ProductStructure, rng: &mut R) -> Vec<f64> {
    let x = ps.t_body.sample_point(rng);
    let mut p = Vec::with_capacity(ps.total_dim());
    for (j, s) in ps.factors.iter().enumerate() {
        let v = s.sample_point(rng);
        p.extend(v.iter().map(|&vi| x[j] * vi));
    }
    p
}
