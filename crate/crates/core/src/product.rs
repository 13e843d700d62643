//! Evaluation of both sides of the product formula
//! V^S_K = phi_T(V^{S_1}_{K_1}, ..., V^{S_l}_{K_l}) over grids in
//! log-modulus space, with optional constant weights, plus the corollary
//! instantiations (max, sum, p-norm, lower hull).

use num_complex::Complex64;
use serde::Serialize;

use crate::body::{build_product_body, ConvexBody, ProductStructure, TAU_NUM};
use crate::closed_forms::{v_factor_scaled, v_polydisc_body, ProductCompact};
use crate::error::{Error, Result};
use crate::log_support::{compose_support, h_of_body, LogPoint, MaxAffine};

/// One instance of the product formula: the bodies, the compact factors,
/// and optional constant weights q_j (absent = zero).
#[derive(Debug, Clone)]
pub struct TheoremInstance {
    pub ps: ProductStructure,
    pub compacts: Vec<ProductCompact>,
    pub weights: Option<Vec<f64>>,
}

impl TheoremInstance {
    pub fn new(
        ps: ProductStructure,
        compacts: Vec<ProductCompact>,
        weights: Option<Vec<f64>>,
    ) -> Result<Self> {
        if compacts.len() != ps.factors.len() {
            return Err(Error::DimensionMismatch {
                expected: ps.factors.len(),
                got: compacts.len(),
            });
        }
        for (k, s) in compacts.iter().zip(&ps.factors) {
            if k.total_dim() != s.dim {
                return Err(Error::DimensionMismatch {
                    expected: s.dim,
                    got: k.total_dim(),
                });
            }
        }
        if let Some(q) = &weights {
            if q.len() != ps.factors.len() {
                return Err(Error::DimensionMismatch {
                    expected: ps.factors.len(),
                    got: q.len(),
                });
            }
        }
        Ok(TheoremInstance {
            ps,
            compacts,
            weights,
        })
    }

    pub fn total_dim(&self) -> usize {
        self.ps.total_dim()
    }

    fn weight(&self, j: usize) -> f64 {
        self.weights.as_ref().map_or(0.0, |q| q[j])
    }

    /// phi_T(q_1, ..., q_l); the constant by which the product-side
    /// function shifts under constant weights.
    pub fn product_weight(&self) -> Result<f64> {
        match &self.weights {
            None => Ok(0.0),
            Some(q) => self.ps.t_body.support(q),
        }
    }

    /// All factors toric (polydiscs / origin-centered discs)?
    pub fn is_toric(&self) -> bool {
        self.compacts.iter().all(|k| k.toric_radii().is_some())
    }

    /// The unweighted extremal function of factor j as a max-affine
    /// function of Log z_j; only available for toric factors.
    pub fn factor_max_affine(&self, j: usize) -> Result<MaxAffine> {
        let radii = self.compacts[j]
            .toric_radii()
            .ok_or_else(|| Error::Unsupported(format!("factor {j} is not toric")))?;
        v_polydisc_body(&self.ps.factors[j], &radii)
    }

    /// The unweighted extremal value of factor j at z_j, through whichever
    /// closed form applies.
    pub fn factor_value(&self, j: usize, z_j: &[Complex64]) -> Result<f64> {
        let compact = &self.compacts[j];
        if let Some(radii) = compact.toric_radii() {
            let f = v_polydisc_body(&self.ps.factors[j], &radii)?;
            return f.eval_extended(&LogPoint::from_complex(z_j));
        }
        // one-dimensional factor with growth body [0, s]
        let s_body = &self.ps.factors[j];
        if s_body.dim == 1 && compact.factors.len() == 1 {
            let lo = -s_body.support(&[-1.0])?;
            let hi = s_body.support(&[1.0])?;
            if lo.abs() <= TAU_NUM {
                return v_factor_scaled(&compact.factors[0], hi, z_j[0]);
            }
        }
        Err(Error::Unsupported(format!(
            "no closed-form extremal function for factor {j} \
             (need a toric compact, or a 1-D compact with growth body [0, s])"
        )))
    }
}

/// The right-hand side phi_T(V_1(z_1) + q_1, ..., V_l(z_l) + q_l).
pub fn rhs_eval(inst: &TheoremInstance, z: &[Complex64]) -> Result<f64> {
    if z.len() != inst.total_dim() {
        return Err(Error::DimensionMismatch {
            expected: inst.total_dim(),
            got: z.len(),
        });
    }
    let blocks = inst.ps.split(z);
    let mut values = Vec::with_capacity(blocks.len());
    for (j, block) in blocks.iter().enumerate() {
        values.push(inst.factor_value(j, block)? + inst.weight(j));
    }
    inst.ps.t_body.support(&values)
}

/// The left-hand side V^S_{K, q} as an exact max-affine function; only the
/// toric case, where V^S_K is the (radius-shifted) logarithmic supporting
/// function of the product body, plus the constant phi_T(q).
pub fn lhs_exact(inst: &TheoremInstance) -> Result<MaxAffine> {
    let mut radii = Vec::with_capacity(inst.total_dim());
    for k in &inst.compacts {
        match k.toric_radii() {
            Some(r) => radii.extend(r),
            None => {
                return Err(Error::Unsupported(
                    "exact left-hand side requires toric factors; \
                     use the polynomial approximation instead"
                        .into(),
                ))
            }
        }
    }
    let s = build_product_body(&inst.ps);
    let v = v_polydisc_body(&s, &radii)?;
    Ok(v.add_constant(inst.product_weight()?))
}

/// Evaluation grid in log-modulus space, one range/count per complex
/// coordinate; `phases` > 1 samples phases uniformly (needed only for
/// non-toric factors).
#[derive(Debug, Clone, Serialize)]
pub struct GridSpec {
    pub ranges: Vec<(f64, f64)>,
    pub counts: Vec<usize>,
    pub phases: usize,
}

impl GridSpec {
    pub fn uniform(dim: usize, lo: f64, hi: f64, count: usize) -> Self {
        GridSpec {
            ranges: vec![(lo, hi); dim],
            counts: vec![count; dim],
            phases: 1,
        }
    }

    pub fn total_points(&self) -> usize {
        self.counts.iter().product()
    }

    /// Visit every grid point in lexicographic order.
    pub fn for_each(&self, mut f: impl FnMut(&[f64]) -> Result<()>) -> Result<()> {
        let dim = self.counts.len();
        let mut idx = vec![0usize; dim];
        let mut xi = vec![0.0; dim];
        loop {
            for i in 0..dim {
                let (lo, hi) = self.ranges[i];
                let c = self.counts[i];
                xi[i] = if c <= 1 {
                    lo
                } else {
                    lo + (hi - lo) * idx[i] as f64 / (c - 1) as f64
                };
            }
            f(&xi)?;
            let mut i = 0;
            loop {
                if i == dim {
                    return Ok(());
                }
                idx[i] += 1;
                if idx[i] < self.counts[i] {
                    break;
                }
                idx[i] = 0;
                i += 1;
            }
        }
    }
}

/// Outcome of a grid comparison of the two sides.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub max_error: f64,
    pub argmax: Vec<f64>,
    /// Largest value of RHS - LHS; the product inequality asserts this
    /// stays below tolerance even when the sides differ.
    pub max_rhs_minus_lhs: f64,
    pub points: usize,
    pub tolerance: f64,
    pub pass: bool,
}

/// Compare a given exact LHS against the composed RHS on the grid. The
/// toric RHS is evaluated through the factor max-affine functions, so the
/// comparison stays phase-free.
pub fn verify_against_lhs(
    inst: &TheoremInstance,
    lhs: &MaxAffine,
    grid: &GridSpec,
    tolerance: f64,
) -> Result<VerifyReport> {
    let parts: Vec<MaxAffine> = (0..inst.ps.factors.len())
        .map(|j| inst.factor_max_affine(j))
        .collect::<Result<_>>()?;
    let mut max_error = f64::NEG_INFINITY;
    let mut max_signed = f64::NEG_INFINITY;
    let mut argmax = vec![0.0; inst.total_dim()];
    let mut points = 0usize;
    let t_body = &inst.ps.t_body;
    grid.for_each(|xi| {
        let blocks = inst.ps.split(xi);
        let mut values = Vec::with_capacity(blocks.len());
        for (j, block) in blocks.iter().enumerate() {
            values.push(parts[j].eval(block)? + inst.weight(j));
        }
        let rhs = t_body.support(&values)?;
        let lhs_v = lhs.eval(xi)?;
        let err = (lhs_v - rhs).abs();
        max_signed = max_signed.max(rhs - lhs_v);
        if err > max_error {
            max_error = err;
            argmax.copy_from_slice(xi);
        }
        points += 1;
        Ok(())
    })?;
    Ok(VerifyReport {
        max_error,
        argmax,
        max_rhs_minus_lhs: max_signed,
        points,
        tolerance,
        pass: max_error <= tolerance,
    })
}

/// Verify the product formula on the grid through the exact toric path.
pub fn verify_theorem(
    inst: &TheoremInstance,
    grid: &GridSpec,
    tolerance: f64,
) -> Result<VerifyReport> {
    let lhs = lhs_exact(inst)?;
    verify_against_lhs(inst, &lhs, grid, tolerance)
}

/// Canonical-form comparison of the two sides; true when the piece sets of
/// the exact LHS and the composed RHS coincide.
pub fn sides_same_canonical(inst: &TheoremInstance) -> Result<bool> {
    let lhs = lhs_exact(inst)?;
    let parts: Vec<MaxAffine> = (0..inst.ps.factors.len())
        .map(|j| {
            Ok(inst
                .factor_max_affine(j)?
                .add_constant(inst.weight(j)))
        })
        .collect::<Result<_>>()?;
    let rhs = compose_support(&inst.ps.t_body, &parts)?;
    Ok(lhs.same_function(&rhs, 1e-9))
}

/// Which corollary of the product formula to instantiate.
#[derive(Debug, Clone)]
pub enum CorollarySpec {
    /// Siciak's max formula: T the simplex hull of the basis vectors,
    /// unit-disc factors.
    Siciak { ell: usize },
    /// The cartesian-product sum formula: T = {(1, ..., 1)}.
    Sum { factors: Vec<ConvexBody> },
    /// The p-norm formula with T an inscribed polytope of the quarter
    /// p-ball.
    PNorm { p: f64, vertices: usize },
    /// The lower-hull formula: growth bodies [0, 1] per coordinate turn T
    /// into its lower hull.
    LowerHull { body: ConvexBody },
}

#[derive(Debug, Clone, Serialize)]
pub struct CorollaryReport {
    pub name: String,
    pub verify: VerifyReport,
    /// p-norm only: worst deviation of V^q from the sum of factor V^q.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub identity_error: Option<f64>,
    pub pass: bool,
}

/// Inscribed polytope of the quarter p-ball in R^2_+ with `vertices`
/// points on the arc.
pub fn quarter_pball(p: f64, vertices: usize) -> Result<ConvexBody> {
    if vertices < 2 {
        return Err(Error::InvalidArgument("need at least 2 arc vertices".into()));
    }
    let mut gens = vec![vec![0.0, 0.0]];
    for k in 0..vertices {
        let theta = std::f64::consts::FRAC_PI_2 * k as f64 / (vertices - 1) as f64;
        let (s, c) = (theta.sin(), theta.cos());
        // point on the p-sphere along direction (c, s)
        let norm = (c.powf(p) + s.powf(p)).powf(1.0 / p);
        gens.push(vec![c / norm, s / norm]);
    }
    ConvexBody::new(2, gens)
}

fn unit_interval() -> ConvexBody {
    ConvexBody::interval(0.0, 1.0).unwrap()
}

fn unit_disc_compacts(l: usize) -> Vec<ProductCompact> {
    (0..l)
        .map(|_| ProductCompact::new(vec![crate::closed_forms::CompactFactorSpec::unit_disc()]).unwrap())
        .collect()
}

/// Instantiate and verify one corollary on the given grid.
pub fn corollary_suite(spec: &CorollarySpec, grid: &GridSpec) -> Result<CorollaryReport> {
    match spec {
        CorollarySpec::Siciak { ell } => {
            let mut gens = Vec::new();
            for j in 0..*ell {
                let mut e = vec![0.0; *ell];
                e[j] = 1.0;
                gens.push(e);
            }
            let t = ConvexBody::new(*ell, gens)?;
            let ps = ProductStructure::new(t, vec![unit_interval(); *ell])?;
            let inst = TheoremInstance::new(ps, unit_disc_compacts(*ell), None)?;
            let verify = verify_theorem(&inst, grid, TAU_NUM)?;
            let pass = verify.pass;
            Ok(CorollaryReport {
                name: "siciak".into(),
                verify,
                identity_error: None,
                pass,
            })
        }
        CorollarySpec::Sum { factors } => {
            let l = factors.len();
            let t = ConvexBody::point(vec![1.0; l])?;
            let compacts: Vec<ProductCompact> = factors
                .iter()
                .map(|s| {
                    ProductCompact::new(vec![
                        crate::closed_forms::CompactFactorSpec::unit_polydisc(s.dim),
                    ])
                })
                .collect::<Result<_>>()?;
            let ps = ProductStructure::new(t, factors.clone())?;
            let inst = TheoremInstance::new(ps, compacts, None)?;
            let verify = verify_theorem(&inst, grid, TAU_NUM)?;
            let pass = verify.pass;
            Ok(CorollaryReport {
                name: "sum".into(),
                verify,
                identity_error: None,
                pass,
            })
        }
        CorollarySpec::PNorm { p, vertices } => {
            let t = quarter_pball(*p, *vertices)?;
            let ps = ProductStructure::new(t, vec![unit_interval(), unit_interval()])?;
            let inst = TheoremInstance::new(ps, unit_disc_compacts(2), None)?;
            let verify = verify_theorem(&inst, grid, TAU_NUM)?;
            // the p-norm identity V^q = sum V_j^q, within the inscribed
            // polytope's one-sided support error
            let q = p / (p - 1.0);
            let lhs = lhs_exact(&inst)?;
            let mut identity_error: f64 = 0.0;
            grid.for_each(|xi| {
                let v = lhs.eval(xi)?.max(0.0);
                let v1 = xi[0].max(0.0);
                let v2 = xi[1].max(0.0);
                let exact = v1.powf(q) + v2.powf(q);
                identity_error = identity_error.max((v.powf(q) - exact).abs());
                Ok(())
            })?;
            let pass = verify.pass;
            Ok(CorollaryReport {
                name: "pnorm".into(),
                verify,
                identity_error: Some(identity_error),
                pass,
            })
        }
        CorollarySpec::LowerHull { body } => {
            let n = body.dim;
            let ps = ProductStructure::new(body.clone(), vec![unit_interval(); n])?;
            let inst = TheoremInstance::new(ps, unit_disc_compacts(n), None)?;
            let verify = verify_theorem(&inst, grid, TAU_NUM)?;
            // the product body of ([0,1], ..., [0,1]) weights is exactly
            // the lower hull of T
            let product = h_of_body(&build_product_body(&inst.ps));
            let hull = h_of_body(&body.lower_hull()?);
            let pass = verify.pass && product.same_function(&hull, TAU_NUM);
            Ok(CorollaryReport {
                name: "lowerhull".into(),
                verify,
                identity_error: None,
                pass,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_forms::CompactFactorSpec;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn intro_body(a: f64) -> ConvexBody {
        ConvexBody::new(
            2,
            vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, a]],
        )
        .unwrap()
    }

    fn two_disc_instance(t: ConvexBody) -> TheoremInstance {
        let ps = ProductStructure::new(t, vec![unit_interval(), unit_interval()]).unwrap();
        TheoremInstance::new(ps, unit_disc_compacts(2), None).unwrap()
    }

    #[test]
    fn rhs_max_of_disc_values() {
        let t = ConvexBody::new(2, vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let inst = two_disc_instance(t);
        let v = rhs_eval(&inst, &[c(2.0, 0.0), c(3.0, 0.0)]).unwrap();
        assert!((v - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn rhs_sum_for_singleton_t() {
        let t = ConvexBody::point(vec![1.0, 1.0]).unwrap();
        let inst = two_disc_instance(t);
        let v = rhs_eval(&inst, &[c(2.0, 0.0), c(3.0, 0.0)]).unwrap();
        assert!((v - (2f64.ln() + 3f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn rhs_quarter_ball_euclidean() {
        let t = quarter_pball(2.0, 256).unwrap();
        let ps = ProductStructure::new(t, vec![unit_interval(), unit_interval()]).unwrap();
        let inst = TheoremInstance::new(ps, unit_disc_compacts(2), None).unwrap();
        let e = std::f64::consts::E;
        let v = rhs_eval(&inst, &[c(e, 0.0), c(e, 0.0)]).unwrap();
        assert!((v - 2f64.sqrt()).abs() < 5e-4, "{v}");
    }

    #[test]
    fn lhs_exact_unit_bidisc_is_h() {
        let t = ConvexBody::point(vec![1.0, 1.0]).unwrap();
        let s1 = intro_body(0.5);
        let ps = ProductStructure::new(
            t,
            vec![s1.clone(), ConvexBody::interval(0.0, 1.0).unwrap()],
        )
        .unwrap();
        let compacts = vec![
            ProductCompact::new(vec![CompactFactorSpec::unit_polydisc(2)]).unwrap(),
            ProductCompact::new(vec![CompactFactorSpec::unit_disc()]).unwrap(),
        ];
        let inst = TheoremInstance::new(ps.clone(), compacts, None).unwrap();
        let lhs = lhs_exact(&inst).unwrap();
        let h = h_of_body(&build_product_body(&ps));
        assert!(lhs.same_function(&h, 1e-12));
    }

    #[test]
    fn lhs_exact_constant_weight_shift() {
        let t = ConvexBody::point(vec![1.0]).unwrap();
        let ps = ProductStructure::new(t, vec![unit_interval()]).unwrap();
        let compacts = vec![ProductCompact::new(vec![CompactFactorSpec::unit_disc()]).unwrap()];
        let inst = TheoremInstance::new(ps, compacts, Some(vec![-1.0])).unwrap();
        let lhs = lhs_exact(&inst).unwrap();
        // log^+|z| - 1
        assert!((lhs.eval(&[2.0]).unwrap() - (2.0 - 1.0)).abs() < 1e-12);
        assert!((lhs.eval(&[-3.0]).unwrap() - (0.0 - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn lhs_exact_zero_t_is_constant_zero() {
        let t = ConvexBody::origin(1);
        let ps = ProductStructure::new(t, vec![ConvexBody::simplex(2)]).unwrap();
        let compacts = vec![ProductCompact::new(vec![CompactFactorSpec::unit_polydisc(2)]).unwrap()];
        let inst = TheoremInstance::new(ps, compacts, None).unwrap();
        let lhs = lhs_exact(&inst).unwrap();
        assert_eq!(lhs.eval(&[5.0, -1.0]).unwrap(), 0.0);
    }

    #[test]
    fn lhs_exact_rejects_interval_factor() {
        let t = ConvexBody::point(vec![1.0]).unwrap();
        let ps = ProductStructure::new(t, vec![unit_interval()]).unwrap();
        let compacts =
            vec![ProductCompact::new(vec![CompactFactorSpec::Interval { a: -1.0, b: 1.0 }]).unwrap()];
        let inst = TheoremInstance::new(ps, compacts, None).unwrap();
        assert!(matches!(lhs_exact(&inst), Err(Error::Unsupported(_))));
    }

    #[test]
    fn verify_toric_instance_exact() {
        let t = ConvexBody::new(2, vec![vec![1.0, 0.2], vec![0.3, 1.0], vec![0.0, 0.0]]).unwrap();
        let ps = ProductStructure::new(t, vec![intro_body(0.5), unit_interval()]).unwrap();
        let compacts = vec![
            ProductCompact::new(vec![CompactFactorSpec::unit_polydisc(2)]).unwrap(),
            ProductCompact::new(vec![CompactFactorSpec::unit_disc()]).unwrap(),
        ];
        let inst = TheoremInstance::new(ps, compacts, None).unwrap();
        let grid = GridSpec::uniform(3, -3.0, 3.0, 11);
        let report = verify_theorem(&inst, &grid, TAU_NUM).unwrap();
        assert!(report.pass, "max error {}", report.max_error);
        assert!(sides_same_canonical(&inst).unwrap());
    }

    #[test]
    fn verify_inert_block_drops_out() {
        // T = [0,1] x {0}: the second block must not influence the sides
        let t = ConvexBody::new(2, vec![vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let ps = ProductStructure::new(t, vec![unit_interval(), unit_interval()]).unwrap();
        let inst = TheoremInstance::new(ps, unit_disc_compacts(2), None).unwrap();
        let grid = GridSpec::uniform(2, -2.0, 2.0, 9);
        let report = verify_theorem(&inst, &grid, TAU_NUM).unwrap();
        assert!(report.pass);
        let lhs = lhs_exact(&inst).unwrap();
        for z2 in [-3.0, 0.0, 3.0] {
            let base = lhs.eval(&[1.3, z2]).unwrap();
            assert!((base - lhs.eval(&[1.3, 0.0]).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn wrong_identification_reports_gap() {
        // using S itself instead of its lower hull: the reported error is
        // (1 - a) * xi_max at the corner (-xi_max, xi_max)
        let a = 0.5;
        let s = intro_body(a);
        let inst = two_disc_instance(s.clone());
        let grid = GridSpec::uniform(2, -3.0, 3.0, 13);
        let report = verify_against_lhs(&inst, &h_of_body(&s), &grid, TAU_NUM).unwrap();
        assert!(!report.pass);
        assert!((report.max_error - (1.0 - a) * 3.0).abs() < 1e-12);
    }

    #[test]
    fn weighted_shift_same_error_for_simplex_t() {
        let t = ConvexBody::new(2, vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let ps = ProductStructure::new(t, vec![unit_interval(), unit_interval()]).unwrap();
        let grid = GridSpec::uniform(2, -3.0, 3.0, 9);
        let plain = TheoremInstance::new(ps.clone(), unit_disc_compacts(2), None).unwrap();
        let shifted =
            TheoremInstance::new(ps, unit_disc_compacts(2), Some(vec![0.7, 0.7])).unwrap();
        let r0 = verify_theorem(&plain, &grid, TAU_NUM).unwrap();
        let r1 = verify_theorem(&shifted, &grid, TAU_NUM).unwrap();
        assert!((r0.max_error - r1.max_error).abs() < 1e-12);
        assert!(r0.pass && r1.pass);
    }

    #[test]
    fn corollaries_exact_paths() {
        let grid = GridSpec::uniform(2, -3.0, 3.0, 9);
        let r = corollary_suite(&CorollarySpec::Siciak { ell: 2 }, &grid).unwrap();
        assert!(r.pass);
        let r = corollary_suite(
            &CorollarySpec::Sum {
                factors: vec![intro_body(0.5), ConvexBody::interval(0.0, 1.5).unwrap()],
            },
            &GridSpec::uniform(3, -3.0, 3.0, 7),
        )
        .unwrap();
        assert!(r.pass);
        let r = corollary_suite(
            &CorollarySpec::LowerHull {
                body: intro_body(0.5),
            },
            &grid,
        )
        .unwrap();
        assert!(r.pass);
    }

    #[test]
    fn corollary_pnorm_identity() {
        let grid = GridSpec::uniform(2, -3.0, 3.0, 10);
        let r = corollary_suite(&CorollarySpec::PNorm { p: 2.0, vertices: 64 }, &grid).unwrap();
        assert!(r.pass);
        assert!(r.identity_error.unwrap() <= 5e-3, "{:?}", r.identity_error);
    }
}
