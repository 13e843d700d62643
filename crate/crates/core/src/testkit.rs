//! Randomized generators and property drivers shared by the integration
//! test suites: rational random bodies, random toric product structures,
//! and the invariant checks that both the property and acceptance suites
//! exercise at scale.

use rand::Rng;

use crate::body::{build_product_body, probe_union_convexity, ConvexBody, ProductStructure};
use crate::closed_forms::{CompactFactorSpec, ProductCompact};
use crate::error::Result;
use crate::log_support::h_of_body;
use crate::product::TheoremInstance;

/// Random body in R^dim_+ with rational generator coordinates (multiples
/// of 1/8 up to 2), always including the origin.
pub fn random_rational_body(rng: &mut impl Rng, dim: usize) -> ConvexBody {
    let count = rng.gen_range(1..=4);
    let mut gens = vec![vec![0.0; dim]];
    for _ in 0..count {
        gens.push((0..dim).map(|_| rng.gen_range(0..=16) as f64 / 8.0).collect());
    }
    ConvexBody::new(dim, gens).expect("nonnegative rational generators")
}

/// Random product structure with l <= 3 factors of dimension <= 2 and
/// rational generators (T is allowed to omit the origin).
pub fn random_product_structure(rng: &mut impl Rng) -> ProductStructure {
    let l = rng.gen_range(1..=3);
    let t = {
        let count = rng.gen_range(1..=4);
        let mut gens: Vec<Vec<f64>> = (0..count)
            .map(|_| (0..l).map(|_| rng.gen_range(0..=16) as f64 / 8.0).collect())
            .collect();
        if rng.gen_bool(0.5) {
            gens.push(vec![0.0; l]);
        }
        ConvexBody::new(l, gens).expect("nonnegative rational generators")
    };
    let factors: Vec<ConvexBody> = (0..l)
        .map(|_| {
            let dim = rng.gen_range(1..=2);
            random_rational_body(rng, dim)
        })
        .collect();
    ProductStructure::new(t, factors).expect("factors contain the origin")
}

/// Random toric theorem instance over a random product structure.
pub fn random_toric_instance(rng: &mut impl Rng) -> TheoremInstance {
    let ps = random_product_structure(rng);
    let compacts: Vec<ProductCompact> = ps
        .factors
        .iter()
        .map(|s| {
            ProductCompact::new(vec![CompactFactorSpec::unit_polydisc(s.dim)])
                .expect("unit polydisc")
        })
        .collect();
    TheoremInstance::new(ps, compacts, None).expect("consistent dims")
}

fn rel_tol(scale: f64) -> f64 {
    1e-9 * (1.0 + scale.abs())
}

/// phi(t xi) = t phi(xi) for t >= 0; returns failures out of `cases`.
pub fn check_homogeneity(rng: &mut impl Rng, cases: usize) -> Result<usize> {
    let mut failures = 0;
    for _ in 0..cases {
        let dim = rng.gen_range(1..=4);
        let body = random_rational_body(rng, dim);
        let xi: Vec<f64> = (0..dim).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let t: f64 = rng.gen_range(0.0..3.0);
        let txi: Vec<f64> = xi.iter().map(|v| t * v).collect();
        let lhs = body.support(&txi)?;
        let rhs = t * body.support(&xi)?;
        if (lhs - rhs).abs() > rel_tol(rhs) {
            failures += 1;
        }
    }
    Ok(failures)
}

/// phi(xi + eta) <= phi(xi) + phi(eta).
pub fn check_subadditivity(rng: &mut impl Rng, cases: usize) -> Result<usize> {
    let mut failures = 0;
    for _ in 0..cases {
        let dim = rng.gen_range(1..=4);
        let body = random_rational_body(rng, dim);
        let xi: Vec<f64> = (0..dim).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let eta: Vec<f64> = (0..dim).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let sum: Vec<f64> = xi.iter().zip(&eta).map(|(a, b)| a + b).collect();
        let lhs = body.support(&sum)?;
        let rhs = body.support(&xi)? + body.support(&eta)?;
        if lhs > rhs + rel_tol(rhs) {
            failures += 1;
        }
    }
    Ok(failures)
}

/// phi_S >= 0 everywhere for bodies containing the origin.
pub fn check_nonnegativity(rng: &mut impl Rng, cases: usize) -> Result<usize> {
    let mut failures = 0;
    for _ in 0..cases {
        let dim = rng.gen_range(1..=4);
        let body = random_rational_body(rng, dim);
        let xi: Vec<f64> = (0..dim).map(|_| rng.gen_range(-5.0..5.0)).collect();
        if body.support(&xi)? < -1e-9 {
            failures += 1;
        }
    }
    Ok(failures)
}

/// phi_{lower_hull(S)}(xi) = phi_S(xi^+).
pub fn check_lower_hull_identity(rng: &mut impl Rng, cases: usize) -> Result<usize> {
    let mut failures = 0;
    let mut case = 0;
    while case < cases {
        let dim = rng.gen_range(1..=4);
        let body = random_rational_body(rng, dim);
        let hull = body.lower_hull()?;
        for _ in 0..10 {
            if case >= cases {
                break;
            }
            case += 1;
            let xi: Vec<f64> = (0..dim).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let plus: Vec<f64> = xi.iter().map(|v| v.max(0.0)).collect();
            let lhs = hull.support(&xi)?;
            let rhs = body.support(&plus)?;
            if (lhs - rhs).abs() > rel_tol(rhs) {
                failures += 1;
            }
        }
    }
    Ok(failures)
}

/// phi_S(xi) = phi_T(phi_{S_1}(xi_1), ..., phi_{S_l}(xi_l)) for the
/// product body S.
pub fn check_product_support_identity(rng: &mut impl Rng, cases: usize) -> Result<usize> {
    let mut failures = 0;
    let mut case = 0;
    while case < cases {
        let ps = random_product_structure(rng);
        let product = build_product_body(&ps);
        let n = ps.total_dim();
        for _ in 0..10 {
            if case >= cases {
                break;
            }
            case += 1;
            let xi: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let lhs = product.support(&xi)?;
            let values: Vec<f64> = ps
                .split(&xi)
                .iter()
                .zip(&ps.factors)
                .map(|(block, s)| s.support(block))
                .collect::<Result<_>>()?;
            let rhs = ps.t_body.support(&values)?;
            if (lhs - rhs).abs() > rel_tol(rhs) {
                failures += 1;
            }
        }
    }
    Ok(failures)
}

/// The product inequality direction on toric instances: the composed side
/// never exceeds the exact extremal side.
pub fn check_inequality_direction(rng: &mut impl Rng, cases: usize) -> Result<usize> {
    let mut failures = 0;
    let mut case = 0;
    while case < cases {
        let inst = random_toric_instance(rng);
        let lhs = crate::product::lhs_exact(&inst)?;
        let parts: Vec<_> = (0..inst.ps.factors.len())
            .map(|j| inst.factor_max_affine(j))
            .collect::<Result<_>>()?;
        let n = inst.total_dim();
        for _ in 0..10 {
            if case >= cases {
                break;
            }
            case += 1;
            let xi: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let values: Vec<f64> = inst
                .ps
                .split(&xi)
                .iter()
                .zip(&parts)
                .map(|(block, p): (&&[f64], &crate::log_support::MaxAffine)| p.eval(block))
                .collect::<Result<_>>()?;
            let rhs = inst.ps.t_body.support(&values)?;
            if rhs > lhs.eval(&xi)? + 1e-9 {
                failures += 1;
            }
        }
    }
    Ok(failures)
}

/// Midpoints of random points of the union defining the product body stay
/// inside the body (the union is convex).
pub fn check_union_convexity(rng: &mut impl Rng, cases: usize) -> Result<usize> {
    let mut failures = 0;
    let mut case = 0;
    while case < cases {
        let ps = random_product_structure(rng);
        let probes = 10.min(cases - case);
        case += probes;
        if !probe_union_convexity(&ps, probes, rng)? {
            failures += 1;
        }
    }
    Ok(failures)
}

/// canonicalize is idempotent and preserves the support function.
pub fn check_canonicalize(rng: &mut impl Rng, cases: usize) -> Result<usize> {
    let mut failures = 0;
    for _ in 0..cases {
        let dim = rng.gen_range(1..=4);
        let body = random_rational_body(rng, dim);
        let canon = body.canonicalize();
        let twice = canon.canonicalize();
        if twice.generators.len() != canon.generators.len() {
            failures += 1;
            continue;
        }
        if !h_of_body(&canon).same_function(&h_of_body(&body), 1e-9) {
            failures += 1;
        }
    }
    Ok(failures)
}
