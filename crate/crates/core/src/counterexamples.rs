//! The three negative results: the introductory counterexample to the
//! naive product identification, the failure of the product formula for
//! non-constant weights, and non-convexity of sublevel sets of H_S for
//! non-simplex bodies.

use num_complex::Complex64;
use serde::Serialize;

use crate::body::{ConvexBody, ProductStructure, TAU_MEM, TAU_NUM};
use crate::closed_forms::{CompactFactorSpec, ProductCompact};
use crate::error::{Error, Result};
use crate::log_support::{h_of_body, LogPoint};
use crate::product::{lhs_exact, rhs_eval, GridSpec, TheoremInstance};

/// Report of the introductory counterexample: S = ch{(0,0), (1,0), (1,1),
/// (0,a)} with 0 < a < 1, K the closed unit bidisc, evaluated at
/// z = (1/R, R).
#[derive(Debug, Clone, Serialize)]
pub struct IntroReport {
    pub a: f64,
    pub r: f64,
    /// V^S_K(1/R, R) = H_S(1/R, R) = a log R
    pub lhs: f64,
    /// phi_S(V(1/R), V(R)) = log R
    pub rhs: f64,
    pub gap: f64,
    pub pass: bool,
}

/// The body of the introductory counterexample.
pub fn intro_body(a: f64) -> Result<ConvexBody> {
    ConvexBody::new(
        2,
        vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, a]],
    )
}

/// Evaluate both sides of the naive product identification for the
/// introductory body at z = (1/R, R) and report the gap (1 - a) log R.
pub fn intro_counterexample(a: f64, r: f64) -> Result<IntroReport> {
    if !(0.0 < a && a < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < a < 1 for a counterexample (at a >= 1 the body is a \
             lower set and the product identity holds); got a = {a}"
        )));
    }
    if r < 1.0 {
        return Err(Error::InvalidArgument(format!("need R >= 1, got {r}")));
    }
    let s = intro_body(a)?;
    let log_r = r.ln();
    // exact extremal function of the unit bidisc with body S
    let lhs = h_of_body(&s).eval(&[-log_r, log_r])?;
    // the naive right side: compose phi_S with the per-coordinate
    // unit-disc extremal values
    let ps = ProductStructure::new(
        s,
        vec![
            ConvexBody::interval(0.0, 1.0)?,
            ConvexBody::interval(0.0, 1.0)?,
        ],
    )?;
    let compacts = vec![
        ProductCompact::new(vec![CompactFactorSpec::unit_disc()])?,
        ProductCompact::new(vec![CompactFactorSpec::unit_disc()])?,
    ];
    let inst = TheoremInstance::new(ps, compacts, None)?;
    let rhs = rhs_eval(&inst, &[Complex64::new(1.0 / r, 0.0), Complex64::new(r, 0.0)])?;
    let gap = rhs - lhs;
    let pass = (lhs - a * log_r).abs() <= 1e-12
        && (rhs - log_r).abs() <= 1e-12
        && (gap - (1.0 - a) * log_r).abs() <= 1e-12;
    Ok(IntroReport {
        a,
        r,
        lhs,
        rhs,
        gap,
        pass,
    })
}

/// Witness of the weighted-case failure: a direction eta with
/// phi_T(eta) + phi_T(-eta) > 0, the weights q = -eta, and evaluation
/// points realizing the per-factor levels eta_j.
#[derive(Debug, Clone, Serialize)]
pub struct WeightedWitness {
    pub eta: Vec<f64>,
    pub weights: Vec<f64>,
    pub eval_points: Vec<Vec<Complex64>>,
    /// phi_T(eta) + phi_T(-eta) = LHS - RHS at the evaluation point
    pub gap: f64,
    pub lhs: f64,
    pub rhs: f64,
}

/// Pick eta in the nonnegative orthant with phi_T(eta) + phi_T(-eta) > 0:
/// absolute value of the diameter direction, falling back to scanning all
/// vertex-difference directions.
fn positive_gap_direction(t_body: &ConvexBody) -> Result<(Vec<f64>, f64)> {
    let check = |eta: &[f64]| -> Result<f64> {
        let neg: Vec<f64> = eta.iter().map(|v| -v).collect();
        Ok(t_body.support(eta)? + t_body.support(&neg)?)
    };
    let (diam, witness) = t_body.diameter_and_witness()?;
    if diam <= TAU_NUM || witness.is_none() {
        return Err(Error::NoWitness(
            "T must contain more than one point".into(),
        ));
    }
    let eta: Vec<f64> = witness.unwrap().iter().map(|v| v.abs()).collect();
    let gap = check(&eta)?;
    if gap > TAU_NUM {
        return Ok((eta, gap));
    }
    let gens = &t_body.generators;
    for i in 0..gens.len() {
        for j in (i + 1)..gens.len() {
            let d: Vec<f64> = gens[i].iter().zip(&gens[j]).map(|(a, b)| a - b).collect();
            let nrm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            if nrm <= TAU_NUM {
                continue;
            }
            let eta: Vec<f64> = d.iter().map(|v| v.abs() / nrm).collect();
            let gap = check(&eta)?;
            if gap > TAU_NUM {
                return Ok((eta, gap));
            }
        }
    }
    Err(Error::NoWitness(
        "no direction with phi_T(eta) + phi_T(-eta) > 0 found".into(),
    ))
}

fn unit_polydisc_compacts(ps: &ProductStructure) -> Result<Vec<ProductCompact>> {
    ps.factors
        .iter()
        .map(|s| ProductCompact::new(vec![CompactFactorSpec::unit_polydisc(s.dim)]))
        .collect()
}

/// Construct the weighted counterexample for the given product structure
/// with unit-polydisc factors: weights q = -eta make the composed side
/// vanish at the constructed point while the true weighted extremal
/// function equals phi_T(eta) + phi_T(-eta) > 0 there.
pub fn weighted_counterexample(ps: &ProductStructure) -> Result<WeightedWitness> {
    let (eta, gap) = positive_gap_direction(&ps.t_body)?;
    let weights: Vec<f64> = eta.iter().map(|v| -v).collect();
    // per-factor evaluation points on the diagonal ray with
    // H_{S_j}(z_j) = eta_j; needs sigma_j = phi_{S_j}(1, ..., 1) > 0
    let mut eval_points = Vec::with_capacity(ps.factors.len());
    for (j, s_j) in ps.factors.iter().enumerate() {
        let sigma = s_j.support(&vec![1.0; s_j.dim])?;
        if sigma <= TAU_NUM {
            return Err(Error::DegenerateBody(format!(
                "factor {j} has sigma = 0; no point realizes a positive level"
            )));
        }
        let rho = (eta[j] / sigma).exp();
        eval_points.push(vec![Complex64::new(rho, 0.0); s_j.dim]);
    }
    let compacts = unit_polydisc_compacts(ps)?;
    let weighted = TheoremInstance::new(ps.clone(), compacts.clone(), Some(weights.clone()))?;
    let unweighted = TheoremInstance::new(ps.clone(), compacts, None)?;

    // pre-check the constant-weight identity V^S_{K,q} = V^S_K + phi_T(q)
    // on a grid before trusting the exact weighted side
    let f_w = lhs_exact(&weighted)?;
    let f_0 = lhs_exact(&unweighted)?;
    let shift = weighted.product_weight()?;
    let n = ps.total_dim();
    let grid = GridSpec::uniform(n, -2.0, 2.0, if n <= 4 { 5 } else { 3 });
    let mut worst: f64 = 0.0;
    grid.for_each(|xi| {
        worst = worst.max((f_w.eval(xi)? - f_0.eval(xi)? - shift).abs());
        Ok(())
    })?;
    if worst > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "constant-weight shift identity violated by {worst:.3e}"
        )));
    }

    // verify the per-factor level condition and the gap at the point
    let z: Vec<Complex64> = eval_points.iter().flatten().cloned().collect();
    for (j, z_j) in eval_points.iter().enumerate() {
        let level = unweighted.factor_value(j, z_j)?;
        if (level - eta[j]).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "level condition failed at factor {j}: {level} vs {}",
                eta[j]
            )));
        }
    }
    let xi: Vec<f64> = z.iter().map(|w| w.norm().ln()).collect();
    let lhs = f_w.eval(&xi)?;
    let rhs = rhs_eval(&weighted, &z)?;
    if ((lhs - rhs) - gap).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "gap mismatch: lhs - rhs = {} vs phi_T(eta) + phi_T(-eta) = {gap}",
            lhs - rhs
        )));
    }
    Ok(WeightedWitness {
        eta,
        weights,
        eval_points,
        gap,
        lhs,
        rhs,
    })
}

/// Witness of sublevel non-convexity of {H_S <= t}: points inside the
/// sublevel set whose average lies outside.
#[derive(Debug, Clone, Serialize)]
pub struct SublevelWitness {
    pub t: f64,
    /// branch-1 threshold; branch 2 works for every t > 0
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t0: Option<f64>,
    pub points: Vec<Vec<Complex64>>,
    pub midpoint: Vec<Complex64>,
    pub point_values: Vec<f64>,
    pub midpoint_value: f64,
    pub branch: u8,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Construct the non-convexity witness for {H_S <= t}. Refuses simplex
/// bodies, for which every sublevel set is convex. With no level given,
/// t = 1.1 t0 (branch 1) or t = 1 (branch 2). A provided level below the
/// branch-1 threshold yields a report with pass = false and a note: the
/// construction not witnessing anything there proves nothing.
pub fn sublevel_nonconvexity(body: &ConvexBody, t: Option<f64>) -> Result<SublevelWitness> {
    let n = body.dim;
    let extents = body.axis_extents()?;
    if body
        .generators
        .iter()
        .all(|g| g.iter().all(|&v| v.abs() <= TAU_MEM))
    {
        return Err(Error::DegenerateBody("body is {0}".into()));
    }
    if !body.contains(&vec![0.0; n])? {
        return Err(Error::InvalidArgument("body must contain 0".into()));
    }
    let h = h_of_body(body);

    if extents.iter().all(|&x| x > TAU_MEM) {
        let report = body.simplex_report()?;
        if report.is_simplex {
            return Err(Error::Unsupported(
                "body is the simplex of its axis extents; sublevel sets of \
                 its logarithmic supporting function are convex"
                    .into(),
            ));
        }
        let s = report.witness.expect("non-simplex body has a witness");
        let x = report.axis_extents;
        let s_sum: f64 = s.iter().sum();
        let ratio: f64 = s.iter().zip(&x).map(|(si, xi)| si / xi).sum();
        let t0 = s_sum * (n as f64).ln() / (ratio - 1.0);
        let t = t.unwrap_or(1.1 * t0);
        // points a^{1/x_j} e_j with a = e^t sit exactly on level t
        let mut points = Vec::with_capacity(n);
        for j in 0..n {
            let mut p = vec![Complex64::new(0.0, 0.0); n];
            p[j] = Complex64::new((t / x[j]).exp(), 0.0);
            points.push(p);
        }
        let midpoint: Vec<Complex64> = (0..n)
            .map(|j| Complex64::new((t / x[j]).exp() / n as f64, 0.0))
            .collect();
        let point_values: Vec<f64> = points
            .iter()
            .map(|p| h.eval_extended(&LogPoint::from_complex(p)))
            .collect::<Result<_>>()?;
        let midpoint_value = h.eval_extended(&LogPoint::from_complex(&midpoint))?;
        for v in &point_values {
            if (v - t).abs() > 1e-9 {
                return Err(Error::InvalidArgument(format!(
                    "extreme point off level: H = {v}, t = {t}"
                )));
            }
        }
        let excess_bound = (ratio - 1.0) * t - s_sum * (n as f64).ln();
        if midpoint_value - t < excess_bound - 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "midpoint excess {} below the witness bound {excess_bound}",
                midpoint_value - t
            )));
        }
        let pass = midpoint_value > t + TAU_NUM;
        let note = (!pass).then(|| {
            format!(
                "level {t} is at or below the threshold t0 = {t0}; the \
                 construction yields no witness there, which proves nothing \
                 about convexity"
            )
        });
        return Ok(SublevelWitness {
            t,
            t0: Some(t0),
            points,
            midpoint,
            point_values,
            midpoint_value,
            branch: 1,
            pass,
            note,
        });
    }

    // branch 2: some axis extent vanishes; move such a coordinate (with a
    // generator still positive there) to the front of the construction
    let j0 = (0..n)
        .find(|&j| {
            extents[j] <= TAU_MEM && body.generators.iter().any(|g| g[j] > TAU_MEM)
        })
        .ok_or_else(|| {
            Error::DegenerateBody(
                "every zero-extent coordinate is identically zero on the \
                 body; drop those coordinates and retry in lower dimension"
                    .into(),
            )
        })?;
    let t = t.unwrap_or(1.0);
    if t <= 0.0 {
        return Err(Error::InvalidArgument("level t must be positive".into()));
    }
    // generator with the largest j0-coordinate drives the lower bound
    // H_S(tau/2, 1/2, ...) >= s_{j0} log|tau| - (sum s_i) log 2
    let s = body
        .generators
        .iter()
        .max_by(|a, b| a[j0].partial_cmp(&b[j0]).unwrap())
        .unwrap()
        .clone();
    let s_sum: f64 = s.iter().sum();
    let tau = ((t + s_sum * 2f64.ln() + 1.0) / s[j0]).exp();
    let mut p1 = vec![Complex64::new(0.0, 0.0); n];
    p1[j0] = Complex64::new(tau, 0.0);
    let p2: Vec<Complex64> = (0..n)
        .map(|j| {
            if j == j0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(1.0, 0.0)
            }
        })
        .collect();
    let midpoint: Vec<Complex64> = p1.iter().zip(&p2).map(|(a, b)| 0.5 * (a + b)).collect();
    let point_values = vec![
        h.eval_extended(&LogPoint::from_complex(&p1))?,
        h.eval_extended(&LogPoint::from_complex(&p2))?,
    ];
    let midpoint_value = h.eval_extended(&LogPoint::from_complex(&midpoint))?;
    for v in &point_values {
        if *v > TAU_NUM {
            return Err(Error::InvalidArgument(format!(
                "endpoint not at level 0: H = {v}"
            )));
        }
    }
    let pass = midpoint_value > t + TAU_NUM;
    Ok(SublevelWitness {
        t,
        t0: None,
        points: vec![p1, p2],
        midpoint,
        point_values,
        midpoint_value,
        branch: 2,
        pass,
        note: None,
    })
}

/// Logical consequence of the weighted gap: the composed function cannot
/// be the weighted extremal function, hence is not maximal outside K.
#[derive(Debug, Clone, Serialize)]
pub struct NonmaximalityReport {
    pub witness: WeightedWitness,
    pub implication: String,
}

/// No Monge-Ampere computation: the report chains the weighted gap to the
/// non-maximality conclusion, carrying the gap as evidence.
pub fn nonmaximality_note(ps: &ProductStructure) -> Result<NonmaximalityReport> {
    let witness = weighted_counterexample(ps)?;
    let implication = format!(
        "the composed function phi_T(V_1 + q_1, ...) sits strictly below \
         the weighted extremal function (gap {:.6} at the witness point); \
         a maximal function dominated by the extremal function and equal \
         to it on K would have to coincide with it, so the composition is \
         not maximal outside K",
        witness.gap
    );
    Ok(NonmaximalityReport {
        witness,
        implication,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn intro_half_e() {
        let r = intro_counterexample(0.5, std::f64::consts::E).unwrap();
        assert!(r.pass);
        assert!((r.lhs - 0.5).abs() < 1e-12);
        assert!((r.rhs - 1.0).abs() < 1e-12);
        assert!((r.gap - 0.5).abs() < 1e-12);
    }

    #[test]
    fn intro_gap_formula_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let a = rng.gen_range(0.05..0.95);
            let r_val = rng.gen_range(1.01..20.0);
            let rep = intro_counterexample(a, r_val).unwrap();
            assert!(rep.pass, "a={a} R={r_val}");
            assert!((rep.gap - (1.0 - a) * r_val.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn intro_boundary_r_one() {
        let r = intro_counterexample(0.5, 1.0).unwrap();
        assert!((r.gap - 0.0).abs() < 1e-12);
    }

    #[test]
    fn intro_rejects_bad_a() {
        assert!(intro_counterexample(1.0, 2.0).is_err());
        assert!(intro_counterexample(1.5, 2.0).is_err());
        assert!(intro_counterexample(0.0, 2.0).is_err());
    }

    fn unit_intervals(l: usize) -> Vec<ConvexBody> {
        (0..l)
            .map(|_| ConvexBody::interval(0.0, 1.0).unwrap())
            .collect()
    }

    #[test]
    fn weighted_unit_square_gap_sqrt2() {
        let ps = ProductStructure::new(ConvexBody::unit_box(2), unit_intervals(2)).unwrap();
        let w = weighted_counterexample(&ps).unwrap();
        assert!((w.gap - 2f64.sqrt()).abs() < 1e-12, "{}", w.gap);
        let inv = 1.0 / 2f64.sqrt();
        assert!((w.eta[0] - inv).abs() < 1e-12 && (w.eta[1] - inv).abs() < 1e-12);
        assert!((w.rhs - 0.0).abs() < 1e-9);
        assert!((w.lhs - w.gap).abs() < 1e-9);
    }

    #[test]
    fn weighted_simplex_t() {
        let ps = ProductStructure::new(ConvexBody::simplex(2), unit_intervals(2)).unwrap();
        let w = weighted_counterexample(&ps).unwrap();
        assert!(w.gap > 0.0);
        // diameter direction (e1 - e2)/sqrt(2), absolute value
        let inv = 1.0 / 2f64.sqrt();
        assert!((w.gap - ps_gap(&ps, &w.eta)).abs() < 1e-12);
        assert!((w.eta[0] - inv).abs() < 1e-12);
    }

    fn ps_gap(ps: &ProductStructure, eta: &[f64]) -> f64 {
        let neg: Vec<f64> = eta.iter().map(|v| -v).collect();
        ps.t_body.support(eta).unwrap() + ps.t_body.support(&neg).unwrap()
    }

    #[test]
    fn weighted_single_point_no_witness() {
        let ps = ProductStructure::new(
            ConvexBody::point(vec![1.0, 1.0]).unwrap(),
            unit_intervals(2),
        )
        .unwrap();
        assert!(matches!(
            weighted_counterexample(&ps),
            Err(Error::NoWitness(_))
        ));
    }

    #[test]
    fn sublevel_unit_square() {
        let w = sublevel_nonconvexity(&ConvexBody::unit_box(2), Some(1.5)).unwrap();
        assert_eq!(w.branch, 1);
        assert!(w.pass);
        let t0 = 2.0 * 2f64.ln();
        assert!((w.t0.unwrap() - t0).abs() < 1e-9);
        for v in &w.point_values {
            assert!((v - 1.5).abs() < 1e-9);
        }
        assert!((w.midpoint_value - (3.0 - 2.0 * 2f64.ln())).abs() < 1e-9);
        assert!(w.midpoint_value > 1.5);
    }

    #[test]
    fn sublevel_below_threshold_reports_no_witness() {
        let t0 = 2.0 * 2f64.ln();
        let w = sublevel_nonconvexity(&ConvexBody::unit_box(2), Some(0.9 * t0)).unwrap();
        assert!(!w.pass);
        assert!(w.note.is_some());
    }

    #[test]
    fn sublevel_refuses_simplex() {
        assert!(matches!(
            sublevel_nonconvexity(&ConvexBody::simplex(2), None),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn sublevel_branch_two() {
        let body = ConvexBody::new(2, vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0]])
            .unwrap();
        let w = sublevel_nonconvexity(&body, Some(2.0)).unwrap();
        assert_eq!(w.branch, 2);
        assert!(w.pass);
        for v in &w.point_values {
            assert!(*v <= 1e-9);
        }
        assert!(w.midpoint_value > 2.0);
    }

    #[test]
    fn sublevel_default_levels() {
        let body = intro_body(0.5).unwrap();
        let w = sublevel_nonconvexity(&body, None).unwrap();
        assert!(w.pass);
        assert!((w.t - 1.1 * w.t0.unwrap()).abs() < 1e-12);
    }

    #[test]
    fn nonmaximality_carries_gap() {
        let ps = ProductStructure::new(ConvexBody::unit_box(2), unit_intervals(2)).unwrap();
        let rep = nonmaximality_note(&ps).unwrap();
        assert!((rep.witness.gap - 2f64.sqrt()).abs() < 1e-12);
        assert!(rep.implication.contains("not maximal"));
    }
}
