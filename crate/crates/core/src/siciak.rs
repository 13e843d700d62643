//! Polynomial approximation of the extremal function: lattice classes
//! mS cap N^n, the graded orthonormal basis built by Gram-Schmidt against
//! per-factor quadrature measures, the Bergman-sum evaluation proxy, and
//! Bernstein-Walsh inequality checks.

use std::collections::HashMap;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::body::{build_product_body, ConvexBody, TAU_MEM};
use crate::closed_forms::CompactFactorSpec;
use crate::error::{Error, Result};
use crate::lp;
use crate::product::{lhs_exact, GridSpec, TheoremInstance};

/// Multi-indices of the polynomial class P^S_m: alpha in mS cap N^n.
#[derive(Debug, Clone, Serialize)]
pub struct LatticeClass {
    pub body: ConvexBody,
    pub m: usize,
    pub points: Vec<Vec<usize>>,
    /// sigma_S = phi_S(1, ..., 1); bounds every coordinate of the lattice.
    pub sigma: f64,
}

const LATTICE_BUDGET: usize = 2_000_000;

/// Enumerate mS cap N^n by scanning the integer box [0, ceil(m sigma)]^n.
pub fn enumerate_lattice(body: &ConvexBody, m: usize) -> Result<LatticeClass> {
    if m == 0 {
        return Err(Error::InvalidArgument("degree m must be positive".into()));
    }
    if body.dim > 4 {
        return Err(Error::Resource(format!(
            "lattice enumeration supports dimension <= 4, got {}",
            body.dim
        )));
    }
    let sigma = body.support(&vec![1.0; body.dim])?;
    let cap = (m as f64 * sigma).ceil().max(0.0) as usize;
    let total = (cap + 1).checked_pow(body.dim as u32).unwrap_or(usize::MAX);
    if total > LATTICE_BUDGET {
        return Err(Error::Resource(format!(
            "lattice box of {total} points exceeds the {LATTICE_BUDGET} budget"
        )));
    }
    let scaled = body.scale(m as f64);
    let mut points = Vec::new();
    let mut alpha = vec![0usize; body.dim];
    let mut x = vec![0.0f64; body.dim];
    'outer: loop {
        for i in 0..body.dim {
            x[i] = alpha[i] as f64;
        }
        if scaled.contains(&x)? {
            points.push(alpha.clone());
        }
        // lexicographic order: increment the last coordinate first
        let mut i = body.dim;
        loop {
            if i == 0 {
                break 'outer;
            }
            i -= 1;
            alpha[i] += 1;
            if alpha[i] <= cap {
                break;
            }
            alpha[i] = 0;
        }
    }
    Ok(LatticeClass {
        body: body.clone(),
        m,
        points,
        sigma,
    })
}

/// Grading rho_S(alpha) = inf{t : alpha in tS}, by bisection over the
/// membership oracle.
pub fn grading(body: &ConvexBody, alpha: &[f64]) -> Result<f64> {
    if alpha.iter().all(|&a| a.abs() <= TAU_MEM) {
        return Ok(0.0);
    }
    let mut hi = 1.0f64;
    let mut doublings = 0;
    while !body.scale(hi).contains(alpha)? {
        hi *= 2.0;
        doublings += 1;
        if doublings > 60 {
            return Err(Error::DegenerateBody(
                "point is not in any dilate of the body (zero axis extent)".into(),
            ));
        }
    }
    let mut lo = 0.0f64;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if body.scale(mid).contains(alpha)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Orthonormal polynomial family on one compact factor, graded by the
/// factor body. `coeffs[k]` expresses the k-th element over the monomials
/// `exponents[0..=k]` (triangular by construction).
#[derive(Debug, Clone, Serialize)]
pub struct FactorBasis {
    pub exponents: Vec<Vec<usize>>,
    pub gradings: Vec<f64>,
    pub coeffs: Vec<Vec<Complex64>>,
    pub nodes_per_coordinate: Vec<usize>,
}

/// The product family {p_alpha} of the graded construction.
#[derive(Debug, Clone, Serialize)]
pub struct GradedBasis {
    pub m: usize,
    pub lattice: LatticeClass,
    pub factors: Vec<FactorBasis>,
    /// per lattice point, the per-factor basis index of its projection
    pub factor_indices: Vec<Vec<usize>>,
    /// worst deviation of the quadrature Gram matrix from the identity
    pub gram_error: f64,
    factor_dims: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct ApproxConfig {
    pub m: usize,
    /// per complex coordinate; default 2 * max degree + 1
    pub nodes_override: Option<Vec<usize>>,
    /// Gram-Schmidt pivot floor; a smaller remaining norm means the
    /// quadrature cannot resolve the monomials
    pub pivot_floor: f64,
}

impl ApproxConfig {
    pub fn new(m: usize) -> Self {
        ApproxConfig {
            m,
            nodes_override: None,
            pivot_floor: 1e-10,
        }
    }
}

const TAU_GRAM: f64 = 1e-8;
/// Grading values are rounded to this grid before the lexicographic
/// tie-break, so near-ties order deterministically.
const RHO_ROUND: f64 = 1e-7;

struct Quadrature {
    /// node coordinates per complex coordinate of the factor
    nodes: Vec<Vec<Complex64>>,
    weights: Vec<Vec<f64>>,
}

fn coordinate_nodes(spec: &CompactFactorSpec, counts: &[usize]) -> Quadrature {
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    let circle = |center: Complex64, radius: f64, n: usize| {
        let mut pts = Vec::with_capacity(n);
        for k in 0..n {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            pts.push(center + Complex64::from_polar(radius, theta));
        }
        (pts, vec![1.0 / n as f64; n])
    };
    match spec {
        CompactFactorSpec::Disc { center, radius } => {
            let (p, w) = circle(Complex64::new(center[0], center[1]), *radius, counts[0]);
            nodes.push(p);
            weights.push(w);
        }
        CompactFactorSpec::Polydisc { radii } => {
            for (i, r) in radii.iter().enumerate() {
                let (p, w) = circle(Complex64::new(0.0, 0.0), *r, counts[i]);
                nodes.push(p);
                weights.push(w);
            }
        }
        CompactFactorSpec::Interval { a, b } => {
            let n = counts[0];
            let mid = 0.5 * (a + b);
            let half = 0.5 * (b - a);
            let mut pts = Vec::with_capacity(n);
            for k in 0..n {
                let theta = std::f64::consts::PI * (2 * k + 1) as f64 / (2 * n) as f64;
                pts.push(Complex64::new(mid + half * theta.cos(), 0.0));
            }
            nodes.push(pts);
            weights.push(vec![1.0 / n as f64; n]);
        }
    }
    Quadrature { nodes, weights }
}

fn tensor_nodes(compact: &crate::closed_forms::ProductCompact, counts: &[usize]) -> (Vec<Vec<Complex64>>, Vec<f64>) {
    let mut per_coord: Vec<Vec<Complex64>> = Vec::new();
    let mut per_weight: Vec<Vec<f64>> = Vec::new();
    let mut offset = 0;
    for spec in &compact.factors {
        let d = spec.dim();
        let q = coordinate_nodes(spec, &counts[offset..offset + d]);
        per_coord.extend(q.nodes);
        per_weight.extend(q.weights);
        offset += d;
    }
    let dim = per_coord.len();
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let mut idx = vec![0usize; dim];
    loop {
        let mut z = Vec::with_capacity(dim);
        let mut w = 1.0;
        for i in 0..dim {
            z.push(per_coord[i][idx[i]]);
            w *= per_weight[i][idx[i]];
        }
        points.push(z);
        weights.push(w);
        let mut i = 0;
        loop {
            if i == dim {
                return (points, weights);
            }
            idx[i] += 1;
            if idx[i] < per_coord[i].len() {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}

fn inner(w: &[f64], a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let mut s = Complex64::new(0.0, 0.0);
    for i in 0..a.len() {
        s += w[i] * a[i] * b[i].conj();
    }
    s
}

fn build_factor_basis(
    s_body: &ConvexBody,
    compact: &crate::closed_forms::ProductCompact,
    exponents: Vec<Vec<usize>>,
    cfg: &ApproxConfig,
    node_counts: &[usize],
) -> Result<(FactorBasis, f64)> {
    let _dim = s_body.dim;
    // kappa ordering: rounded grading first, lexicographic tie-break
    let mut graded: Vec<(f64, Vec<usize>)> = Vec::with_capacity(exponents.len());
    for e in exponents {
        let ef: Vec<f64> = e.iter().map(|&v| v as f64).collect();
        let rho = grading(s_body, &ef)?;
        graded.push(((rho / RHO_ROUND).round() * RHO_ROUND, e));
    }
    graded.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then_with(|| a.1.cmp(&b.1)));
    let gradings: Vec<f64> = graded.iter().map(|g| g.0).collect();
    let exponents: Vec<Vec<usize>> = graded.into_iter().map(|g| g.1).collect();

    let (points, weights) = tensor_nodes(compact, node_counts);
    // monomial values at the quadrature nodes
    let mut mono_vals: Vec<Vec<Complex64>> = Vec::with_capacity(exponents.len());
    for e in &exponents {
        let mut col = Vec::with_capacity(points.len());
        for z in &points {
            let mut v = Complex64::new(1.0, 0.0);
            for (i, &p) in e.iter().enumerate() {
                v *= z[i].powu(p as u32);
            }
            col.push(v);
        }
        mono_vals.push(col);
    }
    // modified Gram-Schmidt with a re-orthogonalization pass, carrying
    // coefficient vectors alongside the node values
    let k_total = exponents.len();
    let mut q_vals: Vec<Vec<Complex64>> = Vec::with_capacity(k_total);
    let mut coeffs: Vec<Vec<Complex64>> = Vec::with_capacity(k_total);
    for k in 0..k_total {
        let mut v = mono_vals[k].clone();
        let mut c = vec![Complex64::new(0.0, 0.0); k + 1];
        c[k] = Complex64::new(1.0, 0.0);
        for _pass in 0..2 {
            for i in 0..k {
                let r = inner(&weights, &v, &q_vals[i]);
                for t in 0..v.len() {
                    v[t] -= r * q_vals[i][t];
                }
                for t in 0..=i {
                    c[t] -= r * coeffs[i][t];
                }
            }
        }
        let nrm = inner(&weights, &v, &v).re.max(0.0).sqrt();
        if nrm < cfg.pivot_floor {
            return Err(Error::Quadrature(format!(
                "Gram-Schmidt pivot {nrm:.3e} below floor at element {k}; \
                 increase quadrature nodes (current {node_counts:?})"
            )));
        }
        for t in 0..v.len() {
            v[t] /= nrm;
        }
        for t in 0..=k {
            c[t] /= nrm;
        }
        q_vals.push(v);
        coeffs.push(c);
    }
    // Gram-identity audit
    let mut gram_error: f64 = 0.0;
    for i in 0..k_total {
        for j in i..k_total {
            let g = inner(&weights, &q_vals[i], &q_vals[j]);
            let target = if i == j { 1.0 } else { 0.0 };
            gram_error = gram_error.max((g - target).norm());
        }
    }
    if gram_error > TAU_GRAM {
        return Err(Error::Quadrature(format!(
            "Gram matrix deviates from identity by {gram_error:.3e} (> {TAU_GRAM:.0e})"
        )));
    }
    Ok((
        FactorBasis {
            exponents,
            gradings,
            coeffs,
            nodes_per_coordinate: node_counts.to_vec(),
        },
        gram_error,
    ))
}

/// Verify the decomposition used in the graded construction: every
/// alpha in mS admits x in T with rho_j(alpha_j) <= m x_j for all j.
fn check_t_decomposition(
    inst: &TheoremInstance,
    lattice: &LatticeClass,
    factor_indices: &[Vec<usize>],
    factors: &[FactorBasis],
) -> Result<()> {
    let t_gens = &inst.ps.t_body.generators;
    let l = inst.ps.factors.len();
    let k = t_gens.len();
    let m = lattice.m as f64;
    for (p, idxs) in factor_indices.iter().enumerate() {
        // feasibility: sum lambda_i t_i[j] - s_j = rho_j / m, sum lambda = 1
        let mut a = vec![vec![0.0; k + l]; l + 1];
        let mut b = vec![0.0; l + 1];
        for j in 0..l {
            for (i, g) in t_gens.iter().enumerate() {
                a[j][i] = g[j];
            }
            a[j][k + j] = -1.0;
            b[j] = (factors[j].gradings[idxs[j]] - 1e-6).max(0.0) / m;
        }
        for i in 0..k {
            a[l][i] = 1.0;
        }
        b[l] = 1.0;
        let feas = lp::feasible(&a, &b).map_err(Error::Solver)?;
        if feas.is_none() {
            return Err(Error::InvalidArgument(format!(
                "lattice point {:?} admits no T-decomposition",
                lattice.points[p]
            )));
        }
    }
    Ok(())
}

/// Build the graded product basis of the polynomial class P^S_m for the
/// instance's product body, orthonormal under the per-factor quadrature.
pub fn build_basis(cfg: &ApproxConfig, inst: &TheoremInstance) -> Result<GradedBasis> {
    let product_body = build_product_body(&inst.ps);
    let lattice = enumerate_lattice(&product_body, cfg.m)?;
    let factor_dims = inst.ps.factor_dims();
    let l = factor_dims.len();

    // per-factor exponent sets: projections of the lattice
    let mut per_factor_exps: Vec<Vec<Vec<usize>>> = vec![Vec::new(); l];
    let mut seen: Vec<std::collections::HashSet<Vec<usize>>> =
        vec![std::collections::HashSet::new(); l];
    for alpha in &lattice.points {
        let mut off = 0;
        for j in 0..l {
            let part = alpha[off..off + factor_dims[j]].to_vec();
            if seen[j].insert(part.clone()) {
                per_factor_exps[j].push(part);
            }
            off += factor_dims[j];
        }
    }

    // quadrature node counts: 2 * max degree + 1 per coordinate
    let mut node_counts = vec![1usize; lattice.body.dim];
    for alpha in &lattice.points {
        for (i, &a) in alpha.iter().enumerate() {
            node_counts[i] = node_counts[i].max(2 * a + 1);
        }
    }
    if let Some(over) = &cfg.nodes_override {
        if over.len() != node_counts.len() {
            return Err(Error::DimensionMismatch {
                expected: node_counts.len(),
                got: over.len(),
            });
        }
        node_counts.copy_from_slice(over);
    }

    let mut factors = Vec::with_capacity(l);
    let mut off = 0;
    let mut gram_error: f64 = 0.0;
    for j in 0..l {
        let (fb, ge) = build_factor_basis(
            &inst.ps.factors[j],
            &inst.compacts[j],
            std::mem::take(&mut per_factor_exps[j]),
            cfg,
            &node_counts[off..off + factor_dims[j]],
        )?;
        gram_error = gram_error.max(ge);
        factors.push(fb);
        off += factor_dims[j];
    }

    // map every lattice point to its per-factor basis indices
    let index_maps: Vec<HashMap<&[usize], usize>> = factors
        .iter()
        .map(|f| {
            f.exponents
                .iter()
                .enumerate()
                .map(|(i, e)| (e.as_slice(), i))
                .collect()
        })
        .collect();
    let mut factor_indices = Vec::with_capacity(lattice.points.len());
    for alpha in &lattice.points {
        let mut idxs = Vec::with_capacity(l);
        let mut off = 0;
        for j in 0..l {
            idxs.push(index_maps[j][&alpha[off..off + factor_dims[j]]]);
            off += factor_dims[j];
        }
        factor_indices.push(idxs);
    }

    let basis = GradedBasis {
        m: cfg.m,
        lattice,
        factors,
        factor_indices,
        gram_error,
        factor_dims,
    };
    check_t_decomposition(inst, &basis.lattice, &basis.factor_indices, &basis.factors)?;
    Ok(basis)
}

impl GradedBasis {
    pub fn len(&self) -> usize {
        self.lattice.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lattice.points.is_empty()
    }

    /// log |p_{j,k}(z_j)| and the value itself, evaluated in shifted
    /// log-magnitude form to avoid overflow at large |z|.
    fn factor_log_values(&self, j: usize, z: &[Complex64]) -> Vec<f64> {
        let fb = &self.factors[j];
        let dim = z.len();
        let log_abs: Vec<f64> = z.iter().map(|w| w.norm().ln()).collect();
        let phase: Vec<Complex64> = z
            .iter()
            .map(|w| {
                let r = w.norm();
                if r == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    w / r
                }
            })
            .collect();
        // log-magnitude and phase of each monomial
        let mono: Vec<(f64, Complex64)> = fb
            .exponents
            .iter()
            .map(|e| {
                let mut lm = 0.0f64;
                let mut ph = Complex64::new(1.0, 0.0);
                for i in 0..dim {
                    if e[i] > 0 {
                        if z[i].norm() == 0.0 {
                            return (f64::NEG_INFINITY, Complex64::new(0.0, 0.0));
                        }
                        lm += e[i] as f64 * log_abs[i];
                        ph *= phase[i].powu(e[i] as u32);
                    }
                }
                (lm, ph)
            })
            .collect();
        fb.coeffs
            .iter()
            .map(|c| {
                let shift = c
                    .iter()
                    .enumerate()
                    .filter(|(i, cc)| cc.norm() > 0.0 && mono[*i].0.is_finite())
                    .map(|(i, _)| mono[i].0)
                    .fold(f64::NEG_INFINITY, f64::max);
                if !shift.is_finite() {
                    return f64::NEG_INFINITY;
                }
                let mut sum = Complex64::new(0.0, 0.0);
                for (i, cc) in c.iter().enumerate() {
                    if mono[i].0.is_finite() {
                        sum += cc * mono[i].1 * (mono[i].0 - shift).exp();
                    }
                }
                let n = sum.norm();
                if n == 0.0 {
                    f64::NEG_INFINITY
                } else {
                    shift + n.ln()
                }
            })
            .collect()
    }

    /// The Bergman proxy (1/(2m)) log sum_alpha |p_alpha(z)|^2.
    pub fn eval(&self, z: &[Complex64]) -> Result<f64> {
        let expected: usize = self.factor_dims.iter().sum();
        if z.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: z.len(),
            });
        }
        let mut logs_per_factor = Vec::with_capacity(self.factors.len());
        let mut off = 0;
        for j in 0..self.factors.len() {
            logs_per_factor.push(self.factor_log_values(j, &z[off..off + self.factor_dims[j]]));
            off += self.factor_dims[j];
        }
        let term_logs: Vec<f64> = self
            .factor_indices
            .iter()
            .map(|idxs| {
                idxs.iter()
                    .enumerate()
                    .map(|(j, &k)| logs_per_factor[j][k])
                    .sum()
            })
            .collect();
        let shift = term_logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !shift.is_finite() {
            return Ok(f64::NEG_INFINITY);
        }
        let sum: f64 = term_logs
            .iter()
            .filter(|l| l.is_finite())
            .map(|l| (2.0 * (l - shift)).exp())
            .sum();
        Ok((2.0 * shift + sum.ln()) / (2.0 * self.m as f64))
    }

    /// Evaluate at a positive real point given by log-moduli (sufficient
    /// for toric instances, where the value is phase-invariant).
    pub fn eval_log(&self, xi: &[f64]) -> Result<f64> {
        let z: Vec<Complex64> = xi.iter().map(|&x| Complex64::new(x.exp(), 0.0)).collect();
        self.eval(&z)
    }
}

/// Build the basis and evaluate the Bergman proxy at one point.
pub fn approx_v(cfg: &ApproxConfig, inst: &TheoremInstance, z: &[Complex64]) -> Result<f64> {
    build_basis(cfg, inst)?.eval(z)
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub m: usize,
    pub max_error: f64,
    pub argmax: Vec<f64>,
}

/// Max |approx - exact| over the grid for each degree, against the exact
/// toric reference.
pub fn convergence_sweep(
    inst: &TheoremInstance,
    ms: &[usize],
    grid: &GridSpec,
) -> Result<Vec<SweepRow>> {
    let exact = lhs_exact(inst)?;
    let mut rows = Vec::with_capacity(ms.len());
    for &m in ms {
        let basis = build_basis(&ApproxConfig::new(m), inst)?;
        let mut max_error = f64::NEG_INFINITY;
        let mut argmax = vec![0.0; inst.total_dim()];
        grid.for_each(|xi| {
            let a = basis.eval_log(xi)?;
            let e = exact.eval(xi)?;
            let err = (a - e).abs();
            if err > max_error {
                max_error = err;
                argmax.copy_from_slice(xi);
            }
            Ok(())
        })?;
        rows.push(SweepRow { m, max_error, argmax });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Serialize)]
pub struct BernsteinWalshReport {
    pub trials: usize,
    pub violations: usize,
    pub max_excess: f64,
    /// multiplicative margin applied to the sampled sup-norm, documented
    /// as covering the dense-sampling error of ||f||_K
    pub norm_margin: f64,
    pub slack: f64,
}

/// Sample random polynomials in P^S_m and test the Bernstein-Walsh
/// inequality |f(z)| <= ||f||_K e^{m V(z)} at random external points,
/// using the exact toric V. The sup-norm over K is estimated by dense
/// torus sampling; `norm_margin` covers the sampling error.
pub fn bernstein_walsh_check(
    inst: &TheoremInstance,
    m: usize,
    trials: usize,
    rng: &mut impl Rng,
) -> Result<BernsteinWalshReport> {
    let v_exact = lhs_exact(inst)?;
    let mut radii = Vec::new();
    for k in &inst.compacts {
        radii.extend(k.toric_radii().ok_or_else(|| {
            Error::Unsupported("Bernstein-Walsh check needs toric factors".into())
        })?);
    }
    let lattice = enumerate_lattice(&build_product_body(&inst.ps), m)?;
    let n = lattice.body.dim;
    let n_terms = lattice.points.len();
    // phase grid on the torus of K, dense enough per dimension
    let per_dim = match n {
        1 => 4096,
        2 => 64,
        3 => 16,
        _ => 8,
    };
    let mut torus_pts: Vec<Vec<Complex64>> = Vec::new();
    let mut idx = vec![0usize; n];
    loop {
        let mut z = Vec::with_capacity(n);
        for i in 0..n {
            let theta = 2.0 * std::f64::consts::PI * idx[i] as f64 / per_dim as f64;
            z.push(Complex64::from_polar(radii[i], theta));
        }
        torus_pts.push(z);
        let mut i = 0;
        loop {
            if i == n {
                break;
            }
            idx[i] += 1;
            if idx[i] < per_dim {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
        if idx.iter().all(|&v| v == 0) {
            break;
        }
    }
    // monomial values at the torus samples, shared across trials
    let mono_at = |z: &[Complex64], alpha: &[usize]| -> Complex64 {
        let mut v = Complex64::new(1.0, 0.0);
        for i in 0..z.len() {
            v *= z[i].powu(alpha[i] as u32);
        }
        v
    };
    let mono_torus: Vec<Vec<Complex64>> = torus_pts
        .iter()
        .map(|z| lattice.points.iter().map(|a| mono_at(z, a)).collect())
        .collect();

    let norm_margin = 1e-3;
    let slack = 1e-6;
    let externals_per_trial = 20;
    let mut violations = 0usize;
    let mut max_excess = f64::NEG_INFINITY;
    for _ in 0..trials {
        let coeff: Vec<Complex64> = (0..n_terms)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let mut norm_k = 0.0f64;
        for row in &mono_torus {
            let mut s = Complex64::new(0.0, 0.0);
            for (c, mv) in coeff.iter().zip(row) {
                s += c * mv;
            }
            norm_k = norm_k.max(s.norm());
        }
        let norm_est = norm_k * (1.0 + norm_margin);
        for _ in 0..externals_per_trial {
            let z: Vec<Complex64> = (0..n)
                .map(|_| {
                    Complex64::from_polar(
                        rng.gen_range(-2.0..2.0f64).exp(),
                        rng.gen_range(0.0..2.0 * std::f64::consts::PI),
                    )
                })
                .collect();
            let xi: Vec<f64> = z.iter().map(|w| w.norm().ln()).collect();
            let mut f = Complex64::new(0.0, 0.0);
            for (c, a) in coeff.iter().zip(&lattice.points) {
                f += c * mono_at(&z, a);
            }
            let bound = norm_est * (m as f64 * v_exact.eval(&xi)?).exp() + slack;
            let excess = f.norm() - bound;
            max_excess = max_excess.max(excess);
            if excess > 0.0 {
                violations += 1;
            }
        }
    }
    Ok(BernsteinWalshReport {
        trials,
        violations,
        max_excess,
        norm_margin,
        slack,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::ProductStructure;
    use crate::closed_forms::{v_interval, ProductCompact};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn disc_instance(s_hi: f64) -> TheoremInstance {
        let t = ConvexBody::point(vec![1.0]).unwrap();
        let ps = ProductStructure::new(t, vec![ConvexBody::interval(0.0, s_hi).unwrap()]).unwrap();
        let compacts = vec![ProductCompact::new(vec![CompactFactorSpec::unit_disc()]).unwrap()];
        TheoremInstance::new(ps, compacts, None).unwrap()
    }

    fn intro_body(a: f64) -> ConvexBody {
        ConvexBody::new(
            2,
            vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, a]],
        )
        .unwrap()
    }

    #[test]
    fn lattice_simplex_m2() {
        let l = enumerate_lattice(&ConvexBody::simplex(2), 2).unwrap();
        assert_eq!(l.points.len(), 6);
        assert!(l.points.contains(&vec![1, 1]));
        assert!(!l.points.contains(&vec![2, 1]));
    }

    #[test]
    fn lattice_intro_body_m2() {
        let l = enumerate_lattice(&intro_body(0.5), 2).unwrap();
        assert_eq!(l.points.len(), 7);
        assert!(l.points.contains(&vec![2, 2]));
        assert!(!l.points.contains(&vec![1, 2]));
    }

    #[test]
    fn lattice_origin_only() {
        let l = enumerate_lattice(&ConvexBody::origin(2), 5).unwrap();
        assert_eq!(l.points, vec![vec![0, 0]]);
    }

    #[test]
    fn lattice_bound_holds() {
        let body = intro_body(0.5);
        for m in [1usize, 3, 7] {
            let l = enumerate_lattice(&body, m).unwrap();
            let bound = (m as f64 * l.sigma + 1.0).powi(body.dim as i32);
            assert!((l.points.len() as f64) <= bound + 1e-9);
        }
    }

    #[test]
    fn grading_on_unit_interval_is_value() {
        let s = ConvexBody::interval(0.0, 1.0).unwrap();
        for k in 0..6 {
            let r = grading(&s, &[k as f64]).unwrap();
            // the membership oracle carries tolerance TAU_MEM, so the
            // bisection lands within that of the exact grading
            assert!((r - k as f64).abs() < 2e-8, "{r} vs {k}");
        }
    }

    #[test]
    fn basis_disc_is_scaled_monomials() {
        // circle quadrature leaves monomials orthogonal; the basis must be
        // z^k / r^k with r = 1
        let inst = disc_instance(1.0);
        let basis = build_basis(&ApproxConfig::new(6), &inst).unwrap();
        let fb = &basis.factors[0];
        for (k, coeff) in fb.coeffs.iter().enumerate() {
            for (i, c) in coeff.iter().enumerate() {
                let expect = if i == k { 1.0 } else { 0.0 };
                assert!((c.norm() - expect).abs() < 1e-10, "k={k} i={i} c={c}");
            }
        }
        assert!(basis.gram_error <= 1e-10);
    }

    #[test]
    fn basis_interval_matches_chebyshev() {
        // arcsine quadrature on [-1,1]: Gram-Schmidt over 1, x, x^2, ...
        // must reproduce 1, sqrt(2) T_1, sqrt(2) T_2, ...
        let t = ConvexBody::point(vec![1.0]).unwrap();
        let ps = ProductStructure::new(t, vec![ConvexBody::interval(0.0, 1.0).unwrap()]).unwrap();
        let compacts =
            vec![ProductCompact::new(vec![CompactFactorSpec::Interval { a: -1.0, b: 1.0 }]).unwrap()];
        let inst = TheoremInstance::new(ps, compacts, None).unwrap();
        let basis = build_basis(&ApproxConfig::new(8), &inst).unwrap();
        let fb = &basis.factors[0];
        // Chebyshev coefficients by the recursion T_{k+1} = 2x T_k - T_{k-1}
        let mut cheb: Vec<Vec<f64>> = vec![vec![1.0], vec![0.0, 1.0]];
        for k in 2..=8 {
            let mut next = vec![0.0; k + 1];
            for (i, &v) in cheb[k - 1].iter().enumerate() {
                next[i + 1] += 2.0 * v;
            }
            for (i, &v) in cheb[k - 2].iter().enumerate() {
                next[i] -= v;
            }
            cheb.push(next);
        }
        for k in 0..=8 {
            let scale = if k == 0 { 1.0 } else { 2f64.sqrt() };
            // fix the sign to a positive leading coefficient
            let sign = fb.coeffs[k][k].re.signum();
            for i in 0..=k {
                let got = sign * fb.coeffs[k][i].re;
                assert!(fb.coeffs[k][i].im.abs() < 1e-10);
                assert!(
                    (got - scale * cheb[k][i]).abs() < 1e-6,
                    "k={k} i={i} got={got} want={}",
                    scale * cheb[k][i]
                );
            }
        }
    }

    #[test]
    fn approx_disc_geometric_sum() {
        // S = [0,1], unit disc, |z| = 2: the proxy is the exact geometric
        // sum (1/(2m)) log sum 4^k
        let inst = disc_instance(1.0);
        for m in [4usize, 16] {
            let basis = build_basis(&ApproxConfig::new(m), &inst).unwrap();
            let got = basis.eval(&[c(2.0, 0.0)]).unwrap();
            let sum: f64 = (0..=m).map(|k| 4f64.powi(k as i32)).sum();
            let oracle = sum.ln() / (2.0 * m as f64);
            assert!((got - oracle).abs() < 1e-12, "m={m}: {got} vs {oracle}");
        }
    }

    #[test]
    fn approx_on_torus_stays_small() {
        let inst = disc_instance(1.0);
        let m = 8;
        let basis = build_basis(&ApproxConfig::new(m), &inst).unwrap();
        let n = basis.len() as f64;
        let v = basis.eval(&[Complex64::from_polar(1.0, 0.77)]).unwrap();
        assert!(v <= n.ln() / (2.0 * m as f64) + 1e-12);
        assert!(v >= 0.0);
    }

    #[test]
    fn approx_phase_invariant() {
        let t = ConvexBody::new(2, vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let ps = ProductStructure::new(
            t,
            vec![
                ConvexBody::interval(0.0, 1.0).unwrap(),
                ConvexBody::interval(0.0, 1.0).unwrap(),
            ],
        )
        .unwrap();
        let compacts = vec![
            ProductCompact::new(vec![CompactFactorSpec::unit_disc()]).unwrap(),
            ProductCompact::new(vec![CompactFactorSpec::unit_disc()]).unwrap(),
        ];
        let inst = TheoremInstance::new(ps, compacts, None).unwrap();
        let basis = build_basis(&ApproxConfig::new(6), &inst).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let r1: f64 = rng.gen_range(0.2..3.0);
            let r2: f64 = rng.gen_range(0.2..3.0);
            let base = basis.eval(&[c(r1, 0.0), c(r2, 0.0)]).unwrap();
            let rot = basis
                .eval(&[
                    Complex64::from_polar(r1, rng.gen_range(0.0..6.28)),
                    Complex64::from_polar(r2, rng.gen_range(0.0..6.28)),
                ])
                .unwrap();
            assert!((base - rot).abs() < 1e-12);
        }
    }

    #[test]
    fn approx_never_exceeds_exact_by_log_n() {
        let inst = disc_instance(1.0);
        let exact = lhs_exact(&inst).unwrap();
        let m = 8;
        let basis = build_basis(&ApproxConfig::new(m), &inst).unwrap();
        let bound = (basis.len() as f64).ln() / (2.0 * m as f64) + 1e-9;
        for xi in [-2.0, -0.5, 0.0, 0.7, 2.0] {
            let a = basis.eval_log(&[xi]).unwrap();
            let e = exact.eval(&[xi]).unwrap();
            assert!(a <= e + bound, "xi={xi}: {a} > {e} + {bound}");
        }
    }

    #[test]
    fn approx_bidisc_intro_counterexample() {
        let t = ConvexBody::point(vec![1.0]).unwrap();
        let ps = ProductStructure::new(t, vec![intro_body(0.5)]).unwrap();
        let compacts = vec![ProductCompact::new(vec![CompactFactorSpec::unit_polydisc(2)]).unwrap()];
        let inst = TheoremInstance::new(ps, compacts, None).unwrap();
        let basis = build_basis(&ApproxConfig::new(12), &inst).unwrap();
        let got = basis.eval_log(&[-1.0, 1.0]).unwrap();
        // exact value is a * 1 = 0.5
        assert!((got - 0.5).abs() <= 0.08, "{got}");
    }

    #[test]
    fn approx_interval_against_closed_form() {
        // cross-check the 1-D scaling rule: interval compact, S = [0,2]
        let t = ConvexBody::point(vec![1.0]).unwrap();
        let ps = ProductStructure::new(t, vec![ConvexBody::interval(0.0, 2.0).unwrap()]).unwrap();
        let compacts =
            vec![ProductCompact::new(vec![CompactFactorSpec::Interval { a: -1.0, b: 1.0 }]).unwrap()];
        let inst = TheoremInstance::new(ps, compacts, None).unwrap();
        let basis = build_basis(&ApproxConfig::new(16), &inst).unwrap();
        let z = c(2.0, 0.3);
        let got = basis.eval(&[z]).unwrap();
        let exact = 2.0 * v_interval(-1.0, 1.0, z);
        assert!((got - exact).abs() < 0.05, "{got} vs {exact}");
    }

    #[test]
    fn sweep_disc_errors_decrease() {
        let inst = disc_instance(1.0);
        let grid = GridSpec::uniform(1, 2f64.ln(), 2f64.ln(), 1);
        let rows = convergence_sweep(&inst, &[4, 8, 16, 32], &grid).unwrap();
        let errs: Vec<f64> = rows.iter().map(|r| r.max_error).collect();
        for w in errs.windows(2) {
            assert!(w[1] <= w[0] + 1e-9);
        }
        // geometric-sum oracle per m
        for (row, m) in rows.iter().zip([4usize, 8, 16, 32]) {
            let sum: f64 = (0..=m).map(|k| 4f64.powi(k as i32)).sum();
            let oracle = (sum.ln() / (2.0 * m as f64) - 2f64.ln()).abs();
            assert!((row.max_error - oracle).abs() < 1e-12);
        }
        assert!(errs[3] <= 0.025);
    }

    #[test]
    fn bernstein_walsh_no_violations() {
        let t = ConvexBody::point(vec![1.0]).unwrap();
        let ps = ProductStructure::new(t, vec![ConvexBody::simplex(2)]).unwrap();
        let compacts = vec![ProductCompact::new(vec![CompactFactorSpec::unit_polydisc(2)]).unwrap()];
        let inst = TheoremInstance::new(ps, compacts, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let report = bernstein_walsh_check(&inst, 5, 100, &mut rng).unwrap();
        assert_eq!(report.violations, 0, "max excess {}", report.max_excess);
    }

    #[test]
    fn t_decomposition_rejects_nothing_valid() {
        // simplex T with two factors: basis construction runs the LP audit
        let t = ConvexBody::new(2, vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let ps = ProductStructure::new(
            t,
            vec![
                ConvexBody::interval(0.0, 1.0).unwrap(),
                ConvexBody::interval(0.0, 1.0).unwrap(),
            ],
        )
        .unwrap();
        let compacts = vec![
            ProductCompact::new(vec![CompactFactorSpec::unit_disc()]).unwrap(),
            ProductCompact::new(vec![CompactFactorSpec::unit_disc()]).unwrap(),
        ];
        let inst = TheoremInstance::new(ps, compacts, None).unwrap();
        assert!(build_basis(&ApproxConfig::new(4), &inst).is_ok());
    }
}
