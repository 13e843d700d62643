//! Small dense linear programming by two-phase primal simplex.
//!
//! Problems here are tiny (dimension ≤ 8, ≤ a few hundred columns), so a
//! plain dense tableau with Bland's rule is enough. Exactness is not
//! required; callers gate results with tolerances.

/// Pivot / feasibility tolerance for the simplex tableau.
const PIVOT_TOL: f64 = 1e-10;

/// Residual below which a phase-1 optimum counts as feasible.
pub const FEAS_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpError {
    Unbounded,
    IterationLimit,
}

impl std::fmt::Display for LpError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LpError::Unbounded => write!(f, "objective unbounded above"),
            LpError::IterationLimit => write!(f, "simplex iteration limit reached"),
        }
    }
}

impl std::error::Error for LpError {}

#[derive(Debug, Clone)]
pub struct Solution {
    pub x: Vec<f64>,
    pub objective: f64,
}

struct Tableau {
    m: usize,
    n: usize, // structural columns
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    /// Set up `a x = b, x >= 0` with an artificial identity basis.
    /// Columns `n..n+m` are the artificials.
    fn new(a: &[Vec<f64>], b: &[f64]) -> Self {
        let m = a.len();
        let n = if m > 0 { a[0].len() } else { 0 };
        let mut rows = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        for (i, row) in a.iter().enumerate() {
            assert_eq!(row.len(), n, "ragged constraint matrix");
            let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
            let mut r: Vec<f64> = row.iter().map(|v| sign * v).collect();
            r.resize(n + m, 0.0);
            r[n + i] = 1.0;
            rows.push(r);
            rhs.push(sign * b[i]);
        }
        Tableau {
            m,
            n,
            a: rows,
            b: rhs,
            basis: (0..m).map(|i| n + i).collect(),
        }
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.a[row][col];
        for v in self.a[row].iter_mut() {
            *v /= p;
        }
        self.b[row] /= p;
        for i in 0..self.m {
            if i == row {
                continue;
            }
            let f = self.a[i][col];
            if f == 0.0 {
                continue;
            }
            for j in 0..self.a[i].len() {
                self.a[i][j] -= f * self.a[row][j];
            }
            self.b[i] -= f * self.b[row];
        }
        self.basis[row] = col;
    }

    /// Maximize `cost · x` from the current basic feasible point.
    /// `allow` limits which columns may enter. Bland's rule throughout.
    fn optimize(&mut self, cost: &[f64], allow: usize) -> Result<(), LpError> {
        let max_iter = 200 * (self.m + allow + 1);
        for _ in 0..max_iter {
            // reduced costs: c_j - y · a_j with y from the current basis
            let mut entering = None;
            for j in 0..allow {
                if self.basis.contains(&j) {
                    continue;
                }
                let mut rc = cost[j];
                for i in 0..self.m {
                    rc -= cost[self.basis[i]] * self.a[i][j];
                }
                if rc > PIVOT_TOL {
                    entering = Some(j);
                    break;
                }
            }
            let Some(col) = entering else {
                return Ok(());
            };
            let mut leave: Option<usize> = None;
            let mut best = f64::INFINITY;
            for i in 0..self.m {
                if self.a[i][col] > PIVOT_TOL {
                    let ratio = self.b[i] / self.a[i][col];
                    if ratio < best - PIVOT_TOL
                        || (ratio < best + PIVOT_TOL
                            && leave.map_or(true, |l| self.basis[i] < self.basis[l]))
                    {
                        best = ratio;
                        leave = Some(i);
                    }
                }
            }
            let Some(row) = leave else {
                return Err(LpError::Unbounded);
            };
            self.pivot(row, col);
        }
        Err(LpError::IterationLimit)
    }

    fn extract(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        for (i, &bi) in self.basis.iter().enumerate() {
            if bi < self.n {
                x[bi] = self.b[i];
            }
        }
        x
    }
}

/// Phase 1: find a basic feasible point of `a x = b, x >= 0`, or report the
/// best residual. Returns the tableau with artificials driven out where
/// possible.
fn phase1(a: &[Vec<f64>], b: &[f64]) -> Result<(Tableau, f64), LpError> {
    let mut tab = Tableau::new(a, b);
    let total = tab.n + tab.m;
    let mut cost = vec![0.0; total];
    for j in tab.n..total {
        cost[j] = -1.0;
    }
    tab.optimize(&cost, total)?;
    let residual: f64 = tab
        .basis
        .iter()
        .zip(tab.b.iter())
        .filter(|(&bi, _)| bi >= tab.n)
        .map(|(_, &v)| v)
        .sum();
    // drive zero-valued artificials out of the basis when a pivot exists
    for i in 0..tab.m {
        if tab.basis[i] >= tab.n && tab.b[i].abs() <= FEAS_TOL {
            if let Some(j) = (0..tab.n).find(|&j| tab.a[i][j].abs() > 1e-7) {
                tab.pivot(i, j);
            }
        }
    }
    Ok((tab, residual))
}

/// Feasibility of `a x = b, x >= 0` within `FEAS_TOL`; returns a witness.
pub fn feasible(a: &[Vec<f64>], b: &[f64]) -> Result<Option<Vec<f64>>, LpError> {
    let (tab, residual) = phase1(a, b)?;
    if residual > FEAS_TOL {
        return Ok(None);
    }
    Ok(Some(tab.extract()))
}

/// Maximize `c · x` subject to `a x = b, x >= 0`.
/// Returns `None` when the constraints are infeasible.
pub fn maximize(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Result<Option<Solution>, LpError> {
    let (mut tab, residual) = phase1(a, b)?;
    if residual > FEAS_TOL {
        return Ok(None);
    }
    let n = tab.n;
    let mut cost = c.to_vec();
    cost.resize(n + tab.m, 0.0);
    // artificials stay out: only structural columns may enter
    tab.optimize(&cost, n)?;
    let x = tab.extract();
    let objective = x.iter().zip(c.iter()).map(|(xi, ci)| xi * ci).sum();
    Ok(Some(Solution { x, objective }))
}
