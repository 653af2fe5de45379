//! Active-set solver for convex quadratic programs with a diagonal Hessian,
//! per-variable boxes, and sparse linear equality / range constraints.
//!
//! The scheduling layer builds small dense-ish programs (a few hundred
//! variables at most), so the solver favours robustness and auditable KKT
//! output over raw speed. Range constraints are rewritten with slack
//! variables so the working problem has only equality rows plus boxes; the
//! main loop is a textbook primal active-set method:
//!
//! * a feasible point comes from phase one (artificial variables on any
//!   equality row the clamped start violates),
//! * each iteration minimizes over the currently free variables inside the
//!   null space of the equality rows, stepping until a bound blocks,
//! * at a subspace minimizer, Lagrange multipliers decide whether to release
//!   a bound (lowest index first) or stop.
//!
//! All linear algebra routes through [`crate::dense`], which is square-root
//! free, so the solver works without `std`.

use crate::dense::{dot, ldl_psd, max_abs_slice, null_space, Mat};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

/// Relative rank tolerance handed to the dense kernels.
const RANK_REL_TOL: f64 = 1e-12;
/// Threshold below which a reduced-space step counts as zero.
const STEP_REL_TOL: f64 = 1e-11;
/// Threshold on the null-space component of the reduced gradient above which
/// the iterate follows an unbounded-curvature ray instead of a minimizer.
const RAY_REL_TOL: f64 = 1e-9;
/// Phase-one optimum above this (relative) level certifies infeasibility.
const FEAS_REL_TOL: f64 = 1e-7;

/// One sparse constraint row as `(column, coefficient)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRow {
    pub entries: Vec<(usize, f64)>,
}

impl SparseRow {
    pub fn new(entries: Vec<(usize, f64)>) -> Self {
        Self { entries }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.entries.iter().map(|&(c, a)| a * x[c]).sum()
    }
}

/// Convex program
///
/// ```text
/// minimize    sum_i  0.5 * quadratic_diag[i] * x_i^2 + linear[i] * x_i
/// subject to  equalities[j] . x == eq_rhs[j]
///             ineq_lower[j] <= inequalities[j] . x <= ineq_upper[j]
///             lower[i] <= x_i <= upper[i]
/// ```
///
/// `quadratic_diag` must be non-negative. Bounds may be infinite on the
/// unconstrained side; `lower[i] == upper[i]` pins a variable.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexProgram {
    pub num_vars: usize,
    pub quadratic_diag: Vec<f64>,
    pub linear: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub equalities: Vec<SparseRow>,
    pub eq_rhs: Vec<f64>,
    pub inequalities: Vec<SparseRow>,
    pub ineq_lower: Vec<f64>,
    pub ineq_upper: Vec<f64>,
}

impl ConvexProgram {
    /// A program over `num_vars` free variables with zero objective and no
    /// constraints; callers fill in the pieces they need.
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            quadratic_diag: vec![0.0; num_vars],
            linear: vec![0.0; num_vars],
            lower: vec![f64::NEG_INFINITY; num_vars],
            upper: vec![f64::INFINITY; num_vars],
            equalities: Vec::new(),
            eq_rhs: Vec::new(),
            inequalities: Vec::new(),
            ineq_lower: Vec::new(),
            ineq_upper: Vec::new(),
        }
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        let mut total = 0.0;
        for i in 0..self.num_vars {
            total += 0.5 * self.quadratic_diag[i] * x[i] * x[i] + self.linear[i] * x[i];
        }
        total
    }

    fn validate(&self) -> Result<(), SolverError> {
        let n = self.num_vars;
        if self.quadratic_diag.len() != n
            || self.linear.len() != n
            || self.lower.len() != n
            || self.upper.len() != n
        {
            return Err(SolverError::Validation(String::from(
                "objective or bound vectors do not match num_vars",
            )));
        }
        if self.eq_rhs.len() != self.equalities.len() {
            return Err(SolverError::Validation(String::from(
                "eq_rhs length does not match equality rows",
            )));
        }
        if self.ineq_lower.len() != self.inequalities.len()
            || self.ineq_upper.len() != self.inequalities.len()
        {
            return Err(SolverError::Validation(String::from(
                "inequality bound vectors do not match inequality rows",
            )));
        }
        for i in 0..n {
            let q = self.quadratic_diag[i];
            if !q.is_finite() || q < 0.0 {
                return Err(SolverError::Validation(format!(
                    "quadratic_diag[{i}] must be finite and non-negative"
                )));
            }
            if !self.linear[i].is_finite() {
                return Err(SolverError::Validation(format!(
                    "linear[{i}] must be finite"
                )));
            }
            let (lo, hi) = (self.lower[i], self.upper[i]);
            if lo.is_nan() || hi.is_nan() || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(SolverError::Validation(format!(
                    "bounds for variable {i} are not a valid interval"
                )));
            }
            if lo > hi {
                return Err(SolverError::Validation(format!(
                    "lower bound exceeds upper bound for variable {i}"
                )));
            }
        }
        for (j, rhs) in self.eq_rhs.iter().enumerate() {
            if !rhs.is_finite() {
                return Err(SolverError::Validation(format!(
                    "eq_rhs[{j}] must be finite"
                )));
            }
        }
        for (j, (lo, hi)) in self.ineq_lower.iter().zip(&self.ineq_upper).enumerate() {
            if lo.is_nan() || hi.is_nan() || *lo == f64::INFINITY || *hi == f64::NEG_INFINITY {
                return Err(SolverError::Validation(format!(
                    "inequality {j} bounds are not a valid interval"
                )));
            }
            if lo > hi {
                return Err(SolverError::Validation(format!(
                    "inequality {j} lower bound exceeds its upper bound"
                )));
            }
        }
        for (j, row) in self.equalities.iter().chain(&self.inequalities).enumerate() {
            for &(col, coeff) in &row.entries {
                if col >= n {
                    return Err(SolverError::Validation(format!(
                        "constraint row {j} references variable {col} out of range"
                    )));
                }
                if !coeff.is_finite() {
                    return Err(SolverError::Validation(format!(
                        "constraint row {j} has a non-finite coefficient"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub max_iter: usize,
    /// Relative optimality tolerance on reduced costs.
    pub tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_iter: 10_000,
            tol: 1e-9,
        }
    }
}

/// Terminal state of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    /// The equalities and ranges admit no point inside the boxes. `row`
    /// indexes the first unsatisfiable constraint: equality rows first, then
    /// range rows offset by the number of equalities.
    Infeasible { row: usize },
    IterationLimit,
}

/// Lagrange multipliers, sign convention
///
/// ```text
/// g(x) + A_eq^T equality + A_in^T (ineq_upper - ineq_lower)
///      - bound_lower + bound_upper = 0
/// ```
///
/// with every entry of the four inequality-side vectors non-negative and
/// exactly `0.0` for constraints that are inactive at the solution.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveDuals {
    pub equality: Vec<f64>,
    pub ineq_lower: Vec<f64>,
    pub ineq_upper: Vec<f64>,
    pub bound_lower: Vec<f64>,
    pub bound_upper: Vec<f64>,
}

impl SolveDuals {
    fn zeros(program: &ConvexProgram) -> Self {
        Self {
            equality: vec![0.0; program.equalities.len()],
            ineq_lower: vec![0.0; program.inequalities.len()],
            ineq_upper: vec![0.0; program.inequalities.len()],
            bound_lower: vec![0.0; program.num_vars],
            bound_upper: vec![0.0; program.num_vars],
        }
    }
}

/// Scaled residuals of the KKT system; see [`verify_kkt`] for the exact
/// normalization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResiduals {
    pub stationarity: f64,
    pub primal: f64,
    pub dual: f64,
    pub complementarity: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.stationarity
            .max(self.primal)
            .max(self.dual)
            .max(self.complementarity)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub primal: Vec<f64>,
    pub duals: SolveDuals,
    pub objective: f64,
    pub iterations: usize,
    pub residuals: KktResiduals,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolverError {
    Validation(String),
    /// A feasible descent ray with no blocking bound was found.
    Unbounded,
}

impl fmt::Display for SolverError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolverError::Validation(msg) => write!(f, "invalid program: {msg}"),
            SolverError::Unbounded => f.write_str("objective is unbounded below"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for SolverError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Lower,
    Upper,
}

/// Internal problem after slack substitution: equality rows and boxes only.
struct WorkProblem {
    quad: Vec<f64>,
    lin: Vec<f64>,
    lb: Vec<f64>,
    ub: Vec<f64>,
    rows: Vec<SparseRow>,
    rhs: Vec<f64>,
}

enum LoopExit {
    /// Subspace minimizer with dual-feasible multipliers: `y` per row and
    /// reduced costs `t = g + A^T y` per variable.
    Optimal { y: Vec<f64>, t: Vec<f64> },
    IterationLimit,
    Unbounded,
}

fn gradient(quad: &[f64], lin: &[f64], x: &[f64]) -> Vec<f64> {
    quad.iter()
        .zip(lin)
        .zip(x)
        .map(|((q, c), xi)| q * xi + c)
        .collect()
}

/// Primal active-set loop over a box + equality problem. `x` must satisfy
/// the equality rows and lie inside the boxes on entry, with `fixed`
/// matching the bounds `x` sits on exactly.
fn active_set_loop(
    p: &WorkProblem,
    x: &mut [f64],
    fixed: &mut [Option<Side>],
    budget: &mut usize,
    tol: f64,
) -> LoopExit {
    let n = x.len();
    let m = p.rows.len();
    loop {
        if *budget == 0 {
            return LoopExit::IterationLimit;
        }
        *budget -= 1;

        let g = gradient(&p.quad, &p.lin, x);
        let free: Vec<usize> = (0..n).filter(|&i| fixed[i].is_none()).collect();
        let mut moved = false;
        if !free.is_empty() {
            let mut pos = vec![usize::MAX; n];
            for (k, &i) in free.iter().enumerate() {
                pos[i] = k;
            }
            let mut a_f = Mat::zeros(m, free.len());
            for (r, row) in p.rows.iter().enumerate() {
                for &(col, coeff) in &row.entries {
                    if pos[col] != usize::MAX {
                        a_f.set(r, pos[col], coeff);
                    }
                }
            }
            let z = null_space(&a_f, RANK_REL_TOL);
            if z.cols() > 0 {
                let g_f: Vec<f64> = free.iter().map(|&i| g[i]).collect();
                let rhs_z = z.mul_transpose_vec(&g_f);
                let k = z.cols();
                // Reduced Hessian H = Z^T diag(quad) Z.
                let mut h = Mat::zeros(k, k);
                for a in 0..k {
                    for b in a..k {
                        let mut s = 0.0;
                        for (r, &i) in free.iter().enumerate() {
                            s += z.get(r, a) * p.quad[i] * z.get(r, b);
                        }
                        h.set(a, b, s);
                        h.set(b, a, s);
                    }
                }
                let fact = ldl_psd(&h, RANK_REL_TOL);
                let neg_rhs: Vec<f64> = rhs_z.iter().map(|v| -v).collect();
                let mut v = fact.solve(&neg_rhs);
                let mut target = 1.0_f64;
                if fact.rank() < k {
                    // The reduced gradient may have a component in the null
                    // space of H; descending along it is linear in the step,
                    // so there is no interior minimizer in that direction.
                    let basis = fact.null_basis();
                    let mut best_col = 0usize;
                    let mut best_score = 0.0_f64;
                    for c in 0..basis.cols() {
                        let col: Vec<f64> = (0..k).map(|r| basis.get(r, c)).collect();
                        let score = dot(&rhs_z, &col) / max_abs_slice(&col).max(1.0);
                        if score.abs() > best_score.abs() {
                            best_score = score;
                            best_col = c;
                        }
                    }
                    if best_score.abs() > RAY_REL_TOL * (1.0 + max_abs_slice(&rhs_z)) {
                        let sign = if best_score > 0.0 { -1.0 } else { 1.0 };
                        v = (0..k).map(|r| sign * basis.get(r, best_col)).collect();
                        target = f64::INFINITY;
                    }
                }
                let d = z.mul_vec(&v);
                let d_scale = max_abs_slice(&d);
                if d_scale > STEP_REL_TOL * (1.0 + max_abs_slice(x)) {
                    // Ratio test: largest step inside the boxes, lowest index
                    // breaking ties.
                    let dir_eps = 1e-13 * d_scale.max(1.0);
                    let mut step = target;
                    let mut blocker: Option<(usize, Side)> = None;
                    for (kk, &i) in free.iter().enumerate() {
                        let di = d[kk];
                        let (limit, side) = if di > dir_eps && p.ub[i].is_finite() {
                            ((p.ub[i] - x[i]) / di, Side::Upper)
                        } else if di < -dir_eps && p.lb[i].is_finite() {
                            ((p.lb[i] - x[i]) / di, Side::Lower)
                        } else {
                            continue;
                        };
                        let limit = limit.max(0.0);
                        if limit < step {
                            step = limit;
                            blocker = Some((i, side));
                        }
                    }
                    if step.is_infinite() {
                        return LoopExit::Unbounded;
                    }
                    for (kk, &i) in free.iter().enumerate() {
                        x[i] = (x[i] + step * d[kk]).clamp(p.lb[i], p.ub[i]);
                    }
                    if let Some((i, side)) = blocker {
                        x[i] = match side {
                            Side::Lower => p.lb[i],
                            Side::Upper => p.ub[i],
                        };
                        fixed[i] = Some(side);
                    }
                    moved = true;
                }
            }
        }
        if moved {
            continue;
        }

        // Subspace minimizer: compute multipliers by least squares over the
        // free columns, A_F^T y = -g_F via the normal equations.
        let g = gradient(&p.quad, &p.lin, x);
        let free: Vec<usize> = (0..n).filter(|&i| fixed[i].is_none()).collect();
        let mut m_mat = Mat::zeros(m, m);
        let mut rhs_y = vec![0.0; m];
        {
            let mut pos = vec![usize::MAX; n];
            for (k, &i) in free.iter().enumerate() {
                pos[i] = k;
            }
            let mut a_f = Mat::zeros(m, free.len());
            for (r, row) in p.rows.iter().enumerate() {
                for &(col, coeff) in &row.entries {
                    if pos[col] != usize::MAX {
                        a_f.set(r, pos[col], coeff);
                    }
                }
            }
            for r in 0..m {
                for c in r..m {
                    let s = dot(a_f.row(r), a_f.row(c));
                    m_mat.set(r, c, s);
                    m_mat.set(c, r, s);
                }
                rhs_y[r] = -dot(a_f.row(r), &free.iter().map(|&i| g[i]).collect::<Vec<_>>());
            }
        }
        let y = ldl_psd(&m_mat, RANK_REL_TOL).solve(&rhs_y);
        let mut t = g.clone();
        for (r, row) in p.rows.iter().enumerate() {
            let yr = y[r];
            if yr == 0.0 {
                continue;
            }
            for &(col, coeff) in &row.entries {
                t[col] += coeff * yr;
            }
        }
        let dual_tol = tol * (1.0 + max_abs_slice(&g));
        let mut release = None;
        for i in 0..n {
            if p.lb[i] == p.ub[i] {
                continue;
            }
            match fixed[i] {
                Some(Side::Lower) if t[i] < -dual_tol => {
                    release = Some(i);
                    break;
                }
                Some(Side::Upper) if t[i] > dual_tol => {
                    release = Some(i);
                    break;
                }
                _ => {}
            }
        }
        match release {
            Some(i) => {
                fixed[i] = None;
            }
            None => return LoopExit::Optimal { y, t },
        }
    }
}

/// Solve the program. Returns a report whose `status` distinguishes a
/// certified optimum from infeasibility and iteration exhaustion; hard input
/// errors and unbounded objectives surface as [`SolverError`].
pub fn solve(program: &ConvexProgram, options: &SolveOptions) -> Result<SolveReport, SolverError> {
    program.validate()?;
    let n = program.num_vars;
    let m_eq = program.equalities.len();
    let m_in = program.inequalities.len();
    let n_work = n + m_in;

    // Slack substitution: row . x in [lo, hi] becomes row . x - s = 0 with
    // s boxed by [lo, hi].
    let mut work = WorkProblem {
        quad: program.quadratic_diag.clone(),
        lin: program.linear.clone(),
        lb: program.lower.clone(),
        ub: program.upper.clone(),
        rows: program.equalities.clone(),
        rhs: program.eq_rhs.clone(),
    };
    work.quad.resize(n_work, 0.0);
    work.lin.resize(n_work, 0.0);
    for j in 0..m_in {
        work.lb.push(program.ineq_lower[j]);
        work.ub.push(program.ineq_upper[j]);
        let mut row = program.inequalities[j].clone();
        row.entries.push((n + j, -1.0));
        work.rows.push(row);
        work.rhs.push(0.0);
    }

    // Start from zero clamped into the boxes; slacks start on their row
    // values so the slack-link rows open feasible whenever possible.
    let mut x = vec![0.0; n_work];
    for i in 0..n {
        x[i] = 0.0_f64.clamp(work.lb[i], work.ub[i]);
    }
    for j in 0..m_in {
        let v = program.inequalities[j].value(&x[..n]);
        x[n + j] = v.clamp(work.lb[n + j], work.ub[n + j]);
    }
    let mut fixed: Vec<Option<Side>> = (0..n_work)
        .map(|i| {
            if x[i] == work.lb[i] {
                Some(Side::Lower)
            } else if x[i] == work.ub[i] {
                Some(Side::Upper)
            } else {
                None
            }
        })
        .collect();

    let mut budget = options.max_iter;
    let rhs_scale = 1.0 + max_abs_slice(&work.rhs);

    // Phase one: drive equality residuals to zero with one artificial
    // variable per violated row.
    let residuals: Vec<f64> = work
        .rows
        .iter()
        .zip(&work.rhs)
        .map(|(row, rhs)| rhs - row.value(&x))
        .collect();
    let needs_phase_one = residuals
        .iter()
        .any(|r| r.abs() > 1e-12 * rhs_scale);
    if needs_phase_one {
        let art_rows: Vec<usize> = (0..work.rows.len())
            .filter(|&r| residuals[r].abs() > 1e-12 * rhs_scale)
            .collect();
        let n_art = art_rows.len();
        let mut p1 = WorkProblem {
            quad: work.quad.clone(),
            lin: vec![0.0; n_work + n_art],
            lb: work.lb.clone(),
            ub: work.ub.clone(),
            rows: work.rows.clone(),
            rhs: work.rhs.clone(),
        };
        p1.quad.resize(n_work + n_art, 0.0);
        // Phase one ignores the true objective entirely.
        for q in p1.quad.iter_mut() {
            *q = 0.0;
        }
        let mut x1 = x.clone();
        let mut fixed1 = fixed.clone();
        for (k, &r) in art_rows.iter().enumerate() {
            let col = n_work + k;
            let res = residuals[r];
            let sigma = if res >= 0.0 { 1.0 } else { -1.0 };
            p1.rows[r].entries.push((col, sigma));
            p1.lb.push(0.0);
            p1.ub.push(f64::INFINITY);
            p1.lin[col] = 1.0;
            x1.push(res.abs());
            fixed1.push(if res.abs() == 0.0 {
                Some(Side::Lower)
            } else {
                None
            });
        }
        let exit = active_set_loop(&p1, &mut x1, &mut fixed1, &mut budget, options.tol);
        let iterations_used = options.max_iter - budget;
        match exit {
            LoopExit::IterationLimit => {
                return Ok(incomplete_report(
                    program,
                    &x1[..n],
                    SolveStatus::IterationLimit,
                    iterations_used,
                ));
            }
            LoopExit::Unbounded => return Err(SolverError::Unbounded),
            LoopExit::Optimal { .. } => {}
        }
        let feas_tol = FEAS_REL_TOL * rhs_scale;
        let mut bad_row = None;
        for (k, &r) in art_rows.iter().enumerate() {
            if x1[n_work + k] > feas_tol {
                bad_row = Some(r);
                break;
            }
        }
        if let Some(row) = bad_row {
            return Ok(incomplete_report(
                program,
                &x1[..n],
                SolveStatus::Infeasible { row },
                iterations_used,
            ));
        }
        x.copy_from_slice(&x1[..n_work]);
        fixed.copy_from_slice(&fixed1[..n_work]);
    }

    // Phase two: optimize the true objective from the feasible point.
    let exit = active_set_loop(&work, &mut x, &mut fixed, &mut budget, options.tol);
    let iterations_used = options.max_iter - budget;
    let (y, t) = match exit {
        LoopExit::IterationLimit => {
            return Ok(incomplete_report(
                program,
                &x[..n],
                SolveStatus::IterationLimit,
                iterations_used,
            ));
        }
        LoopExit::Unbounded => return Err(SolverError::Unbounded),
        LoopExit::Optimal { y, t } => (y, t),
    };

    // Duals: equality rows keep y directly; range rows read off the slack
    // reduced cost t_s = -y_link; bound duals come from the reduced costs of
    // variables sitting on a bound. Inactive constraints get exact zeros.
    let mut duals = SolveDuals::zeros(program);
    duals.equality.copy_from_slice(&y[..m_eq]);
    for j in 0..m_in {
        let ts = t[n + j];
        match fixed[n + j] {
            Some(Side::Lower) => duals.ineq_lower[j] = ts.max(0.0),
            Some(Side::Upper) => duals.ineq_upper[j] = (-ts).max(0.0),
            None => {}
        }
        if work.lb[n + j] == work.ub[n + j] {
            // Pinned range: attribute the multiplier to whichever side binds.
            duals.ineq_lower[j] = ts.max(0.0);
            duals.ineq_upper[j] = (-ts).max(0.0);
        }
    }
    for i in 0..n {
        if work.lb[i] == work.ub[i] {
            duals.bound_lower[i] = t[i].max(0.0);
            duals.bound_upper[i] = (-t[i]).max(0.0);
            continue;
        }
        match fixed[i] {
            Some(Side::Lower) => duals.bound_lower[i] = t[i].max(0.0),
            Some(Side::Upper) => duals.bound_upper[i] = (-t[i]).max(0.0),
            None => {}
        }
    }

    let primal = x[..n].to_vec();
    let residuals = verify_kkt(program, &primal, &duals);
    Ok(SolveReport {
        status: SolveStatus::Optimal,
        objective: program.objective_value(&primal),
        primal,
        duals,
        iterations: iterations_used,
        residuals,
    })
}

fn incomplete_report(
    program: &ConvexProgram,
    x: &[f64],
    status: SolveStatus,
    iterations: usize,
) -> SolveReport {
    let primal = x.to_vec();
    let duals = SolveDuals::zeros(program);
    let residuals = verify_kkt(program, &primal, &duals);
    SolveReport {
        status,
        objective: program.objective_value(&primal),
        primal,
        duals,
        iterations,
        residuals,
    }
}

/// Recompute the KKT residuals of a primal/dual pair from scratch.
///
/// Residuals are scaled so a well-solved program reports values near machine
/// precision regardless of the data's magnitude:
///
/// * `stationarity`: infinity norm of `g + A_eq^T y + A_in^T (wu - wl) - zl
///   + zu`, divided by `1 + |g|_inf`.
/// * `primal`: worst constraint or bound violation, divided by
///   `1 + |x|_inf`.
/// * `dual`: most negative multiplier (inequality sides only), same scale as
///   stationarity.
/// * `complementarity`: largest product of a multiplier with its slack,
///   divided by `(1 + |g|_inf) * (1 + |x|_inf)`.
pub fn verify_kkt(program: &ConvexProgram, x: &[f64], duals: &SolveDuals) -> KktResiduals {
    let n = program.num_vars;
    let g = gradient(&program.quadratic_diag, &program.linear, x);
    let g_scale = 1.0 + max_abs_slice(&g);
    let x_scale = 1.0 + max_abs_slice(x);

    let mut station = g.clone();
    for (row, &yj) in program.equalities.iter().zip(&duals.equality) {
        for &(col, coeff) in &row.entries {
            station[col] += coeff * yj;
        }
    }
    for (j, row) in program.inequalities.iter().enumerate() {
        let w = duals.ineq_upper[j] - duals.ineq_lower[j];
        for &(col, coeff) in &row.entries {
            station[col] += coeff * w;
        }
    }
    for i in 0..n {
        station[i] += duals.bound_upper[i] - duals.bound_lower[i];
    }
    let stationarity = max_abs_slice(&station) / g_scale;

    let mut primal = 0.0_f64;
    for (row, rhs) in program.equalities.iter().zip(&program.eq_rhs) {
        primal = primal.max((row.value(x) - rhs).abs());
    }
    for (j, row) in program.inequalities.iter().enumerate() {
        let v = row.value(x);
        primal = primal.max(program.ineq_lower[j] - v).max(v - program.ineq_upper[j]);
    }
    for i in 0..n {
        primal = primal.max(program.lower[i] - x[i]).max(x[i] - program.upper[i]);
    }
    let primal = primal.max(0.0) / x_scale;

    let mut dual = 0.0_f64;
    for v in duals
        .ineq_lower
        .iter()
        .chain(&duals.ineq_upper)
        .chain(&duals.bound_lower)
        .chain(&duals.bound_upper)
    {
        dual = dual.max(-v);
    }
    let dual = dual / g_scale;

    let mut comp = 0.0_f64;
    for i in 0..n {
        if program.lower[i].is_finite() {
            comp = comp.max((duals.bound_lower[i] * (x[i] - program.lower[i])).abs());
        }
        if program.upper[i].is_finite() {
            comp = comp.max((duals.bound_upper[i] * (program.upper[i] - x[i])).abs());
        }
    }
    for (j, row) in program.inequalities.iter().enumerate() {
        let v = row.value(x);
        if program.ineq_lower[j].is_finite() {
            comp = comp.max((duals.ineq_lower[j] * (v - program.ineq_lower[j])).abs());
        }
        if program.ineq_upper[j].is_finite() {
            comp = comp.max((duals.ineq_upper[j] * (program.ineq_upper[j] - v)).abs());
        }
    }
    let complementarity = comp / (g_scale * x_scale);

    KktResiduals {
        stationarity,
        primal,
        dual,
        complementarity,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn options() -> SolveOptions {
        SolveOptions::default()
    }

    #[test]
    fn clamps_unconstrained_minimum_to_box() {
        // minimize (x - 3)^2 over [0, 2].
        let mut p = ConvexProgram::new(1);
        p.quadratic_diag[0] = 2.0;
        p.linear[0] = -6.0;
        p.lower[0] = 0.0;
        p.upper[0] = 2.0;
        let report = solve(&p, &options()).unwrap();
        assert_eq!(report.status, SolveStatus::Optimal);
        assert_eq!(report.primal[0], 2.0);
        assert!((report.duals.bound_upper[0] - 2.0).abs() < 1e-9);
        assert_eq!(report.duals.bound_lower[0], 0.0);
        assert!(report.residuals.max() < 1e-9);
    }

    #[test]
    fn equality_constrained_quadratic() {
        // minimize x^2 + y^2 subject to x + y = 2 -> (1, 1).
        let mut p = ConvexProgram::new(2);
        p.quadratic_diag = vec![2.0, 2.0];
        p.equalities = vec![SparseRow::new(vec![(0, 1.0), (1, 1.0)])];
        p.eq_rhs = vec![2.0];
        let report = solve(&p, &options()).unwrap();
        assert_eq!(report.status, SolveStatus::Optimal);
        assert!((report.primal[0] - 1.0).abs() < 1e-9);
        assert!((report.primal[1] - 1.0).abs() < 1e-9);
        assert!((report.duals.equality[0] + 2.0).abs() < 1e-9);
        assert!((report.objective - 2.0).abs() < 1e-9);
        assert!(report.residuals.max() < 1e-9);
    }

    #[test]
    fn pure_linear_program_hits_vertex() {
        // minimize -x - 2y over the unit box.
        let mut p = ConvexProgram::new(2);
        p.linear = vec![-1.0, -2.0];
        p.lower = vec![0.0, 0.0];
        p.upper = vec![1.0, 1.0];
        let report = solve(&p, &options()).unwrap();
        assert_eq!(report.status, SolveStatus::Optimal);
        assert_eq!(report.primal, vec![1.0, 1.0]);
        assert!((report.duals.bound_upper[0] - 1.0).abs() < 1e-9);
        assert!((report.duals.bound_upper[1] - 2.0).abs() < 1e-9);
        assert!(report.residuals.max() < 1e-9);
    }

    #[test]
    fn linear_program_with_equality() {
        // minimize -x subject to x + y = 1, x, y >= 0 -> (1, 0).
        let mut p = ConvexProgram::new(2);
        p.linear = vec![-1.0, 0.0];
        p.lower = vec![0.0, 0.0];
        p.equalities = vec![SparseRow::new(vec![(0, 1.0), (1, 1.0)])];
        p.eq_rhs = vec![1.0];
        let report = solve(&p, &options()).unwrap();
        assert_eq!(report.status, SolveStatus::Optimal);
        assert!((report.primal[0] - 1.0).abs() < 1e-9);
        assert!(report.primal[1].abs() < 1e-9);
        assert!(report.residuals.max() < 1e-9);
    }

    #[test]
    fn detects_unbounded_objective() {
        let mut p = ConvexProgram::new(1);
        p.linear[0] = -1.0;
        p.lower[0] = 0.0;
        assert!(matches!(solve(&p, &options()), Err(SolverError::Unbounded)));
    }

    #[test]
    fn detects_infeasible_equality() {
        // x + y = 5 cannot hold inside the unit box.
        let mut p = ConvexProgram::new(2);
        p.lower = vec![0.0, 0.0];
        p.upper = vec![1.0, 1.0];
        p.equalities = vec![SparseRow::new(vec![(0, 1.0), (1, 1.0)])];
        p.eq_rhs = vec![5.0];
        let report = solve(&p, &options()).unwrap();
        assert_eq!(report.status, SolveStatus::Infeasible { row: 0 });
    }

    #[test]
    fn range_constraint_binds() {
        // minimize (x - 2)^2 subject to x <= 1 written as a range row.
        let mut p = ConvexProgram::new(1);
        p.quadratic_diag[0] = 2.0;
        p.linear[0] = -4.0;
        p.inequalities = vec![SparseRow::new(vec![(0, 1.0)])];
        p.ineq_lower = vec![f64::NEG_INFINITY];
        p.ineq_upper = vec![1.0];
        let report = solve(&p, &options()).unwrap();
        assert_eq!(report.status, SolveStatus::Optimal);
        assert!((report.primal[0] - 1.0).abs() < 1e-9);
        assert!((report.duals.ineq_upper[0] - 2.0).abs() < 1e-9);
        assert_eq!(report.duals.ineq_lower[0], 0.0);
        assert!(report.residuals.max() < 1e-9);
    }

    #[test]
    fn inactive_duals_are_exact_zeros() {
        let mut p = ConvexProgram::new(2);
        p.quadratic_diag = vec![2.0, 2.0];
        p.linear = vec![-2.0, -2.0];
        p.lower = vec![0.0, 0.0];
        p.upper = vec![10.0, 10.0];
        let report = solve(&p, &options()).unwrap();
        // Minimum at (1, 1), strictly inside: every dual must be exactly 0.
        assert_eq!(report.duals.bound_lower, vec![0.0, 0.0]);
        assert_eq!(report.duals.bound_upper, vec![0.0, 0.0]);
    }

    #[test]
    fn pinned_variable_is_respected() {
        let mut p = ConvexProgram::new(2);
        p.quadratic_diag = vec![2.0, 2.0];
        p.lower = vec![3.0, -1.0];
        p.upper = vec![3.0, 1.0];
        let report = solve(&p, &options()).unwrap();
        assert_eq!(report.primal[0], 3.0);
        assert!(report.primal[1].abs() < 1e-12);
        assert!(report.residuals.max() < 1e-9);
    }

    #[test]
    fn iteration_limit_is_reported() {
        let mut p = ConvexProgram::new(2);
        p.linear = vec![-1.0, -2.0];
        p.lower = vec![0.0, 0.0];
        p.upper = vec![1.0, 1.0];
        p.equalities = vec![SparseRow::new(vec![(0, 1.0), (1, 1.0)])];
        p.eq_rhs = vec![1.5];
        let opts = SolveOptions {
            max_iter: 1,
            tol: 1e-8,
        };
        let report = solve(&p, &opts).unwrap();
        assert_eq!(report.status, SolveStatus::IterationLimit);
    }

    /// One-dimensional oracle: minimize a quadratic segment exactly.
    fn segment_minimum(q0: f64, q1: f64, c0: f64, c1: f64, lo: f64, hi: f64, fix: (f64, f64)) -> f64 {
        // x = fix.0 + t, y = fix.1 - t; objective in t on [lo, hi].
        let (x0, y0) = fix;
        // f(t) = 0.5 q0 (x0+t)^2 + c0 (x0+t) + 0.5 q1 (y0-t)^2 + c1 (y0-t)
        let a = 0.5 * (q0 + q1);
        let b = q0 * x0 - q1 * y0 + c0 - c1;
        let eval = |t: f64| {
            0.5 * q0 * (x0 + t) * (x0 + t)
                + c0 * (x0 + t)
                + 0.5 * q1 * (y0 - t) * (y0 - t)
                + c1 * (y0 - t)
        };
        let mut best = eval(lo).min(eval(hi));
        if a > 0.0 {
            let t_star = -b / (2.0 * a);
            if t_star > lo && t_star < hi {
                best = best.min(eval(t_star));
            }
        }
        best
    }

    #[test]
    fn random_two_variable_programs_match_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for trial in 0..300 {
            let q0 = if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.1..4.0) };
            let q1 = if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.1..4.0) };
            let c0 = rng.gen_range(-5.0..5.0);
            let c1 = rng.gen_range(-5.0..5.0);
            let l0 = rng.gen_range(-3.0..0.0);
            let u0 = l0 + rng.gen_range(0.5..4.0);
            let l1 = rng.gen_range(-3.0..0.0);
            let u1 = l1 + rng.gen_range(0.5..4.0);
            let s = rng.gen_range((l0 + l1)..(u0 + u1));

            let mut p = ConvexProgram::new(2);
            p.quadratic_diag = vec![q0, q1];
            p.linear = vec![c0, c1];
            p.lower = vec![l0, l1];
            p.upper = vec![u0, u1];
            p.equalities = vec![SparseRow::new(vec![(0, 1.0), (1, 1.0)])];
            p.eq_rhs = vec![s];

            let report = solve(&p, &options()).unwrap();
            assert_eq!(report.status, SolveStatus::Optimal, "trial {trial}");
            assert!(
                report.residuals.max() < 1e-8,
                "trial {trial}: kkt residuals {:?}",
                report.residuals
            );
            // Oracle: on the segment x + y = s inside the box, parameterize
            // x = x_base + t with t in [t_lo, t_hi].
            let x_base = (s - u1).max(l0);
            let x_hi = (s - l1).min(u0);
            let t_hi = x_hi - x_base;
            let oracle = segment_minimum(q0, q1, c0, c1, 0.0, t_hi, (x_base, s - x_base));
            assert!(
                report.objective <= oracle + 1e-7 * (1.0 + oracle.abs()),
                "trial {trial}: objective {} vs oracle {}",
                report.objective,
                oracle
            );
            assert!(
                report.objective >= oracle - 1e-7 * (1.0 + oracle.abs()),
                "trial {trial}: objective {} better than oracle {} (oracle bug?)",
                report.objective,
                oracle
            );
        }
    }

    #[test]
    fn random_separable_programs_satisfy_kkt() {
        // Larger random programs: diagonal quadratic, one balance row, a
        // range row, boxes. Checks self-consistency (KKT) rather than a
        // closed form.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..100 {
            let n = rng.gen_range(3..10);
            let mut p = ConvexProgram::new(n);
            for i in 0..n {
                p.quadratic_diag[i] = if rng.gen_bool(0.4) {
                    0.0
                } else {
                    rng.gen_range(0.05..3.0)
                };
                p.linear[i] = rng.gen_range(-4.0..4.0);
                p.lower[i] = rng.gen_range(-2.0..0.0);
                p.upper[i] = p.lower[i] + rng.gen_range(0.5..3.0);
            }
            let lo_sum: f64 = p.lower.iter().sum();
            let hi_sum: f64 = p.upper.iter().sum();
            let row: Vec<(usize, f64)> = (0..n).map(|i| (i, 1.0)).collect();
            p.equalities = vec![SparseRow::new(row)];
            p.eq_rhs = vec![rng.gen_range(lo_sum..hi_sum)];
            let pair = SparseRow::new(vec![(0, 1.0), (1, -1.0)]);
            p.inequalities = vec![pair];
            p.ineq_lower = vec![-1.5];
            p.ineq_upper = vec![1.5];
            let report = solve(&p, &options()).unwrap();
            assert_eq!(report.status, SolveStatus::Optimal, "trial {trial}");
            assert!(
                report.residuals.max() < 1e-8,
                "trial {trial}: residuals {:?}",
                report.residuals
            );
        }
    }
}
