//! Deterministic augmented-Lagrangian solver for smooth bound-constrained
//! problems with equality and inequality constraints (`g(x) ≤ 0`).
//!
//! Each outer iteration approximately minimizes the augmented Lagrangian over
//! the variable box with a projected Gauss–Newton / Levenberg–Marquardt
//! method, then updates multipliers and, when feasibility stalls, the
//! penalty. Jacobians are supplied row-sparse by the problem; systems are
//! solved with a banded Cholesky factorization plus a dense border for
//! variables that couple to everything.

mod banded;

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use banded::BorderedBand;

/// Default relative step of central differences.
pub const FD_STEP: f64 = 1e-6;
const MAX_PENALTY: f64 = 1e10;
const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 30;
/// Relative improvement of the best feasible cost below which an outer
/// iteration counts as stalled.
const COST_STALL: f64 = 1e-4;
const STALL_OUTER: usize = 5;
/// Gap between column indices of one Jacobian row beyond which the far
/// columns are treated as dense coupling variables.
const BAND_GAP: usize = 24;
const MAX_BORDER: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    Eq,
    Ineq,
}

/// Evaluation contract between a problem and the solver.
pub trait Problem {
    fn dimension(&self) -> usize;
    fn lower_bounds(&self) -> &[f64];
    fn upper_bounds(&self) -> &[f64];
    fn kinds(&self) -> &[ConstraintKind];
    fn cost(&self, x: &[f64]) -> f64;
    fn constraints(&self, x: &[f64]) -> Vec<f64>;

    fn cost_gradient(&self, x: &[f64]) -> Vec<f64> {
        numerical_gradient(|y| self.cost(y), x, FD_STEP)
    }

    /// Column indices of the nonzeros of each constraint row.
    fn jacobian_structure(&self) -> Vec<Vec<usize>> {
        vec![(0..self.dimension()).collect(); self.kinds().len()]
    }

    /// Jacobian values in the layout of [`Problem::jacobian_structure`].
    fn jacobian(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let n = self.dimension();
        let m = self.kinds().len();
        let mut rows = vec![vec![0.0; n]; m];
        let mut y = x.to_vec();
        for j in 0..n {
            let h = FD_STEP * x[j].abs().max(1.0);
            y[j] = x[j] + h;
            let plus = self.constraints(&y);
            y[j] = x[j] - h;
            let minus = self.constraints(&y);
            y[j] = x[j];
            for r in 0..m {
                rows[r][j] = (plus[r] - minus[r]) / (2.0 * h);
            }
        }
        rows
    }
}

/// Central-difference gradient with steps `h0 · max(1, |x_j|)`.
pub fn numerical_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h0: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    (0..x.len())
        .map(|j| {
            let h = h0 * x[j].abs().max(1.0);
            y[j] = x[j] + h;
            let plus = f(&y);
            y[j] = x[j] - h;
            let minus = f(&y);
            y[j] = x[j];
            (plus - minus) / (2.0 * h)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub feasibility_tolerance: f64,
    pub stationarity_tolerance: f64,
    pub max_outer_iterations: usize,
    pub max_inner_iterations: usize,
    pub initial_penalty: f64,
    pub penalty_growth: f64,
    /// Relative central-difference step `h0`.
    pub fd_step: f64,
    /// Seeds the perturbation applied when a line search stalls.
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            feasibility_tolerance: 1e-4,
            stationarity_tolerance: 1e-3,
            max_outer_iterations: 50,
            max_inner_iterations: 500,
            initial_penalty: 10.0,
            penalty_growth: 5.0,
            fd_step: FD_STEP,
            seed: 0,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.feasibility_tolerance > 0.0 && self.stationarity_tolerance > 0.0) {
            return Err("tolerances must be positive".into());
        }
        if !(self.penalty_growth > 1.0) {
            return Err(format!("penalty growth {} must exceed 1", self.penalty_growth));
        }
        if !(self.initial_penalty > 0.0) {
            return Err(format!("initial penalty {} must be positive", self.initial_penalty));
        }
        if !(self.fd_step > 0.0 && self.fd_step < 1e-2) {
            return Err(format!("fd step {} out of range", self.fd_step));
        }
        if self.max_outer_iterations == 0 || self.max_inner_iterations == 0 {
            return Err("iteration limits must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    /// Feasible and stationary within tolerance.
    Optimal,
    /// Feasible, but stationarity not reached within the iteration budget.
    Feasible,
    /// The penalty reached its ceiling without restoring feasibility.
    Infeasible,
    IterationLimit,
}

impl SolveStatus {
    pub fn is_feasible(self) -> bool {
        matches!(self, Self::Optimal | Self::Feasible)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuterRecord {
    pub cost: f64,
    pub violation: f64,
    pub stationarity: f64,
    pub penalty: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub cost: f64,
    pub max_violation: f64,
    pub stationarity: f64,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub history: Vec<OuterRecord>,
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("warm start has length {got}, problem has {expected} variables")]
pub struct DimensionError {
    pub expected: usize,
    pub got: usize,
}

/// Largest equality residual or positive inequality value.
pub fn max_violation(kinds: &[ConstraintKind], c: &[f64]) -> f64 {
    kinds.iter().zip(c).fold(0.0, |acc, (k, &v)| match k {
        ConstraintKind::Eq => acc.max(v.abs()),
        ConstraintKind::Ineq => acc.max(v),
    })
}

struct Structure {
    rows: Vec<Vec<usize>>,
    /// Position of each variable in the factorization order.
    perm: Vec<usize>,
    n_band: usize,
    bw: usize,
    k: usize,
}

fn analyze(rows: Vec<Vec<usize>>, n: usize) -> Structure {
    let mut border = vec![false; n];
    for row in &rows {
        let mut cols = row.clone();
        cols.sort_unstable();
        let mut clusters: Vec<Vec<usize>> = Vec::new();
        for c in cols {
            match clusters.last_mut() {
                Some(cl) if c - cl[cl.len() - 1] <= BAND_GAP => cl.push(c),
                _ => clusters.push(vec![c]),
            }
        }
        if clusters.len() > 1 {
            let main = (0..clusters.len()).max_by_key(|&i| (clusters[i].len(), usize::MAX - i)).unwrap();
            for (i, cl) in clusters.iter().enumerate() {
                if i != main {
                    for &c in cl {
                        border[c] = true;
                    }
                }
            }
        }
    }
    let k = border.iter().filter(|b| **b).count();
    if k > MAX_BORDER {
        border.iter_mut().for_each(|b| *b = false);
    }
    let mut perm = vec![0; n];
    let mut next = 0;
    for j in 0..n {
        if !border[j] {
            perm[j] = next;
            next += 1;
        }
    }
    let n_band = next;
    for j in 0..n {
        if border[j] {
            perm[j] = next;
            next += 1;
        }
    }
    let mut bw = 0;
    for row in &rows {
        let band: Vec<usize> = row.iter().map(|&c| perm[c]).filter(|&p| p < n_band).collect();
        if let (Some(lo), Some(hi)) = (band.iter().min(), band.iter().max()) {
            bw = bw.max(hi - lo);
        }
    }
    Structure { rows, perm, n_band, bw, k: n - n_band }
}

struct Multipliers {
    y: Vec<f64>,
    rho: f64,
}

struct Lagrangian<'a, P: Problem + ?Sized> {
    p: &'a P,
    kinds: &'a [ConstraintKind],
    lo: &'a [f64],
    hi: &'a [f64],
}

impl<P: Problem + ?Sized> Lagrangian<'_, P> {
    fn value(&self, x: &[f64], c: &[f64], m: &Multipliers) -> f64 {
        let mut v = self.p.cost(x);
        for ((k, &ci), &yi) in self.kinds.iter().zip(c).zip(&m.y) {
            v += match k {
                ConstraintKind::Eq => yi * ci + 0.5 * m.rho * ci * ci,
                ConstraintKind::Ineq => {
                    let s = (yi + m.rho * ci).max(0.0);
                    (s * s - yi * yi) / (2.0 * m.rho)
                }
            };
        }
        v
    }

    /// Effective multiplier of each row at the current point.
    fn weights(&self, c: &[f64], m: &Multipliers) -> Vec<f64> {
        self.kinds
            .iter()
            .zip(c)
            .zip(&m.y)
            .map(|((k, &ci), &yi)| match k {
                ConstraintKind::Eq => yi + m.rho * ci,
                ConstraintKind::Ineq => (yi + m.rho * ci).max(0.0),
            })
            .collect()
    }

    fn gradient(&self, x: &[f64], st: &Structure, jac: &[Vec<f64>], w: &[f64]) -> Vec<f64> {
        let mut g = self.p.cost_gradient(x);
        for ((cols, vals), &wi) in st.rows.iter().zip(jac).zip(w) {
            if wi != 0.0 {
                for (&c, &v) in cols.iter().zip(vals) {
                    g[c] += wi * v;
                }
            }
        }
        g
    }

    fn project(&self, x: &mut [f64]) {
        for ((xi, &l), &h) in x.iter_mut().zip(self.lo).zip(self.hi) {
            *xi = xi.clamp(l, h);
        }
    }

    fn projected_gradient_norm(&self, x: &[f64], g: &[f64]) -> f64 {
        x.iter()
            .zip(g)
            .zip(self.lo.iter().zip(self.hi))
            .map(|((&xi, &gi), (&l, &h))| (xi - (xi - gi).clamp(l, h)).abs())
            .fold(0.0, f64::max)
    }
}

struct InnerResult {
    iterations: usize,
    stalled: bool,
}

fn minimize_inner<P: Problem + ?Sized>(
    lag: &Lagrangian<'_, P>,
    st: &Structure,
    x: &mut Vec<f64>,
    m: &Multipliers,
    tol: f64,
    max_iter: usize,
) -> InnerResult {
    let n = x.len();
    let mut c = lag.p.constraints(x);
    let mut value = lag.value(x, &c, m);
    let mut damping = 1e-6;
    for it in 0..max_iter {
        let jac = lag.p.jacobian(x);
        let w = lag.weights(&c, m);
        let g = lag.gradient(x, st, &jac, &w);
        if lag.projected_gradient_norm(x, &g) <= tol {
            return InnerResult { iterations: it, stalled: false };
        }
        let fixed: Vec<bool> = (0..n)
            .map(|j| (x[j] <= lag.lo[j] && g[j] > 0.0) || (x[j] >= lag.hi[j] && g[j] < 0.0))
            .collect();
        let mut h = BorderedBand::zeros(st.n_band, st.bw, st.k);
        for (r, (cols, vals)) in st.rows.iter().zip(&jac).enumerate() {
            let active = match lag.kinds[r] {
                ConstraintKind::Eq => true,
                ConstraintKind::Ineq => w[r] > 0.0,
            };
            if !active {
                continue;
            }
            for a in 0..cols.len() {
                if fixed[cols[a]] {
                    continue;
                }
                for b in 0..=a {
                    if fixed[cols[b]] {
                        continue;
                    }
                    h.add(st.perm[cols[a]], st.perm[cols[b]], m.rho * vals[a] * vals[b]);
                }
            }
        }
        let scale = (0..n).map(|j| h.diag(j)).fold(1.0, f64::max);
        let mut accepted = false;
        for _ in 0..12 {
            let mut sys = h.clone();
            for j in 0..n {
                sys.add(st.perm[j], st.perm[j], if fixed[j] { 1.0 } else { damping * scale });
            }
            let mut rhs = vec![0.0; n];
            for j in 0..n {
                if !fixed[j] {
                    rhs[st.perm[j]] = -g[j];
                }
            }
            let Some(sol) = sys.solve(&rhs) else {
                damping *= 10.0;
                continue;
            };
            let d: Vec<f64> = (0..n).map(|j| if fixed[j] { 0.0 } else { sol[st.perm[j]] }).collect();
            let mut alpha = 1.0;
            for bt in 0..MAX_BACKTRACKS {
                let mut trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + alpha * di).collect();
                lag.project(&mut trial);
                let decrease: f64 = trial.iter().zip(x.iter()).zip(&g).map(|((t, xi), gi)| gi * (t - xi)).sum();
                if decrease >= 0.0 {
                    break;
                }
                let ct = lag.p.constraints(&trial);
                let vt = lag.value(&trial, &ct, m);
                if vt.is_finite() && vt <= value + ARMIJO * decrease {
                    *x = trial;
                    c = ct;
                    value = vt;
                    accepted = true;
                    damping = if bt == 0 { (damping / 3.0).max(1e-12) } else { damping * 2.0f64.powi(bt as i32) };
                    break;
                }
                alpha *= 0.5;
            }
            if accepted {
                break;
            }
            damping *= 10.0;
        }
        if !accepted {
            return InnerResult { iterations: it + 1, stalled: true };
        }
    }
    InnerResult { iterations: max_iter, stalled: false }
}

/// Solves `p` from `warm_start`. Non-convergence is reported through the
/// status, never as an error.
pub fn solve<P: Problem + ?Sized>(
    p: &P,
    warm_start: &[f64],
    opts: &SolverOptions,
) -> Result<(Vec<f64>, SolveReport), DimensionError> {
    let started = Instant::now();
    let n = p.dimension();
    if warm_start.len() != n {
        return Err(DimensionError { expected: n, got: warm_start.len() });
    }
    let kinds = p.kinds();
    let lag = Lagrangian { p, kinds, lo: p.lower_bounds(), hi: p.upper_bounds() };
    let st = analyze(p.jacobian_structure(), n);
    let mut x = warm_start.to_vec();
    lag.project(&mut x);
    let mut m = Multipliers { y: vec![0.0; kinds.len()], rho: opts.initial_penalty };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut history = Vec::new();
    let mut inner_total = 0;
    let mut inner_tol = (10.0 * opts.stationarity_tolerance).max(1e-1);
    let mut prev_violation = f64::INFINITY;
    let mut status = SolveStatus::IterationLimit;
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut stationarity = f64::INFINITY;
    let mut stall_count = 0;
    for _outer in 0..opts.max_outer_iterations {
        let inner = minimize_inner(&lag, &st, &mut x, &m, inner_tol, opts.max_inner_iterations);
        inner_total += inner.iterations;
        let c = p.constraints(&x);
        let violation = max_violation(kinds, &c);
        for ((yi, k), &ci) in m.y.iter_mut().zip(kinds).zip(&c) {
            *yi = match k {
                ConstraintKind::Eq => *yi + m.rho * ci,
                ConstraintKind::Ineq => (*yi + m.rho * ci).max(0.0),
            };
        }
        // Stationarity of the Lagrangian with the updated multipliers.
        let jac = p.jacobian(&x);
        let mut g = p.cost_gradient(&x);
        for ((cols, vals), &yi) in st.rows.iter().zip(&jac).zip(&m.y) {
            for (&col, &v) in cols.iter().zip(vals) {
                g[col] += yi * v;
            }
        }
        stationarity = lag.projected_gradient_norm(&x, &g);
        let cost = p.cost(&x);
        history.push(OuterRecord { cost, violation, stationarity, penalty: m.rho });
        if violation <= opts.feasibility_tolerance {
            let improved = best.as_ref().map_or(true, |(_, bc)| cost < *bc - COST_STALL * bc.abs().max(1.0));
            stall_count = if improved { 0 } else { stall_count + 1 };
            if best.as_ref().map_or(true, |(_, bc)| cost <= *bc) {
                best = Some((x.clone(), cost));
            }
            if stationarity <= opts.stationarity_tolerance {
                status = SolveStatus::Optimal;
                break;
            }
            if stall_count >= STALL_OUTER {
                break;
            }
        }
        let infeasible = violation > opts.feasibility_tolerance;
        if infeasible && (violation > 0.25 * prev_violation || inner.stalled) {
            if m.rho >= MAX_PENALTY {
                status = SolveStatus::Infeasible;
                break;
            }
            m.rho = (m.rho * opts.penalty_growth).min(MAX_PENALTY);
        }
        if inner.stalled && violation > opts.feasibility_tolerance {
            for (xi, (&l, &h)) in x.iter_mut().zip(lag.lo.iter().zip(lag.hi)) {
                *xi = (*xi + 1e-6 * xi.abs().max(1.0) * rng.gen_range(-1.0..1.0)).clamp(l, h);
            }
        }
        prev_violation = violation;
        inner_tol = (inner_tol * 0.3).max(0.1 * opts.stationarity_tolerance);
    }
    if status != SolveStatus::Optimal {
        if let Some((bx, _)) = best {
            x = bx;
            status = SolveStatus::Feasible;
        }
    }
    let c = p.constraints(&x);
    let report = SolveReport {
        status,
        cost: p.cost(&x),
        max_violation: max_violation(kinds, &c),
        stationarity,
        outer_iterations: history.len(),
        inner_iterations: inner_total,
        history,
        wall_time: started.elapsed().as_secs_f64(),
    };
    Ok((x, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Toy {
        lo: Vec<f64>,
        hi: Vec<f64>,
        kinds: Vec<ConstraintKind>,
        cost: fn(&[f64]) -> f64,
        cons: fn(&[f64]) -> Vec<f64>,
    }

    impl Problem for Toy {
        fn dimension(&self) -> usize {
            self.lo.len()
        }
        fn lower_bounds(&self) -> &[f64] {
            &self.lo
        }
        fn upper_bounds(&self) -> &[f64] {
            &self.hi
        }
        fn kinds(&self) -> &[ConstraintKind] {
            &self.kinds
        }
        fn cost(&self, x: &[f64]) -> f64 {
            (self.cost)(x)
        }
        fn constraints(&self, x: &[f64]) -> Vec<f64> {
            (self.cons)(x)
        }
    }

    #[test]
    fn gradient_of_sum_of_squares() {
        let g = numerical_gradient(|x| x.iter().map(|v| v * v).sum(), &[1.0, 2.0], FD_STEP);
        assert!((g[0] - 2.0).abs() < 1e-6 && (g[1] - 4.0).abs() < 1e-6);
    }

    #[test]
    fn circle_projection() {
        // min x + y  s.t.  x² + y² = 2  →  (-1, -1).
        let p = Toy {
            lo: vec![-5.0; 2],
            hi: vec![5.0; 2],
            kinds: vec![ConstraintKind::Eq],
            cost: |x| x[0] + x[1],
            cons: |x| vec![x[0] * x[0] + x[1] * x[1] - 2.0],
        };
        let (x, r) = solve(&p, &[-1.2, -0.5], &SolverOptions::default()).unwrap();
        assert!(r.status.is_feasible(), "{r:?}");
        assert!((x[0] + 1.0).abs() < 1e-2 && (x[1] + 1.0).abs() < 1e-2, "{x:?}");
    }

    #[test]
    fn inequality_and_bounds() {
        // min (x-3)² + (y-2)²  s.t.  x + y ≤ 2,  y ≥ 0.5.
        let p = Toy {
            lo: vec![-10.0, 0.5],
            hi: vec![10.0, 10.0],
            kinds: vec![ConstraintKind::Ineq],
            cost: |x| (x[0] - 3.0).powi(2) + (x[1] - 2.0).powi(2),
            cons: |x| vec![x[0] + x[1] - 2.0],
        };
        let (x, r) = solve(&p, &[0.0, 1.0], &SolverOptions::default()).unwrap();
        assert!(r.status.is_feasible(), "{r:?}");
        assert!((x[0] - 1.5).abs() < 2e-3 && (x[1] - 0.5).abs() < 2e-3, "{x:?}");
    }

    #[test]
    fn fixed_point_returns_after_one_outer_iteration() {
        let p = Toy {
            lo: vec![1.0, -10.0],
            hi: vec![10.0, 10.0],
            kinds: vec![ConstraintKind::Eq],
            cost: |x| x[0],
            cons: |x| vec![x[1] - 2.0],
        };
        let (x, r) = solve(&p, &[1.0, 2.0], &SolverOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert_eq!(r.outer_iterations, 1);
        assert_eq!(x, vec![1.0, 2.0]);
    }

    #[test]
    fn infeasible_problem_is_reported() {
        let p = Toy {
            lo: vec![-1.0],
            hi: vec![1.0],
            kinds: vec![ConstraintKind::Eq],
            cost: |x| x[0],
            cons: |x| vec![x[0] - 3.0],
        };
        let (_, r) = solve(&p, &[0.0], &SolverOptions::default()).unwrap();
        assert!(!r.status.is_feasible());
    }

    #[test]
    fn dimension_mismatch() {
        let p = Toy {
            lo: vec![0.0; 2],
            hi: vec![1.0; 2],
            kinds: vec![],
            cost: |x| x[0],
            cons: |_| vec![],
        };
        assert_eq!(solve(&p, &[0.0], &SolverOptions::default()).unwrap_err(), DimensionError { expected: 2, got: 1 });
    }

    #[test]
    fn deterministic() {
        let p = Toy {
            lo: vec![-5.0; 2],
            hi: vec![5.0; 2],
            kinds: vec![ConstraintKind::Eq, ConstraintKind::Ineq],
            cost: |x| (x[0] - 1.0).powi(4) + x[1] * x[1],
            cons: |x| vec![x[0] * x[1] - 1.0, -x[0]],
        };
        let (a, ra) = solve(&p, &[2.0, 2.0], &SolverOptions::default()).unwrap();
        let (b, rb) = solve(&p, &[2.0, 2.0], &SolverOptions::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra.history, rb.history);
    }

    #[test]
    fn violation_pressure_is_monotone() {
        let p = Toy {
            lo: vec![-5.0; 3],
            hi: vec![5.0; 3],
            kinds: vec![ConstraintKind::Eq, ConstraintKind::Eq],
            cost: |x| x[0] + 2.0 * x[1] + x[2] * x[2],
            cons: |x| vec![x[0] * x[0] + x[1] * x[1] - 1.0, x[2] - x[0] * x[1]],
        };
        let (_, r) = solve(&p, &[0.3, 0.1, 0.0], &SolverOptions::default()).unwrap();
        for k in 0..r.history.len().saturating_sub(2) {
            let grew = r.history[k + 2].penalty > r.history[k].penalty;
            assert!(r.history[k + 2].violation <= r.history[k].violation || grew);
        }
    }
}
