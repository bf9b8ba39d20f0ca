//! Least-squares solvers for the assembled system.
//!
//! Every solver returns a certified minimizer: the normal-equation residual
//! `|A^H (A V - B)|` must not exceed `tol |A^H B|`, otherwise the solve fails
//! with [`Error::SolverFailure`]. Solvers are registered by name in a
//! [`SolverRegistry`] and chosen at run time.

mod lsqr;
mod normal;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::assembly::{RowKind, SparseSystem};
use crate::error::{Error, Result, SolverDiagnostics};

pub use lsqr::Lsqr;
pub use normal::{reverse_cuthill_mckee, NormalCholesky};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_CONDITION_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Relative tolerance of the optimality certificate.
    pub tol: f64,
    /// Iteration budget for iterative solvers; `0` picks one from the size.
    pub max_iter: usize,
    /// `auto` abandons the factorization above this pivot-ratio estimate.
    pub condition_limit: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { tol: DEFAULT_TOL, max_iter: 0, condition_limit: DEFAULT_CONDITION_LIMIT }
    }
}

impl SolveOptions {
    fn check(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::Parameter(format!("tolerance must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveStats {
    pub solver: String,
    /// Refinement sweeps (direct) or LSQR steps (iterative).
    pub iterations: usize,
    pub condition_estimate: f64,
    /// Stored entries of the factor, zero for iterative solvers.
    pub fill: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LsqSolution {
    pub v: Vec<Complex64>,
    pub residual2: f64,
    pub residual_inf: f64,
    /// `|A^H (A V - B)|`.
    pub normal_residual: f64,
    /// `|A^H B|`, the scale of the certificate.
    pub rhs_norm: f64,
    pub stats: SolveStats,
}

impl LsqSolution {
    /// Computes residuals for `v` and checks the optimality certificate.
    pub fn certify(sys: &SparseSystem, v: Vec<Complex64>, tol: f64, stats: SolveStats) -> Result<Self> {
        let sol = Self::evaluate(sys, v, stats);
        if !sol.certified(tol) {
            return Err(Error::SolverFailure {
                solver: sol.stats.solver.clone(),
                reason: format!(
                    "normal residual {:.3e} exceeds {:.1e} x {:.3e}",
                    sol.normal_residual, tol, sol.rhs_norm
                ),
                diagnostics: sol.diagnostics(),
            });
        }
        Ok(sol)
    }

    pub(crate) fn evaluate(sys: &SparseSystem, v: Vec<Complex64>, stats: SolveStats) -> Self {
        let r = sys.residual(&v);
        let residual2 = norm2(&r);
        let residual_inf = r.iter().map(|x| x.norm()).fold(0.0, f64::max);
        let normal_residual = norm2(&sys.mul_adjoint(&r));
        let rhs_norm = norm2(&sys.mul_adjoint(sys.rhs()));
        Self { v, residual2, residual_inf, normal_residual, rhs_norm, stats }
    }

    pub fn certified(&self, tol: f64) -> bool {
        self.v.iter().all(|x| x.is_finite()) && self.normal_residual <= tol * self.rhs_norm
    }

    pub fn diagnostics(&self) -> SolverDiagnostics {
        SolverDiagnostics {
            iterations: self.stats.iterations,
            normal_residual: self.normal_residual,
            rhs_norm: self.rhs_norm,
            condition_estimate: self.stats.condition_estimate,
        }
    }
}

pub(crate) fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// A least-squares strategy.
pub trait LsqSolver: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;
    fn solve(&self, sys: &SparseSystem, opts: &SolveOptions) -> Result<LsqSolution>;
}

/// Normal equations first; LSQR when the factorization looks ill-conditioned
/// or fails to certify.
#[derive(Debug, Clone, Copy, Default)]
pub struct Auto;

impl LsqSolver for Auto {
    fn name(&self) -> &'static str {
        "auto"
    }

    fn solve(&self, sys: &SparseSystem, opts: &SolveOptions) -> Result<LsqSolution> {
        opts.check()?;
        match NormalCholesky.solve(sys, opts) {
            Ok(sol) if sol.stats.condition_estimate <= opts.condition_limit => Ok(sol),
            Ok(_) | Err(Error::SolverFailure { .. }) => Lsqr.solve(sys, opts),
            Err(e) => Err(e),
        }
    }
}

/// Name-indexed set of solvers.
#[derive(Debug, Clone)]
pub struct SolverRegistry {
    solvers: BTreeMap<String, Arc<dyn LsqSolver>>,
}

impl SolverRegistry {
    pub fn empty() -> Self {
        Self { solvers: BTreeMap::new() }
    }

    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register(Arc::new(Auto));
        r.register(Arc::new(NormalCholesky));
        r.register(Arc::new(Lsqr));
        r
    }

    pub fn register(&mut self, solver: Arc<dyn LsqSolver>) {
        self.solvers.insert(solver.name().to_string(), solver);
    }

    pub fn names(&self) -> Vec<&str> {
        self.solvers.keys().map(String::as_str).collect()
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn LsqSolver>> {
        self.solvers.get(name).cloned().ok_or_else(|| Error::Parse {
            input: name.to_string(),
            reason: format!("unknown solver; available: {}", self.names().join(", ")),
        })
    }
}

impl Default for SolverRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

/// Solves with the default strategy.
pub fn solve_lsq(sys: &SparseSystem, tol: f64, max_iter: usize) -> Result<LsqSolution> {
    Auto.solve(sys, &SolveOptions { tol, max_iter, ..SolveOptions::default() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassResidual {
    pub kind: RowKind,
    pub rows: usize,
    pub l2: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub classes: Vec<ClassResidual>,
    pub total_l2: f64,
}

/// Residual of `v` split by row class.
pub fn residual_report(sys: &SparseSystem, v: &[Complex64]) -> Result<ResidualReport> {
    if v.len() != sys.n_cols() {
        return Err(Error::Consistency(format!(
            "solution has {} entries, system has {} unknowns",
            v.len(),
            sys.n_cols()
        )));
    }
    let r = sys.residual(v);
    let mut classes: Vec<ClassResidual> = RowKind::ALL
        .iter()
        .map(|&kind| ClassResidual { kind, rows: 0, l2: 0.0, max: 0.0 })
        .collect();
    for (i, ri) in r.iter().enumerate() {
        let slot = &mut classes[RowKind::ALL.iter().position(|&k| k == sys.row_kind(i)).unwrap()];
        slot.rows += 1;
        slot.l2 += ri.norm_sqr();
        slot.max = slot.max.max(ri.norm());
    }
    for c in &mut classes {
        c.l2 = c.l2.sqrt();
    }
    Ok(ResidualReport { classes, total_l2: norm2(&r) })
}
