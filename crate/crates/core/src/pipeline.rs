//! Mesh, pull back, assemble, solve, exponentiate.

use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::assembly::{assemble_with_targets, boundary_targets, RowScaling, SparseSystem};
use crate::beltrami::{nu_table_with, NuRule};
use crate::error::Result;
use crate::fields::BeltramiField;
use crate::lsq::{Auto, LsqSolution, LsqSolver, SolveOptions};
use crate::mapping::{exponentiate, SolutionMesh};
use crate::mesh::{build_mesh, MeshOrder};

#[derive(Debug, Clone)]
pub struct Solved {
    pub solution: SolutionMesh,
    pub system: SparseSystem,
    pub lsq: LsqSolution,
    /// Wall-clock time of assembly plus solve.
    pub elapsed: Duration,
}

/// Solver strategy and settings for a run.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub solver: Arc<dyn LsqSolver>,
    pub options: SolveOptions,
    pub scaling: RowScaling,
    /// `None` defers to the field's own preference.
    pub nu_rule: Option<NuRule>,
}

impl Default for Pipeline {
    fn default() -> Self {
        Self {
            solver: Arc::new(Auto),
            options: SolveOptions::default(),
            scaling: RowScaling::default(),
            nu_rule: None,
        }
    }
}

impl Pipeline {
    pub fn run(&self, field: &dyn BeltramiField, order: MeshOrder) -> Result<Solved> {
        let mesh = Arc::new(build_mesh(order)?);
        let t0 = Instant::now();
        let nu = nu_table_with(field, &mesh, self.nu_rule.unwrap_or_else(|| field.nu_rule()))?;
        let targets = boundary_targets(field, &mesh)?;
        let system = assemble_with_targets(&mesh, &nu, &targets, self.scaling)?;
        let lsq = self.solver.solve(&system, &self.options)?;
        let elapsed = t0.elapsed();
        let solution = exponentiate(mesh, lsq.v.clone(), (&lsq).into())?;
        Ok(Solved { solution, system, lsq, elapsed })
    }
}

/// Runs the full pipeline with the default solver and row scaling.
pub fn solve(field: &dyn BeltramiField, order: MeshOrder, opts: &SolveOptions) -> Result<Solved> {
    Pipeline { options: *opts, ..Pipeline::default() }.run(field, order)
}
