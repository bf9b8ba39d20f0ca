//! Complex LSQR with restarts on the residual system.

use num_complex::Complex64;

use super::{norm2, LsqSolution, LsqSolver, SolveOptions, SolveStats};
use crate::assembly::SparseSystem;
use crate::error::{Error, Result};

const RESTARTS: usize = 6;

#[derive(Debug, Clone, Copy, Default)]
pub struct Lsqr;

impl LsqSolver for Lsqr {
    fn name(&self) -> &'static str {
        "lsqr"
    }

    fn solve(&self, sys: &SparseSystem, opts: &SolveOptions) -> Result<LsqSolution> {
        opts.check()?;
        let budget = if opts.max_iter == 0 { 40 * sys.n_cols() } else { opts.max_iter };
        let rhs_norm = norm2(&sys.mul_adjoint(sys.rhs()));
        let mut x = vec![Complex64::new(0.0, 0.0); sys.n_cols()];
        let mut r = sys.rhs().to_vec();
        let mut used = 0;
        for _ in 0..RESTARTS {
            let g = norm2(&sys.mul_adjoint(&r));
            if g <= opts.tol * rhs_norm || used >= budget {
                break;
            }
            // aim a little below the target so the restart usually certifies
            let target = 0.1 * opts.tol * rhs_norm;
            let (dx, steps) = lsqr(sys, &r, target, budget - used);
            used += steps;
            for (xi, di) in x.iter_mut().zip(dx) {
                *xi += di;
            }
            r = sys.residual(&x);
            r.iter_mut().for_each(|ri| *ri = -*ri);
        }
        let stats = SolveStats {
            solver: self.name().into(),
            iterations: used,
            condition_estimate: f64::NAN,
            fill: 0,
        };
        LsqSolution::certify(sys, x, opts.tol, stats).map_err(|e| match e {
            Error::SolverFailure { solver, reason, diagnostics } => Error::SolverFailure {
                solver,
                reason: format!("{reason} after {used} iterations"),
                diagnostics,
            },
            other => other,
        })
    }
}

/// Minimizes `|A x - b|` until the estimated `|A^H r|` drops below `target`.
fn lsqr(sys: &SparseSystem, b: &[Complex64], target: f64, max_iter: usize) -> (Vec<Complex64>, usize) {
    let n = sys.n_cols();
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    let mut u = b.to_vec();
    let mut beta = norm2(&u);
    if beta == 0.0 {
        return (x, 0);
    }
    scale(&mut u, 1.0 / beta);
    let mut v = sys.mul_adjoint(&u);
    let mut alpha = norm2(&v);
    if alpha == 0.0 {
        return (x, 0);
    }
    scale(&mut v, 1.0 / alpha);
    let mut w = v.clone();
    let mut phi_bar = beta;
    let mut rho_bar = alpha;

    for it in 1..=max_iter {
        // bidiagonalization step
        let av = sys.mul(&v);
        for (ui, ai) in u.iter_mut().zip(&av) {
            *ui = ai - *ui * alpha;
        }
        beta = norm2(&u);
        if beta > 0.0 {
            scale(&mut u, 1.0 / beta);
            let atu = sys.mul_adjoint(&u);
            for (vi, ai) in v.iter_mut().zip(&atu) {
                *vi = ai - *vi * beta;
            }
            alpha = norm2(&v);
            if alpha > 0.0 {
                scale(&mut v, 1.0 / alpha);
            }
        } else {
            alpha = 0.0;
        }

        // plane rotation
        let rho = rho_bar.hypot(beta);
        let (c, s) = (rho_bar / rho, beta / rho);
        let theta = s * alpha;
        rho_bar = -c * alpha;
        let phi = c * phi_bar;
        phi_bar *= s;

        let (t1, t2) = (phi / rho, -theta / rho);
        for ((xi, wi), vi) in x.iter_mut().zip(w.iter_mut()).zip(&v) {
            *xi += *wi * t1;
            *wi = vi + *wi * t2;
        }

        let normal_estimate = phi_bar * alpha * c.abs();
        if normal_estimate <= target || alpha == 0.0 || beta == 0.0 {
            return (x, it);
        }
    }
    (x, max_iter)
}

fn scale(v: &mut [Complex64], s: f64) {
    v.iter_mut().for_each(|x| *x *= s);
}
