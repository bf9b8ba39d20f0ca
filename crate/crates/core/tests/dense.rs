//! Cross-checks of the sparse machinery against dense nalgebra linear algebra.

use nalgebra::{DMatrix, DVector};
use qcmap::assembly::{assemble, SparseSystem};
use qcmap::beltrami::nu_table;
use qcmap::fields::Constant;
use qcmap::lsq::{Lsqr, LsqSolver, NormalCholesky, SolveOptions, SolverRegistry};
use qcmap::mesh::{build_mesh, MeshOrder};
use qcmap::Complex64;

fn system(m: usize, n: usize, mu: f64) -> SparseSystem {
    let mesh = build_mesh(MeshOrder::new(m, n).unwrap()).unwrap();
    let field = Constant::new(Complex64::new(mu, 0.0)).unwrap();
    assemble(&field, &mesh, &nu_table(&field, &mesh).unwrap()).unwrap()
}

fn dense(sys: &SparseSystem) -> DMatrix<Complex64> {
    DMatrix::from_row_slice(sys.n_rows(), sys.n_cols(), &sys.to_dense())
}

fn dense_lsq(sys: &SparseSystem) -> DVector<Complex64> {
    let a = dense(sys);
    let b = DVector::from_column_slice(sys.rhs());
    a.svd(true, true).solve(&b, 1e-14).unwrap()
}

fn rel_diff(x: &[Complex64], y: &[Complex64]) -> f64 {
    let num: f64 = x.iter().zip(y).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
    let den: f64 = y.iter().map(|b| b.norm_sqr()).sum::<f64>().sqrt();
    num / den
}

#[test]
fn full_column_rank_on_small_meshes() {
    for (m, n) in [(1, 4), (2, 8)] {
        let sys = system(m, n, 0.3);
        let sv = dense(&sys).singular_values();
        let smallest = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(smallest > 1e-8, "({m},{n}): {smallest}");
    }
}

#[test]
fn sparse_solvers_match_dense_svd() {
    for (m, n, mu) in [(2, 4, 0.3), (2, 8, 0.5), (3, 6, 0.1)] {
        let sys = system(m, n, mu);
        let reference = dense_lsq(&sys);
        let opts = SolveOptions::default();
        for solver in [&NormalCholesky as &dyn LsqSolver, &Lsqr] {
            let sol = solver.solve(&sys, &opts).unwrap();
            let d = rel_diff(&sol.v, reference.as_slice());
            assert!(d <= 1e-9, "{} on ({m},{n}): {d}", solver.name());
        }
    }
}

#[test]
fn registry_strategies_agree() {
    let sys = system(4, 12, 0.4);
    let reg = SolverRegistry::builtin();
    let base = reg.get("normal-cholesky").unwrap().solve(&sys, &SolveOptions::default()).unwrap();
    for name in reg.names() {
        let sol = reg.get(name).unwrap().solve(&sys, &SolveOptions::default()).unwrap();
        assert!(rel_diff(&sol.v, &base.v) < 1e-8, "{name}");
        assert!(sol.certified(1e-10));
    }
    assert!(reg.get("qr").is_err());
}

#[test]
fn normal_residual_matches_dense_product() {
    let sys = system(2, 6, 0.3);
    let sol = NormalCholesky.solve(&sys, &SolveOptions::default()).unwrap();
    let a = dense(&sys);
    let r = &a * DVector::from_column_slice(&sol.v) - DVector::from_column_slice(sys.rhs());
    let g = a.adjoint() * &r;
    assert!((g.norm() - sol.normal_residual).abs() <= 1e-12 * (1.0 + g.norm()));
    assert!((r.norm() - sol.residual2).abs() <= 1e-12);
}
