//! The overdetermined complex system `A V = B`.
//!
//! Row order is fixed: left-half triangles, right-half triangles (both in
//! [`LogMesh::triangles`] order), left boundary differences, right boundary
//! differences, then the normalization `W_{00} = 0`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::beltrami::{l_mu, l_mu_unchecked, NuTable};
use crate::error::{Error, Result};
use crate::fields::BeltramiField;
use crate::mesh::LogMesh;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowKind {
    TriangleLeft,
    TriangleRight,
    BoundaryLeft,
    BoundaryRight,
    Normalization,
}

impl RowKind {
    pub const ALL: [RowKind; 5] = [
        RowKind::TriangleLeft,
        RowKind::TriangleRight,
        RowKind::BoundaryLeft,
        RowKind::BoundaryRight,
        RowKind::Normalization,
    ];
}

/// Sparse complex matrix in compressed-row form with its right-hand side.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSystem {
    n_cols: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
    rhs: Vec<Complex64>,
    kinds: Vec<RowKind>,
}

/// Incremental row-by-row construction of a [`SparseSystem`].
#[derive(Debug, Clone)]
pub struct SystemBuilder {
    sys: SparseSystem,
}

impl SystemBuilder {
    pub fn new(n_cols: usize) -> Self {
        Self {
            sys: SparseSystem {
                n_cols,
                row_ptr: vec![0],
                cols: Vec::new(),
                vals: Vec::new(),
                rhs: Vec::new(),
                kinds: Vec::new(),
            },
        }
    }

    /// Appends a row; repeated columns are summed.
    pub fn push_row(
        &mut self,
        kind: RowKind,
        entries: &[(usize, Complex64)],
        rhs: Complex64,
    ) -> Result<()> {
        let start = self.sys.cols.len();
        for &(col, val) in entries {
            if col >= self.sys.n_cols {
                return Err(Error::Consistency(format!(
                    "column {col} out of range for {} unknowns",
                    self.sys.n_cols
                )));
            }
            match self.sys.cols[start..].iter().position(|&c| c == col) {
                Some(pos) => self.sys.vals[start + pos] += val,
                None => {
                    self.sys.cols.push(col);
                    self.sys.vals.push(val);
                }
            }
        }
        self.sys.row_ptr.push(self.sys.cols.len());
        self.sys.rhs.push(rhs);
        self.sys.kinds.push(kind);
        Ok(())
    }

    pub fn finish(self) -> SparseSystem {
        self.sys
    }
}

impl SparseSystem {
    pub fn n_rows(&self) -> usize {
        self.rhs.len()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn rhs(&self) -> &[Complex64] {
        &self.rhs
    }

    pub fn row_kind(&self, row: usize) -> RowKind {
        self.kinds[row]
    }

    pub fn row_kinds(&self) -> &[RowKind] {
        &self.kinds
    }

    /// Columns and values of one row.
    pub fn row(&self, row: usize) -> (&[usize], &[Complex64]) {
        let r = self.row_ptr[row]..self.row_ptr[row + 1];
        (&self.cols[r.clone()], &self.vals[r])
    }

    /// All stored entries as `(row, col, value)`.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.n_rows()).flat_map(move |i| {
            let (c, v) = self.row(i);
            c.iter().zip(v).map(move |(&c, &v)| (i, c, v))
        })
    }

    /// `A v`.
    pub fn mul(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.n_cols, "vector length");
        (0..self.n_rows())
            .map(|i| {
                let (c, a) = self.row(i);
                c.iter().zip(a).map(|(&c, &a)| a * v[c]).sum()
            })
            .collect()
    }

    /// `A^H r`.
    pub fn mul_adjoint(&self, r: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(r.len(), self.n_rows(), "vector length");
        let mut out = vec![ZERO; self.n_cols];
        for (i, ri) in r.iter().enumerate() {
            let (c, a) = self.row(i);
            for (&c, &a) in c.iter().zip(a) {
                out[c] += a.conj() * ri;
            }
        }
        out
    }

    /// `A v - B`.
    pub fn residual(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut r = self.mul(v);
        for (ri, bi) in r.iter_mut().zip(&self.rhs) {
            *ri -= bi;
        }
        r
    }

    pub fn row_counts(&self) -> Vec<usize> {
        self.row_ptr.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn column_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_cols];
        for &c in &self.cols {
            counts[c] += 1;
        }
        counts
    }

    /// Row-major dense copy, for small-instance checks.
    pub fn to_dense(&self) -> Vec<Complex64> {
        let mut d = vec![ZERO; self.n_rows() * self.n_cols];
        for (i, c, v) in self.triplets() {
            d[i * self.n_cols + c] += v;
        }
        d
    }
}

/// Coefficients of the equation `a W_a + b W_b + c W_c = 0` that the images
/// of a triangle's corners satisfy under any `nu`-conformal affine map.
///
/// The coefficient of each corner is `L_nu` of the directed opposite side.
pub fn triangle_coeffs(nu: Complex64, z: [Complex64; 3]) -> Result<[Complex64; 3]> {
    let [za, zb, zc] = z;
    if za == zb || zb == zc || zc == za {
        return Err(Error::Degenerate(format!("triangle corners {za}, {zb}, {zc} coincide")));
    }
    Ok([l_mu(nu, zb - zc)?, l_mu_unchecked(nu, zc - za), l_mu_unchecked(nu, za - zb)])
}

/// Weighting of the triangle rows in the least-squares problem.
///
/// Both choices describe the same equations; only the relative weights of
/// the rows change, and with them the least-squares solution.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowScaling {
    /// Rows multiplied by `1 + nu`, i.e. coefficients `d + nu conj(d)`.
    /// Every row of an equilateral triangle then has the same norm
    /// `s sqrt(3 (1 + |nu|^2))` whatever the phase of `nu`.
    #[default]
    Equilibrated,
    /// Coefficients exactly `L_nu(d)`; row norms vary like `1/|1 + nu|`.
    Literal,
}

impl RowScaling {
    pub fn name(&self) -> &'static str {
        match self {
            RowScaling::Equilibrated => "equilibrated",
            RowScaling::Literal => "literal",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "equilibrated" => Ok(RowScaling::Equilibrated),
            "literal" => Ok(RowScaling::Literal),
            _ => Err(Error::Parse {
                input: s.into(),
                reason: "row scaling must be `equilibrated` or `literal`".into(),
            }),
        }
    }
}

/// Boundary data from the image of the innermost vertex circle.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTargets {
    /// Vertex mean of `mu` on the innermost circle.
    pub mu0: Complex64,
    /// `e_k = L_{mu0}(z_{-M,k})`.
    pub e: Vec<Complex64>,
    /// Continuous logarithm `E_k` of `e_k`.
    pub big_e: Vec<Complex64>,
    /// `D_k = E_k - E_{k-1}` for `k = 1..N-1`, stored at `k - 1`.
    pub d: Vec<Complex64>,
}

pub fn boundary_targets(field: &dyn BeltramiField, mesh: &LogMesh) -> Result<BoundaryTargets> {
    let m = -(mesh.order().m() as i32);
    let n = mesh.order().n();
    let ring: Vec<Complex64> = (0..n).map(|k| mesh.vertex(m, k).exp()).collect();

    let mut mu0 = ZERO;
    for z in &ring {
        mu0 += field.eval(*z)?;
    }
    mu0 /= n as f64;
    if !(mu0.norm() < 1.0) {
        return Err(Error::InadmissibleField(format!(
            "inner-circle mean |mu0| = {} is not below 1",
            mu0.norm()
        )));
    }
    boundary_targets_for(mu0, &ring)
}

fn boundary_targets_for(mu0: Complex64, ring: &[Complex64]) -> Result<BoundaryTargets> {
    let e: Vec<Complex64> = ring.iter().map(|&z| l_mu_unchecked(mu0, z)).collect();
    let mut big_e = Vec::with_capacity(e.len());
    let mut arg = e[0].arg().rem_euclid(2.0 * PI);
    big_e.push(Complex64::new(e[0].norm().ln(), arg));
    for w in e.windows(2) {
        let step = (w[1].arg() - w[0].arg() + PI).rem_euclid(2.0 * PI) - PI;
        if step <= 0.0 {
            return Err(Error::Consistency(format!(
                "inner ellipse is not traversed counterclockwise (step {step})"
            )));
        }
        arg += step;
        big_e.push(Complex64::new(w[1].norm().ln(), arg));
    }
    let d = big_e.windows(2).map(|w| w[1] - w[0]).collect();
    Ok(BoundaryTargets { mu0, e, big_e, d })
}

/// Assembles the full system for `field` on `mesh` with triangle values `nu`
/// and equilibrated triangle rows.
pub fn assemble(field: &dyn BeltramiField, mesh: &LogMesh, nu: &NuTable) -> Result<SparseSystem> {
    let targets = boundary_targets(field, mesh)?;
    assemble_with_targets(mesh, nu, &targets, RowScaling::default())
}

/// Assembly with precomputed boundary data and a chosen row scaling.
pub fn assemble_with_targets(
    mesh: &LogMesh,
    nu: &NuTable,
    targets: &BoundaryTargets,
    scaling: RowScaling,
) -> Result<SparseSystem> {
    let order = mesh.order();
    let (m, n) = (order.m() as i32, order.n());
    if nu.values().len() != mesh.triangles().len() {
        return Err(Error::Consistency(format!(
            "nu table has {} entries, mesh has {} triangles",
            nu.values().len(),
            mesh.triangles().len()
        )));
    }
    if targets.d.len() + 1 != n {
        return Err(Error::Consistency(format!(
            "{} boundary differences for N = {n}",
            targets.d.len()
        )));
    }

    let index = mesh.index();
    let mut b = SystemBuilder::new(order.num_vertices());
    let half = mesh.triangles().len() / 2;
    for (i, t) in mesh.triangles().iter().enumerate() {
        let mut coef = triangle_coeffs(nu.get(i), mesh.corner_positions(t))?;
        if scaling == RowScaling::Equilibrated {
            coef = coef.map(|a| a * (ONE + nu.get(i)));
        }
        let mut rhs = ZERO;
        let mut entries = [(0, ZERO); 3];
        for ((corner, a), slot) in t.corners.iter().zip(coef).zip(&mut entries) {
            // W at a shifted corner is W_{jk} + 2 pi i wrap; move the shift right
            rhs -= corner.shift() * a;
            *slot = (index.column(corner.j, corner.k), a);
        }
        let kind = if i < half { RowKind::TriangleLeft } else { RowKind::TriangleRight };
        b.push_row(kind, &entries, rhs)?;
    }
    for k in 1..n {
        b.push_row(
            RowKind::BoundaryLeft,
            &[(index.column(-m, k), ONE), (index.column(-m, k - 1), -ONE)],
            targets.d[k - 1],
        )?;
    }
    for k in 1..n {
        b.push_row(
            RowKind::BoundaryRight,
            &[(index.column(m, k), ONE), (index.column(m, k - 1), -ONE)],
            -targets.d[k - 1].conj(),
        )?;
    }
    b.push_row(RowKind::Normalization, &[(index.column(0, 0), ONE)], ZERO)?;

    let sys = b.finish();
    if sys.n_rows() != order.num_equations() {
        return Err(Error::Consistency(format!(
            "assembled {} rows, expected {}",
            sys.n_rows(),
            order.num_equations()
        )));
    }
    Ok(sys)
}

/// `W` written in unknown-column order for an assignment `f(j, k)`.
pub fn assignment(mesh: &LogMesh, f: impl Fn(i32, usize) -> Complex64) -> Vec<Complex64> {
    let m = mesh.order().m() as i32;
    let mut v = vec![ZERO; mesh.order().num_vertices()];
    for k in 0..mesh.order().n() {
        for j in -m..=m {
            v[mesh.index().column(j, k)] = f(j, k);
        }
    }
    v
}

/// The reflected assignment `S(W)_{jk} = -conj(W_{-j,k})`.
///
/// Rows of a mirror pair satisfy `r(S W)[partner] = -conj(r(W)[row])`, so
/// `S` preserves the residual norm and maps the least-squares solution to
/// itself.
pub fn reflect_assignment(mesh: &LogMesh, w: &[Complex64]) -> Vec<Complex64> {
    let index = mesh.index();
    assignment(mesh, |j, k| -w[index.column(-j, k)].conj())
}

/// Row index of the mirror partner of `row`; the normalization row is its
/// own partner.
pub fn partner_row(mesh: &LogMesh, row: usize) -> usize {
    let t = mesh.triangles().len();
    let nb = mesh.order().n() - 1;
    if row < t {
        mesh.partner(row)
    } else if row < t + nb {
        row + nb
    } else if row < t + 2 * nb {
        row - nb
    } else {
        row
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beltrami::{affine_b, nu_table};
    use crate::fields::{Constant, FieldRegistry};
    use crate::mesh::{build_mesh, MeshOrder};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn setup(m: usize, n: usize, spec: &str) -> (LogMesh, SparseSystem) {
        let mesh = build_mesh(MeshOrder::new(m, n).unwrap()).unwrap();
        let field = FieldRegistry::builtin().parse(spec).unwrap();
        let nu = nu_table(field.as_ref(), &mesh).unwrap();
        let sys = assemble(field.as_ref(), &mesh, &nu).unwrap();
        (mesh, sys)
    }

    #[test]
    fn identity_coefficients() {
        let mesh = build_mesh(MeshOrder::new(2, 8).unwrap()).unwrap();
        for t in mesh.triangles() {
            let z = mesh.corner_positions(t);
            let coef = triangle_coeffs(c(0.0, 0.0), z).unwrap();
            for i in 0..3 {
                let expected = z[(i + 1) % 3] - z[(i + 2) % 3];
                assert!((coef[i] - expected).norm() < 1e-15);
                assert!((coef[i].norm() - 2.0 * PI / 8.0).abs() < 1e-12);
            }
        }
        // the vertical base side gives the apex coefficient +-2 pi i / N
        let t = mesh.left_triangle(crate::mesh::Family::Rightward, 0, 0).unwrap();
        let coef = triangle_coeffs(c(0.0, 0.0), mesh.corner_positions(t)).unwrap();
        assert!((coef[0] - c(0.0, 2.0 * PI / 8.0)).norm() < 1e-15);
    }

    #[test]
    fn coefficients_annihilate_affine_images() {
        let z = [c(0.1, 0.2), c(0.9, -0.1), c(0.3, 1.1)];
        for nu in [c(0.3, 0.0), c(-0.2, 0.5), c(0.0, -0.8)] {
            let coef = triangle_coeffs(nu, z).unwrap();
            assert!((coef[0] + coef[1] + coef[2]).norm() < 1e-15);
            let b = affine_b(nu, z[0], z[1], c(0.5, 0.5), c(-1.0, 2.0)).unwrap();
            let dot: Complex64 = (0..3).map(|i| coef[i] * b.eval(z[i])).sum();
            assert!(dot.norm() < 1e-12);
        }
        assert!(triangle_coeffs(c(1.0, 0.0), z).is_err());
        assert!(triangle_coeffs(c(0.0, 0.0), [z[0], z[0], z[1]]).is_err());
    }

    #[test]
    fn shape_and_sparsity() {
        let (mesh, sys) = setup(12, 16, "constant:0.3");
        assert_eq!((sys.n_rows(), sys.n_cols()), (799, 400));
        assert_eq!(sys.nnz(), 2365);
        assert!(sys.row_counts().iter().all(|&c| c <= 3));
        let cols = sys.column_counts();
        assert!(cols.iter().all(|&c| c <= 7));
        let sevens: Vec<usize> = (0..cols.len()).filter(|&i| cols[i] == 7).collect();
        assert_eq!(sevens, vec![mesh.index().column(0, 0)]);
    }

    #[test]
    fn wrap_rows_carry_shifted_coefficients() {
        let (mesh, sys) = setup(3, 8, "constant:0.2+0.1i");
        let mut wrapped = 0;
        for (i, t) in mesh.triangles().iter().enumerate() {
            let (_, vals) = sys.row(i);
            let expected: Complex64 = t
                .corners
                .iter()
                .zip(vals)
                .map(|(c, a)| -c.shift() * a)
                .sum();
            assert_eq!(sys.rhs()[i], expected);
            if t.wraps() {
                wrapped += 1;
                assert!(sys.rhs()[i].norm() > 0.0);
            } else {
                assert_eq!(sys.rhs()[i], c(0.0, 0.0));
            }
            assert!(vals.iter().sum::<Complex64>().norm() < 1e-12);
        }
        assert_eq!(wrapped, mesh.triangles().iter().filter(|t| t.wraps()).count());
        assert!(wrapped > 0);
    }

    #[test]
    fn identity_assignment_is_exact() {
        for (m, n) in [(1, 4), (3, 8), (12, 16)] {
            let (mesh, sys) = setup(m, n, "constant:0");
            let v = assignment(&mesh, |j, k| mesh.vertex(j, k));
            let r = sys.residual(&v);
            let worst = r.iter().map(|x| x.norm()).fold(0.0, f64::max);
            assert!(worst < 1e-12, "({m},{n}): {worst}");
        }
    }

    #[test]
    fn boundary_targets_identity_and_winding() {
        let mesh = build_mesh(MeshOrder::new(4, 16).unwrap()).unwrap();
        let t = boundary_targets(&Constant::new(c(0.0, 0.0)).unwrap(), &mesh).unwrap();
        for d in &t.d {
            assert!((d - c(0.0, 2.0 * PI / 16.0)).norm() < 1e-12);
        }
        let t = boundary_targets(&Constant::new(c(0.5, 0.0)).unwrap(), &mesh).unwrap();
        let closing = t.big_e[0] + c(0.0, 2.0 * PI) - t.big_e[15];
        let total: Complex64 = t.d.iter().sum::<Complex64>() + closing;
        assert!((total - c(0.0, 2.0 * PI)).norm() < 1e-12);
        // argument steps are smallest next to the major axis
        let steps: Vec<f64> = t.d.iter().map(|d| d.im).collect();
        let min = steps.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!((steps[0] - min).abs() < 1e-12 || (steps[7] - min).abs() < 1e-12);
        assert!(steps[3] > 2.0 * min);
        assert!(t.big_e.windows(2).all(|w| w[1].im >= w[0].im));
    }

    #[test]
    fn equilibrated_rows_share_one_norm() {
        let mesh = build_mesh(MeshOrder::new(4, 12).unwrap()).unwrap();
        let field = Constant::new(c(0.6, 0.0)).unwrap();
        let nu = nu_table(&field, &mesh).unwrap();
        let targets = boundary_targets(&field, &mesh).unwrap();
        let eq = assemble_with_targets(&mesh, &nu, &targets, RowScaling::Equilibrated).unwrap();
        let lit = assemble_with_targets(&mesh, &nu, &targets, RowScaling::Literal).unwrap();
        let side = 2.0 * PI / 12.0;
        for i in 0..mesh.triangles().len() {
            let norm = |s: &SparseSystem| s.row(i).1.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            let expected = side * (3.0 * (1.0 + nu.get(i).norm_sqr())).sqrt();
            assert!((norm(&eq) - expected).abs() < 1e-12);
            assert!((norm(&lit) * (ONE + nu.get(i)).norm() - expected).abs() < 1e-12);
            assert_eq!(eq.rhs()[i].norm() == 0.0, lit.rhs()[i].norm() == 0.0);
        }
        assert_eq!(RowScaling::parse("literal").unwrap(), RowScaling::Literal);
        assert!(RowScaling::parse("weighted").is_err());
    }

    #[test]
    fn reflected_assignment_mirrors_residuals() {
        let (mesh, sys) = setup(3, 8, "daripa1");
        let v: Vec<Complex64> = (0..sys.n_cols())
            .map(|i| c((i as f64 * 0.37).sin(), (i as f64 * 0.91).cos()))
            .collect();
        let r = sys.residual(&v);
        let rs = sys.residual(&reflect_assignment(&mesh, &v));
        for row in 0..sys.n_rows() {
            let p = partner_row(&mesh, row);
            assert!((rs[p] + r[row].conj()).norm() < 1e-12, "row {row}");
        }
    }
}
