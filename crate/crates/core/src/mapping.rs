//! From the solved log-plane values back to the disk.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::beltrami::implicit_mu;
use crate::error::{Error, Result};
use crate::lsq::LsqSolution;
use crate::mesh::{column_radius, signed_area2, Family, LogMesh, Triangle, TriangleLabel};

/// Residual norms carried along with a solution.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct ResidualSummary {
    pub residual_l2: f64,
    pub residual_inf: f64,
    pub normal_residual: f64,
}

impl From<&LsqSolution> for ResidualSummary {
    fn from(s: &LsqSolution) -> Self {
        Self {
            residual_l2: s.residual2,
            residual_inf: s.residual_inf,
            normal_residual: s.normal_residual,
        }
    }
}

/// Solved vertex values `W_{jk}`, their exponentials, and orientation checks.
#[derive(Debug, Clone)]
pub struct SolutionMesh {
    mesh: Arc<LogMesh>,
    big_w: Vec<Complex64>,
    w: Vec<Complex64>,
    flipped: Vec<TriangleLabel>,
    residual: ResidualSummary,
}

/// Maps `W` to `w = exp(W)` and records left-half image triangles whose
/// orientation disagrees with their source.
pub fn exponentiate(
    mesh: Arc<LogMesh>,
    big_w: Vec<Complex64>,
    residual: ResidualSummary,
) -> Result<SolutionMesh> {
    if big_w.len() != mesh.order().num_vertices() {
        return Err(Error::Consistency(format!(
            "{} values for {} vertices",
            big_w.len(),
            mesh.order().num_vertices()
        )));
    }
    let w: Vec<Complex64> = big_w.iter().map(|x| x.exp()).collect();
    let mut sol = SolutionMesh { mesh, big_w, w, flipped: Vec::new(), residual };
    sol.flipped = sol
        .mesh
        .left_triangles()
        .iter()
        .filter(|t| {
            let z = sol.corner_z(t);
            let w = sol.corner_w(t);
            signed_area2(z[0], z[1], z[2]) * signed_area2(w[0], w[1], w[2]) <= 0.0
        })
        .map(|t| t.label)
        .collect();
    Ok(sol)
}

impl SolutionMesh {
    pub fn mesh(&self) -> &LogMesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> &Arc<LogMesh> {
        &self.mesh
    }

    /// `W` in unknown-column order.
    pub fn big_w_values(&self) -> &[Complex64] {
        &self.big_w
    }

    pub fn big_w(&self, j: i32, k: usize) -> Complex64 {
        self.big_w[self.mesh.index().column(j, k)]
    }

    /// `w_{jk}`, defined for `j <= 0`.
    pub fn w(&self, j: i32, k: usize) -> Option<Complex64> {
        (j <= 0).then(|| self.w[self.mesh.index().column(j, k)])
    }

    pub fn flipped(&self) -> &[TriangleLabel] {
        &self.flipped
    }

    pub fn residual(&self) -> ResidualSummary {
        self.residual
    }

    fn corner_z(&self, t: &Triangle) -> [Complex64; 3] {
        t.corners.map(|c| self.mesh.disk_vertex(c.j, c.k).expect("left half"))
    }

    fn corner_w(&self, t: &Triangle) -> [Complex64; 3] {
        t.corners.map(|c| self.w[self.mesh.index().column(c.j, c.k)])
    }

    /// Beltrami derivative of the affine piece on each left-half triangle.
    pub fn discrete_mu(&self) -> Vec<(TriangleLabel, Result<Complex64>)> {
        self.mesh
            .left_triangles()
            .iter()
            .map(|t| (t.label, implicit_mu(self.corner_z(t), self.corner_w(t))))
            .collect()
    }

    /// Piecewise-linear map at `z`, for `r_{-M} <= |z| <= 1`.
    ///
    /// Points on shared edges resolve to the lowest `(j, k, family)` label.
    /// Points between the outer chords and the unit circle use the affine
    /// extension of the nearest boundary triangle.
    pub fn evaluate_pl(&self, z: Complex64) -> Result<Complex64> {
        let order = self.mesh.order();
        let (m, n) = (order.m() as i32, order.n());
        let r = z.norm();
        if !(r <= 1.0 + 1e-12) {
            return Err(Error::Domain(format!("|z| = {r} lies outside the unit disk")));
        }
        let inner = self.mesh.inner_radius();
        if r < inner * (1.0 - 1e-12) {
            return Err(Error::Domain(format!(
                "|z| = {r} lies in the unmeshed hole of radius {inner}"
            )));
        }

        let h = -column_radius(-1, n);
        let strip = ((r.ln() / h).floor() as i32).clamp(-m, -1);
        let theta = z.arg().rem_euclid(2.0 * PI);
        let k0 = (theta * n as f64 / (2.0 * PI)).floor() as i64;

        let mut candidates: Vec<&Triangle> = Vec::with_capacity(32);
        for dk in -2..=2 {
            let k = (k0 + dk).rem_euclid(n as i64) as usize;
            for j in strip - 1..=strip + 2 {
                for family in [Family::Rightward, Family::Leftward] {
                    if let Some(t) = self.mesh.left_triangle(family, j, k) {
                        candidates.push(t);
                    }
                }
            }
        }
        candidates.sort_by_key(|t| (t.label.j, t.label.k, t.label.family));

        let mut best: Option<(f64, &Triangle, [f64; 3])> = None;
        for t in candidates {
            let Some(lambda) = barycentric(self.corner_z(t), z) else { continue };
            let worst = lambda.iter().cloned().fold(f64::INFINITY, f64::min);
            if worst >= -1e-12 {
                return Ok(interpolate(self.corner_w(t), lambda));
            }
            if best.is_none_or(|(b, _, _)| worst > b) {
                best = Some((worst, t, lambda));
            }
        }
        let (_, t, lambda) = best.ok_or_else(|| {
            Error::Consistency(format!("no mesh triangle found near z = {z}"))
        })?;
        Ok(interpolate(self.corner_w(t), lambda))
    }
}

fn barycentric(t: [Complex64; 3], p: Complex64) -> Option<[f64; 3]> {
    let [a, b, c] = t;
    let d = signed_area2(a, b, c);
    if d == 0.0 {
        return None;
    }
    let lb = signed_area2(a, p, c) / d;
    let lc = signed_area2(a, b, p) / d;
    Some([1.0 - lb - lc, lb, lc])
}

fn interpolate(w: [Complex64; 3], l: [f64; 3]) -> Complex64 {
    // exact at the corners
    for i in 0..3 {
        if l[i] == 1.0 && l[(i + 1) % 3] == 0.0 && l[(i + 2) % 3] == 0.0 {
            return w[i];
        }
    }
    w[0] * l[0] + w[1] * l[1] + w[2] * l[2]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadiusError {
    pub j: i32,
    pub radius: f64,
    pub max_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorReport {
    pub max_error: f64,
    /// Per-column maximum over `k`, innermost circle first.
    pub profile: Vec<RadiusError>,
}

/// Largest `|w_{jk} - f(z_{jk})|` over the disk vertices, with its profile
/// by radius.
pub fn max_vertex_error(
    sol: &SolutionMesh,
    oracle: impl Fn(Complex64) -> Result<Complex64>,
) -> Result<ErrorReport> {
    let mesh = sol.mesh();
    let (m, n) = (mesh.order().m() as i32, mesh.order().n());
    let mut profile = Vec::with_capacity(m as usize + 1);
    let mut max = 0.0f64;
    for j in -m..=0 {
        let mut worst = 0.0f64;
        for k in 0..n {
            let z = mesh.disk_vertex(j, k).expect("left half");
            let w = sol.w(j, k).expect("left half");
            worst = worst.max((w - oracle(z)?).norm());
        }
        max = max.max(worst);
        profile.push(RadiusError { j, radius: column_radius(j, n).exp(), max_error: worst });
    }
    Ok(ErrorReport { max_error: max, profile })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::assignment;
    use crate::mesh::{build_mesh, MeshOrder};

    fn identity(m: usize, n: usize) -> SolutionMesh {
        let mesh = Arc::new(build_mesh(MeshOrder::new(m, n).unwrap()).unwrap());
        let v = assignment(&mesh, |j, k| mesh.vertex(j, k));
        exponentiate(mesh, v, ResidualSummary::default()).unwrap()
    }

    #[test]
    fn identity_has_no_flips_and_reproduces_z() {
        let sol = identity(4, 12);
        assert!(sol.flipped().is_empty());
        assert_eq!(sol.w(0, 0), Some(Complex64::new(1.0, 0.0)));
        assert_eq!(sol.w(1, 0), None);
        for (j, k, z) in sol.mesh().disk_vertices() {
            assert_eq!(sol.evaluate_pl(z).unwrap(), sol.w(j, k).unwrap());
        }
        let report = max_vertex_error(&sol, Ok).unwrap();
        assert!(report.max_error < 1e-15);
        assert_eq!(report.profile.len(), 5);
    }

    #[test]
    fn evaluate_pl_rejects_points_off_the_annulus() {
        let sol = identity(4, 12);
        assert!(sol.evaluate_pl(Complex64::new(1.01, 0.0)).is_err());
        assert!(sol.evaluate_pl(Complex64::new(0.0, 0.0)).is_err());
        let r = sol.mesh().inner_radius();
        assert!(sol.evaluate_pl(Complex64::new(0.5 * r, 0.0)).is_err());
        assert!(sol.evaluate_pl(Complex64::new(r, 0.0)).is_ok());
    }

    #[test]
    fn flips_are_detected() {
        let mesh = Arc::new(build_mesh(MeshOrder::new(2, 8).unwrap()).unwrap());
        let mut v = assignment(&mesh, |j, k| mesh.vertex(j, k));
        // drag one interior vertex across its neighbours
        let col = mesh.index().column(-1, 2);
        v[col] += Complex64::new(0.0, 1.5);
        let sol = exponentiate(mesh, v, ResidualSummary::default()).unwrap();
        assert!(!sol.flipped().is_empty());
        assert!(sol.flipped().iter().all(|l| l.j >= -2 && l.j <= 0));
    }
}
