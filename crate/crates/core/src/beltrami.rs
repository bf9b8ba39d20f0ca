//! Affine `mu`-conformal building blocks and the pulled-back field on the mesh.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fields::BeltramiField;
use crate::mesh::{Half, LogMesh, TriangleLabel};

fn check_dilatation(mu: Complex64) -> Result<()> {
    if !mu.is_finite() || mu.norm() >= 1.0 {
        return Err(Error::Domain(format!("|mu| must be < 1, got mu = {mu}")));
    }
    Ok(())
}

/// The normalized real-linear map `(z + mu conj z) / (1 + mu)`.
///
/// It has constant Beltrami derivative `mu` and fixes `0` and `1`.
pub fn l_mu(mu: Complex64, z: Complex64) -> Result<Complex64> {
    check_dilatation(mu)?;
    Ok(l_mu_unchecked(mu, z))
}

#[inline]
pub(crate) fn l_mu_unchecked(mu: Complex64, z: Complex64) -> Complex64 {
    (z + mu * z.conj()) / (1.0 + mu)
}

/// The unique `mu`-conformal affine map sending `z1 -> w1` and `z2 -> w2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMap {
    mu: Complex64,
    z1: Complex64,
    w1: Complex64,
    scale: Complex64,
}

impl AffineMap {
    pub fn new(
        mu: Complex64,
        z1: Complex64,
        z2: Complex64,
        w1: Complex64,
        w2: Complex64,
    ) -> Result<Self> {
        check_dilatation(mu)?;
        if z1 == z2 {
            return Err(Error::Degenerate(format!("source points coincide at {z1}")));
        }
        if w1 == w2 {
            return Err(Error::Degenerate(format!("target points coincide at {w1}")));
        }
        let scale = (w2 - w1) / l_mu_unchecked(mu, z2 - z1);
        Ok(Self { mu, z1, w1, scale })
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.w1 + self.scale * l_mu_unchecked(self.mu, z - self.z1)
    }

    pub fn mu(&self) -> Complex64 {
        self.mu
    }
}

/// Convenience wrapper around [`AffineMap::new`].
pub fn affine_b(
    mu: Complex64,
    z1: Complex64,
    z2: Complex64,
    w1: Complex64,
    w2: Complex64,
) -> Result<AffineMap> {
    AffineMap::new(mu, z1, z2, w1, w2)
}

/// Beltrami derivative of the affine map taking `z_i` to `w_i`.
///
/// Both triples must be noncollinear. When the map reverses orientation the
/// returned value has modulus `>= 1` (infinite if the denominator vanishes);
/// it is up to the caller to treat that as out of range.
pub fn implicit_mu(z: [Complex64; 3], w: [Complex64; 3]) -> Result<Complex64> {
    let scale = |p: [Complex64; 3]| p.iter().map(|x| x.norm()).fold(0.0, f64::max).max(1e-300);
    let collinear = |p: [Complex64; 3]| {
        let u = p[1] - p[0];
        let v = p[2] - p[0];
        (u.re * v.im - u.im * v.re).abs() <= 1e-14 * scale(p) * scale(p)
    };
    if collinear(z) {
        return Err(Error::Degenerate("z-triple is collinear".into()));
    }
    if collinear(w) {
        return Err(Error::Degenerate("w-triple is collinear".into()));
    }
    let (dz2, dz3) = (z[1] - z[0], z[2] - z[0]);
    let (dw2, dw3) = (w[1] - w[0], w[2] - w[0]);
    let num = dz2 * dw3 - dz3 * dw2;
    let den = dz2.conj() * dw3 - dz3.conj() * dw2;
    if den == Complex64::new(0.0, 0.0) {
        return Ok(Complex64::new(f64::INFINITY, 0.0));
    }
    Ok(-num / den)
}

/// Similarity discrepancy between normalized triangles `(0, 1, c0)` and `(0, 1, c)`.
pub fn triangle_discrepancy(c0: Complex64, c: Complex64) -> Result<Complex64> {
    if !(c0.im > 0.0) || !(c.im > 0.0) {
        return Err(Error::Domain(format!(
            "apexes must lie in the upper half-plane, got {c0} and {c}"
        )));
    }
    Ok(-(c - c0) / (c - c0.conj()))
}

/// `nu(Z) = mu(e^Z) e^{-2i Im Z}`: the field as a `(-1,1)`-differential in
/// logarithmic coordinates.
pub fn pullback_nu(field: &dyn BeltramiField, z: Complex64) -> Result<Complex64> {
    let mu = field.eval(z.exp())?;
    Ok(mu * Complex64::from_polar(1.0, -2.0 * z.im))
}

/// Per-triangle average of `nu`, aligned with [`LogMesh::triangles`].
#[derive(Debug, Clone, PartialEq)]
pub struct NuTable {
    values: Vec<Complex64>,
    labels: Vec<TriangleLabel>,
}

impl NuTable {
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn get(&self, i: usize) -> Complex64 {
        self.values[i]
    }

    pub fn label(&self, i: usize) -> TriangleLabel {
        self.labels[i]
    }

    /// Largest `|nu|` over all triangles.
    pub fn max_modulus(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Table of identical values, mainly for tests and constant-`nu` studies.
    pub fn uniform(mesh: &LogMesh, nu: Complex64) -> Result<Self> {
        check_dilatation(nu)?;
        let labels: Vec<_> = mesh.triangles().iter().map(|t| t.label).collect();
        let values = labels
            .iter()
            .map(|l| if l.half == Half::Left { nu } else { nu.conj() })
            .collect();
        Ok(Self { values, labels })
    }
}

/// How a triangle's single `nu` value is taken from the field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NuRule {
    /// Mean over the three corners.
    #[default]
    VertexMean,
    /// Midpoint rule on `s^2` congruent subtriangles. Approximates the area
    /// average, which stays meaningful when the field jumps inside a triangle.
    AreaMean(u32),
}

impl NuRule {
    pub fn name(&self) -> String {
        match self {
            NuRule::VertexMean => "vertex".into(),
            NuRule::AreaMean(s) => format!("area:{s}"),
        }
    }

    /// `vertex`, `area` or `area:<s>`.
    pub fn parse(s: &str) -> Result<Self> {
        match s.split_once(':') {
            None if s == "vertex" => Ok(NuRule::VertexMean),
            None if s == "area" => Ok(NuRule::AreaMean(16)),
            Some(("area", n)) => match n.parse::<u32>() {
                Ok(n) if (1..=256).contains(&n) => Ok(NuRule::AreaMean(n)),
                _ => Err(Error::Parse {
                    input: s.into(),
                    reason: "subdivision count must be in 1..=256".into(),
                }),
            },
            _ => Err(Error::Parse {
                input: s.into(),
                reason: "expected vertex, area or area:<s>".into(),
            }),
        }
    }
}

/// Averages the pulled-back field over the three corners of each left-half
/// triangle and conjugates the value onto the mirror triangle.
pub fn nu_table(field: &dyn BeltramiField, mesh: &LogMesh) -> Result<NuTable> {
    nu_table_with(field, mesh, NuRule::VertexMean)
}

/// Midpoint rule over the `s^2` subtriangles of a uniform split.
fn area_mean(field: &dyn BeltramiField, p: [Complex64; 3], s: u32) -> Result<Complex64> {
    let s = s as usize;
    let (e1, e2) = ((p[1] - p[0]) / s as f64, (p[2] - p[0]) / s as f64);
    let mut sum = Complex64::new(0.0, 0.0);
    for a in 0..s {
        for b in 0..s - a {
            // upward cell
            let base = p[0] + e1 * a as f64 + e2 * b as f64;
            sum += pullback_nu(field, base + (e1 + e2) / 3.0)?;
            if a + b + 1 < s {
                // downward cell
                sum += pullback_nu(field, base + (e1 + e2) * (2.0 / 3.0))?;
            }
        }
    }
    Ok(sum / (s * s) as f64)
}

pub fn nu_table_with(field: &dyn BeltramiField, mesh: &LogMesh, rule: NuRule) -> Result<NuTable> {
    if rule == NuRule::AreaMean(0) {
        return Err(Error::Parse { input: rule.name(), reason: "needs at least one subdivision".into() });
    }
    let order = mesh.order();
    let m = order.m() as i32;
    let n = order.n();

    // nu at every stored left-half vertex; also the admissibility sweep
    let mut vertex_nu = vec![Complex64::new(0.0, 0.0); mesh.vertices().len()];
    for k in 0..n {
        for j in -m..=0 {
            let z = mesh.vertex(j, k);
            let nu = pullback_nu(field, z)?;
            if !nu.is_finite() || nu.norm() >= 1.0 {
                return Err(Error::InadmissibleField(format!(
                    "|mu| = {} at z = {} (vertex ({j},{k}))",
                    nu.norm(),
                    z.exp()
                )));
            }
            vertex_nu[mesh.index().column(j, k)] = nu;
        }
    }

    let left = mesh.left_triangles();
    let mut values = vec![Complex64::new(0.0, 0.0); mesh.triangles().len()];
    for (i, t) in left.iter().enumerate() {
        let avg = match rule {
            NuRule::VertexMean => {
                let mut sum = Complex64::new(0.0, 0.0);
                for c in &t.corners {
                    sum += if c.wrap == 0 {
                        vertex_nu[mesh.index().column(c.j, c.k)]
                    } else {
                        pullback_nu(field, mesh.corner_position(*c))?
                    };
                }
                sum / 3.0
            }
            NuRule::AreaMean(s) => area_mean(field, mesh.corner_positions(t), s)?,
        };
        if !(avg.norm() < 1.0) {
            return Err(Error::InadmissibleTriangle { label: t.label, modulus: avg.norm() });
        }
        values[i] = avg;
        values[mesh.partner(i)] = avg.conj();
    }
    let labels = mesh.triangles().iter().map(|t| t.label).collect();
    Ok(NuTable { values, labels })
}
