//! Logarithmic triangular mesh on the strip `R_{-M} <= Re Z <= R_M`.
//!
//! Columns `j` sit at `Re Z = R_j = sqrt(3) * pi * j / N`; odd columns are
//! shifted by half an angular step so that every triangle in the left half
//! is equilateral with side `2 * pi / N`. The right half is the mirror image
//! under `Z -> -conj(Z)`. Vertices are stored once per `(j, k)` with
//! `0 <= k < N`; triangles that reach across the periodic seam carry an
//! explicit `+-2*pi*i` shift on the affected corner instead of ghost vertices.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TWO_PI: f64 = 2.0 * PI;

/// Mesh dimensions: `M` radial layers per half-plane and `N` angular steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MeshOrder {
    m: usize,
    n: usize,
}

impl MeshOrder {
    pub fn new(m: usize, n: usize) -> Result<Self> {
        if m < 1 {
            return Err(Error::Parameter(format!("M must be >= 1, got {m}")));
        }
        if n < 3 {
            return Err(Error::Parameter(format!("N must be >= 3, got {n}")));
        }
        // keeps every (j, k) addressable as i32 / usize without overflow
        if m > 1 << 20 || n > 1 << 20 {
            return Err(Error::Parameter(format!("mesh order ({m},{n}) is too large")));
        }
        Ok(Self { m, n })
    }

    /// Order with `M` picked by [`choose_m`].
    pub fn with_default_m(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::Parameter(format!("N must be >= 3, got {n}")));
        }
        Self::new(choose_m(n), n)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of unknowns, `(2M+1) N`.
    pub fn num_vertices(&self) -> usize {
        (2 * self.m + 1) * self.n
    }

    /// Number of equations, `4MN + 2(N-1) + 1`.
    pub fn num_equations(&self) -> usize {
        4 * self.m * self.n + 2 * (self.n - 1) + 1
    }

    pub fn num_triangles(&self) -> usize {
        4 * self.m * self.n
    }
}

impl fmt::Display for MeshOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.m, self.n)
    }
}

/// Least multiple of 4 that is at least `N ln N / (pi sqrt 3)`.
///
/// This keeps `M` inside the `M ~ N log N` growth regime under which the
/// discrete solution converges, with the innermost radius `r_{-M} < 1/N`.
pub fn choose_m(n: usize) -> usize {
    let n = n.max(3) as f64;
    let target = n * n.ln() / (PI * 3f64.sqrt());
    let m = 4 * (target / 4.0).ceil() as usize;
    m.max(4)
}

/// Real part of column `j`.
pub fn column_radius(j: i32, n: usize) -> f64 {
    3f64.sqrt() * PI * f64::from(j) / n as f64
}

/// Bijection between `(j, k)` and the unknown index `p` in `1..=n_v`.
///
/// The layout is k-major, `p = k (2M+1) + (j+M) + 1`, so triangle rows couple
/// unknowns at distance at most `2M+2` except along the periodic seam.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexMap {
    m: usize,
    n: usize,
}

impl IndexMap {
    pub fn new(order: MeshOrder) -> Self {
        Self { m: order.m, n: order.n }
    }

    /// One-based unknown index of `W_{jk}`.
    pub fn forward(&self, j: i32, k: usize) -> usize {
        self.column(j, k) + 1
    }

    /// Inverse of [`forward`](Self::forward).
    pub fn backward(&self, p: usize) -> Option<(i32, usize)> {
        let width = 2 * self.m + 1;
        if p == 0 || p > width * self.n {
            return None;
        }
        let q = p - 1;
        Some(((q % width) as i32 - self.m as i32, q / width))
    }

    /// Zero-based column of `W_{jk}` in the system matrix.
    pub fn column(&self, j: i32, k: usize) -> usize {
        debug_assert!(j.unsigned_abs() as usize <= self.m && k < self.n);
        k * (2 * self.m + 1) + (j + self.m as i32) as usize
    }
}

/// Rightward (`tau+`, apex on the right) or leftward (`tau-`) pointing triangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "+")]
    Rightward,
    #[serde(rename = "-")]
    Leftward,
}

/// Which side of the imaginary axis the triangle was generated on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Half {
    Left,
    Right,
}

/// Identifies a triangle by family, half-plane and apex `(j, k)`.
///
/// Right-half labels use the mirrored apex column, so the partner of
/// `(family, Left, j, k)` is `(family, Right, -j, k)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TriangleLabel {
    pub family: Family,
    pub half: Half,
    pub j: i32,
    pub k: usize,
}

impl TriangleLabel {
    pub fn mirror(&self) -> Self {
        Self {
            half: match self.half {
                Half::Left => Half::Right,
                Half::Right => Half::Left,
            },
            j: -self.j,
            ..*self
        }
    }
}

impl fmt::Display for TriangleLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = match self.family {
            Family::Rightward => '+',
            Family::Leftward => '-',
        };
        let half = match self.half {
            Half::Left => "L",
            Half::Right => "R",
        };
        write!(f, "tau{sign}{half}({},{})", self.j, self.k)
    }
}

/// Triangle corner: stored vertex `(j, k)` plus a periodic shift.
///
/// The true position is `Z_{jk} + wrap * 2 pi i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Corner {
    pub j: i32,
    pub k: usize,
    pub wrap: i8,
}

impl Corner {
    pub fn shift(&self) -> Complex64 {
        Complex64::new(0.0, TWO_PI * f64::from(self.wrap))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangle {
    pub label: TriangleLabel,
    /// Apex first; positively oriented in the Z-plane.
    pub corners: [Corner; 3],
}

impl Triangle {
    pub fn wraps(&self) -> bool {
        self.corners.iter().any(|c| c.wrap != 0)
    }
}

/// The extended logarithmic mesh, `-M <= j <= M`, `0 <= k < N`.
#[derive(Debug, Clone)]
pub struct LogMesh {
    order: MeshOrder,
    index: IndexMap,
    vertices: Vec<Complex64>,
    triangles: Vec<Triangle>,
}

/// Builds the mesh for `order`.
///
/// Triangles are listed as: left-half `tau+` (`-M+1 <= j <= 0`), left-half
/// `tau-` (`-M <= j <= -1`), each in `(j, k)` order, followed by their
/// mirror images in the same order.
pub fn build_mesh(order: MeshOrder) -> Result<LogMesh> {
    let order = MeshOrder::new(order.m, order.n)?;
    let (m, n) = (order.m as i32, order.n);
    let index = IndexMap::new(order);

    let mut vertices = vec![Complex64::new(0.0, 0.0); order.num_vertices()];
    for k in 0..n {
        for j in -m..=0 {
            let parity = j.rem_euclid(2) as f64;
            let im = TWO_PI * (k as f64 + parity / 2.0) / n as f64;
            let z = Complex64::new(column_radius(j, n), im);
            vertices[index.column(j, k)] = z;
            if j < 0 {
                vertices[index.column(-j, k)] = -z.conj();
            }
        }
    }

    let corner = |j: i32, k: i64| -> Corner {
        let n = n as i64;
        let wrap = if k < 0 {
            -1
        } else if k >= n {
            1
        } else {
            0
        };
        Corner { j, k: k.rem_euclid(n) as usize, wrap }
    };

    let mut left = Vec::with_capacity(2 * order.m * n);
    for j in (-m + 1)..=0 {
        for k in 0..n {
            let ki = k as i64;
            // upper base corner first so the triple is counterclockwise
            let (lower, upper) = if j % 2 == 0 { (ki - 1, ki) } else { (ki, ki + 1) };
            left.push(Triangle {
                label: TriangleLabel { family: Family::Rightward, half: Half::Left, j, k },
                corners: [corner(j, ki), corner(j - 1, upper), corner(j - 1, lower)],
            });
        }
    }
    for j in -m..=-1 {
        for k in 0..n {
            let ki = k as i64;
            let (lower, upper) = if j % 2 == 0 { (ki - 1, ki) } else { (ki, ki + 1) };
            left.push(Triangle {
                label: TriangleLabel { family: Family::Leftward, half: Half::Left, j, k },
                corners: [corner(j, ki), corner(j + 1, lower), corner(j + 1, upper)],
            });
        }
    }

    let right: Vec<Triangle> = left.iter().map(mirror_triangle).collect();
    let mut triangles = left;
    triangles.extend(right);

    Ok(LogMesh { order, index, vertices, triangles })
}

fn mirror_triangle(t: &Triangle) -> Triangle {
    let flip = |c: Corner| Corner { j: -c.j, ..c };
    let [a, b, c] = t.corners;
    // reflection reverses orientation; swapping the base corners restores it
    Triangle { label: t.label.mirror(), corners: [flip(a), flip(c), flip(b)] }
}

impl LogMesh {
    pub fn order(&self) -> MeshOrder {
        self.order
    }

    pub fn index(&self) -> &IndexMap {
        &self.index
    }

    /// Stored vertex `Z_{jk}`.
    pub fn vertex(&self, j: i32, k: usize) -> Complex64 {
        self.vertices[self.index.column(j, k)]
    }

    /// Vertices in unknown-column order.
    pub fn vertices(&self) -> &[Complex64] {
        &self.vertices
    }

    /// True position of a triangle corner, including its periodic shift.
    pub fn corner_position(&self, c: Corner) -> Complex64 {
        self.vertex(c.j, c.k) + c.shift()
    }

    pub fn corner_positions(&self, t: &Triangle) -> [Complex64; 3] {
        t.corners.map(|c| self.corner_position(c))
    }

    pub fn triangles(&self) -> &[Triangle] {
        &self.triangles
    }

    /// The `2MN` triangles of the left half-plane.
    pub fn left_triangles(&self) -> &[Triangle] {
        &self.triangles[..self.triangles.len() / 2]
    }

    pub fn right_triangles(&self) -> &[Triangle] {
        &self.triangles[self.triangles.len() / 2..]
    }

    /// Left-half triangle by family and apex, if it exists.
    pub fn left_triangle(&self, family: Family, j: i32, k: usize) -> Option<&Triangle> {
        let (m, n) = (self.order.m as i32, self.order.n);
        if k >= n {
            return None;
        }
        let idx = match family {
            Family::Rightward if (-m + 1..=0).contains(&j) => (j + m - 1) as usize * n + k,
            Family::Leftward if (-m..=-1).contains(&j) => {
                self.order.m * n + (j + m) as usize * n + k
            }
            _ => return None,
        };
        self.triangles.get(idx)
    }

    /// Index of the mirror partner of triangle `i` in [`triangles`](Self::triangles).
    pub fn partner(&self, i: usize) -> usize {
        let half = self.triangles.len() / 2;
        if i < half {
            i + half
        } else {
            i - half
        }
    }

    /// Disk vertex `z_{jk} = exp(Z_{jk})`, defined for `j <= 0`.
    pub fn disk_vertex(&self, j: i32, k: usize) -> Option<Complex64> {
        (j <= 0).then(|| self.vertex(j, k).exp())
    }

    /// All disk vertices `(j, k, z_{jk})` with `-M <= j <= 0`.
    pub fn disk_vertices(&self) -> Vec<(i32, usize, Complex64)> {
        let m = self.order.m as i32;
        let mut out = Vec::with_capacity((self.order.m + 1) * self.order.n);
        for k in 0..self.order.n {
            for j in -m..=0 {
                out.push((j, k, self.vertex(j, k).exp()));
            }
        }
        out
    }

    /// Radius `r_{-M}` of the innermost vertex circle in the disk.
    pub fn inner_radius(&self) -> f64 {
        column_radius(-(self.order.m as i32), self.order.n).exp()
    }
}

/// Twice the signed area of `(a, b, c)`; positive when counterclockwise.
pub fn signed_area2(a: Complex64, b: Complex64, c: Complex64) -> f64 {
    let u = b - a;
    let v = c - a;
    u.re * v.im - u.im * v.re
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn mesh(m: usize, n: usize) -> LogMesh {
        build_mesh(MeshOrder::new(m, n).unwrap()).unwrap()
    }

    #[test]
    fn rejects_bad_orders() {
        assert!(matches!(MeshOrder::new(0, 4), Err(Error::Parameter(s)) if s.contains("M")));
        assert!(matches!(MeshOrder::new(2, 2), Err(Error::Parameter(s)) if s.contains("N")));
    }

    #[test]
    fn small_mesh_counts() {
        let mesh = mesh(1, 4);
        assert_eq!(mesh.vertices().len(), 12);
        assert_eq!(mesh.left_triangles().len(), 8);
        assert_eq!(mesh.triangles().len(), 16);
        assert!((column_radius(-1, 4) + 3f64.sqrt() * PI / 4.0).abs() < 1e-15);
        assert!((column_radius(-1, 4) - -1.360350).abs() < 1e-6);

        let order = MeshOrder::new(12, 16).unwrap();
        assert_eq!(order.num_vertices(), 400);
        assert_eq!(order.num_equations(), 799);
    }

    #[test]
    fn odd_columns_are_half_shifted() {
        let mesh = mesh(1, 4);
        let z = mesh.vertex(-1, 0);
        assert!((z - Complex64::new(-3f64.sqrt() * PI / 4.0, PI / 4.0)).norm() < 1e-15);
        assert_eq!(mesh.vertex(0, 0), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn choose_m_schedule() {
        let got: Vec<usize> = [16, 32, 48, 64, 72, 84].iter().map(|&n| choose_m(n)).collect();
        assert_eq!(got, vec![12, 24, 36, 52, 60, 72]);
    }

    #[test]
    fn left_triangles_are_equilateral_and_positive() {
        for (m, n) in [(1, 4), (3, 7), (12, 16)] {
            let mesh = mesh(m, n);
            let side = TWO_PI / n as f64;
            for t in mesh.triangles() {
                let [a, b, c] = mesh.corner_positions(t);
                assert!(signed_area2(a, b, c) > 0.0, "{}", t.label);
                let distinct: std::collections::HashSet<_> =
                    t.corners.iter().map(|c| (c.j, c.k)).collect();
                assert_eq!(distinct.len(), 3);
                if t.label.half == Half::Left {
                    for (p, q) in [(a, b), (b, c), (c, a)] {
                        assert!(((p - q).norm() - side).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn family_counts_per_half() {
        let (m, n) = (4, 9);
        let mesh = mesh(m, n);
        let mut counts: HashMap<(Family, Half), usize> = HashMap::new();
        for t in mesh.triangles() {
            *counts.entry((t.label.family, t.label.half)).or_default() += 1;
        }
        for family in [Family::Rightward, Family::Leftward] {
            for half in [Half::Left, Half::Right] {
                assert_eq!(counts[&(family, half)], m * n);
            }
        }
    }

    #[test]
    fn reflection_closure() {
        let mesh = mesh(3, 6);
        for (i, t) in mesh.triangles().iter().enumerate() {
            let p = &mesh.triangles()[mesh.partner(i)];
            assert_eq!(p.label, t.label.mirror());
            let mut mine: Vec<_> = mesh
                .corner_positions(t)
                .iter()
                .map(|z| -z.conj())
                .map(|z| ((z.re + 0.0).to_bits(), (z.im + 0.0).to_bits()))
                .collect();
            let mut theirs: Vec<_> = mesh
                .corner_positions(p)
                .iter()
                .map(|z| ((z.re + 0.0).to_bits(), (z.im + 0.0).to_bits()))
                .collect();
            mine.sort();
            theirs.sort();
            assert_eq!(mine, theirs);
        }
    }

    #[test]
    fn wrap_flags_match_seam() {
        let (m, n) = (4, 6);
        let mesh = mesh(m, n);
        for t in mesh.left_triangles() {
            let l = t.label;
            let even = l.j % 2 == 0;
            let expected = match l.family {
                Family::Rightward | Family::Leftward => {
                    (even && l.k == 0) || (!even && l.k == n - 1)
                }
            };
            assert_eq!(t.wraps(), expected, "{}", l);
            for c in &t.corners {
                if c.wrap != 0 {
                    assert_eq!(c.wrap, if even { -1 } else { 1 });
                }
            }
        }
    }

    #[test]
    fn vertex_incidence() {
        let (m, n) = (3, 8);
        let mesh = mesh(m, n);
        let mut count: HashMap<(i32, usize), usize> = HashMap::new();
        for t in mesh.triangles() {
            for c in &t.corners {
                *count.entry((c.j, c.k)).or_default() += 1;
            }
        }
        let total: usize = count.values().sum();
        assert_eq!(total, 3 * 4 * m * n);
        for (&(j, _), &c) in &count {
            if j.unsigned_abs() as usize == m {
                assert_eq!(c, 3);
            } else {
                assert_eq!(c, 6);
            }
        }
    }

    #[test]
    fn index_map_round_trip() {
        let order = MeshOrder::new(5, 7).unwrap();
        let map = IndexMap::new(order);
        let mut seen = vec![false; order.num_vertices()];
        for k in 0..7 {
            for j in -5..=5 {
                let p = map.forward(j, k);
                assert_eq!(p, k * 11 + (j + 5) as usize + 1);
                assert_eq!(map.backward(p), Some((j, k)));
                assert!(!seen[p - 1]);
                seen[p - 1] = true;
            }
        }
        assert!(map.backward(0).is_none());
        assert!(map.backward(order.num_vertices() + 1).is_none());
    }

    #[test]
    fn disk_vertices_in_closed_disk() {
        let mesh = mesh(12, 16);
        assert_eq!(mesh.disk_vertex(0, 0), Some(Complex64::new(1.0, 0.0)));
        assert!(mesh.disk_vertex(1, 0).is_none());
        for (j, k, z) in mesh.disk_vertices() {
            assert!(z.norm() <= 1.0 + 1e-15);
            if j == 0 {
                assert!((z.norm() - 1.0).abs() < 1e-15);
                let angle = TWO_PI * k as f64 / 16.0;
                assert!((z - Complex64::from_polar(1.0, angle)).norm() < 1e-14);
            }
            if j == -12 {
                assert!((z.norm() - 0.016890).abs() < 1e-6);
            }
        }
        assert!((mesh.inner_radius() - (-3f64.sqrt() * PI * 12.0 / 16.0).exp()).abs() < 1e-15);
    }

    #[test]
    fn left_triangle_lookup() {
        let mesh = mesh(3, 5);
        for t in mesh.left_triangles() {
            let l = t.label;
            assert_eq!(mesh.left_triangle(l.family, l.j, l.k).unwrap().label, l);
        }
        assert!(mesh.left_triangle(Family::Rightward, -3, 0).is_none());
        assert!(mesh.left_triangle(Family::Leftward, 0, 0).is_none());
    }
}
