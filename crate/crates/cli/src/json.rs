//! Solution files: one self-describing JSON document per solve.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use qcmap::pipeline::Solved;

use crate::CliError;

/// Oracle comparison stored alongside a solution when the field has one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRecord {
    pub oracle: String,
    pub max_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexRecord {
    pub j: i32,
    pub k: usize,
    #[serde(rename = "Z")]
    pub big_z: [f64; 2],
    #[serde(rename = "W")]
    pub big_w: [f64; 2],
    pub z: Option<[f64; 2]>,
    pub w: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub mu_spec: String,
    pub residual_l2: f64,
    pub residual_inf: f64,
    pub normal_residual: f64,
    pub solver: String,
    pub runtime_s: f64,
    pub rows: usize,
    pub verification: Option<OracleRecord>,
    pub flipped: Vec<String>,
    /// Indexed by unknown column `p`.
    pub vertices: Vec<VertexRecord>,
    /// Vertex indices per triangle; corners across the periodic seam refer to
    /// the stored vertex, shifted by `2 pi i` in the log plane.
    pub triangles: Vec<[usize; 3]>,
}

fn pair(c: Complex64) -> [f64; 2] {
    [c.re, c.im]
}

impl SolutionFile {
    pub fn from_solved(spec: &str, solved: &Solved, verification: Option<OracleRecord>) -> Self {
        let sol = &solved.solution;
        let mesh = sol.mesh();
        let index = mesh.index();
        let order = mesh.order();
        let vertices = (0..order.num_vertices())
            .map(|p| {
                let (j, k) = index.backward(p + 1).expect("column in range");
                VertexRecord {
                    j,
                    k,
                    big_z: pair(mesh.vertex(j, k)),
                    big_w: pair(sol.big_w(j, k)),
                    z: mesh.disk_vertex(j, k).map(pair),
                    w: sol.w(j, k).map(pair),
                }
            })
            .collect();
        let triangles = mesh
            .triangles()
            .iter()
            .map(|t| t.corners.map(|c| index.column(c.j, c.k)))
            .collect();
        let residual = sol.residual();
        SolutionFile {
            m: order.m(),
            n: order.n(),
            mu_spec: spec.to_string(),
            residual_l2: residual.residual_l2,
            residual_inf: residual.residual_inf,
            normal_residual: residual.normal_residual,
            solver: solved.lsq.stats.solver.clone(),
            runtime_s: solved.elapsed.as_secs_f64(),
            rows: solved.system.n_rows(),
            verification,
            flipped: sol.flipped().iter().map(|l| l.to_string()).collect(),
            vertices,
            triangles,
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::io(path, e))?;
        fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let file: SolutionFile = serde_json::from_str(&text).map_err(|e| CliError::io(path, e))?;
        file.check().map_err(|msg| CliError::io(path, msg))?;
        Ok(file)
    }

    fn check(&self) -> Result<(), String> {
        let nv = (2 * self.m + 1) * self.n;
        if self.vertices.len() != nv {
            return Err(format!("{} vertices, expected {nv} for ({},{})", self.vertices.len(), self.m, self.n));
        }
        if self.triangles.iter().flatten().any(|&p| p >= nv) {
            return Err("triangle refers to a missing vertex".into());
        }
        Ok(())
    }

    /// `W` by unknown column.
    pub fn big_w(&self) -> Vec<Complex64> {
        self.vertices.iter().map(|v| Complex64::new(v.big_w[0], v.big_w[1])).collect()
    }
}
