//! Triangulated grid meshes of a torus parametrization, as OBJ or ASCII PLY.
//!
//! Vertices sit on an `n x m` grid of the fundamental cell with the seams
//! identified, so the mesh is a closed torus (`V - E + F = 0`). The viewer
//! position is the projection to the first three coordinates; the full R^4
//! point is kept losslessly (`#w` records in OBJ, a `w` property in PLY).
//! Floats are written in shortest round-trip form.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64;

use crate::error::MeshError;
use crate::geometry::{Surface, R4};
use crate::grid::{map_indices, Execution};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    Ply,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<R4>,
    pub triangles: Vec<[usize; 3]>,
    /// Free-form header lines (written as comments).
    pub header: Vec<String>,
}

impl Mesh {
    /// Sample `surface` on an `n x m` grid of the cell spanned by `1` and `i r`.
    pub fn torus_grid<S: Surface + ?Sized>(
        surface: &S,
        r: f64,
        n: usize,
        m: usize,
        header: Vec<String>,
        exec: Execution,
    ) -> Result<Self, MeshError> {
        if n < 2 || m < 2 {
            return Err(MeshError::ResolutionTooSmall);
        }
        let vertices = map_indices(exec, n * m, |k| {
            surface.point(Complex64::new((k % n) as f64 / n as f64, r * (k / n) as f64 / m as f64))
        });
        let idx = |i: usize, j: usize| (i % n) + (j % m) * n;
        let mut triangles = Vec::with_capacity(2 * n * m);
        for j in 0..m {
            for i in 0..n {
                let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            }
        }
        Ok(Self { vertices, triangles, header })
    }

    pub fn euler_characteristic(&self) -> i64 {
        let mut edges = std::collections::HashSet::new();
        for t in &self.triangles {
            for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                edges.insert((a.min(b), a.max(b)));
            }
        }
        self.vertices.len() as i64 - edges.len() as i64 + self.triangles.len() as i64
    }

    pub fn to_obj(&self) -> String {
        let mut s = String::new();
        for h in &self.header {
            let _ = writeln!(s, "# {h}");
        }
        for v in &self.vertices {
            let _ = writeln!(s, "v {} {} {}", v[0], v[1], v[2]);
            let _ = writeln!(s, "#w {}", v[3]);
        }
        for t in &self.triangles {
            let _ = writeln!(s, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
        }
        s
    }

    pub fn to_ply(&self) -> String {
        let mut s = String::from("ply\nformat ascii 1.0\n");
        for h in &self.header {
            let _ = writeln!(s, "comment {h}");
        }
        let _ = writeln!(s, "element vertex {}", self.vertices.len());
        for p in ["x", "y", "z", "w"] {
            let _ = writeln!(s, "property double {p}");
        }
        let _ = writeln!(s, "element face {}", self.triangles.len());
        s.push_str("property list uchar int vertex_indices\nend_header\n");
        for v in &self.vertices {
            let _ = writeln!(s, "{} {} {} {}", v[0], v[1], v[2], v[3]);
        }
        for t in &self.triangles {
            let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
        }
        s
    }

    pub fn write(&self, path: &Path, format: MeshFormat) -> Result<(), MeshError> {
        let text = match format {
            MeshFormat::Obj => self.to_obj(),
            MeshFormat::Ply => self.to_ply(),
        };
        fs::write(path, text)?;
        Ok(())
    }

    pub fn read(path: &Path, format: MeshFormat) -> Result<Self, MeshError> {
        let text = fs::read_to_string(path)?;
        match format {
            MeshFormat::Obj => Self::parse_obj(&text),
            MeshFormat::Ply => Self::parse_ply(&text),
        }
    }

    pub fn parse_obj(text: &str) -> Result<Self, MeshError> {
        let num = |t: Option<&str>| -> Result<f64, MeshError> {
            t.ok_or_else(|| MeshError::Parse("missing coordinate".into()))?
                .parse()
                .map_err(|e| MeshError::Parse(format!("{e}")))
        };
        let mut mesh = Mesh { vertices: Vec::new(), triangles: Vec::new(), header: Vec::new() };
        for line in text.lines() {
            let mut it = line.split_whitespace();
            match it.next() {
                Some("v") => mesh.vertices.push([num(it.next())?, num(it.next())?, num(it.next())?, 0.0]),
                Some("#w") => {
                    let w = num(it.next())?;
                    let last = mesh.vertices.last_mut().ok_or_else(|| MeshError::Parse("#w before any vertex".into()))?;
                    last[3] = w;
                }
                Some("f") => {
                    let mut t = [0usize; 3];
                    for slot in t.iter_mut() {
                        let tok = it.next().ok_or_else(|| MeshError::Parse("short face".into()))?;
                        let i: usize = tok
                            .split('/')
                            .next()
                            .unwrap_or("")
                            .parse()
                            .map_err(|e| MeshError::Parse(format!("{e}")))?;
                        *slot = i.checked_sub(1).ok_or_else(|| MeshError::Parse("zero face index".into()))?;
                    }
                    mesh.triangles.push(t);
                }
                Some("#") => mesh.header.push(line.trim_start_matches('#').trim_start().to_string()),
                _ => {}
            }
        }
        Ok(mesh)
    }

    pub fn parse_ply(text: &str) -> Result<Self, MeshError> {
        let bad = |m: &str| MeshError::Parse(m.to_string());
        let mut lines = text.lines();
        if lines.next() != Some("ply") {
            return Err(bad("missing ply magic"));
        }
        let (mut nv, mut nf) = (0usize, 0usize);
        let mut header = Vec::new();
        for line in lines.by_ref() {
            let mut it = line.split_whitespace();
            match (it.next(), it.next()) {
                (Some("element"), Some("vertex")) => nv = it.next().and_then(|s| s.parse().ok()).ok_or_else(|| bad("vertex count"))?,
                (Some("element"), Some("face")) => nf = it.next().and_then(|s| s.parse().ok()).ok_or_else(|| bad("face count"))?,
                (Some("comment"), _) => header.push(line["comment ".len().min(line.len())..].to_string()),
                (Some("end_header"), _) => break,
                _ => {}
            }
        }
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let line = lines.next().ok_or_else(|| bad("truncated vertices"))?;
            let v: Vec<f64> = line
                .split_whitespace()
                .map(|s| s.parse().map_err(|e| MeshError::Parse(format!("{e}"))))
                .collect::<Result<_, _>>()?;
            if v.len() != 4 {
                return Err(bad("vertex needs four coordinates"));
            }
            vertices.push([v[0], v[1], v[2], v[3]]);
        }
        let mut triangles = Vec::with_capacity(nf);
        for _ in 0..nf {
            let line = lines.next().ok_or_else(|| bad("truncated faces"))?;
            let v: Vec<usize> = line
                .split_whitespace()
                .map(|s| s.parse().map_err(|e| MeshError::Parse(format!("{e}"))))
                .collect::<Result<_, _>>()?;
            if v.len() != 4 || v[0] != 3 {
                return Err(bad("only triangles are supported"));
            }
            triangles.push([v[1], v[2], v[3]]);
        }
        Ok(Mesh { vertices, triangles, header })
    }
}
