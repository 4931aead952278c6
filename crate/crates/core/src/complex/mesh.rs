use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Replacement for the vanishing circumcentric weight of the hypotenuses in
/// the built-in torus triangulation, as a fraction of the barycentric weight.
pub const ZERO_WEIGHT_FLOOR: f64 = 1e-4;

/// Which compact manifold a mesh discretizes. Coordinates are in length
/// units: arc length on the circle, `(x, y)` on the flat torus and ambient
/// `(x, y, z)` for embedded surfaces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Model {
    Circle { radius: f64 },
    FlatTorus { l1: f64, l2: f64 },
    Surface,
}

impl Model {
    pub fn dimension(&self) -> usize {
        match self {
            Model::Circle { .. } => 1,
            Model::FlatTorus { .. } | Model::Surface => 2,
        }
    }

    /// Period per coordinate axis for the periodic models.
    pub fn periods(&self) -> Option<Vec<f64>> {
        match *self {
            Model::Circle { radius } => Some(vec![2.0 * PI * radius]),
            Model::FlatTorus { l1, l2 } => Some(vec![l1, l2]),
            Model::Surface => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Model::Circle { .. } => "circle",
            Model::FlatTorus { .. } => "torus",
            Model::Surface => "surface",
        }
    }

    /// Euler characteristic for the periodic models.
    pub fn euler_characteristic(&self) -> Option<i64> {
        match self {
            Model::Circle { .. } | Model::FlatTorus { .. } => Some(0),
            Model::Surface => None,
        }
    }

    /// Known Betti numbers for the periodic models.
    pub fn betti(&self) -> Option<Vec<usize>> {
        match self {
            Model::Circle { .. } => Some(vec![1, 1]),
            Model::FlatTorus { .. } => Some(vec![1, 2, 1]),
            Model::Surface => None,
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub type Point = [f64; 3];

/// A simplicial mesh of a closed 1- or 2-manifold with its circumcentric
/// dual geometry.
#[derive(Clone, Debug)]
pub struct Mesh {
    model: Model,
    points: Vec<Point>,
    edges: Vec<[usize; 2]>,
    triangles: Vec<[usize; 3]>,
    /// Primal volume per degree (1 for vertices).
    volumes: Vec<Vec<f64>>,
    /// Circumcentric dual volume per degree.
    dual_volumes: Vec<Vec<f64>>,
    barycenters: Vec<Vec<Point>>,
    /// Consistently wound faces of a loaded surface, for export.
    wound: Vec<[usize; 3]>,
    /// Whether vanishing dual weights are floored instead of rejected.
    floor_zero_weights: bool,
}

impl Mesh {
    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn dimension(&self) -> usize {
        self.model.dimension()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    /// Number of simplices of each degree.
    pub fn counts(&self) -> Vec<usize> {
        let mut c = vec![self.points.len(), self.edges.len()];
        if self.dimension() == 2 {
            c.push(self.triangles.len());
        }
        c
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.counts()
            .iter()
            .enumerate()
            .map(|(p, &n)| if p % 2 == 0 { n as i64 } else { -(n as i64) })
            .sum()
    }

    pub fn volumes(&self, p: usize) -> &[f64] {
        &self.volumes[p]
    }

    pub fn dual_volumes(&self, p: usize) -> &[f64] {
        &self.dual_volumes[p]
    }

    pub fn barycenters(&self, p: usize) -> &[Point] {
        &self.barycenters[p]
    }

    /// Total length (1-D) or area (2-D).
    pub fn total_volume(&self) -> f64 {
        self.volumes[self.dimension()].iter().sum()
    }

    /// Largest distance scale of the model, used for relative tolerances.
    pub fn diameter(&self) -> f64 {
        match self.model.periods() {
            Some(p) => p.iter().map(|x| x * x).sum::<f64>().sqrt(),
            None => {
                let mut lo = [f64::INFINITY; 3];
                let mut hi = [f64::NEG_INFINITY; 3];
                for q in &self.points {
                    for a in 0..3 {
                        lo[a] = lo[a].min(q[a]);
                        hi[a] = hi[a].max(q[a]);
                    }
                }
                (0..3).map(|a| (hi[a] - lo[a]).powi(2)).sum::<f64>().sqrt()
            }
        }
    }

    /// Vertex coordinates of a simplex, unwrapped across periodic seams so
    /// that they are close to the first vertex.
    pub fn unwrapped(&self, vertices: &[usize]) -> Vec<Point> {
        let base = self.points[vertices[0]];
        let periods = self.model.periods();
        vertices
            .iter()
            .map(|&v| {
                let mut q = self.points[v];
                if let Some(per) = &periods {
                    for (a, &l) in per.iter().enumerate() {
                        q[a] -= l * ((q[a] - base[a]) / l).round();
                    }
                }
                q
            })
            .collect()
    }

    /// Wraps a model-coordinate point into the fundamental domain.
    pub fn wrap(&self, mut q: Point) -> Point {
        if let Some(per) = self.model.periods() {
            for (a, &l) in per.iter().enumerate() {
                q[a] = q[a].rem_euclid(l);
            }
        }
        q
    }

    /// Vertex-to-vertex adjacency through edges.
    pub fn vertex_neighbors(&self) -> Vec<Vec<usize>> {
        let mut nb = vec![Vec::new(); self.points.len()];
        for &[a, b] in &self.edges {
            nb[a].push(b);
            nb[b].push(a);
        }
        for l in &mut nb {
            l.sort_unstable();
        }
        nb
    }

    pub(crate) fn edge_index(&self) -> HashMap<[usize; 2], usize> {
        self.edges
            .iter()
            .enumerate()
            .map(|(i, &e)| (e, i))
            .collect()
    }

    fn assemble(
        model: Model,
        points: Vec<Point>,
        edges: Vec<[usize; 2]>,
        triangles: Vec<[usize; 3]>,
        floor: bool,
    ) -> Result<Self> {
        let mut mesh = Mesh {
            model,
            points,
            edges,
            triangles,
            volumes: Vec::new(),
            dual_volumes: Vec::new(),
            barycenters: Vec::new(),
            wound: Vec::new(),
            floor_zero_weights: floor,
        };
        mesh.validate_faces()?;
        mesh.compute_geometry()?;
        Ok(mesh)
    }

    /// Every face of every listed simplex must be listed, exactly once.
    fn validate_faces(&self) -> Result<()> {
        let nv = self.points.len();
        let mut seen = HashMap::new();
        for (i, e) in self.edges.iter().enumerate() {
            if e[0] >= e[1] || e[1] >= nv {
                return Err(Error::invalid(format!(
                    "edge {i} = {e:?} is not an increasing vertex pair"
                )));
            }
            if seen.insert(*e, i).is_some() {
                return Err(Error::invalid(format!("edge {e:?} listed twice")));
            }
        }
        let mut tri_seen = HashMap::new();
        for (i, t) in self.triangles.iter().enumerate() {
            if !(t[0] < t[1] && t[1] < t[2]) || t[2] >= nv {
                return Err(Error::invalid(format!(
                    "triangle {i} = {t:?} is not an increasing vertex triple"
                )));
            }
            if tri_seen.insert(*t, i).is_some() {
                return Err(Error::invalid(format!("triangle {t:?} listed twice")));
            }
            for f in [[t[1], t[2]], [t[0], t[2]], [t[0], t[1]]] {
                if !seen.contains_key(&f) {
                    return Err(Error::invalid(format!(
                        "face {f:?} of triangle {t:?} is not listed"
                    )));
                }
            }
        }
        Ok(())
    }

    fn compute_geometry(&mut self) -> Result<()> {
        let dim = self.dimension();
        let nv = self.points.len();
        let mut volumes = vec![vec![1.0; nv]];
        let mut bary = vec![self.points.clone()];
        let edge_vol: Vec<f64> = self
            .edges
            .iter()
            .map(|e| {
                let q = self.unwrapped(e);
                dist(&q[0], &q[1])
            })
            .collect();
        let edge_bary: Vec<Point> = self
            .edges
            .iter()
            .map(|e| self.wrap(centroid(&self.unwrapped(e))))
            .collect();
        for (i, &l) in edge_vol.iter().enumerate() {
            if !(l > 0.0) {
                return Err(Error::DegenerateMesh {
                    degree: 1,
                    index: i,
                    weight: l,
                });
            }
        }
        volumes.push(edge_vol);
        bary.push(edge_bary);

        if dim == 1 {
            let mut vdual = vec![0.0; nv];
            for (i, e) in self.edges.iter().enumerate() {
                vdual[e[0]] += 0.5 * volumes[1][i];
                vdual[e[1]] += 0.5 * volumes[1][i];
            }
            self.dual_volumes = vec![vdual, vec![1.0; self.edges.len()]];
        } else {
            let eidx = self.edge_index();
            let mut vdual = vec![0.0; nv];
            let mut edual = vec![0.0; self.edges.len()];
            let mut ebary_dual = vec![0.0; self.edges.len()];
            let mut areas = Vec::with_capacity(self.triangles.len());
            let mut tbary = Vec::with_capacity(self.triangles.len());
            for (ti, t) in self.triangles.iter().enumerate() {
                let q = self.unwrapped(t);
                let area = 0.5 * norm(&cross(&sub(&q[1], &q[0]), &sub(&q[2], &q[0])));
                if !(area > 0.0) {
                    return Err(Error::NegativeArea { face: ti, area });
                }
                let c = centroid(&q);
                areas.push(area);
                tbary.push(self.wrap(c));
                // corner k is opposite the edge (i, j)
                for (k, i, j) in [(0, 1, 2), (1, 0, 2), (2, 0, 1)] {
                    let u = sub(&q[i], &q[k]);
                    let v = sub(&q[j], &q[k]);
                    let cot = dot(&u, &v) / norm(&cross(&u, &v));
                    let len = dist(&q[i], &q[j]);
                    let e = eidx[&sorted2(t[i], t[j])];
                    edual[e] += 0.5 * len * cot;
                    let mid = centroid(&[q[i], q[j]]);
                    ebary_dual[e] += dist(&mid, &c);
                    // circumcentric area share: quarter of |e|·(distance from
                    // circumcenter to e), split between the two endpoints
                    let share = 0.125 * len * len * cot;
                    vdual[t[i]] += share;
                    vdual[t[j]] += share;
                }
            }
            if self.floor_zero_weights {
                for e in 0..edual.len() {
                    if edual[e].abs() <= 1e-12 * volumes[1][e] {
                        edual[e] = ZERO_WEIGHT_FLOOR * ebary_dual[e];
                    }
                }
            }
            volumes.push(areas);
            bary.push(tbary);
            self.dual_volumes = vec![vdual, edual, vec![1.0; self.triangles.len()]];
        }
        self.volumes = volumes;
        self.barycenters = bary;
        Ok(())
    }
}

fn sorted2(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

fn sorted3(mut t: [usize; 3]) -> [usize; 3] {
    t.sort_unstable();
    t
}

pub(crate) fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross(a: &Point, b: &Point) -> Point {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn norm(a: &Point) -> f64 {
    dot(a, a).sqrt()
}

fn dist(a: &Point, b: &Point) -> f64 {
    norm(&sub(a, b))
}

fn centroid(q: &[Point]) -> Point {
    let n = q.len() as f64;
    let mut c = [0.0; 3];
    for p in q {
        for a in 0..3 {
            c[a] += p[a] / n;
        }
    }
    c
}

/// Uniform `n`-gon on the circle of the given radius, vertices at arc
/// lengths `2πR·i/n`.
pub fn build_circle(n: usize, radius: f64) -> Result<Mesh> {
    if n < 3 {
        return Err(Error::invalid(format!(
            "circle needs at least 3 vertices, got {n}"
        )));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::invalid(format!(
            "radius must be positive, got {radius}"
        )));
    }
    let length = 2.0 * PI * radius;
    let points = (0..n)
        .map(|i| [length * i as f64 / n as f64, 0.0, 0.0])
        .collect();
    let edges = (0..n).map(|i| sorted2(i, (i + 1) % n)).collect();
    Mesh::assemble(Model::Circle { radius }, points, edges, Vec::new(), false)
}

/// Periodic right-triangle grid on `[0, l1) × [0, l2)`: each grid cell is
/// split along its (+1, +1) diagonal.
pub fn build_flat_torus(n1: usize, n2: usize, l1: f64, l2: f64) -> Result<Mesh> {
    if n1 < 3 || n2 < 3 {
        return Err(Error::invalid(format!(
            "torus grid needs at least 3x3 vertices, got {n1}x{n2}"
        )));
    }
    if !(l1 > 0.0 && l2 > 0.0 && l1.is_finite() && l2.is_finite()) {
        return Err(Error::invalid(format!(
            "torus side lengths must be positive, got {l1} x {l2}"
        )));
    }
    let (h1, h2) = (l1 / n1 as f64, l2 / n2 as f64);
    let id = |i: usize, j: usize| (i % n1) + n1 * (j % n2);
    let mut points = Vec::with_capacity(n1 * n2);
    for j in 0..n2 {
        for i in 0..n1 {
            points.push([i as f64 * h1, j as f64 * h2, 0.0]);
        }
    }
    let mut edges = Vec::with_capacity(3 * n1 * n2);
    let mut triangles = Vec::with_capacity(2 * n1 * n2);
    for j in 0..n2 {
        for i in 0..n1 {
            let (v00, v10, v11, v01) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            edges.push(sorted2(v00, v10));
            edges.push(sorted2(v00, v01));
            edges.push(sorted2(v00, v11));
            triangles.push(sorted3([v00, v10, v11]));
            triangles.push(sorted3([v00, v11, v01]));
        }
    }
    edges.sort_unstable();
    triangles.sort_unstable();
    Mesh::assemble(Model::FlatTorus { l1, l2 }, points, edges, triangles, true)
}

/// Reads a closed orientable triangulated surface in OFF format:
/// `OFF`, then `V F E`, then `V` lines `x y z`, then `F` lines `3 i j k`.
pub fn load_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_off(&text, path)
}

pub fn parse_off(text: &str, path: &Path) -> Result<Mesh> {
    let perr = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (ln, header) = lines.next().ok_or_else(|| perr(1, "empty file".into()))?;
    let mut header_tokens = header.split_whitespace();
    if header_tokens.next() != Some("OFF") {
        return Err(perr(ln, format!("expected `OFF` header, found `{header}`")));
    }
    let rest: Vec<&str> = header_tokens.collect();
    let (ln, counts) = if rest.is_empty() {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| perr(ln, "missing counts line".into()))?;
        (ln, l.split_whitespace().collect::<Vec<_>>())
    } else {
        (ln, rest)
    };
    if counts.len() < 2 {
        return Err(perr(ln, "counts line must be `V F E`".into()));
    }
    let parse_usize = |s: &str, ln: usize| {
        s.parse::<usize>()
            .map_err(|e| perr(ln, format!("bad integer `{s}`: {e}")))
    };
    let nv = parse_usize(counts[0], ln)?;
    let nf = parse_usize(counts[1], ln)?;

    let mut points = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| perr(ln, format!("expected {nv} vertex lines")))?;
        let xs: Vec<f64> = l
            .split_whitespace()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|e| perr(ln, format!("bad coordinate `{s}`: {e}")))
            })
            .collect::<Result<_>>()?;
        if xs.len() != 3 {
            return Err(perr(
                ln,
                format!("vertex line needs 3 coordinates, got {}", xs.len()),
            ));
        }
        points.push([xs[0], xs[1], xs[2]]);
    }
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| perr(ln, format!("expected {nf} face lines")))?;
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() < 4 || toks[0] != "3" {
            return Err(perr(ln, format!("face line must be `3 i j k`, got `{l}`")));
        }
        let mut f = [0usize; 3];
        for a in 0..3 {
            f[a] = parse_usize(toks[a + 1], ln)?;
            if f[a] >= nv {
                return Err(perr(ln, format!("vertex index {} out of range", f[a])));
            }
        }
        if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
            return Err(perr(ln, format!("face {f:?} repeats a vertex")));
        }
        faces.push(f);
    }
    surface_from_faces(points, faces)
}

/// Validates a closed oriented triangle soup and assembles the mesh.
fn surface_from_faces(points: Vec<Point>, faces: Vec<[usize; 3]>) -> Result<Mesh> {
    // every undirected edge must bound exactly two faces
    let mut incident: HashMap<[usize; 2], Vec<(usize, bool)>> = HashMap::new();
    for (fi, f) in faces.iter().enumerate() {
        for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
            incident.entry(sorted2(a, b)).or_default().push((fi, a < b));
        }
    }
    let mut keys: Vec<_> = incident.keys().copied().collect();
    keys.sort_unstable();
    for k in &keys {
        let n = incident[k].len();
        if n != 2 {
            return Err(Error::NonManifoldEdge {
                a: k[0],
                b: k[1],
                count: n,
            });
        }
    }
    // consistent winding: propagate the orientation of face 0 and report a
    // face whose winding is reversed relative to its neighbours
    let mut adjacency = vec![Vec::new(); faces.len()];
    for k in &keys {
        let inc = &incident[k];
        let (f0, d0) = inc[0];
        let (f1, d1) = inc[1];
        // same traversal direction on a shared edge means opposite windings
        let flips = d0 == d1;
        adjacency[f0].push((f1, flips));
        adjacency[f1].push((f0, flips));
    }
    let mut orient: Vec<Option<bool>> = vec![None; faces.len()];
    for start in 0..faces.len() {
        if orient[start].is_some() {
            continue;
        }
        orient[start] = Some(true);
        let mut stack = vec![start];
        while let Some(f) = stack.pop() {
            let of = orient[f].unwrap();
            for &(g, flips) in &adjacency[f] {
                let want = if flips { !of } else { of };
                match orient[g] {
                    None => {
                        orient[g] = Some(want);
                        stack.push(g);
                    }
                    Some(o) if o != want => {
                        let q: Vec<Point> = faces[g].iter().map(|&v| points[v]).collect();
                        let area = 0.5 * norm(&cross(&sub(&q[1], &q[0]), &sub(&q[2], &q[0])));
                        return Err(Error::NegativeArea {
                            face: g,
                            area: -area,
                        });
                    }
                    _ => {}
                }
            }
        }
    }
    // faces wound against the majority are reported with a negative signed
    // area
    let flipped = orient.iter().filter(|o| **o == Some(false)).count();
    if flipped > 0 {
        let minority = flipped * 2 <= faces.len();
        let g = orient.iter().position(|o| *o == Some(!minority)).unwrap();
        let q: Vec<Point> = faces[g].iter().map(|&v| points[v]).collect();
        let area = 0.5 * norm(&cross(&sub(&q[1], &q[0]), &sub(&q[2], &q[0])));
        return Err(Error::NegativeArea {
            face: g,
            area: -area,
        });
    }
    let mut used = vec![false; points.len()];
    for f in &faces {
        for &v in f {
            used[v] = true;
        }
    }
    if let Some(v) = used.iter().position(|u| !u) {
        return Err(Error::invalid(format!(
            "vertex {v} is not used by any face"
        )));
    }
    let mut edges = keys;
    edges.sort_unstable();
    let mut triangles: Vec<[usize; 3]> = faces.iter().copied().map(sorted3).collect();
    triangles.sort_unstable();
    let mut mesh = Mesh::assemble(Model::Surface, points, edges, triangles, false)?;
    mesh.wound = faces;
    Ok(mesh)
}

/// Regular octahedron with vertices at `±e_i`, consistently wound outward.
pub fn octahedron() -> Result<Mesh> {
    let (points, faces) = octahedron_soup();
    surface_from_faces(points, faces)
}

fn octahedron_soup() -> (Vec<Point>, Vec<[usize; 3]>) {
    let points = vec![
        [1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, -1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0],
    ];
    let faces = vec![
        [0, 2, 4],
        [2, 1, 4],
        [1, 3, 4],
        [3, 0, 4],
        [2, 0, 5],
        [1, 2, 5],
        [3, 1, 5],
        [0, 3, 5],
    ];
    (points, faces)
}

/// Octahedron refined `level` times by midpoint subdivision with vertices
/// projected to the unit sphere.
pub fn icosphere_like(level: usize) -> Result<Mesh> {
    let (mut points, mut faces) = octahedron_soup();
    for _ in 0..level {
        let mut mid: HashMap<[usize; 2], usize> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        for f in &faces {
            let mut m = [0usize; 3];
            for (s, (a, b)) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])]
                .into_iter()
                .enumerate()
            {
                m[s] = *mid.entry(sorted2(a, b)).or_insert_with(|| {
                    let p = [
                        0.5 * (points[a][0] + points[b][0]),
                        0.5 * (points[a][1] + points[b][1]),
                        0.5 * (points[a][2] + points[b][2]),
                    ];
                    let n = norm(&p);
                    points.push([p[0] / n, p[1] / n, p[2] / n]);
                    points.len() - 1
                });
            }
            next.push([f[0], m[0], m[2]]);
            next.push([m[0], f[1], m[1]]);
            next.push([m[2], m[1], f[2]]);
            next.push([m[0], m[1], m[2]]);
        }
        faces = next;
    }
    surface_from_faces(points, faces)
}

/// Writes a mesh as OFF text, keeping the winding of loaded surfaces.
pub fn to_off(mesh: &Mesh) -> String {
    let mut s = format!(
        "OFF\n{} {} {}\n",
        mesh.points.len(),
        mesh.triangles.len(),
        mesh.edges.len()
    );
    for p in &mesh.points {
        s.push_str(&format!("{} {} {}\n", p[0], p[1], p[2]));
    }
    let faces = if mesh.wound.is_empty() {
        &mesh.triangles
    } else {
        &mesh.wound
    };
    for t in faces {
        s.push_str(&format!("3 {} {} {}\n", t[0], t[1], t[2]));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const OCTAHEDRON_OFF: &str = "OFF\n6 8 12\n1 0 0\n-1 0 0\n0 1 0\n0 -1 0\n0 0 1\n0 0 -1\n\
        3 0 2 4\n3 2 1 4\n3 1 3 4\n3 3 0 4\n3 2 0 5\n3 1 2 5\n3 3 1 5\n3 0 3 5\n";

    #[test]
    fn circle_counts_and_length() {
        let m = build_circle(4, 1.0).unwrap();
        assert_eq!(m.counts(), vec![4, 4]);
        assert!((m.total_volume() - 2.0 * PI).abs() <= 1e-12 * 2.0 * PI);
        let m = build_circle(3, 2.0).unwrap();
        for &l in m.volumes(1) {
            assert!((l - 4.0 * PI / 3.0).abs() < 1e-12);
        }
        assert!(matches!(
            build_circle(2, 1.0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn torus_counts_and_area() {
        let m = build_flat_torus(4, 4, 2.0 * PI, 2.0 * PI).unwrap();
        assert_eq!(m.counts(), vec![16, 48, 32]);
        assert_eq!(m.euler_characteristic(), 0);
        let m = build_flat_torus(3, 3, 1.0, 1.0).unwrap();
        assert!((m.total_volume() - 1.0).abs() <= 1e-12);
        assert!(build_flat_torus(2, 5, 1.0, 1.0).is_err());
    }

    #[test]
    fn torus_dual_weights_positive() {
        let m = build_flat_torus(8, 4, 2.0 * PI, PI).unwrap();
        let h = 2.0 * PI / 8.0;
        assert!((PI / 4.0 - h).abs() < 1e-15);
        assert!(m.dual_volumes(0).iter().all(|&w| (w - h * h).abs() < 1e-12));
        assert!(m.dual_volumes(1).iter().all(|&w| w > 0.0));
        // axis edges carry the exact circumcentric dual length h
        let axis = m
            .dual_volumes(1)
            .iter()
            .filter(|&&w| (w - h).abs() < 1e-12)
            .count();
        assert_eq!(axis, 2 * 8 * 4);
    }

    #[test]
    fn octahedron_from_off() {
        let m = parse_off(OCTAHEDRON_OFF, Path::new("oct.off")).unwrap();
        assert_eq!(m.counts(), vec![6, 12, 8]);
        assert_eq!(m.euler_characteristic(), 2);
        // equilateral faces: every vertex gets a third of its four faces
        let face = 3f64.sqrt() / 2.0;
        for &a in m.dual_volumes(0) {
            assert!((a - 4.0 * face / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn off_errors_are_distinct() {
        let p = Path::new("x.off");
        assert!(matches!(
            parse_off("OFF\n3 1 0\n0 0\n", p),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(parse_off("PLY\n", p), Err(Error::Parse { .. })));
        // an edge shared by three triangles
        let fan = "OFF\n5 3 0\n0 0 0\n1 0 0\n0 1 0\n0 -1 0\n0 0 1\n3 0 1 2\n3 0 1 3\n3 0 1 4\n";
        assert!(matches!(
            parse_off(fan, p),
            Err(Error::NonManifoldEdge {
                a: 0,
                b: 1,
                count: 3
            })
        ));
        // one face wound against its neighbours
        let flipped = OCTAHEDRON_OFF.replace("3 0 2 4", "3 2 0 4");
        assert!(matches!(
            parse_off(&flipped, p),
            Err(Error::NegativeArea { .. })
        ));
    }

    #[test]
    fn refined_sphere_is_closed() {
        let m = icosphere_like(3).unwrap();
        assert_eq!(m.euler_characteristic(), 2);
        assert_eq!(m.triangles().len(), 8 * 64);
        assert!(m.dual_volumes(0).iter().all(|&a| a > 0.0));
        let back = parse_off(&to_off(&m), Path::new("s.off")).unwrap();
        assert_eq!(back.counts(), m.counts());
    }
}
