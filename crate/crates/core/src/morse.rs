//! Catalog scalar fields with analytic derivatives, their critical points
//! and Morse counts.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::complex::{Mesh, Model, Point};
use crate::error::{Error, Result};
use crate::exec::Execution;

/// Newton stops once `‖∇f‖ ≤ NEWTON_TOL · scale(f)`.
pub const NEWTON_TOL: f64 = 1e-12;
pub const NEWTON_MAX_ITER: usize = 50;
/// Converged roots closer than this fraction of the model diameter merge.
pub const DEDUPE_RADIUS: f64 = 1e-6;
/// `|ξ_j| ≥ NONDEGENERACY · max|ξ|` is required of every Hessian eigenvalue.
pub const NONDEGENERACY: f64 = 1e-8;

/// A smooth function on a model, in model (length) coordinates.
pub trait ScalarField: Sync {
    fn value(&self, x: &Point) -> f64;
    fn gradient(&self, x: &Point) -> [f64; 3];
    fn hessian(&self, x: &Point) -> [[f64; 3]; 3];
    /// Typical gradient magnitude, the unit of the Newton tolerance.
    fn scale(&self) -> f64;
    /// Shortest length over which the function changes appreciably.
    fn feature_length(&self) -> f64;
}

/// The closed-form field catalog. Angles are `θ = 2πx/L` per periodic axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "kebab-case")]
pub enum FieldKind {
    /// `cos θ` on the circle, `cos θ₁` on the torus.
    CosTheta,
    /// `cos kθ` on the circle, `cos kθ₁` on the torus.
    CosKTheta { k: f64 },
    /// `cos θ₁ + cos θ₂`.
    SumCos,
    /// `cos 2θ₁ + cos θ₂`.
    Cos2PlusCos,
    /// `cos θ₁ + ε cos θ₂`.
    Tilted { eps: f64 },
    /// `z` on an embedded surface.
    Height,
    /// `f ≡ 0` on any model.
    Zero,
}

impl FieldKind {
    pub const IDS: [&'static str; 7] = [
        "cos-theta",
        "cos-k-theta",
        "sum-cos",
        "cos2-plus-cos",
        "tilted",
        "height",
        "zero",
    ];

    /// Catalog lookup with named real parameters; missing or unknown
    /// parameters are errors.
    pub fn parse(id: &str, params: &BTreeMap<String, f64>) -> Result<Self> {
        let required: &[&str] = match id {
            "cos-k-theta" => &["k"],
            "tilted" => &["eps"],
            "cos-theta" | "sum-cos" | "cos2-plus-cos" | "height" | "zero" => &[],
            _ => {
                return Err(Error::invalid(format!(
                    "unknown field `{id}` (expected one of {})",
                    Self::IDS.join(", ")
                )))
            }
        };
        for key in params.keys() {
            if !required.contains(&key.as_str()) {
                return Err(Error::invalid(format!(
                    "field `{id}` takes no parameter `{key}`"
                )));
            }
        }
        let get = |key: &str| {
            params
                .get(key)
                .copied()
                .ok_or_else(|| Error::invalid(format!("field `{id}` needs parameter `{key}`")))
        };
        let kind = match id {
            "cos-theta" => FieldKind::CosTheta,
            "cos-k-theta" => FieldKind::CosKTheta { k: get("k")? },
            "sum-cos" => FieldKind::SumCos,
            "cos2-plus-cos" => FieldKind::Cos2PlusCos,
            "tilted" => FieldKind::Tilted { eps: get("eps")? },
            "height" => FieldKind::Height,
            _ => FieldKind::Zero,
        };
        kind.validate()?;
        Ok(kind)
    }

    pub fn id(&self) -> &'static str {
        match self {
            FieldKind::CosTheta => "cos-theta",
            FieldKind::CosKTheta { .. } => "cos-k-theta",
            FieldKind::SumCos => "sum-cos",
            FieldKind::Cos2PlusCos => "cos2-plus-cos",
            FieldKind::Tilted { .. } => "tilted",
            FieldKind::Height => "height",
            FieldKind::Zero => "zero",
        }
    }

    pub fn params(&self) -> BTreeMap<String, f64> {
        let mut m = BTreeMap::new();
        match *self {
            FieldKind::CosKTheta { k } => {
                m.insert("k".to_string(), k);
            }
            FieldKind::Tilted { eps } => {
                m.insert("eps".to_string(), eps);
            }
            _ => {}
        }
        m
    }

    fn validate(&self) -> Result<()> {
        match *self {
            FieldKind::CosKTheta { k } if !(k >= 1.0 && k.fract() == 0.0 && k.is_finite()) => Err(
                Error::invalid(format!("cos-k-theta needs a positive integer k, got {k}")),
            ),
            FieldKind::Tilted { eps } if !eps.is_finite() => Err(Error::invalid(format!(
                "tilted needs finite eps, got {eps}"
            ))),
            _ => Ok(()),
        }
    }

    /// Binds the catalog entry to a model, checking the coordinate domain.
    pub fn bind(&self, model: &Model) -> Result<Field> {
        self.validate()?;
        let mismatch = || Error::DomainMismatch {
            field: self.id().to_string(),
            model: model.name().to_string(),
        };
        // each term is (axis, amplitude, wave number)
        let terms = match (self, model) {
            (FieldKind::Zero, _) => Vec::new(),
            (FieldKind::Height, Model::Surface) => Vec::new(),
            (FieldKind::Height, _) | (_, Model::Surface) => return Err(mismatch()),
            (FieldKind::CosTheta, _) => vec![(0, 1.0, 1.0)],
            (FieldKind::CosKTheta { k }, _) => vec![(0, 1.0, *k)],
            (FieldKind::SumCos, Model::FlatTorus { .. }) => vec![(0, 1.0, 1.0), (1, 1.0, 1.0)],
            (FieldKind::Cos2PlusCos, Model::FlatTorus { .. }) => vec![(0, 1.0, 2.0), (1, 1.0, 1.0)],
            (FieldKind::Tilted { eps }, Model::FlatTorus { .. }) => {
                vec![(0, 1.0, 1.0), (1, *eps, 1.0)]
            }
            _ => return Err(mismatch()),
        };
        let periods = model.periods().unwrap_or_default();
        let terms = terms
            .into_iter()
            .map(|(axis, amp, k)| Term {
                axis,
                amp,
                freq: 2.0 * PI * k / periods[axis],
            })
            .collect();
        Ok(Field {
            kind: self.clone(),
            model: model.clone(),
            terms,
        })
    }
}

impl fmt::Display for FieldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())?;
        for (k, v) in self.params() {
            write!(f, " {k}={v}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Term {
    axis: usize,
    amp: f64,
    /// Angular frequency per unit length.
    freq: f64,
}

/// A catalog field bound to a model. Periodic fields are sums of
/// `a·cos(ω x_axis)`, so their Hessian is diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    kind: FieldKind,
    model: Model,
    terms: Vec<Term>,
}

impl Field {
    pub fn kind(&self) -> &FieldKind {
        &self.kind
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    fn is_height(&self) -> bool {
        self.kind == FieldKind::Height
    }
}

impl ScalarField for Field {
    fn value(&self, x: &Point) -> f64 {
        if self.is_height() {
            return x[2];
        }
        self.terms
            .iter()
            .map(|t| t.amp * (t.freq * x[t.axis]).cos())
            .sum()
    }

    fn gradient(&self, x: &Point) -> [f64; 3] {
        let mut g = [0.0; 3];
        if self.is_height() {
            g[2] = 1.0;
        }
        for t in &self.terms {
            g[t.axis] -= t.amp * t.freq * (t.freq * x[t.axis]).sin();
        }
        g
    }

    fn hessian(&self, x: &Point) -> [[f64; 3]; 3] {
        let mut h = [[0.0; 3]; 3];
        for t in &self.terms {
            h[t.axis][t.axis] -= t.amp * t.freq * t.freq * (t.freq * x[t.axis]).cos();
        }
        h
    }

    fn scale(&self) -> f64 {
        let s: f64 = self.terms.iter().map(|t| t.amp.abs() * t.freq).sum();
        if s > 0.0 {
            s
        } else {
            1.0
        }
    }

    fn feature_length(&self) -> f64 {
        let w = self.terms.iter().map(|t| t.freq).fold(0.0, f64::max);
        if w > 0.0 {
            1.0 / w
        } else {
            match self.model.periods() {
                Some(p) => p.iter().copied().fold(f64::INFINITY, f64::min) / (2.0 * PI),
                None => 1.0,
            }
        }
    }
}

/// Field values at the vertices of a mesh.
pub fn evaluate_field(kind: &FieldKind, mesh: &Mesh) -> Result<Vec<f64>> {
    let field = kind.bind(mesh.model())?;
    Ok(mesh.points().iter().map(|p| field.value(p)).collect())
}

/// Field values at the barycenters of the p-simplices.
pub fn evaluate_at_barycenters(field: &dyn ScalarField, mesh: &Mesh, p: usize) -> Vec<f64> {
    mesh.barycenters(p).iter().map(|b| field.value(b)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    /// Model coordinates.
    pub location: Point,
    pub value: f64,
    /// Hessian eigenvalues, ascending.
    pub xi: Vec<f64>,
    /// Number of negative Hessian eigenvalues.
    pub index: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MorseData {
    pub dimension: usize,
    pub points: Vec<CriticalPoint>,
    /// Non-fatal search diagnostics.
    pub warnings: Vec<String>,
}

impl MorseData {
    pub fn empty(dimension: usize) -> Self {
        Self {
            dimension,
            ..Default::default()
        }
    }
}

/// Number of critical points of each index.
pub fn morse_counts(data: &MorseData) -> Vec<usize> {
    let mut c = vec![0; data.dimension + 1];
    for p in &data.points {
        c[p.index] += 1;
    }
    c
}

pub fn find_critical_points(kind: &FieldKind, mesh: &Mesh) -> Result<MorseData> {
    find_critical_points_with(kind, mesh, Execution::default())
}

/// Newton on `∇f = 0` from every vertex (periodic models) or discrete link
/// classification (embedded surfaces), then Morse classification.
pub fn find_critical_points_with(
    kind: &FieldKind,
    mesh: &Mesh,
    exec: Execution,
) -> Result<MorseData> {
    let field = kind.bind(mesh.model())?;
    match mesh.model() {
        Model::Surface => surface_critical_points(&field, mesh),
        _ => newton_critical_points(&field, mesh, exec),
    }
}

/// Critical points of an arbitrary field on a periodic model mesh.
pub fn newton_critical_points(
    field: &dyn ScalarField,
    mesh: &Mesh,
    exec: Execution,
) -> Result<MorseData> {
    let dim = mesh.dimension();
    let periods = mesh
        .model()
        .periods()
        .ok_or_else(|| Error::invalid("Newton search needs a periodic model"))?;
    let tol = NEWTON_TOL * field.scale();
    let max_step = 0.25 * field.feature_length();
    let roots: Vec<Option<Point>> = exec.map(mesh.points(), |seed| {
        newton(field, *seed, dim, tol, max_step)
    });

    let radius = DEDUPE_RADIUS * mesh.diameter();
    let mut found: Vec<Point> = roots.into_iter().flatten().map(|p| mesh.wrap(p)).collect();
    found.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut unique: Vec<Point> = Vec::new();
    for p in found {
        if !unique
            .iter()
            .any(|q| periodic_distance(&p, q, &periods) < radius)
        {
            unique.push(p);
        }
    }

    let mut warnings = Vec::new();
    let near_root = |mid: &Point, reach: f64| {
        unique
            .iter()
            .any(|r| periodic_distance(r, mid, &periods) <= reach)
    };
    if dim == 1 {
        // a sign change of f' across an edge brackets a root
        for (e, &[a, b]) in mesh.edges().iter().enumerate() {
            let q = mesh.unwrapped(&[a, b]);
            let (ga, gb) = (field.gradient(&q[0])[0], field.gradient(&q[1])[0]);
            let len = (q[1][0] - q[0][0]).abs();
            if ga * gb < 0.0
                && ga.abs() > tol
                && gb.abs() > tol
                && !near_root(&mesh.barycenters(1)[e], 2.0 * len)
            {
                warnings.push(format!(
                    "incomplete search: f' changes sign across edge ({a}, {b}) with no root nearby"
                ));
            }
        }
    } else {
        // a nonzero winding of ∇f around a triangle encloses a zero
        for (f, tri) in mesh.triangles().iter().enumerate() {
            let q = mesh.unwrapped(tri);
            let g: Vec<[f64; 3]> = q.iter().map(|x| field.gradient(x)).collect();
            if g.iter().any(|v| v[0].hypot(v[1]) <= tol) {
                continue;
            }
            let turn: f64 = (0..3)
                .map(|i| {
                    let (u, v) = (g[i], g[(i + 1) % 3]);
                    (u[0] * v[1] - u[1] * v[0]).atan2(u[0] * v[0] + u[1] * v[1])
                })
                .sum();
            let span = (0..3)
                .map(|i| periodic_distance(&q[i], &q[(i + 1) % 3], &periods))
                .fold(0.0, f64::max);
            if turn.abs() > PI && !near_root(&mesh.barycenters(2)[f], 2.0 * span) {
                warnings.push(format!(
                    "incomplete search: the gradient winds around triangle {tri:?} with no root nearby"
                ));
            }
        }
    }
    for w in warnings.iter().take(5) {
        log::warn!("{w}");
    }

    let mut points = Vec::with_capacity(unique.len());
    for loc in unique {
        let h = field.hessian(&loc);
        let xi = sym_eigenvalues(&h, dim);
        points.push(CriticalPoint {
            location: loc,
            value: field.value(&loc),
            index: xi.iter().filter(|&&x| x < 0.0).count(),
            xi,
        });
    }
    enforce_morse(&points)?;
    Ok(MorseData {
        dimension: dim,
        points,
        warnings,
    })
}

fn enforce_morse(points: &[CriticalPoint]) -> Result<()> {
    let max = points
        .iter()
        .flat_map(|p| p.xi.iter())
        .fold(0.0, |m: f64, x| m.max(x.abs()));
    for p in points {
        if let Some(x) =
            p.xi.iter()
                .find(|x| !(x.abs() >= NONDEGENERACY * max) || max == 0.0)
        {
            return Err(Error::NotMorse(format!(
                "Hessian eigenvalue {x:e} at {:?} is below {NONDEGENERACY:e} of the largest ({max:e})",
                &p.location[..]
            )));
        }
    }
    Ok(())
}

fn newton(
    field: &dyn ScalarField,
    mut x: Point,
    dim: usize,
    tol: f64,
    max_step: f64,
) -> Option<Point> {
    for _ in 0..=NEWTON_MAX_ITER {
        let g = field.gradient(&x);
        let gn = (0..dim).map(|a| g[a] * g[a]).sum::<f64>().sqrt();
        if gn <= tol {
            return Some(x);
        }
        let h = field.hessian(&x);
        let step = match dim {
            1 => {
                if h[0][0] == 0.0 {
                    return None;
                }
                [g[0] / h[0][0], 0.0]
            }
            _ => {
                let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
                if det == 0.0 || !det.is_finite() {
                    return None;
                }
                [
                    (h[1][1] * g[0] - h[0][1] * g[1]) / det,
                    (h[0][0] * g[1] - h[1][0] * g[0]) / det,
                ]
            }
        };
        let sn = (step[0] * step[0] + step[1] * step[1]).sqrt();
        let damp = if sn > max_step { max_step / sn } else { 1.0 };
        for a in 0..dim {
            x[a] -= damp * step[a];
        }
    }
    None
}

fn periodic_distance(a: &Point, b: &Point, periods: &[f64]) -> f64 {
    let mut s = 0.0;
    for a_ in 0..3 {
        let mut d = a[a_] - b[a_];
        if let Some(&l) = periods.get(a_) {
            d -= l * (d / l).round();
        }
        s += d * d;
    }
    s.sqrt()
}

/// Eigenvalues of the leading `dim × dim` block, ascending.
fn sym_eigenvalues(h: &[[f64; 3]; 3], dim: usize) -> Vec<f64> {
    match dim {
        1 => vec![h[0][0]],
        _ => {
            let (a, b, c) = (h[0][0], 0.5 * (h[0][1] + h[1][0]), h[1][1]);
            let mean = 0.5 * (a + c);
            let r = (0.25 * (a - c) * (a - c) + b * b).sqrt();
            vec![mean - r, mean + r]
        }
    }
}

/// Piecewise-linear classification: a vertex is critical when the sign of
/// `f(u) − f(v)` over its link ring is constant (extremum) or changes four
/// times (saddle). Ties are broken by vertex index. Hessian magnitudes come
/// from a least-squares quadratic fit over the one-ring in the tangent plane;
/// signs follow the discrete index.
fn surface_critical_points(field: &Field, mesh: &Mesh) -> Result<MorseData> {
    let f: Vec<f64> = mesh.points().iter().map(|p| field.value(p)).collect();
    let above = |u: usize, v: usize| f[u] > f[v] || (f[u] == f[v] && u > v);
    let rings = link_rings(mesh)?;
    let mut points = Vec::new();
    for (v, ring) in rings.iter().enumerate() {
        let signs: Vec<bool> = ring.iter().map(|&u| above(u, v)).collect();
        let changes = (0..signs.len())
            .filter(|&i| signs[i] != signs[(i + 1) % signs.len()])
            .count();
        let index = match changes {
            0 if signs[0] => 0,
            0 => 2,
            2 => continue,
            4 => 1,
            _ => {
                return Err(Error::NotMorse(format!(
                    "vertex {v} is a degenerate saddle ({} sign changes around its link)",
                    changes
                )))
            }
        };
        let fitted = ring_hessian(mesh, &f, v, ring);
        let mut xi = if fitted.iter().filter(|&&x| x < 0.0).count() == index {
            fitted
        } else {
            let mut m: Vec<f64> = fitted.iter().map(|x| x.abs()).collect();
            match index {
                0 => {}
                2 => m.iter_mut().for_each(|x| *x = -*x),
                _ => m[0] = -m[0],
            }
            m
        };
        xi.sort_by(f64::total_cmp);
        points.push(CriticalPoint {
            location: mesh.points()[v],
            value: f[v],
            xi,
            index,
        });
    }
    enforce_morse(&points)?;
    Ok(MorseData {
        dimension: 2,
        points,
        warnings: Vec::new(),
    })
}

/// Neighbours of each vertex in cyclic order around it.
fn link_rings(mesh: &Mesh) -> Result<Vec<Vec<usize>>> {
    let nv = mesh.points().len();
    let mut link_edges: Vec<Vec<[usize; 2]>> = vec![Vec::new(); nv];
    for t in mesh.triangles() {
        link_edges[t[0]].push([t[1], t[2]]);
        link_edges[t[1]].push([t[0], t[2]]);
        link_edges[t[2]].push([t[0], t[1]]);
    }
    link_edges
        .into_iter()
        .enumerate()
        .map(|(v, mut edges)| {
            let Some(first) = edges.pop() else {
                return Err(Error::invalid(format!("vertex {v} has an empty link")));
            };
            let mut ring = vec![first[0], first[1]];
            while !edges.is_empty() {
                let last = *ring.last().unwrap();
                let pos = edges
                    .iter()
                    .position(|e| e[0] == last || e[1] == last)
                    .ok_or_else(|| {
                        Error::invalid(format!("link of vertex {v} is not a single cycle"))
                    })?;
                let e = edges.swap_remove(pos);
                ring.push(if e[0] == last { e[1] } else { e[0] });
            }
            if ring.first() != ring.last() {
                return Err(Error::invalid(format!("link of vertex {v} is not closed")));
            }
            ring.pop();
            Ok(ring)
        })
        .collect()
}

/// Hessian eigenvalues of `f` at `v` from `f(u) − f(v) ≈ ½ uᵀHu` over the
/// ring, with `u` projected to the least-variance tangent plane.
fn ring_hessian(mesh: &Mesh, f: &[f64], v: usize, ring: &[usize]) -> Vec<f64> {
    let pv = mesh.points()[v];
    let offsets: Vec<Point> = ring
        .iter()
        .map(|&u| {
            let q = mesh.points()[u];
            [q[0] - pv[0], q[1] - pv[1], q[2] - pv[2]]
        })
        .collect();
    let k = offsets.len() as f64;
    let mean: Vec<f64> = (0..3)
        .map(|a| offsets.iter().map(|d| d[a]).sum::<f64>() / k)
        .collect();
    let mut cov = vec![0.0; 9];
    for d in &offsets {
        for i in 0..3 {
            for j in 0..3 {
                cov[i + 3 * j] += (d[i] - mean[i]) * (d[j] - mean[j]);
            }
        }
    }
    let (_, vecs) = crate::eigen::dense_symmetric_eigen(3, &cov).expect("3x3 eigendecomposition");
    let e1 = [vecs[(0, 2)], vecs[(1, 2)], vecs[(2, 2)]];
    let e2 = [vecs[(0, 1)], vecs[(1, 1)], vecs[(2, 1)]];
    // normal equations for (a, b, c) in ½(a x² + 2b xy + c y²)
    let mut ata = [[0.0; 3]; 3];
    let mut atb = [0.0; 3];
    for (d, &u) in offsets.iter().zip(ring) {
        let x = d[0] * e1[0] + d[1] * e1[1] + d[2] * e1[2];
        let y = d[0] * e2[0] + d[1] * e2[1] + d[2] * e2[2];
        let row = [0.5 * x * x, x * y, 0.5 * y * y];
        let rhs = f[u] - f[v];
        for i in 0..3 {
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
            atb[i] += row[i] * rhs;
        }
    }
    // a tiny ridge keeps symmetric rings (no mixed term information) solvable
    let ridge = 1e-12 * (ata[0][0] + ata[1][1] + ata[2][2]);
    for (i, row) in ata.iter_mut().enumerate() {
        row[i] += ridge;
    }
    let sol = solve3(ata, atb).unwrap_or([0.0; 3]);
    let h = [[sol[0], sol[1], 0.0], [sol[1], sol[2], 0.0], [0.0; 3]];
    sym_eigenvalues(&h, 2)
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for c in 0..3 {
        let piv = (c..3).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[piv][c].abs() < 1e-300 {
            return None;
        }
        a.swap(c, piv);
        b.swap(c, piv);
        for r in c + 1..3 {
            let m = a[r][c] / a[c][c];
            for k in c..3 {
                a[r][k] -= m * a[c][k];
            }
            b[r] -= m * b[c];
        }
    }
    let mut x = [0.0; 3];
    for c in (0..3).rev() {
        let s: f64 = (c + 1..3).map(|k| a[c][k] * x[k]).sum();
        x[c] = (b[c] - s) / a[c][c];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::{build_circle, build_flat_torus, icosphere_like, octahedron};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn torus(n: usize) -> Mesh {
        build_flat_torus(n, n, 2.0 * PI, 2.0 * PI).unwrap()
    }

    #[test]
    fn evaluation_examples() {
        let m = build_circle(4, 1.0).unwrap();
        let v = evaluate_field(&FieldKind::CosTheta, &m).unwrap();
        for (a, b) in v.iter().zip([1.0, 0.0, -1.0, 0.0]) {
            assert!((a - b).abs() < 1e-15);
        }
        let t = torus(4);
        assert_eq!(evaluate_field(&FieldKind::SumCos, &t).unwrap()[0], 2.0);
        assert!(matches!(
            evaluate_field(&FieldKind::SumCos, &m),
            Err(Error::DomainMismatch { .. })
        ));
        assert!(evaluate_field(&FieldKind::Height, &t).is_err());
    }

    #[test]
    fn parse_rejects_missing_and_unknown_params() {
        let none = BTreeMap::new();
        assert!(FieldKind::parse("tilted", &none).is_err());
        assert!(FieldKind::parse("nope", &none).is_err());
        let mut p = BTreeMap::new();
        p.insert("eps".to_string(), 0.3);
        assert_eq!(
            FieldKind::parse("tilted", &p).unwrap(),
            FieldKind::Tilted { eps: 0.3 }
        );
        assert!(FieldKind::parse("sum-cos", &p).is_err());
        let mut k = BTreeMap::new();
        k.insert("k".to_string(), 1.5);
        assert!(FieldKind::parse("cos-k-theta", &k).is_err());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let cases = [
            (
                FieldKind::CosKTheta { k: 3.0 },
                Model::Circle { radius: 1.7 },
            ),
            (
                FieldKind::SumCos,
                Model::FlatTorus {
                    l1: 2.0 * PI,
                    l2: 3.0,
                },
            ),
            (
                FieldKind::Cos2PlusCos,
                Model::FlatTorus {
                    l1: 2.0 * PI,
                    l2: 2.0 * PI,
                },
            ),
            (
                FieldKind::Tilted { eps: 0.3 },
                Model::FlatTorus { l1: 1.0, l2: 2.0 },
            ),
        ];
        for (kind, model) in cases {
            let f = kind.bind(&model).unwrap();
            let dim = model.dimension();
            let h = 1e-5;
            for _ in 0..100 {
                let x: Point = [rng.random_range(0.0..6.0), rng.random_range(0.0..6.0), 0.0];
                let g = f.gradient(&x);
                let hs = f.hessian(&x);
                for a in 0..dim {
                    let (mut xp, mut xm) = (x, x);
                    xp[a] += h;
                    xm[a] -= h;
                    let fd = (f.value(&xp) - f.value(&xm)) / (2.0 * h);
                    assert!((fd - g[a]).abs() <= 1e-6 * f.scale(), "{kind} grad");
                    for b in 0..dim {
                        let fd = (f.gradient(&xp)[b] - f.gradient(&xm)[b]) / (2.0 * h);
                        assert!(
                            (fd - hs[a][b]).abs() <= 1e-6 * f.scale() * f.scale(),
                            "{kind} hess"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn circle_cos_theta() {
        let d =
            find_critical_points(&FieldKind::CosTheta, &build_circle(64, 1.0).unwrap()).unwrap();
        assert_eq!(morse_counts(&d), vec![1, 1]);
        let max = d.points.iter().find(|p| p.index == 1).unwrap();
        assert!(max.location[0].abs() < 1e-9 || (max.location[0] - 2.0 * PI).abs() < 1e-9);
        assert!((max.xi[0] + 1.0).abs() < 1e-12);
        let min = d.points.iter().find(|p| p.index == 0).unwrap();
        assert!((min.location[0] - PI).abs() < 1e-9);
        assert!((min.xi[0] - 1.0).abs() < 1e-12);
        assert!(d.warnings.is_empty());
    }

    #[test]
    fn torus_catalog_counts() {
        let d = find_critical_points(&FieldKind::SumCos, &torus(16)).unwrap();
        assert_eq!(d.points.len(), 4);
        assert_eq!(morse_counts(&d), vec![1, 2, 1]);
        let min = d.points.iter().find(|p| p.index == 0).unwrap();
        assert!((min.location[0] - PI).abs() < 1e-9 && (min.location[1] - PI).abs() < 1e-9);
        assert!((min.xi[0] - 1.0).abs() < 1e-12 && (min.xi[1] - 1.0).abs() < 1e-12);
        let d = find_critical_points(&FieldKind::Cos2PlusCos, &torus(16)).unwrap();
        assert_eq!(d.points.len(), 8);
        assert_eq!(morse_counts(&d), vec![2, 4, 2]);
        let d = find_critical_points(&FieldKind::Tilted { eps: 0.3 }, &torus(16)).unwrap();
        assert_eq!(morse_counts(&d), vec![1, 2, 1]);
    }

    #[test]
    fn doubled_seed_density_gives_same_set() {
        let a = find_critical_points(&FieldKind::Cos2PlusCos, &torus(12)).unwrap();
        let b = find_critical_points(&FieldKind::Cos2PlusCos, &torus(24)).unwrap();
        assert_eq!(a.points.len(), b.points.len());
        for (p, q) in a.points.iter().zip(&b.points) {
            assert!(periodic_distance(&p.location, &q.location, &[2.0 * PI; 2]) < 1e-9);
            assert_eq!(p.index, q.index);
        }
    }

    #[test]
    fn zero_field_is_not_morse() {
        assert!(matches!(
            find_critical_points(&FieldKind::Zero, &build_circle(8, 1.0).unwrap()),
            Err(Error::NotMorse(_))
        ));
        assert!(find_critical_points(&FieldKind::CosTheta, &torus(8)).is_err());
    }

    #[test]
    fn sphere_height() {
        let d = find_critical_points(&FieldKind::Height, &octahedron().unwrap()).unwrap();
        assert_eq!(morse_counts(&d), vec![1, 0, 1]);
        let d = find_critical_points(&FieldKind::Height, &icosphere_like(3).unwrap()).unwrap();
        assert_eq!(morse_counts(&d), vec![1, 0, 1]);
        for p in &d.points {
            // z ≈ ±(1 − r²/2) near the poles
            for x in &p.xi {
                assert!((x.abs() - 1.0).abs() < 0.1, "{x}");
            }
        }
        assert_eq!(morse_counts(&MorseData::empty(2)), vec![0, 0, 0]);
    }

    #[test]
    fn poincare_hopf_on_catalog() {
        for kind in [
            FieldKind::SumCos,
            FieldKind::Cos2PlusCos,
            FieldKind::Tilted { eps: 0.5 },
        ] {
            let c = morse_counts(&find_critical_points(&kind, &torus(10)).unwrap());
            assert_eq!(c[0] as i64 - c[1] as i64 + c[2] as i64, 0);
        }
        let c = morse_counts(
            &find_critical_points(
                &FieldKind::CosKTheta { k: 3.0 },
                &build_circle(50, 2.0).unwrap(),
            )
            .unwrap(),
        );
        assert_eq!(c, vec![3, 3]);
    }
}
