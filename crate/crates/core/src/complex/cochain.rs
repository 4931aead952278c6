use crate::complex::mesh::{Mesh, Model, Point};
use crate::eigen::{dense_symmetric_eigenvalues, smallest_eigenpairs, EigenOptions};
use crate::error::{Error, Result};
use crate::sparse::{CsrMatrix, Incidence};

/// Discrete de Rham data of a mesh: signed coboundaries and diagonal
/// circumcentric Hodge stars.
#[derive(Clone, Debug)]
pub struct CochainComplex {
    mesh: Mesh,
    coboundary: Vec<Incidence>,
    mass: Vec<Vec<f64>>,
}

impl CochainComplex {
    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn model(&self) -> &Model {
        self.mesh.model()
    }

    pub fn dimension(&self) -> usize {
        self.mesh.dimension()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.mesh.counts()
    }

    /// `d_p`, mapping p-cochains to (p+1)-cochains.
    pub fn coboundary(&self, p: usize) -> &Incidence {
        &self.coboundary[p]
    }

    /// Inner-product weights of p-cochains: dual volume over primal volume.
    pub fn mass(&self, p: usize) -> &[f64] {
        &self.mass[p]
    }

    pub fn barycenters(&self, p: usize) -> &[Point] {
        self.mesh.barycenters(p)
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.mesh.euler_characteristic()
    }

    /// Undeformed mass-normalized Hodge Laplacian in degree `p`.
    pub fn hodge_laplacian(&self, p: usize) -> Result<CsrMatrix> {
        let d: Vec<CsrMatrix> = self.coboundary.iter().map(Incidence::to_csr).collect();
        mass_normalized_laplacian(&d, &self.mass, p)
    }
}

/// Signed incidence and masses. Vanishing circumcentric weights are only
/// tolerated on the built-in torus, where the mesh floors them.
pub fn build_complex(mesh: &Mesh) -> Result<CochainComplex> {
    let dim = mesh.dimension();
    let nv = mesh.points().len();
    let edge_rows: Vec<Vec<(usize, i8)>> = mesh
        .edges()
        .iter()
        .map(|e| vec![(e[0], -1), (e[1], 1)])
        .collect();
    let mut coboundary = vec![Incidence::from_rows(nv, &edge_rows)];
    if dim == 2 {
        let eidx = mesh.edge_index();
        let rows: Vec<Vec<(usize, i8)>> = mesh
            .triangles()
            .iter()
            .map(|t| {
                vec![
                    (eidx[&[t[1], t[2]]], 1),
                    (eidx[&[t[0], t[2]]], -1),
                    (eidx[&[t[0], t[1]]], 1),
                ]
            })
            .collect();
        coboundary.push(Incidence::from_rows(mesh.edges().len(), &rows));
    }
    let mut mass = Vec::with_capacity(dim + 1);
    for p in 0..=dim {
        let dual = mesh.dual_volumes(p);
        let vol = mesh.volumes(p);
        let mut m = Vec::with_capacity(dual.len());
        for (i, (&w, &v)) in dual.iter().zip(vol).enumerate() {
            let ratio = w / v;
            if !(ratio > 0.0 && ratio.is_finite()) {
                return Err(Error::DegenerateMesh {
                    degree: p,
                    index: i,
                    weight: w,
                });
            }
            m.push(ratio);
        }
        mass.push(m);
    }
    Ok(CochainComplex {
        mesh: mesh.clone(),
        coboundary,
        mass,
    })
}

/// `Bᵀ_p B_p + B_{p-1} Bᵀ_{p-1}` with `B_q = M_{q+1}^{1/2} d_q M_q^{-1/2}`,
/// given real coboundaries `d[q]` and mass vectors `mass[q]`.
pub fn mass_normalized_laplacian(
    d: &[CsrMatrix],
    mass: &[Vec<f64>],
    p: usize,
) -> Result<CsrMatrix> {
    let top = d.len();
    if p > top || mass.len() != top + 1 {
        return Err(Error::invalid(format!("degree {p} outside 0..={top}")));
    }
    let sqrt: Vec<Vec<f64>> = mass
        .iter()
        .map(|m| m.iter().map(|x| x.sqrt()).collect())
        .collect();
    let inv_sqrt: Vec<Vec<f64>> = sqrt
        .iter()
        .map(|m| m.iter().map(|x| 1.0 / x).collect())
        .collect();
    let b = |q: usize| d[q].scale(&sqrt[q + 1], &inv_sqrt[q]);
    let mut lap = CsrMatrix::zeros(mass[p].len(), mass[p].len());
    if p < top {
        let bp = b(p);
        lap = lap.add(&bp.transpose().matmul(&bp));
    }
    if p > 0 {
        let bq = b(p - 1);
        lap = lap.add(&bq.matmul(&bq.transpose()));
    }
    // products are symmetric up to summation order; make it exact
    Ok(lap
        .add(&lap.transpose())
        .scale(&vec![0.5; lap.nrows()], &vec![1.0; lap.ncols()]))
}

/// Values strictly below `1e-8 · (1 + λ_max)` of the computed window count
/// as zero.
pub fn gap_threshold(values: &[f64]) -> f64 {
    let top = values.iter().copied().fold(0.0, f64::max);
    1e-8 * (1.0 + top)
}

pub fn count_below_gap(values: &[f64]) -> usize {
    let thr = gap_threshold(values);
    values.iter().filter(|&&v| v < thr).count()
}

/// Kernel dimension of a PSD operator by the gap rule, growing the number
/// of computed eigenvalues until the window contains a nonzero one.
pub fn kernel_dimension(op: &CsrMatrix, initial_k: usize, opts: &EigenOptions) -> Result<usize> {
    let n = op.nrows();
    let mut k = initial_k.max(1);
    loop {
        if k >= n {
            let all = dense_symmetric_eigenvalues(n, &op.to_dense())?;
            return Ok(count_below_gap(&all));
        }
        let pairs = smallest_eigenpairs(op, k, opts)?;
        let count = count_below_gap(&pairs.values);
        if count < k {
            return Ok(count);
        }
        k *= 2;
    }
}

/// Betti numbers as kernel dimensions of the Hodge Laplacians.
pub fn betti(complex: &CochainComplex) -> Result<Vec<usize>> {
    betti_with(complex, &EigenOptions::default())
}

pub fn betti_with(complex: &CochainComplex, opts: &EigenOptions) -> Result<Vec<usize>> {
    (0..=complex.dimension())
        .map(|p| kernel_dimension(&complex.hodge_laplacian(p)?, 8, opts))
        .collect()
}
