//! Symmetric eigensolvers for the k smallest eigenpairs of a positive
//! semidefinite sparse matrix.
//!
//! Small problems are diagonalized densely. Larger ones use a block Krylov
//! method on the shift-inverted operator `(A + sI)^{-1}` (sparse Cholesky via
//! `faer`), with Rayleigh-Ritz extraction against `A` itself and restarts
//! from the current Ritz block. When the Cholesky factor would exceed the
//! memory budget, the same block iteration runs on `cI - A` instead, which
//! needs only matrix-vector products.
//!
//! Every returned pair carries its relative residual `‖Av − λv‖ / ‖A‖`,
//! where `‖A‖` is the max-row-sum bound on the spectral norm.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::matmul::matmul;
use faer::sparse::linalg::cholesky::{factorize_symbolic_cholesky, LltRef, SymbolicCholesky};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{Accum, Conj, Mat, Par, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenOptions {
    /// Relative residual bound `‖Av − λv‖ / ‖A‖`.
    pub tol: f64,
    /// Seed of the random starting block.
    pub seed: u64,
    pub max_restarts: usize,
    /// Number of blocks in each Krylov basis.
    pub krylov_depth: usize,
    /// Matrices up to this order are diagonalized densely.
    pub dense_threshold: usize,
    /// Upper bound on the Cholesky factor storage, in bytes.
    pub memory_budget: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            seed: 0x5eed,
            max_restarts: 300,
            krylov_depth: 4,
            dense_threshold: 400,
            memory_budget: 4 << 30,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverMethod {
    Dense,
    ShiftInvert,
    SpectralFlip,
}

#[derive(Clone, Debug)]
pub struct EigenPairs {
    /// Ascending.
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub method: SolverMethod,
}

/// All eigenvalues (ascending) and eigenvectors of a dense symmetric matrix
/// stored column-major. Only the lower triangle is read.
pub fn dense_symmetric_eigen(n: usize, a: &[f64]) -> Result<(Vec<f64>, Mat<f64>)> {
    assert_eq!(a.len(), n * n);
    let m = Mat::from_fn(n, n, |i, j| a[i + j * n]);
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::SolverFailure(format!("dense eigendecomposition: {e:?}")))?;
    let values = (0..n).map(|i| evd.S()[i]).collect();
    Ok((values, evd.U().to_owned()))
}

pub fn dense_symmetric_eigenvalues(n: usize, a: &[f64]) -> Result<Vec<f64>> {
    assert_eq!(a.len(), n * n);
    let m = Mat::from_fn(n, n, |i, j| a[i + j * n]);
    m.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::SolverFailure(format!("dense eigenvalues: {e:?}")))
}

/// Spectral norm of a dense symmetric matrix.
pub fn dense_symmetric_norm(n: usize, a: &[f64]) -> Result<f64> {
    let ev = dense_symmetric_eigenvalues(n, a)?;
    Ok(ev.iter().fold(0.0, |m: f64, v| m.max(v.abs())))
}

/// The `k` smallest eigenpairs of the symmetric positive semidefinite `a`.
pub fn smallest_eigenpairs(a: &CsrMatrix, k: usize, opts: &EigenOptions) -> Result<EigenPairs> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::invalid(format!(
            "operator is {}x{}, not square",
            n,
            a.ncols()
        )));
    }
    if k == 0 || k >= n {
        return Err(Error::invalid(format!(
            "k = {k} must satisfy 0 < k < dimension {n}"
        )));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let norm = a.norm_inf();
    let block = block_size(k, n);
    if n <= opts.dense_threshold || block * opts.krylov_depth.max(2) * 2 > n {
        return dense_pairs(a, k, norm);
    }
    if norm == 0.0 {
        // zero operator: any orthonormal set is an eigenbasis
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let mut x = random_block(n, k, &mut rng);
        orthonormalize(&mut x, None, &mut rng);
        return Ok(EigenPairs {
            values: vec![0.0; k],
            vectors: (0..k).map(|j| x.col_as_slice(j).to_vec()).collect(),
            residuals: vec![0.0; k],
            iterations: 0,
            method: SolverMethod::ShiftInvert,
        });
    }

    let shift = 1e-8 * norm;
    match ShiftInvert::new(a, shift, opts.memory_budget)? {
        Some(inv) => block_krylov(
            a,
            k,
            norm,
            opts,
            opts.krylov_depth.max(2),
            SolverMethod::ShiftInvert,
            |x| inv.solve(x),
        ),
        None => {
            log::warn!(
                "Cholesky factor of a {n}x{n} operator exceeds the memory budget; \
                 falling back to the spectrally flipped block iteration"
            );
            let c = norm;
            block_krylov(
                a,
                k,
                norm,
                &EigenOptions {
                    max_restarts: opts.max_restarts * 20,
                    ..opts.clone()
                },
                opts.krylov_depth.max(10),
                SolverMethod::SpectralFlip,
                |x| {
                    let mut out = Mat::<f64>::zeros(x.nrows(), x.ncols());
                    for j in 0..x.ncols() {
                        a.mul_vec(x.col_as_slice(j), out.col_as_slice_mut(j));
                        let src = x.col_as_slice(j);
                        for (o, s) in out.col_as_slice_mut(j).iter_mut().zip(src) {
                            *o = c * s - *o;
                        }
                    }
                    *x = out;
                },
            )
        }
    }
}

fn block_size(k: usize, n: usize) -> usize {
    (k + (k / 2).max(5)).min(n)
}

fn dense_pairs(a: &CsrMatrix, k: usize, norm: f64) -> Result<EigenPairs> {
    let n = a.nrows();
    let (values, vectors) = dense_symmetric_eigen(n, &a.to_dense())?;
    let vectors: Vec<Vec<f64>> = (0..k)
        .map(|j| vectors.col(j).iter().copied().collect())
        .collect();
    let residuals = vectors
        .iter()
        .zip(&values)
        .map(|(v, &lam)| relative_residual(a, v, lam, norm))
        .collect();
    Ok(EigenPairs {
        values: values[..k].to_vec(),
        vectors,
        residuals,
        iterations: 0,
        method: SolverMethod::Dense,
    })
}

pub fn relative_residual(a: &CsrMatrix, v: &[f64], lambda: f64, norm: f64) -> f64 {
    let av = a.apply(v);
    let r = av
        .iter()
        .zip(v)
        .map(|(x, y)| (x - lambda * y).powi(2))
        .sum::<f64>()
        .sqrt();
    let vn = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        r
    } else {
        r / (norm * vn)
    }
}

struct ShiftInvert {
    symbolic: SymbolicCholesky<usize>,
    values: Vec<f64>,
}

impl ShiftInvert {
    /// Factors `a + shift·I`; `None` when the factor would not fit the budget.
    fn new(a: &CsrMatrix, shift: f64, budget: usize) -> Result<Option<Self>> {
        let n = a.nrows();
        // lower triangle in compressed-column form: for a symmetric matrix the
        // CSR row j is the CSC column j
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut row_idx = Vec::with_capacity(a.nnz() / 2 + n);
        let mut vals = Vec::with_capacity(a.nnz() / 2 + n);
        col_ptr.push(0usize);
        for j in 0..n {
            let mut has_diag = false;
            for (i, v) in a.row(j) {
                if i < j {
                    continue;
                }
                if i == j {
                    has_diag = true;
                    row_idx.push(i);
                    vals.push(v + shift);
                } else {
                    if !has_diag {
                        has_diag = true;
                        row_idx.push(j);
                        vals.push(shift);
                    }
                    row_idx.push(i);
                    vals.push(v);
                }
            }
            if !has_diag {
                row_idx.push(j);
                vals.push(shift);
            }
            col_ptr.push(row_idx.len());
        }
        let sym = SymbolicSparseColMatRef::new_checked(n, n, &col_ptr, None, &row_idx);
        let mat = SparseColMatRef::new(sym, &vals);
        let symbolic =
            factorize_symbolic_cholesky(sym, Side::Lower, Default::default(), Default::default())
                .map_err(|e| Error::SolverFailure(format!("symbolic Cholesky: {e:?}")))?;
        if symbolic
            .len_val()
            .saturating_mul(std::mem::size_of::<f64>())
            > budget
        {
            return Ok(None);
        }
        let mut values = vec![0.0f64; symbolic.len_val()];
        let par = Par::Seq;
        let mut buf =
            MemBuffer::new(symbolic.factorize_numeric_llt_scratch::<f64>(par, Default::default()));
        symbolic
            .factorize_numeric_llt(
                &mut values,
                mat,
                Side::Lower,
                Default::default(),
                par,
                MemStack::new(&mut buf),
                Default::default(),
            )
            .map_err(|e| {
                Error::SolverFailure(format!("shifted operator is not positive definite: {e:?}"))
            })?;
        Ok(Some(Self { symbolic, values }))
    }

    fn solve(&self, x: &mut Mat<f64>) {
        let par = Par::Seq;
        let mut buf = MemBuffer::new(self.symbolic.solve_in_place_scratch::<f64>(x.ncols(), par));
        LltRef::new(&self.symbolic, &self.values).solve_in_place_with_conj(
            Conj::No,
            x.as_mut(),
            par,
            MemStack::new(&mut buf),
        );
    }
}

fn random_block(n: usize, b: usize, rng: &mut ChaCha8Rng) -> Mat<f64> {
    Mat::from_fn(n, b, |_, _| rng.random_range(-1.0..1.0))
}

/// Orthonormalizes the columns of `x` in place, first against the columns
/// of `basis` (when given). Columns that collapse are replaced by fresh
/// random directions so the block keeps its width.
fn orthonormalize(x: &mut Mat<f64>, basis: Option<&Mat<f64>>, rng: &mut ChaCha8Rng) {
    let n = x.nrows();
    let project = |x: &mut Mat<f64>| {
        if let Some(v) = basis {
            if v.ncols() > 0 {
                let mut coeff = Mat::<f64>::zeros(v.ncols(), x.ncols());
                matmul(
                    coeff.as_mut(),
                    Accum::Replace,
                    v.transpose(),
                    x.as_ref(),
                    1.0,
                    Par::Seq,
                );
                matmul(
                    x.as_mut(),
                    Accum::Add,
                    v.as_ref(),
                    coeff.as_ref(),
                    -1.0,
                    Par::Seq,
                );
            }
        }
    };
    project(x);
    project(x);
    for j in 0..x.ncols() {
        let mut attempts = 0;
        loop {
            let before = norm(x.col_as_slice(j));
            for _ in 0..2 {
                for i in 0..j {
                    let d = dot(x.col_as_slice(i), x.col_as_slice(j));
                    let (qi, xj) = two_cols(x, i, j);
                    for (a, b) in xj.iter_mut().zip(qi) {
                        *a -= d * b;
                    }
                }
            }
            let after = norm(x.col_as_slice(j));
            if after > 1e-10 * before && after > 0.0 && after.is_finite() {
                for v in x.col_as_slice_mut(j) {
                    *v /= after;
                }
                break;
            }
            attempts += 1;
            assert!(attempts < 20, "could not extend an orthonormal block");
            let mut fresh = random_block(n, 1, rng);
            project(&mut fresh);
            project(&mut fresh);
            x.col_as_slice_mut(j).copy_from_slice(fresh.col_as_slice(0));
        }
    }
}

fn two_cols(x: &mut Mat<f64>, i: usize, j: usize) -> (&[f64], &mut [f64]) {
    debug_assert!(i < j);
    let n = x.nrows();
    let (left, right) = x.as_mut().split_at_col_mut(j);
    let qi = faer::prelude::IntoConst::into_const(left)
        .col(i)
        .try_as_col_major()
        .unwrap()
        .as_slice();
    let xj = right
        .col_mut(0)
        .try_as_col_major_mut()
        .unwrap()
        .as_slice_mut();
    debug_assert_eq!(qi.len(), n);
    (qi, xj)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[allow(clippy::too_many_arguments)]
fn block_krylov(
    a: &CsrMatrix,
    k: usize,
    anorm: f64,
    opts: &EigenOptions,
    depth: usize,
    method: SolverMethod,
    apply: impl Fn(&mut Mat<f64>),
) -> Result<EigenPairs> {
    let n = a.nrows();
    let b = block_size(k, n);
    let depth = depth.min(n / b).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x = random_block(n, b, &mut rng);
    orthonormalize(&mut x, None, &mut rng);

    let mut worst = f64::INFINITY;
    for iter in 1..=opts.max_restarts {
        // Krylov basis [X, SX, S²X, ...]
        let mut basis = Mat::<f64>::zeros(n, 0);
        let mut blk = x.clone();
        for level in 0..depth {
            if level > 0 {
                apply(&mut blk);
            }
            orthonormalize(&mut blk, Some(&basis), &mut rng);
            let mut grown = Mat::<f64>::zeros(n, basis.ncols() + b);
            grown
                .as_mut()
                .subcols_mut(0, basis.ncols())
                .copy_from(basis.as_ref());
            grown
                .as_mut()
                .subcols_mut(basis.ncols(), b)
                .copy_from(blk.as_ref());
            basis = grown;
        }
        let m = basis.ncols();
        let mut av = Mat::<f64>::zeros(n, m);
        for j in 0..m {
            a.mul_vec(basis.col_as_slice(j), av.col_as_slice_mut(j));
        }
        let mut h = Mat::<f64>::zeros(m, m);
        matmul(
            h.as_mut(),
            Accum::Replace,
            basis.transpose(),
            av.as_ref(),
            1.0,
            Par::Seq,
        );
        let hs = Mat::from_fn(m, m, |i, j| 0.5 * (h[(i, j)] + h[(j, i)]));
        let evd = hs
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::SolverFailure(format!("Rayleigh-Ritz: {e:?}")))?;
        let y = evd.U().subcols(0, b);
        let mut z = Mat::<f64>::zeros(n, b);
        let mut az = Mat::<f64>::zeros(n, b);
        matmul(z.as_mut(), Accum::Replace, basis.as_ref(), y, 1.0, Par::Seq);
        matmul(az.as_mut(), Accum::Replace, av.as_ref(), y, 1.0, Par::Seq);
        let theta: Vec<f64> = (0..b).map(|i| evd.S()[i]).collect();
        let residuals: Vec<f64> = (0..k)
            .map(|i| {
                let zi = z.col_as_slice(i);
                let r = az
                    .col_as_slice(i)
                    .iter()
                    .zip(zi)
                    .map(|(p, q)| (p - theta[i] * q).powi(2))
                    .sum::<f64>()
                    .sqrt();
                r / (anorm * norm(zi))
            })
            .collect();
        worst = residuals.iter().copied().fold(0.0, f64::max);
        if worst <= opts.tol {
            return Ok(EigenPairs {
                values: theta[..k].to_vec(),
                vectors: (0..k).map(|j| z.col_as_slice(j).to_vec()).collect(),
                residuals,
                iterations: iter,
                method,
            });
        }
        x = z;
    }
    Err(Error::SolverFailure(format!(
        "no convergence after {} restarts (n = {n}, k = {k}, worst relative residual {worst:e}, tol {:e})",
        opts.max_restarts, opts.tol
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle_laplacian(n: usize, h: f64) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            let j = (i + 1) % n;
            let w = 1.0 / (h * h);
            t.push((i, i, w));
            t.push((j, j, w));
            t.push((i, j, -w));
            t.push((j, i, -w));
        }
        CsrMatrix::from_triplets(n, n, t)
    }

    #[test]
    fn diagonal_operator() {
        let a = CsrMatrix::from_diagonal(&[3.0, 1.0, 2.0]);
        let e = smallest_eigenpairs(&a, 2, &EigenOptions::default()).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!((e.values[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn k_equal_to_dimension_is_rejected() {
        let a = CsrMatrix::from_diagonal(&[3.0, 1.0, 2.0]);
        assert!(matches!(
            smallest_eigenpairs(&a, 3, &EigenOptions::default()),
            Err(Error::InvalidArgument(_))
        ));
        assert!(smallest_eigenpairs(&a, 0, &EigenOptions::default()).is_err());
    }

    #[test]
    fn sparse_path_matches_circulant_spectrum() {
        let n = 2000;
        let h = 2.0 * std::f64::consts::PI / n as f64;
        let a = cycle_laplacian(n, h);
        let opts = EigenOptions::default();
        let e = smallest_eigenpairs(&a, 7, &opts).unwrap();
        assert_eq!(e.method, SolverMethod::ShiftInvert);
        let mut exact: Vec<f64> = (0..n)
            .map(|k| {
                (2.0 - 2.0 * (2.0 * std::f64::consts::PI * k as f64 / n as f64).cos()) / (h * h)
            })
            .collect();
        exact.sort_by(f64::total_cmp);
        for (got, want) in e.values.iter().zip(&exact) {
            assert!((got - want).abs() <= 1e-7 * (1.0 + want), "{got} vs {want}");
        }
        assert!(e.residuals.iter().all(|&r| r <= opts.tol));
    }

    #[test]
    fn flipped_fallback_agrees() {
        let n = 600;
        let h = 1.0;
        let a = cycle_laplacian(n, h);
        let opts = EigenOptions {
            memory_budget: 0,
            ..Default::default()
        };
        let e = smallest_eigenpairs(&a, 3, &opts).unwrap();
        assert_eq!(e.method, SolverMethod::SpectralFlip);
        let l1 = 2.0 - 2.0 * (2.0 * std::f64::consts::PI / n as f64).cos();
        assert!(e.values[0].abs() < 1e-7);
        assert!((e.values[1] - l1).abs() < 1e-7 && (e.values[2] - l1).abs() < 1e-7);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let a = cycle_laplacian(1500, 0.01);
        let o = EigenOptions::default();
        let e1 = smallest_eigenpairs(&a, 4, &o).unwrap();
        let e2 = smallest_eigenpairs(&a, 4, &o).unwrap();
        assert_eq!(e1.values, e2.values);
    }
}
