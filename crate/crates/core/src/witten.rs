//! The deformed complex `d_t = e^{−f/t} d e^{f/t}`, its Laplacian and the
//! rescaled spectral flow `t ↦ t·λᵢ(t)`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::complex::{count_below_gap, mass_normalized_laplacian, CochainComplex};
use crate::eigen::{smallest_eigenpairs, EigenOptions, SolverMethod};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::io::fmt_f64;
use crate::morse::ScalarField;
use crate::sparse::CsrMatrix;

/// Largest admissible `|f(b_τ) − f(b_σ)| / t` over incident simplex pairs.
pub const OVERFLOW_LIMIT: f64 = 30.0;

/// Coboundaries conjugated by `W_p = diag(e^{f(barycenter)/t})`.
#[derive(Clone, Debug)]
pub struct WittenComplex<'a> {
    complex: &'a CochainComplex,
    t: f64,
    deformed: Vec<CsrMatrix>,
}

impl<'a> WittenComplex<'a> {
    pub fn complex(&self) -> &'a CochainComplex {
        self.complex
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// `D_t^p = W_{p+1}^{-1} d_p W_p`.
    pub fn coboundary(&self, p: usize) -> &CsrMatrix {
        &self.deformed[p]
    }
}

pub fn deform<'a>(
    complex: &'a CochainComplex,
    field: &dyn ScalarField,
    t: f64,
) -> Result<WittenComplex<'a>> {
    let values: Vec<Vec<f64>> = (0..=complex.dimension())
        .map(|p| {
            complex
                .barycenters(p)
                .iter()
                .map(|b| field.value(b))
                .collect()
        })
        .collect();
    deform_values(complex, &values, t)
}

/// Deformation from explicit barycenter values, one vector per degree.
pub fn deform_values<'a>(
    complex: &'a CochainComplex,
    values: &[Vec<f64>],
    t: f64,
) -> Result<WittenComplex<'a>> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!(
            "t must be positive and finite, got {t}"
        )));
    }
    let dims = complex.dims();
    if values.len() != dims.len() {
        return Err(Error::LengthMismatch {
            left: values.len(),
            right: dims.len(),
        });
    }
    for (v, &n) in values.iter().zip(&dims) {
        if v.len() != n {
            return Err(Error::LengthMismatch {
                left: v.len(),
                right: n,
            });
        }
    }
    let mut deformed = Vec::with_capacity(complex.dimension());
    let mut worst: f64 = 0.0;
    for p in 0..complex.dimension() {
        let d = complex.coboundary(p);
        for tau in 0..d.nrows() {
            for (sigma, _) in d.row(tau) {
                worst = worst.max((values[p][sigma] - values[p + 1][tau]).abs() / t);
            }
        }
        if !(worst <= OVERFLOW_LIMIT) {
            return Err(Error::OverflowGuard {
                ratio: worst,
                limit: OVERFLOW_LIMIT,
                t,
            });
        }
        deformed
            .push(d.to_weighted(|tau, sigma| ((values[p][sigma] - values[p + 1][tau]) / t).exp()));
    }
    Ok(WittenComplex {
        complex,
        t,
        deformed,
    })
}

/// Mass-normalized symmetric form of `Δ_t^p`.
pub fn laplacian(wc: &WittenComplex<'_>, p: usize) -> Result<CsrMatrix> {
    let mass: Vec<Vec<f64>> = (0..=wc.complex.dimension())
        .map(|q| wc.complex.mass(q).to_vec())
        .collect();
    mass_normalized_laplacian(&wc.deformed, &mass, p)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumTable {
    pub degree: usize,
    pub t: f64,
    /// Ascending eigenvalues `λ`.
    pub values: Vec<f64>,
    /// Relative residuals `‖Av − λv‖ / ‖A‖`.
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub method: SolverMethod,
}

impl SpectrumTable {
    pub fn rescaled(&self) -> Vec<f64> {
        self.values.iter().map(|v| self.t * v).collect()
    }

    /// Kernel dimension by the gap rule over the computed window.
    pub fn kernel_count(&self) -> usize {
        count_below_gap(&self.values)
    }

    pub const CSV_HEADER: &'static str = "degree,t,index,lambda,t_lambda,residual";

    /// CSV rows without header.
    pub fn csv_rows(&self) -> String {
        let mut s = String::new();
        for (i, (v, r)) in self.values.iter().zip(&self.residuals).enumerate() {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                self.degree,
                fmt_f64(self.t),
                i,
                fmt_f64(*v),
                fmt_f64(self.t * v),
                fmt_f64(*r)
            );
        }
        s
    }

    pub fn to_csv(&self) -> String {
        format!("{}\n{}", Self::CSV_HEADER, self.csv_rows())
    }
}

/// `k` smallest eigenvalues of a symmetric PSD operator, residual-certified.
pub fn smallest_eigs(op: &CsrMatrix, k: usize, opts: &EigenOptions) -> Result<SpectrumTable> {
    let pairs = smallest_eigenpairs(op, k, opts)?;
    if let Some((i, r)) = pairs
        .residuals
        .iter()
        .enumerate()
        .find(|(_, &r)| !(r <= opts.tol))
    {
        return Err(Error::SolverFailure(format!(
            "eigenpair {i} has relative residual {r:e} above tolerance {:e}",
            opts.tol
        )));
    }
    Ok(SpectrumTable {
        degree: 0,
        t: f64::NAN,
        values: pairs.values,
        residuals: pairs.residuals,
        iterations: pairs.iterations,
        method: pairs.method,
    })
}

/// Deform, assemble `Δ_t^p` and solve, in one step.
pub fn witten_spectrum(
    complex: &CochainComplex,
    field: &dyn ScalarField,
    t: f64,
    p: usize,
    k: usize,
    opts: &EigenOptions,
) -> Result<SpectrumTable> {
    if p > complex.dimension() {
        return Err(Error::invalid(format!(
            "degree {p} exceeds dimension {}",
            complex.dimension()
        )));
    }
    let wc = deform(complex, field, t)?;
    let mut table = smallest_eigs(&laplacian(&wc, p)?, k, opts)?;
    table.degree = p;
    table.t = t;
    Ok(table)
}

/// `n` points decreasing geometrically from `start` to `end`.
pub fn geometric_schedule(start: f64, end: f64, n: usize) -> Result<Vec<f64>> {
    if !(start > 0.0 && end > 0.0 && start.is_finite() && end.is_finite()) {
        return Err(Error::invalid(format!(
            "schedule endpoints must be positive, got {start}, {end}"
        )));
    }
    match n {
        0 => Err(Error::invalid("schedule needs at least one point")),
        1 => Ok(vec![start]),
        _ => {
            if !(start > end) {
                return Err(Error::invalid(format!(
                    "schedule must decrease, got {start} -> {end}"
                )));
            }
            let r = (end / start).ln() / (n - 1) as f64;
            let mut s: Vec<f64> = (0..n).map(|i| start * (r * i as f64).exp()).collect();
            s[n - 1] = end;
            Ok(s)
        }
    }
}

pub fn default_schedule() -> Vec<f64> {
    geometric_schedule(1.0, 0.02, 25).expect("valid default schedule")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkippedT {
    pub t: f64,
    pub degree: usize,
    pub reason: String,
}

/// Rescaled spectra along a decreasing t schedule. Rows align with
/// `schedule`; column `i` tracks the i-th smallest eigenvalue.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FlowResult {
    pub schedule: Vec<f64>,
    /// Degree → rows of `t·λᵢ`.
    pub degrees: BTreeMap<String, Vec<Vec<f64>>>,
    /// Degree → rows of relative residuals.
    pub residuals: BTreeMap<String, Vec<Vec<f64>>>,
    /// Degree → gap-rule kernel dimension per row.
    pub kernel_counts: BTreeMap<String, Vec<usize>>,
    /// Degree → limit values `λᵢ(0)`, when attached.
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub oracle: BTreeMap<String, Vec<f64>>,
    pub skipped: Vec<SkippedT>,
}

impl FlowResult {
    pub fn rows(&self, p: usize) -> &[Vec<f64>] {
        self.degrees
            .get(&p.to_string())
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn kernel_counts(&self, p: usize) -> &[usize] {
        self.kernel_counts
            .get(&p.to_string())
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Track `i` of degree `p` as `(t, t·λᵢ)` pairs.
    pub fn track(&self, p: usize, i: usize) -> Vec<(f64, f64)> {
        self.schedule
            .iter()
            .zip(self.rows(p))
            .filter_map(|(&t, row)| row.get(i).map(|&v| (t, v)))
            .collect()
    }

    pub fn attach_oracle(&mut self, p: usize, limits: Vec<f64>) {
        self.oracle.insert(p.to_string(), limits);
    }
}

/// Runs `witten_spectrum` over the schedule for each degree, one worker per
/// t. A t that fails in any degree is dropped from the result and recorded
/// in `skipped`.
pub fn spectral_flow(
    complex: &CochainComplex,
    field: &dyn ScalarField,
    schedule: &[f64],
    degrees: &[usize],
    k: usize,
    opts: &EigenOptions,
    exec: Execution,
) -> Result<FlowResult> {
    if schedule.is_empty() {
        return Err(Error::invalid("empty t schedule"));
    }
    if schedule.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(Error::invalid("t schedule must be strictly decreasing"));
    }
    if degrees.is_empty() || degrees.iter().any(|&p| p > complex.dimension()) {
        return Err(Error::invalid(format!(
            "degrees {degrees:?} outside 0..={}",
            complex.dimension()
        )));
    }
    let k_max = degrees
        .iter()
        .map(|&p| complex.dims()[p])
        .min()
        .unwrap_or(0);
    if k == 0 || k >= k_max {
        return Err(Error::invalid(format!(
            "k = {k} must satisfy 0 < k < {k_max}"
        )));
    }
    let jobs: Vec<(f64, usize)> = schedule
        .iter()
        .flat_map(|&t| degrees.iter().map(move |&p| (t, p)))
        .collect();
    let tables = exec.map(&jobs, |&(t, p)| {
        witten_spectrum(complex, field, t, p, k, opts)
    });

    let mut flow = FlowResult::default();
    for (row, chunk) in schedule.iter().zip(tables.chunks(degrees.len())) {
        let mut ok = true;
        for (&p, res) in degrees.iter().zip(chunk) {
            if let Err(e) = res {
                // invalid input is a caller bug, not a skippable t
                if !e.is_numerical() {
                    return Err(Error::invalid(e.to_string()));
                }
                log::warn!("skipping t = {row}, degree {p}: {e}");
                flow.skipped.push(SkippedT {
                    t: *row,
                    degree: p,
                    reason: e.to_string(),
                });
                ok = false;
            }
        }
        if !ok {
            continue;
        }
        flow.schedule.push(*row);
        for (&p, res) in degrees.iter().zip(chunk) {
            let table = res.as_ref().expect("checked above");
            let key = p.to_string();
            flow.degrees
                .entry(key.clone())
                .or_default()
                .push(table.rescaled());
            flow.residuals
                .entry(key.clone())
                .or_default()
                .push(table.residuals.clone());
            flow.kernel_counts
                .entry(key)
                .or_default()
                .push(table.kernel_count());
        }
    }
    Ok(flow)
}

/// Number of rescaled eigenvalues `t·λᵢ` at or below `threshold`.
pub fn cluster_count(rescaled: &[f64], threshold: f64) -> usize {
    rescaled.iter().filter(|&&v| v <= threshold).count()
}
