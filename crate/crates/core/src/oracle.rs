//! The `t → 0` limit: harmonic-oscillator spectra at critical points, in
//! closed form and by direct finite-difference diagonalization, and the
//! Morse inequalities.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::eigen::{smallest_eigenpairs, EigenOptions};
use crate::error::{Error, Result};
use crate::morse::MorseData;
use crate::sparse::CsrMatrix;

/// Closed-form normalization.
///
/// `Standard` is the spectrum of the model operator
/// `−Δ + Σ ξ_j² x_j² + Σ_{j∈J} ξ_j − Σ_{j∉J} ξ_j` on the `dx^J` component.
/// `Half` enumerates `Σ_{J, j>i_a} ξ_j − Σ_{J^c, j≤i_a} ξ_j + Σ α_j|ξ_j|`,
/// which equals the standard spectrum divided by two.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleMode {
    #[default]
    Standard,
    #[serde(rename = "paper")]
    Half,
}

impl OracleMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(OracleMode::Standard),
            "paper" => Ok(OracleMode::Half),
            _ => Err(Error::invalid(format!(
                "oracle mode must be `standard` or `paper`, got `{s}`"
            ))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            OracleMode::Standard => "standard",
            OracleMode::Half => "paper",
        }
    }
}

impl fmt::Display for OracleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    ClosedForm,
    BruteForce,
}

/// One critical point's oscillator acting on p-forms of `ℝⁿ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscillatorModel {
    /// Hessian eigenvalues, ascending.
    pub xi: Vec<f64>,
    /// Number of negative `ξ_j`.
    pub index: usize,
    pub degree: usize,
}

impl OscillatorModel {
    pub fn new(mut xi: Vec<f64>, degree: usize) -> Result<Self> {
        if xi.is_empty() {
            return Err(Error::invalid(
                "oscillator model needs at least one Hessian eigenvalue",
            ));
        }
        if let Some(&z) = xi.iter().find(|x| !(x.abs() > 0.0) || !x.is_finite()) {
            return Err(Error::DegenerateModel(z));
        }
        if degree > xi.len() {
            return Err(Error::invalid(format!(
                "degree {degree} exceeds dimension {}",
                xi.len()
            )));
        }
        xi.sort_by(f64::total_cmp);
        let index = xi.iter().filter(|&&x| x < 0.0).count();
        Ok(Self { xi, index, degree })
    }

    pub fn dimension(&self) -> usize {
        self.xi.len()
    }
}

/// Sorted `(value, multiplicity)` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpectrum {
    pub mode: OracleMode,
    pub entries: Vec<(f64, usize)>,
    pub cutoff: f64,
    pub provenance: Provenance,
}

impl ModelSpectrum {
    /// Values repeated by multiplicity, ascending.
    pub fn values(&self) -> Vec<f64> {
        self.entries
            .iter()
            .flat_map(|&(v, m)| std::iter::repeat_n(v, m))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.entries.iter().map(|e| e.1).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Multiplicity of the value `v` (0 if absent).
    pub fn multiplicity(&self, v: f64) -> usize {
        self.entries
            .iter()
            .find(|e| same_value(e.0, v))
            .map_or(0, |e| e.1)
    }
}

fn same_value(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// Groups a list of values into sorted `(value, multiplicity)` pairs.
pub fn group_values(mut values: Vec<f64>) -> Vec<(f64, usize)> {
    values.sort_by(f64::total_cmp);
    let mut out: Vec<(f64, usize)> = Vec::new();
    for v in values {
        match out.last_mut() {
            Some((u, m)) if same_value(*u, v) => *m += 1,
            _ => out.push((v, 1)),
        }
    }
    out
}

/// Subsets of `0..n` of size `p`, as index lists in lexicographic order.
fn subsets(n: usize, p: usize) -> Vec<Vec<usize>> {
    (0u32..1 << n)
        .filter(|m| m.count_ones() as usize == p)
        .map(|m| (0..n).filter(|&j| m & (1 << j) != 0).collect())
        .collect()
}

/// Exhaustive enumeration over `|J| = p` and multi-indices `α` of the
/// closed-form eigenvalues up to `cutoff`.
pub fn oscillator_spectrum(
    model: &OscillatorModel,
    cutoff: f64,
    mode: OracleMode,
) -> Result<ModelSpectrum> {
    if !(cutoff > 0.0 && cutoff.is_finite()) {
        return Err(Error::invalid(format!(
            "cutoff must be positive, got {cutoff}"
        )));
    }
    let model = OscillatorModel::new(model.xi.clone(), model.degree)?;
    let n = model.dimension();
    let xi = &model.xi;
    let mut values = Vec::new();
    for j_set in subsets(n, model.degree) {
        let in_j = |j: usize| j_set.contains(&j);
        // base value and per-quantum step for each direction
        let (base, steps): (f64, Vec<f64>) = match mode {
            OracleMode::Standard => {
                let b = (0..n)
                    .map(|j| xi[j].abs() + if in_j(j) { xi[j] } else { -xi[j] })
                    .sum();
                (b, xi.iter().map(|x| 2.0 * x.abs()).collect())
            }
            OracleMode::Half => {
                let b = (0..n)
                    .map(|j| match (in_j(j), j < model.index) {
                        (true, false) => xi[j],
                        (false, true) => -xi[j],
                        _ => 0.0,
                    })
                    .sum();
                (b, xi.iter().map(|x| x.abs()).collect())
            }
        };
        enumerate_lattice(base, &steps, cutoff, &mut values);
    }
    Ok(ModelSpectrum {
        mode,
        entries: group_values(values),
        cutoff,
        provenance: Provenance::ClosedForm,
    })
}

/// Pushes every `base + Σ α_j steps_j ≤ cutoff` with `α ∈ ℕⁿ`.
fn enumerate_lattice(base: f64, steps: &[f64], cutoff: f64, out: &mut Vec<f64>) {
    let slack = 1e-12 * cutoff.max(1.0);
    fn rec(acc: f64, steps: &[f64], cutoff: f64, slack: f64, out: &mut Vec<f64>) {
        match steps.split_first() {
            None => {
                if acc <= cutoff + slack {
                    out.push(acc);
                }
            }
            Some((&s, rest)) => {
                let mut v = acc;
                while v <= cutoff + slack {
                    rec(v, rest, cutoff, slack, out);
                    v += s;
                }
            }
        }
    }
    rec(base, steps, cutoff, slack, out);
}

/// Number of eigenvalues reported by [`brute_force_oscillator`].
pub const BRUTE_FORCE_COUNT: usize = 10;

/// Smallest box half-width admitted for the given model.
pub fn minimal_box(model: &OscillatorModel) -> f64 {
    let min = model.xi.iter().fold(f64::INFINITY, |m, x| m.min(x.abs()));
    6.0 / min.sqrt()
}

/// Lowest eigenvalues of the model operator on p-form valued grid functions
/// in `[−R, R]ⁿ` with Dirichlet conditions, second-order differences with
/// `m` interior points per axis, Richardson-extrapolated from `m` and `2m`.
pub fn brute_force_oscillator(
    model: &OscillatorModel,
    half_width: f64,
    m: usize,
) -> Result<ModelSpectrum> {
    let model = OscillatorModel::new(model.xi.clone(), model.degree)?;
    let n = model.dimension();
    if n > 2 {
        return Err(Error::UnsupportedDimension(n));
    }
    if m < 200 {
        return Err(Error::invalid(format!(
            "need at least 200 grid points per axis, got {m}"
        )));
    }
    let r_min = minimal_box(&model);
    if !(half_width >= r_min * (1.0 - 1e-12)) {
        return Err(Error::invalid(format!(
            "box half-width {half_width} is below 6/sqrt(min|xi|) = {r_min}"
        )));
    }
    let coarse = box_eigenvalues(&model, half_width, m)?;
    let fine = box_eigenvalues(&model, half_width, 2 * m)?;
    let h1 = 2.0 * half_width / (m + 1) as f64;
    let h2 = 2.0 * half_width / (2 * m + 1) as f64;
    let extrapolated: Vec<f64> = coarse
        .iter()
        .zip(&fine)
        .map(|(l1, l2)| (h1 * h1 * l2 - h2 * h2 * l1) / (h1 * h1 - h2 * h2))
        .collect();
    let cutoff = extrapolated.last().copied().unwrap_or(0.0);
    Ok(ModelSpectrum {
        mode: OracleMode::Standard,
        entries: group_values(extrapolated),
        cutoff,
        provenance: Provenance::BruteForce,
    })
}

/// Lowest [`BRUTE_FORCE_COUNT`] eigenvalues at one resolution, over all
/// `dx^J` components.
pub fn box_eigenvalues(model: &OscillatorModel, half_width: f64, m: usize) -> Result<Vec<f64>> {
    let n = model.dimension();
    let h = 2.0 * half_width / (m + 1) as f64;
    let x: Vec<f64> = (1..=m).map(|i| -half_width + i as f64 * h).collect();
    let mut all = Vec::new();
    for j_set in subsets(n, model.degree) {
        let shift: f64 = (0..n)
            .map(|j| {
                if j_set.contains(&j) {
                    model.xi[j]
                } else {
                    -model.xi[j]
                }
            })
            .sum();
        let size = m.pow(n as u32);
        let mut trip = Vec::with_capacity(size * (2 * n + 1));
        let inv_h2 = 1.0 / (h * h);
        for idx in 0..size {
            let coords: Vec<usize> = (0..n).map(|a| (idx / m.pow(a as u32)) % m).collect();
            let mut diag = shift;
            for a in 0..n {
                let c = coords[a];
                let xa = x[c];
                diag += 2.0 * inv_h2 + model.xi[a] * model.xi[a] * xa * xa;
                let stride = m.pow(a as u32);
                if c > 0 {
                    trip.push((idx, idx - stride, -inv_h2));
                }
                if c + 1 < m {
                    trip.push((idx, idx + stride, -inv_h2));
                }
            }
            trip.push((idx, idx, diag));
        }
        // the shifted operator can be indefinite; solve on A + s·I, s ≥ 0
        let lower = shift.min(0.0);
        for t in trip.iter_mut().filter(|t| t.0 == t.1) {
            t.2 -= lower;
        }
        let a = CsrMatrix::from_triplets(size, size, trip);
        let k = BRUTE_FORCE_COUNT.min(size - 1);
        let opts = EigenOptions {
            tol: 1e-11,
            krylov_depth: 8,
            ..EigenOptions::default()
        };
        let pairs = smallest_eigenpairs(&a, k, &opts)?;
        all.extend(pairs.values.iter().map(|v| v + lower));
    }
    all.sort_by(f64::total_cmp);
    all.truncate(BRUTE_FORCE_COUNT);
    Ok(all)
}

/// Multiset union of the per-point spectra in degree `p`.
pub fn aggregate_limit_spectrum(
    data: &MorseData,
    p: usize,
    cutoff: f64,
    mode: OracleMode,
) -> Result<ModelSpectrum> {
    let mut values = Vec::new();
    for point in &data.points {
        let model = OscillatorModel::new(point.xi.clone(), p)?;
        values.extend(oscillator_spectrum(&model, cutoff, mode)?.values());
    }
    Ok(ModelSpectrum {
        mode,
        entries: group_values(values),
        cutoff,
        provenance: Provenance::ClosedForm,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MorseReport {
    /// `slack_k = Σ_{i≤k} (−1)^{k−i} (C_i − b_i)`.
    pub slacks: Vec<f64>,
    /// All slacks nonnegative (down to the given tolerance per entry).
    pub pass: bool,
    /// The top slack vanishes (Euler characteristic identity).
    pub euler_equality: bool,
}

pub fn morse_inequalities_check(c: &[usize], b: &[usize]) -> Result<MorseReport> {
    let c: Vec<f64> = c.iter().map(|&x| x as f64).collect();
    let b: Vec<f64> = b.iter().map(|&x| x as f64).collect();
    morse_inequalities_tolerant(&c, &b, &vec![0.0; c.len()])
}

/// Real-valued version; slack `k` passes if `≥ −tolerance[k]`, and the
/// Euler equality holds if `|slack_top| ≤ tolerance[top]`.
pub fn morse_inequalities_tolerant(c: &[f64], b: &[f64], tolerance: &[f64]) -> Result<MorseReport> {
    if c.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: c.len(),
            right: b.len(),
        });
    }
    if tolerance.len() != c.len() {
        return Err(Error::LengthMismatch {
            left: tolerance.len(),
            right: c.len(),
        });
    }
    let mut slacks = Vec::with_capacity(c.len());
    let mut s = 0.0;
    for k in 0..c.len() {
        s = (c[k] - b[k]) - s;
        slacks.push(s);
    }
    let pass = slacks.iter().zip(tolerance).all(|(s, t)| *s >= -t);
    let euler_equality = match (slacks.last(), tolerance.last()) {
        (Some(s), Some(t)) => s.abs() <= *t,
        _ => true,
    };
    Ok(MorseReport {
        slacks,
        pass,
        euler_equality,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(xi: &[f64], p: usize, cutoff: f64, mode: OracleMode) -> Vec<(f64, usize)> {
        oscillator_spectrum(&OscillatorModel::new(xi.to_vec(), p).unwrap(), cutoff, mode)
            .unwrap()
            .entries
    }

    #[test]
    fn closed_form_examples() {
        let half = spec(&[1.0], 0, 5.0, OracleMode::Half);
        assert_eq!(half, (0..=5).map(|v| (v as f64, 1)).collect::<Vec<_>>());
        assert_eq!(
            spec(&[1.0], 0, 5.0, OracleMode::Standard),
            vec![(0.0, 1), (2.0, 1), (4.0, 1)]
        );
        assert_eq!(
            spec(&[-1.0], 1, 5.0, OracleMode::Standard),
            vec![(0.0, 1), (2.0, 1), (4.0, 1)]
        );
        assert_eq!(
            spec(&[1.0, 1.0], 0, 4.0, OracleMode::Standard),
            vec![(0.0, 1), (2.0, 2), (4.0, 3)]
        );
        assert!(matches!(
            oscillator_spectrum(
                &OscillatorModel {
                    xi: vec![0.0],
                    index: 0,
                    degree: 0
                },
                5.0,
                OracleMode::Standard
            ),
            Err(Error::DegenerateModel(_))
        ));
    }

    #[test]
    fn zero_mode_sits_in_the_index_degree() {
        for xi in [
            vec![1.0],
            vec![-2.0],
            vec![1.0, 3.0],
            vec![-1.0, 2.0],
            vec![-1.0, -0.5],
        ] {
            let n = xi.len();
            let ia = xi.iter().filter(|&&x| x < 0.0).count();
            for p in 0..=n {
                for mode in [OracleMode::Standard, OracleMode::Half] {
                    let zeros = spec(&xi, p, 3.0, mode)
                        .iter()
                        .find(|e| e.0 == 0.0)
                        .map_or(0, |e| e.1);
                    assert_eq!(zeros, (p == ia) as usize, "{xi:?} p={p} {mode}");
                }
            }
        }
    }

    #[test]
    fn aggregate_on_circle_and_torus() {
        use crate::morse::CriticalPoint;
        let pt = |xi: Vec<f64>| CriticalPoint {
            location: [0.0; 3],
            value: 0.0,
            index: xi.iter().filter(|&&x| x < 0.0).count(),
            xi,
        };
        let circle = MorseData {
            dimension: 1,
            points: vec![pt(vec![-1.0]), pt(vec![1.0])],
            warnings: vec![],
        };
        let s = aggregate_limit_spectrum(&circle, 0, 5.0, OracleMode::Standard).unwrap();
        assert_eq!(s.values(), vec![0.0, 2.0, 2.0, 4.0, 4.0]);
        let torus = MorseData {
            dimension: 2,
            points: vec![
                pt(vec![-1.0, -1.0]),
                pt(vec![-1.0, 1.0]),
                pt(vec![-1.0, 1.0]),
                pt(vec![1.0, 1.0]),
            ],
            warnings: vec![],
        };
        let s = aggregate_limit_spectrum(&torus, 1, 6.0, OracleMode::Standard).unwrap();
        assert_eq!(s.multiplicity(0.0), 2);
        assert_eq!(&s.values()[..8], &[0.0, 0.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0]);
        assert!(
            aggregate_limit_spectrum(&MorseData::empty(2), 0, 5.0, OracleMode::Standard)
                .unwrap()
                .is_empty()
        );
    }

    #[test]
    fn brute_force_one_dimensional() {
        let m = OscillatorModel::new(vec![1.0], 0).unwrap();
        let b = brute_force_oscillator(&m, 8.0, 400).unwrap().values();
        for (v, w) in b.iter().zip([0.0, 2.0, 4.0]) {
            assert!((v - w).abs() < 1e-3, "{v}");
        }
        let m = OscillatorModel::new(vec![2.0], 0).unwrap();
        let b = brute_force_oscillator(&m, 8.0, 400).unwrap().values();
        for (v, w) in b.iter().zip([0.0, 4.0, 8.0]) {
            assert!((v - w).abs() < 1e-2, "{v}");
        }
        let m = OscillatorModel::new(vec![-1.0], 0).unwrap();
        let b = brute_force_oscillator(&m, 8.0, 400).unwrap().values();
        assert!((b[0] - 2.0).abs() < 1e-3 && (b[1] - 4.0).abs() < 1e-3);
        assert!(matches!(
            brute_force_oscillator(&OscillatorModel::new(vec![1.0; 3], 0).unwrap(), 8.0, 200),
            Err(Error::UnsupportedDimension(3))
        ));
        assert!(brute_force_oscillator(&m, 8.0, 100).is_err());
        assert!(brute_force_oscillator(&m, 2.0, 200).is_err());
    }

    #[test]
    fn morse_inequality_examples() {
        let r = morse_inequalities_check(&[1, 2, 1], &[1, 2, 1]).unwrap();
        assert_eq!(r.slacks, vec![0.0, 0.0, 0.0]);
        assert!(r.pass && r.euler_equality);
        let r = morse_inequalities_check(&[2, 4, 2], &[1, 2, 1]).unwrap();
        assert_eq!(r.slacks, vec![1.0, 1.0, 0.0]);
        assert!(r.pass && r.euler_equality);
        let r = morse_inequalities_check(&[1, 0, 1], &[1, 2, 1]).unwrap();
        assert_eq!(r.slacks[1], -2.0);
        assert!(!r.pass);
        assert!(matches!(
            morse_inequalities_check(&[1, 1], &[1, 1, 1]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn mode_names_round_trip() {
        for m in [OracleMode::Standard, OracleMode::Half] {
            assert_eq!(OracleMode::parse(m.as_str()).unwrap(), m);
            assert_eq!(
                serde_json::to_string(&m).unwrap(),
                format!("\"{}\"", m.as_str())
            );
        }
    }
}
