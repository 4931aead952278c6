//! Rational-slope Kronecker foliations of the flat torus `[0, 2π)²`: leafwise
//! critical sets, leafwise Witten spectra and transverse traces.
//!
//! The leaf with intercept `c ∈ [0, 1)` is the closed line through
//! `x₀ = 2πc·(b, −a)/(a² + b²)` with unit direction `(a, b)/|(a, b)|`; the
//! linear form `b·x − a·y` equals `2πc` on it, so the normalized transverse
//! Lebesgue measure is `dc`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::complex::{build_circle, build_complex, kernel_dimension, CochainComplex, Model, Point};
use crate::eigen::EigenOptions;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::morse::{newton_critical_points, CriticalPoint, Field, FieldKind, ScalarField};
use crate::oracle::{
    morse_inequalities_tolerant, oscillator_spectrum, OracleMode, OscillatorModel,
};
use crate::witten::{witten_spectrum, SpectrumTable};

pub const TORUS_SIDE: f64 = 2.0 * PI;

#[derive(Clone, Debug)]
pub struct KroneckerModel {
    slope: (i64, i64),
    n_leaf: usize,
    n_trans: usize,
    leaf_complex: CochainComplex,
    torus: Model,
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

pub fn build_kronecker(a: i64, b: i64, n_leaf: usize, n_trans: usize) -> Result<KroneckerModel> {
    if a == 0 && b == 0 {
        return Err(Error::invalid("slope (0, 0) has no direction"));
    }
    if gcd(a, b) != 1 {
        return Err(Error::invalid(format!("slope ({a}, {b}) is not coprime")));
    }
    if n_leaf < 64 {
        return Err(Error::invalid(format!(
            "n_leaf must be at least 64, got {n_leaf}"
        )));
    }
    if n_trans < 16 {
        return Err(Error::invalid(format!(
            "n_trans must be at least 16, got {n_trans}"
        )));
    }
    let length = TORUS_SIDE * ((a * a + b * b) as f64).sqrt();
    let leaf_complex = build_complex(&build_circle(n_leaf, length / (2.0 * PI))?)?;
    Ok(KroneckerModel {
        slope: (a, b),
        n_leaf,
        n_trans,
        leaf_complex,
        torus: Model::FlatTorus {
            l1: TORUS_SIDE,
            l2: TORUS_SIDE,
        },
    })
}

impl KroneckerModel {
    pub fn slope(&self) -> (i64, i64) {
        self.slope
    }

    pub fn n_leaf(&self) -> usize {
        self.n_leaf
    }

    pub fn n_trans(&self) -> usize {
        self.n_trans
    }

    pub fn leaf_length(&self) -> f64 {
        let (a, b) = self.slope;
        TORUS_SIDE * ((a * a + b * b) as f64).sqrt()
    }

    pub fn direction(&self) -> [f64; 2] {
        let (a, b) = (self.slope.0 as f64, self.slope.1 as f64);
        let r = (a * a + b * b).sqrt();
        [a / r, b / r]
    }

    pub fn base_point(&self, intercept: f64) -> [f64; 2] {
        let (a, b) = (self.slope.0 as f64, self.slope.1 as f64);
        let q = TORUS_SIDE * intercept;
        let r2 = a * a + b * b;
        [q * b / r2, -q * a / r2]
    }

    /// The 1-D complex shared by every leaf.
    pub fn leaf_complex(&self) -> &CochainComplex {
        &self.leaf_complex
    }

    /// Midpoint intercepts and their transverse weights for `n` leaves.
    pub fn quadrature(n: usize) -> Vec<(f64, f64)> {
        (0..n)
            .map(|i| ((i as f64 + 0.5) / n as f64, 1.0 / n as f64))
            .collect()
    }

    pub fn leaves(&self) -> Vec<(f64, f64)> {
        Self::quadrature(self.n_trans)
    }

    fn torus_field(&self, kind: &FieldKind) -> Result<Field> {
        kind.bind(&self.torus)
    }
}

/// `s ↦ f(x₀ + s·u)` on the leaf circle, with leafwise derivatives.
#[derive(Clone, Debug)]
pub struct LeafField {
    field: Field,
    base: [f64; 2],
    dir: [f64; 2],
}

impl LeafField {
    pub fn torus_point(&self, s: f64) -> Point {
        [
            self.base[0] + s * self.dir[0],
            self.base[1] + s * self.dir[1],
            0.0,
        ]
    }

    /// Full Hessian of the torus field at the leaf point `s`.
    pub fn torus_hessian(&self, s: f64) -> [[f64; 3]; 3] {
        self.field.hessian(&self.torus_point(s))
    }

    pub fn direction(&self) -> [f64; 2] {
        self.dir
    }
}

impl ScalarField for LeafField {
    fn value(&self, x: &Point) -> f64 {
        self.field.value(&self.torus_point(x[0]))
    }

    fn gradient(&self, x: &Point) -> [f64; 3] {
        let g = self.field.gradient(&self.torus_point(x[0]));
        [g[0] * self.dir[0] + g[1] * self.dir[1], 0.0, 0.0]
    }

    fn hessian(&self, x: &Point) -> [[f64; 3]; 3] {
        let h = self.field.hessian(&self.torus_point(x[0]));
        let u = self.dir;
        let v = h[0][0] * u[0] * u[0] + (h[0][1] + h[1][0]) * u[0] * u[1] + h[1][1] * u[1] * u[1];
        [[v, 0.0, 0.0], [0.0; 3], [0.0; 3]]
    }

    fn scale(&self) -> f64 {
        self.field.scale()
    }

    fn feature_length(&self) -> f64 {
        self.field.feature_length()
    }
}

pub fn leafwise_restrict(
    kind: &FieldKind,
    model: &KroneckerModel,
    intercept: f64,
) -> Result<LeafField> {
    Ok(LeafField {
        field: model.torus_field(kind)?,
        base: model.base_point(intercept),
        dir: model.direction(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoliatedSample {
    pub leaf: usize,
    pub intercept: f64,
    /// Transverse weight of the leaf.
    pub weight: f64,
    /// Arc length along the leaf.
    pub s: f64,
    /// Torus coordinates.
    pub location: [f64; 2],
    /// Leafwise second derivative.
    pub second_derivative: f64,
    pub index: usize,
}

impl FoliatedSample {
    /// Singular value of the 1×1 leafwise Hessian.
    pub fn e1(&self) -> f64 {
        self.second_derivative.abs()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoliatedCriticalSet {
    pub samples: Vec<FoliatedSample>,
    /// ν-measure of the index-0 and index-1 portions.
    pub c: [f64; 2],
}

impl FoliatedCriticalSet {
    pub fn on_leaf(&self, leaf: usize) -> impl Iterator<Item = &FoliatedSample> {
        self.samples.iter().filter(move |s| s.leaf == leaf)
    }
}

fn leaf_points(
    kind: &FieldKind,
    model: &KroneckerModel,
    leaf: usize,
    intercept: f64,
) -> Result<(LeafField, Vec<CriticalPoint>)> {
    let lf = leafwise_restrict(kind, model, intercept)?;
    let data = newton_critical_points(&lf, model.leaf_complex.mesh(), Execution::Sequential)
        .map_err(|e| match e {
            Error::NotMorse(msg) => Error::NotLeafwiseMorse {
                leaf,
                intercept,
                msg,
            },
            other => other,
        })?;
    Ok((lf, data.points))
}

pub fn foliated_critical_set(
    kind: &FieldKind,
    model: &KroneckerModel,
) -> Result<FoliatedCriticalSet> {
    foliated_critical_set_with(kind, model, model.n_trans, Execution::default())
}

/// Leafwise critical points over `n_trans` midpoint leaves.
pub fn foliated_critical_set_with(
    kind: &FieldKind,
    model: &KroneckerModel,
    n_trans: usize,
    exec: Execution,
) -> Result<FoliatedCriticalSet> {
    let leaves = KroneckerModel::quadrature(n_trans);
    let per_leaf = exec.map_range(leaves.len(), |i| leaf_points(kind, model, i, leaves[i].0));
    let mut samples = Vec::new();
    let mut c = [0.0; 2];
    for (i, res) in per_leaf.into_iter().enumerate() {
        let (lf, points) = res?;
        let (intercept, weight) = leaves[i];
        for p in points {
            let q = lf.torus_point(p.location[0]);
            c[p.index] += weight;
            samples.push(FoliatedSample {
                leaf: i,
                intercept,
                weight,
                s: p.location[0],
                location: [q[0].rem_euclid(TORUS_SIDE), q[1].rem_euclid(TORUS_SIDE)],
                second_derivative: p.xi[0],
                index: p.index,
            });
        }
    }
    Ok(FoliatedCriticalSet { samples, c })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransversalityReport {
    pub pass: bool,
    /// `min |d²f(·, u)|` over the critical samples, relative to the largest
    /// Hessian norm seen; infinite for an empty critical set.
    pub margin: f64,
    /// First sample where the check failed, as torus coordinates.
    pub offending: Option<[f64; 2]>,
    pub reason: Option<String>,
}

/// Rank test of `d²_x f : T_xM × F_x → ℝ` at every sampled critical point.
pub fn transversality_check(kind: &FieldKind, model: &KroneckerModel) -> TransversalityReport {
    let set = match foliated_critical_set(kind, model) {
        Ok(s) => s,
        Err(e) => {
            return TransversalityReport {
                pass: false,
                margin: 0.0,
                offending: None,
                reason: Some(e.to_string()),
            }
        }
    };
    let Ok(field) = model.torus_field(kind) else {
        return TransversalityReport {
            pass: false,
            margin: 0.0,
            offending: None,
            reason: Some(format!("field `{}` is not defined on the torus", kind.id())),
        };
    };
    let u = model.direction();
    let mut worst = f64::INFINITY;
    let mut worst_at = None;
    let mut hmax: f64 = 0.0;
    for s in &set.samples {
        let x = [s.location[0], s.location[1], 0.0];
        let h = field.hessian(&x);
        let col = [
            h[0][0] * u[0] + h[0][1] * u[1],
            h[1][0] * u[0] + h[1][1] * u[1],
        ];
        let norm = (col[0] * col[0] + col[1] * col[1]).sqrt();
        let hn = (h[0][0].powi(2) + h[0][1].powi(2) + h[1][0].powi(2) + h[1][1].powi(2)).sqrt();
        hmax = hmax.max(hn);
        if norm < worst {
            worst = norm;
            worst_at = Some(s.location);
        }
    }
    if set.samples.is_empty() {
        return TransversalityReport {
            pass: true,
            margin: f64::INFINITY,
            offending: None,
            reason: None,
        };
    }
    let margin = if hmax > 0.0 { worst / hmax } else { 0.0 };
    let pass = margin >= crate::morse::NONDEGENERACY;
    TransversalityReport {
        pass,
        margin,
        offending: if pass { None } else { worst_at },
        reason: if pass {
            None
        } else {
            Some("d²f(·, F) drops rank".to_string())
        },
    }
}

/// Leafwise Witten spectrum on the leaf with the given intercept.
pub fn leafwise_witten_spectrum(
    model: &KroneckerModel,
    kind: &FieldKind,
    intercept: f64,
    t: f64,
    p: usize,
    k: usize,
    opts: &EigenOptions,
) -> Result<SpectrumTable> {
    let lf = leafwise_restrict(kind, model, intercept)?;
    witten_spectrum(&model.leaf_complex, &lf, t, p, k, opts)
}

/// Compactly supported test functions on the rescaled axis `t·λ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TestFunction {
    /// `max(0, 1 − x/width)`.
    Hat { width: f64 },
    /// 1 on `[0, end]`, then linear down to 0 at `end + ramp`.
    Plateau { end: f64, ramp: f64 },
    /// Piecewise linear: 0 outside `[lo, hi]`, 1 at `peak`.
    Tent { lo: f64, peak: f64, hi: f64 },
}

impl TestFunction {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            TestFunction::Hat { width } => (1.0 - x / width).max(0.0),
            TestFunction::Plateau { end, ramp } => {
                if x <= end {
                    1.0
                } else {
                    (1.0 - (x - end) / ramp).max(0.0)
                }
            }
            TestFunction::Tent { lo, peak, hi } => {
                if x <= lo || x >= hi {
                    0.0
                } else if x <= peak {
                    (x - lo) / (peak - lo)
                } else {
                    (hi - x) / (hi - peak)
                }
            }
        }
    }

    /// Right end of the support.
    pub fn support_end(&self) -> f64 {
        match *self {
            TestFunction::Hat { width } => width,
            TestFunction::Plateau { end, ramp } => end + ramp,
            TestFunction::Tent { hi, .. } => hi,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            TestFunction::Hat { width } => width > 0.0,
            TestFunction::Plateau { end, ramp } => end >= 0.0 && ramp > 0.0,
            TestFunction::Tent { lo, peak, hi } => lo >= 0.0 && lo < peak && peak < hi,
        };
        if ok && self.support_end().is_finite() {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid test function {self:?}")))
        }
    }
}

/// `Σ_j φ(t·λ_j)` on one leaf, certified by `t·λ_k > supp φ`.
fn leaf_trace(
    model: &KroneckerModel,
    lf: &LeafField,
    t: f64,
    p: usize,
    phi: &TestFunction,
    k: usize,
    opts: &EigenOptions,
) -> Result<f64> {
    let table = witten_spectrum(&model.leaf_complex, lf, t, p, k, opts)?;
    let rescaled = table.rescaled();
    let largest = *rescaled.last().unwrap_or(&0.0);
    if !(largest > phi.support_end()) {
        return Err(Error::InsufficientK {
            k,
            largest,
            support: phi.support_end(),
        });
    }
    Ok(rescaled.iter().map(|&x| phi.eval(x)).sum())
}

/// Same, doubling `k` until the support check passes.
fn leaf_trace_auto(
    model: &KroneckerModel,
    lf: &LeafField,
    t: f64,
    p: usize,
    phi: &TestFunction,
    k0: usize,
    opts: &EigenOptions,
) -> Result<f64> {
    let n = model.leaf_complex.dims()[p];
    let mut k = k0.max(1);
    loop {
        match leaf_trace(model, lf, t, p, phi, k, opts) {
            Err(Error::InsufficientK { .. }) if 2 * k < n => k *= 2,
            other => return other,
        }
    }
}

/// `τ_t(φ(Δ_t^p)) = ∫ Σ_j φ(t·λ_j(leaf)) dν` by the transverse midpoint rule.
pub fn trace(
    model: &KroneckerModel,
    kind: &FieldKind,
    t: f64,
    p: usize,
    phi: &TestFunction,
    k: usize,
    opts: &EigenOptions,
) -> Result<f64> {
    phi.validate()?;
    let leaves = model.leaves();
    let parts = Execution::default().map_range(leaves.len(), |i| {
        let (c, w) = leaves[i];
        let lf = leafwise_restrict(kind, model, c)?;
        leaf_trace(model, &lf, t, p, phi, k, opts)
            .map(|v| w * v)
            .map_err(|e| wrap_leaf(e, i, c))
    });
    parts.into_iter().sum()
}

fn wrap_leaf(e: Error, leaf: usize, intercept: f64) -> Error {
    match e {
        e @ (Error::NotLeafwiseMorse { .. } | Error::Leaf { .. }) => e,
        e => Error::Leaf {
            leaf,
            intercept,
            source: Box::new(e),
        },
    }
}

/// The `t = 0` value: oscillator eigenvalues of the leafwise Hessians at
/// the leafwise critical points, weighted by ν.
pub fn trace_limit(set: &FoliatedCriticalSet, p: usize, phi: &TestFunction) -> Result<f64> {
    phi.validate()?;
    let mut total = 0.0;
    for s in &set.samples {
        let model = OscillatorModel::new(vec![s.second_derivative], p)?;
        let spec = oscillator_spectrum(&model, phi.support_end(), OracleMode::Standard)?;
        total += s.weight * spec.values().iter().map(|&v| phi.eval(v)).sum::<f64>();
    }
    Ok(total)
}

/// `∫ 1/E₁(d²_F f) dν` over the leafwise critical set.
pub fn hessian_singular_integral(kind: &FieldKind, model: &KroneckerModel) -> Result<f64> {
    let set = foliated_critical_set(kind, model)?;
    Ok(set.samples.iter().map(|s| s.weight / s.e1()).sum())
}

/// ν-measure of the leafwise harmonic forms per degree.
pub fn measured_betti(
    model: &KroneckerModel,
    n_trans: usize,
    opts: &EigenOptions,
) -> Result<[f64; 2]> {
    // every leaf carries the same undeformed complex
    let per_leaf = [
        kernel_dimension(&model.leaf_complex.hodge_laplacian(0)?, 4, opts)?,
        kernel_dimension(&model.leaf_complex.hodge_laplacian(1)?, 4, opts)?,
    ];
    let total: f64 = KroneckerModel::quadrature(n_trans)
        .iter()
        .map(|q| q.1)
        .sum();
    Ok([per_leaf[0] as f64 * total, per_leaf[1] as f64 * total])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConnesFackReport {
    pub slope: [i64; 2],
    pub c: [f64; 2],
    pub beta: [f64; 2],
    pub slacks: Vec<f64>,
    /// `|value(n_trans) − value(n_trans/2)|`, accumulated per slack.
    pub error_bars: Vec<f64>,
    pub pass: bool,
    pub euler_equality: bool,
    /// ν-measure of rescaled eigenvalues `t·λ ≤ 0.5` at `t_min`, per degree.
    pub small_eigenvalue_measure: [f64; 2],
    pub t_min: f64,
}

/// Threshold on `t·λ` separating the small-eigenvalue cluster.
pub const CLUSTER_THRESHOLD: f64 = 0.5;

pub fn connes_fack_check(
    model: &KroneckerModel,
    kind: &FieldKind,
    t_min: f64,
    opts: &EigenOptions,
    exec: Execution,
) -> Result<ConnesFackReport> {
    let full = foliated_critical_set_with(kind, model, model.n_trans, exec)?;
    let half = foliated_critical_set_with(kind, model, model.n_trans / 2, exec)?;
    let beta = measured_betti(model, model.n_trans, opts)?;
    let beta_half = measured_betti(model, model.n_trans / 2, opts)?;
    let err: Vec<f64> = (0..2)
        .map(|i| (full.c[i] - half.c[i]).abs() + (beta[i] - beta_half[i]).abs())
        .collect();
    // slack_k is an alternating sum; bound its error by the sum of errors
    let bars: Vec<f64> = (0..2).map(|k| err[..=k].iter().sum()).collect();
    let report = morse_inequalities_tolerant(&full.c, &beta, &bars)?;

    let leaves = model.leaves();
    let phi = TestFunction::Plateau {
        end: CLUSTER_THRESHOLD,
        ramp: 1e-9,
    };
    let mut small = [0.0; 2];
    for (p, slot) in small.iter_mut().enumerate() {
        let parts = exec.map_range(leaves.len(), |i| {
            let (c, w) = leaves[i];
            let lf = leafwise_restrict(kind, model, c)?;
            let table = witten_spectrum(&model.leaf_complex, &lf, t_min, p, 8, opts)
                .map_err(|e| wrap_leaf(e, i, c))?;
            Ok::<f64, Error>(w * table.rescaled().iter().map(|&x| phi.eval(x)).sum::<f64>())
        });
        *slot = parts.into_iter().sum::<Result<f64>>()?;
    }
    Ok(ConnesFackReport {
        slope: [model.slope.0, model.slope.1],
        c: full.c,
        beta,
        slacks: report.slacks,
        error_bars: bars,
        pass: report.pass,
        euler_equality: report.euler_equality,
        small_eigenvalue_measure: small,
        t_min,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceReport {
    pub slope: [i64; 2],
    pub field: FieldKind,
    /// Decreasing positive t values followed by the `t = 0` limit point.
    pub schedule: Vec<f64>,
    /// Degree → `τ_t(φ(Δ_t))` aligned with `schedule`.
    pub traces: std::collections::BTreeMap<String, Vec<f64>>,
    pub phi: TestFunction,
    pub c: [f64; 2],
    pub beta: [f64; 2],
    pub slacks: Vec<f64>,
    pub error_bars: Vec<f64>,
    pub pass: bool,
    pub euler_equality: bool,
    /// Largest `|τ_{t_i} − τ_{t_{i+1}}|` in degree 0 along the schedule.
    pub max_jump: f64,
    pub hessian_singular_integral: f64,
    pub transversality: TransversalityReport,
}

/// Traces along a decreasing schedule (plus the `t = 0` oracle point) and
/// the measured Morse inequalities.
pub fn trace_report(
    model: &KroneckerModel,
    kind: &FieldKind,
    schedule: &[f64],
    phi: &TestFunction,
    opts: &EigenOptions,
    exec: Execution,
) -> Result<TraceReport> {
    phi.validate()?;
    if schedule.is_empty()
        || schedule.windows(2).any(|w| !(w[0] > w[1]))
        || !(schedule[schedule.len() - 1] > 0.0)
    {
        return Err(Error::invalid(
            "trace schedule must be nonempty, positive and strictly decreasing",
        ));
    }
    let set = foliated_critical_set_with(kind, model, model.n_trans, exec)?;
    let t_min = schedule[schedule.len() - 1];
    let cf = connes_fack_check(model, kind, t_min, opts, exec)?;
    let leaves = model.leaves();
    let nl = leaves.len();
    let jobs: Vec<(usize, usize, f64)> = (0..2)
        .flat_map(|p| {
            schedule
                .iter()
                .flat_map(move |&t| (0..nl).map(move |i| (p, i, t)))
        })
        .collect();
    let values = exec.map(&jobs, |&(p, i, t)| {
        let (c, w) = leaves[i];
        let lf = leafwise_restrict(kind, model, c)?;
        leaf_trace_auto(model, &lf, t, p, phi, 12, opts)
            .map(|v| w * v)
            .map_err(|e| wrap_leaf(e, i, c))
    });
    let mut traces = std::collections::BTreeMap::new();
    let per_t = leaves.len();
    for p in 0..2 {
        let mut row = Vec::with_capacity(schedule.len() + 1);
        for j in 0..schedule.len() {
            let start = (p * schedule.len() + j) * per_t;
            let mut sum = 0.0;
            for v in &values[start..start + per_t] {
                sum += v.as_ref().map_err(clone_error)?;
            }
            row.push(sum);
        }
        row.push(trace_limit(&set, p, phi)?);
        traces.insert(p.to_string(), row);
    }
    let max_jump = traces["0"]
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .fold(0.0, f64::max);
    let mut full_schedule = schedule.to_vec();
    full_schedule.push(0.0);
    Ok(TraceReport {
        slope: [model.slope.0, model.slope.1],
        field: kind.clone(),
        schedule: full_schedule,
        traces,
        phi: *phi,
        c: cf.c,
        beta: cf.beta,
        slacks: cf.slacks,
        error_bars: cf.error_bars,
        pass: cf.pass,
        euler_equality: cf.euler_equality,
        max_jump,
        hessian_singular_integral: set.samples.iter().map(|s| s.weight / s.e1()).sum(),
        transversality: transversality_check(kind, model),
    })
}

fn clone_error(e: &Error) -> Error {
    match e {
        Error::Leaf {
            leaf,
            intercept,
            source,
        } => Error::Leaf {
            leaf: *leaf,
            intercept: *intercept,
            source: Box::new(clone_error(source)),
        },
        Error::NotLeafwiseMorse {
            leaf,
            intercept,
            msg,
        } => Error::NotLeafwiseMorse {
            leaf: *leaf,
            intercept: *intercept,
            msg: msg.clone(),
        },
        Error::OverflowGuard { ratio, limit, t } => Error::OverflowGuard {
            ratio: *ratio,
            limit: *limit,
            t: *t,
        },
        Error::InsufficientK {
            k,
            largest,
            support,
        } => Error::InsufficientK {
            k: *k,
            largest: *largest,
            support: *support,
        },
        Error::SolverFailure(m) => Error::SolverFailure(m.clone()),
        Error::NotMorse(m) => Error::NotMorse(m.clone()),
        other => Error::invalid(other.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(a: i64, b: i64) -> KroneckerModel {
        build_kronecker(a, b, 128, 16).unwrap()
    }

    #[test]
    fn slopes_and_lengths() {
        assert!((model(1, 0).leaf_length() - 2.0 * PI).abs() < 1e-15);
        assert!((model(1, 1).leaf_length() - 2.0 * PI * 2f64.sqrt()).abs() < 1e-14);
        assert!(build_kronecker(2, 2, 128, 16).is_err());
        assert!(build_kronecker(0, 0, 128, 16).is_err());
        assert!(build_kronecker(1, 0, 32, 16).is_err());
        assert!(build_kronecker(1, 0, 128, 8).is_err());
        // base points realize the transverse coordinate b·x − a·y = 2πc
        let m = model(2, 3);
        let x = m.base_point(0.3);
        assert!((3.0 * x[0] - 2.0 * x[1] - 2.0 * PI * 0.3).abs() < 1e-12);
    }

    #[test]
    fn restrictions() {
        let m = model(1, 0);
        let lf = leafwise_restrict(&FieldKind::CosTheta, &m, 0.37).unwrap();
        for s in [0.0, 0.5, 2.0, 5.0] {
            assert!((lf.value(&[s, 0.0, 0.0]) - s.cos()).abs() < 1e-14);
        }
        let m = model(1, 1);
        let lf = leafwise_restrict(&FieldKind::CosTheta, &m, 0.0).unwrap();
        for s in [0.0, 0.5, 2.0, 5.0] {
            assert!((lf.value(&[s, 0.0, 0.0]) - (s / 2f64.sqrt()).cos()).abs() < 1e-14);
            let g = -(s / 2f64.sqrt()).sin() / 2f64.sqrt();
            assert!((lf.gradient(&[s, 0.0, 0.0])[0] - g).abs() < 1e-14);
        }
    }

    #[test]
    fn critical_sets() {
        for (a, b) in [(1, 0), (1, 1)] {
            let set = foliated_critical_set(&FieldKind::CosTheta, &model(a, b)).unwrap();
            assert!((set.c[0] - 1.0).abs() < 1e-12 && (set.c[1] - 1.0).abs() < 1e-12);
            for s in &set.samples {
                let th = s.location[0];
                assert!(th.sin().abs() < 1e-9);
                assert_eq!(s.index, (th.cos() > 0.0) as usize);
            }
        }
        let set = foliated_critical_set(&FieldKind::Tilted { eps: 0.3 }, &model(1, 1)).unwrap();
        assert!((set.c[0] - 1.0).abs() < 1e-12 && (set.c[1] - 1.0).abs() < 1e-12);
        let set = foliated_critical_set(&FieldKind::CosKTheta { k: 2.0 }, &model(1, 1)).unwrap();
        assert!((set.c[0] - 2.0).abs() < 1e-12 && (set.c[1] - 2.0).abs() < 1e-12);
        assert!(matches!(
            foliated_critical_set(&FieldKind::Zero, &model(1, 0)),
            Err(Error::NotLeafwiseMorse { .. })
        ));
    }

    #[test]
    fn transversality() {
        let r = transversality_check(&FieldKind::CosTheta, &model(1, 0));
        assert!(r.pass && (r.margin - 1.0).abs() < 1e-12);
        let r = transversality_check(&FieldKind::Zero, &model(1, 0));
        assert!(!r.pass && r.margin == 0.0);
        let r = transversality_check(&FieldKind::CosTheta, &model(0, 1));
        assert!(!r.pass && r.margin == 0.0);
        assert!(r.reason.unwrap().contains("not leafwise Morse"));
    }

    #[test]
    fn singular_integral() {
        let v = hessian_singular_integral(&FieldKind::CosTheta, &model(1, 0)).unwrap();
        assert!((v - 2.0).abs() < 1e-6);
        let v = hessian_singular_integral(&FieldKind::CosTheta, &model(1, 1)).unwrap();
        assert!((v - 4.0).abs() < 1e-6);
        let vals: Vec<f64> = [0.0, 0.3, 0.6, 0.9, 0.99]
            .iter()
            .map(|&e| {
                hessian_singular_integral(&FieldKind::Tilted { eps: e }, &model(1, 1)).unwrap()
            })
            .collect();
        assert!((vals[0] - 4.0).abs() < 1e-6);
        assert!(vals.windows(2).all(|w| w[1] > w[0]), "{vals:?}");
    }

    #[test]
    fn product_leaves_are_identical() {
        let m = model(1, 0);
        let opts = EigenOptions::default();
        let a = leafwise_witten_spectrum(&m, &FieldKind::CosTheta, 0.1, 0.3, 0, 6, &opts).unwrap();
        let b = leafwise_witten_spectrum(&m, &FieldKind::CosTheta, 0.8, 0.3, 0, 6, &opts).unwrap();
        assert_eq!(a.values, b.values);
    }

    #[test]
    fn traces_are_nonnegative_and_certified() {
        let m = model(1, 1);
        let opts = EigenOptions::default();
        let phi = TestFunction::Hat { width: 1.0 };
        let tau = trace(&m, &FieldKind::CosTheta, 0.05, 0, &phi, 12, &opts).unwrap();
        assert!(tau >= 0.0);
        // at small t the hat sees the single zero mode of each index-0 point
        assert!((tau - 1.0).abs() < 0.05, "{tau}");
        let set = foliated_critical_set(&FieldKind::CosTheta, &m).unwrap();
        assert!((trace_limit(&set, 0, &phi).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(
            trace(
                &m,
                &FieldKind::CosTheta,
                1.0,
                0,
                &TestFunction::Hat { width: 100.0 },
                3,
                &opts
            ),
            Err(Error::Leaf { .. })
        ));
    }

    #[test]
    fn connes_fack_examples() {
        let opts = EigenOptions::default();
        for (a, b) in [(1, 0), (1, 1)] {
            let r = connes_fack_check(
                &model(a, b),
                &FieldKind::CosTheta,
                0.05,
                &opts,
                Execution::default(),
            )
            .unwrap();
            assert!(r.pass && r.euler_equality);
            assert!(r.slacks.iter().all(|s| s.abs() < 1e-12));
            assert!((r.small_eigenvalue_measure[0] - 1.0).abs() < 1e-12);
        }
        let r = connes_fack_check(
            &model(1, 1),
            &FieldKind::CosKTheta { k: 2.0 },
            0.05,
            &opts,
            Execution::default(),
        )
        .unwrap();
        assert!(r.pass);
        assert!((r.slacks[0] - 1.0).abs() < 1e-12 && r.slacks[1].abs() < 1e-12);
    }
}
