//! The control system `Sigma(A, B, C, D)` in spectral coordinates, its JSON
//! description, the compatibility check and the transfer symbol `m13`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heat::{self, HeatConfig};
use crate::spectral::{DiagonalGenerator, SpectralVector, StabilityBound};

/// Largest truncation order accepted from a system description.
pub const MAX_MODES: usize = 4096;

/// Default largest tail bound still accepted as a certified finite remainder.
pub const DEFAULT_MAX_TAIL: f64 = 10.0;

/// Summable bound on the per-mode terms `sum_i |c_{i n}| |b_{n j}| / |lambda - alpha_n|`
/// of a single input channel `j`, valid uniformly for `Re lambda >= 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TailMajorant {
    /// `scale / (1 + n^2)`
    InverseSquare { scale: f64 },
    /// `scale * (1 + n)^(-exponent)`; divergent for `exponent <= 1`.
    Power { scale: f64, exponent: f64 },
}

impl TailMajorant {
    pub fn term(&self, n: usize) -> f64 {
        let n = n as f64;
        match *self {
            TailMajorant::InverseSquare { scale } => scale / (1.0 + n * n),
            TailMajorant::Power { scale, exponent } => scale * (1.0 + n).powf(-exponent),
        }
    }

    /// Upper bound on `sum_{n >= from} term(n)`.
    pub fn tail_sum(&self, from: usize) -> f64 {
        match *self {
            TailMajorant::InverseSquare { scale } => scale * inverse_square_tail(from),
            TailMajorant::Power { scale, exponent } => {
                if scale == 0.0 {
                    return 0.0;
                }
                if exponent <= 1.0 {
                    return f64::INFINITY;
                }
                // Integral test: sum_{n>=N} (1+n)^{-q} <= (1+N)^{-q} + (1+N)^{1-q}/(q-1).
                let a = 1.0 + from as f64;
                scale * (a.powf(-exponent) + a.powf(1.0 - exponent) / (exponent - 1.0))
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            TailMajorant::InverseSquare { scale } => scale.is_finite() && scale >= 0.0,
            TailMajorant::Power { scale, exponent } => scale.is_finite() && scale >= 0.0 && exponent.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Schema("tail majorant needs a finite non-negative scale and finite exponent".into()))
        }
    }
}

/// `sum_{n >= from} 1/(1+n^2)`, from the closed form `(1 + pi coth pi)/2`
/// of the full series.
pub fn inverse_square_tail(from: usize) -> f64 {
    let pi = std::f64::consts::PI;
    let total = 0.5 * (1.0 + pi / pi.tanh());
    if from > 1_000_000 {
        // Euler-Maclaurin leading terms; avoids a long partial sum.
        let a = from as f64;
        return 1.0 / (a - 0.5) - 1.0 / (12.0 * (a - 0.5).powi(3));
    }
    let partial: f64 = (0..from).map(|n| 1.0 / (1.0 + (n * n) as f64)).sum();
    (total - partial).max(0.0)
}

/// How the modes beyond the truncation order are accounted for.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Tail {
    /// The truncation is the whole system.
    Exact,
    /// The system is truncated and the remainder is bounded by a majorant.
    Majorant(TailMajorant),
    /// The system is truncated and nothing is known about the remainder.
    Undeclared,
}

/// Tail estimates for the Gram constants, reported but not used in verdicts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GramTails {
    pub observation: f64,
    pub control_per_channel: f64,
}

/// Truncated diagonal model of `Sigma(A, B, C, D)`.
#[derive(Clone, Debug)]
pub struct SpectralSystem {
    gen: DiagonalGenerator,
    control: DMatrix<Complex64>,
    observation: DMatrix<Complex64>,
    feedthrough: DMatrix<Complex64>,
    tail: Tail,
    gram_tails: Option<GramTails>,
}

impl SpectralSystem {
    /// `control` is `N x m`, `observation` is `k x N`, `feedthrough` is `k x m`.
    pub fn new(
        gen: DiagonalGenerator,
        control: DMatrix<Complex64>,
        observation: DMatrix<Complex64>,
        feedthrough: DMatrix<Complex64>,
        tail: Tail,
    ) -> Result<Self> {
        let n = gen.modes();
        if control.nrows() != n || observation.ncols() != n {
            return Err(Error::Schema(format!(
                "control has {} rows and observation {} columns, but there are {n} modes",
                control.nrows(),
                observation.ncols()
            )));
        }
        if control.ncols() == 0 || observation.nrows() == 0 {
            return Err(Error::Schema("need at least one input and one output channel".into()));
        }
        if feedthrough.shape() != (observation.nrows(), control.ncols()) {
            return Err(Error::Schema(format!(
                "feedthrough is {:?}, expected {:?}",
                feedthrough.shape(),
                (observation.nrows(), control.ncols())
            )));
        }
        let finite = |m: &DMatrix<Complex64>| m.iter().all(|z| z.re.is_finite() && z.im.is_finite());
        if !(finite(&control) && finite(&observation) && finite(&feedthrough)) {
            return Err(Error::Schema("system matrices must be finite".into()));
        }
        if let Tail::Majorant(m) = &tail {
            m.validate()?;
        }
        Ok(Self { gen, control, observation, feedthrough, tail, gram_tails: None })
    }

    pub(crate) fn with_gram_tails(mut self, tails: GramTails) -> Self {
        self.gram_tails = Some(tails);
        self
    }

    pub fn generator(&self) -> &DiagonalGenerator {
        &self.gen
    }

    pub fn control(&self) -> &DMatrix<Complex64> {
        &self.control
    }

    pub fn observation(&self) -> &DMatrix<Complex64> {
        &self.observation
    }

    pub fn feedthrough(&self) -> &DMatrix<Complex64> {
        &self.feedthrough
    }

    pub fn tail(&self) -> Tail {
        self.tail
    }

    pub fn gram_tails(&self) -> Option<GramTails> {
        self.gram_tails
    }

    pub fn modes(&self) -> usize {
        self.gen.modes()
    }

    pub fn inputs(&self) -> usize {
        self.control.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.observation.nrows()
    }

    /// `C x` for a state vector.
    pub fn observe(&self, x: &SpectralVector) -> Vec<Complex64> {
        (0..self.outputs())
            .map(|i| (0..self.modes()).map(|n| self.observation[(i, n)] * x.as_slice()[n]).sum())
            .collect()
    }

    /// `D u` for an input value.
    pub fn feed(&self, u: &[Complex64]) -> Vec<Complex64> {
        (0..self.outputs())
            .map(|i| (0..self.inputs()).map(|j| self.feedthrough[(i, j)] * u[j]).sum())
            .collect()
    }

    /// `sum_i |c_{i n}|`, the per-mode observation weight.
    pub(crate) fn observation_weight(&self, n: usize) -> f64 {
        self.observation.column(n).iter().map(|z| z.norm()).sum()
    }

    /// `sum_j |b_{n j}|`.
    pub(crate) fn control_weight(&self, n: usize) -> f64 {
        self.control.row(n).iter().map(|z| z.norm()).sum()
    }
}

type ComplexRows = Vec<Vec<[f64; 2]>>;

/// JSON system description.
///
/// Eigenvalues are given for the original generator; the stored system uses
/// `alpha_n - shift`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigenvalues: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control: Option<ComplexRows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observation: Option<ComplexRows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feedthrough: Option<ComplexRows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stability: Option<StabilityBound>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<TailMajorant>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncated: Option<bool>,
}

impl SystemSpec {
    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))
    }

    pub fn heat(modes: usize, shift: f64) -> Self {
        Self { builtin: Some("heat".into()), modes: Some(modes), shift: Some(shift), ..Self::default() }
    }

    /// Canonical JSON used for the certificate digest.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("spec serialises")
    }

    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        Sha256::digest(self.canonical_json().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

fn complex(v: [f64; 2]) -> Complex64 {
    Complex64::new(v[0], v[1])
}

fn matrix(name: &str, rows: &ComplexRows, nrows: usize, ncols: usize) -> Result<DMatrix<Complex64>> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Schema(format!("'{name}' must be a {nrows} x {ncols} array of [re, im] pairs")));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| complex(rows[i][j])))
}

/// Validates a description and builds the shifted spectral system.
pub fn build_system(spec: &SystemSpec) -> Result<SpectralSystem> {
    let shift = spec.shift.unwrap_or(0.0);
    if !shift.is_finite() {
        return Err(Error::Schema("shift must be finite".into()));
    }
    if let Some(name) = &spec.builtin {
        if spec.eigenvalues.is_some()
            || spec.control.is_some()
            || spec.observation.is_some()
            || spec.feedthrough.is_some()
            || spec.tail.is_some()
            || spec.truncated.is_some()
        {
            return Err(Error::Schema("explicit arrays are not allowed together with 'builtin'".into()));
        }
        if name != "heat" {
            return Err(Error::Schema(format!("unknown builtin '{name}'")));
        }
        let modes = spec.modes.ok_or_else(|| Error::Schema("builtin heat needs 'modes'".into()))?;
        if modes == 0 || modes > MAX_MODES {
            return Err(Error::Schema(format!("modes must be in 1..={MAX_MODES}")));
        }
        if spec.stability.is_some() {
            return Err(Error::Schema("builtin heat derives its own stability bound".into()));
        }
        let cfg = HeatConfig { modes, shift: if spec.shift.is_some() { shift } else { 1.0 }, ..HeatConfig::default() };
        return heat::build_heat_system(&cfg);
    }

    let eig = spec.eigenvalues.as_ref().ok_or_else(|| Error::Schema("missing 'eigenvalues'".into()))?;
    let n = eig.len();
    if n == 0 || n > MAX_MODES {
        return Err(Error::Schema(format!("number of eigenvalues must be in 1..={MAX_MODES}")));
    }
    if let Some(m) = spec.modes {
        if m != n {
            return Err(Error::Schema(format!("'modes' = {m} but {n} eigenvalues given")));
        }
    }
    let control = spec.control.as_ref().ok_or_else(|| Error::Schema("missing 'control'".into()))?;
    let observation = spec.observation.as_ref().ok_or_else(|| Error::Schema("missing 'observation'".into()))?;
    let m = control.first().map_or(0, |r| r.len());
    let k = observation.len();
    let control = matrix("control", control, n, m)?;
    let observation = matrix("observation", observation, k, n)?;
    let feedthrough = match &spec.feedthrough {
        Some(rows) => matrix("feedthrough", rows, k, m)?,
        None => DMatrix::from_element(k, m, Complex64::new(0.0, 0.0)),
    };
    let alphas: Vec<Complex64> = eig.iter().map(|&v| complex(v) - shift).collect();
    let gen = DiagonalGenerator::new(alphas, shift, spec.stability)?;
    let tail = match (spec.tail, spec.truncated) {
        (Some(t), _) => Tail::Majorant(t),
        (None, Some(true)) => Tail::Undeclared,
        (None, _) => Tail::Exact,
    };
    SpectralSystem::new(gen, control, observation, feedthrough, tail)
}

/// Evidence for `rg R(lambda, A_{-1}) B in D(C_L)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CompatReport {
    pub lambda_probe: [f64; 2],
    pub truncated_sum: f64,
    pub tail_bound: f64,
    pub max_tail: f64,
    pub verdict: bool,
}

fn check_resolvent_point(sys: &SpectralSystem, lambda: Complex64) -> Result<()> {
    if !(lambda.re > sys.gen.omega()) {
        return Err(Error::Domain(format!(
            "Re(lambda) = {} must exceed omega = {}",
            lambda.re,
            sys.gen.omega()
        )));
    }
    if sys.gen.eigenvalues().iter().any(|a| (lambda - a).norm() <= 1e-14 * (1.0 + a.norm())) {
        return Err(Error::Spectrum { re: lambda.re, im: lambda.im });
    }
    Ok(())
}

fn tail_bound(sys: &SpectralSystem, lambda: Complex64) -> Result<f64> {
    match sys.tail {
        Tail::Exact => Ok(0.0),
        Tail::Undeclared => Err(Error::CertificateIncomplete(
            "the system is declared truncated but carries no tail majorant".into(),
        )),
        Tail::Majorant(m) => {
            if lambda.re < 0.0 {
                return Err(Error::Precondition(
                    "tail majorants are only valid for Re(lambda) >= 0".into(),
                ));
            }
            Ok(sys.inputs() as f64 * m.tail_sum(sys.modes()))
        }
    }
}

/// Absolute convergence of `sum_n c_n b_n / (lambda - alpha_n)`.
pub fn compatibility_check(sys: &SpectralSystem, lambda: Complex64, max_tail: f64) -> Result<CompatReport> {
    check_resolvent_point(sys, lambda)?;
    let tail = tail_bound(sys, lambda)?;
    let truncated_sum: f64 = (0..sys.modes())
        .map(|n| {
            sys.observation_weight(n) * sys.control_weight(n) / (lambda - sys.gen.eigenvalues()[n]).norm()
        })
        .sum();
    let verdict = (truncated_sum + tail).is_finite() && tail < max_tail;
    Ok(CompatReport { lambda_probe: [lambda.re, lambda.im], truncated_sum, tail_bound: tail, max_tail, verdict })
}

/// `m13(gamma) = C_L R(i gamma, A_{-1}) B`, with every entry known up to
/// `tail_radius`.
#[derive(Clone, Debug)]
pub struct SymbolValue {
    pub value: DMatrix<Complex64>,
    pub tail_radius: f64,
}

fn symbol_matrix(sys: &SpectralSystem, lambda: Complex64) -> DMatrix<Complex64> {
    let (k, m) = (sys.outputs(), sys.inputs());
    let mut out = DMatrix::from_element(k, m, Complex64::new(0.0, 0.0));
    for (n, a) in sys.gen.eigenvalues().iter().enumerate() {
        let r = (lambda - a).inv();
        for i in 0..k {
            let ci = sys.observation[(i, n)] * r;
            if ci == Complex64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..m {
                out[(i, j)] += ci * sys.control[(n, j)];
            }
        }
    }
    out
}

pub fn m13_eval(sys: &SpectralSystem, gamma: f64, max_tail: f64) -> Result<SymbolValue> {
    let lambda = Complex64::new(0.0, gamma);
    let compat = compatibility_check(sys, lambda, max_tail)?;
    if !compat.verdict {
        return Err(Error::Precondition(format!(
            "compatibility not verified at i*{gamma}: tail bound {}",
            compat.tail_bound
        )));
    }
    Ok(SymbolValue { value: symbol_matrix(sys, lambda), tail_radius: compat.tail_bound })
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<Complex64>) -> f64 {
    if m.nrows() == 1 || m.ncols() == 1 {
        return m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    }
    m.clone().singular_values().iter().cloned().fold(0.0, f64::max)
}

/// Sandwich `[grid_sup, upper_bound]` for `sup_gamma ||m13(gamma)||`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MultiplierReport {
    pub gamma_max: f64,
    pub steps: usize,
    pub grid_sup: f64,
    pub argmax_gamma: f64,
    pub truncated_majorant: f64,
    pub tail: f64,
    pub upper_bound: f64,
    pub pass: bool,
}

/// Grid point `i` of the symmetric scan; nested grids share points exactly.
pub fn scan_gamma(gamma_max: f64, steps: usize, i: usize) -> f64 {
    let last = (steps - 1) as f64;
    gamma_max * ((2 * i) as f64 - last) / last
}

pub fn m13_sup_scan(sys: &SpectralSystem, gamma_max: f64, steps: usize, max_tail: f64) -> Result<MultiplierReport> {
    if !(gamma_max > 0.0 && gamma_max.is_finite()) {
        return Err(Error::Domain(format!("gamma_max must be positive, got {gamma_max}")));
    }
    if steps < 2 {
        return Err(Error::Domain("a scan needs at least 2 steps".into()));
    }
    // Validates the precondition once; the tail does not depend on gamma.
    let probe = m13_eval(sys, 0.0, max_tail)?;
    let (grid_sup, argmax) = (0..steps)
        .into_par_iter()
        .map(|i| {
            let gamma = scan_gamma(gamma_max, steps, i);
            (spectral_norm(&symbol_matrix(sys, Complex64::new(0.0, gamma))), i)
        })
        .reduce(
            || (f64::NEG_INFINITY, usize::MAX),
            |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a },
        );
    let truncated_majorant: f64 = (0..sys.modes())
        .map(|n| sys.observation_weight(n) * sys.control_weight(n) / sys.gen.eigenvalues()[n].re.abs())
        .sum();
    let upper_bound = truncated_majorant + probe.tail_radius;
    Ok(MultiplierReport {
        gamma_max,
        steps,
        grid_sup,
        argmax_gamma: scan_gamma(gamma_max, steps, argmax),
        truncated_majorant,
        tail: probe.tail_radius,
        upper_bound,
        pass: upper_bound.is_finite() && grid_sup <= upper_bound * (1.0 + 1e-12),
    })
}
