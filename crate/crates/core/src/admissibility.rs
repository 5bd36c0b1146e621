//! Admissibility constants for `p = 2` from Gram matrices, and the
//! time-uniform constants built from them.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::signals::phi_psi;
use crate::system::{GramTails, MultiplierReport, SpectralSystem};

/// `int_0^t0 e^{s r} dr`.
fn kernel(s: Complex64, t0: f64) -> Result<Complex64> {
    if s.norm() == 0.0 {
        return Err(Error::Internal("Gram exponent vanishes; the generator is not stable".into()));
    }
    let w = s * t0;
    if w.re > 0.0 {
        return Err(Error::Internal("Gram exponent has positive real part".into()));
    }
    Ok(phi_psi(w).0 * t0)
}

/// Largest eigenvalue of a Hermitian matrix.
pub fn hermitian_max_eigenvalue(g: &DMatrix<Complex64>) -> f64 {
    if g.nrows() == 1 {
        return g[(0, 0)].re;
    }
    g.clone().symmetric_eigen().eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

fn check_t0(t0: f64) -> Result<()> {
    if !(t0 > 0.0 && t0.is_finite()) {
        return Err(Error::Domain(format!("t0 must be positive, got {t0}")));
    }
    Ok(())
}

fn gram(
    sys: &SpectralSystem,
    t0: f64,
    weight: impl Fn(usize, usize) -> Complex64,
    exponent: impl Fn(Complex64, Complex64) -> Complex64,
) -> Result<DMatrix<Complex64>> {
    check_t0(t0)?;
    let n = sys.modes();
    let alphas = sys.generator().eigenvalues();
    let mut g = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for a in 0..n {
        for b in a..n {
            let w = weight(a, b);
            let v = if w == Complex64::new(0.0, 0.0) { w } else { w * kernel(exponent(alphas[a], alphas[b]), t0)? };
            g[(a, b)] = v;
            g[(b, a)] = v.conj();
        }
        g[(a, a)].im = 0.0;
    }
    Ok(g)
}

/// `G_mn = <C e_m, C e_n> int_0^t0 e^{(conj(alpha_m) + alpha_n) s} ds`, so that
/// `int_0^t0 ||C T(s) x||^2 ds = x* G x`; returns `G` and its largest eigenvalue.
pub fn observation_gram(sys: &SpectralSystem, t0: f64) -> Result<(DMatrix<Complex64>, f64)> {
    let c = sys.observation();
    let g = gram(
        sys,
        t0,
        |a, b| (0..sys.outputs()).map(|i| c[(i, a)].conj() * c[(i, b)]).sum(),
        |am, an| am.conj() + an,
    )?;
    let m = hermitian_max_eigenvalue(&g).max(0.0);
    Ok((g, m))
}

fn control_gram_with(sys: &SpectralSystem, t0: f64, channels: &[usize]) -> Result<(DMatrix<Complex64>, f64)> {
    let b = sys.control();
    let g = gram(
        sys,
        t0,
        |m, n| channels.iter().map(|&j| b[(m, j)] * b[(n, j)].conj()).sum(),
        |am, an| am + an.conj(),
    )?;
    let m = hermitian_max_eigenvalue(&g).max(0.0).sqrt();
    Ok((g, m))
}

/// Gram matrix of `u -> int_0^t0 T(t0 - r) B u(r) dr` and its operator norm.
pub fn control_gram(sys: &SpectralSystem, t0: f64) -> Result<(DMatrix<Complex64>, f64)> {
    let all: Vec<usize> = (0..sys.inputs()).collect();
    control_gram_with(sys, t0, &all)
}

/// [`control_gram`] for the single input channel `j`.
pub fn control_gram_channel(sys: &SpectralSystem, t0: f64, j: usize) -> Result<(DMatrix<Complex64>, f64)> {
    if j >= sys.inputs() {
        return Err(Error::Dimension(format!("channel {j} out of range")));
    }
    control_gram_with(sys, t0, &[j])
}

/// The enclosure `[grid_sup, upper_bound]` of the input-output operator norm.
pub fn pair_constant(scan: Option<&MultiplierReport>) -> Result<(f64, f64)> {
    let scan = scan.ok_or_else(|| Error::Precondition("pair constant needs a multiplier scan".into()))?;
    Ok((scan.grid_sup, scan.upper_bound))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct GlobalConstants {
    #[serde(rename = "M_C")]
    pub m_c: f64,
    #[serde(rename = "M_B")]
    pub m_b: f64,
    #[serde(rename = "M_BC")]
    pub m_bc: f64,
}

/// `M_C = M_obs (1 + K^p / (1 - e^{p omega t0}))`,
/// `M_B = M_ctl K (1 + 1 / (1 - e^{omega t0}))`,
/// `M_BC = M_pair + M_C^{1/p} M_B K / (1 - e^{omega})`.
///
/// `M_obs` bounds the `p`-th power of the observation norm while `M_ctl`
/// bounds the norm itself. `M_BC` assumes the locals were taken at `t0 = 1`.
pub fn global_constants(m_obs: f64, m_ctl: f64, m_pair: f64, k: f64, omega: f64, p: f64, t0: f64) -> Result<GlobalConstants> {
    if !(omega < 0.0) {
        return Err(Error::Stability(format!("global constants need omega < 0, got {omega}")));
    }
    if !(k >= 1.0) {
        return Err(Error::Stability(format!("global constants need K >= 1, got {k}")));
    }
    check_t0(t0)?;
    let m_c = m_obs + m_obs * k.powf(p) / -(p * omega * t0).exp_m1();
    let m_b = m_ctl * k + m_ctl * k / -(omega * t0).exp_m1();
    let m_bc = m_pair + m_c.powf(1.0 / p) * m_b * k / -omega.exp_m1();
    Ok(GlobalConstants { m_c, m_b, m_bc })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AdmissibilityReport {
    pub t0: f64,
    pub p: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub omega: f64,
    pub observation_constant: f64,
    pub control_constant: f64,
    pub control_channel_constants: Vec<f64>,
    pub pair_interval: [f64; 2],
    pub globals: GlobalConstants,
    pub globals_normalization: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tails: Option<GramTails>,
    pub pass: bool,
}

/// Local constants at `t0`, the pair enclosure from `scan`, and the globals,
/// with `M_BC` built from locals at `t0 = 1`.
pub fn admissibility_report(sys: &SpectralSystem, t0: f64, scan: Option<&MultiplierReport>) -> Result<AdmissibilityReport> {
    let p = 2.0;
    let (k, omega) = (sys.generator().k(), sys.generator().omega());
    let (_, m_obs) = observation_gram(sys, t0)?;
    let (_, m_ctl) = control_gram(sys, t0)?;
    let channels = (0..sys.inputs())
        .map(|j| control_gram_channel(sys, t0, j).map(|r| r.1))
        .collect::<Result<Vec<_>>>()?;
    let (lo, hi) = pair_constant(scan)?;
    let mut globals = global_constants(m_obs, m_ctl, hi, k, omega, p, t0)?;
    if t0 != 1.0 {
        let (_, obs1) = observation_gram(sys, 1.0)?;
        let (_, ctl1) = control_gram(sys, 1.0)?;
        globals.m_bc = global_constants(obs1, ctl1, hi, k, omega, p, 1.0)?.m_bc;
    }
    let pass = [m_obs, m_ctl, globals.m_c, globals.m_b, globals.m_bc].iter().all(|v| v.is_finite());
    Ok(AdmissibilityReport {
        t0,
        p,
        k,
        omega,
        observation_constant: m_obs,
        control_constant: m_ctl,
        control_channel_constants: channels,
        pair_interval: [lo, hi],
        globals,
        globals_normalization: "M_BC uses local constants at t0 = 1".into(),
        tails: sys.gram_tails(),
        pass,
    })
}
