//! End-to-end well-posedness certificates.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::admissibility::{admissibility_report, AdmissibilityReport};
use crate::error::{Error, Result};
use crate::laplace::{verify_resolvent_entries, ResidualReport, ROUNDING_SLACK};
use crate::signals::{Signal, GRID_TOLERANCE, TRAPEZOID_SWITCH};
use crate::spectral::SpectralVector;
use crate::system::{
    build_system, compatibility_check, m13_sup_scan, CompatReport, MultiplierReport, SpectralSystem, SystemSpec,
    DEFAULT_MAX_TAIL,
};

#[derive(Clone, Debug, PartialEq)]
pub struct CertifyConfig {
    pub p: f64,
    pub exploratory: bool,
    pub t0: f64,
    pub gamma_max: f64,
    pub steps: usize,
    pub probes: Vec<Complex64>,
    pub dt: f64,
    pub horizon: f64,
    pub offsets: Vec<f64>,
    pub max_tail: f64,
    pub compat_probe: Complex64,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        Self {
            p: 2.0,
            exploratory: false,
            t0: 1.0,
            gamma_max: 100.0,
            steps: 4001,
            probes: vec![Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0), Complex64::new(1.0, 1.0)],
            dt: 1e-3,
            horizon: 40.0,
            offsets: vec![0.0, -0.5, -1.0],
            max_tail: DEFAULT_MAX_TAIL,
            compat_probe: Complex64::new(1.0, 0.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    WellPosed,
    NotCertified,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SystemSummary {
    pub modes: usize,
    pub inputs: usize,
    pub outputs: usize,
    pub shift: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub omega: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Certificate {
    pub mode: String,
    pub p: f64,
    pub system_digest: String,
    pub system: SystemSummary,
    pub compat: CompatReport,
    pub admissibility: Option<AdmissibilityReport>,
    pub multiplier: Option<MultiplierReport>,
    pub resolvent_residuals: Vec<ResidualReport>,
    pub verdict: Verdict,
    pub failing: Vec<String>,
    pub tolerance_ledger: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl Certificate {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serialises")
    }
}

/// Default state used for the resolvent checks: `x_n = 1 / (1 + n)`.
pub fn probe_state(modes: usize) -> SpectralVector {
    SpectralVector::from_real(&(0..modes).map(|n| 1.0 / (1.0 + n as f64)).collect::<Vec<_>>())
}

/// Default input for the resolvent checks: channel `j` is
/// `(r (2 - r))^2 / (1 + j)` on `[0, 2]`, which vanishes to first order at
/// both ends.
pub fn probe_input(inputs: usize, dt: f64) -> Result<Signal> {
    let n = (2.0 / dt).round() as usize;
    Signal::from_real_fn(0.0, dt, n + 1, inputs, |r| {
        let bump = (r * (2.0 - r)).max(0.0).powi(2);
        (0..inputs).map(|j| bump / (1.0 + j as f64)).collect()
    })
}

fn check_config(cfg: &CertifyConfig) -> Result<()> {
    if !(cfg.p >= 1.0 && cfg.p.is_finite()) {
        return Err(Error::Domain(format!("p must be >= 1, got {}", cfg.p)));
    }
    if cfg.p != 2.0 && !cfg.exploratory {
        return Err(Error::Precondition("certificates are issued for p = 2 only; pass --exploratory".into()));
    }
    if !(cfg.t0 > 0.0 && cfg.t0.is_finite()) {
        return Err(Error::Domain(format!("t0 must be positive, got {}", cfg.t0)));
    }
    if !(cfg.dt > 0.0 && cfg.dt.is_finite() && cfg.horizon > 2.0) {
        return Err(Error::Domain("verification needs dt > 0 and a horizon beyond 2".into()));
    }
    if cfg.probes.is_empty() || cfg.probes.iter().any(|l| !(l.re > 0.0)) {
        return Err(Error::Domain("lambda probes must be non-empty with positive real parts".into()));
    }
    Ok(())
}

/// Builds the system and runs every sub-check. Sub-check failures are
/// recorded in the certificate; malformed input is an error.
pub fn certify(spec: &SystemSpec, cfg: &CertifyConfig) -> Result<Certificate> {
    check_config(cfg)?;
    let sys = build_system(spec)?;
    certify_system(&sys, spec.digest(), spec.builtin.clone(), cfg)
}

pub fn certify_system(
    sys: &SpectralSystem,
    system_digest: String,
    builtin: Option<String>,
    cfg: &CertifyConfig,
) -> Result<Certificate> {
    check_config(cfg)?;
    let compat = compatibility_check(sys, cfg.compat_probe, cfg.max_tail)?;
    let mut failing = Vec::new();
    if !compat.verdict {
        failing.push(format!(
            "compat: tail bound {} at lambda = {} is not below {}",
            compat.tail_bound, cfg.compat_probe, cfg.max_tail
        ));
    }

    let multiplier = match m13_sup_scan(sys, cfg.gamma_max, cfg.steps, cfg.max_tail) {
        Ok(scan) => {
            if !scan.pass {
                failing.push(format!(
                    "multiplier: grid sup {} exceeds upper bound {}",
                    scan.grid_sup, scan.upper_bound
                ));
            }
            Some(scan)
        }
        Err(e) => {
            failing.push(format!("multiplier: {e}"));
            None
        }
    };

    let admissibility = match admissibility_report(sys, cfg.t0, multiplier.as_ref()) {
        Ok(r) => {
            if !r.pass {
                failing.push("admissibility: constants are not finite".into());
            }
            Some(r)
        }
        Err(e) => {
            failing.push(format!("admissibility: {e}"));
            None
        }
    };

    let x = probe_state(sys.modes());
    let u = probe_input(sys.inputs(), cfg.dt)?;
    let checks: Vec<Result<ResidualReport>> = cfg
        .probes
        .par_iter()
        .map(|&l| verify_resolvent_entries(sys, l, &x, &u, cfg.horizon, cfg.dt, &cfg.offsets))
        .collect();
    let mut resolvent_residuals = Vec::new();
    for (lambda, check) in cfg.probes.iter().zip(checks) {
        match check {
            Ok(r) => {
                for (name, entry) in [("r12", &r.r12), ("r23", &r.r23), ("r13", &r.r13)] {
                    if !entry.pass {
                        failing.push(format!(
                            "resolvent {name} at lambda = {lambda}: residual {} exceeds budget {}",
                            entry.residual, entry.budget
                        ));
                    }
                }
                resolvent_residuals.push(r);
            }
            Err(e) => failing.push(format!("resolvent at lambda = {lambda}: {e}")),
        }
    }

    let exploratory = cfg.p != 2.0 || cfg.exploratory;
    if exploratory {
        failing.push(format!("mode: exploratory run at p = {}, no verdict issued", cfg.p));
    }
    let verdict = if failing.is_empty() { Verdict::WellPosed } else { Verdict::NotCertified };

    let mut tolerance_ledger = BTreeMap::new();
    tolerance_ledger.insert("gridTimeStepRelative".to_string(), GRID_TOLERANCE);
    tolerance_ledger.insert("trapezoidSwitch".to_string(), TRAPEZOID_SWITCH);
    tolerance_ledger.insert("residualRoundingSlack".to_string(), ROUNDING_SLACK);
    tolerance_ledger.insert("spectrumGuardRelative".to_string(), 1e-14);
    tolerance_ledger.insert("multiplierSupSlack".to_string(), 1e-12);
    tolerance_ledger.insert("maxTail".to_string(), cfg.max_tail);
    tolerance_ledger.insert("verificationDt".to_string(), cfg.dt);
    tolerance_ledger.insert("verificationHorizon".to_string(), cfg.horizon);

    let mut notes = vec![
        "the multiplier norm is enclosed by [gridSup, upperBound]; no interpolation between grid points is attempted"
            .to_string(),
        "resolvent entries are checked at finitely many lambda probes only".to_string(),
        "product norm on the extended state space: maximum of the component norms".to_string(),
        "M_BC is normalised to t0 = 1".to_string(),
    ];
    if sys.gram_tails().is_some() {
        notes.push("Gram tails are summable estimates reported alongside, not part of the verdict".into());
    }

    Ok(Certificate {
        mode: if exploratory { "exploratory".into() } else { "certificate".into() },
        p: cfg.p,
        system_digest,
        system: SystemSummary {
            modes: sys.modes(),
            inputs: sys.inputs(),
            outputs: sys.outputs(),
            shift: sys.generator().shift(),
            k: sys.generator().k(),
            omega: sys.generator().omega(),
            builtin,
        },
        compat,
        admissibility,
        multiplier,
        resolvent_residuals,
        verdict,
        failing,
        tolerance_ledger,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> CertifyConfig {
        CertifyConfig { steps: 401, dt: 1e-2, horizon: 20.0, ..CertifyConfig::default() }
    }

    #[test]
    fn one_mode_is_well_posed() {
        let spec = SystemSpec::from_json_str(
            r#"{"eigenvalues":[[-1,0]],"control":[[[1,0]]],"observation":[[[1,0]]]}"#,
        )
        .unwrap();
        let cert = certify(&spec, &quick()).unwrap();
        assert_eq!(cert.verdict, Verdict::WellPosed, "{:?}", cert.failing);
        assert_eq!(cert.mode, "certificate");
    }

    #[test]
    fn exploratory_never_certifies() {
        let spec = SystemSpec::heat(4, 1.0);
        assert!(matches!(certify(&spec, &CertifyConfig { p: 3.0, ..quick() }), Err(Error::Precondition(_))));
        let cert = certify(&spec, &CertifyConfig { p: 3.0, exploratory: true, ..quick() }).unwrap();
        assert_eq!(cert.verdict, Verdict::NotCertified);
        assert_eq!(cert.mode, "exploratory");
    }

    #[test]
    fn certificates_are_deterministic() {
        let spec = SystemSpec::heat(8, 1.0);
        let a = certify(&spec, &quick()).unwrap().to_json();
        let b = certify(&spec, &quick()).unwrap().to_json();
        assert_eq!(a, b);
    }

    #[test]
    fn probe_input_is_flat_at_both_ends() {
        let u = probe_input(2, 1e-3).unwrap();
        assert_eq!(u.sample(0), [Complex64::new(0.0, 0.0); 2]);
        assert!(u.sample(u.len() - 1).iter().all(|z| z.norm() < 1e-20));
        assert!((u.end() - 2.0).abs() < 1e-12);
    }
}
