//! The one-dimensional heat equation on `[0, pi]` with Neumann boundary
//! control at both ends and point observation at `pi / 2`, in the cosine
//! eigenbasis `e_n(s) = sqrt(eps_n / pi) cos(n s)`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::certificate::{certify, Certificate, CertifyConfig};
use crate::error::{Error, Result};
use crate::spectral::{DiagonalGenerator, SpectralVector, StabilityBound};
use crate::system::{inverse_square_tail, GramTails, SpectralSystem, SystemSpec, Tail, TailMajorant, MAX_MODES};

#[derive(Clone, Debug, PartialEq)]
pub struct HeatConfig {
    pub modes: usize,
    /// The generator used is `A - shift`.
    pub shift: f64,
    pub gamma_max: f64,
    pub steps: usize,
    pub t0: f64,
}

impl Default for HeatConfig {
    fn default() -> Self {
        Self { modes: 64, shift: 1.0, gamma_max: 100.0, steps: 4001, t0: 1.0 }
    }
}

fn eps(n: usize) -> f64 {
    if n == 0 {
        1.0
    } else {
        2.0
    }
}

/// `e_n(s)`.
pub fn eigenfunction(n: usize, s: f64) -> f64 {
    (eps(n) / PI).sqrt() * (n as f64 * s).cos()
}

/// `e_n(pi / 2)`, using the exact values of `cos(n pi / 2)`.
fn observation_entry(n: usize) -> f64 {
    if n % 2 == 1 {
        0.0
    } else {
        let sign = if (n / 2) % 2 == 0 { 1.0 } else { -1.0 };
        sign * (eps(n) / PI).sqrt()
    }
}

pub fn build_heat_system(cfg: &HeatConfig) -> Result<SpectralSystem> {
    if cfg.modes == 0 || cfg.modes > MAX_MODES {
        return Err(Error::Schema(format!("heat modes must be in 1..={MAX_MODES}")));
    }
    if !(cfg.shift > 0.0 && cfg.shift.is_finite()) {
        return Err(Error::Schema(format!("heat shift must be positive, got {}", cfg.shift)));
    }
    let n = cfg.modes;
    let alphas = (0..n).map(|k| Complex64::new(-cfg.shift - (k * k) as f64, 0.0)).collect();
    let gen = DiagonalGenerator::new(alphas, cfg.shift, Some(StabilityBound { k: 1.0, omega: -cfg.shift }))?;
    let control = DMatrix::from_fn(n, 2, |k, j| {
        let v = (eps(k) / PI).sqrt();
        let v = if j == 0 { -v } else if k % 2 == 0 { v } else { -v };
        Complex64::new(v, 0.0)
    });
    let observation = DMatrix::from_fn(1, n, |_, k| Complex64::new(observation_entry(k), 0.0));
    let feedthrough = DMatrix::from_element(1, 2, Complex64::new(0.0, 0.0));
    let scale = (4.0 / PI).max(2.0 / (PI * cfg.shift));
    let gram_tail = inverse_square_tail(n) / PI * (1.0f64).max(1.0 / cfg.shift);
    Ok(SpectralSystem::new(
        gen,
        control,
        observation,
        feedthrough,
        Tail::Majorant(TailMajorant::InverseSquare { scale }),
    )?
    .with_gram_tails(GramTails { observation: gram_tail, control_per_channel: gram_tail }))
}

/// Kernels `(q0(s), q1(s))` of the Dirichlet operator of `lambda`, the
/// solutions of `q'' = lambda q` with `q0'(0) = 1, q0'(pi) = 0` and
/// `q1'(0) = 0, q1'(pi) = 1`.
pub fn dirichlet_eval(lambda: Complex64, s: f64) -> Result<(Complex64, Complex64)> {
    if !(0.0..=PI).contains(&s) {
        return Err(Error::Domain(format!("s = {s} lies outside [0, pi]")));
    }
    let n = (-lambda.re).max(0.0).sqrt().round();
    if lambda.norm() == 0.0 || (lambda + n * n).norm() <= 1e-12 * (1.0 + n * n) {
        return Err(Error::Spectrum { re: lambda.re, im: lambda.im });
    }
    let mu = lambda.sqrt();
    // cosh(mu a) / sinh(mu pi) with the growth of e^{mu pi} divided out.
    let denom = 1.0 - (-2.0 * PI * mu).exp();
    if denom.norm() == 0.0 {
        return Err(Error::Spectrum { re: lambda.re, im: lambda.im });
    }
    let ratio = |a: f64| ((mu * (a - PI)).exp() + (-mu * (a + PI)).exp()) / denom;
    Ok((-ratio(PI - s) / mu, ratio(s) / mu))
}

/// `x(s) = Re sum_n x_n e_n(s)` on the given points.
pub fn reconstruct_temperature(x: &SpectralVector, s_grid: &[f64]) -> Vec<f64> {
    s_grid
        .iter()
        .map(|&s| x.as_slice().iter().enumerate().map(|(n, xn)| xn.re * eigenfunction(n, s)).sum())
        .collect()
}

pub fn heat_certificate(cfg: &HeatConfig) -> Result<Certificate> {
    let spec = SystemSpec::heat(cfg.modes, cfg.shift);
    let run = CertifyConfig { t0: cfg.t0, gamma_max: cfg.gamma_max, steps: cfg.steps, ..CertifyConfig::default() };
    certify(&spec, &run)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn three_mode_entries() {
        let sys = build_heat_system(&HeatConfig { modes: 3, ..HeatConfig::default() }).unwrap();
        let c: Vec<f64> = sys.observation().row(0).iter().map(|z| z.re).collect();
        assert_eq!(c, vec![(1.0 / PI).sqrt(), 0.0, -(2.0 / PI).sqrt()]);
        assert_relative_eq!(c[0], 0.56419, epsilon = 1e-5);
        assert_relative_eq!(c[2], -0.79788, epsilon = 1e-5);
        let b0: Vec<f64> = sys.control().column(0).iter().map(|z| z.re).collect();
        assert_eq!(b0, vec![-(1.0 / PI).sqrt(), -(2.0 / PI).sqrt(), -(2.0 / PI).sqrt()]);
        let b1: Vec<f64> = sys.control().column(1).iter().map(|z| z.re).collect();
        assert_eq!(b1, vec![(1.0 / PI).sqrt(), -(2.0 / PI).sqrt(), (2.0 / PI).sqrt()]);
        assert_eq!(sys.generator().omega(), -1.0);
        assert_eq!(sys.generator().eigenvalues()[2].re, -5.0);
    }

    #[test]
    fn observation_entries_are_point_values() {
        for n in 0..40 {
            assert_relative_eq!(observation_entry(n), eigenfunction(n, PI / 2.0), epsilon = 1e-13);
        }
    }

    #[test]
    fn single_mode_is_valid() {
        let sys = build_heat_system(&HeatConfig { modes: 1, ..HeatConfig::default() }).unwrap();
        assert_eq!(sys.generator().eigenvalues()[0], Complex64::new(-1.0, 0.0));
        assert!(build_heat_system(&HeatConfig { modes: 0, ..HeatConfig::default() }).is_err());
        assert!(build_heat_system(&HeatConfig { shift: 0.0, ..HeatConfig::default() }).is_err());
    }

    fn unscaled(s: f64, mu: Complex64) -> (Complex64, Complex64) {
        let d = mu * (mu * PI).sinh();
        (-(mu * (PI - s)).cosh() / d, (mu * s).cosh() / d)
    }

    #[test]
    fn dirichlet_examples() {
        let one = Complex64::new(1.0, 0.0);
        let (q0, q1) = dirichlet_eval(one, 0.0).unwrap();
        assert_relative_eq!(q0.re, -1.0 / PI.tanh(), epsilon = 1e-14);
        assert_relative_eq!(q0.re, -1.00374, epsilon = 1e-5);
        assert_relative_eq!(q1.re, 1.0 / PI.sinh(), epsilon = 1e-15);
        assert_relative_eq!(q1.re, 0.08659, epsilon = 1e-5);
        let (q0, _) = dirichlet_eval(one, PI).unwrap();
        assert_relative_eq!(q0.re, -1.0 / PI.sinh(), epsilon = 1e-15);
        assert!(matches!(dirichlet_eval(Complex64::new(0.0, 0.0), 1.0), Err(Error::Spectrum { .. })));
        assert!(matches!(dirichlet_eval(Complex64::new(-4.0, 0.0), 1.0), Err(Error::Spectrum { .. })));
        assert!(matches!(dirichlet_eval(one, 4.0), Err(Error::Domain(_))));
    }

    #[test]
    fn dirichlet_symmetry_branches_and_boundary_slopes() {
        let h = 1e-6;
        for lambda in [Complex64::new(1.0, 0.0), Complex64::new(2.0, 3.0), Complex64::new(-2.5, 0.1), Complex64::new(0.3, -7.0)] {
            for i in 0..=20 {
                let s = PI * i as f64 / 20.0;
                let (q0, q1) = dirichlet_eval(lambda, s).unwrap();
                let (p0, _) = dirichlet_eval(lambda, PI - s).unwrap();
                assert!((q1 + p0).norm() <= 1e-12 * (1.0 + q1.norm()));
                let mu = lambda.sqrt();
                for root in [mu, -mu] {
                    let (a, b) = unscaled(s, root);
                    assert!((a - q0).norm() <= 1e-12 * (1.0 + q0.norm()));
                    assert!((b - q1).norm() <= 1e-12 * (1.0 + q1.norm()));
                }
            }
            let slope = |f: &dyn Fn(f64) -> Complex64, s: f64| {
                let (a, b) = ((s - h).max(0.0), (s + h).min(PI));
                (f(b) - f(a)) / (b - a)
            };
            let q0 = |s: f64| dirichlet_eval(lambda, s).unwrap().0;
            let q1 = |s: f64| dirichlet_eval(lambda, s).unwrap().1;
            let targets = [(slope(&q0, 0.0), 1.0), (slope(&q0, PI), 0.0), (slope(&q1, 0.0), 0.0), (slope(&q1, PI), 1.0)];
            for (got, want) in targets {
                assert!((got - want).norm() <= 1e-6 * (1.0 + lambda.norm()), "{lambda}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn temperature_examples() {
        let grid: Vec<f64> = (0..=50).map(|i| PI * i as f64 / 50.0).collect();
        let mut x = SpectralVector::zeros(4);
        x.as_mut_slice()[1] = Complex64::new((PI / 2.0).sqrt(), 0.0);
        for (s, v) in grid.iter().zip(reconstruct_temperature(&x, &grid)) {
            assert!((v - s.cos()).abs() <= 1e-12);
        }
        assert!(reconstruct_temperature(&SpectralVector::zeros(4), &grid).iter().all(|v| *v == 0.0));
        let sys = build_heat_system(&HeatConfig { modes: 4, ..HeatConfig::default() }).unwrap();
        let y = SpectralVector::from_real(&[0.3, -1.2, 0.7, 2.0]);
        let mid = reconstruct_temperature(&y, &[PI / 2.0])[0];
        assert_relative_eq!(mid, sys.observe(&y)[0].re, epsilon = 1e-12);
    }
}
