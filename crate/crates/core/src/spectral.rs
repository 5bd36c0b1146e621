//! Diagonal generators on a truncated sequence space.
//!
//! The state space is `C^N` with the Euclidean norm, standing in for `l^2`
//! after diagonalisation. The generator acts by multiplication with its
//! eigenvalue sequence, so the semigroup, the resolvent and the
//! extrapolation norm are all entrywise formulas.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coordinates of a state with respect to the eigenbasis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralVector(Vec<Complex64>);

impl SpectralVector {
    pub fn new(entries: Vec<Complex64>) -> Result<Self> {
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Domain("spectral vector has non-finite entries".into()));
        }
        Ok(Self(entries))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![Complex64::new(0.0, 0.0); n])
    }

    pub fn from_real(entries: &[f64]) -> Self {
        Self(entries.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_len(self.len(), other.len())?;
        Ok(Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect()))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_len(self.len(), other.len())?;
        Ok(Self(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect()))
    }
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::Dimension(format!(
            "expected a vector of length {expected}, got {got}"
        )));
    }
    Ok(())
}

/// Growth data `||T(t)|| <= K e^{omega t}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityBound {
    #[serde(rename = "K")]
    pub k: f64,
    pub omega: f64,
}

/// Multiplication operator `x_n -> alpha_n x_n`, stored after the shift
/// `alpha_n = original_n - shift` so that it is exponentially stable.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalGenerator {
    eigenvalues: Vec<Complex64>,
    shift: f64,
    bound: StabilityBound,
}

impl DiagonalGenerator {
    /// Builds a generator from already shifted eigenvalues.
    ///
    /// When `bound` is `None` the tightest diagonal bound is used:
    /// `K = 1` and `omega = max Re alpha_n`.
    pub fn new(eigenvalues: Vec<Complex64>, shift: f64, bound: Option<StabilityBound>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::Dimension("a generator needs at least one mode".into()));
        }
        if eigenvalues.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) || !shift.is_finite() {
            return Err(Error::Domain("eigenvalues and shift must be finite".into()));
        }
        let max_re = eigenvalues.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        let bound = match bound {
            Some(b) => b,
            None => StabilityBound { k: 1.0, omega: max_re },
        };
        if !(bound.k.is_finite() && bound.k >= 1.0) {
            return Err(Error::Stability(format!("K must be finite and >= 1, got {}", bound.k)));
        }
        if !(bound.omega < 0.0) {
            return Err(Error::Stability(format!(
                "spectrum is not exponentially stable: max Re(alpha) = {max_re}, omega = {}; declare a larger shift",
                bound.omega
            )));
        }
        if max_re > bound.omega {
            return Err(Error::Stability(format!(
                "max Re(alpha) = {max_re} exceeds the declared omega = {}",
                bound.omega
            )));
        }
        Ok(Self { eigenvalues, shift, bound })
    }

    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.eigenvalues
    }

    pub fn modes(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn k(&self) -> f64 {
        self.bound.k
    }

    pub fn omega(&self) -> f64 {
        self.bound.omega
    }

    pub fn bound(&self) -> StabilityBound {
        self.bound
    }

    /// `(e^{alpha_n t} x_n)_n`.
    pub fn semigroup_apply(&self, t: f64, x: &SpectralVector) -> Result<SpectralVector> {
        check_len(self.modes(), x.len())?;
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("semigroup time must be >= 0, got {t}")));
        }
        Ok(SpectralVector(
            self.eigenvalues
                .iter()
                .zip(x.as_slice())
                .map(|(a, xn)| (a * t).exp() * xn)
                .collect(),
        ))
    }

    /// `(x_n / (lambda - alpha_n))_n`.
    pub fn resolvent_apply(&self, lambda: Complex64, x: &SpectralVector) -> Result<SpectralVector> {
        check_len(self.modes(), x.len())?;
        let mut out = Vec::with_capacity(x.len());
        for (a, xn) in self.eigenvalues.iter().zip(x.as_slice()) {
            let d = lambda - a;
            if d.norm() <= 1e-14 * (1.0 + a.norm()) {
                return Err(Error::Spectrum { re: lambda.re, im: lambda.im });
            }
            out.push(xn / d);
        }
        Ok(SpectralVector(out))
    }

    /// `||R(lambda_ref, A) x||`, the norm of the extrapolation space.
    pub fn extrapolation_norm(&self, lambda_ref: Complex64, x: &SpectralVector) -> Result<f64> {
        Ok(self.resolvent_apply(lambda_ref, x)?.norm())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn gen(alphas: &[f64]) -> DiagonalGenerator {
        DiagonalGenerator::new(alphas.iter().map(|&a| c(a)).collect(), 0.0, None).unwrap()
    }

    #[test]
    fn semigroup_examples() {
        let g = gen(&[-1.0]);
        let y = g.semigroup_apply(2f64.ln(), &SpectralVector::from_real(&[1.0])).unwrap();
        assert_relative_eq!(y.as_slice()[0].re, 0.5, epsilon = 1e-15);

        let g = gen(&[-1.0, -4.0]);
        let y = g.semigroup_apply(1.0, &SpectralVector::from_real(&[1.0, 1.0])).unwrap();
        assert_relative_eq!(y.as_slice()[0].re, (-1f64).exp(), epsilon = 1e-15);
        assert_relative_eq!(y.as_slice()[1].re, (-4f64).exp(), epsilon = 1e-15);
        assert_relative_eq!(y.as_slice()[0].re, 0.36788, epsilon = 1e-5);
        assert_relative_eq!(y.as_slice()[1].re, 0.01832, epsilon = 1e-5);

        let x = SpectralVector::from_real(&[3.0, -2.0]);
        assert_eq!(g.semigroup_apply(0.0, &x).unwrap(), x);
    }

    #[test]
    fn semigroup_errors() {
        let g = gen(&[-1.0, -4.0]);
        assert!(matches!(
            g.semigroup_apply(1.0, &SpectralVector::zeros(3)),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            g.semigroup_apply(-0.1, &SpectralVector::zeros(2)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn resolvent_examples() {
        let g = gen(&[-1.0]);
        let y = g.resolvent_apply(c(1.0), &SpectralVector::from_real(&[1.0])).unwrap();
        assert_eq!(y.as_slice()[0], c(0.5));

        let g = gen(&[-1.0, -4.0]);
        let y = g.resolvent_apply(c(0.0), &SpectralVector::from_real(&[1.0, 1.0])).unwrap();
        assert_eq!(y.as_slice(), &[c(1.0), c(0.25)]);

        assert!(matches!(
            g.resolvent_apply(c(-1.0), &SpectralVector::from_real(&[1.0, 1.0])),
            Err(Error::Spectrum { .. })
        ));
    }

    #[test]
    fn extrapolation_norm_examples() {
        let g = gen(&[-1.0]);
        assert_eq!(g.extrapolation_norm(c(1.0), &SpectralVector::from_real(&[1.0])).unwrap(), 0.5);
        assert_eq!(g.extrapolation_norm(c(1.0), &SpectralVector::zeros(1)).unwrap(), 0.0);
        let g = gen(&[-1.0, -4.0]);
        let v = g.extrapolation_norm(c(1.0), &SpectralVector::from_real(&[1.0, 1.0])).unwrap();
        assert_relative_eq!(v, (0.25f64 + 0.04).sqrt(), epsilon = 1e-15);
        assert_relative_eq!(v, 0.53852, epsilon = 1e-5);
    }

    #[test]
    fn rejects_unstable_spectrum() {
        assert!(matches!(
            DiagonalGenerator::new(vec![c(1.0)], 0.0, None),
            Err(Error::Stability(_))
        ));
        assert!(matches!(
            DiagonalGenerator::new(vec![c(-1.0)], 0.0, Some(StabilityBound { k: 0.5, omega: -1.0 })),
            Err(Error::Stability(_))
        ));
        assert!(matches!(
            DiagonalGenerator::new(vec![c(-1.0)], 0.0, Some(StabilityBound { k: 1.0, omega: -2.0 })),
            Err(Error::Stability(_))
        ));
    }

    fn arb_system() -> impl Strategy<Value = (DiagonalGenerator, SpectralVector)> {
        prop::collection::vec((-20.0f64..-0.1, -5.0f64..5.0, -3.0f64..3.0, -3.0f64..3.0), 1..8).prop_map(
            |modes| {
                let alphas = modes.iter().map(|m| Complex64::new(m.0, m.1)).collect();
                let x = modes.iter().map(|m| Complex64::new(m.2, m.3)).collect();
                (DiagonalGenerator::new(alphas, 0.0, None).unwrap(), SpectralVector::new(x).unwrap())
            },
        )
    }

    proptest! {
        #[test]
        fn semigroup_law((g, x) in arb_system(), t in 0.0f64..3.0, s in 0.0f64..3.0) {
            let lhs = g.semigroup_apply(t + s, &x).unwrap();
            let rhs = g.semigroup_apply(t, &g.semigroup_apply(s, &x).unwrap()).unwrap();
            prop_assert!(lhs.sub(&rhs).unwrap().norm() <= 1e-13 * (1.0 + x.norm()));
        }

        #[test]
        fn contraction_bound((g, x) in arb_system(), t in 0.0f64..5.0) {
            let y = g.semigroup_apply(t, &x).unwrap();
            prop_assert!(y.norm() <= (g.omega() * t).exp() * x.norm() * (1.0 + 1e-14));
        }

        #[test]
        fn resolvent_identity((g, x) in arb_system(), l in 0.0f64..4.0, li in -4.0f64..4.0, m in 0.0f64..4.0, mi in -4.0f64..4.0) {
            let lam = Complex64::new(l, li);
            let mu = Complex64::new(m, mi);
            let rl = g.resolvent_apply(lam, &x).unwrap();
            let rm = g.resolvent_apply(mu, &x).unwrap();
            let rlrm = g.resolvent_apply(lam, &rm).unwrap();
            for ((a, b), c) in rl.as_slice().iter().zip(rm.as_slice()).zip(rlrm.as_slice()) {
                let lhs = a - b;
                let rhs = (mu - lam) * c;
                prop_assert!((lhs - rhs).norm() <= 1e-13 * (1.0 + a.norm() + b.norm()));
            }
        }
    }
}
