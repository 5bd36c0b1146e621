//! Uniformly sampled, piecewise-linear vector signals.
//!
//! A [`Signal`] is the linear interpolant of its samples on
//! `[t0, t0 + (len - 1) dt]` and zero elsewhere. Convolutions against
//! `e^{alpha (T - r)}` are evaluated exactly on every segment by
//! [`exp_segment_weights`], so the only discretisation error anywhere in the
//! crate is the representation of a function by its samples.

use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Relative tolerance used when checking that CSV time stamps are equispaced.
pub const GRID_TOLERANCE: f64 = 1e-9;

/// Below this `|alpha h|` a segment is integrated with the trapezoid rule.
pub const TRAPEZOID_SWITCH: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct Signal {
    t0: f64,
    dt: f64,
    dim: usize,
    samples: Vec<Complex64>,
}

impl Signal {
    /// `samples` is row-major: `len` rows of `dim` entries.
    pub fn new(t0: f64, dt: f64, dim: usize, samples: Vec<Complex64>) -> Result<Self> {
        if !t0.is_finite() || !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Grid(format!("need finite t0 and dt > 0, got t0 = {t0}, dt = {dt}")));
        }
        if dim == 0 {
            return Err(Error::Dimension("signal dimension must be at least 1".into()));
        }
        if samples.is_empty() || samples.len() % dim != 0 {
            return Err(Error::Dimension(format!(
                "{} sample values do not form whole rows of dimension {dim}",
                samples.len()
            )));
        }
        if samples.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Domain("signal samples must be finite".into()));
        }
        Ok(Self { t0, dt, dim, samples })
    }

    pub fn zeros(t0: f64, dt: f64, len: usize, dim: usize) -> Result<Self> {
        Self::new(t0, dt, dim, vec![ZERO; len.max(1) * dim])
    }

    /// Samples `f(t0 + i dt)` for `i < len`.
    pub fn from_fn(
        t0: f64,
        dt: f64,
        len: usize,
        dim: usize,
        f: impl Fn(f64) -> Vec<Complex64>,
    ) -> Result<Self> {
        let mut samples = Vec::with_capacity(len * dim);
        for i in 0..len {
            let row = f(t0 + i as f64 * dt);
            if row.len() != dim {
                return Err(Error::Dimension(format!("row {i} has {} entries, expected {dim}", row.len())));
            }
            samples.extend(row);
        }
        Self::new(t0, dt, dim, samples)
    }

    pub fn from_real_fn(t0: f64, dt: f64, len: usize, dim: usize, f: impl Fn(f64) -> Vec<f64>) -> Result<Self> {
        Self::from_fn(t0, dt, len, dim, |t| f(t).into_iter().map(|x| Complex64::new(x, 0.0)).collect())
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.samples.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn end(&self) -> f64 {
        self.time(self.len() - 1)
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn sample(&self, i: usize) -> &[Complex64] {
        &self.samples[i * self.dim..(i + 1) * self.dim]
    }

    pub fn sample_mut(&mut self, i: usize) -> &mut [Complex64] {
        &mut self.samples[i * self.dim..(i + 1) * self.dim]
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn is_real(&self) -> bool {
        self.samples.iter().all(|z| z.im == 0.0)
    }

    /// Fractional grid coordinate of `t`, snapped to a knot when within
    /// rounding distance of one.
    fn position(&self, t: f64) -> f64 {
        let x = (t - self.t0) / self.dt;
        let r = x.round();
        if (x - r).abs() <= 1e-9 {
            r
        } else {
            x
        }
    }

    /// Value of the interpolant at `t` (zero off the support).
    pub fn value_into(&self, t: f64, out: &mut [Complex64]) {
        debug_assert_eq!(out.len(), self.dim);
        let x = self.position(t);
        let last = (self.len() - 1) as f64;
        if x < 0.0 || x > last || !x.is_finite() {
            out.fill(ZERO);
            return;
        }
        let i = x.floor() as usize;
        let frac = x - i as f64;
        if frac == 0.0 || i + 1 >= self.len() {
            out.copy_from_slice(self.sample(i.min(self.len() - 1)));
            return;
        }
        let a = self.sample(i);
        let b = self.sample(i + 1);
        for ((o, a), b) in out.iter_mut().zip(a).zip(b) {
            *o = a + (b - a) * frac;
        }
    }

    pub fn value_at(&self, t: f64) -> Vec<Complex64> {
        let mut out = vec![ZERO; self.dim];
        self.value_into(t, &mut out);
        out
    }

    /// Grid knots strictly inside `(a, b)`.
    pub(crate) fn knots_between(&self, a: f64, b: f64) -> impl Iterator<Item = f64> + '_ {
        let lo = ((a - self.t0) / self.dt).floor().max(-1.0);
        let hi = ((b - self.t0) / self.dt).ceil().min(self.len() as f64);
        let lo = (lo + 1.0).max(0.0) as usize;
        let hi = hi.max(0.0) as usize;
        (lo..hi.min(self.len()))
            .map(move |i| self.time(i))
            .filter(move |&t| t > a && t < b && (t - a).abs() > 1e-12 * self.dt && (b - t).abs() > 1e-12 * self.dt)
    }

    /// `L^p` norm of the interpolant over its support.
    ///
    /// For `p = 2` each segment integrand is a quadratic and is integrated
    /// exactly; other exponents use 8-point Gauss-Legendre per segment.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        if !(p >= 1.0) || !p.is_finite() {
            return Err(Error::Domain(format!("L^p norm needs p >= 1, got {p}")));
        }
        let n = self.len();
        if n < 2 {
            return Ok(0.0);
        }
        let h = self.dt;
        if p == 2.0 {
            let mut acc = 0.0;
            for i in 0..n - 1 {
                let mut seg = 0.0;
                for (a, b) in self.sample(i).iter().zip(self.sample(i + 1)) {
                    seg += a.norm_sqr() + (a * b.conj()).re + b.norm_sqr();
                }
                acc += seg * h / 3.0;
            }
            return Ok(acc.sqrt());
        }
        let mut acc = 0.0;
        for i in 0..n - 1 {
            let a = self.sample(i);
            let b = self.sample(i + 1);
            let mut seg = 0.0;
            for (node, weight) in GAUSS_LEGENDRE_8 {
                let s = 0.5 * (node + 1.0);
                let v: f64 = a.iter().zip(b).map(|(a, b)| (a + (b - a) * s).norm_sqr()).sum();
                seg += 0.5 * weight * v.sqrt().powf(p);
            }
            acc += seg * h;
        }
        Ok(acc.powf(1.0 / p))
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self { samples: self.samples.iter().map(|z| z * c).collect(), ..self.clone() }
    }

    /// The same samples moved right by `delta`.
    pub fn translated(&self, delta: f64) -> Self {
        Self { t0: self.t0 + delta, ..self.clone() }
    }

    fn same_grid(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim || self.len() != other.len() {
            return Err(Error::Dimension("signals have different shapes".into()));
        }
        if (self.dt - other.dt).abs() > GRID_TOLERANCE * self.dt
            || (self.t0 - other.t0).abs() > GRID_TOLERANCE * self.dt
        {
            return Err(Error::Grid("signals live on different grids".into()));
        }
        Ok(())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_grid(other)?;
        Ok(Self {
            samples: self.samples.iter().zip(&other.samples).map(|(a, b)| a - b).collect(),
            ..self.clone()
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Header `time,c0,c1,...`; complex signals use `c0_re,c0_im,...`.
    pub fn to_csv_string(&self) -> String {
        let real = self.is_real();
        let mut out = String::from("time");
        for j in 0..self.dim {
            if real {
                out.push_str(&format!(",c{j}"));
            } else {
                out.push_str(&format!(",c{j}_re,c{j}_im"));
            }
        }
        out.push('\n');
        for i in 0..self.len() {
            out.push_str(&fmt_f64(self.time(i)));
            for z in self.sample(i) {
                out.push(',');
                out.push_str(&fmt_f64(z.re));
                if !real {
                    out.push(',');
                    out.push_str(&fmt_f64(z.im));
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = reader.headers()?.clone();
        let complex = parse_header(&headers)?;
        let width = headers.len() - 1;
        let dim = if complex { width / 2 } else { width };

        let mut times = Vec::new();
        let mut samples = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record?;
            if record.len() != headers.len() {
                return Err(Error::Schema(format!("row {} has {} fields, expected {}", row + 1, record.len(), headers.len())));
            }
            let mut values = record.iter().map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| Error::Schema(format!("row {}: '{f}' is not a finite number", row + 1)))
            });
            times.push(values.next().expect("header checked")?);
            if complex {
                for _ in 0..dim {
                    let re = values.next().expect("width checked")?;
                    let im = values.next().expect("width checked")?;
                    samples.push(Complex64::new(re, im));
                }
            } else {
                for v in values {
                    samples.push(Complex64::new(v?, 0.0));
                }
            }
        }
        if times.len() < 2 {
            return Err(Error::Schema("a signal CSV needs at least two rows to fix its time step".into()));
        }
        let n = times.len();
        let dt = (times[n - 1] - times[0]) / (n - 1) as f64;
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Grid("time stamps must be strictly increasing".into()));
        }
        for (i, w) in times.windows(2).enumerate() {
            if ((w[1] - w[0]) - dt).abs() > GRID_TOLERANCE * dt {
                return Err(Error::Grid(format!(
                    "time step between rows {} and {} is {}, expected constant {dt}",
                    i + 1,
                    i + 2,
                    w[1] - w[0]
                )));
            }
        }
        Self::new(times[0], dt, dim, samples)
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        Self::from_csv_str(&std::fs::read_to_string(path)?)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }
}

/// Returns whether the columns are `_re`/`_im` pairs.
fn parse_header(headers: &csv::StringRecord) -> Result<bool> {
    let cols: Vec<&str> = headers.iter().collect();
    if cols.first() != Some(&"time") {
        return Err(Error::Schema("first CSV column must be 'time'".into()));
    }
    let rest = &cols[1..];
    if rest.is_empty() {
        return Err(Error::Schema("a signal CSV needs at least one channel column".into()));
    }
    if rest.iter().enumerate().all(|(j, h)| *h == format!("c{j}")) {
        return Ok(false);
    }
    let paired = rest.len() % 2 == 0
        && rest.chunks(2).enumerate().all(|(j, pair)| pair[0] == format!("c{j}_re") && pair[1] == format!("c{j}_im"));
    if paired {
        return Ok(true);
    }
    Err(Error::Schema(format!("unexpected channel header {rest:?}; expected c0,c1,... or c0_re,c0_im,...")))
}

/// 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

const GAUSS_LEGENDRE_8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
];

/// `phi1(w) = (e^w - 1)/w` and `psi(w) = int_0^1 s e^{w s} ds` for `Re w <= 0`.
pub(crate) fn phi_psi(w: Complex64) -> (Complex64, Complex64) {
    if w.norm() < 1.0 {
        // Taylor: phi1 = sum w^k/(k+1)!, psi = sum w^k/(k! (k+2)).
        let mut phi = ZERO;
        let mut psi = ZERO;
        let mut pow_over_fact = Complex64::new(1.0, 0.0);
        for k in 0..26 {
            let kf = k as f64;
            phi += pow_over_fact / (kf + 1.0);
            psi += pow_over_fact / (kf + 2.0);
            pow_over_fact = pow_over_fact * w / (kf + 1.0);
        }
        (phi, psi)
    } else {
        let e = w.exp();
        ((e - 1.0) / w, (e * (w - 1.0) + 1.0) / (w * w))
    }
}

/// Weights `(w0, w1)` with
/// `int_{r0}^{r1} e^{alpha (T - r)} l(r) dr = w0 l(r0) + w1 l(r1)` for
/// every linear `l`, where `h = r1 - r0 > 0` and `tau_end = T - r1`.
pub fn exp_segment_weights(alpha: Complex64, tau_end: f64, h: f64) -> (Complex64, Complex64) {
    let z = alpha * h;
    if z.norm() < TRAPEZOID_SWITCH {
        let half = 0.5 * h;
        return ((alpha * (tau_end + h)).exp() * half, (alpha * tau_end).exp() * half);
    }
    if z.re <= 0.0 {
        // Anchor at r1: the integrand is e^{alpha tau_end} e^{z s}, s from r1 backwards.
        let scale = (alpha * tau_end).exp() * h;
        let (phi, psi) = phi_psi(z);
        (scale * psi, scale * (phi - psi))
    } else {
        let scale = (alpha * (tau_end + h)).exp() * h;
        let (phi, psi) = phi_psi(-z);
        (scale * (phi - psi), scale * psi)
    }
}

/// `int_{r0}^{r1} e^{alpha (T - r)} u(r) dr` for `u` linear from `u0` to `u1`.
pub fn exp_segment_integral(
    alpha: Complex64,
    t_end: f64,
    r0: f64,
    r1: f64,
    u0: Complex64,
    u1: Complex64,
) -> Result<Complex64> {
    if !(r0 < r1) {
        return Err(Error::Domain(format!("segment needs r0 < r1, got [{r0}, {r1}]")));
    }
    let (w0, w1) = exp_segment_weights(alpha, t_end - r1, r1 - r0);
    Ok(w0 * u0 + w1 * u1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn exp_segment_examples() {
        // int_0^1 e^{-(1-r)} r dr = e^{-1}
        let v = exp_segment_integral(c(-1.0), 1.0, 0.0, 1.0, c(0.0), c(1.0)).unwrap();
        assert_relative_eq!(v.re, (-1f64).exp(), epsilon = 1e-15);
        assert_eq!(v.im, 0.0);
        assert_relative_eq!(v.re, 0.36788, epsilon = 1e-5);

        let v = exp_segment_integral(c(-3.0), 2.0, 0.0, 1.0, c(0.0), c(0.0)).unwrap();
        assert_eq!(v, c(0.0));

        for t in [0.0, 1.0, 7.5] {
            let v = exp_segment_integral(c(0.0), t, 0.0, 1.0, c(1.0), c(1.0)).unwrap();
            assert_eq!(v, c(1.0));
        }
        assert!(matches!(
            exp_segment_integral(c(-1.0), 1.0, 1.0, 1.0, c(0.0), c(1.0)),
            Err(Error::Domain(_))
        ));
    }

    /// Composite Simpson with many panels as an independent reference.
    fn simpson(alpha: Complex64, t: f64, r0: f64, r1: f64, u0: Complex64, u1: Complex64) -> Complex64 {
        let n = 20_000;
        let h = (r1 - r0) / n as f64;
        let f = |r: f64| (alpha * (t - r)).exp() * (u0 + (u1 - u0) * ((r - r0) / (r1 - r0)));
        let mut acc = f(r0) + f(r1);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += f(r0 + i as f64 * h) * w;
        }
        acc * (h / 3.0)
    }

    #[test]
    fn exp_segment_matches_quadrature_across_regimes() {
        let cases = [
            (Complex64::new(-2.0, 3.0), 1.5, 0.2, 0.9),
            (Complex64::new(1.0, -1.0), 0.0, 0.5, 1.5),
            (Complex64::new(-1e-6, 0.0), 3.0, 0.0, 2.0),
            (Complex64::new(-50.0, 0.0), 1.0, 0.0, 1.0),
            (Complex64::new(0.3, 0.0), 0.0, -1.0, 0.4),
        ];
        for (alpha, t, r0, r1) in cases {
            let u0 = Complex64::new(0.7, -0.2);
            let u1 = Complex64::new(-1.1, 0.4);
            let exact = exp_segment_integral(alpha, t, r0, r1, u0, u1).unwrap();
            let reference = simpson(alpha, t, r0, r1, u0, u1);
            assert!((exact - reference).norm() <= 1e-10 * (1.0 + reference.norm()), "{alpha} {exact} {reference}");
        }
    }

    #[test]
    fn lp_norm_examples() {
        let ones = Signal::from_real_fn(0.0, 0.25, 5, 1, |_| vec![1.0]).unwrap();
        assert_relative_eq!(ones.lp_norm(2.0).unwrap(), 1.0, epsilon = 1e-15);
        let ramp = Signal::from_real_fn(0.0, 1.0, 2, 1, |t| vec![t]).unwrap();
        assert_relative_eq!(ramp.lp_norm(2.0).unwrap(), 1.0 / 3f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(ramp.lp_norm(2.0).unwrap(), 0.57735, epsilon = 1e-5);
        let zero = Signal::zeros(0.0, 0.1, 11, 2).unwrap();
        assert_eq!(zero.lp_norm(2.0).unwrap(), 0.0);
        assert_eq!(zero.lp_norm(3.0).unwrap(), 0.0);
        assert!(matches!(ones.lp_norm(0.5), Err(Error::Domain(_))));
        // int_0^1 r^3 dr = 1/4, and Gauss-Legendre is exact for cubics.
        assert_relative_eq!(ramp.lp_norm(3.0).unwrap(), 0.25f64.powf(1.0 / 3.0), epsilon = 1e-14);
        assert_relative_eq!(ones.lp_norm(1.0).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn interpolation_is_zero_off_support() {
        let s = Signal::from_real_fn(1.0, 0.5, 3, 1, |t| vec![t]).unwrap();
        assert_eq!(s.value_at(0.99)[0], c(0.0));
        assert_eq!(s.value_at(2.01)[0], c(0.0));
        assert_eq!(s.value_at(2.0)[0], c(2.0));
        assert_relative_eq!(s.value_at(1.25)[0].re, 1.25, epsilon = 1e-15);
    }

    #[test]
    fn csv_roundtrip_and_validation() {
        let s = Signal::from_real_fn(0.0, 0.1, 4, 2, |t| vec![t, -2.0 * t]).unwrap();
        let text = s.to_csv_string();
        assert!(text.starts_with("time,c0,c1\n"));
        let back = Signal::from_csv_str(&text).unwrap();
        assert_eq!(back.len(), 4);
        assert_eq!(back.sample(3), s.sample(3));
        assert!((back.dt() - 0.1).abs() < 1e-15);

        let z = Signal::new(0.0, 1.0, 1, vec![Complex64::new(1.0, 2.0), c(0.5)]).unwrap();
        let text = z.to_csv_string();
        assert!(text.starts_with("time,c0_re,c0_im\n"));
        assert_eq!(Signal::from_csv_str(&text).unwrap(), z);

        assert!(matches!(Signal::from_csv_str("t,c0\n0,1\n1,2\n"), Err(Error::Schema(_))));
        assert!(matches!(Signal::from_csv_str("time,c0\n0,1\n"), Err(Error::Schema(_))));
        assert!(matches!(Signal::from_csv_str("time,c0\n0,1\n1,2\n3,4\n"), Err(Error::Grid(_))));
        assert!(matches!(Signal::from_csv_str("time,c0\n0,1\n1,nan\n"), Err(Error::Schema(_))));
        assert!(matches!(Signal::from_csv_str("time,c0\n1,1\n0,2\n"), Err(Error::Grid(_))));
        assert!(Signal::from_csv_str("time,c0\n0,1\n1,2,3\n").is_err());
    }

    fn arb_signal() -> impl Strategy<Value = Signal> {
        (1usize..4, 2usize..30, 0.01f64..0.5, -2.0f64..2.0).prop_flat_map(|(dim, len, dt, t0)| {
            prop::collection::vec(-5.0f64..5.0, dim * len * 2).prop_map(move |v| {
                let samples = v.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect();
                Signal::new(t0, dt, dim, samples).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn segment_integral_is_additive(
            are in -5.0f64..2.0, aim in -5.0f64..5.0, r0 in -1.0f64..1.0, len in 0.01f64..2.0,
            split in 0.05f64..0.95, u0 in -3.0f64..3.0, u1 in -3.0f64..3.0, tail in 0.0f64..2.0,
        ) {
            let alpha = Complex64::new(are, aim);
            let r1 = r0 + len;
            let t = r1 + tail;
            let rm = r0 + split * len;
            let um = u0 + (u1 - u0) * split;
            let whole = exp_segment_integral(alpha, t, r0, r1, c(u0), c(u1)).unwrap();
            let parts = exp_segment_integral(alpha, t, r0, rm, c(u0), c(um)).unwrap()
                + exp_segment_integral(alpha, t, rm, r1, c(um), c(u1)).unwrap();
            let scale = exp_segment_integral(alpha, t, r0, r1, c(u0.abs() + 1.0), c(u1.abs() + 1.0)).unwrap().norm()
                .max(whole.norm());
            prop_assert!((whole - parts).norm() <= 1e-12 * scale.max(1e-300), "{whole} vs {parts}");
        }

        #[test]
        fn lp_norm_is_homogeneous(s in arb_signal(), cre in -3.0f64..3.0, cim in -3.0f64..3.0, p in 1.0f64..4.0) {
            let c = Complex64::new(cre, cim);
            for p in [2.0, p] {
                let lhs = s.scaled(c).lp_norm(p).unwrap();
                let rhs = c.norm() * s.lp_norm(p).unwrap();
                prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs));
            }
        }

        #[test]
        fn translation_preserves_norm(s in arb_signal(), delta in 0.0f64..10.0, p in 1.0f64..4.0) {
            prop_assert_eq!(s.translated(delta).lp_norm(p).unwrap(), s.lp_norm(p).unwrap());
            prop_assert_eq!(s.translated(delta).lp_norm(2.0).unwrap(), s.lp_norm(2.0).unwrap());
        }
    }
}
