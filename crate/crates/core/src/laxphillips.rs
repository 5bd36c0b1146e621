//! Entries of the Lax-Phillips semigroup on `E1 x X x E2` and the evolution
//! of extended states.
//!
//! `E1` holds past outputs on `(-inf, 0]`, represented on a finite window
//! `[-T_w, 0]`; `E2` holds future inputs on `[0, inf)`.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signals::{exp_segment_weights, Signal, GRID_TOLERANCE};
use crate::spectral::SpectralVector;
use crate::system::SpectralSystem;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Number of `dt` steps in `t`; errors unless `t` is a grid multiple.
pub fn grid_steps(t: f64, dt: f64) -> Result<usize> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("time must be finite and >= 0, got {t}")));
    }
    let k = t / dt;
    let r = k.round();
    if (k - r).abs() > 1e-6 {
        return Err(Error::Grid(format!("t = {t} is not a multiple of dt = {dt}")));
    }
    Ok(r as usize)
}

/// `(C_L T(t + s) x)(s)` for `s` on the grid of `[-t, 0]`.
pub fn observe_trajectory(sys: &SpectralSystem, t: f64, x: &SpectralVector, dt: f64) -> Result<Signal> {
    check_state(sys, x)?;
    let n = grid_steps(t, dt)?;
    let k = sys.outputs();
    if n == 0 {
        return Signal::zeros(0.0, dt, 1, k);
    }
    let alphas = sys.generator().eigenvalues();
    let mut samples = Vec::with_capacity((n + 1) * k);
    for i in 0..=n {
        let tau = i as f64 * dt;
        let z: Vec<Complex64> = alphas.iter().zip(x.as_slice()).map(|(a, xn)| (a * tau).exp() * xn).collect();
        samples.extend(sys.observe(&SpectralVector::new(z)?));
    }
    Signal::new(-(n as f64) * dt, dt, k, samples)
}

fn check_state(sys: &SpectralSystem, x: &SpectralVector) -> Result<()> {
    if x.len() != sys.modes() {
        return Err(Error::Dimension(format!("state has {} entries, system has {} modes", x.len(), sys.modes())));
    }
    Ok(())
}

fn check_input(sys: &SpectralSystem, u: &Signal) -> Result<()> {
    if u.dim() != sys.inputs() {
        return Err(Error::Dimension(format!("input has {} channels, system has {}", u.dim(), sys.inputs())));
    }
    Ok(())
}

/// Pieces of `u` restricted to `[a, b]`: `(r0, r1, u(r0), u(r1))`.
fn support_segments(u: &Signal, a: f64, b: f64) -> Vec<(f64, f64, Vec<Complex64>, Vec<Complex64>)> {
    let lo = a.max(u.t0());
    let hi = b.min(u.end());
    if !(hi > lo) {
        return Vec::new();
    }
    let mut points = vec![lo];
    points.extend(u.knots_between(lo, hi));
    points.push(hi);
    points
        .windows(2)
        .map(|w| (w[0], w[1], u.value_at(w[0]), u.value_at(w[1])))
        .collect()
}

/// `int_0^t T_{-1}(t - r) B u(r) dr`, exact on every segment of `u`.
pub fn control_to_state(sys: &SpectralSystem, t: f64, u: &Signal) -> Result<SpectralVector> {
    check_input(sys, u)?;
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("time must be >= 0, got {t}")));
    }
    let b = sys.control();
    let mut x = vec![ZERO; sys.modes()];
    for (r0, r1, u0, u1) in support_segments(u, 0.0, t) {
        for (n, a) in sys.generator().eigenvalues().iter().enumerate() {
            let (w0, w1) = exp_segment_weights(*a, t - r1, r1 - r0);
            for j in 0..sys.inputs() {
                x[n] += b[(n, j)] * (w0 * u0[j] + w1 * u1[j]);
            }
        }
    }
    SpectralVector::new(x)
}

/// `e^z - 1` without cancellation for small `z`.
fn expm1(z: Complex64) -> Complex64 {
    let half = (0.5 * z.im).sin();
    Complex64::new(z.re.exp_m1() * z.im.cos() - 2.0 * half * half, z.re.exp() * z.im.sin())
}

/// Same value as [`control_to_state`], computed by integrating by parts:
/// `A^{-1} (T(t) B u(0) - B u(t) + int_0^t T(t - r) B u'(r) dr)`, with the
/// boundary terms taken at the ends of the support of `u` inside `[0, t]`.
pub fn control_to_state_ibp(sys: &SpectralSystem, t: f64, u: &Signal) -> Result<SpectralVector> {
    check_input(sys, u)?;
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("time must be >= 0, got {t}")));
    }
    let segments = support_segments(u, 0.0, t);
    let b = sys.control();
    let mut x = vec![ZERO; sys.modes()];
    let (Some(first), Some(last)) = (segments.first(), segments.last()) else {
        return SpectralVector::new(x);
    };
    let (lo, hi) = (first.0, last.1);
    for (n, a) in sys.generator().eigenvalues().iter().enumerate() {
        for j in 0..sys.inputs() {
            let mut acc = (a * (t - lo)).exp() * first.2[j] - (a * (t - hi)).exp() * last.3[j];
            for (r0, r1, u0, u1) in &segments {
                let slope = (u1[j] - u0[j]) / (r1 - r0);
                acc += slope * (a * (t - r1)).exp() * expm1(a * (r1 - r0)) / a;
            }
            x[n] += b[(n, j)] * acc / a;
        }
    }
    SpectralVector::new(x)
}

/// Walks `z(tau) = T(tau) x0 + int_0^tau T_{-1}(tau - r) B u(r) dr` over the
/// nodes `tau = i dt`, `i = 0..=steps`, calling `visit(i, z, u(tau))`.
///
/// `u` must live on a grid with step `dt` whose knots are multiples of `dt`.
pub(crate) fn march(
    sys: &SpectralSystem,
    x0: &[Complex64],
    u: &Signal,
    dt: f64,
    steps: usize,
    mut visit: impl FnMut(usize, &[Complex64], &[Complex64]),
) -> Result<Vec<Complex64>> {
    check_input(sys, u)?;
    if (u.dt() - dt).abs() > GRID_TOLERANCE * dt {
        return Err(Error::Grid(format!("input step {} differs from simulation step {dt}", u.dt())));
    }
    let offset = u.t0() / dt;
    if (offset - offset.round()).abs() > 1e-6 {
        return Err(Error::Grid(format!("input grid starting at {} is not aligned to dt = {dt}", u.t0())));
    }
    let offset = offset.round() as i64;
    let (modes, m) = (sys.modes(), sys.inputs());
    let alphas = sys.generator().eigenvalues();
    let decay: Vec<Complex64> = alphas.iter().map(|a| (a * dt).exp()).collect();
    let weights: Vec<(Complex64, Complex64)> = alphas.iter().map(|a| exp_segment_weights(*a, 0.0, dt)).collect();
    let b = sys.control();
    let zeros = vec![ZERO; m];
    let sample = |i: i64| -> &[Complex64] {
        if i >= 0 && (i as usize) < u.len() {
            u.sample(i as usize)
        } else {
            &zeros
        }
    };

    let mut z = x0.to_vec();
    let mut bu0 = vec![ZERO; modes];
    let mut bu1 = vec![ZERO; modes];
    visit(0, &z, sample(-offset));
    for step in 0..steps {
        let i = step as i64 - offset;
        let inside = i >= 0 && ((i + 1) as usize) < u.len();
        if inside {
            let (u0, u1) = (u.sample(i as usize), u.sample(i as usize + 1));
            for n in 0..modes {
                bu0[n] = (0..m).map(|j| b[(n, j)] * u0[j]).sum();
                bu1[n] = (0..m).map(|j| b[(n, j)] * u1[j]).sum();
            }
        }
        for n in 0..modes {
            z[n] *= decay[n];
            if inside {
                z[n] += weights[n].0 * bu0[n] + weights[n].1 * bu1[n];
            }
        }
        visit(step + 1, &z, sample(i + 1));
    }
    Ok(z)
}

/// `(F(t) u)(s) = C_L int_0^{t+s} T_{-1}(t+s-r) B u(r) dr + D u(t+s)` on the
/// grid of `[-t, 0]` with the step of `u`.
pub fn input_output_map(sys: &SpectralSystem, t: f64, u: &Signal) -> Result<Signal> {
    check_input(sys, u)?;
    let dt = u.dt();
    let n = grid_steps(t, dt)?;
    let k = sys.outputs();
    let mut out = Vec::with_capacity((n + 1) * k);
    march(sys, &vec![ZERO; sys.modes()], u, dt, n, |_, z, ut| {
        push_output(sys, z, ut, &mut out);
    })?;
    Signal::new(-(n as f64) * dt, dt, k, out)
}

fn push_output(sys: &SpectralSystem, z: &[Complex64], u: &[Complex64], out: &mut Vec<Complex64>) {
    let c = sys.observation();
    let d = sys.feedthrough();
    for i in 0..sys.outputs() {
        let mut y: Complex64 = (0..sys.modes()).map(|n| c[(i, n)] * z[n]).sum();
        for (j, uj) in u.iter().enumerate() {
            y += d[(i, j)] * uj;
        }
        out.push(y);
    }
}

/// Finite-difference first and second derivatives of the samples of `u`,
/// second order everywhere.
fn derivatives(u: &Signal) -> Result<(Signal, Signal)> {
    let n = u.len();
    if n < 4 {
        return Err(Error::Precondition("derivative path needs at least 4 samples".into()));
    }
    let (h, m) = (u.dt(), u.dim());
    let at = |i: usize, j: usize| u.sample(i)[j];
    let mut d1 = Vec::with_capacity(n * m);
    let mut d2 = Vec::with_capacity(n * m);
    for i in 0..n {
        for j in 0..m {
            let (first, second) = if i == 0 {
                (
                    (-3.0 * at(0, j) + 4.0 * at(1, j) - at(2, j)) / (2.0 * h),
                    (2.0 * at(0, j) - 5.0 * at(1, j) + 4.0 * at(2, j) - at(3, j)) / (h * h),
                )
            } else if i == n - 1 {
                (
                    (3.0 * at(i, j) - 4.0 * at(i - 1, j) + at(i - 2, j)) / (2.0 * h),
                    (2.0 * at(i, j) - 5.0 * at(i - 1, j) + 4.0 * at(i - 2, j) - at(i - 3, j)) / (h * h),
                )
            } else {
                (
                    (at(i + 1, j) - at(i - 1, j)) / (2.0 * h),
                    (at(i + 1, j) - 2.0 * at(i, j) + at(i - 1, j)) / (h * h),
                )
            };
            d1.push(first);
            d2.push(second);
        }
    }
    Ok((Signal::new(u.t0(), h, m, d1)?, Signal::new(u.t0(), h, m, d2)?))
}

/// [`input_output_map`] computed through two integrations by parts,
/// `-A^{-1} B u(tau) - A^{-2} B u'(tau) + A^{-2} int_0^tau T(tau - r) B u''(r) dr`,
/// for inputs with `u(0) = u'(0) = 0`. Derivatives come from finite
/// differences, so the result agrees with the direct path to `O(dt^2)`.
pub fn input_output_map_intxp(sys: &SpectralSystem, t: f64, u: &Signal) -> Result<Signal> {
    check_input(sys, u)?;
    if u.t0().abs() > 1e-9 * u.dt() {
        return Err(Error::Precondition("the smooth path needs an input starting at 0".into()));
    }
    let (d1, d2) = derivatives(u)?;
    let scale = u.max_abs();
    let tol = 1e-9 * scale;
    if u.sample(0).iter().any(|z| z.norm() > tol) {
        return Err(Error::Precondition("the smooth path needs u(0) = 0".into()));
    }
    if d1.sample(0).iter().any(|z| z.norm() * u.dt() > 1e-6 * scale) {
        return Err(Error::Precondition("the smooth path needs u'(0) = 0".into()));
    }
    let dt = u.dt();
    let n = grid_steps(t, dt)?;
    let (modes, m, k) = (sys.modes(), sys.inputs(), sys.outputs());
    let alphas = sys.generator().eigenvalues();
    let b = sys.control();
    let mut out = Vec::with_capacity((n + 1) * k);
    let mut z = vec![ZERO; modes];
    march(sys, &vec![ZERO; modes], &d2, dt, n, |i, w, _| {
        let tau = i as f64 * dt;
        let (u0, u1) = (u.value_at(tau), d1.value_at(tau));
        for (nn, a) in alphas.iter().enumerate() {
            let bu: Complex64 = (0..m).map(|j| b[(nn, j)] * u0[j]).sum();
            let bu1: Complex64 = (0..m).map(|j| b[(nn, j)] * u1[j]).sum();
            z[nn] = -bu / a - bu1 / (a * a) + w[nn] / (a * a);
        }
        push_output(sys, &z, &u0, &mut out);
    })?;
    Signal::new(-(n as f64) * dt, dt, k, out)
}

/// A point of the extended state space.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtendedState {
    past_output: Signal,
    state: SpectralVector,
    future_input: Signal,
}

impl ExtendedState {
    /// `past_output` must end at 0 and `future_input` start at 0, on a common step.
    pub fn new(past_output: Signal, state: SpectralVector, future_input: Signal) -> Result<Self> {
        let dt = past_output.dt();
        if (future_input.dt() - dt).abs() > GRID_TOLERANCE * dt {
            return Err(Error::Grid("past output and future input must share a time step".into()));
        }
        if past_output.end().abs() > 1e-6 * dt {
            return Err(Error::Grid(format!("past output must end at 0, ends at {}", past_output.end())));
        }
        if future_input.t0().abs() > 1e-6 * dt {
            return Err(Error::Grid(format!("future input must start at 0, starts at {}", future_input.t0())));
        }
        let n = past_output.len() - 1;
        let past_output = Signal::new(-(n as f64) * dt, dt, past_output.dim(), past_output.samples().to_vec())?;
        let future_input = Signal::new(0.0, dt, future_input.dim(), future_input.samples().to_vec())?;
        Ok(Self { past_output, state, future_input })
    }

    /// Zero past output on `[-window, 0]`, zero state, zero input on `[0, horizon]`.
    pub fn zero(sys: &SpectralSystem, window: f64, horizon: f64, dt: f64) -> Result<Self> {
        let nw = grid_steps(window, dt)?;
        let nf = grid_steps(horizon, dt)?;
        Self::new(
            Signal::zeros(-(nw as f64) * dt, dt, nw + 1, sys.outputs())?,
            SpectralVector::zeros(sys.modes()),
            Signal::zeros(0.0, dt, nf + 1, sys.inputs())?,
        )
    }

    pub fn past_output(&self) -> &Signal {
        &self.past_output
    }

    pub fn state(&self) -> &SpectralVector {
        &self.state
    }

    pub fn future_input(&self) -> &Signal {
        &self.future_input
    }

    pub fn dt(&self) -> f64 {
        self.past_output.dt()
    }

    pub fn window(&self) -> f64 {
        (self.past_output.len() - 1) as f64 * self.dt()
    }

    fn check(&self, sys: &SpectralSystem) -> Result<()> {
        check_state(sys, &self.state)?;
        check_input(sys, &self.future_input)?;
        if self.past_output.dim() != sys.outputs() {
            return Err(Error::Dimension(format!(
                "past output has {} channels, system has {}",
                self.past_output.dim(),
                sys.outputs()
            )));
        }
        Ok(())
    }

    /// Product-space distance: the largest of the three component norms.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        let past = self.past_output.sub(&other.past_output)?.lp_norm(2.0)?;
        let state = self.state.sub(&other.state)?.norm();
        let future = self.future_input.sub(&other.future_input)?.lp_norm(2.0)?;
        Ok(past.max(state).max(future))
    }
}

/// Applies the Lax-Phillips semigroup for time `t`.
///
/// The past-output window keeps its length; content shifted beyond it is an
/// error rather than being dropped. The future input keeps its length and is
/// padded with zeros.
pub fn step_extended_state(sys: &SpectralSystem, t: f64, xs: &ExtendedState) -> Result<ExtendedState> {
    xs.check(sys)?;
    let dt = xs.dt();
    let nt = grid_steps(t, dt)?;
    if nt == 0 {
        return Ok(xs.clone());
    }
    let nw = xs.past_output.len() - 1;
    if nt > nw || (0..nt).any(|i| xs.past_output.sample(i).iter().any(|z| *z != ZERO)) {
        return Err(Error::Horizon { needed: t, window: xs.window() });
    }
    let k = sys.outputs();
    let mut past = Vec::with_capacity((nw + 1) * k);
    past.extend_from_slice(&xs.past_output.samples()[nt * k..nw * k]);
    let state = march(sys, xs.state.as_slice(), &xs.future_input, dt, nt, |_, z, ut| {
        push_output(sys, z, ut, &mut past);
    })?;

    let m = sys.inputs();
    let old = xs.future_input.samples();
    let mut future = vec![ZERO; old.len()];
    if nt * m < old.len() {
        let keep = old.len() - nt * m;
        future[..keep].copy_from_slice(&old[nt * m..]);
    }
    Ok(ExtendedState {
        past_output: Signal::new(xs.past_output.t0(), dt, k, past)?,
        state: SpectralVector::new(state)?,
        future_input: Signal::new(0.0, dt, m, future)?,
    })
}

/// States `T(tau) x + B(tau) u` of the extended state at the grid times of
/// `[0, t]`, as a signal with one channel per mode.
pub fn state_trajectory(sys: &SpectralSystem, t: f64, xs: &ExtendedState) -> Result<Signal> {
    xs.check(sys)?;
    let dt = xs.dt();
    let n = grid_steps(t, dt)?;
    let mut samples = Vec::with_capacity((n + 1) * sys.modes());
    march(sys, xs.state.as_slice(), &xs.future_input, dt, n, |_, z, _| samples.extend_from_slice(z))?;
    Signal::new(0.0, dt, sys.modes(), samples)
}

/// Distance between `step(t + s)` and `step(t) . step(s)`.
pub fn semigroup_law_residual(sys: &SpectralSystem, t: f64, s: f64, xs: &ExtendedState) -> Result<f64> {
    if !(t >= 0.0 && s >= 0.0) {
        return Err(Error::Domain(format!("times must be >= 0, got t = {t}, s = {s}")));
    }
    let joint = step_extended_state(sys, t + s, xs)?;
    let split = step_extended_state(sys, t, &step_extended_state(sys, s, xs)?)?;
    joint.distance(&split)
}

/// On-disk form of an [`ExtendedState`]: two CSV signals referenced by path
/// (relative to the envelope) and the state inline as `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct StateEnvelope {
    pub past_output: String,
    pub state: Vec<[f64; 2]>,
    pub future_input: String,
}

impl StateEnvelope {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let env: Self = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        if env.state.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::Schema("state entries must be finite".into()));
        }
        Ok(env)
    }

    pub fn state_vector(&self) -> Result<SpectralVector> {
        SpectralVector::new(self.state.iter().map(|v| Complex64::new(v[0], v[1])).collect())
    }
}

/// Reads an envelope and the two signals it references.
pub fn load_extended_state(path: &Path) -> Result<ExtendedState> {
    let env = StateEnvelope::from_json_str(&std::fs::read_to_string(path)?)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    ExtendedState::new(
        Signal::read_csv(&base.join(&env.past_output))?,
        env.state_vector()?,
        Signal::read_csv(&base.join(&env.future_input))?,
    )
}

/// Writes `<stem>.json`, `<stem>_past.csv` and `<stem>_future.csv` into `dir`.
pub fn save_extended_state(xs: &ExtendedState, dir: &Path, stem: &str) -> Result<PathBuf> {
    let past = format!("{stem}_past.csv");
    let future = format!("{stem}_future.csv");
    xs.past_output.write_csv(&dir.join(&past))?;
    xs.future_input.write_csv(&dir.join(&future))?;
    let env = StateEnvelope {
        past_output: past,
        state: xs.state.as_slice().iter().map(|z| [z.re, z.im]).collect(),
        future_input: future,
    };
    let path = dir.join(format!("{stem}.json"));
    std::fs::write(&path, serde_json::to_string_pretty(&env)?)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{build_system, SystemSpec};
    use approx::assert_relative_eq;

    fn one_mode(d: f64) -> SpectralSystem {
        let spec = SystemSpec::from_json_str(&format!(
            r#"{{"eigenvalues":[[-1,0]],"control":[[[1,0]]],"observation":[[[1,0]]],"feedthrough":[[[{d},0]]]}}"#
        ))
        .unwrap();
        build_system(&spec).unwrap()
    }

    fn real_signal(dt: f64, end: f64, f: impl Fn(f64) -> f64) -> Signal {
        let n = (end / dt).round() as usize;
        Signal::from_real_fn(0.0, dt, n + 1, 1, |t| vec![f(t)]).unwrap()
    }

    fn e() -> f64 {
        1f64.exp()
    }

    #[test]
    fn observe_examples() {
        let sys = one_mode(0.0);
        let x = SpectralVector::from_real(&[1.0]);
        let y = observe_trajectory(&sys, 0.0, &x, 1e-3).unwrap();
        assert_eq!(y.max_abs(), 0.0);
        let y = observe_trajectory(&sys, 1.0, &x, 1e-3).unwrap();
        assert_relative_eq!(y.value_at(0.0)[0].re, 1.0 / e(), epsilon = 1e-14);
        assert_relative_eq!(y.value_at(-1.0)[0].re, 1.0, epsilon = 1e-14);
        assert!(matches!(observe_trajectory(&sys, 1.0005, &x, 1e-3), Err(Error::Grid(_))));
    }

    #[test]
    fn control_to_state_examples() {
        let sys = one_mode(0.0);
        let one = real_signal(0.1, 1.0, |_| 1.0);
        let ramp = real_signal(0.1, 1.0, |t| t);
        for f in [control_to_state, control_to_state_ibp] {
            assert_eq!(f(&sys, 0.0, &one).unwrap().norm(), 0.0);
            assert_eq!(f(&sys, 1.0, &one.scaled(ZERO)).unwrap().norm(), 0.0);
            assert_relative_eq!(f(&sys, 1.0, &one).unwrap().as_slice()[0].re, 1.0 - 1.0 / e(), epsilon = 1e-14);
            assert_relative_eq!(f(&sys, 1.0, &ramp).unwrap().as_slice()[0].re, 1.0 / e(), epsilon = 1e-14);
        }
    }

    #[test]
    fn input_output_examples() {
        // int_0^1 e^{-(1-r)} r^2 dr = 1 - 2/e; sampled r^2 adds dt^2/6 (1 - 1/e).
        let dt = 1e-4;
        let u = real_signal(dt, 1.0, |t| t * t);
        let pl = dt * dt / 6.0 * (1.0 - 1.0 / e());
        let y = input_output_map(&one_mode(0.0), 1.0, &u).unwrap();
        assert_relative_eq!(y.value_at(0.0)[0].re, 1.0 - 2.0 / e() + pl, epsilon = 1e-12);
        assert_relative_eq!(y.value_at(0.0)[0].re, 0.26424, epsilon = 1e-5);
        let y = input_output_map(&one_mode(1.0), 1.0, &u).unwrap();
        assert_relative_eq!(y.value_at(0.0)[0].re, 2.0 - 2.0 / e() + pl, epsilon = 1e-12);
        assert_eq!(input_output_map(&one_mode(1.0), 1.0, &u.scaled(ZERO)).unwrap().max_abs(), 0.0);

        let y = input_output_map_intxp(&one_mode(0.0), 1.0, &u).unwrap();
        assert_relative_eq!(y.value_at(0.0)[0].re, 1.0 - 2.0 / e(), epsilon = 1e-9);
        let bad = real_signal(dt, 1.0, |t| t + 1.0);
        assert!(matches!(input_output_map_intxp(&one_mode(0.0), 1.0, &bad), Err(Error::Precondition(_))));
        let bad = real_signal(dt, 1.0, |t| t);
        assert!(matches!(input_output_map_intxp(&one_mode(0.0), 1.0, &bad), Err(Error::Precondition(_))));
    }

    fn state_only(sys: &SpectralSystem, x: f64, window: f64, dt: f64, u: impl Fn(f64) -> f64) -> ExtendedState {
        let mut xs = ExtendedState::zero(sys, window, 2.0, dt).unwrap();
        xs.state = SpectralVector::from_real(&[x]);
        xs.future_input = real_signal(dt, 2.0, u);
        xs
    }

    #[test]
    fn step_examples() {
        let sys = one_mode(0.0);
        let xs = state_only(&sys, 1.0, 1.0, 1e-2, |_| 1.0);
        assert_eq!(step_extended_state(&sys, 0.0, &xs).unwrap(), xs);
        let next = step_extended_state(&sys, 1.0, &xs).unwrap();
        assert_relative_eq!(next.state.as_slice()[0].re, 1.0, epsilon = 1e-14);
        assert_eq!(next.future_input.len(), xs.future_input.len());
        assert_eq!(next.future_input.value_at(0.5)[0].re, 1.0);
        assert_eq!(next.future_input.value_at(1.5)[0].re, 0.0);

        let xs = state_only(&sys, 1.0, 1.0, 1e-2, |_| 0.0);
        let next = step_extended_state(&sys, 0.5, &xs).unwrap();
        let obs = observe_trajectory(&sys, 0.5, &xs.state, 1e-2).unwrap();
        assert_relative_eq!(next.state.as_slice()[0].re, (-0.5f64).exp(), epsilon = 1e-14);
        for s in [-0.5, -0.25, 0.0] {
            assert_relative_eq!(next.past_output.value_at(s)[0].re, obs.value_at(s)[0].re, epsilon = 1e-14);
        }
        assert_eq!(next.past_output.value_at(-0.75)[0].re, 0.0);
        assert_eq!(next.future_input.max_abs(), 0.0);
    }

    #[test]
    fn horizon_errors() {
        let sys = one_mode(0.0);
        let xs = state_only(&sys, 1.0, 0.5, 1e-2, |_| 1.0);
        assert!(matches!(step_extended_state(&sys, 0.6, &xs), Err(Error::Horizon { .. })));
        let pushed = step_extended_state(&sys, 0.3, &xs).unwrap();
        assert!(matches!(step_extended_state(&sys, 0.3, &pushed), Err(Error::Horizon { .. })));
        assert!(Error::Horizon { needed: 1.0, window: 0.5 }.to_string().contains("--window"));
    }

    #[test]
    fn semigroup_examples() {
        let sys = one_mode(0.5);
        let xs = state_only(&sys, 1.0, 1.0, 1e-2, |t| t.sin());
        assert_eq!(semigroup_law_residual(&sys, 0.3, 0.0, &xs).unwrap(), 0.0);
        let xs = state_only(&sys, 1.0, 1.0, 1e-2, |_| 0.0);
        assert!(semigroup_law_residual(&sys, 0.35, 0.35, &xs).unwrap() <= 1e-12);
    }

    #[test]
    fn envelope_roundtrip() {
        let sys = one_mode(0.0);
        let xs = state_only(&sys, 0.25, 1.0, 0.1, |t| t);
        let dir = tempfile::tempdir().unwrap();
        let path = save_extended_state(&xs, dir.path(), "init").unwrap();
        let back = load_extended_state(&path).unwrap();
        assert!(back.distance(&xs).unwrap() <= 1e-15);
        assert!(StateEnvelope::from_json_str(r#"{"pastOutput":"a","state":[],"futureInput":"b","x":1}"#).is_err());
    }
}
