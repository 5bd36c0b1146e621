//! Laplace transforms of sampled trajectories and their comparison with the
//! closed-form resolvent entries.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::laxphillips::{grid_steps, march};
use crate::signals::{exp_segment_weights, Signal, GRID_TOLERANCE};
use crate::spectral::SpectralVector;
use crate::system::SpectralSystem;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Slack for rounding in the closed forms, relative to their size.
pub const ROUNDING_SLACK: f64 = 1e-10;

/// Declared decay `|f(r)| <= amplitude * k * e^{omega (r - end)}` beyond the
/// last sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailModel {
    pub k: f64,
    pub omega: f64,
    pub amplitude: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LaplaceValue {
    pub value: Vec<Complex64>,
    pub tail_bound: f64,
}

/// `int_0^inf e^{-lambda r} f(r) dr` for the interpolant `f`, exact on every
/// segment, plus a bound for the declared continuation past the last sample.
pub fn laplace_transform(signal: &Signal, lambda: Complex64, tail: Option<TailModel>) -> Result<LaplaceValue> {
    if !(lambda.re.is_finite() && lambda.im.is_finite()) {
        return Err(Error::Domain("lambda must be finite".into()));
    }
    let tail_bound = match tail {
        None => 0.0,
        Some(model) => {
            if !(lambda.re > 0.0) || !(lambda.re > model.omega) {
                return Err(Error::Domain(format!(
                    "a decaying continuation needs Re(lambda) > max(0, omega), got {}",
                    lambda.re
                )));
            }
            model.amplitude * model.k * (-lambda.re * signal.end().max(0.0)).exp() / (lambda.re - model.omega)
        }
    };
    let mut value = vec![ZERO; signal.dim()];
    let h = signal.dt();
    for i in 0..signal.len().saturating_sub(1) {
        let (mut r0, r1) = (signal.time(i), signal.time(i + 1));
        if r1 <= 0.0 {
            continue;
        }
        let (u0, u1) = (signal.sample(i), signal.sample(i + 1));
        if r0 < 0.0 {
            // Only the part of the first segment on [0, r1] contributes.
            let frac = -r0 / h;
            r0 = 0.0;
            let (w0, w1) = exp_segment_weights(lambda, -r1, r1 - r0);
            for ((v, a), b) in value.iter_mut().zip(u0).zip(u1) {
                *v += w0 * (a + (b - a) * frac) + w1 * b;
            }
            continue;
        }
        let (w0, w1) = exp_segment_weights(lambda, -r1, h);
        for ((v, a), b) in value.iter_mut().zip(u0).zip(u1) {
            *v += w0 * a + w1 * b;
        }
    }
    Ok(LaplaceValue { value, tail_bound })
}

/// Residual of one resolvent entry with its error budget.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EntryResidual {
    pub residual: f64,
    pub quadrature_budget: f64,
    pub tail_budget: f64,
    pub budget: f64,
    pub pass: bool,
}

impl EntryResidual {
    fn new(residual: f64, quadrature_budget: f64, tail_budget: f64, closed_size: f64) -> Self {
        let budget = quadrature_budget + tail_budget + ROUNDING_SLACK * (1.0 + closed_size);
        Self { residual, quadrature_budget, tail_budget, budget, pass: residual <= budget }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ResidualReport {
    pub lambda: [f64; 2],
    pub horizon: f64,
    pub dt: f64,
    pub r12: EntryResidual,
    pub r23: EntryResidual,
    pub r13: EntryResidual,
}

impl ResidualReport {
    pub fn pass(&self) -> bool {
        self.r12.pass && self.r23.pass && self.r13.pass
    }
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Compares Laplace transforms of simulated trajectories on `[0, horizon]`
/// with `e^{lambda s} C R(lambda, A) x`, `R(lambda, A_{-1}) B u^` and
/// `(C_L R(lambda, A_{-1}) B + D) u^`.
///
/// `u` must start at 0 on the `dt` grid and vanish after `horizon`; the first
/// entry is checked at every offset in `s_samples`.
pub fn verify_resolvent_entries(
    sys: &SpectralSystem,
    lambda: Complex64,
    x: &SpectralVector,
    u: &Signal,
    horizon: f64,
    dt: f64,
    s_samples: &[f64],
) -> Result<ResidualReport> {
    if !(lambda.re > 0.0) {
        return Err(Error::Domain(format!("probe needs Re(lambda) > 0, got {}", lambda.re)));
    }
    if x.len() != sys.modes() || u.dim() != sys.inputs() {
        return Err(Error::Dimension("state or input does not match the system".into()));
    }
    if (u.dt() - dt).abs() > GRID_TOLERANCE * dt || u.t0().abs() > 1e-9 * dt {
        return Err(Error::Precondition("the input must start at 0 on the verification grid".into()));
    }
    let steps = grid_steps(horizon, dt)?;
    if u.end() > horizon + 1e-9 * dt {
        return Err(Error::Precondition("the input must vanish after the horizon".into()));
    }
    let omega = sys.generator().omega();
    let alphas = sys.generator().eigenvalues();
    let (c, b, d) = (sys.observation(), sys.control(), sys.feedthrough());
    let (modes, m, k) = (sys.modes(), sys.inputs(), sys.outputs());
    let h2 = dt * dt / 8.0;
    let seg_weight = |tl: f64| dt * (-lambda.re * tl).exp();
    let obs_weight: Vec<f64> = (0..modes).map(|nn| (0..k).map(|ii| c[(ii, nn)].norm()).sum()).collect();

    // r12: t -> (C T(t + s) x) for t >= -s.
    let resolved_x = sys.generator().resolvent_apply(lambda, x)?;
    let cx = sys.observe(&resolved_x);
    let mut r12: Option<EntryResidual> = None;
    for &s in s_samples {
        let lag = grid_steps(-s, dt)?;
        if lag >= steps {
            return Err(Error::Precondition(format!("offset {s} does not fit the horizon {horizon}")));
        }
        let n = steps - lag;
        let mut samples = Vec::with_capacity((n + 1) * k);
        let mut quad = 0.0;
        let decay: Vec<Complex64> = alphas.iter().map(|a| (a * dt).exp()).collect();
        let mut z = x.as_slice().to_vec();
        for i in 0..=n {
            let tau = i as f64 * dt;
            for ii in 0..k {
                samples.push((0..modes).map(|nn| c[(ii, nn)] * z[nn]).sum());
            }
            if i < n {
                let curvature: f64 =
                    (0..modes).map(|nn| obs_weight[nn] * z[nn].norm() * alphas[nn].norm_sqr()).sum();
                quad += h2 * curvature * seg_weight(tau - s);
            }
            for (zn, e) in z.iter_mut().zip(&decay) {
                *zn *= e;
            }
        }
        let amplitude: f64 = (0..modes)
            .map(|nn| obs_weight[nn] * x.as_slice()[nn].norm() * (alphas[nn].re * n as f64 * dt).exp())
            .sum();
        let sig = Signal::new(-s, dt, k, samples)?;
        let lt = laplace_transform(&sig, lambda, Some(TailModel { k: 1.0, omega, amplitude }))?;
        let closed: Vec<Complex64> = cx.iter().map(|v| v * (lambda * s).exp()).collect();
        let diff: Vec<Complex64> = lt.value.iter().zip(&closed).map(|(a, b)| a - b).collect();
        let entry = EntryResidual::new(norm(&diff), quad, lt.tail_bound, norm(&closed));
        // Keep the offset closest to failing.
        if r12.as_ref().map_or(true, |r| entry.residual / entry.budget >= r.residual / r.budget) {
            r12 = Some(entry);
        }
    }

    // r23 and r13 from one marched trajectory z(t) = B(t) u.
    let mut states = Vec::with_capacity((steps + 1) * modes);
    let mut outputs = Vec::with_capacity((steps + 1) * k);
    let last = march(sys, &vec![ZERO; modes], u, dt, steps, |_, z, ut| {
        states.extend_from_slice(z);
        for i in 0..k {
            let mut y: Complex64 = (0..modes).map(|nn| c[(i, nn)] * z[nn]).sum();
            for j in 0..m {
                y += d[(i, j)] * ut[j];
            }
            outputs.push(y);
        }
    })?;
    let mut quad_state = 0.0;
    let mut quad_out = 0.0;
    let zeros = vec![ZERO; m];
    let mut second = vec![0.0; modes];
    for i in 0..steps {
        let tl = i as f64 * dt;
        let inside = i + 1 < u.len();
        let (u0, u1) = if inside { (u.sample(i), u.sample(i + 1)) } else { (&zeros[..], &zeros[..]) };
        for nn in 0..modes {
            let bu: Complex64 = (0..m).map(|j| b[(nn, j)] * u0[j]).sum();
            let bs: f64 = (0..m).map(|j| b[(nn, j)] * (u1[j] - u0[j]) / dt).sum::<Complex64>().norm();
            let slope = alphas[nn] * states[i * modes + nn] + bu;
            second[nn] = alphas[nn].norm() * (slope.norm() + dt * bs) + bs;
        }
        let w = h2 * seg_weight(tl);
        quad_state += w * second.iter().map(|v| v * v).sum::<f64>().sqrt();
        quad_out += w * (0..modes).map(|nn| obs_weight[nn] * second[nn]).sum::<f64>();
    }
    let u_hat = laplace_transform(u, lambda, None)?.value;
    let bu_hat: Vec<Complex64> = (0..modes).map(|nn| (0..m).map(|j| b[(nn, j)] * u_hat[j]).sum()).collect();
    let closed_state = sys.generator().resolvent_apply(lambda, &SpectralVector::new(bu_hat)?)?;
    let mut closed_out = sys.observe(&closed_state);
    for (y, du) in closed_out.iter_mut().zip(sys.feed(&u_hat)) {
        *y += du;
    }

    let amplitude_state = norm(&last);
    let amplitude_out: f64 = (0..modes).map(|nn| obs_weight[nn] * last[nn].norm()).sum();
    let lt_state = laplace_transform(
        &Signal::new(0.0, dt, modes, states)?,
        lambda,
        Some(TailModel { k: 1.0, omega, amplitude: amplitude_state }),
    )?;
    let lt_out = laplace_transform(
        &Signal::new(0.0, dt, k, outputs)?,
        lambda,
        Some(TailModel { k: 1.0, omega, amplitude: amplitude_out }),
    )?;
    let diff_state: Vec<Complex64> =
        lt_state.value.iter().zip(closed_state.as_slice()).map(|(a, b)| a - b).collect();
    let diff_out: Vec<Complex64> = lt_out.value.iter().zip(&closed_out).map(|(a, b)| a - b).collect();

    Ok(ResidualReport {
        lambda: [lambda.re, lambda.im],
        horizon,
        dt,
        r12: r12.ok_or_else(|| Error::Precondition("need at least one offset s".into()))?,
        r23: EntryResidual::new(norm(&diff_state), quad_state, lt_state.tail_bound, closed_state.norm()),
        r13: EntryResidual::new(norm(&diff_out), quad_out, lt_out.tail_bound, norm(&closed_out)),
    })
}
