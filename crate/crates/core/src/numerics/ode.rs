//! Adaptive Dormand–Prince 5(4) integrator.
//!
//! Steps are clamped so that every requested output time is hit exactly;
//! no interpolation is involved in the dense output.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

pub trait OdeState: Clone {
    /// self += a·x
    fn axpy(&mut self, a: f64, x: &Self);
    /// RMS of err_i / (atol + rtol·max(|y0_i|, |y1_i|)).
    fn error_norm(err: &Self, y0: &Self, y1: &Self, rtol: f64, atol: f64) -> f64;
    fn is_finite(&self) -> bool;
}

macro_rules! impl_state {
    ($ty:ty, $abs:expr) => {
        impl OdeState for $ty {
            fn axpy(&mut self, a: f64, x: &Self) {
                for (s, v) in self.iter_mut().zip(x.iter()) {
                    *s += *v * a;
                }
            }
            fn error_norm(err: &Self, y0: &Self, y1: &Self, rtol: f64, atol: f64) -> f64 {
                let abs = $abs;
                let n = err.len().max(1) as f64;
                let s: f64 = err
                    .iter()
                    .zip(y0.iter().zip(y1.iter()))
                    .map(|(e, (a, b))| {
                        let sc = atol + rtol * abs(a).max(abs(b));
                        (abs(e) / sc).powi(2)
                    })
                    .sum();
                (s / n).sqrt()
            }
            fn is_finite(&self) -> bool {
                let abs = $abs;
                self.iter().all(|v| abs(v).is_finite())
            }
        }
    };
}

impl_state!(Vec<f64>, |v: &f64| v.abs());
impl_state!(DVector<f64>, |v: &f64| v.abs());
impl_state!(DVector<Complex64>, |v: &Complex64| v.norm());
impl_state!(DMatrix<Complex64>, |v: &Complex64| v.norm());

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub initial_step: Option<f64>,
    pub max_step: f64,
    pub max_steps: usize,
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { rtol: tol, atol: tol, ..Self::default() }
    }
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            initial_step: None,
            max_step: f64::INFINITY,
            max_steps: 20_000_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory<Y> {
    pub times: Vec<f64>,
    pub states: Vec<Y>,
    pub accepted: usize,
    pub rejected: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn combo<Y: OdeState>(y: &Y, h: f64, terms: &[(f64, &Y)]) -> Y {
    let mut out = y.clone();
    for (a, k) in terms {
        if *a != 0.0 {
            out.axpy(h * a, k);
        }
    }
    out
}

/// Integrate `dy/dt = f(t, y)` from `t0` and return the state at each of
/// `t_out` (non-decreasing, all ≥ t0).
pub fn integrate_ode<Y, F>(f: F, y0: Y, t0: f64, t_out: &[f64], opts: &OdeOptions) -> Result<Trajectory<Y>>
where
    Y: OdeState,
    F: Fn(f64, &Y) -> Y,
{
    if !(opts.rtol > 0.0 && opts.atol > 0.0) {
        return Err(invalid("tol", "tolerances must be positive"));
    }
    if t_out.iter().any(|&t| !(t >= t0)) || t_out.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("t_out", "output times must be non-decreasing and >= t0"));
    }
    let mut traj = Trajectory { times: Vec::with_capacity(t_out.len()), states: Vec::with_capacity(t_out.len()), accepted: 0, rejected: 0 };
    let Some(&t_end) = t_out.last() else {
        return Ok(traj);
    };

    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    let mut h = match opts.initial_step {
        Some(h) => h,
        None => initial_step(&f, t, &y, &k1, opts),
    }
    .min(opts.max_step)
    .min((t_end - t0).max(f64::MIN_POSITIVE));

    let mut next = 0;
    while next < t_out.len() && t_out[next] <= t {
        traj.times.push(t_out[next]);
        traj.states.push(y.clone());
        next += 1;
    }
    let mut steps = 0usize;
    while next < t_out.len() {
        let target = t_out[next];
        let mut hit = false;
        let mut step = h;
        if t + step >= target || t + 1.01 * step >= target {
            step = target - t;
            hit = true;
        }
        let h_min = 16.0 * f64::EPSILON * t.abs().max(target.abs());
        if step < h_min && !hit {
            return Err(Error::StepUnderflow { t, h: step });
        }
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::TooManySteps { max_steps: opts.max_steps, t });
        }

        let k2 = f(t + C2 * step, &combo(&y, step, &[(A21, &k1)]));
        let k3 = f(t + C3 * step, &combo(&y, step, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(t + C4 * step, &combo(&y, step, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(t + C5 * step, &combo(&y, step, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = f(t + step, &combo(&y, step, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
        let y_new = combo(&y, step, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let k7 = f(t + step, &y_new);
        let err = combo(&zero_like(&k1), step, &[(E1, &k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)]);
        let en = Y::error_norm(&err, &y, &y_new, opts.rtol, opts.atol);

        if en <= 1.0 && y_new.is_finite() {
            t = if hit { target } else { t + step };
            y = y_new;
            k1 = k7;
            traj.accepted += 1;
            while next < t_out.len() && t_out[next] <= t {
                traj.times.push(t_out[next]);
                traj.states.push(y.clone());
                next += 1;
            }
            let fac = if en == 0.0 { 5.0 } else { (0.9 * en.powf(-0.2)).clamp(0.2, 5.0) };
            // a step shortened to land on an output time says nothing about h
            h = if hit { h.max(step * fac) } else { step * fac };
            h = h.min(opts.max_step);
        } else {
            traj.rejected += 1;
            let fac = if en.is_finite() { (0.9 * en.powf(-0.2)).clamp(0.1, 0.9) } else { 0.1 };
            h = step * fac;
            if h < 16.0 * f64::EPSILON * t.abs().max(f64::MIN_POSITIVE) {
                return Err(Error::StepUnderflow { t, h });
            }
        }
    }
    Ok(traj)
}

fn zero_like<Y: OdeState>(y: &Y) -> Y {
    let mut z = y.clone();
    let copy = y.clone();
    z.axpy(-1.0, &copy);
    z
}

fn initial_step<Y: OdeState, F: Fn(f64, &Y) -> Y>(f: &F, t: f64, y: &Y, k1: &Y, opts: &OdeOptions) -> f64 {
    let zero = zero_like(y);
    let d0 = Y::error_norm(y, y, &zero, opts.rtol, opts.atol);
    let d1 = Y::error_norm(k1, y, &zero, opts.rtol, opts.atol);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let y1 = combo(y, h0, &[(1.0, k1)]);
    let k2 = f(t + h0, &y1);
    let mut diff = k2;
    diff.axpy(-1.0, k1);
    let d2 = Y::error_norm(&diff, y, &zero, opts.rtol, opts.atol) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let opts = OdeOptions::with_tol(1e-11);
        let tr = integrate_ode(|_, y: &Vec<f64>| vec![-y[0]], vec![1.0], 0.0, &[1.0], &opts).unwrap();
        assert!((tr.states[0][0] - (-1.0f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn harmonic_oscillator_energy_conserved() {
        let w = std::f64::consts::TAU;
        let opts = OdeOptions { rtol: 1e-10, atol: 1e-10, ..Default::default() };
        let times: Vec<f64> = (1..=100).map(|k| k as f64).collect();
        let tr = integrate_ode(|_, y: &Vec<f64>| vec![y[1], -w * w * y[0]], vec![1.0, 0.0], 0.0, &times, &opts).unwrap();
        for s in &tr.states {
            let e = 0.5 * s[1] * s[1] + 0.5 * w * w * s[0] * s[0];
            assert!((e / (0.5 * w * w) - 1.0).abs() < 1e-6, "energy drift {e}");
        }
    }

    #[test]
    fn outputs_hit_requested_times() {
        let times = [0.0, 0.1, 0.1, 0.35, 2.0];
        let tr = integrate_ode(|_, y: &Vec<f64>| vec![y[0]], vec![1.0], 0.0, &times, &OdeOptions::with_tol(1e-12)).unwrap();
        assert_eq!(tr.times, times.to_vec());
        for (t, s) in tr.times.iter().zip(&tr.states) {
            assert!((s[0] - t.exp()).abs() < 1e-9 * t.exp());
        }
    }

    #[test]
    fn time_dependent_rhs() {
        let tr = integrate_ode(|t, _y: &Vec<f64>| vec![t.cos()], vec![0.0], 0.0, &[3.0], &OdeOptions::with_tol(1e-12)).unwrap();
        assert!((tr.states[0][0] - 3f64.sin()).abs() < 1e-10);
    }

    #[test]
    fn complex_rotation() {
        let y0 = DVector::from_vec(vec![Complex64::new(1.0, 0.0)]);
        let tr = integrate_ode(|_, y: &DVector<Complex64>| y * Complex64::new(0.0, 2.0), y0, 0.0, &[1.5], &OdeOptions::with_tol(1e-12)).unwrap();
        assert!((tr.states[0][0] - Complex64::new(0.0, 3.0).exp()).norm() < 1e-9);
    }

    #[test]
    fn blow_up_reports_underflow() {
        let r = integrate_ode(|_, y: &Vec<f64>| vec![y[0] * y[0]], vec![1.0], 0.0, &[2.0], &OdeOptions::with_tol(1e-8));
        assert!(matches!(r, Err(Error::StepUnderflow { .. }) | Err(Error::TooManySteps { .. })));
    }

    #[test]
    fn rejects_bad_inputs() {
        let f = |_: f64, y: &Vec<f64>| y.clone();
        assert!(integrate_ode(f, vec![1.0], 0.0, &[1.0], &OdeOptions::with_tol(0.0)).is_err());
        assert!(integrate_ode(f, vec![1.0], 1.0, &[0.5], &OdeOptions::default()).is_err());
        assert!(integrate_ode(f, vec![1.0], 0.0, &[], &OdeOptions::default()).unwrap().states.is_empty());
    }
}
