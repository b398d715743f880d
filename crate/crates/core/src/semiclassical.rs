//! Mean-field pump–probe response of the driven qubit coupled to a classical
//! mechanical mode.
//!
//! Longitudinal regime: `H_int = (φ₊/2 − (φ₋/2)σ_z) Q` with
//! `φ∓ = √2 g_Φ (φ_gg ∓ φ_ee)` and `[Q, P] = i`. Equations (angular units,
//! Δ = ω_d − ω_q, δ = ω_p − ω_d):
//!
//! ```text
//! Q̇  = ωP
//! Ṗ  = −ωQ − γ_m P − (φ₊ − φ₋σ_z)/2
//! σ̇₋ = (iΔ − Γ_q/2)σ₋ + iφ₋Qσ₋ + iε_d σ_z + iε_p σ_z e^{−iδt}
//! σ̇₊ = conjugate of the above
//! σ̇_z = −Γ(2n_q+1)σ_z − Γ + 2iε_d(σ₋ − σ₊) + 2iε_p(e^{iδt}σ₋ − e^{−iδt}σ₊)
//! ```

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::lindblad::general_eigenvalues;
use crate::error::{invalid, Error, Result};
use crate::numerics::linalg::{solve_linear, CMatrix, CVector};
use crate::numerics::ode::{integrate_ode, OdeOptions};
use crate::trace::SpectrumTrace;
use crate::TAU;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// All frequencies in Hz (value/2π).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PumpProbeConfig {
    pub omega_m: f64,
    pub gamma_m: f64,
    pub gamma: f64,
    pub gamma_phi: f64,
    pub n_q: f64,
    pub g_phi: f64,
    pub phi_gg: f64,
    pub phi_ee: f64,
    /// ε_d
    pub drive: f64,
    /// ε_p
    pub probe: f64,
    /// Δ_q = ω_d − ω_q
    pub detuning: f64,
}

impl PumpProbeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega_m > 0.0) {
            return Err(invalid("omega_m", "must be > 0"));
        }
        for (name, v) in [("gamma_m", self.gamma_m), ("gamma", self.gamma), ("gamma_phi", self.gamma_phi), ("n_q", self.n_q)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(name, "must be finite and >= 0"));
            }
        }
        if !(self.gamma > 0.0) {
            return Err(invalid("gamma", "qubit relaxation must be > 0 for a steady state"));
        }
        Ok(())
    }

    pub fn phi_minus(&self) -> f64 {
        2f64.sqrt() * self.g_phi * (self.phi_gg - self.phi_ee)
    }

    pub fn phi_plus(&self) -> f64 {
        2f64.sqrt() * self.g_phi * (self.phi_gg + self.phi_ee)
    }

    /// Γ(2n_q+1) + Γ_Φ, Hz.
    pub fn gamma_q(&self) -> f64 {
        self.gamma * (2.0 * self.n_q + 1.0) + self.gamma_phi
    }

    /// ε_d, ε_p below Γ_q/10.
    pub fn weak_drive(&self) -> bool {
        self.drive.abs().max(self.probe.abs()) < 0.1 * self.gamma_q()
    }

    fn angular(&self) -> Angular {
        Angular {
            w: TAU * self.omega_m,
            gm: TAU * self.gamma_m,
            g1: TAU * self.gamma * (2.0 * self.n_q + 1.0),
            g: TAU * self.gamma,
            gq: TAU * self.gamma_q(),
            pm: TAU * self.phi_minus(),
            pp: TAU * self.phi_plus(),
            ed: TAU * self.drive,
            ep: TAU * self.probe,
            dq: TAU * self.detuning,
        }
    }
}

#[derive(Clone, Copy)]
struct Angular {
    w: f64,
    gm: f64,
    g1: f64,
    g: f64,
    gq: f64,
    pm: f64,
    pp: f64,
    ed: f64,
    ep: f64,
    dq: f64,
}

/// State vector layout: [Q, P, σ₋, σ₊, σ_z].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanFieldState {
    pub q: Complex64,
    pub p: Complex64,
    pub sm: Complex64,
    pub sp: Complex64,
    pub sz: Complex64,
}

impl MeanFieldState {
    pub fn to_vector(&self) -> CVector {
        CVector::from_vec(vec![self.q, self.p, self.sm, self.sp, self.sz])
    }

    pub fn from_vector(v: &CVector) -> Self {
        Self { q: v[0], p: v[1], sm: v[2], sp: v[3], sz: v[4] }
    }
}

/// Right-hand side with probe detuning `delta_hz` (δ = ω_p − ω_d); time in s.
pub fn mean_field_rhs(y: &CVector, cfg: &PumpProbeConfig, delta_hz: f64, t: f64) -> CVector {
    rhs_angular(y, &cfg.angular(), TAU * delta_hz, t)
}

fn rhs_angular(y: &CVector, a: &Angular, delta: f64, t: f64) -> CVector {
    let (q, p, sm, sp, sz) = (y[0], y[1], y[2], y[3], y[4]);
    let ph = Complex64::from_polar(1.0, -delta * t);
    let phc = ph.conj();
    CVector::from_vec(vec![
        p * a.w,
        -q * a.w - p * a.gm - (re(a.pp) - sz * a.pm) * 0.5,
        (I * a.dq - a.gq / 2.0) * sm + I * a.pm * q * sm + I * a.ed * sz + I * a.ep * sz * ph,
        (-I * a.dq - a.gq / 2.0) * sp - I * a.pm * q * sp - I * a.ed * sz - I * a.ep * sz * phc,
        -sz * a.g1 - a.g + 2.0 * I * a.ed * (sm - sp) + 2.0 * I * a.ep * (phc * sm - ph * sp),
    ])
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ZeroOrder {
    pub state: MeanFieldState,
    pub iterations: usize,
    /// max |ẏ| / (ω + Γ_q) at the fixed point (ε_p = 0).
    pub residual: f64,
    pub from_integration: bool,
}

impl ZeroOrder {
    /// Plotting approximation: σ_z = −1 and Δ_q + φ₋Q₀ = −ω.
    pub fn plotting_approximation(cfg: &PumpProbeConfig) -> Self {
        let a = cfg.angular();
        let sz = -1.0;
        let q = if a.pm != 0.0 { (-a.w - a.dq) / a.pm } else { 0.0 };
        let d = -a.w;
        let sm = I * a.ed * sz / (re(a.gq / 2.0) - I * d);
        let state = MeanFieldState { q: re(q), p: re(0.0), sm, sp: sm.conj(), sz: re(sz) };
        Self { state, iterations: 0, residual: f64::NAN, from_integration: false }
    }

    fn effective_detuning(&self, cfg: &PumpProbeConfig) -> f64 {
        let a = cfg.angular();
        a.dq + a.pm * self.state.q.re
    }
}

fn fixed_point_residual(cfg: &PumpProbeConfig, s: &MeanFieldState) -> f64 {
    let a = Angular { ep: 0.0, ..cfg.angular() };
    let d = rhs_angular(&s.to_vector(), &a, 0.0, 0.0);
    d.iter().map(|z| z.norm()).fold(0.0, f64::max) / (a.w + a.gq)
}

/// Self-consistent zero-order solution by damped fixed-point iteration on
/// (Q₀, σ_z⁰); falls back to time integration if it stalls.
pub fn steady_state_zero_order(cfg: &PumpProbeConfig) -> Result<ZeroOrder> {
    cfg.validate()?;
    let a = cfg.angular();
    let eval = |sz: f64| -> (f64, f64, Complex64) {
        let q = -(a.pp - a.pm * sz) / (2.0 * a.w);
        let d = a.dq + a.pm * q;
        let eta = d * d + a.gq * a.gq / 4.0;
        let den = 2.0 * a.ed * a.ed * a.gq + a.g1 * eta;
        let sz_new = -a.g * eta / den;
        let sm = -I * a.ed * a.g * Complex64::new(a.gq / 2.0, d) / den;
        (q, sz_new, sm)
    };
    let mut sz = -a.g / a.g1;
    let alpha = 0.7;
    let mut change = f64::INFINITY;
    for it in 1..=10_000 {
        let (_, sz_new, _) = eval(sz);
        let next = (1.0 - alpha) * sz + alpha * sz_new;
        change = (next - sz).abs();
        sz = next;
        if change < 1e-12 {
            let (q, sz_fin, sm) = eval(sz);
            let state = MeanFieldState { q: re(q), p: re(0.0), sm, sp: sm.conj(), sz: re(sz_fin) };
            let residual = fixed_point_residual(cfg, &state);
            if residual < 1e-10 {
                return Ok(ZeroOrder { state, iterations: it, residual, from_integration: false });
            }
        }
    }
    integrate_zero_order(cfg).map_err(|_| Error::FixedPoint { iterations: 10_000, change })
}

fn integrate_zero_order(cfg: &PumpProbeConfig) -> Result<ZeroOrder> {
    let a = Angular { ep: 0.0, ..cfg.angular() };
    let slow = a.gm.min(a.g1).max(1e-3);
    let start = MeanFieldState { q: re(0.0), p: re(0.0), sm: re(0.0), sp: re(0.0), sz: re(-a.g / a.g1) };
    let tr = integrate_ode(
        |t, y: &CVector| rhs_angular(y, &a, 0.0, t),
        start.to_vector(),
        0.0,
        &[40.0 / slow],
        &OdeOptions { rtol: 1e-11, atol: 1e-13, max_steps: 5_000_000, ..Default::default() },
    )?;
    let state = MeanFieldState::from_vector(&tr.states[0]);
    let residual = fixed_point_residual(cfg, &state);
    Ok(ZeroOrder { state, iterations: 0, residual, from_integration: true })
}

/// e^{−iδt} sideband amplitudes.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Sidebands {
    pub delta_hz: f64,
    pub state: MeanFieldState,
    pub relative_residual: f64,
    pub condition: f64,
}

/// Linear system for the five e^{−iδt} components at one probe detuning.
pub fn sideband_matrix(cfg: &PumpProbeConfig, zero: &ZeroOrder, delta_hz: f64) -> (CMatrix, CVector) {
    let a = cfg.angular();
    let dl = TAU * delta_hz;
    let s0 = &zero.state;
    let d = zero.effective_detuning(cfg);
    let z = re(0.0);
    #[rustfmt::skip]
    let m = CMatrix::from_row_slice(5, 5, &[
        I * dl, re(a.w), z, z, z,
        re(-a.w), re(-a.gm) + I * dl, z, z, re(a.pm / 2.0),
        I * a.pm * s0.sm, z, I * d - a.gq / 2.0 + I * dl, z, I * a.ed,
        -I * a.pm * s0.sp, z, z, -I * d - a.gq / 2.0 + I * dl, -I * a.ed,
        z, z, 2.0 * I * a.ed, -2.0 * I * a.ed, re(-a.g1) + I * dl,
    ]);
    let b = CVector::from_vec(vec![z, z, -I * a.ep * s0.sz, z, 2.0 * I * a.ep * s0.sp]);
    (m, b)
}

pub fn sideband_response(cfg: &PumpProbeConfig, zero: &ZeroOrder, delta_hz: f64) -> Result<Sidebands> {
    let (m, b) = sideband_matrix(cfg, zero, delta_hz);
    let sol = solve_linear(&m, &b).map_err(|e| match e {
        Error::Singular { .. } => Error::SingularResolvent { freq_hz: delta_hz },
        other => other,
    })?;
    Ok(Sidebands {
        delta_hz,
        state: MeanFieldState::from_vector(&sol.x),
        relative_residual: sol.relative_residual,
        condition: sol.condition,
    })
}

/// |σ₋⁻| over the δ_p grid, self-consistent and with the plotting
/// approximation.
pub fn probe_response(cfg: &PumpProbeConfig, grid: &[f64]) -> Result<SpectrumTrace> {
    let zero = steady_state_zero_order(cfg)?;
    let approx = ZeroOrder::plotting_approximation(cfg);
    let rows: Vec<(Complex64, f64, f64)> = grid
        .par_iter()
        .map(|&d| {
            let s = sideband_response(cfg, &zero, d)?;
            let a = sideband_response(cfg, &approx, d)?;
            Ok((s.state.sm, a.state.sm.norm(), s.relative_residual))
        })
        .collect::<Result<_>>()?;
    let mut t = SpectrumTrace::new("delta_p", "Hz", grid.to_vec())?
        .with_column("amplitude", "1", rows.iter().map(|r| r.0.norm()).collect())?
        .with_column("re_sigma_minus", "1", rows.iter().map(|r| r.0.re).collect())?
        .with_column("im_sigma_minus", "1", rows.iter().map(|r| r.0.im).collect())?
        .with_column("amplitude_approx", "1", rows.iter().map(|r| r.1).collect())?;
    t.set_meta("q0", zero.state.q.re);
    t.set_meta("sigma_z0", zero.state.sz.re);
    t.set_meta("max_solve_residual", rows.iter().map(|r| r.2).fold(0.0, f64::max));
    Ok(t)
}

/// Jacobian of the ε_p = 0 dynamics at the fixed point (angular units).
pub fn jacobian(cfg: &PumpProbeConfig, zero: &ZeroOrder) -> CMatrix {
    sideband_matrix(cfg, zero, 0.0).0
}

/// Linewidth (Hz) of the mechanical-like eigenmode of the linearized
/// dynamics: γ_m plus the optomechanical back-action.
pub fn effective_mechanical_linewidth(cfg: &PumpProbeConfig, zero: &ZeroOrder) -> f64 {
    let w = TAU * cfg.omega_m;
    let ev = general_eigenvalues(&jacobian(cfg, zero));
    let mech = ev
        .iter()
        .min_by(|x, y| (x.im.abs() - w).abs().total_cmp(&(y.im.abs() - w).abs()).then(x.re.abs().total_cmp(&y.re.abs())))
        .cloned()
        .unwrap_or_default();
    -2.0 * mech.re / TAU
}

/// Probe response by direct integration: starts at the zero-order fixed
/// point, lets transients settle for `settle` s, then demodulates
/// σ₋(t) − σ₋⁰ at e^{−iδt} with a Hann window of length `window` s.
pub fn integrate_probe_response(cfg: &PumpProbeConfig, zero: &ZeroOrder, delta_hz: f64, settle: f64, window: f64) -> Result<Complex64> {
    let a = cfg.angular();
    let dl = TAU * delta_hz;
    let sm0 = zero.state.sm;
    let mut y0 = zero.state.to_vector().as_slice().to_vec();
    y0.push(re(0.0));
    let y0 = CVector::from_vec(y0);
    let rhs = |t: f64, y: &CVector| {
        let core = CVector::from_column_slice(&y.as_slice()[..5]);
        let d = rhs_angular(&core, &a, dl, t);
        let mut out: Vec<Complex64> = d.as_slice().to_vec();
        let acc = if t > settle {
            let x = (t - settle) / window;
            let w = (std::f64::consts::PI * x).sin().powi(2);
            (y[2] - sm0) * Complex64::from_polar(w, dl * t)
        } else {
            re(0.0)
        };
        out.push(acc);
        CVector::from_vec(out)
    };
    let tr = integrate_ode(
        rhs,
        y0,
        0.0,
        &[settle, settle + window],
        &OdeOptions { rtol: 1e-10, atol: 1e-14, ..Default::default() },
    )?;
    let acc = tr.states[1][5] - tr.states[0][5];
    Ok(acc / (0.5 * window))
}

/// Transverse (exchange-coupled) probe response at fixed Γ_q.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransverseConfig {
    pub omega_q: f64,
    pub omega_m: f64,
    pub g_x: f64,
    /// Coherence decay Γ_q entering the response, Hz.
    pub gamma_q: f64,
    /// Γ, used for σ_z relaxation Γ(2n_q+1) in the mean-field oracle.
    pub gamma: f64,
    pub n_q: f64,
    pub gamma_m: f64,
    /// ε'_p
    pub probe: f64,
}

impl TransverseConfig {
    pub fn sigma_z0(&self) -> f64 {
        -1.0 / (2.0 * self.n_q + 1.0)
    }

    pub fn weak_probe(&self) -> bool {
        self.probe.abs() < 0.1 * self.gamma_q
    }

    /// Complex σ₋ at probe frequency `omega_p` (Hz), linear response.
    pub fn coherence(&self, omega_p: f64) -> Complex64 {
        let sz = self.sigma_z0();
        let g = TAU * self.g_x;
        let mech = Complex64::new(TAU * self.gamma_m / 2.0, TAU * (self.omega_m - omega_p));
        let den = Complex64::new(TAU * self.gamma_q / 2.0, TAU * (self.omega_q - omega_p)) + g * g * sz.abs() / mech;
        I * TAU * self.probe * sz / den
    }
}

/// |σ₋| versus δ = ω_p − ω_q.
pub fn transverse_response(cfg: &TransverseConfig, grid: &[f64]) -> Result<SpectrumTrace> {
    let amp: Vec<f64> = grid.iter().map(|d| cfg.coherence(cfg.omega_q + d).norm()).collect();
    let mut t = SpectrumTrace::new("delta_p", "Hz", grid.to_vec())?.with_column("amplitude", "1", amp)?;
    t.set_meta("n_q", cfg.n_q);
    t.set_meta("g_x_hz", cfg.g_x);
    Ok(t)
}

/// Steady σ₋ from integrating the transverse mean-field equations in the
/// frame of the probe, started from (0, 0, σ_z⁰) and run for `t_end` s.
pub fn integrate_transverse(cfg: &TransverseConfig, omega_p: f64, t_end: f64) -> Result<Complex64> {
    let dq = TAU * (cfg.omega_q - omega_p);
    let dm = TAU * (cfg.omega_m - omega_p);
    let g = TAU * cfg.g_x;
    let gq = TAU * cfg.gamma_q;
    let gm = TAU * cfg.gamma_m;
    let g1 = TAU * cfg.gamma * (2.0 * cfg.n_q + 1.0);
    let e = TAU * cfg.probe;
    let sz0 = cfg.sigma_z0();
    let rhs = |_t: f64, y: &CVector| {
        let (sm, b, sz) = (y[0], y[1], y[2]);
        let sp = sm.conj();
        CVector::from_vec(vec![
            Complex64::new(-gq / 2.0, -dq) * sm + I * g * b * sz + I * e * sz,
            Complex64::new(-gm / 2.0, -dm) * b - I * g * sm,
            -(sz - sz0) * g1 + 2.0 * I * g * (b.conj() * sm - b * sp) + 2.0 * I * e * (sm - sp),
        ])
    };
    let y0 = CVector::from_vec(vec![re(0.0), re(0.0), re(sz0)]);
    let tr = integrate_ode(rhs, y0, 0.0, &[t_end], &OdeOptions { rtol: 1e-10, atol: 1e-20, ..Default::default() })?;
    Ok(tr.states[0][0])
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn fig3a() -> PumpProbeConfig {
        PumpProbeConfig {
            omega_m: 4e6,
            gamma_m: 5.0,
            gamma: 2e6,
            gamma_phi: 0.9e6,
            n_q: 0.0,
            g_phi: 60e3,
            phi_gg: -1.80059,
            phi_ee: 4.19965,
            drive: 5e3,
            probe: 5e3,
            detuning: -4e6,
        }
    }

    #[test]
    fn drive_free_fixed_point() {
        let cfg = PumpProbeConfig { drive: 0.0, n_q: 0.7, ..fig3a() };
        let z = steady_state_zero_order(&cfg).unwrap();
        let sz = -1.0 / (2.0 * 0.7 + 1.0);
        assert!((z.state.sz.re - sz).abs() < 1e-14);
        assert_eq!(z.state.sm, re(0.0));
        let q0 = -(cfg.phi_plus() - cfg.phi_minus() * sz) / (2.0 * cfg.omega_m);
        assert!((z.state.q.re - q0).abs() < 1e-14);
    }

    #[test]
    fn weak_drive_sigma_z_near_minus_one() {
        let z = steady_state_zero_order(&fig3a()).unwrap();
        assert!((z.state.sz.re + 1.0).abs() < 1e-4);
        assert!(z.residual < 1e-10);
        assert!(fig3a().weak_drive());
    }

    #[test]
    fn zero_order_even_in_drive() {
        let a = steady_state_zero_order(&fig3a()).unwrap();
        let b = steady_state_zero_order(&PumpProbeConfig { drive: -5e3, ..fig3a() }).unwrap();
        assert!((a.state.sz - b.state.sz).norm() < 1e-15);
        assert!((a.state.q - b.state.q).norm() < 1e-15);
    }

    #[test]
    fn fixed_point_matches_long_integration() {
        // γ_m does not enter the fixed point; a large value shortens the run
        let cfg = PumpProbeConfig { gamma_m: 200e3, drive: 300e3, ..fig3a() };
        let z = steady_state_zero_order(&cfg).unwrap();
        let long = integrate_zero_order(&cfg).unwrap();
        let d = z.state.to_vector() - long.state.to_vector();
        assert!(d.iter().all(|x| x.norm() < 1e-8), "{d}");
    }

    #[test]
    fn conjugation_symmetry_along_trajectory() {
        let cfg = fig3a();
        let z = steady_state_zero_order(&cfg).unwrap();
        let a = cfg.angular();
        let times: Vec<f64> = (1..=20).map(|k| k as f64 * 1e-6).collect();
        let tr = integrate_ode(|t, y: &CVector| rhs_angular(y, &a, TAU * 3.9e6, t), z.state.to_vector(), 0.0, &times, &OdeOptions::with_tol(1e-12)).unwrap();
        for s in &tr.states {
            assert!((s[2] - s[3].conj()).norm() < 1e-10);
        }
    }

    #[test]
    fn no_probe_no_sidebands() {
        let cfg = PumpProbeConfig { probe: 0.0, ..fig3a() };
        let z = steady_state_zero_order(&cfg).unwrap();
        let s = sideband_response(&cfg, &z, 3.9e6).unwrap();
        assert_eq!(s.state.to_vector().norm(), 0.0);
    }

    #[test]
    fn probe_linearity() {
        let cfg = fig3a();
        let z = steady_state_zero_order(&cfg).unwrap();
        let amp = |p: f64| sideband_response(&PumpProbeConfig { probe: p, ..cfg }, &z, 3.99e6).unwrap().state.sm.norm();
        assert!((amp(10e3) / amp(5e3) - 2.0).abs() < 1e-8);
        let slope = (amp(500.0).ln() - amp(50.0).ln()) / 10f64.ln();
        assert!((slope - 1.0).abs() < 1e-3);
    }

    #[test]
    fn transverse_without_coupling_is_lorentzian() {
        let cfg = TransverseConfig { omega_q: 4e6, omega_m: 4e6, g_x: 0.0, gamma_q: 2e3, gamma: 1e3, n_q: 0.0, gamma_m: 5.0, probe: 1.0 };
        let peak = cfg.coherence(4e6).norm();
        let half = cfg.coherence(4e6 + 1e3).norm();
        assert!((peak / half - 2f64.sqrt()).abs() < 1e-12);
    }
}
