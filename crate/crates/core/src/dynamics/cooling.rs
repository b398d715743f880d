//! Sideband cooling by a red-detuned, longitudinally coupled qubit.
//!
//! Qubit frame: `H_q = −(δ_q/2)σ_z + (ε_r/2)σ_x`, coupling `g_z σ_z (b + b†)`.
//! Tracing out the qubit gives phonon removal/addition rates from the
//! one-sided σ_z spectrum at ±ω_m; see [`cooling_rates`].

use num_complex::Complex64;
use serde::Serialize;

use super::lindblad::{build_liouvillian, general_eigenvalues, CollapseOp, LindbladModel};
use super::spectral::qubit_spectral_density;
use super::{embed, oscillator_collapse, qubit};
use crate::error::{invalid, Error, Result};
use crate::numerics::linalg::{annihilation, identity, kron, CMatrix};
use crate::numerics::ode::{integrate_ode, OdeOptions};
use crate::TAU;

/// Minimum ratio between the slowest qubit relaxation rate and g_z for the
/// adiabatic elimination to be trusted.
pub const ELIMINATION_MARGIN: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoolingSetup {
    /// ω_m/2π, Hz.
    pub omega_m: f64,
    /// g_z/2π, Hz.
    pub g_z: f64,
    /// Γ/2π, Hz.
    pub gamma: f64,
    /// Γ_Φ/2π, Hz.
    pub gamma_phi: f64,
    pub n_q: f64,
    /// Rabi frequency ε_r/2π of the cooling drive, Hz.
    pub drive: f64,
    /// δ_q/2π = (ω_d − ω_q)/2π, Hz.
    pub detuning: f64,
    /// γ_m/2π, Hz.
    pub gamma_m: f64,
    pub n_m: f64,
}

impl CoolingSetup {
    /// ε_r = ratio·ω_m and δ_q = −√(ω_m² − ε_r²), which puts the dressed
    /// splitting on the mechanical frequency.
    pub fn optimized(mut self, ratio: f64) -> Self {
        self.drive = ratio * self.omega_m;
        self.detuning = -(self.omega_m.powi(2) - self.drive.powi(2)).max(0.0).sqrt();
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("omega_m", self.omega_m),
            ("gamma", self.gamma),
            ("gamma_phi", self.gamma_phi),
            ("n_q", self.n_q),
            ("gamma_m", self.gamma_m),
            ("n_m", self.n_m),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(name, "must be finite and >= 0"));
            }
        }
        if !(self.omega_m > 0.0) {
            return Err(invalid("omega_m", "must be > 0"));
        }
        Ok(())
    }

    pub fn qubit_hamiltonian(&self) -> CMatrix {
        qubit::sigma_z() * Complex64::new(-0.5 * self.detuning, 0.0)
            + qubit::sigma_x() * Complex64::new(0.5 * self.drive, 0.0)
    }

    pub fn qubit_model(&self) -> Result<LindbladModel> {
        self.validate()?;
        LindbladModel::new(
            self.qubit_hamiltonian(),
            qubit::thermal_collapse(self.gamma, self.n_q, self.gamma_phi),
            vec![2],
        )
    }

    /// Qubit ⊗ oscillator on `m` Fock states, in the frame rotating with the
    /// drive, with longitudinal coupling g_z σ_z(b + b†).
    pub fn full_model(&self, m: usize) -> Result<LindbladModel> {
        self.validate()?;
        if m < 2 {
            return Err(invalid("fock_states", "need at least 2 Fock states"));
        }
        let dims = vec![2, m];
        let b = annihilation(m);
        let n_op = b.adjoint() * &b;
        let x = &b + b.adjoint();
        let h = kron(&self.qubit_hamiltonian(), &identity(m))
            + kron(&identity(2), &n_op) * Complex64::new(self.omega_m, 0.0)
            + kron(&qubit::sigma_z(), &x) * Complex64::new(self.g_z, 0.0);
        let mut collapse: Vec<CollapseOp> = qubit::thermal_collapse(self.gamma, self.n_q, self.gamma_phi)
            .into_iter()
            .map(|c| CollapseOp::new(embed(&c.op, 0, &dims), c.rate))
            .collect();
        collapse.extend(
            oscillator_collapse(self.gamma_m, self.n_m, m)
                .into_iter()
                .map(|c| CollapseOp::new(embed(&c.op, 1, &dims), c.rate)),
        );
        LindbladModel::new(h, collapse, dims)
    }

    /// Slowest non-zero relaxation rate of the driven qubit, Hz.
    pub fn qubit_relaxation_floor(&self) -> Result<f64> {
        relaxation_floor(&self.qubit_model()?)
    }
}

fn relaxation_floor(model: &LindbladModel) -> Result<f64> {
    let l = build_liouvillian(model)?;
    let mut rates: Vec<f64> = general_eigenvalues(&l).iter().map(|z| -z.re / TAU).collect();
    rates.sort_by(f64::total_cmp);
    Ok(rates.get(1).cloned().unwrap_or(0.0))
}

#[derive(Debug, Clone, Serialize)]
pub struct CoolingReport {
    /// Γ_q^−/2π (phonon removal), Hz.
    pub gamma_minus: f64,
    /// Γ_q^+/2π (phonon addition), Hz.
    pub gamma_plus: f64,
    /// δω_m/2π, Hz.
    pub delta_omega_m: f64,
    pub n_steady: Option<f64>,
    pub heating: bool,
    pub gamma_m: f64,
    pub n_m: f64,
    pub re_s_plus: f64,
    pub re_s_minus: f64,
    /// Slowest qubit relaxation rate divided by g_z.
    pub elimination_ratio: f64,
}

impl CoolingReport {
    /// Net relaxation rate (Γ^− − Γ^+ + γ_m)/2π, Hz.
    pub fn relaxation_rate(&self) -> f64 {
        self.gamma_minus - self.gamma_plus + self.gamma_m
    }

    /// Closed-form n(t) of the rate equation, t in s.
    pub fn occupation(&self, n0: f64, t: f64) -> f64 {
        let k = TAU * self.relaxation_rate();
        let src = TAU * (self.gamma_plus + self.gamma_m * self.n_m);
        if k == 0.0 {
            return n0 + src * t;
        }
        let n_inf = src / k;
        n_inf + (n0 - n_inf) * (-k * t).exp()
    }
}

/// Rates from S(±ω_m) of the two-level `model`.
///
/// `Γ^± = 2·g_z²·Re S(±ω_m)` (angular), `δω_m = g_z²[Im S(ω_m) − Im S(−ω_m)]`.
pub fn cooling_rates(model: &LindbladModel, g_z: f64, omega_m: f64, gamma_m: f64, n_m: f64) -> Result<CoolingReport> {
    let s = qubit_spectral_density(model, &[-omega_m, omega_m])?;
    let (s_minus, s_plus) = (s.values[0], s.values[1]);
    let gz = TAU * g_z;
    let to_hz = 1.0 / TAU;
    let gamma_minus = (2.0 * gz * gz * s_plus.re * to_hz).max(0.0);
    let gamma_plus = (2.0 * gz * gz * s_minus.re * to_hz).max(0.0);
    let delta_omega_m = gz * gz * (s_plus.im - s_minus.im) * to_hz;
    let denom = gamma_minus - gamma_plus + gamma_m;
    let heating = denom <= 0.0;
    let n_steady = (!heating).then(|| (gamma_plus + gamma_m * n_m) / denom);

    let floor = relaxation_floor(model)?;
    let elimination_ratio = if g_z == 0.0 { f64::INFINITY } else { floor / g_z.abs() };
    if elimination_ratio < ELIMINATION_MARGIN || floor < 100.0 * gamma_m {
        return Err(Error::InvalidRegime(format!(
            "adiabatic elimination needs qubit relaxation ≫ g_z, γ_m (floor {floor:.3e} Hz, g_z {g_z:.3e} Hz, γ_m {gamma_m:.3e} Hz)"
        )));
    }
    Ok(CoolingReport {
        gamma_minus,
        gamma_plus,
        delta_omega_m,
        n_steady,
        heating,
        gamma_m,
        n_m,
        re_s_plus: s_plus.re,
        re_s_minus: s_minus.re,
        elimination_ratio,
    })
}

/// Integrates ṅ = −(Γ^− − Γ^+ + γ_m)n + Γ^+ + γ_m n_m (angular rates).
pub fn cooling_trajectory(report: &CoolingReport, n0: f64, times: &[f64]) -> Result<Vec<f64>> {
    let k = TAU * report.relaxation_rate();
    let src = TAU * (report.gamma_plus + report.gamma_m * report.n_m);
    let tr = integrate_ode(
        |_, y: &Vec<f64>| vec![-k * y[0] + src],
        vec![n0],
        0.0,
        times,
        &OdeOptions { rtol: 1e-12, atol: 1e-12, ..Default::default() },
    )?;
    Ok(tr.states.into_iter().map(|s| s[0]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> CoolingSetup {
        CoolingSetup {
            omega_m: 6e6,
            g_z: 315e3,
            gamma: 2e6,
            gamma_phi: 0.9e6,
            n_q: 0.0,
            drive: 0.0,
            detuning: 0.0,
            gamma_m: 5.0,
            n_m: 30.0,
        }
        .optimized(0.89)
    }

    #[test]
    fn optimized_drive_cools() {
        let s = setup();
        let r = cooling_rates(&s.qubit_model().unwrap(), s.g_z, s.omega_m, s.gamma_m, s.n_m).unwrap();
        assert!(r.gamma_minus > r.gamma_plus);
        assert!(r.n_steady.unwrap() < 1.0);
    }

    #[test]
    fn no_coupling_leaves_bath_occupation() {
        let s = CoolingSetup { g_z: 0.0, ..setup() };
        let r = cooling_rates(&s.qubit_model().unwrap(), 0.0, s.omega_m, s.gamma_m, s.n_m).unwrap();
        assert_eq!((r.gamma_minus, r.gamma_plus), (0.0, 0.0));
        assert!((r.n_steady.unwrap() - 30.0).abs() < 1e-12);
        let times = [0.0, 0.01, 0.05];
        let n = cooling_trajectory(&r, 0.0, &times).unwrap();
        for (t, v) in times.iter().zip(n) {
            assert!((v - 30.0 * (1.0 - (-TAU * 5.0 * t).exp())).abs() < 1e-8);
        }
    }

    #[test]
    fn trajectory_matches_closed_form() {
        let s = setup();
        let r = cooling_rates(&s.qubit_model().unwrap(), s.g_z, s.omega_m, s.gamma_m, s.n_m).unwrap();
        let times: Vec<f64> = (0..50).map(|k| k as f64 * 2e-7).collect();
        let n = cooling_trajectory(&r, 30.0, &times).unwrap();
        for (t, v) in times.iter().zip(&n) {
            assert!((v - r.occupation(30.0, *t)).abs() < 1e-8);
        }
        assert!(n.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn zero_drive_detailed_balance() {
        let s = CoolingSetup { drive: 0.0, detuning: -6e6, n_q: 0.5, gamma_phi: 0.0, ..setup() };
        let r = cooling_rates(&s.qubit_model().unwrap(), s.g_z, s.omega_m, s.gamma_m, s.n_m).unwrap();
        // undriven σ_z fluctuations are a zero-frequency Lorentzian: symmetric in ±ω
        assert!((r.gamma_plus / r.gamma_minus - 1.0).abs() < 0.01);
    }

    #[test]
    fn strong_coupling_is_rejected() {
        let s = CoolingSetup { g_z: 5e6, ..setup() };
        assert!(matches!(
            cooling_rates(&s.qubit_model().unwrap(), s.g_z, s.omega_m, s.gamma_m, s.n_m),
            Err(Error::InvalidRegime(_))
        ));
    }
}
