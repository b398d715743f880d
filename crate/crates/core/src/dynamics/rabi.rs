//! Vacuum Rabi exchange between the qubit and one phonon after a diabatic
//! flux step into resonance.

use num_complex::Complex64;
use serde::Serialize;

use super::lindblad::{default_ode_options, evolve_driven, pure_state, CollapseOp, Drive, Evolution, LindbladModel, Waveform};
use super::{embed, oscillator_collapse, qubit};
use crate::error::{invalid, Result};
use crate::fluxonium::QubitPoint;
use crate::numerics::linalg::{annihilation, basis_ket, identity, kron, CMatrix, CVector};
use crate::numerics::ode::OdeOptions;
use crate::trace::SpectrumTrace;
use crate::TAU;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingForm {
    /// g_x(σ+b + σ−b†) in the frame rotating at ω_m; drive in the RWA.
    Exchange,
    /// Lab frame: g_Φ[φ_ij]⊗(b+b†) with the longitudinal and
    /// counter-rotating terms, drive Ω cos(ω_q t)σ_x.
    Full,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RabiSetup {
    pub qubit: QubitPoint,
    /// g_Φ/2π, Hz.
    pub g_phi: f64,
    /// ω_m/2π, Hz.
    pub omega_m: f64,
    pub phonons: usize,
    pub coupling: CouplingForm,
    /// Ω_d/2π, Hz; applied at the qubit frequency.
    pub drive: f64,
    pub gamma: f64,
    pub gamma_phi: f64,
    pub n_q: f64,
    pub gamma_m: f64,
    pub n_m: f64,
}

impl RabiSetup {
    /// g_x/2π = g_Φ|φ_ge|, Hz.
    pub fn g_x(&self) -> f64 {
        self.g_phi * self.qubit.phi_ge.norm()
    }

    /// (ω_q − ω_m)/2π, Hz.
    pub fn detuning(&self) -> f64 {
        self.qubit.omega_q - self.omega_m
    }

    pub fn dims(&self) -> Vec<usize> {
        vec![2, self.phonons]
    }

    pub fn model(&self) -> Result<(LindbladModel, Vec<Drive>)> {
        let m = self.phonons;
        if m < 2 {
            return Err(invalid("phonons", "need at least 2 Fock states"));
        }
        let dims = self.dims();
        let b = annihilation(m);
        let (h, drives) = match self.coupling {
            CouplingForm::Exchange => {
                let h = kron(&qubit::excited_projector(), &identity(m)) * Complex64::new(self.detuning(), 0.0)
                    + (kron(&qubit::sigma_plus(), &b) + kron(&qubit::sigma_minus(), &b.adjoint()))
                        * Complex64::new(self.g_x(), 0.0);
                let d = self.detuning();
                let amp = Complex64::new(0.5 * self.drive, 0.0);
                let drives = vec![
                    Drive { op: kron(&qubit::sigma_x(), &identity(m)) * amp, waveform: Waveform::Cosine { freq_hz: d, phase: 0.0 } },
                    Drive {
                        op: kron(&qubit::sigma_y(), &identity(m)) * amp,
                        waveform: Waveform::Cosine { freq_hz: d, phase: -std::f64::consts::FRAC_PI_2 },
                    },
                ];
                (h, drives)
            }
            CouplingForm::Full => {
                let q = &self.qubit;
                let phi = CMatrix::from_row_slice(
                    2,
                    2,
                    &[Complex64::new(q.phi_gg, 0.0), q.phi_ge, q.phi_ge.conj(), Complex64::new(q.phi_ee, 0.0)],
                );
                let h = kron(&qubit::excited_projector(), &identity(m)) * Complex64::new(q.omega_q, 0.0)
                    + kron(&identity(2), &(b.adjoint() * &b)) * Complex64::new(self.omega_m, 0.0)
                    + kron(&phi, &(&b + b.adjoint())) * Complex64::new(self.g_phi, 0.0);
                let drives = vec![Drive {
                    op: kron(&qubit::sigma_x(), &identity(m)) * Complex64::new(self.drive, 0.0),
                    waveform: Waveform::Cosine { freq_hz: q.omega_q, phase: 0.0 },
                }];
                (h, drives)
            }
        };
        let drives = if self.drive == 0.0 { Vec::new() } else { drives };
        let mut collapse: Vec<CollapseOp> = qubit::thermal_collapse(self.gamma, self.n_q, self.gamma_phi)
            .into_iter()
            .map(|c| CollapseOp::new(embed(&c.op, 0, &dims), c.rate))
            .collect();
        collapse.extend(
            oscillator_collapse(self.gamma_m, self.n_m, m)
                .into_iter()
                .map(|c| CollapseOp::new(embed(&c.op, 1, &dims), c.rate)),
        );
        Ok((LindbladModel::new(h, collapse, dims)?, drives))
    }

    /// |qubit, n⟩ in the product basis (qubit 0 = g, 1 = e).
    pub fn ket(&self, qubit_level: usize, n: usize) -> CVector {
        basis_ket(2 * self.phonons, qubit_level * self.phonons + n)
    }

    /// Time of the first P_e minimum, π/(2g_x) in angular units.
    pub fn exchange_time(&self) -> f64 {
        1.0 / (4.0 * self.g_x())
    }
}

#[derive(Debug, Clone)]
pub struct RabiRun {
    pub evolution: Evolution,
    pub excited_population: Vec<f64>,
}

pub fn default_rabi_options() -> OdeOptions {
    OdeOptions { rtol: 1e-10, atol: 1e-12, ..default_ode_options() }
}

/// Propagates |e,0⟩ and records P_e(t).
pub fn rabi_simulation(setup: &RabiSetup, times: &[f64], opts: &OdeOptions) -> Result<RabiRun> {
    let (model, drives) = setup.model()?;
    let rho0 = pure_state(&setup.ket(1, 0));
    let evolution = evolve_driven(&model, &drives, &rho0, times, opts)?;
    let pe = embed(&qubit::excited_projector(), 0, &setup.dims());
    let excited_population = evolution.expectation(&pe);
    Ok(RabiRun { evolution, excited_population })
}

impl RabiRun {
    pub fn to_trace(&self, column: &str) -> Result<SpectrumTrace> {
        SpectrumTrace::new("t", "s", self.evolution.times.clone())?.with_column(column, "1", self.excited_population.clone())
    }
}

/// First interior local minimum with parabolic refinement: (t, value).
pub fn first_minimum(times: &[f64], values: &[f64]) -> Option<(f64, f64)> {
    let i = (1..values.len().saturating_sub(1)).find(|&i| values[i] <= values[i - 1] && values[i] < values[i + 1])?;
    let (y0, y1, y2) = (values[i - 1], values[i], values[i + 1]);
    let h = times[i + 1] - times[i];
    let den = y0 - 2.0 * y1 + y2;
    if den <= 0.0 || (times[i] - times[i - 1] - h).abs() > 1e-9 * h {
        return Some((times[i], y1));
    }
    let dx = 0.5 * (y0 - y2) / den;
    Some((times[i] + dx * h, y1 - 0.25 * (y0 - y2) * dx))
}

/// max − min of `values` over samples with t ≤ t_max.
pub fn contrast(times: &[f64], values: &[f64], t_max: f64) -> f64 {
    let window = times.iter().zip(values).filter(|(t, _)| **t <= t_max).map(|(_, v)| *v);
    let (lo, hi) = window.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    hi - lo
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepProtocol {
    pub start: f64,
    pub end: f64,
    pub duration_s: f64,
    /// Sweep time times the fastest competing rate (angular); must be < 0.01.
    pub adiabaticity: f64,
    pub valid: bool,
    pub warning: Option<String>,
}

/// Diabatic flux step: the state is taken to be |e,0⟩ of the end point.
/// `rate` is in Φ_0/s; rates in Hz.
pub fn flux_sweep_protocol(start: f64, end: f64, rate: f64, gamma_m: f64, gamma_q: f64) -> Result<SweepProtocol> {
    if !(rate > 0.0) {
        return Err(invalid("sweep_rate", "must be > 0"));
    }
    let duration_s = (end - start).abs() / rate;
    let fastest = TAU * gamma_m.max(gamma_q);
    let adiabaticity = duration_s * fastest;
    let valid = adiabaticity < 0.01;
    let warning = (!valid).then(|| {
        format!("sweep takes {duration_s:.3e} s, not ≪ 1/max(γ_m, Γ_q); relaxation during the sweep is not modeled")
    });
    Ok(SweepProtocol { start, end, duration_s, adiabaticity, valid, warning })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resonant(coupling: CouplingForm) -> RabiSetup {
        RabiSetup {
            qubit: QubitPoint { phi_e: 0.5, omega_q: 6e6, phi_gg: 0.0, phi_ee: 0.0, phi_ge: Complex64::new(1.8, 0.0) },
            g_phi: 1e5,
            omega_m: 6e6,
            phonons: 3,
            coupling,
            drive: 0.0,
            gamma: 0.0,
            gamma_phi: 0.0,
            n_q: 0.0,
            gamma_m: 0.0,
            n_m: 0.0,
        }
    }

    #[test]
    fn lossless_exchange_follows_cosine() {
        let s = resonant(CouplingForm::Exchange);
        let g = TAU * s.g_x();
        let times: Vec<f64> = (0..=40).map(|k| k as f64 * 0.1e-6).collect();
        let run = rabi_simulation(&s, &times, &default_rabi_options()).unwrap();
        for (t, p) in times.iter().zip(&run.excited_population) {
            assert!((p - (g * t).cos().powi(2)).abs() < 1e-7);
        }
        assert!(run.evolution.diagnostics.physical());
    }

    #[test]
    fn detuned_contrast() {
        let mut s = resonant(CouplingForm::Exchange);
        s.qubit.omega_q += 150e3;
        let gx = s.g_x();
        let times: Vec<f64> = (0..=2000).map(|k| k as f64 * 2e-9).collect();
        let run = rabi_simulation(&s, &times, &default_rabi_options()).unwrap();
        let c = contrast(&times, &run.excited_population, 4e-6);
        let expect = gx * gx / (gx * gx + (0.5 * s.detuning()).powi(2));
        assert!((c / expect - 1.0).abs() < 0.01, "{c} vs {expect}");
    }

    #[test]
    fn full_model_is_close_to_exchange() {
        let s = resonant(CouplingForm::Full);
        let t = s.exchange_time();
        let times: Vec<f64> = (0..=200).map(|k| k as f64 * t / 100.0).collect();
        let run = rabi_simulation(&s, &times, &default_rabi_options()).unwrap();
        let (tmin, pmin) = first_minimum(&times, &run.excited_population).unwrap();
        assert!((tmin / t - 1.0).abs() < 0.01 && pmin < 0.01);
    }

    #[test]
    fn parabolic_minimum() {
        let times: Vec<f64> = (0..50).map(|k| k as f64 * 0.1).collect();
        let vals: Vec<f64> = times.iter().map(|t| (t - 2.03).powi(2) + 0.5).collect();
        let (t, v) = first_minimum(&times, &vals).unwrap();
        assert!((t - 2.03).abs() < 1e-12 && (v - 0.5).abs() < 1e-12);
    }

    #[test]
    fn sweep_validity() {
        let same = flux_sweep_protocol(0.3, 0.3, 1.0, 5.0, 100.0).unwrap();
        assert_eq!(same.duration_s, 0.0);
        assert!(same.valid);
        assert!(flux_sweep_protocol(0.0, 1e-6, 1.0, 5.0, 100.0).unwrap().valid);
        let slow = flux_sweep_protocol(0.0, 1e-2, 1.0, 5.0, 100.0).unwrap();
        assert!(!slow.valid && slow.warning.is_some());
    }
}
