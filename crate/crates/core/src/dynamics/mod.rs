//! Open-system dynamics: Liouvillian, propagation, steady states,
//! fluctuation spectra, sideband cooling and Rabi exchange.

pub mod cooling;
pub mod lindblad;
pub mod rabi;
pub mod spectral;

pub use cooling::{cooling_rates, cooling_trajectory, CoolingReport, CoolingSetup};
pub use lindblad::{
    build_liouvillian, evolve, evolve_driven, steady_state, CollapseOp, Drive, Evolution, LindbladModel,
    StateDiagnostics, Waveform,
};
pub use rabi::{flux_sweep_protocol, rabi_simulation, CouplingForm, RabiRun, RabiSetup, SweepProtocol};
pub use spectral::{correlation_spectrum, qubit_spectral_density, SpectralDensity};

use crate::numerics::linalg::{identity, kron, ket_bra, CMatrix};

/// Qubit operators in the (|g⟩, |e⟩) basis.
pub mod qubit {
    use super::*;

    /// |g⟩⟨e|
    pub fn sigma_minus() -> CMatrix {
        ket_bra(2, 0, 1)
    }

    pub fn sigma_plus() -> CMatrix {
        ket_bra(2, 1, 0)
    }

    /// |e⟩⟨e| − |g⟩⟨g|
    pub fn sigma_z() -> CMatrix {
        ket_bra(2, 1, 1) - ket_bra(2, 0, 0)
    }

    pub fn sigma_x() -> CMatrix {
        sigma_minus() + sigma_plus()
    }

    /// −i|e⟩⟨g| + i|g⟩⟨e|
    pub fn sigma_y() -> CMatrix {
        (sigma_plus() - sigma_minus()) * num_complex::Complex64::new(0.0, -1.0)
    }

    pub fn excited_projector() -> CMatrix {
        ket_bra(2, 1, 1)
    }

    /// Thermal relaxation Γ(n+1)D[σ−] + Γn D[σ+] and pure dephasing.
    ///
    /// Dephasing enters as (Γ_Φ/4)·D[σ_z], i.e. Γ_Φ·D[|e⟩⟨e|], so that
    /// coherences decay at Γ_q/2 with Γ_q = Γ(2n+1) + Γ_Φ.
    pub fn thermal_collapse(gamma: f64, n_q: f64, gamma_phi: f64) -> Vec<super::CollapseOp> {
        let mut ops = Vec::new();
        if gamma > 0.0 {
            ops.push(super::CollapseOp::new(sigma_minus(), gamma * (n_q + 1.0)));
            if n_q > 0.0 {
                ops.push(super::CollapseOp::new(sigma_plus(), gamma * n_q));
            }
        }
        if gamma_phi > 0.0 {
            ops.push(super::CollapseOp::new(sigma_z(), gamma_phi / 4.0));
        }
        ops
    }
}

/// Operator `op` acting on factor `site` of a product space with `dims`.
pub fn embed(op: &CMatrix, site: usize, dims: &[usize]) -> CMatrix {
    let mut out = CMatrix::identity(1, 1);
    for (k, &d) in dims.iter().enumerate() {
        let factor = if k == site { op.clone() } else { identity(d) };
        out = kron(&out, &factor);
    }
    out
}

/// Damped oscillator: γ(n+1)D[b] + γn D[b†] on `m` Fock states.
pub fn oscillator_collapse(gamma_m: f64, n_m: f64, m: usize) -> Vec<CollapseOp> {
    let b = crate::numerics::linalg::annihilation(m);
    let mut ops = Vec::new();
    if gamma_m > 0.0 {
        ops.push(CollapseOp::new(b.clone(), gamma_m * (n_m + 1.0)));
        if n_m > 0.0 {
            ops.push(CollapseOp::new(b.adjoint(), gamma_m * n_m));
        }
    }
    ops
}
