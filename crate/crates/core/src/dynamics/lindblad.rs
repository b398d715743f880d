//! Lindblad master equation with column-stacking vectorization.
//!
//! `dρ/dt = −i2π[H, ρ] + Σ 2π·r_k (A_k ρ A_k† − ½{A_k†A_k, ρ})`
//! with H and r_k in Hz.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::linalg::{
    ensure_hermitian, hermitian_eig, hermiticity_defect, identity, kron, max_abs, solve_linear, trace, unvectorize,
    vectorize, CMatrix, CVector,
};
use crate::numerics::ode::{integrate_ode, OdeOptions};
use crate::TAU;

#[derive(Debug, Clone)]
pub struct CollapseOp {
    pub op: CMatrix,
    /// Rate in Hz (Γ/2π).
    pub rate: f64,
}

impl CollapseOp {
    pub fn new(op: CMatrix, rate: f64) -> Self {
        Self { op, rate }
    }
}

#[derive(Debug, Clone)]
pub struct LindbladModel {
    pub hamiltonian: CMatrix,
    pub collapse: Vec<CollapseOp>,
    pub dims: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Waveform {
    /// cos(2π f t + phase)
    Cosine { freq_hz: f64, phase: f64 },
}

impl Waveform {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Waveform::Cosine { freq_hz, phase } => (TAU * freq_hz * t + phase).cos(),
        }
    }
}

/// Time-dependent Hamiltonian term `op · waveform(t)` (op in Hz).
#[derive(Debug, Clone)]
pub struct Drive {
    pub op: CMatrix,
    pub waveform: Waveform,
}

impl LindbladModel {
    pub fn new(hamiltonian: CMatrix, collapse: Vec<CollapseOp>, dims: Vec<usize>) -> Result<Self> {
        let m = Self { hamiltonian, collapse, dims };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        if self.dims.iter().product::<usize>() != n || !self.hamiltonian.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "Hamiltonian {}x{} vs subsystem dims {:?}",
                self.hamiltonian.nrows(),
                self.hamiltonian.ncols(),
                self.dims
            )));
        }
        ensure_hermitian(&self.hamiltonian, 1e-12)?;
        for c in &self.collapse {
            if c.op.shape() != (n, n) {
                return Err(Error::DimensionMismatch(format!("collapse operator {:?} vs dimension {n}", c.op.shape())));
            }
            if !(c.rate >= 0.0 && c.rate.is_finite()) {
                return Err(crate::error::invalid("rate", format!("collapse rate {} must be >= 0", c.rate)));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.nrows()
    }

    /// K = 2πH − (i/2)Σ 2π r A†A, so that dρ/dt = −i(Kρ − ρK†) + Σ 2π r AρA†.
    fn effective(&self) -> CMatrix {
        let mut k = &self.hamiltonian * Complex64::new(TAU, 0.0);
        for c in &self.collapse {
            k -= c.op.adjoint() * &c.op * Complex64::new(0.0, 0.5 * TAU * c.rate);
        }
        k
    }

    /// Direct evaluation of the generator on ρ (rad/s).
    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        apply_with(&self.effective(), &self.collapse, rho)
    }
}

fn apply_with(k: &CMatrix, collapse: &[CollapseOp], rho: &CMatrix) -> CMatrix {
    let kr = k * rho;
    let mut out = (&kr - rho * k.adjoint()) * Complex64::new(0.0, -1.0);
    for c in collapse {
        if c.rate > 0.0 {
            out += &c.op * rho * c.op.adjoint() * Complex64::new(TAU * c.rate, 0.0);
        }
    }
    out
}

/// Same generator for Hermitian ρ, written as X + X† so that rounding
/// cannot build up an anti-Hermitian part over long propagations.
fn apply_hermitian(k: &CMatrix, collapse: &[CollapseOp], rho: &CMatrix) -> CMatrix {
    let mut x = k * rho * Complex64::new(0.0, -1.0);
    for c in collapse {
        if c.rate > 0.0 {
            x += &c.op * rho * c.op.adjoint() * Complex64::new(0.5 * TAU * c.rate, 0.0);
        }
    }
    &x + x.adjoint()
}

/// Superoperator acting on column-stacked ρ.
pub fn build_liouvillian(model: &LindbladModel) -> Result<CMatrix> {
    model.validate()?;
    let n = model.dim();
    let id = identity(n);
    let k = model.effective();
    // vec(AXB) = (Bᵀ ⊗ A) vec(X)
    let mut l = (kron(&id, &k) - kron(&k.adjoint().transpose(), &id)) * Complex64::new(0.0, -1.0);
    for c in &model.collapse {
        if c.rate > 0.0 {
            l += kron(&c.op.conjugate(), &c.op) * Complex64::new(TAU * c.rate, 0.0);
        }
    }
    Ok(l)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize)]
pub struct StateDiagnostics {
    pub max_trace_error: f64,
    pub max_hermiticity_defect: f64,
    pub min_eigenvalue: f64,
}

impl StateDiagnostics {
    pub fn of(states: &[CMatrix]) -> Self {
        let mut d = StateDiagnostics { min_eigenvalue: f64::INFINITY, ..Default::default() };
        for rho in states {
            d.max_trace_error = d.max_trace_error.max((trace(rho) - Complex64::new(1.0, 0.0)).norm());
            d.max_hermiticity_defect = d.max_hermiticity_defect.max(hermiticity_defect(rho));
            let h = (rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
            if let Ok(e) = hermitian_eig(&h) {
                d.min_eigenvalue = d.min_eigenvalue.min(e.values[0]);
            }
        }
        d
    }

    /// Trace 1e-8, Hermiticity 1e-10, positivity −1e-7.
    pub fn physical(&self) -> bool {
        self.max_trace_error <= 1e-8 && self.max_hermiticity_defect <= 1e-10 && self.min_eigenvalue >= -1e-7
    }
}

pub fn validate_density_matrix(rho: &CMatrix, n: usize) -> Result<()> {
    if rho.shape() != (n, n) {
        return Err(Error::DimensionMismatch(format!("state {:?} vs model dimension {n}", rho.shape())));
    }
    let d = StateDiagnostics::of(std::slice::from_ref(rho));
    if d.max_hermiticity_defect > 1e-10 {
        return Err(Error::InvalidState(format!("not Hermitian ({:.3e})", d.max_hermiticity_defect)));
    }
    if d.max_trace_error > 1e-10 {
        return Err(Error::InvalidState(format!("trace differs from 1 by {:.3e}", d.max_trace_error)));
    }
    if d.min_eigenvalue < -1e-10 {
        return Err(Error::InvalidState(format!("negative eigenvalue {:.3e}", d.min_eigenvalue)));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct Evolution {
    pub times: Vec<f64>,
    pub states: Vec<CMatrix>,
    pub diagnostics: StateDiagnostics,
}

impl Evolution {
    pub fn expectation(&self, op: &CMatrix) -> Vec<f64> {
        self.states.iter().map(|r| crate::numerics::linalg::trace_product(op, r).re).collect()
    }
}

pub fn default_ode_options() -> OdeOptions {
    OdeOptions { rtol: 1e-9, atol: 1e-11, ..Default::default() }
}

pub fn evolve(model: &LindbladModel, rho0: &CMatrix, times: &[f64], opts: &OdeOptions) -> Result<Evolution> {
    evolve_driven(model, &[], rho0, times, opts)
}

/// Propagate from t = 0 with additional time-dependent Hamiltonian terms.
pub fn evolve_driven(
    model: &LindbladModel,
    drives: &[Drive],
    rho0: &CMatrix,
    times: &[f64],
    opts: &OdeOptions,
) -> Result<Evolution> {
    model.validate()?;
    let n = model.dim();
    validate_density_matrix(rho0, n)?;
    for d in drives {
        ensure_hermitian(&d.op, 1e-12)?;
        if d.op.shape() != (n, n) {
            return Err(Error::DimensionMismatch("drive operator".into()));
        }
    }
    let k0 = model.effective();
    let drive_ops: Vec<CMatrix> = drives.iter().map(|d| &d.op * Complex64::new(TAU, 0.0)).collect();
    let rhs = |t: f64, rho: &CMatrix| {
        if drives.is_empty() {
            return apply_hermitian(&k0, &model.collapse, rho);
        }
        let mut k = k0.clone();
        for (d, op) in drives.iter().zip(&drive_ops) {
            k += op * Complex64::new(d.waveform.value(t), 0.0);
        }
        apply_hermitian(&k, &model.collapse, rho)
    };
    let traj = integrate_ode(rhs, rho0.clone(), 0.0, times, opts)?;
    let diagnostics = StateDiagnostics::of(&traj.states);
    Ok(Evolution { times: traj.times, states: traj.states, diagnostics })
}

#[derive(Debug, Clone)]
pub struct SteadyState {
    pub rho: CMatrix,
    /// ‖L vec(ρ)‖ / ‖L‖_F.
    pub residual: f64,
    pub solve_residual: f64,
}

/// Unique stationary state from the trace-constrained Liouvillian.
pub fn steady_state(model: &LindbladModel) -> Result<SteadyState> {
    let l = build_liouvillian(model)?;
    let n = model.dim();
    let sv = l.clone().svd(false, false).singular_values;
    let mut s: Vec<f64> = sv.iter().cloned().collect();
    s.sort_by(f64::total_cmp);
    let scale = s.last().cloned().unwrap_or(0.0).max(f64::MIN_POSITIVE);
    if s.len() > 1 && s[1] <= 1e-10 * scale {
        return Err(Error::DegenerateKernel { sigma: s[1] });
    }
    // trace row scaled like the Liouvillian rows
    let w = Complex64::new(max_abs(&l).max(1.0), 0.0);
    let mut a = l.clone();
    for j in 0..n * n {
        a[(0, j)] = Complex64::new(0.0, 0.0);
    }
    for i in 0..n {
        a[(0, i + i * n)] = w;
    }
    let mut b = CVector::zeros(n * n);
    b[0] = w;
    let sol = solve_linear(&a, &b)?;
    let raw = unvectorize(&sol.x, n);
    let mut rho = (&raw + raw.adjoint()) * Complex64::new(0.5, 0.0);
    let tr = trace(&rho);
    rho /= tr;
    let residual = (&l * vectorize(&rho)).norm() / l.norm();
    Ok(SteadyState { rho, residual, solve_residual: sol.relative_residual })
}

/// ½‖a − b‖₁ for Hermitian a, b.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    let d = a - b;
    let h = (&d + d.adjoint()) * Complex64::new(0.5, 0.0);
    match hermitian_eig(&h) {
        Ok(e) => 0.5 * e.values.iter().map(|v| v.abs()).sum::<f64>(),
        Err(_) => f64::INFINITY,
    }
}

/// Eigenvalues of a general complex matrix via the Schur form.
pub fn general_eigenvalues(m: &CMatrix) -> Vec<Complex64> {
    let (_, t) = m.clone().schur().unpack();
    t.diagonal().iter().cloned().collect()
}

pub fn pure_state(psi: &CVector) -> CMatrix {
    psi * psi.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::qubit;
    use crate::numerics::linalg::{annihilation, basis_ket, c};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
        let a = CMatrix::from_fn(n, n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        (&a + a.adjoint()) * c(0.5, 0.0)
    }

    fn random_model(rng: &mut ChaCha8Rng, n: usize) -> LindbladModel {
        let h = random_hermitian(rng, n) * c(1e6, 0.0);
        let collapse = (0..3)
            .map(|_| {
                let a = CMatrix::from_fn(n, n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
                CollapseOp::new(a, rng.gen_range(0.0..2e5))
            })
            .collect();
        LindbladModel::new(h, collapse, vec![n]).unwrap()
    }

    #[test]
    fn superoperator_matches_direct_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in [2, 3, 5] {
            let m = random_model(&mut rng, n);
            let l = build_liouvillian(&m).unwrap();
            let rho = random_hermitian(&mut rng, n);
            let direct = m.apply(&rho);
            let via = unvectorize(&(&l * vectorize(&rho)), n);
            assert!((direct - via).norm() <= 1e-12 * l.norm());
        }
    }

    #[test]
    fn closed_system_spectrum_is_imaginary() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let h = random_hermitian(&mut rng, 3);
        let l = build_liouvillian(&LindbladModel::new(h, vec![], vec![3]).unwrap()).unwrap();
        for z in general_eigenvalues(&l) {
            assert!(z.re.abs() < 1e-9 * l.norm());
        }
    }

    #[test]
    fn liouvillian_spectrum_is_stable() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let m = random_model(&mut rng, 3);
            let l = build_liouvillian(&m).unwrap();
            for z in general_eigenvalues(&l) {
                assert!(z.re <= 1e-9 * l.norm(), "{z}");
            }
        }
    }

    #[test]
    fn decay_only_qubit_relaxes_to_ground() {
        let m = LindbladModel::new(CMatrix::zeros(2, 2), qubit::thermal_collapse(1e3, 0.0, 0.0), vec![2]).unwrap();
        let ss = steady_state(&m).unwrap();
        assert!((ss.rho[(0, 0)].re - 1.0).abs() < 1e-12);
        assert!(ss.residual < 1e-10);
    }

    #[test]
    fn thermal_steady_state_detailed_balance() {
        for n_q in [0.0, 0.3, 78.0] {
            let h = qubit::sigma_z() * c(2e6, 0.0);
            let m = LindbladModel::new(h, qubit::thermal_collapse(1e3, n_q, 1e3), vec![2]).unwrap();
            let ss = steady_state(&m).unwrap();
            let sz = crate::numerics::linalg::trace_product(&qubit::sigma_z(), &ss.rho).re;
            assert!((sz + 1.0 / (2.0 * n_q + 1.0)).abs() < 1e-12, "n_q {n_q}: {sz}");
        }
    }

    #[test]
    fn degenerate_kernel_is_reported() {
        let m = LindbladModel::new(qubit::sigma_z(), vec![], vec![2]).unwrap();
        assert!(matches!(steady_state(&m), Err(Error::DegenerateKernel { .. })));
    }

    #[test]
    fn thermal_decay_matches_analytic() {
        let (gamma, n_q) = (2e3, 0.7);
        let m = LindbladModel::new(CMatrix::zeros(2, 2), qubit::thermal_collapse(gamma, n_q, 500.0), vec![2]).unwrap();
        let rho0 = pure_state(&basis_ket(2, 1));
        let times: Vec<f64> = (1..=20).map(|k| k as f64 * 2e-5).collect();
        let ev = evolve(&m, &rho0, &times, &default_ode_options()).unwrap();
        let rate = TAU * gamma * (2.0 * n_q + 1.0);
        let p_inf = n_q / (2.0 * n_q + 1.0);
        for (t, rho) in times.iter().zip(&ev.states) {
            let exact = p_inf + (1.0 - p_inf) * (-rate * t).exp();
            assert!((rho[(1, 1)].re - exact).abs() < 1e-6);
        }
        assert!(ev.diagnostics.physical());
    }

    #[test]
    fn coherence_decays_at_half_gamma_q() {
        let (gamma, n_q, gphi) = (1e3, 2.0, 3e3);
        let m = LindbladModel::new(CMatrix::zeros(2, 2), qubit::thermal_collapse(gamma, n_q, gphi), vec![2]).unwrap();
        let plus = (basis_ket(2, 0) + basis_ket(2, 1)) * c(0.5f64.sqrt(), 0.0);
        let t = 5e-5;
        let ev = evolve(&m, &pure_state(&plus), &[t], &default_ode_options()).unwrap();
        let gamma_q = gamma * (2.0 * n_q + 1.0) + gphi;
        let exact = 0.5 * (-0.5 * TAU * gamma_q * t).exp();
        assert!((ev.states[0][(0, 1)].norm() - exact).abs() < 1e-7);
    }

    #[test]
    fn frozen_model_keeps_state() {
        let m = LindbladModel::new(CMatrix::zeros(3, 3), vec![], vec![3]).unwrap();
        let rho0 = pure_state(&basis_ket(3, 2));
        let ev = evolve(&m, &rho0, &[1.0, 2.0], &default_ode_options()).unwrap();
        assert_eq!(ev.states[1], rho0);
    }

    #[test]
    fn long_time_evolution_reaches_steady_state() {
        let h = qubit::sigma_z() * c(-0.5e6, 0.0) + qubit::sigma_x() * c(0.4e6, 0.0);
        let m = LindbladModel::new(h, qubit::thermal_collapse(1e6, 0.2, 0.5e6), vec![2]).unwrap();
        let ss = steady_state(&m).unwrap();
        let ev = evolve(&m, &pure_state(&basis_ket(2, 0)), &[2e-5], &OdeOptions::with_tol(1e-12)).unwrap();
        assert!(trace_distance(&ev.states[0], &ss.rho) < 1e-6);
        let sz = |r: &CMatrix| crate::numerics::linalg::trace_product(&qubit::sigma_z(), r).re;
        assert!((sz(&ev.states[0]) - sz(&ss.rho)).abs() < 1e-6);
    }

    #[test]
    fn rejects_invalid_inputs() {
        assert!(LindbladModel::new(CMatrix::zeros(2, 2), vec![], vec![3]).is_err());
        assert!(LindbladModel::new(CMatrix::zeros(2, 2), vec![CollapseOp::new(identity(2), -1.0)], vec![2]).is_err());
        let m = LindbladModel::new(CMatrix::zeros(2, 2), vec![], vec![2]).unwrap();
        let bad = identity(2);
        assert!(matches!(evolve(&m, &bad, &[1.0], &default_ode_options()), Err(Error::InvalidState(_))));
        let a = annihilation(2);
        assert!(LindbladModel::new(a, vec![], vec![2]).is_err());
    }
}
