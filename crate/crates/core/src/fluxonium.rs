//! Bare fluxonium: Hamiltonian in the oscillator basis, spectra versus flux,
//! wavefunctions, phase matrix elements and electromechanical couplings.
//!
//! The external flux sits inside the cosine,
//! `H = 4E_C n² + ½E_L φ² − E_J cos(φ + 2πΦ_e/Φ_0)`,
//! and `φ = φ_zpf (a + a†)/√2` with `φ_zpf = (8E_C/E_L)^{1/4}`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::constants::{HBAR, REDUCED_FLUX_QUANTUM};
use crate::error::{invalid, Result};
use crate::numerics::linalg::{annihilation, hermitian_eig, CMatrix, EigenSystem};
use crate::trace::SpectrumTrace;
use crate::TAU;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FluxoniumParams {
    /// E_J/h in Hz.
    pub e_j: f64,
    /// E_C/h in Hz.
    pub e_c: f64,
    /// E_L/h in Hz.
    pub e_l: f64,
    pub basis_size: usize,
    pub n_levels: usize,
}

impl Default for FluxoniumParams {
    fn default() -> Self {
        Self { e_j: 5.5e9, e_c: 0.5e9, e_l: 0.2e9, basis_size: 120, n_levels: 6 }
    }
}

impl FluxoniumParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.e_j >= 0.0 && self.e_j.is_finite()) {
            return Err(invalid("e_j", "must be finite and >= 0"));
        }
        if !(self.e_c > 0.0 && self.e_c.is_finite()) {
            return Err(invalid("e_c", "must be finite and > 0"));
        }
        if !(self.e_l > 0.0 && self.e_l.is_finite()) {
            return Err(invalid("e_l", "must be finite and > 0"));
        }
        if self.n_levels < 2 {
            return Err(invalid("n_levels", "need at least 2 levels"));
        }
        if self.basis_size < 4 * self.n_levels {
            return Err(invalid(
                "basis_size",
                format!("{} < 4·n_levels = {}", self.basis_size, 4 * self.n_levels),
            ));
        }
        Ok(())
    }

    pub fn phi_zpf(&self) -> f64 {
        (8.0 * self.e_c / self.e_l).powf(0.25)
    }

    /// √(8 E_L E_C), the level spacing at E_J = 0.
    pub fn plasma_frequency(&self) -> f64 {
        (8.0 * self.e_l * self.e_c).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MechanicalParams {
    /// ω_m/2π in Hz.
    pub omega_m: f64,
    /// γ_m/2π in Hz.
    pub gamma_m: f64,
    /// kg
    pub mass: f64,
    /// Suspended arm length in m.
    pub length: f64,
    pub n_bath: f64,
}

impl Default for MechanicalParams {
    fn default() -> Self {
        Self { omega_m: 6e6, gamma_m: 5.0, mass: 0.75e-15, length: 40e-6, n_bath: 0.0 }
    }
}

impl MechanicalParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega_m > 0.0) {
            return Err(invalid("omega_m", "must be > 0"));
        }
        if !(self.mass > 0.0) {
            return Err(invalid("mass", "must be > 0"));
        }
        if !(self.length > 0.0) {
            return Err(invalid("length", "must be > 0"));
        }
        if !(self.gamma_m >= 0.0) || !(self.n_bath >= 0.0) {
            return Err(invalid("gamma_m", "damping and bath occupation must be >= 0"));
        }
        Ok(())
    }

    /// Zero-point displacement √(ħ/(2mω_m)) in m.
    pub fn x0(&self) -> f64 {
        (HBAR / (2.0 * self.mass * TAU * self.omega_m)).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CouplingSetup {
    /// In-plane field in T.
    pub b_field: f64,
    pub fluxonium: FluxoniumParams,
    pub mech: MechanicalParams,
}

impl CouplingSetup {
    /// g_Φ/2π = (E_L/h)·B·l·x0/φ0 in Hz.
    pub fn g_phi(&self) -> f64 {
        self.fluxonium.e_l * self.b_field * self.mech.length * self.mech.x0() / REDUCED_FLUX_QUANTUM
    }
}

/// Mechanical frequency shift ħ²g_Φ²/(2E_L m ω_m x0²) from the inductive
/// term, returned in Hz.
pub fn mech_frequency_shift(setup: &CouplingSetup) -> f64 {
    let g = TAU * setup.g_phi();
    let e_l = setup.fluxonium.e_l * crate::constants::PLANCK;
    let w = TAU * setup.mech.omega_m;
    let x0 = setup.mech.x0();
    HBAR * HBAR * g * g / (2.0 * e_l * setup.mech.mass * w * x0 * x0) / TAU
}

/// Flux-independent pieces of the Hamiltonian, built once per parameter set.
#[derive(Debug, Clone)]
pub struct FluxoniumBasis {
    pub params: FluxoniumParams,
    pub phi: CMatrix,
    cos_phi: CMatrix,
    sin_phi: CMatrix,
    harmonic: CMatrix,
}

impl FluxoniumBasis {
    pub fn new(params: FluxoniumParams) -> Result<Self> {
        params.validate()?;
        let n = params.basis_size;
        let a = annihilation(n);
        let phi = (&a + a.adjoint()) * Complex64::new(params.phi_zpf() / 2f64.sqrt(), 0.0);
        let eig = hermitian_eig(&phi)?;
        let cos_phi = eig.map(f64::cos);
        let sin_phi = eig.map(f64::sin);
        let w = params.plasma_frequency();
        let harmonic = CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(w * (i as f64 + 0.5), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        Ok(Self { params, phi, cos_phi, sin_phi, harmonic })
    }

    pub fn hamiltonian(&self, phi_e: f64) -> CMatrix {
        let theta = TAU * phi_e;
        let (s, c) = theta.sin_cos();
        let cos_shift = &self.cos_phi * Complex64::new(c, 0.0) - &self.sin_phi * Complex64::new(s, 0.0);
        &self.harmonic - cos_shift * Complex64::new(self.params.e_j, 0.0)
    }

    /// Same circuit with the flux in the inductive term:
    /// `½E_L(φ − 2πΦ_e/Φ_0)² − E_J cos φ`.
    pub fn hamiltonian_quadratic_gauge(&self, phi_e: f64) -> CMatrix {
        let theta = TAU * phi_e;
        let n = self.params.basis_size;
        let e_l = self.params.e_l;
        &self.harmonic - &self.phi * Complex64::new(e_l * theta, 0.0)
            + CMatrix::identity(n, n) * Complex64::new(0.5 * e_l * theta * theta, 0.0)
            - &self.cos_phi * Complex64::new(self.params.e_j, 0.0)
    }

    pub fn eigensystem(&self, phi_e: f64) -> Result<EigenSystem> {
        hermitian_eig(&self.hamiltonian(phi_e))
    }

    pub fn potential(&self, phi: f64, phi_e: f64) -> f64 {
        0.5 * self.params.e_l * phi * phi - self.params.e_j * (phi + TAU * phi_e).cos()
    }

    /// Two-level data for the lowest pair at `phi_e`.
    pub fn qubit_point(&self, phi_e: f64) -> Result<QubitPoint> {
        let eig = self.eigensystem(phi_e)?;
        let m = eig.project(&self.phi, 2);
        Ok(QubitPoint {
            phi_e,
            omega_q: eig.values[1] - eig.values[0],
            phi_gg: m[(0, 0)].re,
            phi_ee: m[(1, 1)].re,
            phi_ge: m[(0, 1)],
        })
    }

    /// Flux in `[lo, hi]` where E_e − E_g equals `target_hz`; the qubit
    /// frequency must be monotone on the bracket.
    pub fn flux_for_qubit_frequency(&self, target_hz: f64, lo: f64, hi: f64) -> Result<f64> {
        let f = |x: f64| -> Result<f64> {
            let e = self.eigensystem(x)?;
            Ok(e.values[1] - e.values[0] - target_hz)
        };
        let (mut a, mut b) = (lo, hi);
        let (mut fa, fb) = (f(a)?, f(b)?);
        if fa * fb > 0.0 {
            return Err(invalid(
                "target_hz",
                format!("qubit frequency {target_hz:.6e} Hz not bracketed by flux [{lo}, {hi}]"),
            ));
        }
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            let fm = f(m)?;
            if fm == 0.0 || (b - a).abs() < 1e-14 {
                return Ok(m);
            }
            if fa * fm < 0.0 {
                b = m;
            } else {
                a = m;
                fa = fm;
            }
        }
        Ok(0.5 * (a + b))
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct QubitPoint {
    pub phi_e: f64,
    /// (E_e − E_g)/h in Hz.
    pub omega_q: f64,
    pub phi_gg: f64,
    pub phi_ee: f64,
    #[serde(skip)]
    pub phi_ge: Complex64,
}

pub fn build_hamiltonian(p: &FluxoniumParams, phi_e: f64) -> Result<CMatrix> {
    Ok(FluxoniumBasis::new(*p)?.hamiltonian(phi_e))
}

/// Levels referenced to E_g for each flux point; columns `level_k` in Hz.
pub fn spectrum_sweep(p: &FluxoniumParams, grid: &[f64]) -> Result<SpectrumTrace> {
    let basis = FluxoniumBasis::new(*p)?;
    let rows: Vec<Vec<f64>> = grid
        .par_iter()
        .map(|&x| {
            let e = basis.eigensystem(x)?;
            Ok(e.values[..p.n_levels].iter().map(|v| v - e.values[0]).collect())
        })
        .collect::<Result<_>>()?;
    let mut trace = SpectrumTrace::new("phi_e", "Phi0", grid.to_vec())?;
    for k in 0..p.n_levels {
        trace.push_column(&format!("level_{k}"), "Hz", rows.iter().map(|r| r[k]).collect())?;
    }
    trace.set_meta("e_j_hz", p.e_j);
    trace.set_meta("e_c_hz", p.e_c);
    trace.set_meta("e_l_hz", p.e_l);
    trace.set_meta("basis_size", p.basis_size);
    Ok(trace)
}

#[derive(Debug, Clone)]
pub struct Wavefunction {
    pub phi: Vec<f64>,
    pub psi: Vec<Complex64>,
    /// V(φ) in Hz.
    pub potential: Vec<f64>,
    /// Level energy in Hz (absolute).
    pub energy: f64,
}

/// Normalized Hermite functions h_0..h_{n-1} at x.
fn hermite_functions(x: f64, n: usize) -> Vec<f64> {
    let mut h = vec![0.0; n];
    h[0] = std::f64::consts::PI.powf(-0.25) * (-0.5 * x * x).exp();
    if n > 1 {
        h[1] = 2f64.sqrt() * x * h[0];
    }
    for k in 1..n.saturating_sub(1) {
        let kf = k as f64;
        h[k + 1] = (2.0 / (kf + 1.0)).sqrt() * x * h[k] - (kf / (kf + 1.0)).sqrt() * h[k - 1];
    }
    h
}

pub fn wavefunction_on_grid(p: &FluxoniumParams, phi_e: f64, level: usize, grid: &[f64]) -> Result<Wavefunction> {
    if level >= p.n_levels {
        return Err(invalid("level", format!("{level} >= n_levels {}", p.n_levels)));
    }
    let zpf = p.phi_zpf();
    let limit = 8.0 * zpf * (p.basis_size as f64).sqrt();
    if grid.iter().any(|x| x.abs() > limit) {
        return Err(invalid("phi_grid", format!("grid exceeds ±{limit:.3} where the truncated basis is unreliable")));
    }
    let basis = FluxoniumBasis::new(*p)?;
    let eig = basis.eigensystem(phi_e)?;
    let coeffs = eig.vector(level);
    let norm = zpf.sqrt();
    let psi = grid
        .iter()
        .map(|&x| {
            let h = hermite_functions(x / zpf, p.basis_size);
            coeffs.iter().zip(h).map(|(c, hk)| c * hk).sum::<Complex64>() / norm
        })
        .collect();
    Ok(Wavefunction {
        phi: grid.to_vec(),
        psi,
        potential: grid.iter().map(|&x| basis.potential(x, phi_e)).collect(),
        energy: eig.values[level],
    })
}

#[derive(Debug, Clone)]
pub struct MatrixElementTable {
    pub flux: Vec<f64>,
    /// Absolute level energies in Hz, per flux point.
    pub energies: Vec<Vec<f64>>,
    /// ⟨i|φ|j⟩ for the retained levels, per flux point.
    pub elements: Vec<CMatrix>,
}

impl MatrixElementTable {
    pub fn phi(&self, k: usize, i: usize, j: usize) -> Complex64 {
        self.elements[k][(i, j)]
    }

    /// (g_x, g_z) in Hz for coupling g_Φ: g_x = g_Φ|φ_ge|, g_z = g_Φ(φ_ee − φ_gg)/2.
    pub fn couplings(&self, k: usize, g_phi: f64) -> (f64, f64) {
        let m = &self.elements[k];
        (g_phi * m[(0, 1)].norm(), g_phi * (m[(1, 1)].re - m[(0, 0)].re) / 2.0)
    }
}

pub fn phase_matrix_elements(p: &FluxoniumParams, grid: &[f64], n_levels: usize) -> Result<MatrixElementTable> {
    if n_levels > p.basis_size {
        return Err(invalid("n_levels", "exceeds basis size"));
    }
    let basis = FluxoniumBasis::new(*p)?;
    let rows: Vec<(Vec<f64>, CMatrix)> = grid
        .par_iter()
        .map(|&x| {
            let e = basis.eigensystem(x)?;
            let mut m = e.project(&basis.phi, n_levels);
            for i in 0..n_levels {
                m[(i, i)].im = 0.0;
                for j in 0..i {
                    m[(i, j)] = m[(j, i)].conj();
                }
            }
            Ok((e.values[..n_levels].to_vec(), m))
        })
        .collect::<Result<_>>()?;
    let (energies, elements) = rows.into_iter().unzip();
    Ok(MatrixElementTable { flux: grid.to_vec(), energies, elements })
}

/// g_Φ, g_x = g_Φ|φ_ge| and g_z = g_Φ(φ_ee − φ_gg)/2 versus flux, in Hz.
pub fn coupling_rates(setup: &CouplingSetup, grid: &[f64]) -> Result<SpectrumTrace> {
    let table = phase_matrix_elements(&setup.fluxonium, grid, 2)?;
    let g = setup.g_phi();
    let (gx, gz): (Vec<f64>, Vec<f64>) = (0..grid.len()).map(|k| table.couplings(k, g)).unzip();
    let mut trace = SpectrumTrace::new("phi_e", "Phi0", grid.to_vec())?
        .with_column("g_phi", "Hz", vec![g; grid.len()])?
        .with_column("g_x", "Hz", gx)?
        .with_column("g_z", "Hz", gz)?;
    trace.set_meta("b_field_t", setup.b_field);
    trace.set_meta("x0_m", setup.mech.x0());
    Ok(trace)
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub phi_e: f64,
    pub basis_size: usize,
    pub extended_basis_size: usize,
    pub drift_hz: Vec<f64>,
    pub max_drift_hz: f64,
    pub converged: bool,
}

pub const CONVERGENCE_THRESHOLD_HZ: f64 = 1e3;

/// Compares the lowest `n_levels` energies at `basis_size` and
/// `1.25·basis_size`.
pub fn check_convergence(p: &FluxoniumParams, phi_e: f64) -> Result<ConvergenceReport> {
    let small = FluxoniumBasis::new(*p)?.eigensystem(phi_e)?;
    let extended = (p.basis_size * 5).div_ceil(4);
    let big = FluxoniumBasis::new(FluxoniumParams { basis_size: extended, ..*p })?.eigensystem(phi_e)?;
    let drift_hz: Vec<f64> = (0..p.n_levels).map(|k| (small.values[k] - big.values[k]).abs()).collect();
    let max_drift_hz = drift_hz.iter().cloned().fold(0.0, f64::max);
    Ok(ConvergenceReport {
        phi_e,
        basis_size: p.basis_size,
        extended_basis_size: extended,
        drift_hz,
        max_drift_hz,
        converged: max_drift_hz < CONVERGENCE_THRESHOLD_HZ,
    })
}

/// Uniform grid of `n` points on `[lo, hi]` inclusive.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis() -> FluxoniumBasis {
        FluxoniumBasis::new(FluxoniumParams::default()).unwrap()
    }

    #[test]
    fn harmonic_limit_is_equally_spaced() {
        let p = FluxoniumParams { e_j: 0.0, ..Default::default() };
        let e = FluxoniumBasis::new(p).unwrap().eigensystem(0.37).unwrap();
        let w = p.plasma_frequency();
        assert!((w - 0.894e9).abs() < 0.001e9);
        for k in 1..6 {
            assert!(((e.values[k] - e.values[k - 1]) / w - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn half_flux_splitting_is_a_few_mhz() {
        let q = basis().qubit_point(0.5).unwrap();
        assert!((q.omega_q - 4e6).abs() < 0.3 * 4e6, "{}", q.omega_q);
        assert!(q.phi_gg.abs() < 1e-6 && q.phi_ee.abs() < 1e-6);
    }

    #[test]
    fn periodic_and_reflection_symmetric() {
        let b = basis();
        for x in [0.1, 0.3, 0.45] {
            let e0 = b.eigensystem(x).unwrap().values;
            let e1 = b.eigensystem(x + 1.0).unwrap().values;
            let e2 = b.eigensystem(1.0 - x).unwrap().values;
            for k in 0..6 {
                assert!((e0[k] - e1[k]).abs() <= 1e-8 * e0[k].abs());
                assert!((e0[k] - e2[k]).abs() <= 1e-8 * e0[k].abs());
            }
        }
    }

    #[test]
    fn gauges_agree() {
        let b = basis();
        for x in [0.0, 0.3, 0.5] {
            let a = hermitian_eig(&b.hamiltonian(x)).unwrap().values;
            let q = hermitian_eig(&b.hamiltonian_quadratic_gauge(x)).unwrap().values;
            for k in 0..6 {
                assert!((a[k] - q[k]).abs() <= 1e-8 * a[k].abs().max(1e9), "flux {x} level {k}: {} vs {}", a[k], q[k]);
            }
        }
    }

    #[test]
    fn sweet_spot_is_first_order_insensitive() {
        let b = basis();
        let w = |x: f64| b.qubit_point(x).unwrap().omega_q;
        let d = 1e-4;
        let first = (w(0.5 + d) - w(0.5 - d)).abs();
        let second = (w(0.5 + d) + w(0.5 - d) - 2.0 * w(0.5)).abs();
        assert!(first < second, "first {first} second {second}");
    }

    #[test]
    fn matrix_element_sum_rule_from_below() {
        let p = FluxoniumParams { n_levels: 12, ..Default::default() };
        let b = FluxoniumBasis::new(p).unwrap();
        let e = b.eigensystem(0.3).unwrap();
        let phi2 = &b.phi * &b.phi;
        let exact = e.project(&phi2, 1)[(0, 0)].re;
        let m = e.project(&b.phi, 12);
        let mut last = 0.0;
        for n in 1..=12 {
            let partial: f64 = (0..n).map(|k| m[(0, k)].norm_sqr()).sum();
            assert!(partial >= last - 1e-12 && partial <= exact + 1e-9);
            last = partial;
        }
        assert!((exact - last) / exact < 1e-3);
    }

    #[test]
    fn table_is_hermitian() {
        let t = phase_matrix_elements(&FluxoniumParams::default(), &[0.2, 0.3], 4).unwrap();
        for m in &t.elements {
            assert_eq!(m.clone(), m.adjoint());
        }
    }

    #[test]
    fn coupling_constant_and_zero_point() {
        let mut s = CouplingSetup { b_field: 1e-3, fluxonium: FluxoniumParams::default(), mech: MechanicalParams::default() };
        assert!((s.mech.x0() / 43e-15 - 1.0).abs() < 0.01);
        assert!((s.g_phi() / 1049.8 - 1.0).abs() < 0.005, "{}", s.g_phi());
        let g1 = s.g_phi();
        let d1 = mech_frequency_shift(&s);
        s.b_field = 2e-3;
        assert!((s.g_phi() - 2.0 * g1).abs() < 1e-12 * g1);
        assert!((mech_frequency_shift(&s) / d1 - 4.0).abs() < 1e-12);
        s.b_field = 0.0;
        assert_eq!(mech_frequency_shift(&s), 0.0);
    }

    #[test]
    fn shift_equals_g_squared_over_e_l() {
        let s = CouplingSetup { b_field: 0.1, fluxonium: FluxoniumParams::default(), mech: MechanicalParams::default() };
        let g = s.g_phi();
        assert!((mech_frequency_shift(&s) / (g * g / s.fluxonium.e_l) - 1.0).abs() < 1e-10);
        assert!(mech_frequency_shift(&s) / s.mech.omega_m < 1e-2);
    }

    #[test]
    fn convergence_flags() {
        let r = check_convergence(&FluxoniumParams { e_j: 0.0, ..Default::default() }, 0.3).unwrap();
        assert!(r.max_drift_hz < 1e-6, "{}", r.max_drift_hz);
        let tiny = FluxoniumParams { basis_size: 8, n_levels: 2, ..Default::default() };
        assert!(!check_convergence(&tiny, 0.5).unwrap().converged);
    }

    #[test]
    fn invalid_params_are_rejected() {
        assert!(FluxoniumParams { basis_size: 20, ..Default::default() }.validate().is_err());
        assert!(FluxoniumParams { e_c: 0.0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn harmonic_ground_wavefunction() {
        let p = FluxoniumParams { e_j: 0.0, basis_size: 40, ..Default::default() };
        let grid = uniform_grid(-15.0, 15.0, 3001);
        let wf = wavefunction_on_grid(&p, 0.0, 0, &grid).unwrap();
        let zpf = p.phi_zpf();
        let h = grid[1] - grid[0];
        let norm: f64 = wf.psi.iter().map(|z| z.norm_sqr()).sum::<f64>() * h;
        assert!((norm - 1.0).abs() < 1e-6);
        for (x, z) in grid.iter().zip(&wf.psi).step_by(97) {
            let g = (std::f64::consts::PI * zpf * zpf).powf(-0.25) * (-x * x / (2.0 * zpf * zpf)).exp();
            assert!((z.re - g).abs() < 1e-10);
        }
    }

    #[test]
    fn wavefunction_grid_limits() {
        let p = FluxoniumParams::default();
        assert!(wavefunction_on_grid(&p, 0.5, 0, &[0.0, 1000.0]).is_err());
        assert!(wavefunction_on_grid(&p, 0.5, 6, &[0.0]).is_err());
    }
}
