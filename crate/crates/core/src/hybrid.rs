//! Fluxonium ⊗ phonon Hamiltonian: joint spectra, avoided crossings and
//! dispersive shifts.
//!
//! Product index is `i·M + n` for fluxonium level `i` and Fock state `n`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::fluxonium::{FluxoniumBasis, FluxoniumParams};
use crate::numerics::linalg::{annihilation, hermitian_eig, identity, kron, CMatrix, EigenSystem};
use crate::trace::SpectrumTrace;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HybridModel {
    pub fluxonium: FluxoniumParams,
    /// Retained fluxonium levels K.
    pub levels: usize,
    /// Fock states M.
    pub phonons: usize,
    /// g_Φ/2π, Hz.
    pub g_phi: f64,
    /// ω_m/2π, Hz.
    pub omega_m: f64,
    pub phi_e: f64,
}

impl HybridModel {
    pub fn validate(&self) -> Result<()> {
        self.fluxonium.validate()?;
        if self.levels < 2 || self.levels > self.fluxonium.basis_size {
            return Err(invalid("levels", "need 2 <= K <= basis_size"));
        }
        if self.phonons < 2 {
            return Err(invalid("phonons", "need M >= 2"));
        }
        if !(self.omega_m > 0.0) || !self.g_phi.is_finite() {
            return Err(invalid("omega_m", "ω_m must be > 0 and g_Φ finite"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.levels * self.phonons
    }

    pub fn index(&self, level: usize, n: usize) -> usize {
        level * self.phonons + n
    }
}

/// `diag(E_i) ⊗ I + ω_m I ⊗ b†b + g_Φ [φ_ij] ⊗ (b + b†)` in Hz.
pub fn joint_hamiltonian(energies: &[f64], phi: &CMatrix, g_phi: f64, omega_m: f64, phonons: usize) -> CMatrix {
    let k = energies.len();
    let b = annihilation(phonons);
    let hq = CMatrix::from_fn(k, k, |i, j| if i == j { Complex64::new(energies[i], 0.0) } else { Complex64::new(0.0, 0.0) });
    kron(&hq, &identity(phonons))
        + kron(&identity(k), &(b.adjoint() * &b)) * Complex64::new(omega_m, 0.0)
        + kron(phi, &(&b + b.adjoint())) * Complex64::new(g_phi, 0.0)
}

#[derive(Debug, Clone)]
pub struct HybridHamiltonian {
    pub matrix: CMatrix,
    /// E_i − E_g, Hz.
    pub qubit_energies: Vec<f64>,
    pub phi: CMatrix,
}

/// Reusable solver: the fluxonium basis is built once.
#[derive(Debug, Clone)]
pub struct HybridSolver {
    pub model: HybridModel,
    basis: FluxoniumBasis,
}

#[derive(Debug, Clone)]
pub struct JointSpectrum {
    pub phi_e: f64,
    pub eig: EigenSystem,
    pub hamiltonian: HybridHamiltonian,
}

impl JointSpectrum {
    /// |⟨i,n|ψ_k⟩|².
    pub fn weight(&self, k: usize, bare: usize) -> f64 {
        self.eig.vectors[(bare, k)].norm_sqr()
    }

    /// Eigenstate with the largest overlap onto bare index `bare`.
    pub fn dominant_state(&self, bare: usize) -> usize {
        (0..self.eig.dim()).max_by(|&a, &b| self.weight(a, bare).total_cmp(&self.weight(b, bare))).unwrap_or(0)
    }

    /// Largest population of the top Fock state among retained eigenstates:
    /// those whose significant components (weight > 0.1) all sit at least
    /// two Fock states below the top (n = 0 only for M = 2).
    pub fn truncation_leak(&self, model: &HybridModel) -> f64 {
        let m = model.phonons;
        let retained_max = m.max(3) - 3;
        let mut leak = 0.0_f64;
        for k in 0..self.eig.dim() {
            let col = self.eig.vectors.column(k);
            let highest = (0..col.len()).filter(|&i| col[i].norm_sqr() > 0.1).map(|i| i % m).max().unwrap_or(0);
            if highest > retained_max {
                continue;
            }
            let top: f64 = (0..model.levels).map(|i| col[i * m + m - 1].norm_sqr()).sum();
            leak = leak.max(top);
        }
        leak
    }
}

impl HybridSolver {
    pub fn new(model: HybridModel) -> Result<Self> {
        model.validate()?;
        Ok(Self { model, basis: FluxoniumBasis::new(model.fluxonium)? })
    }

    pub fn basis(&self) -> &FluxoniumBasis {
        &self.basis
    }

    pub fn hamiltonian(&self, phi_e: f64) -> Result<HybridHamiltonian> {
        let eig = self.basis.eigensystem(phi_e)?;
        let k = self.model.levels;
        let mut phi = eig.project(&self.basis.phi, k);
        for i in 0..k {
            phi[(i, i)].im = 0.0;
            for j in 0..i {
                phi[(i, j)] = phi[(j, i)].conj();
            }
        }
        let qubit_energies: Vec<f64> = eig.values[..k].iter().map(|e| e - eig.values[0]).collect();
        let matrix = joint_hamiltonian(&qubit_energies, &phi, self.model.g_phi, self.model.omega_m, self.model.phonons);
        Ok(HybridHamiltonian { matrix, qubit_energies, phi })
    }

    pub fn spectrum(&self, phi_e: f64) -> Result<JointSpectrum> {
        let hamiltonian = self.hamiltonian(phi_e)?;
        let eig = hermitian_eig(&hamiltonian.matrix)?;
        Ok(JointSpectrum { phi_e, eig, hamiltonian })
    }

    /// Gap between the two eigenstates carrying most of the weight of the
    /// bare states `a` and `b` (product indices).
    pub fn labeled_gap(&self, phi_e: f64, a: usize, b: usize) -> Result<f64> {
        let s = self.spectrum(phi_e)?;
        let mut w: Vec<(usize, f64)> = (0..s.eig.dim()).map(|k| (k, s.weight(k, a) + s.weight(k, b))).collect();
        w.sort_by(|x, y| y.1.total_cmp(&x.1));
        Ok((s.eig.values[w[0].0] - s.eig.values[w[1].0]).abs())
    }
}

pub fn build_hybrid_hamiltonian(model: &HybridModel) -> Result<HybridHamiltonian> {
    HybridSolver::new(*model)?.hamiltonian(model.phi_e)
}

/// Fails when the top Fock state carries more than 1e-3 population in a
/// retained eigenvector.
pub fn check_truncation(model: &HybridModel) -> Result<f64> {
    let s = HybridSolver::new(*model)?.spectrum(model.phi_e)?;
    let leak = s.truncation_leak(model);
    if leak > 1e-3 {
        return Err(Error::Truncation { population: leak });
    }
    Ok(leak)
}

fn golden_section(mut f: impl FnMut(f64) -> Result<f64>, lo: f64, hi: f64, xtol: f64) -> Result<(f64, f64)> {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while (b - a).abs() > xtol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc <= fd { (c, fc) } else { (d, fd) })
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossingReport {
    pub phi_e: f64,
    pub gap_hz: f64,
    pub states: (String, String),
    pub phonon_number: usize,
    pub bracket: (f64, f64),
}

pub fn state_label(level: usize, n: usize) -> String {
    let name = match level {
        0 => "g".to_string(),
        1 => "e".to_string(),
        2 => "f".to_string(),
        k => format!("{k}"),
    };
    format!("|{name},{n}>")
}

/// Golden-section search for the minimum gap between the branches of bare
/// states `a = (level, n)` and `b` on `bracket`.
pub fn find_avoided_crossing(
    template: &HybridModel,
    bracket: (f64, f64),
    a: (usize, usize),
    b: (usize, usize),
    xtol: f64,
) -> Result<CrossingReport> {
    let (lo, hi) = if bracket.0 < bracket.1 { bracket } else { (bracket.1, bracket.0) };
    if a.0 >= template.levels || b.0 >= template.levels || a.1 >= template.phonons || b.1 >= template.phonons {
        return Err(invalid("labels", "state label outside the truncated space"));
    }
    let solver = HybridSolver::new(*template)?;
    let (ia, ib) = (template.index(a.0, a.1), template.index(b.0, b.1));
    let xtol = xtol.min(1e-7);
    let (x, gap) = golden_section(|x| solver.labeled_gap(x, ia, ib), lo, hi, xtol)?;
    let edge = 4.0 * xtol;
    if x - lo < edge || hi - x < edge {
        return Err(Error::NoMinimumInBracket { lo, hi });
    }
    Ok(CrossingReport {
        phi_e: x,
        gap_hz: gap,
        states: (state_label(a.0, a.1), state_label(b.0, b.1)),
        phonon_number: a.1.max(b.1),
        bracket: (lo, hi),
    })
}

fn sorted_levels(solver: &HybridSolver, grid: &[f64], n_out: usize) -> Result<Vec<Vec<f64>>> {
    grid.par_iter()
        .map(|&x| {
            let s = solver.spectrum(x)?;
            Ok(s.eig.values[..n_out].iter().map(|v| v - s.eig.values[0]).collect())
        })
        .collect()
}

/// Adds points around every local minimum of adjacent-level gaps so that
/// each anticrossing is sampled with ≥ 20 points across its width.
pub fn refine_grid(template: &HybridModel, grid: &[f64], n_levels: usize) -> Result<Vec<f64>> {
    let solver = HybridSolver::new(*template)?;
    let levels = sorted_levels(&solver, grid, n_levels)?;
    let mut candidates = Vec::new();
    for k in 0..n_levels - 1 {
        let gap: Vec<f64> = levels.iter().map(|l| l[k + 1] - l[k]).collect();
        for i in 1..grid.len().saturating_sub(1) {
            if gap[i] <= gap[i - 1] && gap[i] < gap[i + 1] {
                candidates.push((k, grid[i - 1], grid[i + 1]));
            }
        }
    }
    let extra: Vec<Vec<f64>> = candidates
        .par_iter()
        .map(|&(k, lo, hi)| {
            let f = |x: f64| -> Result<f64> {
                let s = solver.spectrum(x)?;
                Ok(s.eig.values[k + 1] - s.eig.values[k])
            };
            let (x0, g0) = golden_section(f, lo, hi, 1e-11)?;
            let h = (hi - lo) / 2.0;
            let g1 = f(x0 + h)?.max(f(x0 - h)?);
            let slope = ((g1 * g1 - g0 * g0).max(0.0)).sqrt() / h;
            let mut pts = vec![x0];
            if g0 > 0.0 && slope > 0.0 {
                let width = 2.0 * g0 / slope;
                let step = width / 20.0;
                let half = (5.0 * width).min(h);
                let count = ((2.0 * half / step) as usize).min(400);
                pts.extend((0..=count).map(|j| x0 - half + 2.0 * half * j as f64 / count.max(1) as f64));
            }
            Ok(pts)
        })
        .collect::<Result<_>>()?;
    let (gmin, gmax) = (grid.iter().cloned().fold(f64::INFINITY, f64::min), grid.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
    let mut all: Vec<f64> = grid.iter().cloned().chain(extra.into_iter().flatten().filter(|x| *x >= gmin && *x <= gmax)).collect();
    all.sort_by(f64::total_cmp);
    all.dedup_by(|a, b| (*a - *b).abs() <= 1e-13);
    Ok(all)
}

/// Sorted joint levels (referenced to the joint ground) on an adaptively
/// refined copy of `grid`; columns `level_k` in Hz.
pub fn hybrid_spectrum_sweep(template: &HybridModel, grid: &[f64], n_levels: usize) -> Result<SpectrumTrace> {
    let n_levels = n_levels.min(template.dim());
    let fine = refine_grid(template, grid, n_levels)?;
    let solver = HybridSolver::new(*template)?;
    let rows = sorted_levels(&solver, &fine, n_levels)?;
    let mut trace = SpectrumTrace::new("phi_e", "Phi0", fine)?;
    for k in 0..n_levels {
        trace.push_column(&format!("level_{k}"), "Hz", rows.iter().map(|r| r[k]).collect())?;
    }
    trace.set_meta("g_phi_hz", template.g_phi);
    trace.set_meta("omega_m_hz", template.omega_m);
    trace.set_meta("levels", template.levels);
    trace.set_meta("phonons", template.phonons);
    Ok(trace)
}

#[derive(Debug, Clone)]
pub struct TrackedBranches {
    pub trace: SpectrumTrace,
    /// Smallest eigenvector overlap between neighbors along each branch.
    pub min_overlap: f64,
}

/// Levels followed by maximum eigenvector overlap with the previous grid
/// point; branch `k` starts as the k-th sorted level at `grid[0]`.
pub fn track_branches(template: &HybridModel, grid: &[f64], n_levels: usize) -> Result<TrackedBranches> {
    let solver = HybridSolver::new(*template)?;
    let spectra: Vec<JointSpectrum> = grid.par_iter().map(|&x| solver.spectrum(x)).collect::<Result<_>>()?;
    let n_levels = n_levels.min(template.dim());
    let dim = template.dim();
    let mut assign: Vec<usize> = (0..n_levels).collect();
    let mut columns = vec![Vec::with_capacity(grid.len()); n_levels];
    let mut min_overlap = 1.0_f64;
    for (p, s) in spectra.iter().enumerate() {
        if p > 0 {
            let prev = &spectra[p - 1];
            let ov = prev.eig.vectors.adjoint() * &s.eig.vectors;
            let mut taken = vec![false; dim];
            let mut pairs: Vec<(usize, usize, f64)> = Vec::new();
            for (b, &i) in assign.iter().enumerate() {
                pairs.extend((0..dim).map(|j| (b, j, ov[(i, j)].norm_sqr())));
            }
            pairs.sort_by(|x, y| y.2.total_cmp(&x.2));
            let mut done = vec![false; n_levels];
            let mut next = assign.clone();
            for (b, j, o) in pairs {
                if done[b] || taken[j] {
                    continue;
                }
                done[b] = true;
                taken[j] = true;
                next[b] = j;
                min_overlap = min_overlap.min(o);
            }
            assign = next;
        }
        for (b, &i) in assign.iter().enumerate() {
            columns[b].push(s.eig.values[i] - s.eig.values[0]);
        }
    }
    let mut trace = SpectrumTrace::new("phi_e", "Phi0", grid.to_vec())?;
    for (b, col) in columns.into_iter().enumerate() {
        trace.push_column(&format!("branch_{b}"), "Hz", col)?;
    }
    Ok(TrackedBranches { trace, min_overlap })
}

#[derive(Debug, Clone, Serialize)]
pub struct DispersivePoint {
    pub delta_hz: f64,
    pub phi_e: f64,
    pub g_x_hz: f64,
    /// E(g,1) − E(g,0) − ω_m
    pub mech_shift_g: f64,
    /// E(e,1) − E(e,0) − ω_m
    pub mech_shift_e: f64,
    /// Qubit frequency with n phonons minus the value at n = 0, n = 1, 2.
    pub qubit_shift: [f64; 2],
}

/// Dispersive shifts versus Δ = ω_q − ω_m, set by moving the flux below
/// half flux quantum. Requires |Δ| > 5 g_x.
pub fn dispersive_points(template: &HybridModel, deltas: &[f64]) -> Result<Vec<DispersivePoint>> {
    let model = HybridModel { phonons: template.phonons.max(5), ..*template };
    let solver = HybridSolver::new(model)?;
    let basis = solver.basis();
    let sweet = basis.qubit_point(0.5)?.omega_q;
    deltas
        .par_iter()
        .map(|&delta| {
            let target = model.omega_m + delta;
            if target <= sweet {
                return Err(invalid(
                    "delta",
                    format!("ω_q = {target:.6e} Hz is below the half-flux minimum {sweet:.6e} Hz"),
                ));
            }
            let phi_e = basis.flux_for_qubit_frequency(target, 0.4, 0.5)?;
            let q = basis.qubit_point(phi_e)?;
            let g_x = model.g_phi * q.phi_ge.norm();
            if delta.abs() <= 5.0 * g_x {
                return Err(Error::NonDispersive { delta_hz: delta, limit_hz: 5.0 * g_x });
            }
            let s = solver.spectrum(phi_e)?;
            let e = |lvl: usize, n: usize| s.eig.values[s.dominant_state(model.index(lvl, n))];
            let w = model.omega_m;
            let qubit = |n: usize| e(1, n) - e(0, n);
            Ok(DispersivePoint {
                delta_hz: delta,
                phi_e,
                g_x_hz: g_x,
                mech_shift_g: e(0, 1) - e(0, 0) - w,
                mech_shift_e: e(1, 1) - e(1, 0) - w,
                qubit_shift: [qubit(1) - qubit(0), qubit(2) - qubit(0)],
            })
        })
        .collect()
}

pub fn dispersive_shifts(template: &HybridModel, deltas: &[f64]) -> Result<SpectrumTrace> {
    let pts = dispersive_points(template, deltas)?;
    let col = |f: &dyn Fn(&DispersivePoint) -> f64| pts.iter().map(f).collect::<Vec<f64>>();
    SpectrumTrace::new("delta", "Hz", deltas.to_vec())?
        .with_column("phi_e", "Phi0", col(&|p| p.phi_e))?
        .with_column("g_x", "Hz", col(&|p| p.g_x_hz))?
        .with_column("mech_shift_g", "Hz", col(&|p| p.mech_shift_g))?
        .with_column("mech_shift_e", "Hz", col(&|p| p.mech_shift_e))?
        .with_column("qubit_shift_1", "Hz", col(&|p| p.qubit_shift[0]))?
        .with_column("qubit_shift_2", "Hz", col(&|p| p.qubit_shift[1]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fluxonium::{CouplingSetup, MechanicalParams};

    fn template(b_field: f64) -> HybridModel {
        let setup = CouplingSetup { b_field, fluxonium: FluxoniumParams::default(), mech: MechanicalParams::default() };
        HybridModel { fluxonium: setup.fluxonium, levels: 5, phonons: 4, g_phi: setup.g_phi(), omega_m: 6e6, phi_e: 0.49938 }
    }

    #[test]
    fn uncoupled_spectrum_is_minkowski_sum() {
        let m = HybridModel { g_phi: 0.0, ..template(0.1) };
        let s = HybridSolver::new(m).unwrap().spectrum(0.3).unwrap();
        let mut sums: Vec<f64> = Vec::new();
        for e in &s.hamiltonian.qubit_energies {
            for n in 0..m.phonons {
                sums.push(e + n as f64 * m.omega_m);
            }
        }
        sums.sort_by(f64::total_cmp);
        for (a, b) in sums.iter().zip(&s.eig.values) {
            assert!((a - b).abs() <= 1e-9 * a.abs().max(m.omega_m));
        }
    }

    #[test]
    fn two_by_two_block_gap() {
        let g = 1e5;
        let phi = CMatrix::from_row_slice(2, 2, &[Complex64::new(0.0, 0.0), Complex64::new(1.7, 0.0), Complex64::new(1.7, 0.0), Complex64::new(0.0, 0.0)]);
        let h = joint_hamiltonian(&[0.0, 6e6], &phi, g, 6e6, 2);
        let e = hermitian_eig(&h).unwrap().values;
        // |e,0⟩ and |g,1⟩ are levels 1 and 2; |e,1⟩ has no partner in M=2
        assert!(((e[2] - e[1]) / (2.0 * g * 1.7) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn truncation_leak_flags_small_space() {
        let m = HybridModel { g_phi: 3e6, phonons: 2, ..template(0.1) };
        assert!(matches!(check_truncation(&m), Err(Error::Truncation { .. })));
        assert!(check_truncation(&template(0.1)).is_ok());
    }

    #[test]
    fn zero_coupling_crossing_closes() {
        let m = HybridModel { g_phi: 0.0, ..template(0.1) };
        let r = find_avoided_crossing(&m, (0.4990, 0.4998), (1, 0), (0, 1), 1e-11).unwrap();
        assert!(r.gap_hz < 1.0, "{}", r.gap_hz);
    }

    #[test]
    fn bracket_without_minimum_is_rejected() {
        let r = find_avoided_crossing(&template(0.1), (0.40, 0.45), (1, 0), (0, 1), 1e-9);
        assert!(matches!(r, Err(Error::NoMinimumInBracket { .. })));
    }

    #[test]
    fn uncoupled_dispersive_shifts_vanish() {
        let m = HybridModel { g_phi: 0.0, ..template(0.1) };
        let pts = dispersive_points(&m, &[-1.5e6, 2e6]).unwrap();
        for p in pts {
            assert!(p.mech_shift_g.abs() < 1e-6 && p.mech_shift_e.abs() < 1e-6);
            assert!(p.qubit_shift.iter().all(|v| v.abs() < 1e-6));
        }
    }

    #[test]
    fn non_dispersive_request_fails() {
        assert!(matches!(dispersive_points(&template(0.1), &[0.3e6]), Err(Error::NonDispersive { .. })));
    }
}
