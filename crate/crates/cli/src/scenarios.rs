//! The scenario catalog: one entry per reproduced figure.

use fluxmech_core::analysis::{fidelity_pure, log_negativity, measure_peaks, BipartiteState, FeatureKind, PeakReport};
use fluxmech_core::dynamics::cooling::{cooling_rates, cooling_trajectory, CoolingSetup};
use fluxmech_core::dynamics::lindblad::{default_ode_options, evolve, steady_state};
use fluxmech_core::dynamics::rabi::{contrast, default_rabi_options, first_minimum, rabi_simulation, CouplingForm, RabiSetup};
use fluxmech_core::dynamics::spectral::qubit_spectral_density;
use fluxmech_core::dynamics::embed;
use fluxmech_core::fluxonium::{
    check_convergence, coupling_rates, mech_frequency_shift, phase_matrix_elements, spectrum_sweep, uniform_grid,
    wavefunction_on_grid, CouplingSetup, FluxoniumBasis, FluxoniumParams, MechanicalParams, QubitPoint,
};
use fluxmech_core::hybrid::{
    dispersive_points, dispersive_shifts, find_avoided_crossing, hybrid_spectrum_sweep, track_branches, HybridModel,
};
use fluxmech_core::numerics::linalg::{annihilation, c, kron, CMatrix, CVector};
use fluxmech_core::semiclassical::{
    effective_mechanical_linewidth, probe_response, steady_state_zero_order, transverse_response, PumpProbeConfig,
    TransverseConfig,
};
use fluxmech_core::{Error, Result, SpectrumTrace, TAU};
use serde::Serialize;
use serde_json::{json, Value as Json};

use crate::config::{param, Dim, Kind, Param, Resolved};

const HZ: Kind = Kind::Quantity(Dim::Frequency);
const FLUX: Kind = Kind::Quantity(Dim::Flux);
const REAL: Kind = Kind::Quantity(Dim::Ratio);

pub enum Body {
    Csv(SpectrumTrace),
    Json(Json),
}

pub struct Artifact {
    pub file: String,
    pub body: Body,
}

fn csv(file: &str, trace: SpectrumTrace) -> Artifact {
    Artifact { file: format!("{file}.csv"), body: Body::Csv(trace) }
}

fn report(value: impl Serialize) -> Artifact {
    Artifact { file: "report.json".into(), body: Body::Json(serde_json::to_value(value).expect("report serializes")) }
}

pub struct Scenario {
    pub name: &'static str,
    pub figure: &'static str,
    pub summary: &'static str,
    pub schema: fn() -> Vec<Param>,
    pub run: fn(&Resolved) -> Result<Vec<Artifact>>,
}

pub fn catalog() -> Vec<Scenario> {
    vec![
        Scenario {
            name: "fluxonium-spectrum",
            figure: "Fig. 1b",
            summary: "fluxonium levels versus external flux",
            schema: spectrum_schema,
            run: run_spectrum,
        },
        Scenario {
            name: "wavefunctions",
            figure: "Fig. 1c",
            summary: "phase-space wavefunctions and potential",
            schema: wavefunction_schema,
            run: run_wavefunctions,
        },
        Scenario {
            name: "matrix-elements",
            figure: "Fig. 2a",
            summary: "phase operator matrix elements versus flux",
            schema: matrix_schema,
            run: run_matrix_elements,
        },
        Scenario {
            name: "couplings",
            figure: "Fig. 2b,c",
            summary: "g_phi, g_x and g_z versus flux",
            schema: couplings_schema,
            run: run_couplings,
        },
        Scenario { name: "eit", figure: "Fig. 3a", summary: "pump-probe transparency dip", schema: eit_schema, run: run_eit },
        Scenario {
            name: "mode-splitting",
            figure: "Fig. 3b",
            summary: "transverse probe response and thermal suppression",
            schema: splitting_schema,
            run: run_mode_splitting,
        },
        Scenario {
            name: "cooling",
            figure: "cooling figure",
            summary: "driven-qubit noise spectrum and sideband cooling",
            schema: cooling_schema,
            run: run_cooling,
        },
        Scenario {
            name: "hybrid-spectrum",
            figure: "Fig. 4",
            summary: "joint qubit-phonon spectrum and avoided crossings",
            schema: hybrid_schema,
            run: run_hybrid,
        },
        Scenario {
            name: "rabi",
            figure: "Rabi figure",
            summary: "resonant qubit-phonon exchange with decoherence",
            schema: rabi_schema,
            run: run_rabi,
        },
        Scenario {
            name: "entanglement",
            figure: "Fig. 6",
            summary: "log-negativity and state fidelities",
            schema: entanglement_schema,
            run: run_entanglement,
        },
        Scenario {
            name: "dispersive",
            figure: "App. B figure",
            summary: "dispersive shifts and phonon-resolved gaps",
            schema: dispersive_schema,
            run: run_dispersive,
        },
    ]
}

pub fn find(name: &str) -> Option<Scenario> {
    catalog().into_iter().find(|s| s.name == name)
}

fn bad(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}

fn grid(lo: f64, hi: f64, points: usize, key: &'static str) -> Result<Vec<f64>> {
    if points < 2 {
        return Err(bad(key, "need at least 2 points"));
    }
    if !(hi > lo) {
        return Err(bad(key, format!("empty range [{lo}, {hi}]")));
    }
    Ok(uniform_grid(lo, hi, points))
}

fn fluxonium_keys() -> Vec<Param> {
    vec![
        param("e_j", HZ, "5.5 GHz", "Josephson energy E_J/h"),
        param("e_c", HZ, "0.5 GHz", "charging energy E_C/h"),
        param("e_l", HZ, "0.2 GHz", "inductive energy E_L/h"),
        param("basis_size", Kind::Count, "120", "oscillator basis states"),
        param("n_levels", Kind::Count, "6", "retained fluxonium levels"),
    ]
}

fn mechanical_keys(gamma_m: &'static str) -> Vec<Param> {
    vec![
        param("omega_m", HZ, "6 MHz", "mechanical frequency"),
        param("gamma_m", HZ, gamma_m, "mechanical damping"),
        param("mass", Kind::Quantity(Dim::Mass), "0.75 pg", "effective mass"),
        param("length", Kind::Quantity(Dim::Length), "40 um", "suspended arm length"),
        param("b_field", Kind::Quantity(Dim::Field), "100 mT", "in-plane magnetic field"),
    ]
}

fn with(mut base: Vec<Param>, extra: impl IntoIterator<Item = Param>) -> Vec<Param> {
    base.extend(extra);
    base
}

fn fluxonium(r: &Resolved) -> FluxoniumParams {
    FluxoniumParams {
        e_j: r.num("e_j"),
        e_c: r.num("e_c"),
        e_l: r.num("e_l"),
        basis_size: r.count("basis_size"),
        n_levels: r.count("n_levels"),
    }
}

fn coupling(r: &Resolved) -> Result<CouplingSetup> {
    let mech = MechanicalParams {
        omega_m: r.num("omega_m"),
        gamma_m: r.num("gamma_m"),
        mass: r.num("mass"),
        length: r.num("length"),
        n_bath: 0.0,
    };
    mech.validate()?;
    let p = fluxonium(r);
    p.validate()?;
    Ok(CouplingSetup { b_field: r.num("b_field"), fluxonium: p, mech })
}

fn peaks_or_reason(trace: &SpectrumTrace, column: &str, kind: FeatureKind) -> std::result::Result<PeakReport, String> {
    measure_peaks(trace, column, kind).map_err(|e| e.to_string())
}

// fluxonium-spectrum

fn spectrum_schema() -> Vec<Param> {
    with(
        fluxonium_keys(),
        [
            param("phi_min", FLUX, "0", "first flux point"),
            param("phi_max", FLUX, "1", "last flux point"),
            param("points", Kind::Count, "501", "flux points"),
        ],
    )
}

fn run_spectrum(r: &Resolved) -> Result<Vec<Artifact>> {
    let p = fluxonium(r);
    let g = grid(r.num("phi_min"), r.num("phi_max"), r.count("points"), "points")?;
    let trace = spectrum_sweep(&p, &g)?;
    let basis = FluxoniumBasis::new(p)?;
    let half = basis.eigensystem(0.5)?.values;
    let zero = basis.eigensystem(0.0004)?.values;
    let convergence = [0.0, 0.0004, 0.3, 0.5].map(|x| check_convergence(&p, x)).into_iter().collect::<Result<Vec<_>>>()?;
    Ok(vec![
        csv("spectrum", trace),
        report(json!({
            "half_flux_qubit_splitting_hz": half[1] - half[0],
            "near_zero_flux": { "phi_e": 0.0004, "e_f_minus_e_g_hz": zero[2] - zero[0], "e_f_minus_e_e_hz": zero[2] - zero[1] },
            "convergence": convergence,
        })),
    ])
}

// wavefunctions

fn wavefunction_schema() -> Vec<Param> {
    with(
        fluxonium_keys(),
        [
            param("phi_e", FLUX, "0.5", "external flux"),
            param("levels", Kind::Count, "4", "number of wavefunctions"),
            param("phase_span", REAL, "10", "phase grid covers [-span, span]"),
            param("points", Kind::Count, "801", "phase grid points"),
        ],
    )
}

fn run_wavefunctions(r: &Resolved) -> Result<Vec<Artifact>> {
    let p = fluxonium(r);
    let span = r.num("phase_span");
    let g = grid(-span, span, r.count("points"), "phase_span")?;
    let phi_e = r.num("phi_e");
    let mut trace: Option<SpectrumTrace> = None;
    let mut energies = Vec::new();
    for level in 0..r.count("levels") {
        let w = wavefunction_on_grid(&p, phi_e, level, &g)?;
        let t = trace.get_or_insert(SpectrumTrace::new("phi", "rad", g.clone())?.with_column("potential", "Hz", w.potential.clone())?);
        t.push_column(&format!("re_psi_{level}"), "1", w.psi.iter().map(|z| z.re).collect())?;
        t.push_column(&format!("im_psi_{level}"), "1", w.psi.iter().map(|z| z.im).collect())?;
        t.set_meta(&format!("energy_{level}_hz"), w.energy);
        energies.push(w.energy);
    }
    let trace = trace.ok_or_else(|| bad("levels", "must be at least 1"))?;
    Ok(vec![csv("wavefunctions", trace), report(json!({ "phi_e": phi_e, "energies_hz": energies }))])
}

// matrix-elements

fn matrix_schema() -> Vec<Param> {
    with(
        fluxonium_keys(),
        [
            param("phi_min", FLUX, "0", "first flux point"),
            param("phi_max", FLUX, "1", "last flux point"),
            param("points", Kind::Count, "201", "flux points"),
            param("matrix_levels", Kind::Count, "4", "levels in the phase-operator table"),
            param("report_phi_e", FLUX, "0.3", "flux of the tabulated qubit point"),
        ],
    )
}

fn qubit_json(q: &QubitPoint) -> Json {
    json!({ "phi_e": q.phi_e, "omega_q_hz": q.omega_q, "phi_gg": q.phi_gg, "phi_ee": q.phi_ee, "phi_ge": q.phi_ge, "abs_phi_ge": q.phi_ge.norm() })
}

fn run_matrix_elements(r: &Resolved) -> Result<Vec<Artifact>> {
    let p = fluxonium(r);
    let g = grid(r.num("phi_min"), r.num("phi_max"), r.count("points"), "points")?;
    let k = r.count("matrix_levels");
    let table = phase_matrix_elements(&p, &g, k)?;
    let mut trace = SpectrumTrace::new("phi_e", "Phi0", g.clone())?;
    for i in 0..k {
        for j in i..k {
            let name = if i == j { format!("phi_{i}{j}") } else { format!("abs_phi_{i}{j}") };
            let values = (0..g.len())
                .map(|n| {
                    let z = table.phi(n, i, j);
                    if i == j { z.re } else { z.norm() }
                })
                .collect();
            trace.push_column(&name, "1", values)?;
        }
    }
    let q = FluxoniumBasis::new(p)?.qubit_point(r.num("report_phi_e"))?;
    Ok(vec![csv("matrix_elements", trace), report(json!({ "qubit_point": qubit_json(&q) }))])
}

// couplings

fn couplings_schema() -> Vec<Param> {
    with(
        with(fluxonium_keys(), mechanical_keys("5 Hz")),
        [
            param("phi_min", FLUX, "0", "first flux point"),
            param("phi_max", FLUX, "1", "last flux point"),
            param("points", Kind::Count, "201", "flux points"),
        ],
    )
}

fn run_couplings(r: &Resolved) -> Result<Vec<Artifact>> {
    let setup = coupling(r)?;
    let g = grid(r.num("phi_min"), r.num("phi_max"), r.count("points"), "points")?;
    let trace = coupling_rates(&setup, &g)?;
    let g_phi = setup.g_phi();
    let shift = mech_frequency_shift(&setup);
    let per_mt = CouplingSetup { b_field: 1e-3, ..setup }.g_phi();
    Ok(vec![
        csv("couplings", trace),
        report(json!({
            "g_phi_hz": g_phi,
            "g_phi_per_mT_hz": per_mt,
            "x0_m": setup.mech.x0(),
            "mech_frequency_shift_hz": shift,
            "mech_shift_over_omega_m": shift / setup.mech.omega_m,
        })),
    ])
}

// eit

fn eit_schema() -> Vec<Param> {
    with(
        fluxonium_keys(),
        [
            param("phi_e", FLUX, "0.3", "operating flux"),
            param("omega_m", HZ, "4 MHz", "mechanical frequency"),
            param("gamma_m", HZ, "5 Hz", "mechanical damping"),
            param("gamma", HZ, "2 MHz", "qubit relaxation"),
            param("gamma_phi", HZ, "0.9 MHz", "qubit dephasing"),
            param("n_q", REAL, "0", "qubit bath occupation"),
            param("g_phi", HZ, "60 kHz", "bare flux coupling"),
            param("drive", HZ, "5 kHz", "pump amplitude"),
            param("probe", HZ, "5 kHz", "probe amplitude"),
            param("detuning", HZ, "-4 MHz", "pump detuning from the qubit"),
            param("span", HZ, "250 Hz", "half width of the fine grid around omega_m"),
            param("points", Kind::Count, "4001", "fine grid points"),
            param("wide_span", HZ, "2 MHz", "half width of the overview grid"),
            param("wide_points", Kind::Count, "2001", "overview grid points"),
        ],
    )
}

fn run_eit(r: &Resolved) -> Result<Vec<Artifact>> {
    let q = FluxoniumBasis::new(fluxonium(r))?.qubit_point(r.num("phi_e"))?;
    let cfg = PumpProbeConfig {
        omega_m: r.num("omega_m"),
        gamma_m: r.num("gamma_m"),
        gamma: r.num("gamma"),
        gamma_phi: r.num("gamma_phi"),
        n_q: r.num("n_q"),
        g_phi: r.num("g_phi"),
        phi_gg: q.phi_gg,
        phi_ee: q.phi_ee,
        drive: r.num("drive"),
        probe: r.num("probe"),
        detuning: r.num("detuning"),
    };
    let zero = steady_state_zero_order(&cfg)?;
    let gamma_eff = effective_mechanical_linewidth(&cfg, &zero);
    let w = cfg.omega_m;
    let fine = probe_response(&cfg, &grid(w - r.num("span"), w + r.num("span"), r.count("points"), "span")?)?;
    let wide = probe_response(&cfg, &grid(w - r.num("wide_span"), w + r.num("wide_span"), r.count("wide_points"), "wide_span")?)?;
    let dip = peaks_or_reason(&fine, "amplitude", FeatureKind::Dips);
    let out = report(json!({
        "qubit_point": qubit_json(&q),
        "weak_drive": cfg.weak_drive(),
        "zero_order": zero,
        "effective_mechanical_linewidth_hz": gamma_eff,
        "dip": match &dip {
            Ok(p) => json!({ "offset_from_omega_m_hz": p.dominant().location - w, "feature": p.dominant(), "all": p }),
            Err(e) => json!({ "error": e }),
        },
    }));
    Ok(vec![csv("response_fine", fine), csv("response_wide", wide), out])
}

// mode-splitting

fn splitting_schema() -> Vec<Param> {
    with(
        fluxonium_keys(),
        [
            param("phi_e", FLUX, "0.5", "operating flux"),
            param("g_phi", HZ, "60 kHz", "bare flux coupling"),
            param("omega_q", HZ, "4 MHz", "qubit frequency"),
            param("omega_m", HZ, "4 MHz", "mechanical frequency"),
            param("gamma_q", HZ, "2 kHz", "qubit coherence decay"),
            param("gamma", HZ, "1 kHz", "qubit relaxation"),
            param("gamma_m", HZ, "5 Hz", "mechanical damping"),
            param("probe", HZ, "1 kHz", "probe amplitude"),
            param("occupations", Kind::List(Dim::Ratio), "0, 78", "qubit bath occupations"),
            param("span_gx", REAL, "2.5", "grid half width in units of g_x"),
            param("points", Kind::Count, "9001", "probe grid points"),
        ],
    )
}

fn run_mode_splitting(r: &Resolved) -> Result<Vec<Artifact>> {
    let q = FluxoniumBasis::new(fluxonium(r))?.qubit_point(r.num("phi_e"))?;
    let g_x = r.num("g_phi") * q.phi_ge.norm();
    let span = r.num("span_gx") * g_x;
    let g = grid(-span, span, r.count("points"), "span_gx")?;
    let mut trace = SpectrumTrace::new("delta_p", "Hz", g.clone())?;
    trace.set_meta("g_x_hz", g_x);
    let mut rows = Vec::new();
    for &n_q in r.list("occupations") {
        let cfg = TransverseConfig {
            omega_q: r.num("omega_q"),
            omega_m: r.num("omega_m"),
            g_x,
            gamma_q: r.num("gamma_q"),
            gamma: r.num("gamma"),
            n_q,
            gamma_m: r.num("gamma_m"),
            probe: r.num("probe"),
        };
        let t = transverse_response(&cfg, &g)?;
        let amp = t.column("amplitude").expect("amplitude column").to_vec();
        let peak = amp.iter().cloned().fold(0.0, f64::max);
        let peaks = peaks_or_reason(&t, "amplitude", FeatureKind::Peaks);
        trace.push_column(&format!("amplitude_nq_{n_q}"), "1", amp)?;
        rows.push(json!({
            "n_q": n_q,
            "weak_probe": cfg.weak_probe(),
            "max_amplitude": peak,
            "peaks": match peaks { Ok(p) => serde_json::to_value(p).expect("serializes"), Err(e) => json!({ "error": e }) },
        }));
    }
    Ok(vec![csv("response", trace), report(json!({ "g_x_hz": g_x, "two_g_x_hz": 2.0 * g_x, "occupations": rows }))])
}

// cooling

fn cooling_schema() -> Vec<Param> {
    with(
        with(fluxonium_keys(), mechanical_keys("5 Hz")),
        [
            param("phi_e", FLUX, "0.3", "operating flux"),
            param("gamma", HZ, "2 MHz", "qubit relaxation"),
            param("gamma_phi", HZ, "0.9 MHz", "qubit dephasing"),
            param("n_q", REAL, "0", "qubit bath occupation"),
            param("drive_ratio", REAL, "0.89", "drive Rabi frequency over omega_m"),
            param("n_m", REAL, "30", "mechanical bath occupation"),
            param("n0", REAL, "30", "initial phonon number"),
            param("spectrum_span", HZ, "12 MHz", "noise spectrum half width"),
            param("spectrum_points", Kind::Count, "2401", "noise spectrum points"),
            param("duration_tau", REAL, "20", "trajectory length in relaxation times"),
            param("trajectory_points", Kind::Count, "201", "trajectory samples"),
            param("full_phonons", Kind::Count, "6", "Fock states of the full-model check, 0 disables it"),
            param("full_n0", Kind::Count, "3", "initial Fock state of the full-model check"),
            param("full_points", Kind::Count, "21", "full-model samples over five relaxation times"),
        ],
    )
}

fn run_cooling(r: &Resolved) -> Result<Vec<Artifact>> {
    let cs = coupling(r)?;
    let q = FluxoniumBasis::new(cs.fluxonium)?.qubit_point(r.num("phi_e"))?;
    let g_z = cs.g_phi() * (q.phi_ee - q.phi_gg) / 2.0;
    let (omega_m, gamma_m, n_m) = (cs.mech.omega_m, cs.mech.gamma_m, r.num("n_m"));
    let setup = CoolingSetup {
        omega_m,
        g_z,
        gamma: r.num("gamma"),
        gamma_phi: r.num("gamma_phi"),
        n_q: r.num("n_q"),
        drive: 0.0,
        detuning: 0.0,
        gamma_m,
        n_m,
    }
    .optimized(r.num("drive_ratio"));
    let qm = setup.qubit_model()?;
    let span = r.num("spectrum_span");
    let sd = qubit_spectral_density(&qm, &grid(-span, span, r.count("spectrum_points"), "spectrum_span")?)?;
    let spectrum = sd.to_trace()?;
    let peaks = peaks_or_reason(&spectrum, "re_s", FeatureKind::Peaks);
    let rates = cooling_rates(&qm, g_z, omega_m, gamma_m, n_m)?;
    let tau = 1.0 / (TAU * rates.relaxation_rate());
    if !(tau > 0.0) {
        return Err(Error::InvalidRegime(format!("no cooling: net relaxation rate {:.3e} Hz", rates.relaxation_rate())));
    }
    let n0 = r.num("n0");
    let times = grid(0.0, r.num("duration_tau") * tau, r.count("trajectory_points"), "duration_tau")?;
    let n_t = cooling_trajectory(&rates, n0, &times)?;
    let closed: Vec<f64> = times.iter().map(|&t| rates.occupation(n0, t)).collect();
    let trajectory = SpectrumTrace::new("t", "s", times)?
        .with_column("n_rate_equation", "1", n_t)?
        .with_column("n_closed_form", "1", closed)?;

    let mut out = vec![csv("spectral_density", spectrum), csv("trajectory", trajectory)];
    let m = r.count("full_phonons");
    let mut full_summary = Json::Null;
    if m > 0 {
        let k = r.count("full_n0");
        if k >= m {
            return Err(bad("full_n0", format!("Fock state {k} outside {m} retained states")));
        }
        let full = setup.full_model(m)?;
        let qss = steady_state(&qm)?;
        let fock = CMatrix::from_fn(m, m, |i, j| c(if i == k && j == k { 1.0 } else { 0.0 }, 0.0));
        let checkpoints = grid(0.0, 5.0 * tau, r.count("full_points"), "full_points")?;
        let ev = evolve(&full, &kron(&qss.rho, &fock), &checkpoints, &default_ode_options())?;
        let b = annihilation(m);
        let n_full = ev.expectation(&embed(&(b.adjoint() * &b), 1, &[2, m]));
        let n_red: Vec<f64> = checkpoints.iter().map(|&t| rates.occupation(k as f64, t)).collect();
        let worst = n_full.iter().zip(&n_red).skip(1).map(|(f, r)| (f / r - 1.0).abs()).fold(0.0, f64::max);
        full_summary = json!({ "phonons": m, "n0": k, "max_relative_deviation": worst, "physical": ev.diagnostics.physical() });
        out.push(csv(
            "full_model",
            SpectrumTrace::new("t", "s", checkpoints)?.with_column("n_full", "1", n_full)?.with_column("n_reduced", "1", n_red)?,
        ));
    }
    out.push(report(json!({
        "g_z_hz": g_z,
        "drive_hz": setup.drive,
        "detuning_hz": setup.detuning,
        "rates": rates,
        "relaxation_time_s": tau,
        "spectrum_peaks": match peaks { Ok(p) => serde_json::to_value(p).expect("serializes"), Err(e) => json!({ "error": e }) },
        "max_solve_residual": sd.max_solve_residual,
        "full_model": full_summary,
    })));
    Ok(out)
}

// hybrid-spectrum

fn hybrid_keys() -> Vec<Param> {
    vec![
        param("levels", Kind::Count, "5", "fluxonium levels in the joint space"),
        param("phonons", Kind::Count, "6", "Fock states"),
        param("crossing_lo", FLUX, "0.4990", "lower edge of the crossing bracket"),
        param("crossing_hi", FLUX, "0.4998", "upper edge of the crossing bracket"),
    ]
}

fn hybrid_model(r: &Resolved, phi_e: f64) -> Result<HybridModel> {
    let cs = coupling(r)?;
    let m = HybridModel {
        fluxonium: cs.fluxonium,
        levels: r.count("levels"),
        phonons: r.count("phonons"),
        g_phi: cs.g_phi(),
        omega_m: cs.mech.omega_m,
        phi_e,
    };
    m.validate()?;
    Ok(m)
}

fn crossings(model: &HybridModel, r: &Resolved) -> Result<Json> {
    let bracket = (r.num("crossing_lo"), r.num("crossing_hi"));
    let one = find_avoided_crossing(model, bracket, (1, 0), (0, 1), 1e-9)?;
    let two = find_avoided_crossing(model, bracket, (1, 1), (0, 2), 1e-9)?;
    let q = FluxoniumBasis::new(model.fluxonium)?.qubit_point(one.phi_e)?;
    Ok(json!({
        "single_phonon": one,
        "two_phonon": two,
        "gap_ratio": two.gap_hz / one.gap_hz,
        "two_g_x_at_crossing_hz": 2.0 * model.g_phi * q.phi_ge.norm(),
    }))
}

fn hybrid_schema() -> Vec<Param> {
    with(
        with(with(fluxonium_keys(), mechanical_keys("5 Hz")), hybrid_keys()),
        [
            param("phi_min", FLUX, "0.499", "first flux point"),
            param("phi_max", FLUX, "0.5", "last flux point"),
            param("points", Kind::Count, "201", "flux points before refinement"),
            param("branches", Kind::Count, "8", "joint levels written"),
        ],
    )
}

fn element_table(basis: &FluxoniumBasis, phi_e: f64, k: usize) -> Result<Json> {
    let e = basis.eigensystem(phi_e)?;
    let m = e.project(&basis.phi, k);
    let rows: Vec<Vec<[f64; 2]>> = (0..k).map(|i| (0..k).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect();
    Ok(json!({ "phi_e": phi_e, "phi_ij": rows, "levels_hz": e.values[..k].iter().map(|v| v - e.values[0]).collect::<Vec<_>>() }))
}

fn run_hybrid(r: &Resolved) -> Result<Vec<Artifact>> {
    let (lo, hi) = (r.num("phi_min"), r.num("phi_max"));
    let model = hybrid_model(r, lo)?;
    let g = grid(lo, hi, r.count("points"), "points")?;
    let n = r.count("branches");
    let mut sorted = hybrid_spectrum_sweep(&model, &g, n)?;
    let tracked = track_branches(&model, &g, n)?;
    let basis = FluxoniumBasis::new(model.fluxonium)?;
    let ef = basis.eigensystem(0.0004)?.values;
    sorted.set_meta("e_f_minus_e_g_at_0.0004_hz", ef[2] - ef[0]);
    let tables = [0.0004, 0.49938].map(|x| element_table(&basis, x, model.levels)).into_iter().collect::<Result<Vec<_>>>()?;
    let out = report(json!({
        "g_phi_hz": model.g_phi,
        "crossings": crossings(&model, r)?,
        "near_zero_flux": { "phi_e": 0.0004, "e_f_minus_e_g_hz": ef[2] - ef[0], "e_f_minus_e_e_hz": ef[2] - ef[1] },
        "min_branch_overlap": tracked.min_overlap,
        "matrix_element_tables": tables,
    }));
    Ok(vec![csv("spectrum", sorted), csv("branches", tracked.trace), out])
}

// rabi and entanglement

fn resonant_keys() -> Vec<Param> {
    vec![
        param("coupling", Kind::Choice(&["exchange", "full"]), "exchange", "interaction picture"),
        param("phonons", Kind::Count, "4", "Fock states"),
        param("detuning", HZ, "0 Hz", "qubit minus mechanical frequency"),
    ]
}

fn rabi_base(r: &Resolved, drive: f64) -> Result<RabiSetup> {
    let cs = coupling(r)?;
    let basis = FluxoniumBasis::new(cs.fluxonium)?;
    let x = basis.flux_for_qubit_frequency(cs.mech.omega_m + r.num("detuning"), 0.4, 0.5)?;
    Ok(RabiSetup {
        qubit: basis.qubit_point(x)?,
        g_phi: cs.g_phi(),
        omega_m: cs.mech.omega_m,
        phonons: r.count("phonons"),
        coupling: if r.text("coupling") == "full" { CouplingForm::Full } else { CouplingForm::Exchange },
        drive,
        gamma: 0.0,
        gamma_phi: 0.0,
        n_q: 0.0,
        gamma_m: 0.0,
        n_m: 0.0,
    })
}

fn rabi_schema() -> Vec<Param> {
    with(
        with(with(fluxonium_keys(), mechanical_keys("5 Hz")), resonant_keys()),
        [
            param("drive", HZ, "10 kHz", "qubit drive Rabi frequency"),
            param("decays", Kind::List(Dim::Frequency), "0.1, 0.5, 1 kHz", "relaxation and dephasing rates"),
            param("n_q", REAL, "50", "qubit bath occupation in the lossy runs"),
            param("n_m", REAL, "50", "mechanical bath occupation in the lossy runs"),
            param("t_end", Kind::Quantity(Dim::Time), "15 us", "run length"),
            param("points", Kind::Count, "1501", "time samples"),
        ],
    )
}

fn run_rabi(r: &Resolved) -> Result<Vec<Artifact>> {
    let s = rabi_base(r, r.num("drive"))?;
    let t1 = s.exchange_time();
    let t_end = r.num("t_end");
    let times = grid(0.0, t_end, r.count("points"), "t_end")?;
    let decays = r.list("decays").to_vec();
    let setups: Vec<RabiSetup> = std::iter::once(s)
        .chain(decays.iter().map(|&g| RabiSetup {
            gamma: g,
            gamma_phi: g,
            n_q: r.num("n_q"),
            gamma_m: r.num("gamma_m"),
            n_m: r.num("n_m"),
            ..s
        }))
        .collect();
    use rayon::prelude::*;
    let runs = setups.par_iter().map(|s| rabi_simulation(s, &times, &default_rabi_options())).collect::<Result<Vec<_>>>()?;
    let mut trace = SpectrumTrace::new("t", "s", times.clone())?;
    trace.push_column("pe_lossless", "1", runs[0].excited_population.clone())?;
    let half = times.len() / 2;
    let mut lossy = Vec::new();
    for (g, run) in decays.iter().zip(&runs[1..]) {
        trace.push_column(&format!("pe_decay_{g}"), "1", run.excited_population.clone())?;
        lossy.push(json!({
            "decay_hz": g,
            "late_contrast": contrast(&times[half..], &run.excited_population[half..], t_end),
            "physical": run.evolution.diagnostics.physical(),
        }));
    }
    let pe = &runs[0].excited_population;
    let first = first_minimum(&times, pe);
    Ok(vec![
        csv("rabi", trace),
        report(json!({
            "qubit_point": qubit_json(&s.qubit),
            "g_x_hz": s.g_x(),
            "exchange_time_s": t1,
            "first_minimum": first.map(|(t, v)| json!({ "t_s": t, "p_e": v })),
            "contrast_first_four_exchange_times": contrast(&times, pe, 4.0 * t1),
            "lossy": lossy,
        })),
    ])
}

fn entanglement_schema() -> Vec<Param> {
    with(
        with(with(fluxonium_keys(), mechanical_keys("0 Hz")), resonant_keys()),
        [
            param("detunings_gx", Kind::List(Dim::Ratio), "0, 3, -3", "extra qubit detuning below omega_m in units of g_x"),
            param("gamma", HZ, "0 Hz", "qubit relaxation"),
            param("gamma_phi", HZ, "0 Hz", "qubit dephasing"),
            param("periods", REAL, "2", "run length in exchange periods"),
            param("points", Kind::Count, "801", "time samples"),
        ],
    )
}

fn run_entanglement(r: &Resolved) -> Result<Vec<Artifact>> {
    let base = rabi_base(r, 0.0)?;
    let base = RabiSetup { gamma: r.num("gamma"), gamma_phi: r.num("gamma_phi"), gamma_m: r.num("gamma_m"), ..base };
    let period = 2.0 * base.exchange_time();
    let times = grid(0.0, r.num("periods") * period, r.count("points"), "periods")?;
    let basis = FluxoniumBasis::new(fluxonium(r))?;
    let gx = base.g_x();
    let mut trace = SpectrumTrace::new("t", "s", times.clone())?;
    let mut rows = Vec::new();
    for &k in r.list("detunings_gx") {
        let s = if k == 0.0 {
            base
        } else {
            let x = basis.flux_for_qubit_frequency(base.qubit.omega_q - k * gx, 0.4, 0.5)?;
            RabiSetup { qubit: basis.qubit_point(x)?, ..base }
        };
        let run = rabi_simulation(&s, &times, &default_rabi_options())?;
        let states =
            run.evolution.states.into_iter().map(|rho| BipartiteState::new(rho, (2, s.phonons))).collect::<Result<Vec<_>>>()?;
        let en: Vec<f64> = states.iter().map(log_negativity).collect();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let psi = |sign: f64| -> CVector { s.ket(0, 1) * c(h, 0.0) + s.ket(1, 0) * c(0.0, sign * h) };
        let targets = [("e0", s.ket(1, 0)), ("g1", s.ket(0, 1)), ("psi_plus", psi(1.0)), ("psi_minus", psi(-1.0))];
        let (imax, emax) = en.iter().enumerate().fold((0, f64::NEG_INFINITY), |a, (i, &e)| if e > a.1 { (i, e) } else { a });
        trace.push_column(&format!("e_n_{k}"), "1", en)?;
        for (name, t) in &targets {
            let f = states.iter().map(|st| fidelity_pure(st, t)).collect::<Result<Vec<_>>>()?;
            trace.push_column(&format!("f_{name}_{k}"), "1", f)?;
        }
        rows.push(json!({
            "detuning_gx": k,
            "qubit_detuning_hz": s.detuning(),
            "max_log_negativity": emax,
            "time_of_max_s": times[imax],
            "physical": run.evolution.diagnostics.physical(),
        }));
    }
    Ok(vec![csv("entanglement", trace), report(json!({ "g_x_hz": gx, "period_s": period, "runs": rows }))])
}

// dispersive

fn dispersive_schema() -> Vec<Param> {
    with(
        with(with(fluxonium_keys(), mechanical_keys("5 Hz")), hybrid_keys()),
        [param("deltas", Kind::List(Dim::Frequency), "-2, 2, 3, 5, 10, 20 MHz", "qubit minus mechanical frequency")],
    )
}

fn run_dispersive(r: &Resolved) -> Result<Vec<Artifact>> {
    let model = hybrid_model(r, 0.49938)?;
    let mut deltas = r.list("deltas").to_vec();
    deltas.sort_by(f64::total_cmp);
    deltas.dedup();
    let trace = dispersive_shifts(&model, &deltas)?;
    let points = dispersive_points(&model, &deltas)?;
    let ratios: Vec<f64> = points.iter().map(|p| p.qubit_shift[1] / p.qubit_shift[0]).collect();
    Ok(vec![
        csv("shifts", trace),
        report(json!({ "points": points, "two_over_one_phonon_ratio": ratios, "crossings": crossings(&model, r)? })),
    ])
}
