use fluxmech_core::semiclassical::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

fn fig3a() -> PumpProbeConfig {
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

fn compare(cfg: &PumpProbeConfig, deltas: &[f64], settle: f64, window: f64) {
    let zero = steady_state_zero_order(cfg).unwrap();
    let errs: Vec<(f64, f64)> = deltas
        .par_iter()
        .map(|&d| {
            let lin = sideband_response(cfg, &zero, d).unwrap().state.sm;
            let ode = integrate_probe_response(cfg, &zero, d, settle, window).unwrap();
            (d, (ode - lin).norm() / lin.norm())
        })
        .collect();
    for (d, e) in errs {
        assert!(e < 1e-2, "delta {d}: relative difference {e}");
    }
}

#[test]
fn sidebands_match_integration_off_resonance() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut deltas = Vec::new();
    while deltas.len() < 20 {
        let d: f64 = rng.gen_range(2e6..6e6);
        if (d - 4e6).abs() > 50e3 {
            deltas.push(d);
        }
    }
    compare(&fig3a(), &deltas, 20e-6, 1e-3);
}

#[test]
fn sidebands_match_integration_near_mechanics() {
    let cfg = PumpProbeConfig { gamma_m: 20e3, g_phi: 600e3, ..fig3a() };
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let deltas: Vec<f64> = (0..6).map(|_| 4e6 + rng.gen_range(-60e3..60e3)).collect();
    compare(&cfg, &deltas, 300e-6, 1e-3);
}

#[test]
fn transverse_closed_form_matches_mean_field() {
    for n_q in [0.0, 78.0] {
        let cfg = TransverseConfig { omega_q: 4e6, omega_m: 4e6, g_x: 180e3, gamma_q: 2e3, gamma: 1e3, n_q, gamma_m: 5.0, probe: 1.0 };
        assert!(cfg.weak_probe());
        let pts = [-250e3, -180e3, -40e3, -12e3, 0.0, 3e3, 14e3, 180e3, 400e3];
        pts.par_iter().for_each(|&d| {
            let lin = cfg.coherence(cfg.omega_q + d);
            let ode = integrate_transverse(&cfg, cfg.omega_q + d, 20e-3).unwrap();
            let e = (ode - lin).norm() / lin.norm();
            assert!(e < 1e-2, "n_q {n_q} delta {d}: {e}");
        });
    }
}
