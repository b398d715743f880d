//! One-sided fluctuation spectra by quantum regression:
//! `S(ω) = ∫_0^∞ dτ e^{iωτ} ⟨δA(τ) δB(0)⟩ = Tr[A · (−(L + iω)⁻¹)(δB ρ_ss)]`.

use num_complex::Complex64;
use rayon::prelude::*;

use super::lindblad::{build_liouvillian, steady_state, LindbladModel};
use crate::error::{Error, Result};
use crate::numerics::linalg::{max_abs, solve_linear, trace_product, unvectorize, vectorize, CMatrix, CVector};
use crate::trace::SpectrumTrace;
use crate::TAU;

#[derive(Debug, Clone)]
pub struct SpectralDensity {
    pub freqs_hz: Vec<f64>,
    /// S at each ω = 2πf, in seconds.
    pub values: Vec<Complex64>,
    pub mean_a: f64,
    pub mean_b: f64,
    /// ⟨δA δB⟩_ss.
    pub covariance: Complex64,
    pub max_solve_residual: f64,
    pub steady_state: CMatrix,
}

impl SpectralDensity {
    pub fn to_trace(&self) -> Result<SpectrumTrace> {
        let mut t = SpectrumTrace::new("omega", "Hz", self.freqs_hz.clone())?
            .with_column("re_s", "s", self.values.iter().map(|z| z.re).collect())?
            .with_column("im_s", "s", self.values.iter().map(|z| z.im).collect())?;
        t.set_meta("covariance", self.covariance.re);
        Ok(t)
    }

    /// Linear interpolation of S at an arbitrary frequency inside the grid.
    pub fn at(&self, f: f64) -> Option<Complex64> {
        let i = self.freqs_hz.windows(2).position(|w| w[0] <= f && f <= w[1])?;
        let (f0, f1) = (self.freqs_hz[i], self.freqs_hz[i + 1]);
        let w = (f - f0) / (f1 - f0);
        Some(self.values[i] * (1.0 - w) + self.values[i + 1] * w)
    }
}

pub fn correlation_spectrum(model: &LindbladModel, a: &CMatrix, b: &CMatrix, freqs_hz: &[f64]) -> Result<SpectralDensity> {
    let n = model.dim();
    if a.shape() != (n, n) || b.shape() != (n, n) {
        return Err(Error::DimensionMismatch("observable dimension".into()));
    }
    let ss = steady_state(model)?;
    let rho = &ss.rho;
    let l = build_liouvillian(model)?;
    let mean_a = trace_product(a, rho).re;
    let mean_b = trace_product(b, rho).re;
    let db = b - CMatrix::identity(n, n) * Complex64::new(mean_b, 0.0);
    let x = vectorize(&(&db * rho));
    let covariance = trace_product(&(a * &db), rho) - Complex64::new(mean_a, 0.0) * trace_product(&db, rho);
    let lnorm = l.norm();
    let lscale = max_abs(&l).max(1.0);

    let solved: Vec<(Complex64, f64)> = freqs_hz
        .par_iter()
        .map(|&f| {
            let w = TAU * f;
            let mut m = l.clone();
            let mut rhs: CVector = -&x;
            if w.abs() <= 1e-9 * lnorm {
                // L is singular here; Tr y = 0 selects the decaying solution.
                for j in 0..n * n {
                    m[(0, j)] = Complex64::new(0.0, 0.0);
                }
                for i in 0..n {
                    m[(0, i + i * n)] = Complex64::new(lscale, 0.0);
                }
                rhs[0] = Complex64::new(0.0, 0.0);
            } else {
                for i in 0..n * n {
                    m[(i, i)] += Complex64::new(0.0, w);
                }
            }
            let sol = solve_linear(&m, &rhs).map_err(|e| match e {
                Error::Singular { .. } => Error::SingularResolvent { freq_hz: f },
                other => other,
            })?;
            let y = unvectorize(&sol.x, n);
            Ok((trace_product(a, &y), sol.relative_residual))
        })
        .collect::<Result<_>>()?;
    Ok(SpectralDensity {
        freqs_hz: freqs_hz.to_vec(),
        values: solved.iter().map(|s| s.0).collect(),
        mean_a,
        mean_b,
        covariance,
        max_solve_residual: solved.iter().map(|s| s.1).fold(ss.solve_residual, f64::max),
        steady_state: ss.rho,
    })
}

/// σ_z fluctuation spectrum of a two-level model.
pub fn qubit_spectral_density(model: &LindbladModel, freqs_hz: &[f64]) -> Result<SpectralDensity> {
    if model.dim() != 2 {
        return Err(Error::DimensionMismatch(format!("expected a two-level model, got dimension {}", model.dim())));
    }
    let sz = super::qubit::sigma_z();
    correlation_spectrum(model, &sz, &sz, freqs_hz)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::qubit;
    use crate::numerics::linalg::c;

    #[test]
    fn undriven_qubit_is_lorentzian() {
        let (gamma, n_q) = (1e6, 0.4);
        let h = qubit::sigma_z() * c(3e6, 0.0);
        let m = LindbladModel::new(h, qubit::thermal_collapse(gamma, n_q, 2e5), vec![2]).unwrap();
        let freqs: Vec<f64> = (-40..=40).map(|k| k as f64 * 1e5).collect();
        let s = qubit_spectral_density(&m, &freqs).unwrap();
        let mz = -1.0 / (2.0 * n_q + 1.0);
        let var = 1.0 - mz * mz;
        assert!((s.covariance.re - var).abs() < 1e-12);
        let g = TAU * gamma * (2.0 * n_q + 1.0);
        for (f, v) in freqs.iter().zip(&s.values) {
            let exact = var / Complex64::new(g, -TAU * f);
            assert!((v - exact).norm() < 1e-6 * exact.norm(), "{f}: {v} vs {exact}");
        }
    }

    #[test]
    fn sum_rule_half_variance() {
        let h = qubit::sigma_z() * c(1e6, 0.0) + qubit::sigma_x() * c(0.8e6, 0.0);
        let m = LindbladModel::new(h, qubit::thermal_collapse(0.5e6, 0.0, 0.3e6), vec![2]).unwrap();
        let freqs: Vec<f64> = (-40000..=40000).map(|k| k as f64 * 5e3).collect();
        let s = qubit_spectral_density(&m, &freqs).unwrap();
        let df = 5e3;
        let integral: f64 = s.values.iter().map(|z| z.re).sum::<f64>() * df;
        // (1/2π)∫Re S dω = ∫Re S df = var/2
        assert!((2.0 * integral / s.covariance.re - 1.0).abs() < 0.02, "{}", 2.0 * integral / s.covariance.re);
        assert!(s.values.iter().all(|z| z.re >= -1e-10 * s.values.iter().map(|v| v.re).fold(0.0, f64::max)));
    }

    #[test]
    fn rejects_wrong_dimension() {
        let m = LindbladModel::new(CMatrix::zeros(3, 3), vec![], vec![3]).unwrap();
        assert!(qubit_spectral_density(&m, &[0.0]).is_err());
    }
}
