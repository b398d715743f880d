//! Entanglement, fidelity and spectral-feature measurements.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::linalg::{hermitian_eig, hermiticity_defect, max_abs, trace, CMatrix, CVector};
use crate::trace::SpectrumTrace;

/// Eigenvalues of the partial transpose above this count as zero.
pub const NEGATIVITY_THRESHOLD: f64 = 1e-10;

/// Joint state of subsystems A ⊗ B, index `a·d_B + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteState {
    pub rho: CMatrix,
    pub dims: (usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Subsystem {
    A,
    B,
}

impl BipartiteState {
    pub fn new(rho: CMatrix, dims: (usize, usize)) -> Result<Self> {
        let n = dims.0 * dims.1;
        if rho.shape() != (n, n) {
            return Err(Error::DimensionMismatch(format!("state {:?} vs dims {dims:?}", rho.shape())));
        }
        let tr = trace(&rho);
        if (tr - Complex64::new(1.0, 0.0)).norm() > 1e-8 {
            return Err(Error::InvalidState(format!("trace {tr}")));
        }
        let defect = hermiticity_defect(&rho);
        if defect > 1e-10 * max_abs(&rho).max(1.0) {
            return Err(Error::InvalidState(format!("not Hermitian ({defect:.3e})")));
        }
        let min = hermitian_eig(&hermitize(&rho))?.values[0];
        if min < -1e-7 {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(Self { rho, dims })
    }

    pub fn pure(psi: &CVector, dims: (usize, usize)) -> Result<Self> {
        Self::new(psi * psi.adjoint(), dims)
    }

    /// Populations of subsystem `s` (diagonal of the reduced state).
    pub fn populations(&self, s: Subsystem) -> Vec<f64> {
        let (da, db) = self.dims;
        match s {
            Subsystem::A => (0..da).map(|a| (0..db).map(|b| self.rho[(a * db + b, a * db + b)].re).sum()).collect(),
            Subsystem::B => (0..db).map(|b| (0..da).map(|a| self.rho[(a * db + b, a * db + b)].re).sum()).collect(),
        }
    }
}

fn hermitize(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()) * Complex64::new(0.5, 0.0)
}

/// ρ^{T_s}: transposes the indices of subsystem `s`.
pub fn partial_transpose(rho: &CMatrix, dims: (usize, usize), s: Subsystem) -> Result<CMatrix> {
    let (da, db) = dims;
    let n = da * db;
    if rho.shape() != (n, n) {
        return Err(Error::DimensionMismatch(format!("state {:?} vs dims {dims:?}", rho.shape())));
    }
    Ok(CMatrix::from_fn(n, n, |r, c| {
        let (i, a) = (r / db, r % db);
        let (j, b) = (c / db, c % db);
        match s {
            Subsystem::B => rho[(i * db + b, j * db + a)],
            Subsystem::A => rho[(j * db + a, i * db + b)],
        }
    }))
}

fn pt_spectrum(s: &BipartiteState) -> Vec<f64> {
    let pt = partial_transpose(&s.rho, s.dims, Subsystem::B).expect("dims checked at construction");
    hermitian_eig(&hermitize(&pt)).map(|e| e.values).unwrap_or_default()
}

/// N(ρ) = |Σ negative eigenvalues of ρ^{T_B}|.
pub fn negativity(s: &BipartiteState) -> f64 {
    pt_spectrum(s).into_iter().filter(|&v| v < -NEGATIVITY_THRESHOLD).map(|v| -v).sum()
}

/// E_N = log₂(2N + 1).
pub fn log_negativity(s: &BipartiteState) -> f64 {
    (2.0 * negativity(s) + 1.0).log2()
}

/// ⟨ψ|ρ|ψ⟩.
pub fn fidelity_pure(s: &BipartiteState, target: &CVector) -> Result<f64> {
    if target.len() != s.rho.nrows() {
        return Err(Error::DimensionMismatch(format!("target {} vs state {}", target.len(), s.rho.nrows())));
    }
    let norm = target.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidState(format!("target norm {norm}")));
    }
    Ok((target.adjoint() * &s.rho * target)[(0, 0)].re)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FeatureKind {
    Peaks,
    Dips,
}

impl FeatureKind {
    fn name(self) -> &'static str {
        match self {
            FeatureKind::Peaks => "peak",
            FeatureKind::Dips => "dip",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Feature {
    pub location: f64,
    /// Full width at half prominence.
    pub width: f64,
    pub amplitude: f64,
    pub prominence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeakReport {
    pub kind: FeatureKind,
    /// Sorted by decreasing prominence.
    pub features: Vec<Feature>,
    /// Distance between the two dominant features.
    pub splitting: Option<f64>,
}

impl PeakReport {
    pub fn dominant(&self) -> &Feature {
        &self.features[0]
    }
}

/// Features weaker than this fraction of the dominant prominence are dropped.
const RELATIVE_PROMINENCE: f64 = 1e-3;

fn parabola_vertex(x: [f64; 3], y: [f64; 3]) -> (f64, f64) {
    let d0 = (y[1] - y[0]) / (x[1] - x[0]);
    let d1 = (y[2] - y[1]) / (x[2] - x[1]);
    let a = (d1 - d0) / (x[2] - x[0]);
    if a == 0.0 {
        return (x[1], y[1]);
    }
    let b = d0 - a * (x[0] + x[1]);
    let xv = (-b / (2.0 * a)).clamp(x[0], x[2]);
    let yv = y[0] + (xv - x[0]) * (d0 + a * (xv - x[1]));
    (xv, yv)
}

/// Finds local maxima (or minima) of `column` with parabolic refinement and
/// half-prominence widths.
pub fn measure_peaks(trace: &SpectrumTrace, column: &str, kind: FeatureKind) -> Result<PeakReport> {
    let raw = trace
        .column(column)
        .ok_or_else(|| Error::Format(format!("no column `{column}`")))?;
    let sign = if kind == FeatureKind::Peaks { 1.0 } else { -1.0 };
    let y: Vec<f64> = raw.iter().map(|v| sign * v).collect();
    let x = &trace.grid;
    let n = y.len();
    let none = || Error::NoFeature { kind: kind.name() };
    if n < 3 {
        return Err(none());
    }

    let mut found = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if y[i] > y[i - 1] {
            // walk across plateaus
            let mut j = i;
            while j + 1 < n && y[j + 1] == y[i] {
                j += 1;
            }
            if j + 1 < n && y[j + 1] < y[i] {
                let k = (i + j) / 2;
                found.push(k);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }

    let mut feats = Vec::new();
    for &k in &found {
        let peak = y[k];
        // prominence: lowest point on each side before reaching higher ground
        let mut left_min = peak;
        let mut l = k;
        while l > 0 && y[l - 1] <= peak {
            l -= 1;
            left_min = left_min.min(y[l]);
        }
        let mut right_min = peak;
        let mut r = k;
        while r + 1 < n && y[r + 1] <= peak {
            r += 1;
            right_min = right_min.min(y[r]);
        }
        let base = left_min.max(right_min);
        let prominence = peak - base;
        if !(prominence > 0.0) {
            continue;
        }
        let level = peak - prominence / 2.0;
        let cross = |range: &mut dyn Iterator<Item = usize>, step: isize| -> Option<f64> {
            for m in range {
                let nb = (m as isize + step) as usize;
                if y[nb] < level {
                    let t = (y[m] - level) / (y[m] - y[nb]);
                    return Some(x[m] + t * (x[nb] - x[m]));
                }
            }
            None
        };
        let xl = cross(&mut (1..=k).rev(), -1);
        let xr = cross(&mut (k..n - 1), 1);
        let (xv, yv) = parabola_vertex([x[k - 1], x[k], x[k + 1]], [y[k - 1], y[k], y[k + 1]]);
        let width = match (xl, xr) {
            (Some(a), Some(b)) => (b - a).abs(),
            (Some(a), None) => 2.0 * (xv - a).abs(),
            (None, Some(b)) => 2.0 * (b - xv).abs(),
            (None, None) => continue,
        };
        let step = 0.5 * (x[k + 1] - x[k - 1]).abs();
        feats.push((Feature { location: xv, width, amplitude: sign * yv, prominence }, step));
    }
    if feats.is_empty() {
        return Err(none());
    }
    feats.sort_by(|a, b| b.0.prominence.total_cmp(&a.0.prominence));
    let top = feats[0].0.prominence;
    feats.retain(|f| f.0.prominence >= RELATIVE_PROMINENCE * top);
    for (f, step) in &feats {
        if f.width < 8.0 * step {
            return Err(Error::NeedsRefinement { location: f.location, width: f.width, step: *step });
        }
    }
    let features: Vec<Feature> = feats.into_iter().map(|f| f.0).collect();
    let splitting = (features.len() >= 2).then(|| (features[0].location - features[1].location).abs());
    Ok(PeakReport { kind, features, splitting })
}
