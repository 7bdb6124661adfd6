//! Gapped honeycomb tight-binding model.
//!
//! Conventions (fixed once, relied on everywhere):
//! * Lattice constant `a`; nearest-neighbour distance `a0 = a/√3`.
//! * Bond vectors `δ1 = (0, a0)`, `δ2 = (−√3 a0/2, −a0/2)`,
//!   `δ3 = (√3 a0/2, −a0/2)`; sublattice offsets A = (0,0), B = (0, a0).
//! * Primitive vectors `a1 = δ3 − δ2 = a(1, 0)`,
//!   `a2 = δ1 − δ2 = a(1/2, √3/2)`.
//! * `K = (4π/3a, 0)`, `K′ = −K`.
//! * The Bloch phase convention attaches phases to the bond vectors
//!   reduced to lattice translations (`δ_j − δ_1`), which makes
//!   `H(k + G) = H(k)` hold exactly for reciprocal vectors `G`.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;
#[cfg(not(feature = "std"))]
use num_traits::Float;

/// Real 2-vector (positions in nm, momenta in 1/nm).
pub type Vec2 = Vector2<f64>;
/// Complex 2×2 matrix (Bloch / Dirac Hamiltonians).
pub type CMat2 = Matrix2<Complex64>;
/// Complex 2-vector on the (A, B) sublattice basis.
pub type CVec2 = Vector2<Complex64>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LatticeError {
    #[error("parameter `{name}` must be positive, got {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("unknown high-symmetry label `{0}` (expected Gamma, K, M or K')")]
    InvalidPath(String),
    #[error("valley index tau_z must be +1 or -1, got {0}")]
    InvalidValley(i32),
    #[error("wavelength interval [{lo}, {hi}] nm is empty or inverted")]
    InvalidInterval { lo: f64, hi: f64 },
}

/// Which Brillouin-zone valley, `K` (τz = +1) or `K′` (τz = −1).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Valley {
    K,
    KPrime,
}

impl Valley {
    pub fn tau_z(self) -> i32 {
        match self {
            Valley::K => 1,
            Valley::KPrime => -1,
        }
    }

    pub fn from_tau_z(tau_z: i32) -> Result<Self, LatticeError> {
        match tau_z {
            1 => Ok(Valley::K),
            -1 => Ok(Valley::KPrime),
            other => Err(LatticeError::InvalidValley(other)),
        }
    }

    pub fn other(self) -> Self {
        match self {
            Valley::K => Valley::KPrime,
            Valley::KPrime => Valley::K,
        }
    }
}

/// Honeycomb geometry plus hopping `t` and sublattice mass `delta`.
///
/// The single source of model truth: every other module takes one of these.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSpec {
    /// Lattice constant (nm).
    pub a: f64,
    /// Nearest-neighbour hopping (model energy units).
    pub t: f64,
    /// Sublattice mass Δ (same units, signed): onsite +Δ on A, −Δ on B.
    pub delta: f64,
    /// The three bond vectors δ_j (nm), A-site to its B neighbours.
    pub nn_vectors: [Vec2; 3],
    /// Positions of the A and B basis sites within the unit cell (nm).
    pub sublattice_offsets: [Vec2; 2],
}

/// Builds the canonical spec for the fixed bond-vector convention.
pub fn build_lattice_spec(a_nm: f64, t: f64, delta: f64) -> Result<LatticeSpec, LatticeError> {
    if !(a_nm > 0.0) {
        return Err(LatticeError::InvalidParameter { name: "a", value: a_nm });
    }
    if !(t > 0.0) {
        return Err(LatticeError::InvalidParameter { name: "t", value: t });
    }
    let a0 = a_nm / 3.0_f64.sqrt();
    let s3h = 3.0_f64.sqrt() / 2.0;
    Ok(LatticeSpec {
        a: a_nm,
        t,
        delta,
        nn_vectors: [
            Vec2::new(0.0, a0),
            Vec2::new(-s3h * a0, -0.5 * a0),
            Vec2::new(s3h * a0, -0.5 * a0),
        ],
        sublattice_offsets: [Vec2::new(0.0, 0.0), Vec2::new(0.0, a0)],
    })
}

impl LatticeSpec {
    /// Default preset: a = 470 nm, t = 1, Δ = ±0.1 t depending on `mass_sign`.
    pub fn preset(mass_sign: f64) -> LatticeSpec {
        build_lattice_spec(470.0, 1.0, 0.1 * mass_sign.signum()).expect("fixed valid parameters")
    }

    /// Nearest-neighbour distance a0 = a/√3.
    pub fn a0(&self) -> f64 {
        self.a / 3.0_f64.sqrt()
    }

    /// Primitive lattice vectors (a1, a2) = (δ3 − δ2, δ1 − δ2).
    pub fn primitive_vectors(&self) -> (Vec2, Vec2) {
        let d = &self.nn_vectors;
        (d[2] - d[1], d[0] - d[1])
    }

    /// Reciprocal vectors with b_i · a_j = 2π δ_ij.
    pub fn reciprocal_vectors(&self) -> (Vec2, Vec2) {
        let (a1, a2) = self.primitive_vectors();
        let det = a1.x * a2.y - a1.y * a2.x;
        let b1 = Vec2::new(2.0 * PI * a2.y / det, -2.0 * PI * a2.x / det);
        let b2 = Vec2::new(-2.0 * PI * a1.y / det, 2.0 * PI * a1.x / det);
        (b1, b2)
    }

    /// High-symmetry points of the hexagonal BZ by label.
    pub fn high_symmetry_point(&self, label: &str) -> Result<Vec2, LatticeError> {
        let k = 4.0 * PI / (3.0 * self.a);
        match label {
            "Gamma" | "G" | "Γ" => Ok(Vec2::new(0.0, 0.0)),
            "K" => Ok(Vec2::new(k, 0.0)),
            "K'" | "Kp" | "KPrime" => Ok(Vec2::new(-k, 0.0)),
            "M" => Ok(Vec2::new(PI / self.a, PI / (3.0_f64.sqrt() * self.a))),
            other => Err(LatticeError::InvalidPath(String::from(other))),
        }
    }

    /// The valley center in k-space.
    pub fn valley_point(&self, valley: Valley) -> Vec2 {
        let k = 4.0 * PI / (3.0 * self.a);
        match valley {
            Valley::K => Vec2::new(k, 0.0),
            Valley::KPrime => Vec2::new(-k, 0.0),
        }
    }
}

/// Bloch Hamiltonian H(k) = [[Δ, f(k)], [f*(k), −Δ]] with the periodic
/// gauge f(k) = −t Σ_j exp(i k·(δ_j − δ_1)).
pub fn bloch_hamiltonian(spec: &LatticeSpec, k: Vec2) -> CMat2 {
    let d = &spec.nn_vectors;
    let mut f = Complex64::new(0.0, 0.0);
    for j in 0..3 {
        let r = d[j] - d[0];
        f += Complex64::new(0.0, k.dot(&r)).exp();
    }
    f *= -spec.t;
    CMat2::new(
        Complex64::new(spec.delta, 0.0),
        f,
        f.conj(),
        Complex64::new(-spec.delta, 0.0),
    )
}

/// Eigen-data of a 2×2 Bloch Hamiltonian at one k-point.
#[derive(Debug, Clone)]
pub struct BlochState {
    pub k: Vec2,
    /// Ascending pair (E−, E+).
    pub energies: [f64; 2],
    /// Matching eigenvectors on the (A, B) basis, gauge-fixed so the first
    /// component of modulus > 1e−12 is real positive.
    pub eigenvectors: [CVec2; 2],
}

/// Closed-form eigendecomposition of a Hermitian 2×2 matrix.
///
/// Returns ascending eigenvalues with orthonormal, gauge-fixed eigenvectors.
pub fn eigh2(h: &CMat2) -> ([f64; 2], [CVec2; 2]) {
    let h11 = h[(0, 0)].re;
    let h22 = h[(1, 1)].re;
    let f = h[(0, 1)];
    let avg = 0.5 * (h11 + h22);
    let dif = 0.5 * (h11 - h22);
    let r = (dif * dif + f.norm_sqr()).sqrt();
    let energies = [avg - r, avg + r];
    if r < 1e-300 {
        // Degenerate point: any orthonormal basis diagonalizes.
        return (
            energies,
            [CVec2::new(1.0.into(), 0.0.into()), CVec2::new(0.0.into(), 1.0.into())],
        );
    }
    let mut vecs = [CVec2::zeros(), CVec2::zeros()];
    for (slot, &e) in energies.iter().enumerate() {
        // Two algebraically equivalent null-vectors of (H − E); pick the
        // better-conditioned one.
        let v1 = CVec2::new(f, Complex64::new(e - h11, 0.0));
        let v2 = CVec2::new(Complex64::new(e - h22, 0.0), f.conj());
        let mut v = if v1.norm_squared() >= v2.norm_squared() { v1 } else { v2 };
        v /= Complex64::new(v.norm(), 0.0);
        vecs[slot] = gauge_fix(v);
    }
    (energies, vecs)
}

/// Rotates the global phase so the first component with modulus > 1e−12
/// is real positive.
pub fn gauge_fix(mut v: CVec2) -> CVec2 {
    for i in 0..2 {
        let c = v[i];
        if c.norm() > 1e-12 {
            let phase = c / c.norm();
            v *= phase.conj();
            // Kill the residual imaginary dust on the pivot.
            v[i] = Complex64::new(v[i].re, 0.0);
            break;
        }
    }
    v
}

/// Diagonalizes the Bloch Hamiltonian at `k` into a [`BlochState`].
pub fn diagonalize_bloch(spec: &LatticeSpec, k: Vec2) -> BlochState {
    let h = bloch_hamiltonian(spec, k);
    let (energies, eigenvectors) = eigh2(&h);
    BlochState { k, energies, eigenvectors }
}

/// Band energies along a labeled high-symmetry path.
#[derive(Debug, Clone)]
pub struct BandStructure {
    /// The path corner labels, e.g. `["Gamma", "K", "M", "K'", "Gamma"]`.
    pub labels: Vec<String>,
    /// Samples per segment (each segment includes both endpoints).
    pub n_per_segment: usize,
    /// Segment-major samples: segment `s` occupies indices
    /// `s·n_per_segment .. (s+1)·n_per_segment`.
    pub samples: Vec<BlochState>,
}

impl BandStructure {
    pub fn n_segments(&self) -> usize {
        self.labels.len().saturating_sub(1)
    }

    /// Minimum direct gap E+(k) − E−(k) over all samples, with its k-point.
    pub fn min_direct_gap(&self) -> (f64, Vec2) {
        let mut best = (f64::INFINITY, Vec2::zeros());
        for s in &self.samples {
            let gap = s.energies[1] - s.energies[0];
            if gap < best.0 {
                best = (gap, s.k);
            }
        }
        best
    }
}

/// Samples the bands along the labeled path, `n_per_segment` points per leg.
pub fn band_path(
    spec: &LatticeSpec,
    labels: &[&str],
    n_per_segment: usize,
) -> Result<BandStructure, LatticeError> {
    if labels.len() < 2 {
        return Err(LatticeError::InvalidParameter {
            name: "labels.len",
            value: labels.len() as f64,
        });
    }
    if n_per_segment < 2 {
        return Err(LatticeError::InvalidParameter {
            name: "n_per_segment",
            value: n_per_segment as f64,
        });
    }
    let corners: Vec<Vec2> = labels
        .iter()
        .map(|l| spec.high_symmetry_point(l))
        .collect::<Result<_, _>>()?;
    let mut samples = Vec::with_capacity((labels.len() - 1) * n_per_segment);
    for seg in corners.windows(2) {
        for i in 0..n_per_segment {
            let frac = i as f64 / (n_per_segment - 1) as f64;
            let k = seg[0] + (seg[1] - seg[0]) * frac;
            samples.push(diagonalize_bloch(spec, k));
        }
    }
    Ok(BandStructure {
        labels: labels.iter().map(|&l| String::from(l)).collect(),
        n_per_segment,
        samples,
    })
}

/// Dirac expansion around a valley:
/// H = −(√3/2) a t (qx τz σx + qy σy) + Δ σz.
pub fn dirac_hamiltonian(
    spec: &LatticeSpec,
    tau_z: i32,
    q: Vec2,
) -> Result<CMat2, LatticeError> {
    let valley = Valley::from_tau_z(tau_z)?;
    let v = 3.0_f64.sqrt() / 2.0 * spec.a * spec.t;
    let tau = valley.tau_z() as f64;
    let off = Complex64::new(-v * tau * q.x, v * q.y);
    Ok(CMat2::new(
        Complex64::new(spec.delta, 0.0),
        off,
        off.conj(),
        Complex64::new(-spec.delta, 0.0),
    ))
}

/// Result of mapping a physical bandgap window onto the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct GapCalibration {
    /// Hopping in THz-equivalent units.
    pub t_thz: f64,
    /// Mass in THz-equivalent units (gap = 2Δ).
    pub delta_thz: f64,
    /// Frequency of the gap center, c/λ_mid with λ_mid the wavelength midpoint (THz).
    pub mid_gap_thz: f64,
    /// Gap width c/λ_lo − c/λ_hi (THz).
    pub gap_width_thz: f64,
    /// Human-readable statement of the mapping convention.
    pub convention: &'static str,
}

/// Calibrates (t, Δ) so the model's K-point gap 2|Δ| reproduces the
/// bandgap between the two wavelengths (nm), with the model energy zero
/// placed at the mid-gap frequency and Δ/t held at the preset ratio 0.1.
pub fn calibrate_to_gap(gap_lo_nm: f64, gap_hi_nm: f64) -> Result<GapCalibration, LatticeError> {
    if !(gap_lo_nm > 0.0) || !(gap_hi_nm > gap_lo_nm) {
        return Err(LatticeError::InvalidInterval { lo: gap_lo_nm, hi: gap_hi_nm });
    }
    let width = crate::C_NM_THZ / gap_lo_nm - crate::C_NM_THZ / gap_hi_nm;
    let mid = crate::C_NM_THZ / (0.5 * (gap_lo_nm + gap_hi_nm));
    let delta = 0.5 * width;
    Ok(GapCalibration {
        t_thz: delta / 0.1,
        delta_thz: delta,
        mid_gap_thz: mid,
        gap_width_thz: width,
        convention: "energy zero at mid-gap frequency c/lambda_mid; gap 2*Delta = c/lambda_lo - c/lambda_hi; Delta/t fixed at the preset ratio 0.1",
    })
}
