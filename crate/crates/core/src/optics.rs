//! Two-photon Fock states through beam-splitter networks.
//!
//! Distinguishability is carried as a single complex overlap χ of the two
//! photons' wavepackets: every coincidence observable is the affine mix
//! P = |χ|²·P_indist + (1 − |χ|²)·P_dist, where P_dist treats the photons
//! as carrying orthogonal internal labels.

use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::lattice::CMat2;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OpticsError {
    #[error("reflectivity must lie in [0, 1], got {0}")]
    InvalidReflectivity(f64),
    #[error("matrix is not unitary: deviation {0}")]
    NonUnitary(f64),
    #[error("unknown mode label `{0}`")]
    UnknownMode(String),
    #[error("placement must address two distinct input and output modes")]
    InvalidPlacement,
    #[error("coincidence pair must use two distinct modes")]
    SamePort,
    #[error("overlap |chi| = {0} exceeds 1")]
    InvalidOverlap(f64),
    #[error("state is not normalized: norm {0}")]
    NotNormalized(f64),
}

/// Beam-splitter matrix convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BsConvention {
    /// [[√T, √R], [−√R, √T]] (default).
    RealRotation,
    /// [[√T, i√R], [i√R, √T]].
    Symmetric,
}

/// 2×2 beam-splitter unitary with reflectivity R.
pub fn bs_unitary(r: f64, convention: BsConvention) -> Result<CMat2, OpticsError> {
    if !(0.0..=1.0).contains(&r) {
        return Err(OpticsError::InvalidReflectivity(r));
    }
    let tt = (1.0 - r).sqrt();
    let rr = r.sqrt();
    Ok(match convention {
        BsConvention::RealRotation => CMat2::new(
            Complex64::new(tt, 0.0),
            Complex64::new(rr, 0.0),
            Complex64::new(-rr, 0.0),
            Complex64::new(tt, 0.0),
        ),
        BsConvention::Symmetric => CMat2::new(
            Complex64::new(tt, 0.0),
            Complex64::new(0.0, rr),
            Complex64::new(0.0, rr),
            Complex64::new(tt, 0.0),
        ),
    })
}

/// An n-mode unitary with named ports.
#[derive(Debug, Clone)]
pub struct ModeUnitary {
    pub labels: Vec<String>,
    pub matrix: DMatrix<Complex64>,
}

impl ModeUnitary {
    /// Wraps a matrix, checking unitarity to 1e−12.
    pub fn new(labels: Vec<String>, matrix: DMatrix<Complex64>) -> Result<Self, OpticsError> {
        let n = labels.len();
        assert_eq!(matrix.nrows(), n);
        assert_eq!(matrix.ncols(), n);
        let dev = (matrix.adjoint() * &matrix - DMatrix::<Complex64>::identity(n, n)).norm();
        if dev > 1e-12 {
            return Err(OpticsError::NonUnitary(dev));
        }
        Ok(ModeUnitary { labels, matrix })
    }

    pub fn n_modes(&self) -> usize {
        self.labels.len()
    }

    pub fn mode(&self, label: &str) -> Result<usize, OpticsError> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| OpticsError::UnknownMode(String::from(label)))
    }
}

/// One beam splitter embedded into the network: acts on `inputs`, whose
/// transformed content exits on `outputs` (label pairs).
#[derive(Debug, Clone)]
pub struct Placement {
    pub bs: CMat2,
    pub inputs: (String, String),
    pub outputs: (String, String),
}

impl Placement {
    pub fn new(bs: CMat2, inputs: (&str, &str), outputs: (&str, &str)) -> Placement {
        Placement {
            bs,
            inputs: (String::from(inputs.0), String::from(inputs.1)),
            outputs: (String::from(outputs.0), String::from(outputs.1)),
        }
    }
}

/// Composes embedded 2×2 blocks into the full network unitary.
///
/// Each placement applies its 2×2 on the input pair in place, then
/// relabels input→output by transpositions, so the embedding stays
/// exactly unitary for any label arrangement.
pub fn network_unitary(
    labels: &[&str],
    placements: &[Placement],
) -> Result<ModeUnitary, OpticsError> {
    let n = labels.len();
    let find = |l: &str| -> Result<usize, OpticsError> {
        labels
            .iter()
            .position(|&x| x == l)
            .ok_or_else(|| OpticsError::UnknownMode(String::from(l)))
    };
    let mut u = DMatrix::<Complex64>::identity(n, n);
    for pl in placements {
        let i0 = find(&pl.inputs.0)?;
        let i1 = find(&pl.inputs.1)?;
        let o0 = find(&pl.outputs.0)?;
        let o1 = find(&pl.outputs.1)?;
        if i0 == i1 || o0 == o1 {
            return Err(OpticsError::InvalidPlacement);
        }
        let mut e = DMatrix::<Complex64>::identity(n, n);
        e[(i0, i0)] = pl.bs[(0, 0)];
        e[(i0, i1)] = pl.bs[(0, 1)];
        e[(i1, i0)] = pl.bs[(1, 0)];
        e[(i1, i1)] = pl.bs[(1, 1)];
        if i0 != o0 {
            e.swap_rows(i0, o0);
        }
        if i1 != o1 {
            e.swap_rows(i1, o1);
        }
        u = e * u;
    }
    ModeUnitary::new(labels.iter().map(|&l| String::from(l)).collect(), u)
}

/// The seven-mode cascade of two splitters: `u1` on (a,b)→(c,d), a weak
/// leak of amplitude `leak_eps` from d into e, then `u2` on d (with
/// vacuum) → (f,g).
pub fn hsbs_cascade(u1: &CMat2, u2: &CMat2, leak_eps: f64) -> Result<ModeUnitary, OpticsError> {
    let eps2 = leak_eps * leak_eps;
    if !(0.0..=1.0).contains(&eps2) {
        return Err(OpticsError::InvalidReflectivity(eps2));
    }
    let leak = bs_unitary(eps2, BsConvention::RealRotation)?;
    network_unitary(
        &["a", "b", "c", "d", "e", "f", "g"],
        &[
            Placement::new(*u1, ("a", "b"), ("c", "d")),
            Placement::new(leak, ("d", "e"), ("d", "e")),
            Placement::new(*u2, ("d", "g"), ("f", "g")),
        ],
    )
}

/// A two-photon Fock state over n modes, in the unit-normalized basis
/// {|1_p 1_q⟩ (p<q), |2_p⟩}, stored for p ≤ q.
#[derive(Debug, Clone)]
pub struct TwoPhotonState {
    pub labels: Vec<String>,
    pub amps: Vec<Complex64>,
    /// Spectral overlap of the two photons' wavepackets.
    pub chi: Complex64,
    /// Relative delay (ps) the overlap was evaluated at.
    pub delay_ps: f64,
}

fn pair_index(n: usize, p: usize, q: usize) -> usize {
    debug_assert!(p <= q && q < n);
    p * n - p * (p + 1) / 2 + q
}

impl TwoPhotonState {
    /// |1_i 1_j⟩ (or |2_i⟩ if i == j).
    pub fn input_pair(labels: &[&str], i: usize, j: usize, chi: Complex64) -> Result<Self, OpticsError> {
        if chi.norm() > 1.0 + 1e-12 {
            return Err(OpticsError::InvalidOverlap(chi.norm()));
        }
        let n = labels.len();
        let mut amps = alloc::vec![Complex64::new(0.0, 0.0); n * (n + 1) / 2];
        let (p, q) = if i <= j { (i, j) } else { (j, i) };
        amps[pair_index(n, p, q)] = Complex64::new(1.0, 0.0);
        Ok(TwoPhotonState {
            labels: labels.iter().map(|&l| String::from(l)).collect(),
            amps,
            chi,
            delay_ps: 0.0,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.labels.len()
    }

    pub fn amp(&self, p: usize, q: usize) -> Complex64 {
        let (p, q) = if p <= q { (p, q) } else { (q, p) };
        self.amps[pair_index(self.n_modes(), p, q)]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// Evolves the symmetric two-photon sector through the mode unitary:
/// a_i† → Σ_p U_pi a_p†, with √2 bosonic weights on doubly occupied modes.
pub fn evolve_fock(u: &ModeUnitary, input: &TwoPhotonState) -> Result<TwoPhotonState, OpticsError> {
    let n = u.n_modes();
    assert_eq!(n, input.n_modes());
    let norm = input.norm_sqr();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(OpticsError::NotNormalized(norm));
    }
    let m = &u.matrix;
    let mut out = alloc::vec![Complex64::new(0.0, 0.0); n * (n + 1) / 2];
    let sqrt2 = Complex64::new(2.0_f64.sqrt(), 0.0);
    for i in 0..n {
        for j in i..n {
            let c = input.amps[pair_index(n, i, j)];
            if c.norm_sqr() == 0.0 {
                continue;
            }
            for p in 0..n {
                for q in p..n {
                    let w = if i < j {
                        if p < q {
                            m[(p, i)] * m[(q, j)] + m[(p, j)] * m[(q, i)]
                        } else {
                            sqrt2 * m[(p, i)] * m[(p, j)]
                        }
                    } else if p < q {
                        sqrt2 * m[(p, i)] * m[(q, i)]
                    } else {
                        m[(p, i)] * m[(p, i)]
                    };
                    out[pair_index(n, p, q)] += c * w;
                }
            }
        }
    }
    Ok(TwoPhotonState {
        labels: input.labels.clone(),
        amps: out,
        chi: input.chi,
        delay_ps: input.delay_ps,
    })
}

/// Coincidence probability between two distinct output ports for a photon
/// pair entering modes (i, j), with spectral overlap χ.
pub fn coincidence_rate(
    u: &ModeUnitary,
    input: (usize, usize),
    pair: (usize, usize),
    chi: Complex64,
) -> Result<f64, OpticsError> {
    let (p, q) = pair;
    if p == q {
        return Err(OpticsError::SamePort);
    }
    let chi2 = chi.norm_sqr();
    if chi2 > 1.0 + 1e-12 {
        return Err(OpticsError::InvalidOverlap(chi.norm()));
    }
    let (i, j) = input;
    let state = TwoPhotonState::input_pair(
        &u.labels.iter().map(String::as_str).collect::<Vec<_>>(),
        i,
        j,
        chi,
    )?;
    let evolved = evolve_fock(u, &state)?;
    let p_ind = evolved.amp(p, q).norm_sqr();
    let m = &u.matrix;
    let p_dist = if i == j {
        // Same-mode photons are identical regardless of χ.
        p_ind
    } else {
        m[(p, i)].norm_sqr() * m[(q, j)].norm_sqr() + m[(p, j)].norm_sqr() * m[(q, i)].norm_sqr()
    };
    Ok((chi2 * p_ind + (1.0 - chi2) * p_dist).clamp(0.0, 1.0))
}
