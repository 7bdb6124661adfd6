//! Domain-wall ribbons: a zigzag interface between two oppositely gapped
//! half-planes, reduced to a 1D supercell with Bloch momentum k along the
//! wall (period a).
//!
//! With the zigzag projection the supercell is a two-site-per-cell chain:
//! within a chain cell the A–B bond carries −t, between cells the bond
//! carries −2t·cos(ka/2), and the onsite energy is
//! (domain sign)·(sublattice sign)·|Δ|. The wall cuts the intra-cell bond
//! of the wall cell, so the domain sign changes between A and B of that
//! cell. Both outer terminations are hard zigzag edges.

use alloc::vec::Vec;

use core::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::lattice::{LatticeSpec, Valley};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RibbonError {
    #[error("ribbon width must be >= 8 cells per side, got {0} (outer edges would hybridize with the wall)")]
    TooNarrow(usize),
    #[error("need at least 64 k samples, got {0}")]
    TooFewSamples(usize),
    #[error("parameter `{name}` out of range: {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("branch does not cover the projected valley momentum {k} 1/nm")]
    ValleyNotCovered { k: f64 },
    #[error("no localized in-gap state found near k = {k} 1/nm")]
    NoCarrier { k: f64 },
}

/// Which mass sign sits above the wall: I12 has +|Δ| above / −|Δ| below,
/// I21 is the global flip.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interface {
    I12,
    I21,
}

impl Interface {
    /// Domain sign above the wall.
    pub fn sign_above(self) -> f64 {
        match self {
            Interface::I12 => 1.0,
            Interface::I21 => -1.0,
        }
    }

    pub fn flipped(self) -> Interface {
        match self {
            Interface::I12 => Interface::I21,
            Interface::I21 => Interface::I12,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Interface::I12 => "I12",
            Interface::I21 => "I21",
        }
    }
}

/// Projected valley momentum along a zigzag wall (1/nm): K → −2π/(3a),
/// K′ → +2π/(3a).
pub fn projected_valley_k(spec: &LatticeSpec, valley: Valley) -> f64 {
    let k = 2.0 * PI / (3.0 * spec.a);
    match valley {
        Valley::K => -k,
        Valley::KPrime => k,
    }
}

/// Nearest projected valley for a supercell momentum in (−π/a, π/a].
pub fn nearest_valley(spec: &LatticeSpec, k: f64) -> Valley {
    let kk = projected_valley_k(spec, Valley::K);
    let kkp = projected_valley_k(spec, Valley::KPrime);
    if (k - kk).abs() <= (k - kkp).abs() {
        Valley::K
    } else {
        Valley::KPrime
    }
}

/// A domain-wall supercell: factory for the 1D Bloch Hamiltonian H(k).
#[derive(Debug, Clone)]
pub struct Ribbon {
    pub lattice: LatticeSpec,
    pub interface: Interface,
    /// Unit cells per side of the wall.
    pub width: usize,
}

/// Builds the supercell; `width` is the number of cells on each side.
pub fn build_ribbon(
    spec: &LatticeSpec,
    interface: Interface,
    width: usize,
) -> Result<Ribbon, RibbonError> {
    if width < 8 {
        return Err(RibbonError::TooNarrow(width));
    }
    Ok(Ribbon { lattice: spec.clone(), interface, width })
}

impl Ribbon {
    /// Matrix dimension: 2 sides × width cells × 2 sublattices.
    pub fn n_sites(&self) -> usize {
        4 * self.width
    }

    /// Chain cell whose intra-cell bond the wall cuts.
    pub fn wall_cell(&self) -> usize {
        self.width
    }

    /// Chain cell index of site `s` (sites ordered bottom to top, A then B).
    pub fn site_cell(&self, s: usize) -> usize {
        s / 2
    }

    /// 0 = A, 1 = B.
    pub fn site_sublattice(&self, s: usize) -> usize {
        s % 2
    }

    /// Signed onsite mass of site `s`.
    pub fn site_mass(&self, s: usize) -> f64 {
        // Sites up to and including A of the wall cell sit below the wall.
        let below = s <= 2 * self.wall_cell();
        let domain = if below { -self.interface.sign_above() } else { self.interface.sign_above() };
        let sub = if self.site_sublattice(s) == 0 { 1.0 } else { -1.0 };
        domain * sub * self.lattice.delta.abs()
    }

    /// Cell distance from site `s` to the wall.
    pub fn cell_distance(&self, s: usize) -> usize {
        self.site_cell(s).abs_diff(self.wall_cell())
    }

    /// Real symmetric Bloch Hamiltonian of the supercell at momentum `k`
    /// (1/nm along the wall).
    pub fn hamiltonian(&self, k: f64) -> DMatrix<f64> {
        let n = self.n_sites();
        let t = self.lattice.t;
        let inter = -2.0 * t * (0.5 * k * self.lattice.a).cos();
        let mut h = DMatrix::<f64>::zeros(n, n);
        for s in 0..n {
            h[(s, s)] = self.site_mass(s);
        }
        for s in 0..n - 1 {
            let amp = if s % 2 == 0 { -t } else { inter };
            h[(s, s + 1)] = amp;
            h[(s + 1, s)] = amp;
        }
        h
    }

    /// Fraction of |ψ|² within `window` cells of the wall.
    pub fn localization(&self, psi: &DVector<f64>, window: usize) -> f64 {
        let mut w = 0.0;
        for s in 0..self.n_sites() {
            if self.cell_distance(s) <= window {
                w += psi[s] * psi[s];
            }
        }
        w / psi.norm_squared()
    }
}

/// Full eigen-data of the supercell over one Brillouin-zone period.
#[derive(Debug, Clone)]
pub struct RibbonBands {
    pub ribbon: Ribbon,
    pub k_values: Vec<f64>,
    /// Ascending eigenvalues per k.
    pub energies: Vec<Vec<f64>>,
    /// Matching eigenvectors as columns, per k.
    pub vectors: Vec<DMatrix<f64>>,
}

/// Diagonalizes the supercell on a uniform k grid over (−π/a, π/a].
pub fn ribbon_bands(ribbon: &Ribbon, k_samples: usize) -> Result<RibbonBands, RibbonError> {
    if k_samples < 64 {
        return Err(RibbonError::TooFewSamples(k_samples));
    }
    let a = ribbon.lattice.a;
    let mut k_values = Vec::with_capacity(k_samples);
    let mut energies = Vec::with_capacity(k_samples);
    let mut vectors = Vec::with_capacity(k_samples);
    for i in 0..k_samples {
        let k = -PI / a + 2.0 * PI / a * (i as f64 / k_samples as f64);
        let h = ribbon.hamiltonian(k);
        let eig = h.symmetric_eigen();
        // Sort pairs ascending by eigenvalue.
        let n = ribbon.n_sites();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&p, &q| {
            eig.eigenvalues[p].partial_cmp(&eig.eigenvalues[q]).expect("finite eigenvalues")
        });
        let evals: Vec<f64> = order.iter().map(|&p| eig.eigenvalues[p]).collect();
        let mut evecs = DMatrix::<f64>::zeros(n, n);
        for (col, &p) in order.iter().enumerate() {
            evecs.set_column(col, &eig.eigenvectors.column(p));
        }
        k_values.push(k);
        energies.push(evals);
        vectors.push(evecs);
    }
    Ok(RibbonBands { ribbon: ribbon.clone(), k_values, energies, vectors })
}

/// One k-connected interface-localized branch inside the bulk gap.
#[derive(Debug, Clone)]
pub struct EdgeBranch {
    pub interface: Interface,
    pub k_values: Vec<f64>,
    pub energies: Vec<f64>,
    pub localization: Vec<f64>,
    pub valley_labels: Vec<Valley>,
}

impl EdgeBranch {
    pub fn len(&self) -> usize {
        self.k_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k_values.is_empty()
    }
}

/// Filters in-gap, wall-localized states and groups them into k-connected
/// branches. An empty vector (no edge state) is a valid result.
pub fn extract_edge_states(
    bands: &RibbonBands,
    localization_threshold: f64,
    interface_window: usize,
) -> Result<Vec<EdgeBranch>, RibbonError> {
    if !(localization_threshold > 0.0 && localization_threshold < 1.0) {
        return Err(RibbonError::InvalidParameter {
            name: "localization_threshold",
            value: localization_threshold,
        });
    }
    let ribbon = &bands.ribbon;
    let gap = ribbon.lattice.delta.abs();
    let dk = 2.0 * PI / (ribbon.lattice.a * bands.k_values.len() as f64);
    // Generous continuity bound: a few k-steps at the maximal band slope.
    let jump_tol = 3.0 * ribbon.lattice.a * ribbon.lattice.t * dk;
    let mut open: Vec<EdgeBranch> = Vec::new();
    let mut closed: Vec<EdgeBranch> = Vec::new();
    for (ik, &k) in bands.k_values.iter().enumerate() {
        let mut points: Vec<(f64, f64)> = Vec::new(); // (energy, localization)
        for (b, &e) in bands.energies[ik].iter().enumerate() {
            if e.abs() >= gap * (1.0 - 1e-9) {
                continue;
            }
            let psi = DVector::from_column_slice(bands.vectors[ik].column(b).as_slice());
            let loc = ribbon.localization(&psi, interface_window);
            if loc > localization_threshold {
                points.push((e, loc));
            }
        }
        let mut extended = alloc::vec![false; open.len()];
        let mut next_open: Vec<EdgeBranch> = Vec::new();
        for (e, loc) in points {
            // Attach to the nearest-energy open branch that continued from
            // the previous k step, else start a new branch.
            let mut best: Option<(usize, f64)> = None;
            for (bi, br) in open.iter().enumerate() {
                if extended[bi] {
                    continue;
                }
                let de = (br.energies[br.energies.len() - 1] - e).abs();
                if de < jump_tol && best.map_or(true, |(_, d)| de < d) {
                    best = Some((bi, de));
                }
            }
            match best {
                Some((bi, _)) => {
                    extended[bi] = true;
                    let br = &mut open[bi];
                    br.k_values.push(k);
                    br.energies.push(e);
                    br.localization.push(loc);
                    br.valley_labels.push(nearest_valley(&ribbon.lattice, k));
                }
                None => next_open.push(EdgeBranch {
                    interface: ribbon.interface,
                    k_values: alloc::vec![k],
                    energies: alloc::vec![e],
                    localization: alloc::vec![loc],
                    valley_labels: alloc::vec![nearest_valley(&ribbon.lattice, k)],
                }),
            }
        }
        // Branches not extended at this k are closed.
        let mut still_open = Vec::new();
        for (bi, br) in open.into_iter().enumerate() {
            if extended[bi] || br.k_values.last() == Some(&k) {
                still_open.push(br);
            } else {
                closed.push(br);
            }
        }
        still_open.extend(next_open);
        open = still_open;
    }
    closed.extend(open);
    closed.retain(|b| !b.is_empty());
    Ok(closed)
}

/// Central-difference group velocity dE/dk at the projected valley
/// momentum (model energy × nm).
pub fn group_velocity(
    spec: &LatticeSpec,
    branch: &EdgeBranch,
    at_valley: Valley,
) -> Result<f64, RibbonError> {
    let k0 = projected_valley_k(spec, at_valley);
    let err = RibbonError::ValleyNotCovered { k: k0 };
    // Nearest branch points on each side of the projected valley.
    let mut left: Option<(f64, f64)> = None;
    let mut right: Option<(f64, f64)> = None;
    for (i, &k) in branch.k_values.iter().enumerate() {
        let e = branch.energies[i];
        if k <= k0 && left.map_or(true, |(kl, _)| k > kl) {
            left = Some((k, e));
        }
        if k >= k0 && right.map_or(true, |(kr, _)| k < kr) {
            right = Some((k, e));
        }
    }
    let (Some((kl, el)), Some((kr, er))) = (left, right) else {
        return Err(err);
    };
    if kr - kl <= 0.0 {
        // Valley exactly on a grid point with no distinct neighbours.
        return Err(err);
    }
    // Reject if the bracketing points are further than a few grid steps.
    let dk = 2.0 * PI / (spec.a * branch.k_values.len().max(2) as f64);
    if kr - kl > 8.0 * dk {
        return Err(err);
    }
    Ok((er - el) / (kr - kl))
}

/// An interface eigenmode usable as a wavepacket carrier.
#[derive(Debug, Clone)]
pub struct CarrierMode {
    /// Grid momentum actually used (nearest to the requested k0).
    pub k0: f64,
    pub energy: f64,
    pub valley: Valley,
    /// Real transverse profile over the supercell sites.
    pub profile: DVector<f64>,
    /// Localization within 6 cells of the wall.
    pub localization: f64,
}

/// Diagonalizes the supercell once at exactly `k0` and picks the most
/// wall-localized in-gap eigenstate.
pub fn interface_mode_exact(ribbon: &Ribbon, k0: f64) -> Result<CarrierMode, RibbonError> {
    let gap = ribbon.lattice.delta.abs();
    let h = ribbon.hamiltonian(k0);
    let eig = h.symmetric_eigen();
    let n = ribbon.n_sites();
    let mut best: Option<(f64, usize)> = None;
    for b in 0..n {
        if eig.eigenvalues[b].abs() >= gap {
            continue;
        }
        let psi = DVector::from_column_slice(eig.eigenvectors.column(b).as_slice());
        let loc = ribbon.localization(&psi, 6);
        if best.map_or(true, |(l, _)| loc > l) {
            best = Some((loc, b));
        }
    }
    let Some((loc, b)) = best else {
        return Err(RibbonError::NoCarrier { k: k0 });
    };
    if loc < 0.5 {
        return Err(RibbonError::NoCarrier { k: k0 });
    }
    Ok(CarrierMode {
        k0,
        energy: eig.eigenvalues[b],
        valley: nearest_valley(&ribbon.lattice, k0),
        profile: DVector::from_column_slice(eig.eigenvectors.column(b).as_slice()),
        localization: loc,
    })
}

/// Picks the most wall-localized in-gap eigenstate at the grid momentum
/// nearest `k0`.
pub fn interface_mode(bands: &RibbonBands, k0: f64) -> Result<CarrierMode, RibbonError> {
    let ribbon = &bands.ribbon;
    let gap = ribbon.lattice.delta.abs();
    let ik = bands
        .k_values
        .iter()
        .enumerate()
        .min_by(|(_, p), (_, q)| {
            (*p - k0).abs().partial_cmp(&(*q - k0).abs()).expect("finite momenta")
        })
        .map(|(i, _)| i)
        .expect("nonempty k grid");
    let mut best: Option<(f64, usize)> = None; // (localization, band)
    for (b, &e) in bands.energies[ik].iter().enumerate() {
        if e.abs() >= gap {
            continue;
        }
        let psi = DVector::from_column_slice(bands.vectors[ik].column(b).as_slice());
        let loc = ribbon.localization(&psi, 6);
        if best.map_or(true, |(l, _)| loc > l) {
            best = Some((loc, b));
        }
    }
    let Some((loc, b)) = best else {
        return Err(RibbonError::NoCarrier { k: k0 });
    };
    if loc < 0.5 {
        return Err(RibbonError::NoCarrier { k: k0 });
    }
    let k = bands.k_values[ik];
    Ok(CarrierMode {
        k0: k,
        energy: bands.energies[ik][b],
        valley: nearest_valley(&ribbon.lattice, k),
        profile: DVector::from_column_slice(bands.vectors[ik].column(b).as_slice()),
        localization: loc,
    })
}
