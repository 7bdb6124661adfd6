//! Finite tight-binding devices: a rectangular honeycomb patch with a
//! signed-mass domain assignment, named absorbing ports on the boundary,
//! and (for mirror-symmetric geometries) the exact reflection permutation.
//!
//! Domain walls follow the zigzag directions and pass through hexagon
//! centers at height a0/2 above the A rows, so no site ever sits on a
//! wall. Geometries:
//!
//! * `straight` — one horizontal wall, ports a (left) / b (right).
//! * `z` — two 120° bends lifting the wall by 10 rows.
//! * `omega` — four 120° bends (up, across, down, and back out).
//! * `hsbs` — four wedge-shaped domains around a junction: input wall to
//!   port a (left), continuation to b (right), bent walls to c (top) and
//!   d (bottom); mirror symmetric about the input axis y = a0/2.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use core::f64::consts::PI;

use num_complex::Complex64;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::lattice::LatticeSpec;

/// Ramp width of the absorbing boundary layer, in lattice constants.
pub const ABSORBER_CELLS: f64 = 8.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DeviceError {
    #[error("extent must be >= 24 cells per arm, got {0}")]
    ExtentTooSmall(usize),
    #[error("lead_length must be >= 10 cells (absorber ramp is 8), got {0}")]
    LeadTooShort(usize),
    #[error("geometry too small for absorbers: extent {extent} <= 2 x lead_length {lead_length}")]
    InvalidGeometry { extent: usize, lead_length: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Geometry {
    Straight,
    Z,
    Omega,
    Hsbs,
}

impl Geometry {
    pub fn as_str(self) -> &'static str {
        match self {
            Geometry::Straight => "straight",
            Geometry::Z => "z",
            Geometry::Omega => "omega",
            Geometry::Hsbs => "hsbs",
        }
    }
}

/// Which rectangle boundary a port occupies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Edge {
    Left,
    Right,
    Top,
    Bottom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Port {
    pub name: &'static str,
    pub edge: Edge,
}

/// One lattice site of the finite device.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Site {
    pub m: i32,
    pub n: i32,
    /// 0 = A, 1 = B.
    pub sub: u8,
    pub x: f64,
    pub y: f64,
}

/// Immutable finite device: sites, hoppings, mass mask, ports, absorbers.
#[derive(Debug, Clone)]
pub struct DeviceGraph {
    pub lattice: LatticeSpec,
    pub geometry: Geometry,
    /// Half-width of the rectangle in lattice constants.
    pub extent: usize,
    pub lead_length: usize,
    pub sites: Vec<Site>,
    /// CSR adjacency: neighbours of site i are
    /// `targets[offsets[i]..offsets[i+1]]`; every bond carries −t.
    pub offsets: Vec<u32>,
    pub targets: Vec<u32>,
    /// Signed onsite mass per site.
    pub mass: Vec<f64>,
    /// Absorber profile in [0, 1] (peak at the boundary); multiply by the
    /// peak rate γ to get the onsite −iγ term.
    pub gamma_profile: Vec<f64>,
    /// Port index per site (ports of the absorber the site belongs to),
    /// −1 outside absorbers.
    pub port_of: Vec<i32>,
    pub ports: Vec<Port>,
    /// Site permutation realizing the y ↦ a0 − y mirror, when the
    /// geometry is mirror symmetric (straight, hsbs).
    pub mirror_perm: Option<Vec<u32>>,
    pub x_half: f64,
    pub y_lo: f64,
    pub y_hi: f64,
}

/// Wall vertex chains in (m, n) lattice coordinates; a vertex (m, n) is
/// the hexagon-row point at x = (m + n/2)·a, y = n·(√3/2)·a + a0/2.
fn wall_chain(geometry: Geometry) -> Vec<(i32, i32)> {
    match geometry {
        Geometry::Straight => alloc::vec![],
        Geometry::Z => alloc::vec![(0, 0), (-10, 10)],
        Geometry::Omega => alloc::vec![(-5, 0), (-15, 10), (5, 10), (5, 0)],
        Geometry::Hsbs => alloc::vec![],
    }
}

/// Vertical extents (below, above) of the rectangle in lattice constants.
fn heights(geometry: Geometry) -> (f64, f64) {
    match geometry {
        Geometry::Straight => (12.0, 12.0),
        Geometry::Z | Geometry::Omega => (12.0, 12.0 + 10.0 * 3.0_f64.sqrt() / 2.0),
        Geometry::Hsbs => (16.0, 16.0),
    }
}

/// Builds the device for one of the fixed geometries.
pub fn build_device(
    spec: &LatticeSpec,
    geometry: Geometry,
    extent: usize,
    lead_length: usize,
) -> Result<DeviceGraph, DeviceError> {
    if extent < 24 {
        return Err(DeviceError::ExtentTooSmall(extent));
    }
    if lead_length < 10 {
        return Err(DeviceError::LeadTooShort(lead_length));
    }
    if extent <= 2 * lead_length {
        return Err(DeviceError::InvalidGeometry { extent, lead_length });
    }
    let a = spec.a;
    let a0 = spec.a0();
    let x_half = extent as f64 * a;
    let (h_lo, h_hi) = heights(geometry);
    let y_lo = 0.5 * a0 - h_lo * a;
    let y_hi = 0.5 * a0 + h_hi * a;
    let (a1, a2) = spec.primitive_vectors();
    let offs = spec.sublattice_offsets;

    // Enumerate sites inside the rectangle.
    let m_max = (2.0 * (x_half + y_hi.abs().max(y_lo.abs())) / a) as i32 + 4;
    let n_lo = (y_lo / (a * 3.0_f64.sqrt() / 2.0)).floor() as i32 - 2;
    let n_hi = (y_hi / (a * 3.0_f64.sqrt() / 2.0)).ceil() as i32 + 2;
    let mut sites = Vec::new();
    let mut index: BTreeMap<(i32, i32, u8), u32> = BTreeMap::new();
    for m in -m_max..=m_max {
        for n in n_lo..=n_hi {
            let base = a1 * m as f64 + a2 * n as f64;
            for sub in 0u8..2 {
                let p = base + offs[sub as usize];
                if p.x >= -x_half && p.x <= x_half && p.y >= y_lo && p.y <= y_hi {
                    index.insert((m, n, sub), sites.len() as u32);
                    sites.push(Site { m, n, sub, x: p.x, y: p.y });
                }
            }
        }
    }

    // Domain assignment.
    let chain = wall_chain(geometry);
    let verts: Vec<(f64, f64)> = chain
        .iter()
        .map(|&(m, n)| {
            ((m as f64 + 0.5 * n as f64) * a, n as f64 * 3.0_f64.sqrt() / 2.0 * a + 0.5 * a0)
        })
        .collect();
    let domain_sign = |x: f64, y: f64| -> f64 {
        match geometry {
            Geometry::Hsbs => {
                // Four 60°/120° wedges around the junction at (0, a0/2).
                let mut ang = (y - 0.5 * a0).atan2(x);
                if ang < 0.0 {
                    ang += 2.0 * PI;
                }
                if ang < 2.0 * PI / 3.0 {
                    1.0
                } else if ang < PI {
                    -1.0
                } else if ang < 4.0 * PI / 3.0 {
                    1.0
                } else {
                    -1.0
                }
            }
            _ => {
                // Ray casting against the wall polyline, extended
                // horizontally to infinity at both ends. The small x shift
                // keeps the ray clear of vertices.
                let xr = x + 1.2345e-4 * a;
                let big = 1e7 * a;
                let mut segs: Vec<((f64, f64), (f64, f64))> = Vec::new();
                if verts.is_empty() {
                    segs.push(((-big, 0.5 * a0), (big, 0.5 * a0)));
                } else {
                    segs.push(((-big, verts[0].1), verts[0]));
                    for w in verts.windows(2) {
                        segs.push((w[0], w[1]));
                    }
                    segs.push(((verts[verts.len() - 1]), (big, verts[verts.len() - 1].1)));
                }
                let mut crossings = 0;
                for (p, q) in segs {
                    let ((x0, y0), (x1, y1)) = if p.0 <= q.0 { (p, q) } else { (q, p) };
                    if x0 <= xr && xr < x1 {
                        let yw = y0 + (y1 - y0) * (xr - x0) / (x1 - x0);
                        if yw < y {
                            crossings += 1;
                        }
                    }
                }
                // Above the wall: domain sign −1; below: +1.
                if crossings % 2 == 1 {
                    -1.0
                } else {
                    1.0
                }
            }
        }
    };
    let mass: Vec<f64> = sites
        .iter()
        .map(|s| {
            let sub_sign = if s.sub == 0 { 1.0 } else { -1.0 };
            domain_sign(s.x, s.y) * sub_sign * spec.delta.abs()
        })
        .collect();

    // CSR adjacency: A(m,n) bonds to B(m,n), B(m,n−1), B(m+1,n−1).
    let mut nbrs: Vec<Vec<u32>> = alloc::vec![Vec::new(); sites.len()];
    for (&(m, n, sub), &i) in &index {
        if sub != 0 {
            continue;
        }
        for (dm, dn) in [(0, 0), (0, -1), (1, -1)] {
            if let Some(&j) = index.get(&(m + dm, n + dn, 1)) {
                nbrs[i as usize].push(j);
                nbrs[j as usize].push(i);
            }
        }
    }
    let mut offsets = Vec::with_capacity(sites.len() + 1);
    let mut targets = Vec::new();
    offsets.push(0u32);
    for list in &nbrs {
        targets.extend_from_slice(list);
        offsets.push(targets.len() as u32);
    }

    // Ports and absorber ramps.
    let ports: Vec<Port> = match geometry {
        Geometry::Hsbs => alloc::vec![
            Port { name: "a", edge: Edge::Left },
            Port { name: "b", edge: Edge::Right },
            Port { name: "c", edge: Edge::Top },
            Port { name: "d", edge: Edge::Bottom },
        ],
        _ => alloc::vec![
            Port { name: "a", edge: Edge::Left },
            Port { name: "b", edge: Edge::Right },
        ],
    };
    let gw = ABSORBER_CELLS * a;
    let mut gamma_profile = alloc::vec![0.0; sites.len()];
    let mut port_of = alloc::vec![-1i32; sites.len()];
    for (i, s) in sites.iter().enumerate() {
        let mut best: Option<(usize, f64)> = None;
        for (pi, port) in ports.iter().enumerate() {
            let d = match port.edge {
                Edge::Left => s.x + x_half,
                Edge::Right => x_half - s.x,
                Edge::Top => y_hi - s.y,
                Edge::Bottom => s.y - y_lo,
            };
            if best.map_or(true, |(_, bd)| d < bd) {
                best = Some((pi, d));
            }
        }
        if let Some((pi, d)) = best {
            if d < gw {
                gamma_profile[i] = 1.0 - d / gw;
                port_of[i] = pi as i32;
            }
        }
    }

    // Mirror permutation about y = a0/2: (m, n, A) ↔ (m+n, −n, B).
    let mirror_perm = match geometry {
        Geometry::Straight | Geometry::Hsbs => {
            let mut perm = alloc::vec![0u32; sites.len()];
            let mut total = true;
            for (&(m, n, sub), &i) in &index {
                match index.get(&(m + n, -n, 1 - sub)) {
                    Some(&j) => perm[i as usize] = j,
                    None => {
                        total = false;
                        break;
                    }
                }
            }
            if total {
                Some(perm)
            } else {
                None
            }
        }
        _ => None,
    };

    Ok(DeviceGraph {
        lattice: spec.clone(),
        geometry,
        extent,
        lead_length,
        sites,
        offsets,
        targets,
        mass,
        gamma_profile,
        port_of,
        ports,
        mirror_perm,
        x_half,
        y_lo,
        y_hi,
    })
}

impl DeviceGraph {
    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn port_index(&self, name: &str) -> Option<usize> {
        self.ports.iter().position(|p| p.name == name)
    }

    /// y = H ψ (+= into `out`, which is zeroed first).
    pub fn apply_hamiltonian(&self, psi: &[Complex64], out: &mut [Complex64]) {
        let t = self.lattice.t;
        for i in 0..self.n_sites() {
            let mut acc = psi[i] * self.mass[i];
            for &j in &self.targets[self.offsets[i] as usize..self.offsets[i + 1] as usize] {
                acc -= psi[j as usize] * t;
            }
            out[i] = acc;
        }
    }

    /// Pulls the state back through the mirror permutation.
    pub fn apply_mirror(&self, psi: &[Complex64]) -> Option<Vec<Complex64>> {
        let perm = self.mirror_perm.as_ref()?;
        let mut out = alloc::vec![Complex64::new(0.0, 0.0); psi.len()];
        for (i, &j) in perm.iter().enumerate() {
            out[i] = psi[j as usize];
        }
        Some(out)
    }

    /// True if the graph is connected (single BFS component).
    pub fn is_connected(&self) -> bool {
        if self.sites.is_empty() {
            return true;
        }
        let mut seen = alloc::vec![false; self.n_sites()];
        let mut stack = alloc::vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = stack.pop() {
            for &j in &self.targets[self.offsets[i] as usize..self.offsets[i + 1] as usize] {
                if !seen[j as usize] {
                    seen[j as usize] = true;
                    count += 1;
                    stack.push(j as usize);
                }
            }
        }
        count == self.n_sites()
    }

    /// Serializable dump of sites and bonds (for device.json).
    pub fn bonds(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::new();
        for i in 0..self.n_sites() {
            for &j in &self.targets[self.offsets[i] as usize..self.offsets[i + 1] as usize] {
                if (i as u32) < j {
                    out.push((i as u32, j));
                }
            }
        }
        out
    }

    /// Map from (m, n, sub) to the site index.
    pub fn site_index(&self, m: i32, n: i32, sub: u8) -> Option<usize> {
        // Sites are stored in (m, n, sub) BTreeMap order, so binary search works.
        self.sites
            .binary_search_by(|s| (s.m, s.n, s.sub).cmp(&(m, n, sub)))
            .ok()
    }

    pub fn port_name(&self, idx: usize) -> String {
        String::from(self.ports[idx].name)
    }
}
