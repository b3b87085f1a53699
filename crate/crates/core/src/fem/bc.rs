use serde::{Deserialize, Serialize};

use super::space::Space;
use crate::error::{Error, Result};
use crate::geometry::{Mesh, Tag};

/// Volumetric inflow of the full (unsymmetrized) cell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InflowSpec {
    /// Total inlet flow rate V̇_in [m³/s]; halved on a half-symmetry mesh.
    pub flow_rate: f64,
}

impl InflowSpec {
    /// 7.5 mL/min.
    pub const DEFAULT_FLOW_RATE: f64 = 7.5e-6 / 60.0;

    /// Flow rate entering the meshed domain.
    pub fn domain_flow_rate(&self, mesh: &Mesh) -> f64 {
        if mesh.half_symmetry {
            0.5 * self.flow_rate
        } else {
            self.flow_rate
        }
    }
}

impl Default for InflowSpec {
    fn default() -> Self {
        Self {
            flow_rate: Self::DEFAULT_FLOW_RATE,
        }
    }
}

/// Strongly imposed velocity components.
#[derive(Clone, Debug)]
pub struct Dirichlet {
    /// Constrained dofs in increasing order.
    pub dofs: Vec<usize>,
    pub values: Vec<f64>,
    pub is_fixed: Vec<bool>,
    /// Peak speed of the inlet profile [m/s].
    pub inlet_peak: f64,
}

#[derive(Clone, Copy, PartialEq, PartialOrd)]
enum Kind {
    None,
    /// Normal component only; `true` when the normal is the x axis.
    Sym(bool),
    Wall,
    In,
}

impl Dirichlet {
    /// `skip_int` leaves INT edges unconstrained (interface of the porous model).
    pub fn new(mesh: &Mesh, space: &Space, inflow: &InflowSpec, skip_int: bool) -> Result<Self> {
        let coords = space.node_coords(mesh);
        let mut kind = vec![Kind::None; space.n_vel];
        let mut mark = |node: usize, k: Kind| {
            let cur = kind[node];
            let rank = |k: Kind| match k {
                Kind::None => 0,
                Kind::Sym(_) => 1,
                Kind::Wall => 2,
                Kind::In => 3,
            };
            if rank(k) > rank(cur) {
                kind[node] = k;
            } else if let (Kind::Sym(a), Kind::Sym(b)) = (cur, k) {
                if a != b {
                    // two symmetry lines meeting: both components vanish
                    kind[node] = Kind::Wall;
                }
            }
        };
        let mut in_length = 0.0;
        for e in &mesh.boundary {
            let [a, b] = e.nodes;
            let mid = space
                .mid_node(a, b)
                .ok_or_else(|| Error::Mesh(format!("boundary edge ({a},{b}) is not a mesh edge")))?;
            let k = match e.tag {
                Tag::Out => continue,
                Tag::Int if skip_int => continue,
                Tag::In => {
                    in_length += mesh.edge_length(e);
                    Kind::In
                }
                Tag::Sym => {
                    let (p, q) = (mesh.nodes[a], mesh.nodes[b]);
                    let (dx, dy) = ((q[0] - p[0]).abs(), (q[1] - p[1]).abs());
                    if dx <= 1e-12 * dy {
                        Kind::Sym(true)
                    } else if dy <= 1e-12 * dx {
                        Kind::Sym(false)
                    } else {
                        return Err(Error::Config("SYM edges must be axis-aligned".into()));
                    }
                }
                t if t.is_wall_like() => Kind::Wall,
                _ => unreachable!(),
            };
            for node in [a, b, mid] {
                mark(node, k);
            }
        }

        let opening = mesh.inlet.as_ref();
        let mut inlet_peak = 0.0;
        if in_length > 0.0 {
            let o = opening.ok_or_else(|| Error::Config("mesh has IN edges but no inlet opening".into()))?;
            if !(o.half_width > 0.0) {
                return Err(Error::Config("inlet opening has zero width".into()));
            }
            // ∫_{Γ_in} φ ds for the unit profile; Simpson's rule is exact for the
            // quadratic trace on straight edges
            let mut integral = 0.0;
            for e in mesh.boundary.iter().filter(|e| e.tag == Tag::In) {
                let [a, b] = e.nodes;
                let m = space.mid_node(a, b).expect("checked above");
                let f = |n: usize| unit_profile(o, coords[n]);
                integral += mesh.edge_length(e) / 6.0 * (f(a) + 4.0 * f(m) + f(b));
            }
            if !(integral > 0.0) {
                return Err(Error::Config("inlet profile integrates to zero".into()));
            }
            inlet_peak = inflow.domain_flow_rate(mesh) / mesh.effective_depth() / integral;
        } else if inflow.flow_rate != 0.0 && mesh.boundary.iter().any(|e| e.tag == Tag::In) {
            return Err(Error::Config("IN edges have zero length".into()));
        }

        let n_dofs = space.n_dofs;
        let mut is_fixed = vec![false; n_dofs];
        let mut vals = vec![0.0; n_dofs];
        for (node, k) in kind.iter().enumerate() {
            let (ux, uy) = (space.ux(node), space.uy(node));
            match *k {
                Kind::None => {}
                Kind::Sym(x_normal) => is_fixed[if x_normal { ux } else { uy }] = true,
                Kind::Wall => {
                    is_fixed[ux] = true;
                    is_fixed[uy] = true;
                }
                Kind::In => {
                    let o = opening.expect("IN nodes imply an opening");
                    let s = inlet_peak * unit_profile(o, coords[node]);
                    is_fixed[ux] = true;
                    is_fixed[uy] = true;
                    vals[ux] = s * o.inward[0];
                    vals[uy] = s * o.inward[1];
                }
            }
        }
        let dofs: Vec<usize> = (0..n_dofs).filter(|&d| is_fixed[d]).collect();
        let values = dofs.iter().map(|&d| vals[d]).collect();
        Ok(Self {
            dofs,
            values,
            is_fixed,
            inlet_peak,
        })
    }

    /// Zero initial guess with the Dirichlet values lifted in.
    pub fn lift(&self, n_dofs: usize) -> Vec<f64> {
        let mut x = vec![0.0; n_dofs];
        self.impose(&mut x);
        x
    }

    pub fn impose(&self, x: &mut [f64]) {
        for (&d, &v) in self.dofs.iter().zip(&self.values) {
            x[d] = v;
        }
    }

    pub fn apply_to_residual(&self, r: &mut [f64], x: &[f64]) {
        for (&d, &v) in self.dofs.iter().zip(&self.values) {
            r[d] = x[d] - v;
        }
    }

    /// Zeroes the constrained entries of a vector.
    pub fn zero_fixed(&self, v: &mut [f64]) {
        for &d in &self.dofs {
            v[d] = 0.0;
        }
    }
}

/// Parabolic profile with unit peak across the opening, zero outside.
fn unit_profile(o: &crate::geometry::Opening, p: [f64; 2]) -> f64 {
    let t = [-o.inward[1], o.inward[0]];
    let s = (p[0] - o.center[0]) * t[0] + (p[1] - o.center[1]) * t[1];
    let r = s / o.half_width;
    (1.0 - r * r).max(0.0)
}
