//! Parallel-channel flow-field geometries: parameters, triangulation, boundary
//! tagging, quality metrics and admissible mesh deformations.

mod build;
mod deform;
mod io;
mod quality;
mod topology;

pub use build::{build_parallel_flow_field, build_straight_channel};
pub use deform::{apply_deformation, DeformationField, DesignSpace, NodeMotion};
pub use io::{mesh_to_string, read_mesh, write_mesh, MeshFields, MeshFile};
pub use quality::{mesh_quality, triangle_quality, QualityReport, QualityThresholds};
pub use topology::Topology;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Boundary labels. Together they partition the boundary of the fluid domain;
/// `Int` marks the fluid/porous interface of an extended validation mesh.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Tag {
    In,
    Wall,
    Out,
    Sym,
    Int,
    WssIn,
    WssOut,
}

impl Tag {
    pub const ALL: [Tag; 7] = [
        Tag::In,
        Tag::Wall,
        Tag::Out,
        Tag::Sym,
        Tag::Int,
        Tag::WssIn,
        Tag::WssOut,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Tag::In => "IN",
            Tag::Wall => "WALL",
            Tag::Out => "OUT",
            Tag::Sym => "SYM",
            Tag::Int => "INT",
            Tag::WssIn => "WSS_IN",
            Tag::WssOut => "WSS_OUT",
        }
    }

    pub fn parse(s: &str) -> Option<Tag> {
        Tag::ALL.into_iter().find(|t| t.as_str() == s)
    }

    /// No-slip walls of the planar model (the interface counts as a wall there).
    pub fn is_wall_like(self) -> bool {
        matches!(self, Tag::Wall | Tag::WssIn | Tag::WssOut | Tag::Int)
    }

    pub fn is_wss(self) -> bool {
        matches!(self, Tag::WssIn | Tag::WssOut)
    }
}

/// Triangle label for plain fluid (distributors).
pub const LABEL_FLUID: i32 = 0;
/// Triangle label of the porous strip added for validation.
pub const LABEL_POROUS: i32 = -1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub tag: Tag,
}

/// One straight channel. Corner nodes are named by flow direction: `up_*`
/// at the inlet-side mouth, `down_*` at the outlet side; `a`/`b` are the two
/// side walls.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelInfo {
    /// 1-based channel index, equal to the triangle label.
    pub index: usize,
    /// Unit vector along the channel in the direction of flow.
    pub axis: [f64; 2],
    pub width: f64,
    pub up_a: usize,
    pub up_b: usize,
    pub down_a: usize,
    pub down_b: usize,
}

/// A straight inflow opening carrying a parabolic profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Opening {
    /// Profile centre. Under half symmetry this lies on the symmetry line.
    pub center: [f64; 2],
    pub half_width: f64,
    /// Unit normal pointing into the domain.
    pub inward: [f64; 2],
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    pub nodes: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    /// Per-triangle label: [`LABEL_FLUID`], a channel index ≥ 1, or [`LABEL_POROUS`].
    pub labels: Vec<i32>,
    pub boundary: Vec<BoundaryEdge>,
    pub channels: Vec<ChannelInfo>,
    pub inlet: Option<Opening>,
    /// Out-of-plane channel depth; enables the plate-friction closure.
    pub depth_h: Option<f64>,
    pub target_h: f64,
    pub half_symmetry: bool,
}

/// Parametric description of the parallel-channel layout. Lengths in metres.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowFieldParams {
    /// Channel count of the full geometry.
    pub n_channels: usize,
    pub channel_width: f64,
    /// Centre-to-centre channel pitch.
    pub channel_spacing: f64,
    /// Length of the channels next to the symmetry plane.
    pub channel_length_center: f64,
    /// Length of the outermost channel relative to the central one; lengths
    /// taper linearly in between. 1.0 gives equal lengths.
    #[serde(default = "one")]
    pub outer_length_ratio: f64,
    pub distributor_depth_in: f64,
    pub distributor_depth_out: f64,
    pub inlet_width: f64,
    pub outlet_width: f64,
    /// Out-of-plane depth; `None` switches the drag closure off.
    pub depth_h: Option<f64>,
    pub half_symmetry: bool,
}

fn one() -> f64 {
    1.0
}

impl Default for FlowFieldParams {
    /// Desk-scale six-channel layout. These dimensions are assumptions chosen so
    /// that the residence-time target of 3.4 s is reachable at 7.5 mL/min; they
    /// are not measured cell dimensions.
    fn default() -> Self {
        Self {
            n_channels: 6,
            channel_width: 2.0e-3,
            channel_spacing: 3.0e-3,
            channel_length_center: 26.0e-3,
            outer_length_ratio: 0.8,
            distributor_depth_in: 8.0e-3,
            distributor_depth_out: 8.0e-3,
            inlet_width: 3.0e-3,
            outlet_width: 3.0e-3,
            depth_h: Some(1.5e-3),
            half_symmetry: true,
        }
    }
}

impl FlowFieldParams {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Geometry(m.to_string()));
        if self.n_channels < 1 {
            return fail("n_channels must be at least 1");
        }
        if self.half_symmetry && (self.n_channels < 2 || self.n_channels % 2 != 0) {
            return fail("n_channels must be even and >= 2 under half symmetry");
        }
        let lengths = [
            ("channel_width", self.channel_width),
            ("channel_spacing", self.channel_spacing),
            ("channel_length_center", self.channel_length_center),
            ("distributor_depth_in", self.distributor_depth_in),
            ("distributor_depth_out", self.distributor_depth_out),
            ("inlet_width", self.inlet_width),
            ("outlet_width", self.outlet_width),
        ];
        for (name, v) in lengths {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Geometry(format!("{name} must be strictly positive, got {v}")));
            }
        }
        if let Some(h) = self.depth_h {
            if !(h.is_finite() && h > 0.0) {
                return fail("depth_h must be strictly positive when set");
            }
        }
        if self.channel_spacing <= self.channel_width {
            return Err(Error::Geometry(format!(
                "channel_spacing ({}) must exceed channel_width ({}): channels overlap",
                self.channel_spacing, self.channel_width
            )));
        }
        if !(self.outer_length_ratio > 0.0 && self.outer_length_ratio <= 1.0) {
            return fail("outer_length_ratio must lie in (0, 1]");
        }
        let span = self.n_channels as f64 * self.channel_spacing;
        if self.inlet_width > span || self.outlet_width > span {
            return fail("inlet_width and outlet_width must not exceed the flow-field width");
        }
        Ok(())
    }

    /// Channels meshed under the symmetry flag.
    pub fn meshed_channels(&self) -> usize {
        if self.half_symmetry {
            self.n_channels / 2
        } else {
            self.n_channels
        }
    }
}

impl Mesh {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let (p, q, r) = (self.nodes[a], self.nodes[b], self.nodes[c]);
        0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]))
    }

    pub fn edge_length(&self, e: &BoundaryEdge) -> f64 {
        let (p, q) = (self.nodes[e.nodes[0]], self.nodes[e.nodes[1]]);
        ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt()
    }

    pub fn boundary_length(&self, tag: Tag) -> f64 {
        self.boundary
            .iter()
            .filter(|e| e.tag == tag)
            .map(|e| self.edge_length(e))
            .sum()
    }

    pub fn channel(&self, index: usize) -> Option<&ChannelInfo> {
        self.channels.iter().find(|c| c.index == index)
    }

    /// Channel length: mean projected length of the two side walls.
    pub fn channel_length(&self, c: &ChannelInfo) -> f64 {
        let proj = |u: usize, d: usize| {
            let (p, q) = (self.nodes[u], self.nodes[d]);
            ((q[0] - p[0]) * c.axis[0] + (q[1] - p[1]) * c.axis[1]).abs()
        };
        0.5 * (proj(c.up_a, c.down_a) + proj(c.up_b, c.down_b))
    }

    pub fn channel_lengths(&self) -> Vec<f64> {
        self.channels.iter().map(|c| self.channel_length(c)).collect()
    }

    /// Area of the triangles carrying `label`.
    pub fn label_area(&self, label: i32) -> f64 {
        (0..self.n_triangles())
            .filter(|&t| self.labels[t] == label)
            .map(|t| self.signed_area(t))
            .sum()
    }

    /// Effective out-of-plane depth used to turn planar fluxes into volume
    /// flow rates: `depth_h` when the drag closure is active, otherwise 1.
    pub fn effective_depth(&self) -> f64 {
        self.depth_h.unwrap_or(1.0)
    }

    /// Bounding box `[xmin, ymin, xmax, ymax]`.
    pub fn bounds(&self) -> [f64; 4] {
        let mut b = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
        for p in &self.nodes {
            b[0] = b[0].min(p[0]);
            b[1] = b[1].min(p[1]);
            b[2] = b[2].max(p[0]);
            b[3] = b[3].max(p[1]);
        }
        b
    }

    /// Diagonal of the bounding box.
    pub fn size(&self) -> f64 {
        let b = self.bounds();
        ((b[2] - b[0]).powi(2) + (b[3] - b[1]).powi(2)).sqrt()
    }

    /// Structural consistency checks: index ranges, orientation, labels.
    pub fn check(&self) -> Result<()> {
        let n = self.nodes.len();
        if self.labels.len() != self.triangles.len() {
            return Err(Error::Mesh("label count differs from triangle count".into()));
        }
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= n) {
                return Err(Error::Mesh(format!("triangle {t} references a missing node")));
            }
            let a = self.signed_area(t);
            if a <= 0.0 {
                return Err(Error::InvertedElement { element: t, area: a });
            }
        }
        for e in &self.boundary {
            if e.nodes.iter().any(|&v| v >= n) {
                return Err(Error::Mesh("boundary edge references a missing node".into()));
            }
        }
        for c in &self.channels {
            if [c.up_a, c.up_b, c.down_a, c.down_b].iter().any(|&v| v >= n) {
                return Err(Error::Mesh(format!("channel {} corner out of range", c.index)));
            }
        }
        Ok(())
    }
}
