//! Per-channel diagnostics and the comparison of the simplified model with
//! the Brinkman model on porous-rib meshes.

mod ptl;

pub use ptl::{extend_with_ptl, PorousExtension};

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::export::net_flux;
use crate::fem::{FlowSolver, FluidProps, InflowSpec, Model, Space};
use crate::functionals::wall_shear_stress;
use crate::geometry::{Mesh, Tag, LABEL_POROUS};

/// Flow rates across the mid cross-section of the channel array.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossSection {
    /// V̇_i [m³/s] per channel, in `mesh.channels` order.
    pub channels: Vec<f64>,
    /// Flow through the porous strip [m³/s].
    pub porous: f64,
}

/// Nodal upstream indicator of the cut through the channel mid-heights.
/// Between channels the cut height is interpolated linearly.
fn upstream_indicator(mesh: &Mesh) -> Result<Vec<f64>> {
    let axis = mesh.channels[0].axis;
    if mesh
        .channels
        .iter()
        .any(|c| (c.axis[0] - axis[0]).abs() > 1e-12 || (c.axis[1] - axis[1]).abs() > 1e-12)
    {
        return Err(Error::Mesh("cross-section needs parallel channels".into()));
    }
    let normal = [-axis[1], axis[0]];
    let s = |p: [f64; 2]| p[0] * axis[0] + p[1] * axis[1];
    let r = |p: [f64; 2]| p[0] * normal[0] + p[1] * normal[1];
    let mut knots: Vec<(f64, f64)> = Vec::new();
    for c in &mesh.channels {
        let corners = [c.up_a, c.up_b, c.down_a, c.down_b].map(|v| mesh.nodes[v]);
        let mid = corners.iter().map(|&p| s(p)).sum::<f64>() / 4.0;
        knots.push((r(corners[0]), mid));
        knots.push((r(corners[1]), mid));
    }
    knots.sort_by(|a, b| a.0.total_cmp(&b.0));
    let cut = |x: f64| -> f64 {
        if x <= knots[0].0 {
            return knots[0].1;
        }
        for w in knots.windows(2) {
            if x <= w[1].0 {
                let span = w[1].0 - w[0].0;
                return if span > 0.0 {
                    w[0].1 + (w[1].1 - w[0].1) * (x - w[0].0) / span
                } else {
                    w[1].1
                };
            }
        }
        knots[knots.len() - 1].1
    };
    Ok(mesh.nodes.iter().map(|&p| if s(p) < cut(r(p)) { 1.0 } else { 0.0 }).collect())
}

/// Flow rates through the mid cross-section, scaled by the out-of-plane
/// depth. The flux is the consistent one of the discrete continuity
/// equation: with q the P1 indicator of the upstream side,
/// −∫ ∇q·u dx equals the inflow exactly, and splits over the elements
/// straddling the cut.
pub fn cross_section_flows(mesh: &Mesh, space: &Space, x: &[f64]) -> Result<CrossSection> {
    if mesh.channels.is_empty() {
        return Err(Error::Mesh("mesh has no channels".into()));
    }
    let q = upstream_indicator(mesh)?;
    let depth = mesh.effective_depth();
    let mut channels = vec![0.0; mesh.channels.len()];
    let mut cut = vec![false; mesh.channels.len()];
    let mut porous = 0.0;
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let qv = tri.map(|v| q[v]);
        if qv[0] == qv[1] && qv[1] == qv[2] {
            continue;
        }
        let p = tri.map(|v| mesh.nodes[v]);
        let det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
        let gx = ((qv[1] - qv[0]) * (p[2][1] - p[0][1]) - (qv[2] - qv[0]) * (p[1][1] - p[0][1])) / det;
        let gy = ((qv[2] - qv[0]) * (p[1][0] - p[0][0]) - (qv[1] - qv[0]) * (p[2][0] - p[0][0])) / det;
        // ∫ u over a P2 triangle only sees the edge midpoints
        let nodes = space.elem_nodes[t];
        let mut ui = [0.0; 2];
        for &m in &nodes[3..] {
            let u = space.velocity(x, m);
            ui[0] += u[0];
            ui[1] += u[1];
        }
        let area = 0.5 * det;
        let f = -depth * area / 3.0 * (gx * ui[0] + gy * ui[1]);
        match mesh.labels[t] {
            l if l >= 1 => {
                let k = mesh
                    .channels
                    .iter()
                    .position(|c| c.index == l as usize)
                    .ok_or_else(|| Error::Mesh(format!("triangle {t} carries unknown channel label {l}")))?;
                channels[k] += f;
                cut[k] = true;
            }
            LABEL_POROUS => porous += f,
            _ => return Err(Error::Mesh(format!("cross-section passes through distributor element {t}"))),
        }
    }
    if let Some(k) = cut.iter().position(|&c| !c) {
        return Err(Error::Mesh(format!(
            "cross-section does not intersect channel {}",
            mesh.channels[k].index
        )));
    }
    Ok(CrossSection { channels, porous })
}

/// Per-channel flow rates V̇_i [m³/s].
pub fn channel_flow_rates(mesh: &Mesh, space: &Space, x: &[f64]) -> Result<Vec<f64>> {
    Ok(cross_section_flows(mesh, space, x)?.channels)
}

/// Residence times L_i / v̄_i with v̄_i the mean axial speed over the channel.
fn residence_times(mesh: &Mesh, space: &Space, x: &[f64]) -> Vec<f64> {
    let mut flux = vec![0.0; mesh.channels.len()];
    let mut area = vec![0.0; mesh.channels.len()];
    for (t, &l) in mesh.labels.iter().enumerate() {
        let Some(k) = mesh.channels.iter().position(|c| l >= 1 && c.index == l as usize) else {
            continue;
        };
        let axis = mesh.channels[k].axis;
        let a = mesh.signed_area(t);
        let s: f64 = space.elem_nodes[t][3..]
            .iter()
            .map(|&m| {
                let u = space.velocity(x, m);
                u[0] * axis[0] + u[1] * axis[1]
            })
            .sum();
        flux[k] += a / 3.0 * s;
        area[k] += a;
    }
    mesh.channels
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let v = flux[k].abs() / area[k];
            if v > 0.0 {
                mesh.channel_length(c) / v
            } else {
                f64::INFINITY
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WssSample {
    pub boundary: Tag,
    pub x: f64,
    pub y: f64,
    /// Wall shear stress [Pa].
    pub sigma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub shape: String,
    pub model: Model,
    /// Flow rate entering the meshed domain [m³/s].
    pub inlet_flow: f64,
    /// V̇_i [m³/s] in channel order.
    pub flow_rates: Vec<f64>,
    /// τ_i [s].
    pub residence_times: Vec<f64>,
    /// Flow through the porous strip at the mid cross-section [m³/s].
    pub porous_flow: f64,
    /// Net planar outflow through the boundary, scaled like the flow rates.
    pub net_flux: f64,
    /// σ at three points per edge of each WSS boundary.
    pub wss: Vec<WssSample>,
}

impl DiagnosticsReport {
    pub fn new(
        shape: &str,
        model: Model,
        mesh: &Mesh,
        space: &Space,
        x: &[f64],
        props: &FluidProps,
        inflow: &InflowSpec,
    ) -> Result<Self> {
        let cs = cross_section_flows(mesh, space, x)?;
        let mut wss = Vec::new();
        for tag in [Tag::WssIn, Tag::WssOut] {
            let edges: Vec<_> = mesh.boundary.iter().filter(|e| e.tag == tag).copied().collect();
            for (p, sigma) in wall_shear_stress(mesh, space, x, props.mu, &edges)? {
                wss.push(WssSample {
                    boundary: tag,
                    x: p[0],
                    y: p[1],
                    sigma,
                });
            }
        }
        Ok(Self {
            shape: shape.to_string(),
            model,
            inlet_flow: inflow.domain_flow_rate(mesh),
            residence_times: residence_times(mesh, space, x),
            flow_rates: cs.channels,
            porous_flow: cs.porous,
            net_flux: net_flux(mesh, space, x)? * mesh.effective_depth(),
            wss,
        })
    }

    /// (max − min) / mean of the channel flow rates.
    pub fn spread(&self) -> f64 {
        spread(&self.flow_rates)
    }

    pub fn channel_sum(&self) -> f64 {
        self.flow_rates.iter().sum()
    }

    /// Rows `shape,model,channel,V_dot,tau` without a header.
    pub fn write_csv_rows<W: Write>(&self, mut w: W) -> Result<()> {
        for (i, (v, t)) in self.flow_rates.iter().zip(&self.residence_times).enumerate() {
            writeln!(w, "{},{},{},{:.12e},{:.12e}", self.shape, model_tag(self.model), i + 1, v, t)?;
        }
        Ok(())
    }

    pub fn summary(&self) -> Summary {
        Summary {
            shape: self.shape.clone(),
            model: model_tag(self.model).to_string(),
            inlet_flow: self.inlet_flow,
            channel_sum: self.channel_sum(),
            porous_flow: self.porous_flow,
            spread: self.spread(),
            min_flow: self.flow_rates.iter().cloned().fold(f64::INFINITY, f64::min),
            max_flow: self.flow_rates.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

pub const CSV_HEADER: &str = "shape,model,channel,V_dot,tau";

pub fn model_tag(m: Model) -> &'static str {
    match m {
        Model::Planar => "simplified",
        Model::Brinkman => "brinkman",
    }
}

/// Spread statistics of one report, for the JSON summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub shape: String,
    pub model: String,
    pub inlet_flow: f64,
    pub channel_sum: f64,
    pub porous_flow: f64,
    pub spread: f64,
    pub min_flow: f64,
    pub max_flow: f64,
}

pub fn spread(v: &[f64]) -> f64 {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    (hi - lo) / mean
}

/// Positions in `mesh.channels` of the channels farthest from the centre of
/// the array (both ends of a full geometry, the last one under symmetry).
pub fn outer_channels(mesh: &Mesh) -> Vec<usize> {
    let centre = |k: usize| {
        let c = &mesh.channels[k];
        let n = [-c.axis[1], c.axis[0]];
        let (a, b) = (mesh.nodes[c.up_a], mesh.nodes[c.up_b]);
        0.5 * ((a[0] + b[0]) * n[0] + (a[1] + b[1]) * n[1])
    };
    let r: Vec<f64> = (0..mesh.channels.len()).map(centre).collect();
    let mid = if mesh.half_symmetry {
        0.0
    } else {
        let (lo, hi) = r.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        0.5 * (lo + hi)
    };
    let far = r.iter().map(|x| (x - mid).abs()).fold(0.0, f64::max);
    (0..r.len()).filter(|&k| (r[k] - mid).abs() >= far - 1e-9 * mesh.size()).collect()
}

/// Brinkman-minus-simplified comparison of one shape.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelComparison {
    pub shape: String,
    pub simplified: Option<DiagnosticsReport>,
    pub brinkman: Option<DiagnosticsReport>,
    /// V̇_i(second) − V̇_i(first) per channel; empty unless both solved.
    pub deltas: Vec<f64>,
    pub spread_simplified: Option<f64>,
    pub spread_brinkman: Option<f64>,
    /// Every outer channel carries less flow under the Brinkman model.
    pub outer_channels_lose_flow: Option<bool>,
    /// The channels carry less than the inflow under the Brinkman model.
    pub brinkman_sum_below_inlet: Option<bool>,
    pub failures: Vec<String>,
}

/// Per-channel differences `b − a`. Reports must describe the same channels.
pub fn flow_deltas(a: &DiagnosticsReport, b: &DiagnosticsReport) -> Result<Vec<f64>> {
    if a.flow_rates.len() != b.flow_rates.len() {
        return Err(Error::Evaluation(format!(
            "reports have {} and {} channels",
            a.flow_rates.len(),
            b.flow_rates.len()
        )));
    }
    Ok(a.flow_rates.iter().zip(&b.flow_rates).map(|(x, y)| y - x).collect())
}

/// Porous-rib settings of the Brinkman model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PtlConfig {
    /// Porous layer thickness [m]; no default is claimed.
    pub ptl_depth: f64,
    /// Permeability K [m²].
    #[serde(default = "default_k")]
    pub permeability: f64,
}

fn default_k() -> f64 {
    1e-11
}

fn solve_report(shape: &str, model: Model, mesh: &Mesh, props: FluidProps, inflow: InflowSpec) -> Result<DiagnosticsReport> {
    let solver = FlowSolver::new(mesh, props, inflow, model)?;
    let state = solver.solve(mesh, None)?;
    DiagnosticsReport::new(shape, model, mesh, &solver.disc.space, &state.x, &props, &inflow)
}

/// Solves `mesh` with the simplified model and its porous extension with the
/// Brinkman model. A failed solve leaves its report empty and is noted.
pub fn compare_models(shape: &str, mesh: &Mesh, props: &FluidProps, inflow: &InflowSpec, ptl: &PtlConfig) -> ModelComparison {
    let mut failures = Vec::new();
    let simplified = solve_report(shape, Model::Planar, mesh, *props, *inflow)
        .map_err(|e| failures.push(format!("simplified: {e}")))
        .ok();
    let brinkman = extend_with_ptl(mesh, ptl.ptl_depth, ptl.permeability)
        .and_then(|ext| solve_report(shape, Model::Brinkman, &ext.mesh, ext.brinkman_props(props), *inflow))
        .map_err(|e| failures.push(format!("brinkman: {e}")))
        .ok();
    let deltas = match (&simplified, &brinkman) {
        (Some(a), Some(b)) => flow_deltas(a, b).unwrap_or_default(),
        _ => Vec::new(),
    };
    let outer = outer_channels(mesh);
    ModelComparison {
        shape: shape.to_string(),
        spread_simplified: simplified.as_ref().map(DiagnosticsReport::spread),
        spread_brinkman: brinkman.as_ref().map(DiagnosticsReport::spread),
        outer_channels_lose_flow: (!deltas.is_empty()).then(|| outer.iter().all(|&k| deltas[k] < 0.0)),
        brinkman_sum_below_inlet: brinkman.as_ref().map(|b| b.channel_sum() < b.inlet_flow),
        simplified,
        brinkman,
        deltas,
        failures,
    }
}

impl ModelComparison {
    pub fn reports(&self) -> impl Iterator<Item = &DiagnosticsReport> {
        self.simplified.iter().chain(self.brinkman.iter())
    }
}

/// CSV with header for any number of reports.
pub fn write_diagnostics_csv<'a, W: Write>(mut w: W, reports: impl IntoIterator<Item = &'a DiagnosticsReport>) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in reports {
        r.write_csv_rows(&mut w)?;
    }
    Ok(())
}
