//! Cost functionals on the channel region and their exact discrete
//! derivatives with respect to the state and the mesh vertex coordinates.
//!
//! - J1 = ½ h ∫_{Ω_channels} |u − u_des|² dx (flow uniformity)
//! - J2 = ½ Σ_i (L_i / v̄_i − τ_des)² (residence times)
//! - J3 = ∫_{Γ_wss} min(0, σ − σ_thr)² ds (wall shear stress floor)

use serde::{Deserialize, Serialize};

use crate::ad::{Dual, Scalar};
use crate::error::{Error, Result};
use crate::exec::par_map;
use crate::fem::kernels::{basis_gradients, geom, tables, velocity_and_gradient};
use crate::fem::quadrature::GAUSS3;
use crate::fem::space::{p2_grad_coeffs, p2_values, Space, P2_LOCAL};
use crate::fem::{FluidProps, InflowSpec};
use crate::geometry::{ChannelInfo, Mesh, Tag};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionalConfig {
    /// Desired flow rate per channel [m³/s]; `None` means V̇_in / n_channels.
    #[serde(default)]
    pub v_des: Option<f64>,
    /// Desired residence time [s].
    pub tau_des: f64,
    /// Per-channel residence-time targets [s], overriding `tau_des`.
    #[serde(default)]
    pub tau_des_per_channel: Option<Vec<f64>>,
    /// Wall-shear-stress threshold [Pa].
    pub sigma_thr: f64,
    pub wss_boundaries: Vec<Tag>,
}

impl Default for FunctionalConfig {
    fn default() -> Self {
        Self {
            v_des: None,
            tau_des: 3.4,
            tau_des_per_channel: None,
            sigma_thr: 0.025,
            wss_boundaries: vec![Tag::WssIn, Tag::WssOut],
        }
    }
}

impl FunctionalConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(v) = self.v_des {
            if !(v > 0.0) {
                return Err(Error::Config("v_des must be strictly positive".into()));
            }
        }
        if !(self.tau_des > 0.0 && self.sigma_thr > 0.0) {
            return Err(Error::Config("tau_des and sigma_thr must be strictly positive".into()));
        }
        if self.wss_boundaries.iter().any(|t| !t.is_wss()) {
            return Err(Error::Config("wss_boundaries may only contain WSS_IN and WSS_OUT".into()));
        }
        Ok(())
    }
}

/// Index of each functional in cost vectors.
pub const J1: usize = 0;
pub const J2: usize = 1;
pub const J3: usize = 2;

/// Shape of the fully developed channel profile.
#[derive(Clone, Copy, Debug)]
pub struct DesiredProfile {
    pub amplitude: f64,
    /// `Some(κ)` for the drag profile 1 − cosh(κs)/cosh(κw/2), `None` for the parabola.
    pub kappa: Option<f64>,
    pub half_width: f64,
}

fn cosh<T: Scalar>(x: T) -> T {
    (x.exp() + (-x).exp()) * 0.5
}

impl DesiredProfile {
    /// Profile with mean speed `mean` across a channel of width `width` under
    /// drag coefficient `gamma`.
    pub fn new(mean: f64, width: f64, mu: f64, gamma: f64) -> Self {
        let hw = 0.5 * width;
        if gamma > 0.0 {
            let kappa = (gamma / mu).sqrt();
            let a = kappa * hw;
            Self {
                amplitude: mean / (1.0 - a.tanh() / a),
                kappa: Some(kappa),
                half_width: hw,
            }
        } else {
            Self {
                amplitude: 1.5 * mean,
                kappa: None,
                half_width: hw,
            }
        }
    }

    /// Axial speed at signed distance `s` from the centre line.
    pub fn value<T: Scalar>(&self, s: T) -> T {
        match self.kappa {
            Some(k) => (T::cst(1.0) - cosh(s * k) / (self.half_width * k).cosh()) * self.amplitude,
            None => {
                let r = s / self.half_width;
                (T::cst(1.0) - r * r) * self.amplitude
            }
        }
    }
}

/// Shared read-only inputs of the functionals.
pub struct FunctionalContext<'a> {
    pub mesh: &'a Mesh,
    pub space: &'a Space,
    pub cfg: &'a FunctionalConfig,
    pub mu: f64,
    pub profiles: Vec<DesiredProfile>,
    /// Triangles of each channel, in `mesh.channels` order.
    pub channel_tris: Vec<Vec<usize>>,
    /// Boundary edges of Γ_wss with their element and local vertex slots.
    wss_edges: Vec<WssEdge>,
}

#[derive(Clone, Copy, Debug)]
struct WssEdge {
    tri: usize,
    /// Local vertex positions of the edge endpoints and the opposite vertex.
    a: usize,
    b: usize,
    c: usize,
}

impl<'a> FunctionalContext<'a> {
    pub fn new(
        mesh: &'a Mesh,
        space: &'a Space,
        cfg: &'a FunctionalConfig,
        props: &FluidProps,
        inflow: &InflowSpec,
    ) -> Result<Self> {
        cfg.validate()?;
        if mesh.channels.is_empty() {
            return Err(Error::Config("mesh has no labelled channels".into()));
        }
        let mut channel_tris = vec![Vec::new(); mesh.channels.len()];
        for (t, &l) in mesh.labels.iter().enumerate() {
            if l >= 1 {
                let k = mesh
                    .channels
                    .iter()
                    .position(|c| c.index == l as usize)
                    .ok_or_else(|| Error::Config(format!("triangle {t} carries unknown channel label {l}")))?;
                channel_tris[k].push(t);
            }
        }
        if let Some(k) = channel_tris.iter().position(|v| v.is_empty()) {
            return Err(Error::Config(format!("channel {} has no triangles", mesh.channels[k].index)));
        }
        let v_des = cfg.v_des.unwrap_or(inflow.flow_rate / full_channel_count(mesh) as f64);
        let gamma = props.gamma_for(mesh);
        let profiles = mesh
            .channels
            .iter()
            .map(|c| DesiredProfile::new(v_des / (c.width * mesh.effective_depth()), c.width, props.mu, gamma))
            .collect();
        let mut wss_edges = Vec::new();
        for e in mesh.boundary.iter().filter(|e| cfg.wss_boundaries.contains(&e.tag)) {
            let tri = space.topo.boundary_triangle(e.nodes[0], e.nodes[1])?;
            let verts = mesh.triangles[tri];
            let pos = |v: usize| verts.iter().position(|&x| x == v).expect("edge vertex in triangle");
            let (a, b) = (pos(e.nodes[0]), pos(e.nodes[1]));
            wss_edges.push(WssEdge { tri, a, b, c: 3 - a - b });
        }
        if let Some(per) = &cfg.tau_des_per_channel {
            if per.len() != mesh.channels.len() {
                return Err(Error::Config("tau_des_per_channel needs one entry per meshed channel".into()));
            }
        }
        Ok(Self {
            mesh,
            space,
            cfg,
            mu: props.mu,
            profiles,
            channel_tris,
            wss_edges,
        })
    }

    fn tau_target(&self, k: usize) -> f64 {
        self.cfg.tau_des_per_channel.as_ref().map_or(self.cfg.tau_des, |v| v[k])
    }

    fn local_velocity(&self, x: &[f64], t: usize) -> [f64; 12] {
        let d = self.space.element_dofs(self.mesh, t);
        let mut u = [0.0; 12];
        for k in 0..12 {
            u[k] = x[d[k]];
        }
        u
    }

    fn vertices(&self, t: usize) -> [[f64; 2]; 3] {
        self.mesh.triangles[t].map(|v| self.mesh.nodes[v])
    }

    /// Signed offset of the channel centre line along the in-plane normal.
    fn centre_offset(&self, c: &ChannelInfo) -> f64 {
        let n = [-c.axis[1], c.axis[0]];
        let (a, b) = (self.mesh.nodes[c.up_a], self.mesh.nodes[c.up_b]);
        0.5 * ((a[0] + b[0]) * n[0] + (a[1] + b[1]) * n[1])
    }
}

/// Channels of the full geometry: doubled under half symmetry.
fn full_channel_count(mesh: &Mesh) -> usize {
    if mesh.half_symmetry {
        2 * mesh.channels.len()
    } else {
        mesh.channels.len()
    }
}

// ---------------------------------------------------------------- element terms

/// ½ ∫_T |u − u_des|² dx for one channel triangle.
fn j1_element<T: Scalar>(x: &[[T; 2]; 3], u: &[T; 12], offset: T, axis: [f64; 2], prof: &DesiredProfile) -> T {
    let tab = tables();
    let g = geom(x);
    let n_perp = [-axis[1], axis[0]];
    let mut acc = T::zero();
    for q in 0..7 {
        let l = tab.l[q];
        let n = &tab.n[q];
        let mut uv = [T::zero(); 2];
        for k in 0..P2_LOCAL {
            uv[0] += u[k] * n[k];
            uv[1] += u[P2_LOCAL + k] * n[k];
        }
        let px = x[0][0] * l[0] + x[1][0] * l[1] + x[2][0] * l[2];
        let py = x[0][1] * l[0] + x[1][1] * l[1] + x[2][1] * l[2];
        let s = px * n_perp[0] + py * n_perp[1] - offset;
        let ud = prof.value(s);
        let ex = uv[0] - ud * axis[0];
        let ey = uv[1] - ud * axis[1];
        acc += (ex * ex + ey * ey) * tab.w[q];
    }
    acc * g.area * 0.5
}

/// (∫_T u·axis dx, |T|).
fn flux_element<T: Scalar>(x: &[[T; 2]; 3], u: &[T; 12], axis: [f64; 2]) -> (T, T) {
    let g = geom(x);
    // ∫ N_k over a triangle: 0 at vertices, |T|/3 at midpoints
    let mut s = T::zero();
    for k in 3..P2_LOCAL {
        s += u[k] * axis[0] + u[P2_LOCAL + k] * axis[1];
    }
    (s * g.area / 3.0, g.area)
}

/// Wall shear stress μ|(∇u) n| at edge parameter `s` ∈ [0, 1] and the edge length.
fn wss_at<T: Scalar>(x: &[[T; 2]; 3], u: &[T; 12], e: &WssEdge, s: f64, mu: f64) -> (T, T) {
    let g = geom(x);
    let mut l = [0.0; 3];
    l[e.a] = 1.0 - s;
    l[e.b] = s;
    let gn = basis_gradients(&g.grad_l, &p2_grad_coeffs(l));
    let (_, du) = velocity_and_gradient(u, &p2_values(l), &gn);
    let (pa, pb, pc) = (x[e.a], x[e.b], x[e.c]);
    let d = [pb[0] - pa[0], pb[1] - pa[1]];
    let len = (d[0] * d[0] + d[1] * d[1]).sqrt();
    let mut n = [d[1] / len, -d[0] / len];
    let side = (n[0] * (pc[0] - pa[0]) + n[1] * (pc[1] - pa[1])).value();
    if side > 0.0 {
        n = [-n[0], -n[1]];
    }
    let gx = du[0][0] * n[0] + du[0][1] * n[1];
    let gy = du[1][0] * n[0] + du[1][1] * n[1];
    ((gx * gx + gy * gy).sqrt() * mu, len)
}

fn j3_edge<T: Scalar>(x: &[[T; 2]; 3], u: &[T; 12], e: &WssEdge, mu: f64, thr: f64) -> T {
    let mut acc = T::zero();
    let mut len = T::zero();
    for &(s, w) in &GAUSS3 {
        let (sigma, l) = wss_at(x, u, e, s, mu);
        len = l;
        if sigma.value() < thr {
            let v = sigma - thr;
            acc += v * v * w;
        }
    }
    acc * len
}

fn seed_u<const N: usize>(u: &[f64; 12]) -> [Dual<N>; 12] {
    let mut out = [Dual::<N>::constant(0.0); 12];
    for k in 0..12 {
        out[k] = Dual::var(u[k], k);
    }
    out
}

fn seed_x<const N: usize>(x: &[[f64; 2]; 3]) -> [[Dual<N>; 2]; 3] {
    let mut out = [[Dual::<N>::constant(0.0); 2]; 3];
    for a in 0..3 {
        for d in 0..2 {
            out[a][d] = Dual::var(x[a][d], 2 * a + d);
        }
    }
    out
}

// ---------------------------------------------------------------- evaluation

/// Gradient of a functional: value plus derivatives with respect to the state
/// vector and each mesh vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct Derivative {
    pub value: f64,
    pub d_state: Vec<f64>,
    pub d_coords: Vec<[f64; 2]>,
}

impl Derivative {
    fn zeros(ctx: &FunctionalContext, value: f64) -> Self {
        Self {
            value,
            d_state: vec![0.0; ctx.space.n_dofs],
            d_coords: vec![[0.0; 2]; ctx.mesh.n_nodes()],
        }
    }

    fn scatter_element(&mut self, ctx: &FunctionalContext, t: usize, du: &[f64; 12], dx: &[f64]) {
        let dofs = ctx.space.element_dofs(ctx.mesh, t);
        for k in 0..12 {
            self.d_state[dofs[k]] += du[k];
        }
        for (a, &v) in ctx.mesh.triangles[t].iter().enumerate() {
            self.d_coords[v][0] += dx[2 * a];
            self.d_coords[v][1] += dx[2 * a + 1];
        }
    }

    pub fn axpy(&mut self, alpha: f64, other: &Derivative) {
        self.value += alpha * other.value;
        for (a, b) in self.d_state.iter_mut().zip(&other.d_state) {
            *a += alpha * b;
        }
        for (a, b) in self.d_coords.iter_mut().zip(&other.d_coords) {
            a[0] += alpha * b[0];
            a[1] += alpha * b[1];
        }
    }
}

pub fn eval_j1(ctx: &FunctionalContext, x: &[f64]) -> f64 {
    let mut total = 0.0;
    for (k, c) in ctx.mesh.channels.iter().enumerate() {
        let off = ctx.centre_offset(c);
        let parts = par_map(ctx.channel_tris[k].len(), |i| {
            let t = ctx.channel_tris[k][i];
            j1_element(&ctx.vertices(t), &ctx.local_velocity(x, t), off, c.axis, &ctx.profiles[k])
        });
        total += parts.iter().sum::<f64>();
    }
    total * ctx.mesh.effective_depth()
}

pub fn d_j1(ctx: &FunctionalContext, x: &[f64]) -> Derivative {
    let mut out = Derivative::zeros(ctx, 0.0);
    let h = ctx.mesh.effective_depth();
    for (k, c) in ctx.mesh.channels.iter().enumerate() {
        let off = ctx.centre_offset(c);
        let parts = par_map(ctx.channel_tris[k].len(), |i| {
            let t = ctx.channel_tris[k][i];
            let (xv, uv) = (ctx.vertices(t), ctx.local_velocity(x, t));
            let ru = j1_element(&xv.map(|p| p.map(Dual::<12>::constant)), &seed_u::<12>(&uv), Dual::constant(off), c.axis, &ctx.profiles[k]);
            let mut xs = [[Dual::<7>::constant(0.0); 2]; 3];
            for a in 0..3 {
                for d in 0..2 {
                    xs[a][d] = Dual::var(xv[a][d], 2 * a + d);
                }
            }
            let rx = j1_element(&xs, &uv.map(Dual::<7>::constant), Dual::var(off, 6), c.axis, &ctx.profiles[k]);
            (t, ru.v, ru.d, rx.d)
        });
        let mut d_off = 0.0;
        for (t, v, du, dx) in parts {
            out.value += h * v;
            out.scatter_element(ctx, t, &du.map(|g| h * g), &dx[..6].iter().map(|g| h * g).collect::<Vec<_>>());
            d_off += h * dx[6];
        }
        // offset = ½ (up_a + up_b)·n_perp
        let n = [-c.axis[1], c.axis[0]];
        for v in [c.up_a, c.up_b] {
            out.d_coords[v][0] += 0.5 * d_off * n[0];
            out.d_coords[v][1] += 0.5 * d_off * n[1];
        }
    }
    out
}

/// Per-channel (∫ u·axis dx, area).
fn channel_integrals(ctx: &FunctionalContext, x: &[f64]) -> Vec<(f64, f64)> {
    ctx.mesh
        .channels
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let mut f = 0.0;
            let mut a = 0.0;
            for &t in &ctx.channel_tris[k] {
                let (fi, ai) = flux_element(&ctx.vertices(t), &ctx.local_velocity(x, t), c.axis);
                f += fi;
                a += ai;
            }
            (f, a)
        })
        .collect()
}

/// Mean axial speed |∫_{Ω_i} u·axis dx| / |Ω_i| per channel.
pub fn channel_mean_velocities(ctx: &FunctionalContext, x: &[f64]) -> Result<Vec<f64>> {
    channel_integrals(ctx, x)
        .into_iter()
        .map(|(f, a)| {
            if !(a > 0.0) {
                return Err(Error::Evaluation("channel with zero area".into()));
            }
            Ok(f.abs() / a)
        })
        .collect()
}

/// Residence times L_i / v̄_i.
pub fn residence_times(ctx: &FunctionalContext, x: &[f64]) -> Result<Vec<f64>> {
    let v = channel_mean_velocities(ctx, x)?;
    ctx.mesh
        .channels
        .iter()
        .zip(v)
        .map(|(c, vi)| {
            if vi == 0.0 {
                Err(Error::StagnantChannel { channel: c.index })
            } else {
                Ok(ctx.mesh.channel_length(c) / vi)
            }
        })
        .collect()
}

pub fn eval_j2(ctx: &FunctionalContext, x: &[f64]) -> Result<f64> {
    let tau = residence_times(ctx, x)?;
    Ok(tau.iter().enumerate().map(|(k, t)| 0.5 * (t - ctx.tau_target(k)).powi(2)).sum())
}

pub fn d_j2(ctx: &FunctionalContext, x: &[f64]) -> Result<Derivative> {
    let ints = channel_integrals(ctx, x);
    let mut out = Derivative::zeros(ctx, 0.0);
    for (k, c) in ctx.mesh.channels.iter().enumerate() {
        let (f, a) = ints[k];
        if f == 0.0 {
            return Err(Error::StagnantChannel { channel: c.index });
        }
        let len = ctx.mesh.channel_length(c);
        let tau = len * a / f.abs();
        let r = tau - ctx.tau_target(k);
        out.value += 0.5 * r * r;
        // τ = L·A/|F|
        let d_len = r * a / f.abs();
        let d_area = r * len / f.abs();
        let d_flux = -r * len * a * f.signum() / (f * f);
        for &t in &ctx.channel_tris[k] {
            let (xv, uv) = (ctx.vertices(t), ctx.local_velocity(x, t));
            let (fu, _) = flux_element(&xv.map(|p| p.map(Dual::<12>::constant)), &seed_u::<12>(&uv), c.axis);
            let (fx, ax) = flux_element(&seed_x::<6>(&xv), &uv.map(Dual::<6>::constant), c.axis);
            let du = fu.d.map(|g| d_flux * g);
            let dx: Vec<f64> = (0..6).map(|i| d_flux * fx.d[i] + d_area * ax.d[i]).collect();
            out.scatter_element(ctx, t, &du, &dx);
        }
        // L = ½ (|(down_a − up_a)·axis| + |(down_b − up_b)·axis|)
        for (up, down) in [(c.up_a, c.down_a), (c.up_b, c.down_b)] {
            let (p, q) = (ctx.mesh.nodes[up], ctx.mesh.nodes[down]);
            let proj = (q[0] - p[0]) * c.axis[0] + (q[1] - p[1]) * c.axis[1];
            let s = 0.5 * d_len * proj.signum();
            out.d_coords[down][0] += s * c.axis[0];
            out.d_coords[down][1] += s * c.axis[1];
            out.d_coords[up][0] -= s * c.axis[0];
            out.d_coords[up][1] -= s * c.axis[1];
        }
    }
    Ok(out)
}

pub fn eval_j3(ctx: &FunctionalContext, x: &[f64]) -> Result<f64> {
    if ctx.wss_edges.is_empty() {
        return Err(Error::Config("the wall-shear-stress boundary is empty".into()));
    }
    let parts = par_map(ctx.wss_edges.len(), |i| {
        let e = &ctx.wss_edges[i];
        j3_edge(&ctx.vertices(e.tri), &ctx.local_velocity(x, e.tri), e, ctx.mu, ctx.cfg.sigma_thr)
    });
    Ok(parts.iter().sum())
}

pub fn d_j3(ctx: &FunctionalContext, x: &[f64]) -> Result<Derivative> {
    if ctx.wss_edges.is_empty() {
        return Err(Error::Config("the wall-shear-stress boundary is empty".into()));
    }
    let parts = par_map(ctx.wss_edges.len(), |i| {
        let e = &ctx.wss_edges[i];
        let (xv, uv) = (ctx.vertices(e.tri), ctx.local_velocity(x, e.tri));
        let thr = ctx.cfg.sigma_thr;
        let ru = j3_edge(&xv.map(|p| p.map(Dual::<12>::constant)), &seed_u::<12>(&uv), e, ctx.mu, thr);
        let rx = j3_edge(&seed_x::<6>(&xv), &uv.map(Dual::<6>::constant), e, ctx.mu, thr);
        (e.tri, ru.v, ru.d, rx.d)
    });
    let mut out = Derivative::zeros(ctx, 0.0);
    for (t, v, du, dx) in parts {
        out.value += v;
        out.scatter_element(ctx, t, &du, &dx);
    }
    Ok(out)
}

/// σ samples on the given boundary edges: (point, σ) at three Gauss points per edge.
pub fn wall_shear_stress(
    mesh: &Mesh,
    space: &Space,
    x: &[f64],
    mu: f64,
    edges: &[crate::geometry::BoundaryEdge],
) -> Result<Vec<([f64; 2], f64)>> {
    let mut out = Vec::with_capacity(3 * edges.len());
    for be in edges {
        let tri = space.topo.boundary_triangle(be.nodes[0], be.nodes[1])?;
        let verts = mesh.triangles[tri];
        let pos = |v: usize| verts.iter().position(|&x| x == v).expect("edge vertex in triangle");
        let (a, b) = (pos(be.nodes[0]), pos(be.nodes[1]));
        let e = WssEdge { tri, a, b, c: 3 - a - b };
        let xv = verts.map(|v| mesh.nodes[v]);
        let d = space.element_dofs(mesh, tri);
        let mut u = [0.0; 12];
        for k in 0..12 {
            u[k] = x[d[k]];
        }
        for &(s, _) in &GAUSS3 {
            let (sigma, _) = wss_at(&xv, &u, &e, s, mu);
            let p = [
                xv[a][0] + s * (xv[b][0] - xv[a][0]),
                xv[a][1] + s * (xv[b][1] - xv[a][1]),
            ];
            out.push((p, sigma));
        }
    }
    Ok(out)
}

/// Fraction of Γ_wss length (measured by quadrature weight) with σ < σ_thr.
pub fn wss_deficit_fraction(ctx: &FunctionalContext, x: &[f64]) -> f64 {
    let mut below = 0.0;
    let mut total = 0.0;
    for e in &ctx.wss_edges {
        let xv = ctx.vertices(e.tri);
        let uv = ctx.local_velocity(x, e.tri);
        for &(s, w) in &GAUSS3 {
            let (sigma, len) = wss_at(&xv, &uv, e, s, ctx.mu);
            total += w * len;
            if sigma < ctx.cfg.sigma_thr {
                below += w * len;
            }
        }
    }
    if total > 0.0 {
        below / total
    } else {
        0.0
    }
}

pub fn eval_all(ctx: &FunctionalContext, x: &[f64]) -> Result<[f64; 3]> {
    Ok([eval_j1(ctx, x), eval_j2(ctx, x)?, eval_j3(ctx, x)?])
}

/// Derivative of Σ_k weights[k] J_k; functionals with zero weight are skipped.
pub fn functional_derivatives(ctx: &FunctionalContext, x: &[f64], weights: [f64; 3]) -> Result<Derivative> {
    let mut out = Derivative::zeros(ctx, 0.0);
    if weights[J1] != 0.0 {
        out.axpy(weights[J1], &d_j1(ctx, x));
    }
    if weights[J2] != 0.0 {
        out.axpy(weights[J2], &d_j2(ctx, x)?);
    }
    if weights[J3] != 0.0 {
        out.axpy(weights[J3], &d_j3(ctx, x)?);
    }
    Ok(out)
}

/// Validates a weight vector: non-negative entries with positive sum.
pub fn check_weights(lambda: [f64; 3]) -> Result<()> {
    if lambda.iter().any(|&l| !(l >= 0.0 && l.is_finite())) || lambda.iter().sum::<f64>() <= 0.0 {
        return Err(Error::Config(format!(
            "weights must be non-negative with a positive sum, got {lambda:?}"
        )));
    }
    Ok(())
}

pub fn check_normalizers(normalizers: [f64; 3]) -> Result<()> {
    if normalizers.iter().any(|&n| !(n > 0.0 && n.is_finite())) {
        return Err(Error::Config(format!("normalizers must be positive, got {normalizers:?}")));
    }
    Ok(())
}

/// Σ_i λ_i J_i / N_i.
pub fn eval_scalarized(costs: [f64; 3], lambda: [f64; 3], normalizers: [f64; 3]) -> Result<f64> {
    check_weights(lambda)?;
    check_normalizers(normalizers)?;
    Ok((0..3).map(|i| lambda[i] * costs[i] / normalizers[i]).sum())
}
