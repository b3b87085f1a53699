use flowforge::fem::{FlowSolver, FluidProps, InflowSpec, Model, Space};
use flowforge::functionals::*;
use flowforge::geometry::{build_parallel_flow_field, build_straight_channel, FlowFieldParams, Mesh, Tag};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const W: f64 = 1.0e-3;
const L: f64 = 4.0e-3;

fn straight(depth: Option<f64>) -> (Mesh, Space) {
    let m = build_straight_channel(L, W, 0.25e-3, depth).unwrap();
    let s = Space::new(&m);
    (m, s)
}

/// Nodal interpolation of a velocity field.
fn interpolate(mesh: &Mesh, space: &Space, f: impl Fn([f64; 2]) -> [f64; 2]) -> Vec<f64> {
    let mut x = vec![0.0; space.n_dofs];
    for (k, c) in space.node_coords(mesh).into_iter().enumerate() {
        let u = f(c);
        x[space.ux(k)] = u[0];
        x[space.uy(k)] = u[1];
    }
    x
}

fn inflow_for_mean(mean: f64, width: f64, depth: f64) -> InflowSpec {
    InflowSpec {
        flow_rate: mean * width * depth,
    }
}

#[test]
fn j1_vanishes_on_the_desired_profile_and_matches_the_closed_form_at_rest() {
    let (mesh, space) = straight(None);
    let cfg = FunctionalConfig::default();
    let props = FluidProps::default();
    let mean = 0.01;
    let ctx = FunctionalContext::new(&mesh, &space, &cfg, &props, &inflow_for_mean(mean, W, 1.0)).unwrap();
    let prof = ctx.profiles[0];
    assert!(prof.kappa.is_none());
    let x = interpolate(&mesh, &space, |p| [prof.value(p[1] - W / 2.0), 0.0]);
    assert!(eval_j1(&ctx, &x) < 1e-30);
    let d = d_j1(&ctx, &x);
    assert!(d.d_state.iter().all(|v| v.abs() < 1e-20));

    let zero = vec![0.0; space.n_dofs];
    let a = 1.5 * mean;
    let exact = 0.5 * L * a * a * 16.0 / 15.0 * (W / 2.0);
    assert!((eval_j1(&ctx, &zero) - exact).abs() < 1e-13 * exact);
}

#[test]
fn j1_at_rest_with_drag_profile_matches_the_closed_form() {
    let depth = 1.5e-3;
    let mesh = build_straight_channel(L, W, 0.1e-3, Some(depth)).unwrap();
    let space = Space::new(&mesh);
    let cfg = FunctionalConfig::default();
    let props = FluidProps::default();
    let mean = 0.01;
    let ctx = FunctionalContext::new(&mesh, &space, &cfg, &props, &inflow_for_mean(mean, W, depth)).unwrap();
    let prof = ctx.profiles[0];
    let k = prof.kappa.unwrap();
    let hw = W / 2.0;
    let c = (k * hw).cosh();
    // ∫_{-hw}^{hw} (1 − cosh(ks)/c)² ds
    let shape = 2.0 * hw - 4.0 * (k * hw).sinh() / (k * c) + (hw + (2.0 * k * hw).sinh() / (2.0 * k)) / (c * c);
    let exact = 0.5 * depth * L * prof.amplitude.powi(2) * shape;
    let zero = vec![0.0; space.n_dofs];
    // the drag profile is not polynomial, so quadrature is accurate but not exact
    let rel = (eval_j1(&ctx, &zero) - exact).abs() / exact;
    assert!(rel < 1e-6, "{rel:e}");
    // its mean equals the desired channel mean speed
    let x = interpolate(&mesh, &space, |p| [prof.value(p[1] - hw), 0.0]);
    let v = channel_mean_velocities(&ctx, &x).unwrap()[0];
    assert!((v - mean).abs() < 1e-4 * mean);
}

#[test]
fn mean_velocity_of_plug_parabola_and_reversed_flow() {
    let (mesh, space) = straight(None);
    let cfg = FunctionalConfig::default();
    let ctx = FunctionalContext::new(&mesh, &space, &cfg, &FluidProps::default(), &InflowSpec::default()).unwrap();
    let plug = interpolate(&mesh, &space, |_| [0.3, 0.0]);
    assert!((channel_mean_velocities(&ctx, &plug).unwrap()[0] - 0.3).abs() < 1e-15);
    let umax = 0.02;
    let par = interpolate(&mesh, &space, |p| [umax * 4.0 * p[1] * (W - p[1]) / (W * W), 0.0]);
    let v = channel_mean_velocities(&ctx, &par).unwrap()[0];
    assert!((v - 2.0 / 3.0 * umax).abs() < 1e-15);
    let rev: Vec<f64> = par.iter().map(|v| -v).collect();
    assert_eq!(channel_mean_velocities(&ctx, &rev).unwrap()[0], v);
}

#[test]
fn j2_by_direct_substitution() {
    let p = FlowFieldParams {
        n_channels: 2,
        half_symmetry: false,
        ..FlowFieldParams::default()
    };
    let mesh = build_parallel_flow_field(&p, 0.5e-3).unwrap();
    let space = Space::new(&mesh);
    let cfg = FunctionalConfig {
        tau_des: 3.0,
        ..FunctionalConfig::default()
    };
    let ctx = FunctionalContext::new(&mesh, &space, &cfg, &FluidProps::default(), &InflowSpec::default()).unwrap();
    let lengths = mesh.channel_lengths();
    // plug flow in each channel with τ = {2, 4}
    let speeds = [lengths[0] / 2.0, lengths[1] / 4.0];
    let mut x = vec![0.0; space.n_dofs];
    for t in 0..mesh.n_triangles() {
        let l = mesh.labels[t];
        if l >= 1 {
            for &node in &space.elem_nodes[t] {
                x[space.uy(node)] = -speeds[l as usize - 1];
            }
        }
    }
    let tau = residence_times(&ctx, &x).unwrap();
    assert!((tau[0] - 2.0).abs() < 1e-12 && (tau[1] - 4.0).abs() < 1e-12, "{tau:?}");
    assert!((eval_j2(&ctx, &x).unwrap() - 1.0).abs() < 1e-12);
    let zero = vec![0.0; space.n_dofs];
    assert!(matches!(eval_j2(&ctx, &zero), Err(flowforge::Error::StagnantChannel { channel: 1 })));
}

#[test]
fn wall_shear_stress_of_poiseuille_flow() {
    let (mesh, space) = straight(None);
    let mu = 3.547e-4;
    let umax = 0.02;
    let x = interpolate(&mesh, &space, |p| [umax * 4.0 * p[1] * (W - p[1]) / (W * W), 0.0]);
    let walls: Vec<_> = mesh.boundary.iter().copied().filter(|e| e.tag == Tag::Wall).collect();
    let vbar = 2.0 / 3.0 * umax;
    for (_, s) in wall_shear_stress(&mesh, &space, &x, mu, &walls).unwrap() {
        assert!((s - 6.0 * mu * vbar / W).abs() < 1e-12 * s);
    }
    let zero = vec![0.0; space.n_dofs];
    assert!(wall_shear_stress(&mesh, &space, &zero, mu, &walls).unwrap().iter().all(|s| s.1 == 0.0));
    let shift = interpolate(&mesh, &space, |_| [0.7, -0.2]);
    assert!(wall_shear_stress(&mesh, &space, &shift, mu, &walls).unwrap().iter().all(|s| s.1.abs() < 1e-12));
}

#[test]
fn j3_limits() {
    let mesh = build_parallel_flow_field(&FlowFieldParams::default(), 0.5e-3).unwrap();
    let space = Space::new(&mesh);
    let cfg = FunctionalConfig::default();
    let ctx = FunctionalContext::new(&mesh, &space, &cfg, &FluidProps::default(), &InflowSpec::default()).unwrap();
    let zero = vec![0.0; space.n_dofs];
    let len = mesh.boundary_length(Tag::WssIn) + mesh.boundary_length(Tag::WssOut);
    let j3 = eval_j3(&ctx, &zero).unwrap();
    assert!((j3 - cfg.sigma_thr.powi(2) * len).abs() < 1e-14 * j3);
    assert_eq!(wss_deficit_fraction(&ctx, &zero), 1.0);
    // a strong shear flow keeps σ above threshold everywhere
    let shear = interpolate(&mesh, &space, |p| [1e3 * p[1], 1e3 * p[0]]);
    assert_eq!(eval_j3(&ctx, &shear).unwrap(), 0.0);
    let d = d_j3(&ctx, &shear).unwrap();
    assert!(d.d_state.iter().all(|&v| v == 0.0) && d.d_coords.iter().all(|v| *v == [0.0, 0.0]));

    let empty_cfg = FunctionalConfig {
        wss_boundaries: vec![],
        ..cfg.clone()
    };
    let ctx = FunctionalContext::new(&mesh, &space, &empty_cfg, &FluidProps::default(), &InflowSpec::default()).unwrap();
    assert!(eval_j3(&ctx, &zero).is_err());
}

#[test]
fn scalarization() {
    let c = [2.0, 3.0, 5.0];
    assert_eq!(eval_scalarized(c, [1.0, 0.0, 0.0], c).unwrap(), 1.0);
    assert!((eval_scalarized(c, [1.0 / 3.0; 3], c).unwrap() - 1.0).abs() < 1e-15);
    assert!(eval_scalarized(c, [0.0; 3], c).is_err());
    assert!(eval_scalarized(c, [1.0, 0.0, 0.0], [0.0, 1.0, 1.0]).is_err());
    // exact linearity in λ
    let (a, b) = ([0.2, 0.5, 0.3], [0.7, 0.1, 0.2]);
    let ab: Vec<f64> = (0..3).map(|i| a[i] + b[i]).collect();
    let lhs = eval_scalarized(c, [ab[0], ab[1], ab[2]], [1.0; 3]).unwrap();
    let rhs = eval_scalarized(c, a, [1.0; 3]).unwrap() + eval_scalarized(c, b, [1.0; 3]).unwrap();
    assert!((lhs - rhs).abs() < 1e-15);
}

#[test]
fn default_targets() {
    let cfg = FunctionalConfig::default();
    assert_eq!(cfg.tau_des, 3.4);
    assert_eq!(cfg.sigma_thr, 0.025);
    // V̇_des = V̇_in / 18 ≈ 6.9e-9 m³/s for the eighteen-channel cell
    let v = InflowSpec::default().flow_rate / 18.0;
    assert!((v - 6.9e-9).abs() < 0.05e-9);
}

/// Central-difference check of every functional in random state and
/// coordinate directions around a converged flow.
#[test]
fn derivatives_match_central_differences() {
    let p = FlowFieldParams {
        n_channels: 2,
        half_symmetry: false,
        channel_length_center: 8e-3,
        ..FlowFieldParams::default()
    };
    let mesh = build_parallel_flow_field(&p, 0.5e-3).unwrap();
    let props = FluidProps::default();
    let inflow = InflowSpec::default();
    let solver = FlowSolver::new(&mesh, props, inflow, Model::Planar).unwrap();
    let state = solver.solve(&mesh, None).unwrap();
    let space = &solver.disc.space;
    let cfg = FunctionalConfig {
        sigma_thr: 0.01,
        ..FunctionalConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let umax = state.x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for which in 0..3 {
        let mut w = [0.0; 3];
        w[which] = 1.0;
        let ctx = FunctionalContext::new(&mesh, space, &cfg, &props, &inflow).unwrap();
        let d = functional_derivatives(&ctx, &state.x, w).unwrap();
        let f = |m: &Mesh, x: &[f64]| {
            let c = FunctionalContext::new(m, space, &cfg, &props, &inflow).unwrap();
            eval_all(&c, x).unwrap()[which]
        };
        for _ in 0..3 {
            let v: Vec<f64> = (0..space.n_dofs).map(|_| rng.gen_range(-1.0..1.0) * umax).collect();
            // σ = μ|(∇u)n| is strongly curved near wall points where the shear
            // nearly vanishes (rib corners); a step of 1e-6 leaves a truncation
            // error of a few 1e-5 there, 1e-7 is well inside round-off limits
            let h = 1e-7;
            let xp: Vec<f64> = state.x.iter().zip(&v).map(|(a, b)| a + h * b).collect();
            let xm: Vec<f64> = state.x.iter().zip(&v).map(|(a, b)| a - h * b).collect();
            let fd = (f(&mesh, &xp) - f(&mesh, &xm)) / (2.0 * h);
            let an: f64 = d.d_state.iter().zip(&v).map(|(a, b)| a * b).sum();
            assert!((fd - an).abs() <= 1e-5 * an.abs().max(1e-30), "J{} state: {fd:e} vs {an:e}", which + 1);

            let dir: Vec<[f64; 2]> = (0..mesh.n_nodes()).map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
            let hx = 1e-6 * mesh.target_h;
            let shifted = |s: f64| {
                let mut m = mesh.clone();
                for (p, d) in m.nodes.iter_mut().zip(&dir) {
                    p[0] += s * d[0];
                    p[1] += s * d[1];
                }
                m
            };
            let fd = (f(&shifted(hx), &state.x) - f(&shifted(-hx), &state.x)) / (2.0 * hx);
            let an: f64 = d.d_coords.iter().zip(&dir).map(|(a, b)| a[0] * b[0] + a[1] * b[1]).sum();
            assert!((fd - an).abs() <= 1e-5 * an.abs(), "J{} coords: {fd:e} vs {an:e}", which + 1);
        }
    }
}
