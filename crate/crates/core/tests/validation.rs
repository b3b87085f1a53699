use flowforge::fem::{FlowSolver, FluidProps, InflowSpec, Model, Space};
use flowforge::geometry::{build_parallel_flow_field, build_straight_channel, FlowFieldParams, Mesh, Tag, LABEL_POROUS};
use flowforge::validation::*;
use flowforge::Error;

fn par_mesh(h: f64) -> Mesh {
    build_parallel_flow_field(&FlowFieldParams::default(), h).unwrap()
}

fn solve(mesh: &Mesh, props: FluidProps, model: Model) -> (Space, Vec<f64>) {
    let solver = FlowSolver::new(mesh, props, InflowSpec::default(), model).unwrap();
    let state = solver.solve(mesh, None).unwrap();
    (solver.disc.space.clone(), state.x)
}

fn report(shape: &str, mesh: &Mesh, props: FluidProps, model: Model) -> DiagnosticsReport {
    let (space, x) = solve(mesh, props, model);
    DiagnosticsReport::new(shape, model, mesh, &space, &x, &props, &InflowSpec::default()).unwrap()
}

fn brinkman(mesh: &Mesh, depth: f64) -> DiagnosticsReport {
    brinkman_k(mesh, depth, 1e-11)
}

fn brinkman_k(mesh: &Mesh, depth: f64, k: f64) -> DiagnosticsReport {
    let ext = extend_with_ptl(mesh, depth, k).unwrap();
    report("PAR", &ext.mesh, ext.brinkman_props(&FluidProps::default()), Model::Brinkman)
}

#[test]
fn simplified_flow_rates_sum_to_the_inflow() {
    let mesh = par_mesh(0.5e-3);
    let r = report("PAR", &mesh, FluidProps::default(), Model::Planar);
    let rel = (r.channel_sum() - r.inlet_flow).abs() / r.inlet_flow;
    assert!(rel < 5e-3, "{rel:e}");
    assert!(rel < 1e-9, "consistent flux should be exact: {rel:e}");
    assert!(r.net_flux.abs() < 1e-10 * r.inlet_flow, "{:e}", r.net_flux);
    assert_eq!(r.porous_flow, 0.0);
    // the inlet jet feeds the channels next to the symmetry plane best
    let v = &r.flow_rates;
    assert!(v[0] > v[v.len() - 1], "{v:?}");
    assert!(r.residence_times.iter().all(|t| t.is_finite() && *t > 0.0));
    assert!(!r.wss.is_empty());
    assert!(r.wss.iter().all(|s| s.sigma >= 0.0));
}

#[test]
fn single_channel_carries_the_whole_inflow() {
    let mesh = build_straight_channel(6e-3, 1e-3, 0.25e-3, Some(1e-3)).unwrap();
    let r = report("straight", &mesh, FluidProps::default(), Model::Planar);
    assert_eq!(r.flow_rates.len(), 1);
    assert!((r.flow_rates[0] - r.inlet_flow).abs() < 1e-9 * r.inlet_flow, "{r:?}");
}

#[test]
fn extension_is_conforming() {
    let mesh = par_mesh(0.5e-3);
    let ext = extend_with_ptl(&mesh, 0.3e-3, 1e-11).unwrap();
    let m = &ext.mesh;
    assert_eq!(ext.base_nodes, mesh.n_nodes());
    assert_eq!(&m.nodes[..mesh.n_nodes()], &mesh.nodes[..]);
    assert!(m.labels.contains(&LABEL_POROUS));
    // fluid area is untouched and the ribs fill the array's bounding strip
    let fluid: f64 = (0..m.n_triangles()).filter(|&t| m.labels[t] != LABEL_POROUS).map(|t| m.signed_area(t)).sum();
    let base: f64 = (0..mesh.n_triangles()).map(|t| mesh.signed_area(t)).sum();
    assert!((fluid - base).abs() < 1e-12 * base);
    // rib tips are sloped where the channel lengths taper
    let wss = mesh.boundary_length(Tag::WssIn) + mesh.boundary_length(Tag::WssOut);
    assert!((wss - {
        let wss_int: f64 = m
            .boundary
            .iter()
            .filter(|e| e.tag == Tag::Int && m.nodes[e.nodes[0]][0] != m.nodes[e.nodes[1]][0])
            .map(|e| m.edge_length(e))
            .sum();
        wss_int
    })
    .abs()
        < 1e-12 * wss);
    assert_eq!(m.boundary_length(Tag::WssIn), 0.0);
    let side_walls: f64 = mesh.channel_lengths().iter().sum::<f64>() * 2.0;
    let int_vertical: f64 = m
        .boundary
        .iter()
        .filter(|e| e.tag == Tag::Int && m.nodes[e.nodes[0]][0] == m.nodes[e.nodes[1]][0])
        .map(|e| m.edge_length(e))
        .sum();
    assert!((int_vertical - side_walls).abs() < 1e-9 * side_walls, "{int_vertical} {side_walls}");
    // no fluid wall is left inside the array: the remaining WALL edges are the frame
    let [xmin, _, xmax, _] = mesh.bounds();
    let tol = 1e-12;
    for e in m.boundary.iter().filter(|e| e.tag == Tag::Wall) {
        let [a, b] = e.nodes.map(|v| m.nodes[v]);
        let horizontal = a[1] == b[1];
        let on_frame = (a[0] - xmax).abs() < tol && (b[0] - xmax).abs() < tol || (a[0] - xmin).abs() < tol && (b[0] - xmin).abs() < tol;
        assert!(horizontal || on_frame, "{a:?} {b:?}");
    }
    let q = flowforge::geometry::mesh_quality(m, &Default::default());
    assert!(q.min_signed_area > 0.0);
    eprintln!("porous min angle {}", q.min_angle_deg);
}

#[test]
fn leaning_rib_tips_are_accepted() {
    let mut mesh = par_mesh(0.5e-3);
    // shift the interior tip nodes sideways, top and bottom in opposite directions
    let mut moved = 0;
    for (tag, dx) in [(Tag::WssIn, 0.1e-3), (Tag::WssOut, -0.1e-3)] {
        let mut nodes: Vec<usize> = mesh.boundary.iter().filter(|e| e.tag == tag).flat_map(|e| e.nodes).collect();
        nodes.sort_unstable();
        nodes.dedup();
        let wall: Vec<usize> = mesh.boundary.iter().filter(|e| e.tag != tag).flat_map(|e| e.nodes).collect();
        for n in nodes.into_iter().filter(|n| !wall.contains(n)) {
            mesh.nodes[n][0] += dx;
            moved += 1;
        }
    }
    assert!(moved > 0);
    let ext = extend_with_ptl(&mesh, 0.3e-3, 1e-11).unwrap();
    let q = flowforge::geometry::mesh_quality(&ext.mesh, &Default::default());
    assert!(q.min_signed_area > 0.0);
    let fluid = ext.mesh.labels.iter().filter(|&&l| l != LABEL_POROUS).count();
    assert_eq!(fluid, mesh.n_triangles());
}

#[test]
fn extension_rejects_bad_input() {
    let mesh = par_mesh(0.5e-3);
    assert!(matches!(extend_with_ptl(&mesh, 0.0, 1e-11), Err(Error::Config(_))));
    assert!(matches!(extend_with_ptl(&mesh, 1e-4, -1.0), Err(Error::Config(_))));
    let mut flat = mesh.clone();
    flat.depth_h = None;
    assert!(matches!(extend_with_ptl(&flat, 1e-4, 1e-11), Err(Error::Config(_))));
    let mut broken = mesh.clone();
    let k = broken.boundary.iter().position(|e| e.tag == Tag::WssOut).unwrap();
    broken.boundary.remove(k);
    assert!(matches!(extend_with_ptl(&broken, 1e-4, 1e-11), Err(Error::Mesh(_))));
    let ext = extend_with_ptl(&mesh, 1e-4, 1e-11).unwrap();
    assert!(matches!(extend_with_ptl(&ext.mesh, 1e-4, 1e-11), Err(Error::Mesh(_))));
}

#[test]
fn brinkman_balance_and_shortcut() {
    let mesh = par_mesh(0.5e-3);
    let s = report("PAR", &mesh, FluidProps::default(), Model::Planar);
    let b = brinkman(&mesh, 0.3e-3);
    eprintln!("simplified {:?}\nbrinkman {:?} porous {:e}", s.flow_rates, b.flow_rates, b.porous_flow);
    assert!(b.net_flux.abs() < 1e-10 * b.inlet_flow, "{:e}", b.net_flux);
    assert!(b.channel_sum() < b.inlet_flow);
    assert!(b.porous_flow > 0.0);
    let residual = b.inlet_flow - b.channel_sum();
    assert!((residual - b.porous_flow).abs() < 0.01 * b.porous_flow, "{residual:e} {:e}", b.porous_flow);
    // at K = 1e-11 the redistribution is a few 1e-6 of each channel and the
    // outer channel sign is not robust; a more permeable layer shows the shortcut
    let b = brinkman_k(&mesh, 0.3e-3, 1e-8);
    let d = flow_deltas(&s, &b).unwrap();
    for k in outer_channels(&mesh) {
        assert!(d[k] < 0.0, "{d:?}");
    }
}

#[test]
fn thinner_layer_approaches_the_simplified_model() {
    let mesh = par_mesh(0.5e-3);
    let s = report("PAR", &mesh, FluidProps::default(), Model::Planar);
    let dev: Vec<f64> = [0.4e-3, 0.1e-3, 0.025e-3]
        .iter()
        .map(|&depth| {
            let b = brinkman(&mesh, depth);
            flow_deltas(&s, &b).unwrap().iter().fold(0.0f64, |m, d| m.max(d.abs()))
        })
        .collect();
    eprintln!("{dev:?}");
    assert!(dev[0] > dev[1] && dev[1] > dev[2], "{dev:?}");
}

#[test]
fn identical_models_give_zero_deltas() {
    let mesh = par_mesh(0.5e-3);
    let s = report("PAR", &mesh, FluidProps::default(), Model::Planar);
    assert!(flow_deltas(&s, &s).unwrap().iter().all(|&d| d == 0.0));
}

#[test]
fn zero_state_gives_zero_diagnostics() {
    let mesh = par_mesh(0.5e-3);
    let ext = extend_with_ptl(&mesh, 0.3e-3, 1e-11).unwrap();
    let space = Space::new(&ext.mesh);
    let x = vec![0.0; space.n_dofs];
    let cs = cross_section_flows(&ext.mesh, &space, &x).unwrap();
    assert!(cs.channels.iter().all(|&v| v == 0.0));
    assert_eq!(cs.porous, 0.0);
}

#[test]
fn flow_rates_are_mesh_convergent() {
    let coarse = report("PAR", &par_mesh(0.5e-3), FluidProps::default(), Model::Planar);
    let fine = report("PAR", &par_mesh(0.25e-3), FluidProps::default(), Model::Planar);
    for (a, b) in coarse.flow_rates.iter().zip(&fine.flow_rates) {
        assert!((a - b).abs() < 0.02 * b, "{:?} {:?}", coarse.flow_rates, fine.flow_rates);
    }
}

#[test]
fn compare_models_reports_both() {
    let mesh = par_mesh(0.5e-3);
    let ptl = PtlConfig {
        ptl_depth: 0.3e-3,
        permeability: 1e-11,
    };
    let c = compare_models("PAR", &mesh, &FluidProps::default(), &InflowSpec::default(), &ptl);
    assert!(c.failures.is_empty(), "{:?}", c.failures);
    assert_eq!(c.deltas.len(), mesh.channels.len());
    assert_eq!(c.brinkman_sum_below_inlet, Some(true));
    let mut csv = Vec::new();
    write_diagnostics_csv(&mut csv, c.reports()).unwrap();
    let csv = String::from_utf8(csv).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], CSV_HEADER);
    assert_eq!(lines.len(), 1 + 2 * mesh.channels.len());
    assert!(lines[1].starts_with("PAR,simplified,1,"));

    let mut bad = FluidProps::default();
    bad.rho = -1.0;
    let c = compare_models("PAR", &mesh, &bad, &InflowSpec::default(), &ptl);
    assert!(c.simplified.is_none() && c.brinkman.is_none());
    assert_eq!(c.failures.len(), 2);
}
