//! Config-driven pipeline behind the command line: mesh generation, solves,
//! single-criterion optimization, Pareto runs and reports. Every artifact is
//! written under `output_dir` with a stable name and carries the config hash.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fem::export::node_fields;
use crate::fem::{FlowSolver, FluidProps, InflowSpec, Model};
use crate::functionals::FunctionalConfig;
use crate::geometry::{build_parallel_flow_field, read_mesh, write_mesh, FlowFieldParams, Mesh, MeshFile};
use crate::mco::{run_pareto, ParetoFront, ParetoOptions, ShapeScalarizer};
use crate::shape_opt::{optimize, OptimizerConfig, ShapeProblem, StopReason};
use crate::validation::{compare_models, write_diagnostics_csv, DiagnosticsReport, ModelComparison, PtlConfig};

/// JSON schema of [`RunConfig`].
pub const CONFIG_SCHEMA: &str = include_str!("../config.schema.json");

pub const FRONT_FILE: &str = "front.json";
pub const REPORT_FILE: &str = "report.md";
/// Name of the initial shape.
pub const BASE_SHAPE: &str = "PAR";

pub fn mesh_file(name: &str) -> String {
    format!("mesh_{name}.txt")
}

pub fn trace_file(name: &str) -> String {
    format!("trace_{name}.csv")
}

pub fn diagnostics_file(name: &str) -> String {
    format!("diagnostics_{name}.csv")
}

/// One file drives the whole pipeline. Sections left out take their
/// defaults, except `validation`, whose layer depth has none.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub geometry: FlowFieldParams,
    /// Target edge length of the triangulation [m].
    #[serde(default = "default_mesh_size")]
    pub mesh_size: f64,
    #[serde(default)]
    pub fluid: FluidProps,
    #[serde(default)]
    pub inflow: InflowSpec,
    #[serde(default)]
    pub functionals: FunctionalConfig,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub mco: ParetoOptions,
    pub validation: PtlConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

fn default_mesh_size() -> f64 {
    0.5e-3
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl RunConfig {
    /// Defaults everywhere, with the given porous layer depth.
    pub fn with_ptl_depth(ptl_depth: f64) -> Self {
        Self {
            geometry: FlowFieldParams::default(),
            mesh_size: default_mesh_size(),
            fluid: FluidProps::default(),
            inflow: InflowSpec::default(),
            functionals: FunctionalConfig::default(),
            optimizer: OptimizerConfig::default(),
            mco: ParetoOptions::default(),
            validation: PtlConfig {
                ptl_depth,
                permeability: 1e-11,
            },
            output_dir: default_output_dir(),
            seed: 0,
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; a relative `output_dir` is taken relative to the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        if cfg.output_dir.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.output_dir = dir.join(&cfg.output_dir);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate().map_err(|e| Error::Config(e.to_string()))?;
        if !(self.mesh_size > 0.0 && self.mesh_size < 0.5 * self.geometry.channel_width) {
            return Err(Error::Config(format!(
                "mesh_size must lie in (0, channel_width / 2), got {}",
                self.mesh_size
            )));
        }
        self.fluid.validate()?;
        if !(self.inflow.flow_rate > 0.0 && self.inflow.flow_rate.is_finite()) {
            return Err(Error::Config("inflow.flow_rate must be positive".into()));
        }
        self.functionals.validate()?;
        self.optimizer.validate()?;
        self.mco.validate(3)?;
        let v = &self.validation;
        if !(v.ptl_depth > 0.0 && v.ptl_depth.is_finite() && v.permeability > 0.0 && v.permeability.is_finite()) {
            return Err(Error::Config("validation.ptl_depth and validation.permeability must be positive".into()));
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON form of everything that affects the
    /// results; `output_dir` is left out.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        let json = serde_json::to_string(&c).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    fn path(&self, name: &str) -> PathBuf {
        self.output_dir.join(name)
    }
}

/// Single-criterion runs with unit weights.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Objective {
    J1,
    J2,
    J3,
}

impl Objective {
    pub const ALL: [Objective; 3] = [Objective::J1, Objective::J2, Objective::J3];

    pub fn lambda(self) -> [f64; 3] {
        let mut l = [0.0; 3];
        l[self as usize] = 1.0;
        l
    }

    /// `PAR_J1`, `PAR_J2`, `PAR_J3`.
    pub fn shape_name(self) -> String {
        format!("{BASE_SHAPE}_J{}", self as usize + 1)
    }
}

fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    body(&mut w)?;
    w.flush()?;
    Ok(())
}

/// Reads a mesh artifact and refuses one written by another configuration.
pub fn read_artifact(path: &Path, hash: &str) -> Result<MeshFile> {
    let file = read_mesh(BufReader::new(File::open(path)?))?;
    if file.config_hash.as_deref() != Some(hash) {
        return Err(Error::Config(format!(
            "{} was written by a different configuration (hash {:?})",
            path.display(),
            file.config_hash
        )));
    }
    Ok(file)
}

fn prepare(cfg: &RunConfig) -> Result<String> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.output_dir)?;
    Ok(cfg.hash())
}

fn build_base(cfg: &RunConfig) -> Result<Mesh> {
    build_parallel_flow_field(&cfg.geometry, cfg.mesh_size)
}

/// The initial shape: `mesh_PAR.txt` when present, otherwise generated and
/// written.
fn base_mesh(cfg: &RunConfig, hash: &str) -> Result<Mesh> {
    let path = cfg.path(&mesh_file(BASE_SHAPE));
    if path.exists() {
        return Ok(read_artifact(&path, hash)?.mesh);
    }
    let mesh = build_base(cfg)?;
    write_file(&path, |w| write_mesh(w, &mesh, None, Some(hash)))?;
    Ok(mesh)
}

/// Writes `mesh_PAR.txt`.
pub fn cmd_mesh(cfg: &RunConfig) -> Result<PathBuf> {
    let hash = prepare(cfg)?;
    let mesh = build_base(cfg)?;
    let path = cfg.path(&mesh_file(BASE_SHAPE));
    write_file(&path, |w| write_mesh(w, &mesh, None, Some(&hash)))?;
    info!(
        "{}: {} nodes, {} triangles, {} channels",
        path.display(),
        mesh.n_nodes(),
        mesh.n_triangles(),
        mesh.channels.len()
    );
    Ok(path)
}

/// Simplified-model solve of a named shape (default `PAR`). Writes the state
/// as `state_{name}.txt` and the per-channel table as `diagnostics_{name}.csv`.
pub fn cmd_solve(cfg: &RunConfig, shape: Option<&str>) -> Result<DiagnosticsReport> {
    let hash = prepare(cfg)?;
    let name = shape.unwrap_or(BASE_SHAPE);
    let mesh = if name == BASE_SHAPE {
        base_mesh(cfg, &hash)?
    } else {
        read_artifact(&cfg.path(&mesh_file(name)), &hash)?.mesh
    };
    let solver = FlowSolver::new(&mesh, cfg.fluid, cfg.inflow, Model::Planar)?;
    let state = solver.solve(&mesh, None)?;
    let space = &solver.disc.space;
    let fields = node_fields(&mesh, space, &state.x);
    write_file(&cfg.path(&format!("state_{name}.txt")), |w| {
        write_mesh(w, &mesh, Some(&fields), Some(&hash))
    })?;
    let report = DiagnosticsReport::new(name, Model::Planar, &mesh, space, &state.x, &cfg.fluid, &cfg.inflow)?;
    write_file(&cfg.path(&diagnostics_file(name)), |w| write_diagnostics_csv(w, [&report]))?;
    Ok(report)
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizeOutcome {
    pub name: String,
    pub stop: StopReason,
    pub initial_costs: [f64; 3],
    pub final_costs: [f64; 3],
    pub iterations: usize,
}

/// Single-criterion optimization from the initial shape. Writes the trace
/// and the final shape (with its state) even when the run does not converge.
pub fn cmd_optimize(cfg: &RunConfig, objective: Objective) -> Result<OptimizeOutcome> {
    let hash = prepare(cfg)?;
    let mesh = base_mesh(cfg, &hash)?;
    let name = objective.shape_name();
    let problem = ShapeProblem::new(
        &mesh,
        cfg.fluid,
        cfg.inflow,
        Model::Planar,
        cfg.functionals.clone(),
        objective.lambda(),
    )?;
    let res = optimize(&problem, &mesh, &cfg.optimizer)?;
    let mut trace = format!("# config_hash {hash}\n");
    trace.push_str(&res.trace.to_csv());
    fs::write(cfg.path(&trace_file(&name)), trace)?;
    let fields = node_fields(&res.mesh, &problem.solver.disc.space, &res.state.x);
    write_file(&cfg.path(&mesh_file(&name)), |w| {
        write_mesh(w, &res.mesh, Some(&fields), Some(&hash))
    })?;
    let initial_costs = res.trace.first().map(|r| r.costs).unwrap_or(res.costs);
    info!("{name}: {} after {} records, costs {:?}", res.stop.as_str(), res.trace.records.len(), res.costs);
    Ok(OptimizeOutcome {
        name,
        stop: res.stop,
        initial_costs,
        final_costs: res.costs,
        iterations: res.trace.records.len().saturating_sub(1),
    })
}

/// Sandwiching run over the three objectives, resumed from `front.json` when
/// one from the same configuration exists.
pub fn cmd_pareto(cfg: &RunConfig) -> Result<ParetoFront> {
    let hash = prepare(cfg)?;
    let mesh = base_mesh(cfg, &hash)?;
    let scalarizer = ShapeScalarizer::new(
        mesh,
        cfg.fluid,
        cfg.inflow,
        cfg.functionals.clone(),
        cfg.optimizer,
    )?
    .with_output(cfg.output_dir.clone(), Some(hash));
    run_pareto(&scalarizer, &cfg.mco, Some(&cfg.path(FRONT_FILE)))
}

/// Shapes present in the output directory, initial shape first.
fn available_shapes(cfg: &RunConfig, hash: &str) -> Result<Vec<(String, Mesh)>> {
    let mut shapes = vec![(BASE_SHAPE.to_string(), base_mesh(cfg, hash)?)];
    for o in Objective::ALL {
        let path = cfg.path(&mesh_file(&o.shape_name()));
        if path.exists() {
            shapes.push((o.shape_name(), read_artifact(&path, hash)?.mesh));
        }
    }
    Ok(shapes)
}

fn sci(v: Option<f64>) -> String {
    v.map_or("n/a".into(), |v| format!("{v:.4e}"))
}

/// Simplified-versus-Brinkman comparison of every available shape, written
/// as `diagnostics_{name}.csv` per shape and summarized in `report.md`.
pub fn cmd_report(cfg: &RunConfig) -> Result<PathBuf> {
    let hash = prepare(cfg)?;
    let front_path = cfg.path(FRONT_FILE);
    let front = if front_path.exists() {
        let f = ParetoFront::load(&front_path)?;
        if f.config_hash.as_deref() != Some(hash.as_str()) {
            return Err(Error::Config(format!("{} was written by a different configuration", front_path.display())));
        }
        Some(f)
    } else {
        None
    };
    let shapes = available_shapes(cfg, &hash)?;
    let comparisons: Vec<ModelComparison> = shapes
        .iter()
        .map(|(name, mesh)| compare_models(name, mesh, &cfg.fluid, &cfg.inflow, &cfg.validation))
        .collect();
    for c in &comparisons {
        for f in &c.failures {
            warn!("{}: {f}", c.shape);
        }
        write_file(&cfg.path(&diagnostics_file(&c.shape)), |w| write_diagnostics_csv(w, c.reports()))?;
    }
    let path = cfg.path(REPORT_FILE);
    fs::write(&path, render_report(cfg, &hash, &comparisons, front.as_ref()))?;
    Ok(path)
}

fn render_report(cfg: &RunConfig, hash: &str, comparisons: &[ModelComparison], front: Option<&ParetoFront>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# Flow-field report\n");
    let _ = writeln!(s, "config_hash `{hash}`\n");
    let _ = writeln!(
        s,
        "Porous layer: depth {:.3e} m, permeability {:.3e} m².\n",
        cfg.validation.ptl_depth, cfg.validation.permeability
    );
    let _ = writeln!(s, "## Channel flow spread\n");
    let _ = writeln!(s, "| shape | spread simplified | spread Brinkman | outer channels lose flow | porous flow [m³/s] |");
    let _ = writeln!(s, "|---|---|---|---|---|");
    for c in comparisons {
        let lose = c.outer_channels_lose_flow.map_or("n/a".into(), |b| b.to_string());
        let porous = sci(c.brinkman.as_ref().map(|b| b.porous_flow));
        let _ = writeln!(
            s,
            "| {} | {} | {} | {lose} | {porous} |",
            c.shape,
            sci(c.spread_simplified),
            sci(c.spread_brinkman)
        );
    }
    for c in comparisons {
        let _ = writeln!(s, "\n## {}\n", c.shape);
        for f in &c.failures {
            let _ = writeln!(s, "- solve failed: {f}");
        }
        let (Some(a), Some(b)) = (&c.simplified, &c.brinkman) else {
            continue;
        };
        let _ = writeln!(s, "| channel | V̇ simplified [m³/s] | V̇ Brinkman [m³/s] | Δ | τ simplified [s] |");
        let _ = writeln!(s, "|---|---|---|---|---|");
        for i in 0..a.flow_rates.len() {
            let _ = writeln!(
                s,
                "| {} | {:.6e} | {:.6e} | {:+.3e} | {:.4} |",
                i + 1,
                a.flow_rates[i],
                b.flow_rates[i],
                c.deltas.get(i).copied().unwrap_or(f64::NAN),
                a.residence_times[i]
            );
        }
    }
    if let Some(f) = front {
        let _ = writeln!(s, "\n## Pareto front\n");
        let _ = writeln!(
            s,
            "{} points from {} scalarized solves ({} failed), quality {}.\n",
            f.points.len(),
            f.n_solves(),
            f.n_failed(),
            sci(f.quality)
        );
        let _ = writeln!(s, "| λ | J1/N1 | J2/N2 | J3/N3 | stop | shape |");
        let _ = writeln!(s, "|---|---|---|---|---|---|");
        for p in &f.points {
            let l: Vec<String> = p.lambda.iter().map(|v| format!("{v:.3}")).collect();
            let c = &p.costs_normalized;
            let _ = writeln!(
                s,
                "| ({}) | {:.4} | {:.4} | {:.4} | {}{} | {} |",
                l.join(", "),
                c[0],
                c[1],
                c[2],
                p.stop_reason,
                match (p.weight_adjusted, p.unsupported) {
                    (true, true) => " (adjusted, unsupported)",
                    (true, false) => " (adjusted)",
                    (false, true) => " (unsupported)",
                    (false, false) => "",
                },
                p.mesh_file.as_deref().unwrap_or("-")
            );
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn objective_names_and_weights() {
        assert_eq!(Objective::J2.shape_name(), "PAR_J2");
        assert_eq!(Objective::J3.lambda(), [0.0, 0.0, 1.0]);
    }

    #[test]
    fn hash_ignores_the_output_dir() {
        let a = RunConfig::with_ptl_depth(3e-4);
        let mut b = a.clone();
        b.output_dir = "elsewhere".into();
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
