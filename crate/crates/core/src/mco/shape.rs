use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use super::run::{Scalarizer, SolveOutcome};
use crate::error::{Error, Result};
use crate::fem::export::node_fields;
use crate::fem::{FluidProps, InflowSpec, Model};
use crate::functionals::FunctionalConfig;
use crate::geometry::{write_mesh, Mesh};
use crate::shape_opt::{optimize, OptimizerConfig, ShapeProblem, StopReason};

/// Scalarized shape optimization from a fixed initial shape, with the
/// normalizers of that shape.
pub struct ShapeScalarizer {
    pub mesh: Mesh,
    pub props: FluidProps,
    pub inflow: InflowSpec,
    pub cfg: FunctionalConfig,
    pub opt: OptimizerConfig,
    pub normalizers: [f64; 3],
    /// Where optimized shapes are written as `mesh_p{id}.txt`.
    pub out_dir: Option<PathBuf>,
    pub config_hash: Option<String>,
}

impl ShapeScalarizer {
    pub fn new(mesh: Mesh, props: FluidProps, inflow: InflowSpec, cfg: FunctionalConfig, opt: OptimizerConfig) -> Result<Self> {
        opt.validate()?;
        let p = ShapeProblem::new(&mesh, props, inflow, Model::Planar, cfg.clone(), [1.0 / 3.0; 3])?;
        Ok(Self {
            normalizers: p.normalizers,
            mesh,
            props,
            inflow,
            cfg,
            opt,
            out_dir: None,
            config_hash: None,
        })
    }

    pub fn with_output(mut self, dir: PathBuf, config_hash: Option<String>) -> Self {
        self.out_dir = Some(dir);
        self.config_hash = config_hash;
        self
    }

    pub fn problem(&self, lambda: [f64; 3]) -> Result<ShapeProblem> {
        ShapeProblem::with_normalizers(
            &self.mesh,
            self.props,
            self.inflow,
            Model::Planar,
            self.cfg.clone(),
            lambda,
            self.normalizers,
        )
    }
}

impl Scalarizer for ShapeScalarizer {
    fn normalizers(&self) -> Vec<f64> {
        self.normalizers.to_vec()
    }

    fn solve(&self, lambda: &[f64], id: usize) -> Result<SolveOutcome> {
        let lambda: [f64; 3] = lambda
            .try_into()
            .map_err(|_| Error::Config(format!("expected three weights, got {}", lambda.len())))?;
        let problem = self.problem(lambda)?;
        let res = optimize(&problem, &self.mesh, &self.opt)?;
        if let StopReason::SolverFailure(msg) = &res.stop {
            return Err(Error::Optimization(msg.clone()));
        }
        let mesh_file = match &self.out_dir {
            Some(dir) => {
                let name = format!("mesh_p{id:03}.txt");
                let fields = node_fields(&res.mesh, &problem.solver.disc.space, &res.state.x);
                let w = BufWriter::new(File::create(dir.join(&name))?);
                write_mesh(w, &res.mesh, Some(&fields), self.config_hash.as_deref())?;
                Some(name)
            }
            None => None,
        };
        Ok(SolveOutcome {
            costs_normalized: (0..3).map(|i| res.costs[i] / self.normalizers[i]).collect(),
            costs_raw: res.costs.to_vec(),
            stop_reason: res.stop.as_str().to_string(),
            mesh_quality_stop: res.stop == StopReason::MeshQuality,
            mesh_file,
        })
    }

    fn config_hash(&self) -> Option<String> {
        self.config_hash.clone()
    }
}
