//! The end-to-end Poisson pipeline: first stage, primal recovery, certificate
//! repair and the exact gap.

use thiserror::Error;

use crate::certificate::{certify_pair, repair_dual_certificate, CertificateError, DualCertificate, GapReport};
use crate::dualsolve::{solve_first_stage, DualSolveError, FirstStageOutput, SolverOptions};
use crate::dyadic::Dyadic;
use crate::hypergraph::{validate_instance, Demand, Hypergraph, InstanceError, Potential, ValidatedInstance, ValidationOptions};
use crate::lifted::build_lifted_graph;
use crate::recovery::{recover_primal, Recovery, RecoveryError, RecoveryParams};

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    FirstStage(#[from] DualSolveError),
    #[error(transparent)]
    Recovery(#[from] RecoveryError),
    #[error(transparent)]
    Certificate(#[from] CertificateError),
}

impl SolveError {
    /// Whether the input, rather than the solver, was at fault.
    pub fn is_invalid_instance(&self) -> bool {
        matches!(self, SolveError::Instance(_))
    }
}

#[derive(Clone, Debug)]
pub struct SolveParams {
    pub solver: SolverOptions,
    pub recovery: RecoveryParams,
    /// Repair budget `Γ`.
    pub gamma: Dyadic,
    pub validation: ValidationOptions,
}

impl Default for SolveParams {
    fn default() -> Self {
        Self {
            solver: SolverOptions::default(),
            recovery: RecoveryParams::default(),
            gamma: Dyadic::pow2_neg(30),
            validation: ValidationOptions::default(),
        }
    }
}

impl SolveParams {
    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.solver.epsilon = epsilon;
        self
    }

    pub fn with_grid_bits(mut self, grid_bits: u32) -> Self {
        self.recovery = RecoveryParams::with_grid_bits(grid_bits);
        self
    }
}

#[derive(Clone, Debug)]
pub struct PoissonSolution {
    pub instance: ValidatedInstance,
    pub first_stage: FirstStageOutput,
    pub recovery: Recovery,
    pub certificate: DualCertificate,
    pub report: GapReport,
}

impl PoissonSolution {
    pub fn x(&self) -> &Potential {
        self.recovery.x()
    }
}

pub fn solve_poisson(h: &Hypergraph, s: &Demand, params: &SolveParams) -> Result<PoissonSolution, SolveError> {
    let instance = validate_instance(h, s, &params.validation)?;
    let g = build_lifted_graph(h);
    let first_stage = solve_first_stage(h, &g, &instance.tree, s, &params.solver)?;
    let recovery = recover_primal(h, s, &first_stage, &params.recovery)?;
    let certificate = repair_dual_certificate(h, &instance.tree, s, &first_stage.induced_dual, &params.gamma)?;
    let report = certify_pair(h, s, recovery.x(), &certificate.to_rational())?;
    Ok(PoissonSolution {
        instance,
        first_stage,
        recovery,
        certificate,
        report,
    })
}
