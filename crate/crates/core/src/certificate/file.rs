//! Self-contained certificate files and their exact re-verification.
//!
//! ```text
//! {
//!   "format": "hgpoisson-certificate/1",
//!   "kind": "poisson",
//!   "instance": { "n": 3, "edges": [...], "demand": [...] },
//!   "instance_sha256": "…",
//!   "params": { "epsilon": "1e-9", "grid_bits": 20, "gamma": "1*2^-30" },
//!   "x": ["1/2", "0", "-1/2"],
//!   "eta": [[[0, "1"], [2, "-1"]]],
//!   "report": { "primal": "-1/2", "dual": "1/2", "gap": "0" },
//!   "first_stage": { ... }
//! }
//! ```
//!
//! `eta` lists the nonzero entries of each edge block as `[vertex, value]`.
//! Regularized certificates add `"lambda"` and keep only the original-edge
//! blocks; the ground-edge blocks are rebuilt from `s - Bη` when verifying.
//! Exact values are strings `a`, `a/2^q` or `a/b`; floats never appear.

use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{certify_pair, check_exact_feasibility, CertificateError, GapReport};
use crate::dual::{dyadic_to_rational, DualVector};
use crate::dyadic::{parse_rational, rational_to_string, Dyadic, ParseDyadicError};
use crate::format::InstanceFile;
use crate::hypergraph::{validate_instance, Hypergraph, InstanceError, Potential, ValidationOptions};
use crate::oracle::{oracle_primal_poisson, oracle_regularized, OracleOptions};
use crate::regularized::{certify_regularized, extend_to_ground, ground_augment, RegularizedError, RegularizedSolution};
use crate::scalar::Scalar;
use crate::solver::{PoissonSolution, SolveParams};

pub const CERTIFICATE_FORMAT: &str = "hgpoisson-certificate/1";

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("malformed certificate: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported certificate format `{0}`")]
    Format(String),
    #[error("instance hash mismatch: file says {recorded}, instance hashes to {computed}")]
    HashMismatch { recorded: String, computed: String },
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("bad rational in {field}: {source}")]
    Rational {
        field: String,
        #[source]
        source: ParseDyadicError,
    },
    #[error("x has {found} entries, expected {expected}")]
    PotentialLength { expected: usize, found: usize },
    #[error("eta has {found} edge blocks, expected {expected}")]
    EdgeCount { expected: usize, found: usize },
    #[error("eta block {edge} names vertex {vertex}, which is not in the edge or repeats")]
    EtaVertex { edge: usize, vertex: usize },
    #[error("regularized certificate without lambda")]
    MissingLambda,
    #[error("lambda given for a Poisson certificate")]
    UnexpectedLambda,
    #[error(transparent)]
    Certificate(#[from] CertificateError),
    #[error(transparent)]
    Regularized(#[from] RegularizedError),
    #[error("recorded {field} = {recorded} but recomputed {computed}")]
    ReportMismatch {
        field: &'static str,
        recorded: String,
        computed: String,
    },
}

impl VerifyError {
    /// Whether the embedded instance itself is invalid.
    pub fn is_invalid_instance(&self) -> bool {
        match self {
            VerifyError::Instance(_) => true,
            VerifyError::Regularized(e) => e.is_invalid_instance(),
            _ => false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    Poisson,
    Regularized,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsRecord {
    pub epsilon: String,
    pub grid_bits: u32,
    pub gamma: Dyadic,
}

impl ParamsRecord {
    pub fn from_params(params: &SolveParams) -> Self {
        Self {
            epsilon: format!("{:e}", params.solver.epsilon),
            grid_bits: params.recovery.grid_bits,
            gamma: params.gamma.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportRecord {
    pub primal: String,
    pub dual: String,
    pub gap: String,
}

impl ReportRecord {
    fn new(primal: &BigRational, dual: &BigRational, gap: &BigRational) -> Self {
        Self {
            primal: rational_to_string(primal),
            dual: rational_to_string(dual),
            gap: rational_to_string(gap),
        }
    }
}

/// Stage-one numbers, informational only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FirstStageRecord {
    pub objective: String,
    pub lower_bound: String,
    pub gap: String,
    pub residual: String,
    pub outer_iterations: usize,
    pub newton_steps: usize,
}

impl FirstStageRecord {
    fn new(sol: &PoissonSolution) -> Self {
        let fs = &sol.first_stage;
        Self {
            objective: format!("{:e}", fs.objective),
            lower_bound: format!("{:e}", fs.lower_bound),
            gap: format!("{:e}", fs.gap),
            residual: format!("{:e}", fs.residual),
            outer_iterations: fs.trace.len(),
            newton_steps: fs.trace.iter().map(|row| row.newton_steps).sum(),
        }
    }
}

pub type SparseBlock = Vec<(usize, String)>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateFile {
    pub format: String,
    pub kind: CertificateKind,
    pub instance: InstanceFile,
    pub instance_sha256: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Dyadic>,
    pub params: ParamsRecord,
    pub x: Vec<String>,
    pub eta: Vec<SparseBlock>,
    pub report: ReportRecord,
    pub first_stage: FirstStageRecord,
}

/// Outcome of a successful [`verify`].
#[derive(Clone, Debug, PartialEq)]
pub struct Verified {
    pub kind: CertificateKind,
    pub primal: BigRational,
    pub dual: BigRational,
    pub gap: BigRational,
}

fn sparse_blocks(h: &Hypergraph, eta: &DualVector<BigRational>) -> Vec<SparseBlock> {
    h.edges()
        .iter()
        .zip(&eta.values)
        .map(|(edge, block)| {
            edge.vertices
                .iter()
                .zip(block)
                .filter(|(_, value)| !value.is_zero())
                .map(|(&v, value)| (v, rational_to_string(value)))
                .collect()
        })
        .collect()
}

impl CertificateFile {
    pub fn from_poisson(sol: &PoissonSolution, params: &SolveParams) -> Self {
        let instance = InstanceFile::from_parts(&sol.instance.hypergraph, &sol.instance.demand);
        let h = &sol.instance.hypergraph;
        Self {
            format: CERTIFICATE_FORMAT.to_string(),
            kind: CertificateKind::Poisson,
            instance_sha256: instance.sha256_hex(),
            instance,
            lambda: None,
            params: ParamsRecord::from_params(params),
            x: sol.x().0.iter().map(rational_to_string).collect(),
            eta: sparse_blocks(h, &sol.certificate.to_rational()),
            report: ReportRecord::new(&sol.report.primal, &sol.report.dual, &sol.report.gap),
            first_stage: FirstStageRecord::new(sol),
        }
    }

    pub fn from_regularized(sol: &RegularizedSolution, params: &SolveParams) -> Self {
        let base = &sol.instance.base;
        let instance = InstanceFile::from_parts(base, &sol.instance.demand);
        Self {
            format: CERTIFICATE_FORMAT.to_string(),
            kind: CertificateKind::Regularized,
            instance_sha256: instance.sha256_hex(),
            instance,
            lambda: Some(sol.instance.lambda.clone()),
            params: ParamsRecord::from_params(params),
            x: sol.x.iter().map(rational_to_string).collect(),
            eta: sparse_blocks(base, &dyadic_to_rational(&sol.eta)),
            report: ReportRecord::new(&sol.report.primal, &sol.report.dual, &sol.report.gap),
            first_stage: FirstStageRecord::new(&sol.inner),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Self, VerifyError> {
        Ok(serde_json::from_str(text)?)
    }

    fn potential(&self) -> Result<Vec<BigRational>, VerifyError> {
        self.x
            .iter()
            .enumerate()
            .map(|(v, text)| {
                parse_rational(text).map_err(|source| VerifyError::Rational {
                    field: format!("x[{v}]"),
                    source,
                })
            })
            .collect()
    }

    fn dual(&self, h: &Hypergraph) -> Result<DualVector<BigRational>, VerifyError> {
        if self.eta.len() != h.edge_count() {
            return Err(VerifyError::EdgeCount {
                expected: h.edge_count(),
                found: self.eta.len(),
            });
        }
        let mut eta = DualVector::<BigRational>::zeros(h);
        for (e, block) in self.eta.iter().enumerate() {
            let vertices = &h.edge(e).vertices;
            let mut seen = vec![false; vertices.len()];
            for (vertex, text) in block {
                let slot = vertices
                    .iter()
                    .position(|u| u == vertex)
                    .filter(|&i| !seen[i])
                    .ok_or(VerifyError::EtaVertex { edge: e, vertex: *vertex })?;
                seen[slot] = true;
                eta.values[e][slot] = parse_rational(text).map_err(|source| VerifyError::Rational {
                    field: format!("eta[{e}][{vertex}]"),
                    source,
                })?;
            }
        }
        Ok(eta)
    }

    /// Exact values of `(P, D, gap)` recorded in the file.
    fn recorded(&self) -> Result<[BigRational; 3], VerifyError> {
        let parse = |field: &'static str, text: &str| {
            parse_rational(text).map_err(|source| VerifyError::Rational {
                field: format!("report.{field}"),
                source,
            })
        };
        Ok([
            parse("primal", &self.report.primal)?,
            parse("dual", &self.report.dual)?,
            parse("gap", &self.report.gap)?,
        ])
    }
}

/// Re-checks every exact claim of a certificate from the file alone.
pub fn verify(file: &CertificateFile) -> Result<Verified, VerifyError> {
    if file.format != CERTIFICATE_FORMAT {
        return Err(VerifyError::Format(file.format.clone()));
    }
    let computed = file.instance.sha256_hex();
    if computed != file.instance_sha256 {
        return Err(VerifyError::HashMismatch {
            recorded: file.instance_sha256.clone(),
            computed,
        });
    }
    let (h, s) = file.instance.clone().into_parts()?;
    let x = file.potential()?;
    if x.len() != h.vertex_count() {
        return Err(VerifyError::PotentialLength {
            expected: h.vertex_count(),
            found: x.len(),
        });
    }
    let eta = file.dual(&h)?;
    let (primal, dual, gap) = match file.kind {
        CertificateKind::Poisson => {
            if file.lambda.is_some() {
                return Err(VerifyError::UnexpectedLambda);
            }
            validate_instance(&h, &s, &ValidationOptions::default())?;
            let GapReport { primal, dual, gap, .. } = certify_pair(&h, &s.0, &Potential(x), &eta)?;
            (primal, dual, gap)
        }
        CertificateKind::Regularized => {
            let lambda = file.lambda.as_ref().ok_or(VerifyError::MissingLambda)?;
            let augmented = ground_augment(&h, lambda, &s.0)?;
            let report = certify_regularized(&h, lambda, &s.0, &x, &eta)?;
            let full = extend_to_ground(&h, &s.0, &eta);
            check_exact_feasibility(&augmented.augmented, &augmented.augmented_demand.0, &full)?;
            (report.primal, report.dual, report.gap)
        }
    };
    let [rec_primal, rec_dual, rec_gap] = file.recorded()?;
    for (field, recorded, computed) in [
        ("primal", &rec_primal, &primal),
        ("dual", &rec_dual, &dual),
        ("gap", &rec_gap, &gap),
    ] {
        if recorded != computed {
            return Err(VerifyError::ReportMismatch {
                field,
                recorded: rational_to_string(recorded),
                computed: rational_to_string(computed),
            });
        }
    }
    Ok(Verified {
        kind: file.kind,
        primal,
        dual,
        gap,
    })
}

/// Comparison of a verified certificate against the reference optimum.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleCheck {
    pub optimum: f64,
    /// The reference optimum was certified exactly.
    pub exact: bool,
    /// `-D <= OPT <= P`, up to `tolerance` when the optimum is not exact.
    pub consistent: bool,
}

/// Runs the reference solver on the embedded instance. Tiny instances only.
pub fn oracle_check(file: &CertificateFile, tolerance: f64) -> Result<OracleCheck, VerifyError> {
    let verified = verify(file)?;
    let (h, s) = file.instance.clone().into_parts()?;
    let opts = OracleOptions::default();
    let (optimum, exact_value) = match file.kind {
        CertificateKind::Poisson => {
            let out = oracle_primal_poisson(&h, &s.0, &opts);
            (out.best_value(), out.exact.map(|opt| opt.value))
        }
        CertificateKind::Regularized => {
            let lambda = file.lambda.as_ref().ok_or(VerifyError::MissingLambda)?;
            let out = oracle_regularized(&h, lambda, &s.0, &opts)?;
            let exact = out
                .exact
                .as_ref()
                .map(|x| crate::regularized::regularized_primal(&h, lambda, &s.0, x));
            (out.value, exact)
        }
    };
    let lower = -&verified.dual;
    let consistent = match &exact_value {
        Some(opt) => lower <= *opt && *opt <= verified.primal,
        None => lower.to_f64() - tolerance <= optimum && optimum <= verified.primal.to_f64() + tolerance,
    };
    Ok(OracleCheck {
        optimum,
        exact: exact_value.is_some(),
        consistent,
    })
}
