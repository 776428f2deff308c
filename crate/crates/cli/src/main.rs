//! `hgpoisson` command-line front end.
//!
//! Exit codes: 0 ok, 2 invalid instance or input file, 3 solver failure,
//! 4 verification failure.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hgpoisson::certificate::file::{oracle_check, verify, CertificateFile, VerifyError};
use hgpoisson::dualsolve::TraceRow;
use hgpoisson::dyadic::rational_to_string;
use hgpoisson::format::parse_instance;
use hgpoisson::lifted::{build_lifted_graph, to_dot};
use hgpoisson::mcf::dimacs::{parse_dimacs, write_dimacs};
use hgpoisson::mcf::{extract_residual_potentials, solve_mcf_exact};
use hgpoisson::regularized::{pairwise_response, resolvent, solve_regularized, RegularizedError, RegularizedSolution};
use hgpoisson::recovery::build_support_instance;
use hgpoisson::scalar::Scalar;
use hgpoisson::{solve_poisson, Demand, Dyadic, Hypergraph, PoissonSolution, SolveError, SolveParams};
use num_rational::BigRational;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "hgpoisson", version, about = "Certified hypergraph Poisson solver")]
struct Cli {
    /// Print a JSON record on stdout instead of text, errors included.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct SolveFlags {
    /// Stage-one objective gap.
    #[arg(long, default_value_t = 1e-9)]
    eps: f64,
    /// M in ρ = 2^-M.
    #[arg(long = "grid-bits", default_value_t = 20)]
    grid_bits: u32,
    /// Repair budget Γ, e.g. `1*2^-30`.
    #[arg(long, default_value = "1*2^-30")]
    gamma: Dyadic,
    /// Print the stage-one trace as tab-separated lines on stderr.
    #[arg(long)]
    trace: bool,
    /// Write the certificate here.
    #[arg(long = "json-out")]
    json_out: Option<PathBuf>,
}

impl SolveFlags {
    fn params(&self) -> SolveParams {
        let mut params = SolveParams::default().with_epsilon(self.eps).with_grid_bits(self.grid_bits);
        params.gamma = self.gamma.clone();
        params
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ExportFormat {
    Dot,
    Dimacs,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the Poisson problem and certify the gap.
    Solve {
        instance: PathBuf,
        #[command(flatten)]
        flags: SolveFlags,
    },
    /// Solve the λ-regularized problem.
    SolveReg {
        instance: PathBuf,
        #[arg(long)]
        lambda: Dyadic,
        #[command(flatten)]
        flags: SolveFlags,
    },
    /// Evaluate the resolvent at y; the instance demand is ignored.
    Resolvent {
        instance: PathBuf,
        #[arg(long)]
        lambda: Dyadic,
        /// JSON array of dyadic strings.
        #[arg(long = "y-file")]
        y_file: PathBuf,
        #[command(flatten)]
        flags: SolveFlags,
    },
    /// x_u - x_v for the demand e_u - e_v; the instance demand is ignored.
    Response {
        instance: PathBuf,
        #[arg(long)]
        u: usize,
        #[arg(long)]
        v: usize,
        #[command(flatten)]
        flags: SolveFlags,
    },
    /// Re-check a certificate in exact arithmetic.
    Verify {
        certificate: PathBuf,
        /// Also compare against the reference solver (tiny instances only).
        #[arg(long)]
        oracle: bool,
    },
    /// Dump the lifted graph (dot) or the support min-cost flow instance (DIMACS).
    ExportLifted {
        instance: PathBuf,
        #[arg(long, value_enum, default_value = "dot")]
        format: ExportFormat,
        /// Output file; stdout when absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        flags: SolveFlags,
    },
    /// Solve a DIMACS min-cost flow file exactly and check its potentials.
    SolveMcf { problem: PathBuf },
}

#[derive(Debug)]
struct Failure {
    code: u8,
    kind: &'static str,
    message: String,
}

impl Failure {
    fn invalid(message: impl ToString) -> Self {
        Self {
            code: 2,
            kind: "invalid_instance",
            message: message.to_string(),
        }
    }

    fn solver(message: impl ToString) -> Self {
        Self {
            code: 3,
            kind: "solver_failure",
            message: message.to_string(),
        }
    }

    fn verification(message: impl ToString) -> Self {
        Self {
            code: 4,
            kind: "verification_failure",
            message: message.to_string(),
        }
    }
}

impl From<SolveError> for Failure {
    fn from(e: SolveError) -> Self {
        if e.is_invalid_instance() {
            Failure::invalid(e)
        } else {
            Failure::solver(e)
        }
    }
}

impl From<RegularizedError> for Failure {
    fn from(e: RegularizedError) -> Self {
        if e.is_invalid_instance() {
            Failure::invalid(e)
        } else {
            Failure::solver(e)
        }
    }
}

impl From<VerifyError> for Failure {
    fn from(e: VerifyError) -> Self {
        if e.is_invalid_instance() {
            Failure::invalid(e)
        } else {
            Failure::verification(e)
        }
    }
}

/// A command result: text for humans and a JSON record for scripts.
struct Report {
    text: String,
    record: Value,
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::solver(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<(Hypergraph, Demand), Failure> {
    parse_instance(&read(path)?).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))
}

fn approx(value: &BigRational) -> String {
    format!("{:.6e}", value.to_f64())
}

fn print_trace(rows: &[TraceRow]) {
    eprintln!("iteration\tt\tobjective\tgap\tresidual\tnewton_steps");
    for row in rows {
        eprintln!(
            "{}\t{:e}\t{:.12e}\t{:e}\t{:e}\t{}",
            row.iteration, row.t, row.objective, row.gap, row.residual, row.newton_steps
        );
    }
}

fn finish_certificate(cert: &CertificateFile, flags: &SolveFlags, trace: &[TraceRow]) -> Result<(), Failure> {
    if flags.trace {
        print_trace(trace);
    }
    if let Some(path) = &flags.json_out {
        write(path, &cert.to_json())?;
    }
    Ok(())
}

fn gap_record(primal: &BigRational, dual: &BigRational, gap: &BigRational) -> Value {
    json!({
        "primal": rational_to_string(primal),
        "dual": rational_to_string(dual),
        "gap": rational_to_string(gap),
        "gap_approx": approx(gap),
    })
}

fn solve_text(x: &[BigRational], primal: &BigRational, dual: &BigRational, gap: &BigRational) -> String {
    let xs: Vec<String> = x.iter().map(rational_to_string).collect();
    format!(
        "primal {} ({})\ndual   {} ({})\ngap    {} ({})\nx      [{}]",
        rational_to_string(primal),
        approx(primal),
        rational_to_string(dual),
        approx(dual),
        rational_to_string(gap),
        approx(gap),
        xs.join(", ")
    )
}

fn warn(sol: &PoissonSolution) {
    for w in &sol.instance.warnings {
        eprintln!("warning: {w}");
    }
}

fn cmd_solve(instance: &Path, flags: &SolveFlags) -> Result<Report, Failure> {
    let (h, s) = load(instance)?;
    let params = flags.params();
    let sol = solve_poisson(&h, &s, &params)?;
    warn(&sol);
    let cert = CertificateFile::from_poisson(&sol, &params);
    finish_certificate(&cert, flags, &sol.first_stage.trace)?;
    let r = &sol.report;
    Ok(Report {
        text: solve_text(&sol.x().0, &r.primal, &r.dual, &r.gap),
        record: json!({
            "command": "solve",
            "report": gap_record(&r.primal, &r.dual, &r.gap),
            "x": cert.x,
            "first_stage": cert.first_stage,
        }),
    })
}

fn regularized_report(command: &str, sol: &RegularizedSolution, params: &SolveParams, flags: &SolveFlags) -> Result<Report, Failure> {
    warn(&sol.inner);
    let cert = CertificateFile::from_regularized(sol, params);
    finish_certificate(&cert, flags, &sol.inner.first_stage.trace)?;
    let r = &sol.report;
    Ok(Report {
        text: solve_text(&sol.x, &r.primal, &r.dual, &r.gap),
        record: json!({
            "command": command,
            "report": gap_record(&r.primal, &r.dual, &r.gap),
            "x": cert.x,
            "first_stage": cert.first_stage,
        }),
    })
}

fn parse_y(path: &Path, n: usize) -> Result<Vec<Dyadic>, Failure> {
    let y: Vec<Dyadic> =
        serde_json::from_str(&read(path)?).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))?;
    if y.len() != n {
        return Err(Failure::invalid(format!("y has {} entries, expected {n}", y.len())));
    }
    Ok(y)
}

fn cmd_response(instance: &Path, u: usize, v: usize, flags: &SolveFlags) -> Result<Report, Failure> {
    let (h, _) = load(instance)?;
    let params = flags.params();
    let out = pairwise_response(&h, u, v, &params)?;
    warn(&out.solution);
    let cert = CertificateFile::from_poisson(&out.solution, &params);
    finish_certificate(&cert, flags, &out.solution.first_stage.trace)?;
    Ok(Report {
        text: format!(
            "response {} = {} (certified gap {}; not an error bound on the response)",
            approx(&out.response),
            rational_to_string(&out.response),
            approx(&out.gap)
        ),
        record: json!({
            "command": "response",
            "u": u,
            "v": v,
            "response": rational_to_string(&out.response),
            "response_approx": approx(&out.response),
            "gap": rational_to_string(&out.gap),
        }),
    })
}

fn cmd_verify(path: &Path, oracle: bool) -> Result<Report, Failure> {
    let text = read(path)?;
    let cert = CertificateFile::from_json(&text)?;
    let verified = verify(&cert)?;
    let mut lines = vec![
        format!("ok: {:?} certificate, instance {}", verified.kind, cert.instance_sha256),
        format!("gap {} ({})", rational_to_string(&verified.gap), approx(&verified.gap)),
    ];
    let mut record = json!({
        "command": "verify",
        "ok": true,
        "report": gap_record(&verified.primal, &verified.dual, &verified.gap),
    });
    if oracle {
        let check = oracle_check(&cert, 2e-4)?;
        if !check.consistent {
            return Err(Failure::verification(format!(
                "reference optimum {:e} lies outside [-dual, primal]",
                check.optimum
            )));
        }
        lines.push(format!(
            "oracle optimum {:.9e} ({}) inside [-dual, primal]",
            check.optimum,
            if check.exact { "exact" } else { "approximate" }
        ));
        record["oracle"] = json!({ "optimum": format!("{:e}", check.optimum), "exact": check.exact });
    }
    Ok(Report {
        text: lines.join("\n"),
        record,
    })
}

fn cmd_export(instance: &Path, format: ExportFormat, output: Option<&Path>, flags: &SolveFlags) -> Result<Report, Failure> {
    let (h, s) = load(instance)?;
    let dump = match format {
        ExportFormat::Dot => to_dot(&build_lifted_graph(&h)),
        ExportFormat::Dimacs => {
            let sol = solve_poisson(&h, &s, &flags.params())?;
            let support = build_support_instance(
                &h,
                &sol.recovery.rounded_demand,
                &sol.recovery.budgets,
                flags.grid_bits,
            )
            .map_err(Failure::solver)?;
            format!(
                "c support instance, costs and capacities scaled by 2^{}\n{}",
                flags.grid_bits,
                write_dimacs(&support.mcf)
            )
        }
    };
    match output {
        Some(path) => {
            write(path, &dump)?;
            Ok(Report {
                text: format!("wrote {}", path.display()),
                record: json!({ "command": "export-lifted", "output": path.display().to_string() }),
            })
        }
        None => Ok(Report {
            record: json!({ "command": "export-lifted", "dump": dump }),
            text: dump.trim_end().to_string(),
        }),
    }
}

fn cmd_solve_mcf(path: &Path) -> Result<Report, Failure> {
    let inst = parse_dimacs(&read(path)?).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))?;
    inst.validate().map_err(Failure::invalid)?;
    let sol = solve_mcf_exact(&inst).map_err(Failure::solver)?;
    let cert = extract_residual_potentials(&inst, &sol).map_err(Failure::solver)?;
    cert.verify(&inst, &sol).map_err(Failure::verification)?;
    let flow: Vec<String> = sol.flow.iter().map(ToString::to_string).collect();
    Ok(Report {
        text: format!("objective {}\nflow [{}]\npotential certificate ok", sol.objective, flow.join(", ")),
        record: json!({
            "command": "solve-mcf",
            "objective": sol.objective.to_string(),
            "flow": flow,
            "potentials": cert.potentials.iter().map(ToString::to_string).collect::<Vec<_>>(),
        }),
    })
}

fn run(command: &Command) -> Result<Report, Failure> {
    match command {
        Command::Solve { instance, flags } => cmd_solve(instance, flags),
        Command::SolveReg { instance, lambda, flags } => {
            let (h, s) = load(instance)?;
            let params = flags.params();
            let sol = solve_regularized(&h, lambda, &s.0, &params)?;
            regularized_report("solve-reg", &sol, &params, flags)
        }
        Command::Resolvent {
            instance,
            lambda,
            y_file,
            flags,
        } => {
            let (h, _) = load(instance)?;
            let y = parse_y(y_file, h.vertex_count())?;
            let params = flags.params();
            let sol = resolvent(&h, lambda, &y, &params)?;
            regularized_report("resolvent", &sol, &params, flags)
        }
        Command::Response { instance, u, v, flags } => cmd_response(instance, *u, *v, flags),
        Command::Verify { certificate, oracle } => cmd_verify(certificate, *oracle),
        Command::ExportLifted {
            instance,
            format,
            output,
            flags,
        } => cmd_export(instance, *format, output.as_deref(), flags),
        Command::SolveMcf { problem } => cmd_solve_mcf(problem),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(report) => {
            // a closed pipe is not an error for a report
            let mut out = std::io::stdout();
            let _ = if cli.json {
                writeln!(out, "{}", report.record)
            } else {
                writeln!(out, "{}", report.text)
            };
            ExitCode::SUCCESS
        }
        Err(failure) => {
            if cli.json {
                println!(
                    "{}",
                    json!({ "error": { "kind": failure.kind, "exit_code": failure.code, "message": failure.message } })
                );
            } else {
                eprintln!("error: {}", failure.message);
            }
            ExitCode::from(failure.code)
        }
    }
}
