use std::path::PathBuf;
use std::time::Instant;

use clap::{ArgGroup, Parser, Subcommand, ValueEnum};
use sockdiv::equivariance::{
    all_relabelings, automorphisms_of_sock_instance, cheating_sock_divider, check_divider_equivariance,
    enumerate_shoe_instances, enumerate_sock_instances, search_equivariant_sock_divider, shoe_automorphisms,
    EquivariantSearchDivider, SearchOutcome, DEFAULT_BUDGET,
};
use sockdiv::reductions::{
    choice_from_sock_divider, columns_bundle, mra_from_sock_divider, rows_bundle, rows_columns_instance,
    sock_divide_from_mra, strong_divisibility_witness, trivialize_with_order, weak_divisibility_witness,
    LinearOrder, SockDivider,
};
use sockdiv::shoe::{propose, shoe_divide, shoe_divide_traced, verify_division};
use sockdiv::{Error, ShoeInstance, SockInstance};

use crate::format::{emit, fiber_map, pairs_of, parse_instance, split_keys, El, FileError, InstanceFile};
use crate::report::{
    bundle_outcome, certificate_outcome, divisible_set, names, reverify, Check, InstanceDigest, Outcome, RunReport,
    ShoeSymmetry, SuiteSummary, TraceLine, Witness,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NO_DIVIDER: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "sockdiv", version, about = "Division by n without choice, on finite instances")]
pub struct Cli {
    /// Print the report as JSON.
    #[arg(long, global = true)]
    pub json: bool,
    /// Largest number of instances an enumeration may produce.
    #[arg(long, global = true, default_value_t = DEFAULT_BUDGET)]
    pub budget: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum OracleKind {
    /// Sorts labels; always answers, never equivariant.
    Cheating,
    /// Bounded search for an automorphism-invariant answer.
    Equivariant,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Shoe,
    Sock,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Parse and validate an instance file.
    Validate { file: PathBuf },
    /// Divide a shoe instance.
    Divide {
        file: PathBuf,
        /// Include every proposal and rejection.
        #[arg(long)]
        trace: bool,
    },
    /// Rows bundle of a pair family.
    Rows { file: PathBuf },
    /// Columns bundle of a pair family.
    Columns { file: PathBuf },
    /// Choose one member of every pair through a sock divider.
    Choose {
        file: PathBuf,
        #[arg(long, value_enum)]
        oracle: OracleKind,
    },
    /// Bijection from a bundle's total space to A×n through a sock divider.
    Mra {
        file: PathBuf,
        #[arg(long, value_enum)]
        oracle: OracleKind,
    },
    /// Divide a sock instance by trivializing both sides.
    Sockdivide { file: PathBuf },
    /// Trivialize a bundle with a base order (comma-separated keys).
    Trivialize {
        file: PathBuf,
        #[arg(long)]
        order: String,
    },
    /// Decide whether a set splits into blocks of size n.
    #[command(group(ArgGroup::new("mode").required(true).args(["strong", "weak"])))]
    Divisible {
        file: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        strong: bool,
        #[arg(long)]
        weak: bool,
    },
    /// Look for an automorphism-invariant sock divider.
    SearchEquivariant { file: PathBuf },
    /// List the automorphisms of an instance.
    Automorphisms { file: PathBuf },
    /// Enumerate all instances of a shape, optionally running the suite on them.
    Enumerate {
        #[arg(value_enum)]
        family: Family,
        #[arg(long)]
        size: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        run_suite: bool,
    },
}

/// Result of one invocation, before printing.
#[derive(Debug)]
pub struct Execution {
    pub code: i32,
    pub report: Option<RunReport>,
    pub error: Option<String>,
    /// Help or version text from the argument parser.
    pub usage: Option<String>,
}

impl Execution {
    /// What goes to standard output.
    pub fn stdout(&self, json: bool) -> String {
        match (&self.report, &self.usage) {
            (Some(r), _) if json => serde_json::to_string_pretty(r).expect("reports serialize") + "\n",
            (Some(r), _) => crate::report::render_text(r),
            (None, Some(u)) => u.clone(),
            (None, None) if json => {
                let body = serde_json::json!({"error": self.error, "exit": self.code});
                serde_json::to_string_pretty(&body).expect("serializes") + "\n"
            }
            (None, None) => String::new(),
        }
    }
}

/// Exit code for a core error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NoEquivariantDivider(_) => EXIT_NO_DIVIDER,
        Error::SizeBoundExceeded { .. } | Error::BudgetExceeded { .. } => EXIT_INVALID,
        e if e.is_validation() => EXIT_INVALID,
        _ => EXIT_INTERNAL,
    }
}

enum Failure {
    File(FileError),
    Core(Error),
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn load(path: &PathBuf) -> Result<InstanceFile, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    parse_instance(&text).map_err(Failure::File)
}

fn wrong_kind(sub: &str, file: &InstanceFile, wanted: &str) -> Failure {
    Failure::Usage(format!("{sub} takes a {wanted} file, got {}", file.kind()))
}

fn oracle(kind: OracleKind) -> Box<dyn SockDivider> {
    match kind {
        OracleKind::Cheating => Box::new(cheating_sock_divider()),
        OracleKind::Equivariant => Box::new(EquivariantSearchDivider::default()),
    }
}

/// Runs a command line (without the program name).
pub fn run_subcommand<I, S>(args: I) -> Execution
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let args: Vec<String> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(std::iter::once("sockdiv".to_string()).chain(args.iter().cloned())) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let text = e.render().to_string();
            return Execution {
                code,
                report: None,
                error: (code != EXIT_OK).then(|| text.clone()),
                usage: (code == EXIT_OK).then_some(text),
            };
        }
    };
    let started = Instant::now();
    let outcome = dispatch(&cli);
    let elapsed_ms = started.elapsed().as_secs_f64() * 1e3;
    match outcome {
        Ok(step) => finish(args, step, elapsed_ms),
        Err(failure) => {
            let (code, error) = match failure {
                Failure::File(e) => (EXIT_INVALID, e.to_string()),
                Failure::Core(e) => (exit_code(&e), e.to_string()),
                Failure::Usage(msg) => (EXIT_INVALID, msg),
            };
            Execution {
                code,
                report: None,
                error: Some(error),
                usage: None,
            }
        }
    }
}

struct Step {
    subcommand: &'static str,
    file: Option<InstanceFile>,
    result: Outcome,
    checks: Vec<Check>,
    code: i32,
}

impl Step {
    fn ok(subcommand: &'static str, file: InstanceFile, result: Outcome) -> Self {
        Step {
            subcommand,
            file: Some(file),
            result,
            checks: Vec::new(),
            code: EXIT_OK,
        }
    }
}

/// Attaches the read-back check: the report is serialized, parsed again
/// and re-verified before it is shown.
fn finish(args: Vec<String>, step: Step, elapsed_ms: f64) -> Execution {
    let mut report = RunReport {
        command: args,
        subcommand: step.subcommand.to_string(),
        instance: step.file.as_ref().map(InstanceDigest::of),
        result: step.result,
        checks: step.checks,
        elapsed_ms,
    };
    let wire = serde_json::to_string(&report).expect("reports serialize");
    let reread: RunReport = serde_json::from_str(&wire).expect("reports deserialize");
    let verdict = reverify(&reread, step.file.as_ref());
    let passed = matches!(verdict, Ok(true));
    report.checks.push(Check::new("report re-verifies", passed));
    let mut code = step.code;
    let mut error = None;
    if !report.checks.iter().all(|c| c.passed) {
        code = EXIT_INTERNAL;
        error = Some(match verdict {
            Err(e) => format!("report could not be re-verified: {e}"),
            Ok(_) => "a check failed; see the report".to_string(),
        });
    }
    Execution {
        code,
        report: Some(report),
        error,
        usage: None,
    }
}

fn dispatch(cli: &Cli) -> Result<Step, Failure> {
    match &cli.command {
        Command::Validate { file } => {
            let file = load(file)?;
            let summary = summarize(&file);
            Ok(Step::ok("validate", file, Outcome::Valid { summary }))
        }
        Command::Divide { file, trace } => {
            let file = load(file)?;
            let InstanceFile::Shoe(inst) = &file else {
                return Err(wrong_kind("divide", &file, "shoe"));
            };
            let res = if *trace { shoe_divide_traced(inst)? } else { shoe_divide(inst)? };
            let verified = verify_division(inst, &res.matching)?;
            let mut step = Step::ok(
                "divide",
                file.clone(),
                Outcome::Matching {
                    pairs: pairs_of(&res.matching),
                    rounds: res.rounds,
                    trace: res.trace.map(|t| t.iter().map(TraceLine::from).collect()),
                },
            );
            step.checks.push(Check::new("verify_division", verified));
            Ok(step)
        }
        Command::Rows { file } | Command::Columns { file } => {
            let rows = matches!(cli.command, Command::Rows { .. });
            let name = if rows { "rows" } else { "columns" };
            let file = load(file)?;
            let InstanceFile::PairFamily(family) = &file else {
                return Err(wrong_kind(name, &file, "pair-family"));
            };
            let (bundle, other) = if rows {
                (rows_bundle(family), columns_bundle(family))
            } else {
                (columns_bundle(family), rows_bundle(family))
            };
            let same = bundle.total_space() == other.total_space();
            let mut step = Step::ok(name, file.clone(), bundle_outcome(&bundle));
            step.checks.push(Check::new("rows and columns share a total space", same));
            Ok(step)
        }
        Command::Choose { file, oracle: kind } => {
            let file = load(file)?;
            let InstanceFile::PairFamily(family) = &file else {
                return Err(wrong_kind("choose", &file, "pair-family"));
            };
            match choice_from_sock_divider(family, oracle(*kind).as_ref()) {
                Ok(choice) => {
                    let selection = choice
                        .selection()
                        .iter()
                        .map(|(i, x)| (El(i.clone()), El(x.clone())))
                        .collect();
                    Ok(Step::ok("choose", file.clone(), Outcome::Choice { selection }))
                }
                Err(Error::NoEquivariantDivider(cert)) => Ok(negative("choose", file.clone(), &cert)),
                Err(e) => Err(e.into()),
            }
        }
        Command::Mra { file, oracle: kind } => {
            let file = load(file)?;
            let InstanceFile::Bundle { bundle, .. } = &file else {
                return Err(wrong_kind("mra", &file, "bundle"));
            };
            match mra_from_sock_divider(bundle, oracle(*kind).as_ref()) {
                Ok(g) => Ok(Step::ok("mra", file.clone(), Outcome::Bijection { pairs: pairs_of(&g) })),
                Err(Error::NoEquivariantDivider(cert)) => Ok(negative("mra", file.clone(), &cert)),
                Err(e) => Err(e.into()),
            }
        }
        Command::Sockdivide { file } => {
            let file = load(file)?;
            let InstanceFile::Sock(inst) = &file else {
                return Err(wrong_kind("sockdivide", &file, "sock"));
            };
            let g = sock_divide_from_mra(inst)?;
            let mut step = Step::ok("sockdivide", file.clone(), Outcome::Bijection { pairs: pairs_of(&g) });
            if let Some(induced) = inst.induced_base_map() {
                step.checks.push(Check::new("agrees with the map u induces", induced == g));
            }
            Ok(step)
        }
        Command::Trivialize { file, order } => {
            let file = load(file)?;
            let InstanceFile::Bundle { bundle, f } = &file else {
                return Err(wrong_kind("trivialize", &file, "bundle"));
            };
            let order = LinearOrder::new(split_keys(order).map_err(Failure::Usage)?)?;
            // Without an `f` in the file, repeated addition supplies one.
            let f = match f {
                Some(f) => f.clone(),
                None => mra_from_sock_divider(bundle, &cheating_sock_divider())?,
            };
            let t = trivialize_with_order(bundle, &order, &f)?;
            Ok(Step::ok("trivialize", file.clone(), Outcome::Bijection { pairs: pairs_of(&t) }))
        }
        Command::Divisible { file, n, strong, .. } => {
            let file = load(file)?;
            let set = divisible_set(&file).ok_or_else(|| wrong_kind("divisible", &file, "set or bundle"))?;
            if *n == 0 {
                return Err(Error::ZeroArity.into());
            }
            let result = if *strong {
                let w = strong_divisibility_witness(&set, *n);
                Outcome::Divisibility {
                    n: *n,
                    divisible: w.is_some(),
                    quotient: w.as_ref().map(|w| w.quotient.iter().cloned().map(El).collect()),
                    pairing: w.as_ref().map(|w| pairs_of(&w.pairing)),
                    fibers: None,
                }
            } else {
                let w = weak_divisibility_witness(&set, *n);
                Outcome::Divisibility {
                    n: *n,
                    divisible: w.is_some(),
                    quotient: None,
                    pairing: None,
                    fibers: w.as_ref().map(|b| fiber_map(b.fibers())),
                }
            };
            Ok(Step::ok("divisible", file, result))
        }
        Command::SearchEquivariant { file } => {
            let file = load(file)?;
            let inst = sock_of("search-equivariant", &file)?;
            match search_equivariant_sock_divider(&inst)? {
                SearchOutcome::Divider(g) => Ok(Step::ok(
                    "search-equivariant",
                    file.clone(),
                    Outcome::Bijection { pairs: pairs_of(&g) },
                )),
                SearchOutcome::Certificate(cert) => Ok(negative("search-equivariant", file.clone(), &cert)),
            }
        }
        Command::Automorphisms { file } => {
            let file = load(file)?;
            if let InstanceFile::Shoe(inst) = &file {
                let members = shoe_automorphisms(inst, sockdiv::equivariance::DEFAULT_TOTAL_BOUND)?
                    .iter()
                    .map(|r| ShoeSymmetry {
                        on_a: pairs_of(r.on_a()),
                        on_b: pairs_of(r.on_b()),
                    })
                    .collect();
                return Ok(Step::ok("automorphisms", file.clone(), Outcome::ShoeAutomorphisms { members }));
            }
            let inst = sock_of("automorphisms", &file)?;
            let members = automorphisms_of_sock_instance(&inst)?.iter().map(Witness::from).collect();
            Ok(Step::ok("automorphisms", file.clone(), Outcome::SockAutomorphisms { members }))
        }
        Command::Enumerate {
            family,
            size,
            n,
            run_suite,
        } => enumerate(*family, *size, *n, *run_suite, cli.budget),
    }
}

/// A certificate is a successful, negative answer.
fn negative(subcommand: &'static str, file: InstanceFile, cert: &sockdiv::equivariance::NonexistenceCertificate) -> Step {
    Step {
        subcommand,
        file: Some(file),
        result: certificate_outcome(cert),
        checks: Vec::new(),
        code: EXIT_NO_DIVIDER,
    }
}

/// Sock files as they are; pair families as their rows/columns instance.
fn sock_of(sub: &str, file: &InstanceFile) -> Result<SockInstance, Failure> {
    match file {
        InstanceFile::Sock(inst) => Ok(inst.clone()),
        InstanceFile::PairFamily(family) => Ok(rows_columns_instance(family)),
        other => Err(wrong_kind(sub, other, "sock or pair-family")),
    }
}

fn summarize(file: &InstanceFile) -> String {
    match file {
        InstanceFile::Shoe(inst) => format!("shoe instance, |A| = |B| = {}, n = {}", inst.a().len(), inst.n()),
        InstanceFile::Sock(inst) => format!(
            "sock instance, |A| = {}, |B| = {}, n = {}",
            inst.left().base_len(),
            inst.right().base_len(),
            inst.arity()
        ),
        InstanceFile::PairFamily(family) => format!(
            "pair family of {} fiber(s) of size {}, ordered {}",
            family.pairs().len(),
            family.n(),
            names(family.order())
        ),
        InstanceFile::Bundle { bundle, f } => format!(
            "bundle over {} point(s), n = {}{}",
            bundle.base_len(),
            bundle.arity(),
            if f.is_some() { ", with f" } else { "" }
        ),
        InstanceFile::Set(s) => format!("set of {} element(s)", s.len()),
    }
}

fn enumerate(family: Family, size: usize, n: usize, run_suite: bool, budget: u64) -> Result<Step, Failure> {
    let (name, count, instances, suite) = match family {
        Family::Shoe => {
            let all = enumerate_shoe_instances(size, n, budget)?;
            let count = all.total();
            if run_suite {
                ("shoe", count, None, Some(shoe_suite(all.collect())))
            } else {
                ("shoe", count, Some(all.map(|i| emit(&InstanceFile::Shoe(i))).collect()), None)
            }
        }
        Family::Sock => {
            let all = enumerate_sock_instances(size, n, budget)?;
            let count = all.total();
            if run_suite {
                ("sock", count, None, Some(sock_suite(all.collect())?))
            } else {
                ("sock", count, Some(all.map(|i| emit(&InstanceFile::Sock(i))).collect()), None)
            }
        }
    };
    let clean = suite.as_ref().is_none_or(SuiteSummary::is_clean);
    let mut checks = Vec::new();
    if suite.is_some() {
        checks.push(Check::new("suite clean", clean));
    }
    Ok(Step {
        subcommand: "enumerate",
        file: None,
        result: Outcome::Enumeration {
            family: name.to_string(),
            size,
            n,
            count,
            instances,
            suite,
        },
        checks,
        code: EXIT_OK,
    })
}

/// Largest base for which the suite tries every relabeling.
const RELABEL_LIMIT: usize = 4;

fn shoe_suite(family: Vec<ShoeInstance>) -> SuiteSummary {
    let mut verified = 0;
    let mut incomplete = 0;
    let mut repaired = 0;
    for inst in &family {
        if !propose(inst).unmatched.is_empty() {
            repaired += 1;
        }
        match shoe_divide(inst) {
            Ok(res) if verify_division(inst, &res.matching).unwrap_or(false) => verified += 1,
            Ok(_) => {}
            Err(Error::IncompleteMatching { .. }) => incomplete += 1,
            Err(_) => {}
        }
    }
    let instances = family.len() as u64;
    let exhaustive = family.first().is_none_or(|i| i.a().len() <= RELABEL_LIMIT);
    let (checked, violations) = if exhaustive {
        let report = check_divider_equivariance(
            |i: &ShoeInstance| shoe_divide(i).map(|r| r.matching),
            family,
            |i| all_relabelings(i.a(), i.b()),
        );
        (report.checked as u64, report.violations.len() as u64)
    } else {
        (0, 0)
    };
    SuiteSummary::Shoe {
        instances,
        verified,
        incomplete,
        repaired,
        relabelings_checked: checked,
        equivariance_violations: violations,
    }
}

fn sock_suite(family: Vec<SockInstance>) -> Result<SuiteSummary, Failure> {
    let mut summary = (0, 0, 0, 0, 0, 0);
    for inst in &family {
        match search_equivariant_sock_divider(inst)? {
            SearchOutcome::Divider(_) => summary.0 += 1,
            SearchOutcome::Certificate(cert) => {
                summary.1 += 1;
                if cert.replay(inst) {
                    summary.2 += 1;
                }
            }
        }
        let g = sock_divide_from_mra(inst)?;
        if g.has_sets(&inst.left().base(), &inst.right().base()) {
            summary.3 += 1;
        }
        if let Some(induced) = inst.induced_base_map() {
            summary.4 += 1;
            if induced == g {
                summary.5 += 1;
            }
        }
    }
    let (dividers, certificates, certificates_replayed, sockdivide_bijections, fiber_respecting, fiber_respecting_exact) =
        summary;
    Ok(SuiteSummary::Sock {
        instances: family.len() as u64,
        dividers,
        certificates,
        certificates_replayed,
        sockdivide_bijections,
        fiber_respecting,
        fiber_respecting_exact,
    })
}
