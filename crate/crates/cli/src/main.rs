//! Command-line front end: ingest → isolate → classify → plan →
//! simulate/compare/bench. Human summaries go to stdout; machine-readable
//! reports go to `--out` as JSON and/or CSV, written atomically.

use clap::{Parser, Subcommand, ValueEnum};
use microsplit_core::classify::classification_report;
use microsplit_core::facts::{
    cross_cluster_edges, parse_facts, parse_facts_lenient, serialize_facts, validate, CodeFacts,
};
use microsplit_core::isolation::{isolate, Iterations, Policy};
use microsplit_core::plan::{generate_plan, lint};
use microsplit_core::protocols::{
    compare_protocols, fuzz, gen, run_id_protocol, run_json_protocol, ProtocolOutcome,
};
use microsplit_core::simcore::{
    heap_fingerprint, parse_scenario, run_monolith, ScenarioScript,
};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Default seed for generated scenarios; fixed so that runs are reproducible
/// without flags.
const DEFAULT_SEED: u64 = 20240517;

#[derive(Parser)]
#[command(name = "microsplit", version, about = "Monolith-to-microservices analysis toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Directory for machine-readable reports (created if absent).
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Which machine-readable forms to write.
    #[arg(long, global = true, value_enum, default_value_t = Format::Both)]
    format: Format,
    /// Seed for generated scenarios (used when --scenario is omitted).
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// compare: exit 2 when the JSON protocol diverges, 3 when ID diverges.
    #[arg(long, global = true)]
    strict: bool,
    /// Tolerate unknown keys in the facts document (warn instead of failing).
    #[arg(long, global = true)]
    lenient: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Both,
}

impl Format {
    fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }

    fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PolicyArg {
    PaperSimple,
    NetReduction,
}

impl From<PolicyArg> for Policy {
    fn from(p: PolicyArg) -> Policy {
        match p {
            PolicyArg::PaperSimple => Policy::PaperSimple,
            PolicyArg::NetReduction => Policy::NetReduction,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProtocolArg {
    Monolith,
    Id,
    Json,
    /// Local copies with periodic sync; recognized but not implemented.
    CachedId,
}

#[derive(Subcommand)]
enum Command {
    /// Parse, validate, normalize, and re-emit a facts document.
    Ingest {
        #[arg(long)]
        facts: PathBuf,
    },
    /// Detect disconnected subgraphs and relocate the eligible ones.
    Isolate {
        #[arg(long)]
        facts: PathBuf,
        /// `fixpoint` or an iteration count.
        #[arg(long, default_value = "fixpoint")]
        iterations: String,
        #[arg(long, value_enum, default_value_t = PolicyArg::PaperSimple)]
        policy: PolicyArg,
    },
    /// Classify the cross-cluster API surface for transfer safety.
    Classify {
        #[arg(long)]
        facts: PathBuf,
    },
    /// Emit the wrapper/endpoint refactoring plan.
    Plan {
        #[arg(long)]
        facts: PathBuf,
        /// Append anti-pattern warnings.
        #[arg(long)]
        lint: bool,
    },
    /// Run one protocol engine over a scenario.
    Simulate {
        #[arg(long)]
        facts: Option<PathBuf>,
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = ProtocolArg::Monolith)]
        protocol: ProtocolArg,
    },
    /// Run all three engines and report divergences and costs.
    Compare {
        #[arg(long)]
        facts: Option<PathBuf>,
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
    /// Closed-form cost sweeps.
    Bench {
        #[command(subcommand)]
        suite: BenchSuite,
    },
}

#[derive(Subcommand)]
enum BenchSuite {
    /// Linked chains of depth 1..=N: resident objects per protocol.
    Chain {
        #[arg(long, default_value_t = 16)]
        max_depth: usize,
    },
    /// One call carrying a list of each given size: payload units sent.
    Payload {
        #[arg(long, value_delimiter = ',', default_value = "10,100,1000")]
        sizes: Vec<usize>,
    },
}

struct CliError(String);

macro_rules! error_from {
    ($($ty:ty),*) => {$(
        impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError(e.to_string())
            }
        }
    )*};
}

error_from!(
    microsplit_core::error::FactsError,
    microsplit_core::error::ScenarioError,
    microsplit_core::error::IsolationError,
    microsplit_core::error::ProtocolError
);

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(CliError(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> Result<u8, CliError> {
    match &cli.command {
        Command::Ingest { facts } => cmd_ingest(cli, facts),
        Command::Isolate { facts, iterations, policy } => {
            cmd_isolate(cli, facts, iterations, *policy)
        }
        Command::Classify { facts } => cmd_classify(cli, facts),
        Command::Plan { facts, lint } => cmd_plan(cli, facts, *lint),
        Command::Simulate { facts, scenario, protocol } => {
            cmd_simulate(cli, facts.as_deref(), scenario.as_deref(), *protocol)
        }
        Command::Compare { facts, scenario } => {
            cmd_compare(cli, facts.as_deref(), scenario.as_deref())
        }
        Command::Bench { suite } => cmd_bench(cli, suite),
    }
}

fn load_facts(cli: &Cli, path: &Path) -> Result<CodeFacts, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError(format!("{}: {e}", path.display())))?;
    let facts = if cli.lenient {
        let (facts, warnings) = parse_facts_lenient(&text)?;
        for warning in warnings {
            eprintln!("warning: {warning}");
        }
        facts
    } else {
        parse_facts(&text)?
    };
    let violations = validate(&facts);
    if !violations.is_empty() {
        let mut message = String::from("facts validation failed:");
        for v in &violations {
            let _ = write!(message, "\n  {v}");
        }
        return Err(CliError(message));
    }
    Ok(facts)
}

/// Write via a temp file in the same directory plus rename, so a failed run
/// never leaves a partial report behind.
fn write_atomic(path: &Path, content: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .map_err(|e| CliError(format!("{}: {e}", parent.display())))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, content).map_err(|e| CliError(format!("{}: {e}", tmp.display())))?;
    std::fs::rename(&tmp, path).map_err(|e| CliError(format!("{}: {e}", path.display())))?;
    Ok(())
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut out = serde_json::to_string_pretty(value).expect("report serialization");
    out.push('\n');
    out
}

fn cmd_ingest(cli: &Cli, path: &Path) -> Result<u8, CliError> {
    let facts = load_facts(cli, path)?;
    write_atomic(&cli.out.join("facts.normalized.json"), &serialize_facts(&facts))?;
    println!(
        "ingested {}: {} clusters, {} classes, {} calls, {} accesses, {} cross-cluster edges",
        path.display(),
        facts.clusters.len(),
        facts.classes.len(),
        facts.calls.len(),
        facts.accesses.len(),
        cross_cluster_edges(&facts).len()
    );
    Ok(0)
}

fn cmd_isolate(
    cli: &Cli,
    path: &Path,
    iterations: &str,
    policy: PolicyArg,
) -> Result<u8, CliError> {
    let facts = load_facts(cli, path)?;
    let iterations = match iterations {
        "fixpoint" => Iterations::Fixpoint,
        n => Iterations::Count(
            n.parse()
                .map_err(|_| CliError(format!("--iterations must be 'fixpoint' or a count, got '{n}'")))?,
        ),
    };
    let (rewritten, report) = isolate(&facts, iterations, policy.into())?;
    write_atomic(&cli.out.join("facts.isolated.json"), &serialize_facts(&rewritten))?;
    if cli.format.json() {
        write_atomic(&cli.out.join("isolation_report.json"), &to_json(&report))?;
    }
    if cli.format.csv() {
        write_atomic(&cli.out.join("isolation_report.csv"), &report.to_csv())?;
    }
    println!(
        "isolation: {} subgraphs, {} relocated over {} iteration{}; cross-cluster edges {} -> {}",
        report.total_subgraphs,
        report.relocated,
        report.iterations,
        if report.iterations == 1 { "" } else { "s" },
        report.cross_edges_before,
        report.cross_edges_after
    );
    Ok(0)
}

fn cmd_classify(cli: &Cli, path: &Path) -> Result<u8, CliError> {
    let facts = load_facts(cli, path)?;
    let report = classification_report(&facts);
    if cli.format.json() {
        write_atomic(&cli.out.join("classification.json"), &to_json(&report))?;
    }
    if cli.format.csv() {
        write_atomic(&cli.out.join("classification.csv"), &report.to_csv())?;
    }
    println!("classified {} APIs:", report.total);
    for (category, count) in &report.counts {
        println!("  {category}: {count}");
    }
    Ok(0)
}

fn cmd_plan(cli: &Cli, path: &Path, with_lint: bool) -> Result<u8, CliError> {
    let facts = load_facts(cli, path)?;
    let plan = generate_plan(&facts);
    write_atomic(&cli.out.join("plan.json"), &to_json(&plan))?;
    let clusters = plan.wrappers.len();
    println!(
        "plan: {} endpoints across {} cluster{}",
        plan.server_endpoint_count(),
        clusters,
        if clusters == 1 { "" } else { "s" }
    );
    if with_lint {
        let warnings = lint(&facts, &plan);
        let mut text = String::new();
        for warning in &warnings {
            println!("lint: {warning}");
            text.push_str(warning);
            text.push('\n');
        }
        write_atomic(&cli.out.join("plan_lint.txt"), &text)?;
    }
    Ok(0)
}

/// Resolve the (facts, scenario, name) triple: explicit files, or a seeded
/// random case when both are omitted.
fn load_case(
    cli: &Cli,
    facts: Option<&Path>,
    scenario: Option<&Path>,
) -> Result<(CodeFacts, ScenarioScript, String), CliError> {
    match (facts, scenario) {
        (Some(f), Some(s)) => {
            let facts = load_facts(cli, f)?;
            let text = std::fs::read_to_string(s)
                .map_err(|e| CliError(format!("{}: {e}", s.display())))?;
            let scenario = parse_scenario(&text, &facts)?;
            let name = s.file_stem().map(|n| n.to_string_lossy().into_owned());
            Ok((facts, scenario, name.unwrap_or_else(|| "scenario".to_string())))
        }
        (None, None) => {
            let (facts, scenario) = fuzz::random_case(cli.seed);
            Ok((facts, scenario, format!("seed{}", cli.seed)))
        }
        _ => Err(CliError(
            "--facts and --scenario must be given together (omit both for a seeded random case)"
                .to_string(),
        )),
    }
}

fn metrics_csv(rows: &[(String, String, &ProtocolOutcome)]) -> String {
    let mut out = String::from(
        "scenario,protocol,api_calls,payload_units_sent,resident_objects_total,findings_count\n",
    );
    for (scenario, protocol, outcome) in rows {
        let sent: u64 = outcome.metrics.values().map(|m| m.sent_units).sum();
        let _ = writeln!(
            out,
            "{scenario},{protocol},{},{sent},{},{}",
            outcome.total_api_calls(),
            outcome.total_resident_objects(),
            outcome.findings.len()
        );
    }
    out
}

fn cmd_simulate(
    cli: &Cli,
    facts: Option<&Path>,
    scenario: Option<&Path>,
    protocol: ProtocolArg,
) -> Result<u8, CliError> {
    let (facts, scenario, name) = load_case(cli, facts, scenario)?;
    let (label, outcome) = match protocol {
        ProtocolArg::Monolith => {
            let state = run_monolith(&facts, &scenario);
            let mut metrics = std::collections::BTreeMap::new();
            metrics.insert(
                "main".to_string(),
                microsplit_core::protocols::ServiceMetrics {
                    resident_objects: state
                        .contexts
                        .get("main")
                        .map(|c| c.heap.len() as u64)
                        .unwrap_or(0),
                    ..Default::default()
                },
            );
            ("monolith", ProtocolOutcome { state, metrics, findings: Vec::new() })
        }
        ProtocolArg::Id => ("id", run_id_protocol(&facts, &scenario)),
        ProtocolArg::Json => ("json", run_json_protocol(&facts, &scenario)),
        ProtocolArg::CachedId => {
            return Err(CliError(
                "unimplemented: the cached-id protocol (local copies with periodic sync) is not supported"
                    .to_string(),
            ))
        }
    };
    let fingerprint = heap_fingerprint(&outcome.state);
    #[derive(serde::Serialize)]
    struct Simulation<'a> {
        scenario: &'a str,
        protocol: &'a str,
        fingerprint: &'a str,
        outcome: &'a ProtocolOutcome,
    }
    if cli.format.json() {
        write_atomic(
            &cli.out.join(format!("simulate_{label}.json")),
            &to_json(&Simulation {
                scenario: &name,
                protocol: label,
                fingerprint: &fingerprint,
                outcome: &outcome,
            }),
        )?;
    }
    if cli.format.csv() {
        let rows = vec![(name.clone(), label.to_string(), &outcome)];
        write_atomic(&cli.out.join(format!("simulate_{label}.csv")), &metrics_csv(&rows))?;
    }
    println!(
        "{label} run of {name}: {} resident objects, {} api calls, {} finding{}",
        outcome.total_resident_objects(),
        outcome.total_api_calls(),
        outcome.findings.len(),
        if outcome.findings.len() == 1 { "" } else { "s" }
    );
    Ok(0)
}

fn cmd_compare(
    cli: &Cli,
    facts: Option<&Path>,
    scenario: Option<&Path>,
) -> Result<u8, CliError> {
    let (facts, scenario, name) = load_case(cli, facts, scenario)?;
    let report = compare_protocols(&facts, &scenario);
    if cli.format.json() {
        write_atomic(&cli.out.join("divergence_report.json"), &to_json(&report))?;
    }
    if cli.format.csv() {
        let rows = vec![
            (name.clone(), "monolith".to_string(), &report.monolith.outcome),
            (name.clone(), "id".to_string(), &report.id.outcome),
            (name.clone(), "json".to_string(), &report.json.outcome),
        ];
        write_atomic(&cli.out.join("metrics.csv"), &metrics_csv(&rows))?;
    }
    print!("{}", report.summary());
    for finding in &report.json.outcome.findings {
        println!("  json finding [step {}] {}: {}", finding.step, finding.category, finding.detail);
    }
    if cli.strict {
        if !report.id_matches_monolith {
            return Ok(3);
        }
        if !report.json_matches_monolith {
            return Ok(2);
        }
    }
    Ok(0)
}

fn cmd_bench(cli: &Cli, suite: &BenchSuite) -> Result<u8, CliError> {
    match suite {
        BenchSuite::Chain { max_depth } => {
            let mut csv = String::from("n,monolith_resident,id_resident,json_resident\n");
            for n in 1..=*max_depth {
                let (facts, scenario) = gen::gen_chain_scenario(n);
                let report = compare_protocols(&facts, &scenario);
                let _ = writeln!(
                    csv,
                    "{n},{},{},{}",
                    report.monolith.outcome.total_resident_objects(),
                    report.id.outcome.total_resident_objects(),
                    report.json.outcome.total_resident_objects()
                );
            }
            write_atomic(&cli.out.join("bench_chain.csv"), &csv)?;
            print!("{csv}");
        }
        BenchSuite::Payload { sizes } => {
            let mut csv = String::from("size,id_units,json_units\n");
            for &size in sizes {
                let (facts, scenario) = gen::gen_payload_scenario(size);
                let report = compare_protocols(&facts, &scenario);
                let units = |outcome: &ProtocolOutcome| {
                    outcome.metrics.get("client").map(|m| m.sent_units).unwrap_or(0)
                };
                let _ = writeln!(
                    csv,
                    "{size},{},{}",
                    units(&report.id.outcome),
                    units(&report.json.outcome)
                );
            }
            write_atomic(&cli.out.join("bench_payload.csv"), &csv)?;
            print!("{csv}");
        }
    }
    Ok(0)
}
