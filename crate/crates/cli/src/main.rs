use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cloneforge::bounds::count_report;
use cloneforge::clonoid::{enumerate_clonoids, Clonoid, Orientation};
use cloneforge::funtab::MixedFun;
use cloneforge::lattice::{self, enumerate_clones, import_json, verify_report, Filter, Format};
use cloneforge::polyring::{extract_monomial, reduce, Derivation, RPoly, RawPoly};
use cloneforge::relations::classify;
use cloneforge::zmod::{is_prime, max_product};
use cloneforge::{Error, PrimePair};
use serde::{Deserialize, Serialize};

#[derive(Parser)]
#[command(name = "cloneforge", version, about = "Clones on Z_p x Z_q containing addition")]
struct Cli {
    /// Seed for randomized checks. Every current verb is deterministic and ignores it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Write the document here instead of stdout.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct PairArgs {
    #[arg(short)]
    p: u32,
    #[arg(short)]
    q: u32,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate the linearly closed clonoids for one orientation.
    Clonoids {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long, value_enum, default_value_t = OrientationArg::Pq)]
        orientation: OrientationArg,
    },
    /// Enumerate the clone lattice.
    Clones {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long)]
        work_arity: Option<usize>,
        #[arg(long, value_enum)]
        filter: Option<FilterArg>,
        #[arg(long, value_enum, default_value_t = FormatArg::Json)]
        format: FormatArg,
    },
    /// Enumerate and check every counting and embedding result; exit 1 on failure.
    Verify {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long)]
        work_arity: Option<usize>,
        #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
        format: ReportFormat,
    },
    /// Polynomial normal forms and monomial extraction.
    Poly {
        #[command(subcommand)]
        op: PolyOp,
    },
    /// Relation preservation report for a function table (JSON or `p q n v0p v0q ...`).
    Classify {
        #[arg(short, long)]
        input: PathBuf,
    },
    /// Convert a lattice JSON document.
    Export {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        format: FormatArg,
    },
}

#[derive(Subcommand)]
enum PolyOp {
    /// Derive every monomial of a polynomial from it, replaying each derivation.
    Extract {
        #[arg(short, long)]
        input: PathBuf,
    },
    /// Reduce exponents with x^p = x.
    Reduce {
        #[arg(short, long)]
        input: PathBuf,
    },
    /// Substitute polynomials for variables: {"outer", "at", "inner"}.
    Compose {
        #[arg(short, long)]
        input: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum OrientationArg {
    Pq,
    Qp,
}

#[derive(Clone, Copy, ValueEnum)]
enum FilterArg {
    Diamond,
    Polynomial,
    Pi1,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Dot,
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Json,
}

#[derive(Serialize)]
struct ClonoidsDoc {
    p: u8,
    q: u8,
    orientation: &'static str,
    count: usize,
    formula: u128,
    clonoids: Vec<Clonoid>,
}

#[derive(Serialize)]
struct Extraction {
    exp: Vec<u8>,
    monomial: RPoly,
    replayed: bool,
    derivation: Derivation,
}

#[derive(Serialize)]
struct ExtractDoc {
    poly: RPoly,
    extractions: Vec<Extraction>,
}

#[derive(Deserialize)]
struct ComposeInput {
    outer: RPoly,
    at: Vec<usize>,
    inner: Vec<RPoly>,
}

enum Failure {
    Verification(String),
    Usage(String),
    Resource(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Verification(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Resource(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Verification(m) | Failure::Usage(m) | Failure::Resource(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(_) | Error::ContractViolation(_) => Failure::Usage(e.to_string()),
            Error::Resource(_) => Failure::Resource(e.to_string()),
            Error::InternalConsistency(_) => Failure::Verification(e.to_string()),
        }
    }
}

/// A stdout document plus whether its checks all passed.
struct Output {
    text: String,
    passed: bool,
}

impl Output {
    fn ok(text: String) -> Self {
        Output { text, passed: true }
    }
}

fn pair(args: &PairArgs) -> Result<PrimePair, Failure> {
    for v in [args.p, args.q] {
        if !is_prime(v as u64) {
            return Err(Failure::Usage(format!("{v} is not prime")));
        }
    }
    if args.p == args.q {
        return Err(Failure::Usage("p and q must be distinct".into()));
    }
    // both prime and distinct, so only the product cap can refuse the pair
    PrimePair::new(args.p, args.q).map_err(|_| {
        Failure::Resource(format!(
            "p*q = {} exceeds the cap {}; set CLONEFORGE_MAX_PRODUCT to raise it",
            args.p * args.q,
            max_product()
        ))
    })
}

fn work_arity(pp: PrimePair, requested: Option<usize>) -> Result<usize, Failure> {
    let least = pp.p().max(pp.q()) as usize;
    match requested {
        Some(k) if k < least => Err(Failure::Usage(format!("--work-arity must be at least max(p, q) = {least}"))),
        Some(k) => Ok(k),
        None => Ok(least),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn parse_json<'a, T: Deserialize<'a>>(text: &'a str, what: &str) -> Result<T, Failure> {
    serde_json::from_str(text).map_err(|e| Failure::Usage(format!("bad {what}: {e}")))
}

fn pretty(v: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(v).expect("value serializes") + "\n"
}

fn format_of(f: FormatArg) -> Format {
    match f {
        FormatArg::Dot => Format::Dot,
        FormatArg::Json => Format::Json,
        FormatArg::Csv => Format::Csv,
    }
}

fn run(command: Command) -> Result<Output, Failure> {
    match command {
        Command::Clonoids { pair: args, orientation } => {
            let pp = pair(&args)?;
            let (orient, name, formula) = match orientation {
                OrientationArg::Pq => (Orientation::Pq, "pq", count_report(pp).clonoids_pq),
                OrientationArg::Qp => (Orientation::Qp, "qp", count_report(pp).clonoids_qp),
            };
            let cs = enumerate_clonoids(pp, orient)?;
            eprintln!("{} clonoids, formula {formula}", cs.len());
            let passed = cs.len() as u128 == formula;
            let doc = ClonoidsDoc { p: pp.p(), q: pp.q(), orientation: name, count: cs.len(), formula, clonoids: cs };
            Ok(Output { text: pretty(&doc), passed })
        }
        Command::Clones { pair: args, work_arity: k, filter, format } => {
            let pp = pair(&args)?;
            let k = work_arity(pp, k)?;
            let start = Instant::now();
            let mut graph = enumerate_clones(pp, k)?;
            eprintln!("{} clones at work arity {k} in {:.1} s", graph.nodes.len(), start.elapsed().as_secs_f64());
            if let Some(f) = filter {
                let f = match f {
                    FilterArg::Diamond => Filter::Diamond,
                    FilterArg::Polynomial => Filter::Polynomial,
                    FilterArg::Pi1 => Filter::Pi1,
                };
                graph = graph.filtered(f)?;
                eprintln!("{} clones pass the filter", graph.nodes.len());
            }
            Ok(Output::ok(lattice::export(&graph, format_of(format))))
        }
        Command::Verify { pair: args, work_arity: k, format: ReportFormat::Json } => {
            let pp = pair(&args)?;
            let k = work_arity(pp, k)?;
            let graph = verify_report(pp, k)?;
            let report = graph.report.expect("verify_report attaches a report");
            for c in &report.checks {
                eprintln!("{} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
            }
            Ok(Output { text: pretty(&report), passed: report.passed })
        }
        Command::Poly { op } => run_poly(op),
        Command::Classify { input } => {
            let text = read(&input)?;
            let fs = parse_functions(&text)?;
            let reports = fs.iter().map(classify).collect::<Result<Vec<_>, _>>()?;
            let text = match reports.as_slice() {
                [one] => pretty(one),
                many => pretty(&many),
            };
            Ok(Output::ok(text))
        }
        Command::Export { input, format } => {
            let graph = import_json(&read(&input)?)?;
            Ok(Output::ok(lattice::export(&graph, format_of(format))))
        }
    }
}

/// A JSON table, a JSON array of tables, or one text-form table per line.
fn parse_functions(text: &str) -> Result<Vec<MixedFun>, Failure> {
    let t = text.trim_start();
    if t.starts_with('{') {
        return Ok(vec![parse_json(t, "function table")?]);
    }
    if t.starts_with('[') {
        return parse_json(t, "function tables");
    }
    let fs: Vec<MixedFun> =
        text.lines().filter(|l| !l.trim().is_empty()).map(MixedFun::from_text).collect::<Result<_, _>>()?;
    if fs.is_empty() {
        return Err(Failure::Usage("no function in input".into()));
    }
    Ok(fs)
}

fn run_poly(op: PolyOp) -> Result<Output, Failure> {
    match op {
        PolyOp::Reduce { input } => {
            let raw: RawPoly = parse_json(&read(&input)?, "polynomial")?;
            Ok(Output::ok(pretty(&reduce(&raw)?)))
        }
        PolyOp::Compose { input } => {
            let c: ComposeInput = parse_json(&read(&input)?, "composition")?;
            Ok(Output::ok(pretty(&c.outer.compose_at(&c.at, &c.inner)?)))
        }
        PolyOp::Extract { input } => {
            let f: RPoly = parse_json(&read(&input)?, "polynomial")?;
            let mut passed = true;
            let mut extractions = Vec::new();
            for (exp, coeff) in f.terms() {
                let d = extract_monomial(&f, exp)?;
                let want = RPoly::monomial(f.pp(), coeff, exp)?;
                let replayed = d.replay()? == want;
                passed &= replayed;
                eprintln!("{exp:?}: {} steps, replay {}", d.steps.len(), if replayed { "ok" } else { "FAILED" });
                extractions.push(Extraction { exp: exp.clone(), monomial: want, replayed, derivation: d });
            }
            let doc = ExtractDoc { poly: f, extractions };
            Ok(Output { text: pretty(&doc), passed })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.jobs {
        if n == 0 {
            eprintln!("error: --jobs must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot size the thread pool: {e}");
            return ExitCode::from(3);
        }
    }
    match run(cli.command) {
        Ok(out) => {
            let written = match &cli.output {
                Some(path) => fs::write(path, &out.text).map_err(|e| format!("cannot write {}: {e}", path.display())),
                None => {
                    print!("{}", out.text);
                    Ok(())
                }
            };
            if let Err(e) = written {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
            if out.passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("verification failed");
                ExitCode::from(1)
            }
        }
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
