use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use covmat::approximation::{approx, ApproxKind, ApproxPair, SubsetVector};
use covmat::bench::{
    export_csv, generate_system, run_benchmark, Algorithm, BenchRecord, GenSpec, SubsetRule,
};
use covmat::bitmatrix::set_parallel_kernels;
use covmat::characteristic::CharKind;
use covmat::incremental::{apply_edits, Edit};
use covmat::model::{self, parse_covering, Covering, CoveringSystem, Parsed, Universe};
use covmat::reduct::{find_reducts, recheck_after_add, ReductReport, DEFAULT_BOUND};

#[derive(Parser)]
#[command(
    name = "covmat",
    version,
    about = "Covering-based rough set approximations via characteristic matrices"
)]
struct Cli {
    /// Print results as JSON.
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads for matrix kernels (1 = serial).
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    threads: u16,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a system document against the covering rules.
    Validate {
        #[arg(long)]
        system: PathBuf,
    },
    /// Lower and upper approximations of a set.
    Approx(ApproxArgs),
    /// Add and remove coverings incrementally, then approximate.
    Update(UpdateArgs),
    /// Enumerate type-1 or type-2 reducts of a decision system.
    Reduct(ReductArgs),
    /// Generate a random covering system.
    Gen(GenArgs),
    /// Time NIS / IS / NIX / IX on a generated system.
    Bench(BenchArgs),
    /// Re-emit a system as canonical JSON or as a matrix dump.
    Convert {
        #[arg(long)]
        system: PathBuf,
        #[arg(long, value_enum, default_value_t = ConvertTo::Json)]
        to: ConvertTo,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Op {
    Second,
    Sixth,
}

impl From<Op> for ApproxKind {
    fn from(op: Op) -> Self {
        match op {
            Op::Second => ApproxKind::Second,
            Op::Sixth => ApproxKind::Sixth,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Type1,
    Type2,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConvertTo {
    Json,
    Matrix,
    Gamma,
    Pi,
}

#[derive(Args)]
struct ApproxArgs {
    #[arg(long)]
    system: PathBuf,
    /// Comma-separated object labels.
    #[arg(long)]
    set: String,
    #[arg(long, value_enum)]
    op: Op,
    /// Print Γ(𝒟) before the result.
    #[arg(long)]
    dump_gamma: bool,
    /// Print Π(𝒟) before the result.
    #[arg(long)]
    dump_pi: bool,
    /// Print M_𝒟 before the result.
    #[arg(long)]
    dump_matrix: bool,
}

#[derive(Args)]
struct UpdateArgs {
    #[arg(long)]
    system: PathBuf,
    /// Covering document to add (repeatable).
    #[arg(long)]
    add: Vec<PathBuf>,
    /// Name of a covering to remove (repeatable).
    #[arg(long)]
    remove: Vec<String>,
    #[arg(long)]
    set: String,
    #[arg(long, value_enum)]
    op: Op,
}

#[derive(Args)]
struct ReductArgs {
    #[arg(long)]
    system: PathBuf,
    #[arg(long, value_enum)]
    kind: Kind,
    /// Covering document appended to the conditional coverings.
    #[arg(long)]
    add: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_BOUND)]
    bound: usize,
}

#[derive(Args)]
struct SpecArgs {
    /// Generator spec as JSON (`n`, `m`, `seed`, optional
    /// `blocks_per_covering`, `extra_membership_prob`).
    #[arg(long, conflicts_with_all = ["n", "m", "blocks", "prob", "seed"])]
    spec: Option<PathBuf>,
    #[arg(long, default_value_t = 2000)]
    n: usize,
    #[arg(long, default_value_t = 100)]
    m: usize,
    #[arg(long, default_value_t = 5)]
    blocks: usize,
    #[arg(long, default_value_t = 0.1)]
    prob: f64,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    spec: SpecArgs,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    spec: SpecArgs,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..))]
    reps: u32,
    /// Write per-run timings and summaries here.
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn test_mode() -> bool {
    std::env::var("COVMAT_TEST").is_ok_and(|v| v == "1")
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load(path: &Path) -> Result<Parsed> {
    model::parse(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn conditional(parsed: Parsed) -> CoveringSystem {
    match parsed {
        Parsed::Covering(s) => s,
        Parsed::Decision(d) => d.conditional().clone(),
    }
}

fn load_valid_system(path: &Path) -> Result<CoveringSystem> {
    let s = conditional(load(path)?);
    if let Err(violations) = s.validate() {
        bail!(
            "{}: {}",
            path.display(),
            violations[0].describe(s.universe())
        );
    }
    Ok(s)
}

fn load_covering(path: &Path, n: usize) -> Result<Covering> {
    let c =
        parse_covering(&read(path)?, n).with_context(|| format!("parsing {}", path.display()))?;
    if !c.covers(n) {
        bail!(
            "{}: covering {:?} is not a covering of the {n}-object universe",
            path.display(),
            c.name()
        );
    }
    Ok(c)
}

fn labels(universe: &Universe, x: &SubsetVector) -> Vec<String> {
    x.labels(universe).into_iter().map(str::to_string).collect()
}

fn print_pair(out: &mut impl Write, universe: &Universe, pair: &ApproxPair) -> io::Result<()> {
    writeln!(out, "lower: {}", labels(universe, &pair.lower).join(","))?;
    writeln!(out, "upper: {}", labels(universe, &pair.upper).join(","))
}

fn pair_json(universe: &Universe, set: &SubsetVector, pair: &ApproxPair) -> serde_json::Value {
    json!({
        "op": pair.kind,
        "set": labels(universe, set),
        "lower": labels(universe, &pair.lower),
        "upper": labels(universe, &pair.upper),
    })
}

fn cmd_validate(cli: &Cli, path: &Path, out: &mut impl Write) -> Result<ExitCode> {
    let parsed = load(path)?;
    let (universe, result, coverings) = match &parsed {
        Parsed::Covering(s) => (s.universe(), s.validate(), s.coverings().len()),
        Parsed::Decision(d) => (
            d.universe(),
            d.validate(),
            d.conditional().coverings().len() + d.decision().len(),
        ),
    };
    let violations: Vec<String> = result
        .err()
        .unwrap_or_default()
        .iter()
        .map(|v| v.describe(universe))
        .collect();
    if cli.json {
        writeln!(
            out,
            "{}",
            json!({"valid": violations.is_empty(), "violations": violations})
        )?;
    } else if violations.is_empty() {
        writeln!(
            out,
            "ok: {} objects, {} coverings",
            universe.len(),
            coverings
        )?;
    } else {
        for v in &violations {
            writeln!(out, "{v}")?;
        }
    }
    Ok(if violations.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_approx(cli: &Cli, a: &ApproxArgs, out: &mut impl Write) -> Result<ExitCode> {
    let s = load_valid_system(&a.system)?;
    let x = SubsetVector::from_indices(s.n(), &s.universe().resolve_list(&a.set)?);
    if a.dump_matrix {
        write!(out, "{}", s.matrix().to_dump())?;
    }
    if a.dump_gamma {
        write!(out, "{}", s.gamma().matrix().to_dump())?;
    }
    if a.dump_pi {
        write!(out, "{}", s.pi().matrix().to_dump())?;
    }
    let kind: ApproxKind = a.op.into();
    let m = match kind {
        ApproxKind::Second => s.gamma(),
        ApproxKind::Sixth => s.pi(),
    };
    let pair = approx(m, &x, kind)?;
    if cli.json {
        writeln!(out, "{}", pair_json(s.universe(), &x, &pair))?;
    } else {
        print_pair(out, s.universe(), &pair)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_update(a: &UpdateArgs, out: &mut impl Write) -> Result<ExitCode> {
    let s = load_valid_system(&a.system)?;
    let mut edits = Vec::new();
    for path in &a.add {
        edits.push(Edit::Add(load_covering(path, s.n())?));
    }
    edits.extend(a.remove.iter().cloned().map(Edit::Remove));
    let x = SubsetVector::from_indices(s.n(), &s.universe().resolve_list(&a.set)?);
    let outcome = apply_edits(&s, &edits)?;
    let kind: ApproxKind = a.op.into();
    let m = match kind {
        ApproxKind::Second => &outcome.gamma,
        ApproxKind::Sixth => &outcome.pi,
    };
    let pair = approx(m, &x, kind)?;
    let mut doc = pair_json(s.universe(), &x, &pair);
    doc["coverings"] = json!(outcome
        .system
        .coverings()
        .iter()
        .map(Covering::name)
        .collect::<Vec<_>>());
    doc["audit"] = json!(outcome.audits);
    writeln!(out, "{doc}")?;
    Ok(ExitCode::SUCCESS)
}

fn print_reducts(cli: &Cli, r: &ReductReport, out: &mut impl Write) -> io::Result<()> {
    if cli.json {
        let kind = match r.kind {
            CharKind::Type1 => "type1",
            CharKind::Type2 => "type2",
        };
        writeln!(
            out,
            "{}",
            json!({
                "kind": kind,
                "coverings": r.coverings,
                "reducts": r.reducts,
                "tested": r.tested,
                "reused": r.reused,
            })
        )
    } else {
        for reduct in &r.reducts {
            writeln!(out, "{}", reduct.join(","))?;
        }
        writeln!(out, "tested={} reducts={}", r.tested, r.reducts.len())
    }
}

fn cmd_reduct(cli: &Cli, a: &ReductArgs, out: &mut impl Write) -> Result<ExitCode> {
    let d = load(&a.system)?.into_decision()?;
    if let Err(violations) = d.validate() {
        bail!(
            "{}: {}",
            a.system.display(),
            violations[0].describe(d.universe())
        );
    }
    let kind = match a.kind {
        Kind::Type1 => CharKind::Type1,
        Kind::Type2 => CharKind::Type2,
    };
    let mut report = find_reducts(&d, kind, a.bound)?;
    if let Some(path) = &a.add {
        let c = load_covering(path, d.n())?;
        report = recheck_after_add(&d, &report, &c, a.bound)?;
    }
    print_reducts(cli, &report, out)?;
    Ok(ExitCode::SUCCESS)
}

fn resolve_spec(a: &SpecArgs) -> Result<GenSpec, UsageError> {
    if let Some(path) = &a.spec {
        let text = fs::read_to_string(path)
            .map_err(|e| UsageError(format!("reading {}: {e}", path.display())))?;
        return serde_json::from_str(&text)
            .map_err(|e| UsageError(format!("parsing {}: {e}", path.display())));
    }
    let seed = match a.seed {
        Some(seed) => seed,
        None if test_mode() => {
            return Err(UsageError("--seed is required when COVMAT_TEST=1".into()))
        }
        None => rand::random(),
    };
    Ok(GenSpec {
        n: a.n,
        m: a.m,
        blocks_per_covering: a.blocks,
        extra_membership_prob: a.prob,
        seed,
    })
}

fn cmd_gen(a: &GenArgs, spec: &GenSpec, out: &mut impl Write) -> Result<ExitCode> {
    let s = generate_system(spec)?;
    let text = model::serialize(&Parsed::Covering(s));
    match &a.out {
        Some(path) => {
            fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?
        }
        None => writeln!(out, "{text}")?,
    }
    Ok(ExitCode::SUCCESS)
}

fn mean_of(records: &[BenchRecord], a: Algorithm) -> f64 {
    records
        .iter()
        .find(|r| r.algorithm == a)
        .map_or(f64::NAN, |r| r.mean)
}

fn cmd_bench(cli: &Cli, a: &BenchArgs, spec: &GenSpec, out: &mut impl Write) -> Result<ExitCode> {
    let records = run_benchmark(spec, a.reps as usize, &SubsetRule::RandomHalf)?;
    if let Some(path) = &a.csv {
        let file =
            fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
        export_csv(&records, file)?;
    }
    if cli.json {
        writeln!(out, "{}", json!({"seed": spec.seed, "records": records}))?;
        return Ok(ExitCode::SUCCESS);
    }
    writeln!(
        out,
        "seed={} n={} m={} blocks={} prob={}",
        spec.seed, spec.n, spec.m, spec.blocks_per_covering, spec.extra_membership_prob
    )?;
    for r in &records {
        writeln!(
            out,
            "{:<4} reps={} mean={:.6e}s variance={:.6e}s² threads={}",
            r.algorithm.to_string(),
            r.repetitions,
            r.mean,
            r.variance,
            r.threads
        )?;
    }
    writeln!(
        out,
        "speedup IS/NIS={:.1}x IX/NIX={:.1}x",
        mean_of(&records, Algorithm::Nis) / mean_of(&records, Algorithm::Is),
        mean_of(&records, Algorithm::Nix) / mean_of(&records, Algorithm::Ix)
    )?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_convert(path: &Path, to: ConvertTo, out: &mut impl Write) -> Result<ExitCode> {
    let parsed = load(path)?;
    match to {
        ConvertTo::Json => writeln!(out, "{}", model::serialize(&parsed))?,
        ConvertTo::Matrix => write!(out, "{}", conditional(parsed).matrix().to_dump())?,
        ConvertTo::Gamma => write!(out, "{}", conditional(parsed).gamma().matrix().to_dump())?,
        ConvertTo::Pi => write!(out, "{}", conditional(parsed).pi().matrix().to_dump())?,
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Debug)]
struct UsageError(String);

fn run(cli: &Cli, out: &mut impl Write) -> Result<ExitCode> {
    match &cli.command {
        Command::Validate { system } => cmd_validate(cli, system, out),
        Command::Approx(a) => cmd_approx(cli, a, out),
        Command::Update(a) => cmd_update(a, out),
        Command::Reduct(a) => cmd_reduct(cli, a, out),
        Command::Gen(a) => match resolve_spec(&a.spec) {
            Ok(spec) => cmd_gen(a, &spec, out),
            Err(e) => usage(&e.0),
        },
        Command::Bench(a) => match resolve_spec(&a.spec) {
            Ok(spec) => cmd_bench(cli, a, &spec, out),
            Err(e) => usage(&e.0),
        },
        Command::Convert { system, to } => cmd_convert(system, *to, out),
    }
}

fn usage(msg: &str) -> Result<ExitCode> {
    eprintln!("error: {msg}");
    Ok(ExitCode::from(2))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 1 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads.into())
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
        set_parallel_kernels(true);
    }
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match run(&cli, &mut out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
