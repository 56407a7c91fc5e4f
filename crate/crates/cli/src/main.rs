use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use nestrec::arith::{a_closed, h0_closed, h_closed, FamilyParams};
use nestrec::engines::{AffineRule, Engine, SeqTable};
use nestrec::explore::{
    check_recurrence, classify, gen_k_appearance, gen_variant, gen_zero_indexed, VariantOutcome,
    VariantSpec,
};
use nestrec::oeis::{
    check_correspondence, default_cache_dir, fetch_bfile, parse_bfile, registry, Correspondence,
    FetchConfig, OeisError, Quantity, Transform,
};
use nestrec::sums::{check_sums_m2, partial_sums};
use nestrec::verify::{run_checks, CheckKind, HSource};

mod output;

use output::{Format, Sink};

const EXIT_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(name = "nestrec", version, about = "Generate and verify the nested recurrence a(n+1) = n - a^(m)(n) + a^(m+1)(n)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit a(1..N), or a(0..N) with --zero-indexed.
    Seq(SeqArgs),
    /// Emit h(1..N) from the closed form.
    H(HArgs),
    /// Run verification sweeps; exit 0 iff every check passes.
    Verify(VerifyArgs),
    /// Partial sums A_m(1..N).
    Sums(SumsArgs),
    /// OEIS b-file checks.
    Oeis {
        #[command(subcommand)]
        command: OeisCommand,
    },
    /// Build a variant and classify it.
    Explore(ExploreArgs),
    /// Wall-clock time per engine.
    Bench(BenchArgs),
}

#[derive(Args)]
struct Common {
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    m: u32,
}

#[derive(Args)]
struct OutArgs {
    #[arg(long, value_enum, default_value_t = Format::Plain)]
    format: Format,
    /// Write to a file instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Nested,
    Increment,
    Closed,
}

impl From<EngineArg> for Engine {
    fn from(e: EngineArg) -> Self {
        match e {
            EngineArg::Nested => Engine::Nested,
            EngineArg::Increment => Engine::Increment,
            EngineArg::Closed => Engine::ClosedForm,
        }
    }
}

#[derive(Args)]
struct SeqArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    #[arg(long, value_enum, default_value_t = EngineArg::Closed)]
    engine: EngineArg,
    #[arg(long)]
    zero_indexed: bool,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct HArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum HSourceArg {
    Closed,
    Table,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    max_n: u64,
    /// Comma-separated subset of growth,identity,p1,p2,frequency,cross.
    #[arg(long, value_delimiter = ',', default_value = "growth,identity,p1,p2,frequency,cross")]
    checks: Vec<String>,
    /// Worker threads for the partitioned sweeps.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    jobs: Option<u64>,
    /// Where the checks read h from.
    #[arg(long, value_enum, default_value_t = HSourceArg::Closed)]
    h_source: HSourceArg,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum Oracle {
    Lattice,
}

#[derive(Args)]
struct SumsArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    /// Cross-check against the lattice-point count (m = 2 only).
    #[arg(long, value_enum)]
    oracle: Option<Oracle>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Subcommand)]
enum OeisCommand {
    /// Compare one registered correspondence with a b-file.
    Check(OeisCheckArgs),
    /// List the registered correspondences.
    List,
}

#[derive(Clone, Copy, ValueEnum)]
enum QuantityArg {
    A,
    H,
    Sums,
}

impl From<QuantityArg> for Quantity {
    fn from(q: QuantityArg) -> Self {
        match q {
            QuantityArg::A => Quantity::A,
            QuantityArg::H => Quantity::H,
            QuantityArg::Sums => Quantity::PartialSum,
        }
    }
}

#[derive(Args)]
struct OeisCheckArgs {
    #[arg(long)]
    id: String,
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    quantity: QuantityArg,
    /// Read the b-file from disk.
    #[arg(long, conflicts_with = "fetch")]
    bfile: Option<PathBuf>,
    /// Allow downloading the b-file when it is not cached.
    #[arg(long)]
    fetch: bool,
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Compare n = 1..=N.
    #[arg(long, default_value_t = 10_000)]
    n_max: u64,
    /// Needed, with --value-shift, for an (id, m, quantity) outside the registry.
    #[arg(long, allow_hyphen_values = true, requires = "value_shift")]
    index_shift: Option<i64>,
    #[arg(long, allow_hyphen_values = true, requires = "index_shift")]
    value_shift: Option<i64>,
    #[arg(long, value_enum, default_value_t = Format::Plain)]
    format: Format,
}

#[derive(Args)]
struct ExploreArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    /// Initial value a(start-index); defaults to 1 (start 1) or 0 (start 0).
    #[arg(long, allow_hyphen_values = true)]
    a1: Option<i64>,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(i64).range(0..=1))]
    start_index: i64,
    /// Run-length rule N_k = p*k + q, given as "p,q".
    #[arg(long, value_parser = parse_rule)]
    rule: Option<AffineRule>,
    #[arg(long, value_enum, default_value_t = Format::Plain)]
    format: Format,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
}

fn parse_rule(s: &str) -> Result<AffineRule, String> {
    let (p, q) = s.split_once(',').ok_or("expected p,q")?;
    let p: u64 = p.trim().parse().map_err(|e| format!("p: {e}"))?;
    let q: u64 = q.trim().parse().map_err(|e| format!("q: {e}"))?;
    if q < 1 {
        return Err("q must be at least 1".into());
    }
    Ok(AffineRule { p, q })
}

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    err: anyhow::Error,
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, err: anyhow::anyhow!(msg.into()) }
}

fn io_err(err: impl Into<anyhow::Error>) -> Failure {
    Failure { code: EXIT_IO, err: err.into() }
}

type CmdResult = Result<bool, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAILED),
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Seq(a) => cmd_seq(a),
        Command::H(a) => cmd_h(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Sums(a) => cmd_sums(a),
        Command::Oeis { command: OeisCommand::Check(a) } => cmd_oeis_check(a),
        Command::Oeis { command: OeisCommand::List } => cmd_oeis_list(),
        Command::Explore(a) => cmd_explore(a),
        Command::Bench(a) => cmd_bench(a),
    }
}

fn params(c: &Common) -> FamilyParams {
    FamilyParams::new(c.m).expect("clap enforces m >= 1")
}

fn open_sink(out: &OutArgs) -> Result<Sink, Failure> {
    let w: Box<dyn Write> = match &out.out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("creating {}", path.display())).map_err(io_err)?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    Ok(Sink::new(w, out.format))
}

fn engine_failure(e: impl std::error::Error + Send + Sync + 'static) -> Failure {
    Failure { code: EXIT_FAILED, err: e.into() }
}

fn cmd_seq(a: SeqArgs) -> CmdResult {
    let p = params(&a.common);
    let engine: Engine = a.engine.into();
    let table: SeqTable = if a.zero_indexed {
        match engine {
            Engine::Nested => gen_zero_indexed(p, a.n).map_err(engine_failure)?,
            Engine::Increment => {
                gen_k_appearance(AffineRule::canonical(p), p.m(), 0, a.n).map_err(engine_failure)?
            }
            Engine::ClosedForm => {
                let values = (0..=a.n).map(|x| x as i64 - h0_closed(p, x) as i64).collect();
                SeqTable::new(p.m(), 0, values, nestrec::SeqKind::ZeroIndexed, Engine::ClosedForm)
            }
        }
    } else {
        engine.generate(p, a.n).map_err(engine_failure)?
    };
    let mut sink = open_sink(&a.out)?;
    sink.pairs("a", table.iter().map(|(n, v)| (n as i128, v as i128))).map_err(io_err)?;
    sink.finish().map_err(io_err)?;
    Ok(true)
}

fn cmd_h(a: HArgs) -> CmdResult {
    let p = params(&a.common);
    let mut sink = open_sink(&a.out)?;
    sink.pairs("h", (1..=a.n).map(|n| (n as i128, h_closed(p, n).unwrap() as i128)))
        .map_err(io_err)?;
    sink.finish().map_err(io_err)?;
    Ok(true)
}

fn with_jobs<T: Send>(jobs: Option<u64>, f: impl FnOnce() -> T + Send) -> Result<T, Failure> {
    match jobs {
        None => Ok(f()),
        Some(j) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(j as usize)
                .build()
                .map_err(|e| Failure { code: EXIT_IO, err: e.into() })?;
            Ok(pool.install(f))
        }
    }
}

fn cmd_verify(a: VerifyArgs) -> CmdResult {
    let p = params(&a.common);
    let mut checks = Vec::new();
    for name in &a.checks {
        let c = CheckKind::parse(name.trim())
            .ok_or_else(|| usage(format!("unknown check {name:?} (growth, identity, p1, p2, frequency, cross)")))?;
        if !checks.contains(&c) {
            checks.push(c);
        }
    }
    if a.jobs.is_some() {
        eprintln!("note: --jobs applies to the partitioned sweeps; the nested and increment builds run sequentially");
    }
    let source = match a.h_source {
        HSourceArg::Closed => HSource::Closed,
        HSourceArg::Table => HSource::Table,
    };
    let reports = with_jobs(a.jobs, || run_checks(p, a.max_n, &checks, source))?
        .map_err(engine_failure)?;
    let mut sink = open_sink(&a.out)?;
    for r in &reports {
        sink.report(r).map_err(io_err)?;
    }
    sink.finish().map_err(io_err)?;
    Ok(reports.iter().all(|r| r.passed))
}

fn cmd_sums(a: SumsArgs) -> CmdResult {
    let p = params(&a.common);
    if a.oracle.is_some() && p.m() != 2 {
        return Err(usage("--oracle lattice is only defined for --m 2"));
    }
    let table = Engine::Increment.generate(p, a.n).map_err(engine_failure)?;
    let sums = partial_sums(&table);
    let mut sink = open_sink(&a.out)?;
    sink.pairs("sum", sums.sums().iter().enumerate().map(|(i, &s)| (i as i128 + 1, s as i128)))
        .map_err(io_err)?;
    sink.finish().map_err(io_err)?;
    if a.oracle.is_some() {
        let r = check_sums_m2(a.n).map_err(engine_failure)?;
        eprintln!("{r}");
        return Ok(r.passed);
    }
    Ok(true)
}

fn resolve_correspondence(a: &OeisCheckArgs) -> Result<Correspondence, Failure> {
    let quantity: Quantity = a.quantity.into();
    if let (Some(index_shift), Some(value_shift)) = (a.index_shift, a.value_shift) {
        return Ok(Correspondence {
            oeis_id: a.id.clone(),
            m: a.common.m,
            quantity,
            transform: Transform { index_shift, value_shift },
        });
    }
    registry()
        .into_iter()
        .find(|c| c.oeis_id == a.id && c.m == a.common.m && c.quantity == quantity)
        .ok_or_else(|| {
            usage(format!(
                "no registered correspondence for {} with m={} quantity={:?}; pass --index-shift and --value-shift",
                a.id, a.common.m, quantity
            ))
        })
}

fn cmd_oeis_check(a: OeisCheckArgs) -> CmdResult {
    nestrec::oeis::validate_id(&a.id).map_err(|e| usage(e.to_string()))?;
    let corr = resolve_correspondence(&a)?;
    let bytes = match &a.bfile {
        Some(path) => std::fs::read(path)
            .with_context(|| format!("reading {}", path.display()))
            .map_err(io_err)?,
        None => {
            let dir = a.cache.clone().unwrap_or_else(default_cache_dir);
            let cfg = FetchConfig::from_env(dir, a.fetch);
            fetch_bfile(&a.id, &cfg).map_err(io_err)?
        }
    };
    let bfile = parse_bfile(&a.id, &bytes).map_err(io_err)?;
    let report = match check_correspondence(&corr, &bfile, a.n_max) {
        Ok(r) => r,
        Err(e @ OeisError::EmptyOverlap { .. }) => return Err(Failure { code: EXIT_FAILED, err: e.into() }),
        Err(e) => return Err(io_err(e)),
    };
    let mut sink = Sink::new(Box::new(io::stdout().lock()), a.format);
    sink.report(&report).map_err(io_err)?;
    sink.finish().map_err(io_err)?;
    Ok(report.passed)
}

fn cmd_oeis_list() -> CmdResult {
    let mut out = io::stdout().lock();
    for c in registry() {
        let q = match c.quantity {
            Quantity::A => "a",
            Quantity::H => "h",
            Quantity::PartialSum => "sums",
        };
        writeln!(
            out,
            "{} m={} quantity={} index_shift={} value_shift={}",
            c.oeis_id, c.m, q, c.transform.index_shift, c.transform.value_shift
        )
        .map_err(io_err)?;
    }
    Ok(true)
}

fn cmd_explore(a: ExploreArgs) -> CmdResult {
    let p = params(&a.common);
    let spec = VariantSpec {
        m: p.m(),
        initial_value: a.a1.unwrap_or(a.start_index),
        start_index: a.start_index,
        frequency_rule: a.rule,
    };
    let mut sink = Sink::new(Box::new(io::stdout().lock()), a.format);
    if spec.start_index == 0 {
        sink.note("zero-indexed build: n = 0 is a legal argument, so a(1) = 0 - a^(m)(0) + a^(m+1)(0)")
            .map_err(io_err)?;
    }
    match gen_variant(&spec, a.n).map_err(|e| usage(e.to_string()))? {
        VariantOutcome::Built(table) => {
            let c = classify(&table, &spec);
            let profile: Vec<String> =
                c.profile.counts.iter().take(12).map(|(v, k)| format!("{v}x{k}")).collect();
            sink.note(&format!(
                "built a({}..={}); n - a(n) runs: {}{}",
                table.start_index(),
                table.end_index(),
                profile.join(" "),
                if c.profile.counts.len() > 12 { " ..." } else { "" }
            ))
            .map_err(io_err)?;
            for r in c.to_reports(&spec, &table) {
                sink.report(&r).map_err(io_err)?;
            }
        }
        VariantOutcome::EscapedLow(e) | VariantOutcome::EscapedHigh(e) => {
            let dir = if e.is_low() { "escaped_low" } else { "escaped_high" };
            sink.note(&format!(
                "{dir}: computing a({}) the iterate after {} step(s) was {}, outside [{}, {}]",
                e.n + 1,
                e.step,
                e.value,
                e.lo,
                e.hi
            ))
            .map_err(io_err)?;
        }
    }
    if let Some(rule) = a.rule {
        let t = gen_k_appearance(rule, p.m(), spec.start_index, a.n).map_err(|e| usage(e.to_string()))?;
        let mut r = check_recurrence(&t, p.m());
        r.check_name = format!("explore.recurrence[{}k+{}]", rule.p, rule.q);
        sink.report(&r).map_err(io_err)?;
    }
    sink.finish().map_err(io_err)?;
    Ok(true)
}

fn cmd_bench(a: BenchArgs) -> CmdResult {
    let p = params(&a.common);
    let mut out = io::stdout().lock();
    for engine in Engine::ALL {
        let start = Instant::now();
        let table = engine.generate(p, a.n).map_err(engine_failure)?;
        let seconds = start.elapsed().as_secs_f64();
        let checksum: i128 = table.values().iter().map(|&v| v as i128).sum();
        let record = serde_json::json!({
            "engine": engine.name(),
            "m": p.m(),
            "n": a.n,
            "checksum": checksum,
            "timing": { "seconds": seconds },
        });
        writeln!(out, "{record}").map_err(io_err)?;
    }
    // closed form evaluated point-wise, without materializing a table
    let start = Instant::now();
    let mut checksum = 0i128;
    for n in 1..=a.n {
        checksum += a_closed(p, n).unwrap() as i128;
    }
    let record = serde_json::json!({
        "engine": "closed_pointwise",
        "m": p.m(),
        "n": a.n,
        "checksum": checksum,
        "timing": { "seconds": start.elapsed().as_secs_f64() },
    });
    writeln!(out, "{record}").map_err(io_err)?;
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_parsing() {
        assert_eq!(parse_rule("2,1"), Ok(AffineRule { p: 2, q: 1 }));
        assert_eq!(parse_rule(" 0 , 3 "), Ok(AffineRule { p: 0, q: 3 }));
        assert!(parse_rule("2,0").is_err());
        assert!(parse_rule("2").is_err());
        assert!(parse_rule("-1,1").is_err());
    }

    #[test]
    fn clap_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
