use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use gammoid_core::canonical::{canonical_key, CanonicalKey};
use gammoid_core::engine::{self, EngineConfig, EngineError, Trace};
use gammoid_core::extension::{
    extensions_up_to_iso, greedy_deflate, minimal_deflate, modular_cuts, DEFAULT_FLAT_CAP,
};
use gammoid_core::format::{parse_matroid, resolve_element, write_matroid};
use gammoid_core::invariants::{
    alpha, alpha_non_negative, strongly_base_orderable, AlphaTable, SboVerdict,
};
use gammoid_core::minors::{has_minor_isomorphic_to, mk4, u24};
use gammoid_core::oracle::{gamma, parse_representation};
use gammoid_core::tableau::{
    is_valid, seed_tableau, AuditBudget, Decision, EntryStatus, Tableau, Verdict, Witness,
};
use gammoid_core::{kb, ElementSet, Matroid};

const EXIT_GAMMOID: u8 = 0;
const EXIT_NOT_GAMMOID: u8 = 1;
const EXIT_EXHAUSTED: u8 = 2;
const EXIT_USAGE: u8 = 64;
const EXIT_INPUT: u8 = 65;
const EXIT_INTERNAL: u8 = 70;

#[derive(Parser)]
#[command(
    name = "gammoid",
    version,
    about = "Decide whether a matroid is a gammoid"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the decision procedure on a matroid file.
    Decide(DecideArgs),
    /// Evaluate the alpha invariant.
    Alpha {
        file: PathBuf,
        /// Elements of the subset, or `E` for the whole ground set.
        #[arg(long, num_args = 0..)]
        subset: Option<Vec<String>>,
    },
    /// Test strong base-orderability.
    Sbo { file: PathBuf },
    /// Search for a minor isomorphic to a pattern.
    MinorCheck {
        file: PathBuf,
        /// `U24`, `MK4`, or a matroid file.
        #[arg(long)]
        pattern: String,
    },
    /// Find a deflate with the fewest elements.
    Deflate {
        file: PathBuf,
        /// Remove elements greedily instead of searching all removal orders.
        #[arg(long)]
        greedy: bool,
    },
    /// List the modular cuts by their minimal flats.
    Cuts { file: PathBuf },
    /// Enumerate extensions up to isomorphism.
    Extensions {
        file: PathBuf,
        #[arg(long)]
        size: usize,
        #[arg(long)]
        count_only: bool,
    },
    /// Gammoids given by digraphs.
    #[command(subcommand)]
    Oracle(OracleCommand),
    /// Knowledge-base files.
    #[command(subcommand)]
    Kb(KbCommand),
    /// Check a matroid file, or audit a knowledge base.
    Validate { file: PathBuf },
}

#[derive(Args)]
struct DecideArgs {
    file: PathBuf,
    /// Knowledge base joined into the initial tableau.
    #[arg(long)]
    kb: Option<PathBuf>,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    workers: u32,
    /// Extension classes added per visit of the exhaustion step.
    #[arg(long, default_value_t = 8)]
    batch: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    max_iterations: usize,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Largest extension the exhaustion step may build.
    #[arg(long)]
    max_extension_size: Option<usize>,
    /// Write the step trace to this file.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write the final (or partial) tableau as a knowledge base.
    #[arg(long)]
    export_kb: Option<PathBuf>,
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Print the gammoid of a digraph file as a matroid file.
    Gamma { file: PathBuf },
}

#[derive(Subcommand)]
enum KbCommand {
    /// Write the seed tableau of a matroid as a knowledge base.
    Export {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Read a knowledge base, optionally joining it into another one.
    Import {
        file: PathBuf,
        /// Knowledge base that receives the join; its goal is kept.
        #[arg(long)]
        into: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Malformed or unreadable input; exit code 65.
#[derive(Debug)]
struct InputError(anyhow::Error);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#}", self.0)
    }
}

impl std::error::Error for InputError {}

fn input<T>(r: std::result::Result<T, impl Into<anyhow::Error>>, path: &Path) -> Result<T> {
    r.map_err(|e| {
        let e: anyhow::Error = e.into();
        InputError(e.context(path.display().to_string())).into()
    })
}

fn read(path: &Path) -> Result<String> {
    input(fs::read_to_string(path), path)
}

fn load_matroid(path: &Path) -> Result<Matroid> {
    let text = read(path)?;
    input(parse_matroid(&text), path)
}

fn load_kb(path: &Path) -> Result<Tableau> {
    let text = read(path)?;
    input(kb::import(&text), path)
}

fn write_out(out: &mut String, path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            out.push_str(text);
            Ok(())
        }
    }
}

/// Appends one line to the command's output buffer.
macro_rules! say {
    ($out:expr, $($arg:tt)*) => {
        writeln!($out, $($arg)*).expect("writing to a String")
    };
}

/// Writes the buffered output; a closed pipe is not an error.
fn flush(text: &str) {
    use std::io::Write as _;
    let mut stdout = std::io::stdout().lock();
    let _ = stdout
        .write_all(text.as_bytes())
        .and_then(|()| stdout.flush());
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let mut out = String::new();
    let result = run(cli.command, &mut out);
    flush(&out);
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = if e.downcast_ref::<InputError>().is_some() {
                EXIT_INPUT
            } else {
                EXIT_INTERNAL
            };
            ExitCode::from(code)
        }
    }
}

fn run(cmd: Command, out: &mut String) -> Result<u8> {
    match cmd {
        Command::Decide(args) => decide(out, args),
        Command::Alpha { file, subset } => alpha_cmd(out, &file, subset),
        Command::Sbo { file } => sbo(out, &file),
        Command::MinorCheck { file, pattern } => minor_check(out, &file, &pattern),
        Command::Deflate { file, greedy } => deflate(out, &file, greedy),
        Command::Cuts { file } => cuts(out, &file),
        Command::Extensions {
            file,
            size,
            count_only,
        } => extensions(out, &file, size, count_only),
        Command::Oracle(OracleCommand::Gamma { file }) => {
            let rep = input(parse_representation(&read(&file)?), &file)?;
            out.push_str(&write_matroid(&gamma(&rep)?));
            Ok(0)
        }
        Command::Kb(KbCommand::Export { file, out: dest }) => {
            let t = seed_tableau(&load_matroid(&file)?)?;
            write_out(out, dest.as_deref(), &kb::export(&t))?;
            Ok(0)
        }
        Command::Kb(KbCommand::Import {
            file,
            into,
            out: dest,
        }) => kb_import(out, &file, into.as_deref(), dest.as_deref()),
        Command::Validate { file } => validate(out, &file),
    }
}

/// Names the well-known excluded matroids; describes anything else by size.
fn describe(k: &CanonicalKey) -> String {
    let named = [(mk4(), "M(K4)"), (u24(), "U(2,4)")];
    for (m, name) in named {
        if canonical_key(&m).as_ref() == Ok(k) {
            return name.to_owned();
        }
    }
    format!("a {}-element rank-{} matroid", k.size(), k.rank())
}

fn verdict_line(goal: &Matroid, t: &Tableau, v: &Verdict) -> String {
    match &v.witness {
        Witness::Gammoid { member } => {
            let cert = t
                .certificate(gammoid_core::tableau::Family::Gammoids, member)
                .map(|c| c.to_string())
                .unwrap_or_default();
            format!(
                "GAMMOID: equivalent to {} in the gammoid family (certificate {cert})",
                describe(member)
            )
        }
        Witness::ExcludedMinor { excluded, spec } => format!(
            "NOT A GAMMOID: excluded minor {} via contract {} delete {}",
            describe(excluded),
            goal.show(spec.contract),
            goal.show(spec.delete)
        ),
        Witness::Exhaustion { size, classes } => format!(
            "NOT A GAMMOID: all {classes} extension classes with {size} elements are intermediates"
        ),
    }
}

fn trace_text(trace: &Trace) -> String {
    let mut out = String::new();
    for s in &trace.steps {
        if s.worker > 0 {
            write!(out, "[worker {}] ", s.worker).unwrap();
        }
        writeln!(out, "{s}").unwrap();
    }
    out
}

fn summary_lines(t: &Tableau, trace: &Trace) -> String {
    let s = t.summary();
    format!(
        "tableau: {} gammoids, {} intermediates, {} excluded, {} classes\ntrace: {} steps, {} identifications\n",
        s.gammoids.len(),
        s.intermediates.len(),
        s.excluded.len(),
        s.partition.len(),
        trace.steps.len(),
        trace.identifications().count()
    )
}

fn decide(out: &mut String, args: DecideArgs) -> Result<u8> {
    let goal = load_matroid(&args.file)?;
    let kb = args.kb.as_deref().map(load_kb).transpose()?;
    let mut cfg = EngineConfig {
        workers: args.workers as usize,
        batch: args.batch,
        seed: args.seed,
        max_iterations: args.max_iterations,
        time_limit: args.time_limit.map(Duration::from_secs_f64),
        ..EngineConfig::default()
    };
    if let Some(size) = args.max_extension_size {
        cfg.max_extension_size = size.min(cfg.max_extension_size);
    }
    let (code, trace, t, headline) = match engine::decide(&goal, &cfg, kb.as_ref()) {
        Ok((v, trace, t)) => {
            let code = match v.decision {
                Decision::Gammoid => EXIT_GAMMOID,
                Decision::NotGammoid => EXIT_NOT_GAMMOID,
            };
            let line = verdict_line(&goal, &t, &v);
            (code, trace, t, line)
        }
        Err(EngineError::ResourceExhausted {
            reason,
            partial,
            trace,
        }) => (
            EXIT_EXHAUSTED,
            trace,
            *partial,
            format!("RESOURCE EXHAUSTED: {reason}"),
        ),
        Err(EngineError::Core(e)) => return Err(e.into()),
    };
    say!(out, "{headline}");
    out.push_str(&summary_lines(&t, &trace));
    if let Some(p) = &args.trace {
        fs::write(p, trace_text(&trace)).with_context(|| format!("writing {}", p.display()))?;
    }
    if let Some(p) = &args.export_kb {
        fs::write(p, kb::export(&t)).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(code)
}

fn parse_subset(m: &Matroid, tokens: &[String], path: &Path) -> Result<ElementSet> {
    if tokens.len() == 1 && tokens[0] == "E" {
        return Ok(m.ground());
    }
    let mut x = ElementSet::EMPTY;
    for t in tokens {
        let e = input(
            resolve_element(t, m.size(), m.labels()).map_err(|e| anyhow!(e)),
            path,
        )?;
        x = x.with(e);
    }
    Ok(x)
}

fn alpha_cmd(out: &mut String, file: &Path, subset: Option<Vec<String>>) -> Result<u8> {
    let m = load_matroid(file)?;
    if let Some(tokens) = subset {
        let x = parse_subset(&m, &tokens, file)?;
        say!(out, "{}", alpha(&m, x));
        return Ok(0);
    }
    let table = AlphaTable::new(&m);
    say!(out, "flat\trank\talpha");
    for &(f, a) in table.flat_values() {
        say!(out, "{}\t{}\t{a}", m.show(f), m.rank_of(f));
    }
    say!(out, "alpha(E) = {}", table.get(m.ground()));
    match alpha_non_negative(&m) {
        None => say!(out, "strict gammoid: yes"),
        Some(x) => say!(
            out,
            "strict gammoid: no, alpha{} = {}",
            m.show(x),
            alpha(&m, x)
        ),
    }
    Ok(0)
}

fn sbo(out: &mut String, file: &Path) -> Result<u8> {
    let m = load_matroid(file)?;
    let w = strongly_base_orderable(&m);
    let (b1, b2) = w.basis_pair;
    let pairs = |phi: &[(usize, usize)]| {
        phi.iter()
            .map(|&(a, b)| format!("{}->{}", m.label(a), m.label(b)))
            .collect::<Vec<_>>()
            .join(" ")
    };
    match w.verdict {
        SboVerdict::Orderable => {
            say!(out, "STRONGLY BASE-ORDERABLE");
            if let Some(phi) = &w.bijection {
                say!(
                    out,
                    "example pair {} {}: {}",
                    m.show(b1),
                    m.show(b2),
                    pairs(phi)
                );
            }
        }
        SboVerdict::NotOrderable => {
            say!(
                out,
                "NOT STRONGLY BASE-ORDERABLE: bases {} and {}",
                m.show(b1),
                m.show(b2)
            );
            for (phi, x) in &w.failing_subsets {
                say!(out, "  {} fails on {}", pairs(phi), m.show(*x));
            }
        }
    }
    Ok(0)
}

fn minor_check(out: &mut String, file: &Path, pattern: &str) -> Result<u8> {
    let m = load_matroid(file)?;
    let (name, p) = match pattern {
        "U24" => ("U(2,4)".to_owned(), u24()),
        "MK4" => ("M(K4)".to_owned(), mk4()),
        path => (path.to_owned(), load_matroid(Path::new(path))?),
    };
    match has_minor_isomorphic_to(&m, &p)? {
        Some(spec) => say!(
            out,
            "MINOR {name}: contract {} delete {}",
            m.show(spec.contract),
            m.show(spec.delete)
        ),
        None => say!(out, "NO MINOR {name}"),
    }
    Ok(0)
}

fn deflate(out: &mut String, file: &Path, greedy: bool) -> Result<u8> {
    let m = load_matroid(file)?;
    let (n, cert) = if greedy {
        greedy_deflate(&m)
    } else {
        minimal_deflate(&m)
    };
    if cert.is_trivial() {
        say!(out, "DEFLATED: no element can be removed");
        return Ok(0);
    }
    say!(
        out,
        "deflate on {} ({} elements)",
        m.show(cert.kept),
        n.size()
    );
    for (e, f) in cert.removal_order.iter().zip(&cert.minimal_flats) {
        say!(
            out,
            "  re-add {} with minimal flat {}",
            m.label(*e),
            m.show(*f)
        );
    }
    out.push_str(&write_matroid(&n));
    Ok(0)
}

fn cuts(out: &mut String, file: &Path) -> Result<u8> {
    let m = load_matroid(file)?;
    let all = modular_cuts(&m, DEFAULT_FLAT_CAP)?;
    say!(out, "{} modular cuts", all.len());
    for cut in &all {
        let names: Vec<String> = cut.minimal_flats.iter().map(|&f| m.show(f)).collect();
        say!(out, "[{}]", names.join(" "));
    }
    Ok(0)
}

fn extensions(out: &mut String, file: &Path, size: usize, count_only: bool) -> Result<u8> {
    let m = load_matroid(file)?;
    if size < m.size() {
        bail!(InputError(anyhow!(
            "--size {size} is below the ground-set size {}",
            m.size()
        )));
    }
    let mut count = 0usize;
    for ext in extensions_up_to_iso(&m, size) {
        let ext = ext?;
        count += 1;
        if !count_only {
            say!(out, "# extension {count}");
            out.push_str(&write_matroid(&ext));
        }
    }
    say!(out, "{count} extension classes with {size} elements");
    Ok(0)
}

fn kb_import(
    out: &mut String,
    file: &Path,
    into: Option<&Path>,
    dest: Option<&Path>,
) -> Result<u8> {
    let incoming = load_kb(file)?;
    let t = match into {
        Some(p) => gammoid_core::tableau::join(&[&load_kb(p)?, &incoming])?,
        None => incoming,
    };
    if let Some(p) = dest {
        fs::write(p, kb::export(&t)).with_context(|| format!("writing {}", p.display()))?;
    }
    let s = t.summary();
    say!(
        out,
        "imported: {} gammoids, {} intermediates, {} excluded, {} classes, {} log records",
        s.gammoids.len(),
        s.intermediates.len(),
        s.excluded.len(),
        s.partition.len(),
        t.log().len()
    );
    Ok(0)
}

fn validate(out: &mut String, file: &Path) -> Result<u8> {
    let text = read(file)?;
    if text.starts_with(kb::HEADER) {
        let t = input(kb::import(&text), file)?;
        let report = is_valid(&t, AuditBudget::default());
        for (fam, k, status) in &report.entries {
            let line = match status {
                EntryStatus::Verified => continue,
                EntryStatus::Unverified(why) => format!("unverified {} {k}: {why}", fam.tag()),
                EntryStatus::Failed(why) => format!("FAILED {} {k}: {why}", fam.tag()),
            };
            say!(out, "{line}");
        }
        for class in &report.conflicts {
            say!(
                out,
                "CONFLICT class of {} members mixes G and X",
                class.len()
            );
        }
        say!(out, "{} open classes", report.open_classes.len());
        if report.passed() {
            say!(out, "VALID");
            Ok(0)
        } else {
            say!(out, "INVALID");
            Ok(1)
        }
    } else {
        let m = load_matroid(file)?;
        say!(
            out,
            "VALID matroid: {} elements, rank {}, {} bases",
            m.size(),
            m.rank(),
            m.bases().len()
        );
        Ok(0)
    }
}
