//! Command-line driver.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::baut::{analyze, Analysis, AnalysisOptions, AutSet, FormLabel, ObstructionReport};
use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::fixtures::{check_fixture, default_fixture_dir, fixture_path, validate_fixtures, Fixture, FixtureOutcome};
use crate::linalg::IntMatrix;
use crate::quadform::{standard_family, QuadFormClass, Sign};

/// Ranks from which a run needs explicit consent.
pub const LONG_RUN_RANK: usize = 6;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_TIMEOUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "baut", version, about = "Decide triviality of boundary automorphism sets of definite quadratic forms")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the full pipeline on a family member or a custom form.
    Run(RunArgs),
    /// Validate the shipped boundary-form fixtures.
    Fixtures {
        /// Directory holding h2.json .. h5.json.
        #[arg(long)]
        dir: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Genus of the standard family member.
    #[arg(long, conflicts_with = "matrix", required_unless_present = "matrix")]
    pub genus: Option<usize>,
    #[arg(long, default_value = "plus", requires = "genus")]
    pub sign: Sign,
    /// JSON file holding the representative as an array of integer rows.
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub max_seconds: Option<f64>,
    #[arg(long)]
    pub emit_json: Option<PathBuf>,
    /// Also write every group element to a sidecar JSON file.
    #[arg(long)]
    pub dump_groups: bool,
    /// Count double cosets of the image in the automorphism group.
    #[arg(long)]
    pub orbits: bool,
    /// Also validate the fixture for this genus.
    #[arg(long)]
    pub fixture_check: bool,
    /// Allow an unbounded run at rank 6 or more.
    #[arg(long)]
    pub confirm_long: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Source {
    Family { h: usize, sign: Sign },
    Custom(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub source: Source,
    pub threads: usize,
    pub max_seconds: Option<f64>,
    pub emit_json: Option<PathBuf>,
    pub dump_groups: bool,
    pub compute_orbits: bool,
    pub fixture_check: bool,
    pub confirm_long: bool,
}

impl RunConfig {
    pub fn from_args(args: RunArgs) -> Result<Self> {
        let source = match (args.genus, args.matrix) {
            (Some(h), None) => Source::Family { h, sign: args.sign },
            (None, Some(p)) => Source::Custom(p),
            _ => return Err(Error::InvalidArgument("exactly one of --genus and --matrix is required".into())),
        };
        let threads = match args.threads {
            Some(0) => return Err(Error::InvalidArgument("--threads must be at least 1".into())),
            Some(n) => n,
            None => std::thread::available_parallelism().map_or(1, |n| n.get()),
        };
        if let Some(s) = args.max_seconds {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidArgument("--max-seconds must be positive".into()));
            }
        }
        Ok(RunConfig {
            source,
            threads,
            max_seconds: args.max_seconds,
            emit_json: args.emit_json,
            dump_groups: args.dump_groups,
            compute_orbits: args.orbits,
            fixture_check: args.fixture_check,
            confirm_long: args.confirm_long,
        })
    }
}

/// Reads a JSON array of integer rows.
pub fn read_matrix_file(path: &Path) -> Result<IntMatrix> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    let rows: Vec<Vec<i64>> = serde_json::from_str(&text)
        .map_err(|e| Error::MalformedMatrix(format!("{}: expected an array of integer rows ({e})", path.display())))?;
    if rows.is_empty() || rows[0].is_empty() {
        return Err(Error::MalformedMatrix(format!("{}: empty matrix", path.display())));
    }
    if rows.iter().any(|r| r.len() != rows[0].len()) {
        return Err(Error::MalformedMatrix(format!("{}: rows have different lengths", path.display())));
    }
    if rows.len() != rows[0].len() {
        return Err(Error::NotSquare {
            rows: rows.len(),
            cols: rows[0].len(),
        });
    }
    IntMatrix::from_rows(&rows)
}

fn load_form(source: &Source) -> Result<QuadFormClass> {
    match source {
        Source::Family { h, sign } => standard_family(*h, *sign),
        Source::Custom(path) => QuadFormClass::new(read_matrix_file(path)?),
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_timeout() {
        EXIT_TIMEOUT
    } else {
        EXIT_INPUT
    }
}

/// Parses `argv` and runs; returns the process exit code.
pub fn main_with_args<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let result = match cli.command {
        Command::Run(args) => RunConfig::from_args(args).and_then(|cfg| run(&cfg, out, err)),
        Command::Fixtures { dir } => run_fixtures(&dir.unwrap_or_else(default_fixture_dir), out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn run_fixtures(dir: &Path, out: &mut dyn Write) -> Result<i32> {
    let outcomes = validate_fixtures(dir, &Budget::unlimited())?;
    for o in &outcomes {
        print_fixture(o, out)?;
    }
    Ok(if outcomes.iter().all(FixtureOutcome::passed) { EXIT_OK } else { EXIT_INPUT })
}

fn io(e: std::io::Error) -> Error {
    Error::Io {
        path: PathBuf::from("<stdout>"),
        source: e,
    }
}

fn print_fixture(o: &FixtureOutcome, out: &mut dyn Write) -> Result<()> {
    let verdict = if o.passed() { "PASS" } else { "FAIL" };
    writeln!(out, "fixture h={} {verdict}", o.genus).map_err(io)?;
    for c in &o.checks {
        let mark = if c.passed { "ok" } else { "FAILED" };
        writeln!(out, "  {:<10} {mark:<6} {}", c.name, c.detail).map_err(io)?;
    }
    Ok(())
}

/// Runs one configuration, printing a summary to `out` and notices to `err`.
pub fn run(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let f = load_form(&cfg.source)?;
    if f.rank() >= LONG_RUN_RANK {
        writeln!(
            err,
            "warning: rank {} runs are expensive in time and memory (minutes to hours)",
            f.rank()
        )
        .map_err(io)?;
        if !cfg.confirm_long && cfg.max_seconds.is_none() {
            return Err(Error::InvalidArgument(
                "rank 6 and above requires --confirm-long or --max-seconds".into(),
            ));
        }
    }
    if let Source::Family { sign: Sign::Minus, .. } = cfg.source {
        writeln!(err, "note: the minus sign is normalized to plus; both signs have the same boundary automorphism set")
            .map_err(io)?;
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start {} threads: {e}", cfg.threads)))?;
    let budget = Budget::from_seconds(cfg.max_seconds);
    let options = AnalysisOptions {
        compute_orbits: cfg.compute_orbits,
    };
    let analysis = pool.install(|| analyze(&f, options, &budget))?;
    print_summary(&analysis.report, out)?;

    if let Some(path) = &cfg.emit_json {
        write_json(path, &analysis.report)?;
    }
    if cfg.dump_groups {
        let path = sidecar_path(cfg.emit_json.as_deref());
        write_json(&path, &GroupDump::new(&analysis))?;
        writeln!(err, "groups written to {}", path.display()).map_err(io)?;
    }
    if cfg.fixture_check {
        match cfg.source {
            Source::Family { h, .. } if (2..=5).contains(&h) => {
                let path = fixture_path(&default_fixture_dir(), h);
                let o = check_fixture(&Fixture::load(&path)?, &path, &budget)?;
                print_fixture(&o, out)?;
                if !o.passed() {
                    return Ok(EXIT_INPUT);
                }
            }
            _ => writeln!(err, "note: no fixture for this form").map_err(io)?,
        }
    }
    Ok(EXIT_OK)
}

pub fn sidecar_path(report: Option<&Path>) -> PathBuf {
    match report {
        Some(p) => p.with_extension("groups.json"),
        None => PathBuf::from("baut-groups.json"),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

pub fn print_summary(r: &ObstructionReport, out: &mut dyn Write) -> Result<()> {
    let form = match r.h {
        FormLabel::Genus(h) => format!("standard family, h = {h}"),
        FormLabel::Custom(_) => format!("custom, rank {}", r.rank),
    };
    let orbits = r.orbit_count.map_or("not computed".to_string(), |c| c.to_string());
    let lines = [
        ("form", form),
        ("sign", format!("{}{}", r.sign, if r.sign_reduced { " (reduced to plus)" } else { "" })),
        ("orders", format!("{:?}", r.orders)),
        ("|Aut(V)|", r.aut_v_count.to_string()),
        ("|Im(d)|", r.image_count.to_string()),
        ("|Aut(dV)|", r.bdry_aut_count.to_string()),
        ("index", r.index.to_string()),
        ("surjective", r.surjective.to_string()),
        ("orbits", orbits),
        ("threads", r.threads.to_string()),
        ("time", format!("{} ms", r.timings.total_ms)),
    ];
    for (k, v) in lines {
        writeln!(out, "{k:<12}{v}").map_err(io)?;
    }
    if !r.within_theorem_hypothesis {
        writeln!(out, "note: outside the genus range 1..=8 where triviality certifies the obstruction").map_err(io)?;
    }
    writeln!(out, "bAut trivial: {}", r.baut_trivial).map_err(io)?;
    Ok(())
}

#[derive(Serialize)]
struct GroupDump {
    orders: Vec<u64>,
    /// Isometries of the symmetrization, original basis, row-major rows.
    isometries: Vec<Vec<Vec<i32>>>,
    image: Vec<Vec<Vec<u64>>>,
    automorphisms: Vec<Vec<Vec<u64>>>,
}

impl GroupDump {
    fn new(a: &Analysis) -> Self {
        let n = a.isometries.dim();
        let rows = |set: &AutSet| -> Vec<Vec<Vec<u64>>> {
            let k = set.orders().len();
            set.iter()
                .map(|m| m.entries.chunks(k.max(1)).map(<[u64]>::to_vec).collect())
                .collect()
        };
        GroupDump {
            orders: a.report.orders.clone(),
            isometries: a
                .isometries
                .iter()
                .map(|g| g.chunks(n).map(<[i32]>::to_vec).collect())
                .collect(),
            image: rows(&a.image),
            automorphisms: rows(&a.automorphisms),
        }
    }
}
