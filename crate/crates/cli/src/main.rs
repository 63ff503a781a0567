//! `sortbound`: count linear extensions, decide sortability, print bounds.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use sortbound::fja::{bounds_row, BoundsRow, ITLB_MAX_N};
use sortbound::search::{decide, decide_touch_bounded, Outcome, SearchOptions, SearchVerdict};
use sortbound::store::{self, FixtureSet};
use sortbound::{count_all_pairs, count_linext, DownsetTable, Poset};

/// Searches from this many elements up take minutes to days.
const LONG_RUN_ELEMENTS: usize = 12;

#[derive(Parser)]
#[command(
    name = "sortbound",
    version,
    about = "Decide whether n elements can be sorted in C comparisons"
)]
#[command(after_help = "\
Exit status: 0 on success, 1 when --expect is not met or a fixture identity \
fails, 2 on usage or I/O errors.

Every subcommand accepts --json and then prints a single JSON document \
instead of text; see the README for the schemas.")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Count the linear extensions of a poset
    Count {
        #[command(flatten)]
        input: PosetInput,
        /// also print t[j][k], the extensions with u_j < u_k
        #[arg(long)]
        pairs: bool,
        #[arg(long)]
        json: bool,
    },
    /// Decide whether n elements can be sorted with C comparisons
    Decide(DecideArgs),
    /// Print lower bound, merge insertion worst case and known optimum
    Bounds {
        #[arg(long, default_value_t = ITLB_MAX_N as u64, value_parser = clap::value_parser!(u64).range(1..=ITLB_MAX_N as u64))]
        max_n: u64,
        #[arg(long)]
        json: bool,
    },
    /// Check the counts and identities linking the named fixtures
    VerifyFixtures {
        /// read <NAME>.poset files from here instead of the built-in copies
        #[arg(long)]
        fixtures_dir: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Print the Hasse diagram of a poset in DOT
    ExportDot {
        #[command(flatten)]
        input: PosetInput,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct PosetInput {
    /// poset file: `n=<count>` then one `j < k` per line
    file: Option<PathBuf>,
    /// built-in fixture instead of a file (P16, P15a, Q16a, P15b, Q16b, worked4)
    #[arg(long)]
    fixture: Option<String>,
}

impl PosetInput {
    fn load(&self) -> Result<(String, Poset)> {
        match (&self.file, &self.fixture) {
            (Some(path), _) => {
                let p = store::read_poset_file(path)?;
                let name = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "poset".into());
                Ok((name, p))
            }
            (None, Some(name)) => Ok((name.clone(), store::load_fixture(name)?.poset)),
            (None, None) => unreachable!("clap requires one input"),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Expect {
    Sortable,
    NotSortable,
}

#[derive(Args)]
struct DecideArgs {
    /// number of elements
    n: usize,
    /// comparison budget C
    budget: usize,
    /// only algorithms that have touched LO..=HI elements after STEP comparisons
    #[arg(long, num_args = 3, value_names = ["STEP", "LO", "HI"])]
    touch: Option<Vec<usize>>,
    /// worker threads (default: all cores)
    #[arg(long, env = "SORTBOUND_WORKERS")]
    workers: Option<usize>,
    /// bytes a set under construction may hold before spilling, e.g. 512M, 2G
    #[arg(long, default_value = "2G", value_parser = parse_bytes)]
    mem_budget: usize,
    /// write every level here; spilled runs go here too
    #[arg(long, env = "SORTBOUND_CHECKPOINT_DIR")]
    checkpoint_dir: Option<PathBuf>,
    /// continue from the levels already in --checkpoint-dir
    #[arg(long, requires = "checkpoint_dir")]
    resume: bool,
    /// disable the sortability memo
    #[arg(long)]
    no_cache: bool,
    /// allow searches with 12 or more elements
    #[arg(long)]
    yes_long: bool,
    /// exit with status 1 unless the verdict matches
    #[arg(long, value_enum)]
    expect: Option<Expect>,
    #[arg(long)]
    json: bool,
}

fn parse_bytes(s: &str) -> Result<usize, String> {
    let s = s.trim();
    let (digits, scale) = match s.char_indices().last() {
        Some((i, 'K' | 'k')) => (&s[..i], 1usize << 10),
        Some((i, 'M' | 'm')) => (&s[..i], 1 << 20),
        Some((i, 'G' | 'g')) => (&s[..i], 1 << 30),
        _ => (s, 1),
    };
    digits
        .parse::<usize>()
        .ok()
        .and_then(|v| v.checked_mul(scale))
        .ok_or_else(|| format!("`{s}` is not a byte count"))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok((text, ok)) => {
            // a closed pipe is not an error worth reporting
            let _ = std::io::stdout().lock().write_all(text.as_bytes());
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// Output text, and whether every expectation held.
fn run(command: Command) -> Result<(String, bool)> {
    match command {
        Command::Count { input, pairs, json } => cmd_count(&input, pairs, json),
        Command::Decide(args) => cmd_decide(&args),
        Command::Bounds { max_n, json } => cmd_bounds(max_n as usize, json),
        Command::VerifyFixtures { fixtures_dir, json } => cmd_verify_fixtures(fixtures_dir, json),
        Command::ExportDot { input, json } => {
            let (name, p) = input.load()?;
            let dot = store::render_dot(&p, &name);
            if json {
                Ok((to_json(&json!({ "name": name, "dot": dot })), true))
            } else {
                Ok((dot, true))
            }
        }
    }
}

fn to_json(value: &impl Serialize) -> String {
    serde_json::to_string_pretty(value).expect("output serializes") + "\n"
}

fn cmd_count(input: &PosetInput, pairs: bool, json: bool) -> Result<(String, bool)> {
    let (_, p) = input.load()?;
    let mut scratch = DownsetTable::new(p.len());
    let table = pairs.then(|| count_all_pairs(&p, &mut scratch));
    let e = match &table {
        Some(t) => t.total(),
        None => count_linext(&p, &mut scratch),
    };
    let rows: Option<Vec<Vec<u64>>> = table
        .as_ref()
        .map(|t| (0..p.len()).map(|j| t.row(j).to_vec()).collect());
    if json {
        return Ok((
            to_json(&json!({ "n": p.len(), "e": e, "pairs": rows })),
            true,
        ));
    }
    let mut out = format!("e = {e}\n");
    if let Some(rows) = rows {
        let width = rows
            .iter()
            .flatten()
            .map(|v| v.to_string().len())
            .max()
            .unwrap_or(1);
        out.push_str("t[j][k] = extensions with u_j < u_k (row j, column k)\n");
        for row in rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:>width$}")).collect();
            writeln!(out, "{}", cells.join(" ")).unwrap();
        }
    }
    Ok((out, true))
}

fn cmd_decide(args: &DecideArgs) -> Result<(String, bool)> {
    if args.n >= LONG_RUN_ELEMENTS && !args.yes_long {
        bail!(
            "searches with {} or more elements can run for a long time; pass --yes-long to start one",
            LONG_RUN_ELEMENTS
        );
    }
    if let Some(dir) = &args.checkpoint_dir {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let opts = SearchOptions {
        workers: args.workers,
        mem_budget: args.mem_budget,
        use_cache: !args.no_cache,
        checkpoint_dir: args.checkpoint_dir.clone(),
        resume: args.resume,
        record_witnesses: false,
    };
    let verdict = match args.touch.as_deref() {
        Some(&[step, lo, hi]) => decide_touch_bounded(args.n, args.budget, step, lo, hi, &opts)?,
        Some(_) => unreachable!("clap takes exactly three values"),
        None => decide(args.n, args.budget, &opts)?,
    };
    let text = if args.json {
        to_json(&verdict)
    } else {
        render_verdict(&verdict)
    };
    let met = match args.expect {
        None => true,
        Some(Expect::Sortable) => verdict.outcome == Outcome::Sortable,
        Some(Expect::NotSortable) => verdict.outcome == Outcome::NotSortable,
    };
    if !met {
        eprintln!("expectation not met");
    }
    Ok((text, met))
}

fn render_verdict(v: &SearchVerdict) -> String {
    let mut out = String::new();
    let outcome = match v.outcome {
        Outcome::Sortable => "sortable",
        Outcome::NotSortable => "not sortable",
    };
    write!(out, "n = {}, C = {}", v.n, v.budget).unwrap();
    if let Some(t) = v.touch {
        write!(out, ", touched after {} in {}..={}", t.step, t.lo, t.hi).unwrap();
    }
    writeln!(out, ": {outcome}").unwrap();
    if let Some(step) = v.first_empty {
        let set = match v.phase {
            sortbound::search::Phase::Forward => "S",
            sortbound::search::Phase::Backward => "S*",
        };
        writeln!(out, "first empty set: {set}_{step}").unwrap();
    }
    writeln!(
        out,
        "{:>5} {:>12} {:>12} {:>14} {:>14}",
        "step", "forward", "backward", "min e", "max e"
    )
    .unwrap();
    let opt = |v: Option<u64>| v.map_or("-".to_owned(), |x| x.to_string());
    for l in &v.per_level {
        writeln!(
            out,
            "{:>5} {:>12} {:>12} {:>14} {:>14}",
            l.step,
            l.forward,
            opt(l.backward.map(|b| b as u64)),
            opt(l.min_e),
            opt(l.max_e)
        )
        .unwrap();
    }
    out
}

fn cmd_bounds(max_n: usize, json: bool) -> Result<(String, bool)> {
    let rows: Vec<BoundsRow> = (1..=max_n).map(bounds_row).collect();
    if json {
        return Ok((to_json(&rows), true));
    }
    let mut out = format!(
        "{:>3} {:>5} {:>5} {:>4} {:>5}  source\n",
        "n", "C(n)", "F(n)", "F-C", "S(n)"
    );
    for r in &rows {
        let (s, source) = match &r.known_optimum {
            Some(k) => (k.comparisons.to_string(), k.source),
            None => ("?".to_owned(), "open"),
        };
        writeln!(
            out,
            "{:>3} {:>5} {:>5} {:>4} {:>5}  {}",
            r.n,
            r.lower_bound,
            r.merge_insertion,
            r.merge_insertion - r.lower_bound as u64,
            s,
            source
        )
        .unwrap();
    }
    Ok((out, true))
}

fn cmd_verify_fixtures(dir: Option<PathBuf>, json: bool) -> Result<(String, bool)> {
    let set = match &dir {
        Some(d) => FixtureSet::from_dir(d)?,
        None => FixtureSet::builtin()?,
    };
    let checks = store::relations_between_fixtures(&set);
    let passed = checks.iter().all(|c| c.passed);
    if json {
        return Ok((
            to_json(&json!({ "passed": passed, "checks": checks })),
            passed,
        ));
    }
    let mut out = String::new();
    for c in &checks {
        let mark = if c.passed { "PASS" } else { "FAIL" };
        writeln!(out, "{mark} {} ({})", c.identity, c.detail).unwrap();
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    writeln!(
        out,
        "{} of {} identities hold",
        checks.len() - failed,
        checks.len()
    )
    .unwrap();
    Ok((out, passed))
}
