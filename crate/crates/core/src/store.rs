//! Poset text and DOT formats, and the shipped fixture posets.
//!
//! Text format:
//!
//! ```text
//! # comment
//! n=4
//! 0 < 2
//! 1 < 2
//! ```
//!
//! The first non-comment line fixes the element count; every later line is
//! one relation `j < k`. The loader takes the transitive closure. Fixture
//! files additionally carry `#@ key: value` metadata comments.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::linext::{count_linext, DownsetTable};
use crate::poset::{Poset, PosetError};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: relation {j} < {k} contradicts an earlier line")]
    Contradiction { line: usize, j: usize, k: usize },
    #[error("line {line}: {source}")]
    Poset {
        line: usize,
        #[source]
        source: PosetError,
    },
    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),
    #[error("fixture `{name}`: {message}")]
    Fixture { name: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn syntax(line: usize, message: impl Into<String>) -> StoreError {
    StoreError::Syntax {
        line,
        message: message.into(),
    }
}

/// Parses the text format. Line numbers in errors are 1-based.
pub fn parse_poset(text: &str) -> Result<Poset, StoreError> {
    let mut poset: Option<Poset> = None;
    let mut last_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        last_line = line;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let Some(p) = poset else {
            let rest = body
                .strip_prefix('n')
                .map(str::trim_start)
                .and_then(|r| r.strip_prefix('='))
                .ok_or_else(|| syntax(line, "expected `n=<count>`"))?;
            let n: usize = rest
                .trim()
                .parse()
                .map_err(|_| syntax(line, format!("bad element count `{}`", rest.trim())))?;
            poset =
                Some(Poset::new_antichain(n).map_err(|source| StoreError::Poset { line, source })?);
            continue;
        };
        let (lhs, rhs) = body
            .split_once('<')
            .ok_or_else(|| syntax(line, "expected `j < k`"))?;
        let parse_index = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| syntax(line, format!("bad element index `{}`", s.trim())))
        };
        let (j, k) = (parse_index(lhs)?, parse_index(rhs)?);
        poset = Some(p.add_relation(j, k).map_err(|e| match e {
            PosetError::Contradiction { j, k } => StoreError::Contradiction { line, j, k },
            source => StoreError::Poset { line, source },
        })?);
    }
    poset.ok_or_else(|| syntax(last_line.max(1), "missing `n=<count>` line"))
}

/// Renders cover relations in the text format.
pub fn render_poset(p: &Poset) -> String {
    let mut out = format!("n={}\n", p.len());
    for (j, k) in p.covers() {
        writeln!(out, "{j} < {k}").unwrap();
    }
    out
}

/// Hasse diagram in Graphviz DOT, edges pointing from lower to upper.
pub fn render_dot(p: &Poset, name: &str) -> String {
    let mut out = String::new();
    writeln!(out, "digraph \"{}\" {{", name.replace('"', "'")).unwrap();
    writeln!(out, "  rankdir=BT;").unwrap();
    writeln!(out, "  node [shape=circle];").unwrap();
    for j in 0..p.len() {
        writeln!(out, "  u{j} [label=\"u{j}\"];").unwrap();
    }
    for (j, k) in p.covers() {
        writeln!(out, "  u{j} -> u{k};").unwrap();
    }
    out.push_str("}\n");
    out
}

pub fn read_poset_file(path: &Path) -> Result<Poset, StoreError> {
    let text = fs::read_to_string(path).map_err(|source| StoreError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_poset(&text)
}

/// Fixture names in the order they are checked.
pub const FIXTURE_NAMES: [&str; 5] = ["P16", "P15a", "Q16a", "P15b", "Q16b"];

const BUILTIN: [(&str, &str); 6] = [
    ("P16", include_str!("../data/P16.poset")),
    ("P15a", include_str!("../data/P15a.poset")),
    ("Q16a", include_str!("../data/Q16a.poset")),
    ("P15b", include_str!("../data/P15b.poset")),
    ("Q16b", include_str!("../data/Q16b.poset")),
    ("worked4", include_str!("../data/worked4.poset")),
];

#[derive(Debug, Clone)]
pub struct NamedFixture {
    pub name: String,
    pub poset: Poset,
    pub expected_e: u64,
    pub source: String,
}

fn parse_fixture(name: &str, text: &str) -> Result<NamedFixture, StoreError> {
    let poset = parse_poset(text)?;
    let mut expected_e = None;
    let mut source = String::new();
    for line in text.lines() {
        if let Some(meta) = line.trim().strip_prefix("#@") {
            if let Some((key, value)) = meta.split_once(':') {
                if key.trim() == "e" {
                    expected_e = value.trim().parse().ok();
                }
            }
        } else if let Some(comment) = line.trim().strip_prefix('#') {
            if source.is_empty() {
                source = comment.trim().to_owned();
            }
        }
    }
    let expected_e = expected_e.ok_or_else(|| StoreError::Fixture {
        name: name.to_owned(),
        message: "missing `#@ e:` metadata".into(),
    })?;
    Ok(NamedFixture {
        name: name.to_owned(),
        poset,
        expected_e,
        source,
    })
}

/// Loads a fixture shipped with the crate.
pub fn load_fixture(name: &str) -> Result<NamedFixture, StoreError> {
    let (_, text) = BUILTIN
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| StoreError::UnknownFixture(name.to_owned()))?;
    parse_fixture(name, text)
}

/// Loads `<dir>/<name>.poset`.
pub fn load_fixture_from(dir: &Path, name: &str) -> Result<NamedFixture, StoreError> {
    let path = dir.join(format!("{name}.poset"));
    let text = fs::read_to_string(&path).map_err(|source| StoreError::Io {
        path: path.clone(),
        source,
    })?;
    parse_fixture(name, &text)
}

/// Result of one fixture identity check.
#[derive(Debug, Clone, Serialize)]
pub struct IdentityCheck {
    pub identity: String,
    pub passed: bool,
    pub detail: String,
}

/// The five named fixtures, in [`FIXTURE_NAMES`] order.
pub struct FixtureSet {
    pub fixtures: Vec<NamedFixture>,
}

impl FixtureSet {
    pub fn builtin() -> Result<Self, StoreError> {
        let fixtures = FIXTURE_NAMES
            .iter()
            .map(|n| load_fixture(n))
            .collect::<Result<_, _>>()?;
        Ok(FixtureSet { fixtures })
    }

    pub fn from_dir(dir: &Path) -> Result<Self, StoreError> {
        let fixtures = FIXTURE_NAMES
            .iter()
            .map(|n| load_fixture_from(dir, n))
            .collect::<Result<_, _>>()?;
        Ok(FixtureSet { fixtures })
    }

    pub fn get(&self, name: &str) -> &NamedFixture {
        self.fixtures
            .iter()
            .find(|f| f.name == name)
            .expect("fixture set holds every fixture name")
    }
}

/// Checks the stored counts, the two additive identities and the four
/// comparison outcomes linking the fixtures.
pub fn relations_between_fixtures(set: &FixtureSet) -> Vec<IdentityCheck> {
    let mut scratch = DownsetTable::new(13);
    let mut e = |name: &str| count_linext(&set.get(name).poset, &mut scratch);
    let mut checks = Vec::new();

    for f in &set.fixtures {
        let got = e(&f.name);
        checks.push(IdentityCheck {
            identity: format!("e({}) = {}", f.name, f.expected_e),
            passed: got == f.expected_e,
            detail: format!("counted {got}"),
        });
    }

    for (whole, left, right) in [("P15a", "P16", "Q16a"), ("P15b", "P16", "Q16b")] {
        let (w, l, r) = (e(whole), e(left), e(right));
        checks.push(IdentityCheck {
            identity: format!("e({whole}) = e({left}) + e({right})"),
            passed: w == l + r,
            detail: format!("{w} vs {l} + {r} = {}", l + r),
        });
    }

    for (base, j, k, target) in [
        ("P15a", 10, 0, "P16"),
        ("P15a", 0, 10, "Q16a"),
        ("P15b", 0, 6, "P16"),
        ("P15b", 6, 0, "Q16b"),
    ] {
        let identity = format!("{base} + u{j}<u{k} is isomorphic to {target}");
        let (passed, detail) = match set.get(base).poset.add_relation(j, k) {
            Ok(p) => {
                let same = p.canonical_code() == set.get(target).poset.canonical_code();
                (
                    same,
                    if same { "isomorphic" } else { "not isomorphic" }.to_owned(),
                )
            }
            Err(err) => (false, err.to_string()),
        };
        checks.push(IdentityCheck {
            identity,
            passed,
            detail,
        });
    }
    checks
}
