//! Plain-text matroid files.
//!
//! ```text
//! # comment
//! ELEMENTS 8
//! LABELS 1 2 3 4 5 6 7 8      (optional)
//! NONBASES 4                  (or BASES, or CIRCUITS)
//! 1 3 7 8
//! ...
//! ```
//!
//! Set lines list elements separated by whitespace, by label when `LABELS`
//! is present and by 0-based index otherwise. A line holding a single `-`
//! denotes the empty set.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::matroid::Matroid;
use crate::set::{ElementSet, MAX_ELEMENTS};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Section {
    Bases,
    NonBases(usize),
    Circuits,
}

pub fn parse_matroid(text: &str) -> Result<Matroid> {
    let mut size: Option<usize> = None;
    let mut labels: Option<Vec<String>> = None;
    let mut section: Option<(Section, usize)> = None;
    let mut sets: Vec<ElementSet> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let err = |message: String| Error::Parse {
            line: line_no,
            message,
        };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let head = tokens.next().unwrap_or_default();
        if section.is_none() {
            match head {
                "ELEMENTS" => {
                    if size.is_some() {
                        return Err(err("duplicate ELEMENTS line".into()));
                    }
                    let n = parse_count(tokens.next(), "ELEMENTS").map_err(&err)?;
                    if tokens.next().is_some() {
                        return Err(err("trailing tokens after ELEMENTS".into()));
                    }
                    if n > MAX_ELEMENTS {
                        return Err(Error::TooLarge {
                            size: n,
                            cap: MAX_ELEMENTS,
                        });
                    }
                    size = Some(n);
                }
                "LABELS" => {
                    let n = size.ok_or_else(|| err("LABELS before ELEMENTS".into()))?;
                    let names: Vec<String> = tokens.map(str::to_owned).collect();
                    if names.len() != n {
                        return Err(err(format!("expected {n} labels, got {}", names.len())));
                    }
                    let mut sorted = names.clone();
                    sorted.sort();
                    sorted.dedup();
                    if sorted.len() != n {
                        return Err(err("duplicate label".into()));
                    }
                    if names.iter().any(|l| l == "-") {
                        return Err(err("'-' cannot be used as a label".into()));
                    }
                    labels = Some(names);
                }
                "BASES" | "CIRCUITS" | "NONBASES" => {
                    if size.is_none() {
                        return Err(err(format!("{head} before ELEMENTS")));
                    }
                    let kind = match head {
                        "BASES" => Section::Bases,
                        "CIRCUITS" => Section::Circuits,
                        _ => {
                            Section::NonBases(parse_count(tokens.next(), "NONBASES").map_err(&err)?)
                        }
                    };
                    if tokens.next().is_some() {
                        return Err(err(format!("trailing tokens after {head}")));
                    }
                    section = Some((kind, line_no));
                }
                other => return Err(err(format!("unexpected keyword {other:?}"))),
            }
            continue;
        }
        let n = size.expect("section implies size");
        let set = parse_set(line, n, labels.as_deref()).map_err(&err)?;
        sets.push(set);
    }

    let n = size.ok_or(Error::Parse {
        line: 0,
        message: "missing ELEMENTS line".into(),
    })?;
    let (kind, _) = section.ok_or(Error::Parse {
        line: 0,
        message: "missing BASES, NONBASES or CIRCUITS section".into(),
    })?;
    let m = match kind {
        Section::Bases => Matroid::from_bases(n, sets)?,
        Section::NonBases(r) => {
            if r > n {
                return Err(Error::Invalid(format!("rank {r} exceeds {n} elements")));
            }
            Matroid::from_non_bases(n, r, sets)?
        }
        Section::Circuits => Matroid::from_circuits(n, sets)?,
    };
    match labels {
        Some(l) => m.with_labels(l),
        None => Ok(m),
    }
}

fn parse_count(token: Option<&str>, what: &str) -> std::result::Result<usize, String> {
    let t = token.ok_or_else(|| format!("{what} needs a number"))?;
    t.parse()
        .map_err(|_| format!("{what}: {t:?} is not a non-negative integer"))
}

/// Parses a whitespace-separated element list (or `-`) against a ground set.
pub fn parse_set(
    line: &str,
    n: usize,
    labels: Option<&[String]>,
) -> std::result::Result<ElementSet, String> {
    let tokens: Vec<&str> = line.split_whitespace().collect();
    if tokens == ["-"] {
        return Ok(ElementSet::EMPTY);
    }
    let mut set = ElementSet::EMPTY;
    for t in tokens {
        let e = resolve_element(t, n, labels)?;
        if set.contains(e) {
            return Err(format!("element {t:?} repeated"));
        }
        set = set.with(e);
    }
    Ok(set)
}

pub fn resolve_element(
    token: &str,
    n: usize,
    labels: Option<&[String]>,
) -> std::result::Result<usize, String> {
    match labels {
        Some(labels) => labels
            .iter()
            .position(|l| l == token)
            .ok_or_else(|| format!("unknown element {token:?}")),
        None => {
            let e: usize = token
                .parse()
                .map_err(|_| format!("{token:?} is not an element index"))?;
            if e >= n {
                return Err(format!("element {e} out of range 0..{n}"));
            }
            Ok(e)
        }
    }
}

fn write_set(out: &mut String, m: &Matroid, x: ElementSet) {
    if x.is_empty() {
        out.push('-');
        return;
    }
    let names: Vec<String> = x.iter().map(|e| m.label(e)).collect();
    out.push_str(&names.join(" "));
}

/// Writes `m` in the `BASES` form.
pub fn write_matroid(m: &Matroid) -> String {
    let mut out = String::new();
    writeln!(out, "ELEMENTS {}", m.size()).unwrap();
    if let Some(labels) = m.labels() {
        writeln!(out, "LABELS {}", labels.join(" ")).unwrap();
    }
    out.push_str("BASES\n");
    for &b in m.bases() {
        write_set(&mut out, m, b);
        out.push('\n');
    }
    out
}
