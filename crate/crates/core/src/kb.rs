//! Knowledge-base files: a tableau written as plain text.
//!
//! ```text
//! GAMMOID-KB 1
//! GOAL <key>
//! KEY <key>                      every registered matroid
//! MINOR <key>                    registered minors of the goal
//! MATROID <key> <G|M|X> <certificate>
//! CLOSED <key>                   minor-closed members of 𝒢
//! EQUIV <representative> <member>
//! LOG
//! RECORD <kind> <justification>
//! EFFECT <effect>
//! END
//! ```
//!
//! Keys are canonical keys in hex. Every section is sorted, so exporting an
//! imported file reproduces it byte for byte.

use std::fmt::Write as _;

use crate::canonical::CanonicalKey;
use crate::error::{Error, Result};
use crate::tableau::{join, DerivationKind, DerivationRecord, Family, Tableau};

pub const HEADER: &str = "GAMMOID-KB 1";

pub fn export(t: &Tableau) -> String {
    let mut out = String::new();
    writeln!(out, "{HEADER}").unwrap();
    writeln!(out, "GOAL {}", t.goal_key()).unwrap();
    for k in t.known_keys() {
        writeln!(out, "KEY {k}").unwrap();
    }
    for k in t.goal_minors() {
        writeln!(out, "MINOR {k}").unwrap();
    }
    for fam in Family::ALL {
        for (k, cert) in t.family(fam) {
            writeln!(out, "MATROID {k} {} {cert}", fam.tag()).unwrap();
        }
    }
    for k in t.closed() {
        writeln!(out, "CLOSED {k}").unwrap();
    }
    for (rep, member) in t.equivalence_pairs() {
        writeln!(out, "EQUIV {rep} {member}").unwrap();
    }
    out.push_str("LOG\n");
    for record in t.log() {
        writeln!(
            out,
            "RECORD {} {}",
            record.kind.name(),
            record.justification
        )
        .unwrap();
        for e in &record.effects {
            writeln!(out, "EFFECT {e}").unwrap();
        }
    }
    out.push_str("END\n");
    out
}

/// Reads a knowledge base as a tableau for its own goal.
pub fn import(text: &str) -> Result<Tableau> {
    let mut goal: Option<CanonicalKey> = None;
    let mut known = Vec::new();
    let mut minors = Vec::new();
    let mut entries = Vec::new();
    let mut closed = Vec::new();
    let mut equivalences = Vec::new();
    let mut log: Vec<DerivationRecord> = Vec::new();
    let mut in_log = false;
    let mut ended = false;

    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, HEADER)) => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header {HEADER:?}"),
            })
        }
    }
    for (idx, line) in lines {
        let line_no = idx + 1;
        let wrap = |e: Error| Error::Parse {
            line: line_no,
            message: e.to_string(),
        };
        let err = |message: &str| Error::Parse {
            line: line_no,
            message: message.to_owned(),
        };
        if ended {
            if line.trim().is_empty() {
                continue;
            }
            return Err(err("content after END"));
        }
        let (head, rest) = line.split_once(' ').unwrap_or((line, ""));
        let key = |s: &str| CanonicalKey::from_hex(s).map_err(wrap);
        if in_log {
            match head {
                "RECORD" => {
                    let (kind, why) = rest.split_once(' ').unwrap_or((rest, ""));
                    let kind = DerivationKind::from_name(kind)
                        .ok_or_else(|| err("unknown derivation kind"))?;
                    log.push(DerivationRecord {
                        kind,
                        justification: why.to_owned(),
                        effects: Vec::new(),
                    });
                }
                "EFFECT" => {
                    let record = log.last_mut().ok_or_else(|| err("EFFECT before RECORD"))?;
                    record.effects.push(rest.parse().map_err(wrap)?);
                }
                "END" if rest.is_empty() => ended = true,
                _ => return Err(err("unexpected line in LOG section")),
            }
            continue;
        }
        match head {
            "GOAL" => {
                if goal.is_some() {
                    return Err(err("duplicate GOAL"));
                }
                goal = Some(key(rest)?);
            }
            "KEY" => known.push(key(rest)?),
            "MINOR" => minors.push(key(rest)?),
            "CLOSED" => closed.push(key(rest)?),
            "MATROID" => {
                let mut parts = rest.splitn(3, ' ');
                let k = key(parts.next().unwrap_or(""))?;
                let fam = parts
                    .next()
                    .and_then(Family::from_tag)
                    .ok_or_else(|| err("family tag must be G, M or X"))?;
                let cert = parts.next().unwrap_or("").parse().map_err(wrap)?;
                entries.push((fam, k, cert));
            }
            "EQUIV" => {
                let (a, b) = rest
                    .split_once(' ')
                    .ok_or_else(|| err("EQUIV takes two keys"))?;
                equivalences.push((key(a)?, key(b)?));
            }
            "LOG" if rest.is_empty() => in_log = true,
            _ => return Err(err("unexpected line")),
        }
    }
    if !ended {
        return Err(Error::Parse {
            line: 0,
            message: "missing END".into(),
        });
    }
    let goal = goal.ok_or(Error::Parse {
        line: 0,
        message: "missing GOAL".into(),
    })?;
    let mut t = Tableau::import_state(
        goal.to_matroid()?,
        &known,
        &minors,
        &entries,
        &closed,
        &equivalences,
    )?;
    t.set_log(log);
    Ok(t)
}

/// Imports a knowledge base and joins it into `into`.
pub fn import_into(text: &str, into: &Tableau) -> Result<Tableau> {
    let kb = import(text)?;
    join(&[into, &kb])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{g841, g841_dual};
    use crate::matroid::Matroid;
    use crate::tableau::{seed_tableau, update};

    #[test]
    fn round_trip_is_byte_identical() {
        let t = update(
            &seed_tableau(&g841()).unwrap(),
            &seed_tableau(&g841_dual()).unwrap(),
        )
        .unwrap();
        let text = export(&t);
        let back = import(&text).unwrap();
        assert_eq!(back, t);
        assert_eq!(export(&back), text);
        assert_eq!(
            Tableau::replay(back.goal().clone(), back.log()).unwrap(),
            back
        );
    }

    #[test]
    fn import_into_joins() {
        let kb = export(&seed_tableau(&Matroid::mk4()).unwrap());
        let fresh = Tableau::new(Matroid::uniform(2, 4)).unwrap();
        let joined = import_into(&kb, &fresh).unwrap();
        assert_eq!(joined.goal_key(), fresh.goal_key());
        assert_eq!(joined.family(Family::Excluded).len(), 1);
    }

    #[test]
    fn rejects_damage() {
        let text = export(&seed_tableau(&Matroid::uniform(2, 4)).unwrap());
        assert!(import(&text.replace(HEADER, "GAMMOID-KB 2")).is_err());
        assert!(import(&text.replace("END\n", "")).is_err());
        assert!(import(&text.replace("MATROID", "MATROIDS")).is_err());
        assert!(import(&text.replace(" G ", " Q ")).is_err());
    }
}
