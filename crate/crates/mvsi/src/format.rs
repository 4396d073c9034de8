//! Line-oriented text files for the three game kinds.
//!
//! The first meaningful line names the kind (`ssg`, `energy` or `pa`);
//! every following line is one record. `#` starts a comment and blank
//! lines are skipped. Probabilities and payoffs are exact rationals
//! written `p/q` or as a bare integer; decimal literals are rejected so
//! no rounding can sneak in through a fixture. Identifiers are non-empty
//! runs of ASCII letters, digits and underscores.
//!
//! Emitting a parsed file yields a canonical form — states sorted by
//! name, fractions reduced, successor lists deduplicated — so emit ∘
//! parse is a normalization and fixtures diff cleanly.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::energy::{EnergyGame, Player};
use crate::error::{Error, Result};
use crate::pa::Pa;
use crate::pos::Pos;
use crate::ssg::{Ssg, StateData};
use crate::term::Dist;

/// A parsed game file of any kind.
#[derive(Debug, Clone)]
pub enum GameFile {
    Ssg(Ssg),
    Energy(EnergyGame),
    Pa(Pa),
}

/// Parses a file of any kind, dispatching on the header line.
pub fn parse_game(text: &str) -> Result<GameFile> {
    let mut lines = records(text);
    let (header_line, header) = take_header(&mut lines)?;
    match header.as_str() {
        "ssg" => Ok(GameFile::Ssg(parse_ssg_body(lines, header_line)?)),
        "energy" => Ok(GameFile::Energy(parse_energy_body(lines, header_line)?)),
        "pa" => Ok(GameFile::Pa(parse_pa_body(lines, header_line)?)),
        other => Err(Error::Parse {
            line: header_line,
            msg: format!("unknown kind {other:?}, expected ssg, energy or pa"),
        }),
    }
}

pub fn parse_ssg(text: &str) -> Result<Ssg> {
    match parse_game(text)? {
        GameFile::Ssg(g) => Ok(g),
        _ => Err(Error::Parse { line: 1, msg: "expected an ssg file".into() }),
    }
}

pub fn parse_energy(text: &str) -> Result<EnergyGame> {
    match parse_game(text)? {
        GameFile::Energy(g) => Ok(g),
        _ => Err(Error::Parse { line: 1, msg: "expected an energy file".into() }),
    }
}

pub fn parse_pa(text: &str) -> Result<Pa> {
    match parse_game(text)? {
        GameFile::Pa(g) => Ok(g),
        _ => Err(Error::Parse { line: 1, msg: "expected a pa file".into() }),
    }
}

pub fn emit_game(game: &GameFile) -> String {
    match game {
        GameFile::Ssg(g) => emit_ssg(g),
        GameFile::Energy(g) => emit_energy(g),
        GameFile::Pa(g) => emit_pa(g),
    }
}

/// One meaningful line: its 1-based number and whitespace-split tokens.
struct Record {
    line: usize,
    tokens: Vec<String>,
}

fn records(text: &str) -> Vec<Record> {
    text.lines()
        .enumerate()
        .filter_map(|(i, raw)| {
            let body = raw.split('#').next().unwrap_or("");
            let tokens: Vec<String> = body.split_whitespace().map(str::to_string).collect();
            (!tokens.is_empty()).then_some(Record { line: i + 1, tokens })
        })
        .collect()
}

/// Pops the header record, which must be a single kind token.
fn take_header(lines: &mut Vec<Record>) -> Result<(usize, String)> {
    if lines.is_empty() {
        return Err(Error::Parse { line: 1, msg: "empty file, expected a kind header".into() });
    }
    let head = lines.remove(0);
    if head.tokens.len() != 1 {
        return Err(Error::Parse {
            line: head.line,
            msg: "the header line holds exactly the kind".into(),
        });
    }
    Ok((head.line, head.tokens.into_iter().next().expect("one token")))
}

fn ident(line: usize, token: &str) -> Result<Pos> {
    if !token.is_empty() && token.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        Ok(Pos::new(token))
    } else {
        Err(Error::Parse {
            line,
            msg: format!("{token:?} is not an identifier (letters, digits, underscores)"),
        })
    }
}

/// `p/q` or a bare integer; decimals and zero denominators are errors.
fn rational(line: usize, token: &str) -> Result<BigRational> {
    let bad = |msg: String| Error::Parse { line, msg };
    if token.contains('.') {
        return Err(bad(format!("{token:?} is a decimal literal, write an exact p/q")));
    }
    let int = |part: &str| -> Result<BigInt> {
        part.parse().map_err(|_| bad(format!("{token:?} is not a rational")))
    };
    match token.split_once('/') {
        None => Ok(BigRational::from_integer(int(token)?)),
        Some((p, q)) => {
            let (p, q) = (int(p)?, int(q)?);
            if q == BigInt::from(0) {
                return Err(bad(format!("{token:?} has denominator zero")));
            }
            Ok(BigRational::new(p, q))
        }
    }
}

fn integer(line: usize, token: &str) -> Result<i64> {
    token.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("{token:?} is not an integer weight"),
    })
}

/// Alternating `state mass` pairs into a distribution.
fn dist_pairs(line: usize, tokens: &[String]) -> Result<Dist> {
    if tokens.is_empty() || !tokens.len().is_multiple_of(2) {
        return Err(Error::Parse {
            line,
            msg: "expected alternating state and probability tokens".into(),
        });
    }
    let mut dist = Dist::new();
    for pair in tokens.chunks(2) {
        let target = ident(line, &pair[0])?;
        let mass = rational(line, &pair[1])?;
        if dist.insert(target.clone(), mass).is_some() {
            return Err(Error::Parse {
                line,
                msg: format!("state {target} occurs twice in one distribution"),
            });
        }
    }
    Ok(dist)
}

fn no_states(header_line: usize) -> Error {
    Error::Parse { line: header_line, msg: "no states".into() }
}

fn parse_ssg_body(lines: Vec<Record>, header_line: usize) -> Result<Ssg> {
    if lines.is_empty() {
        return Err(no_states(header_line));
    }
    let mut states: Vec<(usize, Pos, StateData)> = Vec::new();
    for rec in lines {
        let line = rec.line;
        let err = |msg: &str| Error::Parse { line, msg: msg.into() };
        let (kind, rest) = rec.tokens.split_first().expect("records are non-empty");
        let (name, args) = rest
            .split_first()
            .ok_or_else(|| err("expected a state name after the record kind"))?;
        let name = ident(line, name)?;
        let data = match kind.as_str() {
            "min" | "max" => {
                if args.is_empty() {
                    return Err(err("player states need at least one successor"));
                }
                let succs =
                    args.iter().map(|t| ident(line, t)).collect::<Result<Vec<_>>>()?;
                if kind == "min" {
                    StateData::Min(succs)
                } else {
                    StateData::Max(succs)
                }
            }
            "av" => StateData::Av(dist_pairs(line, args)?),
            "sink" => match args {
                [payoff] => StateData::Sink(rational(line, payoff)?),
                _ => return Err(err("sink states take exactly one payoff")),
            },
            other => {
                return Err(Error::Parse {
                    line,
                    msg: format!("unknown record {other:?}, expected min, max, av or sink"),
                })
            }
        };
        states.push((line, name, data));
    }
    check_declared_once(states.iter().map(|(l, n, _)| (*l, n)))?;
    let known: BTreeSet<&Pos> = states.iter().map(|(_, n, _)| n).collect();
    for (line, _, data) in &states {
        let mut check = |target: &Pos| -> Result<()> {
            if known.contains(target) {
                Ok(())
            } else {
                Err(Error::Parse {
                    line: *line,
                    msg: format!("edge to undeclared state {target}"),
                })
            }
        };
        match data {
            StateData::Min(succs) | StateData::Max(succs) => {
                succs.iter().try_for_each(&mut check)?
            }
            StateData::Av(dist) => dist.keys().try_for_each(&mut check)?,
            StateData::Sink(_) => {}
        }
    }
    Ssg::new(states.into_iter().map(|(_, n, d)| (n, d)))
}

fn parse_energy_body(lines: Vec<Record>, header_line: usize) -> Result<EnergyGame> {
    if lines.is_empty() {
        return Err(no_states(header_line));
    }
    let mut owners: Vec<(usize, Pos, Player)> = Vec::new();
    let mut edges: Vec<(usize, Pos, Pos, i64)> = Vec::new();
    for rec in lines {
        let line = rec.line;
        match rec.tokens.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
            ["state", name, owner] => {
                let player = match *owner {
                    "0" => Player::Zero,
                    "1" => Player::One,
                    other => {
                        return Err(Error::Parse {
                            line,
                            msg: format!("owner must be 0 or 1, not {other:?}"),
                        })
                    }
                };
                owners.push((line, ident(line, name)?, player));
            }
            ["edge", from, to, weight] => {
                edges.push((line, ident(line, from)?, ident(line, to)?, integer(line, weight)?));
            }
            [kind, ..] => {
                return Err(Error::Parse {
                    line,
                    msg: format!("unknown or malformed record {kind:?}, expected state or edge"),
                })
            }
            [] => unreachable!("records are non-empty"),
        }
    }
    check_declared_once(owners.iter().map(|(l, n, _)| (*l, n)))?;
    let known: BTreeSet<&Pos> = owners.iter().map(|(_, n, _)| n).collect();
    let mut seen_edges = BTreeSet::new();
    for (line, from, to, _) in &edges {
        for end in [from, to] {
            if !known.contains(end) {
                return Err(Error::Parse {
                    line: *line,
                    msg: format!("edge to undeclared state {end}"),
                });
            }
        }
        if !seen_edges.insert((from, to)) {
            return Err(Error::Parse {
                line: *line,
                msg: format!("duplicate edge {from} -> {to}"),
            });
        }
    }
    let side = |mine: Player| -> Vec<Pos> {
        owners.iter().filter(|(_, _, p)| *p == mine).map(|(_, n, _)| n.clone()).collect()
    };
    EnergyGame::new(
        side(Player::Zero),
        side(Player::One),
        edges.into_iter().map(|(_, a, b, w)| (a, b, w)),
    )
}

fn parse_pa_body(lines: Vec<Record>, header_line: usize) -> Result<Pa> {
    if lines.is_empty() {
        return Err(no_states(header_line));
    }
    let mut labels: Vec<(usize, Pos, String)> = Vec::new();
    let mut dists: Vec<(usize, Pos, Dist)> = Vec::new();
    for rec in lines {
        let line = rec.line;
        let (kind, rest) = rec.tokens.split_first().expect("records are non-empty");
        match (kind.as_str(), rest) {
            ("state", [name, label]) => {
                ident(line, label)?; // labels share the identifier syntax
                labels.push((line, ident(line, name)?, label.clone()));
            }
            ("state", _) => {
                return Err(Error::Parse {
                    line,
                    msg: "state records take a name and a label".into(),
                })
            }
            ("dist", [name, pairs @ ..]) => {
                dists.push((line, ident(line, name)?, dist_pairs(line, pairs)?));
            }
            (other, _) => {
                return Err(Error::Parse {
                    line,
                    msg: format!("unknown record {other:?}, expected state or dist"),
                })
            }
        }
    }
    check_declared_once(labels.iter().map(|(l, n, _)| (*l, n)))?;
    let known: BTreeSet<&Pos> = labels.iter().map(|(_, n, _)| n).collect();
    let mut by_state: BTreeMap<Pos, Vec<Dist>> = BTreeMap::new();
    for (line, name, dist) in dists {
        if !known.contains(&name) {
            return Err(Error::Parse {
                line,
                msg: format!("distribution for undeclared state {name}"),
            });
        }
        for target in dist.keys() {
            if !known.contains(target) {
                return Err(Error::Parse {
                    line,
                    msg: format!("distribution mentions undeclared state {target}"),
                });
            }
        }
        by_state.entry(name).or_default().push(dist);
    }
    Pa::new(labels.into_iter().map(|(_, name, label)| {
        let dists = by_state.remove(&name).unwrap_or_default();
        (name, label, dists)
    }))
}

fn check_declared_once<'a>(names: impl Iterator<Item = (usize, &'a Pos)>) -> Result<()> {
    let mut seen = BTreeSet::new();
    for (line, name) in names {
        if !seen.insert(name) {
            return Err(Error::Parse {
                line,
                msg: format!("state {name} declared twice"),
            });
        }
    }
    Ok(())
}

pub fn emit_ssg(g: &Ssg) -> String {
    let mut out = String::from("ssg\n");
    for (name, data) in g.iter() {
        match data {
            StateData::Min(succs) => writeln!(out, "min {name} {}", join_names(succs)),
            StateData::Max(succs) => writeln!(out, "max {name} {}", join_names(succs)),
            StateData::Av(dist) => writeln!(out, "av {name} {}", join_dist(dist)),
            StateData::Sink(payoff) => writeln!(out, "sink {name} {payoff}"),
        }
        .expect("writing to a string");
    }
    out
}

pub fn emit_energy(g: &EnergyGame) -> String {
    let mut out = String::from("energy\n");
    for v in g.states() {
        let owner = match g.owner(&v).expect("state of this game") {
            Player::Zero => 0,
            Player::One => 1,
        };
        writeln!(out, "state {v} {owner}").expect("writing to a string");
    }
    for v in g.states() {
        for (to, w) in g.edges_from(&v) {
            writeln!(out, "edge {v} {to} {w}").expect("writing to a string");
        }
    }
    out
}

pub fn emit_pa(g: &Pa) -> String {
    let mut out = String::from("pa\n");
    for s in g.states() {
        writeln!(out, "state {s} {}", g.label(&s).expect("state of this automaton"))
            .expect("writing to a string");
        for dist in g.dists(&s) {
            writeln!(out, "dist {s} {}", join_dist(dist)).expect("writing to a string");
        }
    }
    out
}

fn join_names(names: &[Pos]) -> String {
    names.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
}

fn join_dist(dist: &Dist) -> String {
    dist.iter()
        .map(|(target, mass)| format!("{target} {mass}"))
        .collect::<Vec<_>>()
        .join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::rat;
    use num_traits::One;

    #[test]
    fn ssg_round_trip_is_canonical() {
        // Shuffled states, unreduced fractions, comments, stray blanks.
        let messy = "
            # a tiny cyclic game
            ssg
            min min 1 av
            sink eps 2/8
            av av min 3/6 max 1/2   # fifty-fifty
            max max eps av
            sink 1 1
        ";
        let canonical = "ssg\n\
            sink 1 1\n\
            av av max 1/2 min 1/2\n\
            sink eps 1/4\n\
            max max av eps\n\
            min min 1 av\n";
        let g = parse_ssg(messy).unwrap();
        assert_eq!(emit_ssg(&g), canonical);
        assert_eq!(emit_ssg(&parse_ssg(canonical).unwrap()), canonical);
        assert_eq!(g.state(&Pos::new("eps")), Some(&StateData::Sink(rat(1, 4))));
    }

    #[test]
    fn energy_round_trip_is_canonical() {
        let messy = "energy
            state y 1
            state x 1
            edge y x 1
            edge x y -1   # back and forth
            state u 0
            edge u u 0
            edge x u -4
        ";
        let canonical = "energy\n\
            state u 0\n\
            state x 1\n\
            state y 1\n\
            edge u u 0\n\
            edge x u -4\n\
            edge x y -1\n\
            edge y x 1\n";
        let g = parse_energy(messy).unwrap();
        assert_eq!(emit_energy(&g), canonical);
        assert_eq!(emit_energy(&parse_energy(canonical).unwrap()), canonical);
        assert_eq!(g.owner(&Pos::new("u")), Some(Player::Zero));
    }

    #[test]
    fn pa_round_trip_keeps_distribution_order() {
        // States sort by name, but each state's distribution list is
        // positional identity and must survive untouched.
        let messy = "pa
            state t a
            dist t t 1/2 u 2/4
            dist t s 1
            state s a
            dist s s 1/2 u 1/2
            dist s t 1
            state u b
            dist u u 1
        ";
        let canonical = "pa\n\
            state s a\n\
            dist s s 1/2 u 1/2\n\
            dist s t 1\n\
            state t a\n\
            dist t t 1/2 u 1/2\n\
            dist t s 1\n\
            state u b\n\
            dist u u 1\n";
        let g = parse_pa(messy).unwrap();
        assert_eq!(emit_pa(&g), canonical);
        assert_eq!(emit_pa(&parse_pa(canonical).unwrap()), canonical);
        assert_eq!(g.dists(&Pos::new("t"))[1], [(Pos::new("s"), BigRational::one())].into());
    }

    #[test]
    fn dispatch_reads_any_kind() {
        assert!(matches!(parse_game("ssg\nsink v 1\n").unwrap(), GameFile::Ssg(_)));
        assert!(matches!(
            parse_game("energy\nstate v 0\nedge v v 0\n").unwrap(),
            GameFile::Energy(_)
        ));
        let pa = parse_game("pa\nstate v a\ndist v v 1\n").unwrap();
        assert!(matches!(pa, GameFile::Pa(_)));
        assert_eq!(emit_game(&pa), "pa\nstate v a\ndist v v 1\n");
        assert!(matches!(
            parse_game("maze\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(parse_ssg("energy\nstate v 0\nedge v v 0\n").is_err());
    }

    #[test]
    fn rejects_malformed_files() {
        let parse_err = |text: &str| -> (usize, String) {
            match parse_game(text) {
                Err(Error::Parse { line, msg }) => (line, msg),
                other => panic!("expected a parse error, got {other:?}"),
            }
        };
        assert_eq!(parse_err("").0, 1);
        assert!(parse_err("ssg\n").1.contains("no states"));
        assert!(parse_err("energy\n# only comments\n").1.contains("no states"));
        assert_eq!(parse_err("ssg\nsink v 3/0\n"), (2, "\"3/0\" has denominator zero".into()));
        assert!(parse_err("ssg\nsink v 0.5\n").1.contains("decimal"));
        assert!(parse_err("ssg\nsink v 1\nsink v 1\n").1.contains("declared twice"));
        assert_eq!(parse_err("ssg\nsink w 1\nmin v w x\n").0, 3);
        assert!(parse_err("ssg\nmin a-b c\n").1.contains("not an identifier"));
        assert!(parse_err("ssg\nteleport v w\n").1.contains("unknown record"));
        assert!(parse_err("ssg\nmin v\n").1.contains("successor"));
        assert!(parse_err("energy\nstate v 2\n").1.contains("owner"));
        assert!(parse_err("energy\nstate v 0\nedge v v 1/2\n").1.contains("integer"));
        assert!(parse_err("energy\nstate v 0\nedge v v 0\nedge v v 0\n").1.contains("duplicate"));
        assert!(parse_err("energy\nedge v w 1\n").1.contains("undeclared"));
        assert!(parse_err("energy\nstate v 0\nhop v\n").1.contains("malformed"));
        assert!(parse_err("pa\nstate v a\ndist v v 1/2 v 1/2\n").1.contains("twice"));
        assert!(parse_err("pa\ndist v v 1\n").1.contains("undeclared"));
        assert!(parse_err("pa\nstate v a\ndist w v 1\n").1.contains("undeclared"));
        assert!(parse_err("pa\nstate v a b c\n").1.contains("name and a label"));
        // Deeper invariants are the model's own errors, not parse errors.
        assert!(matches!(
            parse_game("ssg\nsink v 3/2\n"),
            Err(Error::InvalidModel(_))
        ));
        assert!(matches!(
            parse_game("pa\nstate v a\n"),
            Err(Error::InvalidModel(_))
        ));
        assert!(matches!(
            parse_game("pa\nstate v a\ndist v v 1/2\n"),
            Err(Error::InvalidModel(_))
        ));
    }
}
