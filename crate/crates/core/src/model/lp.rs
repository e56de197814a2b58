//! LP text export and a reader for the same dialect.
//!
//! Layout: `Minimize` with a linear part and a `[ ... ] / 2` quadratic
//! bracket (coefficients doubled), `Subject To` with one named row per
//! constraint, `Bounds`, `Binaries`, `End`. Numbers are printed in shortest
//! round-trip form, so reading the file back reproduces every coefficient
//! bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use super::{MiqpModel, Sense, VarKind};
use crate::error::{Error, Result};

const TERMS_PER_LINE: usize = 6;

/// Name-keyed view of a program, as written to or read from LP text.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LpModel {
    pub objective: Vec<(String, f64)>,
    /// `(a, b, coef)` for `coef * a * b` (not doubled).
    pub quadratic: Vec<(String, String, f64)>,
    pub rows: Vec<LpRow>,
    /// Bounds of continuous variables.
    pub bounds: Vec<(String, f64, f64)>,
    pub binaries: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpRow {
    pub name: String,
    pub terms: Vec<(String, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl LpModel {
    pub fn from_model(m: &MiqpModel) -> Self {
        let name = |i: usize| m.vars.name(i);
        LpModel {
            objective: m
                .objective
                .linear
                .iter()
                .map(|&(i, c)| (name(i), c))
                .collect(),
            quadratic: m
                .objective
                .quadratic
                .iter()
                .map(|q| (name(q.i), name(q.j), q.coef))
                .collect(),
            rows: m
                .constraints
                .iter()
                .map(|r| LpRow {
                    name: r.name.clone(),
                    terms: r.terms.iter().map(|&(i, c)| (name(i), c)).collect(),
                    sense: r.sense,
                    rhs: r.rhs,
                })
                .collect(),
            bounds: (0..m.vars.len())
                .filter(|&i| m.vars.kind(i) == VarKind::Continuous)
                .map(|i| (name(i), m.bounds[i].0, m.bounds[i].1))
                .collect(),
            binaries: m.binaries().map(name).collect(),
        }
    }
}

/// Writes `m` as LP text.
pub fn export_lp(m: &MiqpModel) -> Result<String> {
    if m.objective.constant != 0.0 {
        return Err(Error::invalid(
            "objective constants must be carried by a fixed variable (build option objective_offset)",
        ));
    }
    let lp = LpModel::from_model(m);
    let mut out = String::new();
    out.push_str("\\ coverage planning program\n");
    out.push_str("Minimize\n");
    let mut obj: Vec<String> = linear_tokens(&lp.objective);
    if !lp.quadratic.is_empty() {
        let mut q = vec!["[".to_string()];
        for (k, (a, b, c)) in lp.quadratic.iter().enumerate() {
            let c2 = 2.0 * c;
            push_coef(&mut q, c2, k == 0);
            if a == b {
                q.push(format!("{a} ^ 2"));
            } else {
                q.push(format!("{a} * {b}"));
            }
        }
        q.push("] / 2".to_string());
        if !obj.is_empty() {
            obj.push("+".into());
        }
        obj.extend(q);
    }
    write_statement(&mut out, "obj", &obj);
    out.push_str("Subject To\n");
    for r in &lp.rows {
        let mut toks = linear_tokens(&r.terms);
        toks.push(
            match r.sense {
                Sense::Le => "<=",
                Sense::Eq => "=",
                Sense::Ge => ">=",
            }
            .to_string(),
        );
        toks.push(format!("{}", r.rhs));
        write_statement(&mut out, &r.name, &toks);
    }
    out.push_str("Bounds\n");
    for (n, lo, hi) in &lp.bounds {
        if lo == hi {
            let _ = writeln!(out, " {n} = {lo}");
        } else {
            let _ = writeln!(out, " {lo} <= {n} <= {hi}");
        }
    }
    out.push_str("Binaries\n");
    for chunk in lp.binaries.chunks(TERMS_PER_LINE) {
        let _ = writeln!(out, " {}", chunk.join(" "));
    }
    out.push_str("End\n");
    Ok(out)
}

pub fn write_lp(m: &MiqpModel, path: &Path) -> Result<()> {
    let text = export_lp(m)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn push_coef(toks: &mut Vec<String>, c: f64, first: bool) {
    if c < 0.0 {
        toks.push("-".into());
    } else if !first {
        toks.push("+".into());
    }
    toks.push(format!("{}", c.abs()));
}

fn linear_tokens(terms: &[(String, f64)]) -> Vec<String> {
    let mut toks = Vec::with_capacity(terms.len() * 3);
    for (k, (n, c)) in terms.iter().enumerate() {
        push_coef(&mut toks, *c, k == 0);
        toks.push(n.clone());
    }
    toks
}

/// Writes `name: tokens`, breaking lines between terms.
fn write_statement(out: &mut String, name: &str, toks: &[String]) {
    let _ = write!(out, " {name}:");
    let mut names_on_line = 0;
    for t in toks {
        let is_op = matches!(t.as_str(), "+" | "-");
        if is_op && names_on_line >= TERMS_PER_LINE {
            out.push_str("\n  ");
            names_on_line = 0;
        } else {
            out.push(' ');
        }
        out.push_str(t);
        if t.chars().next().is_some_and(|c| c.is_alphabetic()) {
            names_on_line += 1;
        }
    }
    out.push('\n');
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Objective,
    Constraints,
    Bounds,
    Binaries,
    End,
}

fn section_of(line: &str) -> Option<Section> {
    match line.trim().to_ascii_lowercase().as_str() {
        "minimize" | "minimise" | "min" => Some(Section::Objective),
        "subject to" | "st" | "s.t." => Some(Section::Constraints),
        "bounds" => Some(Section::Bounds),
        "binaries" | "binary" | "bin" => Some(Section::Binaries),
        "end" => Some(Section::End),
        _ => None,
    }
}

/// Parses LP text written by [`export_lp`].
pub fn parse_lp(text: &str) -> Result<LpModel> {
    let mut lp = LpModel::default();
    let mut section = Section::None;
    // Tokens of the statement being accumulated, with the line it started on.
    let mut pending: Option<(usize, String, Vec<String>)> = None;

    let flush = |lp: &mut LpModel,
                 section: Section,
                 p: Option<(usize, String, Vec<String>)>|
     -> Result<()> {
        let Some((line, name, toks)) = p else {
            return Ok(());
        };
        match section {
            Section::Objective => parse_objective(lp, line, &toks),
            Section::Constraints => {
                let row = parse_row(line, name, &toks)?;
                lp.rows.push(row);
                Ok(())
            }
            _ => Ok(()),
        }
    };

    for (ln, raw) in text.lines().enumerate() {
        let line_no = ln + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('\\') {
            continue;
        }
        if let Some(s) = section_of(line) {
            flush(&mut lp, section, pending.take())?;
            section = s;
            continue;
        }
        match section {
            Section::None => return Err(lp_err(line_no, "content before the first section")),
            Section::End => return Err(lp_err(line_no, "content after End")),
            Section::Objective | Section::Constraints => {
                let mut toks = line.split_whitespace();
                let first = toks.next().expect("line is nonempty");
                if let Some(name) = first.strip_suffix(':') {
                    flush(&mut lp, section, pending.take())?;
                    pending = Some((
                        line_no,
                        name.to_string(),
                        toks.map(str::to_string).collect(),
                    ));
                } else {
                    let Some(p) = pending.as_mut() else {
                        return Err(lp_err(line_no, "continuation line without a statement"));
                    };
                    p.2.extend(line.split_whitespace().map(str::to_string));
                }
            }
            Section::Bounds => lp.bounds.push(parse_bound(line_no, line)?),
            Section::Binaries => lp
                .binaries
                .extend(line.split_whitespace().map(str::to_string)),
        }
    }
    flush(&mut lp, section, pending.take())?;
    if section != Section::End {
        return Err(lp_err(text.lines().count(), "missing End"));
    }
    Ok(lp)
}

fn lp_err(line: usize, msg: impl Into<String>) -> Error {
    Error::LpParse {
        line,
        msg: msg.into(),
    }
}

fn number(line: usize, tok: &str) -> Result<f64> {
    tok.parse::<f64>()
        .map_err(|_| lp_err(line, format!("expected a number, found {tok:?}")))
}

/// Reads `[sign] coef name` terms until a token in `stop`; returns the index
/// of the stop token (or the length).
fn read_linear(
    line: usize,
    toks: &[String],
    stop: &[&str],
    out: &mut Vec<(String, f64)>,
) -> Result<usize> {
    let mut i = 0;
    while i < toks.len() && !stop.contains(&toks[i].as_str()) {
        let mut sign = 1.0;
        if toks[i] == "+" || toks[i] == "-" {
            if toks[i] == "-" {
                sign = -1.0;
            }
            i += 1;
            // `+ [` joins the linear part to the quadratic bracket.
            if toks.get(i).is_some_and(|t| stop.contains(&t.as_str())) {
                if sign < 0.0 {
                    return Err(lp_err(line, "negated bracket is not supported"));
                }
                break;
            }
        }
        let coef = number(
            line,
            toks.get(i).ok_or_else(|| lp_err(line, "dangling sign"))?,
        )?;
        let name = toks
            .get(i + 1)
            .ok_or_else(|| lp_err(line, "coefficient without a variable"))?;
        out.push((name.clone(), sign * coef));
        i += 2;
    }
    Ok(i)
}

fn parse_objective(lp: &mut LpModel, line: usize, toks: &[String]) -> Result<()> {
    let mut i = read_linear(line, toks, &["["], &mut lp.objective)?;
    if i == toks.len() {
        return Ok(());
    }
    i += 1;
    while i < toks.len() && toks[i] != "]" {
        let mut sign = 1.0;
        if toks[i] == "+" || toks[i] == "-" {
            if toks[i] == "-" {
                sign = -1.0;
            }
            i += 1;
        }
        let get = |k: usize| {
            toks.get(k)
                .ok_or_else(|| lp_err(line, "truncated quadratic term"))
        };
        let coef = sign * number(line, get(i)?)?;
        let a = get(i + 1)?.clone();
        match get(i + 2)?.as_str() {
            "^" => {
                if get(i + 3)? != "2" {
                    return Err(lp_err(line, "only squares are supported"));
                }
                lp.quadratic.push((a.clone(), a, coef / 2.0));
            }
            "*" => lp.quadratic.push((a, get(i + 3)?.clone(), coef / 2.0)),
            other => {
                return Err(lp_err(
                    line,
                    format!("unexpected {other:?} in quadratic term"),
                ))
            }
        }
        i += 4;
    }
    let tail: Vec<&str> = toks[i..].iter().map(String::as_str).collect();
    if tail != ["]", "/", "2"] {
        return Err(lp_err(line, "quadratic bracket must end with `] / 2`"));
    }
    Ok(())
}

fn parse_row(line: usize, name: String, toks: &[String]) -> Result<LpRow> {
    let mut terms = Vec::new();
    let i = read_linear(line, toks, &["<=", "=", ">=", "=<", "=>"], &mut terms)?;
    if i + 2 != toks.len() {
        return Err(lp_err(
            line,
            format!("row {name} needs `sense rhs` at its end"),
        ));
    }
    let sense = match toks[i].as_str() {
        "<=" | "=<" => Sense::Le,
        ">=" | "=>" => Sense::Ge,
        _ => Sense::Eq,
    };
    Ok(LpRow {
        name,
        terms,
        sense,
        rhs: number(line, &toks[i + 1])?,
    })
}

fn parse_bound(line: usize, text: &str) -> Result<(String, f64, f64)> {
    let t: Vec<&str> = text.split_whitespace().collect();
    match t.as_slice() {
        [lo, "<=", n, "<=", hi] => Ok((n.to_string(), number(line, lo)?, number(line, hi)?)),
        [n, "=", v] => {
            let v = number(line, v)?;
            Ok((n.to_string(), v, v))
        }
        _ => Err(lp_err(line, format!("unsupported bound {text:?}"))),
    }
}
