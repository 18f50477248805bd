//! CPLEX-style LP text format.
//!
//! The writer emits every variable in the `Bounds` section, so a file produced here parses back
//! into an identical [`Problem`]: same variable order, bounds, costs, rows and integrality marks.
//! Numbers use Rust's shortest round-trip formatting.
//!
//! ```text
//! \ Problem: example
//! Minimize
//!  obj: + 3 x + 2 y
//! Subject To
//!  c0: + x + y >= 4
//! Bounds
//!  0 <= x <= 10
//!  y >= 0
//! Generals
//!  x
//! End
//! ```

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::{ObjectiveSense, Problem, RowSense, SolverError, VarId, Variable};

fn num(v: f64) -> String {
    if v == f64::INFINITY {
        "+inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v:?}")
    }
}

fn push_term(line: &mut String, coef: f64, name: &str) {
    if coef.is_sign_negative() {
        let _ = write!(line, " - {} {name}", num(-coef));
    } else {
        let _ = write!(line, " + {} {name}", num(coef));
    }
}

/// Render a problem as LP text.
pub fn write_lp_string(problem: &Problem) -> Result<String, SolverError> {
    for v in &problem.variables {
        check_name(&v.name)?;
    }
    let mut out = String::new();
    if !problem.name.is_empty() {
        let _ = writeln!(out, "\\ Problem: {}", problem.name);
    }
    out.push_str(match problem.sense {
        ObjectiveSense::Minimize => "Minimize\n",
        ObjectiveSense::Maximize => "Maximize\n",
    });
    let mut line = String::from(" obj:");
    let mut any = false;
    for v in problem.variables.iter().filter(|v| v.cost != 0.0) {
        push_term(&mut line, v.cost, &v.name);
        any = true;
    }
    if !any {
        if let Some(v) = problem.variables.first() {
            push_term(&mut line, 0.0, &v.name);
        }
    }
    out.push_str(&line);
    out.push('\n');

    out.push_str("Subject To\n");
    for c in &problem.constraints {
        check_name(&c.name)?;
        if c.terms.is_empty() {
            return Err(SolverError::EmptyConstraint(c.name.clone()));
        }
        let mut line = format!(" {}:", c.name);
        for &(v, a) in &c.terms {
            push_term(&mut line, a, &problem.variables[v.0].name);
        }
        let _ = write!(line, " {} {}", c.sense.symbol(), num(c.rhs));
        out.push_str(&line);
        out.push('\n');
    }

    out.push_str("Bounds\n");
    for v in &problem.variables {
        let line = match (v.lower.is_finite(), v.upper.is_finite()) {
            (false, false) => format!(" {} free", v.name),
            (true, false) => format!(" {} >= {}", v.name, num(v.lower)),
            (false, true) => format!(" -inf <= {} <= {}", v.name, num(v.upper)),
            (true, true) if v.lower == v.upper => format!(" {} = {}", v.name, num(v.lower)),
            (true, true) => format!(" {} <= {} <= {}", num(v.lower), v.name, num(v.upper)),
        };
        out.push_str(&line);
        out.push('\n');
    }

    if problem.has_integers() {
        out.push_str("Generals\n");
        for v in problem.variables.iter().filter(|v| v.integer) {
            let _ = writeln!(out, " {}", v.name);
        }
    }
    out.push_str("End\n");
    Ok(out)
}

pub fn export_lp_file(problem: &Problem, path: impl AsRef<Path>) -> Result<(), SolverError> {
    let text = write_lp_string(problem)?;
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_lp_file(path: impl AsRef<Path>) -> Result<Problem, SolverError> {
    let text = std::fs::read_to_string(path)?;
    parse_lp_str(&text)
}

fn is_name_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || "!\"#$%&()/,.;?@_`'{}|~".contains(c)
}

fn check_name(name: &str) -> Result<(), SolverError> {
    let first_ok = name
        .chars()
        .next()
        .is_some_and(|c| !c.is_ascii_digit() && c != '.' && is_name_char(c));
    if first_ok && name.chars().all(is_name_char) && name.len() <= 255 {
        Ok(())
    } else {
        Err(SolverError::InvalidProblem(format!(
            "`{name}` is not a valid LP-format identifier"
        )))
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Name(String),
    Sign(f64),
    Colon,
    Cmp(RowSense),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Section {
    Objective,
    Constraints,
    Bounds,
    Generals,
    Binaries,
    End,
}

fn section_keyword(line: &str) -> Option<(Section, Option<ObjectiveSense>)> {
    let l = line.trim().to_ascii_lowercase();
    let l = l.split_whitespace().collect::<Vec<_>>().join(" ");
    Some(match l.as_str() {
        "minimize" | "minimise" | "minimum" | "min" => {
            (Section::Objective, Some(ObjectiveSense::Minimize))
        }
        "maximize" | "maximise" | "maximum" | "max" => {
            (Section::Objective, Some(ObjectiveSense::Maximize))
        }
        "subject to" | "such that" | "st" | "s.t." | "st." => (Section::Constraints, None),
        "bounds" | "bound" => (Section::Bounds, None),
        "generals" | "general" | "gen" | "integers" => (Section::Generals, None),
        "binaries" | "binary" | "bin" => (Section::Binaries, None),
        "end" => (Section::End, None),
        _ => return None,
    })
}

fn tokenize(text: &str, line: usize) -> Result<Vec<Tok>, SolverError> {
    let err = |message: String| SolverError::LpParse { line, message };
    let chars: Vec<char> = text.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == ':' {
            toks.push(Tok::Colon);
            i += 1;
        } else if c == '<' || c == '>' || c == '=' {
            let mut j = i + 1;
            while j < chars.len() && (chars[j] == '=' || chars[j] == '<' || chars[j] == '>') {
                j += 1;
            }
            let op: String = chars[i..j].iter().collect();
            let sense = match op.as_str() {
                "<" | "<=" | "=<" => RowSense::Le,
                ">" | ">=" | "=>" => RowSense::Ge,
                "=" | "==" => RowSense::Eq,
                _ => return Err(err(format!("unknown operator `{op}`"))),
            };
            toks.push(Tok::Cmp(sense));
            i = j;
        } else if c == '+' || c == '-' {
            // Signed infinity literals.
            let rest: String = chars[i + 1..].iter().take(8).collect::<String>().to_ascii_lowercase();
            let s = if c == '+' { 1.0 } else { -1.0 };
            if rest.starts_with("infinity") {
                toks.push(Tok::Num(s * f64::INFINITY));
                i += 9;
            } else if rest.starts_with("inf")
                && !chars.get(i + 4).is_some_and(|&ch| is_name_char(ch))
            {
                toks.push(Tok::Num(s * f64::INFINITY));
                i += 4;
            } else {
                toks.push(Tok::Sign(s));
                i += 1;
            }
        } else if c.is_ascii_digit() || c == '.' {
            let mut j = i;
            while j < chars.len() && (chars[j].is_ascii_digit() || chars[j] == '.') {
                j += 1;
            }
            if j < chars.len() && (chars[j] == 'e' || chars[j] == 'E') {
                let mut k = j + 1;
                if k < chars.len() && (chars[k] == '+' || chars[k] == '-') {
                    k += 1;
                }
                if k < chars.len() && chars[k].is_ascii_digit() {
                    while k < chars.len() && chars[k].is_ascii_digit() {
                        k += 1;
                    }
                    j = k;
                }
            }
            let s: String = chars[i..j].iter().collect();
            let v = s
                .parse::<f64>()
                .map_err(|_| err(format!("bad number `{s}`")))?;
            toks.push(Tok::Num(v));
            i = j;
        } else if is_name_char(c) {
            let mut j = i;
            while j < chars.len() && is_name_char(chars[j]) {
                j += 1;
            }
            let s: String = chars[i..j].iter().collect();
            let lower = s.to_ascii_lowercase();
            if lower == "inf" || lower == "infinity" {
                toks.push(Tok::Num(f64::INFINITY));
            } else {
                toks.push(Tok::Name(s));
            }
            i = j;
        } else {
            return Err(err(format!("unexpected character `{c}`")));
        }
    }
    Ok(toks)
}

struct Builder {
    problem: Problem,
    index: HashMap<String, VarId>,
    bounded: Vec<bool>,
    bounds_order: Vec<VarId>,
}

impl Builder {
    fn var(&mut self, name: &str) -> VarId {
        if let Some(&v) = self.index.get(name) {
            return v;
        }
        let id = self.problem.add_nonneg(name, 0.0);
        self.index.insert(name.to_string(), id);
        self.bounded.push(false);
        id
    }
}

/// Parse `[label:] (+|-)? [coef] name ...` into terms; returns the label and consumed count.
fn parse_linear(
    toks: &[Tok],
    b: &mut Builder,
    line: usize,
) -> Result<(Option<String>, Vec<(VarId, f64)>, usize), SolverError> {
    let err = |message: &str| SolverError::LpParse {
        line,
        message: message.into(),
    };
    let mut pos = 0;
    let mut label = None;
    if let (Some(Tok::Name(n)), Some(Tok::Colon)) = (toks.first(), toks.get(1)) {
        label = Some(n.clone());
        pos = 2;
    }
    let mut terms = Vec::new();
    while pos < toks.len() {
        let mut sign = 1.0;
        let mut saw_sign = false;
        while let Some(Tok::Sign(s)) = toks.get(pos) {
            sign *= s;
            saw_sign = true;
            pos += 1;
        }
        let mut coef = 1.0;
        let mut saw_coef = false;
        if let Some(Tok::Num(v)) = toks.get(pos) {
            // A bare number followed by a comparison is a constant, not a term.
            if !matches!(toks.get(pos + 1), Some(Tok::Name(_))) {
                if saw_sign {
                    return Err(err("dangling sign before constant"));
                }
                break;
            }
            coef = *v;
            saw_coef = true;
            pos += 1;
        }
        match toks.get(pos) {
            Some(Tok::Name(n)) => {
                let v = b.var(n);
                terms.push((v, sign * coef));
                pos += 1;
            }
            _ if saw_sign || saw_coef => return Err(err("expected a variable name")),
            _ => break,
        }
    }
    Ok((label, terms, pos))
}

/// Parse LP text into a [`Problem`].
pub fn parse_lp_str(text: &str) -> Result<Problem, SolverError> {
    let mut b = Builder {
        problem: Problem::new("", ObjectiveSense::Minimize),
        index: HashMap::new(),
        bounded: Vec::new(),
        bounds_order: Vec::new(),
    };
    let mut section: Option<Section> = None;
    // Statement accumulator for objective / constraints, which may span lines.
    let mut pending: Vec<Tok> = Vec::new();
    let mut pending_line = 0usize;
    let mut objective: Vec<(VarId, f64)> = Vec::new();
    let mut objective_seen = false;
    let mut row_counter = 0usize;

    let flush_objective = |pending: &mut Vec<Tok>,
                           b: &mut Builder,
                           objective: &mut Vec<(VarId, f64)>,
                           line: usize|
     -> Result<(), SolverError> {
        if pending.is_empty() {
            return Ok(());
        }
        let (_, terms, used) = parse_linear(pending, b, line)?;
        if used != pending.len() {
            return Err(SolverError::LpParse {
                line,
                message: "trailing tokens in objective".into(),
            });
        }
        objective.extend(terms);
        pending.clear();
        Ok(())
    };

    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let (content, comment) = match raw.find('\\') {
            Some(p) => (&raw[..p], Some(&raw[p + 1..])),
            None => (raw, None),
        };
        if section.is_none() && b.problem.name.is_empty() {
            if let Some(name) = comment.and_then(|c| c.trim().strip_prefix("Problem:")) {
                b.problem.name = name.trim().to_string();
            }
        }
        if content.trim().is_empty() {
            continue;
        }
        if let Some((next, sense)) = section_keyword(content) {
            if section == Some(Section::Objective) {
                flush_objective(&mut pending, &mut b, &mut objective, pending_line)?;
            }
            if section == Some(Section::Constraints) && !pending.is_empty() {
                return Err(SolverError::LpParse {
                    line: pending_line,
                    message: "unterminated constraint".into(),
                });
            }
            if let Some(s) = sense {
                b.problem.sense = s;
                objective_seen = true;
            }
            section = Some(next);
            if next == Section::End {
                break;
            }
            continue;
        }
        let toks = tokenize(content, lineno)?;
        match section {
            None => {
                return Err(SolverError::LpParse {
                    line: lineno,
                    message: "content before the objective section".into(),
                })
            }
            Some(Section::Objective) => {
                if pending.is_empty() {
                    pending_line = lineno;
                }
                pending.extend(toks);
            }
            Some(Section::Constraints) => {
                if pending.is_empty() {
                    pending_line = lineno;
                }
                pending.extend(toks);
                // A constraint is complete once it holds a comparison followed by a number.
                let complete = pending
                    .iter()
                    .position(|t| matches!(t, Tok::Cmp(_)))
                    .is_some_and(|p| p + 1 < pending.len());
                if complete {
                    let (label, terms, used) = parse_linear(&pending, &mut b, pending_line)?;
                    let rest = &pending[used..];
                    let (sense, rhs) = match rest {
                        [Tok::Cmp(s), Tok::Num(v)] => (*s, *v),
                        [Tok::Cmp(s), Tok::Sign(sg), Tok::Num(v)] => (*s, sg * v),
                        _ => {
                            return Err(SolverError::LpParse {
                                line: pending_line,
                                message: "expected `<sense> <rhs>` after constraint terms".into(),
                            })
                        }
                    };
                    let name = label.unwrap_or_else(|| format!("R{row_counter}"));
                    row_counter += 1;
                    b.problem.add_constraint(name, terms, sense, rhs);
                    pending.clear();
                }
            }
            Some(Section::Bounds) => parse_bound(&toks, &mut b, lineno)?,
            Some(Section::Generals) | Some(Section::Binaries) => {
                for t in toks {
                    let Tok::Name(n) = t else {
                        return Err(SolverError::LpParse {
                            line: lineno,
                            message: "expected variable names".into(),
                        });
                    };
                    let v = b.var(&n);
                    b.problem.variables[v.0].integer = true;
                    if section == Some(Section::Binaries) {
                        b.problem.variables[v.0].lower = 0.0;
                        b.problem.variables[v.0].upper = 1.0;
                    }
                }
            }
            Some(Section::End) => unreachable!(),
        }
    }
    if section == Some(Section::Objective) {
        flush_objective(&mut pending, &mut b, &mut objective, pending_line)?;
    }
    if !objective_seen {
        return Err(SolverError::LpParse {
            line: 1,
            message: "missing objective section".into(),
        });
    }
    for (v, c) in objective {
        b.problem.variables[v.0].cost += c;
    }

    // Order variables as listed in Bounds, then any others by first appearance.
    let Builder {
        mut problem,
        bounds_order,
        ..
    } = b;
    let n = problem.variables.len();
    let mut order: Vec<usize> = Vec::with_capacity(n);
    let mut placed = vec![false; n];
    for v in bounds_order {
        if !placed[v.0] {
            placed[v.0] = true;
            order.push(v.0);
        }
    }
    order.extend((0..n).filter(|&j| !placed[j]));
    let mut remap = vec![0usize; n];
    for (new, &old) in order.iter().enumerate() {
        remap[old] = new;
    }
    let vars: Vec<Variable> = order.iter().map(|&j| problem.variables[j].clone()).collect();
    problem.variables = vars;
    for c in &mut problem.constraints {
        for t in &mut c.terms {
            t.0 = VarId(remap[t.0 .0]);
        }
    }
    Ok(problem)
}

fn parse_bound(toks: &[Tok], b: &mut Builder, line: usize) -> Result<(), SolverError> {
    let err = |m: &str| SolverError::LpParse {
        line,
        message: m.into(),
    };
    let signed = |toks: &[Tok], at: usize| -> Option<(f64, usize)> {
        match (toks.get(at), toks.get(at + 1)) {
            (Some(Tok::Num(v)), _) => Some((*v, 1)),
            (Some(Tok::Sign(s)), Some(Tok::Num(v))) => Some((s * v, 2)),
            _ => None,
        }
    };
    let set = |b: &mut Builder, name: &str, lower: Option<f64>, upper: Option<f64>| {
        let v = b.var(name);
        if !b.bounded[v.0] {
            b.bounded[v.0] = true;
            b.bounds_order.push(v);
        }
        let var = &mut b.problem.variables[v.0];
        if let Some(l) = lower {
            var.lower = l;
        }
        if let Some(u) = upper {
            var.upper = u;
        }
    };
    match toks {
        [Tok::Name(n), Tok::Name(kw)] if kw.eq_ignore_ascii_case("free") => {
            set(b, n, Some(f64::NEG_INFINITY), Some(f64::INFINITY));
            return Ok(());
        }
        _ => {}
    }
    // name <sense> value
    if let (Some(Tok::Name(n)), Some(Tok::Cmp(s))) = (toks.first(), toks.get(1)) {
        let (v, used) = signed(toks, 2).ok_or_else(|| err("expected bound value"))?;
        if 2 + used != toks.len() {
            return Err(err("trailing tokens in bound"));
        }
        match s {
            RowSense::Le => set(b, n, None, Some(v)),
            RowSense::Ge => set(b, n, Some(v), None),
            RowSense::Eq => set(b, n, Some(v), Some(v)),
        }
        return Ok(());
    }
    // value <sense> name [<sense> value]
    let (lhs, used) = signed(toks, 0).ok_or_else(|| err("malformed bound"))?;
    let (Some(Tok::Cmp(s1)), Some(Tok::Name(n))) = (toks.get(used), toks.get(used + 1)) else {
        return Err(err("malformed bound"));
    };
    let n = n.clone();
    match s1 {
        RowSense::Le => set(b, &n, Some(lhs), None),
        RowSense::Ge => set(b, &n, None, Some(lhs)),
        RowSense::Eq => set(b, &n, Some(lhs), Some(lhs)),
    }
    let at = used + 2;
    if at < toks.len() {
        let Some(Tok::Cmp(s2)) = toks.get(at) else {
            return Err(err("malformed double bound"));
        };
        let (rhs, used2) = signed(toks, at + 1).ok_or_else(|| err("expected bound value"))?;
        if at + 1 + used2 != toks.len() {
            return Err(err("trailing tokens in bound"));
        }
        match s2 {
            RowSense::Le => set(b, &n, None, Some(rhs)),
            RowSense::Ge => set(b, &n, Some(rhs), None),
            RowSense::Eq => set(b, &n, Some(rhs), Some(rhs)),
        }
    }
    Ok(())
}
