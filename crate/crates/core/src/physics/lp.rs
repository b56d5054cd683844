//! CPLEX-style LP text export and a reader for the subset it emits.

use std::collections::HashMap;
use std::fmt::Write;

use thiserror::Error;

use super::milp::{Constraint, MilpInstance, Sense, VarKind, Variable};

const WRAP: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
}

fn number(v: f64) -> String {
    if v == f64::INFINITY {
        "+inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v:?}")
    }
}

fn push_terms(out: &mut String, head: String, terms: &[(usize, f64)], vars: &[Variable], tail: &str) {
    let mut line = head;
    for &(i, c) in terms {
        let tok = if c < 0.0 {
            format!(" - {} {}", number(-c), vars[i].name)
        } else {
            format!(" + {} {}", number(c), vars[i].name)
        };
        if line.len() + tok.len() > WRAP {
            out.push_str(&line);
            out.push('\n');
            line = String::from("   ");
        }
        line.push_str(&tok);
    }
    line.push_str(tail);
    out.push_str(&line);
    out.push('\n');
}

/// Serializes `m` in declaration order. Every variable gets an explicit bound line.
pub fn export_milp(m: &MilpInstance) -> String {
    let mut out = String::new();
    out.push_str("\\ drone operation model\nMinimize\n");
    push_terms(&mut out, " obj:".into(), &m.objective, &m.variables, "");
    out.push_str("Subject To\n");
    for c in &m.constraints {
        let op = match c.sense {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        };
        let terms: Vec<(usize, f64)> = if c.terms.is_empty() {
            // An empty row still needs a variable reference to be well formed.
            vec![(0, 0.0)]
        } else {
            c.terms.clone()
        };
        push_terms(&mut out, format!(" {}:", c.name), &terms, &m.variables, &format!(" {op} {}", number(c.rhs)));
    }
    out.push_str("Bounds\n");
    for v in &m.variables {
        let _ = match (v.lower.is_finite(), v.upper.is_finite()) {
            (false, false) => writeln!(out, " {} free", v.name),
            (true, false) => writeln!(out, " {} >= {}", v.name, number(v.lower)),
            (false, true) => writeln!(out, " -inf <= {} <= {}", v.name, number(v.upper)),
            (true, true) => writeln!(out, " {} <= {} <= {}", number(v.lower), v.name, number(v.upper)),
        };
    }
    let binaries: Vec<&str> = m.variables.iter().filter(|v| v.kind == VarKind::Binary).map(|v| v.name.as_str()).collect();
    if !binaries.is_empty() {
        out.push_str("Binaries\n");
        let mut line = String::new();
        for b in binaries {
            if line.len() + b.len() + 1 > WRAP {
                out.push_str(&line);
                out.push('\n');
                line.clear();
            }
            line.push(' ');
            line.push_str(b);
        }
        out.push_str(&line);
        out.push('\n');
    }
    out.push_str("End\n");
    out
}

/// Model recovered from LP text. Variables appear in bound-section order.
#[derive(Debug, Clone, PartialEq)]
pub struct LpModel {
    pub variables: Vec<Variable>,
    pub objective: Vec<(usize, f64)>,
    pub constraints: Vec<Constraint>,
}

impl LpModel {
    /// True when rows, bounds, kinds and objective agree with `m` exactly.
    pub fn same_matrix(&self, m: &MilpInstance) -> bool {
        let strip = |v: &Variable| (v.name.clone(), v.kind, v.lower.to_bits(), v.upper.to_bits());
        let rows = |c: &Constraint| (c.name.clone(), c.terms.clone(), c.sense, c.rhs.to_bits());
        self.variables.iter().map(strip).eq(m.variables.iter().map(strip))
            && self.objective == m.objective
            && self.constraints.iter().map(rows).eq(m.constraints.iter().map(rows))
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Objective,
    Rows,
    Bounds,
    Binaries,
    Done,
}

fn parse_num(tok: &str, line: usize) -> Result<f64, LpError> {
    match tok.to_ascii_lowercase().as_str() {
        "+inf" | "inf" | "+infinity" | "infinity" => Ok(f64::INFINITY),
        "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
        _ => tok.parse().map_err(|_| LpError::Syntax {
            line,
            msg: format!("bad number {tok:?}"),
        }),
    }
}

struct Reader {
    names: HashMap<String, usize>,
    vars: Vec<Variable>,
}

impl Reader {
    fn var(&mut self, name: &str) -> usize {
        if let Some(&i) = self.names.get(name) {
            return i;
        }
        self.vars.push(Variable {
            name: name.to_string(),
            kind: VarKind::Continuous,
            lower: 0.0,
            upper: f64::INFINITY,
            symbol: String::new(),
        });
        self.names.insert(name.to_string(), self.vars.len() - 1);
        self.vars.len() - 1
    }

    /// Parses `[+|-] coef name ...` into terms (names are resolved lazily).
    fn linear(toks: &[&str], line: usize) -> Result<Vec<(String, f64)>, LpError> {
        let mut out = Vec::new();
        let mut sign = 1.0;
        let mut coef: Option<f64> = None;
        for &t in toks {
            match t {
                "+" => sign = 1.0,
                "-" => sign = -1.0,
                _ if t.starts_with(|c: char| c.is_ascii_digit() || c == '.') => coef = Some(parse_num(t, line)?),
                _ => {
                    out.push((t.to_string(), sign * coef.unwrap_or(1.0)));
                    sign = 1.0;
                    coef = None;
                }
            }
        }
        if coef.is_some() {
            return Err(LpError::Syntax {
                line,
                msg: "coefficient without a variable".into(),
            });
        }
        Ok(out)
    }
}

/// Reads the LP subset produced by [`export_milp`].
pub fn parse_lp(text: &str) -> Result<LpModel, LpError> {
    let mut section = Section::None;
    // Statements may span lines; gather (first line, tokens) per statement.
    let mut statements: Vec<(Section, usize, Vec<String>)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('\\').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let key = line.to_ascii_lowercase();
        let next = match key.as_str() {
            "minimize" | "minimise" | "min" => Some(Section::Objective),
            "subject to" | "such that" | "st" | "s.t." => Some(Section::Rows),
            "bounds" => Some(Section::Bounds),
            "binaries" | "binary" | "bin" => Some(Section::Binaries),
            "end" => Some(Section::Done),
            _ => None,
        };
        if let Some(s) = next {
            section = s;
            continue;
        }
        let toks: Vec<String> = line
            .replace("<=", " <= ")
            .replace(">=", " >= ")
            .replace(':', ": ")
            .split_whitespace()
            .map(str::to_string)
            .collect();
        let starts_new = match section {
            Section::Rows | Section::Objective => toks[0].ends_with(':'),
            Section::Bounds | Section::Binaries => true,
            _ => {
                return Err(LpError::Syntax {
                    line: lineno,
                    msg: "content outside a section".into(),
                })
            }
        };
        match statements.last_mut() {
            Some(last) if !starts_new && last.0 == section => last.2.extend(toks),
            _ => statements.push((section, lineno, toks)),
        }
    }
    if section != Section::Done {
        return Err(LpError::Syntax {
            line: text.lines().count(),
            msg: "missing End".into(),
        });
    }

    let mut rd = Reader {
        names: HashMap::new(),
        vars: Vec::new(),
    };
    // Bounds declare variables in order; resolve them first.
    for (sec, line, toks) in &statements {
        if *sec != Section::Bounds {
            continue;
        }
        let t: Vec<&str> = toks.iter().map(String::as_str).collect();
        match t.as_slice() {
            [name, "free"] => {
                let i = rd.var(name);
                rd.vars[i].lower = f64::NEG_INFINITY;
            }
            [name, ">=", lo] => {
                let i = rd.var(name);
                rd.vars[i].lower = parse_num(lo, *line)?;
            }
            [name, "<=", hi] => {
                let i = rd.var(name);
                rd.vars[i].upper = parse_num(hi, *line)?;
            }
            [lo, "<=", name, "<=", hi] => {
                let i = rd.var(name);
                rd.vars[i].lower = parse_num(lo, *line)?;
                rd.vars[i].upper = parse_num(hi, *line)?;
            }
            _ => {
                return Err(LpError::Syntax {
                    line: *line,
                    msg: "unrecognized bound".into(),
                })
            }
        }
    }
    let mut objective = Vec::new();
    let mut constraints = Vec::new();
    for (sec, line, toks) in &statements {
        let t: Vec<&str> = toks.iter().map(String::as_str).collect();
        match sec {
            Section::Objective => {
                let body = if t.first().is_some_and(|s| s.ends_with(':')) { &t[1..] } else { &t[..] };
                for (n, c) in Reader::linear(body, *line)? {
                    let i = rd.var(&n);
                    objective.push((i, c));
                }
            }
            Section::Rows => {
                let name = t[0].trim_end_matches(':').to_string();
                let op = t.iter().position(|s| matches!(*s, "<=" | ">=" | "=" | "<" | ">" | "=<" | "=>"));
                let Some(op) = op else {
                    return Err(LpError::Syntax {
                        line: *line,
                        msg: "row without a sense".into(),
                    });
                };
                let sense = match t[op] {
                    "<=" | "<" | "=<" => Sense::Le,
                    ">=" | ">" | "=>" => Sense::Ge,
                    _ => Sense::Eq,
                };
                if op + 2 != t.len() {
                    return Err(LpError::Syntax {
                        line: *line,
                        msg: "expected a single right-hand side".into(),
                    });
                }
                let rhs = parse_num(t[op + 1], *line)?;
                let mut terms = Vec::new();
                for (n, c) in Reader::linear(&t[1..op], *line)? {
                    let i = rd.var(&n);
                    if c != 0.0 {
                        terms.push((i, c));
                    }
                }
                constraints.push(Constraint {
                    name,
                    family: String::new(),
                    terms,
                    sense,
                    rhs,
                });
            }
            Section::Binaries => {
                for n in &t {
                    let i = rd.var(n);
                    rd.vars[i].kind = VarKind::Binary;
                }
            }
            _ => {}
        }
    }
    Ok(LpModel {
        variables: rd.vars,
        objective,
        constraints,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::milp::{MilpLayout, MilpMode};

    fn tiny() -> MilpInstance {
        MilpInstance {
            variables: vec![
                Variable {
                    name: "x".into(),
                    kind: VarKind::Continuous,
                    lower: f64::NEG_INFINITY,
                    upper: f64::INFINITY,
                    symbol: "x".into(),
                },
                Variable {
                    name: "b".into(),
                    kind: VarKind::Binary,
                    lower: 0.0,
                    upper: 1.0,
                    symbol: "b".into(),
                },
            ],
            constraints: vec![Constraint {
                name: "c0".into(),
                family: "c".into(),
                terms: vec![(0, 1.5), (1, -1e6)],
                sense: Sense::Le,
                rhs: -0.25,
            }],
            objective: vec![],
            mode: MilpMode::MinTime,
            coordinated: false,
            big_m: 1e6,
            layout: MilpLayout::default(),
        }
    }

    #[test]
    fn minimal_document() {
        let text = export_milp(&tiny());
        assert!(text.starts_with("\\"));
        assert!(text.contains("Minimize\n obj:\n"));
        assert!(text.contains(" c0: + 1.5 x - 1000000.0 b <= -0.25\n"));
        assert!(text.contains(" x free\n"));
        assert!(text.contains(" 0.0 <= b <= 1.0\n"));
        assert!(text.trim_end().ends_with("End"));
        assert!(parse_lp(&text).unwrap().same_matrix(&tiny()));
    }

    #[test]
    fn long_rows_wrap_and_reparse() {
        let mut m = tiny();
        for k in 0..200 {
            m.variables.push(Variable {
                name: format!("long_variable_name_{k}"),
                kind: VarKind::Continuous,
                lower: 0.0,
                upper: f64::INFINITY,
                symbol: "y".into(),
            });
        }
        m.constraints[0].terms.extend((2..202).map(|i| (i, 0.1 * i as f64)));
        m.objective = vec![(5, 2.0)];
        let text = export_milp(&m);
        assert!(text.lines().all(|l| l.len() <= WRAP + 40));
        assert!(parse_lp(&text).unwrap().same_matrix(&m));
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_lp("Minimize\n obj: x\nSubject To\n r: x\nEnd\n").is_err());
        assert!(parse_lp("Minimize\n obj: x\n").is_err());
    }
}
