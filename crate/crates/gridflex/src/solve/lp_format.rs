//! CPLEX LP-format text export and a matching importer, used for
//! cross-checking problems against external solvers.

use super::{LpProblem, MipProblem, SolveError, SparseRow, INF};
use std::collections::HashMap;
use std::fmt::Write as _;

fn var_name(p: &LpProblem, j: usize) -> String {
    match &p.names {
        Some(names) if j < names.len() => {
            let mut s: String = names[j]
                .chars()
                .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' })
                .collect();
            if s.is_empty() || s.chars().next().unwrap().is_ascii_digit() {
                s.insert(0, 'v');
            }
            format!("{s}_{j}")
        }
        _ => format!("x{j}"),
    }
}

fn write_terms(out: &mut String, coeffs: &[(usize, f64)], names: &[String]) {
    let mut first = true;
    for &(j, a) in coeffs {
        if a == 0.0 {
            continue;
        }
        if first {
            if a < 0.0 {
                out.push_str("- ");
            }
            first = false;
        } else if a < 0.0 {
            out.push_str(" - ");
        } else {
            out.push_str(" + ");
        }
        let mag = a.abs();
        if (mag - 1.0).abs() < f64::EPSILON {
            let _ = write!(out, "{}", names[j]);
        } else {
            let _ = write!(out, "{} {}", mag, names[j]);
        }
    }
    if first {
        out.push('0');
    }
}

/// Serializes an LP (plus optional binary markers) in CPLEX LP format.
pub fn write_lp_format(p: &LpProblem, binaries: &[usize]) -> String {
    let names: Vec<String> = (0..p.n_vars).map(|j| var_name(p, j)).collect();
    let mut s = String::new();
    s.push_str("Minimize\n obj: ");
    let obj: Vec<(usize, f64)> = p.objective.iter().cloned().enumerate().collect();
    write_terms(&mut s, &obj, &names);
    s.push_str("\nSubject To\n");
    for (i, row) in p.eq.iter().enumerate() {
        let _ = write!(s, " e{i}: ");
        write_terms(&mut s, &row.coeffs, &names);
        let _ = writeln!(s, " = {}", row.rhs);
    }
    for (i, row) in p.ineq.iter().enumerate() {
        let _ = write!(s, " c{i}: ");
        write_terms(&mut s, &row.coeffs, &names);
        let _ = writeln!(s, " <= {}", row.rhs);
    }
    s.push_str("Bounds\n");
    for j in 0..p.n_vars {
        let (l, u) = (p.lower[j], p.upper[j]);
        if l == -INF && u == INF {
            let _ = writeln!(s, " {} free", names[j]);
        } else if l == u {
            let _ = writeln!(s, " {} = {}", names[j], l);
        } else {
            let ls = if l == -INF { "-inf".to_string() } else { format!("{l}") };
            let us = if u == INF { "+inf".to_string() } else { format!("{u}") };
            let _ = writeln!(s, " {} <= {} <= {}", ls, names[j], us);
        }
    }
    if !binaries.is_empty() {
        s.push_str("Binaries\n");
        for &j in binaries {
            let _ = writeln!(s, " {}", names[j]);
        }
    }
    s.push_str("End\n");
    s
}

#[derive(PartialEq)]
enum Section {
    Preamble,
    Objective,
    Constraints,
    Bounds,
    Binaries,
    Done,
}

struct Builder {
    names: Vec<String>,
    index: HashMap<String, usize>,
    objective: Vec<(usize, f64)>,
    eq: Vec<SparseRow>,
    ineq: Vec<SparseRow>,
    bounds: Vec<(usize, f64, f64)>,
    binaries: Vec<usize>,
}

impl Builder {
    fn var(&mut self, name: &str) -> usize {
        if let Some(&j) = self.index.get(name) {
            return j;
        }
        let j = self.names.len();
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), j);
        j
    }
}

fn parse_number(tok: &str) -> Option<f64> {
    match tok {
        "-inf" | "-infinity" => Some(-INF),
        "+inf" | "inf" | "+infinity" | "infinity" => Some(INF),
        _ => tok.parse().ok(),
    }
}

/// Parses the LP-format subset emitted by [`write_lp_format`].
pub fn parse_lp_format(text: &str) -> Result<MipProblem, SolveError> {
    let mut b = Builder {
        names: Vec::new(),
        index: HashMap::new(),
        objective: Vec::new(),
        eq: Vec::new(),
        ineq: Vec::new(),
        bounds: Vec::new(),
        binaries: Vec::new(),
    };
    let mut section = Section::Preamble;
    // expressions may wrap across lines until a relation is found
    let mut pending: Vec<String> = Vec::new();

    let flush_constraint = |b: &mut Builder, toks: &[String]| -> Result<(), SolveError> {
        // strip label
        let mut toks = toks;
        let owned;
        if let Some(first) = toks.first() {
            if first.ends_with(':') {
                owned = toks[1..].to_vec();
                toks = &owned;
            }
        }
        let rel_pos = toks
            .iter()
            .position(|t| t == "=" || t == "<=" || t == ">=" || t == "=<" || t == "=>")
            .ok_or_else(|| SolveError::Malformed("constraint without relation".into()))?;
        let rhs: f64 = toks
            .get(rel_pos + 1)
            .and_then(|t| parse_number(t))
            .ok_or_else(|| SolveError::Malformed("constraint without rhs".into()))?;
        let coeffs = parse_expr(b, &toks[..rel_pos])?;
        match toks[rel_pos].as_str() {
            "=" => b.eq.push(SparseRow::new(coeffs, rhs)),
            "<=" | "=<" => b.ineq.push(SparseRow::new(coeffs, rhs)),
            ">=" | "=>" => {
                let neg: Vec<(usize, f64)> = coeffs.into_iter().map(|(j, a)| (j, -a)).collect();
                b.ineq.push(SparseRow::new(neg, -rhs));
            }
            _ => unreachable!(),
        }
        Ok(())
    };

    for raw in text.lines() {
        let line = raw.split('\\').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let lower = line.to_ascii_lowercase();
        let new_section = match lower.as_str() {
            "minimize" | "minimise" | "min" => Some(Section::Objective),
            "subject to" | "such that" | "st" | "s.t." => Some(Section::Constraints),
            "bounds" | "bound" => Some(Section::Bounds),
            "binaries" | "binary" | "bin" => Some(Section::Binaries),
            "end" => Some(Section::Done),
            _ => None,
        };
        if let Some(ns) = new_section {
            if !pending.is_empty() {
                match section {
                    Section::Objective => {
                        let toks = std::mem::take(&mut pending);
                        let toks = strip_label(&toks);
                        b.objective = parse_expr(&mut b, &toks)?;
                    }
                    Section::Constraints => {
                        let toks = std::mem::take(&mut pending);
                        flush_constraint(&mut b, &toks)?;
                    }
                    _ => pending.clear(),
                }
            }
            section = ns;
            continue;
        }
        let toks: Vec<String> = tokenize(line);
        match section {
            Section::Preamble | Section::Done => {}
            Section::Objective => pending.extend(toks),
            Section::Constraints => {
                pending.extend(toks);
                if pending.iter().any(|t| t == "=" || t == "<=" || t == ">=") {
                    let toks = std::mem::take(&mut pending);
                    flush_constraint(&mut b, &toks)?;
                }
            }
            Section::Bounds => parse_bound_line(&mut b, &toks)?,
            Section::Binaries => {
                for t in toks {
                    let j = b.var(&t);
                    b.binaries.push(j);
                }
            }
        }
    }

    let n = b.names.len();
    let mut lp = LpProblem::new(n);
    lp.names = Some(b.names.clone());
    for (j, a) in b.objective {
        lp.objective[j] += a;
    }
    lp.eq = b.eq;
    lp.ineq = b.ineq;
    // LP-format default is x >= 0 unless overridden
    lp.lower = vec![0.0; n];
    lp.upper = vec![INF; n];
    for (j, l, u) in b.bounds {
        lp.lower[j] = l;
        lp.upper[j] = u;
    }
    let mut binaries = b.binaries;
    for &j in &binaries {
        lp.lower[j] = lp.lower[j].max(0.0);
        lp.upper[j] = lp.upper[j].min(1.0);
    }
    binaries.sort_unstable();
    binaries.dedup();
    Ok(MipProblem { lp, binaries })
}

fn strip_label(toks: &[String]) -> Vec<String> {
    match toks.first() {
        Some(t) if t.ends_with(':') => toks[1..].to_vec(),
        _ => toks.to_vec(),
    }
}

/// Splits a line into tokens, keeping `<=`, `>=`, `=`, `+`, `-`, numbers
/// and identifiers separate.
fn tokenize(line: &str) -> Vec<String> {
    let spaced = line
        .replace("<=", " <= ")
        .replace(">=", " >= ")
        .replace("=<", " <= ")
        .replace("=>", " >= ");
    let mut toks = Vec::new();
    for tok in spaced.split_whitespace() {
        if tok == "<=" || tok == ">=" {
            toks.push(tok.to_string());
            continue;
        }
        if let Some(rest) = tok.strip_prefix('=') {
            toks.push("=".to_string());
            if !rest.is_empty() {
                toks.push(rest.to_string());
            }
            continue;
        }
        if let Some(rest) = tok.strip_suffix('=') {
            if !rest.is_empty() {
                toks.push(rest.to_string());
            }
            toks.push("=".to_string());
            continue;
        }
        toks.push(tok.to_string());
    }
    toks
}

fn parse_expr(b: &mut Builder, toks: &[String]) -> Result<Vec<(usize, f64)>, SolveError> {
    let mut coeffs: Vec<(usize, f64)> = Vec::new();
    let mut sign = 1.0;
    let mut coef: Option<f64> = None;
    for t in toks {
        match t.as_str() {
            "+" => {}
            "-" => sign = -sign,
            _ => {
                if let Some(v) = parse_number(t) {
                    coef = Some(coef.unwrap_or(1.0) * v);
                } else {
                    let j = b.var(t);
                    coeffs.push((j, sign * coef.unwrap_or(1.0)));
                    sign = 1.0;
                    coef = None;
                }
            }
        }
    }
    if let Some(c) = coef {
        // a bare constant term; representable only when zero
        if c != 0.0 {
            return Err(SolveError::Malformed("constant term in expression".into()));
        }
    }
    Ok(coeffs)
}

fn parse_bound_line(b: &mut Builder, toks: &[String]) -> Result<(), SolveError> {
    match toks.len() {
        2 if toks[1].eq_ignore_ascii_case("free") => {
            let j = b.var(&toks[0]);
            b.bounds.push((j, -INF, INF));
            Ok(())
        }
        3 => {
            // "x <= u", "x >= l", "x = v", "l <= x"
            if let Some(v) = parse_number(&toks[2]) {
                let j = b.var(&toks[0]);
                match toks[1].as_str() {
                    "<=" => b.bounds.push((j, 0.0, v)),
                    ">=" => b.bounds.push((j, v, INF)),
                    "=" => b.bounds.push((j, v, v)),
                    _ => return Err(SolveError::Malformed(format!("bad bound line: {toks:?}"))),
                }
                Ok(())
            } else if let Some(v) = parse_number(&toks[0]) {
                let j = b.var(&toks[2]);
                match toks[1].as_str() {
                    "<=" => b.bounds.push((j, v, INF)),
                    ">=" => b.bounds.push((j, -INF, v)),
                    _ => return Err(SolveError::Malformed(format!("bad bound line: {toks:?}"))),
                }
                Ok(())
            } else {
                Err(SolveError::Malformed(format!("bad bound line: {toks:?}")))
            }
        }
        5 if toks[1] == "<=" && toks[3] == "<=" => {
            let l = parse_number(&toks[0])
                .ok_or_else(|| SolveError::Malformed("bad lower bound".into()))?;
            let u = parse_number(&toks[4])
                .ok_or_else(|| SolveError::Malformed("bad upper bound".into()))?;
            let j = b.var(&toks[2]);
            b.bounds.push((j, l, u));
            Ok(())
        }
        _ => Err(SolveError::Malformed(format!("bad bound line: {toks:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::super::{solve_lp, solve_mip, LpProblem, MipProblem, SolveOpts, SparseRow, INF};
    use super::*;

    #[test]
    fn lp_round_trip_same_optimum() {
        let mut p = LpProblem::new(3);
        p.objective = vec![1.0, -2.0, 0.5];
        p.lower = vec![0.0, 0.0, -INF];
        p.upper = vec![10.0, 4.0, INF];
        p.eq.push(SparseRow::new(vec![(0, 1.0), (2, 1.0)], 2.0));
        p.ineq.push(SparseRow::new(vec![(0, 1.0), (1, 2.0), (2, -1.0)], 7.0));
        let text = write_lp_format(&p, &[]);
        let back = parse_lp_format(&text).unwrap();
        let a = solve_lp(&p, &SolveOpts::default()).unwrap();
        let b = solve_lp(&back.lp, &SolveOpts::default()).unwrap();
        assert_eq!(a.status, b.status);
        assert!((a.objective - b.objective).abs() < 1e-9);
    }

    #[test]
    fn mip_round_trip_same_optimum() {
        let mut lp = LpProblem::new(3);
        lp.objective = vec![-10.0, -6.0, -4.0];
        lp.lower = vec![0.0; 3];
        lp.upper = vec![1.0; 3];
        lp.ineq.push(SparseRow::new(vec![(0, 5.0), (1, 4.0), (2, 3.0)], 8.0));
        let p = MipProblem { lp, binaries: vec![0, 1, 2] };
        let text = write_lp_format(&p.lp, &p.binaries);
        let back = parse_lp_format(&text).unwrap();
        let a = solve_mip(&p, &SolveOpts::default()).unwrap();
        let b = solve_mip(&back, &SolveOpts::default()).unwrap();
        assert!((a.objective - b.objective).abs() < 1e-9);
    }

    #[test]
    fn named_variables_survive_export() {
        let mut p = LpProblem::new(2);
        p.objective = vec![1.0, 1.0];
        p.lower = vec![0.0, 0.0];
        p.names = Some(vec!["p[g1,t1]".into(), "f[l1,t1]".into()]);
        p.eq.push(SparseRow::new(vec![(0, 1.0), (1, -1.0)], 0.0));
        let text = write_lp_format(&p, &[]);
        assert!(text.contains("p_g1_t1__0"));
        let back = parse_lp_format(&text).unwrap();
        assert_eq!(back.lp.n_vars, 2);
    }
}
