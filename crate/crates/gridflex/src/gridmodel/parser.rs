//! MatPower `.m` case-file parser (bus/gen/branch/gencost subset).

use super::{Bus, CaseError, Generator, GridCase, Line, ValidationCode};

#[derive(Debug, Clone)]
pub struct ParseOptions {
    /// Lines with rateA = 0 are treated as uncapacitated and receive a
    /// sentinel capacity of this factor times total system demand.
    pub uncapacitated_factor: f64,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions { uncapacitated_factor: 10.0 }
    }
}

struct Matrix {
    /// (source line number, row values)
    rows: Vec<(usize, Vec<f64>)>,
}

/// Extracts `mpc.<name> = [ ... ];` as a numeric matrix.
fn extract_matrix(text: &str, name: &str) -> Result<Option<Matrix>, CaseError> {
    let needle = format!("mpc.{name}");
    let mut in_block = false;
    let mut rows = Vec::new();
    for (lineno0, raw) in text.lines().enumerate() {
        let lineno = lineno0 + 1;
        let line = raw.split('%').next().unwrap_or("").trim();
        if !in_block {
            if let Some(rest) = line.strip_prefix(&needle) {
                let rest = rest.trim_start();
                if let Some(rest) = rest.strip_prefix('=') {
                    let rest = rest.trim_start();
                    if rest.starts_with('[') {
                        in_block = true;
                        let inner = &rest[1..];
                        parse_matrix_rows(inner, lineno, &mut rows, &mut in_block)?;
                        if !in_block {
                            return Ok(Some(Matrix { rows }));
                        }
                    }
                }
            }
            continue;
        }
        parse_matrix_rows(line, lineno, &mut rows, &mut in_block)?;
        if !in_block {
            return Ok(Some(Matrix { rows }));
        }
    }
    if in_block {
        return Err(CaseError::Parse { line: 0, msg: format!("unterminated matrix mpc.{name}") });
    }
    Ok(None)
}

fn parse_matrix_rows(
    chunk: &str,
    lineno: usize,
    rows: &mut Vec<(usize, Vec<f64>)>,
    in_block: &mut bool,
) -> Result<(), CaseError> {
    let mut chunk = chunk;
    if let Some(pos) = chunk.find(']') {
        *in_block = false;
        chunk = &chunk[..pos];
    }
    for row_text in chunk.split(';') {
        let row_text = row_text.trim();
        if row_text.is_empty() {
            continue;
        }
        let mut vals = Vec::new();
        for tok in row_text.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| CaseError::Parse { line: lineno, msg: format!("bad number `{tok}`") })?;
            vals.push(v);
        }
        rows.push((lineno, vals));
    }
    Ok(())
}

fn extract_scalar(text: &str, name: &str) -> Result<Option<f64>, CaseError> {
    let needle = format!("mpc.{name}");
    for (lineno0, raw) in text.lines().enumerate() {
        let line = raw.split('%').next().unwrap_or("").trim();
        if let Some(rest) = line.strip_prefix(&needle) {
            let rest = rest.trim_start();
            if let Some(rest) = rest.strip_prefix('=') {
                let rest = rest.trim_end_matches(';').trim();
                let v: f64 = rest.parse().map_err(|_| CaseError::Parse {
                    line: lineno0 + 1,
                    msg: format!("bad scalar `{rest}` for mpc.{name}"),
                })?;
                return Ok(Some(v));
            }
        }
    }
    Ok(None)
}

pub fn parse_matpower(text: &str) -> Result<GridCase, CaseError> {
    parse_matpower_with(text, &ParseOptions::default())
}

pub fn parse_matpower_with(text: &str, opts: &ParseOptions) -> Result<GridCase, CaseError> {
    let base_mva = extract_scalar(text, "baseMVA")?
        .ok_or_else(|| CaseError::Parse { line: 0, msg: "missing mpc.baseMVA".into() })?;
    let bus = extract_matrix(text, "bus")?
        .ok_or_else(|| CaseError::Parse { line: 0, msg: "missing mpc.bus".into() })?;
    let gen = extract_matrix(text, "gen")?
        .ok_or_else(|| CaseError::Parse { line: 0, msg: "missing mpc.gen".into() })?;
    let branch = extract_matrix(text, "branch")?
        .ok_or_else(|| CaseError::Parse { line: 0, msg: "missing mpc.branch".into() })?;
    let gencost = extract_matrix(text, "gencost")?;

    let mut buses = Vec::new();
    let mut total_demand = 0.0;
    for (lineno, row) in &bus.rows {
        if row.len() < 3 {
            return Err(CaseError::Parse { line: *lineno, msg: "bus row needs >= 3 columns".into() });
        }
        let id = row[0] as usize;
        let bus_type = row[1] as i64;
        let pd = row[2];
        total_demand += pd.max(0.0);
        buses.push(Bus { id, demand: vec![pd], is_reference: bus_type == 3 });
    }

    let mut generators = Vec::new();
    let mut active_gen_rows = Vec::new();
    for (lineno, row) in &gen.rows {
        if row.len() < 9 {
            return Err(CaseError::Parse { line: *lineno, msg: "gen row needs >= 9 columns".into() });
        }
        let status = if row.len() > 7 { row[7] } else { 1.0 };
        active_gen_rows.push((generators.len(), status != 0.0));
        if status == 0.0 {
            continue;
        }
        let p_max = row[8].max(0.0);
        // RAMP_30 column when present and positive, else uncapacitated.
        let ramp = if row.len() > 18 && row[18] > 0.0 { row[18].min(p_max) } else { p_max };
        generators.push(Generator {
            id: generators.len() + 1,
            bus: row[0] as usize,
            p_max: vec![p_max],
            ramp,
            cost: vec![0.0],
        });
    }

    if let Some(gc) = gencost {
        // gencost rows align with gen rows; a second block of rows for
        // reactive cost may follow and is ignored.
        let mut gi = 0usize;
        for ((lineno, row), (_, active)) in gc.rows.iter().zip(active_gen_rows.iter()) {
            if row.len() < 4 {
                return Err(CaseError::Parse { line: *lineno, msg: "gencost row needs >= 4 columns".into() });
            }
            let model = row[0] as i64;
            if model != 2 {
                return Err(CaseError::Parse {
                    line: *lineno,
                    msg: "only polynomial gencost (model 2) is supported".into(),
                });
            }
            let ncost = row[3] as usize;
            if row.len() < 4 + ncost {
                return Err(CaseError::Parse { line: *lineno, msg: "gencost row shorter than ncost".into() });
            }
            let coeffs = &row[4..4 + ncost];
            // Polynomial ordering is highest degree first.
            let linear = match ncost {
                0 => 0.0,
                1 => 0.0,
                2 => coeffs[0],
                3 => {
                    if coeffs[0] != 0.0 {
                        return Err(CaseError::Parse {
                            line: *lineno,
                            msg: "quadratic cost terms are not supported; clearing objective is linear".into(),
                        });
                    }
                    coeffs[1]
                }
                _ => {
                    return Err(CaseError::Parse {
                        line: *lineno,
                        msg: format!("unsupported gencost degree (ncost = {ncost})"),
                    })
                }
            };
            if *active {
                generators[gi].cost = vec![linear];
                gi += 1;
            }
        }
    }

    let sentinel = opts.uncapacitated_factor * total_demand;
    let mut lines = Vec::new();
    for (lineno, row) in &branch.rows {
        if row.len() < 6 {
            return Err(CaseError::Parse { line: *lineno, msg: "branch row needs >= 6 columns".into() });
        }
        let status = if row.len() > 10 { row[10] } else { 1.0 };
        if status == 0.0 {
            continue;
        }
        let x = row[3];
        if x <= 0.0 {
            return Err(CaseError::invalid(
                ValidationCode::BadSusceptance,
                format!("branch at line {lineno}: reactance must be > 0, got {x}"),
            ));
        }
        let rate_a = row[5];
        let f_max = if rate_a > 0.0 { rate_a } else { sentinel };
        lines.push(Line {
            id: lines.len() + 1,
            from_bus: row[0] as usize,
            to_bus: row[1] as usize,
            susceptance: 1.0 / x,
            f_max,
        });
    }

    let case = GridCase { base_mva, horizon: 1, buses, generators, lines };
    case.validate()?;
    Ok(case)
}

#[cfg(test)]
mod tests {
    use super::*;

    const THREE_BUS: &str = r#"
function mpc = case3
mpc.version = '2';
mpc.baseMVA = 100;

%% bus data
%	bus_i	type	Pd	Qd	Gs	Bs	area	Vm	Va	baseKV	zone	Vmax	Vmin
mpc.bus = [
	1	3	0	0	0	0	1	1	0	135	1	1.1	0.9;
	2	1	60	0	0	0	1	1	0	135	1	1.1	0.9;
	3	1	40	0	0	0	1	1	0	135	1	1.1	0.9;
];

mpc.gen = [
	1	0	0	30	-30	1	100	1	150	0	0	0	0	0	0	0	0	0	0	0	0;
];

mpc.branch = [
	1	2	0.01	0.1	0	90	0	0	0	0	1	-30	30;
	2	3	0.01	0.2	0	0	0	0	0	0	1	-30	30;
];

mpc.gencost = [
	2	0	0	2	12.5	0;
];
"#;

    #[test]
    fn parses_three_bus() {
        let c = parse_matpower(THREE_BUS).unwrap();
        assert_eq!(c.buses.len(), 3);
        assert_eq!(c.lines.len(), 2);
        assert_eq!(c.horizon, 1);
        assert_eq!(c.base_mva, 100.0);
        assert_eq!(c.buses[1].demand, vec![60.0]);
        assert!(c.buses[0].is_reference);
        assert_eq!(c.generators[0].p_max, vec![150.0]);
        assert_eq!(c.generators[0].cost, vec![12.5]);
        assert!((c.lines[0].susceptance - 10.0).abs() < 1e-12);
        assert_eq!(c.lines[0].f_max, 90.0);
        // rateA = 0 -> sentinel 10x total demand
        assert_eq!(c.lines[1].f_max, 1000.0);
    }

    #[test]
    fn zero_reactance_rejected() {
        let bad = THREE_BUS.replace("1	2	0.01	0.1", "1	2	0.01	0.0");
        match parse_matpower(&bad) {
            Err(CaseError::Invalid { code, .. }) => assert_eq!(code, ValidationCode::BadSusceptance),
            other => panic!("expected BadSusceptance, got {other:?}"),
        }
    }

    #[test]
    fn quadratic_cost_rejected() {
        let bad = THREE_BUS.replace("2	0	0	2	12.5	0;", "2	0	0	3	0.1	12.5	0;");
        assert!(matches!(parse_matpower(&bad), Err(CaseError::Parse { .. })));
    }

    #[test]
    fn malformed_number_reports_line() {
        let bad = THREE_BUS.replace("	2	1	60", "	2	1	abc");
        match parse_matpower(&bad) {
            Err(CaseError::Parse { line, .. }) => assert!(line > 0),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn dangling_branch_bus_rejected() {
        let bad = THREE_BUS.replace("2	3	0.01	0.2", "2	9	0.01	0.2");
        match parse_matpower(&bad) {
            Err(CaseError::Invalid { code, .. }) => assert_eq!(code, ValidationCode::DanglingBusRef),
            other => panic!("expected DanglingBusRef, got {other:?}"),
        }
    }

    #[test]
    fn matpower_to_json_round_trip() {
        let c = parse_matpower(THREE_BUS).unwrap();
        let round = GridCase::from_json(&c.to_json()).unwrap();
        assert_eq!(c, round);
    }
}
