//! LP JSON files, trace and sweep CSV output, and column extraction for
//! plotting.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::afs::{castillo_barnes, LinearProgram, SolveTrace, TraceRecord};
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::orbits::{Classification, SweepPoint};

/// Keyword accepted wherever an LP file path is expected.
pub const CASTILLO_BARNES: &str = "castillo-barnes";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LpFile {
    #[serde(default)]
    name: Option<String>,
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    c: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    x0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    y0: Option<Vec<f64>>,
}

pub fn parse_lp_json(text: &str) -> Result<LinearProgram> {
    let file: LpFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    if file.a.is_empty() {
        return Err(Error::InvalidProgram("A has no rows".into()));
    }
    let a = Mat::from_rows(&file.a).map_err(|e| Error::InvalidProgram(e.to_string()))?;
    LinearProgram::new(file.name.unwrap_or_else(|| "lp".into()), a, file.b, file.c)?
        .with_start(file.x0, file.y0)
}

pub fn lp_to_json(lp: &LinearProgram) -> String {
    let file = LpFile {
        name: Some(lp.name().to_string()),
        a: lp.a().to_rows(),
        b: lp.b().to_vec(),
        c: lp.c().to_vec(),
        x0: lp.x0().map(<[f64]>::to_vec),
        y0: lp.y0().map(<[f64]>::to_vec),
    };
    serde_json::to_string_pretty(&file).expect("plain data serializes")
}

/// `castillo-barnes` or a path to an LP JSON file.
pub fn load_lp(spec: &str) -> Result<LinearProgram> {
    if spec == CASTILLO_BARNES {
        return Ok(castillo_barnes());
    }
    let text = std::fs::read_to_string(Path::new(spec))?;
    parse_lp_json(&text)
}

/// Shortest-exact-width scientific notation with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Decimal for `v * 2^-scale_log2`, exact when the result is a normal
/// double and accurate to about 14 digits below that range.
pub fn fmt_scaled(v: f64, scale_log2: i32) -> String {
    if scale_log2 == 0 || v == 0.0 {
        return fmt_f64(v);
    }
    let direct = scale_pow2(v, -scale_log2);
    if direct.is_normal() {
        return fmt_f64(direct);
    }
    let sign = if v < 0.0 { "-" } else { "" };
    let l = v.abs().log10() - scale_log2 as f64 * std::f64::consts::LOG10_2;
    format!("{sign}{}", fmt_log10(l))
}

/// Decimal for `10^l`, for magnitudes outside the double range.
pub fn fmt_log10(l: f64) -> String {
    let e = l.floor();
    let mut m = 10f64.powf(l - e);
    let mut e = e as i64;
    if m >= 10.0 {
        m /= 10.0;
        e += 1;
    }
    format!("{m:.16}e{e}")
}

fn scale_pow2(mut v: f64, mut k: i32) -> f64 {
    while k < -1000 {
        v *= 2f64.powi(-1000);
        k += 1000;
    }
    while k > 1000 {
        v *= 2f64.powi(1000);
        k -= 1000;
    }
    v * 2f64.powi(k)
}

fn join<I: IntoIterator<Item = String>>(cells: I) -> String {
    cells.into_iter().collect::<Vec<_>>().join(",")
}

pub fn trace_header(n: usize, m: usize) -> String {
    let mut cols: Vec<String> = ["iter", "gap", "alpha_max", "alpha"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    cols.extend((1..=n).map(|i| format!("w_{i}")));
    cols.extend((1..=n).map(|i| format!("wscaled_{i}")));
    cols.extend((1..=m).map(|i| format!("y_{i}")));
    cols.join(",")
}

fn trace_row(r: &TraceRecord) -> String {
    let gap = if r.gap.is_normal() {
        fmt_f64(r.gap)
    } else {
        fmt_log10(r.log10_gap)
    };
    let mut cells = vec![r.iter.to_string(), gap, fmt_f64(r.alpha_max), fmt_f64(r.alpha)];
    cells.extend(r.w.iter().map(|&v| fmt_scaled(v, r.scale_log2)));
    cells.extend(r.w_scaled.iter().map(|&v| fmt_f64(v)));
    cells.extend(r.y.iter().map(|&v| fmt_f64(v)));
    join(cells)
}

/// Writes every record, or only those at or below the record threshold.
pub fn write_trace_csv<W: Write>(out: &mut W, trace: &SolveTrace, recorded_only: bool) -> Result<()> {
    let first = trace.records.first().ok_or_else(|| Error::InvalidState("empty trace".into()))?;
    writeln!(out, "{}", trace_header(first.w.len(), first.y.len()))?;
    for r in trace.records.iter().filter(|r| r.recorded || !recorded_only) {
        writeln!(out, "{}", trace_row(r))?;
    }
    Ok(())
}

fn classification_cell(c: Classification, resolved: bool) -> String {
    if resolved {
        c.label().to_string()
    } else {
        format!("{}-unresolved", c.label())
    }
}

/// Sweep CSV: `theta,seed,classification,period,value_1..value_k` where
/// `k` is the longest value list. Failed points are written as `error`
/// rows with no values.
pub fn write_sweep_csv<W: Write>(out: &mut W, points: &[SweepPoint]) -> Result<()> {
    let k = points
        .iter()
        .filter_map(|p| p.outcome.as_ref().ok().map(|v| v.values.len()))
        .max()
        .unwrap_or(0);
    let mut header = vec!["theta".to_string(), "seed".into(), "classification".into(), "period".into()];
    header.extend((1..=k).map(|i| format!("value_{i}")));
    writeln!(out, "{}", header.join(","))?;
    for p in points {
        let mut cells = vec![fmt_f64(p.theta), p.seed_index.to_string()];
        match &p.outcome {
            Ok(v) => {
                cells.push(classification_cell(v.classification, v.resolved));
                cells.push(match v.classification {
                    Classification::Aperiodic => String::new(),
                    c => c.period().to_string(),
                });
                cells.extend(v.values.iter().map(|&x| fmt_f64(x)));
                cells.extend((v.values.len()..k).map(|_| String::new()));
            }
            Err(_) => {
                cells.push("error".into());
                cells.extend((0..=k).map(|_| String::new()));
            }
        }
        writeln!(out, "{}", join(cells))?;
    }
    Ok(())
}

/// Column selector: an exact header name, or a prefix ending in `*`.
fn matches(selector: &str, header: &str) -> bool {
    match selector.strip_suffix('*') {
        Some(prefix) => header.starts_with(prefix),
        None => header == selector,
    }
}

/// Reads `(x, y)` pairs from CSV text. Every column matching `y_col`
/// contributes a point per row; empty cells are skipped. An input with no
/// header at all yields no points.
pub fn read_xy<R: Read>(input: R, x_col: &str, y_col: &str) -> Result<Vec<(f64, f64)>> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let headers = rdr.headers()?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Ok(Vec::new());
    }
    let xi = headers
        .iter()
        .position(|h| h == x_col)
        .ok_or_else(|| Error::MissingColumn(x_col.to_string()))?;
    let ys: Vec<usize> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| matches(y_col, h))
        .map(|(i, _)| i)
        .collect();
    if ys.is_empty() {
        return Err(Error::MissingColumn(y_col.to_string()));
    }
    let parse = |s: &str, row: usize| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::Parse(format!("row {row}: not a number: {s:?}")))
    };
    let mut pts = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let xs = rec.get(xi).unwrap_or("");
        if xs.trim().is_empty() {
            continue;
        }
        let x = parse(xs, row + 1)?;
        for &j in &ys {
            match rec.get(j) {
                Some(c) if !c.trim().is_empty() => pts.push((x, parse(c, row + 1)?)),
                _ => {}
            }
        }
    }
    Ok(pts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::afs::{default_start, solve, SolverConfig};
    use crate::dikin::Theta;

    #[test]
    fn lp_json_round_trip() {
        let lp = castillo_barnes();
        let back = parse_lp_json(&lp_to_json(&lp)).unwrap();
        assert_eq!(lp, back);
    }

    #[test]
    fn lp_json_exact_decimals_and_start() {
        let text = r#"{"name":"t","A":[[1,1,1]],"b":[3],"c":[0.1,0.2,0.30000000000000004],
            "x0":[1,1,1],"y0":[-1]}"#;
        let lp = parse_lp_json(text).unwrap();
        assert_eq!(lp.c()[2], 0.30000000000000004);
        assert_eq!(lp.x0(), Some(&[1.0, 1.0, 1.0][..]));
        assert_eq!(default_start(&lp).unwrap().y, vec![-1.0]);
    }

    #[test]
    fn lp_json_rejects_bad_input() {
        assert!(parse_lp_json("{").is_err());
        assert!(parse_lp_json(r#"{"A":[[1,1]],"b":[1]}"#).is_err());
        assert!(parse_lp_json(r#"{"A":[[1,1]],"b":[1],"c":[1,1],"z":1}"#).is_err());
        assert!(parse_lp_json(r#"{"A":[[1,1],[2,2]],"b":[1,2],"c":[1,1,1]}"#).is_err());
        assert!(parse_lp_json(r#"{"A":[],"b":[],"c":[]}"#).is_err());
    }

    #[test]
    fn scaled_formatting() {
        assert_eq!(fmt_scaled(1.5, 0), fmt_f64(1.5));
        assert_eq!(fmt_scaled(3.0, 1), fmt_f64(1.5));
        let s = fmt_scaled(1.0, 2000);
        let (m, e) = s.split_once('e').unwrap();
        assert_eq!(e, "-603");
        let m: f64 = m.parse().unwrap();
        assert!((m - 8.7094).abs() < 1e-3, "{s}");
    }

    #[test]
    fn trace_csv_has_expected_columns() {
        let lp = castillo_barnes();
        let trace = solve(&lp, &default_start(&lp).unwrap(), Theta::new(0.5).unwrap(), &SolverConfig::default()).unwrap();
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &trace, false).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        let header = lines.next().unwrap();
        assert!(header.starts_with("iter,gap,alpha_max,alpha,w_1,"));
        assert!(header.ends_with("wscaled_5,y_1,y_2"));
        assert_eq!(lines.count(), trace.records.len());
        let pts = read_xy(text.as_bytes(), "y_1", "y_2").unwrap();
        assert_eq!(pts.len(), trace.records.len());
        assert_eq!(pts.last().unwrap().0, trace.last().y[0]);
    }

    #[test]
    fn read_xy_patterns_and_errors() {
        let text = "theta,seed,value_1,value_2\n0.5,0,1.0,\n0.6,0,0.3,0.7\n";
        let pts = read_xy(text.as_bytes(), "theta", "value_*").unwrap();
        assert_eq!(pts, vec![(0.5, 1.0), (0.6, 0.3), (0.6, 0.7)]);
        assert!(matches!(read_xy(text.as_bytes(), "nope", "value_*"), Err(Error::MissingColumn(_))));
        assert!(matches!(read_xy(text.as_bytes(), "theta", "w_*"), Err(Error::MissingColumn(_))));
        assert!(read_xy("".as_bytes(), "theta", "value_*").unwrap().is_empty());
        assert!(read_xy("theta,v\nx,1\n".as_bytes(), "theta", "v").is_err());
    }
}
