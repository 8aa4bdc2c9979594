//! Line-oriented connection spec files.
//!
//! ```text
//! # comment
//! [chart]
//! x = 0 .. 2*pi
//! y = 0 .. 2*pi
//! periodic = true true
//! grid = 64 64
//!
//! [connection]
//! theta.1.2.dy = x
//! theta.2.1.dy = -x
//! ```
//!
//! Sections: `chart` (required), `connection`, `connection2`, `metric`
//! (`g.I.J`) and `oneform` (`u.dx`, `u.dy`). Missing connection and
//! one-form entries are zero; a metric needs both diagonal entries.

use std::collections::BTreeMap;

use sha2::{Digest, Sha256};

use crate::connection::{ConnectionMatrix, MetricField};
use crate::error::{Error, Result, SpecError};
use crate::expr::{parse, Expr};
use crate::forms::{Chart, OneForm};
use crate::grid::DEFAULT_GRID;

const SECTIONS: [&str; 5] = ["chart", "connection", "connection2", "metric", "oneform"];

/// A raw value with its position in the file.
#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
    column: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpecFile {
    pub chart: Chart,
    pub theta: Option<[[(Expr, Expr); 2]; 2]>,
    pub theta2: Option<[[(Expr, Expr); 2]; 2]>,
    /// `(g11, g12, g22)`.
    pub metric: Option<(Expr, Expr, Expr)>,
    pub oneform: Option<OneForm>,
    /// Lowercase hex SHA-256 of the file bytes.
    pub digest: String,
}

fn err(line: usize, column: usize, message: impl Into<String>) -> Error {
    SpecError {
        line,
        column,
        message: message.into(),
    }
    .into()
}

fn char_column(text: &str, byte: usize) -> usize {
    text[..byte.min(text.len())].chars().count() + 1
}

pub fn digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

impl SpecFile {
    pub fn parse(text: &str) -> Result<SpecFile> {
        let mut sections: BTreeMap<&str, (usize, BTreeMap<String, Entry>)> = BTreeMap::new();
        let mut current: Option<&str> = None;
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let body = raw.split('#').next().unwrap_or("");
            let trimmed = body.trim();
            if trimmed.is_empty() {
                continue;
            }
            let indent = body.len() - body.trim_start().len();
            if let Some(name) = trimmed.strip_prefix('[') {
                let Some(name) = name.strip_suffix(']') else {
                    return Err(err(
                        line,
                        char_column(raw, indent),
                        "unterminated section header",
                    ));
                };
                let name = name.trim();
                let Some(&known) = SECTIONS.iter().find(|s| **s == name) else {
                    return Err(err(
                        line,
                        char_column(raw, indent),
                        format!("unknown section [{name}]"),
                    ));
                };
                if sections.contains_key(known) {
                    return Err(err(
                        line,
                        char_column(raw, indent),
                        format!("duplicate section [{name}]"),
                    ));
                }
                sections.insert(known, (line, BTreeMap::new()));
                current = Some(known);
                continue;
            }
            let Some(section) = current else {
                return Err(err(
                    line,
                    char_column(raw, indent),
                    "key outside of any section",
                ));
            };
            let Some(eq) = body.find('=') else {
                return Err(err(
                    line,
                    char_column(raw, indent),
                    "expected `key = value`",
                ));
            };
            let key = body[..eq].trim().to_string();
            if key.is_empty() {
                return Err(err(line, char_column(raw, indent), "missing key"));
            }
            let after = &body[eq + 1..];
            let lead = after.len() - after.trim_start().len();
            let entry = Entry {
                value: after.trim().to_string(),
                line,
                column: char_column(raw, eq + 1 + lead),
            };
            let keys = &mut sections.get_mut(section).expect("section exists").1;
            if keys.contains_key(&key) {
                return Err(err(
                    line,
                    char_column(raw, indent),
                    format!("duplicate key `{key}`"),
                ));
            }
            keys.insert(key, entry);
        }

        let end = text.lines().count() + 1;
        let Some((_, chart_keys)) = sections.remove("chart") else {
            return Err(err(end, 1, "missing [chart] section"));
        };
        let chart = parse_chart(chart_keys, end)?;
        let theta = sections
            .remove("connection")
            .map(|(_, k)| parse_connection(k))
            .transpose()?;
        let theta2 = sections
            .remove("connection2")
            .map(|(_, k)| parse_connection(k))
            .transpose()?;
        let metric = sections
            .remove("metric")
            .map(|(line, k)| parse_metric(k, line))
            .transpose()?;
        let oneform = sections
            .remove("oneform")
            .map(|(_, k)| parse_oneform(k))
            .transpose()?;
        Ok(SpecFile {
            chart,
            theta,
            theta2,
            metric,
            oneform,
            digest: digest(text.as_bytes()),
        })
    }

    pub fn read(path: &std::path::Path) -> Result<SpecFile> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Precondition(format!("cannot read {}: {e}", path.display())))?;
        SpecFile::parse(&text)
    }

    pub fn connection(&self) -> Option<ConnectionMatrix> {
        self.theta
            .clone()
            .map(|c| ConnectionMatrix::from_coefficients(c, self.chart))
    }

    pub fn connection2(&self) -> Option<ConnectionMatrix> {
        self.theta2
            .clone()
            .map(|c| ConnectionMatrix::from_coefficients(c, self.chart))
    }

    pub fn metric_field(&self) -> Option<MetricField> {
        self.metric
            .clone()
            .map(|(a, b, c)| MetricField::new(a, b, c, self.chart))
    }
}

fn expr(entry: &Entry) -> Result<Expr> {
    parse(&entry.value).map_err(|e| {
        err(
            entry.line,
            entry.column
                + entry.value[..e.offset.min(entry.value.len())]
                    .chars()
                    .count(),
            e.message,
        )
    })
}

fn constant(entry: &Entry, text: &str, offset: usize) -> Result<f64> {
    let col = entry.column + entry.value[..offset].chars().count();
    let e = parse(text.trim()).map_err(|e| err(entry.line, col, e.message))?;
    if e.depends_on(crate::expr::Var::X) || e.depends_on(crate::expr::Var::Y) {
        return Err(err(entry.line, col, "chart bounds must be constant"));
    }
    e.eval(0.0, 0.0)
        .map_err(|e| err(entry.line, col, e.to_string()))
}

fn unknown(key: &str, e: &Entry) -> Error {
    err(e.line, e.column, format!("unknown key `{key}`"))
}

fn parse_chart(keys: BTreeMap<String, Entry>, end: usize) -> Result<Chart> {
    let mut x = None;
    let mut y = None;
    let mut periodic = (false, false);
    let mut grid = (DEFAULT_GRID, DEFAULT_GRID);
    let mut first = None;
    for (key, e) in &keys {
        first = first.or(Some(e));
        match key.as_str() {
            "x" | "y" => {
                let Some(sep) = e.value.find("..") else {
                    return Err(err(e.line, e.column, "expected `a .. b`"));
                };
                let a = constant(e, &e.value[..sep], 0)?;
                let b = constant(e, &e.value[sep + 2..], sep + 2)?;
                if key == "x" {
                    x = Some((a, b));
                } else {
                    y = Some((a, b));
                }
            }
            "periodic" => {
                let flags: Vec<&str> = e.value.split_whitespace().collect();
                let flag = |s: &str| match s {
                    "true" => Ok(true),
                    "false" => Ok(false),
                    _ => Err(err(
                        e.line,
                        e.column,
                        format!("expected true or false, found `{s}`"),
                    )),
                };
                if flags.len() != 2 {
                    return Err(err(e.line, e.column, "expected two flags"));
                }
                periodic = (flag(flags[0])?, flag(flags[1])?);
            }
            "grid" => {
                let counts: Vec<&str> = e.value.split_whitespace().collect();
                let count = |s: &str| {
                    s.parse::<usize>()
                        .map_err(|_| err(e.line, e.column, format!("invalid grid size `{s}`")))
                };
                if counts.len() != 2 {
                    return Err(err(e.line, e.column, "expected two grid sizes"));
                }
                grid = (count(counts[0])?, count(counts[1])?);
            }
            _ => return Err(unknown(key, e)),
        }
    }
    let (line, column) = first.map_or((end, 1), |e| (e.line, e.column));
    let x = x.ok_or_else(|| err(line, column, "missing chart key `x`"))?;
    let y = y.ok_or_else(|| err(line, column, "missing chart key `y`"))?;
    Chart::new(x, y, periodic, grid).map_err(|e| err(line, column, e.to_string()))
}

fn index(s: &str) -> Option<usize> {
    match s {
        "1" => Some(0),
        "2" => Some(1),
        _ => None,
    }
}

fn parse_connection(keys: BTreeMap<String, Entry>) -> Result<[[(Expr, Expr); 2]; 2]> {
    let mut c: [[(Expr, Expr); 2]; 2] = Default::default();
    for (key, e) in &keys {
        let parts: Vec<&str> = key.split('.').collect();
        let slot = match parts.as_slice() {
            ["theta", i, j, form] => index(i).zip(index(j)).zip(match *form {
                "dx" => Some(0),
                "dy" => Some(1),
                _ => None,
            }),
            _ => None,
        };
        let Some(((i, j), f)) = slot else {
            return Err(unknown(key, e));
        };
        let v = expr(e)?;
        if f == 0 {
            c[i][j].0 = v;
        } else {
            c[i][j].1 = v;
        }
    }
    Ok(c)
}

fn parse_metric(keys: BTreeMap<String, Entry>, line: usize) -> Result<(Expr, Expr, Expr)> {
    let mut g: [[Option<(Expr, &Entry)>; 2]; 2] = Default::default();
    for (key, e) in &keys {
        let parts: Vec<&str> = key.split('.').collect();
        let Some((i, j)) = (match parts.as_slice() {
            ["g", i, j] => index(i).zip(index(j)),
            _ => None,
        }) else {
            return Err(unknown(key, e));
        };
        g[i][j] = Some((expr(e)?, e));
    }
    let off = match (&g[0][1], &g[1][0]) {
        (Some((a, _)), Some((b, e))) => {
            if a != b {
                return Err(err(e.line, e.column, "g.1.2 and g.2.1 differ"));
            }
            a.clone()
        }
        (Some((a, _)), None) | (None, Some((a, _))) => a.clone(),
        (None, None) => Expr::zero(),
    };
    let diag = |i: usize| {
        g[i][i]
            .as_ref()
            .map(|(v, _)| v.clone())
            .ok_or_else(|| err(line, 1, format!("missing metric entry g.{0}.{0}", i + 1)))
    };
    Ok((diag(0)?, off, diag(1)?))
}

fn parse_oneform(keys: BTreeMap<String, Entry>) -> Result<OneForm> {
    let mut u = OneForm::zero();
    for (key, e) in &keys {
        match key.as_str() {
            "u.dx" => u.dx = expr(e)?,
            "u.dy" => u.dy = expr(e)?,
            _ => return Err(unknown(key, e)),
        }
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SKEW: &str = "\
# skew connection
[chart]
x = -1 .. 1
y = 0 .. 2*pi   # full period
periodic = false true
grid = 16 12

[connection]
theta.1.2.dy = x
theta.2.1.dy = -x
";

    #[test]
    fn parses_sections() {
        let s = SpecFile::parse(SKEW).unwrap();
        assert_eq!(s.chart.x_range(), (-1.0, 1.0));
        assert_eq!(s.chart.y_range(), (0.0, std::f64::consts::TAU));
        assert_eq!(s.chart.periodic(), (false, true));
        assert_eq!(s.chart.grid(), (16, 12));
        let th = s.connection().unwrap();
        assert_eq!(th.entry(0, 1).dy.to_string(), "x");
        assert!(th.entry(0, 0).is_zero());
        assert!(s.metric.is_none() && s.oneform.is_none() && s.theta2.is_none());
        assert_eq!(s.digest.len(), 64);
    }

    #[test]
    fn metric_and_oneform() {
        let text = "[chart]\nx = 0 .. 1\ny = 0 .. 1\n[metric]\ng.1.1 = 1\ng.2.2 = exp(2*x)\n[oneform]\nu.dx = 0.3\n";
        let s = SpecFile::parse(text).unwrap();
        assert_eq!(s.chart.grid(), (DEFAULT_GRID, DEFAULT_GRID));
        let (a, b, c) = s.metric.unwrap();
        assert_eq!(
            (a.to_string(), b.to_string(), c.to_string()),
            ("1".into(), "0".into(), "exp(2 * x)".into())
        );
        assert_eq!(s.oneform.unwrap().dx.as_const(), Some(0.3));
    }

    fn error_at(text: &str) -> (usize, usize, String) {
        match SpecFile::parse(text).unwrap_err() {
            Error::Spec(e) => (e.line, e.column, e.message),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn reports_locations() {
        let (l, c, m) =
            error_at("[chart]\nx = 0 .. 1\ny = 0 .. 1\n[connection]\ntheta.1.1.dx = x + \n");
        assert_eq!((l, c), (5, 19));
        assert_eq!(m, "incomplete expression");
        let (l, c, _) =
            error_at("[chart]\nx = 0 .. 1\ny = 0 .. 1\n[connection]\ntheta.1.1.dx = foo(x)\n");
        assert_eq!((l, c), (5, 16));
        let (l, _, m) =
            error_at("[chart]\nx = 0 .. 1\ny = 0 .. 1\n[connection]\ntheta.3.1.dx = x\n");
        assert_eq!(l, 5);
        assert!(m.contains("unknown key"));
        let (_, _, m) = error_at("[connection]\n");
        assert!(m.contains("missing [chart]"));
        let (l, _, m) = error_at("[chart]\nx = 1 .. 0\ny = 0 .. 1\n");
        assert_eq!(l, 2);
        assert!(m.contains("empty"));
        let (l, _, _) = error_at("[chart]\nx = 0 .. y\n");
        assert_eq!(l, 2);
        let (l, _, m) = error_at("[chart]\nx = 0 .. 1\n[chart]\n");
        assert_eq!(l, 3);
        assert!(m.contains("duplicate"));
        let (_, _, m) = error_at("[chart]\nx = 0 .. 1\ny = 0 .. 1\n[metric]\ng.2.2 = 1\n");
        assert!(m.contains("g.1.1"));
    }

    #[test]
    fn digest_is_content_hash() {
        assert_eq!(
            digest(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
