//! Text formats: chart files, 1-form files and target-point lists.
//!
//! ```text
//! # round sphere
//! dim = 2
//! domain = -2, 2        # optional box for sample points and paths
//! [metric]
//! g 1 1 = 4/(1+x1^2+x2^2)^2
//! g 2 2 = 4/(1+x1^2+x2^2)^2
//! ```
//!
//! A `[christoffel]` section uses `G k i j = expr` lines instead. Indices are
//! 1-based, missing entries are zero and duplicate keys are rejected.

use std::collections::BTreeSet;

use crate::connection::ConnectionSpec;
use crate::develop::Domain;
use crate::error::{Error, Result};
use crate::expr::{parse, Expr};
use crate::projective::OneFormField;

#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub spec: ConnectionSpec,
    pub domain: Option<Domain>,
}

fn chart_err(line: usize, message: impl Into<String>) -> Error {
    Error::Chart {
        line,
        message: message.into(),
    }
}

fn strip_comment(s: &str) -> &str {
    s.split('#').next().unwrap_or("").trim()
}

/// `lhs = rhs` with a non-empty right side.
fn split_assignment(line: usize, s: &str) -> Result<(&str, &str)> {
    let (l, r) = s
        .split_once('=')
        .ok_or_else(|| chart_err(line, "expected `key = value`"))?;
    let r = r.trim();
    if r.is_empty() {
        return Err(chart_err(line, "missing right-hand side"));
    }
    Ok((l.trim(), r))
}

fn indices(line: usize, parts: &[&str], n: usize) -> Result<Vec<usize>> {
    parts
        .iter()
        .map(|p| {
            let i: usize = p
                .parse()
                .map_err(|_| chart_err(line, format!("bad index {p:?}")))?;
            if i == 0 || i > n {
                return Err(chart_err(line, format!("index {i} outside 1..={n}")));
            }
            Ok(i - 1)
        })
        .collect()
}

fn expr_at(line: usize, text: &str, n: usize) -> Result<Expr> {
    parse(text, n).map_err(|e| chart_err(line, e.to_string()))
}

#[derive(PartialEq)]
enum Section {
    None,
    Metric,
    Christoffel,
}

pub fn parse_chart(text: &str) -> Result<Chart> {
    let mut n: Option<usize> = None;
    let mut domain = None;
    let mut section = Section::None;
    let mut seen_section = false;
    let mut table: Vec<Expr> = Vec::new();
    let mut keys = BTreeSet::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let s = strip_comment(raw);
        if s.is_empty() {
            continue;
        }
        if s.starts_with('[') {
            let dim = n.ok_or_else(|| chart_err(line, "`dim = n` must come first"))?;
            if seen_section {
                return Err(chart_err(line, "[metric] and [christoffel] are exclusive"));
            }
            seen_section = true;
            section = match s {
                "[metric]" => Section::Metric,
                "[christoffel]" => Section::Christoffel,
                other => return Err(chart_err(line, format!("unknown section {other}"))),
            };
            let size = if section == Section::Metric {
                dim * dim
            } else {
                dim.pow(3)
            };
            table = vec![Expr::num(0.0); size];
            continue;
        }
        let (lhs, rhs) = split_assignment(line, s)?;
        match section {
            Section::None => match lhs {
                "dim" => {
                    if n.is_some() {
                        return Err(chart_err(line, "duplicate dim"));
                    }
                    let d: usize = rhs
                        .parse()
                        .map_err(|_| chart_err(line, format!("bad dimension {rhs:?}")))?;
                    if d < 2 {
                        return Err(chart_err(line, "dimension must be at least 2"));
                    }
                    n = Some(d);
                }
                "domain" => {
                    let parts: Vec<&str> = rhs.split(',').map(str::trim).collect();
                    let nums: Vec<f64> = parts
                        .iter()
                        .map(|p| p.parse::<f64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| chart_err(line, "domain expects `lo, hi`"))?;
                    if nums.len() != 2 || nums.iter().any(|x| x.is_nan()) || nums[0] >= nums[1] {
                        return Err(chart_err(line, "domain expects `lo, hi` with lo < hi"));
                    }
                    domain = Some(Domain {
                        lo: nums[0],
                        hi: nums[1],
                    });
                }
                other => return Err(chart_err(line, format!("unknown header key {other:?}"))),
            },
            Section::Metric | Section::Christoffel => {
                let dim = n.expect("checked at section start");
                let parts: Vec<&str> = lhs.split_whitespace().collect();
                let (tag, arity) = if section == Section::Metric {
                    ("g", 2)
                } else {
                    ("G", 3)
                };
                if parts.first() != Some(&tag) || parts.len() != arity + 1 {
                    return Err(chart_err(
                        line,
                        format!("expected `{tag}` followed by {arity} indices"),
                    ));
                }
                let mut ix = indices(line, &parts[1..], dim)?;
                if section == Section::Metric && ix[0] > ix[1] {
                    ix.swap(0, 1);
                }
                if !keys.insert(ix.clone()) {
                    return Err(chart_err(line, format!("duplicate entry {lhs}")));
                }
                let off = ix.iter().fold(0, |a, &i| a * dim + i);
                table[off] = expr_at(line, rhs, dim)?;
            }
        }
    }
    let n = n.ok_or_else(|| chart_err(0, "missing `dim = n`"))?;
    let spec = match section {
        Section::None => return Err(chart_err(0, "missing [metric] or [christoffel] section")),
        Section::Metric => ConnectionSpec::metric(n, table)?,
        Section::Christoffel => ConnectionSpec::christoffel(n, table)?,
    };
    Ok(Chart { spec, domain })
}

/// `a <i> = <expr>` lines; missing components are zero.
pub fn parse_one_form(text: &str, n: usize) -> Result<OneFormField> {
    let mut comps = vec![Expr::num(0.0); n];
    let mut seen = BTreeSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let s = strip_comment(raw);
        if s.is_empty() {
            continue;
        }
        let (lhs, rhs) = split_assignment(line, s)?;
        let parts: Vec<&str> = lhs.split_whitespace().collect();
        if parts.len() != 2 || parts[0] != "a" {
            return Err(chart_err(line, "expected `a <i> = <expr>`"));
        }
        let i = indices(line, &parts[1..], n)?[0];
        if !seen.insert(i) {
            return Err(chart_err(line, format!("duplicate entry a {}", i + 1)));
        }
        comps[i] = expr_at(line, rhs, n)?;
    }
    OneFormField::new(n, comps)
}

/// A comma-separated point such as `0.1, -0.2`.
pub fn parse_point(s: &str, n: usize) -> std::result::Result<Vec<f64>, String> {
    let p: Vec<f64> = s
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| format!("bad coordinate {:?}", t.trim()))
        })
        .collect::<std::result::Result<_, _>>()?;
    if p.len() != n {
        return Err(format!("expected {n} coordinates, got {}", p.len()));
    }
    Ok(p)
}

/// One point per line.
pub fn parse_targets(text: &str, n: usize) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let s = strip_comment(raw);
        if s.is_empty() {
            continue;
        }
        out.push(parse_point(s, n).map_err(|m| chart_err(idx + 1, m))?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SPHERE: &str = "# sphere\ndim = 2\ndomain = -2, 2\n[metric]\ng 1 1 = 4/(1+x1^2+x2^2)^2\ng 2 2 = 4/(1+x1^2+x2^2)^2\n";

    #[test]
    fn reads_metric_chart() {
        let c = parse_chart(SPHERE).unwrap();
        assert!(c.spec.is_metric());
        assert_eq!(c.domain, Some(Domain { lo: -2.0, hi: 2.0 }));
        let cv = c.spec.evaluate(&[0.0, 0.0], 1).unwrap();
        assert!(cv.gamma.iter().all(|g| g.abs() < 1e-15));
    }

    #[test]
    fn reads_christoffel_chart() {
        let c = parse_chart("dim = 3\n[christoffel]\nG 1 2 3 = x1*x2\n").unwrap();
        let cv = c.spec.evaluate(&[2.0, 3.0, 0.0], 0).unwrap();
        assert_eq!(cv.gamma(0, 1, 2), 6.0);
        assert_eq!(cv.gamma(0, 2, 1), 0.0);
    }

    #[test]
    fn chart_errors_name_the_line() {
        let cases = [
            ("[metric]\n", 1),
            ("dim = 2\n[metric]\ng 1 1 = 1\ng 1 1 = 2\n", 4),
            ("dim = 2\n[metric]\ng 1 2 = 1\ng 2 1 = 2\n", 4),
            ("dim = 2\n[metric]\ng 1 3 = 1\n", 3),
            ("dim = 2\n[christoffel]\nG 1 1 1 = x3\n", 3),
            ("dim = 2\n[metric]\n[christoffel]\n", 3),
            ("dim = 2\n[metric]\ng 1 1 =\n", 3),
            ("dim = 2\ndomain = 1, 0\n[metric]\n", 2),
        ];
        for (text, want) in cases {
            match parse_chart(text) {
                Err(Error::Chart { line, .. }) => assert_eq!(line, want, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn one_forms_and_targets() {
        let a = parse_one_form("a 2 = x1\n# c\n", 2).unwrap();
        assert!(a.components[0].is_zero());
        assert_eq!(a.eval(&[3.0, 0.0]).unwrap(), vec![0.0, 3.0]);
        assert!(parse_one_form("a 1 = 1\na 1 = 2\n", 2).is_err());
        let t = parse_targets("0.1, 0.2\n\n-1,1\n", 2).unwrap();
        assert_eq!(t, vec![vec![0.1, 0.2], vec![-1.0, 1.0]]);
        assert!(parse_targets("1,2,3\n", 2).is_err());
    }
}
