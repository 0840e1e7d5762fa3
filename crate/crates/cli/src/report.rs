use std::fmt::{self, Write as _};

use serde::Serialize;
use serde_json::{Map, Value};

/// Version of the JSON report layout.
pub const SCHEMA: u64 = 1;

#[derive(Debug)]
pub enum Failure {
    /// Unreadable or malformed input: files, points, dimensions.
    Input(String),
    /// A computation that could not be carried out (step failure, domain error).
    Compute(String),
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Input(m) => write!(f, "{m}"),
            Failure::Compute(m) => write!(f, "computation failed: {m}"),
        }
    }
}

impl From<projflat::Error> for Failure {
    fn from(e: projflat::Error) -> Self {
        use projflat::Error as E;
        match e {
            E::Syntax { .. }
            | E::UnknownVariable { .. }
            | E::UnknownFunction { .. }
            | E::DimensionMismatch { .. }
            | E::OddDimension(_)
            | E::NotAlmostComplex { .. }
            | E::HasTorsion { .. }
            | E::SingularMetric { .. }
            | E::Chart { .. }
            | E::PathOutsideDomain { .. } => Failure::Input(e.to_string()),
            other => Failure::Compute(other.to_string()),
        }
    }
}

/// Finished command: verdict, JSON body and the text rendering of it.
pub struct Outcome {
    pub ok: bool,
    pub body: Map<String, Value>,
    pub text: String,
}

impl Outcome {
    pub fn new(command: &str, ok: bool) -> Self {
        let mut body = Map::new();
        body.insert("schema".into(), SCHEMA.into());
        body.insert("command".into(), command.into());
        Self {
            ok,
            body,
            text: String::new(),
        }
    }

    pub fn put(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).expect("report values serialize");
        self.body.insert(key.into(), v);
    }

    pub fn line(&mut self, s: impl AsRef<str>) {
        self.text.push_str(s.as_ref());
        self.text.push('\n');
    }

    pub fn field(&mut self, key: &str, value: impl fmt::Display) {
        let width = 24.max(key.chars().count() + 2);
        let _ = writeln!(self.text, "{key:<width$}{value}");
    }

    pub fn json(&self) -> String {
        serde_json::to_string_pretty(&self.body).expect("report is valid JSON")
    }
}

/// Shortest round-trip form; exponent notation outside `[1e-3, 1e6)`.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-3..1e6).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn nums(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| num(*x)).collect();
    format!("({})", parts.join(", "))
}
