use std::fmt::Write as _;

use serde::Serialize;

use super::ast::Expr;
use super::parse::{parse_expression, ParseError, ParseErrorKind};

/// Closed sampling interval for one coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

/// Half-width of the default sampling box used for coordinates without a declared region.
pub const DEFAULT_HALF_WIDTH: f64 = 1.0;

/// A Riemannian metric given by closed-form component expressions in one chart.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSpec {
    pub name: Option<String>,
    pub notes: Vec<String>,
    pub seed: Option<u64>,
    coord_names: Vec<String>,
    // full n×n row-major; lower triangle mirrors the upper one
    entries: Vec<Expr>,
    region: Vec<Option<Interval>>,
}

impl MetricSpec {
    /// Builds a spec from its upper triangle. `upper(i, j)` is called for `i <= j`.
    pub fn from_upper(
        coord_names: Vec<String>,
        mut upper: impl FnMut(usize, usize) -> Expr,
    ) -> Self {
        let n = coord_names.len();
        let mut entries = vec![Expr::Const(0.0); n * n];
        for i in 0..n {
            for j in i..n {
                let e = upper(i, j);
                entries[j * n + i] = e.clone();
                entries[i * n + j] = e;
            }
        }
        MetricSpec {
            name: None,
            notes: Vec::new(),
            seed: None,
            coord_names,
            entries,
            region: vec![None; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.coord_names.len()
    }

    /// Same chart, region and metadata with every non-zero entry replaced by `f(entry)`.
    pub fn map_entries(&self, mut f: impl FnMut(&Expr) -> Expr) -> Self {
        let mut out = self.clone();
        for e in out.entries.iter_mut() {
            if !e.is_zero() {
                *e = f(e);
            }
        }
        out
    }

    pub fn coord_names(&self) -> &[String] {
        &self.coord_names
    }

    pub fn entry(&self, i: usize, j: usize) -> &Expr {
        &self.entries[i * self.dim() + j]
    }

    /// Declared sampling interval of coordinate `i`, if any.
    pub fn declared_region(&self, i: usize) -> Option<Interval> {
        self.region[i]
    }

    /// Sampling interval of coordinate `i`, defaulting to `[-1, 1]`.
    pub fn region(&self, i: usize) -> Interval {
        self.region[i].unwrap_or(Interval {
            lo: -DEFAULT_HALF_WIDTH,
            hi: DEFAULT_HALF_WIDTH,
        })
    }

    pub fn set_region(&mut self, i: usize, interval: Interval) {
        self.region[i] = Some(interval);
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.dim()
            && point.iter().enumerate().all(|(i, &x)| {
                let r = self.region(i);
                x >= r.lo && x <= r.hi
            })
    }

    /// Serializes to the line-based document format.
    pub fn to_document(&self) -> String {
        let mut out = String::new();
        if let Some(name) = &self.name {
            let _ = writeln!(out, "name = {name}");
        }
        for note in &self.notes {
            let _ = writeln!(out, "note = {note}");
        }
        if let Some(seed) = self.seed {
            let _ = writeln!(out, "seed = {seed}");
        }
        let _ = writeln!(out, "dim = {}", self.dim());
        let _ = writeln!(out, "coords = {}", self.coord_names.join(", "));
        let declared: Vec<String> = (0..self.dim())
            .filter_map(|i| {
                self.region[i].map(|r| format!("{}: {} .. {}", self.coord_names[i], r.lo, r.hi))
            })
            .collect();
        if !declared.is_empty() {
            let _ = writeln!(out, "region = {}", declared.join(", "));
        }
        for i in 0..self.dim() {
            for j in i..self.dim() {
                let e = self.entry(i, j);
                if !e.is_zero() {
                    let _ = writeln!(
                        out,
                        "g[{}][{}] = {}",
                        i + 1,
                        j + 1,
                        e.display(&self.coord_names)
                    );
                }
            }
        }
        out
    }
}

/// Conformal factor `φ`; the rescaled metric is `exp(-2φ) g`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConformalFactorSpec {
    pub phi: Expr,
}

impl ConformalFactorSpec {
    pub fn parse(text: &str, spec: &MetricSpec) -> Result<Self, ParseError> {
        let phi = parse_expression(text, spec.coord_names())?;
        Ok(ConformalFactorSpec { phi })
    }

    pub fn from_expr(phi: Expr, spec: &MetricSpec) -> crate::Result<Self> {
        phi.validate(spec.dim())?;
        Ok(ConformalFactorSpec { phi })
    }
}

fn invalid(msg: impl Into<String>, line: usize) -> ParseError {
    ParseError::new(ParseErrorKind::Invalid(msg.into()), 0).at_line(line)
}

fn parse_entry_key(key: &str) -> Option<(usize, usize)> {
    let rest = key.strip_prefix("g[")?;
    let (i, rest) = rest.split_once(']')?;
    let rest = rest.trim_start().strip_prefix('[')?;
    let (j, rest) = rest.split_once(']')?;
    if !rest.trim().is_empty() {
        return None;
    }
    Some((i.trim().parse().ok()?, j.trim().parse().ok()?))
}

fn parse_constant(text: &str, line: usize) -> Result<f64, ParseError> {
    let e = parse_expression(text, &[]).map_err(|e| e.at_line(line))?;
    e.eval::<f64>(&[])
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| invalid(format!("'{text}' is not a finite constant"), line))
}

/// Parses a metric document.
///
/// ```text
/// # comment
/// dim = 4
/// coords = r, theta, phi, t
/// region = r: 3 .. 10, theta: 0.5 .. 2.6
/// g[1][1] = 1/(1 - 1/r)
/// ```
///
/// Entries are 1-based and only the upper triangle (`i <= j`) may be given;
/// omitted entries are zero. Optional metadata keys: `name`, `note`, `seed`.
pub fn parse_metric_document(text: &str) -> Result<MetricSpec, ParseError> {
    let mut dim: Option<(usize, usize)> = None;
    let mut coords: Option<(Vec<String>, usize)> = None;
    let mut region_line: Option<(String, usize)> = None;
    let mut entry_lines: Vec<(usize, usize, String, usize, usize)> = Vec::new();
    let mut name = None;
    let mut notes = Vec::new();
    let mut seed = None;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ParseError::new(
                ParseErrorKind::Syntax("expected 'key = value'".into()),
                0,
            )
            .at_line(line));
        };
        let value_offset = key.len() + 1 + (value.len() - value.trim_start().len());
        let key = key.trim();
        let value = value.trim();
        match key {
            "dim" => {
                if dim.is_some() {
                    return Err(invalid("'dim' declared twice", line));
                }
                let n: usize = value
                    .parse()
                    .map_err(|_| invalid(format!("dim must be a positive integer, got '{value}'"), line))?;
                if n == 0 {
                    return Err(invalid("dim must be positive", line));
                }
                dim = Some((n, line));
            }
            "coords" => {
                let names: Vec<String> = value.split(',').map(|s| s.trim().to_string()).collect();
                for n in &names {
                    let valid = n
                        .chars()
                        .next()
                        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
                        && n.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
                    if !valid {
                        return Err(invalid(format!("invalid coordinate name '{n}'"), line));
                    }
                    if ["sin", "cos", "exp", "ln", "sqrt", "pi"].contains(&n.as_str()) {
                        return Err(invalid(format!("coordinate name '{n}' is reserved"), line));
                    }
                }
                coords = Some((names, line));
            }
            "region" => region_line = Some((value.to_string(), line)),
            "name" => name = Some(value.to_string()),
            "note" => notes.push(value.to_string()),
            "seed" => {
                seed = Some(
                    value
                        .parse()
                        .map_err(|_| invalid(format!("seed must be an integer, got '{value}'"), line))?,
                )
            }
            _ => {
                let Some((i, j)) = parse_entry_key(key) else {
                    return Err(invalid(format!("unknown key '{key}'"), line));
                };
                entry_lines.push((i, j, value.to_string(), line, value_offset));
            }
        }
    }

    let (n, _) = dim.ok_or_else(|| ParseError::new(ParseErrorKind::MissingDimension, 0))?;
    let names = match coords {
        Some((names, line)) => {
            if names.len() != n {
                return Err(invalid(
                    format!("{} coordinate names for dim = {n}", names.len()),
                    line,
                ));
            }
            names
        }
        None => (1..=n).map(|k| format!("x{k}")).collect(),
    };
    for (a, name_a) in names.iter().enumerate() {
        if names[..a].contains(name_a) {
            return Err(invalid(format!("coordinate '{name_a}' listed twice"), 0));
        }
    }

    let mut upper: Vec<Option<Expr>> = vec![None; n * n];
    for (i, j, text, line, offset) in entry_lines {
        if i == 0 || j == 0 || i > n || j > n || i > j {
            return Err(ParseError::new(ParseErrorKind::IndexOutOfRange { i, j, dim: n }, 0).at_line(line));
        }
        let slot = (i - 1) * n + (j - 1);
        if upper[slot].is_some() {
            return Err(ParseError::new(ParseErrorKind::DuplicateEntry(i, j), 0).at_line(line));
        }
        let e = parse_expression(&text, &names).map_err(|mut e| {
            e.offset += offset;
            e.at_line(line)
        })?;
        upper[slot] = Some(e);
    }

    let mut spec = MetricSpec::from_upper(names.clone(), |i, j| {
        upper[i * n + j].clone().unwrap_or(Expr::Const(0.0))
    });
    spec.name = name;
    spec.notes = notes;
    spec.seed = seed;

    if let Some((value, line)) = region_line {
        for part in value.split(',') {
            let Some((coord, range)) = part.split_once(':') else {
                return Err(invalid(format!("region item '{}' needs 'name: lo .. hi'", part.trim()), line));
            };
            let coord = coord.trim();
            let Some(i) = names.iter().position(|c| c == coord) else {
                return Err(ParseError::new(
                    ParseErrorKind::UnknownIdentifier(coord.to_string()),
                    0,
                )
                .at_line(line));
            };
            let Some((lo, hi)) = range.split_once("..") else {
                return Err(invalid(format!("region for '{coord}' needs 'lo .. hi'"), line));
            };
            let lo = parse_constant(lo.trim(), line)?;
            let hi = parse_constant(hi.trim(), line)?;
            if !(lo < hi) {
                return Err(invalid(format!("empty region {lo} .. {hi} for '{coord}'"), line));
            }
            spec.set_region(i, Interval { lo, hi });
        }
    }
    Ok(spec)
}
