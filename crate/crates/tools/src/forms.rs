//! Text format for quadratic and cubic forms.
//!
//! ```text
//! # q0 for one component
//! components 1
//! s 1 1 1 0 0 1
//! s 1 1 1 1 1 -1
//! s 1 1 1 2 2 -1
//! s 1 1 1 3 3 -1
//! ```
//!
//! `components N` must precede every entry. An `s I J K j k value` line sets
//! the quadratic coefficient `s^{I,j,k}_{J,K}`, a `k I J i j k value` line the
//! cubic coefficient `k^{I,i,j,k}_J`. Component indices run over `1..=N`,
//! derivative indices over `0..=3`, and unset entries are zero. `#` starts a
//! comment. Values are integers, fractions `p/q` or decimals; when every value
//! is an integer or fraction the forms are checked in exact arithmetic.

use std::collections::HashSet;
use std::fmt::{Display, Write as _};

use num_rational::Ratio;

use penrose_core::nullform::{
    check_null_quasilinear, check_null_semilinear, cone_witness, CubicFormSpec, NullDecomposition, QuadraticFormSpec,
    Scalar,
};

/// Error at a one-based line of a form file.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct FormError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FormSet<S> {
    pub quadratic: Option<QuadraticFormSpec<S>>,
    pub cubic: Option<CubicFormSpec<S>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Forms {
    Exact(FormSet<Ratio<i64>>),
    Float(FormSet<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Value {
    Exact(Ratio<i64>),
    Float(f64),
}

impl Value {
    fn parse(s: &str) -> Option<Self> {
        if let Some((p, q)) = s.split_once('/') {
            let (p, q) = (p.parse::<i64>().ok()?, q.parse::<i64>().ok()?);
            return (q != 0).then(|| Value::Exact(Ratio::new(p, q)));
        }
        if let Ok(n) = s.parse::<i64>() {
            return Some(Value::Exact(Ratio::from_integer(n)));
        }
        s.parse::<f64>().ok().filter(|x| x.is_finite()).map(Value::Float)
    }

    fn to_f64(self) -> f64 {
        match self {
            Value::Exact(r) => *r.numer() as f64 / *r.denom() as f64,
            Value::Float(x) => x,
        }
    }
}

struct Entry {
    cubic: bool,
    comp: Vec<usize>,
    deriv: Vec<usize>,
    value: Value,
}

pub fn parse_forms(text: &str) -> Result<Forms, FormError> {
    let mut n: Option<usize> = None;
    let mut entries = Vec::new();
    let mut seen = HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let err = |message: String| FormError { line, message };
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let tok: Vec<&str> = body.split_whitespace().collect();
        match tok[0] {
            "components" => {
                if n.is_some() {
                    return Err(err("components declared twice".into()));
                }
                let [_, count] = tok[..] else {
                    return Err(err("expected `components N`".into()));
                };
                match count.parse::<usize>() {
                    Ok(c) if c > 0 => n = Some(c),
                    _ => return Err(err(format!("invalid component count {count:?}"))),
                }
            }
            kind @ ("s" | "k") => {
                let n = n.ok_or_else(|| err("entry before `components`".into()))?;
                let cubic = kind == "k";
                let (n_comp, n_deriv) = if cubic { (2, 3) } else { (3, 2) };
                if tok.len() != 1 + n_comp + n_deriv + 1 {
                    return Err(err(format!("`{kind}` entry needs {} fields, found {}", n_comp + n_deriv + 1, tok.len() - 1)));
                }
                let index = |s: &str, lo: usize, hi: usize, what: &str| match s.parse::<usize>() {
                    Ok(v) if (lo..=hi).contains(&v) => Ok(v),
                    _ => Err(err(format!("{what} index {s:?} outside {lo}..={hi}"))),
                };
                let comp = tok[1..=n_comp].iter().map(|s| index(s, 1, n, "component").map(|v| v - 1)).collect::<Result<Vec<_>, _>>()?;
                let deriv = tok[1 + n_comp..1 + n_comp + n_deriv]
                    .iter()
                    .map(|s| index(s, 0, 3, "derivative"))
                    .collect::<Result<Vec<_>, _>>()?;
                let raw_value = tok[tok.len() - 1];
                let value = Value::parse(raw_value).ok_or_else(|| err(format!("invalid coefficient {raw_value:?}")))?;
                if !seen.insert((cubic, comp.clone(), deriv.clone())) {
                    return Err(err("duplicate entry".into()));
                }
                entries.push(Entry { cubic, comp, deriv, value });
            }
            other => return Err(err(format!("unknown directive {other:?}"))),
        }
    }
    let n = n.ok_or(FormError { line: 0, message: "missing `components` line".into() })?;
    if entries.iter().all(|e| matches!(e.value, Value::Exact(_))) {
        Ok(Forms::Exact(build(n, &entries, |v| match v {
            Value::Exact(r) => r,
            Value::Float(_) => unreachable!("checked above"),
        })))
    } else {
        Ok(Forms::Float(build(n, &entries, Value::to_f64)))
    }
}

fn build<S: Scalar>(n: usize, entries: &[Entry], conv: impl Fn(Value) -> S) -> FormSet<S> {
    let mut quadratic = None;
    let mut cubic = None;
    for e in entries {
        let v = conv(e.value);
        if e.cubic {
            let c = cubic.get_or_insert_with(|| CubicFormSpec::zeros(n));
            c.set([e.comp[0], e.comp[1]], e.deriv[0], e.deriv[1], e.deriv[2], v);
        } else {
            let q = quadratic.get_or_insert_with(|| QuadraticFormSpec::zeros(n));
            q.set([e.comp[0], e.comp[1], e.comp[2]], e.deriv[0], e.deriv[1], v);
        }
    }
    if let Some(c) = cubic.as_mut() {
        c.canonicalize();
    }
    FormSet { quadratic, cubic }
}

/// Built-in fixtures accepted by `check-null --builtin`.
pub const BUILTIN_FORMS: [&str; 4] = ["q0", "dt-squared", "q0-derivative", "dt-dtt"];

pub fn builtin_forms(name: &str) -> Option<Forms> {
    let quad = |q| FormSet { quadratic: Some(q), cubic: None };
    let cubic = |c| FormSet { quadratic: None, cubic: Some(c) };
    Some(Forms::Exact(match name {
        "q0" => quad(QuadraticFormSpec::q0()),
        "dt-squared" => quad(QuadraticFormSpec::dt_squared()),
        "q0-derivative" => cubic(CubicFormSpec::q0_derivative(0)),
        "dt-dtt" => cubic(CubicFormSpec::dt_dtt()),
        _ => return None,
    }))
}

/// Verdict and human-readable per-slice listing.
#[derive(Debug, Clone, PartialEq)]
pub struct NullReport {
    pub null: bool,
    pub residual: f64,
    pub exact: bool,
    pub text: String,
}

pub fn check_forms(forms: &Forms) -> NullReport {
    match forms {
        Forms::Exact(set) => report(set, true),
        Forms::Float(set) => report(set, false),
    }
}

fn fmt_xi(xi: &[f64; 4]) -> String {
    let parts: Vec<String> = xi.iter().map(|x| format!("{}", (x * 1e12).round() / 1e12)).collect();
    format!("({})", parts.join(","))
}

fn one_based(c: &[usize]) -> String {
    let parts: Vec<String> = c.iter().map(|i| (i + 1).to_string()).collect();
    parts.join(",")
}

fn report<S: Scalar + Display>(set: &FormSet<S>, exact: bool) -> NullReport {
    let mut text = String::new();
    let mut null = true;
    let mut residual: f64 = 0.0;
    let mut section = |kind: &str, verdict: bool, dec: &NullDecomposition<S>, witness: ([f64; 4], f64), text: &mut String| {
        null &= verdict;
        residual = residual.max(dec.residual);
        for s in &dec.slices {
            let quiet = s.lambda.is_zero()
                && s.residual_sq.is_zero()
                && s.antisym.iter().flatten().all(|x| x.is_zero())
                && s.linear_factor.iter().all(|x| x.is_zero())
                && s.trivially_null == 0.0;
            if quiet {
                continue;
            }
            let mut line = format!("{kind} [{}] ", one_based(&s.components));
            if s.null {
                line.push_str("null");
            } else {
                line.push_str("non-null");
            }
            if kind == "quadratic" {
                write!(line, ", lambda={}", s.lambda).unwrap();
                for i in 0..4 {
                    for j in (i + 1)..4 {
                        if !s.antisym[i][j].is_zero() {
                            write!(line, ", q{i}{j}={}", s.antisym[i][j]).unwrap();
                        }
                    }
                }
            } else {
                let l: Vec<String> = s.linear_factor.iter().map(|x| x.to_string()).collect();
                write!(line, ", linear factor=({})", l.join(",")).unwrap();
                if s.trivially_null > 0.0 {
                    write!(line, ", trivially null part={:.3e}", s.trivially_null).unwrap();
                }
            }
            write!(line, ", residual={:.3e}", s.residual).unwrap();
            writeln!(text, "{line}").unwrap();
        }
        if verdict {
            writeln!(text, "{kind}: null").unwrap();
        } else {
            writeln!(text, "{kind}: non-null, witness xi={} |symbol|={:.6}", fmt_xi(&witness.0), witness.1).unwrap();
        }
    };
    if let Some(q) = &set.quadratic {
        let (v, dec) = check_null_semilinear(q);
        section("quadratic", v, &dec, cone_witness(q), &mut text);
    }
    if let Some(c) = &set.cubic {
        let (v, dec) = check_null_quasilinear(c);
        section("cubic", v, &dec, cone_witness(c), &mut text);
    }
    if set.quadratic.is_none() && set.cubic.is_none() {
        writeln!(text, "no entries: null").unwrap();
    }
    NullReport { null, residual, exact, text }
}
