//! Deformation functions `f(n)`, q-brackets and f-factorials.
//!
//! A [`DeformationSpec`] names the nonlinearity of the oscillator,
//! `A = a f(N)`. Everything else in the crate is parameterized by it. All
//! factorial-type quantities are handled as logarithms; `n! f(n)!²` overflows
//! a double well before the truncation orders used here.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of trailing table points used to estimate `lim n f²(n)`.
const RADIUS_TAIL: usize = 10;
/// Relative spread below which the tail of `n f²(n)` is considered converged.
const RADIUS_SPREAD: f64 = 1e-3;

/// The nonlinearity `f(n)` of an f-deformed oscillator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DeformationSpec {
    /// `f(n) = 1`, the undeformed oscillator.
    Identity,
    /// `f(n) = sqrt([n]/n)` with the symmetric q-bracket.
    QDeformed { q: f64 },
    /// `f(n)² = n^(p-1)`, i.e. `f(n) = 1/sqrt(n^(1-p))`.
    PowerLaw { p: f64 },
    /// Explicit positive values `f(1), f(2), …`.
    Tabulated { values: Vec<f64> },
}

/// Limit `lim n f²(n)` bounding the normalizable region `|ξ| < R`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Radius {
    Finite(f64),
    Infinite,
}

impl Radius {
    /// Whether a coherent-state amplitude of the given modulus is normalizable.
    /// `ξ = 0` is always admitted.
    pub fn admits(&self, modulus: f64) -> bool {
        match *self {
            Radius::Infinite => true,
            Radius::Finite(r) => modulus == 0.0 || modulus < r,
        }
    }

    pub fn value(&self) -> f64 {
        match *self {
            Radius::Infinite => f64::INFINITY,
            Radius::Finite(r) => r,
        }
    }
}

/// The symmetric q-bracket `[x] = (q^x - q^-x) / (q - q^-1)`.
pub fn q_bracket(x: f64, q: f64) -> Result<f64> {
    if !(q > 0.0) || !q.is_finite() {
        return Err(Error::InvalidParameter(format!("q must be positive, got {q}")));
    }
    if q == 1.0 {
        return Err(Error::DegenerateBracket);
    }
    Ok((q.powf(x) - q.powf(-x)) / (q - q.recip()))
}

/// `ln [n]` for integer `n >= 1`, stable for large `n |ln q|`.
fn ln_q_bracket(n: usize, q: f64) -> f64 {
    let h = q.ln().abs();
    let nh = n as f64 * h;
    let ln_num = if nh < 20.0 {
        nh.sinh().ln()
    } else {
        nh - std::f64::consts::LN_2 + (-(-2.0 * nh).exp()).ln_1p()
    };
    ln_num - h.sinh().ln()
}

impl DeformationSpec {
    pub fn q_deformed(q: f64) -> Result<Self> {
        if !(q > 0.0) || !q.is_finite() {
            return Err(Error::InvalidParameter(format!("q must be positive, got {q}")));
        }
        if q == 1.0 {
            return Err(Error::DegenerateBracket);
        }
        Ok(DeformationSpec::QDeformed { q })
    }

    pub fn power_law(p: f64) -> Result<Self> {
        if !(p >= 1.0) || !p.is_finite() {
            return Err(Error::InvalidParameter(format!("power-law exponent must be >= 1, got {p}")));
        }
        Ok(DeformationSpec::PowerLaw { p })
    }

    pub fn tabulated(values: Vec<f64>) -> Result<Self> {
        if let Some((i, &v)) = values.iter().enumerate().find(|(_, v)| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::NonPositiveTableEntry { index: i + 1, value: v });
        }
        Ok(DeformationSpec::Tabulated { values })
    }

    /// Parses a one-column table where line `k` holds `f(k)`. Trailing blank
    /// lines are ignored; any other malformed line is reported by number.
    pub fn parse_table(text: &str) -> Result<Self> {
        let lines: Vec<&str> = text.lines().collect();
        let last = lines.iter().rposition(|l| !l.trim().is_empty()).map_or(0, |i| i + 1);
        let mut values = Vec::with_capacity(last);
        for (i, line) in lines[..last].iter().enumerate() {
            let line_no = i + 1;
            let t = line.trim();
            let v: f64 = t.parse().map_err(|_| Error::TableParse {
                line: line_no,
                message: format!("cannot parse `{t}` as a real number"),
            })?;
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::TableParse {
                    line: line_no,
                    message: format!("f({line_no}) = {v} is not positive"),
                });
            }
            values.push(v);
        }
        if values.is_empty() {
            return Err(Error::TableParse { line: 1, message: "empty table".into() });
        }
        Ok(DeformationSpec::Tabulated { values })
    }

    pub fn load_table(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::TableParse { line: 0, message: e.to_string() })?;
        Self::parse_table(&text)
    }

    /// Re-checks the invariants of a spec that did not go through a
    /// constructor, e.g. one deserialized from JSON.
    pub fn validate(&self) -> Result<()> {
        match self {
            DeformationSpec::Identity => Ok(()),
            DeformationSpec::QDeformed { q } => Self::q_deformed(*q).map(|_| ()),
            DeformationSpec::PowerLaw { p } => Self::power_law(*p).map(|_| ()),
            DeformationSpec::Tabulated { values } => Self::tabulated(values.clone()).map(|_| ()),
        }
    }

    /// `ln f(n)`; `f(0) = 1` by convention.
    pub fn ln_f(&self, n: usize) -> Result<f64> {
        if n == 0 {
            return Ok(0.0);
        }
        Ok(match self {
            DeformationSpec::Identity => 0.0,
            DeformationSpec::QDeformed { q } => 0.5 * (ln_q_bracket(n, *q) - (n as f64).ln()),
            DeformationSpec::PowerLaw { p } => 0.5 * (p - 1.0) * (n as f64).ln(),
            DeformationSpec::Tabulated { values } => values
                .get(n - 1)
                .ok_or(Error::TableIndexOutOfRange { index: n, len: values.len() })?
                .ln(),
        })
    }

    /// `f(n)`, strictly positive for every constructible spec.
    pub fn eval_f(&self, n: usize) -> Result<f64> {
        if n == 0 {
            return Ok(1.0);
        }
        match self {
            DeformationSpec::Identity => Ok(1.0),
            DeformationSpec::PowerLaw { p } => Ok((n as f64).powf(0.5 * (p - 1.0))),
            DeformationSpec::Tabulated { values } => values
                .get(n - 1)
                .copied()
                .ok_or(Error::TableIndexOutOfRange { index: n, len: values.len() }),
            DeformationSpec::QDeformed { .. } => self.ln_f(n).map(f64::exp),
        }
    }

    /// `ln f(n)! = Σ_{k=1..n} ln f(k)`, zero for `n = 0`.
    pub fn log_f_factorial(&self, n: usize) -> Result<f64> {
        let mut acc = 0.0;
        for k in 1..=n {
            acc += self.ln_f(k)?;
        }
        Ok(acc)
    }

    /// `lim n f²(n)`; the dual variant uses `1/f`.
    pub fn convergence_radius(&self) -> Result<Radius> {
        self.radius(false)
    }

    pub fn dual_convergence_radius(&self) -> Result<Radius> {
        self.radius(true)
    }

    fn radius(&self, dual: bool) -> Result<Radius> {
        let sign = if dual { -1.0 } else { 1.0 };
        match self {
            DeformationSpec::Identity => Ok(Radius::Infinite),
            DeformationSpec::PowerLaw { p } => {
                // n f^{±2}(n) = n^{1 ± (p-1)}
                let growth = 1.0 + sign * (p - 1.0);
                Ok(if growth > 0.0 {
                    Radius::Infinite
                } else if growth == 0.0 {
                    Radius::Finite(1.0)
                } else {
                    Radius::Finite(0.0)
                })
            }
            // [n] grows geometrically, so n·n/[n] -> 0 for the dual.
            DeformationSpec::QDeformed { .. } => {
                Ok(if dual { Radius::Finite(0.0) } else { Radius::Infinite })
            }
            DeformationSpec::Tabulated { values } => tabulated_radius(values, sign),
        }
    }

    /// A precomputed `f` table covering `n = 0..=max_n`.
    pub fn table(&self, max_n: usize, dual: bool) -> Result<DeformTable> {
        DeformTable::new(self, max_n, dual)
    }

    /// Compact descriptor in the command-line syntax.
    pub fn descriptor(&self) -> String {
        self.to_string()
    }
}

fn tabulated_radius(values: &[f64], sign: f64) -> Result<Radius> {
    if values.len() < RADIUS_TAIL {
        return Err(Error::RadiusUndetermined(format!(
            "table has {} entries, at least {RADIUS_TAIL} are needed",
            values.len()
        )));
    }
    let start = values.len() - RADIUS_TAIL;
    let tail: Vec<(f64, f64)> = values[start..]
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let n = (start + i + 1) as f64;
            (n, n * v.powf(2.0 * sign))
        })
        .collect();
    let (min, max) = tail
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, v)| (lo.min(v), hi.max(v)));
    let mean = tail.iter().map(|&(_, v)| v).sum::<f64>() / RADIUS_TAIL as f64;
    if (max - min) / mean < RADIUS_SPREAD {
        return Ok(Radius::Finite(mean));
    }
    // Not flat: accept only a clean power-law trend in the tail.
    let slopes: Vec<f64> = tail
        .windows(2)
        .map(|w| (w[1].1 / w[0].1).ln() / (w[1].0 / w[0].0).ln())
        .collect();
    if slopes.iter().all(|&s| s >= 0.5) {
        Ok(Radius::Infinite)
    } else if slopes.iter().all(|&s| s <= -0.5) {
        Ok(Radius::Finite(0.0))
    } else {
        Err(Error::RadiusUndetermined(format!(
            "n f²(n) over the last {RADIUS_TAIL} entries spans [{min}, {max}] without a trend"
        )))
    }
}

impl fmt::Display for DeformationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DeformationSpec::Identity => write!(f, "identity"),
            DeformationSpec::QDeformed { q } => write!(f, "qdef:{q}"),
            DeformationSpec::PowerLaw { p } => write!(f, "power:{p}"),
            DeformationSpec::Tabulated { values } => write!(f, "table[{}]", values.len()),
        }
    }
}

impl FromStr for DeformationSpec {
    type Err = Error;

    /// `identity`, `qdef:<q>`, `power:<p>` or `table:<path>`.
    fn from_str(s: &str) -> Result<Self> {
        let parse_num = |v: &str| {
            v.parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("cannot parse `{v}` in `{s}`")))
        };
        match s.split_once(':') {
            None if s == "identity" => Ok(DeformationSpec::Identity),
            Some(("qdef", v)) => Self::q_deformed(parse_num(v)?),
            Some(("power", v)) => Self::power_law(parse_num(v)?),
            Some(("table", path)) => Self::load_table(path),
            _ => Err(Error::InvalidParameter(format!(
                "unknown deformation `{s}` (expected identity|qdef:<q>|power:<p>|table:<path>)"
            ))),
        }
    }
}

/// `ln f(n)` and `ln f(n)!` for `n = 0..=max_n`, optionally inverted (`f -> 1/f`).
#[derive(Clone, Debug)]
pub struct DeformTable {
    ln_f: Vec<f64>,
    ln_fact: Vec<f64>,
}

impl DeformTable {
    pub fn new(spec: &DeformationSpec, max_n: usize, dual: bool) -> Result<Self> {
        let sign = if dual { -1.0 } else { 1.0 };
        let mut ln_f = Vec::with_capacity(max_n + 1);
        let mut ln_fact = Vec::with_capacity(max_n + 1);
        let mut acc = 0.0;
        for n in 0..=max_n {
            let l = sign * spec.ln_f(n)?;
            acc += l;
            ln_f.push(l);
            ln_fact.push(acc);
        }
        Ok(DeformTable { ln_f, ln_fact })
    }

    pub fn max_n(&self) -> usize {
        self.ln_f.len() - 1
    }

    #[inline]
    pub fn ln_f(&self, n: usize) -> f64 {
        self.ln_f[n]
    }

    #[inline]
    pub fn f(&self, n: usize) -> f64 {
        self.ln_f[n].exp()
    }

    #[inline]
    pub fn ln_factorial(&self, n: usize) -> f64 {
        self.ln_fact[n]
    }
}
