//! Text form of rate sequences.
//!
//! ```text
//! spec   := "poly:" num ":" num | "geom:" num | "const:" num | "list:" num ("," num)*
//! num    := decimal with optional exponent, e.g. 1, 2.5, 1e-3
//! ```
//!
//! All parameters must be strictly positive, except the polynomial exponent,
//! which may be any finite number. [`RateSequence`]'s `Display` prints the
//! canonical form, which parses back to the same sequence.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::rates::RateSequence;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("rate spec error at offset {offset}: {reason}")]
pub struct ParseError {
    pub offset: usize,
    pub reason: String,
}

fn err(offset: usize, reason: impl Into<String>) -> ParseError {
    ParseError {
        offset,
        reason: reason.into(),
    }
}

fn number(text: &str, offset: usize) -> Result<f64, ParseError> {
    let valid = !text.is_empty()
        && text
            .chars()
            .all(|c| c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E' | '+' | '-'))
        && text.chars().next().is_some_and(|c| c.is_ascii_digit() || matches!(c, '.' | '+' | '-'));
    let v: f64 = if valid { text.parse().ok() } else { None }
        .ok_or_else(|| err(offset, format!("malformed number {text:?}")))?;
    if !v.is_finite() {
        return Err(err(offset, format!("number {text:?} is not finite")));
    }
    Ok(v)
}

fn positive(text: &str, offset: usize) -> Result<f64, ParseError> {
    let v = number(text, offset)?;
    if v <= 0.0 {
        return Err(err(offset, format!("parameter must be > 0, got {v}")));
    }
    Ok(v)
}

/// Splits `body` on `sep`, yielding each piece with its absolute offset.
fn fields(body: &str, base: usize, sep: char) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = 0;
    for (i, c) in body.char_indices() {
        if c == sep {
            out.push((base + start, &body[start..i]));
            start = i + c.len_utf8();
        }
    }
    out.push((base + start, &body[start..]));
    out
}

pub fn parse_rate_spec(text: &str) -> Result<RateSequence, ParseError> {
    let colon = text
        .find(':')
        .ok_or_else(|| err(text.len(), "expected '<kind>:' prefix"))?;
    let kind = &text[..colon];
    let base = colon + 1;
    let body = &text[base..];
    let expect_args = |n: usize| -> Result<Vec<(usize, &str)>, ParseError> {
        let f = fields(body, base, ':');
        if f.len() != n {
            let at = f.get(n).map_or(text.len(), |(o, _)| o.saturating_sub(1));
            return Err(err(at, format!("{kind} takes {n} parameter(s), found {}", f.len())));
        }
        Ok(f)
    };
    match kind {
        "poly" => {
            let f = expect_args(2)?;
            let c = positive(f[0].1, f[0].0)?;
            let p = number(f[1].1, f[1].0)?;
            Ok(RateSequence::Polynomial { c, p })
        }
        "geom" => {
            let f = expect_args(1)?;
            Ok(RateSequence::Geometric {
                a: positive(f[0].1, f[0].0)?,
            })
        }
        "const" => {
            let f = expect_args(1)?;
            Ok(RateSequence::Constant {
                c: positive(f[0].1, f[0].0)?,
            })
        }
        "list" => {
            if body.is_empty() {
                return Err(err(base, "empty list"));
            }
            let values = fields(body, base, ',')
                .into_iter()
                .map(|(o, s)| positive(s, o))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(RateSequence::Explicit(values))
        }
        other => Err(err(0, format!("unknown rate kind {other:?}"))),
    }
}

impl FromStr for RateSequence {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_rate_spec(s)
    }
}

impl fmt::Display for RateSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Polynomial { c, p } => write!(f, "poly:{c:?}:{p:?}"),
            Self::Geometric { a } => write!(f, "geom:{a:?}"),
            Self::Constant { c } => write!(f, "const:{c:?}"),
            Self::Explicit(list) => {
                f.write_str("list:")?;
                for (i, v) in list.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{v:?}")?;
                }
                Ok(())
            }
        }
    }
}
