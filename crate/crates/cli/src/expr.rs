//! Real numbers written as plain literals or products and quotients
//! involving `pi`, e.g. `"pi/2"`, `"3pi/2"`, `"-0.5*pi"`, `"2 * pi / 3"`.

use std::f64::consts::PI;
use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize};

pub fn parse_real(text: &str) -> Result<f64, String> {
    let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if compact.is_empty() {
        return Err("empty number".into());
    }
    let (sign, body) = match compact.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, compact.strip_prefix('+').unwrap_or(&compact)),
    };
    let mut value = 1.0;
    let mut op = '*';
    let mut token = String::new();
    let mut apply = |op: char, token: &str| -> Result<(), String> {
        let factor = factor(token).ok_or_else(|| format!("cannot parse `{text}` as a number"))?;
        match op {
            '*' => value *= factor,
            _ => {
                if factor == 0.0 {
                    return Err(format!("division by zero in `{text}`"));
                }
                value /= factor;
            }
        }
        Ok(())
    };
    for ch in body.chars() {
        if (ch == '*' || ch == '/') && !token.ends_with(['e', 'E']) {
            apply(op, &token)?;
            op = ch;
            token.clear();
        } else {
            token.push(ch);
        }
    }
    apply(op, &token)?;
    let v = sign * value;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{text}` is not finite"))
    }
}

/// `pi`, a literal, or a literal directly followed by `pi`.
fn factor(token: &str) -> Option<f64> {
    let lower = token.to_ascii_lowercase();
    if lower == "pi" {
        return Some(PI);
    }
    if let Some(coef) = lower.strip_suffix("pi") {
        return coef.parse::<f64>().ok().map(|c| c * PI);
    }
    lower.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// A real-valued config entry; accepts numbers and `pi` expressions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Real(pub f64);

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct RealVisitor;
        impl Visitor<'_> for RealVisitor {
            type Value = Real;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or an expression such as \"pi/2\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Real, E> {
                Ok(Real(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Real, E> {
                Ok(Real(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Real, E> {
                Ok(Real(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Real, E> {
                parse_real(v).map(Real).map_err(E::custom)
            }
        }
        d.deserialize_any(RealVisitor)
    }
}
