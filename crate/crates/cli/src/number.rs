//! Scenario numbers: plain TOML numbers or exact strings such as `"4pi"`,
//! `"pi/2"`, `"-2pi/3"` or `"1/3"`, resolved here so users never type a
//! truncated π.

use std::f64::consts::PI;
use std::fmt;

use bubblelab::C64;
use serde::de::{self, Deserializer, Visitor};
use serde::Deserialize;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Num(pub f64);

/// Parse `[sign][a][pi][/b]` with decimal `a`, `b`.
pub fn parse_number(s: &str) -> Option<f64> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let t = t.to_ascii_lowercase();
    if t.is_empty() {
        return None;
    }
    let (num, den) = match t.split_once('/') {
        Some((a, b)) => (a, Some(b)),
        None => (t.as_str(), None),
    };
    let (sign, num) = match num.strip_prefix('-') {
        Some(r) => (-1.0, r),
        None => (1.0, num.strip_prefix('+').unwrap_or(num)),
    };
    let (coef, has_pi) = match num.strip_suffix("pi").or_else(|| num.strip_suffix('π')) {
        Some(c) => (c.strip_suffix('*').unwrap_or(c), true),
        None => (num, false),
    };
    let a = if coef.is_empty() {
        if !has_pi {
            return None;
        }
        1.0
    } else {
        coef.parse::<f64>().ok()?
    };
    let b = match den {
        Some(d) => {
            let v = d.parse::<f64>().ok()?;
            if v == 0.0 {
                return None;
            }
            v
        }
        None => 1.0,
    };
    let v = sign * a * if has_pi { PI } else { 1.0 } / b;
    v.is_finite().then_some(v)
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Num;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or a string such as \"4pi\" or \"pi/2\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Num, E> {
                Ok(Num(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Num, E> {
                Ok(Num(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Num, E> {
                Ok(Num(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Num, E> {
                parse_number(v)
                    .map(Num)
                    .ok_or_else(|| E::invalid_value(de::Unexpected::Str(v), &self))
            }
        }
        d.deserialize_any(V)
    }
}

/// Complex number written as `[re, im]`.
#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
pub struct Cplx(pub Num, pub Num);

impl Cplx {
    pub fn value(&self) -> C64 {
        C64::new(self.0 .0, self.1 .0)
    }
}

/// Replace every string that parses as a number by that number.
pub fn resolve_numbers(v: &mut toml::Value) {
    match v {
        toml::Value::String(s) => {
            if let Some(x) = parse_number(s) {
                *v = toml::Value::Float(x);
            }
        }
        toml::Value::Array(a) => a.iter_mut().for_each(resolve_numbers),
        toml::Value::Table(t) => t.iter_mut().for_each(|(_, x)| resolve_numbers(x)),
        _ => {}
    }
}
