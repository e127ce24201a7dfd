//! Reals given as decimals, fractions or log ratios (`0.5`, `1/3`,
//! `log5/log9`).

use std::fmt;
use std::str::FromStr;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Real(pub f64);

impl Real {
    pub fn get(self) -> f64 {
        self.0
    }
}

fn term(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let log_arg = s.strip_prefix("log").or_else(|| s.strip_prefix("ln"));
    match log_arg {
        Some(arg) => {
            let arg = arg.trim().trim_start_matches('(').trim_end_matches(')');
            let v: f64 = arg.trim().parse().map_err(|_| format!("bad logarithm argument in {s:?}"))?;
            if v > 0.0 {
                Ok(v.ln())
            } else {
                Err(format!("logarithm of a non-positive number in {s:?}"))
            }
        }
        None => s.parse().map_err(|_| format!("not a number: {s:?}")),
    }
}

impl FromStr for Real {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let v = match s.split_once('/') {
            Some((num, den)) => {
                let d = term(den)?;
                if d == 0.0 {
                    return Err(format!("zero denominator in {s:?}"));
                }
                term(num)? / d
            }
            None => term(s)?,
        };
        if v.is_finite() {
            Ok(Real(v))
        } else {
            Err(format!("{s:?} is not finite"))
        }
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Real;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number or an expression such as \"1/3\" or \"log5/log9\"")
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
                v.parse().map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}
