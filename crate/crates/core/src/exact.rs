//! Exact rational helpers shared by the formula and LP modules.

use num_rational::Ratio;
use num_traits::ToPrimitive;

/// Exact rational number used for every DoF value.
pub type Q = Ratio<i128>;

pub fn q(n: i128) -> Q {
    Q::from_integer(n)
}

pub fn frac(n: i128, d: i128) -> Q {
    Q::new(n, d)
}

/// Renders `p/q`, always including the denominator.
pub fn fraction_string(x: &Q) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// Parses `p/q` or a bare integer.
pub fn parse_fraction(s: &str) -> Option<Q> {
    match s.split_once('/') {
        Some((n, d)) => {
            let n: i128 = n.trim().parse().ok()?;
            let d: i128 = d.trim().parse().ok()?;
            (d != 0).then(|| Q::new(n, d))
        }
        None => s.trim().parse::<i128>().ok().map(Q::from_integer),
    }
}

pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Six-digit decimal rendering used in tables and CSV.
pub fn decimal_string(x: &Q) -> String {
    format!("{:.6}", to_f64(x))
}

/// Serde adapter writing a rational as a `p/q` string.
pub mod serde_fraction {
    use super::{fraction_string, parse_fraction, Q};
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Q, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&fraction_string(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Q, D::Error> {
        let s = String::deserialize(d)?;
        parse_fraction(&s).ok_or_else(|| D::Error::custom(format!("bad fraction {s:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fraction_rendering() {
        assert_eq!(fraction_string(&frac(540, 14)), "270/7");
        assert_eq!(fraction_string(&q(4)), "4/1");
        assert_eq!(decimal_string(&frac(270, 7)), "38.571429");
    }

    #[test]
    fn fraction_parsing() {
        assert_eq!(parse_fraction("270/7"), Some(frac(270, 7)));
        assert_eq!(parse_fraction("4"), Some(q(4)));
        assert_eq!(parse_fraction("1/0"), None);
        assert_eq!(parse_fraction("x"), None);
    }
}
