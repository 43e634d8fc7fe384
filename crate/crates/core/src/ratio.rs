//! Exact counts-as-percentages and decimal thresholds.
//!
//! Percentages are rendered with two decimals, rounding half up, from the
//! integer numerator and denominator; no floating point is involved.

use alloc::format;
use alloc::string::String;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A count out of a total.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Ratio {
    pub count: u64,
    pub total: u64,
}

impl Ratio {
    pub const fn new(count: u64, total: u64) -> Self {
        Ratio { count, total }
    }

    /// Percentage in hundredths of a percent, rounded half up.
    /// A zero total gives zero.
    pub fn basis_points(&self) -> u64 {
        if self.total == 0 {
            return 0;
        }
        let n = u128::from(self.count) * 10_000;
        let d = u128::from(self.total);
        ((2 * n + d) / (2 * d)) as u64
    }

    /// e.g. `"85.22%"`.
    pub fn percent(&self) -> String {
        let bp = self.basis_points();
        format!("{}.{:02}%", bp / 100, bp % 100)
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.count, self.percent())
    }
}

#[derive(Serialize, Deserialize)]
struct RatioRepr {
    count: u64,
    total: u64,
    percent: String,
}

impl Serialize for Ratio {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        RatioRepr { count: self.count, total: self.total, percent: self.percent() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Ratio {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = RatioRepr::deserialize(d)?;
        Ok(Ratio::new(r.count, r.total))
    }
}

/// A non-negative decimal threshold held as an exact fraction, so that
/// boundary comparisons (`0.5` requests per second, `0.1` images per page)
/// are exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Decimal {
    numer: u64,
    denom: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecimalError(String);

impl fmt::Display for DecimalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl core::error::Error for DecimalError {}

impl Decimal {
    /// `numer / denom`, reduced. `denom` must be positive.
    pub const fn from_parts(numer: u64, denom: u64) -> Self {
        let (mut a, mut b) = (numer, denom);
        while b != 0 {
            let t = a % b;
            a = b;
            b = t;
        }
        if a <= 1 {
            Decimal { numer, denom }
        } else {
            Decimal { numer: numer / a, denom: denom / a }
        }
    }

    pub fn numer(&self) -> u64 {
        self.numer
    }

    pub fn denom(&self) -> u64 {
        self.denom
    }

    pub fn is_positive(&self) -> bool {
        self.numer > 0
    }

    /// `a / b >= self`, exactly. `b` must be positive.
    pub fn le_ratio(&self, a: u64, b: u64) -> bool {
        u128::from(a) * u128::from(self.denom) >= u128::from(self.numer) * u128::from(b)
    }

    /// `a / b < self`, exactly. `b` must be positive.
    pub fn gt_ratio(&self, a: u64, b: u64) -> bool {
        !self.le_ratio(a, b)
    }

    pub fn to_f64(&self) -> f64 {
        self.numer as f64 / self.denom as f64
    }
}

impl FromStr for Decimal {
    type Err = DecimalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || DecimalError(format!("`{s}` is not a non-negative decimal number"));
        let (int, frac) = s.trim().split_once('.').unwrap_or((s.trim(), ""));
        if (int.is_empty() && frac.is_empty()) || frac.len() > 12 {
            return Err(bad());
        }
        if !int.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let denom = 10u64.pow(frac.len() as u32);
        let int: u64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
        let frac_v: u64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
        let numer = int.checked_mul(denom).and_then(|v| v.checked_add(frac_v)).ok_or_else(bad)?;
        Ok(Decimal::from_parts(numer, denom))
    }
}

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let int = self.numer / self.denom;
        let rem = self.numer % self.denom;
        if rem == 0 {
            return write!(f, "{int}");
        }
        // smallest power of ten the denominator divides, if any
        let mut scale = 10u128;
        let mut width = 1;
        while width <= 19 && !scale.is_multiple_of(u128::from(self.denom)) {
            scale *= 10;
            width += 1;
        }
        if width > 19 {
            return write!(f, "{}", self.to_f64());
        }
        let mut frac = u128::from(rem) * (scale / u128::from(self.denom));
        while frac.is_multiple_of(10) {
            frac /= 10;
            width -= 1;
        }
        write!(f, "{int}.{frac:0width$}")
    }
}

impl Serialize for Decimal {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Decimal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = Decimal;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a decimal number or string")
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<Decimal, E> {
                v.parse().map_err(E::custom)
            }
            fn visit_u64<E: serde::de::Error>(self, v: u64) -> Result<Decimal, E> {
                Ok(Decimal::from_parts(v, 1))
            }
            fn visit_i64<E: serde::de::Error>(self, v: i64) -> Result<Decimal, E> {
                u64::try_from(v).map(|v| Decimal::from_parts(v, 1)).map_err(E::custom)
            }
            fn visit_f64<E: serde::de::Error>(self, v: f64) -> Result<Decimal, E> {
                format!("{v}").parse().map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}
