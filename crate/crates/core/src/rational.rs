use std::fmt;

use num_rational::Ratio;
use num_traits::ToPrimitive;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Exact rational with `i64` numerator and denominator, kept in lowest terms.
///
/// Serializes as `{"num": …, "den": …}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rational(pub Ratio<i64>);

impl Rational {
    pub fn new(num: i64, den: i64) -> Self {
        Rational(Ratio::new(num, den))
    }

    pub fn from_integer(n: i64) -> Self {
        Rational(Ratio::from_integer(n))
    }

    pub fn num(&self) -> i64 {
        *self.0.numer()
    }

    pub fn den(&self) -> i64 {
        *self.0.denom()
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().expect("finite rational")
    }

    pub fn is_positive(&self) -> bool {
        self.num() > 0
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num(), self.den())
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $op:tt) => {
        impl std::ops::$tr for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational(self.0 $op rhs.0)
            }
        }
    };
}
binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);
binop!(Div, div, /);

#[derive(Serialize, Deserialize)]
struct RationalJson {
    num: i64,
    den: i64,
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        RationalJson {
            num: self.num(),
            den: self.den(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = RationalJson::deserialize(deserializer)?;
        if raw.den == 0 {
            return Err(serde::de::Error::custom("zero denominator"));
        }
        Ok(Rational::new(raw.num, raw.den))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_shape() {
        let r = Rational::new(2, 4800);
        let s = serde_json::to_string(&r).unwrap();
        assert_eq!(s, r#"{"num":1,"den":2400}"#);
        let back: Rational = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
        assert!(serde_json::from_str::<Rational>(r#"{"num":1,"den":0}"#).is_err());
    }
}
