//! Exact nonnegative rationals used for every density-style parameter
//! (delta, epsilon, mu). Serialized as `"num/den"` strings.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Frac(BigRational);

impl Frac {
    pub fn new(num: i64, den: i64) -> Frac {
        assert!(den != 0, "zero denominator");
        Frac(BigRational::new(num.into(), den.into()))
    }

    pub fn from_int(n: u64) -> Frac {
        Frac(BigRational::from_integer(n.into()))
    }

    pub fn zero() -> Frac {
        Frac(BigRational::zero())
    }

    pub fn one() -> Frac {
        Frac(BigRational::one())
    }

    pub fn inner(&self) -> &BigRational {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    /// `2^-e` exactly.
    pub fn pow2_neg(e: u32) -> Frac {
        Frac(BigRational::new(BigInt::one(), BigInt::one() << e as usize))
    }

    pub fn mul_int(&self, n: u64) -> Frac {
        Frac(&self.0 * BigRational::from_integer(n.into()))
    }

    pub fn div_int(&self, n: u64) -> Frac {
        assert!(n != 0);
        Frac(&self.0 / BigRational::from_integer(n.into()))
    }

    pub fn min(self, other: Frac) -> Frac {
        if other < self {
            other
        } else {
            self
        }
    }

    /// `count >= self * total`, evaluated without rounding.
    pub fn count_at_least(&self, count: u64, total: u64) -> bool {
        Frac::from_int(count) >= self.mul_int(total)
    }

    pub fn ceil_u64(&self) -> u64 {
        self.0.ceil().to_integer().to_u64().expect("ceil out of range")
    }

    pub fn floor_u64(&self) -> u64 {
        self.0.floor().to_integer().to_u64().expect("floor out of range")
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }
}

macro_rules! frac_binop {
    ($tr:ident, $method:ident, $op:tt) => {
        impl std::ops::$tr<&Frac> for &Frac {
            type Output = Frac;
            fn $method(self, rhs: &Frac) -> Frac {
                Frac(&self.0 $op &rhs.0)
            }
        }
        impl std::ops::$tr for Frac {
            type Output = Frac;
            fn $method(self, rhs: Frac) -> Frac {
                Frac(self.0 $op rhs.0)
            }
        }
    };
}

frac_binop!(Add, add, +);
frac_binop!(Sub, sub, -);
frac_binop!(Mul, mul, *);
frac_binop!(Div, div, /);

impl fmt::Display for Frac {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl FromStr for Frac {
    type Err = Error;

    /// Accepts `"a/b"`, integers and finite decimals such as `"0.5"`.
    fn from_str(s: &str) -> Result<Frac, Error> {
        let bad = || Error::Parse(format!("not a rational: {s:?}"));
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            return Ok(Frac(BigRational::new(n, d)));
        }
        if let Some((int, frac)) = s.split_once('.') {
            if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            let digits = format!("{int}{frac}");
            let n: BigInt = digits.parse().map_err(|_| bad())?;
            let d = num_traits::pow(BigInt::from(10), frac.len());
            return Ok(Frac(BigRational::new(n, d)));
        }
        let n: BigInt = s.parse().map_err(|_| bad())?;
        Ok(Frac(BigRational::from_integer(n)))
    }
}

impl Serialize for Frac {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Frac {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Frac, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
