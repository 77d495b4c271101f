use std::cmp::Ordering;
use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Mantissas at level one and above lie in `(BAND, e^BAND]`.
pub const BAND: f64 = 700.0;
/// Log gap beyond which the smaller summand is dropped.
pub const ABSORB_GAP: f64 = 40.0;

fn band_top() -> f64 {
    BAND.exp()
}

/// Positive number `exp^level(mantissa)`, or positive infinity.
///
/// Canonical form: level 0 holds any finite `mantissa` in `[0, e^BAND]`;
/// higher levels keep `mantissa` in `(BAND, e^BAND]`, so ordering is
/// lexicographic in `(level, mantissa)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TowerValue {
    level: u32,
    mantissa: f64,
}

/// Result of an addition that may have dropped its smaller term.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sum {
    pub value: TowerValue,
    pub absorbed: bool,
}

impl TowerValue {
    pub const INFINITY: TowerValue = TowerValue { level: 0, mantissa: f64::INFINITY };
    pub const ZERO: TowerValue = TowerValue { level: 0, mantissa: 0.0 };
    pub const ONE: TowerValue = TowerValue { level: 0, mantissa: 1.0 };

    pub fn new(level: u32, mantissa: f64) -> Result<Self> {
        if !(mantissa >= 0.0) || (mantissa.is_infinite() && level > 0) {
            return Err(Error::InvalidConstant(format!("tower mantissa {mantissa} at level {level}")));
        }
        Ok(Self { level, mantissa }.normalize())
    }

    pub fn from_f64(x: f64) -> Result<Self> {
        Self::new(0, x)
    }

    /// The value `e^l` for a real `l`.
    pub fn from_ln(l: f64) -> Result<Self> {
        if l.is_nan() {
            return Err(Error::InvalidConstant("NaN logarithm".into()));
        }
        Ok(if l == f64::INFINITY {
            Self::INFINITY
        } else if l <= BAND {
            Self { level: 0, mantissa: l.exp() }
        } else {
            Self { level: 1, mantissa: l }.normalize()
        })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn mantissa(&self) -> f64 {
        self.mantissa
    }

    pub fn is_infinite(&self) -> bool {
        self.mantissa.is_infinite()
    }

    /// Plain value when it fits level 0.
    pub fn to_f64(&self) -> Option<f64> {
        (self.level == 0).then_some(self.mantissa)
    }

    /// Natural logarithm as a real, when it fits level 0 of the log.
    pub fn ln_f64(&self) -> Option<f64> {
        match self.level {
            0 => Some(self.mantissa.ln()),
            1 => Some(self.mantissa),
            _ => None,
        }
    }

    pub fn normalize(self) -> Self {
        let Self { mut level, mut mantissa } = self;
        if mantissa.is_infinite() {
            return Self::INFINITY;
        }
        while level > 0 && mantissa <= BAND {
            mantissa = mantissa.exp();
            level -= 1;
        }
        while mantissa > band_top() {
            mantissa = mantissa.ln();
            level += 1;
        }
        Self { level, mantissa }
    }

    /// Natural logarithm; the value must be at least 1.
    pub fn ln(&self) -> Result<Self> {
        if self.is_infinite() {
            return Ok(Self::INFINITY);
        }
        if self.level == 0 {
            if self.mantissa < 1.0 {
                return Err(Error::InvalidConstant(format!("logarithm of {} is negative", self.mantissa)));
            }
            return Ok(Self { level: 0, mantissa: self.mantissa.ln() });
        }
        Ok(Self { level: self.level - 1, mantissa: self.mantissa }.normalize())
    }

    pub fn exp(&self) -> Self {
        if self.is_infinite() {
            return Self::INFINITY;
        }
        if self.level == 0 {
            return Self::from_ln(self.mantissa).expect("finite");
        }
        Self { level: self.level + 1, mantissa: self.mantissa }.normalize()
    }

    pub fn add(&self, other: &Self) -> Sum {
        let (big, small) = if self >= other { (*self, *other) } else { (*other, *self) };
        if big.is_infinite() {
            return Sum { value: Self::INFINITY, absorbed: false };
        }
        if small.mantissa == 0.0 && small.level == 0 {
            return Sum { value: big, absorbed: false };
        }
        if big.level == 0 {
            let s = big.mantissa + small.mantissa;
            if s <= band_top() {
                return Sum { value: Self { level: 0, mantissa: s }, absorbed: false };
            }
            let l = big.mantissa.ln() + (small.mantissa / big.mantissa).ln_1p();
            return Sum { value: Self::from_ln(l).expect("finite"), absorbed: false };
        }
        // big = e^L with L real at level 1; beyond that the gap is astronomical.
        let (Some(lb), Some(ls)) = (big.ln_f64(), small.ln_f64()) else {
            return Sum { value: big, absorbed: true };
        };
        if lb - ls > ABSORB_GAP {
            return Sum { value: big, absorbed: true };
        }
        let l = lb + (ls - lb).exp().ln_1p();
        Sum { value: Self::from_ln(l).expect("finite"), absorbed: false }
    }

    /// Sum with the absorption flag discarded.
    pub fn plus(&self, other: &Self) -> Self {
        self.add(other).value
    }

    pub fn mul(&self, other: &Self) -> Self {
        let (big, small) = if self >= other { (*self, *other) } else { (*other, *self) };
        if small.level == 0 && small.mantissa == 0.0 {
            return Self::ZERO;
        }
        if big.is_infinite() {
            return Self::INFINITY;
        }
        if big.level == 0 {
            let p = big.mantissa * small.mantissa;
            if p <= band_top() {
                return Self { level: 0, mantissa: p };
            }
            return Self::from_ln(big.mantissa.ln() + small.mantissa.ln()).expect("finite");
        }
        // ln(big) >= BAND, so it is a tower; ln(small) may be negative only at level 0.
        let lb = big.ln().expect("big >= 1");
        let l = if small.level == 0 && small.mantissa < 1.0 {
            let neg = -small.mantissa.ln();
            match lb.to_f64() {
                Some(x) => Self { level: 0, mantissa: x - neg },
                None => lb,
            }
        } else {
            lb.plus(&small.ln().expect("small >= 1"))
        };
        l.exp_signed()
    }

    /// `exp` of a logarithm produced above; level-0 mantissas may be any real.
    fn exp_signed(self) -> Self {
        if self.level == 0 {
            Self::from_ln(self.mantissa).expect("finite")
        } else {
            self.exp()
        }
    }

    pub fn mul_f64(&self, x: f64) -> Result<Self> {
        Ok(self.mul(&Self::from_f64(x)?))
    }

    pub fn div_f64(&self, x: f64) -> Result<Self> {
        if !(x > 0.0) {
            return Err(Error::InvalidConstant(format!("division by {x}")));
        }
        if x.is_infinite() {
            return Err(Error::InvalidConstant("division by infinity".into()));
        }
        let r = 1.0 / x;
        if r.is_finite() {
            return self.mul_f64(r);
        }
        // 1/x overflows: divide the logarithm side instead.
        match self.ln_f64() {
            Some(l) => Self::from_ln(l - x.ln()),
            None => Ok(*self),
        }
    }

    /// `self^p` for real `p > 0`.
    pub fn powf(&self, p: f64) -> Result<Self> {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::InvalidConstant(format!("power exponent {p}")));
        }
        if self.is_infinite() {
            return Ok(Self::INFINITY);
        }
        if self.level == 0 {
            if self.mantissa == 0.0 {
                return Ok(Self::ZERO);
            }
            let v = self.mantissa.powf(p);
            if v.is_finite() && v <= band_top() && v > 0.0 {
                return Ok(Self { level: 0, mantissa: v });
            }
            return Self::from_ln(p * self.mantissa.ln());
        }
        Ok(self.ln()?.mul_f64(p)?.exp())
    }

    /// `self^e` for a tower exponent; the base must exceed 1.
    pub fn pow(&self, e: &Self) -> Result<Self> {
        if let Some(p) = e.to_f64() {
            if p == 0.0 {
                return Ok(Self::ONE);
            }
            return self.powf(p);
        }
        if self.level == 0 && self.mantissa <= 1.0 {
            return Err(Error::InvalidConstant("tower powers need a base above 1".into()));
        }
        Ok(self.ln()?.mul(e).exp())
    }

    pub fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    /// Decimal scientific string for levels 0 and 1.
    pub fn decimal(&self) -> Option<String> {
        match self.level {
            _ if self.is_infinite() => Some("inf".into()),
            0 => Some(format!("{:.12e}", self.mantissa)),
            1 => {
                let l10 = self.mantissa / std::f64::consts::LN_10;
                let e = l10.floor();
                Some(format!("{:.12}e{}", 10f64.powf(l10 - e), e as i64))
            }
            _ => None,
        }
    }
}

impl PartialOrd for TowerValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(match (self.is_infinite(), other.is_infinite()) {
            (true, true) => Ordering::Equal,
            (true, false) => Ordering::Greater,
            (false, true) => Ordering::Less,
            _ => self.level.cmp(&other.level).then(self.mantissa.total_cmp(&other.mantissa)),
        })
    }
}

impl fmt::Display for TowerValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.decimal() {
            Some(d) => f.write_str(&d),
            None => write!(f, "exp^{}({})", self.level, self.mantissa),
        }
    }
}

/// Ledger entry as reported: `{name, level, mantissa, decimal, value}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NamedTower {
    pub name: String,
    #[serde(serialize_with = "level_ser")]
    pub level: u32,
    #[serde(serialize_with = "mantissa_ser")]
    pub mantissa: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decimal: Option<String>,
    /// Plain double mirror for level-0 values.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
}

fn level_ser<S: Serializer>(l: &u32, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_u32(*l)
}

fn mantissa_ser<S: Serializer>(m: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if m.is_finite() {
        s.serialize_f64(*m)
    } else {
        s.serialize_str("inf")
    }
}

impl NamedTower {
    pub fn new(name: &str, v: &TowerValue) -> Self {
        Self {
            name: name.to_string(),
            level: v.level,
            mantissa: v.mantissa,
            decimal: v.decimal(),
            value: v.to_f64().filter(|x| x.is_finite()),
        }
    }
}
