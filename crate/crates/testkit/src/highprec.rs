//! Big-integer fixed-point arithmetic for checking small probabilities and
//! huge logarithms far beyond `f64` resolution.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

/// Number of decimal digits carried after the point.
pub const DIGITS: u32 = 80;

fn scale() -> BigInt {
    BigInt::from(10u32).pow(DIGITS)
}

/// A fixed-point number `value / 10^DIGITS`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fixed(pub BigInt);

impl Fixed {
    pub fn from_ratio(num: &BigInt, den: &BigInt) -> Self {
        Fixed(num * scale() / den)
    }

    pub fn mul_int(&self, k: &BigInt) -> Self {
        Fixed(&self.0 * k)
    }

    pub fn div(&self, other: &Fixed) -> Self {
        Fixed(&self.0 * scale() / &other.0)
    }

    /// Decimal rendering with the full carried precision.
    pub fn to_decimal(&self) -> String {
        let neg = self.0.is_negative();
        let abs = self.0.abs();
        let s = scale();
        let int = &abs / &s;
        let frac = &abs % &s;
        let frac = format!("{:0>width$}", frac.to_string(), width = DIGITS as usize);
        format!("{}{}.{}", if neg { "-" } else { "" }, int, frac)
    }

    pub fn to_f64(&self) -> f64 {
        self.to_decimal().parse().expect("decimal rendering parses")
    }
}

/// `2 * atanh(1/q)` for integer `q > 1`.
fn two_atanh_inv(q: u64) -> BigInt {
    let q = BigInt::from(q);
    let q2 = &q * &q;
    let mut power = scale() * 100u32 / &q; // 100 guard factor
    let mut sum = BigInt::zero();
    let mut k = 1u64;
    while !power.is_zero() {
        sum += &power / BigInt::from(k);
        power /= &q2;
        k += 2;
    }
    sum * 2u32 / 100u32
}

/// Natural log of 10.
pub fn ln10() -> Fixed {
    // ln 10 = 3 ln 2 + ln(5/4); ln 2 = 2 atanh(1/3), ln(5/4) = 2 atanh(1/9)
    Fixed(two_atanh_inv(3) * 3u32 + two_atanh_inv(9))
}

/// `ln(1 - num/den)` for `0 < num/den < 1/2`, by the Mercator series.
pub fn ln_one_minus(num: u64, den: u64) -> Fixed {
    let num = BigInt::from(num);
    let den = BigInt::from(den);
    let guard = BigInt::from(1000u32);
    let mut power = scale() * &guard * &num / &den;
    let mut sum = BigInt::zero();
    let mut k = 1u64;
    while !power.is_zero() {
        sum -= &power / BigInt::from(k);
        power = power * &num / &den;
        k += 1;
    }
    Fixed(sum / guard)
}

/// `log10((1 - num/den)^n)` carried to `DIGITS` places.
pub fn log10_pow_one_minus(num: u64, den: u64, n: &BigInt) -> Fixed {
    ln_one_minus(num, den).div(&ln10()).mul_int(n)
}

/// Exact `(1 - num/den)^n` rendered at `DIGITS` places, by integer powers.
pub fn pow_one_minus(num: u64, den: u64, n: u32) -> Fixed {
    let d = BigInt::from(den);
    let b = &d - BigInt::from(num);
    Fixed::from_ratio(&b.pow(n), &d.pow(n))
}

/// `1 - x` in fixed point.
pub fn one_minus(x: &Fixed) -> Fixed {
    Fixed(scale() * BigInt::one() - &x.0)
}
