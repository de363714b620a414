//! Exact scalar fields.
//!
//! Everything symbolic in this crate is generic over [`Field`]; the
//! concrete instances are [`Rational`], [`crate::ParamScalar`] and the
//! rational function fields built on top of them.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};

/// Arbitrary precision rational numbers.
pub type Rational = BigRational;

/// An exact commutative field with decidable equality.
pub trait Field: Clone + PartialEq + fmt::Debug + fmt::Display + Send + Sync + 'static {
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    /// Multiplicative inverse, `None` for zero.
    fn inv(&self) -> Option<Self>;
    fn from_rational(q: &Rational) -> Self;
    /// The value as a rational number, when it is one.
    fn as_rational(&self) -> Option<Rational>;

    fn is_one(&self) -> bool {
        self.sub(&Self::one()).is_zero()
    }

    fn div(&self, other: &Self) -> Option<Self> {
        other.inv().map(|i| self.mul(&i))
    }

    fn from_i64(n: i64) -> Self {
        Self::from_rational(&Rational::from_integer(BigInt::from(n)))
    }

    fn pow(&self, mut e: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        acc
    }

    /// True when printing needs parentheses as a factor.
    fn is_compound(&self) -> bool {
        false
    }

    /// True when the printed form starts with a minus sign.
    fn looks_negative(&self) -> bool {
        false
    }
}

impl Field for Rational {
    fn zero() -> Self {
        num_traits::Zero::zero()
    }
    fn one() -> Self {
        num_traits::One::one()
    }
    fn is_zero(&self) -> bool {
        num_traits::Zero::is_zero(self)
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn inv(&self) -> Option<Self> {
        if num_traits::Zero::is_zero(self) {
            None
        } else {
            Some(self.recip())
        }
    }
    fn from_rational(q: &Rational) -> Self {
        q.clone()
    }
    fn as_rational(&self) -> Option<Rational> {
        Some(self.clone())
    }
    fn is_compound(&self) -> bool {
        !self.is_integer() || self.is_negative()
    }
    fn looks_negative(&self) -> bool {
        self.is_negative()
    }
}

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Exact rational square root, if the argument is a perfect square.
pub fn rational_sqrt(q: &Rational) -> Option<Rational> {
    rational_root(q, 2)
}

/// Exact rational `d`-th root (real, principal), if it exists.
pub fn rational_root(q: &Rational, d: u32) -> Option<Rational> {
    if q.is_negative() {
        if d % 2 == 0 {
            return None;
        }
        return rational_root(&-q, d).map(|r| -r);
    }
    let n = int_root(q.numer(), d)?;
    let m = int_root(q.denom(), d)?;
    Some(Rational::new(n, m))
}

fn int_root(n: &BigInt, d: u32) -> Option<BigInt> {
    let r = n.nth_root(d);
    if num_traits::pow(r.clone(), d as usize) == *n {
        Some(r)
    } else {
        None
    }
}

pub fn rational_to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        // very large numerators or denominators
        let n = q.numer().to_f64().unwrap_or(f64::INFINITY);
        let d = q.denom().to_f64().unwrap_or(f64::INFINITY);
        n / d
    })
}

/// Parse a decimal literal such as `-0.37`, `1e-3` or `12/7` exactly.
pub fn parse_decimal(text: &str) -> Option<Rational> {
    let t = text.trim();
    if let Some((a, b)) = t.split_once('/') {
        let n: BigInt = a.trim().parse().ok()?;
        let d: BigInt = b.trim().parse().ok()?;
        if num_traits::Zero::is_zero(&d) {
            return None;
        }
        return Some(Rational::new(n, d));
    }
    let (mantissa, exp) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i32>().ok()?),
        None => (t, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    let all: String = format!("{int_part}{frac_part}");
    if !all.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let n: BigInt = all.parse().ok()?;
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut q = if scale >= 0 {
        Rational::from_integer(n * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(n, num_traits::pow(ten, (-scale) as usize))
    };
    if neg {
        q = -q;
    }
    Some(q)
}

/// Integer roots of a univariate polynomial with rational coefficients
/// (low degree first), searched exhaustively within the Cauchy bound.
/// Returns `None` when the bound is larger than `cap`.
pub fn integer_roots(coeffs: &[Rational], cap: i64) -> Option<Vec<i64>> {
    let mut c: Vec<Rational> = coeffs.to_vec();
    while c.last().is_some_and(|x| num_traits::Zero::is_zero(x)) {
        c.pop();
    }
    if c.len() <= 1 {
        return Some(Vec::new());
    }
    let lead = c.last().unwrap().clone();
    let mut bound = Rational::zero();
    for x in &c[..c.len() - 1] {
        let r = (x / &lead).abs();
        if r > bound {
            bound = r;
        }
    }
    let bound = (bound + Rational::one()).ceil().to_integer().to_i64()?;
    if bound > cap {
        return None;
    }
    let mut out = Vec::new();
    for n in -bound..=bound {
        let x = rat_int(n);
        let mut acc = Rational::zero();
        for a in c.iter().rev() {
            acc = acc * &x + a;
        }
        if num_traits::Zero::is_zero(&acc) {
            out.push(n);
        }
    }
    Some(out)
}

/// Rational roots of a polynomial with rational coefficients, by the
/// rational root theorem. `None` if the integers involved are too big
/// to enumerate divisors of.
pub fn rational_roots(coeffs: &[Rational]) -> Option<Vec<Rational>> {
    use num_integer::Integer;
    let mut c: Vec<Rational> = coeffs.to_vec();
    while c.last().is_some_and(|x| num_traits::Zero::is_zero(x)) {
        c.pop();
    }
    if c.len() <= 1 {
        return Some(Vec::new());
    }
    let mut roots = Vec::new();
    // strip zero roots
    let mut shift = 0;
    while num_traits::Zero::is_zero(&c[shift]) {
        shift += 1;
    }
    if shift > 0 {
        roots.push(Rational::zero());
    }
    let c = &c[shift..];
    if c.len() <= 1 {
        return Some(roots);
    }
    let mut l = BigInt::from(1);
    for x in c {
        l = l.lcm(x.denom());
    }
    let ints: Vec<BigInt> = c.iter().map(|x| (x * Rational::from_integer(l.clone())).to_integer()).collect();
    let a0 = ints[0].abs().to_u64()?;
    let an = ints.last().unwrap().abs().to_u64()?;
    let limit = 1_000_000_000_000u64;
    if a0 > limit || an > limit {
        return None;
    }
    let dp = divisors(a0);
    let dq = divisors(an);
    let mut seen: Vec<Rational> = Vec::new();
    for p in &dp {
        for q in &dq {
            for sign in [1i64, -1] {
                let cand = Rational::new(BigInt::from(*p) * sign, BigInt::from(*q));
                if seen.contains(&cand) {
                    continue;
                }
                seen.push(cand.clone());
                let mut acc = Rational::zero();
                for a in c.iter().rev() {
                    acc = acc * &cand + a;
                }
                if num_traits::Zero::is_zero(&acc) {
                    roots.push(cand);
                }
            }
        }
    }
    roots.sort();
    Some(roots)
}

fn divisors(n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut i = 1u64;
    while i * i <= n {
        if n % i == 0 {
            out.push(i);
            if i != n / i {
                out.push(n / i);
            }
        }
        i += 1;
    }
    out
}

pub(crate) fn fmt_rational(q: &Rational, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if q.is_integer() {
        write!(f, "{}", q.numer())
    } else {
        write!(f, "{}/{}", q.numer(), q.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_parsing_is_exact() {
        assert_eq!(parse_decimal("0.37"), Some(rat(37, 100)));
        assert_eq!(parse_decimal("-1e-2"), Some(rat(-1, 100)));
        assert_eq!(parse_decimal("3/6"), Some(rat(1, 2)));
        assert_eq!(parse_decimal("abc"), None);
    }

    #[test]
    fn roots() {
        // (x - 2)(x + 3)(2x - 1)
        let c = vec![rat_int(6), rat_int(-13), rat_int(1), rat_int(2)];
        assert_eq!(rational_roots(&c).unwrap(), vec![rat_int(-3), rat(1, 2), rat_int(2)]);
        assert_eq!(integer_roots(&c, 100).unwrap(), vec![-3, 2]);
        assert_eq!(rational_sqrt(&rat(9, 4)), Some(rat(3, 2)));
        assert_eq!(rational_sqrt(&rat(2, 1)), None);
        assert_eq!(rational_root(&rat(-8, 27), 3), Some(rat(-2, 3)));
    }
}
