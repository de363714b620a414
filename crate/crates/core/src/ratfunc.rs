//! Rational functions in one variable over an exact field.

use std::fmt;

use crate::poly::Poly;
use crate::scalar::{Field, Rational};

/// Canonical `num/den`: coprime, denominator monic, zero is `0/1`.
#[derive(Clone, PartialEq, Debug)]
pub struct RatFunc<K: Field> {
    num: Poly<K>,
    den: Poly<K>,
}

impl<K: Field> RatFunc<K> {
    pub fn new(num: Poly<K>, den: Poly<K>) -> Option<Self> {
        if den.is_zero() {
            return None;
        }
        if num.is_zero() {
            return Some(Self::from_poly(Poly::zero()));
        }
        let g = num.gcd(&den);
        let (mut n, mut d) = if g.degree() == Some(0) {
            (num, den)
        } else {
            (num.exact_div(&g).unwrap(), den.exact_div(&g).unwrap())
        };
        let lc = d.lc();
        if !lc.is_one() {
            let inv = lc.inv().unwrap();
            n = n.scale(&inv);
            d = d.scale(&inv);
        }
        Some(RatFunc { num: n, den: d })
    }

    pub fn from_poly(p: Poly<K>) -> Self {
        RatFunc { num: p, den: Poly::one() }
    }

    pub fn constant(c: K) -> Self {
        Self::from_poly(Poly::constant(c))
    }

    pub fn var() -> Self {
        Self::from_poly(Poly::x())
    }

    pub fn num(&self) -> &Poly<K> {
        &self.num
    }

    pub fn den(&self) -> &Poly<K> {
        &self.den
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.degree() == Some(0)
    }

    /// The value as an element of `K`, when constant.
    pub fn as_constant(&self) -> Option<K> {
        if self.num.is_constant() && self.den.is_constant() {
            Some(self.num.coeff(0))
        } else {
            None
        }
    }

    /// `d/dx` treating coefficients as constants.
    pub fn derivative(&self) -> Self {
        let n = self.num.derivative().mul(&self.den).sub(&self.num.mul(&self.den.derivative()));
        Self::new(n, self.den.mul(&self.den)).unwrap()
    }

    /// `d/dx` where coefficients carry their own derivation `dk`.
    pub fn derivative_with(&self, dk: impl Fn(&K) -> K) -> Self {
        let dn = self.num.derivative().add(&self.num.map_coeffs(&dk));
        let dd = self.den.derivative().add(&self.den.map_coeffs(&dk));
        let n = dn.mul(&self.den).sub(&self.num.mul(&dd));
        Self::new(n, self.den.mul(&self.den)).unwrap()
    }

    pub fn eval(&self, x: &K) -> Option<K> {
        self.num.eval(x).div(&self.den.eval(x))
    }

    /// Order at `x = infinity` measured as `deg num - deg den` (the growth
    /// exponent). `None` for zero.
    pub fn degree_at_infinity(&self) -> Option<i64> {
        Some(self.num.degree()? as i64 - self.den.degree().unwrap() as i64)
    }

    /// Valuation with respect to a square-free polynomial `p`:
    /// multiplicity in the numerator minus multiplicity in the denominator.
    pub fn valuation_at(&self, p: &Poly<K>) -> Option<i64> {
        if self.num.is_zero() {
            return None;
        }
        Some(self.num.multiplicity(p) as i64 - self.den.multiplicity(p) as i64)
    }

    pub fn scale(&self, c: &K) -> Self {
        Self::new(self.num.scale(c), self.den.clone()).unwrap()
    }

    pub fn fmt_var(&self, var: &str, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_polynomial() {
            return self.num.fmt_var(var, f);
        }
        let paren_num = self.num.term_count() > 1
            || self.num.lc().is_compound()
            || (self.num.degree().unwrap_or(0) > 0 && !self.num.lc().is_one());
        if paren_num {
            write!(f, "(")?;
            self.num.fmt_var(var, f)?;
            write!(f, ")")?;
        } else {
            self.num.fmt_var(var, f)?;
        }
        write!(f, "/(")?;
        self.den.fmt_var(var, f)?;
        write!(f, ")")
    }

    pub fn to_string_var(&self, var: &str) -> String {
        struct D<'a, K: Field>(&'a RatFunc<K>, &'a str);
        impl<K: Field> fmt::Display for D<'_, K> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                self.0.fmt_var(self.1, f)
            }
        }
        D(self, var).to_string()
    }
}

impl<K: Field> fmt::Display for RatFunc<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_var("s", f)
    }
}

impl<K: Field> Field for RatFunc<K> {
    fn zero() -> Self {
        Self::from_poly(Poly::zero())
    }
    fn one() -> Self {
        Self::from_poly(Poly::one())
    }
    fn is_zero(&self) -> bool {
        self.num.is_zero()
    }
    fn is_one(&self) -> bool {
        self.is_polynomial() && self.num.degree() == Some(0) && self.num.coeff(0).is_one()
    }
    fn add(&self, o: &Self) -> Self {
        if self.den == o.den {
            return Self::new(self.num.add(&o.num), self.den.clone()).unwrap();
        }
        Self::new(self.num.mul(&o.den).add(&o.num.mul(&self.den)), self.den.mul(&o.den)).unwrap()
    }
    fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }
    fn mul(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::zero();
        }
        // cross-cancel before multiplying
        let g1 = self.num.gcd(&o.den);
        let g2 = o.num.gcd(&self.den);
        let n1 = self.num.exact_div(&g1).unwrap();
        let d2 = o.den.exact_div(&g1).unwrap();
        let n2 = o.num.exact_div(&g2).unwrap();
        let d1 = self.den.exact_div(&g2).unwrap();
        let num = n1.mul(&n2);
        let den = d1.mul(&d2);
        let lc = den.lc();
        let inv = lc.inv().unwrap();
        RatFunc { num: num.scale(&inv), den: den.scale(&inv) }
    }
    fn neg(&self) -> Self {
        RatFunc { num: self.num.neg(), den: self.den.clone() }
    }
    fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            None
        } else {
            Self::new(self.den.clone(), self.num.clone())
        }
    }
    fn from_rational(q: &Rational) -> Self {
        Self::constant(K::from_rational(q))
    }
    fn as_rational(&self) -> Option<Rational> {
        self.as_constant().and_then(|c| c.as_rational())
    }
    fn is_compound(&self) -> bool {
        match self.as_constant() {
            Some(c) => c.is_compound(),
            None => !self.is_polynomial() || self.num.term_count() > 1 || !self.num.lc().is_one(),
        }
    }
    fn looks_negative(&self) -> bool {
        !self.num.is_zero() && self.num.lc().looks_negative()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat_int;

    type R = RatFunc<Rational>;

    fn p(c: &[i64]) -> Poly<Rational> {
        Poly::from_coeffs(c.iter().map(|&x| rat_int(x)).collect())
    }

    #[test]
    fn canonical_form() {
        let a = R::new(p(&[-2, 0, 2]), p(&[2, 2])).unwrap(); // (2s^2-2)/(2s+2) = s-1
        assert_eq!(a, R::from_poly(p(&[-1, 1])));
        let b = R::new(p(&[1]), p(&[0, 2])).unwrap();
        assert_eq!(b.den(), &p(&[0, 1]));
        assert_eq!(b.to_string(), "(1/2)/(s)");
    }

    #[test]
    fn field_ops() {
        let x = R::var();
        let one = R::one();
        let a = one.div(&x.add(&one)).unwrap();
        let b = one.div(&x.sub(&one)).unwrap();
        let s = a.add(&b); // 2x/(x^2-1)
        assert_eq!(s, R::new(p(&[0, 2]), p(&[-1, 0, 1])).unwrap());
        assert_eq!(s.mul(&s.inv().unwrap()), one);
        assert_eq!(x.mul(&x).derivative(), R::from_poly(p(&[0, 2])));
        assert_eq!(s.valuation_at(&p(&[1, 1])), Some(-1));
        assert_eq!(s.degree_at_infinity(), Some(-1));
    }
}
