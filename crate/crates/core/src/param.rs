//! Rational functions in formal parameters `alpha_1 .. alpha_p` over Q.
//!
//! A value is stored recursively: a rational function in the highest
//! parameter it involves, with coefficients in the parameters below it.
//! Every level is kept canonical (coprime, monic denominator, constants
//! collapsed), so structural equality is field equality.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{OnceLock, RwLock};

use num_traits::{Float, FromPrimitive};

use crate::poly::Poly;
use crate::ratfunc::RatFunc;
use crate::scalar::{fmt_rational, rational_to_f64, Field, Rational};

fn registry() -> &'static RwLock<Vec<String>> {
    static REG: OnceLock<RwLock<Vec<String>>> = OnceLock::new();
    REG.get_or_init(|| RwLock::new(Vec::new()))
}

/// Index of a parameter name, registering it on first use. Indices fix
/// the variable ordering of the recursive representation.
pub fn param_index(name: &str) -> usize {
    {
        let reg = registry().read().unwrap();
        if let Some(i) = reg.iter().position(|n| n == name) {
            return i;
        }
    }
    let mut reg = registry().write().unwrap();
    if let Some(i) = reg.iter().position(|n| n == name) {
        return i;
    }
    reg.push(name.to_string());
    reg.len() - 1
}

pub fn lookup_param(name: &str) -> Option<usize> {
    registry().read().unwrap().iter().position(|n| n == name)
}

pub fn param_name(i: usize) -> String {
    registry().read().unwrap().get(i).cloned().unwrap_or_else(|| format!("p{i}"))
}

#[derive(Clone, PartialEq, Debug)]
enum Repr {
    Const(Rational),
    Level(usize, Box<RatFunc<ParamScalar>>),
}

/// Element of `Q(alpha_1, ..., alpha_p)`.
#[derive(Clone, PartialEq, Debug)]
pub struct ParamScalar(Repr);

impl ParamScalar {
    pub fn rational(q: Rational) -> Self {
        ParamScalar(Repr::Const(q))
    }

    /// The parameter with the given registry index.
    pub fn param(index: usize) -> Self {
        ParamScalar(Repr::Level(index, Box::new(RatFunc::var())))
    }

    pub fn named(name: &str) -> Self {
        Self::param(param_index(name))
    }

    fn level(&self) -> Option<usize> {
        match &self.0 {
            Repr::Const(_) => None,
            Repr::Level(k, _) => Some(*k),
        }
    }

    fn lift(&self, k: usize) -> RatFunc<ParamScalar> {
        match &self.0 {
            Repr::Level(j, f) if *j == k => (**f).clone(),
            _ => RatFunc::constant(self.clone()),
        }
    }

    fn normalize(k: usize, f: RatFunc<ParamScalar>) -> Self {
        match f.as_constant() {
            Some(c) => c,
            None => ParamScalar(Repr::Level(k, Box::new(f))),
        }
    }

    fn binop(
        &self,
        o: &Self,
        q: impl Fn(&Rational, &Rational) -> Rational,
        f: impl Fn(&RatFunc<ParamScalar>, &RatFunc<ParamScalar>) -> RatFunc<ParamScalar>,
    ) -> Self {
        match (&self.0, &o.0) {
            (Repr::Const(a), Repr::Const(b)) => ParamScalar(Repr::Const(q(a, b))),
            _ => {
                let k = self.level().max(o.level()).unwrap();
                Self::normalize(k, f(&self.lift(k), &o.lift(k)))
            }
        }
    }

    /// Parameters this value depends on.
    pub fn params(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect_params(&mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    fn collect_params(&self, out: &mut Vec<usize>) {
        if let Repr::Level(k, f) = &self.0 {
            out.push(*k);
            for c in f.num().coeffs().iter().chain(f.den().coeffs()) {
                c.collect_params(out);
            }
        }
    }

    pub fn is_rational(&self) -> bool {
        matches!(self.0, Repr::Const(_))
    }

    /// Numeric evaluation with parameter values; `None` on a vanishing
    /// denominator or a missing value.
    pub fn eval<F: Float + FromPrimitive>(&self, values: &BTreeMap<usize, F>) -> Option<F> {
        match &self.0 {
            Repr::Const(q) => F::from_f64(rational_to_f64(q)),
            Repr::Level(k, f) => {
                let x = *values.get(k)?;
                let ev = |p: &Poly<ParamScalar>| -> Option<F> {
                    let mut acc = F::zero();
                    for c in p.coeffs().iter().rev() {
                        acc = acc * x + c.eval(values)?;
                    }
                    Some(acc)
                };
                let d = ev(f.den())?;
                if d == F::zero() {
                    return None;
                }
                Some(ev(f.num())? / d)
            }
        }
    }

    /// Exact substitution of a rational value for one parameter.
    pub fn substitute(&self, index: usize, value: &ParamScalar) -> Option<ParamScalar> {
        match &self.0 {
            Repr::Const(_) => Some(self.clone()),
            Repr::Level(k, f) => {
                let sub_poly = |p: &Poly<ParamScalar>| -> Option<Poly<ParamScalar>> {
                    let cs: Option<Vec<_>> = p.coeffs().iter().map(|c| c.substitute(index, value)).collect();
                    Some(Poly::from_coeffs(cs?))
                };
                let num = sub_poly(f.num())?;
                let den = sub_poly(f.den())?;
                if *k == index {
                    num.eval(value).div(&den.eval(value))
                } else {
                    let var = ParamScalar::param(*k);
                    num.eval(&var).div(&den.eval(&var))
                }
            }
        }
    }

    /// Split `c + sum b_i alpha_i` into its parts, if the value is affine.
    pub fn affine_parts(&self) -> Option<(Rational, BTreeMap<usize, Rational>)> {
        match &self.0 {
            Repr::Const(q) => Some((q.clone(), BTreeMap::new())),
            Repr::Level(k, f) => {
                if !f.is_polynomial() || f.num().degree()? > 1 {
                    return None;
                }
                let lin = f.num().coeff(1).as_rational()?;
                let (c, mut m) = f.num().coeff(0).affine_parts()?;
                m.insert(*k, lin);
                Some((c, m))
            }
        }
    }

    /// Polynomial denominators met at every level of the representation
    /// (each paired with its parameter index).
    pub fn denominators(&self) -> Vec<(usize, Poly<ParamScalar>)> {
        let mut out = Vec::new();
        if let Repr::Level(k, f) = &self.0 {
            if f.den().degree().unwrap_or(0) > 0 {
                out.push((*k, f.den().clone()));
            }
            for c in f.num().coeffs().iter().chain(f.den().coeffs()) {
                out.extend(c.denominators());
            }
        }
        out
    }

    /// Square root when the value is a perfect square of a rational.
    pub fn sqrt_exact(&self) -> Option<Self> {
        self.root_exact(2)
    }

    pub fn root_exact(&self, d: u32) -> Option<Self> {
        match &self.0 {
            Repr::Const(q) => crate::scalar::rational_root(q, d).map(Self::rational),
            Repr::Level(..) => None,
        }
    }
}

impl fmt::Display for ParamScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Repr::Const(q) => fmt_rational(q, f),
            Repr::Level(k, r) => r.fmt_var(&param_name(*k), f),
        }
    }
}

impl Field for ParamScalar {
    fn zero() -> Self {
        Self::rational(Rational::from_integer(0.into()))
    }
    fn one() -> Self {
        Self::rational(Rational::from_integer(1.into()))
    }
    fn is_zero(&self) -> bool {
        matches!(&self.0, Repr::Const(q) if num_traits::Zero::is_zero(q))
    }
    fn is_one(&self) -> bool {
        matches!(&self.0, Repr::Const(q) if num_traits::One::is_one(q))
    }
    fn add(&self, o: &Self) -> Self {
        self.binop(o, |a, b| a + b, |a, b| a.add(b))
    }
    fn sub(&self, o: &Self) -> Self {
        self.binop(o, |a, b| a - b, |a, b| a.sub(b))
    }
    fn mul(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::zero();
        }
        self.binop(o, |a, b| a * b, |a, b| a.mul(b))
    }
    fn neg(&self) -> Self {
        match &self.0 {
            Repr::Const(q) => Self::rational(-q),
            Repr::Level(k, f) => ParamScalar(Repr::Level(*k, Box::new(f.neg()))),
        }
    }
    fn inv(&self) -> Option<Self> {
        match &self.0 {
            Repr::Const(q) => Field::inv(q).map(Self::rational),
            Repr::Level(k, f) => Some(Self::normalize(*k, f.inv()?)),
        }
    }
    fn from_rational(q: &Rational) -> Self {
        Self::rational(q.clone())
    }
    fn as_rational(&self) -> Option<Rational> {
        match &self.0 {
            Repr::Const(q) => Some(q.clone()),
            _ => None,
        }
    }
    fn is_compound(&self) -> bool {
        match &self.0 {
            Repr::Const(q) => q.is_compound(),
            Repr::Level(_, f) => f.is_compound(),
        }
    }
    fn looks_negative(&self) -> bool {
        match &self.0 {
            Repr::Const(q) => q.looks_negative(),
            Repr::Level(_, f) => f.looks_negative(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, rat_int};

    #[test]
    fn canonical_equality() {
        let a = ParamScalar::named("alpha");
        let one = ParamScalar::one();
        // (a^2 - 1)/(a - 1) == a + 1
        let lhs = a.mul(&a).sub(&one).div(&a.sub(&one)).unwrap();
        assert_eq!(lhs, a.add(&one));
        // a/a == 1 collapses to a constant
        assert_eq!(a.div(&a).unwrap(), one);
        assert!(a.div(&a).unwrap().is_rational());
    }

    #[test]
    fn two_parameters() {
        let a = ParamScalar::named("alpha");
        let b = ParamScalar::named("beta");
        let x = a.add(&b).mul(&a.sub(&b)); // a^2 - b^2
        let y = x.div(&a.add(&b)).unwrap();
        assert_eq!(y, a.sub(&b));
        let mut vals = BTreeMap::new();
        vals.insert(param_index("alpha"), 2.0f64);
        vals.insert(param_index("beta"), 0.5f64);
        assert!((x.eval(&vals).unwrap() - 3.75).abs() < 1e-12);
        let z = x.substitute(param_index("beta"), &ParamScalar::rational(rat_int(1))).unwrap();
        assert_eq!(z, a.mul(&a).sub(&ParamScalar::one()));
    }

    #[test]
    fn affine_and_display() {
        let a = ParamScalar::named("alpha");
        let e = a.mul(&ParamScalar::from_i64(2)).add(&ParamScalar::rational(rat(1, 2)));
        let (c, m) = e.affine_parts().unwrap();
        assert_eq!(c, rat(1, 2));
        assert_eq!(m[&param_index("alpha")], rat_int(2));
        let d = ParamScalar::one().div(&a.mul(&ParamScalar::from_i64(2)).add(&ParamScalar::from_i64(2))).unwrap();
        assert_eq!(d.to_string(), "(1/2)/(alpha + 1)");
        assert_eq!(d.denominators().len(), 1);
    }
}
