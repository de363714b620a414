//! Local expansions of tower elements at a place of the `s`-line, in
//! the local parameter `tau` with `s = s0 + tau^m` (or `s = tau^-m` at
//! infinity). Principal branches are used for every radical. Leading
//! coefficients whose roots are not in the scalar field are adjoined to
//! a tower of constants built on the fly.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::ode::PolyS;
use crate::param::ParamScalar;
use crate::scalar::{Field, Rational};
use crate::tower::{FieldElem, RatS, Tower};

#[derive(Clone, Debug, PartialEq)]
pub enum Place {
    Finite(ParamScalar),
    Infinity,
    /// One root of an irreducible quadratic `s^2 + b s + c`, namely
    /// `(-b + sign*sqrt(b^2 - 4c))/2`.
    Quadratic { poly: PolyS, sign: i8 },
}

impl fmt::Display for Place {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Place::Finite(x) => write!(f, "s = {x}"),
            Place::Infinity => write!(f, "s = infinity"),
            Place::Quadratic { poly, sign } => {
                let b = poly.coeff(1);
                let c = poly.coeff(0);
                let disc = b.mul(&b).sub(&c.mul(&ParamScalar::from_i64(4)));
                let half_b = b.mul(&ParamScalar::from_rational(&Rational::new(1.into(), 2.into()))).neg();
                let sg = if *sign > 0 { "+" } else { "-" };
                if half_b.is_zero() {
                    write!(f, "s = {sg}sqrt({disc})/2")
                } else {
                    write!(f, "s = {half_b} {sg} sqrt({disc})/2")
                }
            }
        }
    }
}

const INF: i64 = i64::MAX / 4;

#[derive(Clone, Debug)]
struct Ser {
    val: i64,
    c: Vec<FieldElem>,
    // absolute precision: coefficients of tau^k for k >= prec are unknown
    prec: i64,
}

impl Ser {
    fn zero() -> Self {
        Ser { val: 0, c: Vec::new(), prec: INF }
    }

    fn mono(c: FieldElem, e: i64) -> Self {
        Ser { val: e, c: vec![c], prec: INF }
    }

    fn coeff(&self, k: i64) -> FieldElem {
        if k < self.val {
            return FieldElem::zero();
        }
        self.c.get((k - self.val) as usize).cloned().unwrap_or_else(FieldElem::zero)
    }

    fn normalize(mut self) -> Self {
        let lead = self.c.iter().position(|x| !x.is_zero());
        match lead {
            Some(i) => {
                self.c.drain(..i);
                self.val += i as i64;
            }
            None => {
                self.c.clear();
                self.val = self.prec.min(INF);
            }
        }
        while self.c.last().is_some_and(|x| x.is_zero()) {
            self.c.pop();
        }
        let keep = (self.prec - self.val).max(0) as usize;
        if self.c.len() > keep {
            self.c.truncate(keep);
        }
        self
    }

    fn is_zero_known(&self) -> bool {
        self.c.is_empty() && self.prec >= INF
    }

    fn add(&self, o: &Self) -> Self {
        if self.c.is_empty() && self.prec >= INF {
            return o.clone();
        }
        if o.c.is_empty() && o.prec >= INF {
            return self.clone();
        }
        let prec = self.prec.min(o.prec);
        let lo = self.val.min(o.val);
        let hi = (self.val + self.c.len() as i64).max(o.val + o.c.len() as i64).min(prec);
        let c = (lo..hi.max(lo)).map(|k| self.coeff(k).add(&o.coeff(k))).collect();
        Ser { val: lo, c, prec }.normalize()
    }

    fn mul(&self, o: &Self) -> Self {
        if self.is_zero_known() || o.is_zero_known() {
            return Ser::zero();
        }
        let prec = sat_add(self.val, o.prec).min(sat_add(o.val, self.prec));
        let val = self.val + o.val;
        let len = ((self.c.len() + o.c.len()).saturating_sub(1) as i64).min(prec - val).max(0) as usize;
        let mut c = vec![FieldElem::zero(); len];
        for (i, a) in self.c.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.c.iter().enumerate() {
                if i + j < len && !b.is_zero() {
                    c[i + j] = c[i + j].add(&a.mul(b));
                }
            }
        }
        Ser { val, c, prec }.normalize()
    }

    // 1/self with `rel` terms of relative precision.
    fn inv(&self, rel: i64) -> Result<Self> {
        let s = self.clone().normalize();
        if s.c.is_empty() {
            return Err(Error::NotExpandable("leading term lost to cancellation".into()));
        }
        let rel = rel.min(s.prec - s.val);
        let lead_inv = s.c[0].try_inv()?;
        // unit part u = 1 + y
        let mut out = vec![FieldElem::zero(); rel as usize];
        if rel > 0 {
            out[0] = FieldElem::one();
        }
        for k in 1..rel as usize {
            let mut acc = FieldElem::zero();
            for j in 1..=k {
                let yj = s.c.get(j).map(|x| x.mul(&lead_inv)).unwrap_or_else(FieldElem::zero);
                if !yj.is_zero() {
                    acc = acc.sub(&yj.mul(&out[k - j]));
                }
            }
            out[k] = acc;
        }
        let out: Vec<FieldElem> = out.into_iter().map(|x| x.mul(&lead_inv)).collect();
        Ok(Ser { val: -s.val, c: out, prec: -s.val + rel }.normalize())
    }

    // (1 + y)^{1/d} for a unit series starting with 1 at tau^0.
    fn unit_root(&self, d: u32, rel: i64) -> Self {
        let rel = rel.min(self.prec);
        let mut y = self.clone();
        y.c[0] = y.c[0].sub(&FieldElem::one());
        let y = y.normalize();
        let mut acc = Ser::mono(FieldElem::one(), 0);
        acc.prec = rel;
        let mut term = acc.clone();
        let a = Rational::new(1.into(), (d as i64).into());
        let mut binom = Rational::one();
        for k in 1..rel.max(1) {
            let kk = Rational::from_integer(k.into());
            binom = binom.mul(&a.sub(&kk.sub(&Rational::one()))).mul(&kk.inv().unwrap());
            term = term.mul(&y);
            if term.c.is_empty() {
                break;
            }
            let mut t = term.clone();
            t.c = t.c.iter().map(|x| x.mul(&FieldElem::from_rational(&binom))).collect();
            acc = acc.add(&t);
        }
        acc.prec = acc.prec.min(rel);
        acc.normalize()
    }
}

fn sat_add(a: i64, b: i64) -> i64 {
    if a >= INF || b >= INF {
        INF
    } else {
        a + b
    }
}

/// Expansion context at one place with ramification `m`.
pub struct Local {
    place: Place,
    m: u32,
    rel: i64,
    consts: Option<Arc<Tower>>,
    s: Ser,
    gens: Vec<Ser>,
    gens_for: Option<Arc<Tower>>,
}

impl Local {
    pub fn new(place: &Place, m: u32) -> Result<Self> {
        if m == 0 {
            return Err(Error::Input("ramification index must be positive".into()));
        }
        let mut l = Local { place: place.clone(), m, rel: 12 * m as i64, consts: None, s: Ser::zero(), gens: Vec::new(), gens_for: None };
        let tm = Ser::mono(FieldElem::one(), m as i64);
        l.s = match place {
            Place::Finite(x) => Ser::mono(FieldElem::from_param(x.clone()), 0).add(&tm),
            Place::Infinity => Ser::mono(FieldElem::one(), -(m as i64)),
            Place::Quadratic { poly, sign } => {
                let b = FieldElem::from_param(poly.coeff(1));
                let c = FieldElem::from_param(poly.coeff(0));
                let disc = b.mul(&b).sub(&c.mul(&FieldElem::from_i64(4)));
                let r = l.root(&disc, 2)?;
                let r = if *sign > 0 { r } else { r.neg() };
                let half = FieldElem::from_rational(&Rational::new(1.into(), 2.into()));
                Ser::mono(r.sub(&b).mul(&half), 0).add(&tm)
            }
        };
        Ok(l)
    }

    pub fn place(&self) -> &Place {
        &self.place
    }

    pub fn ramification(&self) -> u32 {
        self.m
    }

    fn root(&mut self, c: &FieldElem, d: u32) -> Result<FieldElem> {
        if let Some(p) = c.as_param() {
            if let Some(r) = p.root_exact(d) {
                return Ok(FieldElem::from_param(r));
            }
        }
        if d == 2 {
            if let Some(r) = self.consts.as_ref().and_then(|t| c.embed(t).ok()).and_then(|c| c.sqrt_in_tower()) {
                return Ok(r);
            }
        }
        let idx = self.consts.as_ref().map_or(0, |t| t.names().len());
        let name = format!("k{}", idx + 1);
        let t = Tower::extend(self.consts.as_ref(), &name, d, c)?;
        self.consts = Some(t.clone());
        Ok(FieldElem::generator(&t, idx))
    }

    fn ratfunc(&self, r: &RatS) -> Result<Ser> {
        let ev = |p: &PolyS| -> Ser {
            let mut acc = Ser::zero();
            for c in p.coeffs().iter().rev() {
                acc = acc.mul(&self.s).add(&Ser::mono(FieldElem::from_param(c.clone()), 0));
            }
            acc
        };
        let n = ev(r.num());
        if n.is_zero_known() {
            return Ok(Ser::zero());
        }
        Ok(n.mul(&ev(r.den()).inv(self.rel)?))
    }

    fn ensure_gens(&mut self, t: &Arc<Tower>) -> Result<()> {
        if let Some(g) = &self.gens_for {
            if t.names().len() <= g.names().len() && t.is_prefix_of(g) {
                return Ok(());
            }
        }
        self.gens.clear();
        for i in 0..t.names().len() {
            let b = self.expand_with(t.radicand(i), i)?;
            if b.c.is_empty() {
                return Err(Error::NotExpandable(format!("radicand of {} vanishes to the working precision", t.names()[i])));
            }
            let d = t.degrees()[i] as i64;
            if b.val.rem_euclid(d) != 0 {
                return Err(Error::NotExpandable(format!(
                    "{} needs ramification beyond {} at {}",
                    t.names()[i],
                    self.m,
                    self.place
                )));
            }
            let lead = b.c[0].clone();
            let root = self.root(&lead, d as u32)?;
            let unit = b.mul(&Ser::mono(lead.try_inv()?, -b.val));
            let w = unit.unit_root(d as u32, self.rel).mul(&Ser::mono(root, b.val / d));
            self.gens.push(w);
        }
        self.gens_for = Some(t.clone());
        Ok(())
    }

    // Expansion using only the first `levels` generators.
    fn expand_with(&self, a: &FieldElem, levels: usize) -> Result<Ser> {
        let mut acc = Ser::zero();
        for (m, c) in a.coords().iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let mut term = self.ratfunc(c)?;
            if let Some(t) = a.tower() {
                for (i, e) in t.exponents(m).into_iter().enumerate() {
                    if e > 0 {
                        if i >= levels {
                            return Err(Error::InvalidTower("radicand refers to a later generator".into()));
                        }
                        for _ in 0..e {
                            term = term.mul(&self.gens[i]);
                        }
                    }
                }
            }
            acc = acc.add(&term);
        }
        Ok(acc)
    }

    fn expand(&mut self, a: &FieldElem) -> Result<Ser> {
        if let Some(t) = a.tower() {
            self.ensure_gens(t)?;
        }
        let levels = a.tower().map_or(0, |t| t.names().len());
        self.expand_with(a, levels)
    }

    fn expand_nonzero(&mut self, a: &FieldElem) -> Result<Ser> {
        if a.is_zero() {
            return Err(Error::NotExpandable("zero element".into()));
        }
        for _ in 0..4 {
            let s = self.expand(a)?;
            if !s.c.is_empty() {
                return Ok(s);
            }
            self.rel *= 2;
            self.gens_for = None;
        }
        Err(Error::NotExpandable(format!("leading term of {a} not found at {}", self.place)))
    }

    /// Leading exponent in units of `s - s0` (or `1/s`).
    pub fn exponent(&mut self, a: &FieldElem) -> Result<Rational> {
        let s = self.expand_nonzero(a)?;
        Ok(Rational::new(s.val.into(), (self.m as i64).into()))
    }

    /// Order of `lambda ds` in `tau` and its residue there.
    pub fn form_residue(&mut self, lambda: &FieldElem) -> Result<(i64, FieldElem)> {
        if lambda.is_zero() {
            return Ok((INF, FieldElem::zero()));
        }
        let l = self.expand_nonzero(lambda)?;
        let m = self.m as i64;
        let ds = match self.place {
            Place::Infinity => Ser::mono(FieldElem::from_i64(-m), -m - 1),
            _ => Ser::mono(FieldElem::from_i64(m), m - 1),
        };
        let f = l.mul(&ds);
        Ok((f.val, f.coeff(-1)))
    }
}

/// Leading Puiseux exponent of `a` at `place` with ramification `m`.
pub fn fe_local_exponent(a: &FieldElem, place: &Place, m: u32) -> Result<Rational> {
    Local::new(place, m)?.exponent(a)
}

/// Exponent of a hyperexponential `H` with `H'/H = lambda` at a place:
/// `H ~ (s - s0)^rho`. Returns the pole order of `lambda ds` in the local
/// parameter together with `rho`, when `rho` is a scalar.
pub fn local_exponent_of_logderiv(lambda: &FieldElem, place: &Place, m: u32) -> Result<(i64, Option<ParamScalar>)> {
    let mut l = Local::new(place, m)?;
    let (ord, res) = l.form_residue(lambda)?;
    let rho = res.as_param().map(|r| r.mul(&ParamScalar::from_i64(m as i64).inv().unwrap()));
    Ok((-ord, rho))
}

/// Smallest ramification index for which every generator of `t`
/// expands at `place`.
pub fn ramification_at(t: Option<&Arc<Tower>>, place: &Place) -> Result<u32> {
    let Some(t) = t else {
        return Ok(1);
    };
    let mut last = None;
    for m in 1..=t.dim() as u32 {
        if t.dim() as u32 % m != 0 {
            continue;
        }
        let mut l = Local::new(place, m)?;
        match l.ensure_gens(t) {
            Ok(()) => return Ok(m),
            Err(e) => last = Some(e),
        }
    }
    Err(last.unwrap_or_else(|| Error::NotExpandable(place.to_string())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::ElemEnv;
    use crate::scalar::{rat, rat_int};

    #[test]
    fn exponents() {
        let e = ElemEnv::new(None, &["alpha".into()]);
        let z = Place::Finite(ParamScalar::zero());
        assert_eq!(fe_local_exponent(&e.eval_str("s^2").unwrap(), &z, 1).unwrap(), rat_int(2));
        assert_eq!(fe_local_exponent(&e.eval_str("1/(s*(2*alpha+2))").unwrap(), &z, 1).unwrap(), rat_int(-1));
        let t = Tower::extend(None, "w", 2, &e.eval_str("1-s^2").unwrap()).unwrap();
        let et = ElemEnv::new(Some(t.clone()), &[]);
        let one = Place::Finite(ParamScalar::one());
        assert_eq!(fe_local_exponent(&et.eval_str("w").unwrap(), &one, 2).unwrap(), rat(1, 2));
        assert!(fe_local_exponent(&et.eval_str("w").unwrap(), &one, 1).is_err());
        assert_eq!(ramification_at(Some(&t), &one).unwrap(), 2);
        assert_eq!(fe_local_exponent(&et.eval_str("w").unwrap(), &Place::Infinity, 1).unwrap(), rat_int(-1));
    }

    #[test]
    fn logderiv_exponents() {
        let e = ElemEnv::new(None, &["alpha".into()]);
        let lam = e.eval_str("alpha/s").unwrap();
        let (ord, rho) = local_exponent_of_logderiv(&lam, &Place::Finite(ParamScalar::zero()), 1).unwrap();
        assert_eq!((ord, rho), (1, Some(ParamScalar::named("alpha"))));
        let (_, rho) = local_exponent_of_logderiv(&lam, &Place::Infinity, 1).unwrap();
        assert_eq!(rho, Some(ParamScalar::named("alpha").neg()));
        let base = ElemEnv::new(None, &[]);
        let t = Tower::extend(None, "w", 2, &base.eval_str("1+s^2").unwrap()).unwrap();
        let et = ElemEnv::new(Some(t.clone()), &["alpha".into()]);
        let lam = et.eval_str("s/(2*(1+s^2)) + alpha/w").unwrap();
        let q = Place::Quadratic { poly: base.eval_str("s^2+1").unwrap().as_ratfunc().unwrap().num().clone(), sign: 1 };
        let m = ramification_at(Some(&t), &q).unwrap();
        assert_eq!(m, 2);
        let (ord, rho) = local_exponent_of_logderiv(&lam, &q, m).unwrap();
        assert_eq!(ord, 1);
        assert_eq!(rho, Some(ParamScalar::from_rational(&rat(1, 4))));
    }

    #[test]
    fn irrational_leading_coefficient() {
        let base = ElemEnv::new(None, &[]);
        let t1 = Tower::extend(None, "w1", 2, &FieldElem::s()).unwrap();
        let e1 = ElemEnv::new(Some(t1.clone()), &[]);
        let t2 = Tower::extend(Some(&t1), "w2", 2, &e1.eval_str("2+2*w1+s").unwrap()).unwrap();
        let e2 = ElemEnv::new(Some(t2.clone()), &[]);
        let z = Place::Finite(ParamScalar::zero());
        assert_eq!(ramification_at(Some(&t2), &z).unwrap(), 2);
        assert_eq!(fe_local_exponent(&e2.eval_str("w2 - 1 - w1").unwrap(), &z, 2).unwrap(), rat_int(0));
        assert_eq!(fe_local_exponent(&e2.eval_str("w1*w2").unwrap(), &z, 2).unwrap(), rat(1, 2));
        let _ = base;
    }
}
