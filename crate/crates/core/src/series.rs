//! Truncated multivariate power series with tower coefficients, carrying
//! formal hyperexponential (`H_j`) and logarithmic (`L_k`) symbols.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::{parse, Evaluator};
use crate::param::ParamScalar;
use crate::scalar::{Field, Rational};
use crate::tower::{FieldElem, Tower};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Alphabet {
    /// Phase coordinates `q_j`.
    Q,
    /// `u_j = c_j H_j`; `d/ds` of `u_j` is `h_j u_j`.
    U,
}

impl Alphabet {
    pub fn letter(self) -> &'static str {
        match self {
            Alphabet::Q => "q",
            Alphabet::U => "u",
        }
    }
}

/// Log-derivatives of the `H_j` and derivatives of the `L_k`.
#[derive(Clone, Debug, Default)]
pub struct HyperexpBasis {
    pub h: Vec<FieldElem>,
    pub l_names: Vec<String>,
    pub l_derivs: Vec<FieldElem>,
}

impl HyperexpBasis {
    pub fn new(h: Vec<FieldElem>) -> Result<Self> {
        let mut top: Option<Arc<Tower>> = None;
        for x in &h {
            if let Some(t) = x.tower() {
                match &top {
                    Some(cur) if t.is_prefix_of(cur) => {}
                    Some(cur) if cur.is_prefix_of(t) => top = Some(t.clone()),
                    None => top = Some(t.clone()),
                    Some(_) => return Err(Error::InvalidTower("log-derivatives live in different towers".into())),
                }
            }
        }
        let h = match &top {
            Some(t) => h.iter().map(|x| x.embed(t)).collect::<Result<_>>()?,
            None => h,
        };
        Ok(HyperexpBasis { h, l_names: Vec::new(), l_derivs: Vec::new() })
    }

    pub fn nvars(&self) -> usize {
        self.h.len()
    }

    /// Registers a new logarithmic symbol and returns its index.
    pub fn add_log(&mut self, deriv: FieldElem) -> usize {
        let k = self.l_names.len();
        self.l_names.push(format!("L{}", k + 1));
        self.l_derivs.push(deriv);
        k
    }
}

/// `H^e * prod L_k^{m_k}`, with zero entries removed.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SymbolMonomial {
    pub h: BTreeMap<usize, i32>,
    pub l: BTreeMap<usize, u32>,
}

impl SymbolMonomial {
    pub fn neutral() -> Self {
        Self::default()
    }

    pub fn is_neutral(&self) -> bool {
        self.h.is_empty() && self.l.is_empty()
    }

    pub fn h_power(j: usize, e: i32) -> Self {
        let mut s = Self::default();
        if e != 0 {
            s.h.insert(j, e);
        }
        s
    }

    pub fn log(k: usize) -> Self {
        let mut s = Self::default();
        s.l.insert(k, 1);
        s
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut r = self.clone();
        for (&j, &e) in &o.h {
            let v = r.h.entry(j).or_insert(0);
            *v += e;
            if *v == 0 {
                r.h.remove(&j);
            }
        }
        for (&k, &m) in &o.l {
            *r.l.entry(k).or_insert(0) += m;
        }
        r
    }

    pub fn has_logs(&self) -> bool {
        !self.l.is_empty()
    }
}

impl fmt::Display for SymbolMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        let mut sep = |f: &mut fmt::Formatter<'_>| -> fmt::Result {
            if !first {
                write!(f, "*")?;
            }
            first = false;
            Ok(())
        };
        for (j, e) in &self.h {
            sep(f)?;
            if *e == 1 {
                write!(f, "H{}", j + 1)?;
            } else {
                write!(f, "H{}^{}", j + 1, e)?;
            }
        }
        for (k, m) in &self.l {
            sep(f)?;
            if *m == 1 {
                write!(f, "L{}", k + 1)?;
            } else {
                write!(f, "L{}^{}", k + 1, m)?;
            }
        }
        Ok(())
    }
}

pub type MultiIndex = Vec<u32>;

/// Key ordered by total degree first, for readable rendering.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Key {
    pub deg: u32,
    pub idx: MultiIndex,
    pub sym: SymbolMonomial,
}

impl Key {
    pub fn new(idx: MultiIndex, sym: SymbolMonomial) -> Self {
        Key { deg: idx.iter().sum(), idx, sym }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TruncSeries {
    alphabet: Alphabet,
    nvars: usize,
    order: usize,
    terms: BTreeMap<Key, FieldElem>,
}

impl TruncSeries {
    pub fn zero(alphabet: Alphabet, nvars: usize, order: usize) -> Self {
        TruncSeries { alphabet, nvars, order, terms: BTreeMap::new() }
    }

    pub fn constant(alphabet: Alphabet, nvars: usize, order: usize, c: FieldElem) -> Self {
        let mut s = Self::zero(alphabet, nvars, order);
        s.add_term(vec![0; nvars], SymbolMonomial::neutral(), c);
        s
    }

    pub fn var(alphabet: Alphabet, nvars: usize, order: usize, j: usize) -> Self {
        let mut s = Self::zero(alphabet, nvars, order);
        let mut i = vec![0; nvars];
        i[j] = 1;
        s.add_term(i, SymbolMonomial::neutral(), FieldElem::one());
        s
    }

    pub fn monomial(alphabet: Alphabet, nvars: usize, order: usize, idx: MultiIndex, sym: SymbolMonomial, c: FieldElem) -> Self {
        let mut s = Self::zero(alphabet, nvars, order);
        s.add_term(idx, sym, c);
        s
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Key, &FieldElem)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Adds `c * sym * var^idx`, dropping it beyond the truncation order.
    pub fn add_term(&mut self, idx: MultiIndex, sym: SymbolMonomial, c: FieldElem) {
        if c.is_zero() {
            return;
        }
        let key = Key::new(idx, sym);
        if key.deg as usize > self.order {
            return;
        }
        match self.terms.get_mut(&key) {
            Some(v) => {
                *v = v.add(&c);
                if v.is_zero() {
                    self.terms.remove(&key);
                }
            }
            None => {
                self.terms.insert(key, c);
            }
        }
    }

    pub fn coeff(&self, idx: &[u32], sym: &SymbolMonomial) -> FieldElem {
        self.terms.get(&Key::new(idx.to_vec(), sym.clone())).cloned().unwrap_or_else(FieldElem::zero)
    }

    /// Coefficient of `var^idx` with the neutral symbol.
    pub fn plain_coeff(&self, idx: &[u32]) -> FieldElem {
        self.coeff(idx, &SymbolMonomial::neutral())
    }

    pub fn constant_term(&self) -> FieldElem {
        self.plain_coeff(&vec![0; self.nvars])
    }

    /// Lowest total degree present, `None` for zero.
    pub fn valuation(&self) -> Option<usize> {
        self.terms.keys().map(|k| k.deg as usize).min()
    }

    fn val_or(&self) -> usize {
        self.valuation().unwrap_or(usize::MAX / 4)
    }

    pub fn has_symbols(&self) -> bool {
        self.terms.keys().any(|k| !k.sym.is_neutral())
    }

    pub fn has_logs(&self) -> bool {
        self.terms.keys().any(|k| k.sym.has_logs())
    }

    pub fn truncate(&self, order: usize) -> Self {
        let mut r = Self::zero(self.alphabet, self.nvars, order.min(self.order));
        for (k, c) in &self.terms {
            r.add_term(k.idx.clone(), k.sym.clone(), c.clone());
        }
        r
    }

    pub fn with_alphabet(mut self, a: Alphabet) -> Self {
        self.alphabet = a;
        self
    }

    /// Homogeneous part of total degree `d`.
    pub fn degree_part(&self, d: usize) -> Self {
        let mut r = Self::zero(self.alphabet, self.nvars, self.order);
        for (k, c) in &self.terms {
            if k.deg as usize == d {
                r.terms.insert(k.clone(), c.clone());
            }
        }
        r
    }

    fn check(&self, o: &Self) -> Result<()> {
        if self.alphabet != o.alphabet || self.nvars != o.nvars {
            return Err(Error::AlphabetMismatch);
        }
        Ok(())
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        self.check(o)?;
        let mut r = self.truncate(self.order.min(o.order));
        for (k, c) in &o.terms {
            r.add_term(k.idx.clone(), k.sym.clone(), c.clone());
        }
        Ok(r)
    }

    pub fn sub(&self, o: &Self) -> Result<Self> {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Self {
        let mut r = self.clone();
        for c in r.terms.values_mut() {
            *c = c.neg();
        }
        r
    }

    pub fn scale(&self, c: &FieldElem) -> Self {
        let mut r = Self::zero(self.alphabet, self.nvars, self.order);
        for (k, v) in &self.terms {
            r.add_term(k.idx.clone(), k.sym.clone(), v.mul(c));
        }
        r
    }

    pub fn mul_symbol(&self, s: &SymbolMonomial) -> Self {
        let mut r = Self::zero(self.alphabet, self.nvars, self.order);
        for (k, v) in &self.terms {
            r.add_term(k.idx.clone(), k.sym.mul(s), v.clone());
        }
        r
    }

    /// Product truncated at `min(N_a, N_b)`.
    pub fn mul(&self, o: &Self) -> Result<Self> {
        self.check(o)?;
        Ok(self.mul_to(o, self.order.min(o.order)))
    }

    /// Product keeping every term of total degree at most `order`. The
    /// caller is responsible for that many terms being meaningful.
    pub fn mul_to(&self, o: &Self, order: usize) -> Self {
        let mut r = Self::zero(self.alphabet, self.nvars, order);
        for (ka, a) in &self.terms {
            for (kb, b) in &o.terms {
                if (ka.deg + kb.deg) as usize > order {
                    continue;
                }
                let idx = ka.idx.iter().zip(&kb.idx).map(|(x, y)| x + y).collect();
                r.add_term(idx, ka.sym.mul(&kb.sym), a.mul(b));
            }
        }
        r
    }

    pub fn pow(&self, e: u32) -> Result<Self> {
        let mut r = Self::constant(self.alphabet, self.nvars, self.order, FieldElem::one());
        for _ in 0..e {
            r = r.mul(self)?;
        }
        Ok(r)
    }

    /// `1/self`, defined when the constant term is a symbol-free unit.
    pub fn inv(&self) -> Result<Self> {
        let c0 = self.constant_term();
        let c0i = c0.try_inv().map_err(|_| Error::DivisionByZero)?;
        let one = Self::constant(self.alphabet, self.nvars, self.order, FieldElem::one());
        // x = 1 - self/c0 has no constant term
        let x = one.sub(&self.scale(&c0i))?;
        if !x.constant_term().is_zero() {
            return Err(Error::DivisionByZero);
        }
        if x.terms.keys().any(|k| k.deg == 0) {
            return Err(Error::Input("series inverse needs a symbol-free constant term".into()));
        }
        let mut acc = one.clone();
        let mut p = one;
        for _ in 0..self.order {
            p = p.mul(&x)?;
            if p.is_zero() {
                break;
            }
            acc = acc.add(&p)?;
        }
        Ok(acc.scale(&c0i))
    }

    pub fn div(&self, o: &Self) -> Result<Self> {
        self.mul(&o.inv()?)
    }

    /// `d/ds` along the curve, with `u_j` (in the `U` alphabet) and the
    /// `H`/`L` symbols differentiated through `basis`.
    pub fn derive_s(&self, basis: &HyperexpBasis) -> Result<Self> {
        let mut r = Self::zero(self.alphabet, self.nvars, self.order);
        for (k, c) in &self.terms {
            let mut w = FieldElem::zero();
            for j in 0..self.nvars {
                let mut e = k.sym.h.get(&j).copied().unwrap_or(0) as i64;
                if self.alphabet == Alphabet::U {
                    e += k.idx[j] as i64;
                }
                if e != 0 {
                    let h = basis.h.get(j).ok_or(Error::AlphabetMismatch)?;
                    w = w.add(&h.mul(&FieldElem::from_i64(e)));
                }
            }
            for (&j, _) in k.sym.h.iter().filter(|(j, _)| **j >= self.nvars) {
                let h = basis.h.get(j).ok_or(Error::AlphabetMismatch)?;
                w = w.add(&h.mul(&FieldElem::from_i64(k.sym.h[&j] as i64)));
            }
            r.add_term(k.idx.clone(), k.sym.clone(), c.derive().add(&w.mul(c)));
            for (&l, &m) in &k.sym.l {
                let d = basis.l_derivs.get(l).ok_or(Error::AlphabetMismatch)?;
                let mut sym = k.sym.clone();
                if m == 1 {
                    sym.l.remove(&l);
                } else {
                    sym.l.insert(l, m - 1);
                }
                r.add_term(k.idx.clone(), sym, c.mul(d).mul(&FieldElem::from_i64(m as i64)));
            }
        }
        Ok(r)
    }

    /// `d/d var_j`; the truncation order drops by one.
    pub fn partial(&self, j: usize) -> Self {
        let mut r = Self::zero(self.alphabet, self.nvars, self.order.saturating_sub(1));
        for (k, c) in &self.terms {
            let e = k.idx[j];
            if e > 0 {
                let mut idx = k.idx.clone();
                idx[j] -= 1;
                r.add_term(idx, k.sym.clone(), c.mul(&FieldElem::from_i64(e as i64)));
            }
        }
        r
    }

    /// Substitutes `var_j -> subst[j]`. The result lives in the alphabet of
    /// the substituted series, truncated at the smallest order involved.
    pub fn compose(&self, subst: &[TruncSeries]) -> Result<Self> {
        if subst.len() != self.nvars {
            return Err(Error::AlphabetMismatch);
        }
        let first = subst.first().ok_or(Error::AlphabetMismatch)?;
        let (alpha, nv) = (first.alphabet, first.nvars);
        let mut order = self.order;
        for s in subst {
            if s.alphabet != alpha || s.nvars != nv {
                return Err(Error::AlphabetMismatch);
            }
            if s.terms.keys().any(|k| k.deg == 0) {
                return Err(Error::NonzeroConstantTerm);
            }
            order = order.min(s.order);
        }
        let mut powers: Vec<Vec<TruncSeries>> = subst
            .iter()
            .map(|s| vec![TruncSeries::constant(alpha, nv, order, FieldElem::one()), s.truncate(order)])
            .collect();
        let mut r = Self::zero(alpha, nv, order);
        for (k, c) in &self.terms {
            if k.deg as usize > order {
                continue;
            }
            let mut t = Self::constant(alpha, nv, order, c.clone()).mul_symbol(&k.sym);
            for (j, &e) in k.idx.iter().enumerate() {
                while powers[j].len() <= e as usize {
                    let next = powers[j].last().unwrap().mul(&powers[j][1])?;
                    powers[j].push(next);
                }
                t = t.mul(&powers[j][e as usize])?;
            }
            r = r.add(&t)?;
        }
        Ok(r)
    }

    pub fn map_coeffs(&self, f: &dyn Fn(&FieldElem) -> Result<FieldElem>) -> Result<Self> {
        let mut r = Self::zero(self.alphabet, self.nvars, self.order);
        for (k, c) in &self.terms {
            r.add_term(k.idx.clone(), k.sym.clone(), f(c)?);
        }
        Ok(r)
    }

    /// Substitutes the series variables by exact scalars (only for
    /// symbol-free series); used by numeric checks.
    pub fn eval_num(&self, s: f64, params: &BTreeMap<usize, f64>, vars: &[f64]) -> Option<f64> {
        let mut acc = 0.0;
        for (k, c) in &self.terms {
            if !k.sym.is_neutral() {
                return None;
            }
            let mut t = c.eval_num(s, params)?;
            for (x, &e) in vars.iter().zip(&k.idx) {
                t *= x.powi(e as i32);
            }
            acc += t;
        }
        Some(acc)
    }
}

impl fmt::Display for TruncSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0 + O({})", self.order + 1);
        }
        let x = self.alphabet.letter();
        for (n, (k, c)) in self.terms.iter().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({c})")?;
            for (j, &e) in k.idx.iter().enumerate() {
                match e {
                    0 => {}
                    1 => write!(f, "*{x}{}", j + 1)?,
                    _ => write!(f, "*{x}{}^{e}", j + 1)?,
                }
            }
            if !k.sym.is_neutral() {
                write!(f, "*{}", k.sym)?;
            }
        }
        write!(f, " + O({})", self.order + 1)
    }
}

/// A formal vector field: components along the series variables plus an
/// `s`-component.
#[derive(Clone, Debug)]
pub struct FormalVectorField {
    pub comps: Vec<TruncSeries>,
    pub s_comp: TruncSeries,
}

/// `L_v a = sum_j v_j d a/d var_j + v_s d a/ds`, truncated at the order up
/// to which every contribution is known.
pub fn lie(a: &TruncSeries, v: &FormalVectorField, basis: &HyperexpBasis) -> Result<TruncSeries> {
    if v.comps.len() != a.nvars() {
        return Err(Error::AlphabetMismatch);
    }
    for c in v.comps.iter().chain(std::iter::once(&v.s_comp)) {
        a.check(c)?;
    }
    let mut order = usize::MAX / 4;
    let mut parts = Vec::new();
    for (j, vj) in v.comps.iter().enumerate() {
        let da = a.partial(j);
        if da.is_zero() && a.order > 0 {
            order = order.min(vj.order + da.order + 1);
            continue;
        }
        order = order.min(da.order + vj.val_or()).min(vj.order + da.val_or());
        parts.push((da, vj));
    }
    let ds = a.derive_s(basis)?;
    order = order.min(a.order + v.s_comp.val_or()).min(v.s_comp.order + ds.val_or());
    let order = order.min(a.order + v.comps.iter().map(|c| c.order).max().unwrap_or(0));
    let mut r = TruncSeries::zero(a.alphabet, a.nvars, order);
    for (da, vj) in parts {
        r = r.add(&da.mul_to(vj, order).with_order(order))?;
    }
    r = r.add(&ds.mul_to(&v.s_comp, order).with_order(order))?;
    Ok(r)
}

impl TruncSeries {
    fn with_order(mut self, order: usize) -> Self {
        self.order = order;
        self.terms.retain(|k, _| k.deg as usize <= order);
        self
    }

    /// Sets the truncation order without dropping information the caller
    /// knows to be exact (for example polynomial data).
    pub fn reorder(self, order: usize) -> Self {
        self.with_order(order)
    }
}

/// Formal inverse of a tangent-to-identity map `phi_j = u_j + O(2)`,
/// returned in the `Q` alphabet.
pub fn invert_map(phi: &[TruncSeries]) -> Result<Vec<TruncSeries>> {
    let n = phi.len();
    let first = phi.first().ok_or(Error::AlphabetMismatch)?;
    let order = phi.iter().map(|p| p.order).min().unwrap();
    for (j, p) in phi.iter().enumerate() {
        if p.nvars != n {
            return Err(Error::AlphabetMismatch);
        }
        let mut lin = TruncSeries::zero(p.alphabet, n, order);
        for (k, c) in &p.terms {
            if k.deg <= 1 {
                lin.add_term(k.idx.clone(), k.sym.clone(), c.clone());
            }
        }
        let id = TruncSeries::var(p.alphabet, n, order, j);
        if lin != id {
            return Err(Error::NotTangentToIdentity);
        }
    }
    // nonlinear parts
    let nl: Vec<TruncSeries> = phi
        .iter()
        .enumerate()
        .map(|(j, p)| p.truncate(order).sub(&TruncSeries::var(first.alphabet, n, order, j)))
        .collect::<Result<_>>()?;
    let q: Vec<TruncSeries> = (0..n).map(|j| TruncSeries::var(Alphabet::Q, n, order, j)).collect();
    let mut cur = q.clone();
    // each pass fixes one more degree
    for _ in 1..order.max(1) {
        let mut next = Vec::with_capacity(n);
        for j in 0..n {
            let nj = nl[j].clone().with_alphabet(Alphabet::Q);
            next.push(q[j].sub(&nj.compose(&cur)?)?);
        }
        if next == cur {
            break;
        }
        cur = next;
    }
    Ok(cur)
}

/// Evaluates expressions in the series variables (named `q1..` or `u1..`,
/// or custom names) to series with tower coefficients.
pub struct SeriesEnv {
    pub alphabet: Alphabet,
    pub order: usize,
    pub var_names: Vec<String>,
    pub tower: Option<Arc<Tower>>,
    pub params: Vec<String>,
    pub curve_var: String,
    /// Optional replacement for the curve variable (e.g. `s -> s`); when
    /// set, identifiers in `bindings` evaluate to the given series.
    pub bindings: BTreeMap<String, TruncSeries>,
}

impl SeriesEnv {
    pub fn new(alphabet: Alphabet, order: usize, var_names: Vec<String>, tower: Option<Arc<Tower>>, params: &[String]) -> Self {
        SeriesEnv { alphabet, order, var_names, tower, params: params.to_vec(), curve_var: "s".into(), bindings: BTreeMap::new() }
    }

    fn nvars(&self) -> usize {
        self.var_names.len()
    }

    fn konst(&self, c: FieldElem) -> TruncSeries {
        TruncSeries::constant(self.alphabet, self.nvars(), self.order, c)
    }

    pub fn eval_str(&self, src: &str) -> Result<TruncSeries> {
        parse(src)?.eval(self)
    }
}

impl Evaluator<TruncSeries> for SeriesEnv {
    fn constant(&self, q: &Rational) -> Result<TruncSeries> {
        Ok(self.konst(FieldElem::from_rational(q)))
    }
    fn var(&self, name: &str) -> Result<TruncSeries> {
        if let Some(b) = self.bindings.get(name) {
            return Ok(b.clone());
        }
        if let Some(j) = self.var_names.iter().position(|v| v == name) {
            return Ok(TruncSeries::var(self.alphabet, self.nvars(), self.order, j));
        }
        if name == self.curve_var {
            return Ok(self.konst(FieldElem::s()));
        }
        if self.params.iter().any(|p| p == name) {
            return Ok(self.konst(FieldElem::from_param(ParamScalar::named(name))));
        }
        if let Some(t) = &self.tower {
            if let Some(i) = t.generator_index(name) {
                return Ok(self.konst(FieldElem::generator(t, i)));
            }
        }
        Err(Error::Input(format!("undeclared identifier '{name}'")))
    }
    fn add(&self, a: TruncSeries, b: TruncSeries) -> Result<TruncSeries> {
        a.add(&b)
    }
    fn sub(&self, a: TruncSeries, b: TruncSeries) -> Result<TruncSeries> {
        a.sub(&b)
    }
    fn mul(&self, a: TruncSeries, b: TruncSeries) -> Result<TruncSeries> {
        a.mul(&b)
    }
    fn div(&self, a: TruncSeries, b: TruncSeries) -> Result<TruncSeries> {
        a.div(&b)
    }
    fn neg(&self, a: TruncSeries) -> Result<TruncSeries> {
        Ok(a.neg())
    }
    fn pow(&self, a: TruncSeries, e: i64) -> Result<TruncSeries> {
        if e >= 0 {
            a.pow(e as u32)
        } else {
            a.inv()?.pow((-e) as u32)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::ElemEnv;

    fn env(order: usize) -> SeriesEnv {
        SeriesEnv::new(Alphabet::U, order, vec!["u1".into(), "u2".into()], None, &["alpha".into()])
    }

    fn fe(src: &str) -> FieldElem {
        ElemEnv::new(None, &["alpha".into()]).eval_str(src).unwrap()
    }

    #[test]
    fn arithmetic() {
        let e = env(2);
        let a = e.eval_str("(1+u1)^2").unwrap();
        assert_eq!(a, e.eval_str("1 + 2*u1 + u1^2").unwrap());
        let b = e.eval_str("1/(1-u1)").unwrap();
        assert_eq!(b, e.eval_str("1 + u1 + u1^2").unwrap());
        let p = e.eval_str("u1").unwrap().mul(&e.eval_str("u2").unwrap()).unwrap();
        assert_eq!(p.plain_coeff(&[1, 1]), FieldElem::one());
        assert!(e.eval_str("u1").unwrap().add(&e.eval_str("u1").unwrap().with_alphabet(Alphabet::Q)).is_err());
    }

    #[test]
    fn derivatives() {
        let basis = HyperexpBasis::new(vec![fe("alpha/s")]).unwrap();
        let e = SeriesEnv::new(Alphabet::U, 3, vec!["u1".into()], None, &["alpha".into()]);
        let u = e.eval_str("u1").unwrap();
        assert_eq!(u.derive_s(&basis).unwrap(), u.scale(&fe("alpha/s")));
        let t = e.eval_str("s^2/(2*alpha+2)*u1^2").unwrap();
        assert_eq!(t.derive_s(&basis).unwrap(), e.eval_str("s*u1^2").unwrap());
        let mut basis = basis;
        let l = basis.add_log(fe("1/s"));
        let ls = TruncSeries::monomial(Alphabet::U, 1, 3, vec![0], SymbolMonomial::log(l), FieldElem::one());
        assert_eq!(ls.derive_s(&basis).unwrap(), e.eval_str("1/s").unwrap());
    }

    #[test]
    fn compose_and_invert() {
        let q = SeriesEnv::new(Alphabet::Q, 3, vec!["q1".into()], None, &[]);
        let u = SeriesEnv::new(Alphabet::U, 3, vec!["u1".into()], None, &[]);
        let a = q.eval_str("q1 + q1^2").unwrap();
        let c = a.compose(&[u.eval_str("u1 - u1^2").unwrap()]).unwrap();
        assert_eq!(c, u.eval_str("u1 - 2*u1^3").unwrap());
        assert_eq!(c.plain_coeff(&[2]), FieldElem::zero());
        assert_eq!(c.plain_coeff(&[3]), FieldElem::from_i64(-2));
        assert!(a.compose(&[u.eval_str("1+u1").unwrap()]).is_err());

        let phi = u.eval_str("u1 + s*u1^2").unwrap();
        let inv = invert_map(std::slice::from_ref(&phi)).unwrap();
        assert_eq!(inv[0], q.eval_str("q1 - s*q1^2 + 2*s^2*q1^3").unwrap());
        let back = phi.clone().with_alphabet(Alphabet::Q).compose(&inv).unwrap();
        assert_eq!(back, q.eval_str("q1").unwrap());
        assert!(invert_map(&[u.eval_str("2*u1").unwrap()]).is_err());
    }

    #[test]
    fn lie_derivative() {
        // q1' = q1 q2 ... with X = (q1, -q2, 1): L_X(q1 q2) = 0
        let q = SeriesEnv::new(Alphabet::Q, 4, vec!["q1".into(), "q2".into()], None, &["alpha".into()]);
        let basis = HyperexpBasis::new(vec![fe("alpha/s"), fe("-alpha/s")]).unwrap();
        let v = FormalVectorField {
            comps: vec![q.eval_str("alpha/s*q1 + q1^2*q2").unwrap(), q.eval_str("-alpha/s*q2 - q1*q2^2").unwrap()],
            s_comp: q.eval_str("1").unwrap(),
        };
        let f = q.eval_str("q1*q2").unwrap();
        assert!(lie(&f, &v, &basis).unwrap().is_zero());
        assert_eq!(lie(&q.eval_str("q1").unwrap(), &v, &basis).unwrap(), v.comps[0]);
        assert!(lie(&q.eval_str("7").unwrap(), &v, &basis).unwrap().is_zero());
    }
}
