//! Radical towers `K(w_1, ..., w_r)`, `w_i^{d_i} = b_i`, over
//! `K = Q(alpha)(s)`, and their elements.
//!
//! Elements are coordinate vectors over the monomials `prod w_i^{e_i}`,
//! `0 <= e_i < d_i`. The monomial index is mixed radix with the first
//! generator as the least significant digit, so an element of a prefix
//! tower embeds by zero padding.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_traits::{Float, FromPrimitive};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::param::ParamScalar;
use crate::poly::Poly;
use crate::ratfunc::RatFunc;
use crate::scalar::{Field, Rational};

/// Rational functions in `s` over the parameter field.
pub type RatS = RatFunc<ParamScalar>;

type Sparse = Vec<(usize, RatS)>;

#[derive(Debug)]
pub struct GaloisGen {
    pub name: String,
    images: Vec<FieldElem>,
    mono_images: Vec<FieldElem>,
}

impl GaloisGen {
    pub fn images(&self) -> &[FieldElem] {
        &self.images
    }
}

#[derive(Debug)]
pub struct Tower {
    names: Vec<String>,
    degrees: Vec<u32>,
    radicands: Vec<FieldElem>,
    parent: Option<Arc<Tower>>,
    dim: usize,
    table: Vec<Vec<Sparse>>,
    log_derivs: Vec<Vec<RatS>>,
    mono_derivs: Vec<Vec<RatS>>,
    galois: Vec<GaloisGen>,
}

impl Tower {
    /// Adjoin `w` with `w^degree = radicand` on top of `parent`.
    pub fn extend(parent: Option<&Arc<Tower>>, name: &str, degree: u32, radicand: &FieldElem) -> Result<Arc<Tower>> {
        if degree < 2 {
            return Err(Error::InvalidTower(format!("degree of {name} must be at least 2")));
        }
        let b = match parent {
            Some(p) => radicand.embed(p)?,
            None => {
                if radicand.tower.is_some() && !radicand.is_base() {
                    return Err(Error::InvalidTower(format!("radicand of {name} uses later generators")));
                }
                FieldElem::from_ratfunc(radicand.base_part())
            }
        };
        if b.is_zero() {
            return Err(Error::InvalidTower(format!("radicand of {name} is zero")));
        }
        if parent.is_some_and(|p| p.names.iter().any(|n| n == name)) {
            return Err(Error::InvalidTower(format!("generator {name} declared twice")));
        }
        let pd = parent.map_or(1, |p| p.dim);
        let d = degree as usize;
        let dim = pd * d;
        let mut names = parent.map_or(Vec::new(), |p| p.names.clone());
        let mut degrees = parent.map_or(Vec::new(), |p| p.degrees.clone());
        let mut radicands: Vec<FieldElem> = parent.map_or(Vec::new(), |p| p.radicands.clone());
        names.push(name.to_string());
        degrees.push(degree);
        radicands.push(b.clone());

        // lower products times a radicand power, placed at level exponent e
        let mut table = vec![vec![Vec::new(); dim]; dim];
        for a in 0..dim {
            for c in 0..dim {
                let (la, ea) = (a % pd, a / pd);
                let (lc, ec) = (c % pd, c / pd);
                let lower: Sparse = match parent {
                    Some(p) => p.table[la][lc].clone(),
                    None => vec![(0, RatS::one())],
                };
                let mut e = ea + ec;
                let lower = if e >= d {
                    e -= d;
                    let mut coords = vec![RatS::zero(); pd];
                    for (k, v) in lower {
                        coords[k] = v;
                    }
                    let lower_elem = FieldElem { tower: parent.cloned(), coords };
                    let prod = lower_elem.mul(&b);
                    let prod = match parent {
                        Some(p) => prod.embed(p)?,
                        None => prod,
                    };
                    prod.coords.iter().enumerate().filter(|(_, v)| !v.is_zero()).map(|(k, v)| (k, v.clone())).collect()
                } else {
                    lower
                };
                table[a][c] = lower.into_iter().map(|(k, v)| (k + pd * e, v)).collect();
            }
        }
        let mut tower = Tower {
            names,
            degrees,
            radicands,
            parent: parent.cloned(),
            dim,
            table,
            log_derivs: Vec::new(),
            mono_derivs: Vec::new(),
            galois: Vec::new(),
        };
        // log-derivatives l_i = b_i' / (d_i b_i), computed in the prefix towers
        let mut log_derivs: Vec<FieldElem> =
            parent.map_or(Vec::new(), |p| (0..p.names.len()).map(|i| p.log_derivative(i)).collect());
        let top = b.derive().div_checked(&b.mul(&FieldElem::from_i64(degree as i64)))?;
        log_derivs.push(top);
        let this = Arc::new(tower_without_derivs(&tower));
        let log_derivs: Vec<FieldElem> = log_derivs.iter().map(|l| l.embed(&this)).collect::<Result<_>>()?;
        tower.log_derivs = log_derivs.iter().map(|l| l.coords.clone()).collect();
        let mut mono_derivs = Vec::with_capacity(dim);
        for m in 0..dim {
            let exps = this.exponents(m);
            let mut factor = FieldElem::zero();
            for (i, &e) in exps.iter().enumerate() {
                if e > 0 {
                    factor = factor.add(&log_derivs[i].mul(&FieldElem::from_i64(e as i64)));
                }
            }
            let dm = factor.mul(&FieldElem::basis(&this, m)).embed(&this)?;
            mono_derivs.push(dm.coords);
        }
        tower.mono_derivs = mono_derivs;
        Ok(Arc::new(tower))
    }

    /// A copy of this tower carrying declared Galois generators. Each
    /// generator maps every `w_i` to the given image; the map must respect
    /// the defining relations and commute with `d/ds`.
    pub fn with_galois(self: &Arc<Tower>, gens: Vec<(String, Vec<FieldElem>)>) -> Result<Arc<Tower>> {
        let mut t = Tower {
            names: self.names.clone(),
            degrees: self.degrees.clone(),
            radicands: self.radicands.clone(),
            parent: self.parent.clone(),
            dim: self.dim,
            table: self.table.clone(),
            log_derivs: self.log_derivs.clone(),
            mono_derivs: self.mono_derivs.clone(),
            galois: Vec::new(),
        };
        let mut out = Vec::new();
        for (name, images) in gens {
            if images.len() != self.names.len() {
                return Err(Error::InvalidTower(format!("generator {name} must give an image for every radical")));
            }
            let images: Vec<FieldElem> = images.iter().map(|x| x.embed(self)).collect::<Result<_>>()?;
            let mono_images = (0..self.dim)
                .map(|m| {
                    let mut acc = FieldElem::one();
                    for (i, &e) in self.exponents(m).iter().enumerate() {
                        acc = acc.mul(&images[i].pow(e));
                    }
                    acc.embed(self)
                })
                .collect::<Result<Vec<_>>>()?;
            let g = GaloisGen { name: name.clone(), images, mono_images };
            for i in 0..self.names.len() {
                let b = self.radicands[i].embed(self)?;
                if g.images[i].pow(self.degrees[i]) != g.apply_coords(&b) {
                    return Err(Error::InvalidTower(format!(
                        "{name} does not preserve {}^{} = {}",
                        self.names[i], self.degrees[i], self.radicands[i]
                    )));
                }
                let lhs = g.images[i].derive();
                let rhs = g.apply_coords(&self.log_derivative(i)).mul(&g.images[i]);
                if lhs != rhs {
                    return Err(Error::InvalidTower(format!("{name} does not commute with d/ds on {}", self.names[i])));
                }
            }
            out.push(g);
        }
        t.galois = out;
        Ok(Arc::new(t))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    /// Radicand of generator `i` (an element of the prefix tower).
    pub fn radicand(&self, i: usize) -> &FieldElem {
        &self.radicands[i]
    }

    pub fn parent(&self) -> Option<&Arc<Tower>> {
        self.parent.as_ref()
    }

    pub fn galois(&self) -> &[GaloisGen] {
        &self.galois
    }

    pub fn galois_index(&self, name: &str) -> Option<usize> {
        self.galois.iter().position(|g| g.name == name)
    }

    pub fn generator_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Exponent vector of basis monomial `m`.
    pub fn exponents(&self, mut m: usize) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.degrees.len());
        for &d in &self.degrees {
            out.push((m % d as usize) as u32);
            m /= d as usize;
        }
        out
    }

    pub fn monomial_name(&self, m: usize) -> String {
        let mut parts = Vec::new();
        for (i, e) in self.exponents(m).into_iter().enumerate() {
            match e {
                0 => {}
                1 => parts.push(self.names[i].clone()),
                _ => parts.push(format!("{}^{}", self.names[i], e)),
            }
        }
        parts.join("*")
    }

    /// Log-derivative `w_i'/w_i` as an element of this tower.
    pub fn log_derivative(self: &Arc<Self>, i: usize) -> FieldElem {
        FieldElem { tower: Some(self.clone()), coords: self.log_derivs[i].clone() }
    }

    fn same_prefix(&self, other: &Tower, len: usize) -> bool {
        self.names[..len] == other.names[..len]
            && self.degrees[..len] == other.degrees[..len]
            && (0..len).all(|i| self.radicands[i].coords == other.radicands[i].coords)
    }

    /// True if `self` is (structurally) a prefix of `other`.
    pub fn is_prefix_of(&self, other: &Tower) -> bool {
        self.names.len() <= other.names.len() && self.same_prefix(other, self.names.len())
    }

    /// Real numeric values of the generators (principal real roots).
    pub fn numeric_generators<F: Float + FromPrimitive>(&self, s: F, params: &BTreeMap<usize, F>) -> Option<Vec<F>> {
        let mut vals: Vec<F> = Vec::new();
        for i in 0..self.names.len() {
            let b = self.radicands[i].eval_with(s, params, &vals)?;
            let d = self.degrees[i];
            let inv = F::one() / F::from_u32(d)?;
            let w = if b >= F::zero() {
                b.powf(inv)
            } else if d % 2 == 1 {
                -(-b).powf(inv)
            } else {
                return None;
            };
            vals.push(w);
        }
        Some(vals)
    }

    /// Exact generator values at a point, when every radicand value is a
    /// perfect power there (principal roots).
    pub fn exact_generators(&self, s0: &ParamScalar) -> Option<Vec<ParamScalar>> {
        let mut vals: Vec<ParamScalar> = Vec::new();
        for i in 0..self.names.len() {
            let b = self.radicands[i].eval_exact_with(s0, &vals)?;
            let w = b.root_exact(self.degrees[i])?;
            if w.is_zero() {
                return None;
            }
            vals.push(w);
        }
        Some(vals)
    }
}

// A tower copy used only to build monomials while derivatives are being set up.
fn tower_without_derivs(t: &Tower) -> Tower {
    Tower {
        names: t.names.clone(),
        degrees: t.degrees.clone(),
        radicands: t.radicands.clone(),
        parent: t.parent.clone(),
        dim: t.dim,
        table: t.table.clone(),
        log_derivs: Vec::new(),
        mono_derivs: Vec::new(),
        galois: Vec::new(),
    }
}

impl GaloisGen {
    fn apply_coords(&self, a: &FieldElem) -> FieldElem {
        let mut acc = FieldElem::zero();
        for (m, c) in a.coords.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            acc = acc.add(&self.mono_images[m].scale(c));
        }
        acc
    }
}

/// Element of a radical tower (or of the base field when `tower` is None).
#[derive(Clone, Debug)]
pub struct FieldElem {
    tower: Option<Arc<Tower>>,
    coords: Vec<RatS>,
}

impl FieldElem {
    pub fn from_ratfunc(r: RatS) -> Self {
        FieldElem { tower: None, coords: vec![r] }
    }

    pub fn from_param(c: ParamScalar) -> Self {
        Self::from_ratfunc(RatS::constant(c))
    }

    /// The curve parameter `s`.
    pub fn s() -> Self {
        Self::from_ratfunc(RatS::var())
    }

    pub fn basis(tower: &Arc<Tower>, m: usize) -> Self {
        let mut coords = vec![RatS::zero(); tower.dim];
        coords[m] = RatS::one();
        FieldElem { tower: Some(tower.clone()), coords }
    }

    /// The generator `w_i`.
    pub fn generator(tower: &Arc<Tower>, i: usize) -> Self {
        let stride: usize = tower.degrees[..i].iter().map(|&d| d as usize).product();
        Self::basis(tower, stride)
    }

    pub fn from_coords(tower: Option<&Arc<Tower>>, coords: Vec<RatS>) -> Self {
        match tower {
            Some(t) => {
                assert_eq!(coords.len(), t.dim);
                FieldElem { tower: Some(t.clone()), coords }
            }
            None => {
                assert_eq!(coords.len(), 1);
                FieldElem { tower: None, coords }
            }
        }
    }

    pub fn tower(&self) -> Option<&Arc<Tower>> {
        self.tower.as_ref()
    }

    pub fn coords(&self) -> &[RatS] {
        &self.coords
    }

    pub fn base_part(&self) -> RatS {
        self.coords[0].clone()
    }

    /// True if the element lies in the base field `K`.
    pub fn is_base(&self) -> bool {
        self.coords[1..].iter().all(|c| c.is_zero())
    }

    pub fn as_ratfunc(&self) -> Option<RatS> {
        self.is_base().then(|| self.coords[0].clone())
    }

    pub fn as_param(&self) -> Option<ParamScalar> {
        self.as_ratfunc().and_then(|r| r.as_constant())
    }

    /// Embed into a tower that extends this element's tower.
    pub fn embed(&self, target: &Arc<Tower>) -> Result<Self> {
        match &self.tower {
            Some(t) if Arc::ptr_eq(t, target) => Ok(self.clone()),
            Some(t) if !t.is_prefix_of(target) => {
                Err(Error::InvalidTower("element does not belong to a prefix of the target tower".into()))
            }
            _ => {
                let mut coords = self.coords.clone();
                coords.resize(target.dim, RatS::zero());
                Ok(FieldElem { tower: Some(target.clone()), coords })
            }
        }
    }

    /// Common tower of two elements, preferring the one with Galois data.
    fn common(a: &Self, b: &Self) -> Option<Arc<Tower>> {
        match (&a.tower, &b.tower) {
            (None, None) => None,
            (Some(t), None) | (None, Some(t)) => Some(t.clone()),
            (Some(x), Some(y)) => {
                if Arc::ptr_eq(x, y) {
                    return Some(x.clone());
                }
                let pick = if x.dim > y.dim {
                    x
                } else if y.dim > x.dim {
                    y
                } else if y.galois.len() > x.galois.len() {
                    y
                } else {
                    x
                };
                let other = if Arc::ptr_eq(pick, x) { y } else { x };
                assert!(other.is_prefix_of(pick), "elements of unrelated towers combined");
                Some(pick.clone())
            }
        }
    }

    fn coords_in(&self, t: &Option<Arc<Tower>>) -> Vec<RatS> {
        let mut c = self.coords.clone();
        if let Some(t) = t {
            c.resize(t.dim, RatS::zero());
        }
        c
    }

    pub fn scale(&self, c: &RatS) -> Self {
        FieldElem { tower: self.tower.clone(), coords: self.coords.iter().map(|x| x.mul(c)).collect() }
    }

    pub fn derive(&self) -> Self {
        let mut coords: Vec<RatS> = self.coords.iter().map(|c| c.derivative()).collect();
        if let Some(t) = &self.tower {
            for (m, a) in self.coords.iter().enumerate() {
                if a.is_zero() || m == 0 {
                    continue;
                }
                for (k, d) in t.mono_derivs[m].iter().enumerate() {
                    if !d.is_zero() {
                        coords[k] = coords[k].add(&a.mul(d));
                    }
                }
            }
        }
        FieldElem { tower: self.tower.clone(), coords }
    }

    /// Apply a declared Galois generator.
    pub fn galois(&self, g: usize) -> Result<Self> {
        let Some(t) = &self.tower else {
            return Ok(self.clone());
        };
        let gen = t.galois.get(g).ok_or_else(|| Error::UndeclaredGenerator(format!("#{g}")))?;
        Ok(gen.apply_coords(self).embed(t)?)
    }

    pub fn galois_by_name(&self, name: &str) -> Result<Self> {
        let idx = self
            .tower
            .as_ref()
            .and_then(|t| t.galois_index(name))
            .ok_or_else(|| Error::UndeclaredGenerator(name.to_string()))?;
        self.galois(idx)
    }

    pub fn div_checked(&self, o: &Self) -> Result<Self> {
        Ok(self.mul(&o.try_inv()?))
    }

    /// A square root inside the element's own tower, when the tower is
    /// built from square roots and the base part is a constant.
    pub fn sqrt_in_tower(&self) -> Option<Self> {
        let Some(t) = &self.tower else {
            return self.as_param()?.sqrt_exact().map(Self::from_param);
        };
        if self.is_base() {
            let r = Self::from_ratfunc(self.coords[0].clone()).sqrt_in_tower_or_parent(t.parent.as_ref())?;
            return r.embed(t).ok();
        }
        let r = self.clone().sqrt_in_tower_or_parent(Some(t))?;
        (r.mul(&r) == *self).then_some(r)
    }

    fn sqrt_in_tower_or_parent(self, t: Option<&Arc<Tower>>) -> Option<Self> {
        let Some(t) = t else {
            return self.as_param()?.sqrt_exact().map(Self::from_param);
        };
        if *t.degrees.last()? != 2 {
            return None;
        }
        let x = self.embed(t).ok()?;
        let pd = t.dim / 2;
        let chunk = |e: usize| FieldElem { tower: t.parent.clone(), coords: x.coords[e * pd..(e + 1) * pd].to_vec() };
        let (a, b) = (chunk(0), chunk(1));
        let k = Self::generator(t, t.names.len() - 1);
        let rad = t.radicands.last()?.clone();
        let up = |y: Self| y.embed(t).ok();
        if b.is_zero() {
            if let Some(r) = a.clone().sqrt_in_tower_or_parent(t.parent.as_ref()) {
                return up(r);
            }
            let r = a.div_checked(&rad).ok()?.sqrt_in_tower_or_parent(t.parent.as_ref())?;
            return Some(up(r)?.mul(&k));
        }
        let n = a.mul(&a).sub(&b.mul(&b).mul(&rad)).sqrt_in_tower_or_parent(t.parent.as_ref())?;
        let half = Self::from_rational(&crate::scalar::rat(1, 2));
        for n in [n.clone(), n.neg()] {
            let u2 = a.add(&n).mul(&half);
            if u2.is_zero() {
                continue;
            }
            if let Some(u) = u2.sqrt_in_tower_or_parent(t.parent.as_ref()) {
                let v = b.mul(&half).div_checked(&u).ok()?;
                return Some(up(u)?.add(&up(v)?.mul(&k)));
            }
        }
        None
    }

    /// Multiplicative inverse; reports zero divisors with a witness.
    pub fn try_inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let Some(t) = &self.tower else {
            return Ok(Self::from_ratfunc(self.coords[0].inv().unwrap()));
        };
        if self.is_base() {
            return Self::from_ratfunc(self.coords[0].inv().unwrap()).embed(t);
        }
        let d = *t.degrees.last().unwrap() as usize;
        let pd = t.dim / d;
        if d == 2 {
            let chunk = |e: usize| FieldElem {
                tower: t.parent.clone(),
                coords: self.coords[e * pd..(e + 1) * pd].to_vec(),
            };
            let (x, y) = (chunk(0), chunk(1));
            let b = t.radicands.last().unwrap();
            let norm = x.mul(&x).sub(&y.mul(&y).mul(b));
            if norm.is_zero() {
                let root = x.div_checked(&y)?;
                return Err(Error::ZeroDivisor { witness: format!("{} = {}", t.names.last().unwrap(), root) });
            }
            let ninv = norm.try_inv()?;
            let mut coords = x.mul(&ninv).coords_in(&t.parent);
            coords.extend(y.neg().mul(&ninv).coords_in(&t.parent));
            return Ok(FieldElem { tower: Some(t.clone()), coords });
        }
        // general degree: solve (multiplication by self) z = 1
        let n = t.dim;
        let mut m = Matrix::<RatS>::zeros(n, n);
        for c in 0..n {
            let col = self.mul(&Self::basis(t, c)).coords_in(&Some(t.clone()));
            for (r, v) in col.into_iter().enumerate() {
                m.set(r, c, v);
            }
        }
        let mut rhs = vec![RatS::zero(); n];
        rhs[0] = RatS::one();
        match m.solve(&rhs) {
            Some(z) => Ok(FieldElem { tower: Some(t.clone()), coords: z }),
            None => {
                let ker = m.nullspace();
                let w = FieldElem { tower: Some(t.clone()), coords: ker[0].clone() };
                Err(Error::ZeroDivisor { witness: format!("({}) * ({}) = 0", self, w) })
            }
        }
    }

    /// Numeric value at `s` with generator values supplied for a prefix.
    fn eval_with<F: Float + FromPrimitive>(&self, s: F, params: &BTreeMap<usize, F>, gens: &[F]) -> Option<F> {
        let mut acc = F::zero();
        for (m, c) in self.coords.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let mut term = eval_ratfunc_num(c, s, params)?;
            if let Some(t) = &self.tower {
                for (i, e) in t.exponents(m).into_iter().enumerate() {
                    if e > 0 {
                        term = term * gens.get(i)?.powi(e as i32);
                    }
                }
            }
            acc = acc + term;
        }
        Some(acc)
    }

    pub fn eval_num<F: Float + FromPrimitive>(&self, s: F, params: &BTreeMap<usize, F>) -> Option<F> {
        let gens = match &self.tower {
            Some(t) => t.numeric_generators(s, params)?,
            None => Vec::new(),
        };
        self.eval_with(s, params, &gens)
    }

    fn eval_exact_with(&self, s0: &ParamScalar, gens: &[ParamScalar]) -> Option<ParamScalar> {
        let mut acc = ParamScalar::zero();
        for (m, c) in self.coords.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let mut term = c.eval(s0)?;
            if let Some(t) = &self.tower {
                for (i, e) in t.exponents(m).into_iter().enumerate() {
                    if e > 0 {
                        term = term.mul(&gens.get(i)?.pow(e));
                    }
                }
            }
            acc = acc.add(&term);
        }
        Some(acc)
    }

    /// Exact value at `s = s0` using principal roots; `None` if a pole is
    /// hit or a radicand value is not a perfect power.
    pub fn eval_exact(&self, s0: &ParamScalar) -> Option<ParamScalar> {
        let gens = match &self.tower {
            Some(t) => t.exact_generators(s0)?,
            None => Vec::new(),
        };
        self.eval_exact_with(s0, &gens)
    }

    /// Apply a map to every parameter-field coefficient (used for
    /// specializing parameters). Radicands are left untouched.
    pub fn map_scalars(&self, f: &dyn Fn(&ParamScalar) -> Option<ParamScalar>) -> Option<Self> {
        let coords = self
            .coords
            .iter()
            .map(|c| {
                let n: Option<Vec<_>> = c.num().coeffs().iter().map(f).collect();
                let d: Option<Vec<_>> = c.den().coeffs().iter().map(f).collect();
                RatS::new(Poly::from_coeffs(n?), Poly::from_coeffs(d?))
            })
            .collect::<Option<Vec<_>>>()?;
        Some(FieldElem { tower: self.tower.clone(), coords })
    }

    /// Trace of multiplication by this element over the base field.
    pub fn trace(&self) -> RatS {
        let Some(t) = &self.tower else {
            return self.coords[0].clone();
        };
        let mut acc = RatS::zero();
        for m in 0..t.dim {
            let prod = self.mul(&Self::basis(t, m)).coords_in(&Some(t.clone()));
            acc = acc.add(&prod[m]);
        }
        acc
    }

    /// Parameters appearing in the coordinates.
    pub fn params(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for c in &self.coords {
            for x in c.num().coeffs().iter().chain(c.den().coeffs()) {
                out.extend(x.params());
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    fn nonzero_terms(&self) -> usize {
        self.coords.iter().filter(|c| !c.is_zero()).count()
    }
}

pub fn eval_ratfunc_num<F: Float + FromPrimitive>(r: &RatS, s: F, params: &BTreeMap<usize, F>) -> Option<F> {
    let ev = |p: &Poly<ParamScalar>| -> Option<F> {
        let mut acc = F::zero();
        for c in p.coeffs().iter().rev() {
            acc = acc * s + c.eval(params)?;
        }
        Some(acc)
    };
    let d = ev(r.den())?;
    if d == F::zero() {
        return None;
    }
    Some(ev(r.num())? / d)
}

impl PartialEq for FieldElem {
    fn eq(&self, o: &Self) -> bool {
        let t = Self::common(self, o);
        self.coords_in(&t) == o.coords_in(&t)
    }
}

// `a + b` or `a - b` outside any parentheses.
fn has_top_level_sum(text: &str) -> bool {
    let mut depth = 0i32;
    let b = text.as_bytes();
    for (i, &ch) in b.iter().enumerate() {
        match ch {
            b'(' => depth += 1,
            b')' => depth -= 1,
            b'+' | b'-' if depth == 0 && i > 0 && b[i - 1] == b' ' => return true,
            _ => {}
        }
    }
    false
}

impl fmt::Display for FieldElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in self.coords.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let mono = self.tower.as_ref().map_or(String::new(), |t| t.monomial_name(m));
            let neg = c.looks_negative();
            let c = if neg { c.neg() } else { c.clone() };
            let body = if mono.is_empty() {
                let text = c.to_string();
                if (self.nonzero_terms() > 1 && c.is_compound() && (c.num().term_count() > 1 || !c.is_polynomial()))
                    || (neg && has_top_level_sum(&text))
                {
                    format!("({text})")
                } else {
                    text
                }
            } else if c.is_one() {
                mono
            } else if c.num().term_count() > 1 || !c.is_polynomial() {
                format!("({c})*{mono}")
            } else {
                format!("{c}*{mono}")
            };
            match (first, neg) {
                (true, false) => write!(f, "{body}")?,
                (true, true) => write!(f, "-{body}")?,
                (false, false) => write!(f, " + {body}")?,
                (false, true) => write!(f, " - {body}")?,
            }
            first = false;
        }
        Ok(())
    }
}

impl Field for FieldElem {
    fn zero() -> Self {
        Self::from_ratfunc(RatS::zero())
    }
    fn one() -> Self {
        Self::from_ratfunc(RatS::one())
    }
    fn is_zero(&self) -> bool {
        self.coords.iter().all(|c| c.is_zero())
    }
    fn is_one(&self) -> bool {
        self.is_base() && self.coords[0].is_one()
    }
    fn add(&self, o: &Self) -> Self {
        let t = Self::common(self, o);
        let a = self.coords_in(&t);
        let b = o.coords_in(&t);
        FieldElem { tower: t, coords: a.iter().zip(&b).map(|(x, y)| x.add(y)).collect() }
    }
    fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }
    fn mul(&self, o: &Self) -> Self {
        if self.tower.is_none() || o.is_base() && o.tower.is_none() {
            let (scalar, other) = if self.tower.is_none() { (&self.coords[0], o) } else { (&o.coords[0], self) };
            return other.scale(scalar);
        }
        if o.tower.is_none() {
            return self.scale(&o.coords[0]);
        }
        let t = Self::common(self, o);
        let tw = t.as_ref().unwrap();
        let a = self.coords_in(&t);
        let b = o.coords_in(&t);
        let mut out = vec![RatS::zero(); tw.dim];
        for (i, x) in a.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.iter().enumerate() {
                if y.is_zero() {
                    continue;
                }
                let xy = x.mul(y);
                for (k, c) in &tw.table[i][j] {
                    let term = if c.is_one() { xy.clone() } else { xy.mul(c) };
                    out[*k] = out[*k].add(&term);
                }
            }
        }
        FieldElem { tower: t, coords: out }
    }
    fn neg(&self) -> Self {
        FieldElem { tower: self.tower.clone(), coords: self.coords.iter().map(|c| c.neg()).collect() }
    }
    fn inv(&self) -> Option<Self> {
        self.try_inv().ok()
    }
    fn from_rational(q: &Rational) -> Self {
        Self::from_ratfunc(RatS::from_rational(q))
    }
    fn as_rational(&self) -> Option<Rational> {
        self.as_ratfunc().and_then(|r| r.as_rational())
    }
    fn is_compound(&self) -> bool {
        match self.nonzero_terms() {
            0 => false,
            1 => {
                let m = self.coords.iter().position(|c| !c.is_zero()).unwrap();
                let c = &self.coords[m];
                if m == 0 {
                    c.is_compound()
                } else {
                    !c.is_one()
                }
            }
            _ => true,
        }
    }
    fn looks_negative(&self) -> bool {
        self.coords.iter().find(|c| !c.is_zero()).is_some_and(|c| c.looks_negative())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly_s(c: &[i64]) -> FieldElem {
        FieldElem::from_ratfunc(RatS::from_poly(Poly::from_coeffs(c.iter().map(|&x| ParamScalar::from_i64(x)).collect())))
    }

    #[test]
    fn quadratic_tower() {
        let t = Tower::extend(None, "w", 2, &poly_s(&[1, 0, 1])).unwrap();
        let w = FieldElem::generator(&t, 0);
        assert_eq!(w.mul(&w), poly_s(&[1, 0, 1]));
        let s = FieldElem::s();
        // (s + w)(s - w) = -1
        assert_eq!(s.add(&w).mul(&s.sub(&w)), FieldElem::from_i64(-1));
        // w' = s / w
        assert_eq!(w.derive(), s.div_checked(&w).unwrap());
        let x = s.add(&w).add(&FieldElem::from_i64(3));
        assert!(x.mul(&x.try_inv().unwrap()).is_one());
    }

    #[test]
    fn nested_and_cubic() {
        let t1 = Tower::extend(None, "w1", 2, &poly_s(&[1, 0, 1])).unwrap();
        let w1 = FieldElem::generator(&t1, 0);
        let t2 = Tower::extend(Some(&t1), "w2", 2, &w1).unwrap();
        let w2 = FieldElem::generator(&t2, 1);
        assert_eq!(w2.mul(&w2).mul(&w2).mul(&w2), poly_s(&[1, 0, 1]));
        // ((1+s^2)^{1/4})' = s w2 / (2(1+s^2))
        let expect = FieldElem::s().mul(&w2).div_checked(&poly_s(&[2, 0, 2])).unwrap();
        assert_eq!(w2.derive(), expect);
        let c = Tower::extend(None, "r", 3, &poly_s(&[0, 1])).unwrap();
        let r = FieldElem::generator(&c, 0);
        let x = r.add(&FieldElem::one());
        assert!(x.mul(&x.try_inv().unwrap()).is_one());
    }

    #[test]
    fn zero_divisor_reported() {
        let t = Tower::extend(None, "w", 2, &poly_s(&[0, 0, 1])).unwrap();
        let w = FieldElem::generator(&t, 0);
        let x = w.sub(&FieldElem::s());
        assert!(matches!(x.try_inv(), Err(Error::ZeroDivisor { .. })));
    }

    #[test]
    fn galois_generators() {
        let t = Tower::extend(None, "w", 2, &poly_s(&[1, 0, 1])).unwrap();
        let w = FieldElem::generator(&t, 0);
        let g = t.with_galois(vec![("g".into(), vec![w.neg()])]).unwrap();
        let w = FieldElem::generator(&g, 0);
        let x = FieldElem::s().add(&w);
        assert_eq!(x.galois(0).unwrap(), FieldElem::s().sub(&w));
        assert_eq!(x.galois(0).unwrap().derive(), x.derive().galois(0).unwrap());
        // w -> 2w is not an automorphism
        assert!(t.with_galois(vec![("bad".into(), vec![w.add(&w)])]).is_err());
        assert!(x.galois(3).is_err());
    }

    #[test]
    fn printing() {
        let t = Tower::extend(None, "w", 2, &poly_s(&[1, 0, 1])).unwrap();
        let w = FieldElem::generator(&t, 0);
        let x = FieldElem::s().sub(&w.mul(&poly_s(&[0, 2])));
        assert_eq!(x.to_string(), "s - 2*s*w");
        assert_eq!(w.neg().to_string(), "-w");
    }
}
