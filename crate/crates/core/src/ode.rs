//! Rational solutions of `y' + delta*y = g` over a radical tower,
//! log-derivative witnesses and integration with logarithmic parts.
//!
//! Over `K(s)` the local pole bounds and the degree bound at infinity are
//! exact, so a failed search is a proof of non-existence. When `delta`
//! lies below the top generator the problem decouples per power of that
//! generator. Otherwise the flattened system is searched within
//! configured bounds and failure is reported as inconclusive.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::param::ParamScalar;
use crate::poly::Poly;
use crate::scalar::{integer_roots, rational_roots, Field, Rational};
use crate::tower::{FieldElem, RatS, Tower};

pub type PolyS = Poly<ParamScalar>;

/// Extra room given to the searches that have no exact bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SolverBounds {
    pub pole_extra: u32,
    pub degree_extra: u32,
}

impl Default for SolverBounds {
    fn default() -> Self {
        SolverBounds { pole_extra: 2, degree_extra: 4 }
    }
}

#[derive(Clone, Debug)]
pub struct OdeSolution {
    pub particular: Option<FieldElem>,
    pub kernel: Vec<FieldElem>,
    /// `particular == None` is a proof that no solution exists.
    pub proven_none: bool,
    /// `kernel` spans every homogeneous solution in the tower.
    pub kernel_complete: bool,
}

struct Sol {
    particular: Option<Vec<RatS>>,
    kernel: Vec<Vec<RatS>>,
    proven_none: bool,
    kernel_complete: bool,
}

fn is_rational_poly(p: &PolyS) -> Option<Vec<Rational>> {
    p.coeffs().iter().map(|c| c.as_rational()).collect()
}

fn from_rational_poly(c: &[Rational]) -> PolyS {
    Poly::from_coeffs(c.iter().map(ParamScalar::from_rational).collect())
}

fn linear(root: &Rational) -> PolyS {
    Poly::from_coeffs(vec![ParamScalar::from_rational(&-root.clone()), ParamScalar::one()])
}

fn split_rational_roots(f: PolyS) -> Vec<PolyS> {
    let mut out = Vec::new();
    let mut rest = f.monic();
    if rest.degree().unwrap_or(0) >= 2 {
        if let Some(c) = is_rational_poly(&rest) {
            for r in rational_roots(&c).unwrap_or_default() {
                let l = linear(&r);
                if let Some(q) = rest.exact_div(&l) {
                    rest = q;
                    out.push(l);
                }
            }
        }
    }
    if rest.degree().unwrap_or(0) > 0 {
        out.push(rest);
    }
    out
}

/// Pairwise coprime monic square-free factors covering the given
/// polynomials; rational roots of rational polynomials are split off.
pub fn coprime_factors(polys: &[PolyS]) -> Vec<PolyS> {
    let mut base: Vec<PolyS> = Vec::new();
    for p in polys {
        if p.is_zero() {
            continue;
        }
        for (f, _) in p.squarefree() {
            let mut pending = vec![f];
            while let Some(f) = pending.pop() {
                if f.degree().unwrap_or(0) == 0 {
                    continue;
                }
                let hit = base.iter().position(|b| b.gcd(&f).degree().unwrap_or(0) > 0);
                match hit {
                    Some(i) => {
                        let b = base.swap_remove(i);
                        let g = b.gcd(&f).monic();
                        if g == b.monic() && g == f.monic() {
                            base.push(g);
                            continue;
                        }
                        pending.push(b.exact_div(&g).unwrap());
                        pending.push(f.exact_div(&g).unwrap());
                        pending.push(g);
                    }
                    None => base.push(f.monic()),
                }
            }
        }
    }
    let mut out: Vec<PolyS> = base.into_iter().flat_map(split_rational_roots).collect();
    out.sort_by_key(|p| p.to_string());
    out
}

/// Residue function `a / (p' * b1) mod p` of `a/(p*b1)` at the roots of `p`.
pub fn residue_mod(a: &PolyS, den: &PolyS, p: &PolyS) -> Option<PolyS> {
    let b1 = den.exact_div(p)?;
    let d = p.derivative().mul(&b1).rem(p);
    Some(a.mul(&d.inv_mod(p)?).rem(p))
}

// Characteristic polynomial (low degree first) of a rational matrix,
// Faddeev-LeVerrier.
fn charpoly(m: &Matrix<Rational>) -> Vec<Rational> {
    let n = m.rows;
    let mut c = vec![Rational::zero(); n + 1];
    c[n] = Rational::one();
    let mut mk = Matrix::<Rational>::zeros(n, n);
    for k in 1..=n {
        let mut next = m.mul(&mk);
        for i in 0..n {
            let v = next.get(i, i).add(&c[n - k + 1]);
            next.set(i, i, v);
        }
        mk = next;
        let prod = m.mul(&mk);
        let mut tr = Rational::zero();
        for i in 0..n {
            tr = tr.add(prod.get(i, i));
        }
        c[n - k] = tr.neg().mul(&Rational::from_integer((k as i64).into()).inv().unwrap());
    }
    c
}

/// Integer values taken by the residue function at the roots of `p`.
/// `None` when this cannot be decided.
fn integer_residues(p: &PolyS, r: &PolyS) -> Option<Vec<i64>> {
    if r.degree().unwrap_or(0) == 0 {
        let c = r.coeff(0);
        return Some(match c.as_rational() {
            Some(q) if q.is_integer() => vec![q.to_integer().try_into().ok()?],
            // non-rational residues depend on a transcendental parameter
            _ => Vec::new(),
        });
    }
    let pc = is_rational_poly(p)?;
    let rc = is_rational_poly(r)?;
    let n = pc.len() - 1;
    let pq = from_rational_poly(&pc);
    let rq = from_rational_poly(&rc);
    let mut m = Matrix::<Rational>::zeros(n, n);
    for k in 0..n {
        let img = rq.mul(&Poly::monomial(ParamScalar::one(), k)).rem(&pq);
        for i in 0..n {
            m.set(i, k, img.coeff(i).as_rational()?);
        }
    }
    integer_roots(&charpoly(&m), 1_000_000)
}

fn poly_pow(p: &PolyS, e: u32) -> PolyS {
    p.pow(e)
}

fn int_deg(r: &RatS) -> Option<i64> {
    r.degree_at_infinity()
}

// Exact search over K(s).
fn solve_base(delta: &RatS, g: &RatS) -> Sol {
    let mut dens = vec![];
    if !delta.is_zero() {
        dens.push(delta.den().clone());
    }
    if !g.is_zero() {
        dens.push(g.den().clone());
    }
    let factors = coprime_factors(&dens);
    let mut complete = true;
    let mut d = PolyS::one();
    for p in &factors {
        let ed = if delta.is_zero() { 0 } else { delta.den().multiplicity(p) };
        let eg = if g.is_zero() { 0 } else { g.den().multiplicity(p) };
        let base = eg.saturating_sub(1);
        let nu = match ed {
            0 => base,
            1 => match residue_mod(delta.num(), delta.den(), p).and_then(|r| integer_residues(p, &r)) {
                Some(v) => v.into_iter().filter(|&k| k > 0).map(|k| k as u32).fold(base, u32::max),
                None => {
                    complete = false;
                    base + SolverBounds::default().pole_extra
                }
            },
            _ => eg.saturating_sub(ed),
        };
        if nu > 0 {
            d = d.mul(&poly_pow(p, nu));
        }
    }
    let gdeg = if g.is_zero() { None } else { int_deg(g) };
    let mu: Option<i64> = if delta.is_zero() || int_deg(delta).unwrap() <= -2 {
        Some(gdeg.map_or(0, |x| (x + 1).max(0)))
    } else if int_deg(delta).unwrap() == -1 {
        let rinf = delta.num().lc().div(&delta.den().lc()).unwrap();
        let from_res = rinf.as_rational().filter(|q| q.is_integer()).map(|q| -q.to_integer().try_into().unwrap_or(0i64));
        match (gdeg.map(|x| x + 1), from_res) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        }
    } else {
        gdeg.map(|x| x - int_deg(delta).unwrap())
    };
    let n = mu.map(|m| m + d.degree().unwrap() as i64);
    let Some(n) = n.filter(|&n| n >= 0) else {
        let particular = if g.is_zero() { Some(vec![RatS::zero()]) } else { None };
        let proven_none = particular.is_none() && complete;
        return Sol { particular, kernel: Vec::new(), proven_none, kernel_complete: complete };
    };
    let n = n as usize;
    let (a, b) = (delta.num().clone(), delta.den().clone());
    let (c, e) = if g.is_zero() { (PolyS::zero(), PolyS::one()) } else { (g.num().clone(), g.den().clone()) };
    let dd = d.derivative();
    let be = b.mul(&e);
    let ae_d = a.mul(&e).mul(&d);
    let mut cols = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let sk = Poly::monomial(ParamScalar::one(), k);
        let dsk = if k == 0 {
            PolyS::zero()
        } else {
            Poly::monomial(ParamScalar::from_i64(k as i64), k - 1)
        };
        let col = dsk.mul(&d).sub(&sk.mul(&dd)).mul(&be).add(&ae_d.mul(&sk));
        cols.push(col);
    }
    let rhs = c.mul(&b).mul(&d).mul(&d);
    let rows = cols.iter().chain(std::iter::once(&rhs)).filter_map(|p| p.degree()).max().unwrap_or(0) + 1;
    let mut m = Matrix::<ParamScalar>::zeros(rows, n + 1);
    for (k, col) in cols.iter().enumerate() {
        for (i, x) in col.coeffs().iter().enumerate() {
            m.set(i, k, x.clone());
        }
    }
    let rv: Vec<ParamScalar> = (0..rows).map(|i| rhs.coeff(i)).collect();
    let to_rat = |v: Vec<ParamScalar>| RatS::new(Poly::from_coeffs(v), d.clone()).unwrap();
    let particular = m.solve(&rv).map(|x| vec![to_rat(x)]);
    let kernel: Vec<Vec<RatS>> = m.nullspace().into_iter().map(|x| vec![to_rat(x)]).collect();
    let proven_none = particular.is_none() && complete;
    Sol { particular, kernel, proven_none, kernel_complete: complete }
}

fn tower_dim(t: Option<&Arc<Tower>>) -> usize {
    t.map_or(1, |t| t.dim())
}

fn elem(t: Option<&Arc<Tower>>, c: &[RatS]) -> FieldElem {
    FieldElem::from_coords(t, c.to_vec())
}

fn solve_tower(t: Option<&Arc<Tower>>, delta: &[RatS], g: &[RatS], bounds: &SolverBounds) -> Sol {
    let Some(tw) = t else {
        return solve_base(&delta[0], &g[0]);
    };
    let top = tw.names().len() - 1;
    let d = tw.degrees()[top] as usize;
    let parent = tw.parent();
    let dp = tower_dim(parent);
    if delta[dp..].iter().all(|c| c.is_zero()) {
        let ell = tw.log_derivative(top);
        let ell = &ell.coords()[..dp];
        let mut particular = Some(Vec::with_capacity(tw.dim()));
        let mut kernel = Vec::new();
        let mut proven_none = false;
        let mut kernel_complete = true;
        for e in 0..d {
            let de: Vec<RatS> = (0..dp).map(|i| delta[i].add(&ell[i].scale(&ParamScalar::from_i64(e as i64)))).collect();
            let sub = solve_tower(parent, &de, &g[e * dp..(e + 1) * dp], bounds);
            match (&mut particular, sub.particular) {
                (Some(acc), Some(p)) => acc.extend(p),
                _ => particular = None,
            }
            proven_none |= sub.proven_none;
            kernel_complete &= sub.kernel_complete;
            for k in sub.kernel {
                let mut full = vec![RatS::zero(); tw.dim()];
                full[e * dp..(e + 1) * dp].clone_from_slice(&k);
                kernel.push(full);
            }
        }
        return Sol { particular, kernel, proven_none: proven_none && true, kernel_complete };
    }
    solve_coupled(tw, delta, g, bounds)
}

fn solve_coupled(t: &Arc<Tower>, delta: &[RatS], g: &[RatS], bounds: &SolverBounds) -> Sol {
    let n = t.dim();
    let homogeneous = g.iter().all(|c| c.is_zero());
    let de = elem(Some(t), delta);
    if homogeneous {
        // norm argument: y'/y = -delta forces N(y)'/N(y) = -Tr(delta)
        let tr = de.trace();
        let s = solve_base(&tr, &RatS::zero());
        if s.kernel_complete && s.kernel.is_empty() {
            return Sol { particular: Some(vec![RatS::zero(); n]), kernel: Vec::new(), proven_none: false, kernel_complete: true };
        }
    }
    let mut a = vec![vec![RatS::zero(); n]; n];
    for m in 0..n {
        let b = FieldElem::basis(t, m);
        let col = b.derive().add(&de.mul(&b)).embed(t).unwrap();
        for k in 0..n {
            a[k][m] = col.coords()[k].clone();
        }
    }
    let mut dens: Vec<PolyS> = a.iter().flatten().filter(|x| !x.is_zero()).map(|x| x.den().clone()).collect();
    dens.extend(g.iter().filter(|x| !x.is_zero()).map(|x| x.den().clone()));
    let factors = coprime_factors(&dens);
    let mut d = PolyS::one();
    let mut l = PolyS::one();
    for p in &factors {
        let ea = a.iter().flatten().filter(|x| !x.is_zero()).map(|x| x.den().multiplicity(p)).max().unwrap_or(0);
        let eg = g.iter().filter(|x| !x.is_zero()).map(|x| x.den().multiplicity(p)).max().unwrap_or(0);
        d = d.mul(&p.pow(eg + ea + bounds.pole_extra));
        l = l.mul(&p.pow(eg.max(ea)));
    }
    let gdeg = g.iter().filter(|x| !x.is_zero()).filter_map(int_deg).max();
    let nmax = d.degree().unwrap() as i64 + gdeg.map_or(0, |x| (x + 1).max(0)) + bounds.degree_extra as i64;
    let nmax = nmax.max(0) as usize;
    let dd = d.derivative();
    let times_l = |r: &RatS| r.num().mul(&l.exact_div(r.den()).unwrap());
    let la: Vec<Vec<PolyS>> = a.iter().map(|row| row.iter().map(times_l).collect()).collect();
    let unknowns = n * (nmax + 1);
    let mut eqs: Vec<Vec<PolyS>> = vec![vec![PolyS::zero(); unknowns]; n];
    let mut rhs: Vec<PolyS> = Vec::with_capacity(n);
    for k in 0..n {
        for m in 0..n {
            for j in 0..=nmax {
                let sj = Poly::monomial(ParamScalar::one(), j);
                let mut p = la[k][m].mul(&d).mul(&sj);
                if m == k {
                    let dsj = if j == 0 { PolyS::zero() } else { Poly::monomial(ParamScalar::from_i64(j as i64), j - 1) };
                    p = p.add(&dsj.mul(&d).sub(&sj.mul(&dd)).mul(&l));
                }
                eqs[k][m * (nmax + 1) + j] = p;
            }
        }
        rhs.push(times_l(&g[k]).mul(&d).mul(&d));
    }
    let deg = eqs.iter().flatten().chain(rhs.iter()).filter_map(|p| p.degree()).max().unwrap_or(0) + 1;
    let mut mat = Matrix::<ParamScalar>::zeros(n * deg, unknowns);
    let mut rv = vec![ParamScalar::zero(); n * deg];
    for k in 0..n {
        for (u, p) in eqs[k].iter().enumerate() {
            for (i, x) in p.coeffs().iter().enumerate() {
                mat.set(k * deg + i, u, x.clone());
            }
        }
        for (i, x) in rhs[k].coeffs().iter().enumerate() {
            rv[k * deg + i] = x.clone();
        }
    }
    let unpack = |x: Vec<ParamScalar>| -> Vec<RatS> {
        (0..n)
            .map(|m| RatS::new(Poly::from_coeffs(x[m * (nmax + 1)..(m + 1) * (nmax + 1)].to_vec()), d.clone()).unwrap())
            .collect()
    };
    let particular = mat.solve(&rv).map(unpack);
    let kernel = mat.nullspace().into_iter().map(unpack).collect();
    Sol { particular, kernel, proven_none: false, kernel_complete: false }
}

fn align(a: &FieldElem, b: &FieldElem) -> Result<(Option<Arc<Tower>>, FieldElem, FieldElem)> {
    let t = match (a.tower(), b.tower()) {
        (None, None) => None,
        (Some(t), None) | (None, Some(t)) => Some(t.clone()),
        (Some(x), Some(y)) => Some(if x.dim() >= y.dim() { x.clone() } else { y.clone() }),
    };
    match &t {
        Some(t) => Ok((Some(t.clone()), a.embed(t)?, b.embed(t)?)),
        None => Ok((None, a.clone(), b.clone())),
    }
}

/// All rational solutions of `y' + delta*y = g` found within `bounds`.
pub fn solve_linear_ode(delta: &FieldElem, g: &FieldElem, bounds: &SolverBounds) -> Result<OdeSolution> {
    let (t, de, ge) = align(delta, g)?;
    let sol = solve_tower(t.as_ref(), de.coords(), ge.coords(), bounds);
    let wrap = |c: Vec<RatS>| FieldElem::from_coords(t.as_ref(), c);
    Ok(OdeSolution {
        particular: sol.particular.map(wrap),
        kernel: sol.kernel.into_iter().map(wrap).collect(),
        proven_none: sol.proven_none,
        kernel_complete: sol.kernel_complete,
    })
}

/// One solution `y` of `y' + delta*y = g` in the tower.
pub fn rational_ode_solve(delta: &FieldElem, g: &FieldElem) -> Result<FieldElem> {
    rational_ode_solve_with(delta, g, &SolverBounds::default())
}

pub fn rational_ode_solve_with(delta: &FieldElem, g: &FieldElem, bounds: &SolverBounds) -> Result<FieldElem> {
    let sol = solve_linear_ode(delta, g, bounds)?;
    match sol.particular {
        Some(y) => Ok(y),
        None if sol.proven_none => Err(Error::NoSolution),
        None => Err(Error::DegreeBoundExceeded(format!("y' + ({delta})*y = {g}"))),
    }
}

fn radicands_parameter_free(t: Option<&Arc<Tower>>) -> bool {
    t.is_none_or(|t| (0..t.names().len()).all(|i| t.radicand(i).params().is_empty()))
}

/// A nonzero `y` with `y'/y = delta`, `Ok(None)` when provably none exists.
///
/// If `delta` depends on a parameter (treated as transcendental) no such
/// `y` exists: shifting the parameter by a rational `e` would give an
/// algebraic `z` with `z'/z = delta(a+e) - delta(a)`, whose residues
/// cannot all be rational multiples bounded by the ramification for
/// every `e` unless the difference vanishes.
pub fn log_derivative_witness(delta: &FieldElem) -> Result<Option<FieldElem>> {
    log_derivative_witness_with(delta, &SolverBounds::default())
}

pub fn log_derivative_witness_with(delta: &FieldElem, bounds: &SolverBounds) -> Result<Option<FieldElem>> {
    if delta.is_zero() {
        return Ok(Some(FieldElem::one()));
    }
    if !delta.params().is_empty() && radicands_parameter_free(delta.tower()) {
        return Ok(None);
    }
    let sol = solve_linear_ode(&delta.neg(), &FieldElem::zero(), bounds)?;
    if let Some(y) = sol.kernel.into_iter().next() {
        return Ok(Some(y));
    }
    if sol.kernel_complete {
        Ok(None)
    } else {
        Err(Error::DegreeBoundExceeded(format!("log-derivative {delta}")))
    }
}

/// Argument of a logarithmic symbol.
#[derive(Clone, Debug, PartialEq)]
pub enum LogArg {
    /// `ln(arg)`.
    Elem(FieldElem),
    /// An antiderivative that is not written in closed form; the stored
    /// element is its derivative.
    Opaque(FieldElem),
}

impl LogArg {
    pub fn derivative(&self) -> Result<FieldElem> {
        match self {
            LogArg::Elem(a) => a.derive().div_checked(a),
            LogArg::Opaque(d) => Ok(d.clone()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Integral {
    pub rational: FieldElem,
    pub logs: Vec<(FieldElem, LogArg)>,
}

impl Integral {
    pub fn derivative(&self) -> Result<FieldElem> {
        let mut acc = self.rational.derive();
        for (c, l) in &self.logs {
            acc = acc.add(&c.mul(&l.derivative()?));
        }
        Ok(acc)
    }
}

fn integrate_poly(p: &PolyS) -> PolyS {
    let mut c = vec![ParamScalar::zero()];
    for (k, x) in p.coeffs().iter().enumerate() {
        c.push(x.mul(&ParamScalar::from_i64(k as i64 + 1).inv().unwrap()));
    }
    Poly::from_coeffs(c)
}

/// Horowitz-Ostrogradsky reduction plus logarithms over `K(s)`.
pub fn integrate_ratfunc(r: &RatS) -> Result<(RatS, Vec<(ParamScalar, PolyS)>)> {
    if r.is_zero() {
        return Ok((RatS::zero(), Vec::new()));
    }
    let den = r.den().clone();
    let (q, a) = r.num().div_rem(&den);
    let mut rational = RatS::from_poly(integrate_poly(&q));
    if a.is_zero() {
        return Ok((rational, Vec::new()));
    }
    let dm = den.gcd(&den.derivative()).monic();
    let ds = den.exact_div(&dm).unwrap();
    let (nb, nc) = (dm.degree().unwrap(), ds.degree().unwrap());
    let h = ds.mul(&dm.derivative()).exact_div(&dm).unwrap();
    // A = B' D* - B H + C D-, deg B < deg D-, deg C < deg D*
    let mut cols: Vec<PolyS> = Vec::new();
    for k in 0..nb {
        let sk = Poly::monomial(ParamScalar::one(), k);
        let dsk = if k == 0 { PolyS::zero() } else { Poly::monomial(ParamScalar::from_i64(k as i64), k - 1) };
        cols.push(dsk.mul(&ds).sub(&sk.mul(&h)));
    }
    for k in 0..nc {
        cols.push(Poly::monomial(ParamScalar::one(), k).mul(&dm));
    }
    let rows = den.degree().unwrap().max(1);
    let mut m = Matrix::<ParamScalar>::zeros(rows, nb + nc);
    for (j, col) in cols.iter().enumerate() {
        for (i, x) in col.coeffs().iter().enumerate() {
            m.set(i, j, x.clone());
        }
    }
    let rv: Vec<ParamScalar> = (0..rows).map(|i| a.coeff(i)).collect();
    let x = m.solve(&rv).ok_or_else(|| Error::IntegrationIncomplete("Hermite system".into()))?;
    let b = Poly::from_coeffs(x[..nb].to_vec());
    let c = Poly::from_coeffs(x[nb..].to_vec());
    rational = rational.add(&RatS::new(b, dm).unwrap());
    let mut logs: Vec<(ParamScalar, PolyS)> = Vec::new();
    if !c.is_zero() {
        for p in coprime_factors(&[ds.clone()]) {
            let res = residue_mod(&c, &ds, &p).ok_or_else(|| Error::IntegrationIncomplete(format!("residue at {p}")))?;
            if res.degree().unwrap_or(0) > 0 {
                return Err(Error::IntegrationIncomplete(format!("non-constant residue at the roots of {p}")));
            }
            let res = res.coeff(0);
            if res.is_zero() {
                continue;
            }
            match logs.iter_mut().find(|(r, _)| *r == res) {
                Some(entry) => entry.1 = entry.1.mul(&p),
                None => logs.push((res, p)),
            }
        }
    }
    Ok((rational, logs))
}

fn integrate_in(t: Option<&Arc<Tower>>, a: &[RatS], out: &mut Vec<(FieldElem, LogArg)>) -> Result<Vec<RatS>> {
    let Some(tw) = t else {
        let (r, logs) = integrate_ratfunc(&a[0])?;
        for (c, p) in logs {
            out.push((FieldElem::from_param(c), LogArg::Elem(FieldElem::from_ratfunc(RatS::from_poly(p)))));
        }
        return Ok(vec![r]);
    };
    let top = tw.names().len() - 1;
    let d = tw.degrees()[top] as usize;
    let parent = tw.parent();
    let dp = tower_dim(parent);
    let ell = tw.log_derivative(top);
    let ell = &ell.coords()[..dp];
    let mut coords = integrate_in(parent, &a[..dp], out)?;
    for e in 1..d {
        let ge = &a[e * dp..(e + 1) * dp];
        if ge.iter().all(|c| c.is_zero()) {
            coords.extend(std::iter::repeat_n(RatS::zero(), dp));
            continue;
        }
        let de: Vec<RatS> = ell.iter().map(|x| x.scale(&ParamScalar::from_i64(e as i64))).collect();
        let sol = solve_tower(parent, &de, ge, &SolverBounds::default());
        match sol.particular {
            Some(y) => coords.extend(y),
            None => {
                let mut full = vec![RatS::zero(); tw.dim()];
                full[e * dp..(e + 1) * dp].clone_from_slice(ge);
                out.push((FieldElem::one(), LogArg::Opaque(FieldElem::from_coords(Some(tw), full))));
                coords.extend(std::iter::repeat_n(RatS::zero(), dp));
            }
        }
    }
    Ok(coords)
}

/// Antiderivative as a rational part plus logarithmic symbols.
pub fn fe_integrate_rational(a: &FieldElem) -> Result<Integral> {
    let mut logs = Vec::new();
    let coords = integrate_in(a.tower(), a.coords(), &mut logs)?;
    let rational = FieldElem::from_coords(a.tower(), coords);
    Ok(Integral { rational, logs })
}
