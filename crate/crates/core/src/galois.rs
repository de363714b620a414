//! Resonances among the hyperexponential basis, the lattice of
//! multiplicative relations, a bounded small-divisor evaluator and the
//! local resonance test at ramified places.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{Float, FromPrimitive};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::ode::{log_derivative_witness_with, PolyS, SolverBounds};
use crate::param::ParamScalar;
use crate::ratfunc::RatFunc;
use crate::scalar::{Field, Rational};
use crate::tower::FieldElem;

#[derive(Clone, Debug, PartialEq)]
pub enum Resonance {
    /// `y'/y = sum k_l h_l - h_j`.
    Resonant(FieldElem),
    NonResonant,
}

/// `sum k_l h_l - h_j` (with `j = None` for the plain product `H^k`).
pub fn combination(h: &[FieldElem], j: Option<usize>, k: &[i64]) -> FieldElem {
    let mut d = FieldElem::zero();
    for (hl, &kl) in h.iter().zip(k) {
        if kl != 0 {
            d = d.add(&hl.mul(&FieldElem::from_i64(kl)));
        }
    }
    if let Some(j) = j {
        d = d.sub(&h[j]);
    }
    d
}

/// Decides whether `H^k / H_j` lies in the coefficient field.
pub fn resonance_test(h: &[FieldElem], j: usize, k: &[u32]) -> Result<Resonance> {
    resonance_test_with(h, j, k, &SolverBounds::default())
}

pub fn resonance_test_with(h: &[FieldElem], j: usize, k: &[u32], bounds: &SolverBounds) -> Result<Resonance> {
    if k.len() != h.len() || j >= h.len() {
        return Err(Error::Input("resonance query has the wrong length".into()));
    }
    if k.iter().sum::<u32>() < 2 {
        return Err(Error::Input("resonance queries need |k| >= 2".into()));
    }
    let ki: Vec<i64> = k.iter().map(|&x| x as i64).collect();
    let delta = combination(h, Some(j), &ki);
    match log_derivative_witness_with(&delta, bounds)? {
        Some(y) => Ok(Resonance::Resonant(y)),
        None => Ok(Resonance::NonResonant),
    }
}

/// A relation `prod H_l^{k_l} = y` up to a constant.
#[derive(Clone, Debug, PartialEq)]
pub struct Relation {
    pub k: Vec<i64>,
    pub witness: FieldElem,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResonanceReport {
    pub k_max: usize,
    /// Hermite normal form rows.
    pub basis: Vec<Relation>,
    pub rank: usize,
    /// Candidates on which the witness solver gave up.
    pub inconclusive: Vec<Vec<i64>>,
    pub candidates_tested: usize,
}

impl ResonanceReport {
    pub fn nvars(&self) -> usize {
        self.basis.first().map_or(0, |r| r.k.len())
    }

    /// Dimension `l` of the commuting family suggested by the lattice.
    pub fn l_candidate(&self, n_minus_1: usize) -> usize {
        n_minus_1 - self.rank + 1
    }

    /// Integer coordinates of `k` in the HNF basis, if `k` is in the lattice.
    pub fn coordinates(&self, k: &[i64]) -> Option<Vec<i64>> {
        let mut rest = k.to_vec();
        let mut coords = Vec::with_capacity(self.basis.len());
        for row in &self.basis {
            let piv = row.k.iter().position(|&x| x != 0)?;
            if rest[..piv].iter().any(|&x| x != 0) {
                return None;
            }
            if rest[piv] % row.k[piv] != 0 {
                return None;
            }
            let c = rest[piv] / row.k[piv];
            for (r, b) in rest.iter_mut().zip(&row.k) {
                *r -= c * b;
            }
            coords.push(c);
        }
        rest.iter().all(|&x| x == 0).then_some(coords)
    }

    pub fn contains(&self, k: &[i64]) -> bool {
        self.coordinates(k).is_some()
    }

    /// Witness for any lattice element, built from the basis witnesses.
    pub fn witness_for(&self, k: &[i64]) -> Result<Option<FieldElem>> {
        let Some(c) = self.coordinates(k) else {
            return Ok(None);
        };
        let mut y = FieldElem::one();
        for (ci, row) in c.iter().zip(&self.basis) {
            y = y.mul(&signed_pow(&row.witness, *ci)?);
        }
        Ok(Some(y))
    }
}

impl fmt::Display for ResonanceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "relation lattice (|k| <= {}): rank {}", self.k_max, self.rank)?;
        for r in &self.basis {
            let k: Vec<String> = r.k.iter().map(|x| x.to_string()).collect();
            writeln!(f, "  k = ({}), witness {}", k.join(","), r.witness)?;
        }
        if !self.inconclusive.is_empty() {
            writeln!(f, "  inconclusive candidates: {}", self.inconclusive.len())?;
        }
        Ok(())
    }
}

fn signed_pow(y: &FieldElem, e: i64) -> Result<FieldElem> {
    if e >= 0 {
        Ok(y.pow(e as u32))
    } else {
        Ok(y.try_inv()?.pow((-e) as u32))
    }
}

// Coefficient of parameter `p` (or the constant part when `p` is None)
// in an element affine in the parameters with parameter-free denominators.
fn affine_component(x: &FieldElem, p: Option<usize>) -> Option<FieldElem> {
    let mut coords = Vec::with_capacity(x.coords().len());
    for c in x.coords() {
        if c.den().coeffs().iter().any(|d| !d.is_rational()) {
            return None;
        }
        let mut num = Vec::with_capacity(c.num().coeffs().len());
        for a in c.num().coeffs() {
            let (c0, m) = a.affine_parts()?;
            let v = match p {
                None => c0,
                Some(p) => m.get(&p).cloned().unwrap_or_else(Rational::zero),
            };
            num.push(ParamScalar::from_rational(&v));
        }
        coords.push(RatFunc::new(PolyS::from_coeffs(num), c.den().clone())?);
    }
    Some(FieldElem::from_coords(x.tower(), coords))
}

/// Rational linear constraints on `k` forced by the parameter parts of the
/// `h_l`: the parameter part of `sum k_l h_l` must vanish for a relation
/// with parameter-free radicands. `None` when the split is not available.
fn parameter_constraints(h: &[FieldElem]) -> Option<Matrix<Rational>> {
    let mut params: Vec<usize> = h.iter().flat_map(|x| x.params()).collect();
    params.sort();
    params.dedup();
    if params.is_empty() {
        return None;
    }
    let dim = h.iter().map(|x| x.coords().len()).max()?;
    let mut rows: Vec<Vec<Rational>> = Vec::new();
    for &p in &params {
        let parts: Vec<FieldElem> = h.iter().map(|x| affine_component(x, Some(p))).collect::<Option<_>>()?;
        for m in 0..dim {
            let cs: Vec<RatFunc<ParamScalar>> =
                parts.iter().map(|x| x.coords().get(m).cloned().unwrap_or_else(RatFunc::zero)).collect();
            let mut l = PolyS::one();
            for c in &cs {
                let g = l.gcd(c.den());
                l = l.mul(&c.den().exact_div(&g)?);
            }
            let nums: Vec<PolyS> = cs.iter().map(|c| Some(c.num().mul(&l.exact_div(c.den())?))).collect::<Option<_>>()?;
            let deg = nums.iter().filter_map(|n| n.degree()).max();
            let Some(deg) = deg else { continue };
            for e in 0..=deg {
                rows.push(nums.iter().map(|n| n.coeff(e).as_rational()).collect::<Option<_>>()?);
            }
        }
    }
    if rows.is_empty() {
        return None;
    }
    Some(Matrix::from_rows(rows))
}

fn passes(m: &Option<Matrix<Rational>>, k: &[i64]) -> bool {
    match m {
        None => true,
        Some(m) => (0..m.rows).all(|r| {
            let mut acc = Rational::zero();
            for (c, &kc) in m.row(r).iter().zip(k) {
                if kc != 0 && !c.is_zero() {
                    acc = acc.add(&c.mul(&Rational::from_integer(kc.into())));
                }
            }
            acc.is_zero()
        }),
    }
}

/// All relations `prod H^k` in the field with `|k|_inf <= k_max`, reduced
/// to Hermite normal form.
pub fn relation_lattice(h: &[FieldElem], k_max: usize) -> Result<ResonanceReport> {
    relation_lattice_with(h, k_max, &SolverBounds::default())
}

pub fn relation_lattice_with(h: &[FieldElem], k_max: usize, bounds: &SolverBounds) -> Result<ResonanceReport> {
    if k_max == 0 {
        return Err(Error::Input("K_max must be at least 1".into()));
    }
    let n = h.len();
    let constraints = parameter_constraints(h);
    let km = k_max as i64;
    let mut found: Vec<Relation> = Vec::new();
    let mut inconclusive = Vec::new();
    let mut tested = 0;
    let mut k = vec![-km; n];
    if n == 0 {
        return Ok(ResonanceReport { k_max, basis: Vec::new(), rank: 0, inconclusive, candidates_tested: 0 });
    }
    loop {
        // canonical sign: first nonzero entry positive
        let lead = k.iter().find(|&&x| x != 0).copied();
        if lead.is_some_and(|x| x > 0) && passes(&constraints, &k) {
            // skip candidates already in the span of what was found
            let known = found.len() >= 1 && in_lattice(&found, &k);
            if !known {
                tested += 1;
                let delta = combination(h, None, &k);
                match log_derivative_witness_with(&delta, bounds) {
                    Ok(Some(y)) => {
                        found.push(Relation { k: k.clone(), witness: y });
                        found = hnf(found)?;
                    }
                    Ok(None) => {}
                    Err(Error::DegreeBoundExceeded(_)) => inconclusive.push(k.clone()),
                    Err(e) => return Err(e),
                }
            }
        }
        // next vector in the box
        let mut i = n;
        loop {
            if i == 0 {
                let rank = found.len();
                return Ok(ResonanceReport { k_max, basis: found, rank, inconclusive, candidates_tested: tested });
            }
            i -= 1;
            if k[i] < km {
                k[i] += 1;
                break;
            }
            k[i] = -km;
        }
    }
}

fn in_lattice(rows: &[Relation], k: &[i64]) -> bool {
    ResonanceReport { k_max: 0, basis: rows.to_vec(), rank: rows.len(), inconclusive: Vec::new(), candidates_tested: 0 }
        .contains(k)
}

/// Row Hermite normal form, carrying witnesses along the row operations.
pub fn hnf(mut rows: Vec<Relation>) -> Result<Vec<Relation>> {
    let Some(ncols) = rows.first().map(|r| r.k.len()) else {
        return Ok(rows);
    };
    let mut piv_row = 0;
    for c in 0..ncols {
        if piv_row >= rows.len() {
            break;
        }
        loop {
            // smallest nonzero |entry| in column c at or below piv_row
            let best = (piv_row..rows.len()).filter(|&r| rows[r].k[c] != 0).min_by_key(|&r| rows[r].k[c].abs());
            let Some(b) = best else { break };
            rows.swap(piv_row, b);
            let mut done = true;
            for r in piv_row + 1..rows.len() {
                if rows[r].k[c] != 0 {
                    let q = rows[r].k[c] / rows[piv_row].k[c];
                    row_sub(&mut rows, r, piv_row, q)?;
                    if rows[r].k[c] != 0 {
                        done = false;
                    }
                }
            }
            if done {
                break;
            }
        }
        if rows[piv_row].k[c] == 0 {
            continue;
        }
        if rows[piv_row].k[c] < 0 {
            let r = &mut rows[piv_row];
            r.k.iter_mut().for_each(|x| *x = -*x);
            r.witness = r.witness.try_inv()?;
        }
        let p = rows[piv_row].k[c];
        for r in 0..piv_row {
            let q = rows[r].k[c].div_euclid(p);
            if q != 0 {
                row_sub(&mut rows, r, piv_row, q)?;
            }
        }
        piv_row += 1;
    }
    rows.retain(|r| r.k.iter().any(|&x| x != 0));
    Ok(rows)
}

fn row_sub(rows: &mut [Relation], target: usize, src: usize, q: i64) -> Result<()> {
    let (sk, sw) = (rows[src].k.clone(), rows[src].witness.clone());
    let t = &mut rows[target];
    for (a, b) in t.k.iter_mut().zip(&sk) {
        *a -= q * b;
    }
    t.witness = t.witness.mul(&signed_pow(&sw, -q)?);
    Ok(())
}

/// Outcome of the local non-resonance condition at a ramified place.
#[derive(Clone, Debug, PartialEq)]
pub enum LocalCheck {
    Ok,
    LocalResonance { j: usize, k: Vec<u32>, value: Rational },
}

/// Searches `i` with `2 <= |i| <= k_max` and `j` such that
/// `m (i.alpha - alpha_j)` is an integer. Parameters are treated as
/// independent of the rationals.
pub fn local_extension_check(exponents: &[ParamScalar], m: u32, k_max: usize) -> LocalCheck {
    let n = exponents.len();
    let mm = ParamScalar::from_i64(m as i64);
    for d in 2..=k_max as u32 {
        for k in compositions(n, d) {
            let mut dot = ParamScalar::zero();
            for (a, &e) in exponents.iter().zip(&k) {
                if e != 0 {
                    dot = dot.add(&a.mul(&ParamScalar::from_i64(e as i64)));
                }
            }
            for (j, aj) in exponents.iter().enumerate() {
                let v = dot.sub(aj).mul(&mm);
                if let Some(q) = v.as_rational() {
                    if q.is_integer() {
                        return LocalCheck::LocalResonance { j, k, value: q };
                    }
                }
            }
        }
    }
    LocalCheck::Ok
}

/// Non-negative integer vectors of length `n` summing to `d`.
pub fn compositions(n: usize, d: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    let mut cur = vec![0u32; n];
    fn rec(pos: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if pos + 1 == cur.len() {
            cur[pos] = left;
            out.push(cur.clone());
            return;
        }
        for e in (0..=left).rev() {
            cur[pos] = e;
            rec(pos + 1, left - e, cur, out);
        }
    }
    rec(0, d, &mut cur, &mut out);
    out
}

/// An angle `theta` in turns, `lambda = exp(2 pi i theta)`, stored as an
/// exact fraction of the full turn together with the number of bits that
/// are meaningful.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Angle {
    pub turns: u128,
    pub bits: u32,
}

impl Angle {
    pub fn from_rational(q: &Rational) -> Self {
        let frac = q - q.floor();
        let scaled = frac * Rational::from_integer(num_bigint::BigInt::from(1u8) << 128);
        let v: num_bigint::BigInt = scaled.round().to_integer();
        let turns = u128::try_from(v % (num_bigint::BigInt::from(1u8) << 128)).unwrap_or(0);
        Angle { turns, bits: 126 }
    }

    pub fn from_f64(theta: f64) -> Self {
        let frac = theta - theta.floor();
        let hi = (frac * 2f64.powi(64)) as u128;
        Angle { turns: hi << 64, bits: 52 }
    }

    fn combine(k: &[i64], angles: &[Angle]) -> Angle {
        let mut t: u128 = 0;
        let mut bits = 128;
        for (&kk, a) in k.iter().zip(angles) {
            if kk != 0 {
                t = t.wrapping_add(a.turns.wrapping_mul(kk as u128));
                bits = bits.min(a.bits);
            }
        }
        Angle { turns: t, bits }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiophantineVerdict {
    DiophantineUpToNuMax,
    DivergenceSuspected,
    ResonantHit,
}

impl fmt::Display for DiophantineVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DiophantineVerdict::DiophantineUpToNuMax => "diophantine-up-to-nu_max",
            DiophantineVerdict::DivergenceSuspected => "divergence-suspected",
            DiophantineVerdict::ResonantHit => "resonant-hit",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiophantineRow<F> {
    pub nu: usize,
    /// Smallest nonzero `eps_{j,k}` over `2 <= |k| <= 2^nu`.
    pub eps_min: F,
    pub term: F,
    pub partial_sum: F,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiophantineReport<F> {
    pub rows: Vec<DiophantineRow<F>>,
    pub nu_max: usize,
    /// Last shell actually enumerated (the search budget may stop early).
    pub nu_reached: usize,
    /// `ln(1/eps_min) / (nu ln 2)` at the last row: an estimate of the
    /// small-divisor exponent.
    pub exponent_estimate: F,
    pub resonances: Vec<(usize, Vec<i64>)>,
    pub verdict: DiophantineVerdict,
}

/// Bounded evaluation of the small-divisor sum for the diagonal group
/// with generators `diag(exp(2 pi i angles[i][l]))`. This is a heuristic
/// over a finite horizon: it cannot prove the condition.
pub fn diophantine_eval<F: Float + FromPrimitive>(angles: &[Vec<Angle>], nu_max: usize, budget: usize) -> Result<DiophantineReport<F>> {
    if nu_max == 0 {
        return Err(Error::Input("nu_max must be at least 1".into()));
    }
    let n = angles.first().map_or(0, |r| r.len());
    if n == 0 || angles.iter().any(|r| r.len() != n) {
        return Err(Error::Input("eigenvalue table must be rectangular and nonempty".into()));
    }
    let two_pi = F::from_f64(std::f64::consts::PI).unwrap();
    let scale = F::from_f64(2f64.powi(-128)).unwrap();
    let tol = F::from_f64(1e-6).unwrap();
    let mut eps_min = F::infinity();
    let mut resonances = Vec::new();
    let mut rows = Vec::new();
    let mut sum = F::zero();
    let mut visited = 0usize;
    let mut nu_reached = 0;
    let mut prev_hi = 1u64;
    'outer: for nu in 1..=nu_max {
        let hi = 1u64 << nu.min(62);
        for d in (prev_hi + 1).max(2)..=hi {
            let shell = compositions(n, d as u32);
            for k in shell {
                visited += 1;
                if visited > budget {
                    break 'outer;
                }
                let k: Vec<i64> = k.iter().map(|&x| x as i64).collect();
                for j in 0..n {
                    let mut eps = F::zero();
                    let mut bits = 128u32;
                    for row in angles {
                        let a = Angle::combine(&k, row);
                        let t = a.turns.wrapping_sub(row[j].turns);
                        bits = bits.min(a.bits).min(row[j].bits);
                        let dist = t.min(t.wrapping_neg());
                        let x = F::from_u128(dist).unwrap() * scale;
                        let e = (two_pi * x).sin().abs() * F::from_f64(2.0).unwrap();
                        eps = eps.max(e);
                    }
                    // error of k.theta grows with |k| times the input resolution
                    let err = F::from_f64(2f64.powi(-(bits as i32))).unwrap() * F::from_u64(d * 8).unwrap();
                    if err > tol {
                        return Err(Error::PrecisionLoss(nu));
                    }
                    if eps <= err {
                        resonances.push((j, k.clone()));
                        continue;
                    }
                    if eps < eps_min {
                        eps_min = eps;
                    }
                }
            }
        }
        prev_hi = hi;
        nu_reached = nu;
        let l = if eps_min.is_finite() { -eps_min.ln() } else { F::zero() };
        let term = l.max(F::zero()) * F::from_f64(2f64.powi(-(nu as i32))).unwrap();
        sum = sum + term;
        rows.push(DiophantineRow { nu, eps_min, term, partial_sum: sum });
    }
    let ln2 = F::from_f64(std::f64::consts::LN_2).unwrap();
    let exponent_estimate = rows
        .iter()
        .filter(|r| r.nu >= 4 && r.eps_min.is_finite())
        .map(|r| -r.eps_min.ln() / (F::from_usize(r.nu).unwrap() * ln2))
        .fold(F::zero(), |a, b| a.max(b));
    // generic (Lebesgue-almost-every) angles have exponent close to the
    // number of free multipliers; a much larger one signals Liouville-like
    // approximations
    let threshold = F::from_usize(2 * n).unwrap();
    let verdict = if !resonances.is_empty() {
        DiophantineVerdict::ResonantHit
    } else if exponent_estimate > threshold {
        DiophantineVerdict::DivergenceSuspected
    } else {
        DiophantineVerdict::DiophantineUpToNuMax
    };
    Ok(DiophantineReport { rows, nu_max, nu_reached, exponent_estimate, resonances, verdict })
}

/// Monodromy angles `m * rho` of the local exponents at each place, with
/// numeric parameter values substituted.
pub fn angles_from_exponents(exps: &[(u32, Vec<ParamScalar>)], values: &BTreeMap<usize, f64>) -> Option<Vec<Vec<Angle>>> {
    let mut out = Vec::new();
    for (m, rho) in exps {
        let mut row = Vec::new();
        for r in rho {
            let v = r.mul(&ParamScalar::from_i64(*m as i64));
            row.push(match v.as_rational() {
                Some(q) => Angle::from_rational(&q),
                None => Angle::from_f64(v.eval::<f64>(values)?),
            });
        }
        out.push(row);
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::ElemEnv;
    use crate::scalar::rat;
    use crate::tower::Tower;

    fn alpha() -> Vec<String> {
        vec!["alpha".into()]
    }

    #[test]
    fn resonances() {
        let e = ElemEnv::new(None, &alpha());
        let h = vec![e.eval_str("alpha/s").unwrap(), e.eval_str("-alpha/s").unwrap()];
        assert_eq!(resonance_test(&h, 0, &[2, 1]).unwrap(), Resonance::Resonant(FieldElem::one()));
        assert_eq!(resonance_test(&h[..1], 0, &[2]).unwrap(), Resonance::NonResonant);
        assert!(resonance_test(&h, 0, &[1, 0]).is_err());
        let base = ElemEnv::new(None, &[]);
        let t = Tower::extend(None, "w", 2, &base.eval_str("1+s^2").unwrap()).unwrap();
        let et = ElemEnv::new(Some(t), &alpha());
        let h1 = vec![et.eval_str("alpha/w").unwrap(), et.eval_str("-alpha/w").unwrap()];
        assert!(matches!(resonance_test(&h1, 0, &[2, 1]).unwrap(), Resonance::Resonant(_)));
    }

    #[test]
    fn lattices() {
        let e = ElemEnv::new(None, &alpha());
        let h = vec![e.eval_str("alpha/s").unwrap(), e.eval_str("-alpha/s").unwrap()];
        let rep = relation_lattice(&h, 3).unwrap();
        assert_eq!(rep.basis.len(), 1);
        assert_eq!(rep.basis[0].k, vec![1, 1]);
        assert!(rep.contains(&[-2, -2]));
        assert!(!rep.contains(&[1, 0]));
        let rep = relation_lattice(&h[..1], 3).unwrap();
        assert_eq!(rep.rank, 0);
        // parameter-free part: h = 1/(2s) gives H^2 = s
        let h = vec![e.eval_str("1/(2*s)").unwrap()];
        let rep = relation_lattice(&h, 3).unwrap();
        assert_eq!(rep.basis[0].k, vec![2]);
        assert_eq!(rep.basis[0].witness.derive(), rep.basis[0].witness.mul(&h[0]).mul(&FieldElem::from_i64(2)));
    }

    #[test]
    fn hnf_rows() {
        let w = |k: Vec<i64>| Relation { k, witness: FieldElem::one() };
        let h = hnf(vec![w(vec![2, 4]), w(vec![3, 5])]).unwrap();
        let ks: Vec<_> = h.iter().map(|r| r.k.clone()).collect();
        assert_eq!(ks, vec![vec![1, 1], vec![0, 2]]);
    }

    #[test]
    fn local_condition() {
        let a = ParamScalar::named("a");
        let exps = vec![a.clone(), a.mul(&ParamScalar::from_i64(2)).add(&ParamScalar::from_rational(&rat(1, 2)))];
        match local_extension_check(&exps, 2, 4) {
            LocalCheck::LocalResonance { j, k, value } => {
                assert_eq!((j, k), (1, vec![2, 0]));
                assert_eq!(value, rat(-1, 1));
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(local_extension_check(&exps, 1, 6), LocalCheck::Ok);
        let third = ParamScalar::from_rational(&rat(1, 3));
        let pair = [third.clone(), third];
        assert_eq!(local_extension_check(&pair, 1, 3), LocalCheck::Ok);
        assert!(matches!(local_extension_check(&pair, 1, 4), LocalCheck::LocalResonance { .. }));
    }

    #[test]
    fn small_divisors() {
        let golden = (1.0 + 5f64.sqrt()) / 2.0;
        let rep = diophantine_eval::<f64>(&[vec![Angle::from_f64(golden)]], 16, 1 << 20).unwrap();
        assert_eq!(rep.verdict, DiophantineVerdict::DiophantineUpToNuMax);
        assert!(rep.rows.windows(2).all(|w| w[1].partial_sum >= w[0].partial_sum));
        let res = diophantine_eval::<f64>(&[vec![Angle::from_rational(&rat(1, 3)), Angle::from_rational(&rat(2, 3))]], 4, 1 << 16).unwrap();
        assert_eq!(res.verdict, DiophantineVerdict::ResonantHit);
        // truncated Liouville number sum 10^{-m!}, m = 1..4
        let mut q = Rational::zero();
        for m in 1..=4u32 {
            let f: u32 = (1..=m).product();
            q = q + Rational::new(1.into(), num_bigint::BigInt::from(10u8).pow(f));
        }
        let rep = diophantine_eval::<f64>(&[vec![Angle::from_rational(&q)]], 22, 1 << 23).unwrap();
        assert_eq!(rep.verdict, DiophantineVerdict::DivergenceSuspected);
    }
}
