//! First integrals from the relation lattice, the closed forms `dJ_i`, and
//! commuting fields as columns of `Jac^{-1}`.

use std::fmt;

use super::{invert_flow, linear_series, FormalFlow};
use crate::error::{Error, Result};
use crate::galois::ResonanceReport;
use crate::linalg::Matrix;
use crate::reduction::ReducedSystem;
use crate::scalar::Field;
use crate::series::{lie, Alphabet, FormalVectorField, HyperexpBasis, TruncSeries};
use crate::tower::FieldElem;

pub(crate) fn val(a: &TruncSeries) -> usize {
    a.valuation().unwrap_or(a.order() + 1)
}

/// Product known up to `min(N_a + v_b, N_b + v_a)`.
pub(crate) fn prod(a: &TruncSeries, b: &TruncSeries) -> TruncSeries {
    let o = (a.order() + val(b)).min(b.order() + val(a));
    a.mul_to(b, o)
}

pub(crate) fn konst(like: &TruncSeries, order: usize, c: FieldElem) -> TruncSeries {
    TruncSeries::constant(like.alphabet(), like.nvars(), order, c)
}

fn drop_logs(s: &TruncSeries) -> (TruncSeries, usize) {
    let mut r = TruncSeries::zero(s.alphabet(), s.nvars(), s.order());
    let mut dropped = 0;
    for (k, c) in s.terms() {
        if k.sym.has_logs() {
            dropped += 1;
        } else {
            r.add_term(k.idx.clone(), k.sym.clone(), c.clone());
        }
    }
    (r, dropped)
}

type SMat = Vec<Vec<TruncSeries>>;

fn mat_mul(a: &SMat, b: &SMat) -> Result<SMat> {
    let mut out = Vec::with_capacity(a.len());
    for row in a {
        let mut r = Vec::with_capacity(b[0].len());
        for j in 0..b[0].len() {
            let mut acc = prod(&row[0], &b[0][j]);
            for k in 1..row.len() {
                acc = acc.add(&prod(&row[k], &b[k][j]))?;
            }
            r.push(acc);
        }
        out.push(r);
    }
    Ok(out)
}

/// Inverse of a square series matrix with invertible constant part.
pub fn series_matrix_inverse(m: &[Vec<TruncSeries>]) -> Result<Vec<Vec<TruncSeries>>> {
    let n = m.len();
    let like = &m[0][0];
    let maxord = m.iter().flatten().map(|s| s.order()).max().unwrap_or(0);
    let m0 = Matrix::from_rows(m.iter().map(|r| r.iter().map(|s| s.constant_term()).collect()).collect());
    let n0 = m0.inverse().ok_or_else(|| Error::RankDeficiency("constant part of the Jacobian is singular".into()))?;
    let n0s: SMat = (0..n).map(|i| (0..n).map(|j| konst(like, maxord, n0.get(i, j).clone())).collect()).collect();
    // P = -N0 (M - M0)
    let mut p: SMat = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = Vec::with_capacity(n);
        for j in 0..n {
            let mut acc = TruncSeries::zero(like.alphabet(), like.nvars(), maxord);
            for k in 0..n {
                let e = m[k][j].sub(&konst(like, maxord, m0.get(k, j).clone()))?;
                acc = acc.add(&e.scale(&n0.get(i, k).neg()))?;
            }
            row.push(acc);
        }
        p.push(row);
    }
    let mut acc = n0s.clone();
    let mut term = n0s;
    for _ in 0..=maxord {
        term = mat_mul(&p, &term)?;
        if term.iter().flatten().all(|s| s.is_zero()) {
            // still fold in the truncation orders
            for (ra, rt) in acc.iter_mut().zip(&term) {
                for (a, t) in ra.iter_mut().zip(rt) {
                    *a = a.add(t)?;
                }
            }
            break;
        }
        for (ra, rt) in acc.iter_mut().zip(&term) {
            for (a, t) in ra.iter_mut().zip(rt) {
                *a = a.add(t)?;
            }
        }
    }
    Ok(acc)
}

/// The closed forms `dJ_1..dJ_n`, stored as the rows of `diag(Phi, 1) Jac`
/// over the coordinates `(q_1, .., q_m, s)`.
#[derive(Clone, Debug)]
pub struct JForms {
    /// Row `i < m` is `Phi_i dJ_i = -dPhi_i + h_i Phi_i ds`; the last row is `dJ_n`.
    pub scaled: Vec<Vec<TruncSeries>>,
    pub phi: Vec<TruncSeries>,
    /// `J_n + t`: the clock component of the flow written in `q`.
    pub psi: TruncSeries,
    /// Coefficient of `dt` in `dJ_n`.
    pub t_component: FieldElem,
    /// Terms `L_k d(...)` removed from `dJ_n`; their factors are functions of
    /// the first integrals, so the removal is a row operation that leaves the
    /// fields annihilating those integrals unchanged.
    pub dropped_log_terms: usize,
}

pub fn build_j(flow: &FormalFlow, phi: &[TruncSeries]) -> Result<JForms> {
    let m = flow.nq();
    let psi = flow.phi_t.compose(phi)?;
    let mut scaled = Vec::with_capacity(m + 1);
    for (i, p) in phi.iter().enumerate() {
        let mut row: Vec<TruncSeries> = (0..m).map(|k| p.partial(k).neg()).collect();
        row.push(p.scale(&flow.basis.h[i]).sub(&p.derive_s(&flow.basis)?)?);
        scaled.push(row);
    }
    let mut last = Vec::with_capacity(m + 1);
    let mut dropped = 0;
    for k in 0..m {
        let (d, n) = drop_logs(&psi.partial(k));
        dropped += n;
        last.push(d);
    }
    let (d, n) = drop_logs(&psi.derive_s(&flow.basis)?);
    dropped += n;
    last.push(d);
    scaled.push(last);
    Ok(JForms { scaled, phi: phi.to_vec(), psi, t_component: FieldElem::one().neg(), dropped_log_terms: dropped })
}

/// `F = prod Phi_j^{k_j} / y`, kept as `num / den` when some `k_j < 0`.
#[derive(Clone, Debug)]
pub struct FirstIntegral {
    /// Lattice vector (empty for combinations built by descent).
    pub k: Vec<i64>,
    pub witness: FieldElem,
    pub num: TruncSeries,
    pub den: TruncSeries,
    pub verified_order: usize,
}

impl FirstIntegral {
    pub fn is_polynomial(&self) -> bool {
        self.den.terms().all(|(k, _)| k.deg == 0)
    }

    pub fn series(&self) -> Result<TruncSeries> {
        if !self.is_polynomial() {
            return Err(Error::Input("first integral has a non-constant denominator".into()));
        }
        Ok(self.num.scale(&self.den.constant_term().try_inv()?))
    }

    pub fn from_series(f: TruncSeries) -> Self {
        let den = konst(&f, f.order(), FieldElem::one());
        FirstIntegral { k: Vec::new(), witness: FieldElem::one(), num: f, den, verified_order: 0 }
    }
}

impl fmt::Display for FirstIntegral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_polynomial() {
            match self.series() {
                Ok(s) => write!(f, "{s}"),
                Err(_) => write!(f, "{}", self.num),
            }
        } else {
            write!(f, "[{}] / [{}]", self.num, self.den)
        }
    }
}

/// `den L(num) - num L(den)`.
pub(crate) fn quotient_residual(num: &TruncSeries, den: &TruncSeries, v: &FormalVectorField, basis: &HyperexpBasis) -> Result<TruncSeries> {
    let a = prod(den, &lie(num, v, basis)?);
    let b = prod(num, &lie(den, v, basis)?);
    a.sub(&b)
}

fn time_reduced_field(r: &ReducedSystem) -> FormalVectorField {
    let like = &r.q_eqs[0];
    FormalVectorField { comps: r.q_eqs.clone(), s_comp: konst(like, r.order, FieldElem::one()) }
}

fn power(p: &TruncSeries, e: u32) -> TruncSeries {
    let mut acc = konst(p, p.order(), FieldElem::one());
    for _ in 0..e {
        acc = prod(&acc, p);
    }
    acc
}

/// One first integral per lattice generator, each checked against the
/// time-reduced field. A truncated candidate that turns out to be an exact
/// first integral (checked at the order of `r`) is kept at that order.
pub fn first_integrals(flow: &FormalFlow, phi: &[TruncSeries], report: &ResonanceReport, r: &ReducedSystem) -> Result<Vec<FirstIntegral>> {
    let x = time_reduced_field(r);
    let like = &phi[0];
    let order = flow.order;
    let mut out = Vec::new();
    for rel in &report.basis {
        let mut num = konst(like, order, FieldElem::one());
        let mut den = konst(like, order, rel.witness.clone());
        for (j, &kj) in rel.k.iter().enumerate() {
            if kj > 0 {
                num = prod(&num, &power(&phi[j], kj as u32));
            } else if kj < 0 {
                den = prod(&den, &power(&phi[j], (-kj) as u32));
            }
        }
        if den.terms().all(|(k, _)| k.deg == 0) {
            num = num.scale(&den.constant_term().try_inv()?);
            den = konst(like, order, FieldElem::one());
        }
        let res = quotient_residual(&num, &den, &x, &flow.basis)?;
        if !res.is_zero() {
            return Err(Error::VerificationFailed(format!("L_X F for k = {:?}: {res}", rel.k)));
        }
        let mut verified = res.order().min(order);
        if r.order > order {
            let (pn, pd) = (num.clone().reorder(r.order), den.clone().reorder(r.order));
            let pres = quotient_residual(&pn, &pd, &x, &flow.basis)?;
            if pres.is_zero() {
                verified = pres.order().min(r.order);
                num = pn;
                den = pd;
            }
        }
        out.push(FirstIntegral { k: rel.k.clone(), witness: rel.witness.clone(), num, den, verified_order: verified });
    }
    Ok(out)
}

/// Rows `-k` for each integral, greedy unit rows, then `e_n`.
fn completion_matrix(m: usize, ints: &[FirstIntegral]) -> Result<Matrix<FieldElem>> {
    let n = m + 1;
    let mut rows: Vec<Vec<FieldElem>> = Vec::new();
    for f in ints {
        let mut r: Vec<FieldElem> = f.k.iter().map(|&x| FieldElem::from_i64(-x)).collect();
        r.push(FieldElem::zero());
        rows.push(r);
    }
    if !rows.is_empty() && Matrix::from_rows(rows.clone()).rank() < rows.len() {
        return Err(Error::RankDeficiency("lattice generators are dependent".into()));
    }
    for i in 0..m {
        if rows.len() == m {
            break;
        }
        let mut e = vec![FieldElem::zero(); n];
        e[i] = FieldElem::one();
        let mut trial = rows.clone();
        trial.push(e);
        if Matrix::from_rows(trial.clone()).rank() == trial.len() {
            rows = trial;
        }
    }
    let mut e = vec![FieldElem::zero(); n];
    e[m] = FieldElem::one();
    rows.push(e);
    Ok(Matrix::from_rows(rows))
}

/// The `l` last columns of `(T Jac)^{-1}`: pairwise commuting, annihilating
/// every integral, with `X` last.
pub fn commuting_fields(flow: &FormalFlow, phi: &[TruncSeries], ints: &[FirstIntegral]) -> Result<Vec<FormalVectorField>> {
    let m = flow.nq();
    let n = m + 1;
    let j = build_j(flow, phi)?;
    let minv = series_matrix_inverse(&j.scaled)?;
    let jinv: SMat = minv
        .iter()
        .map(|row| row.iter().enumerate().map(|(b, x)| if b < m { prod(x, &phi[b]) } else { x.clone() }).collect())
        .collect();
    let t = completion_matrix(m, ints)?;
    let tinv = t.inverse().ok_or_else(|| Error::RankDeficiency("completion matrix is singular".into()))?;
    let mut out = Vec::new();
    for b in ints.len()..n {
        let mut col = Vec::with_capacity(n);
        for row in &jinv {
            let mut acc: Option<TruncSeries> = None;
            for (c, x) in row.iter().enumerate() {
                let w = tinv.get(c, b);
                if w.is_zero() {
                    continue;
                }
                let term = x.scale(w);
                acc = Some(match acc {
                    Some(a) => a.add(&term)?,
                    None => term,
                });
            }
            col.push(acc.unwrap_or_else(|| TruncSeries::zero(Alphabet::Q, m, flow.order)));
        }
        let s_comp = col.pop().unwrap();
        out.push(FormalVectorField { comps: col, s_comp });
    }
    Ok(out)
}

/// `F(G^{-1} q)` for a series in the gauge coordinates `Q`.
pub fn to_original_series(s: &TruncSeries, gauge: &Matrix<FieldElem>) -> Result<TruncSeries> {
    let ginv = gauge.inverse().ok_or(Error::SingularGauge)?;
    s.compose(&linear_series(&ginv, s.order()))
}

/// Push-forward of a field under `q = G(s) Q`:
/// `Y_q = G Y_Q + G' Q Y_s`, then written in `q`.
pub fn to_original_field(y: &FormalVectorField, gauge: &Matrix<FieldElem>) -> Result<FormalVectorField> {
    let m = y.comps.len();
    let ginv = gauge.inverse().ok_or(Error::SingularGauge)?;
    let order = y.comps.iter().map(|c| c.order()).chain(std::iter::once(y.s_comp.order())).max().unwrap_or(0);
    let sub = linear_series(&ginv, order + 1);
    let comps: Vec<TruncSeries> = y.comps.iter().map(|c| c.compose(&sub)).collect::<Result<_>>()?;
    let s_comp = y.s_comp.compose(&sub)?;
    let dg = gauge.map(|x| x.derive());
    let mut out = Vec::with_capacity(m);
    for j in 0..m {
        let mut acc: Option<TruncSeries> = None;
        for k in 0..m {
            let mut term = comps[k].scale(gauge.get(j, k));
            if !dg.get(j, k).is_zero() {
                term = term.add(&prod(&sub[k], &s_comp).scale(dg.get(j, k)))?;
            }
            acc = Some(match acc {
                Some(a) => a.add(&term)?,
                None => term,
            });
        }
        out.push(acc.unwrap());
    }
    Ok(FormalVectorField { comps: out, s_comp })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DescentStatus {
    BaseField,
    NeedsCovering(usize),
    NotAttempted,
}

impl fmt::Display for DescentStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DescentStatus::BaseField => write!(f, "base-field"),
            DescentStatus::NeedsCovering(d) => write!(f, "needs-covering({d})"),
            DescentStatus::NotAttempted => write!(f, "not-attempted"),
        }
    }
}

/// `l` commuting fields (with `X` last) and `n - l` first integrals, in the
/// original coordinates.
#[derive(Clone, Debug)]
pub struct IntegrabilityCertificate {
    /// Dimension including `s`.
    pub n: usize,
    pub l: usize,
    pub order: usize,
    pub fields: Vec<FormalVectorField>,
    pub integrals: Vec<FirstIntegral>,
    pub descent: DescentStatus,
    /// Lattice candidates on which the solver gave up; `l` may be smaller.
    pub inconclusive: usize,
}

impl IntegrabilityCertificate {
    pub fn x(&self) -> &FormalVectorField {
        self.fields.last().expect("certificate holds X")
    }
}

/// Integrals, fields and the check that `X` is the last field, mapped back
/// through the recorded gauge.
pub fn build_certificate(r: &ReducedSystem, flow: &FormalFlow, report: &ResonanceReport) -> Result<IntegrabilityCertificate> {
    let phi = invert_flow(flow)?;
    let ints = first_integrals(flow, &phi, report, r)?;
    let fields = commuting_fields(flow, &phi, &ints)?;
    // X T = (q_eqs, 1) with T = 1/X_n
    let x = fields.last().unwrap();
    let t_eq = r.t_eq.as_ref().ok_or(crate::error::Error::NotTimeReduced)?;
    let one = konst(t_eq, t_eq.order(), FieldElem::one());
    let ds = prod(&x.s_comp, t_eq).sub(&one)?;
    if !ds.is_zero() {
        return Err(Error::VerificationFailed(format!("last field is not X (s-component residual {ds})")));
    }
    for (j, c) in x.comps.iter().enumerate() {
        let d = prod(c, t_eq).sub(&r.q_eqs[j])?;
        if !d.is_zero() {
            return Err(Error::VerificationFailed(format!("last field is not X (component {}: {d})", j + 1)));
        }
    }
    // the system itself is known to the order of `r`, usually beyond the flow
    let inv_t = t_eq.inv()?;
    let exact = FormalVectorField { comps: r.q_eqs.iter().map(|c| c.mul(&inv_t)).collect::<Result<_>>()?, s_comp: inv_t };
    let mut fields = fields;
    *fields.last_mut().unwrap() = exact;
    let (fields, integrals) = match &r.gauge {
        Some(g) => {
            let fs = fields.iter().map(|y| to_original_field(y, g)).collect::<Result<Vec<_>>>()?;
            let is = ints
                .into_iter()
                .map(|f| {
                    Ok(FirstIntegral {
                        num: to_original_series(&f.num, g)?,
                        den: to_original_series(&f.den, g)?,
                        ..f
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            (fs, is)
        }
        None => (fields, ints),
    };
    let m = flow.nq();
    Ok(IntegrabilityCertificate {
        n: m + 1,
        l: fields.len(),
        order: flow.order,
        fields,
        integrals,
        descent: DescentStatus::NotAttempted,
        inconclusive: report.inconclusive.len(),
    })
}
