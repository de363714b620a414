//! The constructive core: formal flow along the curve, first integrals,
//! commuting fields, linearization and Galois descent.

mod descent;
mod fields;
mod oracle;
mod verify;

pub use descent::{galois_descent, group_elements, DescentOutcome, GroupElement};
pub use fields::{
    build_certificate, build_j, commuting_fields, first_integrals, series_matrix_inverse, to_original_field,
    to_original_series, DescentStatus, FirstIntegral, IntegrabilityCertificate, JForms,
};
pub use oracle::{numeric_flow_oracle, OracleReport, OracleRow};
pub use verify::{closed_rows, columns_commute, numeric_rank, verify_certificate, CheckEntry, VerificationReport};

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::galois::combination;
use crate::linalg::Matrix;
use crate::ode::{fe_integrate_rational, log_derivative_witness, rational_ode_solve, LogArg};
use crate::param::ParamScalar;
use crate::reduction::{apply_gauge, time_reduce, ReducedSystem};
use crate::scalar::{rat, Field};
use crate::series::{invert_map, lie, Alphabet, FormalVectorField, HyperexpBasis, MultiIndex, SymbolMonomial, TruncSeries};
use crate::tower::{FieldElem, Tower};

/// `q_j = phi_j(s, u)`, `t = phi_t(s, u)` with `u_j = c_j H_j(s)`.
#[derive(Clone, Debug)]
pub struct FormalFlow {
    pub order: usize,
    pub s0: ParamScalar,
    /// Log-derivatives of the `H_j` plus the registered `L` symbols.
    pub basis: HyperexpBasis,
    /// What each `L_k` stands for.
    pub logs: Vec<LogArg>,
    pub phi: Vec<TruncSeries>,
    pub phi_t: TruncSeries,
    /// Resonant coefficients fixed by `a(s0) = 0`; component `nq` is the clock.
    pub resonant: Vec<(usize, MultiIndex)>,
}

impl FormalFlow {
    pub fn nq(&self) -> usize {
        self.phi.len()
    }

    /// `a_{j,i}`; `j == nq` addresses the clock component.
    pub fn coeff(&self, j: usize, idx: &[u32]) -> FieldElem {
        if j == self.nq() {
            self.phi_t.plain_coeff(idx)
        } else {
            self.phi[j].plain_coeff(idx)
        }
    }

    pub fn truncate(&self, order: usize) -> FormalFlow {
        let mut f = self.clone();
        f.order = order.min(self.order);
        f.phi = self.phi.iter().map(|p| p.truncate(order)).collect();
        f.phi_t = self.phi_t.truncate(order);
        f.resonant.retain(|(_, i)| i.iter().sum::<u32>() as usize <= order);
        f
    }

    /// `d/ds phi - F(phi)` for every component, clock last.
    pub fn residuals(&self, r: &ReducedSystem) -> Result<Vec<TruncSeries>> {
        let t_eq = r.t_eq.as_ref().ok_or(Error::NotTimeReduced)?;
        let mut out = Vec::with_capacity(self.nq() + 1);
        for (j, p) in self.phi.iter().enumerate() {
            let rhs = r.q_eqs[j].truncate(self.order).compose(&self.phi)?;
            out.push(p.derive_s(&self.basis)?.sub(&rhs)?);
        }
        let rhs = t_eq.truncate(self.order).compose(&self.phi)?;
        out.push(self.phi_t.derive_s(&self.basis)?.sub(&rhs)?);
        Ok(out)
    }
}

impl fmt::Display for FormalFlow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (j, p) in self.phi.iter().enumerate() {
            writeln!(f, "q{} = {p}", j + 1)?;
        }
        writeln!(f, "t = {}", self.phi_t)?;
        for (k, l) in self.logs.iter().enumerate() {
            match l {
                LogArg::Elem(a) => writeln!(f, "L{} = ln({a})", k + 1)?,
                LogArg::Opaque(d) => writeln!(f, "L{} = integral of ({d})", k + 1)?,
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ObstructionKind {
    /// A logarithm is forced into a normal component: `Gal^0(NVE_k)` grows.
    LogInNormalPart,
    /// The solver bounds ran out before a decision.
    InconclusiveBounds,
}

impl fmt::Display for ObstructionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObstructionKind::LogInNormalPart => write!(f, "log-in-normal-part"),
            ObstructionKind::InconclusiveBounds => write!(f, "inconclusive-bounds"),
        }
    }
}

/// The coefficient equation `a' + delta a = g` that could not be solved.
#[derive(Clone, Debug)]
pub struct Obstruction {
    pub order: usize,
    /// 1-based; `nq + 1` is the clock.
    pub component: usize,
    pub index: MultiIndex,
    /// Exponent of `H^i / H_j`.
    pub h_exponent: Vec<i64>,
    pub delta: FieldElem,
    pub g: FieldElem,
    pub kind: ObstructionKind,
    /// The flow up to the last complete order.
    pub partial: FormalFlow,
}

impl Obstruction {
    /// The unintegrable element `g H^i / H_j`.
    pub fn element(&self) -> String {
        let mut s = format!("({})", self.g);
        for (l, &e) in self.index.iter().enumerate() {
            match e {
                0 => {}
                1 => s.push_str(&format!("*H{}", l + 1)),
                _ => s.push_str(&format!("*H{}^{e}", l + 1)),
            }
        }
        if self.component <= self.index.len() {
            s.push_str(&format!("/H{}", self.component));
        }
        s
    }

    /// Re-runs the solver on the stored equation; true when it still fails.
    pub fn recheck(&self) -> bool {
        matches!(rational_ode_solve(&self.delta, &self.g), Err(Error::NoSolution) | Err(Error::DegreeBoundExceeded(_)))
    }
}

impl fmt::Display for Obstruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k: Vec<String> = self.index.iter().map(|x| x.to_string()).collect();
        write!(
            f,
            "obstruction ({}) at order {}, component {}, index ({}): {}",
            self.kind,
            self.order,
            self.component,
            k.join(","),
            self.element()
        )
    }
}

#[derive(Clone, Debug)]
pub enum FlowOutcome {
    Flow(FormalFlow),
    Obstructed(Box<Obstruction>),
}

impl FlowOutcome {
    pub fn flow(&self) -> Option<&FormalFlow> {
        match self {
            FlowOutcome::Flow(f) => Some(f),
            FlowOutcome::Obstructed(_) => None,
        }
    }

    /// The flow, or the partial flow before the obstruction.
    pub fn best_flow(&self) -> &FormalFlow {
        match self {
            FlowOutcome::Flow(f) => f,
            FlowOutcome::Obstructed(o) => &o.partial,
        }
    }
}

enum Coeff {
    Plain(FieldElem),
    /// Rational part plus `(c_k / w) L_k` terms (clock only).
    Logs(FieldElem, Vec<(FieldElem, LogArg)>),
    Fail(ObstructionKind),
}

fn s0_candidates() -> Vec<ParamScalar> {
    let mut v: Vec<ParamScalar> = (0..=16).map(ParamScalar::from_i64).collect();
    v.extend((1..=6).map(|k| ParamScalar::from_i64(-k)));
    v.extend([rat(1, 2), rat(1, 3), rat(3, 2)].iter().map(ParamScalar::from_rational));
    v
}

fn elem_regular_at(c: &FieldElem, s0: &ParamScalar) -> bool {
    c.coords().iter().all(|r| r.eval(s0).is_some())
}

fn tower_of(r: &ReducedSystem) -> Option<Arc<Tower>> {
    let mut best: Option<Arc<Tower>> = None;
    let all = r.q_eqs.iter().chain(std::iter::once(&r.s_eq)).chain(r.t_eq.iter());
    for s in all {
        for (_, c) in s.terms() {
            if let Some(t) = c.tower() {
                if best.as_ref().is_none_or(|b| t.dim() > b.dim()) {
                    best = Some(t.clone());
                }
            }
        }
    }
    best
}

/// Regular point: every coefficient finite, no branch point of the base
/// radicands, and `X_n(s0, 0) != 0`.
pub fn is_regular_point(r: &ReducedSystem, order: usize, s0: &ParamScalar) -> bool {
    let t_eq = match &r.t_eq {
        Some(t) => t,
        None => return false,
    };
    for s in r.q_eqs.iter().chain(std::iter::once(t_eq)) {
        for (k, c) in s.terms() {
            if k.deg as usize <= order && !elem_regular_at(c, s0) {
                return false;
            }
        }
    }
    if let Some(t) = tower_of(r) {
        for i in 0..t.names().len() {
            let b = t.radicand(i);
            if b.is_base() && b.base_part().eval(s0).is_none_or(|v| v.is_zero()) {
                return false;
            }
        }
    }
    let t0 = t_eq.constant_term();
    if t0.is_zero() {
        return false;
    }
    match t0.eval_exact(s0) {
        Some(v) => !v.is_zero(),
        None => !t0.is_base() || t0.base_part().eval(s0).is_some_and(|v| !v.is_zero()),
    }
}

/// The first regular candidate, preferring points where the tower
/// generators take rational values.
pub fn default_base_point(r: &ReducedSystem, order: usize) -> Result<ParamScalar> {
    let tower = tower_of(r);
    let cands = s0_candidates();
    for s0 in &cands {
        let exact = tower.as_ref().is_none_or(|t| t.exact_generators(s0).is_some());
        if exact && is_regular_point(r, order, s0) {
            return Ok(s0.clone());
        }
    }
    for s0 in &cands {
        if is_regular_point(r, order, s0) {
            return Ok(s0.clone());
        }
    }
    Err(Error::BasePointSingular("no regular rational point among the candidates".into()))
}

struct Solver<'a> {
    s0: &'a ParamScalar,
}

impl Solver<'_> {
    fn value_at(&self, x: &FieldElem) -> Result<ParamScalar> {
        x.eval_exact(self.s0)
            .ok_or_else(|| Error::BasePointSingular(format!("{}: value of {x} is not exact there", self.s0)))
    }

    /// `a' + delta a = g`. `normal` marks the components `j < n`.
    fn solve(&self, delta: &FieldElem, g: &FieldElem, normal: bool, normalize: bool) -> Result<Coeff> {
        let witness = match log_derivative_witness(delta) {
            Ok(w) => w,
            Err(Error::DegreeBoundExceeded(_)) => None,
            Err(e) => return Err(e),
        };
        let Some(w) = witness else {
            return Ok(match rational_ode_solve(delta, g) {
                Ok(a) => Coeff::Plain(a),
                Err(Error::NoSolution) => Coeff::Fail(ObstructionKind::LogInNormalPart),
                Err(Error::DegreeBoundExceeded(_)) => Coeff::Fail(ObstructionKind::InconclusiveBounds),
                Err(e) => return Err(e),
            });
        };
        // resonant: a = (integral of g w) / w
        let integral = match fe_integrate_rational(&g.mul(&w)) {
            Ok(i) => i,
            Err(Error::IntegrationIncomplete(_)) => return Ok(Coeff::Fail(ObstructionKind::InconclusiveBounds)),
            Err(e) => return Err(e),
        };
        let winv = w.try_inv()?;
        let mut rational = integral.rational.clone();
        if normalize {
            let v = self.value_at(&rational)?;
            rational = rational.sub(&FieldElem::from_param(v));
        }
        let a = rational.mul(&winv);
        if integral.logs.is_empty() {
            return Ok(Coeff::Plain(a));
        }
        if normal {
            let opaque = integral.logs.iter().any(|(_, l)| matches!(l, LogArg::Opaque(_)));
            return Ok(Coeff::Fail(if opaque {
                ObstructionKind::InconclusiveBounds
            } else {
                ObstructionKind::LogInNormalPart
            }));
        }
        let logs = integral.logs.into_iter().map(|(c, l)| (c.mul(&winv), l)).collect();
        Ok(Coeff::Logs(a, logs))
    }
}

fn is_resonant(delta: &FieldElem) -> bool {
    matches!(log_derivative_witness(delta), Ok(Some(_)))
}

/// Order-by-order construction of the formal flow of a time- and
/// gauge-reduced system; resonant coefficients satisfy `a(s0) = 0`.
pub fn formal_flow(r: &ReducedSystem, order: usize, s0: Option<&ParamScalar>) -> Result<FlowOutcome> {
    if !r.time_reduced {
        return Err(Error::NotTimeReduced);
    }
    let t_eq = r.t_eq.clone().ok_or(Error::NotTimeReduced)?;
    if order > r.order {
        return Err(Error::OrderExceedsTable(order));
    }
    let m = r.nq();
    let lambdas = r.lambdas()?;
    let s0 = match s0 {
        Some(p) => {
            if !is_regular_point(r, order, p) {
                return Err(Error::BasePointSingular(p.to_string()));
            }
            p.clone()
        }
        None => default_base_point(r, order)?,
    };
    let mut basis = HyperexpBasis::new(lambdas)?;
    let h = basis.h.clone();
    let mut logs: Vec<LogArg> = Vec::new();
    let mut resonant = Vec::new();
    let mut phi: Vec<TruncSeries> = (0..m).map(|j| TruncSeries::var(Alphabet::U, m, order, j)).collect();
    let mut phi_t = TruncSeries::zero(Alphabet::U, m, order);
    let t_eq = t_eq.truncate(order);
    let nl: Vec<TruncSeries> = r
        .q_eqs
        .iter()
        .map(|e| {
            let mut s = TruncSeries::zero(Alphabet::Q, m, order);
            for (k, c) in e.terms() {
                if k.deg >= 2 {
                    s.add_term(k.idx.clone(), k.sym.clone(), c.clone());
                }
            }
            s
        })
        .collect();
    let solver = Solver { s0: &s0 };

    // clock at order 0: an antiderivative of 1/X_n(s, 0); its constant is the time origin
    let t0 = t_eq.constant_term();
    if !t0.is_zero() {
        let i = fe_integrate_rational(&t0)?;
        phi_t.add_term(vec![0; m], SymbolMonomial::neutral(), i.rational.clone());
        for (c, l) in i.logs {
            let k = basis.add_log(l.derivative()?);
            logs.push(l);
            phi_t.add_term(vec![0; m], SymbolMonomial::log(k), c);
        }
    }

    let obstruct = |k: usize,
                    comp: usize,
                    idx: &MultiIndex,
                    delta: FieldElem,
                    g: FieldElem,
                    kind: ObstructionKind,
                    phi: &[TruncSeries],
                    phi_t: &TruncSeries,
                    basis: &HyperexpBasis,
                    logs: &[LogArg],
                    resonant: &[(usize, MultiIndex)]| {
        let mut he: Vec<i64> = idx.iter().map(|&x| x as i64).collect();
        if comp < m {
            he[comp] -= 1;
        }
        let partial = FormalFlow {
            order: k - 1,
            s0: s0.clone(),
            basis: basis.clone(),
            logs: logs.to_vec(),
            phi: phi.iter().map(|p| p.truncate(k - 1)).collect(),
            phi_t: phi_t.truncate(k - 1),
            resonant: resonant.to_vec(),
        };
        FlowOutcome::Obstructed(Box::new(Obstruction {
            order: k,
            component: comp + 1,
            index: idx.clone(),
            h_exponent: he,
            delta,
            g,
            kind,
            partial: partial.truncate(k - 1),
        }))
    };

    for k in 1..=order {
        if k >= 2 {
            let mut new_terms: Vec<(usize, MultiIndex, FieldElem)> = Vec::new();
            for j in 0..m {
                let g_series = nl[j].compose(&phi)?.degree_part(k);
                for (key, g) in g_series.terms() {
                    if !key.sym.is_neutral() {
                        return Err(Error::VerificationFailed("symbol in a normal component".into()));
                    }
                    let ki: Vec<i64> = key.idx.iter().map(|&x| x as i64).collect();
                    let delta = combination(&h, Some(j), &ki);
                    let res = is_resonant(&delta);
                    match solver.solve(&delta, g, true, true)? {
                        Coeff::Plain(a) => {
                            if res {
                                resonant.push((j, key.idx.clone()));
                            }
                            new_terms.push((j, key.idx.clone(), a));
                        }
                        Coeff::Logs(..) => unreachable!("normal components never keep logs"),
                        Coeff::Fail(kind) => {
                            return Ok(obstruct(
                                k,
                                j,
                                &key.idx,
                                delta,
                                g.clone(),
                                kind,
                                &phi,
                                &phi_t,
                                &basis,
                                &logs,
                                &resonant,
                            ))
                        }
                    }
                }
            }
            for (j, idx, a) in new_terms {
                phi[j].add_term(idx, SymbolMonomial::neutral(), a);
            }
        }
        let g_series = t_eq.compose(&phi)?.degree_part(k);
        let mut new_terms = Vec::new();
        for (key, g) in g_series.terms() {
            let ki: Vec<i64> = key.idx.iter().map(|&x| x as i64).collect();
            let delta = combination(&h, None, &ki);
            let res = is_resonant(&delta);
            match solver.solve(&delta, g, false, true)? {
                Coeff::Plain(a) => {
                    if res {
                        resonant.push((m, key.idx.clone()));
                    }
                    new_terms.push((key.idx.clone(), SymbolMonomial::neutral(), a));
                }
                Coeff::Logs(a, ls) => {
                    resonant.push((m, key.idx.clone()));
                    new_terms.push((key.idx.clone(), SymbolMonomial::neutral(), a));
                    for (c, l) in ls {
                        let kk = basis.add_log(l.derivative()?);
                        logs.push(l);
                        new_terms.push((key.idx.clone(), SymbolMonomial::log(kk), c));
                    }
                }
                Coeff::Fail(kind) => {
                    return Ok(obstruct(
                        k, m, &key.idx, delta, g.clone(), kind, &phi, &phi_t, &basis, &logs, &resonant,
                    ))
                }
            }
        }
        for (idx, sym, a) in new_terms {
            phi_t.add_term(idx, sym, a);
        }
    }
    let flow = FormalFlow { order, s0, basis, logs, phi, phi_t, resonant };
    for (j, res) in flow.residuals(r)?.iter().enumerate() {
        if !res.is_zero() {
            return Err(Error::VerificationFailed(format!("flow residual in component {}: {res}", j + 1)));
        }
    }
    Ok(FlowOutcome::Flow(flow))
}

/// `c_j H_j = Phi_j(q, s)`.
pub fn invert_flow(flow: &FormalFlow) -> Result<Vec<TruncSeries>> {
    if flow.phi.iter().any(|p| p.has_symbols()) {
        return Err(Error::Input("normal components carry symbols".into()));
    }
    invert_map(&flow.phi)
}

/// A tangent-to-identity change of coordinates conjugating `X` to its
/// linear part.
#[derive(Clone, Debug)]
pub struct Linearization {
    /// New coordinates as series in the original `q`.
    pub map: Vec<TruncSeries>,
    pub order: usize,
    /// Order to which the push-forward residual vanishes.
    pub verified_order: usize,
    /// Names of Galois generators that fix every coefficient of the map.
    pub fixed_by: Vec<String>,
    /// Names of Galois generators that move some coefficient.
    pub moved_by: Vec<String>,
}

#[derive(Clone, Debug)]
pub enum LinearizeOutcome {
    Map(Linearization),
    Obstructed(Box<Obstruction>),
}

pub(crate) fn linear_series(rows: &Matrix<FieldElem>, order: usize) -> Vec<TruncSeries> {
    let n = rows.cols;
    (0..rows.rows)
        .map(|j| {
            let mut s = TruncSeries::zero(Alphabet::Q, n, order);
            for k in 0..n {
                let mut idx = vec![0; n];
                idx[k] = 1;
                s.add_term(idx, SymbolMonomial::neutral(), rows.get(j, k).clone());
            }
            s
        })
        .collect()
}

/// Linearization of a time-dependent system `q' = F(s, q)`, `s' = 1`
/// vanishing along the curve. `r` is gauge reduced (diagonal linear part);
/// the recorded gauge maps the result back to the original coordinates.
pub fn linearize(r: &ReducedSystem, order: usize, s0: Option<&ParamScalar>) -> Result<LinearizeOutcome> {
    let one = TruncSeries::constant(Alphabet::Q, r.nq(), r.order, FieldElem::one());
    if !r.time_reduced && r.s_eq != one {
        return Err(Error::Input("linearization needs s' = 1 (a time-dependent system)".into()));
    }
    if !r.is_diagonal() {
        let a = r.linear_part();
        for i in 0..a.rows {
            for j in 0..a.cols {
                if i != j && !a.get(i, j).is_zero() {
                    return Err(Error::GaugeRequired(format!("linear part entry ({},{}) = {}", i + 1, j + 1, a.get(i, j))));
                }
            }
        }
    }
    let rt = time_reduce(r)?;
    let flow = match formal_flow(&rt, order, s0)? {
        FlowOutcome::Flow(f) => f,
        FlowOutcome::Obstructed(o) => return Ok(LinearizeOutcome::Obstructed(o)),
    };
    let phi = invert_flow(&flow)?;
    let m = r.nq();
    let (map, original) = match &r.gauge {
        Some(g) => {
            let ginv = g.inverse().ok_or(Error::SingularGauge)?;
            let sub = linear_series(&ginv, order);
            let inner: Vec<TruncSeries> = phi.iter().map(|p| p.compose(&sub)).collect::<Result<_>>()?;
            let mut out = Vec::with_capacity(m);
            for j in 0..m {
                let mut acc = TruncSeries::zero(Alphabet::Q, m, order);
                for (k, x) in inner.iter().enumerate() {
                    acc = acc.add(&x.scale(g.get(j, k)))?;
                }
                out.push(acc);
            }
            let mut back = apply_gauge(r, &ginv, false)?;
            back.gauge = None;
            (out, back)
        }
        None => (phi, r.clone()),
    };
    // push-forward check: L_X psi = A psi
    let a = original.linear_part();
    let x = FormalVectorField { comps: original.q_eqs.iter().map(|e| e.truncate(order)).collect(), s_comp: one.truncate(order) };
    let mut verified = order;
    for j in 0..m {
        let mut res = lie(&map[j], &x, &flow.basis)?;
        for k in 0..m {
            res = res.sub(&map[k].scale(a.get(j, k)))?;
        }
        if !res.is_zero() {
            return Err(Error::VerificationFailed(format!("linearization residual in component {}: {res}", j + 1)));
        }
        verified = verified.min(res.order());
    }
    let mut fixed_by = Vec::new();
    let mut moved_by = Vec::new();
    if let Some(t) = map.iter().flat_map(|s| s.terms().filter_map(|(_, c)| c.tower().cloned())).max_by_key(|t| t.galois().len()) {
        for (gi, gen) in t.galois().iter().enumerate() {
            let mut fixed = true;
            for s in &map {
                for (_, c) in s.terms() {
                    if c.embed(&t)?.galois(gi)? != *c {
                        fixed = false;
                    }
                }
            }
            if fixed {
                fixed_by.push(gen.name.clone());
            } else {
                moved_by.push(gen.name.clone());
            }
        }
    }
    Ok(LinearizeOutcome::Map(Linearization { map, order, verified_order: verified, fixed_by, moved_by }))
}

#[cfg(test)]
mod tests;
