//! Normal shapes of a vector field near an algebraic solution curve:
//! curve coordinates, time reduction, gauge transformations, variational
//! equations and the scan for singular places.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::{parse, Expr};
use crate::linalg::Matrix;
use crate::ode::{coprime_factors, PolyS};
use crate::param::ParamScalar;
use crate::puiseux::{local_exponent_of_logderiv, ramification_at, Place};
use crate::scalar::Field;
use crate::series::{Alphabet, MultiIndex, SeriesEnv, TruncSeries};
use crate::tower::{FieldElem, Tower};

/// A polynomial or rational vector field in `x_1..x_n` together with a
/// parametrized solution curve `x_i = gamma_i(s)`, `x_n = s`.
#[derive(Clone, Debug)]
pub struct VectorFieldSpec {
    pub coord_names: Vec<String>,
    pub components: Vec<Expr>,
    pub gamma: Vec<FieldElem>,
    pub tower: Option<Arc<Tower>>,
    pub params: Vec<String>,
}

impl VectorFieldSpec {
    /// Parses the components and checks tangency along the curve.
    pub fn new(
        coord_names: Vec<String>,
        components: &[&str],
        gamma: Vec<FieldElem>,
        tower: Option<Arc<Tower>>,
        params: &[String],
    ) -> Result<Self> {
        let n = coord_names.len();
        if components.len() != n || gamma.len() + 1 != n || n < 2 {
            return Err(Error::Input(format!(
                "need {n} components and {} curve coordinates",
                n.saturating_sub(1)
            )));
        }
        let components = components.iter().map(|c| parse(c).map_err(Error::from)).collect::<Result<Vec<_>>>()?;
        let spec = VectorFieldSpec { coord_names, components, gamma, tower, params: params.to_vec() };
        spec.check_tangency()?;
        Ok(spec)
    }

    pub fn dim(&self) -> usize {
        self.coord_names.len()
    }

    fn env(&self, order: usize) -> SeriesEnv {
        let nq = self.dim() - 1;
        let mut env = SeriesEnv::new(
            Alphabet::Q,
            order,
            (1..=nq).map(|j| format!("q{j}")).collect(),
            self.tower.clone(),
            &self.params,
        );
        for (j, g) in self.gamma.iter().enumerate() {
            let shifted = TruncSeries::constant(Alphabet::Q, nq, order, g.clone())
                .add(&TruncSeries::var(Alphabet::Q, nq, order, j))
                .unwrap();
            env.bindings.insert(self.coord_names[j].clone(), shifted);
        }
        env.bindings.insert(
            self.coord_names[nq].clone(),
            TruncSeries::constant(Alphabet::Q, nq, order, FieldElem::s()),
        );
        env
    }

    /// Residuals `X_i(gamma, s) - gamma_i' X_n(gamma, s)`.
    pub fn tangency_residuals(&self) -> Result<Vec<FieldElem>> {
        let env = self.env(0);
        let vals = self.components.iter().map(|c| c.eval(&env).map(|s| s.constant_term())).collect::<Result<Vec<_>>>()?;
        let xn = vals.last().unwrap().clone();
        Ok(self.gamma.iter().zip(&vals).map(|(g, x)| x.sub(&g.derive().mul(&xn))).collect())
    }

    fn check_tangency(&self) -> Result<()> {
        for (i, r) in self.tangency_residuals()?.into_iter().enumerate() {
            if !r.is_zero() {
                return Err(Error::NotTangent { component: i + 1, residual: r.to_string() });
            }
        }
        Ok(())
    }
}

/// `q' = F(s, q)`, `s' = X_n(s, q)` (or `s` as time with `t' = 1/X_n`).
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedSystem {
    pub order: usize,
    pub q_eqs: Vec<TruncSeries>,
    pub s_eq: TruncSeries,
    pub t_eq: Option<TruncSeries>,
    pub time_reduced: bool,
    pub gauge: Option<Matrix<FieldElem>>,
    pub gamma: Option<Vec<FieldElem>>,
}

impl ReducedSystem {
    /// A system given directly in reduced coordinates.
    pub fn from_series(q_eqs: Vec<TruncSeries>, s_eq: TruncSeries) -> Result<Self> {
        let order = q_eqs.iter().chain(std::iter::once(&s_eq)).map(|s| s.order()).min().unwrap_or(0);
        for q in &q_eqs {
            if q.alphabet() != Alphabet::Q || q.nvars() != q_eqs.len() {
                return Err(Error::AlphabetMismatch);
            }
            if !q.constant_term().is_zero() {
                return Err(Error::Input("q-equations must vanish on the curve".into()));
            }
        }
        Ok(ReducedSystem { order, q_eqs, s_eq, t_eq: None, time_reduced: false, gauge: None, gamma: None })
    }

    /// Parses `q' = ...` right-hand sides (in `q1..`) and `s' = ...`.
    pub fn parse(q_eqs: &[&str], s_eq: &str, order: usize, tower: Option<Arc<Tower>>, params: &[String]) -> Result<Self> {
        let nq = q_eqs.len();
        let env = SeriesEnv::new(Alphabet::Q, order, (1..=nq).map(|j| format!("q{j}")).collect(), tower, params);
        let qs = q_eqs.iter().map(|e| env.eval_str(e)).collect::<Result<Vec<_>>>()?;
        Self::from_series(qs, env.eval_str(s_eq)?)
    }

    pub fn nq(&self) -> usize {
        self.q_eqs.len()
    }

    pub fn linear_part(&self) -> Matrix<FieldElem> {
        let n = self.nq();
        let mut a = Matrix::zeros(n, n);
        for (j, eq) in self.q_eqs.iter().enumerate() {
            for k in 0..n {
                let mut idx = vec![0; n];
                idx[k] = 1;
                a.set(j, k, eq.plain_coeff(&idx));
            }
        }
        a
    }

    pub fn is_diagonal(&self) -> bool {
        let a = self.linear_part();
        (0..a.rows).all(|i| (0..a.cols).all(|j| i == j || a.get(i, j).is_zero()))
    }

    /// Diagonal of the linear part, when the linear part is diagonal.
    pub fn lambdas(&self) -> Result<Vec<FieldElem>> {
        let a = self.linear_part();
        for i in 0..a.rows {
            for j in 0..a.cols {
                if i != j && !a.get(i, j).is_zero() {
                    return Err(Error::NotDiagonalAfterGauge { row: i + 1, col: j + 1, value: a.get(i, j).to_string() });
                }
            }
        }
        Ok((0..a.rows).map(|i| a.get(i, i).clone()).collect())
    }

    /// Nonlinear coefficient `f_{j,i}` of `q^i` in equation `j`.
    pub fn f(&self, j: usize, idx: &[u32]) -> FieldElem {
        self.q_eqs[j].plain_coeff(idx)
    }

    /// Monomials with `|i| >= 2` and nonzero coefficient.
    pub fn nonlinear_terms(&self, j: usize) -> Vec<(MultiIndex, FieldElem)> {
        self.q_eqs[j].terms().filter(|(k, _)| k.deg >= 2).map(|(k, c)| (k.idx.clone(), c.clone())).collect()
    }

    /// Speed along the curve, `X_n(s, 0)`.
    pub fn tangential_speed(&self) -> FieldElem {
        self.s_eq.constant_term()
    }
}

impl fmt::Display for ReducedSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (j, e) in self.q_eqs.iter().enumerate() {
            writeln!(f, "q{}' = {e}", j + 1)?;
        }
        if self.time_reduced {
            if let Some(t) = &self.t_eq {
                writeln!(f, "t' = {t}")?;
            }
        } else {
            writeln!(f, "s' = {}", self.s_eq)?;
        }
        Ok(())
    }
}

/// Curve coordinates `x_i = gamma_i(s) + q_i`, `x_n = s`.
pub fn reduce_to_curve(spec: &VectorFieldSpec, order: usize) -> Result<ReducedSystem> {
    spec.check_tangency()?;
    let env = spec.env(order);
    let xs = spec.components.iter().map(|c| c.eval(&env)).collect::<Result<Vec<_>>>()?;
    let xn = xs.last().unwrap().clone();
    let q_eqs = spec
        .gamma
        .iter()
        .zip(&xs)
        .map(|(g, x)| x.sub(&xn.scale(&g.derive())))
        .collect::<Result<Vec<_>>>()?;
    let mut r = ReducedSystem::from_series(q_eqs, xn)?;
    r.gamma = Some(spec.gamma.clone());
    Ok(r)
}

/// Uses `s` as the independent variable: `q' = F/X_n`, `t' = 1/X_n`.
pub fn time_reduce(r: &ReducedSystem) -> Result<ReducedSystem> {
    if r.time_reduced {
        return Ok(r.clone());
    }
    if r.tangential_speed().is_zero() {
        return Err(Error::TangentiallySingular);
    }
    let inv = r.s_eq.inv()?;
    let q_eqs = r.q_eqs.iter().map(|e| e.mul(&inv)).collect::<Result<Vec<_>>>()?;
    let nq = r.nq();
    Ok(ReducedSystem {
        order: r.order,
        q_eqs,
        s_eq: TruncSeries::constant(Alphabet::Q, nq, r.order, FieldElem::one()),
        t_eq: Some(inv),
        time_reduced: true,
        gauge: r.gauge.clone(),
        gamma: r.gamma.clone(),
    })
}

/// Substitutes `q = P Q`: `Q' = P^{-1} (F(PQ) - P' Q s'(PQ))`.
pub fn apply_gauge(r: &ReducedSystem, p: &Matrix<FieldElem>, assert_diagonal: bool) -> Result<ReducedSystem> {
    let n = r.nq();
    if p.rows != n || p.cols != n {
        return Err(Error::Input(format!("gauge matrix must be {n}x{n}")));
    }
    let pinv = p.inverse().ok_or(Error::SingularGauge)?;
    let ord = r.order;
    let lin = |row: &[FieldElem]| -> TruncSeries {
        let mut s = TruncSeries::zero(Alphabet::Q, n, ord);
        for (k, c) in row.iter().enumerate() {
            let mut idx = vec![0; n];
            idx[k] = 1;
            s.add_term(idx, Default::default(), c.clone());
        }
        s
    };
    let pq: Vec<TruncSeries> = (0..n).map(|j| lin(p.row(j))).collect();
    let dp = p.map(|x| x.derive());
    let dpq: Vec<TruncSeries> = (0..n).map(|j| lin(dp.row(j))).collect();
    let s_new = r.s_eq.compose(&pq)?;
    let mut inner = Vec::with_capacity(n);
    for j in 0..n {
        let fj = r.q_eqs[j].compose(&pq)?;
        inner.push(fj.sub(&dpq[j].mul(&s_new)?)?);
    }
    let mut q_eqs = Vec::with_capacity(n);
    for j in 0..n {
        let mut acc = TruncSeries::zero(Alphabet::Q, n, ord);
        for (k, term) in inner.iter().enumerate() {
            acc = acc.add(&term.scale(pinv.get(j, k)))?;
        }
        q_eqs.push(acc);
    }
    let t_eq = match &r.t_eq {
        Some(t) => Some(t.compose(&pq)?),
        None => None,
    };
    let gauge = match &r.gauge {
        Some(g) => g.mul(p),
        None => p.clone(),
    };
    let out = ReducedSystem { order: ord, q_eqs, s_eq: s_new, t_eq, time_reduced: r.time_reduced, gauge: Some(gauge), gamma: r.gamma.clone() };
    if assert_diagonal {
        out.lambdas()?;
    }
    Ok(out)
}

/// Linear system for the jet variables `Z_m = y^m`, `1 <= |m| <= k`.
#[derive(Clone, Debug, PartialEq)]
pub struct VESystem {
    pub order: usize,
    pub var_names: Vec<String>,
    pub vars: Vec<MultiIndex>,
    pub matrix: Matrix<FieldElem>,
}

impl VESystem {
    pub fn index_of(&self, m: &[u32]) -> Option<usize> {
        self.vars.iter().position(|v| v == m)
    }

    pub fn var_label(&self, i: usize) -> String {
        let idx: Vec<String> = self.vars[i].iter().map(|e| e.to_string()).collect();
        format!("Z[{}]", idx.join(","))
    }
}

impl fmt::Display for VESystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.vars.len() {
            write!(f, "{}' =", self.var_label(i))?;
            let mut any = false;
            for j in 0..self.vars.len() {
                let c = self.matrix.get(i, j);
                if !c.is_zero() {
                    write!(f, " + ({c})*{}", self.var_label(j))?;
                    any = true;
                }
            }
            if !any {
                write!(f, " 0")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

fn multi_indices(n: usize, k: usize) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    for d in 1..=k {
        let mut cur = vec![0u32; n];
        fn rec(pos: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
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
        if n == 0 {
            continue;
        }
        rec(0, d as u32, &mut cur, &mut out);
    }
    out
}

fn jet_system(eqs: &[TruncSeries], names: Vec<String>, k: usize) -> Result<VESystem> {
    let n = eqs.len();
    for e in eqs {
        if e.order() < k {
            return Err(Error::OrderExceedsTable(k));
        }
    }
    let vars = multi_indices(n, k);
    let pos: BTreeMap<&MultiIndex, usize> = vars.iter().enumerate().map(|(i, v)| (v, i)).collect();
    let mut m: Matrix<FieldElem> = Matrix::zeros(vars.len(), vars.len());
    for (row, mi) in vars.iter().enumerate() {
        // d/ds y^m = sum_j m_j y^{m - e_j} G_j(y)
        for j in 0..n {
            if mi[j] == 0 {
                continue;
            }
            let mj = FieldElem::from_i64(mi[j] as i64);
            for (key, c) in eqs[j].terms() {
                if !key.sym.is_neutral() {
                    return Err(Error::Input("variational equations need symbol-free coefficients".into()));
                }
                let mut target = mi.clone();
                target[j] -= 1;
                for (t, e) in target.iter_mut().zip(&key.idx) {
                    *t += e;
                }
                if let Some(&col) = pos.get(&target) {
                    let v = m.get(row, col).add(&c.mul(&mj));
                    m.set(row, col, v);
                }
            }
        }
    }
    Ok(VESystem { order: k, var_names: names, vars, matrix: m })
}

/// Variational equations of order `k` of the time-reduced system,
/// including the perturbation of `t`.
pub fn build_ve(r: &ReducedSystem, k: usize) -> Result<VESystem> {
    if !r.time_reduced {
        return Err(Error::NotTimeReduced);
    }
    let nq = r.nq();
    let t = r.t_eq.as_ref().ok_or(Error::NotTimeReduced)?;
    // extend to nq + 1 variables; the t-perturbation enters nowhere
    let widen = |e: &TruncSeries| -> TruncSeries {
        let mut w = TruncSeries::zero(Alphabet::Q, nq + 1, e.order());
        for (key, c) in e.terms() {
            let mut idx = key.idx.clone();
            idx.push(0);
            w.add_term(idx, key.sym.clone(), c.clone());
        }
        w
    };
    let mut eqs: Vec<TruncSeries> = r.q_eqs.iter().map(widen).collect();
    let t0 = t.constant_term();
    let dt = t.sub(&TruncSeries::constant(Alphabet::Q, nq, t.order(), t0))?;
    eqs.push(widen(&dt));
    let mut names: Vec<String> = (1..=nq).map(|j| format!("q{j}")).collect();
    names.push("t".into());
    jet_system(&eqs, names, k)
}

/// Normal variational equations: the jets of the `q`-equations only.
pub fn build_nve(r: &ReducedSystem, k: usize) -> Result<VESystem> {
    if !r.time_reduced {
        return Err(Error::NotTimeReduced);
    }
    jet_system(&r.q_eqs, (1..=r.nq()).map(|j| format!("q{j}")).collect(), k)
}

/// First-order variational equation of the untimed system restricted to
/// the normal directions and rewritten with `s` as time: the quotient by
/// the tangential solution.
pub fn tangential_quotient(r: &ReducedSystem) -> Result<Matrix<FieldElem>> {
    if r.time_reduced {
        return Err(Error::Input("expects the system before time reduction".into()));
    }
    let v = r.tangential_speed();
    let vi = v.try_inv().map_err(|_| Error::TangentiallySingular)?;
    Ok(r.linear_part().map(|x| x.mul(&vi)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlaceKind {
    CurveSingularity,
    VectorFieldSingularity,
    GaugeArtifact,
}

impl fmt::Display for PlaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PlaceKind::CurveSingularity => "curve-singularity",
            PlaceKind::VectorFieldSingularity => "vector-field-singularity",
            PlaceKind::GaugeArtifact => "gauge-artifact",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SingularPlace {
    pub place: Place,
    pub ramification: u32,
    /// `H_j ~ (s - s0)^rho_j` (or `s^{-rho_j}` at infinity); `None` when the
    /// residue is not a scalar of the base field.
    pub exponents: Vec<Option<ParamScalar>>,
    pub kind: PlaceKind,
}

fn collect_denominators(x: &FieldElem, out: &mut Vec<PolyS>) {
    for c in x.coords() {
        if !c.den().is_constant() {
            out.push(c.den().clone());
        }
    }
}

fn branch_polys(t: Option<&Arc<Tower>>, out: &mut Vec<PolyS>) {
    if let Some(t) = t {
        for i in 0..t.names().len() {
            let r = t.radicand(i);
            collect_denominators(r, out);
            // zeros of the radicand: its norm down to the base
            let norm = radicand_norm(r);
            if let Some(n) = norm {
                if !n.num().is_constant() {
                    out.push(n.num().clone());
                }
                if !n.den().is_constant() {
                    out.push(n.den().clone());
                }
            }
        }
    }
}

// Product of the Galois-type conjugates is not available in general; for
// elements whose coordinates are all in the base use them directly,
// otherwise take the norm through the generic trace of powers.
fn radicand_norm(r: &FieldElem) -> Option<crate::tower::RatS> {
    if let Some(b) = r.as_ratfunc() {
        return Some(b);
    }
    let t = r.tower()?;
    // characteristic polynomial of multiplication by r via Newton sums
    let d = t.dim();
    let mut p = Vec::with_capacity(d);
    let mut pw = r.clone();
    for _ in 0..d {
        p.push(pw.trace());
        pw = pw.mul(r);
    }
    // e_k from power sums
    let mut e = vec![crate::tower::RatS::one()];
    for k in 1..=d {
        let mut acc = crate::tower::RatS::zero();
        for i in 1..=k {
            let term = e[k - i].mul(&p[i - 1]);
            acc = if i % 2 == 1 { acc.add(&term) } else { acc.sub(&term) };
        }
        e.push(acc.mul(&crate::tower::RatS::from_i64(k as i64).inv()?));
    }
    Some(e[d].clone())
}

fn places_of(polys: &[PolyS]) -> Vec<Place> {
    let mut out = Vec::new();
    for f in coprime_factors(polys) {
        match f.degree() {
            Some(1) => {
                let root = f.coeff(0).neg().mul(&f.coeff(1).inv().unwrap());
                out.push(Place::Finite(root));
            }
            Some(2) => {
                out.push(Place::Quadratic { poly: f.monic(), sign: 1 });
                out.push(Place::Quadratic { poly: f.monic(), sign: -1 });
            }
            _ => {}
        }
    }
    out
}

/// Singular places of the diagonal linear part with their exponents.
/// Places of degree above two over the scalar field are not examined.
pub fn fuchsian_scan(r: &ReducedSystem) -> Result<Vec<SingularPlace>> {
    let lambdas = r.lambdas()?;
    let tower = lambdas.iter().filter_map(|l| l.tower().cloned()).max_by_key(|t| t.dim());
    let mut lam_polys = Vec::new();
    for l in &lambdas {
        collect_denominators(l, &mut lam_polys);
    }
    let mut f_polys = Vec::new();
    for j in 0..r.nq() {
        for (_, c) in r.nonlinear_terms(j) {
            collect_denominators(&c, &mut f_polys);
        }
    }
    let mut curve_polys = Vec::new();
    if let Some(g) = &r.gamma {
        for x in g {
            collect_denominators(x, &mut curve_polys);
        }
    }
    branch_polys(tower.as_ref(), &mut curve_polys);
    let mut gauge_polys = Vec::new();
    if let Some(p) = &r.gauge {
        for i in 0..p.rows {
            for j in 0..p.cols {
                collect_denominators(p.get(i, j), &mut gauge_polys);
            }
        }
    }
    let all: Vec<PolyS> = lam_polys.iter().chain(&f_polys).chain(&curve_polys).chain(&gauge_polys).cloned().collect();
    let mut candidates = places_of(&all);
    candidates.push(Place::Infinity);
    let divides = |polys: &[PolyS], pl: &Place| -> bool {
        polys.iter().any(|p| match pl {
            Place::Finite(a) => p.eval(a).is_zero(),
            Place::Quadratic { poly, .. } => p.rem(poly).is_zero(),
            Place::Infinity => false,
        })
    };
    let mut out = Vec::new();
    for pl in candidates {
        let m = ramification_at(tower.as_ref(), &pl)?;
        let mut exps = Vec::new();
        let mut singular = m > 1;
        for l in &lambdas {
            if l.is_zero() {
                exps.push(Some(ParamScalar::zero()));
                continue;
            }
            let (ord, rho) = local_exponent_of_logderiv(l, &pl, m)?;
            if ord > 1 {
                return Err(Error::NonFuchsian { place: pl.to_string(), order: ord.to_string() });
            }
            if ord == 1 {
                singular |= rho.as_ref().is_none_or(|x| !x.is_zero());
                exps.push(rho);
            } else {
                exps.push(Some(ParamScalar::zero()));
            }
        }
        let in_curve = divides(&curve_polys, &pl);
        let in_field = divides(&lam_polys, &pl) || divides(&f_polys, &pl);
        let in_gauge = divides(&gauge_polys, &pl);
        singular |= in_curve || in_field;
        if !singular {
            continue;
        }
        let kind = if in_curve {
            PlaceKind::CurveSingularity
        } else if in_gauge && !divides(&f_polys, &pl) && exps.iter().all(|e| e.as_ref().is_some_and(|x| x.is_zero())) {
            PlaceKind::GaugeArtifact
        } else {
            PlaceKind::VectorFieldSingularity
        };
        out.push(SingularPlace { place: pl, ramification: m, exponents: exps, kind });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::ElemEnv;
    use crate::scalar::rat;

    fn alpha() -> Vec<String> {
        vec!["alpha".into()]
    }

    #[test]
    fn circle() {
        let base = ElemEnv::new(None, &[]);
        let t = Tower::extend(None, "w", 2, &base.eval_str("1-s^2").unwrap()).unwrap();
        let e = ElemEnv::new(Some(t.clone()), &[]);
        let spec = VectorFieldSpec::new(vec!["x1".into(), "x2".into()], &["x2", "-x1"], vec![e.eval_str("w").unwrap()], Some(t.clone()), &[]).unwrap();
        let r = reduce_to_curve(&spec, 3).unwrap();
        let q = SeriesEnv::new(Alphabet::Q, 3, vec!["q1".into()], Some(t.clone()), &[]);
        assert_eq!(r.q_eqs[0], q.eval_str("-q1*s/w").unwrap());
        assert_eq!(r.s_eq, q.eval_str("-q1 - w").unwrap());
        let bad = VectorFieldSpec::new(vec!["x1".into(), "x2".into()], &["x2", "x1"], vec![e.eval_str("w").unwrap()], Some(t), &[]);
        assert!(matches!(bad, Err(Error::NotTangent { component: 1, .. })));
    }

    #[test]
    fn diagonal_line() {
        let spec = VectorFieldSpec::new(vec!["x1".into(), "x2".into()], &["x1", "x2"], vec![FieldElem::s()], None, &[]).unwrap();
        let r = reduce_to_curve(&spec, 3).unwrap();
        let q = SeriesEnv::new(Alphabet::Q, 3, vec!["q1".into()], None, &[]);
        assert_eq!(r.q_eqs[0], q.eval_str("q1").unwrap());
        assert_eq!(r.s_eq, q.eval_str("s").unwrap());
    }

    #[test]
    fn time_reduction() {
        let r = ReducedSystem::parse(&["alpha*q1/(s*(q1^3+q1^2*s+s))"], "1/(q1^3+q1^2*s+s)", 4, None, &alpha()).unwrap();
        let tr = time_reduce(&r).unwrap();
        let q = SeriesEnv::new(Alphabet::Q, 4, vec!["q1".into()], None, &alpha());
        assert_eq!(tr.q_eqs[0], q.eval_str("alpha*q1/s").unwrap());
        assert_eq!(tr.t_eq.clone().unwrap(), q.eval_str("q1^3+q1^2*s+s").unwrap());
        let r = ReducedSystem::parse(&["q1"], "1+q1", 2, None, &[]).unwrap();
        let tr = time_reduce(&r).unwrap();
        assert_eq!(tr.q_eqs[0].to_string(), "(1)*q1 + (-1)*q1^2 + O(3)");
        let r = ReducedSystem::parse(&["q1"], "q1", 2, None, &[]).unwrap();
        assert_eq!(time_reduce(&r), Err(Error::TangentiallySingular));
        let ve = build_nve(&time_reduce(&ReducedSystem::parse(&["alpha*q1"], "s", 3, None, &alpha()).unwrap()).unwrap(), 1).unwrap();
        assert_eq!(ve.matrix.get(0, 0), &ElemEnv::new(None, &alpha()).eval_str("alpha/s").unwrap());
    }

    #[test]
    fn gauges() {
        let r = ReducedSystem::parse(&["q1/s + q1^2"], "1", 3, None, &[]).unwrap();
        let p = Matrix::from_rows(vec![vec![FieldElem::s().try_inv().unwrap()]]);
        let g = apply_gauge(&r, &p, true).unwrap();
        assert_eq!(g.lambdas().unwrap()[0], FieldElem::from_rational(&rat(2, 1)).mul(&FieldElem::s().try_inv().unwrap()));
        let back = apply_gauge(&g, &p.inverse().unwrap(), false).unwrap();
        assert_eq!(back.q_eqs, r.q_eqs);
        assert_eq!(apply_gauge(&r, &Matrix::identity(1), true).unwrap().q_eqs, r.q_eqs);
        assert_eq!(apply_gauge(&r, &Matrix::zeros(1, 1), true), Err(Error::SingularGauge));
    }

    #[test]
    fn example_one_gauge() {
        let base = ElemEnv::new(None, &[]);
        let t = Tower::extend(None, "w", 2, &base.eval_str("1+s^2").unwrap()).unwrap();
        let e = ElemEnv::new(Some(t.clone()), &alpha());
        let r = ReducedSystem::parse(&["alpha*q2", "(alpha*q1 - s*q2)/(s^2+1)"], "1", 2, Some(t.clone()), &alpha()).unwrap();
        let p = Matrix::from_rows(vec![
            vec![FieldElem::one(), FieldElem::one()],
            vec![e.eval_str("1/w").unwrap(), e.eval_str("-1/w").unwrap()],
        ]);
        let g = apply_gauge(&r, &p, true).unwrap();
        let l = g.lambdas().unwrap();
        assert_eq!(l[0], e.eval_str("alpha/w").unwrap());
        assert_eq!(l[1], e.eval_str("-alpha/w").unwrap());
    }

    #[test]
    fn jets() {
        let r = time_reduce(&ReducedSystem::parse(&["alpha/s*q1 + q1^2/s"], "1", 3, None, &alpha()).unwrap()).unwrap();
        let e = ElemEnv::new(None, &alpha());
        let ve = build_nve(&r, 2).unwrap();
        let z1 = ve.index_of(&[1]).unwrap();
        let z2 = ve.index_of(&[2]).unwrap();
        assert_eq!(ve.matrix.get(z1, z1), &e.eval_str("alpha/s").unwrap());
        assert_eq!(ve.matrix.get(z1, z2), &e.eval_str("1/s").unwrap());
        assert_eq!(ve.matrix.get(z2, z2), &e.eval_str("2*alpha/s").unwrap());
        assert!(ve.matrix.get(z2, z1).is_zero());
        let ve3 = build_nve(&r, 3).unwrap();
        let z3 = ve3.index_of(&[3]).unwrap();
        assert_eq!(ve3.matrix.get(z3, z3), &e.eval_str("3*alpha/s").unwrap());
        assert_eq!(ve3.matrix.get(ve3.index_of(&[2]).unwrap(), z3), &e.eval_str("2/s").unwrap());
        assert_eq!(build_nve(&r, 4), Err(Error::OrderExceedsTable(4)));
        let full = build_ve(&r, 1).unwrap();
        assert_eq!(full.vars.len(), 2);
    }

    #[test]
    fn quotient_matches_nve() {
        let base = ElemEnv::new(None, &[]);
        let t = Tower::extend(None, "w", 2, &base.eval_str("1-s^2").unwrap()).unwrap();
        let e = ElemEnv::new(Some(t.clone()), &[]);
        let spec = VectorFieldSpec::new(vec!["x1".into(), "x2".into()], &["x2", "-x1"], vec![e.eval_str("w").unwrap()], Some(t), &[]).unwrap();
        let r = reduce_to_curve(&spec, 2).unwrap();
        let nve = build_nve(&time_reduce(&r).unwrap(), 1).unwrap();
        assert_eq!(nve.matrix, tangential_quotient(&r).unwrap());
    }

    #[test]
    fn scan() {
        let r = ReducedSystem::parse(&["alpha/s*q1"], "1", 2, None, &alpha()).unwrap();
        let places = fuchsian_scan(&r).unwrap();
        let a = ParamScalar::named("alpha");
        assert_eq!(places.len(), 2);
        assert_eq!(places[0].place, Place::Finite(ParamScalar::zero()));
        assert_eq!(places[0].exponents, vec![Some(a.clone())]);
        assert_eq!(places[1].place, Place::Infinity);
        assert_eq!(places[1].exponents, vec![Some(a.neg())]);
        let r = ReducedSystem::parse(&["q1/s^2"], "1", 2, None, &[]).unwrap();
        assert!(matches!(fuchsian_scan(&r), Err(Error::NonFuchsian { .. })));
    }

    #[test]
    fn scan_example_two() {
        let base = ElemEnv::new(None, &[]);
        let t = Tower::extend(None, "w", 2, &base.eval_str("1+s^2").unwrap()).unwrap();
        let r = ReducedSystem::parse(&["(s/(2*(1+s^2)) + alpha/w)*q1", "(s/(2*(1+s^2)) - alpha/w)*q2"], "1", 2, Some(t), &alpha()).unwrap();
        let places = fuchsian_scan(&r).unwrap();
        let quarter = ParamScalar::from_rational(&rat(1, 4));
        let finite: Vec<_> = places.iter().filter(|p| matches!(p.place, Place::Quadratic { .. })).collect();
        assert_eq!(finite.len(), 2);
        for p in finite {
            assert_eq!(p.ramification, 2);
            assert_eq!(p.exponents, vec![Some(quarter.clone()), Some(quarter.clone())]);
        }
        let inf = places.iter().find(|p| p.place == Place::Infinity).unwrap();
        let a = ParamScalar::named("alpha");
        let mhalf = ParamScalar::from_rational(&rat(-1, 2));
        assert_eq!(inf.exponents, vec![Some(mhalf.sub(&a)), Some(mhalf.add(&a))]);
    }
}
