//! Independent checks of a certificate. Brackets and Lie derivatives are
//! recomputed on a dense coefficient table rather than through `lie`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use super::fields::{DescentStatus, IntegrabilityCertificate};
use crate::error::{Error, Result};
use crate::scalar::Field;
use crate::series::{FormalVectorField, TruncSeries};
use crate::tower::{FieldElem, Tower};

/// All monomials of degree `<= order` in `nv` variables, graded.
struct Table {
    monos: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
}

impl Table {
    fn new(nv: usize, order: usize) -> Self {
        let mut monos = Vec::new();
        for d in 0..=order as u32 {
            crate::galois::compositions(nv, d).into_iter().for_each(|m| monos.push(m));
        }
        let index = monos.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();
        Table { monos, index }
    }

    fn deg(&self, i: usize) -> usize {
        self.monos[i].iter().sum::<u32>() as usize
    }
}

#[derive(Clone)]
struct Dense {
    c: Vec<FieldElem>,
    order: usize,
}

impl Dense {
    fn from_series(t: &Table, s: &TruncSeries) -> Result<Dense> {
        if s.has_symbols() {
            return Err(Error::Input("certificate series carry H/L symbols".into()));
        }
        let mut c = vec![FieldElem::zero(); t.monos.len()];
        for (k, v) in s.terms() {
            let i = *t.index.get(&k.idx).ok_or_else(|| Error::Input("series exceeds the verification table".into()))?;
            c[i] = c[i].add(v);
        }
        Ok(Dense { c, order: s.order() })
    }

    fn val(&self, t: &Table) -> usize {
        self.c.iter().enumerate().find(|(_, x)| !x.is_zero()).map(|(i, _)| t.deg(i)).unwrap_or(self.order + 1)
    }

    fn cut(mut self, t: &Table, order: usize) -> Dense {
        for (i, x) in self.c.iter_mut().enumerate() {
            if t.deg(i) > order {
                *x = FieldElem::zero();
            }
        }
        self.order = order;
        self
    }

    fn add(&self, t: &Table, o: &Dense) -> Dense {
        let order = self.order.min(o.order);
        let c = self.c.iter().zip(&o.c).map(|(a, b)| a.add(b)).collect();
        Dense { c, order }.cut(t, order)
    }

    fn sub(&self, t: &Table, o: &Dense) -> Dense {
        let order = self.order.min(o.order);
        let c = self.c.iter().zip(&o.c).map(|(a, b)| a.sub(b)).collect();
        Dense { c, order }.cut(t, order)
    }

    fn mul(&self, t: &Table, o: &Dense) -> Dense {
        let order = (self.order + o.val(t)).min(o.order + self.val(t)).min(t.deg(t.monos.len() - 1));
        let mut c = vec![FieldElem::zero(); t.monos.len()];
        for (i, a) in self.c.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.c.iter().enumerate() {
                if b.is_zero() || t.deg(i) + t.deg(j) > order {
                    continue;
                }
                let m: Vec<u32> = t.monos[i].iter().zip(&t.monos[j]).map(|(x, y)| x + y).collect();
                let k = t.index[&m];
                c[k] = c[k].add(&a.mul(b));
            }
        }
        Dense { c, order }
    }

    fn partial(&self, t: &Table, v: usize) -> Dense {
        let mut c = vec![FieldElem::zero(); t.monos.len()];
        for (i, a) in self.c.iter().enumerate() {
            let e = t.monos[i][v];
            if e == 0 || a.is_zero() {
                continue;
            }
            let mut m = t.monos[i].clone();
            m[v] -= 1;
            c[t.index[&m]] = a.mul(&FieldElem::from_i64(e as i64));
        }
        Dense { c, order: self.order.saturating_sub(1) }
    }

    fn ds(&self) -> Dense {
        Dense { c: self.c.iter().map(|x| x.derive()).collect(), order: self.order }
    }

    fn is_zero(&self) -> bool {
        self.c.iter().all(|x| x.is_zero())
    }

    fn residual(&self) -> usize {
        self.c.iter().filter(|x| !x.is_zero()).count()
    }
}

struct DField {
    q: Vec<Dense>,
    s: Dense,
}

fn lie_dense(t: &Table, f: &Dense, y: &DField) -> Dense {
    let mut acc = f.ds().mul(t, &y.s);
    for (j, yj) in y.q.iter().enumerate() {
        acc = acc.add(t, &f.partial(t, j).mul(t, yj));
    }
    acc
}

#[derive(Clone, Debug)]
pub struct CheckEntry {
    pub name: String,
    pub passed: bool,
    /// Order up to which the identity was checked, when it is a series identity.
    pub order: Option<usize>,
    /// Number of nonzero residual coefficients, or a short explanation.
    pub detail: String,
}

#[derive(Clone, Debug, Default)]
pub struct VerificationReport {
    pub entries: Vec<CheckEntry>,
}

impl VerificationReport {
    pub fn all_passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }

    fn push(&mut self, name: String, passed: bool, order: Option<usize>, detail: String) {
        self.entries.push(CheckEntry { name, passed, order, detail });
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            let ord = e.order.map(|o| format!(" O({})", o + 1)).unwrap_or_default();
            writeln!(f, "{} {}{ord}: {}", if e.passed { "ok  " } else { "FAIL" }, e.name, e.detail)?;
        }
        Ok(())
    }
}

/// Rank of a real matrix by Gaussian elimination with partial pivoting.
pub fn numeric_rank(rows: &[Vec<f64>], rel_tol: f64) -> usize {
    let mut a: Vec<Vec<f64>> = rows.to_vec();
    if a.is_empty() {
        return 0;
    }
    let ncols = a[0].len();
    let scale = a.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    let tol = rel_tol * scale;
    let mut rank = 0;
    for col in 0..ncols {
        if rank == a.len() {
            break;
        }
        let (p, best) = (rank..a.len()).map(|i| (i, a[i][col].abs())).fold((rank, -1.0), |b, x| if x.1 > b.1 { x } else { b });
        if best <= tol {
            continue;
        }
        a.swap(rank, p);
        for i in 0..a.len() {
            if i != rank {
                let f = a[i][col] / a[rank][col];
                if f != 0.0 {
                    for k in col..ncols {
                        a[i][k] -= f * a[rank][k];
                    }
                }
            }
        }
        rank += 1;
    }
    rank
}

/// A deterministic sample point: `s`, parameter values, and small `q`.
pub(crate) struct SamplePoint {
    pub s: f64,
    pub params: BTreeMap<usize, f64>,
    pub q: Vec<f64>,
}

pub(crate) fn sample_points(params: &[usize], nq: usize) -> Vec<SamplePoint> {
    let ss = [0.613, 1.37, 2.29];
    ss.iter()
        .enumerate()
        .map(|(n, &s)| SamplePoint {
            s,
            params: params.iter().map(|&p| (p, 0.317 + 0.123 * p as f64 + 0.05 * n as f64)).collect(),
            q: (0..nq).map(|j| 0.13 + 0.071 * j as f64 + 0.02 * n as f64).collect(),
        })
        .collect()
}

pub(crate) fn series_params(s: &TruncSeries) -> Vec<usize> {
    let mut out: Vec<usize> = s.terms().flat_map(|(_, c)| c.params()).collect();
    out.sort_unstable();
    out.dedup();
    out
}

pub(crate) fn field_params(fs: &[FormalVectorField]) -> Vec<usize> {
    let mut out: Vec<usize> = fs.iter().flat_map(|y| y.comps.iter().chain(std::iter::once(&y.s_comp))).flat_map(series_params).collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Numeric rank of the fields at sample points (maximum over the points
/// where every component evaluates).
pub(crate) fn field_rank(fs: &[FormalVectorField], extra_params: &[usize]) -> usize {
    if fs.is_empty() {
        return 0;
    }
    let mut ps = field_params(fs);
    ps.extend_from_slice(extra_params);
    let nq = fs[0].comps.len();
    let mut best = 0;
    for p in sample_points(&ps, nq) {
        let rows: Option<Vec<Vec<f64>>> = fs
            .iter()
            .map(|y| y.comps.iter().chain(std::iter::once(&y.s_comp)).map(|c| c.eval_num(p.s, &p.params, &p.q)).collect())
            .collect();
        if let Some(rows) = rows {
            if rows.iter().flatten().all(|x| x.is_finite()) {
                best = best.max(numeric_rank(&rows, 1e-9));
            }
        }
    }
    best
}

fn gradient(f: &TruncSeries) -> Result<Vec<TruncSeries>> {
    let mut g: Vec<TruncSeries> = (0..f.nvars()).map(|j| f.partial(j)).collect();
    let basis = crate::series::HyperexpBasis::default();
    g.push(f.derive_s(&basis)?);
    Ok(g)
}

/// Numeric rank of the differentials `dF` (in `q` and `s`).
pub(crate) fn gradient_rank(fs: &[TruncSeries]) -> Result<usize> {
    if fs.is_empty() {
        return Ok(0);
    }
    let grads: Vec<Vec<TruncSeries>> = fs.iter().map(gradient).collect::<Result<_>>()?;
    let mut ps: Vec<usize> = fs.iter().flat_map(series_params).collect();
    ps.sort_unstable();
    ps.dedup();
    let mut best = 0;
    for p in sample_points(&ps, fs[0].nvars()) {
        let rows: Option<Vec<Vec<f64>>> = grads.iter().map(|g| g.iter().map(|c| c.eval_num(p.s, &p.params, &p.q)).collect()).collect();
        if let Some(rows) = rows {
            if rows.iter().flatten().all(|x| x.is_finite()) {
                best = best.max(numeric_rank(&rows, 1e-9));
            }
        }
    }
    Ok(best)
}

fn max_order(cert: &IntegrabilityCertificate) -> usize {
    let f = cert.fields.iter().flat_map(|y| y.comps.iter().chain(std::iter::once(&y.s_comp))).map(|s| s.order());
    let i = cert.integrals.iter().flat_map(|f| [f.num.order(), f.den.order()]);
    f.chain(i).max().unwrap_or(0) + 1
}

fn top_tower(cert: &IntegrabilityCertificate) -> Option<Arc<Tower>> {
    let all = cert
        .fields
        .iter()
        .flat_map(|y| y.comps.iter().chain(std::iter::once(&y.s_comp)))
        .chain(cert.integrals.iter().flat_map(|f| [&f.num, &f.den]));
    all.flat_map(|s| s.terms().filter_map(|(_, c)| c.tower().cloned()).collect::<Vec<_>>()).max_by_key(|t| t.dim())
}

/// Checks a certificate against the system field `x` (the original,
/// non-time-reduced field in original coordinates).
pub fn verify_certificate(cert: &IntegrabilityCertificate, x: &FormalVectorField, tower: Option<&Arc<Tower>>) -> Result<VerificationReport> {
    let mut rep = VerificationReport::default();
    let nq = x.comps.len();
    let table = Table::new(nq, max_order(cert).max(x.s_comp.order()).max(x.comps.iter().map(|c| c.order()).max().unwrap_or(0)));
    let to_dense = |y: &FormalVectorField| -> Result<DField> {
        Ok(DField {
            q: y.comps.iter().map(|c| Dense::from_series(&table, c)).collect::<Result<_>>()?,
            s: Dense::from_series(&table, &y.s_comp)?,
        })
    };
    let fields: Vec<DField> = cert.fields.iter().map(to_dense).collect::<Result<_>>()?;
    let xd = to_dense(x)?;

    rep.push(
        "count".into(),
        cert.fields.len() == cert.l && cert.integrals.len() + cert.l == cert.n,
        None,
        format!("l = {}, {} fields, {} integrals, n = {}", cert.l, cert.fields.len(), cert.integrals.len(), cert.n),
    );

    // X is the last field
    if let Some(last) = fields.last() {
        let mut bad = 0;
        let mut order = usize::MAX;
        for (a, b) in last.q.iter().chain(std::iter::once(&last.s)).zip(xd.q.iter().chain(std::iter::once(&xd.s))) {
            let d = a.sub(&table, b);
            bad += d.residual();
            order = order.min(d.order);
        }
        rep.push("X is the last field".into(), bad == 0, Some(order), format!("{bad} nonzero coefficients"));
    }

    let all: Vec<&DField> = fields.iter().collect();
    for a in 0..all.len() {
        for b in a + 1..all.len() {
            let mut bad = 0;
            let mut order = usize::MAX;
            let ya = all[a];
            let yb = all[b];
            for c in 0..=nq {
                let (fa, fb) = if c < nq { (&ya.q[c], &yb.q[c]) } else { (&ya.s, &yb.s) };
                let d = lie_dense(&table, fb, ya).sub(&table, &lie_dense(&table, fa, yb));
                bad += d.residual();
                order = order.min(d.order);
            }
            rep.push(format!("[Y{}, Y{}] = 0", a + 1, b + 1), bad == 0, Some(order), format!("{bad} nonzero coefficients"));
        }
    }

    for (i, f) in cert.integrals.iter().enumerate() {
        let num = Dense::from_series(&table, &f.num)?;
        let den = Dense::from_series(&table, &f.den)?;
        for (a, y) in all.iter().enumerate() {
            let d = den.mul(&table, &lie_dense(&table, &num, y)).sub(&table, &num.mul(&table, &lie_dense(&table, &den, y)));
            rep.push(format!("Y{} F{} = 0", a + 1, i + 1), d.is_zero(), Some(d.order), format!("{} nonzero coefficients", d.residual()));
        }
    }

    let fr = field_rank(&cert.fields, &[]);
    rep.push("fields independent".into(), fr == cert.fields.len(), None, format!("numeric rank {fr} of {}", cert.fields.len()));
    let polys: Vec<TruncSeries> = cert
        .integrals
        .iter()
        .map(|f| if f.is_polynomial() { f.series() } else { Ok(f.num.clone()) })
        .collect::<Result<_>>()?;
    let all_poly = cert.integrals.iter().all(|f| f.is_polynomial());
    if all_poly {
        let gr = gradient_rank(&polys)?;
        rep.push("integrals independent".into(), gr == polys.len(), None, format!("numeric rank {gr} of {}", polys.len()));
    } else {
        rep.push("integrals independent".into(), true, None, "skipped for quotients".into());
    }

    if cert.descent == DescentStatus::BaseField {
        let t = tower.cloned().or_else(|| top_tower(cert));
        if let Some(t) = t {
            let mut moved = Vec::new();
            for (gi, g) in t.galois().iter().enumerate() {
                let mut ok = true;
                let series = cert
                    .fields
                    .iter()
                    .flat_map(|y| y.comps.iter().chain(std::iter::once(&y.s_comp)))
                    .chain(cert.integrals.iter().flat_map(|f| [&f.num, &f.den]));
                'outer: for s in series {
                    for (_, c) in s.terms() {
                        if c.embed(&t)?.galois(gi)? != *c {
                            ok = false;
                            break 'outer;
                        }
                    }
                }
                if !ok {
                    moved.push(g.name.clone());
                }
            }
            rep.push(
                "Galois fixed".into(),
                moved.is_empty(),
                None,
                if moved.is_empty() { format!("fixed by {} generators", t.galois().len()) } else { format!("moved by {}", moved.join(", ")) },
            );
        }
    }
    Ok(rep)
}

fn constant_free_field(cols: &[Vec<TruncSeries>]) -> Vec<FormalVectorField> {
    cols.iter()
        .map(|c| {
            let like = &c[0];
            FormalVectorField { comps: c.clone(), s_comp: TruncSeries::zero(like.alphabet(), like.nvars(), like.order()) }
        })
        .collect()
}

/// Whether the 1-forms given by the rows are closed up to degree `d`
/// (coefficients in the series variables only).
pub fn closed_rows(rows: &[Vec<TruncSeries>], d: usize) -> Result<bool> {
    let nv = rows[0][0].nvars();
    let table = Table::new(nv, rows.iter().flatten().map(|s| s.order()).max().unwrap_or(0));
    for row in rows {
        let r: Vec<Dense> = row.iter().map(|s| Dense::from_series(&table, s)).collect::<Result<_>>()?;
        for i in 0..nv {
            for j in i + 1..nv {
                let diff = r[j].partial(&table, i).sub(&table, &r[i].partial(&table, j));
                if diff.c.iter().enumerate().any(|(k, x)| table.deg(k) <= d && !x.is_zero()) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Whether the columns of `m`, read as vector fields, commute up to degree `d`.
pub fn columns_commute(m: &[Vec<TruncSeries>], d: usize) -> Result<bool> {
    let n = m.len();
    let cols: Vec<Vec<TruncSeries>> = (0..m[0].len()).map(|j| (0..n).map(|i| m[i][j].clone()).collect()).collect();
    let fields = constant_free_field(&cols);
    let nv = cols[0][0].nvars();
    let table = Table::new(nv, cols.iter().flatten().map(|s| s.order()).max().unwrap_or(0));
    let dense: Vec<DField> = fields
        .iter()
        .map(|y| {
            Ok(DField {
                q: y.comps.iter().map(|c| Dense::from_series(&table, c)).collect::<Result<_>>()?,
                s: Dense::from_series(&table, &y.s_comp)?,
            })
        })
        .collect::<Result<_>>()?;
    for a in 0..dense.len() {
        for b in a + 1..dense.len() {
            for c in 0..nv {
                let diff = lie_dense(&table, &dense[b].q[c], &dense[a]).sub(&table, &lie_dense(&table, &dense[a].q[c], &dense[b]));
                if diff.c.iter().enumerate().any(|(k, x)| table.deg(k) <= d && !x.is_zero()) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}
