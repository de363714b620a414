//! Numeric cross-check of a formal flow: integrate the time-reduced system
//! from `phi(s_start, c)` and compare with `phi(s_end, c H(s_end))`.

use std::collections::BTreeMap;

use num_traits::{Float, FromPrimitive};

use super::FormalFlow;
use crate::error::{Error, Result};
use crate::reduction::ReducedSystem;
use crate::series::TruncSeries;

#[derive(Clone, Debug)]
pub struct OracleRow {
    pub c: f64,
    pub error: f64,
}

#[derive(Clone, Debug)]
pub struct OracleReport {
    pub order: usize,
    pub rows: Vec<OracleRow>,
    /// Least-squares slope of `ln error` against `ln |c|`.
    pub slope: f64,
}

impl OracleReport {
    /// Whether the error decays at least like `|c|^(order + 1)` up to `tol`.
    pub fn slope_ok(&self, tol: f64) -> bool {
        self.slope >= (self.order + 1) as f64 - tol
    }
}

fn cast<F: FromPrimitive>(x: f64) -> F {
    F::from_f64(x).expect("f64 is representable")
}

/// Value of a series at `(s, vars)`; `H` and `L` symbols take the values in
/// `h` and `l`.
fn eval<F: Float + FromPrimitive>(p: &TruncSeries, s: F, params: &BTreeMap<usize, F>, vars: &[F], h: &[F], l: &[F]) -> Option<F> {
    let mut acc = F::zero();
    for (k, c) in p.terms() {
        let mut t = c.eval_num(s, params)?;
        for (x, &e) in vars.iter().zip(&k.idx) {
            t = t * x.powi(e as i32);
        }
        for (&j, &e) in &k.sym.h {
            t = t * h.get(j)?.powi(e);
        }
        for (&j, &e) in &k.sym.l {
            t = t * l.get(j)?.powi(e as i32);
        }
        acc = acc + t;
    }
    Some(acc)
}

struct Rhs<'a, F> {
    r: &'a ReducedSystem,
    flow: &'a FormalFlow,
    params: BTreeMap<usize, F>,
}

impl<F: Float + FromPrimitive> Rhs<'_, F> {
    /// State: `q (m)`, `t`, `H (m)`, `L (nl)`.
    fn f(&self, s: F, y: &[F]) -> Option<Vec<F>> {
        let m = self.flow.nq();
        let q = &y[..m];
        let mut out = Vec::with_capacity(y.len());
        for e in &self.r.q_eqs {
            out.push(eval(e, s, &self.params, q, &[], &[])?);
        }
        out.push(eval(self.r.t_eq.as_ref()?, s, &self.params, q, &[], &[])?);
        for j in 0..m {
            out.push(self.flow.basis.h[j].eval_num(s, &self.params)? * y[m + 1 + j]);
        }
        for d in &self.flow.basis.l_derivs {
            out.push(d.eval_num(s, &self.params)?);
        }
        if out.iter().all(|x| x.is_finite() && x.abs() < cast(1e12)) {
            Some(out)
        } else {
            None
        }
    }
}

fn axpy<F: Float>(y: &[F], a: F, k: &[F]) -> Vec<F> {
    y.iter().zip(k).map(|(&y, &k)| y + a * k).collect()
}

fn rk4<F: Float + FromPrimitive>(rhs: &Rhs<F>, s0: F, s1: F, y0: Vec<F>, steps: usize) -> Option<Vec<F>> {
    let h = (s1 - s0) / cast(steps as f64);
    let two: F = cast(2.0);
    let six: F = cast(6.0);
    let mut y = y0;
    let mut s = s0;
    for _ in 0..steps {
        let k1 = rhs.f(s, &y)?;
        let k2 = rhs.f(s + h / two, &axpy(&y, h / two, &k1))?;
        let k3 = rhs.f(s + h / two, &axpy(&y, h / two, &k2))?;
        let k4 = rhs.f(s + h, &axpy(&y, h, &k3))?;
        y = (0..y.len()).map(|i| y[i] + h / six * (k1[i] + two * k2[i] + two * k3[i] + k4[i])).collect();
        s = s + h;
    }
    Some(y)
}

/// Integrates the time-reduced system `r` along `s_start -> s_end` from
/// `phi(s_start, c 1)` for each `c` and reports the end-point error of the
/// flow. `params` must give a value to every parameter.
pub fn numeric_flow_oracle<F: Float + FromPrimitive>(
    r: &ReducedSystem,
    flow: &FormalFlow,
    params: &BTreeMap<usize, f64>,
    c_values: &[f64],
    s_start: f64,
    s_end: f64,
    steps: usize,
) -> Result<OracleReport> {
    if !r.time_reduced {
        return Err(Error::NotTimeReduced);
    }
    let m = flow.nq();
    let nl = flow.basis.l_derivs.len();
    let pf: BTreeMap<usize, F> = params.iter().map(|(&k, &v)| (k, cast(v))).collect();
    let rhs = Rhs { r, flow, params: pf.clone() };
    let (sa, sb): (F, F) = (cast(s_start), cast(s_end));
    let near = |what: &str| Error::PathNearSingularity(format!("{what} on [{s_start}, {s_end}]"));
    let mut rows = Vec::new();
    for &c in c_values {
        let cf: F = cast(c);
        let u0 = vec![cf; m];
        let ones = vec![F::one(); m];
        let zeros = vec![F::zero(); nl];
        let mut y0 = Vec::with_capacity(2 * m + 1 + nl);
        for p in &flow.phi {
            y0.push(eval(p, sa, &pf, &u0, &ones, &zeros).ok_or_else(|| near("flow start"))?);
        }
        y0.push(eval(&flow.phi_t, sa, &pf, &u0, &ones, &zeros).ok_or_else(|| near("flow start"))?);
        y0.extend(ones.iter().copied());
        y0.extend(zeros.iter().copied());
        let y = rk4(&rhs, sa, sb, y0, steps).ok_or_else(|| near("integration"))?;
        let h: Vec<F> = y[m + 1..2 * m + 1].to_vec();
        let l: Vec<F> = y[2 * m + 1..].to_vec();
        let u: Vec<F> = h.iter().map(|&x| cf * x).collect();
        let mut err = F::zero();
        for (j, p) in flow.phi.iter().enumerate() {
            let v = eval(p, sb, &pf, &u, &h, &l).ok_or_else(|| near("flow end"))?;
            err = err.max((v - y[j]).abs());
        }
        let v = eval(&flow.phi_t, sb, &pf, &u, &h, &l).ok_or_else(|| near("flow end"))?;
        err = err.max((v - y[m]).abs());
        rows.push(OracleRow { c, error: err.to_f64().unwrap_or(f64::NAN) });
    }
    let pts: Vec<(f64, f64)> = rows.iter().filter(|r| r.error > 0.0).map(|r| (r.c.abs().ln(), r.error.ln())).collect();
    let slope = if pts.len() >= 2 {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    } else {
        f64::INFINITY
    };
    Ok(OracleReport { order: flow.order, rows, slope })
}
