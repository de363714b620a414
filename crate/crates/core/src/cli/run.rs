//! The batch pipeline behind each command.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::sync::Arc;
use std::time::Instant;

use super::problem::ProblemFile;
use super::report::*;
use crate::error::{Error, Result};
use crate::galois::{angles_from_exponents, diophantine_eval, local_extension_check, relation_lattice, LocalCheck, ResonanceReport};
use crate::integrability::{
    build_certificate, formal_flow, galois_descent, linearize, verify_certificate, DescentOutcome, DescentStatus, FlowOutcome,
    FormalFlow, IntegrabilityCertificate, LinearizeOutcome, VerificationReport,
};
use crate::param::{param_name, ParamScalar};
use crate::reduction::{apply_gauge, fuchsian_scan, reduce_to_curve, time_reduce, ReducedSystem, SingularPlace};
use crate::scalar::Field;
use crate::series::FormalVectorField;
use crate::tower::{FieldElem, Tower};

pub const DEFAULT_ORDER: usize = 4;
pub const DEFAULT_NU_MAX: usize = 24;
const DIOPHANTINE_BUDGET: usize = 1 << 20;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Command {
    Analyze,
    Integrate,
    /// Carries the certificate file contents.
    Verify(String),
    Linearize,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Analyze => "analyze",
            Command::Integrate => "integrate",
            Command::Verify(_) => "verify",
            Command::Linearize => "linearize",
        }
    }
}

/// Command-line overrides; `None` falls back to the problem file, then to
/// the defaults.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub order: Option<usize>,
    pub k_max: Option<usize>,
    pub nu_max: Option<usize>,
    pub base_point: Option<String>,
    pub params: BTreeMap<String, f64>,
}

pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Input(_)
        | Error::NotTangent { .. }
        | Error::SingularGauge
        | Error::GaugeRequired(_)
        | Error::NotDiagonalAfterGauge { .. }
        | Error::SchemaMismatch(_)
        | Error::UndeclaredGenerator(_)
        | Error::InvalidTower(_)
        | Error::ZeroDivisor { .. }
        | Error::TangentiallySingular => 3,
        _ => 2,
    }
}

struct Ctx {
    rep: RunReport,
    timing: BTreeMap<String, u64>,
}

impl Ctx {
    fn step<T>(&mut self, name: &str, f: impl FnOnce(&mut Self) -> Result<(T, String)>) -> Result<T> {
        let t0 = Instant::now();
        let out = f(self);
        self.timing.insert(name.to_string(), t0.elapsed().as_millis() as u64);
        match out {
            Ok((v, detail)) => {
                self.rep.stage(name, "ok", detail);
                Ok(v)
            }
            Err(e) => {
                self.rep.stage(name, "failed", e.to_string());
                Err(e)
            }
        }
    }

    fn finish(mut self, verdict: impl Into<String>, code: i32) -> (RunReport, BTreeMap<String, u64>) {
        self.rep.verdict = verdict.into();
        self.rep.exit_code = code;
        (self.rep, self.timing)
    }

    fn fail(self, e: &Error) -> (RunReport, BTreeMap<String, u64>) {
        let code = exit_code_for(e);
        let verdict = if code == 3 { format!("input error: {e}") } else { format!("cannot certify: {e}") };
        self.finish(verdict, code)
    }
}

/// Output of a run: the report plus per-stage wall-clock times.
pub struct RunOutput {
    pub report: RunReport,
    pub timing_ms: BTreeMap<String, u64>,
}

pub fn run(cmd: &Command, problem_src: &str, opts: &RunOptions) -> RunOutput {
    let mut ctx = Ctx { rep: RunReport { schema_version: SCHEMA_VERSION, command: cmd.name().into(), ..Default::default() }, timing: BTreeMap::new() };
    let (report, timing_ms) = match pipeline(&mut ctx, cmd, problem_src, opts) {
        Ok((verdict, code)) => ctx.finish(verdict, code),
        Err(e) => ctx.fail(&e),
    };
    RunOutput { report, timing_ms }
}

struct Setup {
    pf: ProblemFile,
    order: usize,
    k_max: usize,
    nu_max: usize,
    s0: Option<ParamScalar>,
    values: BTreeMap<usize, f64>,
    tower: Option<Arc<Tower>>,
}

fn pipeline(ctx: &mut Ctx, cmd: &Command, src: &str, opts: &RunOptions) -> Result<(String, i32)> {
    let pf = ctx.step("parse", |_| {
        let pf = ProblemFile::parse(src)?;
        let d = format!("{} coordinates, {} parameters", pf.coords.len(), pf.params.len());
        Ok((pf, d))
    })?;
    for k in opts.params.keys() {
        if !pf.params.contains(k) {
            let e = Error::Input(format!("--param {k}: not a declared parameter"));
            ctx.rep.stage("parse", "failed", e.to_string());
            return Err(e);
        }
    }
    let order = opts.order.or(pf.options.order).unwrap_or(DEFAULT_ORDER).max(1);
    let input_order = pf.options.input_order.unwrap_or(2 * order + 2).max(order + 1);
    let k_max = opts.k_max.or(pf.options.k_max).unwrap_or(order);
    let nu_max = opts.nu_max.or(pf.options.nu_max).unwrap_or(DEFAULT_NU_MAX);
    let s0 = pf.base_point(opts.base_point.as_deref())?;
    let mut shown: BTreeMap<String, f64> = pf.options.values.clone();
    shown.extend(opts.params.clone());
    ctx.rep.options = OptionsEcho {
        order,
        input_order,
        k_max,
        nu_max,
        base_point: s0.as_ref().map(|p| p.to_string()),
        params: shown,
    };
    let values = pf.numeric_values(&opts.params);
    let tower = pf.tower.clone();
    let st = Setup { pf, order, k_max, nu_max, s0, values, tower };

    let r = ctx.step("reduce", |_| {
        let spec = st.pf.spec()?;
        let r = reduce_to_curve(&spec, input_order)?;
        Ok((r, format!("reduced to order {input_order} along the curve")))
    })?;

    if let Command::Verify(text) = cmd {
        return verify_stage(ctx, &st, &r, text);
    }

    let tr = ctx.step("gauge", |c| {
        let g = match st.pf.gauge_matrix()? {
            Some(p) => apply_gauge(&r, &p, true)?,
            None if r.is_diagonal() => r.clone(),
            None => return Err(Error::GaugeRequired("linear part is not diagonal; give a [gauge] matrix".into())),
        };
        let tr = time_reduce(&g)?;
        let lambdas = tr.lambdas()?;
        if let Some(given) = st.pf.logderivs()? {
            if given.len() != lambdas.len() || given.iter().zip(&lambdas).any(|(a, b)| a != b) {
                let got: Vec<String> = lambdas.iter().map(|l| l.to_string()).collect();
                return Err(Error::Input(format!("[logderivs] disagree with the reduced system: {}", got.join(", "))));
            }
        }
        c.rep.system = Some(SystemReport {
            coordinates: st.pf.coords.clone(),
            reduced: r.q_eqs.iter().map(|e| e.to_string()).collect(),
            s_eq: r.s_eq.to_string(),
            gauge_applied: st.pf.gauge.is_some(),
            lambdas: lambdas.iter().map(|l| l.to_string()).collect(),
        });
        let d = if st.pf.gauge.is_some() { "gauge applied, time reduced" } else { "diagonal, time reduced" };
        Ok((tr, d.to_string()))
    })?;

    if *cmd == Command::Linearize {
        return linearize_stage(ctx, &st, &tr);
    }

    // analysis: Fuchsian scan, lattice, local checks, Diophantine sums
    let places = match fuchsian_scan(&tr) {
        Ok(p) => {
            let rows = p.iter().map(place_row).collect();
            ctx.rep.fuchsian = Some(FuchsianReport { fuchsian: true, detail: format!("{} singular places", p.len()), places: rows });
            ctx.rep.stage("fuchsian", "ok", "fuchsian");
            p
        }
        Err(e @ Error::NonFuchsian { .. }) => {
            ctx.rep.fuchsian = Some(FuchsianReport { fuchsian: false, detail: e.to_string(), places: Vec::new() });
            ctx.rep.stage("fuchsian", "failed", e.to_string());
            return Ok((format!("cannot certify: {e}"), 2));
        }
        Err(e) => {
            ctx.rep.stage("fuchsian", "failed", e.to_string());
            return Err(e);
        }
    };
    let lattice = ctx.step("resonance", |c| {
        let rep = relation_lattice(&tr.lambdas()?, st.k_max)?;
        c.rep.resonance = Some(lattice_json(&rep, tr.nq()));
        let d = format!("lattice rank {} (K_max = {})", rep.rank, st.k_max);
        Ok((rep, d))
    })?;
    local_and_diophantine(ctx, &st, &places);

    let outcome = ctx.step("flow", |_| {
        let out = formal_flow(&tr, st.order, st.s0.as_ref())?;
        let d = match &out {
            FlowOutcome::Flow(f) => format!("formal flow to order {}", f.order),
            FlowOutcome::Obstructed(o) => o.to_string(),
        };
        Ok((out, d))
    })?;
    ctx.rep.exceptional_parameters = exceptional(&tr, outcome.best_flow(), &lattice);

    if *cmd == Command::Analyze {
        let fuchs = "fuchsian";
        let res = if lattice.rank == 0 { "nonresonant".to_string() } else { format!("resonance lattice rank {}", lattice.rank) };
        return Ok((format!("{fuchs}; {res}"), 0));
    }

    let flow = match outcome {
        FlowOutcome::Flow(f) => f,
        FlowOutcome::Obstructed(o) => {
            ctx.rep.flow = Some(flow_json(&o.partial));
            ctx.rep.obstruction = Some(ObstructionJson {
                order: o.order,
                component: o.component,
                index: o.index.clone(),
                h_exponent: o.h_exponent.clone(),
                kind: o.kind.to_string(),
                equation: o.element().to_string(),
                rechecked: o.recheck(),
            });
            return Ok((format!("obstruction at order {}, component {}", o.order, o.component), 1));
        }
    };
    ctx.rep.flow = Some(flow_json(&flow));
    integrate_stage(ctx, &st, &r, &tr, &flow, &lattice)
}

fn x_field(r: &ReducedSystem) -> FormalVectorField {
    FormalVectorField { comps: r.q_eqs.clone(), s_comp: r.s_eq.clone() }
}

fn tower_names(t: &Option<Arc<Tower>>) -> Vec<String> {
    t.as_ref().map_or(Vec::new(), |t| t.names().to_vec())
}

fn integrate_stage(
    ctx: &mut Ctx,
    st: &Setup,
    r: &ReducedSystem,
    tr: &ReducedSystem,
    flow: &FormalFlow,
    lattice: &ResonanceReport,
) -> Result<(String, i32)> {
    let x = x_field(r);
    let mut cert = ctx.step("certificate", |_| {
        let c = build_certificate(tr, flow, lattice)?;
        let d = format!("l = {}, {} first integrals", c.l, c.integrals.len());
        Ok((c, d))
    })?;
    let rep = ctx.step("verify", |_| {
        let v = verify_certificate(&cert, &x, st.tower.as_ref())?;
        let d = format!("{}/{} checks passed", v.entries.iter().filter(|e| e.passed).count(), v.entries.len());
        Ok((v, d))
    })?;
    ctx.rep.checks(&rep);
    let mut ok = rep.all_passed();
    let has_galois = st.tower.as_ref().is_some_and(|t| !t.galois().is_empty());
    let mut descent_failed = None;
    if ok && has_galois {
        let t = st.tower.as_ref().unwrap();
        match ctx.step("descent", |_| {
            let out = galois_descent(&cert, t)?;
            let d = match &out {
                DescentOutcome::Descended(_) => "descended to the base field".to_string(),
                DescentOutcome::NeedsCovering(k) => format!("needs a covering of degree {k}"),
            };
            Ok((out, d))
        }) {
            Ok(DescentOutcome::Descended(d)) => {
                let v = verify_certificate(&d, &x, Some(t))?;
                ctx.rep.stage(
                    "verify-descended",
                    if v.all_passed() { "ok" } else { "failed" },
                    format!("{}/{} checks passed", v.entries.iter().filter(|e| e.passed).count(), v.entries.len()),
                );
                ctx.rep.verification.clear();
                ctx.rep.checks(&v);
                ok = v.all_passed();
                cert = *d;
                fill_verified_orders(&mut cert, &v);
            }
            Ok(DescentOutcome::NeedsCovering(k)) => cert.descent = DescentStatus::NeedsCovering(k),
            Err(e) => descent_failed = Some(e),
        }
    }
    ctx.rep.descent = Some(cert.descent.to_string());
    ctx.rep.certificate = Some(CertificateJson::from_certificate(&cert, &st.pf.params, &tower_names(&st.tower)));
    if !ok {
        return Ok(("cannot certify: verification failed".into(), 2));
    }
    if let Some(e) = descent_failed {
        return Ok((format!("cannot certify: descent: {e}"), 2));
    }
    if cert.inconclusive > 0 {
        return Ok((format!("cannot certify: lattice search inconclusive on {} candidates", cert.inconclusive), 2));
    }
    let what = match cert.descent {
        DescentStatus::NeedsCovering(k) => format!("certified ({}, {}) integrable on a covering of degree {k}", cert.l, cert.n - cert.l),
        _ => format!("certified ({}, {}) integrable to order {}", cert.l, cert.n - cert.l, cert.order),
    };
    Ok((what, 0))
}

/// Averaged integrals carry no order of their own; take it from the checks.
fn fill_verified_orders(cert: &mut IntegrabilityCertificate, v: &VerificationReport) {
    for (k, f) in cert.integrals.iter_mut().enumerate() {
        let suffix = format!(" F{} = 0", k + 1);
        let orders = v.entries.iter().filter(|e| e.passed && e.name.ends_with(&suffix)).filter_map(|e| e.order);
        if let Some(o) = orders.min() {
            f.verified_order = o;
        }
    }
}

fn verify_stage(ctx: &mut Ctx, st: &Setup, r: &ReducedSystem, text: &str) -> Result<(String, i32)> {
    let cert = ctx.step("certificate", |_| {
        let c = parse_certificate(text, st, r.nq())?;
        let d = format!("read l = {}, {} first integrals, order {}", c.l, c.integrals.len(), c.order);
        Ok((c, d))
    })?;
    let rep = ctx.step("verify", |_| {
        let v = verify_certificate(&cert, &x_field(r), st.tower.as_ref())?;
        let d = format!("{}/{} checks passed", v.entries.iter().filter(|e| e.passed).count(), v.entries.len());
        Ok((v, d))
    })?;
    ctx.rep.checks(&rep);
    ctx.rep.descent = Some(cert.descent.to_string());
    if rep.all_passed() {
        Ok(("verified".into(), 0))
    } else {
        let failed: Vec<&str> = rep.entries.iter().filter(|e| !e.passed).map(|e| e.name.as_str()).collect();
        Ok((format!("verification failed: {}", failed.join("; ")), 1))
    }
}

fn parse_certificate(text: &str, st: &Setup, nq: usize) -> Result<IntegrabilityCertificate> {
    let bad = |m: String| Error::SchemaMismatch(m);
    let v: serde_json::Value = serde_json::from_str(text).map_err(|e| bad(format!("not JSON: {e}")))?;
    let v = match v.get("certificate") {
        Some(serde_json::Value::Null) => return Err(bad("report carries no certificate".into())),
        Some(c) => c.clone(),
        None => v,
    };
    let cj: CertificateJson = serde_json::from_value(v).map_err(|e| bad(e.to_string()))?;
    if cj.parameters != st.pf.params {
        return Err(bad(format!("parameters {:?} differ from the problem's {:?}", cj.parameters, st.pf.params)));
    }
    if cj.tower != tower_names(&st.tower) {
        return Err(bad(format!("tower {:?} differs from the problem's {:?}", cj.tower, tower_names(&st.tower))));
    }
    cj.to_certificate(&q_env(nq, cj.order, st.tower.clone(), &st.pf.params))
}

fn linearize_stage(ctx: &mut Ctx, st: &Setup, tr: &ReducedSystem) -> Result<(String, i32)> {
    let out = ctx.step("linearize", |_| {
        let out = linearize(tr, st.order, st.s0.as_ref())?;
        let d = match &out {
            LinearizeOutcome::Map(l) => format!("linearizing map verified to order {}", l.verified_order),
            LinearizeOutcome::Obstructed(o) => o.to_string(),
        };
        Ok((out, d))
    })?;
    match out {
        LinearizeOutcome::Map(l) => {
            ctx.rep.linearization = Some(LinearizationJson {
                order: l.order,
                verified_order: l.verified_order,
                map: l.map.iter().map(|m| m.to_string()).collect(),
                fixed_by: l.fixed_by.clone(),
                moved_by: l.moved_by.clone(),
            });
            Ok((format!("linearized to order {}", l.order), 0))
        }
        LinearizeOutcome::Obstructed(o) => {
            ctx.rep.obstruction = Some(ObstructionJson {
                order: o.order,
                component: o.component,
                index: o.index.clone(),
                h_exponent: o.h_exponent.clone(),
                kind: o.kind.to_string(),
                equation: o.element().to_string(),
                rechecked: o.recheck(),
            });
            Ok((format!("not linearizable: obstruction at order {}, component {}", o.order, o.component), 1))
        }
    }
}

fn place_row(p: &SingularPlace) -> PlaceRow {
    PlaceRow {
        place: p.place.to_string(),
        ramification: p.ramification,
        kind: p.kind.to_string(),
        exponents: p.exponents.iter().map(|e| e.as_ref().map(|x| x.to_string())).collect(),
    }
}

fn lattice_json(rep: &ResonanceReport, nq: usize) -> LatticeReport {
    LatticeReport {
        k_max: rep.k_max,
        rank: rep.rank,
        basis: rep.basis.iter().map(|b| RelationRow { k: b.k.clone(), witness: b.witness.to_string() }).collect(),
        inconclusive: rep.inconclusive.clone(),
        candidates_tested: rep.candidates_tested,
        l_candidate: rep.l_candidate(nq),
    }
}

fn local_and_diophantine(ctx: &mut Ctx, st: &Setup, places: &[SingularPlace]) {
    let mut exps = Vec::new();
    for p in places {
        let Some(rho) = p.exponents.iter().cloned().collect::<Option<Vec<_>>>() else { continue };
        if p.ramification > 1 {
            let result = match local_extension_check(&rho, p.ramification, st.k_max) {
                LocalCheck::Ok => "ok".to_string(),
                LocalCheck::LocalResonance { j, k, value } => {
                    let k: Vec<String> = k.iter().map(|x| x.to_string()).collect();
                    format!("local-resonance: component {}, index ({}), value {value}", j + 1, k.join(","))
                }
            };
            ctx.rep.local_checks.push(LocalRow { place: p.place.to_string(), m: p.ramification, result });
        }
        exps.push((p.ramification, rho));
    }
    if exps.is_empty() {
        ctx.rep.stage("diophantine", "skipped", "no place with scalar exponents");
        return;
    }
    let Some(angles) = angles_from_exponents(&exps, &st.values) else {
        ctx.rep.stage("diophantine", "skipped", "needs numeric values for the parameters (--param)");
        return;
    };
    match diophantine_eval::<f64>(&angles, st.nu_max, DIOPHANTINE_BUDGET) {
        Ok(d) => {
            ctx.rep.stage("diophantine", "ok", d.verdict.to_string());
            ctx.rep.diophantine = Some(DiophantineJson {
                nu_max: d.nu_max,
                nu_reached: d.nu_reached,
                exponent_estimate: d.exponent_estimate,
                resonances: d.resonances.clone(),
                verdict: d.verdict.to_string(),
                rows: d
                    .rows
                    .iter()
                    .map(|r| DiophantineRowJson { nu: r.nu, eps_min: r.eps_min, term: r.term, partial_sum: r.partial_sum })
                    .collect(),
            });
        }
        Err(e) => ctx.rep.stage("diophantine", "failed", e.to_string()),
    }
}

fn flow_json(f: &FormalFlow) -> FlowJson {
    FlowJson {
        order: f.order,
        base_point: f.s0.to_string(),
        phi: f.phi.iter().map(|p| p.to_string()).collect(),
        phi_t: f.phi_t.to_string(),
        logs: f.logs.iter().map(|l| format!("{l:?}")).collect(),
        resonant: f.resonant.iter().map(|(j, i)| (j + 1, i.clone())).collect(),
    }
}

fn collect_params(x: &FieldElem, out: &mut Vec<ParamScalar>) {
    for c in x.coords() {
        out.extend(c.num().coeffs().iter().cloned());
        out.extend(c.den().coeffs().iter().cloned());
    }
}

/// Parameter values at which a denominator met in the run vanishes.
fn exceptional(tr: &ReducedSystem, flow: &FormalFlow, lattice: &ResonanceReport) -> Vec<String> {
    let mut scalars = Vec::new();
    for p in flow.phi.iter().chain(std::iter::once(&flow.phi_t)) {
        for (_, c) in p.terms() {
            collect_params(c, &mut scalars);
        }
    }
    for l in tr.lambdas().unwrap_or_default() {
        collect_params(&l, &mut scalars);
    }
    for b in &lattice.basis {
        collect_params(&b.witness, &mut scalars);
    }
    let mut out = BTreeSet::new();
    for c in scalars {
        for (k, poly) in c.denominators() {
            let name = param_name(k);
            let monic = poly.monic();
            let text = if monic.degree() == Some(1) {
                format!("{name} = {}", monic.coeff(0).neg())
            } else {
                format!("{} = 0", monic.to_string_var(&name))
            };
            out.insert(text);
        }
    }
    out.into_iter().collect()
}

/// Human-readable rendering of a report.
pub fn render_text(rep: &RunReport, timing: &BTreeMap<String, u64>) -> String {
    let mut s = String::new();
    let o = &rep.options;
    let _ = writeln!(s, "galint {}  (order {}, input order {}, K_max {}, nu_max {})", rep.command, o.order, o.input_order, o.k_max, o.nu_max);
    if let Some(b) = &o.base_point {
        let _ = writeln!(s, "base point s0 = {b}");
    }
    for (k, v) in &o.params {
        let _ = writeln!(s, "{k} = {v}");
    }
    let _ = writeln!(s, "\nstages:");
    for st in &rep.stages {
        let ms = timing.get(&st.stage).map(|t| format!(" [{t} ms]")).unwrap_or_default();
        let _ = writeln!(s, "  {:<16} {:<8} {}{ms}", st.stage, st.status, st.detail);
    }
    if let Some(sys) = &rep.system {
        let _ = writeln!(s, "\nlog-derivatives of the normal solutions:");
        for (j, l) in sys.lambdas.iter().enumerate() {
            let _ = writeln!(s, "  h{} = {l}", j + 1);
        }
    }
    if let Some(f) = &rep.fuchsian {
        let _ = writeln!(s, "\nFuchsian: {}", if f.fuchsian { "yes" } else { "no" });
        for p in &f.places {
            let ex: Vec<String> = p.exponents.iter().map(|e| e.clone().unwrap_or_else(|| "?".into())).collect();
            let _ = writeln!(s, "  {:<24} m = {}  {:<24} exponents ({})", p.place, p.ramification, p.kind, ex.join(", "));
        }
    }
    if let Some(l) = &rep.resonance {
        let _ = writeln!(s, "\nresonance lattice: rank {} (K_max {}, {} candidates), l <= {}", l.rank, l.k_max, l.candidates_tested, l.l_candidate);
        for b in &l.basis {
            let _ = writeln!(s, "  k = {:?}  witness {}", b.k, b.witness);
        }
        if !l.inconclusive.is_empty() {
            let _ = writeln!(s, "  inconclusive: {:?}", l.inconclusive);
        }
    }
    for c in &rep.local_checks {
        let _ = writeln!(s, "local check at {} (m = {}): {}", c.place, c.m, c.result);
    }
    if let Some(d) = &rep.diophantine {
        let _ = writeln!(s, "Diophantine sums: {} (nu reached {}, exponent estimate {:.3})", d.verdict, d.nu_reached, d.exponent_estimate);
    }
    if !rep.exceptional_parameters.is_empty() {
        let _ = writeln!(s, "exceptional parameters: {}", rep.exceptional_parameters.join("; "));
    }
    if let Some(f) = &rep.flow {
        let _ = writeln!(s, "\nformal flow (order {}, s0 = {}):", f.order, f.base_point);
        for (j, p) in f.phi.iter().enumerate() {
            let _ = writeln!(s, "  q{} = {p}", j + 1);
        }
        let _ = writeln!(s, "  t = {}", f.phi_t);
    }
    if let Some(ob) = &rep.obstruction {
        let _ = writeln!(
            s,
            "\nobstruction ({}) at order {}, component {}, index {:?}, H-exponent {:?}:\n  {}",
            ob.kind, ob.order, ob.component, ob.index, ob.h_exponent, ob.equation
        );
    }
    if let Some(c) = &rep.certificate {
        let _ = writeln!(s, "\ncertificate: l = {}, n - l = {}, order {}, descent {}", c.l, c.n - c.l, c.order, c.descent);
        for (i, y) in c.fields.iter().enumerate() {
            let _ = writeln!(s, "  Y{}:", i + 1);
            for (j, q) in y.q.iter().enumerate() {
                let _ = writeln!(s, "    q{}: {q}", j + 1);
            }
            let _ = writeln!(s, "    s: {}", y.s);
        }
        for (i, f) in c.integrals.iter().enumerate() {
            let _ = writeln!(s, "  F{} = ({}) / ({})  [verified to O({})]", i + 1, f.num, f.den, f.verified_order + 1);
        }
    }
    if let Some(l) = &rep.linearization {
        let _ = writeln!(s, "\nlinearizing map (order {}, verified to {}):", l.order, l.verified_order);
        for (j, m) in l.map.iter().enumerate() {
            let _ = writeln!(s, "  Q{} = {m}", j + 1);
        }
    }
    if !rep.verification.is_empty() {
        let _ = writeln!(s, "\nchecks:");
        for c in &rep.verification {
            let ord = c.order.map(|o| format!(" O({})", o + 1)).unwrap_or_default();
            let _ = writeln!(s, "  {} {}{ord}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
        }
    }
    let _ = writeln!(s, "\nverdict: {} (exit {})", rep.verdict, rep.exit_code);
    s
}
