use super::*;
use crate::expr::ElemEnv;
use crate::galois::relation_lattice;
use crate::series::SeriesEnv;

fn alpha() -> Vec<String> {
    vec!["alpha".into()]
}

fn section_32(order: usize) -> ReducedSystem {
    let r = ReducedSystem::parse(&["alpha*q1/(s*(q1^3+q1^2*s+s))"], "1/(q1^3+q1^2*s+s)", order, None, &alpha()).unwrap();
    time_reduce(&r).unwrap()
}

fn section_one(order: usize) -> ReducedSystem {
    ReducedSystem::parse(&["alpha/s*q1 + q1^2*q2/s", "-alpha/s*q2 - q1*q2^2/s"], "1", order, None, &alpha()).unwrap()
}

#[test]
fn section_32_flow_and_jac() {
    let tr = section_32(4);
    let flow = formal_flow(&tr, 3, None).unwrap().flow().unwrap().clone();
    let e = ElemEnv::new(None, &alpha());
    assert_eq!(flow.coeff(0, &[1]), FieldElem::one());
    assert!(flow.coeff(0, &[2]).is_zero());
    assert_eq!(flow.coeff(1, &[0]), e.eval_str("s^2/2").unwrap());
    assert_eq!(flow.coeff(1, &[2]), e.eval_str("s^2/(2*alpha+2)").unwrap());
    assert_eq!(flow.coeff(1, &[3]), e.eval_str("s/(3*alpha+1)").unwrap());
    assert!(flow.coeff(1, &[1]).is_zero());

    let phi = invert_flow(&flow).unwrap();
    let j = build_j(&flow, &phi).unwrap();
    let q = SeriesEnv::new(Alphabet::Q, 3, vec!["q1".into()], None, &alpha());
    // row 1 is q1 times (-1/q1, alpha/s)
    assert_eq!(j.scaled[0][0], q.eval_str("-1").unwrap().truncate(j.scaled[0][0].order()));
    assert_eq!(j.scaled[0][1], q.eval_str("alpha*q1/s").unwrap().truncate(j.scaled[0][1].order()));
    let j21 = q.eval_str("2*s^2*q1/(2*alpha+2) + 3*s*q1^2/(3*alpha+1)").unwrap();
    let j22 = q.eval_str("s + 2*s*q1^2/(2*alpha+2) + q1^3/(3*alpha+1)").unwrap();
    assert_eq!(j.scaled[1][0], j21.truncate(j.scaled[1][0].order()));
    assert_eq!(j.scaled[1][1], j22.truncate(j.scaled[1][1].order()));
}

#[test]
fn section_32_commuting_field() {
    let tr = section_32(6);
    let flow = formal_flow(&tr, 5, None).unwrap().flow().unwrap().clone();
    let report = relation_lattice(&flow.basis.h, 3).unwrap();
    assert_eq!(report.rank, 0);
    let cert = build_certificate(&tr, &flow, &report).unwrap();
    assert_eq!((cert.n, cert.l, cert.integrals.len()), (2, 2, 0));
    let y = &cert.fields[0];
    let q = SeriesEnv::new(Alphabet::Q, 8, vec!["q1".into()], None, &alpha());
    let a = q.eval_str("(3*alpha*q1^2*s+3*alpha^2*s+q1^2*s+4*alpha*s+s+alpha*q1^3+q1^3)*q1").unwrap();
    let b = q.eval_str("q1^2*s*(3*alpha*q1+3*alpha*s+3*q1+s)").unwrap();
    // (Y_q, Y_s) parallel to (A, -B)
    let cross = fields::prod(&y.comps[0], &b).add(&fields::prod(&y.s_comp, &a)).unwrap();
    assert!(cross.is_zero(), "{cross}");
    assert!(!y.comps[0].is_zero());
    let rep = verify_certificate(&cert, cert.x(), None).unwrap();
    assert!(rep.all_passed(), "{rep}");
}

#[test]
fn section_one_obstruction_and_integral() {
    let r = section_one(5);
    let tr = time_reduce(&r).unwrap();
    let out = formal_flow(&tr, 4, None).unwrap();
    let FlowOutcome::Obstructed(o) = &out else { panic!("expected an obstruction") };
    assert_eq!((o.order, o.component), (3, 1));
    assert_eq!(o.index, vec![2, 1]);
    assert_eq!(o.h_exponent, vec![1, 1]);
    assert_eq!(o.kind, ObstructionKind::LogInNormalPart);
    assert!(o.recheck());

    let report = relation_lattice(&tr.lambdas().unwrap(), 4).unwrap();
    assert_eq!(report.rank, 1);
    assert_eq!(report.basis[0].k, vec![1, 1]);
    let flow = out.best_flow();
    let phi = invert_flow(flow).unwrap();
    let ints = first_integrals(flow, &phi, &report, &tr).unwrap();
    assert_eq!(ints.len(), 1);
    let q = SeriesEnv::new(Alphabet::Q, 5, vec!["q1".into(), "q2".into()], None, &alpha());
    let f = ints[0].series().unwrap();
    assert_eq!(f, q.eval_str("q1*q2").unwrap());
    assert_eq!(ints[0].verified_order, 5);

    match linearize(&r, 4, None).unwrap() {
        LinearizeOutcome::Obstructed(o) => assert_eq!((o.order, o.component), (3, 1)),
        LinearizeOutcome::Map(_) => panic!("system is not linearisable"),
    }
}

#[test]
fn linearize_riccati_like() {
    let r = ReducedSystem::parse(&["alpha/s*q1 + q1^2/s"], "1", 4, None, &alpha()).unwrap();
    let LinearizeOutcome::Map(l) = linearize(&r, 4, None).unwrap() else { panic!("expected a map") };
    let q = SeriesEnv::new(Alphabet::Q, 4, vec!["q1".into()], None, &alpha());
    // psi = q/(1 + q/alpha) solves psi' = alpha psi / s
    let want = q.eval_str("q1 - q1^2/alpha + q1^3/alpha^2 - q1^4/alpha^3").unwrap();
    assert_eq!(l.map[0], want);
    assert_eq!(l.verified_order, 4);
}

#[test]
fn linear_diagonal_is_trivial() {
    let r = ReducedSystem::parse(&["q1/s", "2*q2/s"], "1", 3, None, &[]).unwrap();
    let LinearizeOutcome::Map(l) = linearize(&r, 3, None).unwrap() else { panic!("expected a map") };
    let q = SeriesEnv::new(Alphabet::Q, 3, vec!["q1".into(), "q2".into()], None, &[]);
    assert_eq!(l.map[0], q.eval_str("q1").unwrap());
    assert_eq!(l.map[1], q.eval_str("q2").unwrap());
    let r = ReducedSystem::parse(&["q2", "q1"], "1", 2, None, &[]).unwrap();
    assert!(matches!(linearize(&r, 2, None), Err(Error::GaugeRequired(_))));
}

fn quadratic_tower(radicand: &str) -> Arc<Tower> {
    let base = ElemEnv::new(None, &[]);
    let t = Tower::extend(None, "w", 2, &base.eval_str(radicand).unwrap()).unwrap();
    let w = FieldElem::generator(&t, 0);
    t.with_galois(vec![("g".into(), vec![w.neg()])]).unwrap()
}

fn gauge_2(t: &Arc<Tower>) -> Matrix<FieldElem> {
    let e = ElemEnv::new(Some(t.clone()), &alpha());
    Matrix::from_rows(vec![
        vec![FieldElem::one(), FieldElem::one()],
        vec![e.eval_str("1/w").unwrap(), e.eval_str("-1/w").unwrap()],
    ])
}

fn certify(r: &ReducedSystem, gauge: &Matrix<FieldElem>, order: usize) -> IntegrabilityCertificate {
    let g = apply_gauge(r, gauge, true).unwrap();
    let tr = time_reduce(&g).unwrap();
    let flow = formal_flow(&tr, order, None).unwrap().flow().unwrap().clone();
    let report = relation_lattice(&tr.lambdas().unwrap(), 2).unwrap();
    build_certificate(&tr, &flow, &report).unwrap()
}

#[test]
fn example_one_needs_covering() {
    let t = quadratic_tower("1+s^2");
    let r = ReducedSystem::parse(&["alpha*q2", "(alpha*q1 - s*q2)/(s^2+1)"], "1", 6, Some(t.clone()), &alpha()).unwrap();
    let cert = certify(&r, &gauge_2(&t), 3);
    assert_eq!((cert.l, cert.integrals.len()), (2, 1));
    let q = SeriesEnv::new(Alphabet::Q, 6, vec!["q1".into(), "q2".into()], Some(t.clone()), &alpha());
    let f = cert.integrals[0].series().unwrap();
    let want = q.eval_str("(q1^2 - (1+s^2)*q2^2)/4").unwrap();
    assert_eq!(f, want.truncate(f.order()));
    let x = FormalVectorField { comps: r.q_eqs.clone(), s_comp: r.s_eq.clone() };
    let rep = verify_certificate(&cert, &x, Some(&t)).unwrap();
    assert!(rep.all_passed(), "{rep}");
    assert!(matches!(galois_descent(&cert, &t).unwrap(), DescentOutcome::NeedsCovering(2)));
}

#[test]
fn example_two_descends() {
    let t = quadratic_tower("1+s^2");
    let r = ReducedSystem::parse(
        &["alpha*q2 + s*q1/(2*(1+s^2))", "(alpha*q1 - s*q2/2)/(s^2+1)"],
        "1",
        6,
        Some(t.clone()),
        &alpha(),
    )
    .unwrap();
    let cert = certify(&r, &gauge_2(&t), 3);
    let DescentOutcome::Descended(d) = galois_descent(&cert, &t).unwrap() else { panic!("expected descent") };
    assert_eq!(d.descent, DescentStatus::BaseField);
    let q = SeriesEnv::new(Alphabet::Q, 8, vec!["q1".into(), "q2".into()], Some(t.clone()), &alpha());
    let f = d.integrals[0].series().unwrap();
    let want = q.eval_str("(q1^2-(1+s^2)*q2^2)^2/(1+s^2)").unwrap();
    let c = f.plain_coeff(&[4, 0]).div_checked(&want.plain_coeff(&[4, 0])).unwrap();
    assert!(f.sub(&want.scale(&c)).unwrap().is_zero(), "{f}");
    let y = &d.fields[0];
    let yq1 = q.eval_str("q2*(q1^2-(1+s^2)*q2^2)").unwrap();
    let yq2 = q.eval_str("q1*(q1^2-(1+s^2)*q2^2)/(1+s^2)").unwrap();
    let c = y.comps[0].plain_coeff(&[2, 1]).div_checked(&yq1.plain_coeff(&[2, 1])).unwrap();
    assert!(y.comps[0].sub(&yq1.scale(&c)).unwrap().is_zero());
    assert!(y.comps[1].sub(&yq2.scale(&c)).unwrap().is_zero());
    assert!(y.s_comp.is_zero());
    let x = FormalVectorField { comps: r.q_eqs.clone(), s_comp: r.s_eq.clone() };
    let rep = verify_certificate(&d, &x, Some(&t)).unwrap();
    assert!(rep.all_passed(), "{rep}");
}

pub(crate) fn example_three_tower() -> Arc<Tower> {
    let t1 = Tower::extend(None, "w1", 2, &FieldElem::s()).unwrap();
    let e1 = ElemEnv::new(Some(t1.clone()), &[]);
    let t2 = Tower::extend(Some(&t1), "w2", 2, &e1.eval_str("2+2*w1+s").unwrap()).unwrap();
    let e2 = ElemEnv::new(Some(t2.clone()), &[]);
    let t3 = Tower::extend(Some(&t2), "w3", 2, &e2.eval_str("2-2*w1+s").unwrap()).unwrap();
    let e3 = ElemEnv::new(Some(t3.clone()), &[]);
    let w = |x: &str| e3.eval_str(x).unwrap();
    t3.with_galois(vec![("g1".into(), vec![w("-w1"), w("w3"), w("w2")]), ("g2".into(), vec![w("w1"), w("-w2"), w("w3")])]).unwrap()
}

fn example_three() -> (Arc<Tower>, ReducedSystem, Matrix<FieldElem>) {
    let t = example_three_tower();
    let r = ReducedSystem::parse(
        &[
            "s*q1/(4*(s^2+4)) - (s-2)*q3/(4*(s^2+4)) + alpha*q4/2",
            "-alpha*q1/(s^2+4) - s*q2/(4*(s^2+4)) + alpha*(s+2)*q3/(2*(s^2+4)) + (s-2)*q4/(4*(s^2+4))",
            "-(s-2)*q1/(4*s*(s^2+4)) + alpha*q2/(2*s) - (s^2+8)*q3/(4*s*(s^2+4))",
            "alpha*(s+2)*q1/(2*s*(s^2+4)) + (s-2)*q2/(4*s*(s^2+4)) - alpha*q3/(s^2+4) - (3*s^2+8)*q4/(4*s*(s^2+4))",
        ],
        "1",
        10,
        Some(t.clone()),
        &alpha(),
    )
    .unwrap();
    let e = ElemEnv::new(Some(t.clone()), &alpha());
    let cols = [
        ["1", "1/w2", "1/w1", "1/(w1*w2)"],
        ["1", "1/w3", "-1/w1", "-1/(w1*w3)"],
        ["1", "-1/w2", "1/w1", "-1/(w1*w2)"],
        ["1", "-1/w3", "-1/w1", "1/(w1*w3)"],
    ];
    let p = Matrix::from_rows((0..4).map(|i| (0..4).map(|j| e.eval_str(cols[j][i]).unwrap()).collect()).collect());
    (t, r, p)
}

#[test]
fn example_three_descends() {
    let (t, r, p) = example_three();
    let g = apply_gauge(&r, &p, true).unwrap();
    let tr = time_reduce(&g).unwrap();
    let flow = formal_flow(&tr, 2, None).unwrap().flow().unwrap().clone();
    let report = relation_lattice(&tr.lambdas().unwrap(), 2).unwrap();
    assert_eq!(report.rank, 2);
    let cert = build_certificate(&tr, &flow, &report).unwrap();
    assert_eq!((cert.n, cert.l), (5, 3));
    let x = FormalVectorField { comps: r.q_eqs.clone(), s_comp: r.s_eq.clone() };
    let rep = verify_certificate(&cert, &x, Some(&t)).unwrap();
    assert!(rep.all_passed(), "{rep}");
    let DescentOutcome::Descended(d) = galois_descent(&cert, &t).unwrap() else { panic!("expected descent") };
    assert_eq!((d.fields.len(), d.integrals.len()), (3, 2));
    let rep = verify_certificate(&d, &x, Some(&t)).unwrap();
    assert!(rep.all_passed(), "{rep}");
    assert!(rep.entries.iter().filter(|e| e.order.is_some()).all(|e| e.order.unwrap() >= 4));
}

#[test]
fn oracle_slope_on_riccati_like() {
    let r = time_reduce(&ReducedSystem::parse(&["alpha/s*q1 + q1^2/s"], "1", 4, None, &alpha()).unwrap()).unwrap();
    let flow = formal_flow(&r, 3, None).unwrap().flow().unwrap().clone();
    let params = std::collections::BTreeMap::from([(0usize, 0.37)]);
    let cs = [10f64.powf(-1.5), 1e-2, 10f64.powf(-2.5)];
    let rep = numeric_flow_oracle::<f64>(&r, &flow, &params, &cs, 1.0, 2.0, 2000).unwrap();
    assert!((rep.slope - 4.0).abs() < 0.3, "{rep:?}");
}

#[test]
fn oracle_on_section_32_flow() {
    // the clock expansion terminates at order 3, so only integrator error remains
    let tr = section_32(4);
    let flow = formal_flow(&tr, 3, None).unwrap().flow().unwrap().clone();
    let params = std::collections::BTreeMap::from([(0usize, 0.37)]);
    let rep = numeric_flow_oracle::<f64>(&tr, &flow, &params, &[0.1, 0.03], 1.0, 2.0, 2000).unwrap();
    assert!(rep.rows.iter().all(|r| r.error < 1e-10), "{rep:?}");
    let bad = numeric_flow_oracle::<f64>(&tr, &flow, &params, &[0.1], -1.0, 1.0, 100);
    assert!(matches!(bad, Err(Error::PathNearSingularity(_))));
}

#[test]
fn tampered_field_is_flagged() {
    let tr = section_32(5);
    let flow = formal_flow(&tr, 4, None).unwrap().flow().unwrap().clone();
    let report = relation_lattice(&flow.basis.h, 3).unwrap();
    let mut cert = build_certificate(&tr, &flow, &report).unwrap();
    let x = cert.x().clone();
    let y = &mut cert.fields[0];
    let q1 = TruncSeries::var(Alphabet::Q, 1, y.s_comp.order(), 0);
    y.s_comp = y.s_comp.add(&q1).unwrap();
    let rep = verify_certificate(&cert, &x, None).unwrap();
    let failed: Vec<&str> = rep.entries.iter().filter(|e| !e.passed).map(|e| e.name.as_str()).collect();
    assert_eq!(failed, vec!["[Y1, Y2] = 0"], "{rep}");
}
