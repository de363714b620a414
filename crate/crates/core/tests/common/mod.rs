//! Randomized invariants shared by the property tests and the acceptance
//! summary. Each entry runs its own proptest runner.

use std::sync::Arc;

use galint::integrability::{closed_rows, columns_commute, formal_flow, series_matrix_inverse, FlowOutcome};
use galint::ode::rational_ode_solve;
use galint::reduction::{time_reduce, ReducedSystem};
use galint::scalar::rat;
use galint::series::{Alphabet, SymbolMonomial, TruncSeries};
use galint::{Field, FieldElem, Tower};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

pub type Property = fn(u32) -> Result<(), String>;

pub const PROPERTIES: &[(&str, Property)] = &[
    ("leibniz on tower elements", leibniz_tower),
    ("leibniz on series partials", leibniz_series),
    ("rational_ode_solve residual", ode_residual),
    ("closedness iff commutation", closed_iff_commute),
    ("formal_flow order stability", flow_order_stable),
    ("truncation coherence", truncation_coherent),
];

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config { cases, failure_persistence: None, ..Config::default() })
}

fn check<S: Strategy>(cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String>
where
    S::Value: std::fmt::Debug,
{
    runner(cases).run(&strategy, test).map_err(|e| e.to_string())
}

fn quad_tower() -> Arc<Tower> {
    Tower::extend(None, "w", 2, &FieldElem::s().mul(&FieldElem::s()).add(&FieldElem::one())).unwrap()
}

fn small() -> impl Strategy<Value = i64> {
    -4i64..=4
}

// p(s) / (1 + d s^2) with small integer data
fn ratfunc() -> impl Strategy<Value = FieldElem> {
    (prop::collection::vec(small(), 1..4), 0i64..3).prop_map(|(c, d)| {
        let s = FieldElem::s();
        let mut num = FieldElem::zero();
        for (k, &x) in c.iter().enumerate() {
            num = num.add(&FieldElem::from_i64(x).mul(&s.pow(k as u32)));
        }
        let den = FieldElem::one().add(&FieldElem::from_i64(d).mul(&s.mul(&s)));
        num.div_checked(&den).unwrap()
    })
}

fn tower_elem() -> impl Strategy<Value = FieldElem> {
    (ratfunc(), ratfunc()).prop_map(|(a, b)| {
        let t = quad_tower();
        a.embed(&t).unwrap().add(&b.mul(&FieldElem::generator(&t, 0)))
    })
}

fn series(nvars: usize, order: usize, min_deg: u32) -> impl Strategy<Value = TruncSeries> {
    prop::collection::vec((prop::collection::vec(0u32..=order as u32, nvars), small()), 0..8).prop_map(move |terms| {
        let mut s = TruncSeries::zero(Alphabet::Q, nvars, order);
        for (idx, c) in terms {
            let d: u32 = idx.iter().sum();
            if d >= min_deg && d as usize <= order && c != 0 {
                s.add_term(idx, SymbolMonomial::neutral(), FieldElem::from_i64(c));
            }
        }
        s
    })
}

fn konst(nvars: usize, order: usize, c: i64) -> TruncSeries {
    TruncSeries::constant(Alphabet::Q, nvars, order, FieldElem::from_i64(c))
}

fn var(nvars: usize, order: usize, j: usize) -> TruncSeries {
    TruncSeries::var(Alphabet::Q, nvars, order, j)
}

pub fn leibniz_tower(cases: u32) -> Result<(), String> {
    check(cases, (tower_elem(), tower_elem()), |(a, b)| {
        let lhs = a.mul(&b).derive();
        let rhs = a.derive().mul(&b).add(&a.mul(&b.derive()));
        prop_assert_eq!(lhs, rhs);
        Ok(())
    })
}

pub fn leibniz_series(cases: u32) -> Result<(), String> {
    check(cases, (series(2, 5, 0), series(2, 5, 0), 0usize..2), |(a, b, j)| {
        let lhs = a.mul(&b).unwrap().partial(j);
        let rhs = a.partial(j).mul(&b).unwrap().add(&a.mul(&b.partial(j)).unwrap()).unwrap();
        let k = lhs.order().min(rhs.order());
        prop_assert_eq!(lhs.truncate(k), rhs.truncate(k));
        Ok(())
    })
}

pub fn ode_residual(cases: u32) -> Result<(), String> {
    check(cases, (-6i64..=6, -6i64..=6, ratfunc(), 1i64..=3), |(c0, c1, y, p)| {
        // delta = c0/(2s) + c1/(s-p): residues of mixed sign and parity
        let s = FieldElem::s();
        let delta = FieldElem::from_rational(&rat(c0, 2))
            .div_checked(&s)
            .unwrap()
            .add(&FieldElem::from_i64(c1).div_checked(&s.sub(&FieldElem::from_i64(p))).unwrap());
        let g = y.derive().add(&delta.mul(&y));
        let sol = rational_ode_solve(&delta, &g).unwrap();
        prop_assert_eq!(sol.derive().add(&delta.mul(&sol)), g);
        Ok(())
    })
}

pub fn closed_iff_commute(cases: u32) -> Result<(), String> {
    let strategy = (
        prop::collection::vec(small(), 3),
        prop::collection::vec(series(3, 4, 1), 9),
        prop::collection::vec(series(3, 5, 2), 3),
        any::<bool>(),
    );
    check(cases, strategy, |(upper, higher, maps, gradient)| {
        let (n, order) = (3, 4);
        let m: Vec<Vec<TruncSeries>> = if gradient {
            // inverse Jacobian of q + (higher terms): the dual rows are exact
            let phi: Vec<TruncSeries> = (0..n).map(|i| var(n, 5, i).add(&maps[i]).unwrap()).collect();
            let jac: Vec<Vec<TruncSeries>> =
                (0..n).map(|i| (0..n).map(|j| phi[i].partial(j).truncate(order)).collect()).collect();
            series_matrix_inverse(&jac).unwrap()
        } else {
            let a0 = [[1, upper[0], upper[1]], [0, 1, upper[2]], [0, 0, 1]];
            (0..n).map(|i| (0..n).map(|j| konst(n, order, a0[i][j]).add(&higher[3 * i + j]).unwrap()).collect()).collect()
        };
        let inv = series_matrix_inverse(&m).unwrap();
        let closed = closed_rows(&inv, order - 1).unwrap();
        let commute = columns_commute(&m, order - 1).unwrap();
        prop_assert_eq!(closed, commute);
        if gradient {
            prop_assert!(closed);
        }
        Ok(())
    })
}

pub fn flow_order_stable(cases: u32) -> Result<(), String> {
    let strategy = (1i64..=9, 1i64..=9, prop::collection::vec(-3i64..=3, 6), prop::collection::vec(-1i64..=1, 6));
    check(cases, strategy, |(l1, l2, c, e)| {
        // q_j' = lambda_j q_j / s + quadratic terms with s-power coefficients
        let lam = [format!("({l1}/5)"), format!("(-{l2}/7)")];
        let monos = ["q1^2", "q1*q2", "q2^2"];
        let mut eqs = Vec::new();
        for j in 0..2 {
            let mut t = format!("{}*q{}/s", lam[j], j + 1);
            for (k, mono) in monos.iter().enumerate() {
                let i = 3 * j + k;
                t += &format!(" + ({})*s^({})*{}", c[i], e[i], mono);
            }
            eqs.push(t);
        }
        let eqs: Vec<&str> = eqs.iter().map(String::as_str).collect();
        let r = time_reduce(&ReducedSystem::parse(&eqs, "1", 4, None, &[]).unwrap()).unwrap();
        let lo = formal_flow(&r, 2, None).unwrap();
        let hi = formal_flow(&r, 3, None).unwrap();
        match (&lo, &hi) {
            (FlowOutcome::Flow(a), FlowOutcome::Flow(b)) => {
                let b = b.truncate(2);
                prop_assert_eq!(&a.phi, &b.phi);
                prop_assert_eq!(&a.phi_t, &b.phi_t);
            }
            (FlowOutcome::Flow(a), FlowOutcome::Obstructed(o)) => {
                prop_assert_eq!(o.order, 3);
                prop_assert_eq!(&a.phi, &o.partial.truncate(2).phi);
            }
            (FlowOutcome::Obstructed(a), FlowOutcome::Obstructed(b)) => {
                prop_assert_eq!((a.order, a.component, &a.index), (b.order, b.component, &b.index));
            }
            (FlowOutcome::Obstructed(_), FlowOutcome::Flow(_)) => {
                prop_assert!(false, "obstruction vanished at higher order")
            }
        }
        Ok(())
    })
}

pub fn truncation_coherent(cases: u32) -> Result<(), String> {
    let strategy = (series(2, 6, 0), series(2, 6, 0), series(2, 6, 1), series(2, 6, 1), 0usize..6);
    check(cases, strategy, |(a, b, s1, s2, k)| {
        let ab = a.mul(&b).unwrap();
        prop_assert_eq!(ab.truncate(k), a.truncate(k).mul(&b.truncate(k)).unwrap());
        let sub = [s1.clone(), s2.clone()];
        let subk = [s1.truncate(k), s2.truncate(k)];
        prop_assert_eq!(a.compose(&sub).unwrap().truncate(k), a.truncate(k).compose(&subk).unwrap().truncate(k));
        let sum = a.add(&b).unwrap();
        prop_assert_eq!(sum.truncate(k), a.truncate(k).add(&b.truncate(k)).unwrap());
        Ok(())
    })
}
