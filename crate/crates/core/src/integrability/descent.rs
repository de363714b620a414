//! Galois descent: averaging the certificate over the declared group so that
//! every coefficient lies in the base field.

use std::collections::{BTreeMap, VecDeque};
use std::sync::Arc;

use super::fields::{konst, prod, DescentStatus, FirstIntegral, IntegrabilityCertificate};
use super::verify::{field_rank, gradient_rank};
use crate::error::{Error, Result};
use crate::scalar::Field;
use crate::series::{FormalVectorField, TruncSeries};
use crate::tower::{FieldElem, Tower};

const GROUP_CAP: usize = 64;

/// A group element as a word in the declared generators (applied left to
/// right), with its images of the tower generators.
#[derive(Clone, Debug)]
pub struct GroupElement {
    pub word: Vec<usize>,
    pub images: Vec<FieldElem>,
}

impl GroupElement {
    pub fn apply(&self, tower: &Arc<Tower>, x: &FieldElem) -> Result<FieldElem> {
        let mut y = x.embed(tower)?;
        for &g in &self.word {
            y = y.galois(g)?;
        }
        Ok(y)
    }

    pub fn apply_series(&self, tower: &Arc<Tower>, s: &TruncSeries) -> Result<TruncSeries> {
        s.map_coeffs(&|c| self.apply(tower, c))
    }

    pub fn apply_field(&self, tower: &Arc<Tower>, y: &FormalVectorField) -> Result<FormalVectorField> {
        Ok(FormalVectorField {
            comps: y.comps.iter().map(|c| self.apply_series(tower, c)).collect::<Result<_>>()?,
            s_comp: self.apply_series(tower, &y.s_comp)?,
        })
    }
}

fn key(images: &[FieldElem]) -> String {
    images.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("|")
}

/// Every element of the group generated by the declared automorphisms.
pub fn group_elements(tower: &Arc<Tower>) -> Result<Vec<GroupElement>> {
    let gens: Vec<FieldElem> = (0..tower.names().len()).map(|i| FieldElem::generator(tower, i)).collect();
    let id = GroupElement { word: Vec::new(), images: gens.clone() };
    let mut seen = BTreeMap::new();
    seen.insert(key(&gens), ());
    let mut out = vec![id.clone()];
    let mut queue = VecDeque::from([id]);
    while let Some(e) = queue.pop_front() {
        for g in 0..tower.galois().len() {
            let images: Vec<FieldElem> = e.images.iter().map(|x| x.galois(g)).collect::<Result<_>>()?;
            let k = key(&images);
            if seen.contains_key(&k) {
                continue;
            }
            seen.insert(k, ());
            let mut word = e.word.clone();
            word.push(g);
            let ne = GroupElement { word, images };
            out.push(ne.clone());
            queue.push_back(ne);
            if out.len() > GROUP_CAP {
                return Err(Error::OrbitIncomplete(format!("group exceeds {GROUP_CAP} elements")));
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub enum DescentOutcome {
    Descended(Box<IntegrabilityCertificate>),
    /// The fields are not determined by the integrals over the base field;
    /// a covering of this degree is needed.
    NeedsCovering(usize),
}

fn series_eq(a: &TruncSeries, b: &TruncSeries) -> Result<bool> {
    Ok(a.sub(b)?.is_zero())
}

fn field_eq(a: &FormalVectorField, b: &FormalVectorField) -> Result<bool> {
    for (x, y) in a.comps.iter().zip(&b.comps) {
        if !series_eq(x, y)? {
            return Ok(false);
        }
    }
    series_eq(&a.s_comp, &b.s_comp)
}

fn add_opt(acc: Option<TruncSeries>, t: TruncSeries) -> Result<Option<TruncSeries>> {
    Ok(Some(match acc {
        Some(a) => a.add(&t)?,
        None => t,
    }))
}

fn field_scale(y: &FormalVectorField, f: &TruncSeries) -> FormalVectorField {
    FormalVectorField { comps: y.comps.iter().map(|c| prod(c, f)).collect(), s_comp: prod(&y.s_comp, f) }
}

fn field_add(a: &FormalVectorField, b: &FormalVectorField) -> Result<FormalVectorField> {
    Ok(FormalVectorField {
        comps: a.comps.iter().zip(&b.comps).map(|(x, y)| x.add(y)).collect::<Result<_>>()?,
        s_comp: a.s_comp.add(&b.s_comp)?,
    })
}

fn field_is_zero(y: &FormalVectorField) -> bool {
    y.comps.iter().all(|c| c.is_zero()) && y.s_comp.is_zero()
}

/// Exponent vectors of total degree `1..=d` in `k` variables.
fn monomials(k: usize, d: u32) -> Vec<Vec<u32>> {
    (1..=d).flat_map(|e| crate::galois::compositions(k, e)).collect()
}

fn fixed(tower: &Arc<Tower>, s: &TruncSeries) -> Result<bool> {
    for (_, c) in s.terms() {
        let c = c.embed(tower)?;
        for g in 0..tower.galois().len() {
            if c.galois(g)? != c {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Replaces the first `l - 1` fields and the integrals of `cert` by
/// Galois-invariant combinations, or reports the degree of the covering on
/// which the fields live.
pub fn galois_descent(cert: &IntegrabilityCertificate, tower: &Arc<Tower>) -> Result<DescentOutcome> {
    if tower.galois().is_empty() {
        return Err(Error::OrbitIncomplete("no Galois automorphisms declared".into()));
    }
    let group = group_elements(tower)?;
    if group.len() < tower.dim() {
        return Err(Error::OrbitIncomplete(format!(
            "declared automorphisms generate {} elements for a tower of degree {}",
            group.len(),
            tower.dim()
        )));
    }
    let ints: Vec<TruncSeries> = cert.integrals.iter().map(|f| f.series()).collect::<Result<_>>()?;
    let ys = &cert.fields[..cert.l - 1];
    let x = cert.x();

    // integrals and fields under every group element
    let int_img: Vec<Vec<TruncSeries>> =
        group.iter().map(|g| ints.iter().map(|f| g.apply_series(tower, f)).collect::<Result<_>>()).collect::<Result<_>>()?;
    let y_img: Vec<Vec<FormalVectorField>> =
        group.iter().map(|g| ys.iter().map(|y| g.apply_field(tower, y)).collect::<Result<_>>()).collect::<Result<_>>()?;

    let mut kernel = Vec::new();
    for (e, imgs) in int_img.iter().enumerate() {
        let mut ok = true;
        for (a, b) in imgs.iter().zip(&ints) {
            ok &= series_eq(a, b)?;
        }
        if ok {
            kernel.push(e);
        }
    }
    // K-orbit of the tuple of fields
    let mut orbit: Vec<usize> = Vec::new();
    for &e in &kernel {
        let mut new = true;
        for &o in &orbit {
            let mut same = true;
            for (a, b) in y_img[e].iter().zip(&y_img[o]) {
                same &= field_eq(a, b)?;
            }
            if same {
                new = false;
                break;
            }
        }
        if new {
            orbit.push(e);
        }
    }
    if orbit.len() > 1 {
        return Ok(DescentOutcome::NeedsCovering(orbit.len()));
    }

    // a combination of integrals whose stabilizer is exactly the kernel
    let p = group.len() / kernel.len();
    let mut star: Option<Vec<TruncSeries>> = None;
    let mut trials: Vec<Vec<i64>> = Vec::new();
    for i in 0..ints.len() {
        let mut c = vec![0; ints.len()];
        c[i] = 1;
        trials.push(c);
    }
    for a in 0..ints.len() {
        for b in 0..ints.len() {
            if a != b {
                for w in 1..=3 {
                    let mut c = vec![0; ints.len()];
                    c[a] = 1;
                    c[b] = w;
                    trials.push(c);
                }
            }
        }
    }
    if ints.is_empty() || p == 1 {
        trials = vec![vec![0; ints.len()]];
    }
    for c in trials {
        let imgs: Vec<TruncSeries> = int_img
            .iter()
            .map(|row| {
                let mut acc: Option<TruncSeries> = None;
                for (f, &w) in row.iter().zip(&c) {
                    if w != 0 {
                        acc = add_opt(acc, f.scale(&FieldElem::from_i64(w)))?;
                    }
                }
                Ok(acc.unwrap_or_else(|| konst(&ints.first().cloned().unwrap_or_else(|| x.s_comp.clone()), cert.order, FieldElem::one())))
            })
            .collect::<Result<_>>()?;
        let mut stab = 0;
        for img in &imgs {
            if series_eq(img, &imgs[0])? {
                stab += 1;
            }
        }
        if stab == kernel.len() {
            star = Some(imgs);
            break;
        }
    }
    let star = star.ok_or_else(|| Error::OrbitIncomplete("no combination of integrals separates the conjugate fields".into()))?;

    // fields: sum over the group of sigma(F*)^m sigma(Y)
    let mut chosen: Vec<FormalVectorField> = Vec::new();
    let params: Vec<usize> = Vec::new();
    'fields: for yi in 0..ys.len() {
        for m in 0..p {
            let mut acc: Option<FormalVectorField> = None;
            for (e, _) in group.iter().enumerate() {
                let mut w = konst(&star[e], star[e].order(), FieldElem::one());
                for _ in 0..m {
                    w = prod(&w, &star[e]);
                }
                let t = field_scale(&y_img[e][yi], &w);
                acc = Some(match acc {
                    Some(a) => field_add(&a, &t)?,
                    None => t,
                });
            }
            let z = acc.unwrap();
            if field_is_zero(&z) {
                continue;
            }
            let mut trial = chosen.clone();
            trial.push(z.clone());
            trial.push(x.clone());
            if field_rank(&trial, &params) == trial.len() {
                chosen.push(z);
                if chosen.len() == cert.l - 1 {
                    break 'fields;
                }
            }
        }
    }
    if chosen.len() < cert.l - 1 {
        return Err(Error::RankDeficiency(format!("only {} of {} invariant fields found", chosen.len(), cert.l - 1)));
    }

    // integrals: Reynolds operator on monomials in the F's
    let need = cert.n - cert.l;
    let mut new_ints: Vec<TruncSeries> = Vec::new();
    if need > 0 {
        'ints: for mono in monomials(ints.len(), (2 * p).max(2) as u32) {
            let mut acc: Option<TruncSeries> = None;
            for row in &int_img {
                let mut t: Option<TruncSeries> = None;
                for (f, &e) in row.iter().zip(&mono) {
                    for _ in 0..e {
                        t = Some(match t {
                            Some(a) => prod(&a, f),
                            None => f.clone(),
                        });
                    }
                }
                acc = add_opt(acc, t.unwrap())?;
            }
            let r = acc.unwrap();
            if r.is_zero() {
                continue;
            }
            let mut trial = new_ints.clone();
            trial.push(r.clone());
            if gradient_rank(&trial)? == trial.len() {
                new_ints.push(r);
                if new_ints.len() == need {
                    break 'ints;
                }
            }
        }
    }
    if new_ints.len() < need {
        return Err(Error::RankDeficiency(format!("only {} of {need} invariant integrals found", new_ints.len())));
    }

    for s in chosen.iter().flat_map(|y| y.comps.iter().chain(std::iter::once(&y.s_comp))).chain(new_ints.iter()) {
        if !fixed(tower, s)? {
            return Err(Error::VerificationFailed("averaged object is not fixed by the group".into()));
        }
    }
    let order = chosen
        .iter()
        .flat_map(|y| y.comps.iter().chain(std::iter::once(&y.s_comp)))
        .chain(new_ints.iter())
        .map(|s| s.order())
        .min()
        .unwrap_or(cert.order);
    let mut fields = chosen;
    fields.push(x.clone());
    let integrals = new_ints.into_iter().map(FirstIntegral::from_series).collect();
    Ok(DescentOutcome::Descended(Box::new(IntegrabilityCertificate {
        n: cert.n,
        l: cert.l,
        order,
        fields,
        integrals,
        descent: DescentStatus::BaseField,
        inconclusive: cert.inconclusive,
    })))
}
