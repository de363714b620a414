//! JSON report and certificate schema. Every series is stored in the
//! canonical text form `(c)*q1^2 + ... + O(k)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrability::{DescentStatus, FirstIntegral, IntegrabilityCertificate, VerificationReport};
use crate::series::{Alphabet, FormalVectorField, SeriesEnv, TruncSeries};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct OptionsEcho {
    pub order: usize,
    pub input_order: usize,
    pub k_max: usize,
    pub nu_max: usize,
    pub base_point: Option<String>,
    pub params: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Stage {
    pub stage: String,
    pub status: String,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SystemReport {
    pub coordinates: Vec<String>,
    pub reduced: Vec<String>,
    pub s_eq: String,
    pub gauge_applied: bool,
    pub lambdas: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PlaceRow {
    pub place: String,
    pub ramification: u32,
    pub kind: String,
    pub exponents: Vec<Option<String>>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FuchsianReport {
    pub fuchsian: bool,
    pub detail: String,
    pub places: Vec<PlaceRow>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RelationRow {
    pub k: Vec<i64>,
    pub witness: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct LatticeReport {
    pub k_max: usize,
    pub rank: usize,
    pub basis: Vec<RelationRow>,
    pub inconclusive: Vec<Vec<i64>>,
    pub candidates_tested: usize,
    pub l_candidate: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct LocalRow {
    pub place: String,
    pub m: u32,
    pub result: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct DiophantineRowJson {
    pub nu: usize,
    pub eps_min: f64,
    pub term: f64,
    pub partial_sum: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct DiophantineJson {
    pub nu_max: usize,
    pub nu_reached: usize,
    pub exponent_estimate: f64,
    pub resonances: Vec<(usize, Vec<i64>)>,
    pub verdict: String,
    pub rows: Vec<DiophantineRowJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FlowJson {
    pub order: usize,
    pub base_point: String,
    pub phi: Vec<String>,
    pub phi_t: String,
    pub logs: Vec<String>,
    pub resonant: Vec<(usize, Vec<u32>)>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ObstructionJson {
    pub order: usize,
    /// 1-based.
    pub component: usize,
    pub index: Vec<u32>,
    pub h_exponent: Vec<i64>,
    pub kind: String,
    pub equation: String,
    pub rechecked: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FieldJson {
    pub q: Vec<String>,
    pub s: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct IntegralJson {
    pub num: String,
    pub den: String,
    pub verified_order: usize,
}

/// A certificate as written to disk. `definitions` lets hand-written files
/// name sub-expressions (`["F1", "q1^2 - (1+s^2)*q2^2"]`), usable in later
/// definitions and in every series.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CertificateJson {
    pub schema_version: u32,
    pub n: usize,
    pub l: usize,
    pub order: usize,
    pub parameters: Vec<String>,
    pub tower: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub definitions: Vec<(String, String)>,
    pub fields: Vec<FieldJson>,
    pub integrals: Vec<IntegralJson>,
    pub descent: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CheckJson {
    pub name: String,
    pub passed: bool,
    pub order: Option<usize>,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct LinearizationJson {
    pub order: usize,
    pub verified_order: usize,
    pub map: Vec<String>,
    pub fixed_by: Vec<String>,
    pub moved_by: Vec<String>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct RunReport {
    pub schema_version: u32,
    pub command: String,
    pub options: OptionsEcho,
    pub stages: Vec<Stage>,
    pub system: Option<SystemReport>,
    pub fuchsian: Option<FuchsianReport>,
    pub resonance: Option<LatticeReport>,
    pub local_checks: Vec<LocalRow>,
    pub diophantine: Option<DiophantineJson>,
    pub exceptional_parameters: Vec<String>,
    pub flow: Option<FlowJson>,
    pub obstruction: Option<ObstructionJson>,
    pub certificate: Option<CertificateJson>,
    pub descent: Option<String>,
    pub linearization: Option<LinearizationJson>,
    pub verification: Vec<CheckJson>,
    pub verdict: String,
    pub exit_code: i32,
    /// Wall-clock milliseconds per stage; only with `--timing`, since it
    /// breaks byte-for-byte reproducibility.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<BTreeMap<String, u64>>,
}

impl RunReport {
    pub fn stage(&mut self, stage: &str, status: &str, detail: impl Into<String>) {
        self.stages.push(Stage { stage: stage.into(), status: status.into(), detail: detail.into() });
    }

    pub fn checks(&mut self, rep: &VerificationReport) {
        self.verification.extend(rep.entries.iter().map(|e| CheckJson {
            name: e.name.clone(),
            passed: e.passed,
            order: e.order,
            detail: e.detail.clone(),
        }));
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

impl CertificateJson {
    pub fn from_certificate(cert: &IntegrabilityCertificate, params: &[String], tower: &[String]) -> Self {
        CertificateJson {
            schema_version: SCHEMA_VERSION,
            n: cert.n,
            l: cert.l,
            order: cert.order,
            parameters: params.to_vec(),
            tower: tower.to_vec(),
            definitions: Vec::new(),
            fields: cert
                .fields
                .iter()
                .map(|y| FieldJson { q: y.comps.iter().map(|c| c.to_string()).collect(), s: y.s_comp.to_string() })
                .collect(),
            integrals: cert
                .integrals
                .iter()
                .map(|f| IntegralJson { num: f.num.to_string(), den: f.den.to_string(), verified_order: f.verified_order })
                .collect(),
            descent: cert.descent.to_string(),
        }
    }

    /// Reads a certificate back; `env` supplies the tower and parameters of
    /// the problem and must use the `q` alphabet with `n - 1` variables.
    pub fn to_certificate(&self, env: &SeriesEnv) -> Result<IntegrabilityCertificate> {
        let bad = |m: String| Error::SchemaMismatch(m);
        if self.schema_version != SCHEMA_VERSION {
            return Err(bad(format!("schema_version {} (expected {SCHEMA_VERSION})", self.schema_version)));
        }
        let nq = env.var_names.len();
        if self.n != nq + 1 {
            return Err(bad(format!("certificate has n = {} but the problem has {} coordinates", self.n, nq + 1)));
        }
        if self.l == 0 || self.fields.len() != self.l || self.integrals.len() + self.l != self.n {
            return Err(bad(format!(
                "l = {} with {} fields and {} integrals for n = {}",
                self.l,
                self.fields.len(),
                self.integrals.len(),
                self.n
            )));
        }
        let mut env = SeriesEnv {
            alphabet: env.alphabet,
            order: env.order,
            var_names: env.var_names.clone(),
            tower: env.tower.clone(),
            params: env.params.clone(),
            curve_var: env.curve_var.clone(),
            bindings: env.bindings.clone(),
        };
        env.order = self.order;
        for (name, src) in &self.definitions {
            let v = env.eval_str(src).map_err(|e| bad(format!("definition {name}: {e}")))?;
            env.bindings.insert(name.clone(), v);
        }
        let read = |what: &str, src: &str| -> Result<TruncSeries> {
            read_series(&env, src).map_err(|e| bad(format!("{what}: {e}")))
        };
        let mut fields = Vec::new();
        for (i, f) in self.fields.iter().enumerate() {
            if f.q.len() != nq {
                return Err(bad(format!("field {} has {} q-components, expected {nq}", i + 1, f.q.len())));
            }
            let comps = f.q.iter().enumerate().map(|(j, c)| read(&format!("field {} q{}", i + 1, j + 1), c)).collect::<Result<_>>()?;
            fields.push(FormalVectorField { comps, s_comp: read(&format!("field {} s", i + 1), &f.s)? });
        }
        let mut integrals = Vec::new();
        for (i, f) in self.integrals.iter().enumerate() {
            let num = read(&format!("integral {} num", i + 1), &f.num)?;
            let den = read(&format!("integral {} den", i + 1), &f.den)?;
            let mut fi = FirstIntegral::from_series(num);
            fi.den = den;
            fi.verified_order = f.verified_order;
            integrals.push(fi);
        }
        let descent = match self.descent.as_str() {
            "base-field" => DescentStatus::BaseField,
            "not-attempted" => DescentStatus::NotAttempted,
            d => match d.strip_prefix("needs-covering(").and_then(|x| x.strip_suffix(')')).and_then(|x| x.parse().ok()) {
                Some(k) => DescentStatus::NeedsCovering(k),
                None => return Err(bad(format!("unknown descent status '{d}'"))),
            },
        };
        Ok(IntegrabilityCertificate { n: self.n, l: self.l, order: self.order, fields, integrals, descent, inconclusive: 0 })
    }
}

/// Parses `EXPR + O(k)` (or a bare expression) to a series of order `k - 1`.
pub fn read_series(env: &SeriesEnv, src: &str) -> Result<TruncSeries> {
    let src = src.trim();
    let (body, order) = match src.rfind("O(") {
        Some(p) if src.ends_with(')') => {
            let k: usize = src[p + 2..src.len() - 1]
                .trim()
                .parse()
                .map_err(|_| Error::Input(format!("bad order term in '{src}'")))?;
            let head = src[..p].trim_end();
            let head = head.strip_suffix('+').ok_or_else(|| Error::Input(format!("expected '+ O(k)' in '{src}'")))?;
            (head.trim_end(), k.checked_sub(1).ok_or_else(|| Error::Input("O(0) is not a valid order".into()))?)
        }
        _ => (src, env.order),
    };
    let sub = SeriesEnv {
        alphabet: env.alphabet,
        order,
        var_names: env.var_names.clone(),
        tower: env.tower.clone(),
        params: env.params.clone(),
        curve_var: env.curve_var.clone(),
        bindings: env.bindings.iter().map(|(k, v)| (k.clone(), v.truncate(order))).collect(),
    };
    let v = sub.eval_str(body)?;
    if v.order() < order {
        return Err(Error::Input(format!("'{src}' only determines terms below order {}", v.order() + 1)));
    }
    Ok(v.truncate(order))
}

pub fn q_env(nq: usize, order: usize, tower: Option<std::sync::Arc<crate::tower::Tower>>, params: &[String]) -> SeriesEnv {
    SeriesEnv::new(Alphabet::Q, order, (1..=nq).map(|j| format!("q{j}")).collect(), tower, params)
}
