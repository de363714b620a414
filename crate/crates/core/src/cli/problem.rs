//! Problem files: a plain text format with `[section]` headers.
//!
//! ```text
//! [parameters]
//! alpha
//!
//! [tower]
//! w = sqrt(1+s^2)
//! galois g: w -> -w
//!
//! [system]
//! coordinates = x1, x2, s
//! x1' = alpha*x2
//! x2' = (alpha*x1 - s*x2)/(s^2+1)
//! s' = 1
//!
//! [curve]
//! x1 = 0
//!
//! [gauge]
//! 1, 1
//! 1/w, -1/w
//!
//! [options]
//! order = 4
//! alpha = 0.37
//! ```
//!
//! The last coordinate is the curve parameter; `[curve]` gives the others
//! as functions of `s` (missing entries are 0). `#` starts a comment.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::{parse, ElemEnv};
use crate::linalg::Matrix;
use crate::param::ParamScalar;
use crate::reduction::VectorFieldSpec;
use crate::tower::{FieldElem, Tower};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FileOptions {
    pub order: Option<usize>,
    pub k_max: Option<usize>,
    pub nu_max: Option<usize>,
    pub input_order: Option<usize>,
    pub base_point: Option<String>,
    pub values: BTreeMap<String, f64>,
}

#[derive(Clone, Debug)]
pub struct ProblemFile {
    pub params: Vec<String>,
    pub tower: Option<Arc<Tower>>,
    pub coords: Vec<String>,
    pub components: Vec<String>,
    pub curve: Vec<String>,
    pub gauge: Option<Vec<Vec<String>>>,
    pub logderivs: Option<Vec<String>>,
    pub options: FileOptions,
}

fn err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Input(format!("line {line}: {msg}"))
}

fn check_expr(line: usize, src: &str) -> Result<()> {
    parse(src).map(|_| ()).map_err(|e| err(line, format!("{e} in '{src}'")))
}

fn split_list(s: &str) -> Vec<String> {
    s.split(|c: char| c == ',' || c.is_whitespace()).filter(|x| !x.is_empty()).map(str::to_string).collect()
}

fn is_ident(s: &str) -> bool {
    let mut c = s.chars();
    c.next().is_some_and(|f| f.is_ascii_alphabetic()) && c.all(|x| x.is_ascii_alphanumeric() || x == '_')
}

/// Splits `a, b, f(c, d)` at top-level commas.
fn split_top(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for ch in s.chars() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(cur.trim().to_string());
                cur.clear();
                continue;
            }
            _ => {}
        }
        cur.push(ch);
    }
    if !cur.trim().is_empty() {
        out.push(cur.trim().to_string());
    }
    out
}

struct Radical {
    line: usize,
    name: String,
    degree: u32,
    radicand: String,
}

struct GaloisDecl {
    line: usize,
    name: String,
    images: Vec<(String, String)>,
}

fn parse_radical(line: usize, name: &str, rhs: &str) -> Result<Radical> {
    let rhs = rhs.trim();
    let inner = |prefix: &str| rhs.strip_prefix(prefix).and_then(|r| r.strip_suffix(')'));
    if let Some(body) = inner("sqrt(") {
        check_expr(line, body)?;
        return Ok(Radical { line, name: name.into(), degree: 2, radicand: body.into() });
    }
    if let Some(body) = inner("root(") {
        let parts = split_top(body);
        if parts.len() == 2 {
            let d: u32 = parts[0].parse().map_err(|_| err(line, "root degree must be an integer"))?;
            check_expr(line, &parts[1])?;
            return Ok(Radical { line, name: name.into(), degree: d, radicand: parts[1].clone() });
        }
    }
    Err(err(line, format!("expected sqrt(EXPR) or root(D, EXPR) for '{name}'")))
}

fn build_tower(rads: &[Radical], gal: &[GaloisDecl], params: &[String]) -> Result<Option<Arc<Tower>>> {
    if rads.is_empty() {
        if let Some(g) = gal.first() {
            return Err(err(g.line, "galois declared without a tower"));
        }
        return Ok(None);
    }
    let mut tower: Option<Arc<Tower>> = None;
    for r in rads {
        let env = ElemEnv::new(tower.clone(), params);
        let rad = env.eval_str(&r.radicand).map_err(|e| err(r.line, e))?;
        tower = Some(Tower::extend(tower.as_ref(), &r.name, r.degree, &rad).map_err(|e| err(r.line, e))?);
    }
    let t = tower.unwrap();
    if gal.is_empty() {
        return Ok(Some(t));
    }
    let env = ElemEnv::new(Some(t.clone()), params);
    let mut gens = Vec::new();
    for g in gal {
        let mut images: Vec<FieldElem> = (0..t.names().len()).map(|i| FieldElem::generator(&t, i)).collect();
        for (w, img) in &g.images {
            let i = t.generator_index(w).ok_or_else(|| err(g.line, format!("'{w}' is not a tower generator")))?;
            images[i] = env.eval_str(img).map_err(|e| err(g.line, e))?;
        }
        gens.push((g.name.clone(), images));
    }
    Ok(Some(t.with_galois(gens).map_err(|e| err(gal[0].line, e))?))
}

impl ProblemFile {
    pub fn parse(src: &str) -> Result<ProblemFile> {
        let mut section = String::new();
        let mut params = Vec::new();
        let mut rads = Vec::new();
        let mut gal = Vec::new();
        let mut coords: Vec<String> = Vec::new();
        let mut comps: BTreeMap<String, (usize, String)> = BTreeMap::new();
        let mut curve: BTreeMap<String, (usize, String)> = BTreeMap::new();
        let mut gauge: Vec<Vec<String>> = Vec::new();
        let mut logd: Vec<String> = Vec::new();
        let mut options = FileOptions::default();
        let mut raw_values: Vec<(usize, String, String)> = Vec::new();
        for (n, raw) in src.lines().enumerate() {
            let line = n + 1;
            let text = raw.split('#').next().unwrap().trim();
            if text.is_empty() {
                continue;
            }
            if let Some(name) = text.strip_prefix('[').and_then(|t| t.strip_suffix(']')) {
                section = name.trim().to_lowercase();
                if !["parameters", "tower", "system", "curve", "gauge", "logderivs", "options"].contains(&section.as_str()) {
                    return Err(err(line, format!("unknown section [{name}]")));
                }
                continue;
            }
            match section.as_str() {
                "" => return Err(err(line, "expected a [section] header")),
                "parameters" => {
                    for p in split_list(text) {
                        if !is_ident(&p) {
                            return Err(err(line, format!("invalid parameter name '{p}'")));
                        }
                        params.push(p);
                    }
                }
                "tower" => {
                    if let Some(rest) = text.strip_prefix("galois ") {
                        let (name, maps) = rest.split_once(':').ok_or_else(|| err(line, "expected 'galois NAME: w -> EXPR, ...'"))?;
                        let mut images = Vec::new();
                        for m in split_top(maps) {
                            let (w, img) = m.split_once("->").ok_or_else(|| err(line, format!("expected 'w -> EXPR', found '{m}'")))?;
                            check_expr(line, img.trim())?;
                            images.push((w.trim().to_string(), img.trim().to_string()));
                        }
                        gal.push(GaloisDecl { line, name: name.trim().into(), images });
                    } else {
                        let (name, rhs) = text.split_once('=').ok_or_else(|| err(line, "expected 'NAME = sqrt(EXPR)'"))?;
                        let name = name.trim();
                        if !is_ident(name) {
                            return Err(err(line, format!("invalid generator name '{name}'")));
                        }
                        rads.push(parse_radical(line, name, rhs)?);
                    }
                }
                "system" => {
                    let (lhs, rhs) = text.split_once('=').ok_or_else(|| err(line, "expected 'coordinates = ...' or \"x' = EXPR\""))?;
                    let lhs = lhs.trim();
                    if lhs == "coordinates" {
                        coords = split_list(rhs);
                        if let Some(bad) = coords.iter().find(|c| !is_ident(c)) {
                            return Err(err(line, format!("invalid coordinate name '{bad}'")));
                        }
                    } else if let Some(v) = lhs.strip_suffix('\'') {
                        check_expr(line, rhs.trim())?;
                        comps.insert(v.trim().to_string(), (line, rhs.trim().to_string()));
                    } else {
                        return Err(err(line, format!("expected a derivative like {lhs}' on the left")));
                    }
                }
                "curve" => {
                    let (lhs, rhs) = text.split_once('=').ok_or_else(|| err(line, "expected 'x = EXPR'"))?;
                    check_expr(line, rhs.trim())?;
                    curve.insert(lhs.trim().to_string(), (line, rhs.trim().to_string()));
                }
                "gauge" => {
                    let row = split_top(text);
                    for e in &row {
                        check_expr(line, e)?;
                    }
                    gauge.push(row);
                }
                "logderivs" => {
                    check_expr(line, text)?;
                    logd.push(text.to_string());
                }
                "options" => {
                    let (k, v) = text.split_once('=').ok_or_else(|| err(line, "expected 'key = value'"))?;
                    let (k, v) = (k.trim(), v.trim());
                    let int = |v: &str| v.parse::<usize>().map_err(|_| err(line, format!("'{k}' needs a non-negative integer")));
                    match k {
                        "order" => options.order = Some(int(v)?),
                        "k_max" => options.k_max = Some(int(v)?),
                        "nu_max" => options.nu_max = Some(int(v)?),
                        "input_order" => options.input_order = Some(int(v)?),
                        "base_point" => {
                            check_expr(line, v)?;
                            options.base_point = Some(v.to_string());
                        }
                        _ => raw_values.push((line, k.to_string(), v.to_string())),
                    }
                }
                _ => unreachable!(),
            }
        }
        for (line, k, v) in raw_values {
            if !params.contains(&k) {
                return Err(err(line, format!("unknown option '{k}'")));
            }
            let x: f64 = v.parse().map_err(|_| err(line, format!("value of '{k}' must be a number")))?;
            options.values.insert(k, x);
        }
        if coords.len() < 2 {
            return Err(Error::Input("[system] needs 'coordinates = ...' with at least two names".into()));
        }
        let mut components = Vec::new();
        for c in &coords {
            let (_, e) = comps.remove(c).ok_or_else(|| Error::Input(format!("[system] has no equation for {c}'")))?;
            components.push(e);
        }
        if let Some((v, (line, _))) = comps.into_iter().next() {
            return Err(err(line, format!("'{v}' is not a declared coordinate")));
        }
        let mut curve_exprs = Vec::new();
        for c in &coords[..coords.len() - 1] {
            curve_exprs.push(curve.remove(c).map(|x| x.1).unwrap_or_else(|| "0".into()));
        }
        if let Some((v, (line, _))) = curve.into_iter().next() {
            return Err(err(line, format!("'{v}' is not a curve coordinate")));
        }
        let tower = build_tower(&rads, &gal, &params)?;
        Ok(ProblemFile {
            params,
            tower,
            coords,
            components,
            curve: curve_exprs,
            gauge: if gauge.is_empty() { None } else { Some(gauge) },
            logderivs: if logd.is_empty() { None } else { Some(logd) },
            options,
        })
    }

    pub fn elem_env(&self) -> ElemEnv {
        ElemEnv::new(self.tower.clone(), &self.params)
    }

    pub fn spec(&self) -> Result<VectorFieldSpec> {
        let env = self.elem_env();
        let gamma = self.curve.iter().map(|c| env.eval_str(c)).collect::<Result<Vec<_>>>()?;
        let comps: Vec<&str> = self.components.iter().map(String::as_str).collect();
        VectorFieldSpec::new(self.coords.clone(), &comps, gamma, self.tower.clone(), &self.params)
    }

    pub fn gauge_matrix(&self) -> Result<Option<Matrix<FieldElem>>> {
        let Some(rows) = &self.gauge else { return Ok(None) };
        let n = self.coords.len() - 1;
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(Error::Input(format!("[gauge] must be {n}x{n}")));
        }
        let env = self.elem_env();
        let m = rows.iter().map(|r| r.iter().map(|e| env.eval_str(e)).collect::<Result<Vec<_>>>()).collect::<Result<Vec<_>>>()?;
        Ok(Some(Matrix::from_rows(m)))
    }

    pub fn logderivs(&self) -> Result<Option<Vec<FieldElem>>> {
        let Some(l) = &self.logderivs else { return Ok(None) };
        let env = self.elem_env();
        Ok(Some(l.iter().map(|e| env.eval_str(e)).collect::<Result<_>>()?))
    }

    pub fn base_point(&self, over: Option<&str>) -> Result<Option<ParamScalar>> {
        let Some(src) = over.or(self.options.base_point.as_deref()) else { return Ok(None) };
        let v = ElemEnv::new(None, &self.params).eval_str(src)?;
        v.as_param().ok_or_else(|| Error::Input(format!("base point '{src}' must be a constant")))
            .map(Some)
    }

    /// Numeric parameter values keyed by parameter index.
    pub fn numeric_values(&self, extra: &BTreeMap<String, f64>) -> BTreeMap<usize, f64> {
        let mut all = self.options.values.clone();
        all.extend(extra.iter().map(|(k, v)| (k.clone(), *v)));
        all.into_iter().filter(|(k, _)| self.params.contains(k)).map(|(k, v)| (crate::param::param_index(&k), v)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EX1: &str = "
[parameters]
alpha
[tower]
w = sqrt(1+s^2)   # the curve field
galois g: w -> -w
[system]
coordinates = q1, q2, s
q1' = alpha*q2
q2' = (alpha*q1 - s*q2)/(s^2+1)
s' = 1
[gauge]
1, 1
1/w, -1/w
[options]
order = 3
alpha = 0.37
";

    #[test]
    fn parses_sections() {
        let p = ProblemFile::parse(EX1).unwrap();
        assert_eq!(p.coords, vec!["q1", "q2", "s"]);
        assert_eq!(p.curve, vec!["0", "0"]);
        assert_eq!(p.options.order, Some(3));
        assert_eq!(p.options.values.get("alpha"), Some(&0.37));
        assert_eq!(p.tower.as_ref().unwrap().galois().len(), 1);
        assert!(p.gauge_matrix().unwrap().is_some());
        p.spec().unwrap();
    }

    #[test]
    fn errors_carry_lines() {
        let e = ProblemFile::parse("[system]\ncoordinates = x, s\nx' = (x+\ns' = 1\n").unwrap_err();
        assert!(e.to_string().starts_with("line 3: at column"), "{e}");
        let e = ProblemFile::parse("[options]\nbeta = 2\n").unwrap_err();
        assert_eq!(e.to_string(), "line 2: unknown option 'beta'");
        let e = ProblemFile::parse("[system]\ncoordinates = x, s\nx' = 1\n").unwrap_err();
        assert_eq!(e.to_string(), "[system] has no equation for s'");
        let e = ProblemFile::parse("x = 1").unwrap_err();
        assert_eq!(e.to_string(), "line 1: expected a [section] header");
    }
}
