//! The expression language shared by problem files and certificates:
//! identifiers, integer and decimal literals, `+ - * / ^` (integer
//! exponents), parentheses and function calls such as `sqrt(...)`.

use std::fmt;

use crate::error::{Error, Result};
use crate::param::ParamScalar;
use crate::scalar::{parse_decimal, Field, Rational};
use crate::tower::FieldElem;

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(Rational),
    Var(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i64),
    Call(String, Vec<Expr>),
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(Rational),
    Ident(String),
    Op(char),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub position: usize,
    pub expected: String,
    pub found: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at column {}: expected {}, found {}", self.position + 1, self.expected, self.found)
    }
}

impl From<ParseError> for Error {
    fn from(e: ParseError) -> Self {
        Error::Input(format!("parse error {e}"))
    }
}

fn tokenize(src: &str) -> std::result::Result<Vec<(usize, Tok)>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            let q = parse_decimal(&text).ok_or(ParseError {
                position: start,
                expected: "number".into(),
                found: format!("'{text}'"),
            })?;
            out.push((start, Tok::Num(q)));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((start, Tok::Ident(chars[start..i].iter().collect())));
        } else if "+-*/^(),".contains(c) {
            out.push((i, Tok::Op(c)));
            i += 1;
        } else {
            return Err(ParseError { position: i, expected: "expression".into(), found: format!("'{c}'") });
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.1)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |t| t.0)
    }

    fn err(&self, expected: &str) -> ParseError {
        let found = match self.peek() {
            None => "end of input".to_string(),
            Some(Tok::Num(q)) => format!("'{q}'"),
            Some(Tok::Ident(s)) => format!("'{s}'"),
            Some(Tok::Op(c)) => format!("'{c}'"),
        };
        ParseError { position: self.here(), expected: expected.into(), found }
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Op(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> std::result::Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> std::result::Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> std::result::Result<Expr, ParseError> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> std::result::Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.eat('^') {
            let neg = self.eat('-');
            let paren = !neg && self.eat('(');
            let neg = neg || (paren && self.eat('-'));
            let e = match self.peek() {
                Some(Tok::Num(q)) if q.is_integer() => {
                    let v: i64 = q.to_integer().try_into().map_err(|_| self.err("small integer exponent"))?;
                    self.pos += 1;
                    v
                }
                _ => return Err(self.err("integer exponent")),
            };
            if paren && !self.eat(')') {
                return Err(self.err("')'"));
            }
            return Ok(Expr::Pow(Box::new(base), if neg { -e } else { e }));
        }
        Ok(base)
    }

    fn atom(&mut self) -> std::result::Result<Expr, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Num(q)) => {
                self.pos += 1;
                Ok(Expr::Num(q))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if self.eat('(') {
                    let mut args = vec![self.expr()?];
                    while self.eat(',') {
                        args.push(self.expr()?);
                    }
                    if !self.eat(')') {
                        return Err(self.err("')' or ','"));
                    }
                    Ok(Expr::Call(name, args))
                } else {
                    Ok(Expr::Var(name))
                }
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(self.err("')'"));
                }
                Ok(e)
            }
            _ => Err(self.err("number, identifier or '('")),
        }
    }
}

pub fn parse(src: &str) -> std::result::Result<Expr, ParseError> {
    let toks = tokenize(src)?;
    let mut p = Parser { toks, pos: 0, end: src.chars().count() };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(p.err("operator or end of input"));
    }
    Ok(e)
}

/// Target algebra for expression evaluation.
pub trait Evaluator<T> {
    fn constant(&self, q: &Rational) -> Result<T>;
    fn var(&self, name: &str) -> Result<T>;
    fn add(&self, a: T, b: T) -> Result<T>;
    fn sub(&self, a: T, b: T) -> Result<T>;
    fn mul(&self, a: T, b: T) -> Result<T>;
    fn div(&self, a: T, b: T) -> Result<T>;
    fn neg(&self, a: T) -> Result<T>;
    fn pow(&self, a: T, e: i64) -> Result<T>;
    fn call(&self, name: &str, _args: &[Expr]) -> Result<T> {
        Err(Error::Input(format!("unknown function {name}")))
    }
}

impl Expr {
    pub fn eval<T>(&self, ev: &dyn Evaluator<T>) -> Result<T> {
        match self {
            Expr::Num(q) => ev.constant(q),
            Expr::Var(v) => ev.var(v),
            Expr::Neg(a) => ev.neg(a.eval(ev)?),
            Expr::Add(a, b) => ev.add(a.eval(ev)?, b.eval(ev)?),
            Expr::Sub(a, b) => ev.sub(a.eval(ev)?, b.eval(ev)?),
            Expr::Mul(a, b) => ev.mul(a.eval(ev)?, b.eval(ev)?),
            Expr::Div(a, b) => ev.div(a.eval(ev)?, b.eval(ev)?),
            Expr::Pow(a, e) => ev.pow(a.eval(ev)?, *e),
            Expr::Call(name, args) => ev.call(name, args),
        }
    }

    /// Identifiers used anywhere in the expression (function names excluded).
    pub fn identifiers(&self, out: &mut Vec<String>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Expr::Neg(a) | Expr::Pow(a, _) => a.identifiers(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.identifiers(out);
                b.identifiers(out);
            }
            Expr::Call(_, args) => args.iter().for_each(|a| a.identifiers(out)),
        }
    }
}

/// Evaluates expressions to tower elements: `s` (or the declared curve
/// variable), parameters and radical generators.
pub struct ElemEnv {
    pub tower: Option<std::sync::Arc<crate::tower::Tower>>,
    pub params: Vec<String>,
    pub curve_var: String,
}

impl ElemEnv {
    pub fn new(tower: Option<std::sync::Arc<crate::tower::Tower>>, params: &[String]) -> Self {
        ElemEnv { tower, params: params.to_vec(), curve_var: "s".into() }
    }

    pub fn eval_str(&self, src: &str) -> Result<FieldElem> {
        let e = parse(src)?;
        let v = e.eval(self)?;
        match &self.tower {
            Some(t) => v.embed(t),
            None => Ok(v),
        }
    }
}

impl Evaluator<FieldElem> for ElemEnv {
    fn constant(&self, q: &Rational) -> Result<FieldElem> {
        Ok(FieldElem::from_rational(q))
    }
    fn var(&self, name: &str) -> Result<FieldElem> {
        if name == self.curve_var {
            return Ok(FieldElem::s());
        }
        if self.params.iter().any(|p| p == name) {
            return Ok(FieldElem::from_param(ParamScalar::named(name)));
        }
        if let Some(t) = &self.tower {
            if let Some(i) = t.generator_index(name) {
                return Ok(FieldElem::generator(t, i));
            }
        }
        Err(Error::Input(format!("undeclared identifier '{name}'")))
    }
    fn add(&self, a: FieldElem, b: FieldElem) -> Result<FieldElem> {
        Ok(Field::add(&a, &b))
    }
    fn sub(&self, a: FieldElem, b: FieldElem) -> Result<FieldElem> {
        Ok(Field::sub(&a, &b))
    }
    fn mul(&self, a: FieldElem, b: FieldElem) -> Result<FieldElem> {
        Ok(Field::mul(&a, &b))
    }
    fn div(&self, a: FieldElem, b: FieldElem) -> Result<FieldElem> {
        a.div_checked(&b)
    }
    fn neg(&self, a: FieldElem) -> Result<FieldElem> {
        Ok(Field::neg(&a))
    }
    fn pow(&self, a: FieldElem, e: i64) -> Result<FieldElem> {
        if e >= 0 {
            Ok(a.pow(e as u32))
        } else {
            Ok(a.try_inv()?.pow((-e) as u32))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, rat_int};

    struct Q;
    impl Evaluator<Rational> for Q {
        fn constant(&self, q: &Rational) -> Result<Rational> {
            Ok(q.clone())
        }
        fn var(&self, name: &str) -> Result<Rational> {
            match name {
                "x" => Ok(rat_int(3)),
                _ => Err(Error::Input(format!("unknown {name}"))),
            }
        }
        fn add(&self, a: Rational, b: Rational) -> Result<Rational> {
            Ok(a + b)
        }
        fn sub(&self, a: Rational, b: Rational) -> Result<Rational> {
            Ok(a - b)
        }
        fn mul(&self, a: Rational, b: Rational) -> Result<Rational> {
            Ok(a * b)
        }
        fn div(&self, a: Rational, b: Rational) -> Result<Rational> {
            Ok(a / b)
        }
        fn neg(&self, a: Rational) -> Result<Rational> {
            Ok(-a)
        }
        fn pow(&self, a: Rational, e: i64) -> Result<Rational> {
            Ok(num_traits::pow::Pow::pow(a, e as i32))
        }
    }

    #[test]
    fn precedence() {
        let v = |s: &str| parse(s).unwrap().eval(&Q).unwrap();
        assert_eq!(v("1 + 2*x^2"), rat_int(19));
        assert_eq!(v("-x^2"), rat_int(-9));
        assert_eq!(v("x^-1 + x^(-2)"), rat(4, 9));
        assert_eq!(v("1/2/x"), rat(1, 6));
        assert_eq!(v("0.25*(x - 1)"), rat(1, 2));
    }

    #[test]
    fn errors_carry_position() {
        let e = parse("1 + * 2").unwrap_err();
        assert_eq!(e.position, 4);
        assert!(parse("x^y").is_err());
        assert!(parse("(x + 1").is_err());
        assert!(matches!(parse("sqrt(1 + s)").unwrap(), Expr::Call(..)));
    }
}
