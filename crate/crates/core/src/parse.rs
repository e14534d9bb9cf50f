//! Infix parser for field expressions.
//!
//! Scalars: `+ - * / ^`, numbers, `x y z T pi`, and `exp log sin cos tan sqrt
//! atan atan2`. Vector-valued forms: `[f, g, h]`, `grad`, `curl`, `cross`,
//! `scale`, `lie`, `killing_lie`; plus `dot`, `comp`, `div`, `d` and `compose`
//! returning scalars. Anything printed by the `Display` impls parses back.

use thiserror::Error;

use crate::expr::{Func, ScalarExpr, Var, VectorExpr};

#[derive(Clone, Debug, PartialEq, Error)]
#[error("parse error at byte {position}: {message}")]
pub struct ParseError {
    pub position: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text = &src[start..i];
            let v: f64 = text.parse().map_err(|_| ParseError {
                position: start,
                message: format!("malformed number '{text}'"),
            })?;
            out.push((start, Tok::Num(v)));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(src[start..i].to_string())));
        } else if "+-*/^(),[]".contains(c) {
            out.push((i, Tok::Sym(c)));
            i += 1;
        } else {
            return Err(ParseError {
                position: i,
                message: format!("unexpected character '{c}'"),
            });
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
enum Value {
    S(ScalarExpr),
    V(VectorExpr),
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    src: &'a str,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        let position = self.toks.get(self.pos).map(|t| t.0).unwrap_or(self.src.len());
        Err(ParseError {
            position,
            message: message.into(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.1)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            self.err(format!("expected '{c}'"))
        }
    }

    fn expr(&mut self) -> Result<Value, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                let rhs = self.term()?;
                lhs = match (lhs, rhs) {
                    (Value::S(a), Value::S(b)) => Value::S(a + b),
                    (Value::V(a), Value::V(b)) => Value::V(a + b),
                    _ => return self.err("cannot add a scalar and a vector"),
                };
            } else if self.eat('-') {
                let rhs = self.term()?;
                lhs = match (lhs, rhs) {
                    (Value::S(a), Value::S(b)) => Value::S(a - b),
                    (Value::V(a), Value::V(b)) => Value::V(a - b),
                    _ => return self.err("cannot subtract a scalar and a vector"),
                };
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Value, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                let rhs = self.unary()?;
                lhs = match (lhs, rhs) {
                    (Value::S(a), Value::S(b)) => Value::S(a * b),
                    (Value::S(a), Value::V(b)) | (Value::V(b), Value::S(a)) => Value::V(a * b),
                    _ => return self.err("use cross() or dot() to multiply vectors"),
                };
            } else if self.eat('/') {
                let rhs = self.unary()?;
                lhs = match (lhs, rhs) {
                    (Value::S(a), Value::S(b)) => Value::S(a / b),
                    (Value::V(a), Value::S(b)) => Value::V((1.0 / b) * a),
                    _ => return self.err("cannot divide by a vector"),
                };
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Value, ParseError> {
        if self.eat('-') {
            return Ok(match self.unary()? {
                Value::S(s) => match s.as_constant() {
                    Some(c) => Value::S(ScalarExpr::constant(-c)),
                    None => Value::S(-s),
                },
                Value::V(v) => Value::V(-v),
            });
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Value, ParseError> {
        let base = self.atom()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let exponent = self.unary()?;
        match (base, exponent) {
            (Value::S(b), Value::S(e)) => Ok(Value::S(match e.as_constant() {
                Some(c) if c.fract() == 0.0 && c.abs() <= i32::MAX as f64 => b.powi(c as i32),
                Some(c) => b.powf(c),
                None => b.pow(e),
            })),
            _ => self.err("exponentiation is only defined for scalars"),
        }
    }

    fn scalar(&mut self) -> Result<ScalarExpr, ParseError> {
        match self.expr()? {
            Value::S(s) => Ok(s),
            Value::V(_) => self.err("expected a scalar expression"),
        }
    }

    fn vector(&mut self) -> Result<VectorExpr, ParseError> {
        match self.expr()? {
            Value::V(v) => Ok(v),
            Value::S(_) => self.err("expected a vector expression"),
        }
    }

    fn constant_triple(&mut self) -> Result<[f64; 3], ParseError> {
        self.expect('[')?;
        let mut out = [0.0; 3];
        for (i, slot) in out.iter_mut().enumerate() {
            if i > 0 {
                self.expect(',')?;
            }
            *slot = match self.scalar()?.as_constant() {
                Some(c) => c,
                None => return self.err("expected a numeric constant"),
            };
        }
        self.expect(']')?;
        Ok(out)
    }

    fn axis(&mut self) -> Result<usize, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                match name.as_str() {
                    "x" => Ok(0),
                    "y" => Ok(1),
                    "z" => Ok(2),
                    _ => self.err(format!("'{name}' is not an axis")),
                }
            }
            Some(Tok::Num(n)) if n.fract() == 0.0 && (0.0..3.0).contains(&n) => {
                self.pos += 1;
                Ok(n as usize)
            }
            _ => self.err("expected an axis (x, y, z or 0..2)"),
        }
    }

    fn call(&mut self, name: &str) -> Result<Value, ParseError> {
        if let Some(f) = Func::from_name(name) {
            let arg = self.scalar()?;
            self.expect(')')?;
            return Ok(Value::S(arg.func(f)));
        }
        let out = match name {
            "atan2" => {
                let yv = self.scalar()?;
                self.expect(',')?;
                let xv = self.scalar()?;
                Value::S(ScalarExpr::atan2(yv, xv))
            }
            "grad" => Value::V(VectorExpr::grad(&self.scalar()?)),
            "curl" => Value::V(self.vector()?.curl()),
            "div" => Value::S(self.vector()?.div()),
            "cross" => {
                let u = self.vector()?;
                self.expect(',')?;
                let v = self.vector()?;
                Value::V(u.cross(&v))
            }
            "dot" => {
                let u = self.vector()?;
                self.expect(',')?;
                let v = self.vector()?;
                Value::S(u.dot(&v))
            }
            "scale" => {
                let s = self.scalar()?;
                self.expect(',')?;
                let v = self.vector()?;
                Value::V(v.scale(&s))
            }
            "comp" => {
                let v = self.vector()?;
                self.expect(',')?;
                Value::S(v.component(self.axis()?))
            }
            "d" => {
                let s = self.scalar()?;
                self.expect(',')?;
                Value::S(s.partial(self.axis()?))
            }
            "lie" => {
                let w = self.vector()?;
                self.expect(',')?;
                let xi = self.vector()?;
                Value::V(w.lie(&xi))
            }
            "killing_lie" => {
                let w = self.vector()?;
                self.expect(',')?;
                let a = self.constant_triple()?;
                self.expect(',')?;
                let b = self.constant_triple()?;
                Value::V(w.killing_lie(a, b))
            }
            "compose" => {
                let profile = self.scalar()?;
                self.expect(',')?;
                let inner = self.scalar()?;
                Value::S(inner.compose_into(&profile))
            }
            _ => return self.err(format!("unknown function '{name}'")),
        };
        self.expect(')')?;
        Ok(out)
    }

    fn atom(&mut self) -> Result<Value, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Value::S(ScalarExpr::constant(v)))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if self.eat('(') {
                    return self.call(&name);
                }
                Ok(Value::S(match name.as_str() {
                    "x" => ScalarExpr::var(Var::X),
                    "y" => ScalarExpr::var(Var::Y),
                    "z" => ScalarExpr::var(Var::Z),
                    "T" => ScalarExpr::var(Var::T),
                    "pi" => ScalarExpr::constant(std::f64::consts::PI),
                    _ => return self.err(format!("unknown identifier '{name}'")),
                }))
            }
            Some(Tok::Sym('(')) => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(')')?;
                Ok(inner)
            }
            Some(Tok::Sym('[')) => {
                self.pos += 1;
                let a = self.scalar()?;
                self.expect(',')?;
                let b = self.scalar()?;
                self.expect(',')?;
                let c = self.scalar()?;
                self.expect(']')?;
                Ok(Value::V(VectorExpr::new([a, b, c])))
            }
            Some(_) => self.err("unexpected token"),
            None => self.err("unexpected end of input"),
        }
    }
}

fn parse_value(src: &str) -> Result<Value, ParseError> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
        src,
    };
    let v = p.expr()?;
    if p.pos != p.toks.len() {
        return p.err("trailing input");
    }
    Ok(v)
}

/// Parses a scalar field expression.
pub fn parse_scalar(src: &str) -> Result<ScalarExpr, ParseError> {
    match parse_value(src)? {
        Value::S(s) => Ok(s),
        Value::V(_) => Err(ParseError {
            position: 0,
            message: "expected a scalar expression, found a vector".into(),
        }),
    }
}

/// Parses a vector field expression.
pub fn parse_vector(src: &str) -> Result<VectorExpr, ParseError> {
    match parse_value(src)? {
        Value::V(v) => Ok(v),
        Value::S(_) => Err(ParseError {
            position: 0,
            message: "expected a vector expression, found a scalar".into(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Point3;

    #[test]
    fn precedence_and_associativity() {
        let f = parse_scalar("1 + 2*3^2 - 4/2/2").unwrap();
        assert_eq!(f.value(Point3::ORIGIN).unwrap(), 18.0);
        let g = parse_scalar("-x^2").unwrap();
        assert_eq!(g.value(Point3::new(3.0, 0.0, 0.0)).unwrap(), -9.0);
        let h = parse_scalar("2^3^2").unwrap();
        assert!((h.value(Point3::ORIGIN).unwrap() - 512.0).abs() < 1e-12);
    }

    #[test]
    fn scientific_notation_and_functions() {
        let f = parse_scalar("1.5e-3*exp(x) + atan2(y, x) + sqrt(4)").unwrap();
        let v = f.value(Point3::new(0.0, 1.0, 0.0)).unwrap();
        assert!((v - (1.5e-3 + std::f64::consts::FRAC_PI_2 + 2.0)).abs() < 1e-15);
    }

    #[test]
    fn vector_forms_round_trip() {
        let src = "scale(cos(exp(z)), grad(-exp(x)*cos(y))) + scale(sin(exp(z)), grad(exp(x)*sin(y)))";
        let w = parse_vector(src).unwrap();
        let again = parse_vector(&w.to_string()).unwrap();
        let p = Point3::new(0.2, -0.3, 0.4);
        assert_eq!(w.value(p).unwrap(), again.value(p).unwrap());
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(parse_scalar("x +").is_err());
        assert!(parse_scalar("foo(x)").is_err());
        assert!(parse_scalar("x $ y").is_err());
        assert!(parse_scalar("[x, y, z]").is_err());
        assert!(parse_vector("x*y").is_err());
        assert!(parse_scalar("(x").is_err());
    }

    #[test]
    fn profile_variable_parses() {
        let f = parse_scalar("2*T").unwrap();
        assert_eq!(f.derivative_at(0.7, 1).unwrap(), 2.0);
    }
}
