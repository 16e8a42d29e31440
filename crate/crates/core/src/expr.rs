//! Small arithmetic expressions over named real parameters.
//!
//! Grammar: `+ - * /`, integer powers `^`, unary minus, parentheses, decimal
//! numbers and identifiers. Used for pencil coefficients and rational maps.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Num(f64),
    Var(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, i32),
}

/// A parsed expression bound to an ordered list of variable names.
#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    text: String,
    root: Node,
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
}

fn tokenize(text: &str) -> Result<Vec<Token>> {
    let err = |msg: String| Error::Expr(text.to_string(), msg);
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let save = i;
                i += 1;
                if i < chars.len() && (chars[i] == '+' || chars[i] == '-') {
                    i += 1;
                }
                if i < chars.len() && chars[i].is_ascii_digit() {
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                } else {
                    i = save;
                }
            }
            let s: String = chars[start..i].iter().collect();
            let v = s.parse::<f64>().map_err(|_| err(format!("bad number `{s}`")))?;
            out.push(Token::Num(v));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^()".contains(c) {
            out.push(Token::Op(c));
            i += 1;
        } else {
            return Err(err(format!("unexpected character `{c}`")));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    text: &'a str,
    tokens: Vec<Token>,
    pos: usize,
    vars: &'a [&'a str],
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::Expr(self.text.to_string(), msg.to_string())
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek() == Some(&Token::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn sum(&mut self) -> Result<Node> {
        let mut lhs = self.product()?;
        loop {
            if self.eat('+') {
                lhs = Node::Add(Box::new(lhs), Box::new(self.product()?));
            } else if self.eat('-') {
                lhs = Node::Sub(Box::new(lhs), Box::new(self.product()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn product(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.eat('-') {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let negative = self.eat('-');
        match self.peek().cloned() {
            Some(Token::Num(v)) if v.fract() == 0.0 && v.abs() < 1024.0 => {
                self.pos += 1;
                let e = v as i32;
                Ok(Node::Pow(Box::new(base), if negative { -e } else { e }))
            }
            _ => Err(self.err("exponent must be an integer literal")),
        }
    }

    fn atom(&mut self) -> Result<Node> {
        match self.peek().cloned() {
            Some(Token::Num(v)) => {
                self.pos += 1;
                Ok(Node::Num(v))
            }
            Some(Token::Ident(name)) => {
                self.pos += 1;
                self.vars
                    .iter()
                    .position(|v| *v == name)
                    .map(Node::Var)
                    .ok_or_else(|| self.err(&format!("unknown variable `{name}`")))
            }
            Some(Token::Op('(')) => {
                self.pos += 1;
                let inner = self.sum()?;
                if !self.eat(')') {
                    return Err(self.err("missing `)`"));
                }
                Ok(inner)
            }
            _ => Err(self.err("expected a number, variable or `(`")),
        }
    }
}

/// Result of evaluating with pole tracking.
#[derive(Clone, Copy, Debug)]
pub struct Guarded {
    pub value: f64,
    /// Smallest absolute value of any divisor met during evaluation
    /// (`+∞` when the expression has no division).
    pub min_denominator: f64,
}

impl Expr {
    pub fn parse(text: &str, vars: &[&str]) -> Result<Expr> {
        let tokens = tokenize(text)?;
        let mut p = Parser {
            text,
            tokens,
            pos: 0,
            vars,
        };
        let root = p.sum()?;
        if p.pos != p.tokens.len() {
            return Err(p.err("trailing input"));
        }
        Ok(Expr {
            text: text.to_string(),
            root,
        })
    }

    pub fn eval(&self, vals: &[f64]) -> f64 {
        self.eval_guarded(vals).value
    }

    pub fn eval_guarded(&self, vals: &[f64]) -> Guarded {
        let mut min_den = f64::INFINITY;
        let value = eval(&self.root, vals, &mut min_den);
        Guarded {
            value,
            min_denominator: min_den,
        }
    }

    /// True when no division or negative power involves a variable.
    pub fn is_polynomial(&self) -> bool {
        polynomial(&self.root)
    }

    pub fn text(&self) -> &str {
        &self.text
    }
}

fn eval(node: &Node, vals: &[f64], min_den: &mut f64) -> f64 {
    match node {
        Node::Num(v) => *v,
        Node::Var(i) => vals[*i],
        Node::Neg(a) => -eval(a, vals, min_den),
        Node::Add(a, b) => eval(a, vals, min_den) + eval(b, vals, min_den),
        Node::Sub(a, b) => eval(a, vals, min_den) - eval(b, vals, min_den),
        Node::Mul(a, b) => eval(a, vals, min_den) * eval(b, vals, min_den),
        Node::Div(a, b) => {
            let num = eval(a, vals, min_den);
            let den = eval(b, vals, min_den);
            *min_den = min_den.min(den.abs());
            num / den
        }
        Node::Pow(a, e) => {
            let base = eval(a, vals, min_den);
            if *e < 0 {
                *min_den = min_den.min(base.abs());
            }
            base.powi(*e)
        }
    }
}

fn constant(node: &Node) -> bool {
    match node {
        Node::Num(_) => true,
        Node::Var(_) => false,
        Node::Neg(a) | Node::Pow(a, _) => constant(a),
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
            constant(a) && constant(b)
        }
    }
}

fn polynomial(node: &Node) -> bool {
    match node {
        Node::Num(_) | Node::Var(_) => true,
        Node::Neg(a) => polynomial(a),
        Node::Pow(a, e) => polynomial(a) && (*e >= 0 || constant(a)),
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) => polynomial(a) && polynomial(b),
        Node::Div(a, b) => polynomial(a) && constant(b),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_and_powers() {
        let e = Expr::parse("-x^2 + 2*x*y - 3/4", &["x", "y"]).unwrap();
        assert_eq!(e.eval(&[2.0, 3.0]), -4.0 + 12.0 - 0.75);
        let e = Expr::parse("(1 + y)^2 - 2^-1", &["y"]).unwrap();
        assert_eq!(e.eval(&[1.0]), 3.5);
        assert_eq!(Expr::parse("1e-3", &[]).unwrap().eval(&[]), 1e-3);
    }

    #[test]
    fn pole_tracking() {
        let e = Expr::parse("x - x*y^2/(x^2 - 4)", &["x", "y"]).unwrap();
        let g = e.eval_guarded(&[3.0, 1.0]);
        assert!((g.value - 12.0 / 5.0).abs() < 1e-15);
        assert_eq!(g.min_denominator, 5.0);
        assert!(!e.is_polynomial());
        assert!(Expr::parse("y - 1 + x/2", &["x", "y"]).unwrap().is_polynomial());
    }

    #[test]
    fn errors() {
        for bad in ["x +", "(x", "x ^ y", "q", "x $ 1", "x y"] {
            assert!(Expr::parse(bad, &["x", "y"]).is_err(), "{bad}");
        }
    }
}
