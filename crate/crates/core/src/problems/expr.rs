//! Arithmetic expressions over named variables.
//!
//! Grammar:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := ('-' | '+') unary | power
//! power   := primary ('^' unary)?
//! primary := number | name | '(' expr ')'
//! ```
//!
//! `^` is right associative and binds tighter than unary minus, so `-x^2`
//! is `-(x^2)`. The Unicode forms `−`, `×`, `÷` are accepted, and `pi` or
//! `π` name the constant.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Const(f64),
    Var(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
}

impl Node {
    fn eval(&self, vars: &[f64]) -> f64 {
        match self {
            Node::Const(c) => *c,
            Node::Var(i) => vars[*i],
            Node::Neg(a) => -a.eval(vars),
            Node::Add(a, b) => a.eval(vars) + b.eval(vars),
            Node::Sub(a, b) => a.eval(vars) - b.eval(vars),
            Node::Mul(a, b) => a.eval(vars) * b.eval(vars),
            Node::Div(a, b) => a.eval(vars) / b.eval(vars),
            Node::Pow(a, b) => {
                let base = a.eval(vars);
                match **b {
                    Node::Const(e) if e.fract() == 0.0 && e.abs() <= 64.0 => base.powi(e as i32),
                    _ => base.powf(b.eval(vars)),
                }
            }
        }
    }
}

/// A parsed expression bound to an ordered list of variable names.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    source: String,
    root: Node,
    n_vars: usize,
}

impl Expression {
    pub fn parse(source: &str, variables: &[&str]) -> Result<Self> {
        let tokens = tokenize(source)?;
        let mut p = Parser { tokens: &tokens, pos: 0, vars: variables, end: source.len() };
        let root = p.expr()?;
        if let Some((pos, tok)) = p.tokens.get(p.pos) {
            return Err(Error::Expression { pos: *pos, msg: format!("unexpected {tok:?}") });
        }
        Ok(Self { source: source.to_string(), root, n_vars: variables.len() })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Value at `vars`, which follows the order given to `parse`.
    pub fn eval(&self, vars: &[f64]) -> f64 {
        debug_assert_eq!(vars.len(), self.n_vars);
        self.root.eval(vars)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Name(String),
    Op(char),
    Open,
    Close,
}

fn tokenize(s: &str) -> Result<Vec<(usize, Tok)>> {
    let mut out = Vec::new();
    let mut it = s.char_indices().peekable();
    while let Some(&(pos, c)) = it.peek() {
        match c {
            c if c.is_whitespace() => {
                it.next();
            }
            '0'..='9' | '.' => {
                let mut end = pos;
                let mut prev = ' ';
                while let Some(&(i, ch)) = it.peek() {
                    let exp_sign = (ch == '+' || ch == '-') && (prev == 'e' || prev == 'E');
                    if ch.is_ascii_digit() || ch == '.' || ch == 'e' || ch == 'E' || exp_sign {
                        end = i + ch.len_utf8();
                        prev = ch;
                        it.next();
                    } else {
                        break;
                    }
                }
                let text = &s[pos..end];
                let v: f64 = text
                    .parse()
                    .map_err(|_| Error::Expression { pos, msg: format!("bad number '{text}'") })?;
                out.push((pos, Tok::Num(v)));
            }
            'π' => {
                it.next();
                out.push((pos, Tok::Name("pi".into())));
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut end = pos;
                while let Some(&(i, ch)) = it.peek() {
                    if ch.is_alphanumeric() || ch == '_' {
                        end = i + ch.len_utf8();
                        it.next();
                    } else {
                        break;
                    }
                }
                out.push((pos, Tok::Name(s[pos..end].to_string())));
            }
            '+' | '-' | '*' | '/' | '^' => {
                it.next();
                out.push((pos, Tok::Op(c)));
            }
            '−' => {
                it.next();
                out.push((pos, Tok::Op('-')));
            }
            '×' => {
                it.next();
                out.push((pos, Tok::Op('*')));
            }
            '÷' => {
                it.next();
                out.push((pos, Tok::Op('/')));
            }
            '(' => {
                it.next();
                out.push((pos, Tok::Open));
            }
            ')' => {
                it.next();
                out.push((pos, Tok::Close));
            }
            other => return Err(Error::Expression { pos, msg: format!("unexpected character '{other}'") }),
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: &'a [(usize, Tok)],
    pos: usize,
    vars: &'a [&'a str],
    end: usize,
}

impl Parser<'_> {
    fn peek_op(&self) -> Option<char> {
        match self.tokens.get(self.pos) {
            Some((_, Tok::Op(c))) => Some(*c),
            _ => None,
        }
    }

    fn here(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |(p, _)| *p)
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        while let Some(op @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == '+' { Node::Add(lhs.into(), rhs.into()) } else { Node::Sub(lhs.into(), rhs.into()) };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if op == '*' { Node::Mul(lhs.into(), rhs.into()) } else { Node::Div(lhs.into(), rhs.into()) };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node> {
        match self.peek_op() {
            Some('-') => {
                self.pos += 1;
                Ok(Node::Neg(self.unary()?.into()))
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.primary()?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Node::Pow(base.into(), exp.into()));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node> {
        let pos = self.here();
        let Some((_, tok)) = self.tokens.get(self.pos) else {
            return Err(Error::Expression { pos, msg: "unexpected end of expression".into() });
        };
        self.pos += 1;
        match tok {
            Tok::Num(v) => Ok(Node::Const(*v)),
            Tok::Name(name) => {
                if let Some(i) = self.vars.iter().position(|v| v == name) {
                    Ok(Node::Var(i))
                } else if name == "pi" {
                    Ok(Node::Const(std::f64::consts::PI))
                } else {
                    Err(Error::Expression { pos, msg: format!("unknown name '{name}'") })
                }
            }
            Tok::Open => {
                let inner = self.expr()?;
                match self.tokens.get(self.pos) {
                    Some((_, Tok::Close)) => {
                        self.pos += 1;
                        Ok(inner)
                    }
                    _ => Err(Error::Expression { pos: self.here(), msg: "expected ')'".into() }),
                }
            }
            other => Err(Error::Expression { pos, msg: format!("unexpected {other:?}") }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(s: &str, vars: &[&str], x: &[f64]) -> f64 {
        Expression::parse(s, vars).unwrap().eval(x)
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("1 + 2 * 3", &[], &[]), 7.0);
        assert_eq!(ev("(1 + 2) * 3", &[], &[]), 9.0);
        assert_eq!(ev("2 ^ 3 ^ 2", &[], &[]), 512.0);
        assert_eq!(ev("-2 ^ 2", &[], &[]), -4.0);
        assert_eq!(ev("2 ^ -1", &[], &[]), 0.5);
        assert_eq!(ev("8 / 4 / 2", &[], &[]), 1.0);
        assert_eq!(ev("1 - 2 - 3", &[], &[]), -4.0);
        assert_eq!(ev("--3", &[], &[]), 3.0);
        assert_eq!(ev("1.5e2 + 2E-1", &[], &[]), 150.2);
    }

    #[test]
    fn unicode_operators_and_constants() {
        assert_eq!(ev("6 × 2 ÷ 3 − 1", &[], &[]), 3.0);
        assert_eq!(ev("π", &[], &[]), std::f64::consts::PI);
        assert_eq!(ev("2*pi*r", &["r"], &[0.5]), std::f64::consts::PI);
    }

    #[test]
    fn variables() {
        let e = Expression::parse("x1^2 + 3*x2 - x1*x2", &["x1", "x2"]).unwrap();
        assert_eq!(e.eval(&[2.0, 5.0]), 4.0 + 15.0 - 10.0);
        assert_eq!(e.source(), "x1^2 + 3*x2 - x1*x2");
    }

    #[test]
    fn errors_carry_positions() {
        assert!(matches!(Expression::parse("1 + y", &["x"]), Err(Error::Expression { pos: 4, .. })));
        assert!(matches!(Expression::parse("(1 + 2", &[]), Err(Error::Expression { pos: 6, .. })));
        assert!(matches!(Expression::parse("1 $ 2", &[]), Err(Error::Expression { pos: 2, .. })));
        assert!(matches!(Expression::parse("1 2", &[]), Err(Error::Expression { pos: 2, .. })));
        assert!(matches!(Expression::parse("", &[]), Err(Error::Expression { pos: 0, .. })));
        assert!(Expression::parse("1..2", &[]).is_err());
    }
}
