//! Closed-form coefficient expressions.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?          exponent must not contain variables
//! atom    := number | 'pi' | 'x' | 'y' | 'r' | func '(' sum ')' | '(' sum ')'
//! func    := sin | cos | exp | log | sqrt
//! ```
//!
//! `^` binds tighter than unary minus, so `-x^2` is `-(x^2)`; a chain `a^b^c` groups to the
//! right. Printing with `Display` parenthesises every compound node, so printing and reparsing
//! returns the same tree.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid, GridKind, VectorField};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X,
    Y,
    R,
}

impl Var {
    fn symbol(self) -> char {
        match self {
            Var::X => 'x',
            Var::Y => 'y',
            Var::R => 'r',
        }
    }

    fn legal_on(self, kind: GridKind) -> bool {
        match kind {
            GridKind::Interval => matches!(self, Var::X | Var::R),
            GridKind::RadialBall => self == Var::R,
            GridKind::Rectangle => matches!(self, Var::X | Var::Y),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// Variable bindings for evaluation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Point {
    pub x: Option<f64>,
    pub y: Option<f64>,
    pub r: Option<f64>,
}

impl Point {
    /// Bindings legal at a grid node: `x` and `r` on intervals, `r` on balls, `x` and `y` on
    /// rectangles.
    pub fn at_node(grid: &Grid, node: usize) -> Point {
        let [a, b] = grid.coords(node);
        match grid.kind() {
            GridKind::Interval => Point {
                x: Some(a),
                y: None,
                r: Some(a),
            },
            GridKind::RadialBall => Point {
                x: None,
                y: None,
                r: Some(a),
            },
            GridKind::Rectangle => Point {
                x: Some(a),
                y: Some(b),
                r: None,
            },
        }
    }
}

impl Expr {
    pub fn parse(text: &str) -> Result<Expr> {
        parse_expression(text)
    }

    /// Variables used anywhere in the tree.
    pub fn variables(&self) -> Vec<Var> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<Var>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(v) => {
                if !out.contains(v) {
                    out.push(*v);
                }
            }
            Expr::Neg(e) | Expr::Call(_, e) => e.collect_vars(out),
            Expr::Bin(_, a, b) | Expr::Pow(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    /// Fails if the expression uses a variable that does not exist on `kind` grids.
    pub fn check_legal(&self, kind: GridKind) -> Result<()> {
        match self.variables().into_iter().find(|v| !v.legal_on(kind)) {
            Some(v) => Err(Error::IllegalVariable {
                var: v.symbol(),
                kind: kind.name(),
            }),
            None => Ok(()),
        }
    }

    pub fn evaluate(&self, p: &Point) -> Result<f64> {
        let v = self.eval(p)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.domain("non-finite result"))
        }
    }

    fn domain(&self, message: &'static str) -> Error {
        Error::Domain {
            node: self.to_string(),
            message,
        }
    }

    fn eval(&self, p: &Point) -> Result<f64> {
        let v = match self {
            Expr::Num(v) => *v,
            Expr::Var(var) => {
                let bound = match var {
                    Var::X => p.x,
                    Var::Y => p.y,
                    Var::R => p.r,
                };
                bound.ok_or(Error::MissingVariable(var.symbol()))?
            }
            Expr::Neg(e) => -e.eval(p)?,
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(p)?, b.eval(p)?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(self.domain("division by zero"));
                        }
                        a / b
                    }
                }
            }
            Expr::Pow(a, b) => {
                let (a, b) = (a.eval(p)?, b.eval(p)?);
                let v = math::powf(a, b);
                if !v.is_finite() {
                    return Err(self.domain("power is undefined here"));
                }
                v
            }
            Expr::Call(f, e) => {
                let x = e.eval(p)?;
                match f {
                    Func::Sin => math::sin(x),
                    Func::Cos => math::cos(x),
                    Func::Exp => math::exp(x),
                    Func::Log => {
                        if x <= 0.0 {
                            return Err(self.domain("log of a non-positive number"));
                        }
                        math::ln(x)
                    }
                    Func::Sqrt => {
                        if x < 0.0 {
                            return Err(self.domain("sqrt of a negative number"));
                        }
                        math::sqrt(x)
                    }
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.domain("non-finite result"))
        }
    }

    /// Samples the expression at every node of `grid`.
    pub fn sample(&self, grid: &Grid) -> Result<Field> {
        self.check_legal(grid.kind())?;
        let values = (0..grid.len())
            .map(|k| self.evaluate(&Point::at_node(grid, k)))
            .collect::<Result<Vec<_>>>()?;
        Field::new(grid, values)
    }
}

/// Samples one expression per component into a vector field.
pub fn sample_vector(grid: &Grid, components: &[Expr]) -> Result<VectorField> {
    let d = grid.kind().vector_dim();
    if components.len() != d {
        return Err(Error::Dimension(format!(
            "{} grids take {d} advection component(s), got {}",
            grid.kind().name(),
            components.len()
        )));
    }
    let comps = components
        .iter()
        .map(|e| e.sample(grid).map(Field::into_values))
        .collect::<Result<Vec<_>>>()?;
    VectorField::new(grid, comps)
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Var(v) => write!(f, "{}", v.symbol()),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Bin(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Pow(a, b) => write!(f, "({a}^{b})"),
            Expr::Call(func, e) => write!(f, "{}({e})", func.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

struct Lexer {
    toks: Vec<(Tok, usize)>,
}

impl Lexer {
    fn lex(text: &str) -> Result<Lexer> {
        let chars: Vec<char> = text.chars().collect();
        let mut toks = Vec::new();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i + 1;
            if c.is_whitespace() {
                i += 1;
            } else if c.is_ascii_digit() || c == '.' {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                // exponent part: 1e-3, 2.5E+4
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let s: String = chars[start..i].iter().collect();
                let v = s.parse::<f64>().map_err(|_| Error::Syntax {
                    column: col,
                    message: format!("malformed number `{s}`"),
                })?;
                toks.push((Tok::Num(v), col));
            } else if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                toks.push((Tok::Ident(chars[start..i].iter().collect()), col));
            } else if "+-*/^".contains(c) {
                toks.push((Tok::Op(c), col));
                i += 1;
            } else if c == '(' {
                toks.push((Tok::LParen, col));
                i += 1;
            } else if c == ')' {
                toks.push((Tok::RParen, col));
                i += 1;
            } else {
                return Err(Error::Syntax {
                    column: col,
                    message: format!("unexpected character `{c}`"),
                });
            }
        }
        toks.push((Tok::End, chars.len() + 1));
        Ok(Lexer { toks })
    }
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn column(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            column: self.column(),
            message: message.into(),
        })
    }

    fn expect_rparen(&mut self) -> Result<()> {
        if self.peek() != &Tok::RParen {
            return self.error("expected `)`");
        }
        self.bump();
        Ok(())
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut lhs = self.product()?;
        loop {
            let op = match self.peek() {
                Tok::Op('+') => BinOp::Add,
                Tok::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.product()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn product(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Op('*') => BinOp::Mul,
                Tok::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.peek() == &Tok::Op('-') {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek() == &Tok::Op('^') {
            self.bump();
            let col = self.column();
            let exponent = self.unary()?;
            if !exponent.variables().is_empty() {
                return Err(Error::Syntax {
                    column: col,
                    message: "exponent must be a constant".into(),
                });
            }
            return Ok(Expr::Pow(Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let col = self.column();
        match self.bump() {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::LParen => {
                let e = self.sum()?;
                self.expect_rparen()?;
                Ok(e)
            }
            Tok::Ident(name) => match name.as_str() {
                "pi" => Ok(Expr::Num(core::f64::consts::PI)),
                "x" => Ok(Expr::Var(Var::X)),
                "y" => Ok(Expr::Var(Var::Y)),
                "r" => Ok(Expr::Var(Var::R)),
                _ => match Func::from_name(&name) {
                    Some(func) => {
                        if self.peek() != &Tok::LParen {
                            return self.error(format!("expected `(` after `{name}`"));
                        }
                        self.bump();
                        let arg = self.sum()?;
                        self.expect_rparen()?;
                        Ok(Expr::Call(func, Box::new(arg)))
                    }
                    None => Err(Error::UnknownIdentifier { name, column: col }),
                },
            },
            Tok::End => Err(Error::Syntax {
                column: col,
                message: "unexpected end of input".into(),
            }),
            Tok::Op(c) => Err(Error::Syntax {
                column: col,
                message: format!("unexpected operator `{c}`"),
            }),
            Tok::RParen => Err(Error::Syntax {
                column: col,
                message: "unexpected `)`".into(),
            }),
        }
    }
}

/// Parses an expression; errors carry 1-based columns.
pub fn parse_expression(text: &str) -> Result<Expr> {
    if text.trim().is_empty() {
        return Err(Error::Syntax {
            column: 1,
            message: "empty expression".into(),
        });
    }
    let lexer = Lexer::lex(text)?;
    let mut p = Parser {
        toks: lexer.toks,
        pos: 0,
    };
    let e = p.sum()?;
    if p.peek() != &Tok::End {
        return p.error("unexpected trailing input");
    }
    Ok(e)
}
