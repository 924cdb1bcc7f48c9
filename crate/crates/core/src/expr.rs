//! Closed-form scalar expressions for metric components and potentials.
//!
//! Grammar (EBNF), see also `docs/spec-format.md`:
//!
//! ```text
//! expr    = term { ("+" | "-") term } ;
//! term    = unary { ("*" | "/") unary } ;
//! unary   = "-" unary | power ;
//! power   = primary [ "^" unary ] ;          (* right-associative, binds tighter than unary minus *)
//! primary = number | ident | ident "(" expr { "," expr } ")" | "(" expr ")" ;
//! number  = digits [ "." digits ] [ ("e" | "E") [ "+" | "-" ] digits ] ;
//! ```
//!
//! Admitted functions are the smooth ones only: `sin cos tan exp log sqrt pow`.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

/// Numeric bindings for named parameters.
pub type Bindings = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier \"{0}\"")]
    UnknownIdentifier(String),
    #[error("function {func} expects {expected} argument(s), got {got}")]
    Arity {
        func: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("domain error in `{subexpr}`: {reason}")]
    Domain { subexpr: String, reason: String },
    #[error("unbound parameter \"{0}\"")]
    UnboundParameter(String),
    #[error("point has {got} coordinates, expression expects at least {expected}")]
    PointDimension { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Pow,
}

impl Func {
    pub const ALL: [Func; 7] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Pow,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Pow => "pow",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Pow => 2,
            _ => 1,
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

/// Expression tree node. Trees are immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub enum ExprNode {
    Const(f64),
    /// Coordinate reference: index into the chart coordinates, plus its name for display.
    Coord(usize, String),
    Param(String),
    Neg(Box<ExprNode>),
    Binary(BinOp, Box<ExprNode>, Box<ExprNode>),
    Call(Func, Vec<ExprNode>),
}

impl ExprNode {
    pub fn children(&self) -> Vec<&ExprNode> {
        match self {
            ExprNode::Const(_) | ExprNode::Coord(..) | ExprNode::Param(_) => Vec::new(),
            ExprNode::Neg(a) => vec![a],
            ExprNode::Binary(_, a, b) => vec![a, b],
            ExprNode::Call(_, args) => args.iter().collect(),
        }
    }

    /// Longest root-to-leaf path, counted in edges (a leaf has depth 0).
    pub fn depth(&self) -> usize {
        self.children()
            .into_iter()
            .map(|c| c.depth() + 1)
            .max()
            .unwrap_or(0)
    }

    /// True when the subtree references no coordinate.
    pub fn is_coordinate_free(&self) -> bool {
        match self {
            ExprNode::Coord(..) => false,
            _ => self.children().into_iter().all(|c| c.is_coordinate_free()),
        }
    }

    pub fn max_coord_index(&self) -> Option<usize> {
        match self {
            ExprNode::Coord(i, _) => Some(*i),
            _ => self
                .children()
                .into_iter()
                .filter_map(|c| c.max_coord_index())
                .max(),
        }
    }

    pub fn params(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_params(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_params(&self, out: &mut Vec<String>) {
        if let ExprNode::Param(p) = self {
            out.push(p.clone());
        }
        for c in self.children() {
            c.collect_params(out);
        }
    }

    /// Replace every parameter by its bound value.
    pub fn bind(&self, params: &Bindings) -> Result<ExprNode, ExprError> {
        Ok(match self {
            ExprNode::Param(p) => ExprNode::Const(
                *params
                    .get(p)
                    .ok_or_else(|| ExprError::UnboundParameter(p.clone()))?,
            ),
            ExprNode::Const(_) | ExprNode::Coord(..) => self.clone(),
            ExprNode::Neg(a) => ExprNode::Neg(Box::new(a.bind(params)?)),
            ExprNode::Binary(op, a, b) => {
                ExprNode::Binary(*op, Box::new(a.bind(params)?), Box::new(b.bind(params)?))
            }
            ExprNode::Call(f, args) => ExprNode::Call(
                *f,
                args.iter()
                    .map(|a| a.bind(params))
                    .collect::<Result<_, _>>()?,
            ),
        })
    }
}

/// Fully parenthesised rendering that reparses to the same tree.
impl fmt::Display for ExprNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExprNode::Const(c) if *c < 0.0 => write!(f, "({c:?})"),
            ExprNode::Const(c) => write!(f, "{c:?}"),
            ExprNode::Coord(_, name) => write!(f, "{name}"),
            ExprNode::Param(p) => write!(f, "{p}"),
            ExprNode::Neg(a) => write!(f, "(-{a})"),
            ExprNode::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            ExprNode::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
    End,
}

struct Lexer {
    toks: Vec<(Tok, usize)>,
}

impl Lexer {
    fn new(text: &str) -> Result<Self, ExprError> {
        let chars: Vec<char> = text.chars().collect();
        let mut toks = Vec::new();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            if c.is_whitespace() {
                i += 1;
            } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                if i < chars.len() && chars[i] == '.' {
                    i += 1;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
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
                    } else {
                        return Err(ExprError::Syntax {
                            pos: j,
                            msg: "expected digits in exponent".into(),
                        });
                    }
                }
                let lit: String = chars[start..i].iter().collect();
                let v = lit.parse::<f64>().map_err(|_| ExprError::Syntax {
                    pos: start,
                    msg: format!("malformed number \"{lit}\""),
                })?;
                toks.push((Tok::Num(v), start));
            } else if c.is_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                toks.push((Tok::Ident(chars[start..i].iter().collect()), start));
            } else if "+-*/^(),".contains(c) {
                toks.push((Tok::Sym(c), i));
                i += 1;
            } else {
                return Err(ExprError::Syntax {
                    pos: i,
                    msg: format!("unexpected character '{c}'"),
                });
            }
        }
        toks.push((Tok::End, chars.len()));
        Ok(Lexer { toks })
    }
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    coords: &'a [&'a str],
    params: &'a [&'a str],
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn here(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, c: char) -> Result<(), ExprError> {
        if *self.peek() == Tok::Sym(c) {
            self.bump();
            Ok(())
        } else {
            Err(ExprError::Syntax {
                pos: self.here(),
                msg: format!("expected '{c}', found {}", describe(self.peek())),
            })
        }
    }

    fn expr(&mut self) -> Result<ExprNode, ExprError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Sym('+') => BinOp::Add,
                Tok::Sym('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = ExprNode::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<ExprNode, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Sym('*') => BinOp::Mul,
                Tok::Sym('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = ExprNode::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<ExprNode, ExprError> {
        if *self.peek() == Tok::Sym('-') {
            self.bump();
            return Ok(ExprNode::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<ExprNode, ExprError> {
        let base = self.primary()?;
        if *self.peek() == Tok::Sym('^') {
            self.bump();
            let exp = self.unary()?;
            return Ok(ExprNode::Binary(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<ExprNode, ExprError> {
        let pos = self.here();
        match self.bump() {
            Tok::Num(v) => Ok(ExprNode::Const(v)),
            Tok::Sym('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if *self.peek() == Tok::Sym('(') {
                    let func = Func::from_name(&name).ok_or_else(|| {
                        if self.coords.contains(&name.as_str()) || self.params.contains(&name.as_str()) {
                            ExprError::Syntax {
                                pos,
                                msg: format!("\"{name}\" is not a function"),
                            }
                        } else {
                            ExprError::UnknownIdentifier(name.clone())
                        }
                    })?;
                    self.bump();
                    let mut args = vec![self.expr()?];
                    while *self.peek() == Tok::Sym(',') {
                        self.bump();
                        args.push(self.expr()?);
                    }
                    self.expect(')')?;
                    if args.len() != func.arity() {
                        return Err(ExprError::Arity {
                            func: func.name(),
                            expected: func.arity(),
                            got: args.len(),
                        });
                    }
                    return Ok(ExprNode::Call(func, args));
                }
                if let Some(i) = self.coords.iter().position(|c| *c == name) {
                    Ok(ExprNode::Coord(i, name))
                } else if self.params.contains(&name.as_str()) {
                    Ok(ExprNode::Param(name))
                } else if name == "pi" {
                    Ok(ExprNode::Const(std::f64::consts::PI))
                } else {
                    Err(ExprError::UnknownIdentifier(name))
                }
            }
            t => Err(ExprError::Syntax {
                pos,
                msg: format!("expected number, identifier or '(', found {}", describe(&t)),
            }),
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Num(v) => format!("number {v}"),
        Tok::Ident(s) => format!("identifier \"{s}\""),
        Tok::Sym(c) => format!("'{c}'"),
        Tok::End => "end of input".into(),
    }
}

/// Parse `text` with the given coordinate names; any other identifier is an error
/// (except the constant `pi`).
pub fn parse(text: &str, coords: &[&str]) -> Result<ExprNode, ExprError> {
    parse_with_params(text, coords, &[])
}

/// Parse allowing named parameters, which stay symbolic until bound.
pub fn parse_with_params(text: &str, coords: &[&str], params: &[&str]) -> Result<ExprNode, ExprError> {
    if text.trim().is_empty() {
        return Err(ExprError::Syntax {
            pos: 0,
            msg: "empty expression".into(),
        });
    }
    let lexer = Lexer::new(text)?;
    let mut p = Parser {
        toks: lexer.toks,
        pos: 0,
        coords,
        params,
    };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(ExprError::Syntax {
            pos: p.here(),
            msg: format!("expected operator or end of input, found {}", describe(p.peek())),
        });
    }
    Ok(e)
}

fn domain(e: &ExprNode, reason: &str) -> ExprError {
    ExprError::Domain {
        subexpr: e.to_string(),
        reason: reason.into(),
    }
}

/// Real power with the smoothness/domain policy shared by the scalar and jet evaluators.
pub(crate) fn checked_powf(base: f64, exp: f64, e: &ExprNode) -> Result<f64, ExprError> {
    if exp.fract() == 0.0 && exp.abs() <= 64.0 {
        if base == 0.0 && exp < 0.0 {
            return Err(domain(e, "zero raised to a negative power"));
        }
        return Ok(base.powi(exp as i32));
    }
    if base <= 0.0 {
        return Err(domain(e, "non-integer power of a non-positive base"));
    }
    Ok(base.powf(exp))
}

/// Evaluate at a chart point. Parameters must already be bound (see [`ExprNode::bind`]),
/// or be supplied through [`eval_scalar_with`].
pub fn eval_scalar(expr: &ExprNode, point: &[f64]) -> Result<f64, ExprError> {
    eval_scalar_with(expr, point, &Bindings::new())
}

pub fn eval_scalar_with(expr: &ExprNode, point: &[f64], params: &Bindings) -> Result<f64, ExprError> {
    Ok(match expr {
        ExprNode::Const(c) => *c,
        ExprNode::Coord(i, _) => *point.get(*i).ok_or(ExprError::PointDimension {
            expected: i + 1,
            got: point.len(),
        })?,
        ExprNode::Param(p) => *params
            .get(p)
            .ok_or_else(|| ExprError::UnboundParameter(p.clone()))?,
        ExprNode::Neg(a) => -eval_scalar_with(a, point, params)?,
        ExprNode::Binary(op, a, b) => {
            let x = eval_scalar_with(a, point, params)?;
            let y = eval_scalar_with(b, point, params)?;
            match op {
                BinOp::Add => x + y,
                BinOp::Sub => x - y,
                BinOp::Mul => x * y,
                BinOp::Div => {
                    if y == 0.0 {
                        return Err(domain(expr, "division by zero"));
                    }
                    x / y
                }
                BinOp::Pow => checked_powf(x, y, expr)?,
            }
        }
        ExprNode::Call(f, args) => {
            let x = eval_scalar_with(&args[0], point, params)?;
            match f {
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
                Func::Tan => {
                    if x.cos() == 0.0 {
                        return Err(domain(expr, "tan at a pole"));
                    }
                    x.tan()
                }
                Func::Exp => x.exp(),
                Func::Log => {
                    if x <= 0.0 {
                        return Err(domain(expr, "log of a non-positive number"));
                    }
                    x.ln()
                }
                Func::Sqrt => {
                    if x < 0.0 {
                        return Err(domain(expr, "sqrt of a negative number"));
                    }
                    x.sqrt()
                }
                Func::Pow => {
                    let y = eval_scalar_with(&args[1], point, params)?;
                    checked_powf(x, y, expr)?
                }
            }
        }
    })
}
