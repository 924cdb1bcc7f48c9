//! Truncated multivariate Taylor expansions ("jets").
//!
//! A jet of order `K` in `dim` variables stores the Taylor coefficients `c_α` for every
//! multi-index `|α| ≤ K`, so that `∂^α f(p) = α! c_α`. Coefficients are laid out densely in
//! graded order (all degree-0 entries, then degree 1, ...), which makes a lower-order jet a
//! prefix of a higher-order one and lets truncation be a slice operation.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::expr::{checked_powf, BinOp, Bindings, ExprError, ExprNode, Func};

pub const MAX_ORDER: usize = 8;
pub const MAX_DIM: usize = 8;

/// Multi-index tables shared by every jet of a given dimension.
pub struct Layout {
    dim: usize,
    exps: Vec<u8>,
    deg_start: Vec<usize>,
    index: HashMap<u64, u32>,
    mul: Vec<(u32, u32, u32)>,
    mul_end: Vec<usize>,
    deriv: Vec<Vec<(u32, u32, f64)>>,
    deriv_end: Vec<Vec<usize>>,
}

fn key(alpha: &[u8]) -> u64 {
    alpha.iter().fold(0u64, |acc, &a| (acc << 8) | a as u64)
}

fn push_compositions(dim: usize, deg: usize, prefix: &mut Vec<u8>, out: &mut Vec<u8>) {
    if prefix.len() + 1 == dim {
        prefix.push(deg as u8);
        out.extend_from_slice(prefix);
        prefix.pop();
        return;
    }
    for first in (0..=deg).rev() {
        prefix.push(first as u8);
        push_compositions(dim, deg - first, prefix, out);
        prefix.pop();
    }
}

impl Layout {
    fn build(dim: usize) -> Layout {
        let mut exps = Vec::new();
        let mut deg_start = vec![0];
        for d in 0..=MAX_ORDER {
            push_compositions(dim, d, &mut Vec::new(), &mut exps);
            deg_start.push(exps.len() / dim);
        }
        let count = exps.len() / dim;
        let degree = |i: usize| -> usize { exps[i * dim..(i + 1) * dim].iter().map(|&a| a as usize).sum() };
        let index: HashMap<u64, u32> = (0..count)
            .map(|i| (key(&exps[i * dim..(i + 1) * dim]), i as u32))
            .collect();

        let mut mul = Vec::new();
        let mut sum = vec![0u8; dim];
        for i in 0..count {
            let di = degree(i);
            for j in 0..deg_start[MAX_ORDER - di + 1] {
                for v in 0..dim {
                    sum[v] = exps[i * dim + v] + exps[j * dim + v];
                }
                mul.push((i as u32, j as u32, index[&key(&sum)]));
            }
        }
        mul.sort_by_key(|&(i, j, k)| (k, i, j));
        let mul_end = (0..=MAX_ORDER)
            .map(|d| mul.partition_point(|&(_, _, k)| (k as usize) < deg_start[d + 1]))
            .collect();

        let mut deriv = Vec::with_capacity(dim);
        let mut deriv_end = Vec::with_capacity(dim);
        for v in 0..dim {
            let mut entries = Vec::new();
            for src in 0..count {
                let a = exps[src * dim + v];
                if a == 0 {
                    continue;
                }
                sum.copy_from_slice(&exps[src * dim..(src + 1) * dim]);
                sum[v] -= 1;
                entries.push((src as u32, index[&key(&sum)], a as f64));
            }
            let ends = (0..=MAX_ORDER)
                .map(|d| entries.partition_point(|&(s, _, _)| (s as usize) < deg_start[d + 1]))
                .collect();
            deriv.push(entries);
            deriv_end.push(ends);
        }

        Layout {
            dim,
            exps,
            deg_start,
            index,
            mul,
            mul_end,
            deriv,
            deriv_end,
        }
    }

    /// Shared layout for `dim` variables.
    pub fn for_dim(dim: usize) -> Result<Arc<Layout>> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::IndexOutOfRange { index: dim, dim: MAX_DIM });
        }
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Layout>>>> = OnceLock::new();
        let mut cache = CACHE.get_or_init(Default::default).lock().unwrap();
        Ok(cache
            .entry(dim)
            .or_insert_with(|| Arc::new(Layout::build(dim)))
            .clone())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of coefficients of a jet of the given order: C(dim + order, order).
    pub fn count(&self, order: usize) -> usize {
        self.deg_start[order + 1]
    }

    pub fn multi_index(&self, i: usize) -> &[u8] {
        &self.exps[i * self.dim..(i + 1) * self.dim]
    }

    pub fn position(&self, alpha: &[u8]) -> Option<usize> {
        if alpha.len() != self.dim {
            return None;
        }
        self.index.get(&key(alpha)).map(|&i| i as usize)
    }
}

impl fmt::Debug for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Layout").field("dim", &self.dim).finish()
    }
}

#[derive(Clone)]
pub struct Jet {
    layout: Arc<Layout>,
    order: usize,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("dim", &self.layout.dim)
            .field("order", &self.order)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

fn check_order(order: usize) -> Result<()> {
    if order > MAX_ORDER {
        Err(Error::InvalidOrder(order))
    } else {
        Ok(())
    }
}

impl Jet {
    pub fn constant(layout: &Arc<Layout>, order: usize, value: f64) -> Jet {
        let mut coeffs = vec![0.0; layout.count(order)];
        coeffs[0] = value;
        Jet {
            layout: layout.clone(),
            order,
            coeffs,
        }
    }

    pub fn zero_like(&self) -> Jet {
        Jet {
            layout: self.layout.clone(),
            order: self.order,
            coeffs: vec![0.0; self.coeffs.len()],
        }
    }

    /// Jet of the `i`-th coordinate function at `point`.
    pub fn lift_coordinate(i: usize, point: &[f64], order: usize) -> Result<Jet> {
        check_order(order)?;
        if i >= point.len() {
            return Err(Error::IndexOutOfRange {
                index: i,
                dim: point.len(),
            });
        }
        let layout = Layout::for_dim(point.len())?;
        let mut j = Jet::constant(&layout, order, point[i]);
        if order >= 1 {
            // degree-1 entries are e_0, e_1, ... in that order
            j.coeffs[1 + i] = 1.0;
        }
        Ok(j)
    }

    pub fn from_coeffs(layout: &Arc<Layout>, order: usize, coeffs: Vec<f64>) -> Result<Jet> {
        check_order(order)?;
        if coeffs.len() != layout.count(order) {
            return Err(Error::DimensionMismatch(coeffs.len(), layout.count(order)));
        }
        Ok(Jet {
            layout: layout.clone(),
            order,
            coeffs,
        })
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.layout.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn taylor_coeff(&self, alpha: &[u8]) -> Option<f64> {
        let deg: usize = alpha.iter().map(|&a| a as usize).sum();
        if deg > self.order {
            return None;
        }
        self.layout.position(alpha).map(|i| self.coeffs[i])
    }

    /// The partial derivative `∂^α` at the base point (not the Taylor coefficient).
    pub fn partial(&self, alpha: &[u8]) -> Result<f64> {
        if alpha.len() != self.dim() {
            return Err(Error::DimensionMismatch(alpha.len(), self.dim()));
        }
        let deg: usize = alpha.iter().map(|&a| a as usize).sum();
        let c = self.taylor_coeff(alpha).ok_or_else(|| Error::OrderExhausted {
            what: format!("partial {alpha:?}"),
            needed: deg,
            available: self.order,
        })?;
        let fact: f64 = alpha
            .iter()
            .map(|&a| (1..=a as u64).product::<u64>() as f64)
            .product();
        Ok(fact * c)
    }

    pub fn truncate(&self, order: usize) -> Jet {
        let order = order.min(self.order);
        Jet {
            layout: self.layout.clone(),
            order,
            coeffs: self.coeffs[..self.layout.count(order)].to_vec(),
        }
    }

    /// Partial derivative in variable `var`, as a jet one order lower.
    pub fn derivative(&self, var: usize) -> Result<Jet> {
        if var >= self.dim() {
            return Err(Error::IndexOutOfRange {
                index: var,
                dim: self.dim(),
            });
        }
        if self.order == 0 {
            return Err(Error::OrderExhausted {
                what: "jet derivative".into(),
                needed: 1,
                available: 0,
            });
        }
        let order = self.order - 1;
        let mut coeffs = vec![0.0; self.layout.count(order)];
        let table = &self.layout.deriv[var];
        for &(src, dst, factor) in &table[..self.layout.deriv_end[var][self.order]] {
            coeffs[dst as usize] = factor * self.coeffs[src as usize];
        }
        Ok(Jet {
            layout: self.layout.clone(),
            order,
            coeffs,
        })
    }

    fn same_space(&self, other: &Jet) {
        assert_eq!(self.layout.dim, other.layout.dim, "jets from different dimensions");
    }

    pub fn scale(&self, c: f64) -> Jet {
        Jet {
            layout: self.layout.clone(),
            order: self.order,
            coeffs: self.coeffs.iter().map(|x| x * c).collect(),
        }
    }

    pub fn add_scalar(&self, c: f64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += c;
        out
    }

    fn lower_to(&mut self, order: usize) {
        if order < self.order {
            self.order = order;
            self.coeffs.truncate(self.layout.count(order));
        }
    }

    /// `self += other`, truncating to the lower order.
    pub fn add_assign(&mut self, other: &Jet) {
        self.same_space(other);
        self.lower_to(other.order);
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b;
        }
    }

    /// `self += c * other`.
    pub fn add_scaled(&mut self, c: f64, other: &Jet) {
        self.same_space(other);
        self.lower_to(other.order);
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += c * b;
        }
    }

    /// `self += a * b`, the hot loop of every tensor contraction.
    pub fn mul_add_assign(&mut self, a: &Jet, b: &Jet) {
        self.same_space(a);
        self.same_space(b);
        let order = self.order.min(a.order).min(b.order);
        self.lower_to(order);
        let triples = &self.layout.mul[..self.layout.mul_end[order]];
        let (x, y, out) = (&a.coeffs, &b.coeffs, &mut self.coeffs);
        for &(i, j, k) in triples {
            out[k as usize] += x[i as usize] * y[j as usize];
        }
    }

    pub fn mul_jet(&self, other: &Jet) -> Jet {
        let order = self.order.min(other.order);
        let mut out = Jet {
            layout: self.layout.clone(),
            order,
            coeffs: vec![0.0; self.layout.count(order)],
        };
        out.mul_add_assign(self, other);
        out
    }

    /// Compose with a univariate function whose Taylor coefficients at `self.value()` are `d`
    /// (`d[k] = f^(k)(a0) / k!`), via Horner on the non-constant part.
    pub fn compose(&self, d: &[f64]) -> Jet {
        debug_assert!(d.len() > self.order);
        let mut t = self.clone();
        t.coeffs[0] = 0.0;
        let mut acc = Jet::constant(&self.layout, self.order, d[self.order]);
        for k in (0..self.order).rev() {
            acc = acc.mul_jet(&t);
            acc.coeffs[0] += d[k];
        }
        acc
    }

    fn domain_error(ctx: &ExprNode, reason: &str) -> Error {
        Error::Expr(ExprError::Domain {
            subexpr: ctx.to_string(),
            reason: reason.into(),
        })
    }

    pub fn recip(&self) -> Result<Jet> {
        let a0 = self.value();
        if a0 == 0.0 {
            return Err(Error::Expr(ExprError::Domain {
                subexpr: "1/(...)".into(),
                reason: "division by a jet with zero constant term".into(),
            }));
        }
        let mut d = Vec::with_capacity(self.order + 1);
        let mut c = 1.0 / a0;
        for _ in 0..=self.order {
            d.push(c);
            c *= -1.0 / a0;
        }
        Ok(self.compose(&d))
    }

    pub fn div_jet(&self, other: &Jet) -> Result<Jet> {
        Ok(self.mul_jet(&other.recip()?))
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        let mut d = Vec::with_capacity(self.order + 1);
        let mut fact = 1.0;
        for k in 0..=self.order {
            if k > 0 {
                fact *= k as f64;
            }
            d.push(e / fact);
        }
        self.compose(&d)
    }

    fn sin_cos_coeffs(&self, phase: usize) -> Vec<f64> {
        let (s, c) = self.value().sin_cos();
        let cycle = [s, c, -s, -c];
        let mut fact = 1.0;
        (0..=self.order)
            .map(|k| {
                if k > 0 {
                    fact *= k as f64;
                }
                cycle[(k + phase) % 4] / fact
            })
            .collect()
    }

    pub fn sin(&self) -> Jet {
        self.compose(&self.sin_cos_coeffs(0))
    }

    pub fn cos(&self) -> Jet {
        self.compose(&self.sin_cos_coeffs(1))
    }

    pub fn ln(&self) -> Result<Jet> {
        let a0 = self.value();
        if a0 <= 0.0 {
            return Err(Error::Expr(ExprError::Domain {
                subexpr: "log(...)".into(),
                reason: "log of a non-positive number".into(),
            }));
        }
        let mut d = vec![a0.ln()];
        for k in 1..=self.order {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            d.push(sign / (k as f64 * a0.powi(k as i32)));
        }
        Ok(self.compose(&d))
    }

    /// Real power; requires a positive base unless the exponent is a small integer.
    pub fn powf(&self, r: f64) -> Result<Jet> {
        if r.fract() == 0.0 && r.abs() <= 64.0 {
            return self.powi(r as i32);
        }
        let a0 = self.value();
        if a0 <= 0.0 {
            return Err(Error::Expr(ExprError::Domain {
                subexpr: "(...)^r".into(),
                reason: "non-integer power of a non-positive base".into(),
            }));
        }
        let mut d = Vec::with_capacity(self.order + 1);
        let mut binom = 1.0;
        for k in 0..=self.order {
            if k > 0 {
                binom *= (r - (k - 1) as f64) / k as f64;
            }
            d.push(binom * a0.powf(r - k as f64));
        }
        Ok(self.compose(&d))
    }

    pub fn powi(&self, n: i32) -> Result<Jet> {
        if n < 0 {
            return self.powi(-n)?.recip();
        }
        let mut result = Jet::constant(&self.layout, self.order, 1.0);
        let mut base = self.clone();
        let mut e = n as u32;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul_jet(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul_jet(&base);
            }
        }
        Ok(result)
    }

    pub fn sqrt(&self) -> Result<Jet> {
        if self.value() < 0.0 || (self.value() == 0.0 && self.order > 0) {
            return Err(Error::Expr(ExprError::Domain {
                subexpr: "sqrt(...)".into(),
                reason: "sqrt of a non-positive number".into(),
            }));
        }
        if self.order == 0 {
            return Ok(Jet::constant(&self.layout, 0, self.value().sqrt()));
        }
        self.powf(0.5)
    }

    /// Largest absolute coefficient difference, for exactness tests.
    pub fn max_abs_diff(&self, other: &Jet) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        let mut out = self.clone();
        out.add_assign(rhs);
        out
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        let mut out = self.clone();
        out.add_scaled(-1.0, rhs);
        out
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        self.mul_jet(rhs)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UnaryFn {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Pow(f64),
}

/// Checked binary jet arithmetic: both operands must share dimension and order.
pub fn jet_arith(a: &Jet, b: &Jet, op: ArithOp) -> Result<Jet> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(a.dim(), b.dim()));
    }
    if a.order() != b.order() {
        return Err(Error::OrderMismatch(a.order(), b.order()));
    }
    Ok(match op {
        ArithOp::Add => a + b,
        ArithOp::Sub => a - b,
        ArithOp::Mul => a * b,
        ArithOp::Div => a.div_jet(b)?,
    })
}

pub fn jet_func(a: &Jet, f: UnaryFn) -> Result<Jet> {
    match f {
        UnaryFn::Sin => Ok(a.sin()),
        UnaryFn::Cos => Ok(a.cos()),
        UnaryFn::Exp => Ok(a.exp()),
        UnaryFn::Log => a.ln(),
        UnaryFn::Sqrt => a.sqrt(),
        UnaryFn::Pow(r) => a.powf(r),
    }
}

/// Jet of an expression at `point`, through order `order`.
pub fn eval_jet(expr: &ExprNode, point: &[f64], order: usize, params: &Bindings) -> Result<Jet> {
    check_order(order)?;
    if let Some(max) = expr.max_coord_index() {
        if max >= point.len() {
            return Err(ExprError::PointDimension {
                expected: max + 1,
                got: point.len(),
            }
            .into());
        }
    }
    let layout = Layout::for_dim(point.len())?;
    let coords: Vec<Jet> = (0..point.len())
        .map(|i| Jet::lift_coordinate(i, point, order))
        .collect::<Result<_>>()?;
    eval_node(expr, &layout, order, &coords, params)
}

fn eval_node(e: &ExprNode, layout: &Arc<Layout>, order: usize, coords: &[Jet], params: &Bindings) -> Result<Jet> {
    let annotate = |err: Error| match err {
        Error::Expr(ExprError::Domain { reason, .. }) => Jet::domain_error(e, &reason),
        other => other,
    };
    Ok(match e {
        ExprNode::Const(c) => Jet::constant(layout, order, *c),
        ExprNode::Coord(i, _) => coords[*i].clone(),
        ExprNode::Param(p) => Jet::constant(
            layout,
            order,
            *params
                .get(p)
                .ok_or_else(|| ExprError::UnboundParameter(p.clone()))?,
        ),
        ExprNode::Neg(a) => -&eval_node(a, layout, order, coords, params)?,
        ExprNode::Binary(BinOp::Pow, a, b) => {
            let base = eval_node(a, layout, order, coords, params)?;
            pow_node(e, base, b, layout, order, coords, params)?
        }
        ExprNode::Binary(op, a, b) => {
            let x = eval_node(a, layout, order, coords, params)?;
            let y = eval_node(b, layout, order, coords, params)?;
            match op {
                BinOp::Add => &x + &y,
                BinOp::Sub => &x - &y,
                BinOp::Mul => &x * &y,
                BinOp::Div => {
                    if y.value() == 0.0 {
                        return Err(Jet::domain_error(e, "division by zero"));
                    }
                    x.div_jet(&y).map_err(annotate)?
                }
                BinOp::Pow => unreachable!(),
            }
        }
        ExprNode::Call(f, args) => {
            let x = eval_node(&args[0], layout, order, coords, params)?;
            match f {
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
                Func::Tan => {
                    let c = x.cos();
                    if c.value() == 0.0 {
                        return Err(Jet::domain_error(e, "tan at a pole"));
                    }
                    x.sin().div_jet(&c).map_err(annotate)?
                }
                Func::Exp => x.exp(),
                Func::Log => x.ln().map_err(annotate)?,
                Func::Sqrt => x.sqrt().map_err(annotate)?,
                Func::Pow => pow_node(e, x, &args[1], layout, order, coords, params)?,
            }
        }
    })
}

fn pow_node(
    e: &ExprNode,
    base: Jet,
    exponent: &ExprNode,
    layout: &Arc<Layout>,
    order: usize,
    coords: &[Jet],
    params: &Bindings,
) -> Result<Jet> {
    if exponent.is_coordinate_free() {
        let r = crate::expr::eval_scalar_with(exponent, &[], params)?;
        // shares the scalar evaluator's domain policy
        checked_powf(base.value(), r, e)?;
        return base.powf(r).map_err(|_| Jet::domain_error(e, "power outside its domain"));
    }
    if base.value() <= 0.0 {
        return Err(Jet::domain_error(e, "variable exponent needs a positive base"));
    }
    let y = eval_node(exponent, layout, order, coords, params)?;
    Ok((&y * &base.ln()?).exp())
}
