//! Point-local dense tensors.
//!
//! Components are stored row-major in `n^k` slots. The scalar type is generic so the same
//! algebra runs on plain values (`f64`) and on jets, where the result stays differentiable.
//! Curvature tensors are kept fully covariant; variance changes are explicit.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::jet::Jet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Variance {
    Co,
    Contra,
}

/// Field over which tensor components live.
pub trait Scalar: Clone + Send + Sync {
    fn zero_like(&self) -> Self;
    fn value(&self) -> f64;
    fn add_assign(&mut self, other: &Self);
    /// `self += c * other`
    fn add_scaled(&mut self, c: f64, other: &Self);
    /// `self += a * b`
    fn mul_add_assign(&mut self, a: &Self, b: &Self);
    fn scale(&self, c: f64) -> Self;
    fn product(&self, other: &Self) -> Self;
}

impl Scalar for f64 {
    fn zero_like(&self) -> Self {
        0.0
    }
    fn value(&self) -> f64 {
        *self
    }
    fn add_assign(&mut self, other: &Self) {
        *self += other;
    }
    fn add_scaled(&mut self, c: f64, other: &Self) {
        *self += c * other;
    }
    fn mul_add_assign(&mut self, a: &Self, b: &Self) {
        *self += a * b;
    }
    fn scale(&self, c: f64) -> Self {
        self * c
    }
    fn product(&self, other: &Self) -> Self {
        self * other
    }
}

impl Scalar for Jet {
    fn zero_like(&self) -> Self {
        Jet::zero_like(self)
    }
    fn value(&self) -> f64 {
        Jet::value(self)
    }
    fn add_assign(&mut self, other: &Self) {
        Jet::add_assign(self, other)
    }
    fn add_scaled(&mut self, c: f64, other: &Self) {
        Jet::add_scaled(self, c, other)
    }
    fn mul_add_assign(&mut self, a: &Self, b: &Self) {
        Jet::mul_add_assign(self, a, b)
    }
    fn scale(&self, c: f64) -> Self {
        Jet::scale(self, c)
    }
    fn product(&self, other: &Self) -> Self {
        self.mul_jet(other)
    }
}

#[derive(Debug, Clone)]
pub struct Tensor<S> {
    dim: usize,
    variance: Vec<Variance>,
    comps: Vec<S>,
}

pub type TensorValue = Tensor<f64>;

/// Metric and inverse metric at a point, for variance changes and traces.
#[derive(Debug, Clone)]
pub struct MetricPair<S> {
    pub g: Tensor<S>,
    pub ginv: Tensor<S>,
}

impl MetricPair<f64> {
    /// Build from a symmetric positive-definite matrix of components.
    pub fn from_matrix(g: &[f64], dim: usize) -> Result<Self> {
        let m = nalgebra::DMatrix::from_row_slice(dim, dim, g);
        let chol = m.clone().cholesky().ok_or(Error::NotPositiveDefinite { point: Vec::new() })?;
        let inv = chol.inverse();
        let ginv = Tensor::from_fn(dim, &[Variance::Contra; 2], |i| inv[(i[0], i[1])]);
        let g = Tensor::from_fn(dim, &[Variance::Co; 2], |i| m[(i[0], i[1])]);
        Ok(MetricPair { g, ginv })
    }

    pub fn euclidean(dim: usize) -> Self {
        let delta = |i: &[usize]| if i[0] == i[1] { 1.0 } else { 0.0 };
        MetricPair {
            g: Tensor::from_fn(dim, &[Variance::Co; 2], delta),
            ginv: Tensor::from_fn(dim, &[Variance::Contra; 2], delta),
        }
    }
}

impl MetricPair<Jet> {
    pub fn values(&self) -> MetricPair<f64> {
        MetricPair {
            g: self.g.values(),
            ginv: self.ginv.values(),
        }
    }
}

/// Iterate multi-indices of a valence-`k` tensor in storage order.
fn decode(mut flat: usize, dim: usize, out: &mut [usize]) {
    for slot in out.iter_mut().rev() {
        *slot = flat % dim;
        flat /= dim;
    }
}

impl<S: Scalar> Tensor<S> {
    pub fn from_fn(dim: usize, variance: &[Variance], mut f: impl FnMut(&[usize]) -> S) -> Self {
        let k = variance.len();
        let len = dim.pow(k as u32);
        let mut idx = vec![0; k];
        let comps = (0..len)
            .map(|flat| {
                decode(flat, dim, &mut idx);
                f(&idx)
            })
            .collect();
        Tensor {
            dim,
            variance: variance.to_vec(),
            comps,
        }
    }

    pub fn from_components(dim: usize, variance: &[Variance], comps: Vec<S>) -> Result<Self> {
        let len = dim.pow(variance.len() as u32);
        if comps.len() != len {
            return Err(Error::DimensionMismatch(comps.len(), len));
        }
        Ok(Tensor {
            dim,
            variance: variance.to_vec(),
            comps,
        })
    }

    pub fn zeros(dim: usize, variance: &[Variance], proto: &S) -> Self {
        let z = proto.zero_like();
        Tensor::from_fn(dim, variance, |_| z.clone())
    }

    /// Fully covariant tensor of valence `k`.
    pub fn covariant(dim: usize, k: usize, f: impl FnMut(&[usize]) -> S) -> Self {
        Tensor::from_fn(dim, &vec![Variance::Co; k], f)
    }

    pub fn scalar(s: S) -> Self {
        Tensor {
            dim: 1,
            variance: Vec::new(),
            comps: vec![s],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn valence(&self) -> usize {
        self.variance.len()
    }

    pub fn variance(&self) -> &[Variance] {
        &self.variance
    }

    pub fn components(&self) -> &[S] {
        &self.comps
    }

    pub fn components_mut(&mut self) -> &mut [S] {
        &mut self.comps
    }

    pub fn into_components(self) -> Vec<S> {
        self.comps
    }

    pub fn is_covariant(&self) -> bool {
        self.variance.iter().all(|v| *v == Variance::Co)
    }

    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.valence());
        idx.iter().fold(0, |acc, &i| acc * self.dim + i)
    }

    pub fn at(&self, idx: &[usize]) -> &S {
        &self.comps[self.offset(idx)]
    }

    pub fn at_mut(&mut self, idx: &[usize]) -> &mut S {
        let o = self.offset(idx);
        &mut self.comps[o]
    }

    /// Component of a scalar (valence 0) tensor.
    pub fn scalar_value(&self) -> &S {
        &self.comps[0]
    }

    pub fn values(&self) -> TensorValue {
        Tensor {
            dim: self.dim,
            variance: self.variance.clone(),
            comps: self.comps.iter().map(|c| c.value()).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(&S) -> S) -> Self {
        Tensor {
            dim: self.dim,
            variance: self.variance.clone(),
            comps: self.comps.iter().map(f).collect(),
        }
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        if self.variance != other.variance {
            return Err(Error::ValenceMismatch(self.valence(), other.valence()));
        }
        Ok(())
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|s| s.scale(c))
    }

    /// `self + c * other`
    pub fn axpy(&self, c: f64, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let mut out = self.clone();
        for (a, b) in out.comps.iter_mut().zip(&other.comps) {
            a.add_scaled(c, b);
        }
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.axpy(-1.0, other)
    }

    /// Linear combination `Σ c_i t_i` of same-shape tensors.
    pub fn combine(terms: &[(f64, &Tensor<S>)]) -> Result<Self> {
        let (c0, t0) = terms.first().expect("empty combination");
        let mut out = t0.scale(*c0);
        for (c, t) in &terms[1..] {
            out = out.axpy(*c, t)?;
        }
        Ok(out)
    }

    /// Multiply every component by a scalar field value.
    pub fn times(&self, s: &S) -> Self {
        self.map(|c| c.product(s))
    }

    /// Reorder slots: slot `p` of the result is slot `perm[p]` of `self`.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        let k = self.valence();
        let mut seen = vec![false; k];
        if perm.len() != k || perm.iter().any(|&p| p >= k || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::InvalidSlot {
                slots: perm.to_vec(),
                valence: k,
            });
        }
        let variance: Vec<Variance> = perm.iter().map(|&p| self.variance[p]).collect();
        let mut src = vec![0; k];
        Ok(Tensor::from_fn(self.dim, &variance, |idx| {
            for (p, &q) in perm.iter().enumerate() {
                src[q] = idx[p];
            }
            self.at(&src).clone()
        }))
    }

    /// Tensor product, slots of `self` first.
    pub fn outer(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        let mut variance = self.variance.clone();
        variance.extend_from_slice(&other.variance);
        let kb = other.valence();
        let nb = other.comps.len();
        Ok(Tensor::from_fn(self.dim, &variance, |idx| {
            let a = self.at(&idx[..idx.len() - kb]);
            let b_off = if kb == 0 { 0 } else { other.offset(&idx[idx.len() - kb..]) };
            debug_assert!(b_off < nb);
            a.product(&other.comps[b_off])
        }))
    }

    /// Trace over slots `a`, `b`, inserting `g` or `g⁻¹` as the variances require.
    pub fn contract(&self, a: usize, b: usize, metric: &MetricPair<S>) -> Result<Self> {
        let k = self.valence();
        if a == b || a >= k || b >= k {
            return Err(Error::InvalidSlot {
                slots: vec![a, b],
                valence: k,
            });
        }
        let (a, b) = (a.min(b), a.max(b));
        let n = self.dim;
        let weight: Option<&Tensor<S>> = match (self.variance[a], self.variance[b]) {
            (Variance::Co, Variance::Co) => Some(&metric.ginv),
            (Variance::Contra, Variance::Contra) => Some(&metric.g),
            _ => None,
        };
        let variance: Vec<Variance> = self
            .variance
            .iter()
            .enumerate()
            .filter(|(p, _)| *p != a && *p != b)
            .map(|(_, v)| *v)
            .collect();
        let proto = self.comps[0].zero_like();
        let mut full = vec![0; k];
        Ok(Tensor::from_fn(n, &variance, |rest| {
            let mut acc = proto.clone();
            let mut r = rest.iter();
            for (p, slot) in full.iter_mut().enumerate() {
                if p != a && p != b {
                    *slot = *r.next().unwrap();
                }
            }
            for i in 0..n {
                full[a] = i;
                match weight {
                    Some(w) => {
                        for j in 0..n {
                            full[b] = j;
                            acc.mul_add_assign(w.at(&[i, j]), self.at(&full));
                        }
                    }
                    None => {
                        full[b] = i;
                        acc.add_assign(self.at(&full));
                    }
                }
            }
            acc
        }))
    }

    /// Change the variance of one slot using the metric.
    pub fn set_variance(&self, slot: usize, to: Variance, metric: &MetricPair<S>) -> Result<Self> {
        let k = self.valence();
        if slot >= k {
            return Err(Error::InvalidSlot {
                slots: vec![slot],
                valence: k,
            });
        }
        if self.variance[slot] == to {
            return Ok(self.clone());
        }
        let w = match to {
            Variance::Contra => &metric.ginv,
            Variance::Co => &metric.g,
        };
        let mut variance = self.variance.clone();
        variance[slot] = to;
        let proto = self.comps[0].zero_like();
        let mut src = vec![0; k];
        Ok(Tensor::from_fn(self.dim, &variance, |idx| {
            src.copy_from_slice(idx);
            let mut acc = proto.clone();
            for j in 0..self.dim {
                src[slot] = j;
                acc.mul_add_assign(w.at(&[idx[slot], j]), self.at(&src));
            }
            acc
        }))
    }

    pub fn to_covariant(&self, metric: &MetricPair<S>) -> Result<Self> {
        let mut t = self.clone();
        for slot in 0..self.valence() {
            t = t.set_variance(slot, Variance::Co, metric)?;
        }
        Ok(t)
    }

    pub fn to_contravariant(&self, metric: &MetricPair<S>) -> Result<Self> {
        let mut t = self.clone();
        for slot in 0..self.valence() {
            t = t.set_variance(slot, Variance::Contra, metric)?;
        }
        Ok(t)
    }

    /// Full metric contraction `⟨a, b⟩`.
    pub fn inner(&self, other: &Self, metric: &MetricPair<S>) -> Result<S> {
        if self.valence() != other.valence() {
            return Err(Error::ValenceMismatch(self.valence(), other.valence()));
        }
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        let a = self.to_covariant(metric)?;
        let b = other.to_contravariant(metric)?;
        let mut acc = a.comps[0].zero_like();
        for (x, y) in a.comps.iter().zip(&b.comps) {
            acc.mul_add_assign(x, y);
        }
        Ok(acc)
    }

    pub fn norm_sq(&self, metric: &MetricPair<S>) -> Result<S> {
        self.inner(self, metric)
    }

    /// Insert a vector (or the dual of a 1-form) into slot `slot`.
    pub fn interior(&self, v: &Tensor<S>, slot: usize, metric: &MetricPair<S>) -> Result<Self> {
        if v.valence() != 1 {
            return Err(Error::ValenceMismatch(v.valence(), 1));
        }
        if slot >= self.valence() {
            return Err(Error::InvalidSlot {
                slots: vec![slot],
                valence: self.valence(),
            });
        }
        let t = self.set_variance(slot, Variance::Co, metric)?;
        let v = v.set_variance(0, Variance::Contra, metric)?;
        let variance: Vec<Variance> = t
            .variance
            .iter()
            .enumerate()
            .filter(|(p, _)| *p != slot)
            .map(|(_, v)| *v)
            .collect();
        let proto = t.comps[0].zero_like();
        let mut full = vec![0; t.valence()];
        Ok(Tensor::from_fn(self.dim, &variance, |rest| {
            let mut r = rest.iter();
            for (p, s) in full.iter_mut().enumerate() {
                if p != slot {
                    *s = *r.next().unwrap();
                }
            }
            let mut acc = proto.clone();
            for i in 0..self.dim {
                full[slot] = i;
                acc.mul_add_assign(&v.comps[i], t.at(&full));
            }
            acc
        }))
    }

    /// `i_X t`: insertion into the first slot.
    pub fn interior_first(&self, v: &Tensor<S>, metric: &MetricPair<S>) -> Result<Self> {
        self.interior(v, 0, metric)
    }

    /// `ĩ_X t`: insertion into the fourth slot of a 4-tensor.
    pub fn interior_last(&self, v: &Tensor<S>, metric: &MetricPair<S>) -> Result<Self> {
        if self.valence() != 4 {
            return Err(Error::ValenceMismatch(self.valence(), 4));
        }
        self.interior(v, 3, metric)
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().map(|c| c.value().abs()).fold(0.0, f64::max)
    }

    fn require_covariant(&self, k: usize) -> Result<()> {
        if self.valence() != k {
            return Err(Error::ValenceMismatch(self.valence(), k));
        }
        if !self.is_covariant() {
            return Err(Error::InvalidSlot {
                slots: (0..k).collect(),
                valence: k,
            });
        }
        Ok(())
    }
}

/// Kulkarni–Nomizu product of two covariant symmetric 2-tensors:
/// `(h∧k)(X,Y,Z,V) = h(X,Z)k(Y,V) + h(Y,V)k(X,Z) − h(X,V)k(Y,Z) − h(Y,Z)k(X,V)`.
pub fn kulkarni_nomizu<S: Scalar>(h: &Tensor<S>, k: &Tensor<S>) -> Result<Tensor<S>> {
    h.require_covariant(2)?;
    k.require_covariant(2)?;
    if h.dim() != k.dim() {
        return Err(Error::DimensionMismatch(h.dim(), k.dim()));
    }
    let proto = h.comps[0].zero_like();
    Ok(Tensor::covariant(h.dim(), 4, |i| {
        let (x, y, z, v) = (i[0], i[1], i[2], i[3]);
        let mut acc = proto.clone();
        acc.mul_add_assign(h.at(&[x, z]), k.at(&[y, v]));
        acc.mul_add_assign(h.at(&[y, v]), k.at(&[x, z]));
        let mut neg = proto.clone();
        neg.mul_add_assign(h.at(&[x, v]), k.at(&[y, z]));
        neg.mul_add_assign(h.at(&[y, z]), k.at(&[x, v]));
        acc.add_scaled(-1.0, &neg);
        acc
    }))
}

/// `(φ∧η)(X,Y,Z) = φ(X)η(Y,Z) − φ(Y)η(X,Z)` for a 1-form φ and a 2-tensor η.
pub fn wedge_1_2<S: Scalar>(phi: &Tensor<S>, eta: &Tensor<S>) -> Result<Tensor<S>> {
    phi.require_covariant(1)?;
    eta.require_covariant(2)?;
    if phi.dim() != eta.dim() {
        return Err(Error::DimensionMismatch(phi.dim(), eta.dim()));
    }
    let proto = phi.comps[0].zero_like();
    Ok(Tensor::covariant(phi.dim(), 3, |i| {
        let mut acc = proto.clone();
        acc.mul_add_assign(phi.at(&[i[0]]), eta.at(&[i[1], i[2]]));
        let mut neg = proto.clone();
        neg.mul_add_assign(phi.at(&[i[1]]), eta.at(&[i[0], i[2]]));
        acc.add_scaled(-1.0, &neg);
        acc
    }))
}

/// `z∘z(X,Y) = Σ z(X,E_i) z(Y,E_i)`.
pub fn zz<S: Scalar>(z: &Tensor<S>, metric: &MetricPair<S>) -> Result<Tensor<S>> {
    z.require_covariant(2)?;
    let n = z.dim();
    let zr = z.set_variance(1, Variance::Contra, metric)?;
    let proto = z.comps[0].zero_like();
    Ok(Tensor::covariant(n, 2, |i| {
        let mut acc = proto.clone();
        for a in 0..n {
            acc.mul_add_assign(z.at(&[i[0], a]), zr.at(&[i[1], a]));
        }
        acc
    }))
}

/// `W̊h(X,Y) = Σ_{i,k} W(X,E_i,Y,E_k) h(E_k,E_i)`: contraction of slots 2 and 4.
pub fn ring<S: Scalar>(w: &Tensor<S>, h: &Tensor<S>, metric: &MetricPair<S>) -> Result<Tensor<S>> {
    w.require_covariant(4)?;
    h.require_covariant(2)?;
    let n = w.dim();
    let hup = h.to_contravariant(metric)?;
    let proto = w.comps[0].zero_like();
    Ok(Tensor::covariant(n, 2, |i| {
        let mut acc = proto.clone();
        for a in 0..n {
            for b in 0..n {
                acc.mul_add_assign(w.at(&[i[0], a, i[1], b]), hup.at(&[b, a]));
            }
        }
        acc
    }))
}

/// Orthonormal frame from Gram–Schmidt on the given vectors (coordinate basis by default).
/// `frame[a][i]` is the `i`-th coordinate component of `E_a`.
pub fn orthonormal_frame(g: &TensorValue, seed: Option<&[Vec<f64>]>) -> Vec<Vec<f64>> {
    let n = g.dim();
    let dot = |u: &[f64], v: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += u[i] * g.at(&[i, j]) * v[j];
            }
        }
        s
    };
    let mut candidates: Vec<Vec<f64>> = seed.map(|s| s.to_vec()).unwrap_or_default();
    candidates.extend((0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()));
    let mut frame: Vec<Vec<f64>> = Vec::with_capacity(n);
    for mut v in candidates {
        if frame.len() == n {
            break;
        }
        for e in &frame {
            let c = dot(&v, e);
            for (vi, ei) in v.iter_mut().zip(e) {
                *vi -= c * ei;
            }
        }
        let len = dot(&v, &v).sqrt();
        if len > 1e-10 {
            frame.push(v.into_iter().map(|x| x / len).collect());
        }
    }
    frame
}

/// Components `T(E_a, E_b, ...)` in the given frame; contravariant slots are lowered first.
pub fn frame_components(t: &TensorValue, frame: &[Vec<f64>], metric: &MetricPair<f64>) -> Result<TensorValue> {
    let mut cur = t.to_covariant(metric)?;
    let n = t.dim();
    let k = t.valence();
    for slot in 0..k {
        let mut src = vec![0; k];
        cur = Tensor::covariant(n, k, |idx| {
            src.copy_from_slice(idx);
            let mut acc = 0.0;
            for i in 0..n {
                src[slot] = i;
                acc += frame[idx[slot]][i] * cur.at(&src);
            }
            acc
        });
    }
    Ok(cur)
}
