//! Levi-Civita curvature at a chart point, computed on metric jets.
//!
//! Every quantity is a [`Tensor<Jet>`], so it can be differentiated again: a covariant
//! derivative lowers the available jet order by one. Covariant derivatives put the new slot
//! first, and `divergence` contracts that slot with a chosen slot of the field
//! (`div h(X) = Σ D_{E_i}h(E_i, X)` for the first slot).

use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::jet::{Jet, Layout};
use crate::tensor::{kulkarni_nomizu, orthonormal_frame, MetricPair, Tensor, TensorValue, Variance};

type JetTensor = Tensor<Jet>;

pub struct PointContext {
    point: Vec<f64>,
    order: usize,
    layout: Arc<Layout>,
    metric: MetricPair<Jet>,
    potential: Option<Jet>,
    cache: RefCell<HashMap<String, Rc<JetTensor>>>,
    diagnostics: RefCell<Vec<String>>,
}

impl fmt::Debug for PointContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PointContext")
            .field("point", &self.point)
            .field("order", &self.order)
            .field("potential", &self.potential.is_some())
            .finish()
    }
}

fn order_of(t: &JetTensor) -> usize {
    t.components().iter().map(Jet::order).min().unwrap_or(0)
}

/// `C = A · B` for row-major `n×n` jet matrices.
fn mat_mul(a: &[Jet], b: &[Jet], n: usize) -> Vec<Jet> {
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = a[0].zero_like();
            for k in 0..n {
                acc.mul_add_assign(&a[i * n + k], &b[k * n + j]);
            }
            out.push(acc);
        }
    }
    out
}

impl PointContext {
    /// Build from the metric component jets (row-major, symmetric) and an optional potential jet.
    pub fn from_jets(point: &[f64], order: usize, g: Vec<Jet>, potential: Option<Jet>) -> Result<Self> {
        let n = point.len();
        if g.len() != n * n {
            return Err(Error::DimensionMismatch(g.len(), n * n));
        }
        if order < 2 {
            return Err(Error::OrderExhausted {
                what: "curvature".into(),
                needed: 2,
                available: order,
            });
        }
        let layout = Layout::for_dim(n)?;
        let values: Vec<f64> = g.iter().map(Jet::value).collect();
        let inv0 = nalgebra::DMatrix::from_row_slice(n, n, &values)
            .cholesky()
            .ok_or_else(|| Error::NotPositiveDefinite { point: point.to_vec() })?
            .inverse();

        // Newton iteration X ← X(2I − gX); each step doubles the number of exact orders.
        let mut x: Vec<Jet> = (0..n * n)
            .map(|k| Jet::constant(&layout, order, inv0[(k / n, k % n)]))
            .collect();
        let mut exact = 0;
        while exact < order {
            let gx = mat_mul(&g, &x, n);
            let corr: Vec<Jet> = gx
                .iter()
                .enumerate()
                .map(|(k, e)| {
                    let two = if k / n == k % n { 2.0 } else { 0.0 };
                    e.scale(-1.0).add_scalar(two)
                })
                .collect();
            x = mat_mul(&x, &corr, n);
            exact = 2 * exact + 1;
        }
        // symmetrize away rounding asymmetry
        let ginv = Tensor::from_fn(n, &[Variance::Contra; 2], |i| {
            let mut s = x[i[0] * n + i[1]].clone();
            s.add_assign(&x[i[1] * n + i[0]]);
            s.scale(0.5)
        });
        let gt = Tensor::from_components(n, &[Variance::Co; 2], g)?;
        Ok(PointContext {
            point: point.to_vec(),
            order,
            layout,
            metric: MetricPair { g: gt, ginv },
            potential,
            cache: RefCell::new(HashMap::new()),
            diagnostics: RefCell::new(Vec::new()),
        })
    }

    pub fn point(&self) -> &[f64] {
        &self.point
    }

    pub fn dim(&self) -> usize {
        self.point.len()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    pub fn metric(&self) -> &MetricPair<Jet> {
        &self.metric
    }

    pub fn metric_values(&self) -> MetricPair<f64> {
        self.metric.values()
    }

    pub fn has_potential(&self) -> bool {
        self.potential.is_some()
    }

    pub fn potential(&self) -> Result<&Jet> {
        self.potential.as_ref().ok_or(Error::MissingPotential)
    }

    pub fn diagnostics(&self) -> Vec<String> {
        self.diagnostics.borrow().clone()
    }

    /// Constant jet at the context's full order.
    pub fn constant(&self, c: f64) -> Jet {
        Jet::constant(&self.layout, self.order, c)
    }

    /// Memoize a tensor under `key` for the lifetime of this context.
    pub fn cached(&self, key: &str, build: impl FnOnce() -> Result<JetTensor>) -> Result<Rc<JetTensor>> {
        if let Some(t) = self.cache.borrow().get(key) {
            return Ok(t.clone());
        }
        let t = Rc::new(build()?);
        self.cache.borrow_mut().insert(key.to_string(), t.clone());
        Ok(t)
    }

    fn require_order(&self, what: &str, needed: usize) -> Result<()> {
        if needed > self.order {
            return Err(Error::OrderExhausted {
                what: what.to_string(),
                needed,
                available: self.order,
            });
        }
        Ok(())
    }

    /// `Γ^k_{ij}` stored with slots `[k, i, j]`.
    pub fn christoffel(&self) -> Result<Rc<JetTensor>> {
        self.cached("christoffel", || {
            let n = self.dim();
            let g = &self.metric.g;
            let dg: Vec<Vec<Jet>> = (0..n)
                .map(|l| g.components().iter().map(|c| c.derivative(l)).collect::<Result<_>>())
                .collect::<Result<_>>()?;
            let at = |l: usize, i: usize, j: usize| &dg[l][i * n + j];
            let first = Tensor::covariant(n, 3, |idx| {
                let (l, i, j) = (idx[0], idx[1], idx[2]);
                let mut s = at(i, j, l).clone();
                s.add_assign(at(j, i, l));
                s.add_scaled(-1.0, at(l, i, j));
                s.scale(0.5)
            });
            let ginv = &self.metric.ginv;
            Ok(Tensor::from_fn(n, &[Variance::Contra, Variance::Co, Variance::Co], |idx| {
                let mut acc = first.at(&[0, idx[1], idx[2]]).zero_like();
                for l in 0..n {
                    acc.mul_add_assign(ginv.at(&[idx[0], l]), first.at(&[l, idx[1], idx[2]]));
                }
                acc
            }))
        })
    }

    /// Fully covariant curvature with `R(X,Y,X,Y) > 0` on round spheres:
    /// `R(i,j,k,l) = g(R(∂_i,∂_j)∂_l, ∂_k)`.
    pub fn riemann(&self) -> Result<Rc<JetTensor>> {
        self.cached("riemann", || {
            self.require_order("riemann", 2)?;
            let n = self.dim();
            let gam = self.christoffel()?;
            let dgam: Vec<Vec<Jet>> = (0..n)
                .map(|a| gam.components().iter().map(|c| c.derivative(a)).collect::<Result<_>>())
                .collect::<Result<_>>()?;
            let dg = |a: usize, l: usize, i: usize, j: usize| &dgam[a][(l * n + i) * n + j];
            // Rup^l_{kij} = ∂_iΓ^l_{jk} − ∂_jΓ^l_{ik} + Γ^l_{im}Γ^m_{jk} − Γ^l_{jm}Γ^m_{ik}
            let rup = Tensor::from_fn(n, &[Variance::Contra, Variance::Co, Variance::Co, Variance::Co], |idx| {
                let (l, k, i, j) = (idx[0], idx[1], idx[2], idx[3]);
                let mut acc = dg(i, l, j, k).clone();
                acc.add_scaled(-1.0, dg(j, l, i, k));
                let mut neg = acc.zero_like();
                for m in 0..n {
                    acc.mul_add_assign(gam.at(&[l, i, m]), gam.at(&[m, j, k]));
                    neg.mul_add_assign(gam.at(&[l, j, m]), gam.at(&[m, i, k]));
                }
                acc.add_scaled(-1.0, &neg);
                acc
            });
            let g = &self.metric.g;
            Ok(Tensor::covariant(n, 4, |idx| {
                let (i, j, k, l) = (idx[0], idx[1], idx[2], idx[3]);
                let mut acc = rup.at(&[0, l, i, j]).zero_like();
                for m in 0..n {
                    acc.mul_add_assign(g.at(&[k, m]), rup.at(&[m, l, i, j]));
                }
                acc
            }))
        })
    }

    /// `r(Y,V) = Σ R(E_i, Y, E_i, V)`.
    pub fn ricci(&self) -> Result<Rc<JetTensor>> {
        self.cached("ricci", || self.riemann()?.contract(0, 2, &self.metric))
    }

    pub fn scalar(&self) -> Result<Jet> {
        let s = self.cached("scalar", || self.ricci()?.contract(0, 1, &self.metric))?;
        Ok(s.scalar_value().clone())
    }

    /// `z = r − (s/n) g`.
    pub fn traceless_ricci(&self) -> Result<Rc<JetTensor>> {
        self.cached("z", || {
            let s = self.scalar()?;
            let n = self.dim() as f64;
            let sg = self.metric.g.times(&s);
            self.ricci()?.axpy(-1.0 / n, &sg)
        })
    }

    /// `W = R − s/(2n(n−1)) g∧g − (1/(n−2)) z∧g`; zero in dimension 3 (with a diagnostic).
    pub fn weyl(&self) -> Result<Rc<JetTensor>> {
        self.cached("weyl", || {
            let n = self.dim();
            let r = self.riemann()?;
            if n <= 3 {
                self.diagnostics
                    .borrow_mut()
                    .push(format!("Weyl tensor is identically zero in dimension {n}; returning zero"));
                return Ok(r.scale(0.0));
            }
            let nf = n as f64;
            let g = &self.metric.g;
            let s = self.scalar()?;
            let gg = kulkarni_nomizu(g, g)?.times(&s);
            let zg = kulkarni_nomizu(&*self.traceless_ricci()?, g)?;
            Tensor::combine(&[(1.0, &*r), (-1.0 / (2.0 * nf * (nf - 1.0)), &gg), (-1.0 / (nf - 2.0), &zg)])
        })
    }

    /// `(DT)(V; X_1..X_k)`, new slot first; the result has one jet order less than `t`.
    pub fn covariant_derivative(&self, t: &JetTensor) -> Result<JetTensor> {
        let n = self.dim();
        let k = t.valence();
        let m = order_of(t);
        if m == 0 {
            return Err(Error::OrderExhausted {
                what: "covariant derivative".into(),
                needed: 1,
                available: 0,
            });
        }
        let gam = self.christoffel()?;
        let partials: Vec<Vec<Jet>> = (0..n)
            .map(|a| t.components().iter().map(|c| c.derivative(a)).collect::<Result<_>>())
            .collect::<Result<_>>()?;
        let mut variance = vec![Variance::Co];
        variance.extend_from_slice(t.variance());
        let mut src = vec![0; k];
        Ok(Tensor::from_fn(n, &variance, |idx| {
            let a = idx[0];
            let rest = &idx[1..];
            let mut acc = partials[a][t.offset(rest)].clone();
            let mut neg = acc.zero_like();
            for p in 0..k {
                src.copy_from_slice(rest);
                for c in 0..n {
                    src[p] = c;
                    match t.variance()[p] {
                        Variance::Co => neg.mul_add_assign(gam.at(&[c, a, rest[p]]), t.at(&src)),
                        Variance::Contra => acc.mul_add_assign(gam.at(&[rest[p], a, c]), t.at(&src)),
                    }
                }
            }
            acc.add_scaled(-1.0, &neg);
            acc
        }))
    }

    /// Contract the derivative slot with slot `slot` of `t` (0-based).
    pub fn divergence_slot(&self, t: &JetTensor, slot: usize) -> Result<JetTensor> {
        if slot >= t.valence() {
            return Err(Error::InvalidSlot {
                slots: vec![slot],
                valence: t.valence(),
            });
        }
        self.covariant_derivative(t)?.contract(0, slot + 1, &self.metric)
    }

    /// `div T(X_2..) = Σ (D_{E_i}T)(E_i, X_2, ..)`.
    pub fn divergence(&self, t: &JetTensor) -> Result<JetTensor> {
        self.divergence_slot(t, 0)
    }

    pub fn iterated_divergence(&self, t: &JetTensor, m: usize) -> Result<JetTensor> {
        if m > t.valence() {
            return Err(Error::InvalidSlot {
                slots: vec![m],
                valence: t.valence(),
            });
        }
        let mut cur = t.clone();
        for _ in 0..m {
            cur = self.divergence(&cur)?;
        }
        Ok(cur)
    }

    /// `df` as a covector.
    pub fn differential(&self) -> Result<Rc<JetTensor>> {
        self.cached("df", || {
            let f = self.potential()?;
            let comps = (0..self.dim()).map(|a| f.derivative(a)).collect::<Result<_>>()?;
            Tensor::from_components(self.dim(), &[Variance::Co], comps)
        })
    }

    /// `∇f` as a vector.
    pub fn gradient(&self) -> Result<Rc<JetTensor>> {
        self.cached("grad_f", || self.differential()?.set_variance(0, Variance::Contra, &self.metric))
    }

    pub fn hessian(&self) -> Result<Rc<JetTensor>> {
        self.cached("hessian", || self.covariant_derivative(&*self.differential()?))
    }

    /// Trace of the Hessian.
    pub fn laplacian(&self) -> Result<Jet> {
        let t = self.cached("laplacian", || self.hessian()?.contract(0, 1, &self.metric))?;
        Ok(t.scalar_value().clone())
    }

    /// `D*D T = −Σ D²_{E_i,E_i} T`.
    pub fn connection_laplacian(&self, t: &JetTensor) -> Result<JetTensor> {
        let dd = self.covariant_derivative(&self.covariant_derivative(t)?)?;
        Ok(dd.contract(0, 1, &self.metric)?.scale(-1.0))
    }

    /// Orthonormal frame from Gram–Schmidt on the coordinate basis.
    pub fn orthonormal_frame(&self) -> Vec<Vec<f64>> {
        orthonormal_frame(&self.metric.g.values(), None)
    }
}

type Evaluator = dyn Fn(&PointContext) -> Result<JetTensor> + Send + Sync;

/// A named tensor field evaluated through a [`PointContext`]. `depth` is the number of metric
/// derivatives the evaluator consumes, so the field needs a jet order of at least `depth`.
#[derive(Clone)]
pub struct TensorField {
    name: String,
    valence: usize,
    depth: usize,
    eval: Arc<Evaluator>,
}

impl fmt::Debug for TensorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TensorField({}, valence {}, depth {})", self.name, self.valence, self.depth)
    }
}

impl TensorField {
    pub fn new(
        name: impl Into<String>,
        valence: usize,
        depth: usize,
        eval: impl Fn(&PointContext) -> Result<JetTensor> + Send + Sync + 'static,
    ) -> Self {
        TensorField {
            name: name.into(),
            valence,
            depth,
            eval: Arc::new(eval),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn valence(&self) -> usize {
        self.valence
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn evaluate(&self, ctx: &PointContext) -> Result<Rc<JetTensor>> {
        ctx.require_order(&self.name, self.depth)?;
        let t = ctx.cached(&self.name, || (self.eval)(ctx))?;
        if t.valence() != self.valence {
            return Err(Error::ValenceMismatch(t.valence(), self.valence));
        }
        Ok(t)
    }

    pub fn values(&self, ctx: &PointContext) -> Result<TensorValue> {
        Ok(self.evaluate(ctx)?.values())
    }

    pub fn covariant_derivative(&self) -> TensorField {
        let inner = self.clone();
        TensorField::new(format!("D({})", self.name), self.valence + 1, self.depth + 1, move |ctx| {
            ctx.covariant_derivative(&*inner.evaluate(ctx)?)
        })
    }

    /// Divergence contracting the derivative with slot `slot` (0-based).
    pub fn divergence_slot(&self, slot: usize) -> Result<TensorField> {
        if slot >= self.valence {
            return Err(Error::InvalidSlot {
                slots: vec![slot],
                valence: self.valence,
            });
        }
        let inner = self.clone();
        let name = if slot == 0 {
            format!("div({})", self.name)
        } else {
            format!("div{}({})", slot + 1, self.name)
        };
        Ok(TensorField::new(name, self.valence - 1, self.depth + 1, move |ctx| {
            ctx.divergence_slot(&*inner.evaluate(ctx)?, slot)
        }))
    }

    pub fn divergence(&self) -> Result<TensorField> {
        self.divergence_slot(0)
    }

    pub fn iterated_divergence(&self, m: usize) -> Result<TensorField> {
        let mut f = self.clone();
        for _ in 0..m {
            f = f.divergence()?;
        }
        Ok(f)
    }

    pub fn metric() -> TensorField {
        TensorField::new("g", 2, 0, |ctx| Ok(ctx.metric().g.clone()))
    }

    pub fn riemann() -> TensorField {
        TensorField::new("R", 4, 2, |ctx| Ok((*ctx.riemann()?).clone()))
    }

    pub fn ricci() -> TensorField {
        TensorField::new("r", 2, 2, |ctx| Ok((*ctx.ricci()?).clone()))
    }

    pub fn traceless_ricci() -> TensorField {
        TensorField::new("z", 2, 2, |ctx| Ok((*ctx.traceless_ricci()?).clone()))
    }

    pub fn weyl() -> TensorField {
        TensorField::new("W", 4, 2, |ctx| Ok((*ctx.weyl()?).clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, Bindings};
    use crate::jet::eval_jet;

    /// Context for a metric given as expression strings (full matrix, row-major).
    fn ctx(entries: &[&str], coords: &[&str], point: &[f64], order: usize, f: Option<&str>) -> PointContext {
        let b = Bindings::new();
        let g = entries
            .iter()
            .map(|e| eval_jet(&parse(e, coords).unwrap(), point, order, &b).unwrap())
            .collect();
        let pot = f.map(|e| eval_jet(&parse(e, coords).unwrap(), point, order, &b).unwrap());
        PointContext::from_jets(point, order, g, pot).unwrap()
    }

    fn sphere(n: usize, point: &[f64], order: usize) -> PointContext {
        let coords: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
        let c: Vec<&str> = coords.iter().map(String::as_str).collect();
        let r2 = coords.iter().map(|x| format!("{x}^2")).collect::<Vec<_>>().join("+");
        let conf = format!("4/(1+{r2})^2");
        let entries: Vec<String> = (0..n * n)
            .map(|k| if k / n == k % n { conf.clone() } else { "0".into() })
            .collect();
        let e: Vec<&str> = entries.iter().map(String::as_str).collect();
        let f = format!("(1-({r2}))/(1+{r2})");
        ctx(&e, &c, point, order, Some(&f))
    }

    #[test]
    fn inverse_metric_jets_through_full_order() {
        let c = ctx(
            &["exp(x)", "0.3*x*y", "0.3*x*y", "2+sin(y)"],
            &["x", "y"],
            &[0.2, 0.4],
            5,
            None,
        );
        let m = c.metric();
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = c.constant(if i == j { -1.0 } else { 0.0 });
                for k in 0..2 {
                    acc.mul_add_assign(m.g.at(&[i, k]), m.ginv.at(&[k, j]));
                }
                assert!(acc.coeffs().iter().all(|x| x.abs() < 1e-10), "{acc:?}");
            }
        }
    }

    #[test]
    fn christoffel_of_conformal_metric() {
        let c = ctx(&["exp(2*x)", "0", "0", "exp(2*x)"], &["x", "y"], &[0.0, 0.0], 2, None);
        let gam = c.christoffel().unwrap().values();
        let expect = |k: usize, i: usize, j: usize| -> f64 {
            match (k, i, j) {
                (0, 0, 0) => 1.0,
                (0, 1, 1) => -1.0,
                (1, 0, 1) | (1, 1, 0) => 1.0,
                _ => 0.0,
            }
        };
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    assert!((gam.at(&[k, i, j]) - expect(k, i, j)).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn flat_metric_is_flat() {
        let c = ctx(&["1", "0", "0", "1"], &["x", "y"], &[0.3, -0.1], 3, None);
        assert_eq!(c.christoffel().unwrap().max_abs(), 0.0);
        assert_eq!(c.riemann().unwrap().max_abs(), 0.0);
    }

    #[test]
    fn unit_four_sphere() {
        let c = sphere(4, &[0.1, -0.2, 0.3, 0.05], 4);
        assert!((c.scalar().unwrap().value() - 12.0).abs() < 1e-10);
        assert!(c.traceless_ricci().unwrap().max_abs() < 1e-10);
        assert!(c.weyl().unwrap().values().max_abs() < 1e-10);
        let frame = c.orthonormal_frame();
        let rf = crate::tensor::frame_components(&c.riemann().unwrap().values(), &frame, &c.metric_values()).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                if a != b {
                    assert!((rf.at(&[a, b, a, b]) - 1.0).abs() < 1e-10);
                }
            }
        }
        // (1/2)κ g∧g is the curvature tensor
        let g = c.metric_values().g;
        let gg = kulkarni_nomizu(&g, &g).unwrap().scale(0.5);
        assert!(gg.sub(&c.riemann().unwrap().values()).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn metric_is_parallel_and_hessian_of_height_function() {
        let c = sphere(3, &[0.2, 0.1, -0.3], 3);
        let dg = c.covariant_derivative(&c.metric().g).unwrap();
        assert!(dg.values().max_abs() < 1e-10);
        // Ddf = −f g on the unit sphere; Δf = −n f
        let f = c.potential().unwrap().value();
        let h = c.hessian().unwrap().values();
        let resid = h.axpy(f, &c.metric_values().g).unwrap();
        assert!(resid.max_abs() < 1e-10);
        assert!((c.laplacian().unwrap().value() + 3.0 * f).abs() < 1e-10);
        let dd = c.connection_laplacian(&c.metric().g).unwrap();
        assert!(dd.values().max_abs() < 1e-10);
    }

    #[test]
    fn weyl_vanishes_in_dimension_three_with_diagnostic() {
        let c = ctx(
            &["1+x^2", "0", "0", "0", "1", "0.1*y", "0", "0.1*y", "1+z^2"],
            &["x", "y", "z"],
            &[0.1, 0.2, 0.3],
            2,
            None,
        );
        assert_eq!(c.weyl().unwrap().values().max_abs(), 0.0);
        assert_eq!(c.diagnostics().len(), 1);
    }

    #[test]
    fn order_exhaustion_is_reported() {
        let c = sphere(2, &[0.1, 0.1], 2);
        let r = c.riemann().unwrap();
        let err = c.covariant_derivative(&r).unwrap_err();
        assert!(matches!(err, Error::OrderExhausted { .. }));
        let field = TensorField::weyl().divergence().unwrap();
        assert!(matches!(field.evaluate(&c), Err(Error::OrderExhausted { needed: 3, .. })));
    }

    #[test]
    fn indefinite_metric_rejected() {
        let b = Bindings::new();
        let g = ["1", "0", "0", "-1"]
            .iter()
            .map(|e| eval_jet(&parse(e, &["x", "y"]).unwrap(), &[0.0, 0.0], 2, &b).unwrap())
            .collect();
        assert!(matches!(
            PointContext::from_jets(&[0.0, 0.0], 2, g, None),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }
}
