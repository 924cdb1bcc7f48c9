//! Cotton, Bach and the potential-dependent tensors of static metrics.
//!
//! All constructions are cached on the [`PointContext`] and stay jet-valued, so any of them
//! can be fed back into `divergence`.

use std::rc::Rc;

use crate::curvature::PointContext;
use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::tensor::{self, wedge_1_2, Tensor, TensorValue, Variance};

type JetTensor = Tensor<Jet>;

/// `(d^D h)(X,Y,Z) = (D_X h)(Y,Z) − (D_Y h)(X,Z)`.
pub fn d_d(ctx: &PointContext, h: &JetTensor) -> Result<JetTensor> {
    if h.valence() != 2 {
        return Err(Error::ValenceMismatch(h.valence(), 2));
    }
    let dh = ctx.covariant_derivative(h)?;
    dh.sub(&dh.permute(&[1, 0, 2])?)
}

/// `ds` as a covector.
pub fn scalar_differential(ctx: &PointContext) -> Result<Rc<JetTensor>> {
    ctx.cached("ds", || {
        let s = ctx.scalar()?;
        let comps = (0..ctx.dim()).map(|a| s.derivative(a)).collect::<Result<_>>()?;
        Tensor::from_components(ctx.dim(), &[Variance::Co], comps)
    })
}

/// `C = d^D r − (1/(2(n−1))) ds∧g`.
pub fn cotton(ctx: &PointContext) -> Result<Rc<JetTensor>> {
    ctx.cached("cotton", || {
        let n = ctx.dim() as f64;
        let dr = d_d(ctx, &*ctx.ricci()?)?;
        let dsg = wedge_1_2(&*scalar_differential(ctx)?, &ctx.metric().g)?;
        dr.axpy(-1.0 / (2.0 * (n - 1.0)), &dsg)
    })
}

/// `div C(Y,Z) = Σ (D_{E_i}C)(E_i, Y, Z)`.
pub fn div_cotton(ctx: &PointContext) -> Result<Rc<JetTensor>> {
    ctx.cached("div C", || ctx.divergence(&*cotton(ctx)?))
}

/// `W̊h(X,Y) = Σ W(X,E_i,Y,E_k) h(E_i,E_k)` on jets.
pub fn ring_weyl(ctx: &PointContext, h: &JetTensor) -> Result<JetTensor> {
    tensor::ring(&*ctx.weyl()?, h, ctx.metric())
}

pub fn ring_weyl_ricci(ctx: &PointContext) -> Result<Rc<JetTensor>> {
    ctx.cached("ringWr", || ring_weyl(ctx, &*ctx.ricci()?))
}

pub fn ring_weyl_z(ctx: &PointContext) -> Result<Rc<JetTensor>> {
    ctx.cached("ringWz", || ring_weyl(ctx, &*ctx.traceless_ricci()?))
}

fn require_dim(ctx: &PointContext, what: &'static str, min: usize) -> Result<()> {
    if ctx.dim() < min {
        return Err(Error::UnsupportedDimension {
            what,
            dim: ctx.dim(),
            min,
        });
    }
    Ok(())
}

/// `Σ_l (D_{E_l}W)(X,Y,Z,E_l)`.
pub fn div4_weyl(ctx: &PointContext) -> Result<Rc<JetTensor>> {
    ctx.cached("div4 W", || ctx.divergence_slot(&*ctx.weyl()?, 3))
}

/// Bach tensor from the Weyl tensor:
/// `B(X,Y) = (1/(n−3)) Σ_{k,l} D²_{E_k,E_l}W(X,E_k,Y,E_l) + (1/(n−2)) W̊r(X,Y)`.
pub fn bach(ctx: &PointContext) -> Result<Rc<JetTensor>> {
    ctx.cached("bach", || {
        require_dim(ctx, "Bach tensor", 4)?;
        let n = ctx.dim() as f64;
        let ddw = ctx.divergence_slot(&*div4_weyl(ctx)?, 1)?;
        ddw.scale(1.0 / (n - 3.0)).axpy(1.0 / (n - 2.0), &*ring_weyl_ricci(ctx)?)
    })
}

/// Bach tensor from the Cotton tensor: `(n−2)B = div C + W̊r`.
pub fn bach_via_cotton(ctx: &PointContext) -> Result<Rc<JetTensor>> {
    ctx.cached("bach via cotton", || {
        require_dim(ctx, "Bach tensor", 4)?;
        let n = ctx.dim() as f64;
        div_cotton(ctx)?.add(&*ring_weyl_ricci(ctx)?).map(|t| t.scale(1.0 / (n - 2.0)))
    })
}

/// `div³C`.
pub fn div3_cotton(ctx: &PointContext) -> Result<Rc<JetTensor>> {
    ctx.cached("div3 C", || ctx.iterated_divergence(&*div_cotton(ctx)?, 2))
}

/// Four divergences of `W`: the first gives `Q(Y,Z,V)`, which is read as a tensor in
/// `(Z,V,Y)` before the remaining three first-slot divergences.
pub fn div4_weyl_iterated(ctx: &PointContext) -> Result<Rc<JetTensor>> {
    ctx.cached("div^4 W", || {
        let q = ctx.divergence(&*ctx.weyl()?)?.permute(&[1, 2, 0])?;
        ctx.iterated_divergence(&q, 3)
    })
}

pub fn div_bach(ctx: &PointContext) -> Result<Rc<JetTensor>> {
    ctx.cached("div B", || ctx.divergence(&*bach(ctx)?))
}

pub fn div2_bach(ctx: &PointContext) -> Result<Rc<JetTensor>> {
    ctx.cached("div2 B", || ctx.divergence(&*div_bach(ctx)?))
}

/// `i_{∇f}z`.
pub fn interior_grad_z(ctx: &PointContext) -> Result<Rc<JetTensor>> {
    ctx.cached("i_grad z", || {
        ctx.traceless_ricci()?.interior_first(&*ctx.gradient()?, ctx.metric())
    })
}

/// `T = (1/(n−2)) df∧z + (1/((n−1)(n−2))) i_{∇f}z∧g`.
pub fn tensor_t(ctx: &PointContext) -> Result<Rc<JetTensor>> {
    ctx.cached("T", || {
        require_dim(ctx, "tensor T", 3)?;
        let n = ctx.dim() as f64;
        let a = wedge_1_2(&*ctx.differential()?, &*ctx.traceless_ricci()?)?;
        let b = wedge_1_2(&*interior_grad_z(ctx)?, &ctx.metric().g)?;
        Tensor::combine(&[(1.0 / (n - 2.0), &a), (1.0 / ((n - 1.0) * (n - 2.0)), &b)])
    })
}

/// `Ĉ(X,Y) = C(Y,∇f,X)`.
pub fn hat_c(ctx: &PointContext) -> Result<Rc<JetTensor>> {
    ctx.cached("hatC", || {
        cotton(ctx)?.interior(&*ctx.gradient()?, 1, ctx.metric())?.permute(&[1, 0])
    })
}

/// `i_{∇f}C(Y,Z) = C(∇f,Y,Z)`.
pub fn interior_grad_c(ctx: &PointContext) -> Result<Rc<JetTensor>> {
    ctx.cached("i_grad C", || cotton(ctx)?.interior_first(&*ctx.gradient()?, ctx.metric()))
}

/// `ĩ_{∇f}W(Y,Z,V) = W(Y,Z,V,∇f)`.
pub fn tilde_i_grad_w(ctx: &PointContext) -> Result<Rc<JetTensor>> {
    ctx.cached("tilde_i_grad W", || ctx.weyl()?.interior_last(&*ctx.gradient()?, ctx.metric()))
}

/// `s′*(f) = Ddf − (Δf) g − f r`.
pub fn s_star_adjoint(ctx: &PointContext) -> Result<Rc<JetTensor>> {
    ctx.cached("s_star", || {
        let f = ctx.potential()?;
        let lap_g = ctx.metric().g.times(&ctx.laplacian()?);
        let fr = ctx.ricci()?.times(f);
        ctx.hessian()?.sub(&lap_g)?.sub(&fr)
    })
}

/// Point values attached to the potential: `f`, `∇f`, `|∇f|²`, and off the critical set
/// the unit normal `N = ∇f/|∇f|` with `α = z(N,N)`.
#[derive(Debug, Clone)]
pub struct StaticContext {
    pub f: f64,
    pub grad: Vec<f64>,
    pub grad_sq: f64,
    pub normal: Option<Vec<f64>>,
    pub alpha: Option<f64>,
}

/// `|∇f|²` below this fraction of the metric scale counts as a critical point.
pub const CRITICAL_FLOOR: f64 = 1e-14;

impl StaticContext {
    pub fn new(ctx: &PointContext) -> Result<Self> {
        let f = ctx.potential()?.value();
        let grad: Vec<f64> = ctx.gradient()?.values().into_components();
        let df = ctx.differential()?.values();
        let grad_sq: f64 = grad.iter().zip(df.components()).map(|(a, b)| a * b).sum();
        let scale = ctx.metric().g.values().max_abs().max(1.0);
        let (normal, alpha) = if grad_sq > CRITICAL_FLOOR * scale {
            let len = grad_sq.sqrt();
            let nv: Vec<f64> = grad.iter().map(|x| x / len).collect();
            let z = ctx.traceless_ricci()?.values();
            let n = ctx.dim();
            let mut a = 0.0;
            for i in 0..n {
                for j in 0..n {
                    a += z.at(&[i, j]) * nv[i] * nv[j];
                }
            }
            (Some(nv), Some(a))
        } else {
            (None, None)
        };
        Ok(StaticContext {
            f,
            grad,
            grad_sq,
            normal,
            alpha,
        })
    }

    pub fn normal(&self) -> Result<&[f64]> {
        self.normal.as_deref().ok_or(Error::CriticalPoint(self.grad_sq))
    }

    pub fn alpha(&self) -> Result<f64> {
        self.alpha.ok_or(Error::CriticalPoint(self.grad_sq))
    }

    /// `i_N z` as a covector value.
    pub fn interior_normal_z(&self, ctx: &PointContext) -> Result<TensorValue> {
        let nv = self.normal()?;
        let z = ctx.traceless_ricci()?.values();
        let n = ctx.dim();
        Ok(Tensor::covariant(n, 1, |i| (0..n).map(|a| nv[a] * z.at(&[a, i[0]])).sum()))
    }

    /// `W_N(X,Y) = W(N,X,N,Y)`.
    pub fn weyl_normal(&self, ctx: &PointContext) -> Result<TensorValue> {
        let nv = self.normal()?;
        let w = ctx.weyl()?.values();
        let n = ctx.dim();
        Ok(Tensor::covariant(n, 2, |i| {
            let mut acc = 0.0;
            for a in 0..n {
                for b in 0..n {
                    acc += nv[a] * nv[b] * w.at(&[a, i[0], b, i[1]]);
                }
            }
            acc
        }))
    }
}
