//! The identity checks. Each evaluates both sides independently at one point; the runner
//! compares them in an orthonormal frame.

use serde::Serialize;

use crate::curvature::PointContext;
use crate::error::Result;
use crate::models::Tag;
use crate::static_tensors::{self as st, StaticContext};
use crate::tensor::{frame_components, zz, MetricPair, Tensor, TensorValue};

/// Conditions a spec must meet for a check to apply.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct Requirements {
    pub potential: bool,
    pub constant_scalar: bool,
    pub min_dim: usize,
    /// Spec must carry at least one of these tags (empty: no tag needed).
    pub tags: &'static [Tag],
}

/// Both sides of an identity at one point, as orthonormal-frame components.
#[derive(Debug, Clone, Default)]
pub struct Sides {
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    /// Largest magnitude among the individual terms; guards against `0 = 0`.
    pub terms: f64,
    /// Magnitude of the quantity that must be visibly nonzero, for checks that assert one.
    pub witness: f64,
}

pub struct IdentityCheck {
    pub id: &'static str,
    pub formula: &'static str,
    pub requires: Requirements,
    /// Jet order needed by the deeper side.
    pub order: usize,
    pub tolerance: f64,
    /// Defining equation: rerunning with a perturbed potential must fail.
    pub control: bool,
    /// Sample only away from the zero and critical sets of the potential.
    pub filtered: bool,
    /// Smallest acceptable maximum of [`Sides::witness`] over the sample.
    pub witness_min: Option<f64>,
    pub evaluate: fn(&PointContext) -> Result<Sides>,
}

impl std::fmt::Debug for IdentityCheck {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "IdentityCheck({})", self.id)
    }
}

struct Frame {
    frame: Vec<Vec<f64>>,
    m: MetricPair<f64>,
}

/// Accumulates frame components of paired sides.
struct Builder {
    fr: Frame,
    sides: Sides,
}

impl Builder {
    fn new(ctx: &PointContext) -> Self {
        Builder {
            fr: Frame {
                frame: ctx.orthonormal_frame(),
                m: ctx.metric_values(),
            },
            sides: Sides::default(),
        }
    }

    fn comps(&self, t: &TensorValue) -> Result<Vec<f64>> {
        Ok(frame_components(t, &self.fr.frame, &self.fr.m)?.into_components())
    }

    fn eq(mut self, lhs: &TensorValue, rhs: &TensorValue) -> Result<Self> {
        if lhs.valence() != rhs.valence() {
            return Err(crate::Error::ValenceMismatch(lhs.valence(), rhs.valence()));
        }
        let l = self.comps(lhs)?;
        let r = self.comps(rhs)?;
        self.sides.lhs.extend(l);
        self.sides.rhs.extend(r);
        Ok(self)
    }

    fn scalar(mut self, lhs: f64, rhs: f64) -> Self {
        self.sides.lhs.push(lhs);
        self.sides.rhs.push(rhs);
        self
    }

    fn zero(mut self, residuals: impl IntoIterator<Item = f64>) -> Self {
        for r in residuals {
            self.sides.lhs.push(r);
            self.sides.rhs.push(0.0);
        }
        self
    }

    fn terms(mut self, ts: &[&TensorValue]) -> Self {
        for t in ts {
            self.sides.terms = self.sides.terms.max(t.max_abs());
        }
        self
    }

    fn term(mut self, x: f64) -> Self {
        self.sides.terms = self.sides.terms.max(x.abs());
        self
    }

    fn witness(mut self, x: f64) -> Self {
        self.sides.witness = self.sides.witness.max(x.abs());
        self
    }

    fn done(self) -> Result<Sides> {
        Ok(self.sides)
    }
}

fn nf(ctx: &PointContext) -> f64 {
    ctx.dim() as f64
}

/// `X ↦ Σ t(X, E_a, E_b) h(E_a, E_b)`.
fn pair_last2(t: &TensorValue, h: &TensorValue, m: &MetricPair<f64>) -> Result<TensorValue> {
    let n = t.dim();
    let hup = h.to_contravariant(m)?;
    Ok(Tensor::covariant(n, 1, |i| {
        let mut acc = 0.0;
        for a in 0..n {
            for b in 0..n {
                acc += t.at(&[i[0], a, b]) * hup.at(&[a, b]);
            }
        }
        acc
    }))
}

/// `X ↦ Σ W(E_a, E_b, E_c, X) C(E_a, E_b, E_c)`.
fn pair_tilde_w(w: &TensorValue, c: &TensorValue, m: &MetricPair<f64>) -> Result<TensorValue> {
    let n = w.dim();
    let cup = c.to_contravariant(m)?;
    Ok(Tensor::covariant(n, 1, |i| {
        let mut acc = 0.0;
        for a in 0..n {
            for b in 0..n {
                for k in 0..n {
                    acc += w.at(&[a, b, k, i[0]]) * cup.at(&[a, b, k]);
                }
            }
        }
        acc
    }))
}

/// `h(v, v)` for a 2-tensor, `h(v)` for a 1-form.
fn eval_at(t: &TensorValue, v: &[f64]) -> f64 {
    let n = t.dim();
    match t.valence() {
        1 => (0..n).map(|a| t.at(&[a]) * v[a]).sum(),
        _ => {
            let mut acc = 0.0;
            for a in 0..n {
                for b in 0..n {
                    acc += t.at(&[a, b]) * v[a] * v[b];
                }
            }
            acc
        }
    }
}

fn grad(ctx: &PointContext) -> Result<Vec<f64>> {
    Ok(ctx.gradient()?.values().into_components())
}

/// `D_{∇f}z(X,Y) = Σ ∇^a f (Dz)(E_a,X,Y)`.
fn d_grad_z(ctx: &PointContext) -> Result<TensorValue> {
    let dz = ctx.covariant_derivative(&*ctx.traceless_ricci()?)?.values();
    dz.interior_first(&ctx.gradient()?.values(), &ctx.metric_values())
}

fn connection_laplacian_z(ctx: &PointContext) -> Result<TensorValue> {
    Ok(ctx.connection_laplacian(&*ctx.traceless_ricci()?)?.values())
}

fn div_t(ctx: &PointContext) -> Result<TensorValue> {
    Ok(ctx.divergence(&*st::tensor_t(ctx)?)?.values())
}

fn div_weyl_cotton(ctx: &PointContext) -> Result<Sides> {
    let n = nf(ctx);
    let lhs = ctx.divergence(&*ctx.weyl()?)?.values();
    let c = st::cotton(ctx)?.values();
    let rhs = c.permute(&[2, 0, 1])?.scale((n - 3.0) / (n - 2.0));
    Builder::new(ctx).eq(&lhs, &rhs)?.terms(&[&c]).done()
}

fn bach_two_routes(ctx: &PointContext) -> Result<Sides> {
    let n = nf(ctx);
    let lhs = st::bach(ctx)?.values().scale(n - 2.0);
    let dc = st::div_cotton(ctx)?.values();
    let wr = st::ring_weyl_ricci(ctx)?.values();
    let rhs = dc.add(&wr)?;
    Builder::new(ctx).eq(&lhs, &rhs)?.terms(&[&dc, &wr]).done()
}

fn ring_traceless(ctx: &PointContext) -> Result<Sides> {
    let wr = st::ring_weyl_ricci(ctx)?.values();
    let wz = st::ring_weyl_z(ctx)?.values();
    Builder::new(ctx).eq(&wr, &wz)?.done()
}

fn contracted_bianchi(ctx: &PointContext) -> Result<Sides> {
    let lhs = ctx.divergence(&*ctx.ricci()?)?.values();
    let rhs = st::scalar_differential(ctx)?.values().scale(0.5);
    Builder::new(ctx).eq(&lhs, &rhs)?.terms(&[&ctx.ricci()?.values()]).done()
}

fn div_bach(ctx: &PointContext) -> Result<Sides> {
    let n = nf(ctx);
    let m = ctx.metric_values();
    let lhs = st::div_bach(ctx)?.values();
    let c = st::cotton(ctx)?.values();
    let z = ctx.traceless_ricci()?.values();
    let rhs = pair_last2(&c, &z, &m)?.scale((n - 4.0) / (n - 2.0).powi(2));
    Builder::new(ctx).eq(&lhs, &rhs)?.terms(&[&c]).done()
}

fn div2_bach(ctx: &PointContext) -> Result<Sides> {
    let n = nf(ctx);
    let m = ctx.metric_values();
    let lhs = *st::div2_bach(ctx)?.values().scalar_value();
    let c = st::cotton(ctx)?.values();
    let z = ctx.traceless_ricci()?.values();
    let dc = st::div_cotton(ctx)?.values();
    let rhs = (n - 4.0) / (n - 2.0).powi(2) * (0.5 * c.norm_sq(&m)? + dc.inner(&z, &m)?);
    Builder::new(ctx).scalar(lhs, rhs).terms(&[&c, &dc]).done()
}

/// Right side of the constant-s formula for div C.
fn div_cotton_const_rhs(ctx: &PointContext) -> Result<(TensorValue, Vec<TensorValue>)> {
    let n = nf(ctx);
    let m = ctx.metric_values();
    let z = ctx.traceless_ricci()?.values();
    let s = ctx.scalar()?.value();
    let ddz = connection_laplacian_z(ctx)?;
    let zsq = zz(&z, &m)?;
    let wz = st::ring_weyl_z(ctx)?.values();
    let rhs = Tensor::combine(&[
        (-1.0, &ddz),
        (-n / (n - 2.0), &zsq),
        (-s / (n - 1.0), &z),
        (1.0, &wz),
        (z.norm_sq(&m)? / (n - 2.0), &m.g),
    ])?;
    Ok((rhs, vec![ddz, zsq, wz]))
}

fn div_cotton_formula(ctx: &PointContext) -> Result<Sides> {
    let n = nf(ctx);
    let m = ctx.metric_values();
    let lhs = st::div_cotton(ctx)?.values();
    let (base, terms) = div_cotton_const_rhs(ctx)?;
    let dds = ctx.covariant_derivative(&*st::scalar_differential(ctx)?)?.values();
    let lap_s = *dds.contract(0, 1, &m)?.scalar_value();
    let hess_s0 = dds.axpy(-lap_s / n, &m.g)?;
    let rhs = base.axpy(-(n - 2.0) / (2.0 * (n - 1.0)), &hess_s0)?;
    let refs: Vec<&TensorValue> = terms.iter().chain([&hess_s0]).collect();
    Builder::new(ctx).eq(&lhs, &rhs)?.terms(&refs).done()
}

fn div_cotton_formula_const_s(ctx: &PointContext) -> Result<Sides> {
    let lhs = st::div_cotton(ctx)?.values();
    let (rhs, terms) = div_cotton_const_rhs(ctx)?;
    let refs: Vec<&TensorValue> = terms.iter().collect();
    Builder::new(ctx).eq(&lhs, &rhs)?.terms(&refs).done()
}

fn div2_cotton(ctx: &PointContext) -> Result<Sides> {
    let n = nf(ctx);
    let m = ctx.metric_values();
    let lhs = ctx.divergence(&*st::div_cotton(ctx)?)?.values();
    let c = st::cotton(ctx)?.values();
    let w = ctx.weyl()?.values();
    let z = ctx.traceless_ricci()?.values();
    let a = pair_tilde_w(&w, &c, &m)?;
    let b = pair_last2(&c, &z, &m)?;
    let rhs = Tensor::combine(&[(0.5, &a), (-1.0 / (n - 2.0), &b)])?;
    Builder::new(ctx).eq(&lhs, &rhs)?.terms(&[&a, &b]).done()
}

fn div4w_cotton(ctx: &PointContext) -> Result<Sides> {
    let n = nf(ctx);
    let lhs = *st::div4_weyl_iterated(ctx)?.values().scalar_value();
    let rhs = (n - 3.0) / (n - 2.0) * st::div3_cotton(ctx)?.values().scalar_value();
    let c = st::cotton(ctx)?.values();
    Builder::new(ctx).scalar(lhs, rhs).terms(&[&c, &ctx.weyl()?.values()]).done()
}

fn static_fc(ctx: &PointContext) -> Result<Sides> {
    fc_identity(ctx, 0.0)
}

fn besse_fc(ctx: &PointContext) -> Result<Sides> {
    fc_identity(ctx, 1.0)
}

/// `(shift + f) C = ĩ_{∇f}W − (n−1) T`.
fn fc_identity(ctx: &PointContext, shift: f64) -> Result<Sides> {
    let n = nf(ctx);
    let f = ctx.potential()?.value();
    let c = st::cotton(ctx)?.values();
    let lhs = c.scale(shift + f);
    let iw = st::tilde_i_grad_w(ctx)?.values();
    let t = st::tensor_t(ctx)?.values();
    let rhs = iw.axpy(-(n - 1.0), &t)?;
    Builder::new(ctx).eq(&lhs, &rhs)?.terms(&[&iw, &t]).done()
}

fn div2c_gradf(ctx: &PointContext) -> Result<Sides> {
    div2c_grad_identity(ctx, 0.0)
}

fn besse_div2c(ctx: &PointContext) -> Result<Sides> {
    div2c_grad_identity(ctx, 1.0)
}

/// `div²C(∇f) = ½ (shift + f)|C|² + ⟨i_{∇f}C, z⟩`.
fn div2c_grad_identity(ctx: &PointContext, shift: f64) -> Result<Sides> {
    let m = ctx.metric_values();
    let gf = grad(ctx)?;
    let d2c = ctx.divergence(&*st::div_cotton(ctx)?)?.values();
    let lhs = eval_at(&d2c, &gf);
    let f = ctx.potential()?.value();
    let c = st::cotton(ctx)?.values();
    let ic = st::interior_grad_c(ctx)?.values();
    let z = ctx.traceless_ricci()?.values();
    let rhs = 0.5 * (shift + f) * c.norm_sq(&m)? + ic.inner(&z, &m)?;
    Builder::new(ctx).scalar(lhs, rhs).terms(&[&c, &d2c]).done()
}

fn div_tilde_w(ctx: &PointContext) -> Result<Sides> {
    let n = nf(ctx);
    let lhs = ctx.divergence(&*st::tilde_i_grad_w(ctx)?)?.values();
    let f = ctx.potential()?.value();
    let hc = st::hat_c(ctx)?.values();
    let wz = st::ring_weyl_z(ctx)?.values();
    let rhs = Tensor::combine(&[((n - 3.0) / (n - 2.0), &hc), (-f, &wz)])?;
    Builder::new(ctx).eq(&lhs, &rhs)?.terms(&[&hc, &wz]).done()
}

fn t_norm_inner(ctx: &PointContext) -> Result<Sides> {
    let n = nf(ctx);
    let m = ctx.metric_values();
    let t = st::tensor_t(ctx)?.values();
    let it = t.interior_first(&ctx.gradient()?.values(), &m)?;
    let z = ctx.traceless_ricci()?.values();
    let rhs = 2.0 / (n - 2.0) * it.inner(&z, &m)?;
    Builder::new(ctx).scalar(t.norm_sq(&m)?, rhs).terms(&[&t, &z]).done()
}

fn t_norm_frame(ctx: &PointContext) -> Result<Sides> {
    let n = nf(ctx);
    let m = ctx.metric_values();
    let sc = StaticContext::new(ctx)?;
    let t = st::tensor_t(ctx)?.values();
    let z = ctx.traceless_ricci()?.values();
    let inz = sc.interior_normal_z(ctx)?;
    let rhs = 2.0 / (n - 2.0).powi(2) * sc.grad_sq * (z.norm_sq(&m)? - n / (n - 1.0) * inz.norm_sq(&m)?);
    Builder::new(ctx).scalar(t.norm_sq(&m)?, rhs).terms(&[&t, &z]).done()
}

fn ft_grad_pointwise(ctx: &PointContext) -> Result<Sides> {
    let n = nf(ctx);
    let m = ctx.metric_values();
    let gf = grad(ctx)?;
    let f = ctx.potential()?;
    let gj = ctx.gradient()?;
    let ft = st::tensor_t(ctx)?.times(f);
    let div_ft = ctx.divergence(&ft)?.values();
    let div_ft_gg = eval_at(&div_ft, &gf);
    // fT(·, ∇f, ∇f) as a jet 1-form, then its divergence
    let ftgg = ft.interior(&gj, 1, ctx.metric())?.interior(&gj, 1, ctx.metric())?;
    let div_ftgg = *ctx.divergence(&ftgg)?.values().scalar_value();
    let fv = f.value();
    let t = st::tensor_t(ctx)?.values();
    let b = st::bach(ctx)?.values();
    let bgg = eval_at(&b, &gf);
    Builder::new(ctx)
        .scalar(div_ft_gg, div_ftgg + 0.5 * (n - 2.0) * fv * fv * t.norm_sq(&m)?)
        .scalar(fv * fv * bgg, -(n - 1.0) / (n - 2.0) * div_ft_gg)
        .terms(&[&t, &b, &div_ft])
        .done()
}

fn fb_formula(ctx: &PointContext) -> Result<Sides> {
    let n = nf(ctx);
    let f = ctx.potential()?.value();
    let lhs = st::bach(ctx)?.values().scale((n - 2.0) * f);
    let ic = st::interior_grad_c(ctx)?.values();
    let hc = st::hat_c(ctx)?.values();
    let dt = div_t(ctx)?;
    let rhs = Tensor::combine(&[(-1.0, &ic), ((n - 3.0) / (n - 2.0), &hc), (-(n - 1.0), &dt)])?;
    Builder::new(ctx).eq(&lhs, &rhs)?.terms(&[&ic, &hc, &dt]).done()
}

fn div2_t(ctx: &PointContext) -> Result<Sides> {
    let n = nf(ctx);
    let m = ctx.metric_values();
    let t = st::tensor_t(ctx)?;
    let lhs = ctx.iterated_divergence(&t, 2)?.values();
    let f = ctx.potential()?.value();
    let c = st::cotton(ctx)?.values();
    let z = ctx.traceless_ricci()?.values();
    let a = pair_last2(&c, &z, &m)?;
    let b = pair_last2(&t.values(), &z, &m)?;
    let rhs = Tensor::combine(&[(f / (n - 2.0), &a), (1.0, &b)])?;
    Builder::new(ctx).eq(&lhs, &rhs)?.terms(&[&a, &b]).done()
}

/// `(n−1)(n−2) div T`.
fn div_t_scaled(ctx: &PointContext) -> Result<TensorValue> {
    let n = nf(ctx);
    Ok(div_t(ctx)?.scale((n - 1.0) * (n - 2.0)))
}

fn div_t_direct(ctx: &PointContext) -> Result<Sides> {
    let n = nf(ctx);
    let m = ctx.metric_values();
    let lhs = div_t_scaled(ctx)?;
    let f = ctx.potential()?.value();
    let s = ctx.scalar()?.value();
    let z = ctx.traceless_ricci()?.values();
    let dgz = d_grad_z(ctx)?;
    let hc = st::hat_c(ctx)?.values();
    let zsq = zz(&z, &m)?;
    let rhs = Tensor::combine(&[
        (-(n - 2.0) / (n - 1.0) * s * f, &z),
        (n - 2.0, &dgz),
        (-1.0, &hc),
        (-n * f, &zsq),
        (f * z.norm_sq(&m)?, &m.g),
    ])?;
    Builder::new(ctx).eq(&lhs, &rhs)?.terms(&[&dgz, &zsq, &hc]).done()
}

fn div_t_weyl(ctx: &PointContext) -> Result<Sides> {
    let n = nf(ctx);
    let m = ctx.metric_values();
    let lhs = div_t_scaled(ctx)?;
    let f = ctx.potential()?.value();
    let s = ctx.scalar()?.value();
    let z = ctx.traceless_ricci()?.values();
    let ddz = connection_laplacian_z(ctx)?;
    let zsq = zz(&z, &m)?;
    let hc = st::hat_c(ctx)?.values();
    let ic = st::interior_grad_c(ctx)?.values();
    let dc = st::div_cotton(ctx)?.values();
    let rhs = Tensor::combine(&[
        (-(n - 2.0) * f, &ddz),
        (-n * f, &zsq),
        (-(n - 2.0) / (n - 1.0) * s * f, &z),
        (f * z.norm_sq(&m)?, &m.g),
        (n - 3.0, &hc),
        (-(n - 2.0), &ic),
        (-2.0 * (n - 2.0) * f, &dc),
    ])?;
    Builder::new(ctx).eq(&lhs, &rhs)?.terms(&[&ddz, &zsq, &hc, &dc]).done()
}

fn ddz_identity(ctx: &PointContext) -> Result<Sides> {
    let f = ctx.potential()?.value();
    let ddz = connection_laplacian_z(ctx)?;
    let dgz = d_grad_z(ctx)?;
    let lhs = Tensor::combine(&[(f, &ddz), (1.0, &dgz)])?;
    let hc = st::hat_c(ctx)?.values();
    let ic = st::interior_grad_c(ctx)?.values();
    let dc = st::div_cotton(ctx)?.values();
    let rhs = Tensor::combine(&[(1.0, &hc), (-1.0, &ic), (-2.0 * f, &dc)])?;
    Builder::new(ctx).eq(&lhs, &rhs)?.terms(&[&ddz, &dgz, &hc, &dc]).done()
}

fn div3_t(ctx: &PointContext) -> Result<Sides> {
    let n = nf(ctx);
    let m = ctx.metric_values();
    let t = st::tensor_t(ctx)?;
    let lhs = *ctx.iterated_divergence(&t, 3)?.values().scalar_value();
    let gf = grad(ctx)?;
    let f = ctx.potential()?.value();
    let db = st::div_bach(ctx)?.values();
    let d2b = *st::div2_bach(ctx)?.values().scalar_value();
    let dt = div_t(ctx)?;
    let z = ctx.traceless_ricci()?.values();
    let rhs = 2.0 * (n - 2.0) / (n - 4.0) * eval_at(&db, &gf) + (n - 2.0) / (n - 4.0) * f * d2b + dt.inner(&z, &m)?;
    Builder::new(ctx).scalar(lhs, rhs).terms(&[&db, &dt]).term(d2b).done()
}

fn t_cotton_inner(ctx: &PointContext) -> Result<Sides> {
    let n = nf(ctx);
    let m = ctx.metric_values();
    let t = st::tensor_t(ctx)?.values();
    let c = st::cotton(ctx)?.values();
    let ic = st::interior_grad_c(ctx)?.values();
    let z = ctx.traceless_ricci()?.values();
    Builder::new(ctx)
        .scalar(t.inner(&c, &m)?, 2.0 / (n - 2.0) * ic.inner(&z, &m)?)
        .terms(&[&t, &c])
        .done()
}

fn symmetry_suite(ctx: &PointContext) -> Result<Sides> {
    let n = ctx.dim();
    let b = Builder::new(ctx);
    let r = b.comps(&ctx.riemann()?.values())?;
    let w = b.comps(&ctx.weyl()?.values())?;
    let c = b.comps(&st::cotton(ctx)?.values())?;
    let i4 = |i: usize, j: usize, k: usize, l: usize| ((i * n + j) * n + k) * n + l;
    let i3 = |i: usize, j: usize, k: usize| (i * n + j) * n + k;
    let mut res = Vec::new();
    for t in [&r, &w] {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let x = t[i4(i, j, k, l)];
                        res.push(x + t[i4(j, i, k, l)]);
                        res.push(x + t[i4(i, j, l, k)]);
                        res.push(x - t[i4(k, l, i, j)]);
                        res.push(x + t[i4(j, k, i, l)] + t[i4(k, i, j, l)]);
                    }
                }
            }
        }
    }
    // every trace of W
    for j in 0..n {
        for l in 0..n {
            res.push((0..n).map(|i| w[i4(i, j, i, l)]).sum());
            res.push((0..n).map(|i| w[i4(i, j, l, i)]).sum());
            res.push((0..n).map(|i| w[i4(j, i, i, l)]).sum());
        }
    }
    for k in 0..n {
        res.push((0..n).map(|a| c[i3(a, k, a)]).sum());
        res.push((0..n).map(|a| c[i3(k, a, a)]).sum());
        for i in 0..n {
            for j in 0..n {
                res.push(c[i3(i, j, k)] + c[i3(j, i, k)]);
                res.push(c[i3(i, j, k)] + c[i3(j, k, i)] + c[i3(k, i, j)]);
            }
        }
    }
    let mut scale = ctx.riemann()?.values().max_abs().max(c.iter().fold(0.0, |a, x| a.max(x.abs())));
    if n >= 4 {
        let bt = b.comps(&st::bach(ctx)?.values())?;
        for i in 0..n {
            for j in 0..n {
                res.push(bt[i * n + j] - bt[j * n + i]);
            }
        }
        res.push((0..n).map(|i| bt[i * n + i]).sum());
        scale = scale.max(bt.iter().fold(0.0, |a, x| a.max(x.abs())));
    }
    if ctx.has_potential() && n >= 3 {
        let t = b.comps(&st::tensor_t(ctx)?.values())?;
        for k in 0..n {
            res.push((0..n).map(|i| t[i3(i, i, k)]).sum());
            res.push((0..n).map(|i| t[i3(i, k, i)]).sum());
            for j in 0..n {
                for l in 0..n {
                    res.push(t[i3(j, k, l)] + t[i3(k, j, l)]);
                }
            }
        }
    }
    b.zero(res).term(scale).done()
}

fn vacuum_static_eq(ctx: &PointContext) -> Result<Sides> {
    let n = nf(ctx);
    let f = ctx.potential()?.value();
    let s = ctx.scalar()?.value();
    let lhs = ctx.hessian()?.values();
    let r = ctx.ricci()?.values();
    let rhs = r.axpy(-s / (n - 1.0), &ctx.metric_values().g)?.scale(f);
    Builder::new(ctx).eq(&lhs, &rhs)?.terms(&[&r]).done()
}

fn eigen_eq(ctx: &PointContext) -> Result<Sides> {
    let n = nf(ctx);
    let f = ctx.potential()?.value();
    let s = ctx.scalar()?.value();
    Builder::new(ctx).scalar(ctx.laplacian()?.value(), -s * f / (n - 1.0)).term(s).done()
}

fn static_vacuum_eq(ctx: &PointContext) -> Result<Sides> {
    let h = ctx.potential()?.value();
    let r = ctx.ricci()?.values();
    let ddh = ctx.hessian()?.values();
    Builder::new(ctx)
        .eq(&r.scale(h), &ddh)?
        .scalar(ctx.laplacian()?.value(), 0.0)
        .scalar(ctx.scalar()?.value(), 0.0)
        .terms(&[&r])
        .done()
}

fn h_weakly_harmonic(ctx: &PointContext) -> Result<Sides> {
    let m = ctx.metric_values();
    let gh = ctx.gradient()?.values();
    let ddr = st::d_d(ctx, &*ctx.ricci()?)?.values();
    let lhs = ddr.interior(&gh, 0, &m)?.interior(&gh, 1, &m)?;
    let dr = ctx.covariant_derivative(&*ctx.ricci()?)?.values();
    let zero = lhs.scale(0.0);
    Builder::new(ctx).eq(&lhs, &zero)?.terms(&[&dr]).done()
}

fn besse_eq(ctx: &PointContext) -> Result<Sides> {
    let lhs = st::s_star_adjoint(ctx)?.values();
    let z = ctx.traceless_ricci()?.values();
    Builder::new(ctx).eq(&lhs, &z)?.terms(&[&ctx.hessian()?.values()]).done()
}

fn bach_nonflat_divfree(ctx: &PointContext) -> Result<Sides> {
    let b = Builder::new(ctx);
    let bach = b.comps(&st::bach(ctx)?.values())?;
    let bmax = bach.iter().fold(0.0, |a: f64, x| a.max(x.abs()));
    let db = b.comps(&st::div_bach(ctx)?.values())?;
    let d2b = *st::div2_bach(ctx)?.values().scalar_value();
    let d3c = *st::div3_cotton(ctx)?.values().scalar_value();
    let d4w = *st::div4_weyl_iterated(ctx)?.values().scalar_value();
    b.zero(db).zero([d2b, d3c, d4w]).term(bmax).witness(bmax).done()
}

const VACUUM: &[Tag] = &[Tag::VacuumStatic];
const STATIC_VACUUM: &[Tag] = &[Tag::StaticVacuum];
const BESSE: &[Tag] = &[Tag::Besse];
const PRODUCT: &[Tag] = &[Tag::Product];

const fn req(potential: bool, min_dim: usize, tags: &'static [Tag]) -> Requirements {
    Requirements {
        potential,
        constant_scalar: false,
        min_dim,
        tags,
    }
}

const fn check(
    id: &'static str,
    formula: &'static str,
    requires: Requirements,
    order: usize,
    evaluate: fn(&PointContext) -> Result<Sides>,
) -> IdentityCheck {
    IdentityCheck {
        id,
        formula,
        requires,
        order,
        tolerance: 1e-8,
        control: false,
        filtered: false,
        witness_min: None,
        evaluate,
    }
}

/// All checks, ordered by id.
pub fn registry() -> Vec<IdentityCheck> {
    let mut v = vec![
        check("div_weyl_cotton", "div W = (n-3)/(n-2) C", req(false, 3, &[]), 3, div_weyl_cotton),
        check("bach_two_routes", "(n-2) B = div C + ringW(r)", req(false, 4, &[]), 4, bach_two_routes),
        check("ring_weyl_traceless", "ringW(r) = ringW(z)", req(false, 4, &[]), 2, ring_traceless),
        check("contracted_bianchi", "div r = ds/2", req(false, 2, &[]), 3, contracted_bianchi),
        check("div_bach", "div B(X) = (n-4)/(n-2)^2 <i_X C, z>", req(false, 4, &[]), 5, div_bach),
        check(
            "div2_bach",
            "div^2 B = (n-4)/(n-2)^2 (|C|^2/2 + <div C, z>)",
            req(false, 4, &[]),
            6,
            div2_bach,
        ),
        check(
            "div_cotton_formula",
            "div C = -D*Dz - n/(n-2) z.z - s/(n-1) z + ringW(z) + |z|^2/(n-2) g - (n-2)/(2(n-1)) (Dds - (Laplacian s)/n g)",
            req(false, 3, &[]),
            4,
            div_cotton_formula,
        ),
        IdentityCheck {
            requires: Requirements {
                constant_scalar: true,
                ..req(false, 3, &[])
            },
            ..check(
                "div_cotton_formula_const_s",
                "div C = -D*Dz - n/(n-2) z.z - s/(n-1) z + ringW(z) + |z|^2/(n-2) g",
                req(false, 3, &[]),
                4,
                div_cotton_formula_const_s,
            )
        },
        check(
            "div2_cotton",
            "div^2 C(X) = <i~_X W, C>/2 - <i_X C, z>/(n-2)",
            req(false, 3, &[]),
            5,
            div2_cotton,
        ),
        check("div4w_cotton", "div^4 W = (n-3)/(n-2) div^3 C", req(false, 4, &[]), 6, div4w_cotton),
        check("static_fC", "f C = i~_{grad f} W - (n-1) T", req(true, 3, VACUUM), 3, static_fc),
        check(
            "div2C_gradf",
            "div^2 C(grad f) = f |C|^2/2 + <i_{grad f} C, z>",
            req(true, 3, VACUUM),
            5,
            div2c_gradf,
        ),
        check(
            "div_tilde_W",
            "div(i~_{grad f} W) = (n-3)/(n-2) hatC - f ringW(z)",
            req(true, 3, VACUUM),
            3,
            div_tilde_w,
        ),
        check("T_norm_inner", "|T|^2 = 2/(n-2) <i_{grad f} T, z>", req(true, 3, &[]), 2, t_norm_inner),
        IdentityCheck {
            filtered: true,
            ..check(
                "T_norm_frame",
                "|T|^2 = 2/(n-2)^2 |grad f|^2 (|z|^2 - n/(n-1) |i_N z|^2)",
                req(true, 3, &[]),
                2,
                t_norm_frame,
            )
        },
        check(
            "fT_grad_pointwise",
            "div(fT)(grad f, grad f) = div(fT(., grad f, grad f)) + (n-2)/2 f^2 |T|^2 and f^2 B(grad f, grad f) = -(n-1)/(n-2) div(fT)(grad f, grad f)",
            req(true, 4, VACUUM),
            4,
            ft_grad_pointwise,
        ),
        check(
            "fB_formula",
            "(n-2) f B = -i_{grad f} C + (n-3)/(n-2) hatC - (n-1) div T",
            req(true, 4, VACUUM),
            4,
            fb_formula,
        ),
        check(
            "div2_T",
            "div^2 T(X) = f <i_X C, z>/(n-2) + <i_X T, z>",
            req(true, 3, VACUUM),
            4,
            div2_t,
        ),
        check(
            "div_T_direct",
            "(n-1)(n-2) div T = -(n-2)/(n-1) s f z + (n-2) D_{grad f} z - hatC - n f z.z + f |z|^2 g",
            req(true, 3, VACUUM),
            3,
            div_t_direct,
        ),
        check(
            "div_T_weyl",
            "(n-1)(n-2) div T = -(n-2) f D*Dz - n f z.z - (n-2)/(n-1) s f z + f |z|^2 g + (n-3) hatC - (n-2) i_{grad f} C - 2(n-2) f div C",
            req(true, 3, VACUUM),
            4,
            div_t_weyl,
        ),
        check(
            "ddz_identity",
            "f D*Dz + D_{grad f} z = hatC - i_{grad f} C - 2 f div C",
            req(true, 3, VACUUM),
            4,
            ddz_identity,
        ),
        check(
            "div3_T",
            "div^3 T = 2(n-2)/(n-4) div B(grad f) + (n-2)/(n-4) f div^2 B + <div T, z>",
            req(true, 5, VACUUM),
            6,
            div3_t,
        ),
        check("besse_fC", "(1+f) C = i~_{grad f} W - (n-1) T", req(true, 3, BESSE), 3, besse_fc),
        check(
            "besse_div2C",
            "div^2 C(grad f) = (1+f) |C|^2/2 + <i_{grad f} C, z>",
            req(true, 3, BESSE),
            5,
            besse_div2c,
        ),
        check("T_cotton_inner", "<T, C> = 2/(n-2) <i_{grad f} C, z>", req(true, 3, &[]), 3, t_cotton_inner),
        check(
            "symmetry_suite",
            "Riemann and Weyl symmetries, Weyl traces, Cotton traces and cyclic sum, Bach symmetry and trace, T traces",
            req(false, 2, &[]),
            4,
            symmetry_suite,
        ),
        IdentityCheck {
            control: true,
            tolerance: 1e-9,
            ..check("vacuum_static_eq", "Ddf = (r - s/(n-1) g) f", req(true, 2, VACUUM), 2, vacuum_static_eq)
        },
        IdentityCheck {
            control: true,
            ..check("eigen_eq", "Laplacian f = -s f/(n-1)", req(true, 2, VACUUM), 2, eigen_eq)
        },
        IdentityCheck {
            control: true,
            ..check(
                "static_vacuum_eq",
                "h r = Ddh, Laplacian h = 0, s = 0",
                req(true, 2, STATIC_VACUUM),
                2,
                static_vacuum_eq,
            )
        },
        check(
            "h_weakly_harmonic",
            "d^D r(grad h, ., grad h) = 0",
            req(true, 2, STATIC_VACUUM),
            3,
            h_weakly_harmonic,
        ),
        IdentityCheck {
            control: true,
            ..check("besse_eq", "s'*(f) = Ddf - (Laplacian f) g - f r = z", req(true, 2, BESSE), 2, besse_eq)
        },
        IdentityCheck {
            witness_min: Some(1e-3),
            ..check(
                "bach_nonflat_divfree",
                "max |B| > 1e-3 while div B, div^2 B, div^3 C, div^4 W vanish",
                req(false, 4, PRODUCT),
                6,
                bach_nonflat_divfree,
            )
        },
    ];
    v.sort_by_key(|c| c.id);
    v
}
