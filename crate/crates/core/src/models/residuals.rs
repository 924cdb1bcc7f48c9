use crate::curvature::PointContext;
use crate::error::Result;
use crate::jet::Jet;
use crate::static_tensors::s_star_adjoint;
use crate::tensor::Tensor;

/// `Ddf − (r − (s/(n−1)) g) f`.
pub fn vacuum_static_residual(ctx: &PointContext) -> Result<Tensor<Jet>> {
    let f = ctx.potential()?;
    let n = ctx.dim() as f64;
    let s = ctx.scalar()?;
    let sg = ctx.metric().g.times(&s);
    let bracket = ctx.ricci()?.axpy(-1.0 / (n - 1.0), &sg)?;
    ctx.hessian()?.sub(&bracket.times(f))
}

/// `Δf + (s/(n−1)) f`.
pub fn eigen_residual(ctx: &PointContext) -> Result<Jet> {
    let f = ctx.potential()?;
    let n = ctx.dim() as f64;
    let mut out = ctx.laplacian()?;
    out.add_scaled(1.0 / (n - 1.0), &ctx.scalar()?.mul_jet(f));
    Ok(out)
}

/// `(h r − Ddh, Δh)`.
pub fn static_vacuum_residual(ctx: &PointContext) -> Result<(Tensor<Jet>, Jet)> {
    let h = ctx.potential()?;
    let t = ctx.ricci()?.times(h).sub(&*ctx.hessian()?)?;
    Ok((t, ctx.laplacian()?))
}

/// `s′*(f) − z`.
pub fn besse_residual(ctx: &PointContext) -> Result<Tensor<Jet>> {
    s_star_adjoint(ctx)?.sub(&*ctx.traceless_ricci()?)
}
