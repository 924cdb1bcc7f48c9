//! Tensors addressable by name, shared by expected-value tables and the command line.

use crate::curvature::PointContext;
use crate::error::{Error, Result};
use crate::models::{besse_residual, eigen_residual, static_vacuum_residual, vacuum_static_residual};
use crate::static_tensors as st;
use crate::tensor::{Tensor, TensorValue};

/// `(name, jet order needed, description)`.
pub const QUANTITIES: &[(&str, usize, &str)] = &[
    ("g", 2, "metric"),
    ("riemann", 2, "curvature tensor R(X,Y,Z,V)"),
    ("ricci", 2, "Ricci tensor r"),
    ("scalar", 2, "scalar curvature s"),
    ("z", 2, "traceless Ricci tensor"),
    ("weyl", 2, "Weyl tensor"),
    ("cotton", 3, "Cotton tensor"),
    ("bach", 4, "Bach tensor (Weyl route)"),
    ("bach_cotton", 4, "Bach tensor (Cotton route)"),
    ("T", 2, "tensor T built from df and z"),
    ("hatC", 3, "C(Y, grad f, X)"),
    ("ringWz", 2, "Weyl tensor contracted with z"),
    ("ringWr", 2, "Weyl tensor contracted with r"),
    ("divB", 5, "divergence of the Bach tensor"),
    ("div2B", 6, "double divergence of the Bach tensor"),
    ("div3C", 6, "triple divergence of the Cotton tensor"),
    ("div4W", 6, "fourfold divergence of the Weyl tensor"),
    ("static_residual", 2, "Ddf - (r - s/(n-1) g) f"),
    ("eigen_residual", 2, "Laplacian f + s f/(n-1)"),
    ("static_vacuum_residual", 2, "h r - Ddh"),
    ("besse_residual", 2, "s'*(f) - z"),
];

pub fn quantity_order(name: &str) -> Result<usize> {
    QUANTITIES
        .iter()
        .find(|q| q.0 == name)
        .map(|q| q.1)
        .ok_or_else(|| Error::UnknownTensor(name.to_string()))
}

/// Coordinate components of the named tensor at the context's point.
pub fn named_tensor(ctx: &PointContext, name: &str) -> Result<TensorValue> {
    let t = match name {
        "g" => ctx.metric().g.values(),
        "riemann" => ctx.riemann()?.values(),
        "ricci" => ctx.ricci()?.values(),
        "scalar" => Tensor::scalar(ctx.scalar()?.value()),
        "z" => ctx.traceless_ricci()?.values(),
        "weyl" => ctx.weyl()?.values(),
        "cotton" => st::cotton(ctx)?.values(),
        "bach" => st::bach(ctx)?.values(),
        "bach_cotton" => st::bach_via_cotton(ctx)?.values(),
        "T" => st::tensor_t(ctx)?.values(),
        "hatC" => st::hat_c(ctx)?.values(),
        "ringWz" => st::ring_weyl_z(ctx)?.values(),
        "ringWr" => st::ring_weyl_ricci(ctx)?.values(),
        "divB" => st::div_bach(ctx)?.values(),
        "div2B" => st::div2_bach(ctx)?.values(),
        "div3C" => st::div3_cotton(ctx)?.values(),
        "div4W" => st::div4_weyl_iterated(ctx)?.values(),
        "static_residual" => vacuum_static_residual(ctx)?.values(),
        "eigen_residual" => Tensor::scalar(eigen_residual(ctx)?.value()),
        "static_vacuum_residual" => static_vacuum_residual(ctx)?.0.values(),
        "besse_residual" => besse_residual(ctx)?.values(),
        other => return Err(Error::UnknownTensor(other.to_string())),
    };
    Ok(t)
}
