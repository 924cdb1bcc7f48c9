//! Metric specifications, the built-in catalog, and residuals of the static equations.

mod catalog;
mod residuals;
mod spec_file;

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::curvature::PointContext;
use crate::error::{Error, Result};
use crate::expr::{parse_with_params, Bindings, ExprNode};
use crate::jet::{eval_jet, Jet};

pub use catalog::{catalog, catalog_info, CatalogEntry, CatalogInfo, Expected, Target, ValueSource};
pub use residuals::{besse_residual, eigen_residual, static_vacuum_residual, vacuum_static_residual};
pub use spec_file::parse_spec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tag {
    Einstein,
    Product,
    VacuumStatic,
    StaticVacuum,
    Besse,
    Generic,
}

impl Tag {
    pub const ALL: [Tag; 6] = [
        Tag::Einstein,
        Tag::Product,
        Tag::VacuumStatic,
        Tag::StaticVacuum,
        Tag::Besse,
        Tag::Generic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Tag::Einstein => "einstein",
            Tag::Product => "product",
            Tag::VacuumStatic => "vacuum-static",
            Tag::StaticVacuum => "static-vacuum",
            Tag::Besse => "besse",
            Tag::Generic => "generic",
        }
    }

    pub fn from_name(s: &str) -> Option<Tag> {
        Tag::ALL.into_iter().find(|t| t.name() == s)
    }

    /// Tags whose defining equation involves the potential.
    pub fn needs_potential(self) -> bool {
        matches!(self, Tag::VacuumStatic | Tag::StaticVacuum | Tag::Besse)
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    /// Display name, `f` or `h`.
    pub symbol: String,
    pub expr: ExprNode,
}

/// A metric on a coordinate box, with optional potential and structural tags.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSpec {
    pub name: String,
    pub coords: Vec<String>,
    pub params: Bindings,
    /// Row-major `n×n`, symmetric.
    pub metric: Vec<ExprNode>,
    pub potential: Option<Potential>,
    /// Open interval per coordinate.
    pub domain: Vec<(f64, f64)>,
    pub tags: BTreeSet<Tag>,
}

impl MetricSpec {
    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn has_tag(&self, t: Tag) -> bool {
        self.tags.contains(&t)
    }

    pub fn has_potential(&self) -> bool {
        self.potential.is_some()
    }

    pub fn component(&self, i: usize, j: usize) -> &ExprNode {
        &self.metric[i * self.dim() + j]
    }

    fn coord_refs(&self) -> Vec<&str> {
        self.coords.iter().map(String::as_str).collect()
    }

    pub fn center(&self) -> Vec<f64> {
        self.domain.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect()
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.dim() && point.iter().zip(&self.domain).all(|(x, (lo, hi))| lo < x && x < hi)
    }

    /// Override parameter values; every name must already be declared.
    pub fn with_params(mut self, overrides: &Bindings) -> Result<Self> {
        for (k, v) in overrides {
            match self.params.get_mut(k) {
                Some(slot) => *slot = *v,
                None => {
                    return Err(Error::InvalidParameter {
                        name: k.clone(),
                        msg: format!("not declared by {}", self.name),
                    })
                }
            }
        }
        Ok(self)
    }

    /// Replace the potential by an expression in the spec's coordinates and parameters.
    pub fn with_potential(mut self, symbol: &str, text: &str) -> Result<Self> {
        let params: Vec<&str> = self.params.keys().map(String::as_str).collect();
        let expr = parse_with_params(text, &self.coord_refs(), &params)?;
        self.potential = Some(Potential {
            symbol: symbol.to_string(),
            expr,
        });
        Ok(self)
    }

    pub fn without_tags(mut self) -> Self {
        self.tags.clear();
        self.tags.insert(Tag::Generic);
        self
    }

    /// Structural checks: potential present where tags need it, positive definite at the
    /// center of the domain.
    pub fn validate(&self) -> Result<()> {
        if let Some(t) = self.tags.iter().find(|t| t.needs_potential()) {
            if self.potential.is_none() {
                return Err(Error::SpecFormat {
                    line: 0,
                    msg: format!("tag {t} requires a [potential] section"),
                });
            }
        }
        self.context(&self.center(), 2).map(|_| ())
    }

    /// Metric and potential jets at `point`, truncated at `order`.
    pub fn context(&self, point: &[f64], order: usize) -> Result<PointContext> {
        let n = self.dim();
        if point.len() != n {
            return Err(Error::DimensionMismatch(point.len(), n));
        }
        if !self.contains(point) {
            return Err(Error::PointOutsideDomain { point: point.to_vec() });
        }
        let mut g: Vec<Option<Jet>> = vec![None; n * n];
        for i in 0..n {
            for j in i..n {
                let jet = eval_jet(self.component(i, j), point, order, &self.params)?;
                g[j * n + i] = Some(jet.clone());
                g[i * n + j] = Some(jet);
            }
        }
        let pot = match &self.potential {
            Some(p) => Some(eval_jet(&p.expr, point, order, &self.params)?),
            None => None,
        };
        PointContext::from_jets(point, order, g.into_iter().map(Option::unwrap).collect(), pot)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_must_be_declared() {
        let e = catalog("round_sphere", &Bindings::new()).unwrap();
        let mut b = Bindings::new();
        b.insert("bogus".into(), 1.0);
        assert!(matches!(e.spec.clone().with_params(&b), Err(Error::InvalidParameter { .. })));
    }

    #[test]
    fn points_outside_domain_rejected() {
        let e = catalog("schwarzschild", &Bindings::new()).unwrap();
        assert!(matches!(
            e.spec.context(&[2.1, 1.0, 1.0], 2),
            Err(Error::PointOutsideDomain { .. })
        ));
    }
}
