//! Closed-form manifolds with potentials. Each entry is generated as spec-file text and parsed,
//! so everything here is expressible in the file format.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{parse_spec, MetricSpec};
use crate::error::{Error, Result};
use crate::expr::Bindings;

/// Where an expected value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValueSource {
    /// Published closed-form value for this construction.
    Published,
    /// Standard closed form (e.g. constant curvature).
    ClosedForm,
    /// Forced by structure (conformal flatness, flatness).
    Structural,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    /// Component in the Gram–Schmidt orthonormal frame of the coordinate basis.
    Frame(Vec<usize>),
    /// Largest absolute coordinate component.
    MaxAbs,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Expected {
    pub quantity: &'static str,
    pub target: Target,
    pub value: f64,
    pub source: ValueSource,
}

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub spec: MetricSpec,
    pub expected: Vec<Expected>,
    /// Relative tolerance for the expected values.
    pub tolerance: f64,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CatalogInfo {
    pub name: &'static str,
    pub params: Vec<(&'static str, f64)>,
    pub description: &'static str,
}

pub fn catalog_info() -> Vec<CatalogInfo> {
    vec![
        CatalogInfo {
            name: "flat_torus",
            params: vec![("n", 4.0)],
            description: "flat metric on a coordinate box of the n-torus, constant potential",
        },
        CatalogInfo {
            name: "round_sphere",
            params: vec![("n", 4.0), ("kappa", 1.0)],
            description: "stereographic chart of S^n with curvature kappa, height-function potential",
        },
        CatalogInfo {
            name: "hyperbolic",
            params: vec![("n", 4.0), ("kappa", -1.0)],
            description: "Poincare ball with curvature kappa < 0, potential cosh of the distance to the center",
        },
        CatalogInfo {
            name: "product_spheres_2n",
            params: vec![("n", 2.0), ("a", 1.0)],
            description: "S^n(2a/(3n^2)) x S^n(2a/(3n(n-1))), potential the first harmonic on the first factor",
        },
        CatalogInfo {
            name: "product_spheres_odd",
            params: vec![("n", 2.0)],
            description: "S^n(1) x S^(n+1)(1), potential the first harmonic on the first factor",
        },
        CatalogInfo {
            name: "schwarzschild",
            params: vec![("m", 1.0)],
            description: "spatial Schwarzschild slice outside the horizon with lapse h = sqrt(1-2m/rho)",
        },
        CatalogInfo {
            name: "conformal_perturbation",
            params: vec![("n", 5.0), ("seed", 7.0), ("eps", 0.1)],
            description: "generic metric e^(2 eps phi)(delta + eps S) with seeded polynomial phi and S",
        },
    ]
}

struct Params {
    entry: &'static str,
    values: Bindings,
}

impl Params {
    fn new(info: &CatalogInfo, overrides: &Bindings) -> Result<Self> {
        let mut values: Bindings = info.params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        for (k, v) in overrides {
            if !values.contains_key(k) {
                return Err(Error::InvalidParameter {
                    name: k.clone(),
                    msg: format!("{} accepts {:?}", info.name, info.params.iter().map(|p| p.0).collect::<Vec<_>>()),
                });
            }
            if !v.is_finite() {
                return Err(Error::InvalidParameter {
                    name: k.clone(),
                    msg: "must be finite".into(),
                });
            }
            values.insert(k.clone(), *v);
        }
        Ok(Params {
            entry: info.name,
            values,
        })
    }

    fn real(&self, k: &str) -> f64 {
        self.values[k]
    }

    fn int(&self, k: &str, lo: usize, hi: usize) -> Result<usize> {
        let v = self.values[k];
        if v.fract() != 0.0 || v < lo as f64 || v > hi as f64 {
            return Err(Error::InvalidParameter {
                name: k.into(),
                msg: format!("{} needs an integer in {lo}..={hi}, got {v}", self.entry),
            });
        }
        Ok(v as usize)
    }

    fn check(&self, k: &str, ok: bool, msg: &str) -> Result<()> {
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter {
                name: k.into(),
                msg: msg.into(),
            })
        }
    }
}

/// Spec-file text builder.
#[derive(Default)]
struct Text {
    name: String,
    coords: Vec<String>,
    params: Vec<(String, f64)>,
    metric: Vec<(usize, usize, String)>,
    potential: Option<(char, String)>,
    domain: Vec<(f64, f64)>,
    tags: Vec<&'static str>,
}

impl Text {
    fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[manifold]\nname = {}\ncoords = {}", self.name, self.coords.join(", "));
        if !self.params.is_empty() {
            s.push_str("[params]\n");
            for (k, v) in &self.params {
                let _ = writeln!(s, "{k} = {v:?}");
            }
        }
        s.push_str("[metric]\n");
        for (i, j, e) in &self.metric {
            let _ = writeln!(s, "g_{}_{} = {e}", i + 1, j + 1);
        }
        if let Some((sym, e)) = &self.potential {
            let _ = writeln!(s, "[potential]\n{sym} = {e}");
        }
        s.push_str("[domain]\n");
        for (c, (lo, hi)) in self.coords.iter().zip(&self.domain) {
            let _ = writeln!(s, "{c} = {lo:?}, {hi:?}");
        }
        let _ = writeln!(s, "[tags]\n{}", self.tags.join(", "));
        s
    }
}

fn names(prefix: &str, range: std::ops::Range<usize>) -> Vec<String> {
    range.map(|i| format!("{prefix}{}", i + 1)).collect()
}

fn sum_sq(coords: &[String]) -> String {
    coords.iter().map(|c| format!("{c}^2")).collect::<Vec<_>>().join("+")
}

/// Height function of the stereographic chart, `(1−|x|²)/(1+|x|²)`.
fn height(coords: &[String]) -> String {
    let r = sum_sq(coords);
    format!("(1-({r}))/(1+{r})")
}

/// Diagonal conformal block `factor` on the coordinates starting at `offset`.
fn diagonal(t: &mut Text, offset: usize, count: usize, factor: &str) {
    for i in offset..offset + count {
        t.metric.push((i, i, factor.to_string()));
    }
}

fn fmt_coeff(x: f64) -> String {
    format!("({x:?})")
}

/// Look up a catalog entry with parameter overrides.
pub fn catalog(name: &str, overrides: &Bindings) -> Result<CatalogEntry> {
    let info = catalog_info()
        .into_iter()
        .find(|i| i.name == name)
        .ok_or_else(|| Error::UnknownCatalog(name.to_string()))?;
    let p = Params::new(&info, overrides)?;
    let mut t = Text::default();
    let mut expected = Vec::new();
    let mut notes = Vec::new();
    let frame = |idx: &[usize]| Target::Frame(idx.to_vec());

    match name {
        "flat_torus" => {
            let n = p.int("n", 1, 8)?;
            t.name = format!("flat_torus(n={n})");
            t.coords = names("x", 0..n);
            diagonal(&mut t, 0, n, "1");
            t.potential = Some(('f', "1".into()));
            t.domain = vec![(0.0, 2.0 * PI); n];
            t.tags = vec!["einstein", "vacuum-static", "static-vacuum", "besse"];
            expected.push(Expected {
                quantity: "riemann",
                target: Target::MaxAbs,
                value: 0.0,
                source: ValueSource::Structural,
            });
        }
        "round_sphere" | "hyperbolic" => {
            let n = p.int("n", 2, 8)?;
            let kappa = p.real("kappa");
            let sphere = name == "round_sphere";
            if sphere {
                p.check("kappa", kappa > 0.0, "round_sphere needs kappa > 0 (use hyperbolic for kappa < 0)")?;
            } else {
                p.check("kappa", kappa < 0.0, "hyperbolic needs kappa < 0")?;
            }
            t.name = format!("{name}(n={n}, kappa={kappa})");
            t.coords = names("x", 0..n);
            t.params = vec![("kappa".into(), kappa)];
            let r = sum_sq(&t.coords);
            if sphere {
                diagonal(&mut t, 0, n, &format!("4/(kappa*(1+{r})^2)"));
                t.potential = Some(('f', height(&t.coords)));
                t.domain = vec![(-1.0, 1.0); n];
            } else {
                diagonal(&mut t, 0, n, &format!("4/((-kappa)*(1-({r}))^2)"));
                t.potential = Some(('f', format!("(1+{r})/(1-({r}))")));
                let w = 0.8 / (n as f64).sqrt();
                t.domain = vec![(-w, w); n];
            }
            t.tags = vec!["einstein", "vacuum-static", "besse"];
            let nf = n as f64;
            expected.push(Expected {
                quantity: "scalar",
                target: frame(&[]),
                value: nf * (nf - 1.0) * kappa,
                source: ValueSource::ClosedForm,
            });
            expected.push(Expected {
                quantity: "ricci",
                target: frame(&[0, 0]),
                value: (nf - 1.0) * kappa,
                source: ValueSource::ClosedForm,
            });
            expected.push(Expected {
                quantity: "riemann",
                target: frame(&[0, 1, 0, 1]),
                value: kappa,
                source: ValueSource::ClosedForm,
            });
            for q in ["z", "cotton"] {
                expected.push(Expected {
                    quantity: q,
                    target: Target::MaxAbs,
                    value: 0.0,
                    source: ValueSource::Structural,
                });
            }
            if n >= 4 {
                for q in ["weyl", "bach", "T"] {
                    expected.push(Expected {
                        quantity: q,
                        target: Target::MaxAbs,
                        value: 0.0,
                        source: ValueSource::Structural,
                    });
                }
            }
        }
        "product_spheres_2n" => {
            let n = p.int("n", 2, 4)?;
            let a = p.real("a");
            p.check("a", a > 0.0, "product_spheres_2n needs a > 0")?;
            t.name = format!("product_spheres_2n(n={n}, a={a})");
            let x = names("x", 0..n);
            let y = names("y", 0..n);
            t.coords = x.iter().chain(&y).cloned().collect();
            t.params = vec![("a".into(), a)];
            let nn = n * n;
            // curvatures 2a/(3n²) and 2a/(3n(n−1))
            diagonal(&mut t, 0, n, &format!("4*{}/(2*a*(1+{})^2)", 3 * nn, sum_sq(&x)));
            diagonal(&mut t, n, n, &format!("4*{}/(2*a*(1+{})^2)", 3 * n * (n - 1), sum_sq(&y)));
            t.potential = Some(('f', height(&x)));
            t.domain = vec![(-1.0, 1.0); 2 * n];
            t.tags = vec!["product", "vacuum-static"];
            notes.push("potential normalized to sup |f| = 1 (first spherical harmonic of the first factor)".into());

            let nf = n as f64;
            let src = ValueSource::Published;
            expected.push(Expected {
                quantity: "scalar",
                target: frame(&[]),
                value: 2.0 * (2.0 * nf - 1.0) * a / (3.0 * nf),
                source: src,
            });
            for i in 0..2 * n {
                let v = if i < n {
                    2.0 * (nf - 1.0) * a / (3.0 * nf * nf)
                } else {
                    2.0 * a / (3.0 * nf)
                };
                expected.push(Expected {
                    quantity: "ricci",
                    target: frame(&[i, i]),
                    value: v,
                    source: src,
                });
            }
            expected.push(Expected {
                quantity: "weyl",
                target: frame(&[0, 1, 0, 1]),
                value: a / (3.0 * nf * (nf - 1.0)),
                source: src,
            });
            expected.push(Expected {
                quantity: "weyl",
                target: frame(&[0, n, 0, n]),
                value: -a / (3.0 * nf * nf),
                source: src,
            });
            let ring = -2.0 * a * a / (9.0 * nf.powi(3));
            expected.push(Expected {
                quantity: "ringWr",
                target: frame(&[0, 0]),
                value: ring,
                source: src,
            });
            expected.push(Expected {
                quantity: "bach",
                target: frame(&[0, 0]),
                value: ring / (2.0 * (nf - 1.0)),
                source: src,
            });
            expected.push(Expected {
                quantity: "cotton",
                target: Target::MaxAbs,
                value: 0.0,
                source: src,
            });
        }
        "product_spheres_odd" => {
            let n = p.int("n", 2, 3)?;
            t.name = format!("product_spheres_odd(n={n})");
            let x = names("x", 0..n);
            let y = names("y", 0..n + 1);
            t.coords = x.iter().chain(&y).cloned().collect();
            diagonal(&mut t, 0, n, &format!("4/(1+{})^2", sum_sq(&x)));
            diagonal(&mut t, n, n + 1, &format!("4/(1+{})^2", sum_sq(&y)));
            t.potential = Some(('f', height(&x)));
            t.domain = vec![(-1.0, 1.0); 2 * n + 1];
            t.tags = vec!["product", "vacuum-static"];
            notes.push("potential normalized to sup |f| = 1 (first spherical harmonic of the first factor)".into());

            let nf = n as f64;
            let src = ValueSource::Published;
            expected.push(Expected {
                quantity: "scalar",
                target: frame(&[]),
                value: 2.0 * nf * nf,
                source: src,
            });
            expected.push(Expected {
                quantity: "weyl",
                target: frame(&[0, 1, 0, 1]),
                value: (nf + 1.0) / (2.0 * nf - 1.0),
                source: src,
            });
            expected.push(Expected {
                quantity: "weyl",
                target: frame(&[0, n, 0, n]),
                value: -(nf - 1.0) / (2.0 * nf - 1.0),
                source: ValueSource::ClosedForm,
            });
            let ring = -(nf * nf - 1.0) / (2.0 * nf - 1.0);
            expected.push(Expected {
                quantity: "ringWr",
                target: frame(&[0, 0]),
                value: ring,
                source: src,
            });
            expected.push(Expected {
                quantity: "bach",
                target: frame(&[0, 0]),
                value: ring / (2.0 * nf - 1.0),
                source: src,
            });
            expected.push(Expected {
                quantity: "cotton",
                target: Target::MaxAbs,
                value: 0.0,
                source: src,
            });
        }
        "schwarzschild" => {
            let m = p.real("m");
            p.check("m", m > 0.0, "schwarzschild needs m > 0")?;
            t.name = format!("schwarzschild(m={m})");
            t.coords = vec!["rho".into(), "theta".into(), "phi".into()];
            t.params = vec![("m".into(), m)];
            t.metric = vec![
                (0, 0, "1/(1-2*m/rho)".into()),
                (1, 1, "rho^2".into()),
                (2, 2, "rho^2*sin(theta)^2".into()),
            ];
            t.potential = Some(('h', "sqrt(1-2*m/rho)".into()));
            t.domain = vec![(2.5 * m, 10.0 * m), (0.3, PI - 0.3), (0.0, 2.0 * PI)];
            t.tags = vec!["static-vacuum"];
            expected.push(Expected {
                quantity: "scalar",
                target: frame(&[]),
                value: 0.0,
                source: ValueSource::ClosedForm,
            });
            expected.push(Expected {
                quantity: "cotton",
                target: Target::MaxAbs,
                value: 0.0,
                source: ValueSource::Structural,
            });
        }
        "conformal_perturbation" => {
            let n = p.int("n", 4, 8)?;
            let seed = p.int("seed", 0, u32::MAX as usize)?;
            let eps = p.real("eps");
            p.check("eps", eps > 0.0 && eps <= 0.1, "conformal_perturbation needs 0 < eps <= 0.1")?;
            t.name = format!("conformal_perturbation(n={n}, seed={seed}, eps={eps})");
            t.coords = names("x", 0..n);
            t.params = vec![("eps".into(), eps)];
            let mut rng = ChaCha8Rng::seed_from_u64(seed as u64);
            let mut coeff = |scale: f64| -> f64 { (rng.random_range(-1.0..1.0) * scale * 1000.0).round() / 1000.0 };
            let c = &t.coords;
            let mut phi = Vec::new();
            for i in 0..n {
                phi.push(format!("{}*{}", fmt_coeff(coeff(1.0)), c[i]));
                for j in i..n {
                    phi.push(format!("{}*{}*{}", fmt_coeff(coeff(1.0)), c[i], c[j]));
                }
                let (j, k) = ((i + 1) % n, (i + 2) % n);
                phi.push(format!("{}*{}*{}*{}", fmt_coeff(coeff(1.0)), c[i], c[j], c[k]));
            }
            let phi = phi.join("+");
            let mut entries = Vec::new();
            for i in 0..n {
                for j in 0..=i {
                    let mut s = vec![fmt_coeff(coeff(0.5))];
                    for k in 0..n {
                        s.push(format!("{}*{}", fmt_coeff(coeff(0.5)), c[k]));
                    }
                    s.push(format!("{}*{}*{}", fmt_coeff(coeff(0.5)), c[(i + j) % n], c[(i + 2 * j + 1) % n]));
                    let base = if i == j { "1+" } else { "" };
                    entries.push((i, j, format!("exp(2*eps*({phi}))*({base}eps*({}))", s.join("+"))));
                }
            }
            t.metric = entries;
            t.domain = vec![(-0.5, 0.5); n];
            t.tags = vec!["generic"];
            notes.push("conformal factor times a non-flat symmetric perturbation, so the Weyl tensor is nonzero".into());
        }
        _ => unreachable!(),
    }
    let spec = parse_spec(&t.render())?;
    Ok(CatalogEntry {
        spec,
        expected,
        tolerance: 1e-8,
        notes,
    })
}
