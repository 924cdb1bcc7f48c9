//! Finite-difference reference geometry, built only from metric expression values.

#![allow(dead_code)]

use curvcheck::expr::eval_scalar_with;
use curvcheck::models::MetricSpec;

pub const STEP: f64 = 1e-2;

/// Flat row-major index helpers.
pub fn ix2(n: usize, a: usize, b: usize) -> usize {
    a * n + b
}
pub fn ix3(n: usize, a: usize, b: usize, c: usize) -> usize {
    (a * n + b) * n + c
}
pub fn ix4(n: usize, a: usize, b: usize, c: usize, d: usize) -> usize {
    ((a * n + b) * n + c) * n + d
}

pub fn metric(spec: &MetricSpec, x: &[f64]) -> Vec<f64> {
    let n = spec.dim();
    let mut g = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            g[ix2(n, i, j)] = eval_scalar_with(spec.component(i, j), x, &spec.params).unwrap();
        }
    }
    g
}

/// Gauss–Jordan inverse.
pub fn inverse(a: &[f64], n: usize) -> Vec<f64> {
    let mut m = a.to_vec();
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[ix2(n, i, i)] = 1.0;
    }
    for c in 0..n {
        let p = (c..n).max_by(|&x, &y| m[ix2(n, x, c)].abs().total_cmp(&m[ix2(n, y, c)].abs())).unwrap();
        for k in 0..n {
            m.swap(ix2(n, c, k), ix2(n, p, k));
            inv.swap(ix2(n, c, k), ix2(n, p, k));
        }
        let d = m[ix2(n, c, c)];
        for k in 0..n {
            m[ix2(n, c, k)] /= d;
            inv[ix2(n, c, k)] /= d;
        }
        for r in 0..n {
            if r != c {
                let f = m[ix2(n, r, c)];
                for k in 0..n {
                    m[ix2(n, r, k)] -= f * m[ix2(n, c, k)];
                    inv[ix2(n, r, k)] -= f * inv[ix2(n, c, k)];
                }
            }
        }
    }
    inv
}

/// Richardson-extrapolated central difference of a vector-valued map along every axis:
/// `out[k * len + c] = ∂_k F_c`.
pub fn gradient(x: &[f64], h: f64, f: &dyn Fn(&[f64]) -> Vec<f64>) -> Vec<f64> {
    let n = x.len();
    let central = |k: usize, h: f64| {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[k] += h;
        xm[k] -= h;
        let (p, m) = (f(&xp), f(&xm));
        p.iter().zip(&m).map(|(a, b)| (a - b) / (2.0 * h)).collect::<Vec<f64>>()
    };
    let mut out = Vec::new();
    for k in 0..n {
        let coarse = central(k, h);
        let fine = central(k, h / 2.0);
        out.extend(fine.iter().zip(&coarse).map(|(f, c)| (4.0 * f - c) / 3.0));
    }
    out
}

/// `Γ^k_{ij}` stored at `ix3(k, i, j)`.
pub fn christoffel(spec: &MetricSpec, x: &[f64]) -> Vec<f64> {
    let n = spec.dim();
    let g = metric(spec, x);
    let gi = inverse(&g, n);
    let dg = gradient(x, STEP, &|y| metric(spec, y));
    let d = |k: usize, i: usize, j: usize| dg[k * n * n + ix2(n, i, j)];
    let mut out = vec![0.0; n * n * n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                out[ix3(n, k, i, j)] = 0.5
                    * (0..n)
                        .map(|m| gi[ix2(n, k, m)] * (d(i, j, m) + d(j, i, m) - d(m, i, j)))
                        .sum::<f64>();
            }
        }
    }
    out
}

/// `R(i,j,k,l) = g_{km} (∂_iΓ^m_{jl} − ∂_jΓ^m_{il} + Γ^m_{ip}Γ^p_{jl} − Γ^m_{jp}Γ^p_{il})`.
pub fn riemann(spec: &MetricSpec, x: &[f64]) -> Vec<f64> {
    let n = spec.dim();
    let g = metric(spec, x);
    let gam = christoffel(spec, x);
    let dgam = gradient(x, STEP, &|y| christoffel(spec, y));
    let d = |a: usize, m: usize, i: usize, j: usize| dgam[a * n * n * n + ix3(n, m, i, j)];
    let c = |m: usize, i: usize, j: usize| gam[ix3(n, m, i, j)];
    let mut rup = vec![0.0; n * n * n * n];
    for m in 0..n {
        for l in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut v = d(i, m, j, l) - d(j, m, i, l);
                    for p in 0..n {
                        v += c(m, i, p) * c(p, j, l) - c(m, j, p) * c(p, i, l);
                    }
                    rup[ix4(n, m, l, i, j)] = v;
                }
            }
        }
    }
    let mut out = vec![0.0; n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    out[ix4(n, i, j, k, l)] = (0..n).map(|m| g[ix2(n, k, m)] * rup[ix4(n, m, l, i, j)]).sum();
                }
            }
        }
    }
    out
}

/// Weyl tensor from the curvature decomposition, written out componentwise.
pub fn weyl(spec: &MetricSpec, x: &[f64]) -> Vec<f64> {
    let n = spec.dim();
    let nf = n as f64;
    let g = metric(spec, x);
    let gi = inverse(&g, n);
    let r = riemann(spec, x);
    let mut ric = vec![0.0; n * n];
    for j in 0..n {
        for l in 0..n {
            let mut v = 0.0;
            for i in 0..n {
                for k in 0..n {
                    v += gi[ix2(n, i, k)] * r[ix4(n, i, j, k, l)];
                }
            }
            ric[ix2(n, j, l)] = v;
        }
    }
    let s: f64 = (0..n * n).map(|a| gi[a] * ric[a]).sum();
    // Schouten tensor P = (ric − s/(2(n−1)) g)/(n−2); R = W + P∧g
    let p: Vec<f64> = (0..n * n).map(|a| (ric[a] - s / (2.0 * (nf - 1.0)) * g[a]) / (nf - 2.0)).collect();
    let mut w = vec![0.0; n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let kn = p[ix2(n, i, k)] * g[ix2(n, j, l)] + p[ix2(n, j, l)] * g[ix2(n, i, k)]
                        - p[ix2(n, i, l)] * g[ix2(n, j, k)]
                        - p[ix2(n, j, k)] * g[ix2(n, i, l)];
                    w[ix4(n, i, j, k, l)] = r[ix4(n, i, j, k, l)] - kn;
                }
            }
        }
    }
    w
}

/// `div W(j,k,l) = g^{ia} (∇_a W)(i,j,k,l)`.
pub fn div_weyl(spec: &MetricSpec, x: &[f64]) -> Vec<f64> {
    let n = spec.dim();
    let gi = inverse(&metric(spec, x), n);
    let gam = christoffel(spec, x);
    let w = weyl(spec, x);
    let dw = gradient(x, STEP, &|y| weyl(spec, y));
    let c = |m: usize, i: usize, j: usize| gam[ix3(n, m, i, j)];
    let n4 = n * n * n * n;
    let mut out = vec![0.0; n * n * n];
    for j in 0..n {
        for k in 0..n {
            for l in 0..n {
                let mut v = 0.0;
                for i in 0..n {
                    for a in 0..n {
                        let mut nab = dw[a * n4 + ix4(n, i, j, k, l)];
                        for m in 0..n {
                            nab -= c(m, a, i) * w[ix4(n, m, j, k, l)]
                                + c(m, a, j) * w[ix4(n, i, m, k, l)]
                                + c(m, a, k) * w[ix4(n, i, j, m, l)]
                                + c(m, a, l) * w[ix4(n, i, j, k, m)];
                        }
                        v += gi[ix2(n, i, a)] * nab;
                    }
                }
                out[ix3(n, j, k, l)] = v;
            }
        }
    }
    out
}

/// `max|a − b| / max|b|`.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
    let scale = b.iter().fold(0.0_f64, |m, y| m.max(y.abs()));
    diff / scale
}

/// Uniform points in the domain box shrunk by 10% per side.
pub fn random_points(spec: &MetricSpec, count: usize, seed: u64) -> Vec<Vec<f64>> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            spec.domain
                .iter()
                .map(|(lo, hi)| lo + (0.1 + 0.8 * rng.random::<f64>()) * (hi - lo))
                .collect()
        })
        .collect()
}

/// `max|a − b| / max(max|b|, floor)`, for tensors that may vanish.
pub fn rel_err_floor(a: &[f64], b: &[f64], floor: f64) -> f64 {
    let diff = a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
    let scale = b.iter().fold(0.0_f64, |m, y| m.max(y.abs()));
    diff / scale.max(floor)
}
