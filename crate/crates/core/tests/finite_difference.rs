mod common;

use curvcheck::expr::Bindings;
use curvcheck::models::catalog;

use common::{random_points, rel_err_floor};

// errors relative to max(max|oracle|, 1)
const TOL: f64 = 1e-4;

fn check_entry(name: &str, count: usize) {
    let spec = catalog(name, &Bindings::new()).unwrap().spec;
    for x in random_points(&spec, count, 11) {
        let ctx = spec.context(&x, 4).unwrap();
        let gam = ctx.christoffel().unwrap().values().into_components();
        let e = rel_err_floor(&gam, &common::christoffel(&spec, &x), 1.0);
        assert!(e < TOL, "{name} christoffel at {x:?}: {e:e}");
        let r = ctx.riemann().unwrap().values().into_components();
        let e = rel_err_floor(&r, &common::riemann(&spec, &x), 1.0);
        assert!(e < TOL, "{name} riemann at {x:?}: {e:e}");
        if spec.dim() >= 4 {
            let dw = ctx.divergence(&ctx.weyl().unwrap()).unwrap().values().into_components();
            let e = rel_err_floor(&dw, &common::div_weyl(&spec, &x), 1.0);
            assert!(e < TOL, "{name} div W at {x:?}: {e:e}");
        }
    }
}

#[test]
fn jets_match_finite_differences_on_perturbed_metric() {
    check_entry("conformal_perturbation", 3);
}

#[test]
fn jets_match_finite_differences_on_schwarzschild() {
    check_entry("schwarzschild", 3);
}

#[test]
fn jets_match_finite_differences_on_odd_product() {
    check_entry("product_spheres_odd", 2);
}
