use curvcheck::expr::Bindings;
use curvcheck::harness::{named_tensor, registry, run_check, run_suite, IdentityCheck, RunOptions, Sampler, Verdict};
use curvcheck::models::{catalog, parse_spec, MetricSpec};
use proptest::prelude::*;

fn spec(name: &str) -> MetricSpec {
    catalog(name, &Bindings::new()).unwrap().spec
}

fn with_params(name: &str, params: &[(&str, f64)]) -> MetricSpec {
    let b: Bindings = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    catalog(name, &b).unwrap().spec
}

fn find(id: &str) -> IdentityCheck {
    registry().into_iter().find(|c| c.id == id).unwrap()
}

fn opts(points: usize) -> RunOptions {
    RunOptions {
        points,
        ..RunOptions::default()
    }
}

#[test]
fn static_fc_holds_on_even_product() {
    let s = with_params("product_spheres_2n", &[("n", 2.0), ("a", 1.0)]);
    let r = run_check(&find("static_fC"), &s, &opts(30));
    assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
    assert!(r.max_rel_residual < 1e-8);
}

#[test]
fn div_bach_is_nonvacuous_on_perturbed_metric() {
    let r = run_check(&find("div_bach"), &spec("conformal_perturbation"), &opts(10));
    assert_eq!(r.verdict, Verdict::Pass);
    assert!(r.max_lhs > 1e-12 && r.max_rhs > 1e-12);
}

#[test]
fn inapplicable_checks_are_skipped_with_reasons() {
    let cp = spec("conformal_perturbation");
    let r = run_check(&find("div_cotton_formula_const_s"), &cp, &opts(5));
    assert_eq!(r.verdict, Verdict::Skipped);
    assert_eq!(r.reason.as_deref(), Some("requires constant scalar curvature"));
    assert_eq!(run_check(&find("static_fC"), &cp, &opts(5)).verdict, Verdict::Skipped);
    let r = run_check(&find("div3_T"), &spec("product_spheres_2n"), &opts(5));
    assert_eq!(r.verdict, Verdict::Skipped);
}

#[test]
fn sphere_curvature_tensors_vanish() {
    let s = with_params("round_sphere", &[("n", 4.0), ("kappa", 1.0)]);
    let report = run_suite(&s, &opts(10));
    assert!(report.success());
    let sampler = Sampler::new(&s, 0);
    for p in sampler.points(5) {
        let ctx = s.context(&p, 4).unwrap();
        for q in ["weyl", "cotton", "bach", "T"] {
            assert!(named_tensor(&ctx, q).unwrap().max_abs() < 1e-10, "{q}");
        }
    }
}

#[test]
fn wrong_sphere_potential_fails_loudly() {
    let s = spec("round_sphere").with_potential("f", "x1").unwrap();
    let r = run_check(&find("vacuum_static_eq"), &s, &opts(10));
    assert_eq!(r.verdict, Verdict::Fail);
    assert!(r.max_rel_residual > 1e-2);
}

#[test]
fn arbitrary_potential_on_perturbed_metric_is_not_static() {
    let s = spec("conformal_perturbation").with_potential("f", "1 + x2").unwrap();
    let ctx = s.context(&Sampler::new(&s, 0).point(0), 2).unwrap();
    assert!(named_tensor(&ctx, "static_residual").unwrap().max_abs() > 1e-4);
    assert!(named_tensor(&ctx, "besse_residual").unwrap().max_abs() > 1e-4);
}

#[test]
fn schwarzschild_suite_passes() {
    let report = run_suite(&spec("schwarzschild"), &opts(20));
    assert!(report.success());
    for id in ["static_vacuum_eq", "h_weakly_harmonic"] {
        assert_eq!(report.result(id).unwrap().verdict, Verdict::Pass, "{id}");
    }
}

#[test]
fn products_keep_bach_while_divergences_vanish() {
    let r = run_check(&find("bach_nonflat_divfree"), &spec("product_spheres_2n"), &opts(10));
    assert_eq!(r.verdict, Verdict::Pass);
    assert!(r.witness.unwrap() > 1e-3);
}

#[test]
fn negative_controls_are_reported() {
    let report = run_suite(&spec("round_sphere"), &opts(8));
    let ids: Vec<&str> = report.negative_controls.iter().map(|c| c.check.as_str()).collect();
    assert!(ids.contains(&"vacuum_static_eq") && ids.contains(&"eigen_eq"));
    assert!(report.negative_controls.iter().all(|c| c.failed_as_expected));
}

#[test]
fn too_many_skipped_points_fail() {
    // degenerate for x1 <= -0.3, about a third of the sample
    let text = "[manifold]\ndim = 3\n[metric]\ng_11 = x1 + 0.3\ng_22 = 1\ng_33 = 1\n";
    let s = parse_spec(text).unwrap();
    let r = run_check(&find("contracted_bianchi"), &s, &opts(20));
    assert_eq!(r.verdict, Verdict::Fail);
    assert!(r.points_skipped > 4);
    assert!(!r.skip_reasons.is_empty());
}

#[test]
fn reports_are_byte_identical() {
    let s = spec("product_spheres_2n");
    let o = RunOptions {
        points: 6,
        seed: 42,
        filter: Some("T_*,div_*".into()),
        ..RunOptions::default()
    };
    let a = serde_json::to_string(&run_suite(&s, &o)).unwrap();
    let b = serde_json::to_string(&run_suite(&s, &o)).unwrap();
    assert_eq!(a, b);
    assert!(a.contains("\"check\":\"T_norm_frame\""));
    assert!(!a.contains("\"check\":\"static_fC\""));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn more_points_never_flip_a_clear_pass(extra in 1usize..12, seed in 0u64..1000) {
        let s = spec("conformal_perturbation");
        let c = find("div_weyl_cotton");
        let small = run_check(&c, &s, &RunOptions { points: 4, seed, ..RunOptions::default() });
        prop_assume!(small.max_rel_residual < c.tolerance / 10.0);
        let large = run_check(&c, &s, &RunOptions { points: 4 + extra, seed, ..RunOptions::default() });
        prop_assert!(large.passed());
        prop_assert!(large.max_rel_residual >= small.max_rel_residual);
    }
}
