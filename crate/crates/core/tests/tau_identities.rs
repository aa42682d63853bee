use taukit_core::concentration::subcube_face;
use taukit_core::tau::quantile_grid;
use taukit_core::*;

fn convex_parts() -> Vec<TestFunction> {
    vec![
        TestFunction::max_affine(vec![vec![1.5], vec![-0.5]], vec![0.2, -0.1]).unwrap(),
        TestFunction::max_affine(vec![vec![-2.0], vec![0.7], vec![0.0]], vec![0.0, 0.3, -1.0]).unwrap(),
        TestFunction::linear_1d(-0.8),
    ]
}

#[test]
fn product_couple_factorizes_exactly_for_separable_phi() {
    // for φ = φ₁ ⊕ φ₂ the two integrals factor, so the 2D product is the
    // product of the 1D products up to rounding
    let parts = convex_parts();
    let one = TauCouple::bernoulli_half_quadratic();
    let two = TauCouple::bernoulli_product(2).unwrap();
    for i in 0..parts.len() {
        for j in 0..parts.len() {
            let a = tau_eval_discrete(&one, &parts[i]).unwrap();
            let b = tau_eval_discrete(&one, &parts[j]).unwrap();
            let phi = TestFunction::separable(vec![parts[i].clone(), parts[j].clone()]);
            let ab = tau_eval_discrete(&two, &phi).unwrap();
            assert!((ab.integral_pos - a.integral_pos * b.integral_pos).abs() < 1e-12 * ab.integral_pos);
            assert!((ab.integral_neg - a.integral_neg * b.integral_neg).abs() < 1e-12 * ab.integral_neg);
            assert!((ab.product - a.product * b.product).abs() < 1e-12);
        }
    }
}

#[test]
fn adding_a_constant_leaves_the_product_unchanged() {
    let couples = [TauCouple::exponential_w(), TauCouple::laplace_u(), TauCouple::gaussian_quarter()];
    let phi = TestFunction::piecewise_linear(vec![-2.0, 0.0, 1.5], vec![0.5, -1.0, 2.0]).unwrap();
    for c in &couples {
        let grid = quantile_grid(match &c.measure {
            taukit_core::tau::CoupleMeasure::Line(m) => m,
            _ => unreachable!(),
        }, 0.01)
        .unwrap();
        let base = tau_eval_1d(c, &phi, &grid).unwrap().product;
        for shift in [-7.5, 3.0, 12.0] {
            let shifted = TestFunction::piecewise_linear(vec![-2.0, 0.0, 1.5], vec![0.5 + shift, -1.0 + shift, 2.0 + shift]).unwrap();
            let p = tau_eval_1d(c, &shifted, &grid).unwrap().product;
            assert!((p - base).abs() <= 1e-12 * base.max(1.0), "{}: {p} vs {base}", c.label());
        }
    }
}

#[test]
fn gaussian_linear_equality_in_closed_form() {
    let c = TauCouple::gaussian_quarter();
    let grid = quantile_grid(&measure_gaussian(), 0.01).unwrap();
    for l in [-2.0, -0.5, 1.0] {
        let r = tau_eval_1d(&c, &TestFunction::linear_1d(l), &grid).unwrap();
        // e^{λ²} for ∫e^{λx − λ²} and e^{λ²/2} for ∫e^{−λx}, against an exact 1
        assert!((r.product - 1.0).abs() < 1e-6, "λ = {l}: {}", r.product);
        let rel = (r.integral_neg / (0.5 * l * l).exp() - 1.0).abs();
        assert!(rel < 1e-6, "λ = {l}: relative error {rel}");
    }
}

#[test]
fn mc_product_matches_quadrature_product() {
    let c1 = TauCouple::laplace_u();
    let grid = quantile_grid(&measure_laplace(), 0.01).unwrap();
    let f1 = TestFunction::piecewise_linear(vec![-1.0, 1.0], vec![1.0, -1.0]).unwrap();
    let f2 = TestFunction::piecewise_linear(vec![-3.0, 0.0, 2.0], vec![0.0, 2.0, -0.5]).unwrap();
    let q = tau_eval_1d(&c1, &f1, &grid).unwrap().product * tau_eval_1d(&c1, &f2, &grid).unwrap().product;
    let phi = TestFunction::separable(vec![f1, f2]);
    let c2 = TauCouple::laplace_product(2).unwrap();
    let r = tau_eval_nd_mc(&c2, &phi, 200_000, McOptions { seed: 5, ..Default::default() }).unwrap();
    let se = r.std_error.unwrap();
    assert!((r.product - q).abs() < 4.0 * se + 1e-3, "{} vs {q} (se {se})", r.product);
}

#[test]
fn hull_distance_is_one_lipschitz() {
    let a = vec![vec![0.1, 0.9, 0.3], vec![0.8, 0.2, 0.5], vec![0.4, 0.4, 1.0], vec![0.0, 0.0, 0.0]];
    let pts = [[0.9, 0.9, 0.9], [0.95, 0.85, 0.9], [0.2, 0.7, 0.1], [1.0, 0.0, 1.0]];
    for x in &pts {
        for y in &pts {
            let dx = convex_hull_distance(x, &a).unwrap();
            let dy = convex_hull_distance(y, &a).unwrap();
            let d = x.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
            assert!((dx - dy).abs() <= d + 1e-9);
        }
    }
}

#[test]
fn subcube_face_exact_integral() {
    // A = {x₁ = 0}: half the cube at distance 0, the other half at distance 1
    let r = corollary5_experiment(&subcube_face(6, 1).unwrap(), HullMode::Exact).unwrap();
    let expect = 0.5 * (1.0 + 0.25f64.exp());
    assert!((r.lhs - expect).abs() < 1e-12);
    assert_eq!(r.bound, 2.0);
    assert!(r.verdict.is_pass());
}
