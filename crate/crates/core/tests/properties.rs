#![allow(clippy::needless_range_loop)]

//! Property tests for invariants that hold for arbitrary inputs.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use w4_core::bilinear::{energy_difference, gram_matrix_from, GramSource};
use w4_core::geometry::fixtures::quadratic_germ;
use w4_core::geometry::{fundamental_data, rotation_matrix};
use w4_core::pipeline::run_connected_sum;
use w4_core::rotation::{build_a, optimal_t, random_orthogonal, random_tuple, search_s};
use w4_core::triharmonic::{closed_form_determinant, direct_determinant};
use w4_core::{ConnectedSumSpec, Domain, Family, FormCoefficients};

fn family() -> impl Strategy<Value = Family> {
    prop_oneof![
        Just(Family::E),
        Just(Family::F),
        Just(Family::G),
        Just(Family::H)
    ]
}

fn sym4() -> impl Strategy<Value = [[f64; 4]; 4]> {
    prop::array::uniform10(-1.0..1.0f64).prop_map(|v| {
        let mut m = [[0.0; 4]; 4];
        let mut k = 0;
        for i in 0..4 {
            for j in i..4 {
                m[i][j] = v[k];
                m[j][i] = v[k];
                k += 1;
            }
        }
        m
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gram_is_symmetric_and_nonnegative(f in family(), tau in 0.05..0.9f64, width in 0.05..2.0f64, x in prop::array::uniform6(-1.0..1.0f64)) {
        let sigma = tau + width;
        let g = gram_matrix_from(f, sigma, tau, GramSource::Raw).unwrap();
        let scale = (0..6).map(|i| g.m[i][i].abs()).fold(0.0, f64::max);
        for i in 0..6 {
            for j in 0..6 {
                prop_assert!((g.m[i][j] - g.m[j][i]).abs() <= 1e-12 * scale);
            }
        }
        let e = g.form(&x, &x).unwrap();
        prop_assert!(e >= -1e-10 * scale, "energy {e} on ({tau}, {sigma})");
    }

    #[test]
    fn gram_is_additive_over_annuli(f in family(), tau in 0.1..0.5f64, mid in 0.6..0.9f64) {
        let a = gram_matrix_from(f, mid, tau, GramSource::Raw).unwrap();
        let b = gram_matrix_from(f, 1.0, mid, GramSource::Raw).unwrap();
        let whole = gram_matrix_from(f, 1.0, tau, GramSource::Raw).unwrap();
        let scale = (0..6).map(|i| whole.m[i][i].abs()).fold(1.0, f64::max);
        for i in 0..6 {
            for j in 0..6 {
                prop_assert!((a.m[i][j] + b.m[i][j] - whole.m[i][j]).abs() <= 1e-9 * scale);
            }
        }
    }

    #[test]
    fn determinant_matches_closed_form(f in family(), gamma in 0.05..0.95f64) {
        let d = direct_determinant(f, gamma).unwrap();
        let c = closed_form_determinant(f, gamma);
        prop_assert!((d - c).abs() <= 1e-9 * c.abs(), "{f:?} γ={gamma}: {d} vs {c}");
    }

    #[test]
    fn optimal_t_beats_random_orthogonal(k in 1usize..5, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (p, r) = (random_tuple(k, &mut rng), random_tuple(k, &mut rng));
        let s = random_orthogonal(4, &mut rng);
        let s: [[f64; 4]; 4] = std::array::from_fn(|i| std::array::from_fn(|j| s[(i, j)]));
        let a = build_a(&s, &p, &r).unwrap();
        let (t, best) = optimal_t(&a).unwrap();
        prop_assert!(((t.transpose() * &a).trace() - best).abs() <= 1e-10 * (1.0 + best.abs()));
        for _ in 0..20 {
            let u = random_orthogonal(k, &mut rng);
            prop_assert!((u.transpose() * &a).trace() <= best + 1e-10 * (1.0 + best.abs()));
        }
    }

    #[test]
    fn rotation_preserves_norm(k in 1usize..4, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (p, r) = (random_tuple(k, &mut rng), random_tuple(k, &mut rng));
        let res = search_s(&p, &r, 1, seed).unwrap();
        let rotated = p.transformed(&res.s, &res.t_matrix());
        prop_assert!((rotated.norm() - p.norm()).abs() <= 1e-10 * p.norm());
        prop_assert!((rotated.pairing(&r) - res.pairing).abs() <= 1e-9 * (1.0 + res.pairing));
        prop_assert!(res.pairing > 0.0);
    }

    #[test]
    fn energy_difference_is_quadratic(lambda in 0.1..10.0f64, t in 0.0..5.0f64) {
        let mut c = FormCoefficients::zeros(1);
        c.p[2][0] = 0.7;
        c.r[2][0] = 0.4;
        c.q3[5][0] = -0.3;
        c.s1[1][0] = 0.2;
        let mut d = c.clone();
        for v in [&mut d.p, &mut d.r, &mut d.q3, &mut d.s1] {
            v.iter_mut().flatten().for_each(|x| *x *= lambda);
        }
        let (e1, l1) = energy_difference(&c, 0.1, t).unwrap();
        let (e2, l2) = energy_difference(&d, 0.1, t).unwrap();
        let l2_scale = lambda * lambda;
        prop_assert!((e2 - l2_scale * e1).abs() <= 1e-9 * (e2.abs() + e1.abs() * l2_scale));
        prop_assert!((l2 - l2_scale * l1).abs() <= 1e-12 * (l2.abs() + 1e-300));
    }

    #[test]
    fn traceless_curvature_is_rigid_motion_invariant(p in sym4(), seed in 0u64..1000, z in prop::array::uniform4(-0.2..0.2f64)) {
        let germ = quadratic_germ(vec![p], None, Domain::Ball { radius: 0.5 });
        let moved = germ.transformed(rotation_matrix(5, seed), vec![1.0, -0.5, 0.2, 0.0, 3.0]);
        let a = fundamental_data(&germ, z).unwrap().densities();
        let b = fundamental_data(&moved, z).unwrap().densities();
        prop_assert!((a.l4 - b.l4).abs() <= 1e-10 * (1.0 + a.l4.abs()));
        prop_assert!((a.e_gr() - b.e_gr()).abs() <= 1e-10 * (1.0 + a.e_gr().abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn pipeline_is_deterministic(p in sym4(), r in sym4(), seed in any::<u64>()) {
        let cubic = vec![[[[0.0; 4]; 4]; 4]];
        let spec: ConnectedSumSpec = serde_json::from_value(serde_json::json!({
            "germ1": {"p": [p], "q": cubic},
            "germ2": {"p": [r], "q": cubic},
            "t": "auto",
            "seed": seed,
            "restarts": 2,
            "align": "always",
        })).unwrap();
        match (run_connected_sum(&spec), run_connected_sum(&spec)) {
            (Ok(a), Ok(b)) => prop_assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap()),
            (Err(a), Err(b)) => prop_assert_eq!(a.to_string(), b.to_string()),
            _ => prop_assert!(false, "nondeterministic outcome"),
        }
    }
}
