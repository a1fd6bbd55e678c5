use aniso_rt::geometry::{
    angle_report, canonical_decompose, condition_numbers, param_h_t, param_h_t0, Simplex,
};
use proptest::prelude::*;

fn simplex_strategy(dim: usize) -> impl Strategy<Value = Simplex> {
    prop::collection::vec(prop::collection::vec(-1.0f64..1.0, dim), dim + 1).prop_filter_map(
        "nearly degenerate",
        move |v| {
            let s = Simplex::new(&v).ok()?;
            (s.volume() > 1e-4 * s.diameter().powi(dim as i32)).then_some(s)
        },
    )
}

fn any_simplex() -> impl Strategy<Value = Simplex> {
    prop_oneof![simplex_strategy(2), simplex_strategy(3)]
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn h_t_and_h_t0_are_equivalent(s in any_simplex()) {
        let d = canonical_decompose(&s).unwrap();
        let r = param_h_t(&d, s.volume(), s.diameter()) / param_h_t0(&s);
        prop_assert!(r > 0.5 * (1.0 - 1e-12) && r < 2.0 * (1.0 + 1e-12), "ratio {r}");
    }

    #[test]
    fn decomposition_reconstructs_vertices(s in any_simplex()) {
        let d = canonical_decompose(&s).unwrap();
        prop_assert!(d.reconstruction_error(&s) <= 1e-10 * s.diameter());
        prop_assert!(d.validate().is_ok());
    }

    #[test]
    fn conditioning_bounds(s in any_simplex()) {
        let dim = s.dim();
        let d = canonical_decompose(&s).unwrap();
        let cn = condition_numbers(&d);
        let vol = s.volume();
        let h = s.diameter();
        let (norm_bound, cond_factor) = if dim == 2 { (2f64.sqrt(), 1.0) } else { (2.0, 2.0 / 3.0) };
        prop_assert!((cn.det_at.abs() - factorial(dim) * vol).abs() <= 1e-10 * factorial(dim) * vol);
        prop_assert!(cn.norm_atilde <= norm_bound * (1.0 + 1e-12));
        prop_assert!(cn.cond_atilde <= cond_factor * param_h_t(&d, vol, h) / h * (1.0 + 1e-9));
        prop_assert!((cn.norm_rotation - 1.0).abs() < 1e-12);
    }

    #[test]
    fn h_t0_matches_circumradius_ratio(s in simplex_strategy(2)) {
        // R = abc / (4|T|), so H_T0 / R = 4h / b with b the middle edge, and
        // h/2 <= b <= h.
        let r = angle_report(&s, 10.0).unwrap();
        let ratio = r.h_t0 / r.circumradius;
        prop_assert!((4.0 * (1.0 - 1e-9)..=8.0 * (1.0 + 1e-9)).contains(&ratio), "H_T0 / R = {ratio}");
    }

    #[test]
    fn report_is_rigid_motion_invariant(s in simplex_strategy(2), theta in 0.0f64..std::f64::consts::TAU, tx in -5.0f64..5.0) {
        let (c, sn) = (theta.cos(), theta.sin());
        let moved: Vec<Vec<f64>> = s
            .to_vecs()
            .iter()
            .map(|v| vec![c * v[0] - sn * v[1] + tx, sn * v[0] + c * v[1] - tx])
            .collect();
        let a = angle_report(&s, 10.0).unwrap();
        let b = angle_report(&Simplex::new(&moved).unwrap(), 10.0).unwrap();
        for (x, y) in [(a.h, b.h), (a.h_t, b.h_t), (a.h_t0, b.h_t0), (a.max_angle, b.max_angle)] {
            prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0));
        }
    }
}
