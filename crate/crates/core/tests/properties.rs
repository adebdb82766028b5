use hylosolve_core::functionals::{bound_m, j_delta, phi, PenaltyParams};
use hylosolve_core::io::{read_field, write_field};
use hylosolve_core::rng::{self, RandomStateOptions};
use hylosolve_core::{charge, energy, orbit_distance, FieldState, Grid, LatticeShift, ModelSpec, ModelTag, WSpec};
use proptest::prelude::*;

fn tag_strategy() -> impl Strategy<Value = ModelTag> {
    prop_oneof![Just(ModelTag::Nls), Just(ModelTag::Nwe), Just(ModelTag::Nbe)]
}

fn state(tag: ModelTag, grid: &Grid, seed: u64) -> FieldState {
    let opts = RandomStateOptions { norm_range: (0.1, 3.0), ..RandomStateOptions::for_grid(grid) };
    rng::random_state(tag, grid, &opts, &mut rng::stream(seed, "properties"))
}

fn grid() -> Grid {
    Grid::line(128, 30.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn group_orbit_has_zero_distance(tag in tag_strategy(), seed in any::<u64>(), z in -200i64..200, theta in -6.0f64..6.0) {
        let g = grid();
        let u = state(tag, &g, seed);
        let moved = u.translate(&LatticeShift::new(vec![z])).phase_rotated(theta);
        let d = orbit_distance(&u, &moved).unwrap();
        prop_assert!(d <= 1e-10 * (1.0 + u.x_norm()), "distance {d:e}");
    }

    #[test]
    fn shifts_compose_and_invert(tag in tag_strategy(), seed in any::<u64>(), a in -300i64..300, b in -300i64..300) {
        let g = grid();
        let u = state(tag, &g, seed);
        let (sa, sb) = (LatticeShift::new(vec![a]), LatticeShift::new(vec![b]));
        prop_assert_eq!(u.translate(&sa).translate(&sb), u.translate(&sa.compose(&sb)));
        prop_assert_eq!(u.translate(&sa).translate(&sa.inverse()), u.clone());
    }

    #[test]
    fn invariants_ignore_the_global_phase(seed in any::<u64>(), theta in -6.0f64..6.0) {
        let g = grid();
        let spec = ModelSpec::new(ModelTag::Nls, g.clone(), WSpec::double_power(1.0, 1.0, 4.0, 0.5, 6.0).unwrap()).unwrap();
        let u = state(ModelTag::Nls, &g, seed);
        let v = u.phase_rotated(theta);
        let (e, c) = (energy(&spec, &u), charge(&spec, &u));
        prop_assert!((energy(&spec, &v) - e).abs() <= 1e-12 * (1.0 + e.abs()));
        prop_assert!((charge(&spec, &v) - c).abs() <= 1e-12 * (1.0 + c.abs()));
    }

    #[test]
    fn penalty_bound_is_a_lower_bound(seed in any::<u64>(), delta in 0.005f64..0.1, boost in 1.0f64..4.0) {
        // any a at or above the coercivity constant keeps E + a|C|^3 >= 0
        let g = grid();
        let spec = ModelSpec::new(ModelTag::Nls, g.clone(), WSpec::single_power(1.0, 1.0, 4.0).unwrap()).unwrap();
        let params = PenaltyParams::new(delta, 0.02 * boost, 3.0).unwrap();
        let u = state(ModelTag::Nls, &g, seed);
        let j = j_delta(&spec, &u, &params).unwrap();
        let bound = delta / 2.0 * phi(&spec, &u, &params) - bound_m(&params);
        prop_assert!(j - bound >= -1e-9 * (1.0 + j.abs()), "J = {j}, bound = {bound}");
    }

    #[test]
    fn field_files_round_trip_exactly(tag in tag_strategy(), seed in any::<u64>()) {
        // the beam model only lives on a line
        let g = if tag == ModelTag::Nbe { Grid::line(32, 7.5).unwrap() } else { Grid::new(&[16, 32], &[5.0, 7.5]).unwrap() };
        let u = state(tag, &g, seed);
        let mut buf = Vec::new();
        write_field(&u, &mut buf).unwrap();
        let back = read_field(buf.as_slice(), Some((tag, &g))).unwrap();
        prop_assert_eq!(back, u);
    }
}
