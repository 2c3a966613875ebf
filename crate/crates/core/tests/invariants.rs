use fracgp::field_io::{read_field, write_field, FieldMeta};
use fracgp::functionals::{energy, gn_quotient, interpolation_check, modulus_seminorm_check, ProblemParams};
use fracgp::rearrange::schwarz_rearrange;
use fracgp::sampling::{random_field, random_nonnegative_field, seeded_rng, FieldSpec};
use fracgp::spectral::spectral_mass;
use fracgp::{frac_laplacian, frac_seminorm_sq, FractionalSymbol, Grid2D, ScalarField};
use proptest::prelude::*;

fn grid() -> Grid2D {
    Grid2D::new(16.0, 64).unwrap()
}

fn sample(seed: u64) -> ScalarField {
    let g = grid();
    random_field(g, &FieldSpec::for_grid(&g), &mut seeded_rng(seed)).unwrap()
}

fn order() -> impl Strategy<Value = f64> {
    (0.51f64..=1.0).prop_map(|s| (s * 1e4).round() / 1e4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn plancherel(seed in any::<u64>()) {
        let u = sample(seed);
        prop_assert!((spectral_mass(&u) - u.mass()).abs() <= 1e-10 * u.mass());
    }

    #[test]
    fn seminorm_is_the_quadratic_form(seed in any::<u64>(), s in order()) {
        let u = sample(seed);
        let sym = FractionalSymbol::new(grid(), s).unwrap();
        let k = frac_seminorm_sq(&u, &sym).unwrap();
        let form = u.dot(&frac_laplacian(&u, &sym).unwrap());
        prop_assert!(k >= 0.0);
        prop_assert!((k - form).abs() <= 1e-10 * k);
    }

    #[test]
    fn energy_and_multiplier_are_consistent(seed in any::<u64>(), s in order(), mass in 0.1f64..20.0) {
        let p = ProblemParams::harmonic(s, mass).unwrap();
        let b = energy(&sample(seed), &p).unwrap();
        let total = 0.5 * (b.kinetic + b.potential_term) - 0.25 * b.quartic;
        prop_assert!((b.total - total).abs() <= 1e-12 * (0.5 * (b.kinetic + b.potential_term) + 0.25 * b.quartic));
        let mu_n = b.kinetic + b.potential_term - b.quartic;
        prop_assert!((b.multiplier * b.mass - mu_n).abs() <= 1e-12 * (b.kinetic + b.potential_term + b.quartic));
    }

    #[test]
    fn gn_quotient_is_amplitude_invariant(seed in any::<u64>(), s in order(), a in 0.01f64..100.0) {
        let u = sample(seed);
        let q = gn_quotient(&u, s).unwrap();
        let qa = gn_quotient(&u.scaled(a), s).unwrap();
        prop_assert!((q - qa).abs() <= 1e-10 * q);
    }

    #[test]
    fn modulus_does_not_raise_seminorm(seed in any::<u64>(), s in order()) {
        let (lhs, rhs) = modulus_seminorm_check(&sample(seed), s).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-8));
    }

    #[test]
    fn interpolation_bound(seed in any::<u64>(), s in 0.76f64..=1.0) {
        let (lhs, rhs) = interpolation_check(&sample(seed), s).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-8));
    }

    #[test]
    fn rearrangement_is_radial_and_decreasing(seed in any::<u64>()) {
        let g = Grid2D::new(16.0, 128).unwrap();
        let u = random_nonnegative_field(g, &FieldSpec::for_grid(&g), &mut seeded_rng(seed)).unwrap();
        let v = schwarz_rearrange(&u).unwrap();
        prop_assert!(v.is_radially_nonincreasing(0.0));
        prop_assert!(v.asymmetry() <= 1e-14);
        prop_assert!(v.max() >= u.max());
        prop_assert!(v.second_moment() <= u.second_moment());
    }

    #[test]
    fn field_files_round_trip(values in prop::collection::vec(-1e100f64..1e100, 256), s in order()) {
        let g = Grid2D::new(4.0, 16).unwrap();
        let u = ScalarField::new(g, values).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.bin");
        let meta = FieldMeta::new(&u, s, "test");
        write_field(&path, &u, &meta).unwrap();
        let (back, meta_back) = read_field(&path).unwrap();
        prop_assert_eq!(meta_back, meta);
        prop_assert!(back.values().iter().zip(u.values()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }
}

#[test]
fn single_mode_is_an_eigenfunction() {
    let g = Grid2D::new(2.0 * std::f64::consts::PI, 32).unwrap();
    let (kx, ky) = (3.0, 4.0);
    let u = ScalarField::from_fn(g, |x, y| (kx * x + ky * y).cos()).unwrap();
    for s in [0.6, 0.8, 1.0] {
        let sym = FractionalSymbol::new(g, s).unwrap();
        let lu = frac_laplacian(&u, &sym).unwrap();
        let lam = 25f64.powf(s);
        for (a, b) in lu.values().iter().zip(u.values()) {
            assert!((a - lam * b).abs() <= 1e-12 * lam);
        }
        assert!((frac_seminorm_sq(&u, &sym).unwrap() - lam * u.mass()).abs() <= 1e-12 * lam * u.mass());
    }
}
