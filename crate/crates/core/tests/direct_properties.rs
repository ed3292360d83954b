mod common;

use common::{hn_strategy, random_potential};
use hn_spectral::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn problems() -> impl Strategy<Value = ProblemSpec> {
    (hn_strategy(3), hn_strategy(2), any::<u64>()).prop_map(|(f, big_f, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ProblemSpec::new(random_potential(&mut rng), f, big_f).with_n_max(25)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn spectral_data_are_consistent(spec in problems()) {
        let s = find_eigenvalues(&spec).unwrap();
        prop_assert_eq!(s.len(), 25);
        for d in &s.data {
            prop_assert!(d.gamma > 0.0);
            prop_assert!((d.chi_prime - d.beta * d.gamma).abs() < 1e-6 * d.chi_prime.abs(), "{:?}", d);
        }
        prop_assert!(s.data.windows(2).all(|w| w[0].lambda < w[1].lambda));
        // √λ_n − (n − L) = O(1/n)
        let shift = s.shift();
        for d in s.data.iter().filter(|d| d.n as f64 - shift > 5.0) {
            let x = d.n as f64 - shift;
            prop_assert!((d.lambda.sqrt() - x).abs() * x < 10.0 + 2.0 * spec.analytic_tail_constant().abs());
        }
    }

    #[test]
    fn reflected_problem_has_the_same_eigenvalues(spec in problems()) {
        let a = find_eigenvalues(&spec.clone().with_n_max(15)).unwrap();
        let b = find_eigenvalues(&spec.reflected().with_n_max(15)).unwrap();
        for (x, y) in a.data.iter().zip(&b.data) {
            prop_assert!((x.lambda - y.lambda).abs() < 1e-9 * x.lambda.abs().max(1.0));
            prop_assert!((y.gamma - x.beta * x.beta * x.gamma).abs() < 1e-6 * y.gamma);
        }
    }

    #[test]
    fn chi_prime_is_a_second_order_accurate_derivative(spec in problems(), lambda in -2.0..40.0f64) {
        let (_, d) = char_function(&spec, lambda).unwrap();
        let diff = |h: f64| {
            (char_function(&spec, lambda + h).unwrap().0 - char_function(&spec, lambda - h).unwrap().0) / (2.0 * h)
        };
        let (e1, e2) = ((diff(1e-2) - d).abs(), (diff(5e-3) - d).abs());
        // Halving h cuts the error about fourfold, up to rounding noise.
        prop_assert!(e2 < 0.35 * e1 + 1e-7 * d.abs().max(1.0), "{e1} {e2}");
    }

    #[test]
    fn two_assemblies_of_chi_agree(spec in problems(), lambda in -5.0..500.0f64) {
        let (a, _) = char_function(&spec, lambda).unwrap();
        let (b, _) = char_function_right(&spec, lambda).unwrap();
        let scale = a.abs().max(b.abs()).max(1.0);
        // Away from zeros χ is O(1) relative to its envelope; compare to it.
        let envelope = lambda.abs().max(1.0).powf(0.5 * (spec.left.index() + spec.right.index()) as f64 + 0.5);
        prop_assert!((a - b).abs() < 1e-8 * scale.max(envelope * 1e-3), "{a} {b}");
    }
}
