use hn_spectral::*;

fn hn(h0: f64, h: f64, poles: &[(f64, f64)]) -> RationalHNFunction {
    RationalHNFunction::from_parts(h0, h, poles).unwrap()
}

fn spectrum(
    q: Potential,
    f: &RationalHNFunction,
    big_f: &RationalHNFunction,
    n_max: usize,
) -> Spectrum {
    find_eigenvalues(&ProblemSpec::new(q, f.clone(), big_f.clone()).with_n_max(n_max)).unwrap()
}

#[test]
fn omegas_from_a_computed_spectrum() {
    let f = hn(0.0, 0.0, &[(2.0, 1.0)]);
    let s = spectrum(Potential::Zero, &f, &hn(0.0, 0.0, &[]), 300);
    let w = solve_for_omega(&sigma_vector(&s, SumOptions::default()).unwrap()).unwrap();
    for (a, b) in w.as_slice().iter().zip([0.0, -2.0, 1.0]) {
        assert!((a - b).abs() < 1e-5, "{:?}", w);
    }
}

#[test]
fn computed_spectra_satisfy_the_identities() {
    let cases = [
        (Potential::Zero, hn(0.0, 0.0, &[]), hn(0.0, 0.0, &[])),
        (
            Potential::Constant { c: 1.0 },
            hn(1.0, 0.0, &[]),
            hn(0.0, 1.0, &[]),
        ),
        (
            Potential::sampled_from_fn(65, |x| (2.0 * x).sin() - x),
            hn(0.5, -1.0, &[(1.0, 2.0)]),
            hn(0.0, 0.5, &[(3.0, 1.0)]),
        ),
    ];
    for (q, f, big_f) in cases {
        let s = spectrum(q, &f, &big_f, 200);
        let r = residuals(
            &f.omega_poly(),
            &sigma_vector(&s, SumOptions::default()).unwrap(),
        )
        .unwrap();
        assert!(r.iter().all(|v| v.abs() < 1e-4), "{:?}", r);
    }
}

#[test]
fn parseval_for_a_single_pole() {
    let f = hn(0.0, 0.0, &[(2.0, 1.0)]);
    let s = spectrum(Potential::Zero, &f, &hn(0.0, 0.0, &[]), 200);
    let e = parseval_delta(&s, &f, 1, true).unwrap();
    assert!(e.partial_sums.windows(2).all(|w| w[1] >= w[0]));
    assert!(*e.partial_sums.last().unwrap() <= 1.0);
    assert!((e.estimate - 1.0).abs() < 1e-3, "{}", e.estimate);
    assert!(!e.divergent);
}

#[test]
fn parseval_bounds_for_two_poles() {
    let f = hn(0.0, 0.0, &[(0.0, 1.0), (3.0, 2.0)]);
    let s = spectrum(Potential::Constant { c: 0.5 }, &f, &hn(0.0, 1.0, &[]), 150);
    for (k, bound) in [(1, 1.0), (2, 0.5)] {
        let e = parseval_delta(&s, &f, k, true).unwrap();
        assert!(*e.partial_sums.last().unwrap() <= bound);
        assert!(
            (e.estimate - bound).abs() < 1e-3 * bound,
            "k = {k}: {}",
            e.estimate
        );
    }
}

#[test]
fn parseval_for_the_slope() {
    let f = hn(1.0, 0.0, &[]);
    let s = spectrum(Potential::Zero, &f, &hn(0.0, 0.0, &[]), 200);
    let e = parseval_h0(&s, &f, true).unwrap();
    assert!(!e.divergent);
    assert!((e.estimate - 1.0).abs() < 1e-3, "{}", e.estimate);

    let f = hn(0.0, 2.0, &[]);
    let s = spectrum(Potential::Zero, &f, &hn(0.0, 0.0, &[]), 200);
    assert!(parseval_h0(&s, &f, true).unwrap().divergent);
}

#[test]
fn right_endpoint_sums() {
    let big_f = hn(0.0, 2.0, &[]);
    let s = spectrum(Potential::Zero, &hn(0.0, 0.0, &[]), &big_f, 200);
    let r = right_endpoint_spectrum(&s).unwrap();
    let v = sigma_vector(&r, SumOptions::default()).unwrap();
    assert!((v.sigmas[0] - 2.0).abs() < 1e-5, "{:?}", v.sigmas);

    let n = spectrum(Potential::Zero, &hn(0.0, 0.0, &[]), &hn(0.0, 0.0, &[]), 20);
    let r = right_endpoint_spectrum(&n).unwrap();
    for (a, b) in r.data.iter().zip(&n.data) {
        assert!((a.gamma - b.gamma).abs() < 1e-10);
    }
}
