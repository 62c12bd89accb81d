use cvlab_core::dgp::{MeanFn, XLaw};
use cvlab_core::Dgp;
use proptest::prelude::*;

fn residual_variance(dgp: &Dgp, n: usize, seed: u64) -> f64 {
    let data = dgp.sample(n, seed).unwrap();
    let r: Vec<f64> = data.rows().zip(data.responses()).map(|(x, y)| y - dgp.mu(x)).collect();
    let m = r.iter().sum::<f64>() / n as f64;
    r.iter().map(|e| (e - m).powi(2)).sum::<f64>() / (n - 1) as f64
}

#[test]
fn residual_variance_is_the_noise_variance() {
    for (sd, law) in [
        (1.0, XLaw::StandardNormal),
        (0.5, XLaw::StandardNormal),
        (2.0, XLaw::Uniform { half_width: 1.5 }),
    ] {
        let dgp = Dgp::new(10, MeanFn::Rt, sd, law).unwrap();
        let v = residual_variance(&dgp, 100_000, 5);
        assert!((v / (sd * sd) - 1.0).abs() < 0.05, "sd {sd}: {v}");
    }
}

#[test]
fn squared_residual_variance_is_two_sigma_to_the_fourth() {
    let dgp = Dgp::rt(3).unwrap();
    let data = dgp.sample(200_000, 9).unwrap();
    let sq: Vec<f64> = data.rows().zip(data.responses()).map(|(x, y)| (y - dgp.mu(x)).powi(2)).collect();
    let m = sq.iter().sum::<f64>() / sq.len() as f64;
    let v = sq.iter().map(|s| (s - m).powi(2)).sum::<f64>() / (sq.len() - 1) as f64;
    assert!((m - dgp.true_err()).abs() < 0.01, "{m}");
    assert!((v - dgp.cv_star_asymptotic_variance()).abs() < 0.05 * 2.0, "{v}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn samples_are_reproducible(p in 2usize..8, n in 1usize..200, seed in any::<u64>()) {
        let dgp = Dgp::rt(p).unwrap();
        let a = dgp.sample(n, seed).unwrap();
        let b = dgp.sample(n, seed).unwrap();
        prop_assert_eq!(a.features(), b.features());
        prop_assert_eq!(a.responses(), b.responses());
        prop_assert_eq!(a.n(), n);
        prop_assert_eq!(a.p(), p);
    }

    #[test]
    fn rt_mean_is_bounded_and_gated(x in prop::collection::vec(-10.0..10.0f64, 2..6)) {
        let m = Dgp::rt(x.len()).unwrap().mu(&x);
        prop_assert!((0.0..1.0).contains(&m));
        if x[0] <= 0.0 {
            prop_assert_eq!(m, 0.0);
        } else {
            prop_assert!((m - 1.0 / (1.0 + (-2.0 * x[1]).exp())).abs() < 1e-15);
        }
    }

    #[test]
    fn csv_round_trip(p in 1usize..5, n in 1usize..30, seed in any::<u64>()) {
        let dgp = Dgp::new(p, MeanFn::Zero, 1.0, XLaw::StandardNormal).unwrap();
        let data = dgp.sample(n, seed).unwrap();
        let mut buf = Vec::new();
        data.write_csv(&mut buf).unwrap();
        let back = cvlab_core::Dataset::read_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(back, data);
    }
}
