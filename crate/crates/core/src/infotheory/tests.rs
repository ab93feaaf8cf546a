use super::toy::QuadraticLoad;
use super::*;
use crate::quad::logspace;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{E, PI};

fn dark_single() -> (ReceiverSpec, PhotocurrentState) {
    let rx = ReceiverSpec::single_junction();
    let st = PhotocurrentState::new(vec![0.0], 0.553, 0).unwrap();
    (rx, st)
}

fn toy(a_sq: f64) -> InfoContext<QuadraticLoad> {
    InfoContext::with_characteristic(QuadraticLoad { c: 4.0 }, 0.5, a_sq).unwrap()
}

#[test]
fn zero_peak_power_is_degenerate() {
    let (rx, st) = dark_single();
    let ctx = InfoContext::new(0.0, &st, &rx, EhModelKind::ClosedFormSingle).unwrap();
    assert_eq!(ctx.sens.theta, 0.0);
    assert_eq!(ctx.sens.x0, ctx.sens.x_a);
    assert_eq!(max_rate(&ctx, &NoiseModel::default()), 0.0);
    assert_eq!(ber_analytic(&ctx, &NoiseModel::default()), 0.5);
    assert!(matches!(ctx.optimal_cdf(0.0), Err(Error::Degenerate(_))));
    assert_eq!(rate_for_cdf(InputDistribution::Uniform, &ctx, &NoiseModel::default()).unwrap(), 0.0);
}

#[test]
fn sensitivity_in_the_dark_is_the_output_itself() {
    let (rx, st) = dark_single();
    let a_sq = 55.29e-3 / 0.553;
    let sens = sensitivity(a_sq, &st, &rx, EhModelKind::ClosedFormSingle).unwrap();
    let i = crate::ehmodel::closed_form_single_current(&rx, 55.29e-3).unwrap().i_eh;
    assert_eq!(sens.x0, 0.0);
    assert!((sens.theta - rx.r_load.sqrt() * i).abs() <= 1e-14 * sens.theta);
    assert_eq!(sens.theta, sens.x_a);
}

#[test]
fn theta_is_nondecreasing_and_concave_in_peak_power() {
    let (rx, st) = dark_single();
    let grid = logspace(1e-6, 0.1, 40);
    let theta: Vec<f64> = grid
        .iter()
        .map(|&a| sensitivity(a, &st, &rx, EhModelKind::ClosedFormSingle).unwrap().theta)
        .collect();
    let slopes: Vec<f64> = (1..grid.len())
        .map(|k| (theta[k] - theta[k - 1]) / (grid[k] - grid[k - 1]))
        .collect();
    assert!(slopes.iter().all(|&d| d >= 0.0));
    for w in slopes.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-9), "{w:?}");
    }
}

#[test]
fn optimal_cdf_boundaries_and_monotonicity() {
    let (rx, st) = dark_single();
    let ctx = InfoContext::new(0.1, &st, &rx, EhModelKind::ClosedFormSingle).unwrap();
    assert_eq!(ctx.optimal_cdf(0.0).unwrap(), 0.0);
    assert_eq!(ctx.optimal_cdf(0.1).unwrap(), 1.0);
    assert_eq!(ctx.optimal_cdf(-1.0).unwrap(), 0.0);
    assert_eq!(ctx.optimal_cdf(2.0).unwrap(), 1.0);
    let mut prev = 0.0;
    for k in 0..=1000 {
        let f = ctx.optimal_cdf(0.1 * k as f64 / 1000.0).unwrap();
        assert!(f >= prev);
        prev = f;
    }
}

#[test]
fn linear_output_makes_optimal_cdf_uniform() {
    let ctx = toy(0.2);
    for s in [0.0, 0.03, 0.1, 0.17, 0.2] {
        let f = ctx.optimal_cdf(s).unwrap();
        assert!((f - s / 0.2).abs() < 1e-15);
    }
    let noise = NoiseModel::default();
    let uniform = rate_for_cdf(InputDistribution::Uniform, &ctx, &noise).unwrap();
    assert!((uniform - max_rate(&ctx, &noise)).abs() < 1e-9);
    // ∫₀^{A²} c g² s² ds / A² = c g² A⁴ / 3.
    let p = ctx.avg_power_for_cdf(InputDistribution::Uniform).unwrap();
    assert!((p - 4.0 * 0.25 * 0.04 / 3.0).abs() < 1e-15);
}

#[test]
fn max_rate_reference_values() {
    let ctx = InfoContext::with_characteristic(QuadraticLoad { c: 1.0 }, 1.0, 1.0).unwrap();
    let noise = NoiseModel::new(1.0 / (2.0 * PI * E)).unwrap();
    assert!((max_rate(&ctx, &noise) - 0.5 * 2f64.ln()).abs() < 1e-15);

    let ctx = InfoContext::with_characteristic(QuadraticLoad { c: 1.0 }, 1.0, 3.16e-3).unwrap();
    let noise = NoiseModel::default();
    let snr = 3.16e-3f64.powi(2) / (2.0 * PI * E * 1e-9);
    let expected = 0.5 * (1.0 + snr).ln();
    assert!((max_rate(&ctx, &noise) - expected).abs() < 1e-12);
    assert!((expected - 3.1866).abs() < 1e-3);
}

#[test]
fn rate_depends_only_on_snr() {
    let a = InfoContext::with_characteristic(QuadraticLoad { c: 1.0 }, 1.0, 2e-3).unwrap();
    let b = InfoContext::with_characteristic(QuadraticLoad { c: 100.0 }, 1.0, 2e-3).unwrap();
    let ra = max_rate(&a, &NoiseModel::new(1e-9).unwrap());
    let rb = max_rate(&b, &NoiseModel::new(1e-7).unwrap());
    assert!((ra - rb).abs() < 1e-13);
}

#[test]
fn optimal_entropy_is_log_theta() {
    let (rx, st) = dark_single();
    let ctx = InfoContext::new(0.1, &st, &rx, EhModelKind::ClosedFormSingle).unwrap();
    let noise = NoiseModel::default();
    let u = output_entropy(InputDistribution::Optimal, &ctx).unwrap();
    assert!((u - ctx.sens.theta.ln()).abs() < 1e-9);
    let r = rate_for_cdf(InputDistribution::Optimal, &ctx, &noise).unwrap();
    assert!((r - max_rate(&ctx, &noise)).abs() < 1e-6);
    let uniform = rate_for_cdf(InputDistribution::Uniform, &ctx, &noise).unwrap();
    assert!(uniform < r);
    assert!(rate_for_cdf(InputDistribution::Ook, &ctx, &noise).is_err());
}

#[test]
fn average_power_closed_form_and_quadrature_agree() {
    let (rx, st) = dark_single();
    let ctx = InfoContext::new(0.1, &st, &rx, EhModelKind::ClosedFormSingle).unwrap();
    let closed = ctx.avg_power_optimal();
    let quad = ctx.avg_power_for_cdf(InputDistribution::Optimal).unwrap();
    assert!((quad - closed).abs() <= 1e-8 * closed, "{quad:e} vs {closed:e}");
    // x₀ = 0 here.
    assert!((closed - ctx.sens.x_a.powi(2) / 3.0).abs() <= 1e-15 * closed);
    let ook = ctx.avg_power_for_cdf(InputDistribution::Ook).unwrap();
    assert_eq!(ook, 0.5 * ctx.sens.x_a.powi(2));
}

#[test]
fn point_mass_average_power() {
    let st = PhotocurrentState::new(vec![1e-3], 0.553, 0).unwrap();
    let rx = ReceiverSpec::single_junction();
    let ctx = InfoContext::new(0.0, &st, &rx, EhModelKind::ClosedFormSingle).unwrap();
    assert!((ctx.avg_power_optimal() - ctx.sens.x_a.powi(2)).abs() < 1e-20);
}

#[test]
fn sampler_round_trips() {
    let (rx, st) = dark_single();
    let ctx = InfoContext::new(0.1, &st, &rx, EhModelKind::ClosedFormSingle).unwrap();
    assert_eq!(ctx.sample_optimal(0.0).unwrap(), 0.0);
    assert_eq!(ctx.sample_optimal(1.0).unwrap(), 0.1);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..10_000 {
        let u: f64 = rng.random();
        let s = ctx.sample_optimal(u).unwrap();
        assert!((ctx.optimal_cdf(s).unwrap() - u).abs() <= 1e-10);
    }
}

#[test]
fn q_function_reference_values() {
    // Trapezoid on the Gaussian density over [1.96, 40].
    let n = 400_000;
    let (a, b) = (1.96f64, 40.0f64);
    let h = (b - a) / n as f64;
    let pdf = |x: f64| (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
    let tail: f64 = (0..=n)
        .map(|k| {
            let w = if k == 0 || k == n { 0.5 } else { 1.0 };
            w * pdf(a + k as f64 * h)
        })
        .sum::<f64>()
        * h;
    assert!((q_function(1.96) - tail).abs() < 1e-10);
    assert!((q_function(1.96) - 0.0250).abs() < 1e-4);
    assert_eq!(q_function(0.0), 0.5);
    assert!((q_function(10.0) / 7.619_853_024_160_527e-24 - 1.0).abs() < 1e-12);
    assert!(q_function(30.0) > 0.0);
}

#[test]
fn detector_threshold_rule() {
    let sens = SensitivityResult {
        a_sq: 0.1,
        x0: 1.0,
        x_a: 3.0,
        theta: 2.0,
    };
    assert_eq!(ml_detect(1.0, &sens), 0.0);
    assert_eq!(ml_detect(2.0, &sens), 0.1);
    assert_eq!(ml_detect(3.0 + 10.0 * 3e-5, &sens), 0.1);
}

#[test]
fn monte_carlo_is_deterministic_and_thread_independent() {
    let (rx, st) = dark_single();
    let ctx = InfoContext::new(1.5e-6, &st, &rx, EhModelKind::ClosedFormSingle).unwrap();
    let noise = NoiseModel::default();
    let a = ber_monte_carlo(&ctx, &noise, 300_000, 42).unwrap();
    let b = ber_monte_carlo(&ctx, &noise, 300_000, 42).unwrap();
    assert_eq!(a, b);
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let c = one.install(|| ber_monte_carlo(&ctx, &noise, 300_000, 42).unwrap());
    assert_eq!(a, c);
    assert!(a.ber > 0.01 && a.ber < 0.4, "{}", a.ber);
    let d = ber_monte_carlo(&ctx, &noise, 300_000, 43).unwrap();
    assert_ne!(a.errors, d.errors);
    assert!(ber_monte_carlo(&ctx, &noise, 10, 0).is_err());
}

#[test]
fn noiseless_detection_makes_no_errors() {
    let (rx, st) = dark_single();
    let ctx = InfoContext::new(1e-3, &st, &rx, EhModelKind::ClosedFormSingle).unwrap();
    let noise = NoiseModel::new(1e-60).unwrap();
    let mc = ber_monte_carlo(&ctx, &noise, 1_000_000, 1).unwrap();
    assert_eq!(mc.errors, 0);
}

#[test]
fn distribution_tags_round_trip() {
    for d in [InputDistribution::Optimal, InputDistribution::Uniform, InputDistribution::Ook] {
        assert_eq!(d.tag().parse::<InputDistribution>().unwrap(), d);
    }
    let ctx = toy(1.0);
    assert_eq!(ctx.cdf(InputDistribution::Ook, 0.0).unwrap(), 0.5);
    assert_eq!(ctx.cdf(InputDistribution::Ook, 1.0).unwrap(), 1.0);
    assert_eq!(ctx.cdf(InputDistribution::Ook, -1e-9).unwrap(), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn probabilities_and_rates_are_in_range(a_sq in 0.0f64..0.1, mu in 0.0f64..1e-3) {
        let rx = ReceiverSpec::single_junction();
        let st = PhotocurrentState::new(vec![mu], 0.553, 0).unwrap();
        let ctx = InfoContext::new(a_sq, &st, &rx, EhModelKind::ClosedFormSingle).unwrap();
        let noise = NoiseModel::default();
        let ber = ber_analytic(&ctx, &noise);
        prop_assert!((0.0..=0.5).contains(&ber));
        prop_assert!(max_rate(&ctx, &noise) >= 0.0);
        let p = ctx.avg_power_optimal();
        prop_assert!(p >= ctx.sens.x0.powi(2) * (1.0 - 1e-12));
        prop_assert!(p <= ctx.sens.x_a.powi(2) * (1.0 + 1e-12));
    }

    #[test]
    fn ber_decreases_with_peak_power(a in 1e-7f64..0.05, f in 1.01f64..2.0) {
        let (rx, st) = dark_single();
        let noise = NoiseModel::default();
        let lo = InfoContext::new(a, &st, &rx, EhModelKind::ClosedFormSingle).unwrap();
        let hi = InfoContext::new(a * f, &st, &rx, EhModelKind::ClosedFormSingle).unwrap();
        prop_assert!(ber_analytic(&hi, &noise) <= ber_analytic(&lo, &noise));
    }
}
