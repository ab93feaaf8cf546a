//! End-to-end checks across spectral, ehmodel, circuitsim and infotheory.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use slipt_core::circuitsim::{simulate_transient, InitialState, TransientConfig};
use slipt_core::ehmodel::{evaluate, EhModelKind};
use slipt_core::infotheory::InfoContext;
use slipt_core::validation::{
    total_ambient_power, transient_figures, ValidationSettings, TRANSIENT_PATTERN,
};

#[test]
fn transient_chain_holds_once_slots_outlast_the_filter() {
    // R_d C_d is tens of ms; half a second per slot lets every slot settle.
    let settings = ValidationSettings::default();
    for m in transient_figures(&settings, 0.5).unwrap() {
        assert!(m.passed(), "{} = {:e} > {:e}", m.name, m.value, m.limit);
    }
}

#[test]
fn trapezoidal_integrator_is_second_order() {
    let settings = ValidationSettings::default();
    let rx = &settings.receiver1;
    let st = settings.state(1, 0.0, 0.0).unwrap();
    let symbols: Vec<f64> = TRANSIENT_PATTERN
        .iter()
        .map(|&on| if on { 0.1 } else { 0.0 })
        .collect();
    // Comparable to R_d C_d, so the filter dynamics carry the error.
    let period = 0.05;
    let run = |steps: f64| {
        let config = TransientConfig {
            period,
            dt: Some(period / steps),
            start: InitialState::Cold,
            a_sq: 0.1,
            record_every: usize::MAX,
        };
        let trace = simulate_transient(rx, &st, &symbols, &config).unwrap();
        trace.slots.iter().map(|s| s.i_eh_end).collect::<Vec<_>>()
    };
    let (a, b, c) = (run(1000.0), run(2000.0), run(4000.0));
    let diff = |x: &[f64], y: &[f64]| {
        x.iter().zip(y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
    };
    let ratio = diff(&a, &b) / diff(&b, &c);
    assert!((3.0..5.5).contains(&ratio), "halving ratio {ratio}");
}

#[test]
fn sampled_optimal_input_passes_kolmogorov_smirnov() {
    let settings = ValidationSettings::default();
    let rx = &settings.receiver4;
    let st = settings.state(4, 0.7, 0.1).unwrap();
    let ctx = InfoContext::new(0.1, &st, rx, EhModelKind::ClosedFormMulti).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 20_000;
    let mut s: Vec<f64> = (0..n)
        .map(|_| ctx.sample_optimal(rng.random::<f64>()).unwrap())
        .collect();
    s.sort_by(f64::total_cmp);
    let mut d: f64 = 0.0;
    for (k, &v) in s.iter().enumerate() {
        let f = ctx.optimal_cdf(v).unwrap();
        d = d.max((f - k as f64 / n as f64).abs()).max(((k + 1) as f64 / n as f64 - f).abs());
    }
    // 0.1% critical value.
    let critical = 1.95 / (n as f64).sqrt();
    assert!(d < critical, "KS statistic {d} >= {critical}");

    // The pushed-forward output is uniform: E[x] is the midpoint and E[x²]
    // the closed-form average power.
    let xs: Vec<f64> = s.iter().map(|&v| ctx.output(v).unwrap()).collect();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let mean_sq = xs.iter().map(|x| x * x).sum::<f64>() / n as f64;
    let (x0, xa) = (ctx.sens.x0, ctx.sens.x_a);
    let sd = ctx.sens.theta / 12f64.sqrt();
    assert!((mean - 0.5 * (x0 + xa)).abs() < 5.0 * sd / (n as f64).sqrt());
    assert!((mean_sq - ctx.avg_power_optimal()).abs() < 1e-2 * ctx.avg_power_optimal());
}

#[test]
fn harvested_power_never_exceeds_incident_power() {
    let settings = ValidationSettings::default();
    for n in [1, 4] {
        let rx = settings.receiver(n).unwrap();
        let ambient = total_ambient_power(rx).unwrap();
        for (mu_a, p) in [(0.0, 0.0), (0.7, 0.01), (1.0, 0.2)] {
            let st = settings.state(n, mu_a, p).unwrap();
            for s in [0.0, 1e-3, 0.1] {
                let incident = mu_a * ambient + p + settings.info.gain * s;
                let got = evaluate(EhModelKind::Accurate, &st, s, rx).unwrap().p_harv;
                assert!(got <= incident, "N = {n}: {got} W from {incident} W");
            }
        }
    }
}

#[test]
fn power_curves_rise_with_transmit_power() {
    let settings = ValidationSettings::default();
    let s_grid: Vec<f64> = (0..=40).map(|k| 0.1 * k as f64 / 40.0).collect();
    for (n, models) in [
        (1, &EhModelKind::ALL[..]),
        (4, &[EhModelKind::Accurate, EhModelKind::Approximate, EhModelKind::ClosedFormMulti][..]),
    ] {
        let rx = settings.receiver(n).unwrap();
        for (mu_a, p) in [(0.0, 0.0), (0.7, 0.01), (0.7, 0.1)] {
            let st = settings.state(n, mu_a, p).unwrap();
            for &model in models {
                let mut last = 0.0;
                for &s in &s_grid {
                    let got = evaluate(model, &st, s, rx).unwrap().p_harv;
                    assert!(got >= last * (1.0 - 1e-12), "{model} N = {n} at s = {s}");
                    last = got;
                }
            }
        }
    }
}
