//! The acceptance battery: cross-model, oracle and Monte Carlo checks with
//! measured figures, shared by the test suite and the `validate` command.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuitsim::{simulate_transient, solve_dc, InitialState, TransientConfig};
use crate::ehmodel::{
    accurate_for_currents, approximate_for_currents, closed_form_multi_currents,
    closed_form_single_current, effective_saturation, lambert_w0_exp, EhModelKind,
    HIGH_ILLUMINATION_RATIO,
};
use crate::error::{Error, Result};
use crate::infotheory::{
    ber_analytic, ber_monte_carlo, max_rate, rate_for_cdf, InfoContext,
    InputDistribution, NoiseModel, MC_CHUNK,
};
use crate::quad::{integrate, logspace, QuadTolerance};
use crate::spectral::{
    ambient_psd, photocurrents, AmbientModel, EnergySignal, InfoSignal, PhotocurrentState,
    ReceiverSpec, STEFAN_BOLTZMANN,
};

/// One measured figure and the bound it must not exceed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub name: String,
    pub value: f64,
    pub limit: f64,
}

impl Measurement {
    pub fn new(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Measurement {
            name: name.into(),
            value,
            limit,
        }
    }

    pub fn passed(&self) -> bool {
        self.value <= self.limit
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub id: u8,
    pub title: String,
    pub measurements: Vec<Measurement>,
    /// Set when the criterion could not be evaluated at all.
    pub error: Option<String>,
    pub seconds: f64,
}

impl CriterionReport {
    pub fn passed(&self) -> bool {
        self.error.is_none() && self.measurements.iter().all(Measurement::passed)
    }

    /// One-line summary, e.g. `PASS [1] ... max_rel_err = 2.7e-12 (<= 1e-9)`.
    pub fn summary(&self) -> String {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        let mut line = format!("{status} [{}] {}", self.id, self.title);
        if let Some(e) = &self.error {
            line.push_str(&format!(": error: {e}"));
        }
        for m in &self.measurements {
            line.push_str(&format!("; {} = {:.3e} (<= {:.1e})", m.name, m.value, m.limit));
        }
        line.push_str(&format!(" [{:.2} s]", self.seconds));
        line
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub criteria: Vec<CriterionReport>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.criteria.iter().all(CriterionReport::passed)
    }

    pub fn failures(&self) -> Vec<&CriterionReport> {
        self.criteria.iter().filter(|c| !c.passed()).collect()
    }
}

/// Inputs of the battery. `Default` is the reference configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationSettings {
    pub receiver1: ReceiverSpec,
    pub receiver4: ReceiverSpec,
    pub info: InfoSignal,
    pub noise: NoiseModel,
    pub seed: u64,
    pub ber_trials: u64,
    pub sampler_draws: u64,
    /// Symbol period of the transient check, s.
    pub period: f64,
    /// Multiplies R_Σ on the receiver copy the closed forms see (fault
    /// injection; 1 in normal runs).
    pub closed_form_r_sigma_scale: f64,
}

impl Default for ValidationSettings {
    fn default() -> Self {
        ValidationSettings {
            receiver1: ReceiverSpec::single_junction(),
            receiver4: ReceiverSpec::four_junction(),
            info: InfoSignal::default(),
            noise: NoiseModel::default(),
            seed: 0x5eed,
            ber_trials: 10_000_000,
            sampler_draws: 1_000_000,
            period: 1e-3,
            closed_form_r_sigma_scale: 1.0,
        }
    }
}

/// Tolerances of the battery.
pub mod limits {
    pub const ORACLE_REL: f64 = 1e-9;
    pub const CLOSED_SINGLE_REL: f64 = 5e-3;
    pub const CLOSED_MULTI_REL: f64 = 5e-2;
    pub const LAMBERT_ALGEBRA_REL: f64 = 1e-10;
    pub const LAMBERT_IDENTITY_REL: f64 = 1e-12;
    pub const OMEGA_ABS: f64 = 1e-9;
    pub const STEFAN_BOLTZMANN_REL: f64 = 5e-3;
    pub const AVG_POWER_REL: f64 = 1e-2;
    pub const RATE_ABS_NATS: f64 = 1e-6;
    pub const BER_STANDARD_ERRORS: f64 = 3.0;
    pub const TRANSIENT_REL: f64 = 1e-3;
}

pub const OMEGA: f64 = 0.567_143_290_4;

impl ValidationSettings {
    pub fn receiver(&self, n: usize) -> Result<&ReceiverSpec> {
        match n {
            1 => Ok(&self.receiver1),
            4 => Ok(&self.receiver4),
            _ => Err(Error::Config(format!("validation covers N = 1 and 4, not {n}"))),
        }
    }

    /// Photocurrents of the N-junction receiver for ambient level `mu_a` and
    /// a reference energy signal of total power `p`.
    pub fn state(&self, n: usize, mu_a: f64, p: f64) -> Result<PhotocurrentState> {
        let rx = self.receiver(n)?;
        let energy = if rx.n() == n && matches!(n, 1 | 4) {
            EnergySignal::reference(n, p)?
        } else {
            EnergySignal::at_band_midpoints(rx, p)
        };
        photocurrents(rx, &AmbientModel::new(mu_a)?, &energy, &self.info)
    }

    fn closed_form_receiver(&self, rx: &ReceiverSpec) -> ReceiverSpec {
        let mut out = rx.clone();
        let f = self.closed_form_r_sigma_scale;
        if f != 1.0 {
            let r_sigma = rx.r_sigma();
            out.r_load = f * r_sigma - (r_sigma - rx.r_load);
        }
        out
    }
}

fn run(id: u8, title: &str, body: impl FnOnce() -> Result<Vec<Measurement>>) -> CriterionReport {
    let start = Instant::now();
    let (measurements, error) = match body() {
        Ok(m) => (m, None),
        Err(e) => (Vec::new(), Some(e.to_string())),
    };
    CriterionReport {
        id,
        title: title.to_string(),
        measurements,
        error,
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs().max(a.abs())
    }
}

/// 0 followed by 99 log-spaced points on [1 nA, 100 mA].
pub fn oracle_current_grid() -> Vec<f64> {
    let mut grid = vec![0.0];
    grid.extend(logspace(1e-9, 0.1, 99));
    grid
}

/// Criterion 1: fixed-point solver vs the Newton oracle, 100 points each
/// for N = 1 and N = 4 (the N = 4 points rotate the grid across junctions).
pub fn oracle_equivalence(settings: &ValidationSettings) -> CriterionReport {
    run(1, "accurate model vs circuit oracle", || {
        let grid = oracle_current_grid();
        let mut worst: f64 = 0.0;
        for n in [1usize, 4] {
            let rx = settings.receiver(n)?;
            for k in 0..grid.len() {
                let j: Vec<f64> = (0..n).map(|m| grid[(k + 37 * m) % grid.len()]).collect();
                let acc = accurate_for_currents(rx, &j)?.i_eh;
                let dc = solve_dc(rx, &j)?.i_eh;
                worst = worst.max(rel_err(acc, dc));
            }
        }
        Ok(vec![Measurement::new("max_rel_err", worst, limits::ORACLE_REL)])
    })
}

/// Transmit-power grid of the EH comparison: 0 and 20 log-spaced points up
/// to 100 mW.
pub fn eh_power_grid() -> Vec<f64> {
    let mut grid = vec![0.0];
    grid.extend(logspace(1e-5, 0.1, 20));
    grid
}

/// (μ_a, p) pairs of the EH comparison; dark N = 4 stacks are excluded
/// because their unlit junctions block the series current.
pub fn eh_scenarios(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for mu_a in [0.0, 0.7] {
        for p in [0.0, 0.01, 0.1] {
            if n == 4 && mu_a == 0.0 && p == 0.0 {
                continue;
            }
            out.push((mu_a, p));
        }
    }
    out
}

/// Criterion 2: closed forms vs the oracle harvested power.
pub fn closed_form_fidelity(settings: &ValidationSettings) -> CriterionReport {
    run(2, "closed forms vs circuit oracle", || {
        let mut worst1: f64 = 0.0;
        let mut worst4: f64 = 0.0;
        let mut in_regime = 0usize;
        for n in [1usize, 4] {
            let rx = settings.receiver(n)?;
            let rx_cf = settings.closed_form_receiver(rx);
            for (mu_a, p) in eh_scenarios(n) {
                let st = settings.state(n, mu_a, p)?;
                for s in eh_power_grid() {
                    let j = st.junction_currents(st.info_current(s));
                    let dc = solve_dc(rx, &j)?;
                    let p_dc = rx.r_load * dc.i_eh * dc.i_eh;
                    if n == 1 {
                        let p_cf = closed_form_single_current(&rx_cf, j[0])?.p_harv;
                        worst1 = worst1.max(rel_err(p_cf, p_dc));
                    } else {
                        let bright = j.iter().zip(&rx.junctions).all(|(&jj, jn)| {
                            jj > HIGH_ILLUMINATION_RATIO * effective_saturation(jn)
                        });
                        if bright {
                            in_regime += 1;
                            let p_cf = closed_form_multi_currents(&rx_cf, &j)?.p_harv;
                            worst4 = worst4.max(rel_err(p_cf, p_dc));
                        }
                    }
                }
            }
        }
        if in_regime == 0 {
            return Err(Error::Config("no N = 4 point in the high-illumination regime".into()));
        }
        Ok(vec![
            Measurement::new("single_max_rel_err", worst1, limits::CLOSED_SINGLE_REL),
            Measurement::new("multi_max_rel_err", worst4, limits::CLOSED_MULTI_REL),
        ])
    })
}

/// Criterion 3: Lambert-W closed form vs the root of the approximate
/// equation on 100 log-uniform currents in [1 nA, 100 mA].
pub fn single_junction_algebra(settings: &ValidationSettings) -> CriterionReport {
    run(3, "single-junction closed form vs approximate root", || {
        let rx = &settings.receiver1;
        let rx_cf = settings.closed_form_receiver(rx);
        let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let j = 10f64.powf(rng.random_range(-9.0..-1.0));
            let a = approximate_for_currents(rx, &[j])?.i_eh;
            let c = closed_form_single_current(&rx_cf, j)?.i_eh;
            worst = worst.max(rel_err(c, a));
        }
        Ok(vec![Measurement::new("max_rel_err", worst, limits::LAMBERT_ALGEBRA_REL)])
    })
}

/// Criterion 4: W₀(x eˣ) = x and the omega constant.
pub fn lambert_identity() -> CriterionReport {
    run(4, "Lambert W identity", || {
        let worst = logspace(1e-6, 1e4, 201)
            .into_iter()
            .map(|x| rel_err(lambert_w0_exp(x + x.ln()), x))
            .fold(0.0, f64::max);
        let omega = (lambert_w0_exp(0.0) - OMEGA).abs();
        Ok(vec![
            Measurement::new("max_rel_err", worst, limits::LAMBERT_IDENTITY_REL),
            Measurement::new("omega_abs_err", omega, limits::OMEGA_ABS),
        ])
    })
}

/// Total ambient power at μ_a = 1, W, integrated over ln λ from 50 nm to 1 cm.
pub fn total_ambient_power(rx: &ReceiverSpec) -> Result<f64> {
    let full = AmbientModel::new(1.0)?;
    integrate(
        |u| {
            let lambda = u.exp();
            ambient_psd(lambda, &full, rx).unwrap_or(f64::NAN) * lambda
        },
        (50e-9f64).ln(),
        (1e-2f64).ln(),
        QuadTolerance::new(1e-10, 0.0),
    )
}

/// Criterion 5: ambient spectrum vs the Stefan–Boltzmann law.
pub fn spectral_sanity(settings: &ValidationSettings) -> CriterionReport {
    run(5, "ambient spectrum vs Stefan-Boltzmann", || {
        let mut rx = settings.receiver1.clone();
        rx.cell_area = 1e-4;
        let k = &rx.constants;
        let expected = k.nu_s(rx.cell_area) * STEFAN_BOLTZMANN * k.t_sun.powi(4) / std::f64::consts::PI;
        let got = total_ambient_power(&rx)?;
        Ok(vec![Measurement::new("rel_err", rel_err(got, expected), limits::STEFAN_BOLTZMANN_REL)])
    })
}

/// Mean of P_harv over `draws` inverse-transform samples of F*_s.
pub fn sampled_mean_power<C>(ctx: &InfoContext<C>, draws: u64, seed: u64) -> Result<f64>
where
    C: crate::infotheory::Characteristic,
{
    let chunks = draws.div_ceil(MC_CHUNK);
    let sums: Result<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let n = MC_CHUNK.min(draws - c * MC_CHUNK);
            let mut acc = 0.0;
            for _ in 0..n {
                let s = ctx.sample_optimal(rng.random::<f64>())?;
                acc += ctx.harvested_power(s)?;
            }
            Ok(acc)
        })
        .collect();
    Ok(sums?.iter().sum::<f64>() / draws as f64)
}

/// Criterion 6: sampler-based E[P_harv] vs the closed-form average.
pub fn average_power_sampling(settings: &ValidationSettings) -> CriterionReport {
    run(6, "sampled average power vs closed form", || {
        let mut worst: f64 = 0.0;
        for (n, mu_a) in [(1usize, 0.0), (4, 0.7)] {
            let rx = settings.closed_form_receiver(settings.receiver(n)?);
            for p in [0.0, 0.1] {
                let st = settings.state(n, mu_a, p)?;
                let ctx = InfoContext::new(0.1, &st, &rx, EhModelKind::closed_form_for(n))?;
                let mc = sampled_mean_power(&ctx, settings.sampler_draws, settings.seed)?;
                worst = worst.max(rel_err(mc, ctx.avg_power_optimal()));
            }
        }
        Ok(vec![Measurement::new("max_rel_err", worst, limits::AVG_POWER_REL)])
    })
}

/// (N, μ_a, p) triples of the rate figure.
pub fn rate_scenarios() -> Vec<(usize, f64, f64)> {
    let mut out = Vec::new();
    for p in [0.0, 0.1] {
        for mu_a in [0.0, 0.2, 0.7] {
            out.push((1, mu_a, p));
        }
        for mu_a in [0.2, 0.7] {
            out.push((4, mu_a, p));
        }
    }
    out
}

/// Peak powers of the rate figure.
pub fn rate_peak_grid() -> Vec<f64> {
    logspace(1e-4, 0.1, 7)
}

/// Criterion 7: rate of F*_s equals the maximum, uniform input never beats it.
pub fn rate_consistency(settings: &ValidationSettings) -> CriterionReport {
    run(7, "optimal-cdf rate vs maximum rate", || {
        let mut worst: f64 = 0.0;
        let mut excess: f64 = 0.0;
        for (n, mu_a, p) in rate_scenarios() {
            let rx = settings.closed_form_receiver(settings.receiver(n)?);
            let st = settings.state(n, mu_a, p)?;
            for a_sq in rate_peak_grid() {
                let ctx = InfoContext::new(a_sq, &st, &rx, EhModelKind::closed_form_for(n))?;
                let best = max_rate(&ctx, &settings.noise);
                let opt = rate_for_cdf(InputDistribution::Optimal, &ctx, &settings.noise)?;
                let uni = rate_for_cdf(InputDistribution::Uniform, &ctx, &settings.noise)?;
                worst = worst.max((opt - best).abs());
                excess = excess.max(uni - best);
            }
        }
        Ok(vec![
            Measurement::new("max_abs_err_nats", worst, limits::RATE_ABS_NATS),
            Measurement::new("uniform_excess_nats", excess, 0.0),
        ])
    })
}

/// Target error rates of the BER check.
pub const BER_TARGETS: [f64; 5] = [1e-4, 1e-3, 1e-2, 0.1, 0.3];

/// Peak power at which the analytic BER equals `target`, by bisection on
/// ln A² (θ is monotone in A²).
pub fn peak_power_for_ber<C>(
    build: impl Fn(f64) -> Result<InfoContext<C>>,
    noise: &NoiseModel,
    target: f64,
) -> Result<f64>
where
    C: crate::infotheory::Characteristic,
{
    let ber = |a: f64| -> Result<f64> { Ok(ber_analytic(&build(a)?, noise)) };
    let (mut lo, mut hi) = (1e-12f64.ln(), 1f64.ln());
    if ber(hi.exp())? > target {
        return Err(Error::Config(format!("BER {target} is not reachable below A² = 1 W")));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ber(mid.exp())? > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

/// Criterion 8: Monte Carlo BER vs Q(θ/2σ) at five operating points.
pub fn ber_agreement(settings: &ValidationSettings) -> CriterionReport {
    run(8, "Monte Carlo BER vs analytic", || {
        let rx = settings.closed_form_receiver(&settings.receiver1);
        let st = settings.state(1, 0.0, 0.0)?;
        let build = |a: f64| InfoContext::new(a, &st, &rx, EhModelKind::ClosedFormSingle);
        let mut worst: f64 = 0.0;
        for (k, target) in BER_TARGETS.into_iter().enumerate() {
            let a_sq = peak_power_for_ber(build, &settings.noise, target)?;
            let ctx = build(a_sq)?;
            let q = ber_analytic(&ctx, &settings.noise);
            let mc = ber_monte_carlo(&ctx, &settings.noise, settings.ber_trials, settings.seed + k as u64)?;
            worst = worst.max((mc.ber - q).abs() / mc.standard_error(q));
        }
        Ok(vec![Measurement::new(
            "max_standard_errors",
            worst,
            limits::BER_STANDARD_ERRORS,
        )])
    })
}

/// OOK-like symbol pattern for the transient check.
pub const TRANSIENT_PATTERN: [bool; 8] = [true, false, true, true, false, false, true, false];

/// Figures of the transient chain at symbol period `period`.
pub fn transient_figures(settings: &ValidationSettings, period: f64) -> Result<Vec<Measurement>> {
    let rx = &settings.receiver1;
    let a_sq = 0.1;
    let st = settings.state(1, 0.0, 0.0)?;
    let symbols: Vec<f64> = TRANSIENT_PATTERN
        .iter()
        .map(|&on| if on { a_sq } else { 0.0 })
        .collect();
    let config = TransientConfig {
        period,
        dt: None,
        start: InitialState::Warm,
        a_sq,
        record_every: usize::MAX,
    };
    let trace = simulate_transient(rx, &st, &symbols, &config)?;
    let telescoped = trace.telescoped_outputs(rx);

    let mut dc = Vec::with_capacity(symbols.len());
    for &s in &symbols {
        dc.push(accurate_for_currents(rx, &st.junction_currents(st.info_current(s)))?);
    }
    let i_scale = dc.iter().map(|d| d.i_eh).fold(0.0, f64::max);
    let x_scale = dc.iter().map(|d| d.p_harv.sqrt()).fold(0.0, f64::max);

    let mut i_err: f64 = 0.0;
    let mut settle: f64 = 0.0;
    let mut x_err: f64 = 0.0;
    for ((slot, d), x_tel) in trace.slots.iter().zip(&dc).zip(&telescoped) {
        i_err = i_err.max((slot.i_eh_end - d.i_eh).abs() / i_scale);
        if slot.i_id_peak > 0.0 {
            settle = settle.max(slot.i_id_end.abs() / slot.i_id_peak);
        }
        x_err = x_err.max((x_tel - d.p_harv.sqrt()).abs() / x_scale);
    }
    Ok(vec![
        Measurement::new("i_eh_rel_err", i_err, limits::TRANSIENT_REL),
        Measurement::new("i_id_end_over_peak", settle, limits::TRANSIENT_REL),
        Measurement::new("telescoped_x_rel_err", x_err, limits::TRANSIENT_REL),
    ])
}

/// Criterion 9: steady-state assumption of the slot receiver.
pub fn transient_steady_state(settings: &ValidationSettings) -> CriterionReport {
    let title = format!("transient chain at T = {:e} s", settings.period);
    run(9, &title, || transient_figures(settings, settings.period))
}

/// Energy-signal powers of the tradeoff check: 0 and 30 log-spaced points
/// up to 200 mW.
pub fn tradeoff_power_grid() -> Vec<f64> {
    let mut grid = vec![0.0];
    grid.extend(logspace(1e-4, 0.2, 30));
    grid
}

pub const TRADEOFF_PEAKS: [f64; 3] = [1e-3, 1e-2, 0.1];

/// Criterion 10: monotone rate-power frontier and multi-junction dominance.
pub fn tradeoff_frontier(settings: &ValidationSettings) -> CriterionReport {
    run(10, "rate-power frontier", || {
        let grid = tradeoff_power_grid();
        let mut power_drop: f64 = 0.0;
        let mut rate_rise: f64 = 0.0;
        let mut dominance_gap: f64 = 0.0;
        for n in [1usize, 4] {
            let rx = settings.closed_form_receiver(settings.receiver(n)?);
            let states: Vec<_> = grid
                .iter()
                .map(|&p| settings.state(n, 0.0, p))
                .collect::<Result<_>>()?;
            for a_sq in TRADEOFF_PEAKS {
                let mut prev: Option<(f64, f64)> = None;
                for st in &states {
                    let ctx = InfoContext::new(a_sq, st, &rx, EhModelKind::closed_form_for(n))?;
                    let (pw, rate) = (ctx.avg_power_optimal(), max_rate(&ctx, &settings.noise));
                    if let Some((pp, pr)) = prev {
                        power_drop = power_drop.max((pp - pw) / pp.max(f64::MIN_POSITIVE));
                        rate_rise = rate_rise.max(rate - pr);
                    }
                    prev = Some((pw, rate));
                }
            }
        }
        let rx1 = settings.closed_form_receiver(&settings.receiver1);
        let rx4 = settings.closed_form_receiver(&settings.receiver4);
        for &p in &grid {
            let st1 = settings.state(1, 0.7, p)?;
            let st4 = settings.state(4, 0.7, p)?;
            for a_sq in TRADEOFF_PEAKS {
                let p1 = InfoContext::new(a_sq, &st1, &rx1, EhModelKind::ClosedFormSingle)?
                    .avg_power_optimal();
                let p4 = InfoContext::new(a_sq, &st4, &rx4, EhModelKind::ClosedFormMulti)?
                    .avg_power_optimal();
                dominance_gap = dominance_gap.max((p1 - p4) / p1);
            }
        }
        Ok(vec![
            Measurement::new("avg_power_rel_drop", power_drop.max(0.0), 0.0),
            Measurement::new("rate_rise_nats", rate_rise.max(0.0), 0.0),
            Measurement::new("n1_over_n4_power_excess", dominance_gap.max(0.0), 0.0),
        ])
    })
}

/// Runs all ten criteria in order.
pub fn run_all(settings: &ValidationSettings) -> ValidationReport {
    ValidationReport {
        criteria: vec![
            oracle_equivalence(settings),
            closed_form_fidelity(settings),
            single_junction_algebra(settings),
            lambert_identity(),
            spectral_sanity(settings),
            average_power_sampling(settings),
            rate_consistency(settings),
            ber_agreement(settings),
            transient_steady_state(settings),
            tradeoff_frontier(settings),
        ],
    }
}
