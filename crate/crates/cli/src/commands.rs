//! The subcommands. Each builds its rows in parallel and returns them in
//! sweep-axis order together with the metadata for the sidecar.

use std::collections::BTreeSet;
use std::io::Write as _;
use std::path::PathBuf;

use rayon::prelude::*;
use serde_json::{json, Map, Value};
use slipt_core::circuitsim::{
    simulate_transient, solve_dc, write_slots_csv, write_waveforms_csv, InitialState,
    TransientConfig, TransientTrace,
};
use slipt_core::ehmodel::{EhModelKind, Harvester};
use slipt_core::infotheory::{
    ber_analytic, ber_monte_carlo, max_rate, rate_for_cdf, InfoContext, InputDistribution,
};
use slipt_core::spectral::{PhotocurrentState, ReceiverSpec};
use slipt_core::validation::{run_all, ValidationSettings};

use crate::config::{CurveModel, Grid, RunConfig};
use crate::output::{Cell, Format, Sink, Table};
use crate::CliError;

type Result<T> = std::result::Result<T, CliError>;

/// Rows of one sweep task, with the model used and its warning.
type RowBatch = (Vec<Vec<Cell>>, EhModelKind, Option<String>);

/// What a command produced besides its table.
#[derive(Debug, Default)]
pub struct Report {
    pub models: BTreeSet<String>,
    pub warnings: BTreeSet<String>,
    pub checks: Map<String, Value>,
    pub extra: Map<String, Value>,
}

/// Sorted, de-duplicated axis values.
fn axis(grid: &Grid) -> Vec<f64> {
    let mut v = grid.values();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

fn junction_axis(cfg: &RunConfig) -> Vec<usize> {
    let mut v = cfg.sweep.junctions.clone();
    v.sort_unstable();
    v.dedup();
    v
}

/// One (N, μ_a, p) operating condition.
struct Condition {
    n: usize,
    mu_a: f64,
    p: f64,
    rx_index: usize,
    state: PhotocurrentState,
}

struct Conditions {
    receivers: Vec<ReceiverSpec>,
    items: Vec<Condition>,
}

fn conditions(cfg: &RunConfig, p_grid: &Grid) -> Result<Conditions> {
    let mut receivers = Vec::new();
    let mut items = Vec::new();
    for n in junction_axis(cfg) {
        let rx = cfg.receiver(n)?;
        for mu_a in axis(&cfg.sweep.mu_a) {
            for p in axis(p_grid) {
                items.push(Condition {
                    n,
                    mu_a,
                    p,
                    rx_index: receivers.len(),
                    state: cfg.state(&rx, mu_a, p)?,
                });
            }
        }
        receivers.push(rx);
    }
    Ok(Conditions { receivers, items })
}

fn receiver_warnings(report: &mut Report, receivers: &[ReceiverSpec]) {
    for rx in receivers {
        for d in rx.deviations() {
            report.warnings.insert(format!("N = {}: {d}", rx.n()));
        }
    }
}

pub fn eh_curve(cfg: &RunConfig) -> Result<(Table, Report)> {
    let conds = conditions(cfg, &cfg.sweep.p_w)?;
    let s_axis = axis(&cfg.sweep.s_w);
    let models = cfg.sweep.models();
    let mut tasks = Vec::new();
    for c in &conds.items {
        for &s in &s_axis {
            for &m in &models {
                tasks.push((c, s, m));
            }
        }
    }
    let rows: Vec<(Vec<Cell>, Vec<String>, bool)> = tasks
        .par_iter()
        .map(|&(c, s, m)| {
            let rx = &conds.receivers[c.rx_index];
            let result = match m {
                CurveModel::Eh(kind) => Harvester::new(kind, &c.state, rx)
                    .and_then(|h| h.solve(c.state.info_current(s)))
                    .map(|sol| (sol.i_eh, sol.p_harv, sol.warnings)),
                CurveModel::CircuitOracle => {
                    let j = c.state.junction_currents(c.state.info_current(s));
                    solve_dc(rx, &j).map(|op| (op.i_eh, rx.r_load * op.i_eh * op.i_eh, Vec::new()))
                }
            };
            let head: Vec<Cell> =
                vec![c.n.into(), c.mu_a.into(), c.p.into(), s.into(), m.tag().into()];
            match result {
                Ok((i, p, w)) => {
                    let mut row = head;
                    row.extend([i.into(), p.into(), Cell::Empty]);
                    (row, w, true)
                }
                Err(e) => {
                    let mut row = head;
                    row.extend([Cell::Empty, Cell::Empty, e.to_string().into()]);
                    (row, Vec::new(), false)
                }
            }
        })
        .collect();

    let mut table = Table::new(&["N", "mu_a", "p_w", "s_w", "model", "i_eh_a", "p_harv_w", "error"]);
    let mut report = Report::default();
    receiver_warnings(&mut report, &conds.receivers);
    let mut ok = 0usize;
    for (row, warnings, good) in rows {
        if good {
            ok += 1;
            if let Cell::Text(tag) = &row[4] {
                report.models.insert(tag.clone());
            }
        }
        for w in warnings {
            report.warnings.insert(w);
        }
        table.push(row);
    }
    let failed = table.rows.len() - ok;
    report.checks.insert("failed_rows".into(), json!(failed));
    if ok == 0 && !table.rows.is_empty() {
        report.extra.insert("all_rows_failed".into(), json!(true));
    }
    Ok((table, report))
}

/// Ensures the command did not fail on every row.
pub fn require_some_rows(table: &Table, report: &Report) -> Result<()> {
    if report.extra.get("all_rows_failed") == Some(&json!(true)) {
        return Err(CliError::Solver(format!(
            "all {} rows failed; see the error column",
            table.rows.len()
        )));
    }
    Ok(())
}

pub fn sensitivity(cfg: &RunConfig) -> Result<(Table, Report)> {
    let conds = conditions(cfg, &cfg.sweep.p_w)?;
    let a_axis = axis(&cfg.sweep.a_sq_w);
    let tasks: Vec<_> = conds
        .items
        .iter()
        .flat_map(|c| a_axis.iter().map(move |&a| (c, a)))
        .collect();
    let rows: Vec<Result<(Vec<Cell>, EhModelKind)>> = tasks
        .par_iter()
        .map(|&(c, a_sq)| {
            let rx = &conds.receivers[c.rx_index];
            let model = cfg.model.for_junctions(c.n);
            let ctx = InfoContext::new(a_sq, &c.state, rx, model)?;
            Ok((
                vec![
                    c.n.into(),
                    c.mu_a.into(),
                    c.p.into(),
                    a_sq.into(),
                    model.tag().into(),
                    ctx.sens.x0.into(),
                    ctx.sens.x_a.into(),
                    ctx.sens.theta.into(),
                ],
                model,
            ))
        })
        .collect();
    let mut table =
        Table::new(&["N", "mu_a", "p_w", "a_sq_w", "model", "x0_sqrt_w", "x_a_sqrt_w", "theta_sqrt_w"]);
    let mut report = Report::default();
    receiver_warnings(&mut report, &conds.receivers);
    for r in rows {
        let (row, model) = r?;
        report.models.insert(model.tag().into());
        table.push(row);
    }
    Ok((table, report))
}

pub fn rate(cfg: &RunConfig) -> Result<(Table, Report)> {
    let conds = conditions(cfg, &cfg.sweep.p_w)?;
    let a_axis = axis(&cfg.sweep.a_sq_w);
    let tasks: Vec<_> = conds
        .items
        .iter()
        .flat_map(|c| a_axis.iter().map(move |&a| (c, a)))
        .collect();
    let noise = cfg.noise;
    let dists = cfg.sweep.dists.clone();
    let rows: Vec<Result<RowBatch>> = tasks
        .par_iter()
        .map(|&(c, a_sq)| {
            let rx = &conds.receivers[c.rx_index];
            let model = cfg.model.for_junctions(c.n);
            let ctx = InfoContext::new(a_sq, &c.state, rx, model)?;
            let mut out = Vec::new();
            let mut rates = Vec::new();
            for &d in &dists {
                let r = match d {
                    InputDistribution::Optimal => max_rate(&ctx, &noise),
                    _ => rate_for_cdf(d, &ctx, &noise)?,
                };
                rates.push((d, r));
                out.push(vec![
                    c.n.into(),
                    c.mu_a.into(),
                    c.p.into(),
                    a_sq.into(),
                    model.tag().into(),
                    d.tag().into(),
                    r.into(),
                ]);
            }
            let opt = rates.iter().find(|(d, _)| *d == InputDistribution::Optimal);
            let uni = rates.iter().find(|(d, _)| *d == InputDistribution::Uniform);
            let violation = match (opt, uni) {
                (Some((_, o)), Some((_, u))) if u > o => Some(format!(
                    "uniform rate {u:e} exceeds optimal {o:e} at N = {}, mu_a = {}, p = {} W, A^2 = {a_sq:e} W",
                    c.n, c.mu_a, c.p
                )),
                _ => None,
            };
            Ok((out, model, violation))
        })
        .collect();
    let mut table = Table::new(&["N", "mu_a", "p_w", "a_sq_w", "model", "dist", "rate_lb_nats"]);
    let mut report = Report::default();
    receiver_warnings(&mut report, &conds.receivers);
    let mut dominated = true;
    for r in rows {
        let (group, model, violation) = r?;
        report.models.insert(model.tag().into());
        if let Some(v) = violation {
            dominated = false;
            report.warnings.insert(v);
        }
        for row in group {
            table.push(row);
        }
    }
    report.checks.insert("optimal_rate_ge_uniform".into(), json!(dominated));
    Ok((table, report))
}

/// SplitMix64 finalizer; decorrelates per-row seeds derived from one seed.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn ber(cfg: &RunConfig) -> Result<(Table, Report)> {
    let conds = conditions(cfg, &cfg.sweep.p_w)?;
    let a_axis = axis(&cfg.sweep.a_sq_w);
    let tasks: Vec<_> = conds
        .items
        .iter()
        .flat_map(|c| a_axis.iter().map(move |&a| (c, a)))
        .collect();
    let noise = cfg.noise;
    let trials = cfg.ber_trials;
    let rows: Vec<Result<(Vec<Cell>, EhModelKind)>> = tasks
        .par_iter()
        .enumerate()
        .map(|(k, &(c, a_sq))| {
            let rx = &conds.receivers[c.rx_index];
            let model = cfg.model.for_junctions(c.n);
            let ctx = InfoContext::new(a_sq, &c.state, rx, model)?;
            let analytic = ber_analytic(&ctx, &noise);
            let mc = if trials == 0 {
                None
            } else {
                Some(ber_monte_carlo(&ctx, &noise, trials, mix(cfg.seed ^ k as u64))?)
            };
            Ok((
                vec![
                    c.n.into(),
                    c.mu_a.into(),
                    c.p.into(),
                    a_sq.into(),
                    model.tag().into(),
                    ctx.sens.theta.into(),
                    analytic.into(),
                    mc.as_ref().map(|m| m.ber).into(),
                    mc.as_ref().map(|m| m.half_width).into(),
                    mc.as_ref().map(|m| m.errors).into(),
                    mc.as_ref().map(|m| m.trials).into(),
                ],
                model,
            ))
        })
        .collect();
    let mut table = Table::new(&[
        "N",
        "mu_a",
        "p_w",
        "a_sq_w",
        "model",
        "theta_sqrt_w",
        "ber_analytic",
        "ber_mc",
        "ci95_half_width",
        "errors",
        "trials",
    ]);
    let mut report = Report::default();
    receiver_warnings(&mut report, &conds.receivers);
    for r in rows {
        let (row, model) = r?;
        report.models.insert(model.tag().into());
        table.push(row);
    }
    report.extra.insert("seed".into(), json!(cfg.seed));
    report
        .extra
        .insert("seed_rule".into(), json!("row k uses splitmix64(seed ^ k)"));
    Ok((table, report))
}

pub fn cdf(cfg: &RunConfig) -> Result<(Table, Report)> {
    let conds = conditions(cfg, &cfg.sweep.p_w)?;
    let s_axis = axis(&cfg.sweep.s_w);
    let a_sq = cfg.info.a_sq;
    let rows: Vec<Result<(Vec<Vec<Cell>>, EhModelKind)>> = conds
        .items
        .par_iter()
        .map(|c| {
            let rx = &conds.receivers[c.rx_index];
            let model = cfg.model.for_junctions(c.n);
            let ctx = InfoContext::new(a_sq, &c.state, rx, model)?;
            let mut out = Vec::with_capacity(s_axis.len());
            for &s in &s_axis {
                let f_opt = if ctx.sens.theta > 0.0 {
                    Some(ctx.cdf(InputDistribution::Optimal, s)?)
                } else {
                    None
                };
                let f_uni = if a_sq > 0.0 {
                    Some(ctx.cdf(InputDistribution::Uniform, s)?)
                } else {
                    None
                };
                out.push(vec![
                    c.n.into(),
                    c.mu_a.into(),
                    c.p.into(),
                    a_sq.into(),
                    model.tag().into(),
                    s.into(),
                    f_opt.into(),
                    f_uni.into(),
                ]);
            }
            Ok((out, model))
        })
        .collect();
    let mut table =
        Table::new(&["N", "mu_a", "p_w", "a_sq_w", "model", "s_w", "f_optimal", "f_uniform"]);
    let mut report = Report::default();
    receiver_warnings(&mut report, &conds.receivers);
    for r in rows {
        let (group, model) = r?;
        report.models.insert(model.tag().into());
        for row in group {
            table.push(row);
        }
    }
    Ok((table, report))
}

pub fn tradeoff(cfg: &RunConfig) -> Result<(Table, Report)> {
    if cfg.tradeoff_p_w.is_empty() {
        return Err(CliError::Config("tradeoff.p_w is empty".into()));
    }
    let p_axis = axis(&cfg.tradeoff_p_w);
    let a_axis = axis(&cfg.tradeoff_a_sq_w);
    let mut receivers = Vec::new();
    let mut tasks = Vec::new();
    for n in junction_axis(cfg) {
        let rx = cfg.receiver(n)?;
        receivers.push(rx);
        for mu_a in axis(&cfg.sweep.mu_a) {
            for &a_sq in &a_axis {
                for &p in &p_axis {
                    tasks.push((receivers.len() - 1, n, mu_a, a_sq, p));
                }
            }
        }
    }
    let noise = cfg.noise;
    let dists = cfg.sweep.dists.clone();
    let points: Vec<Result<(Vec<slipt_core::infotheory::RatePowerPoint>, EhModelKind)>> = tasks
        .par_iter()
        .map(|&(ri, n, mu_a, a_sq, p)| {
            let rx = &receivers[ri];
            let state = cfg.state(rx, mu_a, p)?;
            let model = cfg.model.for_junctions(n);
            let ctx = InfoContext::new(a_sq, &state, rx, model)?;
            let pts = dists
                .iter()
                .map(|&d| ctx.rate_power_point(d, &noise, p))
                .collect::<slipt_core::Result<Vec<_>>>()?;
            Ok((pts, model))
        })
        .collect();

    let mut table = Table::new(&["N", "mu_a", "a_sq_w", "p_w", "dist", "rate_lb_nats", "avg_power_w"]);
    let mut report = Report::default();
    receiver_warnings(&mut report, &receivers);
    let mut monotone = true;
    let mut dominated = true;
    let mut prev: Option<(usize, f64, f64, f64, f64)> = None;
    for (&(_, n, mu_a, a_sq, p), r) in tasks.iter().zip(points) {
        let (pts, model) = r?;
        report.models.insert(model.tag().into());
        let opt = pts.iter().find(|q| q.dist_kind == InputDistribution::Optimal);
        let uni = pts.iter().find(|q| q.dist_kind == InputDistribution::Uniform);
        if let (Some(o), Some(u)) = (opt, uni) {
            if u.rate > o.rate {
                dominated = false;
                report.warnings.insert(format!(
                    "uniform rate exceeds optimal at N = {n}, mu_a = {mu_a}, A^2 = {a_sq:e} W, p = {p:e} W"
                ));
            }
        }
        if let Some(o) = opt {
            if let Some((pn, pmu, pa, prate, ppow)) = prev {
                if pn == n && pmu == mu_a && pa == a_sq && (o.avg_power < ppow || o.rate > prate) {
                    monotone = false;
                    report.warnings.insert(format!(
                        "frontier not monotone at N = {n}, mu_a = {mu_a}, A^2 = {a_sq:e} W, p = {p:e} W"
                    ));
                }
            }
            prev = Some((n, mu_a, a_sq, o.rate, o.avg_power));
        }
        for q in pts {
            table.push(vec![
                n.into(),
                mu_a.into(),
                a_sq.into(),
                p.into(),
                q.dist_kind.tag().into(),
                q.rate.into(),
                q.avg_power.into(),
            ]);
        }
    }
    report.checks.insert("frontier_monotone".into(), json!(monotone));
    report.checks.insert("optimal_rate_ge_uniform".into(), json!(dominated));
    Ok((table, report))
}

/// Path of the slot table written next to the waveform file.
pub fn default_slots_path(out: &std::path::Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match out.extension() {
        Some(ext) => format!("{stem}.slots.{}", ext.to_string_lossy()),
        None => format!("{stem}.slots"),
    };
    out.with_file_name(name)
}

pub fn transient(cfg: &RunConfig) -> Result<(TransientTrace, ReceiverSpec, Report)> {
    let t = &cfg.transient;
    let rx = cfg.receiver(t.junctions)?;
    let state = cfg.state(&rx, t.mu_a, t.p_w)?;
    let symbols = t.symbols.values();
    let config = TransientConfig {
        period: cfg.info.period,
        dt: t.dt_s,
        start: if t.cold_start {
            InitialState::Cold
        } else {
            InitialState::Warm
        },
        a_sq: cfg.info.a_sq,
        record_every: t.record_every,
    };
    let trace = simulate_transient(&rx, &state, &symbols, &config)?;
    let mut report = Report::default();
    receiver_warnings(&mut report, std::slice::from_ref(&rx));
    report.models.insert("transient-trapezoidal".into());
    report.extra.insert("dt_s".into(), json!(trace.dt));
    report.extra.insert("period_s".into(), json!(trace.period));
    report
        .extra
        .insert("max_kcl_residual_a".into(), json!(trace.max_kcl_residual));
    Ok((trace, rx, report))
}

pub fn write_transient(trace: &TransientTrace, waves: &Sink, slots: Option<&Sink>) -> Result<()> {
    let mut w = waves.open()?;
    match waves.format {
        Format::Csv => write_waveforms_csv(trace, &mut w)?,
        Format::Json => waveform_table(trace).write(Format::Json, &mut w)?,
    }
    w.flush()?;
    if let Some(s) = slots {
        let mut w = s.open()?;
        match s.format {
            Format::Csv => write_slots_csv(trace, &mut w)?,
            Format::Json => slot_table(trace).write(Format::Json, &mut w)?,
        }
        w.flush()?;
    }
    Ok(())
}

pub fn waveform_table(trace: &TransientTrace) -> Table {
    let mut t = Table::new(&["t", "i_out", "i_eh", "i_id", "v_c"]);
    for k in 0..trace.t.len() {
        t.push(vec![
            trace.t[k].into(),
            trace.i_out[k].into(),
            trace.i_eh[k].into(),
            trace.i_id[k].into(),
            trace.v_c[k].into(),
        ]);
    }
    t
}

pub fn slot_table(trace: &TransientTrace) -> Table {
    let mut t = Table::new(&["k", "r_k"]);
    for (k, r) in trace.r_k.iter().enumerate() {
        t.push(vec![k.into(), (*r).into()]);
    }
    t
}

pub fn validate(cfg: &RunConfig) -> Result<(Table, Report, bool)> {
    let settings = ValidationSettings {
        receiver1: cfg.receiver(1)?,
        receiver4: cfg.receiver(4)?,
        info: cfg.info(),
        noise: cfg.noise,
        seed: cfg.seed,
        ber_trials: cfg.validate.ber_trials,
        sampler_draws: cfg.validate.sampler_draws,
        period: cfg.validate.period_s,
        closed_form_r_sigma_scale: cfg.validate.fault_r_sigma_scale,
    };
    let report = run_all(&settings);
    let mut table = Table::new(&[
        "criterion",
        "title",
        "measurement",
        "value",
        "limit",
        "passed",
        "seconds",
        "error",
    ]);
    for c in &report.criteria {
        eprintln!("{}", c.summary());
        if c.measurements.is_empty() {
            table.push(vec![
                (c.id as usize).into(),
                c.title.as_str().into(),
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                false.into(),
                c.seconds.into(),
                c.error.clone().into(),
            ]);
        }
        for m in &c.measurements {
            table.push(vec![
                (c.id as usize).into(),
                c.title.as_str().into(),
                m.name.as_str().into(),
                m.value.into(),
                m.limit.into(),
                m.passed().into(),
                c.seconds.into(),
                c.error.clone().into(),
            ]);
        }
    }
    let mut out = Report::default();
    receiver_warnings(&mut out, &[settings.receiver1.clone(), settings.receiver4.clone()]);
    let failures: Vec<Value> = report.failures().iter().map(|c| json!(c.id)).collect();
    out.checks.insert("all_passed".into(), json!(report.all_passed()));
    out.checks.insert("failed_criteria".into(), Value::Array(failures));
    if cfg.validate.fault_r_sigma_scale != 1.0 {
        out.warnings.insert(format!(
            "fault injection: closed forms see R_sigma scaled by {}",
            cfg.validate.fault_r_sigma_scale
        ));
    }
    Ok((table, out, report.all_passed()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> RunConfig {
        let mut cfg = RunConfig::default();
        for s in [
            "sweep.junctions=1,4",
            "sweep.mu_a=0,0.7",
            "sweep.p_w=0,0.01",
            "sweep.s_w=0,0.05,0.1",
            "sweep.a_sq_w=0,1e-4,0.01",
            "ber.trials=20000",
        ] {
            cfg.apply_override(s).unwrap();
        }
        cfg
    }

    fn col(t: &Table, name: &str) -> usize {
        t.columns.iter().position(|c| *c == name).unwrap()
    }

    fn f(c: &Cell) -> f64 {
        match c {
            Cell::Float(v) => *v,
            other => panic!("not a float: {other:?}"),
        }
    }

    #[test]
    fn dark_eh_curve_is_zero() {
        let mut cfg = small();
        for s in ["sweep.s_w=0", "sweep.p_w=0", "sweep.mu_a=0"] {
            cfg.apply_override(s).unwrap();
        }
        let (t, _) = eh_curve(&cfg).unwrap();
        let p = col(&t, "p_harv_w");
        let err = col(&t, "error");
        for row in &t.rows {
            if row[err] == Cell::Empty {
                assert_eq!(f(&row[p]), 0.0, "{row:?}");
            }
        }
    }

    #[test]
    fn eh_curve_flags_mismatched_models_per_row() {
        let (t, r) = eh_curve(&small()).unwrap();
        let model = col(&t, "model");
        let err = col(&t, "error");
        let n = col(&t, "N");
        for row in &t.rows {
            let single_only = matches!(&row[model], Cell::Text(m) if m == "closed-form-single"
                || m == "baseline-single-diode" || m == "baseline-mpp");
            let four = row[n] == Cell::Int(4);
            assert_eq!(row[err] != Cell::Empty, single_only && four, "{row:?}");
        }
        assert!(r.models.contains("circuit-oracle"));
        require_some_rows(&t, &r).unwrap();
    }

    #[test]
    fn all_rows_failing_is_a_solver_error() {
        let mut cfg = small();
        cfg.apply_override("sweep.junctions=4").unwrap();
        cfg.apply_override("sweep.models=closed-form-single").unwrap();
        let (t, r) = eh_curve(&cfg).unwrap();
        assert!(matches!(require_some_rows(&t, &r), Err(CliError::Solver(_))));
    }

    #[test]
    fn closed_forms_track_the_oracle_column() {
        let (t, _) = eh_curve(&small()).unwrap();
        let (model, p, s) = (col(&t, "model"), col(&t, "p_harv_w"), col(&t, "s_w"));
        for chunk in t.rows.chunks(EhModelKind::ALL.len() + 1) {
            let oracle = f(&chunk.last().unwrap()[p]);
            assert_eq!(chunk.last().unwrap()[model], Cell::from("circuit-oracle"));
            for row in chunk {
                let is_closed = matches!(&row[model], Cell::Text(m) if m.starts_with("closed-form"));
                // A dark four-junction stack leaves three junctions unlit, far
                // outside the high-illumination regime of the closed form.
                let dark_stack = row[0] == Cell::Int(4) && f(&row[1]) == 0.0 && f(&row[2]) == 0.0;
                if is_closed && !dark_stack && row[p] != Cell::Empty && f(&row[s]) > 0.0 {
                    let rel = (f(&row[p]) - oracle).abs() / oracle;
                    assert!(rel < 5e-2, "{row:?} vs {oracle}");
                }
            }
        }
    }

    #[test]
    fn zero_peak_power_rows_are_degenerate() {
        let cfg = small();
        let (t, _) = sensitivity(&cfg).unwrap();
        let (a, th) = (col(&t, "a_sq_w"), col(&t, "theta_sqrt_w"));
        for row in t.rows.iter().filter(|r| f(&r[a]) == 0.0) {
            assert_eq!(f(&row[th]), 0.0);
        }
        let (t, r) = rate(&cfg).unwrap();
        let (a, rt) = (col(&t, "a_sq_w"), col(&t, "rate_lb_nats"));
        for row in t.rows.iter().filter(|r| f(&r[a]) == 0.0) {
            assert_eq!(f(&row[rt]), 0.0);
        }
        assert_eq!(r.checks["optimal_rate_ge_uniform"], json!(true));
        let (t, _) = ber(&cfg).unwrap();
        let (a, b) = (col(&t, "a_sq_w"), col(&t, "ber_analytic"));
        for row in t.rows.iter().filter(|r| f(&r[a]) == 0.0) {
            assert_eq!(f(&row[b]), 0.5);
        }
    }

    #[test]
    fn tradeoff_without_excitation_reports_dark_power() {
        let mut cfg = small();
        for s in ["sweep.mu_a=0", "tradeoff.p_w=0", "tradeoff.a_sq_w=0", "sweep.junctions=1"] {
            cfg.apply_override(s).unwrap();
        }
        let (t, _) = tradeoff(&cfg).unwrap();
        for row in &t.rows {
            assert_eq!(f(&row[col(&t, "rate_lb_nats")]), 0.0);
            assert_eq!(f(&row[col(&t, "avg_power_w")]), 0.0);
        }
    }

    #[test]
    fn tradeoff_frontier_is_monotone_for_four_junctions() {
        let mut cfg = small();
        for s in ["sweep.junctions=4", "sweep.mu_a=0", "tradeoff.p_w=0,logspace(1e-4,0.2,12)"] {
            cfg.apply_override(s).unwrap();
        }
        let (_, r) = tradeoff(&cfg).unwrap();
        assert_eq!(r.checks["frontier_monotone"], json!(true));
        assert_eq!(r.checks["optimal_rate_ge_uniform"], json!(true));
    }

    #[test]
    fn cdf_columns_are_bounded_and_monotone() {
        let (t, _) = cdf(&small()).unwrap();
        let (fo, fu) = (col(&t, "f_optimal"), col(&t, "f_uniform"));
        for chunk in t.rows.chunks(3) {
            let mut last = -1.0;
            for row in chunk {
                let v = f(&row[fo]);
                assert!((0.0..=1.0).contains(&v) && v >= last);
                assert!((0.0..=1.0).contains(&f(&row[fu])));
                last = v;
            }
        }
    }

    #[test]
    fn slots_path_sits_next_to_waveforms() {
        assert_eq!(
            default_slots_path(std::path::Path::new("out/wave.csv")),
            PathBuf::from("out/wave.slots.csv")
        );
    }
}
