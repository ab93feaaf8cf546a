//! Time-domain simulation of the receiver filter network.
//!
//! The junction stack and its series resistance drive a node with voltage u.
//! Two branches leave the node: L in series with R_L (EH path, current i_L)
//! and C_d in series with R_d (information path, current i_ID). The state is
//! (i_L, v_C); the stack voltages and i_out are algebraic and re-solved at
//! every step.

use serde::{Deserialize, Serialize};

use super::dc::{solve_dc, Stack};
use crate::error::{Error, Result};
use crate::spectral::{PhotocurrentState, ReceiverSpec};

/// Default number of integrator steps per symbol slot.
pub const DEFAULT_STEPS_PER_SLOT: usize = 10_000;
/// Coarsest admissible step, as a fraction of the symbol period.
pub const MAX_DT_FRACTION: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitialState {
    /// Filter state at the DC operating point of the first symbol.
    Warm,
    /// All currents and the capacitor voltage start at zero.
    Cold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransientConfig {
    /// Symbol period T, s.
    pub period: f64,
    /// Step, s. `None` means T / 10⁴.
    pub dt: Option<f64>,
    pub start: InitialState,
    /// Peak transmit power A², W; symbols must lie in [0, A²].
    pub a_sq: f64,
    /// Keep every n-th step in the sampled waveform.
    pub record_every: usize,
}

impl Default for TransientConfig {
    fn default() -> Self {
        TransientConfig {
            period: 1e-3,
            dt: None,
            start: InitialState::Warm,
            a_sq: 0.1,
            record_every: 1,
        }
    }
}

impl TransientConfig {
    fn steps_per_slot(&self) -> Result<usize> {
        if !(self.period > 0.0 && self.period.is_finite()) {
            return Err(Error::Domain(format!("symbol period {} s", self.period)));
        }
        let dt = self.dt.unwrap_or(self.period / DEFAULT_STEPS_PER_SLOT as f64);
        if !(dt > 0.0) || dt > self.period * MAX_DT_FRACTION * (1.0 + 1e-12) {
            return Err(Error::Domain(format!(
                "step {dt:e} s exceeds T/1000 = {:e} s",
                self.period * MAX_DT_FRACTION
            )));
        }
        Ok((self.period / dt).round() as usize)
    }
}

/// Per-slot figures of the integrate-and-dump receiver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotSummary {
    pub k: usize,
    /// Transmit power of the slot, W.
    pub s: f64,
    /// ∫ R_d i_ID dt over the slot, V·s.
    pub r_k: f64,
    /// i_L at the end of the slot, A.
    pub i_eh_end: f64,
    /// i_ID at the end of the slot, A.
    pub i_id_end: f64,
    /// max |i_ID| within the slot, A.
    pub i_id_peak: f64,
    /// Time average of R_L i_L² over the slot, W.
    pub mean_load_power: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransientTrace {
    pub t: Vec<f64>,
    pub i_out: Vec<f64>,
    pub i_eh: Vec<f64>,
    pub i_id: Vec<f64>,
    pub v_c: Vec<f64>,
    /// r[k] per slot, V·s.
    pub r_k: Vec<f64>,
    pub slots: Vec<SlotSummary>,
    /// Capacitor voltage at t = 0, V.
    pub v_c0: f64,
    pub dt: f64,
    pub period: f64,
    /// Largest |i_out − i_L − i_ID| over accepted steps, A.
    pub max_kcl_residual: f64,
}

impl TransientTrace {
    /// Receiver output recovered from the running sum of r[p]:
    /// (v_C(0) + Σ_{p<=k} r[p] / (R_d C_d)) / √R_L.
    pub fn telescoped_outputs(&self, rx: &ReceiverSpec) -> Vec<f64> {
        let tau = rx.r_info * rx.c_info;
        let mut acc = self.v_c0;
        self.r_k
            .iter()
            .map(|r| {
                acc += r / tau;
                acc / rx.r_load.sqrt()
            })
            .collect()
    }
}

/// Algebraic part of the network at one instant.
#[derive(Debug, Clone)]
struct Node {
    v: Vec<f64>,
    i_out: f64,
    u: f64,
}

fn solve_node(
    rx: &ReceiverSpec,
    j: &[f64],
    r_eff: f64,
    offset: f64,
    start: &Node,
    r_series: f64,
    time: f64,
) -> Result<Node> {
    let stack = Stack {
        rx,
        j,
        r_eff,
        offset,
    };
    let sol = stack.solve(&start.v, start.i_out).map_err(|e| Error::Integrator {
        time,
        detail: e.to_string(),
    })?;
    let u = sol.v.iter().sum::<f64>() - sol.i * r_series;
    Ok(Node {
        v: sol.v,
        i_out: sol.i,
        u,
    })
}

/// Integrates the network over `symbols.len()` slots with the trapezoidal rule.
pub fn simulate_transient(
    rx: &ReceiverSpec,
    state: &PhotocurrentState,
    symbols: &[f64],
    config: &TransientConfig,
) -> Result<TransientTrace> {
    rx.validate()?;
    if symbols.is_empty() {
        return Err(Error::Domain("empty symbol sequence".into()));
    }
    if let Some(s) = symbols
        .iter()
        .find(|s| !(**s >= 0.0 && **s <= config.a_sq * (1.0 + 1e-12)))
    {
        return Err(Error::Domain(format!(
            "symbol {s:e} W outside [0, A² = {:e} W]",
            config.a_sq
        )));
    }
    if state.n() != rx.n() {
        return Err(Error::Config("photocurrent state and receiver differ in N".into()));
    }
    let steps = config.steps_per_slot()?;
    let dt = config.period / steps as f64;
    let record_every = config.record_every.max(1);

    let (r_l, r_d) = (rx.r_load, rx.r_info);
    let r_series: f64 = rx.junctions.iter().map(|jn| jn.r_s).sum();
    let a = dt / (2.0 * rx.inductance);
    let b = dt / (2.0 * rx.c_info);

    let j0 = state.junction_currents(state.info_current(symbols[0]));
    let (mut i_l, mut v_c, mut node) = match config.start {
        InitialState::Warm => {
            let op = solve_dc(rx, &j0)?;
            let node = Node {
                v: op.v,
                i_out: op.i_eh,
                u: op.i_eh * r_l,
            };
            (op.i_eh, node.u, node)
        }
        InitialState::Cold => {
            let zero = Node {
                v: vec![0.0; rx.n()],
                i_out: 0.0,
                u: 0.0,
            };
            (0.0, 0.0, zero)
        }
    };
    let v_c0 = v_c;

    let capacity = symbols.len() * steps / record_every + 2;
    let mut trace = TransientTrace {
        t: Vec::with_capacity(capacity),
        i_out: Vec::with_capacity(capacity),
        i_eh: Vec::with_capacity(capacity),
        i_id: Vec::with_capacity(capacity),
        v_c: Vec::with_capacity(capacity),
        r_k: Vec::with_capacity(symbols.len()),
        slots: Vec::with_capacity(symbols.len()),
        v_c0,
        dt,
        period: config.period,
        max_kcl_residual: 0.0,
    };

    let mut first = true;
    for (k, &s) in symbols.iter().enumerate() {
        let t0 = k as f64 * config.period;
        let j = state.junction_currents(state.info_current(s));

        // Right limit at the slot boundary: states are continuous, the stack
        // jumps to the new drive. i_out = i_L + (u − v_C)/R_d.
        node = solve_node(
            rx,
            &j,
            r_series + r_d,
            r_d * i_l - v_c,
            &node,
            r_series,
            t0,
        )?;
        let mut i_id = (node.u - v_c) / r_d;
        if first {
            push_sample(&mut trace, t0, &node, i_l, i_id, v_c);
            first = false;
        }

        let mut r = 0.0;
        let mut peak = i_id.abs();
        let mut energy = 0.0;
        for step in 1..=steps {
            let t = t0 + step as f64 * dt;
            // Companion models: i_L' and i_ID' are affine in the new node voltage.
            let il_base = (i_l + a * (node.u - r_l * i_l)) / (1.0 + a * r_l);
            let il_gain = a / (1.0 + a * r_l);
            let id_base = -(v_c + b * i_id) / (r_d + b);
            let id_gain = 1.0 / (r_d + b);
            let alpha = il_base + id_base;
            let beta = il_gain + id_gain;
            let next = solve_node(rx, &j, r_series + 1.0 / beta, alpha / beta, &node, r_series, t)?;

            let i_l_new = il_base + il_gain * next.u;
            let i_id_new = id_base + id_gain * next.u;
            let v_c_new = v_c + b * (i_id + i_id_new);
            let kcl = (next.i_out - i_l_new - i_id_new).abs();
            trace.max_kcl_residual = trace.max_kcl_residual.max(kcl);

            r += r_d * 0.5 * dt * (i_id + i_id_new);
            energy += r_l * 0.5 * dt * (i_l * i_l + i_l_new * i_l_new);
            peak = peak.max(i_id_new.abs());

            i_l = i_l_new;
            i_id = i_id_new;
            v_c = v_c_new;
            node = next;
            if step % record_every == 0 {
                push_sample(&mut trace, t, &node, i_l, i_id, v_c);
            }
        }
        trace.r_k.push(r);
        trace.slots.push(SlotSummary {
            k,
            s,
            r_k: r,
            i_eh_end: i_l,
            i_id_end: i_id,
            i_id_peak: peak,
            mean_load_power: energy / config.period,
        });
    }
    Ok(trace)
}

fn push_sample(trace: &mut TransientTrace, t: f64, node: &Node, i_l: f64, i_id: f64, v_c: f64) {
    trace.t.push(t);
    trace.i_out.push(node.i_out);
    trace.i_eh.push(i_l);
    trace.i_id.push(i_id);
    trace.v_c.push(v_c);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ehmodel::accurate_for_currents;

    fn dark_single() -> (ReceiverSpec, PhotocurrentState) {
        let rx = ReceiverSpec::single_junction();
        let st = PhotocurrentState::new(vec![0.0], 0.553, 0).unwrap();
        (rx, st)
    }

    #[test]
    fn zero_drive_gives_zero_trace() {
        let (rx, st) = dark_single();
        let cfg = TransientConfig {
            start: InitialState::Cold,
            dt: Some(1e-6),
            ..Default::default()
        };
        let tr = simulate_transient(&rx, &st, &[0.0, 0.0], &cfg).unwrap();
        assert!(tr.i_out.iter().chain(&tr.v_c).chain(&tr.i_id).all(|&x| x == 0.0));
        assert!(tr.r_k.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn constant_drive_stays_at_dc_point() {
        let (rx, st) = dark_single();
        let cfg = TransientConfig {
            dt: Some(1e-6),
            ..Default::default()
        };
        let tr = simulate_transient(&rx, &st, &[0.05; 3], &cfg).unwrap();
        let acc = accurate_for_currents(&rx, &[0.553 * 0.05]).unwrap();
        for slot in &tr.slots {
            assert!((slot.i_eh_end - acc.i_eh).abs() <= 1e-3 * acc.i_eh);
            assert!((slot.mean_load_power - acc.p_harv).abs() <= 5e-3 * acc.p_harv);
        }
    }

    #[test]
    fn coarse_steps_and_bad_symbols_are_rejected() {
        let (rx, st) = dark_single();
        let cfg = TransientConfig {
            dt: Some(1e-5),
            ..Default::default()
        };
        assert!(matches!(simulate_transient(&rx, &st, &[0.0], &cfg), Err(Error::Domain(_))));
        let cfg = TransientConfig::default();
        assert!(simulate_transient(&rx, &st, &[], &cfg).is_err());
        assert!(simulate_transient(&rx, &st, &[0.2], &cfg).is_err());
    }

    #[test]
    fn capacitor_charge_telescopes_exactly() {
        let (rx, st) = dark_single();
        let cfg = TransientConfig {
            dt: Some(1e-6),
            start: InitialState::Cold,
            ..Default::default()
        };
        let tr = simulate_transient(&rx, &st, &[0.1, 0.0, 0.1], &cfg).unwrap();
        // Σ r[p] / (R_d C_d) is the capacitor voltage change by construction.
        let total: f64 = tr.r_k.iter().sum();
        let dv = tr.v_c.last().unwrap() - tr.v_c0;
        assert!((total / (rx.r_info * rx.c_info) - dv).abs() <= 1e-9 * dv.abs().max(1e-12));
        assert!(tr.max_kcl_residual <= 1e-12);
    }
}
