//! Circuit-level oracle for the receiver.
//!
//! [`solve_dc`] solves the full junction stack as one Newton system, which
//! makes it an independent check on the nested fixed-point solver in
//! [`crate::ehmodel`]. [`simulate_transient`] keeps the finite L and C_d of
//! the filter network so the slot-settling and ripple assumptions behind the
//! DC models can be inspected rather than assumed.

mod dc;
mod transient;

pub use dc::{residual_tolerance, solve_dc, DcOperatingPoint, MAX_NEWTON_ITERATIONS};
pub use transient::{
    simulate_transient, InitialState, SlotSummary, TransientConfig, TransientTrace,
    DEFAULT_STEPS_PER_SLOT, MAX_DT_FRACTION,
};

use std::io::{self, Write};

use crate::format::write_float;

/// Writes the sampled waveforms as CSV: t, i_out, i_eh, i_id, v_c.
pub fn write_waveforms_csv<W: Write>(trace: &TransientTrace, mut out: W) -> io::Result<()> {
    writeln!(out, "t,i_out,i_eh,i_id,v_c")?;
    let mut line = String::new();
    for k in 0..trace.t.len() {
        line.clear();
        for (n, v) in [trace.t[k], trace.i_out[k], trace.i_eh[k], trace.i_id[k], trace.v_c[k]]
            .into_iter()
            .enumerate()
        {
            if n > 0 {
                line.push(',');
            }
            write_float(&mut line, v);
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Writes the integrate-and-dump outputs as CSV: k, r_k.
pub fn write_slots_csv<W: Write>(trace: &TransientTrace, mut out: W) -> io::Result<()> {
    writeln!(out, "k,r_k")?;
    let mut line = String::new();
    for (k, r) in trace.r_k.iter().enumerate() {
        line.clear();
        write_float(&mut line, *r);
        writeln!(out, "{k},{line}")?;
    }
    Ok(())
}
