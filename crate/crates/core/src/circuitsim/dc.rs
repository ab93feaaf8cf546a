//! Damped Newton solution of the junction stack.

use serde::{Deserialize, Serialize};

use crate::ehmodel::{phi, phi_slope};
use crate::error::{solver_err, Error, Result};
use crate::spectral::ReceiverSpec;

pub const MAX_NEWTON_ITERATIONS: usize = 200;
const MAX_HALVINGS: usize = 80;

/// DC operating point of the receiver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DcOperatingPoint {
    /// Junction voltages, V.
    pub v: Vec<f64>,
    /// EH branch current, A.
    pub i_eh: f64,
    pub iterations: usize,
    /// Max-norm of the KCL residual, A.
    pub residual_norm: f64,
}

/// Residual below which the system counts as solved.
///
/// 1e-12 relative to max(1 µA, |i|), but never below the rounding floor of
/// Φ itself, which is a few ulps of the largest photocurrent.
pub fn residual_tolerance(j: &[f64], i: f64) -> f64 {
    let j_max = j.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let relative = 1e-12 * i.abs().max(1e-6);
    let floor = 8.0 * f64::EPSILON * (j_max + i.abs());
    relative.max(floor)
}

/// The stack with a linear closing branch:
/// Φ_n(v_n) = i for every junction and Σ v_n − r_eff·i + offset = 0.
///
/// For the DC problem r_eff = R_Σ and offset = 0; the transient integrator
/// folds the companion models of L and C_d into the same two numbers.
pub(crate) struct Stack<'a> {
    pub rx: &'a ReceiverSpec,
    pub j: &'a [f64],
    pub r_eff: f64,
    pub offset: f64,
}

pub(crate) struct StackSolution {
    pub v: Vec<f64>,
    pub i: f64,
    pub iterations: usize,
    pub residual_norm: f64,
}

impl Stack<'_> {
    /// Residual vector in amps (the closing row is divided by r_eff).
    fn residual(&self, v: &[f64], i: f64, out: &mut [f64]) -> Result<()> {
        let n = v.len();
        let v_t = self.rx.v_t;
        let mut sum = 0.0;
        for k in 0..n {
            out[k] = phi(v[k], &self.rx.junctions[k], self.j[k], v_t)? - i;
            sum += v[k];
        }
        out[n] = (sum - self.r_eff * i + self.offset) / self.r_eff;
        Ok(())
    }

    pub fn solve(&self, v0: &[f64], i0: f64) -> Result<StackSolution> {
        let n = self.rx.n();
        let v_t = self.rx.v_t;
        let mut v = v0.to_vec();
        let mut i = i0;
        let mut f = vec![0.0; n + 1];
        self.residual(&v, i, &mut f)?;
        let mut norm = max_norm(&f);
        let mut merit = sum_sq(&f);

        let mut dv = vec![0.0; n];
        let mut trial_v = vec![0.0; n];
        let mut trial_f = vec![0.0; n + 1];

        for iter in 1..=MAX_NEWTON_ITERATIONS {
            if norm <= residual_tolerance(self.j, i) {
                return Ok(StackSolution {
                    v,
                    i,
                    iterations: iter,
                    residual_norm: norm,
                });
            }

            // Arrow-shaped Jacobian: diagonal Φ'_n, a −1 column for i and a
            // closing row (1, …, 1, −r_eff)/r_eff. Eliminate the diagonal.
            let mut denom = -self.r_eff;
            let mut rhs = -f[n] * self.r_eff;
            let mut slopes = Vec::with_capacity(n);
            for k in 0..n {
                let g = phi_slope(v[k], &self.rx.junctions[k], v_t)?;
                denom += 1.0 / g;
                rhs += f[k] / g;
                slopes.push(g);
            }
            let di = rhs / denom;
            for k in 0..n {
                dv[k] = (di - f[k]) / slopes[k];
            }

            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..MAX_HALVINGS {
                for k in 0..n {
                    trial_v[k] = v[k] + t * dv[k];
                }
                let trial_i = i + t * di;
                match self.residual(&trial_v, trial_i, &mut trial_f) {
                    Ok(()) => {
                        let m = sum_sq(&trial_f);
                        if m < merit {
                            v.copy_from_slice(&trial_v);
                            i = trial_i;
                            f.copy_from_slice(&trial_f);
                            merit = m;
                            norm = max_norm(&f);
                            accepted = true;
                            break;
                        }
                    }
                    Err(Error::Saturation { .. }) => {}
                    Err(e) => return Err(e),
                }
                t *= 0.5;
            }
            if !accepted {
                // No descent left: either at the rounding floor or stuck.
                if norm <= 1e3 * residual_tolerance(self.j, i) {
                    return Ok(StackSolution {
                        v,
                        i,
                        iterations: iter,
                        residual_norm: norm,
                    });
                }
                return Err(solver_err(
                    "solve_dc",
                    format!("line search stalled at i = {i:e} A, v = {v:?}, residual {norm:e} A"),
                ));
            }
        }
        Err(solver_err(
            "solve_dc",
            format!(
                "no convergence in {MAX_NEWTON_ITERATIONS} iterations; last iterate \
                 i = {i:e} A, v = {v:?}, residual {norm:e} A"
            ),
        ))
    }
}

fn max_norm(f: &[f64]) -> f64 {
    f.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

fn sum_sq(f: &[f64]) -> f64 {
    f.iter().map(|x| x * x).sum()
}

/// DC operating point for per-junction photocurrents `j`, by Newton's method
/// on all N + 1 unknowns from the zero start.
pub fn solve_dc(rx: &ReceiverSpec, j: &[f64]) -> Result<DcOperatingPoint> {
    if j.len() != rx.n() {
        return Err(Error::Config(format!(
            "{} photocurrents for {} junctions",
            j.len(),
            rx.n()
        )));
    }
    if j.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
        return Err(Error::Domain(format!("photocurrents must be >= 0, got {j:?}")));
    }
    let stack = Stack {
        rx,
        j,
        r_eff: rx.r_sigma(),
        offset: 0.0,
    };
    let sol = stack.solve(&vec![0.0; rx.n()], 0.0)?;
    Ok(DcOperatingPoint {
        v: sol.v,
        i_eh: sol.i,
        iterations: sol.iterations,
        residual_norm: sol.residual_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ehmodel::accurate_for_currents;

    #[test]
    fn dark_receiver_in_one_iteration() {
        let rx = ReceiverSpec::four_junction();
        let op = solve_dc(&rx, &[0.0; 4]).unwrap();
        assert_eq!(op.i_eh, 0.0);
        assert!(op.v.iter().all(|&v| v == 0.0));
        assert_eq!(op.iterations, 1);
    }

    #[test]
    fn single_junction_matches_fixed_point_solver() {
        let rx = ReceiverSpec::single_junction();
        let op = solve_dc(&rx, &[55.29e-3]).unwrap();
        let acc = accurate_for_currents(&rx, &[55.29e-3]).unwrap();
        assert!((op.i_eh - acc.i_eh).abs() <= 1e-9 * acc.i_eh);
    }

    #[test]
    fn asymmetric_stack_limits_on_weakest_junction() {
        let rx = ReceiverSpec::four_junction();
        let j = [50e-3, 5e-3, 0.5e-3, 0.05e-3];
        let op = solve_dc(&rx, &j).unwrap();
        let weakest = op.v.iter().copied().fold(f64::INFINITY, f64::min);
        assert_eq!(weakest, op.v[3]);
        for (n, jn) in rx.junctions.iter().enumerate() {
            let r = phi(op.v[n], jn, j[n], rx.v_t).unwrap() - op.i_eh;
            assert!(r.abs() <= op.residual_norm.max(residual_tolerance(&j, op.i_eh)));
        }
        let sum: f64 = op.v.iter().sum();
        assert!((sum - op.i_eh * rx.r_sigma()).abs() / rx.r_sigma() <= op.residual_norm + 1e-18);
    }

    #[test]
    fn rejects_negative_currents() {
        let rx = ReceiverSpec::single_junction();
        assert!(matches!(solve_dc(&rx, &[-1e-3]), Err(Error::Domain(_))));
        assert!(matches!(solve_dc(&rx, &[1.0, 1.0]), Err(Error::Config(_))));
    }
}
