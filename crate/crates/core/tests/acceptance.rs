//! Acceptance battery. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Tolerances and runtime budgets are pinned here independently of the
//! library; a criterion also fails if the library reports a different
//! bound than the one pinned below.

use std::process::ExitCode;

use slipt_core::validation::{self, CriterionReport, ValidationSettings};

struct Pinned {
    id: u8,
    bounds: &'static [(&'static str, f64)],
    budget_seconds: f64,
    run: fn(&ValidationSettings) -> CriterionReport,
}

const CRITERIA: &[Pinned] = &[
    Pinned {
        id: 1,
        bounds: &[("max_rel_err", 1e-9)],
        budget_seconds: 10.0,
        run: validation::oracle_equivalence,
    },
    Pinned {
        id: 2,
        bounds: &[("single_max_rel_err", 5e-3), ("multi_max_rel_err", 5e-2)],
        budget_seconds: 30.0,
        run: validation::closed_form_fidelity,
    },
    Pinned {
        id: 3,
        bounds: &[("max_rel_err", 1e-10)],
        budget_seconds: 1.0,
        run: validation::single_junction_algebra,
    },
    Pinned {
        id: 4,
        bounds: &[("max_rel_err", 1e-12), ("omega_abs_err", 1e-9)],
        budget_seconds: 1.0,
        run: |_| validation::lambert_identity(),
    },
    Pinned {
        id: 5,
        bounds: &[("rel_err", 5e-3)],
        budget_seconds: 1.0,
        run: validation::spectral_sanity,
    },
    Pinned {
        id: 6,
        bounds: &[("max_rel_err", 1e-2)],
        budget_seconds: 30.0,
        run: validation::average_power_sampling,
    },
    Pinned {
        id: 7,
        bounds: &[("max_abs_err_nats", 1e-6), ("uniform_excess_nats", 0.0)],
        budget_seconds: 60.0,
        run: validation::rate_consistency,
    },
    Pinned {
        id: 8,
        bounds: &[("max_standard_errors", 3.0)],
        budget_seconds: 60.0,
        run: validation::ber_agreement,
    },
    Pinned {
        id: 9,
        bounds: &[
            ("i_eh_rel_err", 1e-3),
            ("i_id_end_over_peak", 1e-3),
            ("telescoped_x_rel_err", 1e-3),
        ],
        budget_seconds: 120.0,
        run: validation::transient_steady_state,
    },
    Pinned {
        id: 10,
        bounds: &[
            ("avg_power_rel_drop", 0.0),
            ("rate_rise_nats", 0.0),
            ("n1_over_n4_power_excess", 0.0),
        ],
        budget_seconds: 60.0,
        run: validation::tradeoff_frontier,
    },
];

fn check(pinned: &Pinned, report: &CriterionReport) -> Vec<String> {
    let mut problems = Vec::new();
    if report.id != pinned.id {
        problems.push(format!("report id {} for criterion {}", report.id, pinned.id));
    }
    let names: Vec<&str> = report.measurements.iter().map(|m| m.name.as_str()).collect();
    let expected: Vec<&str> = pinned.bounds.iter().map(|(n, _)| *n).collect();
    if report.error.is_none() && names != expected {
        problems.push(format!("measurements {names:?}, expected {expected:?}"));
    }
    for (m, (_, bound)) in report.measurements.iter().zip(pinned.bounds) {
        if m.limit != *bound {
            problems.push(format!("{} bound {:e} differs from pinned {:e}", m.name, m.limit, bound));
        }
        if m.value.is_nan() || m.value > *bound {
            problems.push(format!("{} = {:e} exceeds {:e}", m.name, m.value, bound));
        }
    }
    if let Some(e) = &report.error {
        problems.push(format!("not evaluated: {e}"));
    }
    if report.seconds > pinned.budget_seconds {
        problems.push(format!(
            "took {:.2} s, budget {:.0} s",
            report.seconds, pinned.budget_seconds
        ));
    }
    problems
}

fn main() -> ExitCode {
    let settings = ValidationSettings::default();
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    let mut ran = 0;
    for pinned in CRITERIA {
        let tag = format!("criterion_{}", pinned.id);
        if !filter.is_empty() && !filter.iter().any(|f| tag.contains(f.as_str())) {
            continue;
        }
        ran += 1;
        let report = (pinned.run)(&settings);
        let problems = check(pinned, &report);
        let status = if problems.is_empty() { "PASS" } else { "FAIL" };
        let line = report.summary();
        let detail = line.split_once(' ').map_or(line.as_str(), |(_, rest)| rest);
        println!("{status} {detail}");
        for p in &problems {
            println!("    {p}");
        }
        if !problems.is_empty() {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", ran - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
