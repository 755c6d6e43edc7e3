//! CSV emission with a fixed column order. Data columns are formatted
//! deterministically (shortest round-trip for inputs, fixed precision for
//! results); wall_time_ms is the only column expected to vary between runs.

use crate::runner::{Outcome, PointSpec};
use std::fmt::Write as _;

pub const HEADER: &str = "mode,two_omega,detuning_ratio,kappa,nbar,g,omega_ph,gamma_c,\
                          n_mean,g2,n_max_used,residual,status,wall_time_ms";

pub fn format_row(spec: &PointSpec, out: &Outcome) -> String {
    let mut row = String::with_capacity(160);
    let _ = write!(
        row,
        "{},{},{},{},{},{},{},{},",
        spec.mode.label(),
        spec.two_omega,
        spec.detuning_ratio,
        spec.kappa,
        spec.nbar,
        spec.g,
        spec.omega_ph,
        spec.gamma_c
    );
    match &out.obs {
        Some(o) => {
            let _ = write!(
                row,
                "{:.12e},{:.12e},{},{:.3e},{},{:.3}",
                o.n_mean, o.g2, o.n_max_used, o.residual, out.status, out.wall_ms
            );
        }
        None => {
            let _ = write!(row, "nan,nan,0,nan,{},{:.3}", out.status, out.wall_ms);
        }
    }
    row
}

pub fn render(specs: &[PointSpec], outcomes: &[Outcome]) -> String {
    debug_assert_eq!(specs.len(), outcomes.len());
    let mut text = String::with_capacity(64 + 160 * specs.len());
    text.push_str(HEADER);
    text.push('\n');
    for (s, o) in specs.iter().zip(outcomes) {
        text.push_str(&format_row(s, o));
        text.push('\n');
    }
    text
}
