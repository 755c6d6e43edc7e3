//! Built-in sweep recipes. Each one fixes the parameter set it reproduces and
//! exposes the swept axes; grid densities and unlabeled ranges are
//! implementation defaults, overridable from the command line.

use crate::runner::PointSpec;
use phonon_stats::model::Mode;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum FigureId {
    Fig1a,
    Fig1b,
    Fig1c,
    Fig2,
}

/// A fully expanded work list plus enough metadata to plot it.
pub struct Plan {
    pub points: Vec<PointSpec>,
    /// CSV column name of the primary axis.
    pub x_param: &'static str,
    pub x_log: bool,
    /// Present for two-dimensional grids: (column name, row values) of the
    /// second axis, primary-axis values alongside.
    pub heat: Option<HeatAxes>,
    /// What the recipe holds fixed, in plain words.
    pub provenance: &'static str,
}

pub struct HeatAxes {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub y_param: &'static str,
}

pub fn lin_grid(start: f64, stop: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2);
    (0..count)
        .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
        .collect()
}

pub fn log_grid(start: f64, stop: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2 && start > 0.0 && stop > 0.0);
    let (a, b) = (start.log10(), stop.log10());
    (0..count)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (count - 1) as f64))
        .collect()
}

impl FigureId {
    /// Mode set the recipe uses when the user does not ask for one.
    pub fn default_modes(self) -> Vec<Mode> {
        match self {
            FigureId::Fig1b => vec![Mode::BeyondSecular],
            _ => vec![Mode::Secular, Mode::BeyondSecular],
        }
    }
}

/// Expands a recipe over `base` (already carrying any user overrides of the
/// fixed parameters). `from`/`to`/`points` reshape the primary axis only.
pub fn plan(
    id: FigureId,
    base: PointSpec,
    modes: &[Mode],
    points: Option<usize>,
    from: Option<f64>,
    to: Option<f64>,
) -> Result<Plan, String> {
    let range = |a: f64, b: f64| (from.unwrap_or(a), to.unwrap_or(b));
    let log_range = |a: f64, b: f64, what: &str| -> Result<(f64, f64), String> {
        let (lo, hi) = range(a, b);
        if lo <= 0.0 || hi <= 0.0 {
            return Err(format!("{what} axis is logarithmic; bounds must be > 0"));
        }
        Ok((lo, hi))
    };
    match id {
        FigureId::Fig1a => {
            let (lo, hi) = range(-1.5, 1.5);
            let xs = lin_grid(lo, hi, points.unwrap_or(301));
            let mut pts = Vec::with_capacity(xs.len() * modes.len());
            for &x in &xs {
                for &mode in modes {
                    pts.push(PointSpec {
                        mode,
                        detuning_ratio: x,
                        ..base
                    });
                }
            }
            Ok(Plan {
                points: pts,
                x_param: "detuning_ratio",
                x_log: false,
                heat: None,
                provenance: "detuning scan: ratio over [-1.5, 1.5] at 2*omega = 25, \
                             kappa = 5e-3, nbar = 0.04, g = 15, omega_ph = 35, gamma_c = 0.1",
            })
        }
        FigureId::Fig1b => {
            let (lo, hi) = log_range(1e-3, 10.0, "damping")?;
            let xs = log_grid(lo, hi, points.unwrap_or(61));
            let occupations = [0.01, 0.04, 0.08, 0.16, 0.64];
            let mut pts = Vec::with_capacity(xs.len() * occupations.len() * modes.len());
            for &x in &xs {
                for &nbar in &occupations {
                    for &mode in modes {
                        pts.push(PointSpec {
                            mode,
                            kappa: x,
                            nbar,
                            ..base
                        });
                    }
                }
            }
            Ok(Plan {
                points: pts,
                x_param: "kappa",
                x_log: true,
                heat: None,
                provenance: "damping scan: kappa over [1e-3, 10] (log) for five bath \
                             occupations 0.01..0.64, detuning ratio -0.7, fast-term \
                             corrections kept",
            })
        }
        FigureId::Fig1c => {
            let (lo, hi) = log_range(1e-2, 10.0, "damping")?;
            let xs = log_grid(lo, hi, points.unwrap_or(41));
            let ys = lin_grid(5.0, 50.0, 41);
            let mut pts = Vec::with_capacity(xs.len() * ys.len() * modes.len());
            for &x in &xs {
                for &y in &ys {
                    for &mode in modes {
                        pts.push(PointSpec {
                            mode,
                            kappa: x,
                            two_omega: y,
                            ..base
                        });
                    }
                }
            }
            Ok(Plan {
                points: pts,
                x_param: "kappa",
                x_log: true,
                heat: Some(HeatAxes {
                    xs,
                    ys,
                    y_param: "two_omega",
                }),
                provenance: "damping-drive map: kappa over [1e-2, 10] (log) by \
                             2*omega over [5, 50], nbar = 0.04, detuning ratio -0.7",
            })
        }
        FigureId::Fig2 => {
            let (lo, hi) = log_range(1e-3, 10.0, "damping")?;
            let mut xs = log_grid(lo, hi, points.unwrap_or(61));
            xs.extend(log_grid(1e-3, 1e-2, 15)); // close-up block on the slow-damping window
            let mut pts = Vec::with_capacity(xs.len() * modes.len());
            for &x in &xs {
                for &mode in modes {
                    pts.push(PointSpec {
                        mode,
                        kappa: x,
                        ..base
                    });
                }
            }
            Ok(Plan {
                points: pts,
                x_param: "kappa",
                x_log: true,
                heat: None,
                provenance: "treatment comparison: kappa over [1e-3, 10] (log) plus a \
                             15-point close-up on [1e-3, 1e-2], nbar = 0.04, both treatments",
            })
        }
    }
}
