//! Minimal self-contained SVG emission: stacked line panels for 1-D sweeps
//! and per-mode heat panels for 2-D grids. No text shaping, no dependencies —
//! the output is meant as a quick look, not publication graphics.

use std::collections::BTreeMap;
use std::fmt::Write as _;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

const W: f64 = 760.0;
const PANEL_H: f64 = 300.0;
const ML: f64 = 72.0;
const MR: f64 = 24.0;
const MT: f64 = 34.0;
const MB: f64 = 48.0;

pub struct LineRow {
    pub x: f64,
    pub series: String,
    pub n_mean: Option<f64>,
    pub g2: Option<f64>,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn tick_label(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && (a >= 1e4 || a < 1e-3) {
        return format!("{v:.0e}");
    }
    let mut s = format!("{v:.3}");
    while s.contains('.') && (s.ends_with('0') || s.ends_with('.')) {
        s.pop();
    }
    s
}

struct Scale {
    lo: f64,
    hi: f64,
    log: bool,
    px0: f64,
    px1: f64,
}

impl Scale {
    fn new(values: impl Iterator<Item = f64>, log: bool, px0: f64, px1: f64, pad: f64) -> Scale {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for v in values {
            let v = if log { v.log10() } else { v };
            if v.is_finite() {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        if !lo.is_finite() || !hi.is_finite() {
            lo = 0.0;
            hi = 1.0;
        }
        if hi - lo < 1e-300 {
            lo -= 0.5;
            hi += 0.5;
        }
        let span = hi - lo;
        Scale {
            lo: lo - pad * span,
            hi: hi + pad * span,
            log,
            px0,
            px1,
        }
    }

    fn at(&self, v: f64) -> f64 {
        let v = if self.log { v.log10() } else { v };
        self.px0 + (v - self.lo) / (self.hi - self.lo) * (self.px1 - self.px0)
    }

    /// Tick positions in data units.
    fn ticks(&self, want: usize) -> Vec<f64> {
        if self.log {
            let lo = self.lo.ceil() as i64;
            let hi = self.hi.floor() as i64;
            let decades: Vec<f64> = (lo..=hi).map(|d| 10f64.powi(d as i32)).collect();
            if decades.len() >= 2 {
                return decades;
            }
        }
        let raw = (self.hi - self.lo) / want as f64;
        let mag = 10f64.powf(raw.log10().floor());
        let step = [1.0, 2.0, 2.5, 5.0, 10.0]
            .iter()
            .map(|m| m * mag)
            .find(|s| (self.hi - self.lo) / s <= want as f64 + 0.5)
            .unwrap_or(raw);
        let mut t = (self.lo / step).ceil() * step;
        let mut out = Vec::new();
        while t <= self.hi + 1e-9 * step {
            out.push(if self.log { 10f64.powf(t) } else { t });
            t += step;
        }
        out
    }
}

fn axes(out: &mut String, x: &Scale, y: &Scale, top: f64, x_label: &str, y_label: &str) {
    let bottom = top + PANEL_H - MT - MB;
    let _ = write!(
        out,
        "<rect x='{ML}' y='{top}' width='{}' height='{}' fill='none' stroke='#888'/>",
        W - ML - MR,
        bottom - top
    );
    for t in x.ticks(6) {
        let px = x.at(t);
        let _ = write!(
            out,
            "<line x1='{px:.1}' y1='{top:.1}' x2='{px:.1}' y2='{bottom:.1}' stroke='#ddd'/>\
             <text x='{px:.1}' y='{:.1}' font-size='11' text-anchor='middle'>{}</text>",
            bottom + 16.0,
            tick_label(t)
        );
    }
    for t in y.ticks(5) {
        let py = y.at(t);
        let _ = write!(
            out,
            "<line x1='{ML}' y1='{py:.1}' x2='{:.1}' y2='{py:.1}' stroke='#ddd'/>\
             <text x='{:.1}' y='{:.1}' font-size='11' text-anchor='end'>{}</text>",
            W - MR,
            ML - 6.0,
            py + 4.0,
            tick_label(t)
        );
    }
    let _ = write!(
        out,
        "<text x='{:.1}' y='{:.1}' font-size='12' text-anchor='middle'>{}</text>\
         <text x='16' y='{:.1}' font-size='12' text-anchor='middle' transform='rotate(-90 16 {:.1})'>{}</text>",
        (ML + W - MR) / 2.0,
        bottom + 34.0,
        esc(x_label),
        (top + bottom) / 2.0,
        (top + bottom) / 2.0,
        esc(y_label)
    );
}

fn panel(
    out: &mut String,
    rows: &[LineRow],
    pick: impl Fn(&LineRow) -> Option<f64>,
    x: &Scale,
    top: f64,
    x_label: &str,
    y_label: &str,
) {
    let y = Scale::new(
        rows.iter().filter_map(&pick),
        false,
        top + PANEL_H - MT - MB,
        top, // inverted: larger values up
        0.06,
    );
    axes(out, x, &y, top, x_label, y_label);
    let mut series: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows {
        if let Some(v) = pick(r) {
            if v.is_finite() {
                series.entry(&r.series).or_default().push((r.x, v));
            }
        }
    }
    for (i, (name, mut pts)) in series.into_iter().enumerate() {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let color = PALETTE[i % PALETTE.len()];
        let path: String = pts
            .iter()
            .map(|&(px, py)| format!("{:.1},{:.1} ", x.at(px), y.at(py)))
            .collect();
        let _ = write!(
            out,
            "<polyline points='{}' fill='none' stroke='{color}' stroke-width='1.6'/>",
            path.trim_end()
        );
        let ly = top + 16.0 + 15.0 * i as f64;
        let _ = write!(
            out,
            "<line x1='{:.1}' y1='{ly:.1}' x2='{:.1}' y2='{ly:.1}' stroke='{color}' stroke-width='2'/>\
             <text x='{:.1}' y='{:.1}' font-size='11'>{}</text>",
            ML + 10.0,
            ML + 34.0,
            ML + 40.0,
            ly + 4.0,
            esc(name)
        );
    }
}

/// Two stacked panels: g²(0) on top, ⟨n⟩ below, one polyline per series.
pub fn line_plot(title: &str, x_label: &str, x_log: bool, rows: &[LineRow]) -> String {
    let height = 2.0 * PANEL_H + MT;
    let mut out = header(title, height);
    let x = Scale::new(rows.iter().map(|r| r.x), x_log, ML, W - MR, 0.0);
    panel(&mut out, rows, |r| r.g2, &x, MT + 20.0, x_label, "g2(0)");
    panel(
        &mut out,
        rows,
        |r| r.n_mean,
        &x,
        PANEL_H + MT + 20.0,
        x_label,
        "mean phonon number",
    );
    out.push_str("</svg>\n");
    out
}

fn color_map(t: f64) -> String {
    // dark-violet → teal → yellow, perceptually ordered
    const STOPS: [(f64, f64, f64); 6] = [
        (0.267, 0.005, 0.329),
        (0.254, 0.265, 0.530),
        (0.164, 0.471, 0.558),
        (0.135, 0.659, 0.518),
        (0.478, 0.821, 0.318),
        (0.993, 0.906, 0.144),
    ];
    let t = t.clamp(0.0, 1.0) * (STOPS.len() - 1) as f64;
    let i = (t as usize).min(STOPS.len() - 2);
    let f = t - i as f64;
    let mix = |a: f64, b: f64| ((a + f * (b - a)) * 255.0).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        mix(STOPS[i].0, STOPS[i + 1].0),
        mix(STOPS[i].1, STOPS[i + 1].1),
        mix(STOPS[i].2, STOPS[i + 1].2)
    )
}

/// One heat panel per entry in `panels`; values are row-major over
/// `ys × xs` with `None` marking failed grid points (drawn hatched gray).
pub fn heat_map(
    title: &str,
    x_label: &str,
    x_log: bool,
    xs: &[f64],
    y_label: &str,
    ys: &[f64],
    panels: &[(String, Vec<Option<f64>>)],
) -> String {
    let height = panels.len() as f64 * PANEL_H + MT;
    let mut out = header(title, height);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (_, vals) in panels {
        for v in vals.iter().flatten() {
            lo = lo.min(*v);
            hi = hi.max(*v);
        }
    }
    if !lo.is_finite() {
        lo = 0.0;
        hi = 1.0;
    }
    if hi - lo < 1e-300 {
        hi = lo + 1.0;
    }
    let x = Scale::new(xs.iter().copied(), x_log, ML, W - MR, 0.0);
    for (pi, (name, vals)) in panels.iter().enumerate() {
        let top = MT + 20.0 + pi as f64 * PANEL_H;
        let y = Scale::new(ys.iter().copied(), false, top + PANEL_H - MT - MB, top, 0.0);
        for (iy, &yv) in ys.iter().enumerate() {
            for (ix, &xv) in xs.iter().enumerate() {
                let x0 = if ix == 0 { x.at(xv) } else { 0.5 * (x.at(xs[ix - 1]) + x.at(xv)) };
                let x1 = if ix + 1 == xs.len() {
                    x.at(xv)
                } else {
                    0.5 * (x.at(xv) + x.at(xs[ix + 1]))
                };
                let y1 = if iy == 0 { y.at(yv) } else { 0.5 * (y.at(ys[iy - 1]) + y.at(yv)) };
                let y0 = if iy + 1 == ys.len() {
                    y.at(yv)
                } else {
                    0.5 * (y.at(yv) + y.at(ys[iy + 1]))
                };
                let fill = match vals[iy * xs.len() + ix] {
                    Some(v) => color_map((v - lo) / (hi - lo)),
                    None => "#c0c0c0".to_string(),
                };
                let _ = write!(
                    out,
                    "<rect x='{x0:.1}' y='{y0:.1}' width='{:.1}' height='{:.1}' fill='{fill}'/>",
                    (x1 - x0).max(0.5),
                    (y1 - y0).max(0.5)
                );
            }
        }
        axes(&mut out, &x, &y, top, x_label, y_label);
        let _ = write!(
            out,
            "<text x='{ML}' y='{:.1}' font-size='12'>{} (scale {} … {})</text>",
            top - 6.0,
            esc(name),
            tick_label(lo),
            tick_label(hi)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn header(title: &str, height: f64) -> String {
    let mut out = String::with_capacity(4096);
    let _ = write!(
        out,
        "<svg xmlns='http://www.w3.org/2000/svg' width='{W}' height='{height}' \
         viewBox='0 0 {W} {height}' font-family='sans-serif'>\
         <rect width='100%' height='100%' fill='white'/>\
         <text x='{ML}' y='20' font-size='14' font-weight='bold'>{}</text>",
        esc(title)
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_plot_emits_one_polyline_per_series_per_panel() {
        let rows: Vec<LineRow> = (0..10)
            .flat_map(|i| {
                let x = 1e-3 * 10f64.powf(i as f64 / 3.0);
                ["a", "b"].into_iter().map(move |s| LineRow {
                    x,
                    series: s.to_string(),
                    n_mean: Some(x * 2.0),
                    g2: Some(1.0 + x),
                })
            })
            .collect();
        let svg = line_plot("demo", "kappa", true, &rows);
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<polyline").count(), 4);
        assert!(svg.contains("g2(0)"));
    }

    #[test]
    fn heat_map_colors_every_cell_and_grays_failures() {
        let xs = vec![1.0, 2.0, 3.0];
        let ys = vec![0.0, 1.0];
        let vals = vec![Some(0.0), Some(0.5), None, Some(1.0), Some(0.2), Some(0.9)];
        let svg = heat_map("map", "x", false, &xs, "y", &ys, &[("m".into(), vals)]);
        assert_eq!(svg.matches("<rect").count(), 1 + 6 + 1); // backdrop + cells + frame
        assert!(svg.contains("#c0c0c0"));
    }

    #[test]
    fn log_scale_places_decades_evenly() {
        let s = Scale::new([1e-3, 1e1].into_iter(), true, 0.0, 400.0, 0.0);
        let t = s.ticks(6);
        assert_eq!(t.len(), 5); // 1e-3 … 1e1
        assert!((s.at(1e-1) - 200.0).abs() < 1e-9);
    }
}
