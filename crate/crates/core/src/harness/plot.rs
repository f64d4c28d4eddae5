//! Minimal SVG line plots on log–log axes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::harness::aggregate::AggregateCurve;

const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 360.0;
const MARGIN_L: f64 = 64.0;
const MARGIN_R: f64 = 16.0;
const MARGIN_T: f64 = 32.0;
const MARGIN_B: f64 = 48.0;

const PALETTE: [&str; 4] = ["#c0392b", "#1f5fbf", "#2e8b57", "#8e44ad"];
const TRIAL_COLOR: &str = "#2e8b57";

/// One algorithm's trials and their aggregate for a single metric.
#[derive(Clone, Debug)]
pub struct PlotSet {
    pub algorithm: String,
    pub metric: String,
    pub trials: Vec<Vec<(usize, f64)>>,
    pub aggregate: AggregateCurve,
}

#[derive(Clone, Copy, Debug)]
struct Axes {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Axes {
    fn fit<'a>(points: impl Iterator<Item = &'a (usize, f64)>) -> Option<Self> {
        let mut ax: Option<Axes> = None;
        for &(t, v) in points {
            if t == 0 || !(v > 0.0) || !v.is_finite() {
                continue;
            }
            let (x, y) = ((t as f64).log10(), v.log10());
            ax = Some(match ax {
                None => Axes { x0: x, x1: x, y0: y, y1: y },
                Some(a) => Axes {
                    x0: a.x0.min(x),
                    x1: a.x1.max(x),
                    y0: a.y0.min(y),
                    y1: a.y1.max(y),
                },
            });
        }
        ax.map(|mut a| {
            a.x0 = a.x0.floor();
            a.x1 = a.x1.ceil().max(a.x0 + 1.0);
            a.y0 = a.y0.floor();
            a.y1 = a.y1.ceil().max(a.y0 + 1.0);
            a
        })
    }

    fn px(&self, t: f64, ox: f64, w: f64) -> f64 {
        ox + MARGIN_L + (t.log10() - self.x0) / (self.x1 - self.x0) * (w - MARGIN_L - MARGIN_R)
    }

    fn py(&self, v: f64, h: f64) -> f64 {
        let y = v.log10().clamp(self.y0, self.y1);
        MARGIN_T + (self.y1 - y) / (self.y1 - self.y0) * (h - MARGIN_T - MARGIN_B)
    }
}

fn polyline(out: &mut String, ax: &Axes, ox: f64, pts: &[(usize, f64)], style: &str) {
    let mut seg = String::new();
    let flush = |seg: &mut String, out: &mut String| {
        if !seg.is_empty() {
            let _ = writeln!(out, r#"<polyline fill="none" {style} points="{}"/>"#, seg.trim_end());
            seg.clear();
        }
    };
    for &(t, v) in pts {
        if t == 0 || !(v > 0.0) || !v.is_finite() {
            flush(&mut seg, out);
            continue;
        }
        let _ = write!(seg, "{:.2},{:.2} ", ax.px(t as f64, ox, WIDTH), ax.py(v, HEIGHT));
    }
    flush(&mut seg, out);
}

fn band(out: &mut String, ax: &Axes, ox: f64, curve: &AggregateCurve, color: &str) {
    let pts: Vec<_> = curve
        .points
        .iter()
        .filter(|p| p.t > 0 && p.q10 > 0.0 && p.q90.is_finite() && p.q90 > 0.0)
        .collect();
    if pts.is_empty() {
        return;
    }
    let mut d = String::new();
    for p in &pts {
        let _ = write!(d, "{:.2},{:.2} ", ax.px(p.t as f64, ox, WIDTH), ax.py(p.q90, HEIGHT));
    }
    for p in pts.iter().rev() {
        let _ = write!(d, "{:.2},{:.2} ", ax.px(p.t as f64, ox, WIDTH), ax.py(p.q10, HEIGHT));
    }
    let _ = writeln!(
        out,
        r#"<polygon fill="{color}" fill-opacity="0.18" stroke="none" points="{}"/>"#,
        d.trim_end()
    );
}

fn frame(out: &mut String, ax: &Axes, ox: f64, title: &str) {
    let (l, r) = (ox + MARGIN_L, ox + WIDTH - MARGIN_R);
    let (t, b) = (MARGIN_T, HEIGHT - MARGIN_B);
    let _ = writeln!(
        out,
        r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="dimgray"/>"#,
        r - l,
        b - t
    );
    for e in ax.x0 as i32..=ax.x1 as i32 {
        let x = ax.px(10f64.powi(e), ox, WIDTH);
        let _ = writeln!(
            out,
            r#"<line x1="{x:.2}" y1="{b}" x2="{x:.2}" y2="{}" stroke="dimgray"/><text x="{x:.2}" y="{}" font-size="11" text-anchor="middle">1e{e}</text>"#,
            b + 4.0,
            b + 16.0
        );
    }
    for e in ax.y0 as i32..=ax.y1 as i32 {
        let y = ax.py(10f64.powi(e), HEIGHT);
        let _ = writeln!(
            out,
            r#"<line x1="{}" y1="{y:.2}" x2="{l}" y2="{y:.2}" stroke="dimgray"/><text x="{}" y="{:.2}" font-size="11" text-anchor="end">1e{e}</text>"#,
            l - 4.0,
            l - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{}" font-size="12" text-anchor="middle">t</text>"#,
        (l + r) / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{:.2}" font-size="12" text-anchor="middle" transform="rotate(-90 {} {:.2})">μ-MSE</text>"#,
        ox + 16.0,
        (t + b) / 2.0,
        ox + 16.0,
        (t + b) / 2.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="20" font-size="13" text-anchor="middle">{}</text>"#,
        (l + r) / 2.0,
        escape(title)
    );
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn document(panels: usize, body: &str) -> String {
    let w = WIDTH * panels as f64;
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{HEIGHT}\" viewBox=\"0 0 {w} {HEIGHT}\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{body}</svg>\n"
    )
}

fn spaghetti_panel(out: &mut String, set: &PlotSet, ax: &Axes, ox: f64, color: &str) {
    frame(out, ax, ox, &format!("{} ({} trials)", set.algorithm, set.trials.len()));
    let style = format!(r#"stroke="{TRIAL_COLOR}" stroke-opacity="0.25" stroke-width="0.8""#);
    for trial in &set.trials {
        polyline(out, ax, ox, trial, &style);
    }
    let mean: Vec<_> = set.aggregate.points.iter().map(|p| (p.t, p.mean)).collect();
    polyline(out, ax, ox, &mean, &format!(r#"stroke="{color}" stroke-width="2""#));
    for &(t, v) in &mean {
        if v > 0.0 && v.is_finite() {
            let _ = writeln!(
                out,
                r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#,
                ax.px(t as f64, ox, WIDTH),
                ax.py(v, HEIGHT)
            );
        }
    }
}

fn comparison_panel(out: &mut String, sets: &[&PlotSet], ax: &Axes, ox: f64) {
    frame(out, ax, ox, "expected error");
    for (i, s) in sets.iter().enumerate() {
        band(out, ax, ox, &s.aggregate, PALETTE[i % PALETTE.len()]);
    }
    for (i, s) in sets.iter().enumerate() {
        let c = PALETTE[i % PALETTE.len()];
        let mean: Vec<_> = s.aggregate.points.iter().map(|p| (p.t, p.mean)).collect();
        let med: Vec<_> = s.aggregate.points.iter().map(|p| (p.t, p.median)).collect();
        polyline(out, ax, ox, &mean, &format!(r#"stroke="{c}" stroke-width="2""#));
        polyline(out, ax, ox, &med, &format!(r#"stroke="{c}" stroke-width="1.2" stroke-dasharray="5 3""#));
        let y = MARGIN_T + 14.0 + 14.0 * i as f64;
        let x = ox + WIDTH - MARGIN_R - 150.0;
        let _ = writeln!(
            out,
            r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{c}" stroke-width="2"/><text x="{}" y="{}" font-size="11">{} mean</text>"#,
            x + 18.0,
            x + 22.0,
            y + 4.0,
            escape(&s.algorithm)
        );
    }
}

fn check(sets: &[PlotSet]) -> Result<()> {
    if sets.is_empty() {
        return Err(Error::Empty("no trial sets to plot".into()));
    }
    if let Some(s) = sets.iter().find(|s| s.trials.is_empty()) {
        return Err(Error::Empty(format!("no trials to plot for {}", s.algorithm)));
    }
    Ok(())
}

fn axes_for(sets: &[&PlotSet]) -> Axes {
    let trial_pts = sets.iter().flat_map(|s| s.trials.iter().flatten());
    let agg: Vec<(usize, f64)> = sets
        .iter()
        .flat_map(|s| s.aggregate.points.iter().flat_map(|p| [(p.t, p.mean), (p.t, p.q10), (p.t, p.q90)]))
        .collect();
    Axes::fit(trial_pts.chain(agg.iter())).unwrap_or(Axes {
        x0: 0.0,
        x1: 1.0,
        y0: -1.0,
        y1: 0.0,
    })
}

/// Individual trials with the mean curve drawn on top.
pub fn spaghetti_svg(set: &PlotSet) -> Result<String> {
    check(std::slice::from_ref(set))?;
    let ax = axes_for(&[set]);
    let mut body = String::new();
    spaghetti_panel(&mut body, set, &ax, 0.0, PALETTE[1]);
    Ok(document(1, &body))
}

/// Means (solid), medians (dashed) and q10–q90 bands of several algorithms.
pub fn comparison_svg(sets: &[PlotSet]) -> Result<String> {
    check(sets)?;
    let refs: Vec<&PlotSet> = sets.iter().collect();
    let ax = axes_for(&refs);
    let mut body = String::new();
    comparison_panel(&mut body, &refs, &ax, 0.0);
    Ok(document(1, &body))
}

/// One spaghetti panel per algorithm followed by the comparison panel, all on
/// shared axes.
pub fn panel_svg(sets: &[PlotSet]) -> Result<String> {
    check(sets)?;
    let refs: Vec<&PlotSet> = sets.iter().collect();
    let ax = axes_for(&refs);
    let mut body = String::new();
    for (i, s) in sets.iter().enumerate() {
        spaghetti_panel(&mut body, s, &ax, WIDTH * i as f64, PALETTE[i % PALETTE.len()]);
    }
    comparison_panel(&mut body, &refs, &ax, WIDTH * sets.len() as f64);
    Ok(document(sets.len() + 1, &body))
}

/// Writes a spaghetti plot per set, plus comparison and multi-panel figures
/// when there is more than one set. Returns the written paths.
pub fn emit_plots(dir: &Path, sets: &[PlotSet]) -> Result<Vec<PathBuf>> {
    check(sets)?;
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: String, svg: String| -> Result<()> {
        let path = dir.join(name);
        std::fs::write(&path, svg)?;
        written.push(path);
        Ok(())
    };
    for s in sets {
        put(format!("{}_{}_trials.svg", s.algorithm, s.metric), spaghetti_svg(s)?)?;
    }
    let mut metrics: Vec<&str> = sets.iter().map(|s| s.metric.as_str()).collect();
    metrics.sort_unstable();
    metrics.dedup();
    for m in metrics {
        let group: Vec<PlotSet> = sets.iter().filter(|s| s.metric == m).cloned().collect();
        if group.len() > 1 {
            put(format!("comparison_{m}.svg"), comparison_svg(&group)?)?;
            put(format!("panels_{m}.svg"), panel_svg(&group)?)?;
        }
    }
    Ok(written)
}
