//! Text and vector output: trajectory CSV, SVG charts, and gain tables.
//!
//! Everything here is a pure value-to-string function, so identical inputs
//! yield byte-identical files.

use formctl_core::sim::Trajectory;
use formctl_core::synthesis::{GainSet, VerifyReport};
use nalgebra::DMatrix;
use serde::Serialize;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
    "#7f7f7f", "#bcbd22",
];

fn color(agent: usize) -> &'static str {
    PALETTE[(agent - 1) % PALETTE.len()]
}

/// Shortest round-trip decimal for data output: lossless and stable.
pub fn num(v: f64) -> String {
    format!("{v}")
}

/// Comma-separated rows, lossless floats; the shape `verify --matrix` reads back.
pub fn matrix_csv(a: &DMatrix<f64>) -> String {
    let mut s = String::new();
    for i in 0..a.nrows() {
        let row: Vec<String> = (0..a.ncols()).map(|j| num(a[(i, j)])).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

/// Compact display form: six decimals, trailing zeros trimmed.
pub fn disp(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

pub fn trajectory_csv(traj: &Trajectory) -> String {
    let n = traj.agent_count();
    let mut out = String::from("t");
    for i in 1..=n {
        out.push_str(&format!(",agent_{i}"));
    }
    out.push('\n');
    for (t, x) in traj.times().iter().zip(traj.states()) {
        out.push_str(&num(*t));
        for v in x {
            out.push(',');
            out.push_str(&num(*v));
        }
        out.push('\n');
    }
    out
}

/// Tick positions covering [lo, hi] at a round step (1/2/5 x 10^k).
fn ticks(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let span = (hi - lo).max(1e-12);
    let raw = span / count as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|&s| span / s <= count as f64)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    left: f64,
    right: f64,
    top: f64,
    bottom: f64,
    width: f64,
    height: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        self.left + (x - self.x0) / (self.x1 - self.x0) * (self.width - self.left - self.right)
    }

    fn py(&self, y: f64) -> f64 {
        // SVG y grows downward.
        self.height
            - self.bottom
            - (y - self.y0) / (self.y1 - self.y0) * (self.height - self.top - self.bottom)
    }

    fn axes(&self, x_label: &str, y_label: &str) -> String {
        let mut s = String::new();
        let (px0, px1) = (self.px(self.x0), self.px(self.x1));
        let (py0, py1) = (self.py(self.y0), self.py(self.y1));
        for tx in ticks(self.x0, self.x1, 6) {
            let p = self.px(tx);
            s += &format!(
                "<line x1='{p:.2}' y1='{py0:.2}' x2='{p:.2}' y2='{py1:.2}' stroke='#ddd'/>\n\
                 <text x='{p:.2}' y='{:.2}' text-anchor='middle' class='tick'>{}</text>\n",
                py0 + 16.0,
                disp(tx)
            );
        }
        for ty in ticks(self.y0, self.y1, 6) {
            let p = self.py(ty);
            s += &format!(
                "<line x1='{px0:.2}' y1='{p:.2}' x2='{px1:.2}' y2='{p:.2}' stroke='#ddd'/>\n\
                 <text x='{:.2}' y='{:.2}' text-anchor='end' class='tick'>{}</text>\n",
                px0 - 6.0,
                p + 4.0,
                disp(ty)
            );
        }
        s += &format!(
            "<rect x='{px0:.2}' y='{py1:.2}' width='{:.2}' height='{:.2}' fill='none' stroke='#333'/>\n",
            px1 - px0,
            py0 - py1
        );
        s += &format!(
            "<text x='{:.2}' y='{:.2}' text-anchor='middle' class='label'>{x_label}</text>\n",
            (px0 + px1) / 2.0,
            py0 + 36.0
        );
        s += &format!(
            "<text x='{:.2}' y='{:.2}' text-anchor='middle' class='label' transform='rotate(-90 {:.2} {:.2})'>{y_label}</text>\n",
            px0 - 42.0,
            (py0 + py1) / 2.0,
            px0 - 42.0,
            (py0 + py1) / 2.0
        );
        s
    }
}

fn pad(lo: f64, hi: f64) -> (f64, f64) {
    let span = (hi - lo).max(1e-9);
    (lo - 0.05 * span, hi + 0.05 * span)
}

fn svg_open(width: f64, height: f64, title: &str) -> String {
    format!(
        "<svg xmlns='http://www.w3.org/2000/svg' viewBox='0 0 {width} {height}' \
         font-family='sans-serif'>\n\
         <style>.tick{{font-size:11px;fill:#555}}.label{{font-size:13px;fill:#222}}\
         .title{{font-size:15px;fill:#000}}.legend{{font-size:12px;fill:#222}}</style>\n\
         <rect width='{width}' height='{height}' fill='white'/>\n\
         <text x='{:.2}' y='24' text-anchor='middle' class='title'>{}</text>\n",
        width / 2.0,
        escape(title)
    )
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Keeps polylines readable: at most ~400 vertices, endpoints preserved.
fn stride(len: usize) -> usize {
    len.div_ceil(400).max(1)
}

/// Positions-versus-time line chart; dashed lines mark the targets.
pub fn line_chart(title: &str, traj: &Trajectory, targets: Option<&[f64]>, leader: usize) -> String {
    let n = traj.agent_count();
    let (width, height) = (800.0, 480.0);
    let flat_min = traj
        .states()
        .iter()
        .flatten()
        .chain(targets.unwrap_or(&[]))
        .fold(f64::INFINITY, |m, &v| m.min(v));
    let flat_max = traj
        .states()
        .iter()
        .flatten()
        .chain(targets.unwrap_or(&[]))
        .fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let (y0, y1) = pad(flat_min, flat_max);
    let frame = Frame {
        x0: traj.times()[0],
        x1: *traj.times().last().unwrap(),
        y0,
        y1,
        left: 64.0,
        right: 150.0,
        top: 40.0,
        bottom: 52.0,
        width,
        height,
    };

    let mut svg = svg_open(width, height, title);
    svg += &frame.axes("t", "position");

    if let Some(f) = targets {
        for (i, &fi) in f.iter().enumerate() {
            let y = frame.py(fi);
            svg += &format!(
                "<line x1='{:.2}' y1='{y:.2}' x2='{:.2}' y2='{y:.2}' stroke='{}' \
                 stroke-dasharray='5 4' opacity='0.45'/>\n",
                frame.px(frame.x0),
                frame.px(frame.x1),
                color(i + 1)
            );
        }
    }

    let step = stride(traj.len());
    for i in 1..=n {
        let mut pts = String::new();
        for k in (0..traj.len()).step_by(step).chain([traj.len() - 1]) {
            pts += &format!("{:.2},{:.2} ", frame.px(traj.times()[k]), frame.py(traj.states()[k][i - 1]));
        }
        svg += &format!(
            "<polyline points='{}' fill='none' stroke='{}' stroke-width='1.6'/>\n",
            pts.trim_end(),
            color(i)
        );
    }

    let lx = width - 140.0;
    for i in 1..=n {
        let ly = 48.0 + 18.0 * (i - 1) as f64;
        let tag = if i == leader {
            format!("agent {i} (leader)")
        } else {
            format!("agent {i}")
        };
        svg += &format!(
            "<line x1='{lx}' y1='{ly}' x2='{:.2}' y2='{ly}' stroke='{}' stroke-width='2'/>\n\
             <text x='{:.2}' y='{:.2}' class='legend'>{tag}</text>\n",
            lx + 22.0,
            color(i),
            lx + 28.0,
            ly + 4.0
        );
    }
    svg + "</svg>\n"
}

/// Two-axis agent paths with the formation polygon drawn at each snapshot
/// index (typically the end of every simulation segment).
pub fn path_plot(
    title: &str,
    x: &Trajectory,
    y: &Trajectory,
    labels: (&str, &str),
    snapshots: &[usize],
    leader: usize,
) -> String {
    let n = x.agent_count();
    let (width, height) = (720.0, 640.0);
    let all_x = x.states().iter().flatten();
    let all_y = y.states().iter().flatten();
    let (mut x_lo, mut x_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in all_x {
        x_lo = x_lo.min(v);
        x_hi = x_hi.max(v);
    }
    let (mut y_lo, mut y_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in all_y {
        y_lo = y_lo.min(v);
        y_hi = y_hi.max(v);
    }
    // Equal units per pixel on both axes so shapes keep their geometry.
    let (x_lo, x_hi) = pad(x_lo, x_hi);
    let (y_lo, y_hi) = pad(y_lo, y_hi);
    let plot_w = width - 64.0 - 40.0;
    let plot_h = height - 40.0 - 52.0;
    let scale = ((x_hi - x_lo) / plot_w).max((y_hi - y_lo) / plot_h);
    let (cx, cy) = ((x_lo + x_hi) / 2.0, (y_lo + y_hi) / 2.0);
    let frame = Frame {
        x0: cx - scale * plot_w / 2.0,
        x1: cx + scale * plot_w / 2.0,
        y0: cy - scale * plot_h / 2.0,
        y1: cy + scale * plot_h / 2.0,
        left: 64.0,
        right: 40.0,
        top: 40.0,
        bottom: 52.0,
        width,
        height,
    };

    let mut svg = svg_open(width, height, title);
    svg += &frame.axes(labels.0, labels.1);

    let step = stride(x.len());
    for i in 1..=n {
        let mut pts = String::new();
        for k in (0..x.len()).step_by(step).chain([x.len() - 1]) {
            pts += &format!(
                "{:.2},{:.2} ",
                frame.px(x.states()[k][i - 1]),
                frame.py(y.states()[k][i - 1])
            );
        }
        svg += &format!(
            "<polyline points='{}' fill='none' stroke='{}' stroke-width='1.2' opacity='0.55'/>\n",
            pts.trim_end(),
            color(i)
        );
    }

    for (s, &k) in snapshots.iter().enumerate() {
        let last = s + 1 == snapshots.len();
        let mut pts = String::new();
        for i in 0..n {
            pts += &format!(
                "{:.2},{:.2} ",
                frame.px(x.states()[k][i]),
                frame.py(y.states()[k][i])
            );
        }
        svg += &format!(
            "<polygon class='formation' points='{}' fill='none' stroke='{}' stroke-width='1.8'{}/>\n",
            pts.trim_end(),
            if last { "#111" } else { "#777" },
            if last { "" } else { " stroke-dasharray='6 4'" }
        );
        for i in 1..=n {
            svg += &format!(
                "<circle cx='{:.2}' cy='{:.2}' r='4' fill='{}'/>\n",
                frame.px(x.states()[k][i - 1]),
                frame.py(y.states()[k][i - 1]),
                color(i)
            );
            if last {
                let tag = if i == leader { format!("{i}*") } else { format!("{i}") };
                svg += &format!(
                    "<text x='{:.2}' y='{:.2}' class='legend'>{tag}</text>\n",
                    frame.px(x.states()[k][i - 1]) + 7.0,
                    frame.py(y.states()[k][i - 1]) - 7.0
                );
            }
        }
    }

    // Start markers.
    for i in 1..=n {
        svg += &format!(
            "<circle cx='{:.2}' cy='{:.2}' r='3.5' fill='white' stroke='{}' stroke-width='1.5'/>\n",
            frame.px(x.states()[0][i - 1]),
            frame.py(y.states()[0][i - 1]),
            color(i)
        );
    }

    svg + "</svg>\n"
}

/// Aligned human-readable gain listing.
pub fn gains_table(gains: &GainSet) -> String {
    let n = gains.agent_count();
    let mut rows = vec![[
        "agent".to_string(),
        "pole".to_string(),
        "self gain".to_string(),
        "incoming gains".to_string(),
    ]];
    for i in 1..=n {
        let betas: Vec<String> = gains
            .betas()
            .filter(|((to, _), _)| *to == i)
            .map(|((_, from), b)| format!("{from}: {}", disp(b)))
            .collect();
        let role = if i == gains.leader() {
            format!("{i} (leader)")
        } else {
            i.to_string()
        };
        rows.push([
            role,
            disp(gains.diagonal(i)),
            disp(gains.self_feedback(i)),
            if betas.is_empty() { "-".into() } else { betas.join(", ") },
        ]);
    }
    let widths: Vec<usize> = (0..4)
        .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap())
        .collect();
    let mut out = String::new();
    for (k, row) in rows.iter().enumerate() {
        for (c, cell) in row.iter().enumerate() {
            out.push_str(&format!("{cell:<width$}", width = widths[c]));
            if c < 3 {
                out.push_str("  ");
            }
        }
        out.push('\n');
        if k == 0 {
            out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 6));
            out.push('\n');
        }
    }
    out
}

#[derive(Serialize)]
pub struct BetaEntry {
    pub to: usize,
    pub from: usize,
    pub value: f64,
}

#[derive(Serialize)]
pub struct AxisGainsReport {
    pub axis: String,
    pub formation: Vec<f64>,
    pub betas: Vec<BetaEntry>,
    pub spectrum: Vec<[f64; 2]>,
    pub kernel_residual: f64,
    pub kernel_ok: bool,
    pub spectrum_matches: bool,
}

#[derive(Serialize)]
pub struct GainsReport {
    pub scenario: String,
    pub agents: usize,
    pub leader: usize,
    pub policy: String,
    pub diagonal: Vec<f64>,
    pub self_feedback: Vec<f64>,
    pub axes: Vec<AxisGainsReport>,
}

pub fn axis_gains_report(
    axis: &str,
    f: &[f64],
    gains: &GainSet,
    report: &VerifyReport,
) -> AxisGainsReport {
    AxisGainsReport {
        axis: axis.to_string(),
        formation: f.to_vec(),
        betas: gains
            .betas()
            .map(|((to, from), value)| BetaEntry { to, from, value })
            .collect(),
        spectrum: report.spectrum.iter().map(|z| [z.re, z.im]).collect(),
        kernel_residual: report.kernel_residual,
        kernel_ok: report.kernel_ok,
        spectrum_matches: report.spectrum_matches,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use formctl_core::sim::{simulate, LeaderLaw};
    use nalgebra::DMatrix;

    fn tiny_traj() -> Trajectory {
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 0.0, 0.0]);
        let law = LeaderLaw::Proportional {
            gain: 1.0,
            target: 1.0,
        };
        simulate(&a, &[0.0, 0.5], &law, 0.25, 1.0).unwrap()
    }

    #[test]
    fn csv_shape_and_header() {
        let csv = trajectory_csv(&tiny_traj());
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("t,agent_1,agent_2"));
        assert_eq!(csv.lines().count(), 6); // header + 5 samples
        assert!(csv.lines().skip(1).all(|l| l.split(',').count() == 3));
        assert!(csv.starts_with("t,"));
    }

    #[test]
    fn csv_is_reproducible() {
        assert_eq!(trajectory_csv(&tiny_traj()), trajectory_csv(&tiny_traj()));
    }

    #[test]
    fn charts_are_well_formed() {
        let traj = tiny_traj();
        let svg = line_chart("demo", &traj, Some(&[1.0, 1.0]), 2);
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("agent 2 (leader)"));

        let plot = path_plot("demo", &traj, &traj, ("x", "y"), &[traj.len() - 1], 2);
        assert_eq!(plot.matches("class='formation'").count(), 1);
        assert_eq!(plot.matches("<polyline").count(), 2);
    }

    #[test]
    fn tick_steps_are_round() {
        let t = ticks(0.0, 10.0, 6);
        assert_eq!(t, vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0]);
        let t = ticks(-3.2, 2.1, 6);
        assert!(t.contains(&0.0));
    }

    #[test]
    fn display_numbers_trim() {
        assert_eq!(disp(-3.5), "-3.5");
        assert_eq!(disp(7.0), "7");
        assert_eq!(disp(2.0 / 3.0), "0.666667");
        assert_eq!(disp(-0.0), "0");
    }
}
