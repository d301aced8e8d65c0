//! Self-contained SVG charts. Output is a pure function of the input: no
//! timestamps, no randomness.

use std::fmt::Write;

use perf_charter_core::cluster::Dendrogram;
use perf_charter_core::roofline::{MachineModel, Precision, RooflinePoint};
use perf_charter_core::sched::Schedule;

use crate::text::sig;

const PALETTE: [&str; 10] = [
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#ff9da7",
    "#9c755f", "#bab0ac",
];

const FONT: &str = "font-family=\"sans-serif\" font-size=\"11\"";

/// Coordinate with two decimals, trailing zeros trimmed.
fn n(x: f64) -> String {
    let s = format!("{x:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

struct Canvas {
    body: String,
    width: f64,
    height: f64,
}

impl Canvas {
    fn new(width: f64, height: f64) -> Self {
        Self {
            body: String::new(),
            width,
            height,
        }
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, style: &str) {
        let _ = writeln!(
            self.body,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" {style}/>"#,
            n(x1),
            n(y1),
            n(x2),
            n(y2)
        );
    }

    fn text(&mut self, x: f64, y: f64, anchor: &str, extra: &str, s: &str) {
        let _ = writeln!(
            self.body,
            r#"<text x="{}" y="{}" text-anchor="{anchor}" {FONT}{extra}>{}</text>"#,
            n(x),
            n(y),
            escape(s)
        );
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str, title: &str) {
        let _ = writeln!(
            self.body,
            r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{fill}" stroke="white" stroke-width="1"><title>{}</title></rect>"#,
            n(x),
            n(y),
            n(w),
            n(h),
            escape(title)
        );
    }

    fn circle(&mut self, x: f64, y: f64, r: f64, fill: &str, title: &str) {
        let _ = writeln!(
            self.body,
            r#"<circle cx="{}" cy="{}" r="{}" fill="{fill}"><title>{}</title></circle>"#,
            n(x),
            n(y),
            n(r),
            escape(title)
        );
    }

    fn finish(self, title: &str) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n<title>{}</title>\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            escape(title),
            self.body,
            w = n(self.width),
            h = n(self.height)
        )
    }
}

/// Round step (1, 2 or 5 × 10^k) giving about `target` ticks over `span`.
fn nice_step(span: f64, target: f64) -> f64 {
    if span.is_nan() || span <= 0.0 {
        return 1.0;
    }
    let raw = span / target;
    let mag = 10f64.powf(raw.log10().floor());
    let f = raw / mag;
    let m = if f <= 1.0 {
        1.0
    } else if f <= 2.0 {
        2.0
    } else if f <= 5.0 {
        5.0
    } else {
        10.0
    };
    m * mag
}

/// Dendrogram with leaves along the bottom and merge height upward; a dashed
/// line marks the cut threshold when it is finite.
pub fn dendrogram_svg(d: &Dendrogram, threshold: f64) -> String {
    let leaves = d.n_leaves();
    let (left, right, top, bottom_pad) = (60.0, 20.0, 30.0, 130.0);
    let plot_h = 300.0;
    let step = 48.0;
    let width = left + right + step * leaves.max(1) as f64;
    let height = top + plot_h + bottom_pad;
    let base = top + plot_h;
    let max_h = if d.max_height() > 0.0 {
        d.max_height()
    } else {
        1.0
    };
    let y = |h: f64| base - plot_h * h / max_h;

    let mut c = Canvas::new(width, height);
    c.text(width / 2.0, 18.0, "middle", "", "Workload dendrogram");

    let tick = nice_step(max_h, 5.0);
    let mut t = 0.0;
    while t <= max_h * (1.0 + 1e-9) {
        c.line(left - 4.0, y(t), left, y(t), r##"stroke="#333""##);
        c.text(left - 6.0, y(t) + 4.0, "end", "", &sig(t, 4));
        t += tick;
    }
    c.line(left, top, left, base, r##"stroke="#333""##);

    let order = d.leaf_order();
    let mut x = vec![0.0; leaves + d.merges.len()];
    let mut h = vec![0.0; leaves + d.merges.len()];
    for (slot, &leaf) in order.iter().enumerate() {
        x[leaf] = left + step * (slot as f64 + 0.5);
        let (lx, ly) = (x[leaf], base + 8.0);
        c.text(
            lx,
            ly,
            "end",
            &format!(r#" transform="rotate(-60 {} {})""#, n(lx), n(ly)),
            &d.leaves[leaf],
        );
    }
    for (i, m) in d.merges.iter().enumerate() {
        let node = leaves + i;
        x[node] = (x[m.left] + x[m.right]) / 2.0;
        h[node] = m.height;
        let style = r##"stroke="#1f3b5c" stroke-width="1.5""##;
        c.line(x[m.left], y(h[m.left]), x[m.left], y(m.height), style);
        c.line(x[m.right], y(h[m.right]), x[m.right], y(m.height), style);
        c.line(x[m.left], y(m.height), x[m.right], y(m.height), style);
    }
    if threshold.is_finite() && threshold >= 0.0 && threshold <= max_h {
        c.line(
            left,
            y(threshold),
            width - right,
            y(threshold),
            r##"stroke="#e15759" stroke-dasharray="6 4""##,
        );
        c.text(
            width - right,
            y(threshold) - 4.0,
            "end",
            "",
            &format!("cut {}", sig(threshold, 4)),
        );
    }
    c.finish("Workload dendrogram")
}

fn decade_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite() && *v > 0.0)
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
    if !lo.is_finite() {
        return (0.1, 10.0);
    }
    let lo = lo.log10().floor();
    let mut hi = hi.log10().ceil();
    if hi <= lo {
        hi = lo + 1.0;
    }
    (lo, hi)
}

/// Log-log roofline: bandwidth slope, one compute ceiling per precision,
/// dashed extra bandwidth ceilings, labeled points.
pub fn roofline_svg(machine: &MachineModel, points: &[RooflinePoint]) -> String {
    let (left, right, top, bottom) = (70.0, 30.0, 40.0, 50.0);
    let (plot_w, plot_h) = (640.0, 420.0);
    let bw = machine.mem_bandwidth_gbps;

    let ridges = machine.peaks.values().map(|p| p / bw);
    let (x_lo, x_hi) = decade_range(
        points
            .iter()
            .map(|p| p.intensity)
            .chain(ridges)
            .chain([machine.peaks.values().fold(0.0f64, |a, &b| a.max(b)) / bw * 10.0]),
    );
    let x_min = 10f64.powf(x_lo);
    let (y_lo, y_hi) = decade_range(
        points
            .iter()
            .map(|p| p.throughput)
            .chain(machine.peaks.values().map(|p| p * 2.0))
            .chain([bw * x_min]),
    );
    let px = |i: f64| left + plot_w * (i.log10() - x_lo) / (x_hi - x_lo);
    let py = |g: f64| top + plot_h - plot_h * (g.log10() - y_lo) / (y_hi - y_lo);
    let width = left + plot_w + right;
    let height = top + plot_h + bottom;

    let mut c = Canvas::new(width, height);
    c.text(
        width / 2.0,
        22.0,
        "middle",
        "",
        &format!("Roofline: {}", machine.name),
    );
    let grid = r##"stroke="#ddd""##;
    for e in x_lo as i32..=x_hi as i32 {
        let v = 10f64.powi(e);
        c.line(px(v), top, px(v), top + plot_h, grid);
        c.text(px(v), top + plot_h + 16.0, "middle", "", &sig(v, 3));
    }
    for e in y_lo as i32..=y_hi as i32 {
        let v = 10f64.powi(e);
        c.line(left, py(v), left + plot_w, py(v), grid);
        c.text(left - 6.0, py(v) + 4.0, "end", "", &sig(v, 3));
    }
    c.text(
        left + plot_w / 2.0,
        height - 10.0,
        "middle",
        "",
        "Arithmetic intensity (FLOP/byte)",
    );
    c.text(
        16.0,
        top + plot_h / 2.0,
        "middle",
        &format!(r#" transform="rotate(-90 16 {})""#, n(top + plot_h / 2.0)),
        "Throughput (GFLOP/s)",
    );

    let x_max = 10f64.powf(x_hi);
    let y_max = 10f64.powf(y_hi);
    let clip = |i0: f64, g0: f64, i1: f64, g1: f64| {
        // Keep slope segments inside the plot.
        let g1c = g1.min(y_max);
        let i1c = if g1 > y_max { i0 * y_max / g0 } else { i1 };
        (i0, g0, i1c, g1c)
    };
    let top_peak = machine.peaks.values().fold(0.0f64, |a, &b| a.max(b));
    let ceiling = r##"stroke="#222" stroke-width="2""##;
    let (a, b, c2, d) = clip(x_min, bw * x_min, top_peak / bw, top_peak);
    c.line(px(a), py(b), px(c2), py(d), ceiling);
    c.text(
        px(a) + 4.0,
        py(b) - 6.0,
        "start",
        "",
        &format!("{} GB/s", sig(bw, 6)),
    );
    for (prec, &peak) in &machine.peaks {
        let ridge = peak / bw;
        c.line(px(ridge), py(peak), px(x_max), py(peak), ceiling);
        c.text(
            px(x_max) - 4.0,
            py(peak) - 6.0,
            "end",
            "",
            &format!("{} {} GFLOP/s", precision_label(*prec), sig(peak, 6)),
        );
    }
    for (label, gbps) in &machine.extra_ceilings {
        let (a, b, c2, d) = clip(x_min, gbps * x_min, top_peak / gbps, top_peak);
        c.line(
            px(a),
            py(b),
            px(c2),
            py(d),
            r##"stroke="#777" stroke-dasharray="5 4""##,
        );
        c.text(
            px(a) + 4.0,
            py(b) - 6.0,
            "start",
            "",
            &format!("{label} {} GB/s", sig(*gbps, 6)),
        );
    }
    for (i, p) in points.iter().enumerate() {
        if !(p.intensity.is_finite() && p.intensity > 0.0 && p.throughput > 0.0) {
            continue;
        }
        let color = PALETTE[i % PALETTE.len()];
        let title = format!(
            "{}: {} FLOP/B, {} GFLOP/s",
            p.name,
            sig(p.intensity, 6),
            sig(p.throughput, 6)
        );
        c.circle(px(p.intensity), py(p.throughput), 4.0, color, &title);
        c.text(
            px(p.intensity) + 6.0,
            py(p.throughput) - 4.0,
            "start",
            "",
            &p.name,
        );
    }
    c.finish(&format!("Roofline: {}", machine.name))
}

fn precision_label(p: Precision) -> &'static str {
    match p {
        Precision::Double => "FP64",
        Precision::Single => "FP32",
        Precision::Half => "FP16",
    }
}

/// Gantt chart: one lane per GPU, one colored block per job per GPU.
pub fn gantt_svg(schedule: &Schedule, title: &str) -> String {
    let (left, right, top, bottom) = (60.0, 20.0, 40.0, 40.0);
    let plot_w = 720.0;
    let lane = 28.0;
    let lanes = schedule.gpu_count.max(1) as f64;
    let width = left + plot_w + right;
    let height = top + lane * lanes + bottom;
    let span = if schedule.makespan > 0.0 {
        schedule.makespan
    } else {
        1.0
    };
    let px = |t: f64| left + plot_w * t / span;

    let mut c = Canvas::new(width, height);
    c.text(width / 2.0, 22.0, "middle", "", title);
    for g in 0..schedule.gpu_count {
        c.text(
            left - 6.0,
            top + lane * (g as f64 + 0.5) + 4.0,
            "end",
            "",
            &format!("GPU{g}"),
        );
    }
    let axis_y = top + lane * lanes;
    let step = nice_step(span, 8.0);
    let mut t = 0.0;
    while t <= span * (1.0 + 1e-9) {
        c.line(px(t), top, px(t), axis_y + 4.0, r##"stroke="#ddd""##);
        c.text(px(t), axis_y + 16.0, "middle", "", &sig(t, 6));
        t += step;
    }
    c.text(left + plot_w / 2.0, height - 6.0, "middle", "", "minutes");
    for (i, p) in schedule.placements.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let tip = format!(
            "{} on {} GPU(s): {} to {} min",
            p.job,
            p.width,
            sig(p.start, 6),
            sig(p.end, 6)
        );
        for &g in &p.gpu_ids {
            let y = top + lane * g as f64;
            let w = px(p.end) - px(p.start);
            c.rect(px(p.start), y + 2.0, w, lane - 4.0, color, &tip);
            if w > 7.0 * p.job.len() as f64 {
                c.text(
                    px(p.start) + w / 2.0,
                    y + lane / 2.0 + 4.0,
                    "middle",
                    "",
                    &p.job,
                );
            }
        }
    }
    c.finish(title)
}
