//! Static SVG plots. Every plotted quantity is also written to a CSV or TSV
//! by the command that draws it.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;
const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn header(title: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    out
}

/// Affine map from data bounds onto the plotting area, keeping aspect ratio
/// when `square` is set.
struct Frame {
    x0: f64,
    y0: f64,
    sx: f64,
    sy: f64,
}

impl Frame {
    fn new(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone, square: bool) -> Self {
        let bounds = |it: &mut dyn Iterator<Item = f64>| {
            it.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
        };
        let (mut xlo, mut xhi) = bounds(&mut xs.clone());
        let (mut ylo, mut yhi) = bounds(&mut ys.clone());
        if !xlo.is_finite() {
            (xlo, xhi) = (0.0, 1.0);
        }
        if !ylo.is_finite() {
            (ylo, yhi) = (0.0, 1.0);
        }
        let pad = |lo: f64, hi: f64| if hi > lo { (hi - lo) * 0.05 } else { 0.5 };
        let (px, py) = (pad(xlo, xhi), pad(ylo, yhi));
        (xlo, xhi, ylo, yhi) = (xlo - px, xhi + px, ylo - py, yhi + py);
        let (w, h) = (WIDTH - 2.0 * MARGIN, HEIGHT - 2.0 * MARGIN);
        let (mut sx, mut sy) = (w / (xhi - xlo), h / (yhi - ylo));
        if square {
            let s = sx.min(sy);
            (sx, sy) = (s, s);
        }
        Self {
            x0: xlo,
            y0: ylo,
            sx,
            sy,
        }
    }

    fn x(&self, v: f64) -> f64 {
        MARGIN + (v - self.x0) * self.sx
    }

    fn y(&self, v: f64) -> f64 {
        HEIGHT - MARGIN - (v - self.y0) * self.sy
    }

    fn axes(&self, out: &mut String, x_label: &str, y_label: &str) {
        let (l, r, t, b) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
        let _ = writeln!(
            out,
            r#"<path d="M{l} {t} L{l} {b} L{r} {b}" fill="none" stroke="black" stroke-width="1"/>"#
        );
        for i in 0..=4 {
            let f = i as f64 / 4.0;
            let (px, py) = (l + f * (r - l), b - f * (b - t));
            let (vx, vy) = (
                self.x0 + (px - MARGIN) / self.sx,
                self.y0 + (HEIGHT - MARGIN - py) / self.sy,
            );
            let _ = writeln!(
                out,
                r#"<text x="{px:.1}" y="{:.1}" text-anchor="middle">{vx:.3}</text>"#,
                b + 16.0
            );
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{py:.1}" text-anchor="end">{vy:.3}</text>"#,
                l - 4.0
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            WIDTH / 2.0,
            HEIGHT - 14.0,
            escape(x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
            HEIGHT / 2.0,
            HEIGHT / 2.0,
            escape(y_label)
        );
    }
}

fn legend(out: &mut String, names: &[String]) {
    for (i, name) in names.iter().enumerate() {
        let y = MARGIN + 16.0 * i as f64;
        let x = WIDTH - MARGIN + 8.0;
        let _ = writeln!(
            out,
            r#"<rect x="{x:.1}" y="{:.1}" width="10" height="10" fill="{}"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            y - 9.0,
            PALETTE[i % PALETTE.len()],
            x + 14.0,
            y,
            escape(name)
        );
    }
}

/// Scatter plot of labelled points; colours follow the sorted label order.
pub fn scatter(title: &str, points: &[(f64, f64, String)]) -> String {
    let mut names: Vec<String> = points.iter().map(|p| p.2.clone()).collect();
    names.sort();
    names.dedup();
    let frame = Frame::new(points.iter().map(|p| p.0), points.iter().map(|p| p.1), true);
    let mut out = header(title);
    frame.axes(&mut out, "component 1", "component 2");
    for (x, y, label) in points {
        let c = names.iter().position(|n| n == label).unwrap_or(0);
        let _ = writeln!(
            out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="{}" fill-opacity="0.8"/>"#,
            frame.x(*x),
            frame.y(*y),
            PALETTE[c % PALETTE.len()]
        );
    }
    legend(&mut out, &names);
    out.push_str("</svg>\n");
    out
}

/// Named series of `(x, y)` samples; `None` marks a missing value.
pub type Series = (String, Vec<(f64, Option<f64>)>);

/// Line plot with one polyline per named series. Missing values break the
/// line.
pub fn line_plot(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let all = series.iter().flat_map(|s| s.1.iter());
    let frame = Frame::new(all.clone().map(|p| p.0), all.filter_map(|p| p.1).chain([0.0]), false);
    let mut out = header(title);
    frame.axes(&mut out, x_label, y_label);
    for (i, (_, pts)) in series.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let mut d = String::new();
        let mut pen_down = false;
        for &(x, y) in pts {
            match y {
                Some(y) => {
                    let _ = write!(
                        d,
                        "{}{:.2} {:.2} ",
                        if pen_down { "L" } else { "M" },
                        frame.x(x),
                        frame.y(y)
                    );
                    let _ = writeln!(
                        out,
                        r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{colour}"/>"#,
                        frame.x(x),
                        frame.y(y)
                    );
                    pen_down = true;
                }
                None => pen_down = false,
            }
        }
        if !d.is_empty() {
            let _ = writeln!(
                out,
                r#"<path d="{}" fill="none" stroke="{colour}" stroke-width="2"/>"#,
                d.trim_end()
            );
        }
    }
    legend(&mut out, &series.iter().map(|s| s.0.clone()).collect::<Vec<_>>());
    out.push_str("</svg>\n");
    out
}

/// Square matrix as a grid of cells shaded from white (0) to dark (max).
pub fn heatmap(title: &str, ids: &[String], values: &[f64]) -> String {
    let n = ids.len();
    let max = values.iter().copied().fold(0.0, f64::max);
    let mut out = header(title);
    let side = (HEIGHT - 2.0 * MARGIN).min(WIDTH - 2.0 * MARGIN);
    let cell = if n == 0 { 0.0 } else { side / n as f64 };
    let left = (WIDTH - side) / 2.0;
    for i in 0..n {
        for j in 0..n {
            let v = values[i * n + j];
            let f = if max > 0.0 { v / max } else { 0.0 };
            let shade = (255.0 * (1.0 - f)).round() as u8;
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="{cell:.2}" height="{cell:.2}" fill="rgb({shade},{shade},255)"><title>{} / {}: {v}</title></rect>"#,
                left + j as f64 * cell,
                MARGIN + i as f64 * cell,
                escape(&ids[i]),
                escape(&ids[j])
            );
        }
    }
    if n <= 40 {
        for (i, id) in ids.iter().enumerate() {
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end" font-size="8">{}</text>"#,
                left - 3.0,
                MARGIN + (i as f64 + 0.7) * cell,
                escape(id)
            );
        }
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">max = {max:.4}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 20.0
    );
    out.push_str("</svg>\n");
    out
}

/// Projected backbone with the knot core highlighted and a cycle drawn on
/// top; cycle edges along the backbone are solid, chords are dashed.
pub fn backbone(title: &str, proj: &[(f64, f64)], in_core: &[bool], cycle: &[(usize, usize, bool)]) -> String {
    let frame = Frame::new(proj.iter().map(|p| p.0), proj.iter().map(|p| p.1), true);
    let mut out = header(title);
    for (w, core) in proj.windows(2).zip(in_core.windows(2)) {
        let highlighted = core[0] && core[1];
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{}" stroke-width="{}"/>"#,
            frame.x(w[0].0),
            frame.y(w[0].1),
            frame.x(w[1].0),
            frame.y(w[1].1),
            if highlighted { "#d62728" } else { "#9a9a9a" },
            if highlighted { 3 } else { 1 }
        );
    }
    for &(u, v, on_backbone) in cycle {
        let dash = if on_backbone { "" } else { r#" stroke-dasharray="4 3""# };
        let _ = writeln!(
            out,
            r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#1f77b4" stroke-width="2"{dash}/>"##,
            frame.x(proj[u].0),
            frame.y(proj[u].1),
            frame.x(proj[v].0),
            frame.y(proj[v].1)
        );
    }
    legend(&mut out, &["knot core".to_string(), "cycle".to_string()]);
    out.push_str("</svg>\n");
    out
}
