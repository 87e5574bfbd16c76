//! Minimal SVG chart emission: line charts with optional shaded percentile
//! bands, and bar charts with confidence whiskers.

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 50.0;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// One plotted curve: `(x, y)` points plus an optional `(lo, hi)` band.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub band: Option<Vec<(f64, f64, f64)>>,
}

/// One bar: label, height, confidence half-width.
#[derive(Debug, Clone)]
pub struct BarGroup {
    pub label: String,
    pub value: f64,
    pub ci: f64,
}

struct Scale {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Scale {
    fn x(&self, v: f64) -> f64 {
        let span = (self.x1 - self.x0).max(1e-12);
        MARGIN_L + (v - self.x0) / span * (WIDTH - MARGIN_L - MARGIN_R)
    }
    fn y(&self, v: f64) -> f64 {
        let span = (self.y1 - self.y0).max(1e-12);
        HEIGHT - MARGIN_B - (v - self.y0) / span * (HEIGHT - MARGIN_T - MARGIN_B)
    }
}

fn svg_header(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\">\n\
         <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">{}</text>\n",
        WIDTH / 2.0,
        xml_escape(title)
    )
}

fn axes(scale: &Scale, x_label: &str, y_label: &str) -> String {
    let mut s = String::new();
    let (xl, xr) = (MARGIN_L, WIDTH - MARGIN_R);
    let (yt, yb) = (MARGIN_T, HEIGHT - MARGIN_B);
    s.push_str(&format!(
        "<line x1=\"{xl}\" y1=\"{yb}\" x2=\"{xr}\" y2=\"{yb}\" stroke=\"black\"/>\n\
         <line x1=\"{xl}\" y1=\"{yt}\" x2=\"{xl}\" y2=\"{yb}\" stroke=\"black\"/>\n"
    ));
    for i in 0..=4 {
        let fx = scale.x0 + (scale.x1 - scale.x0) * i as f64 / 4.0;
        let fy = scale.y0 + (scale.y1 - scale.y0) * i as f64 / 4.0;
        let px = scale.x(fx);
        let py = scale.y(fy);
        s.push_str(&format!(
            "<text x=\"{px}\" y=\"{}\" text-anchor=\"middle\" font-size=\"11\">{fx:.3}</text>\n\
             <text x=\"{}\" y=\"{py}\" text-anchor=\"end\" font-size=\"11\">{fy:.3}</text>\n",
            yb + 16.0,
            xl - 6.0
        ));
    }
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"13\">{}</text>\n\
         <text x=\"16\" y=\"{}\" text-anchor=\"middle\" font-size=\"13\" \
         transform=\"rotate(-90 16 {})\">{}</text>\n",
        (xl + xr) / 2.0,
        HEIGHT - 12.0,
        xml_escape(x_label),
        (yt + yb) / 2.0,
        (yt + yb) / 2.0,
        xml_escape(y_label)
    ));
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Multi-series line chart with optional shaded bands.
pub fn line_chart_svg(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for s in series {
        for &(x, y) in &s.points {
            xs.push(x);
            ys.push(y);
        }
        if let Some(band) = &s.band {
            for &(_, lo, hi) in band {
                ys.push(lo);
                ys.push(hi);
            }
        }
    }
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scale = if xs.is_empty() {
        Scale { x0: 0.0, x1: 1.0, y0: 0.0, y1: 1.0 }
    } else {
        let (y0, y1) = (min(&ys), max(&ys));
        let pad = 0.05 * (y1 - y0).max(1e-9);
        Scale { x0: min(&xs), x1: max(&xs), y0: y0 - pad, y1: y1 + pad }
    };

    let mut out = svg_header(title);
    out.push_str(&axes(&scale, x_label, y_label));
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if let Some(band) = &s.band {
            if !band.is_empty() {
                let mut d = String::from("M");
                for &(x, lo, _) in band {
                    d.push_str(&format!(" {:.2},{:.2}", scale.x(x), scale.y(lo)));
                }
                for &(x, _, hi) in band.iter().rev() {
                    d.push_str(&format!(" {:.2},{:.2}", scale.x(x), scale.y(hi)));
                }
                out.push_str(&format!(
                    "<path d=\"{d} Z\" fill=\"{color}\" fill-opacity=\"0.15\" stroke=\"none\"/>\n"
                ));
            }
        }
        if !s.points.is_empty() {
            let mut d = String::from("M");
            for &(x, y) in &s.points {
                d.push_str(&format!(" {:.2},{:.2}", scale.x(x), scale.y(y)));
            }
            out.push_str(&format!(
                "<path d=\"{d}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n"
            ));
        }
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" fill=\"{color}\">{}</text>\n",
            WIDTH - MARGIN_R - 160.0,
            MARGIN_T + 16.0 * (i + 1) as f64,
            xml_escape(&s.label)
        ));
    }
    out.push_str("</svg>\n");
    out
}

/// Bar chart with 95%-confidence whiskers.
pub fn bar_chart_svg(title: &str, y_label: &str, bars: &[BarGroup]) -> String {
    let mut ys = vec![0.0];
    for b in bars {
        ys.push(b.value - b.ci);
        ys.push(b.value + b.ci);
    }
    let y0 = ys.iter().copied().fold(f64::INFINITY, f64::min);
    let y1 = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pad = 0.05 * (y1 - y0).max(1e-9);
    let scale = Scale { x0: 0.0, x1: bars.len() as f64, y0: y0 - pad, y1: y1 + pad };

    let mut out = svg_header(title);
    out.push_str(&axes(&scale, "", y_label));
    let slot = (WIDTH - MARGIN_L - MARGIN_R) / bars.len().max(1) as f64;
    for (i, b) in bars.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let cx = MARGIN_L + slot * (i as f64 + 0.5);
        let w = slot * 0.6;
        let ybase = scale.y(0.0f64.clamp(scale.y0, scale.y1));
        let ytop = scale.y(b.value);
        let (rect_y, rect_h) = if ytop < ybase { (ytop, ybase - ytop) } else { (ybase, ytop - ybase) };
        out.push_str(&format!(
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{color}\" \
             fill-opacity=\"0.8\"/>\n",
            cx - w / 2.0,
            rect_y,
            w,
            rect_h.max(0.5)
        ));
        let (wl, wh) = (scale.y(b.value - b.ci), scale.y(b.value + b.ci));
        out.push_str(&format!(
            "<line x1=\"{cx:.2}\" y1=\"{wl:.2}\" x2=\"{cx:.2}\" y2=\"{wh:.2}\" stroke=\"black\"/>\n\
             <line x1=\"{:.2}\" y1=\"{wl:.2}\" x2=\"{:.2}\" y2=\"{wl:.2}\" stroke=\"black\"/>\n\
             <line x1=\"{:.2}\" y1=\"{wh:.2}\" x2=\"{:.2}\" y2=\"{wh:.2}\" stroke=\"black\"/>\n",
            cx - 6.0,
            cx + 6.0,
            cx - 6.0,
            cx + 6.0
        ));
        out.push_str(&format!(
            "<text x=\"{cx:.2}\" y=\"{}\" text-anchor=\"middle\" font-size=\"11\">{}</text>\n",
            HEIGHT - MARGIN_B + 16.0,
            xml_escape(&b.label)
        ));
    }
    out.push_str("</svg>\n");
    out
}
