//! Dependency-free SVG scatter plots: one circle per observation, axis
//! lines with range labels, and a legend entry per class.

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 140.0;
const MARGIN_TOP: f64 = 24.0;
const MARGIN_BOTTOM: f64 = 52.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

fn axis_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() || !hi.is_finite() {
        return (-1.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 1.0, hi + 1.0);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

/// Renders points colored by class index. `class_names` supplies one legend
/// entry per class, in class order.
pub fn scatter(
    points: &[(f64, f64, usize)],
    class_names: &[String],
    x_label: &str,
    y_label: &str,
) -> String {
    let (x_lo, x_hi) = axis_range(points.iter().map(|p| p.0));
    let (y_lo, y_hi) = axis_range(points.iter().map(|p| p.1));
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = |v: f64| MARGIN_LEFT + (v - x_lo) / (x_hi - x_lo) * plot_w;
    let sy = |v: f64| MARGIN_TOP + (y_hi - v) / (y_hi - y_lo) * plot_h;

    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");

    // axis lines
    let x0 = MARGIN_LEFT;
    let x1 = MARGIN_LEFT + plot_w;
    let y0 = MARGIN_TOP + plot_h;
    let y1 = MARGIN_TOP;
    s.push_str(&format!(
        "<line x1=\"{x0:.2}\" y1=\"{y0:.2}\" x2=\"{x1:.2}\" y2=\"{y0:.2}\" stroke=\"black\" stroke-width=\"1\"/>\n"
    ));
    s.push_str(&format!(
        "<line x1=\"{x0:.2}\" y1=\"{y0:.2}\" x2=\"{x0:.2}\" y2=\"{y1:.2}\" stroke=\"black\" stroke-width=\"1\"/>\n"
    ));
    // range labels and axis titles
    s.push_str(&format!(
        "<text x=\"{x0:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"middle\">{:.3}</text>\n",
        y0 + 16.0,
        x_lo
    ));
    s.push_str(&format!(
        "<text x=\"{x1:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"middle\">{:.3}</text>\n",
        y0 + 16.0,
        x_hi
    ));
    s.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"end\">{:.3}</text>\n",
        x0 - 6.0,
        y0,
        y_lo
    ));
    s.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"end\">{:.3}</text>\n",
        x0 - 6.0,
        y1 + 10.0,
        y_hi
    ));
    s.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"13\" text-anchor=\"middle\">{}</text>\n",
        x0 + plot_w / 2.0,
        y0 + 36.0,
        escape(x_label)
    ));
    s.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 {:.2} {:.2})\">{}</text>\n",
        x0 - 44.0,
        y1 + plot_h / 2.0,
        x0 - 44.0,
        y1 + plot_h / 2.0,
        escape(y_label)
    ));

    for &(x, y, class) in points {
        let color = PALETTE[class % PALETTE.len()];
        s.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\" fill-opacity=\"0.8\"/>\n",
            sx(x),
            sy(y)
        ));
    }

    // legend: one swatch + label per class
    let lx = MARGIN_LEFT + plot_w + 18.0;
    for (i, name) in class_names.iter().enumerate() {
        let ly = MARGIN_TOP + 14.0 + 20.0 * i as f64;
        let color = PALETTE[i % PALETTE.len()];
        s.push_str(&format!(
            "<rect x=\"{lx:.2}\" y=\"{:.2}\" width=\"12\" height=\"12\" fill=\"{color}\"/>\n",
            ly - 10.0
        ));
        s.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{ly:.2}\" font-size=\"12\">{}</text>\n",
            lx + 18.0,
            escape(name)
        ));
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
