//! Dependency-free SVG line charts. Deterministic output: fixed-precision
//! coordinates, a stable palette, and an embedded metadata comment carrying
//! the seed and config hash.

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 540.0;
const MARGIN_LEFT: f64 = 78.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 46.0;
const MARGIN_BOTTOM: f64 = 58.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct ChartSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Horizontal dotted reference line (value, label).
    pub hline: Option<(f64, String)>,
    /// Seed/config-hash comment embedded in the file.
    pub metadata: String,
}

fn fmt_coord(v: f64) -> String {
    format!("{v:.3}")
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let a = v.abs();
    if !(1e-3..1e4).contains(&a) {
        format!("{v:.2e}")
    } else {
        let s = format!("{v:.4}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        s.to_string()
    }
}

fn nice_ticks(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let span = hi - lo;
    if span <= 0.0 || !span.is_finite() {
        return vec![lo];
    }
    let raw_step = span / count as f64;
    let mag = 10f64.powf(raw_step.log10().floor());
    let norm = raw_step / mag;
    let step = if norm < 1.5 {
        mag
    } else if norm < 3.5 {
        2.0 * mag
    } else if norm < 7.5 {
        5.0 * mag
    } else {
        10.0 * mag
    };
    let first = (lo / step).ceil() * step;
    let mut ticks = Vec::new();
    let mut t = first;
    while t <= hi + step * 1e-9 {
        ticks.push(if t.abs() < step * 1e-9 { 0.0 } else { t });
        t += step;
    }
    ticks
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders the chart as a standalone SVG document.
pub fn line_chart(spec: &ChartSpec) -> String {
    let finite_points = || {
        spec.series
            .iter()
            .flat_map(|s| s.points.iter())
            .filter(|(x, y)| x.is_finite() && y.is_finite())
    };
    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for &(x, y) in finite_points() {
        x_min = x_min.min(x);
        x_max = x_max.max(x);
        y_min = y_min.min(y);
        y_max = y_max.max(y);
    }
    if let Some((v, _)) = spec.hline {
        y_min = y_min.min(v);
        y_max = y_max.max(v);
    }
    if !x_min.is_finite() {
        x_min = 0.0;
        x_max = 1.0;
    }
    if !y_min.is_finite() {
        y_min = 0.0;
        y_max = 1.0;
    }
    if x_max - x_min <= 0.0 {
        x_min -= 0.5;
        x_max += 0.5;
    }
    if y_max - y_min <= 0.0 {
        y_min -= 0.5;
        y_max += 0.5;
    }
    let y_pad = 0.05 * (y_max - y_min);
    y_min -= y_pad;
    y_max += y_pad;

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let to_px = |x: f64, y: f64| -> (f64, f64) {
        (
            MARGIN_LEFT + (x - x_min) / (x_max - x_min) * plot_w,
            MARGIN_TOP + (1.0 - (y - y_min) / (y_max - y_min)) * plot_h,
        )
    };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str(&format!("<!-- {} -->\n", xml_escape(&spec.metadata)));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" \
         text-anchor=\"middle\">{}</text>\n",
        WIDTH / 2.0,
        xml_escape(&spec.title)
    ));

    // axes and grid
    let (x0, y0) = (MARGIN_LEFT, MARGIN_TOP + plot_h);
    svg.push_str(&format!(
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{}\" y2=\"{y0}\" stroke=\"black\"/>\n",
        MARGIN_LEFT + plot_w
    ));
    svg.push_str(&format!(
        "<line x1=\"{x0}\" y1=\"{}\" x2=\"{x0}\" y2=\"{y0}\" stroke=\"black\"/>\n",
        MARGIN_TOP
    ));
    for tick in nice_ticks(x_min, x_max, 6) {
        let (px, _) = to_px(tick, y_min);
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{y0}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
            fmt_coord(px),
            fmt_coord(px),
            fmt_coord(y0 + 5.0)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" \
             text-anchor=\"middle\">{}</text>\n",
            fmt_coord(px),
            fmt_coord(y0 + 20.0),
            fmt_tick(tick)
        ));
    }
    for tick in nice_ticks(y_min, y_max, 6) {
        let (_, py) = to_px(x_min, tick);
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{x0}\" y2=\"{}\" stroke=\"black\"/>\n",
            fmt_coord(x0 - 5.0),
            fmt_coord(py),
            fmt_coord(py)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" \
             text-anchor=\"end\">{}</text>\n",
            fmt_coord(x0 - 9.0),
            fmt_coord(py + 4.0),
            fmt_tick(tick)
        ));
        svg.push_str(&format!(
            "<line x1=\"{x0}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#dddddd\"/>\n",
            fmt_coord(py),
            MARGIN_LEFT + plot_w,
            fmt_coord(py)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" \
         text-anchor=\"middle\">{}</text>\n",
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 14.0,
        xml_escape(&spec.x_label)
    ));
    svg.push_str(&format!(
        "<text x=\"18\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" \
         text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">{}</text>\n",
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0,
        xml_escape(&spec.y_label)
    ));

    if let Some((v, label)) = &spec.hline {
        let (_, py) = to_px(x_min, *v);
        svg.push_str(&format!(
            "<line x1=\"{x0}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"red\" \
             stroke-dasharray=\"3 4\"/>\n",
            fmt_coord(py),
            MARGIN_LEFT + plot_w,
            fmt_coord(py)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" \
             fill=\"red\" text-anchor=\"end\">{}</text>\n",
            MARGIN_LEFT + plot_w - 4.0,
            fmt_coord(py - 6.0),
            xml_escape(label)
        ));
    }

    for (idx, series) in spec.series.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let mut path = String::new();
        for &(x, y) in series.points.iter().filter(|(x, y)| x.is_finite() && y.is_finite()) {
            let (px, py) = to_px(x, y);
            if path.is_empty() {
                path.push_str(&format!("M {} {}", fmt_coord(px), fmt_coord(py)));
            } else {
                path.push_str(&format!(" L {} {}", fmt_coord(px), fmt_coord(py)));
            }
        }
        if !path.is_empty() {
            svg.push_str(&format!(
                "<path d=\"{path}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.4\">\
                 <title>{}</title></path>\n",
                xml_escape(&series.label)
            ));
        }
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_is_deterministic_and_well_formed() {
        let spec = ChartSpec {
            title: "cost".into(),
            x_label: "t".into(),
            y_label: "value".into(),
            series: vec![Series {
                label: "node 1".into(),
                points: (0..50).map(|t| (t as f64, (t as f64 * 0.1).sin())).collect(),
            }],
            hline: Some((0.25, "optimal".into())),
            metadata: "seed=7 config=abc".into(),
        };
        let a = line_chart(&spec);
        let b = line_chart(&spec);
        assert_eq!(a, b);
        assert!(a.starts_with("<svg"));
        assert!(a.contains("seed=7"));
        assert!(a.contains("stroke-dasharray"));
        assert!(a.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn empty_series_still_renders() {
        let spec = ChartSpec {
            title: "empty".into(),
            x_label: "t".into(),
            y_label: "v".into(),
            series: vec![],
            hline: None,
            metadata: String::new(),
        };
        let svg = line_chart(&spec);
        assert!(svg.contains("</svg>"));
    }

    #[test]
    fn tick_formatting() {
        assert_eq!(fmt_tick(0.0), "0");
        assert_eq!(fmt_tick(2.5), "2.5");
        assert_eq!(fmt_tick(12345.0), "1.23e4");
    }
}
