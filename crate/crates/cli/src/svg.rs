//! Minimal self-contained SVG line chart with a logarithmic vertical axis.

const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

pub struct SvgSeries {
    pub label: String,
    /// (iteration, positive value) pairs; nonpositive values are skipped by
    /// the caller since they cannot be placed on a log axis.
    pub points: Vec<(usize, f64)>,
}

pub fn line_chart(series: &[SvgSeries], y_label: &str) -> String {
    let width = 720.0;
    let height = 480.0;
    let margin_left = 70.0;
    let margin_right = 20.0;
    let margin_top = 20.0;
    let margin_bottom = 60.0;
    let plot_w = width - margin_left - margin_right;
    let plot_h = height - margin_top - margin_bottom;

    let mut x_max = 1usize;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for s in series {
        for &(k, v) in &s.points {
            x_max = x_max.max(k);
            y_min = y_min.min(v);
            y_max = y_max.max(v);
        }
    }
    if !y_min.is_finite() || !y_max.is_finite() {
        y_min = 1e-1;
        y_max = 1.0;
    }
    let log_lo = y_min.log10().floor();
    let log_hi = y_max.log10().ceil().max(log_lo + 1.0);

    let x_of = |k: usize| margin_left + plot_w * (k as f64) / (x_max as f64);
    let y_of = |v: f64| {
        let t = (v.log10() - log_lo) / (log_hi - log_lo);
        margin_top + plot_h * (1.0 - t)
    };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    // Axes.
    svg.push_str(&format!(
        "<line x1=\"{margin_left}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        margin_top + plot_h,
        margin_left + plot_w,
        margin_top + plot_h
    ));
    svg.push_str(&format!(
        "<line x1=\"{margin_left}\" y1=\"{margin_top}\" x2=\"{margin_left}\" y2=\"{}\" stroke=\"black\"/>\n",
        margin_top + plot_h
    ));
    // Decade gridlines and tick labels.
    let mut decade = log_lo as i64;
    while decade <= log_hi as i64 {
        let y = y_of(10f64.powi(decade as i32));
        svg.push_str(&format!(
            "<line x1=\"{margin_left}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"#dddddd\"/>\n",
            margin_left + plot_w
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"end\">1e{decade}</text>\n",
            margin_left - 6.0,
            y + 4.0
        ));
        decade += 1;
    }
    // X ticks at quarters.
    for q in 0..=4usize {
        let k = x_max * q / 4;
        let x = x_of(k);
        svg.push_str(&format!(
            "<text x=\"{x}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\">{k}</text>\n",
            margin_top + plot_h + 16.0
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">iteration</text>\n",
        margin_left + plot_w / 2.0,
        height - 18.0
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>\n",
        margin_top + plot_h / 2.0,
        margin_top + plot_h / 2.0,
        y_label
    ));
    // Series polylines and legend.
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mut path = String::new();
        for &(k, v) in &s.points {
            path.push_str(&format!("{:.2},{:.2} ", x_of(k), y_of(v)));
        }
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            path.trim_end()
        ));
        let ly = margin_top + 16.0 * (i as f64 + 1.0);
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            margin_left + plot_w - 150.0,
            margin_left + plot_w - 120.0
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"11\">{}</text>\n",
            margin_left + plot_w - 112.0,
            ly + 4.0,
            s.label
        ));
    }
    svg.push_str("</svg>\n");
    svg
}
