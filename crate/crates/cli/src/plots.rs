//! Minimal SVG emission for inspection figures. Every plot has a sibling
//! CSV written by the calling stage; the CSV is the test surface, the SVG
//! is for eyes only.

fn fmt(v: f64) -> String {
    format!("{v:.2}")
}

/// Map a correlation in [-1, 1] to a blue-white-red fill.
fn correlation_color(value: f64) -> String {
    let v = value.clamp(-1.0, 1.0);
    let (r, g, b) = if v >= 0.0 {
        let t = v;
        (255.0, 255.0 * (1.0 - t), 255.0 * (1.0 - t))
    } else {
        let t = -v;
        (255.0 * (1.0 - t), 255.0 * (1.0 - t), 255.0)
    };
    format!("rgb({},{},{})", r as u8, g as u8, b as u8)
}

/// Correlation grid with numeric cells. `None` cells (undefined
/// correlations) render gray with a dash.
pub fn heatmap_svg(
    title: &str,
    row_labels: &[String],
    col_labels: &[String],
    values: &[Vec<Option<f64>>],
) -> String {
    let cell = 56.0;
    let left = 150.0;
    let top = 70.0;
    let width = left + cell * col_labels.len() as f64 + 20.0;
    let height = top + cell * row_labels.len() as f64 + 20.0;
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         font-family=\"monospace\" font-size=\"11\">\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{left}\" y=\"20\" font-size=\"14\">{title}</text>\n"
    ));
    for (j, label) in col_labels.iter().enumerate() {
        let x = left + cell * j as f64 + cell / 2.0;
        svg.push_str(&format!(
            "<text x=\"{x}\" y=\"{}\" text-anchor=\"start\" transform=\"rotate(-35 {x} {})\">{label}</text>\n",
            top - 10.0,
            top - 10.0
        ));
    }
    for (i, row_label) in row_labels.iter().enumerate() {
        let y = top + cell * i as f64 + cell / 2.0;
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{row_label}</text>\n",
            left - 8.0,
            y + 4.0
        ));
        for (j, value) in values[i].iter().enumerate() {
            let x = left + cell * j as f64;
            let rect_y = top + cell * i as f64;
            match value {
                Some(v) => {
                    svg.push_str(&format!(
                        "<rect x=\"{x}\" y=\"{rect_y}\" width=\"{cell}\" height=\"{cell}\" \
                         fill=\"{}\" stroke=\"#999\"/>\n",
                        correlation_color(*v)
                    ));
                    svg.push_str(&format!(
                        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
                        x + cell / 2.0,
                        rect_y + cell / 2.0 + 4.0,
                        fmt(*v)
                    ));
                }
                None => {
                    svg.push_str(&format!(
                        "<rect x=\"{x}\" y=\"{rect_y}\" width=\"{cell}\" height=\"{cell}\" \
                         fill=\"#dddddd\" stroke=\"#999\"/>\n"
                    ));
                    svg.push_str(&format!(
                        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">-</text>\n",
                        x + cell / 2.0,
                        rect_y + cell / 2.0 + 4.0
                    ));
                }
            }
        }
    }
    svg.push_str("</svg>\n");
    svg
}

struct Axis {
    min: f64,
    max: f64,
}

impl Axis {
    fn from_values<'a>(values: impl Iterator<Item = &'a f64>) -> Axis {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for &v in values {
            min = min.min(v);
            max = max.max(v);
        }
        if !min.is_finite() || !max.is_finite() {
            return Axis { min: 0.0, max: 1.0 };
        }
        if (max - min).abs() < 1e-12 {
            return Axis {
                min: min - 1.0,
                max: max + 1.0,
            };
        }
        let pad = (max - min) * 0.05;
        Axis {
            min: min - pad,
            max: max + pad,
        }
    }

    fn project(&self, v: f64, lo: f64, hi: f64) -> f64 {
        lo + (v - self.min) / (self.max - self.min) * (hi - lo)
    }
}

/// Scatter plot with axes, grid ticks, optional y = x identity line and an
/// optional overlay polyline (points sorted by x).
pub fn scatter_svg(
    title: &str,
    x_label: &str,
    y_label: &str,
    points: &[(f64, f64)],
    identity_line: bool,
    overlay: Option<&[(f64, f64)]>,
) -> String {
    let width = 520.0;
    let height = 460.0;
    let left = 70.0;
    let right = width - 20.0;
    let top = 40.0;
    let bottom = height - 50.0;

    let xs = Axis::from_values(
        points
            .iter()
            .map(|(x, _)| x)
            .chain(overlay.unwrap_or(&[]).iter().map(|(x, _)| x)),
    );
    let ys = Axis::from_values(
        points
            .iter()
            .map(|(_, y)| y)
            .chain(overlay.unwrap_or(&[]).iter().map(|(_, y)| y)),
    );

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         font-family=\"monospace\" font-size=\"11\">\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{left}\" y=\"20\" font-size=\"14\">{title}</text>\n"
    ));
    svg.push_str(&format!(
        "<rect x=\"{left}\" y=\"{top}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#333\"/>\n",
        right - left,
        bottom - top
    ));

    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let xv = xs.min + t * (xs.max - xs.min);
        let yv = ys.min + t * (ys.max - ys.min);
        let xp = xs.project(xv, left, right);
        let yp = ys.project(yv, bottom, top);
        svg.push_str(&format!(
            "<line x1=\"{xp}\" y1=\"{bottom}\" x2=\"{xp}\" y2=\"{top}\" stroke=\"#eee\"/>\n"
        ));
        svg.push_str(&format!(
            "<line x1=\"{left}\" y1=\"{yp}\" x2=\"{right}\" y2=\"{yp}\" stroke=\"#eee\"/>\n"
        ));
        svg.push_str(&format!(
            "<text x=\"{xp}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            bottom + 16.0,
            fmt(xv)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n",
            left - 6.0,
            yp + 4.0,
            fmt(yv)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{x_label}</text>\n",
        (left + right) / 2.0,
        height - 12.0
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{y_label}</text>\n",
        (top + bottom) / 2.0,
        (top + bottom) / 2.0
    ));

    if identity_line {
        let lo = xs.min.max(ys.min);
        let hi = xs.max.min(ys.max);
        if hi > lo {
            let x1 = xs.project(lo, left, right);
            let y1 = ys.project(lo, bottom, top);
            let x2 = xs.project(hi, left, right);
            let y2 = ys.project(hi, bottom, top);
            svg.push_str(&format!(
                "<line x1=\"{x1}\" y1=\"{y1}\" x2=\"{x2}\" y2=\"{y2}\" stroke=\"#888\" \
                 stroke-dasharray=\"5,4\"/>\n"
            ));
        }
    }

    for &(x, y) in points {
        svg.push_str(&format!(
            "<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"steelblue\" fill-opacity=\"0.7\"/>\n",
            xs.project(x, left, right),
            ys.project(y, bottom, top)
        ));
    }

    if let Some(line) = overlay {
        let path: Vec<String> = line
            .iter()
            .map(|&(x, y)| {
                format!(
                    "{},{}",
                    xs.project(x, left, right),
                    ys.project(y, bottom, top)
                )
            })
            .collect();
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"crimson\" stroke-width=\"2\"/>\n",
            path.join(" ")
        ));
    }

    svg.push_str("</svg>\n");
    svg
}
