//! Minimal static SVG charts written as plain strings.

use std::fmt::Write;

const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
const FONT: &str = "font-family=\"sans-serif\" font-size=\"12\"";

pub fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn open(w: f64, h: f64, title: &str) -> String {
    let mut s = String::new();
    writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">"
    )
    .unwrap();
    writeln!(s, "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>").unwrap();
    writeln!(
        s,
        "<text x=\"{:.1}\" y=\"20\" text-anchor=\"middle\" {FONT} font-weight=\"bold\">{}</text>",
        w / 2.0,
        escape(title)
    )
    .unwrap();
    s
}

fn text(s: &mut String, x: f64, y: f64, anchor: &str, body: &str) {
    writeln!(
        s,
        "<text x=\"{x:.1}\" y=\"{y:.1}\" text-anchor=\"{anchor}\" {FONT}>{}</text>",
        escape(body)
    )
    .unwrap();
}

fn line(s: &mut String, x1: f64, y1: f64, x2: f64, y2: f64, colour: &str) {
    writeln!(
        s,
        "<line x1=\"{x1:.1}\" y1=\"{y1:.1}\" x2=\"{x2:.1}\" y2=\"{y2:.1}\" stroke=\"{colour}\"/>"
    )
    .unwrap();
}

fn rect(s: &mut String, x: f64, y: f64, w: f64, h: f64, colour: &str) {
    writeln!(
        s,
        "<rect x=\"{x:.1}\" y=\"{y:.1}\" width=\"{w:.1}\" height=\"{h:.1}\" fill=\"{colour}\"/>"
    )
    .unwrap();
}

fn legend(s: &mut String, x: f64, y: f64, names: &[String]) {
    for (i, name) in names.iter().enumerate() {
        let yy = y + 16.0 * i as f64;
        rect(s, x, yy - 9.0, 10.0, 10.0, PALETTE[i % PALETTE.len()]);
        text(s, x + 14.0, yy, "start", name);
    }
}

/// Histogram of `values` over `[0, 1]` in 20 bins.
pub fn histogram(title: &str, values: &[f64]) -> String {
    const BINS: usize = 20;
    let (w, h, left, top, bottom) = (480.0, 300.0, 50.0, 35.0, 40.0);
    let plot_w = w - left - 20.0;
    let plot_h = h - top - bottom;
    let mut counts = [0usize; BINS];
    for &v in values {
        let b = ((v.clamp(0.0, 1.0) * BINS as f64) as usize).min(BINS - 1);
        counts[b] += 1;
    }
    let max = counts.iter().copied().max().unwrap_or(0).max(1) as f64;
    let mut s = open(w, h, title);
    let bw = plot_w / BINS as f64;
    for (i, &c) in counts.iter().enumerate() {
        let bh = plot_h * c as f64 / max;
        rect(
            &mut s,
            left + bw * i as f64 + 1.0,
            top + plot_h - bh,
            bw - 2.0,
            bh,
            PALETTE[0],
        );
    }
    line(
        &mut s,
        left,
        top + plot_h,
        left + plot_w,
        top + plot_h,
        "black",
    );
    line(&mut s, left, top, left, top + plot_h, "black");
    for t in 0..=4 {
        let v = t as f64 / 4.0;
        text(
            &mut s,
            left + plot_w * v,
            top + plot_h + 15.0,
            "middle",
            &format!("{v:.2}"),
        );
    }
    text(
        &mut s,
        left - 5.0,
        top + 10.0,
        "end",
        &format!("{}", max as usize),
    );
    text(&mut s, left - 5.0, top + plot_h, "end", "0");
    text(
        &mut s,
        left + plot_w / 2.0,
        h - 8.0,
        "middle",
        &format!("n = {}", values.len()),
    );
    s.push_str("</svg>\n");
    s
}

/// A heading and its items, each item carrying one value per series.
pub type DotGroup = (String, Vec<(String, Vec<f64>)>);

/// One column per item, grouped under headings; each point is a value in
/// `[0, 1]` drawn in the colour of its series.
pub fn dot_plot(title: &str, series: &[String], groups: &[DotGroup]) -> String {
    let items: usize = groups.iter().map(|(_, v)| v.len()).sum();
    let (left, top, bottom) = (50.0, 40.0, 110.0);
    let step = 22.0;
    let gap = 20.0;
    let plot_w = step * items as f64 + gap * groups.len() as f64;
    let w = left + plot_w + 130.0;
    let h = 360.0;
    let plot_h = h - top - bottom;
    let mut s = open(w, h, title);
    line(&mut s, left, top, left, top + plot_h, "black");
    for t in 0..=4 {
        let v = t as f64 / 4.0;
        let y = top + plot_h * (1.0 - v);
        line(&mut s, left, y, left + plot_w, y, "#dddddd");
        text(&mut s, left - 5.0, y + 4.0, "end", &format!("{v:.2}"));
    }
    let mut x = left + gap / 2.0;
    for (heading, members) in groups {
        text(
            &mut s,
            x + step * members.len() as f64 / 2.0,
            top - 5.0,
            "middle",
            heading,
        );
        for (name, values) in members {
            let cx = x + step / 2.0;
            for (i, v) in values.iter().enumerate() {
                let cy = top + plot_h * (1.0 - v.clamp(0.0, 1.0));
                writeln!(
                    s,
                    "<circle cx=\"{cx:.1}\" cy=\"{cy:.1}\" r=\"4\" fill=\"{}\" fill-opacity=\"0.8\"/>",
                    PALETTE[i % PALETTE.len()]
                )
                .unwrap();
            }
            let ly = top + plot_h + 10.0;
            writeln!(
                s,
                "<text x=\"{cx:.1}\" y=\"{ly:.1}\" transform=\"rotate(60 {cx:.1} {ly:.1})\" {FONT}>{}</text>",
                escape(name)
            )
            .unwrap();
            x += step;
        }
        x += gap;
    }
    legend(&mut s, left + plot_w + 15.0, top + 10.0, series);
    s.push_str("</svg>\n");
    s
}

/// Vertical bars: for each category one bar per series. Undefined values are skipped.
pub fn grouped_bars(
    title: &str,
    categories: &[String],
    series: &[(String, Vec<Option<f64>>)],
) -> String {
    let (left, top, bottom) = (50.0, 35.0, 110.0);
    let bar = 14.0;
    let group_w = bar * series.len() as f64 + 16.0;
    let plot_w = group_w * categories.len() as f64;
    let w = left + plot_w + 150.0;
    let h = 360.0;
    let plot_h = h - top - bottom;
    let mut s = open(w, h, title);
    for t in 0..=4 {
        let v = t as f64 / 4.0;
        let y = top + plot_h * (1.0 - v);
        line(&mut s, left, y, left + plot_w, y, "#dddddd");
        text(&mut s, left - 5.0, y + 4.0, "end", &format!("{v:.2}"));
    }
    for (c, cat) in categories.iter().enumerate() {
        let x0 = left + group_w * c as f64 + 8.0;
        for (i, (_, values)) in series.iter().enumerate() {
            if let Some(v) = values.get(c).copied().flatten() {
                let bh = plot_h * v.clamp(0.0, 1.0);
                rect(
                    &mut s,
                    x0 + bar * i as f64,
                    top + plot_h - bh,
                    bar - 1.0,
                    bh,
                    PALETTE[i % PALETTE.len()],
                );
            }
        }
        let cx = x0 + bar * series.len() as f64 / 2.0;
        let ly = top + plot_h + 10.0;
        writeln!(
            s,
            "<text x=\"{cx:.1}\" y=\"{ly:.1}\" transform=\"rotate(45 {cx:.1} {ly:.1})\" {FONT}>{}</text>",
            escape(cat)
        )
        .unwrap();
    }
    line(
        &mut s,
        left,
        top + plot_h,
        left + plot_w,
        top + plot_h,
        "black",
    );
    let names: Vec<String> = series.iter().map(|(n, _)| n.clone()).collect();
    legend(&mut s, left + plot_w + 15.0, top + 10.0, &names);
    s.push_str("</svg>\n");
    s
}

/// Horizontal bars in the given order; negative values extend left of zero.
pub fn horizontal_bars(title: &str, items: &[(String, f64)]) -> String {
    let (left, top, right) = (140.0, 35.0, 60.0);
    let row = 22.0;
    let w = 560.0;
    let h = top + row * items.len() as f64 + 30.0;
    let plot_w = w - left - right;
    let lo = items.iter().map(|(_, v)| *v).fold(0.0f64, f64::min);
    let hi = items
        .iter()
        .map(|(_, v)| *v)
        .fold(0.0f64, f64::max)
        .max(lo + 1e-9);
    let scale = plot_w / (hi - lo);
    let zero = left + (-lo) * scale;
    let mut s = open(w, h, title);
    for (i, (name, v)) in items.iter().enumerate() {
        let y = top + row * i as f64;
        let (x, bw) = if *v >= 0.0 {
            (zero, v * scale)
        } else {
            (zero + v * scale, -v * scale)
        };
        rect(&mut s, x, y + 3.0, bw, row - 6.0, PALETTE[0]);
        text(&mut s, left - 6.0, y + row / 2.0 + 4.0, "end", name);
        text(
            &mut s,
            x + bw + 4.0,
            y + row / 2.0 + 4.0,
            "start",
            &format!("{v:.3}"),
        );
    }
    line(
        &mut s,
        zero,
        top,
        zero,
        top + row * items.len() as f64,
        "black",
    );
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn escapes_markup() {
        assert_eq!(escape("a<b & \"c\">"), "a&lt;b &amp; &quot;c&quot;&gt;");
    }

    #[test]
    fn charts_are_closed_documents() {
        let docs = [
            histogram("h", &[0.1, 0.5, 1.0]),
            dot_plot(
                "d",
                &["m".into()],
                &[("high".into(), vec![("x<y".into(), vec![0.5])])],
            ),
            grouped_bars("g", &["a".into()], &[("before".into(), vec![Some(0.4)])]),
            horizontal_bars("b", &[("p".into(), 1.0), ("q".into(), -0.2)]),
        ];
        for d in docs {
            assert!(d.starts_with("<svg"));
            assert!(d.trim_end().ends_with("</svg>"));
            assert!(!d.contains("x<y"));
        }
    }
}
