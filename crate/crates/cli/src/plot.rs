//! Static SVG figures for `eda`.

use std::fmt::Write as _;

use ndarray::Array2;

const W: f64 = 640.0;
const H: f64 = 400.0;
const MARGIN: f64 = 50.0;

fn header(s: &mut String, w: f64, h: f64) {
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
}

/// Bars of explained-variance ratio with the cumulative curve and the
/// retention threshold.
pub fn scree(rho: &[f64], cumulative: &[f64], threshold: f64) -> String {
    let mut s = String::new();
    header(&mut s, W, H);
    let pw = W - 2.0 * MARGIN;
    let ph = H - 2.0 * MARGIN;
    let n = rho.len().max(1) as f64;
    let slot = pw / n;
    let y = |v: f64| MARGIN + ph * (1.0 - v.clamp(0.0, 1.0));

    let _ = writeln!(
        s,
        r##"<line x1="{MARGIN}" y1="{}" x2="{}" y2="{}" stroke="#999" stroke-dasharray="4 3"/>"##,
        y(threshold),
        W - MARGIN,
        y(threshold)
    );
    for (i, &r) in rho.iter().enumerate() {
        let x = MARGIN + slot * i as f64 + slot * 0.15;
        let _ = writeln!(
            s,
            r##"<rect x="{x:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#4a7ab5"/>"##,
            y(r),
            slot * 0.7,
            MARGIN + ph - y(r)
        );
    }
    let points: Vec<String> = cumulative
        .iter()
        .enumerate()
        .map(|(i, &c)| format!("{:.2},{:.2}", MARGIN + slot * (i as f64 + 0.5), y(c)))
        .collect();
    let _ = writeln!(
        s,
        r##"<polyline points="{}" fill="none" stroke="#c0392b" stroke-width="1.5"/>"##,
        points.join(" ")
    );

    let _ = writeln!(
        s,
        r#"<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{}" stroke="black"/>"#,
        MARGIN + ph
    );
    let _ = writeln!(
        s,
        r#"<line x1="{MARGIN}" y1="{0}" x2="{1}" y2="{0}" stroke="black"/>"#,
        MARGIN + ph,
        W - MARGIN
    );
    for t in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" text-anchor="end">{t:.2}</text>"#,
            MARGIN - 6.0,
            y(t) + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">principal component (1..{})</text>"#,
        W / 2.0,
        H - 15.0,
        rho.len()
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="25" text-anchor="middle">explained variance (bars) and cumulative (line), threshold {threshold}</text>"#,
        W / 2.0
    );
    s.push_str("</svg>\n");
    s
}

/// Blue (-1) to white (0) to red (+1).
fn diverging(v: f64) -> String {
    let v = v.clamp(-1.0, 1.0);
    let (r, g, b) = if v >= 0.0 {
        (255.0, 255.0 * (1.0 - v), 255.0 * (1.0 - v))
    } else {
        (255.0 * (1.0 + v), 255.0 * (1.0 + v), 255.0)
    };
    format!("rgb({},{},{})", r.round() as u8, g.round() as u8, b.round() as u8)
}

pub fn heatmap(m: &Array2<f64>, names: &[String]) -> String {
    let n = m.nrows();
    let cell = 16.0;
    let left = 60.0;
    let top = 60.0;
    let size = left + cell * n as f64 + 20.0;
    let mut s = String::new();
    header(&mut s, size, size);
    for ((i, j), &v) in m.indexed_iter() {
        let _ = writeln!(
            s,
            r#"<rect x="{}" y="{}" width="{cell}" height="{cell}" fill="{}"><title>{} / {}: {v:.3}</title></rect>"#,
            left + cell * j as f64,
            top + cell * i as f64,
            diverging(v),
            names.get(i).map_or("", String::as_str),
            names.get(j).map_or("", String::as_str),
        );
    }
    for (k, name) in names.iter().enumerate().take(n) {
        let c = cell * k as f64 + cell / 2.0;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end" font-size="9">{name}</text>"#,
            left - 4.0,
            top + c + 3.0
        );
        let _ = writeln!(
            s,
            r#"<text transform="translate({},{}) rotate(-90)" font-size="9">{name}</text>"#,
            left + c + 3.0,
            top - 4.0
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn colour_scale_endpoints() {
        assert_eq!(diverging(1.0), "rgb(255,0,0)");
        assert_eq!(diverging(0.0), "rgb(255,255,255)");
        assert_eq!(diverging(-1.0), "rgb(0,0,255)");
        assert_eq!(diverging(7.0), diverging(1.0));
    }

    #[test]
    fn one_bar_and_one_cell_per_entry() {
        let svg = scree(&[0.6, 0.3, 0.1], &[0.6, 0.9, 1.0], 0.95);
        assert_eq!(svg.matches("fill=\"#4a7ab5\"").count(), 3);
        assert!(svg.trim_end().ends_with("</svg>"));

        let m = Array2::from_shape_vec((2, 2), vec![1.0, -0.5, -0.5, 1.0]).unwrap();
        let svg = heatmap(&m, &["a".into(), "b".into()]);
        assert_eq!(svg.matches("<title>").count(), 4);
    }
}
