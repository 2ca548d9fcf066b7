//! Minimal SVG rendering of an F-1 curve.

use std::fmt::Write;

use uav_codesign::f1model::F1Curve;

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 56.0;

/// Curve, ceiling, knee marker and labelled design points `(name, fps, v)`.
pub fn f1_svg(curve: &F1Curve, designs: &[(String, f64, f64)]) -> String {
    let x_max = curve
        .points
        .last()
        .map_or(1.0, |p| p.0)
        .max(designs.iter().map(|d| d.1).fold(0.0, f64::max));
    let y_max = curve.ceiling * 1.15;
    let sx = |x: f64| PAD + (W - 2.0 * PAD) * x / x_max;
    let sy = |y: f64| H - PAD - (H - 2.0 * PAD) * y / y_max;

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let (x0, y0, x1, y1) = (sx(0.0), sy(0.0), sx(x_max), sy(y_max));
    let _ = writeln!(s, r#"<path d="M{x0:.1},{y1:.1} L{x0:.1},{y0:.1} L{x1:.1},{y0:.1}" stroke="black" fill="none"/>"#);
    for i in 0..=4 {
        let fx = x_max * i as f64 / 4.0;
        let fy = y_max * i as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="middle">{:.0}</text>"#,
            sx(fx),
            y0 + 16.0,
            fx
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="end">{:.2}</text>"#,
            x0 - 6.0,
            sy(fy) + 4.0,
            fy
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">action throughput (FPS)</text>"#,
        W / 2.0,
        H - 14.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" font-size="12" text-anchor="middle" transform="rotate(-90 16 {:.1})">safe velocity (m/s)</text>"#,
        H / 2.0,
        H / 2.0
    );
    let _ = writeln!(
        s,
        r#"<line x1="{x0:.1}" y1="{c:.1}" x2="{x1:.1}" y2="{c:.1}" stroke="gray" stroke-dasharray="4 3"/>"#,
        c = sy(curve.ceiling)
    );
    let mut d = String::new();
    for (i, (x, y)) in curve.points.iter().enumerate() {
        let _ = write!(d, "{}{:.1},{:.1} ", if i == 0 { "M" } else { "L" }, sx(*x), sy(*y));
    }
    let _ = writeln!(s, r#"<path d="{}" stroke="steelblue" stroke-width="2" fill="none"/>"#, d.trim_end());
    let (kx, ky) = (sx(curve.knee.throughput), sy(curve.knee.v_safe));
    let _ = writeln!(s, r#"<circle cx="{kx:.1}" cy="{ky:.1}" r="4" fill="firebrick"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" font-size="11" fill="firebrick">knee {:.1} FPS</text>"#,
        kx + 6.0,
        ky + 16.0,
        curve.knee.throughput
    );
    for (name, fps, v) in designs {
        let (px, py) = (sx(*fps), sy(*v));
        let _ = writeln!(s, r#"<rect x="{:.1}" y="{:.1}" width="6" height="6" fill="darkorange"/>"#, px - 3.0, py - 3.0);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" font-size="10">{}</text>"#, px + 5.0, py - 5.0, escape(name));
    }
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
