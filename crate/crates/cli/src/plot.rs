//! Schematic SVG scatter of computed poles (circles) and reference poles
//! (crosses) over a region of the k-plane.

use dtn_core::linalg::C64;
use dtn_core::Region;
use std::fmt::Write;

const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 48.0;

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    if !(span > 0.0) {
        return vec![lo];
    }
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

/// Deterministic for identical inputs; points outside `region` are clipped.
pub fn scatter_svg(region: &Region, computed: &[C64], reference: &[C64]) -> String {
    let pw = WIDTH - 2.0 * MARGIN;
    let ph = HEIGHT - 2.0 * MARGIN;
    let x = |re: f64| MARGIN + (re - region.re_min) / region.width() * pw;
    let y = |im: f64| MARGIN + (region.im_max - im) / region.height() * ph;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    s.push_str("<g font-family=\"sans-serif\" font-size=\"11\">\n");
    for t in ticks(region.re_min, region.re_max) {
        let px = x(t);
        let _ = writeln!(
            s,
            r#"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            MARGIN + ph,
            MARGIN + ph + 5.0,
            MARGIN + ph + 18.0,
            fmt_tick(t)
        );
    }
    for t in ticks(region.im_min, region.im_max) {
        let py = y(t);
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{py:.2}" x2="{MARGIN}" y2="{py:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            MARGIN - 5.0,
            MARGIN - 8.0,
            py + 4.0,
            fmt_tick(t)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">Re k</text>"#,
        MARGIN + pw / 2.0,
        HEIGHT - 8.0
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.2}" text-anchor="middle" transform="rotate(-90 14 {:.2})">Im k</text>"#,
        MARGIN + ph / 2.0,
        MARGIN + ph / 2.0
    );
    s.push_str("</g>\n");
    let inside = |z: &&C64| region.contains(**z);
    s.push_str("<g id=\"reference\" stroke=\"crimson\" stroke-width=\"1.5\">\n");
    for z in reference.iter().filter(inside) {
        let (px, py) = (x(z.re), y(z.im));
        let _ = writeln!(
            s,
            r#"<path d="M{:.2} {:.2}L{:.2} {:.2}M{:.2} {:.2}L{:.2} {:.2}"/>"#,
            px - 5.0,
            py - 5.0,
            px + 5.0,
            py + 5.0,
            px - 5.0,
            py + 5.0,
            px + 5.0,
            py - 5.0
        );
    }
    s.push_str("</g>\n<g id=\"computed\" fill=\"none\" stroke=\"navy\" stroke-width=\"1.5\">\n");
    for z in computed.iter().filter(inside) {
        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="4"/>"#, x(z.re), y(z.im));
    }
    s.push_str("</g>\n</svg>\n");
    s
}

fn fmt_tick(t: f64) -> String {
    let r = (t * 1e6).round() / 1e6;
    if r == 0.0 {
        "0".into()
    } else {
        format!("{r}")
    }
}
