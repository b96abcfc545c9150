//! Heatmaps of lag surfaces as standalone SVG.

use std::fmt::Write as _;

use crate::summaries::SummarySurface;

/// Viridis sampled at nine equispaced stops.
const PALETTE: [[u8; 3]; 9] = [
    [0x44, 0x01, 0x54],
    [0x47, 0x2c, 0x7a],
    [0x3b, 0x52, 0x8b],
    [0x2c, 0x72, 0x8e],
    [0x21, 0x91, 0x8c],
    [0x28, 0xae, 0x80],
    [0x5e, 0xc9, 0x62],
    [0xad, 0xdc, 0x30],
    [0xfd, 0xe7, 0x25],
];

pub fn colour(u: f64) -> String {
    if !u.is_finite() {
        return "#bbbbbb".into();
    }
    let s = u.clamp(0.0, 1.0) * (PALETTE.len() - 1) as f64;
    let k = (s.floor() as usize).min(PALETTE.len() - 2);
    let f = s - k as f64;
    let c: Vec<u8> = (0..3)
        .map(|j| (PALETTE[k][j] as f64 + f * (PALETTE[k + 1][j] as f64 - PALETTE[k][j] as f64)).round() as u8)
        .collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

const CELL: usize = 36;
const LEFT: usize = 70;
const TOP: usize = 40;
const BOTTOM: usize = 50;
const BAR: usize = 90;

/// Grid of `values` (r-major) with r upwards and h to the right.
pub fn heatmap(r: &[f64], h: &[f64], values: &[f64], title: &str) -> String {
    let (nr, nh) = (r.len(), h.len());
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let (w, hgt) = (LEFT + nh * CELL + BAR, TOP + nr * CELL + BOTTOM);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{hgt}" font-family="sans-serif" font-size="11">"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" font-size="14">{}</text>"#, LEFT, escape(title));
    for ir in 0..nr {
        let y = TOP + (nr - 1 - ir) * CELL;
        for ih in 0..nh {
            let v = values[ir * nh + ih];
            let x = LEFT + ih * CELL;
            let _ = writeln!(s, r#"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="{}"/>"#, colour((v - lo) / span));
        }
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{:.3}</text>"#, LEFT - 4, y + CELL / 2 + 4, r[ir]);
    }
    let base = TOP + nr * CELL;
    for (ih, hv) in h.iter().enumerate() {
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{:.3}</text>"#, LEFT + ih * CELL + CELL / 2, base + 14, hv);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">h</text>"#, LEFT + nh * CELL / 2, base + 36);
    let _ = writeln!(s, r#"<text x="14" y="{}">r</text>"#, TOP + nr * CELL / 2);
    let bx = LEFT + nh * CELL + 20;
    let steps = 20;
    let bh = nr * CELL / steps;
    for k in 0..steps {
        let u = 1.0 - k as f64 / (steps - 1) as f64;
        let _ = writeln!(s, r#"<rect x="{bx}" y="{}" width="14" height="{}" fill="{}"/>"#, TOP + k * bh, bh.max(1), colour(u));
    }
    if lo.is_finite() {
        let _ = writeln!(s, r#"<text x="{}" y="{}">{:.3}</text>"#, bx + 18, TOP + 8, hi);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{:.3}</text>"#, bx + 18, TOP + steps * bh, lo);
    }
    s.push_str("</svg>\n");
    s
}

pub fn surface_svg(surface: &SummarySurface, title: &str) -> String {
    heatmap(&surface.r, &surface.h, &surface.estimate, title)
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn palette_ends() {
        assert_eq!(colour(0.0), "#440154");
        assert_eq!(colour(1.0), "#fde725");
        assert_eq!(colour(f64::NAN), "#bbbbbb");
    }

    #[test]
    fn one_rect_per_cell() {
        let svg = heatmap(&[0.1, 0.2], &[0.1, 0.2, 0.3], &[1.0, 2.0, 3.0, 4.0, 5.0, f64::NAN], "K < 1");
        assert_eq!(svg.matches("<rect").count(), 6 + 20);
        assert!(svg.contains("K &lt; 1"));
    }
}
