//! SVG heatmap of a phase grid: `α` on x, `ρ` on y (increasing upward),
//! colour by `log₁₀` mean MSE clamped to `[-8, 0]`.

use std::fmt::Write as _;
use std::path::Path;

use super::sweep::PhaseGrid;
use crate::error::{invalid, Error, Result};
use crate::lines::PhaseLine;

pub const LOG_MSE_MIN: f64 = -8.0;
pub const LOG_MSE_MAX: f64 = 0.0;

// colour stops over t ∈ [0, 1]: white at the perfect end
const STOPS: [(f64, [u8; 3]); 5] = [
    (0.0, [255, 255, 255]),
    (0.25, [255, 237, 160]),
    (0.5, [253, 141, 60]),
    (0.75, [215, 48, 31]),
    (1.0, [103, 0, 13]),
];

/// Fill for cells that have no completed run.
pub const MISSING_COLOR: &str = "#BDBDBD";

fn ramp(t: f64) -> [u8; 3] {
    let t = t.clamp(0.0, 1.0);
    for w in STOPS.windows(2) {
        let ((t0, c0), (t1, c1)) = (w[0], w[1]);
        if t <= t1 {
            let u = (t - t0) / (t1 - t0);
            return std::array::from_fn(|k| (c0[k] as f64 + u * (c1[k] as f64 - c0[k] as f64)).round() as u8);
        }
    }
    STOPS[STOPS.len() - 1].1
}

fn hex(c: [u8; 3]) -> String {
    format!("#{:02X}{:02X}{:02X}", c[0], c[1], c[2])
}

/// Colour of a mean MSE. Anything at or below `1e-8`, zero included, is white.
pub fn mse_color(mse: f64) -> String {
    if mse.is_nan() {
        return MISSING_COLOR.to_string();
    }
    let l = if mse > 0.0 { mse.log10() } else { LOG_MSE_MIN };
    hex(ramp((l - LOG_MSE_MIN) / (LOG_MSE_MAX - LOG_MSE_MIN)))
}

/// Cell edges: midpoints between neighbours, ends mirrored, kept within `[0, 1]`.
fn edges(values: &[f64]) -> Vec<f64> {
    if values.len() == 1 {
        return vec![0.0, 1.0];
    }
    let k = values.len();
    let mut e = Vec::with_capacity(k + 1);
    e.push((values[0] - 0.5 * (values[1] - values[0])).max(0.0));
    for w in values.windows(2) {
        e.push(0.5 * (w[0] + w[1]));
    }
    e.push((values[k - 1] + 0.5 * (values[k - 1] - values[k - 2])).min(1.0));
    e
}

const PLOT: f64 = 400.0;
const LEFT: f64 = 60.0;
const TOP: f64 = 20.0;
const LEGEND_X: f64 = LEFT + PLOT + 30.0;
const WIDTH: f64 = LEGEND_X + 90.0;
const HEIGHT: f64 = TOP + PLOT + 50.0;

/// The SVG document as a string.
pub fn heatmap_svg(grid: &PhaseGrid, line: Option<&PhaseLine>) -> Result<String> {
    let (na, nr) = (grid.alpha_grid.len(), grid.rho_grid.len());
    if na == 0 || nr == 0 || grid.cells.len() != na * nr {
        return Err(invalid("cannot render an empty or inconsistent grid"));
    }
    let (ea, er) = (edges(&grid.alpha_grid), edges(&grid.rho_grid));
    let (a0, a1) = (ea[0], ea[na]);
    let (r0, r1) = (er[0], er[nr]);
    let x = |a: f64| LEFT + (a - a0) / (a1 - a0) * PLOT;
    let y = |r: f64| TOP + PLOT - (r - r0) / (r1 - r0) * PLOT;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r##"<rect width="{WIDTH}" height="{HEIGHT}" fill="#FFFFFF"/>"##);
    let _ = writeln!(s, r#"<g id="cells" shape-rendering="crispEdges">"#);
    for i in 0..nr {
        for j in 0..na {
            let c = grid.cell(i, j);
            let (x0, x1) = (x(ea[j]), x(ea[j + 1]));
            let (y0, y1) = (y(er[i + 1]), y(er[i]));
            let _ = writeln!(
                s,
                r#"<rect x="{x0:.3}" y="{y0:.3}" width="{:.3}" height="{:.3}" fill="{}"><title>alpha={} rho={} mse={}</title></rect>"#,
                x1 - x0,
                y1 - y0,
                mse_color(c.mean_mse),
                c.alpha,
                c.rho,
                c.mean_mse
            );
        }
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(
        s,
        r##"<rect x="{LEFT}" y="{TOP}" width="{PLOT}" height="{PLOT}" fill="none" stroke="#000000"/>"##
    );

    if let Some(line) = line {
        let pts: Vec<String> = line
            .points
            .iter()
            .filter(|p| (a0..=a1).contains(&p.alpha_c) && (r0..=r1).contains(&p.rho))
            .map(|p| format!("{:.3},{:.3}", x(p.alpha_c), y(p.rho)))
            .collect();
        if !pts.is_empty() {
            let _ = writeln!(
                s,
                r##"<polyline id="line" points="{}" fill="none" stroke="#000000" stroke-width="2"/>"##,
                pts.join(" ")
            );
        }
    }

    // axes
    for (k, v) in [a0, 0.5 * (a0 + a1), a1].into_iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{:.3}" y="{:.3}" text-anchor="{}">{:.2}</text>"#,
            x(v),
            TOP + PLOT + 16.0,
            ["start", "middle", "end"][k],
            v
        );
    }
    for v in [r0, 0.5 * (r0 + r1), r1] {
        let _ = writeln!(
            s,
            r#"<text x="{:.3}" y="{:.3}" text-anchor="end">{:.2}</text>"#,
            LEFT - 6.0,
            y(v) + 4.0,
            v
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.3}" y="{:.3}" text-anchor="middle">alpha</text>"#,
        LEFT + PLOT / 2.0,
        TOP + PLOT + 38.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.3}" text-anchor="middle" transform="rotate(-90 16 {:.3})">rho</text>"#,
        TOP + PLOT / 2.0,
        TOP + PLOT / 2.0
    );

    // legend: log10 MSE from -8 at the bottom to 0 at the top
    let _ = writeln!(s, r#"<g id="legend">"#);
    let steps = 32;
    let h = PLOT / steps as f64;
    for k in 0..steps {
        let t = (k as f64 + 0.5) / steps as f64;
        let _ = writeln!(
            s,
            r#"<rect x="{LEGEND_X}" y="{:.3}" width="20" height="{:.3}" fill="{}"/>"#,
            TOP + PLOT - (k + 1) as f64 * h,
            h,
            hex(ramp(t))
        );
    }
    let _ = writeln!(
        s,
        r##"<rect x="{LEGEND_X}" y="{TOP}" width="20" height="{PLOT}" fill="none" stroke="#000000"/>"##
    );
    for v in [-8, -6, -4, -2, 0] {
        let yy = TOP + PLOT * (1.0 - (v as f64 - LOG_MSE_MIN) / (LOG_MSE_MAX - LOG_MSE_MIN));
        let _ = writeln!(s, r#"<text x="{:.3}" y="{:.3}">{v}</text>"#, LEGEND_X + 26.0, yy + 4.0);
    }
    let _ = writeln!(
        s,
        r#"<text x="{LEGEND_X}" y="{:.3}">log10 MSE</text>"#,
        TOP + PLOT + 16.0
    );
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    Ok(s)
}

/// Writes [`heatmap_svg`] to `path`.
pub fn render_heatmap(grid: &PhaseGrid, line: Option<&PhaseLine>, path: &Path) -> Result<()> {
    let svg = heatmap_svg(grid, line)?;
    std::fs::write(path, svg).map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamp_ends() {
        assert_eq!(mse_color(1e-8), "#FFFFFF");
        assert_eq!(mse_color(1e-12), "#FFFFFF");
        assert_eq!(mse_color(0.0), "#FFFFFF");
        assert_eq!(mse_color(1.0), "#67000D");
        assert_eq!(mse_color(50.0), "#67000D");
        assert_eq!(mse_color(f64::INFINITY), "#67000D");
        assert_eq!(mse_color(f64::NAN), MISSING_COLOR);
    }

    #[test]
    fn color_darkens_with_mse() {
        let lum = |c: String| {
            let v = u32::from_str_radix(&c[1..], 16).unwrap();
            (v >> 16) + ((v >> 8) & 0xFF) + (v & 0xFF)
        };
        let mut prev = u32::MAX;
        for e in -8..=0 {
            let l = lum(mse_color(10f64.powi(e)));
            assert!(l <= prev);
            prev = l;
        }
    }

    #[test]
    fn edges_of_uniform_grid() {
        let e = edges(&[0.25, 0.75]);
        assert_eq!(e, vec![0.0, 0.5, 1.0]);
        assert_eq!(edges(&[0.3]), vec![0.0, 1.0]);
    }
}
