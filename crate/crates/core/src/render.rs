//! Deterministic SVG rendering of tilings and scalar fields.

use std::fmt::Write;

use crate::heights::Tiling;
use crate::lattice::{LatticeDomain, Square};
use crate::varsolve::Mesh;

/// Orientation of a domino and the side its black square sits on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DominoType {
    /// Horizontal, black square on the west.
    West,
    /// Horizontal, black square on the east.
    East,
    /// Vertical, black square on the south.
    South,
    /// Vertical, black square on the north.
    North,
}

impl DominoType {
    pub const ALL: [DominoType; 4] = [DominoType::West, DominoType::East, DominoType::South, DominoType::North];

    /// Type of the domino covering two adjacent squares.
    pub fn of(a: Square, b: Square) -> DominoType {
        let (black, white) = if a.is_black() { (a, b) } else { (b, a) };
        match (black.0 - white.0, black.1 - white.1) {
            (-1, 0) => DominoType::West,
            (1, 0) => DominoType::East,
            (0, -1) => DominoType::South,
            _ => DominoType::North,
        }
    }

    pub fn color(self) -> &'static str {
        match self {
            DominoType::West => "#d1495b",
            DominoType::East => "#edae49",
            DominoType::South => "#00798c",
            DominoType::North => "#30638e",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Style {
    /// Pixels per lattice unit.
    pub scale: f64,
    /// Outline dominoes and triangles.
    pub outline: bool,
}

impl Default for Style {
    fn default() -> Self {
        Style { scale: 12.0, outline: true }
    }
}

/// One drawable item. Mesh layers are in continuum coordinates and are
/// multiplied by `continuum_scale` to land on the lattice.
#[derive(Clone, Copy)]
pub enum Layer<'a> {
    Tiling {
        domain: &'a LatticeDomain,
        tiling: &'a Tiling,
    },
    /// One value per domain vertex; each square shows the mean of its
    /// corners.
    LatticeField {
        domain: &'a LatticeDomain,
        values: &'a [f64],
    },
    /// One value per mesh vertex; each triangle shows the mean of its
    /// corners.
    MeshField {
        mesh: &'a Mesh,
        values: &'a [f64],
        continuum_scale: f64,
    },
}

type Bounds = [f64; 4];

fn layer_bounds(layer: &Layer) -> Option<Bounds> {
    let mut b = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
    let mut grow = |x: f64, y: f64| {
        b = [b[0].min(x), b[1].min(y), b[2].max(x), b[3].max(y)];
    };
    match layer {
        Layer::Tiling { domain, .. } | Layer::LatticeField { domain, .. } => {
            for s in domain.squares() {
                grow(s.0 as f64, s.1 as f64);
                grow(s.0 as f64 + 1.0, s.1 as f64 + 1.0);
            }
        }
        Layer::MeshField { mesh, continuum_scale, .. } => {
            for v in &mesh.vertices {
                grow(v[0] * continuum_scale, v[1] * continuum_scale);
            }
        }
    }
    b[0].is_finite().then_some(b)
}

/// Blue-white-red ramp over `[0, 1]`.
pub fn ramp(x: f64) -> String {
    let x = if x.is_finite() { x.clamp(0.0, 1.0) } else { 0.5 };
    let stops = [(0.0, [49.0, 54.0, 149.0]), (0.5, [247.0, 247.0, 247.0]), (1.0, [165.0, 0.0, 38.0])];
    let k = if x <= 0.5 { 0 } else { 1 };
    let (x0, c0) = stops[k];
    let (x1, c1) = stops[k + 1];
    let f = (x - x0) / (x1 - x0);
    let c: Vec<u8> = (0..3).map(|i| (c0[i] + f * (c1[i] - c0[i])).round() as u8).collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

fn normalizer(values: &[f64]) -> impl Fn(f64) -> f64 {
    let lo = values.iter().copied().filter(|v| v.is_finite()).fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().filter(|v| v.is_finite()).fold(f64::NEG_INFINITY, f64::max);
    move |v| if hi > lo { (v - lo) / (hi - lo) } else { 0.5 }
}

/// Renders the layers bottom to top into one SVG document. An empty layer
/// list gives an empty canvas.
pub fn render_svg(layers: &[Layer], style: &Style) -> String {
    let bounds = layers.iter().filter_map(layer_bounds).reduce(|a, b| [a[0].min(b[0]), a[1].min(b[1]), a[2].max(b[2]), a[3].max(b[3])]);
    let [x0, y0, x1, y1] = bounds.unwrap_or([0.0, 0.0, 1.0, 1.0]);
    let k = style.scale;
    let (w, h) = ((x1 - x0) * k, (y1 - y0) * k);
    let px = |x: f64| (x - x0) * k;
    let py = |y: f64| (y1 - y) * k;
    let stroke = if style.outline { r##" stroke="#222" stroke-width="0.5""## } else { "" };

    let mut out = String::new();
    writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.2}" height="{h:.2}" viewBox="0 0 {w:.2} {h:.2}">"#).unwrap();
    for layer in layers {
        match layer {
            Layer::Tiling { domain, tiling } => {
                writeln!(out, "<g>").unwrap();
                for [a, b] in tiling.dominoes(domain) {
                    let (lx, ly) = (a.0.min(b.0) as f64, a.1.min(b.1) as f64);
                    let (dw, dh) = if a.1 == b.1 { (2.0, 1.0) } else { (1.0, 2.0) };
                    writeln!(
                        out,
                        r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"{stroke}/>"#,
                        px(lx),
                        py(ly + dh),
                        dw * k,
                        dh * k,
                        DominoType::of(a, b).color()
                    )
                    .unwrap();
                }
                writeln!(out, "</g>").unwrap();
            }
            Layer::LatticeField { domain, values } => {
                let norm = normalizer(values);
                writeln!(out, "<g>").unwrap();
                for s in domain.squares() {
                    let mean = s.corners().iter().filter_map(|&c| domain.vertex_id(c)).map(|i| values[i]).sum::<f64>() / 4.0;
                    writeln!(
                        out,
                        r#"<rect x="{:.2}" y="{:.2}" width="{k:.2}" height="{k:.2}" fill="{}"/>"#,
                        px(s.0 as f64),
                        py(s.1 as f64 + 1.0),
                        ramp(norm(mean))
                    )
                    .unwrap();
                }
                writeln!(out, "</g>").unwrap();
            }
            Layer::MeshField { mesh, values, continuum_scale } => {
                let norm = normalizer(values);
                writeln!(out, "<g>").unwrap();
                for tri in &mesh.triangles {
                    let mean = tri.iter().map(|&v| values[v]).sum::<f64>() / 3.0;
                    let pts: Vec<String> = tri
                        .iter()
                        .map(|&v| {
                            let p = mesh.vertices[v];
                            format!("{:.2},{:.2}", px(p[0] * continuum_scale), py(p[1] * continuum_scale))
                        })
                        .collect();
                    let fill = ramp(norm(mean));
                    let edge = if style.outline { format!(r#" stroke="{fill}" stroke-width="0.3""#) } else { String::new() };
                    writeln!(out, r#"<polygon points="{}" fill="{fill}"{edge}/>"#, pts.join(" ")).unwrap();
                }
                writeln!(out, "</g>").unwrap();
            }
        }
    }
    out.push_str("</svg>\n");
    out
}
