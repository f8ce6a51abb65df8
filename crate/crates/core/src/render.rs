//! Raster drawing of a graph with a highlighted candidate solution.

use std::io::Cursor;
use std::path::{Path, PathBuf};

use font8x8::UnicodeFonts;
use image::{ImageFormat, Rgb, RgbImage};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitness::SeedSet;
use crate::graph::Graph;
use crate::layout::{Canvas, Layout};

pub type Color = [u8; 3];

pub const SOLUTION_COLOR: Color = [0x2F, 0x7F, 0xC1];
pub const NONSOLUTION_COLOR: Color = [0xFF, 0xFF, 0xFF];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Init,
    Crossover,
    Mutation,
}

impl Phase {
    pub fn name(&self) -> &'static str {
        match self {
            Phase::Init => "init",
            Phase::Crossover => "crossover",
            Phase::Mutation => "mutation",
        }
    }

    pub fn label_mode(&self) -> LabelMode {
        match self {
            Phase::Crossover => LabelMode::SolutionOnly,
            Phase::Init | Phase::Mutation => LabelMode::AllNodes,
        }
    }
}

impl std::str::FromStr for Phase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "init" => Ok(Phase::Init),
            "crossover" => Ok(Phase::Crossover),
            "mutation" => Ok(Phase::Mutation),
            other => Err(Error::invalid(format!("unknown phase `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LabelMode {
    AllNodes,
    SolutionOnly,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RenderSpec {
    pub width: u32,
    pub height: u32,
    pub margin: f64,
    /// Marker size 35 maps to a 17 px radius.
    pub node_radius: f64,
    pub label_px: u32,
    pub solution_color: Color,
    pub nonsolution_color: Color,
    pub background: Color,
    pub edge_color: Color,
    pub edge_width: f64,
    pub outline_color: Color,
    pub outline_width: f64,
    pub label_on_solution: Color,
    pub label_on_nonsolution: Color,
}

impl Default for RenderSpec {
    fn default() -> Self {
        RenderSpec {
            width: 1200,
            height: 1200,
            margin: 0.08,
            node_radius: 17.0,
            label_px: 22,
            solution_color: SOLUTION_COLOR,
            nonsolution_color: NONSOLUTION_COLOR,
            background: [0xFF, 0xFF, 0xFF],
            edge_color: [0xC8, 0xC8, 0xC8],
            edge_width: 2.0,
            outline_color: [0x33, 0x33, 0x33],
            outline_width: 2.0,
            label_on_solution: [0xFF, 0xFF, 0xFF],
            label_on_nonsolution: [0x22, 0x22, 0x22],
        }
    }
}

impl RenderSpec {
    pub fn canvas(&self) -> Canvas {
        Canvas {
            width: self.width,
            height: self.height,
            margin: self.margin,
        }
    }

    /// A point inside the node disk that no label glyph covers.
    pub fn probe_point(&self, center: (f64, f64)) -> (u32, u32) {
        let dy = self.label_px as f64 / 2.0 + 3.0;
        (center.0.floor() as u32, (center.1 - dy).floor() as u32)
    }
}

struct Painter<'a> {
    img: &'a mut RgbImage,
}

impl Painter<'_> {
    fn put(&mut self, x: i64, y: i64, c: Color) {
        if x >= 0 && y >= 0 && (x as u32) < self.img.width() && (y as u32) < self.img.height() {
            self.img.put_pixel(x as u32, y as u32, Rgb(c));
        }
    }

    fn segment(&mut self, a: (f64, f64), b: (f64, f64), width: f64, c: Color) {
        let half = width / 2.0;
        let x0 = (a.0.min(b.0) - half).floor() as i64;
        let x1 = (a.0.max(b.0) + half).ceil() as i64;
        let y0 = (a.1.min(b.1) - half).floor() as i64;
        let y1 = (a.1.max(b.1) + half).ceil() as i64;
        let (dx, dy) = (b.0 - a.0, b.1 - a.1);
        let len2 = dx * dx + dy * dy;
        for y in y0..=y1 {
            for x in x0..=x1 {
                let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
                let t = if len2 > 0.0 {
                    (((px - a.0) * dx + (py - a.1) * dy) / len2).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                let (qx, qy) = (a.0 + t * dx - px, a.1 + t * dy - py);
                if qx * qx + qy * qy <= half * half {
                    self.put(x, y, c);
                }
            }
        }
    }

    fn disk(&mut self, center: (f64, f64), r: f64, fill: Color, ring: Option<(f64, Color)>) {
        let x0 = (center.0 - r).floor() as i64;
        let x1 = (center.0 + r).ceil() as i64;
        let y0 = (center.1 - r).floor() as i64;
        let y1 = (center.1 + r).ceil() as i64;
        for y in y0..=y1 {
            for x in x0..=x1 {
                let (dx, dy) = (x as f64 + 0.5 - center.0, y as f64 + 0.5 - center.1);
                let d = (dx * dx + dy * dy).sqrt();
                if d > r {
                    continue;
                }
                match ring {
                    Some((w, c)) if d > r - w => self.put(x, y, c),
                    _ => self.put(x, y, fill),
                }
            }
        }
    }

    fn text(&mut self, center: (f64, f64), text: &str, px: u32, c: Color) {
        let glyphs: Vec<[u8; 8]> = text
            .chars()
            .map(|ch| font8x8::BASIC_FONTS.get(ch).unwrap_or([0; 8]))
            .collect();
        let size = px as i64;
        let total = size * glyphs.len() as i64;
        let left = center.0.round() as i64 - total / 2;
        let top = center.1.round() as i64 - size / 2;
        for (i, glyph) in glyphs.iter().enumerate() {
            let ox = left + i as i64 * size;
            for y in 0..size {
                let row = glyph[(y * 8 / size) as usize];
                for x in 0..size {
                    if row >> (x * 8 / size) & 1 == 1 {
                        self.put(ox + x, top + y, c);
                    }
                }
            }
        }
    }
}

/// Draws `g` with `solution` highlighted according to the phase styling.
/// Edges go beneath nodes; output dimensions come from `spec`.
pub fn render_solution_image(
    g: &Graph,
    layout: &Layout,
    spec: &RenderSpec,
    solution: &SeedSet,
    phase: Phase,
) -> Result<RgbImage> {
    if layout.len() != g.node_count() {
        return Err(Error::invalid(format!(
            "layout has {} positions for {} nodes",
            layout.len(),
            g.node_count()
        )));
    }
    if let Some(&bad) = solution.members().iter().find(|&&v| v >= g.node_count()) {
        return Err(Error::invalid(format!("solution node index {bad} not in graph")));
    }
    if spec.width == 0 || spec.height == 0 {
        return Err(Error::invalid("canvas dimensions must be positive"));
    }
    let mut img = RgbImage::from_pixel(spec.width, spec.height, Rgb(spec.background));
    let mut painter = Painter { img: &mut img };
    let pos = &layout.positions;
    for (u, v) in g.edges() {
        painter.segment(pos[u], pos[v], spec.edge_width, spec.edge_color);
    }
    for v in 0..g.node_count() {
        let chosen = solution.contains(v);
        let highlighted = match phase {
            Phase::Init | Phase::Crossover => true,
            Phase::Mutation => chosen,
        };
        if highlighted {
            painter.disk(pos[v], spec.node_radius, spec.solution_color, None);
        } else {
            painter.disk(
                pos[v],
                spec.node_radius,
                spec.nonsolution_color,
                Some((spec.outline_width, spec.outline_color)),
            );
        }
        let labeled = match phase.label_mode() {
            LabelMode::AllNodes => true,
            LabelMode::SolutionOnly => chosen,
        };
        if labeled {
            let ink = if highlighted {
                spec.label_on_solution
            } else {
                spec.label_on_nonsolution
            };
            painter.text(pos[v], &g.label(v).to_string(), spec.label_px, ink);
        }
    }
    Ok(img)
}

pub fn encode_png(img: &RgbImage) -> Result<Vec<u8>> {
    let mut out = Cursor::new(Vec::new());
    img.write_to(&mut out, ImageFormat::Png)?;
    Ok(out.into_inner())
}

/// A fixed layout plus styling, shared by every render of one run.
#[derive(Clone, Debug)]
pub struct Renderer {
    pub layout: Layout,
    pub spec: RenderSpec,
}

impl Renderer {
    pub fn new(layout: Layout, spec: RenderSpec) -> Self {
        Renderer { layout, spec }
    }

    pub fn render_png(&self, g: &Graph, solution: &SeedSet, phase: Phase) -> Result<Vec<u8>> {
        encode_png(&render_solution_image(g, &self.layout, &self.spec, solution, phase)?)
    }
}

/// `{root}/{run_id}/{generation}/{individual}_{phase}.png`
pub fn image_path(root: &Path, run_id: &str, generation: usize, individual: &str, phase: Phase) -> PathBuf {
    root.join(run_id)
        .join(generation.to_string())
        .join(format!("{individual}_{}.png", phase.name()))
}

pub fn save_png(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::load_edge_list_str;
    use crate::layout::layout_kamada_kawai;

    fn setup(text: &str) -> (Graph, Layout, RenderSpec) {
        let g = load_edge_list_str(text).unwrap().0;
        let spec = RenderSpec::default();
        let layout = layout_kamada_kawai(&g, &spec.canvas()).unwrap();
        (g, layout, spec)
    }

    fn probe(img: &RgbImage, spec: &RenderSpec, center: (f64, f64)) -> Color {
        let (x, y) = spec.probe_point(center);
        img.get_pixel(x, y).0
    }

    #[test]
    fn mutation_phase_colors() {
        let (g, layout, spec) = setup("0 1\n1 2\n2 3\n3 0\n0 4\n4 15");
        let s = SeedSet::new(&g, vec![0, 2]).unwrap();
        let img = render_solution_image(&g, &layout, &spec, &s, Phase::Mutation).unwrap();
        assert_eq!(img.dimensions(), (1200, 1200));
        for v in 0..g.node_count() {
            let want = if s.contains(v) { SOLUTION_COLOR } else { NONSOLUTION_COLOR };
            assert_eq!(probe(&img, &spec, layout.positions[v]), want, "node {v}");
        }
    }

    #[test]
    fn init_and_crossover_color_every_node() {
        let (g, layout, spec) = setup("0 1\n1 2\n2 0");
        let s = SeedSet::new(&g, vec![1]).unwrap();
        for phase in [Phase::Init, Phase::Crossover] {
            let img = render_solution_image(&g, &layout, &spec, &s, phase).unwrap();
            for v in 0..3 {
                assert_eq!(probe(&img, &spec, layout.positions[v]), SOLUTION_COLOR);
            }
        }
    }

    #[test]
    fn crossover_labels_only_solution() {
        let (g, layout, spec) = setup("0 1\n1 2\n2 0");
        let s = SeedSet::new(&g, vec![1]).unwrap();
        let img = render_solution_image(&g, &layout, &spec, &s, Phase::Crossover).unwrap();
        let ink = |v: usize| {
            let (cx, cy) = layout.positions[v];
            let mut n = 0;
            for y in (cy as u32 - 11)..(cy as u32 + 11) {
                for x in (cx as u32 - 11)..(cx as u32 + 11) {
                    if img.get_pixel(x, y).0 == spec.label_on_solution {
                        n += 1;
                    }
                }
            }
            n
        };
        assert!(ink(1) > 0);
        assert_eq!(ink(0), 0);
        assert_eq!(ink(2), 0);
    }

    #[test]
    fn empty_graph_is_blank() {
        let g = Graph::from_labeled(Vec::<crate::graph::Label>::new(), Vec::new());
        let layout = Layout {
            positions: Vec::new(),
            style: Default::default(),
        };
        let spec = RenderSpec::default();
        let img = render_solution_image(&g, &layout, &spec, &SeedSet::empty(), Phase::Init).unwrap();
        assert!(img.pixels().all(|p| p.0 == [255, 255, 255]));
    }

    #[test]
    fn rendering_is_byte_stable() {
        let (g, layout, spec) = setup("0 1\n1 2\n2 3\n3 1");
        let s = SeedSet::new(&g, vec![3]).unwrap();
        let r = Renderer::new(layout, spec);
        assert_eq!(
            r.render_png(&g, &s, Phase::Mutation).unwrap(),
            r.render_png(&g, &s, Phase::Mutation).unwrap()
        );
    }

    #[test]
    fn mismatched_layout_is_rejected() {
        let (g, _, spec) = setup("0 1\n1 2");
        let layout = Layout {
            positions: vec![(1.0, 1.0)],
            style: Default::default(),
        };
        assert!(render_solution_image(&g, &layout, &spec, &SeedSet::empty(), Phase::Init).is_err());
    }

    #[test]
    fn image_path_shape() {
        let p = image_path(Path::new("out"), "r1", 3, "7", Phase::Crossover);
        assert_eq!(p, Path::new("out/r1/3/7_crossover.png"));
    }
}
