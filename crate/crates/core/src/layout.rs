//! Deterministic node placement: Kamada-Kawai stress minimization and
//! Fruchterman-Reingold force simulation, both fitted to a pixel canvas.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::Graph;

pub const KK_MAX_ITERATIONS: usize = 1000;
pub const KK_TOLERANCE: f64 = 1e-6;
const FR_ITERATIONS: usize = 300;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LayoutStyle {
    #[default]
    #[serde(rename = "kk")]
    KamadaKawai,
    #[serde(rename = "fr")]
    FruchtermanReingold,
}

impl LayoutStyle {
    pub fn short_name(&self) -> &'static str {
        match self {
            LayoutStyle::KamadaKawai => "kk",
            LayoutStyle::FruchtermanReingold => "fr",
        }
    }
}

impl std::str::FromStr for LayoutStyle {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "kk" | "kamada_kawai" => Ok(LayoutStyle::KamadaKawai),
            "fr" | "fruchterman_reingold" => Ok(LayoutStyle::FruchtermanReingold),
            _ => Err(Error::Config(format!("unknown layout style `{s}`"))),
        }
    }
}

/// Target area for fitted layouts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Canvas {
    pub width: u32,
    pub height: u32,
    /// Margin on every side as a fraction of the smaller dimension.
    pub margin: f64,
}

impl Default for Canvas {
    fn default() -> Self {
        Canvas {
            width: 1200,
            height: 1200,
            margin: 0.08,
        }
    }
}

/// Node positions in canvas pixel coordinates, indexed by node index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub positions: Vec<(f64, f64)>,
    pub style: LayoutStyle,
}

impl Layout {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

fn require_connected(g: &Graph) -> Result<()> {
    if g.is_connected() {
        Ok(())
    } else {
        Err(Error::Disconnected)
    }
}

fn distance_matrix(g: &Graph) -> Vec<Vec<f64>> {
    (0..g.node_count())
        .map(|s| g.bfs_distances(s).into_iter().map(|d| d as f64).collect())
        .collect()
}

/// Kamada-Kawai energy `Σ_{i<j} (|x_i − x_j| − d_ij)² / d_ij²`.
pub fn kk_stress(dist: &[Vec<f64>], pos: &[(f64, f64)]) -> f64 {
    let n = pos.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = dist[i][j];
            let (dx, dy) = (pos[i].0 - pos[j].0, pos[i].1 - pos[j].1);
            let e = (dx * dx + dy * dy).sqrt() - d;
            s += e * e / (d * d);
        }
    }
    s
}

fn kk_gradient(dist: &[Vec<f64>], pos: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let n = pos.len();
    let mut grad = vec![(0.0, 0.0); n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = dist[i][j];
            let (dx, dy) = (pos[i].0 - pos[j].0, pos[i].1 - pos[j].1);
            let len = (dx * dx + dy * dy).sqrt();
            if len < 1e-12 {
                continue;
            }
            let c = 2.0 * (len - d) / (d * d * len);
            grad[i].0 += c * dx;
            grad[i].1 += c * dy;
            grad[j].0 -= c * dx;
            grad[j].1 -= c * dy;
        }
    }
    grad
}

/// Circular start used by Kamada-Kawai: node `i` at angle `2πi/n` on a
/// circle whose diameter equals the graph diameter.
pub fn kk_initial_positions(g: &Graph) -> Vec<(f64, f64)> {
    let n = g.node_count();
    if n <= 1 {
        return vec![(0.0, 0.0); n];
    }
    let diameter = distance_matrix(g)
        .iter()
        .flatten()
        .copied()
        .fold(1.0, f64::max);
    let r = diameter / 2.0;
    (0..n)
        .map(|i| {
            let a = std::f64::consts::TAU * i as f64 / n as f64;
            (r * a.cos(), r * a.sin())
        })
        .collect()
}

/// Raw (unfitted) Kamada-Kawai positions and the stress before and after.
pub fn kk_optimize(g: &Graph) -> Result<(Vec<(f64, f64)>, f64, f64)> {
    require_connected(g)?;
    let dist = distance_matrix(g);
    let mut pos = kk_initial_positions(g);
    let initial = kk_stress(&dist, &pos);
    let mut stress = initial;
    let mut step = 0.05;
    for _ in 0..KK_MAX_ITERATIONS {
        let grad = kk_gradient(&dist, &pos);
        let trial: Vec<(f64, f64)> = pos
            .iter()
            .zip(&grad)
            .map(|(p, g)| (p.0 - step * g.0, p.1 - step * g.1))
            .collect();
        let trial_stress = kk_stress(&dist, &trial);
        if trial_stress < stress {
            let delta = stress - trial_stress;
            pos = trial;
            stress = trial_stress;
            step *= 1.2;
            if delta < KK_TOLERANCE {
                break;
            }
        } else {
            step *= 0.5;
            if step < 1e-12 {
                break;
            }
        }
    }
    Ok((pos, initial, stress))
}

pub fn layout_kamada_kawai(g: &Graph, canvas: &Canvas) -> Result<Layout> {
    let (raw, _, _) = kk_optimize(g)?;
    Ok(Layout {
        positions: fit_to_canvas(&raw, canvas),
        style: LayoutStyle::KamadaKawai,
    })
}

pub fn layout_fruchterman_reingold(g: &Graph, rng_seed: u64, canvas: &Canvas) -> Result<Layout> {
    require_connected(g)?;
    let n = g.node_count();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut pos: Vec<(f64, f64)> = (0..n)
        .map(|_| (rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    if n > 1 {
        let k = (1.0 / n as f64).sqrt();
        let t0 = 0.1;
        let mut disp = vec![(0.0, 0.0); n];
        for it in 0..FR_ITERATIONS {
            let temp = t0 * (1.0 - it as f64 / FR_ITERATIONS as f64);
            disp.iter_mut().for_each(|d| *d = (0.0, 0.0));
            for i in 0..n {
                for j in (i + 1)..n {
                    let (mut dx, mut dy) = (pos[i].0 - pos[j].0, pos[i].1 - pos[j].1);
                    let mut d = (dx * dx + dy * dy).sqrt();
                    if d < 1e-9 {
                        // coincident nodes: separate along a fixed direction
                        dx = 1e-3;
                        dy = 0.0;
                        d = 1e-3;
                    }
                    let f = k * k / d;
                    disp[i].0 += dx / d * f;
                    disp[i].1 += dy / d * f;
                    disp[j].0 -= dx / d * f;
                    disp[j].1 -= dy / d * f;
                }
            }
            for (u, v) in g.edges() {
                let (dx, dy) = (pos[u].0 - pos[v].0, pos[u].1 - pos[v].1);
                let d = (dx * dx + dy * dy).sqrt().max(1e-9);
                let f = d * d / k;
                disp[u].0 -= dx / d * f;
                disp[u].1 -= dy / d * f;
                disp[v].0 += dx / d * f;
                disp[v].1 += dy / d * f;
            }
            for (p, d) in pos.iter_mut().zip(&disp) {
                let len = (d.0 * d.0 + d.1 * d.1).sqrt();
                if len > 0.0 {
                    let s = len.min(temp) / len;
                    p.0 += d.0 * s;
                    p.1 += d.1 * s;
                }
            }
        }
    }
    Ok(Layout {
        positions: fit_to_canvas(&pos, canvas),
        style: LayoutStyle::FruchtermanReingold,
    })
}

/// Uniformly scales and centers raw positions into the canvas margins.
pub fn fit_to_canvas(raw: &[(f64, f64)], canvas: &Canvas) -> Vec<(f64, f64)> {
    let (w, h) = (canvas.width as f64, canvas.height as f64);
    let center = (w / 2.0, h / 2.0);
    if raw.is_empty() {
        return Vec::new();
    }
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in raw {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let span = (x1 - x0).max(y1 - y0);
    if span < 1e-12 {
        return vec![center; raw.len()];
    }
    let margin = canvas.margin * w.min(h);
    let scale = (w.min(h) - 2.0 * margin) / span;
    let mid = ((x0 + x1) / 2.0, (y0 + y1) / 2.0);
    raw.iter()
        .map(|&(x, y)| (center.0 + (x - mid.0) * scale, center.1 + (y - mid.1) * scale))
        .collect()
}

/// Stable fingerprint of a graph's structure and labels.
pub fn graph_fingerprint(g: &Graph) -> String {
    let digest = Sha256::digest(g.to_edge_list_string().as_bytes());
    hex::encode(&digest[..12])
}

/// Sidecar cache so every generation of a run reuses identical positions.
pub struct LayoutCache {
    dir: PathBuf,
}

impl LayoutCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        LayoutCache { dir: dir.into() }
    }

    fn path_for(&self, g: &Graph, style: LayoutStyle, seed: u64) -> PathBuf {
        self.dir.join(format!(
            "{}_{}_{}.layout.json",
            graph_fingerprint(g),
            style.short_name(),
            seed
        ))
    }

    pub fn get_or_compute(
        &self,
        g: &Graph,
        style: LayoutStyle,
        seed: u64,
        canvas: &Canvas,
    ) -> Result<Layout> {
        let path = self.path_for(g, style, seed);
        if let Ok(text) = std::fs::read_to_string(&path) {
            if let Ok(layout) = serde_json::from_str::<Layout>(&text) {
                if layout.len() == g.node_count() && layout.style == style {
                    return Ok(layout);
                }
            }
        }
        let layout = compute_layout(g, style, seed, canvas)?;
        write_json(&path, &layout)?;
        Ok(layout)
    }
}

pub fn compute_layout(g: &Graph, style: LayoutStyle, seed: u64, canvas: &Canvas) -> Result<Layout> {
    match style {
        LayoutStyle::KamadaKawai => layout_kamada_kawai(g, canvas),
        LayoutStyle::FruchtermanReingold => layout_fruchterman_reingold(g, seed, canvas),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let text = serde_json::to_string(value)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::load_edge_list_str;

    fn g(text: &str) -> Graph {
        load_edge_list_str(text).unwrap().0
    }

    fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
        ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
    }

    #[test]
    fn single_node_sits_at_center() {
        let one = g("5 5");
        let canvas = Canvas::default();
        for layout in [
            layout_kamada_kawai(&one, &canvas).unwrap(),
            layout_fruchterman_reingold(&one, 3, &canvas).unwrap(),
        ] {
            assert_eq!(layout.positions, vec![(600.0, 600.0)]);
        }
    }

    #[test]
    fn kk_two_nodes_horizontal_and_symmetric() {
        let layout = layout_kamada_kawai(&g("0 1"), &Canvas::default()).unwrap();
        let (a, b) = (layout.positions[0], layout.positions[1]);
        assert!((a.1 - b.1).abs() < 1e-6);
        assert!((dist(a, (600.0, 600.0)) - dist(b, (600.0, 600.0))).abs() < 1e-6);
    }

    #[test]
    fn kk_four_cycle_reduces_stress_and_stays_regular() {
        let c4 = g("0 1\n1 2\n2 3\n3 0");
        let (_, before, after) = kk_optimize(&c4).unwrap();
        assert!(after <= before);
        let layout = layout_kamada_kawai(&c4, &Canvas::default()).unwrap();
        let p = &layout.positions;
        let sides: Vec<f64> = (0..4).map(|i| dist(p[i], p[(i + 1) % 4])).collect();
        let (lo, hi) = sides.iter().fold((f64::MAX, f64::MIN), |(l, h), &s| (l.min(s), h.max(s)));
        assert!(hi / lo <= 1.05, "{sides:?}");
    }

    #[test]
    fn disconnected_graph_is_rejected() {
        let two = g("0 1\n2 3");
        assert!(matches!(layout_kamada_kawai(&two, &Canvas::default()), Err(Error::Disconnected)));
        assert!(layout_fruchterman_reingold(&two, 0, &Canvas::default()).is_err());
    }

    #[test]
    fn fr_is_seed_deterministic_and_separates_k2() {
        let graph = g("0 1\n1 2\n2 3\n3 0\n0 2\n3 4");
        let canvas = Canvas::default();
        let a = layout_fruchterman_reingold(&graph, 11, &canvas).unwrap();
        let b = layout_fruchterman_reingold(&graph, 11, &canvas).unwrap();
        assert_eq!(a, b);

        let k2 = layout_fruchterman_reingold(&g("0 1"), 4, &canvas).unwrap();
        assert!(dist(k2.positions[0], k2.positions[1]) >= 2.0 * 17.0);
    }

    #[test]
    fn positions_stay_inside_margins() {
        let graph = g("0 1\n1 2\n2 3\n3 4\n4 0\n0 5\n5 6\n6 7");
        let canvas = Canvas::default();
        for style in [LayoutStyle::KamadaKawai, LayoutStyle::FruchtermanReingold] {
            let layout = compute_layout(&graph, style, 1, &canvas).unwrap();
            for &(x, y) in &layout.positions {
                assert!((96.0 - 1e-9..=1104.0 + 1e-9).contains(&x));
                assert!((96.0 - 1e-9..=1104.0 + 1e-9).contains(&y));
            }
        }
    }

    #[test]
    fn cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let graph = g("0 1\n1 2\n2 0");
        let cache = LayoutCache::new(dir.path());
        let canvas = Canvas::default();
        let first = cache.get_or_compute(&graph, LayoutStyle::KamadaKawai, 0, &canvas).unwrap();
        let second = cache.get_or_compute(&graph, LayoutStyle::KamadaKawai, 0, &canvas).unwrap();
        assert_eq!(first, second);
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
