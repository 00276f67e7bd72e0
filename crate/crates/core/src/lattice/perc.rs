//! Percolation exploration path on the hexagonal lattice, generated lazily.
//!
//! Hexagons carry axial coordinates `(q, r)`; hexagon `(q, r)` is centred at
//! `(sqrt(3) (q + r/2 + 1/2), 3r/2)` with unit edge, so row `r = 0` is centred
//! on the real axis and hexagons `(-1, 0)` and `(0, 0)` straddle the origin.
//! Rows `r <= 0` are boundary: white left of the imaginary axis, black right
//! of it. The path keeps white on its left and black on its right; each step
//! reveals the colour of the single hexagon ahead. Vertices are translated by
//! `+1/2` in `y`, so the path starts at the origin and its first edge is the
//! vertical edge between the two boundary hexagons at the origin.

use rand::Rng;
use rustc_hash::FxHashMap;

use crate::geometry::Point;

pub type Hex = (i32, i32);

/// Axial neighbour offsets in counter-clockwise order, starting east.
const DIRS: [Hex; 6] = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)];

const SQRT3: f64 = 1.732_050_807_568_877_2;

pub fn hex_center((q, r): Hex) -> Point {
    Point::new(SQRT3 * (q as f64 + 0.5 * r as f64 + 0.5), 1.5 * r as f64)
}

fn dir_index(from: Hex, to: Hex) -> usize {
    let d = (to.0 - from.0, to.1 - from.1);
    DIRS.iter()
        .position(|&e| e == d)
        .expect("hexagons are adjacent")
}

fn add(a: Hex, b: Hex) -> Hex {
    (a.0 + b.0, a.1 + b.1)
}

/// Boundary colour (`true` = black) of a hexagon in a row `r <= 0`.
fn boundary_black(h: Hex) -> bool {
    hex_center(h).x >= 0.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct HexInterface {
    pub vertices: Vec<Point>,
    /// `(white, black)` hexagons on either side of each traversed edge.
    pub sides: Vec<(Hex, Hex)>,
    /// Revealed interior colours (`true` = black), keyed by axial coordinate.
    pub colors: FxHashMap<Hex, bool>,
    /// Interior hexagons in the order they were revealed.
    pub reveal_order: Vec<Hex>,
}

impl HexInterface {
    pub fn steps(&self) -> usize {
        self.vertices.len() - 1
    }

    /// Colour of any hexagon this run has determined (`true` = black).
    pub fn color(&self, h: Hex) -> Option<bool> {
        if h.1 <= 0 {
            Some(boundary_black(h))
        } else {
            self.colors.get(&h).copied()
        }
    }
}

fn vertex(a: Hex, b: Hex, c: Hex) -> Point {
    let (pa, pb, pc) = (hex_center(a), hex_center(b), hex_center(c));
    Point::new((pa.x + pb.x + pc.x) / 3.0, (pa.y + pb.y + pc.y) / 3.0 + 0.5)
}

/// Exploration path with exactly `n_steps` edges.
pub fn perc_interface<R: Rng + ?Sized>(n_steps: usize, rng: &mut R) -> HexInterface {
    let mut colors: FxHashMap<Hex, bool> = FxHashMap::default();
    let mut reveal_order = Vec::new();
    let (mut white, mut black): (Hex, Hex) = ((-1, 0), (0, 0));
    let mut vertices = Vec::with_capacity(n_steps + 1);
    let mut sides = Vec::with_capacity(n_steps);
    // the vertex below the first edge is shared with boundary hexagon (0, -1)
    vertices.push(vertex(white, black, (0, -1)));
    for _ in 0..n_steps {
        let ahead = add(white, DIRS[(dir_index(white, black) + 1) % 6]);
        vertices.push(vertex(white, black, ahead));
        sides.push((white, black));
        let is_black = if ahead.1 <= 0 {
            boundary_black(ahead)
        } else {
            *colors.entry(ahead).or_insert_with(|| {
                reveal_order.push(ahead);
                rng.random::<bool>()
            })
        };
        if is_black {
            black = ahead;
        } else {
            white = ahead;
        }
    }
    HexInterface {
        vertices,
        sides,
        colors,
        reveal_order,
    }
}
