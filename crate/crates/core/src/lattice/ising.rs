//! Critical Ising model on the triangular lattice, Wolff updates, and the
//! domain-wall interface forced by mixed boundary conditions.
//!
//! Sites sit in vertical columns `i = 0..nc` of rows `j = 0..nr`. Column `i`
//! is at `x = (sqrt(3)/2) (i - nc/2 + 1/2)` and its site `j` at height
//! `y = j + (i mod 2)/2`, giving a triangular lattice with unit edge. In the
//! doubled coordinate `h = 2j + (i mod 2)` the six neighbours of `(i, h)` are
//! `(i, h±2)` and `(i±1, h±1)`.
//!
//! With [`Boundary::Mixed`] the bottom and top rows are frozen to `-1` for
//! `x < 0` and `+1` for `x >= 0`, and the two vertical sides are glued with
//! an antiperiodic (sign `-1`) coupling. `nc` must then be even.

use std::fmt::Write as _;

use rand::Rng;

use super::LatticeError;
use crate::geometry::{Curve, Point};

/// Critical coupling of the triangular-lattice Ising model, `ln(3) / 4`.
pub const ISING_KC: f64 = 0.274_653_072_167_027_45;

/// Neighbour offsets `(di, dh)` in counter-clockwise order, starting straight up.
const DIRS: [(i64, i64); 6] = [(0, 2), (-1, 1), (-1, -1), (0, -2), (1, -1), (1, 1)];

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// Open rectangle, no frozen sites.
    Free,
    /// Frozen mixed top/bottom rows and an antiperiodic seam.
    Mixed,
}

#[derive(Debug, Clone)]
pub struct IsingLattice {
    nc: usize,
    nr: usize,
    boundary: Boundary,
    coupling: f64,
    p_add: f64,
    spins: Vec<i8>,
    frozen: Vec<bool>,
    free_sites: Vec<u32>,
    nbr: Vec<[u32; 6]>,
    sign: Vec<[i8; 6]>,
    stamp: Vec<u32>,
    generation: u32,
    stack: Vec<u32>,
    cluster: Vec<u32>,
}

/// Outcome of one Wolff update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WolffStep {
    pub size: usize,
    pub flipped: bool,
}

impl IsingLattice {
    /// `nc` columns, `nr` rows, all spins `+1`, no frozen sites.
    pub fn free(nc: usize, nr: usize) -> Result<Self, LatticeError> {
        if nc < 1 || nr < 1 {
            return Err(LatticeError::Domain(format!(
                "lattice must be non-empty, got {nc}x{nr}"
            )));
        }
        Ok(IsingLattice::build(nc, nr, Boundary::Free))
    }

    /// Strip of `nc` columns (even) and rows `0..=l` with mixed boundary
    /// conditions; the bulk starts in the boundary pattern.
    pub fn strip(nc: usize, l: usize) -> Result<Self, LatticeError> {
        if nc < 2 || !nc.is_multiple_of(2) {
            return Err(LatticeError::Domain(format!(
                "column count must be even and >= 2, got {nc}"
            )));
        }
        if l < 2 {
            return Err(LatticeError::Domain(format!(
                "strip height must be >= 2, got {l}"
            )));
        }
        Ok(IsingLattice::build(nc, l + 1, Boundary::Mixed))
    }

    /// Strip whose width `w` is rounded to an even number of columns of spacing `sqrt(3)/2`.
    pub fn strip_with_width(w: f64, l: usize) -> Result<Self, LatticeError> {
        if !(w > 0.0) {
            return Err(LatticeError::Domain(format!("width must be > 0, got {w}")));
        }
        let half_cols = (w / 3f64.sqrt()).round().max(1.0) as usize;
        IsingLattice::strip(2 * half_cols, l)
    }

    fn build(nc: usize, nr: usize, boundary: Boundary) -> Self {
        let n = nc * nr;
        let mut lat = IsingLattice {
            nc,
            nr,
            boundary,
            coupling: 0.0,
            p_add: 0.0,
            spins: vec![1; n],
            frozen: vec![false; n],
            free_sites: Vec::with_capacity(n),
            nbr: vec![[NONE; 6]; n],
            sign: vec![[1; 6]; n],
            stamp: vec![0; n],
            generation: 0,
            stack: Vec::new(),
            cluster: Vec::new(),
        };
        lat.set_coupling(ISING_KC);
        for i in 0..nc {
            for j in 0..nr {
                let s = lat.index(i, j);
                if boundary == Boundary::Mixed {
                    lat.spins[s] = if lat.column_x(i as i64) < 0.0 { -1 } else { 1 };
                    lat.frozen[s] = j == 0 || j == nr - 1;
                }
                if !lat.frozen[s] {
                    lat.free_sites.push(s as u32);
                }
                let h = 2 * j as i64 + (i as i64 & 1);
                for (d, &(di, dh)) in DIRS.iter().enumerate() {
                    let (mut ii, hh) = (i as i64 + di, h + dh);
                    let mut sg = 1;
                    if ii < 0 || ii >= nc as i64 {
                        if boundary == Boundary::Free {
                            continue;
                        }
                        ii = ii.rem_euclid(nc as i64);
                        sg = -1;
                    }
                    let jj = (hh - (ii & 1)).div_euclid(2);
                    if jj < 0 || jj >= nr as i64 {
                        continue;
                    }
                    lat.nbr[s][d] = lat.index(ii as usize, jj as usize) as u32;
                    lat.sign[s][d] = sg;
                }
            }
        }
        lat
    }

    pub fn set_coupling(&mut self, k: f64) {
        self.coupling = k;
        self.p_add = 1.0 - (-2.0 * k).exp();
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.nr + j
    }

    pub fn columns(&self) -> usize {
        self.nc
    }

    pub fn rows(&self) -> usize {
        self.nr
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    pub fn frozen(&self) -> &[bool] {
        &self.frozen
    }

    /// Overwrites the non-frozen spins; frozen entries of `spins` are ignored.
    pub fn set_spins(&mut self, spins: &[i8]) -> Result<(), LatticeError> {
        if spins.len() != self.spins.len() || spins.iter().any(|&s| s != 1 && s != -1) {
            return Err(LatticeError::Domain(
                "spin array must match the lattice and hold +-1".into(),
            ));
        }
        for (k, &s) in spins.iter().enumerate() {
            if !self.frozen[k] {
                self.spins[k] = s;
            }
        }
        Ok(())
    }

    pub fn column_x(&self, i: i64) -> f64 {
        0.5 * 3f64.sqrt() * (i as f64 - self.nc as f64 / 2.0 + 0.5)
    }

    /// Width `nc * sqrt(3) / 2` of the rectangle.
    pub fn width(&self) -> f64 {
        0.5 * 3f64.sqrt() * self.nc as f64
    }

    /// Distance between the frozen rows.
    pub fn height(&self) -> f64 {
        (self.nr - 1) as f64
    }

    /// `-sum sign * s_i s_j` over bonds, each bond counted once.
    pub fn energy(&self) -> f64 {
        let mut e = 0i64;
        for s in 0..self.spins.len() {
            for d in 0..6 {
                let t = self.nbr[s][d];
                if t != NONE && (t as usize) > s {
                    e -= (self.sign[s][d] * self.spins[s] * self.spins[t as usize]) as i64;
                }
            }
        }
        e as f64
    }

    /// Grows one Wolff cluster from a uniformly chosen free site and flips it
    /// unless it contains a frozen site.
    pub fn wolff_step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> WolffStep {
        if self.free_sites.is_empty() {
            return WolffStep {
                size: 0,
                flipped: false,
            };
        }
        self.generation = self.generation.wrapping_add(1);
        if self.generation == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.generation = 1;
        }
        let g = self.generation;
        let seed = self.free_sites[rng.random_range(0..self.free_sites.len())];
        self.stack.clear();
        self.cluster.clear();
        self.stack.push(seed);
        self.stamp[seed as usize] = g;
        while let Some(s) = self.stack.pop() {
            let s = s as usize;
            self.cluster.push(s as u32);
            if self.frozen[s] {
                // the cluster cannot be flipped; stop growing it
                return WolffStep {
                    size: self.cluster.len(),
                    flipped: false,
                };
            }
            let sv = self.spins[s];
            for d in 0..6 {
                let t = self.nbr[s][d];
                if t == NONE {
                    continue;
                }
                let tu = t as usize;
                if self.stamp[tu] == g || self.sign[s][d] * self.spins[tu] != sv {
                    continue;
                }
                if rng.random::<f64>() < self.p_add {
                    self.stamp[tu] = g;
                    self.stack.push(t);
                }
            }
        }
        for &s in &self.cluster {
            self.spins[s as usize] = -self.spins[s as usize];
        }
        WolffStep {
            size: self.cluster.len(),
            flipped: true,
        }
    }

    /// Spin seen at unwrapped column `i` and doubled height `h`. Each pass
    /// through the seam flips the sign; rows beyond the lattice repeat the
    /// nearest (frozen) row.
    fn unwrapped_spin(&self, i: i64, h: i64) -> i8 {
        let nc = self.nc as i64;
        let col = i.rem_euclid(nc);
        let sheet = i.div_euclid(nc);
        let j = (h - (i & 1)).div_euclid(2).clamp(0, self.nr as i64 - 1);
        let s = self.spins[self.index(col as usize, j as usize)];
        if sheet % 2 == 0 {
            s
        } else {
            -s
        }
    }

    fn site_pos(&self, (i, h): (i64, i64)) -> Point {
        Point::new(self.column_x(i), 0.5 * h as f64)
    }

    /// Spin rows from top to bottom, run-length encoded as `count*sign` tokens.
    pub fn rle_rows(&self) -> String {
        let mut out = String::new();
        for j in (0..self.nr).rev() {
            let mut run: Option<(i8, usize)> = None;
            for i in 0..self.nc {
                let s = self.spins[self.index(i, j)];
                run = match run {
                    Some((v, c)) if v == s => Some((v, c + 1)),
                    Some((v, c)) => {
                        let _ = write!(out, "{c}{} ", if v > 0 { '+' } else { '-' });
                        Some((s, 1))
                    }
                    None => Some((s, 1)),
                };
            }
            if let Some((v, c)) = run {
                let _ = write!(out, "{c}{}", if v > 0 { '+' } else { '-' });
            }
            out.push('\n');
        }
        out
    }
}

/// Runs `iters` Wolff updates, calling `observer` every `thin` of them.
pub fn ising_wolff_run<R, F>(
    lattice: &mut IsingLattice,
    iters: u64,
    thin: u64,
    rng: &mut R,
    mut observer: F,
) -> Result<(), LatticeError>
where
    R: Rng + ?Sized,
    F: FnMut(&IsingLattice),
{
    if thin < 1 {
        return Err(LatticeError::Domain("thin must be >= 1".into()));
    }
    for it in 1..=iters {
        lattice.wolff_step(rng);
        if it % thin == 0 {
            observer(lattice);
        }
    }
    Ok(())
}

/// Interface traced by [`ising_interface_sides`], with the `(-, +)` site pair of every edge.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingInterface {
    pub vertices: Vec<Point>,
    /// Unwrapped `(column, doubled height)` of the minus and plus site of each edge.
    pub sides: Vec<((i64, i64), (i64, i64))>,
}

/// Domain wall from the bottom to the top boundary change point, with minus
/// spins on its left. Vertices are centres of lattice triangles.
pub fn ising_interface_sides(lat: &IsingLattice) -> Result<IsingInterface, LatticeError> {
    if lat.boundary != Boundary::Mixed {
        return Err(LatticeError::Domain(
            "interface needs mixed boundary conditions".into(),
        ));
    }
    let nc = lat.nc as i64;
    let top = lat.nr as i64 - 1;
    let row = |(i, h): (i64, i64)| (h - (i & 1)).div_euclid(2);
    let step = |(i, h): (i64, i64), d: usize| (i + DIRS[d].0, h + DIRS[d].1);
    let dir_of = |a: (i64, i64), b: (i64, i64)| {
        DIRS.iter()
            .position(|&e| e == (b.0 - a.0, b.1 - a.1))
            .expect("sites are adjacent")
    };
    let centroid = |a, b, c| {
        let (pa, pb, pc) = (lat.site_pos(a), lat.site_pos(b), lat.site_pos(c));
        Point::new((pa.x + pb.x + pc.x) / 3.0, (pa.y + pb.y + pc.y) / 3.0)
    };

    let mut minus = (nc / 2 - 1, (nc / 2 - 1) & 1);
    let mut plus = (nc / 2, (nc / 2) & 1);
    if lat.unwrapped_spin(minus.0, minus.1) != -1 || lat.unwrapped_spin(plus.0, plus.1) != 1 {
        return Err(LatticeError::Domain(
            "bottom boundary does not change sign at the origin".into(),
        ));
    }
    let mut d = dir_of(minus, plus);
    let mut vertices = vec![centroid(minus, plus, step(minus, (d + 5) % 6))];
    let mut sides = Vec::new();
    let cap = 12 * lat.nc * lat.nr + 16;
    loop {
        let ahead = step(minus, (d + 1) % 6);
        vertices.push(centroid(minus, plus, ahead));
        sides.push((minus, plus));
        if row(minus) >= top && row(plus) >= top {
            break;
        }
        if sides.len() >= cap {
            return Err(LatticeError::Unterminated(cap));
        }
        if lat.unwrapped_spin(ahead.0, ahead.1) < 0 {
            minus = ahead;
        } else {
            plus = ahead;
        }
        d = dir_of(minus, plus);
    }
    Ok(IsingInterface { vertices, sides })
}

/// The interface as a curve parametrized by step index.
pub fn ising_interface(lat: &IsingLattice) -> Result<Curve, LatticeError> {
    let it = ising_interface_sides(lat)?;
    Curve::from_points(it.vertices).map_err(|e| LatticeError::Domain(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rustc_hash::FxHashMap;

    #[test]
    fn critical_coupling() {
        assert!((ISING_KC - 3f64.ln() / 4.0).abs() < 1e-16);
        assert!(((2.0 * ISING_KC).sinh() - 1.0 / 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn neighbours_are_symmetric_unit_distance() {
        for lat in [
            IsingLattice::free(3, 4).unwrap(),
            IsingLattice::strip(8, 6).unwrap(),
        ] {
            let nr = lat.nr;
            for s in 0..lat.spins.len() {
                let (i, j) = (s / nr, s % nr);
                for d in 0..6 {
                    let t = lat.nbr[s][d];
                    if t == NONE {
                        continue;
                    }
                    let back = (d + 3) % 6;
                    assert_eq!(lat.nbr[t as usize][back], s as u32);
                    assert_eq!(lat.sign[t as usize][back], lat.sign[s][d]);
                    let (ti, tj) = (t as usize / nr, t as usize % nr);
                    if lat.sign[s][d] == 1 {
                        let p = Point::new(lat.column_x(i as i64), j as f64 + (i & 1) as f64 * 0.5);
                        let q =
                            Point::new(lat.column_x(ti as i64), tj as f64 + (ti & 1) as f64 * 0.5);
                        assert!((p.dist(q) - 1.0).abs() < 1e-12);
                    }
                }
            }
        }
        // 3x4 open lattice: 3 vertical + 2*... bonds
        let free = IsingLattice::free(3, 4).unwrap();
        let bonds: usize = (0..12)
            .map(|s| free.nbr[s].iter().filter(|&&t| t != NONE).count())
            .sum();
        assert_eq!(bonds / 2, 23);
    }

    #[test]
    fn frozen_sites_never_change() {
        let mut lat = IsingLattice::strip(16, 12).unwrap();
        let before: Vec<(usize, i8)> = (0..lat.spins.len())
            .filter(|&s| lat.frozen[s])
            .map(|s| (s, lat.spins[s]))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut flips = 0;
        for _ in 0..200_000 {
            if lat.wolff_step(&mut rng).flipped {
                flips += 1;
            }
        }
        assert!(flips > 0);
        for (s, v) in before {
            assert_eq!(lat.spins[s], v);
        }
    }

    /// Independent tracer: follows the chain of lattice triangles with mixed
    /// colours, stepping across mixed edges, on an explicitly unwrapped copy.
    fn reference_trace(lat: &IsingLattice, len: usize) -> Vec<Point> {
        let nc = lat.nc as i64;
        let color = |i: i64, h: i64| -> i8 {
            let col = i.rem_euclid(nc);
            let flips = i.div_euclid(nc).rem_euclid(2);
            let j = ((h - col % 2) / 2).clamp(0, lat.nr as i64 - 1);
            let s = lat.spins[col as usize * lat.nr + j as usize];
            if flips == 1 {
                -s
            } else {
                s
            }
        };
        let nbrs = |a: (i64, i64)| DIRS.map(|(di, dh)| (a.0 + di, a.1 + dh));
        let common = |a: (i64, i64), b: (i64, i64)| -> Vec<(i64, i64)> {
            let nb = nbrs(b);
            nbrs(a).into_iter().filter(|x| nb.contains(x)).collect()
        };
        let pos = |a: (i64, i64)| lat.site_pos(a);
        let tri_center = |t: [(i64, i64); 3]| {
            let (p, q, r) = (pos(t[0]), pos(t[1]), pos(t[2]));
            Point::new((p.x + q.x + r.x) / 3.0, (p.y + q.y + r.y) / 3.0)
        };
        let key = |t: [(i64, i64); 3]| {
            let mut k = t;
            k.sort();
            k
        };
        let a0 = (nc / 2 - 1, (nc / 2 - 1) & 1);
        let b0 = (nc / 2, (nc / 2) & 1);
        let cs = common(a0, b0);
        let below = *cs.iter().min_by_key(|c| c.1).unwrap();
        let mut prev = key([a0, b0, below]);
        let mut out = vec![tri_center(prev)];
        // cross the edge (a0, b0) first
        let mut cur = key([a0, b0, *cs.iter().max_by_key(|c| c.1).unwrap()]);
        let mut visited: FxHashMap<[(i64, i64); 3], ()> = FxHashMap::default();
        while out.len() < len {
            out.push(tri_center(cur));
            visited.insert(cur, ());
            let mut next = None;
            for (x, y) in [(0, 1), (0, 2), (1, 2)] {
                let (a, b) = (cur[x], cur[y]);
                if color(a.0, a.1) == color(b.0, b.1) {
                    continue;
                }
                let third = common(a, b).into_iter().find(|c| !cur.contains(c)).unwrap();
                let t = key([a, b, third]);
                if t != prev {
                    next = Some(t);
                }
            }
            prev = cur;
            cur = next.expect("mixed triangle has two mixed edges");
            assert!(!visited.contains_key(&cur));
        }
        out
    }

    #[test]
    fn all_plus_bulk_wraps_through_the_seam() {
        let mut lat = IsingLattice::strip(6, 5).unwrap();
        let n = lat.spins.len();
        lat.set_spins(&vec![1; n]).unwrap();
        let it = ising_interface_sides(&lat).unwrap();
        let reference = reference_trace(&lat, it.vertices.len());
        for (a, b) in it.vertices.iter().zip(&reference) {
            assert!(a.dist(*b) < 1e-12);
        }
        // minus spins live only in the frozen left halves, so the wall runs
        // left along the bottom, up the seam and right along the top
        let min_x = it
            .vertices
            .iter()
            .map(|p| p.x)
            .fold(f64::INFINITY, f64::min);
        assert!(min_x < -lat.width() / 2.0 + 0.5);
        let end = *it.vertices.last().unwrap();
        assert!(end.x.abs() < 1.0 && end.y > lat.height() - 0.5);
    }

    #[test]
    fn sampled_interfaces_match_reference_and_separate_spins() {
        let mut lat = IsingLattice::strip(24, 16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..2000 {
            lat.wolff_step(&mut rng);
        }
        for _ in 0..20 {
            for _ in 0..50 {
                lat.wolff_step(&mut rng);
            }
            let it = ising_interface_sides(&lat).unwrap();
            let reference = reference_trace(&lat, it.vertices.len());
            for (a, b) in it.vertices.iter().zip(&reference) {
                assert!(a.dist(*b) < 1e-12);
            }
            for &(m, p) in &it.sides {
                assert_eq!(lat.unwrapped_spin(m.0, m.1), -1);
                assert_eq!(lat.unwrapped_spin(p.0, p.1), 1);
            }
            assert!(it.vertices[0].norm() < 1.0);
            let end = *it.vertices.last().unwrap();
            assert!(end.x.abs() < 1.0 && (end.y - lat.height()).abs() < 1.0);
            for w in it.vertices.windows(2) {
                assert!((w[0].dist(w[1]) - 1.0 / 3f64.sqrt()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn free_lattice_has_no_interface() {
        assert!(ising_interface(&IsingLattice::free(4, 4).unwrap()).is_err());
    }

    #[test]
    fn rle_snapshot() {
        let lat = IsingLattice::strip(4, 2).unwrap();
        assert_eq!(lat.rle_rows(), "2- 2+\n2- 2+\n2- 2+\n");
    }
}
