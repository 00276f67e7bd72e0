//! Samplers for the four lattice models and their natural parametrization.
//!
//! Square-lattice walks (LERW, SAW) use integer sites with unit spacing.
//! Percolation and Ising interfaces are paths on a hexagonal lattice with unit
//! edge, returned directly as planar points.

mod ising;
mod lerw;
mod perc;
mod saw;

use std::io::Write;

use thiserror::Error;

use crate::fvar::ModelKind;
use crate::geometry::{Curve, Point};

pub use ising::{
    ising_interface, ising_interface_sides, ising_wolff_run, Boundary, IsingInterface,
    IsingLattice, WolffStep, ISING_KC,
};
pub use lerw::{excursion_step, lerw_sample, loop_erase, LoopEraser};
pub use perc::{perc_interface, Hex, HexInterface};
pub use saw::{saw_pivot_run, PivotChain, PivotMove, Symmetry};

#[derive(Debug, Error)]
pub enum LatticeError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("interface did not reach the top boundary within {0} steps")]
    Unterminated(usize),
}

pub type Site = (i32, i32);

/// Nearest-neighbour walk on the square lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeWalk {
    pub sites: Vec<Site>,
    pub model: ModelKind,
}

impl LatticeWalk {
    pub fn steps(&self) -> usize {
        self.sites.len().saturating_sub(1)
    }

    pub fn points(&self) -> Vec<Point> {
        self.sites
            .iter()
            .map(|&(x, y)| Point::new(x as f64, y as f64))
            .collect()
    }

    pub fn is_self_avoiding(&self) -> bool {
        let mut seen = rustc_hash::FxHashSet::default();
        self.sites.iter().all(|s| seen.insert(*s))
    }

    pub fn is_nearest_neighbour(&self) -> bool {
        self.sites
            .windows(2)
            .all(|w| (w[0].0 - w[1].0).abs() + (w[0].1 - w[1].1).abs() == 1)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        write_points_csv(&self.points(), w)
    }
}

/// `step,x,y` rows.
pub fn write_points_csv<W: Write>(points: &[Point], mut w: W) -> std::io::Result<()> {
    writeln!(w, "step,x,y")?;
    for (k, p) in points.iter().enumerate() {
        writeln!(w, "{k},{:.16e},{:.16e}", p.x, p.y)?;
    }
    Ok(())
}

/// Lattice curve in the natural-parametrization scaling: positions divided by
/// `scale_n^(1/d_h)`, vertex `k` at parameter `k / scale_n`.
pub fn natural_curve(points: &[Point], d_h: f64, scale_n: u64) -> Result<Curve, LatticeError> {
    if scale_n == 0 {
        return Err(LatticeError::Domain("scale_n must be >= 1".into()));
    }
    if points.len() < 2 {
        return Err(LatticeError::Domain(
            "a lattice curve needs at least one step".into(),
        ));
    }
    let n = scale_n as f64;
    let s = n.powf(d_h.recip());
    let pts = points
        .iter()
        .map(|p| Point::new(p.x / s, p.y / s))
        .collect();
    let params = (0..points.len()).map(|k| k as f64 / n).collect();
    Curve::new(pts, params).map_err(|e| LatticeError::Domain(e.to_string()))
}
