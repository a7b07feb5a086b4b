//! Little-endian binary dump of a distribution field.
//!
//! Layout: `u64` dim, nodes per axis, species count, cell count; `f64` v_max;
//! then `f64` values ordered `[species][cell][node]` with nodes in grid order
//! (first velocity component fastest).

use std::io::{self, Read, Write};

use crate::kinetic_solver::KineticState;
use crate::velocity_space::VelocityGrid;

/// Header of a snapshot file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotHeader {
    pub dim: u64,
    pub nodes_per_axis: u64,
    pub n_species: u64,
    pub n_cells: u64,
    pub v_max: f64,
}

pub fn write_snapshot<W: Write>(mut out: W, grid: &VelocityGrid, state: &KineticState) -> io::Result<()> {
    for x in [grid.dim(), grid.nodes_per_axis(), state.n_species(), state.n_cells()] {
        out.write_all(&(x as u64).to_le_bytes())?;
    }
    out.write_all(&grid.v_max().to_le_bytes())?;
    for s in 0..state.n_species() {
        for cell in &state.f {
            for x in &cell[s] {
                out.write_all(&x.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

/// Reads a snapshot; the field is returned as `f[cell][species][node]`.
pub fn read_snapshot<R: Read>(mut input: R) -> io::Result<(SnapshotHeader, Vec<Vec<Vec<f64>>>)> {
    let mut b = [0u8; 8];
    let mut word = |r: &mut R| -> io::Result<[u8; 8]> {
        r.read_exact(&mut b)?;
        Ok(b)
    };
    let dim = u64::from_le_bytes(word(&mut input)?);
    let nodes_per_axis = u64::from_le_bytes(word(&mut input)?);
    let n_species = u64::from_le_bytes(word(&mut input)?);
    let n_cells = u64::from_le_bytes(word(&mut input)?);
    let v_max = f64::from_le_bytes(word(&mut input)?);
    let header = SnapshotHeader { dim, nodes_per_axis, n_species, n_cells, v_max };
    if !(dim == 2 || dim == 3) || nodes_per_axis > 4096 {
        return Err(io::Error::new(io::ErrorKind::InvalidData, format!("bad snapshot header {header:?}")));
    }
    let nodes = nodes_per_axis.pow(dim as u32) as usize;
    let mut f = vec![vec![vec![0.0; nodes]; n_species as usize]; n_cells as usize];
    for s in 0..n_species as usize {
        for cell in f.iter_mut() {
            for x in cell[s].iter_mut() {
                *x = f64::from_le_bytes(word(&mut input)?);
            }
        }
    }
    Ok((header, f))
}
