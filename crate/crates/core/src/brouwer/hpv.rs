//! Displacement field built from the path embedding of an EndOfTheLine instance.
//!
//! Geometry (all thresholds are multiples of 2^-6):
//!
//! * every axis is split into 8 cells of side `h = 1/8`; embedded vertex `p`
//!   sits in cell `3 + p_i` on horizontal axis `i` and in cell 1 (the tube
//!   layer) on the last axis;
//! * ambient displacement is `δ ξ_d` with `δ = 1/16`;
//! * a tube around an axis with direction `t` has, by transverse distance `ρ`:
//!   core `t` (ρ < 1/64), inward sheath, backflow shell `-t`, and ambient at
//!   `ρ >= h/2`, with linear blends over bands of width 1/64;
//! * a vertical column of the same shape runs down from the top layer into
//!   the home subcube, and the top layer flows horizontally into it;
//! * path ends and extra path starts are zero subcubes: the boundary values
//!   are scaled radially (in the max norm) towards a zero at the centre.
//!
//! Each blend mixes two orthogonal vectors of unit max norm, so the field
//! never drops below `(√2 − 1) δ` outside the zero subcubes.

use crate::embed::{local_info, PathVertex};
use crate::end_of_line::EolInstance;
use crate::error::{Error, Result};

use super::{RegionDescriptor, RegionKind};

pub const CELLS: usize = 8;
pub const CELL: f64 = 0.125;
pub const HALF: f64 = 0.0625;
pub const BAND: f64 = 1.0 / 64.0;
pub const DELTA: f64 = 1.0 / 16.0;
/// Tube layer index on the vertical axis.
pub const TUBE_LAYER: usize = 1;
/// Vertical cells `[5h, 6h)` blend the column into the top layer.
pub const BLEND_LAYER: usize = 5;
pub const TOP_LAYER: usize = 6;
/// Horizontal centre of the home subcube (cell 3).
pub const COLUMN_CENTRE: f64 = 3.5 * CELL;

const R1: f64 = BAND;
const R2: f64 = 2.0 * BAND;
const R3: f64 = 3.0 * BAND;
const R4: f64 = HALF;

/// Upper bound on the max-norm Lipschitz constant of the unit field `g/δ`.
///
/// The worst piece is the sheath/backflow band of a corner, where the inward
/// field turns around the inner corner: blend slope `2/BAND = 128` plus the
/// inward-field bound `2(1 + 4·(3/64)/(1/64))/(2/64) = 832`. Straight tubes,
/// the column (≤ 256), the vertical blend (≤ 272) and the radial zero cells
/// (`(1 + 2·256·h/2)/(h/2) = 528`) stay below it.
pub const UNIT_FIELD_LIPSCHITZ: f64 = 960.0;

/// Lipschitz bound of the displacement `g`.
pub const DISPLACEMENT_LIPSCHITZ: f64 = UNIT_FIELD_LIPSCHITZ * DELTA;

/// Guaranteed `‖g‖∞` outside the zero subcubes.
pub const DISPLACEMENT_FLOOR: f64 = DELTA / 3.0;

/// Signed unit direction along one axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dir {
    pub axis: usize,
    pub positive: bool,
}

impl Dir {
    fn sign(self) -> f64 {
        if self.positive {
            1.0
        } else {
            -1.0
        }
    }
}

/// What an embedded-vertex subcube contains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellRole {
    Off,
    /// Interior path vertex; the home subcube is a corner fed from above.
    Corner { din: Dir, dout: Dir, home: bool },
    End { din: Dir },
    Start { dout: Dir },
}

#[derive(Debug, Clone)]
pub struct HpvField {
    n: usize,
    instance: EolInstance,
    roles: Vec<CellRole>,
}

fn step_dir(from: PathVertex, to: PathVertex, n: usize) -> Dir {
    let diff = from.to_word(n) ^ to.to_word(n);
    debug_assert_eq!(diff.count_ones(), 1);
    let axis = diff.trailing_zeros() as usize;
    Dir {
        axis,
        positive: (to.to_word(n) >> axis) & 1 == 1,
    }
}

/// Cell index of a coordinate; boundary points go to the lower cell.
pub fn cell_index(x: f64) -> usize {
    let s = x * CELLS as f64;
    let f = s.floor();
    let idx = if f == s && f > 0.0 { f - 1.0 } else { f };
    (idx.max(0.0) as usize).min(CELLS - 1)
}

pub fn cell_centre(idx: usize) -> f64 {
    (idx as f64 + 0.5) * CELL
}

impl HpvField {
    /// Precompute the role of every embedded-vertex subcube.
    pub fn build(instance: &EolInstance, limit: u64) -> Result<Self> {
        let n = instance.n();
        let width = 2 * n + 1;
        if width >= 40 || (1u64 << width) > limit {
            return Err(Error::BudgetExceeded {
                needed: 1u128 << width.min(127),
                budget: limit as u128,
            });
        }
        if !instance.is_normalized(limit)? {
            return Err(Error::InvalidInstance(
                "the field is built from a normalized instance".into(),
            ));
        }
        let d = width + 1;
        let down = Dir {
            axis: d - 1,
            positive: false,
        };
        let mut roles = Vec::with_capacity(1 << width);
        for w in 0..(1u64 << width) {
            let p = PathVertex::from_word(w, n);
            let info = local_info(instance, p)?;
            let role = if !info.on_path {
                CellRole::Off
            } else {
                match (info.prev, info.next) {
                    (None, Some(next)) if p == PathVertex::ORIGIN => CellRole::Corner {
                        din: down,
                        dout: step_dir(p, next, n),
                        home: true,
                    },
                    (None, Some(next)) => CellRole::Start {
                        dout: step_dir(p, next, n),
                    },
                    (Some(prev), None) => CellRole::End {
                        din: step_dir(prev, p, n),
                    },
                    (Some(prev), Some(next)) => {
                        let din = step_dir(prev, p, n);
                        let dout = step_dir(p, next, n);
                        if din.axis == dout.axis {
                            return Err(Error::Internal(format!(
                                "path reverses at {}",
                                p.display(n)
                            )));
                        }
                        CellRole::Corner {
                            din,
                            dout,
                            home: false,
                        }
                    }
                    (None, None) => {
                        return Err(Error::Internal(format!(
                            "isolated path vertex {}",
                            p.display(n)
                        )))
                    }
                }
            };
            roles.push(role);
        }
        Ok(HpvField {
            n,
            instance: instance.clone(),
            roles,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n + 2
    }

    pub fn instance(&self) -> &EolInstance {
        &self.instance
    }

    pub fn role(&self, p: PathVertex) -> CellRole {
        self.roles[p.to_word(self.n) as usize]
    }

    /// Cell index vector of an embedded vertex.
    pub fn vertex_cell(&self, p: PathVertex) -> Vec<usize> {
        let mut cell: Vec<usize> = (0..2 * self.n + 1)
            .map(|i| 3 + p.bit(i, self.n) as usize)
            .collect();
        cell.push(TUBE_LAYER);
        cell
    }

    /// Embedded vertex whose subcube is `cell`, if any.
    pub fn cell_vertex(&self, cell: &[usize]) -> Option<PathVertex> {
        let d = self.dim();
        if cell[d - 1] != TUBE_LAYER || !cell[..d - 1].iter().all(|&c| c == 3 || c == 4) {
            return None;
        }
        let w = cell[..d - 1]
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &c)| acc | (((c - 3) as u64) << i));
        Some(PathVertex::from_word(w, self.n))
    }

    /// Subcubes where the field vanishes: path ends and non-home starts.
    pub fn zero_cells(&self) -> Vec<(Vec<usize>, PathVertex)> {
        self.roles
            .iter()
            .enumerate()
            .filter(|(_, r)| matches!(r, CellRole::End { .. } | CellRole::Start { .. }))
            .map(|(w, _)| {
                let p = PathVertex::from_word(w as u64, self.n);
                (self.vertex_cell(p), p)
            })
            .collect()
    }

    /// Unit field `g/δ` at `x` (coordinates already validated).
    pub fn unit_field(&self, x: &[f64]) -> Vec<f64> {
        let d = x.len();
        let cells: Vec<usize> = x.iter().map(|&c| cell_index(c)).collect();
        if let Some(p) = self.cell_vertex(&cells) {
            let centre: Vec<f64> = cells.iter().map(|&c| cell_centre(c)).collect();
            match self.role(p) {
                CellRole::Off => {}
                CellRole::Corner { din, dout, .. } => return corner_field(x, &centre, din, dout),
                CellRole::End { din } => return radial_field(x, &centre, din, false),
                CellRole::Start { dout } => return radial_field(x, &centre, dout, true),
            }
        }
        background_field(x, cells[d - 1])
    }

    pub fn classify(&self, x: &[f64]) -> RegionDescriptor {
        let d = x.len();
        let cells: Vec<usize> = x.iter().map(|&c| cell_index(c)).collect();
        let vertical = cells[d - 1];
        if let Some(p) = self.cell_vertex(&cells) {
            let kind = match self.role(p) {
                CellRole::Off => None,
                CellRole::Corner { home: true, .. } => Some(RegionKind::HomeSubcube),
                CellRole::End { .. } => Some(RegionKind::EndSubcube),
                CellRole::Start { .. } => Some(RegionKind::ExtraStartSubcube),
                CellRole::Corner { din, dout, .. } => {
                    let centre: Vec<f64> = cells.iter().map(|&c| cell_centre(c)).collect();
                    let dp = din.sign() * (x[din.axis] - centre[din.axis]) + HALF;
                    let dq = HALF - dout.sign() * (x[dout.axis] - centre[dout.axis]);
                    if dp <= CELL / 4.0 || dq <= CELL / 4.0 {
                        Some(RegionKind::TubeSegment)
                    } else {
                        Some(RegionKind::TubeCorner)
                    }
                }
            };
            if let Some(kind) = kind {
                return RegionDescriptor {
                    kind,
                    cell: cells,
                    vertex: Some(p),
                };
            }
        }
        let rho = x[..d - 1]
            .iter()
            .map(|&c| (c - COLUMN_CENTRE).abs())
            .fold(0.0, f64::max);
        let kind = if vertical >= TOP_LAYER {
            RegionKind::TopLayer
        } else if vertical == BLEND_LAYER {
            RegionKind::BlendZone
        } else if vertical > TUBE_LAYER && rho < R4 {
            if rho <= R2 {
                RegionKind::ColumnCore
            } else {
                RegionKind::ColumnSheath
            }
        } else if vertical == TUBE_LAYER {
            RegionKind::SliceFree
        } else {
            RegionKind::AmbientDefault
        };
        RegionDescriptor {
            kind,
            cell: cells,
            vertex: None,
        }
    }
}

fn up(d: usize) -> Vec<f64> {
    let mut v = vec![0.0; d];
    v[d - 1] = 1.0;
    v
}

fn mix(a: &[f64], wa: f64, b: &[f64], wb: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| wa * x + wb * y).collect()
}

/// Tube cross-section: `axis` is the unit-max-norm tube direction, `offset`
/// the transverse offset (orthogonal to `axis`) with max norm `rho`.
fn tube_profile(axis: &[f64], offset: &[f64], rho: f64) -> Vec<f64> {
    let d = axis.len();
    if rho >= R4 {
        return up(d);
    }
    if rho < R1 {
        return axis.to_vec();
    }
    let inward: Vec<f64> = offset.iter().map(|r| -r / rho).collect();
    let back: Vec<f64> = axis.iter().map(|t| -t).collect();
    if rho >= R3 {
        let s = (rho - R3) / BAND;
        mix(&back, 1.0 - s, &up(d), s)
    } else if rho >= R2 {
        let s = (rho - R2) / BAND;
        mix(&inward, 1.0 - s, &back, s)
    } else {
        let s = (rho - R1) / BAND;
        mix(axis, 1.0 - s, &inward, s)
    }
}

/// Straight tube along `dir` through `centre`, evaluated at `x`.
fn straight_tube(x: &[f64], centre: &[f64], dir: Dir) -> Vec<f64> {
    let d = x.len();
    let mut axis = vec![0.0; d];
    axis[dir.axis] = dir.sign();
    let mut offset: Vec<f64> = x.iter().zip(centre).map(|(a, c)| a - c).collect();
    offset[dir.axis] = 0.0;
    let rho = offset.iter().map(|r| r.abs()).fold(0.0, f64::max);
    tube_profile(&axis, &offset, rho)
}

/// Tube turning from `din` to `dout` inside one subcube.
///
/// In the plane of the two directions, positions are measured from the inner
/// corner (between the entry and exit facets) in the max norm; `phi` moves
/// from 0 on the entry facet to 1 on the exit facet and rotates the tube frame.
fn corner_field(x: &[f64], centre: &[f64], din: Dir, dout: Dir) -> Vec<f64> {
    let d = x.len();
    let y: Vec<f64> = x.iter().zip(centre).map(|(a, c)| a - c).collect();
    let dp = din.sign() * y[din.axis] + HALF;
    let dq = HALF - dout.sign() * y[dout.axis];
    let reach = dp.max(dq);
    let sigma = HALF - reach;
    let phi = if dp + dq > 0.0 { dp / (dp + dq) } else { 0.0 };
    let m = phi.max(1.0 - phi);

    let mut axis = vec![0.0; d];
    axis[din.axis] = din.sign() * (1.0 - phi) / m;
    axis[dout.axis] = dout.sign() * phi / m;

    let mut offset = y.clone();
    offset[din.axis] = sigma * din.sign() * (-phi) / m;
    offset[dout.axis] = sigma * dout.sign() * (1.0 - phi) / m;

    let rho = y
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != din.axis && i != dout.axis)
        .map(|(_, r)| r.abs())
        .fold(sigma.abs(), f64::max);
    tube_profile(&axis, &offset, rho)
}

/// Zero subcube: boundary values scaled by the max-norm radius.
///
/// The boundary carries the straight tube on the facet shared with the path
/// neighbour (entry for an end, exit for a start) and ambient elsewhere.
fn radial_field(x: &[f64], centre: &[f64], dir: Dir, is_start: bool) -> Vec<f64> {
    let d = x.len();
    let y: Vec<f64> = x.iter().zip(centre).map(|(a, c)| a - c).collect();
    let extent = y.iter().map(|r| r.abs()).fold(0.0, f64::max);
    if extent == 0.0 {
        return vec![0.0; d];
    }
    let t = extent / HALF;
    let z: Vec<f64> = y.iter().map(|r| r * HALF / extent).collect();
    // the open facet lies at +HALF along dout for a start, -HALF along din for an end
    let facet = if is_start { HALF } else { -HALF };
    let boundary = if dir.sign() * z[dir.axis] == facet {
        let zc: Vec<f64> = z.iter().zip(centre).map(|(a, c)| a + c).collect();
        straight_tube(&zc, centre, dir)
    } else {
        up(d)
    };
    boundary.into_iter().map(|v| t * v).collect()
}

/// Field away from occupied tube subcubes: ambient, column and top layer.
fn background_field(x: &[f64], vertical_cell: usize) -> Vec<f64> {
    let d = x.len();
    if vertical_cell <= TUBE_LAYER {
        return up(d);
    }
    let mut offset: Vec<f64> = x.iter().map(|c| c - COLUMN_CENTRE).collect();
    offset[d - 1] = 0.0;
    let rho = offset.iter().map(|r| r.abs()).fold(0.0, f64::max);

    let column = || {
        let mut down = vec![0.0; d];
        down[d - 1] = -1.0;
        tube_profile(&down, &offset, rho)
    };
    let top = || {
        let mut v = vec![0.0; d];
        if rho < R1 {
            v[d - 1] = -1.0;
            return v;
        }
        let s = if rho >= R2 { 1.0 } else { (rho - R1) / BAND };
        for (vi, r) in v.iter_mut().zip(&offset) {
            *vi = -s * r / rho;
        }
        v[d - 1] = -(1.0 - s);
        v
    };

    let height = x[d - 1];
    let blend_lo = BLEND_LAYER as f64 * CELL;
    let blend_hi = TOP_LAYER as f64 * CELL;
    if height <= blend_lo {
        column()
    } else if height >= blend_hi {
        top()
    } else {
        let tau = (height - blend_lo) / CELL;
        mix(&column(), 1.0 - tau, &top(), tau)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(inst: &EolInstance) -> HpvField {
        HpvField::build(&inst.normalize().unwrap(), 1 << 24).unwrap()
    }

    fn norm(v: &[f64]) -> f64 {
        v.iter().map(|x| x.abs()).fold(0.0, f64::max)
    }

    #[test]
    fn cell_index_ties_go_low() {
        assert_eq!(cell_index(0.0), 0);
        assert_eq!(cell_index(0.125), 0);
        assert_eq!(cell_index(0.1250001), 1);
        assert_eq!(cell_index(1.0), 7);
        assert_eq!(cell_index(0.99), 7);
    }

    #[test]
    fn roles_of_single_edge_instance() {
        let f = field(&EolInstance::gen_line_instance(1, &[0, 1]).unwrap());
        // walk: 0|0|0 -> 0|1|0 -> 0|1|1 -> 1|1|1 -> 1|1|0
        let home = f.role(PathVertex::ORIGIN);
        assert!(matches!(home, CellRole::Corner { home: true, dout: Dir { axis: 1, positive: true }, .. }));
        assert!(matches!(
            f.role(PathVertex::new(1, 1, false)),
            CellRole::End { din: Dir { axis: 2, positive: false } }
        ));
        assert_eq!(f.zero_cells().len(), 1);
        assert_eq!(f.zero_cells()[0].0, vec![4, 4, 3, 1]);
    }

    #[test]
    fn corner_matches_straight_tube_on_entry_and_exit_facets() {
        let centre = [0.4375, 0.5625, 0.4375, 0.1875];
        let din = Dir { axis: 0, positive: true };
        let dout = Dir { axis: 2, positive: false };
        for &(a, b) in &[(0.01, -0.02), (-0.03, 0.005), (0.0, 0.0), (0.05, 0.06)] {
            // entry facet: x_0 = centre - HALF
            let x = [centre[0] - HALF, centre[1] + a, centre[2] + b, centre[3] + a / 2.0];
            assert_eq!(corner_field(&x, &centre, din, dout), straight_tube(&x, &centre, din));
            // exit facet: x_2 = centre - HALF
            let x = [centre[0] + b, centre[1] + a, centre[2] - HALF, centre[3] - a / 3.0];
            assert_eq!(corner_field(&x, &centre, din, dout), straight_tube(&x, &centre, dout));
        }
    }

    #[test]
    fn radial_zero_at_centre_and_continuous_at_entry() {
        let centre = [0.5625, 0.4375, 0.5625, 0.1875];
        let din = Dir { axis: 1, positive: false };
        assert_eq!(radial_field(&centre, &centre, din, false), vec![0.0; 4]);
        let x = [centre[0] + 0.01, centre[1] + HALF, centre[2] - 0.02, centre[3]];
        assert_eq!(radial_field(&x, &centre, din, false), straight_tube(&x, &centre, din));
        let x = [centre[0] + 0.01, centre[1] - HALF, centre[2] - 0.02, centre[3]];
        assert_eq!(radial_field(&x, &centre, din, false), up(4));
    }

    #[test]
    fn ambient_and_top_layer() {
        let f = field(&EolInstance::gen_line_instance(1, &[0, 1]).unwrap());
        assert_eq!(f.unit_field(&[0.1, 0.9, 0.3, 0.4]), vec![0.0, 0.0, 0.0, 1.0]);
        let top = f.unit_field(&[0.9, 0.5, 0.4375, 0.95]);
        assert_eq!(top[3], 0.0);
        assert!(top[0] < 0.0);
        assert_eq!(norm(&top), 1.0);
        assert_eq!(f.unit_field(&[0.4375, 0.4375, 0.4375, 0.99]), vec![0.0, 0.0, 0.0, -1.0]);
    }

    #[test]
    fn home_is_fed_by_column() {
        let f = field(&EolInstance::gen_line_instance(1, &[0, 1]).unwrap());
        let on_facet = [0.4375 + 0.02, 0.4375 - 0.01, 0.4375 + 0.005, 0.25];
        let above = [0.4375 + 0.02, 0.4375 - 0.01, 0.4375 + 0.005, 0.25 + 1e-12];
        let a = f.unit_field(&on_facet);
        let b = f.unit_field(&above);
        assert!(a.iter().zip(&b).all(|(p, q)| (p - q).abs() < 1e-9), "{a:?} vs {b:?}");
        assert!(norm(&f.unit_field(&[0.4375; 4])) >= 1.0 / 3.0);
    }
}
