//! Continuous self-maps of the unit cube: the path-embedding map and toy maps.

pub mod hpv;

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::embed::PathVertex;
use crate::end_of_line::EolInstance;
use crate::error::{Error, Result};

pub use hpv::{HpvField, CELL, DELTA};

/// A point of `[0,1]^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Point(pub Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point(coords)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn dist_inf(&self, other: &Point) -> f64 {
        sup_dist(&self.0, &other.0)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{}", format_coord(*c))?;
        }
        Ok(())
    }
}

/// Decimal with 17 significant digits (round-trips any `f64`).
pub fn format_coord(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn sup_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

pub fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegionKind {
    AmbientDefault,
    SliceFree,
    TubeSegment,
    TubeCorner,
    EndSubcube,
    ExtraStartSubcube,
    HomeSubcube,
    TopLayer,
    ColumnSheath,
    ColumnCore,
    BlendZone,
}

impl RegionKind {
    pub fn name(self) -> &'static str {
        match self {
            RegionKind::AmbientDefault => "ambient-default",
            RegionKind::SliceFree => "slice-free",
            RegionKind::TubeSegment => "tube-segment",
            RegionKind::TubeCorner => "tube-corner",
            RegionKind::EndSubcube => "end-subcube",
            RegionKind::ExtraStartSubcube => "extra-start-subcube",
            RegionKind::HomeSubcube => "home-subcube",
            RegionKind::TopLayer => "top-layer",
            RegionKind::ColumnSheath => "column-sheath",
            RegionKind::ColumnCore => "column-core",
            RegionKind::BlendZone => "blend-zone",
        }
    }
}

impl fmt::Display for RegionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionDescriptor {
    pub kind: RegionKind,
    /// Cell index per axis (8 cells of side 1/8).
    pub cell: Vec<usize>,
    /// Embedded path vertex owning the cell, for tube-layer subcubes.
    pub vertex: Option<PathVertex>,
}

/// Closed subcube of side `h` in which the displacement may vanish.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZeroRegion {
    pub cell: Vec<usize>,
    pub vertex: PathVertex,
}

impl ZeroRegion {
    pub fn lo(&self) -> Vec<f64> {
        self.cell.iter().map(|&c| c as f64 * CELL).collect()
    }

    pub fn hi(&self) -> Vec<f64> {
        self.cell.iter().map(|&c| (c + 1) as f64 * CELL).collect()
    }

    pub fn centre(&self) -> Point {
        Point(self.cell.iter().map(|&c| hpv::cell_centre(c)).collect())
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(&self.cell)
            .all(|(&v, &c)| v >= c as f64 * CELL && v <= (c + 1) as f64 * CELL)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ToySpec {
    Identity { d: usize },
    Constant { c: Vec<f64> },
    /// `x ↦ A x + b`, rows of `A` given in order.
    Affine { a: Vec<Vec<f64>>, b: Vec<f64> },
    /// `x ↦ 1 − x` coordinatewise.
    Reversal { d: usize },
}

impl ToySpec {
    pub fn dim(&self) -> usize {
        match self {
            ToySpec::Identity { d } | ToySpec::Reversal { d } => *d,
            ToySpec::Constant { c } => c.len(),
            ToySpec::Affine { b, .. } => b.len(),
        }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        match self {
            ToySpec::Identity { .. } => x.to_vec(),
            ToySpec::Constant { c } => c.clone(),
            ToySpec::Affine { a, b } => a
                .iter()
                .zip(b)
                .map(|(row, bi)| row.iter().zip(x).map(|(aij, xj)| aij * xj).sum::<f64>() + bi)
                .collect(),
            ToySpec::Reversal { .. } => x.iter().map(|v| 1.0 - v).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub enum MapKind {
    Hpv(Box<HpvField>),
    Toy(ToySpec),
}

/// A continuous self-map `f` of `[0,1]^d` together with its declared constants.
#[derive(Debug, Clone)]
pub struct BrouwerMap {
    d: usize,
    /// Declared Lipschitz bound of `f` (max norm).
    lipschitz_bound: f64,
    /// Declared Lipschitz bound of `g = f − x`.
    displacement_lipschitz: f64,
    /// Bound on `‖g‖∞` everywhere.
    delta: f64,
    /// `‖g‖∞ ≥ displacement_floor` outside `zero_regions`.
    displacement_floor: f64,
    zero_regions: Vec<ZeroRegion>,
    kind: MapKind,
}

/// Default cap on the number of embedded vertices tabulated by `build_hpv_map`.
pub const HPV_VERTEX_LIMIT: u64 = 1 << 24;

pub fn build_hpv_map(inst: &EolInstance) -> Result<BrouwerMap> {
    let field = HpvField::build(inst, HPV_VERTEX_LIMIT)?;
    let zero_regions = field
        .zero_cells()
        .into_iter()
        .map(|(cell, vertex)| ZeroRegion { cell, vertex })
        .collect();
    Ok(BrouwerMap {
        d: field.dim(),
        lipschitz_bound: 1.0 + hpv::DISPLACEMENT_LIPSCHITZ,
        displacement_lipschitz: hpv::DISPLACEMENT_LIPSCHITZ,
        delta: DELTA,
        displacement_floor: hpv::DISPLACEMENT_FLOOR,
        zero_regions,
        kind: MapKind::Hpv(Box::new(field)),
    })
}

pub fn make_toy_map(spec: ToySpec) -> Result<BrouwerMap> {
    let d = spec.dim();
    if d == 0 {
        return Err(Error::InvalidInstance("toy map of dimension 0".into()));
    }
    let (lip, glip, delta) = match &spec {
        ToySpec::Identity { .. } => (1.0, 0.0, 0.0),
        ToySpec::Reversal { .. } => (1.0, 2.0, 1.0),
        ToySpec::Constant { c } => {
            if c.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::InvalidInstance("constant outside the unit cube".into()));
            }
            let far = c.iter().map(|v| v.max(1.0 - v)).fold(0.0, f64::max);
            (0.0, 1.0, far)
        }
        ToySpec::Affine { a, b } => {
            if a.len() != d || a.iter().any(|row| row.len() != d) {
                return Err(Error::InvalidInstance("affine matrix shape mismatch".into()));
            }
            let mut lip: f64 = 0.0;
            let mut glip: f64 = 0.0;
            let mut delta: f64 = 0.0;
            for (i, (row, bi)) in a.iter().zip(b).enumerate() {
                let pos: f64 = row.iter().filter(|v| **v > 0.0).sum();
                let neg: f64 = row.iter().filter(|v| **v < 0.0).sum();
                if bi + neg < 0.0 || bi + pos > 1.0 {
                    return Err(Error::InvalidInstance(format!(
                        "affine map leaves the cube in coordinate {i}"
                    )));
                }
                lip = lip.max(pos - neg);
                let shifted: Vec<f64> = row
                    .iter()
                    .enumerate()
                    .map(|(j, v)| if i == j { v - 1.0 } else { *v })
                    .collect();
                let gpos: f64 = shifted.iter().filter(|v| **v > 0.0).sum();
                let gneg: f64 = shifted.iter().filter(|v| **v < 0.0).sum();
                glip = glip.max(gpos - gneg);
                delta = delta.max((bi + gpos).abs()).max((bi + gneg).abs());
            }
            (lip, glip, delta)
        }
    };
    Ok(BrouwerMap {
        d,
        lipschitz_bound: lip,
        displacement_lipschitz: glip,
        delta,
        displacement_floor: 0.0,
        zero_regions: Vec::new(),
        kind: MapKind::Toy(spec),
    })
}

impl BrouwerMap {
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn lipschitz_bound(&self) -> f64 {
        self.lipschitz_bound
    }

    pub fn displacement_lipschitz(&self) -> f64 {
        self.displacement_lipschitz
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn displacement_floor(&self) -> f64 {
        self.displacement_floor
    }

    pub fn zero_regions(&self) -> &[ZeroRegion] {
        &self.zero_regions
    }

    pub fn kind(&self) -> &MapKind {
        &self.kind
    }

    pub fn hpv(&self) -> Option<&HpvField> {
        match &self.kind {
            MapKind::Hpv(f) => Some(f),
            MapKind::Toy(_) => None,
        }
    }

    pub fn toy(&self) -> Option<&ToySpec> {
        match &self.kind {
            MapKind::Toy(t) => Some(t),
            MapKind::Hpv(_) => None,
        }
    }

    /// Override the declared Lipschitz bound of `f` with a weaker one.
    pub fn with_lipschitz_bound(mut self, m: f64) -> Result<Self> {
        if m.is_nan() || m < self.lipschitz_bound {
            return Err(Error::OutOfRange(format!(
                "declared bound {m} is below the map's bound {}",
                self.lipschitz_bound
            )));
        }
        self.lipschitz_bound = m;
        Ok(self)
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.d {
            return Err(Error::WidthMismatch {
                expected: self.d,
                got: x.len(),
            });
        }
        if let Some(c) = x.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::OutOfRange(format!("coordinate {c} outside [0,1]")));
        }
        Ok(())
    }

    /// `g(x) = f(x) − x` before clamping.
    pub fn displacement(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        Ok(self.displacement_unchecked(x))
    }

    pub(crate) fn displacement_unchecked(&self, x: &[f64]) -> Vec<f64> {
        match &self.kind {
            MapKind::Hpv(field) => field.unit_field(x).into_iter().map(|v| DELTA * v).collect(),
            MapKind::Toy(spec) => spec.apply(x).iter().zip(x).map(|(f, x)| f - x).collect(),
        }
    }

    /// `f(x)`, clamped into the cube.
    pub fn evaluate(&self, x: &Point) -> Result<Point> {
        self.check(&x.0)?;
        Ok(Point(self.evaluate_unchecked(&x.0)))
    }

    pub(crate) fn evaluate_unchecked(&self, x: &[f64]) -> Vec<f64> {
        match &self.kind {
            MapKind::Toy(spec) => spec.apply(x).into_iter().map(|v| v.clamp(0.0, 1.0)).collect(),
            MapKind::Hpv(_) => self
                .displacement_unchecked(x)
                .iter()
                .zip(x)
                .map(|(g, x)| (x + g).clamp(0.0, 1.0))
                .collect(),
        }
    }

    pub fn classify_point(&self, x: &[f64]) -> Result<RegionDescriptor> {
        self.check(x)?;
        let cell: Vec<usize> = x.iter().map(|&c| hpv::cell_index(c)).collect();
        Ok(match &self.kind {
            MapKind::Hpv(field) => field.classify(x),
            MapKind::Toy(_) => RegionDescriptor {
                kind: RegionKind::AmbientDefault,
                cell,
                vertex: None,
            },
        })
    }

    pub fn in_zero_region(&self, x: &[f64]) -> bool {
        self.zero_regions.iter().any(|z| z.contains(x))
    }
}

const CHUNK: usize = 4096;

fn sampled_max<F>(count: usize, seed: u64, draw: F) -> f64
where
    F: Fn(&mut ChaCha8Rng) -> Option<f64> + Sync,
{
    let chunks = count.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let len = CHUNK.min(count - c * CHUNK);
            (0..len).filter_map(|_| draw(&mut rng)).fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

fn ratio(map: &BrouwerMap, x: &[f64], y: &[f64]) -> Option<f64> {
    let dx = sup_dist(x, y);
    if dx == 0.0 {
        return None;
    }
    let gx = map.displacement_unchecked(x);
    let gy = map.displacement_unchecked(y);
    Some(sup_dist(&gx, &gy) / dx)
}

/// Largest `‖g(x)−g(y)‖∞/‖x−y‖∞` over random pairs with `‖x−y‖∞ ≤ pair_scale`.
pub fn lipschitz_estimate(map: &BrouwerMap, sample_count: usize, pair_scale: f64, rng_seed: u64) -> f64 {
    let d = map.dim();
    sampled_max(sample_count, rng_seed, |rng| {
        let x: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|v| (v + pair_scale * rng.gen_range(-1.0..=1.0)).clamp(0.0, 1.0))
            .collect();
        ratio(map, &x, &y)
    })
}

/// Like [`lipschitz_estimate`], but every pair straddles a cell facet
/// (a multiple of 1/8 on a random axis).
pub fn lipschitz_estimate_straddling(
    map: &BrouwerMap,
    sample_count: usize,
    pair_scale: f64,
    rng_seed: u64,
) -> f64 {
    let d = map.dim();
    sampled_max(sample_count, rng_seed, |rng| {
        let mut x: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
        let mut y: Vec<f64> = x
            .iter()
            .map(|v| (v + pair_scale * rng.gen_range(-1.0..=1.0)).clamp(0.0, 1.0))
            .collect();
        let axis = rng.gen_range(0..d);
        let facet = rng.gen_range(1..hpv::CELLS) as f64 * CELL;
        x[axis] = facet - pair_scale * rng.gen::<f64>();
        y[axis] = facet + pair_scale * rng.gen::<f64>();
        ratio(map, &x, &y)
    })
}
