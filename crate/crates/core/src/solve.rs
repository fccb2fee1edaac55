//! Brute-force oracles: grid fixed-point search, pure equilibria, round trip.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;

use crate::brouwer::{build_hpv_map, format_coord, hpv, sup_dist, sup_norm, BrouwerMap, Point};
use crate::embed::{enumerate_all_paths, local_info, PathVertex};
use crate::end_of_line::{format_word, EolInstance, EolSolution, SolutionKind, DEFAULT_LIMIT};
use crate::error::{Error, Result};
use crate::imitation::MixedProfile;
use crate::verify::{verify_wsne, Game, Mode};

/// Default cap on map evaluations / enumerated profiles.
pub const DEFAULT_BUDGET: u128 = 100_000_000;

/// Axis-aligned box of grid points `i/m`, index ranges inclusive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid {
    pub m: u64,
    pub lo: Vec<u64>,
    pub hi: Vec<u64>,
}

impl Grid {
    /// All of `{0, 1/m, …, 1}^d`.
    pub fn full(d: usize, m: u64) -> Self {
        Grid {
            m,
            lo: vec![0; d],
            hi: vec![m; d],
        }
    }

    /// Grid over `[lo_i, hi_i]`, which must be multiples of `1/m`.
    pub fn window(m: u64, lo: &[f64], hi: &[f64]) -> Result<Self> {
        let to_index = |x: f64| -> Result<u64> {
            let s = x * m as f64;
            if s.fract() != 0.0 || !(0.0..=m as f64).contains(&s) {
                return Err(Error::OutOfRange(format!("{x} is not on the 1/{m} grid")));
            }
            Ok(s as u64)
        };
        Ok(Grid {
            m,
            lo: lo.iter().map(|&x| to_index(x)).collect::<Result<_>>()?,
            hi: hi.iter().map(|&x| to_index(x)).collect::<Result<_>>()?,
        })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn count(&self) -> u128 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| (h + 1).saturating_sub(*l) as u128)
            .product()
    }

    /// Point with the given linear index; the last axis varies fastest, so
    /// increasing indices are in lexicographic order.
    pub fn point(&self, mut index: u64) -> Vec<f64> {
        let d = self.dim();
        let mut x = vec![0.0; d];
        for i in (0..d).rev() {
            let len = self.hi[i] - self.lo[i] + 1;
            x[i] = (self.lo[i] + index % len) as f64 / self.m as f64;
            index /= len;
        }
        x
    }

    fn check(&self, budget: u128) -> Result<u64> {
        let needed = self.count();
        if needed > budget {
            return Err(Error::BudgetExceeded { needed, budget });
        }
        Ok(needed as u64)
    }

    /// Grid points satisfying `keep`, in lexicographic order.
    pub fn scan<F>(&self, budget: u128, keep: F) -> Result<Vec<Vec<f64>>>
    where
        F: Fn(&[f64]) -> bool + Sync,
    {
        let count = self.check(budget)?;
        Ok((0..count)
            .into_par_iter()
            .filter_map(|i| {
                let x = self.point(i);
                keep(&x).then_some(x)
            })
            .collect())
    }
}

/// Grid points with `‖f(x) − x‖∞ ≤ eps`.
pub fn find_fixed_points_grid(map: &BrouwerMap, grid: &Grid, eps: f64, budget: u128) -> Result<Vec<Point>> {
    if grid.dim() != map.dim() {
        return Err(Error::WidthMismatch {
            expected: map.dim(),
            got: grid.dim(),
        });
    }
    let hits = grid.scan(budget, |x| sup_dist(&map.evaluate_unchecked(x), x) <= eps)?;
    Ok(hits.into_iter().map(Point).collect())
}

/// Grid points with `‖g(x)‖∞ < threshold`.
pub fn low_displacement_points(map: &BrouwerMap, grid: &Grid, threshold: f64, budget: u128) -> Result<Vec<Point>> {
    if grid.dim() != map.dim() {
        return Err(Error::WidthMismatch {
            expected: map.dim(),
            got: grid.dim(),
        });
    }
    let hits = grid.scan(budget, |x| sup_norm(&map.displacement_unchecked(x)) < threshold)?;
    Ok(hits.into_iter().map(Point).collect())
}

/// Every pure profile that is an `eps`-well-supported equilibrium.
pub fn find_pure_nash<G: Game + ?Sized>(game: &G, eps: f64, budget: u128) -> Result<Vec<Vec<usize>>> {
    let n = game.num_players();
    let sizes: Vec<u64> = (0..n).map(|p| game.num_actions(p) as u64).collect();
    let needed: u128 = sizes.iter().map(|&s| s as u128).product();
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let mode = Mode::Exact { budget: 1 };
    let found: Vec<Option<Vec<usize>>> = (0..needed as u64)
        .into_par_iter()
        .map(|mut index| -> Result<Option<Vec<usize>>> {
            let mut actions = vec![0usize; n];
            for p in (0..n).rev() {
                actions[p] = (index % sizes[p]) as usize;
                index /= sizes[p];
            }
            let report = verify_wsne(game, &MixedProfile::pure(&actions), eps, &mode)?;
            Ok(report.verdict.then_some(actions))
        })
        .collect::<Result<_>>()?;
    Ok(found.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundTripParams {
    /// Grid step is `1/step_den`; `None` picks the finest of 1/64, 1/32, 1/16
    /// whose grid fits the budget, preferring the full cube over the slice window.
    pub step_den: Option<u64>,
    /// Restrict the search to the tube-layer slice around the embedded cube.
    pub window: Option<bool>,
    /// Residual threshold; `None` means half the map's displacement floor.
    pub eps: Option<f64>,
    pub budget: u128,
}

impl Default for RoundTripParams {
    fn default() -> Self {
        RoundTripParams {
            step_den: None,
            window: None,
            eps: None,
            budget: DEFAULT_BUDGET,
        }
    }
}

/// Grid points that fell into one cell of side 1/8.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub cell: Vec<usize>,
    pub count: usize,
    /// Point with the smallest residual (first in lexicographic order on ties).
    pub best: Point,
    pub residual: f64,
    pub vertex: Option<PathVertex>,
    pub solution: Option<EolSolution>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundTripReport {
    pub n: usize,
    pub step_den: u64,
    pub window: bool,
    pub eps: f64,
    pub evaluated: u128,
    pub paths: usize,
    pub clusters: Vec<Cluster>,
    pub expected: Vec<EolSolution>,
    pub decoded: Vec<EolSolution>,
    pub missing: Vec<EolSolution>,
    pub extra: Vec<EolSolution>,
    pub anomalies: usize,
}

impl RoundTripReport {
    pub fn agrees(&self) -> bool {
        self.missing.is_empty() && self.extra.is_empty() && self.anomalies == 0
    }
}

impl fmt::Display for RoundTripReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.n;
        let region = if self.window { "slice" } else { "cube" };
        writeln!(f, "roundtrip n {n} step 1/{} {region} eps {}", self.step_den, format_coord(self.eps))?;
        writeln!(f, "evaluated {} paths {}", self.evaluated, self.paths)?;
        for c in &self.clusters {
            let cell: Vec<String> = c.cell.iter().map(|v| v.to_string()).collect();
            write!(
                f,
                "cluster cell {} points {} best {} residual {}",
                cell.join(","),
                c.count,
                c.best,
                format_coord(c.residual)
            )?;
            match (&c.vertex, &c.solution) {
                (Some(v), Some(s)) => writeln!(f, " vertex {} solution {} {}", v.display(n), format_word(s.x, n), s.kind)?,
                (Some(v), None) => writeln!(f, " vertex {} anomaly", v.display(n))?,
                _ => writeln!(f, " anomaly")?,
            }
        }
        let list = |v: &[EolSolution]| -> String {
            let parts: Vec<String> = v.iter().map(|s| format!("{}:{}", format_word(s.x, n), s.kind)).collect();
            if parts.is_empty() {
                "-".into()
            } else {
                parts.join(" ")
            }
        };
        writeln!(f, "expected {}", list(&self.expected))?;
        writeln!(f, "decoded {}", list(&self.decoded))?;
        writeln!(f, "missing {}", list(&self.missing))?;
        writeln!(f, "extra {}", list(&self.extra))?;
        writeln!(f, "anomalies {}", self.anomalies)?;
        writeln!(f, "agree {}", self.agrees())
    }
}

/// Points of `[3h, 5h]^(2n+1) × [h, 2h]`, the only cells holding embedded vertices.
pub fn slice_window(d: usize, m: u64) -> Result<Grid> {
    let mut lo = vec![3.0 * hpv::CELL; d];
    let mut hi = vec![5.0 * hpv::CELL; d];
    lo[d - 1] = hpv::CELL;
    hi[d - 1] = 2.0 * hpv::CELL;
    Grid::window(m, &lo, &hi)
}

fn pick_grid(d: usize, step: Option<u64>, window: Option<bool>, budget: u128) -> Result<(Grid, bool)> {
    let steps: Vec<u64> = match step {
        Some(m) => vec![m],
        None => vec![64, 32, 16],
    };
    let modes: Vec<bool> = match window {
        Some(w) => vec![w],
        None => vec![false, true],
    };
    let mut smallest = None;
    for &w in &modes {
        for &m in &steps {
            let grid = if w { slice_window(d, m)? } else { Grid::full(d, m) };
            if grid.count() <= budget {
                return Ok((grid, w));
            }
            smallest = Some(smallest.map_or(grid.count(), |c: u128| c.min(grid.count())));
        }
    }
    Err(Error::BudgetExceeded {
        needed: smallest.unwrap_or(u128::MAX),
        budget,
    })
}

/// Decode a tube-layer vertex to the instance solution it represents.
fn decode(inst: &EolInstance, p: PathVertex) -> Result<Option<EolSolution>> {
    let info = local_info(inst, p)?;
    if !info.on_path || p.b || p.u != p.v || p == PathVertex::ORIGIN {
        return Ok(None);
    }
    let kind = if info.is_end {
        SolutionKind::EndOfLine
    } else if info.is_start {
        SolutionKind::StartOfLine
    } else {
        return Ok(None);
    };
    Ok(Some(EolSolution { x: p.u, kind }))
}

/// Instance → paths → map → grid search → decoded solutions, compared with
/// brute force on the instance.
pub fn roundtrip(inst: &EolInstance, params: &RoundTripParams) -> Result<RoundTripReport> {
    let n = inst.n();
    let expected = inst.solve_bruteforce(DEFAULT_LIMIT)?;
    let normalized = inst.normalize()?;
    let paths = enumerate_all_paths(&normalized, DEFAULT_LIMIT)?;
    let map = build_hpv_map(&normalized)?;
    let d = map.dim();
    let (grid, window) = pick_grid(d, params.step_den, params.window, params.budget)?;
    let eps = params.eps.unwrap_or(map.displacement_floor() / 2.0);
    let hits = find_fixed_points_grid(&map, &grid, eps, params.budget)?;

    let field = map.hpv().expect("built from an instance");
    let mut by_cell: BTreeMap<Vec<usize>, Vec<(f64, Point)>> = BTreeMap::new();
    for p in hits {
        let cell: Vec<usize> = p.coords().iter().map(|&c| hpv::cell_index(c)).collect();
        let r = sup_dist(&map.evaluate_unchecked(p.coords()), p.coords());
        by_cell.entry(cell).or_default().push((r, p));
    }
    let mut clusters = Vec::new();
    let mut decoded = Vec::new();
    let mut anomalies = 0;
    for (cell, pts) in by_cell {
        let (residual, best) = pts
            .iter()
            .fold(None::<&(f64, Point)>, |acc, x| match acc {
                Some(a) if a.0 <= x.0 => Some(a),
                _ => Some(x),
            })
            .cloned()
            .expect("non-empty cluster");
        let vertex = field.cell_vertex(&cell);
        let solution = match vertex {
            Some(v) => decode(&normalized, v)?,
            None => None,
        };
        match solution {
            Some(s) => decoded.push(s),
            None => anomalies += 1,
        }
        clusters.push(Cluster {
            cell,
            count: pts.len(),
            best,
            residual,
            vertex,
            solution,
        });
    }
    decoded.sort();
    decoded.dedup();
    let missing = expected.iter().filter(|s| !decoded.contains(s)).cloned().collect();
    let extra = decoded.iter().filter(|s| !expected.contains(s)).cloned().collect();
    Ok(RoundTripReport {
        n,
        step_den: grid.m,
        window,
        eps,
        evaluated: grid.count(),
        paths: paths.paths.len(),
        clusters,
        expected,
        decoded,
        missing,
        extra,
        anomalies,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brouwer::{make_toy_map, ToySpec};
    use crate::exact::ratio;
    use crate::imitation::ImitationGame;

    #[test]
    fn grid_order_and_count() {
        let g = Grid::full(2, 2);
        assert_eq!(g.count(), 9);
        assert_eq!(g.point(0), vec![0.0, 0.0]);
        assert_eq!(g.point(1), vec![0.0, 0.5]);
        assert_eq!(g.point(8), vec![1.0, 1.0]);
        let w = Grid::window(8, &[0.25, 0.5], &[0.5, 0.5]).unwrap();
        assert_eq!(w.count(), 3);
        assert_eq!(w.point(2), vec![0.5, 0.5]);
        assert!(Grid::window(8, &[0.3], &[0.5]).is_err());
    }

    #[test]
    fn reversal_fixed_points() {
        let m = make_toy_map(ToySpec::Reversal { d: 1 }).unwrap();
        let pts = find_fixed_points_grid(&m, &Grid::full(1, 64), 0.02, DEFAULT_BUDGET).unwrap();
        assert!(!pts.is_empty());
        assert!(pts.iter().all(|p| (p.coords()[0] - 0.5).abs() <= 0.01));
        assert!(pts.contains(&Point(vec![0.5])));
    }

    #[test]
    fn constant_fixed_points() {
        let m = make_toy_map(ToySpec::Constant { c: vec![0.3, 0.7] }).unwrap();
        let pts = find_fixed_points_grid(&m, &Grid::full(2, 32), 1.0 / 64.0, DEFAULT_BUDGET).unwrap();
        // nearest grid values: 10/32 = 0.3125, 22/32 = 0.6875
        assert_eq!(pts, vec![Point(vec![0.3125, 0.6875])]);
    }

    #[test]
    fn grid_budget() {
        let m = make_toy_map(ToySpec::Identity { d: 4 }).unwrap();
        assert!(matches!(
            find_fixed_points_grid(&m, &Grid::full(4, 64), 0.0, 1000),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn pure_nash_constant_and_reversal() {
        let g = ImitationGame::build(make_toy_map(ToySpec::Constant { c: vec![0.3] }).unwrap(), &ratio(3, 10)).unwrap();
        assert_eq!(g.k(), 10);
        let ne = find_pure_nash(&g, g.wsne_tolerance_f64(), DEFAULT_BUDGET).unwrap();
        assert!(ne.contains(&vec![3, 3]));

        let g = ImitationGame::build(make_toy_map(ToySpec::Reversal { d: 1 }).unwrap(), &ratio(2, 5)).unwrap();
        let ne = find_pure_nash(&g, g.wsne_tolerance_f64(), DEFAULT_BUDGET).unwrap();
        assert_eq!(ne, vec![vec![5, 5]]);
    }

    #[test]
    fn roundtrip_single_edge() {
        let inst = EolInstance::gen_line_instance(1, &[0, 1]).unwrap();
        let r = roundtrip(&inst, &RoundTripParams::default()).unwrap();
        assert_eq!((r.step_den, r.window), (64, false));
        assert!(r.agrees(), "{r}");
        assert_eq!(r.decoded, vec![EolSolution { x: 1, kind: SolutionKind::EndOfLine }]);
        assert_eq!(r.clusters.len(), 1);
    }

    #[test]
    fn roundtrip_falls_back_to_the_slice() {
        // two lines at n = 3: the full cube is out of budget at every step
        let inst = EolInstance::from_lines(3, &[vec![0, 1, 3], vec![4, 6, 7, 5]], &[]).unwrap();
        let params = RoundTripParams {
            step_den: Some(16),
            ..RoundTripParams::default()
        };
        let r = roundtrip(&inst, &params).unwrap();
        assert!(r.window);
        assert!(r.agrees(), "{r}");
        assert_eq!(r.decoded.len(), 3);
    }

    #[test]
    fn roundtrip_budget() {
        let inst = EolInstance::gen_line_instance(1, &[0, 1]).unwrap();
        let params = RoundTripParams {
            budget: 10,
            ..RoundTripParams::default()
        };
        assert!(matches!(roundtrip(&inst, &params), Err(Error::BudgetExceeded { .. })));
    }
}
