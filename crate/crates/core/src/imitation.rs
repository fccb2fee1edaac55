//! Imitation game over a Brouwer map and extraction of approximate fixed points.
//!
//! Players `0..d` form the first group and choose `a_i ∈ {0, 1/k, …, 1}`;
//! players `d..2d` form the second group and choose `b_i`. Payoffs are
//! `u_i = −(a_i − b_i)²` and `v_i = −(f_i(a) − b_i)²`, so they lie in `[−1, 0]`.

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::brouwer::{BrouwerMap, Point};
use crate::error::{Error, Result};
use crate::exact::{self, CompensatedSum, Rational};
use crate::verify::{self, Game, Mode};

/// Largest grid resolution accepted by [`ImitationGame::build`].
pub const MAX_K: u64 = 1_000_000;

/// Mixed strategies: per player, `(action, probability)` sorted by action.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MixedProfile {
    players: Vec<Vec<(usize, Rational)>>,
}

impl MixedProfile {
    pub fn new(mut players: Vec<Vec<(usize, Rational)>>) -> Result<Self> {
        for (i, support) in players.iter_mut().enumerate() {
            support.sort_by_key(|(a, _)| *a);
            if support.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(Error::Malformed(format!("player {i}: repeated action")));
            }
            if !exact::is_probability_vector(support.iter().map(|(_, p)| p)) {
                return Err(Error::Malformed(format!(
                    "player {i}: probabilities must be positive and sum to 1"
                )));
            }
        }
        Ok(MixedProfile { players })
    }

    pub fn pure(actions: &[usize]) -> Self {
        MixedProfile {
            players: actions.iter().map(|&a| vec![(a, Rational::one())]).collect(),
        }
    }

    pub fn num_players(&self) -> usize {
        self.players.len()
    }

    pub fn support(&self, player: usize) -> &[(usize, Rational)] {
        &self.players[player]
    }

    pub fn is_pure(&self) -> bool {
        self.players.iter().all(|s| s.len() == 1)
    }

    /// Check the profile against a game's shape.
    pub fn check_shape<G: Game + ?Sized>(&self, game: &G) -> Result<()> {
        if self.players.len() != game.num_players() {
            return Err(Error::WidthMismatch {
                expected: game.num_players(),
                got: self.players.len(),
            });
        }
        for (i, s) in self.players.iter().enumerate() {
            if let Some((a, _)) = s.iter().find(|(a, _)| *a >= game.num_actions(i)) {
                return Err(Error::OutOfRange(format!("player {i}: action {a} out of range")));
            }
        }
        Ok(())
    }

    /// Draw one pure action per player.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<usize> {
        self.players
            .iter()
            .map(|s| {
                if s.len() == 1 {
                    return s[0].0;
                }
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for (a, p) in s {
                    acc += exact::to_f64(p);
                    if u < acc {
                        return *a;
                    }
                }
                s[s.len() - 1].0
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct ImitationGame {
    map: BrouwerMap,
    k: u64,
    eps: Rational,
    lipschitz: Rational,
}

/// `k = ⌈(3 + M)/ε⌉` in exact arithmetic.
pub fn grid_resolution(lipschitz: &Rational, eps: &Rational) -> Result<BigInt> {
    if *eps <= Rational::zero() {
        return Err(Error::OutOfRange("ε must be positive".into()));
    }
    if *lipschitz < Rational::zero() {
        return Err(Error::OutOfRange("Lipschitz bound must be nonnegative".into()));
    }
    Ok(exact::ceil(&((exact::int(3) + lipschitz) / eps)))
}

impl ImitationGame {
    pub fn build(map: BrouwerMap, eps: &Rational) -> Result<Self> {
        let lipschitz = exact::from_f64(map.lipschitz_bound())?;
        let k = grid_resolution(&lipschitz, eps)?;
        let k = match k.to_u64() {
            Some(k) if k <= MAX_K => k,
            _ => {
                return Err(Error::BudgetExceeded {
                    needed: k.to_u128().unwrap_or(u128::MAX),
                    budget: MAX_K as u128,
                })
            }
        };
        Ok(ImitationGame {
            map,
            k,
            eps: eps.clone(),
            lipschitz,
        })
    }

    /// Rebuild with a stored resolution (used when reading game files).
    pub fn with_k(map: BrouwerMap, eps: Rational, k: u64) -> Result<Self> {
        let game = ImitationGame::build(map, &eps)?;
        if game.k != k {
            return Err(Error::Malformed(format!(
                "stored k = {k} but the parameters give k = {}",
                game.k
            )));
        }
        Ok(game)
    }

    pub fn map(&self) -> &BrouwerMap {
        &self.map
    }

    pub fn dim(&self) -> usize {
        self.map.dim()
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn eps(&self) -> &Rational {
        &self.eps
    }

    pub fn lipschitz(&self) -> &Rational {
        &self.lipschitz
    }

    /// The equilibrium tolerance `3/(4k²)`.
    pub fn wsne_tolerance(&self) -> Rational {
        exact::ratio(3, 4) / Rational::from_integer(BigInt::from(self.k) * BigInt::from(self.k))
    }

    pub fn wsne_tolerance_f64(&self) -> f64 {
        exact::to_f64(&self.wsne_tolerance())
    }

    /// `(3 + M)/k`, the fixed-point accuracy guaranteed by extraction.
    pub fn extraction_bound(&self) -> f64 {
        exact::to_f64(&((exact::int(3) + &self.lipschitz) / exact::int(self.k as i64)))
    }

    pub fn grid_value(&self, action: usize) -> f64 {
        action as f64 / self.k as f64
    }

    fn grid_point(&self, actions: &[usize]) -> Vec<f64> {
        actions.iter().map(|&a| self.grid_value(a)).collect()
    }

    fn f_at(&self, a: &[usize]) -> Vec<f64> {
        self.map.evaluate_unchecked(&self.grid_point(a))
    }

    fn check_actions(&self, actions: &[usize]) -> Result<()> {
        if actions.len() != 2 * self.dim() {
            return Err(Error::WidthMismatch {
                expected: 2 * self.dim(),
                got: actions.len(),
            });
        }
        if let Some(a) = actions.iter().find(|&&a| a as u64 > self.k) {
            return Err(Error::OutOfRange(format!("action {a} exceeds k = {}", self.k)));
        }
        Ok(())
    }

    pub fn checked_payoff(&self, player: usize, actions: &[usize]) -> Result<f64> {
        self.check_actions(actions)?;
        if player >= 2 * self.dim() {
            return Err(Error::OutOfRange(format!("player {player}")));
        }
        Ok(self.payoff(player, actions))
    }

    /// Mean and variance of a player's grid value under the profile.
    fn marginal_moments(&self, profile: &MixedProfile, player: usize) -> (f64, f64) {
        let s = profile.support(player);
        moments(s.iter().map(|(a, p)| (exact::to_f64(p), self.grid_value(*a))))
    }

    /// Exact expectation `E(b_i)` of a second-group player's grid value.
    pub fn exact_mean(&self, profile: &MixedProfile, player: usize) -> Rational {
        let k = exact::int(self.k as i64);
        profile
            .support(player)
            .iter()
            .map(|(a, p)| p * exact::int(*a as i64) / &k)
            .fold(Rational::zero(), |acc, x| acc + x)
    }

    /// `(probability, f(a))` over the first group's support product.
    fn image_distribution(&self, profile: &MixedProfile, budget: u128) -> Result<Vec<(f64, Vec<f64>)>> {
        let d = self.dim();
        let needed: u128 = (0..d).map(|i| profile.support(i).len() as u128).product();
        if needed > budget {
            return Err(Error::BudgetExceeded { needed, budget });
        }
        let mut out = Vec::with_capacity(needed as usize);
        let mut idx = vec![0usize; d];
        loop {
            let mut prob = Rational::one();
            let mut a = Vec::with_capacity(d);
            for (i, &j) in idx.iter().enumerate() {
                let (act, p) = &profile.support(i)[j];
                prob *= p;
                a.push(*act);
            }
            out.push((exact::to_f64(&prob), self.f_at(&a)));
            let mut i = 0;
            loop {
                if i == d {
                    return Ok(out);
                }
                idx[i] += 1;
                if idx[i] < profile.support(i).len() {
                    break;
                }
                idx[i] = 0;
                i += 1;
            }
        }
    }

    /// Lower grid value `⌊k·y⌋/k` as an action index, clamped to the grid.
    fn lower_cell(&self, y: f64) -> usize {
        ((y * self.k as f64).floor().max(0.0) as u64).min(self.k) as usize
    }

    /// Certify `profile` at `3/(4k²)` and read off the approximate fixed point.
    pub fn extract_fixed_point(&self, profile: &MixedProfile, budget: u128) -> Result<Extraction> {
        let tol = self.wsne_tolerance_f64();
        let report = verify::verify_wsne(self, profile, tol, &Mode::Exact { budget })?;
        if !report.verdict {
            return Err(Error::NotCertified(format!(
                "profile is not a {tol:e}-well-supported equilibrium"
            )));
        }
        let d = self.dim();
        let k = exact::int(self.k as i64);
        let alpha_idx: Vec<usize> = (0..d)
            .map(|i| {
                let e = self.exact_mean(profile, d + i);
                exact::floor(&(e * &k)).to_usize().unwrap_or(0).min(self.k as usize)
            })
            .collect();
        let alpha = Point(self.grid_point(&alpha_idx));
        let images = self.image_distribution(profile, budget)?;
        let beta_idx: Vec<usize> = (0..d)
            .map(|i| {
                let (m, _) = moments(images.iter().map(|(p, y)| (*p, y[i])));
                self.lower_cell(m)
            })
            .collect();
        let beta = Point(self.grid_point(&beta_idx));
        let f_alpha = self.map.evaluate_unchecked(alpha.coords());
        let residual = crate::brouwer::sup_dist(&f_alpha, alpha.coords());
        let bound = self.extraction_bound();
        let kf = self.k as f64;
        let alpha_beta = crate::brouwer::sup_dist(alpha.coords(), beta.coords());
        let beta_f = crate::brouwer::sup_dist(beta.coords(), &f_alpha);
        let extraction = Extraction {
            alpha,
            beta,
            residual,
            bound,
            supports_in_window: self.supports_in_window(profile, &alpha_idx, &beta_idx),
            chain_alpha_beta: alpha_beta,
            chain_beta_f: beta_f,
        };
        let lip = exact::to_f64(&self.lipschitz);
        if residual > bound || alpha_beta > 2.0 / kf || beta_f > (1.0 + lip) / kf {
            return Err(Error::Internal(format!(
                "extraction bound violated: residual {residual:e} > {bound:e} or chain broken"
            )));
        }
        Ok(extraction)
    }

    fn supports_in_window(&self, profile: &MixedProfile, alpha: &[usize], beta: &[usize]) -> bool {
        let d = self.dim();
        (0..d).all(|i| {
            let in_window = |s: &[(usize, Rational)], lo: usize| s.iter().all(|(a, _)| *a == lo || *a == lo + 1);
            in_window(profile.support(i), alpha[i]) && in_window(profile.support(d + i), beta[i])
        })
    }
}

/// Result of [`ImitationGame::extract_fixed_point`].
#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    /// Lower grid cell of `E(b)`.
    pub alpha: Point,
    /// Lower grid cell of `E(f(a))`.
    pub beta: Point,
    /// `‖f(α) − α‖∞`.
    pub residual: f64,
    /// `(3 + M)/k`.
    pub bound: f64,
    /// First-group supports lie in `{α_i, α_i + 1/k}`, second-group in `{β_i, β_i + 1/k}`.
    pub supports_in_window: bool,
    pub chain_alpha_beta: f64,
    pub chain_beta_f: f64,
}

/// Two-pass mean and variance of a finite distribution.
pub fn moments(dist: impl Iterator<Item = (f64, f64)> + Clone) -> (f64, f64) {
    let mean: CompensatedSum = dist.clone().map(|(p, x)| p * x).collect();
    let m = mean.value();
    let var: CompensatedSum = dist.map(|(p, x)| p * (x - m) * (x - m)).collect();
    (m, var.value())
}

impl Game for ImitationGame {
    fn num_players(&self) -> usize {
        2 * self.dim()
    }

    fn num_actions(&self, _player: usize) -> usize {
        self.k as usize + 1
    }

    fn payoff(&self, player: usize, actions: &[usize]) -> f64 {
        let d = self.dim();
        if player < d {
            let diff = (actions[player] as f64 - actions[d + player] as f64) / self.k as f64;
            -(diff * diff)
        } else {
            let i = player - d;
            let y = self.f_at(&actions[..d])[i];
            let diff = y - self.grid_value(actions[player]);
            -(diff * diff)
        }
    }

    fn action_payoffs(&self, player: usize, profile: &MixedProfile, budget: u128) -> Result<Vec<f64>> {
        let d = self.dim();
        let (m, var) = if player < d {
            self.marginal_moments(profile, d + player)
        } else {
            let i = player - d;
            let images = self.image_distribution(profile, budget)?;
            moments(images.iter().map(|(p, y)| (*p, y[i])))
        };
        Ok((0..=self.k as usize)
            .map(|a| {
                let diff = self.grid_value(a) - m;
                -(diff * diff + var)
            })
            .collect())
    }

    fn sampled_action_payoffs(
        &self,
        player: usize,
        profile: &MixedProfile,
        samples: usize,
        rng: &mut ChaCha8Rng,
    ) -> Option<Vec<f64>> {
        let d = self.dim();
        if player < d {
            return None;
        }
        let i = player - d;
        let ys: Vec<f64> = (0..samples)
            .map(|_| {
                let a = profile.sample(rng);
                self.f_at(&a[..d])[i]
            })
            .collect();
        Some(
            (0..=self.k as usize)
                .map(|b| {
                    let v = self.grid_value(b);
                    let s: CompensatedSum = ys.iter().map(|y| -((y - v) * (y - v))).collect();
                    s.value() / samples as f64
                })
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brouwer::{make_toy_map, ToySpec};
    use crate::exact::ratio;

    fn toy_game(spec: ToySpec, eps: Rational) -> ImitationGame {
        ImitationGame::build(make_toy_map(spec).unwrap(), &eps).unwrap()
    }

    #[test]
    fn resolution_formula() {
        assert_eq!(grid_resolution(&exact::int(80), &ratio(1, 88)).unwrap(), BigInt::from(7304));
        assert_eq!(grid_resolution(&exact::int(0), &ratio(1, 10)).unwrap(), BigInt::from(30));
        assert!(grid_resolution(&exact::int(0), &exact::int(0)).is_err());
        let g = toy_game(ToySpec::Constant { c: vec![0.3] }, ratio(1, 10));
        assert_eq!(g.k(), 30);
    }

    #[test]
    fn k_guard() {
        let m = make_toy_map(ToySpec::Identity { d: 1 }).unwrap();
        assert!(matches!(
            ImitationGame::build(m, &ratio(1, 1_000_000)),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn payoff_examples() {
        let g = toy_game(ToySpec::Reversal { d: 1 }, ratio(2, 5));
        assert_eq!(g.k(), 10);
        // u(0.5, 0.7) = -0.04
        assert!((g.payoff(0, &[5, 7]) + 0.04).abs() < 1e-15);
        assert_eq!(g.payoff(0, &[3, 3]), 0.0);
        // f(0.4) = 0.6
        assert_eq!(g.payoff(1, &[4, 6]), 0.0);
        assert!(g.checked_payoff(0, &[11, 0]).is_err());
        assert!(g.checked_payoff(2, &[1, 0]).is_err());
    }

    #[test]
    fn constant_map_nearest_grid_payoff() {
        let g = toy_game(ToySpec::Constant { c: vec![0.314] }, ratio(1, 10));
        let b = (0.314f64 * 30.0).round() as usize;
        let v = g.payoff(1, &[0, b]);
        assert!(-v <= 1.0 / (4.0 * 900.0) + 1e-15);
    }

    #[test]
    fn action_payoffs_match_enumeration() {
        let g = toy_game(
            ToySpec::Affine {
                a: vec![vec![0.5, 0.25], vec![0.0, 0.5]],
                b: vec![0.1, 0.3],
            },
            exact::int(2),
        );
        let k = g.k() as usize;
        let profile = MixedProfile::new(vec![
            vec![(0, ratio(1, 3)), (k, ratio(2, 3))],
            vec![(1, ratio(1, 2)), (2, ratio(1, 2))],
            vec![(0, ratio(1, 4)), (1, ratio(3, 4))],
            vec![(k, exact::int(1))],
        ])
        .unwrap();
        for player in 0..4 {
            let fast = g.action_payoffs(player, &profile, 1 << 20).unwrap();
            let slow = verify::enumerate_action_payoffs(&g, player, &profile, 1 << 20).unwrap();
            for (x, y) in fast.iter().zip(&slow) {
                assert!((x - y).abs() < 1e-12, "player {player}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn extract_exact_grid_hits() {
        let g = toy_game(ToySpec::Constant { c: vec![0.3] }, ratio(1, 10));
        let e = g.extract_fixed_point(&MixedProfile::pure(&[9, 9]), 1 << 20).unwrap();
        assert_eq!(e.alpha, Point(vec![0.3]));
        assert!(e.residual <= 1e-15);
        assert!(e.supports_in_window);

        let g = toy_game(ToySpec::Reversal { d: 1 }, ratio(4, 30));
        assert_eq!(g.k(), 30);
        let e = g.extract_fixed_point(&MixedProfile::pure(&[15, 15]), 1 << 20).unwrap();
        assert_eq!(e.alpha, Point(vec![0.5]));
        assert_eq!(e.residual, 0.0);
    }

    #[test]
    fn extract_rejects_uncertified() {
        let g = toy_game(ToySpec::Constant { c: vec![0.3] }, ratio(1, 10));
        assert!(matches!(
            g.extract_fixed_point(&MixedProfile::pure(&[11, 9]), 1 << 20),
            Err(Error::NotCertified(_))
        ));
    }

    #[test]
    fn alpha_tie_takes_the_grid_point() {
        // E(b) = 0.5 exactly, a on both neighbouring cells is not allowed; a = 0.5
        let g = toy_game(ToySpec::Reversal { d: 1 }, ratio(4, 30));
        let profile = MixedProfile::new(vec![vec![(15, exact::int(1))], vec![(15, exact::int(1))]]).unwrap();
        let e = g.extract_fixed_point(&profile, 1 << 20).unwrap();
        assert_eq!(e.alpha.coords()[0], 0.5);
    }

    #[test]
    fn alpha_from_either_half_of_the_cell() {
        // f ≡ 0.35 makes b = 0.3 and b = 0.4 equally good
        let g = toy_game(ToySpec::Constant { c: vec![0.35] }, ratio(3, 10));
        assert_eq!(g.k(), 10);
        for (p3, mean) in [(ratio(3, 10), 0.37), (ratio(4, 5), 0.32)] {
            let b = vec![(3, p3.clone()), (4, exact::int(1) - p3)];
            let profile = MixedProfile::new(vec![vec![(3, ratio(1, 2)), (4, ratio(1, 2))], b]).unwrap();
            assert!((exact::to_f64(&g.exact_mean(&profile, 1)) - mean).abs() < 1e-15);
            let e = g.extract_fixed_point(&profile, 1 << 20).unwrap();
            assert_eq!(e.alpha, Point(vec![0.3]));
            assert!(e.supports_in_window);
            assert!((e.residual - 0.05).abs() < 1e-15);
            assert!(e.residual <= e.bound);
        }
    }

    #[test]
    fn profile_validation() {
        assert!(MixedProfile::new(vec![vec![(0, ratio(1, 2))]]).is_err());
        assert!(MixedProfile::new(vec![vec![(0, ratio(1, 2)), (0, ratio(1, 2))]]).is_err());
        assert!(MixedProfile::new(vec![vec![(1, ratio(3, 2)), (0, ratio(-1, 2))]]).is_err());
        let p = MixedProfile::new(vec![vec![(3, ratio(1, 2)), (1, ratio(1, 2))]]).unwrap();
        assert_eq!(p.support(0)[0].0, 1);
    }
}
