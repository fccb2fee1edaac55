//! Equilibrium and fixed-point certification.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::brouwer::{format_coord, sup_dist, BrouwerMap, Point};
use crate::error::{Error, Result};
use crate::exact::{self, CompensatedSum, Rational};
use crate::imitation::MixedProfile;

/// Default number of opponent profiles enumerated per player in exact mode.
pub const DEFAULT_BUDGET: u128 = 1_000_000;

/// A finite normal-form game given by a payoff oracle.
///
/// Payoffs must lie in an interval of width at most 1 (the sampled mode
/// relies on it).
pub trait Game: Sync {
    fn num_players(&self) -> usize;
    fn num_actions(&self, player: usize) -> usize;
    /// Payoff of `player` at a pure profile (one action per player).
    fn payoff(&self, player: usize, actions: &[usize]) -> f64;

    /// Expected payoff of every action of `player` against the others' strategies.
    fn action_payoffs(&self, player: usize, profile: &MixedProfile, budget: u128) -> Result<Vec<f64>> {
        enumerate_action_payoffs(self, player, profile, budget)
    }

    /// Monte Carlo version of [`Game::action_payoffs`]; `None` when the game
    /// computes this player's expectations exactly anyway.
    fn sampled_action_payoffs(
        &self,
        player: usize,
        profile: &MixedProfile,
        samples: usize,
        rng: &mut ChaCha8Rng,
    ) -> Option<Vec<f64>> {
        let mut sums = vec![CompensatedSum::new(); self.num_actions(player)];
        for _ in 0..samples {
            let mut actions = profile.sample(rng);
            for (a, s) in sums.iter_mut().enumerate() {
                actions[player] = a;
                s.add(self.payoff(player, &actions));
            }
        }
        Some(sums.iter().map(|s| s.value() / samples as f64).collect())
    }
}

/// Expected payoffs by enumerating the opponents' support product.
pub fn enumerate_action_payoffs<G: Game + ?Sized>(
    game: &G,
    player: usize,
    profile: &MixedProfile,
    budget: u128,
) -> Result<Vec<f64>> {
    let n = game.num_players();
    let needed: u128 = (0..n)
        .filter(|&j| j != player)
        .map(|j| profile.support(j).len() as u128)
        .product();
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let others: Vec<usize> = (0..n).filter(|&j| j != player).collect();
    let mut sums = vec![CompensatedSum::new(); game.num_actions(player)];
    let mut idx = vec![0usize; others.len()];
    let mut actions = vec![0usize; n];
    loop {
        let mut prob = Rational::from_integer(1.into());
        for (slot, &j) in others.iter().enumerate() {
            let (a, p) = &profile.support(j)[idx[slot]];
            actions[j] = *a;
            prob *= p;
        }
        let w = exact::to_f64(&prob);
        for (a, s) in sums.iter_mut().enumerate() {
            actions[player] = a;
            s.add(w * game.payoff(player, &actions));
        }
        let mut i = 0;
        loop {
            if i == others.len() {
                return Ok(sums.iter().map(CompensatedSum::value).collect());
            }
            idx[i] += 1;
            if idx[i] < profile.support(others[i]).len() {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Mode {
    Exact { budget: u128 },
    Sampled { samples: usize, confidence: f64, seed: u64 },
}

impl Default for Mode {
    fn default() -> Self {
        Mode::Exact {
            budget: DEFAULT_BUDGET,
        }
    }
}

/// Smallest sample count accepted at tolerance `eps`: `⌈2 ln(2/(1−c)) / (ε/4)²⌉`.
pub fn default_samples(eps: f64, confidence: f64) -> Result<usize> {
    if eps.is_nan() || eps <= 0.0 || confidence.is_nan() || confidence <= 0.0 || confidence >= 1.0 {
        return Err(Error::OutOfRange(
            "sampling needs ε > 0 and confidence in (0, 1)".into(),
        ));
    }
    let margin = eps / 4.0;
    let n = (2.0 * (2.0 / (1.0 - confidence)).ln() / (margin * margin)).ceil();
    if n > 1e12 {
        return Err(Error::BudgetExceeded {
            needed: n as u128,
            budget: 1_000_000_000_000,
        });
    }
    Ok(n as usize)
}

/// Hoeffding half-width for payoff range 1, union-bounded over `estimates`.
pub fn hoeffding_half_width(samples: usize, confidence: f64, estimates: usize) -> f64 {
    let alpha = (1.0 - confidence) / estimates.max(1) as f64;
    ((2.0 / alpha).ln() / (2.0 * samples as f64)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlayerMode {
    Exact,
    Sampled(usize),
}

impl fmt::Display for PlayerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlayerMode::Exact => f.write_str("exact"),
            PlayerMode::Sampled(n) => write!(f, "sampled:{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlayerRegret {
    pub player: usize,
    pub regret: f64,
    pub mode: PlayerMode,
    /// Bound on `|regret − true regret|` (0 in exact mode).
    pub error_bound: f64,
    /// Worst supported action (WSNE) or best deviation (ANE).
    pub witness: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub players: Vec<PlayerRegret>,
    pub eps: f64,
    pub verdict: bool,
    /// First violating `(player, action)`, if any.
    pub worst: Option<(usize, usize)>,
}

impl VerificationReport {
    pub fn max_regret(&self) -> f64 {
        self.players.iter().map(|p| p.regret).fold(0.0, f64::max)
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.players {
            writeln!(f, "player {} regret {} mode {}", p.player, format_coord(p.regret), p.mode)?;
        }
        if let Some((player, action)) = self.worst {
            writeln!(f, "violation player {player} action {action}")?;
        }
        writeln!(f, "verdict {} at eps {}", self.verdict, format_coord(self.eps))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Notion {
    WellSupported,
    Approximate,
}

fn regret_of(notion: Notion, payoffs: &[f64], support: &[(usize, Rational)]) -> (f64, usize) {
    let (best_action, best) = payoffs
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (a, &v)| if v > acc.1 { (a, v) } else { acc });
    match notion {
        Notion::WellSupported => support
            .iter()
            .map(|(a, _)| (best - payoffs[*a], *a))
            .fold((0.0, support[0].0), |acc, x| if x.0 > acc.0 { x } else { acc }),
        Notion::Approximate => {
            let achieved: CompensatedSum = support
                .iter()
                .map(|(a, p)| exact::to_f64(p) * payoffs[*a])
                .collect();
            ((best - achieved.value()).max(0.0), best_action)
        }
    }
}

fn verify<G: Game + ?Sized>(
    game: &G,
    profile: &MixedProfile,
    eps: f64,
    mode: &Mode,
    notion: Notion,
) -> Result<VerificationReport> {
    profile.check_shape(game)?;
    if let Mode::Sampled {
        samples, confidence, ..
    } = mode
    {
        let needed = default_samples(eps, *confidence)?;
        if *samples < needed {
            return Err(Error::OutOfRange(format!(
                "{samples} samples are too few for confidence {confidence} at eps {eps}; need {needed}"
            )));
        }
    }
    let players: Vec<PlayerRegret> = (0..game.num_players())
        .into_par_iter()
        .map(|player| -> Result<PlayerRegret> {
            let (payoffs, pmode, error_bound) = match mode {
                Mode::Exact { budget } => (game.action_payoffs(player, profile, *budget)?, PlayerMode::Exact, 0.0),
                Mode::Sampled {
                    samples,
                    confidence,
                    seed,
                } => {
                    let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                    rng.set_stream(player as u64);
                    match game.sampled_action_payoffs(player, profile, *samples, &mut rng) {
                        Some(p) => {
                            let t = hoeffding_half_width(*samples, *confidence, game.num_actions(player));
                            (p, PlayerMode::Sampled(*samples), 2.0 * t)
                        }
                        None => (
                            game.action_payoffs(player, profile, DEFAULT_BUDGET)?,
                            PlayerMode::Exact,
                            0.0,
                        ),
                    }
                }
            };
            let (regret, witness) = regret_of(notion, &payoffs, profile.support(player));
            Ok(PlayerRegret {
                player,
                regret,
                mode: pmode,
                error_bound,
                witness,
            })
        })
        .collect::<Result<_>>()?;
    let worst = players
        .iter()
        .find(|p| p.regret + p.error_bound > eps)
        .map(|p| (p.player, p.witness));
    Ok(VerificationReport {
        verdict: worst.is_none(),
        players,
        eps,
        worst,
    })
}

/// Every supported action is within `eps` of a best response.
pub fn verify_wsne<G: Game + ?Sized>(
    game: &G,
    profile: &MixedProfile,
    eps: f64,
    mode: &Mode,
) -> Result<VerificationReport> {
    verify(game, profile, eps, mode, Notion::WellSupported)
}

/// Each mixed strategy is within `eps` of a best response in expectation.
pub fn verify_ane<G: Game + ?Sized>(
    game: &G,
    profile: &MixedProfile,
    eps: f64,
    mode: &Mode,
) -> Result<VerificationReport> {
    verify(game, profile, eps, mode, Notion::Approximate)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointReport {
    pub point: Point,
    pub residual: f64,
    pub eps: f64,
    pub verdict: bool,
}

impl fmt::Display for FixedPointReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "point {}", self.point)?;
        writeln!(f, "residual {}", format_coord(self.residual))?;
        writeln!(f, "verdict {} at eps {}", self.verdict, format_coord(self.eps))
    }
}

/// `‖f(x) − x‖∞ ≤ eps`.
pub fn verify_fixed_point(map: &BrouwerMap, x: &Point, eps: f64) -> Result<FixedPointReport> {
    let fx = map.evaluate(x)?;
    let residual = sup_dist(fx.coords(), x.coords());
    Ok(FixedPointReport {
        point: x.clone(),
        residual,
        eps,
        verdict: residual <= eps,
    })
}
