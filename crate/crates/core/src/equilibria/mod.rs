//! Best responses, Nash verification and the flip-symmetric payoff bound.
//!
//! Best responses are found numerically: seeded multi-start Nelder–Mead over
//! a raw chart of the strategy class (a 4-vector normalized to a unit
//! quaternion, or 32 Stinespring parameters orthonormalized to an isometry).
//! One start is always seeded at the incumbent, and the incumbent itself is a
//! candidate, so a best response never reports less than the current payoff.
//! For flip-symmetric games [`payoff_upper_bound`] gives an exact ceiling on
//! every channel deviation.

mod landscape;
mod nelder_mead;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use landscape::DeviationLandscape;
pub use nelder_mead::{minimize, NelderMeadOptions, NelderMeadResult};

use crate::error::{GameError, Result};
use crate::games::PayoffTable;
use crate::protocol::{play, pre_disentangle_amplitudes, Mode, ProtocolConfig};
use crate::qcore::{identity2, OutcomeDistribution, StateVector};
use crate::strategies::{
    random_stinespring_params, stinespring_kraus, stinespring_params_from_kraus, Quaternion,
    Strategy, StrategyProfile,
};

/// Default ε for Nash verdicts.
pub const DEFAULT_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategyClass {
    /// Local unitaries, the coherent strategies.
    Unitary,
    /// All trace-preserving completely positive maps on the player's qubit.
    Channel,
}

impl std::str::FromStr for StrategyClass {
    type Err = GameError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unitary" => Ok(Self::Unitary),
            "channel" => Ok(Self::Channel),
            _ => Err(GameError::Parse {
                token: s.to_string(),
                reason: "class is one of unitary, channel".into(),
            }),
        }
    }
}

impl std::fmt::Display for StrategyClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Unitary => "unitary",
            Self::Channel => "channel",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub rng_seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 32,
            max_iterations: 2000,
            tolerance: 1e-10,
            rng_seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            rng_seed: seed,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(GameError::Constraint(
                "optimizer needs at least one restart".into(),
            ));
        }
        Ok(())
    }
}

/// Terminal point of one optimizer start.
#[derive(Debug, Clone, PartialEq)]
pub struct RestartOutcome {
    pub strategy: Strategy,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestResponseResult {
    pub strategy: Strategy,
    pub value: f64,
    /// `value − incumbent`.
    pub improvement: f64,
    pub incumbent: f64,
    /// Terminal of every start, in restart order.
    pub restarts: Vec<RestartOutcome>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlayerReport {
    pub player: usize,
    pub current: f64,
    pub best_response: f64,
    pub improvement: f64,
    pub best_strategy: Strategy,
    /// Every start that came within ε of the incumbent ended at the incumbent.
    pub strict: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NashReport {
    pub class: StrategyClass,
    pub epsilon: f64,
    pub players: Vec<PlayerReport>,
    pub is_nash: bool,
}

impl NashReport {
    pub fn max_improvement(&self) -> f64 {
        self.players
            .iter()
            .map(|p| p.improvement)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn check_inputs(table: &PayoffTable, profile: &[Strategy], player: usize) -> Result<()> {
    let n = table.n_players();
    if profile.len() != n {
        return Err(GameError::ArityMismatch {
            expected: n,
            got: profile.len(),
        });
    }
    if player >= n {
        return Err(GameError::PlayerOutOfRange {
            player,
            n_players: n,
        });
    }
    profile.iter().try_for_each(Strategy::validate)
}

fn restart_rng(seed: u64, player: usize, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((player as u64) << 32) | restart as u64);
    rng
}

fn unitary_from_raw(raw: &[f64]) -> Option<Strategy> {
    Quaternion::from_raw([raw[0], raw[1], raw[2], raw[3]]).map(|q| Strategy::Unitary(q.to_matrix()))
}

fn channel_from_raw(raw: &[f64]) -> Option<Strategy> {
    let params: &[f64; 32] = raw.try_into().ok()?;
    stinespring_kraus(params).ok().map(Strategy::Channel)
}

/// Multi-start search for the payoff-maximizing deviation of `player`.
pub fn best_response(
    table: &PayoffTable,
    profile: &[Strategy],
    player: usize,
    class: StrategyClass,
    config: &OptimizerConfig,
    protocol: ProtocolConfig,
) -> Result<BestResponseResult> {
    check_inputs(table, profile, player)?;
    config.validate()?;
    let incumbent_strategy = profile[player].clone();
    let incumbent = play(table, profile, protocol)?.expected_payoffs[player];

    let restarts = if protocol.mode == Mode::Classical {
        // Payoff is linear in the deviator's flip probability: the optimum
        // sits at a pure action.
        [0u8, 1]
            .into_iter()
            .map(|bit| {
                let mut deviated = profile.to_vec();
                deviated[player] = Strategy::ClassicalPure(bit);
                play(table, &deviated, protocol).map(|r| RestartOutcome {
                    strategy: Strategy::ClassicalPure(bit),
                    value: r.expected_payoffs[player],
                })
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        let landscape = DeviationLandscape::new(table, profile, player, protocol)?;
        let seeded_start: Option<Vec<f64>> = match class {
            StrategyClass::Unitary => incumbent_strategy
                .as_unitary()
                .map(|u| Quaternion::from_unitary(&u).to_array().to_vec()),
            StrategyClass::Channel => {
                stinespring_params_from_kraus(&incumbent_strategy.kraus_operators())
                    .map(|p| p.to_vec())
            }
        };
        let decode = match class {
            StrategyClass::Unitary => unitary_from_raw,
            StrategyClass::Channel => channel_from_raw,
        };
        let opts = NelderMeadOptions {
            max_iterations: config.max_iterations,
            tolerance: config.tolerance,
            initial_step: 0.3,
        };
        (0..config.restarts)
            .into_par_iter()
            .map(|r| {
                let x0 = match (&seeded_start, r) {
                    (Some(x), 0) => x.clone(),
                    _ => {
                        let mut rng = restart_rng(config.rng_seed, player, r);
                        match class {
                            StrategyClass::Unitary => {
                                Quaternion::random(&mut rng).to_array().to_vec()
                            }
                            StrategyClass::Channel => random_stinespring_params(&mut rng).to_vec(),
                        }
                    }
                };
                let objective = |x: &[f64]| match decode(x) {
                    Some(s) => -landscape.value(&s),
                    None => f64::INFINITY,
                };
                let found = minimize(objective, &x0, &opts);
                let strategy = decode(&found.x).expect("finite optimum decodes");
                RestartOutcome {
                    value: landscape.value(&strategy),
                    strategy,
                }
            })
            .collect()
    };

    // First-found wins among equal values; the incumbent is found first.
    let mut best = RestartOutcome {
        strategy: incumbent_strategy,
        value: incumbent,
    };
    for outcome in &restarts {
        if outcome.value > best.value {
            best = outcome.clone();
        }
    }
    // Report the winner's payoff through the simulator itself.
    let mut deviated = profile.to_vec();
    deviated[player] = best.strategy.clone();
    let value = play(table, &deviated, protocol)?.expected_payoffs[player];
    Ok(BestResponseResult {
        strategy: best.strategy,
        value,
        improvement: value - incumbent,
        incumbent,
        restarts,
    })
}

/// Distance between two strategies that ignores global phase and the
/// unitary freedom of Kraus representations.
pub fn strategy_distance(a: &Strategy, b: &Strategy) -> f64 {
    let (ca, cb) = (a.choi(), b.choi());
    ca.entries()
        .iter()
        .zip(cb.entries())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Deviations whose payoff is within ε of the incumbent must sit within this
/// Choi distance of it for the player to count as strict. A non-degenerate
/// maximum is approached quadratically, so ε-close values are O(√ε) close
/// in strategy space.
fn strict_radius(epsilon: f64) -> f64 {
    (10.0 * epsilon.sqrt()).max(1e-8)
}

/// Runs [`best_response`] for every player and compares the best
/// improvement with `epsilon`.
pub fn verify_nash(
    table: &PayoffTable,
    profile: &[Strategy],
    class: StrategyClass,
    epsilon: f64,
    config: &OptimizerConfig,
    protocol: ProtocolConfig,
) -> Result<NashReport> {
    if !(epsilon > 0.0) {
        return Err(GameError::Constraint(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let mut players = Vec::with_capacity(profile.len());
    for player in 0..table.n_players() {
        let br = best_response(table, profile, player, class, config, protocol)?;
        let radius = strict_radius(epsilon);
        let strict = br.restarts.iter().all(|t| {
            t.value < br.incumbent - epsilon
                || strategy_distance(&t.strategy, &profile[player]) <= radius
        });
        players.push(PlayerReport {
            player,
            current: br.incumbent,
            best_response: br.value,
            improvement: br.improvement,
            best_strategy: br.strategy,
            strict,
        });
    }
    let is_nash = players.iter().all(|p| p.improvement <= epsilon);
    Ok(NashReport {
        class,
        epsilon,
        players,
        is_nash,
    })
}

fn unitary_slots(profile: &[Strategy]) -> Result<Vec<crate::qcore::ComplexMatrix>> {
    profile
        .iter()
        .enumerate()
        .map(|(p, s)| s.as_unitary().ok_or(GameError::NonUnitaryStrategy(p)))
        .collect()
}

/// Distribution of the other players' bits in the pre-`J†` state when
/// `player`'s slot holds the identity. Local actions on `player`'s qubit
/// cannot change it.
pub fn opponents_marginal(profile: &[Strategy], player: usize) -> Result<OutcomeDistribution> {
    let n = profile.len();
    if player >= n {
        return Err(GameError::PlayerOutOfRange {
            player,
            n_players: n,
        });
    }
    if n < 2 {
        return Err(GameError::TooFewQubits { min: 2, got: n });
    }
    let mut slots = unitary_slots(profile)?;
    slots[player] = identity2();
    let amps = pre_disentangle_amplitudes(&slots);
    StateVector::new(n, amps)?.marginal_distribution(player)
}

/// `Σ_y P(y) · max_x $_player(x ⊕ y)` over the opponents' pre-`J†` marginal.
///
/// For flip-symmetric tables the final `J†` leaves expected payoffs
/// unchanged, and no local operation of `player` alters the opponents'
/// marginal, so this bounds the payoff of every channel deviation.
pub fn payoff_upper_bound(table: &PayoffTable, profile: &[Strategy], player: usize) -> Result<f64> {
    check_inputs(table, profile, player)?;
    if !table.is_flip_symmetric() {
        return Err(GameError::NotFlipSymmetric);
    }
    let n = table.n_players();
    let marginal = opponents_marginal(profile, player)?;
    let low_width = n - 1 - player;
    let bound = marginal
        .probabilities()
        .iter()
        .enumerate()
        .map(|(rest, &p)| {
            let high = rest >> low_width;
            let low = rest & ((1 << low_width) - 1);
            let with = |bit: usize| (high << (low_width + 1)) | (bit << low_width) | low;
            p * table
                .payoff(with(0), player)
                .max(table.payoff(with(1), player))
        })
        .sum();
    Ok(bound)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledProfile {
    pub profile: StrategyProfile,
    /// Largest best-response improvement over both players.
    pub max_improvement: f64,
    pub improvable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoUnitaryEquilibriumReport {
    pub samples: Vec<SampledProfile>,
    pub epsilon: f64,
    /// Share of sampled profiles where some player improves by more than ε.
    pub fraction_improvable: f64,
}

/// Samples Haar-random unitary profiles of a two-player entangled game (plus
/// any `forced` profiles, evaluated first) and checks each for a unitary
/// deviation improving some player by more than `epsilon`.
pub fn sampled_no_unitary_equilibrium(
    table: &PayoffTable,
    samples: usize,
    forced: &[StrategyProfile],
    epsilon: f64,
    config: &OptimizerConfig,
) -> Result<NoUnitaryEquilibriumReport> {
    if table.n_players() != 2 {
        return Err(GameError::DimensionMismatch(format!(
            "sampling check is for two-player games, got {} players",
            table.n_players()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    rng.set_stream(u64::MAX);
    let mut profiles: Vec<StrategyProfile> = forced.to_vec();
    for _ in 0..samples {
        profiles.push(vec![
            Strategy::Unitary(Quaternion::random(&mut rng).to_matrix()),
            Strategy::Unitary(Quaternion::random(&mut rng).to_matrix()),
        ]);
    }
    let protocol = ProtocolConfig::default();
    let mut out = Vec::with_capacity(profiles.len());
    for profile in profiles {
        let mut max_improvement = f64::NEG_INFINITY;
        for player in 0..2 {
            let br = best_response(
                table,
                &profile,
                player,
                StrategyClass::Unitary,
                config,
                protocol,
            )?;
            max_improvement = max_improvement.max(br.improvement);
        }
        out.push(SampledProfile {
            improvable: max_improvement > epsilon,
            profile,
            max_improvement,
        });
    }
    let fraction_improvable = if out.is_empty() {
        0.0
    } else {
        out.iter().filter(|s| s.improvable).count() as f64 / out.len() as f64
    };
    Ok(NoUnitaryEquilibriumReport {
        samples: out,
        epsilon,
        fraction_improvable,
    })
}
