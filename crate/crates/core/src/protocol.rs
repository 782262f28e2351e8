//! Game pipelines: entangled quantum play, the classically correlated
//! control, and the unentangled classical baseline.

use std::fmt;
use std::str::FromStr;

use crate::error::{GameError, Result};
use crate::games::{ClassicalMixedProfile, PayoffTable};
use crate::qcore::{
    apply_entangler_in_place, apply_local_in_place, build_entangler, DensityOperator,
    OutcomeDistribution, StateVector,
};
use crate::strategies::{AngleParams, Strategy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// Shared register entangled by `J`, disentangled by `J†` before measurement.
    #[default]
    Entangled,
    /// `J` replaced by a shared random bit copied onto every qubit.
    Decoherent,
    /// Independent bits starting at 0, no correlation.
    Classical,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Entangled => "entangled",
            Mode::Decoherent => "decoherent",
            Mode::Classical => "classical",
        })
    }
}

impl FromStr for Mode {
    type Err = GameError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "entangled" => Ok(Mode::Entangled),
            "decoherent" => Ok(Mode::Decoherent),
            "classical" => Ok(Mode::Classical),
            _ => Err(GameError::Parse {
                token: s.to_string(),
                reason: "mode is one of entangled, decoherent, classical".into(),
            }),
        }
    }
}

/// Which circuit to run. `apply_final_gate` controls `J†` (entangled) or the
/// second `X^r` layer (decoherent); classical mode ignores it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProtocolConfig {
    pub mode: Mode,
    pub apply_final_gate: bool,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Entangled,
            apply_final_gate: true,
        }
    }
}

impl ProtocolConfig {
    pub fn new(mode: Mode) -> Self {
        Self {
            mode,
            ..Self::default()
        }
    }

    pub fn without_final_gate(mut self) -> Self {
        self.apply_final_gate = false;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameResult {
    pub distribution: OutcomeDistribution,
    pub expected_payoffs: Vec<f64>,
}

impl GameResult {
    fn new(table: &PayoffTable, distribution: OutcomeDistribution) -> Self {
        let expected_payoffs = table.expected_payoffs(&distribution);
        Self {
            distribution,
            expected_payoffs,
        }
    }
}

fn check_profile(n_players: usize, profile: &[Strategy]) -> Result<()> {
    if profile.len() != n_players {
        return Err(GameError::ArityMismatch {
            expected: n_players,
            got: profile.len(),
        });
    }
    profile.iter().try_for_each(Strategy::validate)
}

fn require_multiplayer(n: usize) -> Result<()> {
    if n < 2 {
        return Err(GameError::TooFewQubits { min: 2, got: n });
    }
    Ok(())
}

pub fn play(
    table: &PayoffTable,
    profile: &[Strategy],
    config: ProtocolConfig,
) -> Result<GameResult> {
    let n = table.n_players();
    check_profile(n, profile)?;
    match config.mode {
        Mode::Classical => {
            let flips = profile
                .iter()
                .map(Strategy::effective_flip_probability)
                .collect();
            let dist = table.classical_distribution(&ClassicalMixedProfile::new(flips)?)?;
            Ok(GameResult::new(table, dist))
        }
        Mode::Entangled => {
            require_multiplayer(n)?;
            let dist = if profile.iter().all(Strategy::is_unitary) {
                final_state(profile, n, !config.apply_final_gate)?.outcome_distribution()
            } else {
                entangled_density(profile, n, config.apply_final_gate)?.outcome_distribution()?
            };
            Ok(GameResult::new(table, dist))
        }
        Mode::Decoherent => play_decoherent(table, profile, config.apply_final_gate),
    }
}

/// Pure state after `J` and the players' unitaries, followed by `J†` unless
/// `before_final_gate`.
pub fn final_state(profile: &[Strategy], n: usize, before_final_gate: bool) -> Result<StateVector> {
    require_multiplayer(n)?;
    if profile.len() != n {
        return Err(GameError::ArityMismatch {
            expected: n,
            got: profile.len(),
        });
    }
    let mut psi = StateVector::zero(n)?.apply_entangler();
    for (player, s) in profile.iter().enumerate() {
        s.validate()?;
        let u = s
            .as_unitary()
            .ok_or(GameError::NonUnitaryStrategy(player))?;
        psi = psi.apply_local_unitary(&u, player)?;
    }
    Ok(if before_final_gate {
        psi
    } else {
        psi.apply_entangler_dagger()
    })
}

/// Density-operator form of the entangled pipeline; accepts any strategies.
pub fn entangled_density(
    profile: &[Strategy],
    n: usize,
    apply_final_gate: bool,
) -> Result<DensityOperator> {
    require_multiplayer(n)?;
    check_profile(n, profile)?;
    let mut rho = StateVector::zero(n)?.apply_entangler().to_density();
    for (player, s) in profile.iter().enumerate() {
        rho = rho.apply_local_channel(&s.kraus_operators(), player)?;
    }
    if apply_final_gate {
        rho = rho.conjugate(&build_entangler(n)?.adjoint())?;
    }
    Ok(rho)
}

/// Equal mixture over a shared random bit `r`: start from `|r…r⟩`, apply the
/// strategies, undo the copy with `X^r` on every qubit when
/// `apply_final_layer`, measure.
pub fn play_decoherent(
    table: &PayoffTable,
    profile: &[Strategy],
    apply_final_layer: bool,
) -> Result<GameResult> {
    let n = table.n_players();
    require_multiplayer(n)?;
    check_profile(n, profile)?;
    let all = (1usize << n) - 1;
    let branch = |r: usize| -> Result<OutcomeDistribution> {
        let start = StateVector::basis(n, if r == 1 { all } else { 0 })?;
        let dist = if profile.iter().all(Strategy::is_unitary) {
            let mut psi = start;
            for (player, s) in profile.iter().enumerate() {
                psi = psi.apply_local_unitary(&s.as_unitary().expect("checked"), player)?;
            }
            psi.outcome_distribution()
        } else {
            let mut rho = start.to_density();
            for (player, s) in profile.iter().enumerate() {
                rho = rho.apply_local_channel(&s.kraus_operators(), player)?;
            }
            rho.outcome_distribution()?
        };
        if r == 1 && apply_final_layer {
            let probs = dist.probabilities();
            OutcomeDistribution::new(n, (0..=all).map(|z| probs[z ^ all]).collect())
        } else {
            Ok(dist)
        }
    };
    let mixed = branch(0)?.mix(&branch(1)?, 0.5);
    Ok(GameResult::new(table, mixed))
}

/// Closed-form probability that each of three players is in the minority:
/// `P_i = (α_i^B α_j^A α_k^A)² + (α_i^A α_j^B α_k^B)²` for `(i, j, k)` cyclic.
pub fn prob_minority3_closed_form(params: &[AngleParams; 3]) -> Result<[f64; 3]> {
    for p in params {
        p.validate()?;
    }
    let a: [f64; 3] = std::array::from_fn(|i| params[i].alpha_a);
    let b: [f64; 3] = std::array::from_fn(|i| params[i].alpha_b());
    Ok(std::array::from_fn(|i| {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        (b[i] * a[j] * a[k]).powi(2) + (a[i] * b[j] * b[k]).powi(2)
    }))
}

/// Amplitudes after `J` and the given local operators, before `J†`.
/// Skips validation; callers have checked unitarity.
pub(crate) fn pre_disentangle_amplitudes(
    unitaries: &[crate::qcore::ComplexMatrix],
) -> Vec<crate::qcore::C64> {
    let n = unitaries.len();
    let mut amps = StateVector::zero(n).expect("n >= 1").amplitudes().to_vec();
    apply_entangler_in_place(&mut amps, false);
    for (player, u) in unitaries.iter().enumerate() {
        apply_local_in_place(&mut amps, n, u, player);
    }
    amps
}
