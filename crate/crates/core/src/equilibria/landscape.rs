//! A player's expected payoff as a function of their own strategy.
//!
//! With the other players fixed, the deviator's payoff is linear in the
//! post-deviation density operator, hence a Hermitian quadratic form in the
//! entries of their Kraus operators:
//!
//! `E({A_k}) = Σ_k Σ_{x,y} a_k[x] conj(a_k[y]) G[x,y]`, with `x = (i, j)`
//! indexing entry `A[i, j]`. `G` is assembled once from the pre-deviation
//! state and the payoff observable.

use crate::error::{GameError, Result};
use crate::games::PayoffTable;
use crate::protocol::{Mode, ProtocolConfig};
use crate::qcore::{build_entangler, player_mask, ComplexMatrix, StateVector, C64, ZERO};
use crate::strategies::{Strategy, StrategyProfile};

#[derive(Debug, Clone)]
pub struct DeviationLandscape {
    gram: [[C64; 4]; 4],
}

/// Basis index with `bit` at `player`'s position and the remaining `n-1`
/// bits taken from `rest` in player order.
fn insert_bit(rest: usize, bit: usize, n: usize, player: usize) -> usize {
    let low_width = n - 1 - player;
    let low = rest & ((1 << low_width) - 1);
    let high = rest >> low_width;
    (high << (low_width + 1)) | (bit << low_width) | low
}

impl DeviationLandscape {
    /// Landscape of `player` against the rest of `profile`; the player's own
    /// entry is ignored.
    pub fn new(
        table: &PayoffTable,
        profile: &[Strategy],
        player: usize,
        config: ProtocolConfig,
    ) -> Result<Self> {
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
        let mut others: StrategyProfile = profile.to_vec();
        others[player] = Strategy::ClassicalPure(0);
        let dim = 1usize << n;
        let all = dim - 1;
        let payoff_diag = |flip: bool| -> Vec<C64> {
            (0..dim)
                .map(|z| C64::new(table.payoff(if flip { z ^ all } else { z }, player), 0.0))
                .collect()
        };

        // (pre-deviation state, observable, weight) terms.
        let mut terms = Vec::new();
        match config.mode {
            Mode::Entangled => {
                if n < 2 {
                    return Err(GameError::TooFewQubits { min: 2, got: n });
                }
                let rho = {
                    let mut rho = StateVector::zero(n)?.apply_entangler().to_density();
                    for (p, s) in others.iter().enumerate() {
                        if p != player {
                            rho = rho.apply_local_channel(&s.kraus_operators(), p)?;
                        }
                    }
                    rho
                };
                let diag = ComplexMatrix::diagonal(&payoff_diag(false));
                let observable = if config.apply_final_gate {
                    let j = build_entangler(n)?;
                    &(&j * &diag) * &j.adjoint()
                } else {
                    diag
                };
                terms.push((rho.matrix().clone(), observable, 1.0));
            }
            Mode::Decoherent => {
                if n < 2 {
                    return Err(GameError::TooFewQubits { min: 2, got: n });
                }
                for r in [0usize, 1] {
                    let mut rho = StateVector::basis(n, if r == 1 { all } else { 0 })?.to_density();
                    for (p, s) in others.iter().enumerate() {
                        if p != player {
                            rho = rho.apply_local_channel(&s.kraus_operators(), p)?;
                        }
                    }
                    let flip = r == 1 && config.apply_final_gate;
                    let observable = ComplexMatrix::diagonal(&payoff_diag(flip));
                    terms.push((rho.matrix().clone(), observable, 0.5));
                }
            }
            Mode::Classical => {
                // Measurement reads only the diagonal, so each opponent is
                // summarized by their flip probability.
                let mut probs = vec![1.0; dim];
                for (z, pz) in probs.iter_mut().enumerate() {
                    for (p, s) in others.iter().enumerate() {
                        if p == player {
                            continue;
                        }
                        let q = s.effective_flip_probability();
                        *pz *= if z & player_mask(n, p) != 0 {
                            q
                        } else {
                            1.0 - q
                        };
                    }
                }
                // Deviator's qubit starts in |0⟩.
                let own = player_mask(n, player);
                let rho_diag: Vec<C64> = (0..dim)
                    .map(|z| {
                        if z & own == 0 {
                            C64::new(probs[z], 0.0)
                        } else {
                            ZERO
                        }
                    })
                    .collect();
                terms.push((
                    ComplexMatrix::diagonal(&rho_diag),
                    ComplexMatrix::diagonal(&payoff_diag(false)),
                    1.0,
                ));
            }
        }

        let mut gram = [[ZERO; 4]; 4];
        let rest_dim = 1usize << (n - 1);
        for (rho, observable, weight) in &terms {
            for i in 0..2 {
                for j in 0..2 {
                    for i2 in 0..2 {
                        for j2 in 0..2 {
                            let mut acc = ZERO;
                            for r in 0..rest_dim {
                                for r2 in 0..rest_dim {
                                    let m = observable[(
                                        insert_bit(r2, i2, n, player),
                                        insert_bit(r, i, n, player),
                                    )];
                                    if m == ZERO {
                                        continue;
                                    }
                                    acc += rho[(
                                        insert_bit(r, j, n, player),
                                        insert_bit(r2, j2, n, player),
                                    )] * m;
                                }
                            }
                            gram[2 * i + j][2 * i2 + j2] += acc * *weight;
                        }
                    }
                }
            }
        }
        Ok(Self { gram })
    }

    /// Expected payoff to the deviator when they apply the channel `kraus`.
    pub fn value_kraus(&self, kraus: &[ComplexMatrix]) -> f64 {
        kraus
            .iter()
            .map(|k| {
                let a = k.entries();
                let mut acc = ZERO;
                for x in 0..4 {
                    if a[x] == ZERO {
                        continue;
                    }
                    for y in 0..4 {
                        acc += a[x] * a[y].conj() * self.gram[x][y];
                    }
                }
                acc.re
            })
            .sum()
    }

    pub fn value(&self, strategy: &Strategy) -> f64 {
        self.value_kraus(&strategy.kraus_operators())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{minority_table, prisoners_dilemma_table};
    use crate::protocol::play;
    use crate::strategies::{random_channel, random_unitary};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn insert_bit_positions() {
        // n = 4, player 1 (second bit): rest 0b101 -> 1 b 01
        assert_eq!(insert_bit(0b101, 0, 4, 1), 0b1001);
        assert_eq!(insert_bit(0b101, 1, 4, 1), 0b1101);
        assert_eq!(insert_bit(0b101, 1, 4, 0), 0b1101);
        assert_eq!(insert_bit(0b101, 1, 4, 3), 0b1011);
    }

    #[test]
    fn landscape_matches_direct_play_in_every_mode() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let tables = [
            minority_table(3).unwrap(),
            minority_table(4).unwrap(),
            prisoners_dilemma_table(3.0, 0.0, 5.0, 1.0).unwrap(),
        ];
        for trial in 0..60 {
            let table = &tables[trial % tables.len()];
            let n = table.n_players();
            let mut profile: Vec<Strategy> = (0..n)
                .map(|_| {
                    if rng.random_bool(0.3) {
                        random_channel(&mut rng)
                    } else {
                        random_unitary(&mut rng)
                    }
                })
                .collect();
            let player = rng.random_range(0..n);
            let modes = [
                ProtocolConfig::new(Mode::Entangled),
                ProtocolConfig::new(Mode::Entangled).without_final_gate(),
                ProtocolConfig::new(Mode::Decoherent),
                ProtocolConfig::new(Mode::Decoherent).without_final_gate(),
                ProtocolConfig::new(Mode::Classical),
            ];
            for config in modes {
                let land = DeviationLandscape::new(table, &profile, player, config).unwrap();
                for _ in 0..3 {
                    let dev = if rng.random_bool(0.5) {
                        random_channel(&mut rng)
                    } else {
                        random_unitary(&mut rng)
                    };
                    profile[player] = dev.clone();
                    let direct = play(table, &profile, config).unwrap().expected_payoffs[player];
                    let fast = land.value(&dev);
                    assert!(
                        (direct - fast).abs() < 1e-12,
                        "{config:?}: {direct} vs {fast}"
                    );
                }
            }
        }
    }
}
