//! Payoff tables for two-action N-player games.
//!
//! A table lists, for every outcome bitstring, one real payoff per player.
//! Bit `1` is the "flip" action; every player starts from `0`.

use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use crate::error::{GameError, Result};
use crate::qcore::{bit_of, format_outcome, parse_outcome, player_mask, OutcomeDistribution};

#[derive(Debug, Clone, PartialEq)]
pub struct PayoffTable {
    n_players: usize,
    /// `payoffs[outcome][player]`
    payoffs: Vec<Vec<f64>>,
}

impl PayoffTable {
    pub fn new(n_players: usize, payoffs: Vec<Vec<f64>>) -> Result<Self> {
        if n_players == 0 || n_players >= usize::BITS as usize {
            return Err(GameError::TooFewQubits {
                min: 1,
                got: n_players,
            });
        }
        if payoffs.len() != 1 << n_players {
            return Err(GameError::DimensionMismatch(format!(
                "{n_players} players need {} outcomes, got {}",
                1usize << n_players,
                payoffs.len()
            )));
        }
        for (outcome, row) in payoffs.iter().enumerate() {
            if row.len() != n_players {
                return Err(GameError::DimensionMismatch(format!(
                    "outcome {} has {} payoffs, expected {n_players}",
                    format_outcome(outcome, n_players),
                    row.len()
                )));
            }
            if row.iter().any(|x| !x.is_finite()) {
                return Err(GameError::NonFinite);
            }
        }
        Ok(Self { n_players, payoffs })
    }

    pub fn from_fn(n_players: usize, mut f: impl FnMut(usize) -> Vec<f64>) -> Result<Self> {
        let payoffs = (0..1usize << n_players).map(&mut f).collect();
        Self::new(n_players, payoffs)
    }

    pub fn constant(n_players: usize, value: f64) -> Result<Self> {
        Self::from_fn(n_players, |_| vec![value; n_players])
    }

    pub fn n_players(&self) -> usize {
        self.n_players
    }

    pub fn n_outcomes(&self) -> usize {
        self.payoffs.len()
    }

    pub fn payoffs(&self, outcome: usize) -> &[f64] {
        &self.payoffs[outcome]
    }

    pub fn payoff(&self, outcome: usize, player: usize) -> f64 {
        self.payoffs[outcome][player]
    }

    fn check_player(&self, player: usize) -> Result<()> {
        if player >= self.n_players {
            return Err(GameError::PlayerOutOfRange {
                player,
                n_players: self.n_players,
            });
        }
        Ok(())
    }

    /// `$(z) = $(z̄)` for every outcome `z`.
    pub fn is_flip_symmetric(&self) -> bool {
        let all = self.n_outcomes() - 1;
        (0..self.n_outcomes()).all(|z| self.payoffs[z] == self.payoffs[z ^ all])
    }

    /// Payoffs when every player plays the pure action in `actions`.
    pub fn classical_pure_payoffs(&self, actions: &str) -> Result<Vec<f64>> {
        if actions.len() != self.n_players {
            return Err(GameError::ArityMismatch {
                expected: self.n_players,
                got: actions.len(),
            });
        }
        Ok(self.payoffs[parse_outcome(actions)?].clone())
    }

    /// Expected payoffs under independent flips with the given probabilities.
    pub fn classical_mixed_payoffs(&self, profile: &ClassicalMixedProfile) -> Result<Vec<f64>> {
        Ok(self.expected_payoffs(&self.classical_distribution(profile)?))
    }

    /// Product distribution of independent flips.
    pub fn classical_distribution(
        &self,
        profile: &ClassicalMixedProfile,
    ) -> Result<OutcomeDistribution> {
        let p = profile.flip_probabilities();
        if p.len() != self.n_players {
            return Err(GameError::ArityMismatch {
                expected: self.n_players,
                got: p.len(),
            });
        }
        let n = self.n_players;
        let probs = (0..self.n_outcomes())
            .map(|z| {
                (0..n)
                    .map(|i| {
                        if bit_of(z, n, i) == 1 {
                            p[i]
                        } else {
                            1.0 - p[i]
                        }
                    })
                    .product()
            })
            .collect();
        OutcomeDistribution::new(n, probs)
    }

    /// `Σ_z P(z) $(z)` for each player.
    pub fn expected_payoffs(&self, dist: &OutcomeDistribution) -> Vec<f64> {
        assert_eq!(dist.n_bits(), self.n_players, "distribution arity");
        let mut out = vec![0.0; self.n_players];
        for (z, &p) in dist.probabilities().iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for (acc, x) in out.iter_mut().zip(&self.payoffs[z]) {
                *acc += p * x;
            }
        }
        out
    }

    /// The action that is strictly better for `player` against every pure
    /// combination of the opponents' actions, if one exists.
    pub fn dominant_action(&self, player: usize) -> Result<Option<u8>> {
        self.check_player(player)?;
        let mask = player_mask(self.n_players, player);
        let (mut one_wins, mut zero_wins) = (true, true);
        for z in (0..self.n_outcomes()).filter(|z| z & mask == 0) {
            let stay = self.payoff(z, player);
            let flip = self.payoff(z | mask, player);
            one_wins &= flip > stay;
            zero_wins &= stay > flip;
        }
        Ok(match (one_wins, zero_wins) {
            (true, _) => Some(1),
            (_, true) => Some(0),
            _ => None,
        })
    }

    /// Every pure profile where no single player strictly gains by switching
    /// their own bit. Ties count as equilibria.
    pub fn classical_nash_search(&self) -> Vec<usize> {
        let n = self.n_players;
        (0..self.n_outcomes())
            .filter(|&z| {
                (0..n).all(|p| {
                    let deviated = z ^ player_mask(n, p);
                    self.payoff(deviated, p) <= self.payoff(z, p)
                })
            })
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("players: {}\n", self.n_players);
        for (z, row) in self.payoffs.iter().enumerate() {
            out.push_str(&format_outcome(z, self.n_players));
            for x in row {
                // Shortest representation that parses back to the same bits.
                let _ = write!(out, " {x:?}");
            }
            out.push('\n');
        }
        out
    }

    pub fn load_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| GameError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        text.parse()
    }
}

impl fmt::Display for PayoffTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl FromStr for PayoffTable {
    type Err = GameError;

    fn from_str(text: &str) -> Result<Self> {
        let mut n_players: Option<usize> = None;
        let mut rows: Vec<Option<Vec<f64>>> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line_no = lineno + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some(n) = n_players else {
                let count = line
                    .strip_prefix("players:")
                    .map(str::trim)
                    .and_then(|v| v.parse::<usize>().ok())
                    .filter(|&v| (1..=20).contains(&v))
                    .ok_or_else(|| GameError::TableFormat {
                        line: line_no,
                        reason: "expected header `players: N` with 1 <= N <= 20".into(),
                    })?;
                n_players = Some(count);
                rows = vec![None; 1 << count];
                continue;
            };
            let mut fields = line.split_whitespace();
            let bits = fields.next().unwrap_or_default();
            if bits.len() != n || !bits.chars().all(|c| c == '0' || c == '1') {
                return Err(GameError::TableFormat {
                    line: line_no,
                    reason: format!("`{bits}` is not a {n}-bit outcome"),
                });
            }
            let outcome = parse_outcome(bits)?;
            let payoffs = fields
                .map(|tok| {
                    tok.parse::<f64>()
                        .ok()
                        .filter(|x| x.is_finite())
                        .ok_or_else(|| GameError::TableFormat {
                            line: line_no,
                            reason: format!("payoff `{tok}` is not a finite number"),
                        })
                })
                .collect::<Result<Vec<f64>>>()?;
            if payoffs.len() != n {
                return Err(GameError::TableFormat {
                    line: line_no,
                    reason: format!("outcome {bits} has {} payoffs, expected {n}", payoffs.len()),
                });
            }
            if rows[outcome].is_some() {
                return Err(GameError::DuplicateOutcome(bits.to_string()));
            }
            rows[outcome] = Some(payoffs);
        }
        let n = n_players.ok_or(GameError::TableFormat {
            line: 0,
            reason: "missing `players: N` header".into(),
        })?;
        let payoffs = rows
            .into_iter()
            .enumerate()
            .map(|(z, row)| row.ok_or_else(|| GameError::MissingOutcome(format_outcome(z, n))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(n, payoffs)
    }
}

/// Players holding the strictly less common bit earn one point.
pub fn minority_table(n: usize) -> Result<PayoffTable> {
    if n < 2 {
        return Err(GameError::TooFewQubits { min: 2, got: n });
    }
    PayoffTable::from_fn(n, |z| {
        let ones = z.count_ones() as usize;
        let zeros = n - ones;
        (0..n)
            .map(|p| {
                let same = if bit_of(z, n, p) == 1 { ones } else { zeros };
                if 2 * same < n {
                    1.0
                } else {
                    0.0
                }
            })
            .collect()
    })
}

/// Two-player dilemma with `t > r > p > s`; bit 1 is "defect".
pub fn prisoners_dilemma_table(r: f64, s: f64, t: f64, p: f64) -> Result<PayoffTable> {
    if !(t > r && r > p && p > s) {
        return Err(GameError::Constraint(format!(
            "dilemma ordering t > r > p > s violated by (r,s,t,p) = ({r},{s},{t},{p})"
        )));
    }
    PayoffTable::new(2, vec![vec![r, r], vec![s, t], vec![t, s], vec![p, p]])
}

/// Independent flip probabilities, one per player.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalMixedProfile {
    flip_probabilities: Vec<f64>,
}

impl ClassicalMixedProfile {
    pub fn new(flip_probabilities: Vec<f64>) -> Result<Self> {
        if let Some(p) = flip_probabilities
            .iter()
            .find(|p| !(0.0..=1.0).contains(*p))
        {
            return Err(GameError::Constraint(format!(
                "flip probability {p} outside [0, 1]"
            )));
        }
        Ok(Self { flip_probabilities })
    }

    pub fn uniform(n: usize, p: f64) -> Result<Self> {
        Self::new(vec![p; n])
    }

    pub fn flip_probabilities(&self) -> &[f64] {
        &self.flip_probabilities
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pd() -> PayoffTable {
        prisoners_dilemma_table(3.0, 0.0, 5.0, 1.0).unwrap()
    }

    #[test]
    fn minority_examples() {
        let m4 = minority_table(4).unwrap();
        assert_eq!(
            m4.classical_pure_payoffs("0001").unwrap(),
            vec![0.0, 0.0, 0.0, 1.0]
        );
        assert_eq!(m4.classical_pure_payoffs("0011").unwrap(), vec![0.0; 4]);
        assert_eq!(m4.classical_pure_payoffs("0000").unwrap(), vec![0.0; 4]);
        let m3 = minority_table(3).unwrap();
        assert_eq!(
            m3.classical_pure_payoffs("011").unwrap(),
            vec![1.0, 0.0, 0.0]
        );
        assert_eq!(
            m3.classical_pure_payoffs("001").unwrap(),
            vec![0.0, 0.0, 1.0]
        );
        assert!(minority_table(1).is_err());
    }

    #[test]
    fn minority_five_players() {
        let m5 = minority_table(5).unwrap();
        assert_eq!(
            m5.classical_pure_payoffs("00011").unwrap(),
            vec![0.0, 0.0, 0.0, 1.0, 1.0]
        );
        assert_eq!(
            m5.classical_pure_payoffs("00111").unwrap(),
            vec![1.0, 1.0, 0.0, 0.0, 0.0]
        );
    }

    #[test]
    fn dilemma_table() {
        let t = pd();
        assert_eq!(t.classical_pure_payoffs("11").unwrap(), vec![1.0, 1.0]);
        assert_eq!(t.classical_pure_payoffs("01").unwrap(), vec![0.0, 5.0]);
        assert_eq!(t.dominant_action(0).unwrap(), Some(1));
        assert_eq!(t.dominant_action(1).unwrap(), Some(1));
        assert_eq!(t.classical_nash_search(), vec![0b11]);
        assert!(prisoners_dilemma_table(3.0, 0.0, 2.0, 1.0).is_err());
        assert!(t.classical_pure_payoffs("1").is_err());
    }

    #[test]
    fn flip_symmetry() {
        for n in 2..=6 {
            assert!(minority_table(n).unwrap().is_flip_symmetric());
        }
        assert!(!pd().is_flip_symmetric());
        assert!(PayoffTable::constant(3, 2.5).unwrap().is_flip_symmetric());
    }

    #[test]
    fn mixed_payoffs() {
        let m4 = minority_table(4).unwrap();
        let half = ClassicalMixedProfile::uniform(4, 0.5).unwrap();
        assert_eq!(m4.classical_mixed_payoffs(&half).unwrap(), vec![0.125; 4]);
        let m3 = minority_table(3).unwrap();
        let lone = ClassicalMixedProfile::new(vec![1.0, 0.0, 0.0]).unwrap();
        assert_eq!(
            m3.classical_mixed_payoffs(&lone).unwrap(),
            vec![1.0, 0.0, 0.0]
        );
        assert!(ClassicalMixedProfile::new(vec![1.2]).is_err());
        let zero = ClassicalMixedProfile::uniform(2, 0.0).unwrap();
        assert_eq!(pd().classical_mixed_payoffs(&zero).unwrap(), vec![3.0, 3.0]);
    }

    #[test]
    fn minority_four_has_no_dominant_action() {
        let m4 = minority_table(4).unwrap();
        for p in 0..4 {
            assert_eq!(m4.dominant_action(p).unwrap(), None);
        }
        assert!(m4.dominant_action(4).is_err());
    }

    #[test]
    fn nash_search_examples() {
        let m3 = minority_table(3).unwrap();
        let eq = m3.classical_nash_search();
        assert!(eq.contains(&0b001));
        let constant = PayoffTable::constant(3, 1.0).unwrap();
        assert_eq!(constant.classical_nash_search(), (0..8).collect::<Vec<_>>());
    }

    #[test]
    fn table_round_trip_and_errors() {
        let m3 = minority_table(3).unwrap();
        assert_eq!(m3.to_text().parse::<PayoffTable>().unwrap(), m3);

        let missing: String = m3
            .to_text()
            .lines()
            .filter(|l| !l.starts_with("101"))
            .map(|l| format!("{l}\n"))
            .collect();
        assert_eq!(
            missing.parse::<PayoffTable>(),
            Err(GameError::MissingOutcome("101".into()))
        );

        let dup = format!("{}011 0 0 0\n", m3.to_text());
        assert_eq!(
            dup.parse::<PayoffTable>(),
            Err(GameError::DuplicateOutcome("011".into()))
        );

        let text = "# comment\nplayers: 2\n00 1 1 # trailing\n01 0 x\n10 0 0\n11 0 0\n";
        assert!(matches!(
            text.parse::<PayoffTable>(),
            Err(GameError::TableFormat { line: 4, .. })
        ));
        let arity = "players: 2\n00 1\n01 0 0\n10 0 0\n11 0 0\n";
        assert!(matches!(
            arity.parse::<PayoffTable>(),
            Err(GameError::TableFormat { line: 2, .. })
        ));
        let width = "players: 2\n000 1 1\n";
        assert!(matches!(
            width.parse::<PayoffTable>(),
            Err(GameError::TableFormat { .. })
        ));
        assert!("00 1 1\n".parse::<PayoffTable>().is_err());
    }

    #[test]
    fn rows_may_appear_in_any_order() {
        let text = "players: 2\n11 1 1\n00 3 3\n10 5 0\n01 0 5\n";
        assert_eq!(text.parse::<PayoffTable>().unwrap(), pd());
    }
}
