//! N-qubit register mechanics.
//!
//! Basis convention: qubit `p` belongs to player `p` (0-based in the API,
//! "player p+1" in reports). Outcome bitstrings list player 1 first, so
//! player 1 is the most significant bit of the basis index. Bit value 0 is
//! the "don't flip" outcome and 1 the "flip" outcome.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DMatrix;

use super::matrix::{tensor_all, ComplexMatrix, C64, I_UNIT, ONE, ZERO};
use crate::error::{GameError, Result};

/// Tolerance for structural checks (unitarity, completeness).
pub const STRUCTURAL_TOL: f64 = 1e-8;
/// Tolerance for state validity (norm, trace, Hermiticity).
pub const STATE_TOL: f64 = 1e-10;
/// Negative probabilities down to this value are rounding noise.
pub const CLAMP_TOL: f64 = 1e-12;

/// Bit mask of player `player`'s qubit in an `n`-qubit basis index.
#[inline]
pub fn player_mask(n: usize, player: usize) -> usize {
    1 << (n - 1 - player)
}

/// The bit `player` holds in outcome `index`.
#[inline]
pub fn bit_of(index: usize, n: usize, player: usize) -> u8 {
    u8::from(index & player_mask(n, player) != 0)
}

pub fn format_outcome(index: usize, n: usize) -> String {
    (0..n)
        .map(|p| if bit_of(index, n, p) == 1 { '1' } else { '0' })
        .collect()
}

pub fn parse_outcome(s: &str) -> Result<usize> {
    if s.is_empty() || s.len() > usize::BITS as usize - 1 {
        return Err(GameError::Parse {
            token: s.to_string(),
            reason: "bitstring must have between 1 and 63 characters".into(),
        });
    }
    s.chars().try_fold(0usize, |acc, ch| match ch {
        '0' => Ok(acc << 1),
        '1' => Ok((acc << 1) | 1),
        _ => Err(GameError::Parse {
            token: s.to_string(),
            reason: "bitstrings contain only 0 and 1".into(),
        }),
    })
}

fn check_player(n: usize, player: usize) -> Result<()> {
    if player >= n {
        return Err(GameError::PlayerOutOfRange {
            player,
            n_players: n,
        });
    }
    Ok(())
}

fn check_single_qubit(u: &ComplexMatrix) -> Result<()> {
    if u.rows() != 2 || u.cols() != 2 {
        return Err(GameError::DimensionMismatch(format!(
            "local operators are 2x2, got {}x{}",
            u.rows(),
            u.cols()
        )));
    }
    Ok(())
}

/// `‖M†M − I‖_max ≤ tol`.
pub fn is_unitary_within(m: &ComplexMatrix, tol: f64) -> bool {
    m.is_square() && (&m.adjoint() * m).approx_eq(&ComplexMatrix::identity(m.rows()), tol)
}

pub fn is_unitary(m: &ComplexMatrix) -> bool {
    is_unitary_within(m, STRUCTURAL_TOL)
}

/// `‖Σ A_k†A_k − I‖_max ≤ tol` for a nonempty list of equally sized square operators.
pub fn is_cptp_within(kraus: &[ComplexMatrix], tol: f64) -> bool {
    let Some(first) = kraus.first() else {
        return false;
    };
    let dim = first.rows();
    if kraus.iter().any(|k| !k.is_square() || k.rows() != dim) {
        return false;
    }
    let sum = kraus.iter().fold(ComplexMatrix::zeros(dim, dim), |acc, k| {
        &acc + &(&k.adjoint() * k)
    });
    sum.approx_eq(&ComplexMatrix::identity(dim), tol)
}

pub fn is_cptp(kraus: &[ComplexMatrix]) -> bool {
    is_cptp_within(kraus, STRUCTURAL_TOL)
}

/// The entangling gate `J = (I^{⊗n} + i F^{⊗n}) / √2`.
pub fn build_entangler(n: usize) -> Result<ComplexMatrix> {
    if n == 0 {
        return Err(GameError::TooFewQubits { min: 1, got: 0 });
    }
    let dim = 1usize << n;
    let all = dim - 1;
    let mut j = ComplexMatrix::zeros(dim, dim);
    for z in 0..dim {
        j[(z, z)] = C64::new(FRAC_1_SQRT_2, 0.0);
        j[(z ^ all, z)] = C64::new(0.0, FRAC_1_SQRT_2);
    }
    Ok(j)
}

/// Embeds a single-qubit operator at `player`'s position: `I ⊗ … ⊗ u ⊗ … ⊗ I`.
pub fn embed_local(u: &ComplexMatrix, n: usize, player: usize) -> Result<ComplexMatrix> {
    check_single_qubit(u)?;
    check_player(n, player)?;
    let id = ComplexMatrix::identity(2);
    Ok(tensor_all(
        (0..n).map(|p| if p == player { u } else { &id }),
    ))
}

/// Applies a 2x2 operator in place to the qubit of `player`, no validation.
pub(crate) fn apply_local_in_place(amps: &mut [C64], n: usize, u: &ComplexMatrix, player: usize) {
    let mask = player_mask(n, player);
    let (u00, u01, u10, u11) = (u[(0, 0)], u[(0, 1)], u[(1, 0)], u[(1, 1)]);
    for i in 0..amps.len() {
        if i & mask == 0 {
            let j = i | mask;
            let (a, b) = (amps[i], amps[j]);
            amps[i] = u00 * a + u01 * b;
            amps[j] = u10 * a + u11 * b;
        }
    }
}

/// Applies `J` (or `J†`) to amplitudes in place.
pub(crate) fn apply_entangler_in_place(amps: &mut [C64], dagger: bool) {
    let all = amps.len() - 1;
    let phase = if dagger { -I_UNIT } else { I_UNIT };
    let s = C64::new(FRAC_1_SQRT_2, 0.0);
    for z in 0..amps.len() {
        let w = z ^ all;
        if z < w {
            let (a, b) = (amps[z], amps[w]);
            amps[z] = s * (a + phase * b);
            amps[w] = s * (b + phase * a);
        }
    }
}

/// Pure state of an `n`-qubit register.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<C64>,
}

impl StateVector {
    pub fn new(n_qubits: usize, amplitudes: Vec<C64>) -> Result<Self> {
        if n_qubits == 0 {
            return Err(GameError::TooFewQubits { min: 1, got: 0 });
        }
        if amplitudes.len() != 1 << n_qubits {
            return Err(GameError::DimensionMismatch(format!(
                "{n_qubits} qubits need {} amplitudes, got {}",
                1usize << n_qubits,
                amplitudes.len()
            )));
        }
        if amplitudes
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(GameError::NonFinite);
        }
        let state = Self {
            n_qubits,
            amplitudes,
        };
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(GameError::InvalidState(format!("squared norm {norm}")));
        }
        Ok(state)
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        if n_qubits == 0 {
            return Err(GameError::TooFewQubits { min: 1, got: 0 });
        }
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(GameError::InvalidState(format!(
                "basis index {index} exceeds dimension {dim}"
            )));
        }
        let mut amplitudes = vec![ZERO; dim];
        amplitudes[index] = ONE;
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    pub fn zero(n_qubits: usize) -> Result<Self> {
        Self::basis(n_qubits, 0)
    }

    pub(crate) fn from_raw(n_qubits: usize, amplitudes: Vec<C64>) -> Self {
        debug_assert_eq!(amplitudes.len(), 1 << n_qubits);
        Self {
            n_qubits,
            amplitudes,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, index: usize) -> C64 {
        self.amplitudes[index]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn inner(&self, other: &Self) -> C64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `|⟨self|other⟩|` close to one, i.e. equal up to global phase.
    pub fn approx_eq_up_to_phase(&self, other: &Self, tol: f64) -> bool {
        self.n_qubits == other.n_qubits && {
            let overlap = self.inner(other);
            let phase = if overlap.norm() > 0.0 {
                overlap / overlap.norm()
            } else {
                ONE
            };
            self.amplitudes
                .iter()
                .zip(&other.amplitudes)
                .all(|(a, b)| (a * phase - b).norm() <= tol)
        }
    }

    pub fn apply_local_unitary(&self, u: &ComplexMatrix, player: usize) -> Result<Self> {
        check_single_qubit(u)?;
        check_player(self.n_qubits, player)?;
        if !is_unitary_within(u, STATE_TOL) {
            return Err(GameError::NonUnitary);
        }
        let mut out = self.clone();
        apply_local_in_place(&mut out.amplitudes, self.n_qubits, u, player);
        Ok(out)
    }

    /// Applies a full `2^n × 2^n` unitary.
    pub fn apply_unitary(&self, u: &ComplexMatrix) -> Result<Self> {
        if !is_unitary_within(u, STATE_TOL) {
            return Err(GameError::NonUnitary);
        }
        Ok(Self::from_raw(self.n_qubits, u.mul_vec(&self.amplitudes)?))
    }

    pub fn apply_entangler(&self) -> Self {
        let mut out = self.clone();
        apply_entangler_in_place(&mut out.amplitudes, false);
        out
    }

    pub fn apply_entangler_dagger(&self) -> Self {
        let mut out = self.clone();
        apply_entangler_in_place(&mut out.amplitudes, true);
        out
    }

    pub fn to_density(&self) -> DensityOperator {
        let dim = self.amplitudes.len();
        let mut m = ComplexMatrix::zeros(dim, dim);
        for r in 0..dim {
            for c in 0..dim {
                m[(r, c)] = self.amplitudes[r] * self.amplitudes[c].conj();
            }
        }
        DensityOperator::from_raw(self.n_qubits, m)
    }

    pub fn outcome_distribution(&self) -> OutcomeDistribution {
        OutcomeDistribution {
            n_bits: self.n_qubits,
            probs: self.amplitudes.iter().map(|z| z.norm_sqr()).collect(),
        }
    }

    pub fn marginal_distribution(&self, exclude_player: usize) -> Result<OutcomeDistribution> {
        self.outcome_distribution().marginalize(exclude_player)
    }
}

/// Mixed state of an `n`-qubit register.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    n_qubits: usize,
    matrix: ComplexMatrix,
}

impl DensityOperator {
    /// Validating constructor: Hermitian, unit trace, eigenvalues ≥ −1e-9.
    pub fn new(n_qubits: usize, matrix: ComplexMatrix) -> Result<Self> {
        if n_qubits == 0 {
            return Err(GameError::TooFewQubits { min: 1, got: 0 });
        }
        let dim = 1usize << n_qubits;
        if matrix.rows() != dim || matrix.cols() != dim {
            return Err(GameError::DimensionMismatch(format!(
                "{n_qubits} qubits need a {dim}x{dim} density matrix"
            )));
        }
        let rho = Self { n_qubits, matrix };
        rho.validate()?;
        Ok(rho)
    }

    pub(crate) fn from_raw(n_qubits: usize, matrix: ComplexMatrix) -> Self {
        Self { n_qubits, matrix }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.matrix.is_hermitian(STATE_TOL) {
            return Err(GameError::InvalidState(
                "density operator is not Hermitian".into(),
            ));
        }
        let tr = self.matrix.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(GameError::InvalidState(format!("trace {tr}")));
        }
        let min_eig = self.min_eigenvalue();
        if min_eig < -1e-9 {
            return Err(GameError::InvalidState(format!(
                "negative eigenvalue {min_eig}"
            )));
        }
        Ok(())
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let dim = self.matrix.rows();
        let m = DMatrix::from_fn(dim, dim, |r, c| self.matrix[(r, c)]);
        m.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// `Σ_k A_k ρ A_k†` with every `A_k` acting on `player`'s qubit.
    pub fn apply_local_channel(&self, kraus: &[ComplexMatrix], player: usize) -> Result<Self> {
        for k in kraus {
            check_single_qubit(k)?;
        }
        check_player(self.n_qubits, player)?;
        if !is_cptp(kraus) {
            return Err(GameError::NotCptp);
        }
        Ok(self.apply_local_kraus_unchecked(kraus, player))
    }

    pub(crate) fn apply_local_kraus_unchecked(
        &self,
        kraus: &[ComplexMatrix],
        player: usize,
    ) -> Self {
        let dim = self.matrix.rows();
        let mut acc = ComplexMatrix::zeros(dim, dim);
        for k in kraus {
            let left = left_apply(&self.matrix, self.n_qubits, k, player);
            let both = left_apply(&left.adjoint(), self.n_qubits, k, player).adjoint();
            acc = &acc + &both;
        }
        Self::from_raw(self.n_qubits, acc)
    }

    /// `U ρ U†` for a full-register unitary.
    pub fn conjugate(&self, u: &ComplexMatrix) -> Result<Self> {
        let left = u.matmul(&self.matrix)?;
        Ok(Self::from_raw(self.n_qubits, left.matmul(&u.adjoint())?))
    }

    pub fn outcome_distribution(&self) -> Result<OutcomeDistribution> {
        let probs = (0..self.matrix.rows())
            .map(|i| self.matrix[(i, i)].re)
            .collect();
        OutcomeDistribution::new(self.n_qubits, probs)
    }

    pub fn marginal_distribution(&self, exclude_player: usize) -> Result<OutcomeDistribution> {
        self.outcome_distribution()?.marginalize(exclude_player)
    }
}

/// `(I ⊗ … ⊗ k ⊗ … ⊗ I) · m`, column by column.
fn left_apply(m: &ComplexMatrix, n: usize, k: &ComplexMatrix, player: usize) -> ComplexMatrix {
    let t = m.transpose();
    let dim = m.rows();
    let mut data = t.entries().to_vec();
    for col in data.chunks_mut(dim) {
        apply_local_in_place(col, n, k, player);
    }
    ComplexMatrix::new(dim, dim, data)
        .expect("shape preserved")
        .transpose()
}

/// Computational-basis measurement statistics over `2^n_bits` outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDistribution {
    n_bits: usize,
    probs: Vec<f64>,
}

impl OutcomeDistribution {
    /// Clamps values in `[−1e-12, 0)` to zero; rejects larger negatives and
    /// totals away from one by more than 1e-10.
    pub fn new(n_bits: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != 1 << n_bits {
            return Err(GameError::DimensionMismatch(format!(
                "{n_bits} bits need {} probabilities, got {}",
                1usize << n_bits,
                probs.len()
            )));
        }
        let mut clamped = Vec::with_capacity(probs.len());
        for p in probs {
            if !p.is_finite() || p < -CLAMP_TOL {
                return Err(GameError::NegativeProbability(p));
            }
            clamped.push(p.max(0.0));
        }
        let total: f64 = clamped.iter().sum();
        if (total - 1.0).abs() > STATE_TOL {
            return Err(GameError::InvalidState(format!(
                "probabilities sum to {total}"
            )));
        }
        Ok(Self {
            n_bits,
            probs: clamped,
        })
    }

    pub fn n_bits(&self) -> usize {
        self.n_bits
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, index: usize) -> f64 {
        self.probs[index]
    }

    pub fn prob_of(&self, bits: &str) -> Result<f64> {
        if bits.len() != self.n_bits {
            return Err(GameError::Parse {
                token: bits.to_string(),
                reason: format!("expected {} bits", self.n_bits),
            });
        }
        Ok(self.probs[parse_outcome(bits)?])
    }

    /// Nonzero outcomes as `(bitstring, probability)` in index order.
    pub fn support(&self, threshold: f64) -> Vec<(String, f64)> {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > threshold)
            .map(|(i, &p)| (format_outcome(i, self.n_bits), p))
            .collect()
    }

    /// Distribution of the remaining bits (in player order) after summing out `player`.
    pub fn marginalize(&self, player: usize) -> Result<Self> {
        check_player(self.n_bits, player)?;
        if self.n_bits == 1 {
            return Err(GameError::TooFewQubits { min: 2, got: 1 });
        }
        let n = self.n_bits;
        let low_width = n - 1 - player;
        let low_mask = (1usize << low_width) - 1;
        let mut out = vec![0.0; 1 << (n - 1)];
        for (i, &p) in self.probs.iter().enumerate() {
            let high = i >> (low_width + 1);
            let reduced = (high << low_width) | (i & low_mask);
            out[reduced] += p;
        }
        Ok(Self {
            n_bits: n - 1,
            probs: out,
        })
    }

    /// Elementwise convex combination `w·self + (1−w)·other`.
    pub fn mix(&self, other: &Self, w: f64) -> Self {
        assert_eq!(self.n_bits, other.n_bits);
        Self {
            n_bits: self.n_bits,
            probs: self
                .probs
                .iter()
                .zip(&other.probs)
                .map(|(a, b)| w * a + (1.0 - w) * b)
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::matrix::{identity2, pauli_x, pauli_z, tensor};
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_state(rng: &mut impl Rng, n: usize) -> StateVector {
        let mut amps: Vec<C64> = (0..1 << n)
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        amps.iter_mut().for_each(|z| *z /= norm);
        StateVector::new(n, amps).unwrap()
    }

    fn random_unitary(rng: &mut impl Rng) -> ComplexMatrix {
        let q: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let norm = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        let [a, b, c, d] = q.map(|x| x / norm);
        let phase = C64::from_polar(1.0, rng.random::<f64>() * 6.0);
        ComplexMatrix::from_2x2(
            C64::new(a, b),
            C64::new(c, d),
            C64::new(-c, d),
            C64::new(a, -b),
        )
        .scale(phase)
    }

    #[test]
    fn entangler_n2_on_00() {
        let j = build_entangler(2).unwrap();
        let out = j.mul_vec(&[ONE, ZERO, ZERO, ZERO]).unwrap();
        let s = FRAC_1_SQRT_2;
        let expected = [C64::new(s, 0.0), ZERO, ZERO, C64::new(0.0, s)];
        for (a, b) in out.iter().zip(expected) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn entangler_matches_formula_entrywise_n2() {
        let xx = tensor(&pauli_x(), &pauli_x());
        let direct =
            (&ComplexMatrix::identity(4) + &xx.scale(I_UNIT)).scale(C64::new(FRAC_1_SQRT_2, 0.0));
        assert!(build_entangler(2).unwrap().approx_eq(&direct, 1e-15));
    }

    #[test]
    fn entangler_rejects_zero() {
        assert_eq!(
            build_entangler(0),
            Err(GameError::TooFewQubits { min: 1, got: 0 })
        );
    }

    #[test]
    fn entangler_unitary_n3() {
        let j = build_entangler(3).unwrap();
        assert!((&j.adjoint() * &j).approx_eq(&ComplexMatrix::identity(8), 1e-12));
    }

    #[test]
    fn entangler_commutes_with_flip_pattern_n4() {
        let j = build_entangler(4).unwrap();
        let (x, id) = (pauli_x(), identity2());
        let op = tensor_all([&x, &id, &x, &id]);
        assert!((&j * &op).approx_eq(&(&op * &j), 1e-12));
    }

    #[test]
    fn in_place_entangler_matches_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..=5 {
            let j = build_entangler(n).unwrap();
            let psi = random_state(&mut rng, n);
            let fast = psi.apply_entangler();
            let slow = j.mul_vec(psi.amplitudes()).unwrap();
            assert!(fast
                .amplitudes()
                .iter()
                .zip(&slow)
                .all(|(a, b)| (a - b).norm() < 1e-14));
            let back = fast.apply_entangler_dagger();
            assert!(back.approx_eq_up_to_phase(&psi, 1e-13));
        }
    }

    #[test]
    fn local_identity_is_noop_and_flip_moves_bit() {
        let psi = StateVector::zero(3).unwrap();
        assert_eq!(psi.apply_local_unitary(&identity2(), 1).unwrap(), psi);
        let flipped = psi.apply_local_unitary(&pauli_x(), 1).unwrap();
        assert_eq!(flipped, StateVector::basis(3, 0b010).unwrap());
    }

    #[test]
    fn local_unitary_errors() {
        let psi = StateVector::zero(2).unwrap();
        assert_eq!(
            psi.apply_local_unitary(&identity2().scale(C64::new(2.0, 0.0)), 0),
            Err(GameError::NonUnitary)
        );
        assert_eq!(
            psi.apply_local_unitary(&identity2(), 2),
            Err(GameError::PlayerOutOfRange {
                player: 2,
                n_players: 2
            })
        );
    }

    #[test]
    fn local_unitary_matches_full_matrix_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..100 {
            let n = 1 + trial % 4;
            let player = rng.random_range(0..n);
            let psi = random_state(&mut rng, n);
            let u = random_unitary(&mut rng);
            let fast = psi.apply_local_unitary(&u, player).unwrap();
            let full = embed_local(&u, n, player).unwrap();
            let slow = full.mul_vec(psi.amplitudes()).unwrap();
            for (a, b) in fast.amplitudes().iter().zip(&slow) {
                assert!((a - b).norm() <= 1e-12);
            }
            assert!((fast.norm_sqr() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn identity_channel_leaves_rho() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rho = random_state(&mut rng, 3).to_density();
        let out = rho.apply_local_channel(&[identity2()], 2).unwrap();
        assert!(out.matrix().approx_eq(rho.matrix(), 1e-14));
    }

    #[test]
    fn dephasing_channel_kills_qubit_coherence() {
        // |+00⟩
        let s = C64::new(FRAC_1_SQRT_2, 0.0);
        let mut amps = vec![ZERO; 8];
        amps[0b000] = s;
        amps[0b100] = s;
        let rho = StateVector::new(3, amps).unwrap().to_density();
        let p0 = ComplexMatrix::from_2x2(ONE, ZERO, ZERO, ZERO);
        let p1 = ComplexMatrix::from_2x2(ZERO, ZERO, ZERO, ONE);
        let out = rho.apply_local_channel(&[p0, p1], 0).unwrap();
        out.validate().unwrap();
        assert!((out.trace() - ONE).norm() < 1e-14);
        assert!(out.matrix()[(0b000, 0b100)].norm() < 1e-15);
        assert!((out.matrix()[(0b000, 0b000)].re - 0.5).abs() < 1e-15);
        assert!((out.matrix()[(0b100, 0b100)].re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn channel_rejects_incomplete_kraus() {
        let rho = StateVector::zero(2).unwrap().to_density();
        let half = identity2().scale(C64::new(0.5, 0.0));
        assert_eq!(rho.apply_local_channel(&[half], 0), Err(GameError::NotCptp));
        let big = ComplexMatrix::identity(4);
        assert!(matches!(
            rho.apply_local_channel(&[big], 0),
            Err(GameError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn channel_matches_branch_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..50 {
            let n = 3;
            let player = rng.random_range(0..n);
            let psi = random_state(&mut rng, n);
            // Rank-2 channel: {cos t · U, sin t · V}.
            let t = rng.random::<f64>() * std::f64::consts::FRAC_PI_2;
            let kraus = [
                random_unitary(&mut rng).scale(C64::new(t.cos(), 0.0)),
                random_unitary(&mut rng).scale(C64::new(t.sin(), 0.0)),
            ];
            let out = psi
                .to_density()
                .apply_local_channel(&kraus, player)
                .unwrap();
            // Oracle: weight each normalized branch by its outcome probability.
            let dim = 1 << n;
            let mut oracle = ComplexMatrix::zeros(dim, dim);
            for k in &kraus {
                let mut branch = psi.amplitudes().to_vec();
                apply_local_in_place(&mut branch, n, k, player);
                let weight: f64 = branch.iter().map(|z| z.norm_sqr()).sum();
                if weight < 1e-15 {
                    continue;
                }
                let normed: Vec<C64> = branch.iter().map(|z| z / weight.sqrt()).collect();
                let proj = StateVector::from_raw(n, normed).to_density();
                oracle = &oracle + &proj.matrix().scale(C64::new(weight, 0.0));
            }
            assert!(out.matrix().approx_eq(&oracle, 1e-10));
            assert!((out.trace() - ONE).norm() < 1e-10);
        }
    }

    #[test]
    fn distributions() {
        let d = StateVector::basis(3, 0b010).unwrap().outcome_distribution();
        assert_eq!(d.support(0.0), vec![("010".to_string(), 1.0)]);
        let s = FRAC_1_SQRT_2;
        let bell =
            StateVector::new(2, vec![C64::new(s, 0.0), ZERO, ZERO, C64::new(0.0, s)]).unwrap();
        let d = bell.outcome_distribution();
        assert!((d.prob_of("00").unwrap() - 0.5).abs() < 1e-15);
        assert!((d.prob_of("11").unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(d.prob_of("01").unwrap(), 0.0);
    }

    #[test]
    fn clamps_tiny_negative_but_rejects_real_ones() {
        let d = OutcomeDistribution::new(1, vec![1.0 + 5e-13, -5e-13]).unwrap();
        assert_eq!(d.prob(1), 0.0);
        assert!(matches!(
            OutcomeDistribution::new(1, vec![1.1, -0.1]),
            Err(GameError::NegativeProbability(_))
        ));
    }

    #[test]
    fn marginal_drops_requested_player() {
        let psi = StateVector::zero(4).unwrap();
        let m = psi.marginal_distribution(3).unwrap();
        assert_eq!(m.support(0.0), vec![("000".to_string(), 1.0)]);
        let psi = StateVector::basis(4, parse_outcome("1011").unwrap()).unwrap();
        for (p, expect) in [(0, "011"), (1, "111"), (2, "101"), (3, "101")] {
            assert_eq!(
                psi.marginal_distribution(p).unwrap().support(0.0)[0].0,
                expect
            );
        }
        assert!(psi.marginal_distribution(4).is_err());
    }

    #[test]
    fn cptp_and_unitary_checks() {
        assert!(is_unitary(&pauli_x()));
        assert!(!is_unitary(&identity2().scale(C64::new(2.0, 0.0))));
        let kraus = [
            identity2().scale(C64::new(0.3f64.sqrt(), 0.0)),
            pauli_z().scale(C64::new(0.7f64.sqrt(), 0.0)),
        ];
        assert!(is_cptp(&kraus));
        assert!(!is_cptp(&kraus[..1]));
        assert!(!is_cptp(&[]));
    }

    #[test]
    fn outcome_string_round_trip() {
        for n in 1..6 {
            for i in 0..1 << n {
                assert_eq!(parse_outcome(&format_outcome(i, n)).unwrap(), i);
            }
        }
        assert_eq!(format_outcome(0b0001, 4), "0001");
        assert_eq!(bit_of(0b0001, 4, 3), 1);
        assert!(parse_outcome("01a").is_err());
    }
}
