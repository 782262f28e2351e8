//! Single-qubit strategies and their parameterizations.
//!
//! Unitary strategies are handled up to global phase. The SU(2) chart is a
//! unit quaternion `(n0, n1, n2, n3) ↦ n0·I + i(n1·σx + n2·σy + n3·σz)`;
//! general channels are charted by a 4-dimensional environment Stinespring
//! isometry.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{GameError, Result};
use crate::qcore::{
    identity2, is_cptp, is_unitary, pauli_x, pauli_y, pauli_z, ComplexMatrix, C64, I_UNIT, ONE,
    ZERO,
};

/// Number of real parameters in the Stinespring chart (8x2 complex isometry).
pub const STINESPRING_PARAMS: usize = 32;
/// Environment dimension of the Stinespring chart.
pub const ENV_DIM: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub enum Strategy {
    /// Deterministic action: 0 = don't flip (`I`), 1 = flip (`F`).
    ClassicalPure(u8),
    /// Flip with probability `p`.
    ClassicalMixed(f64),
    Unitary(ComplexMatrix),
    /// Kraus operators of a trace-preserving completely positive map.
    Channel(Vec<ComplexMatrix>),
}

impl Strategy {
    pub fn pure(bit: u8) -> Result<Self> {
        if bit > 1 {
            return Err(GameError::Constraint(format!(
                "action bit {bit} is not 0 or 1"
            )));
        }
        Ok(Self::ClassicalPure(bit))
    }

    pub fn mixed(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(GameError::Constraint(format!(
                "flip probability {p} outside [0, 1]"
            )));
        }
        Ok(Self::ClassicalMixed(p))
    }

    pub fn unitary(u: ComplexMatrix) -> Result<Self> {
        if u.rows() != 2 || u.cols() != 2 {
            return Err(GameError::DimensionMismatch(
                "strategies act on one qubit".into(),
            ));
        }
        if !is_unitary(&u) {
            return Err(GameError::NonUnitary);
        }
        Ok(Self::Unitary(u))
    }

    pub fn channel(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        if kraus.iter().any(|k| k.rows() != 2 || k.cols() != 2) {
            return Err(GameError::DimensionMismatch(
                "strategies act on one qubit".into(),
            ));
        }
        if !is_cptp(&kraus) {
            return Err(GameError::NotCptp);
        }
        Ok(Self::Channel(kraus))
    }

    /// Wraps the strategy's operators as an explicit Kraus list.
    pub fn to_channel(&self) -> Self {
        Self::Channel(self.kraus_operators())
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::ClassicalPure(b) => Self::pure(*b).map(drop),
            Self::ClassicalMixed(p) => Self::mixed(*p).map(drop),
            Self::Unitary(u) => Self::unitary(u.clone()).map(drop),
            Self::Channel(k) => Self::channel(k.clone()).map(drop),
        }
    }

    /// The single-qubit operator when the strategy is a coherent manipulation.
    /// Channel-tagged strategies are never reported as unitary.
    pub fn as_unitary(&self) -> Option<ComplexMatrix> {
        match self {
            Self::ClassicalPure(0) => Some(identity2()),
            Self::ClassicalPure(_) => Some(pauli_x()),
            Self::Unitary(u) => Some(u.clone()),
            Self::ClassicalMixed(_) | Self::Channel(_) => None,
        }
    }

    pub fn is_unitary(&self) -> bool {
        self.as_unitary().is_some()
    }

    pub fn kraus_operators(&self) -> Vec<ComplexMatrix> {
        match self {
            Self::ClassicalMixed(p) => vec![
                identity2().scale(C64::new((1.0 - p).sqrt(), 0.0)),
                pauli_x().scale(C64::new(p.sqrt(), 0.0)),
            ],
            Self::Channel(k) => k.clone(),
            _ => vec![self.as_unitary().expect("unitary variant")],
        }
    }

    /// Probability that the strategy alone maps `|0⟩` to a measured `1`.
    pub fn effective_flip_probability(&self) -> f64 {
        match self {
            Self::ClassicalMixed(p) => *p,
            Self::ClassicalPure(b) => f64::from(*b),
            _ => self
                .kraus_operators()
                .iter()
                .map(|k| k[(1, 0)].norm_sqr())
                .sum(),
        }
    }

    /// Choi-type matrix `Σ_k vec(A_k) vec(A_k)†` (row-major vec). Invariant
    /// under global phase and under unitary mixing of Kraus operators.
    pub fn choi(&self) -> ComplexMatrix {
        choi_of(&self.kraus_operators())
    }

    /// Short human-readable form: a grammar name when the strategy equals one
    /// up to global phase, otherwise a quaternion, mixture or channel summary.
    pub fn describe(&self) -> String {
        match self {
            Self::ClassicalPure(0) => "I".into(),
            Self::ClassicalPure(_) => "F".into(),
            Self::ClassicalMixed(p) => format!("M({p})"),
            Self::Unitary(u) => {
                for name in NamedStrategy::ALL {
                    if let Some(v) = name.strategy().as_unitary() {
                        if u.approx_eq_up_to_phase(&v, 1e-9) {
                            return name.to_string();
                        }
                    }
                }
                let q = Quaternion::from_unitary(u).canonical();
                format!("U({:.6},{:.6},{:.6},{:.6})", q.n0, q.n1, q.n2, q.n3)
            }
            Self::Channel(k) => format!(
                "K[{} ops, p_flip={:.6}]",
                k.len(),
                self.effective_flip_probability()
            ),
        }
    }
}

pub(crate) fn choi_of(kraus: &[ComplexMatrix]) -> ComplexMatrix {
    let mut c = ComplexMatrix::zeros(4, 4);
    for k in kraus {
        let v = k.entries();
        for r in 0..4 {
            for s in 0..4 {
                c[(r, s)] += v[r] * v[s].conj();
            }
        }
    }
    c
}

/// One strategy per player, in player order.
pub type StrategyProfile = Vec<Strategy>;

/// Unit quaternion chart of SU(2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quaternion {
    pub n0: f64,
    pub n1: f64,
    pub n2: f64,
    pub n3: f64,
}

impl Quaternion {
    pub fn new(n0: f64, n1: f64, n2: f64, n3: f64) -> Result<Self> {
        let q = Self { n0, n1, n2, n3 };
        let norm = q.norm_sqr();
        if !norm.is_finite() || (norm - 1.0).abs() > 1e-10 {
            return Err(GameError::NonUnitQuaternion(norm));
        }
        Ok(q)
    }

    /// Normalizes arbitrary raw coordinates; `None` for the zero vector.
    pub fn from_raw(raw: [f64; 4]) -> Option<Self> {
        let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        (norm > 1e-300 && norm.is_finite()).then(|| Self {
            n0: raw[0] / norm,
            n1: raw[1] / norm,
            n2: raw[2] / norm,
            n3: raw[3] / norm,
        })
    }

    /// Haar-random element of SU(2).
    pub fn random(rng: &mut impl Rng) -> Self {
        loop {
            let raw: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
            if let Some(q) = Self::from_raw(raw) {
                return q;
            }
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.n0 * self.n0 + self.n1 * self.n1 + self.n2 * self.n2 + self.n3 * self.n3
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.n0, self.n1, self.n2, self.n3]
    }

    pub fn neg(self) -> Self {
        Self {
            n0: -self.n0,
            n1: -self.n1,
            n2: -self.n2,
            n3: -self.n3,
        }
    }

    /// Sign representative with the first nonzero coordinate positive.
    pub fn canonical(self) -> Self {
        let lead = self
            .to_array()
            .into_iter()
            .find(|x| x.abs() > 1e-12)
            .unwrap_or(1.0);
        if lead < 0.0 {
            self.neg()
        } else {
            self
        }
    }

    pub fn to_matrix(self) -> ComplexMatrix {
        let id = identity2();
        let rot = &(&pauli_x().scale(C64::new(self.n1, 0.0))
            + &pauli_y().scale(C64::new(self.n2, 0.0)))
            + &pauli_z().scale(C64::new(self.n3, 0.0));
        &id.scale(C64::new(self.n0, 0.0)) + &rot.scale(I_UNIT)
    }

    /// Quaternion of `u` up to global phase (and sign).
    pub fn from_unitary(u: &ComplexMatrix) -> Self {
        let det = u[(0, 0)] * u[(1, 1)] - u[(0, 1)] * u[(1, 0)];
        let root = det.sqrt();
        let s = u.scale(ONE / root);
        let raw = [
            (s[(0, 0)] + s[(1, 1)]).re / 2.0,
            (s[(0, 1)] + s[(1, 0)]).im / 2.0,
            (s[(1, 0)] - s[(0, 1)]).re / 2.0,
            (s[(0, 0)] - s[(1, 1)]).im / 2.0,
        ];
        Self::from_raw(raw).expect("unitary has nonzero quaternion")
    }
}

pub fn su2_from_quaternion(q: Quaternion) -> Result<Strategy> {
    let q = Quaternion::new(q.n0, q.n1, q.n2, q.n3)?;
    Ok(Strategy::Unitary(q.to_matrix()))
}

/// Coefficients of `αA(βA·iσx + βB·iσy) + αB(γA·I + γB·iσz)` with
/// `αB = +√(1 − αA²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleParams {
    pub alpha_a: f64,
    pub beta_a: f64,
    pub beta_b: f64,
    pub gamma_a: f64,
    pub gamma_b: f64,
}

impl AngleParams {
    pub fn validate(&self) -> Result<()> {
        let tol = 1e-10;
        if !(-1.0..=1.0).contains(&self.alpha_a) {
            return Err(GameError::Constraint(format!(
                "alpha_A = {} outside [-1, 1]",
                self.alpha_a
            )));
        }
        let beta = self.beta_a * self.beta_a + self.beta_b * self.beta_b;
        if (beta - 1.0).abs() > tol {
            return Err(GameError::Constraint(format!("beta_A² + beta_B² = {beta}")));
        }
        let gamma = self.gamma_a * self.gamma_a + self.gamma_b * self.gamma_b;
        if (gamma - 1.0).abs() > tol {
            return Err(GameError::Constraint(format!(
                "gamma_A² + gamma_B² = {gamma}"
            )));
        }
        Ok(())
    }

    pub fn alpha_b(&self) -> f64 {
        (1.0 - self.alpha_a * self.alpha_a).max(0.0).sqrt()
    }

    /// `(n0, n1, n2, n3) = (αBγA, αAβA, αAβB, αBγB)`.
    pub fn to_quaternion(&self) -> Result<Quaternion> {
        self.validate()?;
        let ab = self.alpha_b();
        Quaternion::new(
            ab * self.gamma_a,
            self.alpha_a * self.beta_a,
            self.alpha_a * self.beta_b,
            ab * self.gamma_b,
        )
    }

    /// Uniform draw over the constraint set (angles uniform, αA ∈ [−1, 1]).
    pub fn random(rng: &mut impl Rng) -> Self {
        let alpha_a = rng.random_range(-1.0..=1.0);
        let b = rng.random_range(0.0..2.0 * PI);
        let g = rng.random_range(0.0..2.0 * PI);
        Self {
            alpha_a,
            beta_a: b.cos(),
            beta_b: b.sin(),
            gamma_a: g.cos(),
            gamma_b: g.sin(),
        }
    }
}

/// Builds the operator directly from the coefficient formula.
pub fn from_angle_params(params: AngleParams) -> Result<Strategy> {
    params.validate()?;
    let (x, y, z) = (pauli_x(), pauli_y(), pauli_z());
    let flip = &x.scale(I_UNIT * params.beta_a) + &y.scale(I_UNIT * params.beta_b);
    let stay =
        &identity2().scale(C64::new(params.gamma_a, 0.0)) + &z.scale(I_UNIT * params.gamma_b);
    let u =
        &flip.scale(C64::new(params.alpha_a, 0.0)) + &stay.scale(C64::new(params.alpha_b(), 0.0));
    Strategy::unitary(u)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NamedStrategy {
    /// Don't flip.
    I,
    /// Flip, `σx`.
    F,
    /// The cos(π/16) four-player Minority equilibrium strategy.
    A,
    /// `(σx + σz)/√2`.
    H,
    /// `iσy`.
    IY,
}

impl NamedStrategy {
    pub const ALL: [NamedStrategy; 5] = [Self::I, Self::F, Self::A, Self::H, Self::IY];

    pub fn strategy(self) -> Strategy {
        match self {
            Self::I => Strategy::Unitary(identity2()),
            Self::F => Strategy::Unitary(pauli_x()),
            Self::A => Strategy::Unitary(minority4_quaternion().to_matrix()),
            Self::H => {
                Strategy::Unitary((&pauli_x() + &pauli_z()).scale(C64::new(FRAC_1_SQRT_2, 0.0)))
            }
            Self::IY => Strategy::Unitary(pauli_y().scale(I_UNIT)),
        }
    }
}

impl fmt::Display for NamedStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::I => "I",
            Self::F => "F",
            Self::A => "A",
            Self::H => "H",
            Self::IY => "IY",
        })
    }
}

impl FromStr for NamedStrategy {
    type Err = GameError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "I" => Ok(Self::I),
            "F" | "X" => Ok(Self::F),
            "A" => Ok(Self::A),
            "H" => Ok(Self::H),
            "IY" => Ok(Self::IY),
            _ => Err(GameError::UnknownStrategy(s.to_string())),
        }
    }
}

pub fn named_strategy(name: &str) -> Result<Strategy> {
    Ok(name.parse::<NamedStrategy>()?.strategy())
}

/// `(cos(π/16), cos(π/16), sin(π/16), −sin(π/16)) / √2`.
pub fn minority4_quaternion() -> Quaternion {
    let (s, c) = (PI / 16.0).sin_cos();
    let k = FRAC_1_SQRT_2;
    Quaternion {
        n0: c * k,
        n1: c * k,
        n2: s * k,
        n3: -s * k,
    }
}

fn isometry_columns(params: &[f64; STINESPRING_PARAMS]) -> Result<[[C64; 8]; 2]> {
    let mut cols = [[ZERO; 8]; 2];
    for row in 0..8 {
        for col in 0..2 {
            let at = 2 * (row * 2 + col);
            cols[col][row] = C64::new(params[at], params[at + 1]);
        }
    }
    if cols
        .iter()
        .flatten()
        .any(|z| !z.re.is_finite() || !z.im.is_finite())
    {
        return Err(GameError::NonFinite);
    }
    let norm = |v: &[C64; 8]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    // Column-ordered Gram-Schmidt.
    let n0 = norm(&cols[0]);
    if n0 < 1e-12 {
        return Err(GameError::DegenerateIsometry);
    }
    cols[0].iter_mut().for_each(|z| *z /= n0);
    let raw1 = norm(&cols[1]);
    let overlap: C64 = cols[0]
        .iter()
        .zip(&cols[1])
        .map(|(a, b)| a.conj() * b)
        .sum();
    let c0 = cols[0];
    cols[1]
        .iter_mut()
        .zip(&c0)
        .for_each(|(b, a)| *b -= overlap * a);
    let n1 = norm(&cols[1]);
    if n1 < 1e-12 || n1 < 1e-10 * raw1 {
        return Err(GameError::DegenerateIsometry);
    }
    cols[1].iter_mut().for_each(|z| *z /= n1);
    Ok(cols)
}

/// Reads the 32 parameters as an 8x2 complex matrix `V` (row-major, re/im
/// pairs; row index `2k + s` for environment state `k` and system state
/// `s`), orthonormalizes its columns, and returns `A_k = (⟨k| ⊗ I) V`.
pub fn stinespring_kraus(params: &[f64; STINESPRING_PARAMS]) -> Result<Vec<ComplexMatrix>> {
    let cols = isometry_columns(params)?;
    Ok((0..ENV_DIM)
        .map(|k| {
            ComplexMatrix::from_2x2(
                cols[0][2 * k],
                cols[1][2 * k],
                cols[0][2 * k + 1],
                cols[1][2 * k + 1],
            )
        })
        .collect())
}

/// Channel strategy from Stinespring parameters; all-zero Kraus blocks are dropped.
pub fn channel_from_stinespring(params: &[f64; STINESPRING_PARAMS]) -> Result<Strategy> {
    let kraus: Vec<_> = stinespring_kraus(params)?
        .into_iter()
        .filter(|k| k.frobenius_norm() > 0.0)
        .collect();
    Strategy::channel(kraus)
}

/// Inverse of [`stinespring_kraus`] for at most four Kraus operators.
pub fn stinespring_params_from_kraus(kraus: &[ComplexMatrix]) -> Option<[f64; STINESPRING_PARAMS]> {
    if kraus.is_empty() || kraus.len() > ENV_DIM {
        return None;
    }
    let mut params = [0.0; STINESPRING_PARAMS];
    for (k, a) in kraus.iter().enumerate() {
        for s in 0..2 {
            for col in 0..2 {
                let row = 2 * k + s;
                let at = 2 * (row * 2 + col);
                params[at] = a[(s, col)].re;
                params[at + 1] = a[(s, col)].im;
            }
        }
    }
    Some(params)
}

pub fn random_stinespring_params(rng: &mut impl Rng) -> [f64; STINESPRING_PARAMS] {
    std::array::from_fn(|_| rng.sample(StandardNormal))
}

/// Random channel from Gaussian Stinespring parameters.
pub fn random_channel(rng: &mut impl Rng) -> Strategy {
    loop {
        if let Ok(s) = channel_from_stinespring(&random_stinespring_params(rng)) {
            return s;
        }
    }
}

pub fn random_unitary(rng: &mut impl Rng) -> Strategy {
    Strategy::Unitary(Quaternion::random(rng).to_matrix())
}

/// Parses one token of the strategy grammar: `I`, `F`, `H`, `A`, `IY`,
/// `U(n0,n1,n2,n3)`, `M(p)` or `K(<file>)`. Relative Kraus file paths
/// resolve against `base_dir` when given.
pub fn parse_strategy(token: &str, base_dir: Option<&Path>) -> Result<Strategy> {
    let token = token.trim();
    let bad = |reason: &str| GameError::Parse {
        token: token.to_string(),
        reason: reason.to_string(),
    };
    let Some(open) = token.find('(') else {
        return named_strategy(token).map_err(|_| {
            bad("unknown strategy name (expected I, F, H, A, IY, U(..), M(..), K(..))")
        });
    };
    if !token.ends_with(')') {
        return Err(bad("missing closing parenthesis"));
    }
    let head = token[..open].trim().to_ascii_uppercase();
    let inner = &token[open + 1..token.len() - 1];
    let numbers = || -> Result<Vec<f64>> {
        inner
            .split(',')
            .map(|x| {
                x.trim()
                    .parse::<f64>()
                    .map_err(|_| bad(&format!("`{}` is not a number", x.trim())))
            })
            .collect()
    };
    match head.as_str() {
        "U" => {
            let v = numbers()?;
            let [n0, n1, n2, n3] = v[..] else {
                return Err(bad("U takes four quaternion coordinates"));
            };
            let norm = n0 * n0 + n1 * n1 + n2 * n2 + n3 * n3;
            // Typed decimals are renormalized when they are close to unit norm.
            if (norm - 1.0).abs() > 1e-6 {
                return Err(bad(&format!("quaternion squared norm {norm} is not 1")));
            }
            let q = Quaternion::from_raw([n0, n1, n2, n3]).ok_or_else(|| bad("zero quaternion"))?;
            Ok(Strategy::Unitary(q.to_matrix()))
        }
        "M" => {
            let v = numbers()?;
            let [p] = v[..] else {
                return Err(bad("M takes one probability"));
            };
            Strategy::mixed(p).map_err(|e| bad(&e.to_string()))
        }
        "K" => {
            let path = Path::new(inner.trim());
            let path = match base_dir {
                Some(dir) if path.is_relative() => dir.join(path),
                _ => path.to_path_buf(),
            };
            let text = std::fs::read_to_string(&path).map_err(|e| GameError::Io {
                path: path.display().to_string(),
                reason: e.to_string(),
            })?;
            parse_kraus_text(&text)
        }
        _ => Err(bad("unknown strategy constructor")),
    }
}

/// Kraus file body: one operator per line as 8 reals (row-major re/im pairs).
pub fn parse_kraus_text(text: &str) -> Result<Strategy> {
    let mut kraus = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let vals = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| GameError::TableFormat {
                line: lineno + 1,
                reason: "Kraus entries must be numbers".into(),
            })?;
        if vals.len() != 8 {
            return Err(GameError::TableFormat {
                line: lineno + 1,
                reason: format!("expected 8 reals per Kraus operator, got {}", vals.len()),
            });
        }
        let z = |i: usize| C64::new(vals[2 * i], vals[2 * i + 1]);
        kraus.push(ComplexMatrix::new(2, 2, vec![z(0), z(1), z(2), z(3)])?);
    }
    Strategy::channel(kraus)
}

/// Splits a comma-separated profile at top level (commas inside parentheses
/// belong to the strategy) and parses each entry.
pub fn parse_profile(text: &str, base_dir: Option<&Path>) -> Result<StrategyProfile> {
    let mut tokens = Vec::new();
    let (mut depth, mut start) = (0i32, 0usize);
    for (i, ch) in text.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                tokens.push(&text[start..i]);
                start = i + 1;
            }
            _ => {}
        }
        if depth < 0 {
            break;
        }
    }
    if depth != 0 {
        return Err(GameError::Parse {
            token: text.to_string(),
            reason: "unbalanced parentheses".into(),
        });
    }
    tokens.push(&text[start..]);
    tokens
        .into_iter()
        .map(|t| {
            if t.trim().is_empty() {
                Err(GameError::Parse {
                    token: text.to_string(),
                    reason: "empty profile entry".into(),
                })
            } else {
                parse_strategy(t, base_dir)
            }
        })
        .collect()
}
