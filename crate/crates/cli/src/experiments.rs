//! Catalog of reproducible experiments behind `qgame reproduce`.

use std::path::PathBuf;

use anyhow::{anyhow, Context};
use clap::ValueEnum;
use qgame_core::equilibria::{
    best_response, payoff_upper_bound, sampled_no_unitary_equilibrium, verify_nash,
    OptimizerConfig, StrategyClass,
};
use qgame_core::games::{minority_table, ClassicalMixedProfile, PayoffTable};
use qgame_core::protocol::{
    final_state, play, play_decoherent, prob_minority3_closed_form, Mode, ProtocolConfig,
};
use qgame_core::qcore::{bit_of, format_outcome, C64};
use qgame_core::strategies::{
    from_angle_params, named_strategy, random_channel, random_unitary, AngleParams, Strategy,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::report::Report;
use crate::spec::{parse_game, PD_DEFAULTS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExperimentId {
    Minority3Reduction,
    Minority4Equilibrium,
    Minority4Bound,
    Minority4Decoherence,
    ClassicalBaselines,
    PdDominance,
    TwoPlayerNoPure,
    /// Needs `--table`.
    Dilemma3,
    /// Needs `--table`.
    Fig2c,
}

pub struct ExperimentOptions {
    pub seed: u64,
    pub restarts: usize,
    pub epsilon: f64,
    pub table: Option<PathBuf>,
}

impl ExperimentOptions {
    fn optimizer(&self) -> OptimizerConfig {
        OptimizerConfig {
            restarts: self.restarts,
            rng_seed: self.seed,
            ..OptimizerConfig::default()
        }
    }

    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

/// Raised when an experiment needs a table file that was not given.
#[derive(Debug)]
pub struct MissingTable(pub ExperimentId);

impl std::fmt::Display for MissingTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = self
            .0
            .to_possible_value()
            .map(|v| v.get_name().to_string())
            .unwrap_or_default();
        write!(
            f,
            "experiment `{name}` needs a three-player payoff table: pass --table <file> \
             (format: a `players: 3` header, then one `<bits> <payoff> <payoff> <payoff>` line per outcome)"
        )
    }
}

impl std::error::Error for MissingTable {}

fn named(s: &str) -> Strategy {
    named_strategy(s).expect("builtin strategy")
}

fn max_dev(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn push_payoffs(report: &mut Report, section: &str, payoffs: &[f64]) {
    for (p, x) in payoffs.iter().enumerate() {
        report.push(section, format!("player {}", p + 1), *x);
    }
}

pub fn run(id: ExperimentId, opts: &ExperimentOptions) -> anyhow::Result<Report> {
    let mut report = Report::default();
    match id {
        ExperimentId::Minority3Reduction => minority3_reduction(opts, &mut report)?,
        ExperimentId::Minority4Equilibrium => minority4_equilibrium(opts, &mut report)?,
        ExperimentId::Minority4Bound => minority4_bound(opts, &mut report)?,
        ExperimentId::Minority4Decoherence => minority4_decoherence(opts, &mut report)?,
        ExperimentId::ClassicalBaselines => classical_baselines(opts, &mut report)?,
        ExperimentId::PdDominance => pd_dominance(opts, &mut report)?,
        ExperimentId::TwoPlayerNoPure => two_player_no_pure(opts, &mut report)?,
        ExperimentId::Dilemma3 => dilemma3(&required_table(id, opts)?, opts, &mut report)?,
        ExperimentId::Fig2c => fig2c(&required_table(id, opts)?, opts, &mut report)?,
    }
    Ok(report)
}

fn required_table(id: ExperimentId, opts: &ExperimentOptions) -> anyhow::Result<PayoffTable> {
    let path = opts.table.as_ref().ok_or(MissingTable(id))?;
    let table =
        PayoffTable::load_file(path).with_context(|| format!("loading {}", path.display()))?;
    if table.n_players() != 3 {
        return Err(anyhow!(
            "{} has {} players, expected 3",
            path.display(),
            table.n_players()
        ));
    }
    Ok(table)
}

fn minority3_reduction(opts: &ExperimentOptions, report: &mut Report) -> anyhow::Result<()> {
    let table = minority_table(3)?;
    let mut rng = opts.rng();
    let (mut worst_closed, mut worst_classical): (f64, f64) = (0.0, 0.0);
    let samples = 1000;
    for k in 0..samples {
        let params: [AngleParams; 3] = std::array::from_fn(|_| AngleParams::random(&mut rng));
        let profile = params
            .iter()
            .map(|p| from_angle_params(*p))
            .collect::<Result<Vec<_>, _>>()?;
        let sim = play(&table, &profile, ProtocolConfig::default())?.expected_payoffs;
        let closed = prob_minority3_closed_form(&params)?;
        let flips: Vec<f64> = profile
            .iter()
            .map(Strategy::effective_flip_probability)
            .collect();
        let classical = table.classical_mixed_payoffs(&ClassicalMixedProfile::new(flips)?)?;
        worst_closed = worst_closed.max(max_dev(&sim, &closed));
        worst_classical = worst_classical.max(max_dev(&sim, &classical));
        for (p, x) in sim.iter().enumerate() {
            report.push("sample payoff", format!("{k}:player {}", p + 1), *x);
        }
    }
    report.push("max deviation", "closed form", worst_closed);
    report.push("max deviation", "classical mixed", worst_classical);
    report.check(
        "closed form agrees with simulator",
        worst_closed <= 1e-9,
        format!("{samples} profiles, max deviation {worst_closed:e}"),
    );
    report.check(
        "classical mixed game agrees with simulator",
        worst_classical <= 1e-9,
        format!("{samples} profiles, max deviation {worst_classical:e}"),
    );
    Ok(())
}

fn minority4_equilibrium(opts: &ExperimentOptions, report: &mut Report) -> anyhow::Result<()> {
    let table = minority_table(4)?;
    let profile = vec![named("A"); 4];

    let payoffs = play(&table, &profile, ProtocolConfig::default())?.expected_payoffs;
    push_payoffs(report, "payoff", &payoffs);
    let dev = max_dev(&payoffs, &[0.25; 4]);
    report.check(
        "payoff 1/4 per player",
        dev <= 1e-9,
        format!("max deviation {dev:e}"),
    );

    let state = final_state(&profile, 4, false)?;
    let amp = 1.0 / 8f64.sqrt();
    let expected: Vec<C64> = (0..16usize)
        .map(|z| match z.count_ones() {
            1 => C64::new(amp, 0.0),
            3 => C64::new(-amp, 0.0),
            _ => C64::new(0.0, 0.0),
        })
        .collect();
    for (z, a) in state.amplitudes().iter().enumerate() {
        if a.norm() > 1e-12 {
            report.push("amplitude re", format_outcome(z, 4), a.re);
            report.push("amplitude im", format_outcome(z, 4), a.im);
        }
    }
    let overlap: C64 = expected
        .iter()
        .zip(state.amplitudes())
        .map(|(e, g)| e.conj() * g)
        .sum();
    let phase = overlap / overlap.norm();
    let state_dev = expected
        .iter()
        .zip(state.amplitudes())
        .map(|(e, g)| (e * phase - g).norm())
        .fold(0.0, f64::max);
    report.check(
        "eight-term final state",
        state_dev <= 1e-9,
        format!("max amplitude deviation up to phase {state_dev:e}"),
    );

    let nash = verify_nash(
        &table,
        &profile,
        StrategyClass::Channel,
        opts.epsilon,
        &opts.optimizer(),
        ProtocolConfig::default(),
    )?;
    for p in &nash.players {
        report.push(
            "best channel deviation",
            format!("player {}", p.player + 1),
            p.best_response,
        );
        report.push(
            "improvement",
            format!("player {}", p.player + 1),
            p.improvement,
        );
    }
    report.check(
        "Nash over channels",
        nash.is_nash,
        format!(
            "max improvement {:e} with {} restarts",
            nash.max_improvement(),
            opts.restarts
        ),
    );

    let bounds = (0..4)
        .map(|p| payoff_upper_bound(&table, &profile, p))
        .collect::<Result<Vec<_>, _>>()?;
    push_payoffs(report, "payoff bound", &bounds);
    let bound_dev = max_dev(&bounds, &[0.25; 4]);
    report.check(
        "payoff bound 1/4",
        bound_dev <= 1e-12,
        format!("max deviation {bound_dev:e}"),
    );
    Ok(())
}

fn minority4_bound(opts: &ExperimentOptions, report: &mut Report) -> anyhow::Result<()> {
    let table = minority_table(4)?;
    let profile = vec![named("A"); 4];
    let pre = final_state(&profile, 4, true)?.to_density();
    let mut rng = opts.rng();
    let mut worst: f64 = 0.0;
    for k in 0..200 {
        let player = k % 4;
        let channel = random_channel(&mut rng);
        let marginal = pre
            .apply_local_channel(&channel.kraus_operators(), player)?
            .marginal_distribution(player)?;
        worst = worst.max(max_dev(marginal.probabilities(), &[0.125; 8]));
    }
    report.push("max deviation", "marginal from 1/8", worst);
    report.check(
        "opponents' marginal uniform under deviation",
        worst <= 1e-9,
        format!("200 random channels, max deviation {worst:e}"),
    );

    let cfg = OptimizerConfig {
        restarts: opts.restarts.min(8),
        ..opts.optimizer()
    };
    let mut worst_gap = f64::NEG_INFINITY;
    for k in 0..10 {
        let sample: Vec<Strategy> = (0..4).map(|_| random_unitary(&mut rng)).collect();
        let player = k % 4;
        let bound = payoff_upper_bound(&table, &sample, player)?;
        let br = best_response(
            &table,
            &sample,
            player,
            StrategyClass::Channel,
            &cfg,
            ProtocolConfig::default(),
        )?;
        report.push("bound", format!("sample {k}"), bound);
        report.push("best channel deviation", format!("sample {k}"), br.value);
        worst_gap = worst_gap.max(br.value - bound);
    }
    report.check(
        "best responses stay under the bound",
        worst_gap <= 1e-6,
        format!("10 random profiles, largest excess {worst_gap:e}"),
    );
    Ok(())
}

fn minority4_decoherence(opts: &ExperimentOptions, report: &mut Report) -> anyhow::Result<()> {
    let table = minority_table(4)?;
    let profile = vec![named("A"); 4];
    let coherent = play(&table, &profile, ProtocolConfig::default())?.expected_payoffs;
    let decoherent = play_decoherent(&table, &profile, true)?.expected_payoffs;
    push_payoffs(report, "entangled payoff", &coherent);
    push_payoffs(report, "decoherent payoff", &decoherent);
    let dev = max_dev(&decoherent, &[0.125; 4]);
    report.check(
        "decoherent payoff 1/8",
        dev <= 1e-9,
        format!("max deviation {dev:e}"),
    );
    let nash = verify_nash(
        &table,
        &profile,
        StrategyClass::Channel,
        opts.epsilon,
        &opts.optimizer(),
        ProtocolConfig::new(Mode::Decoherent),
    )?;
    for p in &nash.players {
        report.push(
            "decoherent improvement",
            format!("player {}", p.player + 1),
            p.improvement,
        );
    }
    report.push("decoherent Nash", "(A,A,A,A)", nash.is_nash);
    Ok(())
}

fn classical_baselines(opts: &ExperimentOptions, report: &mut Report) -> anyhow::Result<()> {
    let m4 = minority_table(4)?;
    let half = m4.classical_mixed_payoffs(&ClassicalMixedProfile::uniform(4, 0.5)?)?;
    push_payoffs(report, "minority 4 at p=1/2", &half);
    report.check(
        "minority 4 mixed baseline 1/8",
        half.iter().all(|&x| x == 0.125),
        format!("payoffs {half:?}"),
    );

    let mut rng = opts.rng();
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let n = rng.random_range(2..=4);
        let table = PayoffTable::from_fn(n, |_| {
            (0..n).map(|_| rng.random_range(-10.0..10.0)).collect()
        })?;
        for z in 0..1usize << n {
            let profile: Vec<Strategy> = (0..n)
                .map(|p| named(if bit_of(z, n, p) == 1 { "F" } else { "I" }))
                .collect();
            let got = play(&table, &profile, ProtocolConfig::default())?.expected_payoffs;
            worst = worst.max(max_dev(&got, table.payoffs(z)));
        }
    }
    report.push("max deviation", "classical embedding", worst);
    report.check(
        "I/F profiles reproduce the classical game",
        worst <= 1e-12,
        format!("20 random tables, max deviation {worst:e}"),
    );
    Ok(())
}

fn pd_table() -> anyhow::Result<PayoffTable> {
    let [t, r, p, s] = PD_DEFAULTS;
    parse_game(&format!("builtin:pd:{t},{r},{p},{s}"))
}

fn pd_dominance(opts: &ExperimentOptions, report: &mut Report) -> anyhow::Result<()> {
    let pd = pd_table()?;
    let dominant = [pd.dominant_action(0)?, pd.dominant_action(1)?];
    let nash: Vec<String> = pd
        .classical_nash_search()
        .into_iter()
        .map(|z| format_outcome(z, 2))
        .collect();
    report.push("classical Nash", "outcomes", nash.join(" "));
    report.check(
        "defection dominant classically",
        dominant == [Some(1), Some(1)] && nash == ["11"],
        format!("dominant actions {dominant:?}, pure equilibria {nash:?}"),
    );
    let ff = vec![named("F"), named("F")];
    let payoffs = play(&pd, &ff, ProtocolConfig::default())?.expected_payoffs;
    push_payoffs(report, "(F,F) payoff", &payoffs);
    let verdict = verify_nash(
        &pd,
        &ff,
        StrategyClass::Unitary,
        opts.epsilon,
        &opts.optimizer(),
        ProtocolConfig::default(),
    )?;
    for p in &verdict.players {
        report.push(
            "improvement",
            format!("player {}", p.player + 1),
            p.improvement,
        );
        report.push(
            "best deviation",
            format!("player {}", p.player + 1),
            p.best_strategy.describe(),
        );
    }
    report.check(
        "quantized (F,F) is not an equilibrium",
        !verdict.is_nash && verdict.max_improvement() > 0.0,
        format!("max improvement {}", verdict.max_improvement()),
    );
    Ok(())
}

fn two_player_no_pure(opts: &ExperimentOptions, report: &mut Report) -> anyhow::Result<()> {
    let pd = pd_table()?;
    let forced = vec![vec![named("F"), named("F")]];
    let sampled =
        sampled_no_unitary_equilibrium(&pd, 100, &forced, opts.epsilon, &opts.optimizer())?;
    for (k, s) in sampled.samples.iter().enumerate() {
        report.push(
            "max improvement",
            if k == 0 {
                "(F,F)".to_string()
            } else {
                format!("sample {k}")
            },
            s.max_improvement,
        );
    }
    let random_part = &sampled.samples[1..];
    let fraction =
        random_part.iter().filter(|s| s.improvable).count() as f64 / random_part.len() as f64;
    report.push("fraction improvable", "100 random profiles", fraction);
    report.check(
        "every sampled profile is improvable",
        fraction == 1.0,
        format!("fraction {fraction}"),
    );
    report.check(
        "(F,F) flagged improvable",
        sampled.samples[0].improvable,
        format!("improvement {}", sampled.samples[0].max_improvement),
    );

    let flat = PayoffTable::constant(2, 1.0)?;
    let control = sampled_no_unitary_equilibrium(&flat, 20, &[], opts.epsilon, &opts.optimizer())?;
    report.push(
        "fraction improvable",
        "constant game",
        control.fraction_improvable,
    );
    report.check(
        "constant game never improvable",
        control.fraction_improvable == 0.0,
        format!("fraction {}", control.fraction_improvable),
    );
    Ok(())
}

fn dilemma3(
    table: &PayoffTable,
    opts: &ExperimentOptions,
    report: &mut Report,
) -> anyhow::Result<()> {
    let dominant = (0..3)
        .map(|p| table.dominant_action(p))
        .collect::<Result<Vec<_>, _>>()?;
    let at_dominant = table.payoffs(0b111).to_vec();
    push_payoffs(report, "payoff at 111", &at_dominant);
    report.check(
        "action 1 dominant for every player",
        dominant.iter().all(|d| *d == Some(1)),
        format!("dominant actions {dominant:?}"),
    );
    report.check(
        "dominant outcome pays 2 each",
        max_dev(&at_dominant, &[2.0; 3]) <= 1e-9,
        format!("payoffs {at_dominant:?}"),
    );

    let profile = vec![named("I"), named("H"), named("F")];
    let payoffs = play(table, &profile, ProtocolConfig::default())?.expected_payoffs;
    push_payoffs(report, "(I,H,F) payoff", &payoffs);
    report.check(
        "(I,H,F) pays (5,9,5)",
        max_dev(&payoffs, &[5.0, 9.0, 5.0]) <= 1e-9,
        format!("payoffs {payoffs:?}"),
    );
    let nash = verify_nash(
        table,
        &profile,
        StrategyClass::Channel,
        opts.epsilon,
        &opts.optimizer(),
        ProtocolConfig::default(),
    )?;
    for p in &nash.players {
        report.push(
            "improvement",
            format!("player {}", p.player + 1),
            p.improvement,
        );
        report.push("strict", format!("player {}", p.player + 1), p.strict);
    }
    report.check(
        "(I,H,F) is a Nash equilibrium over channels",
        nash.is_nash,
        format!("max improvement {:e}", nash.max_improvement()),
    );
    report.check(
        "strict for players 1 and 3",
        nash.players[0].strict && nash.players[2].strict,
        format!(
            "strict flags {:?}",
            nash.players.iter().map(|p| p.strict).collect::<Vec<_>>()
        ),
    );
    Ok(())
}

fn fig2c(table: &PayoffTable, opts: &ExperimentOptions, report: &mut Report) -> anyhow::Result<()> {
    let fff = vec![named("F"); 3];
    let base = play(table, &fff, ProtocolConfig::default())?.expected_payoffs;
    push_payoffs(report, "(F,F,F) payoff", &base);
    let nash = verify_nash(
        table,
        &fff,
        StrategyClass::Unitary,
        opts.epsilon,
        &opts.optimizer(),
        ProtocolConfig::default(),
    )?;
    for p in &nash.players {
        report.push(
            "improvement",
            format!("player {}", p.player + 1),
            p.improvement,
        );
    }
    report.check(
        "(F,F,F) is not an equilibrium",
        !nash.is_nash,
        format!("max improvement {:e}", nash.max_improvement()),
    );
    let mut gains = Vec::new();
    for p in 0..3 {
        let mut deviated = fff.clone();
        deviated[p] = named("IY");
        let got = play(table, &deviated, ProtocolConfig::default())?;
        report.push(
            "P(000) after IY",
            format!("player {}", p + 1),
            got.distribution.prob(0),
        );
        gains.push(got.expected_payoffs[p] - base[p]);
    }
    push_payoffs(report, "IY gain", &gains);
    report.check(
        "IY deviation strictly improves the deviator",
        gains.iter().all(|&g| g > 0.0),
        format!("gains {gains:?}"),
    );
    Ok(())
}
