//! `qgame`: play quantum games, check equilibria and rerun experiments.
//!
//! Exit codes: 0 success or verified, 1 verified false, 2 usage or data error.

mod experiments;
mod report;
mod spec;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use qgame_core::equilibria::{
    best_response, verify_nash, OptimizerConfig, StrategyClass, DEFAULT_EPSILON,
};
use qgame_core::games::PayoffTable;
use qgame_core::protocol::{play, Mode, ProtocolConfig};
use qgame_core::strategies::{parse_profile, StrategyProfile};

use experiments::{ExperimentId, ExperimentOptions};
use report::Report;

#[derive(Parser)]
#[command(name = "qgame", version, about = "Multi-player quantum games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Play a profile and print the outcome distribution and payoffs.
    Run(GameArgs),
    /// Check whether a profile is an ε-Nash equilibrium (exit 1 if not).
    Verify {
        #[command(flatten)]
        game: GameArgs,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Search for one player's best unilateral deviation.
    BestResponse {
        #[command(flatten)]
        game: GameArgs,
        #[command(flatten)]
        search: SearchArgs,
        /// Deviating player, counted from 1.
        #[arg(long)]
        player: usize,
    },
    /// Rerun a catalogued experiment and print PASS/FAIL per check.
    Reproduce {
        experiment: ExperimentId,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 32)]
        restarts: usize,
        #[arg(long, default_value_t = DEFAULT_EPSILON)]
        epsilon: f64,
        /// Payoff table for the experiments that need one.
        #[arg(long)]
        table: Option<PathBuf>,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Args)]
struct GameArgs {
    /// `builtin:minority:N`, `builtin:pd[:T,R,P,S]` or a table file.
    #[arg(long)]
    game: String,
    /// Comma-separated strategies, e.g. `A,A,A,A` or `U(1,0,0,0),M(0.5)`.
    #[arg(long)]
    profile: String,
    #[arg(long, value_enum, default_value_t = ModeArg::Entangled)]
    mode: ModeArg,
    /// Skip `J†` (entangled) or the second flip layer (decoherent).
    #[arg(long)]
    no_final_gate: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long, value_enum, default_value_t = ClassArg::Channel)]
    class: ClassArg,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    #[arg(long, default_value_t = 32)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Also write the numeric results to this CSV file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Entangled,
    Decoherent,
    Classical,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassArg {
    Unitary,
    Channel,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Csv,
}

impl GameArgs {
    fn protocol(&self) -> ProtocolConfig {
        let mode = match self.mode {
            ModeArg::Entangled => Mode::Entangled,
            ModeArg::Decoherent => Mode::Decoherent,
            ModeArg::Classical => Mode::Classical,
        };
        ProtocolConfig {
            mode,
            apply_final_gate: !self.no_final_gate,
        }
    }

    fn load(&self) -> anyhow::Result<(PayoffTable, StrategyProfile)> {
        let table = spec::parse_game(&self.game)?;
        let profile = parse_profile(&self.profile, None)
            .with_context(|| format!("profile `{}`", self.profile))?;
        if profile.len() != table.n_players() {
            anyhow::bail!(
                "profile has {} strategies but the game has {} players",
                profile.len(),
                table.n_players()
            );
        }
        Ok((table, profile))
    }
}

impl SearchArgs {
    fn class(&self) -> StrategyClass {
        match self.class {
            ClassArg::Unitary => StrategyClass::Unitary,
            ClassArg::Channel => StrategyClass::Channel,
        }
    }

    fn optimizer(&self) -> OptimizerConfig {
        OptimizerConfig {
            restarts: self.restarts,
            rng_seed: self.seed,
            ..OptimizerConfig::default()
        }
    }
}

fn emit(report: &Report, output: &OutputArgs) -> anyhow::Result<()> {
    match output.format {
        Format::Text => print!("{}", report.to_text()),
        Format::Csv => report.write_csv(std::io::stdout().lock())?,
    }
    if let Some(path) = &output.out {
        report.save_csv(path)?;
    }
    std::io::stdout().flush()?;
    Ok(())
}

/// Returns whether the command's verdict was positive.
fn execute(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Run(game) => {
            let (table, profile) = game.load()?;
            let result = play(&table, &profile, game.protocol())?;
            let mut report = Report::default();
            // Drops rounding residue on outcomes that cannot occur.
            for (bits, p) in result.distribution.support(1e-15) {
                report.push("probability", bits, p);
            }
            for (p, x) in result.expected_payoffs.iter().enumerate() {
                report.push("payoff", format!("player {}", p + 1), *x);
            }
            emit(&report, &game.output)?;
            Ok(true)
        }
        Command::Verify { game, search } => {
            let (table, profile) = game.load()?;
            let nash = verify_nash(
                &table,
                &profile,
                search.class(),
                search.epsilon,
                &search.optimizer(),
                game.protocol(),
            )?;
            let mut report = Report::default();
            for p in &nash.players {
                let who = format!("player {}", p.player + 1);
                report.push(&who, "current", p.current);
                report.push(&who, "best response", p.best_response);
                report.push(&who, "improvement", p.improvement);
                report.push(&who, "strict", p.strict);
                report.push(&who, "best strategy", p.best_strategy.describe());
            }
            report.push("verdict", "class", nash.class.to_string());
            report.push("verdict", "epsilon", nash.epsilon);
            report.push("verdict", "max improvement", nash.max_improvement());
            report.push("verdict", "nash", nash.is_nash);
            emit(&report, &game.output)?;
            Ok(nash.is_nash)
        }
        Command::BestResponse {
            game,
            search,
            player,
        } => {
            let (table, profile) = game.load()?;
            if player == 0 || player > table.n_players() {
                anyhow::bail!("--player must be between 1 and {}", table.n_players());
            }
            let br = best_response(
                &table,
                &profile,
                player - 1,
                search.class(),
                &search.optimizer(),
                game.protocol(),
            )?;
            let mut report = Report::default();
            report.push("best response", "current", br.incumbent);
            report.push("best response", "value", br.value);
            report.push("best response", "improvement", br.improvement);
            report.push("best response", "strategy", br.strategy.describe());
            for (k, r) in br.restarts.iter().enumerate() {
                report.push("restart", format!("{k}"), r.value);
            }
            emit(&report, &game.output)?;
            Ok(true)
        }
        Command::Reproduce {
            experiment,
            seed,
            restarts,
            epsilon,
            table,
            output,
        } => {
            let opts = ExperimentOptions {
                seed,
                restarts,
                epsilon,
                table,
            };
            let report = experiments::run(experiment, &opts)?;
            emit(&report, &output)?;
            Ok(report.all_passed())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
