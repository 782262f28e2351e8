use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qgame_core::equilibria::{
    best_response, opponents_marginal, payoff_upper_bound, verify_nash, OptimizerConfig,
    StrategyClass, DEFAULT_EPSILON,
};
use qgame_core::games::{minority_table, PayoffTable};
use qgame_core::protocol::{final_state, play, ProtocolConfig};
use qgame_core::strategies::{
    named_strategy, random_channel, random_unitary, Quaternion, Strategy,
};

fn data(name: &str) -> PayoffTable {
    PayoffTable::load_file(format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

fn named(s: &str) -> Strategy {
    named_strategy(s).unwrap()
}

fn small() -> OptimizerConfig {
    OptimizerConfig {
        restarts: 6,
        max_iterations: 1500,
        ..OptimizerConfig::default()
    }
}

#[test]
fn channel_best_response_never_beats_the_bound() {
    let table = minority_table(4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for k in 0..50 {
        let profile: Vec<Strategy> = (0..4).map(|_| random_unitary(&mut rng)).collect();
        let player = k % 4;
        let bound = payoff_upper_bound(&table, &profile, player).unwrap();
        let cfg = OptimizerConfig {
            rng_seed: k as u64,
            ..small()
        };
        let br = best_response(
            &table,
            &profile,
            player,
            StrategyClass::Channel,
            &cfg,
            ProtocolConfig::default(),
        )
        .unwrap();
        assert!(
            br.value <= bound + 1e-6,
            "profile {k}: {} > {bound}",
            br.value
        );
        assert!(br.improvement >= -1e-9);
    }
}

#[test]
fn deviator_cannot_move_the_opponents_marginal() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for _ in 0..20 {
        let mut profile: Vec<Strategy> = (0..4).map(|_| random_unitary(&mut rng)).collect();
        let player = 2;
        let reference = opponents_marginal(&profile, player).unwrap();
        for deviation in [
            named("I"),
            random_unitary(&mut rng),
            random_channel(&mut rng),
        ] {
            profile[player] = deviation.clone();
            let mut unitary_rest = profile.clone();
            unitary_rest[player] = named("I");
            let pre = final_state(&unitary_rest, 4, true).unwrap().to_density();
            let moved = pre
                .apply_local_channel(&deviation.kraus_operators(), player)
                .unwrap();
            let got = moved.marginal_distribution(player).unwrap();
            for (a, b) in got.probabilities().iter().zip(reference.probabilities()) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-9);
            }
        }
    }
}

#[test]
fn channel_class_is_at_least_as_good_as_unitary_class() {
    let tables = [
        minority_table(3).unwrap(),
        minority_table(4).unwrap(),
        data("synthetic_dilemma3.game"),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    for k in 0..20 {
        let table = &tables[k % tables.len()];
        let n = table.n_players();
        let profile: Vec<Strategy> = (0..n).map(|_| random_unitary(&mut rng)).collect();
        let player = k % n;
        let cfg = small();
        let unitary = best_response(
            table,
            &profile,
            player,
            StrategyClass::Unitary,
            &cfg,
            ProtocolConfig::default(),
        )
        .unwrap();
        let channel = best_response(
            table,
            &profile,
            player,
            StrategyClass::Channel,
            &cfg,
            ProtocolConfig::default(),
        )
        .unwrap();
        assert!(
            channel.value >= unitary.value - 1e-6,
            "instance {k}: {} < {}",
            channel.value,
            unitary.value
        );
    }
}

#[test]
fn same_seed_same_report() {
    let table = data("synthetic_dilemma3.game");
    let profile = vec![named("A"), named("H"), named("F")];
    let cfg = OptimizerConfig {
        rng_seed: 77,
        ..small()
    };
    let run = || {
        verify_nash(
            &table,
            &profile,
            StrategyClass::Channel,
            DEFAULT_EPSILON,
            &cfg,
            ProtocolConfig::default(),
        )
        .unwrap()
    };
    assert_eq!(run(), run());
}

#[test]
fn reported_value_matches_simulator() {
    let table = minority_table(3).unwrap();
    let profile = vec![named("H"), named("A"), named("I")];
    let br = best_response(
        &table,
        &profile,
        0,
        StrategyClass::Channel,
        &small(),
        ProtocolConfig::default(),
    )
    .unwrap();
    let mut deviated = profile.clone();
    deviated[0] = br.strategy.clone();
    let direct = play(&table, &deviated, ProtocolConfig::default())
        .unwrap()
        .expected_payoffs[0];
    assert_eq!(br.value, direct);
    assert_eq!(br.restarts.len(), small().restarts);
}

#[test]
fn dilemma_fixture_equilibrium() {
    let table = data("synthetic_dilemma3.game");
    for p in 0..3 {
        assert_eq!(table.dominant_action(p).unwrap(), Some(1));
    }
    assert_eq!(table.payoffs(0b111), &[2.0, 2.0, 2.0]);
    let profile = vec![named("I"), named("H"), named("F")];
    let got = play(&table, &profile, ProtocolConfig::default()).unwrap();
    assert_abs_diff_eq!(
        got.distribution.prob_of("011").unwrap(),
        0.5,
        epsilon = 1e-12
    );
    assert_abs_diff_eq!(
        got.distribution.prob_of("110").unwrap(),
        0.5,
        epsilon = 1e-12
    );
    for (x, y) in got.expected_payoffs.iter().zip([5.0, 9.0, 5.0]) {
        assert_abs_diff_eq!(*x, y, epsilon = 1e-9);
    }
    let report = verify_nash(
        &table,
        &profile,
        StrategyClass::Channel,
        DEFAULT_EPSILON,
        &OptimizerConfig::default(),
        ProtocolConfig::default(),
    )
    .unwrap();
    assert!(report.is_nash, "{report:?}");
    assert!(report.players[0].strict && report.players[2].strict);
}

#[test]
fn iy_deviation_from_all_flip_lands_on_all_zero() {
    let table = data("synthetic_fig2c.game");
    for p in 0..3 {
        let mut profile = vec![named("F"); 3];
        profile[p] = named("IY");
        let got = play(&table, &profile, ProtocolConfig::default()).unwrap();
        assert_abs_diff_eq!(
            got.distribution.prob_of("000").unwrap(),
            1.0,
            epsilon = 1e-12
        );
    }
    let report = verify_nash(
        &table,
        &vec![named("F"); 3],
        StrategyClass::Unitary,
        DEFAULT_EPSILON,
        &small(),
        ProtocolConfig::default(),
    )
    .unwrap();
    assert!(!report.is_nash);
}

#[test]
fn indifferent_player_is_not_strict() {
    let table = PayoffTable::constant(3, 1.0).unwrap();
    let profile = vec![named("A"); 3];
    let report = verify_nash(
        &table,
        &profile,
        StrategyClass::Unitary,
        DEFAULT_EPSILON,
        &small(),
        ProtocolConfig::default(),
    )
    .unwrap();
    assert!(report.is_nash);
    assert!(report.players.iter().all(|p| !p.strict));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn incumbent_floor(seed in any::<u64>(), player in 0usize..3) {
        let table = minority_table(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let profile: Vec<Strategy> = (0..3).map(|_| Strategy::Unitary(Quaternion::random(&mut rng).to_matrix())).collect();
        let cfg = OptimizerConfig { restarts: 2, max_iterations: 300, rng_seed: seed, ..OptimizerConfig::default() };
        let br = best_response(&table, &profile, player, StrategyClass::Unitary, &cfg, ProtocolConfig::default()).unwrap();
        prop_assert!(br.improvement >= -1e-9);
    }

    #[test]
    fn flip_symmetric_bound_holds_for_sampled_channels(seed in any::<u64>()) {
        let table = minority_table(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut profile: Vec<Strategy> = (0..4).map(|_| random_unitary(&mut rng)).collect();
        let bound = payoff_upper_bound(&table, &profile, 1).unwrap();
        profile[1] = random_channel(&mut rng);
        let got = play(&table, &profile, ProtocolConfig::default()).unwrap().expected_payoffs[1];
        prop_assert!(got <= bound + 1e-12);
    }
}
