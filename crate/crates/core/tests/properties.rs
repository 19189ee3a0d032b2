use dda_core::baselines::{
    ladder_update, level_to_archetype, lstmfc_act, lstmfc_embed, DifficultyLevel, LstmFcParams, MatchOutcome,
};
use dda_core::eval::compute_possession;
use dda_core::live::{parse_client_message, ClientMessage};
use dda_core::meta::MetaConfig;
use dda_core::nn::{mlp_predict, ParamVector};
use dda_core::players::{sample_archetype, ArchetypeRanges, ScriptedPlayer};
use dda_core::rink::{Action, GameState, Observation, RinkConfig, Side};
use dda_core::trajectory::Trajectory;
use proptest::prelude::*;
use proptest::test_runner::RngSeed;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, rng_seed: RngSeed::Fixed(0x5eed), failure_persistence: None, ..ProptestConfig::default() }
}

fn action() -> impl Strategy<Value = Action> {
    (-1.5f64..1.5, -1.5f64..1.5).prop_map(|(x, y)| Action::new(x, y))
}

/// Plays the given action pairs from the opening position.
fn play(actions: &[(Action, Action)], rink: &RinkConfig) -> Vec<GameState> {
    let mut state = GameState::reset(rink).unwrap();
    let mut out = Vec::with_capacity(actions.len());
    for &(a, b) in actions {
        state = state.step(a, b, rink).unwrap().0;
        out.push(state);
    }
    out
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn bodies_stay_on_their_side_of_the_table(actions in prop::collection::vec((action(), action()), 1..400)) {
        let rink = RinkConfig::default();
        let eps = 1e-12;
        for s in play(&actions, &rink) {
            prop_assert!(s.is_finite());
            let (pr, sr) = (rink.puck_radius, rink.striker_radius);
            prop_assert!(s.puck.pos.x >= pr - eps && s.puck.pos.x <= rink.width - pr + eps);
            prop_assert!(s.puck.pos.y >= pr - eps && s.puck.pos.y <= rink.length - pr + eps);
            prop_assert!(s.puck.vel.length() <= rink.v_max_puck + eps);
            for (striker, lo, hi) in [
                (s.striker_a, sr, rink.midline() - sr),
                (s.striker_b, rink.midline() + sr, rink.length - sr),
            ] {
                prop_assert!(striker.pos.x >= sr - eps && striker.pos.x <= rink.width - sr + eps);
                prop_assert!(striker.pos.y >= lo - eps && striker.pos.y <= hi + eps);
                prop_assert!(striker.vel.length() <= rink.v_max_striker + eps);
            }
            for v in s.observe(Side::A, &rink).0.iter().chain(s.observe(Side::B, &rink).0.iter()) {
                prop_assert!((-1.0..=1.0).contains(v), "observation component {v}");
            }
        }
    }

    #[test]
    fn stepping_is_deterministic(actions in prop::collection::vec((action(), action()), 1..200)) {
        let rink = RinkConfig::default();
        prop_assert_eq!(play(&actions, &rink), play(&actions, &rink));
    }

    #[test]
    fn mirrored_play_mirrors_the_outcome(actions in prop::collection::vec((action(), action()), 1..120)) {
        // Swapping the two players' inputs on the rotated table reproduces
        // the rotated trajectory, up to rounding in the rotation itself.
        let rink = RinkConfig::default();
        let mut state = GameState::reset(&rink).unwrap();
        let mut mirror = state.mirrored(&rink);
        for &(a, b) in &actions {
            state = state.step(a, b, &rink).unwrap().0;
            mirror = mirror.step(b, a, &rink).unwrap().0;
            let expected = state.mirrored(&rink);
            for (x, y) in [
                (expected.puck, mirror.puck),
                (expected.striker_a, mirror.striker_a),
                (expected.striker_b, mirror.striker_b),
            ] {
                prop_assert!((x.pos - y.pos).length() < 1e-6 && (x.vel - y.vel).length() < 1e-6);
            }
            prop_assert_eq!((expected.score_a, expected.score_b), (mirror.score_a, mirror.score_b));
            let (obs_a, obs_b) = (state.observe(Side::A, &rink), mirror.observe(Side::B, &rink));
            for (u, v) in obs_a.0.iter().zip(obs_b.0.iter()) {
                prop_assert!((u - v).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn ladder_level_moves_one_step_within_bounds(start in 1u8..=9, outcomes in prop::collection::vec(0u8..3, 0..60)) {
        let mut level = DifficultyLevel::new(start).unwrap();
        for o in outcomes {
            let outcome = [MatchOutcome::PlayerWin, MatchOutcome::PlayerLoss, MatchOutcome::Draw][o as usize];
            let next = ladder_update(level, outcome);
            prop_assert!((1..=9).contains(&next.get()));
            prop_assert!(next.get().abs_diff(level.get()) <= 1);
            if outcome == MatchOutcome::Draw {
                prop_assert_eq!(next, level);
            }
            level = next;
        }
    }

    #[test]
    fn scripted_actions_stay_in_the_unit_disk(seed in any::<u64>(), actions in prop::collection::vec((action(), action()), 1..150)) {
        let rink = RinkConfig::default();
        let archetype = sample_archetype(seed, &ArchetypeRanges::default()).unwrap();
        let mut player = ScriptedPlayer::new(archetype, rink, seed);
        for s in play(&actions, &rink) {
            let a = player.act(&s.observe(Side::A, &rink));
            prop_assert!(a.is_finite() && a.x.hypot(a.y) <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn possession_and_its_complement_partition_time(ys in prop::collection::vec(0.0f64..2.0, 1..300)) {
        let rink = RinkConfig::default();
        let a = compute_possession(&ys, &rink).unwrap();
        let b_ticks = ys.iter().filter(|&&y| y >= rink.midline()).count();
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!((a + b_ticks as f64 / ys.len() as f64 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_client_text_never_yields_out_of_range_input(text in ".{0,80}", x in -3.0f64..3.0, y in -3.0f64..3.0) {
        let _ = parse_client_message(&text);
        let msg = format!(r#"{{"type":"input","tick":1,"target":[{x},{y}]}}"#);
        match parse_client_message(&msg) {
            Ok(ClientMessage::Input { target, .. }) => prop_assert!(target.iter().all(|v| (-1.0..=1.0).contains(v))),
            Ok(other) => prop_assert!(false, "parsed as {:?}", other),
            Err(_) => prop_assert!(x.abs() > 1.0 || y.abs() > 1.0),
        }
    }
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn policy_outputs_are_bounded(seed in any::<u64>(), obs in prop::array::uniform8(-1.0f64..1.0)) {
        let layout = MetaConfig::default().policy_layout().unwrap();
        let out = mlp_predict(&ParamVector::init(&layout, seed), &obs).unwrap();
        prop_assert_eq!(out.len(), 2);
        prop_assert!(out.iter().all(|v| (-1.0..=1.0).contains(v)));

        let params = LstmFcParams::init(seed);
        let mut demo = Trajectory::new("p", seed);
        for i in 0..8 {
            demo.push(Observation(obs.map(|v| v * (i as f64 / 8.0))), Action::new(obs[0], obs[1]));
        }
        let embedding = lstmfc_embed(&params, &demo).unwrap();
        let a = lstmfc_act(&params, &embedding, &Observation(obs)).unwrap();
        prop_assert!((-1.0..=1.0).contains(&a.x) && (-1.0..=1.0).contains(&a.y));
    }

    #[test]
    fn preset_levels_interpolate_monotonically(level in 1u8..9) {
        let lo = level_to_archetype(DifficultyLevel::new(level).unwrap());
        let hi = level_to_archetype(DifficultyLevel::new(level + 1).unwrap());
        prop_assert!(hi.max_speed_frac >= lo.max_speed_frac);
        prop_assert!(hi.reaction_delay_steps <= lo.reaction_delay_steps);
        prop_assert!(hi.aim_noise_std <= lo.aim_noise_std);
        prop_assert!(hi.aggression >= lo.aggression);
    }
}
