mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wsne_core::brouwer::{build_hpv_map, lipschitz_estimate, make_toy_map, ToySpec};
use wsne_core::end_of_line::DEFAULT_LIMIT;
use wsne_core::exact::{self, ratio};
use wsne_core::formats;
use wsne_core::imitation::{moments, ImitationGame, MixedProfile};
use wsne_core::solve::{self, find_fixed_points_grid, find_pure_nash, roundtrip, Grid, RoundTripParams};
use wsne_core::verify::{verify_ane, verify_fixed_point, verify_wsne, Game, Mode};
use wsne_core::{EolInstance, EolSolution, Point, SolutionKind};

#[test]
fn three_vertex_line_round_trip() {
    let inst = EolInstance::gen_line_instance(2, &[0b00, 0b01, 0b11]).unwrap();
    let report = roundtrip(&inst, &RoundTripParams::default()).unwrap();
    let end = EolSolution {
        x: 0b11,
        kind: SolutionKind::EndOfLine,
    };
    assert_eq!(report.expected, vec![end]);
    assert_eq!(report.decoded, vec![end]);
    assert!(report.agrees(), "{report}");
    assert!(report.to_string().ends_with("agree true\n"));
}

#[test]
fn two_line_round_trip_finds_both_ends_and_the_extra_start() {
    let inst = EolInstance::from_lines(3, &[vec![0, 1, 3], vec![4, 6, 7, 5]], &[]).unwrap();
    let params = RoundTripParams {
        window: Some(true),
        ..RoundTripParams::default()
    };
    let report = roundtrip(&inst, &params).unwrap();
    assert_eq!(report.decoded, common::line_oracle(&[vec![0, 1, 3], vec![4, 6, 7, 5]]));
    assert_eq!(report.decoded.len(), 3);
    assert!(report.agrees(), "{report}");
}

#[test]
fn hpv_grid_hits_stay_in_zero_regions() {
    let inst = EolInstance::gen_line_instance(1, &[0, 1]).unwrap().normalize().unwrap();
    let map = build_hpv_map(&inst).unwrap();
    let eps = map.displacement_floor() / 2.0;
    let hits = find_fixed_points_grid(&map, &Grid::full(4, 64), eps, solve::DEFAULT_BUDGET).unwrap();
    assert!(!hits.is_empty());
    assert!(hits.iter().all(|p| map.in_zero_region(p.coords())));
    // one end, and the home start gives no zero
    assert_eq!(map.zero_regions().len(), 1);
    for z in map.zero_regions() {
        assert!(hits.iter().any(|p| z.contains(p.coords())));
    }
}

#[test]
fn hpv_lipschitz_sampling_at_small_scale() {
    let inst = EolInstance::gen_line_instance(1, &[0, 1]).unwrap().normalize().unwrap();
    let map = build_hpv_map(&inst).unwrap();
    let est = lipschitz_estimate(&map, 1_000_000, 1e-3, 11);
    assert!(est > 0.0);
    assert!(est <= map.displacement_lipschitz(), "{est}");
}

#[test]
fn constant_map_extraction_from_enumerated_pure_equilibria() {
    let c = [0.314, 0.159];
    let game = ImitationGame::build(make_toy_map(ToySpec::Constant { c: c.to_vec() }).unwrap(), &ratio(1, 10)).unwrap();
    assert_eq!(game.k(), 30);
    let tol = game.wsne_tolerance_f64();
    let found = find_pure_nash(&game, tol, solve::DEFAULT_BUDGET).unwrap();
    assert!(!found.is_empty());
    for actions in &found {
        let profile = MixedProfile::pure(actions);
        assert!(verify_wsne(&game, &profile, tol, &Mode::default()).unwrap().verdict);
        let ex = game.extract_fixed_point(&profile, 1_000_000).unwrap();
        for (a, ci) in ex.alpha.coords().iter().zip(c) {
            assert!((a - ci).abs() <= 1.0 / 30.0 + 1e-12, "{a} vs {ci}");
        }
        assert!(ex.residual <= ex.bound);
    }
}

fn random_profile(game: &ImitationGame, rng: &mut ChaCha8Rng) -> MixedProfile {
    let k = game.k() as usize;
    let players = (0..game.num_players())
        .map(|_| {
            let size = rng.gen_range(1..=3);
            let mut actions: Vec<usize> = (0..size).map(|_| rng.gen_range(0..=k)).collect();
            actions.sort();
            actions.dedup();
            let weights: Vec<i64> = actions.iter().map(|_| rng.gen_range(1..10)).collect();
            let total: i64 = weights.iter().sum();
            actions.into_iter().zip(weights).map(|(a, w)| (a, ratio(w, total))).collect()
        })
        .collect();
    MixedProfile::new(players).unwrap()
}

#[test]
fn first_group_expectation_decomposes() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let game = ImitationGame::build(make_toy_map(ToySpec::Reversal { d: 2 }).unwrap(), &ratio(1, 2)).unwrap();
    for _ in 0..50 {
        let profile = random_profile(&game, &mut rng);
        for i in 0..game.dim() {
            let enumerated = solve_enumerated(&game, i, &profile);
            let dist = profile
                .support(game.dim() + i)
                .iter()
                .map(|(b, p)| (exact::to_f64(p), game.grid_value(*b)));
            let (mean, var) = moments(dist);
            for (a, e) in enumerated.iter().enumerate() {
                let x = game.grid_value(a);
                let closed = -(x - mean) * (x - mean) - var;
                assert!((e - closed).abs() <= 1e-12, "{e} vs {closed}");
            }
        }
    }
}

fn solve_enumerated(game: &ImitationGame, player: usize, profile: &MixedProfile) -> Vec<f64> {
    wsne_core::verify::enumerate_action_payoffs(game, player, profile, 1_000_000).unwrap()
}

#[test]
fn certified_equilibria_satisfy_support_and_chain_bounds() {
    let specs = [
        ToySpec::Identity { d: 1 },
        ToySpec::Constant { c: vec![0.62] },
        ToySpec::Affine {
            a: vec![vec![0.5]],
            b: vec![0.1],
        },
        ToySpec::Reversal { d: 1 },
    ];
    for spec in specs {
        for k in [4u64, 6, 10] {
            let map = make_toy_map(spec.clone()).unwrap();
            let m = exact::from_f64(map.lipschitz_bound()).unwrap();
            let game = ImitationGame::with_k(map, (exact::int(3) + m) / exact::int(k as i64), k).unwrap();
            let tol = game.wsne_tolerance_f64();
            for actions in find_pure_nash(&game, tol, solve::DEFAULT_BUDGET).unwrap() {
                let ex = game.extract_fixed_point(&MixedProfile::pure(&actions), 1_000_000).unwrap();
                let kf = k as f64;
                assert!(ex.supports_in_window, "{spec:?} k={k} {actions:?}");
                assert!(ex.chain_alpha_beta <= 2.0 / kf + 1e-12);
                assert!(ex.chain_beta_f <= (1.0 + game.map().lipschitz_bound()) / kf + 1e-12);
                assert!(ex.residual <= ex.bound);
            }
        }
    }
}

#[test]
fn artifacts_survive_text_round_trips_and_verify_alike() {
    let inst = EolInstance::gen_line_instance(1, &[0, 1]).unwrap();
    let inst = formats::parse_instance(&formats::write_instance(&inst)).unwrap();
    let map = build_hpv_map(&inst.normalize().unwrap()).unwrap();
    let text = formats::write_map(&map);
    let back = formats::parse_map(&text).unwrap();
    assert_eq!(formats::write_map(&back), text);
    let centre = map.zero_regions()[0].centre();
    assert!(verify_fixed_point(&back, &centre, 0.0).unwrap().verdict);
    let ambient = Point(vec![0.9, 0.9, 0.9, 0.05]);
    assert_eq!(verify_fixed_point(&back, &ambient, 1.0).unwrap().residual, 1.0 / 16.0);

    let game = ImitationGame::build(make_toy_map(ToySpec::Reversal { d: 1 }).unwrap(), &ratio(2, 5)).unwrap();
    let game2 = formats::parse_game(&formats::write_game(&game)).unwrap();
    assert_eq!(game2.k(), game.k());
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..20 {
        let p = random_profile(&game, &mut rng);
        let p2 = formats::parse_profile(&formats::write_profile(&p)).unwrap();
        for eps in [0.0, 0.01, 0.1] {
            let a = verify_wsne(&game, &p, eps, &Mode::default()).unwrap();
            let b = verify_wsne(&game2, &p2, eps, &Mode::default()).unwrap();
            assert_eq!(a, b);
            assert!(!a.verdict || verify_ane(&game, &p, eps, &Mode::default()).unwrap().verdict);
        }
    }
}

#[test]
fn bruteforce_and_paths_agree_up_to_four_bits() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for n in 1..=4 {
        for _ in 0..6 {
            let (inst, expected) = common::random_instance(n, &mut rng);
            let norm = inst.normalize().unwrap();
            let paths = wsne_core::embed::enumerate_all_paths(&norm, DEFAULT_LIMIT).unwrap();
            let mut from_paths: Vec<EolSolution> = paths
                .nontrivial_endpoints()
                .into_iter()
                .map(|(p, is_start)| EolSolution {
                    x: p.u,
                    kind: if is_start {
                        SolutionKind::StartOfLine
                    } else {
                        SolutionKind::EndOfLine
                    },
                })
                .collect();
            from_paths.sort();
            assert_eq!(from_paths, expected);
        }
    }
}
