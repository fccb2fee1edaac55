//! Fixtures shared by the benchmarks in `benches/`.

use wsne_core::brouwer::{build_hpv_map, make_toy_map};
use wsne_core::exact::ratio;
use wsne_core::{BrouwerMap, EolInstance, ImitationGame, MixedProfile, ToySpec};

/// Normalized instance with the single line `0 → 1 → 3` on two bits.
pub fn three_vertex_line() -> EolInstance {
    EolInstance::gen_line_instance(2, &[0, 1, 3])
        .and_then(|i| i.normalize())
        .expect("valid line")
}

pub fn hpv_map(n: usize) -> BrouwerMap {
    let line: Vec<u64> = (0..n).map(|j| (1u64 << (j + 1)) - 1).collect();
    let mut words = vec![0];
    words.extend(line);
    let inst = EolInstance::gen_line_instance(n, &words)
        .and_then(|i| i.normalize())
        .expect("valid line");
    build_hpv_map(&inst).expect("normalized")
}

/// Imitation game of the constant map `c` in dimension `c.len()` at ε = 1/10 (k = 30).
pub fn constant_game(c: &[f64]) -> ImitationGame {
    let map = make_toy_map(ToySpec::Constant { c: c.to_vec() }).expect("inside the cube");
    ImitationGame::build(map, &ratio(1, 10)).expect("small k")
}

/// A profile mixing three adjacent actions for every player.
pub fn spread_profile(players: usize, centre: usize) -> MixedProfile {
    let s = vec![(centre - 1, ratio(1, 4)), (centre, ratio(1, 2)), (centre + 1, ratio(1, 4))];
    MixedProfile::new(vec![s; players]).expect("valid probabilities")
}
