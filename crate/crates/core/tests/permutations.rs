//! Structural invariants of every shuffle strategy.

mod support;

use support::{check_permutation, permutation_suite, random_shot_ids};
use temporal_probe_core::perturb::{
    generate_permutation, shuffle_dissimilarity, Permutation, ShuffleSpec, SimilarityLevel,
    Strategy,
};
use temporal_probe_core::rng::seeded;

#[test]
fn flip() {
    permutation_suite(Strategy::Flip, 1000, 1).unwrap();
}

#[test]
fn fixed_segment() {
    permutation_suite(Strategy::FixedSegment, 1000, 2).unwrap();
}

#[test]
fn intra_shot() {
    permutation_suite(Strategy::IntraShot, 1000, 3).unwrap();
}

#[test]
fn neighbour_shot() {
    permutation_suite(Strategy::NeighbourShot, 1000, 4).unwrap();
}

#[test]
fn any_shot() {
    permutation_suite(Strategy::AnyShot, 1000, 5).unwrap();
}

#[test]
fn same_seed_same_permutation() {
    let ids = random_shot_ids(&mut seeded(9), 50);
    for s in Strategy::ALL {
        let spec = ShuffleSpec::new(s, 77);
        let a = generate_permutation(&spec, 50, Some(&ids)).unwrap();
        let b = generate_permutation(&spec, 50, Some(&ids)).unwrap();
        assert_eq!(a, b, "{s}");
    }
}

#[test]
fn checker_rejects_broken_structure() {
    // a frame crossing a shot boundary is not an intra-shot shuffle
    let ids = [0, 0, 1, 1];
    let spec = ShuffleSpec::new(Strategy::IntraShot, 0);
    let perm = Permutation::from_mapping(vec![0, 2, 1, 3]).unwrap();
    assert!(check_permutation(&spec, &perm, &ids).is_err());
    assert!(shuffle_dissimilarity(&perm, &ids, SimilarityLevel::Shot) < 100.0);
}
