//! Identities of the training and evaluation protocol.

mod support;

#[test]
fn augmentation_with_p_zero_is_bitwise_unshuffled() {
    assert_eq!(support::augmentation_p0_identity(11).unwrap(), 15);
}

#[test]
fn evaluation_is_independent_of_shuffle_config() {
    assert_eq!(support::evaluation_ignores_shuffle(12).unwrap(), 6);
}
