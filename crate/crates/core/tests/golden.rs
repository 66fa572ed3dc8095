use std::path::PathBuf;

use procura::instances::gen_random_linear;
use procura::rng::Rng;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

#[test]
fn random_linear_snapshot() {
    let path = golden("random_linear_T3_D2_seed7.json");
    let text = gen_random_linear(3, 2, (0.0, 10.0), 7).unwrap().to_json() + "\n";
    if !path.exists() {
        std::fs::write(&path, &text).unwrap();
    }
    assert_eq!(std::fs::read_to_string(&path).unwrap(), text);
}

#[test]
fn uniform_draws_follow_the_documented_recipe() {
    let mut ours = Rng::new(7);
    let mut reference = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..1000 {
        let want = (reference.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        assert_eq!(ours.uniform().to_bits(), want.to_bits());
    }
}
