use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use narratekg::index::{
    build_index, deserialize_index, serialize_index, BloomFilter, BuildOptions, CodecError, Positive,
};

const ATTRS: [&str; 3] = ["is_aggressor", "is_enemy", "was_illegal"];
const VIEWS: [&str; 3] = ["US", "UK", "RU"];

fn set(xs: &[&str]) -> BTreeSet<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

fn positive() -> impl Strategy<Value = Positive> {
    (proptest::sample::select(ATTRS.to_vec()), proptest::sample::select(VIEWS.to_vec()), "[A-Za-z]{1,12}")
        .prop_map(|(a, v, p)| Positive::new(a, v, p))
}

proptest! {
    #[test]
    fn every_inserted_positive_may_hold(
        ps in proptest::collection::vec(positive(), 0..300),
        fpr in 0.001f64..0.5,
        seed in any::<u64>(),
    ) {
        let opts = BuildOptions { target_fpr: fpr, seed, ..BuildOptions::default() };
        let index = build_index(ps.clone(), &set(&ATTRS), &set(&VIEWS), &opts).unwrap();
        for p in &ps {
            prop_assert!(index.may_hold(&p.attribution, &p.participant, None));
            prop_assert!(index.may_hold(&p.attribution, &p.participant, Some(&p.viewpoint)));
        }
        let decoded = deserialize_index(&serialize_index(&index)).unwrap();
        prop_assert_eq!(&decoded, &index);
    }

    #[test]
    fn bloom_has_no_false_negatives(items in proptest::collection::btree_set(proptest::collection::vec(any::<u8>(), 0..24), 0..500), seed in any::<u64>()) {
        let mut f = BloomFilter::with_rate(items.len().max(1) as u64, 0.01, seed);
        for i in &items {
            f.insert(i);
        }
        for i in &items {
            prop_assert!(f.contains(i));
        }
    }

    #[test]
    fn corrupted_index_bytes_are_rejected_or_decode(bytes in proptest::collection::vec(any::<u8>(), 0..256)) {
        let _ = deserialize_index(&bytes);
    }
}

#[test]
fn decoded_index_answers_every_probe_identically() {
    let mut rng = StdRng::seed_from_u64(7);
    let names: Vec<String> = (0..200).map(|i| format!("Entity{i}")).collect();
    let ps: Vec<Positive> = (0..400)
        .map(|_| {
            Positive::new(ATTRS[rng.gen_range(0..3)], VIEWS[rng.gen_range(0..3)], names[rng.gen_range(0..100)].clone())
        })
        .collect();
    let index = build_index(ps, &set(&ATTRS), &set(&VIEWS), &BuildOptions::default()).unwrap();
    let decoded = deserialize_index(&serialize_index(&index)).unwrap();
    for _ in 0..1000 {
        let a = ["is_aggressor", "is_enemy", "was_illegal", "is_threat"][rng.gen_range(0..4)];
        let v = ["US", "UK", "RU", "FR"][rng.gen_range(0..4)];
        let p = &names[rng.gen_range(0..200)];
        assert_eq!(index.may_hold(a, p, None), decoded.may_hold(a, p, None));
        assert_eq!(index.may_hold(a, p, Some(v)), decoded.may_hold(a, p, Some(v)));
    }
}

#[test]
fn flipped_bits_fail_the_checksum() {
    let index =
        build_index([Positive::new("is_enemy", "US", "Russia")], &set(&ATTRS), &set(&VIEWS), &BuildOptions::default())
            .unwrap();
    let bytes = serialize_index(&index);
    for i in 0..bytes.len() {
        let mut b = bytes.clone();
        b[i] ^= 0x40;
        assert!(deserialize_index(&b).is_err(), "flip at byte {i} went unnoticed");
    }
    assert_eq!(deserialize_index(&bytes[..3]), Err(CodecError::TooShort(3)));
}

#[test]
fn false_positive_rate_stays_near_target() {
    let mut f = BloomFilter::with_rate(100_000, 0.01, 42);
    for i in 0..100_000u64 {
        f.insert(format!("present-{i}").as_bytes());
    }
    assert!((0..100_000u64).all(|i| f.contains(format!("present-{i}").as_bytes())));
    let hits = (0..100_000u64).filter(|i| f.contains(format!("absent-{i}").as_bytes())).count();
    let fpr = hits as f64 / 1e5;
    assert!(fpr <= 0.02, "observed {fpr}");
}
