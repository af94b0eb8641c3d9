use proptest::prelude::*;
use provseg::bloom::{
    expected_lit_count, false_positive_probability, hash_indices, BloomFilter, BloomParams,
    ProvenanceKey,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Straight SipHash-2-4 (64-bit output), written independently of the
/// crate's hasher.
fn siphash24(k0: u64, k1: u64, msg: &[u8]) -> u64 {
    let mut v0 = 0x736f6d6570736575u64 ^ k0;
    let mut v1 = 0x646f72616e646f6du64 ^ k1;
    let mut v2 = 0x6c7967656e657261u64 ^ k0;
    let mut v3 = 0x7465646279746573u64 ^ k1;

    fn round(v0: &mut u64, v1: &mut u64, v2: &mut u64, v3: &mut u64) {
        *v0 = v0.wrapping_add(*v1);
        *v1 = v1.rotate_left(13);
        *v1 ^= *v0;
        *v0 = v0.rotate_left(32);
        *v2 = v2.wrapping_add(*v3);
        *v3 = v3.rotate_left(16);
        *v3 ^= *v2;
        *v0 = v0.wrapping_add(*v3);
        *v3 = v3.rotate_left(21);
        *v3 ^= *v0;
        *v2 = v2.wrapping_add(*v1);
        *v1 = v1.rotate_left(17);
        *v1 ^= *v2;
        *v2 = v2.rotate_left(32);
    }

    let full = msg.len() / 8;
    for i in 0..full {
        let m = u64::from_le_bytes(msg[i * 8..i * 8 + 8].try_into().unwrap());
        v3 ^= m;
        round(&mut v0, &mut v1, &mut v2, &mut v3);
        round(&mut v0, &mut v1, &mut v2, &mut v3);
        v0 ^= m;
    }
    let mut last = (msg.len() as u64 & 0xff) << 56;
    for (i, b) in msg[full * 8..].iter().enumerate() {
        last |= (*b as u64) << (8 * i);
    }
    v3 ^= last;
    round(&mut v0, &mut v1, &mut v2, &mut v3);
    round(&mut v0, &mut v1, &mut v2, &mut v3);
    v0 ^= last;
    v2 ^= 0xff;
    for _ in 0..4 {
        round(&mut v0, &mut v1, &mut v2, &mut v3);
    }
    v0 ^ v1 ^ v2 ^ v3
}

fn reference_indices(m: usize, k: usize, seed: u64, key: &ProvenanceKey) -> Vec<usize> {
    (0..k as u64)
        .map(|j| (siphash24(seed, j, &key.to_bytes()) % m as u64) as usize)
        .collect()
}

#[test]
fn reference_siphash_matches_published_vectors() {
    // key 00..0f; messages 00.. of length 0 and 15
    let k0 = u64::from_le_bytes([0, 1, 2, 3, 4, 5, 6, 7]);
    let k1 = u64::from_le_bytes([8, 9, 10, 11, 12, 13, 14, 15]);
    assert_eq!(siphash24(k0, k1, &[]), 0x726fdb47dd0e0e31);
    let msg: Vec<u8> = (0..15).collect();
    assert_eq!(siphash24(k0, k1, &msg), 0xa129ca6149be45e5);
}

#[test]
fn golden_indices_for_vehicle_3_segment_2() {
    let params = BloomParams::new(100, 8, 0).unwrap();
    let key = ProvenanceKey::new(3, 2);
    let got = hash_indices(&params, &key);
    assert_eq!(got, reference_indices(100, 8, 0, &key));
    assert_eq!(got, GOLDEN_M100_K8_SEED0_V3_S2);
}

const GOLDEN_M100_K8_SEED0_V3_S2: [usize; 8] = [3, 13, 25, 33, 8, 36, 61, 56];

#[test]
fn indices_agree_with_reference_hash() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..2000 {
        let m = rng.gen_range(1..600);
        let k = rng.gen_range(1..=m.min(16));
        let seed = rng.gen();
        let key = ProvenanceKey::new(rng.gen(), rng.gen());
        let params = BloomParams::new(m, k, seed).unwrap();
        assert_eq!(
            hash_indices(&params, &key),
            reference_indices(m, k, seed, &key)
        );
    }
}

#[test]
fn fpp_formula_value_and_monotonicity() {
    let p = BloomParams::new(100, 8, 0).unwrap();
    let five = false_positive_probability(&p, 5);
    let by_hand = (1.0 - 0.99f64.powi(40)).powi(8);
    assert!((five - by_hand).abs() < 1e-15);
    let mut last = 0.0;
    for n in 0..50 {
        let v = false_positive_probability(&p, n);
        assert!(v >= last && v <= 1.0);
        last = v;
    }
}

#[test]
fn single_insert_has_no_false_positives_over_10k_non_keys() {
    let params = BloomParams::new(100, 8, 0).unwrap();
    let mut f = BloomFilter::new(params);
    let key = ProvenanceKey::new(3, 2);
    f.insert(&key);
    // brute-force estimate: at most 8 lit bits, so (8/100)^8 per query
    let bound = (f.lit_count() as f64 / 100.0).powi(8);
    assert!(bound < 2e-9);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut positives = 0;
    let mut tried = 0;
    while tried < 10_000 {
        let other = ProvenanceKey::new(rng.gen(), rng.gen());
        if other == key {
            continue;
        }
        tried += 1;
        positives += f.query(&other) as usize;
    }
    assert_eq!(positives, 0);
}

#[test]
fn sampled_false_positive_rate_tracks_lit_fraction() {
    // conditional on the filter, a random non-key is positive w.p. (lit/m)^k
    let params = BloomParams::new(100, 3, 9).unwrap();
    let mut f = BloomFilter::new(params);
    for v in 0..20 {
        f.insert(&ProvenanceKey::new(v, 0));
    }
    let q = (f.lit_count() as f64 / 100.0).powi(3);
    let n = 200_000;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let hits = (0..n)
        .filter(|_| {
            f.query(&ProvenanceKey::new(
                rng.gen_range(1000..u32::MAX),
                rng.gen(),
            ))
        })
        .count();
    let rate = hits as f64 / n as f64;
    let sigma = (q * (1.0 - q) / n as f64).sqrt();
    assert!((rate - q).abs() < 4.0 * sigma, "rate {rate} vs {q}");
}

#[test]
fn lit_count_matches_occupancy_formula() {
    // mean lit bits after j inserts vs m(1-(1-1/m)^{jk}), within 3 standard errors
    let trials = 10_000;
    for (m, k, j) in [
        (100usize, 8usize, 1usize),
        (100, 8, 5),
        (150, 8, 3),
        (64, 4, 10),
    ] {
        let params = BloomParams::new(m, k, 17).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64((m * 31 + j) as u64);
        let samples: Vec<f64> = (0..trials)
            .map(|_| {
                let mut f = BloomFilter::new(params);
                for _ in 0..j {
                    f.insert(&ProvenanceKey::new(rng.gen(), rng.gen()));
                }
                f.lit_count() as f64
            })
            .collect();
        let mean = samples.iter().sum::<f64>() / trials as f64;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (trials as f64 - 1.0);
        let se = (var / trials as f64).sqrt();
        let want = expected_lit_count(&params, j);
        assert!(
            (mean - want).abs() < 3.0 * se,
            "m={m} k={k} j={j}: mean {mean} vs {want} (se {se})"
        );
    }
}

fn arb_key() -> impl Strategy<Value = ProvenanceKey> {
    (any::<u32>(), any::<u16>()).prop_map(|(v, s)| ProvenanceKey::new(v, s))
}

proptest! {
    #[test]
    fn no_false_negatives(
        m in 1usize..400,
        k_frac in 0.0f64..1.0,
        seed in any::<u64>(),
        keys in prop::collection::vec(arb_key(), 0..40),
    ) {
        let k = 1 + ((m.min(16) - 1) as f64 * k_frac) as usize;
        let mut f = BloomFilter::new(BloomParams::new(m, k, seed).unwrap());
        for key in &keys {
            f.insert(key);
        }
        for key in &keys {
            prop_assert!(f.query(key));
        }
        prop_assert!(f.lit_count() <= keys.len() * k);
    }

    #[test]
    fn insert_order_does_not_matter(
        seed in any::<u64>(),
        keys in prop::collection::vec(arb_key(), 1..20),
        shuffle_seed in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        let params = BloomParams::new(100, 8, seed).unwrap();
        let mut a = BloomFilter::new(params);
        for key in &keys {
            a.insert(key);
        }
        let mut shuffled = keys.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle_seed));
        let mut b = BloomFilter::new(params);
        for key in &shuffled {
            b.insert(key);
        }
        prop_assert_eq!(a, b);
    }

    #[test]
    fn serialization_round_trips(
        m in 1usize..300,
        seed in any::<u64>(),
        keys in prop::collection::vec(arb_key(), 0..30),
    ) {
        let params = BloomParams::new(m, 1, seed).unwrap();
        let mut f = BloomFilter::new(params);
        for key in &keys {
            f.insert(key);
        }
        let bytes = f.to_bytes();
        prop_assert_eq!(bytes.len(), m.div_ceil(8));
        prop_assert_eq!(BloomFilter::from_bytes(params, &bytes).unwrap(), f);
    }
}
