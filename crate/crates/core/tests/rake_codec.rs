use proptest::prelude::*;
use provseg::rake::{
    compress, compressed_len, decompress, sweep_rake_param, sweep_rake_param_with, CompressedBits,
    RakeError, RakeParams,
};
use provseg::BitString;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn from_u32(value: u32, len: usize) -> BitString {
    (0..len)
        .map(|i| (value >> (len - 1 - i)) & 1 == 1)
        .collect()
}

fn random_bits(rng: &mut impl Rng, len: usize, density: f64) -> BitString {
    (0..len).map(|_| rng.gen_bool(density)).collect()
}

#[test]
fn exhaustive_round_trip_up_to_16_bits() {
    for r in 1..=3u8 {
        let p = RakeParams::new(r).unwrap();
        for len in 1..=16usize {
            for value in 0..(1u32 << len) {
                let input = from_u32(value, len);
                let c = compress(&input, p);
                assert_eq!(c.original_len, len);
                assert_eq!(decompress(&c, p).unwrap(), input, "r={r} input={input}");
                assert_eq!(compressed_len(&input, p), c.payload.len());
            }
        }
    }
}

#[test]
fn token_stream_shape_by_hand() {
    let p = RakeParams::new(2).unwrap();
    let cases = [
        ("0000", "0"),
        ("01000000", "10100"),
        ("1", "100"),
        ("0001_0001", "111111"),
        ("0000_0000_1", "0 0 100"),
        ("11", "100100"),
    ];
    for (input, want) in cases {
        let input = BitString::parse_binary(input).unwrap();
        let want = BitString::parse_binary(want).unwrap();
        assert_eq!(compress(&input, p).payload, want, "input {input}");
    }
}

#[test]
fn random_round_trip_at_filter_sizes() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut cases = 0;
    for m in [100usize, 125, 150] {
        for density in [0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35] {
            for _ in 0..1000 {
                let input = random_bits(&mut rng, m, density);
                for r in 1..=4u8 {
                    let p = RakeParams::new(r).unwrap();
                    assert_eq!(decompress(&compress(&input, p), p).unwrap(), input);
                }
                cases += 1;
            }
        }
    }
    assert_eq!(cases, 21_000);
}

#[test]
fn appending_set_bits_never_shrinks_output() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for r in 1..=4u8 {
        let p = RakeParams::new(r).unwrap();
        for _ in 0..500 {
            let m = 100;
            let mut bits = BitString::zeros(m);
            let mut positions: Vec<usize> = (0..m).filter(|_| rng.gen_bool(0.2)).collect();
            positions.sort_unstable();
            let mut last = compressed_len(&bits, p);
            for pos in positions {
                bits.set(pos);
                let now = compressed_len(&bits, p);
                assert!(now >= last, "r={r}: {last} -> {now} after setting {pos}");
                last = now;
            }
        }
    }
}

#[test]
fn corrupt_streams_are_rejected_not_misdecoded() {
    let p = RakeParams::new(2).unwrap();
    let truncated = CompressedBits {
        payload: BitString::parse_binary("1").unwrap(),
        original_len: 4,
    };
    assert!(matches!(
        decompress(&truncated, p),
        Err(RakeError::TruncatedPayload { .. })
    ));
    let overrun = CompressedBits {
        payload: BitString::parse_binary("0 0 0").unwrap(),
        original_len: 8,
    };
    assert!(matches!(
        decompress(&overrun, p),
        Err(RakeError::OverrunOutput { .. })
    ));
}

#[test]
fn sweep_on_reference_densities_picks_r2() {
    // per-hop densities 1-(0.99)^{8j}, j = 1..5
    let profile: Vec<f64> = (1..=5).map(|j| 1.0 - 0.99f64.powi(8 * j)).collect();
    let res = sweep_rake_param_with(&profile, 100, &[1, 2, 3, 4], 2000, 3);

    // exhaustive oracle over filters grown the way the protocol grows them:
    // hop j has received 8j uniform index throws
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut filters = Vec::new();
    for _ in 0..4000 {
        let mut bits = BitString::zeros(100);
        for _hop in 1..=5 {
            for _ in 0..8 {
                bits.set(rng.gen_range(0..100));
            }
            filters.push(bits.clone());
        }
    }
    let oracle: Vec<f64> = (1..=4u8)
        .map(|r| {
            let p = RakeParams::new(r).unwrap();
            let total: usize = filters.iter().map(|f| compress(f, p).payload.len()).sum();
            total as f64 / filters.len() as f64
        })
        .collect();
    let oracle_best = 1 + oracle
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap()
        .0 as u8;
    assert_eq!(res.best, oracle_best);
    assert_eq!(res.best, 2);
    assert!(res.costs[1].1 < 100.0);
    assert_eq!(sweep_rake_param(&profile, 100, &[1, 2, 3, 4]), 2);
}

proptest! {
    #[test]
    fn round_trip_any_input(bits in prop::collection::vec(any::<bool>(), 0..400), r in 1u8..=6) {
        let input: BitString = bits.into_iter().collect();
        let p = RakeParams::new(r).unwrap();
        let c = compress(&input, p);
        prop_assert_eq!(compressed_len(&input, p), c.payload.len());
        prop_assert_eq!(decompress(&c, p).unwrap(), input);
    }

    #[test]
    fn all_zero_cost(m in 1usize..1000, r in 1u8..=8) {
        let p = RakeParams::new(r).unwrap();
        prop_assert_eq!(compress(&BitString::zeros(m), p).payload.len(), m.div_ceil(p.width()));
    }
}
