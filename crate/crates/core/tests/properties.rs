mod common;

use common::*;
use oram3::block::{Block, Entry, PositionTuple};
use oram3::obliv::{merge, stable_compact};
use oram3::perm::{permute, unpermute, PermSet};
use oram3::rng::RandomSource;
use oram3::sharing::{mirrors_consistent, peek_at, peek_blocks, reconstruct3, split3};
use oram3::simnet::Net;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Keys in `0..8` or a dummy, tagged by position.
fn entries_of_len(n: usize) -> impl Strategy<Value = Vec<Entry>> {
    prop::collection::vec(prop::option::weighted(0.6, 0u64..8), n).prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, k)| k.map_or(Entry::Dummy, |k| tagged(k, i as u8)))
            .collect()
    })
}

fn entries(max_len: usize) -> impl Strategy<Value = Vec<Entry>> {
    (0..=max_len).prop_flat_map(entries_of_len)
}

fn sorted_reals(mut v: Vec<Entry>) -> Vec<Entry> {
    let mut keys: Vec<u64> = v.iter().filter_map(Entry::key).collect();
    keys.sort_unstable();
    let mut ks = keys.into_iter();
    for e in v.iter_mut() {
        if let Entry::Real { payload, .. } = e {
            *e = Entry::real(ks.next().unwrap(), payload);
        }
    }
    v
}

fn widened(v: &[Entry]) -> Vec<Entry> {
    v.iter().map(|e| widen(e, 16)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn shares_xor_back_to_the_value(bytes in prop::collection::vec(any::<u8>(), 1..64), seed: u64) {
        let value = Block::from_slice(&bytes);
        let [a, b, c] = split3(&value, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(reconstruct3(&a, &b, &c).unwrap(), value);
    }

    #[test]
    fn compact_agrees_with_its_oracle(input in entries(64), seed: u64) {
        let mut net = Net::default();
        let mut rs = RandomSource::new(seed);
        let l = load(&mut net, &mut rs, &input);
        let out = stable_compact(&mut net, &mut rs, l).unwrap();
        prop_assert_eq!(contents(&net, &out), widened(&compact_oracle(&input)));
    }

    #[test]
    fn merge_agrees_with_its_oracle(pair in (0usize..=32).prop_flat_map(|n| (entries_of_len(n), entries_of_len(n))), seed: u64) {
        let (a, b) = pair;
        let (a, b) = (sorted_reals(a), sorted_reals(b));
        let b: Vec<Entry> = b.iter().map(|e| match e {
            Entry::Real { key, payload } => tagged(*key, payload[0] | 0x80),
            other => other.clone(),
        }).collect();
        let mut net = Net::default();
        let mut rs = RandomSource::new(seed);
        let la = load(&mut net, &mut rs, &a);
        let lb = load(&mut net, &mut rs, &b);
        let out = merge(&mut net, &mut rs, la, lb).unwrap();
        prop_assert_eq!(contents(&net, &out), widened(&merge_oracle(&a, &b)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn unpermute_undoes_permute(input in entries(64), seed: u64) {
        prop_assume!(!input.is_empty());
        let mut net = Net::default();
        let mut rs = RandomSource::new(seed);
        let col = load(&mut net, &mut rs, &input);
        let before = peek_blocks(&net, &col).unwrap();
        let perms = PermSet::generate(&mut net, &mut rs, "pi", input.len()).unwrap();
        let maps: Vec<Vec<usize>> = (0..3).map(|k| perms.peek_mapping(&net, k).unwrap()).collect();
        let shuffled = permute(&mut net, &mut rs, vec![col], &perms).unwrap();
        for (i, want) in before.iter().enumerate() {
            let at = PositionTuple::new(maps[0][i], maps[1][i], maps[2][i]);
            prop_assert_eq!(&peek_at(&net, &shuffled[0], at).unwrap(), want);
        }
        prop_assert!(mirrors_consistent(&net, &shuffled[0]).unwrap());
        let back = unpermute(&mut net, &mut rs, shuffled, &perms).unwrap();
        prop_assert_eq!(peek_blocks(&net, &back[0]).unwrap(), before);
        prop_assert!(mirrors_consistent(&net, &back[0]).unwrap());
    }
}
