mod common;

use common::*;
use oram3::block::Entry;
use oram3::obliv::{merge, stable_compact};
use oram3::rng::RandomSource;
use oram3::simnet::{Net, TraceMode};
use oram3::OramError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn run_compact(input: &[Entry], seed: u64) -> Vec<Entry> {
    let mut net = Net::default();
    net.set_instrumented(true);
    let mut rs = RandomSource::new(seed);
    let l = load(&mut net, &mut rs, input);
    let out = stable_compact(&mut net, &mut rs, l).unwrap();
    assert_eq!(out.len(), input.len());
    contents(&net, &out)
}

fn run_merge(a: &[Entry], b: &[Entry], seed: u64) -> Vec<Entry> {
    let mut net = Net::default();
    net.set_instrumented(true);
    let mut rs = RandomSource::new(seed);
    let la = load(&mut net, &mut rs, a);
    let lb = load(&mut net, &mut rs, b);
    let out = merge(&mut net, &mut rs, la, lb).unwrap();
    assert_eq!(out.len(), 2 * a.len());
    contents(&net, &out)
}

fn widened(v: &[Entry]) -> Vec<Entry> {
    v.iter().map(|e| widen(e, 16)).collect()
}

fn random_semi_sorted(rng: &mut ChaCha8Rng, n: usize, tag_base: u8) -> Vec<Entry> {
    let mut keys: Vec<u64> = (0..n)
        .map(|_| rng.random_range(0..(n as u64 / 2 + 2)))
        .collect();
    keys.sort_unstable();
    let mut ki = keys.into_iter();
    (0..n)
        .map(|i| {
            if rng.random_bool(0.4) {
                Entry::Dummy
            } else {
                tagged(ki.next().unwrap(), tag_base.wrapping_add(i as u8))
            }
        })
        .collect()
}

#[test]
fn compact_moves_dummies_to_the_end() {
    let input = [tagged(1, 0xA), Entry::Dummy, tagged(2, 0xB), Entry::Dummy];
    let expect = [tagged(1, 0xA), tagged(2, 0xB), Entry::Dummy, Entry::Dummy];
    assert_eq!(run_compact(&input, 1), widened(&expect));
    assert_eq!(
        run_compact(&vec![Entry::Dummy; 4], 2),
        vec![Entry::Dummy; 4]
    );
}

#[test]
fn merge_interleaves_by_key() {
    let a = [tagged(1, 1), tagged(3, 3), Entry::Dummy, Entry::Dummy];
    let b = [tagged(2, 2), tagged(4, 4), Entry::Dummy, Entry::Dummy];
    let mut expect = vec![tagged(1, 1), tagged(2, 2), tagged(3, 3), tagged(4, 4)];
    expect.extend(vec![Entry::Dummy; 4]);
    assert_eq!(run_merge(&a, &b, 3), widened(&expect));

    let x = [tagged(0, 9), Entry::Dummy, tagged(5, 8)];
    let mut expect = vec![tagged(0, 9), tagged(5, 8)];
    expect.extend(vec![Entry::Dummy; 4]);
    assert_eq!(run_merge(&x, &vec![Entry::Dummy; 3], 4), widened(&expect));
}

#[test]
fn merge_ties_prefer_the_first_input() {
    let a = [tagged(7, 1)];
    let b = [tagged(7, 2)];
    assert_eq!(run_merge(&a, &b, 5), widened(&[tagged(7, 1), tagged(7, 2)]));
    assert_eq!(run_merge(&b, &a, 5), widened(&[tagged(7, 2), tagged(7, 1)]));
}

#[test]
fn merge_rejects_unequal_lengths() {
    let mut net = Net::default();
    let mut rs = RandomSource::new(0);
    let a = load(&mut net, &mut rs, &[Entry::Dummy]);
    let b = load(&mut net, &mut rs, &[Entry::Dummy, Entry::Dummy]);
    assert!(matches!(
        merge(&mut net, &mut rs, a, b),
        Err(OramError::LengthMismatch { left: 1, right: 2 })
    ));
}

#[test]
fn empty_inputs_are_fine() {
    assert!(run_compact(&[], 0).is_empty());
    assert!(run_merge(&[], &[], 0).is_empty());
}

#[test]
fn compact_matches_oracle_exhaustively_up_to_four() {
    for n in 1..=4 {
        for (i, seq) in all_sequences(n, false).iter().enumerate() {
            assert_eq!(
                run_compact(seq, i as u64),
                widened(&compact_oracle(seq)),
                "{seq:?}"
            );
        }
    }
}

#[test]
fn merge_matches_oracle_exhaustively_up_to_four() {
    for n in 1..=4 {
        let seqs = all_sequences(n, true);
        for (i, a) in seqs.iter().enumerate() {
            for b in &seqs {
                let b: Vec<Entry> = b.iter().map(|e| retag(e, 0x80)).collect();
                assert_eq!(
                    run_merge(a, &b, i as u64),
                    widened(&merge_oracle(a, &b)),
                    "{a:?} + {b:?}"
                );
            }
        }
    }
}

fn retag(e: &Entry, offset: u8) -> Entry {
    match e {
        Entry::Real { key, payload } => tagged(*key, payload[0] + offset),
        other => other.clone(),
    }
}

#[test]
fn random_cases_match_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for case in 0..250u64 {
        let n = rng.random_range(1..=64);
        let a = random_semi_sorted(&mut rng, n, 0);
        let b = random_semi_sorted(&mut rng, n, 100);
        assert_eq!(run_compact(&a, case), widened(&compact_oracle(&a)));
        assert_eq!(run_merge(&a, &b, case), widened(&merge_oracle(&a, &b)));
    }
}

/// The stripped trace of one protocol run over `input`.
fn pattern_of(input: &[Entry], seed: u64, merge_too: bool) -> String {
    let mut net = Net::new(TraceMode::Digest);
    let mut rs = RandomSource::new(seed);
    let l = load(&mut net, &mut rs, input);
    if merge_too {
        let other = load(&mut net, &mut rs, input);
        merge(&mut net, &mut rs, l, other).unwrap();
    } else {
        stable_compact(&mut net, &mut rs, l).unwrap();
    }
    net.pattern_digest().unwrap().0
}

#[test]
fn pattern_depends_only_on_length() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for merge_too in [false, true] {
        let base = pattern_of(&vec![Entry::Dummy; 16], 0, merge_too);
        for s in 1..6 {
            let input = random_semi_sorted(&mut rng, 16, 0);
            assert_eq!(pattern_of(&input, s, merge_too), base);
        }
        assert_ne!(pattern_of(&vec![Entry::Dummy; 17], 0, merge_too), base);
    }
}

#[test]
fn cost_doubles_with_length() {
    let cost = |n: usize, merge_too: bool| {
        let mut net = Net::default();
        let mut rs = RandomSource::new(1);
        let l = load(&mut net, &mut rs, &vec![Entry::Dummy; n]);
        let other = load(&mut net, &mut rs, &vec![Entry::Dummy; n]);
        let before = net.meter().total_blocks();
        if merge_too {
            merge(&mut net, &mut rs, l, other).unwrap();
        } else {
            stable_compact(&mut net, &mut rs, l).unwrap();
        }
        (net.meter().total_blocks() - before) as f64
    };
    for merge_too in [false, true] {
        for n in [256, 512, 1024] {
            let r = cost(2 * n, merge_too) / cost(n, merge_too);
            assert!((1.9..=2.1).contains(&r), "ratio {r} at {n}");
        }
    }
}
