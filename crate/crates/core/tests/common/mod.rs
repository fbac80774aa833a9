//! Reference models the protocols are checked against. These work on plain
//! vectors and know nothing about shares, permutations or the network.
#![allow(dead_code)]

use oram3::block::{ChildLabel, Entry, MetaPayload, PositionLabel, PositionTuple};
use oram3::rng::RandomSource;
use oram3::sharing::{peek_entries, Layout};
use oram3::simnet::Net;

/// Reals in their original order, then the non-reals in theirs.
pub fn compact_oracle(input: &[Entry]) -> Vec<Entry> {
    let mut reals: Vec<Entry> = input.iter().filter(|e| e.is_real()).cloned().collect();
    reals.extend(input.iter().filter(|e| !e.is_real()).cloned());
    reals
}

/// Reals of both inputs by key, `a` first on ties and stable within each
/// input; then `a`'s dummies, then `b`'s.
pub fn merge_oracle(a: &[Entry], b: &[Entry]) -> Vec<Entry> {
    let mut tagged: Vec<(u64, usize, usize, Entry)> = Vec::new();
    for (side, list) in [a, b].into_iter().enumerate() {
        for (i, e) in list.iter().enumerate() {
            if let Some(k) = e.key() {
                tagged.push((k, side, i, e.clone()));
            }
        }
    }
    tagged.sort_by_key(|t| (t.0, t.1, t.2));
    let mut out: Vec<Entry> = tagged.into_iter().map(|t| t.3).collect();
    out.extend(a.iter().filter(|e| !e.is_real()).cloned());
    out.extend(b.iter().filter(|e| !e.is_real()).cloned());
    out
}

/// First occurrence of each key kept, later ones replaced by dummies.
pub fn dedup_oracle(input: &[Entry]) -> Vec<Entry> {
    let mut seen = std::collections::HashSet::new();
    input
        .iter()
        .map(|e| match e.key() {
            Some(k) if !seen.insert(k) => Entry::Dummy,
            _ => e.clone(),
        })
        .collect()
}

/// Levels full after `t` accesses of a depth-`d` position ORAM that started
/// with only its top level full: bit `j` of `t` for `j < d`, top always.
pub fn counter_model(d: usize, t: u64) -> Vec<bool> {
    (0..=d).map(|j| j == d || (t >> j) & 1 == 1).collect()
}

/// Level rebuilt by access number `t` (counting from 1) at depth `d` of a
/// depth-`big_d` system: the number of trailing ones of `t - 1`, capped at
/// the depth.
pub fn rebuilt_model(d: usize, big_d: usize, t: u64) -> usize {
    let l_top = ((t - 1).trailing_ones() as usize).min(big_d);
    if d < l_top {
        d
    } else {
        l_top
    }
}

/// Packs depth-`d` labels into parent updates, entry by entry, from the
/// sibling rules. Dummies in, dummies out.
pub fn convert_oracle(keymap: &[Option<(u64, PositionLabel)>]) -> Vec<Option<(u64, MetaPayload)>> {
    (0..keymap.len())
        .map(|i| {
            let (addr, label) = keymap[i]?;
            let prev = i.checked_sub(1).and_then(|j| keymap[j]);
            let next = keymap.get(i + 1).copied().flatten();
            if addr % 2 == 1 {
                if prev.is_some_and(|(a, _)| a + 1 == addr) {
                    return None;
                }
                return Some((
                    addr / 2,
                    MetaPayload {
                        left: ChildLabel::Keep,
                        right: ChildLabel::Assigned(label),
                    },
                ));
            }
            let right = match next {
                Some((a, l)) if a == addr + 1 => ChildLabel::Assigned(l),
                _ => ChildLabel::Keep,
            };
            Some((
                addr / 2,
                MetaPayload {
                    left: ChildLabel::Assigned(label),
                    right,
                },
            ))
        })
        .collect()
}

pub fn label(level: u8, p: u32) -> PositionLabel {
    PositionLabel {
        level,
        tuple: PositionTuple::new(p as usize, p as usize + 1, p as usize + 2),
    }
}

pub fn load(net: &mut Net, rs: &mut RandomSource, entries: &[Entry]) -> Layout {
    Layout::load(net, rs, "test", 16, entries).unwrap()
}

pub fn contents(net: &Net, layout: &Layout) -> Vec<Entry> {
    peek_entries(net, layout).unwrap()
}

/// Entry for key `k` with a payload naming its origin, so that stability is
/// visible.
pub fn tagged(k: u64, tag: u8) -> Entry {
    Entry::real(k, &[tag])
}

/// Reads an entry back at full payload width for comparisons with decoded
/// layouts.
pub fn widen(e: &Entry, width: usize) -> Entry {
    Entry::decode(&e.encode(width).unwrap()).unwrap()
}

/// All sequences of length `n` over `{0, 1, 2, ⊥}`, with tags recording the
/// position.
pub fn all_sequences(n: usize, sorted_reals: bool) -> Vec<Vec<Entry>> {
    let mut out = Vec::new();
    for code in 0..4usize.pow(n as u32) {
        let mut c = code;
        let mut seq = Vec::with_capacity(n);
        for i in 0..n {
            let digit = c % 4;
            c /= 4;
            seq.push(if digit == 3 {
                Entry::Dummy
            } else {
                tagged(digit as u64, i as u8 + 1)
            });
        }
        let keys: Vec<u64> = seq.iter().filter_map(Entry::key).collect();
        if !sorted_reals || keys.windows(2).all(|w| w[0] <= w[1]) {
            out.push(seq);
        }
    }
    out
}
