//! Position-based ORAM: `d + 1` one-time memories of capacities
//! `1, 2, ..., 2^d`, plus a capacity-1 holder for the block fetched by the
//! current access.

use crate::block::{ChildLabel, Entry, MetaPayload, PositionLabel};
use crate::error::{ensure_invariant, OramError, Result};
use crate::obliv::{merge, stable_compact};
use crate::otm::{self, Otm, Probe};
use crate::rng::RandomSource;
use crate::sharing::{peek_entries, read_entry, write_entry, Layout};
use crate::simnet::Net;

#[derive(Debug)]
pub struct PosOram {
    depth: usize,
    width: usize,
    levels: Vec<Option<Otm>>,
    fetched: Option<Otm>,
}

impl PosOram {
    /// An empty ORAM of the given depth whose entries are `width` bytes.
    pub fn new(depth: usize, width: usize) -> Self {
        PosOram {
            depth,
            width,
            levels: (0..=depth).map(|_| None).collect(),
            fetched: None,
        }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn level(&self, j: usize) -> Option<&Otm> {
        self.levels.get(j).and_then(Option::as_ref)
    }

    /// Which levels currently hold a built one-time memory.
    pub fn occupancy(&self) -> Vec<bool> {
        self.levels.iter().map(Option::is_some).collect()
    }

    /// The smallest empty level below the top, or the top level if all
    /// below it are full.
    pub fn smallest_empty(&self) -> usize {
        (0..self.depth)
            .find(|&j| self.levels[j].is_none())
            .unwrap_or(self.depth)
    }

    /// Puts a built memory in place, as done when bootstrapping.
    pub fn install(&mut self, level: usize, otm: Otm) -> Result<()> {
        ensure_invariant!(
            level <= self.depth,
            "level {level} above depth {}",
            self.depth
        );
        ensure_invariant!(
            otm.capacity() == 1 << level,
            "level {level} built with capacity {}",
            otm.capacity()
        );
        if let Some(old) = self.levels[level].replace(otm) {
            return Err(OramError::Invariant(format!(
                "level {level} installed twice ({} lookups)",
                old.lookups_done()
            )));
        }
        Ok(())
    }

    /// Looks `key` up at `label`, probing every non-empty level: the
    /// labelled one for real, the others with dummies.
    pub fn lookup(
        &mut self,
        net: &mut Net,
        rs: &mut RandomSource,
        key: u64,
        label: PositionLabel,
    ) -> Result<Entry> {
        let l = label.level as usize;
        ensure_invariant!(
            self.level(l).is_some(),
            "label points at empty level {l} of depth-{} ORAM",
            self.depth
        );
        let mut found = None;
        for (j, slot) in self.levels.iter_mut().enumerate() {
            if let Some(level) = slot.as_mut() {
                let probe = if j == l {
                    Probe::Real(label.tuple)
                } else {
                    Probe::Dummy
                };
                let v = level.lookup(net, rs, probe)?;
                if j == l {
                    found = Some(v);
                }
            }
        }
        let v = found.expect("labelled level probed");
        ensure_invariant!(
            v.key() == Some(key),
            "label for key {key} at depth {} led to {:?}",
            self.depth,
            v.key()
        );
        Ok(v)
    }

    /// Stores the freshly fetched (and possibly rewritten) entry in the
    /// capacity-1 holder.
    pub fn place_fetched(
        &mut self,
        net: &mut Net,
        rs: &mut RandomSource,
        entry: &Entry,
    ) -> Result<()> {
        ensure_invariant!(self.fetched.is_none(), "fetched block already placed");
        let mut rng = rs.stream("fetched");
        let holder = Layout::alloc(net, "fetched", 1, self.width);
        net.scoped("fetched", |net| {
            write_entry(net, &mut rng, &holder, 0, entry)
        })?;
        let (otm, keymap) = otm::build(net, rs, holder, 0)?;
        keymap.free(net);
        self.fetched = Some(otm);
        Ok(())
    }

    /// Rebuilds level `l` from levels `0..l`, the fetched block, and (at the
    /// top level) level `l` itself, applying the label updates in `update`.
    /// Returns the key-position map of the new level.
    pub fn shuffle(
        &mut self,
        net: &mut Net,
        rs: &mut RandomSource,
        l: usize,
        update: Option<Layout>,
    ) -> Result<Layout> {
        ensure_invariant!(
            l <= self.depth && (l == self.smallest_empty() || l == self.depth),
            "shuffle of level {l} in depth-{} ORAM with smallest empty level {}",
            self.depth,
            self.smallest_empty()
        );
        let fetched = self
            .fetched
            .take()
            .ok_or_else(|| OramError::Invariant("shuffle without a fetched block".into()))?;
        net.scoped("shuffle", |net| {
            let mut acc = fetched.getall(net, rs)?;
            let top = if l == self.depth { l + 1 } else { l };
            for j in 0..top {
                let level = self.levels[j].take().ok_or_else(|| {
                    OramError::Invariant(format!("level {j} empty during shuffle of level {l}"))
                })?;
                let t = level.getall(net, rs)?;
                acc = merge(net, rs, acc, t)?;
            }
            mark_duplicates(net, rs, &acc)?;
            let mut acc = stable_compact(net, rs, acc)?;
            keep_prefix(net, &mut acc, 1 << l)?;

            if let Some(mut u) = update {
                if u.len() > acc.len() {
                    u = stable_compact(net, rs, u)?;
                    keep_prefix(net, &mut u, acc.len())?;
                }
                let mut a = merge(net, rs, acc, u)?;
                scan_update(net, rs, &a)?;
                a = stable_compact(net, rs, a)?;
                keep_prefix(net, &mut a, 1 << l)?;
                acc = a;
            }

            let (otm, keymap) = otm::build(net, rs, acc, l as u8)?;
            self.levels[l] = Some(otm);
            Ok(keymap)
        })
    }

    pub fn free(self, net: &mut Net) {
        for level in self.levels.into_iter().flatten() {
            level.free(net);
        }
        if let Some(f) = self.fetched {
            f.free(net);
        }
    }
}

/// Truncates a compacted layout. With instrumentation on, checks that only
/// dummies are dropped.
fn keep_prefix(net: &mut Net, layout: &mut Layout, len: usize) -> Result<()> {
    if layout.len() <= len {
        return Ok(());
    }
    if net.instrumented() {
        let dropped = peek_entries(net, layout)?.split_off(len);
        ensure_invariant!(
            dropped.iter().all(|e| !e.is_real()),
            "truncation to {len} would drop {} real entries",
            dropped.iter().filter(|e| e.is_real()).count()
        );
    }
    layout.truncate(net, len)
}

/// Keeps the first entry of every run of equal keys in a sorted layout and
/// overwrites the rest with dummies. Every entry is re-shared.
pub fn mark_duplicates(net: &mut Net, rs: &mut RandomSource, layout: &Layout) -> Result<()> {
    let mut rng = rs.stream("dedup");
    net.scoped("dedup", |net| {
        let mut last = None;
        for i in 0..layout.len() {
            let e = read_entry(net, layout, i)?;
            let keep = match e.key() {
                Some(k) => last.replace(k) != Some(k),
                None => true,
            };
            write_entry(
                net,
                &mut rng,
                layout,
                i,
                if keep { &e } else { &Entry::Dummy },
            )?;
        }
        Ok(())
    })
}

/// One pass over adjacent pairs of a merged (stored entry, update entry)
/// layout: an update folds into the stored entry before it and becomes a
/// dummy. Every entry is re-shared.
pub fn scan_update(net: &mut Net, rs: &mut RandomSource, layout: &Layout) -> Result<()> {
    let n = layout.len();
    if n == 0 {
        return Ok(());
    }
    let mut rng = rs.stream("update");
    net.scoped("update", |net| {
        let mut held = read_entry(net, layout, 0)?;
        for i in 1..n {
            let mut cur = read_entry(net, layout, i)?;
            if let (Some(k), Some(k2)) = (held.key(), cur.key()) {
                if k == k2 {
                    held = apply_update(&held, &cur)?;
                    cur = Entry::Dummy;
                }
            }
            check_resolved(&held)?;
            write_entry(net, &mut rng, layout, i - 1, &held)?;
            held = cur;
        }
        check_resolved(&held)?;
        write_entry(net, &mut rng, layout, n - 1, &held)
    })
}

fn apply_update(stored: &Entry, update: &Entry) -> Result<Entry> {
    let (Some(key), Some(old), Some(new)) = (stored.key(), stored.payload(), update.payload())
    else {
        return Err(OramError::Invariant("update applied to a dummy".into()));
    };
    let merged = MetaPayload::decode(old)?.updated_by(&MetaPayload::decode(new)?);
    Ok(Entry::real(key, &merged.encode()))
}

/// An update entry left standing on its own would put a "keep" marker into
/// the position map.
fn check_resolved(e: &Entry) -> Result<()> {
    if let Some(p) = e.payload() {
        let m = MetaPayload::decode(p)?;
        ensure_invariant!(
            m.left != ChildLabel::Keep && m.right != ChildLabel::Keep,
            "update for key {:?} has no stored entry to apply to",
            e.key()
        );
    }
    Ok(())
}
