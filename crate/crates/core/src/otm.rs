//! Three-server one-time oblivious memory.
//!
//! A build of capacity `n` serves at most `n` lookups, each for a key not
//! looked up before (or a dummy). Real lookups go straight to the position
//! tuple recorded for the key; dummy lookups walk a secret-shared list of
//! special dummies. Either way the storage servers see one fresh uniformly
//! random index per lookup.

use crate::block::{
    decode_link, encode_label_payload, encode_link, Entry, PositionLabel, PositionTuple,
    LINK_WIDTH, META_WIDTH,
};
use crate::error::{ensure_invariant, OramError, Result};
use crate::perm::{permute, unpermute, PermSet};
use crate::rng::RandomSource;
use crate::sharing::{
    peek_at, read_entry, reconstruct, reconstruct_at, secret_write, write_entry, Layout,
};
use crate::simnet::Net;

/// What a lookup asks for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Probe {
    /// A real key at its recorded position tuple.
    Real(PositionTuple),
    /// The next element of the dummy list.
    Dummy,
}

#[derive(Debug)]
pub struct Otm {
    n: usize,
    data: Layout,
    links: Layout,
    perms: PermSet,
    dpos: Layout,
    lookups_done: usize,
}

/// Builds a one-time memory from a sorted layout of `n` entries with
/// distinct real keys. Returns the structure and the key-position map `U`,
/// whose entries carry the label `(level, tuple)` of each real key.
pub fn build(
    net: &mut Net,
    rs: &mut RandomSource,
    input: Layout,
    level: u8,
) -> Result<(Otm, Layout)> {
    let n = input.len();
    if n == 0 {
        return Err(OramError::InvalidConfig(
            "one-time memory of capacity 0".into(),
        ));
    }
    net.scoped("otm_build", |net| {
        let mut rng = rs.stream("otm_build");
        let mut table = input;
        table.extend(net, 2 * n)?;
        table.set_label("otm.T");
        for i in 1..=n {
            write_entry(
                net,
                &mut rng,
                &table,
                n - 1 + i,
                &Entry::SpecialDummy(i as u64),
            )?;
        }

        let perms = PermSet::generate(net, rs, "otm.pi", 2 * n)?;

        let links = Layout::alloc(net, "otm.L", 2 * n, LINK_WIDTH);
        for j in 0..n {
            secret_write(net, &mut rng, &links, j, &encode_link(None))?;
        }
        for i in (1..n).rev() {
            let next = perms.read_tuple(net, n + i)?;
            secret_write(net, &mut rng, &links, n + i - 1, &encode_link(Some(next)))?;
        }
        secret_write(net, &mut rng, &links, 2 * n - 1, &encode_link(None))?;
        let dpos = Layout::alloc(net, "otm.dpos", 1, LINK_WIDTH);
        let head = perms.read_tuple(net, n)?;
        secret_write(net, &mut rng, &dpos, 0, &encode_link(Some(head)))?;

        let keymap = Layout::alloc(net, "otm.U", n, META_WIDTH);
        let mut last_key = None;
        for i in 0..n {
            let e = read_entry(net, &table, i)?;
            let here = perms.read_tuple(net, i)?;
            let u = match e.key() {
                Some(key) => {
                    ensure_invariant!(
                        last_key.is_none_or(|k| k < key),
                        "one-time memory input not sorted with distinct keys at {i}"
                    );
                    last_key = Some(key);
                    Entry::real(
                        key,
                        &encode_label_payload(PositionLabel { level, tuple: here }),
                    )
                }
                None => Entry::Dummy,
            };
            write_entry(net, &mut rng, &keymap, i, &u)?;
        }

        let mut cols = permute(net, rs, vec![table, links], &perms)?.into_iter();
        let (data, links) = (cols.next().expect("data"), cols.next().expect("links"));
        if net.instrumented() {
            for b in 0..3 {
                net.watch(data.own(b))?;
                net.watch(links.own(b))?;
            }
        }
        Ok((
            Otm {
                n,
                data,
                links,
                perms,
                dpos,
                lookups_done: 0,
            },
            keymap,
        ))
    })
}

impl Otm {
    pub fn capacity(&self) -> usize {
        self.n
    }

    pub fn lookups_done(&self) -> usize {
        self.lookups_done
    }

    /// One lookup. Both kinds read the head of the dummy list, one data block
    /// and one link block, and re-share the head.
    pub fn lookup(&mut self, net: &mut Net, rs: &mut RandomSource, probe: Probe) -> Result<Entry> {
        if self.lookups_done >= self.n {
            return Err(OramError::CapacityExhausted { capacity: self.n });
        }
        net.scoped("otm_lookup", |net| {
            let mut rng = rs.stream("otm_lookup");
            let head = decode_link(&reconstruct(net, &self.dpos, 0)?)?;
            let pos = match probe {
                Probe::Real(t) => t,
                Probe::Dummy => {
                    head.ok_or_else(|| OramError::Invariant("dummy list exhausted".into()))?
                }
            };
            let value = reconstruct_at(net, &self.data, pos)?;
            let next = decode_link(&reconstruct_at(net, &self.links, pos)?)?;
            let new_head = match probe {
                Probe::Real(_) => head,
                Probe::Dummy => next,
            };
            secret_write(net, &mut rng, &self.dpos, 0, &encode_link(new_head))?;
            self.lookups_done += 1;
            Entry::decode(&value)
        })
    }

    /// Restores the built array, looked-up entries included, as a sorted
    /// unpermuted layout of length `n`. Destroys the structure.
    pub fn getall(self, net: &mut Net, rs: &mut RandomSource) -> Result<Layout> {
        net.scoped("otm_getall", |net| {
            for b in 0..3 {
                net.unwatch(self.data.own(b))?;
            }
            self.links.free(net);
            self.dpos.free(net);
            let mut out = unpermute(net, rs, vec![self.data], &self.perms)?
                .pop()
                .expect("one column");
            self.perms.free(net);
            out.truncate(net, self.n)?;
            Ok(out)
        })
    }

    /// Unmetered view of the `n` built entries in order.
    pub fn peek_contents(&self, net: &Net) -> Result<Vec<(Entry, PositionTuple)>> {
        let maps: Vec<Vec<usize>> = (0..3)
            .map(|k| self.perms.peek_mapping(net, k))
            .collect::<Result<_>>()?;
        (0..self.n)
            .map(|i| {
                let t = PositionTuple::new(maps[0][i], maps[1][i], maps[2][i]);
                Ok((Entry::decode(&peek_at(net, &self.data, t)?)?, t))
            })
            .collect()
    }

    /// Unmetered view of the current dummy-list head.
    pub fn peek_dummy_head(&self, net: &Net) -> Result<Option<PositionTuple>> {
        decode_link(&peek_at(net, &self.dpos, PositionTuple::new(0, 0, 0))?)
    }

    pub fn free(self, net: &mut Net) {
        self.data.free(net);
        self.links.free(net);
        self.dpos.free(net);
        self.perms.free(net);
    }
}
