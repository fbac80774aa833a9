//! Linear-bandwidth oblivious stable compaction and merging.
//!
//! Both protocols thread secret-shared linked lists through a layout, hide
//! the list order behind fresh permutations, and then walk the lists so that
//! every element is read exactly once at a position no storage server can
//! predict.

use std::collections::VecDeque;

use crate::block::{decode_link, encode_link, Block, Entry, Link, PositionTuple, LINK_WIDTH};
use crate::error::{ensure_invariant, OramError, Result};
use crate::perm::{permute, PermSet};
use crate::rng::RandomSource;
use crate::sharing::{reconstruct_at, reconstruct_from_mirrors, secret_write, Layout};
use crate::simnet::Net;

/// Moves all dummies of a semi-sorted layout to the end, keeping the order of
/// the real entries. The input is consumed; the output has the same length.
pub fn stable_compact(net: &mut Net, rs: &mut RandomSource, input: Layout) -> Result<Layout> {
    let n = input.len();
    let width = input.width();
    net.scoped("compact", |net| {
        let perms = PermSet::generate(net, rs, "compact.pi", n)?;
        let mut rng = rs.stream("compact");
        let links = Layout::alloc(net, "compact.L", n, LINK_WIDTH);
        let mut heads: [Link; 2] = [None, None];
        for i in (0..n).rev() {
            let e = Entry::decode(&reconstruct_from_mirrors(net, &input, i)?)?;
            let here = perms.read_tuple(net, i)?;
            let head = &mut heads[usize::from(!e.is_real())];
            secret_write(net, &mut rng, &links, i, &encode_link(*head))?;
            *head = Some(here);
        }
        let mut cols = permute(net, rs, vec![input, links], &perms)?.into_iter();
        let (data, links) = (cols.next().expect("data"), cols.next().expect("links"));
        let guard = ReadOnce::start(net, &data, &links)?;

        let out = Layout::alloc(net, "compact.out", n, width);
        let [real_head, dummy_head] = heads;
        let mut list = ListCursor::new(real_head, dummy_head);
        for k in 0..n {
            let (block, _) = list.advance(net, &data, &links)?;
            secret_write(net, &mut rng, &out, k, &block)?;
        }

        guard.stop(net)?;
        data.free(net);
        links.free(net);
        perms.free(net);
        Ok(out)
    })
}

/// Merges two semi-sorted layouts of equal length into one sorted layout of
/// twice the length. Equal keys keep `a`'s entry first. Inputs are consumed.
pub fn merge(net: &mut Net, rs: &mut RandomSource, a: Layout, b: Layout) -> Result<Layout> {
    if a.len() != b.len() {
        return Err(OramError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let n = a.len();
    let width = a.width();
    net.scoped("merge", |net| {
        let joint = a.concat(net, b)?;
        let perms = PermSet::generate(net, rs, "merge.pi", 2 * n)?;
        let mut rng = rs.stream("merge");
        let links = Layout::alloc(net, "merge.L", 2 * n, LINK_WIDTH);
        // heads[list][0] walks the reals of a list, heads[list][1] its dummies.
        let mut heads: [[Link; 2]; 2] = [[None, None], [None, None]];
        for i in (0..2 * n).rev() {
            let e = Entry::decode(&reconstruct_from_mirrors(net, &joint, i)?)?;
            let here = perms.read_tuple(net, i)?;
            let head = &mut heads[usize::from(i >= n)][usize::from(!e.is_real())];
            secret_write(net, &mut rng, &links, i, &encode_link(*head))?;
            *head = Some(here);
        }
        let mut cols = permute(net, rs, vec![joint, links], &perms)?.into_iter();
        let (data, links) = (cols.next().expect("data"), cols.next().expect("links"));
        let guard = ReadOnce::start(net, &data, &links)?;

        let out = Layout::alloc(net, "merge.out", 2 * n, width);
        let mut lists = heads.map(|[r, d]| ListCursor::new(r, d));
        // Fixed schedule: one read before the loop, then one read and one
        // write per step, and a final write. The list read from is the one
        // just consumed, unless it has run dry.
        let mut held: VecDeque<(usize, Block, Entry)> = VecDeque::with_capacity(3);
        if n > 0 {
            let (blk, e) = lists[0].advance(net, &data, &links)?;
            held.push_back((0, blk, e));
        }
        let mut consumed = 1;
        for k in 0..2 * n {
            if k + 1 < 2 * n {
                let from = if lists[consumed].reads < n {
                    consumed
                } else {
                    1 - consumed
                };
                let (blk, e) = lists[from].advance(net, &data, &links)?;
                held.push_back((from, blk, e));
            }
            let pick = pick_next(&held);
            let (list, blk, _) = held.remove(pick).expect("held entry");
            consumed = list;
            secret_write(net, &mut rng, &out, k, &blk)?;
        }
        ensure_invariant!(
            held.is_empty(),
            "merge left {} entries unwritten",
            held.len()
        );

        guard.stop(net)?;
        data.free(net);
        links.free(net);
        perms.free(net);
        Ok(out)
    })
}

/// Index into `held` of the entry that comes next in merged order.
fn pick_next(held: &VecDeque<(usize, Block, Entry)>) -> usize {
    if held.len() < 2 || held[0].0 == held[1].0 {
        return 0;
    }
    let (ia, ib) = if held[0].0 == 0 { (0, 1) } else { (1, 0) };
    if a_goes_first(&held[ia].2, &held[ib].2) {
        ia
    } else {
        ib
    }
}

/// Merge order between the heads of list `a` and list `b`: reals by key with
/// ties to `a`, reals before dummies, dummies of `a` first.
pub fn a_goes_first(x: &Entry, y: &Entry) -> bool {
    match (x.key(), y.key()) {
        (Some(kx), Some(ky)) => kx <= ky,
        (Some(_), None) => true,
        (None, Some(_)) => false,
        (None, None) => true,
    }
}

/// Walks one list: the real chain, then the dummy chain.
struct ListCursor {
    next: Link,
    dummy_head: Link,
    in_dummies: bool,
    reads: usize,
}

impl ListCursor {
    fn new(real_head: Link, dummy_head: Link) -> Self {
        match real_head {
            Some(_) => ListCursor {
                next: real_head,
                dummy_head,
                in_dummies: false,
                reads: 0,
            },
            None => ListCursor {
                next: dummy_head,
                dummy_head: None,
                in_dummies: true,
                reads: 0,
            },
        }
    }

    fn advance(&mut self, net: &mut Net, data: &Layout, links: &Layout) -> Result<(Block, Entry)> {
        let pos: PositionTuple = self
            .next
            .ok_or_else(|| OramError::Invariant("linked list ended early".into()))?;
        let block = reconstruct_at(net, data, pos)?;
        let link = decode_link(&reconstruct_at(net, links, pos)?)?;
        self.reads += 1;
        self.next = match link {
            Some(t) => Some(t),
            None if !self.in_dummies => {
                self.in_dummies = true;
                self.dummy_head.take()
            }
            None => None,
        };
        let entry = Entry::decode(&block)?;
        Ok((block, entry))
    }
}

/// Read-once instrumentation over the storage-server copies of a traversal.
struct ReadOnce {
    arrays: Vec<crate::simnet::ArrayRef>,
}

impl ReadOnce {
    fn start(net: &mut Net, data: &Layout, links: &Layout) -> Result<Self> {
        let mut arrays = Vec::new();
        if net.instrumented() {
            for b in 0..3 {
                arrays.push(data.own(b));
                arrays.push(links.own(b));
            }
            for a in &arrays {
                net.watch(*a)?;
            }
        }
        Ok(ReadOnce { arrays })
    }

    fn stop(self, net: &mut Net) -> Result<()> {
        for a in self.arrays {
            net.unwatch(a)?;
        }
        Ok(())
    }
}
