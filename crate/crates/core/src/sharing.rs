//! XOR 3-way sharing and the layouts that hold shared arrays on the servers.
//!
//! Server `S_b` keeps its own share `T_b` and a mirror of `T_{b+1}`. The
//! mirror is what the permutation server works on; reconstruction reads own
//! shares only.

use std::sync::Arc;

use rand::RngCore;

use crate::block::PositionTuple;
use crate::block::{Block, Entry};
use crate::error::{OramError, Result};
use crate::rng::RandomSource;
use crate::simnet::{ArrayRef, Net, Part, ServerId};

/// Splits `value` into three shares that XOR back to it.
pub fn split3(value: &Block, rng: &mut impl RngCore) -> [Block; 3] {
    let w = value.width();
    let mut b0 = Block::zero(w);
    let mut b1 = Block::zero(w);
    rng.fill_bytes(b0.as_bytes_mut());
    rng.fill_bytes(b1.as_bytes_mut());
    let mut b2 = value.clone();
    for (o, (x, y)) in b2
        .as_bytes_mut()
        .iter_mut()
        .zip(b0.as_bytes().iter().zip(b1.as_bytes()))
    {
        *o ^= x ^ y;
    }
    [b0, b1, b2]
}

pub fn reconstruct3(b0: &Block, b1: &Block, b2: &Block) -> Result<Block> {
    let mut out = b0.xor(b1)?;
    out.xor_assign(b2)?;
    Ok(out)
}

/// A shared array: own share and mirror on every server.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    label: &'static str,
    len: usize,
    width: usize,
    own: [ArrayRef; 3],
    mirror: [ArrayRef; 3],
}

impl Layout {
    /// Allocates a zero-filled layout. Zero shares encode the all-dummy array
    /// (and the all-`⊥` link array).
    pub fn alloc(net: &mut Net, label: &'static str, len: usize, width: usize) -> Layout {
        let serial = net.next_serial();
        let names: [Arc<str>; 3] = std::array::from_fn(|k| {
            Arc::from(format!("{label}#{serial}/{}", Part::Share(k as u8)))
        });
        let own = std::array::from_fn(|b| {
            net.alloc(
                ServerId::new(b),
                names[b].clone(),
                Part::Share(b as u8),
                len,
                width,
            )
        });
        let mirror = std::array::from_fn(|b| {
            let k = (b + 1) % 3;
            net.alloc(
                ServerId::new(b),
                names[k].clone(),
                Part::Share(k as u8),
                len,
                width,
            )
        });
        Layout {
            label,
            len,
            width,
            own,
            mirror,
        }
    }

    /// Secret-writes `entries` into a fresh layout.
    pub fn load(
        net: &mut Net,
        rs: &mut RandomSource,
        label: &'static str,
        width: usize,
        entries: &[Entry],
    ) -> Result<Layout> {
        let layout = Layout::alloc(net, label, entries.len(), width);
        let mut rng = rs.stream("load");
        net.scoped("load", |net| {
            for (i, e) in entries.iter().enumerate() {
                secret_write(net, &mut rng, &layout, i, &e.encode(width)?)?;
            }
            Ok(layout)
        })
    }

    pub(crate) fn from_parts(
        label: &'static str,
        len: usize,
        width: usize,
        own: [ArrayRef; 3],
        mirror: [ArrayRef; 3],
    ) -> Layout {
        Layout {
            label,
            len,
            width,
            own,
            mirror,
        }
    }

    pub fn label(&self) -> &'static str {
        self.label
    }

    /// Label used for arrays derived from this layout from now on.
    pub fn set_label(&mut self, label: &'static str) {
        self.label = label;
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// `T_b` on `S_b`.
    pub fn own(&self, b: usize) -> ArrayRef {
        self.own[b % 3]
    }

    /// `T_{b+1}` on `S_b`.
    pub fn mirror(&self, b: usize) -> ArrayRef {
        self.mirror[b % 3]
    }

    pub fn free(self, net: &mut Net) {
        for a in self.own.into_iter().chain(self.mirror) {
            net.free(a);
        }
    }

    /// Drops everything past `len`. Server-local.
    pub fn truncate(&mut self, net: &mut Net, len: usize) -> Result<()> {
        if len > self.len {
            return Err(OramError::IndexOutOfRange {
                index: len,
                len: self.len,
            });
        }
        self.resize(net, len)
    }

    /// Appends zero shares (dummies) up to `len`. Server-local.
    pub fn extend(&mut self, net: &mut Net, len: usize) -> Result<()> {
        if len < self.len {
            return Err(OramError::LengthMismatch {
                left: len,
                right: self.len,
            });
        }
        self.resize(net, len)
    }

    fn resize(&mut self, net: &mut Net, len: usize) -> Result<()> {
        for a in self.own.iter().chain(self.mirror.iter()) {
            net.resize_local(*a, len)?;
        }
        self.len = len;
        Ok(())
    }

    /// Reinterprets `self ++ other` as one layout. Server-local.
    pub fn concat(self, net: &mut Net, other: Layout) -> Result<Layout> {
        if self.width != other.width {
            return Err(OramError::WidthMismatch {
                expected: self.width,
                actual: other.width,
            });
        }
        let mut own = self.own;
        let mut mirror = self.mirror;
        for b in 0..3 {
            own[b] = net.concat_local(self.own[b], other.own[b])?;
            mirror[b] = net.concat_local(self.mirror[b], other.mirror[b])?;
        }
        Ok(Layout {
            label: self.label,
            len: self.len + other.len,
            width: self.width,
            own,
            mirror,
        })
    }

    fn check_index(&self, index: usize) -> Result<()> {
        if index >= self.len {
            return Err(OramError::IndexOutOfRange {
                index,
                len: self.len,
            });
        }
        Ok(())
    }
}

/// Writes a fresh sharing of `value` at `index`: each share to its own
/// server and to the mirror on the preceding server.
pub fn secret_write(
    net: &mut Net,
    rng: &mut impl RngCore,
    layout: &Layout,
    index: usize,
    value: &Block,
) -> Result<()> {
    layout.check_index(index)?;
    if value.width() != layout.width {
        return Err(OramError::WidthMismatch {
            expected: layout.width,
            actual: value.width(),
        });
    }
    let shares = split3(value, rng);
    for b in 0..3 {
        net.write(layout.own[b], index, &shares[b])?;
    }
    for b in 0..3 {
        net.write(layout.mirror[b], index, &shares[(b + 1) % 3])?;
    }
    Ok(())
}

pub fn write_entry(
    net: &mut Net,
    rng: &mut impl RngCore,
    layout: &Layout,
    index: usize,
    entry: &Entry,
) -> Result<()> {
    secret_write(net, rng, layout, index, &entry.encode(layout.width)?)
}

/// Reads share `b` at `idx_b` from `S_b` for every `b` and XORs them.
pub fn reconstruct_at(net: &mut Net, layout: &Layout, idx: PositionTuple) -> Result<Block> {
    let s0 = net.read(layout.own[0], idx.get(0))?;
    let s1 = net.read(layout.own[1], idx.get(1))?;
    let s2 = net.read(layout.own[2], idx.get(2))?;
    reconstruct3(&s0, &s1, &s2)
}

pub fn reconstruct(net: &mut Net, layout: &Layout, index: usize) -> Result<Block> {
    reconstruct_at(net, layout, PositionTuple::new(index, index, index))
}

pub fn read_entry(net: &mut Net, layout: &Layout, index: usize) -> Result<Entry> {
    Entry::decode(&reconstruct(net, layout, index)?)
}

/// Reconstructs position `index` of an unpermuted layout from the mirrors,
/// as a permutation server would serve it.
pub fn reconstruct_from_mirrors(net: &mut Net, layout: &Layout, index: usize) -> Result<Block> {
    let s1 = net.read(layout.mirror[0], index)?;
    let s2 = net.read(layout.mirror[1], index)?;
    let s0 = net.read(layout.mirror[2], index)?;
    reconstruct3(&s0, &s1, &s2)
}

/// Unmetered look at the abstract content of an unpermuted layout.
pub fn peek_blocks(net: &Net, layout: &Layout) -> Result<Vec<Block>> {
    (0..layout.len)
        .map(|i| peek_at(net, layout, PositionTuple::new(i, i, i)))
        .collect()
}

/// Unmetered reconstruction at a position tuple.
pub fn peek_at(net: &Net, layout: &Layout, idx: PositionTuple) -> Result<Block> {
    reconstruct3(
        &net.peek(layout.own[0], idx.get(0))?,
        &net.peek(layout.own[1], idx.get(1))?,
        &net.peek(layout.own[2], idx.get(2))?,
    )
}

pub fn peek_entries(net: &Net, layout: &Layout) -> Result<Vec<Entry>> {
    peek_blocks(net, layout)?
        .iter()
        .map(Entry::decode)
        .collect()
}

/// Unmetered check that every mirror equals the own share it copies.
pub fn mirrors_consistent(net: &Net, layout: &Layout) -> Result<bool> {
    for b in 0..3 {
        let k = (b + 1) % 3;
        for i in 0..layout.len {
            if net.peek(layout.mirror[b], i)? != net.peek(layout.own[k], i)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
