//! Permutation servers: Fisher-Yates generation and the Permute / Unpermute
//! protocols.
//!
//! Server `S_b` holds `π_{b+1}` next to its mirror of `T_{b+1}`, so it can
//! move that share around while `S_{b+1}`, which ends up storing it, never
//! sees the permutation.

use std::sync::Arc;

use rand::RngCore;

use crate::block::{decode_index, encode_index, PositionTuple, PERM_WIDTH};
use crate::error::{OramError, Result};
use crate::rng::{uniform_below, RandomSource};
use crate::sharing::Layout;
use crate::simnet::{ArrayRef, Net, Part, ServerId};

/// Writes a uniformly random permutation of `[n]` onto `holder`
/// (inside-out Fisher-Yates: one read and two writes per index).
pub fn gen_random_perm(
    net: &mut Net,
    rng: &mut impl RngCore,
    holder: ServerId,
    n: usize,
    name: Arc<str>,
) -> Result<ArrayRef> {
    let part = Part::Perm(holder.succ().index() as u8);
    let a = net.alloc(holder, name, part, n, PERM_WIDTH);
    for i in 0..n {
        let j = uniform_below(rng, i as u64 + 1) as usize;
        let moved = net.read(a, j)?;
        net.write(a, i, &moved)?;
        net.write(a, j, &encode_index(i))?;
    }
    Ok(a)
}

/// The three permutations of one layout; `π_{b+1}` lives on `S_b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermSet {
    len: usize,
    held: [ArrayRef; 3],
}

impl PermSet {
    pub fn generate(
        net: &mut Net,
        rs: &mut RandomSource,
        label: &'static str,
        n: usize,
    ) -> Result<PermSet> {
        let mut rng = rs.stream("fisher_yates");
        let serial = net.next_serial();
        net.scoped("fisher_yates", |net| {
            let mut held = Vec::with_capacity(3);
            for b in 0..3 {
                let k = (b + 1) % 3;
                let name: Arc<str> = Arc::from(format!("{label}#{serial}/{}", Part::Perm(k as u8)));
                held.push(gen_random_perm(net, &mut rng, ServerId::new(b), n, name)?);
            }
            Ok(PermSet {
                len: n,
                held: [held[0], held[1], held[2]],
            })
        })
    }

    /// Writes the given mappings (`maps[k]` is `π_k`). For tests and tools.
    pub fn from_mappings(
        net: &mut Net,
        label: &'static str,
        maps: [&[usize]; 3],
    ) -> Result<PermSet> {
        let n = maps[0].len();
        let serial = net.next_serial();
        let mut held = Vec::with_capacity(3);
        for b in 0..3 {
            let k = (b + 1) % 3;
            let map = maps[k];
            if map.len() != n {
                return Err(OramError::LengthMismatch {
                    left: n,
                    right: map.len(),
                });
            }
            let name: Arc<str> = Arc::from(format!("{label}#{serial}/{}", Part::Perm(k as u8)));
            let a = net.alloc(ServerId::new(b), name, Part::Perm(k as u8), n, PERM_WIDTH);
            net.scoped("load", |net| -> Result<()> {
                for (i, &p) in map.iter().enumerate() {
                    net.write(a, i, &encode_index(p))?;
                }
                Ok(())
            })?;
            held.push(a);
        }
        Ok(PermSet {
            len: n,
            held: [held[0], held[1], held[2]],
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// `π_{b+1}`, stored on `S_b`.
    pub fn held_by(&self, b: usize) -> ArrayRef {
        self.held[b % 3]
    }

    /// `π_k`, stored on `S_{k-1}`.
    pub fn of_share(&self, k: usize) -> ArrayRef {
        self.held[(k + 2) % 3]
    }

    /// Reads `(π_0(i), π_1(i), π_2(i))` from the permutation servers.
    pub fn read_tuple(&self, net: &mut Net, i: usize) -> Result<PositionTuple> {
        let mut t = [0usize; 3];
        for (k, slot) in t.iter_mut().enumerate() {
            *slot = self.read_one(net, self.of_share(k), i)?;
        }
        Ok(PositionTuple::new(t[0], t[1], t[2]))
    }

    fn read_one(&self, net: &mut Net, array: ArrayRef, i: usize) -> Result<usize> {
        let p = decode_index(&net.read(array, i)?)?;
        if p >= self.len {
            return Err(OramError::IndexOutOfRange {
                index: p,
                len: self.len,
            });
        }
        Ok(p)
    }

    /// Unmetered copy of `π_k`.
    pub fn peek_mapping(&self, net: &Net, k: usize) -> Result<Vec<usize>> {
        (0..self.len)
            .map(|i| decode_index(&net.peek(self.of_share(k), i)?))
            .collect()
    }

    pub fn free(self, net: &mut Net) {
        for a in self.held {
            net.free(a);
        }
    }
}

fn random_masks(rng: &mut impl RngCore, width: usize) -> [crate::block::Block; 3] {
    let mut m0 = crate::block::Block::zero(width);
    let mut m1 = crate::block::Block::zero(width);
    rng.fill_bytes(m0.as_bytes_mut());
    rng.fill_bytes(m1.as_bytes_mut());
    let m2 = m0.xor(&m1).expect("equal widths");
    [m0, m1, m2]
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Direction {
    Forward,
    Inverse,
}

/// Applies the permutations to unpermuted columns sharing one index space.
/// Every share is masked with a zero-sum triple on its permutation server,
/// then relayed to its storage server. The inputs are consumed.
pub fn permute(
    net: &mut Net,
    rs: &mut RandomSource,
    cols: Vec<Layout>,
    perms: &PermSet,
) -> Result<Vec<Layout>> {
    let mut rng = rs.stream("permute");
    net.scoped("permute", |net| {
        shuffle_columns(net, &mut rng, cols, perms, Direction::Forward)
    })
}

/// Undoes the permutations of permuted columns, re-masking every share.
/// The inputs are consumed; `perms` is left for the caller to free.
pub fn unpermute(
    net: &mut Net,
    rs: &mut RandomSource,
    cols: Vec<Layout>,
    perms: &PermSet,
) -> Result<Vec<Layout>> {
    let mut rng = rs.stream("unpermute");
    net.scoped("unpermute", |net| {
        shuffle_columns(net, &mut rng, cols, perms, Direction::Inverse)
    })
}

fn shuffle_columns(
    net: &mut Net,
    rng: &mut impl RngCore,
    cols: Vec<Layout>,
    perms: &PermSet,
    dir: Direction,
) -> Result<Vec<Layout>> {
    let n = perms.len();
    for c in &cols {
        if c.len() != n {
            return Err(OramError::LengthMismatch {
                left: c.len(),
                right: n,
            });
        }
    }
    let serial = net.next_serial();
    let fresh: Vec<[ArrayRef; 3]> = cols
        .iter()
        .map(|c| {
            std::array::from_fn(|b| {
                let k = (b + 1) % 3;
                let name: Arc<str> =
                    Arc::from(format!("{}#{serial}/{}", c.label(), Part::Share(k as u8)));
                net.alloc(ServerId::new(b), name, Part::Share(k as u8), n, c.width())
            })
        })
        .collect();
    let mut masks = Vec::with_capacity(cols.len());
    for i in 0..n {
        masks.clear();
        masks.extend(cols.iter().map(|c| random_masks(rng, c.width())));
        for b in 0..3 {
            let k = (b + 1) % 3;
            let p = perms.read_one(net, perms.held_by(b), i)?;
            let (from, to) = match dir {
                Direction::Forward => (i, p),
                Direction::Inverse => (p, i),
            };
            for (c, col) in cols.iter().enumerate() {
                let mut x = net.read(col.mirror(b), from)?;
                x.xor_assign(&masks[c][k])?;
                net.write(fresh[c][b], to, &x)?;
            }
        }
    }
    let mut out = Vec::with_capacity(cols.len());
    for (col, mirror) in cols.into_iter().zip(fresh) {
        let mut own = [mirror[0]; 3];
        for b in 0..3 {
            let s = ServerId::new(b);
            own[s.succ().index()] = net.relay_array(mirror[b], s.succ())?;
        }
        out.push(Layout::from_parts(col.label(), n, col.width(), own, mirror));
        col.free(net);
    }
    Ok(out)
}
