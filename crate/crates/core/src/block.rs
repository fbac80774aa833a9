//! Blocks and the fixed-field encodings of everything the protocols store in
//! them: entries, links, position labels and position-map payloads.
//!
//! Layout of an entry block (little endian):
//!
//! ```text
//! byte 0      tag: 0 = dummy, 1 = real, 2 = special dummy
//! bytes 1..9  key (or the special-dummy index)
//! bytes 9..   payload, zero padded to the block width
//! ```
//!
//! The all-zero block decodes to the dummy entry, so a freshly zeroed share
//! triple is an array of dummies.

use std::fmt;

use smallvec::SmallVec;

use crate::error::{OramError, Result};

/// Tag byte plus the 8-byte key.
pub const ENTRY_HEADER: usize = 9;
/// Width of link blocks: a validity tag and three `u32` indices.
pub const LINK_WIDTH: usize = 16;
/// Width of key-position and position-map blocks.
pub const META_WIDTH: usize = 40;
/// Width of permutation-array blocks: one `u64` index.
pub const PERM_WIDTH: usize = 8;
/// Default width of data blocks.
pub const DEFAULT_DATA_WIDTH: usize = 16;

const CHILD_LABEL_LEN: usize = 14;
const META_PAYLOAD_LEN: usize = 2 * CHILD_LABEL_LEN;

pub type Payload = SmallVec<[u8; 32]>;

/// A fixed-width bit string; the unit of storage, transfer and sharing.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Block(SmallVec<[u8; 48]>);

impl Block {
    pub fn zero(width: usize) -> Self {
        Block(SmallVec::from_elem(0, width))
    }

    pub fn from_slice(bytes: &[u8]) -> Self {
        Block(SmallVec::from_slice(bytes))
    }

    pub fn width(&self) -> usize {
        self.0.len()
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn as_bytes_mut(&mut self) -> &mut [u8] {
        &mut self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&b| b == 0)
    }

    pub fn xor_assign(&mut self, other: &Block) -> Result<()> {
        if self.width() != other.width() {
            return Err(OramError::WidthMismatch {
                expected: self.width(),
                actual: other.width(),
            });
        }
        for (a, b) in self.0.iter_mut().zip(other.0.iter()) {
            *a ^= b;
        }
        Ok(())
    }

    pub fn xor(&self, other: &Block) -> Result<Block> {
        let mut out = self.clone();
        out.xor_assign(other)?;
        Ok(out)
    }
}

impl fmt::Debug for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Block({})", hex::encode(&self.0))
    }
}

/// Logical content of one array slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Entry {
    Dummy,
    Real {
        key: u64,
        payload: Payload,
    },
    /// The `i`-th filler dummy appended by a one-time memory build.
    SpecialDummy(u64),
}

impl Entry {
    pub fn real(key: u64, payload: &[u8]) -> Self {
        Entry::Real {
            key,
            payload: Payload::from_slice(payload),
        }
    }

    pub fn is_real(&self) -> bool {
        matches!(self, Entry::Real { .. })
    }

    pub fn key(&self) -> Option<u64> {
        match self {
            Entry::Real { key, .. } => Some(*key),
            _ => None,
        }
    }

    pub fn payload(&self) -> Option<&[u8]> {
        match self {
            Entry::Real { payload, .. } => Some(payload),
            _ => None,
        }
    }

    /// Encodes into a block of `width` bytes; short payloads are zero padded.
    pub fn encode(&self, width: usize) -> Result<Block> {
        if width < ENTRY_HEADER {
            return Err(OramError::WidthMismatch {
                expected: ENTRY_HEADER,
                actual: width,
            });
        }
        let mut block = Block::zero(width);
        let bytes = block.as_bytes_mut();
        match self {
            Entry::Dummy => {}
            Entry::Real { key, payload } => {
                if payload.len() > width - ENTRY_HEADER {
                    return Err(OramError::WidthMismatch {
                        expected: width - ENTRY_HEADER,
                        actual: payload.len(),
                    });
                }
                bytes[0] = 1;
                bytes[1..9].copy_from_slice(&key.to_le_bytes());
                bytes[9..9 + payload.len()].copy_from_slice(payload);
            }
            Entry::SpecialDummy(i) => {
                bytes[0] = 2;
                bytes[1..9].copy_from_slice(&i.to_le_bytes());
            }
        }
        Ok(block)
    }

    /// Decodes a block. Real payloads come back at full `width - 9` length.
    pub fn decode(block: &Block) -> Result<Entry> {
        let bytes = block.as_bytes();
        if bytes.len() < ENTRY_HEADER {
            return Err(OramError::Decode(format!(
                "entry block of {} bytes",
                bytes.len()
            )));
        }
        let key = u64::from_le_bytes(bytes[1..9].try_into().expect("8 bytes"));
        let rest_zero = bytes[9..].iter().all(|&b| b == 0);
        match bytes[0] {
            0 if key == 0 && rest_zero => Ok(Entry::Dummy),
            1 => Ok(Entry::Real {
                key,
                payload: Payload::from_slice(&bytes[9..]),
            }),
            2 if rest_zero => Ok(Entry::SpecialDummy(key)),
            tag => Err(OramError::Decode(format!(
                "non-canonical entry with tag {tag}"
            ))),
        }
    }
}

/// One physical index per server: where the three shares of an element sit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct PositionTuple(pub [u32; 3]);

impl PositionTuple {
    pub fn new(p0: usize, p1: usize, p2: usize) -> Self {
        PositionTuple([p0 as u32, p1 as u32, p2 as u32])
    }

    pub fn get(&self, share: usize) -> usize {
        self.0[share] as usize
    }

    fn write(&self, out: &mut [u8]) {
        for (k, idx) in self.0.iter().enumerate() {
            out[4 * k..4 * k + 4].copy_from_slice(&idx.to_le_bytes());
        }
    }

    fn read(bytes: &[u8]) -> Self {
        let mut t = [0u32; 3];
        for (k, slot) in t.iter_mut().enumerate() {
            *slot = u32::from_le_bytes(bytes[4 * k..4 * k + 4].try_into().expect("4 bytes"));
        }
        PositionTuple(t)
    }
}

/// A next-pointer: a position tuple, or `None` for the end of a list.
pub type Link = Option<PositionTuple>;

pub fn encode_link(link: Link) -> Block {
    let mut block = Block::zero(LINK_WIDTH);
    if let Some(t) = link {
        let bytes = block.as_bytes_mut();
        bytes[0] = 1;
        t.write(&mut bytes[1..13]);
    }
    block
}

pub fn decode_link(block: &Block) -> Result<Link> {
    let bytes = block.as_bytes();
    if bytes.len() != LINK_WIDTH {
        return Err(OramError::WidthMismatch {
            expected: LINK_WIDTH,
            actual: bytes.len(),
        });
    }
    match bytes[0] {
        0 if bytes.iter().all(|&b| b == 0) => Ok(None),
        1 => Ok(Some(PositionTuple::read(&bytes[1..13]))),
        tag => Err(OramError::Decode(format!("link tag {tag}"))),
    }
}

pub fn encode_index(index: usize) -> Block {
    Block::from_slice(&(index as u64).to_le_bytes())
}

pub fn decode_index(block: &Block) -> Result<usize> {
    let bytes: [u8; 8] = block
        .as_bytes()
        .try_into()
        .map_err(|_| OramError::Decode(format!("index block of {} bytes", block.width())))?;
    Ok(u64::from_le_bytes(bytes) as usize)
}

/// Where an entry of a position-based ORAM lives: its level and the tuple
/// into that level's one-time memory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PositionLabel {
    pub level: u8,
    pub tuple: PositionTuple,
}

/// A child slot of a position-map entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChildLabel {
    Unassigned,
    Assigned(PositionLabel),
    /// In an update entry: keep whatever label is already stored.
    Keep,
}

impl ChildLabel {
    fn write(&self, out: &mut [u8]) {
        match self {
            ChildLabel::Unassigned => {}
            ChildLabel::Assigned(l) => {
                out[0] = 1;
                out[1] = l.level;
                l.tuple.write(&mut out[2..14]);
            }
            ChildLabel::Keep => out[0] = 2,
        }
    }

    fn read(bytes: &[u8]) -> Result<Self> {
        match bytes[0] {
            0 => Ok(ChildLabel::Unassigned),
            1 => Ok(ChildLabel::Assigned(PositionLabel {
                level: bytes[1],
                tuple: PositionTuple::read(&bytes[2..14]),
            })),
            2 => Ok(ChildLabel::Keep),
            tag => Err(OramError::Decode(format!("child label tag {tag}"))),
        }
    }

    pub fn label(&self) -> Option<PositionLabel> {
        match self {
            ChildLabel::Assigned(l) => Some(*l),
            _ => None,
        }
    }
}

/// Payload of a key-position entry: the label of the keyed element.
pub fn encode_label_payload(label: PositionLabel) -> Payload {
    let mut p = Payload::from_elem(0, CHILD_LABEL_LEN);
    ChildLabel::Assigned(label).write(&mut p);
    p
}

pub fn decode_label_payload(payload: &[u8]) -> Result<PositionLabel> {
    if payload.len() < CHILD_LABEL_LEN {
        return Err(OramError::Decode("short label payload".into()));
    }
    ChildLabel::read(&payload[..CHILD_LABEL_LEN])?
        .label()
        .ok_or_else(|| OramError::Decode("label payload without a label".into()))
}

/// Payload of a position-map entry: labels of the two children one depth down.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MetaPayload {
    pub left: ChildLabel,
    pub right: ChildLabel,
}

impl MetaPayload {
    pub fn child(&self, bit: u64) -> ChildLabel {
        if bit & 1 == 0 {
            self.left
        } else {
            self.right
        }
    }

    pub fn encode(&self) -> Payload {
        let mut p = Payload::from_elem(0, META_PAYLOAD_LEN);
        self.left.write(&mut p[..CHILD_LABEL_LEN]);
        self.right.write(&mut p[CHILD_LABEL_LEN..]);
        p
    }

    pub fn decode(payload: &[u8]) -> Result<Self> {
        if payload.len() < META_PAYLOAD_LEN {
            return Err(OramError::Decode("short position-map payload".into()));
        }
        Ok(MetaPayload {
            left: ChildLabel::read(&payload[..CHILD_LABEL_LEN])?,
            right: ChildLabel::read(&payload[CHILD_LABEL_LEN..META_PAYLOAD_LEN])?,
        })
    }

    /// Applies an update entry: a `Keep` slot leaves the stored label alone.
    pub fn updated_by(&self, update: &MetaPayload) -> MetaPayload {
        let pick = |old: ChildLabel, new: ChildLabel| match new {
            ChildLabel::Keep => old,
            other => other,
        };
        MetaPayload {
            left: pick(self.left, update.left),
            right: pick(self.right, update.right),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entry_encoding_is_a_bijection_on_a_small_space() {
        let width = 10;
        let mut seen = std::collections::HashSet::new();
        let mut entries = vec![Entry::Dummy];
        for k in 0..=255u64 {
            entries.push(Entry::SpecialDummy(k));
            for v in 0..=255u8 {
                entries.push(Entry::real(k, &[v]));
            }
        }
        for e in &entries {
            let b = e.encode(width).unwrap();
            assert_eq!(&Entry::decode(&b).unwrap(), e);
            assert!(seen.insert(b), "two entries share an encoding");
        }
    }

    #[test]
    fn zero_block_is_dummy() {
        assert_eq!(Entry::decode(&Block::zero(16)).unwrap(), Entry::Dummy);
        assert_eq!(Entry::Dummy.encode(16).unwrap(), Block::zero(16));
    }

    #[test]
    fn non_canonical_dummy_is_rejected() {
        let mut b = Block::zero(16);
        b.as_bytes_mut()[12] = 1;
        assert!(Entry::decode(&b).is_err());
    }

    #[test]
    fn oversized_payload_is_rejected() {
        assert!(Entry::real(1, &[0; 8]).encode(16).is_err());
        assert!(Entry::real(1, &[0; 7]).encode(16).is_ok());
    }

    #[test]
    fn xor_requires_equal_width() {
        let mut a = Block::zero(4);
        assert!(a.xor_assign(&Block::zero(5)).is_err());
    }

    #[test]
    fn links_and_labels_round_trip() {
        let t = PositionTuple::new(3, 70_000, 0);
        assert_eq!(decode_link(&encode_link(Some(t))).unwrap(), Some(t));
        assert_eq!(decode_link(&encode_link(None)).unwrap(), None);
        let label = PositionLabel { level: 9, tuple: t };
        let meta = MetaPayload {
            left: ChildLabel::Assigned(label),
            right: ChildLabel::Keep,
        };
        let entry = Entry::real(5, &meta.encode());
        let back = Entry::decode(&entry.encode(META_WIDTH).unwrap()).unwrap();
        assert_eq!(MetaPayload::decode(back.payload().unwrap()).unwrap(), meta);
        assert_eq!(
            decode_label_payload(&encode_label_payload(label)).unwrap(),
            label
        );
    }

    #[test]
    fn update_keeps_starred_children() {
        let a = PositionLabel {
            level: 1,
            tuple: PositionTuple::new(1, 2, 3),
        };
        let b = PositionLabel {
            level: 2,
            tuple: PositionTuple::new(4, 5, 6),
        };
        let c = PositionLabel {
            level: 0,
            tuple: PositionTuple::new(0, 0, 1),
        };
        let old = MetaPayload {
            left: ChildLabel::Assigned(a),
            right: ChildLabel::Assigned(b),
        };
        let upd = MetaPayload {
            left: ChildLabel::Keep,
            right: ChildLabel::Assigned(c),
        };
        let got = old.updated_by(&upd);
        assert_eq!(got.left, ChildLabel::Assigned(a));
        assert_eq!(got.right, ChildLabel::Assigned(c));
    }
}
