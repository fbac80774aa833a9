//! The full ORAM: position-based ORAMs at depths `0..=D`, where depth `D`
//! holds the data and depth `d < D` holds, for every `d`-bit address prefix,
//! the labels of its two children one depth down.

use std::collections::HashMap;

use crate::block::{
    decode_label_payload, ChildLabel, Entry, MetaPayload, PositionLabel, PositionTuple,
    DEFAULT_DATA_WIDTH, ENTRY_HEADER, META_WIDTH,
};
use crate::error::{ensure_invariant, OramError, Result};
use crate::obliv::stable_compact;
use crate::otm;
use crate::pos_oram::PosOram;
use crate::rng::RandomSource;
use crate::sharing::{read_entry, write_entry, Layout};
use crate::simnet::{Net, TraceMode};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Request {
    Read(u64),
    Write(u64, Vec<u8>),
}

impl Request {
    pub fn addr(&self) -> u64 {
        match self {
            Request::Read(a) | Request::Write(a, _) => *a,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OramConfig {
    /// Number of logical blocks; a power of two.
    pub capacity: u64,
    /// Width of data blocks at the bottom depth, header included.
    pub data_width: usize,
    pub trace: TraceMode,
    /// Turns on the read-once guards and truncation checks.
    pub instrumented: bool,
}

impl OramConfig {
    pub fn new(capacity: u64) -> Self {
        OramConfig {
            capacity,
            data_width: DEFAULT_DATA_WIDTH,
            trace: TraceMode::Off,
            instrumented: false,
        }
    }

    /// Data width used for the large-block regime: `8 * D^2` bytes.
    pub fn big_block_width(capacity: u64) -> usize {
        let d = capacity.max(2).trailing_zeros() as usize;
        (8 * d * d).max(DEFAULT_DATA_WIDTH)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.capacity.is_power_of_two() {
            return Err(OramError::InvalidConfig(format!(
                "capacity {} is not a power of two",
                self.capacity
            )));
        }
        if self.capacity > 1 << 31 {
            return Err(OramError::InvalidConfig(format!(
                "capacity {} too large",
                self.capacity
            )));
        }
        if self.data_width <= ENTRY_HEADER {
            return Err(OramError::InvalidConfig(format!(
                "data width {} leaves no room for a payload",
                self.data_width
            )));
        }
        Ok(())
    }
}

#[derive(Debug)]
pub struct OramSystem {
    cfg: OramConfig,
    depth: usize,
    net: Net,
    rs: RandomSource,
    orams: Vec<PosOram>,
    root: PositionLabel,
    accesses: u64,
    setup_blocks: u64,
    setup_bytes: u64,
    last_rebuilt: Vec<usize>,
}

impl OramSystem {
    /// Bootstraps an all-zero memory: the bottom depth is built with every
    /// address, and each shallower depth from the labels one depth down.
    pub fn new(cfg: OramConfig, seed: u64) -> Result<Self> {
        Self::with_randomness(cfg, RandomSource::new(seed))
    }

    pub fn with_randomness(cfg: OramConfig, mut rs: RandomSource) -> Result<Self> {
        cfg.validate()?;
        let depth = cfg.capacity.trailing_zeros() as usize;
        let mut net = Net::new(cfg.trace);
        net.set_instrumented(cfg.instrumented);
        let mut orams: Vec<PosOram> = (0..=depth)
            .map(|d| {
                PosOram::new(
                    d,
                    if d == depth {
                        cfg.data_width
                    } else {
                        META_WIDTH
                    },
                )
            })
            .collect();

        let root = net.scoped("setup", |net| -> Result<PositionLabel> {
            let mut rng = rs.stream("setup");
            let data = Layout::alloc(net, "setup", cfg.capacity as usize, cfg.data_width);
            let zero = vec![0u8; cfg.data_width - ENTRY_HEADER];
            for a in 0..cfg.capacity {
                write_entry(net, &mut rng, &data, a as usize, &Entry::real(a, &zero))?;
            }
            let (top, mut keymap) = otm::build(net, &mut rs, data, depth as u8)?;
            orams[depth].install(depth, top)?;
            for d in (0..depth).rev() {
                let parents = convert(net, &mut rs, &keymap, d + 1)?;
                keymap.free(net);
                let mut parents = stable_compact(net, &mut rs, parents)?;
                parents.truncate(net, 1 << d)?;
                let (level, next) = otm::build(net, &mut rs, parents, d as u8)?;
                orams[d].install(d, level)?;
                keymap = next;
            }
            let root = read_root(net, &keymap);
            keymap.free(net);
            root
        })?;

        let setup_blocks = net.meter().total_blocks();
        let setup_bytes = net.meter().total_bytes();
        Ok(OramSystem {
            cfg,
            depth,
            net,
            rs,
            orams,
            root,
            accesses: 0,
            setup_blocks,
            setup_bytes,
            last_rebuilt: vec![0; depth + 1],
        })
    }

    pub fn config(&self) -> &OramConfig {
        &self.cfg
    }

    pub fn capacity(&self) -> u64 {
        self.cfg.capacity
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Bytes of user data per block.
    pub fn payload_len(&self) -> usize {
        self.cfg.data_width - ENTRY_HEADER
    }

    pub fn net(&self) -> &Net {
        &self.net
    }

    pub fn net_mut(&mut self) -> &mut Net {
        &mut self.net
    }

    pub fn accesses(&self) -> u64 {
        self.accesses
    }

    pub fn setup_blocks(&self) -> u64 {
        self.setup_blocks
    }

    pub fn setup_bytes(&self) -> u64 {
        self.setup_bytes
    }

    /// Level rebuilt at each depth by the most recent access.
    pub fn last_rebuilt(&self) -> &[usize] {
        &self.last_rebuilt
    }

    /// Full/empty flags of every level at every depth.
    pub fn occupancy(&self) -> Vec<Vec<bool>> {
        self.orams.iter().map(PosOram::occupancy).collect()
    }

    pub fn read(&mut self, addr: u64) -> Result<Vec<u8>> {
        self.access(&Request::Read(addr))
    }

    pub fn write(&mut self, addr: u64, data: &[u8]) -> Result<Vec<u8>> {
        self.access(&Request::Write(addr, data.to_vec()))
    }

    /// Performs one access and returns the value held before it. Written
    /// data shorter than the payload is zero padded.
    pub fn access(&mut self, req: &Request) -> Result<Vec<u8>> {
        let addr = req.addr();
        if addr >= self.cfg.capacity {
            return Err(OramError::AddressOutOfRange {
                addr,
                capacity: self.cfg.capacity,
            });
        }
        if let Request::Write(_, data) = req {
            if data.len() > self.payload_len() {
                return Err(OramError::InvalidConfig(format!(
                    "{} bytes written into a {}-byte payload",
                    data.len(),
                    self.payload_len()
                )));
            }
        }
        let d_max = self.depth;
        let Self {
            net,
            rs,
            orams,
            root,
            ..
        } = self;

        let old = net.scoped("fetch", |net| -> Result<Vec<u8>> {
            let mut label = *root;
            for d in 0..=d_max {
                let key = addr >> (d_max - d);
                let found = orams[d].lookup(net, rs, key, label)?;
                let payload = found.payload().expect("lookup checks the key").to_vec();
                if d < d_max {
                    let bit = (addr >> (d_max - d - 1)) & 1;
                    label = match MetaPayload::decode(&payload)?.child(bit) {
                        ChildLabel::Assigned(l) => l,
                        other => {
                            return Err(OramError::Invariant(format!(
                                "depth {d} key {key} has child {other:?}"
                            )))
                        }
                    };
                    orams[d].place_fetched(net, rs, &found)?;
                } else {
                    let fresh = match req {
                        Request::Read(_) => found,
                        Request::Write(_, data) => Entry::real(key, data),
                    };
                    orams[d].place_fetched(net, rs, &fresh)?;
                    return Ok(payload);
                }
            }
            unreachable!("the loop returns at the bottom depth")
        })?;

        let top_empty = orams[d_max].smallest_empty();
        let rebuilt = net.scoped("maintain", |net| -> Result<Vec<usize>> {
            let mut rebuilt = vec![0; d_max + 1];
            let mut update = None;
            for d in (0..=d_max).rev() {
                let l = if d < top_empty { d } else { top_empty };
                if top_empty < d {
                    ensure_invariant!(
                        orams[d].smallest_empty() == top_empty,
                        "depth {d} has smallest empty level {} but the bottom depth has {top_empty}",
                        orams[d].smallest_empty()
                    );
                }
                let keymap = orams[d].shuffle(net, rs, l, update.take())?;
                rebuilt[d] = l;
                if d >= 1 {
                    update = Some(convert(net, rs, &keymap, d)?);
                } else {
                    *root = read_root(net, &keymap)?;
                }
                keymap.free(net);
            }
            Ok(rebuilt)
        })?;
        self.last_rebuilt = rebuilt;
        self.accesses += 1;
        Ok(old)
    }

    /// Follows labels from the root for every address and checks that each
    /// step lands on the key at the smallest level holding it. Returns the
    /// payload found for every address. Unmetered; for tests.
    pub fn walk_label_chains(&self) -> Result<Vec<Vec<u8>>> {
        let mut freshest: Vec<HashMap<u64, (usize, PositionTuple, Entry)>> = Vec::new();
        for oram in &self.orams {
            let mut map = HashMap::new();
            for j in 0..=oram.depth() {
                if let Some(level) = oram.level(j) {
                    for (e, t) in level.peek_contents(&self.net)? {
                        if let Some(k) = e.key() {
                            map.entry(k).or_insert((j, t, e));
                        }
                    }
                }
            }
            freshest.push(map);
        }
        let mut out = Vec::with_capacity(self.cfg.capacity as usize);
        for addr in 0..self.cfg.capacity {
            let mut label = self.root;
            for (d, map) in freshest.iter().enumerate() {
                let key = addr >> (self.depth - d);
                let (level, tuple, entry) = map.get(&key).ok_or_else(|| {
                    OramError::Invariant(format!("depth {d} has no entry for {key}"))
                })?;
                ensure_invariant!(
                    *level == label.level as usize && *tuple == label.tuple,
                    "label for {key} at depth {d} is {label:?}, freshest copy at level {level} {tuple:?}"
                );
                let payload = entry.payload().expect("real");
                if d < self.depth {
                    let bit = (addr >> (self.depth - d - 1)) & 1;
                    label = MetaPayload::decode(payload)?
                        .child(bit)
                        .label()
                        .ok_or_else(|| {
                            OramError::Invariant(format!(
                                "unassigned child under {key} at depth {d}"
                            ))
                        })?;
                } else {
                    out.push(payload.to_vec());
                }
            }
        }
        Ok(out)
    }
}

impl Drop for OramSystem {
    fn drop(&mut self) {
        for oram in self.orams.drain(..) {
            oram.free(&mut self.net);
        }
    }
}

fn read_root(net: &mut Net, keymap: &Layout) -> Result<PositionLabel> {
    let e = read_entry(net, keymap, 0)?;
    ensure_invariant!(
        e.key() == Some(0),
        "root key-position map holds {:?}",
        e.key()
    );
    decode_label_payload(e.payload().expect("real"))
}

/// Packs the labels of depth-`d` keys into update entries for their parents.
/// Sibling pairs collapse into one entry (the right sibling's slot becomes a
/// dummy); a lone child leaves the other label as "keep". One pass over a
/// sliding window of three entries.
pub fn convert(net: &mut Net, rs: &mut RandomSource, keymap: &Layout, d: usize) -> Result<Layout> {
    ensure_invariant!(d >= 1, "convert at depth 0");
    let n = keymap.len();
    let mut rng = rs.stream("convert");
    net.scoped("convert", |net| {
        let out = Layout::alloc(net, "convert", n, META_WIDTH);
        if n == 0 {
            return Ok(out);
        }
        let mut prev = Entry::Dummy;
        let mut cur = read_entry(net, keymap, 0)?;
        for i in 0..n {
            let next = if i + 1 < n {
                read_entry(net, keymap, i + 1)?
            } else {
                Entry::Dummy
            };
            write_entry(net, &mut rng, &out, i, &convert_one(&prev, &cur, &next, d)?)?;
            prev = std::mem::replace(&mut cur, next);
        }
        Ok(out)
    })
}

fn convert_one(prev: &Entry, cur: &Entry, next: &Entry, d: usize) -> Result<Entry> {
    let Some(addr) = cur.key() else {
        return Ok(Entry::Dummy);
    };
    ensure_invariant!(addr >> d == 0, "key {addr} is not a depth-{d} address");
    let label = |e: &Entry| -> Result<ChildLabel> {
        Ok(ChildLabel::Assigned(decode_label_payload(
            e.payload().expect("real"),
        )?))
    };
    let parent = addr >> 1;
    let meta = if addr & 1 == 0 {
        if next.key() == Some(addr + 1) {
            MetaPayload {
                left: label(cur)?,
                right: label(next)?,
            }
        } else {
            MetaPayload {
                left: label(cur)?,
                right: ChildLabel::Keep,
            }
        }
    } else if prev.key() == Some(addr - 1) {
        return Ok(Entry::Dummy);
    } else {
        MetaPayload {
            left: ChildLabel::Keep,
            right: label(cur)?,
        }
    };
    Ok(Entry::real(parent, &meta.encode()))
}
