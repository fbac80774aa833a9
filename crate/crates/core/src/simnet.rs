//! Three passive storage servers and one client on a simulated network.
//!
//! Servers only ever answer single-block reads and writes issued by the
//! client. Every transfer advances the round clock by one, is charged to the
//! bandwidth meter under the innermost protocol scope, and is optionally
//! recorded in a trace from which a corrupt server's view can be projected.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use serde::Serialize;
use sha2::{Digest as _, Sha256};

use crate::block::Block;
use crate::error::{OramError, Result};

/// One of the three storage servers; arithmetic is modulo 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ServerId(u8);

impl ServerId {
    pub const ALL: [ServerId; 3] = [ServerId(0), ServerId(1), ServerId(2)];

    pub fn new(b: usize) -> Self {
        ServerId((b % 3) as u8)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn succ(self) -> Self {
        ServerId((self.0 + 1) % 3)
    }

    pub fn pred(self) -> Self {
        ServerId((self.0 + 2) % 3)
    }
}

impl fmt::Display for ServerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "S{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Party {
    Client,
    Server(ServerId),
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Party::Client => f.write_str("client"),
            Party::Server(s) => s.fmt(f),
        }
    }
}

/// What a stored array holds: share `T_k` or permutation `π_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Part {
    Share(u8),
    Perm(u8),
}

impl fmt::Display for Part {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Part::Share(k) => write!(f, "T{k}"),
            Part::Perm(k) => write!(f, "pi{k}"),
        }
    }
}

/// Handle to an array stored on one server.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ArrayRef {
    pub server: ServerId,
    slot: u32,
}

#[derive(Debug, Clone)]
struct StoredArray {
    name: Arc<str>,
    part: Part,
    width: usize,
    len: usize,
    data: Vec<u8>,
    /// Indices read since the array was put under watch.
    watched: Option<Vec<bool>>,
}

#[derive(Debug, Clone, Default)]
struct ServerStore {
    slots: Vec<Option<StoredArray>>,
    free: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum EventKind {
    ReadReq,
    ReadResp,
    WriteReq,
    Relay,
}

/// One message on the wire.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub round: u64,
    pub sender: Party,
    pub receiver: Party,
    pub kind: EventKind,
    pub array: Option<Arc<str>>,
    pub index: Option<u64>,
    pub size_blocks: u32,
    /// The block carried, when the trace records contents.
    pub content: Option<Block>,
}

impl TraceEvent {
    pub fn touches(&self, server: ServerId) -> bool {
        self.sender == Party::Server(server) || self.receiver == Party::Server(server)
    }

    /// One JSON line; `strip_index` nulls the physical index.
    pub fn to_json_line(&self, strip_index: bool) -> String {
        let mut out = Vec::new();
        self.write_json_line(strip_index, &mut out);
        String::from_utf8(out).expect("JSON is UTF-8")
    }

    /// Appends the line to `out`, without the newline.
    pub fn write_json_line(&self, strip_index: bool, out: &mut Vec<u8>) {
        let line = JsonLine {
            round: self.round,
            sender: self.sender,
            receiver: self.receiver,
            kind: self.kind,
            array: self.array.as_deref(),
            index: if strip_index { None } else { self.index },
            size_blocks: self.size_blocks,
        };
        serde_json::to_writer(out, &line).expect("trace line serializes");
    }
}

#[derive(Serialize)]
struct JsonLine<'a> {
    round: u64,
    #[serde(serialize_with = "as_display")]
    sender: Party,
    #[serde(serialize_with = "as_display")]
    receiver: Party,
    kind: EventKind,
    array: Option<&'a str>,
    index: Option<u64>,
    size_blocks: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceMode {
    Off,
    /// SHA-256 over the content- and index-stripped JSON lines.
    Digest,
    /// Every event in memory, with block contents if asked for.
    Full {
        contents: bool,
    },
}

#[derive(Debug, Clone)]
enum Recorder {
    Off,
    Digest {
        hasher: Sha256,
        events: u64,
        /// Reused buffer for one serialized line.
        scratch: Vec<u8>,
    },
    Full {
        contents: bool,
        events: Vec<TraceEvent>,
    },
}

/// Blocks and bytes moved, per protocol label.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Meter {
    labels: Vec<&'static str>,
    blocks: Vec<u64>,
    bytes: Vec<u64>,
}

impl Meter {
    fn slot(&mut self, label: &'static str) -> usize {
        match self.labels.iter().position(|l| *l == label) {
            Some(i) => i,
            None => {
                self.labels.push(label);
                self.blocks.push(0);
                self.bytes.push(0);
                self.labels.len() - 1
            }
        }
    }

    pub fn total_blocks(&self) -> u64 {
        self.blocks.iter().sum()
    }

    pub fn total_bytes(&self) -> u64 {
        self.bytes.iter().sum()
    }

    pub fn blocks_for(&self, label: &str) -> u64 {
        self.labels
            .iter()
            .position(|l| *l == label)
            .map_or(0, |i| self.blocks[i])
    }

    pub fn by_label(&self) -> impl Iterator<Item = (&'static str, u64, u64)> + '_ {
        (0..self.labels.len()).map(|i| (self.labels[i], self.blocks[i], self.bytes[i]))
    }
}

/// The simulated deployment: three servers, the wire, and its instruments.
#[derive(Debug, Clone)]
pub struct Net {
    servers: [ServerStore; 3],
    round: u64,
    meter: Meter,
    scopes: Vec<usize>,
    recorder: Recorder,
    serial: u64,
    instrumented: bool,
}

impl Default for Net {
    fn default() -> Self {
        Net::new(TraceMode::Off)
    }
}

impl Net {
    pub fn new(mode: TraceMode) -> Self {
        let mut meter = Meter::default();
        let root = meter.slot("other");
        Net {
            servers: Default::default(),
            round: 0,
            meter,
            scopes: vec![root],
            recorder: match mode {
                TraceMode::Off => Recorder::Off,
                TraceMode::Digest => Recorder::Digest {
                    hasher: Sha256::new(),
                    events: 0,
                    scratch: Vec::new(),
                },
                TraceMode::Full { contents } => Recorder::Full {
                    contents,
                    events: Vec::new(),
                },
            },
            serial: 0,
            instrumented: false,
        }
    }

    /// Turns on the read-once guard for watched arrays.
    pub fn set_instrumented(&mut self, on: bool) {
        self.instrumented = on;
    }

    pub fn instrumented(&self) -> bool {
        self.instrumented
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn meter(&self) -> &Meter {
        &self.meter
    }

    /// Runs `f` with transfers charged to `label`.
    pub fn scoped<T>(&mut self, label: &'static str, f: impl FnOnce(&mut Net) -> T) -> T {
        let slot = self.meter.slot(label);
        self.scopes.push(slot);
        let out = f(self);
        self.scopes.pop();
        out
    }

    pub fn next_serial(&mut self) -> u64 {
        self.serial += 1;
        self.serial
    }

    /// Allocates a zero-filled array on `server`. Server-local; not a transfer.
    pub fn alloc(
        &mut self,
        server: ServerId,
        name: Arc<str>,
        part: Part,
        len: usize,
        width: usize,
    ) -> ArrayRef {
        let array = StoredArray {
            name,
            part,
            width,
            len,
            data: vec![0; len * width],
            watched: None,
        };
        let store = &mut self.servers[server.index()];
        let slot = match store.free.pop() {
            Some(s) => {
                store.slots[s as usize] = Some(array);
                s
            }
            None => {
                store.slots.push(Some(array));
                (store.slots.len() - 1) as u32
            }
        };
        ArrayRef { server, slot }
    }

    pub fn free(&mut self, array: ArrayRef) {
        let store = &mut self.servers[array.server.index()];
        if let Some(entry) = store.slots.get_mut(array.slot as usize) {
            if entry.take().is_some() {
                store.free.push(array.slot);
            }
        }
    }

    fn stored(&self, array: ArrayRef) -> Result<&StoredArray> {
        self.servers[array.server.index()]
            .slots
            .get(array.slot as usize)
            .and_then(Option::as_ref)
            .ok_or(OramError::UnknownArray {
                server: array.server,
                slot: array.slot,
            })
    }

    fn stored_mut(&mut self, array: ArrayRef) -> Result<&mut StoredArray> {
        self.servers[array.server.index()]
            .slots
            .get_mut(array.slot as usize)
            .and_then(Option::as_mut)
            .ok_or(OramError::UnknownArray {
                server: array.server,
                slot: array.slot,
            })
    }

    pub fn len_of(&self, array: ArrayRef) -> Result<usize> {
        Ok(self.stored(array)?.len)
    }

    pub fn width_of(&self, array: ArrayRef) -> Result<usize> {
        Ok(self.stored(array)?.width)
    }

    pub fn name_of(&self, array: ArrayRef) -> Result<Arc<str>> {
        Ok(self.stored(array)?.name.clone())
    }

    pub fn part_of(&self, array: ArrayRef) -> Result<Part> {
        Ok(self.stored(array)?.part)
    }

    /// Client reads one block.
    pub fn read(&mut self, array: ArrayRef, index: usize) -> Result<Block> {
        let instrumented = self.instrumented;
        let stored = self.stored_mut(array)?;
        if index >= stored.len {
            return Err(OramError::IndexOutOfRange {
                index,
                len: stored.len,
            });
        }
        if instrumented {
            if let Some(seen) = stored.watched.as_mut() {
                if std::mem::replace(&mut seen[index], true) {
                    return Err(OramError::NonRecurrence {
                        server: array.server,
                        index,
                    });
                }
            }
        }
        let w = stored.width;
        let block = Block::from_slice(&stored.data[index * w..(index + 1) * w]);
        self.charge(w);
        if !matches!(self.recorder, Recorder::Off) {
            let name = self.stored(array)?.name.clone();
            let server = Party::Server(array.server);
            self.record(
                Party::Client,
                server,
                EventKind::ReadReq,
                Some(name),
                Some(index as u64),
                0,
                None,
            );
            self.record(
                server,
                Party::Client,
                EventKind::ReadResp,
                None,
                None,
                1,
                Some(&block),
            );
        }
        self.round += 1;
        Ok(block)
    }

    /// Client writes one block.
    pub fn write(&mut self, array: ArrayRef, index: usize, value: &Block) -> Result<()> {
        let stored = self.stored_mut(array)?;
        if index >= stored.len {
            return Err(OramError::IndexOutOfRange {
                index,
                len: stored.len,
            });
        }
        let w = stored.width;
        if value.width() != w {
            return Err(OramError::WidthMismatch {
                expected: w,
                actual: value.width(),
            });
        }
        stored.data[index * w..(index + 1) * w].copy_from_slice(value.as_bytes());
        self.charge(w);
        if !matches!(self.recorder, Recorder::Off) {
            let name = self.stored(array)?.name.clone();
            self.record(
                Party::Client,
                Party::Server(array.server),
                EventKind::WriteReq,
                Some(name),
                Some(index as u64),
                1,
                Some(value),
            );
        }
        self.round += 1;
        Ok(())
    }

    /// Copies an array to another server through the client, block by block.
    /// The copy keeps the source's name and part.
    pub fn relay_array(&mut self, from: ArrayRef, to: ServerId) -> Result<ArrayRef> {
        let (name, part, len, width) = {
            let s = self.stored(from)?;
            (s.name.clone(), s.part, s.len, s.width)
        };
        let dest = self.alloc(to, name.clone(), part, len, width);
        if !matches!(self.recorder, Recorder::Off) {
            self.record(
                Party::Server(from.server),
                Party::Server(to),
                EventKind::Relay,
                Some(name),
                None,
                0,
                None,
            );
        }
        for i in 0..len {
            let block = self.read(from, i)?;
            self.write(dest, i, &block)?;
        }
        Ok(dest)
    }

    /// Server-local reinterpretation of `a ++ b` as one array; both inputs
    /// are consumed. Nothing crosses the wire.
    pub fn concat_local(&mut self, a: ArrayRef, b: ArrayRef) -> Result<ArrayRef> {
        if a.server != b.server {
            return Err(OramError::Invariant("concatenation across servers".into()));
        }
        let tail = self.stored_mut(b)?.data.split_off(0);
        let (blen, bwidth) = (self.stored(b)?.len, self.stored(b)?.width);
        let head = self.stored_mut(a)?;
        if head.width != bwidth {
            return Err(OramError::WidthMismatch {
                expected: head.width,
                actual: bwidth,
            });
        }
        head.data.extend_from_slice(&tail);
        head.len += blen;
        self.free(b);
        Ok(a)
    }

    /// Server-local resize: truncates, or appends zero blocks.
    pub fn resize_local(&mut self, array: ArrayRef, len: usize) -> Result<()> {
        let stored = self.stored_mut(array)?;
        stored.data.resize(len * stored.width, 0);
        stored.len = len;
        if let Some(seen) = stored.watched.as_mut() {
            seen.resize(len, false);
        }
        Ok(())
    }

    /// Starts tracking reads of `array`; with instrumentation on, a second
    /// read of any index is an error.
    pub fn watch(&mut self, array: ArrayRef) -> Result<()> {
        let stored = self.stored_mut(array)?;
        stored.watched = Some(vec![false; stored.len]);
        Ok(())
    }

    pub fn unwatch(&mut self, array: ArrayRef) -> Result<()> {
        self.stored_mut(array)?.watched = None;
        Ok(())
    }

    /// Reads a stored block without touching the wire. For white-box checks.
    pub fn peek(&self, array: ArrayRef, index: usize) -> Result<Block> {
        let stored = self.stored(array)?;
        if index >= stored.len {
            return Err(OramError::IndexOutOfRange {
                index,
                len: stored.len,
            });
        }
        let w = stored.width;
        Ok(Block::from_slice(&stored.data[index * w..(index + 1) * w]))
    }

    /// Number of live arrays across all servers.
    pub fn live_arrays(&self) -> usize {
        self.servers
            .iter()
            .map(|s| s.slots.iter().filter(|a| a.is_some()).count())
            .sum()
    }

    /// Bytes held by all servers.
    pub fn stored_bytes(&self) -> usize {
        self.servers
            .iter()
            .flat_map(|s| s.slots.iter().flatten())
            .map(|a| a.data.len())
            .sum()
    }

    fn charge(&mut self, width: usize) {
        let slot = *self.scopes.last().expect("root scope");
        self.meter.blocks[slot] += 1;
        self.meter.bytes[slot] += width as u64;
    }

    #[allow(clippy::too_many_arguments)]
    fn record(
        &mut self,
        sender: Party,
        receiver: Party,
        kind: EventKind,
        array: Option<Arc<str>>,
        index: Option<u64>,
        size_blocks: u32,
        content: Option<&Block>,
    ) {
        let round = self.round;
        match &mut self.recorder {
            Recorder::Off => {}
            Recorder::Digest {
                hasher,
                events,
                scratch,
            } => {
                scratch.clear();
                let line = JsonLine {
                    round,
                    sender,
                    receiver,
                    kind,
                    array: array.as_deref(),
                    index: None,
                    size_blocks,
                };
                serde_json::to_writer(&mut *scratch, &line).expect("trace line serializes");
                scratch.push(b'\n');
                hasher.update(&scratch[..]);
                *events += 1;
            }
            Recorder::Full { contents, events } => {
                let content = if *contents { content.cloned() } else { None };
                events.push(TraceEvent {
                    round,
                    sender,
                    receiver,
                    kind,
                    array,
                    index,
                    size_blocks,
                    content,
                });
            }
        }
    }

    /// Recorded events (empty unless the trace mode is `Full`).
    pub fn events(&self) -> &[TraceEvent] {
        match &self.recorder {
            Recorder::Full { events, .. } => events,
            _ => &[],
        }
    }

    pub fn take_events(&mut self) -> Vec<TraceEvent> {
        match &mut self.recorder {
            Recorder::Full { events, .. } => std::mem::take(events),
            _ => Vec::new(),
        }
    }

    /// Digest of the stripped trace so far, with its event count.
    ///
    /// In `Full` mode the digest is computed from the stored events, so both
    /// modes agree on the same run.
    pub fn pattern_digest(&self) -> Option<(String, u64)> {
        match &self.recorder {
            Recorder::Off => None,
            Recorder::Digest { hasher, events, .. } => {
                Some((hex::encode(hasher.clone().finalize()), *events))
            }
            Recorder::Full { events, .. } => {
                let mut h = Sha256::new();
                for ev in events {
                    h.update(ev.to_json_line(true).as_bytes());
                    h.update(b"\n");
                }
                Some((hex::encode(h.finalize()), events.len() as u64))
            }
        }
    }
}

/// Writes events as JSON lines.
pub fn write_jsonl(
    events: &[TraceEvent],
    strip_index: bool,
    mut out: impl Write,
) -> std::io::Result<()> {
    let mut line = Vec::new();
    for ev in events {
        line.clear();
        ev.write_json_line(strip_index, &mut line);
        line.push(b'\n');
        out.write_all(&line)?;
    }
    Ok(())
}

/// A message between honest parties as the adversary sees it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct PatternEvent {
    pub round: u64,
    #[serde(serialize_with = "as_display")]
    pub sender: Party,
    #[serde(serialize_with = "as_display")]
    pub receiver: Party,
    pub size_blocks: u32,
}

fn as_display<S: serde::Serializer>(p: &Party, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(p)
}

/// What one corrupt server observes.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AdversaryView {
    pub corrupt: Option<ServerId>,
    pub events: Vec<TraceEvent>,
    pub honest_pattern: Vec<PatternEvent>,
}

impl AdversaryView {
    /// Physical indices the client asked the corrupt server to read, in order,
    /// restricted to arrays for which `keep` holds.
    pub fn read_indices(&self, mut keep: impl FnMut(&str) -> bool) -> Vec<u64> {
        self.events
            .iter()
            .filter(|e| e.kind == EventKind::ReadReq)
            .filter(|e| e.array.as_deref().is_some_and(&mut keep))
            .filter_map(|e| e.index)
            .collect()
    }
}

pub fn extract_view(trace: &[TraceEvent], corrupt: ServerId) -> AdversaryView {
    let mut view = AdversaryView {
        corrupt: Some(corrupt),
        ..Default::default()
    };
    for ev in trace {
        if ev.touches(corrupt) {
            view.events.push(ev.clone());
        } else {
            view.honest_pattern.push(PatternEvent {
                round: ev.round,
                sender: ev.sender,
                receiver: ev.receiver,
                size_blocks: ev.size_blocks,
            });
        }
    }
    view
}
