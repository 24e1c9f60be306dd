//! Fixed-width binary descriptors, Hamming distance, median-threshold
//! binarization, and a bit-splitting search tree for threshold queries in
//! Hamming space.
//!
//! The tree descends a single branch per query (fast, approximate) and
//! re-verifies every candidate against the true Hamming distance, so
//! results are always sound; completeness is approximate. `linear_scan`
//! is the exact counterpart.

use thiserror::Error;

/// Descriptor-match threshold in bits.
pub const DEFAULT_MATCH_TAU: u32 = 50;
/// Entries a leaf holds before it tries to split.
pub const DEFAULT_LEAF_CAPACITY: usize = 100;

#[derive(Debug, Error, PartialEq)]
pub enum DescriptorError {
    #[error("descriptor length mismatch: {a} vs {b} bits")]
    LengthMismatch { a: usize, b: usize },
    #[error("empty vector")]
    EmptyVector,
    #[error("non-finite value at index {0}")]
    NonFiniteValue(usize),
    #[error("invalid descriptor length {0} bits: must be a positive multiple of 8")]
    InvalidLength(usize),
    #[error("invalid hex descriptor: {0}")]
    InvalidHex(String),
    #[error("leaf capacity must be at least 1")]
    InvalidLeafCapacity,
}

/// A fixed-width bit string. Length is always a positive multiple of 8 and
/// immutable after creation.
///
/// Bit `i` lives in byte `i / 8`, most significant bit first, so the hex
/// rendering reads left-to-right in bit order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryDescriptor {
    bytes: Vec<u8>,
}

impl BinaryDescriptor {
    pub fn from_bytes(bytes: Vec<u8>) -> Result<BinaryDescriptor, DescriptorError> {
        if bytes.is_empty() {
            return Err(DescriptorError::InvalidLength(0));
        }
        Ok(BinaryDescriptor { bytes })
    }

    pub fn zeros(len_bits: usize) -> Result<BinaryDescriptor, DescriptorError> {
        if len_bits == 0 || !len_bits.is_multiple_of(8) {
            return Err(DescriptorError::InvalidLength(len_bits));
        }
        Ok(BinaryDescriptor {
            bytes: vec![0; len_bits / 8],
        })
    }

    pub fn len_bits(&self) -> usize {
        self.bytes.len() * 8
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn bit(&self, i: usize) -> bool {
        debug_assert!(i < self.len_bits());
        self.bytes[i / 8] & (0x80 >> (i % 8)) != 0
    }

    pub fn set_bit(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.len_bits());
        let mask = 0x80 >> (i % 8);
        if value {
            self.bytes[i / 8] |= mask;
        } else {
            self.bytes[i / 8] &= !mask;
        }
    }

    pub fn complement(&self) -> BinaryDescriptor {
        BinaryDescriptor {
            bytes: self.bytes.iter().map(|b| !b).collect(),
        }
    }

    pub fn count_ones(&self) -> u32 {
        self.bytes.iter().map(|b| b.count_ones()).sum()
    }

    /// Lowercase hex, two chars per byte, bit 0 first.
    pub fn to_hex(&self) -> String {
        let mut s = String::with_capacity(self.bytes.len() * 2);
        for b in &self.bytes {
            s.push_str(&format!("{b:02x}"));
        }
        s
    }

    pub fn from_hex(s: &str) -> Result<BinaryDescriptor, DescriptorError> {
        if s.is_empty() || !s.len().is_multiple_of(2) {
            return Err(DescriptorError::InvalidHex(s.to_string()));
        }
        let mut bytes = Vec::with_capacity(s.len() / 2);
        for chunk in s.as_bytes().chunks(2) {
            let hi =
                hex_digit(chunk[0]).ok_or_else(|| DescriptorError::InvalidHex(s.to_string()))?;
            let lo =
                hex_digit(chunk[1]).ok_or_else(|| DescriptorError::InvalidHex(s.to_string()))?;
            bytes.push(hi << 4 | lo);
        }
        Ok(BinaryDescriptor { bytes })
    }
}

fn hex_digit(c: u8) -> Option<u8> {
    match c {
        b'0'..=b'9' => Some(c - b'0'),
        b'a'..=b'f' => Some(c - b'a' + 10),
        b'A'..=b'F' => Some(c - b'A' + 10),
        _ => None,
    }
}

/// Number of differing bit positions between two equal-length descriptors.
pub fn hamming(a: &BinaryDescriptor, b: &BinaryDescriptor) -> Result<u32, DescriptorError> {
    if a.len_bits() != b.len_bits() {
        return Err(DescriptorError::LengthMismatch {
            a: a.len_bits(),
            b: b.len_bits(),
        });
    }
    Ok(a.bytes
        .iter()
        .zip(&b.bytes)
        .map(|(x, y)| (x ^ y).count_ones())
        .sum())
}

/// Binarizes a real vector: bit i is set iff `v[i]` strictly exceeds the
/// median of `v`. Output length is rounded up to a byte multiple; padding
/// bits are zero.
pub fn binarize_median(v: &[f64]) -> Result<BinaryDescriptor, DescriptorError> {
    if v.is_empty() {
        return Err(DescriptorError::EmptyVector);
    }
    if let Some(i) = v.iter().position(|x| !x.is_finite()) {
        return Err(DescriptorError::NonFiniteValue(i));
    }
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };
    let len_bits = n.div_ceil(8) * 8;
    let mut out = BinaryDescriptor::zeros(len_bits)?;
    for (i, &x) in v.iter().enumerate() {
        if x > median {
            out.set_bit(i, true);
        }
    }
    Ok(out)
}

/// One descriptor stored in an index, with its source keypoint and map.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorEntry {
    pub descriptor: BinaryDescriptor,
    /// Index into the source map's point set.
    pub keypoint_id: usize,
    /// Identifier of the source local map.
    pub map_id: u64,
}

#[derive(Debug, Clone)]
struct Stored {
    seq: u64,
    entry: DescriptorEntry,
}

#[derive(Debug, Clone)]
enum Node {
    Leaf(Vec<Stored>),
    Split {
        bit: usize,
        zero: Box<Node>,
        one: Box<Node>,
    },
}

/// Binary search tree over descriptors that splits leaves on single bit
/// positions. Supports insertion and approximate threshold queries.
///
/// Not internally synchronized: insertion needs exclusive access, and a
/// tree that is no longer mutated can be queried concurrently.
#[derive(Debug, Clone)]
pub struct HammingTree {
    len_bits: usize,
    leaf_capacity: usize,
    root: Node,
    next_seq: u64,
}

impl HammingTree {
    pub fn new(len_bits: usize) -> Result<HammingTree, DescriptorError> {
        Self::with_leaf_capacity(len_bits, DEFAULT_LEAF_CAPACITY)
    }

    pub fn with_leaf_capacity(
        len_bits: usize,
        leaf_capacity: usize,
    ) -> Result<HammingTree, DescriptorError> {
        if len_bits == 0 || !len_bits.is_multiple_of(8) {
            return Err(DescriptorError::InvalidLength(len_bits));
        }
        if leaf_capacity == 0 {
            return Err(DescriptorError::InvalidLeafCapacity);
        }
        Ok(HammingTree {
            len_bits,
            leaf_capacity,
            root: Node::Leaf(Vec::new()),
            next_seq: 0,
        })
    }

    pub fn len_bits(&self) -> usize {
        self.len_bits
    }

    pub fn leaf_capacity(&self) -> usize {
        self.leaf_capacity
    }

    pub fn len(&self) -> usize {
        self.next_seq as usize
    }

    pub fn is_empty(&self) -> bool {
        self.next_seq == 0
    }

    /// Inserts an entry, splitting the destination leaf when it exceeds
    /// capacity. The split bit is the unused index whose set-count among
    /// resident entries is closest to half (ties to the lowest index); if
    /// no bit separates the entries the leaf stays oversized.
    pub fn insert(&mut self, entry: DescriptorEntry) -> Result<(), DescriptorError> {
        if entry.descriptor.len_bits() != self.len_bits {
            return Err(DescriptorError::LengthMismatch {
                a: entry.descriptor.len_bits(),
                b: self.len_bits,
            });
        }
        let stored = Stored {
            seq: self.next_seq,
            entry,
        };
        self.next_seq += 1;

        let mut used = vec![false; self.len_bits];
        let mut node = &mut self.root;
        loop {
            match node {
                Node::Split { bit, zero, one } => {
                    used[*bit] = true;
                    node = if stored.entry.descriptor.bit(*bit) {
                        one
                    } else {
                        zero
                    };
                }
                Node::Leaf(entries) => {
                    entries.push(stored);
                    if entries.len() > self.leaf_capacity {
                        if let Some(bit) = choose_split_bit(entries, &used) {
                            let mut zero = Vec::new();
                            let mut one = Vec::new();
                            for s in entries.drain(..) {
                                if s.entry.descriptor.bit(bit) {
                                    one.push(s);
                                } else {
                                    zero.push(s);
                                }
                            }
                            *node = Node::Split {
                                bit,
                                zero: Box::new(Node::Leaf(zero)),
                                one: Box::new(Node::Leaf(one)),
                            };
                        }
                    }
                    return Ok(());
                }
            }
        }
    }

    /// Single-path threshold query: descends the branch matching the query
    /// bit at every split, then returns the leaf entries within `tau`,
    /// sorted by distance (ties by insertion order).
    pub fn query(
        &self,
        descriptor: &BinaryDescriptor,
        tau: u32,
    ) -> Result<Vec<(DescriptorEntry, u32)>, DescriptorError> {
        if descriptor.len_bits() != self.len_bits {
            return Err(DescriptorError::LengthMismatch {
                a: descriptor.len_bits(),
                b: self.len_bits,
            });
        }
        let mut node = &self.root;
        loop {
            match node {
                Node::Split { bit, zero, one } => {
                    node = if descriptor.bit(*bit) { one } else { zero };
                }
                Node::Leaf(entries) => {
                    let mut out: Vec<(u64, DescriptorEntry, u32)> = Vec::new();
                    for s in entries {
                        let d = hamming(&s.entry.descriptor, descriptor)?;
                        if d <= tau {
                            out.push((s.seq, s.entry.clone(), d));
                        }
                    }
                    out.sort_by_key(|(seq, _, d)| (*d, *seq));
                    return Ok(out.into_iter().map(|(_, e, d)| (e, d)).collect());
                }
            }
        }
    }

    /// All entries in insertion order (for exhaustive scans).
    pub fn entries(&self) -> Vec<&DescriptorEntry> {
        let mut stored: Vec<&Stored> = Vec::with_capacity(self.len());
        collect(&self.root, &mut stored);
        stored.sort_by_key(|s| s.seq);
        stored.into_iter().map(|s| &s.entry).collect()
    }
}

fn collect<'a>(node: &'a Node, out: &mut Vec<&'a Stored>) {
    match node {
        Node::Leaf(entries) => out.extend(entries.iter()),
        Node::Split { zero, one, .. } => {
            collect(zero, out);
            collect(one, out);
        }
    }
}

/// Picks the split bit: among unused indices that actually separate the
/// entries (0 < set-count < n), the one with set-count closest to half,
/// ties to the lowest index.
fn choose_split_bit(entries: &[Stored], used: &[bool]) -> Option<usize> {
    let n = entries.len();
    let mut best: Option<(usize, usize)> = None; // (|2*count - n| distance, bit)
    for bit in 0..used.len() {
        if used[bit] {
            continue;
        }
        let count = entries
            .iter()
            .filter(|s| s.entry.descriptor.bit(bit))
            .count();
        if count == 0 || count == n {
            continue;
        }
        let dist = (2 * count).abs_diff(n);
        match best {
            Some((bd, _)) if bd <= dist => {}
            _ => best = Some((dist, bit)),
        }
    }
    best.map(|(_, bit)| bit)
}

/// Exhaustive threshold scan with the same sort contract as
/// [`HammingTree::query`]; iteration order defines the insertion order used
/// for tie-breaking.
pub fn linear_scan<'a, I>(
    entries: I,
    descriptor: &BinaryDescriptor,
    tau: u32,
) -> Result<Vec<(DescriptorEntry, u32)>, DescriptorError>
where
    I: IntoIterator<Item = &'a DescriptorEntry>,
{
    let mut out: Vec<(usize, DescriptorEntry, u32)> = Vec::new();
    for (i, e) in entries.into_iter().enumerate() {
        let d = hamming(&e.descriptor, descriptor)?;
        if d <= tau {
            out.push((i, e.clone(), d));
        }
    }
    out.sort_by_key(|(i, _, d)| (*d, *i));
    Ok(out.into_iter().map(|(_, e, d)| (e, d)).collect())
}
