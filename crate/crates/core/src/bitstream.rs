//! Bitstream containers for quantizer index streams.
//!
//! Channel-entry streams use magic `ADQF`, singular-vector streams use
//! `ADQS` and append a per-user (N_k, L_k) table after the fixed header.
//! Indices are packed 2 bits each, big-endian within a byte (first index
//! in the top bits); each sample is padded to a byte boundary so samples
//! stay byte-addressable. Multi-byte header integers are little-endian.

use crate::error::{Error, Result};

pub const MAGIC_CHANNEL: [u8; 4] = *b"ADQF";
pub const MAGIC_SINGULAR: [u8; 4] = *b"ADQS";
pub const FORMAT_VERSION: u8 = 1;

/// Fixed 16-byte header shared by both containers. For `ADQS` streams the
/// `n` field holds the user count K and a (N_k, L_k) byte pair per user
/// follows the header.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamHeader {
    pub magic: [u8; 4],
    pub version: u8,
    pub bits: u8,
    pub m: u8,
    pub n: u8,
    pub n_samples: u32,
    pub sample_rate_hz: u32,
}

impl StreamHeader {
    pub fn write(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.magic);
        out.push(self.version);
        out.push(self.bits);
        out.push(self.m);
        out.push(self.n);
        out.extend_from_slice(&self.n_samples.to_le_bytes());
        out.extend_from_slice(&self.sample_rate_hz.to_le_bytes());
    }

    pub fn read(bytes: &[u8]) -> Result<(Self, usize)> {
        if bytes.len() < 16 {
            return Err(Error::Format("truncated header".into()));
        }
        let magic = [bytes[0], bytes[1], bytes[2], bytes[3]];
        if magic != MAGIC_CHANNEL && magic != MAGIC_SINGULAR {
            return Err(Error::Format(format!("bad magic {magic:?}")));
        }
        let version = bytes[4];
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let header = Self {
            magic,
            version,
            bits: bytes[5],
            m: bytes[6],
            n: bytes[7],
            n_samples: u32::from_le_bytes(bytes[8..12].try_into().unwrap()),
            sample_rate_hz: u32::from_le_bytes(bytes[12..16].try_into().unwrap()),
        };
        Ok((header, 16))
    }
}

/// Packs 2-bit symbols most-significant-first.
#[derive(Debug, Default)]
pub struct BitWriter {
    bytes: Vec<u8>,
    current: u8,
    filled: u8,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push_index(&mut self, index: u8) {
        debug_assert!(index < 4);
        self.current |= (index & 0b11) << (6 - self.filled);
        self.filled += 2;
        if self.filled == 8 {
            self.bytes.push(self.current);
            self.current = 0;
            self.filled = 0;
        }
    }

    /// Pad to the next byte boundary with zero bits.
    pub fn align(&mut self) {
        if self.filled > 0 {
            self.bytes.push(self.current);
            self.current = 0;
            self.filled = 0;
        }
    }

    pub fn into_bytes(mut self) -> Vec<u8> {
        self.align();
        self.bytes
    }
}

/// Reads 2-bit symbols written by `BitWriter`.
#[derive(Debug)]
pub struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
    bit: u8,
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        Self {
            bytes,
            pos: 0,
            bit: 0,
        }
    }

    pub fn read_index(&mut self) -> Result<u8> {
        if self.pos >= self.bytes.len() {
            return Err(Error::Format("bitstream exhausted".into()));
        }
        let v = (self.bytes[self.pos] >> (6 - self.bit)) & 0b11;
        self.bit += 2;
        if self.bit == 8 {
            self.bit = 0;
            self.pos += 1;
        }
        Ok(v)
    }

    pub fn align(&mut self) {
        if self.bit > 0 {
            self.bit = 0;
            self.pos += 1;
        }
    }
}
