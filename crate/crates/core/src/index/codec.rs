//! Binary index file.
//!
//! All integers little-endian.
//!
//! ```text
//! file    := magic:"NKGI" version:u16 reserved:u16 count:u32 fingerprint:u64
//!            filter{count} crc:u32
//! filter  := attr_len:u16 attr:utf8 has_vp:u8 (vp_len:u16 vp:utf8)?
//!            m:u64 k:u32 seed:u64 n:u64 bits_crc:u32 bits:u64{ceil(m/64)}
//! ```
//!
//! `fingerprint` identifies the assessment settings the index was built under.
//! `crc` is CRC-32 over every preceding byte of the file; `bits_crc` is CRC-32
//! over the filter's raw bit words. Coarse filters (no viewpoint) come first,
//! each group sorted by key.

use thiserror::Error;

use super::{AttributionIndexSet, BloomFilter};

pub const INDEX_MAGIC: [u8; 4] = *b"NKGI";
pub const INDEX_VERSION: u16 = 1;
const HEADER_LEN: usize = 20;
const MAX_HASHES: u32 = 1024;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodecError {
    #[error("index file too short ({0} bytes)")]
    TooShort(usize),
    #[error("not an index file (bad magic)")]
    BadMagic,
    #[error("unsupported index format version {0} (expected {INDEX_VERSION})")]
    UnsupportedVersion(u16),
    #[error("index checksum mismatch")]
    Checksum,
    #[error("bit array checksum mismatch in filter `{0}`")]
    FilterChecksum(String),
    #[error("malformed index: {0}")]
    Malformed(String),
}

pub fn serialize_index(index: &AttributionIndexSet) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&INDEX_MAGIC);
    out.extend_from_slice(&INDEX_VERSION.to_le_bytes());
    out.extend_from_slice(&0u16.to_le_bytes());
    out.extend_from_slice(&(index.filter_count() as u32).to_le_bytes());
    out.extend_from_slice(&index.fingerprint().to_le_bytes());
    for (a, f) in index.coarse_filters() {
        write_filter(&mut out, a, None, f);
    }
    for (a, v, f) in index.fine_filters() {
        write_filter(&mut out, a, Some(v), f);
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

fn write_str(out: &mut Vec<u8>, s: &str) {
    let len = u16::try_from(s.len()).expect("identifier longer than 65535 bytes");
    out.extend_from_slice(&len.to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

fn write_filter(out: &mut Vec<u8>, attribution: &str, viewpoint: Option<&str>, f: &BloomFilter) {
    write_str(out, attribution);
    match viewpoint {
        Some(v) => {
            out.push(1);
            write_str(out, v);
        }
        None => out.push(0),
    }
    out.extend_from_slice(&f.bit_len().to_le_bytes());
    out.extend_from_slice(&f.hash_count().to_le_bytes());
    out.extend_from_slice(&f.seed().to_le_bytes());
    out.extend_from_slice(&f.inserted().to_le_bytes());
    let bits: Vec<u8> = f.words().iter().flat_map(|w| w.to_le_bytes()).collect();
    out.extend_from_slice(&crc32fast::hash(&bits).to_le_bytes());
    out.extend_from_slice(&bits);
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CodecError> {
        let end = self.pos.checked_add(n).filter(|e| *e <= self.buf.len());
        let Some(end) = end else {
            return Err(CodecError::Malformed(format!("unexpected end of data at byte {}", self.pos)));
        };
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, CodecError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, CodecError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32, CodecError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, CodecError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn string(&mut self) -> Result<String, CodecError> {
        let len = self.u16()? as usize;
        let bytes = self.take(len)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| CodecError::Malformed("identifier is not UTF-8".into()))
    }
}

pub fn deserialize_index(bytes: &[u8]) -> Result<AttributionIndexSet, CodecError> {
    if bytes.len() < HEADER_LEN + 4 {
        return Err(CodecError::TooShort(bytes.len()));
    }
    if bytes[..4] != INDEX_MAGIC {
        return Err(CodecError::BadMagic);
    }
    let (body, trailer) = bytes.split_at(bytes.len() - 4);
    if crc32fast::hash(body) != u32::from_le_bytes(trailer.try_into().expect("4 bytes")) {
        return Err(CodecError::Checksum);
    }
    let mut r = Reader { buf: body, pos: 4 };
    let version = r.u16()?;
    if version != INDEX_VERSION {
        return Err(CodecError::UnsupportedVersion(version));
    }
    if r.u16()? != 0 {
        return Err(CodecError::Malformed("reserved header bits set".into()));
    }
    let count = r.u32()?;
    let mut index = AttributionIndexSet::with_fingerprint(r.u64()?);
    for _ in 0..count {
        let attribution = r.string()?;
        let viewpoint = match r.u8()? {
            0 => None,
            1 => Some(r.string()?),
            other => return Err(CodecError::Malformed(format!("bad viewpoint flag {other}"))),
        };
        let m = r.u64()?;
        let k = r.u32()?;
        let seed = r.u64()?;
        let n = r.u64()?;
        let bits_crc = r.u32()?;
        if m == 0 || k == 0 || k > MAX_HASHES {
            return Err(CodecError::Malformed(format!("invalid filter parameters m={m} k={k}")));
        }
        let words = m.div_ceil(64);
        let remaining = (body.len() - r.pos) as u64;
        if words.checked_mul(8).is_none_or(|b| b > remaining) {
            return Err(CodecError::Malformed(format!("filter declares {m} bits but only {remaining} bytes remain")));
        }
        let raw = r.take(words as usize * 8)?;
        let name = match &viewpoint {
            Some(v) => format!("{attribution}/{v}"),
            None => attribution.clone(),
        };
        if crc32fast::hash(raw) != bits_crc {
            return Err(CodecError::FilterChecksum(name));
        }
        let bits: Vec<u64> = raw.chunks_exact(8).map(|c| u64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
        if m % 64 != 0 && bits.last().is_some_and(|w| w >> (m % 64) != 0) {
            return Err(CodecError::Malformed(format!("filter `{name}` has bits set beyond m")));
        }
        let filter = BloomFilter::from_raw(bits, m, k, seed, n);
        let fresh = match viewpoint {
            None => index.insert_coarse(attribution, filter),
            Some(v) => index.insert_fine(attribution, v, filter),
        };
        if !fresh {
            return Err(CodecError::Malformed(format!("duplicate filter `{name}`")));
        }
    }
    if r.pos != body.len() {
        return Err(CodecError::Malformed(format!("{} trailing bytes", body.len() - r.pos)));
    }
    Ok(index)
}
