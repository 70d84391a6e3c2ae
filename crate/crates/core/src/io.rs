//! Binary container for quantized tensors and raw `f32` ingestion.
//!
//! Container layout, little-endian, no padding:
//!
//! ```text
//! header (34 bytes)
//!   magic        [u8; 4] = "SBVR"
//!   version      u16     = 1
//!   flags        u16       bit 0: Hadamard rotation applied
//!   rows         u32
//!   cols         u32
//!   group_size   u32
//!   bits         u8
//!   reserved     u8      = 0
//!   hadamard_seed u64      0 unless flag bit 0 is set
//!   cache_len    u32
//! cache_len x { r f64, s f64, b f64, coeffs [f64; bits] }
//! rows * (cols / group_size) x { coeff_index u32, planes [u32; bits * ceil(group_size / 32)] }
//! ```

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::error::SbvrError;
use crate::types::{
    words_per_plane, BitPlanes, CoefficientSet, QuantizedGroup, SbvrTensor, MAX_BITS,
};

pub const MAGIC: [u8; 4] = *b"SBVR";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 34;
pub const FLAG_HADAMARD: u16 = 1;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("bad magic {found:02x?} at offset 0")]
    BadMagic { found: [u8; 4] },

    #[error("unsupported container version {found} at offset 4")]
    UnsupportedVersion { found: u16 },

    #[error("truncated input: expected {expected} bytes, got {actual}")]
    Truncated { expected: u64, actual: u64 },

    #[error("trailing bytes: expected {expected} bytes, got {actual}")]
    TrailingBytes { expected: u64, actual: u64 },

    #[error("invalid data at offset {offset}: {reason}")]
    Invalid { offset: u64, reason: String },

    #[error("raw tensor error: {0}")]
    Raw(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl FormatError {
    fn invalid(offset: usize, reason: impl Into<String>) -> Self {
        Self::Invalid {
            offset: offset as u64,
            reason: reason.into(),
        }
    }
}

/// Exact container length implied by the header fields, if it fits in `u64`.
pub fn container_len(
    rows: u64,
    cols: u64,
    group_size: u64,
    bits: u64,
    cache_len: u64,
) -> Option<u64> {
    let groups = rows.checked_mul(cols.checked_div(group_size)?)?;
    let group_rec = 4u64.checked_add(bits.checked_mul(group_size.div_ceil(32))?.checked_mul(4)?)?;
    let cache_rec = 8 * (3 + bits);
    (HEADER_LEN as u64)
        .checked_add(cache_len.checked_mul(cache_rec)?)?
        .checked_add(groups.checked_mul(group_rec)?)
}

/// Serializes `t` into a byte vector.
pub fn to_bytes(t: &SbvrTensor) -> Vec<u8> {
    let cap = container_len(
        t.rows() as u64,
        t.cols() as u64,
        t.group_size() as u64,
        t.bits() as u64,
        t.coeff_cache().len() as u64,
    )
    .unwrap_or(0) as usize;
    let mut buf = Vec::with_capacity(cap);
    buf.extend_from_slice(&MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    let flags = if t.hadamard_seed().is_some() {
        FLAG_HADAMARD
    } else {
        0
    };
    buf.extend_from_slice(&flags.to_le_bytes());
    buf.extend_from_slice(&(t.rows() as u32).to_le_bytes());
    buf.extend_from_slice(&(t.cols() as u32).to_le_bytes());
    buf.extend_from_slice(&(t.group_size() as u32).to_le_bytes());
    buf.push(t.bits() as u8);
    buf.push(0);
    buf.extend_from_slice(&t.hadamard_seed().unwrap_or(0).to_le_bytes());
    buf.extend_from_slice(&(t.coeff_cache().len() as u32).to_le_bytes());

    for cs in t.coeff_cache() {
        for v in [cs.ratio(), cs.scale(), cs.bias()]
            .iter()
            .chain(cs.coeffs())
        {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    for g in t.groups() {
        buf.extend_from_slice(&g.coeff_index.to_le_bytes());
        for w in g.planes.words() {
            buf.extend_from_slice(&w.to_le_bytes());
        }
    }
    buf
}

/// Writes the container to `sink`, returning the number of bytes written.
pub fn write_sbvr<W: Write>(t: &SbvrTensor, mut sink: W) -> io::Result<usize> {
    let bytes = to_bytes(t);
    sink.write_all(&bytes)?;
    sink.flush()?;
    Ok(bytes.len())
}

pub fn read_sbvr<R: Read>(mut source: R) -> Result<SbvrTensor, FormatError> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    from_bytes(&bytes)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take<const N: usize>(&mut self) -> [u8; N] {
        let out: [u8; N] = self.bytes[self.pos..self.pos + N]
            .try_into()
            .expect("length checked against the header");
        self.pos += N;
        out
    }

    fn u8(&mut self) -> u8 {
        self.take::<1>()[0]
    }

    fn u16(&mut self) -> u16 {
        u16::from_le_bytes(self.take())
    }

    fn u32(&mut self) -> u32 {
        u32::from_le_bytes(self.take())
    }

    fn u64(&mut self) -> u64 {
        u64::from_le_bytes(self.take())
    }

    fn f64(&mut self) -> f64 {
        f64::from_le_bytes(self.take())
    }
}

/// Parses and validates a container held in memory.
pub fn from_bytes(bytes: &[u8]) -> Result<SbvrTensor, FormatError> {
    let actual = bytes.len() as u64;
    if bytes.len() < HEADER_LEN {
        if bytes.len() >= 4 && bytes[..4] != MAGIC {
            return Err(FormatError::BadMagic {
                found: bytes[..4].try_into().unwrap(),
            });
        }
        return Err(FormatError::Truncated {
            expected: HEADER_LEN as u64,
            actual,
        });
    }
    let mut cur = Cursor { bytes, pos: 0 };
    let magic = cur.take::<4>();
    if magic != MAGIC {
        return Err(FormatError::BadMagic { found: magic });
    }
    let version = cur.u16();
    if version != VERSION {
        return Err(FormatError::UnsupportedVersion { found: version });
    }
    let flags = cur.u16();
    let rows = cur.u32();
    let cols = cur.u32();
    let group_size = cur.u32();
    let bits = cur.u8();
    let reserved = cur.u8();
    let seed = cur.u64();
    let cache_len = cur.u32();

    if flags & !FLAG_HADAMARD != 0 {
        return Err(FormatError::invalid(
            6,
            format!("unknown flag bits {flags:#06x}"),
        ));
    }
    if group_size == 0 || !cols.is_multiple_of(group_size) {
        return Err(FormatError::invalid(
            16,
            format!("cols {cols} is not a multiple of group size {group_size}"),
        ));
    }
    if bits == 0 || bits as usize > MAX_BITS {
        return Err(FormatError::invalid(
            20,
            format!("bits {bits} outside 1..={MAX_BITS}"),
        ));
    }
    if reserved != 0 {
        return Err(FormatError::invalid(21, "reserved byte is not zero"));
    }
    let hadamard_seed = if flags & FLAG_HADAMARD != 0 {
        if !group_size.is_power_of_two() {
            return Err(FormatError::invalid(
                16,
                format!("Hadamard rotation needs a power-of-two group size, got {group_size}"),
            ));
        }
        Some(seed)
    } else {
        if seed != 0 {
            return Err(FormatError::invalid(
                22,
                "seed present without the Hadamard flag",
            ));
        }
        None
    };

    let expected = container_len(
        rows as u64,
        cols as u64,
        group_size as u64,
        bits as u64,
        cache_len as u64,
    )
    .ok_or_else(|| FormatError::invalid(8, "header dimensions overflow"))?;
    if actual < expected {
        return Err(FormatError::Truncated { expected, actual });
    }
    if actual > expected {
        return Err(FormatError::TrailingBytes { expected, actual });
    }

    let bits = bits as usize;
    let group_size = group_size as usize;
    let mut cache = Vec::with_capacity(cache_len as usize);
    for _ in 0..cache_len {
        let offset = cur.pos;
        let (r, s, b) = (cur.f64(), cur.f64(), cur.f64());
        let coeffs = (0..bits).map(|_| cur.f64()).collect();
        let cs = CoefficientSet::from_parts(r, s, b, coeffs)
            .map_err(|e| FormatError::invalid(offset, e.to_string()))?;
        cache.push(cs);
    }

    let wpp = words_per_plane(group_size);
    let n_groups = rows as usize * (cols as usize / group_size);
    let mut groups = Vec::with_capacity(n_groups);
    for _ in 0..n_groups {
        let offset = cur.pos;
        let coeff_index = cur.u32();
        if coeff_index >= cache_len {
            return Err(FormatError::invalid(
                offset,
                format!("coefficient index {coeff_index} out of range for cache of {cache_len}"),
            ));
        }
        let words = (0..bits * wpp).map(|_| cur.u32()).collect();
        let planes = BitPlanes::from_words(bits, group_size, words)
            .map_err(|e| FormatError::invalid(offset + 4, e.to_string()))?;
        groups.push(QuantizedGroup {
            planes,
            coeff_index,
        });
    }

    SbvrTensor::new(
        rows as usize,
        cols as usize,
        group_size,
        bits,
        groups,
        cache,
        hadamard_seed,
    )
    .map_err(|e| FormatError::invalid(0, e.to_string()))
}

/// Parses row-major little-endian `f32` values, rejecting non-finite entries.
pub fn parse_raw_f32(bytes: &[u8], rows: usize, cols: usize) -> Result<Vec<f64>, FormatError> {
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| FormatError::Raw(format!("{rows} x {cols} overflows")))?;
    if bytes.len() != expected {
        return Err(FormatError::Raw(format!(
            "expected {expected} bytes for {rows} x {cols} f32 values, got {}",
            bytes.len()
        )));
    }
    bytes
        .chunks_exact(4)
        .enumerate()
        .map(|(i, c)| {
            let v = f32::from_le_bytes(c.try_into().unwrap());
            if v.is_finite() {
                Ok(v as f64)
            } else {
                Err(FormatError::Raw(format!(
                    "non-finite value {v} at element {i} (offset {})",
                    i * 4
                )))
            }
        })
        .collect()
}

pub fn read_raw_f32(
    path: impl AsRef<Path>,
    rows: usize,
    cols: usize,
) -> Result<Vec<f64>, FormatError> {
    parse_raw_f32(&fs::read(path)?, rows, cols)
}

pub fn raw_f32_bytes<I: IntoIterator<Item = f32>>(values: I) -> Vec<u8> {
    values.into_iter().flat_map(f32::to_le_bytes).collect()
}

pub fn write_raw_f32(path: impl AsRef<Path>, values: &[f32]) -> io::Result<()> {
    fs::write(path, raw_f32_bytes(values.iter().copied()))
}

impl From<FormatError> for SbvrError {
    fn from(e: FormatError) -> Self {
        SbvrError::Validation(e.to_string())
    }
}
