//! Binary index layout, little-endian:
//!
//! ```text
//! magic[8] version:u16
//! algorithm:u8 shared:u8 partitions:u32 code_length:u32 seed:u64
//! u:f64 m:u32 r:f64 cross_dim:u32 num_items:u64 dim:u32
//! per part:  max_norm:f64 members:u32 ids[members]:u32
//!            buckets:u32 codes[buckets*L]:i32 starts[buckets+1]:u32 items[members]:u32
//! schedule:u32 per entry: part:u32 matches:u32 score:f64 saturated:u8
//! crc32:u32 (over everything before it)
//! ```
//!
//! Hash matrices are not stored; they are regenerated from the seed.

use super::{BucketScore, IndexConfig, IndexError, NormRangeIndex, Result, SubIndex};
use crate::algorithm::MetaAlgorithm;

pub const MAGIC: [u8; 8] = *b"NRMIPSIX";
pub const FORMAT_VERSION: u16 = 1;

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u16(&mut self, v: u16) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn i32(&mut self, v: i32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn len(&mut self, v: usize) {
        self.u32(u32::try_from(v).expect("index section exceeds u32 range"));
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).ok_or(IndexError::Truncated)?;
        let s = self.buf.get(self.pos..end).ok_or(IndexError::Truncated)?;
        self.pos = end;
        Ok(s)
    }
    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("slice has length N"))
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.array::<1>()?[0])
    }
    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.array()?))
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }
    fn i32(&mut self) -> Result<i32> {
        Ok(i32::from_le_bytes(self.array()?))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.array()?))
    }
    fn len(&mut self) -> Result<usize> {
        Ok(self.u32()? as usize)
    }
    /// A count of `width`-byte records, checked against the remaining bytes
    /// before anything is allocated.
    fn count(&mut self, width: usize) -> Result<usize> {
        let n = self.len()?;
        if n.saturating_mul(width) > self.buf.len() - self.pos {
            return Err(IndexError::Truncated);
        }
        Ok(n)
    }
    fn u32s(&mut self, n: usize) -> Result<Vec<u32>> {
        (0..n).map(|_| self.u32()).collect()
    }
}

fn corrupt(msg: impl Into<String>) -> IndexError {
    IndexError::Corrupt(msg.into())
}

pub(super) fn encode(idx: &NormRangeIndex) -> Vec<u8> {
    let c = &idx.config;
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(&MAGIC);
    w.u16(FORMAT_VERSION);
    w.u8(c.algorithm.tag());
    w.u8(u8::from(c.shared_hashes));
    w.len(c.partitions);
    w.len(c.code_length);
    w.u64(c.seed);
    w.f64(c.u);
    w.u32(c.m);
    w.f64(c.r);
    w.len(c.cross_dim);
    w.u64(idx.num_items as u64);
    w.len(idx.dim);
    for p in &idx.parts {
        w.f64(p.max_norm);
        w.len(p.members.len());
        p.members.iter().for_each(|&id| w.u32(id));
        w.len(p.bucket_count());
        p.codes.iter().for_each(|&s| w.i32(s));
        p.starts.iter().for_each(|&s| w.u32(s));
        p.items.iter().for_each(|&id| w.u32(id));
    }
    w.len(idx.schedule.len());
    for s in &idx.schedule {
        w.len(s.part);
        w.len(s.matches);
        w.f64(s.score);
        w.u8(u8::from(s.saturated));
    }
    let crc = crc32fast::hash(&w.0);
    w.u32(crc);
    w.0
}

pub(super) fn decode(bytes: &[u8]) -> Result<NormRangeIndex> {
    if bytes.len() < MAGIC.len() || bytes[..MAGIC.len()] != MAGIC {
        return Err(IndexError::BadMagic);
    }
    let mut r = Reader { buf: bytes, pos: MAGIC.len() };
    let version = r.u16()?;
    if version != FORMAT_VERSION {
        return Err(IndexError::UnsupportedVersion(version));
    }
    if bytes.len() < r.pos + 4 {
        return Err(IndexError::Truncated);
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().expect("4 bytes"));
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(IndexError::Checksum { stored, computed });
    }
    let mut r = Reader { buf: body, pos: r.pos };

    let algorithm = MetaAlgorithm::from_tag(r.u8()?).ok_or_else(|| corrupt("unknown algorithm tag"))?;
    let shared_hashes = match r.u8()? {
        0 => false,
        1 => true,
        _ => return Err(corrupt("bad shared-hashes flag")),
    };
    let config = IndexConfig {
        algorithm,
        shared_hashes,
        partitions: r.len()?,
        code_length: r.len()?,
        seed: r.u64()?,
        u: r.f64()?,
        m: r.u32()?,
        r: r.f64()?,
        cross_dim: r.len()?,
    };
    let num_items = usize::try_from(r.u64()?).map_err(|_| corrupt("item count overflows"))?;
    let dim = r.len()?;
    if dim == 0 {
        return Err(corrupt("zero dimension"));
    }
    config.validate(num_items)?;

    let len = config.code_length;
    let mut parts = Vec::with_capacity(config.partitions.min(num_items));
    let mut total = 0usize;
    for j in 0..config.partitions {
        let max_norm = r.f64()?;
        let n_members = r.count(4)?;
        let members = r.u32s(n_members)?;
        let buckets = r.count(4 * len)?;
        let codes = (0..buckets * len).map(|_| r.i32()).collect::<Result<Vec<_>>>()?;
        let starts = r.u32s(buckets + 1)?;
        let items = r.u32s(n_members)?;
        if starts[0] != 0
            || starts.windows(2).any(|s| s[0] >= s[1])
            || *starts.last().expect("non-empty") as usize != n_members
        {
            return Err(corrupt(format!("bucket offsets of part {j} are inconsistent")));
        }
        if codes.chunks_exact(len).collect::<Vec<_>>().windows(2).any(|c| c[0] >= c[1]) {
            return Err(corrupt(format!("bucket codes of part {j} are not sorted")));
        }
        if members.iter().chain(&items).any(|&id| id as usize >= num_items) {
            return Err(corrupt(format!("part {j} references an unknown item")));
        }
        total += n_members;
        parts.push(SubIndex {
            max_norm,
            members,
            code_length: len,
            codes,
            starts,
            items,
        });
    }
    if total != num_items {
        return Err(corrupt("parts do not cover the dataset"));
    }

    let n_sched = r.count(17)?;
    let mut schedule = Vec::with_capacity(n_sched);
    for _ in 0..n_sched {
        let s = BucketScore {
            part: r.len()?,
            matches: r.len()?,
            score: r.f64()?,
            saturated: r.u8()? != 0,
        };
        if s.part >= config.partitions || s.matches > len {
            return Err(corrupt("probe schedule entry out of range"));
        }
        schedule.push(s);
    }
    if r.pos != body.len() {
        return Err(corrupt("trailing bytes after probe schedule"));
    }

    let family_count = if shared_hashes { 1 } else { config.partitions };
    let families = (0..family_count)
        .map(|f| config.make_family(f, dim))
        .collect::<Result<Vec<_>>>()?;
    Ok(NormRangeIndex {
        config,
        num_items,
        dim,
        parts,
        families,
        schedule,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vecdata::Dataset;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sample_index(alg: MetaAlgorithm, seed: u64) -> (Dataset, NormRangeIndex) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let items: Vec<f64> = (0..150 * 4).map(|_| rng.random_range(-2.0..2.0)).collect();
        let ds = Dataset::new(4, items).unwrap();
        let idx = NormRangeIndex::build(&ds, IndexConfig::new(alg, 4, 6, seed)).unwrap();
        (ds, idx)
    }

    #[test]
    fn round_trip_is_byte_stable() {
        for alg in MetaAlgorithm::ALL {
            let (ds, idx) = sample_index(alg, 11);
            let bytes = idx.to_bytes();
            let back = NormRangeIndex::from_bytes(&bytes).unwrap();
            assert_eq!(back, idx);
            assert_eq!(back.to_bytes(), bytes);
            let again = NormRangeIndex::build(&ds, *idx.config()).unwrap();
            assert_eq!(again.to_bytes(), bytes);
        }
    }

    #[test]
    fn bad_magic() {
        let (_, idx) = sample_index(MetaAlgorithm::SimpleLsh, 1);
        let mut bytes = idx.to_bytes();
        bytes[0] ^= 0xff;
        assert!(matches!(NormRangeIndex::from_bytes(&bytes), Err(IndexError::BadMagic)));
        assert!(matches!(NormRangeIndex::from_bytes(b"NR"), Err(IndexError::BadMagic)));
    }

    #[test]
    fn version_mismatch() {
        let (_, idx) = sample_index(MetaAlgorithm::SimpleLsh, 1);
        let mut bytes = idx.to_bytes();
        bytes[8] = 99;
        assert!(matches!(
            NormRangeIndex::from_bytes(&bytes),
            Err(IndexError::UnsupportedVersion(99))
        ));
    }

    #[test]
    fn checksum_and_truncation() {
        let (_, idx) = sample_index(MetaAlgorithm::L2Alsh, 2);
        let bytes = idx.to_bytes();
        let mut flipped = bytes.clone();
        flipped[40] ^= 1;
        assert!(matches!(
            NormRangeIndex::from_bytes(&flipped),
            Err(IndexError::Checksum { .. })
        ));
        // Cutting the file leaves a checksum over the wrong bytes.
        assert!(NormRangeIndex::from_bytes(&bytes[..bytes.len() - 9]).is_err());
        assert!(matches!(
            NormRangeIndex::from_bytes(&bytes[..9]),
            Err(IndexError::Truncated)
        ));
    }

    #[test]
    fn truncated_body_with_valid_checksum() {
        let (_, idx) = sample_index(MetaAlgorithm::SignAlsh, 3);
        let bytes = idx.to_bytes();
        let mut body = bytes[..bytes.len() / 2].to_vec();
        let crc = crc32fast::hash(&body);
        body.extend_from_slice(&crc.to_le_bytes());
        assert!(matches!(NormRangeIndex::from_bytes(&body), Err(IndexError::Truncated)));
    }
}
