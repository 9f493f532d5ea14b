//! Index snapshot files.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "TVIX"  u32 version (1)
//! u32 dim  u32 shards  str encoding  u8 scorer  f64 trim  u64 best (0 = all)
//! u64 docs, then per doc: u64 id, dim x f64 values
//! per shard: u64 tokens, then per token: str token, varint df,
//!            df varint doc-id deltas
//! u32 crc32 of every preceding byte
//! ```
//!
//! `str` is a `u16` byte length followed by UTF-8. Vectors keep their exact
//! 64-bit values so a reloaded index answers bit-identically.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use byteorder::{ByteOrder, LittleEndian, WriteBytesExt};
use tokvec_core::{Best, DenseVector, DocId, FilterConfig, IndexConfig, InvertedIndex, Scorer};

use crate::error::{Error, Result};

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"TVIX";
pub const SNAPSHOT_VERSION: u32 = 1;

pub fn save_snapshot(index: &InvertedIndex, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = to_bytes(index);
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(&bytes).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn load_snapshot(path: impl AsRef<Path>) -> Result<InvertedIndex> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&bytes)
}

fn put_str(buf: &mut Vec<u8>, s: &str) {
    buf.write_u16::<LittleEndian>(s.len() as u16).unwrap();
    buf.extend_from_slice(s.as_bytes());
}

fn put_varint(buf: &mut Vec<u8>, mut v: u64) {
    while v >= 0x80 {
        buf.push((v as u8) | 0x80);
        v >>= 7;
    }
    buf.push(v as u8);
}

fn scorer_id(scorer: Scorer) -> u8 {
    match scorer {
        Scorer::Bm25 => 0,
        Scorer::MatchCount => 1,
    }
}

pub fn to_bytes(index: &InvertedIndex) -> Vec<u8> {
    let cfg = index.config();
    let mut buf = Vec::new();
    buf.extend_from_slice(SNAPSHOT_MAGIC);
    // Writes into a Vec cannot fail.
    buf.write_u32::<LittleEndian>(SNAPSHOT_VERSION).unwrap();
    buf.write_u32::<LittleEndian>(cfg.dim as u32).unwrap();
    buf.write_u32::<LittleEndian>(cfg.shards as u32).unwrap();
    put_str(&mut buf, &cfg.encoding.to_string());
    buf.push(scorer_id(cfg.scorer));
    buf.write_f64::<LittleEndian>(cfg.index_filter.trim).unwrap();
    let best = match cfg.index_filter.best {
        Best::All => 0,
        Best::Top(m) => m as u64,
    };
    buf.write_u64::<LittleEndian>(best).unwrap();

    buf.write_u64::<LittleEndian>(index.len() as u64).unwrap();
    for v in index.vectors() {
        buf.write_u64::<LittleEndian>(v.id()).unwrap();
        for &x in v.values() {
            buf.write_f64::<LittleEndian>(x).unwrap();
        }
    }
    for shard in index.shards() {
        let postings = shard.sorted_postings();
        buf.write_u64::<LittleEndian>(postings.len() as u64).unwrap();
        for (token, list) in postings {
            put_str(&mut buf, token);
            put_varint(&mut buf, list.df() as u64);
            let mut prev = 0;
            for &id in list.doc_ids() {
                put_varint(&mut buf, id - prev);
                prev = id;
            }
        }
    }
    let crc = crc32fast::hash(&buf);
    buf.write_u32::<LittleEndian>(crc).unwrap();
    buf
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            Error::CorruptSnapshot(format!("truncated at byte {}", self.pos))
        })?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(LittleEndian::read_u16(self.take(2)?))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(LittleEndian::read_u32(self.take(4)?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(LittleEndian::read_u64(self.take(8)?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(LittleEndian::read_f64(self.take(8)?))
    }

    fn str(&mut self) -> Result<&'a str> {
        let len = self.u16()? as usize;
        std::str::from_utf8(self.take(len)?)
            .map_err(|_| Error::CorruptSnapshot("invalid UTF-8".into()))
    }

    fn varint(&mut self) -> Result<u64> {
        let mut v = 0u64;
        for shift in (0..64).step_by(7) {
            let b = self.u8()?;
            v |= u64::from(b & 0x7f) << shift;
            if b & 0x80 == 0 {
                return Ok(v);
            }
        }
        Err(Error::CorruptSnapshot("varint overflow".into()))
    }

    /// Bounds a declared element count by the bytes left.
    fn count(&mut self, min_bytes_each: usize) -> Result<usize> {
        let n = self.u64()?;
        let left = (self.bytes.len() - self.pos) as u64;
        if n.saturating_mul(min_bytes_each as u64) > left {
            return Err(Error::CorruptSnapshot(format!("count {n} exceeds file size")));
        }
        Ok(n as usize)
    }
}

pub fn from_bytes(bytes: &[u8]) -> Result<InvertedIndex> {
    if bytes.len() < 12 {
        return Err(Error::CorruptSnapshot("truncated header".into()));
    }
    if &bytes[..4] != SNAPSHOT_MAGIC {
        return Err(Error::CorruptSnapshot("bad magic".into()));
    }
    let version = LittleEndian::read_u32(&bytes[4..8]);
    if version != SNAPSHOT_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let (body, trailer) = bytes.split_at(bytes.len() - 4);
    let stored = LittleEndian::read_u32(trailer);
    let actual = crc32fast::hash(body);
    if stored != actual {
        return Err(Error::CorruptSnapshot(format!(
            "checksum mismatch (stored {stored:08x}, computed {actual:08x})"
        )));
    }

    let mut cur = Cursor { bytes: body, pos: 8 };
    let dim = cur.u32()? as usize;
    let shards = cur.u32()? as usize;
    let encoding = cur.str()?.parse()?;
    let scorer = match cur.u8()? {
        0 => Scorer::Bm25,
        1 => Scorer::MatchCount,
        other => return Err(Error::CorruptSnapshot(format!("unknown scorer id {other}"))),
    };
    let trim = cur.f64()?;
    let best = match cur.u64()? {
        0 => Best::All,
        m => Best::Top(m as usize),
    };
    let config = IndexConfig { dim, shards, encoding, index_filter: FilterConfig { trim, best }, scorer };
    config.validate()?;

    let docs = cur.count(8 + 8 * dim)?;
    let mut vectors = Vec::with_capacity(docs);
    for _ in 0..docs {
        let id = cur.u64()?;
        let values = (0..dim).map(|_| cur.f64()).collect::<Result<Vec<_>>>()?;
        vectors.push(DenseVector::from_normalized(id, values)?);
    }
    let mut shard_postings = Vec::with_capacity(shards);
    for _ in 0..shards {
        let tokens = cur.count(4)?;
        let mut postings = Vec::with_capacity(tokens);
        for _ in 0..tokens {
            let token = cur.str()?.to_owned();
            let df = cur.varint()?;
            if df > (body.len() - cur.pos) as u64 {
                return Err(Error::CorruptSnapshot(format!("postings length {df} exceeds file size")));
            }
            let mut ids: Vec<DocId> = Vec::with_capacity(df as usize);
            let mut prev = 0u64;
            for _ in 0..df {
                prev = prev
                    .checked_add(cur.varint()?)
                    .ok_or_else(|| Error::CorruptSnapshot("doc id overflow".into()))?;
                ids.push(prev);
            }
            postings.push((token, ids));
        }
        shard_postings.push(postings);
    }
    if cur.pos != body.len() {
        return Err(Error::CorruptSnapshot(format!("{} trailing bytes", body.len() - cur.pos)));
    }
    InvertedIndex::from_parts(config, vectors, shard_postings)
        .map_err(|e| Error::CorruptSnapshot(e.to_string()))
}
