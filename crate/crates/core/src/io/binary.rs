use std::path::Path;

use super::{read_bytes, write_atomic};
use crate::data::EmbeddingMatrix;
use crate::error::{FormatError, Result};
use crate::graph::Graph;

pub const EMBEDDING_MAGIC: [u8; 4] = *b"GNZE";
pub const GRAPH_MAGIC: [u8; 4] = *b"GNZG";
pub const FORMAT_VERSION: u32 = 1;

const HEADER_LEN: usize = 4 + 4 + 8 + 8;
const TRIPLET_LEN: usize = 12;

struct Header {
    a: u64,
    b: u64,
}

fn read_header(bytes: &[u8], magic: [u8; 4]) -> Result<Header, FormatError> {
    if bytes.len() < 4 {
        return Err(FormatError::Truncated {
            expected: HEADER_LEN,
            found: bytes.len(),
        });
    }
    let found: [u8; 4] = bytes[..4].try_into().expect("4 bytes");
    if found != magic {
        return Err(FormatError::BadMagic { found, expected: magic });
    }
    if bytes.len() < HEADER_LEN {
        return Err(FormatError::Truncated {
            expected: HEADER_LEN,
            found: bytes.len(),
        });
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != FORMAT_VERSION {
        return Err(FormatError::UnsupportedVersion(version));
    }
    Ok(Header {
        a: u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")),
        b: u64::from_le_bytes(bytes[16..24].try_into().expect("8 bytes")),
    })
}

fn payload_len(count: u64, unit: usize) -> Result<usize, FormatError> {
    usize::try_from(count)
        .ok()
        .and_then(|c| c.checked_mul(unit))
        .and_then(|c| c.checked_add(HEADER_LEN))
        .ok_or(FormatError::SizeOverflow)
}

fn check_len(bytes: &[u8], expected: usize) -> Result<(), FormatError> {
    if bytes.len() < expected {
        Err(FormatError::Truncated {
            expected,
            found: bytes.len(),
        })
    } else if bytes.len() > expected {
        Err(FormatError::TrailingBytes(bytes.len() - expected))
    } else {
        Ok(())
    }
}

fn f32_at(bytes: &[u8], at: usize) -> f32 {
    f32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"))
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"))
}

pub fn encode_embeddings(m: &EmbeddingMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * m.data().len());
    out.extend_from_slice(&EMBEDDING_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(m.rows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.dim() as u64).to_le_bytes());
    for v in m.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_embeddings(bytes: &[u8]) -> Result<EmbeddingMatrix, FormatError> {
    let Header { a: rows, b: dim } = read_header(bytes, EMBEDDING_MAGIC)?;
    if rows == 0 || dim == 0 {
        return Err(FormatError::EmptyDimension {
            rows: rows as usize,
            dim: dim as usize,
        });
    }
    let count = rows.checked_mul(dim).ok_or(FormatError::SizeOverflow)?;
    check_len(bytes, payload_len(count, 4)?)?;
    let data: Vec<f32> = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
        return Err(FormatError::NonFinite(pos));
    }
    match EmbeddingMatrix::new(rows as usize, dim as usize, data) {
        Ok(m) => Ok(m),
        Err(crate::Error::Format(e)) => Err(e),
        Err(_) => Err(FormatError::SizeOverflow),
    }
}

pub fn encode_graph(g: &Graph) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + TRIPLET_LEN * g.nnz());
    out.extend_from_slice(&GRAPH_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(g.n() as u64).to_le_bytes());
    out.extend_from_slice(&(g.nnz() as u64).to_le_bytes());
    for (i, j, w) in g.entries() {
        out.extend_from_slice(&i.to_le_bytes());
        out.extend_from_slice(&j.to_le_bytes());
        out.extend_from_slice(&w.to_le_bytes());
    }
    out
}

pub fn decode_graph(bytes: &[u8]) -> Result<Graph, FormatError> {
    let Header { a: n, b: nnz } = read_header(bytes, GRAPH_MAGIC)?;
    // node ids are u32 on disk
    if n > u32::MAX as u64 + 1 {
        return Err(FormatError::SizeOverflow);
    }
    if n > nnz.max(1) {
        return Err(FormatError::IsolatedNodes { n, nnz });
    }
    check_len(bytes, payload_len(nnz, TRIPLET_LEN)?)?;
    let entries: Vec<(u32, u32, f32)> = bytes[HEADER_LEN..]
        .chunks_exact(TRIPLET_LEN)
        .map(|c| (u32_at(c, 0), u32_at(c, 4), f32_at(c, 8)))
        .collect();
    Graph::from_sorted_entries(n as usize, &entries)
}

pub fn write_embeddings(m: &EmbeddingMatrix, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), &encode_embeddings(m))
}

pub fn read_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingMatrix> {
    Ok(decode_embeddings(&read_bytes(path.as_ref())?)?)
}

pub fn write_graph(g: &Graph, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), &encode_graph(g))
}

pub fn read_graph(path: impl AsRef<Path>) -> Result<Graph> {
    Ok(decode_graph(&read_bytes(path.as_ref())?)?)
}
