//! On-disk formats.
//!
//! Binary (all little-endian, reals as `f32`):
//!
//! ```text
//! GNZE: "GNZE" | version u32 = 1 | n u64 | P u64 | n*P f32, row-major
//! GNZG: "GNZG" | version u32 = 1 | n u64 | nnz u64 | nnz * (i u32, j u32, w f32)
//! ```
//!
//! GNZG stores both `(i, j)` and `(j, i)`, sorted by `(i, j)`, with no
//! diagonal. Text tables are CSV with a header row; see [`tables`].
//!
//! Every writer goes through a temporary file in the destination directory
//! that is renamed into place on success, so failures leave no partial file.

mod binary;
mod projection;
pub mod tables;

use std::fs;
use std::io::Write;
use std::path::Path;

pub use binary::{
    decode_embeddings, decode_graph, encode_embeddings, encode_graph, read_embeddings, read_graph,
    write_embeddings, write_graph, FORMAT_VERSION, GRAPH_MAGIC, EMBEDDING_MAGIC,
};
pub use projection::{export_projection, principal_projection};
pub use tables::{
    parse_labels, parse_predictions, read_labels, read_predictions, read_pseudo_labels, write_edge_list,
    write_labels, write_predictions, write_pseudo_labels, PredictionTable,
};

use crate::error::{Error, Result};

/// Write `bytes` to `path` via a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub(crate) fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}
