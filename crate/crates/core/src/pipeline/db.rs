//! Append-only ciphertext store with per-consumer cursors. Stands in for
//! the shared RIC database: writers serialize through a mutex, readers
//! poll independently, and stored bytes are exactly what arrived on the
//! wire, so a scan can prove no plaintext ever landed here.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;
use std::sync::{Arc, Mutex};

use crate::error::Result;
use crate::ipfe::Ciphertext;
use crate::pipeline::frame::{E2Frame, MsgType};

#[derive(Debug)]
pub struct StoredCiphertext {
    pub window_id: u64,
    /// Wall-clock store time in microseconds, for logs.
    pub stored_at_us: u64,
    /// Raw ENC_KPM payload bytes as received.
    pub payload: Vec<u8>,
    pub ciphertext: Ciphertext,
}

#[derive(Debug, Default)]
pub struct RicDatabase {
    records: Mutex<Vec<Arc<StoredCiphertext>>>,
    cursors: Mutex<HashMap<String, usize>>,
}

impl RicDatabase {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn append(&self, record: StoredCiphertext) {
        self.records.lock().unwrap().push(Arc::new(record));
    }

    pub fn len(&self) -> usize {
        self.records.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Returns records past the consumer's cursor and advances it.
    pub fn poll(&self, consumer: &str, max: usize) -> Vec<Arc<StoredCiphertext>> {
        let records = self.records.lock().unwrap();
        let mut cursors = self.cursors.lock().unwrap();
        let cursor = cursors.entry(consumer.to_string()).or_insert(0);
        let end = (*cursor + max).min(records.len());
        let out = records[*cursor..end].to_vec();
        *cursor = end;
        out
    }

    pub fn snapshot(&self) -> Vec<Arc<StoredCiphertext>> {
        self.records.lock().unwrap().clone()
    }

    /// True if any stored byte sequence contains `pattern`.
    pub fn stored_bytes_contain(&self, pattern: &[u8]) -> bool {
        if pattern.is_empty() {
            return false;
        }
        self.records
            .lock()
            .unwrap()
            .iter()
            .any(|r| r.payload.windows(pattern.len()).any(|w| w == pattern))
    }

    /// Persists the store as a frame log: each record re-framed as
    /// ENC_KPM, concatenated.
    pub fn persist(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        for record in self.records.lock().unwrap().iter() {
            let frame = E2Frame::new(MsgType::EncKpm, record.window_id, record.payload.clone());
            out.write_all(&frame.encode())?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads a persisted frame log back into frames.
    pub fn load_frame_log(path: impl AsRef<Path>) -> Result<Vec<E2Frame>> {
        let bytes = std::fs::read(path)?;
        let mut frames = Vec::new();
        let mut offset = 0;
        while offset < bytes.len() {
            match E2Frame::decode_prefix(&bytes[offset..])? {
                Some((frame, used)) => {
                    frames.push(frame);
                    offset += used;
                }
                None => {
                    return Err(crate::error::Error::Frame(
                        "trailing partial frame in log".into(),
                    ))
                }
            }
        }
        Ok(frames)
    }
}
