//! Frame transport halves over in-memory channels or TCP loopback, plus
//! an auditing wrapper that records every message crossing a component
//! boundary.

use std::io::{Read, Write};
use std::net::TcpStream;
use std::sync::mpsc::{Receiver, RecvTimeoutError, Sender};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use crate::error::{Error, Result};
use crate::pipeline::frame::E2Frame;

#[derive(Debug)]
pub enum LinkEvent {
    Frame(E2Frame),
    Timeout,
    Closed,
}

pub trait FrameSender: Send {
    fn send(&mut self, frame: &E2Frame) -> Result<()>;
}

pub trait FrameReceiver: Send {
    fn recv(&mut self, timeout: Duration) -> Result<LinkEvent>;
}

// ---- in-memory channel transport ----

pub struct ChannelSender(pub Sender<Vec<u8>>);
pub struct ChannelReceiver(pub Receiver<Vec<u8>>);

impl FrameSender for ChannelSender {
    fn send(&mut self, frame: &E2Frame) -> Result<()> {
        self.0
            .send(frame.encode())
            .map_err(|_| Error::Pipeline("peer closed the link".into()))
    }
}

impl FrameReceiver for ChannelReceiver {
    fn recv(&mut self, timeout: Duration) -> Result<LinkEvent> {
        match self.0.recv_timeout(timeout) {
            Ok(bytes) => Ok(LinkEvent::Frame(E2Frame::decode(&bytes)?)),
            Err(RecvTimeoutError::Timeout) => Ok(LinkEvent::Timeout),
            Err(RecvTimeoutError::Disconnected) => Ok(LinkEvent::Closed),
        }
    }
}

/// A connected pair of duplex channel links: (side A, side B).
pub type ChannelLink = (ChannelSender, ChannelReceiver);

pub fn channel_link_pair() -> (ChannelLink, ChannelLink) {
    let (a_tx, b_rx) = std::sync::mpsc::channel();
    let (b_tx, a_rx) = std::sync::mpsc::channel();
    (
        (ChannelSender(a_tx), ChannelReceiver(a_rx)),
        (ChannelSender(b_tx), ChannelReceiver(b_rx)),
    )
}

// ---- TCP loopback transport ----

pub struct TcpFrameSender {
    stream: TcpStream,
}

pub struct TcpFrameReceiver {
    stream: TcpStream,
    buf: Vec<u8>,
}

/// Splits a stream into frame halves.
pub fn tcp_link(stream: TcpStream) -> Result<(TcpFrameSender, TcpFrameReceiver)> {
    let reader = stream.try_clone()?;
    Ok((
        TcpFrameSender { stream },
        TcpFrameReceiver {
            stream: reader,
            buf: Vec::new(),
        },
    ))
}

impl FrameSender for TcpFrameSender {
    fn send(&mut self, frame: &E2Frame) -> Result<()> {
        self.stream.write_all(&frame.encode())?;
        self.stream.flush()?;
        Ok(())
    }
}

impl FrameReceiver for TcpFrameReceiver {
    fn recv(&mut self, timeout: Duration) -> Result<LinkEvent> {
        loop {
            if let Some((frame, used)) = E2Frame::decode_prefix(&self.buf)? {
                self.buf.drain(..used);
                return Ok(LinkEvent::Frame(frame));
            }
            self.stream.set_read_timeout(Some(timeout))?;
            let mut chunk = [0u8; 4096];
            match self.stream.read(&mut chunk) {
                Ok(0) => return Ok(LinkEvent::Closed),
                Ok(n) => self.buf.extend_from_slice(&chunk[..n]),
                Err(e)
                    if e.kind() == std::io::ErrorKind::WouldBlock
                        || e.kind() == std::io::ErrorKind::TimedOut =>
                {
                    return Ok(LinkEvent::Timeout)
                }
                Err(e) => return Err(e.into()),
            }
        }
    }
}

// ---- message audit ----

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Sent,
    Received,
}

#[derive(Debug, Clone)]
pub struct AuditEntry {
    pub endpoint: String,
    pub direction: Direction,
    pub msg_type: u8,
    pub payload: Vec<u8>,
}

/// Shared log of every frame each wrapped endpoint sent or received.
#[derive(Debug, Default, Clone)]
pub struct MessageAudit {
    entries: Arc<Mutex<Vec<AuditEntry>>>,
}

impl MessageAudit {
    pub fn new() -> Self {
        Self::default()
    }

    fn record(&self, endpoint: &str, direction: Direction, frame: &E2Frame) {
        self.entries.lock().unwrap().push(AuditEntry {
            endpoint: endpoint.to_string(),
            direction,
            msg_type: frame.msg_type as u8,
            payload: frame.payload.clone(),
        });
    }

    pub fn entries(&self) -> Vec<AuditEntry> {
        self.entries.lock().unwrap().clone()
    }

    /// All envelope `kind` markers inside payloads the endpoint received.
    pub fn kinds_received_by(&self, endpoint: &str) -> Vec<String> {
        let mut kinds = Vec::new();
        for entry in self.entries.lock().unwrap().iter() {
            if entry.endpoint == endpoint && entry.direction == Direction::Received {
                if let Ok(value) = serde_json::from_slice::<serde_json::Value>(&entry.payload) {
                    collect_kinds(&value, &mut kinds);
                }
            }
        }
        kinds
    }

    /// True if any audited payload contains the byte pattern.
    pub fn any_payload_contains(&self, pattern: &[u8]) -> bool {
        if pattern.is_empty() {
            return false;
        }
        self.entries
            .lock()
            .unwrap()
            .iter()
            .any(|e| e.payload.windows(pattern.len()).any(|w| w == pattern))
    }
}

fn collect_kinds(value: &serde_json::Value, out: &mut Vec<String>) {
    match value {
        serde_json::Value::Object(map) => {
            if let Some(serde_json::Value::String(kind)) = map.get("kind") {
                out.push(kind.clone());
            }
            for v in map.values() {
                collect_kinds(v, out);
            }
        }
        serde_json::Value::Array(items) => {
            for v in items {
                collect_kinds(v, out);
            }
        }
        _ => {}
    }
}

pub struct AuditedSender<S> {
    inner: S,
    endpoint: String,
    audit: MessageAudit,
}

pub struct AuditedReceiver<R> {
    inner: R,
    endpoint: String,
    audit: MessageAudit,
}

pub fn audited<S: FrameSender, R: FrameReceiver>(
    endpoint: &str,
    audit: &MessageAudit,
    sender: S,
    receiver: R,
) -> (AuditedSender<S>, AuditedReceiver<R>) {
    (
        AuditedSender {
            inner: sender,
            endpoint: endpoint.to_string(),
            audit: audit.clone(),
        },
        AuditedReceiver {
            inner: receiver,
            endpoint: endpoint.to_string(),
            audit: audit.clone(),
        },
    )
}

impl<S: FrameSender> FrameSender for AuditedSender<S> {
    fn send(&mut self, frame: &E2Frame) -> Result<()> {
        self.audit.record(&self.endpoint, Direction::Sent, frame);
        self.inner.send(frame)
    }
}

impl<R: FrameReceiver> FrameReceiver for AuditedReceiver<R> {
    fn recv(&mut self, timeout: Duration) -> Result<LinkEvent> {
        let event = self.inner.recv(timeout)?;
        if let LinkEvent::Frame(frame) = &event {
            self.audit
                .record(&self.endpoint, Direction::Received, frame);
        }
        Ok(event)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::frame::MsgType;

    #[test]
    fn channel_pair_delivers_frames_both_ways() {
        let ((mut a_tx, mut a_rx), (mut b_tx, mut b_rx)) = channel_link_pair();
        a_tx.send(&E2Frame::new(MsgType::Ack, 1, b"x".to_vec()))
            .unwrap();
        match b_rx.recv(Duration::from_millis(100)).unwrap() {
            LinkEvent::Frame(f) => assert_eq!(f.correlation_id, 1),
            other => panic!("{other:?}"),
        }
        b_tx.send(&E2Frame::new(MsgType::Control, 2, vec![]))
            .unwrap();
        match a_rx.recv(Duration::from_millis(100)).unwrap() {
            LinkEvent::Frame(f) => assert_eq!(f.msg_type, MsgType::Control),
            other => panic!("{other:?}"),
        }
        drop(b_tx);
        drop(b_rx);
        assert!(matches!(
            a_rx.recv(Duration::from_millis(10)).unwrap(),
            LinkEvent::Closed
        ));
    }

    #[test]
    fn tcp_link_reassembles_split_frames() {
        let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let client = std::thread::spawn(move || {
            let mut stream = TcpStream::connect(addr).unwrap();
            let frame = E2Frame::new(MsgType::EncKpm, 9, vec![7u8; 300]);
            let bytes = frame.encode();
            // Dribble the frame to force buffering.
            for chunk in bytes.chunks(11) {
                stream.write_all(chunk).unwrap();
                stream.flush().unwrap();
            }
        });
        let (stream, _) = listener.accept().unwrap();
        let (_tx, mut rx) = tcp_link(stream).unwrap();
        match rx.recv(Duration::from_secs(5)).unwrap() {
            LinkEvent::Frame(f) => {
                assert_eq!(f.correlation_id, 9);
                assert_eq!(f.payload.len(), 300);
            }
            other => panic!("{other:?}"),
        }
        client.join().unwrap();
    }

    #[test]
    fn audit_records_directions_and_kinds() {
        let audit = MessageAudit::new();
        let ((a_tx, a_rx), (mut b_tx, _b_rx)) = channel_link_pair();
        let (mut tx, mut rx) = audited("encryptor", &audit, a_tx, a_rx);
        tx.send(&E2Frame::new(MsgType::Ack, 0, b"{}".to_vec()))
            .unwrap();
        b_tx.send(&E2Frame::new(
            MsgType::KeyIssue,
            0,
            br#"{"mpk":{"kind":"mpk"}}"#.to_vec(),
        ))
        .unwrap();
        rx.recv(Duration::from_millis(100)).unwrap();
        let entries = audit.entries();
        assert_eq!(entries.len(), 2);
        assert_eq!(
            audit.kinds_received_by("encryptor"),
            vec!["mpk".to_string()]
        );
        assert!(audit.any_payload_contains(b"mpk"));
    }
}
