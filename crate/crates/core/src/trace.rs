//! Trace records, message tallies and trace summaries.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::types::MessageKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Boot,
    Send,
    Deliver,
    Drop,
    StateChange,
    LsaInstall,
    Converged,
}

/// One trace record. Field order is the serialized order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub tick: u64,
    pub node: u16,
    pub kind: EventKind,
    pub detail: Value,
}

pub fn write_jsonl<W: Write>(mut w: W, events: &[TraceEvent]) -> std::io::Result<()> {
    for e in events {
        serde_json::to_writer(&mut w, e)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn to_jsonl(events: &[TraceEvent]) -> String {
    let mut buf = Vec::new();
    write_jsonl(&mut buf, events).expect("writing to memory");
    String::from_utf8(buf).expect("json is utf-8")
}

/// Send events per message type.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageCounts {
    pub hello: u64,
    pub dbd: u64,
    pub req: u64,
    pub upd: u64,
    pub ack: u64,
}

impl MessageCounts {
    pub fn add(&mut self, kind: MessageKind) {
        *self.slot(kind) += 1;
    }

    fn slot(&mut self, kind: MessageKind) -> &mut u64 {
        match kind {
            MessageKind::Hello => &mut self.hello,
            MessageKind::Dbd => &mut self.dbd,
            MessageKind::Req => &mut self.req,
            MessageKind::Upd => &mut self.upd,
            MessageKind::Ack => &mut self.ack,
        }
    }

    pub fn get(&self, kind: MessageKind) -> u64 {
        match kind {
            MessageKind::Hello => self.hello,
            MessageKind::Dbd => self.dbd,
            MessageKind::Req => self.req,
            MessageKind::Upd => self.upd,
            MessageKind::Ack => self.ack,
        }
    }

    pub fn total(&self) -> u64 {
        self.hello + self.dbd + self.req + self.upd + self.ack
    }
}

impl fmt::Display for MessageCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "msgs={} hello={} dbd={} req={} upd={} ack={}",
            self.total(),
            self.hello,
            self.dbd,
            self.req,
            self.upd,
            self.ack
        )
    }
}

fn kind_from_name(s: &str) -> Option<MessageKind> {
    MessageKind::ALL.into_iter().find(|k| k.name() == s)
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("record {index}: {reason}")]
    Malformed { index: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One adjacency transition seen in a trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AdjacencyChange {
    pub tick: u64,
    pub node: u16,
    pub nbr: u16,
    pub from: String,
    pub to: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TraceSummary {
    pub records: usize,
    pub totals: MessageCounts,
    pub per_node: BTreeMap<u16, MessageCounts>,
    pub deliveries: u64,
    pub drops: u64,
    pub adjacency: Vec<AdjacencyChange>,
    pub converged_at: Option<u64>,
}

impl fmt::Display for TraceSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "records: {}", self.records)?;
        writeln!(f, "totals: {}", self.totals)?;
        for (n, c) in &self.per_node {
            writeln!(f, "node {n}: {c}")?;
        }
        writeln!(f, "deliveries: {} drops: {}", self.deliveries, self.drops)?;
        if !self.adjacency.is_empty() {
            writeln!(f, "adjacency timeline:")?;
            for a in &self.adjacency {
                writeln!(
                    f,
                    "  t={} node {} nbr {}: {} -> {}",
                    a.tick, a.node, a.nbr, a.from, a.to
                )?;
            }
        }
        match self.converged_at {
            Some(t) => writeln!(f, "converged at tick {t}"),
            None => writeln!(f, "not converged"),
        }
    }
}

/// Reads a JSONL trace and tallies it. Blank lines are skipped; record
/// indices in errors count from 1.
pub fn summarize<R: BufRead>(r: R) -> Result<TraceSummary, TraceError> {
    let mut s = TraceSummary::default();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let index = i + 1;
        let bad = |reason: String| TraceError::Malformed { index, reason };
        let ev: TraceEvent = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        s.records += 1;
        match ev.kind {
            EventKind::Send => {
                let ty = ev
                    .detail
                    .get("type")
                    .and_then(Value::as_str)
                    .unwrap_or_default();
                let kind = kind_from_name(ty)
                    .ok_or_else(|| bad(format!("unknown message type `{ty}`")))?;
                s.totals.add(kind);
                s.per_node.entry(ev.node).or_default().add(kind);
            }
            EventKind::Deliver => s.deliveries += 1,
            EventKind::Drop => s.drops += 1,
            EventKind::StateChange => {
                let field = |k: &str| ev.detail.get(k).cloned().unwrap_or(Value::Null);
                if let Some(nbr) = field("nbr").as_u64() {
                    let text = |v: Value| {
                        v.as_str()
                            .map(str::to_owned)
                            .unwrap_or_else(|| v.to_string())
                    };
                    s.adjacency.push(AdjacencyChange {
                        tick: ev.tick,
                        node: ev.node,
                        nbr: nbr as u16,
                        from: text(field("from")),
                        to: text(field("to")),
                    });
                }
            }
            EventKind::Converged => s.converged_at = Some(ev.tick),
            EventKind::Boot | EventKind::LsaInstall => {}
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn field_order_is_stable() {
        let e = TraceEvent {
            tick: 3,
            node: 1,
            kind: EventKind::Send,
            detail: json!({"type": "hello"}),
        };
        assert_eq!(
            to_jsonl(&[e]),
            "{\"tick\":3,\"node\":1,\"kind\":\"send\",\"detail\":{\"type\":\"hello\"}}\n"
        );
    }

    #[test]
    fn empty_trace_summarizes_to_zero() {
        let s = summarize("".as_bytes()).unwrap();
        assert_eq!(s.totals.total(), 0);
        assert_eq!(s.converged_at, None);
    }

    #[test]
    fn truncated_record_reports_index() {
        let text = "{\"tick\":0,\"node\":1,\"kind\":\"boot\",\"detail\":null}\n{\"tick\":1,\"no";
        match summarize(text.as_bytes()) {
            Err(TraceError::Malformed { index, .. }) => assert_eq!(index, 2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
