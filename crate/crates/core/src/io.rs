//! CSV formats for histories, event streams, ledgers and profiles.
//!
//! Slots, apps and days are 1-based in files and 0-based in memory. Floats
//! are written in Rust's shortest round-trip form, so a write followed by a
//! read reproduces the values exactly.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::demand::{AccessHistory, AppId, TrafficProfile};
use crate::realtime::{RequestEvent, RequestKind};

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {msg}")]
    Invalid { line: usize, msg: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub day: usize,
    pub slot: usize,
    pub app: usize,
    pub foreground_accesses: u32,
    pub background_accesses: u32,
    pub volume_mb: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct EventRow {
    minute: f64,
    slot: usize,
    app: usize,
    volume_mb: f64,
    kind: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct LedgerRow {
    day: usize,
    volume_mb: f64,
}

fn one_based(value: usize, what: &str, line: usize) -> Result<usize, IoError> {
    value.checked_sub(1).ok_or_else(|| IoError::Invalid {
        line,
        msg: format!("{what} is 1-based, got 0"),
    })
}

/// One row per (day, slot, app).
pub fn write_history<W: Write>(out: W, days: &[(AccessHistory, TrafficProfile)]) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    for (d, (h, p)) in days.iter().enumerate() {
        for slot in 0..p.num_slots() {
            for app in 0..p.num_apps() {
                w.serialize(HistoryRow {
                    day: d + 1,
                    slot: slot + 1,
                    app: app + 1,
                    foreground_accesses: h.tau[slot][app],
                    background_accesses: h.tau_bg.get(slot).and_then(|r| r.get(app)).copied().unwrap_or(0),
                    volume_mb: p.x[slot][app],
                })?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a history file into per-day access counts and profiles, ordered by
/// day. Missing cells are zero.
pub fn read_history<R: Read>(input: R) -> Result<Vec<(AccessHistory, TrafficProfile)>, IoError> {
    let mut rows = Vec::new();
    let mut reader = csv::Reader::from_reader(input);
    for (i, row) in reader.deserialize::<HistoryRow>().enumerate() {
        let line = i + 2;
        let r = row?;
        if !(r.volume_mb >= 0.0) {
            return Err(IoError::Invalid {
                line,
                msg: format!("negative volume {}", r.volume_mb),
            });
        }
        rows.push((
            one_based(r.day, "day", line)?,
            one_based(r.slot, "slot", line)?,
            one_based(r.app, "app", line)?,
            r,
        ));
    }
    let k = rows.iter().map(|r| r.1 + 1).max().unwrap_or(0);
    let n = rows.iter().map(|r| r.2 + 1).max().unwrap_or(0);
    let mut by_day: BTreeMap<usize, (AccessHistory, TrafficProfile)> = BTreeMap::new();
    for (day, slot, app, r) in rows {
        let entry = by_day.entry(day).or_insert_with(|| {
            (
                AccessHistory {
                    tau: vec![vec![0; n]; k],
                    tau_bg: vec![vec![0; n]; k],
                },
                TrafficProfile::zeros(k, n),
            )
        });
        entry.0.tau[slot][app] = r.foreground_accesses;
        entry.0.tau_bg[slot][app] = r.background_accesses;
        entry.1.x[slot][app] = r.volume_mb;
    }
    Ok(by_day.into_values().collect())
}

pub fn write_events<W: Write>(out: W, events: &[RequestEvent]) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    for ev in events {
        w.serialize(EventRow {
            minute: ev.minute,
            slot: ev.slot + 1,
            app: ev.app.0 + 1,
            volume_mb: ev.volume,
            kind: ev.kind.as_str().to_string(),
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_events<R: Read>(input: R) -> Result<Vec<RequestEvent>, IoError> {
    let mut reader = csv::Reader::from_reader(input);
    reader
        .deserialize::<EventRow>()
        .enumerate()
        .map(|(i, row)| {
            let line = i + 2;
            let r = row?;
            let kind: RequestKind = r.kind.parse().map_err(|msg| IoError::Invalid { line, msg })?;
            let ev = RequestEvent {
                minute: r.minute,
                slot: one_based(r.slot, "slot", line)?,
                app: AppId(one_based(r.app, "app", line)?),
                volume: r.volume_mb,
                kind,
            };
            ev.validate().map_err(|e| IoError::Invalid {
                line,
                msg: e.to_string(),
            })?;
            Ok(ev)
        })
        .collect()
}

pub fn write_ledger<W: Write>(out: W, chi: &[f64]) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    for (d, &v) in chi.iter().enumerate() {
        w.serialize(LedgerRow { day: d + 1, volume_mb: v })?;
    }
    w.flush()?;
    Ok(())
}

/// Daily volumes; days must be listed as 1, 2, 3, ... in order.
pub fn read_ledger<R: Read>(input: R) -> Result<Vec<f64>, IoError> {
    let mut reader = csv::Reader::from_reader(input);
    let mut chi = Vec::new();
    for (i, row) in reader.deserialize::<LedgerRow>().enumerate() {
        let r = row?;
        if r.day != i + 1 {
            return Err(IoError::Invalid {
                line: i + 2,
                msg: format!("expected day {}, found {}", i + 1, r.day),
            });
        }
        chi.push(r.volume_mb);
    }
    Ok(chi)
}

/// Wide layout: `slot,app1,...,appN`.
pub fn write_profile<W: Write>(out: W, profile: &TrafficProfile) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["slot".to_string()];
    header.extend((1..=profile.num_apps()).map(|a| format!("app{a}")));
    w.write_record(&header)?;
    for (k, row) in profile.x.iter().enumerate() {
        let mut rec = vec![(k + 1).to_string()];
        rec.extend(row.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_profile<R: Read>(input: R) -> Result<TrafficProfile, IoError> {
    let mut reader = csv::Reader::from_reader(input);
    let mut x = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let row = rec
            .iter()
            .skip(1)
            .map(|f| {
                f.trim().parse::<f64>().map_err(|e| IoError::Invalid {
                    line,
                    msg: format!("{f:?}: {e}"),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        x.push(row);
    }
    Ok(TrafficProfile { x })
}

/// Generic table writer for report curves.
pub fn write_table<W: Write>(out: W, header: &[&str], rows: &[Vec<String>]) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}
