use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::ColorCounts;
use crate::error::{Error, Result};
use crate::report::fmt_float;

/// One edge ring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub time: f64,
    pub edge: (usize, usize),
    pub switch_coin: bool,
    pub pinkened: bool,
    /// Present iff a depinking fired at this event; `true` means red.
    pub depink_coin: Option<bool>,
    pub counts_after: ColorCounts,
}

/// Record of every ring of a chameleon (or interchange) run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventTrace {
    pub initial: ColorCounts,
    pub events: Vec<TraceEvent>,
    /// Depinking times `T_1 < T_2 < ...` (`T_0 = 0` is implicit).
    pub depink_times: Vec<f64>,
}

pub const TRACE_CSV_HEADER: &str =
    "event_index,time,edge_u,edge_v,switch_coin,pinkened,depinked,depink_coin,r,w,p";

impl EventTrace {
    pub fn new(initial: ColorCounts) -> Self {
        EventTrace {
            initial,
            events: Vec::new(),
            depink_times: Vec::new(),
        }
    }

    pub fn push(&mut self, event: TraceEvent) {
        if event.depink_coin.is_some() {
            self.depink_times.push(event.time);
        }
        self.events.push(event);
    }

    /// `r` at `T_0, T_1, T_2, ...`.
    pub fn depinking_reds(&self) -> Vec<usize> {
        std::iter::once(self.initial.r)
            .chain(
                self.events
                    .iter()
                    .filter(|e| e.depink_coin.is_some())
                    .map(|e| e.counts_after.r),
            )
            .collect()
    }

    /// Drops every event except the depinkings. Enough for the depinking
    /// sequence and, after a run to absorption, the final counts (paint can
    /// only be absorbed at a depinking).
    pub fn retain_depinkings(&mut self) {
        self.events.retain(|e| e.depink_coin.is_some());
    }

    pub fn final_counts(&self) -> ColorCounts {
        self.events.last().map_or(self.initial, |e| e.counts_after)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{TRACE_CSV_HEADER}")?;
        for (i, e) in self.events.iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{}",
                i,
                fmt_float(e.time),
                e.edge.0,
                e.edge.1,
                u8::from(e.switch_coin),
                u8::from(e.pinkened),
                u8::from(e.depink_coin.is_some()),
                e.depink_coin.map_or(String::new(), |c| u8::from(c).to_string()),
                e.counts_after.r,
                e.counts_after.w,
                e.counts_after.p,
            )?;
        }
        Ok(())
    }

    /// Parses the CSV written by [`EventTrace::write_csv`]. The initial counts
    /// (and with them `b`) are not part of the CSV and must be supplied.
    pub fn read_csv<R: BufRead>(reader: R, initial: ColorCounts) -> Result<Self> {
        let mut lines = reader.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty trace".into()))??;
        if header.trim() != TRACE_CSV_HEADER {
            return Err(Error::Parse(format!("unexpected trace header {header:?}")));
        }
        let mut trace = EventTrace::new(initial);
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let bad = |what: &str| Error::Parse(format!("trace line {}: {what}", lineno + 2));
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 11 {
                return Err(bad("expected 11 fields"));
            }
            let int = |s: &str| s.parse::<usize>().map_err(|_| bad("bad integer"));
            let bit = |s: &str| match s {
                "0" => Ok(false),
                "1" => Ok(true),
                _ => Err(bad("bad bit")),
            };
            if int(f[0])? != trace.events.len() {
                return Err(bad("event index out of sequence"));
            }
            let depinked = bit(f[6])?;
            let depink_coin = if f[7].is_empty() { None } else { Some(bit(f[7])?) };
            if depinked != depink_coin.is_some() {
                return Err(bad("depinked flag disagrees with depink_coin"));
            }
            trace.push(TraceEvent {
                time: f[1].parse().map_err(|_| bad("bad time"))?,
                edge: (int(f[2])?, int(f[3])?),
                switch_coin: bit(f[4])?,
                pinkened: bit(f[5])?,
                depink_coin,
                counts_after: ColorCounts {
                    r: int(f[8])?,
                    w: int(f[9])?,
                    p: int(f[10])?,
                    b: initial.b,
                },
            });
        }
        Ok(trace)
    }
}
