use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One accepted increment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncrementRecord {
    pub increment: usize,
    pub time: f64,
    pub dt: f64,
    pub iterations: usize,
    pub cum_iterations: usize,
    pub u_applied_mm: f64,
    pub reaction_n: f64,
    pub crack_length_mm: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunLog {
    pub records: Vec<IncrementRecord>,
}

const HEADER: [&str; 8] = [
    "increment",
    "time",
    "dt",
    "iterations",
    "cum_iterations",
    "u_applied_mm",
    "reaction_N",
    "crack_length_mm",
];

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Format {
            line: 0,
            message: format!("{other:?}"),
        },
    }
}

impl RunLog {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&IncrementRecord> {
        self.records.last()
    }

    pub fn cum_iterations(&self) -> usize {
        self.records.last().map_or(0, |r| r.cum_iterations)
    }

    pub fn peak_reaction(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.reaction_n.abs())
            .fold(0.0, f64::max)
    }

    /// Applied displacement at the first increment whose reaction falls
    /// below half the peak after the peak was reached.
    pub fn critical_displacement(&self) -> Option<f64> {
        let (ipeak, peak) = self
            .records
            .iter()
            .enumerate()
            .map(|(i, r)| (i, r.reaction_n.abs()))
            .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if peak == 0.0 {
            return None;
        }
        self.records[ipeak..]
            .iter()
            .find(|r| r.reaction_n.abs() < 0.5 * peak)
            .map(|r| r.u_applied_mm)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        wr.write_record(HEADER).map_err(csv_err)?;
        for r in &self.records {
            wr.serialize(r).map_err(csv_err)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
        let header = rd.headers().map_err(csv_err)?.clone();
        if header.iter().ne(HEADER) {
            return Err(Error::Format {
                line: 1,
                message: format!("unexpected header {:?}", header.iter().collect::<Vec<_>>()),
            });
        }
        let mut records = Vec::new();
        for (i, row) in rd.records().enumerate() {
            let line = i + 2;
            let rec: IncrementRecord =
                row.and_then(|r| r.deserialize(None))
                    .map_err(|e| Error::Format {
                        line,
                        message: e.to_string(),
                    })?;
            records.push(rec);
        }
        Ok(Self { records })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}
