//! Sampled simulation traces.
//!
//! A trace is a strictly increasing time axis starting at zero plus one or
//! more named output channels sampled at those times. CSV serialization uses
//! shortest-roundtrip float formatting, so a written trace reloads
//! bit-exactly.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    times: Vec<f64>,
    channels: Vec<(String, Vec<f64>)>,
}

impl Trace {
    pub fn new(times: Vec<f64>, channels: Vec<(String, Vec<f64>)>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::MalformedTrace("empty time axis".into()));
        }
        if times[0] != 0.0 {
            return Err(Error::MalformedTrace(format!(
                "time axis must start at 0, got {}",
                times[0]
            )));
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::MalformedTrace(
                "time axis must be strictly increasing".into(),
            ));
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::MalformedTrace("non-finite time".into()));
        }
        if channels.is_empty() {
            return Err(Error::MalformedTrace("trace needs at least one channel".into()));
        }
        for (name, values) in &channels {
            if name.is_empty() || name == "time" {
                return Err(Error::MalformedTrace(format!(
                    "bad channel name {name:?}"
                )));
            }
            if values.len() != times.len() {
                return Err(Error::MalformedTrace(format!(
                    "channel {name:?} has {} samples, time axis has {}",
                    values.len(),
                    times.len()
                )));
            }
        }
        for i in 0..channels.len() {
            for j in 0..i {
                if channels[i].0 == channels[j].0 {
                    return Err(Error::MalformedTrace(format!(
                        "duplicate channel {:?}",
                        channels[i].0
                    )));
                }
            }
        }
        Ok(Self { times, channels })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn channel_names(&self) -> impl Iterator<Item = &str> {
        self.channels.iter().map(|(n, _)| n.as_str())
    }

    pub fn channel(&self, name: &str) -> Result<&[f64]> {
        self.channels
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
            .ok_or_else(|| Error::MissingChannel(name.to_string()))
    }

    /// Header `time,<name>,...`, one row per sample.
    pub fn write_csv(&self, w: &mut impl Write) -> Result<()> {
        write!(w, "time")?;
        for (name, _) in &self.channels {
            write!(w, ",{name}")?;
        }
        writeln!(w)?;
        for i in 0..self.times.len() {
            write!(w, "{}", self.times[i])?;
            for (_, values) in &self.channels {
                write!(w, ",{}", values[i])?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn read_csv(r: &mut impl BufRead) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::MalformedTrace("empty file".into()))??;
        let mut cols = header.split(',');
        if cols.next() != Some("time") {
            return Err(Error::MalformedTrace(
                "first column must be \"time\"".into(),
            ));
        }
        let names: Vec<String> = cols.map(str::to_string).collect();
        let mut times = Vec::new();
        let mut channels: Vec<(String, Vec<f64>)> =
            names.into_iter().map(|n| (n, Vec::new())).collect();
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let parse = |s: Option<&str>| -> Result<f64> {
                s.and_then(|s| s.parse().ok()).ok_or_else(|| {
                    Error::MalformedTrace(format!("bad number in row {}", lineno + 2))
                })
            };
            times.push(parse(fields.next())?);
            for (_, values) in &mut channels {
                values.push(parse(fields.next())?);
            }
            if fields.next().is_some() {
                return Err(Error::MalformedTrace(format!(
                    "too many fields in row {}",
                    lineno + 2
                )));
            }
        }
        Self::new(times, channels)
    }
}
