//! Record provider outputs to a JSON Lines tape and replay them later.
//!
//! A tape holds one entry per provider call in call order, errors included,
//! so replaying an episode against its tape walks the same code paths
//! without any model or network access.

use std::collections::VecDeque;
use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{Choice, DecisionProvider, DecisionRequest, DescriptionProvider, FeedbackRequest};
use crate::error::{Error, Result};
use crate::perception::Observation;
use crate::regulator::Feedback;
use crate::waypoint::Waypoint;

/// Serializable form of a provider error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TapeError {
    Backend { message: String },
    Protocol { message: String },
    Timeout { secs: f64 },
    InvalidInput { message: String },
}

impl From<&Error> for TapeError {
    fn from(e: &Error) -> Self {
        match e {
            Error::Protocol(m) => TapeError::Protocol { message: m.clone() },
            Error::Timeout(d) => TapeError::Timeout { secs: d.as_secs_f64() },
            Error::InvalidInput(m) => TapeError::InvalidInput { message: m.clone() },
            Error::Waypoint { source, .. } => TapeError::from(source.as_ref()),
            other => TapeError::Backend { message: other.to_string() },
        }
    }
}

impl From<TapeError> for Error {
    fn from(e: TapeError) -> Self {
        match e {
            TapeError::Backend { message } => Error::Backend(message),
            TapeError::Protocol { message } => Error::Protocol(message),
            TapeError::Timeout { secs } => Error::Timeout(Duration::from_secs_f64(secs)),
            TapeError::InvalidInput { message } => Error::InvalidInput(message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome<T> {
    Ok(T),
    Err(TapeError),
}

impl<T: Clone> Outcome<T> {
    fn of(r: &Result<T>) -> Self {
        match r {
            Ok(v) => Outcome::Ok(v.clone()),
            Err(e) => Outcome::Err(e.into()),
        }
    }

    fn into_result(self) -> Result<T> {
        match self {
            Outcome::Ok(v) => Ok(v),
            Outcome::Err(e) => Err(e.into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "call", content = "out", rename_all = "snake_case")]
pub enum TapeEntry {
    Panorama(Outcome<String>),
    Direction(Outcome<String>),
    Compare(Outcome<Feedback>),
    Decompose(Outcome<Vec<String>>),
    Choose(Outcome<Choice>),
}

impl TapeEntry {
    fn call(&self) -> &'static str {
        match self {
            TapeEntry::Panorama(_) => "panorama",
            TapeEntry::Direction(_) => "direction",
            TapeEntry::Compare(_) => "compare",
            TapeEntry::Decompose(_) => "decompose",
            TapeEntry::Choose(_) => "choose",
        }
    }
}

/// Shared, append-only log of provider calls.
#[derive(Debug, Clone, Default)]
pub struct Tape {
    entries: Arc<Mutex<Vec<TapeEntry>>>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&self, e: TapeEntry) {
        self.entries.lock().expect("tape poisoned").push(e);
    }

    pub fn entries(&self) -> Vec<TapeEntry> {
        self.entries.lock().expect("tape poisoned").clone()
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for e in self.entries.lock().expect("tape poisoned").iter() {
            serde_json::to_writer(&mut w, e)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf)?;
        std::fs::write(path, buf)?;
        Ok(())
    }
}

pub fn read_tape<R: BufRead>(r: R) -> Result<Vec<TapeEntry>> {
    let mut out = Vec::new();
    for line in r.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

pub fn load_tape(path: &Path) -> Result<Vec<TapeEntry>> {
    read_tape(std::io::BufReader::new(std::fs::File::open(path)?))
}

pub struct RecordingDescriber<D> {
    inner: D,
    tape: Tape,
}

impl<D> RecordingDescriber<D> {
    pub fn new(inner: D, tape: Tape) -> Self {
        Self { inner, tape }
    }
}

impl<D: DescriptionProvider> DescriptionProvider for RecordingDescriber<D> {
    fn describe_panorama(&self, obs: &Observation) -> Result<String> {
        let r = self.inner.describe_panorama(obs);
        self.tape.push(TapeEntry::Panorama(Outcome::of(&r)));
        r
    }

    fn describe_direction(&self, obs: &Observation, view: usize, w: &Waypoint) -> Result<String> {
        let r = self.inner.describe_direction(obs, view, w);
        self.tape.push(TapeEntry::Direction(Outcome::of(&r)));
        r
    }

    fn compare(&self, req: &FeedbackRequest<'_>) -> Result<Feedback> {
        let r = self.inner.compare(req);
        self.tape.push(TapeEntry::Compare(Outcome::of(&r)));
        r
    }
}

pub struct RecordingDecider<P> {
    inner: P,
    tape: Tape,
}

impl<P> RecordingDecider<P> {
    pub fn new(inner: P, tape: Tape) -> Self {
        Self { inner, tape }
    }
}

impl<P: DecisionProvider> DecisionProvider for RecordingDecider<P> {
    fn decompose(&self, instruction: &str) -> Result<Vec<String>> {
        let r = self.inner.decompose(instruction);
        self.tape.push(TapeEntry::Decompose(Outcome::of(&r)));
        r
    }

    fn choose(&self, req: &DecisionRequest<'_>) -> Result<Choice> {
        let r = self.inner.choose(req);
        self.tape.push(TapeEntry::Choose(Outcome::of(&r)));
        r
    }
}

/// Serves a recorded tape back in order. Acts as both providers; share one
/// instance between the two roles of an episode.
#[derive(Debug)]
pub struct TapeReplay {
    entries: Mutex<VecDeque<TapeEntry>>,
}

impl TapeReplay {
    pub fn new(entries: Vec<TapeEntry>) -> Self {
        Self {
            entries: Mutex::new(entries.into()),
        }
    }

    pub fn remaining(&self) -> usize {
        self.entries.lock().expect("tape poisoned").len()
    }

    fn next(&self, expected: &'static str) -> Result<TapeEntry> {
        let mut q = self.entries.lock().expect("tape poisoned");
        match q.front() {
            None => Err(Error::Backend(format!("tape exhausted at a {expected} call"))),
            Some(e) if e.call() != expected => Err(Error::Backend(format!(
                "tape out of sync: expected {expected}, found {}",
                e.call()
            ))),
            Some(_) => Ok(q.pop_front().expect("front checked")),
        }
    }
}

impl DescriptionProvider for TapeReplay {
    fn describe_panorama(&self, _: &Observation) -> Result<String> {
        match self.next("panorama")? {
            TapeEntry::Panorama(o) => o.into_result(),
            _ => unreachable!(),
        }
    }

    fn describe_direction(&self, _: &Observation, _: usize, _: &Waypoint) -> Result<String> {
        match self.next("direction")? {
            TapeEntry::Direction(o) => o.into_result(),
            _ => unreachable!(),
        }
    }

    fn compare(&self, _: &FeedbackRequest<'_>) -> Result<Feedback> {
        match self.next("compare")? {
            TapeEntry::Compare(o) => o.into_result(),
            _ => unreachable!(),
        }
    }
}

impl DecisionProvider for TapeReplay {
    fn decompose(&self, _: &str) -> Result<Vec<String>> {
        match self.next("decompose")? {
            TapeEntry::Decompose(o) => o.into_result(),
            _ => unreachable!(),
        }
    }

    fn choose(&self, _: &DecisionRequest<'_>) -> Result<Choice> {
        match self.next("choose")? {
            TapeEntry::Choose(o) => o.into_result(),
            _ => unreachable!(),
        }
    }
}
