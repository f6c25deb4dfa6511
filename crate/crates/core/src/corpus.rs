//! The shipped example programs, embedded at compile time.

use crate::event_model::{EventModel, ModelError};
use crate::lang::{parse_files, ParseError, Program};

#[derive(Debug, Clone, Copy)]
pub struct CorpusEntry {
    pub name: &'static str,
    pub file: &'static str,
    pub source: &'static str,
    /// Event-model extension, if the program uses wrapper functions.
    pub model: Option<&'static str>,
}

impl CorpusEntry {
    pub fn program(&self) -> Result<Program, ParseError> {
        parse_files(&[(self.file, self.source)])
    }

    pub fn event_model(&self) -> Result<EventModel, ModelError> {
        match self.model {
            Some(json) => EventModel::from_json(json),
            None => Ok(EventModel::builtin()),
        }
    }
}

pub const DOOR: CorpusEntry = CorpusEntry {
    name: "door",
    file: "door.evl",
    source: include_str!("../corpus/door.evl"),
    model: None,
};

pub const DOOR_REORDERED: CorpusEntry = CorpusEntry {
    name: "door_reordered",
    file: "door_reordered.evl",
    source: include_str!("../corpus/door_reordered.evl"),
    model: None,
};

pub const DIRSTAT: CorpusEntry = CorpusEntry {
    name: "dirstat",
    file: "dirstat.evl",
    source: include_str!("../corpus/dirstat.evl"),
    model: None,
};

pub const TIMER: CorpusEntry = CorpusEntry {
    name: "timer",
    file: "timer.evl",
    source: include_str!("../corpus/timer.evl"),
    model: Some(include_str!("../corpus/timer.json")),
};

pub const SERVER: CorpusEntry = CorpusEntry {
    name: "server",
    file: "server.evl",
    source: include_str!("../corpus/server.evl"),
    model: Some(include_str!("../corpus/server.json")),
};

pub const TRIVIALLY_CLEAN: CorpusEntry = CorpusEntry {
    name: "trivially_clean",
    file: "trivially_clean.evl",
    source: include_str!("../corpus/trivially_clean.evl"),
    model: None,
};

/// The four case-study programs.
pub const CASE_STUDIES: [CorpusEntry; 4] = [DOOR, DIRSTAT, TIMER, SERVER];

pub const ALL: [CorpusEntry; 6] = [DOOR, DOOR_REORDERED, DIRSTAT, TIMER, SERVER, TRIVIALLY_CLEAN];

pub fn by_name(name: &str) -> Option<CorpusEntry> {
    ALL.iter().copied().find(|e| e.name == name)
}
