use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::rc::{rc_states, RcState};
use super::IntentError;
use crate::corpus::Session;
use crate::reformulation::{Change, ReformulationEvent, TripleElement};

/// Triple-pattern change class of one query pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ObservationSymbol {
    Add,
    Remove,
    SubSubject,
    SubPredicate,
    SubObject,
    SubCombined,
    NoTripleChange,
}

impl ObservationSymbol {
    pub const ALL: [ObservationSymbol; 7] = [
        ObservationSymbol::Add,
        ObservationSymbol::Remove,
        ObservationSymbol::SubSubject,
        ObservationSymbol::SubPredicate,
        ObservationSymbol::SubObject,
        ObservationSymbol::SubCombined,
        ObservationSymbol::NoTripleChange,
    ];

    pub fn index(self) -> usize {
        ObservationSymbol::ALL.iter().position(|&s| s == self).unwrap()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ObservationSymbol::Add => "Add",
            ObservationSymbol::Remove => "Remove",
            ObservationSymbol::SubSubject => "SubSubject",
            ObservationSymbol::SubPredicate => "SubPredicate",
            ObservationSymbol::SubObject => "SubObject",
            ObservationSymbol::SubCombined => "SubCombined",
            ObservationSymbol::NoTripleChange => "NoTripleChange",
        }
    }

    /// Symbol of a pair given all of its changes. Substitutions touching two
    /// or more distinct elements (in one triple or across triples) give
    /// `SubCombined`; then a single-element substitution, then `Add`, then
    /// `Remove`.
    pub fn of_changes<'a>(changes: impl IntoIterator<Item = &'a Change>) -> ObservationSymbol {
        let mut elements = BTreeSet::new();
        let (mut added, mut removed) = (false, false);
        for c in changes {
            match c {
                Change::TripleSubstituted { elements: e, .. } => elements.extend(e.iter().copied()),
                Change::TripleAdded { .. } => added = true,
                Change::TripleRemoved { .. } => removed = true,
                _ => {}
            }
        }
        match elements.len() {
            0 if added => ObservationSymbol::Add,
            0 if removed => ObservationSymbol::Remove,
            0 => ObservationSymbol::NoTripleChange,
            1 => match elements.first().unwrap() {
                TripleElement::Subject => ObservationSymbol::SubSubject,
                TripleElement::Predicate => ObservationSymbol::SubPredicate,
                TripleElement::Object => ObservationSymbol::SubObject,
            },
            _ => ObservationSymbol::SubCombined,
        }
    }
}

impl fmt::Display for ObservationSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ObservationSymbol {
    type Err = IntentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ObservationSymbol::ALL
            .into_iter()
            .find(|o| o.as_str() == s)
            .ok_or_else(|| IntentError::UnknownSymbol(s.to_string()))
    }
}

/// Events grouped by session id and pair index.
pub struct EventIndex<'a> {
    by_session: HashMap<&'a str, HashMap<usize, Vec<&'a Change>>>,
}

impl<'a> EventIndex<'a> {
    pub fn new(events: &'a [ReformulationEvent]) -> Self {
        let mut by_session: HashMap<&str, HashMap<usize, Vec<&Change>>> = HashMap::new();
        for e in events {
            by_session
                .entry(e.session.as_str())
                .or_default()
                .entry(e.pair)
                .or_default()
                .push(&e.change);
        }
        EventIndex { by_session }
    }

    /// One symbol per pair of a session with `len` queries.
    pub fn observations(&self, session: &str, len: usize) -> Vec<ObservationSymbol> {
        let pairs = self.by_session.get(session);
        (0..len.saturating_sub(1))
            .map(|i| {
                let changes = pairs.and_then(|p| p.get(&i)).map(Vec::as_slice).unwrap_or(&[]);
                ObservationSymbol::of_changes(changes.iter().copied())
            })
            .collect()
    }
}

/// Aligned hidden states and observations of consecutive pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingSequence {
    pub states: Vec<RcState>,
    pub observations: Vec<ObservationSymbol>,
}

/// Training runs of one session: maximal runs of pairs whose RC state is
/// known, each state aligned with the symbol of the same pair.
pub fn session_training(sizes: &[Option<u64>], observations: &[ObservationSymbol]) -> Vec<TrainingSequence> {
    let mut out = Vec::new();
    let mut cur = TrainingSequence {
        states: Vec::new(),
        observations: Vec::new(),
    };
    for (state, &obs) in rc_states(sizes).into_iter().zip(observations) {
        match state {
            Some(s) => {
                cur.states.push(s);
                cur.observations.push(obs);
            }
            None if !cur.states.is_empty() => out.push(std::mem::replace(
                &mut cur,
                TrainingSequence {
                    states: Vec::new(),
                    observations: Vec::new(),
                },
            )),
            None => {}
        }
    }
    if !cur.states.is_empty() {
        out.push(cur);
    }
    out
}

pub fn training_sequences(sessions: &[Session], events: &[ReformulationEvent]) -> Vec<TrainingSequence> {
    let index = EventIndex::new(events);
    sessions
        .iter()
        .flat_map(|s| session_training(&s.result_sizes(), &index.observations(&s.session_id, s.len())))
        .collect()
}
