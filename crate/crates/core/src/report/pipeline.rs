use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use super::tables::{
    filter_table, locus_table, operator_table, triple_table, FilterTable, LocusTable, OperatorTable, TripleTable,
};
use super::{PipelineConfig, PipelineError};
use crate::analytics::{
    ged_evolvement, length_percentile, similarity_matrix, GedEvolvement, SessionMatrix, SessionVectors,
    SimilarityMetric, Vocabulary,
};
use crate::corpus::{
    ingest, preprocess, read_sessions, write_records, write_sessions, FilterReport, Ingested, ParsedSession,
    RejectedLine, Session, UserKey,
};
use crate::intent::{
    markov_matrix, rc_segments, train_hmm, training_sequences, Decoded, EventIndex, HmmModel, IntentError,
    ObservationSymbol, Suggestion, TransitionMatrix,
};
use crate::reformulation::{corpus_events, read_events, write_events, ReformulationEvent};
use crate::sparql::QueryAst;

pub const RECORDS: &str = "records.ndjson";
pub const INGEST_SUMMARY: &str = "ingest.json";
pub const SESSIONS: &str = "sessions.ndjson";
pub const FILTER_REPORT: &str = "filter_report.json";
pub const FLAGGED_USERS: &str = "flagged_users.json";
pub const ANALYSIS: &str = "analysis.json";
pub const EVENTS: &str = "events.ndjson";
pub const MARKOV: &str = "markov.json";
pub const MODEL: &str = "model.json";
pub const REPORT: &str = "report.json";

/// Directory holding every stage's artifacts.
#[derive(Debug, Clone)]
pub struct Workspace {
    root: PathBuf,
}

impl Workspace {
    pub fn new(root: impl Into<PathBuf>) -> Result<Self, PipelineError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|source| PipelineError::Io {
            action: "create",
            path: root.clone(),
            source,
        })?;
        Ok(Workspace { root })
    }

    pub fn from_config(cfg: &PipelineConfig) -> Result<Self, PipelineError> {
        let dir = cfg
            .output
            .clone()
            .ok_or_else(|| PipelineError::Config("an output directory is required".into()))?;
        Workspace::new(dir)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Path of an upstream artifact, or the stage that produces it.
    pub fn require(&self, name: &str, stage: &'static str) -> Result<PathBuf, PipelineError> {
        let p = self.path(name);
        if p.is_file() {
            Ok(p)
        } else {
            Err(PipelineError::MissingArtifact { stage, path: p })
        }
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>, PipelineError> {
        let p = self.path(name);
        File::create(&p)
            .map(BufWriter::new)
            .map_err(|source| PipelineError::Io {
                action: "create",
                path: p,
                source,
            })
    }

    fn open(&self, name: &str, stage: &'static str) -> Result<BufReader<File>, PipelineError> {
        let p = self.require(name, stage)?;
        File::open(&p).map(BufReader::new).map_err(|source| PipelineError::Io {
            action: "open",
            path: p,
            source,
        })
    }

    fn write_with(
        &self,
        name: &str,
        f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    ) -> Result<(), PipelineError> {
        let mut w = self.create(name)?;
        f(&mut w).and_then(|_| w.flush()).map_err(|source| PipelineError::Io {
            action: "write",
            path: self.path(name),
            source,
        })
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), PipelineError> {
        self.write_with(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            w.write_all(b"\n")
        })
    }

    pub fn read_json<T: DeserializeOwned>(&self, name: &str, stage: &'static str) -> Result<T, PipelineError> {
        let r = self.open(name, stage)?;
        serde_json::from_reader(r).map_err(|e| PipelineError::Data(format!("{name}: {e}")))
    }

    pub fn write_csv(&self, name: &str, header: &[String], rows: &[Vec<String>]) -> Result<(), PipelineError> {
        self.write_with(name, |w| {
            let mut c = csv::Writer::from_writer(w);
            c.write_record(header)?;
            for r in rows {
                c.write_record(r)?;
            }
            c.flush()
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct IngestSummary {
    pub lines: usize,
    pub records: usize,
    pub rejected: Vec<RejectedLine>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub length: usize,
    pub sessions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GedSeries {
    pub eligible_sessions: usize,
    pub sampled_sessions: usize,
    pub sample_fraction: f64,
    pub seed: u64,
    #[serde(flatten)]
    pub series: GedEvolvement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Analysis {
    pub session_length_histogram: Vec<HistogramBin>,
    pub ged_series: GedSeries,
    /// Matrix size: the configured percentile of session length.
    pub matrix_cap: usize,
    pub similarity_matrices: Vec<SessionMatrix>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MarkovArtifact {
    /// `None` when no session has two consecutive known states.
    pub matrix: Option<TransitionMatrix>,
    pub sequences: usize,
    pub transitions: u64,
}

/// The report produced by `report` and `run`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ReportBundle {
    pub operator_table: OperatorTable,
    pub triple_table: TripleTable,
    pub locus_table: LocusTable,
    pub filter_table: FilterTable,
    pub session_length_histogram: Vec<HistogramBin>,
    pub ged_series: GedSeries,
    pub similarity_matrices: Vec<SessionMatrix>,
    pub markov_matrix: Option<TransitionMatrix>,
    pub filter_report: FilterReport,
    pub notes: Vec<String>,
}

impl ReportBundle {
    /// Denominator and closure checks; empty when consistent.
    pub fn consistency_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let close = |cells: &[Option<f64>]| -> bool {
            let defined: Vec<f64> = cells.iter().flatten().copied().collect();
            defined.is_empty() || (defined.iter().sum::<f64>() - 100.0).abs() <= 0.1
        };
        let hist_total: usize = self.session_length_histogram.iter().map(|b| b.sessions).sum();
        if hist_total != self.filter_report.session_count {
            out.push(format!(
                "histogram total {hist_total} != session count {}",
                self.filter_report.session_count
            ));
        }
        if !self.filter_report.is_consistent() {
            out.push("filter report counts do not partition the input".into());
        }
        for r in &self.operator_table.rows {
            if r.usage.denominator != self.operator_table.queries
                || r.removals.denominator != r.usage.count
                || r.additions.denominator != r.usage.count
                || r.removals.count > r.usage.count
                || r.additions.count > r.usage.count
            {
                out.push(format!("operator {} has inconsistent denominators", r.operator));
            }
        }
        let forms: Vec<_> = self
            .operator_table
            .form_changes
            .iter()
            .map(|r| r.changes.percent)
            .collect();
        if !close(&forms) {
            out.push("form changes do not sum to 100".into());
        }
        for r in &self.triple_table.rows {
            if !close(&[r.additions.percent, r.removals.percent, r.substitutions.percent]) {
                out.push(format!("triple row {:?} does not sum to 100", r.block));
            }
            if r.changed_blocks.count > r.paired_blocks {
                out.push(format!("triple row {:?} has more changed than paired blocks", r.block));
            }
        }
        let shares: Vec<_> = self
            .triple_table
            .substitution_share
            .iter()
            .map(|(_, c)| c.percent)
            .collect();
        if !close(&shares) {
            out.push("substitution shares do not sum to 100".into());
        }
        for kind in crate::hypergraph::JoinKind::ALL {
            let cells: Vec<_> = self
                .locus_table
                .rows
                .iter()
                .filter(|r| r.join_kind == kind)
                .map(|r| r.loci.percent)
                .collect();
            if !close(&cells) {
                out.push(format!("locus rows of {kind:?} do not sum to 100"));
            }
        }
        if !close(&[self.filter_table.block.percent, self.filter_table.specific.percent]) {
            out.push("filter block/specific do not sum to 100".into());
        }
        let types: Vec<_> = self.filter_table.types.iter().map(|(_, c)| c.percent).collect();
        if !close(&types) {
            out.push("filter types do not sum to 100".into());
        }
        if let Some(m) = &self.markov_matrix {
            for row in &m.probabilities {
                let defined: Vec<f64> = row.iter().flatten().copied().collect();
                if !defined.is_empty() && (defined.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                    out.push("markov row is not stochastic".into());
                }
            }
        }
        out
    }
}

fn corpus_err(e: crate::corpus::CorpusError) -> PipelineError {
    PipelineError::Corpus(e)
}

/// Reads the input log and stores accepted records and rejected lines.
pub fn stage_ingest(cfg: &PipelineConfig, ws: &Workspace) -> Result<IngestSummary, PipelineError> {
    let input = cfg
        .input
        .as_ref()
        .ok_or_else(|| PipelineError::Config("an input file is required".into()))?;
    let file =
        File::open(input).map_err(|e| PipelineError::Config(format!("cannot open input {}: {e}", input.display())))?;
    let ingested = ingest(BufReader::new(file)).map_err(corpus_err)?;
    if ingested.records.is_empty() {
        return Err(corpus_err(crate::corpus::CorpusError::Empty {
            stage: crate::corpus::FilterStage::Ingest,
        }));
    }
    ws.write_with(RECORDS, |w| write_records(w, &ingested.records))?;
    let summary = IngestSummary {
        lines: ingested.lines,
        records: ingested.records.len(),
        rejected: ingested.rejected,
    };
    ws.write_json(INGEST_SUMMARY, &summary)?;
    Ok(summary)
}

/// Filters robotic traffic and segments sessions.
pub fn stage_sessionize(cfg: &PipelineConfig, ws: &Workspace) -> Result<FilterReport, PipelineError> {
    let summary: IngestSummary = ws.read_json(INGEST_SUMMARY, "ingest")?;
    let records = ingest(ws.open(RECORDS, "ingest")?).map_err(corpus_err)?;
    if let Some(bad) = records.rejected.first() {
        return Err(PipelineError::Data(format!(
            "{RECORDS} line {}: {}",
            bad.line, bad.reason
        )));
    }
    let ingested = Ingested {
        records: records.records,
        rejected: summary.rejected,
        lines: summary.lines,
    };
    let pre = preprocess(&ingested, &cfg.corpus()).map_err(corpus_err)?;
    ws.write_with(SESSIONS, |w| write_sessions(w, pre.sessions.iter().map(|s| &s.session)))?;
    ws.write_json(FILTER_REPORT, &pre.report)?;
    ws.write_json::<Vec<UserKey>>(FLAGGED_USERS, &pre.flagged_users)?;
    Ok(pre.report)
}

/// Sessions with their parsed queries, as stored by `sessionize`.
pub fn load_sessions(ws: &Workspace) -> Result<Vec<ParsedSession>, PipelineError> {
    let sessions: Vec<Session> = read_sessions(ws.open(SESSIONS, "sessionize")?).map_err(corpus_err)?;
    sessions
        .into_iter()
        .map(|s| {
            let id = s.session_id.clone();
            ParsedSession::from_session(s).map_err(|e| PipelineError::Data(format!("session {id}: {e}")))
        })
        .collect()
}

pub fn load_events(ws: &Workspace) -> Result<Vec<ReformulationEvent>, PipelineError> {
    read_events(ws.open(EVENTS, "events")?).map_err(|e| PipelineError::Data(format!("{EVENTS}: {e}")))
}

fn histogram(sessions: &[ParsedSession]) -> Vec<HistogramBin> {
    let mut h: BTreeMap<usize, usize> = BTreeMap::new();
    for s in sessions {
        *h.entry(s.len()).or_default() += 1;
    }
    h.into_iter()
        .map(|(length, sessions)| HistogramBin { length, sessions })
        .collect()
}

/// Indices of the sessions that enter the GED series.
pub fn ged_sample(eligible: usize, fraction: f64, seed: u64) -> Vec<usize> {
    if fraction >= 1.0 || eligible == 0 {
        return (0..eligible).collect();
    }
    let k = ((fraction * eligible as f64).round() as usize).clamp(1, eligible);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, eligible, k).into_vec();
    picked.sort_unstable();
    picked
}

pub fn analyze(cfg: &PipelineConfig, sessions: &[ParsedSession]) -> Analysis {
    let eligible: Vec<&ParsedSession> = sessions.iter().filter(|s| s.len() >= 2).collect();
    let picked = ged_sample(eligible.len(), cfg.ged_sample, cfg.seed);
    let series: Vec<&[QueryAst]> = picked.iter().map(|&i| eligible[i].asts.as_slice()).collect();
    let evolvement = ged_evolvement(&series, &cfg.ged());

    let mut by_dataset: BTreeMap<&str, Vec<&ParsedSession>> = BTreeMap::new();
    for s in sessions {
        by_dataset.entry(s.session.dataset.as_str()).or_default().push(s);
    }
    let mut vectors = Vec::with_capacity(sessions.len());
    for group in by_dataset.values() {
        let vocab = Vocabulary::build(group.iter().flat_map(|s| s.asts.iter()));
        vectors.extend(group.iter().map(|s| SessionVectors::new(&s.asts, &vocab)));
    }
    let lengths: Vec<usize> = sessions.iter().map(ParsedSession::len).collect();
    let cap = length_percentile(&lengths, cfg.matrix_cap_percentile);
    Analysis {
        session_length_histogram: histogram(sessions),
        ged_series: GedSeries {
            eligible_sessions: eligible.len(),
            sampled_sessions: picked.len(),
            sample_fraction: cfg.ged_sample,
            seed: cfg.seed,
            series: evolvement,
        },
        matrix_cap: cap,
        similarity_matrices: SimilarityMetric::ALL
            .into_iter()
            .map(|m| similarity_matrix(&vectors, m, cap))
            .collect(),
    }
}

fn num(v: f64) -> String {
    v.to_string()
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn write_analysis_csv(ws: &Workspace, a: &Analysis) -> Result<(), PipelineError> {
    ws.write_csv(
        "session_length_histogram.csv",
        &["length".into(), "sessions".into()],
        &a.session_length_histogram
            .iter()
            .map(|b| vec![b.length.to_string(), b.sessions.to_string()])
            .collect::<Vec<_>>(),
    )?;
    let s = &a.ged_series.series;
    let n = s.contiguous.len().max(s.from_initial.len());
    let rows: Vec<Vec<String>> = (0..n)
        .map(|i| {
            let mut r = vec![(i + 1).to_string()];
            for series in [&s.contiguous, &s.from_initial] {
                match series.get(i) {
                    Some(p) => r.extend([num(p.mean), num(p.variance), p.count.to_string()]),
                    None => r.extend([String::new(), String::new(), "0".into()]),
                }
            }
            r
        })
        .collect();
    ws.write_csv(
        "ged_series.csv",
        &[
            "position",
            "contiguousMean",
            "contiguousVariance",
            "contiguousCount",
            "fromInitialMean",
            "fromInitialVariance",
            "fromInitialCount",
        ]
        .map(String::from),
        &rows,
    )?;
    for m in &a.similarity_matrices {
        let size = m.size();
        let header: Vec<String> = std::iter::once(String::new())
            .chain((1..=size).map(|i| i.to_string()))
            .collect();
        let cells: Vec<Vec<String>> = (0..size)
            .map(|i| {
                std::iter::once((i + 1).to_string())
                    .chain(m.cells[i].iter().map(|c| opt(*c)))
                    .collect()
            })
            .collect();
        ws.write_csv(&format!("matrix_{}.csv", m.metric.as_str()), &header, &cells)?;
        let support: Vec<Vec<String>> = (0..size)
            .map(|i| {
                std::iter::once((i + 1).to_string())
                    .chain(m.support[i].iter().map(|c| c.to_string()))
                    .collect()
            })
            .collect();
        ws.write_csv(&format!("support_{}.csv", m.metric.as_str()), &header, &support)?;
    }
    Ok(())
}

/// Session-length histogram, GED series and similarity matrices.
pub fn stage_analyze(cfg: &PipelineConfig, ws: &Workspace) -> Result<Analysis, PipelineError> {
    let sessions = load_sessions(ws)?;
    let a = analyze(cfg, &sessions);
    ws.write_json(ANALYSIS, &a)?;
    write_analysis_csv(ws, &a)?;
    Ok(a)
}

pub fn stage_events(ws: &Workspace) -> Result<Vec<ReformulationEvent>, PipelineError> {
    let sessions = load_sessions(ws)?;
    let events = corpus_events(&sessions);
    ws.write_with(EVENTS, |w| write_events(w, &events))?;
    Ok(events)
}

pub fn markov(sessions: &[Session]) -> MarkovArtifact {
    let segments: Vec<_> = sessions.iter().flat_map(|s| rc_segments(&s.result_sizes())).collect();
    let matrix = markov_matrix(&segments).ok();
    MarkovArtifact {
        transitions: matrix.as_ref().map(|m| m.counts.iter().flatten().sum()).unwrap_or(0),
        matrix,
        sequences: segments.len(),
    }
}

fn markov_csv(m: Option<&TransitionMatrix>) -> (Vec<String>, Vec<Vec<String>>) {
    let header = ["from", "-1", "0", "+1", "rowTotal"].map(String::from).to_vec();
    let rows = crate::intent::RcState::ALL
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut r = vec![s.label().to_string()];
            match m {
                Some(m) => {
                    r.extend(m.probabilities[i].iter().map(|p| opt(*p)));
                    r.push(m.row_total(*s).to_string());
                }
                None => r.extend([String::new(), String::new(), String::new(), "0".into()]),
            }
            r
        })
        .collect();
    (header, rows)
}

/// Result-size-change transition matrix. The artifact is written even when
/// there is no data, so that `report` can still run.
pub fn stage_markov(ws: &Workspace) -> Result<MarkovArtifact, PipelineError> {
    let sessions: Vec<Session> = read_sessions(ws.open(SESSIONS, "sessionize")?).map_err(corpus_err)?;
    let m = markov(&sessions);
    ws.write_json(MARKOV, &m)?;
    let (h, rows) = markov_csv(m.matrix.as_ref());
    ws.write_csv("markov.csv", &h, &rows)?;
    Ok(m)
}

pub fn stage_hmm_train(cfg: &PipelineConfig, ws: &Workspace) -> Result<HmmModel, PipelineError> {
    let sessions: Vec<Session> = read_sessions(ws.open(SESSIONS, "sessionize")?).map_err(corpus_err)?;
    let events = load_events(ws)?;
    let model = train_hmm(&training_sequences(&sessions, &events), cfg.hmm_alpha)?;
    ws.write_with(MODEL, |w| {
        w.write_all(model.to_json().as_bytes())?;
        w.write_all(b"\n")
    })?;
    let labels: Vec<String> = model.states.iter().map(|s| s.label().to_string()).collect();
    let row = |label: &str, vals: &[f64]| {
        std::iter::once(label.to_string())
            .chain(vals.iter().map(|v| num(*v)))
            .collect()
    };
    ws.write_csv(
        "hmm_pi.csv",
        &["state".into(), "pi".into()],
        &labels
            .iter()
            .zip(&model.pi)
            .map(|(l, p)| vec![l.clone(), num(*p)])
            .collect::<Vec<_>>(),
    )?;
    let a_header: Vec<String> = std::iter::once("from".to_string())
        .chain(labels.iter().cloned())
        .collect();
    ws.write_csv(
        "hmm_a.csv",
        &a_header,
        &labels.iter().zip(&model.a).map(|(l, r)| row(l, r)).collect::<Vec<_>>(),
    )?;
    let b_header: Vec<String> = std::iter::once("state".to_string())
        .chain(model.symbols.iter().map(|s| s.to_string()))
        .collect();
    ws.write_csv(
        "hmm_b.csv",
        &b_header,
        &labels.iter().zip(&model.b).map(|(l, r)| row(l, r)).collect::<Vec<_>>(),
    )?;
    Ok(model)
}

pub fn load_model(ws: &Workspace) -> Result<HmmModel, PipelineError> {
    let p = ws.require(MODEL, "hmm-train")?;
    let text = fs::read_to_string(&p).map_err(|source| PipelineError::Io {
        action: "read",
        path: p,
        source,
    })?;
    Ok(HmmModel::from_json(&text)?)
}

/// Observation symbols of every pair of a stored session.
pub fn session_observations(ws: &Workspace, session_id: &str) -> Result<Vec<ObservationSymbol>, PipelineError> {
    let sessions: Vec<Session> = read_sessions(ws.open(SESSIONS, "sessionize")?).map_err(corpus_err)?;
    let s = sessions
        .iter()
        .find(|s| s.session_id == session_id)
        .ok_or_else(|| PipelineError::Data(format!("unknown session {session_id:?}")))?;
    let events = load_events(ws)?;
    Ok(EventIndex::new(&events).observations(session_id, s.len()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DecodeOutput {
    pub observations: Vec<ObservationSymbol>,
    #[serde(flatten)]
    pub decoded: Decoded,
}

pub fn decode_observations(model: &HmmModel, os: Vec<ObservationSymbol>) -> Result<DecodeOutput, PipelineError> {
    let decoded = model.decode(&os)?;
    Ok(DecodeOutput {
        observations: os,
        decoded,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SuggestOutput {
    pub observations: Vec<ObservationSymbol>,
    pub suggestions: Vec<Suggestion>,
}

pub fn suggest_observations(model: &HmmModel, os: Vec<ObservationSymbol>) -> Result<SuggestOutput, PipelineError> {
    let suggestions = model.suggest(&os)?;
    Ok(SuggestOutput {
        observations: os,
        suggestions,
    })
}

/// Builds the report from stored sessions, events and analysis results.
pub fn build_report(
    sessions: &[ParsedSession],
    events: &[ReformulationEvent],
    analysis: Analysis,
    markov: MarkovArtifact,
    filter_report: FilterReport,
    mut notes: Vec<String>,
) -> ReportBundle {
    let asts: Vec<&[QueryAst]> = sessions.iter().map(|s| s.asts.as_slice()).collect();
    if markov.matrix.is_none() {
        notes.push("markov matrix: insufficient data".into());
    }
    if analysis.ged_series.series.approximate_pairs > 0 {
        notes.push(format!(
            "GED series: {} distances used the approximation",
            analysis.ged_series.series.approximate_pairs
        ));
    }
    ReportBundle {
        operator_table: operator_table(&asts, events),
        triple_table: triple_table(&asts, events),
        locus_table: locus_table(events),
        filter_table: filter_table(events),
        session_length_histogram: analysis.session_length_histogram,
        ged_series: analysis.ged_series,
        similarity_matrices: analysis.similarity_matrices,
        markov_matrix: markov.matrix,
        filter_report,
        notes,
    }
}

fn cell_cols(c: &super::Cell) -> [String; 3] {
    [c.count.to_string(), c.denominator.to_string(), opt(c.percent)]
}

fn cell_header(name: &str) -> [String; 3] {
    [
        format!("{name}Count"),
        format!("{name}Denominator"),
        format!("{name}Pct"),
    ]
}

pub fn write_report(ws: &Workspace, b: &ReportBundle) -> Result<(), PipelineError> {
    ws.write_json(REPORT, b)?;

    let mut h = vec!["operator".to_string(), "group".to_string()];
    h.extend(["usage", "removal", "addition"].iter().flat_map(|n| cell_header(n)));
    let rows: Vec<Vec<String>> = b
        .operator_table
        .rows
        .iter()
        .map(|r| {
            let mut v = vec![r.operator.to_string(), r.group.clone()];
            v.extend([&r.usage, &r.removals, &r.additions].iter().flat_map(|c| cell_cols(c)));
            v
        })
        .collect();
    ws.write_csv("operator_table.csv", &h, &rows)?;

    let mut h = vec!["from".to_string(), "to".to_string()];
    h.extend(cell_header("change"));
    let rows: Vec<Vec<String>> = b
        .operator_table
        .form_changes
        .iter()
        .map(|r| {
            let mut v = vec![r.from.to_string(), r.to.to_string()];
            v.extend(cell_cols(&r.changes));
            v
        })
        .collect();
    ws.write_csv("form_changes.csv", &h, &rows)?;

    let names = [
        "changedBlocks",
        "addition",
        "removal",
        "substitution",
        "subject",
        "predicate",
        "object",
        "combined",
        "substitutionShare",
    ];
    let mut h = vec!["block".to_string(), "pairedBlocks".to_string()];
    h.extend(names.iter().flat_map(|n| cell_header(n)));
    let rows: Vec<Vec<String>> = b
        .triple_table
        .rows
        .iter()
        .zip(&b.triple_table.substitution_share)
        .map(|(r, (_, share))| {
            let mut v = vec![r.block.to_string(), r.paired_blocks.to_string()];
            for c in [
                &r.changed_blocks,
                &r.additions,
                &r.removals,
                &r.substitutions,
                &r.subject,
                &r.predicate,
                &r.object,
                &r.combined,
                share,
            ] {
                v.extend(cell_cols(c));
            }
            v
        })
        .collect();
    ws.write_csv("triple_table.csv", &h, &rows)?;

    let mut h = vec!["joinKind".to_string(), "position".to_string()];
    h.extend(cell_header("loci"));
    let rows: Vec<Vec<String>> = b
        .locus_table
        .rows
        .iter()
        .map(|r| {
            let mut v = vec![r.join_kind.as_str().to_string(), r.position.as_str().to_string()];
            v.extend(cell_cols(&r.loci));
            v
        })
        .collect();
    ws.write_csv("locus_table.csv", &h, &rows)?;

    let mut h = vec!["category".to_string()];
    h.extend(cell_header("substitution"));
    let mut rows = vec![
        std::iter::once("block".to_string())
            .chain(cell_cols(&b.filter_table.block))
            .collect::<Vec<_>>(),
        std::iter::once("specific".to_string())
            .chain(cell_cols(&b.filter_table.specific))
            .collect(),
    ];
    for (t, c) in &b.filter_table.types {
        rows.push(
            std::iter::once(format!("specific:{}", t.as_str()))
                .chain(cell_cols(c))
                .collect(),
        );
    }
    rows.push(vec![
        "added".into(),
        b.filter_table.added.to_string(),
        String::new(),
        String::new(),
    ]);
    rows.push(vec![
        "removed".into(),
        b.filter_table.removed.to_string(),
        String::new(),
        String::new(),
    ]);
    ws.write_csv("filter_table.csv", &h, &rows)?;
    Ok(())
}

pub fn stage_report(ws: &Workspace, notes: Vec<String>) -> Result<ReportBundle, PipelineError> {
    let filter_report: FilterReport = ws.read_json(FILTER_REPORT, "sessionize")?;
    let sessions = load_sessions(ws)?;
    let analysis: Analysis = ws.read_json(ANALYSIS, "analyze")?;
    let events = load_events(ws)?;
    let markov: MarkovArtifact = ws.read_json(MARKOV, "markov")?;
    let bundle = build_report(&sessions, &events, analysis, markov, filter_report, notes);
    write_report(ws, &bundle)?;
    Ok(bundle)
}

/// Every stage in order. A corpus too small to train the HMM is reported in
/// the bundle notes rather than failing the run.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<ReportBundle, PipelineError> {
    cfg.validate()?;
    let ws = Workspace::from_config(cfg)?;
    stage_ingest(cfg, &ws)?;
    stage_sessionize(cfg, &ws)?;
    stage_analyze(cfg, &ws)?;
    stage_events(&ws)?;
    stage_markov(&ws)?;
    let mut notes = Vec::new();
    match stage_hmm_train(cfg, &ws) {
        Ok(_) => {}
        Err(PipelineError::Intent(IntentError::NoTrainingPairs)) => {
            let _ = fs::remove_file(ws.path(MODEL));
            notes.push("hmm: no training pairs, model not written".into());
        }
        Err(e) => return Err(e),
    }
    stage_report(&ws, notes)
}
