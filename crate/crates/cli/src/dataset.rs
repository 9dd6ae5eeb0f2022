//! Versioned photon-count datasets.
//!
//! One record per histogram: grid index, amplitude, phase, sampling seed,
//! repeat number and the counts in bins `0..=n_max_resolved`. Two encodings
//! share the same header fields:
//!
//! - JSON lines: a header object on the first line, then one record per line.
//! - CSV: `# key=value` header lines, a column row, then one record per row.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use wigner_pnr::detector::CountHistogram;
use wigner_pnr::tomography::{GridPoint, WignerGrid};

use crate::config::DatasetFormat;
use crate::error::CliError;

pub const SCHEMA: &str = "pnr-counts";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    /// Displaced-parity scan of the signal state.
    Tomography,
    /// Coherent-state runs used to calibrate the displacement amplitude.
    Calibration,
}

impl DatasetKind {
    fn as_str(self) -> &'static str {
        match self {
            Self::Tomography => "tomography",
            Self::Calibration => "calibration",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "tomography" => Some(Self::Tomography),
            "calibration" => Some(Self::Calibration),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoincidenceRecord {
    pub windows: u64,
    pub signal_singles: u64,
    pub idler_singles: u64,
    pub coincidences: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetHeader {
    pub schema: String,
    pub version: u32,
    pub kind: DatasetKind,
    pub n_max_resolved: usize,
    pub master_seed: u64,
    pub records: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coincidences: Option<CoincidenceRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Record {
    pub index: usize,
    pub amplitude: f64,
    pub phase: f64,
    pub seed: u64,
    pub repeat: usize,
    pub counts: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub header: DatasetHeader,
    pub records: Vec<Record>,
}

impl Dataset {
    pub fn new(
        kind: DatasetKind,
        n_max_resolved: usize,
        master_seed: u64,
        coincidences: Option<CoincidenceRecord>,
        records: Vec<Record>,
    ) -> Self {
        Self {
            header: DatasetHeader {
                schema: SCHEMA.to_string(),
                version: VERSION,
                kind,
                n_max_resolved,
                master_seed,
                records: records.len(),
                coincidences,
            },
            records,
        }
    }

    pub fn from_grid(grid: &WignerGrid, n_max_resolved: usize, master_seed: u64, coincidences: Option<CoincidenceRecord>) -> Self {
        let records = grid
            .points
            .iter()
            .flat_map(|p| {
                p.histograms.iter().enumerate().map(move |(repeat, h)| Record {
                    index: p.index,
                    amplitude: p.amplitude,
                    phase: p.phase,
                    seed: p.seed,
                    repeat,
                    counts: h.counts().to_vec(),
                })
            })
            .collect();
        Self::new(DatasetKind::Tomography, n_max_resolved, master_seed, coincidences, records)
    }

    /// Groups records by grid index and re-derives every Wigner sample.
    pub fn to_grid(&self) -> Result<WignerGrid, CliError> {
        let mut points = Vec::new();
        let mut start = 0;
        while start < self.records.len() {
            let first = &self.records[start];
            let mut end = start + 1;
            while end < self.records.len() && self.records[end].index == first.index {
                end += 1;
            }
            let group = &self.records[start..end];
            if let Some((k, r)) = group.iter().enumerate().find(|(_, r)| {
                r.amplitude != first.amplitude || r.phase != first.phase || r.seed != first.seed
            }) {
                return Err(CliError::schema(
                    Some(start + k),
                    format!("record disagrees with the coordinates of grid point {}", r.index),
                ));
            }
            let histograms = group
                .iter()
                .map(|r| CountHistogram::from_counts(r.counts.clone()))
                .collect();
            let point = GridPoint::from_histograms(first.index, first.amplitude, first.phase, first.seed, histograms)
                .map_err(|e| CliError::schema(Some(start), e.to_string()))?;
            points.push(point);
            start = end;
        }
        Ok(WignerGrid { points })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let h = &self.header;
        if h.schema != SCHEMA {
            return Err(CliError::schema(None, format!("unknown schema {:?}", h.schema)));
        }
        if h.version > VERSION {
            return Err(CliError::schema(
                None,
                format!("dataset version {} is newer than supported version {VERSION}", h.version),
            ));
        }
        if h.version < 1 {
            return Err(CliError::schema(None, format!("invalid version {}", h.version)));
        }
        if h.records != self.records.len() {
            return Err(CliError::schema(
                Some(self.records.len()),
                format!("header announces {} records, found {}", h.records, self.records.len()),
            ));
        }
        if self.records.is_empty() {
            return Err(CliError::schema(None, "dataset has no records"));
        }
        let bins = h.n_max_resolved + 1;
        let mut last_index = None;
        for (k, r) in self.records.iter().enumerate() {
            if r.counts.len() != bins {
                return Err(CliError::schema(
                    Some(k),
                    format!("expected {bins} count bins, found {}", r.counts.len()),
                ));
            }
            if !r.amplitude.is_finite() || r.amplitude < 0.0 || !r.phase.is_finite() {
                return Err(CliError::schema(Some(k), "amplitude and phase must be finite, amplitude nonnegative"));
            }
            if r.counts.iter().sum::<u64>() == 0 {
                return Err(CliError::schema(Some(k), "record has no events"));
            }
            if let Some(prev) = last_index {
                if r.index < prev {
                    return Err(CliError::schema(Some(k), "grid indices must be nondecreasing"));
                }
            }
            last_index = Some(r.index);
        }
        Ok(())
    }

    pub fn to_string(&self, format: DatasetFormat) -> String {
        match format {
            DatasetFormat::Jsonl => {
                let mut out = serde_json::to_string(&self.header).expect("header serializes");
                out.push('\n');
                for r in &self.records {
                    out.push_str(&serde_json::to_string(r).expect("record serializes"));
                    out.push('\n');
                }
                out
            }
            DatasetFormat::Csv => {
                let h = &self.header;
                let mut out = String::new();
                let _ = writeln!(out, "# schema={}", h.schema);
                let _ = writeln!(out, "# version={}", h.version);
                let _ = writeln!(out, "# kind={}", h.kind.as_str());
                let _ = writeln!(out, "# n_max_resolved={}", h.n_max_resolved);
                let _ = writeln!(out, "# master_seed={}", h.master_seed);
                let _ = writeln!(out, "# records={}", h.records);
                if let Some(c) = h.coincidences {
                    let _ = writeln!(
                        out,
                        "# coincidences={},{},{},{}",
                        c.windows, c.signal_singles, c.idler_singles, c.coincidences
                    );
                }
                out.push_str("index,amplitude,phase,seed,repeat");
                for n in 0..=h.n_max_resolved {
                    let _ = write!(out, ",n{n}");
                }
                out.push('\n');
                for r in &self.records {
                    let _ = write!(out, "{},{},{},{},{}", r.index, r.amplitude, r.phase, r.seed, r.repeat);
                    for c in &r.counts {
                        let _ = write!(out, ",{c}");
                    }
                    out.push('\n');
                }
                out
            }
        }
    }

    pub fn write(&self, path: &Path, format: DatasetFormat) -> Result<(), CliError> {
        std::fs::write(path, self.to_string(format)).map_err(|e| CliError::io(path, e))
    }

    /// Parses either encoding, detected from the first character.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let dataset = match text.trim_start().chars().next() {
            Some('{') => parse_jsonl(text)?,
            Some('#') => parse_csv(text)?,
            _ => return Err(CliError::schema(None, "empty or unrecognized dataset")),
        };
        dataset.validate()?;
        Ok(dataset)
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }
}

fn check_header_version(version: u32) -> Result<(), CliError> {
    if version > VERSION {
        return Err(CliError::schema(
            None,
            format!("dataset version {version} is newer than supported version {VERSION}"),
        ));
    }
    Ok(())
}

fn parse_jsonl(text: &str) -> Result<Dataset, CliError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let first = lines.next().ok_or_else(|| CliError::schema(None, "missing header"))?;
    // read the version first so a newer file is reported as such rather than
    // as an unknown field
    let raw: serde_json::Value =
        serde_json::from_str(first).map_err(|e| CliError::schema(None, format!("header: {e}")))?;
    if let Some(v) = raw.get("version").and_then(serde_json::Value::as_u64) {
        check_header_version(u32::try_from(v).unwrap_or(u32::MAX))?;
    }
    let header: DatasetHeader =
        serde_json::from_value(raw).map_err(|e| CliError::schema(None, format!("header: {e}")))?;
    let records = lines
        .enumerate()
        .map(|(k, line)| serde_json::from_str(line).map_err(|e| CliError::schema(Some(k), e.to_string())))
        .collect::<Result<Vec<Record>, _>>()?;
    Ok(Dataset { header, records })
}

fn parse_csv(text: &str) -> Result<Dataset, CliError> {
    let mut schema = None;
    let mut version = None;
    let mut kind = None;
    let mut n_max = None;
    let mut seed = None;
    let mut count = None;
    let mut coincidences = None;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty()).peekable();
    while let Some(line) = lines.next_if(|l| l.starts_with('#')) {
        let body = line.trim_start_matches('#').trim();
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| CliError::schema(None, format!("malformed header line {line:?}")))?;
        let bad = || CliError::schema(None, format!("bad value for header key {key:?}: {value:?}"));
        match key.trim() {
            "schema" => schema = Some(value.trim().to_string()),
            "version" => {
                let v: u32 = value.trim().parse().map_err(|_| bad())?;
                check_header_version(v)?;
                version = Some(v);
            }
            "kind" => kind = Some(DatasetKind::parse(value.trim()).ok_or_else(bad)?),
            "n_max_resolved" => n_max = Some(value.trim().parse().map_err(|_| bad())?),
            "master_seed" => seed = Some(value.trim().parse().map_err(|_| bad())?),
            "records" => count = Some(value.trim().parse().map_err(|_| bad())?),
            "coincidences" => {
                let v: Vec<u64> = value
                    .split(',')
                    .map(|s| s.trim().parse())
                    .collect::<Result<_, _>>()
                    .map_err(|_| bad())?;
                let [windows, signal_singles, idler_singles, coincidences_] = v[..] else {
                    return Err(bad());
                };
                coincidences = Some(CoincidenceRecord {
                    windows,
                    signal_singles,
                    idler_singles,
                    coincidences: coincidences_,
                });
            }
            other => return Err(CliError::schema(None, format!("unknown header key {other:?}"))),
        }
    }
    let missing = |k: &str| CliError::schema(None, format!("missing header key {k:?}"));
    let header = DatasetHeader {
        schema: schema.ok_or_else(|| missing("schema"))?,
        version: version.ok_or_else(|| missing("version"))?,
        kind: kind.ok_or_else(|| missing("kind"))?,
        n_max_resolved: n_max.ok_or_else(|| missing("n_max_resolved"))?,
        master_seed: seed.ok_or_else(|| missing("master_seed"))?,
        records: count.ok_or_else(|| missing("records"))?,
        coincidences,
    };
    let columns = lines.next().ok_or_else(|| CliError::schema(None, "missing column row"))?;
    let mut expected = String::from("index,amplitude,phase,seed,repeat");
    for n in 0..=header.n_max_resolved {
        let _ = write!(expected, ",n{n}");
    }
    if columns.trim() != expected {
        return Err(CliError::schema(None, format!("expected columns {expected:?}, found {columns:?}")));
    }
    let width = 5 + header.n_max_resolved + 1;
    let records = lines
        .enumerate()
        .map(|(k, line)| {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != width {
                return Err(CliError::schema(
                    Some(k),
                    format!("expected {width} fields, found {}", fields.len()),
                ));
            }
            let err = |what: &str| CliError::schema(Some(k), format!("cannot parse {what}"));
            Ok(Record {
                index: fields[0].parse().map_err(|_| err("index"))?,
                amplitude: fields[1].parse().map_err(|_| err("amplitude"))?,
                phase: fields[2].parse().map_err(|_| err("phase"))?,
                seed: fields[3].parse().map_err(|_| err("seed"))?,
                repeat: fields[4].parse().map_err(|_| err("repeat"))?,
                counts: fields[5..]
                    .iter()
                    .map(|f| f.parse())
                    .collect::<Result<_, _>>()
                    .map_err(|_| err("counts"))?,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Dataset { header, records })
}
