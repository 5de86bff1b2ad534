use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TRIAL_CSV_HEADER: [&str; 4] = ["t_s", "angle_deg", "current_mA", "button"];

/// Gamepad command active at a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Button {
    /// Abduct from neutral.
    B2,
    /// Adduct from the abducted position.
    B3,
    /// Return to neutral.
    B4,
}

impl Button {
    pub fn as_str(&self) -> &'static str {
        match self {
            Button::B2 => "B2",
            Button::B3 => "B3",
            Button::B4 => "B4",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadCondition {
    Unloaded,
    #[serde(rename = "loaded_300g")]
    Loaded300g,
}

impl LoadCondition {
    pub fn as_str(&self) -> &'static str {
        match self {
            LoadCondition::Unloaded => "unloaded",
            LoadCondition::Loaded300g => "loaded_300g",
        }
    }
}

impl fmt::Display for LoadCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SpringLabel {
    S1,
    S2,
    S3,
}

impl SpringLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            SpringLabel::S1 => "S1",
            SpringLabel::S2 => "S2",
            SpringLabel::S3 => "S3",
        }
    }
}

impl fmt::Display for SpringLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SpringLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "S1" => Ok(SpringLabel::S1),
            "S2" => Ok(SpringLabel::S2),
            "S3" => Ok(SpringLabel::S3),
            other => Err(Error::domain(format!("unknown spring '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TrialMeta {
    /// e.g. `P3`
    pub participant: String,
    /// e.g. `POS2`
    pub posture: String,
    pub load: LoadCondition,
    pub spring: SpringLabel,
    pub trial_index: u32,
}

impl TrialMeta {
    /// Parses `P<participant>_POS<posture>_<load>_<spring>_T<trial>[.csv]`,
    /// e.g. `P2_POS3_loaded_300g_S1_T2.csv`.
    pub fn from_filename(name: &str) -> Result<Self> {
        let bad = |why: &str| Error::domain(format!("trial file name '{name}': {why}"));
        let stem = name.strip_suffix(".csv").unwrap_or(name);
        let tokens: Vec<&str> = stem.split('_').collect();
        if tokens.len() < 5 {
            return Err(bad("expected P<id>_POS<id>_<load>_<spring>_T<n>"));
        }
        let participant = tokens[0];
        if participant.len() < 2
            || !participant.starts_with('P')
            || !participant[1..].chars().all(|c| c.is_ascii_alphanumeric())
        {
            return Err(bad("participant token must look like P<id>"));
        }
        let posture = tokens[1];
        if posture.len() < 4 || !posture.starts_with("POS") || !posture[3..].chars().all(|c| c.is_ascii_alphanumeric())
        {
            return Err(bad("posture token must look like POS<id>"));
        }
        let n = tokens.len();
        let trial = tokens[n - 1]
            .strip_prefix('T')
            .and_then(|t| t.parse::<u32>().ok())
            .ok_or_else(|| bad("trial token must look like T<number>"))?;
        let spring: SpringLabel = tokens[n - 2].parse().map_err(|_| bad("spring must be S1, S2 or S3"))?;
        let load = match tokens[2..n - 2].join("_").as_str() {
            "unloaded" => LoadCondition::Unloaded,
            "loaded_300g" => LoadCondition::Loaded300g,
            _ => return Err(bad("load must be 'unloaded' or 'loaded_300g'")),
        };
        Ok(Self {
            participant: participant.to_string(),
            posture: posture.to_string(),
            load,
            spring,
            trial_index: trial,
        })
    }

    pub fn file_name(&self) -> String {
        format!(
            "{}_{}_{}_{}_T{}.csv",
            self.participant, self.posture, self.load, self.spring, self.trial_index
        )
    }

    /// True when both trials were recorded under the same participant,
    /// posture, load and spring.
    pub fn same_condition(&self, other: &TrialMeta) -> bool {
        self.participant == other.participant
            && self.posture == other.posture
            && self.load == other.load
            && self.spring == other.spring
    }
}

/// One logged sample. Missing readings are stored as NaN.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialSample {
    /// s
    pub t: f64,
    /// deg, abduction positive
    pub angle_deg: f64,
    /// mA
    pub current_ma: f64,
    pub button: Option<Button>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialLog {
    meta: TrialMeta,
    samples: Vec<TrialSample>,
}

impl TrialLog {
    pub fn new(meta: TrialMeta, samples: Vec<TrialSample>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::domain(format!("trial {} has no samples", meta.file_name())));
        }
        if let Some(s) = samples.iter().find(|s| !s.t.is_finite()) {
            return Err(Error::domain(format!("non-finite timestamp {}", s.t)));
        }
        if let Some(w) = samples.windows(2).find(|w| w[1].t <= w[0].t) {
            return Err(Error::domain(format!(
                "timestamps must be strictly increasing ({} then {})",
                w[0].t, w[1].t
            )));
        }
        Ok(Self { meta, samples })
    }

    pub fn meta(&self) -> &TrialMeta {
        &self.meta
    }

    pub fn samples(&self) -> &[TrialSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn angles(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.angle_deg)
    }
}

fn parse_reading(field: &str, what: &str, source_name: &str, line: u64) -> Result<f64> {
    let f = field.trim();
    if f.is_empty() || f.eq_ignore_ascii_case("nan") || f.eq_ignore_ascii_case("na") {
        return Ok(f64::NAN);
    }
    f.parse::<f64>()
        .map_err(|_| Error::parse(source_name, line, format!("invalid {what} '{f}'")))
}

/// Reads the `t_s,angle_deg,current_mA,button` log format. Empty, `NaN`
/// or `NA` readings become NaN and are left for [`clean_interpolate`] to
/// repair; anything else unparseable is an error naming its line.
///
/// [`clean_interpolate`]: super::clean_interpolate
pub fn parse_trial_csv<R: Read>(reader: R, source_name: &str) -> Result<Vec<TrialSample>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers().map_err(|e| csv_error(e, source_name))?;
    if header.iter().ne(TRIAL_CSV_HEADER.iter().copied()) {
        return Err(Error::parse(
            source_name,
            1,
            format!("expected header '{}'", TRIAL_CSV_HEADER.join(",")),
        ));
    }
    let mut samples = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(e, source_name))?;
        let line = record.position().map_or(0, |p| p.line());
        let t = parse_reading(&record[0], "timestamp", source_name, line)?;
        if !t.is_finite() {
            return Err(Error::parse(source_name, line, "timestamp is missing or not finite"));
        }
        let angle_deg = parse_reading(&record[1], "angle", source_name, line)?;
        let current_ma = parse_reading(&record[2], "current", source_name, line)?;
        let button = match &record[3] {
            "" => None,
            "B2" => Some(Button::B2),
            "B3" => Some(Button::B3),
            "B4" => Some(Button::B4),
            other => return Err(Error::parse(source_name, line, format!("unknown button '{other}'"))),
        };
        if let Some(prev) = samples.last().map(|s: &TrialSample| s.t) {
            if t <= prev {
                return Err(Error::parse(
                    source_name,
                    line,
                    format!("timestamp {t} does not increase (previous {prev})"),
                ));
            }
        }
        samples.push(TrialSample {
            t,
            angle_deg,
            current_ma,
            button,
        });
    }
    if samples.is_empty() {
        return Err(Error::parse(source_name, 1, "no samples"));
    }
    Ok(samples)
}

pub(crate) fn csv_error(e: csv::Error, source_name: &str) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    let message = match e.kind() {
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
            format!("expected {expected_len} fields, found {len}")
        }
        csv::ErrorKind::Utf8 { .. } => "invalid UTF-8".to_string(),
        csv::ErrorKind::Io(err) => err.to_string(),
        _ => e.to_string(),
    };
    Error::parse(source_name, line, message)
}

/// Loads a trial log; metadata comes from the file name.
pub fn read_trial_file(path: &Path) -> Result<TrialLog> {
    let name = path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| Error::domain(format!("bad trial path {}", path.display())))?;
    let meta = TrialMeta::from_filename(name)?;
    let file = std::fs::File::open(path)?;
    let samples = parse_trial_csv(std::io::BufReader::new(file), name)?;
    TrialLog::new(meta, samples)
}

fn fmt_reading(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        x.to_string()
    }
}

pub fn write_trial_csv<W: Write>(writer: W, samples: &[TrialSample]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(TRIAL_CSV_HEADER).map_err(io)?;
    for s in samples {
        w.write_record([
            s.t.to_string(),
            fmt_reading(s.angle_deg),
            fmt_reading(s.current_ma),
            s.button.map_or("", |b| b.as_str()).to_string(),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}
