use std::fmt;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::log::csv_error;
use crate::error::{Error, Result};

pub const LIKERT_CSV_HEADER: [&str; 3] = ["participant", "item", "score"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LikertItem {
    Size,
    Weight,
    DonDoff,
}

impl LikertItem {
    pub const ALL: [LikertItem; 3] = [LikertItem::Size, LikertItem::Weight, LikertItem::DonDoff];

    pub fn as_str(&self) -> &'static str {
        match self {
            LikertItem::Size => "size",
            LikertItem::Weight => "weight",
            LikertItem::DonDoff => "don_doff",
        }
    }
}

impl fmt::Display for LikertItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LikertItem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LikertItem::ALL
            .into_iter()
            .find(|i| i.as_str() == s)
            .ok_or_else(|| Error::domain(format!("unknown questionnaire item {s:?}")))
    }
}

/// One answer on a 1 (best) to 10 (worst) scale.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LikertResponse {
    pub participant: String,
    pub item: LikertItem,
    pub score: u8,
}

impl LikertResponse {
    pub fn new(participant: impl Into<String>, item: LikertItem, score: u8) -> Result<Self> {
        if !(1..=10).contains(&score) {
            return Err(Error::domain(format!(
                "questionnaire score must lie in 1..=10, got {score}"
            )));
        }
        Ok(Self {
            participant: participant.into(),
            item,
            score,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LikertSummary {
    pub item: LikertItem,
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single response.
    pub sd: f64,
    pub single_response: bool,
}

/// Mean and sample SD per item, in item order; items without responses are omitted.
pub fn likert_summary(responses: &[LikertResponse]) -> Vec<LikertSummary> {
    LikertItem::ALL
        .into_iter()
        .filter_map(|item| {
            let scores: Vec<f64> = responses
                .iter()
                .filter(|r| r.item == item)
                .map(|r| r.score as f64)
                .collect();
            let n = scores.len();
            if n == 0 {
                return None;
            }
            let mean = scores.iter().sum::<f64>() / n as f64;
            let sd = if n > 1 {
                (scores.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
            } else {
                0.0
            };
            Some(LikertSummary {
                item,
                n,
                mean,
                sd,
                single_response: n == 1,
            })
        })
        .collect()
}

pub fn parse_likert_csv<R: Read>(reader: R, source_name: &str) -> Result<Vec<LikertResponse>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(|e| csv_error(e, source_name))?.clone();
    if header.iter().ne(LIKERT_CSV_HEADER) {
        return Err(Error::parse(
            source_name,
            1,
            format!("expected header {}", LIKERT_CSV_HEADER.join(",")),
        ));
    }
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(e, source_name))?;
        let line = record.position().map_or(0, |p| p.line());
        let at = |msg: String| Error::parse(source_name, line, msg);
        let participant = &record[0];
        if participant.is_empty() {
            return Err(at("empty participant id".into()));
        }
        let item: LikertItem = record[1].parse().map_err(|e: Error| at(e.to_string()))?;
        let score: u8 = record[2]
            .parse()
            .map_err(|_| at(format!("invalid score {:?}", &record[2])))?;
        out.push(LikertResponse::new(participant, item, score).map_err(|e| at(e.to_string()))?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn responses(item: LikertItem, scores: &[u8]) -> Vec<LikertResponse> {
        scores
            .iter()
            .enumerate()
            .map(|(i, &s)| LikertResponse::new(format!("P{}", i + 1), item, s).unwrap())
            .collect()
    }

    #[test]
    fn summary_examples() {
        let mut all = responses(LikertItem::Size, &[1, 1, 3, 4, 7]);
        all.extend(responses(LikertItem::Weight, &[1, 1, 2, 3, 4]));
        all.extend(responses(LikertItem::DonDoff, &[1, 1, 1, 2, 4]));
        let s = likert_summary(&all);
        assert_eq!(s.len(), 3);
        assert_relative_eq!(s[0].mean, 3.2);
        assert_relative_eq!(s[0].sd, 6.2f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(s[1].mean, 2.2);
        assert_relative_eq!(s[1].sd, 1.7f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(s[2].mean, 1.8);
        assert_relative_eq!(s[2].sd, 1.7f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn single_and_uniform_responses() {
        let s = likert_summary(&responses(LikertItem::Weight, &[6]));
        assert_eq!(s.len(), 1);
        assert_eq!((s[0].mean, s[0].sd, s[0].single_response), (6.0, 0.0, true));
        let s = likert_summary(&responses(LikertItem::Size, &[5, 5, 5, 5]));
        assert_eq!((s[0].mean, s[0].sd), (5.0, 0.0));
        assert!(likert_summary(&[]).is_empty());
        let s = likert_summary(&responses(LikertItem::DonDoff, &[2, 4]));
        assert_eq!(s[0].mean, 3.0);
        assert_relative_eq!(s[0].sd, 2f64.sqrt(), epsilon = 1e-15);
        let s = likert_summary(&responses(LikertItem::Weight, &[1, 1, 1, 5, 3]));
        assert_relative_eq!(s[0].mean, 2.2, epsilon = 1e-15);
    }

    #[test]
    fn score_range() {
        assert!(LikertResponse::new("P1", LikertItem::Size, 0).is_err());
        assert!(LikertResponse::new("P1", LikertItem::Size, 11).is_err());
        assert!(LikertResponse::new("P1", LikertItem::Size, 10).is_ok());
    }

    #[test]
    fn parse_csv() {
        let text = "participant,item,score\nP1,size,3\nP2, don_doff ,10\n";
        let r = parse_likert_csv(text.as_bytes(), "likert.csv").unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(r[1].item, LikertItem::DonDoff);
        assert_eq!(r[1].score, 10);

        let bad = "participant,item,score\nP1,size,3\nP2,comfort,4\n";
        match parse_likert_csv(bad.as_bytes(), "likert.csv").unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            e => panic!("{e}"),
        }
        assert!(parse_likert_csv("participant,item,score\nP1,size,12\n".as_bytes(), "x").is_err());
        assert!(parse_likert_csv("who,what,score\n".as_bytes(), "x").is_err());
    }
}
