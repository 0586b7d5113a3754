//! Multi-response observations, the CSV schema used for ingestion, and
//! day-based splitting.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{HgtError, Result};

/// Exact header line of the dataset CSV.
pub const CSV_HEADER: &str = "series,value,trials,region,day,death_flag,recovery_flag";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ResponseKind {
    Gaussian,
    Binomial,
    Poisson,
}

impl ResponseKind {
    pub const ALL: [ResponseKind; 3] = [
        ResponseKind::Gaussian,
        ResponseKind::Binomial,
        ResponseKind::Poisson,
    ];

    /// Zero-based position (Gaussian 0, Binomial 1, Poisson 2).
    pub fn index(self) -> usize {
        match self {
            ResponseKind::Gaussian => 0,
            ResponseKind::Binomial => 1,
            ResponseKind::Poisson => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ResponseKind::Gaussian => "gaussian",
            ResponseKind::Binomial => "binomial",
            ResponseKind::Poisson => "poisson",
        }
    }

    /// Cumulant function psi of the natural exponential family.
    pub fn psi(self, h: f64) -> f64 {
        match self {
            ResponseKind::Gaussian => h * h,
            ResponseKind::Binomial => softplus(h),
            ResponseKind::Poisson => h.exp(),
        }
    }

    /// Inverse link: identity, logistic, exp.
    pub fn inverse_link(self, eta: f64) -> f64 {
        match self {
            ResponseKind::Gaussian => eta,
            ResponseKind::Binomial => logistic(eta),
            ResponseKind::Poisson => eta.exp(),
        }
    }

    /// Link: identity, logit, log.
    pub fn link(self, mean: f64) -> f64 {
        match self {
            ResponseKind::Gaussian => mean,
            ResponseKind::Binomial => (mean / (1.0 - mean)).ln(),
            ResponseKind::Poisson => mean.ln(),
        }
    }
}

impl fmt::Display for ResponseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ResponseKind {
    type Err = HgtError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(ResponseKind::Gaussian),
            "binomial" => Ok(ResponseKind::Binomial),
            "poisson" => Ok(ResponseKind::Poisson),
            other => Err(HgtError::domain(format!(
                "unknown series `{other}` (expected gaussian, binomial or poisson)"
            ))),
        }
    }
}

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub kind: ResponseKind,
    pub value: f64,
    /// Number of trials; required for binomial rows, `None` otherwise.
    pub trials: Option<u64>,
    pub region: Option<String>,
    /// 1-based day index.
    pub day: usize,
    pub death_flag: bool,
    pub recovery_flag: bool,
}

impl Observation {
    pub fn gaussian(value: f64, day: usize) -> Self {
        Self {
            kind: ResponseKind::Gaussian,
            value,
            trials: None,
            region: None,
            day,
            death_flag: false,
            recovery_flag: false,
        }
    }

    pub fn binomial(value: u64, trials: u64, day: usize) -> Self {
        Self {
            kind: ResponseKind::Binomial,
            value: value as f64,
            trials: Some(trials),
            region: None,
            day,
            death_flag: false,
            recovery_flag: false,
        }
    }

    pub fn poisson(value: u64, day: usize) -> Self {
        Self {
            kind: ResponseKind::Poisson,
            value: value as f64,
            trials: None,
            region: None,
            day,
            death_flag: false,
            recovery_flag: false,
        }
    }

    pub fn with_region(mut self, region: impl Into<String>) -> Self {
        self.region = Some(region.into());
        self
    }

    pub fn with_flags(mut self, death: bool, recovery: bool) -> Self {
        self.death_flag = death;
        self.recovery_flag = recovery;
        self
    }

    /// Scale factor between the link-scale mean and the data-scale mean:
    /// the trial count for binomial rows, 1 otherwise.
    pub fn scale(&self) -> f64 {
        match self.kind {
            ResponseKind::Binomial => self.trials.unwrap_or(1) as f64,
            _ => 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.day == 0 {
            return Err(HgtError::domain("day index must be at least 1"));
        }
        match self.kind {
            ResponseKind::Gaussian => {
                if !self.value.is_finite() {
                    return Err(HgtError::domain(format!(
                        "gaussian value must be finite, got {}",
                        self.value
                    )));
                }
                if self.trials.is_some() {
                    return Err(HgtError::domain("trials given for a gaussian row"));
                }
            }
            ResponseKind::Binomial => {
                let b = self
                    .trials
                    .ok_or_else(|| HgtError::domain("binomial row without trials"))?;
                if b == 0 {
                    return Err(HgtError::domain("binomial trials must be positive"));
                }
                check_count(self.value)?;
                if self.value > b as f64 {
                    return Err(HgtError::domain(format!(
                        "binomial value {} exceeds trials {b}",
                        self.value
                    )));
                }
            }
            ResponseKind::Poisson => {
                if self.trials.is_some() {
                    return Err(HgtError::domain("trials given for a poisson row"));
                }
                check_count(self.value)?;
            }
        }
        Ok(())
    }
}

fn check_count(value: f64) -> Result<()> {
    if !value.is_finite() || value < 0.0 {
        return Err(HgtError::domain(format!(
            "count must be non-negative, got {value}"
        )));
    }
    if value.fract() != 0.0 {
        return Err(HgtError::domain(format!(
            "count must be an integer, got {value}"
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MultiResponseDataset {
    pub observations: Vec<Observation>,
}

impl MultiResponseDataset {
    pub fn new(observations: Vec<Observation>) -> Result<Self> {
        for (i, obs) in observations.iter().enumerate() {
            obs.validate().map_err(|e| e.at_observation(i))?;
        }
        Ok(Self { observations })
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    /// Observation counts per kind, indexed by [`ResponseKind::index`].
    pub fn kind_counts(&self) -> [usize; 3] {
        let mut counts = [0; 3];
        for obs in &self.observations {
            counts[obs.kind.index()] += 1;
        }
        counts
    }

    pub fn kinds_present(&self) -> Vec<ResponseKind> {
        let counts = self.kind_counts();
        ResponseKind::ALL
            .into_iter()
            .filter(|k| counts[k.index()] > 0)
            .collect()
    }

    pub fn max_day(&self) -> usize {
        self.observations.iter().map(|o| o.day).max().unwrap_or(0)
    }

    /// Distinct regions in order of first appearance.
    pub fn regions(&self) -> Vec<String> {
        let mut seen: Vec<String> = Vec::new();
        for obs in &self.observations {
            if let Some(r) = &obs.region {
                if !seen.iter().any(|s| s == r) {
                    seen.push(r.clone());
                }
            }
        }
        seen
    }

    /// Row indices whose day lies in `days`.
    pub fn rows_on_days(&self, days: &[usize]) -> Vec<usize> {
        self.observations
            .iter()
            .enumerate()
            .filter(|(_, o)| days.contains(&o.day))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn rows_through_day(&self, last_day: usize) -> Vec<usize> {
        self.observations
            .iter()
            .enumerate()
            .filter(|(_, o)| o.day <= last_day)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn subset(&self, rows: &[usize]) -> MultiResponseDataset {
        MultiResponseDataset {
            observations: rows.iter().map(|&i| self.observations[i].clone()).collect(),
        }
    }

    /// SHA-256 of the canonical CSV serialization.
    pub fn fingerprint(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to an in-memory buffer cannot fail");
        hex::encode(Sha256::digest(&buf))
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(reader);
        let mut records = rdr.records();
        let header = match records.next() {
            None => return Err(HgtError::domain("no observations")),
            Some(rec) => rec?,
        };
        let header_line = header.iter().collect::<Vec<_>>().join(",");
        if header_line != CSV_HEADER {
            return Err(HgtError::Parse {
                line: 1,
                message: format!("expected header `{CSV_HEADER}`, found `{header_line}`"),
            });
        }
        let mut observations = Vec::new();
        for rec in records {
            let rec = rec?;
            let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
            if rec.iter().all(|f| f.is_empty()) {
                continue;
            }
            let obs = parse_record(&rec).map_err(|message| HgtError::Parse { line, message })?;
            obs.validate().map_err(|e| HgtError::Parse {
                line,
                message: e.to_string(),
            })?;
            observations.push(obs);
        }
        if observations.is_empty() {
            return Err(HgtError::domain("no observations"));
        }
        Ok(Self { observations })
    }

    pub fn read_csv_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(file))
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(writer);
        wtr.write_record(CSV_HEADER.split(','))?;
        for obs in &self.observations {
            let is_count = obs.kind == ResponseKind::Poisson;
            let flag = |f: bool| -> String {
                if is_count || f {
                    (f as u8).to_string()
                } else {
                    String::new()
                }
            };
            wtr.write_record([
                obs.kind.name().to_string(),
                obs.value.to_string(),
                obs.trials.map(|b| b.to_string()).unwrap_or_default(),
                obs.region.clone().unwrap_or_default(),
                obs.day.to_string(),
                flag(obs.death_flag),
                flag(obs.recovery_flag),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn write_csv_path(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

fn parse_record(rec: &csv::StringRecord) -> std::result::Result<Observation, String> {
    if rec.len() != 7 {
        return Err(format!("expected 7 fields, found {}", rec.len()));
    }
    let kind: ResponseKind = rec[0].parse().map_err(|e: HgtError| e.to_string())?;
    let value: f64 = rec[1]
        .parse()
        .map_err(|_| format!("value `{}` is not a number", &rec[1]))?;
    let trials = if rec[2].is_empty() {
        None
    } else {
        Some(
            rec[2]
                .parse::<u64>()
                .map_err(|_| format!("trials `{}` is not a non-negative integer", &rec[2]))?,
        )
    };
    let region = (!rec[3].is_empty()).then(|| rec[3].to_string());
    let day: usize = rec[4]
        .parse()
        .map_err(|_| format!("day `{}` is not a positive integer", &rec[4]))?;
    let flag = |s: &str, name: &str| match s {
        "" | "0" => Ok(false),
        "1" => Ok(true),
        other => Err(format!("{name} must be 0, 1 or empty, found `{other}`")),
    };
    Ok(Observation {
        kind,
        value,
        trials,
        region,
        day,
        death_flag: flag(&rec[5], "death_flag")?,
        recovery_flag: flag(&rec[6], "recovery_flag")?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> MultiResponseDataset {
        MultiResponseDataset::new(vec![
            Observation::gaussian(-1.25, 1),
            Observation::binomial(30, 100, 1),
            Observation::poisson(7, 1)
                .with_region("A")
                .with_flags(true, false),
            Observation::poisson(0, 2).with_region("B"),
            Observation::gaussian(0.1 + 0.2, 2),
        ])
        .unwrap()
    }

    #[test]
    fn csv_round_trip_is_field_exact() {
        let ds = sample();
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let back = MultiResponseDataset::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, ds);
        assert_eq!(back.fingerprint(), ds.fingerprint());
    }

    #[test]
    fn binomial_value_above_trials_is_rejected_with_line() {
        let text = format!("{CSV_HEADER}\nbinomial,101,100,,1,,\n");
        let err = MultiResponseDataset::read_csv(text.as_bytes()).unwrap_err();
        match err {
            HgtError::Parse { line, message } => {
                assert_eq!(line, 2);
                assert!(message.contains("exceeds"), "{message}");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn negative_count_rejected() {
        let text = format!("{CSV_HEADER}\ngaussian,1,,,1,,\npoisson,-3,,X,2,0,0\n");
        let err = MultiResponseDataset::read_csv(text.as_bytes()).unwrap_err();
        assert!(matches!(err, HgtError::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn empty_input_reports_no_observations() {
        let err = MultiResponseDataset::read_csv("".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("no observations"));
        let err = MultiResponseDataset::read_csv(format!("{CSV_HEADER}\n").as_bytes()).unwrap_err();
        assert!(err.to_string().contains("no observations"));
    }

    #[test]
    fn wrong_header_rejected() {
        let err = MultiResponseDataset::read_csv("a,b\n1,2\n".as_bytes()).unwrap_err();
        assert!(matches!(err, HgtError::Parse { line: 1, .. }));
    }

    #[test]
    fn unknown_series_rejected() {
        let text = format!("{CSV_HEADER}\ntrends,10,100,,1,,\n");
        assert!(MultiResponseDataset::read_csv(text.as_bytes()).is_err());
    }

    #[test]
    fn counts_regions_and_days() {
        let ds = sample();
        assert_eq!(ds.kind_counts(), [2, 1, 2]);
        assert_eq!(ds.regions(), vec!["A".to_string(), "B".to_string()]);
        assert_eq!(ds.max_day(), 2);
        assert_eq!(ds.rows_on_days(&[2]), vec![3, 4]);
        assert_eq!(ds.rows_through_day(1), vec![0, 1, 2]);
    }

    #[test]
    fn link_functions_invert() {
        for kind in ResponseKind::ALL {
            for &eta in &[-3.0, -0.2, 0.0, 1.7] {
                let back = kind.link(kind.inverse_link(eta));
                assert!((back - eta).abs() < 1e-12, "{kind} {eta} {back}");
            }
        }
        assert!((softplus(800.0) - 800.0).abs() < 1e-12);
        assert!(softplus(-800.0) >= 0.0);
        assert_eq!(logistic(-1000.0), 0.0);
    }
}
