use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const TIME_COLUMN: &str = "time_s";
pub const AMBIENT_COLUMN: &str = "ambient_c";
pub const TEMP_SUFFIX: &str = "_temp_c";
pub const EFFORT_SUFFIX: &str = "_effort";

/// Uniformly sampled record of node temperatures and actuator efforts.
///
/// Series are stored column-wise: `temperatures[k]` belongs to
/// `node_ids[k]`, `efforts[k]` to `actuator_ids[k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct TelemetryLog {
    pub times: Vec<f64>,
    pub ambient: Vec<f64>,
    pub node_ids: Vec<String>,
    pub temperatures: Vec<Vec<f64>>,
    pub actuator_ids: Vec<String>,
    pub efforts: Vec<Vec<f64>>,
}

impl TelemetryLog {
    pub fn empty(node_ids: Vec<String>, actuator_ids: Vec<String>) -> Self {
        Self {
            times: Vec::new(),
            ambient: Vec::new(),
            temperatures: vec![Vec::new(); node_ids.len()],
            efforts: vec![Vec::new(); actuator_ids.len()],
            node_ids,
            actuator_ids,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn push_sample(&mut self, time: f64, ambient: f64, temperatures: &[f64], efforts: &[f64]) {
        assert_eq!(temperatures.len(), self.node_ids.len());
        assert_eq!(efforts.len(), self.actuator_ids.len());
        self.times.push(time);
        self.ambient.push(ambient);
        for (series, &t) in self.temperatures.iter_mut().zip(temperatures) {
            series.push(t);
        }
        for (series, &f) in self.efforts.iter_mut().zip(efforts) {
            series.push(f);
        }
    }

    /// Sampling period, seconds. Requires at least two samples.
    pub fn period(&self) -> Result<f64> {
        if self.times.len() < 2 {
            return Err(Error::invalid("telemetry needs at least two samples"));
        }
        Ok((self.times[self.times.len() - 1] - self.times[0]) / (self.times.len() - 1) as f64)
    }

    pub fn sample_rate(&self) -> Result<f64> {
        Ok(1.0 / self.period()?)
    }

    /// Structural checks: equal lengths, finite values, strictly increasing
    /// and uniformly spaced times.
    pub fn validate(&self) -> Result<()> {
        let n = self.times.len();
        if self.ambient.len() != n
            || self.temperatures.iter().any(|s| s.len() != n)
            || self.efforts.iter().any(|s| s.len() != n)
        {
            return Err(Error::invalid("telemetry series have different lengths"));
        }
        if self.temperatures.len() != self.node_ids.len() || self.efforts.len() != self.actuator_ids.len() {
            return Err(Error::invalid("telemetry column ids do not match series"));
        }
        let all = self
            .times
            .iter()
            .chain(&self.ambient)
            .chain(self.temperatures.iter().flatten())
            .chain(self.efforts.iter().flatten());
        if let Some(bad) = all.into_iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("telemetry contains non-finite value {bad}")));
        }
        if n >= 2 {
            let period = self.period()?;
            if !(period > 0.0) {
                return Err(Error::invalid("telemetry times must be strictly increasing"));
            }
            for (i, w) in self.times.windows(2).enumerate() {
                let step = w[1] - w[0];
                if !(step > 0.0) {
                    return Err(Error::invalid(format!("telemetry time not increasing at row {}", i + 1)));
                }
                if (step - period).abs() > 1e-6 * period.max(1.0) {
                    return Err(Error::invalid(format!(
                        "telemetry sampling not uniform at row {}: step {step} vs period {period}",
                        i + 1
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn node_index(&self, node: &str) -> Result<usize> {
        self.node_ids.iter().position(|n| n == node).ok_or_else(|| Error::UnknownNode {
            node: node.to_string(),
            available: self.node_ids.clone(),
        })
    }

    pub fn actuator_index(&self, actuator: &str) -> Result<usize> {
        self.actuator_ids
            .iter()
            .position(|a| a == actuator)
            .ok_or_else(|| Error::invalid(format!("unknown actuator `{actuator}`")))
    }

    /// Actuator driving `node`: the only actuator when there is one,
    /// otherwise the longest actuator id that prefixes the node id.
    pub fn infer_actuator(&self, node: &str) -> Result<String> {
        self.node_index(node)?;
        if self.actuator_ids.len() == 1 {
            return Ok(self.actuator_ids[0].clone());
        }
        self.actuator_ids
            .iter()
            .filter(|a| node.starts_with(a.as_str()))
            .max_by_key(|a| a.len())
            .cloned()
            .ok_or_else(|| Error::invalid(format!("cannot infer the actuator driving node `{node}`")))
    }

    pub fn mean_ambient(&self) -> f64 {
        if self.ambient.is_empty() {
            return 0.0;
        }
        self.ambient.iter().sum::<f64>() / self.ambient.len() as f64
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec![TIME_COLUMN.to_string(), AMBIENT_COLUMN.to_string()];
        header.extend(self.node_ids.iter().map(|n| format!("{n}{TEMP_SUFFIX}")));
        header.extend(self.actuator_ids.iter().map(|a| format!("{a}{EFFORT_SUFFIX}")));
        w.write_record(&header)?;
        for i in 0..self.len() {
            let mut row = vec![self.times[i].to_string(), self.ambient[i].to_string()];
            row.extend(self.temperatures.iter().map(|s| s[i].to_string()));
            row.extend(self.efforts.iter().map(|s| s[i].to_string()));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        if header.len() < 2 || header[0] != TIME_COLUMN || header[1] != AMBIENT_COLUMN {
            return Err(Error::schema(
                Some("header".into()),
                format!("expected leading columns `{TIME_COLUMN}, {AMBIENT_COLUMN}`"),
            ));
        }
        let mut node_cols = Vec::new();
        let mut effort_cols = Vec::new();
        for (i, name) in header.iter().enumerate().skip(2) {
            if let Some(node) = name.strip_suffix(TEMP_SUFFIX) {
                node_cols.push((i, node.to_string()));
            } else if let Some(act) = name.strip_suffix(EFFORT_SUFFIX) {
                effort_cols.push((i, act.to_string()));
            } else {
                return Err(Error::schema(
                    Some(format!("header column {}", i + 1)),
                    format!("unrecognized column `{name}`"),
                ));
            }
        }
        let mut log = Self::empty(
            node_cols.iter().map(|(_, n)| n.clone()).collect(),
            effort_cols.iter().map(|(_, a)| a.clone()).collect(),
        );
        for (row_no, record) in r.records().enumerate() {
            let record = record?;
            let parse = |i: usize| -> Result<f64> {
                record
                    .get(i)
                    .ok_or_else(|| Error::schema(Some(format!("row {}", row_no + 2)), "missing field"))?
                    .parse::<f64>()
                    .map_err(|e| Error::schema(Some(format!("row {}, column {}", row_no + 2, i + 1)), e.to_string()))
            };
            let temps = node_cols.iter().map(|(i, _)| parse(*i)).collect::<Result<Vec<_>>>()?;
            let efforts = effort_cols.iter().map(|(i, _)| parse(*i)).collect::<Result<Vec<_>>>()?;
            log.push_sample(parse(0)?, parse(1)?, &temps, &efforts);
        }
        log.validate()?;
        Ok(log)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(file).map_err(|e| match e {
            Error::Io { .. } => e,
            other => Error::Parse {
                path: path.to_path_buf(),
                message: other.to_string(),
            },
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn small_log() -> TelemetryLog {
        let mut log = TelemetryLog::empty(
            vec!["l_knee_core".into(), "l_knee_bridge".into()],
            vec!["l_knee".into(), "l_hip".into()],
        );
        for i in 0..5 {
            let t = i as f64 * 0.1;
            log.push_sample(t, 25.0, &[30.0 + t, 31.0], &[10.0 * t, -2.5]);
        }
        log
    }

    #[test]
    fn header_layout() {
        let mut buf = Vec::new();
        small_log().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("time_s,ambient_c,l_knee_core_temp_c,l_knee_bridge_temp_c,l_knee_effort,l_hip_effort\n"));
    }

    #[test]
    fn header_only_round_trip() {
        let log = TelemetryLog::empty(vec!["a_temp".into()], vec!["a".into()]);
        let mut buf = Vec::new();
        log.write_csv(&mut buf).unwrap();
        let back = TelemetryLog::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, log);
    }

    #[test]
    fn infers_actuator_by_prefix() {
        let log = small_log();
        assert_eq!(log.infer_actuator("l_knee_core").unwrap(), "l_knee");
        match log.infer_actuator("r_knee_core") {
            Err(Error::UnknownNode { available, .. }) => assert_eq!(available.len(), 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_non_uniform_sampling() {
        let mut log = small_log();
        log.times[3] += 0.03;
        assert!(log.validate().is_err());
        let mut log = small_log();
        log.times.swap(1, 2);
        assert!(log.validate().is_err());
    }

    #[test]
    fn rejects_unknown_columns() {
        let text = "time_s,ambient_c,foo\n0,25,1\n";
        assert!(TelemetryLog::read_csv(text.as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_lossless(values in proptest::collection::vec(-1e6f64..1e6, 12)) {
            let mut log = TelemetryLog::empty(vec!["n".into()], vec!["a".into(), "b".into()]);
            for (i, chunk) in values.chunks(3).enumerate() {
                log.push_sample(i as f64 * 0.1, chunk[0], &[chunk[1]], &[chunk[2], chunk[0] / 3.0]);
            }
            let mut buf = Vec::new();
            log.write_csv(&mut buf).unwrap();
            prop_assert_eq!(TelemetryLog::read_csv(buf.as_slice()).unwrap(), log);
        }
    }
}
