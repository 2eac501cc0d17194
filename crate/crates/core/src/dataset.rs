//! Fringe datasets: per-point trial counts and click tallies.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::io::{fmt_f64, parse_key_values, write_key_values, Table, TableError};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error(transparent)]
    Table(#[from] TableError),
    #[error("dataset: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FringePoint {
    /// Storage delay (s).
    pub dt: f64,
    pub trials: u64,
    /// One tally per channel, in [`FringeDataset::channels`] order.
    pub counts: Vec<u64>,
}

impl FringePoint {
    /// A zero-trial point carries no information and is skipped by fits.
    pub fn is_empty(&self) -> bool {
        self.trials == 0
    }
}

/// One fidelity or coincidence estimate with the number of events behind it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesPoint {
    pub dt: f64,
    pub value: f64,
    pub samples: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FringeDataset {
    pub order: u8,
    pub channels: Vec<String>,
    pub points: Vec<FringePoint>,
    pub metadata: BTreeMap<String, String>,
}

pub mod channel {
    pub const PLUS_AS1: &str = "plus_as1";
    pub const PLUS_AS2: &str = "plus_as2";
    pub const PLUS_TIMEOUTS: &str = "plus_timeouts";
    pub const MINUS_AS1: &str = "minus_as1";
    pub const MINUS_AS2: &str = "minus_as2";
    pub const MINUS_TIMEOUTS: &str = "minus_timeouts";
    pub const COINC: &str = "coinc";
    pub const AS1: &str = "as1";
    pub const AS2: &str = "as2";
    pub const TIMEOUTS: &str = "timeouts";

    pub const FIRST_ORDER: [&str; 6] = [PLUS_AS1, PLUS_AS2, PLUS_TIMEOUTS, MINUS_AS1, MINUS_AS2, MINUS_TIMEOUTS];
    pub const SECOND_ORDER: [&str; 4] = [COINC, AS1, AS2, TIMEOUTS];
}

/// Which herald a first-order series is conditioned on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeraldSign {
    Plus,
    Minus,
}

impl FringeDataset {
    pub fn new(order: u8, points: Vec<FringePoint>, metadata: BTreeMap<String, String>) -> Result<Self, DatasetError> {
        let channels: Vec<String> = match order {
            1 => channel::FIRST_ORDER.iter().map(|s| s.to_string()).collect(),
            2 => channel::SECOND_ORDER.iter().map(|s| s.to_string()).collect(),
            o => return Err(DatasetError::Invalid(format!("order {o} not in {{1, 2}}"))),
        };
        let ds = Self {
            order,
            channels,
            points,
            metadata,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        for w in self.points.windows(2) {
            if !(w[1].dt > w[0].dt) {
                return Err(DatasetError::Invalid(format!(
                    "dt values not strictly increasing at {} -> {}",
                    w[0].dt, w[1].dt
                )));
            }
        }
        for p in &self.points {
            if p.counts.len() != self.channels.len() {
                return Err(DatasetError::Invalid(format!(
                    "point at dt={} has {} counts for {} channels",
                    p.dt,
                    p.counts.len(),
                    self.channels.len()
                )));
            }
            if let Some((c, n)) = self.channels.iter().zip(&p.counts).find(|(_, &n)| n > p.trials) {
                return Err(DatasetError::Invalid(format!(
                    "channel {c} has {n} counts for {} trials at dt={}",
                    p.trials, p.dt
                )));
            }
        }
        Ok(())
    }

    pub fn channel_index(&self, name: &str) -> Option<usize> {
        self.channels.iter().position(|c| c == name)
    }

    pub fn counts(&self, name: &str) -> Option<Vec<u64>> {
        let k = self.channel_index(name)?;
        Some(self.points.iter().map(|p| p.counts[k]).collect())
    }

    /// Estimated `f_{+|sign}`: fraction of anti-Stokes clicks landing on
    /// `D_AS1`, with `as1 + as2` as the sample size. Points without clicks
    /// are dropped.
    pub fn fidelity_series(&self, sign: HeraldSign) -> Result<Vec<SeriesPoint>, DatasetError> {
        if self.order != 1 {
            return Err(DatasetError::Invalid("fidelity series needs an order-1 dataset".into()));
        }
        let (c1, c2) = match sign {
            HeraldSign::Plus => (channel::PLUS_AS1, channel::PLUS_AS2),
            HeraldSign::Minus => (channel::MINUS_AS1, channel::MINUS_AS2),
        };
        let (k1, k2) = (self.channel_index(c1).unwrap(), self.channel_index(c2).unwrap());
        Ok(self
            .points
            .iter()
            .filter_map(|p| {
                let n = (p.counts[k1] + p.counts[k2]) as f64;
                (n > 0.0).then(|| SeriesPoint {
                    dt: p.dt,
                    value: p.counts[k1] as f64 / n,
                    samples: n,
                })
            })
            .collect())
    }

    /// Coincidence rate per heralded trial (timeouts excluded).
    pub fn coincidence_series(&self) -> Result<Vec<SeriesPoint>, DatasetError> {
        if self.order != 2 {
            return Err(DatasetError::Invalid("coincidence series needs an order-2 dataset".into()));
        }
        let kc = self.channel_index(channel::COINC).unwrap();
        let kt = self.channel_index(channel::TIMEOUTS).unwrap();
        Ok(self
            .points
            .iter()
            .filter_map(|p| {
                let n = (p.trials - p.counts[kt]) as f64;
                (n > 0.0).then(|| SeriesPoint {
                    dt: p.dt,
                    value: p.counts[kc] as f64 / n,
                    samples: n,
                })
            })
            .collect())
    }

    /// `dt_us,trials,ch_<name>,...`, one row per point.
    pub fn to_csv(&self) -> String {
        let mut head = vec!["dt_us".to_string(), "trials".to_string()];
        head.extend(self.channels.iter().map(|c| format!("ch_{c}")));
        let mut t = Table::new(head);
        for p in &self.points {
            let mut row = vec![fmt_f64(p.dt * 1e6), p.trials.to_string()];
            row.extend(p.counts.iter().map(|c| c.to_string()));
            t.push(row);
        }
        t.to_csv()
    }

    pub fn metadata_text(&self) -> String {
        let mut kv = self.metadata.clone();
        kv.insert("order".into(), self.order.to_string());
        write_key_values(&kv)
    }

    /// Reads a dataset written by [`to_csv`](Self::to_csv), with its sidecar.
    pub fn from_csv(csv: &str, metadata: Option<&str>) -> Result<Self, DatasetError> {
        let t = Table::parse_csv(csv)?;
        if t.header.len() < 2 || t.header[0] != "dt_us" || t.header[1] != "trials" {
            return Err(TableError::Malformed {
                line: 1,
                msg: "header must start with dt_us,trials".into(),
            }
            .into());
        }
        let channels: Vec<String> = t.header[2..]
            .iter()
            .map(|h| {
                h.strip_prefix("ch_").map(str::to_string).ok_or(TableError::Malformed {
                    line: 1,
                    msg: format!("column `{h}` lacks the ch_ prefix"),
                })
            })
            .collect::<Result<_, _>>()?;
        let order = if channels == channel::FIRST_ORDER {
            1
        } else if channels == channel::SECOND_ORDER {
            2
        } else {
            return Err(DatasetError::Invalid(format!("unrecognized channel set {channels:?}")));
        };
        let dts = t.f64_column("dt_us")?;
        let mut points = Vec::new();
        for (i, (row, dt)) in t.rows.iter().zip(dts).enumerate() {
            let ints = row[1..]
                .iter()
                .map(|v| {
                    v.parse::<u64>().map_err(|_| TableError::Malformed {
                        line: i + 2,
                        msg: format!("`{v}` is not a count"),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            points.push(FringePoint {
                dt: dt / 1e6,
                trials: ints[0],
                counts: ints[1..].to_vec(),
            });
        }
        let mut meta = match metadata {
            Some(m) => parse_key_values(m)?,
            None => BTreeMap::new(),
        };
        meta.remove("order");
        Self::new(order, points, meta)
    }
}
