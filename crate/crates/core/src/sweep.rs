//! Formula sweeps over one network parameter, written as CSV.

use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{decimal_string, fraction_string, Q};
use crate::formulas::{dof_fd_achievable, dof_fd_upper, dof_hd, dof_no_bs2bs, dof_self_interference};
use crate::network::NetworkConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum SweepVariable {
    K,
    M,
    N,
}

impl FromStr for SweepVariable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "K" | "k" => Ok(Self::K),
            "M" | "m" => Ok(Self::M),
            "N" | "n" => Ok(Self::N),
            other => Err(Error::InvalidConfig(format!("unknown sweep variable {other:?} (expected K, M or N)"))),
        }
    }
}

/// Inclusive integer range `start:end:step`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepRange {
    pub start: usize,
    pub end: usize,
    pub step: usize,
}

impl SweepRange {
    pub fn values(&self) -> impl Iterator<Item = usize> {
        (self.start..=self.end).step_by(self.step)
    }
}

impl FromStr for SweepRange {
    type Err = Error;

    /// Accepts `start:end` or `start:end:step`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("bad range {s:?} (expected start:end[:step])"));
        let parts: Vec<usize> = s.split(':').map(|p| p.trim().parse().map_err(|_| bad())).collect::<Result<_>>()?;
        let (start, end, step) = match parts[..] {
            [a, b] => (a, b, 1),
            [a, b, c] => (a, b, c),
            _ => return Err(bad()),
        };
        if step == 0 || start > end {
            return Err(Error::InvalidConfig(format!("range {s:?} is empty or has zero step")));
        }
        Ok(Self { start, end, step })
    }
}

/// One swept parameter; the other two come from `base`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub range: SweepRange,
    pub base: NetworkConfig,
}

impl SweepSpec {
    pub fn configs(&self) -> Result<Vec<NetworkConfig>> {
        let b = self.base;
        self.range
            .values()
            .map(|v| match self.variable {
                SweepVariable::K => NetworkConfig::new(v, b.m, b.n),
                SweepVariable::M => NetworkConfig::new(b.k, v, b.n),
                SweepVariable::N => NetworkConfig::new(b.k, b.m, v),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepRow {
    pub config: NetworkConfig,
    pub fd_lower: Q,
    pub fd_upper: Q,
    pub hd: Q,
    pub no_bs2bs: Q,
    pub self_interference: Q,
    pub regime: String,
}

pub fn sweep_row(c: &NetworkConfig) -> SweepRow {
    let fd = dof_fd_achievable(c);
    SweepRow {
        config: *c,
        fd_lower: fd.value,
        fd_upper: dof_fd_upper(c).value,
        hd: dof_hd(c).value,
        no_bs2bs: dof_no_bs2bs(c).value,
        self_interference: dof_self_interference(c).value,
        regime: fd.regime.label(),
    }
}

pub fn sweep_rows(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    Ok(spec.configs()?.par_iter().map(sweep_row).collect())
}

pub const CSV_HEADER: [&str; 14] = [
    "K",
    "M",
    "N",
    "fd_lower",
    "fd_upper",
    "hd",
    "no_bs2bs",
    "self_interference",
    "regime",
    "fd_lower_exact",
    "fd_upper_exact",
    "hd_exact",
    "no_bs2bs_exact",
    "self_interference_exact",
];

/// Decimals with six digits, then the regime, then exact `p/q` columns.
pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        let values = [r.fd_lower, r.fd_upper, r.hd, r.no_bs2bs, r.self_interference];
        let mut rec = vec![r.config.k.to_string(), r.config.m.to_string(), r.config.n.to_string()];
        rec.extend(values.iter().map(decimal_string));
        rec.push(r.regime.clone());
        rec.extend(values.iter().map(fraction_string));
        w.write_record(&rec)?;
    }
    w.flush()
}
