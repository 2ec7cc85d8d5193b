//! Photon-count records for state and process tomography.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{PhyschanError, Result};
use crate::model::PolarizationLabel;

/// Sanity cap on any single count.
pub const MAX_COUNT: u64 = 1_000_000_000_000;

/// Counts for one state tomography run: photon count per projector setting,
/// each integrated over `total` received photons.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateCounts {
    records: Vec<StateRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateRecord {
    pub projector: PolarizationLabel,
    pub count: u64,
    pub total: u64,
}

impl StateCounts {
    pub fn new(records: Vec<StateRecord>) -> Result<Self> {
        for r in &records {
            if r.total == 0 {
                return Err(PhyschanError::ZeroTotal);
            }
            if r.count > MAX_COUNT {
                return Err(PhyschanError::InvalidCounts(format!(
                    "count {} for projector {} exceeds the sanity cap",
                    r.count, r.projector
                )));
            }
        }
        for needed in PolarizationLabel::TOMOGRAPHY {
            if !records.iter().any(|r| r.projector == needed) {
                return Err(PhyschanError::InvalidCounts(format!(
                    "missing projector {needed} (state counts must cover H, V, D, R)"
                )));
            }
        }
        Ok(Self { records })
    }

    pub fn records(&self) -> &[StateRecord] {
        &self.records
    }

    /// Measured frequency n/N for a projector.
    pub fn frequency(&self, projector: PolarizationLabel) -> f64 {
        let r = self
            .records
            .iter()
            .find(|r| r.projector == projector)
            .expect("projector coverage checked at construction");
        r.count as f64 / r.total as f64
    }
}

/// Counts for process tomography over a (input, projector) grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProcessCounts {
    entries: BTreeMap<(PolarizationLabel, PolarizationLabel), ProcessRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProcessRecord {
    pub count: u64,
    pub total: u64,
}

impl ProcessCounts {
    pub fn new(
        records: Vec<(PolarizationLabel, PolarizationLabel, ProcessRecord)>,
    ) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (input, projector, record) in records {
            if record.total == 0 {
                return Err(PhyschanError::ZeroTotal);
            }
            if record.count > MAX_COUNT {
                return Err(PhyschanError::InvalidCounts(format!(
                    "count {} for ({input}, {projector}) exceeds the sanity cap",
                    record.count
                )));
            }
            if entries.insert((input, projector), record).is_some() {
                return Err(PhyschanError::InvalidCounts(format!(
                    "duplicate cell ({input}, {projector})"
                )));
            }
        }
        for input in PolarizationLabel::TOMOGRAPHY {
            for projector in PolarizationLabel::TOMOGRAPHY {
                if !entries.contains_key(&(input, projector)) {
                    return Err(PhyschanError::InvalidCounts(format!(
                        "missing grid cell ({input}, {projector})"
                    )));
                }
            }
        }
        Ok(Self { entries })
    }

    pub fn get(&self, input: PolarizationLabel, projector: PolarizationLabel) -> Option<&ProcessRecord> {
        self.entries.get(&(input, projector))
    }

    pub fn frequency(&self, input: PolarizationLabel, projector: PolarizationLabel) -> Option<f64> {
        self.get(input, projector).map(|r| r.count as f64 / r.total as f64)
    }

    pub fn iter(
        &self,
    ) -> impl Iterator<Item = (&(PolarizationLabel, PolarizationLabel), &ProcessRecord)> {
        self.entries.iter()
    }

    /// True when all 36 cells of the {H,V,D,A,R,L}^2 grid are present.
    pub fn covers_full_grid(&self) -> bool {
        PolarizationLabel::ALL.iter().all(|&i| {
            PolarizationLabel::ALL.iter().all(|&j| self.entries.contains_key(&(i, j)))
        })
    }

    /// Output-side state counts for one input: every recorded projection of
    /// that row (the {H, V, D, R} minimum, plus A and L when measured).
    pub fn output_state_counts(&self, input: PolarizationLabel) -> Result<StateCounts> {
        for &projector in &PolarizationLabel::TOMOGRAPHY {
            if self.get(input, projector).is_none() {
                return Err(PhyschanError::InvalidCounts(format!(
                    "missing grid cell ({input}, {projector})"
                )));
            }
        }
        let records = PolarizationLabel::ALL
            .iter()
            .filter_map(|&projector| {
                self.get(input, projector)
                    .map(|r| StateRecord { projector, count: r.count, total: r.total })
            })
            .collect::<Vec<_>>();
        StateCounts::new(records)
    }
}
