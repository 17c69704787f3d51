use serde::{Deserialize, Serialize};

use crate::dataset::DrumClass;

/// Ground truth through the codec only; bounds what any token model can reach.
pub const RECONSTRUCTION: &str = "reconstruction";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub class: DrumClass,
    pub metric: String,
    pub system: String,
    pub value: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub records: Vec<ReportRecord>,
}

impl EvalReport {
    pub fn push(&mut self, class: DrumClass, metric: &str, system: &str, value: f64) {
        self.records.push(ReportRecord {
            class,
            metric: metric.to_string(),
            system: system.to_string(),
            value,
        });
    }

    pub fn get(&self, class: DrumClass, metric: &str, system: &str) -> Option<f64> {
        self.records
            .iter()
            .find(|r| r.class == class && r.metric == metric && r.system == system)
            .map(|r| r.value)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
