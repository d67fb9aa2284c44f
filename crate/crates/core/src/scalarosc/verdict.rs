use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VerdictStatus {
    OscillatoryOnInterval,
    Oscillatory,
    Inconclusive,
}

impl VerdictStatus {
    pub fn is_oscillatory(self) -> bool {
        self != VerdictStatus::Inconclusive
    }
}

/// One checked hypothesis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub name: String,
    pub passed: bool,
    pub value: Option<f64>,
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Condition {
    pub fn new(name: impl Into<String>, passed: bool, value: Option<f64>, tol: Option<f64>) -> Self {
        Condition {
            name: name.into(),
            passed,
            value,
            tol,
            detail: None,
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }

    pub fn failed(name: impl Into<String>, detail: impl Into<String>) -> Self {
        Condition::new(name, false, None, None).with_detail(detail)
    }
}

/// Outcome of a sufficient criterion with its evidence trail.
///
/// A criterion never concludes nonoscillation: the only outcomes are an
/// oscillation claim or `Inconclusive`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionVerdict {
    pub status: VerdictStatus,
    pub interval: Option<[f64; 2]>,
    pub method: String,
    pub conditions: Vec<Condition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default)]
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub data: Map<String, Value>,
}

impl CriterionVerdict {
    /// `success` when every condition passed, `Inconclusive` otherwise.
    pub fn from_conditions(
        success: VerdictStatus,
        interval: Option<[f64; 2]>,
        method: impl Into<String>,
        conditions: Vec<Condition>,
    ) -> Self {
        let ok = !conditions.is_empty() && conditions.iter().all(|c| c.passed);
        CriterionVerdict {
            status: if ok { success } else { VerdictStatus::Inconclusive },
            interval,
            method: method.into(),
            conditions,
            horizon: None,
            notes: Vec::new(),
            data: Map::new(),
        }
    }

    pub fn inconclusive(interval: Option<[f64; 2]>, method: impl Into<String>, failed: Condition) -> Self {
        Self::from_conditions(VerdictStatus::Inconclusive, interval, method, vec![failed])
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = Some(horizon);
        self
    }

    pub fn with_data(mut self, key: &str, value: impl Serialize) -> Self {
        self.data
            .insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
        self
    }

    pub fn condition(&self, name: &str) -> Option<&Condition> {
        self.conditions.iter().find(|c| c.name == name)
    }

    pub fn is_oscillatory(&self) -> bool {
        self.status.is_oscillatory()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_follows_conditions() {
        let ok = CriterionVerdict::from_conditions(
            VerdictStatus::OscillatoryOnInterval,
            Some([0.0, 1.0]),
            "m",
            vec![Condition::new("c", true, Some(1.0), Some(0.0))],
        );
        assert_eq!(ok.status, VerdictStatus::OscillatoryOnInterval);
        let bad = CriterionVerdict::from_conditions(
            VerdictStatus::Oscillatory,
            None,
            "m",
            vec![Condition::new("c", true, None, None), Condition::failed("d", "no")],
        );
        assert_eq!(bad.status, VerdictStatus::Inconclusive);
        let empty = CriterionVerdict::from_conditions(VerdictStatus::Oscillatory, None, "m", vec![]);
        assert_eq!(empty.status, VerdictStatus::Inconclusive);
    }

    #[test]
    fn json_shape() {
        let v = CriterionVerdict::from_conditions(
            VerdictStatus::Oscillatory,
            None,
            "m",
            vec![Condition::new("c", true, Some(2.0), None)],
        )
        .with_horizon(10.0);
        let j = serde_json::to_value(&v).unwrap();
        assert_eq!(j["status"], "Oscillatory");
        assert_eq!(j["conditions"][0]["name"], "c");
        assert_eq!(j["horizon"], 10.0);
    }
}
