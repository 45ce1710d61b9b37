//! Measured constants keyed by `(lemma, parameters)`, stored as JSON golden
//! files and compared on every run.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub lemma: String,
    pub params: BTreeMap<String, String>,
    pub value: String,
    /// Bound the value is asserted against, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstantsLedger {
    pub entries: BTreeMap<String, LedgerEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mismatch {
    pub key: String,
    pub expected: Option<String>,
    pub found: Option<String>,
}

impl ConstantsLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn key(lemma: &str, params: &BTreeMap<String, String>) -> String {
        let ps: Vec<String> = params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!("{lemma}[{}]", ps.join(","))
    }

    pub fn record(
        &mut self,
        lemma: &str,
        params: &[(&str, String)],
        value: impl Display,
        bound: Option<String>,
    ) -> String {
        let params: BTreeMap<String, String> = params
            .iter()
            .map(|(k, v)| (k.to_string(), v.clone()))
            .collect();
        let key = Self::key(lemma, &params);
        self.entries.insert(
            key.clone(),
            LedgerEntry {
                lemma: lemma.to_string(),
                params,
                value: value.to_string(),
                bound,
            },
        );
        key
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ledger serializes") + "\n"
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&s)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())
            .map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display())))
    }

    /// Entries whose values differ from `golden`, including keys present on
    /// only one side.
    pub fn compare(&self, golden: &ConstantsLedger) -> Vec<Mismatch> {
        let mut out = Vec::new();
        for (k, e) in &golden.entries {
            let found = self.entries.get(k).map(|x| x.value.clone());
            if found.as_deref() != Some(e.value.as_str()) {
                out.push(Mismatch {
                    key: k.clone(),
                    expected: Some(e.value.clone()),
                    found,
                });
            }
        }
        for (k, e) in &self.entries {
            if !golden.entries.contains_key(k) {
                out.push(Mismatch {
                    key: k.clone(),
                    expected: None,
                    found: Some(e.value.clone()),
                });
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_compare() {
        let mut a = ConstantsLedger::new();
        let k = a.record(
            "rom8",
            &[("d", "2".into()), ("L", "20".into())],
            2,
            Some("12".into()),
        );
        assert_eq!(k, "rom8[L=20,d=2]");
        let b = ConstantsLedger::from_json(&a.to_json()).unwrap();
        assert_eq!(a, b);
        assert!(a.compare(&b).is_empty());
        let mut c = b.clone();
        c.record("rom8", &[("d", "2".into()), ("L", "20".into())], 3, None);
        assert_eq!(c.compare(&a).len(), 1);
    }
}
