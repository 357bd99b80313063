use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::ExpDnnParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceEntry {
    pub feature: String,
    /// Signed explainable weight.
    pub weight: f64,
    pub abs_weight: f64,
    /// 1-based; 1 is the most important input.
    pub rank: usize,
}

/// Inputs ordered by descending `|w_i|`, ties broken by input position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub entries: Vec<ImportanceEntry>,
}

impl ImportanceReport {
    pub fn entry(&self, feature: &str) -> Option<&ImportanceEntry> {
        self.entries.iter().find(|e| e.feature == feature)
    }

    pub fn weight(&self, feature: &str) -> Option<f64> {
        self.entry(feature).map(|e| e.weight)
    }

    pub fn abs_weight(&self, feature: &str) -> Option<f64> {
        self.entry(feature).map(|e| e.abs_weight)
    }

    /// Feature names, most important first.
    pub fn ranking(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.feature.as_str()).collect()
    }
}

pub fn explain<S: AsRef<str>>(
    params: &ExpDnnParams,
    feature_names: &[S],
) -> Result<ImportanceReport> {
    let weights = &params.explainable_weights;
    if weights.len() != feature_names.len() {
        return Err(Error::shape(
            "explain",
            format!("{} feature names", weights.len()),
            feature_names.len(),
        ));
    }
    let mut order: Vec<usize> = (0..weights.len()).collect();
    // stable sort keeps input order among equal magnitudes
    order.sort_by(|&a, &b| weights[b].abs().total_cmp(&weights[a].abs()));
    let entries = order
        .into_iter()
        .enumerate()
        .map(|(pos, i)| ImportanceEntry {
            feature: feature_names[i].as_ref().to_string(),
            weight: weights[i],
            abs_weight: weights[i].abs(),
            rank: pos + 1,
        })
        .collect();
    Ok(ImportanceReport { entries })
}
