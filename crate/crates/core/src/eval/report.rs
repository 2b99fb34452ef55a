use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::auc::{auc_roc, roc_curve, RocPoint};
use crate::error::Result;
use crate::sample::{Label, Language};
use crate::scoring::MembershipScore;

/// Score columns evaluated, in report order.
pub const METHODS: [&str; 5] = ["anomaly", "probe", "fused", "loss", "mink"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageCell {
    pub auc: Option<f64>,
    pub n_members: usize,
    pub n_non_members: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    /// AUC over all samples pooled together.
    pub overall_pooled: Option<f64>,
    /// Mean of the per-language AUCs that are defined.
    pub overall_macro: Option<f64>,
    pub n_members: usize,
    pub n_non_members: usize,
    pub languages: BTreeMap<Language, LanguageCell>,
}

/// Methods × languages AUC table. ROC curves are kept alongside for CSV
/// export and are not part of the JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub methods: BTreeMap<String, MethodReport>,
    #[serde(skip)]
    pub roc: BTreeMap<String, Vec<RocPoint>>,
}

/// A labeled score row together with its sample's language.
#[derive(Debug, Clone, Copy)]
pub struct ScoredSample<'a> {
    pub language: Language,
    pub label: Label,
    pub score: &'a MembershipScore,
}

fn column(score: &MembershipScore, method: &str) -> Option<f64> {
    match method {
        "anomaly" => score.anomaly,
        "probe" => score.probe,
        "fused" => score.fused,
        "loss" => score.loss,
        "mink" => score.mink,
        _ => None,
    }
}

fn auc_if_defined(scores: &[f64], labels: &[Label]) -> Result<Option<f64>> {
    let pos = labels.iter().filter(|l| l.is_member()).count();
    if pos == 0 || pos == labels.len() {
        return Ok(None);
    }
    auc_roc(scores, labels).map(Some)
}

/// Builds the report for every method that has at least one score.
pub fn build_report(rows: &[ScoredSample<'_>]) -> Result<EvalReport> {
    let mut methods = BTreeMap::new();
    let mut roc = BTreeMap::new();
    for method in METHODS {
        let present: Vec<(Language, Label, f64)> = rows
            .iter()
            .filter_map(|r| column(r.score, method).map(|s| (r.language, r.label, s)))
            .collect();
        if present.is_empty() {
            continue;
        }
        let scores: Vec<f64> = present.iter().map(|r| r.2).collect();
        let labels: Vec<Label> = present.iter().map(|r| r.1).collect();
        let overall_pooled = auc_if_defined(&scores, &labels)?;
        if overall_pooled.is_some() {
            roc.insert(method.to_string(), roc_curve(&scores, &labels)?);
        }

        let mut languages = BTreeMap::new();
        for lang in Language::ALL {
            let (s, l): (Vec<f64>, Vec<Label>) = present
                .iter()
                .filter(|r| r.0 == lang)
                .map(|r| (r.2, r.1))
                .unzip();
            if s.is_empty() {
                continue;
            }
            let n_members = l.iter().filter(|x| x.is_member()).count();
            languages.insert(
                lang,
                LanguageCell {
                    auc: auc_if_defined(&s, &l)?,
                    n_members,
                    n_non_members: l.len() - n_members,
                },
            );
        }
        let defined: Vec<f64> = languages.values().filter_map(|c| c.auc).collect();
        let overall_macro =
            (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64);
        let n_members = labels.iter().filter(|x| x.is_member()).count();
        methods.insert(
            method.to_string(),
            MethodReport {
                overall_pooled,
                overall_macro,
                n_members,
                n_non_members: labels.len() - n_members,
                languages,
            },
        );
    }
    Ok(EvalReport { methods, roc })
}
