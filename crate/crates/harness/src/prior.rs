//! Prior-filtered datasets: keep only samples whose influence tag is allowed.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PriorSpec {
    allowed: BTreeSet<String>,
    tagger: HashMap<String, String>,
}

impl PriorSpec {
    pub fn new(allowed: BTreeSet<String>, tagger: HashMap<String, String>) -> Result<Self> {
        if allowed.is_empty() {
            return Err(HarnessError::invalid("allowed_tags", "must not be empty"));
        }
        Ok(Self { allowed, tagger })
    }

    pub fn tag(&self, id: &str) -> Option<&str> {
        self.tagger.get(id).map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Filtered<P> {
    pub kept: Vec<(String, P)>,
    /// Tag counts over the whole input.
    pub tag_counts: BTreeMap<String, usize>,
    /// Samples the tagger does not cover; always excluded.
    pub untagged: usize,
}

pub fn prior_filter<P: Clone>(samples: &[(String, P)], prior: &PriorSpec) -> Filtered<P> {
    let mut out = Filtered {
        kept: Vec::new(),
        tag_counts: BTreeMap::new(),
        untagged: 0,
    };
    for (id, payload) in samples {
        match prior.tag(id) {
            None => out.untagged += 1,
            Some(tag) => {
                *out.tag_counts.entry(tag.to_string()).or_default() += 1;
                if prior.allowed.contains(tag) {
                    out.kept.push((id.clone(), payload.clone()));
                }
            }
        }
    }
    out
}
