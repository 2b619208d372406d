//! Universes, coverings, covering systems and decision systems.
//!
//! Objects are addressed by 0-based index everywhere inside the crate; labels
//! only appear at the JSON / CLI boundary.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bitmatrix::BoolMatrix;
use crate::characteristic::{self, CharMatrix};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("universe must contain at least one object")]
    EmptyUniverse,
    #[error("duplicate object label {0:?}")]
    DuplicateLabel(String),
    #[error("unknown object label {0:?}")]
    UnknownLabel(String),
    #[error("covering {covering:?}, block {block}: object index {index} out of range for a universe of {n}")]
    IndexOutOfRange {
        covering: String,
        block: usize,
        index: usize,
        n: usize,
    },
    #[error("duplicate covering name {0:?}")]
    DuplicateName(String),
    #[error("a covering system needs at least one covering")]
    NoCoverings,
    #[error("covering index {index} out of range for a system of {m} coverings")]
    SubsystemIndex { index: usize, m: usize },
    #[error("no covering named {0:?}")]
    UnknownCovering(String),
    #[error("subsystem selection is empty")]
    EmptySelection,
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("malformed document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("field `{field}`: {message}")]
    Field { field: String, message: String },
    #[error("expected a {expected}, found a {found}")]
    Kind {
        expected: &'static str,
        found: &'static str,
    },
}

/// Ordered, distinct object labels.
#[derive(Debug, Clone)]
pub struct Universe {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl Universe {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self, ModelError> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(ModelError::EmptyUniverse);
        }
        let mut index = HashMap::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.clone(), i).is_some() {
                return Err(ModelError::DuplicateLabel(l.clone()));
            }
        }
        Ok(Self { labels, index })
    }

    /// `x1 … xn`.
    pub fn indexed(n: usize) -> Self {
        Self::new((1..=n).map(|i| format!("x{i}"))).expect("n >= 1")
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    /// Resolve a comma-separated label list (`"x2,x3,x4"`) to sorted indices.
    pub fn resolve_list(&self, list: &str) -> Result<Vec<usize>, ModelError> {
        let mut out = BTreeSet::new();
        for label in list.split(',').map(str::trim).filter(|l| !l.is_empty()) {
            out.insert(
                self.position(label)
                    .ok_or_else(|| ModelError::UnknownLabel(label.to_string()))?,
            );
        }
        Ok(out.into_iter().collect())
    }
}

impl PartialEq for Universe {
    fn eq(&self, other: &Self) -> bool {
        self.labels == other.labels
    }
}

impl Eq for Universe {}

/// A named family of blocks over a universe. Blocks may overlap.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Covering {
    name: String,
    blocks: Vec<Vec<usize>>,
}

impl Covering {
    /// Each block is stored sorted and deduplicated; block order is kept.
    pub fn new<I, B>(name: impl Into<String>, blocks: I) -> Self
    where
        I: IntoIterator<Item = B>,
        B: IntoIterator<Item = usize>,
    {
        let blocks = blocks
            .into_iter()
            .map(|b| {
                let set: BTreeSet<usize> = b.into_iter().collect();
                set.into_iter().collect()
            })
            .collect();
        Self {
            name: name.into(),
            blocks,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn renamed(&self, name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            blocks: self.blocks.clone(),
        }
    }

    fn check_indices(&self, n: usize) -> Result<(), ModelError> {
        for (b, block) in self.blocks.iter().enumerate() {
            if let Some(&index) = block.iter().find(|&&i| i >= n) {
                return Err(ModelError::IndexOutOfRange {
                    covering: self.name.clone(),
                    block: b,
                    index,
                    n,
                });
            }
        }
        Ok(())
    }

    /// Violations of the covering rules against a universe of `n` objects.
    pub fn violations(&self, n: usize) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.blocks.is_empty() {
            out.push(Violation::new(&self.name, None, Rule::NoBlocks));
        }
        let mut covered = vec![false; n];
        for (b, block) in self.blocks.iter().enumerate() {
            if block.is_empty() {
                out.push(Violation::new(&self.name, Some(b), Rule::EmptyBlock));
            }
            for &i in block {
                if i < n {
                    covered[i] = true;
                } else {
                    out.push(Violation::new(
                        &self.name,
                        Some(b),
                        Rule::IndexOutOfRange(i),
                    ));
                }
            }
        }
        let missing: Vec<usize> = (0..n).filter(|&i| !covered[i]).collect();
        if !missing.is_empty() {
            out.push(Violation::new(
                &self.name,
                None,
                Rule::UnionNotUniverse(missing),
            ));
        }
        out
    }

    /// True if this is a covering of a universe of `n` objects.
    pub fn covers(&self, n: usize) -> bool {
        self.violations(n).is_empty()
    }

    /// `M_𝒞`: n×|𝒞| with `a_ij = 1` iff `x_i ∈ C_j`.
    pub fn matrix(&self, n: usize) -> BoolMatrix {
        let mut m = BoolMatrix::zeros(n, self.blocks.len());
        for (j, block) in self.blocks.iter().enumerate() {
            for &i in block {
                m.set(i, j, true);
            }
        }
        m
    }

    /// `M_𝒞ᵀ`: one packed row per block (its indicator over the universe).
    pub fn matrix_transposed(&self, n: usize) -> BoolMatrix {
        let mut m = BoolMatrix::zeros(self.blocks.len(), n);
        for (j, block) in self.blocks.iter().enumerate() {
            for &i in block {
                m.set(j, i, true);
            }
        }
        m
    }
}

/// A broken covering rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rule {
    EmptyBlock,
    NoBlocks,
    UnionNotUniverse(Vec<usize>),
    IndexOutOfRange(usize),
    DuplicateName,
    NoCoverings,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub covering: String,
    pub block: Option<usize>,
    pub rule: Rule,
}

impl Violation {
    fn new(covering: &str, block: Option<usize>, rule: Rule) -> Self {
        Self {
            covering: covering.to_string(),
            block,
            rule,
        }
    }

    /// Render with 1-based object labels from `universe`.
    pub fn describe(&self, universe: &Universe) -> String {
        let mut s = format!("covering {:?}", self.covering);
        if let Some(b) = self.block {
            s.push_str(&format!(", block {b}"));
        }
        let rule = match &self.rule {
            Rule::EmptyBlock => "empty block".to_string(),
            Rule::NoBlocks => "covering has no blocks".to_string(),
            Rule::UnionNotUniverse(missing) => {
                let labels: Vec<&str> = missing.iter().map(|&i| universe.label(i)).collect();
                format!("union ≠ U (uncovered: {})", labels.join(","))
            }
            Rule::IndexOutOfRange(i) => format!("object index {i} out of range"),
            Rule::DuplicateName => "duplicate covering name".to_string(),
            Rule::NoCoverings => "system has no coverings".to_string(),
        };
        format!("{s}: {rule}")
    }
}

#[derive(Debug, Default, Clone)]
struct CharCache {
    gamma: OnceLock<Arc<CharMatrix>>,
    pi: OnceLock<Arc<CharMatrix>>,
}

/// A universe plus an ordered family of coverings.
///
/// The type-1 and type-2 characteristic matrices are computed lazily on
/// first request and cached on the value; the value is immutable, so the
/// cache never goes stale. [`CoveringSystem::rebuild`] drops it.
#[derive(Debug, Clone)]
pub struct CoveringSystem {
    universe: Universe,
    coverings: Vec<Covering>,
    cache: CharCache,
}

fn check_family(n: usize, coverings: &[Covering]) -> Result<(), ModelError> {
    let mut names = HashSet::new();
    for c in coverings {
        if !names.insert(c.name()) {
            return Err(ModelError::DuplicateName(c.name().to_string()));
        }
        c.check_indices(n)?;
    }
    Ok(())
}

impl CoveringSystem {
    /// Structural checks only (indices in range, distinct names, m ≥ 1);
    /// the covering rules are reported by [`CoveringSystem::validate`].
    pub fn new(universe: Universe, coverings: Vec<Covering>) -> Result<Self, ModelError> {
        if coverings.is_empty() {
            return Err(ModelError::NoCoverings);
        }
        check_family(universe.len(), &coverings)?;
        Ok(Self {
            universe,
            coverings,
            cache: CharCache::default(),
        })
    }

    pub fn universe(&self) -> &Universe {
        &self.universe
    }

    pub fn n(&self) -> usize {
        self.universe.len()
    }

    pub fn coverings(&self) -> &[Covering] {
        &self.coverings
    }

    pub fn covering(&self, name: &str) -> Option<&Covering> {
        self.coverings.iter().find(|c| c.name() == name)
    }

    /// Total block count `Σ|𝒞_k|`.
    pub fn block_count(&self) -> usize {
        self.coverings.iter().map(Covering::len).sum()
    }

    pub fn validate(&self) -> Result<(), Vec<Violation>> {
        let violations: Vec<Violation> = self
            .coverings
            .iter()
            .flat_map(|c| c.violations(self.n()))
            .collect();
        if violations.is_empty() {
            Ok(())
        } else {
            Err(violations)
        }
    }

    /// `M_𝒟 = [M_𝒞₁ … M_𝒞ₘ]`.
    pub fn matrix(&self) -> BoolMatrix {
        let mut m = BoolMatrix::zeros(self.n(), self.block_count());
        let mut offset = 0;
        for c in &self.coverings {
            for (j, block) in c.blocks().iter().enumerate() {
                for &i in block {
                    m.set(i, offset + j, true);
                }
            }
            offset += c.len();
        }
        m
    }

    /// `M_𝒟ᵀ`, one packed row per block across all coverings.
    pub fn matrix_transposed(&self) -> BoolMatrix {
        let mut m = BoolMatrix::zeros(self.block_count(), self.n());
        for (j, block) in self.coverings.iter().flat_map(|c| c.blocks()).enumerate() {
            for &i in block {
                m.set(j, i, true);
            }
        }
        m
    }

    /// Sub-covering system keeping the listed coverings, in the given order.
    pub fn subsystem(&self, keep: &[usize]) -> Result<Self, ModelError> {
        if keep.is_empty() {
            return Err(ModelError::EmptySelection);
        }
        let m = self.coverings.len();
        let coverings = keep
            .iter()
            .map(|&k| {
                self.coverings
                    .get(k)
                    .cloned()
                    .ok_or(ModelError::SubsystemIndex { index: k, m })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(self.universe.clone(), coverings)
    }

    /// `𝒟⁺`: this system with `covering` appended.
    pub fn with_covering(&self, covering: Covering) -> Result<Self, ModelError> {
        let mut coverings = self.coverings.clone();
        coverings.push(covering);
        Self::new(self.universe.clone(), coverings)
    }

    /// `𝒟⁻`: this system without the named covering, plus the removed covering.
    pub fn without_covering(&self, name: &str) -> Result<(Self, Covering), ModelError> {
        let pos = self
            .coverings
            .iter()
            .position(|c| c.name() == name)
            .ok_or_else(|| ModelError::UnknownCovering(name.to_string()))?;
        let mut coverings = self.coverings.clone();
        let removed = coverings.remove(pos);
        Ok((Self::new(self.universe.clone(), coverings)?, removed))
    }

    /// Cached `Γ(𝒟)`.
    pub fn gamma(&self) -> &CharMatrix {
        self.cache
            .gamma
            .get_or_init(|| Arc::new(characteristic::gamma(self)))
    }

    /// Cached `Π(𝒟)`.
    pub fn pi(&self) -> &CharMatrix {
        self.cache
            .pi
            .get_or_init(|| Arc::new(characteristic::pi(self)))
    }

    pub fn is_cached(&self) -> (bool, bool) {
        (
            self.cache.gamma.get().is_some(),
            self.cache.pi.get().is_some(),
        )
    }

    /// Drop cached characteristic matrices.
    pub fn rebuild(&mut self) {
        self.cache = CharCache::default();
    }
}

impl PartialEq for CoveringSystem {
    fn eq(&self, other: &Self) -> bool {
        self.universe == other.universe && self.coverings == other.coverings
    }
}

impl Eq for CoveringSystem {}

/// Conditional coverings `𝒟_C` and decision coverings `𝒟_D` over one universe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionSystem {
    conditional: CoveringSystem,
    decision: Vec<Covering>,
}

impl DecisionSystem {
    pub fn new(
        universe: Universe,
        conditional: Vec<Covering>,
        decision: Vec<Covering>,
    ) -> Result<Self, ModelError> {
        if decision.is_empty() {
            return Err(ModelError::NoCoverings);
        }
        let conditional = CoveringSystem::new(universe, conditional)?;
        let all: Vec<Covering> = conditional
            .coverings()
            .iter()
            .chain(&decision)
            .cloned()
            .collect();
        check_family(conditional.n(), &all)?;
        Ok(Self {
            conditional,
            decision,
        })
    }

    pub fn universe(&self) -> &Universe {
        self.conditional.universe()
    }

    pub fn n(&self) -> usize {
        self.conditional.n()
    }

    /// `(U, 𝒟_C)` as a covering system.
    pub fn conditional(&self) -> &CoveringSystem {
        &self.conditional
    }

    pub fn decision(&self) -> &[Covering] {
        &self.decision
    }

    /// `M_{𝒟_D}`: all decision blocks concatenated.
    pub fn decision_matrix(&self) -> BoolMatrix {
        let n = self.n();
        let parts: Vec<BoolMatrix> = self.decision.iter().map(|c| c.matrix(n)).collect();
        let refs: Vec<&BoolMatrix> = parts.iter().collect();
        BoolMatrix::hconcat(&refs).expect("same row count")
    }

    pub fn validate(&self) -> Result<(), Vec<Violation>> {
        let mut violations = self.conditional.validate().err().unwrap_or_default();
        violations.extend(self.decision.iter().flat_map(|c| c.violations(self.n())));
        if violations.is_empty() {
            Ok(())
        } else {
            Err(violations)
        }
    }

    /// Decision system with `covering` appended to `𝒟_C`.
    pub fn with_conditional(&self, covering: Covering) -> Result<Self, ModelError> {
        let mut conditional = self.conditional.coverings().to_vec();
        conditional.push(covering);
        Self::new(self.universe().clone(), conditional, self.decision.clone())
    }
}

// ---------------------------------------------------------------------------
// JSON documents

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoveringDoc {
    pub name: String,
    pub blocks: Vec<Vec<usize>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDoc {
    pub universe: Vec<String>,
    pub coverings: Vec<CoveringDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decision: Option<Vec<CoveringDoc>>,
}

/// A parsed document: a plain covering system or a decision system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Parsed {
    Covering(CoveringSystem),
    Decision(DecisionSystem),
}

impl Parsed {
    pub fn into_covering(self) -> Result<CoveringSystem, ParseError> {
        match self {
            Parsed::Covering(s) => Ok(s),
            Parsed::Decision(_) => Err(ParseError::Kind {
                expected: "covering system",
                found: "decision system",
            }),
        }
    }

    pub fn into_decision(self) -> Result<DecisionSystem, ParseError> {
        match self {
            Parsed::Decision(s) => Ok(s),
            Parsed::Covering(_) => Err(ParseError::Kind {
                expected: "decision system",
                found: "covering system",
            }),
        }
    }
}

fn field_err(field: impl Into<String>, message: impl fmt::Display) -> ParseError {
    ParseError::Field {
        field: field.into(),
        message: message.to_string(),
    }
}

fn coverings_from_docs(
    docs: Vec<CoveringDoc>,
    field: &str,
    n: usize,
    seen: &mut HashSet<String>,
) -> Result<Vec<Covering>, ParseError> {
    docs.into_iter()
        .enumerate()
        .map(|(k, doc)| {
            if !seen.insert(doc.name.clone()) {
                return Err(field_err(
                    format!("{field}[{k}].name"),
                    format!("duplicate covering name {:?}", doc.name),
                ));
            }
            for (b, block) in doc.blocks.iter().enumerate() {
                for (p, &i) in block.iter().enumerate() {
                    if i >= n {
                        return Err(field_err(
                            format!("{field}[{k}].blocks[{b}][{p}]"),
                            format!("unknown object index {i} (universe has {n} objects)"),
                        ));
                    }
                }
            }
            Ok(Covering::new(doc.name, doc.blocks))
        })
        .collect()
}

pub fn parse(text: &str) -> Result<Parsed, ParseError> {
    let doc: SystemDoc = serde_json::from_str(text)?;
    let universe = Universe::new(doc.universe).map_err(|e| field_err("universe", e))?;
    let n = universe.len();
    let mut seen = HashSet::new();
    let conditional = coverings_from_docs(doc.coverings, "coverings", n, &mut seen)?;
    if conditional.is_empty() {
        return Err(field_err("coverings", "at least one covering is required"));
    }
    match doc.decision {
        None => Ok(Parsed::Covering(
            CoveringSystem::new(universe, conditional).map_err(|e| field_err("coverings", e))?,
        )),
        Some(decision) => {
            let decision = coverings_from_docs(decision, "decision", n, &mut seen)?;
            if decision.is_empty() {
                return Err(field_err("decision", "at least one covering is required"));
            }
            Ok(Parsed::Decision(
                DecisionSystem::new(universe, conditional, decision)
                    .map_err(|e| field_err("decision", e))?,
            ))
        }
    }
}

/// Parse a standalone covering document `{ "name": …, "blocks": … }` against
/// a universe of `n` objects.
pub fn parse_covering(text: &str, n: usize) -> Result<Covering, ParseError> {
    let doc: CoveringDoc = serde_json::from_str(text)?;
    let mut seen = HashSet::new();
    Ok(coverings_from_docs(vec![doc], "covering", n, &mut seen)?
        .pop()
        .expect("one covering"))
}

fn to_docs(coverings: &[Covering]) -> Vec<CoveringDoc> {
    coverings
        .iter()
        .map(|c| CoveringDoc {
            name: c.name().to_string(),
            blocks: c.blocks().to_vec(),
        })
        .collect()
}

pub fn to_doc(system: &Parsed) -> SystemDoc {
    match system {
        Parsed::Covering(s) => SystemDoc {
            universe: s.universe().labels().to_vec(),
            coverings: to_docs(s.coverings()),
            decision: None,
        },
        Parsed::Decision(d) => SystemDoc {
            universe: d.universe().labels().to_vec(),
            coverings: to_docs(d.conditional().coverings()),
            decision: Some(to_docs(d.decision())),
        },
    }
}

pub fn serialize(system: &Parsed) -> String {
    serde_json::to_string_pretty(&to_doc(system)).expect("documents always serialize")
}

pub fn serialize_covering(covering: &Covering) -> String {
    serde_json::to_string_pretty(&to_docs(std::slice::from_ref(covering))[0])
        .expect("documents always serialize")
}
