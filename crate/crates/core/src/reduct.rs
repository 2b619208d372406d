//! Type-1 and type-2 reducts of covering decision systems.
//!
//! For a family `P ⊆ 𝒟_C` with characteristic matrix `K(P)` (`Γ` for type 1,
//! `Π` for type 2) the decision products are `K(P) • M_𝒟D` and
//! `K(P) ⊙ M_𝒟D`. `P` is a reduct when both products equal those of the full
//! `𝒟_C` and no nonempty proper subset of `P` has both products equal.
//!
//! Enumeration is exhaustive over nonempty subsets and therefore gated by a
//! bound on `|𝒟_C|`. Subset characteristic matrices are assembled from the
//! per-covering ones (`Γ(P) = ∨ Γ(𝒞)`, `Π(P) = ∧ Π(𝒞)`).

use rayon::prelude::*;
use thiserror::Error;

use crate::bitmatrix::{parallel_kernels, BoolMatrix};
use crate::characteristic::{self, gamma_of_covering, pi_of_covering, CharKind, CharMatrix};
use crate::incremental::{gamma_add, pi_add, IncrementalError};
use crate::model::{Covering, DecisionSystem, ModelError};

pub const DEFAULT_BOUND: usize = 20;
/// Largest bound accepted at all; the subset tables are `2^k` entries.
pub const MAX_BOUND: usize = 30;
/// Cached subset products are kept while their total size stays under this
/// many 64-bit words.
const CACHE_WORDS: usize = 1 << 22;

#[derive(Debug, Error)]
pub enum ReductError {
    #[error("a reduct candidate must contain at least one covering")]
    EmptySubset,
    #[error("{coverings} conditional coverings exceed the enumeration bound of {bound}")]
    BoundExceeded { coverings: usize, bound: usize },
    #[error("bound {0} is above the supported maximum of {MAX_BOUND}")]
    BoundTooLarge(usize),
    #[error("report was built for coverings {report:?}, system has {system:?}")]
    StaleReport {
        report: Vec<String>,
        system: Vec<String>,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Incremental(#[from] IncrementalError),
}

/// `(K • M_𝒟D, K ⊙ M_𝒟D)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionProducts {
    pub bullet: BoolMatrix,
    pub odot: BoolMatrix,
}

impl DecisionProducts {
    pub fn of(k: &BoolMatrix, decision: &BoolMatrix) -> Self {
        Self {
            bullet: k.bool_product(decision).expect("n×n by n×d"),
            odot: k.odot_product(decision).expect("n×n by n×d"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReductReport {
    pub kind: CharKind,
    /// Conditional covering names in system order.
    pub coverings: Vec<String>,
    /// Sorted name lists, ordered by size then lexicographically.
    pub reducts: Vec<Vec<String>>,
    pub reference: DecisionProducts,
    /// Subsets whose products were computed for this report.
    pub tested: usize,
    /// Subsets whose products were taken from a previous report.
    pub reused: usize,
    cache: Option<Vec<Option<DecisionProducts>>>,
}

impl ReductReport {
    pub fn contains(&self, names: &[&str]) -> bool {
        let mut want: Vec<&str> = names.to_vec();
        want.sort_unstable();
        self.reducts
            .iter()
            .any(|r| r.iter().map(String::as_str).eq(want.iter().copied()))
    }
}

fn decision_products(
    s: &DecisionSystem,
    kind: CharKind,
    p: &[usize],
) -> Result<DecisionProducts, ReductError> {
    if p.is_empty() {
        return Err(ReductError::EmptySubset);
    }
    let sub = s.conditional().subsystem(p)?;
    let k = match kind {
        CharKind::Type1 => characteristic::gamma(&sub),
        CharKind::Type2 => characteristic::pi(&sub),
    };
    Ok(DecisionProducts::of(k.matrix(), &s.decision_matrix()))
}

/// `(Γ(P) • M_𝒟D, Γ(P) ⊙ M_𝒟D)` for the conditional coverings at indices `p`.
pub fn decision_products_t1(
    s: &DecisionSystem,
    p: &[usize],
) -> Result<DecisionProducts, ReductError> {
    decision_products(s, CharKind::Type1, p)
}

/// `(Π(P) • M_𝒟D, Π(P) ⊙ M_𝒟D)` for the conditional coverings at indices `p`.
pub fn decision_products_t2(
    s: &DecisionSystem,
    p: &[usize],
) -> Result<DecisionProducts, ReductError> {
    decision_products(s, CharKind::Type2, p)
}

fn covering_matrix(kind: CharKind, c: &Covering, n: usize) -> BoolMatrix {
    match kind {
        CharKind::Type1 => gamma_of_covering(c, n).into_matrix(),
        CharKind::Type2 => pi_of_covering(c, n).into_matrix(),
    }
}

/// Characteristic matrix of the subset `mask` from per-covering matrices.
fn subset_matrix(kind: CharKind, singles: &[BoolMatrix], mask: u64) -> BoolMatrix {
    let mut bits = (0..singles.len()).filter(|&i| mask >> i & 1 == 1);
    let first = bits.next().expect("nonempty mask");
    bits.fold(singles[first].clone(), |acc, i| match kind {
        CharKind::Type1 => acc.elementwise_or(&singles[i]).expect("n×n"),
        CharKind::Type2 => acc.elementwise_and(&singles[i]).expect("n×n"),
    })
}

fn check_bound(k: usize, bound: usize) -> Result<(), ReductError> {
    if bound > MAX_BOUND {
        return Err(ReductError::BoundTooLarge(bound));
    }
    if k > bound {
        return Err(ReductError::BoundExceeded {
            coverings: k,
            bound,
        });
    }
    Ok(())
}

fn names(s: &DecisionSystem) -> Vec<String> {
    s.conditional()
        .coverings()
        .iter()
        .map(|c| c.name().to_string())
        .collect()
}

fn cache_fits(k: usize, reference: &DecisionProducts) -> bool {
    let per_entry = reference.bullet.rows() * reference.bullet.cols().div_ceil(64) * 2;
    (1usize << k).saturating_mul(per_entry.max(1)) <= CACHE_WORDS
}

/// Products for `masks`, in parallel when parallel kernels are on.
fn evaluate(
    kind: CharKind,
    singles: &[BoolMatrix],
    decision: &BoolMatrix,
    masks: &[u64],
) -> Vec<DecisionProducts> {
    let eval = |&mask: &u64| DecisionProducts::of(&subset_matrix(kind, singles, mask), decision);
    if parallel_kernels() {
        masks.par_iter().map(eval).collect()
    } else {
        masks.iter().map(eval).collect()
    }
}

/// Whether each of `masks` reproduces `reference`, without keeping products.
fn evaluate_matches(
    kind: CharKind,
    singles: &[BoolMatrix],
    decision: &BoolMatrix,
    reference: &DecisionProducts,
    masks: &[u64],
) -> Vec<bool> {
    let eval = |&mask: &u64| {
        DecisionProducts::of(&subset_matrix(kind, singles, mask), decision) == *reference
    };
    if parallel_kernels() {
        masks.par_iter().map(eval).collect()
    } else {
        masks.iter().map(eval).collect()
    }
}

/// Fill `matches` (indexed by mask) for `masks`, storing products in `cache`
/// when one is kept.
fn fill(
    kind: CharKind,
    singles: &[BoolMatrix],
    decision: &BoolMatrix,
    reference: &DecisionProducts,
    masks: &[u64],
    matches: &mut [bool],
    cache: Option<&mut Vec<Option<DecisionProducts>>>,
) {
    match cache {
        Some(cache) => {
            for (&mask, p) in masks.iter().zip(evaluate(kind, singles, decision, masks)) {
                matches[mask as usize] = p == *reference;
                cache[mask as usize] = Some(p);
            }
        }
        None => {
            for (&mask, m) in masks
                .iter()
                .zip(evaluate_matches(kind, singles, decision, reference, masks))
            {
                matches[mask as usize] = m;
            }
        }
    }
}

/// Reducts among the `matches` table: matching masks with no matching
/// nonempty proper subset.
fn minimal_masks(k: usize, matches: &[bool]) -> Vec<u64> {
    // any[mask] = some subset of mask (mask itself included) matches.
    let mut any = matches.to_vec();
    for bit in 0..k {
        for mask in 0..any.len() {
            if mask >> bit & 1 == 1 && any[mask ^ (1 << bit)] {
                any[mask] = true;
            }
        }
    }
    (1..matches.len())
        .filter(|&mask| matches[mask])
        .filter(|&mask| !(0..k).any(|bit| mask >> bit & 1 == 1 && any[mask ^ (1 << bit)]))
        .map(|m| m as u64)
        .collect()
}

fn sorted_reducts(names: &[String], masks: &[u64]) -> Vec<Vec<String>> {
    let mut out: Vec<Vec<String>> = masks
        .iter()
        .map(|&mask| {
            let mut r: Vec<String> = (0..names.len())
                .filter(|&i| mask >> i & 1 == 1)
                .map(|i| names[i].clone())
                .collect();
            r.sort();
            r
        })
        .collect();
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

/// Masks of the nonempty subsets of `0..k`, by increasing size.
fn masks_by_size(k: usize) -> Vec<u64> {
    let mut masks: Vec<u64> = (1..1u64 << k).collect();
    masks.sort_by_key(|m| (m.count_ones(), *m));
    masks
}

/// Enumerate every reduct of `s`. Refuses when `|𝒟_C| > bound`.
pub fn find_reducts(
    s: &DecisionSystem,
    kind: CharKind,
    bound: usize,
) -> Result<ReductReport, ReductError> {
    let k = s.conditional().coverings().len();
    check_bound(k, bound)?;
    let n = s.n();
    let decision = s.decision_matrix();
    let full = match kind {
        CharKind::Type1 => s.conditional().gamma(),
        CharKind::Type2 => s.conditional().pi(),
    };
    let reference = DecisionProducts::of(full.matrix(), &decision);
    let singles: Vec<BoolMatrix> = s
        .conditional()
        .coverings()
        .iter()
        .map(|c| covering_matrix(kind, c, n))
        .collect();

    let masks = masks_by_size(k);
    let mut matches = vec![false; 1 << k];
    let mut cache = cache_fits(k, &reference).then(|| vec![None; 1 << k]);
    fill(
        kind,
        &singles,
        &decision,
        &reference,
        &masks,
        &mut matches,
        cache.as_mut(),
    );
    let coverings = names(s);
    Ok(ReductReport {
        kind,
        reducts: sorted_reducts(&coverings, &minimal_masks(k, &matches)),
        coverings,
        reference,
        tested: masks.len(),
        reused: 0,
        cache,
    })
}

/// Reducts of `s` with `c_new` appended to `𝒟_C`, reusing `prior` (a report
/// on `s`). The new reference comes from the incrementally updated `Γ`/`Π`;
/// subsets without `c_new` reuse cached products where available.
pub fn recheck_after_add(
    s: &DecisionSystem,
    prior: &ReductReport,
    c_new: &Covering,
    bound: usize,
) -> Result<ReductReport, ReductError> {
    let system_names = names(s);
    if prior.coverings != system_names {
        return Err(ReductError::StaleReport {
            report: prior.coverings.clone(),
            system: system_names,
        });
    }
    let kind = prior.kind;
    let extended = s.with_conditional(c_new.clone())?;
    let k = extended.conditional().coverings().len();
    check_bound(k, bound)?;
    let n = s.n();
    let decision = s.decision_matrix();

    let full: CharMatrix = match kind {
        CharKind::Type1 => gamma_add(s.conditional().gamma(), c_new)?.matrix,
        CharKind::Type2 => pi_add(s.conditional().pi(), c_new)?.matrix,
    };
    let reference = DecisionProducts::of(full.matrix(), &decision);
    let singles: Vec<BoolMatrix> = extended
        .conditional()
        .coverings()
        .iter()
        .map(|c| covering_matrix(kind, c, n))
        .collect();

    let mut matches = vec![false; 1 << k];
    let mut cache = cache_fits(k, &reference).then(|| vec![None; 1 << k]);
    let mut reused = 0;
    if let Some(old) = &prior.cache {
        for (mask, p) in old.iter().enumerate() {
            if let Some(p) = p {
                matches[mask] = *p == reference;
                if let Some(cache) = cache.as_mut() {
                    cache[mask] = Some(p.clone());
                }
                reused += 1;
            }
        }
    }
    let missing: Vec<u64> = masks_by_size(k)
        .into_iter()
        .filter(|&m| {
            prior
                .cache
                .as_ref()
                .and_then(|c| c.get(m as usize))
                .is_none_or(Option::is_none)
        })
        .collect();
    fill(
        kind,
        &singles,
        &decision,
        &reference,
        &missing,
        &mut matches,
        cache.as_mut(),
    );
    let coverings = names(&extended);
    Ok(ReductReport {
        kind,
        reducts: sorted_reducts(&coverings, &minimal_masks(k, &matches)),
        coverings,
        reference,
        tested: missing.len(),
        reused,
        cache,
    })
}
