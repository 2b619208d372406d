//! Shared fixtures and proptest strategies for unit tests.

use proptest::prelude::*;

use crate::model::{Covering, CoveringSystem, DecisionSystem, Universe};

pub(crate) fn example_system() -> CoveringSystem {
    CoveringSystem::new(
        Universe::indexed(5),
        vec![
            Covering::new("C1", [vec![0, 1, 2, 3], vec![4]]),
            Covering::new("C2", [vec![0, 1], vec![2, 3, 4]]),
            Covering::new("C3", [vec![0, 1, 4], vec![2, 3]]),
        ],
    )
    .unwrap()
}

pub(crate) fn c4() -> Covering {
    Covering::new("C4", [vec![0, 1], vec![2, 3], vec![4]])
}

/// The three-covering system with decision partition {x1,x2}, {x3,x4,x5}.
pub(crate) fn ex51() -> DecisionSystem {
    let s = example_system();
    DecisionSystem::new(
        s.universe().clone(),
        s.coverings().to_vec(),
        vec![Covering::new("D", [vec![0, 1], vec![2, 3, 4]])],
    )
    .unwrap()
}

/// A valid covering of `n` objects with up to `max_blocks` blocks: every
/// object gets a home block, extra memberships are arbitrary, and empty
/// blocks are repaired with one object.
pub(crate) fn arb_covering(
    name: String,
    n: usize,
    max_blocks: usize,
) -> impl Strategy<Value = Covering> {
    (1..=max_blocks).prop_flat_map(move |k| {
        let name = name.clone();
        (
            prop::collection::vec(0..k, n),
            prop::collection::vec(prop::collection::vec(prop::bool::weighted(0.2), k), n),
            prop::collection::vec(0..n, k),
        )
            .prop_map(move |(home, extra, repair)| {
                let mut blocks = vec![Vec::new(); k];
                for i in 0..n {
                    blocks[home[i]].push(i);
                    for (b, &e) in extra[i].iter().enumerate() {
                        if e {
                            blocks[b].push(i);
                        }
                    }
                }
                for (b, block) in blocks.iter_mut().enumerate() {
                    if block.is_empty() {
                        block.push(repair[b]);
                    }
                }
                Covering::new(name.clone(), blocks)
            })
    })
}

pub(crate) fn arb_coverings(
    n: usize,
    m: usize,
    max_blocks: usize,
    prefix: &'static str,
) -> impl Strategy<Value = Vec<Covering>> {
    (0..m)
        .map(|k| arb_covering(format!("{prefix}{}", k + 1), n, max_blocks))
        .collect::<Vec<_>>()
}

pub(crate) fn arb_system(
    max_n: usize,
    max_m: usize,
    max_blocks: usize,
) -> impl Strategy<Value = CoveringSystem> {
    (1..=max_n, 1..=max_m).prop_flat_map(move |(n, m)| {
        arb_coverings(n, m, max_blocks, "C")
            .prop_map(move |cs| CoveringSystem::new(Universe::indexed(n), cs).unwrap())
    })
}

/// A system plus one extra covering over the same universe.
pub(crate) fn arb_system_and_covering(
    max_n: usize,
    max_m: usize,
    max_blocks: usize,
) -> impl Strategy<Value = (CoveringSystem, Covering)> {
    (1..=max_n, 1..=max_m).prop_flat_map(move |(n, m)| {
        (
            arb_coverings(n, m, max_blocks, "C"),
            arb_covering("New".to_string(), n, max_blocks),
        )
            .prop_map(move |(cs, c)| (CoveringSystem::new(Universe::indexed(n), cs).unwrap(), c))
    })
}

/// A subset of `0..n` as sorted indices.
pub(crate) fn arb_subset(n: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(any::<bool>(), n).prop_map(|bits| {
        bits.iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| i)
            .collect()
    })
}
