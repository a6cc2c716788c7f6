//! Training-set curation for contrastive groups.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::scl::LabeledGroup;

/// What to do with a group whose most common label exceeds half the group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CapMode {
    /// Drop the whole group.
    #[default]
    DropGroup,
    /// Remove randomly chosen responses of the dominant label.
    Downsample,
}

fn label_counts(group: &LabeledGroup) -> BTreeMap<&str, usize> {
    let mut counts = BTreeMap::new();
    for l in &group.labels {
        *counts.entry(l.as_str()).or_insert(0) += 1;
    }
    counts
}

fn keep(group: &LabeledGroup, mask: &[bool]) -> LabeledGroup {
    let (responses, labels) = group
        .responses
        .iter()
        .zip(&group.labels)
        .zip(mask)
        .filter(|(_, &k)| k)
        .map(|((r, l), _)| (r.clone(), l.clone()))
        .unzip();
    LabeledGroup { responses, labels }
}

/// Removes responses whose label occurs exactly once; they have no positive
/// pair to learn from.
pub fn filter_singletons(group: &LabeledGroup) -> LabeledGroup {
    let counts = label_counts(group);
    let mask: Vec<bool> = group.labels.iter().map(|l| counts[l.as_str()] > 1).collect();
    keep(group, &mask)
}

/// Caps every label at 50% of the group.
///
/// At most one label can exceed half. `DropGroup` returns `None` for such a
/// group; `Downsample` keeps a seeded random subset of that label as large
/// as all other labels combined.
pub fn cap_majority(group: &LabeledGroup, mode: CapMode, seed: u64) -> Option<LabeledGroup> {
    let n = group.len();
    let counts = label_counts(group);
    let Some((&label, &count)) = counts.iter().find(|&(_, &c)| 2 * c > n) else {
        return Some(group.clone());
    };
    match mode {
        CapMode::DropGroup => None,
        CapMode::Downsample => {
            let positions: Vec<usize> = (0..n).filter(|&i| group.labels[i] == label).collect();
            let others = n - count;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let chosen = rand::seq::index::sample(&mut rng, positions.len(), others);
            let mut mask: Vec<bool> = group.labels.iter().map(|l| l != label).collect();
            for c in chosen.iter() {
                mask[positions[c]] = true;
            }
            Some(keep(group, &mask))
        }
    }
}
