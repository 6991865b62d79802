//! Verifier election: given the pseudonyms a receiver shares with a sender,
//! decide whether the receiver checks that sender's signatures itself.
//!
//! Every node evaluates the rule on its own view, so the rule must depend
//! only on ids: `β` is the receiver's id distance to the sender and `α` the
//! distances of the mutual neighbours. Distances are plain absolute
//! differences of the 64-bit ids, no wraparound.

use crate::registry::{Handle, Named, Registry};

pub trait ElectionStrategy: Named {
    /// `mutual_ids` are neighbours known to both the receiver and the sender;
    /// entries equal to `self_id` or `sender_id` are ignored.
    fn is_verifier(&self, self_id: u64, sender_id: u64, mutual_ids: &[u64], p: usize) -> bool;
}

pub type Election = Handle<dyn ElectionStrategy>;

pub static STRATEGIES: Registry<dyn ElectionStrategy> =
    Registry::new("election strategy", &[&PNearest, &PaperRule]);

/// Strategy used when none is configured.
pub fn default_election() -> Election {
    election("p-nearest")
}

/// Registry lookup that panics on an unknown name.
pub fn election(name: &str) -> Election {
    STRATEGIES.get(name).unwrap_or_else(|e| panic!("{e}"))
}

pub fn id_distance(a: u64, b: u64) -> u64 {
    a.abs_diff(b)
}

fn mutual_distances<'a>(self_id: u64, sender_id: u64, mutual_ids: &'a [u64]) -> impl Iterator<Item = (u64, u64)> + 'a {
    mutual_ids
        .iter()
        .copied()
        .filter(move |&m| m != self_id && m != sender_id)
        .map(move |m| (id_distance(m, sender_id), m))
}

/// Literal threshold rule: sort the mutual distances in descending order
/// (`α_1` the largest) and verify when `β ≤ α_p`. With fewer than `p`
/// mutual neighbours the receiver always verifies.
///
/// Under complete mutual knowledge among `k + 1` receivers this elects
/// `k - p + 1` of them, i.e. the receivers *farthest* in id space are
/// excused, not the nearest.
pub struct PaperRule;

impl Named for PaperRule {
    fn name(&self) -> &'static str {
        "paper-rule"
    }
}

impl ElectionStrategy for PaperRule {
    fn is_verifier(&self, self_id: u64, sender_id: u64, mutual_ids: &[u64], p: usize) -> bool {
        let mut alphas: Vec<u64> = mutual_distances(self_id, sender_id, mutual_ids).map(|(d, _)| d).collect();
        if alphas.len() < p || p == 0 {
            return true;
        }
        alphas.sort_unstable_by(|a, b| b.cmp(a));
        id_distance(self_id, sender_id) <= alphas[p - 1]
    }
}

/// The `p` receivers nearest to the sender in id space verify. Ties in
/// distance are broken by the smaller id, so exactly `min(p, k + 1)` of
/// `k + 1` fully-informed receivers are elected.
pub struct PNearest;

impl Named for PNearest {
    fn name(&self) -> &'static str {
        "p-nearest"
    }
}

impl ElectionStrategy for PNearest {
    fn is_verifier(&self, self_id: u64, sender_id: u64, mutual_ids: &[u64], p: usize) -> bool {
        let me = (id_distance(self_id, sender_id), self_id);
        let closer = mutual_distances(self_id, sender_id, mutual_ids)
            .filter(|&m| m < me)
            .count();
        closer < p
    }
}

pub fn is_verifier(self_id: u64, sender_id: u64, mutual_ids: &[u64], p: usize, strategy: Election) -> bool {
    strategy.is_verifier(self_id, sender_id, mutual_ids, p)
}
