//! Training-signal samplers: walks and skip-gram pairs, degree-powered
//! negatives, Gaussian noise for the implicit node distributions, and
//! fake relations.

mod negative;
mod noise;
mod walks;

use rand::Rng;

pub use negative::NegativeTable;
pub use noise::{reparameterize, reparameterize_backward, standard_normal, NoiseSpec};
pub use walks::{
    extract_pairs, node2vec_transitions, node2vec_walks, random_walks, write_walks, PairStream, WalkConfig,
};

use crate::error::{AgeError, Result};
use crate::graph::RelationId;

/// Uniform draw from every relation except `r`.
pub fn sample_fake_relation(r: RelationId, num_relations: usize, rng: &mut impl Rng) -> Result<RelationId> {
    if num_relations < 2 {
        return Err(AgeError::invalid("fake relations need at least two relations"));
    }
    let k = rng.random_range(0..num_relations - 1);
    Ok(if k >= r { k + 1 } else { k })
}
