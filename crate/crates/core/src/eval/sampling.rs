//! Stratified selection of pairs for human annotation.
//!
//! Each of the [`SAMPLE_SETS`] sets holds 50 ids: 10 from each of the four
//! WRDScore strata plus 10 drawn uniformly from the remaining pairs. All
//! draws are disjoint across sets, so every stratum needs
//! `SAMPLE_SETS * PER_STRATUM` members.

use std::fmt;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{EvalError, ScoredDataset};

pub const SAMPLE_SETS: usize = 3;
pub const PER_STRATUM: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stratum {
    /// WRDScore in `[0, 0.2)`.
    Low,
    /// WRDScore in `[0.2, 0.5)`.
    Mid,
    /// WRDScore in `[0.5, 0.8)`.
    High,
    /// WRDScore in `[0.8, 1.0]` with ROUGE-1 below 0.5.
    NearParaphrase,
    /// Any pair not already drawn.
    Random,
}

impl Stratum {
    fn contains(self, wrd: f64, rouge1: f64) -> bool {
        match self {
            Self::Low => wrd < 0.2,
            Self::Mid => (0.2..0.5).contains(&wrd),
            Self::High => (0.5..0.8).contains(&wrd),
            Self::NearParaphrase => wrd >= 0.8 && rouge1 < 0.5,
            Self::Random => true,
        }
    }
}

impl fmt::Display for Stratum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Low => "wrdscore in [0, 0.2)",
            Self::Mid => "wrdscore in [0.2, 0.5)",
            Self::High => "wrdscore in [0.5, 0.8)",
            Self::NearParaphrase => "wrdscore in [0.8, 1.0] with rouge1 < 0.5",
            Self::Random => "remaining pairs",
        })
    }
}

/// Draws three disjoint 50-id sample sets. Each set lists its random draws
/// first, then the low, mid, high and near-paraphrase strata. The result
/// depends only on the dataset order, its scores and `seed`.
pub fn stratified_sample(scored: &ScoredDataset, seed: u64) -> Result<[Vec<String>; SAMPLE_SETS], EvalError> {
    let wrd = scored.column("wrdscore")?;
    let rouge = scored.column("rouge1")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut used = vec![false; scored.pairs.len()];
    let needed = SAMPLE_SETS * PER_STRATUM;

    let mut draws = Vec::new();
    for stratum in [Stratum::NearParaphrase, Stratum::Low, Stratum::Mid, Stratum::High, Stratum::Random] {
        let members: Vec<usize> = (0..scored.pairs.len())
            .filter(|&i| !used[i] && stratum.contains(wrd[i], rouge[i]))
            .collect();
        if members.len() < needed {
            return Err(EvalError::InsufficientStratum {
                stratum,
                needed,
                available: members.len(),
            });
        }
        let picked: Vec<usize> = index::sample(&mut rng, members.len(), needed)
            .into_iter()
            .map(|k| members[k])
            .collect();
        for &i in &picked {
            used[i] = true;
        }
        draws.push((stratum, picked));
    }

    let order = [Stratum::Random, Stratum::Low, Stratum::Mid, Stratum::High, Stratum::NearParaphrase];
    let sets = std::array::from_fn(|set| {
        order
            .iter()
            .flat_map(|s| {
                let picked = &draws.iter().find(|(d, _)| d == s).expect("every stratum drawn").1;
                picked[set * PER_STRATUM..(set + 1) * PER_STRATUM].iter()
            })
            .map(|&i| scored.pairs[i].id.clone())
            .collect()
    });
    Ok(sets)
}
