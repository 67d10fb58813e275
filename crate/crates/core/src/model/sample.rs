use super::DiscreteBn;
use crate::data::Dataset;
use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Ancestral sampling of `n` rows; columns follow node order.
pub fn forward_sample(bn: &DiscreteBn, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::Invalid("sample size must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut columns = vec![Vec::with_capacity(n); bn.n()];
    let mut row = vec![0u8; bn.n()];
    for _ in 0..n {
        for &i in bn.topological_order() {
            let cpt = bn.cpt(i);
            let probs = cpt.row(cpt.config_of(&row));
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut state = probs.len() - 1;
            for (s, &p) in probs.iter().enumerate() {
                acc += p;
                if u < acc {
                    state = s;
                    break;
                }
            }
            // never land on a zero-probability trailing state through rounding
            while probs[state] == 0.0 && state > 0 {
                state -= 1;
            }
            row[i] = state as u8;
        }
        for (c, &v) in columns.iter_mut().zip(&row) {
            c.push(v);
        }
    }
    Dataset::new(bn.variables().to_vec(), columns)
}
