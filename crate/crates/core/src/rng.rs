//! Per-task random streams.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

/// Generator for task `stream` under master `seed`. Results depend only on
/// the pair, never on which worker runs the task or in what order.
pub fn task_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Multinomial draw of `n` trials over `probs` by sequential conditional
/// binomials. `probs` need not be normalized.
pub fn multinomial<R: Rng + ?Sized, const K: usize>(
    n: u64,
    probs: &[f64; K],
    rng: &mut R,
) -> [u64; K] {
    let mut out = [0; K];
    let mut left = n;
    for i in 0..K {
        let mass: f64 = probs[i..].iter().sum();
        if left == 0 || mass <= 0.0 {
            break;
        }
        let share = (probs[i] / mass).clamp(0.0, 1.0);
        let k = if share >= 1.0 {
            left
        } else {
            Binomial::new(left, share)
                .expect("share in [0, 1]")
                .sample(rng)
        };
        out[i] = k;
        left -= k;
    }
    out
}
