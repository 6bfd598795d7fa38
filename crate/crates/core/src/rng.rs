//! Seed splitting.
//!
//! A run seed is expanded into independent ChaCha8 streams that share the
//! 64-bit seed and differ only in the ChaCha stream id:
//!
//! | stream | use                                              |
//! |--------|--------------------------------------------------|
//! | 0      | network initialisation                           |
//! | 1      | agent sampling (actions, minibatches, ε draws)   |
//! | 2      | training environment noise                       |
//! | 3      | evaluation environment noise                     |
//! | 4      | training observation noise (noisy wrapper)       |
//! | 5      | evaluation observation noise (noisy wrapper)     |

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Init = 0,
    Agent = 1,
    TrainEnv = 2,
    EvalEnv = 3,
    TrainObservation = 4,
    EvalObservation = 5,
}

pub fn stream(seed: u64, which: Stream) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}
