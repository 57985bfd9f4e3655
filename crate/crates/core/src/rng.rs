//! Independent random substreams derived from one master seed.
//!
//! Every run owns a fixed set of ChaCha streams keyed by purpose, so extra
//! work done by one algorithm (fitting an LF model, say) never shifts the
//! draws another algorithm sees for its initial design, acquisition search
//! or observation noise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stream {
    InitialDesign = 0,
    Acquisition = 1,
    ObservationNoise = 2,
    HfHyperFit = 3,
    LfHyperFit = 4,
    WarmStart = 5,
    LfData = 6,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}
