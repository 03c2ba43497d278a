use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent ChaCha streams derived from one trial seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub(crate) enum Stream {
    Data = 0,
    Dictionary = 1,
    CrossValidation = 2,
}

/// The generator used for every seeded draw in the crate.
///
/// `stream` selects an independent ChaCha stream so that data, dictionary
/// subsampling and CV fold assignment never share randomness.
pub fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    trial_rng(seed, stream as u64)
}
