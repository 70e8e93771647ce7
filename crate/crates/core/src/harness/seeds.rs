use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent random streams derived from one experiment seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    Learner = 1,
    Adversary = 2,
    Sampler = 3,
}

/// The generator for `stream` under `seed`. Streams share the key and differ
/// only in the ChaCha stream id, so their draws never overlap.
pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    labeled_rng(seed, stream as u64)
}

pub fn labeled_rng(seed: u64, label: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(label);
    rng
}

#[cfg(test)]
mod tests {
    use rand::Rng;

    use super::*;

    #[test]
    fn streams_are_independent_of_each_other() {
        let a: Vec<u64> = (0..4).map(|_| stream_rng(5, Stream::Learner).random()).collect();
        let b: Vec<u64> = {
            let mut r = stream_rng(5, Stream::Learner);
            (0..4).map(|_| r.random()).collect()
        };
        assert_eq!(a[0], b[0]);
        let mut adv = stream_rng(5, Stream::Adversary);
        let mut relabeled = labeled_rng(5, 99);
        let mut adv_again = stream_rng(5, Stream::Adversary);
        let x: u64 = adv.random();
        let _: u64 = relabeled.random();
        assert_eq!(x, adv_again.random::<u64>());
        assert_ne!(x, b[0]);
    }
}
