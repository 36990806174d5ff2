//! Sample fan-out: data-parallel over Monte Carlo samples when the
//! `parallel` feature is enabled, with a sequential path always available.

/// Map `f` over sample indices 0..count, preserving index order in the
/// output. Uses rayon when available.
#[cfg(feature = "parallel")]
pub fn map_samples<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..count).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_samples<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    map_samples_seq(count, f)
}

/// Sequential fan-out, kept unconditionally for benchmarking against the
/// parallel path.
pub fn map_samples_seq<T, F>(count: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..count).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree_in_order() {
        let par = map_samples(100, |i| i * i);
        let seq = map_samples_seq(100, |i| i * i);
        assert_eq!(par, seq);
    }

    #[test]
    fn empty_fanout() {
        assert!(map_samples(0, |i| i).is_empty());
    }
}
