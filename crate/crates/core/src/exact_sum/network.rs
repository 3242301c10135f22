use crate::constants::ceil_log2;

/// A comparator network over positions 0..width; each layer holds disjoint
/// (low, high) pairs after which low carries the smaller key.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SortingNetwork {
    pub width: usize,
    pub layers: Vec<Vec<(usize, usize)>>,
}

impl SortingNetwork {
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn comparators(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    /// Applies the network to a slice of length `width`.
    pub fn apply<T: Ord>(&self, xs: &mut [T]) {
        assert_eq!(xs.len(), self.width);
        for layer in &self.layers {
            for &(a, b) in layer {
                if xs[a] > xs[b] {
                    xs.swap(a, b);
                }
            }
        }
    }
}

/// Batcher odd-even mergesort on the next power of two ≥ n; depth k(k+1)/2
/// for width 2^k.
pub fn build_sorting_network(n: usize) -> SortingNetwork {
    let width = 1usize << ceil_log2(n.max(1) as u128);
    let mut layers = Vec::new();
    let mut p = 1;
    while p < width {
        let mut k = p;
        while k >= 1 {
            let mut layer = Vec::new();
            let mut j = k % p;
            while j + k < width {
                for i in 0..k.min(width - j - k) {
                    if (i + j) / (2 * p) == (i + j + k) / (2 * p) {
                        layer.push((i + j, i + j + k));
                    }
                }
                j += 2 * k;
            }
            layers.push(layer);
            k /= 2;
        }
        p *= 2;
    }
    SortingNetwork { width, layers }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::run_rng;
    use proptest::prelude::*;
    use rand::Rng;

    fn sorts_all_binary(net: &SortingNetwork) -> bool {
        (0u32..1 << net.width).all(|mask| {
            let mut xs: Vec<u8> = (0..net.width).map(|i| (mask >> i & 1) as u8).collect();
            net.apply(&mut xs);
            xs.windows(2).all(|w| w[0] <= w[1])
        })
    }

    #[test]
    fn small_networks() {
        let n2 = build_sorting_network(2);
        assert_eq!(n2.layers, vec![vec![(0, 1)]]);
        let n4 = build_sorting_network(4);
        assert_eq!(n4.layers, vec![vec![(0, 1), (2, 3)], vec![(0, 2), (1, 3)], vec![(1, 2)]]);
        assert_eq!(build_sorting_network(1).depth(), 0);
        assert_eq!(build_sorting_network(5).width, 8);
    }

    #[test]
    fn depth_and_exhaustive_zero_one() {
        for k in 1..=4u32 {
            let net = build_sorting_network(1 << k);
            assert_eq!(net.depth() as u32, k * (k + 1) / 2);
            assert!(net.layers.iter().all(|l| {
                let mut seen = std::collections::HashSet::new();
                l.iter().all(|&(a, b)| a < b && seen.insert(a) && seen.insert(b))
            }));
            assert!(sorts_all_binary(&net), "width {}", net.width);
        }
    }

    #[test]
    fn random_zero_one_vectors_width_1024() {
        let net = build_sorting_network(1000);
        let mut rng = run_rng(4, &[]);
        for _ in 0..300 {
            let mut xs: Vec<bool> = (0..net.width).map(|_| rng.gen()).collect();
            net.apply(&mut xs);
            assert!(xs.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    proptest! {
        #[test]
        fn sorts_arbitrary_keys(mut xs in proptest::collection::vec(0u16..50, 1..70)) {
            let net = build_sorting_network(xs.len());
            xs.resize(net.width, u16::MAX);
            let mut expect = xs.clone();
            expect.sort();
            net.apply(&mut xs);
            prop_assert_eq!(xs, expect);
        }
    }
}
