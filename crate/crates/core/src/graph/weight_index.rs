//! Prefix-sum tree over per-vertex attachment weights `Z_n(i) + F_i`.
//!
//! The tree is split in two Fenwick arrays sharing one shape: in-degrees are
//! kept as exact integers and fitness as floats. Fitness never changes after a
//! vertex is appended, so each float node is summed exactly once and the
//! float part accumulates no drift under degree updates.

#[derive(Debug, Clone, Default)]
pub struct WeightIndex {
    // 1-based Fenwick arrays; slot 0 is unused.
    degree: Vec<u64>,
    fitness: Vec<f64>,
}

#[inline]
fn lowbit(i: usize) -> usize {
    i & i.wrapping_neg()
}

impl WeightIndex {
    pub fn with_capacity(n: usize) -> Self {
        let mut degree = Vec::with_capacity(n + 1);
        let mut fitness = Vec::with_capacity(n + 1);
        degree.push(0);
        fitness.push(0.0);
        Self { degree, fitness }
    }

    pub fn len(&self) -> usize {
        self.degree.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Append a vertex with the given in-degree and fitness.
    pub fn push(&mut self, degree: u64, fitness: f64) {
        if self.degree.is_empty() {
            self.degree.push(0);
            self.fitness.push(0.0);
        }
        let i = self.degree.len();
        let mut d = degree;
        let mut f = fitness;
        let stop = i - lowbit(i);
        let mut j = i - 1;
        while j > stop {
            d += self.degree[j];
            f += self.fitness[j];
            j -= lowbit(j);
        }
        self.degree.push(d);
        self.fitness.push(f);
    }

    /// Add `delta` to the in-degree of the vertex at 0-based `index`.
    pub fn add_degree(&mut self, index: usize, delta: u64) {
        let mut i = index + 1;
        let n = self.len();
        while i <= n {
            self.degree[i] += delta;
            i += lowbit(i);
        }
    }

    /// Sum of weights of the first `count` vertices as `(degree part, fitness part)`.
    pub fn prefix_parts(&self, count: usize) -> (u64, f64) {
        let mut i = count.min(self.len());
        let mut d = 0u64;
        let mut f = 0.0;
        while i > 0 {
            d += self.degree[i];
            f += self.fitness[i];
            i -= lowbit(i);
        }
        (d, f)
    }

    pub fn prefix(&self, count: usize) -> f64 {
        let (d, f) = self.prefix_parts(count);
        d as f64 + f
    }

    pub fn total(&self) -> f64 {
        self.prefix(self.len())
    }

    /// Smallest 0-based index whose inclusive prefix weight exceeds `target`.
    ///
    /// `target` is expected in `[0, total)`; values at or past the total
    /// (possible through rounding) map to the last vertex with positive weight
    /// reachable by the descent.
    pub fn find(&self, mut target: f64) -> usize {
        let n = self.len();
        debug_assert!(n > 0);
        let mut pos = 0usize;
        let mut step = if n == 0 { 0 } else { 1usize << (usize::BITS - 1 - n.leading_zeros()) };
        while step > 0 {
            let next = pos + step;
            if next <= n {
                let w = self.degree[next] as f64 + self.fitness[next];
                if w <= target {
                    target -= w;
                    pos = next;
                }
            }
            step >>= 1;
        }
        pos.min(n - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn build(weights: &[(u64, f64)]) -> WeightIndex {
        let mut idx = WeightIndex::with_capacity(weights.len());
        for &(d, f) in weights {
            idx.push(d, f);
        }
        idx
    }

    #[test]
    fn prefixes_match_direct_sums() {
        let w: Vec<(u64, f64)> = (0..37).map(|i| (i % 5, 0.25 * i as f64 + 0.1)).collect();
        let idx = build(&w);
        for k in 0..=w.len() {
            let direct: f64 = w[..k].iter().map(|&(d, f)| d as f64 + f).sum();
            assert!((idx.prefix(k) - direct).abs() < 1e-9);
        }
    }

    #[test]
    fn find_respects_boundaries() {
        let idx = build(&[(1, 1.0), (0, 1.0), (2, 0.0)]);
        // Weights 2, 1, 2 → cumulative 2, 3, 5.
        assert_eq!(idx.find(0.0), 0);
        assert_eq!(idx.find(1.999), 0);
        assert_eq!(idx.find(2.0), 1);
        assert_eq!(idx.find(2.999), 1);
        assert_eq!(idx.find(3.0), 2);
        assert_eq!(idx.find(4.999), 2);
        assert_eq!(idx.find(7.0), 2);
    }

    #[test]
    fn zero_weight_vertices_are_skipped() {
        let idx = build(&[(0, 0.0), (1, 0.0), (0, 0.0), (0, 1.0)]);
        assert_eq!(idx.find(0.0), 1);
        assert_eq!(idx.find(0.5), 1);
        assert_eq!(idx.find(1.0), 3);
    }

    #[test]
    fn degree_updates_propagate() {
        let mut idx = build(&[(0, 1.0); 10]);
        idx.add_degree(3, 5);
        idx.add_degree(9, 1);
        assert_eq!(idx.prefix_parts(3), (0, 3.0));
        assert_eq!(idx.prefix_parts(4), (5, 4.0));
        assert_eq!(idx.prefix_parts(10), (6, 10.0));
        assert_eq!(idx.find(3.5), 3);
        assert_eq!(idx.find(8.99), 3);
        assert_eq!(idx.find(9.0), 4);
    }

    proptest::proptest! {
        #[test]
        fn find_agrees_with_linear_scan(
            weights in proptest::collection::vec((0u64..4, 0.0f64..3.0), 1..70),
            frac in 0.0f64..1.0,
        ) {
            let idx = build(&weights);
            let total = idx.total();
            proptest::prop_assume!(total > 0.0);
            let target = frac * total;
            let mut acc = 0.0;
            let mut expected = weights.len() - 1;
            for (i, &(d, f)) in weights.iter().enumerate() {
                acc += d as f64 + f;
                if acc > target {
                    expected = i;
                    break;
                }
            }
            let got = idx.find(target);
            // Rounding can only move the answer across a boundary the target sits on.
            if got != expected {
                let lo = idx.prefix(got.min(expected) + 1);
                proptest::prop_assert!((lo - target).abs() < 1e-9);
            }
        }
    }
}
