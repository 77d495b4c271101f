//! h-coarse quasihyperbolic length by dynamic programming over vertex sequences.

use serde::Serialize;

/// Certified interval `[lower, upper]` for a value of `k_D`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KInterval {
    pub lower: f64,
    pub upper: f64,
}

impl KInterval {
    pub fn exact(v: f64) -> Self {
        Self { lower: v, upper: v }
    }
}

/// Symmetric table of `k` intervals over the vertex pairs of a curve.
#[derive(Clone, Debug)]
pub struct PairTable {
    n: usize,
    data: Vec<KInterval>,
}

impl PairTable {
    pub fn from_fn<F: FnMut(usize, usize) -> KInterval>(n: usize, mut f: F) -> Self {
        let mut data = vec![KInterval::exact(0.0); n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = f(i, j);
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        Self { n, data }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> KInterval {
        self.data[i * self.n + j]
    }
}

/// Result of the coarse-length dynamic program.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoarseLength {
    /// Sequences admitted and summed with lower ends.
    pub lower: f64,
    /// Sequences admitted and summed with upper ends.
    pub upper: f64,
    pub lower_sequence: Vec<usize>,
    pub upper_sequence: Vec<usize>,
    /// Steps of the upper sequence admitted only by an upper end (`lower < h <= upper`).
    pub mixed_steps: usize,
}

/// Best sequence within vertices `start..=end` using `value` for both
/// admissibility (`value >= h`) and summation. Empty family gives 0.
fn best_sequence<F: Fn(usize, usize) -> f64>(start: usize, end: usize, h: f64, value: F) -> (f64, Vec<usize>) {
    let len = end + 1 - start;
    let mut best: Vec<Option<f64>> = vec![None; len];
    // Predecessor of each end vertex, and whether the sequence starts there.
    let mut prev: Vec<Option<(usize, bool)>> = vec![None; len];
    for j in 1..len {
        for i in 0..j {
            let k = value(start + i, start + j);
            if !(k >= h) {
                continue;
            }
            let (base, fresh) = match best[i] {
                Some(b) => (b, false),
                None => (0.0, true),
            };
            let cand = base + k;
            if best[j].is_none_or(|b| cand > b) {
                best[j] = Some(cand);
                prev[j] = Some((i, fresh));
            }
        }
    }
    let mut top: Option<(f64, usize)> = None;
    for (j, b) in best.iter().enumerate() {
        if let Some(b) = *b {
            if top.is_none_or(|(t, _)| b > t) {
                top = Some((b, j));
            }
        }
    }
    let Some((value, mut j)) = top else { return (0.0, Vec::new()) };
    let mut seq = vec![start + j];
    while let Some((i, fresh)) = prev[j] {
        seq.push(start + i);
        if fresh {
            break;
        }
        j = i;
    }
    seq.reverse();
    (value, seq)
}

/// h-coarse quasihyperbolic length of the vertex chain `start..=end`.
pub fn coarse_qh_length_range(table: &PairTable, start: usize, end: usize, h: f64) -> CoarseLength {
    if end <= start {
        return CoarseLength { lower: 0.0, upper: 0.0, lower_sequence: vec![], upper_sequence: vec![], mixed_steps: 0 };
    }
    let (lower, lower_sequence) = best_sequence(start, end, h, |i, j| table.get(i, j).lower);
    let (upper, upper_sequence) = best_sequence(start, end, h, |i, j| table.get(i, j).upper);
    let mixed_steps = upper_sequence.windows(2).filter(|w| table.get(w[0], w[1]).lower < h).count();
    CoarseLength { lower, upper, lower_sequence, upper_sequence, mixed_steps }
}

/// h-coarse quasihyperbolic length of the whole chain.
pub fn coarse_qh_length(table: &PairTable, h: f64) -> CoarseLength {
    coarse_qh_length_range(table, 0, table.len().saturating_sub(1), h)
}

/// Upper coarse lengths of every subchain `[i, j]` at once, `O(n^3)`.
/// Entry `(i, j)` of the returned row-major matrix is the value for `i <= j`.
pub fn all_subarc_upper(table: &PairTable, h: f64) -> Vec<f64> {
    all_subarc(table, h, |k| k.upper)
}

/// Lower-end counterpart of [`all_subarc_upper`].
pub fn all_subarc_lower(table: &PairTable, h: f64) -> Vec<f64> {
    all_subarc(table, h, |k| k.lower)
}

fn all_subarc(table: &PairTable, h: f64, pick: fn(KInterval) -> f64) -> Vec<f64> {
    let n = table.len();
    let mut out = vec![0.0; n * n];
    for s in 0..n {
        let mut best = vec![f64::NEG_INFINITY; n];
        let mut running = 0.0f64;
        for j in s + 1..n {
            for i in s..j {
                let k = pick(table.get(i, j));
                if k >= h {
                    let cand = best[i].max(0.0) + k;
                    if cand > best[j] {
                        best[j] = cand;
                    }
                }
            }
            running = running.max(best[j]);
            out[s * n + j] = running;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn three() -> PairTable {
        PairTable::from_fn(3, |i, j| KInterval::exact(if j - i == 2 { 1.5 } else { 1.0 }))
    }

    /// Oracle: every increasing subsequence of length >= 2.
    fn brute(table: &PairTable, h: f64, pick: fn(KInterval) -> f64) -> f64 {
        let n = table.len();
        let mut best = 0.0f64;
        for mask in 0u32..(1 << n) {
            let idx: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            if idx.len() < 2 {
                continue;
            }
            let steps: Vec<f64> = idx.windows(2).map(|w| pick(table.get(w[0], w[1]))).collect();
            if steps.iter().all(|&k| k >= h) {
                best = best.max(steps.iter().sum());
            }
        }
        best
    }

    #[test]
    fn spec_examples() {
        let two = PairTable::from_fn(2, |_, _| KInterval::exact(1.0));
        let r = coarse_qh_length(&two, 2.0);
        assert_eq!((r.lower, r.upper), (0.0, 0.0));
        let r = coarse_qh_length(&three(), 1.0);
        assert_eq!(r.upper, 2.0);
        assert_eq!(r.upper_sequence, vec![0, 1, 2]);
        let r = coarse_qh_length(&three(), 1.2);
        assert_eq!(r.upper, 1.5);
        assert_eq!(r.upper_sequence, vec![0, 2]);
    }

    #[test]
    fn sequence_may_start_late() {
        // Only (1, 2) is admissible.
        let t = PairTable::from_fn(3, |i, j| KInterval::exact(if (i, j) == (1, 2) { 3.0 } else { 0.5 }));
        let r = coarse_qh_length(&t, 1.0);
        assert_eq!(r.upper, 3.0);
        assert_eq!(r.upper_sequence, vec![1, 2]);
    }

    #[test]
    fn mixed_steps_flagged() {
        let t = PairTable::from_fn(2, |_, _| KInterval { lower: 0.5, upper: 1.5 });
        let r = coarse_qh_length(&t, 1.0);
        assert_eq!((r.lower, r.upper, r.mixed_steps), (0.0, 1.5, 1));
    }

    fn table_strategy() -> impl Strategy<Value = PairTable> {
        (2usize..=9, prop::collection::vec((0.0..3.0f64, 0.0..1.0f64), 81)).prop_map(|(n, vals)| {
            PairTable::from_fn(n, |i, j| {
                let (lo, w) = vals[i * 9 + j];
                KInterval { lower: lo, upper: lo + w }
            })
        })
    }

    proptest! {
        #[test]
        fn matches_enumeration(t in table_strategy(), h in 0.0..3.0f64) {
            let r = coarse_qh_length(&t, h);
            prop_assert_eq!(r.upper, brute(&t, h, |k| k.upper));
            prop_assert_eq!(r.lower, brute(&t, h, |k| k.lower));
            // The reported sequence realizes the value.
            let s: f64 = r.upper_sequence.windows(2).map(|w| t.get(w[0], w[1]).upper).sum();
            prop_assert!((s - r.upper).abs() <= 1e-12);
        }

        #[test]
        fn non_increasing_in_h(t in table_strategy(), h1 in 0.0..3.0f64, dh in 0.0..3.0f64) {
            prop_assert!(coarse_qh_length(&t, h1).upper >= coarse_qh_length(&t, h1 + dh).upper);
        }

        #[test]
        fn subarc_matrix_agrees(t in table_strategy(), h in 0.0..2.0f64) {
            let m = all_subarc_upper(&t, h);
            let lo = all_subarc_lower(&t, h);
            let n = t.len();
            for i in 0..n {
                for j in i + 1..n {
                    let direct = coarse_qh_length_range(&t, i, j, h);
                    prop_assert!((m[i * n + j] - direct.upper).abs() <= 1e-12);
                    prop_assert!((lo[i * n + j] - direct.lower).abs() <= 1e-12);
                }
            }
        }

        #[test]
        fn whole_dominates_halves(t in table_strategy(), h in 0.0..2.0f64, m in 0usize..9) {
            let n = t.len();
            let m = m.min(n - 1);
            let whole = coarse_qh_length(&t, h).upper;
            prop_assert!(whole >= coarse_qh_length_range(&t, 0, m, h).upper);
            prop_assert!(whole >= coarse_qh_length_range(&t, m, n - 1, h).upper);
        }
    }
}
