//! Lexicographic k-subset enumeration.

/// `C(n, k)` in 128-bit arithmetic, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        match acc.checked_mul((n - i) as u128) {
            Some(v) => acc = v / (i as u128 + 1),
            None => return u128::MAX,
        }
    }
    acc
}

/// Iterator over all `k`-subsets of `0..n` in lexicographic order.
#[derive(Debug, Clone)]
pub struct Combinations {
    n: usize,
    current: Vec<usize>,
    done: bool,
}

impl Combinations {
    pub fn new(n: usize, k: usize) -> Self {
        Self { n, current: (0..k).collect(), done: k > n }
    }

    fn advance(&mut self) {
        let k = self.current.len();
        let mut i = k;
        while i > 0 {
            i -= 1;
            if self.current[i] < self.n - k + i {
                self.current[i] += 1;
                for j in i + 1..k {
                    self.current[j] = self.current[j - 1] + 1;
                }
                return;
            }
        }
        self.done = true;
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        if self.current.is_empty() {
            self.done = true;
        } else {
            self.advance();
        }
        Some(out)
    }
}

/// Calls `f` on every `k`-subset of `0..n` without allocating per subset.
pub fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    let mut it = Combinations::new(n, k);
    while !it.done {
        f(&it.current);
        if it.current.is_empty() {
            break;
        }
        it.advance();
    }
}
