//! Faà di Bruno's formula in the scalar case.
//!
//! `d^r f(u(t))/dt^r = Σ_{s ∈ P_r} r!/(s_1!⋯s_r!) f^{(|s|)}(u) Π_j (u^{(j)}/j!)^{s_j}`
//! with `P_r = { s ∈ ℕ^r : Σ j s_j = r }`.

use alloc::vec;
use alloc::vec::Vec;

/// One element `s = (s_1, ..., s_r)` of `P_r`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PartitionMultiIndex {
    counts: Vec<usize>,
}

impl PartitionMultiIndex {
    pub fn new(counts: Vec<usize>) -> Self {
        Self { counts }
    }

    /// `r`, so that `Σ j s_j = r` for members of `P_r`.
    pub fn r(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// `|s| = Σ s_j`.
    pub fn size(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn weighted_sum(&self) -> usize {
        self.counts
            .iter()
            .enumerate()
            .map(|(j, &s)| (j + 1) * s)
            .sum()
    }

    pub fn is_member(&self) -> bool {
        self.weighted_sum() == self.r()
    }

    /// `r! / (s_1! ⋯ s_r!)`.
    pub fn multinomial(&self) -> f64 {
        let fact = |n: usize| (1..=n).map(|k| k as f64).product::<f64>();
        fact(self.r()) / self.counts.iter().map(|&s| fact(s)).product::<f64>()
    }
}

/// All of `P_r`, ordered lexicographically by `(s_1, ..., s_r)` descending.
pub fn enumerate_partitions(r: usize) -> Vec<PartitionMultiIndex> {
    assert!((1..=10).contains(&r), "supported range is 1 <= r <= 10");
    let mut out = Vec::new();
    let mut counts = vec![0usize; r];
    fill(r, 1, r, &mut counts, &mut out);
    out
}

// choose s_j for j < part descending, with `remaining` still to distribute
fn fill(r: usize, part: usize, remaining: usize, counts: &mut [usize], out: &mut Vec<PartitionMultiIndex>) {
    if remaining == 0 {
        out.push(PartitionMultiIndex::new(counts.to_vec()));
        return;
    }
    if part > r {
        return;
    }
    for s in (0..=remaining / part).rev() {
        counts[part - 1] = s;
        fill(r, part + 1, remaining - s * part, counts, out);
    }
    counts[part - 1] = 0;
}

/// `d^r f(u(t)) / dt^r` from `f_derivs[k] = f^{(k)}(u(t))`, `k = 0..=r`, and
/// `u_derivs[j-1] = u^{(j)}(t)`, `j = 1..=r`.
pub fn faa_di_bruno_scalar(f_derivs: &[f64], u_derivs: &[f64], r: usize) -> f64 {
    assert!(f_derivs.len() > r && u_derivs.len() >= r, "derivative arrays too short");
    let inv_fact = |n: usize| 1.0 / (1..=n).map(|k| k as f64).product::<f64>();
    enumerate_partitions(r)
        .iter()
        .map(|s| {
            let prod: f64 = s
                .counts()
                .iter()
                .enumerate()
                .map(|(j, &sj)| libm::pow(u_derivs[j] * inv_fact(j + 1), sj as f64))
                .product();
            s.multinomial() * f_derivs[s.size()] * prod
        })
        .sum()
}
