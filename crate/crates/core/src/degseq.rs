//! Degree sequences and their moment statistics.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A prescribed degree `d_i` for every vertex `0..n`.
///
/// Immutable once built; the half-edge total is cached.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "Vec<u32>", from = "Vec<u32>")]
pub struct DegreeSequence {
    degrees: Vec<u32>,
    total: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Validation {
    pub even_sum: bool,
    pub graphical: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentSummary {
    pub n: usize,
    pub half_edges: u64,
    pub max_degree: u32,
    /// `power_sums[r - 1]` is the sum of `d_i^r`, for `r` in `1..=4`.
    pub power_sums: [u64; 4],
    /// Sum of `d_i (d_i - 1)`.
    pub falling2: u64,
    pub mu_hat: f64,
    pub mu2_hat: f64,
    pub nu_hat: f64,
}

impl MomentSummary {
    pub fn power_sum(&self, r: usize) -> u64 {
        self.power_sums[r - 1]
    }
}

impl DegreeSequence {
    pub fn new(degrees: Vec<u32>) -> Self {
        let total = degrees.iter().map(|&d| d as u64).sum();
        DegreeSequence { degrees, total }
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    pub fn n(&self) -> usize {
        self.degrees.len()
    }

    pub fn degree(&self, v: usize) -> u32 {
        self.degrees[v]
    }

    /// Total number of half-edges `N`.
    pub fn half_edges(&self) -> u64 {
        self.total
    }

    pub fn edge_count(&self) -> u64 {
        self.total / 2
    }

    pub fn max_degree(&self) -> u32 {
        self.degrees.iter().copied().max().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.degrees.is_empty()
    }

    pub fn validate(&self) -> Validation {
        let even_sum = self.total.is_multiple_of(2);
        Validation { even_sum, graphical: even_sum && erdos_gallai(&self.degrees) }
    }

    /// Fails unless a simple graph with these degrees exists.
    pub fn require_graphical(&self) -> Result<()> {
        if self.total % 2 == 1 {
            return Err(Error::OddDegreeSum(self.total));
        }
        if !erdos_gallai(&self.degrees) {
            return Err(Error::NotGraphical);
        }
        Ok(())
    }

    pub fn require_even(&self) -> Result<()> {
        if self.total % 2 == 1 {
            Err(Error::OddDegreeSum(self.total))
        } else {
            Ok(())
        }
    }

    pub fn moments(&self) -> Result<MomentSummary> {
        if self.degrees.is_empty() {
            return Err(Error::EmptySequence);
        }
        let mut power_sums = [0u64; 4];
        let mut falling2 = 0u64;
        for &d in &self.degrees {
            let d = d as u64;
            let mut p = 1u64;
            for s in power_sums.iter_mut() {
                p = p.checked_mul(d).ok_or(Error::Overflow("degree power"))?;
                *s = s.checked_add(p).ok_or(Error::Overflow("power sum"))?;
            }
            falling2 += d * d.saturating_sub(1);
        }
        let n = self.degrees.len();
        let nf = n as f64;
        let mu_hat = power_sums[0] as f64 / nf;
        let mu2_hat = power_sums[1] as f64 / nf;
        Ok(MomentSummary {
            n,
            half_edges: power_sums[0],
            max_degree: self.max_degree(),
            power_sums,
            falling2,
            mu_hat,
            mu2_hat,
            nu_hat: falling2 as f64 / nf,
        })
    }
}

/// Erdős–Gallai test. Does not look at parity of the sum.
fn erdos_gallai(degrees: &[u32]) -> bool {
    let n = degrees.len();
    let mut d: Vec<u64> = degrees.iter().map(|&x| x as u64).collect();
    d.sort_unstable_by(|a, b| b.cmp(a));
    // suffix[i] = sum of d[i..]
    let mut suffix = vec![0u64; n + 1];
    for i in (0..n).rev() {
        suffix[i] = suffix[i + 1] + d[i];
    }
    let mut lhs = 0u64;
    for k in 1..=n {
        lhs += d[k - 1];
        let kk = k as u64;
        // first index >= k whose degree is below k; d is non-increasing
        let tail = &d[k..];
        let cut = k + tail.partition_point(|&x| x >= kk);
        let rhs = kk * (kk - 1) + (cut - k) as u64 * kk + suffix[cut];
        if lhs > rhs {
            return false;
        }
    }
    true
}

impl FromStr for DegreeSequence {
    type Err = Error;

    /// Accepts integers separated by whitespace and/or commas. Lines starting
    /// with `#` are ignored.
    fn from_str(s: &str) -> Result<Self> {
        let mut degrees = Vec::new();
        for line in s.lines() {
            let line = line.trim();
            if line.starts_with('#') {
                continue;
            }
            for tok in line.split(|c: char| c == ',' || c.is_whitespace()) {
                if tok.is_empty() {
                    continue;
                }
                let d: u32 = tok.parse().map_err(|_| Error::Parse(format!("bad degree '{tok}'")))?;
                degrees.push(d);
            }
        }
        if degrees.is_empty() {
            return Err(Error::EmptySequence);
        }
        Ok(DegreeSequence::new(degrees))
    }
}

impl fmt::Display for DegreeSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.degrees.iter().map(|d| d.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

impl From<Vec<u32>> for DegreeSequence {
    fn from(v: Vec<u32>) -> Self {
        DegreeSequence::new(v)
    }
}

impl From<DegreeSequence> for Vec<u32> {
    fn from(s: DegreeSequence) -> Self {
        s.degrees
    }
}
