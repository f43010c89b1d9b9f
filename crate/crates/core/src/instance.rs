//! Problem encoding for permutation-constrained instances.
//!
//! A candidate solution is an `n x n` 0/1 matrix stored row-major in the low
//! `n*n` bits of a `u64`: entry `(i, j)` lives at bit `i*n + j`, where row `i`
//! is the tour position and column `j` the city placed there. A bitstring is
//! permutation-feasible iff every row and every column holds exactly one 1.

use std::fmt;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{capacity, Error, Result};

/// Largest city count whose `n*n` encoding fits a `u64`.
pub const MAX_N: usize = 8;

/// Largest `n` for which `enumerate_feasible` materializes all `n!` strings.
pub const MAX_ENUMERATE_N: usize = 8;

/// Largest `n` for which the cost spread is obtained by scanning the cube.
pub const MAX_SCAN_N: usize = 4;

/// An `N`-bit computational basis label, `N = n*n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Bitstring(pub u64);

impl Bitstring {
    #[inline]
    pub fn bit(self, index: usize) -> bool {
        (self.0 >> index) & 1 == 1
    }

    #[inline]
    pub fn entry(self, n: usize, row: usize, col: usize) -> bool {
        self.bit(row * n + col)
    }

    /// Renders bits in index order, bit 0 first (so `1001` is the 2x2 identity).
    pub fn render(self, n_bits: usize) -> String {
        (0..n_bits)
            .map(|i| if self.bit(i) { '1' } else { '0' })
            .collect()
    }

    /// Inverse of [`Bitstring::render`].
    pub fn parse(s: &str) -> Result<Self> {
        if s.len() > 64 {
            return Err(capacity("bitstring length", 64, s.len()));
        }
        let mut bits = 0u64;
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => bits |= 1 << i,
                _ => {
                    return Err(Error::InvalidArgument(format!(
                        "bitstring character {c:?} at offset {i}"
                    )))
                }
            }
        }
        Ok(Bitstring(bits))
    }

    /// The bitstring with bit `b*n + symbols[b]` set for each block `b`.
    pub fn from_symbols(symbols: &[usize]) -> Self {
        let n = symbols.len();
        Bitstring(
            symbols
                .iter()
                .enumerate()
                .fold(0u64, |acc, (b, &j)| acc | 1 << (b * n + j)),
        )
    }
}

impl fmt::Display for Bitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#x}", self.0)
    }
}

/// A TSP-style instance: city count, integer distance matrix and penalty weight.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemInstance {
    pub name: String,
    pub n: usize,
    /// Row-major `n x n`.
    pub dist: Vec<u64>,
    pub penalty_weight: u64,
}

impl ProblemInstance {
    /// Builds an instance, defaulting the penalty weight to `n*max(dist) + 1`.
    pub fn new(name: impl Into<String>, rows: Vec<Vec<u64>>, penalty_weight: Option<u64>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Dimension("empty distance matrix".into()));
        }
        if n > MAX_N {
            return Err(capacity("city count", MAX_N, n));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Dimension(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            if row[i] != 0 {
                return Err(Error::InvalidArgument(format!(
                    "nonzero diagonal entry dist[{i}][{i}] = {}",
                    row[i]
                )));
            }
        }
        let dist: Vec<u64> = rows.into_iter().flatten().collect();
        let weight = match penalty_weight {
            Some(0) => return Err(Error::InvalidArgument("penalty weight must be positive".into())),
            Some(a) => a,
            None => default_penalty_weight(n, &dist),
        };
        Ok(Self {
            name: name.into(),
            n,
            dist,
            penalty_weight: weight,
        })
    }

    /// Seeded symmetric instance with off-diagonal entries in `1..=max_entry`.
    pub fn synthetic(n: usize, max_entry: u64, seed: u64) -> Result<Self> {
        if max_entry == 0 {
            return Err(Error::InvalidArgument("max_entry must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = vec![vec![0u64; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = rng.random_range(1..=max_entry);
                rows[i][j] = d;
                rows[j][i] = d;
            }
        }
        Self::new(format!("syn{n}-s{seed}"), rows, None)
    }

    pub fn with_penalty_weight(mut self, a: u64) -> Result<Self> {
        if a == 0 {
            return Err(Error::InvalidArgument("penalty weight must be positive".into()));
        }
        self.penalty_weight = a;
        Ok(self)
    }

    #[inline]
    pub fn n_qubits(&self) -> usize {
        self.n * self.n
    }

    #[inline]
    pub fn d(&self, u: usize, v: usize) -> u64 {
        self.dist[u * self.n + v]
    }

    pub fn max_dist(&self) -> u64 {
        self.dist.iter().copied().max().unwrap_or(0)
    }
}

fn default_penalty_weight(n: usize, dist: &[u64]) -> u64 {
    n as u64 * dist.iter().copied().max().unwrap_or(0) + 1
}

/// Parses the instance text format: first non-comment line holds `n`, the
/// next `n` non-comment lines hold `n` non-negative integers each. Lines
/// starting with `#` (after leading whitespace) and blank lines are skipped.
pub fn parse_instance(text: &str, name: &str) -> Result<ProblemInstance> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (first_line, header) = lines
        .next()
        .ok_or_else(|| Error::Parse { line: 1, msg: "missing city count".into() })?;
    let mut header_tokens = header.split_whitespace();
    let n: usize = parse_token(header_tokens.next().unwrap_or(""), first_line, "city count")?;
    if header_tokens.next().is_some() {
        return Err(Error::Parse {
            line: first_line,
            msg: "expected a single integer city count".into(),
        });
    }
    if n == 0 {
        return Err(Error::Parse { line: first_line, msg: "city count must be positive".into() });
    }
    if n > MAX_N {
        return Err(capacity("city count", MAX_N, n));
    }

    let mut rows = Vec::with_capacity(n);
    for (line, content) in lines {
        if rows.len() == n {
            return Err(Error::Dimension(format!(
                "line {line}: extra row beyond the {n} declared"
            )));
        }
        let row = content
            .split_whitespace()
            .map(|tok| parse_token::<u32>(tok, line, "distance").map(u64::from))
            .collect::<Result<Vec<u64>>>()?;
        if row.len() != n {
            return Err(Error::Dimension(format!(
                "line {line}: row has {} entries, expected {n}",
                row.len()
            )));
        }
        rows.push(row);
    }
    if rows.len() != n {
        return Err(Error::Dimension(format!(
            "found {} rows, expected {n}",
            rows.len()
        )));
    }
    ProblemInstance::new(name, rows, None)
}

fn parse_token<T: std::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<T> {
    tok.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("invalid {what} {tok:?}"),
    })
}

/// Reads an instance file; the instance is named after the file stem.
pub fn load_qoptlib_instance(path: &Path) -> Result<ProblemInstance> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "instance".into());
    parse_instance(&text, &name)
}

#[inline]
fn row_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

#[inline]
fn row_bits(x: u64, n: usize, row: usize) -> u64 {
    (x >> (row * n)) & row_mask(n)
}

fn column_mask(n: usize, col: usize) -> u64 {
    (0..n).fold(0u64, |acc, i| acc | 1 << (i * n + col))
}

/// True iff every row sum and every column sum of `X(x)` equals 1.
pub fn is_permutation_feasible(x: Bitstring, n: usize) -> bool {
    if x.0.count_ones() as usize != n {
        return false;
    }
    (0..n).all(|r| row_bits(x.0, n, r).count_ones() == 1)
        && (0..n).all(|c| (x.0 & column_mask(n, c)).count_ones() == 1)
}

/// Advances `p` to its lexicographic successor; false when `p` was the last.
pub(crate) fn next_permutation(p: &mut [usize]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let mut i = p.len() - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = p.len() - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut p: Vec<usize> = (0..n).collect();
    let mut out = vec![p.clone()];
    while next_permutation(&mut p) {
        out.push(p.clone());
    }
    out
}

/// The `n!` permutation matrices, in lexicographic order of the
/// position-to-city map.
pub fn enumerate_feasible(n: usize) -> Result<Vec<Bitstring>> {
    if n > MAX_ENUMERATE_N {
        return Err(capacity("feasible enumeration size", MAX_ENUMERATE_N, n));
    }
    Ok(permutations(n)
        .iter()
        .map(|p| Bitstring::from_symbols(p))
        .collect())
}

/// Diagonal cost `C(y) = A * penalty(y) + tour(y)` with lattice unit 1.
#[derive(Debug, Clone)]
pub struct DiagonalCost {
    n: usize,
    dist: Vec<u64>,
    penalty_weight: u64,
    col_masks: Vec<u64>,
    /// Lattice unit; costs are integers so this is always 1.
    pub omega: f64,
    /// Smallest attainable cost (exact for scanned sizes, 0 otherwise).
    pub min: u64,
    /// Upper bound on `max C - min C`; exact for `n <= MAX_SCAN_N`.
    pub spread: u64,
    /// Whether `min`/`spread` come from a full scan.
    pub exact_spread: bool,
}

/// Builds the diagonal cost Hamiltonian of an instance.
pub fn build_cost(instance: &ProblemInstance) -> DiagonalCost {
    build_cost_weighted(instance, instance.penalty_weight)
}

/// The bare tour form with no one-hot penalty (`A = 0`).
pub fn build_tour_cost(instance: &ProblemInstance) -> DiagonalCost {
    build_cost_weighted(instance, 0)
}

fn build_cost_weighted(instance: &ProblemInstance, penalty_weight: u64) -> DiagonalCost {
    let n = instance.n;
    let mut cost = DiagonalCost {
        n,
        dist: instance.dist.clone(),
        penalty_weight,
        col_masks: (0..n).map(|c| column_mask(n, c)).collect(),
        omega: 1.0,
        min: 0,
        spread: 0,
        exact_spread: false,
    };
    if n <= MAX_SCAN_N {
        let (lo, hi) = (0..1u64 << (n * n))
            .into_par_iter()
            .map(|y| {
                let c = cost.eval(Bitstring(y));
                (c, c)
            })
            .reduce(|| (u64::MAX, 0), |a, b| (a.0.min(b.0), a.1.max(b.1)));
        cost.min = lo;
        cost.spread = hi - lo;
        cost.exact_spread = true;
    } else {
        let nn = n as u64;
        let total: u64 = instance.dist.iter().sum();
        cost.spread = penalty_weight * 2 * nn * (nn - 1) * (nn - 1) + nn * total;
    }
    cost
}

impl DiagonalCost {
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn n_qubits(&self) -> usize {
        self.n * self.n
    }

    /// `sum_i (row_i - 1)^2 + sum_j (col_j - 1)^2`, before weighting.
    #[inline]
    pub fn penalty_violation(&self, y: Bitstring) -> u64 {
        let n = self.n;
        let sq = |s: u32| {
            let d = s as i64 - 1;
            (d * d) as u64
        };
        let rows: u64 = (0..n).map(|r| sq(row_bits(y.0, n, r).count_ones())).sum();
        let cols: u64 = self.col_masks.iter().map(|&m| sq((y.0 & m).count_ones())).sum();
        rows + cols
    }

    /// Cyclic bilinear tour form `sum_t sum_{u,v} dist[u][v] y[t,u] y[t+1,v]`.
    #[inline]
    pub fn tour_length(&self, y: Bitstring) -> u64 {
        let n = self.n;
        let mut total = 0u64;
        for t in 0..n {
            let here = row_bits(y.0, n, t);
            if here == 0 {
                continue;
            }
            let next = row_bits(y.0, n, (t + 1) % n);
            let mut u_bits = here;
            while u_bits != 0 {
                let u = u_bits.trailing_zeros() as usize;
                u_bits &= u_bits - 1;
                let mut v_bits = next;
                while v_bits != 0 {
                    let v = v_bits.trailing_zeros() as usize;
                    v_bits &= v_bits - 1;
                    total += self.dist[u * n + v];
                }
            }
        }
        total
    }

    #[inline]
    pub fn penalty(&self, y: Bitstring) -> u64 {
        self.penalty_weight * self.penalty_violation(y)
    }

    #[inline]
    pub fn eval(&self, y: Bitstring) -> u64 {
        self.penalty(y) + self.tour_length(y)
    }

    /// Cost at a block-one-hot symbol tuple.
    #[inline]
    pub fn eval_symbols(&self, symbols: &[usize]) -> u64 {
        self.eval(Bitstring::from_symbols(symbols))
    }

    /// Cost of every full-space basis state, indexed by bitstring.
    pub fn full_table(&self) -> Result<Vec<u32>> {
        let n_qubits = self.n_qubits();
        if n_qubits > crate::fullspace::MAX_QUBITS {
            return Err(capacity("cost table qubits", crate::fullspace::MAX_QUBITS, n_qubits));
        }
        let len = 1usize << n_qubits;
        let mut table = vec![0u32; len];
        let overflow = std::sync::atomic::AtomicBool::new(false);
        table.par_iter_mut().enumerate().for_each(|(y, slot)| {
            let c = self.eval(Bitstring(y as u64));
            match u32::try_from(c) {
                Ok(v) => *slot = v,
                Err(_) => overflow.store(true, std::sync::atomic::Ordering::Relaxed),
            }
        });
        if overflow.into_inner() {
            return Err(Error::InvalidArgument("cost value exceeds u32 range".into()));
        }
        Ok(table)
    }
}
