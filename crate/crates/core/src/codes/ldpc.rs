//! Regular LDPC codes: random construction, systematic generator, syndrome.
//!
//! The Tanner graph is drawn by matching `n·dv` variable sockets to a random
//! permutation of `m·dc` check sockets (`m = n·dv/dc`). Parallel edges are
//! removed by socket swaps, then 4-cycles are reduced greedily with further
//! degree-preserving swaps as far as the ensemble allows.
//!
//! The generator comes from Gaussian elimination of H. When H is row-rank
//! deficient (always the case for even `dv`, since all rows then sum to zero)
//! the null space is larger than `n - m`; the extra free coordinates are fixed
//! to zero so the message length stays `n - m` and the regular H is kept as is.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::alist::SparseBinary;
use super::gf2::Gf2Matrix;
use super::{check_binary, Codeword, MessageWord};
use crate::error::{check_len, Error, Result};

#[derive(Clone, Debug)]
pub struct LdpcParams {
    pub n: usize,
    pub dv: usize,
    pub dc: usize,
    pub seed: u64,
    pub max_retries: usize,
    pub reduce_four_cycles: bool,
}

impl LdpcParams {
    pub fn new(n: usize, dv: usize, dc: usize, seed: u64) -> Self {
        Self {
            n,
            dv,
            dc,
            seed,
            max_retries: 100,
            reduce_four_cycles: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LdpcCode {
    n: usize,
    l: usize,
    dv: usize,
    dc: usize,
    seed: u64,
    h: SparseBinary,
    h_dense: Gf2Matrix,
    g: Gf2Matrix,
    info_positions: Vec<usize>,
    column_order: Vec<usize>,
    rank: usize,
    four_cycles: u64,
}

pub fn ldpc_generate(n: usize, dv: usize, dc: usize, seed: u64) -> Result<LdpcCode> {
    LdpcCode::generate(&LdpcParams::new(n, dv, dc, seed))
}

impl LdpcCode {
    pub fn generate(p: &LdpcParams) -> Result<Self> {
        if p.dv == 0 || p.dc == 0 || p.n == 0 {
            return Err(Error::invalid("n, dv and dc must be positive"));
        }
        if (p.n * p.dv) % p.dc != 0 {
            return Err(Error::invalid(format!(
                "n·dv = {} is not divisible by dc = {}",
                p.n * p.dv,
                p.dc
            )));
        }
        let m = p.n * p.dv / p.dc;
        if m >= p.n {
            return Err(Error::invalid(format!(
                "{m} checks on {} bits leaves no message bits",
                p.n
            )));
        }
        if p.dc > p.n || p.dv > m {
            return Err(Error::invalid(format!(
                "weights ({}, {}) do not fit a {m}×{} matrix",
                p.dv, p.dc, p.n
            )));
        }

        let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
        let mut graph = None;
        for _ in 0..p.max_retries.max(1) {
            if let Some(g) = SocketGraph::sample(p.n, m, p.dv, p.dc, &mut rng) {
                graph = Some(g);
                break;
            }
        }
        let Some(mut graph) = graph else {
            return Err(Error::ConstructionFailed(format!(
                "no simple ({}, {}) graph with n = {} after {} attempts",
                p.dv, p.dc, p.n, p.max_retries
            )));
        };
        if p.reduce_four_cycles {
            graph.reduce_four_cycles(&mut rng);
        }
        let four_cycles = graph.count_four_cycles();
        let h_dense = graph.rows;
        let h = SparseBinary::from_dense(&h_dense);
        for c in 0..p.n {
            if h.col(c).len() != p.dv {
                return Err(Error::ConstructionFailed(format!("column {c} lost regularity")));
            }
        }

        let l = p.n - m;
        let mut reduced = h_dense.clone();
        let pivots = reduced.reduce();
        let rank = pivots.len();
        let mut is_pivot = vec![false; p.n];
        for &c in &pivots {
            is_pivot[c] = true;
        }
        let free: Vec<usize> = (0..p.n).filter(|&c| !is_pivot[c]).collect();
        let info_positions = free[..l].to_vec();
        let mut g = Gf2Matrix::zeros(l, p.n);
        for (j, &f) in info_positions.iter().enumerate() {
            g.set(j, f, true);
            for (i, &pc) in pivots.iter().enumerate() {
                if reduced.get(i, f) {
                    g.set(j, pc, true);
                }
            }
        }
        let column_order = free.iter().chain(pivots.iter()).copied().collect();

        let code = Self {
            n: p.n,
            l,
            dv: p.dv,
            dc: p.dc,
            seed: p.seed,
            h,
            h_dense,
            g,
            info_positions,
            column_order,
            rank,
            four_cycles,
        };
        if !code.h_dense.mul_transpose(&code.g).is_zero() {
            return Err(Error::ConstructionFailed("H·Gᵀ ≠ 0".into()));
        }
        Ok(code)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn m(&self) -> usize {
        self.h.rows()
    }

    pub fn dv(&self) -> usize {
        self.dv
    }

    pub fn dc(&self) -> usize {
        self.dc
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn h(&self) -> &SparseBinary {
        &self.h
    }

    pub fn h_dense(&self) -> &Gf2Matrix {
        &self.h_dense
    }

    pub fn g(&self) -> &Gf2Matrix {
        &self.g
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn four_cycles(&self) -> u64 {
        self.four_cycles
    }

    /// Codeword positions carrying message bits, in message order.
    pub fn info_positions(&self) -> &[usize] {
        &self.info_positions
    }

    /// Column permutation placing the message positions first.
    pub fn column_order(&self) -> &[usize] {
        &self.column_order
    }

    pub fn encode(&self, msg: &[u8]) -> Result<Codeword> {
        check_len(self.l, msg.len())?;
        check_binary(msg)?;
        Ok(Codeword(self.g.vec_mul(msg)))
    }

    pub fn extract_message(&self, word: &[u8]) -> MessageWord {
        MessageWord(self.info_positions.iter().map(|&i| word[i]).collect())
    }

    pub fn syndrome(&self, word: &[u8]) -> Result<Vec<u8>> {
        check_len(self.n, word.len())?;
        Ok(self.h_dense.mul_vec(word))
    }

    pub fn is_codeword(&self, word: &[u8]) -> bool {
        self.syndrome(word).is_ok_and(|s| s.iter().all(|&b| b == 0))
    }

    pub fn h_alist(&self) -> String {
        self.h.to_alist()
    }

    pub fn g_alist(&self) -> String {
        SparseBinary::from_dense(&self.g).to_alist()
    }
}

/// `H · wordᵀ` over GF(2).
pub fn syndrome(word: &[u8], h: &SparseBinary) -> Result<Vec<u8>> {
    check_len(h.cols(), word.len())?;
    Ok((0..h.rows())
        .map(|r| h.row(r).iter().fold(0u8, |acc, &c| acc ^ (word[c] & 1)))
        .collect())
}

struct SocketGraph {
    rows: Gf2Matrix,
    /// Check endpoint of each edge; edge `e` leaves variable `e / dv`.
    checks: Vec<usize>,
    dv: usize,
}

impl SocketGraph {
    fn sample(n: usize, m: usize, dv: usize, dc: usize, rng: &mut ChaCha8Rng) -> Option<Self> {
        let mut checks: Vec<usize> = (0..m).flat_map(|c| std::iter::repeat_n(c, dc)).collect();
        checks.shuffle(rng);
        let edges = checks.len();
        let mut mult = vec![0u8; m * n];
        for (e, &c) in checks.iter().enumerate() {
            mult[c * n + e / dv] += 1;
        }
        // Move duplicate edges onto checks the variable does not touch yet.
        let swap_budget = 50 * edges;
        let mut tries = 0;
        for e in 0..edges {
            let v = e / dv;
            while mult[checks[e] * n + v] > 1 {
                tries += 1;
                if tries > swap_budget {
                    return None;
                }
                let e2 = rng.random_range(0..edges);
                let (c, c2, v2) = (checks[e], checks[e2], e2 / dv);
                if v2 == v || c2 == c || mult[c2 * n + v] != 0 || mult[c * n + v2] != 0 {
                    continue;
                }
                mult[c * n + v] -= 1;
                mult[c2 * n + v2] -= 1;
                mult[c2 * n + v] += 1;
                mult[c * n + v2] += 1;
                checks.swap(e, e2);
            }
        }
        let mut rows = Gf2Matrix::zeros(m, n);
        for (e, &c) in checks.iter().enumerate() {
            rows.set(c, e / dv, true);
        }
        Some(Self { rows, checks, dv })
    }

    fn overlap(&self, a: usize, b: usize) -> u64 {
        self.rows
            .row_words(a)
            .iter()
            .zip(self.rows.row_words(b))
            .map(|(x, y)| (x & y).count_ones() as u64)
            .sum()
    }

    fn pairs(k: u64) -> u64 {
        k * k.saturating_sub(1) / 2
    }

    /// 4-cycles that use check row `c`.
    fn row_cycles(&self, c: usize) -> u64 {
        (0..self.rows.rows())
            .filter(|&o| o != c)
            .map(|o| Self::pairs(self.overlap(c, o)))
            .sum()
    }

    fn count_four_cycles(&self) -> u64 {
        let m = self.rows.rows();
        (0..m)
            .flat_map(|a| (a + 1..m).map(move |b| (a, b)))
            .map(|(a, b)| Self::pairs(self.overlap(a, b)))
            .sum()
    }

    fn local_cycles(&self, c1: usize, c2: usize) -> u64 {
        self.row_cycles(c1) + self.row_cycles(c2) - Self::pairs(self.overlap(c1, c2))
    }

    fn in_four_cycle(&self, e: usize) -> bool {
        let v = e / self.dv;
        let c = self.checks[e];
        (0..self.dv)
            .map(|k| self.checks[v * self.dv + k])
            .filter(|&o| o != c)
            .any(|o| self.overlap(c, o) >= 2)
    }

    fn swap_edges(&mut self, e1: usize, e2: usize) {
        let (v1, v2) = (e1 / self.dv, e2 / self.dv);
        let (c1, c2) = (self.checks[e1], self.checks[e2]);
        self.rows.set(c1, v1, false);
        self.rows.set(c2, v2, false);
        self.rows.set(c2, v1, true);
        self.rows.set(c1, v2, true);
        self.checks.swap(e1, e2);
    }

    /// Greedy degree-preserving swaps that strictly lower the 4-cycle count.
    fn reduce_four_cycles(&mut self, rng: &mut ChaCha8Rng) {
        const PASSES: usize = 8;
        const PARTNERS: usize = 16;
        let edges = self.checks.len();
        for _ in 0..PASSES {
            let mut improved = false;
            for e1 in 0..edges {
                if !self.in_four_cycle(e1) {
                    continue;
                }
                for _ in 0..PARTNERS {
                    let e2 = rng.random_range(0..edges);
                    let (v1, v2) = (e1 / self.dv, e2 / self.dv);
                    let (c1, c2) = (self.checks[e1], self.checks[e2]);
                    if v1 == v2 || c1 == c2 || self.rows.get(c2, v1) || self.rows.get(c1, v2) {
                        continue;
                    }
                    let before = self.local_cycles(c1, c2);
                    self.swap_edges(e1, e2);
                    if self.local_cycles(c1, c2) < before {
                        improved = true;
                        break;
                    }
                    self.swap_edges(e1, e2);
                }
            }
            if !improved || self.count_four_cycles() == 0 {
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_regular(code: &LdpcCode) {
        let h = code.h();
        for c in 0..h.cols() {
            assert_eq!(h.col(c).len(), code.dv(), "column {c}");
        }
        for r in 0..h.rows() {
            assert_eq!(h.row(r).len(), code.dc(), "row {r}");
        }
        assert!(code.h_dense().mul_transpose(code.g()).is_zero());
    }

    #[test]
    fn small_regular_code() {
        let code = ldpc_generate(20, 3, 6, 1).unwrap();
        assert_eq!((code.m(), code.n(), code.l()), (10, 20, 10));
        assert_regular(&code);
    }

    #[test]
    fn dense_rate_half_code() {
        let code = ldpc_generate(100, 10, 20, 1).unwrap();
        assert_eq!(code.l(), 50);
        assert_regular(&code);
        // even column weight: the rows always sum to zero
        assert!(code.rank() < code.m());
    }

    #[test]
    fn sparse_code_has_no_short_cycles_at_moderate_length() {
        let code = ldpc_generate(200, 3, 6, 5).unwrap();
        assert_regular(&code);
        assert_eq!(code.four_cycles(), 0);
    }

    #[test]
    fn deterministic_for_seed() {
        let a = ldpc_generate(60, 3, 6, 9).unwrap();
        let b = ldpc_generate(60, 3, 6, 9).unwrap();
        let c = ldpc_generate(60, 3, 6, 10).unwrap();
        assert_eq!(a.h(), b.h());
        assert_eq!(a.g(), b.g());
        assert_ne!(a.h(), c.h());
    }

    #[test]
    fn systematic_encoding() {
        let code = ldpc_generate(40, 3, 6, 2).unwrap();
        assert_eq!(code.encode(&vec![0; 20]).unwrap().0, vec![0; 40]);
        let msg: Vec<u8> = (0..20).map(|i| (i % 3 == 1) as u8).collect();
        let cw = code.encode(&msg).unwrap();
        assert!(code.is_codeword(&cw));
        assert_eq!(code.extract_message(&cw).0, msg);
        let order = code.column_order();
        assert_eq!(&order[..20], code.info_positions());
        assert!(code.encode(&[0; 19]).is_err());
    }

    #[test]
    fn syndrome_of_single_flip_is_column() {
        let code = ldpc_generate(20, 3, 6, 4).unwrap();
        let mut w = vec![0u8; 20];
        assert_eq!(syndrome(&w, code.h()).unwrap(), vec![0; 10]);
        w[7] = 1;
        let s = syndrome(&w, code.h()).unwrap();
        let col: Vec<u8> = (0..10).map(|r| code.h().col(7).contains(&r) as u8).collect();
        assert_eq!(s, col);
        assert_eq!(code.syndrome(&w).unwrap(), s);
        assert!(syndrome(&[0; 3], code.h()).is_err());
    }

    #[test]
    fn alist_exports_parse_back() {
        let code = ldpc_generate(20, 3, 6, 1).unwrap();
        let h = SparseBinary::from_alist(&code.h_alist()).unwrap();
        assert_eq!(&h, code.h());
        let g = SparseBinary::from_alist(&code.g_alist()).unwrap();
        assert_eq!(g.to_dense(), *code.g());
    }

    #[test]
    fn invalid_parameters() {
        assert!(ldpc_generate(21, 3, 6, 1).is_err());
        assert!(ldpc_generate(10, 6, 6, 1).is_err());
        assert!(ldpc_generate(0, 3, 6, 1).is_err());
    }
}
