//! Dense matrices over GF(2), bit-packed row-major.

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gf2Matrix {
    rows: usize,
    cols: usize,
    words: usize,
    data: Vec<u64>,
}

impl Gf2Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let words = cols.div_ceil(64);
        Self {
            rows,
            cols,
            words,
            data: vec![0; rows * words],
        }
    }

    pub fn from_rows(rows: &[Vec<u8>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut m = Self::zeros(rows.len(), cols);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), cols, "ragged rows");
            for (j, &b) in row.iter().enumerate() {
                if b & 1 == 1 {
                    m.set(i, j, true);
                }
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        (self.data[r * self.words + c / 64] >> (c % 64)) & 1 == 1
    }

    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        let w = &mut self.data[r * self.words + c / 64];
        if value {
            *w |= 1 << (c % 64);
        } else {
            *w &= !(1 << (c % 64));
        }
    }

    pub fn row_words(&self, r: usize) -> &[u64] {
        &self.data[r * self.words..(r + 1) * self.words]
    }

    pub fn row_bits(&self, r: usize) -> Vec<u8> {
        (0..self.cols).map(|c| self.get(r, c) as u8).collect()
    }

    /// `row[dst] ^= row[src]`
    pub fn xor_row_into(&mut self, src: usize, dst: usize) {
        debug_assert_ne!(src, dst);
        let w = self.words;
        let (s, d) = (src * w, dst * w);
        for k in 0..w {
            let v = self.data[s + k];
            self.data[d + k] ^= v;
        }
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let w = self.words;
        for k in 0..w {
            self.data.swap(a * w + k, b * w + k);
        }
    }

    /// In-place reduced row echelon form; returns the pivot column of each
    /// leading row. Rows past `pivots.len()` are zero afterwards.
    pub fn reduce(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..self.cols {
            if row == self.rows {
                break;
            }
            let Some(p) = (row..self.rows).find(|&r| self.get(r, col)) else {
                continue;
            };
            self.swap_rows(row, p);
            for r in 0..self.rows {
                if r != row && self.get(r, col) {
                    self.xor_row_into(row, r);
                }
            }
            pivots.push(col);
            row += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        self.clone().reduce().len()
    }

    /// `self · v` over GF(2).
    pub fn mul_vec(&self, v: &[u8]) -> Vec<u8> {
        assert_eq!(v.len(), self.cols);
        let packed = pack(v);
        (0..self.rows)
            .map(|r| {
                let parity: u32 = self
                    .row_words(r)
                    .iter()
                    .zip(&packed)
                    .map(|(a, b)| (a & b).count_ones())
                    .sum();
                (parity & 1) as u8
            })
            .collect()
    }

    /// `v · self` over GF(2), i.e. the XOR of the rows selected by `v`.
    pub fn vec_mul(&self, v: &[u8]) -> Vec<u8> {
        assert_eq!(v.len(), self.rows);
        let mut acc = vec![0u64; self.words];
        for (r, _) in v.iter().enumerate().filter(|(_, &b)| b & 1 == 1) {
            for (a, w) in acc.iter_mut().zip(self.row_words(r)) {
                *a ^= w;
            }
        }
        unpack(&acc, self.cols)
    }

    /// `self · otherᵀ` over GF(2).
    pub fn mul_transpose(&self, other: &Gf2Matrix) -> Gf2Matrix {
        assert_eq!(self.cols, other.cols);
        let mut out = Gf2Matrix::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            for j in 0..other.rows {
                let parity: u32 = self
                    .row_words(i)
                    .iter()
                    .zip(other.row_words(j))
                    .map(|(a, b)| (a & b).count_ones())
                    .sum();
                out.set(i, j, parity & 1 == 1);
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&w| w == 0)
    }
}

fn pack(bits: &[u8]) -> Vec<u64> {
    let mut out = vec![0u64; bits.len().div_ceil(64)];
    for (i, &b) in bits.iter().enumerate() {
        if b & 1 == 1 {
            out[i / 64] |= 1 << (i % 64);
        }
    }
    out
}

fn unpack(words: &[u64], len: usize) -> Vec<u8> {
    (0..len).map(|i| ((words[i / 64] >> (i % 64)) & 1) as u8).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_and_reduce() {
        let m = Gf2Matrix::from_rows(&[vec![1, 1, 0], vec![0, 1, 1], vec![1, 0, 1]]);
        assert_eq!(m.rank(), 2);
        let mut r = m.clone();
        assert_eq!(r.reduce(), vec![0, 1]);
        assert_eq!(r.row_bits(0), vec![1, 0, 1]);
        assert_eq!(r.row_bits(1), vec![0, 1, 1]);
        assert_eq!(r.row_bits(2), vec![0, 0, 0]);
    }

    #[test]
    fn products_over_gf2() {
        let m = Gf2Matrix::from_rows(&[vec![1, 1, 0, 1], vec![0, 1, 1, 1]]);
        assert_eq!(m.mul_vec(&[1, 1, 1, 0]), vec![0, 0]);
        assert_eq!(m.vec_mul(&[1, 1]), vec![1, 0, 1, 0]);
        let wide = Gf2Matrix::zeros(3, 130);
        assert!(wide.mul_transpose(&wide).is_zero());
    }
}
