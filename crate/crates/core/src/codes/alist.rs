//! Sparse binary matrices and the MacKay alist text format.

use std::fmt::Write as _;

use super::gf2::Gf2Matrix;
use crate::error::{Error, Result};

/// Binary matrix stored as row and column adjacency lists (sorted, 0-based).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseBinary {
    rows: usize,
    cols: usize,
    row_adj: Vec<Vec<usize>>,
    col_adj: Vec<Vec<usize>>,
}

impl SparseBinary {
    pub fn from_row_adjacency(cols: usize, mut row_adj: Vec<Vec<usize>>) -> Result<Self> {
        let mut col_adj = vec![Vec::new(); cols];
        for (r, row) in row_adj.iter_mut().enumerate() {
            row.sort_unstable();
            if row.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::invalid(format!("row {r} has a repeated column")));
            }
            for &c in row.iter() {
                if c >= cols {
                    return Err(Error::invalid(format!("row {r} references column {c} >= {cols}")));
                }
                col_adj[c].push(r);
            }
        }
        Ok(Self {
            rows: row_adj.len(),
            cols,
            row_adj,
            col_adj,
        })
    }

    pub fn from_dense(m: &Gf2Matrix) -> Self {
        let row_adj = (0..m.rows())
            .map(|r| (0..m.cols()).filter(|&c| m.get(r, c)).collect())
            .collect();
        Self::from_row_adjacency(m.cols(), row_adj).expect("dense matrix is well formed")
    }

    pub fn to_dense(&self) -> Gf2Matrix {
        let mut m = Gf2Matrix::zeros(self.rows, self.cols);
        for (r, row) in self.row_adj.iter().enumerate() {
            for &c in row {
                m.set(r, c, true);
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

    pub fn row(&self, r: usize) -> &[usize] {
        &self.row_adj[r]
    }

    pub fn col(&self, c: usize) -> &[usize] {
        &self.col_adj[c]
    }

    pub fn num_ones(&self) -> usize {
        self.row_adj.iter().map(Vec::len).sum()
    }

    pub fn to_alist(&self) -> String {
        let mut s = String::new();
        let max_col = self.col_adj.iter().map(Vec::len).max().unwrap_or(0);
        let max_row = self.row_adj.iter().map(Vec::len).max().unwrap_or(0);
        let join = |v: &mut dyn Iterator<Item = usize>| {
            v.map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
        };
        writeln!(s, "{} {}", self.cols, self.rows).unwrap();
        writeln!(s, "{max_col} {max_row}").unwrap();
        writeln!(s, "{}", join(&mut self.col_adj.iter().map(Vec::len))).unwrap();
        writeln!(s, "{}", join(&mut self.row_adj.iter().map(Vec::len))).unwrap();
        for col in &self.col_adj {
            writeln!(s, "{}", join(&mut col.iter().map(|r| r + 1))).unwrap();
        }
        for row in &self.row_adj {
            writeln!(s, "{}", join(&mut row.iter().map(|c| c + 1))).unwrap();
        }
        s
    }

    /// Parses alist text; zero padding entries are ignored.
    pub fn from_alist(text: &str) -> Result<Self> {
        let bad = |what: &str| Error::invalid(format!("malformed alist: {what}"));
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let mut numbers = |what: &str| -> Result<Vec<usize>> {
            let line = lines.next().ok_or_else(|| bad(what))?;
            line.split_whitespace()
                .map(|t| t.parse::<usize>().map_err(|_| bad(what)))
                .collect()
        };
        let dims = numbers("dimensions")?;
        let [cols, rows] = dims[..] else {
            return Err(bad("dimensions"));
        };
        numbers("max weights")?;
        let col_w = numbers("column weights")?;
        let row_w = numbers("row weights")?;
        if col_w.len() != cols || row_w.len() != rows {
            return Err(bad("weight list length"));
        }
        for c in 0..cols {
            numbers("column list")?;
            let _ = c;
        }
        let mut row_adj = Vec::with_capacity(rows);
        for (r, &w) in row_w.iter().enumerate() {
            let entries: Vec<usize> = numbers("row list")?
                .into_iter()
                .filter(|&x| x != 0)
                .map(|x| x - 1)
                .collect();
            if entries.len() != w {
                return Err(bad(&format!("row {r} weight")));
            }
            row_adj.push(entries);
        }
        let m = Self::from_row_adjacency(cols, row_adj)?;
        if m.col_adj.iter().map(Vec::len).ne(col_w.iter().copied()) {
            return Err(bad("column weights disagree with row lists"));
        }
        Ok(m)
    }
}
