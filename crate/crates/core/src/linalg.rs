//! Subspaces of Z_m^len kept in reduced row-echelon form.

use crate::zmod::{inv, mul, sub};

/// A subspace of Z_m^len. Rows are in reduced echelon form sorted by pivot,
/// so two equal subspaces have identical `rows`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Subspace {
    modulus: u8,
    len: usize,
    rows: Vec<Vec<u8>>,
    pivots: Vec<usize>,
}

impl Subspace {
    pub fn zero(modulus: u8, len: usize) -> Self {
        Subspace { modulus, len, rows: Vec::new(), pivots: Vec::new() }
    }

    pub fn full(modulus: u8, len: usize) -> Self {
        let rows = (0..len)
            .map(|i| {
                let mut r = vec![0; len];
                r[i] = 1;
                r
            })
            .collect();
        Subspace { modulus, len, rows, pivots: (0..len).collect() }
    }

    pub fn span<I, V>(modulus: u8, len: usize, vectors: I) -> Self
    where
        I: IntoIterator<Item = V>,
        V: AsRef<[u8]>,
    {
        let mut s = Subspace::zero(modulus, len);
        for v in vectors {
            s.insert(v.as_ref());
        }
        s
    }

    pub fn modulus(&self) -> u8 {
        self.modulus
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn is_zero(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.rows.len() == self.len
    }

    pub fn rows(&self) -> &[Vec<u8>] {
        &self.rows
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// Residual of `v` after eliminating every pivot column.
    pub fn reduce(&self, v: &[u8]) -> Vec<u8> {
        let mut w = v.to_vec();
        self.reduce_in_place(&mut w);
        w
    }

    fn reduce_in_place(&self, w: &mut [u8]) {
        let m = self.modulus;
        for (row, &c) in self.rows.iter().zip(&self.pivots) {
            let f = w[c];
            if f != 0 {
                for (x, &r) in w.iter_mut().zip(row) {
                    if r != 0 {
                        *x = sub(*x, mul(f, r, m), m);
                    }
                }
            }
        }
    }

    pub fn contains(&self, v: &[u8]) -> bool {
        debug_assert_eq!(v.len(), self.len);
        let m = self.modulus;
        let mut w = v.to_vec();
        for (row, &c) in self.rows.iter().zip(&self.pivots) {
            let f = w[c];
            if f != 0 {
                for (x, &r) in w.iter_mut().zip(row) {
                    if r != 0 {
                        *x = sub(*x, mul(f, r, m), m);
                    }
                }
            }
        }
        w.iter().all(|&x| x == 0)
    }

    /// Add `v` to the span; returns whether the rank grew.
    pub fn insert(&mut self, v: &[u8]) -> bool {
        debug_assert_eq!(v.len(), self.len);
        let m = self.modulus;
        let mut w = v.to_vec();
        self.reduce_in_place(&mut w);
        let Some(c) = w.iter().position(|&x| x != 0) else {
            return false;
        };
        let iv = inv(w[c], m);
        for x in w.iter_mut() {
            *x = mul(*x, iv, m);
        }
        for row in self.rows.iter_mut() {
            let f = row[c];
            if f != 0 {
                for (x, &r) in row.iter_mut().zip(&w) {
                    if r != 0 {
                        *x = sub(*x, mul(f, r, m), m);
                    }
                }
            }
        }
        let at = self.pivots.partition_point(|&p| p < c);
        self.pivots.insert(at, c);
        self.rows.insert(at, w);
        true
    }

    pub fn is_subspace_of(&self, other: &Subspace) -> bool {
        self.rows.iter().all(|r| other.contains(r))
    }

    pub fn sum(&self, other: &Subspace) -> Subspace {
        let mut s = self.clone();
        for r in &other.rows {
            s.insert(r);
        }
        s
    }

    /// Vectors orthogonal to every row under the standard dot product.
    pub fn annihilator(&self) -> Subspace {
        let m = self.modulus;
        let mut out = Subspace::zero(m, self.len);
        let mut is_pivot = vec![false; self.len];
        for &c in &self.pivots {
            is_pivot[c] = true;
        }
        for free in (0..self.len).filter(|&c| !is_pivot[c]) {
            let mut v = vec![0u8; self.len];
            v[free] = 1;
            for (row, &c) in self.rows.iter().zip(&self.pivots) {
                v[c] = sub(0, row[free], m);
            }
            out.insert(&v);
        }
        out
    }

    pub fn intersection(&self, other: &Subspace) -> Subspace {
        self.annihilator().sum(&other.annihilator()).annihilator()
    }

    /// Every element of the subspace, in the order of coefficient tuples.
    pub fn elements(&self) -> Vec<Vec<u8>> {
        let m = self.modulus;
        let mut out = vec![vec![0u8; self.len]];
        for row in &self.rows {
            let mut next = Vec::with_capacity(out.len() * m as usize);
            for base in &out {
                for c in 0..m {
                    next.push(base.iter().zip(row).map(|(&b, &r)| (b + mul(c, r, m)) % m).collect());
                }
            }
            out = next;
        }
        out
    }
}
