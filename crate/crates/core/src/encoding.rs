//! Sign encodings for the correlation terms.
//!
//! Bob's input `i` selects a length-`m` bit string `y^i` whose first bit is
//! zero; bit `x` decides the sign `(-1)^{y^i_x}` of Alice's `x`-th observable
//! in term `i`. Taken as columns, the strings form the generator matrix of
//! the augmented Hadamard code. Rows are stored in lexicographic order, so
//! row 1 is the all-zeros string. All public indices are 1-based.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest `m` for which a table is materialized (2^19 rows).
pub const MAX_TABLE_M: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodingTable {
    m: usize,
    // Row r (0-based) is the integer r read as an m-bit string, MSB first.
    rows: Vec<u32>,
}

/// `(-1)^{y^i_x}` for every setting `x`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignVector(Vec<i8>);

impl SignVector {
    pub fn entries(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.iter().map(|&s| f64::from(s))
    }
}

impl std::ops::Index<usize> for SignVector {
    type Output = i8;

    fn index(&self, x: usize) -> &i8 {
        &self.0[x]
    }
}

/// Builds the table for `m` settings.
pub fn generate_table(m: usize) -> Result<EncodingTable> {
    if m < 2 {
        return Err(Error::InvalidScenario(format!(
            "need at least 2 settings per party, got m={m}"
        )));
    }
    if m > MAX_TABLE_M {
        return Err(Error::Capacity(format!(
            "encoding table for m={m} has 2^{} rows (limit m <= {MAX_TABLE_M})",
            m - 1
        )));
    }
    // Strings with a leading 0 are exactly the integers below 2^{m-1};
    // counting upward is lexicographic order.
    let rows = (0..1u32 << (m - 1)).collect();
    Ok(EncodingTable { m, rows })
}

impl EncodingTable {
    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of terms, `2^{m-1}`.
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn row(&self, i: usize) -> Result<u32> {
        if i == 0 || i > self.rows.len() {
            return Err(Error::Index {
                index: i,
                len: self.rows.len(),
            });
        }
        Ok(self.rows[i - 1])
    }

    /// Bit `x` (1-based) of `y^i`.
    pub fn bit(&self, i: usize, x: usize) -> Result<u8> {
        let row = self.row(i)?;
        if x == 0 || x > self.m {
            return Err(Error::Index {
                index: x,
                len: self.m,
            });
        }
        Ok(((row >> (self.m - x)) & 1) as u8)
    }

    /// `y^i` as an ASCII string of '0'/'1'.
    pub fn row_string(&self, i: usize) -> Result<String> {
        let row = self.row(i)?;
        Ok((0..self.m)
            .map(|x| {
                if (row >> (self.m - 1 - x)) & 1 == 1 {
                    '1'
                } else {
                    '0'
                }
            })
            .collect())
    }

    pub fn sign_vector(&self, i: usize) -> Result<SignVector> {
        let row = self.row(i)?;
        Ok(SignVector(
            (0..self.m)
                .map(|x| {
                    if (row >> (self.m - 1 - x)) & 1 == 1 {
                        -1
                    } else {
                        1
                    }
                })
                .collect(),
        ))
    }

    pub fn hamming_weight(&self, i: usize) -> Result<u32> {
        Ok(self.row(i)?.count_ones())
    }

    /// All sign vectors in row order.
    pub fn sign_vectors(&self) -> Vec<SignVector> {
        (1..=self.len())
            .map(|i| self.sign_vector(i).expect("index in range"))
            .collect()
    }

    /// The `m x 2^{m-1}` generator matrix with `y^i` as column `i`.
    pub fn generator_matrix(&self) -> Vec<Vec<u8>> {
        (1..=self.m)
            .map(|x| {
                (1..=self.len())
                    .map(|i| self.bit(i, x).expect("index in range"))
                    .collect()
            })
            .collect()
    }

    pub fn to_json(&self) -> TableJson {
        TableJson {
            m: self.m,
            rows: (1..=self.len())
                .map(|i| self.row_string(i).expect("index in range"))
                .collect(),
        }
    }
}

/// Export form: `{"m": 3, "rows": ["000","001","010","011"]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableJson {
    pub m: usize,
    pub rows: Vec<String>,
}

pub fn sign_vector(table: &EncodingTable, i: usize) -> Result<SignVector> {
    table.sign_vector(i)
}

pub fn hamming_weight(table: &EncodingTable, i: usize) -> Result<u32> {
    table.hamming_weight(i)
}
