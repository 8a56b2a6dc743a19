//! Shared fixtures for the m = 6 masking example.
#![allow(dead_code)]

use lineture::factorgroup::{Factorization, MaskingParams};
use lineture::BitMatrix;

pub const G1: [&str; 12] = [
    "000000", "100000", "100000", "010000", "000000", "001000", "110000", "000100", "100000", "010110", "111000",
    "001001",
];

pub const STAGES: [[&str; 12]; 6] = [
    [
        "100000", "000000", "010000", "100000", "000000", "001000", "000100", "110000", "010110", "100000", "111000",
        "001001",
    ],
    [
        "000000", "001000", "000100", "110000", "111000", "001001", "100000", "000000", "010000", "100000", "010110",
        "100000",
    ],
    [
        "101111", "100111", "101100", "011000", "000001", "110000", "110100", "010100", "010000", "100000", "001000",
        "111110",
    ],
    [
        "001011", "110101", "011011", "100011", "101111", "100111", "111000", "000010", "011101", "111010", "111110",
        "111001",
    ],
    [
        "011011", "011111", "010001", "000010", "110100", "000101", "010011", "010000", "000110", "000011", "000100",
        "101001",
    ],
    [
        "100010", "100110", "001011", "011000", "100001", "010000", "011000", "011011", "010100", "010001", "101110",
        "000011",
    ],
];

pub fn rows(r: &[&str]) -> BitMatrix {
    BitMatrix::from_rows(r).unwrap()
}

pub fn example_params() -> MaskingParams {
    MaskingParams {
        rho1: "110110".chars().map(|c| c == '1').collect(),
        rho2: vec![3, 4, 0, 1, 5, 2],
        v: rows(&["101111", "101000", "111001", "010100", "000000", "011110"]),
        // 1 + x + x^2 + x^4, lowest degree in column 0
        gamma: 0b111010,
        phi: rows(&["101000", "001010", "110001", "000111", "010000", "111010"]),
        // The printed tau is garbled; these rows are the g6 -> g7 differences.
        tau: rows(&["111001", "011010", "010101", "001011", "010010", "101010"]),
    }
}

pub fn base() -> Factorization {
    Factorization::from_matrix(rows(&G1)).unwrap()
}
