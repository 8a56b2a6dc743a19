//! Worked m = 6 masking example: every stage of the chain, cell for cell,
//! plus structural inversion against the lookup table.

mod common;

use common::{base, example_params, rows, G1, STAGES};
use lineture::factorgroup::{invert_eval, mask, mask_trace, Factorization, StructuralInverse};

#[test]
fn params_are_valid() {
    example_params().validate().unwrap();
    assert!(base().is_bijective().unwrap());
}

#[test]
fn every_stage_matches_cell_for_cell() {
    let trace = mask_trace(&base(), &example_params()).unwrap();
    assert_eq!(trace.len(), 7);
    assert_eq!(trace[0].matrix(), &rows(&G1));
    for (k, expected) in STAGES.iter().enumerate() {
        assert_eq!(trace[k + 1].matrix(), &rows(expected), "stage g{}", k + 2);
    }
}

#[test]
fn masked_result_is_bijective() {
    for rho6 in [false, true] {
        let g = mask(&base(), &example_params(), rho6).unwrap();
        assert!(g.is_bijective().unwrap());
    }
}

#[test]
fn structural_inverse_matches_table_on_all_words() {
    let p = example_params();
    for rho6 in [false, true] {
        let g = mask(&base(), &p, rho6).unwrap();
        let table = g.permutation_table().unwrap();
        let inv = StructuralInverse::new(&p, &base(), rho6).unwrap();
        for x in 0..64u32 {
            let y = table.apply(x);
            assert_eq!(inv.apply(y).unwrap(), x);
            assert_eq!(invert_eval(&p, &base(), y, rho6).unwrap(), x);
        }
    }
}

#[test]
fn simple_base_round_trips_too() {
    let p = example_params();
    let simple = Factorization::simple(6);
    let g = mask(&simple, &p, true).unwrap();
    let table = g.permutation_table().unwrap();
    for x in 0..64u32 {
        assert_eq!(invert_eval(&p, &simple, table.apply(x), true).unwrap(), x);
    }
}
