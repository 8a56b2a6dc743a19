//! LINEture: a signature scheme built from GF(2) matrix algebra.
//!
//! A private key is a block-diagonal master matrix `omega` and a vector of
//! substitution matrices `beta`; the public key is `B = beta * omega`. Each
//! signature carries `t` session keys `psi_v = omega^-1 * stack(E_v)`, all of
//! which reconstruct the same substitution vector `S = B * psi_v`, and the word
//! vector `x = S^-1(H(msg))`.
//!
//! Modules, bottom-up:
//!
//! * [`bitlin`]: dense GF(2) matrices and deterministic sampling
//! * [`factorgroup`]: substitutions from two-row block factorizations and their masking
//! * [`keyforge`]: parameters and key generation
//! * [`signcore`]: session construction, signing, verification
//! * [`codec`]: wire format and presets
//! * [`attacklab`]: secrecy formulas and small-scale attack experiments

pub mod attacklab;
pub mod bitlin;
pub mod codec;
pub mod error;
pub mod factorgroup;
pub mod keyforge;
pub mod signcore;

pub use bitlin::{BitMatrix, ByteSource, ByteStream};
pub use codec::Preset;
pub use error::{Error, Result};
pub use keyforge::{Params, PrivateKey, PublicKey};
pub use signcore::{sign, verify, RejectReason, Signature, Verdict};
