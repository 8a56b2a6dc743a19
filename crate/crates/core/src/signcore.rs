//! Hash binding, session matrices, session keys, the shared secret, and the
//! sign/verify algorithms with `t` session keys.
//!
//! Where the construction writes a transposed session matrix, this module uses
//! `stack(E)`: the `mq x m` vertical stack of the blocks `w_1, ..., w_q`, each
//! block left untransposed. The middle blocks are
//! `w_j = gamma_j^-1 (delta_j w_1 + lambda_j w_q)`, which makes
//! `beta_i * stack(E) = (R_i1 + bcast(tau_i)) * w_1` hold exactly.

use sha3::{Digest, Sha3_256};

use crate::bitlin::{sample_matrix, BitMatrix, BitReader, ByteSource, ByteStream};
use crate::error::{Error, Result};
use crate::factorgroup::{Factorization, PermutationTable};
use crate::keyforge::{BetaParams, MasterMatrix, Params, PrivateKey, PublicKey};

pub const MSG_TAG: &[u8] = b"LNTR-MSG";
pub const HASH_LEN: usize = 32;
pub const NONCE_LEN: usize = 32;

pub type Digest32 = [u8; HASH_LEN];

/// `r` together with `h = SHA3-256(r || msg)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HashBinding {
    pub r: [u8; NONCE_LEN],
    pub h: Digest32,
}

impl HashBinding {
    pub fn new(r: [u8; NONCE_LEN], msg: &[u8]) -> Self {
        let mut hasher = Sha3_256::new();
        hasher.update(r);
        hasher.update(msg);
        Self {
            r,
            h: hasher.finalize().into(),
        }
    }

    pub fn check(&self, msg: &[u8]) -> bool {
        Self::new(self.r, msg).h == self.h
    }
}

/// `l` words of `m` bits taken MSB-first from SHAKE-256("LNTR-MSG" || msg).
pub fn derive_words(msg: &[u8], params: &Params) -> Vec<u32> {
    let (m, l) = (params.m(), params.l());
    let mut bytes = vec![0u8; (l * m).div_ceil(8)];
    ByteStream::new(&[MSG_TAG, msg]).fill(&mut bytes);
    let mut reader = BitReader::new(&bytes);
    (0..l).map(|_| reader.read_value(m).unwrap() as u32).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockRole {
    /// First session block, bound to `h_id`; always nonsingular.
    First,
    /// Last session block, bound to `h_v`; public through the session key.
    Last,
}

impl BlockRole {
    pub fn tag(self) -> &'static [u8] {
        match self {
            BlockRole::First => b"LNTR-W1",
            BlockRole::Last => b"LNTR-WQ",
        }
    }
}

/// `m x m` block read from SHAKE-256(tag || h).
pub fn derive_block(h: &Digest32, role: BlockRole, m: usize) -> Result<BitMatrix> {
    let mut stream = ByteStream::new(&[role.tag(), h]);
    sample_matrix(&mut stream, m, m, role == BlockRole::First)
}

/// Session matrix `E = w_1 || ... || w_q`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SessionMatrix {
    blocks: Vec<BitMatrix>,
}

impl SessionMatrix {
    pub fn from_blocks(blocks: Vec<BitMatrix>) -> Result<Self> {
        let m = blocks.first().map_or(0, BitMatrix::rows);
        if blocks.len() < 2 || blocks.iter().any(|b| b.rows() != m || b.cols() != m) {
            return Err(Error::InvalidParams(
                "session matrix needs at least two m x m blocks".into(),
            ));
        }
        Ok(Self { blocks })
    }

    pub fn blocks(&self) -> &[BitMatrix] {
        &self.blocks
    }

    /// `mq x m` vertical stack of the blocks.
    pub fn stack(&self) -> BitMatrix {
        let refs: Vec<&BitMatrix> = self.blocks.iter().collect();
        BitMatrix::vstack_all(&refs).expect("blocks share a width")
    }
}

/// Fills in the middle blocks from the given first and last block.
pub fn build_session_from_blocks(first: BitMatrix, last: BitMatrix, bp: &BetaParams) -> Result<SessionMatrix> {
    let mut blocks = Vec::with_capacity(bp.q);
    for ((gamma, delta), lambda) in bp.gamma.iter().zip(&bp.delta).zip(&bp.lambda) {
        let rhs = delta.mul(&first)?.add(&lambda.mul(&last)?)?;
        blocks.push(gamma.invert()?.mul(&rhs)?);
    }
    blocks.insert(0, first);
    blocks.push(last);
    SessionMatrix::from_blocks(blocks)
}

pub fn build_session(h_v: &Digest32, h_id: &Digest32, bp: &BetaParams) -> Result<SessionMatrix> {
    let first = derive_block(h_id, BlockRole::First, bp.m)?;
    let last = derive_block(h_v, BlockRole::Last, bp.m)?;
    build_session_from_blocks(first, last, bp)
}

/// `psi = omega^-1 * stack(E)`, `mq x m`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SessionKey {
    psi: BitMatrix,
    m: usize,
}

impl SessionKey {
    pub fn from_matrix(psi: BitMatrix) -> Result<Self> {
        let m = psi.cols();
        if !psi.rows().is_multiple_of(m) || psi.rows() / m < 2 {
            return Err(Error::InvalidParams(format!(
                "session key must be mq x m, got {}x{}",
                psi.rows(),
                psi.cols()
            )));
        }
        Ok(Self { psi, m })
    }

    pub fn matrix(&self) -> &BitMatrix {
        &self.psi
    }

    pub fn matrix_mut(&mut self) -> &mut BitMatrix {
        &mut self.psi
    }

    pub fn q(&self) -> usize {
        self.psi.rows() / self.m
    }

    /// Block `j` (0-based) of the stack.
    pub fn block(&self, j: usize) -> BitMatrix {
        self.psi
            .slice(j * self.m, 0, self.m, self.m)
            .expect("block index in range")
    }

    pub fn last_block(&self) -> BitMatrix {
        self.block(self.q() - 1)
    }
}

pub fn session_psi(master: &MasterMatrix, e: &SessionMatrix) -> Result<SessionKey> {
    SessionKey::from_matrix(master.omega_inv().mul(&e.stack())?)
}

/// The substitution vector `S` with an inverse table per component.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SharedSecret {
    subs: Vec<BitMatrix>,
    tables: Vec<PermutationTable>,
}

impl SharedSecret {
    /// Builds tables; a component that is not bijective is reported as an
    /// invariant violation.
    pub fn from_matrices(subs: Vec<BitMatrix>) -> Result<Self> {
        let tables = subs
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let t = Factorization::from_matrix(s.clone())?.permutation_table()?;
                if t.is_bijective() {
                    Ok(t)
                } else {
                    Err(Error::Invariant(format!("substitution {i} is not bijective")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { subs, tables })
    }

    pub fn matrices(&self) -> &[BitMatrix] {
        &self.subs
    }

    pub fn tables(&self) -> &[PermutationTable] {
        &self.tables
    }

    /// `x_i = S_i^-1(y_i)`.
    pub fn invert_words(&self, y: &[u32]) -> Result<Vec<u32>> {
        self.tables.iter().zip(y).map(|(t, &yi)| t.invert(yi)).collect()
    }
}

/// `S_i = beta_i * stack(E)`, as raw matrices.
pub fn secret_matrices_private(beta: &[BitMatrix], e: &SessionMatrix) -> Result<Vec<BitMatrix>> {
    let stacked = e.stack();
    beta.iter().map(|b| b.mul(&stacked)).collect()
}

/// `S_i = B_i * psi`, as raw matrices.
pub fn secret_matrices_public(pk: &PublicKey, psi: &SessionKey) -> Result<Vec<BitMatrix>> {
    pk.blocks().iter().map(|b| b.mul(psi.matrix())).collect()
}

pub fn shared_secret_from_private(beta: &[BitMatrix], e: &SessionMatrix) -> Result<SharedSecret> {
    SharedSecret::from_matrices(secret_matrices_private(beta, e)?)
}

pub fn shared_secret_from_public(pk: &PublicKey, psi: &SessionKey) -> Result<SharedSecret> {
    SharedSecret::from_matrices(secret_matrices_public(pk, psi)?)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Signature {
    pub x: Vec<u32>,
    pub psi: Vec<SessionKey>,
    pub r: Vec<[u8; NONCE_LEN]>,
}

/// Everything the signer computed, for inspection in tests and tooling.
#[derive(Clone, Debug)]
pub struct SigningTranscript {
    pub id: HashBinding,
    pub bindings: Vec<HashBinding>,
    pub sessions: Vec<SessionMatrix>,
    pub secret: SharedSecret,
    pub signature: Signature,
}

/// Signs `msg`. `rng` supplies `r_id` and then `r_1..r_t`, 32 bytes each.
pub fn sign<S: ByteSource + ?Sized>(sk: &PrivateKey, msg: &[u8], rng: &mut S) -> Result<Signature> {
    Ok(sign_transcript(sk, msg, rng)?.signature)
}

pub fn sign_transcript<S: ByteSource + ?Sized>(sk: &PrivateKey, msg: &[u8], rng: &mut S) -> Result<SigningTranscript> {
    let params = sk.params();
    let mut draw = || {
        let mut r = [0u8; NONCE_LEN];
        rng.fill(&mut r);
        r
    };
    let id = HashBinding::new(draw(), msg);
    let bindings: Vec<HashBinding> = (0..params.t()).map(|_| HashBinding::new(draw(), msg)).collect();

    let first = derive_block(&id.h, BlockRole::First, params.m())?;
    let sessions = bindings
        .iter()
        .map(|b| {
            let last = derive_block(&b.h, BlockRole::Last, params.m())?;
            build_session_from_blocks(first.clone(), last, sk.beta_params())
        })
        .collect::<Result<Vec<_>>>()?;
    let psi = sessions
        .iter()
        .map(|e| session_psi(sk.master(), e))
        .collect::<Result<Vec<_>>>()?;

    let secret = shared_secret_from_private(sk.beta(), &sessions[0])?;
    let y = derive_words(msg, params);
    let x = secret.invert_words(&y)?;

    Ok(SigningTranscript {
        id,
        signature: Signature {
            x,
            psi,
            r: bindings.iter().map(|b| b.r).collect(),
        },
        bindings,
        sessions,
        secret,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RejectReason {
    /// A session key's last block does not match the block derived from `r_v`.
    BlockMismatch,
    /// Some session key maps `x` to words other than the message words.
    WordMismatch,
    /// The signature does not have the shape the parameters demand.
    Malformed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Accept,
    Reject(RejectReason),
}

impl Verdict {
    pub fn is_accept(self) -> bool {
        self == Verdict::Accept
    }
}

pub fn check_shape(params: &Params, sig: &Signature) -> bool {
    let (m, l, q, t) = (params.m(), params.l(), params.q(), params.t());
    sig.x.len() == l
        && sig.x.iter().all(|&w| u64::from(w) < 1u64 << m)
        && sig.psi.len() == t
        && sig.r.len() == t
        && sig
            .psi
            .iter()
            .all(|p| p.matrix().rows() == m * q && p.matrix().cols() == m)
}

pub fn verify(pk: &PublicKey, msg: &[u8], sig: &Signature) -> Verdict {
    let params = pk.params();
    let m = params.m();
    if !check_shape(params, sig) {
        return Verdict::Reject(RejectReason::Malformed);
    }
    for (psi, r) in sig.psi.iter().zip(&sig.r) {
        let h = HashBinding::new(*r, msg).h;
        match derive_block(&h, BlockRole::Last, m) {
            Ok(expected) if expected == psi.last_block() => {}
            _ => return Verdict::Reject(RejectReason::BlockMismatch),
        }
    }
    let expected = derive_words(msg, params);
    let u: Vec<Vec<u64>> = pk
        .blocks()
        .iter()
        .zip(&sig.x)
        .map(|(b, &x)| Factorization::from_matrix(b.clone()).map(|f| f.eval_row(x)))
        .collect::<Result<_>>()
        .expect("public key blocks have 2m rows");
    for psi in &sig.psi {
        for (ui, &yi) in u.iter().zip(&expected) {
            let got = psi.matrix().mul_row(ui)[0] >> (64 - m);
            if got != u64::from(yi) {
                return Verdict::Reject(RejectReason::WordMismatch);
            }
        }
    }
    Verdict::Accept
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::keyforge::SEED_LEN;

    fn setup(seed: u8) -> (PrivateKey, PublicKey) {
        let sk = PrivateKey::generate(Params::new(8, 8, 3, 3).unwrap(), [seed; SEED_LEN]).unwrap();
        let pk = sk.public_key().unwrap();
        (sk, pk)
    }

    fn rng(tag: &[u8]) -> ByteStream {
        ByteStream::new(&[b"signcore-test", tag])
    }

    fn digest(tag: &[u8]) -> Digest32 {
        rng(tag).next_array()
    }

    #[test]
    fn binding_recomputes() {
        let b = HashBinding::new([7; 32], b"hello");
        assert!(b.check(b"hello"));
        assert!(!b.check(b"hellp"));
    }

    #[test]
    fn words_have_the_right_shape() {
        for (m, l) in [(8, 8), (2, 4), (6, 5), (16, 8)] {
            let params = Params::for_analysis(m, l, 3, 2).unwrap();
            let w = derive_words(b"abc", &params);
            assert_eq!(w.len(), l);
            assert!(w.iter().all(|&x| u64::from(x) < 1 << m));
            assert_eq!(w, derive_words(b"abc", &params));
        }
    }

    #[test]
    fn words_are_the_tagged_shake_prefix() {
        let params = Params::new(8, 8, 3, 3).unwrap();
        let w = derive_words(b"", &params);
        let mut expected = [0u8; 8];
        ByteStream::new(&[b"LNTR-MSG"]).fill(&mut expected);
        assert_eq!(w, expected.iter().map(|&b| u32::from(b)).collect::<Vec<_>>());
    }

    #[test]
    fn first_blocks_are_nonsingular() {
        let mut s = rng(b"w1");
        for _ in 0..1000 {
            let h: Digest32 = s.next_array();
            assert!(derive_block(&h, BlockRole::First, 8).unwrap().invert().is_ok());
        }
    }

    #[test]
    fn roles_give_distinct_blocks() {
        let mut s = rng(b"roles");
        for _ in 0..100 {
            let h: Digest32 = s.next_array();
            let a = derive_block(&h, BlockRole::First, 8).unwrap();
            assert_eq!(a, derive_block(&h, BlockRole::First, 8).unwrap());
            assert_ne!(a, derive_block(&h, BlockRole::Last, 8).unwrap());
        }
    }

    #[test]
    fn middle_block_formula_collapses() {
        let (sk, _) = setup(1);
        let mut bp = sk.beta_params().clone();
        let first = derive_block(&digest(b"a"), BlockRole::First, 8).unwrap();
        let last = derive_block(&digest(b"b"), BlockRole::Last, 8).unwrap();

        bp.delta = vec![BitMatrix::zeros(8, 8)];
        bp.lambda = vec![BitMatrix::zeros(8, 8)];
        let e = build_session_from_blocks(first.clone(), last.clone(), &bp).unwrap();
        assert!(e.blocks()[1].is_zero());

        bp.gamma = vec![BitMatrix::identity(8)];
        bp.lambda = vec![BitMatrix::identity(8)];
        let e = build_session_from_blocks(first, last.clone(), &bp).unwrap();
        assert_eq!(e.blocks()[1], last);
    }

    #[test]
    fn middle_blocks_satisfy_their_defining_relation() {
        let (sk, _) = setup(2);
        let bp = sk.beta_params();
        let e = build_session(&digest(b"v"), &digest(b"id"), bp).unwrap();
        let b = e.blocks();
        let lhs = bp.gamma[0].mul(&b[1]).unwrap();
        let rhs = bp.delta[0]
            .mul(&b[0])
            .unwrap()
            .add(&bp.lambda[0].mul(&b[2]).unwrap())
            .unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn secret_reduces_to_masked_core() {
        let (sk, _) = setup(3);
        let bp = sk.beta_params();
        for k in 0..20u8 {
            let e = build_session(&digest(&[k, 1]), &digest(&[k, 2]), bp).unwrap();
            let s = secret_matrices_private(sk.beta(), &e).unwrap();
            for (i, si) in s.iter().enumerate() {
                assert_eq!(*si, bp.masked_core(i).unwrap().mul(&e.blocks()[0]).unwrap());
            }
        }
    }

    #[test]
    fn identity_master_gives_plain_stack() {
        let (sk, _) = setup(4);
        let e = build_session(&digest(b"v"), &digest(b"id"), sk.beta_params()).unwrap();
        let psi = session_psi(&MasterMatrix::identity(8, 3), &e).unwrap();
        assert_eq!(psi.matrix(), &e.stack());
    }

    #[test]
    fn public_and_private_paths_agree() {
        let (sk, pk) = setup(5);
        let mut s = rng(b"paths");
        for _ in 0..100 {
            let h_v: Digest32 = s.next_array();
            let h_id: Digest32 = s.next_array();
            let e = build_session(&h_v, &h_id, sk.beta_params()).unwrap();
            let psi = session_psi(sk.master(), &e).unwrap();
            assert_eq!(psi.last_block(), e.blocks()[2]);
            let a = shared_secret_from_private(sk.beta(), &e).unwrap();
            let b = shared_secret_from_public(&pk, &psi).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn sign_verify_round_trip() {
        let (sk, pk) = setup(6);
        let mut s = rng(b"rt");
        for k in 0..100u32 {
            let msg = k.to_le_bytes();
            let sig = sign(&sk, &msg, &mut s).unwrap();
            assert_eq!(verify(&pk, &msg, &sig), Verdict::Accept);
        }
    }

    #[test]
    fn signatures_are_randomized_and_deterministic() {
        let (sk, _) = setup(7);
        let a = sign(&sk, b"m", &mut rng(b"one")).unwrap();
        let b = sign(&sk, b"m", &mut rng(b"two")).unwrap();
        assert_ne!(a.r, b.r);
        assert_ne!(a.psi, b.psi);
        assert_ne!(a.x, b.x);
        assert_eq!(a, sign(&sk, b"m", &mut rng(b"one")).unwrap());
    }

    #[test]
    fn tampering_is_detected() {
        let (sk, pk) = setup(8);
        let sig = sign(&sk, b"message", &mut rng(b"t")).unwrap();
        assert_eq!(
            verify(&pk, b"messagf", &sig),
            Verdict::Reject(RejectReason::BlockMismatch)
        );

        let mut bad = sig.clone();
        let q = 3;
        for c in 0..8 {
            for r in 0..8 {
                bad.psi[0].matrix_mut().set((q - 1) * 8 + r, c, false);
            }
        }
        assert_eq!(
            verify(&pk, b"message", &bad),
            Verdict::Reject(RejectReason::BlockMismatch)
        );

        let mut bad = sig.clone();
        bad.x[3] ^= 1;
        assert_eq!(
            verify(&pk, b"message", &bad),
            Verdict::Reject(RejectReason::WordMismatch)
        );

        let mut bad = sig.clone();
        bad.r.pop();
        assert_eq!(verify(&pk, b"message", &bad), Verdict::Reject(RejectReason::Malformed));

        let mut bad = sig;
        bad.x[0] = 256;
        assert_eq!(verify(&pk, b"message", &bad), Verdict::Reject(RejectReason::Malformed));
    }
}
