//! Key generation: the master matrix, the substitution vector and its
//! parameterization, and the public key.

use crate::bitlin::{sample_matrix, BitMatrix, ByteStream};
use crate::error::{Error, Result};
use crate::factorgroup::{mask, Factorization, FieldSpec, MaskingParams, SUPPORTED_WIDTHS};

pub const SEED_LEN: usize = 32;

const SEED_TAG: &[u8] = b"LNTR-SEED-";

/// General parameters: word width `m`, word count `l`, block count `q`,
/// session-key count `t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Params {
    m: usize,
    l: usize,
    q: usize,
    t: usize,
}

impl Params {
    /// Parameters usable for signing. Requires `m` in {2,4,6,8,16}, `q >= 3`,
    /// `t >= 2` and `2l >= tq`.
    pub fn new(m: usize, l: usize, q: usize, t: usize) -> Result<Self> {
        let p = Self::for_analysis(m, l, q, t)?;
        if !SUPPORTED_WIDTHS.contains(&m) {
            return Err(Error::UnsupportedWidth(m));
        }
        if q < 3 {
            return Err(Error::InvalidParams(format!("q = {q}: at least 3 blocks are needed")));
        }
        if t < 2 {
            return Err(Error::InvalidParams(format!(
                "t = {t}: at least 2 session keys are needed"
            )));
        }
        if 2 * l < t * q {
            return Err(Error::InvalidParams(format!(
                "l = {l} is below tq/2 = {}",
                (t * q) as f64 / 2.0
            )));
        }
        Ok(p)
    }

    /// Loose bounds for the analysis harness: every field positive, `q >= 2`,
    /// and the sizes fit the one-byte wire fields.
    pub fn for_analysis(m: usize, l: usize, q: usize, t: usize) -> Result<Self> {
        if m == 0 || l == 0 || t == 0 || q < 2 {
            return Err(Error::InvalidParams(format!("(m, l, q, t) = ({m}, {l}, {q}, {t})")));
        }
        if [m, l, q, t].iter().any(|&v| v > 255) {
            return Err(Error::InvalidParams("parameters must fit in one byte".into()));
        }
        Ok(Self { m, l, q, t })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn t(&self) -> usize {
        self.t
    }

    /// Same `m, l, q` with a different session-key count, under the loose bounds.
    pub fn with_t(&self, t: usize) -> Result<Self> {
        Self::for_analysis(self.m, self.l, self.q, t)
    }

    fn check_keygen(&self) -> Result<()> {
        FieldSpec::for_width(self.m)?;
        if self.q < 3 {
            return Err(Error::InvalidParams("key generation needs q >= 3".into()));
        }
        Ok(())
    }
}

/// Per-object randomness derived from the master seed.
#[derive(Clone, Copy, Debug)]
pub struct SeedSchedule<'a> {
    seed: &'a [u8; SEED_LEN],
}

impl<'a> SeedSchedule<'a> {
    pub fn new(seed: &'a [u8; SEED_LEN]) -> Self {
        Self { seed }
    }

    /// SHAKE-256("LNTR-SEED-" || name || 0x00 || indices as u16 LE || seed).
    pub fn stream(&self, name: &str, indices: &[usize]) -> ByteStream {
        let mut idx = Vec::with_capacity(2 * indices.len());
        for &i in indices {
            idx.extend_from_slice(&(i as u16).to_le_bytes());
        }
        ByteStream::new(&[SEED_TAG, name.as_bytes(), &[0], &idx, self.seed])
    }
}

/// The block-diagonal master matrix `[omega1, 0; 0, I_m]` and its inverse.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MasterMatrix {
    omega: BitMatrix,
    omega1: BitMatrix,
    omega_inv: BitMatrix,
}

impl MasterMatrix {
    pub fn from_omega1(omega1: BitMatrix, m: usize) -> Result<Self> {
        let n1 = omega1.rows();
        let omega1_inv = omega1.invert()?;
        let assemble = |top: &BitMatrix| -> Result<BitMatrix> {
            let mut out = BitMatrix::zeros(n1 + m, n1 + m);
            out.put(0, 0, top)?;
            out.put(n1, n1, &BitMatrix::identity(m))?;
            Ok(out)
        };
        Ok(Self {
            omega: assemble(&omega1)?,
            omega_inv: assemble(&omega1_inv)?,
            omega1,
        })
    }

    /// Test hook: the identity master matrix of size `mq`.
    pub fn identity(m: usize, q: usize) -> Self {
        let n = m * q;
        Self {
            omega: BitMatrix::identity(n),
            omega1: BitMatrix::identity(n - m),
            omega_inv: BitMatrix::identity(n),
        }
    }

    pub fn omega(&self) -> &BitMatrix {
        &self.omega
    }

    pub fn omega1(&self) -> &BitMatrix {
        &self.omega1
    }

    pub fn omega_inv(&self) -> &BitMatrix {
        &self.omega_inv
    }
}

pub fn gen_omega(stream: &mut ByteStream, m: usize, q: usize) -> Result<MasterMatrix> {
    let n1 = m * (q - 1);
    let omega1 = sample_matrix(stream, n1, n1, true)?;
    MasterMatrix::from_omega1(omega1, m)
}

/// Secret parameters behind the substitution vector. Index `j` in `r[i][j]`
/// and in `delta`/`lambda`/`gamma` is 0-based: `r[i][0]` is the masked
/// factorization, `r[i][j]` for `j >= 1` and `delta[j-1]` etc. are the middle blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BetaParams {
    pub m: usize,
    pub q: usize,
    pub r: Vec<Vec<BitMatrix>>,
    pub masks: Vec<MaskingParams>,
    pub tau: Vec<BitMatrix>,
    pub delta: Vec<BitMatrix>,
    pub lambda: Vec<BitMatrix>,
    pub gamma: Vec<BitMatrix>,
}

/// Duplicates row `k` of an `m x m` matrix onto rows `2k` and `2k+1`.
pub fn broadcast_rows(tau: &BitMatrix) -> BitMatrix {
    let m = tau.rows();
    let mut out = BitMatrix::zeros(2 * m, tau.cols());
    for k in 0..m {
        for c in 0..tau.cols() {
            let b = tau.get(k, c);
            out.set(2 * k, c, b);
            out.set(2 * k + 1, c, b);
        }
    }
    out
}

impl BetaParams {
    pub fn generate(schedule: &SeedSchedule<'_>, params: &Params) -> Result<Self> {
        params.check_keygen()?;
        let (m, l, q) = (params.m, params.l, params.q);
        let middle = 2..q;

        let mut r = Vec::with_capacity(l);
        let mut masks = Vec::with_capacity(l);
        let mut tau = Vec::with_capacity(l);
        for i in 1..=l {
            let mp = MaskingParams::sample(&mut schedule.stream("mask", &[i]), m)?;
            let r1 = mask(&Factorization::simple(m), &mp, false)?.into_matrix();
            let mut row = vec![r1];
            for j in middle.clone() {
                row.push(sample_matrix(&mut schedule.stream("R", &[i, j]), 2 * m, m, false)?);
            }
            r.push(row);
            masks.push(mp);
            tau.push(sample_matrix(&mut schedule.stream("tau", &[i]), m, m, false)?);
        }
        let per_j = |name: &str, nonsingular: bool| -> Result<Vec<BitMatrix>> {
            middle
                .clone()
                .map(|j| sample_matrix(&mut schedule.stream(name, &[j]), m, m, nonsingular))
                .collect()
        };
        Ok(Self {
            m,
            q,
            r,
            masks,
            tau,
            delta: per_j("delta", false)?,
            lambda: per_j("lambda", false)?,
            gamma: per_j("gamma", true)?,
        })
    }

    pub fn l(&self) -> usize {
        self.r.len()
    }

    /// First block of `beta_i`: `R_i1 + bcast(tau_i) + sum_j R_ij delta_j`.
    pub fn beta_first(&self, i: usize) -> Result<BitMatrix> {
        let mut acc = self.r[i][0].add(&broadcast_rows(&self.tau[i]))?;
        for (j, delta) in self.delta.iter().enumerate() {
            acc = acc.add(&self.r[i][j + 1].mul(delta)?)?;
        }
        Ok(acc)
    }

    /// Assembles `beta_i = beta_i1 || ... || beta_iq` for every `i`.
    pub fn assemble(&self) -> Result<Vec<BitMatrix>> {
        (0..self.l())
            .map(|i| {
                let mut blocks = vec![self.beta_first(i)?];
                for (j, gamma) in self.gamma.iter().enumerate() {
                    blocks.push(self.r[i][j + 1].mul(gamma)?);
                }
                let mut last = BitMatrix::zeros(2 * self.m, self.m);
                for (j, lambda) in self.lambda.iter().enumerate() {
                    last = last.add(&self.r[i][j + 1].mul(lambda)?)?;
                }
                blocks.push(last);
                let refs: Vec<&BitMatrix> = blocks.iter().collect();
                BitMatrix::hcat_all(&refs)
            })
            .collect()
    }

    /// `R_i1 + bcast(tau_i)`, the factorization every session secret reduces to.
    pub fn masked_core(&self, i: usize) -> Result<BitMatrix> {
        self.r[i][0].add(&broadcast_rows(&self.tau[i]))
    }
}

pub fn gen_beta(schedule: &SeedSchedule<'_>, params: &Params) -> Result<(BetaParams, Vec<BitMatrix>)> {
    let bp = BetaParams::generate(schedule, params)?;
    let beta = bp.assemble()?;
    Ok((bp, beta))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrivateKey {
    params: Params,
    seed: [u8; SEED_LEN],
    master: MasterMatrix,
    beta_params: BetaParams,
    beta: Vec<BitMatrix>,
}

impl PrivateKey {
    /// Deterministic in `(params, seed)`.
    pub fn generate(params: Params, seed: [u8; SEED_LEN]) -> Result<Self> {
        params.check_keygen()?;
        let schedule = SeedSchedule::new(&seed);
        let master = gen_omega(&mut schedule.stream("omega1", &[]), params.m, params.q)?;
        let (beta_params, beta) = gen_beta(&schedule, &params)?;
        Ok(Self {
            params,
            seed,
            master,
            beta_params,
            beta,
        })
    }

    /// Test hook: swaps in another master matrix.
    pub fn with_master(mut self, master: MasterMatrix) -> Self {
        self.master = master;
        self
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn seed(&self) -> &[u8; SEED_LEN] {
        &self.seed
    }

    pub fn master(&self) -> &MasterMatrix {
        &self.master
    }

    pub fn beta_params(&self) -> &BetaParams {
        &self.beta_params
    }

    pub fn beta(&self) -> &[BitMatrix] {
        &self.beta
    }

    pub fn public_key(&self) -> Result<PublicKey> {
        derive_public_key(self)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PublicKey {
    params: Params,
    blocks: Vec<BitMatrix>,
}

impl PublicKey {
    pub fn from_blocks(params: Params, blocks: Vec<BitMatrix>) -> Result<Self> {
        let (m, l, q) = (params.m, params.l, params.q);
        if blocks.len() != l || blocks.iter().any(|b| b.rows() != 2 * m || b.cols() != m * q) {
            return Err(Error::InvalidParams(
                "public key blocks do not match the parameters".into(),
            ));
        }
        Ok(Self { params, blocks })
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn blocks(&self) -> &[BitMatrix] {
        &self.blocks
    }
}

/// `B_i = beta_i * omega` for every `i`.
pub fn derive_public_key(sk: &PrivateKey) -> Result<PublicKey> {
    let blocks = sk
        .beta
        .iter()
        .map(|b| b.mul(sk.master.omega()))
        .collect::<Result<Vec<_>>>()?;
    PublicKey::from_blocks(sk.params, blocks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitlin::ByteSource;

    fn key(seed_byte: u8, params: Params) -> PrivateKey {
        PrivateKey::generate(params, [seed_byte; SEED_LEN]).unwrap()
    }

    fn p(m: usize, l: usize, q: usize, t: usize) -> Params {
        Params::new(m, l, q, t).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(Params::new(8, 8, 3, 3).is_ok());
        assert!(Params::new(8, 8, 2, 2).is_err());
        assert!(Params::new(8, 8, 3, 1).is_err());
        assert!(Params::new(7, 8, 3, 2).is_err());
        assert!(Params::new(8, 2, 3, 2).is_err());
        assert!(Params::new(8, 7, 3, 5).is_err());
        assert!(Params::for_analysis(2, 2, 2, 1).is_ok());
        assert!(Params::for_analysis(2, 2, 1, 1).is_err());
    }

    #[test]
    fn omega_has_block_diagonal_shape() {
        for seed in 0..10u8 {
            let sk = key(seed, p(8, 8, 3, 3));
            let (m, q) = (8, 3);
            let n1 = m * (q - 1);
            let mm = sk.master();
            for w in [mm.omega(), mm.omega_inv()] {
                assert!(w.slice(0, n1, n1, m).unwrap().is_zero());
                assert!(w.slice(n1, 0, m, n1).unwrap().is_zero());
                assert_eq!(w.slice(n1, n1, m, m).unwrap(), BitMatrix::identity(m));
            }
            assert_eq!(mm.omega().slice(0, 0, n1, n1).unwrap(), *mm.omega1());
            assert_eq!(
                mm.omega_inv().slice(0, 0, n1, n1).unwrap(),
                mm.omega1().invert().unwrap()
            );
            assert_eq!(mm.omega().mul(mm.omega_inv()).unwrap(), BitMatrix::identity(m * q));
        }
    }

    #[test]
    fn smallest_q_has_one_middle_block() {
        let sk = key(1, p(8, 8, 3, 3));
        let bp = sk.beta_params();
        assert_eq!(bp.delta.len(), 1);
        assert_eq!(bp.r[0].len(), 2);
        for b in sk.beta() {
            assert_eq!((b.rows(), b.cols()), (16, 24));
        }
    }

    #[test]
    fn beta_reassembles_from_params() {
        for (seed, params) in [(3u8, p(8, 8, 3, 3)), (4, p(4, 6, 4, 3)), (5, p(2, 5, 5, 2))] {
            let sk = key(seed, params);
            assert_eq!(sk.beta_params().assemble().unwrap(), sk.beta());
            let m = params.m();
            for i in 0..params.l() {
                let bp = sk.beta_params();
                let mut rest = sk.beta()[i].slice(0, 0, 2 * m, m).unwrap();
                rest = rest.add(&broadcast_rows(&bp.tau[i])).unwrap();
                for (j, delta) in bp.delta.iter().enumerate() {
                    rest = rest.add(&bp.r[i][j + 1].mul(delta).unwrap()).unwrap();
                }
                assert_eq!(rest, bp.r[i][0]);
            }
        }
    }

    #[test]
    fn first_blocks_are_bijective() {
        let sk = key(7, p(8, 8, 3, 3));
        for r in &sk.beta_params().r {
            let f = Factorization::from_matrix(r[0].clone()).unwrap();
            assert!(f.is_bijective().unwrap());
        }
        for g in &sk.beta_params().gamma {
            assert!(g.invert().is_ok());
        }
    }

    #[test]
    fn keygen_is_deterministic() {
        let params = p(8, 8, 3, 4);
        assert_eq!(key(9, params), key(9, params));
        assert_ne!(key(9, params).beta(), key(10, params).beta());
    }

    #[test]
    fn subseed_streams_are_domain_separated() {
        let seed = [5u8; SEED_LEN];
        let s = SeedSchedule::new(&seed);
        let mut draws = std::collections::HashSet::new();
        for (name, idx) in [
            ("omega1", vec![]),
            ("R", vec![1, 2]),
            ("R", vec![2, 1]),
            ("tau", vec![1]),
            ("delta", vec![2]),
            ("lambda", vec![2]),
            ("gamma", vec![2]),
            ("mask", vec![1]),
        ] {
            let bytes: [u8; 32] = s.stream(name, &idx).next_array();
            assert!(draws.insert(bytes), "{name} {idx:?}");
        }
    }

    #[test]
    fn public_key_is_beta_times_omega() {
        let sk = key(11, p(8, 8, 3, 3));
        let pk = sk.public_key().unwrap();
        for (b, beta) in pk.blocks().iter().zip(sk.beta()) {
            assert_eq!(&b.mul(sk.master().omega_inv()).unwrap(), beta);
        }
        let plain = sk.clone().with_master(MasterMatrix::identity(8, 3));
        assert_eq!(plain.public_key().unwrap().blocks(), sk.beta());
    }

    #[test]
    fn public_evaluation_is_private_evaluation_times_omega() {
        let sk = key(12, p(8, 8, 3, 3));
        let pk = sk.public_key().unwrap();
        let mut s = ByteStream::new(&[b"x"]);
        for _ in 0..100 {
            let x = s.next_below(256);
            let i = s.next_below(8) as usize;
            let priv_row = Factorization::from_matrix(sk.beta()[i].clone()).unwrap().eval_row(x);
            let pub_row = Factorization::from_matrix(pk.blocks()[i].clone()).unwrap().eval_row(x);
            assert_eq!(sk.master().omega().mul_row(&priv_row), pub_row);
        }
    }

    #[test]
    fn keygen_rejects_q2() {
        let params = Params::for_analysis(8, 8, 2, 2).unwrap();
        assert!(PrivateKey::generate(params, [0; SEED_LEN]).is_err());
    }
}
