//! Small-scale security experiments: closed-form secrecy estimates, a
//! forgery Monte Carlo, the collision budget, and an exhaustive count of the
//! master matrices consistent with observed session keys.

use rayon::prelude::*;

use crate::bitlin::{sample_matrix, BitMatrix, ByteSource, ByteStream};
use crate::error::{Error, Result};
use crate::keyforge::{Params, PrivateKey, SEED_LEN};
use crate::signcore::{
    build_session_from_blocks, derive_block, derive_words, secret_matrices_public, session_psi, BlockRole, HashBinding,
    SessionKey, SharedSecret, NONCE_LEN,
};

const SECONDS_PER_YEAR: f64 = 365.25 * 24.0 * 3600.0;

/// Secrecy estimates in bits for one parameter set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SecrecyReport {
    pub params: Params,
    /// log2 of the accumulated signature base used by the collision estimate.
    pub log2_n: f64,
    /// Forgery by hitting every hash-bound last block: `t m^2`.
    pub c_psi_t: u64,
    /// Guessing all secret blocks of every session key: `t m^2 (q-1)`.
    pub c_psi_guess: u64,
    /// Forgery by matching word vectors: `m l (t-1)`.
    pub c_x_t: u64,
    /// Forgery by matching shared secrets: `2 m^2 l (t-1)`.
    pub c_s_t: u64,
    /// Collision attack against an accumulated base of `N` signatures: `t m^2 - log2 N`.
    pub c_col: f64,
    /// Solving the session-key factorization: `m^2 (q^2 - 2q)`.
    pub c_omega_e: u64,
    /// Brute force on the session-key factorization: `m^2 (q^2 - q)`.
    pub c_omega_e_brute: u64,
    /// Bit length of `x`: `m l`.
    pub len_x: u64,
    /// Bit length of `S`: `2 m^2 l`.
    pub len_s: u64,
    /// Bit length of all session keys: `t m^2 q`.
    pub len_psi_t: u64,
}

pub fn secrecy_report(params: &Params, log2_n: f64) -> SecrecyReport {
    let [m, l, q, t] = [params.m(), params.l(), params.q(), params.t()].map(|v| v as u64);
    let m2 = m * m;
    SecrecyReport {
        params: *params,
        log2_n,
        c_psi_t: t * m2,
        c_psi_guess: t * m2 * (q - 1),
        c_x_t: m * l * (t - 1),
        c_s_t: 2 * m2 * l * (t - 1),
        c_col: (t * m2) as f64 - log2_n,
        c_omega_e: m2 * (q * q - 2 * q),
        c_omega_e_brute: m2 * (q * q - q),
        len_x: m * l,
        len_s: 2 * m2 * l,
        len_psi_t: t * m2 * q,
    }
}

impl SecrecyReport {
    pub const HEADER: &'static str = "m\tl\tq\tt\tC_omegaE\tC'_omegaE\tC_psi_t\tC_x_t\tC_S_t\tC_col\tC_psi_guess";

    /// One tab-separated row in the column order of [`Self::HEADER`].
    pub fn row(&self) -> String {
        let p = &self.params;
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            p.m(),
            p.l(),
            p.q(),
            p.t(),
            self.c_omega_e,
            self.c_omega_e_brute,
            self.c_psi_t,
            self.c_x_t,
            self.c_s_t,
            fmt_bits(self.c_col),
            self.c_psi_guess
        )
    }

    /// `L_S >= L_psi,t`, i.e. `l >= tq/2`.
    pub fn identity_check_is_reliable(&self) -> bool {
        self.len_s >= self.len_psi_t
    }
}

fn fmt_bits(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

/// `t m^2 - log2 N` with `N = rate * years` worth of seconds; no accumulation
/// (`N < 1`) leaves the full `t m^2`.
pub fn collision_budget(params: &Params, signatures_per_second: f64, years: f64) -> f64 {
    let n = signatures_per_second * years * SECONDS_PER_YEAR;
    let full = (params.t() * params.m() * params.m()) as f64;
    if n <= 1.0 {
        full
    } else {
        full - n.log2()
    }
}

/// How forged session keys are produced in [`forgery_montecarlo_with`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ForgeryModel {
    /// Every block of a forged session key except the hash-bound last one is
    /// drawn uniformly; draws whose substitutions do not all invert are
    /// discarded and redrawn (the rate is conditioned on bijectivity).
    RandomSessionKeys,
    /// Session keys built with the real private key, except that each one
    /// gets its own uniformly drawn nonsingular first block in place of the
    /// block bound to the signer's `h_id`.
    WrongIdentity,
}

/// Outcome of a Monte Carlo run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialStats {
    pub trials: u64,
    pub successes: u64,
    /// Candidate session keys thrown away because some substitution did not invert.
    pub rejected_draws: u64,
    /// Trials abandoned after [`MAX_REDRAWS`] rejected draws for one session key.
    pub exhausted: u64,
    pub target: f64,
}

impl TrialStats {
    pub fn rate(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }

    /// `[target / 3, 3 * target]`.
    pub fn band(&self) -> (f64, f64) {
        (self.target / 3.0, self.target * 3.0)
    }

    pub fn in_band(&self) -> bool {
        let (lo, hi) = self.band();
        (lo..=hi).contains(&self.rate())
    }
}

/// Redraw limit per forged session key.
pub const MAX_REDRAWS: u64 = 1 << 12;

/// Largest `m l (t-1)` the Monte Carlo accepts.
pub const MAX_FORGERY_BITS: usize = 24;

/// Monte Carlo estimate of the forgery probability `2^-(m l (t-1))`, using
/// [`ForgeryModel::RandomSessionKeys`].
pub fn forgery_montecarlo(params: &Params, trials: u64, seed: u64) -> Result<TrialStats> {
    forgery_montecarlo_with(params, trials, seed, ForgeryModel::RandomSessionKeys)
}

pub fn forgery_montecarlo_with(params: &Params, trials: u64, seed: u64, model: ForgeryModel) -> Result<TrialStats> {
    let (m, l, t) = (params.m(), params.l(), params.t());
    let bits = m * l * (t - 1);
    if bits > MAX_FORGERY_BITS {
        return Err(Error::InvalidParams(format!(
            "m l (t-1) = {bits} is beyond the {MAX_FORGERY_BITS}-bit Monte Carlo limit"
        )));
    }
    if trials == 0 {
        return Err(Error::InvalidParams("at least one trial is needed".into()));
    }
    let key_seed: [u8; SEED_LEN] = ByteStream::new(&[b"LNTR-MC-KEY", &seed.to_le_bytes()]).next_array();
    let sk = PrivateKey::generate(*params, key_seed)?;
    let pk = sk.public_key()?;

    let (successes, rejected_draws, exhausted) = (0..trials)
        .into_par_iter()
        .map(|trial| -> Result<(u64, u64, u64)> {
            let mut rng = ByteStream::new(&[b"LNTR-MC-TRIAL", &seed.to_le_bytes(), &trial.to_le_bytes()]);
            let msg = trial.to_le_bytes();
            let y = derive_words(&msg, params);
            let mut rejected = 0u64;
            let mut words: Vec<Vec<u32>> = Vec::with_capacity(t);
            for _ in 0..t {
                let r: [u8; NONCE_LEN] = rng.next_array();
                let last = derive_block(&HashBinding::new(r, &msg).h, BlockRole::Last, m)?;
                let secret = match model {
                    ForgeryModel::RandomSessionKeys => {
                        let mut found = None;
                        while found.is_none() && rejected < MAX_REDRAWS {
                            let top = sample_matrix(&mut rng, m * (params.q() - 1), m, false)?;
                            let psi = SessionKey::from_matrix(top.vstack(&last)?)?;
                            match SharedSecret::from_matrices(secret_matrices_public(&pk, &psi)?) {
                                Ok(s) => found = Some(s),
                                Err(Error::Invariant(_)) => rejected += 1,
                                Err(e) => return Err(e),
                            }
                        }
                        match found {
                            Some(s) => s,
                            None => return Ok((0, rejected, 1)),
                        }
                    }
                    ForgeryModel::WrongIdentity => {
                        let first = sample_matrix(&mut rng, m, m, true)?;
                        let e = build_session_from_blocks(first, last, sk.beta_params())?;
                        let psi = session_psi(sk.master(), &e)?;
                        SharedSecret::from_matrices(secret_matrices_public(&pk, &psi)?)?
                    }
                };
                words.push(secret.invert_words(&y)?);
            }
            let success = words.iter().all(|x| *x == words[0]);
            Ok((u64::from(success), rejected, 0))
        })
        .try_reduce(|| (0, 0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1, a.2 + b.2)))?;

    Ok(TrialStats {
        trials,
        successes,
        rejected_draws,
        exhausted,
        target: 2f64.powi(-(bits as i32)),
    })
}

/// Result of the exhaustive master-matrix sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct AmbiguityReport {
    pub m: usize,
    pub q: usize,
    pub two_keys: bool,
    /// Number of candidate matrices examined, `2^((mq)^2)`.
    pub candidates: u64,
    pub invertible: u64,
    /// Invertible candidates consistent with the observed session keys.
    pub solutions: u64,
    /// Whether the planted master matrix is among the solutions.
    pub planted_found: bool,
}

impl AmbiguityReport {
    pub fn log2_solutions(&self) -> f64 {
        (self.solutions as f64).log2()
    }
}

/// A planted instance: master matrix and two session keys sharing their first block.
#[derive(Clone, Debug)]
pub struct PlantedInstance {
    pub omega: BitMatrix,
    pub sessions: [Vec<BitMatrix>; 2],
    pub psi: [BitMatrix; 2],
}

/// Largest `mq` the exhaustive sweep handles.
pub const MAX_SWEEP_DIM: usize = 4;

pub fn planted_instance(m: usize, q: usize, seed: u64) -> Result<PlantedInstance> {
    if m == 0 || q < 2 {
        return Err(Error::InvalidParams(format!(
            "need m >= 1 and q >= 2, got m = {m}, q = {q}"
        )));
    }
    let mut rng = ByteStream::new(&[b"LNTR-RANK", &seed.to_le_bytes()]);
    let n1 = m * (q - 1);
    let omega1 = sample_matrix(&mut rng, n1, n1, true)?;
    let mut omega = BitMatrix::zeros(m * q, m * q);
    omega.put(0, 0, &omega1)?;
    omega.put(n1, n1, &BitMatrix::identity(m))?;
    let omega_inv = omega.invert()?;

    let mut shared = vec![sample_matrix(&mut rng, m, m, true)?];
    for _ in 2..q {
        shared.push(sample_matrix(&mut rng, m, m, false)?);
    }
    let last_a = sample_matrix(&mut rng, m, m, false)?;
    let last_b = loop {
        let b = sample_matrix(&mut rng, m, m, false)?;
        if b != last_a {
            break b;
        }
    };
    let session = |last: BitMatrix| {
        let mut blocks = shared.clone();
        blocks.push(last);
        blocks
    };
    let sessions = [session(last_a), session(last_b)];
    let psi = [0, 1].map(|v| {
        let refs: Vec<&BitMatrix> = sessions[v].iter().collect();
        omega_inv
            .mul(&BitMatrix::vstack_all(&refs).expect("equal widths"))
            .expect("shapes agree")
    });
    Ok(PlantedInstance { omega, sessions, psi })
}

fn small_rank(rows: &[u64]) -> usize {
    let mut rows = rows.to_vec();
    let mut rank = 0;
    for bit in (0..64).rev() {
        let Some(p) = (rank..rows.len()).find(|&r| (rows[r] >> bit) & 1 == 1) else {
            continue;
        };
        rows.swap(rank, p);
        for r in 0..rows.len() {
            if r != rank && (rows[r] >> bit) & 1 == 1 {
                rows[r] ^= rows[rank];
            }
        }
        rank += 1;
    }
    rank
}

/// Counts every invertible `mq x mq` matrix `W` such that `W psi_v`
/// unstacks into session matrices; with `two_keys`, the two reconstructions
/// must also agree on their first block.
pub fn factorization_ambiguity(m: usize, q: usize, seed: u64, two_keys: bool) -> Result<AmbiguityReport> {
    let n = m * q;
    if n > MAX_SWEEP_DIM {
        return Err(Error::InvalidParams(format!(
            "exhaustive sweep needs (mq)^2 <= 16 (2^16 candidates); mq = {n} would need 2^{} candidates, \
             try m = 2, q = 2 or m = 1, q = 2..4",
            n * n
        )));
    }
    let inst = planted_instance(m, q, seed)?;
    let psi_rows: Vec<Vec<u64>> = inst
        .psi
        .iter()
        .map(|p| (0..n).map(|r| p.row_value(r)).collect())
        .collect();
    let planted: Vec<u64> = (0..n).map(|r| inst.omega.row_value(r)).collect();
    let row_mask = (1u64 << n) - 1;
    let candidates = 1u64 << (n * n);

    let top_block = |w: &[u64], psi: &[u64]| -> Vec<u64> {
        (0..m)
            .map(|r| {
                (0..n)
                    .filter(|&k| (w[r] >> (n - 1 - k)) & 1 == 1)
                    .fold(0, |acc, k| acc ^ psi[k])
            })
            .collect()
    };

    let (invertible, solutions, planted_found) = (0..candidates)
        .into_par_iter()
        .map(|code| {
            let w: Vec<u64> = (0..n).map(|r| (code >> (n * (n - 1 - r))) & row_mask).collect();
            if small_rank(&w) < n {
                return (0, 0, false);
            }
            let ok = !two_keys || top_block(&w, &psi_rows[0]) == top_block(&w, &psi_rows[1]);
            (1, u64::from(ok), ok && w == planted)
        })
        .reduce(|| (0, 0, false), |a, b| (a.0 + b.0, a.1 + b.1, a.2 || b.2));

    Ok(AmbiguityReport {
        m,
        q,
        two_keys,
        candidates,
        invertible,
        solutions,
        planted_found,
    })
}
