//! Wire format for keys and signatures, and the named parameter presets.
//!
//! Every file starts with a 10-byte header: `"LNTR"`, version `0x01`, a kind
//! byte, then `m, l, q, t` one byte each. Payload sections are dense MSB-first
//! bit strings, each padded with zero bits to a byte boundary:
//!
//! * private key: 32-byte seed, then `beta_1 .. beta_l` (each `2m x mq`, row-major)
//! * public key: `B_1 .. B_l`
//! * signature: `x` (`l` words of `m` bits), `psi_1 .. psi_t` (each `mq x m`),
//!   `r_1 .. r_t` (32 bytes each)

use std::fmt;
use std::str::FromStr;

use crate::bitlin::{BitMatrix, BitReader, BitWriter};
use crate::error::{Error, Result};
use crate::keyforge::{Params, PrivateKey, PublicKey, SEED_LEN};
use crate::signcore::{SessionKey, Signature, NONCE_LEN};

pub const MAGIC: &[u8; 4] = b"LNTR";
pub const VERSION: u8 = 0x01;
pub const HEADER_LEN: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum Kind {
    PrivateKey = 0x01,
    PublicKey = 0x02,
    Signature = 0x03,
}

impl Kind {
    fn from_byte(b: u8) -> Option<Self> {
        match b {
            0x01 => Some(Kind::PrivateKey),
            0x02 => Some(Kind::PublicKey),
            0x03 => Some(Kind::Signature),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WireHeader {
    pub kind: Kind,
    pub params: Params,
}

impl WireHeader {
    pub fn to_bytes(&self) -> [u8; HEADER_LEN] {
        let p = &self.params;
        let mut out = [0u8; HEADER_LEN];
        out[..4].copy_from_slice(MAGIC);
        out[4] = VERSION;
        out[5] = self.kind as u8;
        out[6] = p.m() as u8;
        out[7] = p.l() as u8;
        out[8] = p.q() as u8;
        out[9] = p.t() as u8;
        out
    }

    pub fn parse(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::Truncated {
                expected: HEADER_LEN,
                found: bytes.len(),
            });
        }
        if &bytes[..4] != MAGIC {
            return Err(Error::Malformed("bad magic".into()));
        }
        if bytes[4] != VERSION {
            return Err(Error::Malformed(format!("unsupported version {}", bytes[4])));
        }
        let kind = Kind::from_byte(bytes[5]).ok_or_else(|| Error::Malformed(format!("unknown kind {}", bytes[5])))?;
        let [m, l, q, t] = [bytes[6], bytes[7], bytes[8], bytes[9]].map(usize::from);
        let params = Params::new(m, l, q, t).map_err(|e| Error::Malformed(e.to_string()))?;
        Ok(Self { kind, params })
    }
}

/// Byte sizes of every payload section for a parameter set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SizeTable {
    pub beta: usize,
    pub public: usize,
    pub x: usize,
    pub psi: usize,
    pub r: usize,
}

impl SizeTable {
    pub fn for_params(p: &Params) -> Self {
        let (m, l, q, t) = (p.m(), p.l(), p.q(), p.t());
        let blocks = (2 * l * m * m * q).div_ceil(8);
        Self {
            beta: blocks,
            public: blocks,
            x: (l * m).div_ceil(8),
            psi: (t * q * m * m).div_ceil(8),
            r: NONCE_LEN * t,
        }
    }

    /// Seed plus `beta`; the general parameters are not counted.
    pub fn private_key(&self) -> usize {
        SEED_LEN + self.beta
    }

    pub fn signature(&self) -> usize {
        self.x + self.psi + self.r
    }
}

fn expect_header(bytes: &[u8], kind: Kind) -> Result<Params> {
    let h = WireHeader::parse(bytes)?;
    if h.kind != kind {
        return Err(Error::Malformed(format!("expected {kind:?}, found {:?}", h.kind)));
    }
    Ok(h.params)
}

fn expect_len(bytes: &[u8], payload: usize) -> Result<()> {
    let expected = HEADER_LEN + payload;
    if bytes.len() != expected {
        return Err(Error::Truncated {
            expected,
            found: bytes.len(),
        });
    }
    Ok(())
}

fn write_matrices(out: &mut Vec<u8>, mats: &[BitMatrix]) {
    let mut w = BitWriter::new();
    for m in mats {
        m.write_bits(&mut w);
    }
    out.extend_from_slice(&w.finish());
}

fn read_matrices(section: &[u8], count: usize, rows: usize, cols: usize) -> Result<Vec<BitMatrix>> {
    let mut r = BitReader::new(section);
    let mats = (0..count)
        .map(|_| {
            BitMatrix::read_bits(rows, cols, &mut r).ok_or_else(|| Error::Malformed("short matrix section".into()))
        })
        .collect::<Result<Vec<_>>>()?;
    if !r.padding_is_zero() {
        return Err(Error::Malformed("nonzero padding bits".into()));
    }
    Ok(mats)
}

pub fn encode_private(sk: &PrivateKey) -> Vec<u8> {
    let p = sk.params();
    let mut out = WireHeader {
        kind: Kind::PrivateKey,
        params: *p,
    }
    .to_bytes()
    .to_vec();
    out.extend_from_slice(sk.seed());
    write_matrices(&mut out, sk.beta());
    out
}

/// Rebuilds the key from the stored seed and checks it against the stored `beta`.
pub fn decode_private(bytes: &[u8]) -> Result<PrivateKey> {
    let p = expect_header(bytes, Kind::PrivateKey)?;
    let sizes = SizeTable::for_params(&p);
    expect_len(bytes, sizes.private_key())?;
    let body = &bytes[HEADER_LEN..];
    let seed: [u8; SEED_LEN] = body[..SEED_LEN].try_into().expect("length checked");
    let beta = read_matrices(&body[SEED_LEN..], p.l(), 2 * p.m(), p.m() * p.q())?;
    let sk = PrivateKey::generate(p, seed)?;
    if sk.beta() != beta.as_slice() {
        return Err(Error::Malformed("stored beta does not match the seed".into()));
    }
    Ok(sk)
}

pub fn encode_public(pk: &PublicKey) -> Vec<u8> {
    let mut out = WireHeader {
        kind: Kind::PublicKey,
        params: *pk.params(),
    }
    .to_bytes()
    .to_vec();
    write_matrices(&mut out, pk.blocks());
    out
}

pub fn decode_public(bytes: &[u8]) -> Result<PublicKey> {
    let p = expect_header(bytes, Kind::PublicKey)?;
    expect_len(bytes, SizeTable::for_params(&p).public)?;
    let blocks = read_matrices(&bytes[HEADER_LEN..], p.l(), 2 * p.m(), p.m() * p.q())?;
    PublicKey::from_blocks(p, blocks)
}

pub fn encode_signature(params: &Params, sig: &Signature) -> Result<Vec<u8>> {
    if !crate::signcore::check_shape(params, sig) {
        return Err(Error::Malformed("signature does not match the parameters".into()));
    }
    let mut out = WireHeader {
        kind: Kind::Signature,
        params: *params,
    }
    .to_bytes()
    .to_vec();
    let mut w = BitWriter::new();
    for &x in &sig.x {
        w.push_value(u64::from(x), params.m());
    }
    out.extend_from_slice(&w.finish());
    let psi: Vec<BitMatrix> = sig.psi.iter().map(|p| p.matrix().clone()).collect();
    write_matrices(&mut out, &psi);
    for r in &sig.r {
        out.extend_from_slice(r);
    }
    Ok(out)
}

pub fn decode_signature(bytes: &[u8]) -> Result<(Params, Signature)> {
    let p = expect_header(bytes, Kind::Signature)?;
    let sizes = SizeTable::for_params(&p);
    expect_len(bytes, sizes.signature())?;
    let body = &bytes[HEADER_LEN..];
    let (x_bytes, rest) = body.split_at(sizes.x);
    let (psi_bytes, r_bytes) = rest.split_at(sizes.psi);

    let mut xr = BitReader::new(x_bytes);
    let x = (0..p.l())
        .map(|_| xr.read_value(p.m()).map(|v| v as u32))
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| Error::Malformed("short word section".into()))?;
    if !xr.padding_is_zero() {
        return Err(Error::Malformed("nonzero padding bits".into()));
    }
    let psi = read_matrices(psi_bytes, p.t(), p.m() * p.q(), p.m())?
        .into_iter()
        .map(SessionKey::from_matrix)
        .collect::<Result<Vec<_>>>()?;
    let r = r_bytes
        .chunks_exact(NONCE_LEN)
        .map(|c| c.try_into().expect("exact chunk"))
        .collect();
    Ok((p, Signature { x, psi, r }))
}

/// Named parameter sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    Lineture128,
    Lineture192,
    Lineture256,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Lineture128, Preset::Lineture192, Preset::Lineture256];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Lineture128 => "lineture128",
            Preset::Lineture192 => "lineture192",
            Preset::Lineture256 => "lineture256",
        }
    }

    pub fn params(self) -> Params {
        let t = match self {
            Preset::Lineture128 => 3,
            Preset::Lineture192 => 4,
            Preset::Lineture256 => 5,
        };
        Params::new(8, 8, 3, t).expect("preset parameters are valid")
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidParams(format!("unknown preset {s:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitlin::ByteStream;
    use crate::signcore::sign;
    use proptest::prelude::*;

    fn keypair(seed: u8, p: Params) -> (PrivateKey, PublicKey) {
        let sk = PrivateKey::generate(p, [seed; SEED_LEN]).unwrap();
        let pk = sk.public_key().unwrap();
        (sk, pk)
    }

    #[test]
    fn payload_sizes_at_m8() {
        let p = Params::new(8, 8, 3, 3).unwrap();
        let (sk, pk) = keypair(1, p);
        assert_eq!(encode_private(&sk).len() - HEADER_LEN - SEED_LEN, 384);
        assert_eq!(encode_public(&pk).len() - HEADER_LEN, 384);
        let sig = sign(&sk, b"m", &mut ByteStream::new(&[b"r"])).unwrap();
        assert_eq!(encode_signature(&p, &sig).unwrap().len() - HEADER_LEN, 176);
    }

    #[test]
    fn public_payload_at_m16() {
        let p = Params::new(16, 8, 3, 2).unwrap();
        let (_, pk) = keypair(2, p);
        assert_eq!(encode_public(&pk).len() - HEADER_LEN, 1536);
    }

    #[test]
    fn sizes_follow_the_closed_forms() {
        for m in [2usize, 4, 6, 8, 16] {
            for l in [3usize, 8, 16] {
                for q in [3usize, 4] {
                    for t in [2usize, 3] {
                        let Ok(p) = Params::new(m, l, q, t) else { continue };
                        let s = SizeTable::for_params(&p);
                        assert_eq!(s.beta, (2 * l * m * m * q).div_ceil(8));
                        assert_eq!(s.x, (l * m).div_ceil(8));
                        assert_eq!(s.psi, (t * q * m * m).div_ceil(8));
                        assert_eq!(s.r, 32 * t);
                    }
                }
            }
        }
    }

    #[test]
    fn round_trips_at_odd_widths() {
        let p = Params::new(6, 5, 3, 2).unwrap();
        let (sk, pk) = keypair(3, p);
        assert_eq!(decode_private(&encode_private(&sk)).unwrap(), sk);
        assert_eq!(decode_public(&encode_public(&pk)).unwrap(), pk);
        let sig = sign(&sk, b"odd", &mut ByteStream::new(&[b"r"])).unwrap();
        let enc = encode_signature(&p, &sig).unwrap();
        assert_eq!(decode_signature(&enc).unwrap(), (p, sig));
    }

    #[test]
    fn header_errors() {
        let (sk, pk) = keypair(4, Preset::Lineture128.params());
        let mut bytes = encode_public(&pk);
        bytes[0] ^= 1;
        assert!(matches!(decode_public(&bytes), Err(Error::Malformed(_))));

        let mut bytes = encode_public(&pk);
        bytes[4] = 2;
        assert!(matches!(decode_public(&bytes), Err(Error::Malformed(_))));

        let bytes = encode_public(&pk);
        assert!(matches!(decode_private(&bytes), Err(Error::Malformed(_))));

        let mut bytes = encode_public(&pk);
        bytes[8] = 2;
        assert!(matches!(decode_public(&bytes), Err(Error::Malformed(_))));

        let bytes = encode_private(&sk);
        assert!(matches!(
            decode_private(&bytes[..bytes.len() - 1]),
            Err(Error::Truncated { .. })
        ));
        assert!(matches!(decode_public(&bytes[..5]), Err(Error::Truncated { .. })));
    }

    #[test]
    fn private_key_beta_must_match_seed() {
        let (sk, _) = keypair(5, Preset::Lineture128.params());
        let mut bytes = encode_private(&sk);
        let last = bytes.len() - 1;
        bytes[last] ^= 0x10;
        assert!(matches!(decode_private(&bytes), Err(Error::Malformed(_))));
    }

    #[test]
    fn nonzero_padding_is_rejected() {
        let p = Params::new(6, 5, 3, 2).unwrap();
        let (sk, _) = keypair(6, p);
        let sig = sign(&sk, b"pad", &mut ByteStream::new(&[b"r"])).unwrap();
        let mut enc = encode_signature(&p, &sig).unwrap();
        // x is 30 bits in 4 bytes; the last two bits are padding
        enc[HEADER_LEN + 3] |= 0x01;
        assert!(matches!(decode_signature(&enc), Err(Error::Malformed(_))));
    }

    #[test]
    fn presets_parse() {
        for p in Preset::ALL {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
        assert!("lineture512".parse::<Preset>().is_err());
        assert_eq!(Preset::Lineture256.params().t(), 5);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn codec_round_trip(seed in any::<[u8; 32]>(), preset in 0usize..3, msg in proptest::collection::vec(any::<u8>(), 0..64)) {
            let p = Preset::ALL[preset].params();
            let sk = PrivateKey::generate(p, seed).unwrap();
            let pk = sk.public_key().unwrap();
            let enc = encode_private(&sk);
            prop_assert_eq!(decode_private(&enc).unwrap(), sk.clone());
            prop_assert_eq!(encode_private(&decode_private(&enc).unwrap()), enc);
            prop_assert_eq!(decode_public(&encode_public(&pk)).unwrap(), pk);
            let sig = sign(&sk, &msg, &mut ByteStream::new(&[&seed])).unwrap();
            let enc = encode_signature(&p, &sig).unwrap();
            prop_assert_eq!(decode_signature(&enc).unwrap(), (p, sig));
        }
    }
}
