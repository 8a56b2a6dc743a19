use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lineture::attacklab::{
    collision_budget, factorization_ambiguity, forgery_montecarlo, secrecy_report, SecrecyReport,
};
use lineture::codec::{
    decode_private, decode_public, decode_signature, encode_private, encode_public, encode_signature, SizeTable,
};
use lineture::keyforge::SEED_LEN;
use lineture::{sign, verify, ByteStream, Params, Preset, PrivateKey, RejectReason, Verdict};
use rand::RngCore;

const EXIT_REJECT: u8 = 1;
const EXIT_MALFORMED: u8 = 2;
const EXIT_USAGE: u8 = 64;
const EXIT_IO: u8 = 74;

#[derive(Parser)]
#[command(
    name = "lineture",
    version,
    about = "LINEture keys, signatures and small-scale analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a key pair as key.priv / key.pub
    Keygen {
        #[command(flatten)]
        params: ParamArgs,
        /// 32-byte seed as hex; random when omitted
        #[arg(long)]
        seed: Option<String>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Sign a message file
    Sign {
        #[arg(long)]
        key: PathBuf,
        #[arg(long)]
        msg: PathBuf,
        /// Hex seed for the signing nonces, for reproducible signatures
        #[arg(long)]
        rng_seed: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Verify a signature; exit 0 accept, 1 reject, 2 malformed
    Verify {
        #[arg(long = "pub")]
        public: PathBuf,
        #[arg(long)]
        msg: PathBuf,
        #[arg(long)]
        sig: PathBuf,
    },
    /// Print sizes (bytes) and secrecy estimates (bits) for a parameter set
    Params {
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Small-scale security experiments
    Analyze {
        #[command(subcommand)]
        what: Analysis,
    },
}

#[derive(Args)]
struct ParamArgs {
    #[arg(long, conflicts_with_all = ["m", "l", "q", "t"])]
    preset: Option<Preset>,
    #[arg(long, requires_all = ["l", "q", "t"])]
    m: Option<usize>,
    #[arg(long)]
    l: Option<usize>,
    #[arg(long)]
    q: Option<usize>,
    #[arg(long)]
    t: Option<usize>,
}

#[derive(Args)]
struct AnalysisParams {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    l: usize,
    #[arg(long)]
    q: usize,
    #[arg(long)]
    t: usize,
}

#[derive(Subcommand)]
enum Analysis {
    /// Closed-form secrecy estimates
    Secrecy {
        #[command(flatten)]
        params: AnalysisParams,
        /// log2 of the accumulated signature base
        #[arg(long, default_value_t = 32.0)]
        log2_n: f64,
    },
    /// Monte Carlo forgery rate at micro scale
    ForgeryMc {
        #[command(flatten)]
        params: AnalysisParams,
        #[arg(long, default_value_t = 200_000)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Exhaustive count of master matrices consistent with two session keys
    Rank {
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[arg(long, default_value_t = 2)]
        q: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Drop the shared-first-block constraint (one session key)
        #[arg(long)]
        single_key: bool,
    },
    /// Collision-attack budget after accumulating signatures
    Collision {
        #[command(flatten)]
        params: AnalysisParams,
        /// Signatures collected per second
        #[arg(long, default_value_t = 1.0)]
        rate: f64,
        #[arg(long, default_value_t = 100.0)]
        years: f64,
    },
}

enum Failure {
    Usage(String),
    Io(String),
    Malformed(String),
}

impl From<lineture::Error> for Failure {
    fn from(e: lineture::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome = Result<u8, Failure>;

impl ParamArgs {
    fn resolve(&self) -> Result<Params, Failure> {
        if let Some(p) = self.preset {
            return Ok(p.params());
        }
        match (self.m, self.l, self.q, self.t) {
            (Some(m), Some(l), Some(q), Some(t)) => Ok(Params::new(m, l, q, t)?),
            _ => Err(Failure::Usage("give --preset NAME or all of --m --l --q --t".into())),
        }
    }
}

impl AnalysisParams {
    fn resolve(&self) -> Result<Params, Failure> {
        Ok(Params::for_analysis(self.m, self.l, self.q, self.t)?)
    }
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn parse_hex(s: &str, what: &str) -> Result<Vec<u8>, Failure> {
    hex::decode(s).map_err(|e| Failure::Usage(format!("{what}: {e}")))
}

fn keygen(params: Params, seed: Option<&str>, out_dir: &Path) -> Outcome {
    let mut bytes = [0u8; SEED_LEN];
    match seed {
        Some(s) => {
            let v = parse_hex(s, "--seed")?;
            bytes = v.try_into().map_err(|_| {
                Failure::Usage(format!("--seed must be {SEED_LEN} bytes ({} hex digits)", 2 * SEED_LEN))
            })?;
        }
        None => rand::thread_rng().fill_bytes(&mut bytes),
    }
    let sk = PrivateKey::generate(params, bytes)?;
    let pk = sk.public_key()?;
    fs::create_dir_all(out_dir).map_err(|e| Failure::Io(format!("{}: {e}", out_dir.display())))?;
    write(&out_dir.join("key.priv"), &encode_private(&sk))?;
    write(&out_dir.join("key.pub"), &encode_public(&pk))?;
    Ok(0)
}

fn sign_file(key: &Path, msg: &Path, rng_seed: Option<&str>, out: &Path) -> Outcome {
    let sk = decode_private(&read(key)?).map_err(|e| Failure::Malformed(format!("{}: {e}", key.display())))?;
    let msg = read(msg)?;
    let seed = match rng_seed {
        Some(s) => parse_hex(s, "--rng-seed")?,
        None => {
            let mut b = vec![0u8; 32];
            rand::thread_rng().fill_bytes(&mut b);
            b
        }
    };
    let mut rng = ByteStream::new(&[b"lineture-cli-sign", &seed]);
    let sig = sign(&sk, &msg, &mut rng)?;
    write(out, &encode_signature(sk.params(), &sig)?)?;
    Ok(0)
}

fn verify_file(public: &Path, msg: &Path, sig: &Path) -> Outcome {
    let pk = decode_public(&read(public)?).map_err(|e| Failure::Malformed(format!("{}: {e}", public.display())))?;
    let msg = read(msg)?;
    let (params, sig) = decode_signature(&read(sig)?).map_err(|e| Failure::Malformed(format!("signature: {e}")))?;
    if params != *pk.params() {
        return Err(Failure::Malformed(
            "signature and public key use different parameters".into(),
        ));
    }
    match verify(&pk, &msg, &sig) {
        Verdict::Accept => {
            println!("accept");
            Ok(0)
        }
        Verdict::Reject(RejectReason::Malformed) => Err(Failure::Malformed("signature shape does not match".into())),
        Verdict::Reject(reason) => {
            println!("reject\t{reason:?}");
            Ok(EXIT_REJECT)
        }
    }
}

fn print_params(params: Params) -> Outcome {
    let s = SizeTable::for_params(&params);
    let (m, l, q, t) = (params.m(), params.l(), params.q(), params.t());
    println!("m\tl\tq\tt\tbeta\tprivate\tB\tx\tpsi\tr\tsignature");
    println!(
        "{m}\t{l}\t{q}\t{t}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
        s.beta,
        s.private_key(),
        s.public,
        s.x,
        s.psi,
        s.r,
        s.signature()
    );
    println!();
    println!("{}", SecrecyReport::HEADER);
    println!("{}", secrecy_report(&params, 32.0).row());
    Ok(0)
}

fn analyze(what: &Analysis) -> Outcome {
    match what {
        Analysis::Secrecy { params, log2_n } => {
            let r = secrecy_report(&params.resolve()?, *log2_n);
            println!("{}\tL_x\tL_S\tL_psi_t", SecrecyReport::HEADER);
            println!("{}\t{}\t{}\t{}", r.row(), r.len_x, r.len_s, r.len_psi_t);
        }
        Analysis::ForgeryMc { params, trials, seed } => {
            let p = params.resolve()?;
            let s = forgery_montecarlo(&p, *trials, *seed)?;
            let (lo, hi) = s.band();
            println!("# random session keys, redrawn until every substitution inverts; rate is conditional on that");
            println!(
                "m\tl\tq\tt\ttrials\tsuccesses\trate\ttarget\tband_lo\tband_hi\tin_band\trejected_draws\texhausted"
            );
            println!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{:.6}\t{:.6}\t{lo:.6}\t{hi:.6}\t{}\t{}\t{}",
                p.m(),
                p.l(),
                p.q(),
                p.t(),
                s.trials,
                s.successes,
                s.rate(),
                s.target,
                s.in_band(),
                s.rejected_draws,
                s.exhausted
            );
        }
        Analysis::Rank { m, q, seed, single_key } => {
            let r = factorization_ambiguity(*m, *q, *seed, !single_key)?;
            println!("m\tq\ttwo_keys\tcandidates\tinvertible\tsolutions\tlog2_solutions\tplanted_found");
            println!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{:.2}\t{}",
                r.m,
                r.q,
                r.two_keys,
                r.candidates,
                r.invertible,
                r.solutions,
                r.log2_solutions(),
                r.planted_found
            );
        }
        Analysis::Collision { params, rate, years } => {
            if !(*rate >= 0.0 && *years >= 0.0) {
                return Err(Failure::Usage("--rate and --years must be nonnegative".into()));
            }
            let p = params.resolve()?;
            let n = rate * years * 365.25 * 86400.0;
            println!("m\tt\tsignatures\tlog2_N\tbudget_bits");
            println!(
                "{}\t{}\t{n:.0}\t{:.2}\t{:.2}",
                p.m(),
                p.t(),
                if n > 1.0 { n.log2() } else { 0.0 },
                collision_budget(&p, *rate, *years)
            );
        }
    }
    Ok(0)
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Keygen { params, seed, out_dir } => keygen(params.resolve()?, seed.as_deref(), &out_dir),
        Command::Sign {
            key,
            msg,
            rng_seed,
            out,
        } => sign_file(&key, &msg, rng_seed.as_deref(), &out),
        Command::Verify { public, msg, sig } => verify_file(&public, &msg, &sig),
        Command::Params { params } => print_params(params.resolve()?),
        Command::Analyze { what } => analyze(&what),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_IO)
        }
        Err(Failure::Malformed(msg)) => {
            eprintln!("malformed: {msg}");
            ExitCode::from(EXIT_MALFORMED)
        }
    }
}
