//! Command-line surface for the dihedral crate.
//!
//! Subcommands: `ring factor` (prime splitting in a monogenic order),
//! `pairing decompose` (hyperbolic decomposition with evenness certificate),
//! `sandbox verify` (seeded parity-theorem trials), `tower report` (the
//! local-constant engine end to end). All structured input is JSON; output
//! is plain text or JSON. Identical seeds and inputs produce byte-identical
//! output.
//!
//! Exit codes: 0 success, 1 input error, 2 hypothesis violation,
//! 3 generation exhaustion, 4 property violation, 5 inconclusive.

use clap::{Args, Parser, Subcommand, ValueEnum};
use dihedral::linalg::ResidueMatrix;
use dihedral::pairing::{Pairing, PairingError, PairingLiteral};
use dihedral::parity::{tower_report, BoundStatement, ParityError, PlaceRecord, TowerDescriptor};
use dihedral::poly::IntPoly;
use dihedral::ring::{factor_p, NumberRing, RingError, SplitRing};
use dihedral::rng::SplitMix64;
use dihedral::sandbox::{
    generate_config, random_shape, verify_localization_ranks, verify_parity_congruence, SandboxError,
    ShapeSpec,
};
use dihedral::torsion::BaseRing;
use dihedral::twist::AbelianGroup;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::process::ExitCode;

const EXIT_INPUT: u8 = 1;
const EXIT_HYPOTHESIS: u8 = 2;
const EXIT_EXHAUSTION: u8 = 3;
const EXIT_PROPERTY: u8 = 4;
const EXIT_INCONCLUSIVE: u8 = 5;

#[derive(Parser)]
#[command(name = "dihedral", about = "Exact rank and parity calculus for dihedral towers")]
struct Cli {
    /// Output format for reports.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Number-ring utilities.
    Ring {
        #[command(subcommand)]
        cmd: RingCmd,
    },
    /// Pairing utilities.
    Pairing {
        #[command(subcommand)]
        cmd: PairingCmd,
    },
    /// Seeded synthetic Selmer configurations.
    Sandbox {
        #[command(subcommand)]
        cmd: SandboxCmd,
    },
    /// Tower parity reports.
    Tower {
        #[command(subcommand)]
        cmd: TowerCmd,
    },
}

#[derive(Subcommand)]
enum RingCmd {
    /// Factor an odd unramified prime in the order `Z[x]/(f)`.
    Factor(RingFactorArgs),
}

#[derive(Args)]
struct RingFactorArgs {
    /// Coefficients of the monic defining polynomial, lowest degree first.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    f: Vec<i64>,
    /// Coefficients of the involution image of the generator.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    dagger: Vec<i64>,
    /// The rational prime to factor.
    #[arg(long)]
    p: u64,
}

#[derive(Subcommand)]
enum PairingCmd {
    /// Hyperbolic decomposition of a pairing file, with certificate.
    Decompose(PairingDecomposeArgs),
}

#[derive(Args)]
struct PairingDecomposeArgs {
    /// Pairing file (JSON: ring spec plus pairing literal).
    #[arg(long)]
    input: String,
    /// Re-verify the decomposition by exhaustive enumeration.
    #[arg(long)]
    verify: bool,
}

#[derive(Subcommand)]
enum SandboxCmd {
    /// Run seeded configurations through the parity verifications.
    Verify(SandboxVerifyArgs),
}

#[derive(Args)]
struct SandboxVerifyArgs {
    /// Number of seeded trials.
    #[arg(long, default_value_t = 10)]
    trials: u64,
    /// Master seed; trial seeds derive from it.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Odd prime for the residue ring.
    #[arg(long, default_value_t = 3)]
    p: u64,
    /// Defining polynomial of the order (monic, lowest degree first).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [1i64, 0, 1])]
    f: Vec<i64>,
    /// Involution image of the generator.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [0i64, -1])]
    dagger: Vec<i64>,
    /// Replay a fixture file (JSON) instead of generating shapes.
    #[arg(long)]
    replay: Option<String>,
}

#[derive(Subcommand)]
enum TowerCmd {
    /// Resolve every cyclic twist of a tower descriptor and report bounds.
    Report(TowerReportArgs),
}

#[derive(Args)]
struct TowerReportArgs {
    /// Tower descriptor file (JSON).
    #[arg(long)]
    input: String,
}

// ---------------------------------------------------------------------------
// File formats
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum RingSpec {
    /// `O/p^level O` for a monogenic order with involution.
    NumberRing { f: Vec<i64>, dagger: Vec<i64>, p: u64, level: u32 },
    /// A single Galois local ring `(Z/p^level)[x]/(modulus)`.
    LocalRing { p: u64, level: u32, modulus: Vec<i64> },
}

impl RingSpec {
    fn to_split_ring(&self) -> Result<SplitRing, RingError> {
        match self {
            RingSpec::NumberRing { f, dagger, p, level } => {
                let ring = NumberRing::new(IntPoly::from_i64(f), IntPoly::from_i64(dagger))?;
                SplitRing::from_number_ring(&ring, *p, *level)
            }
            RingSpec::LocalRing { p, level, modulus } => {
                SplitRing::from_local_polynomial(*p, *level, &IntPoly::from_i64(modulus))
            }
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct PairingFile {
    ring: RingSpec,
    pairing: PairingLiteral,
}

#[derive(Debug, Serialize, Deserialize)]
struct TowerRingSpec {
    f: Vec<i64>,
    dagger: Vec<i64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TowerFile {
    group: Vec<u64>,
    ring: TowerRingSpec,
    p_list: Vec<u64>,
    places: Vec<PlaceRecord>,
    #[serde(default)]
    assume_conjecture: bool,
    #[serde(default)]
    base_parity: BTreeMap<u64, Vec<u8>>,
    #[serde(default)]
    elliptic: bool,
    #[serde(default)]
    cm_field_not_in_base: bool,
}

impl TowerFile {
    fn to_descriptor(&self) -> Result<TowerDescriptor, String> {
        let galois_group =
            AbelianGroup::new(self.group.clone()).map_err(|e| format!("group: {e}"))?;
        let ring =
            NumberRing::new(IntPoly::from_i64(&self.ring.f), IntPoly::from_i64(&self.ring.dagger))
                .map_err(|e| format!("ring: {e}"))?;
        Ok(TowerDescriptor {
            galois_group,
            ring,
            p_list: self.p_list.clone(),
            places: self.places.clone(),
            assume_conjecture: self.assume_conjecture,
            base_parity: self.base_parity.clone(),
            elliptic: self.elliptic,
            cm_field_not_in_base: self.cm_field_not_in_base,
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct FaultSpec {
    place: usize,
    f_x_rows: Vec<Vec<u64>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SandboxFixture {
    ring: RingSpec,
    shape: ShapeSpec,
    seed: u64,
    #[serde(default)]
    faults: Vec<FaultSpec>,
}

// ---------------------------------------------------------------------------
// Command implementations
// ---------------------------------------------------------------------------

struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure { code, message: message.into() }
}

fn ring_error_code(e: &RingError) -> u8 {
    match e {
        RingError::EvenPrime | RingError::NotPrime(_) | RingError::Ramified { .. } => {
            EXIT_HYPOTHESIS
        }
        _ => EXIT_INPUT,
    }
}

#[derive(Serialize)]
struct FactorReport {
    p: u64,
    factors: Vec<Vec<u64>>,
    degrees: Vec<usize>,
    dagger_permutation: Vec<usize>,
}

fn cmd_ring_factor(args: &RingFactorArgs, format: Format) -> Result<String, Failure> {
    if args.f.is_empty() {
        return Err(fail(EXIT_INPUT, "--f must list polynomial coefficients"));
    }
    let ring = NumberRing::new(IntPoly::from_i64(&args.f), IntPoly::from_i64(&args.dagger))
        .map_err(|e| fail(ring_error_code(&e), format!("invalid ring: {e}")))?;
    let split = factor_p(&ring, args.p)
        .map_err(|e| fail(ring_error_code(&e), format!("factorization refused: {e}")))?;
    let report = FactorReport {
        p: args.p,
        factors: split.factors().iter().map(|g| g.coeffs().to_vec()).collect(),
        degrees: (0..split.num_primes()).map(|i| split.residue_degree(i)).collect(),
        dagger_permutation: split.dagger_perm().to_vec(),
    };
    match format {
        Format::Json => Ok(serde_json::to_string_pretty(&report).unwrap()),
        Format::Text => {
            let mut out = String::new();
            writeln!(out, "p = {} splits into {} prime(s):", report.p, report.factors.len())
                .unwrap();
            for (i, g) in report.factors.iter().enumerate() {
                writeln!(
                    out,
                    "  prime {}: factor coefficients {:?} (degree {})",
                    i, g, report.degrees[i]
                )
                .unwrap();
            }
            writeln!(out, "involution permutation: {:?}", report.dagger_permutation).unwrap();
            Ok(out)
        }
    }
}

fn pairing_error_code(e: &PairingError) -> u8 {
    match e {
        PairingError::GramShape | PairingError::ValueNotKilled { .. } => EXIT_INPUT,
        _ => EXIT_HYPOTHESIS,
    }
}

#[derive(Serialize)]
struct DecomposeReport {
    pairs: Vec<PairSummary>,
    layer_ranks: Vec<usize>,
    all_layers_even: bool,
    verified_exhaustively: bool,
}

#[derive(Serialize)]
struct PairSummary {
    x: Vec<u64>,
    y: Vec<u64>,
    order_exponent: u32,
    component: usize,
}

fn cmd_pairing_decompose(args: &PairingDecomposeArgs, format: Format) -> Result<String, Failure> {
    let text = std::fs::read_to_string(&args.input)
        .map_err(|e| fail(EXIT_INPUT, format!("cannot read {}: {e}", args.input)))?;
    let file: PairingFile = serde_json::from_str(&text)
        .map_err(|e| fail(EXIT_INPUT, format!("malformed file: {e}")))?;
    let split = file
        .ring
        .to_split_ring()
        .map_err(|e| fail(ring_error_code(&e), format!("invalid ring: {e}")))?;
    let pairing = Pairing::from_literal(BaseRing::Split(split), &file.pairing)
        .map_err(|e| fail(pairing_error_code(&e), format!("invalid pairing: {e}")))?;
    let decomposition = pairing
        .hyperbolic_decompose()
        .map_err(|e| fail(EXIT_HYPOTHESIS, format!("decomposition refused: {e}")))?;
    let mut verified = false;
    if args.verify {
        let size = pairing.domain().size();
        if size > 1 << 20 {
            return Err(fail(EXIT_INPUT, "module too large for exhaustive verification"));
        }
        let prime_elems = decomposition.m_prime.enumerate_span(size as usize);
        let double_elems = decomposition.m_double.enumerate_span(size as usize);
        let mut seen = std::collections::BTreeSet::new();
        let ctx = pairing.domain().ctx();
        for a in &prime_elems {
            for b in &double_elems {
                let sum: Vec<u64> = a.iter().zip(b).map(|(&x, &y)| ctx.add(x, y)).collect();
                seen.insert(sum);
            }
        }
        if seen.len() as u128 != size {
            return Err(fail(
                EXIT_PROPERTY,
                "exhaustive check failed: halves do not decompose the module",
            ));
        }
        verified = true;
    }
    let report = DecomposeReport {
        pairs: decomposition
            .pairs
            .iter()
            .map(|p| PairSummary {
                x: p.x.clone(),
                y: p.y.clone(),
                order_exponent: p.order_exp,
                component: p.component,
            })
            .collect(),
        layer_ranks: decomposition.layer_ranks.0.clone(),
        all_layers_even: decomposition.layer_ranks.is_even(),
        verified_exhaustively: verified,
    };
    match format {
        Format::Json => Ok(serde_json::to_string_pretty(&report).unwrap()),
        Format::Text => {
            let mut out = String::new();
            writeln!(out, "hyperbolic pairs: {}", report.pairs.len()).unwrap();
            for (i, p) in report.pairs.iter().enumerate() {
                writeln!(
                    out,
                    "  pair {}: x={:?} y={:?} order p^{} component {}",
                    i, p.x, p.y, p.order_exponent, p.component
                )
                .unwrap();
            }
            writeln!(
                out,
                "layer ranks: {:?} (even: {})",
                report.layer_ranks, report.all_layers_even
            )
            .unwrap();
            if report.verified_exhaustively {
                writeln!(out, "exhaustive verification: ok").unwrap();
            }
            Ok(out)
        }
    }
}

fn sandbox_error_code(e: &SandboxError) -> u8 {
    match e {
        SandboxError::SearchExhausted { .. } => EXIT_EXHAUSTION,
        SandboxError::CapExceeded(_) | SandboxError::EmptyShape => EXIT_INPUT,
        SandboxError::InvariantViolation(_) => EXIT_PROPERTY,
    }
}

#[derive(Serialize)]
struct SandboxSummary {
    trials: u64,
    passed: u64,
    master_seed: u64,
    vacuous: bool,
}

fn cmd_sandbox_verify(args: &SandboxVerifyArgs, format: Format) -> Result<String, Failure> {
    if let Some(path) = &args.replay {
        return replay_fixture(path, format);
    }
    let ring = NumberRing::new(IntPoly::from_i64(&args.f), IntPoly::from_i64(&args.dagger))
        .map_err(|e| fail(ring_error_code(&e), format!("invalid ring: {e}")))?;
    let split = SplitRing::from_number_ring(&ring, args.p, 1)
        .map_err(|e| fail(ring_error_code(&e), format!("invalid ring at p: {e}")))?;
    let mut master = SplitMix64::new(args.seed);
    let mut lines: Vec<String> = Vec::new();
    let mut passed = 0u64;
    for trial in 0..args.trials {
        let mut trial_rng = master.fork();
        let shape = random_shape(&split, &mut trial_rng);
        let config_seed = trial_rng.next_u64();
        let cfg = generate_config(&split, &shape, config_seed)
            .map_err(|e| fail(sandbox_error_code(&e), format!("trial {trial}: {e}")))?;
        let r13 = verify_localization_ranks(&cfg);
        let r14 = verify_parity_congruence(&cfg)
            .map_err(|e| fail(EXIT_PROPERTY, format!("trial {trial}: {e}")))?;
        let ok = r13.holds && r13.bcc_holds && r14.all_hold();
        if !ok {
            lines.push(format!(
                "trial {trial} seed {config_seed:#018x}: FAIL (ranks {}/{} congruence {})",
                r13.holds,
                r13.bcc_holds,
                r14.all_hold()
            ));
            let mut out = lines.join("\n");
            out.push('\n');
            return Err(fail(EXIT_PROPERTY, format!("{out}parity identity violated")));
        }
        passed += 1;
        lines.push(format!("trial {trial} seed {config_seed:#018x}: ok"));
    }
    let summary =
        SandboxSummary { trials: args.trials, passed, master_seed: args.seed, vacuous: args.trials == 0 };
    match format {
        Format::Json => Ok(serde_json::to_string_pretty(&summary).unwrap()),
        Format::Text => {
            let mut out = String::new();
            for l in &lines {
                writeln!(out, "{l}").unwrap();
            }
            writeln!(out, "{}/{} trials passed (seed {})", passed, args.trials, args.seed).unwrap();
            if summary.vacuous {
                writeln!(out, "warning: zero trials requested; pass is vacuous").unwrap();
            }
            Ok(out)
        }
    }
}

fn replay_fixture(path: &str, format: Format) -> Result<String, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| fail(EXIT_INPUT, format!("cannot read {path}: {e}")))?;
    let fixture: SandboxFixture = serde_json::from_str(&text)
        .map_err(|e| fail(EXIT_INPUT, format!("malformed fixture: {e}")))?;
    let split = fixture
        .ring
        .to_split_ring()
        .map_err(|e| fail(ring_error_code(&e), format!("invalid ring: {e}")))?;
    let mut cfg = generate_config(&split, &fixture.shape, fixture.seed)
        .map_err(|e| fail(sandbox_error_code(&e), format!("replay: {e}")))?;
    for fault in &fixture.faults {
        let gens = ResidueMatrix::from_rows(cfg.module().ctx(), &fault.f_x_rows);
        cfg.override_f_x(fault.place, gens);
    }
    if !fixture.faults.is_empty() {
        if let Err(e) = cfg.validate() {
            return Err(fail(EXIT_PROPERTY, format!("replay violates invariants: {e}")));
        }
    }
    let r13 = verify_localization_ranks(&cfg);
    let r14 = verify_parity_congruence(&cfg)
        .map_err(|e| fail(EXIT_PROPERTY, format!("replay: {e}")))?;
    if !(r13.holds && r13.bcc_holds && r14.all_hold()) {
        return Err(fail(
            EXIT_PROPERTY,
            format!(
                "replayed fixture violates the parity identities: ranks hold={} chain={} \
                 kernel={} even={} congruence={}",
                r13.holds, r13.bcc_holds, r14.kernel_matches, r14.h_even, r14.congruence_holds
            ),
        ));
    }
    match format {
        Format::Json => Ok(serde_json::to_string_pretty(&serde_json::json!({
            "replay": path,
            "localization_ranks": r13,
            "parity_congruence": r14,
        }))
        .unwrap()),
        Format::Text => Ok(format!("replayed fixture {path}: all identities hold\n")),
    }
}

fn parity_error_code(e: &ParityError) -> u8 {
    match e {
        ParityError::ConjectureRequired | ParityError::UnresolvedPlace { .. } => EXIT_INCONCLUSIVE,
        _ => EXIT_INPUT,
    }
}

fn cmd_tower_report(args: &TowerReportArgs, format: Format) -> Result<String, Failure> {
    let text = std::fs::read_to_string(&args.input)
        .map_err(|e| fail(EXIT_INPUT, format!("cannot read {}: {e}", args.input)))?;
    let file: TowerFile = serde_json::from_str(&text)
        .map_err(|e| fail(EXIT_INPUT, format!("malformed descriptor: {e}")))?;
    let descriptor = file.to_descriptor().map_err(|e| fail(EXIT_INPUT, e))?;
    let report = tower_report(&descriptor)
        .map_err(|e| fail(parity_error_code(&e), format!("descriptor rejected: {e}")))?;
    let inconclusive = matches!(report.bound, BoundStatement::NoConclusion { .. });
    let rendered = match format {
        Format::Json => serde_json::to_string_pretty(&report).unwrap(),
        Format::Text => report.to_string(),
    };
    if inconclusive {
        Err(fail(EXIT_INCONCLUSIVE, rendered))
    } else {
        Ok(rendered)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_INPUT,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.cmd {
        Cmd::Ring { cmd: RingCmd::Factor(args) } => cmd_ring_factor(args, cli.format),
        Cmd::Pairing { cmd: PairingCmd::Decompose(args) } => {
            cmd_pairing_decompose(args, cli.format)
        }
        Cmd::Sandbox { cmd: SandboxCmd::Verify(args) } => cmd_sandbox_verify(args, cli.format),
        Cmd::Tower { cmd: TowerCmd::Report(args) } => cmd_tower_report(args, cli.format),
    };
    match result {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(Failure { code, message }) => {
            eprintln!("{message}");
            ExitCode::from(code)
        }
    }
}
