//! The `commsq` command line.
//!
//! Exit codes are shared by every subcommand: 0 for a positive answer
//! (biunitary, isolated, witnesses found, converged, reproduction passed),
//! 1 for a negative or inconclusive one, 2 for usage and input errors.
//! JSON goes to stdout with a fixed key order, diagnostics to stderr.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::cmatrix::DiagProjection;
use crate::families::{find_block_pairs, find_commuting_pairs, FamilySpec, FamilySpecRecord};
use crate::hadamard::{bjorck7, circulant, fourier, petrescu_angle, qr_circulant, verify_biunitary, OffResidue};
use crate::io::{MatrixFile, MatrixFormat};
use crate::search::{local_search, SearchConfig, SearchResult};
use crate::spancert::{certify_isolation, reproduce_bjorck7, Verdict};
use crate::{ComplexMatrix, Policy, C64};

pub const EXIT_POSITIVE: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "commsq", version, about = "Biunitary matrices: isolation certificates, families, phase search")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a built-in matrix.
    Gen(GenArgs),
    /// Check unimodularity and unitarity.
    Verify {
        file: PathBuf,
        #[command(flatten)]
        policy: PolicyArgs,
    },
    /// Span-condition rank certificate.
    Certify {
        file: PathBuf,
        #[command(flatten)]
        policy: PolicyArgs,
    },
    /// List commuting pairs or block quadruples.
    Pairs {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = PairMode::Commuting)]
        mode: PairMode,
        #[command(flatten)]
        policy: PolicyArgs,
    },
    /// Evaluate a family member from a witness spec.
    Family {
        file: PathBuf,
        #[arg(long)]
        spec: PathBuf,
        /// `t` for constr1 specs, the angle of λ (radians) for constr2.
        #[arg(long, allow_hyphen_values = true)]
        param: f64,
        /// Output format; defaults to the format of FILE.
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
        #[command(flatten)]
        policy: PolicyArgs,
    },
    /// Phase-space local search for block-quadruple bases.
    Search(SearchArgs),
    /// Rank and minor determinant for the order-7 quadratic-residue circulant.
    Repro {
        #[command(flatten)]
        policy: PolicyArgs,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GenKind {
    Fourier,
    Petrescu,
    Bjorck7,
    QrCirculant,
    Circulant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Cart,
    Phase,
}

impl From<FormatArg> for MatrixFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Cart => MatrixFormat::Cart,
            FormatArg::Phase => MatrixFormat::Phase,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PairMode {
    Commuting,
    Block,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(value_enum)]
    pub kind: GenKind,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub lambda_angle: f64,
    /// Off-residue value `re,im`, or `solve`.
    #[arg(long, default_value = "solve", allow_hyphen_values = true)]
    pub a: String,
    /// First row of a circulant: whitespace-separated `re,im` tokens.
    #[arg(long)]
    pub row: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Cart)]
    pub format: FormatArg,
    #[command(flatten)]
    pub policy: PolicyArgs,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// Order; taken from --init when omitted.
    #[arg(long)]
    pub n: Option<usize>,
    /// `p1/p2/p3/p4`, each a comma-separated index list (possibly empty).
    #[arg(long)]
    pub masks: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub starts: usize,
    #[arg(long, default_value_t = 10_000)]
    pub max_iters: usize,
    /// Start from the phases of this matrix instead of a random point.
    #[arg(long)]
    pub init: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0.1)]
    pub step0: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol_obj: f64,
}

#[derive(Debug, Clone, Args)]
pub struct PolicyArgs {
    #[arg(long)]
    pub tol_entry: Option<f64>,
    #[arg(long)]
    pub tol_unitary: Option<f64>,
    #[arg(long)]
    pub rank_cut: Option<f64>,
    #[arg(long)]
    pub cert_gap: Option<f64>,
}

impl PolicyArgs {
    pub fn resolve(&self) -> anyhow::Result<Policy> {
        let d = Policy::default();
        let p = Policy {
            tol_entry: self.tol_entry.unwrap_or(d.tol_entry),
            tol_unitary: self.tol_unitary.unwrap_or(d.tol_unitary),
            rank_rel_cut: self.rank_cut.unwrap_or(d.rank_rel_cut),
            cert_gap_min: self.cert_gap.unwrap_or(d.cert_gap_min),
        };
        p.validate()?;
        Ok(p)
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_POSITIVE };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_ERROR
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> anyhow::Result<i32> {
    match cmd {
        Command::Gen(a) => cmd_gen(&a, out),
        Command::Verify { file, policy } => {
            let policy = policy.resolve()?;
            let v = verify_biunitary(&read_matrix(&file)?.matrix(), &policy)?;
            emit_json(out, &v)?;
            Ok(verdict_code(v.is_biunitary))
        }
        Command::Certify { file, policy } => {
            let policy = policy.resolve()?;
            let cert = certify_isolation(&read_matrix(&file)?.matrix(), &policy)?;
            emit_json(out, &cert)?;
            Ok(verdict_code(cert.verdict == Verdict::Isolated))
        }
        Command::Pairs { file, mode, policy } => {
            let policy = policy.resolve()?;
            let u = read_matrix(&file)?.matrix();
            let base = file.display().to_string();
            let records: Vec<FamilySpecRecord> = match mode {
                PairMode::Commuting => find_commuting_pairs(&u, &policy)?
                    .into_iter()
                    .map(|s| FamilySpec::Constr1(s).to_record(&base))
                    .collect(),
                PairMode::Block => find_block_pairs(&u, &policy)?
                    .into_iter()
                    .map(|s| FamilySpec::Constr2(s).to_record(&base))
                    .collect(),
            };
            emit_json(out, &records)?;
            Ok(verdict_code(!records.is_empty()))
        }
        Command::Family { file, spec, param, format, policy } => {
            let policy = policy.resolve()?;
            let input = read_matrix(&file)?;
            let text = std::fs::read_to_string(&spec).with_context(|| format!("cannot read {}", spec.display()))?;
            let record: FamilySpecRecord =
                serde_json::from_str(&text).with_context(|| format!("invalid spec {}", spec.display()))?;
            let family = FamilySpec::from_record(&record, input.matrix())?;
            let member = family.member(param, &policy)?;
            let format = format.map(MatrixFormat::from).unwrap_or(input.format());
            let rendered = if param == 0.0 && format == input.format() {
                // the zero parameter returns the base itself
                input.render()
            } else {
                MatrixFile::from_matrix(&member, format)?.render()
            };
            out.write_all(rendered.as_bytes())?;
            Ok(EXIT_POSITIVE)
        }
        Command::Search(a) => cmd_search(&a, out),
        Command::Repro { policy } => {
            let policy = policy.resolve()?;
            let report = reproduce_bjorck7(&policy)?;
            emit_json(out, &report)?;
            writeln!(
                err,
                "order-7 quadratic-residue circulant: rank {} of expected {} (gap {:e}); \
                 {}x{} minor rank {}, |det| = {:e}; {}",
                report.rank,
                report.expected,
                report.gap,
                report.minor_order,
                report.minor_order,
                report.minor_rank,
                report.det_abs,
                if report.pass { "PASS" } else { "FAIL" }
            )?;
            Ok(verdict_code(report.pass))
        }
    }
}

fn verdict_code(positive: bool) -> i32 {
    if positive {
        EXIT_POSITIVE
    } else {
        EXIT_NEGATIVE
    }
}

fn emit_json<T: Serialize>(out: &mut dyn Write, value: &T) -> anyhow::Result<()> {
    serde_json::to_writer(&mut *out, value)?;
    out.write_all(b"\n")?;
    Ok(())
}

fn read_matrix(path: &Path) -> anyhow::Result<MatrixFile<f64>> {
    Ok(MatrixFile::read(path)?)
}

fn cmd_gen(a: &GenArgs, out: &mut dyn Write) -> anyhow::Result<i32> {
    let policy = a.policy.resolve()?;
    let need_n = || a.n.ok_or_else(|| anyhow!("--n is required for this kind"));
    let m: ComplexMatrix = match a.kind {
        GenKind::Fourier => fourier(need_n()?)?,
        GenKind::Petrescu => petrescu_angle(a.lambda_angle),
        GenKind::Bjorck7 => bjorck7(),
        GenKind::QrCirculant => {
            let off = if a.a == "solve" { OffResidue::Solve } else { OffResidue::Given(parse_complex(&a.a)?) };
            qr_circulant(need_n()?, off, &policy)?
        }
        GenKind::Circulant => {
            let path = a.row.as_ref().ok_or_else(|| anyhow!("--row is required for circulant"))?;
            let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
            let row = text
                .lines()
                .filter(|l| !l.trim_start().starts_with('#'))
                .flat_map(str::split_whitespace)
                .map(parse_complex)
                .collect::<anyhow::Result<Vec<C64>>>()?;
            if row.is_empty() {
                bail!("order must be ≥ 1");
            }
            circulant(&row)
        }
    };
    out.write_all(MatrixFile::from_matrix(&m, a.format.into())?.render().as_bytes())?;
    Ok(EXIT_POSITIVE)
}

fn parse_complex(s: &str) -> anyhow::Result<C64> {
    let (re, im) = s.split_once(',').ok_or_else(|| anyhow!("`{s}` is not of the form re,im"))?;
    let re: f64 = re.trim().parse().with_context(|| format!("bad real part in `{s}`"))?;
    let im: f64 = im.trim().parse().with_context(|| format!("bad imaginary part in `{s}`"))?;
    if !(re.is_finite() && im.is_finite()) {
        bail!("`{s}` is not finite");
    }
    Ok(C64::new(re, im))
}

/// `"0,1/2,3//"` → four masks of order `n`.
pub fn parse_masks(spec: &str, n: usize) -> anyhow::Result<[DiagProjection; 4]> {
    let parts: Vec<&str> = spec.split('/').collect();
    if parts.len() != 4 {
        bail!("--masks needs four `/`-separated index lists, got {}", parts.len());
    }
    let mut masks = Vec::with_capacity(4);
    for p in parts {
        let idx = p
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<usize>().with_context(|| format!("bad index `{t}` in --masks")))
            .collect::<anyhow::Result<Vec<usize>>>()?;
        masks.push(DiagProjection::from_indices(n, &idx)?);
    }
    let [a, b, c, d]: [DiagProjection; 4] = masks.try_into().expect("four masks");
    Ok([a, b, c, d])
}

fn cmd_search(a: &SearchArgs, out: &mut dyn Write) -> anyhow::Result<i32> {
    let init = a.init.as_ref().map(|p| read_matrix(p)).transpose()?;
    let n = match (a.n, &init) {
        (Some(n), Some(f)) if n != f.order() => bail!("--n {n} does not match the order {} of --init", f.order()),
        (Some(n), _) => n,
        (None, Some(f)) => f.order(),
        (None, None) => bail!("--n or --init is required"),
    };
    if a.starts == 0 {
        bail!("--starts must be ≥ 1");
    }
    let [p1, p2, p3, p4] = parse_masks(&a.masks, n)?;
    let mut base = SearchConfig::new(p1, p2, p3, p4);
    base.seed_phases = init.map(|f| f.matrix().phases());
    base.noise = a.noise;
    base.max_iters = a.max_iters;
    base.step0 = a.step0;
    base.tol_obj = a.tol_obj;
    base.validate()?;

    let results: Vec<SearchResult<f64>> = (0..a.starts)
        .into_par_iter()
        .map(|k| {
            let mut cfg = base.clone();
            cfg.rng_seed = a.seed.wrapping_add(k as u64);
            local_search(&cfg)
        })
        .collect::<crate::Result<_>>()?;
    // converged runs first, then lowest objective, then lowest start index
    let best = results
        .into_iter()
        .enumerate()
        .min_by(|(i, x), (j, y)| {
            (!x.converged, x.objective, i)
                .partial_cmp(&(!y.converged, y.objective, j))
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .map(|(_, r)| r)
        .expect("at least one start");
    emit_json(out, &best)?;
    Ok(verdict_code(best.converged))
}
