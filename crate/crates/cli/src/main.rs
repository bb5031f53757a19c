//! `gouq`: classification, evaluation, sampling and simulation for the
//! stationary laws of `int c^{-N_{s-}} dY_s`.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid arguments, 3 a stochastic
//! validation failed (its report is still written).

mod args;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Result};
use clap::{Parser, Subcommand, ValueEnum};
use gouq::continuity::{
    catalogue_certificate, certify_pisot, classify_continuity, dim_bound, power_singularity_threshold, PisotCertificate,
};
use gouq::divisibility::{
    classify_mu_id, classify_rho_id, classify_sym_id, katti, sym_coefficients, sym_mmax, Verdict, DEFAULT_SYM_TOL,
};
use gouq::mu::{certify_atom, mu_cf, mu_levy_measure, mu_sample, AtomLocation, SeriesSampler};
use gouq::params::{ModelParams, RawRates, Scale};
use gouq::rho::{rho_entropy, rho_pmf, rho_power_entropy};
use gouq::simulate::{default_horizon, simulate_path_on_stream, validate_innovation_law, validate_series_equivalence};
use serde_json::{json, Value};

use args::{params_json, parse_poly, LawArgs, ScaleArgs};
use output::{csv_document, emit, json_document, json_num, num, Format, Meta};

#[derive(Debug, Parser)]
#[command(
    name = "gouq",
    version,
    about = "Stationary laws of a generalised Ornstein-Uhlenbeck process driven by a bivariate compound Poisson process"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, clap::Args)]
struct OutArgs {
    /// Output file (stdout when omitted). Written atomically.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Clone, clap::Args)]
struct SeedArgs {
    /// Random seed.
    #[arg(long, env = "GOUQ_SEED", default_value_t = 1)]
    seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Validation {
    /// Law of Y at the first jump of N against rho.
    Innovation,
    /// Path integrals against the random series sum c^-n U_n.
    Series,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Infinite divisibility and continuity verdicts (JSON).
    Classify {
        #[command(flatten)]
        scale: ScaleArgs,
        #[command(flatten)]
        law: LawArgs,
        /// Report when the absolute-continuity hypotheses have the right shape.
        #[arg(long)]
        ps_assumption: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// The characteristic function of mu on a grid of z.
    Cf {
        #[command(flatten)]
        scale: ScaleArgs,
        #[command(flatten)]
        law: LawArgs,
        #[arg(long, default_value_t = -20.0, allow_hyphen_values = true)]
        z_min: f64,
        #[arg(long, default_value_t = 20.0, allow_hyphen_values = true)]
        z_max: f64,
        /// Number of grid points.
        #[arg(long, default_value_t = 401)]
        steps: usize,
        /// Truncation tolerance of the infinite product.
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Draws from mu via the truncated random series.
    Sample {
        #[command(flatten)]
        scale: ScaleArgs,
        #[command(flatten)]
        law: LawArgs,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        /// Truncation depth (default: remainder below 1e-12).
        #[arg(long)]
        depth: Option<usize>,
        /// Independent random stream index.
        #[arg(long, default_value_t = 0)]
        stream: u64,
        #[command(flatten)]
        seed: SeedArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Simulates (N, Y) paths; dumps one path or runs a validation.
    Simulate {
        #[command(flatten)]
        scale: ScaleArgs,
        #[command(flatten)]
        law: LawArgs,
        /// Stop after this many jumps of N.
        #[arg(long)]
        horizon: Option<u64>,
        #[arg(long, value_enum)]
        validate: Option<Validation>,
        /// Number of paths for a validation.
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        /// Largest acceptable total variation distance (innovation validation).
        #[arg(long, default_value_t = 0.005)]
        tv_max: f64,
        /// Smallest acceptable KS p-value (series validation).
        #[arg(long, default_value_t = 1e-3)]
        ks_min_p: f64,
        #[command(flatten)]
        seed: SeedArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Katti's recursion on the pmf of rho.
    Katti {
        #[command(flatten)]
        law: LawArgs,
        /// Number of coefficients.
        #[arg(long, default_value_t = 30)]
        n: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// The Levy measure of mu, or the symmetrisation coefficients E_m.
    Levy {
        #[command(flatten)]
        scale: ScaleArgs,
        #[command(flatten)]
        law: LawArgs,
        /// Number of scale levels n = 0..nmax-1.
        #[arg(long, default_value_t = 20)]
        nmax: usize,
        /// Largest multiple m.
        #[arg(long, default_value_t = 64)]
        mmax: usize,
        /// Certify the sign of the atom at this location.
        #[arg(long)]
        atom: Option<f64>,
        /// Output E_m of log |rho^|^2 instead of the measure.
        #[arg(long)]
        sym: bool,
        #[arg(long, default_value_t = DEFAULT_SYM_TOL)]
        tol: f64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Entropy of rho and of its convolution powers.
    Entropy {
        #[command(flatten)]
        scale: ScaleArgs,
        #[command(flatten)]
        law: LawArgs,
        /// Comma-separated times t for H(rho^{t*}).
        #[arg(long)]
        t: Option<String>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Singularity threshold t_low of the convolution powers of mu.
    Tevolution {
        #[command(flatten)]
        scale: ScaleArgs,
        #[command(flatten)]
        law: LawArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Pisot certificate for c.
    Pisot {
        #[command(flatten)]
        scale: ScaleArgs,
        /// Power sums to check against Newton's identities.
        #[arg(long, default_value_t = 30)]
        n: usize,
        #[command(flatten)]
        out: OutArgs,
    },
}

/// What a command produced.
struct Outcome {
    content: String,
    /// A failed stochastic validation (exit code 3).
    stochastic_failure: Option<String>,
}

impl From<String> for Outcome {
    fn from(content: String) -> Self {
        Outcome { content, stochastic_failure: None }
    }
}

fn format_or(out: &OutArgs, default: Format, allowed: &[Format]) -> Result<Format> {
    let f = out.format.unwrap_or(default);
    if !allowed.contains(&f) {
        bail!("this command does not support --format {f:?}");
    }
    Ok(f)
}

fn verdict_reason(subject: &str, v: &Verdict) -> String {
    let basis = v.basis.map(|b| format!("; {}", b.describe())).unwrap_or_default();
    format!("{subject}: {} ({}{basis})", v.decision, v.rule.describe())
}

/// Parameters for commands where c plays no role.
fn law_params(law: &LawArgs) -> Result<ModelParams> {
    law.params(Scale::integer(2)?)
}

fn law_meta(meta: Meta, params: &ModelParams) -> Meta {
    let mut v = params_json(params);
    if let Value::Object(m) = &mut v {
        m.remove("c");
    }
    meta.with("params", v)
}

fn certificate_for(scale: &Scale) -> Option<PisotCertificate> {
    catalogue_certificate(scale)
}

fn classify(scale: &ScaleArgs, law: &LawArgs, ps_assumption: bool, out: &OutArgs) -> Result<Outcome> {
    format_or(out, Format::Json, &[Format::Json])?;
    let params = law.params(scale.resolve()?)?;
    let cert = certificate_for(params.c());
    let (rho, mu, sym) = (classify_rho_id(&params), classify_mu_id(&params), classify_sym_id(&params));
    let continuity = classify_continuity(&params, cert.as_ref(), ps_assumption);
    let mut reasons =
        vec![verdict_reason("rho", &rho), verdict_reason("mu", &mu), verdict_reason("symmetrisation", &sym)];
    reasons.push(format!(
        "continuity: {:?} via {:?} (H = {}, log c = {})",
        continuity.decision, continuity.rule, continuity.entropy, continuity.log_c
    ));
    let meta = Meta::new("classify").with("params", params_json(&params)).with("ps_assumption", ps_assumption);
    let body = json!({
        "id_rho": rho,
        "id_mu": mu,
        "id_sym": sym,
        "continuity": continuity,
        "dim_bound": dim_bound(&params).ok(),
        "pisot": cert,
        "reasons": reasons,
    });
    Ok(json_document(&meta, body).into())
}

fn cf(scale: &ScaleArgs, law: &LawArgs, z: (f64, f64), steps: usize, tol: f64, out: &OutArgs) -> Result<Outcome> {
    let format = format_or(out, Format::Csv, &[Format::Csv, Format::Json])?;
    let (z_min, z_max) = z;
    if !(z_min.is_finite() && z_max.is_finite() && z_min <= z_max) {
        bail!("bad z range [{z_min}, {z_max}]: need finite z_min <= z_max");
    }
    if steps == 0 || (steps == 1 && z_min != z_max) {
        bail!("--steps must be >= 2 for a nondegenerate range");
    }
    if tol.is_nan() || tol <= 0.0 {
        bail!("--tol must be > 0");
    }
    let params = law.params(scale.resolve()?)?;
    let grid: Vec<f64> = (0..steps)
        .map(|i| if steps == 1 { z_min } else { z_min + (z_max - z_min) * i as f64 / (steps - 1) as f64 })
        .collect();
    let values: Vec<_> = grid.iter().map(|&z| (z, mu_cf(&params, z, tol))).collect();
    let meta = Meta::new("cf").with("params", params_json(&params)).with("tol", tol);
    Ok(match format {
        Format::Csv => csv_document(
            &meta,
            &["z", "re", "im", "abs"],
            values.iter().map(|(z, v)| vec![num(*z), num(v.re), num(v.im), num(v.norm())]),
        ),
        Format::Json => {
            let rows: Vec<Value> =
                values.iter().map(|(z, v)| json!({"z": z, "re": v.re, "im": v.im, "abs": v.norm()})).collect();
            json_document(&meta, json!({ "rows": rows }))
        }
    }
    .into())
}

#[allow(clippy::too_many_arguments)]
fn sample(
    scale: &ScaleArgs,
    law: &LawArgs,
    n: usize,
    depth: Option<usize>,
    stream: u64,
    seed: u64,
    out: &OutArgs,
) -> Result<Outcome> {
    let format = format_or(out, Format::Csv, &[Format::Csv, Format::Json])?;
    if n == 0 {
        bail!("--n must be >= 1");
    }
    let params = law.params(scale.resolve()?)?;
    let mut sampler = SeriesSampler::new(&params, seed).with_stream(stream);
    if let Some(d) = depth {
        sampler = sampler.with_depth(d)?;
    }
    let xs = mu_sample(&sampler, n);
    let meta = Meta::new("sample")
        .with("params", params_json(&params))
        .with("seed", seed)
        .with("stream", stream)
        .with("depth", sampler.depth())
        .with("truncation_bound", sampler.truncation_bound());
    Ok(match format {
        Format::Csv => csv_document(&meta, &[], xs.iter().map(|x| vec![num(*x)])),
        Format::Json => json_document(&meta, json!({ "samples": xs })),
    }
    .into())
}

fn raw_rates(law: &LawArgs) -> Result<RawRates> {
    if law.has_rates() {
        return law.raw_rates();
    }
    // (p, q, r) are rates too; r = 1 is allowed here as a diagnostic.
    let q: f64 = law.q.as_deref().ok_or_else(|| anyhow!("missing --q or --u/--v/--w"))?.parse()?;
    let r: f64 = law.r.as_deref().ok_or_else(|| anyhow!("missing --r or --u/--v/--w"))?.parse()?;
    let p = match &law.p {
        Some(p) => p.parse()?,
        None => (1.0 - q - r).max(0.0),
    };
    Ok(RawRates::new(p, q, r)?)
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    scale: &ScaleArgs,
    law: &LawArgs,
    horizon: Option<u64>,
    validate: Option<Validation>,
    n: usize,
    thresholds: (f64, f64),
    seed: u64,
    out: &OutArgs,
) -> Result<Outcome> {
    let c = scale.resolve()?.value();
    let raw = raw_rates(law)?;
    let (p, q, r) = raw.mark_probabilities();
    let meta = Meta::new("simulate")
        .with("rates", json!({"u": raw.u, "v": raw.v, "w": raw.w}))
        .with("p", p)
        .with("q", q)
        .with("r", r)
        .with("c", c)
        .with("seed", seed);
    let (tv_max, ks_min_p) = thresholds;
    match validate {
        None => {
            let format = format_or(out, Format::Csv, &[Format::Csv, Format::Json])?;
            let horizon = horizon.unwrap_or_else(|| default_horizon(&raw, c));
            let mut trace = Vec::new();
            let result = simulate_path_on_stream(&raw, c, horizon, seed, 0, Some(&mut trace))?;
            let meta = meta
                .with("horizon", horizon)
                .with("y_at_t", result.y_at_t)
                .with("partial_integral", result.partial_integral)
                .with("truncation_bound", result.truncation_bound);
            Ok(match format {
                Format::Csv => csv_document(
                    &meta,
                    &["time", "mark", "n", "y", "integral"],
                    trace.iter().map(|j| {
                        vec![num(j.time), format!("\"{}\"", j.mark), j.n.to_string(), j.y.to_string(), num(j.integral)]
                    }),
                ),
                Format::Json => json_document(&meta, json!({ "path": result, "jumps": trace })),
            }
            .into())
        }
        Some(Validation::Innovation) => {
            format_or(out, Format::Json, &[Format::Json])?;
            let report = validate_innovation_law(&raw, c, n, seed)?;
            let passed = report.tv_distance < tv_max;
            let meta = meta.with("validation", "innovation").with("tv_max", tv_max);
            let content = json_document(&meta, json!({ "report": report, "passed": passed }));
            let stochastic_failure =
                (!passed).then(|| format!("total variation distance {} >= {tv_max}", report.tv_distance));
            Ok(Outcome { content, stochastic_failure })
        }
        Some(Validation::Series) => {
            format_or(out, Format::Json, &[Format::Json])?;
            let report = validate_series_equivalence(&raw, c, n, seed)?;
            let se = (report.path_stderr.powi(2) + report.series_stderr.powi(2)).sqrt();
            let means_agree = (report.path_mean - report.series_mean).abs() <= 4.0 * se + 1e-12;
            let passed = report.ks.p_value > ks_min_p && means_agree;
            let meta = meta.with("validation", "series").with("ks_min_p", ks_min_p);
            let content = json_document(&meta, json!({ "report": report, "passed": passed }));
            let stochastic_failure = (!passed)
                .then(|| format!("KS p-value {} (minimum {ks_min_p}), means agree: {means_agree}", report.ks.p_value));
            Ok(Outcome { content, stochastic_failure })
        }
    }
}

fn katti_cmd(law: &LawArgs, n: usize, out: &OutArgs) -> Result<Outcome> {
    let format = format_or(out, Format::Json, &[Format::Csv, Format::Json])?;
    let params = law_params(law)?;
    let seq = katti(&rho_pmf(&params, n), n)?;
    let meta = law_meta(Meta::new("katti"), &params).with("n", n);
    Ok(match format {
        Format::Json => json_document(
            &meta,
            json!({
                "coefficients": seq.coefficients,
                "first_negative_index": seq.first_negative_index,
                "first_negative_value": seq.first_negative_value,
                "max_residual": seq.max_residual,
                "id_rho": classify_rho_id(&params),
            }),
        ),
        Format::Csv => csv_document(
            &meta,
            &["n", "q_n"],
            seq.coefficients.iter().enumerate().map(|(i, x)| vec![(i + 1).to_string(), num(*x)]),
        ),
    }
    .into())
}

#[allow(clippy::too_many_arguments)]
fn levy(
    scale: &ScaleArgs,
    law: &LawArgs,
    nmax: usize,
    mmax: usize,
    atom: Option<f64>,
    sym: bool,
    tol: f64,
    out: &OutArgs,
) -> Result<Outcome> {
    let format = format_or(out, Format::Json, &[Format::Csv, Format::Json])?;
    let params = law.params(scale.resolve()?)?;
    let meta = Meta::new("levy").with("params", params_json(&params));
    if sym {
        let mmax = mmax.max(1);
        let s = sym_coefficients(&params, mmax, tol)?;
        let meta = meta.with("mmax", mmax).with("tol", tol).with("suggested_mmax", sym_mmax(&params, tol)?);
        return Ok(match format {
            Format::Json => json_document(
                &meta,
                json!({
                    "A": s.a, "B": s.b, "C": s.c,
                    "E": s.e,
                    "min_even_E": s.min_even(),
                    "coefficient_error": s.coefficient_error,
                    "truncation_error": s.truncation_error,
                    "id_sym": classify_sym_id(&params),
                }),
            ),
            Format::Csv => csv_document(
                &meta,
                &["m", "E_m"],
                s.e.iter().enumerate().map(|(i, e)| vec![(i + 1).to_string(), num(*e)]),
            ),
        }
        .into());
    }
    let measure = mu_levy_measure(&params, nmax, mmax)?;
    let certificate = match atom {
        Some(x) => Some(certify_atom(&measure, x)?),
        None => None,
    };
    let meta = meta.with("nmax", nmax).with("mmax", mmax);
    Ok(match format {
        Format::Json => json_document(
            &meta,
            json!({
                "aggregation_mode": measure.aggregation_mode,
                "total_variation": measure.total_variation,
                "atom_certificate": certificate,
                "atoms": measure.atoms,
            }),
        ),
        Format::Csv => csv_document(
            &meta,
            &["location", "location_value", "weight"],
            measure.atoms.iter().map(|a| {
                let exact = match &a.location {
                    AtomLocation::Exact(x) => x.to_string(),
                    AtomLocation::Float(x) => num(*x),
                };
                vec![exact, num(a.location.value()), num(a.weight)]
            }),
        ),
    }
    .into())
}

fn entropy_cmd(scale: &ScaleArgs, law: &LawArgs, t: Option<&str>, out: &OutArgs) -> Result<Outcome> {
    let format = format_or(out, Format::Json, &[Format::Csv, Format::Json])?;
    let has_scale = scale.c.is_some() || scale.c_num.is_some() || scale.pisot_poly.is_some();
    let params = if has_scale { law.params(scale.resolve()?)? } else { law_params(law)? };
    let times: Vec<f64> = match t {
        Some(list) => list
            .split(',')
            .map(|x| x.trim().parse::<f64>().map_err(|e| anyhow!("bad --t value {x:?}: {e}")))
            .collect::<Result<_>>()?,
        None => Vec::new(),
    };
    let powers = times.iter().map(|&t| rho_power_entropy(&params, t)).collect::<gouq::Result<Vec<_>>>()?;
    let meta = if has_scale {
        Meta::new("entropy").with("params", params_json(&params))
    } else {
        law_meta(Meta::new("entropy"), &params)
    };
    let entropy = rho_entropy(&params);
    Ok(match format {
        Format::Json => json_document(
            &meta,
            json!({
                "entropy": entropy,
                "dim_bound": if has_scale { dim_bound(&params).ok() } else { None },
                "powers": powers,
            }),
        ),
        Format::Csv => {
            let mut rows = vec![vec!["1".to_string(), num(entropy), String::new()]];
            rows.extend(
                powers.iter().map(|p| vec![num(p.t), num(p.entropy), p.upper_bound.map(num).unwrap_or_default()]),
            );
            csv_document(&meta, &["t", "entropy", "upper_bound"], rows)
        }
    }
    .into())
}

fn tevolution(scale: &ScaleArgs, law: &LawArgs, out: &OutArgs) -> Result<Outcome> {
    let format = format_or(out, Format::Json, &[Format::Csv, Format::Json])?;
    let params = law.params(scale.resolve()?)?;
    let threshold = power_singularity_threshold(&params, None)?;
    let cert = certificate_for(params.c());
    let pisot = cert.is_some() && !params.q_is_zero();
    let meta = Meta::new("tevolution").with("params", params_json(&params));
    Ok(match format {
        Format::Json => json_document(
            &meta,
            json!({
                "t_low": json_num(threshold.t_low),
                "rule": threshold.rule,
                "log_c": threshold.log_c,
                "entropy_at_t_low": threshold.entropy_at_t_low,
                "pisot_certified": pisot,
                // Every power is singular when c is Pisot.
                "singular_for_all_t": pisot,
                "trace": threshold.trace,
            }),
        ),
        Format::Csv => {
            let meta = meta.with("t_low", json_num(threshold.t_low)).with("pisot_certified", pisot);
            csv_document(&meta, &["t", "entropy"], threshold.trace.iter().map(|s| vec![num(s.t), num(s.entropy)]))
        }
    }
    .into())
}

fn pisot_cmd(scale: &ScaleArgs, n: usize, out: &OutArgs) -> Result<Outcome> {
    format_or(out, Format::Json, &[Format::Json])?;
    let c = scale.resolve()?;
    let poly = match (&scale.pisot_poly, &c) {
        (Some(p), _) => parse_poly(p)?,
        (None, Scale::Integer { value }) => vec![1, -(i64::try_from(*value)?)],
        (None, Scale::Algebraic { poly, .. }) => poly.clone(),
        (None, _) => bail!("pass --pisot-poly with an integer polynomial vanishing at c"),
    };
    let meta = Meta::new("pisot").with("c", json!(c)).with("poly", json!(poly));
    let body = match certify_pisot(&c, &poly) {
        Ok(cert) => {
            let checks = cert.power_sum_checks(n);
            json!({
                "certified": true,
                "certificate": cert,
                "power_sums_ok": checks.iter().all(|c| c.ok),
                "power_sums": checks,
            })
        }
        Err(e @ (gouq::Error::NotPisot(_) | gouq::Error::UncertifiedRoots(_))) => {
            json!({ "certified": false, "reason": e.to_string() })
        }
        Err(e) => return Err(e.into()),
    };
    Ok(json_document(&meta, body).into())
}

fn run(cli: &Cli) -> Result<(Outcome, Option<PathBuf>)> {
    let (outcome, out) = match &cli.command {
        Command::Classify { scale, law, ps_assumption, out } => (classify(scale, law, *ps_assumption, out)?, out),
        Command::Cf { scale, law, z_min, z_max, steps, tol, out } => {
            (cf(scale, law, (*z_min, *z_max), *steps, *tol, out)?, out)
        }
        Command::Sample { scale, law, n, depth, stream, seed, out } => {
            (sample(scale, law, *n, *depth, *stream, seed.seed, out)?, out)
        }
        Command::Simulate { scale, law, horizon, validate, n, tv_max, ks_min_p, seed, out } => {
            (simulate(scale, law, *horizon, *validate, *n, (*tv_max, *ks_min_p), seed.seed, out)?, out)
        }
        Command::Katti { law, n, out } => (katti_cmd(law, *n, out)?, out),
        Command::Levy { scale, law, nmax, mmax, atom, sym, tol, out } => {
            (levy(scale, law, *nmax, *mmax, *atom, *sym, *tol, out)?, out)
        }
        Command::Entropy { scale, law, t, out } => (entropy_cmd(scale, law, t.as_deref(), out)?, out),
        Command::Tevolution { scale, law, out } => (tevolution(scale, law, out)?, out),
        Command::Pisot { scale, n, out } => (pisot_cmd(scale, *n, out)?, out),
    };
    Ok((outcome, out.out.clone()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (outcome, out) = match run(&cli) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = emit(out.as_deref(), &outcome.content) {
        eprintln!("error: {e:#}");
        return ExitCode::from(1);
    }
    match outcome.stochastic_failure {
        Some(msg) => {
            eprintln!("stochastic validation failed: {msg}");
            ExitCode::from(3)
        }
        None => ExitCode::SUCCESS,
    }
}
