use std::fs;
use std::path::Path;

use hn_spectral::{
    find_eigenvalues, recover_boundary_coefficient_with, recover_missing as solve_missing,
    residuals, sigma_vector, MissingSlot, PartialSpectrum, ProblemSpec, RationalHNFunction,
    SigmaVector, SpectralDatum, Spectrum, SumOptions,
};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::output::{csv_float, float, to_csv, to_json, Format, Pending};
use crate::{OutputArgs, ProblemArgs, SpectrumIo, SumArgs};

fn read_json<T: DeserializeOwned>(path: &Path, what: &str) -> CliResult<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("reading {what} {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("parsing {what} {}: {e}", path.display())))
}

/// The problem file with command-line overrides applied, validated.
fn load_problem(args: &ProblemArgs) -> CliResult<Option<ProblemSpec>> {
    let Some(path) = &args.config else {
        return Ok(None);
    };
    let mut spec: ProblemSpec = read_json(path, "config")?;
    let s = &mut spec.solver;
    if let Some(n) = args.n_max {
        s.n_max = n;
    }
    if let Some(t) = args.ode_rel_tol {
        s.ode_rel_tol = t;
    }
    if let Some(t) = args.ode_abs_tol {
        s.ode_abs_tol = t;
    }
    if let Some(t) = args.eigen_tol {
        s.eigen_tol = t;
    }
    if args.sequential {
        s.parallel = false;
    }
    spec.validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    Ok(Some(spec))
}

fn require(spec: Option<&ProblemSpec>, why: &str) -> CliResult<ProblemSpec> {
    spec.cloned()
        .ok_or_else(|| CliError::Config(format!("--config is required {why}")))
}

/// The spectrum from `--spectrum-in`, or solved from the problem file.
fn obtain_spectrum(spec: Option<&ProblemSpec>, io: &SpectrumIo) -> CliResult<Spectrum> {
    if let Some(path) = &io.spectrum_in {
        return read_json(path, "spectrum");
    }
    let spec = require(spec, "unless --spectrum-in is given")?;
    find_eigenvalues(&spec).map_err(|e| CliError::solver("find_eigenvalues", e))
}

fn spectrum_csv(s: &Spectrum) -> CliResult<String> {
    to_csv(
        &["n", "lambda", "gamma", "beta", "chi_prime"],
        s.data.iter().map(|d| {
            vec![
                d.n.to_string(),
                csv_float(d.lambda),
                csv_float(d.gamma),
                csv_float(d.beta),
                csv_float(d.chi_prime),
            ]
        }),
    )
}

fn render<T: Serialize>(
    format: Format,
    value: &T,
    csv: impl FnOnce() -> CliResult<String>,
) -> CliResult<String> {
    match format {
        Format::Json => to_json(value),
        Format::Csv => csv(),
    }
}

fn options(sums: &SumArgs) -> SumOptions {
    SumOptions {
        tail: !sums.no_tail,
    }
}

pub fn spectrum(problem: &ProblemArgs, io: &SpectrumIo, out: &OutputArgs) -> CliResult<()> {
    let spec = load_problem(problem)?;
    let s = obtain_spectrum(spec.as_ref(), io)?;
    let mut pending = Pending::default();
    save_spectrum(&mut pending, io, &s)?;
    // With only --spectrum-out, nothing goes to stdout.
    if out.output.is_some() || io.spectrum_out.is_none() {
        pending.to(
            out.output.as_deref(),
            render(out.format, &s, || spectrum_csv(&s))?,
        );
    }
    pending.flush()
}

/// Queues the spectrum, as JSON, for `--spectrum-out`.
fn save_spectrum(pending: &mut Pending, io: &SpectrumIo, s: &Spectrum) -> CliResult<()> {
    if let Some(path) = &io.spectrum_out {
        pending.to(Some(path), to_json(s)?);
    }
    Ok(())
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    ind_f: usize,
    n_used: usize,
    sigmas: &'a [f64],
    tail_estimates: &'a [f64],
    omegas: &'a [f64],
    residuals: &'a [f64],
    max_residual: f64,
    threshold: f64,
    pass: bool,
}

pub fn verify(
    problem: &ProblemArgs,
    io: &SpectrumIo,
    out: &OutputArgs,
    sums: &SumArgs,
    threshold: f64,
) -> CliResult<()> {
    if !(threshold > 0.0 && threshold.is_finite()) {
        return Err(CliError::Config("--threshold must be positive".into()));
    }
    let spec = load_problem(problem)?;
    let f = require(spec.as_ref(), "to know f")?.left;
    let s = obtain_spectrum(spec.as_ref(), io)?;
    let sigmas =
        sigma_vector(&s, options(sums)).map_err(|e| CliError::recovery("sigma_vector", e))?;
    let omegas = f.omega_poly();
    let r = residuals(&omegas, &sigmas).map_err(|e| CliError::recovery("residuals", e))?;
    let max_residual = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let pass = max_residual < threshold;
    let report = VerifyReport {
        ind_f: sigmas.ind_f,
        n_used: sigmas.n_used,
        sigmas: &sigmas.sigmas,
        tail_estimates: &sigmas.tail_estimates,
        omegas: omegas.as_slice(),
        residuals: &r,
        max_residual,
        threshold,
        pass,
    };
    let mut pending = Pending::default();
    save_spectrum(&mut pending, io, &s)?;
    let rendered = render(out.format, &report, || {
        to_csv(
            &["k", "sigma", "tail_estimate", "residual"],
            (0..r.len()).map(|k| {
                vec![
                    k.to_string(),
                    float(sigmas.get(k as i64)),
                    float(sigmas.tail_estimates.get(k).copied().unwrap_or(0.0)),
                    float(r[k]),
                ]
            }),
        )
    })?;
    pending.to(out.output.as_deref(), rendered);
    pending.flush()?;
    if pass {
        Ok(())
    } else {
        Err(CliError::Verification(format!(
            "max residual {} is not below the threshold {}",
            float(max_residual),
            float(threshold)
        )))
    }
}

#[derive(Serialize)]
struct RecoverBcReport<'a> {
    f: &'a RationalHNFunction,
    sigmas: &'a SigmaVector,
    omegas: &'a [f64],
    residuals: &'a [f64],
    max_residual: f64,
}

pub fn recover_bc(
    problem: &ProblemArgs,
    io: &SpectrumIo,
    out: &OutputArgs,
    sums: &SumArgs,
    ind_f: Option<usize>,
) -> CliResult<()> {
    let spec = load_problem(problem)?;
    let s = obtain_spectrum(spec.as_ref(), io)?;
    let ind_f = ind_f.unwrap_or(s.ind_f);
    let r = recover_boundary_coefficient_with(&s, ind_f, options(sums))
        .map_err(|e| CliError::recovery("recover_boundary_coefficient", e))?;
    let report = RecoverBcReport {
        f: &r.f,
        sigmas: &r.sigmas,
        omegas: r.omegas.as_slice(),
        residuals: &r.residuals,
        max_residual: r.residuals.iter().fold(0.0f64, |m, v| m.max(v.abs())),
    };
    let mut pending = Pending::default();
    save_spectrum(&mut pending, io, &s)?;
    let rendered = render(out.format, &report, || {
        let mut rows = vec![
            vec!["h0".into(), String::new(), float(r.f.h0())],
            vec!["h".into(), String::new(), float(r.f.h())],
        ];
        for (k, p) in r.f.poles().iter().enumerate() {
            rows.push(vec!["hk".into(), (k + 1).to_string(), float(p.hk)]);
            rows.push(vec!["delta".into(), (k + 1).to_string(), float(p.delta)]);
        }
        to_csv(&["parameter", "k", "value"], rows)
    })?;
    pending.to(out.output.as_deref(), rendered);
    pending.flush()
}

#[derive(Serialize)]
struct MissingReport<'a> {
    recovered: Vec<SpectralDatum>,
    residual: f64,
    iterations: usize,
    unknowns: usize,
    equations: usize,
    used_right_endpoint: bool,
    spectrum: &'a Spectrum,
}

pub fn recover_missing(
    problem: &ProblemArgs,
    io: &SpectrumIo,
    out: &OutputArgs,
    sums: &SumArgs,
    partial_in: Option<&Path>,
    missing: Vec<MissingSlot>,
) -> CliResult<()> {
    let spec = require(load_problem(problem)?.as_ref(), "to know f and F")?;
    let partial: PartialSpectrum = match (partial_in, &io.spectrum_in) {
        (Some(path), _) => read_json(path, "partial spectrum")?,
        (None, Some(path)) => {
            PartialSpectrum::from_spectrum(&read_json(path, "spectrum")?, missing)
        }
        (None, None) => {
            return Err(CliError::Config(
                "--partial-in or --spectrum-in is required".into(),
            ))
        }
    };
    let r = solve_missing(&partial, &spec.left, &spec.right, options(sums))
        .map_err(|e| CliError::recovery("recover_missing", e))?;
    let recovered = r
        .spectrum
        .data
        .iter()
        .filter(|d| partial.missing.iter().any(|m| m.n == d.n))
        .copied()
        .collect();
    let report = MissingReport {
        recovered,
        residual: r.residual,
        iterations: r.iterations,
        unknowns: r.unknowns,
        equations: r.equations,
        used_right_endpoint: r.used_right_endpoint,
        spectrum: &r.spectrum,
    };
    let mut pending = Pending::default();
    save_spectrum(&mut pending, io, &r.spectrum)?;
    let rendered = render(out.format, &report, || spectrum_csv(&r.spectrum))?;
    pending.to(out.output.as_deref(), rendered);
    pending.flush()
}
