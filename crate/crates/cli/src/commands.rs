use std::fmt::Write as _;

use wpca::bounds::{
    asymptotic_rate, concentration_bound_elliptical, concentration_bound_subgaussian, covariance_deviation_bound,
    estimate_winsorized_eigenvalues, pca_breakdown_points, perturbation_bound, subgaussian_param_winsorized,
    wpca_breakdown_lower_bounds, BoundReport, Distribution, PopulationModel, WinsorizedSpectrum,
};
use wpca::experiments::{run_preset, Preset};
use wpca::format::fmt_f64;
use wpca::simulate::{apply_contamination, sample_model, stream_rng, ContaminationPlan, OutlierRule};
use wpca::{fit_pc_subspace, principal_angles, DataMatrix, RadiusSpec, Subspace};

use crate::error::CliError;
use crate::io::{read_matrix, Sink};
use crate::{AnglesArgs, BoundsCommand, Context, ExperimentArgs, FitArgs, SampleArgs};

/// Tolerance below which an input basis counts as orthonormal.
const ORTHO_TOL: f64 = 1e-6;

/// Comment block plus a `quantity,value` table.
struct Report {
    meta: Vec<(String, String)>,
    rows: Vec<(String, String)>,
}

impl Report {
    fn new(command: &str) -> Self {
        Self {
            meta: vec![("command".into(), command.into())],
            rows: Vec::new(),
        }
    }

    fn meta(&mut self, key: &str, value: impl ToString) {
        self.meta.push((key.into(), value.to_string()));
    }

    fn num(&mut self, key: &str, value: f64) {
        self.rows.push((key.into(), fmt_f64(value)));
    }

    fn text(&mut self, key: &str, value: impl ToString) {
        self.rows.push((key.into(), value.to_string()));
    }

    fn bound(&mut self, rep: &BoundReport) {
        for (name, v) in &rep.components {
            self.num(name, *v);
        }
        self.num("value", rep.value);
        self.num("clipped", rep.clipped());
        for (name, ok) in &rep.assumptions {
            self.text(&format!("assumption:{name}"), ok);
        }
    }

    fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.meta {
            let _ = writeln!(s, "# {k}: {v}");
        }
        s.push_str("quantity,value\n");
        for (k, v) in &self.rows {
            let _ = writeln!(s, "{k},{v}");
        }
        s
    }
}

fn config_line(ctx: &Context, extra: &[(&str, String)]) -> String {
    let mut parts = vec![format!("seed={}", ctx.seed)];
    parts.push(format!("jobs={}", ctx.jobs.map_or("auto".to_string(), |j| j.to_string())));
    parts.extend(extra.iter().map(|(k, v)| format!("{k}={v}")));
    parts.join(" ")
}

fn emit(ctx: &Context, default_name: &str, mut text: String, config: String) -> Result<(), CliError> {
    let sink = Sink::resolve(ctx.out.clone(), default_name);
    text.insert_str(0, &format!("# config: {config} out={}\n", sink.describe()));
    sink.write(text.as_bytes())
}

fn parse_distribution(s: &str) -> Result<Distribution, CliError> {
    let dist = match s {
        "gaussian" | "normal" => Distribution::Gaussian,
        _ => match s.strip_prefix('t').and_then(|nu| nu.parse::<f64>().ok()) {
            Some(nu) => Distribution::StudentT { nu },
            None => return Err(CliError::Usage(format!("unknown distribution {s:?}; expected gaussian or t<nu>"))),
        },
    };
    dist.validate()?;
    Ok(dist)
}

fn model_for(sigma: Vec<f64>, dist: Distribution) -> Result<PopulationModel, CliError> {
    Ok(match dist {
        Distribution::Gaussian => PopulationModel::gaussian(sigma)?,
        Distribution::StudentT { nu } => PopulationModel::student_t(sigma, nu)?,
    })
}

fn joined(values: &[f64]) -> String {
    values.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(",")
}

pub fn fit(ctx: &Context, args: FitArgs) -> Result<(), CliError> {
    let d = match args.d {
        Some(d) => d,
        None => ctx.config.get("fit", "d")?.unwrap_or(1),
    };
    let radius_text = match args.radius {
        Some(r) => r,
        None => ctx.config.raw("fit", "radius").unwrap_or("median").to_string(),
    };
    let radius: RadiusSpec = radius_text.parse()?;
    let center = args.center || ctx.config.get("fit", "center")?.unwrap_or(false);

    let input = read_matrix(&args.input)?;
    let mut x = DataMatrix::new(input.values)?;
    let p = x.p();
    if d == 0 || d >= p {
        return Err(CliError::Usage(format!("need 1 <= d < p, got d = {d}, p = {p}")));
    }
    if center {
        x = x.center_columns();
    }
    let fit = fit_pc_subspace(&x, d, radius)?;
    for w in &fit.warnings {
        eprintln!("wpca: warning: {w}");
    }

    let mut text = String::new();
    let _ = writeln!(text, "# command: fit");
    let _ = writeln!(text, "# input: {}", args.input.display());
    let _ = writeln!(text, "# n: {}", x.n());
    let _ = writeln!(text, "# p: {p}");
    let _ = writeln!(text, "# d: {d}");
    let _ = writeln!(text, "# radius_mode: {}", fit.radius.mode());
    let _ = writeln!(
        text,
        "# radius: {}",
        fit.radius.radius().map_or_else(|| "+inf".to_string(), fmt_f64)
    );
    let _ = writeln!(text, "# eigenvalues: {}", joined(&fit.spectrum.eigenvalues));
    for w in &fit.warnings {
        let _ = writeln!(text, "# warning: {w}");
    }
    let header: Vec<String> = (1..=d).map(|j| format!("v{j}")).collect();
    let _ = writeln!(text, "{}", header.join(","));
    let basis = fit.subspace.basis();
    for i in 0..p {
        let row: Vec<String> = (0..d).map(|j| fmt_f64(basis[(i, j)])).collect();
        let _ = writeln!(text, "{}", row.join(","));
    }
    let config = config_line(ctx, &[("d", d.to_string()), ("radius", radius.to_string()), ("center", center.to_string())]);
    emit(ctx, "basis.csv", text, config)
}

fn read_basis(path: &std::path::Path, label: &str, report: &mut Report) -> Result<Subspace, CliError> {
    let m = read_matrix(path)?;
    let (s, fixed) = Subspace::from_basis_lenient(m.values, ORTHO_TOL)?;
    if fixed {
        let msg = format!("basis {label} ({}) was not orthonormal; re-orthonormalized", path.display());
        eprintln!("wpca: warning: {msg}");
        report.meta("warning", msg);
    }
    Ok(s)
}

pub fn angles(ctx: &Context, args: AnglesArgs) -> Result<(), CliError> {
    let mut report = Report::new("angles");
    report.meta("a", args.a.display());
    report.meta("b", args.b.display());
    let a = read_basis(&args.a, "a", &mut report)?;
    let b = read_basis(&args.b, "b", &mut report)?;
    let rep = principal_angles(&a, &b)?;
    for (j, t) in rep.angles.iter().enumerate() {
        report.num(&format!("angle_{}", j + 1), *t);
    }
    report.num("largest", rep.largest);
    report.num("sin_largest", rep.sin_largest);
    emit(ctx, "angles.csv", report.render(), config_line(ctx, &[]))
}

pub fn bounds(ctx: &Context, cmd: BoundsCommand) -> Result<(), CliError> {
    let (name, report, extra) = match cmd {
        BoundsCommand::Perturbation { gap, lam_d, lam_d1, r, eps } => {
            let (a, b) = match (gap, lam_d, lam_d1) {
                (Some(g), _, _) => (g, 0.0),
                (None, Some(a), Some(b)) => (a, b),
                _ => return Err(CliError::Usage("give --gap or both --lam-d and --lam-d1".into())),
            };
            let mut report = Report::new("bounds perturbation");
            report.bound(&perturbation_bound(a, b, r, eps)?);
            let extra = vec![("lam_d", fmt_f64(a)), ("lam_d1", fmt_f64(b)), ("r", fmt_f64(r)), ("eps", fmt_f64(eps))];
            ("perturbation", report, extra)
        }
        BoundsCommand::Breakdown { eigs, r, r2, d } => {
            let r = match (r, r2) {
                (Some(r), None) => r,
                (None, Some(r2)) if r2 > 0.0 => r2.sqrt(),
                (None, Some(r2)) => return Err(CliError::Usage(format!("--r2 must be > 0, got {r2}"))),
                _ => return Err(CliError::Usage("give --r or --r2".into())),
            };
            let wspec = WinsorizedSpectrum::from_values(eigs.clone(), r)?;
            let b = wpca_breakdown_lower_bounds(&wspec, d)?;
            let mut report = Report::new("bounds breakdown");
            report.num("weak", b.weak);
            report.num("strong", b.strong);
            report.num("weak_raw", b.weak_raw);
            report.num("strong_raw", b.strong_raw);
            report.text("strong_argmax", b.strong_argmax);
            let extra = vec![("eigs", joined(&eigs)), ("r", fmt_f64(r)), ("d", d.to_string())];
            ("breakdown", report, extra)
        }
        BoundsCommand::PcaBreakdown { n, d } => {
            let (weak, strong) = pca_breakdown_points(n, d)?;
            let mut report = Report::new("bounds pca-breakdown");
            report.num("weak", weak);
            report.num("strong", strong);
            ("pca-breakdown", report, vec![("n", n.to_string()), ("d", d.to_string())])
        }
        BoundsCommand::Concentration { lam1, lamp, eigs, r, d, eps, n, p, sigma_sub } => {
            let p = p.unwrap_or(eigs.len());
            let wspec = WinsorizedSpectrum::from_values(eigs.clone(), r)?;
            let rep = match sigma_sub {
                Some(s) => concentration_bound_subgaussian(lam1, lamp, s, &wspec, d, eps, n, p)?,
                None => concentration_bound_elliptical(lam1, lamp, &wspec, d, eps, n, p)?,
            };
            let mut report = Report::new("bounds concentration");
            report.meta("variant", if sigma_sub.is_some() { "subgaussian" } else { "elliptical" });
            report.bound(&rep);
            let extra = vec![
                ("lam1", fmt_f64(lam1)),
                ("lamp", fmt_f64(lamp)),
                ("eigs", joined(&eigs)),
                ("r", fmt_f64(r)),
                ("d", d.to_string()),
                ("eps", fmt_f64(eps)),
                ("n", n.to_string()),
                ("p", p.to_string()),
                ("sigma_sub", sigma_sub.map_or("+inf".into(), fmt_f64)),
            ];
            ("concentration", report, extra)
        }
        BoundsCommand::Rate { beta, p, n, eps, subgaussian } => {
            let (t1, t2) = asymptotic_rate(beta, p, n, eps, subgaussian)?;
            let mut report = Report::new("bounds rate");
            report.meta("note", "rate shapes with unit constants, not calibrated bounds");
            report.num("contamination_term", t1);
            report.num("sampling_term", t2);
            report.num("total", t1 + t2);
            let extra = vec![
                ("beta", fmt_f64(beta)),
                ("p", p.to_string()),
                ("n", n.to_string()),
                ("eps", fmt_f64(eps)),
                ("subgaussian", subgaussian.to_string()),
            ];
            ("rate", report, extra)
        }
        BoundsCommand::Covariance { eps, r, sigma_r, n, p } => {
            let v = covariance_deviation_bound(eps, r, sigma_r, n, p)?;
            let mut report = Report::new("bounds covariance");
            report.num("value", v);
            let extra = vec![
                ("eps", fmt_f64(eps)),
                ("r", fmt_f64(r)),
                ("sigma_r", fmt_f64(sigma_r)),
                ("n", n.to_string()),
                ("p", p.to_string()),
            ];
            ("covariance", report, extra)
        }
        BoundsCommand::SubgaussianParam { lam1, lamp, p, r, sigma_sub } => {
            let s = sigma_sub.unwrap_or(f64::INFINITY);
            let v = subgaussian_param_winsorized(lam1, lamp, p, r, s)?;
            let mut report = Report::new("bounds subgaussian-param");
            report.num("value", v);
            let extra = vec![
                ("lam1", fmt_f64(lam1)),
                ("lamp", fmt_f64(lamp)),
                ("p", p.to_string()),
                ("r", fmt_f64(r)),
                ("sigma_sub", fmt_f64(s)),
            ];
            ("subgaussian-param", report, extra)
        }
        BoundsCommand::WinsorizedEigs { sigma, distribution, r, samples } => {
            let dist = parse_distribution(&distribution)?;
            let model = model_for(sigma.clone(), dist)?;
            let w = estimate_winsorized_eigenvalues(&model, r, samples, ctx.seed)?;
            let mut report = Report::new("bounds winsorized-eigs");
            for (j, v) in w.values.iter().enumerate() {
                report.num(&format!("lambda_{}", j + 1), *v);
            }
            if let Some(se) = &w.std_errors {
                for (j, v) in se.iter().enumerate() {
                    report.num(&format!("se_{}", j + 1), *v);
                }
            }
            let extra = vec![
                ("sigma", joined(&sigma)),
                ("distribution", dist.label()),
                ("r", fmt_f64(r)),
                ("samples", samples.to_string()),
            ];
            ("winsorized-eigs", report, extra)
        }
    };
    emit(ctx, &format!("bounds-{name}.csv"), report.render(), config_line(ctx, &extra))
}

pub fn experiment(ctx: &Context, args: ExperimentArgs) -> Result<(), CliError> {
    let preset: Preset = args.preset.parse()?;
    let scale = match args.scale {
        Some(s) => s,
        None => ctx.config.get("experiment", "scale")?.unwrap_or(preset.default_scale()),
    };
    if preset == Preset::Fig4 && scale != 1.0 {
        eprintln!("wpca: note: fig4 uses a single fixed-size dataset; --scale is ignored");
    }
    let mut table = run_preset(preset, scale, ctx.seed)?;
    let failed = table.rows.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        eprintln!("wpca: warning: {failed} cell(s) failed; see the error column");
    }
    let sink = Sink::resolve(ctx.out.clone(), &format!("{}.csv", preset.name()));
    let config = format!(
        "{} preset={} scale={} out={}",
        config_line(ctx, &[]),
        preset.name(),
        fmt_f64(scale),
        sink.describe()
    );
    let at = table.metadata.len().saturating_sub(1);
    table.metadata.insert(at, ("config".into(), config));
    let text = table.to_csv_string()?;
    sink.write(text.as_bytes())
}

pub fn sample(ctx: &Context, args: SampleArgs) -> Result<(), CliError> {
    let n = match args.n {
        Some(n) => n,
        None => ctx.config.get("sample", "n")?.unwrap_or(100),
    };
    let sigma = match args.sigma {
        Some(s) => s,
        None => match ctx.config.raw("sample", "sigma") {
            Some(raw) => raw
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| CliError::Usage(format!("config sample.sigma: {e}")))?,
            None => return Err(CliError::Usage("--sigma is required".into())),
        },
    };
    let dist_text = match args.distribution {
        Some(d) => d,
        None => ctx.config.raw("sample", "distribution").unwrap_or("gaussian").to_string(),
    };
    let dist = parse_distribution(&dist_text)?;
    let model = model_for(sigma.clone(), dist)?;
    let x0 = sample_model(n, &model, &mut stream_rng(ctx.seed, 0))?;
    let plan = ContaminationPlan::first_m(
        args.outliers,
        OutlierRule::CoordinateSpike {
            index: args.spike_index,
            magnitude: args.spike,
        },
    );
    let x = apply_contamination(&x0, &plan)?;

    let mut text = String::new();
    let _ = writeln!(text, "# command: sample");
    let _ = writeln!(text, "# distribution: {}", dist.label());
    let _ = writeln!(text, "# sigma: {}", joined(&sigma));
    if args.outliers > 0 {
        let _ = writeln!(
            text,
            "# outliers: first {} rows replaced by {}*e_{}",
            args.outliers,
            fmt_f64(args.spike),
            args.spike_index + 1
        );
    }
    let header: Vec<String> = (1..=x.p()).map(|j| format!("x{j}")).collect();
    let _ = writeln!(text, "{}", header.join(","));
    for i in 0..x.n() {
        let _ = writeln!(text, "{}", joined(&x.row(i)));
    }
    let config = config_line(
        ctx,
        &[
            ("n", n.to_string()),
            ("sigma", joined(&sigma)),
            ("distribution", dist.label()),
            ("outliers", args.outliers.to_string()),
        ],
    );
    emit(ctx, "sample.csv", text, config)
}
