use std::fs;
use std::path::Path;

use ffdistinct::energy::{self, CountTable};
use ffdistinct::experiments::{self, ExperimentPlan, ExperimentReport};
use ffdistinct::geometry::{self, Thresholds};
use ffdistinct::spectra::{self, CayleyGraph, Spectrum, SPECTRUM_LIMIT};
use ffdistinct::{
    AffineSpace, DiagonalPoly, Error, Family, FieldContext, QuadraticForm, Result, Variety,
};
use serde_json::{json, Value};

use crate::args::*;

/// Text for the main output plus whether every hard audit passed.
pub struct Output {
    pub text: String,
    pub audits_pass: bool,
}

impl Output {
    fn ok(text: String) -> Self {
        Output {
            text,
            audits_pass: true,
        }
    }
}

fn json_text(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json value") + "\n"
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn family(arg: FamilyArg, j: u32) -> Family {
    match arg {
        FamilyArg::Sphere => Family::Sphere { j },
        FamilyArg::Paraboloid => Family::Paraboloid,
        FamilyArg::Minkowski => Family::Minkowski { j },
    }
}

fn field(args: &FieldArgs) -> Result<FieldContext> {
    FieldContext::new(args.p, args.n)
}

fn load_variety(space: &AffineSpace, args: &VarietyArgs) -> Result<(String, Variety)> {
    match (&args.input, args.family) {
        (Some(path), _) => Ok((
            path.display().to_string(),
            Variety::from_text(space, &read(path)?)?,
        )),
        (None, Some(f)) => {
            let fam = family(f, args.j);
            Ok((fam.name(), geometry::builtin_variety(space, fam)?))
        }
        (None, None) => Err(Error::InvalidPlan("give --family or --input".into())),
    }
}

fn subset(v: &Variety, args: &SubsetArgs) -> Result<Vec<usize>> {
    match args.subset.as_str() {
        "all" => Ok(v.points.clone()),
        s => {
            let n = s
                .strip_prefix("random:")
                .and_then(|n| n.parse::<usize>().ok())
                .ok_or_else(|| {
                    Error::Parse(format!("--subset must be `all` or `random:N`, got {s:?}"))
                })?;
            experiments::sample_subset(&v.points, n, args.seed, 0)
        }
    }
}

fn form(f: &FieldContext, d: usize, diag: &Option<Vec<u32>>) -> Result<QuadraticForm> {
    match diag {
        None => Ok(QuadraticForm::sum_of_squares(f, d)),
        Some(c) if c.len() != d => Err(Error::DimensionMismatch {
            expected: d,
            got: c.len(),
        }),
        Some(c) => QuadraticForm::diagonal(f, c),
    }
}

fn poly(f: &FieldContext, d: usize, coeffs: &Option<Vec<u32>>, s: u32) -> Result<DiagonalPoly> {
    let c = coeffs.clone().unwrap_or_else(|| vec![1; d]);
    if c.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: c.len(),
        });
    }
    DiagonalPoly::new(f, c, s)
}

fn spectrum_json(sp: &Spectrum) -> Value {
    let (max_nontrivial, _) = sp.max_nontrivial();
    json!({
        "n": sp.order(),
        "degree": sp.degree(),
        "lambda": sp.lambda(),
        "argmax_m": sp.argmax(),
        "max_nontrivial": max_nontrivial,
    })
}

fn write_table(table: &Option<std::path::PathBuf>, sp: &Spectrum) -> Result<()> {
    match table {
        Some(path) => write(path, &sp.to_table()),
        None => Ok(()),
    }
}

fn counts_text(t: &CountTable, pretty: bool, label: &str) -> String {
    if !pretty {
        return t.to_csv();
    }
    t.values
        .iter()
        .enumerate()
        .map(|(i, v)| format!("{label}({i}) = {v}\n"))
        .collect()
}

pub fn run(cmd: Command, pretty: bool) -> Result<Output> {
    match cmd {
        Command::Variety(c) => variety(c, pretty),
        Command::Spectrum(c) => spectrum(c, pretty),
        Command::Energy(c) => energy_cmd(c, pretty),
        Command::Experiment(c) => experiment(c, pretty),
        Command::Audit(c) => audit(c, pretty),
    }
}

fn variety(cmd: VarietyCmd, pretty: bool) -> Result<Output> {
    match cmd {
        VarietyCmd::Enum(args) => {
            let f = field(&args.field)?;
            let space = AffineSpace::new(&f, args.field.d, geometry::ENUMERATION_LIMIT)?;
            let (_, v) = load_variety(&space, &args)?;
            Ok(Output::ok(v.to_text(&space)))
        }
        VarietyCmd::Check {
            variety: args,
            c1_lo,
            c1_hi,
            c2_max,
        } => {
            let f = field(&args.field)?;
            let space = AffineSpace::new(&f, args.field.d, geometry::REGULARITY_LIMIT)?;
            let (name, v) = load_variety(&space, &args)?;
            let report = geometry::regularity_check(
                &space,
                &v,
                Thresholds {
                    c1_lo,
                    c1_hi,
                    c2_max,
                },
            )?;
            let text = if pretty {
                format!(
                    "variety {name} over F_{}^{}: |V| = {}\nC1 = {:.4}\nC2 = {:.4}\nmax |character sum| = {:.6}\nverdict {}\n",
                    f.q(),
                    args.field.d,
                    report.size,
                    report.size_constant,
                    report.fourier_constant,
                    report.max_character_sum,
                    if report.regular { "REGULAR" } else { "NOT REGULAR" }
                )
            } else {
                serde_json::to_string_pretty(&report).expect("report") + "\n"
            };
            Ok(Output::ok(text))
        }
    }
}

fn spectrum(cmd: SpectrumCmd, pretty: bool) -> Result<Output> {
    match cmd {
        SpectrumCmd::Cayley {
            variety: args,
            table,
        } => {
            let f = field(&args.field)?;
            let space = AffineSpace::new(&f, args.field.d, SPECTRUM_LIMIT)?;
            let (name, v) = load_variety(&space, &args)?;
            let sp = spectra::cayley_spectrum(&space, &v.points)?;
            write_table(&table, &sp)?;
            let text = if pretty {
                format!(
                    "C_V for {name}: n = {}, degree = {}, lambda = {:.6}\n",
                    sp.order(),
                    sp.degree(),
                    sp.lambda()
                )
            } else {
                json_text(
                    &json!({ "graph": "cayley", "variety": name, "spectrum": spectrum_json(&sp) }),
                )
            };
            Ok(Output::ok(text))
        }
        SpectrumCmd::Euclidean {
            field: fa,
            t,
            form: diag,
            table,
        } => {
            let f = field(&fa)?;
            let space = AffineSpace::new(&f, fa.d, SPECTRUM_LIMIT)?;
            let q = form(&f, fa.d, &diag)?;
            let t = f.check(t as u64)?;
            let e = spectra::euclidean_spectrum(&space, &q, t)?;
            write_table(&table, &e.spectrum)?;
            let ok = e.within_bound.unwrap_or(true);
            let text = if pretty {
                format!(
                    "E_q(d,Q,{t}): n = {}, degree = {}, lambda = {:.6}, bound = {}, {}\n",
                    e.spectrum.order(),
                    e.spectrum.degree(),
                    e.spectrum.lambda(),
                    e.bound.map_or("none (t = 0)".into(), |b| format!("{b:.6}")),
                    if ok { "within bound" } else { "BOUND VIOLATED" }
                )
            } else {
                json_text(&json!({
                    "graph": "euclidean",
                    "t": t,
                    "spectrum": spectrum_json(&e.spectrum),
                    "bound": e.bound,
                    "within_bound": e.within_bound,
                    "outside_hypothesis": e.outside_hypothesis,
                }))
            };
            Ok(Output {
                text,
                audits_pass: ok,
            })
        }
        SpectrumCmd::Affine {
            field: fa,
            coeffs,
            s,
            table,
        } => {
            let f = field(&fa)?;
            let p = poly(&f, fa.d, &coeffs, s)?;
            let a = spectra::affine_cayley_spectrum(&f, &p)?;
            write_table(&table, &a.spectrum)?;
            let text =
                if pretty {
                    format!(
                    "C_P' for s = {s}: n = {}, degree = {}, lambda = {:.6}, bound q^d = {}, {}\n",
                    a.spectrum.order(),
                    a.spectrum.degree(),
                    a.spectrum.lambda(),
                    a.bound,
                    if a.within_bound { "within bound" } else { "BOUND VIOLATED" }
                )
                } else {
                    json_text(&json!({
                        "graph": "affine",
                        "s": s,
                        "coeffs": p.coeffs(),
                        "spectrum": spectrum_json(&a.spectrum),
                        "bound": a.bound,
                        "within_bound": a.within_bound,
                    }))
                };
            Ok(Output {
                text,
                audits_pass: a.within_bound,
            })
        }
    }
}

fn energy_cmd(cmd: EnergyCmd, pretty: bool) -> Result<Output> {
    let set_args = match &cmd {
        EnergyCmd::Lambda { set, .. }
        | EnergyCmd::Nu { set, .. }
        | EnergyCmd::Nup { set, .. }
        | EnergyCmd::Delta { set, .. } => set,
    };
    let fa = &set_args.variety.field;
    let f = field(fa)?;
    let space = AffineSpace::new(&f, fa.d, SPECTRUM_LIMIT)?;
    let (_, v) = load_variety(&space, &set_args.variety)?;
    let e = subset(&v, set_args)?;
    let text = match &cmd {
        EnergyCmd::Lambda { k, .. } => {
            let l = energy::lambda_k(&space, &e, *k)?;
            if pretty {
                format!("Lambda_{k} = {l} (|E| = {})\n", e.len())
            } else {
                format!("{l}\n")
            }
        }
        EnergyCmd::Nu { k, form: diag, .. } => {
            let q = form(&f, fa.d, diag)?;
            counts_text(
                &energy::nu_k(&space, &e, &q, *k)?,
                pretty,
                &format!("nu_{k}"),
            )
        }
        EnergyCmd::Nup {
            k, x, coeffs, s, ..
        } => {
            let p = poly(&f, fa.d, coeffs, *s)?;
            let shifts = x
                .iter()
                .map(|&t| f.check(t as u64))
                .collect::<Result<Vec<_>>>()?;
            counts_text(
                &energy::nu_p_k(&space, &e, &shifts, &p, *k)?,
                pretty,
                &format!("nu_P,{k}"),
            )
        }
        EnergyCmd::Delta { k, form: diag, .. } => {
            let q = form(&f, fa.d, diag)?;
            let delta = energy::delta_set(&space, &e, &q, *k)?;
            if pretty {
                let vals: Vec<String> = delta.values.iter().map(|t| t.to_string()).collect();
                format!(
                    "Delta_{k} = {{{}}}\ncovers F_q^*: {}\n",
                    vals.join(", "),
                    delta.covers_fq_star
                )
            } else {
                json_text(&json!({ "k": k, "size": e.len(), "values": delta.values,
                    "covers_fq_star": delta.covers_fq_star, "covers_fq": delta.covers_fq }))
            }
        }
    };
    Ok(Output::ok(text))
}

fn finish<R: serde::Serialize>(
    report: ExperimentReport<R>,
    args: &PlanArgs,
    pretty: bool,
) -> Result<Output> {
    if let Some(path) = &args.csv {
        write(path, &report.to_csv()?)?;
    }
    let text = if pretty {
        let mut s = format!(
            "{} experiment, q = {}, variety {} (|V| = {}), critical size {:.2}\n",
            report.kind, report.q, report.variety.family, report.variety.size, report.critical_size
        );
        for a in &report.aggregates {
            s.push_str(&format!(
                "  size {:>6}: {} trials, success {:.2}, mean {}, max {}\n",
                a.size,
                a.trials,
                a.success_rate,
                a.mean_value.map_or("-".into(), |v| format!("{v:.4}")),
                a.max_value.map_or("-".into(), |v| format!("{v:.4}")),
            ));
        }
        s.push_str(&format!(
            "audits: {} checked, {} violated\n",
            report.audits.checked, report.audits.violations
        ));
        s
    } else {
        report.to_json() + "\n"
    };
    Ok(Output {
        text,
        audits_pass: report.audits_pass(),
    })
}

fn experiment(cmd: ExperimentCmd, pretty: bool) -> Result<Output> {
    let (args, kind) = match &cmd {
        ExperimentCmd::Coverage(a) => (a, 0),
        ExperimentCmd::Energy(a) => (a, 1),
        ExperimentCmd::Sumset(a) => (a, 2),
    };
    let plan = ExperimentPlan::from_toml(&read(&args.plan)?)?;
    match kind {
        0 => finish(experiments::coverage_experiment(&plan)?, args, pretty),
        1 => finish(experiments::energy_bound_experiment(&plan)?, args, pretty),
        _ => finish(experiments::sumset_experiment(&plan)?, args, pretty),
    }
}

fn audit(cmd: AuditCmd, pretty: bool) -> Result<Output> {
    let AuditCmd::Mixing {
        variety: args,
        pairs,
        support,
        seed,
    } = cmd;
    let f = field(&args.field)?;
    let space = AffineSpace::new(&f, args.field.d, SPECTRUM_LIMIT)?;
    let (name, v) = load_variety(&space, &args)?;
    let sp = spectra::cayley_spectrum(&space, &v.points)?;
    let graph = CayleyGraph::new(space, &v.points)?;
    let sweep = spectra::mixing_sweep(&sp, &graph, pairs, support, seed);
    let text = if pretty {
        format!(
            "mixing audit on C_V for {name}: {} pairs, {} violations, min gap/bound {}\n",
            sweep.pairs,
            sweep.violations,
            sweep
                .min_relative_gap
                .map_or("-".into(), |g| format!("{g:.4}"))
        )
    } else {
        json_text(&json!({ "graph": "cayley", "variety": name, "seed": seed, "sweep": sweep }))
    };
    Ok(Output {
        text,
        audits_pass: sweep.violations == 0,
    })
}
