//! The five experiments. Each returns the report and tables to write; a
//! failure that still produced a report (a non-frame) is carried in
//! [`Run::failure`].

use std::sync::Arc;

use gaborfio_core::diagnostics::{default_slope_tolerance, spectral_norm, Provenance, Report};
use gaborfio_core::dilation::dilation_comparison;
use gaborfio_core::fio::{decay_envelope_fit, gabor_matrix, transport_audit};
use gaborfio_core::frame::warped_frame_check;
use gaborfio_core::multiplier::{assemble_truncated, extract_symbols, truncation_error_curve};
use gaborfio_core::{
    BuiltinPhase, CanonicalMap, FioOperator, GaborFrameSpec, Lattice, MultiplierSymbolTable,
    Signal, Weight,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{RunConfig, SymbolConfig, WindowConfig};
use crate::error::{CliError, CliResult};
use crate::output::{Outcome, Table};

pub const TOOL: &str = "gaborfio";

/// Relative lower-to-upper bound ratio under which a warped system is
/// reported as not a frame.
pub const WARPED_FRAME_RTOL: f64 = 1e-10;

pub struct Context {
    pub command: String,
    pub seed: u64,
    pub threads: usize,
}

pub struct Run {
    pub outcome: Outcome,
    pub failure: Option<CliError>,
}

impl Run {
    fn ok(report: Report, tables: Vec<Table>) -> Self {
        Self {
            outcome: Outcome { report, tables },
            failure: None,
        }
    }
}

fn new_report(cfg: &RunConfig, ctx: &Context) -> Report {
    let config = serde_json::to_value(cfg).unwrap_or(serde_json::Value::Null);
    Report::new(
        config,
        Provenance {
            tool: TOOL.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: ctx.command.clone(),
            seed: ctx.seed,
            threads: ctx.threads,
        },
    )
}

fn operator(cfg: &RunConfig, sym: SymbolConfig, seed: u64) -> CliResult<FioOperator> {
    Ok(FioOperator::new(
        Arc::new(cfg.phase),
        cfg.symbol_table(sym, seed)?,
    )?)
}

/// Bounds, tight and dual windows, Parseval residual of the tight system.
pub fn frame_check(cfg: &RunConfig, ctx: &Context) -> CliResult<Run> {
    let mut report = new_report(cfg, ctx);
    let lattice = cfg.lattice()?;
    let g = cfg.window()?;
    let sp = GaborFrameSpec::new(&g, lattice.clone())?;
    let b = sp.frame_bounds()?;
    report.norm("lower", b.lower);
    report.norm("upper", b.upper);
    report.norm("redundancy", lattice.redundancy());
    report.norm("atoms", lattice.len());
    report.norm("already_tight", b.is_tight(1e-8));
    if !b.is_frame() {
        report.verdict(
            "frame",
            false,
            format!("lower bound {:e} against upper {:e}", b.lower, b.upper),
        );
        return Ok(Run {
            outcome: Outcome {
                report,
                tables: Vec::new(),
            },
            failure: Some(CliError::NotAFrame {
                lower: b.lower,
                upper: b.upper,
            }),
        });
    }
    report.verdict(
        "frame",
        true,
        format!("condition number {:.6e}", b.condition()),
    );

    let tight = sp.canonical_tight_window()?;
    let dual = sp.dual_window()?;
    let tsp = GaborFrameSpec::with_window(tight.clone(), lattice)?;
    let tb = tsp.frame_bounds()?;
    report.norm("tight_lower", tb.lower);
    report.norm("tight_upper", tb.upper);

    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let (mut parseval, mut recon) = (0.0f64, 0.0f64);
    for _ in 0..cfg.experiment.signals {
        let f = Signal::random(*tsp.grid(), &mut rng);
        let c = tsp.analysis(&f)?;
        parseval = parseval.max((c.norm_squared() - f.norm_sq()).abs() / f.norm_sq());
        recon = recon.max(tsp.synthesis(&c)?.sub(&f).norm() / f.norm());
    }
    report.norm("parseval_residual", parseval);
    report.norm("reconstruction_residual", recon);
    report.verdict(
        "parseval",
        parseval < 1e-8,
        format!(
            "max relative residual {parseval:.3e} over {} signals",
            cfg.experiment.signals
        ),
    );

    let grid = *tsp.grid();
    let mut t = Table::new(
        "windows.csv",
        &[
            "j",
            "x",
            "window_re",
            "window_im",
            "tight_re",
            "tight_im",
            "dual_re",
            "dual_im",
        ],
    );
    for j in 0..grid.len() {
        let (w, u, v) = (g.values()[j], tight.values()[j], dual.values()[j]);
        t.push(vec![
            j.into(),
            grid.position(j)[0].into(),
            w.re.into(),
            w.im.into(),
            u.re.into(),
            u.im.into(),
            v.re.into(),
            v.im.into(),
        ]);
    }
    Ok(Run::ok(report, vec![t]))
}

fn claimed_exponent(cfg: &RunConfig, sym: SymbolConfig) -> f64 {
    cfg.experiment.s_claim.unwrap_or(match sym {
        SymbolConfig::Bandlimited { order } => 2.0 * order as f64,
        SymbolConfig::Weighted { s } => s,
        SymbolConfig::Constant => 2.0,
    })
}

fn decay_table(name: &str, pairs: &[(f64, f64)]) -> Table {
    let mut t = Table::new(name, &["distance", "max_abs"]);
    for &(lr, lv) in pairs {
        t.push(vec![lr.exp().into(), lv.exp().into()]);
    }
    t
}

/// Off-diagonal decay of the Gabor matrix around the graph of `chi`.
pub fn decay_scan(cfg: &RunConfig, ctx: &Context) -> CliResult<Run> {
    cfg.require_one_dim()?;
    let mut report = new_report(cfg, ctx);
    let spec = cfg.spec()?;
    let tol = cfg
        .experiment
        .tolerance
        .unwrap_or_else(|| default_slope_tolerance(cfg.grid.n));

    let t = operator(cfg, cfg.symbol, ctx.seed)?;
    let g = gabor_matrix(&t, &spec)?;
    let claim = claimed_exponent(cfg, cfg.symbol);
    let dr = decay_envelope_fit(&g, t.canonical_map(), claim, tol)?;
    report.slope("decay", dr.slope);
    report.norm("fitted_bins", dr.fitted_bins);
    report.norm("fit_residual", dr.residual);
    report.verdict(
        "decay",
        dr.pass,
        format!("slope {:.4} against claim -{claim} + {tol}", dr.slope),
    );

    let tr = transport_audit(&g, t.canonical_map())?;
    report.norm("transport_bound", tr.bound);
    report.norm("transport_max_distance", tr.max_distance);
    report.norm("transport_fraction", tr.fraction_within);
    report.verdict(
        "transport",
        tr.fraction_within == 1.0,
        format!(
            "row maxima within {:.4} of chi(mu): {:.4}",
            tr.bound, tr.fraction_within
        ),
    );
    let mut tables = vec![decay_table("decay.csv", &dr.pairs)];

    if let Some(other) = cfg.compare_symbol {
        let t2 = operator(cfg, other, ctx.seed)?;
        let g2 = gabor_matrix(&t2, &spec)?;
        let claim2 = claimed_exponent(cfg, other);
        let dr2 = decay_envelope_fit(&g2, t2.canonical_map(), claim2, tol)?;
        let diff = dr2.slope - dr.slope;
        report.slope("decay_compare", dr2.slope);
        report.slope("decay_difference", diff);
        report.verdict(
            "paired_steepening",
            diff <= -1.0,
            format!("second slope minus first {diff:.4}"),
        );
        tables.push(decay_table("decay_compare.csv", &dr2.pairs));
    }
    Ok(Run::ok(report, tables))
}

/// Truncated multiplier expansions `T_L` and their errors.
pub fn approximate(cfg: &RunConfig, ctx: &Context) -> CliResult<Run> {
    cfg.require_one_dim()?;
    let mut report = new_report(cfg, ctx);
    let spec = cfg.spec()?;
    let lattice = spec.lattice().clone();
    let t = operator(cfg, cfg.symbol, ctx.seed)?;
    let tm = t.matrix()?;
    let full = MultiplierSymbolTable::full_radius(&lattice);
    let radius = cfg.nu_radius(&lattice);
    let ls = cfg.l_list(radius);
    if let Some(&l) = ls.iter().find(|&&l| l > radius + 1e-12) {
        return Err(CliError::ExtractionRadius(format!(
            "truncation radius {l} exceeds the extraction radius {radius}"
        )));
    }
    let table = extract_symbols(&t, &spec, t.canonical_map(), radius)?;
    let e = &cfg.experiment;
    let weight = Weight::polynomial(e.weight_s)?;
    let curve = truncation_error_curve(&tm, &table, &spec, &ls, e.p, &weight, e.probes, ctx.seed)?;
    let tnorm = spectral_norm(&tm).value;
    report.norm("operator", tnorm);
    report.norm("extraction_radius", table.radius);
    report.norm("shifts", table.nu_set.len());
    report.norm("saturation_floor", curve.floor);
    report.norm("method", curve.method);

    if table.radius >= full - 1e-12 {
        let tl = assemble_truncated(&table, &spec, table.radius)?;
        let res = spectral_norm(&(&tm - tl)).value / tnorm;
        report.norm("reconstruction_residual", res);
        report.verdict(
            "reconstruction",
            res < 1e-9,
            format!("relative residual {res:.3e} at full radius"),
        );
    }

    let mono = curve.is_non_increasing(1e-10 * tnorm);
    report.verdict("monotone", mono, "error non-increasing across the radii");
    let tol = e.tolerance.unwrap_or(0.75);
    match (&curve.fit, cfg.symbol) {
        (Some(fit), SymbolConfig::Bandlimited { order }) => {
            let claim = e.weight_s + 2.0 - 2.0 * order as f64;
            report.slope("truncation", fit.slope);
            report.verdict(
                "rate",
                fit.slope <= claim + tol,
                format!(
                    "slope {:.4} against {claim} + {tol} over {} radii",
                    fit.slope, curve.fitted
                ),
            );
        }
        (Some(fit), _) => report.slope("truncation", fit.slope),
        (None, _) => {
            report.slope("truncation", serde_json::Value::Null);
            report.verdict("rate", false, "fewer than 3 unsaturated radii to fit");
        }
    }

    let mut ct = Table::new("error_curve.csv", &["L", "error", "relative_error"]);
    for &(l, err) in &curve.points {
        ct.push(vec![l.into(), err.into(), (err / tnorm).into()]);
    }
    let sup = table.sup_norms();
    let mut st = Table::new(
        "symbols.csv",
        &["index", "nu_x", "nu_eta", "nu_norm", "sup_abs"],
    );
    for (i, nu) in table.nu_set.iter().enumerate() {
        st.push(vec![
            i.into(),
            nu.x[0].into(),
            nu.eta[0].into(),
            table.nu_norm[i].into(),
            sup[i].into(),
        ]);
    }
    Ok(Run::ok(report, vec![ct, st]))
}

/// Closed-form against extracted symbols for the Gaussian dilation.
pub fn dilation_demo(cfg: &RunConfig, ctx: &Context) -> CliResult<Run> {
    cfg.require_one_dim()?;
    match cfg.window {
        WindowConfig::Gaussian { width: 1.0 } => {}
        WindowConfig::Gaussian { width } => {
            return Err(CliError::config(
                "window.width",
                format!("the closed form needs width 1, got {width}"),
            ))
        }
        _ => {
            return Err(CliError::config(
                "window.kind",
                "the closed form needs a gaussian window",
            ))
        }
    }
    let BuiltinPhase::Dilation { s } = cfg.phase else {
        return Err(CliError::config(
            "phase.kind",
            "the closed form needs a dilation phase",
        ));
    };
    let steps = square_spacing(&*cfg.lattice()?).ok_or_else(|| {
        CliError::config(
            "lattice.generator",
            "the closed form needs a square diagonal generator",
        )
    })?;
    let e = &cfg.experiment;
    let nu_radius = e.nu_radius.unwrap_or(0.5);
    let cmp = dilation_comparison(s, cfg.grid.n, steps, nu_radius, e.quantile)?;

    let mut report = new_report(cfg, ctx);
    report.norm("alpha", cmp.alpha);
    report.norm("beta", cmp.beta);
    report.norm("entries", cmp.rows.len());
    report.norm("max_rel_error", cmp.max_rel_error);
    report.norm("c_deviation", cmp.c_deviation);
    report.verdict(
        "agreement",
        cmp.max_rel_error < e.max_rel_error,
        format!(
            "max relative error {:.3e} over the top {} by magnitude",
            cmp.max_rel_error, e.quantile
        ),
    );
    report.verdict(
        "unimodular_c",
        cmp.c_deviation < 1e-12,
        format!("max ||c| - 1| = {:.3e}", cmp.c_deviation),
    );

    let mut t = Table::new(
        "dilation.csv",
        &[
            "k",
            "l",
            "k_prime",
            "l_prime",
            "closed_form_re",
            "closed_form_im",
            "numeric_re",
            "numeric_im",
            "abs_err",
        ],
    );
    for r in &cmp.rows {
        t.push(vec![
            r.k.into(),
            r.l.into(),
            r.kp.into(),
            r.lp.into(),
            r.closed_form.re.into(),
            r.closed_form.im.into(),
            r.numeric.re.into(),
            r.numeric.im.into(),
            r.abs_err.into(),
        ]);
    }
    Ok(Run::ok(report, vec![t]))
}

fn square_spacing(lat: &Lattice) -> Option<usize> {
    let a = lat.generator();
    (a[(0, 1)] == 0 && a[(1, 0)] == 0 && a[(0, 0)] == a[(1, 1)] && a[(0, 0)] > 0)
        .then(|| a[(0, 0)] as usize)
}

/// Frame bounds of the system warped by `chi`, plus a density sweep.
pub fn warp_frame(cfg: &RunConfig, ctx: &Context) -> CliResult<Run> {
    cfg.require_one_dim()?;
    let mut report = new_report(cfg, ctx);
    let grid = cfg.grid()?;
    let lattice = cfg.lattice()?;
    let g = cfg.window()?;
    let cm = CanonicalMap::new(Arc::new(cfg.phase))?;
    let warp = |z: &gaborfio_core::PhasePoint| cm.images(z, &grid);

    let rep = warped_frame_check(&g, &lattice, warp)?;
    let is_frame =
        rep.bounds.upper > 0.0 && rep.bounds.lower >= WARPED_FRAME_RTOL * rep.bounds.upper;
    report.norm("lower", rep.bounds.lower);
    report.norm("upper", rep.bounds.upper);
    report.norm("atoms", rep.atoms);
    report.norm("max_rounding", rep.max_rounding);
    report.norm("redundancy", lattice.redundancy());
    report.verdict(
        "is_frame",
        is_frame,
        format!("lower/upper = {:.3e}", rep.bounds.lower / rep.bounds.upper),
    );

    let mut steps = cfg.experiment.delta_steps.clone();
    steps.sort_unstable_by(|a, b| b.cmp(a));
    steps.dedup();
    let mut t = Table::new(
        "delta_sweep.csv",
        &["steps", "redundancy", "lower", "upper"],
    );
    let mut lows = Vec::with_capacity(steps.len());
    for &a in &steps {
        let lat = Lattice::separable(grid, a, a)?;
        let r = warped_frame_check(&g, &lat, warp)?;
        t.push(vec![
            a.into(),
            lat.redundancy().into(),
            r.bounds.lower.into(),
            r.bounds.upper.into(),
        ]);
        lows.push((r.bounds.lower, r.bounds.upper));
    }
    let mono = lows.windows(2).all(|w| w[1].0 >= w[0].0 - 1e-12 * w[1].1);
    report.verdict(
        "delta_sweep_monotone",
        mono,
        "lower bound non-decreasing as density increases",
    );
    Ok(Run::ok(report, vec![t]))
}
