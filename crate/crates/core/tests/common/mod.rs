//! Shared fixtures and invariant checks. Each check takes a grid size and a
//! seed and returns `Err` with a description on the first violation.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::Arc;

use gaborfio_core::canonical::{growth_equivalence, preimage_multiplicity, warp_table};
use gaborfio_core::diagnostics::{loglog_fit, probe_sup, spectral_norm};
use gaborfio_core::fio::{decay_envelope_fit, gabor_matrix, transport_audit};
use gaborfio_core::multiplier::{assemble_truncated, extract_symbols, truncation_error_curve};
use gaborfio_core::tf::{modulate, stft, tf_shift, translate};
use gaborfio_core::{
    window, BuiltinPhase, CanonicalMap, FioOperator, GaborFrameSpec, GaborMultiplier, Grid,
    Lattice, MultiplierSymbolTable, PhasePoint, Signal, SymbolTable, TamePhase, Weight,
};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = fn(usize, u64) -> Result<(), String>;

pub const SIZES: [usize; 3] = [16, 32, 64];
pub const SEEDS: [u64; 3] = [0, 1, 2];

pub fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn grid(n: usize) -> Grid {
    Grid::one_dim(n).unwrap()
}

/// Separable steps `(a, b)` with `n / (a b) = 4`.
pub fn density4(n: usize) -> (usize, usize) {
    match n {
        16 => (2, 2),
        32 => (2, 4),
        64 => (4, 4),
        128 => (4, 8),
        256 => (8, 8),
        _ => panic!("no density-4 lattice for n = {n}"),
    }
}

/// Steps with `n / (a b) = 1`.
pub fn critical(n: usize) -> (usize, usize) {
    match n {
        16 => (4, 4),
        32 => (4, 8),
        64 => (8, 8),
        _ => panic!("no critical lattice for n = {n}"),
    }
}

pub fn lattice(n: usize, (a, b): (usize, usize)) -> Arc<Lattice> {
    Arc::new(Lattice::separable(grid(n), a, b).unwrap())
}

pub fn gaussian_spec(n: usize, steps: (usize, usize), width: f64) -> GaborFrameSpec {
    let g = window::gaussian(grid(n), width).unwrap();
    GaborFrameSpec::new(&g, lattice(n, steps)).unwrap()
}

pub fn tight_spec(n: usize) -> GaborFrameSpec {
    gaussian_spec(n, density4(n), 1.0).tightened().unwrap()
}

pub fn phases() -> Vec<BuiltinPhase> {
    vec![
        BuiltinPhase::Linear,
        BuiltinPhase::Dilation { s: 2.0 },
        BuiltinPhase::Chirp { c: 1.0 },
        BuiltinPhase::Perturbed { eps: 0.1 },
    ]
}

pub fn operator(phase: BuiltinPhase, symbol: SymbolTable) -> FioOperator {
    FioOperator::new(Arc::new(phase), symbol).unwrap()
}

pub fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Uniformly random lattice point of the grid, in continuum units.
pub fn random_grid_point(g: &Grid, r: &mut ChaCha8Rng) -> PhasePoint {
    let n = g.n() as i64;
    let h = g.step();
    PhasePoint::new1(
        g.wrap_index(r.gen_range(0..n)) as f64 * h,
        g.wrap_index(r.gen_range(0..n)) as f64 * h,
    )
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---- time-frequency shifts ----

pub fn shifts_preserve_norm(n: usize, seed: u64) -> Result<(), String> {
    let g = grid(n);
    let mut r = rng(seed);
    for _ in 0..20 {
        let f = Signal::random(g, &mut r);
        let z = random_grid_point(&g, &mut r);
        let nf = f.norm();
        for (name, out) in [
            ("translate", translate(&f, &z.x).unwrap()),
            ("modulate", modulate(&f, &z.eta).unwrap()),
            ("tf_shift", tf_shift(&f, &z).unwrap()),
        ] {
            let dev = (out.norm() - nf).abs() / nf;
            ensure(dev < 1e-12, || {
                format!("{name} changed the norm by {dev:.2e}")
            })?;
        }
    }
    Ok(())
}

/// `T_x M_eta e_j = e^{-2 pi i x eta} M_eta T_x e_j` for every basis vector.
pub fn commutation_identity(n: usize, seed: u64) -> Result<(), String> {
    let g = grid(n);
    let mut r = rng(seed);
    for _ in 0..5 {
        let z = random_grid_point(&g, &mut r);
        let phase = Complex64::from_polar(1.0, -2.0 * PI * z.x[0] * z.eta[0]);
        for j in 0..n {
            let e = Signal::impulse(g, j);
            let tm = translate(&modulate(&e, &z.eta).unwrap(), &z.x).unwrap();
            let mt = modulate(&translate(&e, &z.x).unwrap(), &z.eta)
                .unwrap()
                .scaled(phase);
            let err = tm.max_abs_diff(&mt);
            ensure(err < 1e-12, || {
                format!("commutation fails at j = {j} by {err:.2e}")
            })?;
        }
    }
    Ok(())
}

/// `|V_g(pi(lambda) f)(z)| = |V_g f(z - lambda)|`.
pub fn stft_covariance(n: usize, seed: u64) -> Result<(), String> {
    let g = grid(n);
    let mut r = rng(seed);
    let w = window::gaussian(g, 1.0).unwrap();
    let f = Signal::random(g, &mut r);
    let v = stft(&f, &w).unwrap();
    for _ in 0..3 {
        let z = random_grid_point(&g, &mut r);
        let (k0, m0) = (g.steps_of(z.x[0]).unwrap(), g.steps_of(z.eta[0]).unwrap());
        let vs = stft(&tf_shift(&f, &z).unwrap(), &w).unwrap();
        for k in 0..n {
            for m in 0..n {
                let kk = g.reduce_index(k as i64 - k0);
                let mm = g.reduce_index(m as i64 - m0);
                let err = (vs[(k, m)].norm() - v[(kk, mm)].norm()).abs();
                ensure(err < 1e-10, || {
                    format!("covariance off by {err:.2e} at ({k}, {m})")
                })?;
            }
        }
    }
    Ok(())
}

/// `sum |V_g f|^2 h^{2d} = |f|^2 |g|^2`.
pub fn moyal_identity(n: usize, seed: u64) -> Result<(), String> {
    let g = grid(n);
    let mut r = rng(seed);
    let f = Signal::random(g, &mut r);
    let w = Signal::random(g, &mut r);
    let v = stft(&f, &w).unwrap();
    let h = g.step();
    let lhs: f64 = v.iter().map(|c| c.norm_sqr()).sum::<f64>() * h.powi(2);
    let rhs = f.norm_sq() * w.norm_sq();
    let rel = (lhs - rhs).abs() / rhs;
    ensure(rel < 1e-12, || format!("Moyal identity off by {rel:.2e}"))
}

// ---- frames ----

pub fn frame_operator_hermitian_psd(n: usize, _seed: u64) -> Result<(), String> {
    let sp = gaussian_spec(n, density4(n), 1.0);
    let s = sp.frame_operator().unwrap();
    let asym = max_abs(&(s - s.adjoint()));
    ensure(asym < 1e-12, || format!("|S - S*| = {asym:.2e}"))?;
    let b = sp.frame_bounds().unwrap();
    ensure(b.lower >= -1e-12 * b.upper, || {
        format!("negative eigenvalue {:.2e}", b.lower)
    })
}

pub fn frame_operator_commutes(n: usize, _seed: u64) -> Result<(), String> {
    let sp = gaussian_spec(n, density4(n), 1.0);
    let s = sp.frame_operator().unwrap().clone();
    let g = grid(n);
    for lambda in sp.lattice().points() {
        // matrix of pi(lambda), built column by column
        let cols: Vec<_> = (0..n)
            .map(|j| {
                tf_shift(&Signal::impulse(g, j), lambda)
                    .unwrap()
                    .to_dvector()
            })
            .collect();
        let p = DMatrix::from_columns(&cols);
        let err = max_abs(&(&s * &p - &p * &s));
        ensure(err < 1e-12, || format!("[S, pi({lambda:?})] = {err:.2e}"))?;
    }
    Ok(())
}

pub fn tight_window_bounds(n: usize, _seed: u64) -> Result<(), String> {
    let b = tight_spec(n).frame_bounds().unwrap();
    ensure(
        (b.lower - 1.0).abs() < 1e-8 && (b.upper - 1.0).abs() < 1e-8,
        || format!("tight bounds ({:.3e}, {:.3e})", b.lower, b.upper),
    )
}

/// Relative Parseval error for 20 random signals.
pub fn parseval_error(sp: &GaborFrameSpec, seed: u64) -> f64 {
    let mut r = rng(seed);
    (0..20)
        .map(|_| {
            let f = Signal::random(*sp.grid(), &mut r);
            let c = sp.analysis(&f).unwrap();
            (c.norm_squared() - f.norm_sq()).abs() / f.norm_sq()
        })
        .fold(0.0, f64::max)
}

pub fn parseval_identity(n: usize, seed: u64) -> Result<(), String> {
    let err = parseval_error(&tight_spec(n), seed);
    ensure(err < 1e-8, || format!("Parseval error {err:.2e}"))
}

pub fn undersampled_not_a_frame(n: usize, _seed: u64) -> Result<(), String> {
    let (a, b) = critical(n);
    for steps in [(a, b), (2 * a, b)] {
        let sp = gaussian_spec(n, steps, 1.0);
        let bd = sp.frame_bounds().unwrap();
        ensure(sp.lattice().redundancy() <= 1.0, || {
            "fixture is not undersampled".into()
        })?;
        ensure(bd.lower < 1e-10 * bd.upper, || {
            format!(
                "redundancy {} but lower bound {:.2e}",
                sp.lattice().redundancy(),
                bd.lower
            )
        })?;
    }
    Ok(())
}

// ---- canonical transformations ----

pub fn newton_residual(n: usize, seed: u64) -> Result<(), String> {
    let g = grid(n);
    let half = 0.5 * g.width();
    let mut r = rng(seed);
    for ph in phases() {
        let cm = CanonicalMap::new(Arc::new(ph)).unwrap();
        for _ in 0..1000 {
            let z = PhasePoint::new1(r.gen_range(-half..half), r.gen_range(-half..half));
            let img = cm.apply(&z).unwrap();
            // chi(y, eta) = (x, xi) with y = dPhi/deta(x, eta), xi = dPhi/dx(x, eta)
            let res = (ph.grad_eta(img.x[0], z.eta[0]) - z.x[0]).abs();
            let res_xi = (ph.grad_x(img.x[0], z.eta[0]) - img.eta[0]).abs();
            ensure(res < 1e-12 && res_xi < 1e-12, || {
                format!("{}: residual {res:.2e} at {z:?}", ph.name())
            })?;
        }
    }
    Ok(())
}

pub fn chi_prime_displacement(n: usize, _seed: u64) -> Result<(), String> {
    for steps in [density4(n), critical(n)] {
        let lat = lattice(n, steps);
        let bound = 2f64.sqrt() * lat.generator_norm();
        for ph in phases() {
            let cm = CanonicalMap::new(Arc::new(ph)).unwrap();
            for c in warp_table(&cm, &lat).unwrap() {
                ensure(c.displacement < bound, || {
                    format!(
                        "{}: displacement {:.3} >= {bound:.3}",
                        ph.name(),
                        c.displacement
                    )
                })?;
            }
        }
    }
    Ok(())
}

pub fn chi_prime_multiplicity(n: usize, _seed: u64) -> Result<(), String> {
    let lat = lattice(n, density4(n));
    for ph in phases() {
        let cm = CanonicalMap::new(Arc::new(ph)).unwrap();
        let table = warp_table(&cm, &lat).unwrap();
        let m = preimage_multiplicity(&table, lat.len());
        // area preservation: a lattice cell meets at most a few warped cells
        ensure((1..=8).contains(&m), || {
            format!("{}: preimage multiplicity {m}", ph.name())
        })?;
    }
    Ok(())
}

pub fn growth_equivalent(n: usize, seed: u64) -> Result<(), String> {
    let g = grid(n);
    let mut r = rng(seed);
    let samples: Vec<PhasePoint> = (0..200).map(|_| random_grid_point(&g, &mut r)).collect();
    for ph in phases() {
        let cm = CanonicalMap::new(Arc::new(ph)).unwrap();
        let k = growth_equivalence(&cm, &samples).unwrap();
        let lip = cm.lipschitz_estimate();
        ensure(k.is_finite() && k >= 1.0 && k <= 2.0 * lip + 2.0, || {
            format!("{}: K = {k:.3} with Lipschitz {lip:.3}", ph.name())
        })?;
    }
    Ok(())
}

// ---- Fourier integral operators ----

pub fn fio_linearity(n: usize, seed: u64) -> Result<(), String> {
    let g = grid(n);
    let mut r = rng(seed);
    for ph in phases() {
        let t = operator(ph, SymbolTable::bandlimited(g, 2, seed).unwrap());
        let f = Signal::random(g, &mut r);
        let u = Signal::random(g, &mut r);
        let (a, b) = (
            Complex64::new(r.gen(), r.gen()),
            Complex64::new(r.gen(), r.gen()),
        );
        let lhs = t.apply(&f.scaled(a).add(&u.scaled(b))).unwrap();
        let rhs = t
            .apply(&f)
            .unwrap()
            .scaled(a)
            .add(&t.apply(&u).unwrap().scaled(b));
        let err = lhs.sub(&rhs).norm();
        ensure(err < 1e-12 * (1.0 + rhs.norm()), || {
            format!("{}: linearity defect {err:.2e}", ph.name())
        })?;
    }
    Ok(())
}

pub fn identity_gabor_matrix_is_gram(n: usize, _seed: u64) -> Result<(), String> {
    let sp = tight_spec(n);
    let t = operator(BuiltinPhase::Linear, SymbolTable::constant(grid(n), one()));
    let gm = gabor_matrix(&t, &sp).unwrap();
    let k = sp.lattice().len();
    for mu in 0..k {
        let a = sp.atom(mu);
        for l in 0..k {
            let expected = a.inner(&sp.atom(l));
            let err = (gm.entries[(mu, l)] - expected).norm();
            ensure(err < 1e-10, || format!("G({mu}, {l}) off by {err:.2e}"))?;
        }
    }
    Ok(())
}

pub fn transport_within_bound(n: usize, _seed: u64) -> Result<(), String> {
    let sp = tight_spec(n);
    for ph in phases() {
        let t = operator(ph, SymbolTable::constant(grid(n), one()));
        let rep = transport_audit(&gabor_matrix(&t, &sp).unwrap(), t.canonical_map()).unwrap();
        ensure(rep.fraction_within == 1.0, || {
            format!(
                "{}: {:.3} of rows within {:.3}, worst {:.3}",
                ph.name(),
                rep.fraction_within,
                rep.bound,
                rep.max_distance
            )
        })?;
    }
    Ok(())
}

/// Decay slopes for band limits `N = 1, 2, 3` (dilation, tight Gaussian).
/// Only defined where the torus leaves room for a fit (`n >= 64`).
pub fn decay_monotone_in_band_limit(n: usize, seed: u64) -> Result<(), String> {
    if n < 64 {
        return Ok(());
    }
    let sp = tight_spec(n);
    let mut slopes = Vec::new();
    for order in 1..=3 {
        let t = operator(
            BuiltinPhase::Dilation { s: 2.0 },
            SymbolTable::bandlimited(grid(n), order, seed).unwrap(),
        );
        let g = gabor_matrix(&t, &sp).unwrap();
        slopes.push(
            decay_envelope_fit(&g, t.canonical_map(), 2.0 * order as f64, 0.75)
                .unwrap()
                .slope,
        );
    }
    ensure(slopes.windows(2).all(|w| w[1] <= w[0]), || {
        format!("slopes {slopes:?} not non-increasing")
    })
}

// ---- multipliers ----

pub fn exact_representation(n: usize, seed: u64) -> Result<(), String> {
    let sp = tight_spec(n);
    let g = grid(n);
    let full = MultiplierSymbolTable::full_radius(sp.lattice());
    for ph in phases() {
        for sym in [
            SymbolTable::constant(g, one()),
            SymbolTable::bandlimited(g, 2, seed).unwrap(),
            SymbolTable::weighted(g, 3.0, seed).unwrap(),
        ] {
            let t = operator(ph, sym);
            let table = extract_symbols(&t, &sp, t.canonical_map(), full).unwrap();
            let err =
                max_abs(&(assemble_truncated(&table, &sp, full).unwrap() - t.matrix().unwrap()));
            ensure(err < 1e-9, || {
                format!("{}: |T - sum| = {err:.2e}", ph.name())
            })?;
        }
    }
    Ok(())
}

/// `pi(chi'(mu) + nu) g = c_{nu,mu} pi(nu) pi(chi'(mu)) g` for 100 random pairs.
pub fn c_consistency(n: usize, seed: u64) -> Result<(), String> {
    let sp = tight_spec(n);
    let lat = sp.lattice().clone();
    let full = MultiplierSymbolTable::full_radius(&lat);
    let t = operator(
        BuiltinPhase::Chirp { c: 1.0 },
        SymbolTable::constant(grid(n), one()),
    );
    let table = extract_symbols(&t, &sp, t.canonical_map(), full).unwrap();
    let mut r = rng(seed);
    let g = sp.window();
    for _ in 0..100 {
        let i = r.gen_range(0..table.nu_set.len());
        let mu = r.gen_range(0..lat.len());
        let nu = &table.nu_set[i];
        let chi = lat.point(table.warp[mu]);
        let lhs = tf_shift(g, &chi.add(nu)).unwrap();
        let rhs = tf_shift(&tf_shift(g, chi).unwrap(), nu)
            .unwrap()
            .scaled(table.c[(i, mu)]);
        let err = lhs.max_abs_diff(&rhs);
        ensure(err < 1e-12, || format!("c-consistency off by {err:.2e}"))?;
        ensure((table.c[(i, mu)].norm() - 1.0).abs() < 1e-15, || {
            "c is not unimodular".into()
        })?;
    }
    Ok(())
}

/// Dyadic radii. The curve is not monotone for every pair of radii: on the
/// dilation at n = 64 the error rises slightly from L = 2 to L = 3, since
/// partial expansions over a redundant frame are not projections.
pub fn error_curve_non_increasing(n: usize, seed: u64) -> Result<(), String> {
    let sp = tight_spec(n);
    let full = MultiplierSymbolTable::full_radius(sp.lattice());
    let t = operator(
        BuiltinPhase::Dilation { s: 2.0 },
        SymbolTable::bandlimited(grid(n), 2, seed).unwrap(),
    );
    let table = extract_symbols(&t, &sp, t.canonical_map(), full).unwrap();
    let ls: Vec<f64> = [0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0]
        .iter()
        .map(|&l: &f64| l.min(full))
        .collect();
    let c = truncation_error_curve(
        &t.matrix().unwrap(),
        &table,
        &sp,
        &ls,
        2.0,
        &Weight::unit(),
        0,
        0,
    )
    .unwrap();
    ensure(c.is_non_increasing(1e-10), || {
        format!("error curve {:?} increases", c.points)
    })
}

pub fn multiplier_linearity(n: usize, seed: u64) -> Result<(), String> {
    let sp = tight_spec(n);
    let k = sp.lattice().len();
    let mut r = rng(seed);
    let mut rand_sym = || {
        (0..k)
            .map(|_| Complex64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)))
            .collect::<Vec<_>>()
    };
    let (a, b) = (rand_sym(), rand_sym());
    let sum: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
    let cm = CanonicalMap::new(Arc::new(BuiltinPhase::Chirp { c: 1.0 })).unwrap();
    let ma = GaborMultiplier::warped(sp.clone(), a, &cm)
        .unwrap()
        .matrix();
    let mb = GaborMultiplier::warped(sp.clone(), b, &cm)
        .unwrap()
        .matrix();
    let mab = GaborMultiplier::warped(sp, sum, &cm).unwrap().matrix();
    let err = max_abs(&(mab - ma - mb));
    ensure(err < 1e-12, || format!("M_(a+b) - M_a - M_b = {err:.2e}"))
}

// ---- diagnostics ----

pub fn probe_below_spectral(n: usize, seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let m = DMatrix::from_fn(n, n, |_, _| {
        Complex64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0))
    });
    let sv = spectral_norm(&m).value;
    let pr = probe_sup(&m, 200, seed).value;
    ensure(pr <= sv + 1e-10, || {
        format!("probe {pr:.6e} above spectral {sv:.6e}")
    })
}

pub fn loglog_scale_invariant(n: usize, seed: u64) -> Result<(), String> {
    let mut r = rng(seed ^ n as u64);
    let pts: Vec<(f64, f64)> = (1..=n)
        .map(|i| {
            (
                i as f64,
                (i as f64).powf(-3.0) * (1.0 + 0.3 * r.gen::<f64>()),
            )
        })
        .collect();
    let base = loglog_fit(&pts).unwrap();
    for c in [1e-6, 0.5, 7.0, 1e8] {
        let scaled: Vec<(f64, f64)> = pts.iter().map(|&(x, y)| (x, c * y)).collect();
        let f = loglog_fit(&scaled).unwrap();
        ensure((f.slope - base.slope).abs() < 1e-12, || {
            format!("slope moved by {:.2e}", f.slope - base.slope)
        })?;
    }
    Ok(())
}

/// Every library invariant, by name.
pub fn all_checks() -> Vec<(&'static str, Check)> {
    vec![
        ("shifts_preserve_norm", shifts_preserve_norm),
        ("commutation_identity", commutation_identity),
        ("stft_covariance", stft_covariance),
        ("moyal_identity", moyal_identity),
        ("frame_operator_hermitian_psd", frame_operator_hermitian_psd),
        ("frame_operator_commutes", frame_operator_commutes),
        ("tight_window_bounds", tight_window_bounds),
        ("parseval_identity", parseval_identity),
        ("undersampled_not_a_frame", undersampled_not_a_frame),
        ("newton_residual", newton_residual),
        ("chi_prime_displacement", chi_prime_displacement),
        ("chi_prime_multiplicity", chi_prime_multiplicity),
        ("growth_equivalent", growth_equivalent),
        ("fio_linearity", fio_linearity),
        (
            "identity_gabor_matrix_is_gram",
            identity_gabor_matrix_is_gram,
        ),
        ("transport_within_bound", transport_within_bound),
        ("decay_monotone_in_band_limit", decay_monotone_in_band_limit),
        ("exact_representation", exact_representation),
        ("c_consistency", c_consistency),
        ("error_curve_non_increasing", error_curve_non_increasing),
        ("multiplier_linearity", multiplier_linearity),
        ("probe_below_spectral", probe_below_spectral),
        ("loglog_scale_invariant", loglog_scale_invariant),
    ]
}
