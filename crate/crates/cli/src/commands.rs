use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use toruslab::analysis::{
    count_in, good_value_check, match_lattice, scaling_fit, window, CountPoint, GoodVerdict, MatchOptions,
    MatchReport, ScalingFit, WindowSpec,
};
use toruslab::bargmann::{
    legendre_duality_check, parseval_check, verify_trace_bound, DualityReport, ParsevalReport, PolyWeight,
};
use toruslab::classical::{scan, surface_id, torus_average, width_vs_height, ClassicalScan, ScanOptions};
use toruslab::geometry::SurfaceProfile;
use toruslab::io::{self, num, Provenance, Table};
use toruslab::normalform::{gt_bound_fit, secular_reduce, FourierTaylorSymbol, GtBoundRow, ReductionReport, XiGrid, XiSymbol};
use toruslab::observable::Observable;
use toruslab::quantization::{ebk_lattice, LatticeOptions};
use toruslab::spectra::{
    eigensolve_in, full_spectrum_rotational, observable_id, operator_2d, Rect, SpectrumParams, SpectrumResult,
    POINTS_PER_WAVELENGTH,
};

use crate::config::{Config, ConfigError, NormalformCfg, SpectrumKind, SymbolTerm, Trig};

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Run(toruslab::Error),
    /// Inputs that disagree with each other or with the configuration.
    Refused { kind: &'static str, message: String },
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<toruslab::Error> for CliError {
    fn from(e: toruslab::Error) -> Self {
        CliError::Run(e)
    }
}

type Res<T> = std::result::Result<T, CliError>;

pub struct Ctx {
    pub cfg: Config,
    pub out: PathBuf,
    pub seed: u64,
    pub config_hash: String,
    pub model_hash: String,
    pub start: Instant,
}

impl Ctx {
    fn prov(&self) -> Provenance {
        Provenance::new(&self.config_hash, &self.model_hash, self.start.elapsed().as_secs_f64())
    }

    fn csv(&self, name: &str, t: &Table) -> Res<()> {
        Ok(io::write_csv(&self.out.join(name), &self.prov(), t)?)
    }

    fn json<T: Serialize>(&self, name: &str, data: &T) -> Res<()> {
        Ok(io::write_json(&self.out.join(name), &self.prov(), data)?)
    }

    fn model(&self) -> Res<(SurfaceProfile<f64>, Observable<f64>)> {
        Ok((self.cfg.surface()?, self.cfg.observable()?))
    }

    /// The window of `[window]` at this ε.
    fn window(&self, p: &SurfaceProfile<f64>, q: &Observable<f64>, eps: f64, delta: f64, e_center: f64) -> Res<WindowSpec> {
        let w = &self.cfg.window;
        let f0 = match w.f0 {
            Some(f) => f,
            None => torus_average(p, q, w.a_star)?,
        };
        Ok(window(f0, w.c, eps, delta, e_center)?)
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1).max(1) as f64).collect()
}

fn scan_options(cfg: &Config) -> ScanOptions {
    let c = &cfg.classical;
    ScanOptions {
        horizon: c.horizon,
        n_starts: c.n_starts,
        kernel: c.kernel,
        q_max: c.q_max,
        alpha: c.alpha,
        d: c.d,
        max_height: c.max_height,
    }
}

fn a_range(cfg: &Config, p: &SurfaceProfile<f64>) -> [f64; 2] {
    cfg.classical.a_range.unwrap_or([0.02 * p.u_max(), 0.98 * p.u_max()])
}

fn run_scan(ctx: &Ctx, p: &SurfaceProfile<f64>, q: &Observable<f64>) -> Res<ClassicalScan> {
    let [lo, hi] = a_range(&ctx.cfg, p);
    let grid = linspace(lo, hi, ctx.cfg.classical.a_points);
    Ok(scan(p, q, &grid, &scan_options(&ctx.cfg))?)
}

pub fn scan_classical(ctx: &Ctx) -> Res<()> {
    let (p, q) = ctx.model()?;
    let s = run_scan(ctx, &p, &q)?;
    ctx.csv("scan.csv", &io::scan_table(&s))?;
    ctx.json("scan.json", &s)?;
    let c = &ctx.cfg.classical;
    if !c.width_heights.is_empty() {
        let [lo, hi] = c.width_edge.unwrap_or(a_range(&ctx.cfg, &p));
        let rows = width_vs_height(&p, &q, (lo, hi), &c.width_heights, &scan_options(&ctx.cfg))?;
        let mut t = Table::new(&["height", "m", "n", "a", "width"]);
        for r in &rows {
            t.push(vec![r.height.to_string(), r.m.to_string(), r.n.to_string(), num(r.a), num(r.width)]);
        }
        ctx.csv("widths.csv", &t)?;
        ctx.json("widths.json", &rows)?;
    }
    Ok(())
}

pub fn lattice(ctx: &Ctx) -> Res<()> {
    let (p, q) = ctx.model()?;
    let lc = &ctx.cfg.lattice;
    let eps = lc.eps.unwrap_or(ctx.cfg.eps_rule.eps(lc.h));
    let e_window = match lc.e_window {
        Some([lo, hi]) => (lo, hi),
        None => {
            let w = &ctx.cfg.window;
            ctx.window(&p, &q, eps, w.delta, w.e_center)?.scaled(w.margin).re
        }
    };
    let c = &ctx.cfg.classical;
    let opts = LatticeOptions {
        q_max: c.q_max,
        alpha: c.alpha,
        d: c.d,
    };
    let lat = ebk_lattice(&p, &q, lc.h, eps, e_window, &opts)?;
    ctx.csv("lattice.csv", &io::lattice_table(&lat))?;
    ctx.json("lattice.json", &lat)?;
    Ok(())
}

/// Smallest radial grid with `ppw` points per wavelength `2πh`, and at least 200.
fn grid_size(p: &SurfaceProfile<f64>, h: f64, ppw: f64) -> usize {
    ((ppw * p.length() / (std::f64::consts::TAU * h)).ceil() as usize).max(200)
}

/// Highest angular mode with energy up to `e_top`.
fn modes_needed(p: &SurfaceProfile<f64>, h: f64, e_top: f64) -> usize {
    (p.u_max() * e_top.max(0.0).sqrt() / h).ceil() as usize
}

#[allow(clippy::too_many_arguments)]
fn coupled_spectrum(
    p: &SurfaceProfile<f64>,
    q: &Observable<f64>,
    h: f64,
    eps: f64,
    n_s: usize,
    m_theta: usize,
    cap: usize,
    scheme: toruslab::spectra::Scheme,
    rect: Option<Rect>,
) -> Res<SpectrumResult> {
    let op = operator_2d(p, h, eps, q, n_s, m_theta, scheme, cap)?;
    let eigenvalues = eigensolve_in(&op, rect.as_ref())?;
    Ok(SpectrumResult {
        eigenvalues,
        params: SpectrumParams {
            surface: surface_id(p),
            q_id: observable_id(q),
            h,
            eps,
            grid: op.grid,
            scheme,
            m_max: m_theta,
            rect,
        },
        mirrored: false,
    })
}

pub fn spectrum(ctx: &Ctx) -> Res<()> {
    let (p, q) = ctx.model()?;
    let sc = &ctx.cfg.spectrum;
    let eps = sc.eps.unwrap_or(ctx.cfg.eps_rule.eps(sc.h));
    let w = &ctx.cfg.window;
    let outer = ctx.window(&p, &q, eps, w.delta, w.e_center)?.scaled(w.margin);
    let rect = (!sc.full).then_some(outer);
    let spec = match sc.kind {
        SpectrumKind::Rotational => {
            if !q.is_rotational() {
                return Err(ConfigError::new("spectrum.kind", "rotational spectra need a θ-independent observable").into());
            }
            let n = sc.n.unwrap_or(grid_size(&p, sc.h, 2.0 * POINTS_PER_WAVELENGTH));
            let m_max = sc.m_max.unwrap_or(modes_needed(&p, sc.h, outer.re.1));
            full_spectrum_rotational(&p, sc.h, eps, &q, m_max, n, rect, sc.scheme)?
        }
        SpectrumKind::Coupled2d => {
            let n = sc.n.unwrap_or(grid_size(&p, sc.h, POINTS_PER_WAVELENGTH));
            coupled_spectrum(&p, &q, sc.h, eps, n, sc.m_theta, sc.cap, sc.scheme, rect)?
        }
    };
    ctx.csv("spectrum.csv", &io::spectrum_table(&spec))?;
    ctx.json("spectrum.json", &spec)?;
    Ok(())
}

#[derive(Serialize)]
struct MatchOutput<'a> {
    window: WindowSpec,
    gate: f64,
    /// `10(h² + ε²)`, the reference scale for `max_distance`.
    budget: f64,
    report: &'a MatchReport,
}

fn resolve(out: &Path, given: &Option<String>, default: &str) -> PathBuf {
    given.as_ref().map(PathBuf::from).unwrap_or_else(|| out.join(default))
}

pub fn match_cmd(ctx: &Ctx) -> Res<()> {
    let (p, q) = ctx.model()?;
    let mc = &ctx.cfg.matching;
    let (lp, lat): (_, toruslab::Lattice) = io::read_json(&resolve(&ctx.out, &mc.lattice, "lattice.json"))?;
    let (sp, spec): (_, SpectrumResult) = io::read_json(&resolve(&ctx.out, &mc.spectrum, "spectrum.json"))?;
    for (what, prov) in [("lattice", &lp), ("spectrum", &sp)] {
        if prov.model_hash != ctx.model_hash {
            return Err(CliError::Refused {
                kind: "ModelHashMismatch",
                message: format!(
                    "{what} was computed for model {} but the configuration describes {}",
                    prov.model_hash, ctx.model_hash
                ),
            });
        }
    }
    if lat.h != spec.params.h || lat.eps != spec.params.eps {
        return Err(CliError::Refused {
            kind: "ParameterMismatch",
            message: format!(
                "lattice (h = {}, eps = {}) and spectrum (h = {}, eps = {}) differ",
                lat.h, lat.eps, spec.params.h, spec.params.eps
            ),
        });
    }
    let w = &ctx.cfg.window;
    let win = ctx.window(&p, &q, lat.eps, w.delta, w.e_center)?;
    let opts = MatchOptions {
        margin: w.margin,
        gate: mc.gate,
    };
    let report = match_lattice(&spec, &lat, &win, &opts);
    ctx.csv("match.csv", &io::match_table(&report))?;
    ctx.json(
        "match.json",
        &MatchOutput {
            window: win,
            gate: mc.gate,
            budget: 10.0 * (lat.h * lat.h + lat.eps * lat.eps),
            report: &report,
        },
    )?;
    Ok(())
}

pub fn count_scaling(ctx: &Ctx) -> Res<()> {
    let (p, q) = ctx.model()?;
    let cs = &ctx.cfg.count_scaling;
    let rule = cs.eps_rule.unwrap_or(ctx.cfg.eps_rule);
    let e_center = cs.e_center.unwrap_or(ctx.cfg.window.e_center);
    let h_min = cs.h_list.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let mut points = Vec::new();
    for &h in &cs.h_list {
        let eps = rule.eps(h);
        let rect = ctx.window(&p, &q, eps, 0.0, e_center)?.rect;
        let spec = if q.is_rotational() {
            let n = grid_size(&p, h, 2.0 * POINTS_PER_WAVELENGTH);
            full_spectrum_rotational(&p, h, eps, &q, modes_needed(&p, h, rect.re.1), n, Some(rect), ctx.cfg.spectrum.scheme)?
        } else {
            let m_theta = cs
                .m_theta
                .unwrap_or(modes_needed(&p, h_min, rect.re.1).max(4 * q.theta_degree() as usize));
            let n_s = cs.n_s.unwrap_or(grid_size(&p, h, POINTS_PER_WAVELENGTH));
            coupled_spectrum(&p, &q, h, eps, n_s, m_theta, ctx.cfg.spectrum.cap, ctx.cfg.spectrum.scheme, Some(rect))?
        };
        let mut count = count_in(&spec, &rect) as f64;
        if cs.noise > 0.0 {
            count *= 1.0 + cs.noise * rng.random_range(-1.0..1.0);
        }
        points.push(CountPoint { eps, h, count });
    }
    let mut t = Table::new(&["eps", "h", "count"]);
    for pt in &points {
        t.push(vec![num(pt.eps), num(pt.h), num(pt.count)]);
    }
    ctx.csv("count_scaling.csv", &t)?;
    #[derive(Serialize)]
    struct Out<'a> {
        points: &'a [CountPoint],
        fit: ScalingFit,
    }
    let fit = scaling_fit(&points)?;
    ctx.json("count_scaling.json", &Out { points: &points, fit })
}

fn symbol(nf: &NormalformCfg, grid: &XiGrid, terms: &[SymbolTerm]) -> Res<FourierTaylorSymbol> {
    let mut s = FourierTaylorSymbol::zeros(nf.k_max, grid, true);
    for t in terms {
        let [c0, c1, c2] = t.coef;
        let a = move |[x1, x2]: [f64; 2]| c0 + c1 * x1 + c2 * x2;
        match t.kind {
            Trig::Cos => s.add_cos(t.k, a)?,
            Trig::Sin => s.add_sin(t.k, a)?,
        }
    }
    Ok(s)
}

pub fn normalform(ctx: &Ctx) -> Res<()> {
    let nf = &ctx.cfg.normalform;
    let grid = XiGrid::new(nf.lo, nf.hi, nf.n)?;
    let p = XiSymbol::model(&grid);
    let q = symbol(nf, &grid, &nf.q)?;
    let (reduced, report) = secular_reduce(&p, &q, nf.eps, nf.steps, nf.lie_order)?;

    let gt_grid = XiGrid::new(nf.gt_lo, nf.gt_hi, nf.gt_n)?;
    let gt = gt_bound_fit(
        &XiSymbol::model(&gt_grid),
        &symbol(nf, &gt_grid, &nf.q)?,
        &nf.gt_horizons,
        nf.gt_kernel,
        nf.nx,
    )?;

    let mut t = Table::new(&["step", "residual", "dropped", "lie_tail", "truncation"]);
    t.push(vec!["0".into(), num(report.initial_residual), String::new(), String::new(), String::new()]);
    for j in 0..report.order {
        t.push(vec![
            (j + 1).to_string(),
            num(report.step_residuals[j]),
            num(report.dropped_norms[j]),
            num(report.lie_tails[j]),
            num(report.truncation_norms[j]),
        ]);
    }
    ctx.csv("normalform.csv", &t)?;
    let mut g = Table::new(&["T", "sup", "C"]);
    for r in &gt {
        g.push(vec![num(r.horizon), num(r.sup), num(r.constant)]);
    }
    ctx.csv("gt_bound.csv", &g)?;
    #[derive(Serialize)]
    struct Out<'a> {
        report: &'a ReductionReport,
        gt_bound: &'a [GtBoundRow],
    }
    ctx.json("normalform.json", &Out { report: &report, gt_bound: &gt })?;
    ctx.json("normalform_symbol.json", &reduced)
}

pub fn toeplitz_bench(ctx: &Ctx) -> Res<()> {
    let tc = &ctx.cfg.toeplitz;
    let rows = verify_trace_bound(&tc.symbol, &tc.h_list)?;
    let phi1 = PolyWeight {
        coeffs: tc.duality_weight.clone(),
    };
    let duality: Vec<(f64, DualityReport)> = tc
        .duality_eps
        .iter()
        .map(|&e| {
            legendre_duality_check(|x| phi1.eval(x), e, tc.eta_range[0], tc.eta_range[1], tc.duality_points)
                .map(|r| (e, r))
        })
        .collect::<toruslab::Result<_>>()?;
    let phi = PolyWeight {
        coeffs: tc.parseval_weight.clone(),
    };
    let parseval = parseval_check(&phi, tc.parseval_h, (tc.k_range[0], tc.k_range[1]))?;

    let mut t = Table::new(&[
        "h", "dim", "trace", "trace_norm", "l1_norm", "ratio", "min_eig", "max_eig", "tail",
    ]);
    for r in &rows {
        t.push(vec![
            num(r.h),
            r.dim.to_string(),
            num(r.trace),
            num(r.trace_norm),
            num(r.l1_norm),
            r.ratio.map(num).unwrap_or_default(),
            num(r.min_eigenvalue),
            num(r.max_eigenvalue),
            num(r.tail_estimate),
        ]);
    }
    ctx.csv("toeplitz.csv", &t)?;
    #[derive(Serialize)]
    struct Out<'a> {
        trace_bound: &'a [toruslab::bargmann::TraceBoundRow],
        duality: &'a [(f64, DualityReport)],
        parseval: &'a ParsevalReport,
    }
    ctx.json(
        "toeplitz.json",
        &Out {
            trace_bound: &rows,
            duality: &duality,
            parseval: &parseval,
        },
    )
}

pub fn good_values(ctx: &Ctx) -> Res<()> {
    let (p, q) = ctx.model()?;
    let s = run_scan(ctx, &p, &q)?;
    let g = &ctx.cfg.good_values;
    let [lo, hi] = g.f0_range.unwrap_or_else(|| {
        let it = s.rows.iter().map(|r| r.q_avg);
        [it.clone().fold(f64::INFINITY, f64::min), it.fold(f64::NEG_INFINITY, f64::max)]
    });
    let verdicts: Vec<GoodVerdict> = linspace(lo, hi, g.f0_points)
        .into_iter()
        .map(|f0| good_value_check(&s, f0, g.alpha, g.beta, g.gamma, g.d))
        .collect::<toruslab::Result<_>>()?;
    let mut t = Table::new(&["f0", "good", "failed_condition", "witness_a", "family_size"]);
    for v in &verdicts {
        t.push(vec![
            num(v.f0),
            v.good.to_string(),
            v.failed_condition.map(|c| c.to_string()).unwrap_or_default(),
            v.witness.as_ref().map(|w| num(w.a)).unwrap_or_default(),
            v.family.len().to_string(),
        ]);
    }
    ctx.csv("good_values.csv", &t)?;
    ctx.json("good_values.json", &verdicts)
}
