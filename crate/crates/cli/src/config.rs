//! Experiment configuration (TOML).
//!
//! Every table and key is optional; omitted keys take the documented
//! defaults. Unknown keys are rejected so that typos surface as errors
//! naming the offending path.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toruslab::bargmann::FockSymbol;
use toruslab::classical::Kernel;
use toruslab::geometry::{make_profile, SurfaceProfile};
use toruslab::observable::{Observable, Term};
use toruslab::spectra::Scheme;

/// A configuration problem, tied to the dotted path of the key at fault.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: &str, message: impl Into<String>) -> Self {
        Self {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Output directory; `--out` overrides it.
    pub out_dir: String,
    pub surface: SurfaceCfg,
    pub observable: ObservableCfg,
    /// `ε = c·h^p` wherever a section leaves `eps` unset.
    pub eps_rule: EpsRule,
    pub classical: ClassicalCfg,
    pub window: WindowCfg,
    pub lattice: LatticeCfg,
    pub spectrum: SpectrumCfg,
    #[serde(rename = "match")]
    pub matching: MatchCfg,
    pub count_scaling: CountCfg,
    pub normalform: NormalformCfg,
    pub toeplitz: ToeplitzCfg,
    pub good_values: GoodValuesCfg,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            out_dir: "out".into(),
            surface: SurfaceCfg::default(),
            observable: ObservableCfg::default(),
            eps_rule: EpsRule::default(),
            classical: ClassicalCfg::default(),
            window: WindowCfg::default(),
            lattice: LatticeCfg::default(),
            spectrum: SpectrumCfg::default(),
            matching: MatchCfg::default(),
            count_scaling: CountCfg::default(),
            normalform: NormalformCfg::default(),
            toeplitz: ToeplitzCfg::default(),
            good_values: GoodValuesCfg::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurfaceCfg {
    /// `deformed-sphere` (params `[beta]`) or `sphere` (no params).
    pub family: String,
    pub params: Vec<f64>,
}

impl Default for SurfaceCfg {
    fn default() -> Self {
        Self {
            family: "deformed-sphere".into(),
            params: vec![0.2],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObservableCfg {
    /// `cos-2s`, `cos-sq`, `cos-theta` (uses `k`), `constant` or `terms`.
    pub builtin: String,
    /// Multiplies the builtin (the constant's value for `constant`).
    pub scale: f64,
    pub k: u32,
    /// Used when `builtin = "terms"`.
    pub terms: Vec<Term<f64>>,
}

impl Default for ObservableCfg {
    fn default() -> Self {
        Self {
            builtin: "cos-2s".into(),
            scale: 1.0,
            k: 1,
            terms: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpsRule {
    pub c: f64,
    pub p: f64,
}

impl Default for EpsRule {
    fn default() -> Self {
        Self { c: 1.0, p: 0.8 }
    }
}

impl EpsRule {
    pub fn eps(&self, h: f64) -> f64 {
        self.c * h.powf(self.p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassicalCfg {
    /// a-range of the scan; defaults to `[0.02, 0.98]·u_max`.
    pub a_range: Option<[f64; 2]>,
    pub a_points: usize,
    pub horizon: f64,
    pub n_starts: usize,
    pub kernel: Kernel,
    pub q_max: u64,
    pub alpha: f64,
    pub d: f64,
    pub max_height: i64,
    /// Heights for `widths.csv`; empty skips it.
    pub width_heights: Vec<i64>,
    /// a-interval searched for those heights; defaults to `a_range`.
    pub width_edge: Option<[f64; 2]>,
}

impl Default for ClassicalCfg {
    fn default() -> Self {
        Self {
            a_range: None,
            a_points: 57,
            horizon: 200.0,
            n_starts: 16,
            kernel: Kernel::Bump,
            q_max: 1000,
            alpha: 1e-3,
            d: 0.5,
            max_height: 12,
            width_heights: Vec::new(),
            width_edge: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowCfg {
    /// Level F0; when unset, `⟨q⟩` on the torus with Clairaut constant `a_star`.
    pub f0: Option<f64>,
    pub a_star: f64,
    pub c: f64,
    pub delta: f64,
    pub e_center: f64,
    /// Lattices and spectra are generated on the window scaled by this.
    pub margin: f64,
}

impl Default for WindowCfg {
    fn default() -> Self {
        Self {
            f0: None,
            a_star: 0.6,
            c: 2.0,
            delta: 0.1,
            e_center: 1.0,
            margin: 1.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatticeCfg {
    pub h: f64,
    pub eps: Option<f64>,
    /// Energy window; defaults to the real range of the scaled window.
    pub e_window: Option<[f64; 2]>,
}

impl Default for LatticeCfg {
    fn default() -> Self {
        Self {
            h: 0.05,
            eps: None,
            e_window: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumKind {
    #[default]
    Rotational,
    Coupled2d,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumCfg {
    pub kind: SpectrumKind,
    pub h: f64,
    pub eps: Option<f64>,
    /// Radial grid size; defaults to 40 points per wavelength `2πh`.
    pub n: Option<usize>,
    /// Highest |m| (rotational); defaults to what the window energy needs.
    pub m_max: Option<usize>,
    /// Angular cutoff M_θ (coupled-2d).
    pub m_theta: usize,
    pub scheme: Scheme,
    /// Largest dense dimension allowed for coupled-2d.
    pub cap: usize,
    /// Keep every eigenvalue instead of those in the scaled window.
    pub full: bool,
}

impl Default for SpectrumCfg {
    fn default() -> Self {
        Self {
            kind: SpectrumKind::Rotational,
            h: 0.05,
            eps: None,
            n: None,
            m_max: None,
            m_theta: 8,
            scheme: Scheme::Symmetric,
            cap: 4000,
            full: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatchCfg {
    /// Defaults to `<out>/lattice.json`.
    pub lattice: Option<String>,
    /// Defaults to `<out>/spectrum.json`.
    pub spectrum: Option<String>,
    /// Pairs farther apart than this (scaled metric) are not formed.
    pub gate: f64,
}

impl Default for MatchCfg {
    fn default() -> Self {
        Self {
            lattice: None,
            spectrum: None,
            gate: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CountCfg {
    pub h_list: Vec<f64>,
    /// Overrides `eps_rule` for this sweep.
    pub eps_rule: Option<EpsRule>,
    /// Radial grid of the coupled operator; defaults to the smallest valid one.
    pub n_s: Option<usize>,
    /// Defaults to what `e_center` needs at the smallest h.
    pub m_theta: Option<usize>,
    /// Overrides `window.e_center`.
    pub e_center: Option<f64>,
    /// Relative multiplicative noise on the counts (seeded by `--seed`).
    pub noise: f64,
}

impl Default for CountCfg {
    fn default() -> Self {
        Self {
            h_list: vec![0.08, 0.065, 0.05],
            eps_rule: None,
            n_s: None,
            m_theta: None,
            e_center: Some(0.15),
            noise: 0.0,
        }
    }
}

/// `coef[0] + coef[1]·ξ1 + coef[2]·ξ2` times `cos(k·x)` or `sin(k·x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolTerm {
    pub k: [i32; 2],
    pub kind: Trig,
    pub coef: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Trig {
    Cos,
    Sin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormalformCfg {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    pub n: [usize; 2],
    pub k_max: i32,
    pub eps: f64,
    pub steps: usize,
    pub lie_order: usize,
    pub q: Vec<SymbolTerm>,
    /// ξ-grid of the G_T bound fit.
    pub gt_lo: [f64; 2],
    pub gt_hi: [f64; 2],
    pub gt_n: [usize; 2],
    pub gt_horizons: Vec<f64>,
    pub gt_kernel: Kernel,
    /// x-samples per axis for `sup_x`.
    pub nx: usize,
}

impl Default for NormalformCfg {
    fn default() -> Self {
        Self {
            lo: [-0.1, -0.2],
            hi: [0.1, 0.2],
            n: [21, 9],
            k_max: 4,
            eps: 0.05,
            steps: 3,
            lie_order: 4,
            q: vec![
                SymbolTerm { k: [0, 1], kind: Trig::Cos, coef: [0.7, 0.0, 1.0] },
                SymbolTerm { k: [1, 1], kind: Trig::Cos, coef: [0.3, 0.0, 0.0] },
                SymbolTerm { k: [1, 0], kind: Trig::Sin, coef: [0.2, 0.0, 0.0] },
            ],
            gt_lo: [-0.3, -0.1],
            gt_hi: [0.3, 0.1],
            gt_n: [121, 3],
            gt_horizons: vec![10.0, 100.0, 1000.0],
            gt_kernel: Kernel::Bump,
            nx: 24,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToeplitzCfg {
    pub symbol: FockSymbol,
    pub h_list: Vec<f64>,
    /// Polynomial Φ₁ (ascending coefficients) for the duality check.
    pub duality_weight: Vec<f64>,
    pub duality_eps: Vec<f64>,
    pub eta_range: [f64; 2],
    pub duality_points: usize,
    /// Polynomial Φ (ascending coefficients) for the mode-norm check.
    pub parseval_weight: Vec<f64>,
    pub parseval_h: f64,
    pub k_range: [i64; 2],
}

impl Default for ToeplitzCfg {
    fn default() -> Self {
        Self {
            symbol: FockSymbol::Bump { radius: 1.0 },
            h_list: vec![0.2, 0.1, 0.05],
            duality_weight: vec![0.0, 0.1, 0.2],
            duality_eps: vec![0.01, 0.1, 0.5],
            eta_range: [-1.0, 1.0],
            duality_points: 801,
            parseval_weight: vec![0.0, 0.0, 0.5, 0.0, 0.25],
            parseval_h: 0.05,
            k_range: [0, 8],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GoodValuesCfg {
    /// Levels tested; defaults to the range of `⟨q⟩` over the scan.
    pub f0_range: Option<[f64; 2]>,
    pub f0_points: usize,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub d: f64,
}

impl Default for GoodValuesCfg {
    fn default() -> Self {
        Self {
            f0_range: None,
            f0_points: 41,
            alpha: 1e-3,
            beta: 0.2,
            gamma: 1e-3,
            d: 0.5,
        }
    }
}

/// Parses TOML, naming the offending key on failure.
pub fn parse(text: &str) -> Result<Config, ConfigError> {
    let de = toml::Deserializer::parse(text).map_err(|e| ConfigError::new("<toml>", e.to_string()))?;
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ConfigError::new(if path == "." { "<root>" } else { &path }, e.into_inner().message().to_string())
    })
}

pub fn to_toml(cfg: &Config) -> String {
    toml::to_string(cfg).expect("config serializes")
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl Config {
    pub fn surface(&self) -> Result<SurfaceProfile<f64>, ConfigError> {
        make_profile(&self.surface.family, &self.surface.params)
            .map_err(|e| ConfigError::new("surface", e.to_string()))
    }

    pub fn observable(&self) -> Result<Observable<f64>, ConfigError> {
        let o = &self.observable;
        let base = match o.builtin.as_str() {
            "cos-2s" => Observable::cos_2s(),
            "cos-sq" => Observable::cos_sq(),
            "cos-theta" => Observable::cos_theta(o.k),
            "constant" => Observable::constant(1.0),
            "terms" if o.terms.is_empty() => {
                return Err(ConfigError::new("observable.terms", "empty"));
            }
            "terms" => Observable::new(o.terms.clone()),
            other => {
                return Err(ConfigError::new(
                    "observable.builtin",
                    format!("unknown observable '{other}'"),
                ))
            }
        };
        Ok(Observable::new(
            base.terms
                .into_iter()
                .map(|t| Term { coef: t.coef * o.scale, ..t })
                .collect(),
        ))
    }

    /// Hash of the whole configuration except the output directory.
    pub fn config_hash(&self, seed: u64) -> String {
        let mut c = self.clone();
        c.out_dir.clear();
        let json = serde_json::to_string(&(c, seed)).expect("config serializes");
        sha256_hex(json.as_bytes())
    }

    /// Hash of the resolved surface and observable.
    pub fn model_hash(&self) -> Result<String, ConfigError> {
        let p = self.surface()?;
        let q = self.observable()?;
        let json = serde_json::to_string(&(toruslab::classical::surface_id(&p), &q)).expect("model serializes");
        Ok(sha256_hex(json.as_bytes()))
    }

    /// Range checks beyond what the types enforce.
    pub fn validate(&self) -> Result<(), ConfigError> {
        fn pos(field: &str, x: f64) -> Result<(), ConfigError> {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(ConfigError::new(field, format!("must be positive and finite, got {x}")))
            }
        }
        fn opt_pos(field: &str, x: Option<f64>) -> Result<(), ConfigError> {
            x.map_or(Ok(()), |x| pos(field, x))
        }
        self.surface()?;
        self.observable()?;
        pos("eps_rule.c", self.eps_rule.c)?;
        pos("eps_rule.p", self.eps_rule.p)?;

        let c = &self.classical;
        if c.a_points < 2 {
            return Err(ConfigError::new("classical.a_points", "need at least 2"));
        }
        pos("classical.horizon", c.horizon)?;
        if c.n_starts < 8 {
            return Err(ConfigError::new("classical.n_starts", "must be >= 8"));
        }
        pos("classical.alpha", c.alpha)?;
        if let Some([lo, hi]) = c.a_range {
            if !(lo < hi) {
                return Err(ConfigError::new("classical.a_range", format!("[{lo}, {hi}] is empty")));
            }
        }

        let w = &self.window;
        if !(w.c > 1.0) {
            return Err(ConfigError::new("window.c", format!("must exceed 1, got {}", w.c)));
        }
        if !(w.delta >= 0.0) {
            return Err(ConfigError::new("window.delta", "must be >= 0"));
        }
        pos("window.e_center", w.e_center)?;
        if !(w.margin >= 1.0) {
            return Err(ConfigError::new("window.margin", "must be >= 1"));
        }

        pos("lattice.h", self.lattice.h)?;
        opt_pos("lattice.eps", self.lattice.eps)?;
        pos("spectrum.h", self.spectrum.h)?;
        opt_pos("spectrum.eps", self.spectrum.eps)?;
        pos("match.gate", self.matching.gate)?;

        let cs = &self.count_scaling;
        if cs.h_list.len() < 3 {
            return Err(ConfigError::new("count_scaling.h_list", "need at least 3 values"));
        }
        for h in &cs.h_list {
            pos("count_scaling.h_list", *h)?;
        }
        if !(cs.noise >= 0.0 && cs.noise < 1.0) {
            return Err(ConfigError::new("count_scaling.noise", "must lie in [0, 1)"));
        }
        opt_pos("count_scaling.e_center", cs.e_center)?;

        let nf = &self.normalform;
        if nf.lie_order < nf.steps + 1 {
            return Err(ConfigError::new("normalform.lie_order", "must be >= steps + 1"));
        }
        if nf.nx < 4 {
            return Err(ConfigError::new("normalform.nx", "must be >= 4"));
        }
        for t in &nf.q {
            if t.k[0].abs() > nf.k_max || t.k[1].abs() > nf.k_max {
                return Err(ConfigError::new("normalform.q", format!("mode {:?} exceeds k_max", t.k)));
            }
        }

        for h in &self.toeplitz.h_list {
            pos("toeplitz.h_list", *h)?;
        }
        let g = &self.good_values;
        if g.f0_points == 0 {
            return Err(ConfigError::new("good_values.f0_points", "must be >= 1"));
        }
        pos("good_values.beta", g.beta)?;
        Ok(())
    }
}
