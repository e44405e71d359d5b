//! Flat `key = value` experiment configuration.
//!
//! One setting per line, `#` starts a comment, keys are case-sensitive and
//! unknown or repeated keys are rejected. Lists are comma-separated. Every
//! key is optional; see [`KEYS`] for the full schema.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::sync::Arc;

use crate::assimilation::{
    initial_state, Envelope, FlowState, H0Variant, Model, NudgingConfig, Params, Perturbation,
};
use crate::error::{Error, Result};
use crate::interpolants::{Interpolant, InterpolantKind, Partition};
use crate::spectral::{to_spectral, FieldKind, Geometry, Grid, Samples, SpectralField};

/// Side of the default square box; λ₁ = 32π² there, which keeps the
/// Boussinesq reference bounded at ν = κ = 10⁻².
pub const DEFAULT_BOX: f64 = 0.353_553_390_593_273_8;

/// Recognized keys with a one-line description each.
pub const KEYS: [(&str, &str); 31] = [
    ("model", "boussinesq | nse"),
    ("geometry", "torus | channel"),
    ("extents", "box lengths per axis (channel: L, 1)"),
    ("resolution", "collocation points per axis, even and >= 8"),
    ("nu", "kinematic viscosity"),
    ("kappa", "thermal diffusivity"),
    ("force_amplitude", "amplitude of the shear body force (nse)"),
    (
        "force_wavenumber",
        "integer wavenumber of the shear body force",
    ),
    ("c_interp", "interpolant constant c"),
    ("c_sob", "Sobolev constant C"),
    ("interpolant", "modal | volume | smoothed_volume"),
    ("modes", "retained modes of the modal interpolant"),
    ("cells", "cells per axis of the volume interpolants"),
    (
        "h",
        "cell diameter of the volume interpolants (instead of cells)",
    ),
    ("mu", "auto | nudging parameter"),
    ("variant", "h0 variant gating the run"),
    ("override_condition", "run even when the condition fails"),
    ("dt", "time step"),
    ("t_end", "duration of the run"),
    ("record_every", "recording cadence in steps"),
    ("observe_every", "observation cadence in steps"),
    ("seed", "seed of the initial state"),
    ("u_l2", "L2 norm of the initial velocity"),
    ("theta_l2", "L2 norm of the initial temperature"),
    (
        "perturbation",
        "none | constant:<a> | exponential:<a>:<rate>",
    ),
    ("perturbation_seed", "seed of the perturbation pattern"),
    (
        "stream",
        "observation stream file (assimilate, check-condition)",
    ),
    ("restart", "checkpoint to continue from (simulate)"),
    ("out", "output directory"),
    ("sweep_param", "mu | seed | c_interp | modes"),
    ("sweep_values", "values of the swept parameter"),
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MuPolicy {
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Mu,
    Seed,
    CInterp,
    Modes,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Mu => "mu",
            SweepParam::Seed => "seed",
            SweepParam::CInterp => "c_interp",
            SweepParam::Modes => "modes",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

/// Everything needed to reproduce one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: Model,
    pub geometry: Geometry,
    pub extents: Vec<f64>,
    pub resolution: Vec<usize>,
    pub nu: f64,
    pub kappa: f64,
    pub force_amplitude: f64,
    pub force_wavenumber: u32,
    pub c_interp: f64,
    pub c_sob: f64,
    pub interpolant: InterpolantKind,
    pub modes: usize,
    pub cells: Option<Vec<usize>>,
    pub h: Option<f64>,
    pub mu: MuPolicy,
    pub variant: H0Variant,
    pub override_condition: bool,
    pub dt: f64,
    pub t_end: f64,
    pub record_every: usize,
    pub observe_every: usize,
    pub seed: u64,
    pub u_l2: f64,
    pub theta_l2: f64,
    pub perturbation: Option<Envelope>,
    pub perturbation_seed: u64,
    pub stream: Option<PathBuf>,
    pub restart: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub sweep: Option<Sweep>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: Model::Boussinesq,
            geometry: Geometry::Torus,
            extents: vec![DEFAULT_BOX, DEFAULT_BOX],
            resolution: vec![128, 128],
            nu: 1e-2,
            kappa: 1e-2,
            force_amplitude: 0.0,
            force_wavenumber: 1,
            c_interp: 1.0,
            c_sob: 1.0,
            interpolant: InterpolantKind::Modal,
            modes: 8,
            cells: None,
            h: None,
            mu: MuPolicy::Auto,
            variant: H0Variant::Sync,
            override_condition: false,
            dt: 5e-3,
            t_end: 20.0,
            record_every: 10,
            observe_every: 1,
            seed: 1,
            u_l2: 1e-4,
            theta_l2: 1e-4,
            perturbation: None,
            perturbation_seed: 2,
            stream: None,
            restart: None,
            out: None,
            sweep: None,
        }
    }
}

fn bad(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("line {line}: {msg}"))
}

fn num(line: usize, key: &str, v: &str) -> Result<f64> {
    let x: f64 = v
        .parse()
        .map_err(|_| bad(line, format!("{key}: {v:?} is not a number")))?;
    if !x.is_finite() {
        return Err(bad(line, format!("{key}: {v:?} is not finite")));
    }
    Ok(x)
}

fn int<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| bad(line, format!("{key}: {v:?} is not a nonnegative integer")))
}

fn list<T>(
    line: usize,
    key: &str,
    v: &str,
    f: impl Fn(usize, &str, &str) -> Result<T>,
) -> Result<Vec<T>> {
    let items: Vec<&str> = v.split(',').map(str::trim).collect();
    if items.iter().any(|s| s.is_empty()) {
        return Err(bad(line, format!("{key}: empty list entry")));
    }
    items.into_iter().map(|s| f(line, key, s)).collect()
}

fn boolean(line: usize, key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(bad(line, format!("{key}: {v:?} is not a boolean"))),
    }
}

fn parse_envelope(line: usize, v: &str) -> Result<Option<Envelope>> {
    let parts: Vec<&str> = v.split(':').map(str::trim).collect();
    match parts.as_slice() {
        ["none"] => Ok(None),
        ["constant", a] => Ok(Some(Envelope::Constant {
            amplitude: num(line, "perturbation", a)?,
        })),
        ["exponential", a, r] => Ok(Some(Envelope::Exponential {
            amplitude: num(line, "perturbation", a)?,
            rate: num(line, "perturbation", r)?,
        })),
        _ => Err(bad(line, format!("perturbation: cannot parse {v:?}"))),
    }
}

impl ExperimentConfig {
    /// Reads and parses a config file. An unreadable file is reported as a
    /// configuration error.
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Parses and validates configuration text.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen: Vec<&str> = Vec::new();
        let mut sweep_param = None;
        let mut sweep_values = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| bad(line, format!("expected key = value, found {content:?}")))?;
            let (key, v) = (key.trim(), value.trim());
            let known = KEYS
                .iter()
                .find(|(k, _)| *k == key)
                .ok_or_else(|| bad(line, format!("unknown key {key:?}")))?
                .0;
            if seen.contains(&known) {
                return Err(bad(line, format!("duplicate key {key:?}")));
            }
            seen.push(known);
            if v.is_empty() {
                return Err(bad(line, format!("{key}: missing value")));
            }
            match key {
                "model" => {
                    cfg.model = match v {
                        "boussinesq" => Model::Boussinesq,
                        "nse" | "navier_stokes" => Model::NavierStokes,
                        _ => return Err(bad(line, format!("model: unknown {v:?}"))),
                    }
                }
                "geometry" => {
                    cfg.geometry = match v {
                        "torus" => Geometry::Torus,
                        "channel" => Geometry::Channel,
                        _ => return Err(bad(line, format!("geometry: unknown {v:?}"))),
                    }
                }
                "extents" => cfg.extents = list(line, key, v, num)?,
                "resolution" => cfg.resolution = list(line, key, v, int::<usize>)?,
                "nu" => cfg.nu = num(line, key, v)?,
                "kappa" => cfg.kappa = num(line, key, v)?,
                "force_amplitude" => cfg.force_amplitude = num(line, key, v)?,
                "force_wavenumber" => cfg.force_wavenumber = int(line, key, v)?,
                "c_interp" => cfg.c_interp = num(line, key, v)?,
                "c_sob" => cfg.c_sob = num(line, key, v)?,
                "interpolant" => {
                    cfg.interpolant = match v {
                        "modal" => InterpolantKind::Modal,
                        "volume" => InterpolantKind::Volume,
                        "smoothed_volume" => InterpolantKind::SmoothedVolume,
                        _ => return Err(bad(line, format!("interpolant: unknown {v:?}"))),
                    }
                }
                "modes" => cfg.modes = int(line, key, v)?,
                "cells" => cfg.cells = Some(list(line, key, v, int::<usize>)?),
                "h" => cfg.h = Some(num(line, key, v)?),
                "mu" => {
                    cfg.mu = match v {
                        "auto" => MuPolicy::Auto,
                        _ => MuPolicy::Fixed(num(line, key, v)?),
                    }
                }
                "variant" => {
                    cfg.variant = H0Variant::parse(v)
                        .ok_or_else(|| bad(line, format!("variant: unknown {v:?}")))?
                }
                "override_condition" => cfg.override_condition = boolean(line, key, v)?,
                "dt" => cfg.dt = num(line, key, v)?,
                "t_end" => cfg.t_end = num(line, key, v)?,
                "record_every" => cfg.record_every = int(line, key, v)?,
                "observe_every" => cfg.observe_every = int(line, key, v)?,
                "seed" => cfg.seed = int(line, key, v)?,
                "u_l2" => cfg.u_l2 = num(line, key, v)?,
                "theta_l2" => cfg.theta_l2 = num(line, key, v)?,
                "perturbation" => cfg.perturbation = parse_envelope(line, v)?,
                "perturbation_seed" => cfg.perturbation_seed = int(line, key, v)?,
                "stream" => cfg.stream = Some(PathBuf::from(v)),
                "restart" => cfg.restart = Some(PathBuf::from(v)),
                "out" => cfg.out = Some(PathBuf::from(v)),
                "sweep_param" => {
                    sweep_param = Some(match v {
                        "mu" => SweepParam::Mu,
                        "seed" => SweepParam::Seed,
                        "c_interp" => SweepParam::CInterp,
                        "modes" => SweepParam::Modes,
                        _ => return Err(bad(line, format!("sweep_param: unknown {v:?}"))),
                    })
                }
                "sweep_values" => sweep_values = Some(list(line, key, v, num)?),
                _ => unreachable!("key table and match arms agree"),
            }
        }
        cfg.sweep = match (sweep_param, sweep_values) {
            (Some(param), Some(values)) => Some(Sweep { param, values }),
            (None, None) => None,
            _ => {
                return Err(Error::Config(
                    "sweep_param and sweep_values must be given together".into(),
                ))
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks ranges that do not need a grid.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("nu", self.nu),
            ("kappa", self.kappa),
            ("c_interp", self.c_interp),
            ("c_sob", self.c_sob),
            ("dt", self.dt),
        ];
        for (k, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{k} = {v} must be positive")));
            }
        }
        let nonneg = [
            ("t_end", self.t_end),
            ("u_l2", self.u_l2),
            ("theta_l2", self.theta_l2),
            ("force_amplitude", self.force_amplitude),
        ];
        for (k, v) in nonneg {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{k} = {v} must be nonnegative")));
            }
        }
        if let MuPolicy::Fixed(mu) = self.mu {
            if !(mu > 0.0) {
                return Err(Error::Config(format!("mu = {mu} must be positive")));
            }
        }
        if let Some(h) = self.h {
            if !(h > 0.0) {
                return Err(Error::Config(format!("h = {h} must be positive")));
            }
        }
        if self.record_every == 0 || self.observe_every == 0 {
            return Err(Error::Config("cadences must be at least 1".into()));
        }
        if self.modes == 0 {
            return Err(Error::Config("modes must be at least 1".into()));
        }
        if self.extents.len() != self.resolution.len() || !(2..=3).contains(&self.extents.len()) {
            return Err(Error::Config(
                "extents and resolution must both have 2 or 3 entries".into(),
            ));
        }
        if self.resolution.iter().any(|&n| n > 4096) {
            return Err(Error::Config("resolution above 4096 per axis".into()));
        }
        if let Some(s) = &self.sweep {
            if s.values.is_empty() {
                return Err(Error::Config("sweep_values is empty".into()));
            }
        }
        if let Some(env) = self.perturbation {
            let ok = match env {
                Envelope::Constant { amplitude } => amplitude.is_finite(),
                Envelope::Exponential { amplitude, rate } => amplitude.is_finite() && rate >= 0.0,
            };
            if !ok {
                return Err(Error::Config("perturbation envelope out of range".into()));
            }
        }
        Ok(())
    }

    /// Canonical text form; parsing it gives back an equal configuration.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let join = |v: &[String]| v.join(", ");
        let _ = writeln!(
            s,
            "model = {}",
            match self.model {
                Model::Boussinesq => "boussinesq",
                Model::NavierStokes => "nse",
            }
        );
        let _ = writeln!(
            s,
            "geometry = {}",
            match self.geometry {
                Geometry::Torus => "torus",
                Geometry::Channel => "channel",
            }
        );
        let _ = writeln!(
            s,
            "extents = {}",
            join(
                &self
                    .extents
                    .iter()
                    .map(|x| format!("{x:?}"))
                    .collect::<Vec<_>>()
            )
        );
        let _ = writeln!(
            s,
            "resolution = {}",
            join(
                &self
                    .resolution
                    .iter()
                    .map(|x| x.to_string())
                    .collect::<Vec<_>>()
            )
        );
        let _ = writeln!(s, "nu = {:?}", self.nu);
        let _ = writeln!(s, "kappa = {:?}", self.kappa);
        let _ = writeln!(s, "force_amplitude = {:?}", self.force_amplitude);
        let _ = writeln!(s, "force_wavenumber = {}", self.force_wavenumber);
        let _ = writeln!(s, "c_interp = {:?}", self.c_interp);
        let _ = writeln!(s, "c_sob = {:?}", self.c_sob);
        let _ = writeln!(s, "interpolant = {}", self.interpolant);
        let _ = writeln!(s, "modes = {}", self.modes);
        if let Some(c) = &self.cells {
            let _ = writeln!(
                s,
                "cells = {}",
                join(&c.iter().map(|x| x.to_string()).collect::<Vec<_>>())
            );
        }
        if let Some(h) = self.h {
            let _ = writeln!(s, "h = {h:?}");
        }
        match self.mu {
            MuPolicy::Auto => {
                let _ = writeln!(s, "mu = auto");
            }
            MuPolicy::Fixed(m) => {
                let _ = writeln!(s, "mu = {m:?}");
            }
        }
        let _ = writeln!(s, "variant = {}", self.variant.name());
        let _ = writeln!(s, "override_condition = {}", self.override_condition);
        let _ = writeln!(s, "dt = {:?}", self.dt);
        let _ = writeln!(s, "t_end = {:?}", self.t_end);
        let _ = writeln!(s, "record_every = {}", self.record_every);
        let _ = writeln!(s, "observe_every = {}", self.observe_every);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "u_l2 = {:?}", self.u_l2);
        let _ = writeln!(s, "theta_l2 = {:?}", self.theta_l2);
        let pert = match self.perturbation {
            None => "none".to_string(),
            Some(Envelope::Constant { amplitude }) => format!("constant:{amplitude:?}"),
            Some(Envelope::Exponential { amplitude, rate }) => {
                format!("exponential:{amplitude:?}:{rate:?}")
            }
        };
        let _ = writeln!(s, "perturbation = {pert}");
        let _ = writeln!(s, "perturbation_seed = {}", self.perturbation_seed);
        for (k, p) in [
            ("stream", &self.stream),
            ("restart", &self.restart),
            ("out", &self.out),
        ] {
            if let Some(p) = p {
                let _ = writeln!(s, "{k} = {}", p.display());
            }
        }
        if let Some(sw) = &self.sweep {
            let _ = writeln!(s, "sweep_param = {}", sw.param.name());
            let _ = writeln!(
                s,
                "sweep_values = {}",
                join(
                    &sw.values
                        .iter()
                        .map(|x| format!("{x:?}"))
                        .collect::<Vec<_>>()
                )
            );
        }
        s
    }

    pub fn grid(&self) -> Result<Arc<Grid>> {
        Ok(Arc::new(Grid::new(
            self.geometry,
            &self.extents,
            &self.resolution,
        )?))
    }

    /// Shear force A·sin(2πm x_d/L_d) e₁ on the torus, A·cos(πm y) e₁ in
    /// the channel; `None` when the amplitude is zero.
    pub fn force(&self, grid: &Arc<Grid>) -> Result<Option<SpectralField>> {
        if self.force_amplitude == 0.0 {
            return Ok(None);
        }
        let d = grid.dim() - 1;
        let (a, m) = (self.force_amplitude, f64::from(self.force_wavenumber));
        let arg = match grid.geometry() {
            Geometry::Torus => 2.0 * std::f64::consts::PI * m / grid.extents()[d],
            Geometry::Channel => std::f64::consts::PI * m,
        };
        let channel = grid.geometry() == Geometry::Channel;
        let samples = Samples::from_fn(grid, FieldKind::Vector, |x| {
            let v = if channel {
                (arg * x[d]).cos()
            } else {
                (arg * x[d]).sin()
            };
            [a * v, 0.0, 0.0]
        });
        Ok(Some(to_spectral(&samples, grid)?))
    }

    pub fn params(&self, grid: &Arc<Grid>) -> Result<Params> {
        let mut p = Params::new(self.nu, self.kappa);
        p.c_interp = self.c_interp;
        p.c_sob = self.c_sob;
        p.force = match self.model {
            Model::NavierStokes => self.force(grid)?,
            Model::Boussinesq => None,
        };
        p.validate(self.model, grid)?;
        Ok(p)
    }

    pub fn interpolant(&self, grid: &Arc<Grid>) -> Result<Arc<Interpolant>> {
        let partition = || match (&self.cells, self.h) {
            (Some(c), _) => Partition::new(grid, c),
            (None, Some(h)) => Partition::for_h(grid, h),
            (None, None) => Err(Error::Config("volume interpolants need cells or h".into())),
        };
        Ok(Arc::new(match self.interpolant {
            InterpolantKind::Modal => Interpolant::modal(grid, self.modes, self.c_interp)?,
            InterpolantKind::Volume => Interpolant::volume(grid, partition()?),
            InterpolantKind::SmoothedVolume => Interpolant::smoothed_volume(grid, partition()?),
        }))
    }

    pub fn initial_state(&self, grid: &Arc<Grid>) -> FlowState {
        let theta = match self.model {
            Model::Boussinesq => self.theta_l2,
            Model::NavierStokes => 0.0,
        };
        initial_state(grid, self.seed, self.u_l2, theta)
    }

    pub fn nudging(&self, grid: &Arc<Grid>) -> Result<NudgingConfig> {
        let mut n = NudgingConfig::new(self.interpolant(grid)?, self.model, self.dt);
        n.mu = match self.mu {
            MuPolicy::Auto => None,
            MuPolicy::Fixed(m) => Some(m),
        };
        n.observe_every = self.observe_every;
        n.record_every = self.record_every;
        n.override_condition = self.override_condition;
        n.variant = self.variant;
        n.perturbation = match self.perturbation {
            Some(env) => Some(Perturbation::seeded(grid, self.perturbation_seed, env)?),
            None => None,
        };
        Ok(n)
    }

    /// Copy with the swept parameter set to `value`.
    pub fn with_sweep_value(&self, param: SweepParam, value: f64) -> Result<Self> {
        let mut c = self.clone();
        c.sweep = None;
        let whole = |v: f64| {
            if v >= 0.0 && v.fract() == 0.0 && v < 1e15 {
                Ok(v as u64)
            } else {
                Err(Error::Config(format!(
                    "{} needs integer values, got {v}",
                    param.name()
                )))
            }
        };
        match param {
            SweepParam::Mu => {
                c.mu = MuPolicy::Fixed(value);
                c.override_condition = true;
            }
            SweepParam::Seed => c.seed = whole(value)?,
            SweepParam::CInterp => c.c_interp = value,
            SweepParam::Modes => c.modes = whole(value)? as usize,
        }
        c.validate()?;
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn parses_comments_lists_and_policies() {
        let c = ExperimentConfig::parse(
            "# twin run\nmodel = nse   # forced\nresolution = 32, 32\nextents = 1.0,1.0\nmu = 12.5\n\
             perturbation = exponential:0.1:1\nsweep_param = seed\nsweep_values = 1, 2\n",
        )
        .unwrap();
        assert_eq!(c.model, Model::NavierStokes);
        assert_eq!(c.resolution, vec![32, 32]);
        assert_eq!(c.mu, MuPolicy::Fixed(12.5));
        assert_eq!(
            c.perturbation,
            Some(Envelope::Exponential {
                amplitude: 0.1,
                rate: 1.0
            })
        );
        assert_eq!(c.sweep.as_ref().unwrap().values, vec![1.0, 2.0]);
        assert_eq!(ExperimentConfig::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn strictness() {
        for bad in [
            "colour = red",
            "nu = 1\nnu = 2",
            "nu",
            "nu = -1",
            "nu = nan",
            "resolution = 32,,32",
            "model = euler",
            "sweep_param = mu",
            "record_every = 0",
            "extents = 1, 1, 1",
        ] {
            assert!(
                matches!(ExperimentConfig::parse(bad), Err(Error::Config(_))),
                "{bad:?}"
            );
        }
    }
}
