//! Plain-text `key = value` configuration.
//!
//! Lines may carry `#` comments; unknown keys are rejected with their line
//! number; a later assignment overrides an earlier one. [`Config::emit`]
//! produces the canonical form (documented key order, shortest-roundtrip
//! numbers), and `parse(emit(c)) == c`.

use crate::corrector::ScalingQuantity;
use crate::fields::Grid;
use crate::operators::DealiasPolicy;
use crate::solver::{InitKind, PhysParams, RunConfig};
use crate::{Error, Result};
use std::path::PathBuf;

/// Which sweep points enter a rate fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitWindow {
    All,
    /// Half-open index range into the sweep (sorted by decreasing ν).
    Range(usize, usize),
}

impl FitWindow {
    pub fn resolve(&self, len: usize) -> (usize, usize) {
        match self {
            FitWindow::All => (0, len),
            FitWindow::Range(a, b) => (*a, *b),
        }
    }
}

/// Full configuration with documented defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub nu: f64,
    pub mu: f64,
    pub dt: f64,
    pub t_final: f64,
    pub init_kind: String,
    pub init_seed: u64,
    pub init_amplitude: f64,
    pub init_decay: f64,
    pub init_file: Option<PathBuf>,
    pub dealias_x: bool,
    pub dealias_y: bool,
    pub dealias_z: bool,
    pub norms_track: Vec<usize>,
    pub cfl_safety: f64,
    pub guard_threshold: f64,
    pub output_dir: PathBuf,
    pub record_interval: f64,
    pub snapshot_times: Vec<f64>,
    pub sweep_nu_high: f64,
    pub sweep_nu_low: f64,
    pub sweep_count: usize,
    pub sweep_mu_ratio: f64,
    pub fit_window: FitWindow,
    pub corrector_k: usize,
    pub corrector_eps_high: f64,
    pub corrector_eps_low: f64,
    pub corrector_count: usize,
    pub corrector_grid_n: usize,
    pub verify_samples: usize,
    pub verify_seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            nx: 32,
            ny: 32,
            nz: 32,
            nu: 1e-2,
            mu: 1e-2,
            dt: 5e-4,
            t_final: 0.25,
            init_kind: "random".into(),
            init_seed: 7,
            init_amplitude: 0.2,
            init_decay: 6.0,
            init_file: None,
            dealias_x: true,
            dealias_y: true,
            dealias_z: true,
            norms_track: vec![1, 2, 3],
            cfl_safety: 0.5,
            guard_threshold: 1e3,
            output_dir: PathBuf::from("out"),
            record_interval: 1e-2,
            snapshot_times: Vec::new(),
            sweep_nu_high: 1e-2,
            sweep_nu_low: 1e-3,
            sweep_count: 5,
            sweep_mu_ratio: 1.0,
            fit_window: FitWindow::All,
            corrector_k: 1,
            corrector_eps_high: 1e-2,
            corrector_eps_low: 1e-4,
            corrector_count: 7,
            corrector_grid_n: 16,
            verify_samples: 10,
            verify_seed: 11,
        }
    }
}

fn parse_val<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config {
        line,
        msg: format!("cannot parse value `{v}` for key `{key}`"),
    })
}

fn parse_bool(line: usize, key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "on" | "1" => Ok(true),
        "false" | "off" | "0" => Ok(false),
        _ => Err(Error::Config {
            line,
            msg: format!("cannot parse boolean `{v}` for key `{key}`"),
        }),
    }
}

fn parse_list<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<Vec<T>> {
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(',')
        .map(|s| parse_val(line, key, s.trim()))
        .collect()
}

/// Parse config text; unknown keys are rejected with their line number.
pub fn parse_config(text: &str) -> Result<Config> {
    let mut cfg = Config::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| Error::Config {
            line,
            msg: format!("expected `key = value`, got `{content}`"),
        })?;
        let key = key.trim();
        let v = value.trim();
        match key {
            "grid.nx" => cfg.nx = parse_val(line, key, v)?,
            "grid.ny" => cfg.ny = parse_val(line, key, v)?,
            "grid.nz" => cfg.nz = parse_val(line, key, v)?,
            "phys.nu" => cfg.nu = parse_val(line, key, v)?,
            "phys.mu" => cfg.mu = parse_val(line, key, v)?,
            "time.dt" => cfg.dt = parse_val(line, key, v)?,
            "time.T" => cfg.t_final = parse_val(line, key, v)?,
            "init.kind" => cfg.init_kind = v.to_string(),
            "init.seed" => cfg.init_seed = parse_val(line, key, v)?,
            "init.amplitude" => cfg.init_amplitude = parse_val(line, key, v)?,
            "init.decay" => cfg.init_decay = parse_val(line, key, v)?,
            "init.file" => cfg.init_file = Some(PathBuf::from(v)),
            "dealias.x" => cfg.dealias_x = parse_bool(line, key, v)?,
            "dealias.y" => cfg.dealias_y = parse_bool(line, key, v)?,
            "dealias.z" => cfg.dealias_z = parse_bool(line, key, v)?,
            "norms.track" => cfg.norms_track = parse_list(line, key, v)?,
            "cfl.safety" => cfg.cfl_safety = parse_val(line, key, v)?,
            "guard.threshold" => cfg.guard_threshold = parse_val(line, key, v)?,
            "output.dir" => cfg.output_dir = PathBuf::from(v),
            "output.record_interval" => cfg.record_interval = parse_val(line, key, v)?,
            "output.snapshots" => cfg.snapshot_times = parse_list(line, key, v)?,
            "sweep.nu_high" => cfg.sweep_nu_high = parse_val(line, key, v)?,
            "sweep.nu_low" => cfg.sweep_nu_low = parse_val(line, key, v)?,
            "sweep.count" => cfg.sweep_count = parse_val(line, key, v)?,
            "sweep.mu_ratio" => cfg.sweep_mu_ratio = parse_val(line, key, v)?,
            "study.fit_window" => {
                cfg.fit_window = if v == "all" {
                    FitWindow::All
                } else {
                    let (a, b) = v.split_once("..").ok_or_else(|| Error::Config {
                        line,
                        msg: format!("fit window is `all` or `start..end`, got `{v}`"),
                    })?;
                    FitWindow::Range(parse_val(line, key, a.trim())?, parse_val(line, key, b.trim())?)
                }
            }
            "corrector.k" => cfg.corrector_k = parse_val(line, key, v)?,
            "corrector.eps_high" => cfg.corrector_eps_high = parse_val(line, key, v)?,
            "corrector.eps_low" => cfg.corrector_eps_low = parse_val(line, key, v)?,
            "corrector.count" => cfg.corrector_count = parse_val(line, key, v)?,
            "corrector.grid_n" => cfg.corrector_grid_n = parse_val(line, key, v)?,
            "verify.samples" => cfg.verify_samples = parse_val(line, key, v)?,
            "verify.seed" => cfg.verify_seed = parse_val(line, key, v)?,
            _ => {
                return Err(Error::Config {
                    line,
                    msg: format!("unknown key `{key}`"),
                })
            }
        }
    }
    Ok(cfg)
}

impl Config {
    /// Canonical text form; `parse(emit(c)) == c` and emit is idempotent.
    pub fn emit(&self) -> String {
        use super::fmt_f64 as f;
        let b = |v: bool| if v { "true" } else { "false" };
        let list_u = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let list_f = |v: &[f64]| v.iter().map(|x| f(*x)).collect::<Vec<_>>().join(",");
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        kv("grid.nx", self.nx.to_string());
        kv("grid.ny", self.ny.to_string());
        kv("grid.nz", self.nz.to_string());
        kv("phys.nu", f(self.nu));
        kv("phys.mu", f(self.mu));
        kv("time.dt", f(self.dt));
        kv("time.T", f(self.t_final));
        kv("init.kind", self.init_kind.clone());
        kv("init.seed", self.init_seed.to_string());
        kv("init.amplitude", f(self.init_amplitude));
        kv("init.decay", f(self.init_decay));
        if let Some(p) = &self.init_file {
            kv("init.file", p.display().to_string());
        }
        kv("dealias.x", b(self.dealias_x).into());
        kv("dealias.y", b(self.dealias_y).into());
        kv("dealias.z", b(self.dealias_z).into());
        kv("norms.track", list_u(&self.norms_track));
        kv("cfl.safety", f(self.cfl_safety));
        kv("guard.threshold", f(self.guard_threshold));
        kv("output.dir", self.output_dir.display().to_string());
        kv("output.record_interval", f(self.record_interval));
        if !self.snapshot_times.is_empty() {
            kv("output.snapshots", list_f(&self.snapshot_times));
        }
        kv("sweep.nu_high", f(self.sweep_nu_high));
        kv("sweep.nu_low", f(self.sweep_nu_low));
        kv("sweep.count", self.sweep_count.to_string());
        kv("sweep.mu_ratio", f(self.sweep_mu_ratio));
        match self.fit_window {
            FitWindow::All => kv("study.fit_window", "all".into()),
            FitWindow::Range(a, bnd) => kv("study.fit_window", format!("{a}..{bnd}")),
        }
        kv("corrector.k", self.corrector_k.to_string());
        kv("corrector.eps_high", f(self.corrector_eps_high));
        kv("corrector.eps_low", f(self.corrector_eps_low));
        kv("corrector.count", self.corrector_count.to_string());
        kv("corrector.grid_n", self.corrector_grid_n.to_string());
        kv("verify.samples", self.verify_samples.to_string());
        kv("verify.seed", self.verify_seed.to_string());
        out
    }

    pub fn dealias(&self) -> DealiasPolicy {
        DealiasPolicy {
            x: self.dealias_x,
            y: self.dealias_y,
            z: self.dealias_z,
        }
    }

    pub fn init_kind(&self) -> Result<InitKind> {
        match self.init_kind.as_str() {
            "shear" => Ok(InitKind::Shear { amplitude: self.init_amplitude }),
            "random" => Ok(InitKind::Random {
                seed: self.init_seed,
                amplitude: self.init_amplitude,
                decay: self.init_decay,
            }),
            "elsasser" => Ok(InitKind::Elsasser {
                seed: self.init_seed,
                amplitude: self.init_amplitude,
                decay: self.init_decay,
            }),
            "file" => self
                .init_file
                .clone()
                .map(InitKind::SnapshotFile)
                .ok_or_else(|| Error::Validation {
                    key: "init.file".into(),
                    msg: "init.kind = file needs init.file".into(),
                }),
            other => Err(Error::Validation {
                key: "init.kind".into(),
                msg: format!("unknown init kind `{other}` (shear | random | elsasser | file)"),
            }),
        }
    }

    /// Validated single-run view.
    pub fn run_config(&self) -> Result<RunConfig> {
        let grid = Grid::new(self.nx, self.ny, self.nz)?;
        let positive = |key: &str, v: f64| -> Result<f64> {
            if v > 0.0 {
                Ok(v)
            } else {
                Err(Error::Validation {
                    key: key.into(),
                    msg: format!("must be positive (got {v})"),
                })
            }
        };
        positive("time.dt", self.dt)?;
        positive("time.T", self.t_final)?;
        positive("output.record_interval", self.record_interval)?;
        if self.nu < 0.0 || self.mu < 0.0 {
            return Err(Error::Validation {
                key: "phys.nu".into(),
                msg: "diffusivities must be nonnegative".into(),
            });
        }
        for &s in &self.norms_track {
            if s > crate::fields::S_MAX {
                return Err(Error::Validation {
                    key: "norms.track".into(),
                    msg: format!("order {s} exceeds the resolved maximum {}", crate::fields::S_MAX),
                });
            }
        }
        let mut params = PhysParams::new(self.nu, self.mu, self.t_final, self.dt);
        params.dealias = self.dealias();
        params.norm_track = self.norms_track.clone();
        params.cfl_safety = self.cfl_safety;
        params.guard_threshold = self.guard_threshold;
        Ok(RunConfig {
            grid,
            params,
            init: self.init_kind()?,
            record_interval: self.record_interval,
        })
    }

    /// Geometric (ν, μ) sweep, largest first.
    pub fn sweep(&self) -> Result<Vec<(f64, f64)>> {
        if self.sweep_count < 4 {
            return Err(Error::Validation {
                key: "sweep.count".into(),
                msg: format!("a sweep needs at least 4 points (got {})", self.sweep_count),
            });
        }
        if !(self.sweep_nu_low > 0.0 && self.sweep_nu_high > self.sweep_nu_low) {
            return Err(Error::Validation {
                key: "sweep.nu_high".into(),
                msg: "need nu_high > nu_low > 0".into(),
            });
        }
        let n = self.sweep_count;
        let ratio = (self.sweep_nu_low / self.sweep_nu_high).powf(1.0 / (n - 1) as f64);
        Ok((0..n)
            .map(|i| {
                let nu = self.sweep_nu_high * ratio.powi(i as i32);
                (nu, self.sweep_mu_ratio * nu)
            })
            .collect())
    }

    /// Geometric ε sweep for corrector studies, largest first.
    pub fn eps_sweep(&self) -> Result<Vec<f64>> {
        if self.corrector_count < 5 {
            return Err(Error::Validation {
                key: "corrector.count".into(),
                msg: format!("an eps sweep needs at least 5 points (got {})", self.corrector_count),
            });
        }
        let (hi, lo, n) = (self.corrector_eps_high, self.corrector_eps_low, self.corrector_count);
        if !(lo > 0.0 && hi > lo) {
            return Err(Error::Validation {
                key: "corrector.eps_high".into(),
                msg: "need eps_high > eps_low > 0".into(),
            });
        }
        let ratio = (lo / hi).powf(1.0 / (n - 1) as f64);
        Ok((0..n).map(|i| hi * ratio.powi(i as i32)).collect())
    }

    pub fn scaling_quantities() -> [ScalingQuantity; 3] {
        [
            ScalingQuantity::TangentialTopDerivative,
            ScalingQuantity::NormalTopDerivative,
            ScalingQuantity::UnweightedTopDerivative,
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_text_gets_defaults() {
        let cfg = parse_config("grid.nx = 16\n").unwrap();
        assert_eq!(cfg.nx, 16);
        assert_eq!(cfg.ny, 32);
        assert_eq!(cfg.norms_track, vec![1, 2, 3]);
        assert_eq!(cfg.record_interval, 1e-2);
    }

    #[test]
    fn unknown_keys_and_short_sweeps_are_rejected() {
        let err = parse_config("grid.nx = 16\nbogus.key = 1\n").unwrap_err();
        match err {
            Error::Config { line, msg } => {
                assert_eq!(line, 2);
                assert!(msg.contains("bogus.key"));
            }
            other => panic!("unexpected error {other}"),
        }
        let cfg = parse_config("sweep.count = 3\n").unwrap();
        assert!(matches!(cfg.sweep(), Err(Error::Validation { .. })));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_config("grid.nx = 16\n\ntime.dt = abc\n").unwrap_err();
        match err {
            Error::Config { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn emit_parse_roundtrip_is_canonical_and_idempotent() {
        let text = "grid.nx=16 # comment\n  phys.nu =0.003\nstudy.fit_window = 1..4\nnorms.track = 2,3\n";
        let cfg = parse_config(text).unwrap();
        let emitted = cfg.emit();
        let reparsed = parse_config(&emitted).unwrap();
        assert_eq!(cfg, reparsed);
        assert_eq!(emitted, reparsed.emit());
    }

    #[test]
    fn sweep_is_geometric_with_tied_mu() {
        let cfg = parse_config("sweep.nu_high = 0.01\nsweep.nu_low = 0.001\nsweep.count = 5\n").unwrap();
        let sweep = cfg.sweep().unwrap();
        assert_eq!(sweep.len(), 5);
        assert!((sweep[0].0 - 1e-2).abs() < 1e-15);
        assert!((sweep[4].0 - 1e-3).abs() < 1e-12);
        let r01 = sweep[1].0 / sweep[0].0;
        let r12 = sweep[2].0 / sweep[1].0;
        assert!((r01 - r12).abs() < 1e-12);
        assert!(sweep.iter().all(|(nu, mu)| nu == mu));
    }
}
