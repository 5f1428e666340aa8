//! Flat, dotted-key run configuration.
//!
//! A config file is a single JSON object such as
//! `{"method.name": "mHLR", "hyper.gamma_i": 1e-3}`. Keys not listed in
//! [`KEYS`] are rejected, as are values of the wrong type. Command-line
//! overrides (`--hyper.gamma_i 1e-3`) are applied after the file.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use mhlr::eval::DEFAULT_FRACTIONS;
use mhlr::manifold::EdgeWeighting;
use mhlr::model::{ManifoldParams, MethodSpec};
use mhlr::{Hyperparams, KernelSpec};
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("unknown config key {0:?}")]
    UnknownKey(String),

    #[error("config key {key:?}: expected {expected}, got {found}")]
    Type {
        key: String,
        expected: &'static str,
        found: String,
    },

    #[error("config key {key:?}: {message}")]
    Invalid { key: String, message: String },

    #[error("missing required setting {0:?}")]
    Missing(&'static str),

    #[error("cannot read config {path}: {message}")]
    Read { path: String, message: String },
}

type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Int,
    Float,
    Str,
    OptFloat,
    OptStr,
    Strings,
    Floats,
    Ints,
}

impl Kind {
    fn describe(self) -> &'static str {
        match self {
            Kind::Int => "a non-negative integer",
            Kind::Float => "a number",
            Kind::Str => "a string",
            Kind::OptFloat => "a number or null",
            Kind::OptStr => "a string or null",
            Kind::Strings => "a list of strings",
            Kind::Floats => "a list of numbers",
            Kind::Ints => "a list of non-negative integers",
        }
    }

    fn accepts(self, v: &Value) -> bool {
        let int = |v: &Value| v.as_u64().is_some();
        match self {
            Kind::Int => int(v),
            Kind::Float => v.is_number(),
            Kind::Str => v.is_string(),
            Kind::OptFloat => v.is_null() || v.is_number(),
            Kind::OptStr => v.is_null() || v.is_string(),
            Kind::Strings => v.as_array().is_some_and(|a| a.iter().all(Value::is_string)),
            Kind::Floats => v.as_array().is_some_and(|a| a.iter().all(Value::is_number)),
            Kind::Ints => v.as_array().is_some_and(|a| a.iter().all(int)),
        }
    }
}

/// Every recognised key, its type and what it controls.
pub const KEYS: &[(&str, Kind, &str)] = &[
    (
        "seed",
        Kind::Int,
        "seed for data generation and label masking",
    ),
    (
        "out",
        Kind::OptStr,
        "output path: directory for gen, model file for train, CSV for eval and sweep",
    ),
    (
        "log",
        Kind::OptStr,
        "training log path (default: <out>.log.json)",
    ),
    ("data.train", Kind::OptStr, "training dataset manifest"),
    ("data.test", Kind::OptStr, "test dataset manifest"),
    (
        "train.fraction",
        Kind::OptFloat,
        "relabel this share of training points before training (null keeps the manifest mask)",
    ),
    ("eval.model", Kind::OptStr, "model file to evaluate"),
    (
        "method.name",
        Kind::Str,
        "method preset: VisF LapVF HesVF TagF LapTag HesTag mCLR mLLR mHLR",
    ),
    (
        "kernel.kind",
        Kind::Str,
        "kernel family for every view: rbf or linear",
    ),
    (
        "kernel.bandwidth",
        Kind::OptFloat,
        "rbf bandwidth (null: median pairwise distance of the view)",
    ),
    (
        "manifold.k_hessian",
        Kind::Int,
        "neighborhood size for the Hessian energy",
    ),
    (
        "manifold.k_laplacian",
        Kind::Int,
        "neighborhood size for the graph Laplacian",
    ),
    (
        "manifold.intrinsic_dim",
        Kind::Int,
        "tangent dimension for the Hessian energy",
    ),
    (
        "manifold.weighting",
        Kind::Str,
        "Laplacian edge weights: heat or binary",
    ),
    ("hyper.gamma_k", Kind::Float, "RKHS norm weight (> 0)"),
    (
        "hyper.gamma_i",
        Kind::Float,
        "manifold penalty weight (>= 0)",
    ),
    (
        "hyper.gamma_theta",
        Kind::Float,
        "kernel weight penalty (> 0)",
    ),
    (
        "hyper.gamma_beta",
        Kind::Float,
        "regularizer weight penalty (> 0)",
    ),
    ("hyper.cg_tol", Kind::Float, "inner solver tolerance"),
    ("hyper.cg_max_iter", Kind::Int, "inner solver iteration cap"),
    (
        "hyper.outer_tol",
        Kind::Float,
        "relative objective change that ends alternation",
    ),
    ("hyper.outer_max_iter", Kind::Int, "alternation sweep cap"),
    ("sweep.methods", Kind::Strings, "method presets to compare"),
    (
        "sweep.fractions",
        Kind::Floats,
        "labeled fractions, each in (0, 1]",
    ),
    ("sweep.seeds", Kind::Ints, "mask seeds"),
    ("gen.kind", Kind::Str, "generator: two-moons or planar"),
    ("gen.n", Kind::Int, "number of points"),
    ("gen.noise", Kind::Float, "two-moons noise level"),
    ("gen.ambient_dim", Kind::Int, "planar embedding dimension"),
];

fn kind_of(key: &str) -> Result<Kind> {
    KEYS.iter()
        .find(|(k, _, _)| *k == key)
        .map(|&(_, kind, _)| kind)
        .ok_or_else(|| ConfigError::UnknownKey(key.to_string()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, Value>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let hp = Hyperparams::default();
        let mp = ManifoldParams::default();
        let v = json!({
            "seed": 0,
            "out": null,
            "log": null,
            "data.train": null,
            "data.test": null,
            "train.fraction": null,
            "eval.model": null,
            "method.name": "mHLR",
            "kernel.kind": "rbf",
            "kernel.bandwidth": null,
            "manifold.k_hessian": mp.k_hessian,
            "manifold.k_laplacian": mp.k_laplacian,
            "manifold.intrinsic_dim": mp.intrinsic_dim,
            "manifold.weighting": "heat",
            "hyper.gamma_k": hp.gamma_k,
            "hyper.gamma_i": hp.gamma_i,
            "hyper.gamma_theta": hp.gamma_theta,
            "hyper.gamma_beta": hp.gamma_beta,
            "hyper.cg_tol": hp.cg_tol,
            "hyper.cg_max_iter": hp.cg_max_iter,
            "hyper.outer_tol": hp.outer_tol,
            "hyper.outer_max_iter": hp.outer_max_iter,
            "sweep.methods": MethodSpec::PRESETS,
            "sweep.fractions": DEFAULT_FRACTIONS,
            "sweep.seeds": [0, 1, 2],
            "gen.kind": "two-moons",
            "gen.n": 200,
            "gen.noise": 0.1,
            "gen.ambient_dim": 5,
        });
        let Value::Object(map) = v else {
            unreachable!()
        };
        RunConfig {
            values: map.into_iter().collect(),
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let mut config = RunConfig::default();
        config.merge_file(path)?;
        Ok(config)
    }

    pub fn merge_file(&mut self, path: &Path) -> Result<()> {
        let read_err = |message: String| ConfigError::Read {
            path: path.display().to_string(),
            message,
        };
        let text = fs::read_to_string(path).map_err(|e| read_err(e.to_string()))?;
        let value: Value = serde_json::from_str(&text).map_err(|e| read_err(e.to_string()))?;
        self.merge_json(value)
    }

    /// Apply every entry of a flat JSON object.
    pub fn merge_json(&mut self, value: Value) -> Result<()> {
        let Value::Object(map) = value else {
            return Err(ConfigError::Read {
                path: "<json>".into(),
                message: "config must be a JSON object".into(),
            });
        };
        for (key, v) in map {
            self.set(&key, v)?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: Value) -> Result<()> {
        let kind = kind_of(key)?;
        if !kind.accepts(&value) {
            return Err(ConfigError::Type {
                key: key.to_string(),
                expected: kind.describe(),
                found: value.to_string(),
            });
        }
        self.values.insert(key.to_string(), value);
        Ok(())
    }

    /// Apply a command-line override given as text.
    ///
    /// Numbers, `null` and JSON lists are parsed as JSON; list keys also take
    /// comma-separated items; string keys take the text verbatim.
    pub fn set_text(&mut self, key: &str, text: &str) -> Result<()> {
        let kind = kind_of(key)?;
        let value = match kind {
            Kind::Str => Value::String(text.to_string()),
            Kind::OptStr if text == "null" => Value::Null,
            Kind::OptStr => Value::String(text.to_string()),
            Kind::Strings | Kind::Floats | Kind::Ints if !text.trim_start().starts_with('[') => {
                Value::Array(
                    text.split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(|item| match kind {
                            Kind::Strings => Value::String(item.to_string()),
                            _ => serde_json::from_str(item)
                                .unwrap_or_else(|_| Value::String(item.to_string())),
                        })
                        .collect(),
                )
            }
            _ => serde_json::from_str(text).unwrap_or_else(|_| Value::String(text.to_string())),
        };
        self.set(key, value)
    }

    /// The effective configuration as a flat JSON object; loading it back
    /// reproduces this config.
    pub fn to_json(&self) -> Value {
        Value::Object(self.values.clone().into_iter().collect())
    }

    fn get(&self, key: &str) -> &Value {
        &self.values[key]
    }

    pub fn uint(&self, key: &str) -> u64 {
        self.get(key).as_u64().expect("type checked on set")
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        usize::try_from(self.uint(key)).map_err(|_| ConfigError::Invalid {
            key: key.to_string(),
            message: "value too large".into(),
        })
    }

    pub fn float(&self, key: &str) -> f64 {
        self.get(key).as_f64().expect("type checked on set")
    }

    pub fn opt_float(&self, key: &str) -> Option<f64> {
        self.get(key).as_f64()
    }

    pub fn string(&self, key: &str) -> &str {
        self.get(key).as_str().expect("type checked on set")
    }

    pub fn opt_string(&self, key: &str) -> Option<&str> {
        self.get(key).as_str()
    }

    /// A path setting that the current command cannot do without.
    pub fn required(&self, key: &'static str) -> Result<&str> {
        self.opt_string(key).ok_or(ConfigError::Missing(key))
    }

    pub fn strings(&self, key: &str) -> Vec<String> {
        list(self.get(key))
            .map(|v| v.as_str().unwrap().to_string())
            .collect()
    }

    pub fn floats(&self, key: &str) -> Vec<f64> {
        list(self.get(key)).map(|v| v.as_f64().unwrap()).collect()
    }

    pub fn uints(&self, key: &str) -> Vec<u64> {
        list(self.get(key)).map(|v| v.as_u64().unwrap()).collect()
    }

    fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError::Invalid {
            key: key.to_string(),
            message: message.into(),
        }
    }

    pub fn hyperparams(&self) -> Result<Hyperparams> {
        let hp = Hyperparams {
            gamma_k: self.float("hyper.gamma_k"),
            gamma_i: self.float("hyper.gamma_i"),
            gamma_theta: self.float("hyper.gamma_theta"),
            gamma_beta: self.float("hyper.gamma_beta"),
            cg_tol: self.float("hyper.cg_tol"),
            cg_max_iter: self.usize("hyper.cg_max_iter")?,
            outer_tol: self.float("hyper.outer_tol"),
            outer_max_iter: self.usize("hyper.outer_max_iter")?,
        };
        hp.validate()
            .map_err(|e| Self::invalid("hyper", e.to_string()))?;
        Ok(hp)
    }

    /// Kernels, manifold parameters and hyperparameters shared by every
    /// preset.
    pub fn base_method(&self) -> Result<MethodSpec> {
        let kernel = match self.string("kernel.kind") {
            "rbf" => KernelSpec::Rbf {
                bandwidth: self.opt_float("kernel.bandwidth"),
            },
            "linear" => KernelSpec::Linear,
            other => {
                return Err(Self::invalid(
                    "kernel.kind",
                    format!("unknown kernel {other:?}"),
                ))
            }
        };
        kernel
            .validate()
            .map_err(|e| Self::invalid("kernel.bandwidth", e.to_string()))?;
        let weighting = match self.string("manifold.weighting") {
            "heat" => EdgeWeighting::Heat,
            "binary" => EdgeWeighting::Binary,
            other => {
                return Err(Self::invalid(
                    "manifold.weighting",
                    format!("unknown weighting {other:?}"),
                ))
            }
        };
        let manifold = ManifoldParams {
            k_hessian: self.usize("manifold.k_hessian")?,
            k_laplacian: self.usize("manifold.k_laplacian")?,
            intrinsic_dim: self.usize("manifold.intrinsic_dim")?,
            weighting,
        };
        for key in [
            "manifold.k_hessian",
            "manifold.k_laplacian",
            "manifold.intrinsic_dim",
        ] {
            if self.uint(key) == 0 {
                return Err(Self::invalid(key, "must be positive"));
            }
        }
        Ok(MethodSpec {
            kernels: vec![kernel],
            manifold,
            hyper: self.hyperparams()?,
            ..MethodSpec::default()
        })
    }

    pub fn method(&self) -> Result<MethodSpec> {
        preset(
            self.string("method.name"),
            &self.base_method()?,
            "method.name",
        )
    }

    pub fn sweep_methods(&self) -> Result<Vec<MethodSpec>> {
        let base = self.base_method()?;
        let names = self.strings("sweep.methods");
        if names.is_empty() {
            return Err(Self::invalid("sweep.methods", "empty list"));
        }
        names
            .iter()
            .map(|n| preset(n, &base, "sweep.methods"))
            .collect()
    }

    pub fn sweep_fractions(&self) -> Result<Vec<f64>> {
        let fractions = self.floats("sweep.fractions");
        if fractions.is_empty() {
            return Err(Self::invalid("sweep.fractions", "empty list"));
        }
        for &f in &fractions {
            check_fraction("sweep.fractions", f)?;
        }
        Ok(fractions)
    }

    pub fn sweep_seeds(&self) -> Result<Vec<u64>> {
        let seeds = self.uints("sweep.seeds");
        if seeds.is_empty() {
            return Err(Self::invalid("sweep.seeds", "empty list"));
        }
        Ok(seeds)
    }

    pub fn train_fraction(&self) -> Result<Option<f64>> {
        self.opt_float("train.fraction")
            .map(|f| check_fraction("train.fraction", f).map(|()| f))
            .transpose()
    }
}

fn list(v: &Value) -> impl Iterator<Item = &Value> {
    v.as_array().expect("type checked on set").iter()
}

fn check_fraction(key: &str, f: f64) -> Result<()> {
    if f > 0.0 && f <= 1.0 {
        Ok(())
    } else {
        Err(RunConfig::invalid(
            key,
            format!("fraction {f} outside (0, 1]"),
        ))
    }
}

fn preset(name: &str, base: &MethodSpec, key: &str) -> Result<MethodSpec> {
    MethodSpec::preset(name, base).map_err(|e| RunConfig::invalid(key, e.to_string()))
}
