//! Problem directories.
//!
//! ```text
//! <dir>/A.bin      forward operator, MDOP
//! <dir>/f0.csv     ground truth (optional when unknown)
//! <dir>/g.csv      data
//! <dir>/L.bin      seminorm operator, only for "custom" regularizers
//! <dir>/meta.json  tau, noise_level, seed, regime, ...
//! ```

use std::fs;
use std::path::Path;

use morozov_core::dual::{diagnose_regime, Regime};
use morozov_core::regularizers::{Regularizer, RegularizerKind};
use morozov_core::{InverseProblem, LinearOperator};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formats::{read_csv_vector, read_mdop, read_operator, write_csv_vector, write_mdop};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FixtureMeta {
    pub tau: f64,
    #[serde(default)]
    pub noise_level: f64,
    #[serde(default)]
    pub seed: u64,
    /// Regime of `(A, g, tau)` when the fixture was written.
    #[serde(default)]
    pub regime: Option<String>,
    #[serde(default)]
    pub delta_g_norm: Option<f64>,
    /// "identity" (default), "first_difference" or "custom" (reads L.bin).
    #[serde(default = "default_regularizer")]
    pub regularizer: String,
}

fn default_regularizer() -> String {
    "identity".into()
}

fn kind_name(kind: RegularizerKind) -> &'static str {
    match kind {
        RegularizerKind::Identity => "identity",
        RegularizerKind::FirstDifference => "first_difference",
        RegularizerKind::Custom => "custom",
    }
}

pub fn save_fixture(dir: &Path, p: &InverseProblem) -> Result<FixtureMeta> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_mdop(&dir.join("A.bin"), &p.a.materialize())?;
    write_csv_vector(&dir.join("f0.csv"), &p.f0)?;
    write_csv_vector(&dir.join("g.csv"), &p.g)?;
    let kind = p.regularizer.kind();
    if kind == RegularizerKind::Custom {
        write_mdop(&dir.join("L.bin"), &p.regularizer.seminorm_operator().materialize())?;
    }
    let regime = if p.tau > 0.0 {
        Some(diagnose_regime(&p.a, &p.g, p.tau)?.regime.as_str().to_string())
    } else {
        None
    };
    let meta = FixtureMeta {
        tau: p.tau,
        noise_level: p.noise_level,
        seed: p.seed,
        regime,
        delta_g_norm: Some(p.delta_g_norm),
        regularizer: kind_name(kind).into(),
    };
    let path = dir.join("meta.json");
    let text = serde_json::to_string_pretty(&meta).map_err(|source| Error::Json {
        path: path.clone(),
        source,
    })?;
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(meta)
}

pub fn load_meta(dir: &Path) -> Result<FixtureMeta> {
    let path = dir.join("meta.json");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json { path, source })
}

/// Loads a problem directory. `A` may be given as `A.bin` or `A.csv`.
pub fn load_fixture(dir: &Path) -> Result<InverseProblem> {
    let meta = load_meta(dir)?;
    let a_bin = dir.join("A.bin");
    let a = if a_bin.exists() {
        LinearOperator::dense(read_mdop(&a_bin)?)?
    } else {
        read_operator(&dir.join("A.csv"))?
    };
    let g = read_csv_vector(&dir.join("g.csv"))?;
    let f0_path = dir.join("f0.csv");
    let f0 = if f0_path.exists() {
        read_csv_vector(&f0_path)?
    } else {
        vec![0.0; a.dim_f()]
    };
    let regularizer = match meta.regularizer.as_str() {
        "identity" => Regularizer::identity(a.dim_f())?,
        "first_difference" => Regularizer::first_difference(a.dim_f())?,
        "custom" => {
            let l_bin = dir.join("L.bin");
            let l = if l_bin.exists() {
                read_operator(&l_bin)?
            } else {
                read_operator(&dir.join("L.csv"))?
            };
            Regularizer::custom(l)
        }
        other => {
            return Err(Error::format(
                dir.join("meta.json"),
                format!("unknown regularizer {other:?}"),
            ))
        }
    };
    let g0 = a.apply(&f0)?;
    let delta_g_norm = meta.delta_g_norm.unwrap_or_else(|| {
        g.iter()
            .zip(&g0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    });
    let problem = InverseProblem {
        a,
        g,
        g0,
        f0,
        delta_g_norm,
        tau: meta.tau,
        noise_level: meta.noise_level,
        regularizer: Regularizer::identity(1)?,
        seed: meta.seed,
    };
    Ok(problem.with_regularizer(regularizer)?)
}

/// Regime recorded in a fixture's metadata, if any.
pub fn recorded_regime(meta: &FixtureMeta) -> Option<Regime> {
    meta.regime.as_deref().and_then(Regime::parse)
}
