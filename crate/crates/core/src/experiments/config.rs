use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::manifold::{Mesh, MeshKind, NormKind, ScalarField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ManifoldName {
    Sphere,
    Torus,
}

/// A single field: `{"manifold": "sphere", "level": 4, "expr": "x*y"}` or
/// `{"manifold": "torus", "n_q": 64, "n_p": 64, "expr": "sin(2*pi*q)"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub manifold: ManifoldName,
    #[serde(default)]
    pub level: Option<u32>,
    #[serde(default)]
    pub n_q: Option<usize>,
    #[serde(default)]
    pub n_p: Option<usize>,
    pub expr: String,
}

impl FieldSpec {
    pub fn load(path: &Path) -> Result<Self> {
        parse_json_file(path)
    }

    pub fn mesh_kind(&self) -> MeshKind {
        match self.manifold {
            ManifoldName::Sphere => MeshKind::Sphere { level: self.level.unwrap_or(4) },
            ManifoldName::Torus => MeshKind::Torus { n_q: self.n_q.unwrap_or(64), n_p: self.n_p.unwrap_or(64) },
        }
    }

    pub fn build(&self) -> Result<ScalarField> {
        let mesh = Arc::new(Mesh::build(self.mesh_kind())?);
        ScalarField::parse(&mesh, &self.expr)
    }
}

/// Parameters shared by every experiment; unset fields take the defaults of
/// [`ExperimentConfig::default`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub manifold: ManifoldName,
    /// Sphere refinement level.
    pub level: u32,
    /// Torus grid size per direction.
    pub grid: usize,
    /// `F`; defaults to the extremal pair on the sphere and the shear pair on the torus.
    pub f: Option<String>,
    pub g: Option<String>,
    pub n_range: Vec<usize>,
    /// Scheme name (`strang`, `yoshida4`, …) or order.
    pub scheme: String,
    /// Largest time step of dyadic sweeps; chosen per manifold when unset.
    pub t0: Option<f64>,
    pub t_count: usize,
    pub e_grid: Vec<f64>,
    pub eps_grid: Vec<f64>,
    pub norm: NormKind,
    pub seed: u64,
    /// Random perturbations per family; every perturbation is used at every amplitude.
    pub perturbations: usize,
    pub amplitudes: Vec<f64>,
    /// Number of Hamiltonians in the composition expansion (cycling F, G, F, …).
    pub expansion_n: usize,
    /// Observable `A` of the composition expansion; manifold default when unset.
    pub observable: Option<String>,
    /// Empirical constant for the lower tube-distance estimate; measured when unset.
    pub c_emp: Option<f64>,
    pub reference_tol: f64,
    pub allow_numeric: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            manifold: ManifoldName::Sphere,
            level: 4,
            grid: 64,
            f: None,
            g: None,
            n_range: vec![2, 3, 4],
            scheme: "strang".into(),
            t0: None,
            t_count: 5,
            e_grid: vec![0.5, 1.0, 2.0, 4.0],
            eps_grid: vec![1.0, 1e-1, 1e-2, 1e-3, 1e-4],
            norm: NormKind::Uniform,
            seed: 1,
            perturbations: 20,
            amplitudes: vec![0.05, 0.1, 0.2],
            expansion_n: 2,
            observable: None,
            c_emp: None,
            reference_tol: 1e-13,
            allow_numeric: false,
        }
    }
}

impl ExperimentConfig {
    /// Reads a JSON configuration; parse errors carry the path and line.
    pub fn load(path: &Path) -> Result<Self> {
        let cfg: Self = parse_json_file(path)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let grids: [(&str, usize); 4] = [
            ("n_range", self.n_range.len()),
            ("e_grid", self.e_grid.len()),
            ("eps_grid", self.eps_grid.len()),
            ("amplitudes", self.amplitudes.len()),
        ];
        if let Some((name, _)) = grids.iter().find(|(_, n)| *n == 0) {
            return Err(Error::Config(format!("`{name}` must not be empty")));
        }
        if let Some(n) = self.n_range.iter().find(|&&n| n < 2) {
            return Err(Error::Config(format!("N must be at least 2, got {n}")));
        }
        if self.t_count < 3 {
            return Err(Error::Config(format!("`t_count` must be at least 3, got {}", self.t_count)));
        }
        if self.e_grid.iter().chain(&self.eps_grid).any(|&v| !(v.is_finite() && v > 0.0)) {
            return Err(Error::Config("grid values must be positive and finite".into()));
        }
        Ok(())
    }

    pub fn mesh_kind(&self) -> MeshKind {
        match self.manifold {
            ManifoldName::Sphere => MeshKind::Sphere { level: self.level },
            ManifoldName::Torus => MeshKind::Torus { n_q: self.grid, n_p: self.grid },
        }
    }

    pub fn mesh(&self) -> Result<Arc<Mesh>> {
        Ok(Arc::new(Mesh::build(self.mesh_kind())?))
    }

    /// `(F, G)` on `mesh`, with manifold-specific defaults.
    pub fn pair(&self, mesh: &Arc<Mesh>) -> Result<(ScalarField, ScalarField)> {
        let (df, dg) = if mesh.is_sphere() { ("1 - 2*x^2", "1 - 2*y^2") } else { ("sin(2*pi*q)", "sin(2*pi*p)") };
        Ok((
            ScalarField::parse(mesh, self.f.as_deref().unwrap_or(df))?,
            ScalarField::parse(mesh, self.g.as_deref().unwrap_or(dg))?,
        ))
    }

    /// Largest time step: about `1/ω` for the characteristic frequency `ω` of
    /// the default pairs (`4π²` for the torus shears, `4π√2` for the sphere
    /// rotation generated by `x + y`).
    pub fn t0(&self) -> f64 {
        self.t0.unwrap_or(match self.manifold {
            ManifoldName::Sphere => 0.05,
            ManifoldName::Torus => 0.025,
        })
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        config_digest(&serde_json::to_value(self).expect("configs serialize"))
    }
}

/// Hex SHA-256 of the compact JSON encoding of `value`.
pub fn config_digest(value: &serde_json::Value) -> String {
    hex::encode(Sha256::digest(value.to_string().as_bytes()))
}

fn parse_json_file<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}:{}:{}: {e}", path.display(), e.line(), e.column())))
}

/// Output location helper: `base` with its extension replaced.
pub(crate) fn sibling(base: &Path, extension: &str) -> PathBuf {
    base.with_extension(extension)
}
