//! Headerless CSV matrices and the JSON manifest that describes them.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use jmf::synthgen::{GroundTruth, SyntheticSpec};
use jmf::{ConstraintSet, MultiViewDataset};

/// Writes `m` row-major with 17 significant digits, which round-trips
/// every f64 exactly.
pub fn write_matrix(path: &Path, m: &Array2<f64>) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .with_context(|| format!("cannot create {}", path.display()))?;
    for row in m.rows() {
        w.write_record(row.iter().map(|v| format!("{v:.16e}")))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix(path: &Path) -> Result<Array2<f64>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (i, rec) in r.records().enumerate() {
        let rec = rec.with_context(|| format!("{} line {}", path.display(), i + 1))?;
        match cols {
            None => cols = Some(rec.len()),
            Some(c) if c != rec.len() => bail!(
                "{} line {}: expected {c} fields, got {}",
                path.display(),
                i + 1,
                rec.len()
            ),
            _ => {}
        }
        for field in rec.iter() {
            let v: f64 = field
                .parse()
                .with_context(|| format!("{} line {}: bad number {field:?}", path.display(), i + 1))?;
            data.push(v);
        }
        rows += 1;
    }
    let cols = cols.unwrap_or(0);
    Ok(Array2::from_shape_vec((rows, cols), data)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub role: String,
    /// Relative to the manifest's directory.
    pub path: String,
    pub shape: [usize; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<SyntheticSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub files: Vec<FileEntry>,
    /// Bernoulli rows left empty by the generator, as `(factor, 0-based row)`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub degenerate_rows: Vec<(String, usize)>,
}

/// Role names: `X_1`, `W0`, `H0_1`, `Theta_1_1` (view, index), `R_1_2`.
fn parse_indices(rest: &str) -> Result<Vec<usize>> {
    rest.split('_')
        .map(|s| {
            let v: usize = s.parse().with_context(|| format!("bad role index {s:?}"))?;
            if v == 0 {
                bail!("role indices are 1-based");
            }
            Ok(v - 1)
        })
        .collect()
}

impl Manifest {
    pub fn load(path: &Path) -> Result<(Manifest, PathBuf)> {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let m: Manifest = serde_json::from_str(&text).with_context(|| format!("bad manifest {}", path.display()))?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((m, dir))
    }

    fn matrices(&self, dir: &Path, prefix: &str) -> Result<Vec<(Vec<usize>, Array2<f64>)>> {
        let mut out = Vec::new();
        for f in &self.files {
            let Some(rest) = f.role.strip_prefix(prefix) else {
                continue;
            };
            let idx = if rest.is_empty() {
                Vec::new()
            } else {
                parse_indices(rest)?
            };
            let m = read_matrix(&dir.join(&f.path))?;
            if m.dim() != (f.shape[0], f.shape[1]) {
                bail!("{} is {:?}, manifest says {:?}", f.path, m.dim(), f.shape);
            }
            out.push((idx, m));
        }
        Ok(out)
    }

    pub fn dataset(&self, dir: &Path) -> Result<MultiViewDataset> {
        let mut views = self.matrices(dir, "X_")?;
        views.sort_by_key(|(i, _)| i.clone());
        for (k, (i, _)) in views.iter().enumerate() {
            if i != &vec![k] {
                bail!("data views must be X_1..X_N without gaps");
            }
        }
        if views.is_empty() {
            bail!("manifest lists no data views");
        }
        Ok(MultiViewDataset::new(views.into_iter().map(|(_, m)| m).collect())?)
    }

    pub fn constraints(&self, dir: &Path, num_views: usize) -> Result<ConstraintSet> {
        let mut cs = ConstraintSet::empty(num_views);
        for (idx, m) in self.matrices(dir, "Theta_")? {
            cs.add_within(idx[0], m)?;
        }
        for (idx, m) in self.matrices(dir, "R_")? {
            if idx.len() != 2 {
                bail!("between-constraint roles are R_I_J");
            }
            cs.add_between(idx[0], idx[1], m)?;
        }
        Ok(cs)
    }

    /// Ground truth when the manifest carries `W0` and every `H0_I`.
    pub fn ground_truth(&self, dir: &Path) -> Result<Option<GroundTruth>> {
        let w0 = self.matrices(dir, "W0")?;
        let Some((_, w0)) = w0.into_iter().next() else {
            return Ok(None);
        };
        let dataset = self.dataset(dir)?;
        let mut h0 = self.matrices(dir, "H0_")?;
        h0.sort_by_key(|(i, _)| i.clone());
        if h0.len() != dataset.num_views() {
            return Ok(None);
        }
        let constraints = self.constraints(dir, dataset.num_views())?;
        Ok(Some(GroundTruth {
            spec: self
                .spec
                .clone()
                .unwrap_or_else(|| SyntheticSpec::new(jmf::synthgen::DatasetId::D1, 0)),
            w0,
            h0: h0.into_iter().map(|(_, m)| m).collect(),
            x: dataset.into_views(),
            constraints,
            degenerate_rows: self.degenerate_rows.clone(),
        }))
    }
}

/// Writes every matrix of a generated instance plus `manifest.json`.
pub fn write_ground_truth(dir: &Path, gt: &GroundTruth) -> Result<Manifest> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let mut files = Vec::new();
    let mut put = |role: String, m: &Array2<f64>| -> Result<()> {
        let path = format!("{role}.csv");
        write_matrix(&dir.join(&path), m)?;
        files.push(FileEntry {
            role,
            path,
            shape: [m.nrows(), m.ncols()],
        });
        Ok(())
    };
    for (i, x) in gt.x.iter().enumerate() {
        put(format!("X_{}", i + 1), x)?;
    }
    put("W0".into(), &gt.w0)?;
    for (i, h) in gt.h0.iter().enumerate() {
        put(format!("H0_{}", i + 1), h)?;
    }
    for i in 0..gt.x.len() {
        for (t, theta) in gt.constraints.within(i).iter().enumerate() {
            put(format!("Theta_{}_{}", i + 1, t + 1), theta)?;
        }
    }
    for (&(i, j), r) in gt.constraints.between() {
        put(format!("R_{}_{}", i + 1, j + 1), r)?;
    }
    let manifest = Manifest {
        spec: Some(gt.spec.clone()),
        seed: Some(gt.spec.seed),
        files,
        degenerate_rows: gt.degenerate_rows.clone(),
    };
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("cannot write {}", path.display()))
}
