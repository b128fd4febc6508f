//! Synthetic benchmarks with planted block or Bernoulli factors, Gaussian
//! noise and constraint networks derived from the ground-truth coefficients.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{JmfError, Result};
use crate::model::{ConstraintSet, Factorization, Hyperparameters, MultiViewDataset, Problem};

/// Noise scale of the constraint matrices.
pub const CONSTRAINT_NOISE: f64 = 0.1;

/// Redraws allowed for an all-zero Bernoulli row.
pub const BERNOULLI_RETRIES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DatasetId {
    D1,
    D2,
    D3,
    D4,
}

impl std::str::FromStr for DatasetId {
    type Err = JmfError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "D1" | "1" => Ok(DatasetId::D1),
            "D2" | "2" => Ok(DatasetId::D2),
            "D3" | "3" => Ok(DatasetId::D3),
            "D4" | "4" => Ok(DatasetId::D4),
            _ => Err(JmfError::InvalidParameter(format!("unknown dataset id {s:?}"))),
        }
    }
}

impl std::fmt::Display for DatasetId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Block-overlap overrides; `None` keeps the dataset default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CophOverrides {
    pub w: Option<usize>,
    pub h: Vec<Option<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub dataset: DatasetId,
    /// Gaussian noise level `μ`; `None` uses the dataset default.
    #[serde(default)]
    pub noise: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub coph: CophOverrides,
    /// Noise scale of the constraint matrices.
    #[serde(default = "default_constraint_noise")]
    pub constraint_noise: f64,
}

fn default_constraint_noise() -> f64 {
    CONSTRAINT_NOISE
}

impl SyntheticSpec {
    pub fn new(dataset: DatasetId, seed: u64) -> Self {
        Self {
            dataset,
            noise: None,
            seed,
            coph: CophOverrides::default(),
            constraint_noise: CONSTRAINT_NOISE,
        }
    }

    pub fn with_noise(mut self, noise: f64) -> Self {
        self.noise = Some(noise);
        self
    }

    pub fn rank(&self) -> usize {
        layout(self.dataset).rank
    }

    pub fn effective_noise(&self) -> f64 {
        self.noise.unwrap_or(layout(self.dataset).noise)
    }
}

/// How one factor is drawn.
#[derive(Debug, Clone, Copy)]
enum FactorKind {
    /// Consecutive blocks of ones, shifted by `size - coph`; `skip` is a
    /// 1-based component left empty.
    Blocks {
        size: usize,
        coph: usize,
        skip: Option<usize>,
    },
    Bernoulli(f64),
}

struct Layout {
    m: usize,
    rank: usize,
    noise: f64,
    w: FactorKind,
    h: Vec<(usize, FactorKind)>,
}

fn blocks(size: usize, coph: usize) -> FactorKind {
    FactorKind::Blocks { size, coph, skip: None }
}

fn layout(id: DatasetId) -> Layout {
    match id {
        DatasetId::D1 => Layout {
            m: 45,
            rank: 4,
            noise: 2.0,
            w: blocks(10, 0),
            h: vec![
                (130, blocks(30, 0)),
                (
                    170,
                    FactorKind::Blocks {
                        size: 40,
                        coph: 0,
                        skip: Some(4),
                    },
                ),
                (
                    215,
                    FactorKind::Blocks {
                        size: 50,
                        coph: 0,
                        skip: Some(3),
                    },
                ),
            ],
        },
        DatasetId::D2 => Layout {
            m: 1000,
            rank: 10,
            noise: 2.0,
            w: FactorKind::Bernoulli(0.1),
            h: vec![(200, blocks(20, 0)), (300, blocks(30, 5)), (500, blocks(50, 10))],
        },
        DatasetId::D3 => Layout {
            m: 2000,
            rank: 20,
            noise: 2.0,
            w: blocks(100, 15),
            h: vec![
                (200, FactorKind::Bernoulli(0.05)),
                (150, FactorKind::Bernoulli(0.05)),
                (300, FactorKind::Bernoulli(0.05)),
            ],
        },
        DatasetId::D4 => Layout {
            m: 500,
            rank: 5,
            noise: 3.0,
            w: blocks(100, 0),
            h: vec![(1200, blocks(240, 0)), (1300, blocks(260, 0)), (2000, blocks(400, 0))],
        },
    }
}

fn with_coph(kind: FactorKind, coph: Option<usize>) -> FactorKind {
    match (kind, coph) {
        (FactorKind::Blocks { size, skip, .. }, Some(c)) => FactorKind::Blocks { size, coph: c, skip },
        (k, _) => k,
    }
}

/// Component `k` (1-based) covers indices `1 + x_k .. size + x_k` with
/// `x_k = (k - 1)(size - coph)`; returned 0-based and clipped to `len`.
fn block_range(k: usize, size: usize, coph: usize, len: usize) -> std::ops::Range<usize> {
    let shift = (k - 1) * size.saturating_sub(coph);
    shift.min(len)..(shift + size).min(len)
}

/// Draws an `r x n` component-by-feature indicator matrix. Bernoulli rows
/// that come out all zero are redrawn; rows still empty after the retry
/// budget are reported. With `bernoulli_rows_are_components` unset the
/// redrawn unit is a feature (a row of the transposed matrix).
fn draw_components(
    kind: FactorKind,
    r: usize,
    n: usize,
    rng: &mut ChaCha8Rng,
    degenerate: &mut Vec<usize>,
    bernoulli_rows_are_components: bool,
) -> Array2<f64> {
    match kind {
        FactorKind::Blocks { size, coph, skip } => {
            let mut out = Array2::<f64>::zeros((r, n));
            for k in 1..=r {
                if skip == Some(k) {
                    continue;
                }
                for j in block_range(k, size, coph, n) {
                    out[[k - 1, j]] = 1.0;
                }
            }
            out
        }
        FactorKind::Bernoulli(p) => {
            let dist = Bernoulli::new(p).expect("probability in [0, 1]");
            // rows of the stored matrix are redrawn; for W that is an object row
            let (rows, cols) = if bernoulli_rows_are_components { (r, n) } else { (n, r) };
            let mut out = Array2::<f64>::zeros((rows, cols));
            for i in 0..rows {
                let mut filled = false;
                for _ in 0..=BERNOULLI_RETRIES {
                    for j in 0..cols {
                        out[[i, j]] = if dist.sample(rng) { 1.0 } else { 0.0 };
                    }
                    if out.row(i).iter().any(|&v| v > 0.0) {
                        filled = true;
                        break;
                    }
                }
                if !filled {
                    degenerate.push(i);
                }
            }
            if bernoulli_rows_are_components {
                out
            } else {
                out.reversed_axes().as_standard_layout().to_owned()
            }
        }
    }
}

fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.sample::<f64, _>(StandardNormal))
}

/// Planted factors, noisy data and constraint networks.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub spec: SyntheticSpec,
    pub w0: Array2<f64>,
    pub h0: Vec<Array2<f64>>,
    pub x: Vec<Array2<f64>>,
    pub constraints: ConstraintSet,
    /// Bernoulli rows left all-zero after the retry budget, as
    /// `(factor name, 0-based row)`.
    pub degenerate_rows: Vec<(String, usize)>,
}

impl GroundTruth {
    pub fn rank(&self) -> usize {
        self.w0.ncols()
    }

    pub fn dataset(&self) -> MultiViewDataset {
        MultiViewDataset::new(self.x.clone()).expect("generated views are valid")
    }

    pub fn factorization(&self) -> Factorization {
        Factorization {
            w: self.w0.clone(),
            h: self.h0.clone(),
        }
    }

    /// A problem over the generated views; constraints are attached only
    /// when `with_constraints` is set.
    pub fn problem(&self, params: Hyperparameters, with_constraints: bool) -> Result<Problem> {
        let constraints = if with_constraints {
            self.constraints.clone()
        } else {
            ConstraintSet::empty(self.x.len())
        };
        Problem::new(self.dataset(), constraints, params)
    }
}

/// `Θ = (A + A^T) / 2` with `A = H0^T H0 + noise_scale · E`, clamped at 0.
/// `(H0^T H0)[s, t]` counts the components containing both features.
pub fn build_within(h0: &Array2<f64>, noise_scale: f64, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = h0.ncols();
    let mut a = h0.t().dot(h0);
    if noise_scale != 0.0 {
        a.scaled_add(noise_scale, &gaussian(n, n, &mut rng));
    }
    let mut theta = &a + &a.t();
    theta.mapv_inplace(|v| (0.5 * v).max(0.0));
    theta
}

/// `R = H0_I^T H0_J + noise_scale · E`, clamped at 0.
pub fn build_between(h_i: &Array2<f64>, h_j: &Array2<f64>, noise_scale: f64, seed: u64) -> Result<Array2<f64>> {
    if h_i.nrows() != h_j.nrows() {
        return Err(JmfError::Shape(format!(
            "rank mismatch: {} vs {} components",
            h_i.nrows(),
            h_j.nrows()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r = h_i.t().dot(h_j);
    if noise_scale != 0.0 {
        r.scaled_add(noise_scale, &gaussian(r.nrows(), r.ncols(), &mut rng));
    }
    r.mapv_inplace(|v| v.max(0.0));
    Ok(r)
}

pub fn generate(spec: &SyntheticSpec) -> Result<GroundTruth> {
    let lay = layout(spec.dataset);
    let noise = spec.effective_noise();
    if !(noise >= 0.0) || !(spec.constraint_noise >= 0.0) {
        return Err(JmfError::InvalidParameter("noise levels must be >= 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut degenerate_rows = Vec::new();

    let mut bad = Vec::new();
    let w_kind = with_coph(lay.w, spec.coph.w);
    // W is m x r: blocks run down the rows of each column
    let w0 = draw_components(w_kind, lay.rank, lay.m, &mut rng, &mut bad, false)
        .reversed_axes()
        .as_standard_layout()
        .to_owned();
    degenerate_rows.extend(bad.drain(..).map(|i| ("W0".to_string(), i)));

    let mut h0 = Vec::with_capacity(lay.h.len());
    for (i, &(n, kind)) in lay.h.iter().enumerate() {
        let kind = with_coph(kind, spec.coph.h.get(i).copied().flatten());
        h0.push(draw_components(kind, lay.rank, n, &mut rng, &mut bad, true));
        degenerate_rows.extend(bad.drain(..).map(|row| (format!("H0_{}", i + 1), row)));
    }

    let x = h0
        .iter()
        .map(|h| {
            let mut x = w0.dot(h);
            if noise != 0.0 {
                x.scaled_add(noise, &gaussian(x.nrows(), x.ncols(), &mut rng));
            }
            x.mapv_inplace(|v| v.max(0.0));
            x
        })
        .collect::<Vec<_>>();

    let mut constraints = ConstraintSet::empty(h0.len());
    for (i, h) in h0.iter().enumerate() {
        let seed = rng.gen::<u64>();
        constraints.add_within(i, build_within(h, spec.constraint_noise, seed))?;
    }
    for i in 0..h0.len() {
        for j in i + 1..h0.len() {
            let seed = rng.gen::<u64>();
            constraints.add_between(i, j, build_between(&h0[i], &h0[j], spec.constraint_noise, seed)?)?;
        }
    }

    if !degenerate_rows.is_empty() {
        log::info!("{} Bernoulli rows stayed empty after retries", degenerate_rows.len());
    }
    Ok(GroundTruth {
        spec: spec.clone(),
        w0,
        h0,
        x,
        constraints,
        degenerate_rows,
    })
}
