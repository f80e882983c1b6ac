//! Analytic coefficient fields: potential `phi(x)`, diffusion `D(x)` and
//! mobility `pi(x, t)`, plus the named presets used by the experiments.
//!
//! Every evaluator takes a point slice of length `dim`. Gradients and Hessians
//! are returned padded to three components.

use std::f64::consts::PI;

use crate::equilibrium;
use crate::error::{Error, Result};
use crate::grid::{integrate, ScalarField, TensorGrid};

type Vec3 = [f64; 3];
type Mat3 = [[f64; 3]; 3];

fn check_dim(dim: usize) -> Result<()> {
    if (1..=3).contains(&dim) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("dimension {dim} not in 1..=3")))
    }
}

#[derive(Debug, Clone, PartialEq)]
enum PotentialKind {
    Constant(f64),
    Linear { offset: f64, slope: Vec3 },
    /// `offset + curvature / 2 * |x|^2`
    Quadratic { offset: f64, curvature: f64 },
    /// `prod_j (1 + sin^2(k_j pi x_j / 2) / 4)`
    SineProduct { modes: Vec<u32> },
}

/// Potential `phi(x)` with analytic gradient and Hessian.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialField {
    kind: PotentialKind,
    scale: f64,
    shift: f64,
    convexity: Option<f64>,
}

impl PotentialField {
    pub fn constant(value: f64) -> Self {
        Self {
            kind: PotentialKind::Constant(value),
            scale: 1.0,
            shift: 0.0,
            convexity: None,
        }
    }

    /// `offset + slope . x`
    pub fn linear(offset: f64, slope: &[f64]) -> Self {
        let mut s = [0.0; 3];
        s[..slope.len()].copy_from_slice(slope);
        Self {
            kind: PotentialKind::Linear { offset, slope: s },
            scale: 1.0,
            shift: 0.0,
            convexity: None,
        }
    }

    /// `offset + curvature / 2 * |x|^2`, strictly convex with bound `curvature`.
    pub fn quadratic(offset: f64, curvature: f64) -> Self {
        Self {
            kind: PotentialKind::Quadratic { offset, curvature },
            scale: 1.0,
            shift: 0.0,
            convexity: (curvature > 0.0).then_some(curvature),
        }
    }

    /// Tensor product of `1 + sin^2(k pi x / 2) / 4`, one wavenumber per axis.
    pub fn sine_product(modes: &[u32]) -> Result<Self> {
        check_dim(modes.len())?;
        if modes.iter().any(|&k| k < 1) {
            return Err(Error::InvalidParameter(
                "potential wavenumbers must be >= 1".into(),
            ));
        }
        Ok(Self {
            kind: PotentialKind::SineProduct {
                modes: modes.to_vec(),
            },
            scale: 1.0,
            shift: 0.0,
            convexity: None,
        })
    }

    /// Same field multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            kind: self.kind.clone(),
            scale: self.scale * factor,
            shift: self.shift * factor,
            convexity: self.convexity.filter(|_| factor > 0.0).map(|l| l * factor),
        }
    }

    /// Same field plus the constant `c`.
    pub fn shifted(&self, c: f64) -> Self {
        Self {
            shift: self.shift + c,
            ..self.clone()
        }
    }

    /// Lower bound `lambda` on the Hessian, when known.
    pub fn convexity_bound(&self) -> Option<f64> {
        self.convexity
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let v = match &self.kind {
            PotentialKind::Constant(c) => *c,
            PotentialKind::Linear { offset, slope } => {
                offset + x.iter().zip(slope).map(|(a, b)| a * b).sum::<f64>()
            }
            PotentialKind::Quadratic { offset, curvature } => {
                offset + 0.5 * curvature * x.iter().map(|a| a * a).sum::<f64>()
            }
            PotentialKind::SineProduct { modes } => modes
                .iter()
                .zip(x)
                .map(|(&k, &xi)| sine_factor(k, xi).0)
                .product(),
        };
        self.scale * v + self.shift
    }

    pub fn gradient(&self, x: &[f64]) -> Vec3 {
        let mut g = [0.0; 3];
        match &self.kind {
            PotentialKind::Constant(_) => {}
            PotentialKind::Linear { slope, .. } => g[..x.len()].copy_from_slice(&slope[..x.len()]),
            PotentialKind::Quadratic { curvature, .. } => {
                for (gi, xi) in g.iter_mut().zip(x) {
                    *gi = curvature * xi;
                }
            }
            PotentialKind::SineProduct { modes } => {
                let f: Vec<_> = modes.iter().zip(x).map(|(&k, &xi)| sine_factor(k, xi)).collect();
                for j in 0..f.len() {
                    g[j] = (0..f.len())
                        .map(|i| if i == j { f[i].1 } else { f[i].0 })
                        .product();
                }
            }
        }
        g.map(|v| v * self.scale)
    }

    pub fn hessian(&self, x: &[f64]) -> Mat3 {
        let mut h = [[0.0; 3]; 3];
        match &self.kind {
            PotentialKind::Constant(_) | PotentialKind::Linear { .. } => {}
            PotentialKind::Quadratic { curvature, .. } => {
                for (j, row) in h.iter_mut().enumerate().take(x.len()) {
                    row[j] = *curvature;
                }
            }
            PotentialKind::SineProduct { modes } => {
                let f: Vec<_> = modes.iter().zip(x).map(|(&k, &xi)| sine_factor(k, xi)).collect();
                for j in 0..f.len() {
                    for l in 0..f.len() {
                        h[j][l] = (0..f.len())
                            .map(|i| match (i == j, i == l) {
                                (true, true) => f[i].2,
                                (true, false) | (false, true) => f[i].1,
                                (false, false) => f[i].0,
                            })
                            .product();
                    }
                }
            }
        }
        h.map(|row| row.map(|v| v * self.scale))
    }
}

/// Value, first and second derivative of `1 + sin^2(k pi x / 2) / 4`.
fn sine_factor(k: u32, x: f64) -> (f64, f64, f64) {
    let a = k as f64 * PI / 2.0;
    let s = (a * x).sin();
    (
        1.0 + 0.25 * s * s,
        0.25 * a * (2.0 * a * x).sin(),
        0.5 * a * a * (2.0 * a * x).cos(),
    )
}

/// Which index tuples of a multi-mode diffusion carry the amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeSelection {
    All,
    /// `m_1 < m_2 < ...`
    StrictlyIncreasing,
    /// `m_1 >= m_2 >= ...`
    NonIncreasing,
}

impl ModeSelection {
    fn accepts(self, m: &[u32]) -> bool {
        match self {
            ModeSelection::All => true,
            ModeSelection::StrictlyIncreasing => m.windows(2).all(|w| w[0] < w[1]),
            ModeSelection::NonIncreasing => m.windows(2).all(|w| w[0] >= w[1]),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum DiffusionKind {
    Constant(f64),
    /// `prod_j (1 - sin^2(k_j pi x_j) / 2)`
    SingleMode { freqs: Vec<u32> },
    /// `1 + sum A (prod_j cos(m_j pi x_j / 2) + 1)` over the active tuples
    MultiMode { modes: Vec<(Vec<u32>, f64)> },
}

/// Strictly positive diffusion coefficient `D(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionField {
    kind: DiffusionKind,
    lower_bound: f64,
}

impl DiffusionField {
    pub fn constant(value: f64) -> Result<Self> {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "diffusion constant must be positive, got {value}"
            )));
        }
        Ok(Self {
            kind: DiffusionKind::Constant(value),
            lower_bound: value,
        })
    }

    /// Separable `prod_j (1 - sin^2(k_j pi x_j) / 2)`, bounded below by `2^-dim`.
    pub fn single_mode(freqs: &[u32]) -> Result<Self> {
        check_dim(freqs.len())?;
        Ok(Self {
            lower_bound: 0.5_f64.powi(freqs.len() as i32),
            kind: DiffusionKind::SingleMode {
                freqs: freqs.to_vec(),
            },
        })
    }

    /// Multi-mode coefficient with `amplitude` on every tuple `1 <= m_j <= caps[j]`
    /// accepted by `rule`. Each summand is nonnegative, so `D >= 1`.
    pub fn multimode(caps: &[u32], amplitude: f64, rule: ModeSelection) -> Result<Self> {
        check_dim(caps.len())?;
        if caps.iter().any(|&c| c < 1) {
            return Err(Error::InvalidParameter("mode caps must be >= 1".into()));
        }
        if !(amplitude >= 0.0 && amplitude.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "mode amplitude must be nonnegative, got {amplitude}"
            )));
        }
        let mut modes = Vec::new();
        let mut m = vec![1_u32; caps.len()];
        'outer: loop {
            if rule.accepts(&m) && amplitude > 0.0 {
                modes.push((m.clone(), amplitude));
            }
            for j in (0..m.len()).rev() {
                if m[j] < caps[j] {
                    m[j] += 1;
                    continue 'outer;
                }
                m[j] = 1;
            }
            break;
        }
        Ok(Self {
            kind: DiffusionKind::MultiMode { modes },
            lower_bound: 1.0,
        })
    }

    /// Declared strong-positivity constant.
    pub fn lower_bound(&self) -> f64 {
        self.lower_bound
    }

    pub fn is_constant(&self) -> bool {
        match &self.kind {
            DiffusionKind::Constant(_) => true,
            DiffusionKind::MultiMode { modes } => modes.is_empty(),
            DiffusionKind::SingleMode { .. } => false,
        }
    }

    /// Number of index tuples with nonzero amplitude (0 for other kinds).
    pub fn active_modes(&self) -> usize {
        match &self.kind {
            DiffusionKind::MultiMode { modes } => modes.len(),
            _ => 0,
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match &self.kind {
            DiffusionKind::Constant(c) => *c,
            DiffusionKind::SingleMode { freqs } => freqs
                .iter()
                .zip(x)
                .map(|(&k, &xi)| {
                    let s = (k as f64 * PI * xi).sin();
                    1.0 - 0.5 * s * s
                })
                .product(),
            DiffusionKind::MultiMode { modes } => {
                1.0 + modes
                    .iter()
                    .map(|(m, a)| {
                        let c: f64 = m
                            .iter()
                            .zip(x)
                            .map(|(&mj, &xj)| (mj as f64 * PI * xj / 2.0).cos())
                            .product();
                        a * (c + 1.0)
                    })
                    .sum::<f64>()
            }
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec3 {
        let mut g = [0.0; 3];
        let dim = x.len();
        match &self.kind {
            DiffusionKind::Constant(_) => {}
            DiffusionKind::SingleMode { freqs } => {
                let f: Vec<(f64, f64)> = freqs
                    .iter()
                    .zip(x)
                    .map(|(&k, &xi)| {
                        let a = k as f64 * PI;
                        let s = (a * xi).sin();
                        (1.0 - 0.5 * s * s, -0.5 * a * (2.0 * a * xi).sin())
                    })
                    .collect();
                for (j, gj) in g.iter_mut().enumerate().take(dim) {
                    *gj = (0..dim).map(|i| if i == j { f[i].1 } else { f[i].0 }).product();
                }
            }
            DiffusionKind::MultiMode { modes } => {
                for (m, a) in modes {
                    let f: Vec<(f64, f64)> = m
                        .iter()
                        .zip(x)
                        .map(|(&mj, &xj)| {
                            let w = mj as f64 * PI / 2.0;
                            ((w * xj).cos(), -w * (w * xj).sin())
                        })
                        .collect();
                    for (j, gj) in g.iter_mut().enumerate().take(dim) {
                        *gj += a * (0..dim)
                            .map(|i| if i == j { f[i].1 } else { f[i].0 })
                            .product::<f64>();
                    }
                }
            }
        }
        g
    }
}

#[derive(Debug, Clone, PartialEq)]
enum MobilityKind {
    Constant(f64),
    /// `1 / gamma` with `gamma = prod_j (1 + cos^2(k_j pi x_j)) * (1 + sin(10 t) / 2)`
    Standard { freqs: Vec<u32> },
}

/// Strictly positive mobility `pi(x, t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MobilityField {
    kind: MobilityKind,
    scale: f64,
}

impl MobilityField {
    pub fn constant(value: f64) -> Result<Self> {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "mobility constant must be positive, got {value}"
            )));
        }
        Ok(Self {
            kind: MobilityKind::Constant(value),
            scale: 1.0,
        })
    }

    pub fn unit() -> Self {
        Self {
            kind: MobilityKind::Constant(1.0),
            scale: 1.0,
        }
    }

    /// Reciprocal of the separable `gamma` with one wavenumber per axis.
    pub fn standard(freqs: &[u32]) -> Result<Self> {
        check_dim(freqs.len())?;
        Ok(Self {
            kind: MobilityKind::Standard {
                freqs: freqs.to_vec(),
            },
            scale: 1.0,
        })
    }

    /// Same field multiplied pointwise by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "mobility scale must be positive, got {factor}"
            )));
        }
        Ok(Self {
            kind: self.kind.clone(),
            scale: self.scale * factor,
        })
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.kind, MobilityKind::Constant(_))
    }

    pub fn is_unit(&self) -> bool {
        matches!(self.kind, MobilityKind::Constant(c) if c * self.scale == 1.0)
    }

    /// Declared lower bound `C2`.
    pub fn lower_bound(&self) -> f64 {
        match &self.kind {
            MobilityKind::Constant(c) => c * self.scale,
            MobilityKind::Standard { freqs } => {
                self.scale / (2.0_f64.powi(freqs.len() as i32) * 1.5)
            }
        }
    }

    fn time_factor(t: f64) -> (f64, f64) {
        (1.0 + 0.5 * (10.0 * t).sin(), 5.0 * (10.0 * t).cos())
    }

    pub fn value(&self, x: &[f64], t: f64) -> f64 {
        match &self.kind {
            MobilityKind::Constant(c) => c * self.scale,
            MobilityKind::Standard { freqs } => {
                let space: f64 = freqs
                    .iter()
                    .zip(x)
                    .map(|(&k, &xi)| {
                        let c = (k as f64 * PI * xi).cos();
                        1.0 + c * c
                    })
                    .product();
                self.scale / (space * Self::time_factor(t).0)
            }
        }
    }

    pub fn gradient(&self, x: &[f64], t: f64) -> Vec3 {
        let mut g = [0.0; 3];
        if let MobilityKind::Standard { freqs } = &self.kind {
            let dim = x.len();
            let f: Vec<(f64, f64)> = freqs
                .iter()
                .zip(x)
                .map(|(&k, &xi)| {
                    let a = k as f64 * PI;
                    let c = (a * xi).cos();
                    (1.0 + c * c, -a * (2.0 * a * xi).sin())
                })
                .collect();
            let space: f64 = f.iter().map(|p| p.0).product();
            let gamma = space * Self::time_factor(t).0;
            for (j, gj) in g.iter_mut().enumerate().take(dim) {
                let dgamma = gamma / f[j].0 * f[j].1;
                *gj = -self.scale * dgamma / (gamma * gamma);
            }
        }
        g
    }

    /// Partial derivative in time.
    pub fn time_derivative(&self, x: &[f64], t: f64) -> f64 {
        match &self.kind {
            MobilityKind::Constant(_) => 0.0,
            MobilityKind::Standard { .. } => {
                let (tf, dtf) = Self::time_factor(t);
                -self.value(x, t) * dtf / tf
            }
        }
    }
}

/// The coefficient triple `(phi, D, pi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSet {
    pub name: String,
    pub potential: PotentialField,
    pub diffusion: DiffusionField,
    pub mobility: MobilityField,
}

impl ParameterSet {
    pub fn new(
        name: impl Into<String>,
        potential: PotentialField,
        diffusion: DiffusionField,
        mobility: MobilityField,
    ) -> Self {
        Self {
            name: name.into(),
            potential,
            diffusion,
            mobility,
        }
    }

    pub fn potential_cells(&self, grid: &TensorGrid) -> ScalarField {
        ScalarField::from_fn(*grid, |x| self.potential.value(x))
    }

    pub fn diffusion_cells(&self, grid: &TensorGrid) -> ScalarField {
        ScalarField::from_fn(*grid, |x| self.diffusion.value(x))
    }

    pub fn mobility_cells(&self, grid: &TensorGrid, t: f64) -> ScalarField {
        ScalarField::from_fn(*grid, |x| self.mobility.value(x, t))
    }
}

/// 1D potential `1 + sin^2(k_p pi x / 2) / 4`.
pub fn preset_potential_1d(k_p: u32) -> Result<PotentialField> {
    if k_p < 1 {
        return Err(Error::InvalidParameter("k_p must be >= 1".into()));
    }
    PotentialField::sine_product(&[k_p])
}

/// Wavenumbers of the tensor-product potential: 1D `k_p = 2`, 2D `(1, 2)`, 3D `(1, 2, 3)`.
pub fn preset_potential(dim: usize) -> Result<PotentialField> {
    match dim {
        1 => preset_potential_1d(2),
        2 => PotentialField::sine_product(&[1, 2]),
        3 => PotentialField::sine_product(&[1, 2, 3]),
        _ => Err(Error::InvalidParameter(format!("dimension {dim} not in 1..=3"))),
    }
}

pub fn preset_mobility(dim: usize) -> Result<MobilityField> {
    check_dim(dim)?;
    MobilityField::standard(&[1, 2, 3][..dim])
}

/// 1D `1 - sin^2(2 pi x) / 2`; 2D frequencies `(1, 3)`; 3D `(1, 3, 4)`.
pub fn preset_diffusion_single_mode(dim: usize) -> Result<DiffusionField> {
    match dim {
        1 => DiffusionField::single_mode(&[2]),
        2 => DiffusionField::single_mode(&[1, 3]),
        3 => DiffusionField::single_mode(&[1, 3, 4]),
        _ => Err(Error::InvalidParameter(format!("dimension {dim} not in 1..=3"))),
    }
}

pub fn preset_diffusion_multimode(
    dim: usize,
    mode_caps: &[u32],
    amplitude: f64,
    rule: ModeSelection,
) -> Result<DiffusionField> {
    check_dim(dim)?;
    if mode_caps.len() != dim {
        return Err(Error::InvalidParameter(format!(
            "{} mode caps given for dimension {dim}",
            mode_caps.len()
        )));
    }
    DiffusionField::multimode(mode_caps, amplitude, rule)
}

/// Tensor-product Gaussian initial density, renormalized on the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianIc {
    dim: usize,
    variance: f64,
}

pub const DEFAULT_IC_VARIANCE: f64 = 0.01;

pub fn preset_gaussian_ic(dim: usize, variance: f64) -> Result<GaussianIc> {
    check_dim(dim)?;
    if !(variance > 0.0 && variance.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "variance must be positive, got {variance}"
        )));
    }
    Ok(GaussianIc { dim, variance })
}

impl GaussianIc {
    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// Analytic density (not renormalized to the box).
    pub fn density(&self, x: &[f64]) -> f64 {
        let norm = 1.0 / (2.0 * PI * self.variance).sqrt();
        x.iter()
            .map(|xi| norm * (-xi * xi / (2.0 * self.variance)).exp())
            .product()
    }

    /// Midpoint values scaled so that `integrate` is exactly 1 (to rounding).
    pub fn discretize(&self, grid: &TensorGrid) -> Result<ScalarField> {
        if grid.dim() != self.dim {
            return Err(Error::GridMismatch);
        }
        let mut field = ScalarField::from_fn(*grid, |x| self.density(x));
        let mass = integrate(&field);
        for v in field.values_mut() {
            *v /= mass;
        }
        Ok(field)
    }
}

/// Initial densities addressable by name.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    Gaussian(GaussianIc),
    Uniform,
    Equilibrium,
}

impl InitialCondition {
    pub fn build(&self, grid: &TensorGrid, params: &ParameterSet) -> Result<ScalarField> {
        match self {
            InitialCondition::Gaussian(g) => g.discretize(grid),
            InitialCondition::Uniform => {
                let total = 2.0_f64.powi(grid.dim() as i32);
                Ok(ScalarField::constant(*grid, 1.0 / total))
            }
            InitialCondition::Equilibrium => {
                Ok(equilibrium::equilibrium_state(params, grid)?.density)
            }
        }
    }
}

/// Names accepted by the resolvers, for error messages and help text.
pub const POTENTIAL_NAMES: &[&str] = &["phi:sine", "phi1d:k<k>", "phi:quadratic", "phi:zero"];
pub const DIFFUSION_NAMES: &[&str] = &["D:homogeneous", "D:single", "D:multi", "D:multi-coarse"];
pub const MOBILITY_NAMES: &[&str] = &["pi:standard", "pi:unit"];
pub const IC_NAMES: &[&str] = &["ic:gaussian", "ic:uniform", "ic:equilibrium"];

fn unknown(kind: &str, name: &str, known: &[&str]) -> Error {
    Error::InvalidParameter(format!(
        "unknown {kind} preset '{name}' (known: {})",
        known.join(", ")
    ))
}

pub fn resolve_potential(name: &str, dim: usize) -> Result<PotentialField> {
    check_dim(dim)?;
    match name {
        "phi:sine" => preset_potential(dim),
        "phi:quadratic" => Ok(PotentialField::quadratic(1.0, 1.0)),
        "phi:zero" => Ok(PotentialField::constant(0.0)),
        _ => match name.strip_prefix("phi1d:k").map(str::parse::<u32>) {
            Some(Ok(k)) if dim == 1 => preset_potential_1d(k),
            Some(Ok(_)) => Err(Error::InvalidParameter(format!(
                "potential preset '{name}' is one-dimensional"
            ))),
            _ => Err(unknown("potential", name, POTENTIAL_NAMES)),
        },
    }
}

/// `n_cells` sets the grid-dependent mode caps of `D:multi` in 1D and 2D.
pub fn resolve_diffusion(name: &str, dim: usize, n_cells: usize) -> Result<DiffusionField> {
    check_dim(dim)?;
    let half = (n_cells / 2).max(1) as u32;
    let quarter = (n_cells / 4).max(1) as u32;
    match name {
        "D:homogeneous" => DiffusionField::constant(1.0),
        "D:single" => preset_diffusion_single_mode(dim),
        "D:multi" => match dim {
            1 => preset_diffusion_multimode(1, &[half], 0.01, ModeSelection::All),
            2 => preset_diffusion_multimode(2, &[half, quarter], 0.01, ModeSelection::StrictlyIncreasing),
            _ => preset_diffusion_multimode(3, &[10, 8, 4], 0.01, ModeSelection::NonIncreasing),
        },
        "D:multi-coarse" if dim == 3 => {
            preset_diffusion_multimode(3, &[5, 3, 4], 0.04, ModeSelection::NonIncreasing)
        }
        "D:multi-coarse" => Err(Error::InvalidParameter(
            "diffusion preset 'D:multi-coarse' is three-dimensional".into(),
        )),
        _ => Err(unknown("diffusion", name, DIFFUSION_NAMES)),
    }
}

pub fn resolve_mobility(name: &str, dim: usize) -> Result<MobilityField> {
    check_dim(dim)?;
    match name {
        "pi:standard" => preset_mobility(dim),
        "pi:unit" => Ok(MobilityField::unit()),
        _ => Err(unknown("mobility", name, MOBILITY_NAMES)),
    }
}

pub fn resolve_initial_condition(name: &str, dim: usize) -> Result<InitialCondition> {
    check_dim(dim)?;
    match name {
        "ic:gaussian" => Ok(InitialCondition::Gaussian(preset_gaussian_ic(
            dim,
            DEFAULT_IC_VARIANCE,
        )?)),
        "ic:uniform" => Ok(InitialCondition::Uniform),
        "ic:equilibrium" => Ok(InitialCondition::Equilibrium),
        _ => Err(unknown("initial-condition", name, IC_NAMES)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Boundary;
    use approx::assert_relative_eq;

    #[test]
    fn potential_1d_examples() {
        let phi = preset_potential_1d(2).unwrap();
        assert_eq!(phi.value(&[0.0]), 1.0);
        assert_relative_eq!(phi.value(&[0.5]), 1.25, max_relative = 1e-15);
        assert_relative_eq!(phi.hessian(&[0.0])[0][0], PI * PI / 2.0, max_relative = 1e-14);
        assert_relative_eq!(phi.hessian(&[0.5])[0][0], -PI * PI / 2.0, max_relative = 1e-14);
        assert!(preset_potential_1d(0).is_err());
    }

    #[test]
    fn mobility_examples() {
        let m = preset_mobility(1).unwrap();
        assert_relative_eq!(m.value(&[0.0], 0.0), 0.5, max_relative = 1e-15);
        assert_relative_eq!(m.value(&[0.5], 0.0), 1.0, max_relative = 1e-15);
        assert_relative_eq!(m.lower_bound(), 1.0 / 3.0, max_relative = 1e-15);
        for i in 0..50 {
            for j in 0..50 {
                let v = m.value(&[-1.0 + 0.04 * i as f64], 0.013 * j as f64);
                assert!((1.0 / 3.0 - 1e-12..=2.0 + 1e-12).contains(&v));
            }
        }
        assert!(preset_mobility(4).is_err());
    }

    #[test]
    fn single_mode_diffusion_examples() {
        let d = preset_diffusion_single_mode(1).unwrap();
        assert_eq!(d.value(&[0.0]), 1.0);
        assert_relative_eq!(d.value(&[0.25]), 0.5, max_relative = 1e-15);
        assert_eq!(d.lower_bound(), 0.5);
        // closed form 1/4 (3 + cos 4 pi x)
        for i in 0..100 {
            let x = -1.0 + 0.02 * i as f64;
            assert_relative_eq!(d.value(&[x]), 0.25 * (3.0 + (4.0 * PI * x).cos()), epsilon = 1e-14);
        }
        assert!(preset_diffusion_single_mode(0).is_err());
    }

    #[test]
    fn multimode_diffusion_examples() {
        let d = preset_diffusion_multimode(1, &[100], 0.01, ModeSelection::All).unwrap();
        assert_relative_eq!(d.value(&[0.0]), 3.0, max_relative = 1e-14);
        for i in 0..=2000 {
            assert!(d.value(&[-1.0 + 0.001 * i as f64]) >= 1.0 - 1e-12);
        }
        let d2 = preset_diffusion_multimode(2, &[20, 10], 0.01, ModeSelection::StrictlyIncreasing).unwrap();
        assert_eq!(d2.active_modes(), 45);
        let d3 = preset_diffusion_multimode(3, &[10, 8, 4], 0.01, ModeSelection::NonIncreasing).unwrap();
        let brute = (1..=10u32)
            .flat_map(|a| (1..=8u32).flat_map(move |b| (1..=4u32).map(move |c| (a, b, c))))
            .filter(|(a, b, c)| a >= b && b >= c)
            .count();
        assert_eq!(d3.active_modes(), brute);
        assert!(preset_diffusion_multimode(1, &[10], -0.1, ModeSelection::All).is_err());
        assert!(preset_diffusion_multimode(2, &[10], 0.1, ModeSelection::All).is_err());
    }

    #[test]
    fn gaussian_ic_examples() {
        let ic = preset_gaussian_ic(1, 0.01).unwrap();
        let grid = TensorGrid::new(1, 200, Boundary::Periodic).unwrap();
        let f = ic.discretize(&grid).unwrap();
        assert_relative_eq!(integrate(&f), 1.0, max_relative = 1e-15);
        let peak = 1.0 / (2.0 * PI * 0.01).sqrt();
        // cells 99 and 100 straddle x = 0
        assert!((f.values()[100] - peak).abs() / peak < 0.01);
        let tail = ic.density(&[1.0]);
        assert!(tail > 0.0);
        assert_relative_eq!(tail, (-50.0_f64).exp() * peak, max_relative = 1e-12);
        assert!((tail - 7.7e-22).abs() < 0.05e-22);
        assert!(preset_gaussian_ic(1, 0.0).is_err());
        assert!(preset_gaussian_ic(1, -1.0).is_err());
    }

    #[test]
    fn registry_resolves_names() {
        assert!(resolve_potential("phi1d:k2", 1).is_ok());
        assert!(resolve_potential("phi1d:k2", 2).is_err());
        assert!(resolve_potential("phi:bogus", 1).is_err());
        assert_eq!(resolve_diffusion("D:multi", 2, 40).unwrap().active_modes(), 45);
        assert!(resolve_diffusion("D:multi-coarse", 3, 10).is_ok());
        assert!(resolve_diffusion("D:multi-coarse", 2, 10).is_err());
        assert!(resolve_mobility("pi:unit", 3).unwrap().is_unit());
        assert!(resolve_initial_condition("ic:gaussian", 2).is_ok());
        let err = resolve_diffusion("D:nope", 1, 10).unwrap_err().to_string();
        assert!(err.contains("D:nope"));
    }
}
