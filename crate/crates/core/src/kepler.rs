//! State types, the inverse-square force law and the Kepler constants of motion.
//!
//! Everything is in normalized units: lengths, velocities and the force
//! constant `kappa` are dimensionless, with `kappa = 1` by default.

use std::f64::consts::PI;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::diff;
use crate::error::{KeplerError, Result};

pub type Vec3 = Vector3<f64>;

/// Default floor below which `|r|` is treated as the collision singularity.
pub const ORIGIN_FLOOR: f64 = 1e-12;
/// `|A| <= CIRCULAR_TOL * kappa` marks a circular orbit.
pub const CIRCULAR_TOL: f64 = 1e-10;
/// `|L| <= RADIAL_TOL * |r||v|` marks a radial orbit.
pub const RADIAL_TOL: f64 = 1e-10;
/// Relative width of the E = 0 branch.
pub const ZERO_ENERGY_TOL: f64 = 1e-12;

/// Inverse-square force law `a = -kappa |r|^-2 r_hat`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeplerSystem {
    kappa: f64,
    origin_floor: f64,
}

impl KeplerSystem {
    pub fn new(kappa: f64) -> Result<Self> {
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(KeplerError::InvalidInput(format!(
                "kappa must be positive and finite, got {kappa}"
            )));
        }
        Ok(Self {
            kappa,
            origin_floor: ORIGIN_FLOOR,
        })
    }

    pub fn with_origin_floor(mut self, floor: f64) -> Self {
        self.origin_floor = floor;
        self
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn origin_floor(&self) -> f64 {
        self.origin_floor
    }

    /// Threshold on `|E|` below which the E = 0 branch is used.
    pub fn zero_energy_threshold(&self, l_sq: f64, r_mag: f64) -> f64 {
        let k = self.kappa;
        ZERO_ENERGY_TOL * k * k / l_sq.max(k * r_mag)
    }

    pub(crate) fn check_radius(&self, r_mag: f64) -> Result<()> {
        if !r_mag.is_finite() || r_mag < self.origin_floor {
            return Err(KeplerError::SingularOrigin {
                r_mag,
                floor: self.origin_floor,
            });
        }
        Ok(())
    }
}

impl Default for KeplerSystem {
    fn default() -> Self {
        Self {
            kappa: 1.0,
            origin_floor: ORIGIN_FLOOR,
        }
    }
}

/// A point `(r, v)` of phase space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseState {
    pub r: Vec3,
    pub v: Vec3,
}

impl PhaseState {
    pub fn new(r: Vec3, v: Vec3) -> Self {
        Self { r, v }
    }

    pub fn from_arrays(r: [f64; 3], v: [f64; 3]) -> Self {
        Self::new(Vec3::from(r), Vec3::from(v))
    }

    pub fn radius(&self) -> f64 {
        self.r.norm()
    }

    /// `r . v`, proportional to the radial velocity.
    pub fn radial(&self) -> f64 {
        self.r.dot(&self.v)
    }

    pub fn angular_momentum(&self) -> Vec3 {
        self.r.cross(&self.v)
    }

    pub fn is_finite(&self) -> bool {
        self.r.iter().chain(self.v.iter()).all(|x| x.is_finite())
    }

    pub fn to_array(&self) -> [f64; 6] {
        [
            self.r.x, self.r.y, self.r.z, self.v.x, self.v.y, self.v.z,
        ]
    }

    pub fn from_array(y: &[f64; 6]) -> Self {
        Self::from_arrays([y[0], y[1], y[2]], [y[3], y[4], y[5]])
    }
}

/// A point `(t, r, v)` of the extended coordinate space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtendedState {
    pub t: f64,
    pub state: PhaseState,
}

impl ExtendedState {
    pub fn new(t: f64, state: PhaseState) -> Self {
        Self { t, state }
    }

    pub fn at_origin_time(state: PhaseState) -> Self {
        Self { t: 0.0, state }
    }

    /// Largest absolute difference over the seven coordinates.
    pub fn max_abs_diff(&self, other: &ExtendedState) -> f64 {
        let a = self.state.to_array();
        let b = other.state.to_array();
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y).abs())
            .fold((self.t - other.t).abs(), f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrbitClass {
    Circular,
    Elliptic,
    Parabolic,
    Hyperbolic,
    Radial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnergyBranch {
    Negative,
    Zero,
    Positive,
}

impl EnergyBranch {
    pub fn classify(energy: f64, threshold: f64) -> Self {
        if energy.abs() <= threshold {
            EnergyBranch::Zero
        } else if energy < 0.0 {
            EnergyBranch::Negative
        } else {
            EnergyBranch::Positive
        }
    }

    /// `sgn(E)` with the zero branch mapped to 0.
    pub fn sign(self) -> f64 {
        match self {
            EnergyBranch::Negative => -1.0,
            EnergyBranch::Zero => 0.0,
            EnergyBranch::Positive => 1.0,
        }
    }
}

/// Energy, angular momentum, LRL vector and the quantities derived from them.
///
/// `r_mag` records the radius the set was evaluated at. All symmetry
/// transformations here keep `|r|` fixed, so degeneracy thresholds stay
/// meaningful for transformed sets.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConservedSet {
    #[serde(rename = "E")]
    pub energy: f64,
    #[serde(rename = "L", serialize_with = "ser_vec")]
    pub angular_momentum: Vec3,
    #[serde(rename = "A", serialize_with = "ser_vec")]
    pub lrl: Vec3,
    #[serde(rename = "A_mag")]
    pub lrl_mag: f64,
    #[serde(rename = "Theta", serialize_with = "ser_opt_vec")]
    pub direction: Option<Vec3>,
    #[serde(rename = "M", serialize_with = "ser_opt_vec")]
    pub rescaled_lrl: Option<Vec3>,
    pub eccentricity: f64,
    pub orbit_class: OrbitClass,
    pub energy_branch: EnergyBranch,
    pub period: Option<f64>,
    pub semi_major: Option<f64>,
    #[serde(skip)]
    pub kappa: f64,
    #[serde(skip)]
    pub r_mag: f64,
}

fn ser_vec<S: serde::Serializer>(v: &Vec3, s: S) -> std::result::Result<S::Ok, S::Error> {
    [v.x, v.y, v.z].serialize(s)
}

fn ser_opt_vec<S: serde::Serializer>(
    v: &Option<Vec3>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    v.map(|v| [v.x, v.y, v.z]).serialize(s)
}

impl ConservedSet {
    /// Assembles the set from `E`, `L`, `A` with an already decided energy branch.
    pub fn assemble(
        energy: f64,
        angular_momentum: Vec3,
        lrl: Vec3,
        branch: EnergyBranch,
        r_mag: f64,
        sys: &KeplerSystem,
    ) -> Self {
        let kappa = sys.kappa();
        let lrl_mag = lrl.norm();
        let direction = (lrl_mag > CIRCULAR_TOL * kappa).then(|| lrl / lrl_mag);
        let rescaled_lrl = match branch {
            EnergyBranch::Zero => None,
            _ => Some(lrl / (2.0 * energy.abs()).sqrt()),
        };
        let (period, semi_major) = match branch {
            EnergyBranch::Negative => {
                let a = kappa / (-2.0 * energy);
                (Some(2.0 * PI * (a * a * a / kappa).sqrt()), Some(a))
            }
            _ => (None, None),
        };
        let mut set = Self {
            energy,
            angular_momentum,
            lrl,
            lrl_mag,
            direction,
            rescaled_lrl,
            eccentricity: lrl_mag / kappa,
            orbit_class: OrbitClass::Elliptic,
            energy_branch: branch,
            period,
            semi_major,
            kappa,
            r_mag,
        };
        set.orbit_class = classify_orbit(&set);
        set
    }

    pub fn direction_or_err(&self) -> Result<Vec3> {
        self.direction.ok_or(KeplerError::DegenerateDirection {
            a_mag: self.lrl_mag,
        })
    }

    pub fn rescaled_or_err(&self) -> Result<Vec3> {
        self.rescaled_lrl
            .ok_or(KeplerError::ZeroEnergy { energy: self.energy })
    }

    /// Speed implied by the energy at the recorded radius.
    pub fn speed(&self) -> f64 {
        (2.0 * (self.energy + self.kappa / self.r_mag)).max(0.0).sqrt()
    }
}

pub fn acceleration(state: &PhaseState, sys: &KeplerSystem) -> Result<Vec3> {
    let r_mag = state.radius();
    sys.check_radius(r_mag)?;
    Ok(-sys.kappa() / (r_mag * r_mag * r_mag) * state.r)
}

/// `1/2 |v|^2 + kappa/|r|`.
pub fn lagrangian(state: &PhaseState, sys: &KeplerSystem) -> Result<f64> {
    let r_mag = state.radius();
    sys.check_radius(r_mag)?;
    Ok(0.5 * state.v.norm_squared() + sys.kappa() / r_mag)
}

pub fn energy(state: &PhaseState, sys: &KeplerSystem) -> Result<f64> {
    let r_mag = state.radius();
    sys.check_radius(r_mag)?;
    Ok(0.5 * state.v.norm_squared() - sys.kappa() / r_mag)
}

/// `A = v x L - kappa r_hat`, written in the cancellation-free form
/// `(|v|^2 - kappa/|r|) r - (r.v) v`.
pub fn lrl_vector(state: &PhaseState, sys: &KeplerSystem) -> Result<Vec3> {
    let r_mag = state.radius();
    sys.check_radius(r_mag)?;
    let w = state.v.norm_squared();
    Ok((w - sys.kappa() / r_mag) * state.r - state.radial() * state.v)
}

pub fn conserved_set(state: &PhaseState, sys: &KeplerSystem) -> Result<ConservedSet> {
    let r_mag = state.radius();
    sys.check_radius(r_mag)?;
    let e = energy(state, sys)?;
    let l = state.angular_momentum();
    let a = lrl_vector(state, sys)?;
    let branch = EnergyBranch::classify(e, sys.zero_energy_threshold(l.norm_squared(), r_mag));
    Ok(ConservedSet::assemble(e, l, a, branch, r_mag, sys))
}

pub fn classify_orbit(c: &ConservedSet) -> OrbitClass {
    let l_mag = c.angular_momentum.norm();
    if l_mag <= RADIAL_TOL * (c.r_mag * c.speed() + 1e-300) {
        return OrbitClass::Radial;
    }
    if c.lrl_mag <= CIRCULAR_TOL * c.kappa && c.energy < 0.0 {
        return OrbitClass::Circular;
    }
    match c.energy_branch {
        EnergyBranch::Negative => OrbitClass::Elliptic,
        EnergyBranch::Zero => OrbitClass::Parabolic,
        EnergyBranch::Positive => OrbitClass::Hyperbolic,
    }
}

/// On-shell time derivative `v . dF/dr + a . dF/dv`, with the partials taken
/// by central finite differences.
pub fn material_derivative<F>(field: F, state: &PhaseState, sys: &KeplerSystem) -> Result<f64>
where
    F: Fn(&PhaseState) -> f64,
{
    let a = acceleration(state, sys)?;
    let (grad_r, grad_v) = diff::phase_gradient(&field, state);
    Ok(state.v.dot(&grad_r) + a.dot(&grad_v))
}
