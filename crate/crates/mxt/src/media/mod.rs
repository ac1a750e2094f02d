//! Material fields, the conformal wave-speed metric, the tensor A(u) and the
//! convex foliation descriptor.

mod field;
mod grid;
mod jet;
mod spline;
mod sym;

pub use field::{Field, ScalarField};
pub use grid::{GridField, SplineField};
pub use jet::{Jet, M3, V3};
pub use spline::{Axis, SplineBasis, Stencil};
pub use sym::{tensor_a, tensor_a_derivative, tensor_a_quad, SymTensor3};

use crate::error::{MxtError, Result};

/// Source of the wave speed c and its first two derivatives.
pub trait SpeedModel: Send + Sync {
    fn speed(&self, x: &V3) -> Jet;
}

/// Axis-aligned box on which media are defined (domain plus collar).
#[derive(Clone, Debug, PartialEq)]
pub struct Aabb {
    pub lo: V3,
    pub hi: V3,
}

impl Aabb {
    pub fn cube(half: f64) -> Self {
        Aabb { lo: V3::repeat(-half), hi: V3::repeat(half) }
    }

    pub fn contains(&self, x: &V3) -> bool {
        (0..3).all(|a| x[a] >= self.lo[a] && x[a] <= self.hi[a])
    }
}

/// The triple (eps, mu, sigma) on a padded box.
#[derive(Clone, Debug, PartialEq)]
pub struct MediumSpec {
    pub epsilon: Field,
    pub mu: Field,
    pub sigma: Field,
    pub extent: Aabb,
}

/// Pointwise medium data with the wave-speed jet.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MediumPoint {
    pub eps: f64,
    pub mu: f64,
    pub sigma: f64,
    pub c: f64,
    pub grad_c: V3,
    pub hess_c: M3,
}

impl MediumSpec {
    pub const DEFAULT_PAD: f64 = 2.0;

    pub fn new(epsilon: Field, mu: Field, sigma: Field) -> Self {
        MediumSpec { epsilon, mu, sigma, extent: Aabb::cube(Self::DEFAULT_PAD) }
    }

    pub fn constant(eps: f64, mu: f64, sigma: f64) -> Self {
        Self::new(Field::Constant(eps), Field::Constant(mu), Field::Constant(sigma))
    }

    pub fn vacuum() -> Self {
        Self::constant(1.0, 1.0, 0.0)
    }

    /// Builds (eps, mu) from a wave speed c and permittivity eps via mu = 1/(c^2 eps).
    pub fn from_speed(c: Field, epsilon: Field, sigma: Field) -> Self {
        let mu = Field::Product(vec![c.powf(-2.0), epsilon.clone().powf(-1.0)]);
        Self::new(epsilon, mu, sigma)
    }

    pub fn with_extent(mut self, extent: Aabb) -> Self {
        self.extent = extent;
        self
    }

    pub fn sigma_over_eps(&self, x: &V3) -> f64 {
        self.sigma.value(x) / self.epsilon.value(x)
    }
}

/// c = (eps mu)^(-1/2) with its derivatives by the chain rule.
pub fn speed_from_eps_mu(eps: &Jet, mu: &Jet) -> Jet {
    let n = eps.mul(mu);
    n.powf(-0.5)
}

impl SpeedModel for MediumSpec {
    fn speed(&self, x: &V3) -> Jet {
        speed_from_eps_mu(&self.epsilon.jet(x), &self.mu.jet(x))
    }
}

/// Wave speed given directly as a field.
#[derive(Clone, Debug)]
pub struct SpeedField(pub Field);

impl SpeedModel for SpeedField {
    fn speed(&self, x: &V3) -> Jet {
        self.0.jet(x)
    }
}

/// Wave speed given through the slowness n = 1/c.
#[derive(Clone, Debug)]
pub struct Slowness(pub Field);

impl SpeedModel for Slowness {
    fn speed(&self, x: &V3) -> Jet {
        self.0.jet(x).recip()
    }
}

pub fn eval_medium(m: &MediumSpec, x: &V3) -> Result<MediumPoint> {
    if !m.extent.contains(x) {
        return Err(MxtError::Domain([x.x, x.y, x.z]));
    }
    let e = m.epsilon.jet(x);
    let u = m.mu.jet(x);
    let c = speed_from_eps_mu(&e, &u);
    Ok(MediumPoint { eps: e.v, mu: u.v, sigma: m.sigma.value(x), c: c.v, grad_c: c.g, hess_c: c.h })
}

pub fn tensor_a_of_u(m: &MediumSpec, u: &dyn ScalarField, x: &V3) -> Result<SymTensor3> {
    if !m.extent.contains(x) {
        return Err(MxtError::Domain([x.x, x.y, x.z]));
    }
    Ok(tensor_a(&m.speed(x), &u.jet(x)))
}

/// Region Omega with a signed distance (negative inside).
#[derive(Clone, Debug, PartialEq)]
pub enum Domain {
    Ball { center: V3, radius: f64 },
    HalfSpace { point: V3, normal: V3 },
}

impl Domain {
    pub fn unit_ball() -> Self {
        Domain::Ball { center: V3::zeros(), radius: 1.0 }
    }

    pub fn signed_distance(&self, x: &V3) -> f64 {
        match self {
            Domain::Ball { center, radius } => (x - center).norm() - radius,
            Domain::HalfSpace { point, normal } => (x - point).dot(normal),
        }
    }

    /// Outward unit normal of the level set of the signed distance through x.
    pub fn outward_normal(&self, x: &V3) -> V3 {
        match self {
            Domain::Ball { center, .. } => (x - center).normalize(),
            Domain::HalfSpace { normal, .. } => *normal,
        }
    }

    /// Second fundamental form of the boundary at x (outward normal), as a
    /// tangent-projected matrix.
    pub fn shape(&self, x: &V3) -> M3 {
        match self {
            Domain::Ball { radius, .. } => {
                let n = self.outward_normal(x);
                (M3::identity() - n * n.transpose()) / *radius
            }
            Domain::HalfSpace { .. } => M3::zeros(),
        }
    }

    pub fn project(&self, x: &V3) -> V3 {
        x - self.outward_normal(x) * self.signed_distance(x)
    }

    pub fn center(&self) -> V3 {
        match self {
            Domain::Ball { center, .. } => *center,
            Domain::HalfSpace { point, .. } => *point,
        }
    }

    pub fn radius(&self) -> f64 {
        match self {
            Domain::Ball { radius, .. } => *radius,
            Domain::HalfSpace { .. } => 1.0,
        }
    }
}

/// Unit tangent pair completing `n` to a right-handed orthonormal frame.
pub fn tangent_frame(n: &V3) -> (V3, V3) {
    let a = if n.x.abs() < 0.9 { V3::x() } else { V3::y() };
    let t1 = (a - n * n.dot(&a)).normalize();
    let t2 = n.cross(&t1);
    (t1, t2)
}

/// Level function kappa with ordered levels over a domain.
#[derive(Clone, Debug)]
pub struct FoliationDesc {
    pub kappa: Field,
    pub levels: Vec<f64>,
    pub domain: Domain,
}

impl FoliationDesc {
    /// kappa = 1 - |x - center| / R on a ball; level q is the sphere of radius (1 - q) R.
    pub fn radial(domain: Domain, nlevels: usize) -> Self {
        let (center, r) = (domain.center(), domain.radius());
        let kappa = Field::Constant(1.0).plus(Field::Norm { center }.scaled(-1.0 / r));
        let levels = (0..nlevels).map(|k| k as f64 / (nlevels - 1) as f64).collect();
        FoliationDesc { kappa, levels, domain }
    }

    pub fn validate(&self) -> Result<()> {
        let l = &self.levels;
        if l.len() < 2 || l[0] != 0.0 || *l.last().unwrap() != 1.0 || l.windows(2).any(|w| w[1] <= w[0]) {
            return Err(MxtError::Precondition("levels must increase strictly from 0 to 1".into()));
        }
        Ok(())
    }

    pub fn kappa_at(&self, x: &V3) -> f64 {
        self.kappa.value(x)
    }
}

/// Result of sampling the second fundamental form of one level set.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexityReport {
    pub level: f64,
    pub samples: usize,
    /// Smallest shape-operator eigenvalue in the metric c^-2 g_E; `None` for
    /// an empty level set.
    pub min_eigenvalue: Option<f64>,
    pub argmin: Option<V3>,
}

/// Samples `density^2` rays from the domain center, locates kappa = q on each,
/// and evaluates the shape operator of the level set in g = c^-2 g_E with the
/// normal pointing toward decreasing kappa.
pub fn check_foliation_convexity(
    speed: &dyn SpeedModel,
    f: &FoliationDesc,
    q: f64,
    density: usize,
) -> Result<ConvexityReport> {
    if !(0.0..=1.0).contains(&q) {
        return Err(MxtError::Precondition(format!("level {q} outside [0, 1]")));
    }
    let (center, radius) = (f.domain.center(), f.domain.radius());
    let mut report = ConvexityReport { level: q, samples: 0, min_eigenvalue: None, argmin: None };
    let g = |t: f64, d: &V3| f.kappa.value(&(center + d * t)) - q;
    for a in 0..density {
        let z = -1.0 + (2.0 * a as f64 + 1.0) / density as f64;
        let rho = (1.0 - z * z).sqrt();
        for b in 0..density {
            let phi = std::f64::consts::TAU * (b as f64 + 0.5) / density as f64;
            let d = V3::new(rho * phi.cos(), rho * phi.sin(), z);
            let nscan = 64;
            let reach = radius * (1.0 + 1e-6);
            let mut root = None;
            for k in 0..nscan {
                let (t0, t1) = (reach * k as f64 / nscan as f64, reach * (k + 1) as f64 / nscan as f64);
                let (g0, g1) = (g(t0, &d), g(t1, &d));
                if g0 == 0.0 {
                    root = Some(t0);
                    break;
                }
                if g0 * g1 < 0.0 || g1 == 0.0 {
                    let (mut lo, mut hi) = (t0, t1);
                    for _ in 0..80 {
                        let mid = 0.5 * (lo + hi);
                        if g(lo, &d) * g(mid, &d) <= 0.0 {
                            hi = mid;
                        } else {
                            lo = mid;
                        }
                    }
                    root = Some(0.5 * (lo + hi));
                    break;
                }
            }
            let Some(t) = root else { continue };
            let x = center + d * t;
            let k = f.kappa.jet(&x);
            let gn = k.g.norm();
            if gn < 1e-12 {
                return Err(MxtError::DegenerateLevel([x.x, x.y, x.z]));
            }
            let n = -k.g / gn;
            let (t1, t2) = tangent_frame(&n);
            let s11 = -t1.dot(&(k.h * t1)) / gn;
            let s22 = -t2.dot(&(k.h * t2)) / gn;
            let s12 = -t1.dot(&(k.h * t2)) / gn;
            let kmin = 0.5 * (s11 + s22) - (0.25 * (s11 - s22).powi(2) + s12 * s12).sqrt();
            let c = speed.speed(&x);
            let lam = c.v * kmin - c.g.dot(&n);
            report.samples += 1;
            if report.min_eigenvalue.is_none_or(|m| lam < m) {
                report.min_eigenvalue = Some(lam);
                report.argmin = Some(x);
            }
        }
    }
    Ok(report)
}
