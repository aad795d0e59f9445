//! Classical limit of the two-oscillator Kerr model.
//!
//! `H = H₁ + H₂ + (λ/ω₀²)H₂² + (g/√(ωω₀))(√(mM)ωω₀·xy + p_x p_y/√(mM))`,
//! with `H₁ = p_x²/2m + mω²x²/2` and `H₂ = p_y²/2M + Mω₀²y²/2`.
//!
//! In the scaled canonical coordinates `X = √(mω)x`, `P = p_x/√(mω)`,
//! `Y = √(Mω₀)y`, `Q = p_y/√(Mω₀)` the Hamiltonian splits into two exactly
//! solvable flows:
//!
//! * `A = ωI₁ + ω₀I₂ + λI₂²` (`I = (X²+P²)/2`): two rotations, the second at
//!   the amplitude-dependent rate `ω₀ + 2λI₂`;
//! * `B = g(XY + PQ)`: a beam-splitter rotation of `(X+iP, Y+iQ)`.
//!
//! Both flows conserve `I₁ + I₂ = N_tot` exactly, so the total action is
//! preserved to round-off by construction; the energy error of the symmetric
//! compositions used here is bounded and of the order of the method.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::evolve::TimeSeries;

/// Default relative energy-drift tolerance.
pub const DEFAULT_DRIFT_TOL: f64 = 1e-8;
/// Default number of steps between Gram–Schmidt renormalizations.
pub const DEFAULT_REORTHONORMALIZE: usize = 10;

/// Parameters of the classical Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalParams {
    /// Field-oscillator mass `m`.
    pub m: f64,
    /// Medium-oscillator mass `M`.
    pub big_m: f64,
    /// Field frequency `ω`.
    pub omega: f64,
    /// Medium frequency `ω₀`.
    pub omega0: f64,
    /// Kerr constant `λ`, the finite limit of `γ/ħ`.
    pub lambda_cl: f64,
    /// Coupling `g`.
    pub g: f64,
}

impl Default for ClassicalParams {
    fn default() -> Self {
        Self {
            m: 1.0,
            big_m: 1.0,
            omega: 1.0,
            omega0: 1.0,
            lambda_cl: 0.0,
            g: 0.0,
        }
    }
}

impl ClassicalParams {
    /// Unit masses and frequencies with the given nonlinearity and coupling.
    pub fn resonant(lambda_cl: f64, g: f64) -> Self {
        Self {
            lambda_cl,
            g,
            ..Self::default()
        }
    }

    /// Checks positivity and finiteness.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("m", self.m),
            ("M", self.big_m),
            ("omega", self.omega),
            ("omega0", self.omega0),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, "must be finite and positive"));
            }
        }
        for (name, v) in [("lambda_cl", self.lambda_cl), ("g", self.g)] {
            if !v.is_finite() {
                return Err(Error::invalid(name, "must be finite"));
            }
        }
        Ok(())
    }
}

/// Canonical coordinates of both oscillators.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhasePoint {
    /// Field coordinate.
    pub x: f64,
    /// Field momentum.
    pub px: f64,
    /// Medium coordinate.
    pub y: f64,
    /// Medium momentum.
    pub py: f64,
}

impl PhasePoint {
    /// A point from its four coordinates.
    pub const fn new(x: f64, px: f64, y: f64, py: f64) -> Self {
        Self { x, px, y, py }
    }

    /// Field-oscillator energy `H₁`.
    pub fn h1(&self, p: &ClassicalParams) -> f64 {
        self.px * self.px / (2.0 * p.m) + 0.5 * p.m * p.omega * p.omega * self.x * self.x
    }

    /// Medium-oscillator energy `H₂`.
    pub fn h2(&self, p: &ClassicalParams) -> f64 {
        self.py * self.py / (2.0 * p.big_m) + 0.5 * p.big_m * p.omega0 * p.omega0 * self.y * self.y
    }

    /// Euclidean norm of the coordinate vector.
    pub fn radius(&self) -> f64 {
        libm::sqrt(self.x * self.x + self.px * self.px + self.y * self.y + self.py * self.py)
    }

    fn is_finite(&self) -> bool {
        self.x.is_finite() && self.px.is_finite() && self.y.is_finite() && self.py.is_finite()
    }
}

/// The classical Hamiltonian.
pub fn h_classical(point: &PhasePoint, p: &ClassicalParams) -> f64 {
    let h1 = point.h1(p);
    let h2 = point.h2(p);
    let mm = libm::sqrt(p.m * p.big_m);
    let coupling =
        p.g / libm::sqrt(p.omega * p.omega0) * (mm * p.omega * p.omega0 * point.x * point.y + point.px * point.py / mm);
    h1 + h2 + p.lambda_cl / (p.omega0 * p.omega0) * h2 * h2 + coupling
}

/// Total action `H₁/ω + H₂/ω₀`, which Poisson-commutes with the Hamiltonian.
pub fn n_tot_classical(point: &PhasePoint, p: &ClassicalParams) -> f64 {
    point.h1(p) / p.omega + point.h2(p) / p.omega0
}

/// Radius of the ball containing the hyperellipsoid `N_tot = n_tot`, which
/// confines every trajectory.
pub fn bounding_radius(n_tot: f64, p: &ClassicalParams) -> f64 {
    let s = [
        1.0 / (p.m * p.omega),
        p.m * p.omega,
        1.0 / (p.big_m * p.omega0),
        p.big_m * p.omega0,
    ]
    .iter()
    .cloned()
    .fold(0.0, f64::max);
    libm::sqrt(2.0 * n_tot.max(0.0) * s)
}

/// Symmetric composition used for one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Composition {
    /// Second-order Strang splitting `A(h/2) B(h) A(h/2)`.
    Strang,
    /// Fourth-order triple jump of Strang steps.
    Yoshida4,
    /// Sixth-order triple jump of fourth-order steps.
    #[default]
    Yoshida6,
}

impl Composition {
    /// Order of accuracy.
    pub fn order(self) -> usize {
        match self {
            Composition::Strang => 2,
            Composition::Yoshida4 => 4,
            Composition::Yoshida6 => 6,
        }
    }

    /// Short name for manifests.
    pub fn name(self) -> &'static str {
        match self {
            Composition::Strang => "strang",
            Composition::Yoshida4 => "yoshida4",
            Composition::Yoshida6 => "yoshida6",
        }
    }

    /// Fractions of `dt` of the successive Strang substeps.
    fn weights(self) -> Vec<f64> {
        let jump = |inner: &[f64], order: f64| -> Vec<f64> {
            let c = libm::pow(2.0, 1.0 / (order + 1.0));
            let w1 = 1.0 / (2.0 - c);
            let w0 = -c / (2.0 - c);
            let mut out = Vec::with_capacity(3 * inner.len());
            for w in [w1, w0, w1] {
                out.extend(inner.iter().map(|v| v * w));
            }
            out
        };
        match self {
            Composition::Strang => alloc::vec![1.0],
            Composition::Yoshida4 => jump(&[1.0], 2.0),
            Composition::Yoshida6 => jump(&jump(&[1.0], 2.0), 4.0),
        }
    }
}

/// Integration settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrateOptions {
    /// Step composition.
    pub composition: Composition,
    /// Record every `stride`-th step.
    pub stride: usize,
    /// Abort when `|H(t) − H(0)| > drift_tol·max(|H(0)|, N_tot(0)·min(ω, ω₀))`.
    pub drift_tol: f64,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self {
            composition: Composition::default(),
            stride: 1,
            drift_tol: DEFAULT_DRIFT_TOL,
        }
    }
}

/// Scaled coordinates `(X, P, Y, Q)`.
type Scaled = [f64; 4];

struct Stepper {
    omega: f64,
    omega0: f64,
    lambda: f64,
    g: f64,
    sx: f64,
    sy: f64,
    weights: Vec<f64>,
}

impl Stepper {
    fn new(p: &ClassicalParams, composition: Composition) -> Self {
        Self {
            omega: p.omega,
            omega0: p.omega0,
            lambda: p.lambda_cl,
            g: p.g,
            sx: libm::sqrt(p.m * p.omega),
            sy: libm::sqrt(p.big_m * p.omega0),
            weights: composition.weights(),
        }
    }

    fn to_scaled(&self, q: &PhasePoint) -> Scaled {
        [q.x * self.sx, q.px / self.sx, q.y * self.sy, q.py / self.sy]
    }

    fn from_scaled(&self, s: &Scaled) -> PhasePoint {
        PhasePoint::new(s[0] / self.sx, s[1] * self.sx, s[2] / self.sy, s[3] * self.sy)
    }

    /// Flow of `A` for time `h`, carrying the tangent vectors along.
    fn flow_a(&self, s: &mut Scaled, h: f64, tangents: &mut [Scaled]) {
        let (c1, s1) = (libm::cos(self.omega * h), libm::sin(self.omega * h));
        let i2 = 0.5 * (s[2] * s[2] + s[3] * s[3]);
        let theta = (self.omega0 + 2.0 * self.lambda * i2) * h;
        let (c2, s2) = (libm::cos(theta), libm::sin(theta));
        let (x, p, y, q) = (s[0], s[1], s[2], s[3]);
        s[0] = c1 * x + s1 * p;
        s[1] = -s1 * x + c1 * p;
        s[2] = c2 * y + s2 * q;
        s[3] = -s2 * y + c2 * q;
        for t in tangents.iter_mut() {
            let (dx, dp, dy, dq) = (t[0], t[1], t[2], t[3]);
            let dtheta = 2.0 * self.lambda * h * (y * dy + q * dq);
            t[0] = c1 * dx + s1 * dp;
            t[1] = -s1 * dx + c1 * dp;
            t[2] = c2 * dy + s2 * dq + s[3] * dtheta;
            t[3] = -s2 * dy + c2 * dq - s[2] * dtheta;
        }
    }

    /// Flow of `B` for time `h` (linear, so tangents follow the same map).
    fn flow_b(&self, s: &mut Scaled, h: f64, tangents: &mut [Scaled]) {
        let (c, sn) = (libm::cos(self.g * h), libm::sin(self.g * h));
        let mix = |v: &mut Scaled| {
            let (x, p, y, q) = (v[0], v[1], v[2], v[3]);
            // a = X + iP, b = Y + iQ; a' = a cos − i b sin, b' = b cos − i a sin.
            v[0] = c * x + sn * q;
            v[1] = c * p - sn * y;
            v[2] = c * y + sn * p;
            v[3] = c * q - sn * x;
        };
        mix(s);
        tangents.iter_mut().for_each(mix);
    }

    fn step(&self, s: &mut Scaled, dt: f64, tangents: &mut [Scaled]) {
        for &w in &self.weights {
            let h = w * dt;
            self.flow_a(s, 0.5 * h, tangents);
            self.flow_b(s, h, tangents);
            self.flow_a(s, 0.5 * h, tangents);
        }
    }
}

/// Conservation monitor shared by the integrators.
struct DriftGate {
    h0: f64,
    n0: f64,
    scale: f64,
    tol: f64,
    max_energy: f64,
    max_ntot: f64,
    max_radius: f64,
}

impl DriftGate {
    fn new(point: &PhasePoint, p: &ClassicalParams, tol: f64) -> Self {
        let h0 = h_classical(point, p);
        let n0 = n_tot_classical(point, p);
        Self {
            h0,
            n0,
            scale: h0.abs().max(n0 * p.omega.min(p.omega0)).max(f64::MIN_POSITIVE),
            tol,
            max_energy: 0.0,
            max_ntot: 0.0,
            max_radius: point.radius(),
        }
    }

    fn check(&mut self, point: &PhasePoint, p: &ClassicalParams, step: usize) -> Result<()> {
        if !point.is_finite() {
            return Err(Error::DriftBreach {
                drift: f64::INFINITY,
                tolerance: self.tol,
                step,
            });
        }
        let de = (h_classical(point, p) - self.h0).abs() / self.scale;
        let dn = (n_tot_classical(point, p) - self.n0).abs() / self.n0.max(f64::MIN_POSITIVE);
        self.max_energy = self.max_energy.max(de);
        self.max_ntot = self.max_ntot.max(dn);
        self.max_radius = self.max_radius.max(point.radius());
        if de > self.tol {
            return Err(Error::DriftBreach {
                drift: de,
                tolerance: self.tol,
                step,
            });
        }
        Ok(())
    }
}

/// Recorded trajectory with its conservation diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Interval between recorded points (`dt · stride`).
    pub dt: f64,
    /// Recorded points, starting with the initial condition.
    pub points: Vec<PhasePoint>,
    /// Largest relative energy error seen at any step.
    pub max_energy_drift: f64,
    /// Largest relative total-action error seen at any step.
    pub max_ntot_drift: f64,
    /// Largest coordinate-vector norm seen at any step.
    pub max_radius: f64,
    /// Initial energy.
    pub energy: f64,
    /// Initial total action.
    pub n_tot: f64,
}

/// Phase-space coordinate selectable for export.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coordinate {
    /// `x`.
    X,
    /// `p_x`.
    Px,
    /// `y`.
    Y,
    /// `p_y`.
    Py,
    /// Field energy `H₁`.
    H1,
    /// Medium energy `H₂`.
    H2,
}

impl Coordinate {
    /// Short name, used as the series label.
    pub fn name(self) -> &'static str {
        match self {
            Coordinate::X => "x",
            Coordinate::Px => "p_x",
            Coordinate::Y => "y",
            Coordinate::Py => "p_y",
            Coordinate::H1 => "H1",
            Coordinate::H2 => "H2",
        }
    }
}

impl Trajectory {
    /// The chosen coordinate as a time series.
    pub fn series(&self, which: Coordinate, p: &ClassicalParams) -> Result<TimeSeries> {
        let v = self
            .points
            .iter()
            .map(|q| match which {
                Coordinate::X => q.x,
                Coordinate::Px => q.px,
                Coordinate::Y => q.y,
                Coordinate::Py => q.py,
                Coordinate::H1 => q.h1(p),
                Coordinate::H2 => q.h2(p),
            })
            .collect();
        TimeSeries::new(self.dt, v, which.name())
    }
}

fn check_run(dt: f64, steps: usize) -> Result<()> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::invalid("dt", "must be finite and positive"));
    }
    if steps < 1 {
        return Err(Error::invalid("steps", "must be at least 1"));
    }
    Ok(())
}

/// Integrates `steps` steps of size `dt` from `point0`.
///
/// Aborts with [`Error::DriftBreach`] as soon as the energy error exceeds
/// the tolerance.
pub fn integrate(
    point0: PhasePoint,
    params: &ClassicalParams,
    dt: f64,
    steps: usize,
    opts: IntegrateOptions,
) -> Result<Trajectory> {
    params.validate()?;
    check_run(dt, steps)?;
    if opts.stride == 0 {
        return Err(Error::invalid("stride", "must be positive"));
    }
    let stepper = Stepper::new(params, opts.composition);
    let mut gate = DriftGate::new(&point0, params, opts.drift_tol);
    let mut s = stepper.to_scaled(&point0);
    let mut points = Vec::with_capacity(steps / opts.stride + 1);
    points.push(point0);
    for i in 1..=steps {
        stepper.step(&mut s, dt, &mut []);
        let q = stepper.from_scaled(&s);
        gate.check(&q, params, i)?;
        if i % opts.stride == 0 {
            points.push(q);
        }
    }
    Ok(Trajectory {
        dt: dt * opts.stride as f64,
        points,
        max_energy_drift: gate.max_energy,
        max_ntot_drift: gate.max_ntot,
        max_radius: gate.max_radius,
        energy: gate.h0,
        n_tot: gate.n0,
    })
}

/// Lyapunov spectrum of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovSpectrum {
    /// Exponents, largest first (inverse time units).
    pub exponents: [f64; 4],
    /// Sum of the exponents (zero for a volume-preserving flow).
    pub sum: f64,
    /// Integration time.
    pub time: f64,
    /// Largest relative energy error.
    pub max_energy_drift: f64,
    /// Largest relative total-action error.
    pub max_ntot_drift: f64,
}

/// Benettin estimate of all four Lyapunov exponents: four tangent vectors
/// follow the linearized splitting maps and are Gram–Schmidt
/// re-orthonormalized every `reorthonormalize` steps.
pub fn classical_lyapunov(
    point0: PhasePoint,
    params: &ClassicalParams,
    dt: f64,
    steps: usize,
    opts: IntegrateOptions,
    reorthonormalize: usize,
) -> Result<LyapunovSpectrum> {
    params.validate()?;
    check_run(dt, steps)?;
    if reorthonormalize == 0 {
        return Err(Error::invalid("reorthonormalize", "must be positive"));
    }
    let stepper = Stepper::new(params, opts.composition);
    let mut gate = DriftGate::new(&point0, params, opts.drift_tol);
    let mut s = stepper.to_scaled(&point0);
    let mut tangents: [Scaled; 4] = [[0.0; 4]; 4];
    for (i, t) in tangents.iter_mut().enumerate() {
        t[i] = 1.0;
    }
    let mut logs = [0.0f64; 4];
    for i in 1..=steps {
        stepper.step(&mut s, dt, &mut tangents);
        if i % reorthonormalize == 0 || i == steps {
            gate.check(&stepper.from_scaled(&s), params, i)?;
            gram_schmidt(&mut tangents, &mut logs);
        }
    }
    let time = dt * steps as f64;
    let mut exponents = logs.map(|l| l / time);
    exponents.sort_by(|a, b| b.total_cmp(a));
    Ok(LyapunovSpectrum {
        exponents,
        sum: logs.iter().sum::<f64>() / time,
        time,
        max_energy_drift: gate.max_energy,
        max_ntot_drift: gate.max_ntot,
    })
}

/// Modified Gram–Schmidt; adds the log norms to `logs`.
fn gram_schmidt(v: &mut [Scaled; 4], logs: &mut [f64; 4]) {
    for i in 0..4 {
        for j in 0..i {
            let dot: f64 = (0..4).map(|k| v[i][k] * v[j][k]).sum();
            for k in 0..4 {
                v[i][k] -= dot * v[j][k];
            }
        }
        let norm = libm::sqrt(v[i].iter().map(|a| a * a).sum());
        logs[i] += libm::log(norm);
        for a in v[i].iter_mut() {
            *a /= norm;
        }
    }
}
