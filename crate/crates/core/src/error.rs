use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LatticeError {
    #[error("lattice generators are collinear or not finite")]
    DegenerateLattice,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EllipticError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("theta series did not reach tolerance {tol:e} within {terms} terms")]
    SeriesNotConverged { tol: f64, terms: usize },
    #[error("({0}, {1}) is not a lattice vector")]
    NotLatticeVector(f64, f64),
    #[error("Legendre relation residual {0:e} exceeds tolerance")]
    LegendreResidual(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InvolutionError {
    #[error("multiplier {0} is outside the classified set for this lattice")]
    UnsupportedA(num_complex::Complex64),
    #[error("canonical lattice with tau = {0} is not rectangular")]
    NonRectangularLattice(num_complex::Complex64),
    #[error("involution has fixpoints (witness {0})")]
    HasFixpoints(num_complex::Complex64),
    #[error("not a valid antiholomorphic involution: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DivisorError {
    #[error(transparent)]
    Elliptic(#[from] EllipticError),
    #[error("pole and zero counts differ ({poles} poles, {zeros} zeros)")]
    DegreeMismatch { poles: u32, zeros: u32 },
    #[error("Abel sum {0} is not a lattice vector")]
    AbelViolation(num_complex::Complex64),
    #[error("sum of pole heights {sum} is not an odd multiple of r/2 (r = {r})")]
    ParityViolation { sum: f64, r: f64 },
    #[error("pole {0} lies outside the fundamental domain")]
    PoleOutsideDomain(num_complex::Complex64),
    #[error("poles {0} and {1} are closer than the minimum separation")]
    PolesTooClose(num_complex::Complex64, num_complex::Complex64),
    #[error("the symmetric construction needs a rectangular lattice")]
    NotRectangular,
    #[error("no admissible zero placement: {0}")]
    DegenerateChoice(String),
    #[error("argument-principle contour hit a singularity after {0} shifts")]
    ContourThroughSingularity(usize),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("degenerate metric at z = {0}")]
    DegenerateMetric(num_complex::Complex64),
    #[error("frame construction broke down at z = {0}")]
    NumericalBreakdown(num_complex::Complex64),
    #[error("umbilic point: trace-free second fundamental form vanishes")]
    UmbilicPoint,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InvariantError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("quadrature changed by {change:e} on doubling (allowed {allowed:e})")]
    QuadratureNotConverged { change: f64, allowed: f64 },
    #[error("Euler normal number {0} is not near an integer")]
    NotNearInteger(f64),
    #[error("inversion center is {0} from the surface")]
    CenterTooClose(f64),
    #[error("grid must be at least 16 x 16")]
    GridTooSmall,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GluingError {
    #[error("forms live in different codimensions ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("trace-free form is zero")]
    ZeroForm,
    #[error("matrix is not orthogonal (deviation {0:e})")]
    NotOrthogonal(f64),
}

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("mesh resolution must be at least 2 x 2")]
    ResolutionTooSmall,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("malformed mesh file: {0}")]
    Parse(String),
}
