use thiserror::Error;

/// Errors raised by the numerical laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty interval list")]
    EmptySet,

    #[error("degenerate interval [{lo}, {hi}]: need lo < hi and finite endpoints")]
    DegenerateInterval { lo: f64, hi: f64 },

    #[error("intervals {first} and {second} overlap or touch: [{}, {}] vs [{}, {}]", .a.0, .a.1, .b.0, .b.1)]
    Overlap {
        first: usize,
        second: usize,
        a: (f64, f64),
        b: (f64, f64),
    },

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("point {0} lies on the set; a pole must sit off the set")]
    PoleOnSet(f64),

    #[error("evaluation point coincides with the pole at {0}")]
    AtPole(f64),

    #[error("equilibrium solve did not converge: {0}")]
    EquilibriumNonConvergence(String),

    #[error("Remez exchange did not converge for n = {n} after {iterations} iterations (relative level gap {gap:.3e}); last reference {reference:?}")]
    RemezNonConvergence {
        n: usize,
        iterations: usize,
        gap: f64,
        reference: Vec<f64>,
    },

    #[error("degree {n} exceeds the configured cap {cap}")]
    DegreeCap { n: usize, cap: usize },

    #[error("root isolation failed: {0}")]
    RootIsolation(String),

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("character match did not converge: best residual {residual:.3e}")]
    CharacterMatch { residual: f64 },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("artifact error: {0}")]
    Artifact(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
