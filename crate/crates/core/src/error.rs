use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("alphabet size must be in 2..=255, got {0}")]
    InvalidAlphabet(u32),
    #[error("letter {letter} out of range 1..={size}")]
    LetterOutOfRange { letter: u32, size: u8 },
    #[error("invalid word {0:?}")]
    InvalidWord(String),
    #[error("word of level {level} exceeds precision {precision}")]
    PrecisionExceeded { level: usize, precision: usize },
    #[error("point has {level} letters but the precision is {precision}")]
    NotAPoint { level: usize, precision: usize },
    #[error("word of level {level} exceeds truncation depth {depth}")]
    DepthExceeded { level: usize, depth: usize },
    #[error("precision {precision} is below truncation depth {depth}")]
    PrecisionBelowDepth { precision: usize, depth: usize },
    #[error("|S|^{depth} with |S| = {size} overflows the cell index range")]
    DepthTooLarge { size: u8, depth: usize },
    #[error("interval ({lo}, {hi}] is not inside the window ({win_lo}, {win_hi}]")]
    OutsideWindow { lo: f64, hi: f64, win_lo: f64, win_hi: f64 },
    #[error("invalid time interval ({0}, {1}]")]
    InvalidInterval(f64, f64),
    #[error("invalid rate family: {0}")]
    InvalidRates(String),
    #[error("rate table has no declared tail behaviour; phase-relevant limits cannot be inferred from finitely many values")]
    MissingTail,
    #[error("inconsistent tail declaration: {0}")]
    InconsistentTail(String),
    #[error("all rates are zero; the model is trivial and has no phase")]
    TrivialModel,
    #[error("critical time requires a Cesàro limit in (0, ∞), got {0}")]
    NotCritical(String),
    #[error("dimension formula requires the Cantor-set geometry")]
    GeometryNotCompatible,
    #[error("no surviving replicates")]
    NoSurvivors,
    #[error("atoms collide at precision {precision}; increase the precision")]
    AtomCollision { precision: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
