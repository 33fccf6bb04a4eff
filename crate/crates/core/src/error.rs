use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error(
        "line {line}: malformed instruction line ({malformed} of {instruction_lines} instruction lines malformed)"
    )]
    Parse {
        line: usize,
        malformed: usize,
        instruction_lines: usize,
    },
    #[error("requested {requested} opcodes but the corpus only has {distinct} distinct mnemonics")]
    Vocabulary { requested: usize, distinct: usize },
    #[error("sample {sample_id}: no opcodes left after vocabulary filtering")]
    EmptyAfterFilter { sample_id: String },
    #[error("symbol {symbol} out of range for alphabet of size {alphabet}")]
    SymbolOutOfRange { symbol: usize, alphabet: usize },
    #[error("sequence too short: {len} (need at least {min})")]
    SequenceTooShort { len: usize, min: usize },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("numeric failure at iteration {iteration}: {what}")]
    Numeric { iteration: usize, what: String },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unsupported model shape: {0}")]
    UnsupportedShape(String),
    #[error("training data has a single class")]
    SingleClass,
    #[error("no one-vs-rest machine for class {0}")]
    MissingMachine(usize),
    #[error("family {family} has {count} samples, fewer than the {partitions} partitions requested")]
    FamilyTooSmall {
        family: usize,
        count: usize,
        partitions: usize,
    },
}
