use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HpError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("argument outside the domain of {function}: {argument}")]
    Domain {
        function: &'static str,
        argument: String,
    },
    #[error("precision of {0} digits is below the minimum of 16")]
    PrecisionTooLow(u32),
    #[error("cannot parse {0:?} as a real number")]
    Parse(String),
    #[error("non-finite input {0}")]
    NonFinite(f64),
    #[error("result magnitude overflows the exponent range")]
    Overflow,
}
