use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("order {order} outside table range 0..={max_order}")]
    Range { order: i64, max_order: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("quadrature did not reach tolerance: best estimate {best}, achieved {achieved:e}")]
    Quadrature { best: f64, achieved: f64 },

    #[error("statistics error: {0}")]
    Statistics(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn range(order: i64, max_order: usize) -> Self {
        Error::Range { order, max_order }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn statistics(msg: impl Into<String>) -> Self {
        Error::Statistics(msg.into())
    }
}
