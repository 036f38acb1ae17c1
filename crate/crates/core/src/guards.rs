//! Size limits for exhaustive computations, overridable from the environment.

use crate::error::{Error, Result};

pub const TUPLE_GUARD_VAR: &str = "WARING_BOX_TUPLE_GUARD";
pub const CONV_GUARD_VAR: &str = "WARING_BOX_CONV_GUARD";
pub const SAMPLE_GUARD_VAR: &str = "WARING_BOX_SAMPLE_GUARD";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Guards {
    /// Tuples an exhaustive enumeration may visit.
    pub tuples: u128,
    /// Length of a coefficient array.
    pub conv_len: u128,
    /// Equispaced sample points for circle quadrature.
    pub samples: u128,
}

impl Default for Guards {
    fn default() -> Self {
        Guards {
            tuples: 100_000_000,
            conv_len: 10_000_000,
            samples: 20_000_000,
        }
    }
}

fn read_var(name: &str, default: u128) -> Result<u128> {
    match std::env::var(name) {
        Ok(v) => v
            .trim()
            .replace('_', "")
            .parse::<u128>()
            .map_err(|_| Error::invalid(format!("{name}={v:?} is not a nonnegative integer"))),
        Err(_) => Ok(default),
    }
}

impl Guards {
    /// Defaults, overridden by any of the guard environment variables.
    pub fn current() -> Result<Self> {
        let d = Guards::default();
        Ok(Guards {
            tuples: read_var(TUPLE_GUARD_VAR, d.tuples)?,
            conv_len: read_var(CONV_GUARD_VAR, d.conv_len)?,
            samples: read_var(SAMPLE_GUARD_VAR, d.samples)?,
        })
    }

    pub(crate) fn check(what: &'static str, needed: u128, limit: u128) -> Result<()> {
        if needed > limit {
            Err(Error::Guard { what, needed, limit })
        } else {
            Ok(())
        }
    }
}
