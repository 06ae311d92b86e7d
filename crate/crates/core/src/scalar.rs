use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use serde::{de::DeserializeOwned, Serialize};

use crate::flow::FlowValue;

/// Floating point type the lab computes in.
///
/// Implemented for `f32` and `f64`. Everything that evaluates a loss
/// needs `exp`/`ln`, so the analytic side of the crate is bound to
/// [`Float`]; exact rational arithmetic is only used by the flow solver
/// (see [`crate::flow::FlowValue`]).
pub trait Scalar:
    'static
    + Send
    + Sync
    + Float
    + FloatConst
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + Default
    + Debug
    + Display
    + LowerExp
    + Serialize
    + DeserializeOwned
    + FlowValue
{
    /// Converts an `f64` literal, rounding for narrower types.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal is representable")
    }

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count is representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }
}

impl Scalar for f32 {}

impl Scalar for f64 {}
