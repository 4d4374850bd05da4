//! Variance-ratio tests of integer integration orders.
//!
//! `V_k` projects the `k`-times differenced panel on the dominant direction
//! ĥ of the level panel's partial-sum operator and compares the partial-sum
//! energy with the Bartlett long-run variance:
//!
//! `V_k = n⁻² <K(Y_k) ĥ, ĥ> / <Λ(Y_k) ĥ, ĥ>`.
//!
//! Under `d = k` it converges to `∫W²`; the order-zero demeaned statistic
//! converges to the Brownian-bridge functional instead.

mod limit;
mod sequential;
mod statistic;

pub use limit::*;
pub use sequential::*;
pub use statistic::*;
