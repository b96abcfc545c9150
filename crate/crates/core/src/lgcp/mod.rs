mod contrast;
mod covariance;
mod fit;
mod optim;
mod sim;

pub use contrast::{min_contrast, ContrastFit, ContrastOptions};
pub use covariance::{cov_eval, CovFamily, CovParams, CovarianceModel};
pub use fit::{six_number_summary, stlgcppm, FirstOrderFit, LgcpFit, LgcpOptions, Order, SecondOrderFit};
pub use optim::{Minimum, NelderMead};
pub use sim::{sim_lgcp, LgcpRealization, MAX_LGCP_CELLS};
