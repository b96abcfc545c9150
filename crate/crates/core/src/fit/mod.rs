mod glm;
mod local;
mod quadrature;
mod separable;
mod stppm;

pub use glm::{aliased_columns, fit_glm, Family, GlmFit, GlmOptions};
pub use local::{locstppm, silverman_bandwidths, LocalOptions, LocalPoissonFit};
pub use quadrature::{
    default_dims, make_marginal_quadrature, make_marked_quadrature, make_quadrature, Quadrature, QuadratureMeta,
    Support,
};
pub use separable::{predict_separable, sep_fit, SeparableFit, SeparableOptions};
pub use stppm::{predict_intensity, stppm, Convergence, FittedPoissonModel, MarkedInfo, Method, StppmOptions};
