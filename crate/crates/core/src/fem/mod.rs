//! Element-level kernels: shape functions, kinematics, strain-energy splits,
//! history update and element residuals/tangents.

mod element;
mod kinematics;
mod material;
mod shape;
mod split;

pub use element::{
    element_residual_and_tangent, ElementContribution, ElementInput, ElementOutputs, HistoryMode,
    Inertia, IpResults, MAX_IP, MAX_NODES,
};
pub use kinematics::{kinematics, Kinematics};
pub use material::MaterialParams;
pub use shape::{gauss_points, shape_eval, ElementOrder, GaussPoint, Shape};
pub use split::{split_energy, update_history, EnergySplit, SplitResult};

/// Voigt strain or stress `{xx, yy, xy}`; shear strain is engineering (`gamma_xy`).
pub type Voigt = [f64; 3];
