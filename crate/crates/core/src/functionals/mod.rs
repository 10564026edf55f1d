//! One-body energy functionals and quotients on a [`Grid2D`](crate::field::Grid2D).

mod energy;
mod params;
mod quotients;

pub use energy::{
    apply_one_body, hartree_energy, hartree_energy_raw, hartree_gradient, interaction_potential,
    nls_energy, nls_energy_raw, nls_gradient, pair_integral, sample_scaled, scaled_potential,
    EnergyReport,
};
pub use params::{InteractionProfile, ModelParams, Potential};
pub(crate) use quotients::gn_value_and_gradient;
pub use quotients::{
    gn_quotient, interaction_error, interaction_error_raw, stability_quotient, stability_ratio,
    StabilityOutcome, StabilitySearch,
};
