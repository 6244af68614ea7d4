//! Numerical analysis of a four-compartment host-parasitoid interaction model.
//!
//! The state is the vector of population densities `(P, M, L, G)`: host pupae
//! and adults, parasitoid larvae and adults. Hosts grow logistically, adults
//! emerge from the juvenile stage at a fixed rate, and the two species are
//! coupled through a mass-action encounter term `k1 P G` / `k2 P G`.
//!
//! The crate provides, on top of the model itself ([`model`]):
//!
//! * small dense real/complex 4x4 linear algebra, characteristic polynomials
//!   and an eigenvalue solver ([`linalg`]),
//! * Routh-Hurwitz classification of all four equilibria ([`stability`]),
//! * the first Lyapunov coefficient at the coexistence equilibrium via the
//!   center-manifold projection method, together with transversality
//!   diagnostics ([`hopf`]),
//! * tracing of the Hopf variety in the `(k1, k2)` interaction plane and the
//!   tangency of that curve family with the diagonal `k1 = k2` as the
//!   parasitoid carrying capacity varies ([`continuation`]),
//! * adaptive time integration, Poincare-section shooting for the bifurcating
//!   periodic orbit, and Floquet multipliers ([`dynamics`]).
//!
//! All operations are pure functions of their inputs and safe to call
//! concurrently on shared parameter records.
//!
//! ```
//! use biocontrol::{ModelParams, ToleranceSettings};
//! use biocontrol::continuation::solve_sigma_k2;
//! use biocontrol::hopf::lyapunov_l1;
//!
//! // solve the Hopf variety on one k1 slice of the reference parameter set
//! let base = ModelParams::reference(1e-3, 1e-3);
//! let pt = solve_sigma_k2(&base, 0.0033088, 100.0).unwrap().expect("crossing");
//! assert!((pt.k2 - 0.0009855).abs() < 1e-6);
//!
//! // the first Lyapunov coefficient there is positive: subcritical, the
//! // bifurcating periodic orbits are unstable
//! let at_hopf = base.with_interactions(pt.k1, pt.k2);
//! let report = lyapunov_l1(&at_hopf, None, &ToleranceSettings::default()).unwrap();
//! assert!(report.l1 > 0.0);
//! ```

pub mod continuation;
pub mod dynamics;
mod error;
pub mod hopf;
pub mod linalg;
pub mod model;
pub mod stability;

pub use error::{Error, Result};
pub use model::{ModelParams, State, ToleranceSettings};
