//! Iterated random function systems driven by stationary ergodic noise.
//!
//! This crate simulates recursions `X_{n+1} = F(X_n, Z_{n+1})`, constructs
//! their stationary solutions by negative iteration, estimates Lyapunov
//! exponents and contraction factors, and turns stability claims into
//! statistical verdicts. The pieces:
//!
//! * [`noise`] — reproducible two-sided driving sequences: every value is a
//!   pure function of `(seed, stream, index)`, so negative time is as
//!   addressable as positive time;
//! * [`engine`] — forward, backward and negative iteration, the `V*`
//!   ladder, coupling distances and coalescence times;
//! * [`lyapunov`] — composite Lipschitz norms, Lyapunov exponents, and the
//!   contraction/drift/long-run criteria with 3-sigma verdicts;
//! * [`models`] — the zoo: affine recursions, constant-gain stochastic
//!   gradient, the waiting-time recursion, Langevin iterations, and
//!   multi-type branching with immigration;
//! * [`diagnostics`] — law-of-large-numbers and stationarity checks,
//!   forward/backward comparison, moment bounds, and the mean-divergence
//!   demonstration.
//!
//! The companion guide under `book/` walks through the concepts; its code
//! snippets compile and run as doc-tests of this crate.
//!
//! ```
//! use irfs::engine::{self, VstarOptions};
//! use irfs::models::{make_affine, AffineInterp, AffineParams};
//! use irfs::noise::{DrivingProcess, MatrixLaw, ScalarLaw};
//!
//! // X_{n+1} = 0.5·X_n + 1: the ladder settles on the fixed point 2.
//! let model = make_affine(&AffineParams { dim: 1, interp: AffineInterp::Pair })?;
//! let process = DrivingProcess::iid_matrix_pair(
//!     7,
//!     MatrixLaw::Scalar(ScalarLaw::Constant { value: 0.5 }),
//!     vec![ScalarLaw::Constant { value: 1.0 }],
//! )?;
//! let ladder = engine::estimate_vstar(&model, &process, &VstarOptions::default(), 0)?;
//! let v_star = ladder.v_star.unwrap();
//! assert!((v_star[0] - 2.0).abs() < 1e-8);
//! # Ok::<(), irfs::Error>(())
//! ```

pub mod diagnostics;
pub mod engine;
mod error;
pub mod linalg;
pub mod lyapunov;
pub mod models;
pub mod noise;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};

/// The book's code snippets run as doc-tests so the guide can never drift
/// from the library.
#[cfg(doctest)]
mod book {
    macro_rules! chapter {
        ($name:ident, $path:literal) => {
            #[doc = include_str!($path)]
            mod $name {}
        };
    }

    chapter!(introduction, "../../../book/src/introduction.md");
    chapter!(noise, "../../../book/src/noise.md");
    chapter!(iteration, "../../../book/src/iteration.md");
    chapter!(stability, "../../../book/src/stability.md");
    chapter!(models, "../../../book/src/models.md");
    chapter!(diagnostics, "../../../book/src/diagnostics.md");
    chapter!(experiments, "../../../book/src/experiments.md");
}
