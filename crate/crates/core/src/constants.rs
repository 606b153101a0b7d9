//! Tolerances and frozen regression bounds.
//!
//! The regression bounds stand in for unspecified absolute constants. Each
//! was set from a calibration sweep over the test families (see the
//! `calibration` test in `tests/`), rounded up with some headroom.

/// Monte Carlo band width, in standard errors.
pub const MC_BAND: f64 = 3.0;

/// Relative rounding slack applied to every certificate.
pub const EXACT_SLACK: f64 = 1e-9;

/// `(vol conv(K,-K) / vol(K ∩ -K))^{1/n}` at the Santaló point.
pub const LEMMA1_RATIO_MAX: f64 = 4.0;

/// Empirical `C` in `ℓ(D∩E) <= C·R(D)·A·ℓ(B)·(A·ℓ(B)ℓ(B°)/m)^{a/(1-a)}`.
pub const LEMMA2_C: f64 = 2.0;

/// Empirical `C` in `ℓ(Q_x∩F) <= C·A·log d_Q·ℓ(B)` (with `log d_Q` floored at 1).
pub const LEMMA3_C: f64 = 4.0;

/// Volume hypothesis of the iteration: measured section ratio over the assumed `A`.
pub const VOLUME_HYPOTHESIS_SLACK: f64 = 3.0;

/// `R̂(cube)` for `n <= 8`.
pub const MMSTAR_CUBE_MAX: f64 = 2.5;

/// M-ellipsoid candidate ratios.
pub const M_ELLIPSOID_CUBE_MAX: f64 = 3.0;
pub const M_ELLIPSOID_SIMPLEX_MAX: f64 = 4.0;

/// `(vol((K-K)∩F) / max_x vol(K∩(F+x)))^{1/m}` over `φ(m,n) = min(n/m, √m)`.
pub const THEOREM3_C: f64 = 2.5;

/// Empirical constant in `ℓ((SK)°) <= C·n·√(log n)` for `S` the John map.
pub const THEOREM7_C: f64 = 1.5;

/// Gluskin inradius constant: `K ⊇ (c/√n) B` with `m = 4n` points.
pub const GLUSKIN_C: f64 = 0.2;

/// Fraction of seeded trials that must satisfy the Gluskin inradius bound.
pub const GLUSKIN_PASS_RATE: f64 = 0.95;
