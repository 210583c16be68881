//! Low-dispersion point-set constructions, certified empty-box search, and
//! exact brute-force dispersion oracles at desk scale.

pub mod derand;
pub mod error;
pub mod finder;
pub mod geometry;
pub mod io;
pub mod oracle;
pub mod radix;
pub mod scalar;
pub mod toroidal;

pub use derand::{
    derandomized_stage1, enumerate_l_prime, enumerate_representatives, params_key, scaled_bounds,
    select_x_prime, PreprocessCache, Representative, ScaledBounds, SelectionStrategy,
};
pub use error::{Error, Result};
pub use finder::{
    delta, find_empty_box, find_translate, shave, theorem1_bound, theorem3_bound, weight_at,
    Certificate, CertifiedBox, FinderParams, WeightMode, WeightSpec,
};
pub use geometry::{
    box_contains_point, box_is_empty, box_volume, AxisBox, Interval, Openness, PointSet, Space,
    ToroidalBox, ToroidalInterval,
};
pub use io::{read_pointset, write_pointset, CoordFormat};
pub use oracle::{
    dispersion_exceeds_exact, exhaustive_volume, largest_empty_box_exact, largest_empty_box_f64,
    largest_empty_toroidal_box_exact, largest_empty_toroidal_box_f64, trivial_slab,
    DispersionResult, OracleOptions, Witness,
};
pub use radix::{
    box_type, canonical_preimage, contains_good_box, digit_reverse, first_unmet_good_box,
    is_p_bad, meets_all_good_boxes, primes_from, radix_point, residue_set, reverse_digits_fixed,
    stage1, stage2, well_shrunk_subinterval, BoxType, CanonicalAxis, CanonicalBox,
    ConstructionParams, GoodBoxSearch, GoodPair, PInterval, Preset, PrimeValidity, Stage1Output,
};
pub use scalar::{f64_coord, parse_rational, rational_from_f64, Coord, Rational, F64};
pub use toroidal::{best_shift, f_ab, largest_usual_box_in_shifted, toroidal_construction};
