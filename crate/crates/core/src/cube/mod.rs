//! Functions on the discrete cube `{-1, 1}^n`.

pub mod families;
pub mod fourier;
pub mod function;
pub mod mi;
pub mod perfect_code;
pub mod symmetric;

pub use families::{make_family, FamilyKind};
pub use fourier::{
    degree_weight, fwht, fwht_inverse, noise_operator, smooth_table, variance_trho,
    walsh_hadamard_in_place, FourierSpectrum,
};
pub use function::{
    coordinate, coordinate_mask, BooleanFunction, MultiOutputFunction, ValueConvention, MAX_DIM,
};
pub use mi::{
    and_mi_exact, and_mi_quoted, c2_coefficient, mutual_information_direct,
    mutual_information_multi, mutual_information_phi, taylor_check, TaylorCheck,
    MAX_ENUMERATION_DIM,
};
pub use perfect_code::{hamming15_decoder, perfect_code_mi, perfect_code_mi_naive, PerfectCodeMi};
pub use symmetric::{
    hamming_ball_w1_exact, profile_to_function, symmetric_mi, symmetric_w1, SymmetricProfile,
    MAX_SYMMETRIC_DIM,
};
